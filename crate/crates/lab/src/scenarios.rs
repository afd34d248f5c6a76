//! Binds scenario configs to the solver and metric layers and writes the
//! run and scan artifacts.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use iss_lab_core::boundary::{dirichlet_control, neumann_control, ControlOperator};
use iss_lab_core::gain::{sharpness_scan, GainScanResult, GainScenario, DEFAULT_BUDGET};
use iss_lab_core::metrics::{
    check_certificate, check_lipschitz_bound, exponent_serde, fit_certificate, l2_gain_bound, linf_gain_bound,
    lyapunov_certificate, CertificateReport, IssCertificate, LipschitzBound,
};
use iss_lab_core::solver::{
    integral_identity_residual, solve_linear, solve_semilinear, verify_structure, Nonlinearity, StructureReport,
    Trajectory,
};
use iss_lab_core::{classify_regularity, lq_norm, InputSignal, LabError, LabRng, SpectralOperator, StateVector};
use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::config::{InitialSpec, InputSpec, ScenarioConfig, ScenarioKind};
use crate::error::CliError;
use crate::manifest::Artifacts;

/// Rows kept in `trajectory.csv`, `field.csv` and `norms.csv`.
pub const MAX_ROWS: usize = 2001;
/// Relative tolerance for a priori certificates, in units of `‖x₀‖ + ‖u‖`.
pub const CERTIFICATE_TOL: f64 = 1e-6;
/// Rate margin of the Lyapunov certificate for the cubic scenario.
pub const LYAPUNOV_DELTA: f64 = 0.05;

const INPUT_STREAM: u64 = 1;
const STATE_STREAM: u64 = 2;

/// Operator, control and nonlinearity of one scenario.
pub struct Model {
    pub op: SpectralOperator,
    pub b: ControlOperator,
    pub f: Option<Nonlinearity>,
}

pub fn model(cfg: &ScenarioConfig) -> Result<Model, CliError> {
    let n = cfg.modes();
    let grid = cfg.m.unwrap_or_else(|| (4 * n).max(n + 2));
    let neumann = || -> Result<(SpectralOperator, ControlOperator), LabError> {
        let op = SpectralOperator::neumann_laplacian_1d(cfg.a, n)?;
        let b = neumann_control(&op)?;
        Ok((op, b))
    };
    let (op, b, f) = match cfg.scenario {
        ScenarioKind::NeumannHeat => {
            let (op, b) = neumann()?;
            (op, b, None)
        }
        ScenarioKind::DirichletHeat | ScenarioKind::DirichletWeakState => {
            let op = SpectralOperator::dirichlet_laplacian_1d(n)?;
            let b = dirichlet_control(&op)?;
            (op, b, None)
        }
        ScenarioKind::Pathological => {
            let (op, b) = GainScenario::Pathological.system(n)?;
            (op, b, None)
        }
        ScenarioKind::SemilinearCubic => {
            let (op, b) = neumann()?;
            (op, b, Some(Nonlinearity::cubic().with_grid_points(grid)))
        }
        ScenarioKind::SemilinearLipschitz => {
            let (op, b) = neumann()?;
            let l = cfg.lipschitz.expect("validated");
            (op, b, Some(Nonlinearity::lipschitz_sine(l).with_grid_points(grid)))
        }
        ScenarioKind::ScalarCounterexample => {
            let op = SpectralOperator::new(vec![-1.0])?;
            let b = ControlOperator::custom(vec![1.0])?;
            (op, b, Some(Nonlinearity::linear(2.0)))
        }
    };
    Ok(Model { op, b, f })
}

pub fn build_input(cfg: &ScenarioConfig) -> Result<InputSignal, CliError> {
    let u = match &cfg.input {
        InputSpec::Zero => InputSignal::zero(),
        InputSpec::Constant { c } => InputSignal::constant(*c, cfg.horizon)?,
        InputSpec::RandomPiecewise { k, amplitude } => {
            let mut rng = LabRng::derive(cfg.seed, INPUT_STREAM);
            InputSignal::random_piecewise(*k, *amplitude, cfg.horizon, &mut rng)?
        }
        InputSpec::File { path } => {
            let file = File::open(path)
                .map_err(|e| CliError::Config(format!("{}: cannot open input: {e}", path.display())))?;
            InputSignal::read_csv(BufReader::new(file))
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        }
    };
    Ok(u)
}

pub fn build_initial(cfg: &ScenarioConfig) -> StateVector {
    let n = cfg.modes();
    match &cfg.x0 {
        InitialSpec::Zero => StateVector::zeros(n),
        InitialSpec::Mode { index, amplitude } => StateVector::unit(n, *index, *amplitude),
        InitialSpec::Coefficients { values } => StateVector::new(values.clone()),
        InitialSpec::Random { amplitude } => {
            let mut rng = LabRng::derive(cfg.seed, STATE_STREAM);
            StateVector::new((0..n).map(|k| rng.uniform(-amplitude, *amplitude) / (1 + k) as f64).collect())
        }
    }
}

/// `‖x(t)‖_{X_{-1/2}}` along a Dirichlet trajectory, i.e. the `H^{-1}` norm.
pub fn dirichlet_weak_state_norms(op: &SpectralOperator, traj: &Trajectory) -> Result<Vec<f64>, LabError> {
    traj.states.iter().map(|x| op.space_norm(-0.5, x)).collect()
}

/// Trajectory with every state mapped to `(-A)^{-1/2} x`.
pub fn weak_state_trajectory(op: &SpectralOperator, traj: &Trajectory) -> Result<Trajectory, LabError> {
    let states = traj.states.iter().map(|x| op.fractional_apply(-0.5, x)).collect::<Result<_, _>>()?;
    Ok(Trajectory { times: traj.times.clone(), states, meta: traj.meta.clone() })
}

/// A priori `L²` certificate in the weak norm: `C₁ = 1`, `ω = -ω_A` and
/// `C₂ = (Σ b_n² (-λ_n)^{-1} / (2|λ_n|))^{1/2}`.
pub fn weak_state_certificate(op: &SpectralOperator, b: &ControlOperator) -> Result<IssCertificate, LabError> {
    let weak = b.reweighted(op, -0.5)?;
    IssCertificate::new(1.0, -op.growth_bound(), l2_gain_bound(op, &weak)?, 2.0, "dirichlet-weak-state")
}

/// Every `stride`-th sample plus the last, at most [`MAX_ROWS`] rows.
pub fn thinned(traj: &Trajectory) -> Trajectory {
    let len = traj.times.len();
    let stride = (len - 1).div_ceil(MAX_ROWS - 1).max(1);
    let mut idx: Vec<usize> = (0..len).step_by(stride).collect();
    if *idx.last().unwrap() != len - 1 {
        idx.push(len - 1);
    }
    Trajectory {
        times: idx.iter().map(|&i| traj.times[i]).collect(),
        states: idx.iter().map(|&i| traj.states[i].clone()).collect(),
        meta: traj.meta.clone(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum CertificateMethod {
    /// `C₁ = 1`, `ω = -ω_A`, smallest `C₂` passing this run.
    Fitted,
    /// Energy estimate for a dissipative nonlinearity.
    Lyapunov {
        epsilon: f64,
        #[serde(rename = "traceNorm")]
        trace_norm: f64,
    },
    /// Gronwall bound for a globally Lipschitz nonlinearity.
    Lipschitz { bound: LipschitzBound },
    /// A priori `L²` bound in the `X_{-1/2}` norm.
    WeakState,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CertificateArtifact {
    #[serde(flatten)]
    pub method: CertificateMethod,
    /// `X` or `X_{-1/2}`.
    pub norm: String,
    pub certificate: IssCertificate,
    pub report: CertificateReport,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Diagnostics {
    pub scenario: String,
    pub steps: usize,
    pub growth_bound: f64,
    pub final_norm: Option<f64>,
    /// `X_{-1}` residual of the integral identity; linear runs only.
    pub integral_residual: Option<f64>,
    pub blow_up: Option<BlowUp>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlowUp {
    pub time: f64,
    pub norm: f64,
    pub limit: f64,
}

#[derive(Clone, Debug)]
pub struct RunSummary {
    pub out: PathBuf,
    pub final_norm: f64,
    pub certificate: Option<CertificateArtifact>,
    pub files: Vec<String>,
}

fn to_json<T: Serialize>(v: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("artifact serializes");
    s.push('\n');
    s.into_bytes()
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Vec<u8> {
    let mut buf = Vec::new();
    f(&mut buf).expect("writing to memory");
    buf
}

fn write_norms(
    art: &mut Artifacts,
    traj: &Trajectory,
    u: &InputSignal,
    q: f64,
    weak: Option<&[f64]>,
) -> Result<(), CliError> {
    let mut s = String::from("t,x_norm");
    if weak.is_some() {
        s.push_str(",weak_norm");
    }
    s.push_str(",input_norm\n");
    for (i, (t, x)) in traj.times.iter().zip(&traj.states).enumerate() {
        s.push_str(&format!("{t:.16e},{:.16e}", x.norm()));
        if let Some(w) = weak {
            s.push_str(&format!(",{:.16e}", w[i]));
        }
        s.push_str(&format!(",{:.16e}\n", lq_norm(u, q, *t)?));
    }
    art.write("norms.csv", s.as_bytes())
}

/// Runs one scenario and writes its artifacts into `out`.
pub fn run(cfg: &ScenarioConfig, out: &Path) -> Result<RunSummary, CliError> {
    let mut art = Artifacts::create(out)?;
    let Model { op, b, f } = model(cfg)?;
    let u = build_input(cfg)?;
    let x0 = build_initial(cfg);
    art.write("input.csv", &csv_bytes(|w| u.write_csv(w)))?;
    info!("{}: N = {}, T = {}, h = {}", cfg.scenario, op.len(), cfg.horizon, cfg.h);

    let mut diag = Diagnostics {
        scenario: cfg.scenario.name().into(),
        steps: 0,
        growth_bound: op.growth_bound(),
        final_norm: None,
        integral_residual: None,
        blow_up: None,
    };

    let mut structure: Option<StructureReport> = None;
    if cfg.scenario == ScenarioKind::ScalarCounterexample {
        let f = f.as_ref().expect("scalar scenario is semilinear");
        let samples: Vec<StateVector> =
            [x0.coefficients[0], 1.0, -1.0, 0.5].iter().map(|v| StateVector::new(vec![*v])).collect();
        let report = verify_structure(&op, f, &samples)?;
        if !report.passes() {
            warn!("structure hypotheses fail for the scalar system; no certificate is issued");
        }
        art.write("structure.json", &to_json(&report))?;
        structure = Some(report);
    }

    let solved = match &f {
        None => solve_linear(&op, &b, &x0, &u, cfg.horizon, cfg.h),
        Some(f) => solve_semilinear(&op, &b, f, &x0, &u, cfg.horizon, cfg.h),
    };
    let traj = match solved {
        Ok(t) => t,
        Err(LabError::BlowUp { time, norm, limit }) => {
            diag.blow_up = Some(BlowUp { time, norm, limit });
            art.write("diagnostics.json", &to_json(&diag))?;
            art.finish("run", cfg)?;
            return Err(CliError::Numerical(format!(
                "solution blow-up at t = {time:.6}: |x| = {norm:.3e} exceeds {limit:.3e}"
            )));
        }
        Err(e) => return Err(e.into()),
    };
    diag.steps = traj.times.len() - 1;
    diag.final_norm = Some(traj.final_state().norm());
    if f.is_none() {
        diag.integral_residual = Some(integral_identity_residual(&op, &b, &traj, &u)?);
    }

    let thin = thinned(&traj);
    art.write("trajectory.csv", &csv_bytes(|w| thin.write_csv(w, "n")))?;
    if let Some(m) = cfg.m {
        let grid = op.collocation(m)?;
        let field = Trajectory {
            times: thin.times.clone(),
            states: thin.states.iter().map(|x| StateVector::new(grid.synthesize(&x.coefficients).values)).collect(),
            meta: thin.meta.clone(),
        };
        art.write("field.csv", &csv_bytes(|w| field.write_csv(w, "xi")))?;
    }

    let dirichlet = matches!(cfg.scenario, ScenarioKind::DirichletHeat | ScenarioKind::DirichletWeakState);
    let weak_norms = if dirichlet { Some(dirichlet_weak_state_norms(&op, &thin)?) } else { None };

    let q = cfg.certificate_exponent();
    let certificate = match cfg.scenario {
        ScenarioKind::ScalarCounterexample => None,
        ScenarioKind::NeumannHeat | ScenarioKind::DirichletHeat | ScenarioKind::Pathological => {
            let cert = fit_certificate(&op, &[(traj.clone(), u.clone())], q, cfg.scenario.name())?;
            let report = check_certificate(&traj, &u, &cert)?;
            let holds = report.holds(CERTIFICATE_TOL);
            Some(CertificateArtifact {
                method: CertificateMethod::Fitted,
                norm: "X".into(),
                certificate: cert,
                report,
                holds,
            })
        }
        ScenarioKind::DirichletWeakState => {
            let cert = weak_state_certificate(&op, &b)?;
            let report = check_certificate(&weak_state_trajectory(&op, &traj)?, &u, &cert)?;
            let holds = report.holds(CERTIFICATE_TOL);
            Some(CertificateArtifact {
                method: CertificateMethod::WeakState,
                norm: "X_{-1/2}".into(),
                certificate: cert,
                report,
                holds,
            })
        }
        ScenarioKind::SemilinearCubic => {
            let lc = lyapunov_certificate(&op, &b, LYAPUNOV_DELTA, cfg.scenario.name())?;
            let report = check_certificate(&traj, &u, &lc.certificate)?;
            let holds = report.holds(CERTIFICATE_TOL);
            Some(CertificateArtifact {
                method: CertificateMethod::Lyapunov { epsilon: lc.epsilon, trace_norm: lc.trace_norm },
                norm: "X".into(),
                certificate: lc.certificate,
                report,
                holds,
            })
        }
        ScenarioKind::SemilinearLipschitz => {
            let l = cfg.lipschitz.expect("validated");
            let bound = LipschitzBound::new(1.0, op.growth_bound(), l, linf_gain_bound(&op, &b)?)?;
            let report = check_lipschitz_bound(&traj, &u, &bound)?;
            let holds = report.holds(CERTIFICATE_TOL);
            Some(CertificateArtifact {
                method: CertificateMethod::Lipschitz { bound: bound.clone() },
                norm: "X".into(),
                certificate: bound.as_certificate(cfg.scenario.name())?,
                report,
                holds,
            })
        }
    };
    let norm_q = certificate.as_ref().map_or(q, |c| c.certificate.q);
    write_norms(&mut art, &thin, &u, norm_q, weak_norms.as_deref())?;

    if let Some(f) = f.as_ref().filter(|_| structure.is_none()) {
        let step = (thin.states.len() / 50).max(1);
        let samples: Vec<StateVector> = thin.states.iter().step_by(step).cloned().collect();
        art.write("structure.json", &to_json(&verify_structure(&op, f, &samples)?))?;
    }
    if let Some(c) = &certificate {
        if !c.holds {
            warn!("certificate fails: max residual {:.3e} at t = {}", c.report.max_residual, c.report.worst_time);
        }
        art.write("certificate.json", &to_json(c))?;
    }
    art.write("diagnostics.json", &to_json(&diag))?;
    let files = art.finish("run", cfg)?;
    Ok(RunSummary { out: out.to_path_buf(), final_norm: traj.final_state().norm(), certificate, files })
}

pub fn gain_scenario(cfg: &ScenarioConfig) -> Result<GainScenario, CliError> {
    Ok(match cfg.scenario {
        ScenarioKind::NeumannHeat => GainScenario::NeumannHeat { a: cfg.a },
        ScenarioKind::DirichletHeat => GainScenario::DirichletHeat,
        ScenarioKind::DirichletWeakState => GainScenario::DirichletWeakState,
        ScenarioKind::Pathological => GainScenario::Pathological,
        other => return Err(CliError::Config(format!("scenario {other} has no gain scan"))),
    })
}

pub fn witness_name(q: f64, n: usize) -> String {
    format!("witnesses/q{}_N{n}.csv", exponent_serde::format(q))
}

/// Writes `scan.json`, `gains.csv`, `regularity.json` and one witness per
/// cell.
pub fn write_scan(
    art: &mut Artifacts,
    scan: &mut GainScanResult,
    regularity_of: Option<(GainScenario, usize)>,
) -> Result<(), CliError> {
    for cell in &mut scan.cells {
        let name = witness_name(cell.q, cell.n);
        if let Some(w) = &cell.witness {
            art.write(&name, &csv_bytes(|buf| w.write_csv(buf)))?;
            cell.witness_file = Some(name);
        }
    }
    let mut gains = String::from("q,N,gain,seed\n");
    for c in &scan.cells {
        gains.push_str(&format!("{},{},{:.16e},{}\n", exponent_serde::format(c.q), c.n, c.gain, c.seed));
    }
    art.write("gains.csv", gains.as_bytes())?;
    art.write("scan.json", &to_json(scan))?;
    if let Some((scenario, n)) = regularity_of {
        let (op, b) = scenario.system(n)?;
        let grid = iss_lab_core::boundary::default_alpha_grid();
        art.write("regularity.json", &to_json(&classify_regularity(&op, &b, &grid)?))?;
    }
    Ok(())
}

/// Runs the sharpness scan of a linear scenario and writes its artifacts.
pub fn scan(cfg: &ScenarioConfig, out: &Path) -> Result<GainScanResult, CliError> {
    let scenario = gain_scenario(cfg)?;
    let mut art = Artifacts::create(out)?;
    let budget = cfg.budget.unwrap_or(DEFAULT_BUDGET);
    info!("{}: scanning q = {:?} over N = {:?}", cfg.scenario, cfg.q_values(), cfg.ladder());
    let ladder = cfg.ladder();
    let mut result = sharpness_scan(scenario, &cfg.q_values(), &ladder, cfg.t0, budget, cfg.seed)?;
    let n_max = *ladder.iter().max().expect("validated");
    write_scan(&mut art, &mut result, Some((scenario, n_max)))?;
    art.finish("scan", cfg)?;
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str) -> ScenarioConfig {
        ScenarioConfig::parse(text, "test").unwrap()
    }

    #[test]
    fn neumann_zero_input_certificate() {
        let dir = tempfile::tempdir().unwrap();
        let c = cfg(r#"{"scenario": "neumann-heat", "N": 8, "T": 2, "h": 0.01,
                       "x0": {"kind": "mode", "index": 0, "amplitude": 1}}"#);
        let s = run(&c, dir.path()).unwrap();
        assert!((s.final_norm - (-2.0f64).exp()).abs() < 1e-12);
        let cert = s.certificate.unwrap();
        assert!(cert.holds);
        assert_eq!(cert.certificate.c1, 1.0);
        assert_eq!(cert.certificate.omega, 1.0);
        assert_eq!(cert.certificate.c2, 0.0);
        assert_eq!(cert.certificate.q, 2.0);
        for f in ["trajectory.csv", "input.csv", "norms.csv", "certificate.json", "diagnostics.json", "manifest.json"] {
            assert!(dir.path().join(f).is_file(), "{f}");
        }
    }

    #[test]
    fn scalar_counterexample_blows_up() {
        let dir = tempfile::tempdir().unwrap();
        let c = cfg(r#"{"scenario": "scalar-counterexample", "T": 30, "h": 0.001,
                       "input": {"kind": "constant", "c": 1}}"#);
        let err = run(&c, dir.path()).unwrap_err();
        assert_eq!(err.exit_code(), 3);
        assert!(!dir.path().join("certificate.json").exists());
        let diag: Diagnostics =
            serde_json::from_slice(&std::fs::read(dir.path().join("diagnostics.json")).unwrap()).unwrap();
        let t = diag.blow_up.unwrap().time;
        assert!((t - (1e8f64 + 1.0).ln()).abs() < 0.3, "{t}");
        let structure: StructureReport =
            serde_json::from_slice(&std::fs::read(dir.path().join("structure.json")).unwrap()).unwrap();
        assert!(!structure.passes());
    }

    #[test]
    fn weak_state_certificate_holds() {
        let dir = tempfile::tempdir().unwrap();
        let c = cfg(r#"{"scenario": "dirichlet-weak-state", "N": 32, "T": 1, "h": 0.001, "seed": 3,
                       "input": {"kind": "random-piecewise", "K": 10, "amplitude": 1},
                       "x0": {"kind": "random", "amplitude": 1}}"#);
        let s = run(&c, dir.path()).unwrap();
        let cert = s.certificate.unwrap();
        assert!(cert.holds, "{:?}", cert.report);
        assert!(cert.certificate.c2 < 0.5f64.sqrt());
        let norms = std::fs::read_to_string(dir.path().join("norms.csv")).unwrap();
        assert!(norms.starts_with("t,x_norm,weak_norm,input_norm\n"));
    }

    #[test]
    fn weak_norm_decays_at_the_first_eigenvalue() {
        let op = SpectralOperator::dirichlet_laplacian_1d(16).unwrap();
        let b = dirichlet_control(&op).unwrap();
        let x0 = StateVector::new((0..16).map(|k| 1.0 / (1 + k) as f64).collect());
        let traj = solve_linear(&op, &b, &x0, &InputSignal::zero(), 1.0, 0.01).unwrap();
        let w = dirichlet_weak_state_norms(&op, &traj).unwrap();
        let pi2 = std::f64::consts::PI.powi(2);
        for (t, v) in traj.times.iter().zip(&w) {
            assert!(*v <= (-pi2 * t).exp() * w[0] * (1.0 + 1e-12));
        }
        let late = w.last().unwrap() / w[w.len() - 2];
        assert!((late.ln() / -0.01 - pi2).abs() < 1e-3);
    }

    #[test]
    fn thinning_keeps_endpoints() {
        let op = SpectralOperator::new(vec![-1.0]).unwrap();
        let b = ControlOperator::custom(vec![1.0]).unwrap();
        let traj = solve_linear(&op, &b, &StateVector::new(vec![1.0]), &InputSignal::zero(), 1.0, 1e-4).unwrap();
        let t = thinned(&traj);
        assert!(t.times.len() <= MAX_ROWS);
        assert_eq!(t.times[0], 0.0);
        assert_eq!(*t.times.last().unwrap(), *traj.times.last().unwrap());
    }

    #[test]
    fn scan_writes_witnesses() {
        let dir = tempfile::tempdir().unwrap();
        let c = cfg(r#"{"scenario": "pathological", "N": 10, "qList": [2, "inf"], "NList": [6, 8], "budget": 30}"#);
        let r = scan(&c, dir.path()).unwrap();
        assert_eq!(r.cells.len(), 4);
        for cell in &r.cells {
            let f = cell.witness_file.as_ref().unwrap();
            assert!(dir.path().join(f).is_file());
        }
        let json: serde_json::Value =
            serde_json::from_slice(&std::fs::read(dir.path().join("scan.json")).unwrap()).unwrap();
        assert!(json["flags"]["inf"].is_boolean());
        assert!(json["cells"][0]["witnessFile"].is_string());
        assert!(dir.path().join("regularity.json").is_file());
    }

    #[test]
    fn scan_rejects_semilinear() {
        let c = cfg(r#"{"scenario": "semilinear-cubic"}"#);
        assert_eq!(scan(&c, Path::new("unused")).unwrap_err().exit_code(), 2);
    }
}
