//! Mild solutions of linear and semilinear boundary control systems.
//!
//! Linear runs are exact per mode for piecewise-constant inputs: over a step
//! of length `h` with constant input `u`,
//! `x_n ← e^{λ_n h} x_n + b_n φ₁(λ_n h) h u`. Semilinear runs use the same
//! update with the nonlinearity frozen at the left end of the step
//! (exponential Euler).

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::boundary::ControlOperator;
use crate::error::{invalid, LabError, Result};
use crate::signal::InputSignal;
use crate::spectral::{l2, Basis, Collocation, SpectralOperator, StateVector};

/// `φ₁(z) = (e^z - 1)/z` with `φ₁(0) = 1`.
pub fn phi1(z: f64) -> f64 {
    if z.abs() < 1e-4 {
        1.0 + z * (0.5 + z * (1.0 / 6.0 + z / 24.0))
    } else {
        z.exp_m1() / z
    }
}

/// Ratio of the blow-up sentinel to `‖x₀‖ + 1`.
pub const BLOW_UP_FACTOR: f64 = 1e8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverTag {
    ExactModal,
    ExponentialEuler,
    CrankNicolson,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub solver: SolverTag,
    pub step: f64,
    pub label: String,
}

/// Sampled states `x(t_j)`; coefficient vectors, or grid values for
/// finite-difference runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<StateVector>,
    pub meta: TrajectoryMeta,
}

impl Trajectory {
    pub fn final_state(&self) -> &StateVector {
        self.states.last().expect("trajectory has at least the initial state")
    }

    pub fn initial_state(&self) -> &StateVector {
        &self.states[0]
    }

    /// Index of the sample at time `t`, if present (within `1e-12` relative).
    pub fn index_of(&self, t: f64) -> Option<usize> {
        self.times.iter().position(|s| (s - t).abs() <= 1e-12 * t.abs().max(1.0))
    }

    /// CSV with header `t,n0,n1,...` (or `t,xi0,...` for grid runs), 17
    /// significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W, column_prefix: &str) -> std::io::Result<()> {
        let n = self.states.first().map_or(0, |s| s.len());
        write!(w, "t")?;
        for k in 0..n {
            write!(w, ",{column_prefix}{k}")?;
        }
        writeln!(w)?;
        for (t, x) in self.times.iter().zip(&self.states) {
            write!(w, "{t:.16e}")?;
            for c in &x.coefficients {
                write!(w, ",{c:.16e}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Step times from `0` to `horizon` of length `step`, split at every input
/// breakpoint that does not fall on the grid.
pub fn step_grid(horizon: f64, step: f64, inputs: &[&InputSignal]) -> Result<Vec<f64>> {
    if !(step > 0.0) || !step.is_finite() {
        return invalid(format!("step must be positive, got {step}"));
    }
    if !(horizon > 0.0) || !horizon.is_finite() {
        return invalid(format!("horizon must be positive, got {horizon}"));
    }
    let count = (horizon / step - 1e-9).ceil().max(1.0) as usize;
    let mut times: Vec<f64> = (0..count).map(|k| k as f64 * step).collect();
    times.push(horizon);
    let tol = 1e-9 * step;
    let mut extra = Vec::new();
    for u in inputs {
        for &b in u.breakpoints() {
            if b > 0.0 && b < horizon {
                let k = (b / step).round();
                if (k * step - b).abs() > tol {
                    extra.push(b);
                }
            }
        }
    }
    if !extra.is_empty() {
        log::warn!("{} input breakpoint(s) off the step grid (h = {step}); refining", extra.len());
        times.extend(extra);
        times.sort_by(f64::total_cmp);
        times.dedup_by(|a, b| (*a - *b).abs() <= tol);
    }
    Ok(times)
}

struct StepCache {
    length: f64,
    decay: Vec<f64>,
    forcing: Vec<f64>,
}

impl StepCache {
    fn new() -> Self {
        Self { length: f64::NAN, decay: Vec::new(), forcing: Vec::new() }
    }

    fn update(&mut self, op: &SpectralOperator, h: f64) {
        if h == self.length {
            return;
        }
        self.length = h;
        self.decay = op.eigenvalues().iter().map(|l| (l * h).exp()).collect();
        self.forcing = op.eigenvalues().iter().map(|l| phi1(l * h) * h).collect();
    }
}

/// Linear mild solution driven through several input channels; responses
/// superpose.
pub fn solve_linear_channels(
    op: &SpectralOperator,
    channels: &[(&ControlOperator, &InputSignal)],
    x0: &StateVector,
    horizon: f64,
    step: f64,
) -> Result<Trajectory> {
    let n = op.len();
    if x0.len() != n {
        return Err(LabError::DimensionMismatch { expected: n, got: x0.len() });
    }
    for (b, _) in channels {
        b.check_len(n)?;
    }
    let inputs: Vec<&InputSignal> = channels.iter().map(|(_, u)| *u).collect();
    let times = step_grid(horizon, step, &inputs)?;
    let mut cache = StepCache::new();
    let mut x = x0.coefficients.clone();
    let mut states = Vec::with_capacity(times.len());
    states.push(x0.clone());
    let mut drive = vec![0.0; n];
    for w in times.windows(2) {
        let h = w[1] - w[0];
        cache.update(op, h);
        drive.iter_mut().for_each(|d| *d = 0.0);
        for (b, u) in channels {
            let v = u.value_at(0.5 * (w[0] + w[1]));
            if v != 0.0 {
                for (d, bk) in drive.iter_mut().zip(b.coefficients()) {
                    *d += bk * v;
                }
            }
        }
        for k in 0..n {
            x[k] = cache.decay[k] * x[k] + cache.forcing[k] * drive[k];
        }
        states.push(StateVector { coefficients: x.clone(), space_index: x0.space_index });
    }
    Ok(Trajectory { times, states, meta: TrajectoryMeta { solver: SolverTag::ExactModal, step, label: String::new() } })
}

/// Mild solution of `x' = A x + B u`, exact per mode for piecewise-constant `u`.
pub fn solve_linear(
    op: &SpectralOperator,
    b: &ControlOperator,
    x0: &StateVector,
    u: &InputSignal,
    horizon: f64,
    step: f64,
) -> Result<Trajectory> {
    solve_linear_channels(op, &[(b, u)], x0, horizon, step)
}

/// Declared structure constants of a nonlinearity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StructureConstants {
    /// Global Lipschitz constant on `X`, if any.
    pub lipschitz: Option<f64>,
    /// `⟨f(x),x⟩ ≤ -m₁⟨Ax,x⟩ + m₂‖x‖²`.
    pub m1: f64,
    pub m2: f64,
    /// `‖f(x)‖ ≤ k (1 + ‖x‖_{1/2})`, if declared.
    pub growth: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum NonlinearityKind {
    None,
    /// `f(x) = -x³` pointwise.
    Cubic,
    /// `f(x) = L sin(x)` pointwise.
    LipschitzSine {
        lipschitz: f64,
    },
    /// `f(x) = c x`, applied in coefficient space on any basis.
    Linear {
        gain: f64,
    },
    /// Piecewise-linear interpolation of `(x, f(x))` nodes, constant extension.
    Table {
        xs: Vec<f64>,
        ys: Vec<f64>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Nonlinearity {
    pub kind: NonlinearityKind,
    pub constants: StructureConstants,
    /// Collocation grid size; defaults to `4N`.
    pub grid_points: Option<usize>,
}

impl Nonlinearity {
    pub fn none() -> Self {
        Self {
            kind: NonlinearityKind::None,
            constants: StructureConstants { lipschitz: Some(0.0), m1: 0.0, m2: 0.0, growth: Some(0.0) },
            grid_points: None,
        }
    }

    /// `-x³`: dissipative, so `m₁ = m₂ = 0`; not globally Lipschitz.
    pub fn cubic() -> Self {
        Self {
            kind: NonlinearityKind::Cubic,
            constants: StructureConstants { lipschitz: None, m1: 0.0, m2: 0.0, growth: None },
            grid_points: None,
        }
    }

    pub fn lipschitz_sine(lipschitz: f64) -> Self {
        Self {
            kind: NonlinearityKind::LipschitzSine { lipschitz },
            constants: StructureConstants {
                lipschitz: Some(lipschitz),
                m1: 0.0,
                m2: lipschitz,
                growth: Some(lipschitz),
            },
            grid_points: None,
        }
    }

    pub fn linear(gain: f64) -> Self {
        Self {
            kind: NonlinearityKind::Linear { gain },
            constants: StructureConstants { lipschitz: Some(gain.abs()), m1: 0.0, m2: gain, growth: None },
            grid_points: None,
        }
    }

    /// Tabulated nonlinearity; constants are read off the table (largest
    /// slope, largest `f(x)/x`). The table must pass through the origin.
    pub fn table(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() || xs.len() < 2 {
            return invalid("table needs at least two matching (x, f(x)) nodes");
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return invalid("table abscissae must be strictly increasing");
        }
        let lipschitz =
            xs.windows(2).zip(ys.windows(2)).map(|(x, y)| ((y[1] - y[0]) / (x[1] - x[0])).abs()).fold(0.0, f64::max);
        let m2 = xs
            .iter()
            .zip(&ys)
            .filter(|(x, _)| **x != 0.0)
            .map(|(x, y)| y / x)
            .fold(f64::NEG_INFINITY, f64::max)
            .max(0.0);
        Ok(Self {
            kind: NonlinearityKind::Table { xs, ys },
            constants: StructureConstants { lipschitz: Some(lipschitz), m1: 0.0, m2, growth: None },
            grid_points: None,
        })
    }

    pub fn with_grid_points(mut self, m: usize) -> Self {
        self.grid_points = Some(m);
        self
    }

    fn is_pointwise(&self) -> bool {
        !matches!(self.kind, NonlinearityKind::None | NonlinearityKind::Linear { .. })
    }

    fn pointwise(&self, v: f64) -> f64 {
        match &self.kind {
            NonlinearityKind::None => 0.0,
            NonlinearityKind::Cubic => -v * v * v,
            NonlinearityKind::LipschitzSine { lipschitz } => lipschitz * v.sin(),
            NonlinearityKind::Linear { gain } => gain * v,
            NonlinearityKind::Table { xs, ys } => {
                if v <= xs[0] {
                    return ys[0];
                }
                let last = xs.len() - 1;
                if v >= xs[last] {
                    return ys[last];
                }
                let i = xs.partition_point(|x| *x <= v) - 1;
                let s = (v - xs[i]) / (xs[i + 1] - xs[i]);
                ys[i] + s * (ys[i + 1] - ys[i])
            }
        }
    }
}

/// Evaluates `P_N f(x)` in coefficient space, where `P_N` is the discrete
/// projection of the collocation grid.
pub struct NonlinearEvaluator<'a> {
    f: &'a Nonlinearity,
    grid: Option<Collocation>,
}

impl<'a> NonlinearEvaluator<'a> {
    pub fn new(op: &SpectralOperator, f: &'a Nonlinearity) -> Result<Self> {
        let grid = if f.is_pointwise() {
            if op.basis() == Basis::Abstract {
                return Err(LabError::BasisMismatch("pointwise nonlinearity needs a physical basis".into()));
            }
            let m = f.grid_points.unwrap_or(4 * op.len()).max(op.len() + 2);
            Some(op.collocation(m)?)
        } else {
            None
        };
        Ok(Self { f, grid })
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        match (&self.f.kind, &self.grid) {
            (NonlinearityKind::None, _) => vec![0.0; x.len()],
            (NonlinearityKind::Linear { gain }, _) => x.iter().map(|v| gain * v).collect(),
            (_, Some(grid)) => {
                let g = grid.synthesize(x);
                let fx: Vec<f64> = g.values.iter().map(|v| self.f.pointwise(*v)).collect();
                grid.analyze(&fx)
            }
            (_, None) => unreachable!("pointwise nonlinearity without a grid"),
        }
    }

    /// `⟨f(x), x⟩` by grid quadrature (coefficient dot product for
    /// non-pointwise kinds).
    pub fn pairing(&self, x: &[f64]) -> f64 {
        match &self.grid {
            Some(grid) => {
                let g = grid.synthesize(x);
                let fx: Vec<f64> = g.values.iter().map(|v| self.f.pointwise(*v)).collect();
                grid.inner(&fx, &g.values)
            }
            None => self.apply(x).iter().zip(x).map(|(a, b)| a * b).sum(),
        }
    }
}

/// Exponential-Euler solution of `x' = A x + f(x) + B u`.
///
/// Aborts with [`LabError::BlowUp`] once `‖x‖` exceeds
/// `BLOW_UP_FACTOR · (‖x₀‖ + 1)`.
pub fn solve_semilinear(
    op: &SpectralOperator,
    b: &ControlOperator,
    f: &Nonlinearity,
    x0: &StateVector,
    u: &InputSignal,
    horizon: f64,
    step: f64,
) -> Result<Trajectory> {
    let n = op.len();
    if x0.len() != n {
        return Err(LabError::DimensionMismatch { expected: n, got: x0.len() });
    }
    b.check_len(n)?;
    let eval = NonlinearEvaluator::new(op, f)?;
    let times = step_grid(horizon, step, &[u])?;
    let limit = BLOW_UP_FACTOR * (x0.norm() + 1.0);
    let mut cache = StepCache::new();
    let mut x = x0.coefficients.clone();
    let mut states = Vec::with_capacity(times.len());
    states.push(x0.clone());
    for w in times.windows(2) {
        let h = w[1] - w[0];
        cache.update(op, h);
        let v = u.value_at(0.5 * (w[0] + w[1]));
        let fx = eval.apply(&x);
        for k in 0..n {
            x[k] = cache.decay[k] * x[k] + cache.forcing[k] * (fx[k] + b.coefficients()[k] * v);
        }
        let norm = l2(&x);
        if !(norm <= limit) {
            return Err(LabError::BlowUp { time: w[1], norm, limit });
        }
        states.push(StateVector { coefficients: x.clone(), space_index: x0.space_index });
    }
    Ok(Trajectory {
        times,
        states,
        meta: TrajectoryMeta { solver: SolverTag::ExponentialEuler, step, label: String::new() },
    })
}

/// Largest `X_{-1}` discrepancy of
/// `x(t) - x(0) = ∫₀ᵗ A₋₁x(s) + B u(s) ds` over the samples, with the state
/// integral by trapezoid quadrature and the input integral exact.
pub fn integral_identity_residual(
    op: &SpectralOperator,
    b: &ControlOperator,
    traj: &Trajectory,
    u: &InputSignal,
) -> Result<f64> {
    op.require_strictly_negative()?;
    b.check_len(op.len())?;
    let n = op.len();
    let x0 = &traj.states[0].coefficients;
    let mut acc = vec![0.0; n];
    let mut worst: f64 = 0.0;
    for j in 1..traj.times.len() {
        let (t0, t1) = (traj.times[j - 1], traj.times[j]);
        let prev = &traj.states[j - 1].coefficients;
        let cur = &traj.states[j].coefficients;
        for k in 0..n {
            acc[k] += 0.5 * (t1 - t0) * (prev[k] + cur[k]);
        }
        let input = u.integral(0.0, t1);
        let r = (0..n)
            .map(|k| {
                let l = op.eigenvalues()[k];
                let d = cur[k] - x0[k] - l * acc[k] - b.coefficients()[k] * input;
                (d / l).powi(2)
            })
            .sum::<f64>()
            .sqrt();
        worst = worst.max(r);
    }
    Ok(worst)
}

/// Largest discrepancy, over consecutive sample pairs, between the centred
/// difference of `½‖x‖²` and `-‖∂ξx‖² - a‖x‖² + u (x(0) + x(1))` evaluated
/// at the midpoint state by grid quadrature. Neumann heat only.
pub fn energy_balance_residual(
    op: &SpectralOperator,
    reaction: f64,
    traj: &Trajectory,
    u: &InputSignal,
    grid_points: usize,
) -> Result<f64> {
    if op.basis() != Basis::NeumannCos {
        return Err(LabError::BasisMismatch("energy balance is stated for Neumann heat".into()));
    }
    let grid = op.collocation(grid_points)?;
    let mut worst: f64 = 0.0;
    for j in 1..traj.times.len() {
        let h = traj.times[j] - traj.times[j - 1];
        let a = &traj.states[j - 1].coefficients;
        let c = &traj.states[j].coefficients;
        let lhs = 0.5 * (l2(c).powi(2) - l2(a).powi(2)) / h;
        let mid: Vec<f64> = a.iter().zip(c).map(|(p, q)| 0.5 * (p + q)).collect();
        let g = grid.synthesize(&mid);
        let dg = grid.synthesize_derivative(&mid);
        let v = u.value_at(0.5 * (traj.times[j - 1] + traj.times[j]));
        let rhs = -grid.inner(&dg, &dg) - reaction * grid.inner(&g.values, &g.values)
            + v * (g.values[0] + g.values[grid.points() - 1]);
        worst = worst.max((lhs - rhs).abs());
    }
    Ok(worst)
}

/// Outcome of a scalar hypothesis inequality.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionCheck {
    pub holds: bool,
    /// Distance to the boundary of the condition; positive when it holds.
    pub margin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SampleCheck {
    /// `⟨f(x), x⟩`
    pub pairing: f64,
    /// `-m₁⟨Ax,x⟩ + m₂‖x‖²`
    pub bound: f64,
    pub ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StructureReport {
    pub samples: Vec<SampleCheck>,
    /// All samples satisfy the declared `(m₁, m₂)` form bound.
    pub form_bound_ok: bool,
    /// Largest observed `‖f(x) - f(y)‖ / ‖x - y‖` over consecutive samples.
    pub observed_lipschitz: Option<f64>,
    pub lipschitz_ok: Option<bool>,
    /// `1 - m₁ > 0` and `(1 - m₁) ω_A + m₂ < 0`.
    pub dissipativity: ConditionCheck,
    /// `ω + M L_f < 0` with `M = 1`, `ω = ω_A`; absent without a Lipschitz constant.
    pub small_gain: Option<ConditionCheck>,
}

impl StructureReport {
    pub fn passes(&self) -> bool {
        self.form_bound_ok
            && self.lipschitz_ok.unwrap_or(true)
            && (self.dissipativity.holds || self.small_gain.as_ref().is_some_and(|c| c.holds))
    }
}

/// Checks the declared structure constants of `f` on sampled states and
/// evaluates the scalar hypotheses of the semilinear ISS results.
pub fn verify_structure(op: &SpectralOperator, f: &Nonlinearity, samples: &[StateVector]) -> Result<StructureReport> {
    let eval = NonlinearEvaluator::new(op, f)?;
    let c = &f.constants;
    let mut checks = Vec::with_capacity(samples.len());
    for x in samples {
        if x.len() != op.len() {
            return Err(LabError::DimensionMismatch { expected: op.len(), got: x.len() });
        }
        let pairing = eval.pairing(&x.coefficients);
        let ax_x: f64 = op.eigenvalues().iter().zip(&x.coefficients).map(|(l, v)| l * v * v).sum();
        let bound = -c.m1 * ax_x + c.m2 * x.norm().powi(2);
        let tol = 1e-12 * (1.0 + pairing.abs() + bound.abs());
        checks.push(SampleCheck { pairing, bound, ok: pairing <= bound + tol });
    }
    let form_bound_ok = checks.iter().all(|s| s.ok);

    let observed_lipschitz = if samples.len() >= 2 {
        let images: Vec<Vec<f64>> = samples.iter().map(|x| eval.apply(&x.coefficients)).collect();
        let ratio = samples
            .windows(2)
            .zip(images.windows(2))
            .filter_map(|(x, fx)| {
                let dx = l2(&diff(&x[0].coefficients, &x[1].coefficients));
                (dx > 0.0).then(|| l2(&diff(&fx[0], &fx[1])) / dx)
            })
            .fold(0.0, f64::max);
        Some(ratio)
    } else {
        None
    };
    let lipschitz_ok = match (c.lipschitz, observed_lipschitz) {
        (Some(l), Some(obs)) => Some(obs <= l * (1.0 + 1e-12)),
        _ => None,
    };

    let omega = op.growth_bound();
    let d = (1.0 - c.m1) * omega + c.m2;
    let dissipativity = ConditionCheck { holds: 1.0 - c.m1 > 0.0 && d < 0.0, margin: (-d).min(1.0 - c.m1) };
    let small_gain = c.lipschitz.map(|l| {
        let s = omega + l;
        ConditionCheck { holds: s < 0.0, margin: -s }
    });
    Ok(StructureReport { samples: checks, form_bound_ok, observed_lipschitz, lipschitz_ok, dissipativity, small_gain })
}

fn diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}
