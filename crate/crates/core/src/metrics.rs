//! Time norms of inputs and exponential-affine ISS certificates.

use gauss_quad::GaussLegendre;
use serde::{Deserialize, Serialize};

use crate::boundary::{adjoint_norm, ControlOperator};
use crate::error::{invalid, LabError, Result};
use crate::signal::InputSignal;
use crate::solver::Trajectory;
use crate::spectral::SpectralOperator;

/// Serde adapter writing an infinite exponent as the string `"inf"`.
pub mod exponent_serde {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(q: &f64, s: S) -> Result<S::Ok, S::Error> {
        if q.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*q)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Raw::deserialize(d)? {
            Raw::Num(q) => Ok(q),
            Raw::Text(t) => parse(&t).ok_or_else(|| de::Error::custom(format!("invalid exponent `{t}`"))),
        }
    }

    pub fn parse(t: &str) -> Option<f64> {
        match t.trim() {
            "inf" | "Inf" | "infinity" | "Infinity" | "∞" => Some(f64::INFINITY),
            other => other.parse().ok(),
        }
    }

    pub fn format(q: f64) -> String {
        if q.is_infinite() {
            "inf".into()
        } else {
            format!("{q}")
        }
    }
}

const GAUGE_PROBES: [f64; 9] = [0.0, 1e-3, 1e-2, 0.1, 0.5, 1.0, 2.0, 10.0, 100.0];

/// Gauss–Legendre nodes used for weighted gauge integrals over each piece.
const GAUGE_NODES: usize = 32;

/// `inf{k ≥ 0 : ∫₀ᵗ Φ(e^{εs}|u(s)|/k) ds ≤ 1}`, by bisection in `ln k` to
/// relative tolerance `1e-10`. Exact per piece for `ε = 0`.
pub fn luxemburg_gauge<F: Fn(f64) -> f64>(u: &InputSignal, phi: F, t: f64, eps: f64) -> Result<f64> {
    if !(t >= 0.0) || !(eps >= 0.0) {
        return invalid(format!("gauge needs t ≥ 0 and ε ≥ 0, got t = {t}, ε = {eps}"));
    }
    if phi(0.0) != 0.0 || GAUGE_PROBES.windows(2).any(|w| !(phi(w[1]) > phi(w[0]))) {
        return invalid("gauge function must vanish at 0 and be strictly increasing");
    }
    let pieces: Vec<(f64, f64, f64)> =
        u.pieces().filter(|(a, _, v)| *a < t && *v != 0.0).map(|(a, b, v)| (a, b.min(t), v.abs())).collect();
    if pieces.is_empty() {
        return Ok(0.0);
    }
    let rule = (eps > 0.0).then(|| GaussLegendre::new(GAUGE_NODES).expect("valid degree"));
    let integral = |k: f64| -> f64 {
        pieces
            .iter()
            .map(|&(a, b, v)| match &rule {
                None => (b - a) * phi(v / k),
                Some(rule) => {
                    // split so that the exponential weight varies by at most e on a panel
                    let panels = ((eps * (b - a)).ceil() as usize).max(1);
                    let w = (b - a) / panels as f64;
                    (0..panels)
                        .map(|p| {
                            let lo = a + p as f64 * w;
                            rule.integrate(lo, lo + w, |s| phi((eps * s).exp() * v / k))
                        })
                        .sum()
                }
            })
            .sum()
    };
    let peak = pieces.iter().map(|p| p.2).fold(0.0, f64::max) * (eps * t).exp();
    let (mut lo, mut hi) = (peak.ln(), peak.ln());
    while !(integral(hi.exp()) <= 1.0) {
        hi += 1.0;
        if hi > 700.0 {
            return Err(LabError::Numerical("gauge bracket diverged".into()));
        }
    }
    while integral(lo.exp()) <= 1.0 {
        lo -= 1.0;
        if lo < -700.0 {
            return Ok(0.0);
        }
    }
    while hi - lo > 1e-11 {
        let mid = 0.5 * (lo + hi);
        if integral(mid.exp()) <= 1.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi.exp())
}

/// `‖x(t)‖ ≤ C₁ e^{-ωt}‖x₀‖ + C₂ ‖u‖_{L^q(0,t)}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct IssCertificate {
    pub c1: f64,
    pub omega: f64,
    pub c2: f64,
    #[serde(with = "exponent_serde")]
    pub q: f64,
    pub scope: String,
}

impl IssCertificate {
    pub fn new(c1: f64, omega: f64, c2: f64, q: f64, scope: impl Into<String>) -> Result<Self> {
        let cert = Self { c1, omega, c2, q, scope: scope.into() };
        cert.validate()?;
        Ok(cert)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c1 >= 0.0 && self.c1.is_finite()) || !(self.c2 >= 0.0 && self.c2.is_finite()) {
            return invalid("certificate constants must be finite and non-negative");
        }
        if !(self.omega > 0.0 && self.omega.is_finite()) {
            return invalid(format!("certificate decay rate must be positive, got {}", self.omega));
        }
        if !(self.q >= 1.0) {
            return invalid(format!("certificate exponent must be at least 1, got {}", self.q));
        }
        Ok(())
    }

    /// Right-hand side at time `t`.
    pub fn bound(&self, t: f64, x0_norm: f64, input_norm: f64) -> f64 {
        self.c1 * (-self.omega * t).exp() * x0_norm + self.c2 * input_norm
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CertificateReport {
    /// `max_t ‖x(t)‖ - bound(t)`; non-positive when the certificate holds.
    pub max_residual: f64,
    pub worst_time: f64,
    /// `‖x₀‖ + ‖u‖_{L^q(0,T)}`, the natural scale for tolerances.
    pub scale: f64,
    pub samples: usize,
}

impl CertificateReport {
    /// Holds up to `rel · scale`.
    pub fn holds(&self, rel: f64) -> bool {
        self.max_residual <= rel * self.scale
    }
}

/// Running `‖u‖_{L^q(0,t)}` at each of the increasing times `times`.
fn running_lq(u: &InputSignal, q: f64, times: &[f64]) -> Vec<f64> {
    let pieces: Vec<(f64, f64, f64)> = u.pieces().collect();
    let mut out = Vec::with_capacity(times.len());
    let mut acc = 0.0;
    let mut next = 0;
    for &t in times {
        while next < pieces.len() && pieces[next].1 <= t {
            let (a, b, v) = pieces[next];
            acc = if q.is_infinite() { f64::max(acc, v.abs()) } else { acc + (b - a) * v.abs().powf(q) };
            next += 1;
        }
        let partial = match pieces.get(next) {
            Some(&(a, _, v)) if a < t => {
                if q.is_infinite() {
                    f64::max(acc, v.abs())
                } else {
                    acc + (t - a) * v.abs().powf(q)
                }
            }
            _ => acc,
        };
        out.push(if q.is_infinite() { partial } else { partial.powf(1.0 / q) });
    }
    out
}

/// Checks a certificate along one trajectory, with the `X` norm taken as the
/// ℓ² norm of the stored coefficients.
pub fn check_certificate(traj: &Trajectory, u: &InputSignal, cert: &IssCertificate) -> Result<CertificateReport> {
    cert.validate()?;
    check_bound(traj, u, cert.q, |t, x0, un| cert.bound(t, x0, un))
}

fn check_bound<F: Fn(f64, f64, f64) -> f64>(
    traj: &Trajectory,
    u: &InputSignal,
    q: f64,
    bound: F,
) -> Result<CertificateReport> {
    if traj.states.is_empty() {
        return invalid("empty trajectory");
    }
    let x0 = traj.initial_state().norm();
    let norms = running_lq(u, q, &traj.times);
    let mut worst = (f64::NEG_INFINITY, 0.0);
    for ((t, x), un) in traj.times.iter().zip(&traj.states).zip(&norms) {
        let r = x.norm() - bound(*t, x0, *un);
        if r > worst.0 {
            worst = (r, *t);
        }
    }
    Ok(CertificateReport {
        max_residual: worst.0,
        worst_time: worst.1,
        scale: x0 + norms.last().copied().unwrap_or(0.0),
        samples: traj.times.len(),
    })
}

/// `C₁ = 1`, `ω = -ω_A` and the smallest `C₂` passing every run.
///
/// The smallest admissible `C₂` is the largest ratio
/// `(‖x(t)‖ - e^{-ωt}‖x₀‖)/‖u‖_{L^q(0,t)}` over all samples.
pub fn fit_certificate(
    op: &SpectralOperator,
    runs: &[(Trajectory, InputSignal)],
    q: f64,
    scope: &str,
) -> Result<IssCertificate> {
    let growth = op.growth_bound();
    if growth >= 0.0 {
        return Err(LabError::Unstable { growth_bound: growth });
    }
    if runs.is_empty() {
        return invalid("no runs to fit");
    }
    let omega = -growth;
    let mut c2: f64 = 0.0;
    for (traj, u) in runs {
        let x0 = traj.initial_state().norm();
        let norms = running_lq(u, q, &traj.times);
        for ((t, x), un) in traj.times.iter().zip(&traj.states).zip(&norms) {
            let excess = x.norm() - (-omega * t).exp() * x0;
            let slack = 1e-12 * (x0 + un);
            if excess <= slack {
                continue;
            }
            if *un == 0.0 {
                return Err(LabError::Numerical(format!(
                    "state exceeds the free decay at t = {t} with zero input; no gain fits"
                )));
            }
            c2 = c2.max(excess / un);
        }
    }
    IssCertificate::new(1.0, omega, c2, q, scope)
}

/// Certificate of the Lyapunov argument for `x' = Ax + f(x) + Bu` with
/// `⟨f(x),x⟩ ≤ 0`: for `0 < ε ≤ δ`,
/// `‖x(t)‖ ≤ e^{-(1-ε)μt}‖x₀‖ + ‖B*‖_{X_{1/2}→U}/√(2ε) · ‖u‖_{L²(0,t)}`
/// with `μ = -ω_A`. The certified rate is `ω = (1-δ)μ`; `ε` is chosen on a
/// grid in `(0, δ]` to minimise the gain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LyapunovCertificate {
    pub certificate: IssCertificate,
    pub epsilon: f64,
    pub trace_norm: f64,
}

pub fn lyapunov_certificate(
    op: &SpectralOperator,
    b: &ControlOperator,
    delta: f64,
    scope: &str,
) -> Result<LyapunovCertificate> {
    let growth = op.growth_bound();
    if growth >= 0.0 {
        return Err(LabError::Unstable { growth_bound: growth });
    }
    if !(delta > 0.0 && delta < 1.0) {
        return invalid(format!("rate margin δ must lie in (0, 1), got {delta}"));
    }
    let k = adjoint_norm(op, b, 0.5)?;
    let mu = -growth;
    let omega = (1.0 - delta) * mu;
    let (epsilon, c2) = (1..=100)
        .map(|i| delta * i as f64 / 100.0)
        .filter(|eps| (1.0 - eps) * mu >= omega * (1.0 - 1e-15))
        .map(|eps| (eps, k / (2.0 * eps).sqrt()))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("ε = δ is always admissible");
    Ok(LyapunovCertificate { certificate: IssCertificate::new(1.0, omega, c2, 2.0, scope)?, epsilon, trace_norm: k })
}

/// Gronwall bound for a globally Lipschitz nonlinearity:
/// `‖x(t)‖ ≤ M e^{(ω+ML)t}‖x₀‖ + [ML (e^{(ω+ML)t} - 1)/(ω+ML) + 1] σ ‖u‖_∞`,
/// valid when `‖T(t)‖ ≤ M e^{ωt}` and `ω + ML < 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LipschitzBound {
    pub m: f64,
    pub omega: f64,
    pub lipschitz: f64,
    /// Linear `L^∞` gain of the input-to-state map.
    pub sigma: f64,
}

impl LipschitzBound {
    pub fn new(m: f64, omega: f64, lipschitz: f64, sigma: f64) -> Result<Self> {
        if !(m >= 1.0) || !(lipschitz >= 0.0) || !(sigma >= 0.0) {
            return invalid("Lipschitz bound needs M ≥ 1, L ≥ 0, σ ≥ 0");
        }
        let rate = omega + m * lipschitz;
        if rate >= 0.0 {
            return Err(LabError::Unstable { growth_bound: rate });
        }
        Ok(Self { m, omega, lipschitz, sigma })
    }

    pub fn rate(&self) -> f64 {
        self.omega + self.m * self.lipschitz
    }

    pub fn bound(&self, t: f64, x0_norm: f64, sup_input: f64) -> f64 {
        let r = self.rate();
        let ml = self.m * self.lipschitz;
        self.m * (r * t).exp() * x0_norm + (ml * (r * t).exp_m1() / r + 1.0) * self.sigma * sup_input
    }

    /// Time-uniform relaxation as an exponential-affine certificate.
    pub fn as_certificate(&self, scope: &str) -> Result<IssCertificate> {
        let r = self.rate();
        IssCertificate::new(self.m, -r, (1.0 + self.m * self.lipschitz / -r) * self.sigma, f64::INFINITY, scope)
    }
}

pub fn check_lipschitz_bound(traj: &Trajectory, u: &InputSignal, bound: &LipschitzBound) -> Result<CertificateReport> {
    check_bound(traj, u, f64::INFINITY, |t, x0, un| bound.bound(t, x0, un))
}

/// `(Σ b_n²/(2|λ_n|))^{1/2}`, which bounds `‖∫₀ᵗ T(t-s)Bu(s) ds‖` by
/// `‖u‖_{L²(0,t)}` uniformly in `t` (Cauchy–Schwarz per mode).
pub fn l2_gain_bound(op: &SpectralOperator, b: &ControlOperator) -> Result<f64> {
    op.require_strictly_negative()?;
    if b.len() != op.len() {
        return Err(LabError::DimensionMismatch { expected: op.len(), got: b.len() });
    }
    Ok(b.coefficients().iter().zip(op.eigenvalues()).map(|(c, l)| c * c / (-2.0 * l)).sum::<f64>().sqrt())
}

/// Upper bound on `∫₀^∞ ‖T(s)B‖ ds = ∫₀^∞ (Σ b_n² e^{2λ_n s})^{1/2} ds`, the
/// `L^∞` gain of the linear input-to-state map.
pub fn linf_gain_bound(op: &SpectralOperator, b: &ControlOperator) -> Result<f64> {
    op.require_strictly_negative()?;
    if b.len() != op.len() {
        return Err(LabError::DimensionMismatch { expected: op.len(), got: b.len() });
    }
    let lambda: Vec<f64> = op.eigenvalues().to_vec();
    let bsq: Vec<f64> = b.coefficients().iter().map(|c| c * c).collect();
    let total: f64 = bsq.iter().sum::<f64>();
    let norm = |s: f64| lambda.iter().zip(&bsq).map(|(l, c)| c * (2.0 * l * s).exp()).sum::<f64>().sqrt();
    let slowest = -lambda[0];
    let fastest = -lambda[lambda.len() - 1];
    let rule = GaussLegendre::new(24).expect("valid degree");
    // panels: [0, s0] then doubling until the tail bound is negligible
    let s0 = 0.01 / fastest;
    let mut sum = rule.integrate(0.0, s0, norm);
    let mut a = s0;
    loop {
        let tail = total.sqrt() * (-slowest * a).exp() / slowest;
        if tail <= 1e-12 * sum {
            sum += tail;
            break;
        }
        let bnd = (2.0 * a).min(a + 1.0 / slowest);
        sum += rule.integrate(a, bnd, norm);
        a = bnd;
    }
    Ok(sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::neumann_control;
    use crate::rng::LabRng;
    use crate::signal::lq_norm;
    use crate::solver::{solve_linear, solve_semilinear, Nonlinearity};
    use crate::spectral::StateVector;
    use approx::assert_relative_eq;

    #[test]
    fn gauge_of_power_is_lq() {
        let mut rng = LabRng::new(21);
        let u = InputSignal::random_piecewise(9, 3.0, 2.0, &mut rng).unwrap();
        for q in [1.0, 1.5, 2.0, 4.0] {
            let g = luxemburg_gauge(&u, |x| x.powf(q), 1.7, 0.0).unwrap();
            assert_relative_eq!(g, lq_norm(&u, q, 1.7).unwrap(), max_relative = 1e-9);
        }
    }

    #[test]
    fn gauge_examples() {
        assert_eq!(luxemburg_gauge(&InputSignal::zero(), |x| x * x, 1.0, 0.0).unwrap(), 0.0);
        let one = InputSignal::constant(1.0, 1.0).unwrap();
        let k = luxemburg_gauge(&one, f64::exp_m1, 1.0, 0.0).unwrap();
        assert_relative_eq!(k, 1.0 / 2f64.ln(), max_relative = 1e-10);
        assert!(luxemburg_gauge(&one, |x| -x, 1.0, 0.0).is_err());
        assert!(luxemburg_gauge(&one, |x| x + 1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn weighted_gauge_of_square() {
        // ∫₀¹ e^{2εs}/k² ds = 1  ⇒  k² = (e^{2ε} - 1)/(2ε)
        let one = InputSignal::constant(1.0, 1.0).unwrap();
        let eps = 0.7;
        let k = luxemburg_gauge(&one, |x| x * x, 1.0, eps).unwrap();
        assert_relative_eq!(k, ((2.0 * eps).exp_m1() / (2.0 * eps)).sqrt(), max_relative = 1e-10);
    }

    #[test]
    fn exponent_round_trip() {
        #[derive(Serialize, Deserialize)]
        struct W {
            #[serde(with = "exponent_serde")]
            q: f64,
        }
        assert_eq!(serde_json::to_string(&W { q: f64::INFINITY }).unwrap(), r#"{"q":"inf"}"#);
        assert_eq!(serde_json::from_str::<W>(r#"{"q":"inf"}"#).unwrap().q, f64::INFINITY);
        assert_eq!(serde_json::from_str::<W>(r#"{"q":2.5}"#).unwrap().q, 2.5);
        assert!(serde_json::from_str::<W>(r#"{"q":"lots"}"#).is_err());
    }

    #[test]
    fn free_decay_certificate() {
        let a = 1.0;
        let op = SpectralOperator::neumann_laplacian_1d(a, 16).unwrap();
        let b = neumann_control(&op).unwrap();
        let x0 = StateVector::new((0..16).map(|k| 1.0 / (k + 1) as f64).collect());
        let traj = solve_linear(&op, &b, &x0, &InputSignal::zero(), 2.0, 1e-2).unwrap();
        let cert = IssCertificate::new(1.0, a, 123.0, 2.0, "neumann-heat").unwrap();
        let report = check_certificate(&traj, &InputSignal::zero(), &cert).unwrap();
        assert!(report.max_residual <= 1e-15, "{report:?}");

        let x0 = StateVector::unit(16, 0, 1.0);
        let traj = solve_linear(&op, &b, &x0, &InputSignal::zero(), 2.0, 1e-2).unwrap();
        let fast = IssCertificate::new(1.0, 1.5 * a, 123.0, 2.0, "neumann-heat").unwrap();
        assert!(check_certificate(&traj, &InputSignal::zero(), &fast).unwrap().max_residual > 0.1);
    }

    #[test]
    fn running_norms_match_closed_form() {
        let mut rng = LabRng::new(2);
        let u = InputSignal::random_piecewise(6, 1.0, 1.2, &mut rng).unwrap();
        let times: Vec<f64> = (0..=30).map(|k| k as f64 * 0.05).collect();
        for q in [1.0, 2.0, 3.5, f64::INFINITY] {
            for (t, r) in times.iter().zip(running_lq(&u, q, &times)) {
                assert_relative_eq!(r, lq_norm(&u, q, *t).unwrap(), max_relative = 1e-12, epsilon = 1e-300);
            }
        }
    }

    #[test]
    fn fit_certificate_cases() {
        let op = SpectralOperator::neumann_laplacian_1d(1.0, 8).unwrap();
        let b = neumann_control(&op).unwrap();
        let x0 = StateVector::unit(8, 1, 1.0);
        let free = solve_linear(&op, &b, &x0, &InputSignal::zero(), 1.0, 1e-2).unwrap();
        let cert = fit_certificate(&op, &[(free, InputSignal::zero())], 2.0, "neumann-heat").unwrap();
        assert_eq!(cert.c2, 0.0);
        assert_eq!(cert.omega, 1.0);

        let unstable = SpectralOperator::new(vec![1.0]).unwrap();
        let scalar = ControlOperator::custom(vec![1.0]).unwrap();
        let u = InputSignal::constant(1.0, 1.0).unwrap();
        let traj = solve_linear(&unstable, &scalar, &StateVector::zeros(1), &u, 1.0, 1e-2).unwrap();
        assert!(matches!(
            fit_certificate(&unstable, &[(traj, u)], 2.0, "scalar-counterexample"),
            Err(LabError::Unstable { .. })
        ));
    }

    #[test]
    fn lyapunov_constants_for_neumann() {
        let op = SpectralOperator::neumann_laplacian_1d(1.0, 256).unwrap();
        let b = neumann_control(&op).unwrap();
        let lc = lyapunov_certificate(&op, &b, 0.05, "semilinear-cubic").unwrap();
        assert_relative_eq!(lc.epsilon, 0.05);
        assert_relative_eq!(lc.certificate.omega, 0.95);
        assert_relative_eq!(lc.certificate.c2, lc.trace_norm / 0.1f64.sqrt());
        assert!((2.0..2.2).contains(&lc.trace_norm), "{}", lc.trace_norm);
    }

    #[test]
    fn lyapunov_certificate_holds_on_cubic_runs() {
        let op = SpectralOperator::neumann_laplacian_1d(1.0, 32).unwrap();
        let b = neumann_control(&op).unwrap();
        let lc = lyapunov_certificate(&op, &b, 0.05, "semilinear-cubic").unwrap();
        let mut rng = LabRng::new(4);
        for _ in 0..3 {
            let u = InputSignal::random_piecewise(10, 2.0, 2.0, &mut rng).unwrap();
            let x0 = StateVector::new((0..32).map(|k| rng.uniform(-1.0, 1.0) / (1 + k) as f64).collect());
            let traj = solve_semilinear(&op, &b, &Nonlinearity::cubic(), &x0, &u, 2.0, 1e-3).unwrap();
            assert!(check_certificate(&traj, &u, &lc.certificate).unwrap().holds(1e-6));
        }
    }

    #[test]
    fn weak_dirichlet_l2_gain_is_bounded() {
        // Σ_{n odd} 4/(n²π²) = 1/2
        let bound = |n| {
            let op = SpectralOperator::dirichlet_laplacian_1d(n).unwrap();
            let b = crate::boundary::dirichlet_control(&op).unwrap().reweighted(&op, -0.5).unwrap();
            l2_gain_bound(&op, &b).unwrap()
        };
        assert!(bound(1024) < 0.5f64.sqrt());
        assert_relative_eq!(bound(4096), 0.5f64.sqrt(), max_relative = 1e-3);
    }

    #[test]
    fn scalar_linf_gain() {
        let op = SpectralOperator::new(vec![-2.0]).unwrap();
        let b = ControlOperator::custom(vec![3.0]).unwrap();
        assert_relative_eq!(linf_gain_bound(&op, &b).unwrap(), 1.5, max_relative = 1e-10);
    }

    #[test]
    fn lipschitz_bound_algebra() {
        let lb = LipschitzBound::new(1.0, -1.0, 0.5, 2.0).unwrap();
        assert_eq!(lb.rate(), -0.5);
        assert_relative_eq!(lb.bound(0.0, 3.0, 1.0), 3.0 + 2.0);
        let cert = lb.as_certificate("semilinear-lipschitz").unwrap();
        assert_relative_eq!(cert.c2, 4.0);
        assert!(cert.bound(5.0, 1.0, 1.0) >= lb.bound(5.0, 1.0, 1.0));
        assert!(matches!(LipschitzBound::new(1.0, -1.0, 2.0, 1.0), Err(LabError::Unstable { .. })));
    }
}
