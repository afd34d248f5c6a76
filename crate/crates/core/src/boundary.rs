//! Boundary control operators `B = (𝔄 - A₋₁)B₀` in coefficient form and the
//! regularity order that decides which `L^q` input norms give ISS.

use std::f64::consts::{PI, SQRT_2};

use gauss_quad::GaussLegendre;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, LabError, Result};
use crate::spectral::{Basis, SpectralOperator, StateVector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    NeumannFlux,
    DirichletTrace,
    Pathological,
    Custom,
}

/// One input channel: `B u = u · Σ b_n e_n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlOperator {
    coefficients: Vec<f64>,
    provenance: Provenance,
}

impl ControlOperator {
    pub fn custom(coefficients: Vec<f64>) -> Result<Self> {
        if let Some(b) = coefficients.iter().find(|b| !b.is_finite()) {
            return invalid(format!("non-finite control coefficient {b}"));
        }
        Ok(Self { coefficients, provenance: Provenance::Custom })
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn truncate(&self, n: usize) -> Self {
        Self { coefficients: self.coefficients[..n].to_vec(), provenance: self.provenance }
    }

    /// Coefficients `b_n (-λ_n)^β`: the same input expressed in the coordinates
    /// `y = (-A)^β x`, i.e. with `X_β` as state space.
    pub fn reweighted(&self, op: &SpectralOperator, beta: f64) -> Result<Self> {
        op.require_strictly_negative()?;
        self.check_len(op.len())?;
        let coefficients = self.coefficients.iter().zip(op.eigenvalues()).map(|(b, l)| b * (-l).powf(beta)).collect();
        Ok(Self { coefficients, provenance: self.provenance })
    }

    pub(crate) fn check_len(&self, n: usize) -> Result<()> {
        if self.len() != n {
            return Err(LabError::DimensionMismatch { expected: n, got: self.len() });
        }
        Ok(())
    }
}

/// Equal outward flux `u` at both ends of (0,1): `B*ψ = ψ(0) + ψ(1)`.
pub fn neumann_control(op: &SpectralOperator) -> Result<ControlOperator> {
    if op.basis() != Basis::NeumannCos {
        return Err(LabError::BasisMismatch(format!(
            "Neumann flux control needs the cosine basis, got {:?}",
            op.basis()
        )));
    }
    let coefficients = (0..op.len())
        .map(|k| match k {
            0 => 2.0,
            k if k % 2 == 0 => 2.0 * SQRT_2,
            _ => 0.0,
        })
        .collect();
    Ok(ControlOperator { coefficients, provenance: Provenance::NeumannFlux })
}

/// Equal boundary value `u` at both ends of (0,1).
///
/// `b_n = -(∂_ν φ_n(0) + ∂_ν φ_n(1)) = φ_n'(0) - φ_n'(1) = √2 nπ (1 - (-1)^n)`,
/// non-zero on odd wavenumbers only.
pub fn dirichlet_control(op: &SpectralOperator) -> Result<ControlOperator> {
    if op.basis() != Basis::DirichletSin {
        return Err(LabError::BasisMismatch(format!(
            "Dirichlet trace control needs the sine basis, got {:?}",
            op.basis()
        )));
    }
    let coefficients = (0..op.len())
        .map(|k| {
            let n = k + 1;
            if n % 2 == 1 {
                2.0 * SQRT_2 * n as f64 * PI
            } else {
                0.0
            }
        })
        .collect();
    Ok(ControlOperator { coefficients, provenance: Provenance::DirichletTrace })
}

/// `b_n = -2^n / n` for the operator with eigenvalues `-2^n`, `n = 1..N`.
pub fn pathological_control(op: &SpectralOperator) -> Result<ControlOperator> {
    for (k, l) in op.eigenvalues().iter().enumerate() {
        let expected = -(2f64).powi(k as i32 + 1);
        if *l != expected {
            return Err(LabError::InvalidArgument(format!(
                "eigenvalue {k} is {l}, expected {expected} for the geometric spectrum"
            )));
        }
    }
    let coefficients = (1..=op.len()).map(|n| -(2f64).powi(n as i32) / n as f64).collect();
    Ok(ControlOperator { coefficients, provenance: Provenance::Pathological })
}

/// `B*ψ = Σ b_n ψ_n`.
pub fn adjoint_pairing(b: &ControlOperator, psi: &StateVector) -> Result<f64> {
    b.check_len(psi.len())?;
    Ok(b.coefficients.iter().zip(&psi.coefficients).map(|(b, p)| b * p).sum())
}

/// `‖B*‖` as a functional on `X_β`: `(Σ b_n² (-λ_n)^{-2β})^{1/2}`.
///
/// With `β = 1/2` this is the constant that enters the Lyapunov estimate of
/// semilinear systems whose input operator maps into `X_{-1/2}`.
pub fn adjoint_norm(op: &SpectralOperator, b: &ControlOperator, beta: f64) -> Result<f64> {
    op.require_strictly_negative()?;
    b.check_len(op.len())?;
    Ok(b.coefficients.iter().zip(op.eigenvalues()).map(|(b, l)| b * b * (-l).powf(-2.0 * beta)).sum::<f64>().sqrt())
}

/// Recomputes `b_n = ⟨𝔄g - A₋₁g, φ_n⟩ = ∫ (g'' - a g - λ_n g) φ_n` from a lifting
/// profile `g` with `𝔅g = 1`, where `𝔄 = ∂² - a`.
///
/// The result does not depend on the lifting; this gives an independent route
/// to the endpoint-trace formulas.
pub fn control_from_lifting<G, G2>(
    op: &SpectralOperator,
    reaction: f64,
    lifting: G,
    lifting_second: G2,
) -> Result<ControlOperator>
where
    G: Fn(f64) -> f64,
    G2: Fn(f64) -> f64,
{
    let basis = op.basis();
    if basis == Basis::Abstract {
        return Err(LabError::BasisMismatch("lifting needs a physical basis".into()));
    }
    let rule = GaussLegendre::new(24).map_err(|e| LabError::Numerical(e.to_string()))?;
    let panels = 4 * op.len().max(4);
    let coefficients = op
        .eigenvalues()
        .iter()
        .enumerate()
        .map(|(k, &lambda)| {
            (0..panels)
                .map(|p| {
                    let a = p as f64 / panels as f64;
                    let b = (p + 1) as f64 / panels as f64;
                    rule.integrate(a, b, |xi| {
                        let g = lifting(xi);
                        (lifting_second(xi) - reaction * g - lambda * g) * basis.eval(k, xi).unwrap_or(0.0)
                    })
                })
                .sum()
        })
        .collect();
    Ok(ControlOperator { coefficients, provenance: Provenance::Custom })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Converging,
    Diverging,
    Inconclusive,
}

/// Partial sums of `Σ b_n² (-λ_n)^{2(α-1)}` at one order `α`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RegularityRow {
    pub alpha: f64,
    /// Sums over the first `N/4`, `N/2` and `N` modes.
    pub partial_sums: [f64; 3],
    /// `(S_N - S_{N/2}) / (S_{N/2} - S_{N/4})`; `NaN` when both blocks vanish.
    pub block_ratio: f64,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RegularityReport {
    pub truncations: [usize; 3],
    pub rows: Vec<RegularityRow>,
    /// Largest converging order on the grid, `0` if none converged.
    pub alpha_critical: f64,
    /// `1/alpha_critical`, infinite when no order converged.
    pub q_critical: f64,
}

/// Relative agreement of the last two truncations that counts as converged.
pub const AGREEMENT_TOL: f64 = 0.01;
/// Growth factor of the last two truncations that counts as diverged.
pub const GROWTH_FACTOR: f64 = 2.0;
/// Dyadic blocks must shrink (grow) by this relative margin to be called
/// converging (diverging).
pub const BLOCK_MARGIN: f64 = 0.01;

fn verdict(sums: [f64; 3]) -> (f64, Verdict) {
    let [quarter, half, full] = sums;
    let early = half - quarter;
    let late = full - half;
    let ratio = if early > 0.0 {
        late / early
    } else if late > 0.0 {
        f64::INFINITY
    } else {
        f64::NAN
    };
    let v = if full > GROWTH_FACTOR * half || ratio >= 1.0 + BLOCK_MARGIN {
        Verdict::Diverging
    } else if ratio.is_nan() || ratio <= 1.0 - BLOCK_MARGIN || (full - half).abs() <= AGREEMENT_TOL * full {
        Verdict::Converging
    } else {
        Verdict::Inconclusive
    };
    (ratio, v)
}

/// Estimates the largest `α` with `B ∈ L(U, X_{-1+α})` from partial sums.
///
/// Each order is judged from the sums over the first `N/4`, `N/2`, `N` modes:
/// it diverges when the last sum more than doubles or the last dyadic block
/// exceeds the previous one by [`BLOCK_MARGIN`]; it converges when the block
/// shrinks by that margin or the last two sums agree within
/// [`AGREEMENT_TOL`]; anything else is inconclusive.
pub fn classify_regularity(op: &SpectralOperator, b: &ControlOperator, alpha_grid: &[f64]) -> Result<RegularityReport> {
    op.require_strictly_negative()?;
    b.check_len(op.len())?;
    let n = op.len();
    if n < 4 {
        return invalid(format!("need at least 4 modes to classify, got {n}"));
    }
    if let Some(a) = alpha_grid.iter().find(|a| !(**a > 0.0 && **a <= 1.0)) {
        return invalid(format!("regularity order {a} outside (0, 1]"));
    }
    let truncations = [n / 4, n / 2, n];
    let rows = alpha_grid
        .iter()
        .map(|&alpha| {
            let mut sums = [0.0; 3];
            let mut acc = 0.0;
            let mut next = 0;
            for (k, (bk, l)) in b.coefficients.iter().zip(op.eigenvalues()).enumerate() {
                if bk != &0.0 {
                    acc += bk * bk * (-l).powf(2.0 * (alpha - 1.0));
                }
                while next < 3 && k + 1 == truncations[next] {
                    sums[next] = acc;
                    next += 1;
                }
            }
            let (block_ratio, verdict) = verdict(sums);
            RegularityRow { alpha, partial_sums: sums, block_ratio, verdict }
        })
        .collect::<Vec<_>>();
    let alpha_critical = rows.iter().filter(|r| r.verdict == Verdict::Converging).map(|r| r.alpha).fold(0.0, f64::max);
    let q_critical = if alpha_critical > 0.0 { 1.0 / alpha_critical } else { f64::INFINITY };
    Ok(RegularityReport { truncations, rows, alpha_critical, q_critical })
}

/// `α = 0.01, 0.02, ..., 1.00`.
pub fn default_alpha_grid() -> Vec<f64> {
    (1..=100).map(|i| i as f64 / 100.0).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn neumann_coefficients() {
        let op = SpectralOperator::neumann_laplacian_1d(1.0, 3).unwrap();
        let b = neumann_control(&op).unwrap();
        assert_eq!(b.coefficients(), &[2.0, 0.0, 2.0 * SQRT_2]);
        let op = SpectralOperator::neumann_laplacian_1d(1.0, 101).unwrap();
        let b = neumann_control(&op).unwrap();
        assert!(b.coefficients().iter().skip(1).step_by(2).all(|c| *c == 0.0));
        let sup = b.coefficients().iter().skip(1).map(|c| c.abs()).fold(0.0, f64::max);
        assert_eq!(sup, 2.0 * SQRT_2);
        // b_n = φ_n(0) + φ_n(1)
        for k in 0..op.len() {
            let trace = Basis::NeumannCos.eval(k, 0.0).unwrap() + Basis::NeumannCos.eval(k, 1.0).unwrap();
            assert_abs_diff_eq!(b.coefficients()[k], trace, epsilon = 1e-12);
        }
    }

    #[test]
    fn dirichlet_coefficients_follow_the_normal_derivative() {
        let op = SpectralOperator::dirichlet_laplacian_1d(4).unwrap();
        let b = dirichlet_control(&op).unwrap();
        let c = 2.0 * SQRT_2 * PI;
        let expected = [c, 0.0, 3.0 * c, 0.0];
        for (got, want) in b.coefficients().iter().zip(expected) {
            assert_abs_diff_eq!(got.abs(), want, epsilon = 1e-12);
        }
        for k in 0..4 {
            let basis = Basis::DirichletSin;
            let outward = -basis.eval_derivative(k, 0.0).unwrap() + basis.eval_derivative(k, 1.0).unwrap();
            assert_abs_diff_eq!(b.coefficients()[k], -outward, epsilon = 1e-12);
        }
        // linear growth along the non-zero modes
        let op = SpectralOperator::dirichlet_laplacian_1d(41).unwrap();
        let b = dirichlet_control(&op).unwrap();
        for k in (0..41).step_by(2) {
            let n = (k + 1) as f64;
            assert_abs_diff_eq!(b.coefficients()[k] / n, c, epsilon = 1e-10);
        }
    }

    #[test]
    fn basis_mismatch_is_rejected() {
        let n = SpectralOperator::neumann_laplacian_1d(1.0, 4).unwrap();
        let d = SpectralOperator::dirichlet_laplacian_1d(4).unwrap();
        assert!(matches!(dirichlet_control(&n), Err(LabError::BasisMismatch(_))));
        assert!(matches!(neumann_control(&d), Err(LabError::BasisMismatch(_))));
        assert!(pathological_control(&d).is_err());
    }

    #[test]
    fn pathological_coefficients() {
        let op = SpectralOperator::new((1..=3).map(|n| -(2f64).powi(n)).collect()).unwrap();
        let b = pathological_control(&op).unwrap();
        assert_abs_diff_eq!(b.coefficients()[0], -2.0);
        assert_abs_diff_eq!(b.coefficients()[1], -2.0);
        assert_abs_diff_eq!(b.coefficients()[2], -8.0 / 3.0, epsilon = 1e-15);

        let op = SpectralOperator::new((1..=30).map(|n| -(2f64).powi(n)).collect()).unwrap();
        let b = pathological_control(&op).unwrap();
        for (k, (bk, l)) in b.coefficients().iter().zip(op.eigenvalues()).enumerate() {
            assert_abs_diff_eq!(bk.abs() / l.abs(), 1.0 / (k + 1) as f64, epsilon = 1e-15);
        }
    }

    #[test]
    fn adjoint_pairing_examples() {
        let op = SpectralOperator::neumann_laplacian_1d(1.0, 8).unwrap();
        let b = neumann_control(&op).unwrap();
        assert_eq!(adjoint_pairing(&b, &StateVector::unit(8, 0, 1.0)).unwrap(), 2.0);
        assert_eq!(adjoint_pairing(&b, &StateVector::zeros(8)).unwrap(), 0.0);
        assert!(adjoint_pairing(&b, &StateVector::zeros(7)).is_err());
    }

    #[test]
    fn adjoint_pairing_equals_endpoint_trace() {
        let op = SpectralOperator::neumann_laplacian_1d(1.0, 12).unwrap();
        let b = neumann_control(&op).unwrap();
        let psi = StateVector::new((0..12).map(|k| ((k * 7 % 5) as f64 - 2.0) * 0.3).collect());
        let g = op.synthesize(&psi, 64).unwrap();
        let trace = g.values[0] + g.values[63];
        assert_abs_diff_eq!(adjoint_pairing(&b, &psi).unwrap(), trace, epsilon = 1e-8);
    }

    #[test]
    fn coefficients_do_not_depend_on_the_lifting() {
        let op = SpectralOperator::neumann_laplacian_1d(1.0, 10).unwrap();
        let reference = neumann_control(&op).unwrap();
        // (ξ - 1/2)²: g'(0) = -1, g'(1) = 1
        let poly = control_from_lifting(&op, 1.0, |x| (x - 0.5).powi(2), |_| 2.0).unwrap();
        // cosh(c(ξ - 1/2)) / (c sinh(c/2)) with the same flux
        let c = 3.0_f64;
        let s = c * (c / 2.0).sinh();
        let cosh =
            control_from_lifting(&op, 1.0, |x| (c * (x - 0.5)).cosh() / s, |x| c * c * (c * (x - 0.5)).cosh() / s)
                .unwrap();
        for k in 0..10 {
            assert_abs_diff_eq!(poly.coefficients()[k], reference.coefficients()[k], epsilon = 1e-8);
            assert_abs_diff_eq!(cosh.coefficients()[k], reference.coefficients()[k], epsilon = 1e-8);
        }

        let op = SpectralOperator::dirichlet_laplacian_1d(10).unwrap();
        let reference = dirichlet_control(&op).unwrap();
        let flat = control_from_lifting(&op, 0.0, |_| 1.0, |_| 0.0).unwrap();
        let bump = control_from_lifting(&op, 0.0, |x| 1.0 + (PI * x).sin(), |x| -PI * PI * (PI * x).sin()).unwrap();
        for k in 0..10 {
            assert_abs_diff_eq!(flat.coefficients()[k], reference.coefficients()[k], epsilon = 1e-8);
            assert_abs_diff_eq!(bump.coefficients()[k], reference.coefficients()[k], epsilon = 1e-8);
        }
    }

    #[test]
    fn classify_rejects_bad_input() {
        let op = SpectralOperator::new(vec![0.0, -1.0, -2.0, -3.0]).unwrap();
        let b = ControlOperator::custom(vec![1.0; 4]).unwrap();
        assert!(classify_regularity(&op, &b, &[0.5]).is_err());
        let op = op.shift(-1.0);
        assert!(classify_regularity(&op, &b, &[0.0]).is_err());
        assert!(classify_regularity(&op, &b, &[1.5]).is_err());
        assert!(classify_regularity(&op, &b, &[0.5]).is_ok());
    }

    #[test]
    fn bounded_input_operator_is_fully_regular() {
        let op = SpectralOperator::neumann_laplacian_1d(1.0, 1024).unwrap();
        let b = ControlOperator::custom((0..1024).map(|k| 1.0 / (k + 1) as f64).collect()).unwrap();
        let report = classify_regularity(&op, &b, &default_alpha_grid()).unwrap();
        assert_eq!(report.alpha_critical, 1.0);
        assert_eq!(report.q_critical, 1.0);
    }

    #[test]
    fn pathological_system_has_no_regular_order() {
        let op = SpectralOperator::new((1..=20).map(|n| -(2f64).powi(n)).collect()).unwrap();
        let b = pathological_control(&op).unwrap();
        let grid: Vec<f64> = (1..=10).map(|i| i as f64 / 10.0).collect();
        let report = classify_regularity(&op, &b, &grid).unwrap();
        for row in &report.rows {
            assert_eq!(row.verdict, Verdict::Diverging, "alpha {}", row.alpha);
        }
        assert_eq!(report.alpha_critical, 0.0);
        assert!(report.q_critical.is_infinite());
    }

    #[test]
    fn partial_sums_are_monotone() {
        let op = SpectralOperator::dirichlet_laplacian_1d(256).unwrap();
        let b = dirichlet_control(&op).unwrap();
        let report = classify_regularity(&op, &b, &default_alpha_grid()).unwrap();
        for row in &report.rows {
            assert!(row.partial_sums.windows(2).all(|w| w[0] <= w[1]));
            assert!(row.partial_sums[0] >= 0.0);
        }
        for pair in report.rows.windows(2) {
            for i in 0..3 {
                assert!(pair[0].partial_sums[i] <= pair[1].partial_sums[i]);
            }
        }
    }
}
