//! Diagonal self-adjoint generators and their functional calculus.
//!
//! An operator is stored as its eigenvalue sequence (non-increasing) together
//! with a tag naming the orthonormal eigenbasis. The 1-D Laplacians on (0,1)
//! carry an explicit cosine or sine basis, which lets states move between
//! coefficient space and a physical grid through [`Collocation`].

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, LabError, Result};

/// Eigenbasis attached to a [`SpectralOperator`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Basis {
    /// `1, √2 cos(nπξ)` for `n = 0, 1, ...`
    NeumannCos,
    /// `√2 sin(nπξ)` for `n = 1, 2, ...`
    DirichletSin,
    /// No physical realisation; coefficients only.
    Abstract,
}

impl Basis {
    /// Spatial wavenumber of the `k`-th basis function.
    pub fn wavenumber(self, k: usize) -> usize {
        match self {
            Basis::NeumannCos | Basis::Abstract => k,
            Basis::DirichletSin => k + 1,
        }
    }

    /// Value of the `k`-th eigenfunction at `xi`. `None` for the abstract basis.
    pub fn eval(self, k: usize, xi: f64) -> Option<f64> {
        match self {
            Basis::NeumannCos if k == 0 => Some(1.0),
            Basis::NeumannCos => Some(SQRT_2 * (k as f64 * PI * xi).cos()),
            Basis::DirichletSin => Some(SQRT_2 * ((k + 1) as f64 * PI * xi).sin()),
            Basis::Abstract => None,
        }
    }

    /// Spatial derivative of the `k`-th eigenfunction at `xi`.
    pub fn eval_derivative(self, k: usize, xi: f64) -> Option<f64> {
        match self {
            Basis::NeumannCos => {
                let w = k as f64 * PI;
                Some(-SQRT_2 * w * (w * xi).sin())
            }
            Basis::DirichletSin => {
                let w = (k + 1) as f64 * PI;
                Some(SQRT_2 * w * (w * xi).cos())
            }
            Basis::Abstract => None,
        }
    }
}

/// Diagonal generator `A e_n = λ_n e_n` with `λ_0 ≥ λ_1 ≥ ...`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralOperator {
    eigenvalues: Vec<f64>,
    basis: Basis,
    shift: f64,
}

/// Coefficient vector of a state, tagged with the index of its canonical `X_α` norm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    pub coefficients: Vec<f64>,
    pub space_index: f64,
}

/// Samples of a state on `M` equispaced points `ξ_m = m/(M-1)` of `[0,1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridField {
    pub values: Vec<f64>,
    pub basis: Basis,
}

impl StateVector {
    pub fn new(coefficients: Vec<f64>) -> Self {
        Self { coefficients, space_index: 0.0 }
    }

    pub fn zeros(n: usize) -> Self {
        Self::new(vec![0.0; n])
    }

    /// `amplitude · e_k` in an `n`-mode space.
    pub fn unit(n: usize, k: usize, amplitude: f64) -> Self {
        let mut c = vec![0.0; n];
        c[k] = amplitude;
        Self::new(c)
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    /// ℓ² norm of the coefficients, which is the `X` norm by Parseval.
    pub fn norm(&self) -> f64 {
        l2(&self.coefficients)
    }

    pub fn dot(&self, other: &StateVector) -> f64 {
        self.coefficients.iter().zip(&other.coefficients).map(|(a, b)| a * b).sum()
    }
}

impl GridField {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn points(&self) -> Vec<f64> {
        grid_points(self.values.len())
    }

    /// `L²(0,1)` norm by composite trapezoid quadrature.
    pub fn l2_norm(&self) -> f64 {
        let w = trapezoid_weights(self.values.len());
        self.values.iter().zip(&w).map(|(v, w)| w * v * v).sum::<f64>().sqrt()
    }
}

pub(crate) fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Equispaced grid `ξ_m = m/(M-1)`, `m = 0..M`.
pub fn grid_points(m: usize) -> Vec<f64> {
    let d = 1.0 / (m - 1) as f64;
    (0..m).map(|i| i as f64 * d).collect()
}

/// Composite trapezoid weights on [`grid_points`].
pub fn trapezoid_weights(m: usize) -> Vec<f64> {
    let d = 1.0 / (m - 1) as f64;
    let mut w = vec![d; m];
    w[0] = 0.5 * d;
    w[m - 1] = 0.5 * d;
    w
}

fn check_finite(values: &[f64]) -> Result<()> {
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return invalid(format!("non-finite eigenvalue {v}"));
    }
    Ok(())
}

impl SpectralOperator {
    /// Diagonal operator on an abstract basis. The eigenvalues are stored sorted
    /// in non-increasing order.
    pub fn new(eigenvalues: Vec<f64>) -> Result<Self> {
        if eigenvalues.is_empty() {
            return invalid("eigenvalue sequence is empty");
        }
        check_finite(&eigenvalues)?;
        let mut eigenvalues = eigenvalues;
        eigenvalues.sort_by(|a, b| b.total_cmp(a));
        Ok(Self { eigenvalues, basis: Basis::Abstract, shift: 0.0 })
    }

    /// `x'' - a x` on (0,1) with homogeneous Neumann conditions, `N` cosine modes.
    pub fn neumann_laplacian_1d(a: f64, n: usize) -> Result<Self> {
        if !(a > 0.0) || !a.is_finite() {
            return invalid(format!("reaction coefficient a must be positive, got {a}"));
        }
        if n == 0 {
            return invalid("mode count must be at least 1");
        }
        let eigenvalues = (0..n).map(|k| -(k as f64 * PI).powi(2) - a).collect();
        Ok(Self { eigenvalues, basis: Basis::NeumannCos, shift: 0.0 })
    }

    /// `x''` on (0,1) with homogeneous Dirichlet conditions, `N` sine modes.
    pub fn dirichlet_laplacian_1d(n: usize) -> Result<Self> {
        if n == 0 {
            return invalid("mode count must be at least 1");
        }
        let eigenvalues = (1..=n).map(|k| -(k as f64 * PI).powi(2)).collect();
        Ok(Self { eigenvalues, basis: Basis::DirichletSin, shift: 0.0 })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    /// Accumulated shift applied through [`SpectralOperator::shift`].
    pub fn total_shift(&self) -> f64 {
        self.shift
    }

    /// Growth bound `ω_A`, the largest eigenvalue.
    pub fn growth_bound(&self) -> f64 {
        self.eigenvalues[0]
    }

    /// Same operator truncated to its first `n` modes.
    pub fn truncate(&self, n: usize) -> Result<Self> {
        if n == 0 || n > self.len() {
            return invalid(format!("cannot truncate {} modes to {n}", self.len()));
        }
        Ok(Self { eigenvalues: self.eigenvalues[..n].to_vec(), ..self.clone() })
    }

    fn check_len(&self, x: &StateVector) -> Result<()> {
        if x.len() != self.len() {
            return Err(LabError::DimensionMismatch { expected: self.len(), got: x.len() });
        }
        Ok(())
    }

    pub fn require_strictly_negative(&self) -> Result<()> {
        if self.growth_bound() >= 0.0 {
            return Err(LabError::NotStrictlyNegative { max_eigenvalue: self.growth_bound() });
        }
        Ok(())
    }

    /// `T(t)x`, coefficient-wise `x_n e^{λ_n t}`.
    pub fn semigroup_apply(&self, t: f64, x: &StateVector) -> Result<StateVector> {
        if !(t >= 0.0) {
            return invalid(format!("semigroup time must be non-negative, got {t}"));
        }
        self.check_len(x)?;
        let coefficients = self.eigenvalues.iter().zip(&x.coefficients).map(|(l, c)| (l * t).exp() * c).collect();
        Ok(StateVector { coefficients, space_index: x.space_index })
    }

    /// `(-A)^α x`. The result is canonically measured in `X_{s-α}`.
    pub fn fractional_apply(&self, alpha: f64, x: &StateVector) -> Result<StateVector> {
        self.require_strictly_negative()?;
        if !(-1.0..=1.0).contains(&alpha) {
            return invalid(format!("fractional order must lie in [-1, 1], got {alpha}"));
        }
        self.check_len(x)?;
        let coefficients = self.eigenvalues.iter().zip(&x.coefficients).map(|(l, c)| (-l).powf(alpha) * c).collect();
        Ok(StateVector { coefficients, space_index: x.space_index - alpha })
    }

    /// Homogeneous `X_α` norm `‖(-A)^α x‖`.
    pub fn space_norm(&self, alpha: f64, x: &StateVector) -> Result<f64> {
        Ok(self.fractional_apply(alpha, x)?.norm())
    }

    /// `A + ε I`.
    pub fn shift(&self, eps: f64) -> SpectralOperator {
        SpectralOperator {
            eigenvalues: self.eigenvalues.iter().map(|l| l + eps).collect(),
            basis: self.basis,
            shift: self.shift + eps,
        }
    }

    /// Point evaluation of the series `Σ x_n φ_n(ξ)`.
    pub fn evaluate(&self, x: &StateVector, xi: f64) -> Result<f64> {
        self.check_len(x)?;
        self.require_physical()?;
        Ok(x.coefficients.iter().enumerate().map(|(k, c)| c * self.basis.eval(k, xi).unwrap_or(0.0)).sum())
    }

    fn require_physical(&self) -> Result<()> {
        if self.basis == Basis::Abstract {
            return Err(LabError::BasisMismatch("abstract basis has no physical-space realisation".into()));
        }
        Ok(())
    }

    /// Cached basis tables for repeated grid transforms.
    pub fn collocation(&self, m: usize) -> Result<Collocation> {
        Collocation::new(self.basis, self.len(), m)
    }

    pub fn synthesize(&self, x: &StateVector, m: usize) -> Result<GridField> {
        self.check_len(x)?;
        Ok(self.collocation(m)?.synthesize(&x.coefficients))
    }

    pub fn analyze(&self, g: &GridField) -> Result<StateVector> {
        if g.basis != self.basis {
            return Err(LabError::BasisMismatch(format!(
                "grid field tagged {:?}, operator basis {:?}",
                g.basis, self.basis
            )));
        }
        Ok(StateVector::new(self.collocation(g.len())?.analyze(&g.values)))
    }
}

/// Eigenfunction values and quadrature weights on an `M`-point grid.
///
/// Trapezoid quadrature integrates products of two basis functions of the
/// first `N` modes exactly when `M ≥ N + 2`, so `analyze ∘ synthesize` is the
/// identity up to rounding.
#[derive(Clone, Debug)]
pub struct Collocation {
    basis: Basis,
    modes: usize,
    points: usize,
    // row-major: table[m * modes + k] = φ_k(ξ_m)
    table: Vec<f64>,
    derivative: Vec<f64>,
    weights: Vec<f64>,
}

impl Collocation {
    pub fn new(basis: Basis, modes: usize, points: usize) -> Result<Self> {
        if basis == Basis::Abstract {
            return Err(LabError::BasisMismatch("abstract basis has no physical-space realisation".into()));
        }
        if points < modes + 2 {
            return invalid(format!(
                "grid of {points} points cannot resolve {modes} modes (need at least {})",
                modes + 2
            ));
        }
        let xs = grid_points(points);
        let mut table = Vec::with_capacity(points * modes);
        let mut derivative = Vec::with_capacity(points * modes);
        for &xi in &xs {
            for k in 0..modes {
                table.push(basis.eval(k, xi).unwrap_or(0.0));
                derivative.push(basis.eval_derivative(k, xi).unwrap_or(0.0));
            }
        }
        Ok(Self { basis, modes, points, table, derivative, weights: trapezoid_weights(points) })
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    fn expand(&self, table: &[f64], coefficients: &[f64]) -> Vec<f64> {
        table.chunks_exact(self.modes).map(|row| row.iter().zip(coefficients).map(|(p, c)| p * c).sum()).collect()
    }

    pub fn synthesize(&self, coefficients: &[f64]) -> GridField {
        GridField { values: self.expand(&self.table, coefficients), basis: self.basis }
    }

    /// Samples of `∂x/∂ξ`.
    pub fn synthesize_derivative(&self, coefficients: &[f64]) -> Vec<f64> {
        self.expand(&self.derivative, coefficients)
    }

    pub fn analyze(&self, values: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.modes];
        for ((row, w), v) in self.table.chunks_exact(self.modes).zip(&self.weights).zip(values) {
            let wv = w * v;
            for (o, p) in out.iter_mut().zip(row) {
                *o += wv * p;
            }
        }
        out
    }

    /// Trapezoid inner product of two grid functions.
    pub fn inner(&self, f: &[f64], g: &[f64]) -> f64 {
        self.weights.iter().zip(f).zip(g).map(|((w, a), b)| w * a * b).sum()
    }
}
