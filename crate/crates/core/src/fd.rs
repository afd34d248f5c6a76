//! Crank–Nicolson finite-difference reference for the 1-D heat scenarios.
//!
//! Works on the vertex grid `ξ_i = i/(M-1)`. Neumann flux enters through a
//! ghost node (`-x'(0) = x'(1) = u`), Dirichlet values are imposed directly
//! (`x(0) = x(1) = u`). States are stored as grid values.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, LabError, Result};
use crate::signal::InputSignal;
use crate::solver::{step_grid, SolverTag, Trajectory, TrajectoryMeta};
use crate::spectral::{Basis, GridField, StateVector};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scenario", rename_all = "kebab-case")]
pub enum FdScenario {
    NeumannHeat { reaction: f64 },
    DirichletHeat,
}

impl FdScenario {
    pub fn basis(self) -> Basis {
        match self {
            FdScenario::NeumannHeat { .. } => Basis::NeumannCos,
            FdScenario::DirichletHeat => Basis::DirichletSin,
        }
    }
}

/// Solves `(I - h/2 L) x = r` for tridiagonal `L` given as
/// `(sub, diag, sup)` in place of `r`.
fn thomas(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &mut [f64], scratch: &mut [f64]) {
    let n = diag.len();
    scratch[0] = sup[0] / diag[0];
    rhs[0] /= diag[0];
    for i in 1..n {
        let m = diag[i] - sub[i] * scratch[i - 1];
        if i + 1 < n {
            scratch[i] = sup[i] / m;
        }
        rhs[i] = (rhs[i] - sub[i] * rhs[i - 1]) / m;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= scratch[i] * rhs[i + 1];
    }
}

/// Discrete operator `L` and boundary source vector `s` such that
/// `x' = L x + s u` on the unknowns.
struct Stencil {
    sub: Vec<f64>,
    diag: Vec<f64>,
    sup: Vec<f64>,
    source: Vec<f64>,
}

impl Stencil {
    fn new(scenario: FdScenario, points: usize) -> Self {
        let dx = 1.0 / (points - 1) as f64;
        let inv = 1.0 / (dx * dx);
        match scenario {
            FdScenario::NeumannHeat { reaction } => {
                let n = points;
                let mut sub = vec![inv; n];
                let mut sup = vec![inv; n];
                let diag = vec![-2.0 * inv - reaction; n];
                sub[0] = 0.0;
                sup[n - 1] = 0.0;
                sup[0] = 2.0 * inv;
                sub[n - 1] = 2.0 * inv;
                let mut source = vec![0.0; n];
                source[0] = 2.0 / dx;
                source[n - 1] = 2.0 / dx;
                Self { sub, diag, sup, source }
            }
            FdScenario::DirichletHeat => {
                let n = points - 2;
                let mut sub = vec![inv; n];
                let mut sup = vec![inv; n];
                sub[0] = 0.0;
                sup[n - 1] = 0.0;
                let mut source = vec![0.0; n];
                source[0] = inv;
                source[n - 1] = inv;
                Self { sub, diag: vec![-2.0 * inv; n], sup, source }
            }
        }
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        let n = x.len();
        for i in 0..n {
            let mut v = self.diag[i] * x[i];
            if i > 0 {
                v += self.sub[i] * x[i - 1];
            }
            if i + 1 < n {
                v += self.sup[i] * x[i + 1];
            }
            out[i] = v;
        }
    }
}

/// Crank–Nicolson reference trajectory in physical space. Samples are taken
/// on the same step grid as [`crate::solver::solve_linear`].
pub fn reference_fd(
    scenario: FdScenario,
    x0: &GridField,
    u: &InputSignal,
    horizon: f64,
    points: usize,
    step: f64,
) -> Result<Trajectory> {
    if points < 32 {
        return invalid(format!("finite-difference grid needs at least 32 points, got {points}"));
    }
    if x0.len() != points {
        return Err(LabError::DimensionMismatch { expected: points, got: x0.len() });
    }
    if x0.basis != scenario.basis() {
        return Err(LabError::BasisMismatch(format!(
            "initial grid field is tagged {:?}, scenario needs {:?}",
            x0.basis,
            scenario.basis()
        )));
    }
    let dx = 1.0 / (points - 1) as f64;
    if step > 0.5 || step * 1e12 < dx * dx {
        return invalid(format!("time step {step} out of range for {points} grid points"));
    }
    let times = step_grid(horizon, step, &[u])?;
    let stencil = Stencil::new(scenario, points);
    let dirichlet = matches!(scenario, FdScenario::DirichletHeat);
    let unknowns = stencil.diag.len();

    let mut x: Vec<f64> = if dirichlet { x0.values[1..points - 1].to_vec() } else { x0.values.clone() };
    let mut states = Vec::with_capacity(times.len());
    states.push(StateVector::new(x0.values.clone()));

    let mut lx = vec![0.0; unknowns];
    let mut scratch = vec![0.0; unknowns];
    let mut lhs_diag = vec![0.0; unknowns];
    let mut lhs_sub = vec![0.0; unknowns];
    let mut lhs_sup = vec![0.0; unknowns];
    let mut current = f64::NAN;
    for w in times.windows(2) {
        let h = w[1] - w[0];
        if h != current {
            current = h;
            for i in 0..unknowns {
                lhs_diag[i] = 1.0 - 0.5 * h * stencil.diag[i];
                lhs_sub[i] = -0.5 * h * stencil.sub[i];
                lhs_sup[i] = -0.5 * h * stencil.sup[i];
            }
        }
        let v = u.value_at(0.5 * (w[0] + w[1]));
        stencil.apply(&x, &mut lx);
        for i in 0..unknowns {
            x[i] += 0.5 * h * lx[i] + h * stencil.source[i] * v;
        }
        thomas(&lhs_sub, &lhs_diag, &lhs_sup, &mut x, &mut scratch);
        let full = if dirichlet {
            let mut g = Vec::with_capacity(points);
            g.push(v);
            g.extend_from_slice(&x);
            g.push(v);
            g
        } else {
            x.clone()
        };
        states.push(StateVector::new(full));
    }
    Ok(Trajectory {
        times,
        states,
        meta: TrajectoryMeta { solver: SolverTag::CrankNicolson, step, label: "grid".into() },
    })
}
