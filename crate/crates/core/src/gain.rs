//! Worst-case input-to-state gains over piecewise-constant inputs.
//!
//! On a time grid `0 = t_0 < ... < t_K = t0`, the map from cell values `u_k`
//! to `x(t0)` is the matrix `m_{n,k} = b_n φ₁(λ_n h_k) h_k e^{λ_n(t0 - t_{k+1})}`.
//! Gains are lower bounds on the operator norm from `L^q(0,t0)` to `X`.

use rayon::prelude::*;
use serde::ser::SerializeMap;
use serde::{Deserialize, Serialize, Serializer};

use crate::boundary::{dirichlet_control, neumann_control, pathological_control, ControlOperator};
use crate::error::{invalid, LabError, Result};
use crate::metrics::exponent_serde;
use crate::rng::LabRng;
use crate::signal::InputSignal;
use crate::solver::{phi1, solve_linear};
use crate::spectral::{l2, SpectralOperator, StateVector};

/// Dense storage limit for the gain matrix; larger problems are matrix-free.
pub const DENSE_LIMIT: usize = 1 << 22;

pub const POWER_TOL: f64 = 1e-10;
pub const POWER_MAX_ITER: usize = 10_000;
pub const SEEDS: usize = 8;
pub const DEFAULT_BUDGET: usize = 300;
/// Divergence threshold on `gain(N_max)/gain(N_min)`.
pub const DIVERGENCE_FACTOR: f64 = 2.0;

/// Cells of a piecewise-constant input on `[0, t0]`.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeGrid {
    breakpoints: Vec<f64>,
}

impl TimeGrid {
    pub fn uniform(t0: f64, cells: usize) -> Result<Self> {
        if !(t0 > 0.0) || cells == 0 {
            return invalid("time grid needs t0 > 0 and at least one cell");
        }
        let mut breakpoints: Vec<f64> = (0..=cells).map(|k| t0 * k as f64 / cells as f64).collect();
        breakpoints[cells] = t0;
        Ok(Self { breakpoints })
    }

    /// Cell widths growing geometrically away from `t0`, the finest being
    /// about `finest` (rescaled so the cells fill `[0, t0]`).
    pub fn graded(t0: f64, finest: f64, cells: usize) -> Result<Self> {
        if !(t0 > 0.0) || !(finest > 0.0) || cells < 2 {
            return invalid("graded grid needs t0 > 0, finest > 0 and at least two cells");
        }
        if finest * cells as f64 >= t0 {
            return Self::uniform(t0, cells);
        }
        let ratio = (t0 / finest).powf(1.0 / (cells - 1) as f64);
        let widths: Vec<f64> = (0..cells).map(|k| finest * ratio.powi(k as i32)).collect();
        let total: f64 = widths.iter().sum();
        let mut breakpoints = vec![t0];
        let mut t = t0;
        for w in &widths {
            t -= w * t0 / total;
            breakpoints.push(t);
        }
        breakpoints.reverse();
        breakpoints[0] = 0.0;
        Ok(Self { breakpoints })
    }

    /// Graded grid resolving the fastest mode of `op`: finest cell
    /// `0.05/|λ_min|`, 300 cells.
    pub fn for_operator(op: &SpectralOperator, t0: f64) -> Result<Self> {
        let fastest = -op.eigenvalues()[op.len() - 1];
        Self::graded(t0, 0.05 / fastest.max(1.0), 300)
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn end(&self) -> f64 {
        *self.breakpoints.last().unwrap()
    }

    pub fn cells(&self) -> usize {
        self.breakpoints.len() - 1
    }

    pub fn widths(&self) -> Vec<f64> {
        self.breakpoints.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn signal(&self, values: Vec<f64>) -> Result<InputSignal> {
        InputSignal::new(self.breakpoints.clone(), values)
    }
}

/// The input-to-final-state matrix, dense when it fits in [`DENSE_LIMIT`].
pub struct GainMatrix {
    lambda: Vec<f64>,
    b: Vec<f64>,
    grid: TimeGrid,
    dense: Option<Vec<f64>>,
}

impl GainMatrix {
    pub fn new(op: &SpectralOperator, b: &ControlOperator, grid: &TimeGrid) -> Result<Self> {
        op.require_strictly_negative()?;
        if b.len() != op.len() {
            return Err(LabError::DimensionMismatch { expected: op.len(), got: b.len() });
        }
        let mut m =
            Self { lambda: op.eigenvalues().to_vec(), b: b.coefficients().to_vec(), grid: grid.clone(), dense: None };
        let (rows, cols) = (m.rows(), m.cols());
        if rows * cols <= DENSE_LIMIT {
            let mut data = vec![0.0; rows * cols];
            for n in 0..rows {
                for k in 0..cols {
                    data[n * cols + k] = m.entry(n, k);
                }
            }
            m.dense = Some(data);
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.lambda.len()
    }

    pub fn cols(&self) -> usize {
        self.grid.cells()
    }

    pub fn entry(&self, n: usize, k: usize) -> f64 {
        if let Some(d) = &self.dense {
            return d[n * self.cols() + k];
        }
        let t = self.grid.breakpoints();
        let h = t[k + 1] - t[k];
        let l = self.lambda[n];
        self.b[n] * phi1(l * h) * h * (l * (self.grid.end() - t[k + 1])).exp()
    }

    /// `M diag(s) v`.
    fn apply(&self, scale: &[f64], v: &[f64]) -> Vec<f64> {
        let cols = self.cols();
        (0..self.rows())
            .map(|n| match &self.dense {
                Some(d) => d[n * cols..(n + 1) * cols].iter().zip(scale).zip(v).map(|((m, s), x)| m * s * x).sum(),
                None => (0..cols).map(|k| self.entry(n, k) * scale[k] * v[k]).sum(),
            })
            .collect()
    }

    /// `diag(s) Mᵀ y`.
    fn apply_t(&self, scale: &[f64], y: &[f64]) -> Vec<f64> {
        let cols = self.cols();
        let mut out = vec![0.0; cols];
        for (n, yn) in y.iter().enumerate() {
            if *yn == 0.0 {
                continue;
            }
            match &self.dense {
                Some(d) => {
                    for (o, m) in out.iter_mut().zip(&d[n * cols..(n + 1) * cols]) {
                        *o += m * yn;
                    }
                }
                None => {
                    for (k, o) in out.iter_mut().enumerate() {
                        *o += self.entry(n, k) * yn;
                    }
                }
            }
        }
        out.iter_mut().zip(scale).for_each(|(o, s)| *o *= s);
        out
    }

    /// Column scaling `h_k^{-1/q}` turning the `L^q` ball into the unit
    /// `ℓ^q` ball.
    fn scaling(&self, q: f64) -> Vec<f64> {
        self.grid.widths().iter().map(|h| if q.is_infinite() { 1.0 } else { h.powf(-1.0 / q) }).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GainEstimate {
    pub gain: f64,
    pub witness: InputSignal,
    pub iterations: usize,
    /// `false` when power iteration hit its cap (nearly degenerate top singular values).
    pub converged: bool,
}

/// Largest singular value of the weighted gain matrix by power iteration on
/// `A Aᵀ`, and the top right singular vector as witness.
pub fn estimate_gain_l2(op: &SpectralOperator, b: &ControlOperator, grid: &TimeGrid) -> Result<GainEstimate> {
    let m = GainMatrix::new(op, b, grid)?;
    gain_l2(&m)
}

fn gain_l2(m: &GainMatrix) -> Result<GainEstimate> {
    let s = m.scaling(2.0);
    let norm_b = l2(&m.b);
    if norm_b == 0.0 {
        return Ok(GainEstimate {
            gain: 0.0,
            witness: m.grid.signal(vec![0.0; m.cols()])?,
            iterations: 0,
            converged: true,
        });
    }
    let mut y: Vec<f64> = m.b.iter().map(|v| v / norm_b).collect();
    let mut sigma2 = 0.0;
    let mut converged = false;
    let mut iterations = 0;
    for it in 1..=POWER_MAX_ITER {
        iterations = it;
        let z = m.apply(&s, &m.apply_t(&s, &y));
        let next = l2(&z);
        if next == 0.0 {
            break;
        }
        y = z.into_iter().map(|v| v / next).collect();
        let done = (next - sigma2).abs() <= POWER_TOL * next;
        sigma2 = next;
        if done {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!("power iteration did not converge in {POWER_MAX_ITER} iterations");
    }
    let v = m.apply_t(&s, &y);
    let nv = l2(&v);
    let v: Vec<f64> = v.into_iter().map(|x| x / nv).collect();
    let gain = l2(&m.apply(&s, &v));
    let values = v.iter().zip(&s).map(|(x, s)| x * s).collect();
    Ok(GainEstimate { gain, witness: m.grid.signal(values)?, iterations, converged })
}

/// Euclidean projection onto `{Σ|v_k|^q ≤ 1}`.
pub fn project_lq_ball(z: &[f64], q: f64) -> Vec<f64> {
    let size = |v: &[f64]| -> f64 {
        if q.is_infinite() {
            v.iter().fold(0.0, |m: f64, x| m.max(x.abs()))
        } else {
            v.iter().map(|x| x.abs().powf(q)).sum()
        }
    };
    if size(z) <= 1.0 {
        return z.to_vec();
    }
    if q.is_infinite() {
        return z.iter().map(|x| x.clamp(-1.0, 1.0)).collect();
    }
    if q == 1.0 {
        // soft threshold at the level where the ℓ¹ norm is 1
        let shrink = |tau: f64| z.iter().map(|x| x.signum() * (x.abs() - tau).max(0.0)).collect::<Vec<_>>();
        let (mut lo, mut hi) = (0.0, z.iter().fold(0.0, |m: f64, x| m.max(x.abs())));
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if size(&shrink(mid)) > 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        return shrink(hi);
    }
    // v_k solves v + μ q v^{q-1} = |z_k| for a multiplier μ fixed by Σ v^q = 1
    let solve = |mu: f64| -> Vec<f64> {
        z.iter()
            .map(|x| {
                let target = x.abs();
                if target == 0.0 {
                    return 0.0;
                }
                let (mut lo, mut hi) = (0.0, target);
                for _ in 0..100 {
                    let mid = 0.5 * (lo + hi);
                    if mid + mu * q * mid.powf(q - 1.0) > target {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                    if hi - lo <= 1e-15 * target {
                        break;
                    }
                }
                x.signum() * lo
            })
            .collect()
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    while size(&solve(hi)) > 1.0 {
        hi *= 2.0;
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if size(&solve(mid)) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * hi {
            break;
        }
    }
    solve(hi)
}

/// Maximiser of `⟨z, v⟩` over the unit `ℓ^q` ball.
fn dual_vertex(z: &[f64], q: f64) -> Vec<f64> {
    if q.is_infinite() {
        return z.iter().map(|x| if *x == 0.0 { 0.0 } else { x.signum() }).collect();
    }
    if q == 1.0 {
        let (i, _) = z.iter().enumerate().fold((0, 0.0), |b, (i, x)| if x.abs() > b.1 { (i, x.abs()) } else { b });
        let mut v = vec![0.0; z.len()];
        v[i] = z[i].signum();
        return v;
    }
    let p = q / (q - 1.0);
    let v: Vec<f64> = z.iter().map(|x| x.signum() * x.abs().powf(p - 1.0)).collect();
    let n = v.iter().map(|x| x.abs().powf(q)).sum::<f64>().powf(1.0 / q);
    if n == 0.0 {
        return v;
    }
    v.into_iter().map(|x| x / n).collect()
}

fn normalize_to_ball(v: Vec<f64>, q: f64) -> Vec<f64> {
    let n = if q.is_infinite() {
        v.iter().fold(0.0, |m: f64, x| m.max(x.abs()))
    } else {
        v.iter().map(|x| x.abs().powf(q)).sum::<f64>().powf(1.0 / q)
    };
    if n == 0.0 {
        v
    } else {
        v.into_iter().map(|x| x / n).collect()
    }
}

/// Lower bound on the `L^q(0,t0) → X` gain by projected gradient ascent on
/// `‖x(t0)‖²` over the unit ball, each step also trying the linear-maximiser
/// vertex and keeping the better point. Runs `budget` iterations from each
/// of 8 starts (the `L²` witness, `u ≡ 1`, six random points).
pub fn estimate_gain_lq(
    op: &SpectralOperator,
    b: &ControlOperator,
    q: f64,
    grid: &TimeGrid,
    budget: usize,
    seed: u64,
) -> Result<GainEstimate> {
    if !(q >= 1.0) {
        return invalid(format!("L^q exponent must be at least 1, got {q}"));
    }
    let m = GainMatrix::new(op, b, grid)?;
    gain_lq(&m, q, budget, seed)
}

fn gain_lq(m: &GainMatrix, q: f64, budget: usize, seed: u64) -> Result<GainEstimate> {
    let l2 = gain_l2(m)?;
    if l2.gain == 0.0 {
        return Ok(l2);
    }
    let s = m.scaling(q);
    let objective = |v: &[f64]| crate::spectral::l2(&m.apply(&s, v));
    // step length from the curvature bound ‖A‖₂² of the objective
    let s2 = m.scaling(2.0);
    let curvature = s.iter().zip(&s2).map(|(a, b)| (a / b).powi(2)).fold(0.0, f64::max) * l2.gain * l2.gain;
    let step = 1.0 / curvature;

    let widths = m.grid.widths();
    let mut starts: Vec<Vec<f64>> = Vec::with_capacity(SEEDS);
    let l2_values: Vec<f64> = l2.witness.values().iter().zip(&s).map(|(u, s)| u / s).collect();
    starts.push(normalize_to_ball(l2_values, q));
    starts.push(normalize_to_ball(vec![1.0; m.cols()], q));
    for k in 0..SEEDS - 2 {
        let mut rng = LabRng::derive(seed, k as u64);
        starts.push(normalize_to_ball((0..m.cols()).map(|_| rng.uniform(-1.0, 1.0)).collect(), q));
    }

    let results: Vec<(f64, Vec<f64>)> = starts
        .into_par_iter()
        .map(|mut v| {
            let mut value = objective(&v);
            for _ in 0..budget {
                let x = m.apply(&s, &v);
                let grad = m.apply_t(&s, &x);
                let ascent: Vec<f64> = v.iter().zip(&grad).map(|(v, g)| v + step * g).collect();
                let projected = project_lq_ball(&ascent, q);
                let vertex = dual_vertex(&grad, q);
                let (pv, vv) = (objective(&projected), objective(&vertex));
                let (cand, cv) = if vv > pv { (vertex, vv) } else { (projected, pv) };
                if cv <= value * (1.0 + 1e-14) {
                    if cv > value {
                        v = cand;
                        value = cv;
                    }
                    break;
                }
                v = cand;
                value = cv;
            }
            (value, v)
        })
        .collect();
    let (gain, v) =
        results.into_iter().fold((f64::NEG_INFINITY, Vec::new()), |best, r| if r.0 > best.0 { r } else { best });
    let values: Vec<f64> = v.iter().zip(&s).map(|(x, s)| x * s).collect();
    debug_assert!(
        q.is_infinite() || values.iter().zip(&widths).map(|(u, h)| h * u.abs().powf(q)).sum::<f64>() <= 1.0 + 1e-9
    );
    Ok(GainEstimate { gain, witness: m.grid.signal(values)?, iterations: budget, converged: true })
}

/// `‖x(t0)‖` for zero initial state driven by `u`, by exact re-simulation.
pub fn simulate_final_norm(op: &SpectralOperator, b: &ControlOperator, u: &InputSignal, t0: f64) -> Result<f64> {
    let traj = solve_linear(op, b, &StateVector::zeros(op.len()), u, t0, t0)?;
    Ok(traj.final_state().norm())
}

/// Systems with a known gain ladder.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scenario", rename_all = "kebab-case")]
pub enum GainScenario {
    NeumannHeat {
        a: f64,
    },
    DirichletHeat,
    /// Dirichlet heat with states measured in `X_{-1/2}`.
    DirichletWeakState,
    Pathological,
}

impl GainScenario {
    pub fn name(&self) -> &'static str {
        match self {
            GainScenario::NeumannHeat { .. } => "neumann-heat",
            GainScenario::DirichletHeat => "dirichlet-heat",
            GainScenario::DirichletWeakState => "dirichlet-weak-state",
            GainScenario::Pathological => "pathological",
        }
    }

    /// `(A, B)` truncated to `n` modes, with `B` expressed in the scenario's
    /// state norm.
    pub fn system(&self, n: usize) -> Result<(SpectralOperator, ControlOperator)> {
        match *self {
            GainScenario::NeumannHeat { a } => {
                let op = SpectralOperator::neumann_laplacian_1d(a, n)?;
                let b = neumann_control(&op)?;
                Ok((op, b))
            }
            GainScenario::DirichletHeat => {
                let op = SpectralOperator::dirichlet_laplacian_1d(n)?;
                let b = dirichlet_control(&op)?;
                Ok((op, b))
            }
            GainScenario::DirichletWeakState => {
                let op = SpectralOperator::dirichlet_laplacian_1d(n)?;
                let b = dirichlet_control(&op)?.reweighted(&op, -0.5)?;
                Ok((op, b))
            }
            GainScenario::Pathological => {
                let op = SpectralOperator::new((1..=n).map(|k| -(2f64).powi(k as i32)).collect())?;
                let b = pathological_control(&op)?;
                Ok((op, b))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GainCell {
    #[serde(with = "exponent_serde")]
    pub q: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub gain: f64,
    pub seed: u64,
    pub witness_file: Option<String>,
    #[serde(skip)]
    pub witness: Option<InputSignal>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ExponentSummary {
    #[serde(with = "exponent_serde")]
    pub q: f64,
    /// `gain(N_max)/gain(N_min)`.
    pub ratio: f64,
    pub flagged: bool,
    /// `divergent` is sound (growing lower bounds); `bounded` is evidence only.
    pub verdict: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GainScanResult {
    pub scenario: String,
    pub t0: f64,
    pub cells: Vec<GainCell>,
    #[serde(serialize_with = "flags_as_map", deserialize_with = "flags_from_map")]
    pub flags: Vec<(f64, bool)>,
    pub summary: Vec<ExponentSummary>,
}

fn flags_as_map<S: Serializer>(flags: &[(f64, bool)], s: S) -> std::result::Result<S::Ok, S::Error> {
    let mut map = s.serialize_map(Some(flags.len()))?;
    for (q, f) in flags {
        map.serialize_entry(&exponent_serde::format(*q), f)?;
    }
    map.end()
}

fn flags_from_map<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Vec<(f64, bool)>, D::Error> {
    let raw = std::collections::BTreeMap::<String, bool>::deserialize(d)?;
    raw.into_iter()
        .map(|(k, v)| {
            exponent_serde::parse(&k)
                .map(|q| (q, v))
                .ok_or_else(|| serde::de::Error::custom(format!("invalid exponent key `{k}`")))
        })
        .collect()
}

impl GainScanResult {
    pub fn flag(&self, q: f64) -> Option<bool> {
        self.flags.iter().find(|(p, _)| *p == q).map(|(_, f)| *f)
    }

    pub fn gain(&self, q: f64, n: usize) -> Option<f64> {
        self.cells.iter().find(|c| c.q == q && c.n == n).map(|c| c.gain)
    }

    pub fn ratio(&self, q: f64) -> Option<f64> {
        self.summary.iter().find(|s| s.q == q).map(|s| s.ratio)
    }
}

/// Gain table over `(q, N)`; `q = 2` uses power iteration, other exponents
/// projected gradient ascent. Cells run in parallel and are reported in
/// `qList × NList` order.
pub fn sharpness_scan(
    scenario: GainScenario,
    q_list: &[f64],
    n_list: &[usize],
    t0: f64,
    budget: usize,
    seed: u64,
) -> Result<GainScanResult> {
    if q_list.is_empty() || n_list.is_empty() {
        return invalid("scan needs non-empty exponent and mode lists");
    }
    if let Some(q) = q_list.iter().find(|q| !(**q >= 1.0)) {
        return invalid(format!("L^q exponent must be at least 1, got {q}"));
    }
    let jobs: Vec<(usize, f64, usize)> = q_list
        .iter()
        .flat_map(|q| n_list.iter().map(move |n| (*q, *n)))
        .enumerate()
        .map(|(i, (q, n))| (i, q, n))
        .collect();
    let cells: Vec<GainCell> = jobs
        .into_par_iter()
        .map(|(i, q, n)| -> Result<GainCell> {
            let (op, b) = scenario.system(n)?;
            let grid = TimeGrid::for_operator(&op, t0)?;
            let m = GainMatrix::new(&op, &b, &grid)?;
            let cell_seed = LabRng::derive(seed, i as u64).next_u64();
            let est = if q == 2.0 { gain_l2(&m)? } else { gain_lq(&m, q, budget, cell_seed)? };
            Ok(GainCell { q, n, gain: est.gain, seed: cell_seed, witness_file: None, witness: Some(est.witness) })
        })
        .collect::<Result<_>>()?;

    let n_min = *n_list.iter().min().unwrap();
    let n_max = *n_list.iter().max().unwrap();
    let mut flags = Vec::new();
    let mut summary = Vec::new();
    for &q in q_list {
        let lookup = |n| cells.iter().find(|c| c.q == q && c.n == n).map(|c| c.gain).unwrap();
        let ratio = lookup(n_max) / lookup(n_min);
        let flagged = ratio > DIVERGENCE_FACTOR;
        flags.push((q, flagged));
        summary.push(ExponentSummary {
            q,
            ratio,
            flagged,
            verdict: if flagged { "divergent" } else { "bounded" }.into(),
        });
    }
    Ok(GainScanResult { scenario: scenario.name().into(), t0, cells, flags, summary })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn scalar() -> (SpectralOperator, ControlOperator) {
        (SpectralOperator::new(vec![-1.0]).unwrap(), ControlOperator::custom(vec![1.0]).unwrap())
    }

    #[test]
    fn scalar_gain_approaches_half_root_two() {
        let (op, b) = scalar();
        let grid = TimeGrid::uniform(20.0, 4000).unwrap();
        let est = estimate_gain_l2(&op, &b, &grid).unwrap();
        assert!(est.converged);
        assert_relative_eq!(est.gain, 0.5f64.sqrt(), max_relative = 1e-5);
        let resim = simulate_final_norm(&op, &b, &est.witness, 20.0).unwrap();
        assert_relative_eq!(resim, est.gain, max_relative = 1e-10);
    }

    #[test]
    fn graded_grid_shape() {
        let g = TimeGrid::graded(1.0, 1e-4, 100).unwrap();
        assert_eq!(g.cells(), 100);
        assert_eq!(g.breakpoints()[0], 0.0);
        assert_eq!(g.end(), 1.0);
        let w = g.widths();
        assert!(w.windows(2).all(|p| p[1] < p[0]));
        assert!(w[99] < 2e-4);
    }

    #[test]
    fn pathological_l2_gain_grows() {
        let s = GainScenario::Pathological;
        let gain = |n| {
            let (op, b) = s.system(n).unwrap();
            estimate_gain_l2(&op, &b, &TimeGrid::for_operator(&op, 1.0).unwrap()).unwrap().gain
        };
        assert!(gain(20) >= 4.0 * gain(10));
    }

    #[test]
    fn lq_matches_l2_at_two() {
        let (op, b) = GainScenario::NeumannHeat { a: 1.0 }.system(32).unwrap();
        let grid = TimeGrid::for_operator(&op, 1.0).unwrap();
        let l2 = estimate_gain_l2(&op, &b, &grid).unwrap().gain;
        let lq = estimate_gain_lq(&op, &b, 2.0, &grid, 50, 1).unwrap().gain;
        assert!((lq - l2).abs() <= 0.01 * l2);
        assert!(lq <= l2 * (1.0 + 1e-9));
    }

    #[test]
    fn linf_gain_beats_constant_input() {
        let (op, b) = GainScenario::NeumannHeat { a: 1.0 }.system(32).unwrap();
        let grid = TimeGrid::for_operator(&op, 1.0).unwrap();
        let est = estimate_gain_lq(&op, &b, f64::INFINITY, &grid, 50, 1).unwrap();
        let one = simulate_final_norm(&op, &b, &InputSignal::constant(1.0, 1.0).unwrap(), 1.0).unwrap();
        assert!(est.gain >= one * (1.0 - 1e-12));
        assert!(est.witness.values().iter().all(|v| v.abs() <= 1.0 + 1e-12));
    }

    #[test]
    fn projections_land_on_the_ball() {
        let z = vec![3.0, -1.0, 0.5, 0.0, -2.0];
        for q in [1.0, 1.25, 2.0, 3.0, f64::INFINITY] {
            let p = project_lq_ball(&z, q);
            let size = if q.is_infinite() {
                p.iter().fold(0.0, |m: f64, x| m.max(x.abs()))
            } else {
                p.iter().map(|x| x.abs().powf(q)).sum::<f64>()
            };
            assert!((size - 1.0).abs() <= 1e-9, "q = {q}: {size}");
            assert!(p.iter().zip(&z).all(|(a, b)| a * b >= 0.0));
        }
        let p2 = project_lq_ball(&z, 2.0);
        let n = l2(&z);
        for (a, b) in p2.iter().zip(&z) {
            assert_relative_eq!(*a, b / n, max_relative = 1e-9);
        }
        let inside = vec![0.1, -0.2];
        assert_eq!(project_lq_ball(&inside, 1.5), inside);
    }

    #[test]
    fn scan_json_shape() {
        let r = sharpness_scan(GainScenario::Pathological, &[2.0, f64::INFINITY], &[6, 8], 1.0, 20, 3).unwrap();
        assert_eq!(r.cells.len(), 4);
        assert_eq!((r.cells[0].q, r.cells[0].n), (2.0, 6));
        let json = serde_json::to_value(&r).unwrap();
        assert!(json["flags"].get("inf").is_some());
        assert!(json["flags"].get("2").is_some());
        assert_eq!(json["cells"][2]["q"], "inf");
        assert_eq!(json["cells"][0]["N"], 6);
        let back: GainScanResult = serde_json::from_value(json).unwrap();
        assert_eq!(back.flag(f64::INFINITY), r.flag(f64::INFINITY));
    }
}
