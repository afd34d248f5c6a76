//! Piecewise-constant scalar input signals and their time norms.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, LabError, Result};
use crate::rng::LabRng;

/// `u(t) = values[k]` on `[breakpoints[k], breakpoints[k+1])`, zero from the
/// last breakpoint on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputSignal {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

impl InputSignal {
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if breakpoints.first() != Some(&0.0) {
            return invalid("breakpoints must start at t = 0");
        }
        if breakpoints.len() != values.len() + 1 {
            return invalid(format!(
                "{} breakpoints need {} values, got {}",
                breakpoints.len(),
                breakpoints.len().saturating_sub(1),
                values.len()
            ));
        }
        if breakpoints.windows(2).any(|w| !(w[1] > w[0])) || breakpoints.iter().any(|t| !t.is_finite()) {
            return invalid("breakpoints must be finite and strictly increasing");
        }
        if values.iter().any(|v| !v.is_finite()) {
            return invalid("input values must be finite");
        }
        Ok(Self { breakpoints, values })
    }

    /// The zero signal.
    pub fn zero() -> Self {
        Self { breakpoints: vec![0.0], values: vec![] }
    }

    /// `u ≡ c` on `[0, horizon)`.
    pub fn constant(c: f64, horizon: f64) -> Result<Self> {
        Self::new(vec![0.0, horizon], vec![c])
    }

    /// `K` equal intervals on `[0, horizon)` with values uniform in `[-amplitude, amplitude)`.
    pub fn random_piecewise(k: usize, amplitude: f64, horizon: f64, rng: &mut LabRng) -> Result<Self> {
        if k == 0 {
            return invalid("random input needs at least one interval");
        }
        let breakpoints = (0..=k).map(|i| horizon * i as f64 / k as f64).collect();
        let values = (0..k).map(|_| rng.uniform(-amplitude, amplitude)).collect();
        Self::new(breakpoints, values)
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// End of the support.
    pub fn horizon(&self) -> f64 {
        *self.breakpoints.last().unwrap()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == 0.0)
    }

    /// Value at `t` (right-open intervals).
    pub fn value_at(&self, t: f64) -> f64 {
        if t < 0.0 || t >= self.horizon() {
            return 0.0;
        }
        let k = self.breakpoints.partition_point(|b| *b <= t) - 1;
        self.values[k]
    }

    /// Iterator over `(start, end, value)` pieces.
    pub fn pieces(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.breakpoints.windows(2).zip(&self.values).map(|(w, v)| (w[0], w[1], *v))
    }

    /// Exact `∫_a^b u`.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        self.pieces()
            .map(|(s, e, v)| {
                let lo = s.max(a);
                let hi = e.min(b);
                if hi > lo {
                    v * (hi - lo)
                } else {
                    0.0
                }
            })
            .sum()
    }

    /// `u(s + ·)` on `[0, ∞)`.
    pub fn shifted(&self, s: f64) -> Self {
        if s >= self.horizon() {
            return Self::zero();
        }
        let mut breakpoints = vec![0.0];
        let mut values = Vec::new();
        for (_, b, v) in self.pieces() {
            if b > s {
                values.push(v);
                breakpoints.push(b - s);
            }
        }
        Self { breakpoints, values }
    }

    /// `u` on `[0, t)`, zero afterwards.
    pub fn truncated(&self, t: f64) -> Self {
        if t <= 0.0 {
            return Self::zero();
        }
        let mut breakpoints = vec![0.0];
        let mut values = Vec::new();
        for (_, b, v) in self.pieces() {
            values.push(v);
            if b >= t {
                breakpoints.push(t);
                break;
            }
            breakpoints.push(b);
        }
        Self { breakpoints, values }
    }

    /// Same signal with `value` appended on `[horizon, horizon + length)`.
    pub fn extended(&self, length: f64, value: f64) -> Result<Self> {
        let mut b = self.breakpoints.clone();
        let mut v = self.values.clone();
        b.push(self.horizon() + length);
        v.push(value);
        Self::new(b, v)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { breakpoints: self.breakpoints.clone(), values: self.values.iter().map(|v| v * factor).collect() }
    }

    /// Writes `t_k,value` rows; the final row marks the end of the support.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t_k,value")?;
        for (a, _, v) in self.pieces() {
            writeln!(w, "{a:.16e},{v:.16e}")?;
        }
        writeln!(w, "{:.16e},{:.16e}", self.horizon(), 0.0)
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut times = Vec::new();
        let mut values = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line = line.map_err(|e| LabError::InvalidArgument(e.to_string()))?;
            let line = line.trim();
            if line.is_empty() || (i == 0 && line.starts_with('t')) {
                continue;
            }
            let mut parts = line.split(',');
            let parse = |s: Option<&str>| -> Result<f64> {
                s.and_then(|s| s.trim().parse().ok())
                    .ok_or_else(|| LabError::InvalidArgument(format!("line {}: expected `t_k,value`", i + 1)))
            };
            times.push(parse(parts.next())?);
            values.push(parse(parts.next())?);
        }
        if times.is_empty() {
            return Ok(Self::zero());
        }
        values.pop();
        Self::new(times, values)
    }
}

/// `‖u‖_{L^q(0,t)}` in closed form; `q = ∞` is the largest `|u_k|` over pieces
/// meeting `[0, t)`.
pub fn lq_norm(u: &InputSignal, q: f64, t: f64) -> Result<f64> {
    if !(q >= 1.0) {
        return invalid(format!("L^q exponent must be at least 1, got {q}"));
    }
    if !(t >= 0.0) {
        return invalid(format!("window end must be non-negative, got {t}"));
    }
    let pieces = u.pieces().filter(|(a, _, _)| *a < t).map(|(a, b, v)| (b.min(t) - a, v.abs()));
    if q.is_infinite() {
        return Ok(pieces.map(|(_, v)| v).fold(0.0, f64::max));
    }
    let sum: f64 = pieces.map(|(d, v)| v.powf(q) * d).sum();
    Ok(sum.powf(1.0 / q))
}
