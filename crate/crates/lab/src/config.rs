//! Strict JSON scenario configuration.

use std::fmt;
use std::path::{Path, PathBuf};

use iss_lab_core::metrics::exponent_serde;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    NeumannHeat,
    DirichletHeat,
    DirichletWeakState,
    Pathological,
    SemilinearCubic,
    SemilinearLipschitz,
    ScalarCounterexample,
}

impl ScenarioKind {
    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::NeumannHeat => "neumann-heat",
            ScenarioKind::DirichletHeat => "dirichlet-heat",
            ScenarioKind::DirichletWeakState => "dirichlet-weak-state",
            ScenarioKind::Pathological => "pathological",
            ScenarioKind::SemilinearCubic => "semilinear-cubic",
            ScenarioKind::SemilinearLipschitz => "semilinear-lipschitz",
            ScenarioKind::ScalarCounterexample => "scalar-counterexample",
        }
    }

    /// Scenarios whose gain ladder can be scanned.
    pub fn scannable(self) -> bool {
        matches!(
            self,
            ScenarioKind::NeumannHeat
                | ScenarioKind::DirichletHeat
                | ScenarioKind::DirichletWeakState
                | ScenarioKind::Pathological
        )
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// An `L^q` exponent; `"inf"` in JSON for `q = ∞`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Exponent(#[serde(with = "exponent_serde")] pub f64);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InputSpec {
    Zero,
    Constant {
        c: f64,
    },
    RandomPiecewise {
        #[serde(rename = "K")]
        k: usize,
        amplitude: f64,
    },
    File {
        path: PathBuf,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialSpec {
    Zero,
    /// `amplitude · e_index`.
    Mode {
        index: usize,
        amplitude: f64,
    },
    Coefficients {
        values: Vec<f64>,
    },
    /// Coefficients uniform in `[-amplitude, amplitude]`, damped by `1/(1+n)`.
    Random {
        amplitude: f64,
    },
}

fn default_a() -> f64 {
    1.0
}
fn default_horizon() -> f64 {
    1.0
}
fn default_h() -> f64 {
    1e-3
}
fn default_t0() -> f64 {
    1.0
}
fn default_q_list() -> Vec<Exponent> {
    vec![Exponent(2.0)]
}
fn default_input() -> InputSpec {
    InputSpec::Zero
}
fn default_x0() -> InitialSpec {
    InitialSpec::Zero
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: ScenarioKind,
    /// Reaction coefficient of the heat scenarios.
    #[serde(default = "default_a")]
    pub a: f64,
    #[serde(rename = "L_f", default, skip_serializing_if = "Option::is_none")]
    pub lipschitz: Option<f64>,
    /// Mode count; 64 by default, 1 for the scalar scenario.
    #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Physical grid points for field output and pointwise nonlinearities.
    #[serde(rename = "M", default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(rename = "T", default = "default_horizon")]
    pub horizon: f64,
    #[serde(default = "default_h")]
    pub h: f64,
    #[serde(default = "default_t0")]
    pub t0: f64,
    #[serde(rename = "qList", default = "default_q_list")]
    pub q_list: Vec<Exponent>,
    /// Mode ladder of a scan; `[64, 256, 1024]`, or `[10, 15, 20]` for the
    /// pathological spectrum.
    #[serde(rename = "NList", default, skip_serializing_if = "Option::is_none")]
    pub n_list: Option<Vec<usize>>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_input")]
    pub input: InputSpec,
    #[serde(default = "default_x0")]
    pub x0: InitialSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    /// Ascent iterations per start for `L^q` gains.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<usize>,
}

/// Line and column (1-based) of the first occurrence of `"key"` in `text`.
fn locate(text: &str, key: &str) -> Option<(usize, usize)> {
    let needle = format!("\"{key}\"");
    text.lines().enumerate().find_map(|(i, line)| line.find(&needle).map(|c| (i + 1, c + 1)))
}

impl ScenarioConfig {
    /// Parses and validates; errors carry `source:line:column`.
    pub fn parse(text: &str, source: &str) -> Result<Self, CliError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| {
            let msg = strip_position(&e.to_string());
            // tagged enums are buffered, so serde reports the end of the object
            let (line, col) = unknown_key(&msg).and_then(|k| locate(text, k)).unwrap_or((e.line(), e.column()));
            CliError::Config(format!("{source}:{line}:{col}: {msg}"))
        })?;
        cfg.validate().map_err(|(key, msg)| {
            let at = locate(text, key).map_or_else(|| format!("{source}:1:1"), |(l, c)| format!("{source}:{l}:{c}"));
            CliError::Config(format!("{at}: `{key}`: {msg}"))
        })?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: cannot read config: {e}", path.display())))?;
        let mut cfg = Self::parse(&text, &path.display().to_string())?;
        if let InputSpec::File { path: p } = &mut cfg.input {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
            if !p.is_file() {
                let at = locate(&text, "path").map_or(String::new(), |(l, c)| format!(":{l}:{c}"));
                return Err(CliError::Config(format!(
                    "{}{at}: `path`: input file {} does not exist",
                    path.display(),
                    p.display()
                )));
            }
        }
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn modes(&self) -> usize {
        match (self.n, self.scenario) {
            (Some(n), _) => n,
            (None, ScenarioKind::ScalarCounterexample) => 1,
            (None, _) => 64,
        }
    }

    pub fn ladder(&self) -> Vec<usize> {
        match (&self.n_list, self.scenario) {
            (Some(l), _) => l.clone(),
            (None, ScenarioKind::Pathological) => vec![10, 15, 20],
            (None, _) => vec![64, 256, 1024],
        }
    }

    pub fn q_values(&self) -> Vec<f64> {
        self.q_list.iter().map(|q| q.0).collect()
    }

    /// Exponent used for single-run certificates.
    pub fn certificate_exponent(&self) -> f64 {
        self.q_list.first().map_or(2.0, |q| q.0)
    }

    fn validate(&self) -> Result<(), (&'static str, String)> {
        let finite = |v: f64| v.is_finite();
        if !(finite(self.a) && self.a >= 0.0) {
            return Err(("a", format!("must be finite and non-negative, got {}", self.a)));
        }
        match (self.scenario, self.lipschitz) {
            (ScenarioKind::SemilinearLipschitz, None) => {
                return Err(("scenario", "semilinear-lipschitz needs `L_f`".into()));
            }
            (ScenarioKind::SemilinearLipschitz, Some(l)) if !(l > 0.0 && l.is_finite()) => {
                return Err(("L_f", format!("must be positive, got {l}")));
            }
            (ScenarioKind::SemilinearLipschitz, Some(_)) => {}
            (other, Some(_)) => {
                return Err(("L_f", format!("not used by scenario {other}")));
            }
            _ => {}
        }
        let n = self.modes();
        if n == 0 {
            return Err(("N", "must be at least 1".into()));
        }
        if self.scenario == ScenarioKind::Pathological && n > 40 {
            return Err(("N", format!("pathological spectrum 2^n supports at most 40 modes, got {n}")));
        }
        if self.scenario == ScenarioKind::ScalarCounterexample && n != 1 {
            return Err(("N", "the scalar counterexample has exactly one mode".into()));
        }
        if let Some(m) = self.m {
            if self.scenario == ScenarioKind::ScalarCounterexample || self.scenario == ScenarioKind::Pathological {
                return Err(("M", format!("scenario {} has no physical grid", self.scenario)));
            }
            if m < n + 2 {
                return Err(("M", format!("needs at least N + 2 = {} grid points, got {m}", n + 2)));
            }
        }
        if !(finite(self.horizon) && self.horizon > 0.0) {
            return Err(("T", format!("must be positive, got {}", self.horizon)));
        }
        if !(finite(self.h) && self.h > 0.0 && self.h <= self.horizon) {
            return Err(("h", format!("must lie in (0, T], got {}", self.h)));
        }
        if self.horizon / self.h > 1e7 {
            return Err(("h", format!("T/h = {:.3e} exceeds 1e7 steps", self.horizon / self.h)));
        }
        if !(finite(self.t0) && self.t0 > 0.0) {
            return Err(("t0", format!("must be positive, got {}", self.t0)));
        }
        if self.q_list.is_empty() {
            return Err(("qList", "must not be empty".into()));
        }
        if let Some(q) = self.q_list.iter().find(|q| !(q.0 >= 1.0)) {
            return Err(("qList", format!("exponents must be at least 1, got {}", q.0)));
        }
        let ladder = self.ladder();
        if ladder.is_empty() {
            return Err(("NList", "must not be empty".into()));
        }
        if let Some(n) = ladder.iter().find(|n| **n < 4) {
            return Err(("NList", format!("mode counts must be at least 4, got {n}")));
        }
        if self.scenario == ScenarioKind::Pathological && ladder.iter().any(|n| *n > 40) {
            return Err(("NList", "pathological spectrum supports at most 40 modes".into()));
        }
        if self.budget == Some(0) {
            return Err(("budget", "must be at least 1".into()));
        }
        match &self.input {
            InputSpec::Constant { c } if !finite(*c) => return Err(("c", "must be finite".into())),
            InputSpec::RandomPiecewise { k, .. } if *k == 0 => {
                return Err(("K", "needs at least one interval".into()));
            }
            InputSpec::RandomPiecewise { amplitude, .. } if !(finite(*amplitude) && *amplitude >= 0.0) => {
                return Err(("amplitude", "must be finite and non-negative".into()));
            }
            _ => {}
        }
        match &self.x0 {
            InitialSpec::Mode { index, amplitude } => {
                if *index >= n {
                    return Err(("index", format!("mode {index} out of range for N = {n}")));
                }
                if !finite(*amplitude) {
                    return Err(("amplitude", "must be finite".into()));
                }
            }
            InitialSpec::Coefficients { values } => {
                if values.len() != n {
                    return Err(("values", format!("expected N = {n} coefficients, got {}", values.len())));
                }
                if values.iter().any(|v| !finite(*v)) {
                    return Err(("values", "coefficients must be finite".into()));
                }
            }
            InitialSpec::Random { amplitude } if !(finite(*amplitude) && *amplitude >= 0.0) => {
                return Err(("amplitude", "must be finite and non-negative".into()));
            }
            _ => {}
        }
        Ok(())
    }
}

fn unknown_key(msg: &str) -> Option<&str> {
    msg.strip_prefix("unknown field `")?.split('`').next()
}

/// serde_json appends " at line L column C"; the prefix already says where.
fn strip_position(msg: &str) -> String {
    match msg.rfind(" at line ") {
        Some(i) => msg[..i].to_string(),
        None => msg.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ScenarioConfig, String> {
        ScenarioConfig::parse(text, "cfg.json").map_err(|e| match e {
            CliError::Config(m) => m,
            other => other.to_string(),
        })
    }

    #[test]
    fn defaults_and_round_trip() {
        let cfg = parse(r#"{"scenario": "neumann-heat"}"#).unwrap();
        assert_eq!(cfg.modes(), 64);
        assert_eq!(parse(r#"{"scenario": "scalar-counterexample"}"#).unwrap().modes(), 1);
        assert_eq!(cfg.q_values(), vec![2.0]);
        let back = parse(&cfg.to_json()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn infinite_exponent() {
        let cfg =
            parse(r#"{"scenario": "pathological", "N": 10, "qList": [2, "inf"], "NList": [10, 15, 20]}"#).unwrap();
        assert_eq!(cfg.q_values(), vec![2.0, f64::INFINITY]);
        assert!(cfg.to_json().contains("\"inf\""));
    }

    #[test]
    fn misspelled_key_is_rejected_with_position() {
        let err = parse("{\n  \"scenario\": \"neumann-heat\",\n  \"Nn\": 64\n}").unwrap_err();
        assert!(err.starts_with("cfg.json:3:3: unknown field `Nn`"), "{err}");
    }

    #[test]
    fn misspelled_nested_key_is_rejected() {
        let err = parse("{\n  \"scenario\": \"neumann-heat\",\n  \"input\": {\"kind\": \"constant\", \"value\": 1}\n}")
            .unwrap_err();
        assert!(err.starts_with("cfg.json:3:33: unknown field `value`"), "{err}");
    }

    #[test]
    fn semantic_errors_point_at_the_key() {
        let err = parse("{\n  \"scenario\": \"neumann-heat\",\n\n  \"h\": -1\n}").unwrap_err();
        assert!(err.starts_with("cfg.json:4:3: `h`"), "{err}");
        let err = parse(r#"{"scenario": "neumann-heat", "N": 64, "M": 10}"#).unwrap_err();
        assert!(err.contains("`M`"), "{err}");
        let err = parse(r#"{"scenario": "semilinear-lipschitz"}"#).unwrap_err();
        assert!(err.contains("L_f"), "{err}");
        let err = parse(r#"{"scenario": "neumann-heat", "L_f": 0.5}"#).unwrap_err();
        assert!(err.contains("not used"), "{err}");
        let err = parse(r#"{"scenario": "neumann-heat", "qList": [0.5]}"#).unwrap_err();
        assert!(err.contains("qList"), "{err}");
        let err = parse(r#"{"scenario": "heat"}"#).unwrap_err();
        assert!(err.contains("unknown variant"), "{err}");
        let err =
            parse(r#"{"scenario": "neumann-heat", "x0": {"kind": "mode", "index": 64, "amplitude": 1}}"#).unwrap_err();
        assert!(err.contains("out of range"), "{err}");
    }
}
