//! Spectral models of boundary control systems and numerical probes of
//! their input-to-state stability.
// `!(x > 0.0)` style checks reject NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod boundary;
pub mod error;
pub mod fd;
pub mod gain;
pub mod metrics;
pub mod rng;
pub mod signal;
pub mod solver;
pub mod spectral;

pub use boundary::{classify_regularity, ControlOperator, RegularityReport};
pub use error::{LabError, Result};
pub use gain::{sharpness_scan, GainScanResult, GainScenario, TimeGrid};
pub use metrics::{check_certificate, fit_certificate, IssCertificate};
pub use rng::LabRng;
pub use signal::{lq_norm, InputSignal};
pub use solver::{solve_linear, solve_semilinear, Nonlinearity, Trajectory};
pub use spectral::{Basis, GridField, SpectralOperator, StateVector};
