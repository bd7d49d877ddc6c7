//! Numerical tolerances and the run configuration embedded in every report.

use serde::{Deserialize, Serialize};

use crate::function::EPS_DD;

/// Relative tolerances. Each is applied against a natural magnitude of the
/// quantity it guards, never as an absolute threshold.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Scalar non-positivity of the constant and `h_{12;3}²` terms, relative
    /// to the sum of magnitudes of their summands.
    pub tau: f64,
    /// Negative semi-definiteness of a 2×2 form, relative to `‖M‖∞`.
    pub tau_nsd: f64,
    /// `∇w` counts as vanishing below `delta_grad · (|w|/‖λ‖∞ + ‖∇²w‖∞ ‖λ‖∞)`.
    pub delta_grad: f64,
    /// Sublevel quantities at or below this are in the umbilic band.
    pub eps_umbilic: f64,
    /// Divided-difference switch to the diagonal limit, relative to `‖λ‖∞`.
    pub eps_dd: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            tau: 1e-9,
            tau_nsd: 1e-9,
            delta_grad: 1e-8,
            eps_umbilic: 1e-10,
            eps_dd: EPS_DD,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
}

/// Everything that determines the outcome of a run, serialized into reports.
/// The worker count never changes results and is recorded in the run's
/// metadata sidecar instead.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: String,
    pub flow: String,
    pub samples: u64,
    pub grid: Option<u32>,
    pub seed: u64,
    pub threshold_override: Option<f64>,
    pub tolerances: Tolerances,
    pub format: OutputFormat,
    pub out: Option<String>,
    /// Never serialized: reports must not depend on it.
    #[serde(skip_serializing, default = "one")]
    pub workers: usize,
}

impl RunConfig {
    pub fn new(command: &str, flow: &str) -> Self {
        Self {
            command: command.to_string(),
            flow: flow.to_string(),
            samples: 1_000_000,
            grid: None,
            seed: 0,
            threshold_override: None,
            tolerances: Tolerances::default(),
            format: OutputFormat::Json,
            out: None,
            workers: 1,
        }
    }
}

fn one() -> usize {
    1
}
