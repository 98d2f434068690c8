//! Machine-readable run report.

use serde::{Deserialize, Serialize};

use crate::args::Method;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub problem: String,
    pub method: Method,
    pub n_intervals: usize,
    /// Overrides in the order they were applied.
    pub overrides: Vec<Override>,
    pub seed: u64,
    /// True when every solver that ran converged.
    pub converged: bool,
    pub sweep: Option<SweepRecord>,
    pub direct: Option<DirectRecord>,
    /// Present only for `--method both`.
    pub comparison: Option<Comparison>,
    /// Present when the sweep ran on a problem with callbacks.
    pub callback_check: Option<CallbackCheck>,
    /// Trajectory CSV files written, sweep first.
    pub trajectories: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Override {
    pub key: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub pmp_residual: f64,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectRecord {
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub projected_grad_norm: f64,
    pub line_search_failed: bool,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    /// `|J_direct - J_sweep| / max(|J_sweep|, f64::MIN_POSITIVE)`.
    pub objective_rel_diff: f64,
    /// Max node-wise `|u_direct - u_sweep|` over all nodes and components.
    pub control_max_abs_diff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CallbackCheck {
    pub samples: usize,
    pub adjoint_rel_err: f64,
    pub stationarity: f64,
}

impl RunReport {
    /// Copy with wall-clock fields zeroed, for determinism comparisons.
    pub fn without_timing(&self) -> Self {
        let mut r = self.clone();
        if let Some(s) = &mut r.sweep {
            s.wall_ms = 0.0;
        }
        if let Some(d) = &mut r.direct {
            d.wall_ms = 0.0;
        }
        r
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(s: &str) -> serde_json::Result<Self> {
        serde_json::from_str(s)
    }
}
