//! Per-run diagnostics and provenance.

use std::fmt;
use std::io::Write;

use crate::error::Result;
use crate::field::Field;
use crate::metrics::NormKind;

/// Diagnostics of one accepted step (step 0 is the initial datum).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepDiagnostics {
    pub n: usize,
    pub t: f64,
    pub mass: f64,
    pub h1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RunStatus {
    Completed,
    /// The H¹ guard rejected the field produced at `step`.
    GuardTriggered {
        step: usize,
    },
    /// The CN fixed point failed to converge at `step`.
    NonConvergence {
        step: usize,
    },
    /// The explicit scheme produced mass `mass` at `step`.
    Overflow {
        step: usize,
        mass: f64,
    },
    /// A block pivot of the linear solve was singular at `step`.
    SolveFailure {
        step: usize,
    },
}

impl RunStatus {
    pub fn is_completed(&self) -> bool {
        matches!(self, RunStatus::Completed)
    }

    pub fn label(&self) -> &'static str {
        match self {
            RunStatus::Completed => "completed",
            RunStatus::GuardTriggered { .. } => "guard",
            RunStatus::NonConvergence { .. } => "nonconvergence",
            RunStatus::Overflow { .. } => "overflow",
            RunStatus::SolveFailure { .. } => "solve-failure",
        }
    }
}

impl fmt::Display for RunStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.label())
    }
}

/// Outcome of one `evolve` call.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub config_hash: String,
    pub seed: u64,
    pub generator: String,
    pub steps: Vec<StepDiagnostics>,
    pub final_field: Field,
    pub final_errors: Vec<(NormKind, f64)>,
    /// Excluded from the reproducible payload.
    pub wall_seconds: f64,
    pub status: RunStatus,
}

impl RunRecord {
    pub fn initial_mass(&self) -> f64 {
        self.steps.first().map_or(0.0, |s| s.mass)
    }

    /// Writes the per-step series with columns n, t, mass, h1.
    pub fn write_timeseries_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "n,t,mass,h1")?;
        for s in &self.steps {
            writeln!(out, "{},{:e},{:e},{:e}", s.n, s.t, s.mass, s.h1)?;
        }
        Ok(())
    }
}
