//! Time-stepping schemes and the run driver.
//!
//! Three mass-conservative schemes (Crank–Nicolson with implicit
//! nonlinearity, relaxation, Fourier split-step) and an explicit Euler
//! discretisation of the Itô form kept as a non-conservative baseline.

mod cn;
mod euler_ito;
mod evolve;
mod relaxation;
mod splitstep;

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::field::{discrete_h1_norm, Field, Grid1D};

pub use cn::{cn_residual, cn_step, cn_step_with_stats, CnStats};
pub use euler_ito::euler_ito_step;
pub use evolve::{evolve, Run, StepInfo, StepObserver, Stepper};
pub use relaxation::{relaxation_step, RelaxState};
pub use splitstep::{splitstep_step, SplitStep};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SchemeKind {
    CrankNicolson,
    Relaxation,
    SplitStep,
    EulerIto,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 4] = [
        SchemeKind::CrankNicolson,
        SchemeKind::Relaxation,
        SchemeKind::SplitStep,
        SchemeKind::EulerIto,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            SchemeKind::CrankNicolson => "cn",
            SchemeKind::Relaxation => "relaxation",
            SchemeKind::SplitStep => "splitstep",
            SchemeKind::EulerIto => "euler-ito",
        }
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for SchemeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cn" | "crank-nicolson" | "cranknicolson" => Ok(SchemeKind::CrankNicolson),
            "relaxation" | "relax" => Ok(SchemeKind::Relaxation),
            "splitstep" | "split-step" => Ok(SchemeKind::SplitStep),
            "euler-ito" | "eulerito" | "euler" => Ok(SchemeKind::EulerIto),
            other => Err(Error::InvalidConfig(format!("unknown scheme '{other}'"))),
        }
    }
}

/// H¹ blow-up guard: a step is rejected once the H¹ norm exceeds `radius`.
/// Valid only when Δt ≤ c2 · radius⁻².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlowUpGuard {
    pub radius: f64,
    pub c2: f64,
}

impl BlowUpGuard {
    /// Radius 10× the H¹ norm of the initial datum, C₂ = 1.
    pub fn default_for(x0: &Field) -> Self {
        Self {
            radius: 10.0 * discrete_h1_norm(x0),
            c2: 1.0,
        }
    }

    pub fn max_dt(&self) -> f64 {
        self.c2 / (self.radius * self.radius)
    }

    pub(crate) fn check(&self, x: &Field) -> Result<()> {
        let h1 = discrete_h1_norm(x);
        if h1 > self.radius {
            Err(Error::GuardTriggered {
                h1,
                radius: self.radius,
            })
        } else {
            Ok(())
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeConfig {
    pub scheme: SchemeKind,
    pub dt: f64,
    pub gamma: f64,
    pub grid: Grid1D,
    /// Relative L² update at which the CN fixed-point iteration stops.
    pub nl_tol: f64,
    pub nl_max_iter: usize,
    pub guard: Option<BlowUpGuard>,
    /// Switches the cubic term off; used to isolate the linear propagator.
    pub nonlinear: bool,
    /// Mass above which the explicit Euler–Itô scheme reports overflow.
    pub overflow_cap: f64,
    /// Observers receive a field snapshot every this many steps (0: never).
    pub snapshot_every: usize,
}

impl SchemeConfig {
    pub fn new(scheme: SchemeKind, dt: f64, gamma: f64, grid: Grid1D) -> Self {
        Self {
            scheme,
            dt,
            gamma,
            grid,
            nl_tol: 1e-12,
            nl_max_iter: 50,
            guard: None,
            nonlinear: true,
            overflow_cap: 1e8,
            snapshot_every: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::InvalidConfig(m));
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return fail(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return fail(format!("gamma must be nonnegative, got {}", self.gamma));
        }
        if !(self.nl_tol.is_finite() && self.nl_tol > 0.0) {
            return fail(format!("nl_tol must be positive, got {}", self.nl_tol));
        }
        if self.nl_max_iter == 0 {
            return fail("nl_max_iter must be at least 1".into());
        }
        if self.overflow_cap.is_nan() || self.overflow_cap <= 0.0 {
            return fail("overflow_cap must be positive".into());
        }
        if let Some(g) = self.guard {
            if !(g.radius > 0.0 && g.c2 > 0.0) {
                return fail("guard radius and c2 must be positive".into());
            }
            if self.dt > g.max_dt() {
                return fail(format!(
                    "dt = {} exceeds guard limit c2/R0^2 = {}",
                    self.dt,
                    g.max_dt()
                ));
            }
        }
        if self.scheme == SchemeKind::SplitStep && !self.grid.interior_points().is_power_of_two() {
            return fail(format!(
                "split-step needs a power-of-two interior point count, got {}",
                self.grid.interior_points()
            ));
        }
        Ok(())
    }

    pub(crate) fn check_grid(&self, x: &Field) -> Result<()> {
        if *x.grid() == self.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scheme_names_roundtrip() {
        for s in SchemeKind::ALL {
            assert_eq!(s.name().parse::<SchemeKind>().unwrap(), s);
        }
        assert!("rk4".parse::<SchemeKind>().is_err());
    }

    #[test]
    fn validation() {
        let grid = Grid1D::new(30.0, 512).unwrap();
        let mut cfg = SchemeConfig::new(SchemeKind::CrankNicolson, 0.01, 0.1, grid);
        assert!(cfg.validate().is_ok());
        cfg.dt = 0.0;
        assert!(cfg.validate().is_err());
        cfg.dt = 0.01;
        cfg.nl_tol = 0.0;
        assert!(cfg.validate().is_err());
        cfg.nl_tol = 1e-12;
        cfg.guard = Some(BlowUpGuard {
            radius: 10.0,
            c2: 1.0,
        });
        assert!(cfg.validate().is_ok());
        cfg.guard = Some(BlowUpGuard {
            radius: 20.0,
            c2: 1.0,
        });
        assert!(cfg.validate().is_err());
        cfg.guard = None;
        cfg.scheme = SchemeKind::SplitStep;
        cfg.grid = Grid1D::new(30.0, 500).unwrap();
        assert!(cfg.validate().is_err());
    }
}
