//! Closed-form Manakov solitons.
//!
//! [`soliton_field`] samples
//!
//! ```text
//! X(t, x) = (cos(Θ/2) e^{iφ₁}, sin(Θ/2) e^{iφ₂}) η sech(η(x − τ)) e^{−ik(x − τ) + iα}
//! τ(t) = τ₀ − k t,   α(t) = α₀ + (η² + k²) t / 2
//! ```
//!
//! which solves i∂ₜX + ½∂ₓ²X + |X|²X = 0. The schemes discretise the
//! equation with a unit coefficient on ∂ₓ², whose soliton is the same
//! profile evaluated at x/√2; [`unit_dispersion_soliton`] samples that one
//! and serves as the deterministic reference.

use std::f64::consts::SQRT_2;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{pair_norm_sqr, Field, Grid1D, Pair};
use crate::metrics::{fit_order, relative_error, ErrorSeries, LpNorm, NormKind, OrderFit};
use crate::noise::BrownianPath;
use crate::record::RunStatus;
use crate::schemes::{evolve, SchemeConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolitonParams {
    pub theta: f64,
    pub phi1: f64,
    pub phi2: f64,
    pub eta: f64,
    pub k: f64,
    pub tau0: f64,
    pub alpha0: f64,
}

impl SolitonParams {
    /// Φ₁ = Φ₂ = k = τ₀ = 0, Θ = −π/2, η = 1/2, α₀ = π.
    pub fn reference() -> Self {
        Self {
            theta: -std::f64::consts::FRAC_PI_2,
            phi1: 0.0,
            phi2: 0.0,
            eta: 0.5,
            k: 0.0,
            tau0: 0.0,
            alpha0: std::f64::consts::PI,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.theta,
            self.phi1,
            self.phi2,
            self.eta,
            self.k,
            self.tau0,
            self.alpha0,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig(
                "soliton parameters must be finite".into(),
            ));
        }
        if self.eta <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "soliton amplitude must be positive, got {}",
                self.eta
            )));
        }
        Ok(())
    }

    pub fn position(&self, t: f64) -> f64 {
        self.tau0 - self.k * t
    }

    pub fn phase(&self, t: f64) -> f64 {
        self.alpha0 + 0.5 * (self.eta * self.eta + self.k * self.k) * t
    }

    /// Closed form at one point.
    pub fn value(&self, t: f64, x: f64) -> Pair {
        let tau = self.position(t);
        let xi = x - tau;
        let envelope = self.eta / (self.eta * xi).cosh();
        let carrier = Complex64::from_polar(envelope, -self.k * xi + self.phase(t));
        let half = 0.5 * self.theta;
        [
            Complex64::from_polar(half.cos(), self.phi1) * carrier,
            Complex64::from_polar(half.sin(), self.phi2) * carrier,
        ]
    }
}

/// Samples the closed form at time `t`; boundary nodes are zero.
pub fn soliton_field(t: f64, grid: Grid1D, p: &SolitonParams) -> Field {
    Field::from_fn(grid, |x| p.value(t, x))
}

/// Soliton of i∂ₜX + ∂ₓ²X + |X|²X = 0: the closed form evaluated at x/√2.
pub fn unit_dispersion_soliton(t: f64, grid: Grid1D, p: &SolitonParams) -> Field {
    Field::from_fn(grid, |x| p.value(t, x / SQRT_2))
}

/// Deterministic convergence of one scheme against the exact soliton.
#[derive(Debug, Clone, PartialEq)]
pub struct DeterministicReport {
    pub steps: Vec<usize>,
    pub dts: Vec<f64>,
    pub errors_l2: Vec<f64>,
    pub errors_linf: Vec<f64>,
    /// |x_peak(T) − x_peak(0)| of the discrete solution.
    pub peak_drift: Vec<f64>,
    pub statuses: Vec<RunStatus>,
    pub fit: Option<OrderFit>,
}

impl DeterministicReport {
    pub fn series(&self, norm: NormKind) -> Result<ErrorSeries> {
        let errors = match norm {
            NormKind::LInfRel => self.errors_linf.clone(),
            _ => self.errors_l2.clone(),
        };
        ErrorSeries::new(self.dts.clone(), errors, norm)
    }
}

fn peak_location(f: &Field) -> f64 {
    let (j, _) = f
        .values()
        .iter()
        .enumerate()
        .fold((0, -1.0), |best, (j, v)| {
            let m = pair_norm_sqr(*v);
            if m > best.1 {
                (j, m)
            } else {
                best
            }
        });
    f.grid().x(j)
}

/// Runs `cfg.scheme` with γ = 0 from the unit-dispersion soliton at each step
/// count in `resolutions` and measures the final-time error against the
/// closed form. Step counts are sorted so that Δt decreases.
pub fn validate_deterministic(
    cfg: &SchemeConfig,
    p: &SolitonParams,
    horizon: f64,
    resolutions: &[usize],
) -> Result<DeterministicReport> {
    if cfg.gamma != 0.0 {
        return Err(Error::InvalidConfig(format!(
            "deterministic validation needs gamma = 0, got {}",
            cfg.gamma
        )));
    }
    p.validate()?;
    let mut steps = resolutions.to_vec();
    steps.sort_unstable();
    steps.dedup();
    if steps.contains(&0) {
        return Err(Error::InvalidConfig("step counts must be positive".into()));
    }
    let x0 = unit_dispersion_soliton(0.0, cfg.grid, p);
    let exact = unit_dispersion_soliton(horizon, cfg.grid, p);
    let peak0 = peak_location(&x0);

    let mut report = DeterministicReport {
        steps: steps.clone(),
        dts: Vec::new(),
        errors_l2: Vec::new(),
        errors_linf: Vec::new(),
        peak_drift: Vec::new(),
        statuses: Vec::new(),
        fit: None,
    };
    for n in steps {
        let dt = horizon / n as f64;
        let mut run_cfg = cfg.clone();
        run_cfg.dt = dt;
        let path = BrownianPath::zero(n, dt)?;
        let rec = evolve(&x0, &path, &run_cfg, &mut [])?;
        report.dts.push(dt);
        report
            .errors_l2
            .push(relative_error(&rec.final_field, &exact, &x0, LpNorm::L2)?);
        report
            .errors_linf
            .push(relative_error(&rec.final_field, &exact, &x0, LpNorm::LInf)?);
        report
            .peak_drift
            .push((peak_location(&rec.final_field) - peak0).abs());
        report.statuses.push(rec.status);
    }
    if report.dts.len() >= 2 && report.statuses.iter().all(|s| s.is_completed()) {
        report.fit = report
            .series(NormKind::L2Rel)
            .and_then(|s| fit_order(&s))
            .ok();
    }
    Ok(report)
}
