use super::{
    cn_step, euler_ito_step, relaxation_step, RelaxState, SchemeConfig, SchemeKind, SplitStep,
};
use crate::error::{Error, Result};
use crate::field::{discrete_h1_norm, discrete_l2_mass, Field};
use crate::noise::{BrownianPath, GENERATOR_NAME};
use crate::record::{RunRecord, RunStatus, StepDiagnostics};

/// What an observer sees after each accepted step.
#[derive(Debug, Clone, Copy)]
pub struct StepInfo<'a> {
    pub n: usize,
    pub t: f64,
    pub mass: f64,
    pub h1: f64,
    /// Present on steps that fall on the snapshot cadence.
    pub snapshot: Option<&'a Field>,
}

pub trait StepObserver {
    fn observe(&mut self, info: &StepInfo<'_>);
}

impl<F: FnMut(&StepInfo<'_>)> StepObserver for F {
    fn observe(&mut self, info: &StepInfo<'_>) {
        self(info)
    }
}

/// Scheme with whatever state it carries between steps.
#[derive(Debug, Clone)]
pub enum Stepper {
    CrankNicolson,
    Relaxation(RelaxState),
    SplitStep(Box<SplitStep>),
    EulerIto,
}

impl Stepper {
    pub fn new(cfg: &SchemeConfig, x0: &Field) -> Self {
        match cfg.scheme {
            SchemeKind::CrankNicolson => Stepper::CrankNicolson,
            SchemeKind::Relaxation => Stepper::Relaxation(RelaxState::new(x0)),
            SchemeKind::SplitStep => Stepper::SplitStep(Box::new(SplitStep::new(cfg.grid))),
            SchemeKind::EulerIto => Stepper::EulerIto,
        }
    }

    pub fn step(&mut self, x: &Field, chi: [f64; 3], cfg: &SchemeConfig) -> Result<Field> {
        match self {
            Stepper::CrankNicolson => cn_step(x, chi, cfg),
            Stepper::Relaxation(state) => {
                let (y, next) = relaxation_step(x, state, chi, cfg)?;
                *state = next;
                Ok(y)
            }
            Stepper::SplitStep(ss) => ss.step(x, chi, cfg),
            Stepper::EulerIto => euler_ito_step(x, chi, cfg),
        }
    }
}

/// A run that advances one step at a time.
///
/// Lets a caller interleave several runs (for instance a fine reference and
/// its coarsened levels) without storing intermediate fields.
#[derive(Debug, Clone)]
pub struct Run<'p> {
    cfg: SchemeConfig,
    path: &'p BrownianPath,
    stepper: Stepper,
    x: Field,
    steps: Vec<StepDiagnostics>,
    status: RunStatus,
    started: std::time::Instant,
}

impl<'p> Run<'p> {
    pub fn new(x0: &Field, path: &'p BrownianPath, cfg: &SchemeConfig) -> Result<Self> {
        cfg.validate()?;
        cfg.check_grid(x0)?;
        if (path.dt() - cfg.dt).abs() > 1e-12 * cfg.dt {
            return Err(Error::InvalidConfig(format!(
                "path dt {} does not match scheme dt {}",
                path.dt(),
                cfg.dt
            )));
        }
        let mut steps = Vec::with_capacity(path.n_steps() + 1);
        steps.push(diagnostics(0, cfg.dt, x0));
        Ok(Self {
            cfg: cfg.clone(),
            path,
            stepper: Stepper::new(cfg, x0),
            x: x0.clone(),
            steps,
            status: RunStatus::Completed,
            started: std::time::Instant::now(),
        })
    }

    /// Steps taken so far.
    pub fn position(&self) -> usize {
        self.steps.len() - 1
    }

    pub fn field(&self) -> &Field {
        &self.x
    }

    pub fn status(&self) -> RunStatus {
        self.status
    }

    pub fn last(&self) -> &StepDiagnostics {
        self.steps.last().expect("step 0 is always recorded")
    }

    /// True once every increment is consumed or a step has failed.
    pub fn is_finished(&self) -> bool {
        !self.status.is_completed() || self.position() == self.path.n_steps()
    }

    /// Takes one step. Returns `Ok(false)` when nothing was done because the
    /// run is finished or the step failed; the failure is kept in the status.
    pub fn advance(&mut self) -> Result<bool> {
        if self.is_finished() {
            return Ok(false);
        }
        let n = self.position();
        let step = n + 1;
        match self.stepper.step(&self.x, self.path.chi(n), &self.cfg) {
            Ok(y) => {
                self.x = y;
                self.steps.push(diagnostics(step, self.cfg.dt, &self.x));
                Ok(true)
            }
            Err(e) => {
                self.status = match e {
                    Error::GuardTriggered { .. } => RunStatus::GuardTriggered { step },
                    Error::NonConvergence { .. } => RunStatus::NonConvergence { step },
                    Error::OverflowDetected { mass } => RunStatus::Overflow { step, mass },
                    Error::SingularPivot { .. } => RunStatus::SolveFailure { step },
                    other => return Err(other),
                };
                Ok(false)
            }
        }
    }

    pub fn finish(self) -> RunRecord {
        RunRecord {
            config_hash: String::new(),
            seed: self.path.seed(),
            generator: GENERATOR_NAME.to_string(),
            steps: self.steps,
            final_field: self.x,
            final_errors: Vec::new(),
            wall_seconds: self.started.elapsed().as_secs_f64(),
            status: self.status,
        }
    }
}

fn diagnostics(n: usize, dt: f64, x: &Field) -> StepDiagnostics {
    StepDiagnostics {
        n,
        t: n as f64 * dt,
        mass: discrete_l2_mass(x),
        h1: discrete_h1_norm(x),
    }
}

/// Runs the configured scheme over every increment of `path`.
///
/// Step failures end the run early and are reported in the record's status;
/// only precondition violations return `Err`.
pub fn evolve(
    x0: &Field,
    path: &BrownianPath,
    cfg: &SchemeConfig,
    observers: &mut [&mut dyn StepObserver],
) -> Result<RunRecord> {
    let mut run = Run::new(x0, path, cfg)?;
    let mut notify = |run: &Run<'_>| {
        let d = *run.last();
        let snapshot = (cfg.snapshot_every > 0 && d.n.is_multiple_of(cfg.snapshot_every))
            .then_some(run.field());
        let info = StepInfo {
            n: d.n,
            t: d.t,
            mass: d.mass,
            h1: d.h1,
            snapshot,
        };
        for o in observers.iter_mut() {
            o.observe(&info);
        }
    };
    notify(&run);
    while run.advance()? {
        notify(&run);
    }
    Ok(run.finish())
}
