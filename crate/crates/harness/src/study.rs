//! Convergence ladders, scheme comparisons and the deterministic soliton check.

use manakov::analytic::{unit_dispersion_soliton, validate_deterministic, DeterministicReport};
use manakov::metrics::{fit_order, mass_drift, relative_error, relative_h1_error};
use manakov::metrics::{ErrorSeries, LpNorm, NormKind, OrderFit};
use manakov::{
    coarsen, sample_path, BrownianPath, Field, Run, RunRecord, SchemeConfig, SchemeKind,
};
use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};

/// One (scheme, seed, level) entry of a convergence ladder.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelRow {
    pub scheme: SchemeKind,
    pub seed: u64,
    pub level: u32,
    pub n_steps: usize,
    pub dt: f64,
    /// Final-time relative L² error against the reference level.
    pub err_l2: f64,
    pub err_linf: f64,
    /// Max over aligned times of the relative H¹ error.
    pub err_h1max: f64,
    pub status: String,
}

impl LevelRow {
    fn usable(&self) -> bool {
        self.status == "completed"
    }

    fn error(&self, norm: NormKind) -> f64 {
        match norm {
            NormKind::L2Rel => self.err_l2,
            NormKind::LInfRel => self.err_linf,
            NormKind::H1 => self.err_h1max,
        }
    }
}

/// Seed-averaged errors of one scheme and norm with their fitted order.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderReport {
    pub scheme: SchemeKind,
    pub norm: NormKind,
    pub series: Option<ErrorSeries>,
    pub fit: Option<OrderFit>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NamedRun {
    pub scheme: SchemeKind,
    pub seed: u64,
    pub n_steps: usize,
    pub record: RunRecord,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub scheme: SchemeKind,
    pub seed: u64,
    pub step: usize,
    pub field: Field,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyReport {
    pub config: ExperimentConfig,
    pub rows: Vec<LevelRow>,
    pub orders: Vec<OrderReport>,
    pub runs: Vec<NamedRun>,
    pub snapshots: Vec<Snapshot>,
}

impl StudyReport {
    pub fn order(&self, scheme: SchemeKind, norm: NormKind) -> Option<&OrderReport> {
        self.orders
            .iter()
            .find(|o| o.scheme == scheme && o.norm == norm)
    }

    /// Whether every reference run completed.
    pub fn references_completed(&self) -> bool {
        self.rows
            .iter()
            .filter(|r| r.level == self.config.levels)
            .all(LevelRow::usable)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub scheme: SchemeKind,
    pub err2: f64,
    pub err_inf: f64,
    pub mass_drift: f64,
    pub wall_seconds: f64,
    pub status: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub config: ExperimentConfig,
    pub seed: u64,
    pub n_steps: usize,
    pub rows: Vec<ComparisonRow>,
    pub reference: RunRecord,
    pub runs: Vec<NamedRun>,
}

impl ComparisonReport {
    pub fn row(&self, scheme: SchemeKind) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.scheme == scheme)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolitonReport {
    pub config: ExperimentConfig,
    pub dx: f64,
    pub results: Vec<(SchemeKind, DeterministicReport)>,
}

impl SolitonReport {
    pub fn result(&self, scheme: SchemeKind) -> Option<&DeterministicReport> {
        self.results
            .iter()
            .find(|(s, _)| *s == scheme)
            .map(|(_, r)| r)
    }
}

fn scheme_config(
    cfg: &ExperimentConfig,
    scheme: SchemeKind,
    dt: f64,
    gamma: f64,
) -> Result<SchemeConfig> {
    let mut c = SchemeConfig::new(scheme, dt, gamma, cfg.grid()?);
    c.nl_tol = cfg.nl_tol;
    c.nl_max_iter = cfg.nl_max_iter;
    c.guard = cfg.guard();
    c.overflow_cap = cfg.overflow_cap;
    Ok(c)
}

fn initial_field(cfg: &ExperimentConfig) -> Result<Field> {
    Ok(unit_dispersion_soliton(0.0, cfg.grid()?, &cfg.soliton))
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| HarnessError::Invalid {
            key: "workers".into(),
            message: e.to_string(),
        })
}

/// Every ladder level of `fine`, coarsest first, each halving the next.
fn ladder(fine: &BrownianPath, levels: u32) -> Result<Vec<BrownianPath>> {
    let mut paths = vec![fine.clone()];
    for _ in 0..levels {
        let next = coarsen(paths.last().unwrap(), 2)?;
        paths.push(next);
    }
    paths.reverse();
    Ok(paths)
}

struct SeedOutcome {
    rows: Vec<LevelRow>,
    runs: Vec<NamedRun>,
    snapshots: Vec<Snapshot>,
}

fn run_seed(cfg: &ExperimentConfig, scheme: SchemeKind, seed: u64) -> Result<SeedOutcome> {
    let k = cfg.levels;
    let x0 = initial_field(cfg)?;
    let fine_path = sample_path(seed, cfg.n_fine(), cfg.dt_at(k))?;
    let paths = ladder(&fine_path, k)?;
    let configs = (0..=k)
        .map(|l| scheme_config(cfg, scheme, cfg.dt_at(l), cfg.gamma))
        .collect::<Result<Vec<_>>>()?;

    let mut reference = Run::new(&x0, &paths[k as usize], &configs[k as usize])?;
    let mut coarse = (0..k as usize)
        .map(|l| Run::new(&x0, &paths[l], &configs[l]))
        .collect::<manakov::Result<Vec<_>>>()?;
    let mut h1max = vec![0.0f64; k as usize];
    let mut snapshots = Vec::new();

    for step in 1..=cfg.n_fine() {
        reference.advance()?;
        if cfg.snapshot_every > 0 && step % cfg.snapshot_every == 0 && reference.position() == step
        {
            snapshots.push(Snapshot {
                scheme,
                seed,
                step,
                field: reference.field().clone(),
            });
        }
        for (l, run) in coarse.iter_mut().enumerate() {
            let stride = 1usize << (k as usize - l);
            if step % stride != 0 || !run.advance()? {
                continue;
            }
            if reference.status().is_completed() {
                let e = relative_h1_error(run.field(), reference.field(), &x0)?;
                h1max[l] = h1max[l].max(e);
            }
        }
    }

    let reference = reference.finish();
    let mut rows = Vec::with_capacity(k as usize + 1);
    let mut runs = Vec::with_capacity(k as usize + 1);
    for (l, run) in coarse.into_iter().enumerate() {
        let rec = run.finish();
        let level = l as u32;
        let (err_l2, err_linf, err_h1max, status) = if !reference.status.is_completed() {
            (
                f64::NAN,
                f64::NAN,
                f64::NAN,
                format!("reference-{}", reference.status),
            )
        } else if !rec.status.is_completed() {
            (f64::NAN, f64::NAN, f64::NAN, rec.status.to_string())
        } else {
            let r = &reference.final_field;
            (
                relative_error(&rec.final_field, r, &x0, LpNorm::L2)?,
                relative_error(&rec.final_field, r, &x0, LpNorm::LInf)?,
                h1max[l],
                rec.status.to_string(),
            )
        };
        rows.push(LevelRow {
            scheme,
            seed,
            level,
            n_steps: cfg.n_at(level),
            dt: cfg.dt_at(level),
            err_l2,
            err_linf,
            err_h1max,
            status,
        });
        runs.push(named(cfg, scheme, seed, cfg.n_at(level), rec));
    }
    rows.push(LevelRow {
        scheme,
        seed,
        level: k,
        n_steps: cfg.n_fine(),
        dt: cfg.dt_at(k),
        err_l2: 0.0,
        err_linf: 0.0,
        err_h1max: 0.0,
        status: reference.status.to_string(),
    });
    runs.push(named(cfg, scheme, seed, cfg.n_fine(), reference));
    Ok(SeedOutcome {
        rows,
        runs,
        snapshots,
    })
}

fn named(
    cfg: &ExperimentConfig,
    scheme: SchemeKind,
    seed: u64,
    n_steps: usize,
    mut record: RunRecord,
) -> NamedRun {
    record.config_hash = cfg.hash();
    NamedRun {
        scheme,
        seed,
        n_steps,
        record,
    }
}

/// Seed-averaged error per coarse level, skipping runs that did not complete.
fn aggregate(
    cfg: &ExperimentConfig,
    rows: &[LevelRow],
    scheme: SchemeKind,
    norm: NormKind,
) -> OrderReport {
    let mut dts = Vec::new();
    let mut errors = Vec::new();
    for level in 0..cfg.levels {
        let vals: Vec<f64> = rows
            .iter()
            .filter(|r| r.scheme == scheme && r.level == level && r.usable())
            .map(|r| r.error(norm))
            .collect();
        if !vals.is_empty() {
            dts.push(cfg.dt_at(level));
            errors.push(vals.iter().sum::<f64>() / vals.len() as f64);
        }
    }
    let series = ErrorSeries::new(dts, errors, norm).ok();
    let fit = series.as_ref().and_then(|s| fit_order(s).ok());
    OrderReport {
        scheme,
        norm,
        series,
        fit,
    }
}

/// For every scheme and seed: samples the reference path, runs the reference
/// and each coarser level on the coarsened paths, and measures errors at
/// aligned times. Failed runs are recorded in the rows rather than aborting.
pub fn run_convergence_study(cfg: &ExperimentConfig) -> Result<StudyReport> {
    cfg.validate()?;
    let jobs: Vec<(SchemeKind, u64)> = cfg
        .schemes
        .iter()
        .flat_map(|&s| cfg.seeds.iter().map(move |&seed| (s, seed)))
        .collect();
    let outcomes = pool(cfg.workers)?.install(|| {
        jobs.par_iter()
            .map(|&(scheme, seed)| run_seed(cfg, scheme, seed))
            .collect::<Result<Vec<_>>>()
    })?;

    let mut report = StudyReport {
        config: cfg.clone(),
        rows: Vec::new(),
        orders: Vec::new(),
        runs: Vec::new(),
        snapshots: Vec::new(),
    };
    for o in outcomes {
        report.rows.extend(o.rows);
        report.runs.extend(o.runs);
        report.snapshots.extend(o.snapshots);
    }
    for &scheme in &cfg.schemes {
        for &norm in &cfg.norms {
            report
                .orders
                .push(aggregate(cfg, &report.rows, scheme, norm));
        }
    }
    Ok(report)
}

/// Runs every configured scheme on one path at the comparison level and
/// measures final errors against Crank–Nicolson on the reference level.
pub fn run_scheme_comparison(cfg: &ExperimentConfig, seed: u64) -> Result<ComparisonReport> {
    cfg.validate()?;
    if cfg.schemes.len() < 2 {
        return Err(HarnessError::Invalid {
            key: "schemes".into(),
            message: "a comparison needs at least two schemes".into(),
        });
    }
    let x0 = initial_field(cfg)?;
    let fine_path = sample_path(seed, cfg.n_fine(), cfg.dt_at(cfg.levels))?;
    let path = coarsen(&fine_path, 1 << (cfg.levels - cfg.compare_level))?;
    let ref_cfg = scheme_config(
        cfg,
        SchemeKind::CrankNicolson,
        cfg.dt_at(cfg.levels),
        cfg.gamma,
    )?;
    let mut reference = manakov::evolve(&x0, &fine_path, &ref_cfg, &mut [])?;
    reference.config_hash = cfg.hash();

    let records = pool(cfg.workers)?.install(|| {
        cfg.schemes
            .par_iter()
            .map(|&s| {
                let c = scheme_config(cfg, s, path.dt(), cfg.gamma)?;
                Ok(manakov::evolve(&x0, &path, &c, &mut [])?)
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let n_steps = path.n_steps();
    let mut rows = Vec::new();
    let mut runs = Vec::new();
    for (&scheme, rec) in cfg.schemes.iter().zip(records) {
        let r = &reference.final_field;
        rows.push(ComparisonRow {
            scheme,
            err2: relative_error(&rec.final_field, r, &x0, LpNorm::L2)?,
            err_inf: relative_error(&rec.final_field, r, &x0, LpNorm::LInf)?,
            mass_drift: mass_drift(&rec),
            wall_seconds: rec.wall_seconds,
            status: rec.status.to_string(),
        });
        runs.push(named(cfg, scheme, seed, n_steps, rec));
    }
    Ok(ComparisonReport {
        config: cfg.clone(),
        seed,
        n_steps,
        rows,
        reference,
        runs,
    })
}

/// Deterministic runs (γ = 0) from the exact soliton at each configured step
/// count, for every configured scheme.
pub fn run_soliton_check(cfg: &ExperimentConfig) -> Result<SolitonReport> {
    cfg.validate()?;
    let grid = cfg.grid()?;
    let results = pool(cfg.workers)?.install(|| {
        cfg.schemes
            .par_iter()
            .map(|&s| {
                let c = scheme_config(cfg, s, cfg.horizon / cfg.soliton_steps[0] as f64, 0.0)?;
                Ok((
                    s,
                    validate_deterministic(&c, &cfg.soliton, cfg.horizon, &cfg.soliton_steps)?,
                ))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(SolitonReport {
        config: cfg.clone(),
        dx: grid.dx(),
        results,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(levels: u32) -> ExperimentConfig {
        ExperimentConfig::parse(&format!(
            "schemes = cn, relaxation\na = 20\nM = 64\nT = 0.25\nn_coarse = 4\nlevels = {levels}\ngamma = 0.1\nseeds = 1, 2\nworkers = 2\n"
        ))
        .unwrap()
    }

    #[test]
    fn single_level_compares_with_itself() {
        let r = run_convergence_study(&small(0)).unwrap();
        assert_eq!(r.rows.len(), 4);
        assert!(r
            .rows
            .iter()
            .all(|row| row.err_l2 == 0.0 && row.err_h1max == 0.0));
        assert!(r.orders.iter().all(|o| o.fit.is_none()));
    }

    #[test]
    fn ladder_rows_and_paths_are_consistent() {
        let cfg = small(3);
        let r = run_convergence_study(&cfg).unwrap();
        assert_eq!(r.rows.len(), 2 * 2 * 4);
        assert!(r.references_completed());
        for row in &r.rows {
            assert_eq!(row.n_steps, 4 << row.level);
            if row.level < 3 {
                assert!(row.err_l2 > 0.0 && row.err_h1max > 0.0);
            }
        }
        let fine = sample_path(1, cfg.n_fine(), cfg.dt_at(3)).unwrap();
        for p in ladder(&fine, 3).unwrap() {
            assert_eq!(p.total(), fine.total());
        }
        assert!(r
            .order(SchemeKind::CrankNicolson, NormKind::L2Rel)
            .unwrap()
            .fit
            .is_some());
    }

    #[test]
    fn cn_against_itself_has_zero_error() {
        let mut cfg = small(2);
        cfg.compare_level = 2;
        let r = run_scheme_comparison(&cfg, 7).unwrap();
        let cn = r.row(SchemeKind::CrankNicolson).unwrap();
        assert_eq!((cn.err2, cn.err_inf), (0.0, 0.0));
        assert!(r.rows.iter().all(|row| row.wall_seconds > 0.0));
    }

    #[test]
    fn comparison_needs_two_schemes() {
        let mut cfg = small(1);
        cfg.schemes = vec![SchemeKind::CrankNicolson];
        assert!(run_scheme_comparison(&cfg, 1).is_err());
    }
}
