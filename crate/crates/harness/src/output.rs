//! CSV emission. Every file is built in memory and written whole; rows come
//! out in a fixed order so repeated runs give identical bytes, except for
//! the wall-time column of the comparison table.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use manakov::metrics::mass_drift;
use manakov::RunRecord;

use crate::error::Result;
use crate::study::{ComparisonReport, NamedRun, SolitonReport, StudyReport};

/// Files written by one emit call, sorted by path.
pub type FileSet = Vec<PathBuf>;

struct Writer {
    root: PathBuf,
    files: FileSet,
}

impl Writer {
    fn new(root: &Path) -> Result<Self> {
        std::fs::create_dir_all(root)?;
        Ok(Self {
            root: root.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn put(&mut self, rel: &str, text: String) -> Result<()> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        debug_assert!(text.is_empty() || text.ends_with('\n'));
        std::fs::write(&path, text)?;
        self.files.push(path);
        Ok(())
    }

    fn finish(mut self) -> FileSet {
        self.files.sort();
        self.files
    }
}

fn timeseries(record: &RunRecord) -> Result<String> {
    let mut buf = Vec::new();
    record.write_timeseries_csv(&mut buf)?;
    Ok(String::from_utf8(buf).expect("ascii csv"))
}

fn run_name(r: &NamedRun) -> String {
    format!("{}_seed{}_N{}", r.scheme, r.seed, r.n_steps)
}

fn runs_table(runs: &[NamedRun]) -> String {
    let mut s = String::from("scheme,seed,n_steps,status,mass_drift,config_hash,generator\n");
    for r in runs {
        let _ = writeln!(
            s,
            "{},{},{},{},{:e},{},{}",
            r.scheme,
            r.seed,
            r.n_steps,
            r.record.status,
            mass_drift(&r.record),
            r.record.config_hash,
            r.record.generator
        );
    }
    s
}

/// Writes a convergence study:
/// `convergence_<scheme>.csv`, `order_<scheme>_<norm>.csv`, `runs.csv`,
/// `config.txt`, `timeseries/*.csv` and `snapshots/*.csv`.
pub fn emit_study(report: &StudyReport, dir: &Path) -> Result<FileSet> {
    let mut w = Writer::new(dir)?;
    w.put("config.txt", report.config.to_canonical())?;
    for &scheme in &report.config.schemes {
        let mut rows: Vec<_> = report.rows.iter().filter(|r| r.scheme == scheme).collect();
        rows.sort_by_key(|r| (r.seed, r.level));
        let mut s = String::from("seed,level,dt,err_L2,err_Linf,err_H1max,status\n");
        for r in rows {
            let _ = writeln!(
                s,
                "{},{},{:e},{:e},{:e},{:e},{}",
                r.seed, r.level, r.dt, r.err_l2, r.err_linf, r.err_h1max, r.status
            );
        }
        w.put(&format!("convergence_{scheme}.csv"), s)?;
    }
    for o in &report.orders {
        let mut buf = Vec::new();
        match &o.series {
            Some(series) => series.write_csv(&mut buf)?,
            None => buf.extend_from_slice(b"dt,err,norm_kind\n"),
        }
        w.put(
            &format!("order_{}_{}.csv", o.scheme, o.norm),
            String::from_utf8(buf).expect("ascii csv"),
        )?;
    }
    w.put("runs.csv", runs_table(&report.runs))?;
    for r in &report.runs {
        w.put(
            &format!("timeseries/{}.csv", run_name(r)),
            timeseries(&r.record)?,
        )?;
    }
    for snap in &report.snapshots {
        let mut buf = Vec::new();
        snap.field.write_csv(&mut buf)?;
        w.put(
            &format!(
                "snapshots/{}_seed{}_n{}.csv",
                snap.scheme, snap.seed, snap.step
            ),
            String::from_utf8(buf).expect("ascii csv"),
        )?;
    }
    Ok(w.finish())
}

/// Writes `comparison.csv` with columns scheme, err2, errInf, massDrift,
/// wallSeconds, plus `runs.csv` and per-scheme time series.
pub fn emit_comparison(report: &ComparisonReport, dir: &Path) -> Result<FileSet> {
    let mut w = Writer::new(dir)?;
    w.put("config.txt", report.config.to_canonical())?;
    let mut s = String::from("scheme,err2,errInf,massDrift,wallSeconds\n");
    for r in &report.rows {
        let _ = writeln!(
            s,
            "{},{:e},{:e},{:e},{:e}",
            r.scheme, r.err2, r.err_inf, r.mass_drift, r.wall_seconds
        );
    }
    w.put("comparison.csv", s)?;
    w.put("runs.csv", runs_table(&report.runs))?;
    for r in &report.runs {
        w.put(
            &format!("timeseries/{}.csv", run_name(r)),
            timeseries(&r.record)?,
        )?;
    }
    w.put(
        &format!(
            "timeseries/reference_cn_seed{}_N{}.csv",
            report.seed,
            report.reference.steps.len() - 1
        ),
        timeseries(&report.reference)?,
    )?;
    Ok(w.finish())
}

/// Writes `soliton_<scheme>.csv` with columns n, dt, err_L2, err_Linf,
/// peak_drift, status and the fitted order as trailing comment rows.
pub fn emit_soliton(report: &SolitonReport, dir: &Path) -> Result<FileSet> {
    let mut w = Writer::new(dir)?;
    w.put("config.txt", report.config.to_canonical())?;
    for (scheme, r) in &report.results {
        let mut s = String::from("n,dt,err_L2,err_Linf,peak_drift,status\n");
        for i in 0..r.steps.len() {
            let _ = writeln!(
                s,
                "{},{:e},{:e},{:e},{:e},{}",
                r.steps[i],
                r.dts[i],
                r.errors_l2[i],
                r.errors_linf[i],
                r.peak_drift[i],
                r.statuses[i]
            );
        }
        let _ = writeln!(s, "# dx={:e}", report.dx);
        if let Some(fit) = r.fit {
            let _ = writeln!(s, "# slope={:e}", fit.slope);
            let _ = writeln!(s, "# intercept={:e}", fit.intercept);
            let _ = writeln!(s, "# residual={:e}", fit.residual);
        }
        w.put(&format!("soliton_{scheme}.csv"), s)?;
    }
    Ok(w.finish())
}
