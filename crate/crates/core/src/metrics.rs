//! Error norms, mass drift and log-log order fitting.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::field::{discrete_h1_norm, discrete_l2_mass, Field};
use crate::record::{RunRecord, RunStatus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NormKind {
    L2Rel,
    LInfRel,
    H1,
}

impl NormKind {
    pub fn name(&self) -> &'static str {
        match self {
            NormKind::L2Rel => "L2rel",
            NormKind::LInfRel => "LInfRel",
            NormKind::H1 => "H1",
        }
    }
}

impl fmt::Display for NormKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for NormKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "l2rel" | "l2" => Ok(NormKind::L2Rel),
            "linfrel" | "linf" => Ok(NormKind::LInfRel),
            "h1" => Ok(NormKind::H1),
            other => Err(Error::InvalidConfig(format!("unknown norm '{other}'"))),
        }
    }
}

/// Which vector norm `relative_error` uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpNorm {
    L2,
    LInf,
}

fn lp(f: &Field, p: LpNorm) -> f64 {
    match p {
        LpNorm::L2 => discrete_l2_mass(f).sqrt(),
        LpNorm::LInf => f.max_modulus(),
    }
}

/// ‖approx − reference‖_p / ‖initial‖_p.
pub fn relative_error(
    approx: &Field,
    reference: &Field,
    initial: &Field,
    p: LpNorm,
) -> Result<f64> {
    approx.check_same_grid(initial)?;
    let denom = lp(initial, p);
    if denom == 0.0 {
        return Err(Error::ZeroDenominator);
    }
    Ok(lp(&approx.sub(reference)?, p) / denom)
}

/// ‖approx − reference‖_{H¹} / ‖initial‖_{H¹}.
pub fn relative_h1_error(approx: &Field, reference: &Field, initial: &Field) -> Result<f64> {
    approx.check_same_grid(initial)?;
    let denom = discrete_h1_norm(initial);
    if denom == 0.0 {
        return Err(Error::ZeroDenominator);
    }
    Ok(discrete_h1_norm(&approx.sub(reference)?) / denom)
}

/// max_n |mass_n − mass_0| / mass_0, including the mass that tripped an overflow.
pub fn mass_drift(record: &RunRecord) -> f64 {
    let m0 = record.initial_mass();
    if m0 == 0.0 {
        return 0.0;
    }
    let drift = |m: f64| ((m - m0) / m0).abs();
    let steps = record
        .steps
        .iter()
        .map(|s| drift(s.mass))
        .fold(0.0, f64::max);
    match record.status {
        RunStatus::Overflow { mass, .. } => {
            let d = drift(mass);
            if d.is_nan() {
                f64::INFINITY
            } else {
                steps.max(d)
            }
        }
        _ => steps,
    }
}

/// Errors of one norm against a sequence of time steps.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorSeries {
    dts: Vec<f64>,
    errors: Vec<f64>,
    norm_kind: NormKind,
}

impl ErrorSeries {
    pub fn new(dts: Vec<f64>, errors: Vec<f64>, norm_kind: NormKind) -> Result<Self> {
        if dts.len() != errors.len() {
            return Err(Error::InvalidSeries(format!(
                "{} time steps but {} errors",
                dts.len(),
                errors.len()
            )));
        }
        if dts.len() < 2 {
            return Err(Error::InvalidSeries("need at least two points".into()));
        }
        if dts.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::InvalidSeries(
                "time steps must strictly decrease".into(),
            ));
        }
        if errors.iter().any(|e| e.is_nan() || *e < 0.0) {
            return Err(Error::InvalidSeries("errors must be nonnegative".into()));
        }
        Ok(Self {
            dts,
            errors,
            norm_kind,
        })
    }

    pub fn dts(&self) -> &[f64] {
        &self.dts
    }

    pub fn errors(&self) -> &[f64] {
        &self.errors
    }

    pub fn norm_kind(&self) -> NormKind {
        self.norm_kind
    }

    /// Columns dt, err, norm_kind, then the fit as `#` comment rows when it exists.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "dt,err,norm_kind")?;
        for (dt, e) in self.dts.iter().zip(&self.errors) {
            writeln!(out, "{:e},{:e},{}", dt, e, self.norm_kind)?;
        }
        if let Ok(fit) = fit_order(self) {
            writeln!(out, "# slope={:e}", fit.slope)?;
            writeln!(out, "# intercept={:e}", fit.intercept)?;
            writeln!(out, "# residual={:e}", fit.residual)?;
        }
        Ok(())
    }
}

/// Least-squares line log err = slope · log dt + intercept.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderFit {
    pub slope: f64,
    pub intercept: f64,
    /// Largest absolute deviation of a point from the line, in log units.
    pub residual: f64,
}

pub fn fit_order(series: &ErrorSeries) -> Result<OrderFit> {
    if series.errors.iter().any(|e| e.is_nan() || *e <= 0.0) {
        return Err(Error::InvalidSeries(
            "order fit needs strictly positive errors".into(),
        ));
    }
    let xs: Vec<f64> = series.dts.iter().map(|d| d.ln()).collect();
    let ys: Vec<f64> = series.errors.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - (slope * x + intercept)).abs())
        .fold(0.0, f64::max);
    Ok(OrderFit {
        slope,
        intercept,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{Grid1D, Pair};
    use crate::record::StepDiagnostics;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn record_with(masses: &[f64], status: RunStatus) -> RunRecord {
        let grid = Grid1D::new(1.0, 4).unwrap();
        RunRecord {
            config_hash: String::new(),
            seed: 0,
            generator: String::new(),
            steps: masses
                .iter()
                .enumerate()
                .map(|(n, m)| StepDiagnostics {
                    n,
                    t: n as f64,
                    mass: *m,
                    h1: 0.0,
                })
                .collect(),
            final_field: Field::zeros(grid),
            final_errors: vec![],
            wall_seconds: 0.0,
            status,
        }
    }

    fn random_field(grid: Grid1D, rng: &mut ChaCha8Rng) -> Field {
        Field::from_fn(grid, |_| {
            [
                Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
                Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
            ]
        })
    }

    #[test]
    fn identical_fields_have_zero_error() {
        let grid = Grid1D::new(3.0, 20).unwrap();
        let x = random_field(grid, &mut ChaCha8Rng::seed_from_u64(1));
        assert_eq!(relative_error(&x, &x, &x, LpNorm::L2).unwrap(), 0.0);
        assert_eq!(relative_error(&x, &x, &x, LpNorm::LInf).unwrap(), 0.0);
    }

    #[test]
    fn doubled_field_has_unit_error() {
        let grid = Grid1D::new(3.0, 20).unwrap();
        let x = random_field(grid, &mut ChaCha8Rng::seed_from_u64(2));
        let x2 = x.scaled(Complex64::new(2.0, 0.0));
        for p in [LpNorm::L2, LpNorm::LInf] {
            assert!((relative_error(&x2, &x, &x, p).unwrap() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_denominator_rejected() {
        let grid = Grid1D::new(3.0, 20).unwrap();
        let z = Field::zeros(grid);
        assert_eq!(
            relative_error(&z, &z, &z, LpNorm::L2),
            Err(Error::ZeroDenominator)
        );
    }

    #[test]
    fn matches_direct_summation() {
        let grid = Grid1D::new(3.0, 40).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (a, b, x0) = (
            random_field(grid, &mut rng),
            random_field(grid, &mut rng),
            random_field(grid, &mut rng),
        );
        let dx = grid.dx();
        let sq = |p: Pair| p[0].norm_sqr() + p[1].norm_sqr();
        let mut num = 0.0;
        let mut den = 0.0;
        let mut num_inf: f64 = 0.0;
        let mut den_inf: f64 = 0.0;
        for j in 0..grid.len() {
            let (u, v, w) = (a.values()[j], b.values()[j], x0.values()[j]);
            let d = [u[0] - v[0], u[1] - v[1]];
            num += sq(d) * dx;
            den += sq(w) * dx;
            num_inf = num_inf.max(sq(d).sqrt());
            den_inf = den_inf.max(sq(w).sqrt());
        }
        let l2 = relative_error(&a, &b, &x0, LpNorm::L2).unwrap();
        assert!((l2 - (num / den).sqrt()).abs() < 1e-14 * l2);
        let li = relative_error(&a, &b, &x0, LpNorm::LInf).unwrap();
        assert!((li - num_inf / den_inf).abs() < 1e-14 * li);
        // err₂² ‖X₀‖² equals the mass of the difference
        let diff_mass = discrete_l2_mass(&a.sub(&b).unwrap());
        assert!((l2 * l2 * discrete_l2_mass(&x0) - diff_mass).abs() < 1e-13 * diff_mass);
    }

    #[test]
    fn drift_of_series() {
        assert_eq!(
            mass_drift(&record_with(&[1.0, 1.0, 1.0], RunStatus::Completed)),
            0.0
        );
        let d = mass_drift(&record_with(&[1.0, 1.0 + 1e-10], RunStatus::Completed));
        assert!((d - 1e-10).abs() < 1e-16);
        let d = mass_drift(&record_with(
            &[2.0, 2.0],
            RunStatus::Overflow { step: 2, mass: 1e9 },
        ));
        assert!(d > 1e8);
        let d = mass_drift(&record_with(
            &[2.0],
            RunStatus::Overflow {
                step: 1,
                mass: f64::NAN,
            },
        ));
        assert!(d.is_infinite());
    }

    #[test]
    fn series_validation() {
        assert!(ErrorSeries::new(vec![0.1], vec![1.0], NormKind::L2Rel).is_err());
        assert!(ErrorSeries::new(vec![0.1, 0.2], vec![1.0, 1.0], NormKind::L2Rel).is_err());
        assert!(ErrorSeries::new(vec![0.2, 0.1], vec![1.0], NormKind::L2Rel).is_err());
        let s = ErrorSeries::new(vec![0.2, 0.1], vec![1.0, 0.0], NormKind::L2Rel).unwrap();
        assert!(fit_order(&s).is_err());
    }

    #[test]
    fn exact_power_laws() {
        let dts = vec![0.1, 0.05, 0.025, 0.0125];
        let lin = ErrorSeries::new(
            dts.clone(),
            dts.iter().map(|d| 3.0 * d).collect(),
            NormKind::L2Rel,
        )
        .unwrap();
        let f = fit_order(&lin).unwrap();
        assert!((f.slope - 1.0).abs() < 1e-12);
        assert!(f.residual < 1e-12);
        assert!((f.intercept - 3f64.ln()).abs() < 1e-12);
        let half = ErrorSeries::new(
            dts.clone(),
            dts.iter().map(|d| 0.7 * d.sqrt()).collect(),
            NormKind::L2Rel,
        )
        .unwrap();
        assert!((fit_order(&half).unwrap().slope - 0.5).abs() < 1e-12);
    }

    #[test]
    fn noisy_half_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let dts: Vec<f64> = (0..6).map(|k| 0.1 / 2f64.powi(k)).collect();
        let errs: Vec<f64> = dts
            .iter()
            .map(|d| d.sqrt() * (1.0 + rng.random_range(-0.1..0.1)))
            .collect();
        let f = fit_order(&ErrorSeries::new(dts, errs, NormKind::L2Rel).unwrap()).unwrap();
        assert!((0.4..=0.6).contains(&f.slope), "slope {}", f.slope);
    }

    #[test]
    fn csv_has_fit_comments() {
        let s = ErrorSeries::new(vec![0.2, 0.1], vec![0.4, 0.2], NormKind::LInfRel).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("dt,err,norm_kind\n2e-1,4e-1,LInfRel\n"));
        let slope: f64 = text
            .lines()
            .find_map(|l| l.strip_prefix("# slope="))
            .unwrap()
            .parse()
            .unwrap();
        assert!((slope - 1.0).abs() < 1e-12);
        assert!(text.ends_with('\n'));
    }
}
