//! Experiment configuration files.
//!
//! Grammar, one entry per line:
//!
//! ```text
//! # comment            (also allowed after a value)
//! key = value
//! ```
//!
//! Lists are comma separated. Real values accept a product or quotient of
//! decimal literals and `pi`, with an optional leading sign: `-pi/2`, `1/2`,
//! `3*pi/4`, `2.5e-3`. Keys may appear once; overrides given on the command
//! line replace file values.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use manakov::analytic::SolitonParams;
use manakov::metrics::NormKind;
use manakov::schemes::BlowUpGuard;
use manakov::{Grid1D, SchemeKind};
use sha2::{Digest, Sha256};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub schemes: Vec<SchemeKind>,
    /// Half-width of the domain (−a, a).
    pub a: f64,
    /// Interior grid points.
    pub m: usize,
    pub horizon: f64,
    pub n_coarse: usize,
    /// Number of halvings from the coarsest to the reference level.
    pub levels: u32,
    pub gamma: f64,
    pub soliton: SolitonParams,
    pub seeds: Vec<u64>,
    pub norms: Vec<NormKind>,
    pub out_dir: PathBuf,
    pub nl_tol: f64,
    pub nl_max_iter: usize,
    /// Field snapshots of reference runs every this many steps; 0 disables.
    pub snapshot_every: usize,
    /// Worker threads for independent runs; 0 picks the machine default.
    pub workers: usize,
    /// Ladder level used by the scheme comparison.
    pub compare_level: u32,
    /// Step counts of the deterministic soliton check.
    pub soliton_steps: Vec<usize>,
    /// H¹ radius of the blow-up guard; absent disables the guard.
    pub guard_radius: Option<f64>,
    pub guard_c2: f64,
    pub overflow_cap: f64,
}

const REQUIRED: [&str; 8] = [
    "schemes", "a", "M", "T", "n_coarse", "levels", "gamma", "seeds",
];

const OPTIONAL: [&str; 18] = [
    "soliton.theta",
    "soliton.phi1",
    "soliton.phi2",
    "soliton.eta",
    "soliton.k",
    "soliton.tau0",
    "soliton.alpha0",
    "norms",
    "out_dir",
    "nl_tol",
    "nl_max_iter",
    "snapshot_every",
    "workers",
    "compare_level",
    "soliton_steps",
    "guard_radius",
    "guard_c2",
    "overflow_cap",
];

impl ExperimentConfig {
    /// Finest step count, N_coarse·2^K.
    pub fn n_fine(&self) -> usize {
        self.n_coarse << self.levels
    }

    /// Step count at ladder level `level` (0 is the coarsest).
    pub fn n_at(&self, level: u32) -> usize {
        self.n_coarse << level
    }

    pub fn dt_at(&self, level: u32) -> f64 {
        self.horizon / self.n_at(level) as f64
    }

    pub fn grid(&self) -> Result<Grid1D> {
        Grid1D::new(self.a, self.m).map_err(|e| invalid("M", e.to_string()))
    }

    pub fn guard(&self) -> Option<BlowUpGuard> {
        self.guard_radius.map(|radius| BlowUpGuard {
            radius,
            c2: self.guard_c2,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::load_with_overrides(path, &[])
    }

    pub fn load_with_overrides(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
        Self::parse_with_overrides(&text, overrides)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::parse_with_overrides(text, &[])
    }

    /// Parses `text`, then applies `key=value` overrides.
    pub fn parse_with_overrides(text: &str, overrides: &[String]) -> Result<Self> {
        let mut entries = read_entries(text)?;
        for o in overrides {
            let (k, v) = o.split_once('=').ok_or_else(|| HarnessError::Syntax {
                line: 0,
                message: format!("override `{o}` is not key=value"),
            })?;
            let key = k.trim().to_string();
            check_known(&key, 0)?;
            entries.insert(key, v.trim().to_string());
        }
        Self::from_entries(&entries)
    }

    fn from_entries(e: &BTreeMap<String, String>) -> Result<Self> {
        for key in REQUIRED {
            if !e.contains_key(key) {
                return Err(HarnessError::Missing(key.to_string()));
            }
        }
        let get = |k: &str| e.get(k).map(String::as_str);
        let reference = SolitonParams::reference();
        let real_or = |k: &str, d: f64| get(k).map_or(Ok(d), |v| parse_real(k, v));
        let int_or = |k: &str, d: usize| get(k).map_or(Ok(d), |v| parse_int(k, v));

        let levels = parse_int("levels", get("levels").unwrap())?;
        let levels = u32::try_from(levels).map_err(|_| invalid("levels", "too large".into()))?;
        let cfg = Self {
            schemes: parse_list("schemes", get("schemes").unwrap(), |s| {
                s.parse::<SchemeKind>().map_err(|e| e.to_string())
            })?,
            a: parse_real("a", get("a").unwrap())?,
            m: parse_int("M", get("M").unwrap())?,
            horizon: parse_real("T", get("T").unwrap())?,
            n_coarse: parse_int("n_coarse", get("n_coarse").unwrap())?,
            levels,
            gamma: parse_real("gamma", get("gamma").unwrap())?,
            soliton: SolitonParams {
                theta: real_or("soliton.theta", reference.theta)?,
                phi1: real_or("soliton.phi1", reference.phi1)?,
                phi2: real_or("soliton.phi2", reference.phi2)?,
                eta: real_or("soliton.eta", reference.eta)?,
                k: real_or("soliton.k", reference.k)?,
                tau0: real_or("soliton.tau0", reference.tau0)?,
                alpha0: real_or("soliton.alpha0", reference.alpha0)?,
            },
            seeds: parse_list("seeds", get("seeds").unwrap(), |s| {
                s.parse::<u64>().map_err(|e| e.to_string())
            })?,
            norms: match get("norms") {
                Some(v) => parse_list("norms", v, |s| {
                    s.parse::<NormKind>().map_err(|e| e.to_string())
                })?,
                None => vec![NormKind::L2Rel, NormKind::LInfRel, NormKind::H1],
            },
            out_dir: PathBuf::from(get("out_dir").unwrap_or("out")),
            nl_tol: real_or("nl_tol", 1e-12)?,
            nl_max_iter: int_or("nl_max_iter", 50)?,
            snapshot_every: int_or("snapshot_every", 0)?,
            workers: int_or("workers", 0)?,
            compare_level: match get("compare_level") {
                Some(v) => u32::try_from(parse_int("compare_level", v)?)
                    .map_err(|_| invalid("compare_level", "too large".into()))?,
                None => levels.saturating_sub(1),
            },
            soliton_steps: match get("soliton_steps") {
                Some(v) => parse_list("soliton_steps", v, |s| {
                    s.parse::<usize>().map_err(|e| e.to_string())
                })?,
                None => vec![64, 128, 256],
            },
            guard_radius: get("guard_radius")
                .map(|v| parse_real("guard_radius", v))
                .transpose()?,
            guard_c2: real_or("guard_c2", 1.0)?,
            overflow_cap: real_or("overflow_cap", 1e8)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schemes.is_empty() {
            return Err(invalid("schemes", "at least one scheme is required".into()));
        }
        if self.seeds.is_empty() {
            return Err(invalid("seeds", "at least one seed is required".into()));
        }
        if self.norms.is_empty() {
            return Err(invalid("norms", "at least one norm is required".into()));
        }
        self.grid()?;
        positive("T", self.horizon)?;
        if self.n_coarse == 0 {
            return Err(invalid("n_coarse", "must be positive".into()));
        }
        if self.levels > 20 || self.n_coarse.checked_shl(self.levels).is_none() {
            return Err(invalid("levels", format!("{} is too deep", self.levels)));
        }
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return Err(invalid(
                "gamma",
                format!("must be nonnegative, got {}", self.gamma),
            ));
        }
        self.soliton
            .validate()
            .map_err(|e| invalid("soliton", e.to_string()))?;
        positive("nl_tol", self.nl_tol)?;
        if self.nl_max_iter == 0 {
            return Err(invalid("nl_max_iter", "must be positive".into()));
        }
        if self.compare_level > self.levels {
            return Err(invalid(
                "compare_level",
                format!("must not exceed levels = {}", self.levels),
            ));
        }
        if self.soliton_steps.is_empty() || self.soliton_steps.contains(&0) {
            return Err(invalid(
                "soliton_steps",
                "step counts must be positive".into(),
            ));
        }
        if let Some(r) = self.guard_radius {
            positive("guard_radius", r)?;
        }
        positive("guard_c2", self.guard_c2)?;
        positive("overflow_cap", self.overflow_cap)?;
        if self.schemes.contains(&SchemeKind::SplitStep) && !self.m.is_power_of_two() {
            return Err(invalid(
                "M",
                format!("split-step needs a power of two, got {}", self.m),
            ));
        }
        Ok(())
    }

    /// Canonical text form: every key in a fixed order, reals printed in
    /// shortest round-trip form.
    pub fn to_canonical(&self) -> String {
        let join = |v: Vec<String>| v.join(", ");
        let mut s = String::new();
        let mut line = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        line(
            "schemes",
            join(self.schemes.iter().map(|x| x.name().to_string()).collect()),
        );
        line("a", fmt_real(self.a));
        line("M", self.m.to_string());
        line("T", fmt_real(self.horizon));
        line("n_coarse", self.n_coarse.to_string());
        line("levels", self.levels.to_string());
        line("gamma", fmt_real(self.gamma));
        let p = &self.soliton;
        line("soliton.theta", fmt_real(p.theta));
        line("soliton.phi1", fmt_real(p.phi1));
        line("soliton.phi2", fmt_real(p.phi2));
        line("soliton.eta", fmt_real(p.eta));
        line("soliton.k", fmt_real(p.k));
        line("soliton.tau0", fmt_real(p.tau0));
        line("soliton.alpha0", fmt_real(p.alpha0));
        line(
            "seeds",
            join(self.seeds.iter().map(u64::to_string).collect()),
        );
        line(
            "norms",
            join(self.norms.iter().map(|n| n.name().to_string()).collect()),
        );
        line("out_dir", self.out_dir.display().to_string());
        line("nl_tol", fmt_real(self.nl_tol));
        line("nl_max_iter", self.nl_max_iter.to_string());
        line("snapshot_every", self.snapshot_every.to_string());
        line("workers", self.workers.to_string());
        line("compare_level", self.compare_level.to_string());
        line(
            "soliton_steps",
            join(self.soliton_steps.iter().map(usize::to_string).collect()),
        );
        if let Some(r) = self.guard_radius {
            line("guard_radius", fmt_real(r));
        }
        line("guard_c2", fmt_real(self.guard_c2));
        line("overflow_cap", fmt_real(self.overflow_cap));
        s
    }

    /// SHA-256 of the canonical form, hex encoded. The output directory and
    /// worker count do not affect results and are left out.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.out_dir = PathBuf::new();
        c.workers = 0;
        hex::encode(Sha256::digest(c.to_canonical().as_bytes()))
    }
}

fn fmt_real(v: f64) -> String {
    format!("{v:?}")
}

fn invalid(key: &str, message: String) -> HarnessError {
    HarnessError::Invalid {
        key: key.to_string(),
        message,
    }
}

fn positive(key: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(key, format!("must be positive, got {v}")))
    }
}

fn check_known(key: &str, line: usize) -> Result<()> {
    if REQUIRED.contains(&key) || OPTIONAL.contains(&key) {
        Ok(())
    } else {
        Err(HarnessError::Unknown {
            key: key.to_string(),
            line,
        })
    }
}

fn read_entries(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (k, v) = content
            .split_once('=')
            .ok_or_else(|| HarnessError::Syntax {
                line,
                message: format!("expected `key = value`, got `{content}`"),
            })?;
        let key = k.trim();
        let value = v.trim();
        if key.is_empty() || value.is_empty() {
            return Err(HarnessError::Syntax {
                line,
                message: "empty key or value".into(),
            });
        }
        check_known(key, line)?;
        if out.insert(key.to_string(), value.to_string()).is_some() {
            return Err(HarnessError::Syntax {
                line,
                message: format!("duplicate key `{key}`"),
            });
        }
    }
    Ok(out)
}

fn parse_int(key: &str, v: &str) -> Result<usize> {
    v.parse::<usize>()
        .map_err(|e| invalid(key, format!("`{v}`: {e}")))
}

fn parse_list<T>(
    key: &str,
    v: &str,
    f: impl Fn(&str) -> std::result::Result<T, String>,
) -> Result<Vec<T>> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| f(s).map_err(|e| invalid(key, format!("`{s}`: {e}"))))
        .collect()
}

/// Evaluates `[-]factor ((*|/) factor)*` where a factor is a number or `pi`.
pub fn parse_real(key: &str, v: &str) -> Result<f64> {
    let bad = |why: &str| invalid(key, format!("`{v}`: {why}"));
    let s: String = v.chars().filter(|c| !c.is_whitespace()).collect();
    let (sign, body) = match s.strip_prefix('-') {
        Some(rest) => (-1.0, rest),
        None => (1.0, s.strip_prefix('+').unwrap_or(&s)),
    };
    let mut value = 1.0;
    let mut op = '*';
    let mut rest = body;
    loop {
        let end = rest
            .char_indices()
            .skip(1)
            .find(|&(_, c)| c == '*' || c == '/')
            .map_or(rest.len(), |(i, _)| i);
        let token = &rest[..end];
        let f = match token {
            "pi" => PI,
            t => t.parse::<f64>().map_err(|_| bad("not a number"))?,
        };
        if token.starts_with(['-', '+']) {
            return Err(bad("sign only allowed at the start"));
        }
        value = if op == '*' { value * f } else { value / f };
        if end == rest.len() {
            break;
        }
        op = rest[end..].chars().next().unwrap();
        rest = &rest[end + 1..];
        if rest.is_empty() {
            return Err(bad("dangling operator"));
        }
    }
    let value = sign * value;
    if value.is_finite() {
        Ok(value)
    } else {
        Err(bad("not finite"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "schemes = cn\na = 30\nM = 64\nT = 1\nn_coarse = 4\nlevels = 2\ngamma = 0.1\nseeds = 1, 2\n";

    #[test]
    fn real_expressions() {
        let cases = [
            ("-pi/2", -PI / 2.0),
            ("1/2", 0.5),
            ("3*pi/4", 3.0 * PI / 4.0),
            ("2.5e-3", 2.5e-3),
            ("1e-3/2", 5e-4),
            ("pi", PI),
            ("+4", 4.0),
        ];
        for (s, v) in cases {
            assert_eq!(parse_real("x", s).unwrap(), v, "{s}");
        }
        for s in ["", "pi/", "2*-1", "abc", "1/0"] {
            assert!(parse_real("x", s).is_err(), "{s}");
        }
    }

    #[test]
    fn defaults_fill_optional_keys() {
        let c = ExperimentConfig::parse(MINIMAL).unwrap();
        assert_eq!(c.soliton, SolitonParams::reference());
        assert_eq!(c.n_fine(), 16);
        assert_eq!(c.compare_level, 1);
        assert_eq!(c.nl_tol, 1e-12);
        assert_eq!(c.guard(), None);
    }

    #[test]
    fn canonical_round_trip() {
        let c = ExperimentConfig::parse(&format!(
            "{MINIMAL}soliton.theta = -pi/2 # trailing\nguard_radius = 3\n"
        ))
        .unwrap();
        let text = c.to_canonical();
        let d = ExperimentConfig::parse(&text).unwrap();
        assert_eq!(c, d);
        assert_eq!(text, d.to_canonical());
    }

    #[test]
    fn missing_key_is_named() {
        let text = MINIMAL.replace("gamma = 0.1\n", "");
        let e = ExperimentConfig::parse(&text).unwrap_err();
        assert_eq!(e, HarnessError::Missing("gamma".into()));
        assert!(e.to_string().contains("gamma"));
    }

    #[test]
    fn field_level_errors() {
        let e = ExperimentConfig::parse(&MINIMAL.replace("a = 30", "a = -1")).unwrap_err();
        assert!(
            matches!(e, HarnessError::Invalid { ref key, .. } if key == "M" || key == "a"),
            "{e}"
        );
        let e = ExperimentConfig::parse(&format!("{MINIMAL}colour = red\n")).unwrap_err();
        assert!(matches!(e, HarnessError::Unknown { ref key, line: 9 } if key == "colour"));
        let e = ExperimentConfig::parse(&format!("{MINIMAL}a = 2\n")).unwrap_err();
        assert!(matches!(e, HarnessError::Syntax { line: 9, .. }));
        let e = ExperimentConfig::parse(&MINIMAL.replace("cn", "rk4")).unwrap_err();
        assert!(matches!(e, HarnessError::Invalid { ref key, .. } if key == "schemes"));
        let e = ExperimentConfig::parse(&MINIMAL.replace("cn", "splitstep").replace("64", "60"))
            .unwrap_err();
        assert!(matches!(e, HarnessError::Invalid { ref key, .. } if key == "M"));
    }

    #[test]
    fn overrides_replace_values() {
        let c = ExperimentConfig::parse_with_overrides(
            MINIMAL,
            &["gamma=0".into(), "soliton.eta = 2".into()],
        )
        .unwrap();
        assert_eq!(c.gamma, 0.0);
        assert_eq!(c.soliton.eta, 2.0);
        assert!(ExperimentConfig::parse_with_overrides(MINIMAL, &["nope=1".into()]).is_err());
        assert!(ExperimentConfig::parse_with_overrides(MINIMAL, &["gamma".into()]).is_err());
    }

    #[test]
    fn hash_ignores_output_location() {
        let a = ExperimentConfig::parse(MINIMAL).unwrap();
        let mut b = a.clone();
        b.out_dir = "elsewhere".into();
        b.workers = 3;
        assert_eq!(a.hash(), b.hash());
        b.gamma = 0.2;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
