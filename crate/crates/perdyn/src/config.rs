//! Run configuration: flag values and `key=value` config files go through
//! the same validating setter.

use std::path::PathBuf;
use std::str::FromStr;

use perdyn_core::{Region, C64};

use crate::CliError;

/// Largest period accepted without `--force`.
pub const PERIOD_CEILING: usize = 12;

/// Keys understood by [`RunConfig::set`].
pub const KEYS: &[&str] = &[
    "family",
    "family-file",
    "crit",
    "periods",
    "region",
    "nx",
    "ny",
    "tol",
    "out",
    "workers",
    "force",
    "lambda",
    "max-n",
    "d",
    "kind",
    "coefficients",
    "grid-csv",
];

#[derive(Clone, Debug, PartialEq)]
pub enum FamilySource {
    Builtin(String),
    File(PathBuf),
}

/// Which divisor `roots` writes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DivisorKind {
    PerC,
    PerCStar,
    PerFStar,
}

impl DivisorKind {
    pub fn name(&self) -> &'static str {
        match self {
            DivisorKind::PerC => "per_c",
            DivisorKind::PerCStar => "per_c_star",
            DivisorKind::PerFStar => "per_f_star",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub family: FamilySource,
    /// Marked critical point; `None` means every marked point where that
    /// makes sense.
    pub crit: Option<usize>,
    pub periods: Option<Vec<usize>>,
    pub region: Option<Region>,
    pub nx: usize,
    pub ny: usize,
    pub tol: Option<f64>,
    pub out: PathBuf,
    pub workers: Option<usize>,
    pub force: bool,
    pub lambda: Option<C64>,
    pub max_n: Option<usize>,
    pub d: Option<usize>,
    pub kind: DivisorKind,
    pub coefficients: bool,
    pub grid_csv: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            family: FamilySource::Builtin("unicritical2".into()),
            crit: None,
            periods: None,
            region: None,
            nx: 512,
            ny: 512,
            tol: None,
            out: PathBuf::from("perdyn-out"),
            workers: None,
            force: false,
            lambda: None,
            max_n: None,
            d: None,
            kind: DivisorKind::PerCStar,
            coefficients: false,
            grid_csv: false,
        }
    }
}

fn bad(key: &str, value: &str, why: &str) -> CliError {
    CliError::Usage(format!("invalid value `{value}` for {key}: {why}"))
}

fn positive_int(key: &str, value: &str) -> Result<usize, CliError> {
    match value.trim().parse::<usize>() {
        Ok(0) => Err(bad(key, value, "must be positive")),
        Ok(v) => Ok(v),
        Err(_) => Err(bad(key, value, "expected a positive integer")),
    }
}

fn positive_real(key: &str, value: &str) -> Result<f64, CliError> {
    match value.trim().parse::<f64>() {
        Ok(v) if v.is_finite() && v > 0.0 => Ok(v),
        Ok(_) => Err(bad(key, value, "must be positive and finite")),
        Err(_) => Err(bad(key, value, "expected a number")),
    }
}

fn boolean(key: &str, value: &str) -> Result<bool, CliError> {
    match value.trim() {
        "true" | "1" | "yes" | "" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(bad(key, value, "expected true or false")),
    }
}

/// `0.3+0.1i`, `-2`, `i`, `1e-3-2.5i`.
pub fn parse_complex(s: &str) -> Result<C64, String> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let t = t.replace('j', "i");
    C64::from_str(&t).map_err(|_| format!("`{s}` is not a complex number"))
}

/// `a..b` (inclusive), a single period, or a comma list of either.
pub fn parse_periods(s: &str) -> Result<Vec<usize>, String> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim) {
        let (lo, hi) = match part.split_once("..") {
            Some((a, b)) => (a.trim(), b.trim().trim_start_matches('=')),
            None => (part, part),
        };
        let lo: usize = lo.parse().map_err(|_| format!("`{part}` is not a period range"))?;
        let hi: usize = hi.parse().map_err(|_| format!("`{part}` is not a period range"))?;
        if lo == 0 {
            return Err("periods start at 1".into());
        }
        if hi < lo {
            return Err(format!("empty period range `{part}`"));
        }
        out.extend(lo..=hi);
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

/// `re0,re1,im0,im1`.
pub fn parse_region(s: &str) -> Result<Region, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| format!("`{s}` is not re0,re1,im0,im1"))?;
    if v.len() != 4 || v.iter().any(|x| !x.is_finite()) {
        return Err(format!("`{s}` is not re0,re1,im0,im1"));
    }
    Region::new(v[0], v[1], v[2], v[3]).map_err(|e| e.to_string())
}

impl RunConfig {
    /// Sets one key; unknown keys and non-positive numbers are rejected.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let v = value.trim();
        match key {
            "family" => self.family = FamilySource::Builtin(v.to_string()),
            "family-file" => self.family = FamilySource::File(PathBuf::from(v)),
            "crit" => self.crit = Some(v.parse().map_err(|_| bad(key, value, "expected an index"))?),
            "periods" => self.periods = Some(parse_periods(v).map_err(|e| bad(key, value, &e))?),
            "region" => self.region = Some(parse_region(v).map_err(|e| bad(key, value, &e))?),
            "nx" => self.nx = positive_int(key, v)?,
            "ny" => self.ny = positive_int(key, v)?,
            "tol" => self.tol = Some(positive_real(key, v)?),
            "out" => {
                if v.is_empty() {
                    return Err(bad(key, value, "empty path"));
                }
                self.out = PathBuf::from(v)
            }
            "workers" => self.workers = Some(positive_int(key, v)?),
            "force" => self.force = boolean(key, v)?,
            "lambda" => self.lambda = Some(parse_complex(v).map_err(|e| bad(key, value, &e))?),
            "max-n" => self.max_n = Some(positive_int(key, v)?),
            "d" => {
                let d = positive_int(key, v)?;
                if d < 2 {
                    return Err(bad(key, value, "degree must be at least 2"));
                }
                self.d = Some(d)
            }
            "kind" => {
                self.kind = match v {
                    "per_c" => DivisorKind::PerC,
                    "per_c_star" => DivisorKind::PerCStar,
                    "per_f_star" => DivisorKind::PerFStar,
                    _ => return Err(bad(key, value, "expected per_c, per_c_star or per_f_star")),
                }
            }
            "coefficients" => self.coefficients = boolean(key, v)?,
            "grid-csv" => self.grid_csv = boolean(key, v)?,
            _ => return Err(CliError::Usage(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Applies a `key = value` file; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<(), CliError> {
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("line {}: expected key = value", no + 1)))?;
            self.set(k.trim(), v).map_err(|e| CliError::Usage(format!("line {}: {e}", no + 1)))?;
        }
        Ok(())
    }

    /// `PERDYN_OUT`, when set and nonempty, replaces the output directory.
    pub fn apply_env(&mut self, out: Option<String>) {
        if let Some(o) = out.filter(|o| !o.trim().is_empty()) {
            self.out = PathBuf::from(o);
        }
    }

    /// Refuses periods above [`PERIOD_CEILING`] unless forced.
    pub fn check_periods(&self, periods: &[usize]) -> Result<(), CliError> {
        if let Some(&n) = periods.iter().max() {
            if n > PERIOD_CEILING && !self.force {
                return Err(CliError::Usage(format!(
                    "period {n} is above the ceiling {PERIOD_CEILING}; pass --force to run it anyway"
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_forms() {
        assert_eq!(parse_complex("0.3+0.1i").unwrap(), C64::new(0.3, 0.1));
        assert_eq!(parse_complex("-2").unwrap(), C64::new(-2.0, 0.0));
        assert_eq!(parse_complex("i").unwrap(), C64::new(0.0, 1.0));
        assert_eq!(parse_complex("1e-3 - 2.5i").unwrap(), C64::new(1e-3, -2.5));
        assert!(parse_complex("abc").is_err());
    }

    #[test]
    fn period_forms() {
        assert_eq!(parse_periods("1..6").unwrap(), vec![1, 2, 3, 4, 5, 6]);
        assert_eq!(parse_periods("2").unwrap(), vec![2]);
        assert_eq!(parse_periods("6,8,10..12").unwrap(), vec![6, 8, 10, 11, 12]);
        assert!(parse_periods("0").is_err());
        assert!(parse_periods("0..3").is_err());
        assert!(parse_periods("4..2").is_err());
    }

    #[test]
    fn region_form() {
        let r = parse_region("-2.5,1.5,-1.5,1.5").unwrap();
        assert_eq!((r.re_min, r.im_max), (-2.5, 1.5));
        assert!(parse_region("1,0,0,1").is_err());
        assert!(parse_region("0,1,0").is_err());
    }

    #[test]
    fn keys_are_validated() {
        let mut c = RunConfig::default();
        assert!(c.set("nx", "0").is_err());
        assert!(c.set("tol", "-1e-3").is_err());
        assert!(c.set("workers", "x").is_err());
        assert!(c.set("colour", "red").is_err());
        c.set("nx", "64").unwrap();
        assert_eq!(c.nx, 64);
        for k in KEYS {
            assert!(!matches!(c.clone().set(k, "?"), Err(CliError::Usage(m)) if m.starts_with("unknown")));
        }
        let err = c.apply_text("nx = 32\n\n# comment\nbogus = 1\n").unwrap_err();
        assert!(err.to_string().contains("line 4"));
    }

    #[test]
    fn env_overrides_out() {
        let mut c = RunConfig::default();
        c.set("out", "a").unwrap();
        c.apply_env(Some("b".into()));
        assert_eq!(c.out, PathBuf::from("b"));
        c.apply_env(Some(String::new()));
        assert_eq!(c.out, PathBuf::from("b"));
    }

    #[test]
    fn ceiling_needs_force() {
        let mut c = RunConfig::default();
        assert!(c.check_periods(&[13]).is_err());
        c.force = true;
        assert!(c.check_periods(&[13]).is_ok());
    }
}
