//! Plain-text family definitions.
//!
//! ```text
//! # z ↦ z² + λ
//! [family]
//! name = quadratic
//! degree = 2
//!
//! [lift]
//! # Ak, Bk: coefficient of Z^(d-k) W^k in each component, as a polynomial
//! # in λ with ascending coefficients; missing entries are zero
//! A0 = 1
//! A2 = 0, 1
//! B2 = 1
//!
//! [critical]
//! # one marked point per line: Z-coefficients ; W-coefficients
//! c = 0 ; 2
//! c = -2 ; 0
//!
//! [region]
//! re = -2.5, 1.5
//! im = -1.5, 1.5
//! ```
//!
//! Coefficients are complex numbers (`2`, `-i`, `0.5+1e-3i`). When every
//! coefficient of a polynomial is a Gaussian integer written without a
//! decimal point or exponent, the polynomial is kept exact. A fully marked
//! family is Jacobian-normalized on load.

use std::path::Path;

use perdyn_core::exact::{ExactPoly, GaussInt};
use perdyn_core::family::{jacobian_normalize, CriticalLift, HomogeneousLift};
use perdyn_core::lambda_poly::LambdaPolynomial;
use perdyn_core::{MarkedFamily, Region};

use crate::config::parse_complex;
use crate::{io_err, CliError};

fn at(line: usize, msg: impl std::fmt::Display) -> CliError {
    CliError::Usage(format!("family file line {line}: {msg}"))
}

fn polynomial(text: &str, line: usize) -> Result<LambdaPolynomial, CliError> {
    let tokens: Vec<&str> = text.split(',').map(str::trim).collect();
    if tokens.iter().any(|t| t.is_empty()) {
        return Err(at(line, "empty coefficient"));
    }
    let values = tokens
        .iter()
        .map(|t| parse_complex(t).map_err(|e| at(line, e)))
        .collect::<Result<Vec<_>, _>>()?;
    let integral = tokens.iter().all(|t| !t.contains(['.', 'e', 'E']))
        && values.iter().all(|v| v.re.fract() == 0.0 && v.im.fract() == 0.0 && v.norm() < 9.0e15);
    if integral {
        let g = values.iter().map(|v| GaussInt::new(v.re as i64, v.im as i64)).collect();
        Ok(LambdaPolynomial::from_exact(ExactPoly::new(g)))
    } else {
        Ok(LambdaPolynomial::from_complex(values))
    }
}

fn pair(text: &str, line: usize) -> Result<(f64, f64), CliError> {
    let v: Vec<&str> = text.split(',').map(str::trim).collect();
    if v.len() != 2 {
        return Err(at(line, "expected two numbers `lo, hi`"));
    }
    let p = |s: &str| s.parse::<f64>().map_err(|_| at(line, format!("`{s}` is not a number")));
    Ok((p(v[0])?, p(v[1])?))
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    None,
    Family,
    Lift,
    Critical,
    Region,
}

/// Parses a family definition; errors cite the offending line.
pub fn parse_family(text: &str) -> Result<MarkedFamily, CliError> {
    let mut section = Section::None;
    let mut name: Option<String> = None;
    let mut degree: Option<(usize, usize)> = None;
    let mut a: Vec<(usize, usize, LambdaPolynomial)> = Vec::new();
    let mut b: Vec<(usize, usize, LambdaPolynomial)> = Vec::new();
    let mut critical: Vec<CriticalLift> = Vec::new();
    let mut critical_line = 0;
    let mut re: Option<(f64, f64)> = None;
    let mut im: Option<(f64, f64)> = None;
    let mut region_line = 0;
    let mut last = 0;

    for (k, raw) in text.lines().enumerate() {
        let no = k + 1;
        last = no;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(h) = line.strip_prefix('[') {
            let h = h.strip_suffix(']').ok_or_else(|| at(no, "unterminated section header"))?;
            section = match h.trim() {
                "family" => Section::Family,
                "lift" => Section::Lift,
                "critical" => Section::Critical,
                "region" => {
                    region_line = no;
                    Section::Region
                }
                other => return Err(at(no, format!("unknown section [{other}]"))),
            };
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| at(no, "expected key = value"))?;
        let (key, value) = (key.trim(), value.trim());
        match section {
            Section::None => return Err(at(no, "entry outside any section")),
            Section::Family => match key {
                "name" if name.is_none() => name = Some(value.to_string()),
                "degree" if degree.is_none() => {
                    let d: usize = value.parse().map_err(|_| at(no, "degree must be an integer"))?;
                    if d < 2 {
                        return Err(at(no, "degree must be at least 2"));
                    }
                    degree = Some((d, no));
                }
                "name" | "degree" => return Err(at(no, format!("duplicate key `{key}`"))),
                _ => return Err(at(no, format!("unknown key `{key}` in [family]"))),
            },
            Section::Lift => {
                let (target, idx) = match key.split_at_checked(1) {
                    Some(("A", i)) => (&mut a, i),
                    Some(("B", i)) => (&mut b, i),
                    _ => return Err(at(no, format!("unknown key `{key}` in [lift]"))),
                };
                let i: usize = idx.parse().map_err(|_| at(no, format!("unknown key `{key}` in [lift]")))?;
                if target.iter().any(|(j, _, _)| *j == i) {
                    return Err(at(no, format!("duplicate key `{key}`")));
                }
                target.push((i, no, polynomial(value, no)?));
            }
            Section::Critical => {
                if key != "c" {
                    return Err(at(no, format!("unknown key `{key}` in [critical]")));
                }
                let (z, w) = value.split_once(';').ok_or_else(|| at(no, "expected `Z-coefficients ; W-coefficients`"))?;
                critical.push(CriticalLift::new(polynomial(z, no)?, polynomial(w, no)?));
                critical_line = no;
            }
            Section::Region => match key {
                "re" if re.is_none() => re = Some(pair(value, no)?),
                "im" if im.is_none() => im = Some(pair(value, no)?),
                "re" | "im" => return Err(at(no, format!("duplicate key `{key}`"))),
                _ => return Err(at(no, format!("unknown key `{key}` in [region]"))),
            },
        }
    }

    let (d, _) = degree.ok_or_else(|| at(last, "missing `degree` in [family]"))?;
    let mut ca = vec![LambdaPolynomial::zero(); d + 1];
    let mut cb = vec![LambdaPolynomial::zero(); d + 1];
    for (list, out) in [(a, &mut ca), (b, &mut cb)] {
        for (i, no, p) in list {
            if i > d {
                return Err(at(no, format!("index {i} exceeds the degree {d}")));
            }
            out[i] = p;
        }
    }
    if critical.is_empty() {
        return Err(at(last, "no marked critical points"));
    }
    let (re, im) = match (re, im) {
        (Some(re), Some(im)) => (re, im),
        _ => return Err(at(region_line.max(last), "the region needs both `re` and `im`")),
    };
    let region = Region::new(re.0, re.1, im.0, im.1).map_err(|e| at(region_line, e))?;
    let lift = HomogeneousLift::new(d, ca, cb).map_err(|e| at(last, e))?;
    let fam = MarkedFamily::new(name.unwrap_or_else(|| "custom".into()), lift, critical, region);
    if fam.critical.len() > 2 * d - 2 {
        return Err(at(critical_line, format!("{} marked points for degree {d}", fam.critical.len())));
    }
    if fam.fully_marked() {
        return jacobian_normalize(&fam).map_err(|e| at(critical_line, e));
    }
    Ok(fam)
}

pub fn load_family(path: &Path) -> Result<MarkedFamily, CliError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    parse_family(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}
