//! Möbius arithmetic, dynatomic degrees and polynomials, formally exact
//! periodic points and the symmetric functions of their multipliers.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::TAU;

use num_complex::ComplexFloat;
use num_integer::Integer;
use num_traits::Zero;

use crate::dynamics::{find_cycles, spherical_derivative, CycleSet};
use crate::family::{HomogeneousMap, MarkedFamily};
use crate::geometry::{chordal_distance, normalize, wedge, LogComplex, ProjectivePoint};
use crate::{Error, Result, C64};

/// Möbius function.
pub fn mobius(n: usize) -> i32 {
    assert!(n >= 1, "mobius is defined for n >= 1");
    let mut n = n;
    let mut sign = 1;
    let mut p = 2;
    while p * p <= n {
        if n.is_multiple_of(p) {
            n /= p;
            if n.is_multiple_of(p) {
                return 0;
            }
            sign = -sign;
        }
        p += 1;
    }
    if n > 1 {
        sign = -sign;
    }
    sign
}

/// Divisors of `n` in increasing order.
pub fn divisors(n: usize) -> Vec<usize> {
    (1..=n).filter(|m| n.is_multiple_of(*m)).collect()
}

/// `ν(n) = Σ_{m|n} μ(n/m)(d^m + 1)`, the number of formally exact points
/// of period `n` for a degree-`d` map.
pub fn nu(n: usize, d: usize) -> u128 {
    let mut acc: i128 = 0;
    for m in divisors(n) {
        let term = (d as i128).checked_pow(m as u32).expect("d^m overflows i128") + 1;
        acc += mobius(n / m) as i128 * term;
    }
    acc as u128
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DynatomicSpec {
    pub n: usize,
    pub d: usize,
    pub nu: u128,
    /// `(m, μ(n/m))` over the divisors `m` of `n`.
    pub divisor_list: Vec<(usize, i32)>,
}

impl DynatomicSpec {
    pub fn new(n: usize, d: usize) -> Self {
        let divisor_list = divisors(n).into_iter().map(|m| (m, mobius(n / m))).collect();
        Self { n, d, nu: nu(n, d), divisor_list }
    }
}

/// `Φ*_n(λ, p) = Π_{m|n} (f̃_λ^m(p) ∧ p)^{μ(n/m)}`, carried in log scale.
///
/// A vanishing factor with `m < n` means `p` is periodic with a period
/// dividing `n` properly; that is reported as an error rather than resolved.
pub fn dynatomic_eval(fam: &MarkedFamily, lambda: C64, p: &ProjectivePoint, n: usize) -> Result<LogComplex> {
    dynatomic_eval_map(&fam.at(lambda), p, n)
}

pub fn dynatomic_eval_map(map: &impl HomogeneousMap, p: &ProjectivePoint, n: usize) -> Result<LogComplex> {
    let d = map.degree() as f64;
    let base = normalize(p.pair())?;
    let mut x = base;
    let mut out = LogComplex::ONE;
    let mut zero_at_top = false;
    for m in 1..=n {
        let next = normalize(map.apply(x.unit.pair()))?;
        x.log_norm = d * x.log_norm + next.log_norm;
        x.unit = next.unit;
        if !n.is_multiple_of(m) {
            continue;
        }
        let mu = mobius(n / m);
        if mu == 0 {
            continue;
        }
        let w = wedge(&x.unit, &base.unit);
        if w.abs() < 1e-15 {
            if m < n {
                return Err(Error::VanishingDenominator(m));
            }
            zero_at_top = true;
            continue;
        }
        let mut f = LogComplex::from_c64(w);
        f.log_abs += x.log_norm + base.log_norm;
        out = out.mul(f.powi(mu as i64));
    }
    Ok(if zero_at_top { LogComplex::ZERO } else { out })
}

/// A point of `Fix**(fⁿ)`: exact period `n`, or exact period `m | n` with
/// `m`-multiplier a primitive `(n/m)`-th root of unity.
#[derive(Clone, Debug)]
pub struct FixStarPoint {
    pub point: ProjectivePoint,
    pub exact_period: usize,
    /// Multiplicity as a zero of `Φ*_n`.
    pub multiplicity: usize,
    /// Multiplier of the cycle through the point (period `exact_period`).
    pub cycle_multiplier: C64,
    /// `(fⁿ)'` at the point.
    pub n_multiplier: C64,
    /// Spherical derivative `f^#` at the point.
    pub spherical: f64,
}

#[derive(Clone, Debug)]
pub struct FixStarSet {
    pub n: usize,
    pub nu: u128,
    pub points: Vec<FixStarPoint>,
    /// Exact-period-`n` cycles, each with its multiplier.
    pub exact_cycles: Vec<(C64, usize)>,
    pub warnings: Vec<String>,
}

impl FixStarSet {
    pub fn count(&self) -> usize {
        self.points.iter().map(|p| p.multiplicity).sum()
    }

    /// The `ν(n)` values `(fⁿ)'(z_k)`, repeated by multiplicity.
    pub fn multipliers(&self) -> Vec<C64> {
        self.points.iter().flat_map(|p| core::iter::repeat_n(p.n_multiplier, p.multiplicity)).collect()
    }
}

/// `ρ` within `tol` of a primitive `q`-th root of unity.
pub fn is_primitive_root_of_unity(rho: C64, q: usize, tol: f64) -> bool {
    (0..q).filter(|k| k.gcd(&q) == 1).any(|k| (rho - C64::from_polar(1.0, TAU * k as f64 / q as f64)).abs() < tol)
}

/// `Fix**(f_λⁿ)` with multiplicities, from cycle enumeration at every
/// divisor of `n`.
///
/// The multiplicity of `z` in `Φ*_n` is `Σ_{k|n} μ(n/k)·mult_k(z)` where
/// `mult_k(z)` is its multiplicity as a root of `f^k(z) = z`. Points of
/// lower exact period enter only at parabolic parameters; they are checked
/// against the root-of-unity criterion and disagreements are reported.
pub fn dynatomic_roots(fam: &MarkedFamily, lambda: C64, n: usize) -> Result<FixStarSet> {
    let map = fam.at(lambda);
    let mut sets: Vec<(usize, CycleSet)> = Vec::new();
    for k in divisors(n) {
        sets.push((k, find_cycles(fam, lambda, k)?));
    }
    fix_star_from_sets(&map, n, &sets)
}

/// [`dynatomic_roots`] from precomputed cycle sets `(k, find_cycles(k))`
/// for every divisor `k` of `n`.
pub fn fix_star_from_sets(map: &impl HomogeneousMap, n: usize, sets: &[(usize, CycleSet)]) -> Result<FixStarSet> {
    let d = map.degree();
    let expected = nu(n, d);
    let top = &sets.iter().find(|(k, _)| *k == n).ok_or(Error::Precondition("missing cycle set for n".into()))?.1;
    let mut warnings = top.warnings.clone();
    let mut points = Vec::new();
    let mut exact_cycles = Vec::new();
    for cy in &top.cycles {
        let m = cy.exact_period;
        // The cycle as seen at its own exact period: there it is usually a
        // simple root and hence most accurately located.
        let own = sets
            .iter()
            .find(|(k, _)| *k == m)
            .and_then(|(_, s)| match_cycle(s, cy))
            .unwrap_or(cy);
        let mut mult: i64 = 0;
        for (k, s) in sets {
            if k % m != 0 {
                continue;
            }
            let mk = match_cycle(s, cy).map_or(0, |c| c.multiplicity);
            mult += mobius(n / k) as i64 * mk as i64;
        }
        if m == n {
            exact_cycles.push((own.multiplier, mult.max(0) as usize));
        } else {
            let primitive = is_primitive_root_of_unity(own.multiplier, n / m, 1e-6);
            if primitive != (mult > 0) {
                warnings.push(format!(
                    "period-{m} cycle with multiplier {:.3e}{:+.3e}i: root-of-unity test {} but multiplicity {mult}",
                    own.multiplier.re,
                    own.multiplier.im,
                    if primitive { "passes" } else { "fails" }
                ));
            }
        }
        if mult <= 0 {
            continue;
        }
        let n_multiplier = own.multiplier.powi((n / m) as i32);
        for p in &own.points {
            points.push(FixStarPoint {
                point: *p,
                exact_period: m,
                multiplicity: mult as usize,
                cycle_multiplier: own.multiplier,
                n_multiplier,
                spherical: spherical_derivative(map, p.normalized().pair()),
            });
        }
    }
    let out = FixStarSet { n, nu: expected, points, exact_cycles, warnings };
    if out.count() as u128 != expected {
        return Err(Error::Classification(format!("Fix** has {} points with multiplicity, expected ν({n}) = {expected}", out.count())));
    }
    Ok(out)
}

fn match_cycle<'a>(set: &'a CycleSet, cy: &crate::dynamics::Cycle) -> Option<&'a crate::dynamics::Cycle> {
    let p = cy.points[0];
    set.cycles
        .iter()
        .filter(|c| c.exact_period == cy.exact_period)
        .map(|c| (c, c.points.iter().map(|q| chordal_distance(q, &p)).fold(f64::INFINITY, f64::min)))
        .filter(|(_, dist)| *dist < 1e-4)
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(c, _)| c)
}

/// Elementary symmetric functions `σ_0, …, σ_ν` of the values, from the
/// expansion of `Π (x + ρ_k) = Σ σ_j x^{ν−j}`.
pub fn elementary_symmetric(values: &[C64]) -> Vec<C64> {
    let mut e = alloc::vec![C64::zero(); values.len() + 1];
    e[0] = C64::new(1.0, 0.0);
    for (k, &r) in values.iter().enumerate() {
        for j in (1..=k + 1).rev() {
            let prev = e[j - 1];
            e[j] += r * prev;
        }
    }
    e
}

/// `σ*_j(n, λ)`: the `j`-th elementary symmetric function of the `n`-th
/// iterate multipliers over `Fix**(f_λⁿ)`.
pub fn sigma_star(fam: &MarkedFamily, lambda: C64, n: usize, j: usize) -> Result<C64> {
    let fix = dynatomic_roots(fam, lambda, n)?;
    let e = elementary_symmetric(&fix.multipliers());
    e.get(j).copied().ok_or_else(|| Error::Precondition(format!("j = {j} exceeds ν({n}) = {}", fix.nu)))
}

/// `(p*_n(λ, w))ⁿ = Σ_j σ*_j (−w)^{ν−j}`.
pub fn p_star_power_eval(fam: &MarkedFamily, lambda: C64, n: usize, w: C64) -> Result<C64> {
    let fix = dynatomic_roots(fam, lambda, n)?;
    Ok(p_star_power_from(&fix, w))
}

pub fn p_star_power_from(fix: &FixStarSet, w: C64) -> C64 {
    let e = elementary_symmetric(&fix.multipliers());
    let nu = e.len() - 1;
    e.iter().enumerate().map(|(j, s)| s * (-w).powi((nu - j) as i32)).sum()
}

/// The three expressions for `log|p*_n(λ, 0)|`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PStarLogs {
    /// `(1/n) log|σ*_ν|`.
    pub sigma: f64,
    /// `Σ log|f'|` over `Fix*(fⁿ)`, i.e. over exact-period cycles.
    pub exact: f64,
    /// `Σ_k log|f'(z_k)|` over `Fix**` with multiplicity (spherical
    /// derivatives, so points at infinity need no special chart).
    pub formal: f64,
}

impl PStarLogs {
    pub fn value(&self) -> f64 {
        self.sigma.exp()
    }

    /// Largest pairwise disagreement of the logarithms; `0` when all three
    /// are `−∞`.
    pub fn spread(&self) -> f64 {
        let v = [self.sigma, self.exact, self.formal];
        if v.iter().all(|x| *x == f64::NEG_INFINITY) {
            return 0.0;
        }
        let mut worst = 0.0f64;
        for a in v {
            for b in v {
                worst = worst.max((a - b).abs());
            }
        }
        worst
    }
}

pub fn p_star_logs(fix: &FixStarSet) -> PStarLogs {
    let n = fix.n as f64;
    let sigma = fix.points.iter().map(|p| p.multiplicity as f64 * p.n_multiplier.abs().ln()).sum::<f64>() / n;
    let exact = fix.exact_cycles.iter().map(|(rho, mult)| *mult as f64 * rho.abs().ln()).sum();
    let formal = fix.points.iter().map(|p| p.multiplicity as f64 * p.spherical.ln()).sum();
    PStarLogs { sigma, exact, formal }
}

/// `|p*_n(λ, 0)|`, cross-checked between its three expressions.
///
/// Values below `1e−12` are treated as zero and not cross-checked.
pub fn p_star_abs(fam: &MarkedFamily, lambda: C64, n: usize) -> Result<f64> {
    let logs = p_star_logs(&dynatomic_roots(fam, lambda, n)?);
    let v = logs.value();
    if v > 1e-12 && logs.spread() > 1e-8 {
        return Err(Error::Classification(format!("p*_n expressions disagree by {:.2e} in log", logs.spread())));
    }
    Ok(if v > 1e-12 { v } else { 0.0 })
}
