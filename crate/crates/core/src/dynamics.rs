//! Dynamics at a fixed parameter: scale-safe orbits, Green functions,
//! periodic cycles and multipliers, Lipschitz bounds, the Przytycki
//! inequality and Lyapunov exponents.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::TAU;

use num_complex::ComplexFloat;

use crate::dynatomic::divisors;
use crate::family::{HomogeneousMap, MarkedFamily};
use crate::geometry::{chordal_distance, normalize, pair_norm, wedge_pair, ProjectivePoint, ScaledVector};
use crate::roots::{aberth, cluster_by, AberthOptions, RootSet};
use crate::{Error, Result, C64};

/// Default tolerance of [`green_function`] when called from other modules.
pub const GREEN_TOL: f64 = 1e-10;
pub const GREEN_MAX_ITER: usize = 200;
/// Chordal displacement under which a point counts as returning to itself.
pub const PERIOD_TOL: f64 = 1e-8;
/// Chordal distance within which an orbit point is matched to the nearest
/// computed root.
const LOOSE_MATCH: f64 = 1e-4;
/// Roots of `fⁿ(z) = z` closer than this (relative, chart coordinate) are
/// merged.
const MERGE_RADIUS: f64 = 1e-12;
/// Merge radius around roots where `(fⁿ)'` is within `1e−3` of `1`, the
/// only places where multiple roots can occur.
const PARABOLIC_RADIUS: f64 = 1e-4;
/// Largest `n·log d` accepted by cycle enumeration.
pub const CYCLE_CAP: f64 = 24.0;

#[inline]
fn unit(v: [C64; 2]) -> Result<([C64; 2], f64)> {
    let n = pair_norm(&v);
    if !(n > 0.0 && n.is_finite()) {
        return Err(Error::DegenerateLift);
    }
    Ok(([v[0] / n, v[1] / n], n.ln()))
}

/// Hermitian product `⟨x, y⟩ = x·ȳ`.
#[inline]
fn inner(x: [C64; 2], y: [C64; 2]) -> C64 {
    x[0] * y[0].conj() + x[1] * y[1].conj()
}

fn point(v: [C64; 2]) -> ProjectivePoint {
    ProjectivePoint { p0: v[0], p1: v[1] }
}

/// Iterates of a lift kept as unit directions plus accumulated log-norms.
#[derive(Clone, Debug)]
pub struct OrbitLog {
    pub lambda: C64,
    pub base: ProjectivePoint,
    pub states: Vec<ScaledVector>,
}

impl OrbitLog {
    /// `states[k]` represents `f̃_λ^k(base)`.
    pub fn new(fam: &MarkedFamily, lambda: C64, base: ProjectivePoint, steps: usize) -> Result<Self> {
        let map = fam.at(lambda);
        let d = map.degree() as f64;
        let mut states = Vec::with_capacity(steps + 1);
        let mut s = normalize(base.pair())?;
        states.push(s);
        for _ in 0..steps {
            let next = normalize(map.apply(s.unit.pair()))?;
            s = ScaledVector { unit: next.unit, log_norm: d * s.log_norm + next.log_norm };
            states.push(s);
        }
        Ok(Self { lambda, base, states })
    }
}

/// `G(p) = lim log‖f̃ⁿ(p)‖ / dⁿ` for the representative `p` as given.
///
/// Iteration stops once the geometric tail `(M + 1)·d^{−k}/(1 − 1/d)` is
/// below `tol`, where `M` bounds the per-step log-norms seen so far.
pub fn green_function(fam: &MarkedFamily, lambda: C64, p: &ProjectivePoint, tol: f64, n_max: usize) -> Result<f64> {
    green_of(&fam.at(lambda), p.pair(), tol, n_max)
}

pub fn green_of(map: &impl HomogeneousMap, p: [C64; 2], tol: f64, n_max: usize) -> Result<f64> {
    let d = map.degree() as f64;
    let (mut u, mut g) = unit(p)?;
    let mut m_seen = 0.0f64;
    let mut scale = 1.0;
    for _ in 0..n_max {
        let (next, l) = unit(map.apply(u))?;
        scale /= d;
        g += l * scale;
        m_seen = m_seen.max(l.abs());
        u = next;
        if (m_seen + 1.0) * scale / (1.0 - 1.0 / d) < tol {
            return Ok(g);
        }
    }
    Err(Error::GreenNonConvergence(n_max))
}

/// `G^λ(c̃_j(λ))` for the normalized lift of the `j`-th critical point.
pub fn activity_potential(fam: &MarkedFamily, j: usize, lambda: C64) -> Result<f64> {
    let c = fam.critical_at(j, lambda)?;
    green_of(&fam.at(lambda), c, GREEN_TOL, GREEN_MAX_ITER)
}

/// Spherical derivative of `[f̃]` at `p` with respect to the chordal metric.
pub fn spherical_derivative(map: &impl HomogeneousMap, p: [C64; 2]) -> f64 {
    let n2 = p[0].norm_sqr() + p[1].norm_sqr();
    let v = map.apply(p);
    let v2 = v[0].norm_sqr() + v[1].norm_sqr();
    map.det_jacobian(p).abs() * n2 / (map.degree() as f64 * v2)
}

/// Multiplier of a cycle given by consecutive points.
///
/// With unit representatives `p_i` and `f̃(p_i) = κ_i p_{i+1}`, the
/// derivative of one step in the coordinate `[p_i + t q_i]`, `p_i ∧ q_i = 1`,
/// is `det Df̃(p_i) / (d κ_i²)`. The product over the cycle is independent
/// of any affine chart.
pub fn multiplier_of(map: &impl HomogeneousMap, points: &[ProjectivePoint]) -> C64 {
    let d = map.degree() as f64;
    let units: Vec<[C64; 2]> = points.iter().map(|p| p.normalized().pair()).collect();
    let n = units.len();
    let mut rho = C64::new(1.0, 0.0);
    for i in 0..n {
        let p = units[i];
        let kappa = inner(map.apply(p), units[(i + 1) % n]);
        rho *= map.det_jacobian(p) / (d * kappa * kappa);
    }
    rho
}

pub fn multiplier(fam: &MarkedFamily, lambda: C64, points: &[ProjectivePoint]) -> C64 {
    multiplier_of(&fam.at(lambda), points)
}

/// `(fⁿ)'` at a point that is (nearly) fixed by `fⁿ`, along its own orbit.
fn orbit_multiplier(map: &impl HomogeneousMap, p: [C64; 2], n: usize) -> C64 {
    let d = map.degree() as f64;
    let mut u = unit(p).map(|x| x.0).unwrap_or(p);
    let start = u;
    let mut rho = C64::new(1.0, 0.0);
    for k in 0..n {
        let v = map.apply(u);
        let next = if k + 1 == n { start } else { unit(v).map(|x| x.0).unwrap_or(v) };
        let kappa = inner(v, next);
        rho *= map.det_jacobian(u) / (d * kappa * kappa);
        u = next;
    }
    rho
}

/// Image of a point under `f^m`, as a unit vector.
fn iterate_unit(map: &impl HomogeneousMap, p: [C64; 2], m: usize) -> [C64; 2] {
    let mut u = p;
    for _ in 0..m {
        let v = map.apply(u);
        u = unit(v).map(|x| x.0).unwrap_or(v);
    }
    u
}

#[derive(Clone, Debug)]
pub struct Cycle {
    pub points: Vec<ProjectivePoint>,
    pub exact_period: usize,
    pub multiplier: C64,
    /// Multiplicity of each point as a root of `fⁿ(z) = z`.
    pub multiplicity: usize,
}

#[derive(Clone, Debug)]
pub struct CycleSet {
    pub n: usize,
    pub cycles: Vec<Cycle>,
    pub warnings: Vec<String>,
}

impl CycleSet {
    /// Fixed points of `fⁿ` counted with multiplicity.
    pub fn total_multiplicity(&self) -> usize {
        self.cycles.iter().map(|c| c.points.len() * c.multiplicity).sum()
    }

    pub fn of_period(&self, m: usize) -> impl Iterator<Item = &Cycle> {
        self.cycles.iter().filter(move |c| c.exact_period == m)
    }
}

/// Angles of fixed unitary charts `t ↦ t·u + v`; arbitrary but fixed so
/// that results are reproducible.
#[allow(clippy::approx_constant)]
const CHARTS: [(f64, f64); 3] = [(0.4123, 0.7321), (1.0471, 2.3117), (0.2213, 4.1009)];

fn chart(a: f64, phi: f64) -> ([C64; 2], [C64; 2]) {
    let (s, c) = (libm::sin(a), libm::cos(a));
    let e = C64::from_polar(1.0, phi);
    ([C64::new(c, 0.0), e * s], [-e.conj() * s, C64::new(c, 0.0)])
}

fn fixed_point_roots(map: &impl HomogeneousMap, n: usize, u: [C64; 2], v: [C64; 2]) -> RootSet {
    let d = map.degree();
    let total = d.pow(n as u32) + 1;
    let newton = |t: C64| -> C64 {
        let q = [t * u[0] + v[0], t * u[1] + v[1]];
        let s = pair_norm(&q).max(1.0);
        let mut x = [q[0] / s, q[1] / s];
        let mut dx = [u[0] / s, u[1] / s];
        for _ in 0..n {
            let j = map.jacobian(x);
            let fx = map.apply(x);
            let fdx = [j[0][0] * dx[0] + j[0][1] * dx[1], j[1][0] * dx[0] + j[1][1] * dx[1]];
            let r = pair_norm(&fx);
            if !(r > 0.0) {
                return C64::new(f64::NAN, 0.0);
            }
            x = [fx[0] / r, fx[1] / r];
            dx = [fdx[0] / r, fdx[1] / r];
        }
        let h = wedge_pair(&x, &q);
        let dh = wedge_pair(&dx, &q) + wedge_pair(&x, &u);
        h / dh
    };
    let mut init: Vec<C64> = backward_tree(map, n, u, v)
        .into_iter()
        .map(|p| inner(p, u) / inner(p, v))
        .collect();
    init.truncate(total - 1);
    while init.len() < total {
        init.push(C64::from_polar(3.7, 0.61 + init.len() as f64));
    }
    aberth(newton, init, &AberthOptions::default())
}

/// The `d` preimages of `[w]`, found in the chart `t ↦ t·u + v`.
fn preimages(map: &impl HomogeneousMap, w: [C64; 2], u: [C64; 2], v: [C64; 2]) -> Vec<[C64; 2]> {
    let d = map.degree();
    let newton = |t: C64| -> C64 {
        let q = [t * u[0] + v[0], t * u[1] + v[1]];
        let j = map.jacobian(q);
        let du = [j[0][0] * u[0] + j[0][1] * u[1], j[1][0] * u[0] + j[1][1] * u[1]];
        wedge_pair(&map.apply(q), &w) / wedge_pair(&du, &w)
    };
    let init = (0..d).map(|k| C64::from_polar(1.0, 0.4 + TAU * k as f64 / d as f64)).collect();
    let opts = AberthOptions { max_iter: 500, tol: 1e-12, polish_steps: 2 };
    aberth(newton, init, &opts)
        .roots
        .into_iter()
        .filter(|t| t.is_finite())
        .map(|t| {
            let q = [t * u[0] + v[0], t * u[1] + v[1]];
            unit(q).map(|x| x.0).unwrap_or(q)
        })
        .collect()
}

/// The `dⁿ` points of `f^{−n}(w₀)` for a fixed generic `w₀`. Backward
/// images equidistribute like periodic points, which makes them good
/// starting values for the fixed points of `fⁿ`.
fn backward_tree(map: &impl HomogeneousMap, n: usize, u: [C64; 2], v: [C64; 2]) -> Vec<[C64; 2]> {
    let w0 = [C64::new(0.4127, 0.2311) * u[0] + v[0], C64::new(0.4127, 0.2311) * u[1] + v[1]];
    let mut level = alloc::vec![w0];
    for _ in 0..n {
        level = level.iter().flat_map(|&w| preimages(map, w, u, v)).collect();
    }
    level
}

/// All fixed points of `f_λⁿ`, grouped into cycles by exact period.
pub fn find_cycles(fam: &MarkedFamily, lambda: C64, n: usize) -> Result<CycleSet> {
    cycles_of_map(&fam.at(lambda), n)
}

pub fn cycles_of_map(map: &impl HomogeneousMap, n: usize) -> Result<CycleSet> {
    let d = map.degree();
    if n == 0 || n as f64 * (d as f64).ln() > CYCLE_CAP {
        return Err(Error::CapExceeded(format!("cycle enumeration for n = {n}, d = {d}")));
    }
    let total = d.pow(n as u32) + 1;
    let mut found = None;
    for (a, phi) in CHARTS {
        let (u, v) = chart(a, phi);
        let set = fixed_point_roots(map, n, u, v);
        if set.converged && set.roots.iter().all(|t| t.is_finite()) {
            found = Some((set, u, v));
            break;
        }
    }
    let (set, u, v) = found.ok_or_else(|| Error::RootFinder(format!("fixed points of f^{n} did not converge")))?;
    let to_unit = |t: C64| -> [C64; 2] {
        let q = [t * u[0] + v[0], t * u[1] + v[1]];
        unit(q).map(|x| x.0).unwrap_or(q)
    };
    let near_parabolic: Vec<bool> =
        set.roots.iter().map(|&t| (orbit_multiplier(map, to_unit(t), n) - C64::new(1.0, 0.0)).abs() < 1e-3).collect();
    let clusters = cluster_by(&set, |k| {
        let s = set.roots[k].abs().max(1.0);
        let base = (8.0 * set.steps[k]).max(MERGE_RADIUS * s);
        if near_parabolic[k] {
            base.max(PARABOLIC_RADIUS * s)
        } else {
            base
        }
    });
    let mut warnings = Vec::new();
    let mult_total: usize = clusters.iter().map(|c| c.multiplicity).sum();
    if mult_total != total {
        return Err(Error::RootFinder(format!("found {mult_total} fixed points of f^{n}, expected {total}")));
    }

    struct Fp {
        p: [C64; 2],
        mult: usize,
        period: usize,
        used: bool,
    }
    let divs = divisors(n);
    let mut pts: Vec<Fp> = Vec::with_capacity(clusters.len());
    for c in &clusters {
        let p = to_unit(c.center);
        // Chordal error of the computed point: Newton step or cluster spread.
        let step = set.roots.iter().zip(&set.steps).find(|(t, _)| (**t - c.center).abs() <= c.spread).map_or(0.0, |x| *x.1);
        let err = (step + c.spread) / (1.0 + c.center.norm_sqr()) + 1e-15;
        let mut period = n;
        let mut img = p;
        let mut gain = 1.0;
        let mut done = 0;
        for &m in &divs {
            while done < m {
                gain *= spherical_derivative(map, img).max(1.0);
                img = iterate_unit(map, img, 1);
                done += 1;
            }
            let disp = chordal_distance(&point(img), &point(p));
            // The error of f^m(p) is the error of p times the derivative
            // gain along the orbit.
            if disp < (10.0 * gain * err).clamp(1e-13, LOOSE_MATCH) {
                period = m;
                break;
            }
        }
        if c.multiplicity > 1 {
            warnings.push(format!("parabolic coalescence: {} roots of f^{n}(z) = z merged", c.multiplicity));
        }
        pts.push(Fp { p, mult: c.multiplicity, period, used: false });
    }

    let mut cycles = Vec::new();
    for i in 0..pts.len() {
        if pts[i].used {
            continue;
        }
        let m = pts[i].period;
        let mult = pts[i].mult;
        pts[i].used = true;
        let mut members = alloc::vec![pts[i].p];
        let mut cur = pts[i].p;
        for _ in 1..m {
            let img = iterate_unit(map, cur, 1);
            let best = (0..pts.len())
                .filter(|&k| !pts[k].used && pts[k].period == m)
                .map(|k| (k, chordal_distance(&point(pts[k].p), &point(img))))
                .min_by(|a, b| a.1.total_cmp(&b.1));
            let Some((k, dist)) = best else {
                return Err(Error::Classification(format!("orbit of a period-{m} point leaves the fixed-point set")));
            };
            if dist > LOOSE_MATCH {
                return Err(Error::Classification(format!("no fixed point of f^{n} near an orbit point (distance {dist:.2e})")));
            }
            pts[k].used = true;
            members.push(pts[k].p);
            cur = pts[k].p;
        }
        let points: Vec<ProjectivePoint> = members.into_iter().map(point).collect();
        let multiplier = multiplier_of(map, &points);
        cycles.push(Cycle { points, exact_period: m, multiplier, multiplicity: mult });
    }
    Ok(CycleSet { n, cycles, warnings })
}

/// Sampled upper estimate of the chordal Lipschitz constant of `f_λ`.
///
/// Both closed unit disks `[z : 1]` and `[1 : w]` are sampled on a
/// `density × density` grid; the maximum of the spherical derivative is
/// multiplied by `1.05` and floored at `1`.
pub fn lipschitz_constant(fam: &MarkedFamily, lambda: C64, density: usize) -> f64 {
    lipschitz_of(&fam.at(lambda), density)
}

pub fn lipschitz_of(map: &impl HomogeneousMap, density: usize) -> f64 {
    let n = density.max(2);
    let one = C64::new(1.0, 0.0);
    let mut best = 0.0f64;
    for i in 0..n {
        for k in 0..n {
            let z = C64::new(-1.0 + 2.0 * i as f64 / (n - 1) as f64, -1.0 + 2.0 * k as f64 / (n - 1) as f64);
            if z.norm() > 1.0 {
                continue;
            }
            best = best.max(spherical_derivative(map, [z, one]));
            best = best.max(spherical_derivative(map, [one, z]));
        }
    }
    for k in 0..4 * n {
        let z = C64::from_polar(1.0, TAU * k as f64 / (4 * n) as f64);
        best = best.max(spherical_derivative(map, [z, one]));
    }
    (1.05 * best).max(1.0)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PrzytyckiRow {
    pub n: usize,
    pub distance: f64,
    /// `1 / (20 Lⁿ)`.
    pub bound: f64,
    pub pass: bool,
    /// `log[fⁿ(c), c] / (dⁿ + 1)`.
    pub ratio: f64,
}

#[derive(Clone, Debug)]
pub struct PrzytyckiReport {
    pub lipschitz: f64,
    pub rows: Vec<PrzytyckiRow>,
}

impl PrzytyckiReport {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }
}

/// Compare `[fⁿ(c), c]` with `1/(20 Lⁿ)` for `n = 1..=n_max`.
///
/// The critical point must lie in the Julia set and must not be periodic;
/// an exact return is reported as a precondition failure.
pub fn przytycki_check(fam: &MarkedFamily, lambda: C64, j: usize, n_max: usize) -> Result<PrzytyckiReport> {
    let map = fam.at(lambda);
    let d = map.degree() as f64;
    let lip = lipschitz_of(&map, 200);
    let c = unit(fam.critical_at(j, lambda)?)?.0;
    let mut u = c;
    let mut rows = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        u = iterate_unit(&map, u, 1);
        let distance = chordal_distance(&point(u), &point(c));
        if distance == 0.0 {
            return Err(Error::Precondition(format!("critical point returns exactly after {n} steps (periodic)")));
        }
        let log_bound = -(20f64.ln()) - n as f64 * lip.ln();
        let bound = log_bound.exp();
        let ratio = distance.ln() / (d.powi(n as i32) + 1.0);
        rows.push(PrzytyckiRow { n, distance, bound, pass: distance.ln() >= log_bound, ratio });
    }
    Ok(PrzytyckiReport { lipschitz: lip, rows })
}

/// `L(f_λ) = −log d + Σ_j G^λ(c̃_j(λ)) − (2/d) log|Res(f̃_λ)|`.
pub fn lyapunov_demarco(fam: &MarkedFamily, lambda: C64) -> Result<f64> {
    fam.require_normalized()?;
    let map = fam.at(lambda);
    let d = fam.degree() as f64;
    let res = crate::family::resultant(fam, lambda)?;
    let mut sum = 0.0;
    for j in 0..fam.critical.len() {
        sum += green_of(&map, fam.critical_at(j, lambda)?, 1e-9, GREEN_MAX_ITER)?;
    }
    Ok(-d.ln() + sum - 2.0 / d * res.abs().ln())
}

/// `(1/(n dⁿ)) Σ log|(fⁿ)'(z)|` over the repelling points of exact period
/// `n`.
pub fn lyapunov_repelling(fam: &MarkedFamily, lambda: C64, n: usize) -> Result<f64> {
    let set = find_cycles(fam, lambda, n)?;
    Ok(lyapunov_from_cycles(&set, fam.degree()))
}

pub fn lyapunov_from_cycles(set: &CycleSet, d: usize) -> f64 {
    let n = set.n;
    let sum: f64 = set
        .of_period(n)
        .filter(|c| c.multiplier.abs() > 1.0)
        .map(|c| c.points.len() as f64 * c.multiplier.abs().ln())
        .sum();
    sum / (n as f64 * (d as f64).powi(n as i32))
}

/// Number of steps after which the marked point returns to itself under
/// `f_λ`, if it does so within `cap` steps (chordal tolerance
/// [`PERIOD_TOL`]).
pub fn critical_period(fam: &MarkedFamily, j: usize, lambda: C64, cap: usize) -> Result<Option<usize>> {
    let map = fam.at(lambda);
    let c = unit(fam.critical_at(j, lambda)?)?.0;
    let mut u = c;
    for k in 1..=cap {
        u = iterate_unit(&map, u, 1);
        if chordal_distance(&point(u), &point(c)) < PERIOD_TOL {
            return Ok(Some(k));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::LiftAt;
    use core::f64::consts::LN_2;
    use num_traits::Zero;
    use crate::family::{builtin_rational, builtin_unicritical};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn pp(a: C64, b: C64) -> ProjectivePoint {
        ProjectivePoint::new(a, b).unwrap()
    }

    #[test]
    fn orbit_log_recurrence() {
        let f = builtin_unicritical(2).unwrap();
        let l = c(0.3, 0.4);
        let o = OrbitLog::new(&f, l, pp(c(1.5, -0.2), c(0.7, 0.0)), 12).unwrap();
        let map = f.at(l);
        for k in 0..12 {
            let v = map.apply(o.states[k].unit.pair());
            let s = normalize(v).unwrap();
            assert!(chordal_distance(&s.unit, &o.states[k + 1].unit) < 1e-15);
            assert!((o.states[k + 1].log_norm - (2.0 * o.states[k].log_norm + s.log_norm)).abs() < 1e-12);
        }
    }

    #[test]
    fn green_examples() {
        let f = builtin_unicritical(2).unwrap();
        let g = |l: C64, p: ProjectivePoint| green_function(&f, l, &p, 1e-12, 200).unwrap();
        assert!(g(c(0.0, 0.0), pp(c(0.0, 0.0), c(1.0, 0.0))).abs() < 1e-12);
        assert!((g(c(0.0, 0.0), pp(c(2.0, 0.0), c(0.0, 0.0))) - LN_2).abs() < 1e-12);
        let big = g(c(1e8, 0.0), pp(c(0.0, 0.0), c(1.0, 0.0)));
        assert!((big - 0.5 * 1e8f64.ln()).abs() < 1e-6);
    }

    #[test]
    fn activity_examples() {
        let f = builtin_unicritical(2).unwrap();
        assert!((activity_potential(&f, 0, c(0.0, 0.0)).unwrap() - LN_2).abs() < 1e-9);
        assert!((activity_potential(&f, 0, c(-1.0, 0.0)).unwrap() - LN_2).abs() < 1e-9);
        let v = activity_potential(&f, 0, c(1e8, 0.0)).unwrap();
        assert!((v - 0.5 * 1e8f64.ln() - LN_2).abs() < 1e-5);
    }

    #[test]
    fn fixed_points_of_z_squared() {
        let f = builtin_unicritical(2).unwrap();
        let set = find_cycles(&f, c(0.0, 0.0), 1).unwrap();
        assert_eq!(set.total_multiplicity(), 3);
        let mut found: Vec<(Option<C64>, C64)> =
            set.cycles.iter().map(|cy| (cy.points[0].to_affine(), cy.multiplier)).collect();
        found.sort_by(|a, b| a.1.re.total_cmp(&b.1.re));
        for (z, rho) in &found {
            match z {
                Some(z) if z.abs() < 1e-9 => assert!(rho.abs() < 1e-9),
                Some(z) => {
                    assert!((z - c(1.0, 0.0)).abs() < 1e-12);
                    assert!((rho - c(2.0, 0.0)).abs() < 1e-12);
                }
                None => assert!(rho.abs() < 1e-9),
            }
        }
        assert!(found.iter().any(|(z, _)| z.map_or(true, |z| z.abs() > 1e9)));
    }

    #[test]
    fn two_cycles() {
        let f = builtin_unicritical(2).unwrap();
        let set = find_cycles(&f, c(0.0, 0.0), 2).unwrap();
        let two: Vec<&Cycle> = set.of_period(2).collect();
        assert_eq!(two.len(), 1);
        assert!((two[0].multiplier - c(4.0, 0.0)).abs() < 1e-10);
        for p in &two[0].points {
            let z = p.to_affine().unwrap();
            assert!((z.abs() - 1.0).abs() < 1e-12);
            assert!((z.arg().abs() - TAU / 3.0).abs() < 1e-12);
        }
        let set = find_cycles(&f, c(-1.0, 0.0), 2).unwrap();
        let two: Vec<&Cycle> = set.of_period(2).collect();
        assert_eq!(two.len(), 1);
        assert!(two[0].multiplier.abs() < 1e-12);
    }

    #[test]
    fn multiplier_examples() {
        let f = builtin_unicritical(2).unwrap();
        let z0 = c(0.0, 0.0);
        assert!((multiplier(&f, z0, &[pp(c(1.0, 0.0), c(1.0, 0.0))]) - c(2.0, 0.0)).abs() < 1e-14);
        assert_eq!(multiplier(&f, z0, &[ProjectivePoint::infinity()]), C64::zero());
        let cyc = [ProjectivePoint::affine(z0), ProjectivePoint::affine(c(-1.0, 0.0))];
        assert_eq!(multiplier(&f, c(-1.0, 0.0), &cyc), C64::zero());
    }

    /// `M ∘ f̃ ∘ M⁻¹` for a fixed invertible matrix `M`.
    struct Conjugated<'a> {
        inner: &'a LiftAt,
        m: [[C64; 2]; 2],
        minv: [[C64; 2]; 2],
    }

    fn matvec(m: &[[C64; 2]; 2], v: [C64; 2]) -> [C64; 2] {
        [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
    }

    fn matmul(a: &[[C64; 2]; 2], b: &[[C64; 2]; 2]) -> [[C64; 2]; 2] {
        let mut out = [[C64::zero(); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        out
    }

    impl<'a> Conjugated<'a> {
        fn new(inner: &'a LiftAt, m: [[C64; 2]; 2]) -> Self {
            let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
            let minv = [[m[1][1] / det, -m[0][1] / det], [-m[1][0] / det, m[0][0] / det]];
            Self { inner, m, minv }
        }
    }

    impl HomogeneousMap for Conjugated<'_> {
        fn degree(&self) -> usize {
            self.inner.degree()
        }
        fn apply(&self, p: [C64; 2]) -> [C64; 2] {
            matvec(&self.m, self.inner.apply(matvec(&self.minv, p)))
        }
        fn jacobian(&self, p: [C64; 2]) -> [[C64; 2]; 2] {
            matmul(&matmul(&self.m, &self.inner.jacobian(matvec(&self.minv, p))), &self.minv)
        }
    }

    #[test]
    fn multiplier_is_conjugation_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = builtin_rational().unwrap();
        let l = c(0.21, -0.13);
        let set = find_cycles(&f, l, 4).unwrap();
        let map = f.at(l);
        for _ in 0..4 {
            let mut m = [[C64::zero(); 2]; 2];
            for row in &mut m {
                for x in row.iter_mut() {
                    *x = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                }
            }
            let g = Conjugated::new(&map, m);
            for cy in &set.cycles {
                let moved: Vec<ProjectivePoint> = cy.points.iter().map(|p| point(matvec(&m, p.pair()))).collect();
                let rho = multiplier_of(&g, &moved);
                assert!((rho - cy.multiplier).abs() <= 1e-8 * cy.multiplier.abs().max(1e-3));
            }
        }
    }

    #[test]
    fn cycle_count_matches_degree() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = builtin_unicritical(2).unwrap();
        for _ in 0..5 {
            let l = c(rng.gen_range(-2.0..0.5), rng.gen_range(-1.0..1.0));
            for n in 1..=8 {
                let set = find_cycles(&f, l, n).unwrap();
                assert_eq!(set.total_multiplicity(), (1 << n) + 1);
                for cy in &set.cycles {
                    assert_eq!(cy.points.len(), cy.exact_period);
                    let m = cy.points.len();
                    for i in 0..m {
                        let img = point(f.at(l).apply(cy.points[i].pair()));
                        assert!(chordal_distance(&img, &cy.points[(i + 1) % m]) < 1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn parabolic_point_is_merged() {
        let f = builtin_unicritical(2).unwrap();
        let set = find_cycles(&f, c(-0.75, 0.0), 2).unwrap();
        assert_eq!(set.total_multiplicity(), 5);
        let para = set.cycles.iter().find(|cy| cy.multiplicity == 3).expect("triple root");
        assert_eq!(para.exact_period, 1);
        assert!((para.points[0].to_affine().unwrap() - c(-0.5, 0.0)).abs() < 1e-4);
        assert!((para.multiplier - c(-1.0, 0.0)).abs() < 1e-4);
        assert!(set.warnings.iter().any(|w| w.contains("parabolic")));
    }

    #[test]
    fn lipschitz_examples() {
        let f = builtin_unicritical(2).unwrap();
        let map = f.at(c(0.0, 0.0));
        let l0 = lipschitz_of(&map, 200);
        // Dense oracle: sup of 2r(1+r²)/(1+r⁴) over r ≥ 0, attained at r = 1.
        let oracle = (0..=100000).map(|k| 3.0 * k as f64 / 100000.0).map(|r| 2.0 * r * (1.0 + r * r) / (1.0 + r * r * r * r)).fold(0.0, f64::max);
        assert!(l0 >= oracle && l0 <= 1.05 * oracle + 1e-9);
        assert!(l0 >= 2.0);
        let swap = Conjugated::new(&map, [[C64::zero(), c(1.0, 0.0)], [c(1.0, 0.0), C64::zero()]]);
        assert!((lipschitz_of(&swap, 200) / l0 - 1.0).abs() < 0.05);
        assert!(lipschitz_constant(&f, c(-2.0, 0.0), 200) >= 4.0);
    }

    #[test]
    fn green_homogeneity_and_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let fams = [builtin_unicritical(2).unwrap(), builtin_rational().unwrap()];
        for k in 0..50 {
            let f = &fams[k % 2];
            let rg = f.region;
            let l = c(rng.gen_range(rg.re_min..rg.re_max), rng.gen_range(rg.im_min..rg.im_max));
            let p = [c(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)), c(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0))];
            let s = C64::from_polar(rng.gen_range(0.1..10.0), rng.gen_range(0.0..TAU));
            let map = f.at(l);
            let g = green_of(&map, p, 1e-12, 400).unwrap();
            let gk = green_of(&map, [s * p[0], s * p[1]], 1e-12, 400).unwrap();
            assert!((gk - g - s.abs().ln()).abs() < 1e-9);
            let gf = green_of(&map, map.apply(p), 1e-12, 400).unwrap();
            assert!((gf - 2.0 * g).abs() < 1e-8);
        }
    }

    #[test]
    fn demarco_examples() {
        let f = builtin_unicritical(2).unwrap();
        assert!((lyapunov_demarco(&f, c(0.0, 0.0)).unwrap() - LN_2).abs() < 1e-6);
        assert!((lyapunov_demarco(&f, c(-1.0, 0.0)).unwrap() - LN_2).abs() < 1e-6);
        // Escape-rate oracle for the critical orbit of z² + 2 in the affine
        // chart: G = lim 2^{−n} log|zₙ|.
        let mut z = 0.0f64;
        let mut g = 0.0;
        for n in 1..=40 {
            z = z * z + 2.0;
            if z > 1e150 {
                break;
            }
            g = z.ln() / 2f64.powi(n);
        }
        let expect = LN_2 + g;
        assert!((lyapunov_demarco(&f, c(2.0, 0.0)).unwrap() - expect).abs() < 1e-3);
        assert!((expect - 1.1480).abs() < 1e-3);
        let partial = crate::MarkedFamily::new("p", f.lift.clone(), alloc::vec![f.critical[0].clone()], f.region);
        assert_eq!(lyapunov_demarco(&partial, c(0.0, 0.0)), Err(Error::NotFullyMarked));
        let r = builtin_rational().unwrap();
        assert!((lyapunov_demarco(&r, c(0.0, 0.0)).unwrap() - LN_2).abs() < 1e-9);
    }

    #[test]
    fn repelling_examples() {
        let f = builtin_unicritical(2).unwrap();
        let v = lyapunov_repelling(&f, c(0.0, 0.0), 8).unwrap();
        assert!((0.60..=0.70).contains(&v));
        let v = lyapunov_repelling(&f, c(-1.0, 0.0), 10).unwrap();
        assert!((v - LN_2).abs() < 5e-2);
        let v = lyapunov_repelling(&f, c(2.0, 0.0), 10).unwrap();
        assert!((v - 1.1480).abs() < 5e-2);
    }

    #[test]
    fn przytycki_examples() {
        let f = builtin_unicritical(2).unwrap();
        let rep = przytycki_check(&f, c(0.0, 1.0), 0, 25).unwrap();
        assert!(rep.all_pass());
        assert!(rep.rows[19].ratio.abs() < 1e-3);
        assert!(rep.rows[19].ratio.abs() < rep.rows[2].ratio.abs());
        let rep = przytycki_check(&f, c(-2.0, 0.0), 0, 25).unwrap();
        assert!(rep.all_pass());
        assert!((rep.rows[24].distance - rep.rows[5].distance).abs() < 1e-12);
        assert!(matches!(przytycki_check(&f, c(-1.0, 0.0), 0, 5), Err(Error::Precondition(_))));
    }
}
