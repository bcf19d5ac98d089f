//! Aberth–Ehrlich simultaneous root finding driven by a Newton-correction
//! oracle.
//!
//! The polynomials handled here (critical-orbit polynomials in `λ`, the
//! fixed-point equation of `fⁿ`) have coefficients far outside the `f64`
//! range, but their values and derivatives are cheap and stable to compute
//! by iterating the lift. The solver therefore only asks for the Newton
//! correction `p(z)/p'(z)`, never for coefficients.

use alloc::vec::Vec;
use core::f64::consts::TAU;

use num_complex::ComplexFloat;
use num_traits::Zero;

use crate::C64;

#[derive(Clone, Copy, Debug)]
pub struct AberthOptions {
    pub max_iter: usize,
    /// A root is settled once its correction is below `tol · max(1, |z|)`.
    pub tol: f64,
    pub polish_steps: usize,
}

impl Default for AberthOptions {
    fn default() -> Self {
        Self { max_iter: 4000, tol: 1e-14, polish_steps: 4 }
    }
}

#[derive(Clone, Debug)]
pub struct RootSet {
    pub roots: Vec<C64>,
    /// Size of the last Newton correction at each root after polishing.
    pub steps: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
}

/// Starting points on three concentric circles of radii `r/2`, `r`, `3r/2`
/// about `center`, with counts proportional to the radii and a fixed
/// irrational angular offset on each circle.
pub fn initial_circles(center: C64, radius: f64, n: usize) -> Vec<C64> {
    let n1 = n / 6;
    let n2 = n / 3;
    let n3 = n - n1 - n2;
    let mut out = Vec::with_capacity(n);
    for (count, scale, offset) in [(n1, 0.5, 0.377), (n2, 1.0, 1.113), (n3, 1.5, 2.221)] {
        for k in 0..count {
            let t = offset + TAU * k as f64 / count as f64;
            out.push(center + C64::from_polar(radius * scale, t));
        }
    }
    out
}

/// Simultaneous Aberth iteration (Gauss–Seidel ordering) from `init`, then
/// a short Newton polish.
///
/// `newton(z)` must return `p(z)/p'(z)`; a non-finite value is read as
/// `p'(z) = 0`.
pub fn aberth<F>(mut newton: F, init: Vec<C64>, opts: &AberthOptions) -> RootSet
where
    F: FnMut(C64) -> C64,
{
    let n = init.len();
    let mut z = init;
    let mut done = alloc::vec![false; n];
    let mut remaining = n;
    let mut iterations = 0;
    while remaining > 0 && iterations < opts.max_iter {
        iterations += 1;
        for k in 0..n {
            if done[k] {
                continue;
            }
            let zk = z[k];
            let corr = newton(zk);
            let w = if corr.is_zero() {
                C64::zero()
            } else {
                let mut s = C64::zero();
                for (j, zj) in z.iter().enumerate() {
                    if j != k {
                        let d = zk - zj;
                        let q = d.norm_sqr();
                        if q > 0.0 {
                            s += d.conj() / q;
                        }
                    }
                }
                if corr.is_finite() {
                    corr / (C64::new(1.0, 0.0) - corr * s)
                } else if s.is_zero() {
                    C64::new(1e-3, 1e-3) * (1.0 + zk.abs())
                } else {
                    -s.finv()
                }
            };
            if w.is_finite() {
                z[k] = zk - w;
            }
            if w.abs() <= opts.tol * zk.abs().max(1.0) {
                done[k] = true;
                remaining -= 1;
            }
        }
    }
    let mut steps = alloc::vec![0.0; n];
    for k in 0..n {
        let mut best = newton(z[k]);
        for _ in 0..opts.polish_steps {
            if !best.is_finite() || best.is_zero() {
                break;
            }
            let cand = z[k] - best;
            let next = newton(cand);
            if next.is_finite() && next.abs() < best.abs() {
                z[k] = cand;
                best = next;
            } else {
                break;
            }
        }
        steps[k] = if best.is_finite() { best.abs() } else { f64::INFINITY };
    }
    RootSet { roots: z, steps, converged: remaining == 0, iterations }
}

/// A group of numerically coincident roots.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cluster {
    pub center: C64,
    pub multiplicity: usize,
    /// Largest distance from a member to the center.
    pub spread: f64,
}

/// Merge roots closer than `radius · max(1, |z|)`, or closer than eight
/// times their own Newton corrections.
pub fn cluster(set: &RootSet, radius: f64) -> Vec<Cluster> {
    cluster_by(set, |k| (8.0 * set.steps[k]).max(radius * set.roots[k].abs().max(1.0)))
}

/// Single-linkage grouping: roots `i`, `j` merge when their distance is
/// below `max(reach(i), reach(j))`.
///
/// A root of multiplicity `m` computed in double precision splits into `m`
/// roots spread over roughly `ε^{1/m}`, so callers that can tell a multiple
/// root apart (e.g. by a derivative condition) should widen `reach` there.
pub fn cluster_by(set: &RootSet, reach: impl Fn(usize) -> f64) -> Vec<Cluster> {
    let n = set.roots.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| set.roots[a].re.total_cmp(&set.roots[b].re));
    let max_reach = (0..n).map(&reach).fold(0.0, f64::max);
    for (oi, &a) in order.iter().enumerate() {
        for &b in &order[oi + 1..] {
            if set.roots[b].re - set.roots[a].re > max_reach {
                break;
            }
            let d = (set.roots[a] - set.roots[b]).abs();
            if d < reach(a).max(reach(b)) {
                let ra = find(&mut parent, a);
                let rb = find(&mut parent, b);
                if ra != rb {
                    parent[ra.max(rb)] = ra.min(rb);
                }
            }
        }
    }
    let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
    for k in 0..n {
        let r = find(&mut parent, k);
        match groups.iter_mut().find(|(g, _)| *g == r) {
            Some((_, m)) => m.push(k),
            None => groups.push((r, alloc::vec![k])),
        }
    }
    groups
        .into_iter()
        .map(|(_, members)| {
            let m = members.len();
            let center = members.iter().map(|&k| set.roots[k]).sum::<C64>() / m as f64;
            let spread = members.iter().map(|&k| (set.roots[k] - center).abs()).fold(0.0, f64::max);
            Cluster { center, multiplicity: m, spread }
        })
        .collect()
}
