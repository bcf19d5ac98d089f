//! Potentials on a rectangular `λ`-grid: activity and bifurcation
//! potentials, logarithmic potentials of divisors, discrete Laplacian masses
//! and the convergence diagnostics comparing them.
//!
//! Grid nodes are `re_min + i·dx`, `im_min + j·dy` with `dx = width/(nx−1)`,
//! stored row-major at `j·nx + i`. Evaluation goes through a
//! [`GridEvaluator`] so that callers can run cells in parallel; every
//! reduction here runs in row-major order.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::TAU;

use num_complex::ComplexFloat;

use crate::dynamics::activity_potential;
use crate::family::{resultant, MarkedFamily, Region};
use crate::geometry::pair_norm;
use crate::param_loci::{n_zero, per_c_both, per_c_star, Divisor};
use crate::{Error, Result, C64};

/// Cell-wise evaluation strategy.
pub trait GridEvaluator {
    /// `[f(0), …, f(len − 1)]`, or the error of the first failing index.
    fn eval(&self, len: usize, f: &(dyn Fn(usize) -> Result<f64> + Sync)) -> Result<Vec<f64>>;
}

/// Evaluates cells one after another.
#[derive(Clone, Copy, Debug, Default)]
pub struct Serial;

impl GridEvaluator for Serial {
    fn eval(&self, len: usize, f: &(dyn Fn(usize) -> Result<f64> + Sync)) -> Result<Vec<f64>> {
        (0..len).map(f).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub region: Region,
    pub nx: usize,
    pub ny: usize,
}

impl GridSpec {
    pub fn new(region: Region, nx: usize, ny: usize) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(Error::Precondition("a grid needs at least 2 nodes per axis".into()));
        }
        Ok(Self { region, nx, ny })
    }

    pub fn dx(&self) -> f64 {
        self.region.width() / (self.nx - 1) as f64
    }

    pub fn dy(&self) -> f64 {
        self.region.height() / (self.ny - 1) as f64
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn node(&self, i: usize, j: usize) -> C64 {
        C64::new(self.region.re_min + i as f64 * self.dx(), self.region.im_min + j as f64 * self.dy())
    }

    /// Node of a row-major index.
    pub fn at(&self, k: usize) -> C64 {
        self.node(k % self.nx, k / self.nx)
    }

    /// Length of a cell diagonal.
    pub fn diagonal(&self) -> f64 {
        libm::hypot(self.dx(), self.dy())
    }

    fn require(&self, min: usize) -> Result<()> {
        if self.nx < min || self.ny < min {
            return Err(Error::Precondition(format!("resolution must be at least {min}×{min}")));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GridKind {
    Activity(usize),
    Bifurcation,
    Divisor(usize),
    Difference,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PotentialGrid {
    pub spec: GridSpec,
    pub kind: GridKind,
    pub values: Vec<f64>,
    /// Cells whose value was clipped near a divisor point.
    pub clipped: Vec<bool>,
}

impl PotentialGrid {
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.spec.nx + i]
    }

    /// Smallest and largest finite value.
    pub fn min_max(&self) -> (f64, f64) {
        self.values
            .iter()
            .filter(|v| v.is_finite())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    pub fn clipped_count(&self) -> usize {
        self.clipped.iter().filter(|c| **c).count()
    }

    /// `self − other` on the same grid; clip flags are combined.
    pub fn difference(&self, other: &PotentialGrid) -> Result<PotentialGrid> {
        if self.spec != other.spec {
            return Err(Error::Precondition("grids differ".into()));
        }
        Ok(PotentialGrid {
            spec: self.spec,
            kind: GridKind::Difference,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
            clipped: self.clipped.iter().zip(&other.clipped).map(|(a, b)| *a || *b).collect(),
        })
    }
}

fn plain(spec: GridSpec, kind: GridKind, values: Vec<f64>) -> PotentialGrid {
    let clipped = alloc::vec![false; values.len()];
    PotentialGrid { spec, kind, values, clipped }
}

/// `G^λ(c̃_j(λ))` on the grid.
pub fn activity_grid(fam: &MarkedFamily, j: usize, spec: GridSpec, ev: &dyn GridEvaluator) -> Result<PotentialGrid> {
    spec.require(16)?;
    fam.critical_lift(j)?;
    let values = ev.eval(spec.len(), &|k| activity_at(fam, j, spec.at(k)))?;
    Ok(plain(spec, GridKind::Activity(j), values))
}

fn activity_at(fam: &MarkedFamily, j: usize, l: C64) -> Result<f64> {
    activity_potential(fam, j, l)
}

/// `L(f_λ) = −log d + Σ_j G^λ(c̃_j(λ)) − (2/d) log|Res(f̃_λ)|` on the grid.
pub fn bifurcation_grid(fam: &MarkedFamily, spec: GridSpec, ev: &dyn GridEvaluator) -> Result<PotentialGrid> {
    spec.require(16)?;
    fam.require_normalized()?;
    let values = ev.eval(spec.len(), &|k| {
        let l = spec.at(k);
        let mut s = 0.0;
        for j in 0..fam.critical.len() {
            s += activity_at(fam, j, l)?;
        }
        Ok(s + harmonic_part(fam, l)?)
    })?;
    Ok(plain(spec, GridKind::Bifurcation, values))
}

/// `−log d − (2/d) log|Res(f̃_λ)|`.
fn harmonic_part(fam: &MarkedFamily, l: C64) -> Result<f64> {
    let d = fam.degree() as f64;
    Ok(-d.ln() - 2.0 / d * resultant(fam, l)?.abs().ln())
}

/// Largest `|L − (−log d + Σ_j G_j − (2/d) log|Res|)|` over the grid.
pub fn bifurcation_identity_residual(fam: &MarkedFamily, bif: &PotentialGrid, activities: &[PotentialGrid]) -> Result<f64> {
    let mut worst = 0.0f64;
    for k in 0..bif.values.len() {
        let s: f64 = activities.iter().map(|g| g.values[k]).sum();
        worst = worst.max((bif.values[k] - s - harmonic_part(fam, bif.spec.at(k))?).abs());
    }
    Ok(worst)
}

/// `Σ m_i log max(|λ − r_i|, floor)` and whether any term was clipped.
fn log_sum(l: C64, roots: &[(C64, f64)], floor: f64) -> (f64, bool) {
    let floor2 = floor * floor;
    let mut acc = 0.0;
    let mut prod = 1.0f64;
    let mut clipped = false;
    for &(r, m) in roots {
        let mut d2 = (l - r).norm_sqr();
        if d2 < floor2 {
            d2 = floor2;
            clipped = true;
        }
        if m == 1.0 {
            prod *= d2;
            if !(1e-250..=1e250).contains(&prod) {
                acc += prod.ln();
                prod = 1.0;
            }
        } else {
            acc += m * d2.ln();
        }
    }
    (0.5 * (acc + prod.ln()), clipped)
}

fn divisor_roots(div: &Divisor) -> Vec<(C64, f64)> {
    div.all().map(|e| (e.root, e.multiplicity as f64)).collect()
}

/// `u(λ) = (1/normalization) Σ m_i log|λ − r_i|` over every root of the
/// divisor; within one cell diagonal of a root the distance is clipped at the
/// diagonal and the cell is flagged.
pub fn divisor_potential_grid(div: &Divisor, spec: GridSpec, ev: &dyn GridEvaluator) -> Result<PotentialGrid> {
    let roots = divisor_roots(div);
    if roots.is_empty() {
        return Err(Error::Precondition("the divisor is empty".into()));
    }
    let floor = spec.diagonal();
    let norm = div.normalization;
    let values = ev.eval(spec.len(), &|k| Ok(log_sum(spec.at(k), &roots, floor).0 / norm))?;
    let clipped = clip_mask(spec, &roots, floor);
    Ok(PotentialGrid { spec, kind: GridKind::Divisor(div.degree), values, clipped })
}

/// Nodes closer than `floor` to some root.
fn clip_mask(spec: GridSpec, roots: &[(C64, f64)], floor: f64) -> Vec<bool> {
    let mut mask = alloc::vec![false; spec.len()];
    let (dx, dy) = (spec.dx(), spec.dy());
    let (rx, ry) = (libm::ceil(floor / dx) as i64, libm::ceil(floor / dy) as i64);
    let r = spec.region;
    for &(root, _) in roots {
        let ci = libm::round((root.re - r.re_min) / dx);
        let cj = libm::round((root.im - r.im_min) / dy);
        if !ci.is_finite() || !cj.is_finite() {
            continue;
        }
        let (ci, cj) = (ci as i64, cj as i64);
        for j in (cj - ry).max(0)..=(cj + ry).min(spec.ny as i64 - 1) {
            for i in (ci - rx).max(0)..=(ci + rx).min(spec.nx as i64 - 1) {
                let (i, j) = (i as usize, j as usize);
                if (spec.node(i, j) - root).norm_sqr() < floor * floor {
                    mask[j * spec.nx + i] = true;
                }
            }
        }
    }
    mask
}

/// Weight of a coordinate against `[lo, hi]`: 1 inside, ½ on an end, 0
/// outside.
fn axis_weight(x: f64, lo: f64, hi: f64, h: f64) -> f64 {
    let eps = 1e-9 * h;
    if (x - lo).abs() <= eps || (x - hi).abs() <= eps {
        0.5
    } else if x > lo && x < hi {
        1.0
    } else {
        0.0
    }
}

/// `(1/2π) Σ Δ_h u · dx dy` over the nodes of `sub`, with the five-point
/// Laplacian. Nodes on an edge of `sub` count half, corners a quarter.
pub fn laplacian_mass(grid: &PotentialGrid, sub: &Region) -> Result<f64> {
    let spec = grid.spec;
    let (dx, dy) = (spec.dx(), spec.dy());
    let r = &spec.region;
    let slack = 1e-9;
    if sub.re_min < r.re_min + 2.0 * dx - slack * dx
        || sub.re_max > r.re_max - 2.0 * dx + slack * dx
        || sub.im_min < r.im_min + 2.0 * dy - slack * dy
        || sub.im_max > r.im_max - 2.0 * dy + slack * dy
    {
        return Err(Error::BoundaryViolation);
    }
    let nx = spec.nx;
    let u = &grid.values;
    let mut total = 0.0;
    for j in 1..spec.ny - 1 {
        let wy = axis_weight(r.im_min + j as f64 * dy, sub.im_min, sub.im_max, dy);
        if wy == 0.0 {
            continue;
        }
        for i in 1..nx - 1 {
            let wx = axis_weight(r.re_min + i as f64 * dx, sub.re_min, sub.re_max, dx);
            if wx == 0.0 {
                continue;
            }
            let k = j * nx + i;
            let lap = (u[k + 1] + u[k - 1] - 2.0 * u[k]) / (dx * dx) + (u[k + nx] + u[k - nx] - 2.0 * u[k]) / (dy * dy);
            total += wx * wy * lap;
        }
    }
    Ok(total * dx * dy / TAU)
}

/// Total multiplicity of the divisor in `sub`, counting points on an edge
/// half and on a corner a quarter.
pub fn divisor_mass(div: &Divisor, sub: &Region, h: f64) -> f64 {
    div.all()
        .map(|e| {
            e.multiplicity as f64
                * axis_weight(e.root.re, sub.re_min, sub.re_max, h)
                * axis_weight(e.root.im, sub.im_min, sub.im_max, h)
        })
        .sum()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Annulus {
    pub center: C64,
    pub r_in: f64,
    pub r_out: f64,
}

impl Annulus {
    pub fn contains(&self, l: C64) -> bool {
        let r = (l - self.center).abs();
        r >= self.r_in && r <= self.r_out
    }
}

impl Default for Annulus {
    fn default() -> Self {
        Self { center: C64::new(0.0, 0.0), r_in: 2.2, r_out: 3.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Sequence {
    /// `Per_c(n)/(dⁿ + 1)` against `G(c̃_j)`.
    PerC,
    /// `Per*_c(n)/(dⁿ + 1)` against `G(c̃_j)`.
    PerCStar,
    /// `Per*_f(n, 0)/dⁿ` against the bifurcation potential.
    PerFStar,
}

impl Sequence {
    pub fn name(&self) -> &'static str {
        match self {
            Sequence::PerC => "per_c",
            Sequence::PerCStar => "per_c_star",
            Sequence::PerFStar => "per_f_star",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub sequence: Sequence,
    pub n: usize,
    /// Mean of `|e_n|` over unclipped cells.
    pub l1: f64,
    /// `sup |e_n|` over unclipped cells in the exterior annulus.
    pub sup_exterior: f64,
    pub exterior_cells: usize,
    pub root_count: usize,
    pub normalization: f64,
    pub clipped: usize,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConvergenceReport {
    /// Sorted by sequence, then `n`.
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceReport {
    pub fn of(&self, s: Sequence) -> impl Iterator<Item = &ConvergenceRow> {
        self.rows.iter().filter(move |r| r.sequence == s)
    }

    /// Both error columns strictly decrease along `n` for this sequence.
    pub fn strictly_decreasing(&self, s: Sequence) -> bool {
        let rows: Vec<&ConvergenceRow> = self.of(s).collect();
        rows.windows(2).all(|w| w[1].l1 < w[0].l1 && w[1].sup_exterior < w[0].sup_exterior)
    }
}

/// A convergence run with the grids behind it.
#[derive(Clone, Debug)]
pub struct ConvergenceRun {
    pub report: ConvergenceReport,
    /// Activity grids of every marked point.
    pub activities: Vec<PotentialGrid>,
    pub bifurcation: PotentialGrid,
    /// `e_n` per sequence and `n`.
    pub errors: Vec<(Sequence, usize, PotentialGrid)>,
}

/// Divisors behind one row of the report.
struct Targets {
    p: Divisor,
    h: Divisor,
    f: Option<(Divisor, Vec<usize>)>,
}

fn targets(fam: &MarkedFamily, j: usize, n: usize, n0: Option<usize>) -> Result<Targets> {
    let (p, h) = per_c_both(fam, j, n)?;
    let f = match n0 {
        Some(n0) if n > n0 => {
            let mut out = Divisor::empty((fam.degree() as f64).powi(n as i32), true);
            let mut active = Vec::new();
            for k in 0..fam.critical.len() {
                let dv = if k == j { h.clone() } else { per_c_star(fam, k, n)? };
                if !dv.identically_zero {
                    active.push(k);
                }
                out.merge(dv);
            }
            Some((out, active))
        }
        _ => None,
    };
    Ok(Targets { p, h, f })
}

/// Error grids `e_n` for `Per_c`, `Per*_c` (marked point `j`) and `Per*_f`
/// over `n_list`, with their masked L1 and exterior sup norms.
///
/// * `Per_c`: `e_n = (Σ log|λ − r| + log|lead P_n| − log‖c̃_j‖)/(dⁿ + 1) − G(c̃_j)`.
/// * `Per*_c`: the same with `H_n`; the `log‖c̃_j‖` terms of the Möbius
///   product cancel for `n > 1`.
/// * `Per*_f`: `e_n = (Σ log|λ − r| + Σ_j log|lead H_n^{(j)}|)/dⁿ − Σ_j G(c̃_j)`
///   over the marked points whose divisor is not identically zero; this is
///   `L(f_λ)` minus its pluriharmonic part and minus the constant activities.
///
/// `Per*_f` rows are omitted for `n ≤ N₀` or when the family is not fully
/// marked.
pub fn convergence_report(
    fam: &MarkedFamily,
    j: usize,
    n_list: &[usize],
    spec: GridSpec,
    annulus: Annulus,
    ev: &dyn GridEvaluator,
) -> Result<ConvergenceRun> {
    spec.require(16)?;
    let mut ns: Vec<usize> = n_list.to_vec();
    ns.sort_unstable();
    ns.dedup();
    let activities: Vec<PotentialGrid> =
        (0..fam.critical.len()).map(|k| activity_grid(fam, k, spec, ev)).collect::<Result<_>>()?;
    let harmonic = ev.eval(spec.len(), &|k| harmonic_part(fam, spec.at(k)))?;
    let mut bif_values = harmonic.clone();
    for g in &activities {
        for (b, v) in bif_values.iter_mut().zip(&g.values) {
            *b += v;
        }
    }
    let bifurcation = plain(spec, GridKind::Bifurcation, bif_values);
    let cnorm_log = ev.eval(spec.len(), &|k| Ok(pair_norm(&fam.critical_at(j, spec.at(k))?).ln()))?;
    let n0 = if fam.fully_marked() { Some(n_zero(fam, fam.region.center())?) } else { None };
    let floor = spec.diagonal();

    let mut rows = Vec::new();
    let mut errors = Vec::new();
    for &n in &ns {
        let t = targets(fam, j, n, n0)?;
        let one = if n == 1 { 1.0 } else { 0.0 };
        let mut jobs: Vec<(Sequence, &Divisor, Vec<f64>)> = Vec::new();
        if !t.p.identically_zero {
            let reference: Vec<f64> = (0..spec.len()).map(|k| activities[j].values[k] + cnorm_log[k] / t.p.normalization).collect();
            jobs.push((Sequence::PerC, &t.p, reference));
            let reference: Vec<f64> =
                (0..spec.len()).map(|k| activities[j].values[k] + one * cnorm_log[k] / t.h.normalization).collect();
            jobs.push((Sequence::PerCStar, &t.h, reference));
        }
        if let Some((f, active)) = &t.f {
            if !f.identically_zero {
                let reference: Vec<f64> = (0..spec.len())
                    .map(|k| {
                        active
                            .iter()
                            .map(|&a| {
                                let c = fam.critical_at(a, spec.at(k)).map(|c| pair_norm(&c).ln()).unwrap_or(0.0);
                                activities[a].values[k] + one * c / f.normalization
                            })
                            .sum()
                    })
                    .collect();
                jobs.push((Sequence::PerFStar, f, reference));
            }
        }
        for (seq, div, reference) in jobs {
            let roots = divisor_roots(div);
            let norm = div.normalization;
            let lead = div.lead_log;
            let values = ev.eval(spec.len(), &|k| {
                let (s, _) = log_sum(spec.at(k), &roots, floor);
                Ok((s + lead) / norm - reference[k])
            })?;
            let clipped = clip_mask(spec, &roots, floor);
            let grid = PotentialGrid { spec, kind: GridKind::Difference, values, clipped };
            rows.push(row_of(seq, n, div, &grid, annulus));
            errors.push((seq, n, grid));
        }
    }
    rows.sort_by(|a, b| a.sequence.cmp(&b.sequence).then(a.n.cmp(&b.n)));
    Ok(ConvergenceRun { report: ConvergenceReport { rows }, activities, bifurcation, errors })
}

fn row_of(sequence: Sequence, n: usize, div: &Divisor, grid: &PotentialGrid, annulus: Annulus) -> ConvergenceRow {
    let mut l1 = 0.0;
    let mut count = 0usize;
    let mut sup = 0.0f64;
    let mut ext = 0usize;
    for k in 0..grid.values.len() {
        if grid.clipped[k] {
            continue;
        }
        let e = grid.values[k].abs();
        l1 += e;
        count += 1;
        if annulus.contains(grid.spec.at(k)) {
            sup = sup.max(e);
            ext += 1;
        }
    }
    ConvergenceRow {
        sequence,
        n,
        l1: if count > 0 { l1 / count as f64 } else { 0.0 },
        sup_exterior: sup,
        exterior_cells: ext,
        root_count: div.total(),
        normalization: div.normalization,
        clipped: grid.clipped_count(),
    }
}
