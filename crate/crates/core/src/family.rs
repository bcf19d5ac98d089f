//! Holomorphic one-parameter families given by a homogeneous lift with
//! `λ`-polynomial coefficients and marked critical lifts.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use num_traits::Zero;

use crate::geometry::{pair_norm, ProjectivePoint};
use crate::lambda_poly::LambdaPolynomial;
use crate::{Error, Result, C64};

/// Closed rectangle `[re_min, re_max] × [im_min, im_max]` of the `λ`-plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Region {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Region {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Result<Self> {
        if !(re_min < re_max && im_min < im_max) || ![re_min, re_max, im_min, im_max].iter().all(|x| x.is_finite()) {
            return Err(Error::Precondition("region must be a finite nondegenerate rectangle".to_string()));
        }
        Ok(Self { re_min, re_max, im_min, im_max })
    }

    pub fn contains(&self, l: C64) -> bool {
        (self.re_min..=self.re_max).contains(&l.re) && (self.im_min..=self.im_max).contains(&l.im)
    }

    pub fn center(&self) -> C64 {
        C64::new(0.5 * (self.re_min + self.re_max), 0.5 * (self.im_min + self.im_max))
    }

    pub fn width(&self) -> f64 {
        self.re_max - self.re_min
    }

    pub fn height(&self) -> f64 {
        self.im_max - self.im_min
    }
}

/// A homogeneous polynomial in `(Z, W)` stored by the coefficients of
/// `Z^{m−k} W^k`, `k = 0..=m`.
#[derive(Clone, Debug, PartialEq)]
pub struct BinaryForm(pub Vec<LambdaPolynomial>);

impl BinaryForm {
    pub fn degree(&self) -> usize {
        self.0.len() - 1
    }

    pub fn mul(&self, o: &Self) -> Self {
        let mut out = vec![LambdaPolynomial::zero(); self.0.len() + o.0.len() - 1];
        for (i, u) in self.0.iter().enumerate() {
            for (j, v) in o.0.iter().enumerate() {
                out[i + j] = out[i + j].add(&u.mul(v));
            }
        }
        Self(out)
    }

    pub fn sub(&self, o: &Self) -> Self {
        Self(self.0.iter().zip(&o.0).map(|(a, b)| a.sub(b)).collect())
    }

    /// `∂/∂Z`.
    pub fn d_z(&self) -> Self {
        let m = self.degree() as i64;
        Self(self.0[..self.0.len() - 1].iter().enumerate().map(|(k, a)| a.scale_int(m - k as i64)).collect())
    }

    /// `∂/∂W`.
    pub fn d_w(&self) -> Self {
        Self(self.0.iter().enumerate().skip(1).map(|(k, a)| a.scale_int(k as i64)).collect())
    }
}

/// The lift `f̃ = (A, B)` of degree `d`.
#[derive(Clone, Debug, PartialEq)]
pub struct HomogeneousLift {
    pub degree: usize,
    pub a: Vec<LambdaPolynomial>,
    pub b: Vec<LambdaPolynomial>,
}

impl HomogeneousLift {
    pub fn new(degree: usize, a: Vec<LambdaPolynomial>, b: Vec<LambdaPolynomial>) -> Result<Self> {
        if degree < 2 || a.len() != degree + 1 || b.len() != degree + 1 {
            return Err(Error::Precondition("a lift of degree d needs d > 1 and d + 1 coefficients per component".to_string()));
        }
        Ok(Self { degree, a, b })
    }

    pub fn is_exact(&self) -> bool {
        self.a.iter().chain(&self.b).all(LambdaPolynomial::is_exact)
    }

    /// `det Df̃` as a binary form of degree `2d − 2`.
    pub fn jacobian_form(&self) -> BinaryForm {
        let a = BinaryForm(self.a.clone());
        let b = BinaryForm(self.b.clone());
        a.d_z().mul(&b.d_w()).sub(&a.d_w().mul(&b.d_z()))
    }

    /// Numeric snapshot at `λ`.
    pub fn at(&self, lambda: C64) -> LiftAt {
        let split = |v: &[LambdaPolynomial]| -> (Vec<C64>, Vec<C64>) { v.iter().map(|p| p.eval_with_derivative(lambda)).unzip() };
        let (a, da) = split(&self.a);
        let (b, db) = split(&self.b);
        LiftAt { d: self.degree, a, b, da, db }
    }
}

/// A marked critical point `c̃_j(λ) = (z(λ), w(λ))`.
#[derive(Clone, Debug, PartialEq)]
pub struct CriticalLift {
    pub z: LambdaPolynomial,
    pub w: LambdaPolynomial,
}

impl CriticalLift {
    pub fn new(z: LambdaPolynomial, w: LambdaPolynomial) -> Self {
        Self { z, w }
    }

    pub fn eval(&self, lambda: C64) -> [C64; 2] {
        [self.z.eval(lambda), self.w.eval(lambda)]
    }

    /// Value and `λ`-derivative.
    pub fn eval_with_derivative(&self, lambda: C64) -> ([C64; 2], [C64; 2]) {
        let (z, dz) = self.z.eval_with_derivative(lambda);
        let (w, dw) = self.w.eval_with_derivative(lambda);
        ([z, w], [dz, dw])
    }

    pub fn is_exact(&self) -> bool {
        self.z.is_exact() && self.w.is_exact()
    }

    /// `p ∧ c̃` as a linear form in `p = (Z, W)`.
    fn wedge_form(&self) -> BinaryForm {
        BinaryForm(vec![self.w.clone(), self.z.neg()])
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MarkedFamily {
    pub name: String,
    pub lift: HomogeneousLift,
    pub critical: Vec<CriticalLift>,
    pub region: Region,
    normalized: bool,
}

impl MarkedFamily {
    pub fn new(name: impl Into<String>, lift: HomogeneousLift, critical: Vec<CriticalLift>, region: Region) -> Self {
        Self { name: name.into(), lift, critical, region, normalized: false }
    }

    pub fn degree(&self) -> usize {
        self.lift.degree
    }

    /// All `2d − 2` critical points carry a marking.
    pub fn fully_marked(&self) -> bool {
        self.critical.len() == 2 * self.degree() - 2
    }

    /// Fully marked and the Jacobian identity holds with these lifts.
    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn require_normalized(&self) -> Result<()> {
        if self.fully_marked() && self.normalized {
            Ok(())
        } else {
            Err(Error::NotFullyMarked)
        }
    }

    pub fn at(&self, lambda: C64) -> LiftAt {
        self.lift.at(lambda)
    }

    pub fn critical_lift(&self, j: usize) -> Result<&CriticalLift> {
        self.critical.get(j).ok_or(Error::CriticalIndex { index: j, count: self.critical.len() })
    }

    pub fn critical_at(&self, j: usize, lambda: C64) -> Result<[C64; 2]> {
        let c = self.critical_lift(j)?.eval(lambda);
        if c[0].is_zero() && c[1].is_zero() {
            return Err(Error::DegenerateLift);
        }
        Ok(c)
    }

    pub fn critical_point(&self, j: usize, lambda: C64) -> Result<ProjectivePoint> {
        ProjectivePoint::from_pair(self.critical_at(j, lambda)?)
    }
}

/// A degree-`d` homogeneous self-map of `ℂ²` with its Jacobian matrix.
pub trait HomogeneousMap {
    fn degree(&self) -> usize;
    fn apply(&self, p: [C64; 2]) -> [C64; 2];
    /// Rows are the gradients of the two components.
    fn jacobian(&self, p: [C64; 2]) -> [[C64; 2]; 2];

    fn det_jacobian(&self, p: [C64; 2]) -> C64 {
        let j = self.jacobian(p);
        j[0][0] * j[1][1] - j[0][1] * j[1][0]
    }
}

/// `f̃_λ` at a fixed parameter, with the coefficient derivatives in `λ`.
#[derive(Clone, Debug)]
pub struct LiftAt {
    pub d: usize,
    pub a: Vec<C64>,
    pub b: Vec<C64>,
    pub da: Vec<C64>,
    pub db: Vec<C64>,
}

fn powers(x: C64, d: usize) -> Vec<C64> {
    let mut v = Vec::with_capacity(d + 1);
    let mut acc = C64::new(1.0, 0.0);
    for _ in 0..=d {
        v.push(acc);
        acc *= x;
    }
    v
}

fn form_eval(c: &[C64], zp: &[C64], wp: &[C64]) -> C64 {
    let d = c.len() - 1;
    c.iter().enumerate().map(|(k, a)| a * zp[d - k] * wp[k]).sum()
}

impl LiftAt {
    /// `∂_λ f̃_λ(p)`.
    pub fn apply_dlambda(&self, p: [C64; 2]) -> [C64; 2] {
        let zp = powers(p[0], self.d);
        let wp = powers(p[1], self.d);
        [form_eval(&self.da, &zp, &wp), form_eval(&self.db, &zp, &wp)]
    }

    /// `f̃(p)`, `Df̃(p)` and `∂_λ f̃(p)` in one pass.
    pub fn apply_all(&self, p: [C64; 2]) -> ([C64; 2], [[C64; 2]; 2], [C64; 2]) {
        let d = self.d;
        let zp = powers(p[0], d);
        let wp = powers(p[1], d);
        let mut v = [C64::zero(); 2];
        let mut j = [[C64::zero(); 2]; 2];
        for (row, c) in [&self.a, &self.b].into_iter().enumerate() {
            for (k, a) in c.iter().enumerate() {
                v[row] += a * zp[d - k] * wp[k];
                if k < d {
                    j[row][0] += a * (d - k) as f64 * zp[d - k - 1] * wp[k];
                }
                if k > 0 {
                    j[row][1] += a * k as f64 * zp[d - k] * wp[k - 1];
                }
            }
        }
        (v, j, [form_eval(&self.da, &zp, &wp), form_eval(&self.db, &zp, &wp)])
    }

    /// Sylvester resultant of the two forms, normalized so that
    /// `Res(Z^d, W^d) = 1`.
    pub fn resultant(&self) -> C64 {
        let d = self.d;
        let n = 2 * d;
        let mut m = vec![vec![C64::zero(); n]; n];
        for i in 0..d {
            for k in 0..=d {
                m[i][i + k] = self.a[k];
                m[d + i][i + k] = self.b[k];
            }
        }
        determinant(m)
    }
}

impl HomogeneousMap for LiftAt {
    fn degree(&self) -> usize {
        self.d
    }

    fn apply(&self, p: [C64; 2]) -> [C64; 2] {
        let zp = powers(p[0], self.d);
        let wp = powers(p[1], self.d);
        [form_eval(&self.a, &zp, &wp), form_eval(&self.b, &zp, &wp)]
    }

    fn jacobian(&self, p: [C64; 2]) -> [[C64; 2]; 2] {
        self.apply_all(p).1
    }
}

/// Determinant by Gaussian elimination with partial pivoting.
pub fn determinant(mut m: Vec<Vec<C64>>) -> C64 {
    let n = m.len();
    let mut det = C64::new(1.0, 0.0);
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[i][col].norm().total_cmp(&m[j][col].norm())).unwrap();
        if m[piv][col].is_zero() {
            return C64::zero();
        }
        if piv != col {
            m.swap(piv, col);
            det = -det;
        }
        det *= m[col][col];
        for r in col + 1..n {
            let f = m[r][col] / m[col][col];
            if f.is_zero() {
                continue;
            }
            for c in col..n {
                let t = m[col][c];
                m[r][c] -= f * t;
            }
        }
    }
    det
}

/// `f̃_λ(p)`.
pub fn evaluate_lift(fam: &MarkedFamily, lambda: C64, p: [C64; 2]) -> [C64; 2] {
    fam.at(lambda).apply(p)
}

/// Homogeneous resultant of the lift at `λ`.
///
/// Fails when it vanishes to working precision, i.e. when `f̃_λ` has a
/// nonzero common root and the map drops degree.
pub fn resultant(fam: &MarkedFamily, lambda: C64) -> Result<C64> {
    let at = fam.at(lambda);
    let r = at.resultant();
    let scale = at.a.iter().map(|c| c.norm()).fold(0.0, f64::max) * at.b.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if r.norm() <= 1e-14 * libm::pow(scale, fam.degree() as f64) || !r.is_finite() {
        return Err(Error::DegenerateParameter(lambda));
    }
    Ok(r)
}

fn poly_close(a: &LambdaPolynomial, b: &LambdaPolynomial, rel: f64) -> bool {
    if let (Some(x), Some(y)) = (a.exact(), b.exact()) {
        return x == y;
    }
    let n = a.coeffs().len().max(b.coeffs().len());
    let scale = a.coeffs().iter().chain(b.coeffs()).map(|c| c.norm()).fold(0.0, f64::max);
    (0..n).all(|k| {
        let x = a.coeffs().get(k).copied().unwrap_or_default();
        let y = b.coeffs().get(k).copied().unwrap_or_default();
        (x - y).norm() <= rel * scale
    })
}

/// Largest coefficient mismatch between `det Df̃` and `Π_j (p ∧ c̃_j)`,
/// relative to the largest coefficient of `det Df̃`.
pub fn jacobian_mismatch(fam: &MarkedFamily) -> f64 {
    let det = fam.lift.jacobian_form();
    let prod = wedge_product(fam);
    let scale = det.0.iter().flat_map(|p| p.coeffs()).map(|c| c.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut worst = 0.0f64;
    for (x, y) in det.0.iter().zip(&prod.0) {
        let diff = x.sub(y);
        for c in diff.coeffs() {
            worst = worst.max(c.norm() / scale);
        }
    }
    worst
}

fn wedge_product(fam: &MarkedFamily) -> BinaryForm {
    let mut prod = BinaryForm(vec![LambdaPolynomial::from_ints(&[1])]);
    for c in &fam.critical {
        prod = prod.mul(&c.wedge_form());
    }
    prod
}

/// Rescale `c̃_1` so that `det Df̃_λ(p) = Π_j (p ∧ c̃_j(λ))` holds
/// coefficientwise.
///
/// The ratio of the two forms must be a polynomial in `λ`; anything else
/// means the marked points are not the critical points of the lift.
pub fn jacobian_normalize(fam: &MarkedFamily) -> Result<MarkedFamily> {
    if !fam.fully_marked() {
        return Err(Error::NotFullyMarked);
    }
    for (j, c) in fam.critical.iter().enumerate() {
        if c.z.is_zero() && c.w.is_zero() {
            return Err(Error::IncorrectMarking(alloc::format!("critical lift {j} is identically zero")));
        }
    }
    let det = fam.lift.jacobian_form();
    let prod = wedge_product(fam);
    let Some(k) = prod.0.iter().position(|p| !p.is_zero()) else {
        return Err(Error::IncorrectMarking("product of wedges vanishes".to_string()));
    };
    let ratio = det.0[k]
        .div_exact(&prod.0[k])
        .map_err(|_| Error::IncorrectMarking("Jacobian is not a polynomial multiple of the wedge product".to_string()))?;
    if ratio.is_zero() {
        return Err(Error::IncorrectMarking("the lift has identically vanishing Jacobian".to_string()));
    }
    for (x, y) in det.0.iter().zip(&prod.0) {
        if !poly_close(x, &y.mul(&ratio), 1e-10) {
            return Err(Error::IncorrectMarking("zero sets of the Jacobian and of the marked points differ".to_string()));
        }
    }
    let mut out = fam.clone();
    let one = LambdaPolynomial::from_ints(&[1]);
    if !poly_close(&ratio, &one, 1e-14) {
        let c = &mut out.critical[0];
        c.z = c.z.mul(&ratio);
        c.w = c.w.mul(&ratio);
    }
    out.normalized = true;
    Ok(out)
}

/// `z ↦ z^d + λ`, lifted to `(Z^d + λW^d, W^d)`.
///
/// The critical points `0` and `∞` are each marked `d − 1` times. The
/// Jacobian scalar `d²` is split as `d` on the first lift over `0` and `d`
/// on the first lift over `∞`; for `d = 2` this gives `(0, 2)` and `(−2, 0)`.
pub fn builtin_unicritical(d: usize) -> Result<MarkedFamily> {
    if d < 2 {
        return Err(Error::Precondition("degree must exceed 1".to_string()));
    }
    let mut a = vec![LambdaPolynomial::zero(); d + 1];
    let mut b = vec![LambdaPolynomial::zero(); d + 1];
    a[0] = LambdaPolynomial::from_ints(&[1]);
    a[d] = LambdaPolynomial::from_ints(&[0, 1]);
    b[d] = LambdaPolynomial::from_ints(&[1]);
    let lift = HomogeneousLift::new(d, a, b)?;
    let di = d as i64;
    let mut critical = Vec::with_capacity(2 * d - 2);
    for k in 0..d - 1 {
        let s = if k == 0 { di } else { 1 };
        critical.push(CriticalLift::new(LambdaPolynomial::from_ints(&[0]), LambdaPolynomial::from_ints(&[s])));
    }
    for k in 0..d - 1 {
        let s = if k == 0 { di } else { 1 };
        critical.push(CriticalLift::new(LambdaPolynomial::from_ints(&[-s]), LambdaPolynomial::from_ints(&[0])));
    }
    let region = Region::new(-2.5, 1.5, -1.5, 1.5)?;
    let fam = MarkedFamily::new(alloc::format!("unicritical-{d}"), lift, critical, region);
    jacobian_normalize(&fam)
}

/// `z ↦ (z² + λ)/(1 + λz²)`, lifted to `(Z² + λW², λZ² + W²)`, with
/// critical points `0` and `∞`. The Jacobian is `4(1 − λ²)ZW`, so the
/// normalized lift over `0` is `(0, 4 − 4λ²)`.
pub fn builtin_rational() -> Result<MarkedFamily> {
    let one = LambdaPolynomial::from_ints(&[1]);
    let zero = LambdaPolynomial::zero();
    let lam = LambdaPolynomial::from_ints(&[0, 1]);
    let lift = HomogeneousLift::new(2, vec![one.clone(), zero.clone(), lam.clone()], vec![lam, zero.clone(), one.clone()])?;
    let critical = vec![
        CriticalLift::new(zero.clone(), one.clone()),
        CriticalLift::new(LambdaPolynomial::from_ints(&[-1]), zero),
    ];
    let region = Region::new(-0.9, 0.9, -0.9, 0.9)?;
    jacobian_normalize(&MarkedFamily::new("rational", lift, critical, region))
}

/// Built-in family by name: `unicritical-<d>` (also `unicritical<d>`,
/// `unicritical` for `d = 2`) or `rational`.
pub fn builtin(name: &str) -> Result<MarkedFamily> {
    if name == "rational" {
        return builtin_rational();
    }
    if let Some(rest) = name.strip_prefix("unicritical") {
        if let Ok(d) = rest.strip_prefix('-').unwrap_or(rest).parse::<usize>() {
            return builtin_unicritical(d);
        }
    }
    if name == "unicritical" {
        return builtin_unicritical(2);
    }
    Err(Error::Precondition(alloc::format!("unknown built-in family `{name}`")))
}

/// Chordal norm helper: `‖f̃(p)‖` for a unit `p`.
pub fn lift_norm(f: &impl HomogeneousMap, p: [C64; 2]) -> f64 {
    pair_norm(&f.apply(p))
}
