//! Exact polynomials in `λ` over the Gaussian integers, and an
//! extended-exponent complex type used to evaluate them in floating point
//! when their coefficients exceed the `f64` range.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::geometry::LogComplex;
use crate::{Error, Result, C64};

/// A Gaussian integer `re + i·im`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GaussInt {
    pub re: BigInt,
    pub im: BigInt,
}

impl GaussInt {
    pub fn new(re: impl Into<BigInt>, im: impl Into<BigInt>) -> Self {
        Self { re: re.into(), im: im.into() }
    }

    pub fn from_int(re: i64) -> Self {
        Self { re: BigInt::from(re), im: BigInt::zero() }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::from_int(1)
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    pub fn norm_sqr(&self) -> BigInt {
        &self.re * &self.re + &self.im * &self.im
    }

    pub fn conj(&self) -> Self {
        Self { re: self.re.clone(), im: -&self.im }
    }

    /// `self / other` when the quotient is again a Gaussian integer.
    pub fn div_exact(&self, other: &GaussInt) -> Option<GaussInt> {
        if other.is_zero() {
            return None;
        }
        if other.is_real() {
            let (qr, rr) = self.re.div_rem(&other.re);
            let (qi, ri) = self.im.div_rem(&other.re);
            return (rr.is_zero() && ri.is_zero()).then_some(GaussInt { re: qr, im: qi });
        }
        let num = self * &other.conj();
        let den = other.norm_sqr();
        let (qr, rr) = num.re.div_rem(&den);
        let (qi, ri) = num.im.div_rem(&den);
        (rr.is_zero() && ri.is_zero()).then_some(GaussInt { re: qr, im: qi })
    }

    /// Value as an extended-range complex number.
    pub fn to_ext(&self) -> ExtComplex {
        let (mr, er) = big_to_scaled(&self.re);
        let (mi, ei) = big_to_scaled(&self.im);
        let e = er.max(ei);
        ExtComplex::new(C64::new(libm::ldexp(mr, (er - e) as i32), libm::ldexp(mi, (ei - e) as i32)), e)
    }

    pub fn to_c64(&self) -> C64 {
        self.to_ext().to_c64()
    }
}

impl<'a> Add for &'a GaussInt {
    type Output = GaussInt;
    fn add(self, o: &'a GaussInt) -> GaussInt {
        GaussInt { re: &self.re + &o.re, im: &self.im + &o.im }
    }
}

impl<'a> Sub for &'a GaussInt {
    type Output = GaussInt;
    fn sub(self, o: &'a GaussInt) -> GaussInt {
        GaussInt { re: &self.re - &o.re, im: &self.im - &o.im }
    }
}

impl<'a> Mul for &'a GaussInt {
    type Output = GaussInt;
    fn mul(self, o: &'a GaussInt) -> GaussInt {
        match (self.is_real(), o.is_real()) {
            (true, true) => GaussInt { re: &self.re * &o.re, im: BigInt::zero() },
            (true, false) => GaussInt { re: &self.re * &o.re, im: &self.re * &o.im },
            (false, true) => GaussInt { re: &self.re * &o.re, im: &self.im * &o.re },
            (false, false) => {
                let ac = &self.re * &o.re;
                let bd = &self.im * &o.im;
                let cross = (&self.re + &self.im) * (&o.re + &o.im);
                GaussInt { im: cross - &ac - &bd, re: ac - bd }
            }
        }
    }
}

impl Neg for GaussInt {
    type Output = GaussInt;
    fn neg(self) -> GaussInt {
        GaussInt { re: -self.re, im: -self.im }
    }
}

/// Mantissa and binary exponent with `b ≈ m · 2^e` and `|m| < 2^61`.
fn big_to_scaled(b: &BigInt) -> (f64, i64) {
    let bits = b.bits();
    if bits <= 60 {
        return (b.to_f64().unwrap_or(0.0), 0);
    }
    let shift = bits - 60;
    let top: BigInt = b.abs() >> shift;
    let m = top.to_f64().unwrap_or(0.0);
    (if b.is_negative() { -m } else { m }, shift as i64)
}

/// Complex number `m · 2^e` with an `i64` exponent.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExtComplex {
    m: C64,
    e: i64,
}

impl ExtComplex {
    pub const ZERO: Self = Self { m: C64 { re: 0.0, im: 0.0 }, e: 0 };

    pub fn new(m: C64, e: i64) -> Self {
        Self { m, e }.renormalized()
    }

    pub fn from_c64(z: C64) -> Self {
        Self::new(z, 0)
    }

    /// `m` with `max(|re m|, |im m|)` in `[½, 1)`, or zero.
    pub fn mantissa(&self) -> C64 {
        self.m
    }

    pub fn exponent(&self) -> i64 {
        self.e
    }

    fn renormalized(self) -> Self {
        let a = self.m.re.abs().max(self.m.im.abs());
        if a == 0.0 || !a.is_finite() {
            return Self { m: self.m, e: if a == 0.0 { 0 } else { self.e } };
        }
        let (_, k) = libm::frexp(a);
        Self {
            m: C64::new(libm::ldexp(self.m.re, -k), libm::ldexp(self.m.im, -k)),
            e: self.e + k as i64,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.m.re == 0.0 && self.m.im == 0.0
    }

    pub fn mul_c64(self, z: C64) -> Self {
        Self::new(self.m * z, self.e)
    }

    pub fn mul(self, o: Self) -> Self {
        Self::new(self.m * o.m, self.e + o.e)
    }

    pub fn add(self, o: Self) -> Self {
        if self.is_zero() {
            return o;
        }
        if o.is_zero() {
            return self;
        }
        let (big, small) = if self.e >= o.e { (self, o) } else { (o, self) };
        let shift = big.e - small.e;
        if shift > 1100 {
            return big;
        }
        let s = shift as i32;
        let sm = C64::new(libm::ldexp(small.m.re, -s), libm::ldexp(small.m.im, -s));
        Self::new(big.m + sm, big.e)
    }

    pub fn neg(self) -> Self {
        Self { m: -self.m, e: self.e }
    }

    pub fn sub(self, o: Self) -> Self {
        self.add(o.neg())
    }

    /// `1/z`; infinite mantissa for zero.
    pub fn recip(self) -> Self {
        Self::new(C64::new(1.0, 0.0) / self.m, -self.e)
    }

    pub fn div(self, o: Self) -> Self {
        self.mul(o.recip())
    }

    /// `|z|` as a real `ExtComplex`.
    pub fn abs(self) -> Self {
        Self { m: C64::new(self.m.norm(), 0.0), e: self.e }
    }

    pub fn ln_abs(&self) -> f64 {
        if self.is_zero() {
            return f64::NEG_INFINITY;
        }
        libm::log(self.m.norm()) + self.e as f64 * core::f64::consts::LN_2
    }

    pub fn to_log(&self) -> LogComplex {
        if self.is_zero() {
            return LogComplex::ZERO;
        }
        LogComplex { log_abs: self.ln_abs(), phase: self.m / self.m.norm() }
    }

    /// Plain `f64` value; saturates to infinity or zero outside the range.
    pub fn to_c64(&self) -> C64 {
        let e = self.e.clamp(-2200, 2200) as i32;
        C64::new(libm::ldexp(self.m.re, e), libm::ldexp(self.m.im, e))
    }
}

/// Polynomial in `λ` with Gaussian-integer coefficients, ascending degree,
/// no trailing zeros.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ExactPoly {
    coeffs: Vec<GaussInt>,
}

impl ExactPoly {
    pub fn new(mut coeffs: Vec<GaussInt>) -> Self {
        while coeffs.last().is_some_and(GaussInt::is_zero) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: GaussInt) -> Self {
        Self::new(vec![c])
    }

    /// The polynomial `λ`.
    pub fn lambda() -> Self {
        Self::new(vec![GaussInt::zero(), GaussInt::one()])
    }

    pub fn from_ints(c: &[i64]) -> Self {
        Self::new(c.iter().map(|&v| GaussInt::from_int(v)).collect())
    }

    pub fn coeffs(&self) -> &[GaussInt] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> Option<&GaussInt> {
        self.coeffs.last()
    }

    fn is_real(&self) -> bool {
        self.coeffs.iter().all(GaussInt::is_real)
    }

    pub fn add(&self, o: &Self) -> Self {
        let n = self.coeffs.len().max(o.coeffs.len());
        let z = GaussInt::zero();
        Self::new(
            (0..n)
                .map(|k| self.coeffs.get(k).unwrap_or(&z) + o.coeffs.get(k).unwrap_or(&z))
                .collect(),
        )
    }

    pub fn sub(&self, o: &Self) -> Self {
        let n = self.coeffs.len().max(o.coeffs.len());
        let z = GaussInt::zero();
        Self::new(
            (0..n)
                .map(|k| self.coeffs.get(k).unwrap_or(&z) - o.coeffs.get(k).unwrap_or(&z))
                .collect(),
        )
    }

    pub fn scale(&self, c: &GaussInt) -> Self {
        Self::new(self.coeffs.iter().map(|a| a * c).collect())
    }

    pub fn mul(&self, o: &Self) -> Self {
        if self.is_zero() || o.is_zero() {
            return Self::zero();
        }
        let n = self.coeffs.len() + o.coeffs.len() - 1;
        if self.is_real() && o.is_real() {
            let mut out = vec![BigInt::zero(); n];
            for (i, a) in self.coeffs.iter().enumerate() {
                if a.re.is_zero() {
                    continue;
                }
                for (j, b) in o.coeffs.iter().enumerate() {
                    if !b.re.is_zero() {
                        out[i + j] += &a.re * &b.re;
                    }
                }
            }
            return Self::new(out.into_iter().map(|re| GaussInt { re, im: BigInt::zero() }).collect());
        }
        let mut out = vec![GaussInt::zero(); n];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in o.coeffs.iter().enumerate() {
                if !b.is_zero() {
                    let p = a * b;
                    out[i + j].re += p.re;
                    out[i + j].im += p.im;
                }
            }
        }
        Self::new(out)
    }

    pub fn pow(&self, k: usize) -> Self {
        let mut acc = Self::constant(GaussInt::one());
        for _ in 0..k {
            acc = acc.mul(self);
        }
        acc
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c * &GaussInt::from_int(k as i64))
                .collect(),
        )
    }

    /// Quotient of an exact division; any nonzero remainder, or a step whose
    /// leading quotient is not a Gaussian integer, is an error.
    pub fn div_exact(&self, divisor: &Self) -> Result<Self> {
        let dd = divisor.degree().ok_or(Error::InexactDivision)?;
        if self.is_zero() {
            return Ok(Self::zero());
        }
        let nd = self.degree().unwrap_or(0);
        if nd < dd {
            return Err(Error::InexactDivision);
        }
        let lead = divisor.leading().unwrap();
        let mut rem = self.coeffs.clone();
        let mut quot = vec![GaussInt::zero(); nd - dd + 1];
        for k in (0..=nd - dd).rev() {
            let top = &rem[k + dd];
            if top.is_zero() {
                continue;
            }
            let q = top.div_exact(lead).ok_or(Error::InexactDivision)?;
            for (i, c) in divisor.coeffs.iter().enumerate() {
                if !c.is_zero() {
                    let p = &q * c;
                    rem[k + i].re -= p.re;
                    rem[k + i].im -= p.im;
                }
            }
            quot[k] = q;
        }
        if rem.iter().any(|c| !c.is_zero()) {
            return Err(Error::InexactDivision);
        }
        Ok(Self::new(quot))
    }

    /// Horner evaluation in extended range.
    pub fn eval_ext(&self, lambda: C64) -> ExtComplex {
        let mut acc = ExtComplex::ZERO;
        for c in self.coeffs.iter().rev() {
            acc = acc.mul_c64(lambda).add(c.to_ext());
        }
        acc
    }

    /// Coefficients as `f64` complex numbers, `None` if any overflows.
    pub fn to_c64(&self) -> Option<Vec<C64>> {
        let v: Vec<C64> = self.coeffs.iter().map(GaussInt::to_c64).collect();
        v.iter().all(|z| z.re.is_finite() && z.im.is_finite()).then_some(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(c: &[i64]) -> ExactPoly {
        ExactPoly::from_ints(c)
    }

    #[test]
    fn gauss_division() {
        let a = GaussInt::new(5, 5);
        let b = GaussInt::new(1, 2);
        // (5+5i)/(1+2i) = 3 - i
        assert_eq!(a.div_exact(&b), Some(GaussInt::new(3, -1)));
        assert_eq!(GaussInt::from_int(3).div_exact(&GaussInt::from_int(2)), None);
    }

    #[test]
    fn poly_arithmetic() {
        // (λ + 1)(λ - 1) = λ² - 1
        assert_eq!(p(&[1, 1]).mul(&p(&[-1, 1])), p(&[-1, 0, 1]));
        assert_eq!(p(&[-1, 0, 1]).div_exact(&p(&[1, 1])).unwrap(), p(&[-1, 1]));
        assert_eq!(p(&[1, 0, 1]).div_exact(&p(&[1, 1])), Err(Error::InexactDivision));
        assert_eq!(p(&[0, 1, 3]).derivative(), p(&[1, 6]));
        assert_eq!(p(&[1, 2]).sub(&p(&[1, 2])).degree(), None);
    }

    #[test]
    fn huge_coefficients_evaluate() {
        let q = p(&[2, 1]).pow(2000);
        let v = q.eval_ext(C64::new(1.0, 0.0));
        assert!(q.to_c64().is_none());
        assert!((v.ln_abs() - 2000.0 * 3f64.ln()).abs() < 1e-9, "{}", v.ln_abs());
        let w = q.eval_ext(C64::new(0.0, 0.0));
        assert!((w.ln_abs() - 2000.0 * core::f64::consts::LN_2).abs() < 1e-9);
    }

    #[test]
    fn ext_complex_round_trip() {
        let z = C64::new(-3.25e-200, 7.5e180);
        let e = ExtComplex::from_c64(z).mul(ExtComplex::from_c64(C64::new(1e150, 0.0)));
        assert!((e.ln_abs() - (7.5e180f64.ln() + 1e150f64.ln())).abs() < 1e-12);
        assert!((ExtComplex::from_c64(z).to_c64() - z).norm() <= 1e-15 * z.norm());
    }
}
