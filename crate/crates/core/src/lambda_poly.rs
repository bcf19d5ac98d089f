//! Polynomials in the parameter `λ` used as coefficients of homogeneous
//! lifts and critical lifts.
//!
//! Every polynomial carries a floating snapshot; exactly specified ones also
//! keep their Gaussian-integer coefficients so that symbolic iteration and
//! polynomial division can stay exact.

use alloc::vec;
use alloc::vec::Vec;

use num_traits::Zero;

use crate::exact::{ExactPoly, GaussInt};
use crate::{Error, Result, C64};

#[derive(Clone, Debug, PartialEq)]
pub struct LambdaPolynomial {
    coeffs: Vec<C64>,
    exact: Option<ExactPoly>,
}

impl LambdaPolynomial {
    pub fn from_exact(p: ExactPoly) -> Self {
        let coeffs = p.coeffs().iter().map(GaussInt::to_c64).collect();
        Self { coeffs, exact: Some(p) }
    }

    pub fn from_ints(c: &[i64]) -> Self {
        Self::from_exact(ExactPoly::from_ints(c))
    }

    /// Floating coefficients, ascending degree.
    pub fn from_complex(mut coeffs: Vec<C64>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Self { coeffs, exact: None }
    }

    pub fn constant(c: C64) -> Self {
        Self::from_complex(vec![c])
    }

    pub fn zero() -> Self {
        Self::from_exact(ExactPoly::zero())
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn exact(&self) -> Option<&ExactPoly> {
        self.exact.as_ref()
    }

    pub fn is_exact(&self) -> bool {
        self.exact.is_some()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn eval(&self, lambda: C64) -> C64 {
        self.coeffs.iter().rev().fold(C64::zero(), |acc, &c| acc * lambda + c)
    }

    /// Value and first derivative at `λ`.
    pub fn eval_with_derivative(&self, lambda: C64) -> (C64, C64) {
        let mut v = C64::zero();
        let mut dv = C64::zero();
        for &c in self.coeffs.iter().rev() {
            dv = dv * lambda + v;
            v = v * lambda + c;
        }
        (v, dv)
    }

    pub fn add(&self, o: &Self) -> Self {
        if let (Some(a), Some(b)) = (&self.exact, &o.exact) {
            return Self::from_exact(a.add(b));
        }
        let n = self.coeffs.len().max(o.coeffs.len());
        Self::from_complex(
            (0..n)
                .map(|k| {
                    self.coeffs.get(k).copied().unwrap_or_default()
                        + o.coeffs.get(k).copied().unwrap_or_default()
                })
                .collect(),
        )
    }

    pub fn neg(&self) -> Self {
        match &self.exact {
            Some(a) => Self::from_exact(ExactPoly::zero().sub(a)),
            None => Self::from_complex(self.coeffs.iter().map(|c| -c).collect()),
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &Self) -> Self {
        if let (Some(a), Some(b)) = (&self.exact, &o.exact) {
            return Self::from_exact(a.mul(b));
        }
        if self.is_zero() || o.is_zero() {
            return Self::from_complex(Vec::new());
        }
        let mut out = vec![C64::zero(); self.coeffs.len() + o.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in o.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::from_complex(out)
    }

    pub fn scale_int(&self, k: i64) -> Self {
        self.mul(&Self::from_ints(&[k]))
    }

    pub fn derivative(&self) -> Self {
        match &self.exact {
            Some(a) => Self::from_exact(a.derivative()),
            None => Self::from_complex(
                self.coeffs.iter().enumerate().skip(1).map(|(k, c)| c * k as f64).collect(),
            ),
        }
    }

    /// Exact quotient `self / divisor`.
    ///
    /// With exact coefficients any remainder is an error. In floating
    /// arithmetic the remainder must be below `1e-10` relative to the
    /// dividend's largest coefficient.
    pub fn div_exact(&self, divisor: &Self) -> Result<Self> {
        if let (Some(a), Some(b)) = (&self.exact, &divisor.exact) {
            return a.div_exact(b).map(Self::from_exact);
        }
        let dd = divisor.degree().ok_or(Error::InexactDivision)?;
        let Some(nd) = self.degree() else {
            return Ok(Self::from_complex(Vec::new()));
        };
        if nd < dd {
            return Err(Error::InexactDivision);
        }
        let scale = self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let lead = divisor.coeffs[dd];
        let mut rem = self.coeffs.clone();
        let mut quot = vec![C64::zero(); nd - dd + 1];
        for k in (0..=nd - dd).rev() {
            let q = rem[k + dd] / lead;
            for (i, c) in divisor.coeffs.iter().enumerate() {
                rem[k + i] -= q * c;
            }
            quot[k] = q;
        }
        if rem.iter().any(|c| c.norm() > 1e-10 * scale) {
            return Err(Error::InexactDivision);
        }
        Ok(Self::from_complex(quot))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_and_float_agree() {
        let a = LambdaPolynomial::from_ints(&[1, 2, 3]);
        let b = LambdaPolynomial::from_complex(vec![C64::new(1.0, 0.0), C64::new(2.0, 0.0), C64::new(3.0, 0.0)]);
        let l = C64::new(0.3, -0.7);
        assert!((a.eval(l) - b.eval(l)).norm() < 1e-15);
        let (v, dv) = a.eval_with_derivative(l);
        assert!((v - a.eval(l)).norm() < 1e-15);
        assert!((dv - a.derivative().eval(l)).norm() < 1e-15);
    }

    #[test]
    fn float_division_checks_remainder() {
        let x2m1 = LambdaPolynomial::from_complex(vec![C64::new(-1.0, 0.0), C64::zero(), C64::new(1.0, 0.0)]);
        let xp1 = LambdaPolynomial::from_complex(vec![C64::new(1.0, 0.0), C64::new(1.0, 0.0)]);
        let q = x2m1.div_exact(&xp1).unwrap();
        assert!((q.eval(C64::new(2.0, 0.0)) - C64::new(1.0, 0.0)).norm() < 1e-15);
        let x2p1 = LambdaPolynomial::from_complex(vec![C64::new(1.0, 0.0), C64::zero(), C64::new(1.0, 0.0)]);
        assert_eq!(x2p1.div_exact(&xp1), Err(Error::InexactDivision));
        assert!(x2m1.mul(&xp1).sub(&xp1.mul(&x2m1)).is_zero());
    }
}
