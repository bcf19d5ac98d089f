//! Projective-line geometry: points, the wedge pairing, the normalized
//! chordal metric and overflow-safe representatives.

use num_complex::ComplexFloat;
use num_traits::Zero;

use crate::{Error, Result, C64};

/// A point of the projective line, stored as a nonzero pair of coordinates.
///
/// `[z : 1]` is the affine point `z`, `[1 : 0]` is infinity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProjectivePoint {
    pub p0: C64,
    pub p1: C64,
}

impl ProjectivePoint {
    pub fn new(p0: C64, p1: C64) -> Result<Self> {
        if p0.is_zero() && p1.is_zero() {
            return Err(Error::DegenerateLift);
        }
        Ok(Self { p0, p1 })
    }

    pub fn from_pair(v: [C64; 2]) -> Result<Self> {
        Self::new(v[0], v[1])
    }

    pub fn affine(z: C64) -> Self {
        Self { p0: z, p1: C64::new(1.0, 0.0) }
    }

    pub fn infinity() -> Self {
        Self { p0: C64::new(1.0, 0.0), p1: C64::zero() }
    }

    #[inline]
    pub fn pair(&self) -> [C64; 2] {
        [self.p0, self.p1]
    }

    #[inline]
    pub fn norm(&self) -> f64 {
        pair_norm(&self.pair())
    }

    /// Norm-one representative of the same class.
    pub fn normalized(&self) -> Self {
        let n = self.norm();
        Self { p0: self.p0 / n, p1: self.p1 / n }
    }

    pub fn scaled(&self, k: C64) -> Self {
        Self { p0: self.p0 * k, p1: self.p1 * k }
    }

    /// Affine coordinate `p0 / p1`, `None` at infinity.
    pub fn to_affine(&self) -> Option<C64> {
        if self.p1.is_zero() {
            None
        } else {
            Some(self.p0 / self.p1)
        }
    }
}

/// Euclidean norm of a coordinate pair without intermediate overflow.
#[inline]
pub fn pair_norm(v: &[C64; 2]) -> f64 {
    libm::hypot(v[0].abs(), v[1].abs())
}

/// `p0·q1 − p1·q0`.
#[inline]
pub fn wedge(p: &ProjectivePoint, q: &ProjectivePoint) -> C64 {
    wedge_pair(&p.pair(), &q.pair())
}

#[inline]
pub fn wedge_pair(p: &[C64; 2], q: &[C64; 2]) -> C64 {
    p[0] * q[1] - p[1] * q[0]
}

/// Normalized chordal distance `|p∧q| / (‖p‖‖q‖)`, valued in `[0, 1]`.
///
/// Both arguments are normalized first, so huge representatives do not lose
/// digits to cancellation.
pub fn chordal_distance(z: &ProjectivePoint, w: &ProjectivePoint) -> f64 {
    let a = z.normalized();
    let b = w.normalized();
    wedge(&a, &b).abs().min(1.0)
}

/// A vector of `ℂ²` split into a unit direction and the natural log of its
/// norm.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScaledVector {
    pub unit: ProjectivePoint,
    pub log_norm: f64,
}

impl ScaledVector {
    /// `e^{log_norm} · unit`; overflows to infinity when not representable.
    pub fn reconstruct(&self) -> [C64; 2] {
        let s = self.log_norm.exp();
        [self.unit.p0 * s, self.unit.p1 * s]
    }
}

/// Split `v` into a unit representative and `log ‖v‖`.
pub fn normalize(v: [C64; 2]) -> Result<ScaledVector> {
    let n = pair_norm(&v);
    if n == 0.0 {
        return Err(Error::DegenerateLift);
    }
    if !n.is_finite() {
        return Err(Error::DegenerateLift);
    }
    Ok(ScaledVector {
        unit: ProjectivePoint { p0: v[0] / n, p1: v[1] / n },
        log_norm: n.ln(),
    })
}

/// A complex number held as `log|z|` and a unit phase, so that products of
/// many large or small factors neither overflow nor underflow.
///
/// Zero is represented by `log_abs = -∞`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogComplex {
    pub log_abs: f64,
    pub phase: C64,
}

impl LogComplex {
    pub const ONE: Self = Self { log_abs: 0.0, phase: C64 { re: 1.0, im: 0.0 } };
    pub const ZERO: Self = Self { log_abs: f64::NEG_INFINITY, phase: C64 { re: 1.0, im: 0.0 } };

    pub fn from_c64(z: C64) -> Self {
        let r = z.abs();
        if r == 0.0 {
            Self::ZERO
        } else {
            Self { log_abs: r.ln(), phase: z / r }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.log_abs == f64::NEG_INFINITY
    }

    pub fn mul(self, other: Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::ZERO;
        }
        Self { log_abs: self.log_abs + other.log_abs, phase: self.phase * other.phase }
    }

    /// `self^k` for an integer exponent; negative powers of zero are infinite.
    pub fn powi(self, k: i64) -> Self {
        if k == 0 {
            return Self::ONE;
        }
        if self.is_zero() {
            return if k > 0 {
                Self::ZERO
            } else {
                Self { log_abs: f64::INFINITY, phase: C64::new(1.0, 0.0) }
            };
        }
        Self { log_abs: self.log_abs * k as f64, phase: self.phase.powi(k as i32) }
    }

    pub fn abs(&self) -> f64 {
        self.log_abs.exp()
    }

    pub fn to_c64(&self) -> C64 {
        if self.is_zero() {
            C64::zero()
        } else {
            self.phase * self.log_abs.exp()
        }
    }
}
