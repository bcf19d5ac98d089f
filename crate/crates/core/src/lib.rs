//! Parameter-space dynamics of one-parameter holomorphic families of
//! rational maps of the Riemann sphere.
//!
//! The crate works with a family through a homogeneous lift whose
//! coefficients are polynomials in the parameter `λ`, together with marked
//! lifts of its critical points. On top of that it provides:
//!
//! * scale-safe iteration, dynamical Green functions, cycle enumeration,
//!   multipliers and two Lyapunov exponent estimators ([`dynamics`]),
//! * Möbius arithmetic, dynatomic polynomials and multiplier symmetric
//!   functions ([`dynatomic`]),
//! * critical-orbit polynomials, their exact-period factors and the
//!   divisors of superattracting parameters ([`param_loci`]),
//! * grid potentials, discrete Laplacian masses and convergence diagnostics
//!   in the parameter plane ([`potentials`]).
//!
//! The crate is `no_std` and only needs `alloc`. File formats, parallel grid
//! evaluation and the command line live in the companion `perdyn` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod dynamics;
pub mod dynatomic;
pub mod error;
pub mod exact;
pub mod family;
pub mod geometry;
pub mod lambda_poly;
pub mod param_loci;
pub mod potentials;
pub mod roots;

pub use error::{Error, Result};
pub use family::{MarkedFamily, Region};
pub use geometry::{chordal_distance, normalize, wedge, LogComplex, ProjectivePoint, ScaledVector};

/// Complex scalar used throughout the crate.
pub type C64 = num_complex::Complex64;
