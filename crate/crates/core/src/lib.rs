//! Finite-volume analysis of the almost Mathieu operator
//! `(Hu)(n) = u(n+1) + u(n-1) + 2λ cos 2π(θ + nα) u(n)`.
//!
//! * [`cf`]: continued-fraction model of the frequency.
//! * [`determinant`]: box determinants `P_k(θ)` and the even polynomial `Q_k`.
//! * [`greens`]: finite-box Green's functions and block-resolvent expansion.
//! * [`resonance`]: resonant/non-resonant classification and the interval
//!   sets feeding the Lagrange-interpolation argument.
//! * [`localization`]: truncated eigenproblems and decay measurement.
//! * [`tridiag`]: the symmetric tridiagonal eigensolver behind it.

pub mod cf;
pub mod determinant;
pub mod greens;
pub mod localization;
pub mod logscalar;
pub mod resonance;
pub mod tridiag;

pub use logscalar::LogScalar;
