//! Box determinants `P_k(θ) = det (H − E)` restricted to `[0, k−1]`.
//!
//! With `d_j = 2λ cos 2π(θ + jα) − E` the tridiagonal recurrence
//! `D_j = d_{j−1} D_{j−1} − D_{j−2}` is run with both terms renormalised
//! every step; the magnitudes live in the accumulated log scale.
//!
//! `P_k(θ)` is an even function of `θ + (k−1)α/2`, so it is a polynomial
//! `Q_k` in `cos 2π(θ + (k−1)α/2)`. `Q_k` is only ever evaluated through
//! `P_k` at a back-solved phase, never through its coefficients.

use std::f64::consts::TAU;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::cf::FrequencyModel;
use crate::logscalar::LogScalar;

/// Final renormalised magnitude below which a result is flagged.
pub const CANCELLATION_FLOOR: f64 = 1e-12;

/// Minimum grid points per unit of `k` for suprema over `θ`.
pub const MIN_GRID_FACTOR: usize = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DetError {
    #[error("coupling must be positive and finite, got {0}")]
    InvalidLambda(f64),
    #[error("phase must lie in [0, 1), got {0}")]
    InvalidTheta(f64),
    #[error("non-finite input")]
    NonFinite,
    #[error("|x| = {0} exceeds 1")]
    XOutOfRange(f64),
    #[error("k must be at least {min}, got {k}")]
    KTooSmall { k: usize, min: usize },
    #[error("rate must be positive, got {0}")]
    NonPositiveRate(f64),
    #[error("grid factor {0} is below the minimum of 4 points per k")]
    GridTooCoarse(usize),
}

/// Coupling, frequency, phase and energy of `H_{λ,α,θ} − E`.
#[derive(Debug, Clone)]
pub struct OperatorParams {
    lambda: f64,
    freq: Arc<FrequencyModel>,
    theta: f64,
    energy: f64,
}

impl OperatorParams {
    pub fn new(lambda: f64, freq: Arc<FrequencyModel>, theta: f64, energy: f64) -> Result<Self, DetError> {
        if !theta.is_finite() || !energy.is_finite() || lambda.is_nan() {
            return Err(DetError::NonFinite);
        }
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(DetError::InvalidLambda(lambda));
        }
        if !(0.0..1.0).contains(&theta) {
            return Err(DetError::InvalidTheta(theta));
        }
        Ok(OperatorParams {
            lambda,
            freq,
            theta,
            energy,
        })
    }

    /// Accepts any nonzero `λ` and any real `θ`, using
    /// `H_{λ,α,θ} = H_{−λ,α,θ+1/2}` and reduction mod 1.
    pub fn normalized(lambda: f64, freq: Arc<FrequencyModel>, theta: f64, energy: f64) -> Result<Self, DetError> {
        if !theta.is_finite() || !lambda.is_finite() {
            return Err(DetError::NonFinite);
        }
        let (lambda, theta) = if lambda < 0.0 {
            (-lambda, theta + 0.5)
        } else {
            (lambda, theta)
        };
        Self::new(lambda, freq, wrap_phase(theta), energy)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn freq(&self) -> &FrequencyModel {
        &self.freq
    }

    pub fn freq_arc(&self) -> &Arc<FrequencyModel> {
        &self.freq
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn with_theta(&self, theta: f64) -> Result<Self, DetError> {
        Self::new(self.lambda, self.freq.clone(), theta, self.energy)
    }

    pub fn with_energy(&self, energy: f64) -> Result<Self, DetError> {
        Self::new(self.lambda, self.freq.clone(), self.theta, energy)
    }

    /// `θ + xα mod 1`.
    pub fn phase_at(&self, x: i64) -> f64 {
        wrap_phase(self.theta + self.freq.frac_mul(x))
    }

    /// `2λ cos 2π(θ + offset + jα) − E`.
    pub fn diag(&self, offset: f64, j: i64) -> f64 {
        self.lambda * 2.0 * cos_turns(self.theta + offset + self.freq.frac_mul(j)) - self.energy
    }

    /// `v(θ + jα) = 2 cos 2π(θ + jα)`, unscaled.
    pub fn potential(&self, j: i64) -> f64 {
        2.0 * cos_turns(self.theta + self.freq.frac_mul(j))
    }
}

/// Reduces a phase into `[0, 1)`.
pub fn wrap_phase(t: f64) -> f64 {
    let r = t.rem_euclid(1.0);
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// `cos 2πt`, with the argument reduced first and exact zeros at quarter turns.
pub fn cos_turns(t: f64) -> f64 {
    let r = wrap_phase(t);
    if r == 0.25 || r == 0.75 {
        return 0.0;
    }
    (TAU * r).cos()
}

/// A determinant with its cancellation flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PkValue {
    pub value: LogScalar,
    /// The final renormalised magnitude was below [`CANCELLATION_FLOOR`].
    pub cancellation: bool,
}

/// Determinant of the tridiagonal matrix with diagonal `diag` and unit
/// off-diagonals, by the renormalised three-term recurrence.
pub fn tridiag_det<I: IntoIterator<Item = f64>>(diag: I) -> PkValue {
    let (mut a, mut b) = (1.0_f64, 0.0_f64);
    let mut log_scale = 0.0_f64;
    for d in diag {
        let next = d * a - b;
        b = a;
        a = next;
        let m = a.abs().max(b.abs());
        if m > 0.0 && m.is_finite() {
            a /= m;
            b /= m;
            log_scale += m.ln();
        }
    }
    PkValue {
        value: LogScalar::from_f64(a).scale_exp(log_scale),
        cancellation: a.abs() < CANCELLATION_FLOOR,
    }
}

/// `P_k(θ + theta_offset)`. Non-integer-multiple offsets are accepted but
/// are beyond how the determinants are used elsewhere in the crate.
pub fn pk_eval(params: &OperatorParams, k: usize, theta_offset: f64) -> LogScalar {
    pk_eval_checked(params, k, theta_offset).value
}

pub fn pk_eval_checked(params: &OperatorParams, k: usize, theta_offset: f64) -> PkValue {
    tridiag_det((0..k as i64).map(|j| params.diag(theta_offset, j)))
}

/// `P_k(θ + xα)` with the shift folded into the integer multiple of `α`.
pub fn pk_shift(params: &OperatorParams, k: usize, x: i64) -> LogScalar {
    tridiag_det((0..k as i64).map(|j| params.diag(0.0, x + j))).value
}

/// Phase `θ*` with `cos 2π(θ* + (k−1)α/2) = x`.
pub fn qk_phase(freq: &FrequencyModel, k: usize, x: f64) -> Result<f64, DetError> {
    if !x.is_finite() {
        return Err(DetError::NonFinite);
    }
    if x.abs() > 1.0 {
        return Err(DetError::XOutOfRange(x.abs()));
    }
    if k == 0 {
        return Err(DetError::KTooSmall { k, min: 1 });
    }
    let half_shift = freq.mul_mod(k as i64 - 1, 2) / 2.0;
    Ok(wrap_phase(x.acos() / TAU - half_shift))
}

/// `Q_k(x)`, evaluated as `P_k` at the back-solved phase. The phase stored
/// in `params` is ignored.
pub fn qk_eval(params: &OperatorParams, k: usize, x: f64) -> Result<LogScalar, DetError> {
    let theta_star = qk_phase(params.freq(), k, x)?;
    Ok(pk_eval(&params.with_theta(theta_star)?, k, 0.0))
}

/// `Q_k(cos 2πθ)`, i.e. `P_k` at `θ − (k−1)α/2`.
pub fn qk_at_phase(params: &OperatorParams, k: usize, theta: f64) -> Result<LogScalar, DetError> {
    if k == 0 {
        return Err(DetError::KTooSmall { k, min: 1 });
    }
    let half_shift = params.freq().mul_mod(k as i64 - 1, 2) / 2.0;
    Ok(pk_eval(&params.with_theta(wrap_phase(theta - half_shift))?, k, 0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Membership {
    pub member: bool,
    /// `(k+1) r − ln|Q_k|`; `+inf` at a zero of `Q_k`.
    pub margin: f64,
}

/// Membership of `theta_test` in `A_{k,r} = {θ : |Q_k(cos 2πθ)| ≤ e^{(k+1) r}}`.
pub fn in_a_kr(params: &OperatorParams, k: usize, r: f64, theta_test: f64) -> Result<Membership, DetError> {
    if !(r > 0.0) {
        return Err(DetError::NonPositiveRate(r));
    }
    let q = qk_at_phase(params, k, wrap_phase(theta_test))?;
    let margin = (k as f64 + 1.0) * r - q.log_mag();
    Ok(Membership {
        member: margin >= 0.0,
        margin,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthPoint {
    pub k: usize,
    /// `max_θ (1/k) ln|P_k(θ)|` over the grid.
    pub sup: f64,
    pub argmax_theta: f64,
    /// `sup > ln λ + ε`.
    pub exceeds: bool,
}

/// Grid suprema of `(1/k) ln|P_k(θ)|` over `θ_i = i / (grid_factor·k)`.
///
/// The phase stored in `params` is ignored.
pub fn sup_growth_profile(
    params: &OperatorParams,
    k_list: &[usize],
    grid_factor: usize,
    epsilon: f64,
) -> Result<Vec<GrowthPoint>, DetError> {
    if grid_factor < MIN_GRID_FACTOR {
        return Err(DetError::GridTooCoarse(grid_factor));
    }
    let bound = params.lambda().ln() + epsilon;
    k_list
        .iter()
        .map(|&k| {
            if k == 0 {
                return Err(DetError::KTooSmall { k, min: 1 });
            }
            let points = grid_factor * k;
            let (sup, argmax_theta) = (0..points)
                .into_par_iter()
                .map(|i| {
                    let theta = i as f64 / points as f64;
                    let p = OperatorParams {
                        theta,
                        ..params.clone()
                    };
                    (pk_eval(&p, k, 0.0).log_mag() / k as f64, theta)
                })
                // ordered reduction: ties resolve to the smaller θ
                .reduce(
                    || (f64::NEG_INFINITY, 0.0),
                    |a, b| {
                        if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
                            b
                        } else {
                            a
                        }
                    },
                );
            Ok(GrowthPoint {
                k,
                sup,
                argmax_theta,
                exceeds: sup > bound,
            })
        })
        .collect()
}

/// Diagonal entries `d_m` over an integer site range, so windowed
/// determinants do not recompute the potential.
#[derive(Debug, Clone)]
pub struct DiagonalStrip {
    start: i64,
    diag: Vec<f64>,
}

impl DiagonalStrip {
    /// `d_m = 2λ cos 2π(θ + offset + mα) − E` for `m ∈ [start, end]`.
    pub fn new(params: &OperatorParams, offset: f64, start: i64, end: i64) -> Self {
        let diag = if end < start {
            Vec::new()
        } else {
            (start..=end)
                .into_par_iter()
                .map(|m| params.diag(offset, m))
                .collect()
        };
        DiagonalStrip { start, diag }
    }

    pub fn start(&self) -> i64 {
        self.start
    }

    pub fn end(&self) -> i64 {
        self.start + self.diag.len() as i64 - 1
    }

    pub fn get(&self, m: i64) -> f64 {
        self.diag[(m - self.start) as usize]
    }

    /// Determinant over sites `[x1, x2]`; `1` for an empty box.
    pub fn box_det(&self, x1: i64, x2: i64) -> LogScalar {
        if x2 < x1 {
            return LogScalar::ONE;
        }
        assert!(
            x1 >= self.start && x2 <= self.end(),
            "box [{x1}, {x2}] outside strip [{}, {}]",
            self.start,
            self.end()
        );
        let lo = (x1 - self.start) as usize;
        let hi = (x2 - self.start) as usize;
        tridiag_det(self.diag[lo..=hi].iter().copied()).value
    }

    /// `P_k(θ + x1 α)` over the box starting at `x1`.
    pub fn pk_window(&self, x1: i64, k: usize) -> LogScalar {
        self.box_det(x1, x1 + k as i64 - 1)
    }
}

/// Exact determinant for rational diagonals (test oracle mode).
pub fn tridiag_det_exact(diag: &[BigRational]) -> BigRational {
    let (mut a, mut b) = (BigRational::from_integer(BigInt::from(1)), BigRational::zero());
    for d in diag {
        let next = d * &a - &b;
        b = a;
        a = next;
    }
    a
}

/// The renormalised recurrence in exact arithmetic: returns the per-step
/// scales and the final renormalised value.
pub fn tridiag_det_renormalized_exact(diag: &[BigRational]) -> (Vec<BigRational>, BigRational) {
    let (mut a, mut b) = (BigRational::from_integer(BigInt::from(1)), BigRational::zero());
    let mut scales = Vec::with_capacity(diag.len());
    for d in diag {
        let next = d * &a - &b;
        b = a;
        a = next;
        let m = if a.abs() >= b.abs() { a.abs() } else { b.abs() };
        a /= &m;
        b /= &m;
        scales.push(m);
    }
    (scales, a)
}

/// Exact rational images of the floating diagonal of `P_k(θ + offset)`.
pub fn exact_diagonal(params: &OperatorParams, k: usize, offset: f64) -> Vec<BigRational> {
    (0..k as i64)
        .map(|j| BigRational::from_float(params.diag(offset, j)).expect("finite diagonal"))
        .collect()
}
