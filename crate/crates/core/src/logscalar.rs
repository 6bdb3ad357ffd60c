//! Sign plus natural-log-magnitude scalars.
//!
//! Determinants of `k`-site boxes grow like `λ^k`, so anything of that
//! scale is carried as `(sign, ln|x|)`. Products are exact up to one
//! rounding of the log sum; sums go through the usual rescaled form and
//! report how many decimal digits were lost to cancellation.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Div, Mul, Neg};

use serde::{Deserialize, Serialize};

/// Cancellation worse than this many lost decimal digits is flagged by
/// [`LogScalar::add_checked`].
pub const CANCELLATION_DIGITS: f64 = 12.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogScalar {
    sign: i8,
    log_mag: f64,
}

/// Result of a rescaled sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckedSum {
    pub value: LogScalar,
    /// Decimal digits lost, `log10(max(|a|,|b|) / |a + b|)`; zero when no
    /// cancellation happened.
    pub lost_digits: f64,
}

impl CheckedSum {
    pub fn cancelled(&self) -> bool {
        self.lost_digits > CANCELLATION_DIGITS
    }
}

impl LogScalar {
    pub const ZERO: LogScalar = LogScalar {
        sign: 0,
        log_mag: f64::NEG_INFINITY,
    };
    pub const ONE: LogScalar = LogScalar {
        sign: 1,
        log_mag: 0.0,
    };

    /// Builds from parts. A zero sign forces `-inf` and a `-inf` magnitude
    /// forces a zero sign.
    pub fn from_parts(sign: i8, log_mag: f64) -> Self {
        if sign == 0 || log_mag == f64::NEG_INFINITY {
            return Self::ZERO;
        }
        debug_assert!(!log_mag.is_nan());
        LogScalar {
            sign: sign.signum(),
            log_mag,
        }
    }

    pub fn from_f64(x: f64) -> Self {
        if x == 0.0 {
            Self::ZERO
        } else {
            LogScalar {
                sign: if x > 0.0 { 1 } else { -1 },
                log_mag: x.abs().ln(),
            }
        }
    }

    /// Exponentiates back. Overflows to `±inf` and underflows to `±0`.
    pub fn to_f64(self) -> f64 {
        if self.sign == 0 {
            0.0
        } else {
            f64::from(self.sign) * self.log_mag.exp()
        }
    }

    pub fn sign(self) -> i8 {
        self.sign
    }

    pub fn log_mag(self) -> f64 {
        self.log_mag
    }

    pub fn is_zero(self) -> bool {
        self.sign == 0
    }

    pub fn abs(self) -> Self {
        LogScalar {
            sign: self.sign.abs(),
            log_mag: self.log_mag,
        }
    }

    pub fn recip(self) -> Self {
        assert!(self.sign != 0, "reciprocal of LogScalar zero");
        LogScalar {
            sign: self.sign,
            log_mag: -self.log_mag,
        }
    }

    /// Multiplies by `e^s`.
    pub fn scale_exp(self, s: f64) -> Self {
        if self.sign == 0 {
            self
        } else {
            LogScalar {
                sign: self.sign,
                log_mag: self.log_mag + s,
            }
        }
    }

    /// Rescaled sum with a cancellation report.
    pub fn add_checked(self, rhs: Self) -> CheckedSum {
        if self.sign == 0 {
            return CheckedSum {
                value: rhs,
                lost_digits: 0.0,
            };
        }
        if rhs.sign == 0 {
            return CheckedSum {
                value: self,
                lost_digits: 0.0,
            };
        }
        let (big, small) = if self.log_mag >= rhs.log_mag {
            (self, rhs)
        } else {
            (rhs, self)
        };
        let ratio = (small.log_mag - big.log_mag).exp();
        let mixed = f64::from(big.sign) + f64::from(small.sign) * ratio;
        if mixed == 0.0 {
            return CheckedSum {
                value: Self::ZERO,
                lost_digits: f64::INFINITY,
            };
        }
        let lost = -mixed.abs().log10();
        CheckedSum {
            value: LogScalar {
                sign: if mixed > 0.0 { 1 } else { -1 },
                log_mag: big.log_mag + mixed.abs().ln(),
            },
            lost_digits: lost.max(0.0),
        }
    }

    pub fn add(self, rhs: Self) -> Self {
        self.add_checked(rhs).value
    }

    pub fn sub(self, rhs: Self) -> Self {
        self.add(-rhs)
    }

    /// Compares magnitudes only.
    pub fn cmp_abs(self, rhs: Self) -> Ordering {
        self.log_mag
            .partial_cmp(&rhs.log_mag)
            .unwrap_or(Ordering::Equal)
    }
}

impl Default for LogScalar {
    fn default() -> Self {
        Self::ZERO
    }
}

impl Mul for LogScalar {
    type Output = LogScalar;

    fn mul(self, rhs: Self) -> Self {
        if self.sign == 0 || rhs.sign == 0 {
            return Self::ZERO;
        }
        LogScalar {
            sign: self.sign * rhs.sign,
            log_mag: self.log_mag + rhs.log_mag,
        }
    }
}

impl Div for LogScalar {
    type Output = LogScalar;

    fn div(self, rhs: Self) -> Self {
        self * rhs.recip()
    }
}

impl Neg for LogScalar {
    type Output = LogScalar;

    fn neg(self) -> Self {
        LogScalar {
            sign: -self.sign,
            log_mag: self.log_mag,
        }
    }
}

impl fmt::Display for LogScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.sign {
            0 => write!(f, "0"),
            s => write!(f, "{}exp({})", if s > 0 { "+" } else { "-" }, self.log_mag),
        }
    }
}
