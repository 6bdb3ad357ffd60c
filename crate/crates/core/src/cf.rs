//! Continued-fraction machinery for the frequency `α ∈ (0,1)`.
//!
//! A frequency is given by its digits `α = [0; a₁, a₂, …]` and never by a
//! float. Denominators follow `q_{n+1} = a_{n+1} q_n + q_{n-1}` from
//! `(p_{-1}, q_{-1}) = (1, 0)` and `(p₀, q₀) = (0, 1)`, so `q₁ = a₁`.
//!
//! The model keeps two depths:
//!
//! * the *model depth* `D`: convergents `0..=D` with `q_D` under the
//!   configured cap, which is what the interval constructions index;
//! * the *precision depth* `P ≥ D`: the deepest convergent whose integers
//!   fit comfortably in `i128` products. Every `kα mod 1` is evaluated as
//!   `k p_P / q_P` in exact integer arithmetic plus the small correction
//!   `(-1)^P k Δ_P / q_P`.
//!
//! `Δ_n = ‖q_n α‖` is evaluated from the identity
//! `Δ_n = 1 / (q_{n+1} + q_n [0; a_{n+2}, a_{n+3}, …])`, which is exact up
//! to the digits that are known.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default cap on stored denominators.
pub const DEFAULT_Q_CAP: u64 = 1_000_000;

/// Large-β test frequency: seed digits 7 then `a_{n+1} = round(e^{0.3 q_n}/q_n)`.
/// Denominators 1, 7, 50, 357, 2549, 18200 fit the default cap; the
/// trailing β estimates are ≈ 0.30.
pub const HIGH_BETA_FIXTURE: &str = "cf-rule:exp(beta=0.3,seed=[7,7,7,7,7])";

/// The `β = 1/2` schedule: denominators 1, 2, 3, 5, 13, 668 under the cap.
pub const HALF_BETA_FIXTURE: &str = "cf-rule:exp(beta=0.5,seed=[1,1,1])";

/// Default brute-force cap for [`verify_best_denominators`].
pub const DEFAULT_BRUTE_FORCE_CAP: i64 = 100_000;

const PRECISION_Q_LIMIT: i128 = 1 << 62;
const MAX_COLLECTED_DIGITS: usize = 600;
/// Digits are collected until `ln q` passes this value (beyond the model depth).
const LOOKAHEAD_LN_Q: f64 = 140.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CfError {
    #[error("empty digit list")]
    EmptyDigits,
    #[error("digit {index} is {value}; continued-fraction digits must be >= 1")]
    NonPositiveDigit { index: usize, value: i64 },
    #[error("requested depth {n_max} exceeds the {available} available digits")]
    DepthExceedsDigits { n_max: usize, available: usize },
    #[error("input is not finite")]
    NonFinite,
    #[error("index {index} out of range (model depth {depth})")]
    IndexOutOfRange { index: usize, depth: usize },
    #[error("q_{{n+1}} = {q} exceeds the brute-force cap {cap}")]
    CapExceeded { q: i64, cap: i64 },
    #[error("resonant phases use p <= 0, got p = {0}")]
    PositiveP(i64),
    #[error("beta estimate needs at least 2 convergents, model has {0}")]
    TooFewConvergents(usize),
    #[error("malformed frequency spec `{spec}`: {reason}")]
    Parse { spec: String, reason: String },
}

/// Where the digits come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DigitSource {
    /// A finite prefix `a₁, …, a_L`.
    Explicit(Vec<u64>),
    /// A digit block repeated forever (`golden` = `[1]`, `silver` = `[2]`).
    Periodic(Vec<u64>),
    /// `a_n` from `seed` for `n <= seed.len()`, then
    /// `a_{n+1} = max(1, round(e^{β q_n} / q_n))`.
    ExpRule { beta: f64, seed: Vec<u64> },
}

/// Textual frequency specification: `golden`, `silver`, `cf:[1,1,2]`, or
/// `cf-rule:exp(beta=0.5,seed=[1,1,1])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencySpec {
    pub text: String,
    pub source: DigitSource,
}

impl FromStr for FrequencySpec {
    type Err = CfError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let text = s.trim();
        let fail = |reason: &str| CfError::Parse {
            spec: text.to_string(),
            reason: reason.to_string(),
        };
        let source = match text {
            "golden" => DigitSource::Periodic(vec![1]),
            "silver" => DigitSource::Periodic(vec![2]),
            _ => {
                if let Some(rest) = text.strip_prefix("cf-rule:") {
                    let inner = rest
                        .strip_prefix("exp(")
                        .and_then(|r| r.strip_suffix(')'))
                        .ok_or_else(|| fail("expected exp(beta=..,seed=[..])"))?;
                    let (beta_part, seed_part) = inner
                        .split_once(",seed=")
                        .ok_or_else(|| fail("missing seed=[..]"))?;
                    let beta: f64 = beta_part
                        .trim()
                        .strip_prefix("beta=")
                        .ok_or_else(|| fail("missing beta="))?
                        .trim()
                        .parse()
                        .map_err(|_| fail("beta is not a number"))?;
                    if !beta.is_finite() || beta <= 0.0 {
                        return Err(fail("beta must be positive and finite"));
                    }
                    let seed = parse_digit_list(seed_part.trim())?;
                    DigitSource::ExpRule { beta, seed }
                } else if let Some(rest) = text.strip_prefix("cf:") {
                    DigitSource::Explicit(parse_digit_list(rest.trim())?)
                } else {
                    return Err(fail("unknown form"));
                }
            }
        };
        Ok(FrequencySpec {
            text: text.to_string(),
            source,
        })
    }
}

impl fmt::Display for FrequencySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

fn parse_digit_list(s: &str) -> Result<Vec<u64>, CfError> {
    let inner = s
        .strip_prefix('[')
        .and_then(|r| r.strip_suffix(']'))
        .ok_or_else(|| CfError::Parse {
            spec: s.to_string(),
            reason: "expected [a1,a2,...]".into(),
        })?;
    if inner.trim().is_empty() {
        return Err(CfError::EmptyDigits);
    }
    let signed: Vec<i64> = inner
        .split(',')
        .map(|t| {
            t.trim().parse::<i64>().map_err(|_| CfError::Parse {
                spec: s.to_string(),
                reason: format!("`{}` is not an integer", t.trim()),
            })
        })
        .collect::<Result<_, _>>()?;
    validate_digits(&signed)
}

fn validate_digits(digits: &[i64]) -> Result<Vec<u64>, CfError> {
    if digits.is_empty() {
        return Err(CfError::EmptyDigits);
    }
    digits
        .iter()
        .enumerate()
        .map(|(i, &d)| {
            if d <= 0 {
                Err(CfError::NonPositiveDigit {
                    index: i + 1,
                    value: d,
                })
            } else {
                Ok(d as u64)
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy)]
struct Digit {
    exact: Option<u64>,
    ln: f64,
}

impl Digit {
    fn exact(a: u64) -> Self {
        Digit {
            exact: Some(a),
            ln: (a as f64).ln(),
        }
    }

    fn value(&self) -> f64 {
        match self.exact {
            Some(a) => a as f64,
            None => self.ln.exp(),
        }
    }
}

impl DigitSource {
    /// Digit `a_n` (1-based) given `q_{n-1}` as a float.
    fn digit(&self, n: usize, q_prev: f64) -> Option<Digit> {
        match self {
            DigitSource::Explicit(d) => d.get(n - 1).map(|&a| Digit::exact(a)),
            DigitSource::Periodic(block) => Some(Digit::exact(block[(n - 1) % block.len()])),
            DigitSource::ExpRule { beta, seed } => {
                if n <= seed.len() {
                    return Some(Digit::exact(seed[n - 1]));
                }
                let ln_a = beta * q_prev - q_prev.ln();
                // Rounding is only meaningful while the digit is exactly representable.
                if ln_a < 52.0 * std::f64::consts::LN_2 {
                    Some(Digit::exact((ln_a.exp().round() as u64).max(1)))
                } else {
                    Some(Digit {
                        exact: None,
                        ln: ln_a,
                    })
                }
            }
        }
    }

    fn is_finite_list(&self) -> bool {
        matches!(self, DigitSource::Explicit(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Convergent {
    pub n: usize,
    pub p: i64,
    pub q: i64,
}

/// An irrational frequency described by its continued-fraction digits.
///
/// Immutable after construction.
#[derive(Debug, Clone)]
pub struct FrequencyModel {
    spec: Option<FrequencySpec>,
    digits: Vec<u64>,
    convergents: Vec<Convergent>,
    deltas: Vec<f64>,
    log_deltas: Vec<f64>,
    log_q: Vec<f64>,
    beta_sequence: Vec<f64>,
    truncated: bool,
    q_cap: u64,
    // precision convergent
    prec_n: usize,
    prec_p: i128,
    prec_q: i128,
    prec_delta: f64,
    value: f64,
    value_error: f64,
}

/// JSON-facing snapshot of a [`FrequencyModel`].
#[derive(Debug, Clone, Serialize)]
pub struct FrequencyReport {
    pub spec: Option<String>,
    pub digits: Vec<u64>,
    pub convergents: Vec<Convergent>,
    pub deltas: Vec<f64>,
    pub beta_sequence: Vec<f64>,
    pub value_approx: f64,
    pub value_error: f64,
    pub truncated: bool,
    pub q_cap: u64,
}

impl FrequencyModel {
    /// Builds a model with convergents `0..=n_max`, stopping early (and
    /// flagging truncation) when `q` would pass `q_cap`.
    pub fn build(source: &DigitSource, n_max: usize, q_cap: u64) -> Result<Self, CfError> {
        match source {
            DigitSource::Explicit(d) | DigitSource::Periodic(d) => {
                if d.is_empty() {
                    return Err(CfError::EmptyDigits);
                }
                if let Some((i, _)) = d.iter().enumerate().find(|(_, &a)| a == 0) {
                    return Err(CfError::NonPositiveDigit {
                        index: i + 1,
                        value: 0,
                    });
                }
                if let DigitSource::Explicit(d) = source {
                    if n_max > d.len() {
                        return Err(CfError::DepthExceedsDigits {
                            n_max,
                            available: d.len(),
                        });
                    }
                }
            }
            DigitSource::ExpRule { beta, seed } => {
                if seed.is_empty() {
                    return Err(CfError::EmptyDigits);
                }
                if !beta.is_finite() {
                    return Err(CfError::NonFinite);
                }
            }
        }

        // Collect digits with float/log denominators and exact integers while they fit.
        let mut collected: Vec<Digit> = Vec::new();
        // index n (0-based convergent index); entry 0 is q_0 = 1
        let mut log_q = vec![0.0_f64];
        let mut q_float = vec![1.0_f64];
        let mut exact: Vec<Option<(i128, i128)>> = vec![Some((0, 1))];
        let (mut ln_qm2, mut ln_qm1) = (f64::NEG_INFINITY, 0.0_f64);
        let (mut pq_m2, mut pq_m1): (Option<(i128, i128)>, Option<(i128, i128)>) =
            (Some((1, 0)), Some((0, 1)));

        for n in 1..=MAX_COLLECTED_DIGITS {
            if n > n_max + 1 && ln_qm1 > LOOKAHEAD_LN_Q {
                break;
            }
            let Some(d) = source.digit(n, q_float[n - 1]) else {
                break;
            };
            let ln_qn = d.ln + ln_qm1 + ((ln_qm2 - d.ln - ln_qm1).exp()).ln_1p();
            let pq = match (d.exact, pq_m1, pq_m2) {
                (Some(a), Some((p1, q1)), Some((p2, q2))) => {
                    let a = a as i128;
                    let q = a.checked_mul(q1).and_then(|v| v.checked_add(q2));
                    let p = a.checked_mul(p1).and_then(|v| v.checked_add(p2));
                    match (p, q) {
                        (Some(p), Some(q)) if q <= PRECISION_Q_LIMIT => Some((p, q)),
                        _ => None,
                    }
                }
                _ => None,
            };
            collected.push(d);
            log_q.push(ln_qn);
            q_float.push(ln_qn.exp());
            exact.push(pq);
            ln_qm2 = ln_qm1;
            ln_qm1 = ln_qn;
            pq_m2 = pq_m1;
            pq_m1 = pq;
            if d.exact.is_none() {
                break;
            }
        }
        let len = collected.len();

        // Model depth: n <= n_max, q exact and under cap.
        let mut depth = 0;
        for n in 1..=len.min(n_max) {
            match exact[n] {
                Some((_, q)) if q <= q_cap as i128 => depth = n,
                _ => break,
            }
        }
        let truncated = depth < n_max;

        // Precision depth: deepest exact convergent.
        let mut prec_n = 0;
        for (n, e) in exact.iter().enumerate() {
            if e.is_some() {
                prec_n = n;
            } else {
                break;
            }
        }

        // Tails y_m = [0; a_m, a_{m+1}, ...] for m = 1..=len+1 (y_{len+1} = 0).
        let mut tails = vec![0.0_f64; len + 2];
        for m in (1..=len).rev() {
            tails[m] = 1.0 / (collected[m - 1].value() + tails[m + 1]);
        }
        let log_delta = |n: usize| -> f64 {
            // requires n + 1 <= len
            let y = tails.get(n + 2).copied().unwrap_or(0.0);
            let rel = (log_q[n] - log_q[n + 1]).exp() * y;
            -(log_q[n + 1] + rel.ln_1p())
        };

        let known = len.min(depth + 1); // number of n with q_{n+1} known, capped at depth+1
        // |q_n α − p_n| is the distance to the nearest integer except at n = 0
        // when a₁ = 1, where p₀ = 0 is the farther integer.
        let log_deltas: Vec<f64> = (0..known)
            .map(|n| {
                let l = log_delta(n);
                if n == 0 && l > -std::f64::consts::LN_2 {
                    (-l.exp()).ln_1p()
                } else {
                    l
                }
            })
            .collect();
        let deltas: Vec<f64> = log_deltas.iter().map(|l| l.exp()).collect();
        let beta_sequence: Vec<f64> = (0..known)
            .map(|n| log_q[n + 1] / q_float[n])
            .collect();

        let (prec_p, prec_q) = exact[prec_n].expect("precision convergent is exact");
        let prec_delta = if prec_n < len {
            log_delta(prec_n).exp()
        } else {
            0.0
        };
        let sign = if prec_n % 2 == 0 { 1.0 } else { -1.0 };
        let value = prec_p as f64 / prec_q as f64 + sign * prec_delta / prec_q as f64;
        let tail_error = if source.is_finite_list() || len == MAX_COLLECTED_DIGITS {
            (-2.0 * log_q[len]).exp()
        } else {
            0.0
        };
        let value_error = tail_error + 2.0 * f64::EPSILON * value;

        let convergents = (0..=depth)
            .map(|n| {
                let (p, q) = exact[n].expect("model convergents are exact");
                Convergent {
                    n,
                    p: p as i64,
                    q: q as i64,
                }
            })
            .collect();

        Ok(FrequencyModel {
            spec: None,
            digits: collected[..depth]
                .iter()
                .map(|d| d.exact.expect("model digits are exact"))
                .collect(),
            convergents,
            deltas,
            log_deltas,
            log_q: log_q[..=(depth + 1).min(len)].to_vec(),
            beta_sequence,
            truncated,
            q_cap,
            prec_n,
            prec_p,
            prec_q,
            prec_delta,
            value,
            value_error,
        })
    }

    /// Builds from a textual spec. `depth = None` means "as deep as the cap allows".
    pub fn from_spec(spec: &FrequencySpec, depth: Option<usize>, q_cap: u64) -> Result<Self, CfError> {
        let n_max = match (&spec.source, depth) {
            (_, Some(d)) => d,
            (DigitSource::Explicit(d), None) => d.len(),
            (_, None) => MAX_COLLECTED_DIGITS,
        };
        let mut model = Self::build(&spec.source, n_max, q_cap)?;
        if depth.is_none() {
            model.truncated = false;
        }
        model.spec = Some(spec.clone());
        Ok(model)
    }

    pub fn spec(&self) -> Option<&FrequencySpec> {
        self.spec.as_ref()
    }

    /// Model depth `D`; convergents are stored for `0..=D`.
    pub fn depth(&self) -> usize {
        self.convergents.len() - 1
    }

    pub fn digits(&self) -> &[u64] {
        &self.digits
    }

    pub fn convergents(&self) -> &[Convergent] {
        &self.convergents
    }

    pub fn q(&self, n: usize) -> Result<i64, CfError> {
        self.convergents
            .get(n)
            .map(|c| c.q)
            .ok_or(CfError::IndexOutOfRange {
                index: n,
                depth: self.depth(),
            })
    }

    pub fn p(&self, n: usize) -> Result<i64, CfError> {
        self.convergents
            .get(n)
            .map(|c| c.p)
            .ok_or(CfError::IndexOutOfRange {
                index: n,
                depth: self.depth(),
            })
    }

    /// `ln q_n`, available for `n <= D + 1` when the next digit is known.
    pub fn log_q(&self, n: usize) -> Option<f64> {
        self.log_q.get(n).copied()
    }

    /// `Δ_n = ‖q_n α‖`, for every `n` whose `q_{n+1}` is known.
    pub fn deltas(&self) -> &[f64] {
        &self.deltas
    }

    /// `ln Δ_n`; finite even when `Δ_n` underflows.
    pub fn log_deltas(&self) -> &[f64] {
        &self.log_deltas
    }

    pub fn beta_sequence(&self) -> &[f64] {
        &self.beta_sequence
    }

    pub fn truncated(&self) -> bool {
        self.truncated
    }

    pub fn q_cap(&self) -> u64 {
        self.q_cap
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    /// Bound on `|α − value()|`.
    pub fn value_error(&self) -> f64 {
        self.value_error
    }

    /// `kα mod m` in `[0, m)`, with the integer part of `k p_P / q_P` exact.
    pub fn mul_mod(&self, k: i64, modulus: i64) -> f64 {
        let k = k as i128;
        let num = k * self.prec_p;
        let whole = num.div_euclid(self.prec_q);
        let rem = num.rem_euclid(self.prec_q);
        let sign = if self.prec_n % 2 == 0 { 1.0 } else { -1.0 };
        let corr = sign * (k as f64) * self.prec_delta / self.prec_q as f64;
        let base = whole.rem_euclid(modulus as i128) as f64;
        let v = base + rem as f64 / self.prec_q as f64 + corr;
        let m = modulus as f64;
        let r = v.rem_euclid(m);
        if r >= m {
            0.0
        } else {
            r
        }
    }

    /// `{kα}` in `[0, 1)`.
    pub fn frac_mul(&self, k: i64) -> f64 {
        self.mul_mod(k, 1)
    }

    /// `‖kα‖_{ℝ/ℤ}` without the cancellation of `1 − {kα}`.
    pub fn norm_mul(&self, k: i64) -> f64 {
        let k = k as i128;
        let num = k * self.prec_p;
        let rem = num.rem_euclid(self.prec_q);
        let sign = if self.prec_n % 2 == 0 { 1.0 } else { -1.0 };
        let corr = sign * (k as f64) * self.prec_delta / self.prec_q as f64;
        let q = self.prec_q as f64;
        let d = if 2 * rem <= self.prec_q {
            rem as f64 / q + corr
        } else {
            (self.prec_q - rem) as f64 / q - corr
        };
        let d = d.abs();
        if d > 0.5 {
            1.0 - d
        } else {
            d
        }
    }

    pub fn report(&self) -> FrequencyReport {
        FrequencyReport {
            spec: self.spec.as_ref().map(|s| s.text.clone()),
            digits: self.digits.clone(),
            convergents: self.convergents.clone(),
            deltas: self.deltas.clone(),
            beta_sequence: self.beta_sequence.clone(),
            value_approx: self.value,
            value_error: self.value_error,
            truncated: self.truncated,
            q_cap: self.q_cap,
        }
    }
}

/// Builds a model from an explicit digit list with convergents `0..=n_max`.
pub fn build_frequency(digits: &[i64], n_max: usize) -> Result<FrequencyModel, CfError> {
    let digits = validate_digits(digits)?;
    FrequencyModel::build(&DigitSource::Explicit(digits), n_max, u64::MAX >> 2)
}

/// Which trailing indices of the β sequence the supremum is taken over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum BetaWindow {
    /// The last `⌈len/2⌉` indices.
    #[default]
    LastHalf,
    /// The last `m` indices (clamped to the sequence length).
    Last(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BetaEstimate {
    pub sequence: Vec<f64>,
    pub tail_sup: f64,
    /// First index of the window the supremum was taken over.
    pub window_start: usize,
}

/// `ln q_{n+1} / q_n` for every stored `n`, plus a tail supremum. The
/// supremum only estimates `β(α)`, which is a limsup.
pub fn beta_estimate(model: &FrequencyModel, window: BetaWindow) -> Result<BetaEstimate, CfError> {
    if model.convergents.len() < 2 {
        return Err(CfError::TooFewConvergents(model.convergents.len()));
    }
    let sequence = model.beta_sequence.clone();
    let len = sequence.len();
    let window_start = match window {
        BetaWindow::LastHalf => len / 2,
        BetaWindow::Last(m) => len.saturating_sub(m.max(1)),
    };
    let tail_sup = sequence[window_start..]
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(BetaEstimate {
        sequence,
        tail_sup,
        window_start,
    })
}

/// `‖x‖_{ℝ/ℤ} = min_ℓ |x − ℓ|`.
pub fn dist_to_integers(x: f64) -> Result<f64, CfError> {
    if !x.is_finite() {
        return Err(CfError::NonFinite);
    }
    Ok((x - x.round()).abs())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BestDenominatorReport {
    pub n: usize,
    pub holds: bool,
    /// Minimiser of `‖kα‖` over `1 <= k < q_{n+1}`; `None` for an empty range.
    pub worst_k: Option<i64>,
    pub min_norm: Option<f64>,
    pub delta_n: f64,
}

/// Exhaustive check that `‖kα‖ >= ‖q_n α‖` for all `1 <= k < q_{n+1}`.
pub fn verify_best_denominators(
    model: &FrequencyModel,
    n: usize,
    cap: i64,
) -> Result<BestDenominatorReport, CfError> {
    let q_n = model.q(n)?;
    let q_next = model.q(n + 1)?;
    if q_next > cap {
        return Err(CfError::CapExceeded { q: q_next, cap });
    }
    let delta_n = model.norm_mul(q_n);
    let mut worst: Option<(i64, f64)> = None;
    let mut holds = true;
    for k in 1..q_next {
        let v = model.norm_mul(k);
        if k != q_n && v < delta_n {
            holds = false;
        }
        match worst {
            Some((_, w)) if v >= w => {}
            _ => worst = Some((k, v)),
        }
    }
    Ok(BestDenominatorReport {
        n,
        holds,
        worst_k: worst.map(|w| w.0),
        min_norm: worst.map(|w| w.1),
        delta_n,
    })
}

/// `b_n = q_n^{8/9}`.
pub fn resonance_scale(model: &FrequencyModel, n: usize) -> Result<f64, CfError> {
    Ok(scale_of(model.q(n)?))
}

pub(crate) fn scale_of(q: i64) -> f64 {
    (q as f64).powf(8.0 / 9.0)
}

/// A completely resonant phase `θ = (j + pα)/2 mod 1`, `p <= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResonantPhase {
    pub p: i64,
    pub j: i64,
    pub theta: f64,
}

pub fn make_resonant_phase(model: &FrequencyModel, p: i64, j: i64) -> Result<ResonantPhase, CfError> {
    if p > 0 {
        return Err(CfError::PositiveP(p));
    }
    let two_theta = (j.rem_euclid(2) as f64 + model.mul_mod(p, 2)).rem_euclid(2.0);
    let mut theta = two_theta / 2.0;
    if theta >= 1.0 {
        theta = 0.0;
    }
    Ok(ResonantPhase { p, j, theta })
}
