//! Green's functions `G_I = (R_I (H − E) R_I)^{-1}` of integer boxes.
//!
//! For `I = [x₁, x₂]` and `x₁ ≤ i ≤ j ≤ x₂`, Cramer's rule on the
//! tridiagonal restriction gives
//!
//! ```text
//! G_I(i, j) = (−1)^{j−i} det[x₁, i−1] · det[j+1, x₂] / det[x₁, x₂]
//! ```
//!
//! which specialises to the endpoint formulas
//! `G_I(x₁, y) = (−1)^{y−x₁} P_{x₂−y}(θ+(y+1)α) / P_k(θ+x₁α)` and
//! `G_I(y, x₂) = (−1)^{x₂−y} P_{y−x₁}(θ+x₁α) / P_k(θ+x₁α)`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::determinant::{pk_shift, tridiag_det, DetError, OperatorParams, CANCELLATION_FLOOR};
use crate::logscalar::LogScalar;

/// Largest box [`green_dense`] will invert.
pub const DENSE_CAP: usize = 2000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GreenError {
    #[error("invalid interval [{x1}, {x2}]")]
    InvalidInterval { x1: i64, x2: i64 },
    #[error("site {y} is outside [{x1}, {x2}]")]
    OutOfInterval { y: i64, x1: i64, x2: i64 },
    #[error("box [{x1}, {x2}] is singular at this energy")]
    Singular { x1: i64, x2: i64 },
    #[error("box of {0} sites exceeds the dense cap")]
    TooLarge(usize),
    #[error("no admissible candidate interval")]
    EmptyCandidates,
    #[error("interval factory failed at site {site}: {reason}")]
    Factory { site: i64, reason: String },
    #[error(transparent)]
    Det(#[from] DetError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IntervalZ {
    pub x1: i64,
    pub x2: i64,
}

impl IntervalZ {
    pub fn new(x1: i64, x2: i64) -> Result<Self, GreenError> {
        if x1 > x2 {
            return Err(GreenError::InvalidInterval { x1, x2 });
        }
        Ok(IntervalZ { x1, x2 })
    }

    /// The box of length `k` starting at `x1`.
    pub fn with_len(x1: i64, k: usize) -> Result<Self, GreenError> {
        if k == 0 {
            return Err(GreenError::InvalidInterval { x1, x2: x1 - 1 });
        }
        Self::new(x1, x1 + k as i64 - 1)
    }

    pub fn len(&self) -> usize {
        (self.x2 - self.x1 + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, y: i64) -> bool {
        self.x1 <= y && y <= self.x2
    }

    fn check(&self, y: i64) -> Result<(), GreenError> {
        if self.contains(y) {
            Ok(())
        } else {
            Err(GreenError::OutOfInterval {
                y,
                x1: self.x1,
                x2: self.x2,
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Endpoint {
    Left,
    Right,
}

/// A Cramer-rule entry together with the denominator's cancellation flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CramerEntry {
    pub value: LogScalar,
    pub flagged: bool,
}

fn parity_sign(n: i64) -> i8 {
    if n.rem_euclid(2) == 0 {
        1
    } else {
        -1
    }
}

/// Signed `G_I(x₁, y)` (left) or `G_I(y, x₂)` (right) by Cramer's rule.
pub fn green_entry_cramer(
    params: &OperatorParams,
    interval: IntervalZ,
    y: i64,
    endpoint: Endpoint,
) -> Result<CramerEntry, GreenError> {
    interval.check(y)?;
    let IntervalZ { x1, x2 } = interval;
    let den = tridiag_det((0..interval.len() as i64).map(|j| params.diag(0.0, x1 + j)));
    if den.value.is_zero() {
        return Err(GreenError::Singular { x1, x2 });
    }
    let (num, sign) = match endpoint {
        Endpoint::Left => (pk_shift(params, (x2 - y) as usize, y + 1), parity_sign(y - x1)),
        Endpoint::Right => (pk_shift(params, (y - x1) as usize, x1), parity_sign(x2 - y)),
    };
    Ok(CramerEntry {
        value: LogScalar::from_parts(sign, 0.0) * num / den.value,
        flagged: den.cancellation,
    })
}

/// `(G_I(y, x₁), G_I(y, x₂))`, signed.
pub fn green_endpoints(
    params: &OperatorParams,
    interval: IntervalZ,
    y: i64,
) -> Result<(LogScalar, LogScalar), GreenError> {
    let l = green_entry_cramer(params, interval, y, Endpoint::Left)?;
    let r = green_entry_cramer(params, interval, y, Endpoint::Right)?;
    Ok((l.value, r.value))
}

/// Dense inverse of a box restriction with entries as [`LogScalar`].
#[derive(Debug, Clone)]
pub struct DenseGreen {
    interval: IntervalZ,
    entries: Vec<LogScalar>,
}

impl DenseGreen {
    pub fn interval(&self) -> IntervalZ {
        self.interval
    }

    /// `G_I(i, j)` for sites `i, j ∈ I`.
    pub fn get(&self, i: i64, j: i64) -> LogScalar {
        let k = self.interval.len();
        let (a, b) = ((i - self.interval.x1) as usize, (j - self.interval.x1) as usize);
        assert!(a < k && b < k, "site outside box");
        self.entries[a * k + b]
    }
}

/// Restriction of `H − E` to `I` as a dense matrix.
pub fn box_matrix(params: &OperatorParams, interval: IntervalZ) -> DMatrix<f64> {
    let k = interval.len();
    DMatrix::from_fn(k, k, |i, j| {
        if i == j {
            params.diag(0.0, interval.x1 + i as i64)
        } else if i.abs_diff(j) == 1 {
            1.0
        } else {
            0.0
        }
    })
}

/// Full inverse by LU with one step of iterative refinement.
pub fn green_dense(params: &OperatorParams, interval: IntervalZ) -> Result<DenseGreen, GreenError> {
    let k = interval.len();
    if k > DENSE_CAP {
        return Err(GreenError::TooLarge(k));
    }
    let singular = GreenError::Singular {
        x1: interval.x1,
        x2: interval.x2,
    };
    let a = box_matrix(params, interval);
    let x = a.clone().lu().try_inverse().ok_or_else(|| singular.clone())?;
    let residual = DMatrix::<f64>::identity(k, k) - &a * &x;
    let refined = &x + &x * residual;
    let scale = a.amax() * refined.amax();
    if !scale.is_finite() || scale > 1.0 / (f64::EPSILON * 16.0) {
        return Err(singular);
    }
    let mut entries = Vec::with_capacity(k * k);
    for i in 0..k {
        for j in 0..k {
            entries.push(LogScalar::from_f64(refined[(i, j)]));
        }
    }
    Ok(DenseGreen { interval, entries })
}

/// Determinants of every sub-box of a fixed site range, so that any
/// Green's entry of any sub-box costs O(1).
#[derive(Debug, Clone)]
pub struct IntervalDetTable {
    start: i64,
    n: usize,
    // row a holds det[a, a], det[a, a+1], ..., det[a, n-1]
    rows: Vec<Vec<(LogScalar, bool)>>,
}

impl IntervalDetTable {
    /// Table over `[start, start + diag.len() − 1]` for the given diagonal.
    pub fn new(start: i64, diag: &[f64]) -> Self {
        let n = diag.len();
        let rows = (0..n)
            .map(|a| {
                let mut row = Vec::with_capacity(n - a);
                let (mut p, mut q) = (1.0_f64, 0.0_f64);
                let mut log_scale = 0.0;
                for &d in &diag[a..] {
                    let next = d * p - q;
                    q = p;
                    p = next;
                    let m = p.abs().max(q.abs());
                    if m > 0.0 {
                        p /= m;
                        q /= m;
                        log_scale += m.ln();
                    }
                    row.push((
                        LogScalar::from_f64(p).scale_exp(log_scale),
                        p.abs() < CANCELLATION_FLOOR,
                    ));
                }
                row
            })
            .collect();
        IntervalDetTable { start, n, rows }
    }

    pub fn from_params(params: &OperatorParams, start: i64, end: i64) -> Self {
        let diag: Vec<f64> = (start..=end).map(|m| params.diag(0.0, m)).collect();
        Self::new(start, &diag)
    }

    pub fn range(&self) -> IntervalZ {
        IntervalZ {
            x1: self.start,
            x2: self.start + self.n as i64 - 1,
        }
    }

    /// `det[a, b]`, `1` when `b < a`.
    pub fn det(&self, a: i64, b: i64) -> LogScalar {
        self.det_flagged(a, b).0
    }

    pub fn det_flagged(&self, a: i64, b: i64) -> (LogScalar, bool) {
        if b < a {
            return (LogScalar::ONE, false);
        }
        let i = (a - self.start) as usize;
        let j = (b - a) as usize;
        self.rows[i][j]
    }

    /// Signed `G_I(i, j)`; `None` when the box determinant vanishes.
    pub fn green(&self, interval: IntervalZ, i: i64, j: i64) -> Option<LogScalar> {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        let den = self.det(interval.x1, interval.x2);
        if den.is_zero() {
            return None;
        }
        let num = self.det(interval.x1, i - 1) * self.det(j + 1, interval.x2);
        Some(LogScalar::from_parts(parity_sign(j - i), 0.0) * num / den)
    }
}

/// `−G_I(y, x₁) φ(x₁−1) − G_I(y, x₂) φ(x₂+1)`.
pub fn resolvent_step(
    params: &OperatorParams,
    interval: IntervalZ,
    y: i64,
    phi_left: f64,
    phi_right: f64,
) -> Result<f64, GreenError> {
    let (gl, gr) = green_endpoints(params, interval, y)?;
    Ok(-(gl.to_f64() * phi_left) - gr.to_f64() * phi_right)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegularityVerdict {
    pub y: i64,
    pub t: f64,
    pub k: usize,
    pub regular: bool,
    pub witness: Option<IntervalZ>,
    /// `ln|G_I(y, x_i)| + t|y − x_i|` for the witness, or for the candidate
    /// closest to succeeding.
    pub margins: (f64, f64),
    pub candidates: usize,
    /// `min |y − x_i|` of the reported interval, for comparison with `k/7`.
    pub endpoint_distance: Option<i64>,
}

/// The default family `[y − j, y − j + k − 1]` with both `|y − x_i| ≥ k/7`,
/// by ascending `x₁`.
pub fn default_candidates(y: i64, k: usize) -> Vec<IntervalZ> {
    let k_i = k as i64;
    (0..k_i)
        .rev()
        .filter(|&j| 7 * j >= k_i && 7 * (k_i - 1 - j) >= k_i)
        .map(|j| IntervalZ {
            x1: y - j,
            x2: y - j + k_i - 1,
        })
        .collect()
}

fn admissible(c: &IntervalZ, y: i64, k: usize) -> bool {
    let k_i = k as i64;
    c.len() == k && c.contains(y) && 7 * (y - c.x1) >= k_i && 7 * (c.x2 - y) >= k_i
}

/// Searches for a `(t, k)`-regularity witness of `y`. Candidates that do
/// not have length `k`, miss `y`, or violate the `k/7` geometry are
/// dropped; a singular candidate simply fails.
pub fn classify_regularity(
    params: &OperatorParams,
    y: i64,
    t: f64,
    k: usize,
    search: Option<&[IntervalZ]>,
) -> Result<RegularityVerdict, GreenError> {
    let owned;
    let search = match search {
        Some(s) => s,
        None => {
            owned = default_candidates(y, k);
            &owned
        }
    };
    let mut candidates: Vec<IntervalZ> = search
        .iter()
        .copied()
        .filter(|c| admissible(c, y, k))
        .collect();
    if candidates.is_empty() {
        return Err(GreenError::EmptyCandidates);
    }
    candidates.sort_by_key(|c| c.x1);
    candidates.dedup();

    let lo = candidates.first().unwrap().x1;
    let hi = candidates.iter().map(|c| c.x2).max().unwrap();
    let table = IntervalDetTable::from_params(params, lo, hi);

    let mut best: Option<(f64, IntervalZ, (f64, f64))> = None;
    for c in &candidates {
        let Some(gl) = table.green(*c, y, c.x1) else {
            continue;
        };
        let gr = table.green(*c, y, c.x2).expect("nonsingular");
        let margins = (
            gl.log_mag() + t * (y - c.x1) as f64,
            gr.log_mag() + t * (c.x2 - y) as f64,
        );
        if margins.0 < 0.0 && margins.1 < 0.0 {
            return Ok(RegularityVerdict {
                y,
                t,
                k,
                regular: true,
                witness: Some(*c),
                margins,
                candidates: candidates.len(),
                endpoint_distance: Some((y - c.x1).min(c.x2 - y)),
            });
        }
        let worst = margins.0.max(margins.1);
        if best.as_ref().is_none_or(|b| worst < b.0) {
            best = Some((worst, *c, margins));
        }
    }
    let (margins, distance) = match best {
        Some((_, c, m)) => (m, Some((y - c.x1).min(c.x2 - y))),
        None => ((f64::INFINITY, f64::INFINITY), None),
    };
    Ok(RegularityVerdict {
        y,
        t,
        k,
        regular: false,
        witness: None,
        margins,
        candidates: candidates.len(),
        endpoint_distance: distance,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpansionResult {
    pub value: f64,
    pub terms: usize,
    /// Largest `ln|∏ G|` over terminated chains.
    pub max_chain_decay: f64,
}

/// Default depth cap `⌊2k / q_{n−1}⌋`.
pub fn default_depth_cap(k: i64, q_prev: i64) -> usize {
    (2 * k / q_prev.max(1)).max(1) as usize
}

/// Iterates the one-step resolvent identity from `target` along chains of
/// boxes `factory(y)`. A chain stops when its site leaves
/// `[b + 2, 2·target − 2]` or it reaches `depth_cap`; the root is always
/// expanded. Each terminated chain contributes `∏(−G) · φ(site)`.
pub fn block_expansion<P, F>(
    params: &OperatorParams,
    target: i64,
    phi: P,
    factory: F,
    stop_scale: f64,
    depth_cap: usize,
) -> Result<ExpansionResult, GreenError>
where
    P: Fn(i64) -> f64,
    F: Fn(i64) -> Result<IntervalZ, String>,
{
    let lo = (stop_scale + 2.0).ceil() as i64;
    let hi = 2 * target - 2;
    let mut acc = ExpansionResult {
        value: 0.0,
        terms: 0,
        max_chain_decay: f64::NEG_INFINITY,
    };
    expand(
        params, target, 0, LogScalar::ONE, (lo, hi), depth_cap.max(1), &phi, &factory, &mut acc,
    )?;
    Ok(acc)
}

#[allow(clippy::too_many_arguments)]
fn expand<P, F>(
    params: &OperatorParams,
    site: i64,
    depth: usize,
    weight: LogScalar,
    domain: (i64, i64),
    cap: usize,
    phi: &P,
    factory: &F,
    acc: &mut ExpansionResult,
) -> Result<(), GreenError>
where
    P: Fn(i64) -> f64,
    F: Fn(i64) -> Result<IntervalZ, String>,
{
    let outside = site < domain.0 || site > domain.1;
    if depth > 0 && (outside || depth >= cap) {
        acc.value += weight.to_f64() * phi(site);
        acc.terms += 1;
        acc.max_chain_decay = acc.max_chain_decay.max(weight.log_mag());
        return Ok(());
    }
    let b = factory(site).map_err(|reason| GreenError::Factory { site, reason })?;
    if !b.contains(site) || 7 * (site - b.x1).min(b.x2 - site) <= b.len() as i64 {
        return Err(GreenError::Factory {
            site,
            reason: format!("box [{}, {}] too close to the site", b.x1, b.x2),
        });
    }
    let (gl, gr) = green_endpoints(params, b, site)?;
    expand(params, b.x1 - 1, depth + 1, weight * -gl, domain, cap, phi, factory, acc)?;
    expand(params, b.x2 + 1, depth + 1, weight * -gr, domain, cap, phi, factory, acc)
}
