//! Resonant and non-resonant sites, the interval sets `I₁ ∪ I₂` built at
//! each, and the measurements made on the phases `θ + jα` over them.
//!
//! A site `y` at scale `n` (`b_n ≤ y < b_{n+1}`, `b_n = q_n^{8/9}`) is
//! resonant when `|y − ℓq_n| ≤ b_n` for some `ℓ ≥ 1`. All scale
//! comparisons are done exactly as `|y − ℓq|^9` against `q^8`.

use std::cmp::Ordering;

use num_bigint::BigUint;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cf::{scale_of, CfError, FrequencyModel};
use crate::determinant::{in_a_kr, wrap_phase, DetError, DiagonalStrip, OperatorParams};
use crate::greens::IntervalZ;

/// Minimum spacing of two cosines before a phase set counts as coincident.
pub const COINCIDENCE_TOL: f64 = 1e-13;

/// Default Chebyshev nodes per phase in [`uniformity_margin`].
pub const DEFAULT_GRID_FACTOR: usize = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ResonanceError {
    #[error("site {y} lies below the first scale b_1 = {b1}")]
    BelowScale { y: i64, b1: f64 },
    #[error("model too shallow: no stored n with b_(n+1) > {y}")]
    TooShallow { y: i64 },
    #[error("site {y} sits exactly at b_{n} with no multiple of q_{n} within reach; neither branch applies")]
    Ambiguous { y: i64, n: usize },
    #[error("expected a {expected} report")]
    WrongBranch { expected: &'static str },
    #[error("degenerate construction: {0}")]
    Degenerate(String),
    #[error("construction check failed: {0}")]
    Construction(String),
    #[error("phases {i} and {j} have coincident cosines")]
    CoincidentPhases { i: usize, j: usize },
    #[error("empty phase set or grid")]
    Empty,
    #[error("p must be <= 0, got {0}")]
    PositiveP(i64),
    #[error(transparent)]
    Det(#[from] DetError),
    #[error(transparent)]
    Cf(#[from] CfError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResonanceReport {
    pub y: i64,
    pub n: usize,
    pub q_n: i64,
    pub q_prev: i64,
    pub b_n: f64,
    pub resonant: bool,
    /// Multiple with `|y − ℓq_n| ≤ b_n`, resonant branch only.
    pub ell: Option<i64>,
    /// Nearest multiple `m` with `y = m·q_n + y₀`, non-resonant branch only.
    pub m: Option<i64>,
    /// Signed offset, `b_n < |y₀| ≤ q_n/2`.
    pub y0: Option<i64>,
}

fn pow_big(x: u64, e: u32) -> BigUint {
    BigUint::from(x).pow(e)
}

/// `|d| ≤ q^{8/9}`, exactly.
fn within_scale(d: i64, q: i64) -> bool {
    pow_big(d.unsigned_abs(), 9) <= pow_big(q as u64, 8)
}

/// `q^{8/9} ≤ y`, exactly.
fn scale_at_most(q: i64, y: i64) -> bool {
    pow_big(q as u64, 8) <= pow_big(y as u64, 9)
}

pub fn classify_resonance(y: i64, model: &FrequencyModel) -> Result<ResonanceReport, ResonanceError> {
    let depth = model.depth();
    if depth < 1 {
        return Err(ResonanceError::TooShallow { y });
    }
    let q1 = model.q(1)?;
    if y < 1 || !scale_at_most(q1, y) {
        return Err(ResonanceError::BelowScale { y, b1: scale_of(q1) });
    }
    // largest n >= 1 with b_n <= y, and b_{n+1} > y must be stored
    let mut n = 1;
    while n < depth && scale_at_most(model.q(n + 1)?, y) {
        n += 1;
    }
    if n == depth {
        return Err(ResonanceError::TooShallow { y });
    }
    let q = model.q(n)?;
    let q_prev = model.q(n - 1)?;
    let b_n = scale_of(q);

    // nearest positive multiple
    let lo = (y / q).max(1);
    let ell = [lo, lo + 1]
        .into_iter()
        .filter(|&l| within_scale(y - l * q, q))
        .min_by_key(|&l| ((y - l * q).abs(), l));
    if let Some(ell) = ell {
        return Ok(ResonanceReport {
            y,
            n,
            q_n: q,
            q_prev,
            b_n,
            resonant: true,
            ell: Some(ell),
            m: None,
            y0: None,
        });
    }
    let m = (2 * y + q - 1) / (2 * q); // ties resolve to the lower multiple
    let y0 = y - m * q;
    if within_scale(y0, q) {
        // only possible with m = 0 and y = b_n exactly
        return Err(ResonanceError::Ambiguous { y, n });
    }
    Ok(ResonanceReport {
        y,
        n,
        q_n: q,
        q_prev,
        b_n,
        resonant: false,
        ell: None,
        m: Some(m),
        y0: Some(y0),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SetKind {
    /// `|I₁ ∪ I₂| = 6sq_{n−1}` around a non-resonant site.
    Nonresonant,
    /// `|I₁ ∪ I₂| = 10sq_{n−1}` around a resonant multiple `ℓq_n`.
    Resonant,
}

/// Two disjoint site intervals and the phases `θ + jα` over them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseSet {
    pub kind: SetKind,
    pub n: usize,
    pub s: i64,
    pub p: i64,
    pub q_prev: i64,
    pub q_n: i64,
    pub i1: IntervalZ,
    pub i2: IntervalZ,
    pub theta: f64,
}

impl PhaseSet {
    pub fn len(&self) -> usize {
        self.i1.len() + self.i2.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Window length `k` of the matching `A_{k,r}`: one less than the set size.
    pub fn window_k(&self) -> usize {
        self.len() - 1
    }

    /// Sites of `I₁` then `I₂`, ascending.
    pub fn indices(&self) -> Vec<i64> {
        (self.i1.x1..=self.i1.x2).chain(self.i2.x1..=self.i2.x2).collect()
    }

    pub fn thetas(&self, model: &FrequencyModel) -> Vec<f64> {
        self.indices()
            .into_iter()
            .map(|j| wrap_phase(self.theta + model.frac_mul(j)))
            .collect()
    }

    pub fn with_theta(&self, theta: f64) -> Self {
        PhaseSet {
            theta: wrap_phase(theta),
            ..self.clone()
        }
    }
}

/// Non-resonant sets from raw parts: site `y`, offset `|y₀|` from the
/// nearest multiple of `q_n`, and `p ≤ 0`.
pub fn nonresonant_sets_from_parts(
    n: usize,
    q_prev: i64,
    q_n: i64,
    y: i64,
    y0_abs: i64,
    p: i64,
    theta: f64,
) -> Result<PhaseSet, ResonanceError> {
    if p > 0 {
        return Err(ResonanceError::PositiveP(p));
    }
    // largest s with 4 s q_{n-1} - p + 1 <= y0
    let room = y0_abs - 1 + p;
    let s = if room < 0 { 0 } else { room / (4 * q_prev) };
    if s == 0 {
        return Err(ResonanceError::Degenerate(format!(
            "4·q_(n-1) - p + 1 = {} > y0 = {y0_abs}",
            4 * q_prev - p + 1
        )));
    }
    if 8 * s * q_prev >= q_n {
        return Err(ResonanceError::Construction(format!(
            "8·s·q_(n-1) = {} is not below q_n = {q_n}",
            8 * s * q_prev
        )));
    }
    let w = 2 * s * q_prev;
    Ok(PhaseSet {
        kind: SetKind::Nonresonant,
        n,
        s,
        p,
        q_prev,
        q_n,
        i1: IntervalZ { x1: -w, x2: -1 },
        i2: IntervalZ { x1: y - w, x2: y + w - 1 },
        theta: wrap_phase(theta),
    })
}

pub fn build_nonresonant_sets(
    report: &ResonanceReport,
    p: i64,
    theta: f64,
) -> Result<PhaseSet, ResonanceError> {
    let (false, Some(y0)) = (report.resonant, report.y0) else {
        return Err(ResonanceError::WrongBranch {
            expected: "non-resonant",
        });
    };
    nonresonant_sets_from_parts(report.n, report.q_prev, report.q_n, report.y, y0.abs(), p, theta)
}

/// Resonant sets from raw parts around the multiple `ℓq_n`.
pub fn resonant_sets_from_parts(
    n: usize,
    q_prev: i64,
    q_n: i64,
    ell: i64,
    p: i64,
    theta: f64,
) -> Result<PhaseSet, ResonanceError> {
    if p > 0 {
        return Err(ResonanceError::PositiveP(p));
    }
    let room = q_n + p - 1;
    let s = if room < 0 { 0 } else { room / (7 * q_prev) };
    if s == 0 {
        return Err(ResonanceError::Degenerate(format!(
            "7·q_(n-1) = {} > q_n + p - 1 = {room}",
            7 * q_prev
        )));
    }
    let w = 3 * s * q_prev;
    Ok(PhaseSet {
        kind: SetKind::Resonant,
        n,
        s,
        p,
        q_prev,
        q_n,
        i1: IntervalZ {
            x1: -4 * s * q_prev,
            x2: -1,
        },
        i2: IntervalZ {
            x1: ell * q_n - w,
            x2: ell * q_n + w - 1,
        },
        theta: wrap_phase(theta),
    })
}

pub fn build_resonant_sets(
    report: &ResonanceReport,
    p: i64,
    theta: f64,
) -> Result<PhaseSet, ResonanceError> {
    let (true, Some(ell)) = (report.resonant, report.ell) else {
        return Err(ResonanceError::WrongBranch { expected: "resonant" });
    };
    resonant_sets_from_parts(report.n, report.q_prev, report.q_n, ell, p, theta)
}

/// Reference margin `−2 ln(s/q_n)/q_{n−1} + ε` for non-resonant sets.
pub fn nonresonant_reference_margin(set: &PhaseSet, eps: f64) -> f64 {
    -2.0 * (set.s as f64 / set.q_n as f64).ln() / set.q_prev as f64 + eps
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniformityReport {
    pub epsilon_hat: f64,
    pub argmax_i: usize,
    pub argmax_x: f64,
    /// `k = |phases| − 1`.
    pub k: usize,
    pub grid_points: usize,
    pub refined: bool,
}

fn cosines(thetas: &[f64]) -> Result<Vec<f64>, ResonanceError> {
    if thetas.len() < 2 {
        return Err(ResonanceError::Empty);
    }
    let c: Vec<f64> = thetas
        .iter()
        .map(|&t| crate::determinant::cos_turns(t))
        .collect();
    let mut order: Vec<usize> = (0..c.len()).collect();
    order.sort_by(|&a, &b| c[a].partial_cmp(&c[b]).unwrap_or(Ordering::Equal));
    for w in order.windows(2) {
        if (c[w[1]] - c[w[0]]).abs() <= COINCIDENCE_TOL {
            let (i, j) = (w[0].min(w[1]), w[0].max(w[1]));
            return Err(ResonanceError::CoincidentPhases { i, j });
        }
    }
    Ok(c)
}

/// `D_i = Σ_{j≠i} ln|c_i − c_j|`.
fn denominators(c: &[f64]) -> Vec<f64> {
    (0..c.len())
        .into_par_iter()
        .map(|i| {
            c.iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &cj)| (c[i] - cj).abs().ln())
                .sum()
        })
        .collect()
}

/// `max_i Σ_{j≠i} [ln|x − c_j| − ln|c_i − c_j|]` and its maximiser `i`.
fn margin_at(x: f64, c: &[f64], den: &[f64]) -> (f64, usize) {
    if let Some(hit) = c.iter().position(|&cj| cj == x) {
        // x is a node: every term with i ≠ hit contains ln 0
        let v: f64 = c
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != hit)
            .map(|(_, &cj)| (x - cj).abs().ln())
            .sum::<f64>()
            - den[hit];
        return (v, hit);
    }
    let logs: Vec<f64> = c.iter().map(|&cj| (x - cj).abs().ln()).collect();
    let total: f64 = logs.iter().sum();
    let (mut best, mut arg) = (f64::NEG_INFINITY, 0);
    for i in 0..c.len() {
        let v = total - logs[i] - den[i];
        if v > best {
            best = v;
            arg = i;
        }
    }
    (best, arg)
}

/// Chebyshev nodes of the first kind on `[−1, 1]` plus both endpoints, ascending.
pub fn chebyshev_grid(points: usize) -> Vec<f64> {
    let mut g: Vec<f64> = (0..points)
        .map(|i| -((std::f64::consts::PI * (i as f64 + 0.5) / points as f64).cos()))
        .collect();
    g.insert(0, -1.0);
    g.push(1.0);
    g
}

/// The uniformity margin evaluated on an explicit grid, no refinement.
pub fn uniformity_margin_on_grid(thetas: &[f64], grid: &[f64]) -> Result<UniformityReport, ResonanceError> {
    if grid.is_empty() {
        return Err(ResonanceError::Empty);
    }
    let c = cosines(thetas)?;
    let den = denominators(&c);
    let k = c.len() - 1;
    let (v, i, x) = grid
        .par_iter()
        .map(|&x| {
            let (v, i) = margin_at(x, &c, &den);
            (v, i, x)
        })
        .reduce(
            || (f64::NEG_INFINITY, 0, f64::NAN),
            |a, b| if b.0 > a.0 || (b.0 == a.0 && b.2 < a.2) { b } else { a },
        );
    Ok(UniformityReport {
        epsilon_hat: v / k as f64,
        argmax_i: i,
        argmax_x: x,
        k,
        grid_points: grid.len(),
        refined: false,
    })
}

/// `ε̂ = (1/k) max_{x,i} Σ_{j≠i} ln(|x − cos2πθ_j| / |cos2πθ_i − cos2πθ_j|)`
/// on `grid_factor·|phases|` Chebyshev nodes plus the endpoints, followed
/// by a golden-section refinement in the grid cells next to the argmax
/// that contain no node `cos2πθ_j`.
pub fn uniformity_margin(thetas: &[f64], grid_factor: usize) -> Result<UniformityReport, ResonanceError> {
    let c = cosines(thetas)?;
    let grid = chebyshev_grid(grid_factor.max(1) * c.len());
    let mut report = uniformity_margin_on_grid(thetas, &grid)?;
    let den = denominators(&c);
    let k = report.k as f64;
    let pos = grid
        .iter()
        .position(|&g| g == report.argmax_x)
        .expect("argmax is a grid point");
    let mut sorted = c.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for (a, b) in [(pos.saturating_sub(1), pos), (pos, (pos + 1).min(grid.len() - 1))] {
        let (lo, hi) = (grid[a], grid[b]);
        if hi <= lo {
            continue;
        }
        let idx = sorted.partition_point(|&v| v <= lo);
        if idx < sorted.len() && sorted[idx] < hi {
            continue;
        }
        let (x, v, i) = golden_section_max(lo, hi, |x| margin_at(x, &c, &den));
        if v / k > report.epsilon_hat {
            report.epsilon_hat = v / k;
            report.argmax_x = x;
            report.argmax_i = i;
            report.refined = true;
        }
    }
    Ok(report)
}

fn golden_section_max<F: Fn(f64) -> (f64, usize)>(mut a: f64, mut b: f64, f: F) -> (f64, f64, usize) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..80 {
        if (b - a) <= 1e-15 * (1.0 + a.abs()) {
            break;
        }
        if f1.0 < f2.0 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = f(x1);
        }
    }
    if f1.0 >= f2.0 {
        (x1, f1.0, f1.1)
    } else {
        (x2, f2.0, f2.1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogSinSum {
    pub sum_excl_min: f64,
    pub c_hat: f64,
    pub l0: i64,
}

/// `Σ_{ℓ≠ℓ₀} ln|sin π(x + ℓα)| + (q_n − 1) ln 2` over `0 ≤ ℓ < q_n`, with
/// `ℓ₀` the minimising term.
pub fn log_sin_sum(x: f64, q_n: i64, model: &FrequencyModel) -> Result<LogSinSum, ResonanceError> {
    if !x.is_finite() {
        return Err(CfError::NonFinite.into());
    }
    if q_n < 1 {
        return Err(ResonanceError::Empty);
    }
    let terms: Vec<f64> = (0..q_n)
        .into_par_iter()
        .map(|l| {
            let t = wrap_phase(x + model.frac_mul(l));
            (std::f64::consts::PI * t.min(1.0 - t)).sin().ln()
        })
        .collect();
    let (l0, _) = terms
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap_or(Ordering::Equal))
        .expect("q_n >= 1");
    let sum: f64 = terms
        .iter()
        .enumerate()
        .filter(|&(l, _)| l != l0)
        .map(|(_, &v)| v)
        .sum::<f64>()
        + (q_n - 1) as f64 * std::f64::consts::LN_2;
    Ok(LogSinSum {
        sum_excl_min: sum,
        c_hat: sum.abs() / q_n as f64,
        l0: l0 as i64,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NonuniformSelection {
    pub j0: Option<i64>,
    pub found: bool,
}

/// Membership margins of every phase of the set in `A_{k,r}` with
/// `k = |set| − 1`. Entries are `(j, margin)` in ascending `j`.
pub fn membership_scan(
    set: &PhaseSet,
    params: &OperatorParams,
    rate_r: f64,
) -> Result<Vec<(i64, f64)>, ResonanceError> {
    if !(rate_r > 0.0) {
        return Err(DetError::NonPositiveRate(rate_r).into());
    }
    let k = set.window_k();
    let idx = set.indices();
    let base = params.with_theta(set.theta)?;
    if k >= 1 && (k - 1) % 2 == 0 {
        // Q_k(cos 2π(θ + jα)) = P_k(θ + (j − h)α) with h = (k−1)/2
        let h = ((k - 1) / 2) as i64;
        let lo = idx[0] - h;
        let hi = idx[idx.len() - 1] - h + k as i64 - 1;
        let strip = DiagonalStrip::new(&base, 0.0, lo, hi);
        let bound = (k as f64 + 1.0) * rate_r;
        Ok(idx
            .par_iter()
            .map(|&j| (j, bound - strip.pk_window(j - h, k).log_mag()))
            .collect())
    } else {
        idx.par_iter()
            .map(|&j| {
                let theta_j = base.phase_at(j);
                Ok((j, in_a_kr(&base, k, rate_r, theta_j)?.margin))
            })
            .collect()
    }
}

/// First phase of the set (ascending `j`) outside `A_{k,r}`.
pub fn select_nonuniform_theta(
    set: &PhaseSet,
    params: &OperatorParams,
    rate_r: f64,
) -> Result<NonuniformSelection, ResonanceError> {
    let scan = membership_scan(set, params, rate_r)?;
    let j0 = scan.iter().find(|(_, m)| *m < 0.0).map(|(j, _)| *j);
    Ok(NonuniformSelection {
        j0,
        found: j0.is_some(),
    })
}
