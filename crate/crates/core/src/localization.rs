//! Truncated eigenproblems on `[−N, N]` with Dirichlet ends, decay fits of
//! the eigenvectors, and the localization verdict.
//!
//! Decay rates are read off a log-amplitude profile built from the ratio
//! recursions of the eigen-equation, run inward from each boundary at the
//! computed eigenvalue. Those ratios are stable in the direction the
//! eigenvector grows, so the profile stays accurate hundreds of decades
//! below the double-precision floor the vector itself is stuck at.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cf::{beta_estimate, BetaWindow, CfError};
use crate::determinant::{DetError, OperatorParams};
use crate::greens::IntervalZ;
use crate::tridiag;

pub const MAX_HALF_WIDTH: i64 = 10_000;
pub const NOISE_FLOOR: f64 = 1e-14;
pub const MIN_VECTOR_LEN: usize = 200;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LocError {
    #[error("half-width {0} outside 1..={MAX_HALF_WIDTH}")]
    HalfWidth(i64),
    #[error("vector of length {0} is too short for a decay fit (need {MIN_VECTOR_LEN})")]
    ShortVector(usize),
    #[error("fit window empty after noise-floor exclusion")]
    EmptyWindow,
    #[error("site {site} is within q_n/100 of a multiple of q_n = {q_n} (distance {distance})")]
    DistanceHypothesis { site: i64, q_n: i64, distance: i64 },
    #[error("site {site} outside [-2q_n, 2q_n] or outside the lattice")]
    SiteOutOfRange { site: i64 },
    #[error("no qualifying modes: {0}")]
    NoQualifyingModes(String),
    #[error(transparent)]
    Det(#[from] DetError),
    #[error(transparent)]
    Cf(#[from] CfError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Boundary {
    #[default]
    Dirichlet,
}

/// Distances from the center fitted, as fractions of the half-width `N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowPolicy {
    pub lo: f64,
    pub hi: f64,
    pub noise_floor: f64,
    pub min_r2: f64,
    pub min_points: usize,
}

impl Default for WindowPolicy {
    fn default() -> Self {
        WindowPolicy { lo: 0.2, hi: 0.8, noise_floor: NOISE_FLOOR, min_r2: 0.9, min_points: 50 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SideFit {
    pub side: Side,
    pub rate: f64,
    pub r2: f64,
    pub points: usize,
    /// Farthest distance used.
    pub reach: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayFit {
    pub rate: f64,
    pub r2: f64,
    /// Sites spanned by the sides that entered the average.
    pub window: IntervalZ,
    pub points: usize,
    pub sides: Vec<SideFit>,
}

impl DecayFit {
    pub fn qualifies(&self, policy: &WindowPolicy) -> bool {
        self.r2 >= policy.min_r2 && self.points >= policy.min_points
    }
}

/// Slope and r² of `y ≈ a − c·x`.
fn line_fit(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let ss_res: f64 = pts.iter().map(|p| (p.1 - my - slope * (p.0 - mx)).powi(2)).sum();
    let r2 = if syy <= f64::EPSILON * f64::EPSILON * n * (1.0 + my * my) { 1.0 } else { 1.0 - ss_res / syy };
    (-slope, r2)
}

/// Fit over a log-amplitude profile indexed like the lattice (index 0 is
/// site `−N`). Entries below `floor` are skipped.
pub fn decay_fit_log(log_amp: &[f64], center_index: usize, policy: &WindowPolicy, floor: Option<f64>) -> Result<DecayFit, LocError> {
    let len = log_amp.len();
    let half = ((len.saturating_sub(1)) / 2) as f64;
    let d_lo = (policy.lo * half).ceil().max(1.0) as usize;
    let d_hi = (policy.hi * half).floor() as usize;
    let first_site = -(half as i64);
    let mut sides = Vec::new();
    for side in [Side::Left, Side::Right] {
        let mut pts = Vec::new();
        let mut reach = 0i64;
        for d in d_lo..=d_hi {
            let idx = match side {
                Side::Left => center_index.checked_sub(d),
                Side::Right => Some(center_index + d).filter(|&i| i < len),
            };
            let Some(idx) = idx else { break };
            let y = log_amp[idx];
            if !y.is_finite() || floor.is_some_and(|f| y < f) {
                continue;
            }
            pts.push((d as f64, y));
            reach = d as i64;
        }
        if pts.len() >= 2 {
            let (rate, r2) = line_fit(&pts);
            sides.push(SideFit { side, rate, r2, points: pts.len(), reach });
        }
    }
    if sides.is_empty() {
        return Err(LocError::EmptyWindow);
    }
    let good: Vec<&SideFit> = sides.iter().filter(|s| s.r2 >= policy.min_r2).collect();
    let used: Vec<&SideFit> = if good.is_empty() { sides.iter().collect() } else { good };
    let k = used.len() as f64;
    let rate = used.iter().map(|s| s.rate).sum::<f64>() / k;
    let r2 = if used.len() == sides.len() && used.iter().any(|s| s.r2 < policy.min_r2) {
        used.iter().map(|s| s.r2).fold(f64::INFINITY, f64::min)
    } else {
        used.iter().map(|s| s.r2).sum::<f64>() / k
    };
    let c = first_site + center_index as i64;
    let left = used.iter().find(|s| s.side == Side::Left).map_or(c, |s| c - s.reach);
    let right = used.iter().find(|s| s.side == Side::Right).map_or(c, |s| c + s.reach);
    Ok(DecayFit {
        rate,
        r2,
        window: IntervalZ { x1: left, x2: right },
        points: used.iter().map(|s| s.points).sum(),
        sides,
    })
}

/// Fit of `ln|φ|` for a unit vector over sites `[−N, N]`.
pub fn decay_fit(vector: &[f64], center_index: usize, policy: &WindowPolicy) -> Result<DecayFit, LocError> {
    if vector.len() < MIN_VECTOR_LEN {
        return Err(LocError::ShortVector(vector.len()));
    }
    let logs: Vec<f64> = vector.iter().map(|v| v.abs().ln()).collect();
    decay_fit_log(&logs, center_index, policy, Some(policy.noise_floor.ln()))
}

/// Diagonal `2λ cos 2π(θ + nα)` on `[−N, N]`, unit off-diagonal.
#[derive(Debug, Clone)]
pub struct Truncation {
    half_width: i64,
    diag: Vec<f64>,
    off: Vec<f64>,
}

impl Truncation {
    pub fn new(params: &OperatorParams, half_width: i64) -> Result<Self, LocError> {
        if !(1..=MAX_HALF_WIDTH).contains(&half_width) {
            return Err(LocError::HalfWidth(half_width));
        }
        let p = params.with_energy(0.0)?;
        let diag = (-half_width..=half_width).map(|j| p.diag(0.0, j)).collect();
        Ok(Self::from_diagonal(diag))
    }

    /// Any diagonal of odd length `2N+1`.
    pub fn from_diagonal(diag: Vec<f64>) -> Self {
        assert!(diag.len() % 2 == 1, "diagonal length must be odd");
        let off = vec![1.0; diag.len() - 1];
        Truncation { half_width: (diag.len() / 2) as i64, diag, off }
    }

    pub fn half_width(&self) -> i64 {
        self.half_width
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diag
    }

    pub fn site(&self, index: usize) -> i64 {
        index as i64 - self.half_width
    }

    pub fn index(&self, site: i64) -> Option<usize> {
        let i = site + self.half_width;
        (0..self.len() as i64).contains(&i).then_some(i as usize)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        tridiag::eigenvalues(&self.diag, &self.off)
    }

    /// `ln|φ(k)/φ(center)|` for the solution at `energy` obeying the left
    /// boundary condition left of the center and the right one to its right.
    pub fn log_profile(&self, energy: f64, center_index: usize) -> Vec<f64> {
        let n = self.len();
        let tiny = f64::MIN_POSITIVE.sqrt();
        let guard = |x: f64| if x.abs() < tiny { tiny.copysign(x) } else { x };
        let mut out = vec![0.0; n];
        // r_k = φ(k)/φ(k−1)
        let mut r_next = 0.0;
        let mut log_r = vec![0.0; n];
        for k in (center_index + 1..n).rev() {
            let r = -1.0 / guard(self.diag[k] - energy + r_next);
            log_r[k] = r.abs().ln();
            r_next = r;
        }
        let mut acc = 0.0;
        for k in center_index + 1..n {
            acc += log_r[k];
            out[k] = acc;
        }
        // l_k = φ(k)/φ(k+1)
        let mut l_prev = 0.0;
        for k in 0..center_index {
            let l = -1.0 / guard(self.diag[k] - energy + l_prev);
            log_r[k] = l.abs().ln();
            l_prev = l;
        }
        acc = 0.0;
        for k in (0..center_index).rev() {
            acc += log_r[k];
            out[k] = acc;
        }
        out
    }

    fn summarize(&self, index: usize, energy: f64, vector: &[f64], policy: &WindowPolicy) -> ModeSummary {
        let center_index = vector
            .iter()
            .enumerate()
            .fold((0, -1.0), |best, (i, v)| if v.abs() > best.1 { (i, v.abs()) } else { best })
            .0;
        let fit = if self.len() >= MIN_VECTOR_LEN {
            decay_fit_log(&self.log_profile(energy, center_index), center_index, policy, None).ok()
        } else {
            None
        };
        let qualified = fit.as_ref().is_some_and(|f| f.qualifies(policy));
        ModeSummary {
            index,
            energy,
            center: self.site(center_index),
            decay_rate: fit.as_ref().filter(|_| qualified).map(|f| f.rate),
            raw_rate: fit.as_ref().map(|f| f.rate),
            fit_r2: fit.as_ref().map(|f| f.r2),
            fit_window: fit.as_ref().map(|f| f.window),
            fit_points: fit.as_ref().map_or(0, |f| f.points),
        }
    }

    /// Streams `(summary, vector)` over the spectrum in energy order.
    pub fn for_each_mode<F: FnMut(ModeSummary, &[f64])>(&self, policy: &WindowPolicy, mut sink: F) {
        let evals = self.eigenvalues();
        tridiag::for_each_eigenvector(&self.diag, &self.off, &evals, |j, v| {
            sink(self.summarize(j, evals[j], v, policy), v);
        });
    }

    pub fn summaries(&self, policy: &WindowPolicy) -> Vec<ModeSummary> {
        let mut out = Vec::with_capacity(self.len());
        self.for_each_mode(policy, |s, _| out.push(s));
        out
    }

    pub fn modes(&self, policy: &WindowPolicy) -> Vec<EigenMode> {
        let mut out = Vec::with_capacity(self.len());
        self.for_each_mode(policy, |summary, v| {
            out.push(EigenMode { summary, first_site: -self.half_width, vector: v.to_vec() })
        });
        out
    }
}

/// Everything about a mode except its vector.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeSummary {
    pub index: usize,
    pub energy: f64,
    pub center: i64,
    /// Present only when the fit qualifies (r² and window length).
    pub decay_rate: Option<f64>,
    pub raw_rate: Option<f64>,
    pub fit_r2: Option<f64>,
    pub fit_window: Option<IntervalZ>,
    pub fit_points: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenMode {
    pub summary: ModeSummary,
    pub first_site: i64,
    /// Unit norm, index 0 is site `first_site`.
    pub vector: Vec<f64>,
}

impl EigenMode {
    pub fn energy(&self) -> f64 {
        self.summary.energy
    }

    pub fn center(&self) -> i64 {
        self.summary.center
    }

    pub fn decay_rate(&self) -> Option<f64> {
        self.summary.decay_rate
    }

    pub fn amplitude(&self, site: i64) -> Option<f64> {
        let i = site - self.first_site;
        (0..self.vector.len() as i64).contains(&i).then(|| self.vector[i as usize])
    }
}

/// All `2N+1` eigenpairs of the truncation, sorted by energy.
pub fn diagonalize(params: &OperatorParams, half_width: i64, boundary: Boundary, policy: &WindowPolicy) -> Result<Vec<EigenMode>, LocError> {
    let Boundary::Dirichlet = boundary;
    Ok(Truncation::new(params, half_width)?.modes(policy))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbeResult {
    pub site: i64,
    pub distance: i64,
    /// `ln|φ(y)/φ(center)|`.
    pub log_ratio: f64,
    /// `−(ln λ − ε)·d`.
    pub log_bound: f64,
    pub margin: f64,
    pub bound_ok: bool,
}

/// `dist(y, {j·q : j ≥ 0})`.
pub fn distance_to_multiples(y: i64, q: i64) -> i64 {
    if y <= 0 {
        return -y;
    }
    let r = y % q;
    r.min(q - r)
}

/// Checks `|φ(y)| < e^{−(ln λ − ε)d}` with `φ` rescaled to `|φ(center)| = 1`.
/// Sites are absolute lattice sites; `d` is measured from the multiples of
/// `q_n` counted from site 0.
pub fn extended_state_probe(params: &OperatorParams, mode: &EigenMode, q_n: i64, sites: &[i64], eps: f64) -> Result<Vec<ProbeResult>, LocError> {
    let half = -mode.first_site;
    let trunc = Truncation::new(params, half)?;
    let center_index = trunc.index(mode.center()).expect("center on lattice");
    let profile = trunc.log_profile(mode.energy(), center_index);
    let rate = params.lambda().ln() - eps;
    sites
        .iter()
        .map(|&site| {
            let Some(idx) = trunc.index(site).filter(|_| site.abs() <= 2 * q_n) else {
                return Err(LocError::SiteOutOfRange { site });
            };
            let distance = distance_to_multiples(site, q_n);
            if 100 * distance <= q_n {
                return Err(LocError::DistanceHypothesis { site, q_n, distance });
            }
            let log_ratio = profile[idx];
            let log_bound = -rate * distance as f64;
            Ok(ProbeResult { site, distance, log_ratio, log_bound, margin: log_bound - log_ratio, bound_ok: log_ratio < log_bound })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModePolicy {
    /// Centers must lie in `[−fN, fN]`.
    pub center_fraction: f64,
    pub window: WindowPolicy,
    pub tolerance: f64,
    pub beta_window: BetaWindow,
}

impl Default for ModePolicy {
    fn default() -> Self {
        ModePolicy { center_fraction: 0.25, window: WindowPolicy::default(), tolerance: 0.3, beta_window: BetaWindow::LastHalf }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateSummary {
    pub count: usize,
    pub median: f64,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub q10: f64,
    pub q90: f64,
}

impl RateSummary {
    pub fn from_rates(rates: &[f64]) -> Option<Self> {
        if rates.is_empty() {
            return None;
        }
        let mut v = rates.to_vec();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = v.len();
        let quantile = |p: f64| v[((p * (n - 1) as f64).round() as usize).min(n - 1)];
        let median = if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) };
        Some(RateSummary {
            count: n,
            median,
            mean: v.iter().sum::<f64>() / n as f64,
            min: v[0],
            max: v[n - 1],
            q10: quantile(0.1),
            q90: quantile(0.9),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoremVerdict {
    pub lambda: f64,
    pub theta: f64,
    pub half_width: i64,
    pub beta_hat: f64,
    pub threshold_7beta: f64,
    pub threshold_2beta: f64,
    pub reference_lnlambda: f64,
    pub tolerance: f64,
    pub in_regime: bool,
    pub warning: Option<String>,
    pub total_modes: usize,
    pub measured_rates: RateSummary,
    /// Undefined outside the regime `λ > e^{7β̂}`.
    pub pass: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerdictRun {
    pub verdict: TheoremVerdict,
    pub selected: Vec<ModeSummary>,
    pub modes: Vec<ModeSummary>,
}

pub fn theorem_verdict(params: &OperatorParams, half_width: i64, policy: &ModePolicy) -> Result<VerdictRun, LocError> {
    let beta_hat = beta_estimate(params.freq(), policy.beta_window)?.tail_sup;
    let trunc = Truncation::new(params, half_width)?;
    let modes = trunc.summaries(&policy.window);
    let limit = (policy.center_fraction * half_width as f64).floor() as i64;
    let selected: Vec<ModeSummary> = modes
        .iter()
        .filter(|m| m.center.abs() <= limit && m.decay_rate.is_some())
        .cloned()
        .collect();
    let rates: Vec<f64> = selected.iter().filter_map(|m| m.decay_rate).collect();
    let Some(measured_rates) = RateSummary::from_rates(&rates) else {
        let centered = modes.iter().filter(|m| m.center.abs() <= limit).count();
        let fitted = modes.iter().filter(|m| m.decay_rate.is_some()).count();
        return Err(LocError::NoQualifyingModes(format!(
            "{} modes, {centered} centered in [-{limit}, {limit}], {fitted} with a qualifying fit",
            modes.len()
        )));
    };
    let ln_l = params.lambda().ln();
    let threshold_7beta = ln_l - 7.0 * beta_hat;
    let in_regime = threshold_7beta > 0.0;
    let warning = (!in_regime).then(|| format!("lambda = {} <= exp(7 beta_hat) = {}: outside the localization regime", params.lambda(), (7.0 * beta_hat).exp()));
    let pass = in_regime.then(|| measured_rates.median >= threshold_7beta - policy.tolerance);
    Ok(VerdictRun {
        verdict: TheoremVerdict {
            lambda: params.lambda(),
            theta: params.theta(),
            half_width,
            beta_hat,
            threshold_7beta,
            threshold_2beta: ln_l - 2.0 * beta_hat,
            reference_lnlambda: ln_l,
            tolerance: policy.tolerance,
            in_regime,
            warning,
            total_modes: modes.len(),
            measured_rates,
            pass,
        },
        selected,
        modes,
    })
}
