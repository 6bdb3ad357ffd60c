use std::path::{Path, PathBuf};
use std::sync::Arc;

use amo_core::cf::{beta_estimate, make_resonant_phase, BetaWindow, FrequencyModel, FrequencySpec, DEFAULT_Q_CAP};
use amo_core::determinant::OperatorParams;
use amo_core::greens::{classify_regularity, green_dense, green_entry_cramer, Endpoint, IntervalZ, DENSE_CAP};
use amo_core::localization::{theorem_verdict, ModeSummary, VerdictRun};
use amo_core::resonance::{
    classify_resonance, nonresonant_sets_from_parts, resonant_sets_from_parts, uniformity_margin, PhaseSet,
};
use clap::{Args, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{ExperimentConfig, Point};
use crate::error::{CliError, EXIT_REGIME};
use crate::json::{format_f64, to_value};

/// A command's JSON result and its exit code.
pub struct Outcome {
    pub result: Value,
    pub code: u8,
}

impl Outcome {
    fn ok(result: Value) -> Self {
        Outcome { result, code: 0 }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FreqArgs {
    /// Frequency spec: golden, silver, cf:[a1,a2,...], cf-rule:exp(beta=..,seed=[..])
    #[arg(long = "freq", default_value = "golden")]
    pub freq: String,
    /// Number of convergents to build (defaults to the spec's own depth)
    #[arg(long)]
    pub depth: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_Q_CAP)]
    pub q_cap: u64,
}

pub fn load_model(spec: &str, depth: Option<usize>, q_cap: u64) -> Result<Arc<FrequencyModel>, CliError> {
    let s: FrequencySpec = spec.parse()?;
    Ok(Arc::new(FrequencyModel::from_spec(&s, depth, q_cap)?))
}

impl FreqArgs {
    fn model(&self) -> Result<Arc<FrequencyModel>, CliError> {
        load_model(&self.freq, self.depth, self.q_cap)
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OperatorArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub theta: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub energy: f64,
}

impl OperatorArgs {
    fn params(&self, model: Arc<FrequencyModel>) -> Result<OperatorParams, CliError> {
        Ok(OperatorParams::normalized(self.lambda, model, self.theta, self.energy)?)
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CfArgs {
    /// Frequency spec
    pub spec: String,
    #[arg(long)]
    pub depth: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_Q_CAP)]
    pub q_cap: u64,
}

#[derive(Serialize)]
struct DeltaCheck {
    n: usize,
    delta: f64,
    lower: f64,
    upper: f64,
    holds: bool,
}

pub fn cmd_cf(a: &CfArgs) -> Result<Outcome, CliError> {
    let m = load_model(&a.spec, a.depth, a.q_cap)?;
    let checks: Vec<DeltaCheck> = m
        .log_deltas()
        .iter()
        .enumerate()
        .filter(|&(n, _)| n >= 1 || m.digits().first().is_some_and(|&a1| a1 >= 2))
        .filter_map(|(n, &ld)| {
            let lq = m.log_q(n + 1)?;
            Some(DeltaCheck {
                n,
                delta: ld.exp(),
                lower: (-lq - std::f64::consts::LN_2).exp(),
                upper: (-lq).exp(),
                holds: ld <= -lq + 1e-12 && ld >= -lq - std::f64::consts::LN_2 - 1e-12,
            })
        })
        .collect();
    let all = checks.iter().all(|c| c.holds);
    let beta = beta_estimate(&m, BetaWindow::LastHalf).ok();
    Ok(Outcome::ok(json!({
        "model": to_value(&m.report()),
        "depth": m.depth(),
        "delta_checks": to_value(&checks),
        "delta_checks_pass": all,
        "beta": to_value(&beta),
    })))
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
pub enum SideArg {
    Left,
    Right,
}

pub fn parse_interval(s: &str) -> Result<IntervalZ, String> {
    let (a, b) = s.split_once("..").ok_or_else(|| format!("expected a..b, got {s}"))?;
    let x1: i64 = a.trim().parse().map_err(|e| format!("{a}: {e}"))?;
    let x2: i64 = b.trim().parse().map_err(|e| format!("{b}: {e}"))?;
    IntervalZ::new(x1, x2).map_err(|e| e.to_string())
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GreenArgs {
    #[command(flatten)]
    pub freq: FreqArgs,
    #[command(flatten)]
    pub op: OperatorArgs,
    /// Box as x1..x2 (inclusive)
    #[arg(long, value_parser = parse_interval, allow_hyphen_values = true)]
    pub interval: IntervalZ,
    #[arg(long, allow_hyphen_values = true)]
    pub y: i64,
    /// Left gives G(x1, y), right gives G(y, x2)
    #[arg(long, value_enum, default_value = "left")]
    pub side: SideArg,
}

pub fn cmd_green(a: &GreenArgs) -> Result<Outcome, CliError> {
    let p = a.op.params(a.freq.model()?)?;
    let endpoint = match a.side {
        SideArg::Left => Endpoint::Left,
        SideArg::Right => Endpoint::Right,
    };
    let c = green_entry_cramer(&p, a.interval, a.y, endpoint)?;
    let dense = if a.interval.len() <= DENSE_CAP {
        let d = green_dense(&p, a.interval)?;
        Some(match a.side {
            SideArg::Left => d.get(a.interval.x1, a.y),
            SideArg::Right => d.get(a.y, a.interval.x2),
        })
    } else {
        None
    };
    let agreement = dense.map(|d| {
        d.sign() == c.value.sign() && (d.log_mag() - c.value.log_mag()).abs() <= 1e-6 * c.value.log_mag().abs().max(1.0)
    });
    let entry = |v: amo_core::LogScalar| json!({"sign": v.sign(), "log_mag": v.log_mag(), "value": v.to_f64()});
    Ok(Outcome::ok(json!({
        "cramer": entry(c.value),
        "cancellation_flagged": c.flagged,
        "dense": dense.map(entry),
        "agreement": agreement,
    })))
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RegularArgs {
    #[command(flatten)]
    pub freq: FreqArgs,
    #[command(flatten)]
    pub op: OperatorArgs,
    #[arg(long, allow_hyphen_values = true)]
    pub y: i64,
    /// Decay rate t
    #[arg(long)]
    pub t: f64,
    /// Box length k
    #[arg(long)]
    pub k: usize,
}

pub fn cmd_regular(a: &RegularArgs) -> Result<Outcome, CliError> {
    let p = a.op.params(a.freq.model()?)?;
    let v = classify_regularity(&p, a.y, a.t, a.k, None)?;
    Ok(Outcome::ok(to_value(&v)))
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ResonanceArgs {
    #[command(flatten)]
    pub freq: FreqArgs,
    #[arg(long)]
    pub y: i64,
    /// Resonant phase family: 2θ + pα ∈ ℤ
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    pub p: i64,
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    pub j: i64,
}

fn set_summary(set: &PhaseSet) -> Value {
    json!({
        "kind": to_value(&set.kind),
        "n": set.n,
        "s": set.s,
        "p": set.p,
        "q_prev": set.q_prev,
        "q_n": set.q_n,
        "i1": to_value(&set.i1),
        "i2": to_value(&set.i2),
        "size": set.len(),
        "theta": set.theta,
    })
}

pub fn cmd_resonance(a: &ResonanceArgs) -> Result<Outcome, CliError> {
    let m = a.freq.model()?;
    let r = classify_resonance(a.y, &m)?;
    let theta = make_resonant_phase(&m, a.p, a.j)?.theta;
    let built = if r.resonant {
        amo_core::resonance::build_resonant_sets(&r, a.p, theta)
    } else {
        amo_core::resonance::build_nonresonant_sets(&r, a.p, theta)
    };
    let (set, set_error) = match built {
        Ok(s) => (Some(set_summary(&s)), None),
        Err(e) => (None, Some(e.to_string())),
    };
    Ok(Outcome::ok(json!({
        "report": to_value(&r),
        "theta": theta,
        "set": set,
        "set_error": set_error,
    })))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub enum SetChoice {
    NonResonant,
    Resonant,
}

pub fn parse_set(s: &str) -> Result<SetChoice, String> {
    match s {
        "nonresonant" | "non-resonant" => Ok(SetChoice::NonResonant),
        "resonant" => Ok(SetChoice::Resonant),
        _ => Err(format!("unknown set {s}; use nonresonant or resonant")),
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct UniformityArgs {
    #[command(flatten)]
    pub freq: FreqArgs,
    /// nonresonant or resonant
    #[arg(long, value_parser = parse_set)]
    pub set: SetChoice,
    /// Scale index n (q_n, q_{n-1} are read from the model)
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    pub p: i64,
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    pub j: i64,
    /// Site y, required for the non-resonant set
    #[arg(long)]
    pub y: Option<i64>,
    /// Multiple ℓ of q_n, resonant set only
    #[arg(long, default_value_t = 1)]
    pub ell: i64,
    #[arg(long, default_value_t = 4)]
    pub grid_factor: usize,
}

pub fn cmd_uniformity(a: &UniformityArgs) -> Result<Outcome, CliError> {
    let m = a.freq.model()?;
    if a.n < 1 || a.n > m.depth() {
        return Err(CliError::usage(format!("n must be in 1..={}", m.depth())));
    }
    let q_n = m.q(a.n)?;
    let q_prev = m.q(a.n - 1)?;
    let theta = make_resonant_phase(&m, a.p, a.j)?.theta;
    let set = match a.set {
        SetChoice::Resonant => resonant_sets_from_parts(a.n, q_prev, q_n, a.ell, a.p, theta)?,
        SetChoice::NonResonant => {
            let y = a.y.ok_or_else(|| CliError::usage("--y is required for the non-resonant set"))?;
            let mult = (2 * y + q_n - 1).div_euclid(2 * q_n);
            nonresonant_sets_from_parts(a.n, q_prev, q_n, y, (y - mult * q_n).abs(), a.p, theta)?
        }
    };
    let u = uniformity_margin(&set.thetas(&m), a.grid_factor)?;
    Ok(Outcome::ok(json!({ "set": set_summary(&set), "uniformity": to_value(&u) })))
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct LocalizeArgs {
    /// Experiment definition (TOML)
    #[arg(long)]
    pub config: PathBuf,
    /// Write the per-mode CSV here (overrides output.modes_csv)
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

pub const MODES_CSV_HEADER: &str = "mode_index,energy,center,decay_rate,fit_r2,fit_points,selected";

fn csv_f64(x: Option<f64>) -> String {
    match x {
        Some(v) if v.is_finite() => format_f64(v),
        _ => String::new(),
    }
}

pub fn modes_csv(run: &VerdictRun) -> String {
    let selected: std::collections::BTreeSet<usize> = run.selected.iter().map(|m| m.index).collect();
    let mut out = String::from(MODES_CSV_HEADER);
    out.push('\n');
    for m in &run.modes {
        let ModeSummary { index, energy, center, decay_rate, fit_r2, fit_points, .. } = m;
        out.push_str(&format!(
            "{index},{},{center},{},{},{fit_points},{}\n",
            format_f64(*energy),
            csv_f64(*decay_rate),
            csv_f64(*fit_r2),
            selected.contains(index)
        ));
    }
    out
}

/// Runs one grid point; the verdict JSON plus the run for the CSV.
pub fn run_point(pt: &Point) -> Result<(Value, VerdictRun), CliError> {
    let m = load_model(&pt.frequency, pt.depth, pt.q_cap)?;
    let phase = make_resonant_phase(&m, pt.p, pt.j)?;
    let params = OperatorParams::new(pt.lambda, m, phase.theta, 0.0)?;
    let run = theorem_verdict(&params, pt.half_width, &pt.policy.to_policy())?;
    let value = json!({
        "point": to_value(pt),
        "phase": to_value(&phase),
        "verdict": to_value(&run.verdict),
        "selected_modes": run.selected.len(),
    });
    Ok((value, run))
}

pub fn cmd_localize(a: &LocalizeArgs) -> Result<Outcome, CliError> {
    let cfg = ExperimentConfig::load(&a.config)?;
    let points = cfg.points();
    if points.len() != 1 {
        return Err(CliError::usage(format!("config defines {} points; localize runs exactly one (use sweep)", points.len())));
    }
    let (mut value, run) = run_point(&points[0])?;
    if let Some(path) = a.csv.as_ref().or(cfg.output.modes_csv.as_ref()) {
        write_file(path, &modes_csv(&run))?;
        value["modes_csv"] = json!(path.display().to_string());
    }
    let code = if run.verdict.pass.is_none() { EXIT_REGIME } else { 0 };
    Ok(Outcome { result: value, code })
}

pub fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, text)?;
    Ok(())
}
