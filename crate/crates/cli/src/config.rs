//! Experiment definition files (TOML). Unknown keys are rejected.
//!
//! ```toml
//! [frequency]
//! spec = "cf-rule:exp(beta=0.3,seed=[7,7,7,7,7])"
//! depth = 40            # optional
//! q_cap = 1000000       # optional
//!
//! [operator]
//! lambda = [12.249254868851475]
//!
//! [phase]
//! p = [0, -1]
//! j = [0]
//!
//! [truncation]
//! half_width = 3000
//!
//! [policy]              # optional, defaults shown
//! center_fraction = 0.25
//! window = [0.2, 0.8]
//! min_r2 = 0.9
//! min_points = 50
//! tolerance = 0.3
//!
//! [output]              # optional
//! dir = "sweep-out"
//! modes_csv = "modes.csv"
//!
//! [run]                 # optional
//! parallelism = 1
//! ```

use std::path::{Path, PathBuf};

use amo_core::cf::{BetaWindow, FrequencySpec, DEFAULT_Q_CAP};
use amo_core::localization::{ModePolicy, WindowPolicy, MAX_HALF_WIDTH, NOISE_FLOOR};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const MAX_PARALLELISM: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub frequency: FrequencySection,
    pub operator: OperatorSection,
    pub phase: PhaseSection,
    pub truncation: TruncationSection,
    #[serde(default)]
    pub policy: PolicySection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub run: RunSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrequencySection {
    pub spec: String,
    pub depth: Option<usize>,
    pub q_cap: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorSection {
    pub lambda: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseSection {
    pub p: Vec<i64>,
    pub j: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruncationSection {
    pub half_width: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PolicySection {
    pub center_fraction: f64,
    pub window: [f64; 2],
    pub min_r2: f64,
    pub min_points: usize,
    pub tolerance: f64,
}

impl Default for PolicySection {
    fn default() -> Self {
        let m = ModePolicy::default();
        PolicySection {
            center_fraction: m.center_fraction,
            window: [m.window.lo, m.window.hi],
            min_r2: m.window.min_r2,
            min_points: m.window.min_points,
            tolerance: m.tolerance,
        }
    }
}

impl PolicySection {
    pub fn to_policy(&self) -> ModePolicy {
        ModePolicy {
            center_fraction: self.center_fraction,
            window: WindowPolicy {
                lo: self.window[0],
                hi: self.window[1],
                noise_floor: NOISE_FLOOR,
                min_r2: self.min_r2,
                min_points: self.min_points,
            },
            tolerance: self.tolerance,
            beta_window: BetaWindow::LastHalf,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
    pub modes_csv: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub parallelism: usize,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection { parallelism: 1 }
    }
}

/// One grid point of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Point {
    pub frequency: String,
    pub depth: Option<usize>,
    pub q_cap: u64,
    pub lambda: f64,
    pub p: i64,
    pub j: i64,
    pub half_width: i64,
    pub policy: PolicySection,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| CliError::usage(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::usage(format!("config: {m}")));
        if let Err(e) = self.frequency.spec.parse::<FrequencySpec>() {
            return bad(e.to_string());
        }
        if self.frequency.q_cap == Some(0) {
            return bad("q_cap must be positive".into());
        }
        if self.operator.lambda.is_empty() || self.phase.p.is_empty() || self.phase.j.is_empty() {
            return bad("lambda, p and j need at least one value each".into());
        }
        if let Some(l) = self.operator.lambda.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
            return bad(format!("lambda {l} must be positive and finite"));
        }
        if let Some(p) = self.phase.p.iter().find(|p| **p > 0) {
            return bad(format!("p = {p} must be <= 0"));
        }
        if !(1..=MAX_HALF_WIDTH).contains(&self.truncation.half_width) {
            return bad(format!("half_width must be in 1..={MAX_HALF_WIDTH}"));
        }
        let pol = &self.policy;
        if !(pol.center_fraction > 0.0 && pol.center_fraction <= 1.0) {
            return bad("center_fraction must be in (0, 1]".into());
        }
        if !(0.0 <= pol.window[0] && pol.window[0] < pol.window[1] && pol.window[1] <= 1.0) {
            return bad("window must satisfy 0 <= lo < hi <= 1".into());
        }
        if !(0.0..=1.0).contains(&pol.min_r2) {
            return bad("min_r2 must be in [0, 1]".into());
        }
        if !(pol.tolerance >= 0.0 && pol.tolerance.is_finite()) {
            return bad("tolerance must be non-negative".into());
        }
        if !(1..=MAX_PARALLELISM).contains(&self.run.parallelism) {
            return bad(format!("parallelism must be in 1..={MAX_PARALLELISM}"));
        }
        Ok(())
    }

    /// Grid points ordered by `(λ, p, j)`.
    pub fn points(&self) -> Vec<Point> {
        let mut lambdas = self.operator.lambda.clone();
        lambdas.sort_by(|a, b| a.partial_cmp(b).unwrap());
        lambdas.dedup();
        let mut ps = self.phase.p.clone();
        ps.sort_unstable();
        ps.dedup();
        let mut js = self.phase.j.clone();
        js.sort_unstable();
        js.dedup();
        let mut out = Vec::new();
        for &lambda in &lambdas {
            for &p in &ps {
                for &j in &js {
                    out.push(Point {
                        frequency: self.frequency.spec.clone(),
                        depth: self.frequency.depth,
                        q_cap: self.frequency.q_cap.unwrap_or(DEFAULT_Q_CAP),
                        lambda,
                        p,
                        j,
                        half_width: self.truncation.half_width,
                        policy: self.policy.clone(),
                    });
                }
            }
        }
        out
    }
}
