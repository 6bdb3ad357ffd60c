use amo_core::cf::CfError;
use amo_core::determinant::DetError;
use amo_core::greens::GreenError;
use amo_core::localization::LocError;
use amo_core::resonance::ResonanceError;
use serde::Serialize;

pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_DEGENERATE: u8 = 3;
pub const EXIT_REGIME: u8 = 4;

#[derive(Debug, Clone, Serialize)]
pub struct CliError {
    #[serde(skip)]
    pub code: u8,
    pub kind: &'static str,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError { code: EXIT_USAGE, kind: "usage", message: message.into() }
    }

    pub fn degenerate(message: impl Into<String>) -> Self {
        CliError { code: EXIT_DEGENERATE, kind: "degenerate", message: message.into() }
    }

    pub fn failure(message: impl Into<String>) -> Self {
        CliError { code: EXIT_FAILURE, kind: "failure", message: message.into() }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.kind, self.message)
    }
}

impl From<CfError> for CliError {
    fn from(e: CfError) -> Self {
        match e {
            CfError::CapExceeded { .. } | CfError::NonFinite => CliError::failure(e.to_string()),
            _ => CliError::usage(e.to_string()),
        }
    }
}

impl From<DetError> for CliError {
    fn from(e: DetError) -> Self {
        match e {
            DetError::NonFinite => CliError::failure(e.to_string()),
            _ => CliError::usage(e.to_string()),
        }
    }
}

impl From<GreenError> for CliError {
    fn from(e: GreenError) -> Self {
        match e {
            GreenError::Singular { .. } | GreenError::EmptyCandidates => CliError::degenerate(e.to_string()),
            GreenError::Det(d) => d.into(),
            GreenError::Factory { .. } => CliError::failure(e.to_string()),
            _ => CliError::usage(e.to_string()),
        }
    }
}

impl From<ResonanceError> for CliError {
    fn from(e: ResonanceError) -> Self {
        match e {
            ResonanceError::Degenerate(_)
            | ResonanceError::Ambiguous { .. }
            | ResonanceError::CoincidentPhases { .. }
            | ResonanceError::Construction(_) => CliError::degenerate(e.to_string()),
            ResonanceError::Cf(c) => c.into(),
            ResonanceError::Det(d) => d.into(),
            _ => CliError::usage(e.to_string()),
        }
    }
}

impl From<LocError> for CliError {
    fn from(e: LocError) -> Self {
        match e {
            LocError::NoQualifyingModes(_) | LocError::EmptyWindow => CliError::degenerate(e.to_string()),
            LocError::Cf(c) => c.into(),
            LocError::Det(d) => d.into(),
            _ => CliError::usage(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::failure(e.to_string())
    }
}
