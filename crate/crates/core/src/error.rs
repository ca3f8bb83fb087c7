use thiserror::Error;

use crate::params::TransversalityReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("INVALID_SIGMA: volatility must be positive and finite, got {0}")]
    InvalidSigma(f64),

    #[error("INVALID_DRIFT: drift must be finite, got {0}")]
    InvalidDrift(f64),

    #[error("NONPOSITIVE_DELTA: discount rate must be positive, got {0}")]
    NonpositiveDelta(f64),

    #[error("INVALID_COSTS: {0}")]
    InvalidCosts(String),

    #[error("INVALID_UTILITY: {0}")]
    InvalidUtility(String),

    #[error("DOMAIN: gain ratio {0} is below -1 for modified-TK utility")]
    Domain(f64),

    #[error("KINK: marginal utility at g = 0 requires a side")]
    Kink,

    #[error("INVALID_REFERENCE: reference level must be positive, got {0}")]
    InvalidReference(f64),

    #[error("SINGULAR: boundary system is singular at theta = {theta}, theta_big = {theta_big}")]
    Singular { theta: f64, theta_big: f64 },

    #[error("OUT_OF_REGION: x = {x} lies outside the continuation region [{lower}, {upper}]")]
    OutOfRegion { x: f64, lower: f64, upper: f64 },

    #[error("TRANSVERSALITY: {0}")]
    Transversality(TransversalityReport),

    #[error("NO_PARTICIPATION: best attainable v(1) = {0} is not positive")]
    NoParticipation(f64),

    #[error("NO_ROOT: {0}")]
    NoRoot(String),

    #[error("DEGENERATE: {0}")]
    Degenerate(String),

    #[error("OUT_OF_SUPPORT: x = {x} lies outside [{lower}, {upper}]")]
    OutOfSupport { x: f64, lower: f64, upper: f64 },

    #[error("INVALID_POPULATION: {0}")]
    InvalidPopulation(String),

    #[error("HORIZON_TOO_SHORT: only {sales} sales after burn-in (need at least {required})")]
    HorizonTooShort { sales: u64, required: u64 },

    #[error("INVALID_SIM_CONFIG: {0}")]
    InvalidSimConfig(String),

    #[error("CONFIG_PARSE: {0}")]
    ConfigParse(String),

    #[error("IO: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable machine-readable code, the prefix of the display string.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidSigma(_) => "INVALID_SIGMA",
            Error::InvalidDrift(_) => "INVALID_DRIFT",
            Error::NonpositiveDelta(_) => "NONPOSITIVE_DELTA",
            Error::InvalidCosts(_) => "INVALID_COSTS",
            Error::InvalidUtility(_) => "INVALID_UTILITY",
            Error::Domain(_) => "DOMAIN",
            Error::Kink => "KINK",
            Error::InvalidReference(_) => "INVALID_REFERENCE",
            Error::Singular { .. } => "SINGULAR",
            Error::OutOfRegion { .. } => "OUT_OF_REGION",
            Error::Transversality(_) => "TRANSVERSALITY",
            Error::NoParticipation(_) => "NO_PARTICIPATION",
            Error::NoRoot(_) => "NO_ROOT",
            Error::Degenerate(_) => "DEGENERATE",
            Error::OutOfSupport { .. } => "OUT_OF_SUPPORT",
            Error::InvalidPopulation(_) => "INVALID_POPULATION",
            Error::HorizonTooShort { .. } => "HORIZON_TOO_SHORT",
            Error::InvalidSimConfig(_) => "INVALID_SIM_CONFIG",
            Error::ConfigParse(_) => "CONFIG_PARSE",
            Error::Io(_) => "IO",
        }
    }
}
