use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure the toolkit can report. [`Error::kind`] gives a stable
/// name for machine consumption.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("Lie derivative of order {0} is not supported (max 3)")]
    OrderUnsupported(u32),
    #[error("point is not on the switching surface (|f| = {0:e})")]
    NotOnSigma(f64),
    #[error("sliding denominator Yf - Xf vanishes ({0:e})")]
    DenominatorVanishes(f64),
    #[error("no fold curve: {0}")]
    NoFoldCurve(String),
    #[error("degenerate tangency near chart point ({0}, {1})")]
    DegeneratePoint(f64, f64),
    #[error("section not reached within t_max = {t_max}")]
    NoHit { t_max: f64 },
    #[error("state left the working region at t = {t}")]
    Blowup { t: f64 },
    #[error("trajectory reached a degenerate point at t = {t}")]
    StuckAtDegenerate { t: f64, point: [f64; 3] },
    #[error("intermediate hit at {point:?} is not a crossing point")]
    NotCrossing { point: [f64; 3] },
    #[error("sliding orbit left the neighbourhood before reaching the fold")]
    NoFoldReached,
    #[error("operation needs a Mobius loop but alpha = {alpha}")]
    WrongClass { alpha: f64 },
    #[error("domain violation: {0}")]
    DomainViolation(String),
    #[error("degenerate return-map coefficients: {0}")]
    DegenerateCoefficients(String),
    #[error("no fixed point: {0}")]
    NoFixedPoint(String),
    #[error("loop is not quasi-generic: {check} fails")]
    NotQuasiGeneric { check: String },
    #[error("inconclusive: {0}")]
    Inconclusive(String),
    #[error("wrong fixed point type: {0}")]
    WrongType(String),
    #[error("graph transform did not converge")]
    GraphTransformDiverged,
    #[error("resampling exceeded the point budget of {budget}")]
    ResampleOverflow { budget: usize },
    #[error("no sign change of zeta on [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },
    #[error("family is not transverse: dzeta/dgamma = {derivative:e}")]
    DegenerateFamily { derivative: f64 },
    #[error("continuation lost at gamma = {gamma}")]
    ContinuationLost { gamma: f64 },
    #[error("syntax error at offset {offset}: {message}")]
    SyntaxError { offset: usize, message: String },
    #[error("unknown identifier '{name}' at offset {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("bad parameters: {0}")]
    BadParams(String),
    #[error("could not invert the diffeomorphism near {point:?}")]
    InversionFailed { point: [f64; 3] },
    #[error("unknown scenario '{0}'")]
    UnknownScenario(String),
    #[error("invalid system definition: {0}")]
    InvalidSystem(String),
}

impl Error {
    pub fn kind(&self) -> &'static str {
        match self {
            Error::OrderUnsupported(_) => "OrderUnsupported",
            Error::NotOnSigma(_) => "NotOnSigma",
            Error::DenominatorVanishes(_) => "DenominatorVanishes",
            Error::NoFoldCurve(_) => "NoFoldCurve",
            Error::DegeneratePoint(..) => "DegeneratePoint",
            Error::NoHit { .. } => "NoHit",
            Error::Blowup { .. } => "Blowup",
            Error::StuckAtDegenerate { .. } => "StuckAtDegenerate",
            Error::NotCrossing { .. } => "NotCrossing",
            Error::NoFoldReached => "NoFoldReached",
            Error::WrongClass { .. } => "WrongClass",
            Error::DomainViolation(_) => "DomainViolation",
            Error::DegenerateCoefficients(_) => "DegenerateCoefficients",
            Error::NoFixedPoint(_) => "NoFixedPoint",
            Error::NotQuasiGeneric { .. } => "NotQuasiGeneric",
            Error::Inconclusive(_) => "Inconclusive",
            Error::WrongType(_) => "WrongType",
            Error::GraphTransformDiverged => "GraphTransformDiverged",
            Error::ResampleOverflow { .. } => "ResampleOverflow",
            Error::NoSignChange { .. } => "NoSignChange",
            Error::DegenerateFamily { .. } => "DegenerateFamily",
            Error::ContinuationLost { .. } => "ContinuationLost",
            Error::SyntaxError { .. } => "SyntaxError",
            Error::UnknownIdentifier { .. } => "UnknownIdentifier",
            Error::BadParams(_) => "BadParams",
            Error::InversionFailed { .. } => "InversionFailed",
            Error::UnknownScenario(_) => "UnknownScenario",
            Error::InvalidSystem(_) => "InvalidSystem",
        }
    }

    /// Errors caused by malformed input rather than by the dynamics.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::SyntaxError { .. }
                | Error::UnknownIdentifier { .. }
                | Error::UnknownScenario(_)
                | Error::InvalidSystem(_)
        )
    }
}
