use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("spectral parameter u = {u} outside (0, pi/4) or at a singular point")]
    InvalidSpectralPoint { u: f64 },
    #[error("weight singular at u = {u}")]
    SingularWeight { u: f64 },
    #[error("L = {l} exceeds the configured maximum {max}")]
    DimensionOverflow { l: usize, max: usize },
    #[error("index {index} out of range 1..={max}")]
    IndexOutOfRange { index: usize, max: usize },
    #[error("boundary tangle B_{j} needs j <= L (L = {l})")]
    PatternCollision { j: usize, l: usize },
    #[error("system ill-conditioned: estimate {estimate:e} above bound {bound:e}")]
    IllConditioned { estimate: f64, bound: f64 },
    #[error("polynomial fit residual {residual:e} above threshold {threshold:e}")]
    FitResidual { residual: f64, threshold: f64 },
    #[error("leading coefficient differs from the identity by {deviation:e}")]
    LeadingCoefficient { deviation: f64 },
    #[error("series coefficients fail to commute: {residual:e}")]
    NonCommuting { residual: f64 },
    #[error("missing ingredient: {0}")]
    MissingIngredient(String),
    #[error("argument outside the domain: {0}")]
    Domain(String),
    #[error("evaluation point within {distance:e} of a pole")]
    PoleProximity { distance: f64 },
    #[error("could not find collision-free probes after {attempts} attempts")]
    CollisionResampling { attempts: usize },
    #[error("polynomial division left a remainder")]
    NonExactDivision,
    #[error("infeasible node request: {0}")]
    InfeasibleNodes(String),
    #[error("singular matrix")]
    Singular,
    #[error("configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
