use thiserror::Error;

pub type Result<T> = std::result::Result<T, ZollError>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ZollError {
    #[error("degenerate metric at x = {0:?}")]
    DegenerateMetric(Vec<f64>),

    #[error("chart violation at x = {0:?}")]
    ChartViolation(Vec<f64>),

    #[error("not a boundary point: b(p) = {0:e}")]
    NotBoundaryPoint(f64),

    #[error("left atlas at x = {0:?}")]
    LeftAtlas(Vec<f64>),

    #[error("no return (not Zoll or t_max too small): t_max = {0}")]
    NoReturn(f64),

    #[error("degenerate family (violates isolation) near t = {0}")]
    DegenerateFamily(f64),

    #[error("indefinite assembly error: {0}")]
    IndefiniteAssembly(String),

    #[error("contradiction with maximal degeneracy: dim J_par = {found}, expected {expected}")]
    MaximalDegeneracy { found: usize, expected: usize },

    #[error("too many boundary components: found {0} classes, at most 2 allowed")]
    TooManyComponents(usize),

    #[error("undersampled soul: {found} points, need at least {needed}")]
    UndersampledSoul { found: usize, needed: usize },

    #[error("parameter violates example validity: {0}")]
    InvalidParameter(String),

    #[error("desk-scale cap: dimension {0} exceeds 5")]
    DeskScaleCap(usize),

    #[error("N below certification minimum: {found} < {minimum}")]
    TooFewLaunches { found: usize, minimum: usize },

    #[error("unknown catalog name `{0}`")]
    UnknownExample(String),

    #[error("isometry check failed: residual {0:e}")]
    NotAnIsometry(f64),

    #[error("invalid manifest: {0}")]
    Manifest(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for ZollError {
    fn from(e: std::io::Error) -> Self {
        ZollError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for ZollError {
    fn from(e: serde_json::Error) -> Self {
        ZollError::Manifest(e.to_string())
    }
}
