use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{what} must be finite, got {value}")]
    NonFinite { what: &'static str, value: f64 },

    #[error("{what} out of range: {value}")]
    OutOfRange { what: &'static str, value: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("score {value} lies outside the clip interval for bound {bound}")]
    OutsideClip { value: f64, bound: f64 },

    #[error("leaf {leaf} has alpha {alpha} which cannot be inverted")]
    NonInvertible { leaf: u32, alpha: f64 },

    #[error("unknown leaf id {0}")]
    UnknownLeaf(u32),

    #[error("feature `{0}` is not present")]
    MissingFeature(String),

    #[error("feature `{feature}` has kind {found}, expected {expected}")]
    FeatureKind {
        feature: String,
        expected: &'static str,
        found: &'static str,
    },

    #[error("unknown group `{0}`")]
    UnknownGroup(String),

    #[error("empty measure: {0}")]
    EmptyMeasure(String),

    #[error("risk is infinite: a score of exactly 0 or 1 carries opposing label mass")]
    InfiniteRisk,

    #[error("leaf is undefined: both edge parts vanish")]
    UndefinedLeaf,

    #[error("edge magnitude reached 1; balanced weights are undefined")]
    DegenerateEdge,

    #[error("no feasible pushup: advantaged rate {rate} with epsilon {epsilon}")]
    InfeasiblePushup { rate: f64, epsilon: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("row {row}: {message}")]
    Row { row: usize, message: String },

    #[error("model file: {0}")]
    ModelFormat(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
