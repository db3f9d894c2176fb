use thiserror::Error;

/// Errors raised by the library. The CLI maps these onto exit codes.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension {0} is not supported (expected 1, 2 or 3)")]
    UnsupportedDimension(usize),

    #[error("need at least {needed} neighbor candidates, found {found}")]
    InsufficientPoints { needed: usize, found: usize },

    #[error("degenerate Voronoi site: {0}")]
    DegenerateSite(String),

    #[error("pair interaction must have a hard core: {0}")]
    NonHardCore(String),

    #[error("functional requires arrival marks on every point")]
    MarksRequired,

    #[error("potential envelope failure: {0}")]
    PotentialEnvelope(String),

    #[error("clan explosion (potential not exponentially localized at this intensity): {0}")]
    ClanExplosion(String),

    #[error("rejection oracle infeasible: {accepted} acceptances in {proposals} proposals")]
    InfeasibleOracle { proposals: u64, accepted: u64 },

    #[error("density floor violated: h = {value} at {location}")]
    DensityFloor { value: f64, location: String },

    #[error("insufficient data: {0}")]
    InsufficientData(String),
}

pub type Result<T> = std::result::Result<T, Error>;
