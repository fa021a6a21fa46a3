use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("basis dimension {requested} exceeds the configured cap of {cap} states")]
    Resource { requested: u128, cap: usize },

    #[error("occupancy cap n_max={n_max} cannot hold {particles} particles on one site")]
    Cap { n_max: usize, particles: usize },

    #[error("cannot place {particles} particles one per site on {sites} sites")]
    Filling { particles: usize, sites: usize },

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("cat manifold needs at least two particles, got {0}")]
    DegenerateManifold(usize),

    #[error("solver failed to converge after {iterations} iterations (residual {residual:e})")]
    Solver { iterations: usize, residual: f64 },

    #[error("invalid input: {0}")]
    Input(String),

    #[error("oracle misuse: {0}")]
    Misuse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
