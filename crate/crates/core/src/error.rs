use thiserror::Error;

pub type Result<T> = std::result::Result<T, ObsError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ObsError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("integration diverged at t = {time}")]
    Diverged { time: f64 },

    #[error("evaluation produced a non-finite value: {0}")]
    Evaluation(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("stimulus window error: {0}")]
    Window(String),

    #[error("system is unobservable: rank {rank} < {dim}")]
    Unobservable { rank: usize, dim: usize },

    #[error("input history error: {0}")]
    Input(String),

    #[error("simulation for perturbation index {index} failed: {source}")]
    Perturbation {
        index: usize,
        #[source]
        source: Box<ObsError>,
    },

    #[error(
        "infeasible start: combined Gramian at uniform weights is singular \
         (lambda_min = {lambda_min:e}); increase r or choose different sites"
    )]
    InfeasibleStart { lambda_min: f64 },

    #[error("model error: {0}")]
    Model(String),
}
