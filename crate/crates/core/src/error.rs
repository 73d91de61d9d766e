use thiserror::Error;

/// Errors produced by the geometry, mesh, solver and experiment layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("normal line from the reference boundary misses the perturbed boundary at x' = {x}")]
    NoIntersection { x: f64 },
    #[error("regularity ladder needs at least 4 points, got {0}")]
    LadderTooShort(usize),
    #[error("perturbation amplitude {amplitude} too large for height {height}")]
    AmplitudeTooLarge { amplitude: f64, height: f64 },
    #[error("mapped cell at (i={i}, j={j}) has non-positive area")]
    DegenerateCell { i: usize, j: usize },
    #[error("element {0} has zero area")]
    SingularElement(usize),
    #[error("Cholesky factorization failed at pivot {pivot} (value {value})")]
    FactorizationFailure { pivot: usize, value: f64 },
    #[error("eigensolver did not converge: {converged} of {requested} pairs after {iterations} iterations")]
    NoConvergence {
        requested: usize,
        converged: usize,
        iterations: usize,
    },
    #[error("matrix is not positive definite (pivot {0})")]
    NotPositiveDefinite(usize),
    #[error("count mismatch: expected {expected} values, got {got}")]
    CountMismatch { expected: usize, got: usize },
    #[error("quadrature node mismatch: {left} vs {right} nodes")]
    NodeMismatch { left: usize, right: usize },
    #[error("rate fit needs at least 4 usable points, got {0}")]
    TooFewPoints(usize),
    #[error("total bottom flux vanishes; cannot normalize the cell constant")]
    ZeroFlux,
    #[error("cell solution failed to decay: residual {residual} exceeds bound {bound}")]
    DecayFailure { residual: f64, bound: f64 },
    #[error("scenario is invalid: {0}")]
    InvalidScenario(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
