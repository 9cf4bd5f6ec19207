use thiserror::Error;

/// Errors raised by geometric primitives and feasibility queries.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("configuration dimension {config_dim} is not a multiple of workspace dimension {workspace_dim}")]
    NotStacked {
        config_dim: usize,
        workspace_dim: usize,
    },
    #[error("invalid box: min corner exceeds max corner on axis {axis}")]
    InvalidBox { axis: usize },
}

/// Errors raised while growing a search graph.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("vertex limit of {limit} exceeded")]
    VertexLimit { limit: usize },
    #[error("coordinate {axis} is {offset:.3} lattice steps from the nearest lattice point")]
    LatticeConsistency { axis: usize, offset: f64 },
    #[error("invalid generator configuration: {0}")]
    InvalidConfig(String),
    #[error("start configuration is infeasible under the known environment")]
    InfeasibleStart,
    #[error("fixed-shape escape requires at least two robots")]
    FixedShapeSingleRobot,
}

/// Errors raised by path extraction.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PathError {
    #[error("graph does not contain the target vertex")]
    TargetAbsent,
}

/// Errors raised by the replanning loop.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlanError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Path(#[from] PathError),
    #[error("invalid planner configuration: {0}")]
    InvalidConfig(String),
    #[error("robot discovered inside an obstacle at {position:?}")]
    ModelViolation { position: Vec<f64> },
}

/// Errors raised by the Fokker-Planck lattice solver and region builder.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FpeError {
    #[error("lattice construction refused: configuration dimension {0} exceeds 3")]
    DimensionTooLarge(usize),
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),
    #[error("CFL violation: node {node} has mass {mass:e} after a step of {dt:e}")]
    CflViolation { node: usize, mass: f64, dt: f64 },
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("density must be positive on every node when beta > 0 (node {0})")]
    ZeroDensity(usize),
    #[error("configuration {0:?} is not a lattice node")]
    NotANode(Vec<f64>),
    #[error("region construction did not reach the target after {rounds} rounds: {reason}")]
    Structural { rounds: usize, reason: String },
}
