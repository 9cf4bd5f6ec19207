//! Path planning in unknown environments on a potential-guided lattice.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod environment;
pub mod error;
pub mod escape;
pub mod fpe;
pub mod geometry;
pub mod graph;
pub mod paths;
pub mod planner;

pub use environment::{GroundTruth, KnownEnvironment, PairBand};
pub use error::{FpeError, GeometryError, GraphError, PathError, PlanError};
pub use escape::{EscapeEvent, EscapeMode, EscapeOutcome, TrapEscapePolicy};
pub use geometry::{
    distance, Aabb, Configuration, ImplicitConstraint, ObstaclePrimitive, PotentialField, Shape,
};
pub use graph::{
    expand_vertex, generate_graph, lattice_key, GenConfig, GraphResult, SearchGraph, VertexId,
};
pub use paths::{backtrace, bfs_path, dijkstra_path, GraphPath};
pub use planner::{
    move_along, plan, MotionOutcome, MotionStatus, PlanResult, PlanStatus, PlannerConfig,
};
