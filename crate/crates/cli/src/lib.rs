//! Scenario files, run drivers and SVG output for the `fp-plan` binary.

pub mod run;
pub mod scenario;
pub mod svg;

pub use run::{run_plan, run_region, ExitCode, PlanReport, RegionReport, RunError, RunOptions};
pub use scenario::{parse_scenario, parse_with_overrides, ObstacleSpec, Scenario, ScenarioError};
