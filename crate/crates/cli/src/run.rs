use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use fp_planner::fpe::{build_rf, contains_path, Lattice, RegionOptions, MAX_LATTICE_DIM};
use fp_planner::{plan, KnownEnvironment, PlanError, PlanResult, PlanStatus, PotentialField};

use crate::scenario::{Scenario, ScenarioError};
use crate::svg::Canvas;

/// Process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ExitCode {
    Ok = 0,
    NoPath = 2,
    ResourceLimit = 3,
    Invalid = 4,
    Internal = 5,
}

impl ExitCode {
    pub fn code(self) -> i32 {
        self as i32
    }

    pub fn of(status: PlanStatus) -> Self {
        match status {
            PlanStatus::Success => ExitCode::Ok,
            PlanStatus::NoFeasiblePath => ExitCode::NoPath,
            PlanStatus::ResourceLimit => ExitCode::ResourceLimit,
        }
    }
}

#[derive(Debug)]
pub struct RunError {
    pub code: ExitCode,
    pub msg: String,
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.msg)
    }
}

impl std::error::Error for RunError {}

impl From<ScenarioError> for RunError {
    fn from(e: ScenarioError) -> Self {
        RunError {
            code: ExitCode::Invalid,
            msg: e.to_string(),
        }
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        internal(format!("i/o: {e}"))
    }
}

impl From<PlanError> for RunError {
    fn from(e: PlanError) -> Self {
        match e {
            PlanError::InvalidConfig(msg) => RunError {
                code: ExitCode::Invalid,
                msg,
            },
            other => internal(other.to_string()),
        }
    }
}

fn internal(msg: String) -> RunError {
    RunError {
        code: ExitCode::Internal,
        msg,
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Force SVG output regardless of the scenario's `svg` flag.
    pub svg: bool,
    /// Translate the region by this offset before the containment check.
    pub region_shift: Option<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct PlanReport {
    pub result: PlanResult,
    pub code: ExitCode,
}

pub fn escape_events_csv(result: &PlanResult) -> String {
    let mut out = String::from(
        "graph_index,activation_vertex,mode,vertices_added,relaxations,outcome,epsilon\n",
    );
    for (i, seg) in result.segments.iter().enumerate() {
        for e in &seg.graph.stats().escapes {
            let eps = e.epsilon.map(|v| v.to_string()).unwrap_or_default();
            let outcome = match e.outcome {
                fp_planner::EscapeOutcome::Escaped => "escaped",
                fp_planner::EscapeOutcome::Fallback => "fallback",
            };
            let _ = writeln!(
                out,
                "{i},{},{},{},{},{outcome},{eps}",
                e.activation_vertex,
                e.mode.as_str(),
                e.vertices_added,
                e.relaxations
            );
        }
    }
    out
}

fn status_text(result: &PlanResult) -> String {
    let mut s = format!("status {}\n", result.status.as_str());
    if let Some(why) = &result.limit {
        let _ = writeln!(s, "limit {why}");
    }
    s
}

/// Plan the scenario and write trajectory, metrics, escape log, graph dumps
/// and (planar workspaces) per-segment SVGs into `out`.
pub fn run_plan(scn: &Scenario, out: &Path, opts: &RunOptions) -> Result<PlanReport, RunError> {
    fs::create_dir_all(out)?;
    let truth = scn.truth_arc()?;
    let result = plan(
        truth,
        &scn.start_config(),
        &scn.target_config(),
        &scn.planner_config(),
    )?;
    fs::write(out.join("trajectory.csv"), result.trajectory_csv())?;
    fs::write(out.join("metrics.csv"), result.metrics_csv())?;
    fs::write(out.join("escape_events.csv"), escape_events_csv(&result))?;
    fs::write(out.join("status.txt"), status_text(&result))?;
    for (i, seg) in result.segments.iter().enumerate() {
        fs::write(out.join(format!("graph_{i}.txt")), seg.graph.dump())?;
        if !(scn.svg || opts.svg) {
            continue;
        }
        if let Some(mut c) = Canvas::for_scenario(scn) {
            c.obstacles(scn, &seg.known_ids);
            c.graph(&seg.graph);
            if let Some(p) = &seg.path {
                c.path(&p.configs(&seg.graph));
            }
            c.start(seg.graph.vertex(seg.graph.root()).config.coords());
            c.target(&scn.target);
            fs::write(out.join(format!("segment_{i}.svg")), c.finish())?;
        }
    }
    let code = ExitCode::of(result.status);
    Ok(PlanReport { result, code })
}

#[derive(Debug, Clone)]
pub struct RegionReport {
    pub contained: bool,
    pub samples: usize,
    pub outside: usize,
    pub region_nodes: usize,
    pub code: ExitCode,
}

/// Build the search region on the fully revealed environment, plan on the
/// same environment and check that the trajectory stays inside the region.
/// A failed check is an invariant breach.
pub fn run_region(scn: &Scenario, out: &Path, opts: &RunOptions) -> Result<RegionReport, RunError> {
    if scn.dim > MAX_LATTICE_DIM {
        return Err(RunError {
            code: ExitCode::Invalid,
            msg: format!(
                "region construction supports dim <= {MAX_LATTICE_DIM}, scenario has {}",
                scn.dim
            ),
        });
    }
    fs::create_dir_all(out)?;
    let truth = Arc::new(scn.truth()?.all_known());
    let start = scn.start_config();
    let target = scn.target_config();
    let env = KnownEnvironment::fully_known(truth.clone());
    let pot = PotentialField::new(target.clone());
    let spacing = scn.grid_step.unwrap_or(scn.step);
    let lat = Lattice::from_environment(&env, &start, spacing, &pot)
        .map_err(|e| internal(e.to_string()))?;
    let t = lat.node_at(&scn.target).map_err(|_| RunError {
        code: ExitCode::Invalid,
        msg: format!("target is not a lattice node at grid step {spacing} anchored on the start"),
    })?;
    let s = lat
        .node_at(&scn.start)
        .map_err(|e| internal(e.to_string()))?;
    let build = build_rf(
        s,
        t,
        &lat,
        RegionOptions {
            beta: scn.beta,
            ..RegionOptions::default()
        },
    )
    .map_err(|e| internal(e.to_string()))?;
    fs::write(out.join("region.txt"), build.dump(&lat))?;
    let result = plan(truth, &start, &target, &scn.planner_config())?;
    fs::write(out.join("trajectory.csv"), result.trajectory_csv())?;
    fs::write(out.join("metrics.csv"), result.metrics_csv())?;
    let region = match &opts.region_shift {
        Some(off) => build.region.shifted(off),
        None => build.region.clone(),
    };
    let traj = result.trajectory_configs();
    let outside = traj
        .iter()
        .filter(|x| !region.contains_point(x.coords()))
        .count();
    let contained = contains_path(&region, &traj);
    let mut verdict = format!("contains_path {contained}\n");
    let _ = writeln!(verdict, "samples {}", traj.len());
    let _ = writeln!(verdict, "outside {outside}");
    let _ = writeln!(verdict, "region_nodes {}", region.len());
    let _ = writeln!(verdict, "rounds {}", build.rounds.len());
    let _ = writeln!(verdict, "beta {}", build.beta);
    fs::write(out.join("containment.txt"), verdict)?;
    if scn.dim == 2 {
        if let Some(mut c) = Canvas::for_scenario(scn) {
            let all: Vec<usize> = (0..scn.obstacles.len()).collect();
            c.obstacles(scn, &all);
            c.region(&lat, &region);
            for seg in &result.segments {
                c.graph(&seg.graph);
            }
            c.path(&traj);
            c.start(&scn.start);
            c.target(&scn.target);
            fs::write(out.join("region.svg"), c.finish())?;
        }
    }
    let code = match ExitCode::of(result.status) {
        ExitCode::Ok if !contained => ExitCode::Internal,
        c => c,
    };
    Ok(RegionReport {
        contained,
        samples: traj.len(),
        outside,
        region_nodes: region.len(),
        code,
    })
}
