//! Line-oriented scenario files.
//!
//! One directive per line, `#` starts a comment:
//!
//! ```text
//! dim 2
//! robots 1
//! workspace 0 0 1 1
//! start 0.1 0.1
//! target 0.9 0.9
//! sensing_radius 0.1
//! step 0.03
//! obstacle box 0.4 0.3 0.45 0.7 known
//! obstacle disk 0.7 0.7 0.05
//! ```

use std::fmt::Write as _;
use std::sync::Arc;

use fp_planner::{
    Aabb, Configuration, EscapeMode, GroundTruth, KnownEnvironment, ObstaclePrimitive, PairBand,
    PlannerConfig, TrapEscapePolicy,
};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid `{field}`: {msg}")]
    Validation { field: String, msg: String },
}

fn parse_err(line: usize, msg: impl Into<String>) -> ScenarioError {
    ScenarioError::Parse {
        line,
        msg: msg.into(),
    }
}

fn invalid(field: impl Into<String>, msg: impl Into<String>) -> ScenarioError {
    ScenarioError::Validation {
        field: field.into(),
        msg: msg.into(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ObstacleSpec {
    Box {
        min: Vec<f64>,
        max: Vec<f64>,
        known: bool,
    },
    Disk {
        center: Vec<f64>,
        radius: f64,
        known: bool,
    },
}

impl ObstacleSpec {
    pub fn known(&self) -> bool {
        match self {
            ObstacleSpec::Box { known, .. } | ObstacleSpec::Disk { known, .. } => *known,
        }
    }

    fn primitive(&self) -> Result<ObstaclePrimitive, ScenarioError> {
        match self {
            ObstacleSpec::Box { min, max, known } => {
                ObstaclePrimitive::boxed(min.clone(), max.clone(), *known)
                    .map_err(|e| invalid("obstacle", e.to_string()))
            }
            ObstacleSpec::Disk {
                center,
                radius,
                known,
            } => Ok(ObstaclePrimitive::ball(center.clone(), *radius, *known)),
        }
    }
}

/// A validated scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub dim: usize,
    pub robots: usize,
    pub workspace_min: Vec<f64>,
    pub workspace_max: Vec<f64>,
    pub start: Vec<f64>,
    pub target: Vec<f64>,
    pub obstacles: Vec<ObstacleSpec>,
    pub sensing_radius: f64,
    pub step: f64,
    pub connect_radius: Option<f64>,
    pub stop_fraction: f64,
    pub pair_distance: Option<(f64, f64)>,
    pub escape: EscapeMode,
    pub beta: Option<f64>,
    pub grid_step: Option<f64>,
    pub max_vertices: usize,
    pub svg: bool,
}

/// Raw directives before validation. Obstacles keep their source line.
#[derive(Debug, Default, Clone)]
struct Draft {
    dim: Option<usize>,
    robots: Option<usize>,
    workspace: Option<Vec<f64>>,
    start: Option<Vec<f64>>,
    target: Option<Vec<f64>>,
    obstacles: Vec<(usize, RawObstacle)>,
    sensing_radius: Option<f64>,
    step: Option<f64>,
    connect_radius: Option<f64>,
    stop_fraction: Option<f64>,
    pair_distance: Option<(f64, f64)>,
    escape: Option<EscapeMode>,
    beta: Option<f64>,
    grid_step: Option<f64>,
    max_vertices: Option<usize>,
    svg: Option<bool>,
}

#[derive(Debug, Clone)]
enum RawObstacle {
    Box(Vec<f64>, bool),
    Disk(Vec<f64>, bool),
}

fn number(tok: &str, line: usize) -> Result<f64, ScenarioError> {
    match tok.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(parse_err(line, format!("`{tok}` is not a finite number"))),
    }
}

fn count(tok: &str, line: usize) -> Result<usize, ScenarioError> {
    tok.parse::<usize>()
        .map_err(|_| parse_err(line, format!("`{tok}` is not a non-negative integer")))
}

fn numbers(toks: &[&str], line: usize) -> Result<Vec<f64>, ScenarioError> {
    toks.iter().map(|t| number(t, line)).collect()
}

fn single<'a>(key: &str, toks: &[&'a str], line: usize) -> Result<&'a str, ScenarioError> {
    match toks {
        [one] => Ok(one),
        _ => Err(parse_err(line, format!("`{key}` takes exactly one value"))),
    }
}

fn set<T>(
    slot: &mut Option<T>,
    value: T,
    key: &str,
    line: usize,
    replace: bool,
) -> Result<(), ScenarioError> {
    if slot.is_some() && !replace {
        return Err(parse_err(line, format!("duplicate `{key}`")));
    }
    *slot = Some(value);
    Ok(())
}

impl Draft {
    fn directive(
        &mut self,
        key: &str,
        toks: &[&str],
        line: usize,
        replace: bool,
    ) -> Result<(), ScenarioError> {
        match key {
            "dim" => set(
                &mut self.dim,
                count(single(key, toks, line)?, line)?,
                key,
                line,
                replace,
            ),
            "robots" => set(
                &mut self.robots,
                count(single(key, toks, line)?, line)?,
                key,
                line,
                replace,
            ),
            "workspace" => set(
                &mut self.workspace,
                numbers(toks, line)?,
                key,
                line,
                replace,
            ),
            "start" => set(&mut self.start, numbers(toks, line)?, key, line, replace),
            "target" => set(&mut self.target, numbers(toks, line)?, key, line, replace),
            "sensing_radius" => set(
                &mut self.sensing_radius,
                number(single(key, toks, line)?, line)?,
                key,
                line,
                replace,
            ),
            "step" => set(
                &mut self.step,
                number(single(key, toks, line)?, line)?,
                key,
                line,
                replace,
            ),
            "connect_radius" => set(
                &mut self.connect_radius,
                number(single(key, toks, line)?, line)?,
                key,
                line,
                replace,
            ),
            "stop_fraction" => set(
                &mut self.stop_fraction,
                number(single(key, toks, line)?, line)?,
                key,
                line,
                replace,
            ),
            "beta" => set(
                &mut self.beta,
                number(single(key, toks, line)?, line)?,
                key,
                line,
                replace,
            ),
            "grid_step" => set(
                &mut self.grid_step,
                number(single(key, toks, line)?, line)?,
                key,
                line,
                replace,
            ),
            "max_vertices" => set(
                &mut self.max_vertices,
                count(single(key, toks, line)?, line)?,
                key,
                line,
                replace,
            ),
            "pair_distance" => match toks {
                [a, b] => set(
                    &mut self.pair_distance,
                    (number(a, line)?, number(b, line)?),
                    key,
                    line,
                    replace,
                ),
                _ => Err(parse_err(line, "`pair_distance` takes `dmin dmax`")),
            },
            "escape" => {
                let mode = single(key, toks, line)?
                    .parse::<EscapeMode>()
                    .map_err(|e| parse_err(line, e))?;
                set(&mut self.escape, mode, key, line, replace)
            }
            "svg" => {
                let v = match single(key, toks, line)? {
                    "true" | "on" | "1" => true,
                    "false" | "off" | "0" => false,
                    other => {
                        return Err(parse_err(
                            line,
                            format!("`svg` expects true/false, got `{other}`"),
                        ))
                    }
                };
                set(&mut self.svg, v, key, line, replace)
            }
            "obstacle" => {
                let (kind, rest) = toks
                    .split_first()
                    .ok_or_else(|| parse_err(line, "`obstacle` needs a shape (`box` or `disk`)"))?;
                let (known, rest) = match rest.split_last() {
                    Some((&"known", head)) => (true, head),
                    _ => (false, rest),
                };
                let vals = numbers(rest, line)?;
                let raw = match *kind {
                    "box" => RawObstacle::Box(vals, known),
                    "disk" => RawObstacle::Disk(vals, known),
                    other => {
                        return Err(parse_err(line, format!("unknown obstacle shape `{other}`")))
                    }
                };
                self.obstacles.push((line, raw));
                Ok(())
            }
            other => Err(parse_err(line, format!("unknown key `{other}`"))),
        }
    }

    fn finish(self) -> Result<Scenario, ScenarioError> {
        let dim = self.dim.ok_or_else(|| invalid("dim", "missing"))?;
        if dim == 0 {
            return Err(invalid("dim", "must be positive"));
        }
        let robots = self.robots.unwrap_or(1);
        if robots == 0 || dim % robots != 0 {
            return Err(invalid(
                "robots",
                format!("{robots} robots do not divide dimension {dim}"),
            ));
        }
        let wdim = dim / robots;
        let (workspace_min, workspace_max) = match self.workspace {
            None => (vec![0.0; wdim], vec![1.0; wdim]),
            Some(w) if w.len() == 2 * wdim => {
                let (lo, hi) = w.split_at(wdim);
                if lo.iter().zip(hi).any(|(a, b)| a >= b) {
                    return Err(invalid("workspace", "each max must exceed its min"));
                }
                (lo.to_vec(), hi.to_vec())
            }
            Some(w) => {
                return Err(invalid(
                    "workspace",
                    format!("expected {} numbers, got {}", 2 * wdim, w.len()),
                ))
            }
        };
        let start = self.start.ok_or_else(|| invalid("start", "missing"))?;
        let target = self.target.ok_or_else(|| invalid("target", "missing"))?;
        for (name, v) in [("start", &start), ("target", &target)] {
            if v.len() != dim {
                return Err(invalid(
                    name,
                    format!("expected {dim} coordinates, got {}", v.len()),
                ));
            }
        }
        let sensing_radius = self
            .sensing_radius
            .ok_or_else(|| invalid("sensing_radius", "missing"))?;
        if sensing_radius <= 0.0 {
            return Err(invalid("sensing_radius", "must be positive"));
        }
        let step = self.step.ok_or_else(|| invalid("step", "missing"))?;
        if step <= 0.0 {
            return Err(invalid("step", "must be positive"));
        }
        if let Some(r) = self.connect_radius {
            if r <= 0.0 {
                return Err(invalid("connect_radius", "must be positive"));
            }
        }
        let stop_fraction = self.stop_fraction.unwrap_or(0.5);
        if !(stop_fraction > 0.0 && stop_fraction < 1.0) {
            return Err(invalid("stop_fraction", "must lie in (0, 1)"));
        }
        if let Some((dmin, dmax)) = self.pair_distance {
            if dmin < 0.0 || dmin >= dmax {
                return Err(invalid("pair_distance", "need 0 <= dmin < dmax"));
            }
        }
        let escape = self.escape.unwrap_or(EscapeMode::None);
        if escape == EscapeMode::FixedShape && robots < 2 {
            return Err(invalid("escape", "fixed-shape needs at least two robots"));
        }
        if let Some(b) = self.beta {
            if b <= 0.0 {
                return Err(invalid("beta", "must be positive"));
            }
        }
        if let Some(g) = self.grid_step {
            if g <= 0.0 {
                return Err(invalid("grid_step", "must be positive"));
            }
        }
        let max_vertices = self.max_vertices.unwrap_or(2_000_000);
        if max_vertices == 0 {
            return Err(invalid("max_vertices", "must be positive"));
        }
        let mut obstacles = Vec::with_capacity(self.obstacles.len());
        for (line, raw) in self.obstacles {
            let field = format!("obstacle (line {line})");
            let spec = match raw {
                RawObstacle::Box(v, known) => {
                    if v.len() != 2 * wdim {
                        return Err(invalid(
                            field,
                            format!("box needs {} numbers, got {}", 2 * wdim, v.len()),
                        ));
                    }
                    let (lo, hi) = v.split_at(wdim);
                    if let Some(axis) = (0..wdim).find(|&i| hi[i] < lo[i]) {
                        return Err(invalid(field, format!("max below min on axis {axis}")));
                    }
                    ObstacleSpec::Box {
                        min: lo.to_vec(),
                        max: hi.to_vec(),
                        known,
                    }
                }
                RawObstacle::Disk(v, known) => {
                    if v.len() != wdim + 1 {
                        return Err(invalid(
                            field,
                            format!("disk needs {} numbers, got {}", wdim + 1, v.len()),
                        ));
                    }
                    let radius = v[wdim];
                    if radius <= 0.0 {
                        return Err(invalid(field, "radius must be positive"));
                    }
                    ObstacleSpec::Disk {
                        center: v[..wdim].to_vec(),
                        radius,
                        known,
                    }
                }
            };
            obstacles.push(spec);
        }
        let scn = Scenario {
            dim,
            robots,
            workspace_min,
            workspace_max,
            start,
            target,
            obstacles,
            sensing_radius,
            step,
            connect_radius: self.connect_radius,
            stop_fraction,
            pair_distance: self.pair_distance,
            escape,
            beta: self.beta,
            grid_step: self.grid_step,
            max_vertices,
            svg: self.svg.unwrap_or(false),
        };
        let env = KnownEnvironment::fully_known(scn.truth()?.all_known().into());
        for (name, v) in [("start", &scn.start), ("target", &scn.target)] {
            if !env.point_feasible(&Configuration::new(v.clone())) {
                return Err(invalid(
                    name,
                    "infeasible under the ground truth; unsatisfiable by construction",
                ));
            }
        }
        Ok(scn)
    }
}

fn tokens(raw: &str) -> Vec<&str> {
    raw.split('#')
        .next()
        .unwrap_or("")
        .split_whitespace()
        .collect()
}

fn draft(text: &str) -> Result<Draft, ScenarioError> {
    let mut d = Draft::default();
    for (i, raw) in text.lines().enumerate() {
        if let Some((key, rest)) = tokens(raw).split_first() {
            d.directive(key, rest, i + 1, false)?;
        }
    }
    Ok(d)
}

/// Parse and validate scenario text.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    draft(text)?.finish()
}

/// Parse, then apply `KEY=VALUE` overrides before validation. Scalar keys are
/// replaced; `obstacle` appends.
pub fn parse_with_overrides(text: &str, overrides: &[String]) -> Result<Scenario, ScenarioError> {
    let mut d = draft(text)?;
    for (i, o) in overrides.iter().enumerate() {
        let (key, value) = o
            .split_once('=')
            .ok_or_else(|| invalid("override", format!("`{o}` is not KEY=VALUE")))?;
        let toks: Vec<&str> = value.split_whitespace().collect();
        d.directive(key.trim(), &toks, i + 1, true)
            .map_err(|e| match e {
                ScenarioError::Parse { msg, .. } => invalid(format!("override {key}"), msg),
                other => other,
            })?;
    }
    d.finish()
}

fn join(v: &[f64]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

impl Scenario {
    pub fn workspace_dim(&self) -> usize {
        self.dim / self.robots
    }

    /// Canonical text form; parsing it yields the same scenario.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "dim {}", self.dim);
        let _ = writeln!(out, "robots {}", self.robots);
        let _ = writeln!(
            out,
            "workspace {} {}",
            join(&self.workspace_min),
            join(&self.workspace_max)
        );
        let _ = writeln!(out, "start {}", join(&self.start));
        let _ = writeln!(out, "target {}", join(&self.target));
        let _ = writeln!(out, "sensing_radius {}", self.sensing_radius);
        let _ = writeln!(out, "step {}", self.step);
        if let Some(r) = self.connect_radius {
            let _ = writeln!(out, "connect_radius {r}");
        }
        let _ = writeln!(out, "stop_fraction {}", self.stop_fraction);
        if let Some((a, b)) = self.pair_distance {
            let _ = writeln!(out, "pair_distance {a} {b}");
        }
        let _ = writeln!(out, "escape {}", self.escape.as_str());
        if let Some(b) = self.beta {
            let _ = writeln!(out, "beta {b}");
        }
        if let Some(g) = self.grid_step {
            let _ = writeln!(out, "grid_step {g}");
        }
        let _ = writeln!(out, "max_vertices {}", self.max_vertices);
        let _ = writeln!(out, "svg {}", self.svg);
        for o in &self.obstacles {
            let (body, known) = match o {
                ObstacleSpec::Box { min, max, known } => {
                    (format!("box {} {}", join(min), join(max)), *known)
                }
                ObstacleSpec::Disk {
                    center,
                    radius,
                    known,
                } => (format!("disk {} {radius}", join(center)), *known),
            };
            let _ = writeln!(out, "obstacle {body}{}", if known { " known" } else { "" });
        }
        out
    }

    pub fn truth(&self) -> Result<GroundTruth, ScenarioError> {
        let ws = Aabb::new(self.workspace_min.clone(), self.workspace_max.clone())
            .map_err(|e| invalid("workspace", e.to_string()))?;
        let prims = self
            .obstacles
            .iter()
            .map(ObstacleSpec::primitive)
            .collect::<Result<Vec<_>, _>>()?;
        let truth = GroundTruth::new(ws, prims).map_err(|e| invalid("obstacle", e.to_string()))?;
        Ok(match self.pair_distance {
            Some((dmin, dmax)) => truth.with_pair_band(PairBand { dmin, dmax }),
            None => truth,
        })
    }

    pub fn truth_arc(&self) -> Result<Arc<GroundTruth>, ScenarioError> {
        self.truth().map(Arc::new)
    }

    pub fn start_config(&self) -> Configuration {
        Configuration::new(self.start.clone())
    }

    pub fn target_config(&self) -> Configuration {
        Configuration::new(self.target.clone())
    }

    pub fn planner_config(&self) -> PlannerConfig {
        let mut cfg = PlannerConfig::new(self.step, self.sensing_radius)
            .with_stop_fraction(self.stop_fraction)
            .with_max_vertices(self.max_vertices)
            .with_escape(TrapEscapePolicy::new(self.escape));
        if let Some(r) = self.connect_radius {
            cfg = cfg.with_connect_radius(r);
        }
        cfg
    }
}
