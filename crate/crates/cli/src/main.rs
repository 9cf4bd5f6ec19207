use std::fs;
use std::path::{Path, PathBuf};
use std::process;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use fp_plan_cli::{
    parse_with_overrides, run_plan, run_region, ExitCode, RunError, RunOptions, Scenario,
};
use fp_planner::planner::PlanMetrics;
use rayon::prelude::*;

#[derive(Parser)]
#[command(
    name = "fp-plan",
    version,
    about = "Lattice path planning in unknown environments"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// Scenario file.
    #[arg(long)]
    scenario: PathBuf,
    /// Replace a scenario key, e.g. `--override step=0.05`.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the planner and write trajectory, metrics and graph dumps.
    Plan {
        #[command(flatten)]
        common: Common,
        /// Output directory, created if missing.
        #[arg(long)]
        out: PathBuf,
        /// Write SVG renderings (2D workspaces only).
        #[arg(long)]
        svg: bool,
        /// Also write the metrics table here.
        #[arg(long)]
        metrics: Option<PathBuf>,
    },
    /// Build the search region and check the planner trajectory against it.
    Region {
        #[command(flatten)]
        common: Common,
        /// Output directory, created if missing.
        #[arg(long)]
        out: PathBuf,
        /// Write SVG renderings (2D workspaces only).
        #[arg(long)]
        svg: bool,
        #[arg(
            long,
            hide = true,
            value_delimiter = ',',
            allow_negative_numbers = true
        )]
        shift_region: Option<Vec<f64>>,
    },
    /// Plan many scenarios in parallel, one output directory each.
    Batch {
        /// Scenario files, or directories of `*.scn` files.
        #[arg(long, required = true)]
        scenario: Vec<PathBuf>,
        /// Replace a key in every scenario.
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Output directory, created if missing.
        #[arg(long)]
        out: PathBuf,
        /// Write SVG renderings (2D workspaces only).
        #[arg(long)]
        svg: bool,
        /// Also write the combined metrics table here.
        #[arg(long)]
        metrics: Option<PathBuf>,
    },
    /// Parse and validate, printing the normalised scenario.
    Validate {
        #[command(flatten)]
        common: Common,
    },
}

fn load(path: &Path, overrides: &[String]) -> Result<Scenario, RunError> {
    let text = fs::read_to_string(path).map_err(|e| RunError {
        code: ExitCode::Invalid,
        msg: format!("{}: {e}", path.display()),
    })?;
    parse_with_overrides(&text, overrides).map_err(|e| RunError {
        code: ExitCode::Invalid,
        msg: format!("{}: {e}", path.display()),
    })
}

fn scenario_files(inputs: &[PathBuf]) -> anyhow::Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for p in inputs {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(p)
                .with_context(|| format!("reading {}", p.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x == "scn"))
                .collect();
            found.sort();
            files.extend(found);
        } else {
            files.push(p.clone());
        }
    }
    if files.is_empty() {
        bail!("no scenario files found");
    }
    Ok(files)
}

fn report(e: &RunError) -> i32 {
    eprintln!("error: {}", e.msg);
    e.code.code()
}

fn run(cli: Cli) -> i32 {
    match cli.cmd {
        Cmd::Plan {
            common,
            out,
            svg,
            metrics,
        } => {
            let res = load(&common.scenario, &common.overrides).and_then(|scn| {
                run_plan(
                    &scn,
                    &out,
                    &RunOptions {
                        svg,
                        region_shift: None,
                    },
                )
            });
            match res {
                Ok(rep) => {
                    if let Some(m) = metrics {
                        if let Err(e) = fs::write(&m, rep.result.metrics_csv()) {
                            eprintln!("error: {}: {e}", m.display());
                            return ExitCode::Internal.code();
                        }
                    }
                    eprintln!("{}", rep.result.status.as_str());
                    if let Some(why) = &rep.result.limit {
                        eprintln!("{why}");
                    }
                    rep.code.code()
                }
                Err(e) => report(&e),
            }
        }
        Cmd::Region {
            common,
            out,
            svg,
            shift_region,
        } => {
            let opts = RunOptions {
                svg,
                region_shift: shift_region,
            };
            match load(&common.scenario, &common.overrides)
                .and_then(|scn| run_region(&scn, &out, &opts))
            {
                Ok(rep) => {
                    eprintln!(
                        "contains_path {} ({} of {} samples outside)",
                        rep.contained, rep.outside, rep.samples
                    );
                    rep.code.code()
                }
                Err(e) => report(&e),
            }
        }
        Cmd::Batch {
            scenario,
            overrides,
            out,
            svg,
            metrics,
        } => {
            let files = match scenario_files(&scenario) {
                Ok(f) => f,
                Err(e) => {
                    eprintln!("error: {e:#}");
                    return ExitCode::Invalid.code();
                }
            };
            let opts = RunOptions {
                svg,
                region_shift: None,
            };
            let results: Vec<_> = files
                .par_iter()
                .map(|f| {
                    let stem = f
                        .file_stem()
                        .map(|s| s.to_string_lossy().into_owned())
                        .unwrap_or_default();
                    let res =
                        load(f, &overrides).and_then(|scn| run_plan(&scn, &out.join(&stem), &opts));
                    (stem, res)
                })
                .collect();
            let mut table = format!("scenario,status,{}\n", PlanMetrics::HEADER);
            let mut worst = ExitCode::Ok;
            for (stem, res) in &results {
                match res {
                    Ok(rep) => {
                        table.push_str(&format!(
                            "{stem},{},{}\n",
                            rep.result.status.as_str(),
                            rep.result.metrics.csv_row()
                        ));
                        worst = worst.max(rep.code);
                    }
                    Err(e) => {
                        eprintln!("{stem}: error: {}", e.msg);
                        worst = worst.max(e.code);
                    }
                }
            }
            let path = metrics.unwrap_or_else(|| out.join("metrics.csv"));
            if let Err(e) = fs::create_dir_all(&out).and_then(|_| fs::write(&path, table)) {
                eprintln!("error: {}: {e}", path.display());
                return ExitCode::Internal.code();
            }
            worst.code()
        }
        Cmd::Validate { common } => match load(&common.scenario, &common.overrides) {
            Ok(scn) => {
                print!("{}", scn.serialize());
                ExitCode::Ok.code()
            }
            Err(e) => report(&e),
        },
    }
}

fn main() {
    process::exit(run(Cli::parse()));
}
