use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use tangentplan::harness::bench::{run_suite, timed_plan, write_csv, TIMING_RUNS};
use tangentplan::harness::generators::{generate_environment, EnvKind};
use tangentplan::harness::maze::{canned_maze, generate_maze};
use tangentplan::harness::output::{OutputOptions, PlanOutput, PlanStatus};
use tangentplan::harness::svg::write_svg;
use tangentplan::harness::HarnessError;
use tangentplan::online::{fly_popup, fly_unknown, DEFAULT_FLIGHT_LIMIT, DEFAULT_RANGE};
use tangentplan::smoothing::DEFAULT_SAMPLES_PER_SEGMENT;
use tangentplan::{plan_known, ConstraintLimits, PlannerConfig, Scenario, SensorModel};

#[derive(Parser)]
#[command(name = "tangentplan", version, about = "Elliptic-tangent UAV path planner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    /// Every obstacle is known before take-off.
    Static,
    /// Nothing is known; obstacles are discovered in flight.
    Unknown,
}

#[derive(clap::Args)]
struct Online {
    /// Limited flight distance between perceptions, km.
    #[arg(long = "l", default_value_t = DEFAULT_FLIGHT_LIMIT)]
    flight_limit: f64,
    /// Sensor range, km.
    #[arg(long, default_value_t = DEFAULT_RANGE)]
    range: f64,
}

#[derive(clap::Args)]
struct Outputs {
    /// Samples per spline segment for the smoothed curve.
    #[arg(long, default_value_t = DEFAULT_SAMPLES_PER_SEGMENT)]
    smooth: usize,
    /// Plan JSON destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    svg: Option<PathBuf>,
    /// Record wall-clock timings in the plan JSON.
    #[arg(long)]
    timing: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Plan a route for a scenario file.
    Plan {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, value_enum, default_value = "static")]
        mode: Mode,
        #[command(flatten)]
        online: Online,
        #[command(flatten)]
        outputs: Outputs,
    },
    /// Plan over the known obstacles, then fly and repair around pop-ups.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        #[command(flatten)]
        online: Online,
        #[command(flatten)]
        outputs: Outputs,
    },
    /// Generate a scenario file.
    Gen {
        /// E1..E5 or maze.
        #[arg(long)]
        env: String,
        /// Obstacle count, or the maze index 1..=6.
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 100.0)]
        field: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Benchmark every scenario in a directory against the grid reference.
    Bench {
        #[arg(long)]
        suite: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        oracle_cell: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Draw a scenario and optionally a plan.
    Render {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        plan: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

/// `Ok(false)` when the command ran but planning failed.
fn run(cli: Cli) -> Result<bool, HarnessError> {
    let config = PlannerConfig::default();
    match cli.command {
        Command::Plan {
            scenario,
            mode,
            online,
            outputs,
        } => {
            let scenario = Scenario::load(&scenario)?;
            let (label, result, time_s, flight) = match mode {
                Mode::Static => {
                    let (time, result) = timed_plan(&scenario, &config, if outputs.timing { TIMING_RUNS } else { 1 });
                    ("static", result, outputs.timing.then_some(time), None)
                }
                Mode::Unknown => {
                    let sensor = SensorModel::new(online.range);
                    let clock = Instant::now();
                    let flight = fly_unknown(&scenario, online.flight_limit, &sensor, &config)?;
                    let time = clock.elapsed().as_secs_f64();
                    ("unknown", flight.outcome, outputs.timing.then_some(time), Some(flight.log))
                }
            };
            emit(&scenario, label, result, time_s, flight, &outputs, &config)
        }
        Command::Simulate {
            scenario,
            online,
            outputs,
        } => {
            let scenario = Scenario::load(&scenario)?;
            let sensor = SensorModel::new(online.range);
            let clock = Instant::now();
            let offline = plan_known(&scenario, &config)?;
            let flight = fly_popup(
                &scenario,
                &offline,
                &scenario.popup_events,
                &sensor,
                online.flight_limit,
                &config,
            )?;
            let time = clock.elapsed().as_secs_f64();
            let log = if outputs.timing { flight.log } else { flight.log.without_timing() };
            emit(&scenario, "popup", flight.outcome, outputs.timing.then_some(time), Some(log), &outputs, &config)
        }
        Command::Gen {
            env,
            n,
            field,
            seed,
            out,
        } => {
            let scenario = if env.eq_ignore_ascii_case("maze") {
                generate_maze(&canned_maze(n)?, seed)?
            } else {
                let kind: EnvKind = env.parse()?;
                generate_environment(kind, field, n, seed)?
            };
            scenario.save(&out)?;
            Ok(true)
        }
        Command::Bench {
            suite,
            oracle_cell,
            out,
        } => {
            if !(oracle_cell > 0.0) {
                return Err(HarnessError::BadArgument(format!("oracle cell must be positive, got {oracle_cell}")));
            }
            let rows = run_suite(&suite, oracle_cell, &config)?;
            write_csv(&rows, &out)?;
            Ok(true)
        }
        Command::Render { scenario, plan, out } => {
            let scenario = Scenario::load(&scenario)?;
            let plan = plan.map(|p| read_plan(&p)).transpose()?;
            let curve = plan.as_ref().and_then(PlanOutput::curve);
            let route = plan.as_ref().map(|p| p.route.as_slice());
            write_svg(&out, &scenario, route, curve.as_ref())?;
            Ok(true)
        }
    }
}

fn emit(
    scenario: &Scenario,
    mode: &str,
    result: Result<tangentplan::PathPlan, tangentplan::PlanError>,
    time_s: Option<f64>,
    flight: Option<tangentplan::FlightLog>,
    outputs: &Outputs,
    config: &PlannerConfig,
) -> Result<bool, HarnessError> {
    if outputs.smooth == 0 {
        return Err(HarnessError::BadArgument("--smooth must be at least 1".into()));
    }
    let options = OutputOptions {
        samples_per_segment: outputs.smooth,
        limits: ConstraintLimits::default(),
        config: *config,
    };
    let output = PlanOutput::new(scenario, mode, &result, time_s, flight, &options);
    match &outputs.out {
        Some(path) => std::fs::write(path, output.to_json())?,
        None => print!("{}", output.to_json()),
    }
    if let Some(svg) = &outputs.svg {
        let route = (!output.route.is_empty()).then_some(output.route.as_slice());
        write_svg(svg, scenario, route, output.curve().as_ref())?;
    }
    if let Some(e) = &output.error {
        eprintln!("planning failed: {e}");
    }
    Ok(output.status != PlanStatus::Failed)
}

fn read_plan(path: &Path) -> Result<PlanOutput, HarnessError> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}
