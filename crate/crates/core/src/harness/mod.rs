//! Scenario generators, the grid reference planner, benchmarking and
//! rendering used by the command-line tool and the test suites.

pub mod astar;
pub mod bench;
pub mod generators;
pub mod maze;
pub mod output;
pub mod svg;

use thiserror::Error;

use crate::planner::PlanError;
use crate::scenario::ScenarioError;

pub use astar::grid_astar_oracle;
pub use bench::{run_suite, BenchmarkRow};
pub use generators::{generate_environment, EnvKind};
pub use maze::{canned_maze, generate_maze, MazeSpec, WallSpec};
pub use output::PlanOutput;
pub use svg::render_svg;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("generation failed: {0}")]
    GenerationFailed(String),
    #[error("bad argument: {0}")]
    BadArgument(String),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
