//! Maze-like scenarios built from straight walls.
//!
//! Each wall becomes one long thin ellipse stretched a little past both
//! wall ends, so walls that meet at a corner overlap and leave no gap.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::geometry::{EllipseObstacle, Point2};
use crate::scenario::{Bounds, Scenario};

pub const MAZE_COUNT: usize = 6;
const WALL_THICKNESS: f64 = 2.0;
const ENDPOINT_JITTER: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WallSpec {
    pub from: Point2,
    pub to: Point2,
    pub thickness: f64,
}

impl WallSpec {
    pub fn new(from: Point2, to: Point2) -> Self {
        Self {
            from,
            to,
            thickness: WALL_THICKNESS,
        }
    }

    pub fn to_obstacle(&self, id: usize, r_safe: f64) -> Result<EllipseObstacle, HarnessError> {
        let d = self.to - self.from;
        let half = d.norm() / 2.0;
        let b = self.thickness / 2.0;
        let a = (half + self.thickness).max(b);
        EllipseObstacle::new(id, self.from.lerp(self.to, 0.5), a, b, d.y.atan2(d.x), r_safe)
            .map_err(|e| HarnessError::GenerationFailed(e.to_string()))
    }
}

/// Which side of a U-trap is open.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Opening {
    Left,
    Right,
    Down,
    Up,
}

/// Three walls of an axis-aligned square of side `size` around `center`,
/// leaving the `open` side out.
pub fn u_trap(center: Point2, size: f64, open: Opening) -> Vec<WallSpec> {
    let h = size / 2.0;
    let p = |x: f64, y: f64| Point2::new(center.x + x, center.y + y);
    let (bl, br, tl, tr) = (p(-h, -h), p(h, -h), p(-h, h), p(h, h));
    let sides = [
        (Opening::Left, WallSpec::new(bl, tl)),
        (Opening::Right, WallSpec::new(br, tr)),
        (Opening::Down, WallSpec::new(bl, br)),
        (Opening::Up, WallSpec::new(tl, tr)),
    ];
    sides.into_iter().filter(|(s, _)| *s != open).map(|(_, w)| w).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MazeSpec {
    pub name: String,
    pub field: f64,
    pub start: Point2,
    pub end: Point2,
    pub r_safe: f64,
    pub walls: Vec<WallSpec>,
}

/// Builds the scenario. The seed jitters the start and end points within
/// half a kilometre; the walls are fixed.
pub fn generate_maze(spec: &MazeSpec, seed: u64) -> Result<Scenario, HarnessError> {
    let obstacles = spec
        .walls
        .iter()
        .enumerate()
        .map(|(id, w)| w.to_obstacle(id, spec.r_safe))
        .collect::<Result<Vec<_>, _>>()?;
    let bounds = Bounds::square(spec.field);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut place = |p: Point2| -> Result<Point2, HarnessError> {
        for _ in 0..1000 {
            let q = Point2::new(
                (p.x + rng.gen_range(-ENDPOINT_JITTER..=ENDPOINT_JITTER)).clamp(0.0, spec.field),
                (p.y + rng.gen_range(-ENDPOINT_JITTER..=ENDPOINT_JITTER)).clamp(0.0, spec.field),
            );
            if obstacles.iter().all(|o| o.signed_margin(q) > 0.0) {
                return Ok(q);
            }
        }
        Err(HarnessError::GenerationFailed(format!("{}: endpoint {p} is walled in", spec.name)))
    };
    let start = place(spec.start)?;
    let end = place(spec.end)?;
    let scenario = Scenario::new(spec.name.clone(), bounds, start, end, spec.r_safe, obstacles);
    scenario.validate()?;
    Ok(scenario)
}

fn pt(x: f64, y: f64) -> Point2 {
    Point2::new(x, y)
}

fn wall(x0: f64, y0: f64, x1: f64, y1: f64) -> WallSpec {
    WallSpec::new(pt(x0, y0), pt(x1, y1))
}

/// Canned layouts `M1` to `M6` on a 100 km field.
pub fn canned_maze(k: usize) -> Result<MazeSpec, HarnessError> {
    let (start, end, walls) = match k {
        // trap facing the start across the direct line
        1 => (pt(10.0, 50.0), pt(90.0, 50.0), u_trap(pt(50.0, 50.0), 40.0, Opening::Left)),
        // start inside a trap that opens away from the end
        2 => (pt(45.0, 50.0), pt(90.0, 50.0), u_trap(pt(45.0, 50.0), 30.0, Opening::Left)),
        // S-shaped corridor between staggered walls
        3 => (
            pt(10.0, 10.0),
            pt(90.0, 90.0),
            vec![wall(35.0, 0.0, 35.0, 75.0), wall(65.0, 25.0, 65.0, 100.0)],
        ),
        // two nested traps with opposite openings
        4 => {
            let mut w = u_trap(pt(50.0, 50.0), 24.0, Opening::Left);
            w.extend(u_trap(pt(50.0, 50.0), 50.0, Opening::Right));
            (pt(50.0, 50.0), pt(95.0, 95.0), w)
        }
        // comb of alternating walls
        5 => (
            pt(5.0, 50.0),
            pt(95.0, 50.0),
            vec![
                wall(20.0, 0.0, 20.0, 70.0),
                wall(40.0, 30.0, 40.0, 100.0),
                wall(60.0, 0.0, 60.0, 70.0),
                wall(80.0, 30.0, 80.0, 100.0),
            ],
        ),
        // trap behind a screen wall with the end in a second trap
        6 => {
            let mut w = u_trap(pt(30.0, 50.0), 26.0, Opening::Left);
            w.extend(u_trap(pt(75.0, 50.0), 26.0, Opening::Right));
            w.push(wall(52.0, 20.0, 52.0, 80.0));
            (pt(10.0, 50.0), pt(75.0, 50.0), w)
        }
        _ => {
            return Err(HarnessError::BadArgument(format!(
                "maze index must be 1..={MAZE_COUNT}, got {k}"
            )))
        }
    };
    Ok(MazeSpec {
        name: format!("M{k}"),
        field: 100.0,
        start,
        end,
        r_safe: 0.5,
        walls,
    })
}
