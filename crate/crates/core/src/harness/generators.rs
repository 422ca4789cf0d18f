//! Seeded random obstacle fields in five classes.
//!
//! | class | obstacles | target coverage |
//! |-------|-----------|-----------------|
//! | E1 | sparse ellipses, two corridor bands kept clear | 0.15 |
//! | E2 | sparse circles | 0.15 |
//! | E3 | dense circles, pairwise disjoint | 0.30 |
//! | E4 | dense circles, may overlap | 0.35 |
//! | E5 | as E4 with two corridor bands | 0.35 |
//!
//! Coverage is the summed inflated area over the field area; overlaps are
//! not subtracted. The start sits near the lower-left corner and the end
//! near the upper-right one.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::HarnessError;
use crate::geometry::{EllipseObstacle, Point2};
use crate::scenario::{Bounds, Scenario};

pub const DEFAULT_R_SAFE: f64 = 0.5;
/// Radii are drawn uniformly from this band around the mean.
const RADIUS_SPREAD: (f64, f64) = (0.6, 1.4);
const PLACEMENT_ATTEMPTS: usize = 20_000;
/// Minimum signed margin of the start and end against every obstacle.
const ENDPOINT_MARGIN: f64 = 0.05;
const MIN_RADIUS: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EnvKind {
    E1,
    E2,
    E3,
    E4,
    E5,
}

impl EnvKind {
    pub const ALL: [EnvKind; 5] = [EnvKind::E1, EnvKind::E2, EnvKind::E3, EnvKind::E4, EnvKind::E5];

    fn coverage(self) -> f64 {
        match self {
            EnvKind::E1 | EnvKind::E2 => 0.15,
            EnvKind::E3 => 0.30,
            EnvKind::E4 | EnvKind::E5 => 0.35,
        }
    }

    fn has_corridors(self) -> bool {
        matches!(self, EnvKind::E1 | EnvKind::E5)
    }
}

impl fmt::Display for EnvKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            EnvKind::E1 => "E1",
            EnvKind::E2 => "E2",
            EnvKind::E3 => "E3",
            EnvKind::E4 => "E4",
            EnvKind::E5 => "E5",
        };
        f.write_str(s)
    }
}

impl FromStr for EnvKind {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "E1" => Ok(EnvKind::E1),
            "E2" => Ok(EnvKind::E2),
            "E3" => Ok(EnvKind::E3),
            "E4" => Ok(EnvKind::E4),
            "E5" => Ok(EnvKind::E5),
            _ => Err(HarnessError::BadArgument(format!("unknown environment class {s:?}"))),
        }
    }
}

/// `E3_n60_f100_s42`
pub fn instance_name(kind: EnvKind, n: usize, field: f64, seed: u64) -> String {
    format!("{kind}_n{n}_f{field}_s{seed}")
}

/// Environment label and seed encoded in an instance name, if any.
pub fn parse_instance_name(name: &str) -> (Option<String>, Option<u64>) {
    let mut parts = name.split('_');
    let env = parts.next().filter(|s| !s.is_empty()).map(str::to_string);
    let seed = name
        .rsplit('_')
        .next()
        .and_then(|s| s.strip_prefix('s'))
        .and_then(|s| s.parse().ok());
    (env, seed)
}

/// A band kept free of obstacles, either horizontal (`vertical == false`,
/// spanning all x) or vertical.
#[derive(Debug, Clone, Copy)]
struct Corridor {
    vertical: bool,
    at: f64,
    half_width: f64,
}

impl Corridor {
    fn clear_of(&self, center: Point2, reach: f64) -> bool {
        let c = if self.vertical { center.x } else { center.y };
        (c - self.at).abs() > self.half_width + reach
    }
}

pub fn generate_environment(kind: EnvKind, field: f64, n: usize, seed: u64) -> Result<Scenario, HarnessError> {
    if n == 0 {
        return Err(HarnessError::BadArgument("obstacle count must be at least 1".into()));
    }
    if !(field > 0.0 && field.is_finite()) {
        return Err(HarnessError::BadArgument(format!("field size must be positive, got {field}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r_safe = DEFAULT_R_SAFE;
    let bounds = Bounds::square(field);

    let spread_sq = {
        let (lo, hi) = RADIUS_SPREAD;
        let mid: f64 = (lo + hi) / 2.0;
        mid * mid + (hi - lo) * (hi - lo) / 12.0
    };
    let mean_eff = (kind.coverage() * field * field / (n as f64 * std::f64::consts::PI * spread_sq)).sqrt();
    let mut radii: Vec<f64> = (0..n)
        .map(|_| (mean_eff * rng.gen_range(RADIUS_SPREAD.0..RADIUS_SPREAD.1) - r_safe).max(MIN_RADIUS))
        .collect();
    if kind == EnvKind::E3 {
        // biggest first packs much better
        radii.sort_by(|a, b| b.total_cmp(a));
    }

    let corridors: Vec<Corridor> = if kind.has_corridors() {
        vec![
            Corridor {
                vertical: false,
                at: field * rng.gen_range(0.3..0.7),
                half_width: 0.025 * field,
            },
            Corridor {
                vertical: true,
                at: field * rng.gen_range(0.3..0.7),
                half_width: 0.025 * field,
            },
        ]
    } else {
        Vec::new()
    };

    // endpoints come first; obstacles are kept off them
    let mut endpoint = |corner: f64| {
        let jitter = 0.04 * field;
        Point2::new(
            (corner * field + rng.gen_range(-jitter..jitter)).clamp(0.0, field),
            (corner * field + rng.gen_range(-jitter..jitter)).clamp(0.0, field),
        )
    };
    let start = endpoint(0.05);
    let end = endpoint(0.95);

    let mut obstacles: Vec<EllipseObstacle> = Vec::with_capacity(n);
    for (id, &r) in radii.iter().enumerate() {
        let mut placed = None;
        for _ in 0..PLACEMENT_ATTEMPTS {
            let center = Point2::new(rng.gen_range(0.0..field), rng.gen_range(0.0..field));
            let obstacle = match kind {
                EnvKind::E1 => {
                    let aspect: f64 = rng.gen_range(1.5..3.0);
                    let theta = rng.gen_range(0.0..std::f64::consts::PI);
                    EllipseObstacle::new(id, center, r * aspect.sqrt(), r / aspect.sqrt(), theta, r_safe)
                }
                _ => EllipseObstacle::circle(id, center, r, r_safe),
            }
            .map_err(|e| HarnessError::GenerationFailed(e.to_string()))?;
            let reach = obstacle.effective_axes().0;
            if !corridors.iter().all(|c| c.clear_of(center, reach)) {
                continue;
            }
            if obstacle.signed_margin(start) <= ENDPOINT_MARGIN || obstacle.signed_margin(end) <= ENDPOINT_MARGIN {
                continue;
            }
            if kind == EnvKind::E3
                && obstacles
                    .iter()
                    .any(|o| o.center().distance(center) <= o.effective_axes().0 + reach)
            {
                continue;
            }
            placed = Some(obstacle);
            break;
        }
        match placed {
            Some(o) => obstacles.push(o),
            None => {
                return Err(HarnessError::GenerationFailed(format!(
                    "could not place obstacle {id} of {n} in {kind} field {field}"
                )))
            }
        }
    }


    let scenario = Scenario::new(instance_name(kind, n, field, seed), bounds, start, end, r_safe, obstacles);
    scenario.validate()?;
    Ok(scenario)
}
