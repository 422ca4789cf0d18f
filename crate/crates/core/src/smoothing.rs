//! Clamped uniform cubic B-spline smoothing of a waypoint route.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{EllipseObstacle, Point2};

pub const DEFAULT_SAMPLES_PER_SEGMENT: usize = 20;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SmoothingError {
    #[error("spline parameter {0} outside [0, 1]")]
    ParameterOutOfRange(f64),
    #[error("need at least 2 waypoints, got {0}")]
    TooFewWaypoints(usize),
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
}

/// Uniform cubic B-spline weights of the four control points at `t`.
pub fn basis(t: f64) -> Result<[f64; 4], SmoothingError> {
    if !(0.0..=1.0).contains(&t) {
        return Err(SmoothingError::ParameterOutOfRange(t));
    }
    Ok(weights(t))
}

fn weights(t: f64) -> [f64; 4] {
    let t2 = t * t;
    let t3 = t2 * t;
    let u = 1.0 - t;
    [
        u * u * u / 6.0,
        (3.0 * t3 - 6.0 * t2 + 4.0) / 6.0,
        (-3.0 * t3 + 3.0 * t2 + 3.0 * t + 1.0) / 6.0,
        t3 / 6.0,
    ]
}

/// Point on the spline segment generated by `ctrl` at parameter `t`.
pub fn evaluate(ctrl: [Point2; 4], t: f64) -> Result<Point2, SmoothingError> {
    let w = basis(t)?;
    Ok(combine(&ctrl, w))
}

fn combine(ctrl: &[Point2], w: [f64; 4]) -> Point2 {
    let x = w[0] * ctrl[0].x + w[1] * ctrl[1].x + w[2] * ctrl[2].x + w[3] * ctrl[3].x;
    let y = w[0] * ctrl[0].y + w[1] * ctrl[1].y + w[2] * ctrl[2].y + w[3] * ctrl[3].y;
    Point2::new(x, y)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothedCurve {
    pub samples: Vec<Point2>,
    /// Discrete curvature at each sample, 1/km. Zero at both ends.
    pub curvature: Vec<f64>,
    pub samples_per_segment: usize,
}

impl SmoothedCurve {
    /// Wraps arbitrary samples, computing their discrete curvature.
    pub fn from_samples(samples: Vec<Point2>, samples_per_segment: usize) -> Self {
        let mut curvature = vec![0.0; samples.len()];
        for i in 1..samples.len().saturating_sub(1) {
            curvature[i] = circumscribed_curvature(samples[i - 1], samples[i], samples[i + 1]);
        }
        Self {
            samples,
            curvature,
            samples_per_segment,
        }
    }

    /// True when no sample is inside any inflated obstacle (beyond `eps`).
    pub fn clears<'a>(&self, obstacles: impl IntoIterator<Item = &'a EllipseObstacle>, eps: f64) -> bool {
        let obstacles: Vec<&EllipseObstacle> = obstacles.into_iter().collect();
        self.samples
            .iter()
            .all(|&p| obstacles.iter().all(|o| o.signed_margin(p) >= -eps))
    }
}

/// Control polygon with both ends repeated three times.
pub fn clamped_control_points(waypoints: &[Point2]) -> Vec<Point2> {
    let (first, last) = (waypoints[0], waypoints[waypoints.len() - 1]);
    let mut ctrl = vec![first, first];
    ctrl.extend_from_slice(waypoints);
    ctrl.extend([last, last]);
    ctrl
}

pub fn smooth(waypoints: &[Point2], samples_per_segment: usize) -> Result<SmoothedCurve, SmoothingError> {
    if waypoints.len() < 2 {
        return Err(SmoothingError::TooFewWaypoints(waypoints.len()));
    }
    if samples_per_segment < 2 {
        return Err(SmoothingError::TooFewSamples {
            needed: 2,
            got: samples_per_segment,
        });
    }
    let ctrl = clamped_control_points(waypoints);
    let table: Vec<[f64; 4]> = (0..samples_per_segment)
        .map(|k| weights(k as f64 / samples_per_segment as f64))
        .collect();
    let segments = ctrl.len() - 3;
    let mut samples = Vec::with_capacity(segments * samples_per_segment + 1);
    for quad in ctrl.windows(4) {
        samples.extend(table.iter().map(|&w| combine(quad, w)));
    }
    samples.push(combine(&ctrl[segments - 1..], weights(1.0)));
    Ok(SmoothedCurve::from_samples(samples, samples_per_segment))
}

/// Curvature of the circle through three points; 0 when they are collinear
/// or two coincide.
pub fn circumscribed_curvature(a: Point2, b: Point2, c: Point2) -> f64 {
    let (ab, bc, ca) = (a.distance(b), b.distance(c), c.distance(a));
    let denom = ab * bc * ca;
    if denom == 0.0 {
        return 0.0;
    }
    // sine of the angle at a; below this the triple is collinear up to
    // rounding and the quotient is noise
    let sine = (b - a).cross(c - a).abs() / (ab * ca);
    if sine < 1e-10 {
        return 0.0;
    }
    let k = 2.0 * sine / bc;
    if k.is_finite() {
        k
    } else {
        0.0
    }
}

pub fn max_curvature(curve: &SmoothedCurve) -> Result<f64, SmoothingError> {
    if curve.samples.len() < 3 {
        return Err(SmoothingError::TooFewSamples {
            needed: 3,
            got: curve.samples.len(),
        });
    }
    Ok(curve.curvature.iter().copied().fold(0.0, f64::max))
}
