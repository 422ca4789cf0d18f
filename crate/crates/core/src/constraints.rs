//! Post-hoc platform checks: flight range, leg length and turning radius.
//!
//! Nothing here feeds back into planning; violations are only reported.

use serde::{Deserialize, Serialize};

use crate::geometry::Point2;
use crate::planner::PathPlan;
use crate::smoothing::{max_curvature, SmoothedCurve};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstraintLimits {
    /// Maximum flight range, km.
    pub max_range: f64,
    /// Minimum straight leg before a turn, km.
    pub leg_min: f64,
    /// Minimum turning radius, km.
    pub r_min: f64,
}

impl Default for ConstraintLimits {
    fn default() -> Self {
        Self {
            max_range: 300.0,
            leg_min: 0.5,
            r_min: 0.2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstraintReport {
    pub total_length: f64,
    pub range_ok: bool,
    /// Shortest leg of the raw route.
    pub min_leg: f64,
    pub leg_ok: bool,
    /// Largest curvature of the smoothed curve, 1/km.
    pub max_curvature: f64,
    pub turn_ok: bool,
}

pub fn total_length(waypoints: &[Point2]) -> f64 {
    waypoints.windows(2).map(|w| w[0].distance(w[1])).sum()
}

pub fn check(plan: &PathPlan, curve: &SmoothedCurve, limits: &ConstraintLimits) -> ConstraintReport {
    let total = total_length(&plan.route);
    let min_leg = plan
        .route
        .windows(2)
        .map(|w| w[0].distance(w[1]))
        .fold(f64::INFINITY, f64::min);
    let min_leg = if min_leg.is_finite() { min_leg } else { 0.0 };
    let kappa = max_curvature(curve).unwrap_or(0.0);
    ConstraintReport {
        total_length: total,
        range_ok: total <= limits.max_range,
        min_leg,
        leg_ok: min_leg >= limits.leg_min,
        max_curvature: kappa,
        turn_ok: kappa <= 1.0 / limits.r_min,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(x: f64, y: f64) -> Point2 {
        Point2::new(x, y)
    }

    fn plan(route: Vec<Point2>) -> PathPlan {
        PathPlan {
            length: total_length(&route),
            route,
            iterations: 1,
            avoided: vec![],
            trace: vec![],
        }
    }

    fn curve_with(kappa: f64) -> SmoothedCurve {
        SmoothedCurve {
            samples: vec![p(0.0, 0.0), p(1.0, 0.0), p(2.0, 0.0)],
            curvature: vec![0.0, kappa, 0.0],
            samples_per_segment: 1,
        }
    }

    #[test]
    fn lengths() {
        assert_eq!(total_length(&[p(0.0, 0.0), p(3.0, 4.0)]), 5.0);
        assert_eq!(total_length(&[p(1.0, 1.0)]), 0.0);
        assert_eq!(total_length(&[p(0.0, 0.0), p(3.0, 4.0), p(3.0, 10.0)]), 11.0);
    }

    #[test]
    fn range_flags() {
        let limits = ConstraintLimits::default();
        let ok = check(&plan(vec![p(0.0, 0.0), p(3.0, 4.0)]), &curve_with(0.0), &limits);
        assert!(ok.range_ok);
        assert!(ok.leg_ok);
        let long = check(&plan(vec![p(0.0, 0.0), p(301.0, 0.0)]), &curve_with(0.0), &limits);
        assert!(!long.range_ok);
    }

    #[test]
    fn turn_and_leg_flags() {
        let limits = ConstraintLimits::default();
        let r = check(&plan(vec![p(0.0, 0.0), p(0.1, 0.0), p(5.0, 0.0)]), &curve_with(6.0), &limits);
        assert!(!r.turn_ok);
        assert!(!r.leg_ok);
        assert!((r.min_leg - 0.1).abs() < 1e-12);
        let r = check(&plan(vec![p(0.0, 0.0), p(5.0, 0.0)]), &curve_with(5.0), &limits);
        assert!(r.turn_ok);
    }

    proptest! {
        #[test]
        fn length_rigid_invariant_and_additive(
            pts in prop::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 1..10),
            extra in prop::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 1..10),
            angle in 0.0f64..6.3,
            dx in -50.0f64..50.0,
            dy in -50.0f64..50.0,
        ) {
            let a: Vec<Point2> = pts.iter().map(|&(x, y)| p(x, y)).collect();
            let (c, s) = (angle.cos(), angle.sin());
            let moved: Vec<Point2> = a.iter().map(|q| p(c * q.x - s * q.y + dx, s * q.x + c * q.y + dy)).collect();
            let la = total_length(&a);
            prop_assert!((total_length(&moved) - la).abs() <= 1e-9 * la.max(1.0));

            let b: Vec<Point2> = extra.iter().map(|&(x, y)| p(x, y)).collect();
            let mut joined = a.clone();
            joined.extend_from_slice(&b[1..]);
            let mut b_from = vec![*a.last().unwrap()];
            b_from.extend_from_slice(&b[1..]);
            let sum = la + total_length(&b_from);
            prop_assert!((total_length(&joined) - sum).abs() <= 1e-9 * sum.max(1.0));
        }
    }
}
