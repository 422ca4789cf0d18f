//! Target-guided elliptic tangent path planning for UAVs in the plane.
//!
//! Obstacles are inflated ellipses. The offline planner ([`plan_static`])
//! grows one collision-free route from start to end: whenever the straight
//! leg to the current destination is blocked, it draws tangents to the
//! first obstacle from both ends, intersects them into two candidate
//! waypoints and keeps one by four prioritized rules. The online planner
//! ([`plan_unknown`], [`replan_popup`]) runs the same step with limited
//! sensing and bounded legs. Routes can be smoothed with a clamped cubic
//! B-spline and checked against platform limits.

pub mod constraints;
pub mod geometry;
pub mod harness;
pub mod online;
pub mod planner;
pub mod scenario;
pub mod smoothing;

pub use constraints::{check, total_length, ConstraintLimits, ConstraintReport};
pub use geometry::{
    first_collided, segment_collides, signed_margin, sub_paths, tangent_points, EllipseObstacle, GeometryError,
    Point2, Segment, SubPathCandidate,
};

pub use online::{plan_unknown, replan_popup, visible_set, FlightLog, SensorModel};
pub use planner::{plan_known, plan_static, select_subpath, PathPlan, PlanError, PlannerConfig, Rule};
pub use scenario::{Bounds, PopupEvent, Scenario, ScenarioError, Trigger};

pub use smoothing::{basis, max_curvature, smooth, SmoothedCurve, SmoothingError};
