//! Offline target-guided tangent planner.
//!
//! The planner keeps three stacks: determined waypoints `pa` (connected in
//! order they are collision-free), candidate waypoints `ca` whose last
//! element is the current destination, and `ba`, the sequence of obstacles
//! avoided so far. Each blocked origin/destination pair is resolved by
//! drawing tangents to the first obstacle on the way and keeping one of the
//! two resulting sub-paths.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{
    count_collisions, first_collided, group_sub_path, wrap_sub_path, sub_path_sides, Side, EllipseObstacle, GeometryError, Point2, Segment,
    SubPathCandidate,
};
use crate::scenario::Scenario;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlanError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("planning failed after {iterations} iterations: {reason}")]
    PlanningFailed { iterations: usize, reason: String },
    #[error("paired tangents around obstacle {obstacle} are degenerate")]
    DegenerateTangency { obstacle: usize },
    #[error("dead end at {at}: {reason}")]
    DeadEnd { at: Point2, reason: String },
}

/// Multiplier on the obstacle count for the default iteration cap.
pub const ITERATIONS_PER_OBSTACLE: usize = 50;


/// Relative tolerance under which two candidate lengths count as equal.
const LENGTH_TIE_REL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieBreak {
    /// Smaller waypoint in `(x, then y)` order wins.
    #[default]
    Lexicographic,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PlannerConfig {
    /// Penetration tolerance on the signed margin. `None` means
    /// `1e-9 * field diagonal`.
    pub eps: Option<f64>,
    /// `None` means `50 * obstacle count` (at least one).
    pub max_iterations: Option<usize>,
    pub tie_break: TieBreak,
}

impl PlannerConfig {
    pub fn eps_for(&self, diagonal: f64) -> f64 {
        self.eps.unwrap_or(1e-9 * diagonal)
    }

    pub fn cap_for(&self, obstacle_count: usize) -> usize {
        self.max_iterations
            .unwrap_or((ITERATIONS_PER_OBSTACLE * obstacle_count).max(1))
    }
}

/// Fully resolved knobs for one search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchParams {
    pub eps: f64,
    pub max_iterations: usize,
    pub tie_break: TieBreak,
}

/// Which selection rule decided between the two sub-paths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    /// Only one sub-path had a usable waypoint.
    OnlyFeasible,
    /// Origin leg avoids the most recently avoided obstacle.
    AvoidsLastObstacle,
    FewerOriginCollisions,
    FewerDestinationCollisions,
    Shorter,
    TieBreak,
}

impl Rule {
    /// Priority index `1..=4` for the four selection rules.
    pub fn index(self) -> Option<u8> {
        match self {
            Rule::AvoidsLastObstacle => Some(1),
            Rule::FewerOriginCollisions => Some(2),
            Rule::FewerDestinationCollisions => Some(3),
            Rule::Shorter => Some(4),
            Rule::OnlyFeasible | Rule::TieBreak => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stack {
    Pa,
    Ca,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CandidateSummary {
    pub waypoint: Point2,
    pub length: f64,
}

impl From<&SubPathCandidate> for CandidateSummary {
    fn from(c: &SubPathCandidate) -> Self {
        Self {
            waypoint: c.waypoint,
            length: c.length,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum StepAction {
    /// `origin -> destination` was clear; the destination became determined.
    Advance,
    /// Clear but longer than the flight limit; a waypoint at the limit was
    /// determined instead.
    Truncate { waypoint: Point2 },
    /// The destination turned out to lie inside a known obstacle and was
    /// dropped from the candidate stack.
    Discard { obstacle: usize },
    Avoid {
        /// First obstacle hit by `origin -> destination`; recorded in `ba`.
        obstacle: usize,
        /// `[left, right]` of the directed line; `None` when unusable.
        candidates: [Option<CandidateSummary>; 2],
        rule: Rule,
        chosen: Point2,
        pushed: Stack,
        /// First obstacle hit by `origin -> chosen`, if any.
        blocked_by: Option<usize>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub iteration: usize,
    pub origin: Point2,
    pub destination: Point2,
    #[serde(flatten)]
    pub action: StepAction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathPlan {
    pub route: Vec<Point2>,
    pub length: f64,
    pub iterations: usize,
    /// Obstacles avoided, in order.
    pub avoided: Vec<usize>,
    pub trace: Vec<TraceStep>,
}

/// Sum of leg lengths along `route`.
pub fn route_length(route: &[Point2]) -> f64 {
    route.windows(2).map(|w| w[0].distance(w[1])).sum()
}

/// Picks one of two sub-paths by the four prioritized rules.
///
/// `avoided` is the avoided-obstacle sequence; only its last element is
/// consulted by the first rule. Collision counts are over `obstacles`.
pub fn select_subpath(
    a: &SubPathCandidate,
    b: &SubPathCandidate,
    avoided: &[usize],
    obstacles: &[EllipseObstacle],
    eps: f64,
    tie_break: TieBreak,
) -> (SubPathCandidate, Rule) {
    if let Some(last) = avoided.last().and_then(|id| obstacles.iter().find(|o| o.id() == *id)) {
        let a_hits = last.segment_collides(&a.origin_leg, eps).is_some();
        let b_hits = last.segment_collides(&b.origin_leg, eps).is_some();
        if a_hits != b_hits {
            let winner = if a_hits { b } else { a };
            return (*winner, Rule::AvoidsLastObstacle);
        }
    }

    let a_origin = count_collisions(&a.origin_leg, obstacles, eps);
    let b_origin = count_collisions(&b.origin_leg, obstacles, eps);
    if a_origin != b_origin {
        let winner = if a_origin < b_origin { a } else { b };
        return (*winner, Rule::FewerOriginCollisions);
    }

    let a_dest = count_collisions(&a.destination_leg, obstacles, eps);
    let b_dest = count_collisions(&b.destination_leg, obstacles, eps);
    if a_dest != b_dest {
        let winner = if a_dest < b_dest { a } else { b };
        return (*winner, Rule::FewerDestinationCollisions);
    }

    let scale = a.length.max(b.length);
    if (a.length - b.length).abs() > LENGTH_TIE_REL * scale {
        let winner = if a.length < b.length { a } else { b };
        return (*winner, Rule::Shorter);
    }

    match tie_break {
        TieBreak::Lexicographic => {
            let (fa, fb) = (a.waypoint, b.waypoint);
            let a_first = if (fa.x - fb.x).abs() > eps { fa.x < fb.x } else { fa.y <= fb.y };
            (if a_first { *a } else { *b }, Rule::TieBreak)
        }
    }
}

/// Outcome of resolving one blocked origin/destination pair.
pub(crate) struct Avoidance {
    pub obstacle: usize,
    pub candidates: [Option<SubPathCandidate>; 2],
    pub chosen: SubPathCandidate,
    pub rule: Rule,
}

pub(crate) enum AvoidFailure {
    /// The origin is on or inside the obstacle (no tangent exists).
    OriginTrapped(usize),
    /// Neither side produced a waypoint that is outside all obstacles.
    NoFeasibleCandidate(usize),
    Degenerate(usize),
}

impl AvoidFailure {
    pub(crate) fn describe(&self) -> String {
        match self {
            AvoidFailure::OriginTrapped(id) => format!("origin is not strictly outside obstacle {id}"),
            AvoidFailure::NoFeasibleCandidate(id) => {
                format!("no sub-path around obstacle {id} has a feasible waypoint")
            }
            AvoidFailure::Degenerate(id) => format!("degenerate tangents around obstacle {id}"),
        }
    }
}

/// Index of an obstacle in `obstacles` that `p` is not clearly outside of.
pub(crate) fn blocking_obstacle(p: Point2, obstacles: &[EllipseObstacle], eps: f64) -> Option<usize> {
    obstacles.iter().find(|o| o.signed_margin(p) <= eps).map(|o| o.id())
}

/// Builds both sub-paths around `hit` and selects one.
pub(crate) fn avoid(
    origin: Point2,
    destination: Point2,
    hit: &EllipseObstacle,
    avoided: &[usize],
    obstacles: &[EllipseObstacle],
    params: &SearchParams,
) -> Result<Avoidance, AvoidFailure> {
    let mut sides = match sub_path_sides(origin, destination, hit) {
        Ok(sides) => sides,
        Err(GeometryError::PointInsideObstacle { .. }) => return Err(AvoidFailure::OriginTrapped(hit.id())),
        Err(_) => return Err(AvoidFailure::Degenerate(hit.id())),
    };
    for (slot, side) in sides.iter_mut().zip([Side::Left, Side::Right]) {
        if slot.is_none() {
            *slot = wrap_sub_path(origin, destination, hit, side).ok();
        }
    }
    if sides.iter().all(Option::is_none) {
        return Err(AvoidFailure::Degenerate(hit.id()));
    }
    let eps = params.eps;
    let usable = |c: &SubPathCandidate| {
        let f = c.waypoint;
        f.distance(origin) > eps
            && f.distance(destination) > eps
            && blocking_obstacle(f, obstacles, eps).is_none()
    };
    // A waypoint inside another obstacle means the two overlap or nearly
    // touch on that side; pass around both instead.
    let grow = |side: Side, first: Option<SubPathCandidate>| -> Result<Option<SubPathCandidate>, AvoidFailure> {
        let mut group = vec![hit];
        let mut current = first;
        while let Some(c) = current {
            let Some(inner) = obstacles.iter().find(|o| o.signed_margin(c.waypoint) <= eps) else {
                break;
            };
            if group.iter().any(|g| g.id() == inner.id()) || inner.signed_margin(origin) <= 0.0 {
                return Ok(None);
            }
            if inner.signed_margin(destination) <= 0.0 {
                return Ok(None);
            }
            group.push(inner);
            current = match group_sub_path(origin, destination, &group, side) {
                Ok(c) => c,
                Err(GeometryError::DegenerateTangency { .. }) => None,
                Err(_) => return Err(AvoidFailure::Degenerate(inner.id())),
            };
        }
        Ok(current.filter(usable))
    };
    let filtered = [grow(Side::Left, sides[0])?, grow(Side::Right, sides[1])?];
    let (chosen, rule) = match filtered {
        [Some(a), Some(b)] => select_subpath(&a, &b, avoided, obstacles, eps, params.tie_break),
        [Some(a), None] | [None, Some(a)] => (a, Rule::OnlyFeasible),
        [None, None] => return Err(AvoidFailure::NoFeasibleCandidate(hit.id())),
    };
    Ok(Avoidance {
        obstacle: hit.id(),
        candidates: sides,
        chosen,
        rule,
    })
}

pub(crate) fn summarize(c: &[Option<SubPathCandidate>; 2]) -> [Option<CandidateSummary>; 2] {
    [c[0].as_ref().map(Into::into), c[1].as_ref().map(Into::into)]
}

/// Plans the whole scenario with every obstacle known in advance.
pub fn plan_static(scenario: &Scenario, config: &PlannerConfig) -> Result<PathPlan, PlanError> {
    scenario
        .validate()
        .map_err(|e| PlanError::InvalidScenario(e.to_string()))?;
    let params = SearchParams {
        eps: config.eps_for(scenario.diagonal()),
        max_iterations: config.cap_for(scenario.obstacles.len()),
        tie_break: config.tie_break,
    };
    plan_between(scenario.start, scenario.end, &scenario.obstacles, &params)
}

/// Plans over the initially known obstacles only, ignoring unknown ones and
/// pop-ups.
pub fn plan_known(scenario: &Scenario, config: &PlannerConfig) -> Result<PathPlan, PlanError> {
    scenario
        .validate()
        .map_err(|e| PlanError::InvalidScenario(e.to_string()))?;
    let known: Vec<EllipseObstacle> = scenario.known_obstacles().copied().collect();
    let params = SearchParams {
        eps: config.eps_for(scenario.diagonal()),
        max_iterations: config.cap_for(known.len()),
        tie_break: config.tie_break,
    };
    plan_between(scenario.start, scenario.end, &known, &params)
}

/// Offline search from `start` to `end` among `obstacles`.
pub fn plan_between(
    start: Point2,
    end: Point2,
    obstacles: &[EllipseObstacle],
    params: &SearchParams,
) -> Result<PathPlan, PlanError> {
    for (label, p) in [("start", start), ("end", end)] {
        if let Some(o) = obstacles.iter().find(|o| o.signed_margin(p) <= 0.0) {
            return Err(PlanError::InvalidScenario(format!(
                "{label} {p} is not strictly outside obstacle {}",
                o.id()
            )));
        }
    }
    let eps = params.eps;
    let mut pa = vec![start];
    let mut ca = vec![end];
    let mut ba: Vec<usize> = Vec::new();
    let mut trace = Vec::new();
    let mut iterations = 0;

    while let Some(&destination) = ca.last() {
        if iterations >= params.max_iterations {
            return Err(PlanError::PlanningFailed {
                iterations,
                reason: "iteration cap reached".into(),
            });
        }
        iterations += 1;
        let origin = *pa.last().expect("pa starts with the start point");
        let mut step = |action| {
            trace.push(TraceStep {
                iteration: iterations,
                origin,
                destination,
                action,
            })
        };

        if ca.len() > 1 {
            if let Some(id) = blocking_obstacle(destination, obstacles, eps) {
                ca.pop();
                step(StepAction::Discard { obstacle: id });
                continue;
            }
        }

        let od = Segment::new(origin, destination);
        let Some((hit, _)) = first_collided(&od, obstacles, eps) else {
            pa.push(destination);
            ca.pop();
            step(StepAction::Advance);
            continue;
        };

        let avoidance = avoid(origin, destination, hit, &ba, obstacles, params).map_err(|f| match f {
            AvoidFailure::Degenerate(obstacle) => PlanError::DegenerateTangency { obstacle },
            other => PlanError::PlanningFailed {
                iterations,
                reason: other.describe(),
            },
        })?;
        let t = avoidance.chosen.waypoint;
        let blocked_by = first_collided(&Segment::new(origin, t), obstacles, eps).map(|(o, _)| o.id());
        let pushed = if blocked_by.is_none() {
            pa.push(t);
            Stack::Pa
        } else {
            ca.push(t);
            Stack::Ca
        };
        ba.push(avoidance.obstacle);
        step(StepAction::Avoid {
            obstacle: avoidance.obstacle,
            candidates: summarize(&avoidance.candidates),
            rule: avoidance.rule,
            chosen: t,
            pushed,
            blocked_by,
        });
    }

    Ok(PathPlan {
        length: route_length(&pa),
        route: pa,
        iterations,
        avoided: ba,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::sub_paths;
    use crate::scenario::Bounds;

    fn params() -> SearchParams {
        SearchParams {
            eps: 1e-9,
            max_iterations: 100,
            tie_break: TieBreak::Lexicographic,
        }
    }

    fn circle(id: usize, x: f64, y: f64, r: f64) -> EllipseObstacle {
        EllipseObstacle::circle(id, Point2::new(x, y), r, 0.0).unwrap()
    }

    fn candidate(o: Point2, f: Point2, d: Point2) -> SubPathCandidate {
        let origin_leg = Segment::new(o, f);
        let destination_leg = Segment::new(f, d);
        SubPathCandidate {
            waypoint: f,
            origin_leg,
            destination_leg,
            length: origin_leg.length() + destination_leg.length(),
        }
    }

    #[test]
    fn rule_one_prefers_leg_clear_of_last_avoided() {
        let o = Point2::new(0.0, 0.0);
        let d = Point2::new(10.0, 0.0);
        let b1 = circle(1, 3.0, 3.0, 1.0);
        // a's origin leg crosses b1, b's does not; a is shorter so later
        // rules would pick it
        let a = candidate(o, Point2::new(5.0, 5.0), d);
        let b = candidate(o, Point2::new(5.0, -6.0), d);
        let (chosen, rule) = select_subpath(&a, &b, &[1], &[b1], 1e-9, TieBreak::Lexicographic);
        assert_eq!(rule, Rule::AvoidsLastObstacle);
        assert_eq!(rule.index(), Some(1));
        assert_eq!(chosen.waypoint, b.waypoint);
    }

    #[test]
    fn rule_one_indifferent_when_both_collide() {
        let o = Point2::new(0.0, 0.0);
        let d = Point2::new(10.0, 0.0);
        let wide = circle(1, 2.0, 0.0, 1.5);
        let a = candidate(o, Point2::new(5.0, 1.0), d);
        let b = candidate(o, Point2::new(5.0, -2.0), d);
        let (chosen, rule) = select_subpath(&a, &b, &[1], &[wide], 1e-9, TieBreak::Lexicographic);
        assert_eq!(rule, Rule::Shorter);
        assert_eq!(chosen.waypoint, a.waypoint);
    }

    #[test]
    fn rule_two_counts_origin_collisions() {
        let o = Point2::new(0.0, 0.0);
        let d = Point2::new(10.0, 0.0);
        let obstacles = [circle(2, 2.5, 2.5, 0.5), circle(5, 2.5, -2.5, 0.5), circle(6, 4.0, -4.0, 0.5)];
        let a = candidate(o, Point2::new(5.0, 5.0), d);
        let b = candidate(o, Point2::new(5.0, -5.0), d);
        let (chosen, rule) = select_subpath(&b, &a, &[0], &obstacles, 1e-9, TieBreak::Lexicographic);
        assert_eq!(rule, Rule::FewerOriginCollisions);
        assert_eq!(chosen.waypoint, a.waypoint);
    }

    #[test]
    fn rule_three_counts_destination_collisions() {
        let o = Point2::new(0.0, 0.0);
        let d = Point2::new(10.0, 0.0);
        let obstacles = [circle(3, 7.5, 2.5, 0.5)];
        let a = candidate(o, Point2::new(5.0, 5.0), d);
        let b = candidate(o, Point2::new(5.0, -5.5), d);
        let (chosen, rule) = select_subpath(&a, &b, &[], &obstacles, 1e-9, TieBreak::Lexicographic);
        assert_eq!(rule, Rule::FewerDestinationCollisions);
        assert_eq!(chosen.waypoint, b.waypoint);
    }

    #[test]
    fn symmetric_tie_prefers_lower_waypoint() {
        let c = circle(0, 0.0, 0.0, 1.0);
        let [l, r] = sub_paths(Point2::new(-3.0, 0.0), Point2::new(3.0, 0.0), &c).unwrap();
        let (chosen, rule) = select_subpath(&l, &r, &[], &[c], 1e-9, TieBreak::Lexicographic);
        assert_eq!(rule, Rule::TieBreak);
        assert!((chosen.waypoint.y + 1.06066).abs() < 1e-5);
        let (again, _) = select_subpath(&r, &l, &[], &[c], 1e-9, TieBreak::Lexicographic);
        assert_eq!(again.waypoint, chosen.waypoint);
    }

    #[test]
    fn empty_field_goes_straight() {
        let plan = plan_between(Point2::new(0.0, 0.0), Point2::new(5.0, 5.0), &[], &params()).unwrap();
        assert_eq!(plan.route, vec![Point2::new(0.0, 0.0), Point2::new(5.0, 5.0)]);
        assert_eq!(plan.iterations, 1);
        assert!(plan.avoided.is_empty());
    }

    #[test]
    fn single_circle_detour() {
        let c = circle(0, 0.0, 0.0, 1.0);
        let plan = plan_between(Point2::new(-3.0, 0.0), Point2::new(3.0, 0.0), &[c], &params()).unwrap();
        assert_eq!(plan.route.len(), 3);
        let w = plan.route[1];
        assert!(w.x.abs() < 1e-12 && (w.y + 3.0 / (2.0 * 2f64.sqrt())).abs() < 1e-12);
        assert!((plan.length - 6.3640).abs() < 5e-5);
        assert_eq!(plan.avoided, vec![0]);
    }

    #[test]
    fn rejects_start_inside() {
        let c = circle(0, 0.0, 0.0, 1.0);
        let r = plan_between(Point2::new(0.5, 0.0), Point2::new(3.0, 0.0), &[c], &params());
        assert!(matches!(r, Err(PlanError::InvalidScenario(_))));
    }

    #[test]
    fn iteration_cap_is_reported() {
        let c = circle(0, 0.0, 0.0, 1.0);
        let p = SearchParams {
            max_iterations: 1,
            ..params()
        };
        let r = plan_between(Point2::new(-3.0, 0.0), Point2::new(3.0, 0.0), &[c], &p);
        assert!(matches!(r, Err(PlanError::PlanningFailed { iterations: 1, .. })));
    }

    #[test]
    fn default_config_scales_with_field_and_obstacles() {
        let cfg = PlannerConfig::default();
        assert_eq!(cfg.cap_for(0), 1);
        assert_eq!(cfg.cap_for(12), 600);
        assert!((cfg.eps_for(Bounds::square(100.0).diagonal()) - 1e-9 * 100.0 * 2f64.sqrt()).abs() < 1e-20);
    }
}
