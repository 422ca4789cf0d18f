//! Online planning with limited sensing.
//!
//! Two situations are covered. [`plan_unknown`] starts with an empty map
//! and grows the route leg by leg, perceiving obstacles within the sensor
//! range at every determined waypoint and never flying more than the limited
//! flight distance `l` before looking again. [`replan_popup`] flies an
//! offline route and repairs the conflicting part whenever an obstacle that
//! was not in the offline map becomes visible on it.
//!
//! Perception is obstacle-granular: an obstacle whose inflated boundary is
//! within range is known in full from then on.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::geometry::{first_collided, EllipseObstacle, Point2, Segment};
use crate::planner::{
    avoid, blocking_obstacle, plan_between, route_length, summarize, AvoidFailure, PathPlan, PlanError,
    PlannerConfig, SearchParams, Stack, StepAction, TraceStep, ITERATIONS_PER_OBSTACLE,
};
use crate::scenario::{PopupEvent, Scenario};

/// Default limited flight distance between perceptions, km.
pub const DEFAULT_FLIGHT_LIMIT: f64 = 3.0;
/// Default sensor range, km.
pub const DEFAULT_RANGE: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorModel {
    pub range: f64,
}

impl Default for SensorModel {
    fn default() -> Self {
        Self { range: DEFAULT_RANGE }
    }
}

impl SensorModel {
    pub fn new(range: f64) -> Self {
        Self { range }
    }

    /// The sensor must see farther than one flight leg.
    pub fn validate(&self, flight_limit: f64) -> Result<(), PlanError> {
        if !(flight_limit > 0.0 && flight_limit.is_finite()) {
            return Err(PlanError::InvalidScenario(format!(
                "flight limit must be positive, got {flight_limit}"
            )));
        }
        if !(self.range > flight_limit) {
            return Err(PlanError::InvalidScenario(format!(
                "sensor range {} does not exceed flight limit {flight_limit}",
                self.range
            )));
        }
        Ok(())
    }
}

/// Ids of obstacles whose inflated boundary is within `sensor.range` of
/// `position` (closed: exactly at range counts).
pub fn visible_set<'a>(
    position: Point2,
    sensor: &SensorModel,
    obstacles: impl IntoIterator<Item = &'a EllipseObstacle>,
) -> Vec<usize> {
    let slack = 1e-12 * sensor.range.max(1.0);
    obstacles
        .into_iter()
        .filter(|o| o.signed_margin(position) <= 0.0 || o.boundary_distance(position) <= sensor.range + slack)
        .map(|o| o.id())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerceptionEvent {
    pub position: Point2,
    /// Index into [`FlightLog::visited`].
    pub waypoint: usize,
    pub new_ids: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplanEvent {
    pub position: Point2,
    /// Index of the conflicting segment in the route at the time of replan.
    pub segment_index: usize,
    pub conflict: Segment,
    pub sub_route: Vec<Point2>,
    /// The segment end was unreachable and the tail was replanned to the
    /// end point instead.
    pub to_end: bool,
    /// Wall-clock time of the replan; cleared for reproducible output.
    pub latency_s: Option<f64>,
    #[serde(skip)]
    pub route_before: Vec<Point2>,
    #[serde(skip)]
    pub route_after: Vec<Point2>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FlightLog {
    pub visited: Vec<Point2>,
    pub perception_events: Vec<PerceptionEvent>,
    pub replan_events: Vec<ReplanEvent>,
}

impl FlightLog {
    pub fn without_timing(mut self) -> Self {
        for e in &mut self.replan_events {
            e.latency_s = None;
        }
        self
    }
}

/// A simulated flight together with how planning ended. The log is kept
/// even when planning fails part-way.
#[derive(Debug, Clone)]
pub struct Flight {
    pub log: FlightLog,
    pub outcome: Result<PathPlan, PlanError>,
}

/// Default iteration cap for the online planner: the offline budget plus
/// enough bounded legs to fly three field diagonals.
pub fn online_cap(config: &PlannerConfig, obstacle_count: usize, diagonal: f64, flight_limit: f64) -> usize {
    config.max_iterations.unwrap_or_else(|| {
        let legs = (3.0 * diagonal / flight_limit).ceil() as usize;
        ITERATIONS_PER_OBSTACLE * obstacle_count + legs.max(1)
    })
}

/// Plans in a completely unknown environment; see [`fly_unknown`].
pub fn plan_unknown(
    scenario: &Scenario,
    flight_limit: f64,
    sensor: &SensorModel,
    config: &PlannerConfig,
) -> Result<(PathPlan, FlightLog), PlanError> {
    let flight = fly_unknown(scenario, flight_limit, sensor, config)?;
    flight.outcome.map(|plan| (plan, flight.log))
}

/// Runs the online planner over `scenario.obstacles` as ground truth,
/// starting from an empty map. Errors before take-off (bad inputs) are
/// returned directly; failures in flight are reported in
/// [`Flight::outcome`] alongside the partial log.
pub fn fly_unknown(
    scenario: &Scenario,
    flight_limit: f64,
    sensor: &SensorModel,
    config: &PlannerConfig,
) -> Result<Flight, PlanError> {
    scenario
        .validate()
        .map_err(|e| PlanError::InvalidScenario(e.to_string()))?;
    sensor.validate(flight_limit)?;
    let params = SearchParams {
        eps: config.eps_for(scenario.diagonal()),
        max_iterations: online_cap(config, scenario.obstacles.len(), scenario.diagonal(), flight_limit),
        tie_break: config.tie_break,
    };
    let mut run = UnknownRun {
        truth: &scenario.obstacles,
        known: Vec::new(),
        known_flags: vec![false; scenario.obstacles.len()],
        sensor: *sensor,
        log: FlightLog::default(),
    };
    let outcome = run.search(scenario.start, scenario.end, flight_limit, &params);
    Ok(Flight { log: run.log, outcome })
}

struct UnknownRun<'a> {
    truth: &'a [EllipseObstacle],
    known: Vec<EllipseObstacle>,
    known_flags: Vec<bool>,
    sensor: SensorModel,
    log: FlightLog,
}

impl UnknownRun<'_> {
    fn perceive(&mut self, position: Point2) {
        let waypoint = self.log.visited.len();
        self.log.visited.push(position);
        let mut new_ids = Vec::new();
        for (k, o) in self.truth.iter().enumerate() {
            if self.known_flags[k] {
                continue;
            }
            if !visible_set(position, &self.sensor, [o]).is_empty() {
                self.known_flags[k] = true;
                self.known.push(*o);
                new_ids.push(o.id());
            }
        }
        if !new_ids.is_empty() {
            self.log.perception_events.push(PerceptionEvent {
                position,
                waypoint,
                new_ids,
            });
        }
    }

    fn search(
        &mut self,
        start: Point2,
        end: Point2,
        flight_limit: f64,
        params: &SearchParams,
    ) -> Result<PathPlan, PlanError> {
        let eps = params.eps;
        let mut pa = vec![start];
        let mut ca = vec![end];
        let mut ba: Vec<usize> = Vec::new();
        let mut trace = Vec::new();
        let mut iterations = 0;
        self.perceive(start);

        while let Some(&destination) = ca.last() {
            if iterations >= params.max_iterations {
                return Err(PlanError::PlanningFailed {
                    iterations,
                    reason: "iteration cap reached".into(),
                });
            }
            iterations += 1;
            let origin = *pa.last().expect("pa starts with the start point");
            if self.log.visited.len() < pa.len() {
                self.perceive(origin);
            }
            let mut step = |action| {
                trace.push(TraceStep {
                    iteration: iterations,
                    origin,
                    destination,
                    action,
                })
            };

            if ca.len() > 1 {
                if let Some(id) = blocking_obstacle(destination, &self.known, eps) {
                    ca.pop();
                    step(StepAction::Discard { obstacle: id });
                    continue;
                }
            }

            let od = Segment::new(origin, destination);
            match first_collided(&od, &self.known, eps) {
                None => {
                    if od.length() > flight_limit {
                        let t = origin + (destination - origin) * (flight_limit / od.length());
                        pa.push(t);
                        step(StepAction::Truncate { waypoint: t });
                    } else {
                        pa.push(destination);
                        ca.pop();
                        step(StepAction::Advance);
                    }
                }
                Some((hit, _)) => {
                    let avoidance = avoid(origin, destination, hit, &ba, &self.known, params).map_err(|f| match f {
                        AvoidFailure::Degenerate(obstacle) => PlanError::DegenerateTangency { obstacle },
                        other => PlanError::DeadEnd {
                            at: origin,
                            reason: other.describe(),
                        },
                    })?;
                    let t = avoidance.chosen.waypoint;
                    let blocked_by =
                        first_collided(&Segment::new(origin, t), &self.known, eps).map(|(o, _)| o.id());
                    ca.push(t);
                    ba.push(avoidance.obstacle);
                    step(StepAction::Avoid {
                        obstacle: avoidance.obstacle,
                        candidates: summarize(&avoidance.candidates),
                        rule: avoidance.rule,
                        chosen: t,
                        pushed: Stack::Ca,
                        blocked_by,
                    });
                }
            }
        }
        // the end point is determined but was never looked around from
        if self.log.visited.len() < pa.len() {
            self.log.visited.push(*pa.last().expect("nonempty"));
        }

        Ok(PathPlan {
            length: route_length(&pa),
            route: pa,
            iterations,
            avoided: ba,
            trace,
        })
    }
}

/// Flies `offline` and repairs it around obstacles the offline map did not
/// contain; see [`fly_popup`].
pub fn replan_popup(
    scenario: &Scenario,
    offline: &PathPlan,
    events: &[PopupEvent],
    sensor: &SensorModel,
    flight_limit: f64,
    config: &PlannerConfig,
) -> Result<(PathPlan, FlightLog), PlanError> {
    let flight = fly_popup(scenario, offline, events, sensor, flight_limit, config)?;
    flight.outcome.map(|plan| (plan, flight.log))
}

/// Simulates flight along `offline`.
///
/// Ground truth is every scenario obstacle plus the pop-up events; the map
/// starts with the initially known obstacles. The UAV looks around at every
/// waypoint, at checkpoints at most `flight_limit` apart along long legs and
/// at the moment a timed pop-up appears. The clock is the distance flown.
/// When a known obstacle blocks a remaining segment, that segment is
/// replanned with the offline procedure from its start (the UAV's current
/// position, for the segment being flown) to its end, falling back to the
/// end point when the segment end is unreachable. Later segments are
/// rechecked after each splice.
pub fn fly_popup(
    scenario: &Scenario,
    offline: &PathPlan,
    events: &[PopupEvent],
    sensor: &SensorModel,
    flight_limit: f64,
    config: &PlannerConfig,
) -> Result<Flight, PlanError> {
    sensor.validate(flight_limit)?;
    if offline.route.len() < 2 {
        return Err(PlanError::InvalidScenario("offline route has fewer than two waypoints".into()));
    }
    let eps = config.eps_for(scenario.diagonal());
    let truth: Vec<(EllipseObstacle, crate::scenario::Trigger)> = scenario
        .obstacles
        .iter()
        .map(|o| (*o, crate::scenario::Trigger::OnVisibility))
        .chain(events.iter().map(|e| (e.obstacle, e.trigger)))
        .collect();
    let mut known_flags: Vec<bool> = scenario
        .initially_known
        .iter()
        .copied()
        .chain(events.iter().map(|_| false))
        .collect();
    let mut known: Vec<EllipseObstacle> = scenario.known_obstacles().copied().collect();

    let mut log = FlightLog::default();
    let mut route = offline.route.clone();
    let end = *route.last().expect("nonempty");
    // UAV sits on segment route[idx] -> route[idx + 1]
    let mut idx = 0;
    let mut pos = route[0];
    let mut clock = 0.0;
    let mut iterations = offline.iterations;
    let mut trace = offline.trace.clone();
    let mut avoided = offline.avoided.clone();
    let step_cap = {
        let legs = (3.0 * scenario.diagonal() / flight_limit).ceil() as usize;
        offline.route.len() + 4 * legs + 1000
    };

    let outcome = loop {
        // perceive
        let waypoint = log.visited.len();
        log.visited.push(pos);
        let mut new_ids = Vec::new();
        for (k, (o, trigger)) in truth.iter().enumerate() {
            if known_flags[k] || !trigger.active_at(clock) {
                continue;
            }
            if !visible_set(pos, sensor, [o]).is_empty() {
                known_flags[k] = true;
                known.push(*o);
                new_ids.push(o.id());
            }
        }
        let perceived_new = !new_ids.is_empty();
        if perceived_new {
            log.perception_events.push(PerceptionEvent {
                position: pos,
                waypoint,
                new_ids,
            });
        }

        if perceived_new {
            if let Some(o) = known.iter().find(|o| o.signed_margin(pos) <= 0.0) {
                break Err(PlanError::DeadEnd {
                    at: pos,
                    reason: format!("obstacle {} appeared over the UAV", o.id()),
                });
            }
            if let Err(e) = repair(
                &mut route,
                &mut idx,
                pos,
                end,
                &known,
                eps,
                config,
                &mut log,
                &mut iterations,
                &mut trace,
                &mut avoided,
            ) {
                break Err(e);
            }
        }

        if idx + 1 >= route.len() {
            break Ok(());
        }
        if log.visited.len() > step_cap {
            break Err(PlanError::PlanningFailed {
                iterations,
                reason: "flight step cap reached".into(),
            });
        }
        let next = route[idx + 1];
        let remaining = pos.distance(next);
        // stop to look around when a timed pop-up is due before the next
        // checkpoint
        let due = truth
            .iter()
            .zip(&known_flags)
            .filter_map(|((_, trigger), &seen)| match trigger {
                crate::scenario::Trigger::Time(t) if !seen && *t > clock => Some(t - clock),
                _ => None,
            })
            .fold(flight_limit, f64::min);
        if remaining <= due {
            pos = next;
            idx += 1;
            clock += remaining;
        } else {
            pos = pos + (next - pos) * (due / remaining);
            clock += due;
        }
    };

    let outcome = outcome.map(|()| PathPlan {
        length: route_length(&route),
        route,
        iterations,
        avoided,
        trace,
    });
    Ok(Flight { log, outcome })
}

/// Replans every remaining segment blocked by a known obstacle.
#[allow(clippy::too_many_arguments)]
fn repair(
    route: &mut Vec<Point2>,
    idx: &mut usize,
    pos: Point2,
    end: Point2,
    known: &[EllipseObstacle],
    eps: f64,
    config: &PlannerConfig,
    log: &mut FlightLog,
    iterations: &mut usize,
    trace: &mut Vec<TraceStep>,
    avoided: &mut Vec<usize>,
) -> Result<(), PlanError> {
    let mut search_from = *idx;
    loop {
        let conflict = (search_from..route.len() - 1).find(|&j| {
            let from = if j == *idx { pos } else { route[j] };
            first_collided(&Segment::new(from, route[j + 1]), known, eps).is_some()
        });
        let Some(j) = conflict else {
            return Ok(());
        };
        // split the current segment at the UAV position so the replan
        // starts where the UAV is
        let j = if j == *idx && pos != route[j] {
            route.insert(j + 1, pos);
            *idx += 1;
            j + 1
        } else {
            j
        };
        let before = route.clone();
        let start = route[j];
        let target = route[j + 1];
        let params = SearchParams {
            eps,
            max_iterations: config.cap_for(known.len()),
            tie_break: config.tie_break,
        };

        let clock = Instant::now();
        let mut to_end = false;
        let sub = match plan_between(start, target, known, &params) {
            Ok(p) => p,
            Err(_) => {
                to_end = true;
                plan_between(start, end, known, &params).map_err(|e| match e {
                    PlanError::InvalidScenario(reason) => PlanError::PlanningFailed {
                        iterations: *iterations,
                        reason: format!("splice failed: {reason}"),
                    },
                    other => other,
                })?
            }
        };
        let latency_s = clock.elapsed().as_secs_f64();

        let tail_from = if to_end { route.len() } else { j + 2 };
        let mut spliced: Vec<Point2> = route[..=j].to_vec();
        spliced.extend_from_slice(&sub.route[1..]);
        spliced.extend_from_slice(&route[tail_from..]);
        *route = spliced;

        *iterations += sub.iterations;
        trace.extend(sub.trace.iter().cloned());
        avoided.extend(sub.avoided.iter().copied());
        log.replan_events.push(ReplanEvent {
            position: pos,
            segment_index: j,
            conflict: Segment::new(start, target),
            sub_route: sub.route.clone(),
            to_end,
            latency_s: Some(latency_s),
            route_before: before,
            route_after: route.clone(),
        });
        search_from = j + sub.route.len() - 1;
    }
}
