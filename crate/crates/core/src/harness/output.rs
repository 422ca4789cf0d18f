//! Plan result files.

use serde::{Deserialize, Serialize};

use crate::constraints::{check, ConstraintLimits, ConstraintReport};
use crate::geometry::Point2;
use crate::online::FlightLog;
use crate::planner::{PathPlan, PlanError, PlannerConfig, TraceStep};
use crate::scenario::Scenario;
use crate::smoothing::{smooth, SmoothedCurve};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanStatus {
    Ok,
    /// The route is clear but the smoothed curve dips into an obstacle.
    ClearanceWarning,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanOutput {
    pub scenario: String,
    pub mode: String,
    pub status: PlanStatus,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
    pub route: Vec<Point2>,
    pub length_km: Option<f64>,
    /// Planner wall-clock time; only filled when timing is requested.
    pub time_s: Option<f64>,
    pub iterations: usize,
    pub avoided: Vec<usize>,
    pub trace: Vec<TraceStep>,
    pub samples_per_segment: usize,
    pub curve_clear: Option<bool>,
    pub constraints: Option<ConstraintReport>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub flight: Option<FlightLog>,
}

pub struct OutputOptions {
    pub samples_per_segment: usize,
    pub limits: ConstraintLimits,
    pub config: PlannerConfig,
}

impl PlanOutput {
    pub fn new(
        scenario: &Scenario,
        mode: &str,
        result: &Result<PathPlan, PlanError>,
        time_s: Option<f64>,
        flight: Option<FlightLog>,
        options: &OutputOptions,
    ) -> Self {
        let mut out = Self {
            scenario: scenario.name.clone(),
            mode: mode.to_string(),
            status: PlanStatus::Failed,
            error: None,
            route: Vec::new(),
            length_km: None,
            time_s,
            iterations: 0,
            avoided: Vec::new(),
            trace: Vec::new(),
            samples_per_segment: options.samples_per_segment,
            curve_clear: None,
            constraints: None,
            flight,
        };
        let plan = match result {
            Ok(plan) => plan,
            Err(e) => {
                out.error = Some(e.to_string());
                if let PlanError::PlanningFailed { iterations, .. } = e {
                    out.iterations = *iterations;
                }
                return out;
            }
        };
        out.route = plan.route.clone();
        out.length_km = Some(plan.length);
        out.iterations = plan.iterations;
        out.avoided = plan.avoided.clone();
        out.trace = plan.trace.clone();
        out.status = PlanStatus::Ok;
        if let Some(curve) = curve_for(&plan.route, options.samples_per_segment) {
            let eps = options.config.eps_for(scenario.diagonal());
            let everything = scenario
                .obstacles
                .iter()
                .chain(scenario.popup_events.iter().map(|e| &e.obstacle));
            let clear = curve.clears(everything, eps);
            if !clear {
                out.status = PlanStatus::ClearanceWarning;
            }
            out.curve_clear = Some(clear);
            out.constraints = Some(check(plan, &curve, &options.limits));
        }
        out
    }

    pub fn curve(&self) -> Option<SmoothedCurve> {
        curve_for(&self.route, self.samples_per_segment)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("plan output serializes");
        s.push('\n');
        s
    }
}

fn curve_for(route: &[Point2], samples_per_segment: usize) -> Option<SmoothedCurve> {
    smooth(route, samples_per_segment).ok()
}
