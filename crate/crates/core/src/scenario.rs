//! Planning problems and their JSON file format.
//!
//! File layout (field order is fixed so output is byte-stable):
//!
//! ```json
//! {"name": "...", "bounds": {"w": 100.0, "h": 100.0},
//!  "start": [x, y], "end": [x, y], "r_safe": 0.5,
//!  "obstacles": [{"id": 0, "center": [x, y], "a": 4.0, "b": 2.0, "theta": 0.3, "known": true}],
//!  "popups": [{"trigger": "visible", "obstacle": {"id": 9, "center": [x, y], "a": 3.0, "b": 3.0, "theta": 0.0}},
//!             {"trigger": {"time": 42.0}, "obstacle": {...}}]}
//! ```
//!
//! Lengths are kilometres, angles radians. The simulation clock used by
//! timed pop-ups runs at unit speed, so a trigger time equals the distance
//! flown in kilometres.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{EllipseObstacle, GeometryError, Point2};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("scenario file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("scenario file: {0}")]
    Io(#[from] std::io::Error),
}

/// Axis-aligned field `[0, w] x [0, h]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub w: f64,
    pub h: f64,
}

impl Bounds {
    pub fn square(side: f64) -> Self {
        Self { w: side, h: side }
    }

    pub fn diagonal(&self) -> f64 {
        self.w.hypot(self.h)
    }

    pub fn contains(&self, p: Point2) -> bool {
        (0.0..=self.w).contains(&p.x) && (0.0..=self.h).contains(&p.y)
    }
}

/// When a pop-up obstacle starts to exist.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Trigger {
    /// Present from the start but unknown until the sensor sees it.
    OnVisibility,
    /// Appears once the simulation clock reaches this time.
    Time(f64),
}

impl Trigger {
    pub fn active_at(&self, time: f64) -> bool {
        match *self {
            Trigger::OnVisibility => true,
            Trigger::Time(t) => time >= t,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PopupEvent {
    pub trigger: Trigger,
    pub obstacle: EllipseObstacle,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub bounds: Bounds,
    pub start: Point2,
    pub end: Point2,
    pub r_safe: f64,
    pub obstacles: Vec<EllipseObstacle>,
    /// Parallel to `obstacles`.
    pub initially_known: Vec<bool>,
    pub popup_events: Vec<PopupEvent>,
}

impl Scenario {
    /// Scenario with every obstacle known and no pop-ups.
    pub fn new(
        name: impl Into<String>,
        bounds: Bounds,
        start: Point2,
        end: Point2,
        r_safe: f64,
        obstacles: Vec<EllipseObstacle>,
    ) -> Self {
        let known = vec![true; obstacles.len()];
        Self {
            name: name.into(),
            bounds,
            start,
            end,
            r_safe,
            obstacles,
            initially_known: known,
            popup_events: Vec::new(),
        }
    }

    pub fn diagonal(&self) -> f64 {
        self.bounds.diagonal()
    }

    pub fn known_obstacles(&self) -> impl Iterator<Item = &EllipseObstacle> {
        self.obstacles
            .iter()
            .zip(&self.initially_known)
            .filter(|(_, k)| **k)
            .map(|(o, _)| o)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let invalid = |msg: String| Err(ScenarioError::Invalid(msg));
        if !(self.bounds.w > 0.0 && self.bounds.h > 0.0) {
            return invalid("bounds must be positive".into());
        }
        if self.initially_known.len() != self.obstacles.len() {
            return invalid("known flags do not match obstacle count".into());
        }
        for (label, p) in [("start", self.start), ("end", self.end)] {
            if !p.is_finite() || !self.bounds.contains(p) {
                return invalid(format!("{label} {p} outside bounds"));
            }
            let all = self.obstacles.iter().chain(self.popup_events.iter().map(|e| &e.obstacle));
            for o in all {
                if o.signed_margin(p) <= 0.0 {
                    return invalid(format!("{label} {p} inside obstacle {}", o.id()));
                }
            }
        }
        let mut ids = BTreeSet::new();
        for o in self.obstacles.iter().chain(self.popup_events.iter().map(|e| &e.obstacle)) {
            if !ids.insert(o.id()) {
                return invalid(format!("duplicate obstacle id {}", o.id()));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&ScenarioFile::from(self)).expect("scenario serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let file: ScenarioFile = serde_json::from_str(text)?;
        let scenario = file.into_scenario()?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ScenarioError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ScenarioError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct ScenarioFile {
    name: String,
    bounds: Bounds,
    start: Point2,
    end: Point2,
    r_safe: f64,
    obstacles: Vec<ObstacleRecord>,
    #[serde(default)]
    popups: Vec<PopupRecord>,
}

#[derive(Serialize, Deserialize)]
struct ObstacleRecord {
    id: usize,
    center: Point2,
    a: f64,
    b: f64,
    theta: f64,
    #[serde(default = "default_known")]
    known: bool,
}

fn default_known() -> bool {
    true
}

#[derive(Serialize, Deserialize)]
struct ShapeRecord {
    id: usize,
    center: Point2,
    a: f64,
    b: f64,
    theta: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum TriggerRecord {
    Named(NamedTrigger),
    Timed { time: f64 },
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum NamedTrigger {
    Visible,
}

#[derive(Serialize, Deserialize)]
struct PopupRecord {
    trigger: TriggerRecord,
    obstacle: ShapeRecord,
}

impl From<&Scenario> for ScenarioFile {
    fn from(s: &Scenario) -> Self {
        Self {
            name: s.name.clone(),
            bounds: s.bounds,
            start: s.start,
            end: s.end,
            r_safe: s.r_safe,
            obstacles: s
                .obstacles
                .iter()
                .zip(&s.initially_known)
                .map(|(o, &known)| ObstacleRecord {
                    id: o.id(),
                    center: o.center(),
                    a: o.semi_major(),
                    b: o.semi_minor(),
                    theta: o.theta(),
                    known,
                })
                .collect(),
            popups: s
                .popup_events
                .iter()
                .map(|e| PopupRecord {
                    trigger: match e.trigger {
                        Trigger::OnVisibility => TriggerRecord::Named(NamedTrigger::Visible),
                        Trigger::Time(time) => TriggerRecord::Timed { time },
                    },
                    obstacle: ShapeRecord {
                        id: e.obstacle.id(),
                        center: e.obstacle.center(),
                        a: e.obstacle.semi_major(),
                        b: e.obstacle.semi_minor(),
                        theta: e.obstacle.theta(),
                    },
                })
                .collect(),
        }
    }
}

impl ScenarioFile {
    fn into_scenario(self) -> Result<Scenario, ScenarioError> {
        let r_safe = self.r_safe;
        let mut obstacles = Vec::with_capacity(self.obstacles.len());
        let mut known = Vec::with_capacity(self.obstacles.len());
        for o in self.obstacles {
            obstacles.push(EllipseObstacle::new(o.id, o.center, o.a, o.b, o.theta, r_safe)?);
            known.push(o.known);
        }
        let popup_events = self
            .popups
            .into_iter()
            .map(|p| {
                let s = p.obstacle;
                Ok(PopupEvent {
                    trigger: match p.trigger {
                        TriggerRecord::Named(NamedTrigger::Visible) => Trigger::OnVisibility,
                        TriggerRecord::Timed { time } => Trigger::Time(time),
                    },
                    obstacle: EllipseObstacle::new(s.id, s.center, s.a, s.b, s.theta, r_safe)?,
                })
            })
            .collect::<Result<Vec<_>, ScenarioError>>()?;
        Ok(Scenario {
            name: self.name,
            bounds: self.bounds,
            start: self.start,
            end: self.end,
            r_safe,
            obstacles,
            initially_known: known,
            popup_events,
        })
    }
}
