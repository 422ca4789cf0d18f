//! SVG figures of scenarios and plans.
//!
//! Field coordinates are drawn with y up. Every number is printed with a
//! fixed number of decimals so the same inputs give the same bytes.

use std::fmt::Write as _;
use std::path::Path;

use super::HarnessError;
use crate::geometry::{EllipseObstacle, Point2};
use crate::scenario::Scenario;
use crate::smoothing::SmoothedCurve;

const UNKNOWN_FILL: &str = "#b0b0b0";
const KNOWN_FILL: &str = "#f2c94c";
const POPUP_FILL: &str = "#e05050";
const ROUTE_STROKE: &str = "#1f5fbf";
const CURVE_STROKE: &str = "#1a9e55";
const PIXELS: f64 = 800.0;

struct Canvas {
    out: String,
    height: f64,
    unit: f64,
}

impl Canvas {
    fn x(&self, p: Point2) -> f64 {
        p.x
    }

    fn y(&self, p: Point2) -> f64 {
        self.height - p.y
    }

    fn ellipse(&mut self, o: &EllipseObstacle, fill: &str, class: &str) {
        let c = o.center();
        let (cx, cy) = (self.x(c), self.y(c));
        // flipping y turns counter-clockwise angles clockwise
        let deg = -o.theta().to_degrees();
        let _ = writeln!(
            self.out,
            r##"  <ellipse class="{class}" data-id="{}" cx="{cx:.4}" cy="{cy:.4}" rx="{:.4}" ry="{:.4}" transform="rotate({deg:.4} {cx:.4} {cy:.4})" fill="{fill}" stroke="#404040" stroke-width="{:.4}"/>"##,
            o.id(),
            o.semi_major(),
            o.semi_minor(),
            self.unit * 0.5,
        );
    }

    fn points(&self, pts: &[Point2]) -> String {
        let mut s = String::new();
        for (k, &p) in pts.iter().enumerate() {
            if k > 0 {
                s.push(' ');
            }
            let _ = write!(s, "{:.4},{:.4}", self.x(p), self.y(p));
        }
        s
    }

    fn star(&mut self, at: Point2, fill: &str, class: &str) {
        let r_out = self.unit * 8.0;
        let r_in = r_out * 0.45;
        let pts: Vec<Point2> = (0..10)
            .map(|k| {
                let r = if k % 2 == 0 { r_out } else { r_in };
                let a = std::f64::consts::FRAC_PI_2 + k as f64 * std::f64::consts::PI / 5.0;
                Point2::new(at.x + r * a.cos(), at.y + r * a.sin())
            })
            .collect();
        let pts = self.points(&pts);
        let _ = writeln!(
            self.out,
            r##"  <polygon class="{class}" points="{pts}" fill="{fill}" stroke="black" stroke-width="{:.4}"/>"##,
            self.unit * 0.5
        );
    }
}

/// SVG document for `scenario` with an optional raw route and smoothed
/// curve. Initially unknown obstacles are grey, known ones yellow and
/// pop-ups red.
pub fn render_svg(scenario: &Scenario, route: Option<&[Point2]>, curve: Option<&SmoothedCurve>) -> String {
    let (w, h) = (scenario.bounds.w, scenario.bounds.h);
    let unit = w.max(h) / PIXELS;
    let mut c = Canvas {
        out: String::new(),
        height: h,
        unit,
    };
    let _ = writeln!(
        c.out,
        r##"<svg xmlns="http://www.w3.org/2000/svg" width="{:.0}" height="{:.0}" viewBox="0 0 {w:.4} {h:.4}">"##,
        PIXELS * w / w.max(h),
        PIXELS * h / w.max(h),
    );
    let _ = writeln!(c.out, "  <title>{}</title>", escape(&scenario.name));
    let _ = writeln!(
        c.out,
        r##"  <rect x="0" y="0" width="{w:.4}" height="{h:.4}" fill="white" stroke="black" stroke-width="{:.4}"/>"##,
        unit
    );
    for (o, &known) in scenario.obstacles.iter().zip(&scenario.initially_known) {
        if known {
            c.ellipse(o, KNOWN_FILL, "known");
        } else {
            c.ellipse(o, UNKNOWN_FILL, "unknown");
        }
    }
    for e in &scenario.popup_events {
        c.ellipse(&e.obstacle, POPUP_FILL, "popup");
    }
    if let Some(route) = route.filter(|r| !r.is_empty()) {
        let pts = c.points(route);
        let _ = writeln!(
            c.out,
            r##"  <polyline class="route" points="{pts}" fill="none" stroke="{ROUTE_STROKE}" stroke-width="{:.4}"/>"##,
            unit * 2.0
        );
    }
    if let Some(curve) = curve.filter(|k| !k.samples.is_empty()) {
        let mut d = String::new();
        for (k, &p) in curve.samples.iter().enumerate() {
            let _ = write!(d, "{}{:.4},{:.4}", if k == 0 { "M" } else { " L" }, c.x(p), c.y(p));
        }
        let _ = writeln!(
            c.out,
            r##"  <path class="curve" d="{d}" fill="none" stroke="{CURVE_STROKE}" stroke-width="{:.4}"/>"##,
            unit * 1.5
        );
    }
    c.star(scenario.start, "#2060ff", "start");
    c.star(scenario.end, "#ff3030", "end");
    c.out.push_str("</svg>\n");
    c.out
}

pub fn write_svg(
    path: impl AsRef<Path>,
    scenario: &Scenario,
    route: Option<&[Point2]>,
    curve: Option<&SmoothedCurve>,
) -> Result<(), HarnessError> {
    std::fs::write(path, render_svg(scenario, route, curve))?;
    Ok(())
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::generators::{generate_environment, EnvKind};

    #[test]
    fn one_ellipse_per_obstacle() {
        let s = generate_environment(EnvKind::E1, 100.0, 25, 2).unwrap();
        let svg = render_svg(&s, None, None);
        assert_eq!(svg.matches("<ellipse").count(), 25);
        assert!(!svg.contains("<polyline"));
    }

    #[test]
    fn route_vertices_and_determinism() {
        let s = generate_environment(EnvKind::E2, 100.0, 10, 2).unwrap();
        let route = [s.start, Point2::new(30.0, 60.0), s.end];
        let svg = render_svg(&s, Some(&route), None);
        let line = svg.lines().find(|l| l.contains("<polyline")).unwrap();
        let pts = line.split("points=\"").nth(1).unwrap().split('"').next().unwrap();
        assert_eq!(pts.split(' ').count(), 3);
        assert_eq!(svg, render_svg(&s, Some(&route), None));
    }
}
