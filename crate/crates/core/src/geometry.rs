//! Planar primitives for inflated elliptical obstacles.
//!
//! Every ellipse query is answered in the obstacle's normalized frame:
//! translate by the center, rotate by the inclination, then scale the
//! inflated semi-axes to one. In that frame the obstacle is the unit circle,
//! so membership, segment penetration and tangency all reduce to circle
//! algebra. Results are mapped back through the inverse affine map, which
//! preserves incidence and tangency.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("point ({x}, {y}) is not strictly outside obstacle {id}")]
    PointInsideObstacle { id: usize, x: f64, y: f64 },
    #[error("paired tangents of obstacle {id} do not meet ahead of origin and destination")]
    DegenerateTangency { id: usize },
    #[error("invalid obstacle {id}: {reason}")]
    InvalidObstacle { id: usize, reason: String },
}

/// A point (or free vector) in the plane, in kilometres.
///
/// Serializes as a two-element array `[x, y]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, other: Self) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3D cross product; positive when `other` lies
    /// counter-clockwise of `self`.
    pub fn cross(self, other: Self) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Self) -> f64 {
        (self - other).norm()
    }

    /// Counter-clockwise perpendicular.
    pub fn perp(self) -> Self {
        Self::new(-self.y, self.x)
    }

    pub fn lerp(self, other: Self, t: f64) -> Self {
        self + (other - self) * t
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl From<[f64; 2]> for Point2 {
    fn from([x, y]: [f64; 2]) -> Self {
        Self { x, y }
    }
}

impl From<Point2> for [f64; 2] {
    fn from(p: Point2) -> Self {
        [p.x, p.y]
    }
}

impl fmt::Display for Point2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

impl Add for Point2 {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point2 {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Self;
    fn mul(self, k: f64) -> Self {
        Self::new(self.x * k, self.y * k)
    }
}

impl Neg for Point2 {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y)
    }
}

/// Directed segment `p -> q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub p: Point2,
    pub q: Point2,
}

impl Segment {
    pub const fn new(p: Point2, q: Point2) -> Self {
        Self { p, q }
    }

    pub fn length(&self) -> f64 {
        self.p.distance(self.q)
    }

    pub fn at(&self, t: f64) -> Point2 {
        self.p.lerp(self.q, t)
    }
}

/// An elliptical obstacle inflated by a safety margin.
///
/// Feasibility is always measured against the inflated ellipse with
/// semi-axes `a + r_safe` and `b + r_safe`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipseObstacle {
    id: usize,
    center: Point2,
    semi_major: f64,
    semi_minor: f64,
    theta: f64,
    r_safe: f64,
    // cached normalized-frame map
    cos: f64,
    sin: f64,
    inv_ea: f64,
    inv_eb: f64,
}

impl EllipseObstacle {
    /// `theta` is normalized into `[0, pi)`.
    pub fn new(
        id: usize,
        center: Point2,
        semi_major: f64,
        semi_minor: f64,
        theta: f64,
        r_safe: f64,
    ) -> Result<Self, GeometryError> {
        let invalid = |reason: &str| GeometryError::InvalidObstacle {
            id,
            reason: reason.to_string(),
        };
        if !center.is_finite() || !semi_major.is_finite() || !semi_minor.is_finite() {
            return Err(invalid("non-finite parameters"));
        }
        if !theta.is_finite() || !r_safe.is_finite() {
            return Err(invalid("non-finite parameters"));
        }
        if semi_minor <= 0.0 {
            return Err(invalid("semi-axes must be positive"));
        }
        if semi_major < semi_minor {
            return Err(invalid("semi-major axis shorter than semi-minor axis"));
        }
        if r_safe < 0.0 {
            return Err(invalid("negative safety margin"));
        }
        let theta = theta.rem_euclid(std::f64::consts::PI);
        let (sin, cos) = theta.sin_cos();
        Ok(Self {
            id,
            center,
            semi_major,
            semi_minor,
            theta,
            r_safe,
            cos,
            sin,
            inv_ea: 1.0 / (semi_major + r_safe),
            inv_eb: 1.0 / (semi_minor + r_safe),
        })
    }

    pub fn circle(id: usize, center: Point2, radius: f64, r_safe: f64) -> Result<Self, GeometryError> {
        Self::new(id, center, radius, radius, 0.0, r_safe)
    }

    pub fn id(&self) -> usize {
        self.id
    }

    pub fn center(&self) -> Point2 {
        self.center
    }

    pub fn semi_major(&self) -> f64 {
        self.semi_major
    }

    pub fn semi_minor(&self) -> f64 {
        self.semi_minor
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn r_safe(&self) -> f64 {
        self.r_safe
    }

    /// Inflated semi-axes `(a + r_safe, b + r_safe)`.
    pub fn effective_axes(&self) -> (f64, f64) {
        (self.semi_major + self.r_safe, self.semi_minor + self.r_safe)
    }

    pub fn with_id(mut self, id: usize) -> Self {
        self.id = id;
        self
    }

    /// World point into the rotated (but unscaled) obstacle frame.
    fn to_axes(&self, p: Point2) -> Point2 {
        let d = p - self.center;
        Point2::new(d.x * self.cos + d.y * self.sin, d.y * self.cos - d.x * self.sin)
    }

    /// World point into the normalized frame, where the inflated ellipse is
    /// the unit circle.
    pub fn to_normalized(&self, p: Point2) -> Point2 {
        let r = self.to_axes(p);
        Point2::new(r.x * self.inv_ea, r.y * self.inv_eb)
    }

    pub fn from_normalized(&self, u: Point2) -> Point2 {
        let (ea, eb) = self.effective_axes();
        let (lx, ly) = (u.x * ea, u.y * eb);
        Point2::new(
            self.center.x + lx * self.cos - ly * self.sin,
            self.center.y + lx * self.sin + ly * self.cos,
        )
    }

    /// Left side of the waypoint feasibility inequality minus one.
    /// Non-negative exactly when `p` is on or outside the inflated ellipse.
    pub fn signed_margin(&self, p: Point2) -> f64 {
        self.to_normalized(p).norm_sq() - 1.0
    }

    /// Smallest segment parameter at which `s` enters the inflated ellipse,
    /// or `None` when the deepest point of the segment stays within `eps` of
    /// the boundary (outside or tangential contact).
    pub fn segment_collides(&self, s: &Segment, eps: f64) -> Option<f64> {
        let u = self.to_normalized(s.p);
        let v = self.to_normalized(s.q) - u;
        let a = v.norm_sq();
        let c = u.norm_sq() - 1.0;
        if a <= f64::MIN_POSITIVE {
            return (c < -eps).then_some(0.0);
        }
        let b = u.dot(v);
        let t_closest = (-b / a).clamp(0.0, 1.0);
        let deepest = (u + v * t_closest).norm_sq() - 1.0;
        if deepest >= -eps {
            return None;
        }
        if c <= 0.0 {
            return Some(0.0);
        }
        // c > 0 and the minimum is negative, so the discriminant is positive
        // and the entry root is the smaller one.
        let disc = (b * b - a * c).max(0.0);
        let q = -b + disc.sqrt();
        // stable form of (-b - sqrt(disc)) / a
        let entry = if q > 0.0 { c / q } else { (-b - disc.sqrt()) / a };
        Some(entry.clamp(0.0, 1.0))
    }

    /// The two points of the inflated ellipse whose tangent lines pass
    /// through `p`.
    ///
    /// In the normalized frame the tangency points lie on the polar line
    /// `x * px + y * py = 1` of `p`.
    pub fn tangent_points(&self, p: Point2) -> Result<[Point2; 2], GeometryError> {
        let u = self.to_normalized(p);
        let d2 = u.norm_sq();
        if d2 - 1.0 <= 0.0 || !d2.is_finite() {
            return Err(GeometryError::PointInsideObstacle {
                id: self.id,
                x: p.x,
                y: p.y,
            });
        }
        let h = (d2 - 1.0).sqrt();
        let t1 = (u + u.perp() * h) * (1.0 / d2);
        let t2 = (u - u.perp() * h) * (1.0 / d2);
        Ok([self.from_normalized(t1), self.from_normalized(t2)])
    }

    /// Euclidean distance from `p` to the inflated boundary (zero on it).
    /// Points inside report their distance to the boundary as well.
    pub fn boundary_distance(&self, p: Point2) -> f64 {
        let (ea, eb) = self.effective_axes();
        let r = self.to_axes(p);
        distance_to_axis_aligned_ellipse(ea, eb, r.x.abs(), r.y.abs())
    }
}

/// Distance from `(y0, y1)` in the first quadrant to the ellipse
/// `x0^2/e0^2 + x1^2/e1^2 = 1` with `e0 >= e1 > 0`.
///
/// Robust bisection on the Lagrange multiplier (Eberly, "Distance from a
/// point to an ellipse").
fn distance_to_axis_aligned_ellipse(e0: f64, e1: f64, y0: f64, y1: f64) -> f64 {
    if y1 > 0.0 {
        if y0 > 0.0 {
            let z0 = y0 / e0;
            let z1 = y1 / e1;
            let g = z0 * z0 + z1 * z1 - 1.0;
            if g == 0.0 {
                return 0.0;
            }
            let r0 = (e0 / e1) * (e0 / e1);
            let s = lagrange_root(r0, z0, z1, g);
            let x0 = r0 * y0 / (s + r0);
            let x1 = y1 / (s + 1.0);
            (x0 - y0).hypot(x1 - y1)
        } else {
            (y1 - e1).abs()
        }
    } else {
        let numer0 = e0 * y0;
        let denom0 = e0 * e0 - e1 * e1;
        if numer0 < denom0 {
            let xde0 = numer0 / denom0;
            let x0 = e0 * xde0;
            let x1 = e1 * (1.0 - xde0 * xde0).max(0.0).sqrt();
            (x0 - y0).hypot(x1)
        } else {
            (y0 - e0).abs()
        }
    }
}

fn lagrange_root(r0: f64, z0: f64, z1: f64, g: f64) -> f64 {
    let n0 = r0 * z0;
    let mut s0 = z1 - 1.0;
    let mut s1 = if g < 0.0 { 0.0 } else { n0.hypot(z1) - 1.0 };
    let mut s = 0.0;
    for _ in 0..200 {
        s = 0.5 * (s0 + s1);
        if s == s0 || s == s1 {
            break;
        }
        let ratio0 = n0 / (s + r0);
        let ratio1 = z1 / (s + 1.0);
        let gs = ratio0 * ratio0 + ratio1 * ratio1 - 1.0;
        if gs > 0.0 {
            s0 = s;
        } else if gs < 0.0 {
            s1 = s;
        } else {
            break;
        }
    }
    s
}

/// Free function form of [`EllipseObstacle::signed_margin`].
pub fn signed_margin(obs: &EllipseObstacle, p: Point2) -> f64 {
    obs.signed_margin(p)
}

pub fn segment_collides(obs: &EllipseObstacle, s: &Segment, eps: f64) -> Option<f64> {
    obs.segment_collides(s, eps)
}

pub fn tangent_points(obs: &EllipseObstacle, p: Point2) -> Result<[Point2; 2], GeometryError> {
    obs.tangent_points(p)
}

/// The colliding obstacle whose penetration starts closest to `s.p`.
/// Ties on the entry parameter go to the lower obstacle id.
pub fn first_collided<'a>(
    s: &Segment,
    obstacles: impl IntoIterator<Item = &'a EllipseObstacle>,
    eps: f64,
) -> Option<(&'a EllipseObstacle, f64)> {
    let mut best: Option<(&EllipseObstacle, f64)> = None;
    for obs in obstacles {
        let Some(t) = obs.segment_collides(s, eps) else {
            continue;
        };
        let better = match best {
            None => true,
            Some((b, bt)) => t < bt || (t == bt && obs.id < b.id),
        };
        if better {
            best = Some((obs, t));
        }
    }
    best
}

/// Number of distinct obstacles penetrated by `s`.
pub fn count_collisions<'a>(
    s: &Segment,
    obstacles: impl IntoIterator<Item = &'a EllipseObstacle>,
    eps: f64,
) -> usize {
    obstacles
        .into_iter()
        .filter(|o| o.segment_collides(s, eps).is_some())
        .count()
}

/// A temporary path `O -> F -> D` around one obstacle, where `F` is the
/// meeting point of an origin tangent and the same-side destination tangent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubPathCandidate {
    pub waypoint: Point2,
    pub origin_leg: Segment,
    pub destination_leg: Segment,
    pub length: f64,
}

impl SubPathCandidate {
    pub fn through(origin: Point2, waypoint: Point2, destination: Point2) -> Self {
        let origin_leg = Segment::new(origin, waypoint);
        let destination_leg = Segment::new(waypoint, destination);
        Self {
            waypoint,
            origin_leg,
            destination_leg,
            length: origin_leg.length() + destination_leg.length(),
        }
    }
}

/// Which side of the directed line `O -> D` a candidate passes on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

/// Both sub-paths around `obs`, as `[left, right]`: the left sub-path keeps
/// the obstacle on its right. When `origin -> destination` crosses the
/// obstacle these are the sides of that directed line. A side is `None` when
/// its paired tangent lines are parallel or only meet behind the origin or
/// destination.
pub fn sub_path_sides(
    origin: Point2,
    destination: Point2,
    obs: &EllipseObstacle,
) -> Result<[Option<SubPathCandidate>; 2], GeometryError> {
    let from_origin = obs.tangent_points(origin)?;
    let from_destination = obs.tangent_points(destination)?;
    let center = obs.center;

    // Order each tangent pair as (left pass, right pass). Going around the
    // left the obstacle stays on the right: it lies clockwise of the ray
    // origin -> T, and counter-clockwise of the ray destination -> T.
    let order = |base: Point2, pts: [Point2; 2], left_sign: f64| -> Option<(Point2, Point2)> {
        let s0 = (pts[0] - base).cross(center - base) * left_sign;
        let s1 = (pts[1] - base).cross(center - base) * left_sign;
        if s0 > 0.0 && s1 < 0.0 {
            Some((pts[0], pts[1]))
        } else if s0 < 0.0 && s1 > 0.0 {
            Some((pts[1], pts[0]))
        } else {
            None
        }
    };
    let (Some((ol, or)), Some((dl, dr))) = (
        order(origin, from_origin, -1.0),
        order(destination, from_destination, 1.0),
    ) else {
        return Err(GeometryError::DegenerateTangency { id: obs.id });
    };

    Ok([meet(origin, destination, ol, dl), meet(origin, destination, or, dr)])
}

/// Both sub-paths around `obs`: `[left, right]` of the directed line
/// `origin -> destination`.
pub fn sub_paths(
    origin: Point2,
    destination: Point2,
    obs: &EllipseObstacle,
) -> Result<[SubPathCandidate; 2], GeometryError> {
    match sub_path_sides(origin, destination, obs)? {
        [Some(l), Some(r)] => Ok([l, r]),
        _ => Err(GeometryError::DegenerateTangency { id: obs.id }),
    }
}

/// Sub-path on one side of a group of obstacles: the outermost same-side
/// tangent from the origin meets the outermost one from the destination.
/// With a single obstacle this is the matching side of [`sub_path_sides`].
/// `None` when the two supporting lines do not meet ahead of both ends.
pub fn group_sub_path(
    origin: Point2,
    destination: Point2,
    group: &[&EllipseObstacle],
    side: Side,
) -> Result<Option<SubPathCandidate>, GeometryError> {
    let sign = match side {
        Side::Left => 1.0,
        Side::Right => -1.0,
    };
    // angle of v measured from the reference direction, in (-pi, pi]
    let angle = |reference: Point2, v: Point2| reference.cross(v).atan2(reference.dot(v));
    let mut from_origin: Option<(f64, Point2)> = None;
    let mut from_destination: Option<(f64, Point2)> = None;
    for obs in group {
        let c = obs.center;
        // the left pass has the obstacle clockwise of the origin ray and
        // counter-clockwise of the destination ray
        let pick = |base: Point2, pts: [Point2; 2], want: f64| {
            pts.into_iter().find(|&t| (t - base).cross(c - base) * want > 0.0)
        };
        let (Some(to), Some(td)) = (
            pick(origin, obs.tangent_points(origin)?, -sign),
            pick(destination, obs.tangent_points(destination)?, sign),
        ) else {
            return Err(GeometryError::DegenerateTangency { id: obs.id });
        };
        // outermost: most counter-clockwise from the origin on the left,
        // most clockwise from the destination
        let ao = sign * angle(destination - origin, to - origin);
        let ad = -sign * angle(origin - destination, td - destination);
        if from_origin.is_none_or(|(best, _)| ao > best) {
            from_origin = Some((ao, to));
        }
        if from_destination.is_none_or(|(best, _)| ad > best) {
            from_destination = Some((ad, td));
        }
    }
    let (Some((_, to)), Some((_, td))) = (from_origin, from_destination) else {
        return Ok(None);
    };
    Ok(meet(origin, destination, to, td))
}

/// Fallback sub-path for a side whose tangent rays do not meet ahead: the
/// pass wraps far around the obstacle. The waypoint is where the origin
/// tangent meets the tangent a quarter of the way along the wrapped arc,
/// so repeated steps walk around the obstacle.
pub fn wrap_sub_path(
    origin: Point2,
    destination: Point2,
    obs: &EllipseObstacle,
    side: Side,
) -> Result<SubPathCandidate, GeometryError> {
    // clockwise travel keeps the obstacle on the right
    let turn = match side {
        Side::Left => -1.0,
        Side::Right => 1.0,
    };
    let along = |a: f64| Point2::new(-a.sin(), a.cos()) * turn;
    let touch = |p: Point2, leaving: bool| -> Result<f64, GeometryError> {
        let u = obs.to_normalized(p);
        let rho = u.norm();
        if rho <= 1.0 {
            return Err(GeometryError::PointInsideObstacle { id: obs.id, x: p.x, y: p.y });
        }
        let spread = (1.0 / rho).acos();
        let base = u.y.atan2(u.x);
        [base + spread, base - spread]
            .into_iter()
            .find(|&a| {
                let t = Point2::new(a.cos(), a.sin());
                let heading = if leaving { u - t } else { t - u };
                heading.dot(along(a)) > 0.0
            })
            .ok_or(GeometryError::DegenerateTangency { id: obs.id })
    };
    let a0 = touch(origin, false)?;
    let a1 = touch(destination, true)?;
    let tau = 2.0 * std::f64::consts::PI;
    let arc = ((a1 - a0) * turn).rem_euclid(tau);
    let half = arc / 4.0;
    if !(half > 0.0 && half < std::f64::consts::FRAC_PI_2) {
        return Err(GeometryError::DegenerateTangency { id: obs.id });
    }
    let mid = a0 + turn * half;
    let corner = Point2::new(mid.cos(), mid.sin()) * (1.0 / half.cos());
    let f = obs.from_normalized(corner);
    if !f.is_finite() {
        return Err(GeometryError::DegenerateTangency { id: obs.id });
    }
    Ok(SubPathCandidate::through(origin, f, destination))
}

/// Meeting point of the rays origin -> `to` and destination -> `td`, as a
/// sub-path, when it lies ahead of both ends.
fn meet(origin: Point2, destination: Point2, to: Point2, td: Point2) -> Option<SubPathCandidate> {
    let u = to - origin;
    let w = td - destination;
    let denom = u.cross(w);
    let scale = u.norm() * w.norm();
    if denom.abs() <= 1e-12 * scale {
        return None;
    }
    let rhs = destination - origin;
    let s = rhs.cross(w) / denom;
    let r = rhs.cross(u) / denom;
    if !(s > 0.0 && r > 0.0) {
        return None;
    }
    let f = origin + u * s;
    f.is_finite().then(|| SubPathCandidate::through(origin, f, destination))
}
