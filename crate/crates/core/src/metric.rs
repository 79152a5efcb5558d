//! The visual-angle visibility model.
//!
//! Angles are in degrees unless a name says otherwise; the angular
//! resolution `mu` is carried in arcminutes.

use std::fmt;
use std::str::FromStr;

use crate::error::{invalid_param, Result, VcmError};
use crate::geometry::{
    segment_intersects_rect, triangle_intersects_rect, Point, Rect, Segment, Wedge,
};

/// The viewed line-segment target.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Target {
    pub geom: Segment,
    pub midpoint: Point,
    pub length: f64,
    pub direction_deg: f64,
}

impl Target {
    pub fn new(geom: Segment) -> Self {
        let d = geom.b - geom.a;
        Self {
            geom,
            midpoint: geom.midpoint(),
            length: d.norm(),
            direction_deg: d.y.atan2(d.x).to_degrees(),
        }
    }

    pub fn from_endpoints(a: Point, b: Point) -> Result<Self> {
        Ok(Self::new(Segment::new(a, b)?))
    }

    /// Segment of length `length` centered at `center` pointing along `direction_deg`.
    pub fn centered(center: Point, length: f64, direction_deg: f64) -> Result<Self> {
        if !(length > 0.0 && length.is_finite()) {
            return Err(invalid_param(
                "length",
                format!("must be positive, got {length}"),
            ));
        }
        let half = Point::from_polar(length / 2.0, direction_deg.to_radians());
        Self::from_endpoints(center - half, center + half)
    }

    pub fn frame(&self) -> TargetFrame {
        let u = (self.geom.b - self.geom.a) * (1.0 / self.length);
        TargetFrame {
            origin: self.midpoint,
            ux: u,
            uy: u.perp(),
        }
    }
}

/// Target-local frame: origin at the midpoint, x along the target, y along
/// its counterclockwise normal.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TargetFrame {
    pub origin: Point,
    pub ux: Point,
    pub uy: Point,
}

impl TargetFrame {
    pub fn to_local(&self, p: Point) -> Point {
        let v = p - self.origin;
        Point::new(v.dot(self.ux), v.dot(self.uy))
    }

    pub fn to_world(&self, p: Point) -> Point {
        self.origin + self.ux * p.x + self.uy * p.y
    }

    /// World-frame polar angle (radians) of a local-frame polar angle.
    pub fn world_angle(&self, local_rad: f64) -> f64 {
        local_rad + self.ux.y.atan2(self.ux.x)
    }
}

/// What color points closer than the near point receive.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum NearPointPolicy {
    /// Evaluate at the near point distance.
    #[default]
    Clamp,
    Zero,
}

impl FromStr for NearPointPolicy {
    type Err = VcmError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "clamp" => Ok(Self::Clamp),
            "zero" => Ok(Self::Zero),
            other => Err(invalid_param(
                "inside_nearpoint",
                format!("expected clamp or zero, got {other}"),
            )),
        }
    }
}

impl fmt::Display for NearPointPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Clamp => "clamp",
            Self::Zero => "zero",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VisionParams {
    pub mu_arcmin: f64,
    pub d0: f64,
    pub fov_deg: f64,
    pub gaze_deg: f64,
    pub near_point: NearPointPolicy,
}

impl VisionParams {
    pub fn new(mu_arcmin: f64, d0: f64, fov_deg: f64, gaze_deg: f64) -> Result<Self> {
        if !(mu_arcmin > 0.0 && mu_arcmin.is_finite()) {
            return Err(invalid_param(
                "mu_arcmin",
                format!("must be positive, got {mu_arcmin}"),
            ));
        }
        if !(d0 > 0.0 && d0.is_finite()) {
            return Err(invalid_param("d0", format!("must be positive, got {d0}")));
        }
        if !(fov_deg > 0.0 && fov_deg <= 360.0) {
            return Err(invalid_param(
                "fov_deg",
                format!("must be in (0, 360], got {fov_deg}"),
            ));
        }
        if !gaze_deg.is_finite() {
            return Err(invalid_param("gaze_deg", "must be finite"));
        }
        Ok(Self {
            mu_arcmin,
            d0,
            fov_deg,
            gaze_deg,
            near_point: NearPointPolicy::Clamp,
        })
    }

    pub fn with_near_point(mut self, policy: NearPointPolicy) -> Self {
        self.near_point = policy;
        self
    }

    pub fn with_gaze(mut self, gaze_deg: f64, fov_deg: f64) -> Self {
        self.gaze_deg = gaze_deg;
        self.fov_deg = fov_deg;
        self
    }

    pub fn mu_deg(&self) -> f64 {
        self.mu_arcmin / 60.0
    }

    /// The field-of-view wedge anchored at the target midpoint.
    pub fn wedge(&self, t: &Target) -> Wedge {
        Wedge {
            apex: t.midpoint,
            gaze_deg: self.gaze_deg,
            fov_deg: self.fov_deg,
        }
    }

    /// Same parameters except for gaze and field of view.
    pub(crate) fn same_model(&self, o: &VisionParams) -> bool {
        self.mu_arcmin == o.mu_arcmin && self.d0 == o.d0 && self.near_point == o.near_point
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ViewGeometry {
    pub d: f64,
    pub alpha_deg: f64,
}

pub fn visual_angle(s: f64, d: f64) -> Result<f64> {
    if d.is_nan() || d <= 0.0 {
        return Err(invalid_param("D", format!("must be positive, got {d}")));
    }
    if s.is_nan() || s <= 0.0 {
        return Err(invalid_param("S", format!("must be positive, got {s}")));
    }
    Ok(visual_angle_unchecked(s, d))
}

#[inline]
pub(crate) fn visual_angle_unchecked(s: f64, d: f64) -> f64 {
    2.0 * (s / (2.0 * d)).atan().to_degrees()
}

pub fn perceived_length(s: f64, alpha_deg: f64) -> Result<f64> {
    if !(0.0..=90.0).contains(&alpha_deg) {
        return Err(invalid_param(
            "alpha_deg",
            format!("must be in [0, 90], got {alpha_deg}"),
        ));
    }
    Ok(alpha_deg / 90.0 * s)
}

pub fn view_geometry(p: Point, t: &Target) -> ViewGeometry {
    let local = t.frame().to_local(p);
    ViewGeometry {
        d: local.norm(),
        alpha_deg: local.y.abs().atan2(local.x.abs()).to_degrees(),
    }
}

/// Distance at which the target subtends exactly `mu`.
pub fn d_max(s: f64, mu_arcmin: f64) -> f64 {
    s / (2.0 * ((mu_arcmin / 60.0).to_radians() / 2.0).tan())
}

/// Normalization constant: the head-on visual angle at the near point.
pub fn v_norm(s: f64, d0: f64) -> f64 {
    visual_angle_unchecked(s, d0)
}

/// Visual angle perceived from geometry `g`, with `D` clamped to the near point.
pub fn perceived_angle(g: ViewGeometry, s: f64, vp: &VisionParams) -> f64 {
    let d = g.d.max(vp.d0);
    visual_angle_unchecked(g.alpha_deg / 90.0 * s, d)
}

pub fn color_from_geometry(g: ViewGeometry, s: f64, vp: &VisionParams) -> f64 {
    if vp.near_point == NearPointPolicy::Zero && g.d < vp.d0 {
        return 0.0;
    }
    let v = perceived_angle(g, s, vp);
    if v < vp.mu_deg() {
        return 0.0;
    }
    (v / v_norm(s, vp.d0)).min(1.0)
}

pub fn visibility_color(p: Point, t: &Target, vp: &VisionParams) -> f64 {
    color_from_geometry(view_geometry(p, t), t.length, vp)
}

/// True iff no obstacle blocks any sightline from `p` to the target.
/// Obstacles touching the target itself are ignored.
pub fn fully_visible(p: Point, t: &Target, obstacles: &[Rect]) -> bool {
    obstacles
        .iter()
        .filter(|o| !segment_intersects_rect(&t.geom, o))
        .all(|o| !triangle_intersects_rect(p, &t.geom, o))
}
