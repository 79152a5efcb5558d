//! Planar primitives and predicates shared by every stage of the pipeline.
//!
//! All predicates work in double precision with an absolute tolerance of
//! [`EPS`] dataspace units for on-boundary decisions. Touching counts as
//! intersecting.

use std::f64::consts::{PI, TAU};
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Result, VcmError};

/// Absolute tolerance for on-boundary decisions, in dataspace units.
pub const EPS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn from_polar(r: f64, angle_rad: f64) -> Self {
        Self::new(r * angle_rad.cos(), r * angle_rad.sin())
    }

    pub fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Point) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, o: Point) -> f64 {
        (self - o).norm()
    }

    /// Counterclockwise perpendicular.
    pub fn perp(self) -> Point {
        Point::new(-self.y, self.x)
    }

    pub fn lerp(self, o: Point, t: f64) -> Point {
        self + (o - self) * t
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, k: f64) -> Point {
        Point::new(self.x * k, self.y * k)
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Segment {
    pub a: Point,
    pub b: Point,
}

impl Segment {
    pub fn new(a: Point, b: Point) -> Result<Self> {
        if !a.is_finite() || !b.is_finite() {
            return Err(VcmError::InvalidGeometry(
                "non-finite segment endpoint".into(),
            ));
        }
        if a == b {
            return Err(VcmError::InvalidGeometry(
                "segment endpoints coincide".into(),
            ));
        }
        Ok(Self { a, b })
    }

    pub fn length(&self) -> f64 {
        self.a.distance(self.b)
    }

    pub fn midpoint(&self) -> Point {
        self.a.lerp(self.b, 0.5)
    }

    pub fn reversed(&self) -> Segment {
        Segment {
            a: self.b,
            b: self.a,
        }
    }

    pub fn bbox(&self) -> Rect {
        Rect {
            min: Point::new(self.a.x.min(self.b.x), self.a.y.min(self.b.y)),
            max: Point::new(self.a.x.max(self.b.x), self.a.y.max(self.b.y)),
        }
    }
}

/// Closed axis-aligned rectangle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect {
    pub min: Point,
    pub max: Point,
}

impl Rect {
    pub fn new(min: Point, max: Point) -> Result<Self> {
        if !min.is_finite() || !max.is_finite() {
            return Err(VcmError::InvalidGeometry(
                "non-finite rectangle corner".into(),
            ));
        }
        if !(min.x < max.x && min.y < max.y) {
            return Err(VcmError::InvalidGeometry(format!(
                "rectangle must have positive extent, got ({}, {})-({}, {})",
                min.x, min.y, max.x, max.y
            )));
        }
        Ok(Self { min, max })
    }

    pub fn from_coords(xmin: f64, ymin: f64, xmax: f64, ymax: f64) -> Result<Self> {
        Self::new(Point::new(xmin, ymin), Point::new(xmax, ymax))
    }

    /// Square of side `side` centered at `center`.
    pub fn square(center: Point, side: f64) -> Result<Self> {
        let h = side / 2.0;
        Self::from_coords(center.x - h, center.y - h, center.x + h, center.y + h)
    }

    pub(crate) fn from_corners_unchecked(min: Point, max: Point) -> Self {
        Self { min, max }
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> Point {
        self.min.lerp(self.max, 0.5)
    }

    pub fn diagonal(&self) -> f64 {
        self.min.distance(self.max)
    }

    /// Corners in counterclockwise order starting at `min`.
    pub fn corners(&self) -> [Point; 4] {
        [
            self.min,
            Point::new(self.max.x, self.min.y),
            self.max,
            Point::new(self.min.x, self.max.y),
        ]
    }

    pub fn contains_point(&self, p: Point) -> bool {
        p.x >= self.min.x - EPS
            && p.x <= self.max.x + EPS
            && p.y >= self.min.y - EPS
            && p.y <= self.max.y + EPS
    }

    pub fn contains_rect(&self, o: &Rect) -> bool {
        self.contains_point(o.min) && self.contains_point(o.max)
    }

    /// Closed intersection (touching counts).
    pub fn intersects(&self, o: &Rect) -> bool {
        self.min.x <= o.max.x + EPS
            && o.min.x <= self.max.x + EPS
            && self.min.y <= o.max.y + EPS
            && o.min.y <= self.max.y + EPS
    }

    /// True when the two rectangles share a region of positive area.
    pub fn overlaps_interior(&self, o: &Rect) -> bool {
        self.min.x < o.max.x - EPS
            && o.min.x < self.max.x - EPS
            && self.min.y < o.max.y - EPS
            && o.min.y < self.max.y - EPS
    }

    pub fn intersection(&self, o: &Rect) -> Option<Rect> {
        let min = Point::new(self.min.x.max(o.min.x), self.min.y.max(o.min.y));
        let max = Point::new(self.max.x.min(o.max.x), self.max.y.min(o.max.y));
        (min.x < max.x && min.y < max.y).then_some(Rect { min, max })
    }

    pub fn union(&self, o: &Rect) -> Rect {
        Rect {
            min: Point::new(self.min.x.min(o.min.x), self.min.y.min(o.min.y)),
            max: Point::new(self.max.x.max(o.max.x), self.max.y.max(o.max.y)),
        }
    }

    pub fn bounding(points: impl IntoIterator<Item = Point>) -> Option<Rect> {
        let mut it = points.into_iter();
        let first = it.next()?;
        let (mut min, mut max) = (first, first);
        for p in it {
            min = Point::new(min.x.min(p.x), min.y.min(p.y));
            max = Point::new(max.x.max(p.x), max.y.max(p.y));
        }
        Some(Rect { min, max })
    }

    pub fn max_distance_to(&self, p: Point) -> f64 {
        let dx = (p.x - self.min.x).abs().max((p.x - self.max.x).abs());
        let dy = (p.y - self.min.y).abs().max((p.y - self.max.y).abs());
        dx.hypot(dy)
    }

    fn shrunk(&self, by: f64) -> Rect {
        if self.width() > 4.0 * by && self.height() > 4.0 * by {
            Rect {
                min: Point::new(self.min.x + by, self.min.y + by),
                max: Point::new(self.max.x - by, self.max.y - by),
            }
        } else {
            *self
        }
    }

    fn expanded(&self, by: f64) -> Rect {
        Rect {
            min: Point::new(self.min.x - by, self.min.y - by),
            max: Point::new(self.max.x + by, self.max.y + by),
        }
    }
}

/// Simple counterclockwise polygon.
#[derive(Clone, Debug, PartialEq)]
pub struct Polygon {
    vertices: Vec<Point>,
}

impl Polygon {
    /// Validates vertex count, orientation and simplicity.
    pub fn new(vertices: Vec<Point>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(VcmError::InvalidGeometry(
                "polygon needs at least 3 vertices".into(),
            ));
        }
        if vertices.iter().any(|p| !p.is_finite()) {
            return Err(VcmError::InvalidGeometry(
                "non-finite polygon vertex".into(),
            ));
        }
        let poly = Self { vertices };
        if poly.signed_area() <= 0.0 {
            return Err(VcmError::InvalidGeometry(
                "polygon must be counterclockwise".into(),
            ));
        }
        if poly.self_intersects() {
            return Err(VcmError::InvalidGeometry("polygon self-intersects".into()));
        }
        Ok(poly)
    }

    pub(crate) fn from_ccw_unchecked(vertices: Vec<Point>) -> Self {
        Self { vertices }
    }

    pub fn from_rect(r: &Rect) -> Self {
        Self {
            vertices: r.corners().to_vec(),
        }
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn signed_area(&self) -> f64 {
        self.edges().map(|(a, b)| a.cross(b)).sum::<f64>() / 2.0
    }

    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }

    pub fn bbox(&self) -> Rect {
        Rect::bounding(self.vertices.iter().copied()).expect("polygon has vertices")
    }

    pub fn centroid(&self) -> Point {
        let a = self.signed_area();
        let (mut cx, mut cy) = (0.0, 0.0);
        for (p, q) in self.edges() {
            let w = p.cross(q);
            cx += (p.x + q.x) * w;
            cy += (p.y + q.y) * w;
        }
        Point::new(cx / (6.0 * a), cy / (6.0 * a))
    }

    /// Closed membership: points within [`EPS`] of the boundary are inside.
    pub fn contains_point(&self, p: Point) -> bool {
        if self
            .edges()
            .any(|(a, b)| point_segment_distance(p, a, b) <= EPS)
        {
            return true;
        }
        self.strictly_contains(p)
    }

    /// Crossing-number test; boundary behaviour unspecified.
    fn strictly_contains(&self, p: Point) -> bool {
        let mut inside = false;
        for (a, b) in self.edges() {
            if (a.y > p.y) != (b.y > p.y) {
                let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
                if p.x < x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    pub fn is_convex(&self) -> bool {
        let n = self.vertices.len();
        (0..n).all(|i| {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            let c = self.vertices[(i + 2) % n];
            (b - a).cross(c - b) >= -EPS
        })
    }

    fn self_intersects(&self) -> bool {
        let n = self.vertices.len();
        for i in 0..n {
            let (a, b) = (self.vertices[i], self.vertices[(i + 1) % n]);
            for j in (i + 2)..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                let (c, d) = (self.vertices[j], self.vertices[(j + 1) % n]);
                if segments_properly_intersect(a, b, c, d) {
                    return true;
                }
            }
        }
        false
    }
}

/// Field-of-view wedge: all points whose direction from `apex` lies within
/// `fov_deg / 2` of `gaze_deg`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Wedge {
    pub apex: Point,
    pub gaze_deg: f64,
    pub fov_deg: f64,
}

impl Wedge {
    pub fn new(apex: Point, gaze_deg: f64, fov_deg: f64) -> Result<Self> {
        if !(fov_deg > 0.0 && fov_deg <= 360.0) {
            return Err(crate::error::invalid_param(
                "fov_deg",
                format!("must be in (0, 360], got {fov_deg}"),
            ));
        }
        if !gaze_deg.is_finite() || !apex.is_finite() {
            return Err(VcmError::InvalidGeometry("non-finite wedge".into()));
        }
        Ok(Self {
            apex,
            gaze_deg,
            fov_deg,
        })
    }

    pub fn is_full(&self) -> bool {
        self.fov_deg >= 360.0
    }

    fn half_rad(&self) -> f64 {
        self.fov_deg.to_radians() / 2.0
    }

    /// Closed membership test; the apex itself is inside.
    pub fn contains_point(&self, p: Point) -> bool {
        if self.is_full() {
            return true;
        }
        let v = p - self.apex;
        if v.norm() <= EPS {
            return true;
        }
        let off = normalize_angle(v.y.atan2(v.x) - self.gaze_deg.to_radians());
        off.abs() <= self.half_rad() + 1e-12
    }

    /// Unit vectors along the two arms, clockwise arm first.
    pub fn arms(&self) -> (Point, Point) {
        let g = self.gaze_deg.to_radians();
        let h = self.half_rad();
        (Point::from_polar(1.0, g - h), Point::from_polar(1.0, g + h))
    }
}

/// Result of classifying a block against a region.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Containment {
    Inside,
    Outside,
    Partial,
}

/// Wraps an angle into `(-PI, PI]`.
pub fn normalize_angle(a: f64) -> f64 {
    let mut r = a.rem_euclid(TAU);
    if r > PI {
        r -= TAU;
    }
    r
}

pub fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = b - a;
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return p.distance(a);
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    p.distance(a + ab * t)
}

fn segments_properly_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    let d1 = (b - a).cross(c - a);
    let d2 = (b - a).cross(d - a);
    let d3 = (d - c).cross(a - c);
    let d4 = (d - c).cross(b - c);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

/// Liang-Barsky parameter interval of the part of `a -> b` inside `r`.
fn clip_segment_params(a: Point, b: Point, r: &Rect) -> Option<(f64, f64)> {
    let d = b - a;
    let (mut t0, mut t1) = (0.0_f64, 1.0_f64);
    let checks = [
        (-d.x, a.x - r.min.x),
        (d.x, r.max.x - a.x),
        (-d.y, a.y - r.min.y),
        (d.y, r.max.y - a.y),
    ];
    for (p, q) in checks {
        if p == 0.0 {
            if q < 0.0 {
                return None;
            }
        } else {
            let t = q / p;
            if p < 0.0 {
                if t > t1 {
                    return None;
                }
                t0 = t0.max(t);
            } else {
                if t < t0 {
                    return None;
                }
                t1 = t1.min(t);
            }
        }
    }
    (t0 <= t1).then_some((t0, t1))
}

/// True iff the segment and the closed rectangle share a point. Touching
/// within [`EPS`] counts.
pub fn segment_intersects_rect(s: &Segment, r: &Rect) -> bool {
    clip_segment_params(s.a, s.b, &r.expanded(EPS)).is_some()
}

fn segment_crosses_interior(a: Point, b: Point, r: &Rect) -> bool {
    clip_segment_params(a, b, &r.shrunk(EPS)).is_some()
}

/// True iff the closed triangle `(p, s.a, s.b)` meets the closed rectangle.
/// A triangle degenerated by collinearity falls back to the segment test.
pub fn triangle_intersects_rect(p: Point, s: &Segment, r: &Rect) -> bool {
    let tri = [p, s.a, s.b];
    let longest = tri[0]
        .distance(tri[1])
        .max(tri[1].distance(tri[2]))
        .max(tri[0].distance(tri[2]));
    let area2 = (s.a - p).cross(s.b - p);
    if area2.abs() <= EPS * longest.max(1.0) {
        // collinear: the triangle is the segment between its two farthest points
        let (u, v) = [(0, 1), (1, 2), (0, 2)]
            .into_iter()
            .max_by(|&(i, j), &(k, l)| tri[i].distance(tri[j]).total_cmp(&tri[k].distance(tri[l])))
            .map(|(i, j)| (tri[i], tri[j]))
            .unwrap();
        if u == v {
            return r.contains_point(u);
        }
        return segment_intersects_rect(&Segment { a: u, b: v }, r);
    }
    let corners = r.corners();
    let mut axes = vec![Point::new(1.0, 0.0), Point::new(0.0, 1.0)];
    for i in 0..3 {
        let e = tri[(i + 1) % 3] - tri[i];
        let len = e.norm();
        axes.push(e.perp() * (1.0 / len));
    }
    axes.into_iter().all(|axis| {
        let (tmin, tmax) = project(&tri, axis);
        let (rmin, rmax) = project(&corners, axis);
        tmax >= rmin - EPS && rmax >= tmin - EPS
    })
}

fn project(points: &[Point], axis: Point) -> (f64, f64) {
    points
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
            let d = p.dot(axis);
            (lo.min(d), hi.max(d))
        })
}

/// The two vertices of `r` that are angular extremes as seen from `p`:
/// `left` is the most counterclockwise one, `right` the most clockwise.
/// When two vertices tie on an extreme ray, the nearer one is returned.
pub fn tangent_vertices(p: Point, r: &Rect) -> Result<(Point, Point)> {
    if r.contains_point(p) {
        return Err(VcmError::PointInsideRect);
    }
    let reference = r.center() - p;
    let offsets: Vec<(f64, f64, Point)> = r
        .corners()
        .into_iter()
        .map(|c| {
            let v = c - p;
            (reference.cross(v).atan2(reference.dot(v)), v.norm(), c)
        })
        .collect();
    let pick = |better: &dyn Fn(f64, f64) -> bool| {
        let mut best = offsets[0];
        for &cand in &offsets[1..] {
            if better(cand.0, best.0) || ((cand.0 - best.0).abs() <= 1e-12 && cand.1 < best.1) {
                best = cand;
            }
        }
        best.2
    };
    let left = pick(&|a, b| a > b + 1e-12);
    let right = pick(&|a, b| a < b - 1e-12);
    Ok((left, right))
}

/// Keeps the part of a polygon ring where `(p - origin) . normal >= 0`.
/// Intersections are interpolated from the kept endpoint so far-away vertices
/// do not lose precision.
pub(crate) fn clip_halfplane(ring: &[Point], origin: Point, normal: Point) -> Vec<Point> {
    let n = ring.len();
    let mut out = Vec::with_capacity(n + 2);
    if n == 0 {
        return out;
    }
    let side = |p: Point| (p - origin).dot(normal);
    let cross_at = |inside: Point, s_in: f64, outside: Point, s_out: f64| {
        let t = s_in / (s_in - s_out);
        inside + (outside - inside) * t
    };
    for i in 0..n {
        let cur = ring[i];
        let prev = ring[(i + n - 1) % n];
        let (sc, sp) = (side(cur), side(prev));
        if sc >= 0.0 {
            if sp < 0.0 {
                out.push(cross_at(cur, sc, prev, sp));
            }
            out.push(cur);
        } else if sp >= 0.0 {
            out.push(cross_at(prev, sp, cur, sc));
        }
    }
    out
}

/// Removes consecutive duplicates; returns `None` if fewer than three
/// distinct vertices or no area remain.
pub(crate) fn tidy_ring(mut ring: Vec<Point>) -> Option<Polygon> {
    ring.dedup_by(|a, b| a.distance(*b) <= EPS);
    while ring.len() > 1 && ring[0].distance(*ring.last().unwrap()) <= EPS {
        ring.pop();
    }
    if ring.len() < 3 {
        return None;
    }
    let poly = Polygon::from_ccw_unchecked(ring);
    (poly.signed_area() > EPS * EPS).then_some(poly)
}

/// Sutherland-Hodgman clip of `poly` against the rectangle; `None` when
/// nothing of positive area remains.
pub fn clip_polygon_to_rect(poly: &Polygon, r: &Rect) -> Option<Polygon> {
    clip_ring_to_rect(poly.vertices(), r)
}

pub(crate) fn clip_ring_to_rect(ring: &[Point], r: &Rect) -> Option<Polygon> {
    let mut ring = ring.to_vec();
    let planes = [
        (r.min, Point::new(1.0, 0.0)),
        (r.max, Point::new(-1.0, 0.0)),
        (r.min, Point::new(0.0, 1.0)),
        (r.max, Point::new(0.0, -1.0)),
    ];
    for (origin, normal) in planes {
        ring = clip_halfplane(&ring, origin, normal);
        if ring.is_empty() {
            return None;
        }
    }
    tidy_ring(ring)
}

/// Classifies a block against a simple polygon: `Inside` iff the block is
/// contained in the polygon, `Outside` iff their interiors are disjoint.
pub fn classify_rect_vs_polygon(block: &Rect, poly: &Polygon) -> Containment {
    let bb = poly.bbox();
    if !bb.overlaps_interior(block) {
        return Containment::Outside;
    }
    if poly
        .edges()
        .any(|(a, b)| segment_crosses_interior(a, b, block))
    {
        return Containment::Partial;
    }
    // No boundary passes through the block interior, so the interior lies
    // wholly on one side.
    if poly.strictly_contains(block.center()) {
        Containment::Inside
    } else {
        Containment::Outside
    }
}

/// Classifies a block against a field-of-view wedge.
pub fn wedge_classify(block: &Rect, w: &Wedge) -> Containment {
    if w.is_full() {
        return Containment::Inside;
    }
    if block.contains_point(w.apex) {
        return Containment::Partial;
    }
    let c = block.center() - w.apex;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for corner in block.corners() {
        let v = corner - w.apex;
        let off = c.cross(v).atan2(c.dot(v));
        lo = lo.min(off);
        hi = hi.max(off);
    }
    let u = normalize_angle(c.y.atan2(c.x) - w.gaze_deg.to_radians());
    let (lo, hi) = (u + lo, u + hi);
    let half = w.half_rad();
    let tol = 1e-12;
    let mut inside = false;
    let mut touches = false;
    for k in [-1.0, 0.0, 1.0] {
        let (wlo, whi) = (-half + TAU * k, half + TAU * k);
        if lo >= wlo - tol && hi <= whi + tol {
            inside = true;
        }
        if hi > wlo + tol && lo < whi - tol {
            touches = true;
        }
    }
    if inside {
        Containment::Inside
    } else if touches {
        Containment::Partial
    } else {
        Containment::Outside
    }
}

/// Euclidean minimum distance between two closed sets; zero when they meet.
pub trait MinDist<Rhs: ?Sized> {
    fn mindist(&self, other: &Rhs) -> f64;
}

impl MinDist<Rect> for Point {
    fn mindist(&self, r: &Rect) -> f64 {
        let dx = (r.min.x - self.x).max(0.0).max(self.x - r.max.x);
        let dy = (r.min.y - self.y).max(0.0).max(self.y - r.max.y);
        dx.hypot(dy)
    }
}

impl MinDist<Segment> for Point {
    fn mindist(&self, s: &Segment) -> f64 {
        point_segment_distance(*self, s.a, s.b)
    }
}

impl MinDist<Rect> for Rect {
    fn mindist(&self, o: &Rect) -> f64 {
        let dx = (o.min.x - self.max.x).max(0.0).max(self.min.x - o.max.x);
        let dy = (o.min.y - self.max.y).max(0.0).max(self.min.y - o.max.y);
        dx.hypot(dy)
    }
}

impl MinDist<Segment> for Rect {
    fn mindist(&self, s: &Segment) -> f64 {
        if segment_intersects_rect(s, self) {
            return 0.0;
        }
        let ends = s.a.mindist(self).min(s.b.mindist(self));
        self.corners()
            .into_iter()
            .map(|c| point_segment_distance(c, s.a, s.b))
            .fold(ends, f64::min)
    }
}

/// Distance from `p` to a convex counterclockwise ring (zero inside).
pub(crate) fn point_convex_ring_distance(p: Point, ring: &[Point]) -> f64 {
    let n = ring.len();
    let inside = (0..n).all(|i| (ring[(i + 1) % n] - ring[i]).cross(p - ring[i]) >= 0.0);
    if inside {
        return 0.0;
    }
    (0..n)
        .map(|i| point_segment_distance(p, ring[i], ring[(i + 1) % n]))
        .fold(f64::INFINITY, f64::min)
}

/// Indices of the convex hull of `points`, counterclockwise, without
/// collinear vertices (Andrew's monotone chain).
pub(crate) fn convex_hull_indices(points: &[Point]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..points.len()).collect();
    idx.sort_by(|&i, &j| {
        points[i]
            .x
            .total_cmp(&points[j].x)
            .then(points[i].y.total_cmp(&points[j].y))
    });
    idx.dedup_by(|a, b| points[*a] == points[*b]);
    if idx.len() < 3 {
        return idx;
    }
    let turn = |o: usize, a: usize, b: usize| (points[a] - points[o]).cross(points[b] - points[o]);
    let mut hull: Vec<usize> = Vec::with_capacity(2 * idx.len());
    for &i in &idx {
        while hull.len() >= 2 && turn(hull[hull.len() - 2], hull[hull.len() - 1], i) <= 0.0 {
            hull.pop();
        }
        hull.push(i);
    }
    let lower_len = hull.len() + 1;
    for &i in idx.iter().rev().skip(1) {
        while hull.len() >= lower_len && turn(hull[hull.len() - 2], hull[hull.len() - 1], i) <= 0.0
        {
            hull.pop();
        }
        hull.push(i);
    }
    hull.pop();
    hull
}

/// An annular sector: points at distance `[r_lo, r_hi]` from `center` whose
/// polar angle lies in `[phi_lo, phi_hi]` (radians, span at most `PI / 2`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnnularSector {
    pub center: Point,
    pub r_lo: f64,
    pub r_hi: f64,
    pub phi_lo: f64,
    pub phi_hi: f64,
}

impl AnnularSector {
    fn lo_normal(&self) -> Point {
        Point::from_polar(1.0, self.phi_lo).perp()
    }

    fn hi_normal(&self) -> Point {
        -Point::from_polar(1.0, self.phi_hi).perp()
    }

    pub fn area(&self) -> f64 {
        (self.phi_hi - self.phi_lo) / 2.0 * (self.r_hi * self.r_hi - self.r_lo * self.r_lo)
    }

    pub fn contains_point(&self, p: Point) -> bool {
        let v = p - self.center;
        let r = v.norm();
        r >= self.r_lo - EPS
            && r <= self.r_hi + EPS
            && v.dot(self.lo_normal()) >= -EPS
            && v.dot(self.hi_normal()) >= -EPS
    }

    /// Axis-aligned bounding box, including any axis extremes of the outer arc.
    pub fn bbox(&self) -> Rect {
        let mut pts = vec![
            self.center + Point::from_polar(self.r_lo, self.phi_lo),
            self.center + Point::from_polar(self.r_lo, self.phi_hi),
            self.center + Point::from_polar(self.r_hi, self.phi_lo),
            self.center + Point::from_polar(self.r_hi, self.phi_hi),
        ];
        let first = (self.phi_lo / (PI / 2.0)).ceil() as i64;
        let last = (self.phi_hi / (PI / 2.0)).floor() as i64;
        for k in first..=last {
            pts.push(self.center + Point::from_polar(self.r_hi, k as f64 * PI / 2.0));
        }
        if self.r_lo == 0.0 {
            pts.push(self.center);
        }
        Rect::bounding(pts).unwrap()
    }

    /// Classifies a convex counterclockwise ring (e.g. a block) against the
    /// sector. `Outside` means the interiors are disjoint.
    pub fn classify_ring(&self, ring: &[Point]) -> Containment {
        let local: Vec<Point> = ring.iter().map(|&p| p - self.center).collect();
        let origin = Point::default();
        let all_in_wedge = local
            .iter()
            .all(|&p| p.dot(self.lo_normal()) >= -EPS && p.dot(self.hi_normal()) >= -EPS);
        let dmax = local.iter().map(|p| p.norm()).fold(0.0, f64::max);
        let dmin = point_convex_ring_distance(origin, &local);
        if all_in_wedge && dmax <= self.r_hi + EPS && dmin >= self.r_lo - EPS {
            return Containment::Inside;
        }
        let clipped = clip_halfplane(&local, origin, self.lo_normal());
        let clipped = clip_halfplane(&clipped, origin, self.hi_normal());
        let Some(core) = tidy_ring(clipped) else {
            return Containment::Outside;
        };
        let cmax = core.vertices().iter().map(|p| p.norm()).fold(0.0, f64::max);
        let cmin = point_convex_ring_distance(origin, core.vertices());
        if cmin >= self.r_hi - EPS || cmax <= self.r_lo + EPS {
            Containment::Outside
        } else {
            Containment::Partial
        }
    }
}
