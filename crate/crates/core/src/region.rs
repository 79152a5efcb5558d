//! Visible/obstructed decomposition of the query space as a region quadtree.
//!
//! Leaves carry a [`BlockState`]. Blocks straddling a boundary are split
//! while their side is at least `theta`; below that they take the state of
//! their center point, so every state is a function of the floor grid.

use std::io::Write;

use crate::error::{invalid_param, Result, VcmError};
use crate::geometry::{
    classify_rect_vs_polygon, clip_halfplane, clip_ring_to_rect, convex_hull_indices,
    segment_intersects_rect, tidy_ring, wedge_classify, Containment, Point, Polygon, Rect, EPS,
};
use crate::metric::{d_max, Target, VisionParams};
use crate::obstacle_index::{AccessStats, ObstacleIndex, ObstacleRect};

/// The square region `R` the map is computed over.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuerySpace {
    pub bounds: Rect,
}

impl QuerySpace {
    pub fn new(bounds: Rect) -> Result<Self> {
        if (bounds.width() - bounds.height()).abs() > 1e-9 * bounds.width() {
            return Err(VcmError::InvalidGeometry(
                "query space must be square".into(),
            ));
        }
        Ok(Self { bounds })
    }

    pub fn centered(center: Point, side: f64) -> Result<Self> {
        Self::new(Rect::square(center, side)?)
    }

    pub fn side(&self) -> f64 {
        self.bounds.width()
    }

    /// Largest distance from `p` to any point of the space.
    pub fn reach_from(&self, p: Point) -> f64 {
        self.bounds.max_distance_to(p)
    }
}

/// The four quarters of a block in child order SW, SE, NW, NE.
pub fn quadrants(r: &Rect) -> [Rect; 4] {
    let m = r.center();
    [
        Rect::from_corners_unchecked(r.min, m),
        Rect::from_corners_unchecked(Point::new(m.x, r.min.y), Point::new(r.max.x, m.y)),
        Rect::from_corners_unchecked(Point::new(r.min.x, m.y), Point::new(m.x, r.max.y)),
        Rect::from_corners_unchecked(m, r.max),
    ]
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BlockState {
    /// Inside the field of view and fully visible, not yet colored.
    Visible,
    /// `exact` when the whole block lies in a shadow rather than only its center.
    Obstructed {
        exact: bool,
    },
    OutOfView,
    Colored(f64),
}

impl BlockState {
    pub fn color(&self) -> f64 {
        match *self {
            BlockState::Colored(c) => c,
            _ => 0.0,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            BlockState::Visible => "visible",
            BlockState::Obstructed { .. } => "obstructed",
            BlockState::OutOfView => "out_of_view",
            BlockState::Colored(_) => "colored",
        }
    }

    pub fn is_obstructed(&self) -> bool {
        matches!(self, BlockState::Obstructed { .. })
    }
}

#[derive(Clone, Debug)]
struct QNode {
    rect: Rect,
    first_child: u32,
    state: BlockState,
}

/// Arena region quadtree; children of a node are stored contiguously in
/// the order SW, SE, NW, NE.
#[derive(Clone, Debug)]
pub struct QuadTree {
    nodes: Vec<QNode>,
    theta: f64,
    space: QuerySpace,
}

impl QuadTree {
    pub fn new(space: QuerySpace, theta: f64, state: BlockState) -> Result<Self> {
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(invalid_param(
                "theta",
                format!("must be positive, got {theta}"),
            ));
        }
        Ok(Self {
            nodes: vec![QNode {
                rect: space.bounds,
                first_child: 0,
                state,
            }],
            theta,
            space,
        })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn space(&self) -> &QuerySpace {
        &self.space
    }

    pub const ROOT: usize = 0;

    pub fn rect(&self, i: usize) -> Rect {
        self.nodes[i].rect
    }

    pub fn state(&self, i: usize) -> BlockState {
        self.nodes[i].state
    }

    pub(crate) fn set_state(&mut self, i: usize, s: BlockState) {
        debug_assert!(self.is_leaf(i));
        self.nodes[i].state = s;
    }

    pub fn is_leaf(&self, i: usize) -> bool {
        self.nodes[i].first_child == 0
    }

    pub fn children(&self, i: usize) -> Option<[usize; 4]> {
        let f = self.nodes[i].first_child as usize;
        (f != 0).then_some([f, f + 1, f + 2, f + 3])
    }

    /// True when a block of this size must not be split further.
    pub fn is_floor(&self, r: &Rect) -> bool {
        r.width() < self.theta
    }

    pub(crate) fn split(&mut self, i: usize) -> [usize; 4] {
        debug_assert!(self.is_leaf(i));
        let QNode { rect: r, state, .. } = self.nodes[i].clone();
        let quads = quadrants(&r);
        let first = self.nodes.len();
        self.nodes.extend(quads.into_iter().map(|rect| QNode {
            rect,
            first_child: 0,
            state,
        }));
        self.nodes[i].first_child = first as u32;
        [first, first + 1, first + 2, first + 3]
    }

    /// Collapses four equal leaf children into their parent.
    pub(crate) fn try_merge(&mut self, i: usize) -> bool {
        let Some(ch) = self.children(i) else {
            return false;
        };
        if !ch.iter().all(|&c| self.is_leaf(c)) {
            return false;
        }
        let s = self.nodes[ch[0]].state;
        if ch[1..].iter().all(|&c| self.nodes[c].state == s) {
            self.nodes[i].first_child = 0;
            self.nodes[i].state = s;
            true
        } else {
            false
        }
    }

    /// Leaf node ids in depth-first order.
    pub fn leaf_ids(&self) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![Self::ROOT];
        while let Some(i) = stack.pop() {
            match self.children(i) {
                Some(ch) => stack.extend(ch.iter().rev()),
                None => out.push(i),
            }
        }
        out
    }

    pub fn leaves(&self) -> Vec<(Rect, BlockState)> {
        self.leaf_ids()
            .into_iter()
            .map(|i| (self.nodes[i].rect, self.nodes[i].state))
            .collect()
    }

    pub fn leaf_count(&self) -> usize {
        self.leaf_ids().len()
    }

    /// State of the leaf containing `p`, or `None` outside the space.
    pub fn state_at(&self, p: Point) -> Option<BlockState> {
        self.leaf_at(p).map(|i| self.nodes[i].state)
    }

    pub fn leaf_at(&self, p: Point) -> Option<usize> {
        if !self.space.bounds.contains_point(p) {
            return None;
        }
        let mut i = Self::ROOT;
        while let Some(ch) = self.children(i) {
            let m = self.nodes[i].rect.center();
            let k = usize::from(p.x >= m.x) + 2 * usize::from(p.y >= m.y);
            i = ch[k];
        }
        Some(i)
    }

    pub fn color_at(&self, p: Point) -> f64 {
        self.state_at(p).map_or(0.0, |s| s.color())
    }

    /// True iff every leaf sharing area with `r` lies wholly in a shadow.
    /// Parts of `r` outside the space impose nothing.
    pub fn is_fully_obstructed(&self, r: &Rect) -> bool {
        let mut stack = vec![Self::ROOT];
        while let Some(i) = stack.pop() {
            let n = &self.nodes[i];
            if !n.rect.overlaps_interior(r) {
                continue;
            }
            match self.children(i) {
                Some(ch) => stack.extend(ch),
                None => {
                    if n.state != (BlockState::Obstructed { exact: true }) {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Marks the shadow as obstructed in every visible leaf it covers.
    pub fn apply_shadow(&mut self, shadow: &ShadowPolygon) {
        let bbox = shadow.poly.bbox();
        self.apply_rec(Self::ROOT, &shadow.poly, &bbox);
    }

    fn apply_rec(&mut self, i: usize, poly: &Polygon, bbox: &Rect) {
        let rect = self.nodes[i].rect;
        if !rect.overlaps_interior(bbox) {
            return;
        }
        if let Some(ch) = self.children(i) {
            for c in ch {
                self.apply_rec(c, poly, bbox);
            }
            self.try_merge(i);
            return;
        }
        if self.nodes[i].state != BlockState::Visible {
            return;
        }
        match classify_rect_vs_polygon(&rect, poly) {
            Containment::Inside => self.nodes[i].state = BlockState::Obstructed { exact: true },
            Containment::Outside => {}
            Containment::Partial => {
                if self.is_floor(&rect) {
                    if poly.contains_point(rect.center()) {
                        self.nodes[i].state = BlockState::Obstructed { exact: false };
                    }
                } else {
                    for c in self.split(i) {
                        self.apply_rec(c, poly, bbox);
                    }
                    self.try_merge(i);
                }
            }
        }
    }

    /// Copy with the output color of every leaf and all mergeable siblings
    /// merged. Two trees describing the same map have equal canonical leaves.
    pub fn canonical(&self) -> QuadTree {
        let mut out = QuadTree {
            nodes: vec![QNode {
                rect: self.space.bounds,
                first_child: 0,
                state: BlockState::Colored(0.0),
            }],
            theta: self.theta,
            space: self.space,
        };
        self.canonical_rec(Self::ROOT, &mut out, QuadTree::ROOT);
        out
    }

    fn canonical_rec(&self, src: usize, out: &mut QuadTree, dst: usize) {
        match self.children(src) {
            None => out.nodes[dst].state = BlockState::Colored(self.nodes[src].state.color()),
            Some(ch) => {
                let dch = out.split(dst);
                for (s, d) in ch.into_iter().zip(dch) {
                    self.canonical_rec(s, out, d);
                }
                out.try_merge(dst);
            }
        }
    }

    /// Copy without unreachable arena slots.
    pub fn compact(&self) -> QuadTree {
        let mut out = QuadTree {
            nodes: vec![QNode {
                rect: self.space.bounds,
                first_child: 0,
                state: self.nodes[0].state,
            }],
            theta: self.theta,
            space: self.space,
        };
        let mut stack = vec![(Self::ROOT, QuadTree::ROOT)];
        while let Some((s, d)) = stack.pop() {
            match self.children(s) {
                None => out.nodes[d].state = self.nodes[s].state,
                Some(ch) => {
                    let dch = out.split(d);
                    stack.extend(ch.into_iter().zip(dch));
                }
            }
        }
        out
    }

    pub fn arena_len(&self) -> usize {
        self.nodes.len()
    }

    /// `xmin,ymin,xmax,ymax,state` per leaf.
    pub fn write_states_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["xmin", "ymin", "xmax", "ymax", "state"])?;
        for (r, s) in self.leaves() {
            out.write_record([
                r.min.x.to_string(),
                r.min.y.to_string(),
                r.max.x.to_string(),
                r.max.y.to_string(),
                s.label().to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    /// `xmin,ymin,xmax,ymax,color` per leaf.
    pub fn write_colors_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["xmin", "ymin", "xmax", "ymax", "color"])?;
        for (r, s) in self.leaves() {
            out.write_record([
                r.min.x.to_string(),
                r.min.y.to_string(),
                r.max.x.to_string(),
                r.max.y.to_string(),
                s.color().to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    /// Splits leaves straddling the wedge down to the floor; children keep
    /// the parent's state.
    pub(crate) fn refine_to_wedge(&mut self, w: &crate::geometry::Wedge) {
        if w.is_full() {
            return;
        }
        let mut stack = vec![Self::ROOT];
        while let Some(i) = stack.pop() {
            let r = self.nodes[i].rect;
            if let Some(ch) = self.children(i) {
                if wedge_classify(&r, w) == Containment::Partial {
                    stack.extend(ch);
                }
                continue;
            }
            if wedge_classify(&r, w) == Containment::Partial && !self.is_floor(&r) {
                stack.extend(self.split(i));
            }
        }
    }

    /// Whether a leaf produced by [`refine_to_wedge`](Self::refine_to_wedge) counts as in view.
    pub(crate) fn leaf_in_wedge(&self, i: usize, w: &crate::geometry::Wedge) -> bool {
        let r = self.nodes[i].rect;
        match wedge_classify(&r, w) {
            Containment::Inside => true,
            Containment::Outside => false,
            Containment::Partial => w.contains_point(r.center()),
        }
    }
}

/// Quadtree of the space with blocks outside the field of view marked.
pub fn init_fov(space: &QuerySpace, t: &Target, vp: &VisionParams, theta: f64) -> Result<QuadTree> {
    let mut tree = QuadTree::new(*space, theta, BlockState::Visible)?;
    let w = vp.wedge(t);
    if w.is_full() {
        return Ok(tree);
    }
    tree.refine_to_wedge(&w);
    for i in tree.leaf_ids() {
        if !tree.leaf_in_wedge(i, &w) {
            tree.nodes[i].state = BlockState::OutOfView;
        }
    }
    merge_all(&mut tree, QuadTree::ROOT);
    Ok(tree)
}

pub(crate) fn merge_all(tree: &mut QuadTree, i: usize) {
    if let Some(ch) = tree.children(i) {
        for c in ch {
            merge_all(tree, c);
        }
        tree.try_merge(i);
    }
}

/// Convex hull of the in-view part of the space together with the target.
/// Every sightline from an in-view point stays inside it. `None` for
/// fields of view of 180 degrees or more.
pub fn sight_hull(space: &QuerySpace, t: &Target, vp: &VisionParams) -> Option<Polygon> {
    if vp.fov_deg >= 180.0 {
        return None;
    }
    let w = vp.wedge(t);
    let (lo, hi) = w.arms();
    let ring = clip_halfplane(&space.bounds.corners(), w.apex, lo.perp());
    let ring = clip_halfplane(&ring, w.apex, -hi.perp());
    let mut pts = ring;
    pts.push(t.geom.a);
    pts.push(t.geom.b);
    let hull: Vec<Point> = convex_hull_indices(&pts)
        .into_iter()
        .map(|i| pts[i])
        .collect();
    tidy_ring(hull)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShadowPolygon {
    pub poly: Polygon,
    pub source: u64,
}

/// Shadow of `o`: all points from which some sightline to the target meets
/// `o`, clipped to the space. `Ok(None)` when nothing of it lies in the space.
///
/// The shadow equals `o` swept along the cone spanned by the extreme
/// directions `corner - endpoint`, so it is cut out of the space by the
/// two grazing rays and the obstacle edges that face the target.
pub fn shadow_polygon(
    o: &ObstacleRect,
    t: &Target,
    space: &QuerySpace,
) -> Result<Option<ShadowPolygon>> {
    if segment_intersects_rect(&t.geom, &o.rect) {
        return Err(VcmError::ObstacleOverlapsTarget { id: o.id });
    }
    let corners = o.rect.corners();
    let mut dirs = Vec::with_capacity(8);
    for c in corners {
        for e in [t.geom.a, t.geom.b] {
            let v = c - e;
            dirs.push(v * (1.0 / v.norm()));
        }
    }
    let mean = dirs.iter().fold(Point::default(), |acc, &d| acc + d);
    let offset = |d: &Point| mean.cross(*d).atan2(mean.dot(*d));
    let d_cw = *dirs
        .iter()
        .min_by(|a, b| offset(a).total_cmp(&offset(b)))
        .unwrap();
    let d_ccw = *dirs
        .iter()
        .max_by(|a, b| offset(a).total_cmp(&offset(b)))
        .unwrap();

    // outward normals n with n.p <= max over corners of n.c
    let mut normals = vec![-d_cw.perp(), d_ccw.perp()];
    for n in [
        Point::new(-1.0, 0.0),
        Point::new(1.0, 0.0),
        Point::new(0.0, -1.0),
        Point::new(0.0, 1.0),
    ] {
        if n.dot(d_cw) <= -1e-12 && n.dot(d_ccw) <= -1e-12 {
            normals.push(n);
        }
    }
    let mut ring = space.bounds.corners().to_vec();
    for n in normals {
        let support = corners
            .iter()
            .copied()
            .max_by(|a, b| n.dot(*a).total_cmp(&n.dot(*b)))
            .unwrap();
        ring = clip_halfplane(&ring, support, -n);
        if ring.is_empty() {
            return Ok(None);
        }
    }
    Ok(tidy_ring(ring).map(|poly| ShadowPolygon { poly, source: o.id }))
}

/// Access counts from building the visible region.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RegionStats {
    pub access: AccessStats,
    pub shadows_applied: u64,
}

/// Field-of-view initialization followed by the shadows of obstacles
/// retrieved in distance order. Obstacles that cannot change the result
/// (outside every in-view sightline, inside an existing shadow, or beyond
/// `d_max`) are pruned during retrieval.
pub fn build_visible_region(
    space: &QuerySpace,
    t: &Target,
    vp: &VisionParams,
    idx: Option<&ObstacleIndex>,
    theta: f64,
) -> Result<(QuadTree, RegionStats)> {
    if !space.bounds.contains_point(t.geom.a) || !space.bounds.contains_point(t.geom.b) {
        return Err(VcmError::InvalidGeometry(
            "target must lie inside the query space".into(),
        ));
    }
    let mut tree = init_fov(space, t, vp, theta)?;
    let mut stats = RegionStats::default();
    let Some(idx) = idx else {
        return Ok((tree, stats));
    };
    let hull = sight_hull(space, t, vp);
    let limit = d_max(t.length, vp.mu_arcmin);
    let mut stream = idx.retrieve(t.geom, limit);
    loop {
        let next = stream.next_with(|r| {
            hull.as_ref()
                .is_some_and(|h| classify_rect_vs_polygon(r, h) == Containment::Outside)
                || tree.is_fully_obstructed(r)
        });
        let Some((o, _)) = next else { break };
        if let Some(shadow) = shadow_polygon(&o, t, space)? {
            tree.apply_shadow(&shadow);
            stats.shadows_applied += 1;
        }
    }
    stats.access = stream.stats();
    Ok((tree.compact(), stats))
}

/// Clip a polygon to the space (re-exported helper for callers building
/// custom shadows).
pub fn clip_to_space(poly: &Polygon, space: &QuerySpace) -> Option<Polygon> {
    clip_ring_to_rect(poly.vertices(), &space.bounds)
}

/// Distance within which a center-classified floor block may disagree with
/// the exact region.
pub fn boundary_band(theta: f64) -> f64 {
    theta * std::f64::consts::SQRT_2 + EPS
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{point_segment_distance, triangle_intersects_rect, Segment, Wedge};
    use crate::metric::fully_visible;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn space() -> QuerySpace {
        QuerySpace::centered(Point::new(0.0, 0.0), 200.0).unwrap()
    }

    fn target() -> Target {
        Target::from_endpoints(Point::new(-5.0, 0.0), Point::new(5.0, 0.0)).unwrap()
    }

    fn params(fov: f64, gaze: f64) -> VisionParams {
        VisionParams::new(4.0, 20.0, fov, gaze).unwrap()
    }

    fn ob(id: u64, x0: f64, y0: f64, x1: f64, y1: f64) -> ObstacleRect {
        ObstacleRect {
            id,
            rect: Rect::from_coords(x0, y0, x1, y1).unwrap(),
        }
    }

    fn random_obstacles(rng: &mut ChaCha8Rng, n: usize, t: &Target) -> Vec<ObstacleRect> {
        let mut out = Vec::new();
        while out.len() < n {
            let x = rng.random_range(-95.0..90.0);
            let y = rng.random_range(-95.0..90.0);
            let o = ob(
                out.len() as u64,
                x,
                y,
                x + rng.random_range(1.0..10.0),
                y + rng.random_range(1.0..10.0),
            );
            if o.rect.mindist(&t.geom) > 1.0 {
                out.push(o);
            }
        }
        out
    }

    use crate::geometry::MinDist;

    /// Distance from `p` to the nearest leaf of a different obstruction status.
    fn near_state_boundary(tree: &QuadTree, p: Point, band: f64) -> bool {
        let here = tree.state_at(p).unwrap().is_obstructed();
        tree.leaves()
            .iter()
            .any(|(r, s)| s.is_obstructed() != here && p.mindist(r) <= band)
    }

    #[test]
    fn fov_360_all_visible() {
        let tree = init_fov(&space(), &target(), &params(360.0, 0.0), 1.0).unwrap();
        assert_eq!(tree.leaf_count(), 1);
        assert_eq!(tree.state(QuadTree::ROOT), BlockState::Visible);
    }

    #[test]
    fn fov_120_marks_rear_out_of_view() {
        let theta = 2.0;
        let tree = init_fov(&space(), &target(), &params(120.0, 90.0), theta).unwrap();
        assert_eq!(
            tree.state_at(Point::new(0.0, -80.0)),
            Some(BlockState::OutOfView)
        );
        assert_eq!(
            tree.state_at(Point::new(0.0, 80.0)),
            Some(BlockState::Visible)
        );
        let w = Wedge::new(Point::default(), 90.0, 120.0).unwrap();
        let (lo, hi) = w.arms();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..5000 {
            let p = Point::new(
                rng.random_range(-100.0..100.0),
                rng.random_range(-100.0..100.0),
            );
            let d = point_segment_distance(p, Point::default(), lo * 300.0)
                .min(point_segment_distance(p, Point::default(), hi * 300.0));
            if d > boundary_band(theta) {
                let in_view = tree.state_at(p) == Some(BlockState::Visible);
                assert_eq!(in_view, w.contains_point(p), "{p:?}");
            }
        }
    }

    #[test]
    fn shadow_matches_triangle_predicate() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let sp = space();
        for _ in 0..30 {
            let t = Target::centered(
                Point::new(rng.random_range(-20.0..20.0), rng.random_range(-20.0..20.0)),
                rng.random_range(2.0..30.0),
                rng.random_range(0.0..360.0),
            )
            .unwrap();
            let o = random_obstacles(&mut rng, 1, &t)[0];
            let shadow = shadow_polygon(&o, &t, &sp).unwrap();
            for _ in 0..2000 {
                let p = Point::new(
                    rng.random_range(-100.0..100.0),
                    rng.random_range(-100.0..100.0),
                );
                let truth = triangle_intersects_rect(p, &t.geom, &o.rect);
                let got = shadow.as_ref().is_some_and(|s| s.poly.contains_point(p));
                if truth != got {
                    let poly = shadow.as_ref().map(|s| s.poly.clone());
                    let d = poly.map_or(f64::INFINITY, |poly| {
                        poly.edges()
                            .map(|(a, b)| point_segment_distance(p, a, b))
                            .fold(f64::INFINITY, f64::min)
                    });
                    assert!(d < 1e-6, "disagreement at {p:?}, {d}");
                }
            }
        }
    }

    #[test]
    fn shadow_symmetric_on_bisector() {
        let t = target();
        let o = ob(1, -3.0, 20.0, 3.0, 25.0);
        let s = shadow_polygon(&o, &t, &space()).unwrap().unwrap();
        for v in s.poly.vertices() {
            assert!(s.poly.contains_point(Point::new(-v.x, v.y)));
        }
        assert!((s.poly.centroid().x).abs() < 1e-9);
    }

    #[test]
    fn shadow_outside_space_or_overlapping_target() {
        let t = target();
        let o = ob(1, 300.0, 300.0, 310.0, 310.0);
        assert!(shadow_polygon(&o, &t, &space()).unwrap().is_none());
        let hit = ob(2, -1.0, -1.0, 1.0, 1.0);
        assert!(matches!(
            shadow_polygon(&hit, &t, &space()),
            Err(VcmError::ObstacleOverlapsTarget { id: 2 })
        ));
    }

    #[test]
    fn apply_shadow_extremes() {
        let sp = space();
        let mut tree = QuadTree::new(sp, 1.0, BlockState::Visible).unwrap();
        let all = ShadowPolygon {
            poly: Polygon::from_rect(&sp.bounds),
            source: 0,
        };
        tree.apply_shadow(&all);
        assert_eq!(
            tree.leaves(),
            vec![(sp.bounds, BlockState::Obstructed { exact: true })]
        );

        let mut tree = QuadTree::new(sp, 1.0, BlockState::Visible).unwrap();
        let before = tree.leaves();
        let far = ShadowPolygon {
            poly: Polygon::from_rect(&Rect::from_coords(500.0, 500.0, 600.0, 600.0).unwrap()),
            source: 0,
        };
        tree.apply_shadow(&far);
        assert_eq!(tree.leaves(), before);
    }

    #[test]
    fn sequential_shadows_are_union() {
        let t = target();
        let sp = space();
        let theta = 1.5;
        let o1 = ob(1, -10.0, 20.0, 0.0, 24.0);
        let o2 = ob(2, -4.0, 30.0, 8.0, 33.0);
        let s1 = shadow_polygon(&o1, &t, &sp).unwrap().unwrap();
        let s2 = shadow_polygon(&o2, &t, &sp).unwrap().unwrap();
        let mut tree = QuadTree::new(sp, theta, BlockState::Visible).unwrap();
        tree.apply_shadow(&s1);
        tree.apply_shadow(&s2);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..3000 {
            let p = Point::new(
                rng.random_range(-100.0..100.0),
                rng.random_range(-100.0..100.0),
            );
            let truth = s1.poly.contains_point(p) || s2.poly.contains_point(p);
            let got = tree.state_at(p).unwrap().is_obstructed();
            if truth != got {
                assert!(near_state_boundary(&tree, p, boundary_band(theta)));
            }
        }
    }

    #[test]
    fn fully_obstructed_matches_scan() {
        let t = target();
        let sp = space();
        let mut tree = QuadTree::new(sp, 2.0, BlockState::Visible).unwrap();
        tree.apply_shadow(
            &shadow_polygon(&ob(1, -10.0, 20.0, 10.0, 24.0), &t, &sp)
                .unwrap()
                .unwrap(),
        );
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..500 {
            let x = rng.random_range(-120.0..110.0);
            let y = rng.random_range(-120.0..110.0);
            let r = Rect::from_coords(
                x,
                y,
                x + rng.random_range(0.5..20.0),
                y + rng.random_range(0.5..20.0),
            )
            .unwrap();
            let scan = tree
                .leaves()
                .iter()
                .filter(|(l, _)| l.overlaps_interior(&r))
                .all(|(_, s)| *s == BlockState::Obstructed { exact: true });
            assert_eq!(tree.is_fully_obstructed(&r), scan);
        }
        // inside a single obstructed leaf, and fully outside the space
        assert!(tree.is_fully_obstructed(&Rect::from_coords(-1.0, 80.0, 1.0, 82.0).unwrap()));
        assert!(tree.is_fully_obstructed(&Rect::from_coords(300.0, 300.0, 301.0, 301.0).unwrap()));
        assert!(!tree.is_fully_obstructed(&Rect::from_coords(-1.0, -80.0, 1.0, -78.0).unwrap()));
    }

    #[test]
    fn no_obstacles_equals_fov_init() {
        let vp = params(120.0, 45.0);
        let (tree, stats) = build_visible_region(&space(), &target(), &vp, None, 1.0).unwrap();
        let init = init_fov(&space(), &target(), &vp, 1.0).unwrap();
        assert_eq!(tree.leaves(), init.leaves());
        assert_eq!(stats, RegionStats::default());
    }

    #[test]
    fn single_obstacle_region_matches_oracle() {
        let t = target();
        let vp = params(360.0, 0.0);
        let theta = 1.0;
        let o = ob(1, -3.0, 20.0, 3.0, 25.0);
        let idx = ObstacleIndex::bulk_load(vec![o], 1024).unwrap();
        let (tree, _) = build_visible_region(&space(), &t, &vp, Some(&idx), theta).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let mut bad = 0;
        for _ in 0..10_000 {
            let p = Point::new(
                rng.random_range(-100.0..100.0),
                rng.random_range(-100.0..100.0),
            );
            let truth = fully_visible(p, &t, &[o.rect]);
            let got = !tree.state_at(p).unwrap().is_obstructed();
            if truth != got {
                bad += 1;
                assert!(near_state_boundary(&tree, p, boundary_band(theta)));
            }
        }
        assert!(bad < 100);
    }

    #[test]
    fn hidden_obstacle_is_pruned() {
        let t = target();
        let vp = params(360.0, 0.0);
        let front = ob(1, -30.0, 10.0, 30.0, 15.0);
        let behind = ob(2, -2.0, 60.0, 2.0, 62.0);
        let idx = ObstacleIndex::bulk_load(vec![front, behind], 1024).unwrap();
        let (_, stats) = build_visible_region(&space(), &t, &vp, Some(&idx), 1.0).unwrap();
        assert_eq!(stats.shadows_applied, 1);
        assert_eq!(stats.access.obstacles_emitted, 1);
        assert_eq!(stats.access.obstacles_pruned, 1);
    }

    #[test]
    fn sound_complete_and_order_independent() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let t = target();
        let sp = space();
        let theta = 1.0;
        for gaze in [0.0, 135.0] {
            let vp = params(120.0, gaze);
            let obs = random_obstacles(&mut rng, 25, &t);
            let rects: Vec<Rect> = obs.iter().map(|o| o.rect).collect();
            let idx = ObstacleIndex::bulk_load(obs.clone(), 1024).unwrap();
            let (tree, _) = build_visible_region(&sp, &t, &vp, Some(&idx), theta).unwrap();
            let w = vp.wedge(&t);
            for _ in 0..3000 {
                let p = Point::new(
                    rng.random_range(-100.0..100.0),
                    rng.random_range(-100.0..100.0),
                );
                let s = tree.state_at(p).unwrap();
                let truth = fully_visible(p, &t, &rects);
                let ok = match s {
                    BlockState::Visible => truth,
                    BlockState::Obstructed { .. } => !truth || !w.contains_point(p),
                    _ => true,
                };
                if !ok {
                    assert!(
                        near_state_boundary(&tree, p, boundary_band(theta)),
                        "{p:?} {s:?}"
                    );
                }
            }

            // all shadows in reverse distance order, no pruning
            let mut rev = init_fov(&sp, &t, &vp, theta).unwrap();
            let mut sorted = obs.clone();
            sorted.sort_by(|a, b| b.rect.mindist(&t.geom).total_cmp(&a.rect.mindist(&t.geom)));
            for o in &sorted {
                if let Some(s) = shadow_polygon(o, &t, &sp).unwrap() {
                    rev.apply_shadow(&s);
                }
            }
            assert_eq!(rev.canonical().leaves(), tree.canonical().leaves());
        }
    }

    #[test]
    fn sight_hull_contains_sightlines() {
        let t = target();
        let vp = params(90.0, 60.0);
        let h = sight_hull(&space(), &t, &vp).unwrap();
        let w = vp.wedge(&t);
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..2000 {
            let p = Point::new(
                rng.random_range(-100.0..100.0),
                rng.random_range(-100.0..100.0),
            );
            if w.contains_point(p) {
                assert!(h.contains_point(p));
                let _ = Segment::new(p, t.geom.a);
            }
        }
        assert!(h.contains_point(t.geom.a) && h.contains_point(t.geom.b));
        assert!(sight_hull(&space(), &t, &params(200.0, 0.0)).is_none());
    }

    #[test]
    fn csv_dumps() {
        let tree = init_fov(&space(), &target(), &params(120.0, 0.0), 5.0).unwrap();
        let mut buf = Vec::new();
        tree.write_states_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("xmin,ymin,xmax,ymax,state\n"));
        assert_eq!(s.lines().count(), tree.leaf_count() + 1);
        assert!(s.contains("out_of_view") && s.contains("visible"));
    }
}
