//! Coloring the visible region from the cells, and the pipelines built on it.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;

use crate::error::{invalid_param, Result, VcmError};
use crate::geometry::{
    classify_rect_vs_polygon, AnnularSector, Containment, Point, Polygon, Rect, Wedge,
};
use crate::metric::{d_max, Target, VisionParams};
use crate::obstacle_index::{fanout_for_page, ObstacleIndex, RTree, DEFAULT_PAGE_SIZE};
use crate::partition::{
    approximate_cell_mbr, approximate_cell_tangential, build_cells_within, Cell, CellSet,
};
use crate::region::{
    build_visible_region, init_fov, merge_all, quadrants, BlockState, QuadTree, QuerySpace,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variant {
    Exact,
    Mbr,
    Tangential,
}

impl FromStr for Variant {
    type Err = VcmError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "exact" => Ok(Variant::Exact),
            "mbr" => Ok(Variant::Mbr),
            "tangent" | "tangential" => Ok(Variant::Tangential),
            _ => Err(invalid_param("variant", format!("unknown variant `{s}`"))),
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Exact => "exact",
            Variant::Mbr => "mbr",
            Variant::Tangential => "tangent",
        })
    }
}

/// Geometry a cell is represented by in the color tree, in world coordinates.
#[derive(Clone, Debug, PartialEq)]
pub enum CellShape {
    Sector(AnnularSector),
    Poly(Polygon),
}

impl CellShape {
    pub fn classify(&self, r: &Rect) -> Containment {
        match self {
            CellShape::Sector(s) => s.classify_ring(&r.corners()),
            CellShape::Poly(p) => classify_rect_vs_polygon(r, p),
        }
    }

    pub fn contains_point(&self, p: Point) -> bool {
        match self {
            CellShape::Sector(s) => s.contains_point(p),
            CellShape::Poly(poly) => poly.contains_point(p),
        }
    }

    pub fn bbox(&self) -> Rect {
        match self {
            CellShape::Sector(s) => s.bbox(),
            CellShape::Poly(p) => p.bbox(),
        }
    }
}

/// R-tree over the cells. When shapes overlap, the cell with the lower
/// index wins.
#[derive(Clone, Debug)]
pub struct ColorTree {
    cells: CellSet,
    variant: Variant,
    shapes: Vec<CellShape>,
    rtree: RTree<u32>,
}

impl ColorTree {
    pub fn build(cells: CellSet, variant: Variant, page_size: usize) -> Result<Self> {
        if cells.cells.is_empty() {
            return Err(VcmError::EmptyInput("cell set"));
        }
        let fanout = fanout_for_page(page_size)?;
        let t = cells.target;
        let frame = t.frame();
        let to_world = |v: &[Point]| {
            Polygon::from_ccw_unchecked(v.iter().map(|&p| frame.to_world(p)).collect())
        };
        let shapes: Vec<CellShape> = cells
            .cells
            .par_iter()
            .map(|c| match variant {
                Variant::Exact => CellShape::Sector(c.world_sector(&t)),
                Variant::Mbr => CellShape::Poly(to_world(&approximate_cell_mbr(c).corners())),
                Variant::Tangential => {
                    CellShape::Poly(to_world(approximate_cell_tangential(c).vertices()))
                }
            })
            .collect();
        let boxes: Vec<Rect> = shapes.iter().map(CellShape::bbox).collect();
        let ids: Vec<u32> = (0..shapes.len() as u32).collect();
        let rtree = RTree::bulk_load(ids, |&i| boxes[i as usize], fanout);
        Ok(Self {
            cells,
            variant,
            shapes,
            rtree,
        })
    }

    pub fn cells(&self) -> &CellSet {
        &self.cells
    }

    pub fn cell(&self, i: usize) -> &Cell {
        &self.cells.cells[i]
    }

    pub fn shape(&self, i: usize) -> &CellShape {
        &self.shapes[i]
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn rtree(&self) -> &RTree<u32> {
        &self.rtree
    }

    /// Cells whose shape shares interior with `probe`, ascending.
    pub fn query(&self, probe: &Rect) -> Vec<usize> {
        let mut out = Vec::new();
        self.query_with(probe, &mut out, &mut |_| {});
        out.retain(|&i| self.shapes[i].classify(probe) != Containment::Outside);
        out
    }

    /// Candidate cells by bounding box, ascending, reporting visited nodes.
    fn query_with(&self, probe: &Rect, out: &mut Vec<usize>, on_node: &mut impl FnMut(usize)) {
        self.rtree.search(
            |m| m.overlaps_interior(probe),
            |k| out.push(*self.rtree.item(k) as usize),
            on_node,
        );
        out.sort_unstable();
    }

    /// Color of the first cell containing `p`, 0 if none does.
    pub fn color_at(&self, p: Point) -> f64 {
        let probe = Rect::from_corners_unchecked(p, p);
        let mut cands = Vec::new();
        self.rtree.search(
            |m| m.intersects(&probe),
            |k| cands.push(*self.rtree.item(k) as usize),
            |_| {},
        );
        cands.sort_unstable();
        cands
            .into_iter()
            .find(|&i| self.shapes[i].contains_point(p))
            .map_or(0.0, |i| self.cells.cells[i].color)
    }
}

/// Subtree produced by coloring one block.
#[derive(Clone, Debug, PartialEq)]
enum Painted {
    Leaf(f64),
    Split(Box<[Painted; 4]>),
}

const PARALLEL_CANDIDATES: usize = 48;

fn paint(ct: &ColorTree, rect: Rect, cands: &[usize], theta: f64) -> Painted {
    let mut kept = Vec::with_capacity(cands.len());
    for &c in cands {
        match ct.shapes[c].classify(&rect) {
            Containment::Outside => {}
            Containment::Inside if kept.is_empty() => {
                return Painted::Leaf(ct.cells.cells[c].color)
            }
            _ => kept.push(c),
        }
    }
    if kept.is_empty() {
        return Painted::Leaf(0.0);
    }
    if rect.width() < theta {
        let m = rect.center();
        let c = kept.iter().find(|&&c| ct.shapes[c].contains_point(m));
        return Painted::Leaf(c.map_or(0.0, |&c| ct.cells.cells[c].color));
    }
    let q = quadrants(&rect);
    let children: [Painted; 4] = if kept.len() >= PARALLEL_CANDIDATES {
        let ((a, b), (c, d)) = rayon::join(
            || {
                rayon::join(
                    || paint(ct, q[0], &kept, theta),
                    || paint(ct, q[1], &kept, theta),
                )
            },
            || {
                rayon::join(
                    || paint(ct, q[2], &kept, theta),
                    || paint(ct, q[3], &kept, theta),
                )
            },
        );
        [a, b, c, d]
    } else {
        q.map(|r| paint(ct, r, &kept, theta))
    };
    if let Painted::Leaf(c0) = children[0] {
        if children.iter().all(|c| *c == Painted::Leaf(c0)) {
            return Painted::Leaf(c0);
        }
    }
    Painted::Split(Box::new(children))
}

fn graft(tree: &mut QuadTree, i: usize, p: Painted) {
    match p {
        Painted::Leaf(c) => tree.set_state(i, BlockState::Colored(c)),
        Painted::Split(ch) => {
            let ids = tree.split(i);
            for (id, sub) in ids.into_iter().zip(*ch) {
                graft(tree, id, sub);
            }
        }
    }
}

/// Color-tree work done by one join.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct JoinStats {
    /// Distinct color-tree nodes read.
    pub node_accesses: u64,
    pub queries: u64,
}

/// Colors the listed visible leaves in place.
fn color_leaves(tree: &mut QuadTree, ct: &ColorTree, leaves: &[usize]) -> JoinStats {
    let theta = tree.theta();
    let jobs: Vec<(usize, Rect)> = leaves.iter().map(|&i| (i, tree.rect(i))).collect();
    let painted: Vec<(usize, Painted, Vec<usize>)> = jobs
        .par_iter()
        .map(|&(i, rect)| {
            let mut cands = Vec::new();
            let mut nodes = Vec::new();
            ct.query_with(&rect, &mut cands, &mut |n| nodes.push(n));
            (i, paint(ct, rect, &cands, theta), nodes)
        })
        .collect();
    let mut seen = vec![false; ct.rtree.node_count()];
    let mut stats = JoinStats {
        queries: painted.len() as u64,
        ..JoinStats::default()
    };
    for (i, p, nodes) in painted {
        for n in nodes {
            if !seen[n] {
                seen[n] = true;
                stats.node_accesses += 1;
            }
        }
        graft(tree, i, p);
    }
    stats
}

/// Assigns every visible leaf of `region` the color of its cell, splitting
/// leaves that span several cells. Obstructed and out-of-view leaves read 0.
pub fn construct_vcm(
    mut region: QuadTree,
    ct: &ColorTree,
    t: &Target,
    vp: &VisionParams,
) -> Result<(QuadTree, JoinStats)> {
    if ct.cells.target != *t || !ct.cells.params.same_model(vp) {
        return Err(VcmError::MismatchedInputs);
    }
    let visible: Vec<usize> = region
        .leaf_ids()
        .into_iter()
        .filter(|&i| region.state(i) == BlockState::Visible)
        .collect();
    let stats = color_leaves(&mut region, ct, &visible);
    merge_all(&mut region, QuadTree::ROOT);
    Ok((region.compact(), stats))
}

/// Counters and timings for one map.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RunStats {
    pub node_accesses_obstacle: u64,
    pub node_accesses_color: u64,
    pub obstacles_emitted: u64,
    pub obstacles_pruned: u64,
    pub shadows_applied: u64,
    pub leaves_colored: u64,
    pub leaves_obstructed: u64,
    pub leaves_out_of_view: u64,
    pub cells: u64,
    pub theta: f64,
    pub elapsed_partition_s: f64,
    pub elapsed_region_s: f64,
    pub elapsed_merge_s: f64,
}

impl RunStats {
    pub fn key_values(&self) -> Vec<(&'static str, String)> {
        vec![
            (
                "node_accesses_obstacle",
                self.node_accesses_obstacle.to_string(),
            ),
            ("node_accesses_color", self.node_accesses_color.to_string()),
            ("obstacles_emitted", self.obstacles_emitted.to_string()),
            ("obstacles_pruned", self.obstacles_pruned.to_string()),
            ("shadows_applied", self.shadows_applied.to_string()),
            ("leaves_colored", self.leaves_colored.to_string()),
            ("leaves_obstructed", self.leaves_obstructed.to_string()),
            ("leaves_out_of_view", self.leaves_out_of_view.to_string()),
            ("cells", self.cells.to_string()),
            ("theta", format!("{:.6}", self.theta)),
            (
                "elapsed_partition_s",
                format!("{:.6}", self.elapsed_partition_s),
            ),
            ("elapsed_region_s", format!("{:.6}", self.elapsed_region_s)),
            ("elapsed_merge_s", format!("{:.6}", self.elapsed_merge_s)),
        ]
    }

    pub fn total_s(&self) -> f64 {
        self.elapsed_partition_s + self.elapsed_region_s + self.elapsed_merge_s
    }

    fn count_leaves(&mut self, tree: &QuadTree) {
        self.leaves_colored = 0;
        self.leaves_obstructed = 0;
        self.leaves_out_of_view = 0;
        for (_, s) in tree.leaves() {
            match s {
                BlockState::Colored(_) => self.leaves_colored += 1,
                BlockState::Obstructed { .. } => self.leaves_obstructed += 1,
                BlockState::OutOfView => self.leaves_out_of_view += 1,
                BlockState::Visible => {}
            }
        }
    }
}

impl fmt::Display for RunStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in self.key_values() {
            writeln!(f, "{k}={v}")?;
        }
        Ok(())
    }
}

/// A finished visibility color map.
#[derive(Clone, Debug)]
pub struct VcMap {
    pub tree: QuadTree,
    pub target: Target,
    pub params: VisionParams,
    pub variant: Variant,
    pub stats: RunStats,
}

impl VcMap {
    pub fn space(&self) -> &QuerySpace {
        self.tree.space()
    }

    pub fn color_at(&self, p: Point) -> f64 {
        self.tree.color_at(p)
    }

    pub fn leaves(&self) -> Vec<(Rect, f64)> {
        self.tree
            .leaves()
            .into_iter()
            .map(|(r, s)| (r, s.color()))
            .collect()
    }

    /// Leaves of the unique maximally merged form of the map.
    pub fn canonical_leaves(&self) -> Vec<(Rect, f64)> {
        self.tree
            .canonical()
            .leaves()
            .into_iter()
            .map(|(r, s)| (r, s.color()))
            .collect()
    }

    /// `xmin,ymin,xmax,ymax,color` per leaf.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        self.tree.write_colors_csv(w)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BuildOptions {
    pub variant: Variant,
    pub theta_multiplier: f64,
    pub page_size: usize,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self {
            variant: Variant::Exact,
            theta_multiplier: 1.0,
            page_size: DEFAULT_PAGE_SIZE,
        }
    }
}

/// Cells covering the space plus the block threshold scaled by the multiplier.
pub fn cells_for_space(
    space: &QuerySpace,
    t: &Target,
    vp: &VisionParams,
    multiplier: f64,
) -> Result<(CellSet, f64)> {
    if !(multiplier > 0.0 && multiplier.is_finite()) {
        return Err(invalid_param(
            "theta_multiplier",
            format!("must be positive, got {multiplier}"),
        ));
    }
    let cs = build_cells_within(t, vp, space.reach_from(t.midpoint))?;
    let mut theta = cs.theta;
    if !theta.is_finite() {
        // only the near disk reaches into the space
        theta = cs.rings[0]
            .boundaries
            .windows(2)
            .map(|w| vp.d0 * (w[0] - w[1]).to_radians())
            .fold(vp.d0, f64::min);
    }
    Ok((cs, theta * multiplier))
}

/// Target-centric map: cells, visible region and coloring.
pub fn build_vcm(
    space: &QuerySpace,
    t: &Target,
    vp: &VisionParams,
    idx: Option<&ObstacleIndex>,
    opts: &BuildOptions,
) -> Result<VcMap> {
    let clock = Instant::now();
    let (cs, theta) = cells_for_space(space, t, vp, opts.theta_multiplier)?;
    let n_cells = cs.cells.len();
    let ct = ColorTree::build(cs, opts.variant, opts.page_size)?;
    let elapsed_partition_s = clock.elapsed().as_secs_f64();

    let clock = Instant::now();
    let (region, rs) = build_visible_region(space, t, vp, idx, theta)?;
    let elapsed_region_s = clock.elapsed().as_secs_f64();

    let clock = Instant::now();
    let (tree, js) = construct_vcm(region, &ct, t, vp)?;
    let elapsed_merge_s = clock.elapsed().as_secs_f64();

    let mut stats = RunStats {
        node_accesses_obstacle: rs.access.node_accesses,
        node_accesses_color: js.node_accesses,
        obstacles_emitted: rs.access.obstacles_emitted,
        obstacles_pruned: rs.access.obstacles_pruned,
        shadows_applied: rs.shadows_applied,
        cells: n_cells as u64,
        theta,
        elapsed_partition_s,
        elapsed_region_s,
        elapsed_merge_s,
        ..RunStats::default()
    };
    stats.count_leaves(&tree);
    Ok(VcMap {
        tree,
        target: *t,
        params: *vp,
        variant: opts.variant,
        stats,
    })
}

/// How the stand-in target of a viewer-centric map is laid out.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ViewerOrientation {
    #[default]
    Perpendicular,
    Parallel,
}

impl FromStr for ViewerOrientation {
    type Err = VcmError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "perpendicular" | "perp" => Ok(Self::Perpendicular),
            "parallel" => Ok(Self::Parallel),
            _ => Err(invalid_param(
                "orientation",
                format!("unknown orientation `{s}`"),
            )),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ViewerQuery {
    pub q: Point,
    pub target: Target,
    pub d_max: f64,
    /// Square of side `2 * d_max` around `q`.
    pub space: QuerySpace,
}

/// Sizes a target at `q` so that it becomes imperceptible exactly at `d_max_in`.
pub fn viewer_centric_setup(
    q: Point,
    vp: &VisionParams,
    d_max_in: f64,
    orientation: ViewerOrientation,
) -> Result<ViewerQuery> {
    if !(d_max_in > 0.0 && d_max_in.is_finite()) {
        return Err(invalid_param(
            "d_max",
            format!("must be positive, got {d_max_in}"),
        ));
    }
    let s = 2.0 * d_max_in * (vp.mu_deg().to_radians() / 2.0).tan();
    let dir = match orientation {
        ViewerOrientation::Perpendicular => vp.gaze_deg + 90.0,
        ViewerOrientation::Parallel => vp.gaze_deg,
    };
    let target = Target::centered(q, s, dir)?;
    Ok(ViewerQuery {
        q,
        target,
        d_max: d_max(s, vp.mu_arcmin),
        space: QuerySpace::centered(q, 2.0 * d_max_in)?,
    })
}

/// Region and color tree computed once for a full circle of view; each
/// gaze change only colors blocks that were never colored before.
#[derive(Clone, Debug)]
pub struct GazeSession {
    master: QuadTree,
    ct: ColorTree,
    target: Target,
    params: VisionParams,
    base: RunStats,
}

pub fn precompute_360(
    space: &QuerySpace,
    t: &Target,
    vp: &VisionParams,
    idx: Option<&ObstacleIndex>,
    opts: &BuildOptions,
) -> Result<GazeSession> {
    let full = vp.with_gaze(vp.gaze_deg, 360.0);
    let clock = Instant::now();
    let (cs, theta) = cells_for_space(space, t, &full, opts.theta_multiplier)?;
    let n_cells = cs.cells.len();
    let ct = ColorTree::build(cs, opts.variant, opts.page_size)?;
    let elapsed_partition_s = clock.elapsed().as_secs_f64();
    let clock = Instant::now();
    let (master, rs) = build_visible_region(space, t, &full, idx, theta)?;
    let base = RunStats {
        node_accesses_obstacle: rs.access.node_accesses,
        obstacles_emitted: rs.access.obstacles_emitted,
        obstacles_pruned: rs.access.obstacles_pruned,
        shadows_applied: rs.shadows_applied,
        cells: n_cells as u64,
        theta,
        elapsed_partition_s,
        elapsed_region_s: clock.elapsed().as_secs_f64(),
        ..RunStats::default()
    };
    Ok(GazeSession {
        master,
        ct,
        target: *t,
        params: full,
        base,
    })
}

impl GazeSession {
    /// The uncolored visible region at 360 degrees.
    pub fn region(&self) -> &QuadTree {
        &self.master
    }

    pub fn color_tree(&self) -> &ColorTree {
        &self.ct
    }

    pub fn precompute_stats(&self) -> RunStats {
        self.base
    }

    /// Map for a new gaze direction and field of view.
    pub fn set_gaze(&mut self, gaze_deg: f64, fov_deg: f64) -> Result<VcMap> {
        let w = Wedge::new(self.target.midpoint, gaze_deg, fov_deg)?;
        let clock = Instant::now();
        self.master.refine_to_wedge(&w);
        let pending: Vec<usize> = self
            .master
            .leaf_ids()
            .into_iter()
            .filter(|&i| {
                self.master.state(i) == BlockState::Visible && self.master.leaf_in_wedge(i, &w)
            })
            .collect();
        let js = color_leaves(&mut self.master, &self.ct, &pending);

        let mut out = self.master.clone();
        for i in out.leaf_ids() {
            if !out.leaf_in_wedge(i, &w) {
                out.set_state(i, BlockState::OutOfView);
            }
        }
        merge_all(&mut out, QuadTree::ROOT);
        let tree = out.compact();
        let mut stats = RunStats {
            node_accesses_color: js.node_accesses,
            cells: self.base.cells,
            theta: self.base.theta,
            elapsed_merge_s: clock.elapsed().as_secs_f64(),
            ..RunStats::default()
        };
        stats.count_leaves(&tree);
        Ok(VcMap {
            tree,
            target: self.target,
            params: self.params.with_gaze(gaze_deg, fov_deg),
            variant: self.ct.variant,
            stats,
        })
    }
}

/// Region initialized for the field of view only, with every in-view block
/// colored as if there were no obstacles.
pub fn unobstructed_vcm(
    space: &QuerySpace,
    t: &Target,
    vp: &VisionParams,
    opts: &BuildOptions,
) -> Result<VcMap> {
    let (cs, theta) = cells_for_space(space, t, vp, opts.theta_multiplier)?;
    let ct = ColorTree::build(cs, opts.variant, opts.page_size)?;
    let region = init_fov(space, t, vp, theta)?;
    let (tree, js) = construct_vcm(region, &ct, t, vp)?;
    let mut stats = RunStats {
        node_accesses_color: js.node_accesses,
        theta,
        ..RunStats::default()
    };
    stats.count_leaves(&tree);
    Ok(VcMap {
        tree,
        target: *t,
        params: *vp,
        variant: opts.variant,
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{v_norm, visibility_color};
    use crate::obstacle_index::ObstacleRect;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn space() -> QuerySpace {
        QuerySpace::centered(Point::new(0.0, 0.0), 160.0).unwrap()
    }

    fn target() -> Target {
        Target::from_endpoints(Point::new(-5.0, 0.0), Point::new(5.0, 0.0)).unwrap()
    }

    fn params(fov: f64, gaze: f64) -> VisionParams {
        VisionParams::new(60.0, 20.0, fov, gaze).unwrap()
    }

    fn obstacles(seed: u64, n: usize) -> ObstacleIndex {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = target();
        let mut out = Vec::new();
        while out.len() < n {
            let x = rng.random_range(-75.0..70.0);
            let y = rng.random_range(-75.0..70.0);
            let r = Rect::from_coords(
                x,
                y,
                x + rng.random_range(1.0..6.0),
                y + rng.random_range(1.0..6.0),
            )
            .unwrap();
            if !crate::geometry::segment_intersects_rect(&t.geom, &r) {
                out.push(ObstacleRect {
                    id: out.len() as u64,
                    rect: r,
                });
            }
        }
        ObstacleIndex::bulk_load(out, 1024).unwrap()
    }

    fn color_tree(variant: Variant) -> ColorTree {
        let (cs, _) = cells_for_space(&space(), &target(), &params(360.0, 0.0), 1.0).unwrap();
        ColorTree::build(cs, variant, 1024).unwrap()
    }

    #[test]
    fn color_tree_probes() {
        let ct = color_tree(Variant::Exact);
        let all = ct.query(&Rect::from_coords(-1e6, -1e6, 1e6, 1e6).unwrap());
        assert_eq!(all.len(), ct.cells().cells.len());

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let i = rng.random_range(0..ct.cells().cells.len());
            let c = ct.cell(i);
            let (p0, p1) = c.phi_range();
            let mid = Point::from_polar(
                (c.d_lo + c.d_hi) / 2.0,
                ct.cells().target.frame().world_angle((p0 + p1) / 2.0),
            );
            let mid = mid + ct.cells().target.midpoint;
            let probe = Rect::square(mid, 1e-4).unwrap();
            assert_eq!(ct.query(&probe), vec![i]);
            let scan: Vec<usize> = (0..ct.cells().cells.len())
                .filter(|&k| ct.shape(k).classify(&probe) != Containment::Outside)
                .collect();
            assert_eq!(scan, vec![i]);
        }

        let mbr = color_tree(Variant::Mbr);
        for _ in 0..100 {
            let c = Point::new(rng.random_range(-80.0..80.0), rng.random_range(-80.0..80.0));
            let probe = Rect::square(c, rng.random_range(0.1..5.0)).unwrap();
            let e = ct.query(&probe);
            let m = mbr.query(&probe);
            assert!(e.iter().all(|i| m.contains(i)));
        }
    }

    #[test]
    fn all_visible_exact_matches_metric() {
        let vp = params(360.0, 0.0);
        let map = build_vcm(&space(), &target(), &vp, None, &BuildOptions::default()).unwrap();
        let step = vp.mu_deg() / v_norm(10.0, vp.d0);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..5000 {
            let p = Point::new(rng.random_range(-80.0..80.0), rng.random_range(-80.0..80.0));
            let d = (map.color_at(p) - visibility_color(p, &target(), &vp)).abs();
            assert!(d <= 2.0 * step + 1e-9, "{p:?} {d} {step}");
        }
        assert_eq!(map.stats.leaves_obstructed, 0);
    }

    #[test]
    fn fully_obstructed_is_black() {
        let vp = params(360.0, 0.0);
        let region = QuadTree::new(space(), 1.0, BlockState::Obstructed { exact: true }).unwrap();
        let ct = color_tree(Variant::Exact);
        let (tree, js) = construct_vcm(region, &ct, &target(), &vp).unwrap();
        assert!(tree.leaves().iter().all(|(_, s)| s.color() == 0.0));
        assert_eq!(js.queries, 0);
    }

    #[test]
    fn beyond_d_max_is_zero() {
        // a 1-unit target fades out long before the far corner
        let t = Target::from_endpoints(Point::new(-0.5, 0.0), Point::new(0.5, 0.0)).unwrap();
        let vp = VisionParams::new(60.0, 2.0, 360.0, 0.0).unwrap();
        let sp = QuerySpace::centered(Point::default(), 300.0).unwrap();
        let map = build_vcm(&sp, &t, &vp, None, &BuildOptions::default()).unwrap();
        let dm = d_max(1.0, 60.0);
        assert!(dm < 100.0);
        assert_eq!(map.color_at(Point::new(140.0, 140.0)), 0.0);
        assert_eq!(map.color_at(Point::new(0.0, dm + 2.0)), 0.0);
        assert!(map.color_at(Point::new(0.0, 5.0)) > 0.0);
    }

    #[test]
    fn mismatched_inputs_rejected() {
        let ct = color_tree(Variant::Exact);
        let region = QuadTree::new(space(), 1.0, BlockState::Visible).unwrap();
        let other = VisionParams::new(30.0, 20.0, 360.0, 0.0).unwrap();
        assert!(matches!(
            construct_vcm(region, &ct, &target(), &other),
            Err(VcmError::MismatchedInputs)
        ));
    }

    #[test]
    fn viewer_setup() {
        let vp = VisionParams::new(4.0, 100.0, 120.0, 30.0).unwrap();
        let q = viewer_centric_setup(
            Point::new(10.0, 20.0),
            &vp,
            10_000.0,
            ViewerOrientation::Perpendicular,
        )
        .unwrap();
        assert!((q.target.length - 11.636).abs() < 1e-3);
        assert!((q.d_max - 10_000.0).abs() < 1e-6);
        assert!((q.target.midpoint.distance(Point::new(10.0, 20.0))).abs() < 1e-9);
        assert!((normalize_deg(q.target.direction_deg - 120.0)).abs() < 1e-9);
        let p = viewer_centric_setup(Point::default(), &vp, 500.0, ViewerOrientation::Parallel)
            .unwrap();
        assert!((normalize_deg(p.target.direction_deg - 30.0)).abs() < 1e-9);
        assert!((p.space.side() - 1000.0).abs() < 1e-9);
    }

    fn normalize_deg(a: f64) -> f64 {
        crate::geometry::normalize_angle(a.to_radians()).to_degrees()
    }

    #[test]
    fn gaze_updates_match_from_scratch() {
        let idx = obstacles(3, 15);
        let sp = space();
        let t = target();
        let mut session = precompute_360(
            &sp,
            &t,
            &params(120.0, 0.0),
            Some(&idx),
            &BuildOptions::default(),
        )
        .unwrap();
        for gaze in [0.0, 90.0, 210.0, 90.0] {
            let inc = session.set_gaze(gaze, 120.0).unwrap();
            let scratch = build_vcm(
                &sp,
                &t,
                &params(120.0, gaze),
                Some(&idx),
                &BuildOptions::default(),
            )
            .unwrap();
            assert_eq!(
                inc.canonical_leaves(),
                scratch.canonical_leaves(),
                "gaze {gaze}"
            );
        }
        let again = session.set_gaze(90.0, 120.0).unwrap();
        assert_eq!(again.stats.node_accesses_color, 0);
        let wide = session.set_gaze(0.0, 360.0).unwrap();
        let scratch = build_vcm(
            &sp,
            &t,
            &params(360.0, 0.0),
            Some(&idx),
            &BuildOptions::default(),
        )
        .unwrap();
        assert_eq!(wide.canonical_leaves(), scratch.canonical_leaves());
        assert_eq!(wide.stats.leaves_out_of_view, 0);
    }

    #[test]
    fn narrower_fov_colors_fewer_leaves() {
        let idx = obstacles(4, 10);
        let a = build_vcm(
            &space(),
            &target(),
            &params(120.0, 45.0),
            Some(&idx),
            &BuildOptions::default(),
        )
        .unwrap();
        let b = build_vcm(
            &space(),
            &target(),
            &params(360.0, 45.0),
            Some(&idx),
            &BuildOptions::default(),
        )
        .unwrap();
        assert!(a.stats.leaves_colored <= b.stats.leaves_colored);
        assert!(a.stats.node_accesses_obstacle <= b.stats.node_accesses_obstacle);
    }

    #[test]
    fn deterministic_output() {
        let idx = obstacles(5, 12);
        let run = || {
            let m = build_vcm(
                &space(),
                &target(),
                &params(120.0, 10.0),
                Some(&idx),
                &BuildOptions::default(),
            )
            .unwrap();
            let mut buf = Vec::new();
            m.write_csv(&mut buf).unwrap();
            buf
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn approximations_only_overstate_nearby_cells() {
        let vp = params(360.0, 0.0);
        for variant in [Variant::Mbr, Variant::Tangential] {
            let opts = BuildOptions {
                variant,
                ..BuildOptions::default()
            };
            let map = build_vcm(&space(), &target(), &vp, None, &opts).unwrap();
            assert!(map.leaves().iter().all(|(_, c)| (0.0..=1.0).contains(c)));
        }
    }

    #[test]
    fn stats_lines() {
        let s = RunStats::default().to_string();
        for key in [
            "node_accesses_obstacle",
            "node_accesses_color",
            "leaves_colored",
            "leaves_obstructed",
            "elapsed_partition_s",
            "elapsed_region_s",
            "elapsed_merge_s",
        ] {
            assert!(s.contains(&format!("{key}=")));
        }
    }
}
