//! Equi-visible cells: distance rings split into viewing-angle partitions.
//!
//! Ring 0 is the near-point disk `[0, d0]`; its colors follow the
//! [`NearPointPolicy`](crate::metric::NearPointPolicy). Every other ring lies
//! between consecutive radii of the distance partition (the last one ends at
//! `d_max`).

use std::io::Write;

use rayon::prelude::*;

use crate::error::{Result, VcmError};
use crate::geometry::{AnnularSector, Point, Polygon, Rect};
use crate::metric::{
    color_from_geometry, d_max, v_norm, visual_angle_unchecked, Target, ViewGeometry, VisionParams,
};

/// Radii `d_0 < d_1 < ...` whose head-on visual angles step down by `mu`.
#[derive(Clone, Debug, PartialEq)]
pub struct DistancePartitions {
    pub radii: Vec<f64>,
    pub v0_deg: f64,
}

pub fn build_distance_partitions(t: &Target, vp: &VisionParams) -> Result<DistancePartitions> {
    let mu = vp.mu_deg();
    let v0 = visual_angle_unchecked(t.length, vp.d0);
    if v0 <= mu {
        return Err(VcmError::Imperceptible {
            v0_arcmin: v0 * 60.0,
            mu_arcmin: vp.mu_arcmin,
        });
    }
    let mut radii = vec![vp.d0];
    for i in 1.. {
        let v = v0 - i as f64 * mu;
        if v < mu * (1.0 - 1e-12) {
            break;
        }
        radii.push(t.length / (2.0 * (v.to_radians() / 2.0).tan()));
    }
    Ok(DistancePartitions { radii, v0_deg: v0 })
}

/// Boundary viewing angles of one ring, descending from 90 to 0 degrees.
/// Adjacent boundaries differ by `mu` in visual angle at the ring midpoint.
pub fn build_angle_partitions(
    d_lo: f64,
    d_hi: f64,
    t: &Target,
    vp: &VisionParams,
) -> Result<Vec<f64>> {
    if d_lo.is_nan() || d_hi.is_nan() || d_lo >= d_hi {
        return Err(crate::error::invalid_param(
            "d_lo",
            format!("must be below d_hi ({d_lo} >= {d_hi})"),
        ));
    }
    Ok(angle_boundaries_at(
        (d_lo + d_hi) / 2.0,
        t.length,
        vp.mu_deg(),
    ))
}

fn angle_boundaries_at(d_mid: f64, s: f64, mu: f64) -> Vec<f64> {
    let v0 = visual_angle_unchecked(s, d_mid);
    let mut out = vec![90.0];
    for j in 1.. {
        let v = v0 - j as f64 * mu;
        if v < mu * (1.0 - 1e-12) {
            break;
        }
        let s_j = 2.0 * d_mid * (v.to_radians() / 2.0).tan();
        let alpha = 90.0 * s_j / s;
        if alpha <= 1e-12 {
            break;
        }
        out.push(alpha);
    }
    out.push(0.0);
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct Ring {
    pub d_lo: f64,
    pub d_hi: f64,
    /// Descending, first 90 and last 0.
    pub boundaries: Vec<f64>,
    pub first_cell: usize,
    pub near: bool,
}

impl Ring {
    pub fn partitions(&self) -> usize {
        self.boundaries.len() - 1
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cell {
    pub ring: u32,
    pub d_lo: f64,
    pub d_hi: f64,
    pub gamma_lo: f64,
    pub gamma_hi: f64,
    pub quadrant: u8,
    pub color: f64,
}

impl Cell {
    /// Local-frame polar angle range in radians.
    pub fn phi_range(&self) -> (f64, f64) {
        let (lo, hi) = (self.gamma_lo.to_radians(), self.gamma_hi.to_radians());
        let pi = std::f64::consts::PI;
        match self.quadrant {
            1 => (lo, hi),
            2 => (pi - hi, pi - lo),
            3 => (pi + lo, pi + hi),
            _ => (2.0 * pi - hi, 2.0 * pi - lo),
        }
    }

    pub fn area(&self) -> f64 {
        (self.gamma_hi - self.gamma_lo).to_radians() / 2.0
            * (self.d_hi * self.d_hi - self.d_lo * self.d_lo)
    }

    pub fn center_geometry(&self) -> ViewGeometry {
        ViewGeometry {
            d: (self.d_lo + self.d_hi) / 2.0,
            alpha_deg: (self.gamma_lo + self.gamma_hi) / 2.0,
        }
    }

    /// The cell as a sector in the target-local frame.
    pub fn local_sector(&self) -> AnnularSector {
        let (phi_lo, phi_hi) = self.phi_range();
        AnnularSector {
            center: Point::default(),
            r_lo: self.d_lo,
            r_hi: self.d_hi,
            phi_lo,
            phi_hi,
        }
    }

    pub fn world_sector(&self, t: &Target) -> AnnularSector {
        let f = t.frame();
        let (phi_lo, phi_hi) = self.phi_range();
        AnnularSector {
            center: t.midpoint,
            r_lo: self.d_lo,
            r_hi: self.d_hi,
            phi_lo: f.world_angle(phi_lo),
            phi_hi: f.world_angle(phi_hi),
        }
    }
}

#[derive(Clone, Debug)]
pub struct CellSet {
    pub target: Target,
    pub params: VisionParams,
    pub rings: Vec<Ring>,
    pub cells: Vec<Cell>,
    pub theta: f64,
    pub d_max: f64,
}

/// All cells out to `d_max`.
pub fn build_cells(t: &Target, vp: &VisionParams) -> Result<CellSet> {
    build_cells_within(t, vp, f64::INFINITY)
}

/// Cells of the rings starting closer than `extent` to the target midpoint.
pub fn build_cells_within(t: &Target, vp: &VisionParams, extent: f64) -> Result<CellSet> {
    let dp = build_distance_partitions(t, vp)?;
    let dm = d_max(t.length, vp.mu_arcmin);
    let mut bounds: Vec<(f64, f64, bool)> = vec![(0.0, vp.d0, true)];
    for w in dp.radii.windows(2) {
        bounds.push((w[0], w[1], false));
    }
    let last = *dp.radii.last().unwrap();
    if dm > last * (1.0 + 1e-12) {
        bounds.push((last, dm, false));
    }
    bounds.retain(|&(lo, _, _)| lo < extent);

    let mu = vp.mu_deg();
    let boundaries: Vec<Vec<f64>> = bounds
        .par_iter()
        .map(|&(lo, hi, near)| {
            let d_mid = if near { vp.d0 } else { (lo + hi) / 2.0 };
            angle_boundaries_at(d_mid, t.length, mu)
        })
        .collect();

    let mut rings = Vec::with_capacity(bounds.len());
    let mut cells = Vec::new();
    for (i, (&(d_lo, d_hi, near), b)) in bounds.iter().zip(boundaries).enumerate() {
        let first_cell = cells.len();
        for quadrant in 1..=4u8 {
            for w in b.windows(2) {
                let mut c = Cell {
                    ring: i as u32,
                    d_lo,
                    d_hi,
                    gamma_lo: w[1],
                    gamma_hi: w[0],
                    quadrant,
                    color: 0.0,
                };
                c.color = color_from_geometry(c.center_geometry(), t.length, vp);
                cells.push(c);
            }
        }
        rings.push(Ring {
            d_lo,
            d_hi,
            boundaries: b,
            first_cell,
            near,
        });
    }
    let mut cs = CellSet {
        target: *t,
        params: *vp,
        rings,
        cells,
        theta: 0.0,
        d_max: dm,
    };
    cs.theta = compute_theta(&cs);
    Ok(cs)
}

/// Smallest radial or inner-arc width over all cells outside the near disk.
pub fn compute_theta(cs: &CellSet) -> f64 {
    cs.rings
        .iter()
        .filter(|r| !r.near)
        .map(|r| {
            let radial = r.d_hi - r.d_lo;
            r.boundaries
                .windows(2)
                .map(|w| r.d_lo * (w[0] - w[1]).to_radians())
                .fold(radial, f64::min)
        })
        .fold(f64::INFINITY, f64::min)
}

impl CellSet {
    /// Outer radius covered by the cells.
    pub fn extent(&self) -> f64 {
        self.rings.last().map_or(0.0, |r| r.d_hi)
    }

    pub fn ring_cells(&self, ring: usize) -> &[Cell] {
        let r = &self.rings[ring];
        &self.cells[r.first_cell..r.first_cell + 4 * r.partitions()]
    }

    /// Index of the cell containing `p`, or `None` beyond the covered extent.
    pub fn locate(&self, p: Point) -> Option<usize> {
        let local = self.target.frame().to_local(p);
        let d = local.norm();
        let ri = self.rings.partition_point(|r| r.d_hi < d);
        let ring = self.rings.get(ri)?;
        let alpha = local.y.abs().atan2(local.x.abs()).to_degrees();
        let j = ring.boundaries[1..].partition_point(|&b| b > alpha);
        let quadrant = match (local.x >= 0.0, local.y >= 0.0) {
            (true, true) => 0,
            (false, true) => 1,
            (false, false) => 2,
            (true, false) => 3,
        };
        Some(ring.first_cell + quadrant * ring.partitions() + j)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["quadrant", "d_lo", "d_hi", "gamma_lo", "gamma_hi", "color"])?;
        for c in &self.cells {
            out.write_record([
                c.quadrant.to_string(),
                c.d_lo.to_string(),
                c.d_hi.to_string(),
                c.gamma_lo.to_string(),
                c.gamma_hi.to_string(),
                c.color.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Bounding box of the cell in the target-local frame.
pub fn approximate_cell_mbr(c: &Cell) -> Rect {
    c.local_sector().bbox()
}

/// Trapezoid between the tangents at the two arc midpoints and the radial
/// edges, in the target-local frame.
pub fn approximate_cell_tangential(c: &Cell) -> Polygon {
    let (p0, p1) = c.phi_range();
    let k = 1.0 / ((p1 - p0) / 2.0).cos();
    let mut v = vec![
        Point::from_polar(c.d_lo * k, p0),
        Point::from_polar(c.d_hi * k, p0),
        Point::from_polar(c.d_hi * k, p1),
        Point::from_polar(c.d_lo * k, p1),
    ];
    if c.d_lo == 0.0 {
        v.pop();
        v[0] = Point::default();
    }
    Polygon::from_ccw_unchecked(v)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Approximation {
    Mbr,
    Tangential,
}

/// Per-ring quantities of the approximation error bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundTerms {
    pub delta_r: f64,
    pub n: u32,
    pub window_deg: f64,
}

pub fn bound_terms(kind: Approximation, r_i: f64, r_next: f64, s: f64) -> BoundTerms {
    let width = r_next - r_i;
    let (delta_r, window) = match kind {
        Approximation::Mbr => (
            std::f64::consts::SQRT_2 * r_next,
            (r_next / (s / 2.0)).atan(),
        ),
        Approximation::Tangential => (r_next.hypot(width), (r_next / (s / 2.0 + r_i)).atan()),
    };
    BoundTerms {
        delta_r,
        n: ((delta_r - r_next) / width - 1e-12).ceil().max(0.0) as u32,
        window_deg: window.to_degrees(),
    }
}

/// Worst-case color-area error of coloring with the approximated shapes,
/// summed over cells whose sector meets `region` (all cells if `None`).
pub fn error_bound(cs: &CellSet, kind: Approximation, region: Option<&Rect>) -> f64 {
    let step = cs.params.mu_deg() / v_norm(cs.target.length, cs.params.d0);
    cs.rings
        .par_iter()
        .enumerate()
        .filter(|(_, r)| !r.near)
        .map(|(i, r)| {
            let bt = bound_terms(kind, r.d_lo, r.d_hi, cs.target.length);
            // partitions within the window around the normal, both sides of it
            let a = 2 * r
                .boundaries
                .windows(2)
                .filter(|w| w[0] > 90.0 - bt.window_deg)
                .count();
            let dc = bt.n as f64 * a as f64 * step;
            let area: f64 = cs
                .ring_cells(i)
                .iter()
                .filter(|c| region.is_none_or(|q| c.world_sector(&cs.target).bbox().intersects(q)))
                .map(Cell::area)
                .sum();
            dc * area
        })
        .sum()
}

pub fn error_bound_mbr(cs: &CellSet) -> f64 {
    error_bound(cs, Approximation::Mbr, None)
}

pub fn error_bound_tangential(cs: &CellSet) -> f64 {
    error_bound(cs, Approximation::Tangential, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::visual_angle;
    use rand::{Rng, SeedableRng};

    fn setup() -> (Target, VisionParams) {
        let t = Target::from_endpoints(Point::new(-50.0, 0.0), Point::new(50.0, 0.0)).unwrap();
        (t, VisionParams::new(4.0, 10.0, 360.0, 0.0).unwrap())
    }

    #[test]
    fn distance_partition_count_and_widths() {
        let (t, vp) = setup();
        let dp = build_distance_partitions(&t, &vp).unwrap();
        let v0_min = dp.v0_deg * 60.0;
        assert!((v0_min - 9442.8).abs() < 0.1);
        assert_eq!(dp.radii.len(), ((v0_min - 4.0) / 4.0).floor() as usize + 1);
        assert_eq!(dp.radii.len(), 2360);
        assert_eq!(dp.radii[0], 10.0);
        for w in dp.radii.windows(3) {
            assert!(w[2] - w[1] > w[1] - w[0]);
        }
        for (i, &r) in dp.radii.iter().enumerate() {
            let v = visual_angle(100.0, r).unwrap();
            assert!((v - (dp.v0_deg - i as f64 * 4.0 / 60.0)).abs() < 1e-9);
        }
        assert!(*dp.radii.last().unwrap() <= d_max(100.0, 4.0));
    }

    #[test]
    fn imperceptible_target_rejected() {
        let (t, _) = setup();
        let vp = VisionParams::new(9500.0, 10.0, 360.0, 0.0).unwrap();
        assert!(matches!(
            build_distance_partitions(&t, &vp),
            Err(VcmError::Imperceptible { .. })
        ));
    }

    #[test]
    fn angle_partition_count() {
        let (t, vp) = setup();
        let b = build_angle_partitions(999.0, 1001.0, &t, &vp).unwrap();
        let v0 = visual_angle(100.0, 1000.0).unwrap() * 60.0;
        assert!((v0 - 343.49).abs() < 0.01);
        assert_eq!(b.len() - 2, 84);
        assert_eq!(b[0], 90.0);
        assert_eq!(*b.last().unwrap(), 0.0);
        for w in b.windows(2) {
            assert!(w[0] > w[1]);
        }
        // boundaries sit mu apart in visual angle at the ring midpoint
        let va = |a: f64| visual_angle_unchecked(a / 90.0 * 100.0, 1000.0);
        for w in b[..b.len() - 1].windows(2) {
            assert!((va(w[0]) - va(w[1]) - 4.0 / 60.0).abs() < 1e-9);
        }
    }

    #[test]
    fn tiny_ring_has_single_partition() {
        let (t, vp) = setup();
        let far = d_max(100.0, 4.0);
        let b = build_angle_partitions(far * 0.9, far * 0.95, &t, &vp).unwrap();
        assert_eq!(b, vec![90.0, 0.0]);
    }

    fn small_set() -> CellSet {
        let t = Target::from_endpoints(Point::new(-7.5, 0.0), Point::new(7.5, 0.0)).unwrap();
        let vp = VisionParams::new(4.0, 100.0, 360.0, 0.0).unwrap();
        build_cells(&t, &vp).unwrap()
    }

    #[test]
    fn cell_counts_and_reflection() {
        let cs = small_set();
        let dp = build_distance_partitions(&cs.target, &cs.params).unwrap();
        let expected: usize = cs.rings.iter().map(|r| 4 * r.partitions()).sum();
        assert_eq!(cs.cells.len(), expected);
        // near disk + rings between radii + the tail to d_max
        assert_eq!(cs.rings.len(), dp.radii.len() + 1);
        assert!((cs.extent() - cs.d_max).abs() < 1e-9);
        for (i, r) in cs.rings.iter().enumerate() {
            let cells = cs.ring_cells(i);
            let l = r.partitions();
            for k in 0..l {
                for q in 1..4 {
                    assert_eq!(cells[k].color, cells[q * l + k].color);
                }
            }
        }
    }

    #[test]
    fn locate_agrees_with_bounds() {
        let cs = small_set();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..5000 {
            let d = rng.random_range(0.0..cs.extent());
            let phi = rng.random_range(0.0..std::f64::consts::TAU);
            let p = Point::from_polar(d, phi);
            let i = cs.locate(p).unwrap();
            let c = cs.cells[i];
            assert!(c.d_lo <= d && d <= c.d_hi);
            assert!(c.local_sector().contains_point(p), "{p:?} {c:?}");
            // exactly one first-quadrant cell holds the folded point
            let folded = Point::new(p.x.abs(), p.y.abs());
            let hits = cs
                .cells
                .iter()
                .filter(|c| c.quadrant == 1 && c.local_sector().contains_point(folded))
                .filter(|c| {
                    let a = folded.y.atan2(folded.x).to_degrees();
                    c.d_lo < d && d < c.d_hi && c.gamma_lo < a && a < c.gamma_hi
                })
                .count();
            assert!(hits <= 1);
        }
        assert_eq!(cs.locate(Point::new(cs.d_max * 1.01, 0.0)), None);
    }

    #[test]
    fn theta_is_innermost_min() {
        let cs = small_set();
        let brute = cs
            .cells
            .iter()
            .filter(|c| c.ring > 0)
            .map(|c| (c.d_hi - c.d_lo).min(c.d_lo * (c.gamma_hi - c.gamma_lo).to_radians()))
            .fold(f64::INFINITY, f64::min);
        assert_eq!(cs.theta, brute);
        let inner = cs.ring_cells(1);
        let inner_min = inner
            .iter()
            .map(|c| (c.d_hi - c.d_lo).min(c.d_lo * (c.gamma_hi - c.gamma_lo).to_radians()))
            .fold(f64::INFINITY, f64::min);
        assert_eq!(cs.theta, inner_min);
    }

    #[test]
    fn theta_large_set_matches_innermost_ring() {
        let (t, vp) = setup();
        let dp = build_distance_partitions(&t, &vp).unwrap();
        let per_ring: Vec<f64> = dp
            .radii
            .par_windows(2)
            .map(|w| {
                let b = angle_boundaries_at((w[0] + w[1]) / 2.0, 100.0, vp.mu_deg());
                b.windows(2)
                    .map(|a| w[0] * (a[0] - a[1]).to_radians())
                    .fold(w[1] - w[0], f64::min)
            })
            .collect();
        let brute = per_ring.iter().copied().fold(f64::INFINITY, f64::min);
        assert_eq!(brute, per_ring[0]);
        let cs = build_cells_within(&t, &vp, 10.5).unwrap();
        assert_eq!(cs.theta, per_ring[0]);
    }

    #[test]
    fn extent_limits_rings() {
        let cs = small_set();
        let t = cs.target;
        let limited = build_cells_within(&t, &cs.params, 200.0).unwrap();
        assert!(limited.rings.len() < cs.rings.len());
        assert!(limited.rings.last().unwrap().d_lo < 200.0);
        assert!(limited.extent() >= 200.0);
        assert_eq!(limited.cells[..], cs.cells[..limited.cells.len()]);
    }

    #[test]
    fn mbr_of_half_ring() {
        let c = Cell {
            ring: 1,
            d_lo: 100.0,
            d_hi: 110.0,
            gamma_lo: 0.0,
            gamma_hi: 90.0,
            quadrant: 1,
            color: 0.5,
        };
        let q2 = Cell { quadrant: 2, ..c };
        let m = approximate_cell_mbr(&c).union(&approximate_cell_mbr(&q2));
        assert!((m.width() - 220.0).abs() < 1e-9);
        assert!((m.height() - 110.0).abs() < 1e-9);
        assert!(m.area() >= c.area() + q2.area());
    }

    #[test]
    fn mbr_contains_cell_and_converges() {
        let cs = small_set();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..300 {
            let c = cs.cells[rng.random_range(0..cs.cells.len())];
            let m = approximate_cell_mbr(&c);
            assert!(m.area() >= c.area() * (1.0 - 1e-12));
            let s = c.local_sector();
            for _ in 0..20 {
                let d = rng.random_range(c.d_lo..c.d_hi);
                let phi = rng.random_range(s.phi_lo..s.phi_hi);
                assert!(m.contains_point(Point::from_polar(d, phi)));
            }
        }
        let thin = Cell {
            ring: 1,
            d_lo: 1000.0,
            d_hi: 1010.0,
            gamma_lo: 89.99,
            gamma_hi: 90.0,
            quadrant: 1,
            color: 0.0,
        };
        let m = approximate_cell_mbr(&thin);
        let ratio = m.area() / thin.area();
        assert!(ratio > 1.0 && ratio < 1.01, "{ratio}");
    }

    #[test]
    fn trapezoid_shape() {
        let c = Cell {
            ring: 3,
            d_lo: 100.0,
            d_hi: 110.0,
            gamma_lo: 30.0,
            gamma_hi: 60.0,
            quadrant: 1,
            color: 0.0,
        };
        let tr = approximate_cell_tangential(&c);
        assert!(tr.is_convex());
        assert!(tr.signed_area() > 0.0);
        // both arc midpoints sit on the trapezoid boundary
        let m_in = Point::from_polar(100.0, 45f64.to_radians());
        let m_out = Point::from_polar(110.0, 45f64.to_radians());
        assert!(tr.contains_point(m_in) && tr.contains_point(m_out));
        // arc overshoot beyond the outer tangent is excluded
        assert!(!tr.contains_point(Point::from_polar(110.5, 45f64.to_radians())));
        // area vs closed form: (d_hi^2 - d_lo^2) * tan(h)
        let h = 15f64.to_radians();
        assert!((tr.area() - (110.0f64.powi(2) - 100.0f64.powi(2)) * h.tan()).abs() < 1e-9);

        // degenerate width: strip of the same radial width
        let thin = Cell {
            gamma_lo: 44.9999,
            gamma_hi: 45.0,
            ..c
        };
        let tr = approximate_cell_tangential(&thin);
        let v = tr.vertices();
        assert!(((v[1] - v[0]).norm() - 10.0).abs() < 1e-6);

        // half ring: tangential area is closer to the cell than the MBR
        let halves = |g0: f64, g1: f64| Cell {
            gamma_lo: g0,
            gamma_hi: g1,
            ..c
        };
        let q1 = Cell {
            quadrant: 1,
            ..halves(0.0, 90.0)
        };
        let exact = 2.0 * q1.area();
        let mbr = 2.0 * approximate_cell_mbr(&q1).area();
        let tan = 2.0 * approximate_cell_tangential(&q1).area();
        assert!((tan - exact).abs() < (mbr - exact).abs());
    }

    #[test]
    fn bound_term_examples() {
        let m = bound_terms(Approximation::Mbr, 100.0, 110.0, 15.0);
        assert!((m.delta_r - 155.563).abs() < 1e-3);
        assert_eq!(m.n, 5);
        let t = bound_terms(Approximation::Tangential, 100.0, 110.0, 15.0);
        assert!((t.delta_r - 110.4536).abs() < 1e-4);
        assert_eq!(t.n, 1);
        assert!(t.window_deg < m.window_deg);
    }

    #[test]
    fn bounds_ordered_and_vanish() {
        let cs = small_set();
        let e_m = error_bound_mbr(&cs);
        let e_t = error_bound_tangential(&cs);
        assert!(e_m >= e_t && e_t > 0.0);
        let region = Rect::from_coords(-100.0, -100.0, 100.0, 100.0).unwrap();
        assert!(error_bound(&cs, Approximation::Mbr, Some(&region)) < e_m);

        // single ring: one closed-form term
        let only = CellSet {
            rings: vec![cs.rings[0].clone(), cs.rings[1].clone()],
            cells: cs.cells[..cs.rings[2].first_cell].to_vec(),
            ..cs.clone()
        };
        let r = &only.rings[1];
        let bt = bound_terms(Approximation::Tangential, r.d_lo, r.d_hi, 15.0);
        let a = 2 * r
            .boundaries
            .windows(2)
            .filter(|w| w[0] > 90.0 - bt.window_deg)
            .count();
        let area: f64 = only.ring_cells(1).iter().map(Cell::area).sum();
        let step = only.params.mu_deg() / v_norm(15.0, 100.0);
        let closed = bt.n as f64 * a as f64 * step * area;
        assert!((error_bound_tangential(&only) - closed).abs() <= 1e-9 * closed);
    }

    #[test]
    fn csv_export() {
        let cs = small_set();
        let mut buf = Vec::new();
        cs.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "quadrant,d_lo,d_hi,gamma_lo,gamma_hi,color"
        );
        assert_eq!(lines.count(), cs.cells.len());
    }
}
