//! Brute-force ground truth, the regular-grid method and map comparison.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::builder::VcMap;
use crate::error::{invalid_param, Result, VcmError};
use crate::geometry::{Point, Rect};
use crate::metric::{fully_visible, visibility_color, Target, VisionParams};
use crate::obstacle_index::{RTree, DEFAULT_PAGE_SIZE, ENTRY_SIZE};
use crate::region::QuerySpace;

/// Color of `p` with every obstacle tested; no field-of-view mask.
pub fn oracle_color(p: Point, t: &Target, vp: &VisionParams, obstacles: &[Rect]) -> f64 {
    if fully_visible(p, t, obstacles) {
        visibility_color(p, t, vp)
    } else {
        0.0
    }
}

/// [`oracle_color`], but 0 outside the field of view.
pub fn oracle_color_in_view(p: Point, t: &Target, vp: &VisionParams, obstacles: &[Rect]) -> f64 {
    if vp.wedge(t).contains_point(p) {
        oracle_color(p, t, vp, obstacles)
    } else {
        0.0
    }
}

/// A piecewise-constant color field over a rectangle.
pub trait ColorMap {
    fn bounds(&self) -> Rect;
    fn color_at(&self, p: Point) -> f64;
    /// Disjoint rectangles covering the bounds, each with its color.
    fn pieces(&self) -> Vec<(Rect, f64)>;
}

impl ColorMap for VcMap {
    fn bounds(&self) -> Rect {
        self.space().bounds
    }
    fn color_at(&self, p: Point) -> f64 {
        VcMap::color_at(self, p)
    }
    fn pieces(&self) -> Vec<(Rect, f64)> {
        self.leaves()
    }
}

/// `n x n` grid of colors, row-major from the bottom row.
#[derive(Clone, Debug, PartialEq)]
pub struct BaselineGrid {
    pub bounds: Rect,
    pub n: usize,
    pub colors: Vec<f64>,
}

impl BaselineGrid {
    pub fn cell_rect(&self, row: usize, col: usize) -> Rect {
        let w = self.bounds.width() / self.n as f64;
        let h = self.bounds.height() / self.n as f64;
        let x0 = self.bounds.min.x + col as f64 * w;
        let y0 = self.bounds.min.y + row as f64 * h;
        let x1 = if col + 1 == self.n {
            self.bounds.max.x
        } else {
            x0 + w
        };
        let y1 = if row + 1 == self.n {
            self.bounds.max.y
        } else {
            y0 + h
        };
        Rect::from_corners_unchecked(Point::new(x0, y0), Point::new(x1, y1))
    }

    pub fn color(&self, row: usize, col: usize) -> f64 {
        self.colors[row * self.n + col]
    }

    fn index_of(&self, v: f64, lo: f64, span: f64) -> usize {
        (((v - lo) / span * self.n as f64).floor().max(0.0) as usize).min(self.n - 1)
    }

    /// `row,col,xmin,ymin,xmax,ymax,color` per grid cell.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["row", "col", "xmin", "ymin", "xmax", "ymax", "color"])?;
        for row in 0..self.n {
            for col in 0..self.n {
                let r = self.cell_rect(row, col);
                out.write_record([
                    row.to_string(),
                    col.to_string(),
                    r.min.x.to_string(),
                    r.min.y.to_string(),
                    r.max.x.to_string(),
                    r.max.y.to_string(),
                    self.color(row, col).to_string(),
                ])?;
            }
        }
        out.flush()?;
        Ok(())
    }
}

impl ColorMap for BaselineGrid {
    fn bounds(&self) -> Rect {
        self.bounds
    }
    fn color_at(&self, p: Point) -> f64 {
        if !self.bounds.contains_point(p) {
            return 0.0;
        }
        let col = self.index_of(p.x, self.bounds.min.x, self.bounds.width());
        let row = self.index_of(p.y, self.bounds.min.y, self.bounds.height());
        self.color(row, col)
    }
    fn pieces(&self) -> Vec<(Rect, f64)> {
        (0..self.n * self.n)
            .map(|k| (self.cell_rect(k / self.n, k % self.n), self.colors[k]))
            .collect()
    }
}

/// Grid method: each cell takes the in-view oracle color of its midpoint.
pub fn baseline_vcm(
    space: &QuerySpace,
    t: &Target,
    vp: &VisionParams,
    obstacles: &[Rect],
    n: usize,
) -> Result<BaselineGrid> {
    if n < 2 {
        return Err(invalid_param(
            "n",
            format!("grid needs at least 2 cells per side, got {n}"),
        ));
    }
    let mut grid = BaselineGrid {
        bounds: space.bounds,
        n,
        colors: vec![0.0; n * n],
    };
    let rects: Vec<Rect> = (0..n).map(|col| grid.cell_rect(0, col)).collect();
    let heights: Vec<Rect> = (0..n).map(|row| grid.cell_rect(row, 0)).collect();
    grid.colors
        .par_chunks_mut(n)
        .enumerate()
        .for_each(|(row, out)| {
            let y = heights[row].center().y;
            for (col, c) in out.iter_mut().enumerate() {
                let p = Point::new(rects[col].center().x, y);
                *c = oracle_color_in_view(p, t, vp, obstacles);
            }
        });
    Ok(grid)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ErrorMode {
    Signed,
    #[default]
    Abs,
}

impl FromStr for ErrorMode {
    type Err = VcmError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "signed" | "area_weighted_signed" => Ok(ErrorMode::Signed),
            "abs" | "area_weighted_abs" => Ok(ErrorMode::Abs),
            _ => Err(invalid_param("mode", format!("unknown error mode `{s}`"))),
        }
    }
}

impl fmt::Display for ErrorMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ErrorMode::Signed => "signed",
            ErrorMode::Abs => "abs",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorReport {
    /// The value selected by `mode`.
    pub error_fraction: f64,
    /// `sum |c_e - c_a| A / sum c_e A`.
    pub abs_deviation: f64,
    /// `sum (c_e - c_a) A / sum c_e A`.
    pub signed_deviation: f64,
    pub reference_mass: f64,
    /// Overlay pieces with positive area.
    pub pieces: usize,
    pub mode: ErrorMode,
}

impl fmt::Display for ErrorReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "error_fraction={:.9}", self.error_fraction)?;
        writeln!(f, "abs_deviation={:.9}", self.abs_deviation)?;
        writeln!(f, "signed_deviation={:.9}", self.signed_deviation)?;
        writeln!(f, "reference_mass={:.6}", self.reference_mass)?;
        writeln!(f, "pieces={}", self.pieces)?;
        writeln!(f, "mode={}", self.mode)
    }
}

/// Area-weighted deviation of `candidate` from `reference` over the
/// overlay of their pieces.
pub fn measured_error(
    reference: &impl ColorMap,
    candidate: &impl ColorMap,
    mode: ErrorMode,
) -> Result<ErrorReport> {
    let (rb, cb) = (reference.bounds(), candidate.bounds());
    let tol = 1e-9 * rb.width().max(rb.height());
    if rb.min.distance(cb.min) > tol || rb.max.distance(cb.max) > tol {
        return Err(VcmError::MismatchedInputs);
    }
    let cand = candidate.pieces();
    let fanout = DEFAULT_PAGE_SIZE / ENTRY_SIZE;
    let tree = RTree::bulk_load(
        (0..cand.len()).collect::<Vec<usize>>(),
        |&i| cand[i].0,
        fanout,
    );
    let (mass, abs, signed, pieces) = reference
        .pieces()
        .par_iter()
        .map(|(r, ce)| {
            let mut acc = (0.0, 0.0, 0.0, 0usize);
            tree.search(
                |m| m.overlaps_interior(r),
                |k| {
                    let (cr, ca) = cand[*tree.item(k)];
                    if let Some(x) = r.intersection(&cr) {
                        let a = x.area();
                        if a > 0.0 {
                            acc.0 += ce * a;
                            acc.1 += (ce - ca).abs() * a;
                            acc.2 += (ce - ca) * a;
                            acc.3 += 1;
                        }
                    }
                },
                |_| {},
            );
            acc
        })
        .reduce(
            || (0.0, 0.0, 0.0, 0),
            |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2, a.3 + b.3),
        );
    if mass <= 0.0 {
        return Err(VcmError::ZeroReference);
    }
    let abs_deviation = abs / mass;
    let signed_deviation = signed / mass;
    Ok(ErrorReport {
        error_fraction: match mode {
            ErrorMode::Abs => abs_deviation,
            ErrorMode::Signed => signed_deviation,
        },
        abs_deviation,
        signed_deviation,
        reference_mass: mass,
        pieces,
        mode,
    })
}
