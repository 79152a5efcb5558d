//! Grayscale raster output.

use std::io::Write;

use crate::baseline::ColorMap;
use crate::error::{invalid_param, Result};
use crate::geometry::Point;

/// Binary PGM (P5) of `px x px` pixels sampled at pixel centers; the top
/// row is the largest y.
pub fn render_pgm(map: &impl ColorMap, px: usize) -> Result<Vec<u8>> {
    if px < 16 {
        return Err(invalid_param(
            "px",
            format!("must be at least 16, got {px}"),
        ));
    }
    let b = map.bounds();
    let (sx, sy) = (b.width() / px as f64, b.height() / px as f64);
    let mut out = format!("P5\n{px} {px}\n255\n").into_bytes();
    out.reserve(px * px);
    for row in 0..px {
        let y = b.max.y - (row as f64 + 0.5) * sy;
        for col in 0..px {
            let x = b.min.x + (col as f64 + 0.5) * sx;
            let c = map.color_at(Point::new(x, y)).clamp(0.0, 1.0);
            out.push((255.0 * c).round() as u8);
        }
    }
    Ok(out)
}

pub fn write_pgm<W: Write>(mut w: W, map: &impl ColorMap, px: usize) -> Result<()> {
    w.write_all(&render_pgm(map, px)?)?;
    Ok(())
}

/// Pixel rows of a P5 image produced by [`render_pgm`].
pub fn pgm_pixels(bytes: &[u8]) -> Option<(usize, Vec<&[u8]>)> {
    let mut fields = Vec::new();
    let mut pos = 0;
    while fields.len() < 4 {
        while bytes.get(pos)?.is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while !bytes.get(pos)?.is_ascii_whitespace() {
            pos += 1;
        }
        fields.push(std::str::from_utf8(&bytes[start..pos]).ok()?);
    }
    if fields[0] != "P5" || fields[3] != "255" {
        return None;
    }
    let w: usize = fields[1].parse().ok()?;
    let h: usize = fields[2].parse().ok()?;
    let data = bytes.get(pos + 1..)?;
    (data.len() == w * h).then(|| (w, data.chunks(w).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baseline::BaselineGrid;
    use crate::builder::{build_vcm, BuildOptions};
    use crate::geometry::Rect;
    use crate::metric::{Target, VisionParams};
    use crate::region::QuerySpace;

    #[test]
    fn black_map_and_header() {
        let g = BaselineGrid {
            bounds: Rect::from_coords(0.0, 0.0, 1.0, 1.0).unwrap(),
            n: 2,
            colors: vec![0.0; 4],
        };
        let img = render_pgm(&g, 16).unwrap();
        assert!(img.starts_with(b"P5\n16 16\n255\n"));
        let (w, rows) = pgm_pixels(&img).unwrap();
        assert_eq!(w, 16);
        assert!(rows.iter().all(|r| r.iter().all(|&v| v == 0)));
        assert!(render_pgm(&g, 15).is_err());
    }

    #[test]
    fn top_row_is_high_y() {
        let g = BaselineGrid {
            bounds: Rect::from_coords(0.0, 0.0, 1.0, 1.0).unwrap(),
            n: 2,
            colors: vec![0.0, 0.0, 1.0, 1.0],
        };
        let img = render_pgm(&g, 16).unwrap();
        let (_, rows) = pgm_pixels(&img).unwrap();
        assert!(rows[0].iter().all(|&v| v == 255));
        assert!(rows[15].iter().all(|&v| v == 0));
    }

    #[test]
    fn obstacle_free_brightness_falls_along_rays() {
        let sp = QuerySpace::centered(Point::default(), 160.0).unwrap();
        let t = Target::from_endpoints(Point::new(-5.0, 0.0), Point::new(5.0, 0.0)).unwrap();
        let vp = VisionParams::new(60.0, 20.0, 360.0, 0.0).unwrap();
        let map = build_vcm(&sp, &t, &vp, None, &BuildOptions::default()).unwrap();
        // odd size puts the middle column on the bisector through the midpoint
        let img = render_pgm(&map, 65).unwrap();
        let (_, rows) = pgm_pixels(&img).unwrap();
        let c = 32;
        // rows at least d0 = 20 away from the midpoint
        let far = |r: usize| (80.0 - (r as f64 + 0.5) * 160.0 / 65.0).abs() >= 20.0;
        for r in (1..=32).filter(|&r| far(r)) {
            assert!(rows[r - 1][c] <= rows[r][c]);
        }
        for r in (32..64).filter(|&r| far(r)) {
            assert!(rows[r + 1][c] <= rows[r][c]);
        }
        assert!(rows[0][c] < rows[31][c]);
    }
}
