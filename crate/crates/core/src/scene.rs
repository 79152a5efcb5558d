//! Obstacle datasets: CSV ingestion with normalization, and synthetic scenes.

use std::fmt;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Zipf};

use crate::config::RunConfig;
use crate::error::{invalid_param, Result, VcmError};
use crate::geometry::{segment_intersects_rect, Point, Rect, Segment};
use crate::metric::Target;
use crate::obstacle_index::{ObstacleIndex, ObstacleRect};
use crate::region::QuerySpace;

/// Parses `id,xmin,ymin,xmax,ymax[,zmin,zmax]` rows. A leading header row
/// and blank lines are skipped; z columns are dropped.
pub fn read_obstacles<R: Read>(r: R) -> Result<Vec<ObstacleRect>> {
    let mut out = Vec::new();
    for (k, line) in BufReader::new(r).lines().enumerate() {
        let line = line?;
        let lineno = k + 1;
        let text = line.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = text.split(',').map(str::trim).collect();
        if out.is_empty() && k == 0 && fields[0].parse::<f64>().is_err() {
            continue;
        }
        if fields.len() != 5 && fields.len() != 7 {
            return Err(VcmError::Parse {
                line: lineno,
                message: format!("expected 5 or 7 columns, found {}", fields.len()),
            });
        }
        let id: u64 = fields[0].parse().map_err(|_| VcmError::Parse {
            line: lineno,
            message: format!("bad id `{}`", fields[0]),
        })?;
        let mut v = [0.0; 4];
        for (slot, f) in v.iter_mut().zip(&fields[1..5]) {
            *slot = f.parse().map_err(|_| VcmError::Parse {
                line: lineno,
                message: format!("bad coordinate `{f}`"),
            })?;
        }
        for f in &fields[5..] {
            f.parse::<f64>().map_err(|_| VcmError::Parse {
                line: lineno,
                message: format!("bad coordinate `{f}`"),
            })?;
        }
        let rect = Rect::from_coords(v[0], v[1], v[2], v[3]).map_err(|e| VcmError::Parse {
            line: lineno,
            message: e.to_string(),
        })?;
        out.push(ObstacleRect { id, rect });
    }
    if out.is_empty() {
        return Err(VcmError::EmptyInput("obstacle file"));
    }
    Ok(out)
}

pub fn write_obstacles<W: Write>(w: W, obstacles: &[ObstacleRect]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["id", "xmin", "ymin", "xmax", "ymax"])?;
    for o in obstacles {
        out.write_record([
            o.id.to_string(),
            o.rect.min.x.to_string(),
            o.rect.min.y.to_string(),
            o.rect.max.x.to_string(),
            o.rect.max.y.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Maps the bounding box of the data onto `[0, span]^2` with one scale
/// factor; the shorter side is centered.
pub fn normalize(obstacles: &mut [ObstacleRect], span: f64) -> Result<()> {
    let bb = Rect::bounding(obstacles.iter().flat_map(|o| [o.rect.min, o.rect.max]))
        .ok_or(VcmError::EmptyInput("obstacle list"))?;
    let scale = span / bb.width().max(bb.height());
    let offset = Point::new(
        (span - bb.width() * scale) / 2.0,
        (span - bb.height() * scale) / 2.0,
    );
    let map = |p: Point| {
        Point::new(
            (p.x - bb.min.x) * scale + offset.x,
            (p.y - bb.min.y) * scale + offset.y,
        )
    };
    for o in obstacles.iter_mut() {
        o.rect = Rect::new(map(o.rect.min), map(o.rect.max))?;
    }
    Ok(())
}

pub fn ingest(path: &Path, normalize_to: Option<f64>) -> Result<Vec<ObstacleRect>> {
    let mut obs = read_obstacles(std::fs::File::open(path)?)?;
    if let Some(span) = normalize_to {
        normalize(&mut obs, span)?;
    }
    Ok(obs)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Distribution2D {
    #[default]
    Uniform,
    Zipf,
}

impl FromStr for Distribution2D {
    type Err = VcmError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "uniform" | "u" => Ok(Self::Uniform),
            "zipf" | "z" => Ok(Self::Zipf),
            _ => Err(invalid_param(
                "distribution",
                format!("unknown distribution `{s}`"),
            )),
        }
    }
}

impl fmt::Display for Distribution2D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Uniform => "uniform",
            Self::Zipf => "zipf",
        })
    }
}

pub const MIN_SIDE: f64 = 10.0;
pub const MAX_SIDE: f64 = 100.0;
const ZIPF_RANKS: f64 = 100.0;

/// `n` rectangles with sides in `[10, 100]` inside `area`. Rectangles
/// touching `avoid` are redrawn.
pub fn generate(
    n: usize,
    dist: Distribution2D,
    seed: u64,
    area: &Rect,
    avoid: Option<&Segment>,
) -> Result<Vec<ObstacleRect>> {
    if n == 0 {
        return Err(invalid_param("n", "must be at least 1"));
    }
    if area.width() <= MAX_SIDE || area.height() <= MAX_SIDE {
        return Err(invalid_param("area", "too small for the obstacle sizes"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let focus = Point::new(
        rng.random_range(area.min.x..area.max.x),
        rng.random_range(area.min.y..area.max.y),
    );
    let zipf = Zipf::new(ZIPF_RANKS, 1.0).map_err(|e| invalid_param("zipf", e.to_string()))?;
    let ring = area.width().max(area.height()) / ZIPF_RANKS;
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let w = rng.random_range(MIN_SIDE..=MAX_SIDE);
        let h = rng.random_range(MIN_SIDE..=MAX_SIDE);
        let c = match dist {
            Distribution2D::Uniform => Point::new(
                rng.random_range(area.min.x + w / 2.0..=area.max.x - w / 2.0),
                rng.random_range(area.min.y + h / 2.0..=area.max.y - h / 2.0),
            ),
            Distribution2D::Zipf => {
                let rank: f64 = zipf.sample(&mut rng);
                let r = (rank - 1.0 + rng.random::<f64>()) * ring;
                let a = rng.random_range(0.0..std::f64::consts::TAU);
                focus + Point::from_polar(r, a)
            }
        };
        let rect = Rect::from_coords(c.x - w / 2.0, c.y - h / 2.0, c.x + w / 2.0, c.y + h / 2.0)?;
        if !area.contains_rect(&rect) {
            continue;
        }
        if avoid.is_some_and(|s| segment_intersects_rect(s, &rect)) {
            continue;
        }
        out.push(ObstacleRect {
            id: out.len() as u64,
            rect,
        });
    }
    Ok(out)
}

/// Everything one run needs.
#[derive(Clone, Debug)]
pub struct Scene {
    pub obstacles: Vec<ObstacleRect>,
    pub target: Target,
    pub space: QuerySpace,
    pub index: Option<ObstacleIndex>,
}

impl Scene {
    pub fn new(
        obstacles: Vec<ObstacleRect>,
        target: Target,
        space: QuerySpace,
        page_size: usize,
    ) -> Result<Self> {
        if let Some(o) = obstacles
            .iter()
            .find(|o| segment_intersects_rect(&target.geom, &o.rect))
        {
            return Err(VcmError::ObstacleOverlapsTarget { id: o.id });
        }
        let index = if obstacles.is_empty() {
            None
        } else {
            Some(ObstacleIndex::bulk_load(obstacles.clone(), page_size)?)
        };
        Ok(Self {
            obstacles,
            target,
            space,
            index,
        })
    }

    /// Target and query space from the configuration.
    pub fn from_config(cfg: &RunConfig, obstacles: Vec<ObstacleRect>) -> Result<Self> {
        cfg.validate()?;
        let t = cfg.target()?;
        let space = cfg.query_space(&t)?;
        Self::new(obstacles, t, space, cfg.page_size)
    }

    pub fn rects(&self) -> Vec<Rect> {
        self.obstacles.iter().map(|o| o.rect).collect()
    }
}

/// Obstacles across the whole dataspace, clear of the configured target.
pub fn generate_for(cfg: &RunConfig, n: usize, dist: Distribution2D) -> Result<Vec<ObstacleRect>> {
    let t = cfg.target()?;
    let area = Rect::from_coords(0.0, 0.0, cfg.span, cfg.span)?;
    generate(n, dist, cfg.seed, &area, Some(&t.geom))
}

/// The small scene shipped with the repository: `n` obstacles inside the
/// default query space.
pub fn demo_obstacles(cfg: &RunConfig, n: usize) -> Result<Vec<ObstacleRect>> {
    let t = cfg.target()?;
    let space = cfg.query_space(&t)?;
    generate(
        n,
        Distribution2D::Uniform,
        cfg.seed,
        &space.bounds,
        Some(&t.geom),
    )
}
