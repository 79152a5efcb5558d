//! End-to-end runs and parameter sweeps.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use crate::baseline::{measured_error, ErrorMode};
use crate::builder::{build_vcm, RunStats, Variant, VcMap};
use crate::config::RunConfig;
use crate::error::{invalid_param, Result, VcmError};
use crate::obstacle_index::ObstacleRect;
use crate::scene::{generate_for, Distribution2D, Scene};

/// Builds the scene from the configuration and computes its map.
pub fn run_pipeline(cfg: &RunConfig, obstacles: Vec<ObstacleRect>) -> Result<(Scene, VcMap)> {
    let scene = Scene::from_config(cfg, obstacles)?;
    let map = run_scene(cfg, &scene)?;
    Ok((scene, map))
}

pub fn run_scene(cfg: &RunConfig, scene: &Scene) -> Result<VcMap> {
    build_vcm(
        &scene.space,
        &scene.target,
        &cfg.vision_params()?,
        scene.index.as_ref(),
        &cfg.build_options(),
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepParam {
    Mu,
    Theta,
    Aq,
    Fov,
    Lt,
    Ds,
}

impl SweepParam {
    pub const ALL: [SweepParam; 6] = [
        Self::Mu,
        Self::Theta,
        Self::Aq,
        Self::Fov,
        Self::Lt,
        Self::Ds,
    ];

    pub fn values(&self) -> Vec<f64> {
        match self {
            Self::Mu | Self::Theta => vec![1.0, 2.0, 4.0, 8.0, 16.0],
            Self::Aq | Self::Lt => vec![0.05, 0.10, 0.15, 0.20, 0.25],
            Self::Fov => vec![60.0, 120.0, 180.0, 240.0, 300.0, 360.0],
            Self::Ds => vec![5_000.0, 10_000.0, 15_000.0, 20_000.0, 25_000.0],
        }
    }

    pub fn apply(&self, cfg: &RunConfig, v: f64) -> RunConfig {
        let mut c = *cfg;
        match self {
            Self::Mu => c.mu_arcmin = v,
            Self::Theta => c.theta_multiplier = v,
            Self::Aq => c.area_fraction = v,
            Self::Fov => c.fov_deg = v,
            Self::Lt => c.target_length_fraction = v,
            Self::Ds => {}
        }
        c
    }
}

impl FromStr for SweepParam {
    type Err = VcmError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mu" => Ok(Self::Mu),
            "theta" => Ok(Self::Theta),
            "aq" => Ok(Self::Aq),
            "fov" => Ok(Self::Fov),
            "lt" => Ok(Self::Lt),
            "ds" => Ok(Self::Ds),
            _ => Err(invalid_param(
                "param",
                format!("unknown sweep parameter `{s}`"),
            )),
        }
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Mu => "mu",
            Self::Theta => "theta",
            Self::Aq => "aq",
            Self::Fov => "fov",
            Self::Lt => "lt",
            Self::Ds => "ds",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepRow {
    pub param: SweepParam,
    pub value: f64,
    /// Counts from the last repetition, timings the fastest one.
    pub stats: RunStats,
    /// Abs deviation of the configured variant from the exact map; 0 for exact.
    pub error: f64,
}

impl SweepRow {
    pub fn node_accesses(&self) -> u64 {
        self.stats.node_accesses_obstacle + self.stats.node_accesses_color
    }
}

/// Runs the pipeline once per value of `param`. `obstacles` is the scene for
/// every parameter except `ds`, which draws its own nested uniform scenes.
pub fn sweep(
    param: SweepParam,
    cfg: &RunConfig,
    obstacles: &[ObstacleRect],
    repeats: usize,
) -> Result<Vec<SweepRow>> {
    let repeats = repeats.max(1);
    let nested = match param {
        SweepParam::Ds => {
            let max = param.values().last().copied().unwrap_or(0.0) as usize;
            Some(generate_for(cfg, max, Distribution2D::Uniform)?)
        }
        _ => None,
    };
    let mut rows = Vec::new();
    for v in param.values() {
        let c = param.apply(cfg, v);
        let obs = match &nested {
            Some(all) => all[..v as usize].to_vec(),
            None => obstacles.to_vec(),
        };
        let scene = Scene::from_config(&c, obs)?;
        let mut fastest: Option<RunStats> = None;
        let mut last = None;
        for _ in 0..repeats {
            let map = run_scene(&c, &scene)?;
            if fastest.is_none_or(|f| map.stats.total_s() < f.total_s()) {
                fastest = Some(map.stats);
            }
            last = Some(map);
        }
        let (last, fastest) = (
            last.expect("at least one repetition"),
            fastest.expect("at least one repetition"),
        );
        let mut stats = last.stats;
        stats.elapsed_partition_s = fastest.elapsed_partition_s;
        stats.elapsed_region_s = fastest.elapsed_region_s;
        stats.elapsed_merge_s = fastest.elapsed_merge_s;
        let error = if c.variant == Variant::Exact {
            0.0
        } else {
            let exact_cfg = RunConfig {
                variant: Variant::Exact,
                ..c
            };
            let exact = run_scene(&exact_cfg, &scene)?;
            measured_error(&exact, &last, ErrorMode::Abs)?.error_fraction
        };
        rows.push(SweepRow {
            param,
            value: v,
            stats,
            error,
        });
    }
    Ok(rows)
}

pub fn write_sweep_csv<W: Write>(w: W, rows: &[SweepRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "param",
        "value",
        "time_s",
        "partition_s",
        "region_s",
        "merge_s",
        "node_accesses",
        "node_accesses_obstacle",
        "node_accesses_color",
        "obstacles_emitted",
        "leaves_colored",
        "cells",
        "theta",
        "error",
    ])?;
    for r in rows {
        let s = &r.stats;
        out.write_record([
            r.param.to_string(),
            r.value.to_string(),
            format!("{:.6}", s.total_s()),
            format!("{:.6}", s.elapsed_partition_s),
            format!("{:.6}", s.elapsed_region_s),
            format!("{:.6}", s.elapsed_merge_s),
            r.node_accesses().to_string(),
            s.node_accesses_obstacle.to_string(),
            s.node_accesses_color.to_string(),
            s.obstacles_emitted.to_string(),
            s.leaves_colored.to_string(),
            s.cells.to_string(),
            format!("{:.6}", s.theta),
            format!("{:.9}", r.error),
        ])?;
    }
    out.flush()?;
    Ok(())
}
