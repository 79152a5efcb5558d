//! Run configuration with the experiment defaults.

use crate::builder::{BuildOptions, Variant};
use crate::error::{invalid_param, Result};
use crate::geometry::Point;
use crate::metric::{NearPointPolicy, Target, VisionParams};
use crate::obstacle_index::DEFAULT_PAGE_SIZE;
use crate::region::QuerySpace;

pub const DEFAULT_SPAN: f64 = 10_000.0;
pub const DEFAULT_SEED: u64 = 20_240_917;
pub const SEED_ENV: &str = "VCM_SEED";

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunConfig {
    pub mu_arcmin: f64,
    pub theta_multiplier: f64,
    /// Query-space area as a percentage of the dataspace area.
    pub area_fraction: f64,
    pub fov_deg: f64,
    /// Target length as a percentage of the dataspace side.
    pub target_length_fraction: f64,
    pub d0: f64,
    pub gaze_deg: f64,
    pub variant: Variant,
    pub grid_n: usize,
    pub seed: u64,
    pub span: f64,
    pub page_size: usize,
    pub near_point: NearPointPolicy,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mu_arcmin: 4.0,
            theta_multiplier: 1.0,
            area_fraction: 0.15,
            fov_deg: 120.0,
            target_length_fraction: 0.15,
            d0: 100.0,
            gaze_deg: 90.0,
            variant: Variant::Exact,
            grid_n: 32,
            seed: DEFAULT_SEED,
            span: DEFAULT_SPAN,
            page_size: DEFAULT_PAGE_SIZE,
            near_point: NearPointPolicy::Clamp,
        }
    }
}

impl RunConfig {
    /// Replaces the seed with `VCM_SEED` when it is set.
    pub fn with_seed_env(mut self) -> Result<Self> {
        if let Ok(v) = std::env::var(SEED_ENV) {
            self.seed = v.trim().parse().map_err(|_| {
                invalid_param("VCM_SEED", format!("not an unsigned integer: `{v}`"))
            })?;
        }
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("mu_arcmin", self.mu_arcmin),
            ("theta_multiplier", self.theta_multiplier),
            ("area_fraction", self.area_fraction),
            ("target_length_fraction", self.target_length_fraction),
            ("d0", self.d0),
            ("span", self.span),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid_param(name, format!("must be positive, got {v}")));
            }
        }
        if self.area_fraction > 100.0 {
            return Err(invalid_param("area_fraction", "exceeds 100 percent"));
        }
        if self.target_length_fraction >= 100.0 * self.area_fraction.sqrt() / 10.0 {
            return Err(invalid_param(
                "target_length_fraction",
                "target does not fit in the query space",
            ));
        }
        if self.grid_n < 2 {
            return Err(invalid_param("grid_n", "must be at least 2"));
        }
        self.vision_params().map(|_| ())
    }

    pub fn vision_params(&self) -> Result<VisionParams> {
        Ok(
            VisionParams::new(self.mu_arcmin, self.d0, self.fov_deg, self.gaze_deg)?
                .with_near_point(self.near_point),
        )
    }

    pub fn center(&self) -> Point {
        Point::new(self.span / 2.0, self.span / 2.0)
    }

    /// Axis-aligned target at the center of the dataspace.
    pub fn target(&self) -> Result<Target> {
        Target::centered(
            self.center(),
            self.target_length_fraction / 100.0 * self.span,
            0.0,
        )
    }

    pub fn space_side(&self) -> f64 {
        (self.area_fraction / 100.0).sqrt() * self.span
    }

    /// Square query space around the target midpoint.
    pub fn query_space(&self, t: &Target) -> Result<QuerySpace> {
        QuerySpace::centered(t.midpoint, self.space_side())
    }

    pub fn build_options(&self) -> BuildOptions {
        BuildOptions {
            variant: self.variant,
            theta_multiplier: self.theta_multiplier,
            page_size: self.page_size,
        }
    }
}
