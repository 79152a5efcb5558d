//! Shared fixtures for the benchmarks.

use vcm_core::config::RunConfig;
use vcm_core::scene::{demo_obstacles, generate_for, Scene};
use vcm_core::{Distribution2D, Result};

/// The shipped 20-obstacle scene under `cfg`.
pub fn demo_scene(cfg: &RunConfig) -> Result<Scene> {
    let base = RunConfig::default();
    Scene::from_config(cfg, demo_obstacles(&base, 20)?)
}

/// `n` obstacles across the whole dataspace.
pub fn dataspace_scene(cfg: &RunConfig, n: usize, dist: Distribution2D) -> Result<Scene> {
    Scene::from_config(cfg, generate_for(cfg, n, dist)?)
}
