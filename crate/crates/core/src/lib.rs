//! Visibility color maps: how well a line-segment target can be seen from
//! every point of a square region cluttered with rectangular obstacles.
//!
//! A map is built in three steps. The space around the target is cut into
//! equi-visible cells ([`partition`]); the visible region is carved out of
//! a quadtree by obstacle shadows ([`region`]); visible blocks are then
//! colored from an R-tree over the cells ([`builder`]).

pub mod baseline;
pub mod builder;
pub mod config;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod metric;
pub mod obstacle_index;
pub mod partition;
pub mod region;
pub mod render;
pub mod scene;

pub use baseline::{
    baseline_vcm, measured_error, oracle_color, oracle_color_in_view, BaselineGrid, ColorMap,
    ErrorMode, ErrorReport,
};
pub use builder::{
    build_vcm, construct_vcm, precompute_360, viewer_centric_setup, BuildOptions, CellShape,
    ColorTree, GazeSession, RunStats, Variant, VcMap, ViewerOrientation, ViewerQuery,
};
pub use config::RunConfig;
pub use error::{Result, VcmError};
pub use geometry::{Containment, Point, Polygon, Rect, Segment, Wedge};
pub use metric::{d_max, visibility_color, visual_angle, NearPointPolicy, Target, VisionParams};
pub use obstacle_index::{AccessStats, ObstacleIndex, ObstacleRect};
pub use partition::{build_cells, error_bound, Approximation, Cell, CellSet};
pub use region::{build_visible_region, BlockState, QuadTree, QuerySpace, ShadowPolygon};
pub use scene::{Distribution2D, Scene};
