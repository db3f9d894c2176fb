//! Points, windows, spatial indexing and planar Voronoi cells.

pub mod grid;
pub mod io;
pub mod point;
pub(crate) mod polyhedron;
pub mod voronoi;
pub mod window;

pub use grid::{build_index, GridIndex};
pub use point::{Point, PointConfiguration, MAX_DIM};
pub use voronoi::{
    clipped_voronoi_cell_2d, voronoi_cell_2d, CellEdge, EdgeSource, Voronoi2d, VoronoiCell,
};
pub use window::{ball_volume, Window};
