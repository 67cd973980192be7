//! Conforming triangulation of a rectangle with embedded fractures and the
//! mixed-dimensional grid built on it.

mod cdt;
mod decompose;
mod grid;
mod mixed;
mod structured;

pub use cdt::{refine_uniform, triangulate, triangulate_with_limit, MeshSizeSpec, SizeMode, Triangulation};
pub use decompose::{decompose_network_2d, ClippedFracture, DecomposedNetwork, SubSegment};
pub use grid::{polygon_area, FaceTag, Grid, PolyMesh, Rect, Side};
pub use mixed::{assemble_mixed, build_mixed_grid, mixed_grid_from_mesh, InterfaceMap, InterfacePair, MixedDimGrid};
pub use structured::{cartesian_polymesh, cartesian_triangles, tensor_polymesh};
