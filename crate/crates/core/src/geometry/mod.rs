//! Fracture primitives in 2D and 3D, network intersection detection, and
//! construction helpers (elliptic fractures, outcrop extrusion).

mod intersect;
mod network;
mod primitives;
mod shapes;

pub use intersect::{polygon_intersect_3d, segment_intersect_2d, segment_segment};
pub use network::{
    bounding_box_diagonal, find_intersections, point_cloud_diameter, FractureNetwork, FractureShape, Network2, Network3,
    DEFAULT_RELATIVE_TOL,
};
pub use primitives::{
    point_segment_distance, Fracture3, FractureDefect, Intersection, IntersectionGeometry, IntersectionResult, Point2,
    Point3, Segment2,
};
pub use shapes::{ellipse_to_polygon, extrude_outcrop, fracture_rotation, ExtrusionSpec};
