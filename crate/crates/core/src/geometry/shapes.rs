//! Construction of fracture polygons from ellipses and outcrop traces.

use nalgebra::{Rotation3, Unit};

use super::primitives::{Fracture3, Point3, Segment2};
use crate::Result;

/// Orientation and size of an extruded outcrop trace.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExtrusionSpec {
    /// Vertical extent of the extruded fracture (m).
    pub height: f64,
    /// Angle between the fracture plane and the horizontal, in (0, π/2].
    pub dip_angle: f64,
    /// Azimuth (from the x axis) whose right-hand dip direction selects the
    /// side towards which the fracture dips.
    pub strike_angle: f64,
}

impl ExtrusionSpec {
    pub fn vertical(height: f64) -> Self {
        Self { height, dip_angle: std::f64::consts::FRAC_PI_2, strike_angle: 0.0 }
    }

    pub fn is_valid(&self) -> bool {
        self.height > 0.0 && self.dip_angle > 0.0 && self.dip_angle <= std::f64::consts::FRAC_PI_2
    }
}

/// Rotation taking the z = 0 plane to the oriented fracture plane: first an
/// in-plane rotation about z, then a rotation by the dip about the strike line.
pub fn fracture_rotation(in_plane_angle: f64, strike_angle: f64, dip_angle: f64) -> Rotation3<f64> {
    let spin = Rotation3::from_axis_angle(&Point3::z_axis(), in_plane_angle);
    let strike = Unit::new_normalize(Point3::new(strike_angle.cos(), strike_angle.sin(), 0.0));
    let dip = Rotation3::from_axis_angle(&strike, dip_angle);
    dip * spin
}

/// Polygon with `n` vertices inscribed in an ellipse, vertices at uniformly
/// spaced parametric angles starting at zero.
#[allow(clippy::too_many_arguments)]
pub fn ellipse_to_polygon(
    id: usize,
    center: Point3,
    major_axis: f64,
    minor_axis: f64,
    major_axis_angle: f64,
    strike_angle: f64,
    dip_angle: f64,
    n: usize,
) -> Result<Fracture3> {
    assert!(n >= 3, "an elliptic fracture needs at least three vertices");
    assert!(major_axis > 0.0 && minor_axis > 0.0);
    let rot = fracture_rotation(major_axis_angle, strike_angle, dip_angle);
    let vertices = (0..n)
        .map(|k| {
            let theta = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
            center + rot * Point3::new(major_axis * theta.cos(), minor_axis * theta.sin(), 0.0)
        })
        .collect();
    Fracture3::new(id, vertices)
}

/// Extrudes horizontal traces (at z = 0) upwards into planar quadrilaterals.
///
/// The trace is the strike line of the extruded plane. The plane dips by
/// `dip_angle` towards the horizontal trace normal that points to the same side
/// as the right-hand dip direction of `strike_angle`; the top edge sits at
/// `z = height`.
pub fn extrude_outcrop(traces: &[Segment2], specs: &[ExtrusionSpec]) -> Result<Vec<Fracture3>> {
    assert_eq!(traces.len(), specs.len(), "one extrusion spec per trace");
    traces
        .iter()
        .zip(specs)
        .map(|(t, spec)| {
            assert!(spec.is_valid(), "invalid extrusion spec {spec:?}");
            let p0 = Point3::new(t.start().x, t.start().y, 0.0);
            let p1 = Point3::new(t.end().x, t.end().y, 0.0);
            let along = t.direction();
            let mut side = Point3::new(-along.y, along.x, 0.0);
            let dip_dir = Point3::new(spec.strike_angle.sin(), -spec.strike_angle.cos(), 0.0);
            if side.dot(&dip_dir) < 0.0 {
                side = -side;
            }
            let offset = (Point3::z() + side / spec.dip_angle.tan()) * spec.height;
            let offset = if spec.dip_angle == std::f64::consts::FRAC_PI_2 { Point3::z() * spec.height } else { offset };
            Fracture3::new(t.id, vec![p0, p1, p1 + offset, p0 + offset])
        })
        .collect()
}
