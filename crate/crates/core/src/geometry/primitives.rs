use nalgebra::{SVector, Vector2, Vector3};

use crate::{Error, Result};

pub type Point2 = Vector2<f64>;
pub type Point3 = Vector3<f64>;

/// Why a polygon was rejected as a fracture.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FractureDefect {
    TooFewVertices,
    Degenerate,
    NonPlanar,
    NonConvex,
}

impl std::fmt::Display for FractureDefect {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FractureDefect::TooFewVertices => "fewer than three vertices",
            FractureDefect::Degenerate => "zero length or area",
            FractureDefect::NonPlanar => "vertices not coplanar",
            FractureDefect::NonConvex => "polygon not convex",
        })
    }
}

/// Result of intersecting two fractures (or two intersection lines).
#[derive(Clone, Debug, PartialEq)]
pub enum IntersectionResult<const D: usize> {
    Empty,
    Point(SVector<f64, D>),
    Segment(SVector<f64, D>, SVector<f64, D>),
}

impl<const D: usize> IntersectionResult<D> {
    pub fn is_empty(&self) -> bool {
        matches!(self, IntersectionResult::Empty)
    }

    /// Endpoints of a segment result in canonical (lexicographic) order.
    pub fn canonical(&self) -> Self {
        match self {
            IntersectionResult::Segment(a, b) if lex_less(b, a) => IntersectionResult::Segment(*b, *a),
            other => other.clone(),
        }
    }
}

fn lex_less<const D: usize>(a: &SVector<f64, D>, b: &SVector<f64, D>) -> bool {
    for i in 0..D {
        if a[i] != b[i] {
            return a[i] < b[i];
        }
    }
    false
}

/// Geometry of a recorded intersection.
#[derive(Clone, Debug, PartialEq)]
pub enum IntersectionGeometry<const D: usize> {
    Point(SVector<f64, D>),
    Segment(SVector<f64, D>, SVector<f64, D>),
}

/// A lower-dimensional object shared by two or more fractures.
#[derive(Clone, Debug, PartialEq)]
pub struct Intersection<const D: usize> {
    /// Sorted, unique fracture ids.
    pub parents: Vec<usize>,
    pub geometry: IntersectionGeometry<D>,
}

impl<const D: usize> Intersection<D> {
    pub fn is_point(&self) -> bool {
        matches!(self.geometry, IntersectionGeometry::Point(_))
    }
}

/// A fracture trace in the plane.
#[derive(Clone, Debug, PartialEq)]
pub struct Segment2 {
    pub id: usize,
    start: Point2,
    end: Point2,
}

impl Segment2 {
    /// Rejects segments whose endpoints coincide within `tol`.
    pub fn new(id: usize, start: Point2, end: Point2, tol: f64) -> Result<Self> {
        if !(start.iter().chain(end.iter()).all(|v| v.is_finite())) || (end - start).norm() <= tol {
            return Err(Error::DegenerateFracture { id, defect: FractureDefect::Degenerate });
        }
        Ok(Self { id, start, end })
    }

    pub fn from_coords(id: usize, x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self> {
        Self::new(id, Point2::new(x0, y0), Point2::new(x1, y1), 0.0)
    }

    pub fn start(&self) -> Point2 {
        self.start
    }

    pub fn end(&self) -> Point2 {
        self.end
    }

    pub fn length(&self) -> f64 {
        (self.end - self.start).norm()
    }

    pub fn direction(&self) -> Point2 {
        (self.end - self.start) / self.length()
    }

    /// Euclidean distance from `p` to the segment.
    pub fn distance(&self, p: &Point2) -> f64 {
        point_segment_distance(p, &self.start, &self.end)
    }
}

pub fn point_segment_distance<const D: usize>(p: &SVector<f64, D>, a: &SVector<f64, D>, b: &SVector<f64, D>) -> f64 {
    let d = b - a;
    let l2 = d.norm_squared();
    if l2 == 0.0 {
        return (p - a).norm();
    }
    let t = ((p - a).dot(&d) / l2).clamp(0.0, 1.0);
    (p - (a + d * t)).norm()
}

/// A planar convex polygon in 3D.
#[derive(Clone, Debug, PartialEq)]
pub struct Fracture3 {
    pub id: usize,
    vertices: Vec<Point3>,
    normal: Point3,
    center: Point3,
}

impl Fracture3 {
    /// Validates with a tolerance relative to the polygon diameter.
    pub fn new(id: usize, vertices: Vec<Point3>) -> Result<Self> {
        let diam = diameter(&vertices);
        Self::with_tol(id, vertices, 1e-8 * diam.max(f64::MIN_POSITIVE))
    }

    pub fn with_tol(id: usize, vertices: Vec<Point3>, tol: f64) -> Result<Self> {
        let fail = |defect| Err(Error::DegenerateFracture { id, defect });
        if vertices.len() < 3 {
            return fail(FractureDefect::TooFewVertices);
        }
        if vertices.iter().any(|v| !v.iter().all(|c| c.is_finite())) {
            return fail(FractureDefect::Degenerate);
        }
        let center = vertices.iter().sum::<Point3>() / vertices.len() as f64;
        let newell = newell_normal(&vertices);
        let area = 0.5 * newell.norm();
        if area <= tol * tol || area == 0.0 {
            return fail(FractureDefect::Degenerate);
        }
        let normal = newell / newell.norm();
        if vertices.iter().any(|v| normal.dot(&(v - center)).abs() > tol) {
            return fail(FractureDefect::NonPlanar);
        }
        let n = vertices.len();
        for i in 0..n {
            let a = vertices[i];
            let b = vertices[(i + 1) % n];
            let c = vertices[(i + 2) % n];
            let turn = (b - a).cross(&(c - b)).dot(&normal);
            // collinear consecutive vertices are tolerated
            if turn < -tol * ((b - a).norm() + (c - b).norm()) {
                return fail(FractureDefect::NonConvex);
            }
        }
        let frac = Self { id, vertices, normal, center };
        // winding-number check rejects self-overlapping star shapes with all-left turns
        let total: f64 = (0..n)
            .map(|i| {
                let u = frac.project(&frac.vertices[i]);
                let v = frac.project(&frac.vertices[(i + 1) % n]);
                (u.x * v.y - u.y * v.x).atan2(u.dot(&v))
            })
            .sum();
        if (total.abs() - 2.0 * std::f64::consts::PI).abs() > 1e-6 {
            return fail(FractureDefect::NonConvex);
        }
        Ok(frac)
    }

    pub fn vertices(&self) -> &[Point3] {
        &self.vertices
    }

    /// Unit normal (right-hand rule on the vertex order).
    pub fn normal(&self) -> Point3 {
        self.normal
    }

    pub fn center(&self) -> Point3 {
        self.center
    }

    pub fn area(&self) -> f64 {
        0.5 * newell_normal(&self.vertices).norm()
    }

    pub fn signed_distance(&self, p: &Point3) -> f64 {
        self.normal.dot(&(p - self.center))
    }

    /// Orthonormal in-plane basis.
    pub fn plane_basis(&self) -> (Point3, Point3) {
        let e1 = (self.vertices[0] - self.center).normalize();
        let e1 = if e1.iter().all(|v| v.is_finite()) { e1 } else { any_orthogonal(&self.normal) };
        let e2 = self.normal.cross(&e1);
        (e1, e2)
    }

    /// Coordinates of `p` in the plane basis, relative to the center.
    pub fn project(&self, p: &Point3) -> Point2 {
        let (e1, e2) = self.plane_basis();
        let d = p - self.center;
        Point2::new(d.dot(&e1), d.dot(&e2))
    }

    /// Point-in-polygon test with the polygon inflated by `tol` and the plane thickened by `tol`.
    pub fn contains(&self, p: &Point3, tol: f64) -> bool {
        if self.signed_distance(p).abs() > tol {
            return false;
        }
        let n = self.vertices.len();
        (0..n).all(|i| {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            let edge = b - a;
            let inward = self.normal.cross(&edge).normalize();
            inward.dot(&(p - a)) >= -tol
        })
    }
}

pub(crate) fn newell_normal(v: &[Point3]) -> Point3 {
    let n = v.len();
    let mut acc = Point3::zeros();
    for i in 0..n {
        acc += v[i].cross(&v[(i + 1) % n]);
    }
    acc
}

pub(crate) fn any_orthogonal(n: &Point3) -> Point3 {
    let t = if n.x.abs() < 0.9 { Point3::x() } else { Point3::y() };
    n.cross(&t).normalize()
}

pub(crate) fn diameter<const D: usize>(pts: &[SVector<f64, D>]) -> f64 {
    let mut d: f64 = 0.0;
    for (i, a) in pts.iter().enumerate() {
        for b in &pts[i + 1..] {
            d = d.max((a - b).norm());
        }
    }
    d
}
