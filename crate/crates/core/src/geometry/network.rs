use nalgebra::SVector;

use super::intersect::{polygon_intersect_3d, segment_intersect_2d, segment_segment};
use super::primitives::{diameter, Fracture3, Intersection, IntersectionGeometry, IntersectionResult, Segment2};
use crate::Result;

/// Relative factor applied to the bounding-box diagonal for the default tolerance.
pub const DEFAULT_RELATIVE_TOL: f64 = 1e-8;

/// A fracture primitive that can be intersected with another of its kind.
pub trait FractureShape<const D: usize>: Clone {
    fn id(&self) -> usize;
    fn points(&self) -> Vec<SVector<f64, D>>;
    fn intersect(&self, other: &Self, tol: f64) -> Result<IntersectionResult<D>>;
    fn contains_point(&self, p: &SVector<f64, D>, tol: f64) -> bool;
}

impl FractureShape<2> for Segment2 {
    fn id(&self) -> usize {
        self.id
    }

    fn points(&self) -> Vec<SVector<f64, 2>> {
        vec![self.start(), self.end()]
    }

    fn intersect(&self, other: &Self, tol: f64) -> Result<IntersectionResult<2>> {
        Ok(segment_intersect_2d(self, other, tol))
    }

    fn contains_point(&self, p: &SVector<f64, 2>, tol: f64) -> bool {
        self.distance(p) <= tol
    }
}

impl FractureShape<3> for Fracture3 {
    fn id(&self) -> usize {
        self.id
    }

    fn points(&self) -> Vec<SVector<f64, 3>> {
        self.vertices().to_vec()
    }

    fn intersect(&self, other: &Self, tol: f64) -> Result<IntersectionResult<3>> {
        polygon_intersect_3d(self, other, tol)
    }

    fn contains_point(&self, p: &SVector<f64, 3>, tol: f64) -> bool {
        self.contains(p, tol)
    }
}

/// Fractures plus their computed intersections.
#[derive(Clone, Debug)]
pub struct FractureNetwork<F, const D: usize> {
    pub fractures: Vec<F>,
    pub intersections: Vec<Intersection<D>>,
    pub tol: f64,
}

pub type Network2 = FractureNetwork<Segment2, 2>;
pub type Network3 = FractureNetwork<Fracture3, 3>;

impl<F: FractureShape<D>, const D: usize> FractureNetwork<F, D> {
    /// Network with the default tolerance (relative to the bounding-box diagonal).
    pub fn new(fractures: Vec<F>) -> Self {
        let tol = DEFAULT_RELATIVE_TOL * bounding_box_diagonal(&fractures);
        Self { fractures, intersections: Vec::new(), tol }
    }

    pub fn with_tol(fractures: Vec<F>, tol: f64) -> Self {
        assert!(tol >= 0.0);
        Self { fractures, intersections: Vec::new(), tol }
    }

    pub fn num_segments(&self) -> usize {
        self.intersections.iter().filter(|i| !i.is_point()).count()
    }

    pub fn num_points(&self) -> usize {
        self.intersections.iter().filter(|i| i.is_point()).count()
    }

    pub fn fracture(&self, id: usize) -> Option<&F> {
        self.fractures.iter().find(|f| f.id() == id)
    }
}

pub fn bounding_box_diagonal<F: FractureShape<D>, const D: usize>(fractures: &[F]) -> f64 {
    let mut lo = SVector::<f64, D>::repeat(f64::INFINITY);
    let mut hi = SVector::<f64, D>::repeat(f64::NEG_INFINITY);
    for p in fractures.iter().flat_map(|f| f.points()) {
        lo = lo.inf(&p);
        hi = hi.sup(&p);
    }
    if fractures.is_empty() {
        return 0.0;
    }
    (hi - lo).norm()
}

fn merge_parents(into: &mut Vec<usize>, from: &[usize]) {
    into.extend_from_slice(from);
    into.sort_unstable();
    into.dedup();
}

fn add_point<const D: usize>(points: &mut Vec<Intersection<D>>, p: SVector<f64, D>, parents: &[usize], tol: f64) {
    for rec in points.iter_mut() {
        if let IntersectionGeometry::Point(q) = rec.geometry {
            if (q - p).norm() <= tol {
                merge_parents(&mut rec.parents, parents);
                return;
            }
        }
    }
    let mut par = parents.to_vec();
    par.sort_unstable();
    par.dedup();
    points.push(Intersection { parents: par, geometry: IntersectionGeometry::Point(p) });
}

/// Computes all pairwise intersections, then the points where intersection
/// segments meet each other (crossings, contacts and ends of collinear overlaps).
///
/// Segment records come first in fracture-pair order, followed by point
/// records in order of first encounter. Points closer than `tol` are merged
/// into the first-encountered representative.
pub fn find_intersections<F: FractureShape<D>, const D: usize>(
    network: &FractureNetwork<F, D>,
) -> Result<FractureNetwork<F, D>> {
    let tol = network.tol;
    let mut order: Vec<usize> = (0..network.fractures.len()).collect();
    order.sort_by_key(|&i| network.fractures[i].id());
    let mut segments: Vec<Intersection<D>> = Vec::new();
    let mut points: Vec<Intersection<D>> = Vec::new();
    for (k, &i) in order.iter().enumerate() {
        for &j in &order[k + 1..] {
            let (a, b) = (&network.fractures[i], &network.fractures[j]);
            let parents = [a.id(), b.id()];
            match a.intersect(b, tol)? {
                IntersectionResult::Empty => {}
                IntersectionResult::Point(p) => add_point(&mut points, p, &parents, tol),
                IntersectionResult::Segment(p, q) => segments.push(Intersection {
                    parents: parents.to_vec(),
                    geometry: IntersectionGeometry::Segment(p, q),
                }),
            }
        }
    }
    for i in 0..segments.len() {
        for j in i + 1..segments.len() {
            let (IntersectionGeometry::Segment(a0, a1), IntersectionGeometry::Segment(b0, b1)) =
                (&segments[i].geometry, &segments[j].geometry)
            else {
                unreachable!()
            };
            let mut parents = segments[i].parents.clone();
            merge_parents(&mut parents, &segments[j].parents);
            match segment_segment(a0, a1, b0, b1, tol) {
                IntersectionResult::Empty => {}
                IntersectionResult::Point(p) => add_point(&mut points, p, &parents, tol),
                IntersectionResult::Segment(p, q) => {
                    // ends of a collinear overlap split the lines unless both lines end there
                    for x in [p, q] {
                        let ends_a = (x - a0).norm() <= tol || (x - a1).norm() <= tol;
                        let ends_b = (x - b0).norm() <= tol || (x - b1).norm() <= tol;
                        if !(ends_a && ends_b) {
                            add_point(&mut points, x, &parents, tol);
                        }
                    }
                }
            }
        }
    }
    let mut out = network.clone();
    out.intersections = segments;
    out.intersections.extend(points);
    Ok(out)
}

/// Convenience: bounding box diagonal of a point set.
pub fn point_cloud_diameter<const D: usize>(pts: &[SVector<f64, D>]) -> f64 {
    diameter(pts)
}
