//! Pairwise intersection of fracture primitives with a geometric tolerance.

use nalgebra::SVector;

use super::primitives::{point_segment_distance, Fracture3, IntersectionResult, Point2, Point3, Segment2};
use crate::{Error, Result};

fn cross2(a: &Point2, b: &Point2) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Intersects two line segments given by endpoints, in any dimension.
///
/// Endpoint contact within `tol` yields a point (the first endpoint in argument
/// order that is within `tol` of the other segment); collinear overlap longer
/// than `tol` yields the shared segment, whose endpoints are input endpoints.
pub fn segment_segment<const D: usize>(
    a0: &SVector<f64, D>,
    a1: &SVector<f64, D>,
    b0: &SVector<f64, D>,
    b1: &SVector<f64, D>,
    tol: f64,
) -> IntersectionResult<D> {
    let line_dist = |p: &SVector<f64, D>, o: &SVector<f64, D>, e: &SVector<f64, D>| {
        let d = e - o;
        let l2 = d.norm_squared();
        let w = p - o;
        (w - d * (w.dot(&d) / l2)).norm()
    };
    let collinear = (line_dist(b0, a0, a1) <= tol && line_dist(b1, a0, a1) <= tol)
        || (line_dist(a0, b0, b1) <= tol && line_dist(a1, b0, b1) <= tol);
    if collinear {
        return collinear_overlap(a0, a1, b0, b1, tol);
    }

    // closest points between the two segments (clamped parameters)
    let d1 = a1 - a0;
    let d2 = b1 - b0;
    let r = a0 - b0;
    let (aa, ee, ff) = (d1.norm_squared(), d2.norm_squared(), d2.dot(&r));
    let c = d1.dot(&r);
    let bb = d1.dot(&d2);
    let denom = aa * ee - bb * bb;
    let mut s = if denom > 0.0 { ((bb * ff - c * ee) / denom).clamp(0.0, 1.0) } else { 0.0 };
    let mut t = (bb * s + ff) / ee;
    if t < 0.0 {
        t = 0.0;
        s = (-c / aa).clamp(0.0, 1.0);
    } else if t > 1.0 {
        t = 1.0;
        s = ((bb - c) / aa).clamp(0.0, 1.0);
    }
    let pa = a0 + d1 * s;
    let pb = b0 + d2 * t;
    let gap = (pa - pb).norm();
    // endpoint contact within tolerance, preferring the first segment's endpoints
    for (p, (o, e)) in [(a0, (b0, b1)), (a1, (b0, b1)), (b0, (a0, a1)), (b1, (a0, a1))] {
        if point_segment_distance(p, o, e) <= tol {
            return IntersectionResult::Point(*p);
        }
    }
    if gap <= tol {
        IntersectionResult::Point(pa)
    } else {
        IntersectionResult::Empty
    }
}

fn collinear_overlap<const D: usize>(
    a0: &SVector<f64, D>,
    a1: &SVector<f64, D>,
    b0: &SVector<f64, D>,
    b1: &SVector<f64, D>,
    tol: f64,
) -> IntersectionResult<D> {
    let (o, dir) = if (a1 - a0).norm() >= (b1 - b0).norm() { (a0, (a1 - a0).normalize()) } else { (b0, (b1 - b0).normalize()) };
    let param = |p: &SVector<f64, D>| (p - o).dot(&dir);
    let mut ea = [(param(a0), *a0), (param(a1), *a1)];
    let mut eb = [(param(b0), *b0), (param(b1), *b1)];
    ea.sort_by(|x, y| x.0.total_cmp(&y.0));
    eb.sort_by(|x, y| x.0.total_cmp(&y.0));
    // lower end: the larger of the two minima (first segment wins ties)
    let lo = if eb[0].0 > ea[0].0 { eb[0] } else { ea[0] };
    let hi = if eb[1].0 < ea[1].0 { eb[1] } else { ea[1] };
    if hi.0 < lo.0 - tol {
        IntersectionResult::Empty
    } else if hi.0 - lo.0 <= tol {
        IntersectionResult::Point(lo.1)
    } else {
        IntersectionResult::Segment(lo.1, hi.1)
    }
}

/// Intersection of two planar segments.
pub fn segment_intersect_2d(a: &Segment2, b: &Segment2, tol: f64) -> IntersectionResult<2> {
    let (p, q, r, s) = (a.start(), a.end(), b.start(), b.end());
    let d1 = q - p;
    let d2 = s - r;
    let denom = cross2(&d1, &d2);
    let line_a = |x: &Point2| cross2(&d1, &(x - p)).abs() / d1.norm();
    let line_b = |x: &Point2| cross2(&d2, &(x - r)).abs() / d2.norm();
    if (line_a(&r) <= tol && line_a(&s) <= tol) || (line_b(&p) <= tol && line_b(&q) <= tol) {
        return collinear_overlap(&p, &q, &r, &s, tol);
    }
    // endpoint contacts first so that touching configurations snap to input points
    for (x, seg) in [(&p, (&r, &s)), (&q, (&r, &s)), (&r, (&p, &q)), (&s, (&p, &q))] {
        if point_segment_distance(x, seg.0, seg.1) <= tol {
            return IntersectionResult::Point(*x);
        }
    }
    if denom != 0.0 {
        let w = r - p;
        let t = cross2(&w, &d2) / denom;
        let u = cross2(&w, &d1) / denom;
        if (0.0..=1.0).contains(&t) && (0.0..=1.0).contains(&u) {
            return IntersectionResult::Point(p + d1 * t);
        }
    }
    IntersectionResult::Empty
}

struct Section {
    lo: (f64, Point3),
    hi: (f64, Point3),
}

enum PlaneCut {
    Miss,
    Coplanar,
    Cut(Vec<Point3>),
}

/// Points where polygon `poly` meets the plane of `other`.
fn cut_by_plane(poly: &Fracture3, other: &Fracture3, tol: f64) -> PlaneCut {
    let v = poly.vertices();
    let d: Vec<f64> = v.iter().map(|x| other.signed_distance(x)).collect();
    if d.iter().all(|&x| x > tol) || d.iter().all(|&x| x < -tol) {
        return PlaneCut::Miss;
    }
    if d.iter().all(|&x| x.abs() <= tol) {
        return PlaneCut::Coplanar;
    }
    let n = v.len();
    let mut pts = Vec::new();
    for i in 0..n {
        let j = (i + 1) % n;
        if d[i].abs() <= tol {
            pts.push(v[i]);
        }
        if (d[i] > tol && d[j] < -tol) || (d[i] < -tol && d[j] > tol) {
            pts.push(v[i] + (v[j] - v[i]) * (d[i] / (d[i] - d[j])));
        }
    }
    PlaneCut::Cut(pts)
}

fn section(pts: &[Point3], dir: &Point3) -> Section {
    let mut lo = (f64::INFINITY, Point3::zeros());
    let mut hi = (f64::NEG_INFINITY, Point3::zeros());
    for p in pts {
        let t = dir.dot(p);
        if t < lo.0 {
            lo = (t, *p);
        }
        if t > hi.0 {
            hi = (t, *p);
        }
    }
    Section { lo, hi }
}

/// Intersection of two convex planar polygons in 3D.
///
/// T- and L-type contacts (an edge lying in the other polygon) return the
/// shared segment. Coplanar polygons sharing a 2D region are rejected.
pub fn polygon_intersect_3d(a: &Fracture3, b: &Fracture3, tol: f64) -> Result<IntersectionResult<3>> {
    let (ca, cb) = (cut_by_plane(a, b, tol), cut_by_plane(b, a, tol));
    let (pa, pb) = match (ca, cb) {
        (PlaneCut::Miss, _) | (_, PlaneCut::Miss) => return Ok(IntersectionResult::Empty),
        (PlaneCut::Coplanar, _) | (_, PlaneCut::Coplanar) => return coplanar_intersection(a, b, tol),
        (PlaneCut::Cut(pa), PlaneCut::Cut(pb)) => (pa, pb),
    };
    let mut dir = a.normal().cross(&b.normal());
    if dir.norm() < 1e-14 {
        return coplanar_intersection(a, b, tol);
    }
    dir /= dir.norm();
    let (sa, sb) = (section(&pa, &dir), section(&pb, &dir));
    let lo = if sb.lo.0 > sa.lo.0 { sb.lo } else { sa.lo };
    let hi = if sb.hi.0 < sa.hi.0 { sb.hi } else { sa.hi };
    if hi.0 < lo.0 - tol {
        return Ok(IntersectionResult::Empty);
    }
    if (hi.1 - lo.1).norm() <= tol || hi.0 <= lo.0 {
        return Ok(IntersectionResult::Point(lo.1));
    }
    Ok(IntersectionResult::Segment(lo.1, hi.1))
}

fn coplanar_intersection(a: &Fracture3, b: &Fracture3, tol: f64) -> Result<IntersectionResult<3>> {
    let mut cand: Vec<Point3> = Vec::new();
    cand.extend(a.vertices().iter().filter(|p| b.contains(p, tol)));
    cand.extend(b.vertices().iter().filter(|p| a.contains(p, tol)));
    let (va, vb) = (a.vertices(), b.vertices());
    for i in 0..va.len() {
        for j in 0..vb.len() {
            let (p, q) = (va[i], va[(i + 1) % va.len()]);
            let (r, s) = (vb[j], vb[(j + 1) % vb.len()]);
            match segment_segment(&p, &q, &r, &s, tol) {
                IntersectionResult::Point(x) => cand.push(x),
                IntersectionResult::Segment(x, y) => {
                    cand.push(x);
                    cand.push(y);
                }
                IntersectionResult::Empty => {}
            }
        }
    }
    if cand.is_empty() {
        return Ok(IntersectionResult::Empty);
    }
    // farthest pair, then the maximal offset from their line
    let mut best = (0, 0, 0.0);
    for i in 0..cand.len() {
        for j in i + 1..cand.len() {
            let d = (cand[i] - cand[j]).norm();
            if d > best.2 {
                best = (i, j, d);
            }
        }
    }
    if best.2 <= tol {
        return Ok(IntersectionResult::Point(cand[0]));
    }
    let (p, q) = (cand[best.0], cand[best.1]);
    let dir = (q - p) / best.2;
    let spread = cand.iter().map(|x| dir.cross(&(x - p)).norm()).fold(0.0, f64::max);
    if spread > tol {
        return Err(Error::CoplanarOverlap(a.id, b.id));
    }
    Ok(IntersectionResult::Segment(p, q))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seg(x0: f64, y0: f64, x1: f64, y1: f64) -> Segment2 {
        Segment2::from_coords(0, x0, y0, x1, y1).unwrap()
    }

    fn frac(id: usize, v: &[[f64; 3]]) -> Fracture3 {
        Fracture3::new(id, v.iter().map(|p| Point3::new(p[0], p[1], p[2])).collect()).unwrap()
    }

    #[test]
    fn crossing_segments() {
        let r = segment_intersect_2d(&seg(0.0, 0.0, 1.0, 1.0), &seg(0.0, 1.0, 1.0, 0.0), 1e-12);
        assert_eq!(r, IntersectionResult::Point(Point2::new(0.5, 0.5)));
    }

    #[test]
    fn parallel_segments() {
        let r = segment_intersect_2d(&seg(0.0, 0.0, 1.0, 0.0), &seg(0.0, 1.0, 1.0, 1.0), 1e-12);
        assert_eq!(r, IntersectionResult::Empty);
    }

    #[test]
    fn collinear_overlap_returns_shared_piece() {
        let r = segment_intersect_2d(&seg(0.0, 0.0, 2.0, 0.0), &seg(1.0, 0.0, 3.0, 0.0), 1e-12);
        assert_eq!(r, IntersectionResult::Segment(Point2::new(1.0, 0.0), Point2::new(2.0, 0.0)));
    }

    #[test]
    fn touching_endpoint_within_tol() {
        let r = segment_intersect_2d(&seg(0.0, 0.0, 1.0, 0.0), &seg(0.5, 1e-10, 0.5, 1.0), 1e-9);
        assert_eq!(r, IntersectionResult::Point(Point2::new(0.5, 1e-10)));
        let r = segment_intersect_2d(&seg(0.0, 0.0, 1.0, 0.0), &seg(0.5, 1e-8, 0.5, 1.0), 1e-9);
        assert_eq!(r, IntersectionResult::Empty);
    }

    #[test]
    fn orthogonal_squares() {
        let a = frac(0, &[[-1., -1., 0.], [1., -1., 0.], [1., 1., 0.], [-1., 1., 0.]]);
        let b = frac(1, &[[0., -1., -1.], [0., 1., -1.], [0., 1., 1.], [0., -1., 1.]]);
        let r = polygon_intersect_3d(&a, &b, 1e-10).unwrap().canonical();
        assert_eq!(r, IntersectionResult::Segment(Point3::new(0., -1., 0.), Point3::new(0., 1., 0.)));
    }

    #[test]
    fn t_intersection() {
        let a = frac(0, &[[-1., -1., 0.], [1., -1., 0.], [1., 1., 0.], [-1., 1., 0.]]);
        let b = frac(1, &[[0., -1., 0.], [0., 1., 0.], [0., 1., 1.], [0., -1., 1.]]);
        for r in [polygon_intersect_3d(&a, &b, 1e-10).unwrap(), polygon_intersect_3d(&b, &a, 1e-10).unwrap()] {
            assert_eq!(r.canonical(), IntersectionResult::Segment(Point3::new(0., -1., 0.), Point3::new(0., 1., 0.)));
        }
    }

    #[test]
    fn parallel_planes() {
        let a = frac(0, &[[-1., -1., 0.], [1., -1., 0.], [1., 1., 0.], [-1., 1., 0.]]);
        let b = frac(1, &[[-1., -1., 1.], [1., -1., 1.], [1., 1., 1.], [-1., 1., 1.]]);
        assert_eq!(polygon_intersect_3d(&a, &b, 1e-10).unwrap(), IntersectionResult::Empty);
    }

    #[test]
    fn coplanar_cases() {
        let a = frac(0, &[[0., 0., 0.], [1., 0., 0.], [1., 1., 0.], [0., 1., 0.]]);
        let overlap = frac(1, &[[0.5, 0.5, 0.], [2., 0.5, 0.], [2., 2., 0.], [0.5, 2., 0.]]);
        assert!(matches!(polygon_intersect_3d(&a, &overlap, 1e-10), Err(Error::CoplanarOverlap(0, 1))));
        let edge = frac(2, &[[1., 0., 0.], [2., 0., 0.], [2., 1., 0.], [1., 1., 0.]]);
        assert_eq!(
            polygon_intersect_3d(&a, &edge, 1e-10).unwrap().canonical(),
            IntersectionResult::Segment(Point3::new(1., 0., 0.), Point3::new(1., 1., 0.))
        );
        let corner = frac(3, &[[1., 1., 0.], [2., 1., 0.], [2., 2., 0.], [1., 2., 0.]]);
        assert_eq!(polygon_intersect_3d(&a, &corner, 1e-10).unwrap(), IntersectionResult::Point(Point3::new(1., 1., 0.)));
    }
}
