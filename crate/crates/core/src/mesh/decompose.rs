use crate::geometry::{point_segment_distance, segment_intersect_2d, IntersectionResult, Point2, Segment2};
use crate::mesh::Rect;
use crate::{Error, Result};

/// A piece of a fracture between two consecutive network points.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SubSegment {
    pub a: usize,
    pub b: usize,
    pub fracture: usize,
}

/// Fracture after clipping to the domain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClippedFracture {
    pub id: usize,
    pub start: Point2,
    pub end: Point2,
}

impl ClippedFracture {
    pub fn tangent(&self) -> Point2 {
        (self.end - self.start).normalize()
    }
}

/// Non-crossing segment set obtained by splitting fractures at all their
/// intersections. `point_parents[i]` lists every fracture through point `i`.
#[derive(Clone, Debug, Default)]
pub struct DecomposedNetwork {
    pub points: Vec<Point2>,
    pub point_parents: Vec<Vec<usize>>,
    pub segments: Vec<SubSegment>,
    pub fractures: Vec<ClippedFracture>,
    pub tol: f64,
}

impl DecomposedNetwork {
    /// Indices of points where two or more fractures meet.
    pub fn intersection_points(&self) -> Vec<usize> {
        (0..self.points.len()).filter(|&i| self.point_parents[i].len() >= 2).collect()
    }

    pub fn fracture(&self, id: usize) -> Option<&ClippedFracture> {
        self.fractures.iter().find(|f| f.id == id)
    }
}

/// Liang-Barsky clipping; coordinates within `tol` of a side are snapped onto it.
fn clip(rect: &Rect, s: &Segment2, tol: f64) -> Option<(Point2, Point2)> {
    let (p, d) = (s.start(), s.end() - s.start());
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    for (q, r) in [
        (-d.x, p.x - rect.xmin),
        (d.x, rect.xmax - p.x),
        (-d.y, p.y - rect.ymin),
        (d.y, rect.ymax - p.y),
    ] {
        if q == 0.0 {
            if r < -tol {
                return None;
            }
        } else {
            let t = r / q;
            if q < 0.0 {
                t0 = t0.max(t);
            } else {
                t1 = t1.min(t);
            }
        }
    }
    if t0 > t1 {
        return None;
    }
    let snap1 = |v: f64, lo: f64, hi: f64| {
        if (v - lo).abs() <= tol || v < lo {
            lo
        } else if (v - hi).abs() <= tol || v > hi {
            hi
        } else {
            v
        }
    };
    let snap = |x: Point2| Point2::new(snap1(x.x, rect.xmin, rect.xmax), snap1(x.y, rect.ymin, rect.ymax));
    let a = snap(if t0 > 0.0 { p + d * t0 } else { p });
    let b = snap(if t1 < 1.0 { p + d * t1 } else { s.end() });
    ((b - a).norm() > tol).then_some((a, b))
}

struct PointSet {
    points: Vec<Point2>,
    parents: Vec<Vec<usize>>,
    tol: f64,
}

impl PointSet {
    /// Index of the representative for `p`, adding it if new. A point within
    /// `tol` of two distinct representatives cannot be snapped unambiguously.
    fn add(&mut self, p: Point2, parents: &[usize]) -> Result<usize> {
        let mut found: Option<usize> = None;
        for (i, q) in self.points.iter().enumerate() {
            if (q - p).norm() <= self.tol {
                if let Some(j) = found {
                    let (a, b) = (self.points[j], *q);
                    return Err(Error::GeometryTooFine { a: [a.x, a.y], b: [b.x, b.y], tol: self.tol });
                }
                found = Some(i);
            }
        }
        let i = found.unwrap_or_else(|| {
            self.points.push(p);
            self.parents.push(Vec::new());
            self.points.len() - 1
        });
        for &f in parents {
            if !self.parents[i].contains(&f) {
                self.parents[i].push(f);
            }
        }
        Ok(i)
    }
}

/// Clips fractures to the domain and splits them at every intersection,
/// end point contact and T-junction.
pub fn decompose_network_2d(domain: &Rect, fractures: &[Segment2], tol: f64) -> Result<DecomposedNetwork> {
    let mut clipped: Vec<ClippedFracture> = fractures
        .iter()
        .filter_map(|s| clip(domain, s, tol).map(|(start, end)| ClippedFracture { id: s.id, start, end }))
        .collect();
    clipped.sort_by_key(|f| f.id);
    let mut set = PointSet { points: Vec::new(), parents: Vec::new(), tol };
    for f in &clipped {
        set.add(f.start, &[f.id])?;
        set.add(f.end, &[f.id])?;
    }
    let segs: Vec<Segment2> = clipped
        .iter()
        .map(|f| Segment2::new(f.id, f.start, f.end, 0.0))
        .collect::<Result<_>>()?;
    for i in 0..segs.len() {
        for j in i + 1..segs.len() {
            match segment_intersect_2d(&segs[i], &segs[j], tol) {
                IntersectionResult::Empty => {}
                IntersectionResult::Point(p) => {
                    set.add(p, &[segs[i].id, segs[j].id])?;
                }
                IntersectionResult::Segment(..) => return Err(Error::CoplanarOverlap(segs[i].id, segs[j].id)),
            }
        }
    }
    let mut segments = Vec::new();
    for f in &clipped {
        let t = f.end - f.start;
        let mut on: Vec<(f64, usize)> = Vec::new();
        for (k, p) in set.points.iter().enumerate() {
            if point_segment_distance(p, &f.start, &f.end) <= tol {
                on.push(((p - f.start).dot(&t), k));
            }
        }
        on.sort_by(|a, b| a.0.total_cmp(&b.0));
        on.dedup_by_key(|x| x.1);
        for &(_, k) in &on {
            if !set.parents[k].contains(&f.id) {
                set.parents[k].push(f.id);
            }
        }
        for w in on.windows(2) {
            segments.push(SubSegment { a: w[0].1, b: w[1].1, fracture: f.id });
        }
    }
    for p in &mut set.parents {
        p.sort_unstable();
    }
    Ok(DecomposedNetwork { points: set.points, point_parents: set.parents, segments, fractures: clipped, tol })
}
