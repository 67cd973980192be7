//! Shared helpers for the integration tests: exact rational intersection
//! oracles, random inputs, grid invariant checks and small problem setups.

#![allow(dead_code)]

use std::path::PathBuf;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use dfm::geometry::{find_intersections, Fracture3, IntersectionResult, Network2, Point2, Point3, Segment2};
use dfm::mesh::{build_mixed_grid, FaceTag, MeshSizeSpec, MixedDimGrid, Rect};

pub type Q = BigRational;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn scenario(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn q(x: f64) -> Q {
    BigRational::from_float(x).expect("finite coordinate")
}

fn to_f64(x: &Q) -> f64 {
    // numerator and denominator may exceed f64 range separately, so divide in steps
    let (n, d) = (x.numer(), x.denom());
    let shift = n.bits().max(d.bits()).saturating_sub(1000);
    let n: f64 = (n >> shift).to_string().parse().unwrap();
    let d: f64 = (d >> shift).to_string().parse().unwrap();
    n / d
}

type V = Vec<Q>;

fn vq<const D: usize>(p: &nalgebra::SVector<f64, D>) -> V {
    p.iter().map(|&x| q(x)).collect()
}

fn sub(a: &V, b: &V) -> V {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn add_scaled(a: &V, d: &V, s: &Q) -> V {
    a.iter().zip(d).map(|(x, y)| x + y * s).collect()
}

fn dot(a: &V, b: &V) -> Q {
    a.iter().zip(b).fold(Q::zero(), |acc, (x, y)| acc + x * y)
}

fn cross3(a: &V, b: &V) -> V {
    vec![
        &a[1] * &b[2] - &a[2] * &b[1],
        &a[2] * &b[0] - &a[0] * &b[2],
        &a[0] * &b[1] - &a[1] * &b[0],
    ]
}

fn orient(a: &V, b: &V, c: &V) -> Q {
    let (u, v) = (sub(b, a), sub(c, a));
    &u[0] * &v[1] - &u[1] * &v[0]
}

/// Intersection computed in exact rational arithmetic with zero tolerance.
#[derive(Clone, Debug, PartialEq)]
pub enum Exact {
    Empty,
    Point(V),
    Segment(V, V),
}

impl Exact {
    pub fn kind(&self) -> &'static str {
        match self {
            Exact::Empty => "empty",
            Exact::Point(_) => "point",
            Exact::Segment(..) => "segment",
        }
    }
}

pub fn kind_of<const D: usize>(r: &IntersectionResult<D>) -> &'static str {
    match r {
        IntersectionResult::Empty => "empty",
        IntersectionResult::Point(_) => "point",
        IntersectionResult::Segment(..) => "segment",
    }
}

/// Points with their parameters along a line, reduced to the common interval.
fn overlap(a: &[(Q, V)], b: &[(Q, V)]) -> Exact {
    let lo_a = a.iter().min_by(|x, y| x.0.cmp(&y.0)).unwrap();
    let hi_a = a.iter().max_by(|x, y| x.0.cmp(&y.0)).unwrap();
    let lo_b = b.iter().min_by(|x, y| x.0.cmp(&y.0)).unwrap();
    let hi_b = b.iter().max_by(|x, y| x.0.cmp(&y.0)).unwrap();
    let lo = if lo_a.0 >= lo_b.0 { lo_a } else { lo_b };
    let hi = if hi_a.0 <= hi_b.0 { hi_a } else { hi_b };
    match lo.0.cmp(&hi.0) {
        std::cmp::Ordering::Greater => Exact::Empty,
        std::cmp::Ordering::Equal => Exact::Point(lo.1.clone()),
        std::cmp::Ordering::Less => Exact::Segment(lo.1.clone(), hi.1.clone()),
    }
}

pub fn segment_pair_exact(a: &Segment2, b: &Segment2) -> Exact {
    let (a0, a1, b0, b1) = (vq(&a.start()), vq(&a.end()), vq(&b.start()), vq(&b.end()));
    let d1 = orient(&a0, &a1, &b0);
    let d2 = orient(&a0, &a1, &b1);
    if d1.is_zero() && d2.is_zero() {
        let dir = sub(&a1, &a0);
        let t = |p: &V| dot(&sub(p, &a0), &dir);
        return overlap(&[(t(&a0), a0.clone()), (t(&a1), a1.clone())], &[(t(&b0), b0.clone()), (t(&b1), b1.clone())]);
    }
    let d3 = orient(&b0, &b1, &a0);
    let d4 = orient(&b0, &b1, &a1);
    let pos = |x: &Q, y: &Q| (x.is_positive() && y.is_positive()) || (x.is_negative() && y.is_negative());
    if pos(&d1, &d2) || pos(&d3, &d4) {
        return Exact::Empty;
    }
    let s = &d3 / (&d3 - &d4);
    Exact::Point(add_scaled(&a0, &sub(&a1, &a0), &s))
}

/// Points where the polygon meets the plane `n · (x - o) = 0`; `None` when coplanar.
fn plane_cut(poly: &[V], n: &V, o: &V) -> Option<Vec<V>> {
    let s: Vec<Q> = poly.iter().map(|v| dot(n, &sub(v, o))).collect();
    if s.iter().all(Zero::is_zero) {
        return None;
    }
    let mut out = Vec::new();
    for i in 0..poly.len() {
        let j = (i + 1) % poly.len();
        if s[i].is_zero() {
            out.push(poly[i].clone());
        }
        if (s[i].is_positive() && s[j].is_negative()) || (s[i].is_negative() && s[j].is_positive()) {
            let t = &s[i] / (&s[i] - &s[j]);
            out.push(add_scaled(&poly[i], &sub(&poly[j], &poly[i]), &t));
        }
    }
    Some(out)
}

/// Exact intersection of two convex planar polygons; `None` for coplanar pairs.
pub fn polygon_pair_exact(a: &Fracture3, b: &Fracture3) -> Option<Exact> {
    let pa: Vec<V> = a.vertices().iter().map(vq).collect();
    let pb: Vec<V> = b.vertices().iter().map(vq).collect();
    let normal = |p: &[V]| cross3(&sub(&p[1], &p[0]), &sub(&p[2], &p[0]));
    let (na, nb) = (normal(&pa), normal(&pb));
    let ca = plane_cut(&pa, &nb, &pb[0])?;
    let cb = plane_cut(&pb, &na, &pa[0])?;
    if ca.is_empty() || cb.is_empty() {
        return Some(Exact::Empty);
    }
    let dir = cross3(&na, &nb);
    let tag = |pts: Vec<V>| pts.into_iter().map(|p| (dot(&p, &dir), p)).collect::<Vec<_>>();
    Some(overlap(&tag(ca), &tag(cb)))
}

fn close(x: &V, y: &[f64], tol: f64) -> bool {
    x.iter().zip(y).all(|(a, b)| (to_f64(a) - b).abs() <= tol)
}

/// Same kind and geometry within `tol` (segment endpoints in either order).
pub fn agrees<const D: usize>(exact: &Exact, got: &IntersectionResult<D>, tol: f64) -> bool {
    match (exact, got) {
        (Exact::Empty, IntersectionResult::Empty) => true,
        (Exact::Point(p), IntersectionResult::Point(x)) => close(p, x.as_slice(), tol),
        (Exact::Segment(p, r), IntersectionResult::Segment(x, y)) => {
            (close(p, x.as_slice(), tol) && close(r, y.as_slice(), tol))
                || (close(p, y.as_slice(), tol) && close(r, x.as_slice(), tol))
        }
        _ => false,
    }
}

/// Segment pair on a coarse integer lattice, rich in touching and collinear cases.
pub fn lattice_segment_pair(r: &mut ChaCha8Rng) -> (Segment2, Segment2) {
    let mut seg = |id| loop {
        let c: Vec<f64> = (0..4).map(|_| r.gen_range(0..=4) as f64).collect();
        if let Ok(s) = Segment2::from_coords(id, c[0], c[1], c[2], c[3]) {
            return s;
        }
    };
    (seg(0), seg(1))
}

/// Generic segment pair whose near misses are farther than `gap` apart.
pub fn generic_segment_pair(r: &mut ChaCha8Rng, gap: f64) -> (Segment2, Segment2) {
    loop {
        let mut seg = |id| loop {
            let c: Vec<f64> = (0..4).map(|_| r.gen::<f64>()).collect();
            if let Ok(s) = Segment2::from_coords(id, c[0], c[1], c[2], c[3]) {
                if s.length() > 0.05 {
                    return s;
                }
            }
        };
        let (a, b) = (seg(0), seg(1));
        let near = [a.distance(&b.start()), a.distance(&b.end()), b.distance(&a.start()), b.distance(&a.end())];
        let angle = a.direction().perp(&b.direction()).abs();
        if near.iter().all(|&d| d > gap) && angle > 1e-3 {
            return (a, b);
        }
    }
}

/// Convex lattice polygon: a triangle or a parallelogram spanned by two integer vectors.
pub fn lattice_polygon(r: &mut ChaCha8Rng, id: usize) -> Fracture3 {
    loop {
        let c = Point3::new(r.gen_range(-1..=1) as f64, r.gen_range(-1..=1) as f64, r.gen_range(-1..=1) as f64);
        let mut vec3 = || Point3::new(r.gen_range(-2..=2) as f64, r.gen_range(-2..=2) as f64, r.gen_range(-2..=2) as f64);
        let (u, v) = (vec3(), vec3());
        if u.cross(&v).norm() == 0.0 {
            continue;
        }
        let corners: &[(f64, f64)] =
            if r.gen_bool(0.5) { &[(-1.0, -1.0), (1.0, -1.0), (0.0, 1.0)] } else { &[(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)] };
        let verts = corners.iter().map(|&(a, b)| c + u * a + v * b).collect();
        if let Ok(f) = Fracture3::new(id, verts) {
            return f;
        }
    }
}

/// Random network of `n` segments inside the unit square.
pub fn random_network(r: &mut ChaCha8Rng, n: usize) -> Vec<Segment2> {
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let (cx, cy) = (r.gen_range(0.1..0.9), r.gen_range(0.1..0.9));
        let len = r.gen_range(0.15..0.6);
        let th = r.gen_range(0.0..std::f64::consts::PI);
        let (dx, dy) = (0.5 * len * th.cos(), 0.5 * len * th.sin());
        let c = [cx - dx, cy - dy, cx + dx, cy + dy].map(|v: f64| v.clamp(0.02, 0.98));
        if let Ok(s) = Segment2::from_coords(out.len(), c[0], c[1], c[2], c[3]) {
            if s.length() > 0.05 {
                out.push(s);
            }
        }
    }
    out
}

pub fn mixed_grid(segs: &[[f64; 4]], h: f64) -> MixedDimGrid {
    let f = segs.iter().enumerate().map(|(i, s)| Segment2::from_coords(i, s[0], s[1], s[2], s[3]).unwrap()).collect();
    let net = find_intersections(&Network2::new(f)).unwrap();
    build_mixed_grid(&Rect::unit(), &net, &MeshSizeSpec::uniform(h)).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// Topology, geometry, conformity, slit and divergence invariants of a mixed-dimensional grid.
pub fn check_mixed_grid(mdg: &MixedDimGrid) -> Result<(), String> {
    let tol = mdg.tol;
    for (g, grid) in mdg.grids.iter().enumerate() {
        for f in 0..grid.num_faces() {
            let two = grid.face_cells[f][1].is_some();
            if two != (grid.face_tags[f] == FaceTag::Interior) {
                return Err(format!("grid {g} face {f}: tag {:?} with cells {:?}", grid.face_tags[f], grid.face_cells[f]));
            }
        }
        for c in 0..grid.num_cells() {
            if !(grid.cell_volumes[c] > 0.0) {
                return Err(format!("grid {g} cell {c}: volume {}", grid.cell_volumes[c]));
            }
            let mut sum = Point2::zeros();
            let mut scale = 0.0;
            for &(f, s) in &grid.cell_faces[c] {
                let want = if grid.face_cells[f][0] == Some(c) { 1.0 } else { -1.0 };
                if s != want {
                    return Err(format!("grid {g} cell {c} face {f}: sign {s} inconsistent with face_cells"));
                }
                sum += grid.face_normals[f] * s;
                scale += grid.face_normals[f].norm();
            }
            if grid.dim > 0 && sum.norm() > 1e-10 * scale {
                return Err(format!("grid {g} cell {c}: normals do not close ({:e})", sum.norm()));
            }
        }
        if grid.dim == 2 {
            let area: f64 = grid.cell_volumes.iter().sum();
            if rel(area, mdg.domain.area()) > 1e-10 {
                return Err(format!("grid {g}: total area {area} differs from the domain"));
            }
        }
    }
    for (i, iface) in mdg.interfaces.iter().enumerate() {
        let (hi, lo) = (&mdg.grids[iface.higher], &mdg.grids[iface.lower]);
        if hi.dim != lo.dim + 1 {
            return Err(format!("interface {i} links dimensions {} and {}", hi.dim, lo.dim));
        }
        let mut sides = vec![(0, 0); lo.num_cells()];
        for p in &iface.pairs {
            let d = (hi.face_centers[p.face] - lo.cell_centers[p.cell]).norm();
            if d > tol {
                return Err(format!("interface {i}: face {} is {d:e} from cell {}", p.face, p.cell));
            }
            if rel(hi.face_areas[p.face], lo.cell_volumes[p.cell]) > 1e-10 {
                return Err(format!("interface {i}: face {} measure differs from cell {}", p.face, p.cell));
            }
            if p.side > 0 {
                sides[p.cell].0 += 1;
            } else {
                sides[p.cell].1 += 1;
            }
        }
        if lo.dim == 1 {
            if sides.iter().any(|&s| s != (1, 1)) {
                return Err(format!("interface {i}: a fracture cell is not seen once from each side"));
            }
            for c in 0..lo.num_cells() {
                let faces: Vec<usize> = iface.pairs.iter().filter(|p| p.cell == c).map(|p| p.face).collect();
                let (f0, f1) = (faces[0], faces[1]);
                if (hi.face_centers[f0] - hi.face_centers[f1]).norm() > 1e-12
                    || (hi.face_normals[f0] + hi.face_normals[f1]).norm() > 1e-12 * hi.face_areas[f0]
                {
                    return Err(format!("interface {i}: slit faces {f0} and {f1} are not mirror images"));
                }
            }
        }
    }
    for g in mdg.grids_of_dim(1) {
        if !mdg.interfaces.iter().any(|i| i.lower == g && mdg.grids[i.higher].dim == 2) {
            return Err(format!("fracture grid {g} is not linked to the matrix"));
        }
    }
    for g in mdg.grids_of_dim(0) {
        let linked = mdg.interfaces.iter().filter(|i| i.lower == g).count();
        if linked != mdg.grids[g].fracture_ids.len() {
            return Err(format!("point grid {g} linked to {linked} fracture grids, meets {:?}", mdg.grids[g].fracture_ids));
        }
    }
    Ok(())
}

/// Exact count of fracture pairs that intersect, by the rational oracle.
pub fn count_intersecting_pairs(segs: &[Segment2]) -> usize {
    let mut n = 0;
    for i in 0..segs.len() {
        for j in i + 1..segs.len() {
            if segment_pair_exact(&segs[i], &segs[j]) != Exact::Empty {
                n += 1;
            }
        }
    }
    n
}

pub fn big(x: i64) -> Q {
    Q::from_integer(BigInt::from(x))
}
