//! Constrained Delaunay triangulation of a rectangle with embedded segments,
//! refined to a size field and a minimum angle.

use std::collections::{BTreeMap, BTreeSet};

use robust::{incircle, orient2d, Coord};

use super::decompose::DecomposedNetwork;
use super::grid::{PolyMesh, Rect};
use crate::geometry::{point_segment_distance, Point2};
use crate::{Error, Result};

const NONE: usize = usize::MAX;

/// Maximum number of vertices before refinement gives up.
pub const DEFAULT_MAX_VERTICES: usize = 400_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SizeMode {
    Uniform,
    Weighted,
}

/// Target cell size control.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeshSizeSpec {
    pub h_background: f64,
    pub h_min: f64,
    pub mode: SizeMode,
    /// Minimum angle target in degrees.
    pub min_angle: f64,
}

impl MeshSizeSpec {
    pub fn uniform(h: f64) -> Self {
        Self { h_background: h, h_min: h, mode: SizeMode::Uniform, min_angle: 20.0 }
    }

    pub fn weighted(h_background: f64, h_min: f64) -> Self {
        Self { h_background, h_min, mode: SizeMode::Weighted, min_angle: 20.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h_min > 0.0 && self.h_min <= self.h_background && self.h_background.is_finite()) {
            return Err(Error::Config(format!(
                "mesh sizes must satisfy 0 < h_min <= h_background (got {} and {})",
                self.h_min, self.h_background
            )));
        }
        if !(0.0..=33.0).contains(&self.min_angle) {
            return Err(Error::Config(format!("minimum angle {} outside [0, 33] degrees", self.min_angle)));
        }
        Ok(())
    }
}

fn coord(p: &Point2) -> Coord<f64> {
    Coord { x: p.x, y: p.y }
}

fn orient(a: &Point2, b: &Point2, c: &Point2) -> f64 {
    orient2d(coord(a), coord(b), coord(c))
}

enum Location {
    Vertex(usize),
    Edge(usize, usize),
    Inside(usize),
    Outside,
}

/// Triangulation with neighbor links. Edge `k` of a triangle is the one
/// opposite its vertex `k`.
pub struct Triangulation {
    pub verts: Vec<Point2>,
    tris: Vec<[usize; 3]>,
    nbr: Vec<[usize; 3]>,
    cons: Vec<[bool; 3]>,
    vtri: Vec<usize>,
    last: usize,
    snap: f64,
}

impl Triangulation {
    pub fn new(domain: &Rect) -> Self {
        let c = domain.corners();
        Self {
            verts: c.to_vec(),
            tris: vec![[0, 1, 2], [0, 2, 3]],
            nbr: vec![[NONE, 1, NONE], [NONE, NONE, 0]],
            cons: vec![[true, false, true], [true, true, false]],
            vtri: vec![0, 0, 0, 1],
            last: 0,
            snap: 1e-11 * domain.diagonal(),
        }
    }

    pub fn num_triangles(&self) -> usize {
        self.tris.len()
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.tris
    }

    fn edge(&self, t: usize, k: usize) -> (usize, usize) {
        let v = self.tris[t];
        (v[(k + 1) % 3], v[(k + 2) % 3])
    }

    /// Makes the neighbor across each edge of `t` point back to `t`.
    fn fix_back(&mut self, t: usize) {
        for k in 0..3 {
            let n = self.nbr[t][k];
            if n == NONE {
                continue;
            }
            let (p, q) = self.edge(t, k);
            let j = (0..3).find(|&j| self.edge(n, j) == (q, p)).expect("inconsistent neighbor");
            self.nbr[n][j] = t;
            self.cons[n][j] = self.cons[t][k];
        }
        for &v in &self.tris[t] {
            self.vtri[v] = t;
        }
    }

    fn set(&mut self, t: usize, v: [usize; 3], n: [usize; 3], c: [bool; 3]) {
        if t == self.tris.len() {
            self.tris.push(v);
            self.nbr.push(n);
            self.cons.push(c);
        } else {
            self.tris[t] = v;
            self.nbr[t] = n;
            self.cons[t] = c;
        }
    }

    fn locate(&mut self, p: &Point2) -> Location {
        let mut t = self.last.min(self.tris.len() - 1);
        let mut steps = 0usize;
        let limit = 4 * self.tris.len() + 64;
        'walk: loop {
            steps += 1;
            if steps > limit {
                match (0..self.tris.len()).find(|&s| (0..3).all(|k| self.edge_orient(s, k, p) >= 0.0)) {
                    Some(s) => t = s,
                    None => return Location::Outside,
                }
                break;
            }
            let start = steps % 3;
            for kk in 0..3 {
                let k = (start + kk) % 3;
                if self.edge_orient(t, k, p) < 0.0 {
                    let n = self.nbr[t][k];
                    if n == NONE {
                        return Location::Outside;
                    }
                    t = n;
                    continue 'walk;
                }
            }
            break;
        }
        self.last = t;
        for &v in &self.tris[t] {
            if (self.verts[v] - p).norm() <= self.snap {
                return Location::Vertex(v);
            }
        }
        for k in 0..3 {
            let (a, b) = self.edge(t, k);
            if point_segment_distance(p, &self.verts[a], &self.verts[b]) <= self.snap {
                return Location::Edge(t, k);
            }
        }
        Location::Inside(t)
    }

    fn edge_orient(&self, t: usize, k: usize, p: &Point2) -> f64 {
        let (a, b) = self.edge(t, k);
        orient(&self.verts[a], &self.verts[b], p)
    }

    /// Inserts a point, returning its vertex index (existing if coincident).
    pub fn insert(&mut self, p: Point2) -> Option<usize> {
        match self.locate(&p) {
            Location::Vertex(v) => Some(v),
            Location::Edge(t, k) => Some(self.split_edge(t, k, p)),
            Location::Inside(t) => Some(self.split_triangle(t, p)),
            Location::Outside => None,
        }
    }

    fn split_triangle(&mut self, t: usize, p: Point2) -> usize {
        let m = self.verts.len();
        self.verts.push(p);
        self.vtri.push(t);
        let [a, b, c] = self.tris[t];
        let [n0, n1, n2] = self.nbr[t];
        let [c0, c1, c2] = self.cons[t];
        let (t0, t1, t2) = (t, self.tris.len(), self.tris.len() + 1);
        self.set(t0, [m, b, c], [n0, t1, t2], [c0, false, false]);
        self.set(t1, [m, c, a], [n1, t2, t0], [c1, false, false]);
        self.set(t2, [m, a, b], [n2, t0, t1], [c2, false, false]);
        for s in [t0, t1, t2] {
            self.fix_back(s);
        }
        self.legalize(vec![(t0, 0), (t1, 0), (t2, 0)]);
        m
    }

    /// Splits edge `k` of triangle `t` at `p` (which need not be exactly on it).
    fn split_edge(&mut self, t: usize, k: usize, p: Point2) -> usize {
        let m = self.verts.len();
        self.verts.push(p);
        self.vtri.push(t);
        let v = self.tris[t];
        let (a, b, c) = (v[k], v[(k + 1) % 3], v[(k + 2) % 3]);
        let nb = self.nbr[t][(k + 1) % 3];
        let nc = self.nbr[t][(k + 2) % 3];
        let cb = self.cons[t][(k + 1) % 3];
        let cc = self.cons[t][(k + 2) % 3];
        let ce = self.cons[t][k];
        let u = self.nbr[t][k];
        let ta2 = self.tris.len();
        if u == NONE {
            self.set(t, [a, b, m], [NONE, ta2, nc], [ce, false, cc]);
            self.set(ta2, [a, m, c], [NONE, nb, t], [ce, cb, false]);
            self.fix_back(t);
            self.fix_back(ta2);
            self.legalize(vec![(t, 2), (ta2, 1)]);
            return m;
        }
        let j = (0..3).find(|&j| self.nbr[u][j] == t).unwrap();
        let w = self.tris[u];
        let d = w[j];
        debug_assert_eq!((w[(j + 1) % 3], w[(j + 2) % 3]), (c, b));
        let mc = self.nbr[u][(j + 1) % 3];
        let mb = self.nbr[u][(j + 2) % 3];
        let cuc = self.cons[u][(j + 1) % 3];
        let cub = self.cons[u][(j + 2) % 3];
        let td2 = ta2 + 1;
        // t: [a,b,m], ta2: [a,m,c], u: [d,c,m], td2: [d,m,b]
        self.set(t, [a, b, m], [td2, ta2, nc], [ce, false, cc]);
        self.set(ta2, [a, m, c], [u, nb, t], [ce, cb, false]);
        self.set(u, [d, c, m], [ta2, td2, mb], [ce, false, cub]);
        self.set(td2, [d, m, b], [t, mc, u], [ce, cuc, false]);
        for s in [t, ta2, u, td2] {
            self.fix_back(s);
        }
        self.legalize(vec![(t, 2), (ta2, 1), (u, 2), (td2, 1)]);
        m
    }

    /// Flips edge `k` of `t`; returns the two new triangles.
    fn flip(&mut self, t: usize, k: usize) -> (usize, usize) {
        let u = self.nbr[t][k];
        let v = self.tris[t];
        let (a, b, c) = (v[k], v[(k + 1) % 3], v[(k + 2) % 3]);
        let j = (0..3).find(|&j| self.nbr[u][j] == t).unwrap();
        let d = self.tris[u][j];
        let ntb = self.nbr[t][(k + 1) % 3];
        let ntc = self.nbr[t][(k + 2) % 3];
        let ctb = self.cons[t][(k + 1) % 3];
        let ctc = self.cons[t][(k + 2) % 3];
        // u = [d, c, b]: edge opposite c is (b, d), opposite b is (d, c)
        let nuc = self.nbr[u][(j + 1) % 3];
        let nub = self.nbr[u][(j + 2) % 3];
        let cuc = self.cons[u][(j + 1) % 3];
        let cub = self.cons[u][(j + 2) % 3];
        self.set(t, [a, b, d], [nuc, u, ntc], [cuc, false, ctc]);
        self.set(u, [d, c, a], [ntb, t, nub], [ctb, false, cub]);
        self.fix_back(t);
        self.fix_back(u);
        (t, u)
    }

    fn is_delaunay(&self, t: usize, k: usize) -> bool {
        let u = self.nbr[t][k];
        if u == NONE || self.cons[t][k] {
            return true;
        }
        let j = (0..3).find(|&j| self.nbr[u][j] == t).unwrap();
        let d = self.verts[self.tris[u][j]];
        let v = self.tris[t];
        incircle(coord(&self.verts[v[0]]), coord(&self.verts[v[1]]), coord(&self.verts[v[2]]), coord(&d)) <= 0.0
    }

    fn legalize(&mut self, mut stack: Vec<(usize, usize)>) {
        while let Some((t, k)) = stack.pop() {
            if self.is_delaunay(t, k) {
                continue;
            }
            // only flip convex quads (always true for a non-Delaunay interior edge)
            let (t, u) = self.flip(t, k);
            stack.extend([(t, 0), (t, 2), (u, 0), (u, 2)]);
        }
    }

    fn find_edge(&self, p: usize, q: usize) -> Option<(usize, usize)> {
        for t in self.triangles_around(p) {
            for k in 0..3 {
                if self.edge(t, k) == (p, q) || self.edge(t, k) == (q, p) {
                    return Some((t, k));
                }
            }
        }
        None
    }

    fn triangles_around(&self, p: usize) -> Vec<usize> {
        let t0 = self.vtri[p];
        let mut out = vec![t0];
        for dir in [1usize, 2] {
            let mut t = t0;
            loop {
                let i = self.tris[t].iter().position(|&v| v == p).unwrap();
                let n = self.nbr[t][(i + dir) % 3];
                if n == NONE || n == t0 {
                    break;
                }
                if out.contains(&n) {
                    break;
                }
                out.push(n);
                t = n;
            }
        }
        out
    }

    fn contains_triangle(&self, v: [usize; 3]) -> bool {
        let mut key = v;
        key.sort_unstable();
        self.triangles_around(v[0]).into_iter().any(|t| {
            let mut w = self.tris[t];
            w.sort_unstable();
            w == key
        })
    }

    fn mark_constrained(&mut self, p: usize, q: usize) {
        let (t, k) = self.find_edge(p, q).expect("edge present");
        self.cons[t][k] = true;
        let u = self.nbr[t][k];
        if u != NONE {
            let j = (0..3).find(|&j| self.nbr[u][j] == t).unwrap();
            self.cons[u][j] = true;
        }
    }

    fn crosses(&self, a: usize, b: usize, p: usize, q: usize) -> bool {
        let (pa, pb, pp, pq) = (&self.verts[a], &self.verts[b], &self.verts[p], &self.verts[q]);
        let o1 = orient(pa, pb, pp);
        let o2 = orient(pa, pb, pq);
        let o3 = orient(pp, pq, pa);
        let o4 = orient(pp, pq, pb);
        o1 * o2 < 0.0 && o3 * o4 < 0.0
    }

    /// Recovers segment (a, b) as a chain of constrained edges.
    pub fn insert_segment(&mut self, a: usize, b: usize) -> Result<()> {
        if a == b {
            return Ok(());
        }
        if self.find_edge(a, b).is_some() {
            self.mark_constrained(a, b);
            return Ok(());
        }
        // a vertex lying on the open segment splits it
        let (pa, pb) = (self.verts[a], self.verts[b]);
        let len = (pb - pa).norm();
        for v in 0..self.verts.len() {
            if v != a && v != b {
                let x = self.verts[v];
                let s = (x - pa).dot(&(pb - pa)) / (len * len);
                if s > 0.0 && s < 1.0 && point_segment_distance(&x, &pa, &pb) <= self.snap.max(1e-12 * len) {
                    self.insert_segment(a, v)?;
                    return self.insert_segment(v, b);
                }
            }
        }
        let mut crossing: std::collections::VecDeque<(usize, usize)> = std::collections::VecDeque::new();
        let n = self.tris.len();
        for t in 0..n {
            for k in 0..3 {
                let (p, q) = self.edge(t, k);
                if p < q && self.crosses(a, b, p, q) {
                    if self.cons[t][k] {
                        return Err(Error::NonConforming(format!(
                            "constraint ({a}, {b}) crosses constrained edge ({p}, {q})"
                        )));
                    }
                    crossing.push_back((p, q));
                }
            }
        }
        let mut new_edges: Vec<(usize, usize)> = Vec::new();
        let mut guard = 0usize;
        while let Some((p, q)) = crossing.pop_front() {
            guard += 1;
            if guard > 100_000 + 100 * n {
                return Err(Error::NonConforming(format!("failed to recover constraint ({a}, {b})")));
            }
            let Some((t, k)) = self.find_edge(p, q) else { continue };
            let u = self.nbr[t][k];
            let j = (0..3).find(|&j| self.nbr[u][j] == t).unwrap();
            let (x, y) = (self.tris[t][k], self.tris[u][j]);
            // quad x, p/q, y, q/p is strictly convex iff diagonal x-y crosses p-q
            if !self.crosses(x, y, p, q) {
                crossing.push_back((p, q));
                continue;
            }
            self.flip(t, k);
            if self.crosses(a, b, x, y) {
                crossing.push_back((x, y));
            } else {
                new_edges.push((x, y));
            }
        }
        self.mark_constrained(a, b);
        let mut stack = Vec::new();
        for (x, y) in new_edges {
            if (x, y) == (a, b) || (x, y) == (b, a) {
                continue;
            }
            if let Some(e) = self.find_edge(x, y) {
                stack.push(e);
            }
        }
        self.legalize(stack);
        Ok(())
    }

    fn constrained_edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for t in 0..self.tris.len() {
            for k in 0..3 {
                if self.cons[t][k] {
                    let (p, q) = self.edge(t, k);
                    let u = self.nbr[t][k];
                    if u == NONE || p < q {
                        out.push((p.min(q), p.max(q)));
                    }
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Checks orientation and neighbor symmetry.
    pub fn is_valid(&self) -> bool {
        for t in 0..self.tris.len() {
            let v = self.tris[t];
            if orient(&self.verts[v[0]], &self.verts[v[1]], &self.verts[v[2]]) <= 0.0 {
                return false;
            }
            for k in 0..3 {
                let u = self.nbr[t][k];
                if u != NONE && !self.nbr[u].contains(&t) {
                    return false;
                }
            }
        }
        true
    }

    pub fn to_polymesh(&self) -> PolyMesh {
        PolyMesh { nodes: self.verts.clone(), cells: self.tris.iter().map(|t| t.to_vec()).collect() }
    }
}

fn encroaches(p: &Point2, a: &Point2, b: &Point2) -> bool {
    (p - a).dot(&(p - b)) < 0.0
}

fn circumcenter(a: &Point2, b: &Point2, c: &Point2) -> Point2 {
    let (b, c) = (b - a, c - a);
    let d = 2.0 * (b.x * c.y - b.y * c.x);
    let (b2, c2) = (b.norm_squared(), c.norm_squared());
    a + Point2::new(c.y * b2 - b.y * c2, b.x * c2 - c.x * b2) / d
}

/// Geometric features used by the weighted size field.
enum Feature {
    Point(Point2),
    Segment(Point2, Point2),
}

impl Feature {
    fn distance(&self, x: &Point2) -> f64 {
        match self {
            Feature::Point(p) => (x - p).norm(),
            Feature::Segment(a, b) => point_segment_distance(x, a, b),
        }
    }
}

struct SizeField<'a> {
    spec: &'a MeshSizeSpec,
    features: Vec<Feature>,
    tol: f64,
}

impl SizeField<'_> {
    fn target(&self, verts: &[Point2]) -> f64 {
        if self.spec.mode == SizeMode::Uniform || self.features.is_empty() {
            return self.spec.h_background;
        }
        let centroid = (verts[0] + verts[1] + verts[2]) / 3.0;
        let mut d = f64::INFINITY;
        for f in &self.features {
            if verts.iter().any(|v| f.distance(v) <= self.tol) {
                continue;
            }
            d = d.min(f.distance(&centroid));
        }
        (0.5 * d).clamp(self.spec.h_min, self.spec.h_background)
    }
}

/// Constrained triangulation of `domain` conforming to `network`, refined to
/// the size specification.
pub fn triangulate(domain: &Rect, network: &DecomposedNetwork, size: &MeshSizeSpec) -> Result<PolyMesh> {
    triangulate_with_limit(domain, network, size, DEFAULT_MAX_VERTICES)
}

pub fn triangulate_with_limit(
    domain: &Rect,
    network: &DecomposedNetwork,
    size: &MeshSizeSpec,
    max_vertices: usize,
) -> Result<PolyMesh> {
    size.validate()?;
    let mut tri = Triangulation::new(domain);
    let mut index = Vec::with_capacity(network.points.len());
    for p in &network.points {
        let v = tri.insert(*p).ok_or_else(|| Error::NonConforming(format!("point {p:?} outside the domain")))?;
        index.push(v);
    }
    for s in &network.segments {
        tri.insert_segment(index[s.a], index[s.b])?;
    }
    let tol = network.tol.max(1e-12 * domain.diagonal());
    let mut features: Vec<Feature> = network.points.iter().map(|p| Feature::Point(*p)).collect();
    features.extend(network.segments.iter().map(|s| Feature::Segment(network.points[s.a], network.points[s.b])));
    let field = SizeField { spec: size, features, tol };
    refine(&mut tri, &field, domain, max_vertices)?;
    debug_assert!(tri.is_valid());
    Ok(tri.to_polymesh())
}

fn refine(tri: &mut Triangulation, field: &SizeField, domain: &Rect, max_vertices: usize) -> Result<()> {
    let floor = field.spec.h_min / 8.0;
    let sin_min = field.spec.min_angle.to_radians().sin();
    let mut segments: BTreeSet<(usize, usize)> = tri.constrained_edges().into_iter().collect();
    let mut rejected: BTreeSet<[usize; 3]> = BTreeSet::new();
    loop {
        split_encroached(tri, &mut segments, floor, max_vertices)?;
        let mut bad: Vec<(f64, [usize; 3])> = Vec::new();
        for t in 0..tri.tris.len() {
            let v = tri.tris[t];
            let p = [tri.verts[v[0]], tri.verts[v[1]], tri.verts[v[2]]];
            let l = [(p[1] - p[2]).norm(), (p[2] - p[0]).norm(), (p[0] - p[1]).norm()];
            let lmax = l.iter().cloned().fold(0.0, f64::max);
            let lmin = l.iter().cloned().fold(f64::INFINITY, f64::min);
            let area = 0.5 * orient(&p[0], &p[1], &p[2]);
            // sine of the smallest angle: 2 A / (product of the two edges enclosing it)
            let sin_angle = 2.0 * area * lmin / (l[0] * l[1] * l[2]);
            let too_big = lmax > field.target(&p) * (1.0 + 1e-9);
            let skinny = sin_angle < sin_min && lmin > floor;
            if too_big || skinny {
                let mut key = v;
                key.sort_unstable();
                if !rejected.contains(&key) {
                    bad.push((if too_big { lmax } else { lmax * 0.5 }, v));
                }
            }
        }
        if bad.is_empty() {
            return Ok(());
        }
        bad.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut progress = false;
        for (_, v) in bad {
            if !tri.contains_triangle(v) {
                continue;
            }
            let p = [tri.verts[v[0]], tri.verts[v[1]], tri.verts[v[2]]];
            let cc = circumcenter(&p[0], &p[1], &p[2]);
            let enc: Vec<(usize, usize)> = segments
                .iter()
                .filter(|&&(a, b)| encroaches(&cc, &tri.verts[a], &tri.verts[b]))
                .copied()
                .collect();
            let mut key = v;
            key.sort_unstable();
            if enc.is_empty() {
                if !domain.contains(&cc, 0.0) {
                    rejected.insert(key);
                    continue;
                }
                let before = tri.verts.len();
                match tri.insert(cc) {
                    Some(m) if m >= before => progress = true,
                    _ => {
                        rejected.insert(key);
                    }
                }
            } else {
                let mut split_any = false;
                for (a, b) in enc {
                    if segments.contains(&(a, b)) && split_segment(tri, &mut segments, a, b, floor) {
                        split_any = true;
                    }
                }
                if split_any {
                    progress = true;
                } else {
                    rejected.insert(key);
                }
            }
            if tri.verts.len() > max_vertices {
                return Err(Error::MeshTooLarge(max_vertices));
            }
        }
        if !progress {
            return Ok(());
        }
    }
}

fn split_segment(tri: &mut Triangulation, segments: &mut BTreeSet<(usize, usize)>, a: usize, b: usize, floor: f64) -> bool {
    let (pa, pb) = (tri.verts[a], tri.verts[b]);
    if (pb - pa).norm() < 2.0 * floor {
        return false;
    }
    let Some((t, k)) = tri.find_edge(a, b) else { return false };
    let m = tri.split_edge(t, k, (pa + pb) * 0.5);
    segments.remove(&(a, b));
    segments.insert((a.min(m), a.max(m)));
    segments.insert((b.min(m), b.max(m)));
    true
}

fn split_encroached(
    tri: &mut Triangulation,
    segments: &mut BTreeSet<(usize, usize)>,
    floor: f64,
    max_vertices: usize,
) -> Result<()> {
    let mut skip: BTreeSet<(usize, usize)> = BTreeSet::new();
    loop {
        let mut todo: Vec<(usize, usize)> = Vec::new();
        let mut sorted: Vec<(usize, usize)> = segments.iter().copied().collect();
        sorted.sort_unstable();
        for (a, b) in sorted {
            if skip.contains(&(a, b)) {
                continue;
            }
            let Some((t, k)) = tri.find_edge(a, b) else { continue };
            let mut opp = vec![tri.tris[t][k]];
            let u = tri.nbr[t][k];
            if u != NONE {
                let j = (0..3).find(|&j| tri.nbr[u][j] == t).unwrap();
                opp.push(tri.tris[u][j]);
            }
            if opp.iter().any(|&v| encroaches(&tri.verts[v], &tri.verts[a], &tri.verts[b])) {
                todo.push((a, b));
            }
        }
        if todo.is_empty() {
            return Ok(());
        }
        for (a, b) in todo {
            if !split_segment(tri, segments, a, b, floor) {
                skip.insert((a, b));
            }
        }
        if tri.verts.len() > max_vertices {
            return Err(Error::MeshTooLarge(max_vertices));
        }
    }
}

/// Uniform red refinement of a triangle mesh: every triangle is split into four.
pub fn refine_uniform(mesh: &PolyMesh) -> PolyMesh {
    let mut nodes = mesh.nodes.clone();
    let mut mid: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut midpoint = |a: usize, b: usize, nodes: &mut Vec<Point2>| {
        *mid.entry((a.min(b), a.max(b))).or_insert_with(|| {
            nodes.push((nodes[a] + nodes[b]) * 0.5);
            nodes.len() - 1
        })
    };
    let mut cells = Vec::with_capacity(4 * mesh.cells.len());
    for c in &mesh.cells {
        assert_eq!(c.len(), 3, "red refinement needs triangles");
        let (a, b, d) = (c[0], c[1], c[2]);
        let ab = midpoint(a, b, &mut nodes);
        let bd = midpoint(b, d, &mut nodes);
        let da = midpoint(d, a, &mut nodes);
        cells.push(vec![a, ab, da]);
        cells.push(vec![ab, b, bd]);
        cells.push(vec![da, bd, d]);
        cells.push(vec![ab, bd, da]);
    }
    PolyMesh { nodes, cells }
}
