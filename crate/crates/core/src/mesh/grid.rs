use std::collections::BTreeMap;

use crate::geometry::Point2;
use crate::{Error, Result};

/// Side of the rectangular domain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    West,
    East,
    South,
    North,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::West, Side::East, Side::South, Side::North];

    pub fn name(self) -> &'static str {
        match self {
            Side::West => "west",
            Side::East => "east",
            Side::South => "south",
            Side::North => "north",
        }
    }
}

/// Role of a face within its grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FaceTag {
    /// Shared by two cells of the same grid.
    Interior,
    /// On the outer boundary of the domain.
    Domain(Side),
    /// One side of a slit fracture face (2D grids).
    Fracture,
    /// Fracture end point inside the domain (1D grids).
    Tip,
    /// Face of a 1D grid coupled to a 0D intersection cell.
    Intersection,
}

impl FaceTag {
    pub fn is_interface(self) -> bool {
        matches!(self, FaceTag::Fracture | FaceTag::Intersection)
    }
}

/// Axis-aligned rectangle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect {
    pub xmin: f64,
    pub ymin: f64,
    pub xmax: f64,
    pub ymax: f64,
}

impl Rect {
    pub fn new(xmin: f64, ymin: f64, xmax: f64, ymax: f64) -> Self {
        assert!(xmax > xmin && ymax > ymin, "empty rectangle");
        Self { xmin, ymin, xmax, ymax }
    }

    pub fn unit() -> Self {
        Self::new(0.0, 0.0, 1.0, 1.0)
    }

    pub fn width(&self) -> f64 {
        self.xmax - self.xmin
    }

    pub fn height(&self) -> f64 {
        self.ymax - self.ymin
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn diagonal(&self) -> f64 {
        self.width().hypot(self.height())
    }

    /// Corners counter-clockwise from (xmin, ymin).
    pub fn corners(&self) -> [Point2; 4] {
        [
            Point2::new(self.xmin, self.ymin),
            Point2::new(self.xmax, self.ymin),
            Point2::new(self.xmax, self.ymax),
            Point2::new(self.xmin, self.ymax),
        ]
    }

    pub fn contains(&self, p: &Point2, tol: f64) -> bool {
        p.x >= self.xmin - tol && p.x <= self.xmax + tol && p.y >= self.ymin - tol && p.y <= self.ymax + tol
    }

    /// The side a point lies on, if any (first match in West, East, South, North order).
    pub fn side_of(&self, p: &Point2, tol: f64) -> Option<Side> {
        if (p.x - self.xmin).abs() <= tol {
            Some(Side::West)
        } else if (p.x - self.xmax).abs() <= tol {
            Some(Side::East)
        } else if (p.y - self.ymin).abs() <= tol {
            Some(Side::South)
        } else if (p.y - self.ymax).abs() <= tol {
            Some(Side::North)
        } else {
            None
        }
    }

    /// Side shared by both points, used to classify boundary faces.
    pub fn common_side(&self, a: &Point2, b: &Point2, tol: f64) -> Option<Side> {
        Side::ALL.into_iter().find(|&s| self.on_side(a, s, tol) && self.on_side(b, s, tol))
    }

    pub fn on_side(&self, p: &Point2, side: Side, tol: f64) -> bool {
        match side {
            Side::West => (p.x - self.xmin).abs() <= tol,
            Side::East => (p.x - self.xmax).abs() <= tol,
            Side::South => (p.y - self.ymin).abs() <= tol,
            Side::North => (p.y - self.ymax).abs() <= tol,
        }
    }
}

/// Unslit polygonal mesh: nodes plus counter-clockwise cell node lists.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PolyMesh {
    pub nodes: Vec<Point2>,
    pub cells: Vec<Vec<usize>>,
}

impl PolyMesh {
    /// Unique edges as sorted node pairs, with the cells on each side.
    pub fn edges(&self) -> Vec<((usize, usize), Vec<usize>)> {
        let mut index: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut out: Vec<((usize, usize), Vec<usize>)> = Vec::new();
        for (c, nodes) in self.cells.iter().enumerate() {
            for k in 0..nodes.len() {
                let (a, b) = (nodes[k], nodes[(k + 1) % nodes.len()]);
                let key = (a.min(b), a.max(b));
                let e = *index.entry(key).or_insert_with(|| {
                    out.push((key, Vec::new()));
                    out.len() - 1
                });
                out[e].1.push(c);
            }
        }
        out
    }

    pub fn total_area(&self) -> f64 {
        self.cells.iter().map(|c| polygon_area(&self.nodes, c)).sum()
    }
}

pub fn polygon_area(nodes: &[Point2], cell: &[usize]) -> f64 {
    let mut a = 0.0;
    for k in 0..cell.len() {
        let (p, q) = (nodes[cell[k]], nodes[cell[(k + 1) % cell.len()]]);
        a += p.x * q.y - p.y * q.x;
    }
    0.5 * a
}

/// A grid of fixed dimension (0, 1 or 2) embedded in the plane.
///
/// Face normals point out of `face_cells[f][0]` (and into `face_cells[f][1]`
/// when present) and are scaled by the face measure. The signs stored in
/// `cell_faces` are +1 where the normal is outward for that cell.
#[derive(Clone, Debug, Default)]
pub struct Grid {
    pub dim: usize,
    pub nodes: Vec<Point2>,
    pub face_nodes: Vec<Vec<usize>>,
    pub face_cells: Vec<[Option<usize>; 2]>,
    pub cell_faces: Vec<Vec<(usize, f64)>>,
    pub cell_nodes: Vec<Vec<usize>>,
    pub face_tags: Vec<FaceTag>,
    pub cell_centers: Vec<Point2>,
    pub face_centers: Vec<Point2>,
    pub face_normals: Vec<Point2>,
    pub cell_volumes: Vec<f64>,
    pub face_areas: Vec<f64>,
    /// Fracture ids: the fracture of a 1D grid, the meeting fractures of a 0D grid.
    pub fracture_ids: Vec<usize>,
    /// Unit tangent of a 1D grid.
    pub tangent: Option<Point2>,
}

impl Grid {
    pub fn num_cells(&self) -> usize {
        self.cell_nodes.len()
    }

    pub fn num_faces(&self) -> usize {
        self.face_nodes.len()
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_boundary_face(&self, f: usize) -> bool {
        self.face_cells[f][1].is_none()
    }

    /// The cell adjacent to a boundary face.
    pub fn boundary_cell(&self, f: usize) -> usize {
        self.face_cells[f][0].expect("face without cell")
    }

    pub fn faces_with_tag(&self, pred: impl Fn(FaceTag) -> bool) -> Vec<usize> {
        (0..self.num_faces()).filter(|&f| pred(self.face_tags[f])).collect()
    }

    /// Outward unit normal of face `f` as seen from cell `c`.
    pub fn outward_unit_normal(&self, f: usize, c: usize) -> Point2 {
        let n = self.face_normals[f] / self.face_areas[f];
        if self.face_cells[f][0] == Some(c) {
            n
        } else {
            -n
        }
    }

    /// 2D grid from an unslit polygon mesh; boundary faces are tagged by domain side.
    pub fn from_polymesh(mesh: &PolyMesh, domain: &Rect) -> Result<Self> {
        let tol = 1e-10 * domain.diagonal();
        let mut g = Grid { dim: 2, nodes: mesh.nodes.clone(), cell_nodes: mesh.cells.clone(), ..Default::default() };
        for ((a, b), cells) in mesh.edges() {
            g.face_nodes.push(vec![a, b]);
            g.face_cells.push([Some(cells[0]), cells.get(1).copied()]);
            let tag = if cells.len() == 2 {
                FaceTag::Interior
            } else {
                domain
                    .common_side(&mesh.nodes[a], &mesh.nodes[b], tol)
                    .map(FaceTag::Domain)
                    .ok_or_else(|| Error::NonConforming(format!("boundary edge ({a}, {b}) is not on the domain boundary")))?
            };
            g.face_tags.push(tag);
        }
        g.compute_geometry()?;
        Ok(g)
    }

    /// Single-cell point grid.
    pub fn point(p: Point2, fracture_ids: Vec<usize>) -> Self {
        let mut g = Grid {
            dim: 0,
            nodes: vec![p],
            cell_nodes: vec![vec![0]],
            cell_faces: vec![vec![]],
            fracture_ids,
            ..Default::default()
        };
        g.compute_geometry().expect("point grid");
        g
    }

    /// Fills centers, normals, measures and orientation signs from the topology.
    pub fn compute_geometry(&mut self) -> Result<()> {
        let nc = self.num_cells();
        let nf = self.num_faces();
        self.cell_centers = vec![Point2::zeros(); nc];
        self.cell_volumes = vec![0.0; nc];
        self.face_centers = vec![Point2::zeros(); nf];
        self.face_normals = vec![Point2::zeros(); nf];
        self.face_areas = vec![0.0; nf];
        match self.dim {
            0 => {
                for c in 0..nc {
                    self.cell_centers[c] = self.nodes[self.cell_nodes[c][0]];
                    self.cell_volumes[c] = 1.0;
                }
            }
            1 => {
                for c in 0..nc {
                    let (a, b) = (self.nodes[self.cell_nodes[c][0]], self.nodes[self.cell_nodes[c][1]]);
                    self.cell_centers[c] = (a + b) * 0.5;
                    self.cell_volumes[c] = (b - a).norm();
                }
                for f in 0..nf {
                    let x = self.nodes[self.face_nodes[f][0]];
                    self.face_centers[f] = x;
                    self.face_areas[f] = 1.0;
                    let c0 = self.face_cells[f][0].expect("1D face without cell");
                    let d = x - self.cell_centers[c0];
                    self.face_normals[f] = d / d.norm();
                }
            }
            2 => {
                for c in 0..nc {
                    let nodes = &self.cell_nodes[c];
                    self.cell_volumes[c] = polygon_area(&self.nodes, nodes);
                    self.cell_centers[c] =
                        nodes.iter().map(|&n| self.nodes[n]).sum::<Point2>() / nodes.len() as f64;
                }
                for f in 0..nf {
                    let (a, b) = (self.face_nodes[f][0], self.face_nodes[f][1]);
                    let (pa, pb) = (self.nodes[a], self.nodes[b]);
                    let e = pb - pa;
                    let mut n = Point2::new(e.y, -e.x);
                    self.face_centers[f] = (pa + pb) * 0.5;
                    let c0 = self.face_cells[f][0].expect("2D face without cell");
                    if n.dot(&(self.face_centers[f] - self.cell_centers[c0])) < 0.0 {
                        n = -n;
                        self.face_nodes[f].swap(0, 1);
                    }
                    self.face_normals[f] = n;
                    self.face_areas[f] = n.norm();
                }
            }
            d => panic!("unsupported grid dimension {d}"),
        }
        for c in 0..nc {
            if !(self.cell_volumes[c] > 0.0) {
                return Err(Error::DegenerateCell { dim: self.dim, cell: c, measure: self.cell_volumes[c] });
            }
        }
        self.cell_faces = vec![Vec::new(); nc];
        for f in 0..nf {
            for (slot, sign) in [(0, 1.0), (1, -1.0)] {
                if let Some(c) = self.face_cells[f][slot] {
                    self.cell_faces[c].push((f, sign));
                }
            }
        }
        Ok(())
    }

    /// Largest |Σ sign · normal| over cells, relative to the cell's face measure.
    pub fn max_closure_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for c in 0..self.num_cells() {
            let mut s = Point2::zeros();
            let mut scale = 0.0;
            for &(f, sign) in &self.cell_faces[c] {
                s += self.face_normals[f] * sign;
                scale += self.face_areas[f];
            }
            if scale > 0.0 {
                worst = worst.max(s.norm() / scale);
            }
        }
        worst
    }
}
