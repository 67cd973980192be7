use std::collections::BTreeMap;

use super::cdt::{triangulate, MeshSizeSpec};
use super::decompose::{decompose_network_2d, DecomposedNetwork};
use super::grid::{FaceTag, Grid, PolyMesh, Rect};
use crate::geometry::{point_segment_distance, Network2, Point2, Segment2};
use crate::{Error, Result};

/// One coupling between a face of the higher grid and a cell of the lower grid.
///
/// For 2D/1D couplings `side` is +1 when the 2D cell lies to the left of the
/// fracture tangent. For 1D/0D couplings it is +1 when the 1D branch lies
/// before the intersection point along the tangent.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct InterfacePair {
    pub face: usize,
    pub cell: usize,
    pub side: i8,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InterfaceMap {
    pub higher: usize,
    pub lower: usize,
    pub pairs: Vec<InterfacePair>,
}

/// Grids ordered by descending dimension plus the interfaces between them.
#[derive(Clone, Debug)]
pub struct MixedDimGrid {
    pub domain: Rect,
    pub grids: Vec<Grid>,
    pub interfaces: Vec<InterfaceMap>,
    pub tol: f64,
}

impl MixedDimGrid {
    pub fn num_grids(&self) -> usize {
        self.grids.len()
    }

    pub fn max_dim(&self) -> usize {
        self.grids.iter().map(|g| g.dim).max().unwrap_or(0)
    }

    pub fn grids_of_dim(&self, dim: usize) -> Vec<usize> {
        (0..self.grids.len()).filter(|&g| self.grids[g].dim == dim).collect()
    }

    pub fn num_cells(&self) -> usize {
        self.grids.iter().map(|g| g.num_cells()).sum()
    }

    pub fn cells_per_grid(&self) -> Vec<usize> {
        self.grids.iter().map(|g| g.num_cells()).collect()
    }

    /// Per face of grid `g`: the interface and pair index it is coupled through.
    pub fn face_couplings(&self, g: usize) -> Vec<Option<(usize, usize)>> {
        let mut out = vec![None; self.grids[g].num_faces()];
        for (i, iface) in self.interfaces.iter().enumerate() {
            if iface.higher == g {
                for (k, p) in iface.pairs.iter().enumerate() {
                    out[p.face] = Some((i, k));
                }
            }
        }
        out
    }

    /// Keeps only the fracture and intersection grids.
    pub fn dfn_mode(&self) -> Result<MixedDimGrid> {
        if self.grids_of_dim(1).is_empty() {
            return Err(Error::NoFractures);
        }
        let keep: Vec<usize> = (0..self.grids.len()).filter(|&g| self.grids[g].dim < 2).collect();
        let remap: BTreeMap<usize, usize> = keep.iter().enumerate().map(|(new, &old)| (old, new)).collect();
        let grids = keep.iter().map(|&g| self.grids[g].clone()).collect();
        let interfaces = self
            .interfaces
            .iter()
            .filter(|i| remap.contains_key(&i.higher) && remap.contains_key(&i.lower))
            .map(|i| InterfaceMap { higher: remap[&i.higher], lower: remap[&i.lower], pairs: i.pairs.clone() })
            .collect();
        Ok(MixedDimGrid { domain: self.domain, grids, interfaces, tol: self.tol })
    }
}

fn default_tol(domain: &Rect, network_tol: f64) -> f64 {
    if network_tol > 0.0 {
        network_tol
    } else {
        1e-8 * domain.diagonal()
    }
}

/// Meshes the domain conforming to the network and builds the slit
/// mixed-dimensional grid.
pub fn build_mixed_grid(domain: &Rect, network: &Network2, size: &MeshSizeSpec) -> Result<MixedDimGrid> {
    let tol = default_tol(domain, network.tol);
    let dec = decompose_network_2d(domain, &network.fractures, tol)?;
    let mesh = triangulate(domain, &dec, size)?;
    assemble_mixed(domain, &mesh, &dec)
}

/// Builds a mixed-dimensional grid on a given polygon mesh whose edges
/// already follow every fracture.
pub fn mixed_grid_from_mesh(domain: &Rect, mesh: &PolyMesh, fractures: &[Segment2], tol: f64) -> Result<MixedDimGrid> {
    let dec = decompose_network_2d(domain, fractures, default_tol(domain, tol))?;
    assemble_mixed(domain, mesh, &dec)
}

/// Slits `mesh` along the decomposed network and creates the lower-dimensional
/// grids and interfaces.
pub fn assemble_mixed(domain: &Rect, mesh: &PolyMesh, dec: &DecomposedNetwork) -> Result<MixedDimGrid> {
    let tol = dec.tol.max(1e-10 * domain.diagonal());
    let edges = mesh.edges();
    let edge_index: BTreeMap<(usize, usize), usize> = edges.iter().enumerate().map(|(i, (k, _))| (*k, i)).collect();

    // mesh node of every network point
    let mut point_node = Vec::with_capacity(dec.points.len());
    for p in &dec.points {
        let n = (0..mesh.nodes.len())
            .find(|&n| (mesh.nodes[n] - p).norm() <= tol)
            .ok_or_else(|| Error::NonConforming(format!("network point {p:?} is not a mesh node")))?;
        point_node.push(n);
    }
    let node_point: BTreeMap<usize, usize> = point_node.iter().enumerate().map(|(i, &n)| (n, i)).collect();

    // node chains along each fracture
    let mut chains: Vec<(usize, Vec<usize>)> = Vec::new();
    let mut frac_edge: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for f in &dec.fractures {
        let t = f.end - f.start;
        let subs: Vec<_> = dec.segments.iter().filter(|s| s.fracture == f.id).collect();
        let mut on: Vec<(f64, usize)> = (0..mesh.nodes.len())
            .filter(|&n| {
                subs.iter()
                    .any(|s| point_segment_distance(&mesh.nodes[n], &dec.points[s.a], &dec.points[s.b]) <= tol)
            })
            .map(|n| ((mesh.nodes[n] - f.start).dot(&t), n))
            .collect();
        on.sort_by(|a, b| a.0.total_cmp(&b.0));
        let chain: Vec<usize> = on.into_iter().map(|x| x.1).collect();
        for w in chain.windows(2) {
            let key = (w[0].min(w[1]), w[0].max(w[1]));
            let e = edge_index.get(&key).ok_or_else(|| {
                Error::NonConforming(format!("fracture {} is not resolved by mesh edges near {:?}", f.id, mesh.nodes[w[0]]))
            })?;
            if edges[*e].1.len() != 2 {
                return Err(Error::NonConforming(format!("fracture {} runs along the domain boundary", f.id)));
            }
            if let Some(other) = frac_edge.insert(key, f.id) {
                return Err(Error::CoplanarOverlap(other, f.id));
            }
        }
        if chain.len() >= 2 {
            chains.push((f.id, chain));
        }
    }

    // slit 2D grid
    let mut g2 = Grid { dim: 2, nodes: mesh.nodes.clone(), cell_nodes: mesh.cells.clone(), ..Default::default() };
    let mut slit: BTreeMap<(usize, usize), [usize; 2]> = BTreeMap::new();
    for ((a, b), cells) in &edges {
        if frac_edge.contains_key(&(*a, *b)) {
            let f0 = g2.face_nodes.len();
            for &c in cells {
                g2.face_nodes.push(vec![*a, *b]);
                g2.face_cells.push([Some(c), None]);
                g2.face_tags.push(FaceTag::Fracture);
            }
            slit.insert((*a, *b), [f0, f0 + 1]);
            continue;
        }
        g2.face_nodes.push(vec![*a, *b]);
        g2.face_cells.push([Some(cells[0]), cells.get(1).copied()]);
        let tag = if cells.len() == 2 {
            FaceTag::Interior
        } else {
            domain
                .common_side(&mesh.nodes[*a], &mesh.nodes[*b], tol)
                .map(FaceTag::Domain)
                .ok_or_else(|| Error::NonConforming(format!("boundary edge ({a}, {b}) is not on the domain boundary")))?
        };
        g2.face_tags.push(tag);
    }
    g2.compute_geometry()?;

    let mut grids = vec![g2];
    let mut interfaces = Vec::new();
    // intersection faces of each 1D grid: (network point, face)
    let mut junction_faces: Vec<Vec<(usize, usize)>> = Vec::new();
    for (id, chain) in &chains {
        let frac = dec.fracture(*id).unwrap();
        let tangent = frac.tangent();
        let n = chain.len();
        let mut g = Grid {
            dim: 1,
            nodes: chain.iter().map(|&v| mesh.nodes[v]).collect(),
            cell_nodes: (0..n - 1).map(|k| vec![k, k + 1]).collect(),
            fracture_ids: vec![*id],
            tangent: Some(tangent),
            ..Default::default()
        };
        let mut junctions = Vec::new();
        for k in 0..n {
            let ip = node_point.get(&chain[k]).filter(|&&p| dec.point_parents[p].len() >= 2).copied();
            let end_tag = || match ip {
                Some(_) => FaceTag::Intersection,
                None => domain.side_of(&mesh.nodes[chain[k]], tol).map(FaceTag::Domain).unwrap_or(FaceTag::Tip),
            };
            let mut push = |g: &mut Grid, cells: [Option<usize>; 2], tag: FaceTag| {
                if tag == FaceTag::Intersection {
                    junctions.push((ip.unwrap(), g.face_nodes.len()));
                }
                g.face_nodes.push(vec![k]);
                g.face_cells.push(cells);
                g.face_tags.push(tag);
            };
            if k == 0 {
                push(&mut g, [Some(0), None], end_tag());
            } else if k == n - 1 {
                push(&mut g, [Some(n - 2), None], end_tag());
            } else if ip.is_some() {
                push(&mut g, [Some(k - 1), None], FaceTag::Intersection);
                push(&mut g, [Some(k), None], FaceTag::Intersection);
            } else {
                push(&mut g, [Some(k - 1), Some(k)], FaceTag::Interior);
            }
        }
        g.compute_geometry()?;
        let gi = grids.len();
        let normal = Point2::new(-tangent.y, tangent.x);
        let g2 = &grids[0];
        let mut pairs = Vec::with_capacity(2 * (n - 1));
        for k in 0..n - 1 {
            let key = (chain[k].min(chain[k + 1]), chain[k].max(chain[k + 1]));
            let mut sided: Vec<InterfacePair> = slit[&key]
                .iter()
                .map(|&f| {
                    let c = g2.face_cells[f][0].unwrap();
                    let s = if (g2.cell_centers[c] - g2.face_centers[f]).dot(&normal) > 0.0 { 1 } else { -1 };
                    InterfacePair { face: f, cell: k, side: s }
                })
                .collect();
            sided.sort_by_key(|p| -p.side);
            if sided[0].side == sided[1].side {
                return Err(Error::NonConforming(format!("fracture {id} cell {k} has both matrix faces on one side")));
            }
            pairs.extend(sided);
        }
        interfaces.push(InterfaceMap { higher: 0, lower: gi, pairs });
        grids.push(g);
        junction_faces.push(junctions);
    }

    for p in dec.intersection_points() {
        let gp = grids.len();
        let mut iface_list = Vec::new();
        for (k, junctions) in junction_faces.iter().enumerate() {
            let gi = k + 1;
            let tangent = grids[gi].tangent.unwrap();
            let pairs: Vec<InterfacePair> = junctions
                .iter()
                .filter(|(q, _)| *q == p)
                .map(|&(_, f)| InterfacePair {
                    face: f,
                    cell: 0,
                    side: if grids[gi].face_normals[f].dot(&tangent) > 0.0 { 1 } else { -1 },
                })
                .collect();
            if !pairs.is_empty() {
                iface_list.push(InterfaceMap { higher: gi, lower: gp, pairs });
            }
        }
        if iface_list.is_empty() {
            continue;
        }
        grids.push(Grid::point(dec.points[p], dec.point_parents[p].clone()));
        interfaces.extend(iface_list);
    }
    Ok(MixedDimGrid { domain: *domain, grids, interfaces, tol })
}
