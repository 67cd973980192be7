//! Cell-centred flux stencils for scalar diffusion: two-point (TPFA) and
//! multi-point O-method (MPFA).

use std::collections::BTreeMap;

use nalgebra::{DMatrix, Matrix2, Vector2};

use crate::linalg::{CsrMatrix, TripletBuilder};
use crate::mesh::Grid;
use crate::{Error, Result};

pub type Tensor2 = Matrix2<f64>;

/// Discrete condition attached to each face.
///
/// Boundary values are supplied separately (see [`FluxStencil`]): a Dirichlet
/// pressure, a Neumann total outward flux, or for Robin faces the pressure on
/// the far side of the resistance `coef` (a transmissibility).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FaceKind {
    Interior,
    Dirichlet,
    Neumann,
    Robin(f64),
}

/// Face fluxes (in the direction of the face normal) as a linear map:
/// `flux = cell_part * p + bound_part * v`, with `v` one value per face.
#[derive(Clone, Debug)]
pub struct FluxStencil {
    pub flux: CsrMatrix,
    pub bound_flux: CsrMatrix,
}

impl FluxStencil {
    pub fn apply(&self, p: &[f64], v: &[f64]) -> Vec<f64> {
        let mut out = self.flux.matvec(p);
        for (o, b) in out.iter_mut().zip(self.bound_flux.matvec(v)) {
            *o += b;
        }
        out
    }
}

/// Half transmissibility from cell `c` to face `f`, scaled by `scale` (specific volume).
pub fn half_transmissibility(grid: &Grid, c: usize, f: usize, k: &Tensor2, scale: f64) -> f64 {
    let d = grid.face_centers[f] - grid.cell_centers[c];
    let n = grid.face_normals[f];
    scale * (n.dot(&(k * d))).abs() / d.norm_squared()
}

fn check_lengths(grid: &Grid, k: &[Tensor2], sv: &[f64], kinds: &[FaceKind]) {
    assert_eq!(k.len(), grid.num_cells(), "one tensor per cell");
    assert_eq!(sv.len(), grid.num_cells(), "one specific volume per cell");
    assert_eq!(kinds.len(), grid.num_faces(), "one face kind per face");
}

/// Two-point flux approximation.
pub fn tpfa(grid: &Grid, k: &[Tensor2], sv: &[f64], kinds: &[FaceKind]) -> FluxStencil {
    check_lengths(grid, k, sv, kinds);
    let (nf, nc) = (grid.num_faces(), grid.num_cells());
    let mut flux = TripletBuilder::with_capacity(nf, nc, 2 * nf);
    let mut bound = TripletBuilder::with_capacity(nf, nf, nf);
    for f in 0..nf {
        let c0 = grid.face_cells[f][0].expect("face without cell");
        let a0 = half_transmissibility(grid, c0, f, &k[c0], sv[c0]);
        match (kinds[f], grid.face_cells[f][1]) {
            (FaceKind::Interior, Some(c1)) => {
                let a1 = half_transmissibility(grid, c1, f, &k[c1], sv[c1]);
                let t = harmonic(a0, a1);
                flux.push(f, c0, t);
                flux.push(f, c1, -t);
            }
            (FaceKind::Dirichlet, None) => {
                flux.push(f, c0, a0);
                bound.push(f, f, -a0);
            }
            (FaceKind::Neumann, None) => bound.push(f, f, 1.0),
            (FaceKind::Robin(r), None) => {
                let t = if r.is_infinite() { a0 } else { harmonic(a0, r) };
                flux.push(f, c0, t);
                bound.push(f, f, -t);
            }
            (kind, cells) => panic!("face {f}: kind {kind:?} inconsistent with cells {cells:?}"),
        }
    }
    FluxStencil { flux: flux.build(), bound_flux: bound.build() }
}

fn harmonic(a: f64, b: f64) -> f64 {
    if a + b > 0.0 {
        a * b / (a + b)
    } else {
        0.0
    }
}

/// Multi-point flux approximation (O-method, continuity points at face centres).
///
/// Reproduces linear pressure fields exactly for any homogeneous SPD tensor.
/// One-dimensional grids use the two-point scheme, which is exact there.
pub fn mpfa(grid: &Grid, k: &[Tensor2], sv: &[f64], kinds: &[FaceKind]) -> Result<FluxStencil> {
    check_lengths(grid, k, sv, kinds);
    if grid.dim < 2 {
        return Ok(tpfa(grid, k, sv, kinds));
    }
    let (nf, nc) = (grid.num_faces(), grid.num_cells());
    let mut node_faces: Vec<Vec<usize>> = vec![Vec::new(); grid.num_nodes()];
    for f in 0..nf {
        for &n in &grid.face_nodes[f] {
            node_faces[n].push(f);
        }
    }
    let mut flux = TripletBuilder::with_capacity(nf, nc, 8 * nf);
    let mut bound = TripletBuilder::with_capacity(nf, nf, 4 * nf);
    for (node, faces) in node_faces.iter().enumerate() {
        if faces.is_empty() {
            continue;
        }
        let local = InteractionRegion::new(grid, node, faces, k, sv, kinds)?;
        local.emit(&mut flux, &mut bound);
    }
    Ok(FluxStencil { flux: flux.build(), bound_flux: bound.build() })
}

/// Local problem around one node.
struct InteractionRegion<'a> {
    faces: &'a [usize],
    cells: Vec<usize>,
    /// Per subface: flux from the first cell as (row on face unknowns, local cell, coefficient on its pressure).
    subflux: Vec<(Vec<f64>, usize, f64)>,
    /// Face unknowns in terms of (cell pressures, boundary values).
    u_cells: DMatrix<f64>,
    u_bound: DMatrix<f64>,
}

impl<'a> InteractionRegion<'a> {
    fn new(
        grid: &Grid,
        node: usize,
        faces: &'a [usize],
        k: &[Tensor2],
        sv: &[f64],
        kinds: &[FaceKind],
    ) -> Result<Self> {
        let m = faces.len();
        let face_pos: BTreeMap<usize, usize> = faces.iter().enumerate().map(|(i, &f)| (f, i)).collect();
        let mut cells: Vec<usize> = Vec::new();
        for &f in faces {
            for c in grid.face_cells[f].iter().flatten() {
                if !cells.contains(c) {
                    cells.push(*c);
                }
            }
        }
        let cell_pos: BTreeMap<usize, usize> = cells.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        let nloc = cells.len();
        // flux through subface f computed from cell c: a · (u_loc - p_c), u_loc the two face unknowns of c
        let mut cell_flux: BTreeMap<(usize, usize), ([usize; 2], Vector2<f64>)> = BTreeMap::new();
        for &c in &cells {
            let cf: Vec<usize> =
                grid.cell_faces[c].iter().map(|&(f, _)| f).filter(|f| face_pos.contains_key(f)).collect();
            if cf.len() != 2 {
                return Err(Error::SingularLocalSystem { node });
            }
            let xc = grid.cell_centers[c];
            let d = Matrix2::from_rows(&[
                (grid.face_centers[cf[0]] - xc).transpose(),
                (grid.face_centers[cf[1]] - xc).transpose(),
            ]);
            let dinv = d.try_inverse().ok_or(Error::SingularLocalSystem { node })?;
            for &f in &cf {
                let nsub = grid.face_normals[f] * (0.5 * sv[c]);
                let a = -(nsub.transpose() * k[c] * dinv).transpose();
                cell_flux.insert((f, c), ([face_pos[&cf[0]], face_pos[&cf[1]]], a));
            }
        }
        let nb = m;
        let mut mat = DMatrix::<f64>::zeros(m, m);
        let mut rhs_c = DMatrix::<f64>::zeros(m, nloc);
        let mut rhs_b = DMatrix::<f64>::zeros(m, nb);
        // adds +/- (flux from cell c through subface f) to equation row
        let add_flux = |row: usize, f: usize, c: usize, s: f64, mat: &mut DMatrix<f64>, rhs_c: &mut DMatrix<f64>| {
            let (idx, a) = cell_flux[&(f, c)];
            mat[(row, idx[0])] += s * a[0];
            mat[(row, idx[1])] += s * a[1];
            rhs_c[(row, cell_pos[&c])] += s * (a[0] + a[1]);
        };
        let mut subflux = Vec::with_capacity(m);
        for (i, &f) in faces.iter().enumerate() {
            let c0 = grid.face_cells[f][0].unwrap();
            let frac = 1.0 / grid.face_nodes[f].len() as f64;
            match kinds[f] {
                FaceKind::Interior => {
                    let c1 = grid.face_cells[f][1].expect("interior face with one cell");
                    add_flux(i, f, c0, 1.0, &mut mat, &mut rhs_c);
                    add_flux(i, f, c1, -1.0, &mut mat, &mut rhs_c);
                }
                FaceKind::Dirichlet => {
                    mat[(i, i)] = 1.0;
                    rhs_b[(i, i)] = 1.0;
                }
                FaceKind::Neumann => {
                    add_flux(i, f, c0, 1.0, &mut mat, &mut rhs_c);
                    rhs_b[(i, i)] = frac;
                }
                FaceKind::Robin(r) => {
                    if r.is_infinite() {
                        mat[(i, i)] = 1.0;
                        rhs_b[(i, i)] = 1.0;
                    } else {
                        // flux = r_sub (u_f - v)
                        add_flux(i, f, c0, 1.0, &mut mat, &mut rhs_c);
                        mat[(i, i)] -= r * frac;
                        rhs_b[(i, i)] = -r * frac;
                    }
                }
            }
            let (idx, a) = cell_flux[&(f, c0)];
            let mut row = vec![0.0; m];
            row[idx[0]] += a[0];
            row[idx[1]] += a[1];
            subflux.push((row, cell_pos[&c0], -(a[0] + a[1])));
        }
        // mat u = rhs_c p + rhs_b v  (rhs_c above holds the coefficient moved to the left side)
        let lu = mat.lu();
        let u_cells = lu.solve(&rhs_c).ok_or(Error::SingularLocalSystem { node })?;
        let u_bound = lu.solve(&rhs_b).ok_or(Error::SingularLocalSystem { node })?;
        if u_cells.iter().chain(u_bound.iter()).any(|v| !v.is_finite()) {
            return Err(Error::SingularLocalSystem { node });
        }
        Ok(Self { faces, cells, subflux, u_cells, u_bound })
    }

    fn emit(&self, flux: &mut TripletBuilder, bound: &mut TripletBuilder) {
        let m = self.faces.len();
        for (i, &f) in self.faces.iter().enumerate() {
            let (row, own, own_coef) = &self.subflux[i];
            let mut cell_coef = vec![0.0; self.cells.len()];
            let mut bound_coef = vec![0.0; m];
            cell_coef[*own] += own_coef;
            for j in 0..m {
                if row[j] == 0.0 {
                    continue;
                }
                for (c, v) in cell_coef.iter_mut().enumerate() {
                    *v += row[j] * self.u_cells[(j, c)];
                }
                for (b, v) in bound_coef.iter_mut().enumerate() {
                    *v += row[j] * self.u_bound[(j, b)];
                }
            }
            for (c, &v) in cell_coef.iter().enumerate() {
                if v != 0.0 {
                    flux.push(f, self.cells[c], v);
                }
            }
            for (b, &v) in bound_coef.iter().enumerate() {
                if v != 0.0 {
                    bound.push(f, self.faces[b], v);
                }
            }
        }
    }
}
