//! Global assembly of a scalar diffusion operator on a mixed-dimensional grid.
//! Used for Darcy flow and for heat conduction.

use super::params::Bc;
use super::stencil::{mpfa, tpfa, FaceKind, FluxStencil, Tensor2};
use crate::linalg::{CsrMatrix, DofMap, TripletBuilder};
use crate::mesh::{FaceTag, MixedDimGrid};
use crate::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Scheme {
    #[default]
    Tpfa,
    Mpfa,
}

impl std::str::FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "tpfa" => Ok(Scheme::Tpfa),
            "mpfa" => Ok(Scheme::Mpfa),
            other => Err(format!("unknown scheme '{other}' (expected tpfa or mpfa)")),
        }
    }
}

/// Coefficients of a diffusion problem on one grid.
#[derive(Clone, Copy, Debug)]
pub struct DiffusionGridData<'a> {
    pub tensor: &'a [Tensor2],
    pub specific_volume: &'a [f64],
    pub bc: &'a [Option<Bc>],
}

/// Assembled operator `A x = rhs` for cell-wise balance
/// `Σ outward fluxes - Σ interface inflow = source`, without the source.
#[derive(Clone, Debug)]
pub struct DiffusionOperator {
    pub dof: DofMap,
    pub matrix: CsrMatrix,
    /// Boundary contributions moved to the right-hand side.
    pub rhs: Vec<f64>,
    pub stencils: Vec<FluxStencil>,
    pub kinds: Vec<Vec<FaceKind>>,
    /// Known boundary values per face (Dirichlet or Neumann); zero elsewhere.
    pub bound_values: Vec<Vec<f64>>,
    /// Lower-dimensional cell behind each coupled face.
    pub coupled: Vec<Vec<Option<(usize, usize)>>>,
    pub has_dirichlet: bool,
}

impl DiffusionOperator {
    /// `normal` holds one normal transmissivity per interface pair.
    pub fn new(
        mdg: &MixedDimGrid,
        data: &[DiffusionGridData],
        normal: &[Vec<f64>],
        scheme: Scheme,
    ) -> Result<Self> {
        let dof = DofMap::new(&mdg.cells_per_grid(), 1);
        let mut kinds = Vec::with_capacity(mdg.num_grids());
        let mut bound_values = Vec::with_capacity(mdg.num_grids());
        let mut coupled = Vec::with_capacity(mdg.num_grids());
        let mut has_dirichlet = false;
        for (g, grid) in mdg.grids.iter().enumerate() {
            let couplings = mdg.face_couplings(g);
            let mut k = vec![FaceKind::Interior; grid.num_faces()];
            let mut v = vec![0.0; grid.num_faces()];
            let mut cpl = vec![None; grid.num_faces()];
            for f in 0..grid.num_faces() {
                if !grid.is_boundary_face(f) {
                    continue;
                }
                if let Some((i, p)) = couplings[f] {
                    let iface = &mdg.interfaces[i];
                    let pair = iface.pairs[p];
                    let c = grid.boundary_cell(f);
                    let r = normal[i][p] * grid.face_areas[f] * data[g].specific_volume[c];
                    k[f] = FaceKind::Robin(r);
                    cpl[f] = Some((iface.lower, pair.cell));
                    continue;
                }
                match data[g].bc[f] {
                    Some(Bc::Dirichlet(x)) if !grid.face_tags[f].is_interface() => {
                        k[f] = FaceKind::Dirichlet;
                        v[f] = x;
                        has_dirichlet = true;
                    }
                    Some(Bc::Neumann(x)) => {
                        k[f] = FaceKind::Neumann;
                        v[f] = x;
                    }
                    _ => k[f] = FaceKind::Neumann,
                }
            }
            kinds.push(k);
            bound_values.push(v);
            coupled.push(cpl);
        }
        let mut stencils = Vec::with_capacity(mdg.num_grids());
        for (g, grid) in mdg.grids.iter().enumerate() {
            let s = match scheme {
                Scheme::Tpfa => tpfa(grid, data[g].tensor, data[g].specific_volume, &kinds[g]),
                Scheme::Mpfa => mpfa(grid, data[g].tensor, data[g].specific_volume, &kinds[g])?,
            };
            stencils.push(s);
        }
        let n = dof.len();
        let mut a = TripletBuilder::with_capacity(n, n, 8 * n);
        let mut rhs = vec![0.0; n];
        for (g, grid) in mdg.grids.iter().enumerate() {
            let st = &stencils[g];
            for f in 0..grid.num_faces() {
                let mut rows: Vec<(usize, f64)> = Vec::with_capacity(3);
                if let Some(c) = grid.face_cells[f][0] {
                    rows.push((dof.index(g, c, 0), 1.0));
                }
                if let Some(c) = grid.face_cells[f][1] {
                    rows.push((dof.index(g, c, 0), -1.0));
                }
                if let Some((gl, cl)) = coupled[g][f] {
                    rows.push((dof.index(gl, cl, 0), -1.0));
                }
                for &(row, s) in &rows {
                    for (c, val) in st.flux.row_iter(f) {
                        a.push(row, dof.index(g, c, 0), s * val);
                    }
                    for (fb, val) in st.bound_flux.row_iter(f) {
                        match coupled[g][fb] {
                            Some((gl, cl)) => a.push(row, dof.index(gl, cl, 0), s * val),
                            None => rhs[row] -= s * val * bound_values[g][fb],
                        }
                    }
                }
            }
        }
        Ok(Self { dof, matrix: a.build(), rhs, stencils, kinds, bound_values, coupled, has_dirichlet })
    }

    /// Face fluxes of every grid for the global solution `x`.
    pub fn face_fluxes(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let parts = self.dof.split(x);
        (0..self.stencils.len())
            .map(|g| {
                let mut v = self.bound_values[g].clone();
                for (f, c) in self.coupled[g].iter().enumerate() {
                    if let Some((gl, cl)) = c {
                        v[f] = parts[*gl][*cl];
                    }
                }
                self.stencils[g].apply(parts[g], &v)
            })
            .collect()
    }

    /// Interface fluxes (from higher to lower grid) per pair, read off the coupled faces.
    pub fn interface_fluxes(mdg: &MixedDimGrid, face_flux: &[Vec<f64>]) -> Vec<Vec<f64>> {
        mdg.interfaces.iter().map(|i| i.pairs.iter().map(|p| face_flux[i.higher][p.face]).collect()).collect()
    }

    /// Net Neumann inflow over the whole boundary.
    pub fn neumann_inflow(&self) -> f64 {
        let mut s = 0.0;
        for (k, v) in self.kinds.iter().zip(&self.bound_values) {
            for (kind, val) in k.iter().zip(v) {
                if *kind == FaceKind::Neumann {
                    s -= val;
                }
            }
        }
        s
    }
}

/// Faces that carry physical boundary conditions (domain sides and fracture tips).
pub fn is_outer_boundary(tag: FaceTag) -> bool {
    matches!(tag, FaceTag::Domain(_) | FaceTag::Tip)
}
