use crate::linalg::{CsrMatrix, TripletBuilder};
use crate::mesh::{Grid, InterfaceMap};

/// Advected quantity per face, `q · T_upstream = cell * T + bound`.
#[derive(Clone, Debug)]
pub struct AdvectionStencil {
    pub cell: CsrMatrix,
    pub bound: Vec<f64>,
}

impl AdvectionStencil {
    pub fn apply(&self, t: &[f64]) -> Vec<f64> {
        let mut out = self.cell.matvec(t);
        for (o, b) in out.iter_mut().zip(&self.bound) {
            *o += b;
        }
        out
    }
}

/// Upwind stencil for face fluxes `flux` (along the face normals).
/// Inflow through a boundary face carries `inflow[f]` when given, otherwise
/// the temperature of the adjacent cell.
pub fn upwind_discretize(grid: &Grid, flux: &[f64], inflow: &[Option<f64>]) -> AdvectionStencil {
    assert_eq!(flux.len(), grid.num_faces(), "one flux per face");
    assert_eq!(inflow.len(), grid.num_faces(), "one inflow entry per face");
    let mut cell = TripletBuilder::with_capacity(grid.num_faces(), grid.num_cells(), grid.num_faces());
    let mut bound = vec![0.0; grid.num_faces()];
    for (f, &q) in flux.iter().enumerate() {
        if q == 0.0 {
            continue;
        }
        let c0 = grid.face_cells[f][0].expect("face without cell");
        match grid.face_cells[f][1] {
            Some(c1) => cell.push(f, if q > 0.0 { c0 } else { c1 }, q),
            None => match inflow[f] {
                Some(tb) if q < 0.0 => bound[f] = q * tb,
                _ => cell.push(f, c0, q),
            },
        }
    }
    AdvectionStencil { cell: cell.build(), bound }
}

/// Advective exchange through one interface pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InterfaceAdvection {
    /// Coupled face of the higher grid.
    pub face: usize,
    pub higher_cell: usize,
    pub lower_cell: usize,
    /// Flux from the higher to the lower grid.
    pub flux: f64,
    pub from_higher: bool,
}

impl InterfaceAdvection {
    /// `flux · T_upstream`, leaving the higher cell and entering the lower one.
    pub fn value(&self, t_higher: f64, t_lower: f64) -> f64 {
        self.flux * if self.from_higher { t_higher } else { t_lower }
    }
}

/// Upwinds each pair of `iface` by the sign of its interface flux.
pub fn interface_advect(higher: &Grid, iface: &InterfaceMap, interface_flux: &[f64]) -> Vec<InterfaceAdvection> {
    assert_eq!(interface_flux.len(), iface.pairs.len(), "one flux per interface pair");
    iface
        .pairs
        .iter()
        .zip(interface_flux)
        .map(|(p, &q)| InterfaceAdvection {
            face: p.face,
            higher_cell: higher.face_cells[p.face][0].expect("coupled face without cell"),
            lower_cell: p.cell,
            flux: q,
            from_higher: q >= 0.0,
        })
        .collect()
}
