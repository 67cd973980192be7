//! Single-phase Darcy flow on mixed-dimensional grids: two-point and
//! multi-point finite volumes, interface coupling between dimensions,
//! steady and slightly compressible solves.

mod assemble;
mod params;
mod solve;
mod stencil;

pub use assemble::{is_outer_boundary, DiffusionGridData, DiffusionOperator, Scheme};
pub use params::{cubic_law, specific_volumes, Bc, FlowParameters, FlowProblem, InterfaceParameters};
pub use solve::{
    accumulation, assemble_global, couple_interface, flow_operator, hint, mass_balance_residual, solve_incompressible,
    step_compressible, FlowSolution,
};
pub use stencil::{half_transmissibility, mpfa, tpfa, FaceKind, FluxStencil, Tensor2};

/// Grid-level stencil from flow parameters.
pub fn tpfa_discretize(grid: &crate::mesh::Grid, params: &FlowParameters) -> FluxStencil {
    let kinds = boundary_kinds(grid, params);
    let sv = grid_specific_volume(grid, params);
    tpfa(grid, &params.permeability, &sv, &kinds)
}

/// Grid-level MPFA stencil from flow parameters.
pub fn mpfa_discretize(grid: &crate::mesh::Grid, params: &FlowParameters) -> crate::Result<FluxStencil> {
    let kinds = boundary_kinds(grid, params);
    let sv = grid_specific_volume(grid, params);
    mpfa(grid, &params.permeability, &sv, &kinds)
}

fn grid_specific_volume(grid: &crate::mesh::Grid, params: &FlowParameters) -> Vec<f64> {
    if grid.dim == 2 {
        vec![1.0; grid.num_cells()]
    } else {
        params.aperture.clone()
    }
}

/// Face kinds of a standalone grid; uncoupled boundary faces default to no-flow.
pub fn boundary_kinds(grid: &crate::mesh::Grid, params: &FlowParameters) -> Vec<FaceKind> {
    (0..grid.num_faces())
        .map(|f| {
            if !grid.is_boundary_face(f) {
                FaceKind::Interior
            } else {
                match params.bc[f] {
                    Some(Bc::Dirichlet(_)) => FaceKind::Dirichlet,
                    _ => FaceKind::Neumann,
                }
            }
        })
        .collect()
}

/// Boundary values matching [`boundary_kinds`].
pub fn boundary_values(grid: &crate::mesh::Grid, params: &FlowParameters) -> Vec<f64> {
    (0..grid.num_faces())
        .map(|f| match params.bc[f] {
            Some(Bc::Dirichlet(v)) | Some(Bc::Neumann(v)) => v,
            None => 0.0,
        })
        .collect()
}
