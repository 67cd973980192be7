use super::assemble::{DiffusionGridData, DiffusionOperator, Scheme};
use super::params::{specific_volumes, FlowProblem};
use crate::linalg::{self, CsrMatrix, ProblemHint, SolverChoice, SparseSystem};
use crate::mesh::MixedDimGrid;
use crate::{Error, Result};

/// Pressures, face fluxes and interface fluxes of a flow solve.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowSolution {
    pub pressure: Vec<Vec<f64>>,
    /// Per grid, flux across each face in the direction of its normal (m³/s).
    pub face_flux: Vec<Vec<f64>>,
    /// Per interface, flux from the higher to the lower grid for each pair (m³/s).
    pub interface_flux: Vec<Vec<f64>>,
}

/// Interface law: flux leaving the higher dimension through an interface of
/// measure `measure` with effective normal transmissivity `kn`.
pub fn couple_interface(kn: f64, measure: f64, p_higher: f64, p_lower: f64) -> f64 {
    kn * measure * (p_higher - p_lower)
}

pub fn hint(scheme: Scheme) -> ProblemHint {
    match scheme {
        Scheme::Tpfa => ProblemHint::FlowTpfa,
        Scheme::Mpfa => ProblemHint::FlowMpfa,
    }
}

/// Builds the diffusion operator for the flow problem.
pub fn flow_operator(mdg: &MixedDimGrid, problem: &FlowProblem, scheme: Scheme) -> Result<DiffusionOperator> {
    problem.validate(mdg)?;
    let sv = specific_volumes(mdg, &problem.apertures());
    let data: Vec<DiffusionGridData> = problem
        .grids
        .iter()
        .zip(&sv)
        .map(|(p, s)| DiffusionGridData { tensor: &p.permeability, specific_volume: s, bc: &p.bc })
        .collect();
    let normal: Vec<Vec<f64>> = problem.interfaces.iter().map(|i| i.normal_transmissivity.clone()).collect();
    DiffusionOperator::new(mdg, &data, &normal, scheme)
}

/// Accumulation coefficients `c_f φ V s` per global dof.
pub fn accumulation(mdg: &MixedDimGrid, problem: &FlowProblem) -> Vec<f64> {
    let sv = specific_volumes(mdg, &problem.apertures());
    let mut out = Vec::with_capacity(mdg.num_cells());
    for (g, grid) in mdg.grids.iter().enumerate() {
        let p = &problem.grids[g];
        for c in 0..grid.num_cells() {
            out.push(p.compressibility * p.porosity[c] * grid.cell_volumes[c] * sv[g][c]);
        }
    }
    out
}

fn sources(problem: &FlowProblem) -> Vec<f64> {
    problem.grids.iter().flat_map(|p| p.source.iter().copied()).collect()
}

/// Incompressible system. Without Dirichlet data the constant null space is
/// removed by pinning the first unknown when the data are compatible.
pub fn assemble_global(mdg: &MixedDimGrid, problem: &FlowProblem, scheme: Scheme) -> Result<(SparseSystem, DiffusionOperator)> {
    let op = flow_operator(mdg, problem, scheme)?;
    let mut rhs = op.rhs.clone();
    for (r, w) in rhs.iter_mut().zip(sources(problem)) {
        *r += w;
    }
    let mut matrix = op.matrix.clone();
    if !op.has_dirichlet {
        let net = sources(problem).iter().sum::<f64>() + op.neumann_inflow();
        let scale = sources(problem).iter().map(|w| w.abs()).sum::<f64>()
            + op.bound_values.iter().flatten().map(|v| v.abs()).sum::<f64>();
        if net.abs() > 1e-10 * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::SingularSystem(format!(
                "pure Neumann problem with incompatible data (net inflow {net:e})"
            )));
        }
        log::warn!("flow problem has no Dirichlet boundary; pressure fixed to zero in the first cell");
        matrix = pin_first(&matrix);
        rhs[0] = 0.0;
    }
    Ok((SparseSystem::new(matrix, rhs, op.dof.clone()), op))
}

fn pin_first(a: &CsrMatrix) -> CsrMatrix {
    let mut t = Vec::with_capacity(a.nnz());
    for i in 0..a.nrows() {
        for (j, v) in a.row_iter(i) {
            if i != 0 {
                t.push((i, j, v));
            }
        }
    }
    t.push((0, 0, 1.0));
    CsrMatrix::from_triplets(a.nrows(), a.ncols(), t)
}

fn finish(mdg: &MixedDimGrid, op: &DiffusionOperator, x: &[f64]) -> FlowSolution {
    let pressure = op.dof.split(x).into_iter().map(|s| s.to_vec()).collect();
    let face_flux = op.face_fluxes(x);
    let interface_flux = DiffusionOperator::interface_fluxes(mdg, &face_flux);
    FlowSolution { pressure, face_flux, interface_flux }
}

/// Steady incompressible flow.
pub fn solve_incompressible(
    mdg: &MixedDimGrid,
    problem: &FlowProblem,
    scheme: Scheme,
    solver: Option<SolverChoice>,
) -> Result<FlowSolution> {
    let (sys, op) = assemble_global(mdg, problem, scheme)?;
    let choice = linalg::choose(&sys, hint(scheme), solver);
    let x = linalg::solve(&sys, &choice).map_err(|e| match e {
        Error::SingularMatrix { row } => Error::SingularSystem(format!("zero pivot at row {row}")),
        e => e,
    })?;
    Ok(finish(mdg, &op, &x))
}

/// One backward Euler step of the slightly compressible equation.
pub fn step_compressible(
    mdg: &MixedDimGrid,
    problem: &FlowProblem,
    scheme: Scheme,
    dt: f64,
    previous: &[Vec<f64>],
    solver: Option<SolverChoice>,
) -> Result<FlowSolution> {
    assert!(dt > 0.0, "time step must be positive");
    let op = flow_operator(mdg, problem, scheme)?;
    let m = accumulation(mdg, problem);
    if !op.has_dirichlet && m.iter().all(|&x| x == 0.0) {
        return Err(Error::SingularSystem("no accumulation and no Dirichlet boundary".into()));
    }
    let p0: Vec<f64> = previous.iter().flatten().copied().collect();
    assert_eq!(p0.len(), m.len(), "previous state does not match the grid");
    let diag: Vec<f64> = m.iter().map(|x| x / dt).collect();
    let matrix = op.matrix.add_diagonal(&diag);
    let rhs: Vec<f64> = op
        .rhs
        .iter()
        .zip(sources(problem))
        .zip(diag.iter().zip(&p0))
        .map(|((r, w), (d, p))| r + w + d * p)
        .collect();
    // solve for the increment over the previous state, whose right-hand side
    // is the imbalance rather than the much larger stored mass
    let imbalance = linalg::residual(&matrix, &p0, &rhs);
    let sys = SparseSystem::new(matrix, imbalance, op.dof.clone());
    let choice = linalg::choose(&sys, hint(scheme), solver);
    let dx = linalg::solve(&sys, &choice)?;
    let x: Vec<f64> = p0.iter().zip(dx).map(|(p, d)| p + d).collect();
    Ok(finish(mdg, &op, &x))
}

/// Per-cell mass balance residual `accumulation + Σ outflux - interface inflow - source`,
/// flattened in dof order. `previous` is `(state, dt)` for a compressible step.
pub fn mass_balance_residual(
    mdg: &MixedDimGrid,
    problem: &FlowProblem,
    sol: &FlowSolution,
    previous: Option<(&[Vec<f64>], f64)>,
) -> Vec<f64> {
    let m = accumulation(mdg, problem);
    let mut out = Vec::with_capacity(mdg.num_cells());
    let mut inflow: Vec<Vec<f64>> = mdg.grids.iter().map(|g| vec![0.0; g.num_cells()]).collect();
    for (i, iface) in mdg.interfaces.iter().enumerate() {
        for (k, p) in iface.pairs.iter().enumerate() {
            inflow[iface.lower][p.cell] += sol.interface_flux[i][k];
        }
    }
    let mut idx = 0;
    for (g, grid) in mdg.grids.iter().enumerate() {
        for c in 0..grid.num_cells() {
            let div: f64 = grid.cell_faces[c].iter().map(|&(f, s)| s * sol.face_flux[g][f]).sum();
            let acc = match previous {
                Some((p0, dt)) => m[idx] * (sol.pressure[g][c] - p0[g][c]) / dt,
                None => 0.0,
            };
            out.push(acc + div - inflow[g][c] - problem.grids[g].source[c]);
            idx += 1;
        }
    }
    out
}
