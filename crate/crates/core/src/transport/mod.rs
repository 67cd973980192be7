//! Heat transport by advection and conduction on mixed-dimensional grids,
//! driven by precomputed Darcy fluxes (one-way coupling).

mod upwind;

pub use upwind::{interface_advect, upwind_discretize, AdvectionStencil, InterfaceAdvection};

use crate::flow::{specific_volumes, Bc, DiffusionGridData, DiffusionOperator, FlowProblem, Scheme, Tensor2};
use crate::linalg::{self, CsrMatrix, ProblemHint, SolverChoice, SparseSystem, TripletBuilder};
use crate::mesh::MixedDimGrid;
use crate::{Error, Result};

/// Per-grid thermal data. `bc` is per face: Dirichlet temperature (K) or
/// outward Neumann heat flux (W).
#[derive(Clone, Debug, PartialEq)]
pub struct TransportParameters {
    pub heat_capacity_eff: Vec<f64>,
    pub conductivity: Vec<Tensor2>,
    pub source: Vec<f64>,
    pub bc: Vec<Option<Bc>>,
}

impl TransportParameters {
    pub fn unit(cells: usize, faces: usize) -> Self {
        Self {
            heat_capacity_eff: vec![1.0; cells],
            conductivity: vec![Tensor2::identity(); cells],
            source: vec![0.0; cells],
            bc: vec![None; faces],
        }
    }

    pub fn set_isotropic_conductivity(&mut self, c: f64) {
        self.conductivity.iter_mut().for_each(|t| *t = Tensor2::identity() * c);
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TransportProblem {
    pub grids: Vec<TransportParameters>,
    /// Volumetric heat capacity of the fluid, (ρc)_f.
    pub heat_capacity_fluid: f64,
    /// Apertures per grid (used for specific volumes); ones in the matrix.
    pub apertures: Vec<Vec<f64>>,
    /// Thermal normal transmissivity per interface pair.
    pub thermal_normal: Vec<Vec<f64>>,
    pub conduction: Scheme,
}

impl TransportProblem {
    /// Unit parameters with apertures one.
    pub fn unit(mdg: &MixedDimGrid) -> Self {
        let apertures = mdg.grids.iter().map(|g| vec![1.0; g.num_cells()]).collect();
        Self::with_apertures(mdg, apertures)
    }

    /// Unit parameters with the apertures of a flow problem.
    pub fn from_flow(mdg: &MixedDimGrid, flow: &FlowProblem) -> Self {
        Self::with_apertures(mdg, flow.apertures())
    }

    fn with_apertures(mdg: &MixedDimGrid, apertures: Vec<Vec<f64>>) -> Self {
        let grids = mdg.grids.iter().map(|g| TransportParameters::unit(g.num_cells(), g.num_faces())).collect();
        let mut p =
            Self { grids, heat_capacity_fluid: 1.0, apertures, thermal_normal: Vec::new(), conduction: Scheme::Tpfa };
        p.reset_thermal_normal(mdg);
        p
    }

    /// Default `2 c / a` from the lower-dimensional cell of every pair.
    pub fn reset_thermal_normal(&mut self, mdg: &MixedDimGrid) {
        self.thermal_normal = mdg
            .interfaces
            .iter()
            .map(|iface| {
                iface
                    .pairs
                    .iter()
                    .map(|p| {
                        2.0 * self.grids[iface.lower].conductivity[p.cell][(0, 0)] / self.apertures[iface.lower][p.cell]
                    })
                    .collect()
            })
            .collect();
    }

    pub fn validate(&self, mdg: &MixedDimGrid) -> Result<()> {
        let bad = |m: String| Err(Error::MissingParameters(m));
        if self.grids.len() != mdg.num_grids() || self.apertures.len() != mdg.num_grids() {
            return bad("transport parameters do not match the grid count".into());
        }
        if !(self.heat_capacity_fluid > 0.0) {
            return bad("fluid heat capacity must be positive".into());
        }
        for (g, grid) in mdg.grids.iter().enumerate() {
            let p = &self.grids[g];
            let nc = grid.num_cells();
            if p.heat_capacity_eff.len() != nc
                || p.conductivity.len() != nc
                || p.source.len() != nc
                || p.bc.len() != grid.num_faces()
                || self.apertures[g].len() != nc
            {
                return bad(format!("transport parameters of grid {g} do not match its size"));
            }
            if p.heat_capacity_eff.iter().any(|&c| !(c > 0.0)) {
                return bad(format!("grid {g}: heat capacities must be positive"));
            }
            if p.conductivity.iter().any(|k| !is_spsd(k)) {
                return bad(format!("grid {g}: conductivity must be symmetric positive semi-definite"));
            }
            if self.apertures[g].iter().any(|&a| !(a > 0.0)) {
                return bad(format!("grid {g}: apertures must be positive"));
            }
        }
        if self.thermal_normal.len() != mdg.interfaces.len()
            || self.thermal_normal.iter().zip(&mdg.interfaces).any(|(t, i)| t.len() != i.pairs.len())
            || self.thermal_normal.iter().flatten().any(|&t| !(t >= 0.0))
        {
            return bad("thermal normal transmissivities".into());
        }
        Ok(())
    }
}

/// Zero conductivity is allowed for advection-only runs with two-point conduction.
fn is_spsd(k: &Tensor2) -> bool {
    (k[(0, 1)] - k[(1, 0)]).abs() <= 1e-12 * k.norm() && k[(0, 0)] >= 0.0 && k[(1, 1)] >= 0.0 && k.determinant() >= 0.0
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TimeScheme {
    ExplicitEuler,
    ImplicitEuler,
    CrankNicolson,
}

impl TimeScheme {
    /// Weight of the new time level.
    pub fn theta(self) -> f64 {
        match self {
            TimeScheme::ExplicitEuler => 0.0,
            TimeScheme::ImplicitEuler => 1.0,
            TimeScheme::CrankNicolson => 0.5,
        }
    }
}

impl std::str::FromStr for TimeScheme {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "explicit" | "expliciteuler" => Ok(TimeScheme::ExplicitEuler),
            "implicit" | "impliciteuler" => Ok(TimeScheme::ImplicitEuler),
            "cn" | "cranknicolson" => Ok(TimeScheme::CrankNicolson),
            _ => Err(format!("unknown time scheme '{s}' (expected explicit, implicit or crank-nicolson)")),
        }
    }
}

pub const DEFAULT_CFL_SAFETY: f64 = 0.9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeStepper {
    pub scheme: TimeScheme,
    pub dt: f64,
    pub t_end: f64,
    /// Fraction of the explicit stability limit allowed.
    pub cfl_safety: f64,
    /// Linear solver for implicit steps; `None` selects automatically.
    pub solver: Option<SolverChoice>,
}

impl TimeStepper {
    pub fn new(scheme: TimeScheme, dt: f64, t_end: f64) -> Self {
        assert!(dt > 0.0, "time step must be positive");
        Self { scheme, dt, t_end, cfl_safety: DEFAULT_CFL_SAFETY, solver: None }
    }
}

/// Linear semi-discrete system `M dT/dt + A T = b` for one flux field.
#[derive(Clone, Debug)]
pub struct TransportOperator {
    pub conduction: DiffusionOperator,
    /// Advective contributions to the balance, energy per unit (ρc)_f.
    pub advection: CsrMatrix,
    pub advection_rhs: Vec<f64>,
    pub stencils: Vec<AdvectionStencil>,
    pub interface_advection: Vec<Vec<InterfaceAdvection>>,
    pub mass: Vec<f64>,
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    pub source: Vec<f64>,
    pub heat_capacity_fluid: f64,
}

impl TransportOperator {
    pub fn new(mdg: &MixedDimGrid, problem: &TransportProblem, face_flux: &[Vec<f64>]) -> Result<Self> {
        problem.validate(mdg)?;
        assert_eq!(face_flux.len(), mdg.num_grids(), "one flux vector per grid");
        let sv = specific_volumes(mdg, &problem.apertures);
        let data: Vec<DiffusionGridData> = problem
            .grids
            .iter()
            .zip(&sv)
            .map(|(p, s)| DiffusionGridData { tensor: &p.conductivity, specific_volume: s, bc: &p.bc })
            .collect();
        let conduction = DiffusionOperator::new(mdg, &data, &problem.thermal_normal, problem.conduction)?;
        let dof = &conduction.dof;
        let n = dof.len();
        let rho = problem.heat_capacity_fluid;

        let mut stencils = Vec::with_capacity(mdg.num_grids());
        let mut adv = TripletBuilder::with_capacity(n, n, 4 * n);
        let mut adv_rhs = vec![0.0; n];
        for (g, grid) in mdg.grids.iter().enumerate() {
            let inflow: Vec<Option<f64>> = problem.grids[g]
                .bc
                .iter()
                .map(|b| match b {
                    Some(Bc::Dirichlet(t)) => Some(*t),
                    _ => None,
                })
                .collect();
            let st = upwind_discretize(grid, &face_flux[g], &inflow);
            for f in 0..grid.num_faces() {
                if conduction.coupled[g][f].is_some() {
                    continue;
                }
                let mut rows = Vec::with_capacity(2);
                if let Some(c) = grid.face_cells[f][0] {
                    rows.push((dof.index(g, c, 0), 1.0));
                }
                if let Some(c) = grid.face_cells[f][1] {
                    rows.push((dof.index(g, c, 0), -1.0));
                }
                for &(row, s) in &rows {
                    for (c, v) in st.cell.row_iter(f) {
                        adv.push(row, dof.index(g, c, 0), s * v);
                    }
                    adv_rhs[row] -= s * st.bound[f];
                }
            }
            stencils.push(st);
        }
        let interface_flux = DiffusionOperator::interface_fluxes(mdg, face_flux);
        let mut interface_advection = Vec::with_capacity(mdg.interfaces.len());
        for (i, iface) in mdg.interfaces.iter().enumerate() {
            let list = interface_advect(&mdg.grids[iface.higher], iface, &interface_flux[i]);
            for a in &list {
                let hi = dof.index(iface.higher, a.higher_cell, 0);
                let lo = dof.index(iface.lower, a.lower_cell, 0);
                let col = if a.from_higher { hi } else { lo };
                adv.push(hi, col, a.flux);
                adv.push(lo, col, -a.flux);
            }
            interface_advection.push(list);
        }
        let advection = adv.build();

        let mut mass = Vec::with_capacity(n);
        let mut source = Vec::with_capacity(n);
        for (g, grid) in mdg.grids.iter().enumerate() {
            for c in 0..grid.num_cells() {
                mass.push(problem.grids[g].heat_capacity_eff[c] * grid.cell_volumes[c] * sv[g][c]);
                source.push(problem.grids[g].source[c]);
            }
        }
        let matrix = conduction.matrix.add_scaled(rho, &advection);
        let rhs: Vec<f64> =
            (0..n).map(|i| conduction.rhs[i] + rho * adv_rhs[i] + source[i]).collect();
        Ok(Self {
            conduction,
            advection,
            advection_rhs: adv_rhs,
            stencils,
            interface_advection,
            mass,
            matrix,
            rhs,
            source,
            heat_capacity_fluid: rho,
        })
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    /// Largest stable explicit step, `min M_c / A_cc`.
    pub fn stability_limit(&self) -> f64 {
        self.matrix
            .diagonal()
            .iter()
            .zip(&self.mass)
            .filter(|(d, _)| **d > 0.0)
            .map(|(d, m)| m / d)
            .fold(f64::INFINITY, f64::min)
    }

    /// One step from the flattened state `t0`.
    pub fn step(&self, t0: &[f64], scheme: TimeScheme, dt: f64, cfl_safety: f64) -> Result<Vec<f64>> {
        self.step_with(t0, scheme, dt, cfl_safety, None)
    }

    /// As `step`, with an explicit linear solver for implicit schemes.
    pub fn step_with(
        &self,
        t0: &[f64],
        scheme: TimeScheme,
        dt: f64,
        cfl_safety: f64,
        solver: Option<SolverChoice>,
    ) -> Result<Vec<f64>> {
        assert!(dt > 0.0, "time step must be positive");
        assert_eq!(t0.len(), self.len());
        let theta = scheme.theta();
        let at0 = self.matrix.matvec(t0);
        if theta == 0.0 {
            let limit = cfl_safety * self.stability_limit();
            if dt > limit * (1.0 + 1e-12) {
                return Err(Error::CflViolation { dt, limit });
            }
            return Ok((0..self.len()).map(|i| t0[i] + dt / self.mass[i] * (self.rhs[i] - at0[i])).collect());
        }
        let diag: Vec<f64> = self.mass.iter().map(|m| m / dt).collect();
        let mut lhs = self.matrix.clone();
        lhs.scale(theta);
        let lhs = lhs.add_diagonal(&diag);
        let rhs: Vec<f64> =
            (0..self.len()).map(|i| diag[i] * t0[i] - (1.0 - theta) * at0[i] + self.rhs[i]).collect();
        let sys = SparseSystem::new(lhs, rhs, self.conduction.dof.clone());
        let choice = linalg::choose(&sys, ProblemHint::Transport, solver);
        solve_checked(&sys, &choice)
    }

    /// Steady state `A T = b`.
    pub fn steady_state(&self, solver: Option<SolverChoice>) -> Result<Vec<f64>> {
        let sys = SparseSystem::new(self.matrix.clone(), self.rhs.clone(), self.conduction.dof.clone());
        let choice = linalg::choose(&sys, ProblemHint::Transport, solver);
        solve_checked(&sys, &choice)
    }

    /// Energy flux (W) through every face of every grid along the face
    /// normal, advective plus conductive. Coupled faces carry the interface exchange.
    pub fn face_energy_fluxes(&self, mdg: &MixedDimGrid, t: &[f64]) -> Vec<Vec<f64>> {
        let parts = self.conduction.dof.split(t);
        let mut out = self.conduction.face_fluxes(t);
        for (g, st) in self.stencils.iter().enumerate() {
            let adv = st.apply(parts[g]);
            for (f, o) in out[g].iter_mut().enumerate() {
                if self.conduction.coupled[g][f].is_none() {
                    *o += self.heat_capacity_fluid * adv[f];
                }
            }
        }
        for (iface, list) in mdg.interfaces.iter().zip(&self.interface_advection) {
            for a in list {
                out[iface.higher][a.face] +=
                    self.heat_capacity_fluid * a.value(parts[iface.higher][a.higher_cell], parts[iface.lower][a.lower_cell]);
            }
        }
        out
    }

    /// Energy flux from the higher to the lower grid per interface pair.
    pub fn interface_energy_fluxes(&self, mdg: &MixedDimGrid, t: &[f64]) -> Vec<Vec<f64>> {
        DiffusionOperator::interface_fluxes(mdg, &self.face_energy_fluxes(mdg, t))
    }

    /// Per-cell energy balance of a step from `t0` to `t1` with weight `theta`
    /// on the new level, evaluated from face and interface fluxes (W).
    pub fn energy_residual(&self, mdg: &MixedDimGrid, t0: &[f64], t1: &[f64], dt: f64, theta: f64) -> Vec<f64> {
        self.energy_balance(mdg, t0, t1, dt, theta).0
    }

    /// Largest per-cell energy residual relative to the sum of magnitudes of
    /// the terms in that cell's balance.
    pub fn relative_energy_error(&self, mdg: &MixedDimGrid, t0: &[f64], t1: &[f64], dt: f64, theta: f64) -> f64 {
        let (r, scale) = self.energy_balance(mdg, t0, t1, dt, theta);
        r.iter().zip(&scale).filter(|(_, s)| **s > 0.0).map(|(r, s)| r.abs() / s).fold(0.0, f64::max)
    }

    fn energy_balance(&self, mdg: &MixedDimGrid, t0: &[f64], t1: &[f64], dt: f64, theta: f64) -> (Vec<f64>, Vec<f64>) {
        let (f0, f1) = (self.face_energy_fluxes(mdg, t0), self.face_energy_fluxes(mdg, t1));
        let (i0, i1) = (self.interface_energy_fluxes(mdg, t0), self.interface_energy_fluxes(mdg, t1));
        let dof = &self.conduction.dof;
        let n = self.len();
        let mut r: Vec<f64> = (0..n).map(|i| self.mass[i] * (t1[i] - t0[i]) / dt - self.source[i]).collect();
        let mut scale: Vec<f64> =
            (0..n).map(|i| self.mass[i] * (t1[i].abs() + t0[i].abs()) / dt + self.source[i].abs()).collect();
        for (g, grid) in mdg.grids.iter().enumerate() {
            for c in 0..grid.num_cells() {
                let row = dof.index(g, c, 0);
                for &(f, s) in &grid.cell_faces[c] {
                    let q = theta * f1[g][f] + (1.0 - theta) * f0[g][f];
                    r[row] += s * q;
                    scale[row] += q.abs();
                }
            }
        }
        for (i, iface) in mdg.interfaces.iter().enumerate() {
            for (k, p) in iface.pairs.iter().enumerate() {
                let row = dof.index(iface.lower, p.cell, 0);
                let q = theta * i1[i][k] + (1.0 - theta) * i0[i][k];
                r[row] -= q;
                scale[row] += q.abs();
            }
        }
        (r, scale)
    }
}

fn solve_checked(sys: &SparseSystem, choice: &SolverChoice) -> Result<Vec<f64>> {
    linalg::solve(sys, choice).map_err(|e| match e {
        Error::SingularMatrix { row } => Error::SolverDivergence(format!("zero pivot at row {row}")),
        e => e,
    })
}

/// Recorded states of a transport run.
#[derive(Clone, Debug, PartialEq)]
pub struct TransportRun {
    pub times: Vec<f64>,
    /// Per output time, per-grid temperatures.
    pub states: Vec<Vec<Vec<f64>>>,
    pub steps: usize,
    /// Largest relative per-cell energy residual over all steps.
    pub max_energy_error: f64,
}

/// Runs from `initial` to `stepper.t_end`, recording the initial state and
/// the first state at or after every output time (all steps when empty).
pub fn run_transport(
    mdg: &MixedDimGrid,
    op: &TransportOperator,
    stepper: &TimeStepper,
    initial: &[Vec<f64>],
    output_times: &[f64],
    mut hook: impl FnMut(f64, &[Vec<f64>]),
) -> Result<TransportRun> {
    let mut t: Vec<f64> = initial.iter().flatten().copied().collect();
    assert_eq!(t.len(), op.len(), "initial state does not match the grid");
    let split = |x: &[f64]| -> Vec<Vec<f64>> { op.conduction.dof.split(x).into_iter().map(|s| s.to_vec()).collect() };
    let mut run = TransportRun { times: vec![0.0], states: vec![split(&t)], steps: 0, max_energy_error: 0.0 };
    hook(0.0, &run.states[0]);
    let mut next_output = output_times.iter().copied().filter(|&x| x > 0.0).peekable();
    let mut time = 0.0;
    let eps = 1e-9 * stepper.dt;
    while time < stepper.t_end - eps {
        let dt = stepper.dt.min(stepper.t_end - time);
        let t1 = op.step_with(&t, stepper.scheme, dt, stepper.cfl_safety, stepper.solver)?;
        let err = op.relative_energy_error(mdg, &t, &t1, dt, stepper.scheme.theta());
        run.max_energy_error = run.max_energy_error.max(err);
        t = t1;
        time += dt;
        run.steps += 1;
        let mut record = output_times.is_empty();
        while next_output.peek().is_some_and(|&o| time >= o - eps) {
            next_output.next();
            record = true;
        }
        if record {
            let s = split(&t);
            hook(time, &s);
            run.times.push(time);
            run.states.push(s);
        }
    }
    Ok(run)
}
