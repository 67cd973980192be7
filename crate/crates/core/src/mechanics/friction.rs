//! Coulomb friction, slip-dilation and the stimulation loop.

use super::{DisplacementField, ElasticParameters, FracturePair, MechanicsOperator};
use crate::flow::{cubic_law, step_compressible, FlowProblem, Scheme};
use crate::linalg::SolverChoice;
use crate::mesh::MixedDimGrid;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrictionParameters {
    pub friction_coefficient: f64,
    /// Dilation angle ψ (radians).
    pub dilation_angle: f64,
    /// Compliance γ (m/Pa); `None` uses h/μ per fracture cell.
    pub slip_relaxation: Option<f64>,
    /// Allowed excess shear stress (Pa).
    pub slip_tolerance: f64,
    pub max_iterations: usize,
}

impl Default for FrictionParameters {
    fn default() -> Self {
        Self {
            friction_coefficient: 0.6,
            dilation_angle: 0.0,
            slip_relaxation: None,
            slip_tolerance: 1e-6,
            max_iterations: 200,
        }
    }
}

/// Slip and dilation per cell of every fracture grid (empty for other grids).
#[derive(Clone, Debug, PartialEq)]
pub struct SlipState {
    pub slip: Vec<Vec<f64>>,
    /// Σ |Δs| over all increments.
    pub cumulative: Vec<Vec<f64>>,
    pub aperture_change: Vec<Vec<f64>>,
    /// Cells whose effective normal stress was not compressive at the last check.
    pub open: Vec<Vec<bool>>,
}

impl SlipState {
    pub fn zeros(mdg: &MixedDimGrid) -> Self {
        let n: Vec<usize> = mdg.grids.iter().map(|g| if g.dim == 1 { g.num_cells() } else { 0 }).collect();
        Self {
            slip: n.iter().map(|&k| vec![0.0; k]).collect(),
            cumulative: n.iter().map(|&k| vec![0.0; k]).collect(),
            aperture_change: n.iter().map(|&k| vec![0.0; k]).collect(),
            open: n.iter().map(|&k| vec![false; k]).collect(),
        }
    }
}

/// Traction on a fracture cell: compression-positive normal stress and
/// shear stress along the fracture tangent (Pa).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FractureTraction {
    pub grid: usize,
    pub cell: usize,
    pub normal: f64,
    pub shear: f64,
}

/// Tractions read from the plus-side face force of every fracture pair.
pub fn fracture_tractions(pairs: &[FracturePair], d: &DisplacementField) -> Vec<FractureTraction> {
    pairs
        .iter()
        .map(|p| {
            let t = d.face_force[p.plus_face] / p.area;
            FractureTraction { grid: p.grid, cell: p.cell, normal: p.normal.dot(&t), shear: -p.tangent.dot(&t) }
        })
        .collect()
}

/// Shear stress in excess of the Coulomb limit, `|τ| - μ_f max(σ_n - p, 0)`.
pub fn coulomb_excess(shear: f64, normal: f64, pressure: f64, mu_f: f64) -> f64 {
    shear.abs() - mu_f * (normal - pressure).max(0.0)
}

/// One Coulomb check with slip increments `γ · excess · sign(τ)`. Cells with
/// non-compressive effective normal stress are flagged open and lose all shear
/// resistance. Returns whether any cell slipped.
pub fn friction_step(
    tractions: &[FractureTraction],
    pressure: &[Vec<f64>],
    params: &FrictionParameters,
    relaxation: &[f64],
    state: &SlipState,
) -> (SlipState, bool) {
    assert_eq!(tractions.len(), relaxation.len());
    let mut next = state.clone();
    let mut slipped = false;
    for (t, &gamma) in tractions.iter().zip(relaxation) {
        let p = pressure[t.grid][t.cell];
        next.open[t.grid][t.cell] = t.normal - p <= 0.0;
        let excess = coulomb_excess(t.shear, t.normal, p, params.friction_coefficient);
        if excess > params.slip_tolerance {
            let ds = gamma * excess * t.shear.signum();
            next.slip[t.grid][t.cell] += ds;
            next.cumulative[t.grid][t.cell] += ds.abs();
            slipped = true;
        }
    }
    (next, slipped)
}

/// Sets the dilation `Σ|Δs| tan ψ` and returns the per-cell increments.
pub fn update_aperture(state: &mut SlipState, params: &FrictionParameters) -> Vec<Vec<f64>> {
    let tan = params.dilation_angle.tan();
    let mut inc = Vec::with_capacity(state.slip.len());
    for (acc, da) in state.cumulative.iter().zip(state.aperture_change.iter_mut()) {
        let new: Vec<f64> = acc.iter().map(|s| s * tan).collect();
        inc.push(new.iter().zip(da.iter()).map(|(n, o)| n - o).collect());
        *da = new;
    }
    inc
}

/// Piecewise-constant injection rate (m³/s) from `(time, rate)` breakpoints.
#[derive(Clone, Debug, PartialEq)]
pub struct InjectionSchedule {
    pub breakpoints: Vec<(f64, f64)>,
}

impl InjectionSchedule {
    pub fn constant(rate: f64) -> Self {
        Self { breakpoints: vec![(0.0, rate)] }
    }

    pub fn rate(&self, t: f64) -> f64 {
        self.breakpoints.iter().take_while(|(s, _)| *s <= t).last().map_or(0.0, |&(_, r)| r)
    }
}

#[derive(Clone, Debug)]
pub struct StimulationSetup {
    /// Flow data with the initial fracture apertures.
    pub flow: FlowProblem,
    pub elastic: ElasticParameters,
    pub friction: FrictionParameters,
    pub schedule: InjectionSchedule,
    /// Injection cell as (grid, cell).
    pub injection: (usize, usize),
    pub scheme: Scheme,
    pub dt: f64,
    pub t_end: f64,
    pub initial_pressure: Option<Vec<Vec<f64>>>,
    /// Linear solver for flow and elasticity; `None` selects automatically.
    pub solver: Option<SolverChoice>,
}

#[derive(Clone, Debug)]
pub struct StimulationRecord {
    pub time: f64,
    pub pressure: Vec<Vec<f64>>,
    pub displacement: DisplacementField,
    pub slip: SlipState,
    pub apertures: Vec<Vec<f64>>,
    pub inner_iterations: usize,
    pub tractions: Vec<FractureTraction>,
}

fn refresh_apertures(mdg: &MixedDimGrid, base: &FlowProblem, slip: &SlipState) -> FlowProblem {
    let mut p = base.clone();
    for (g, grid) in mdg.grids.iter().enumerate() {
        if grid.dim == 1 {
            for c in 0..grid.num_cells() {
                let a = base.grids[g].aperture[c] + slip.aperture_change[g][c];
                p.grids[g].aperture[c] = a;
                p.grids[g].permeability[c] = crate::flow::Tensor2::identity() * cubic_law(a);
            }
        }
    }
    p.reset_normal_transmissivity(mdg);
    p
}

/// Hydraulic stimulation: per step, refresh apertures, take a compressible
/// flow step, equilibrate deformation and slip, then update dilation.
pub fn stimulate(
    mdg: &MixedDimGrid,
    setup: &StimulationSetup,
    mut hook: impl FnMut(&StimulationRecord),
) -> Result<Vec<StimulationRecord>> {
    assert!(setup.dt > 0.0, "time step must be positive");
    let (ig, ic) = setup.injection;
    if ig >= mdg.num_grids() || ic >= mdg.grids[ig].num_cells() {
        return Err(Error::Config(format!("injection cell ({ig}, {ic}) does not exist")));
    }
    let mech = MechanicsOperator::new(mdg, &setup.elastic)?;
    let relaxation: Vec<f64> = mech
        .pairs
        .iter()
        .map(|p| {
            setup.friction.slip_relaxation.unwrap_or_else(|| {
                let c = mdg.grids[0].face_cells[p.plus_face][0].unwrap();
                p.area / setup.elastic.mu[c]
            })
        })
        .collect();
    let mut slip = SlipState::zeros(mdg);
    let mut pressure = setup
        .initial_pressure
        .clone()
        .unwrap_or_else(|| mdg.grids.iter().map(|g| vec![0.0; g.num_cells()]).collect());
    let mut out = Vec::new();
    let mut time = 0.0;
    let mut step = 0;
    let eps = 1e-9 * setup.dt;
    while time < setup.t_end - eps {
        let dt = setup.dt.min(setup.t_end - time);
        let mut flow = refresh_apertures(mdg, &setup.flow, &slip);
        flow.grids[ig].source[ic] += setup.schedule.rate(time);
        let sol = step_compressible(mdg, &flow, setup.scheme, dt, &pressure, setup.solver)?;
        pressure = sol.pressure;
        let mut iterations = 0;
        let (displacement, tractions) = loop {
            let d = mech.solve(mdg, &slip, setup.solver)?;
            let tr = fracture_tractions(&mech.pairs, &d);
            let (next, slipped) = friction_step(&tr, &pressure, &setup.friction, &relaxation, &slip);
            iterations += 1;
            if !slipped {
                slip.open = next.open;
                break (d, tr);
            }
            slip = next;
            if iterations >= setup.friction.max_iterations {
                let max_excess = tr
                    .iter()
                    .map(|t| coulomb_excess(t.shear, t.normal, pressure[t.grid][t.cell], setup.friction.friction_coefficient))
                    .fold(f64::NEG_INFINITY, f64::max);
                return Err(Error::InnerLoopNotConverged { step, iterations, max_excess });
            }
        };
        update_aperture(&mut slip, &setup.friction);
        time += dt;
        step += 1;
        let apertures = refresh_apertures(mdg, &setup.flow, &slip).apertures();
        let rec = StimulationRecord {
            time,
            pressure: pressure.clone(),
            displacement,
            slip: slip.clone(),
            apertures,
            inner_iterations: iterations,
            tractions,
        };
        hook(&rec);
        log::info!("step {step}: t = {time:e}, {iterations} inner iterations");
        out.push(rec);
    }
    Ok(out)
}
