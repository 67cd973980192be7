//! Quasi-static linear elasticity on the slit matrix grid, with fracture
//! surfaces as internal boundaries carrying prescribed displacement jumps,
//! Coulomb friction and the hydraulic stimulation loop.

mod friction;
mod mpsa;

pub use friction::{
    coulomb_excess, friction_step, stimulate, update_aperture, FractureTraction, FrictionParameters,
    InjectionSchedule, SlipState, StimulationRecord, StimulationSetup,
};
pub use mpsa::{hooke, mpsa, Component, ComponentKind, MechFaceKind, StressStencil};

use nalgebra::Vector2;

use crate::linalg::{self, BandLu, DofMap, ProblemHint, SolverChoice, SolverKind, SparseSystem, TripletBuilder};
use crate::mesh::{FaceTag, Grid, MixedDimGrid};
use crate::{Error, Result};

/// Shear modulus and Lamé λ from Young's modulus and Poisson's ratio.
pub fn lame_from_young_poisson(e: f64, nu: f64) -> (f64, f64) {
    (e / (2.0 * (1.0 + nu)), e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu)))
}

/// Young's modulus and Poisson's ratio from the Lamé parameters (μ, λ).
pub fn young_poisson_from_lame(mu: f64, lam: f64) -> (f64, f64) {
    (mu * (3.0 * lam + 2.0 * mu) / (lam + mu), lam / (2.0 * (lam + mu)))
}

/// Lamé (μ, λ) from the bulk and shear moduli.
pub fn lame_from_bulk_shear(k: f64, g: f64) -> (f64, f64) {
    (g, k - 2.0 * g / 3.0)
}

/// Per-component boundary condition of a face, components along x and y.
pub type MechBc = [Component; 2];

pub const ROLLER_X: MechBc = [Component::Displacement(0.0), Component::Traction(0.0)];
pub const ROLLER_Y: MechBc = [Component::Traction(0.0), Component::Displacement(0.0)];
pub const CLAMPED: MechBc = [Component::Displacement(0.0), Component::Displacement(0.0)];

/// Elastic data on the matrix grid. Faces without a condition are traction free.
#[derive(Clone, Debug, PartialEq)]
pub struct ElasticParameters {
    pub mu: Vec<f64>,
    pub lam: Vec<f64>,
    pub body_force: Vec<Vector2<f64>>,
    pub bc: Vec<Option<MechBc>>,
}

impl ElasticParameters {
    pub fn uniform(grid: &Grid, mu: f64, lam: f64) -> Self {
        Self {
            mu: vec![mu; grid.num_cells()],
            lam: vec![lam; grid.num_cells()],
            body_force: vec![Vector2::zeros(); grid.num_cells()],
            bc: vec![None; grid.num_faces()],
        }
    }

    pub fn set_bc_where(&mut self, grid: &Grid, pred: impl Fn(FaceTag) -> bool, bc: MechBc) {
        for f in 0..grid.num_faces() {
            if pred(grid.face_tags[f]) {
                self.bc[f] = Some(bc);
            }
        }
    }

    pub fn validate(&self, grid: &Grid) -> Result<()> {
        let n = grid.num_cells();
        if self.mu.len() != n || self.lam.len() != n || self.body_force.len() != n || self.bc.len() != grid.num_faces() {
            return Err(Error::MissingParameters("elastic parameters do not match the grid".into()));
        }
        if self.mu.iter().zip(&self.lam).any(|(&m, &l)| !(m > 0.0) || !(l > -2.0 * m / 3.0)) {
            return Err(Error::MissingParameters("need mu > 0 and lambda > -2 mu / 3".into()));
        }
        Ok(())
    }
}

/// One fracture cell seen from the matrix: its two slit faces.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FracturePair {
    pub grid: usize,
    pub cell: usize,
    pub plus_face: usize,
    pub minus_face: usize,
    pub tangent: Vector2<f64>,
    /// Unit normal pointing towards the plus side.
    pub normal: Vector2<f64>,
    pub area: f64,
}

/// Fracture pairs of the matrix grid (grid 0), ordered by fracture grid and cell.
pub fn fracture_pairs(mdg: &MixedDimGrid) -> Vec<FracturePair> {
    let mut out = Vec::new();
    for iface in mdg.interfaces.iter().filter(|i| i.higher == 0 && mdg.grids[i.lower].dim == 1) {
        let low = &mdg.grids[iface.lower];
        let t = low.tangent.expect("fracture grid without tangent");
        let mut plus = vec![None; low.num_cells()];
        let mut minus = vec![None; low.num_cells()];
        for p in &iface.pairs {
            if p.side > 0 {
                plus[p.cell] = Some(p.face);
            } else {
                minus[p.cell] = Some(p.face);
            }
        }
        for c in 0..low.num_cells() {
            let (Some(pf), Some(mf)) = (plus[c], minus[c]) else { continue };
            out.push(FracturePair {
                grid: iface.lower,
                cell: c,
                plus_face: pf,
                minus_face: mf,
                tangent: t,
                normal: Vector2::new(-t.y, t.x),
                area: mdg.grids[0].face_areas[pf],
            });
        }
    }
    out
}

fn singular(e: Error) -> Error {
    match e {
        Error::SingularMatrix { row } => {
            Error::SingularSystem(format!("elasticity matrix singular at row {row}; add displacement constraints"))
        }
        e => e,
    }
}

/// Cell displacements and face (continuity point) displacements of the matrix grid.
#[derive(Clone, Debug, PartialEq)]
pub struct DisplacementField {
    pub cell: Vec<Vector2<f64>>,
    pub face: Vec<Vector2<f64>>,
    /// Face forces `σ n_f` (normal scaled by the face measure).
    pub face_force: Vec<Vector2<f64>>,
}

impl DisplacementField {
    /// `u_plus - u_minus` on a fracture pair.
    pub fn jump(&self, p: &FracturePair) -> Vector2<f64> {
        self.face[p.plus_face] - self.face[p.minus_face]
    }
}

/// Assembled elasticity problem on the matrix grid.
#[derive(Clone, Debug)]
pub struct MechanicsOperator {
    pub stencil: StressStencil,
    pub kinds: Vec<MechFaceKind>,
    pub pairs: Vec<FracturePair>,
    /// Boundary values with zero fracture jumps, two per face.
    pub base_values: Vec<f64>,
    pub matrix: crate::linalg::CsrMatrix,
    body: Vec<f64>,
    factors: std::sync::OnceLock<BandLu>,
}

impl MechanicsOperator {
    pub fn new(mdg: &MixedDimGrid, params: &ElasticParameters) -> Result<Self> {
        let grid = &mdg.grids[0];
        assert_eq!(grid.dim, 2, "mechanics needs a 2D matrix grid");
        params.validate(grid)?;
        let pairs = fracture_pairs(mdg);
        let mut kinds = vec![MechFaceKind::Interior; grid.num_faces()];
        let mut values = vec![0.0; 2 * grid.num_faces()];
        for f in 0..grid.num_faces() {
            if !grid.is_boundary_face(f) {
                continue;
            }
            let bc = params.bc[f].unwrap_or([Component::Traction(0.0); 2]);
            let mut ck = [ComponentKind::Traction; 2];
            for a in 0..2 {
                match bc[a] {
                    Component::Displacement(v) => {
                        ck[a] = ComponentKind::Displacement;
                        values[2 * f + a] = v;
                    }
                    Component::Traction(v) => values[2 * f + a] = v * grid.face_areas[f],
                }
            }
            kinds[f] = MechFaceKind::Boundary(ck);
        }
        for p in &pairs {
            kinds[p.plus_face] = MechFaceKind::Fracture { partner: p.minus_face, plus: true };
            kinds[p.minus_face] = MechFaceKind::Fracture { partner: p.plus_face, plus: false };
            values[2 * p.plus_face] = 0.0;
            values[2 * p.plus_face + 1] = 0.0;
            values[2 * p.minus_face] = 0.0;
            values[2 * p.minus_face + 1] = 0.0;
        }
        for f in 0..grid.num_faces() {
            if grid.is_boundary_face(f) && grid.face_tags[f] == FaceTag::Fracture && !matches!(kinds[f], MechFaceKind::Fracture { .. }) {
                return Err(Error::NonConforming(format!("slit face {f} has no partner")));
            }
        }
        let stencil = mpsa(grid, &params.mu, &params.lam, &kinds)?;
        let n = 2 * grid.num_cells();
        let mut a = TripletBuilder::with_capacity(n, n, 16 * n);
        for f in 0..grid.num_faces() {
            for (slot, s) in [(0, 1.0), (1, -1.0)] {
                let Some(c) = grid.face_cells[f][slot] else { continue };
                for k in 0..2 {
                    for (col, v) in stencil.stress.row_iter(2 * f + k) {
                        a.push(2 * c + k, col, s * v);
                    }
                }
            }
        }
        let mut body = vec![0.0; n];
        for c in 0..grid.num_cells() {
            body[2 * c] = -params.body_force[c].x * grid.cell_volumes[c];
            body[2 * c + 1] = -params.body_force[c].y * grid.cell_volumes[c];
        }
        Ok(Self { stencil, kinds, pairs, base_values: values, matrix: a.build(), body, factors: std::sync::OnceLock::new() })
    }

    /// Boundary values with the jump `slip t + opening n` on every fracture pair.
    pub fn values_with_jumps(&self, slip: &SlipState) -> Vec<f64> {
        let mut v = self.base_values.clone();
        for p in &self.pairs {
            let j = p.tangent * slip.slip[p.grid][p.cell] + p.normal * slip.aperture_change[p.grid][p.cell];
            v[2 * p.plus_face] = j.x;
            v[2 * p.plus_face + 1] = j.y;
        }
        v
    }

    /// Equilibrium `Σ_f ±σ n_f + b V = 0` for the given fracture jumps.
    pub fn solve(&self, mdg: &MixedDimGrid, slip: &SlipState, solver: Option<SolverChoice>) -> Result<DisplacementField> {
        let grid = &mdg.grids[0];
        let v = self.values_with_jumps(slip);
        let bv = self.stencil.bound_stress.matvec(&v);
        let mut rhs = self.body.clone();
        for f in 0..grid.num_faces() {
            for (slot, s) in [(0, 1.0), (1, -1.0)] {
                let Some(c) = grid.face_cells[f][slot] else { continue };
                rhs[2 * c] -= s * bv[2 * f];
                rhs[2 * c + 1] -= s * bv[2 * f + 1];
            }
        }
        let sys = SparseSystem::new(self.matrix.clone(), rhs, DofMap::new(&[grid.num_cells()], 2));
        let choice = linalg::choose(&sys, ProblemHint::Mechanics, solver);
        let u = if choice.kind == SolverKind::Direct {
            // the matrix does not change between solves, so its factors are kept
            let lu = match self.factors.get() {
                Some(lu) => lu,
                None => {
                    let lu = BandLu::factor(&self.matrix).map_err(singular)?;
                    self.factors.get_or_init(|| lu)
                }
            };
            linalg::solve_with_factors(&sys, lu)
        } else {
            linalg::solve(&sys, &choice)
        }
        .map_err(singular)?;
        let pack = |x: &[f64]| x.chunks(2).map(|c| Vector2::new(c[0], c[1])).collect::<Vec<_>>();
        Ok(DisplacementField {
            cell: pack(&u),
            face: pack(&self.stencil.face_displacements(&u, &v)),
            face_force: pack(&self.stencil.forces(&u, &v)),
        })
    }

    /// Per-cell momentum residual `Σ_f ±σ n_f + b V` (N per unit thickness).
    pub fn momentum_residual(&self, mdg: &MixedDimGrid, d: &DisplacementField) -> Vec<Vector2<f64>> {
        let grid = &mdg.grids[0];
        (0..grid.num_cells())
            .map(|c| {
                let mut r = Vector2::new(-self.body[2 * c], -self.body[2 * c + 1]);
                for &(f, s) in &grid.cell_faces[c] {
                    r += d.face_force[f] * s;
                }
                r
            })
            .collect()
    }
}
