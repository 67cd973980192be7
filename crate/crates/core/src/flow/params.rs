use super::stencil::Tensor2;
use crate::mesh::{FaceTag, Grid, MixedDimGrid};
use crate::{Error, Result};

/// Boundary condition on a face: pressure (Pa) or total outward flux (m³/s).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Bc {
    Dirichlet(f64),
    Neumann(f64),
}

/// Cubic law: permeability of a fracture of aperture `a`.
pub fn cubic_law(a: f64) -> f64 {
    a * a / 12.0
}

/// Per-grid flow data. Vectors are per cell except `bc`, which is per face;
/// faces without an entry are no-flow (or coupled, for interface faces).
#[derive(Clone, Debug, PartialEq)]
pub struct FlowParameters {
    pub permeability: Vec<Tensor2>,
    pub porosity: Vec<f64>,
    pub aperture: Vec<f64>,
    pub compressibility: f64,
    pub source: Vec<f64>,
    pub bc: Vec<Option<Bc>>,
}

impl FlowParameters {
    /// Unit-sized defaults: identity permeability, porosity, aperture and
    /// compressibility one, no sources, no-flow boundaries.
    pub fn unit(grid: &Grid) -> Self {
        let n = grid.num_cells();
        Self {
            permeability: vec![Tensor2::identity(); n],
            porosity: vec![1.0; n],
            aperture: vec![1.0; n],
            compressibility: 1.0,
            source: vec![0.0; n],
            bc: vec![None; grid.num_faces()],
        }
    }

    pub fn set_isotropic_permeability(&mut self, k: f64) {
        self.permeability.iter_mut().for_each(|t| *t = Tensor2::identity() * k);
    }

    /// Sets `bc` on every face whose tag satisfies `pred`.
    pub fn set_bc_where(&mut self, grid: &Grid, pred: impl Fn(FaceTag) -> bool, bc: Bc) {
        for f in 0..grid.num_faces() {
            if pred(grid.face_tags[f]) {
                self.bc[f] = Some(bc);
            }
        }
    }

    fn check(&self, g: usize, grid: &Grid) -> Result<()> {
        let nc = grid.num_cells();
        let ok = self.permeability.len() == nc
            && self.porosity.len() == nc
            && self.aperture.len() == nc
            && self.source.len() == nc
            && self.bc.len() == grid.num_faces();
        if !ok {
            return Err(Error::MissingParameters(format!("flow parameters of grid {g} do not match its size")));
        }
        if self.aperture.iter().any(|&a| !(a > 0.0)) {
            return Err(Error::MissingParameters(format!("grid {g}: apertures must be positive")));
        }
        Ok(())
    }
}

/// Normal transmissivity per interface pair (flux per unit area per unit pressure jump).
#[derive(Clone, Debug, PartialEq)]
pub struct InterfaceParameters {
    pub normal_transmissivity: Vec<f64>,
}

/// Flow data for a whole mixed-dimensional grid.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowProblem {
    pub grids: Vec<FlowParameters>,
    pub interfaces: Vec<InterfaceParameters>,
}

impl FlowProblem {
    /// Unit defaults everywhere, with default normal transmissivities.
    pub fn unit(mdg: &MixedDimGrid) -> Self {
        let grids = mdg.grids.iter().map(FlowParameters::unit).collect();
        let mut p = Self { grids, interfaces: Vec::new() };
        p.reset_normal_transmissivity(mdg);
        p
    }

    /// Aperture `a` and cubic-law permeability on all fracture and intersection grids.
    pub fn set_fracture_aperture(&mut self, mdg: &MixedDimGrid, a: f64) {
        for (g, grid) in mdg.grids.iter().enumerate() {
            if grid.dim < 2 {
                self.grids[g].aperture.iter_mut().for_each(|x| *x = a);
                self.grids[g].set_isotropic_permeability(cubic_law(a));
            }
        }
        self.reset_normal_transmissivity(mdg);
    }

    /// Sets the default `2 k / a` from the lower-dimensional cell of every pair.
    pub fn reset_normal_transmissivity(&mut self, mdg: &MixedDimGrid) {
        self.interfaces = mdg
            .interfaces
            .iter()
            .map(|iface| {
                let low = &self.grids[iface.lower];
                InterfaceParameters {
                    normal_transmissivity: iface
                        .pairs
                        .iter()
                        .map(|p| 2.0 * low.permeability[p.cell][(0, 0)] / low.aperture[p.cell])
                        .collect(),
                }
            })
            .collect();
    }

    pub fn validate(&self, mdg: &MixedDimGrid) -> Result<()> {
        if self.grids.len() != mdg.num_grids() {
            return Err(Error::MissingParameters(format!(
                "{} grids but flow parameters for {}",
                mdg.num_grids(),
                self.grids.len()
            )));
        }
        for (g, grid) in mdg.grids.iter().enumerate() {
            self.grids[g].check(g, grid)?;
        }
        if self.interfaces.len() != mdg.interfaces.len()
            || self.interfaces.iter().zip(&mdg.interfaces).any(|(p, i)| p.normal_transmissivity.len() != i.pairs.len())
        {
            return Err(Error::MissingParameters("interface normal transmissivities".into()));
        }
        if self.interfaces.iter().flat_map(|i| &i.normal_transmissivity).any(|&k| !(k > 0.0)) {
            return Err(Error::MissingParameters("normal transmissivities must be positive".into()));
        }
        Ok(())
    }

    pub fn apertures(&self) -> Vec<Vec<f64>> {
        self.grids.iter().map(|p| p.aperture.clone()).collect()
    }
}

/// Specific volumes: 1 in 2D, the aperture in 1D, and in 0D the product of
/// the two largest apertures of the fracture cells meeting at the point.
pub fn specific_volumes(mdg: &MixedDimGrid, apertures: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = mdg
        .grids
        .iter()
        .enumerate()
        .map(|(g, grid)| match grid.dim {
            2 => vec![1.0; grid.num_cells()],
            1 => apertures[g].clone(),
            _ => vec![1.0; grid.num_cells()],
        })
        .collect();
    for g in mdg.grids_of_dim(0) {
        let mut meeting: Vec<f64> = Vec::new();
        for iface in mdg.interfaces.iter().filter(|i| i.lower == g) {
            for p in &iface.pairs {
                let c = mdg.grids[iface.higher].face_cells[p.face][0].unwrap();
                meeting.push(apertures[iface.higher][c]);
            }
        }
        meeting.sort_by(|a, b| b.total_cmp(a));
        out[g] = vec![meeting.iter().take(2).product::<f64>().max(f64::MIN_POSITIVE); mdg.grids[g].num_cells()];
    }
    out
}
