//! Mixed-dimensional discrete-fracture-matrix (DFM) simulation.
//!
//! A 2D porous matrix with embedded 1D fractures and 0D fracture intersections is
//! meshed conformingly and carries three physical models:
//!
//! * single-phase Darcy flow (TPFA or MPFA-O) with an interface law between
//!   dimensions,
//! * advection-diffusion of heat driven by the Darcy fluxes,
//! * quasi-static linear elasticity (MPSA) of the matrix with prescribed
//!   displacement jumps on the fractures, Coulomb friction and slip dilation.
//!
//! The [`geometry`] module additionally handles 3D polygonal fracture networks
//! (intersection detection, elliptic fractures, outcrop extrusion).

pub mod app;
pub mod error;
pub mod flow;
pub mod geometry;
pub mod io;
pub mod linalg;
pub mod mechanics;
pub mod mesh;
pub mod transport;

pub use error::{Error, Result};
