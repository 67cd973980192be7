//! Sparse storage, direct and Krylov solvers, and solver selection.

mod direct;
mod iterative;
mod sparse;

pub use direct::{reverse_cuthill_mckee, solve_direct, solve_direct_matrix, solve_factored, BandLu};
pub use iterative::{bicgstab, conjugate_gradient, Ilu0, IterativeOutcome, Preconditioner};
pub use sparse::{dot, norm, residual, CsrMatrix, DofMap, SparseSystem, TripletBuilder};

use crate::{Error, Result};

/// Systems with at most this many rows are solved directly.
pub const DIRECT_SIZE_LIMIT: usize = 20_000;
pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolverKind {
    Direct,
    Cg,
    BiCgStab,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverChoice {
    pub kind: SolverKind,
    pub preconditioner: Preconditioner,
    pub tol: f64,
    pub max_iter: usize,
}

impl SolverChoice {
    pub fn direct() -> Self {
        Self { kind: SolverKind::Direct, preconditioner: Preconditioner::None, tol: DEFAULT_TOL, max_iter: 0 }
    }

    pub fn iterative(kind: SolverKind, preconditioner: Preconditioner) -> Self {
        Self { kind, preconditioner, tol: DEFAULT_TOL, max_iter: 10_000 }
    }
}

/// Which discretization produced a system; decides symmetry for solver selection.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProblemHint {
    /// TPFA flow or conduction-only systems (symmetric).
    FlowTpfa,
    /// MPFA flow (nonsymmetric in general).
    FlowMpfa,
    /// Implicit advection-diffusion with upwinding.
    Transport,
    /// MPSA elasticity.
    Mechanics,
}

impl ProblemHint {
    pub fn is_symmetric(self) -> bool {
        matches!(self, ProblemHint::FlowTpfa)
    }
}

/// Picks a solver from the problem size and type.
pub fn auto_select(sys: &SparseSystem, hint: ProblemHint) -> SolverChoice {
    select_for_size(sys.len(), hint)
}

pub fn select_for_size(rows: usize, hint: ProblemHint) -> SolverChoice {
    if rows <= DIRECT_SIZE_LIMIT {
        SolverChoice::direct()
    } else if hint.is_symmetric() {
        SolverChoice::iterative(SolverKind::Cg, Preconditioner::Ilu0)
    } else {
        SolverChoice::iterative(SolverKind::BiCgStab, Preconditioner::Ilu0)
    }
}

pub fn solve_iterative(sys: &SparseSystem, choice: &SolverChoice) -> Result<IterativeOutcome> {
    assert!(choice.tol > 0.0);
    match choice.kind {
        SolverKind::Cg => conjugate_gradient(&sys.matrix, &sys.rhs, choice.preconditioner, choice.tol, choice.max_iter),
        SolverKind::BiCgStab => bicgstab(&sys.matrix, &sys.rhs, choice.preconditioner, choice.tol, choice.max_iter),
        SolverKind::Direct => {
            let x = solve_direct(sys)?;
            let relative_residual = sys.relative_residual(&x);
            Ok(IterativeOutcome { x, iterations: 0, relative_residual })
        }
    }
}

/// Solves with the given choice and checks the advertised residual bound
/// afterwards. A direct solve also passes when the relative residual is out
/// of reach of double precision (right-hand side much smaller than `|A||x|`)
/// but the normwise backward error is at rounding level.
pub fn solve(sys: &SparseSystem, choice: &SolverChoice) -> Result<Vec<f64>> {
    let x = match choice.kind {
        SolverKind::Direct => solve_direct(sys)?,
        _ => solve_iterative(sys, choice)?.x,
    };
    check_solution(sys, choice, x)
}

/// Direct solve reusing factors of `sys.matrix`, with the same residual check as `solve`.
pub fn solve_with_factors(sys: &SparseSystem, lu: &BandLu) -> Result<Vec<f64>> {
    let x = solve_factored(&sys.matrix, lu, &sys.rhs)?;
    check_solution(sys, &SolverChoice::direct(), x)
}

fn check_solution(sys: &SparseSystem, choice: &SolverChoice, x: Vec<f64>) -> Result<Vec<f64>> {
    let res = sys.relative_residual(&x);
    let bound = match choice.kind {
        SolverKind::Direct => DIRECT_TOL,
        _ => choice.tol * 10.0,
    };
    if res <= bound {
        return Ok(x);
    }
    if choice.kind == SolverKind::Direct {
        let backward = backward_error(sys, &x);
        if backward <= DIRECT_BACKWARD_TOL {
            log::debug!("direct solve: relative residual {res:e}, backward error {backward:e}");
            return Ok(x);
        }
    }
    Err(Error::SolverDivergence(format!("relative residual {res:e} exceeds {bound:e} after {:?} solve", choice.kind)))
}

pub const DIRECT_TOL: f64 = 1e-12;
pub const DIRECT_BACKWARD_TOL: f64 = 1e-14;

/// `‖b - A x‖ / (‖|A| |x|‖ + ‖b‖)`.
pub fn backward_error(sys: &SparseSystem, x: &[f64]) -> f64 {
    let a = &sys.matrix;
    let ax: Vec<f64> = (0..a.nrows()).map(|i| a.row_iter(i).map(|(j, v)| (v * x[j]).abs()).sum()).collect();
    let denom = norm(&ax) + norm(&sys.rhs);
    let r = norm(&residual(a, x, &sys.rhs));
    if denom > 0.0 {
        r / denom
    } else {
        r
    }
}

/// Resolves an optional override against automatic selection.
pub fn choose(sys: &SparseSystem, hint: ProblemHint, overridden: Option<SolverChoice>) -> SolverChoice {
    overridden.unwrap_or_else(|| auto_select(sys, hint))
}
