use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    // geometry
    #[error("fractures {0} and {1} are coplanar and overlap in a 2D region")]
    CoplanarOverlap(usize, usize),
    #[error("invalid fracture {id}: {defect}")]
    DegenerateFracture { id: usize, defect: crate::geometry::FractureDefect },
    #[error("geometry too fine: points {a:?} and {b:?} are closer than the tolerance {tol:e}")]
    GeometryTooFine { a: [f64; 2], b: [f64; 2], tol: f64 },

    // mesh
    #[error("degenerate cell {cell} in {dim}D grid (measure {measure:e})")]
    DegenerateCell { dim: usize, cell: usize, measure: f64 },
    #[error("mixed-dimensional grid contains no fractures")]
    NoFractures,
    #[error("grid does not conform to the fracture network: {0}")]
    NonConforming(String),
    #[error("mesh generation exceeded {0} vertices; increase h_min or simplify the network")]
    MeshTooLarge(usize),

    // discretization
    #[error("singular local system in interaction region of node {node}")]
    SingularLocalSystem { node: usize },
    #[error("missing parameters: {0}")]
    MissingParameters(String),

    // linear algebra and time stepping
    #[error("singular system: {0}")]
    SingularSystem(String),
    #[error("singular matrix: zero pivot in row {row}")]
    SingularMatrix { row: usize },
    #[error("iterative solver reached {iterations} iterations (relative residual {residual:e})")]
    MaxIterations { iterations: usize, residual: f64 },
    #[error("BiCGStab breakdown at iteration {iteration}")]
    Breakdown { iteration: usize },
    #[error("solver diverged: {0}")]
    SolverDivergence(String),
    #[error("time step {dt:e} exceeds the explicit stability limit {limit:e}")]
    CflViolation { dt: f64, limit: f64 },
    #[error("friction loop did not converge in {iterations} iterations at step {step} (max excess {max_excess:e} Pa)")]
    InnerLoopNotConverged { step: usize, iterations: usize, max_excess: f64 },

    // io
    #[error("{path}:{line}: {msg}")]
    Parse { path: String, line: usize, msg: String },
    #[error("{path}:{line}: degenerate segment (coincident endpoints)")]
    DegenerateSegment { path: String, line: usize },
    #[error("{path}: block {block}: vertices are not coplanar")]
    NonPlanarPolygon { path: String, block: usize },
    #[error("{path}: block {block}: polygon is not convex")]
    NonConvexPolygon { path: String, block: usize },
    #[error("configuration is missing section [{0}]")]
    MissingSection(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// Process exit code for the command-line tool.
    pub fn exit_code(&self) -> i32 {
        use Error::*;
        match self {
            Parse { .. } | DegenerateSegment { .. } | NonPlanarPolygon { .. } | NonConvexPolygon { .. }
            | MissingSection(_) | Config(_) | Io { .. } | MissingParameters(_) => 2,
            CoplanarOverlap(..) | DegenerateFracture { .. } | GeometryTooFine { .. } | DegenerateCell { .. }
            | NoFractures | MeshTooLarge(_) | NonConforming(_) => 3,
            SingularLocalSystem { .. } | SingularSystem(_) | SingularMatrix { .. } | MaxIterations { .. }
            | Breakdown { .. } | SolverDivergence(_) | CflViolation { .. } | InnerLoopNotConverged { .. } => 4,
        }
    }
}
