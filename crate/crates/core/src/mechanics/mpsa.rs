//! Multi-point stress approximation (O-method). Continuity points of interior
//! and fracture subfaces sit a fraction `ETA` of the way from the face centre
//! to the node; at the face centre itself the local systems admit alternating
//! cell rotations. Boundary subfaces keep the face centre, where boundary
//! values are given.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, Dyn, Matrix2, Vector2, SVD};

use crate::linalg::{CsrMatrix, TripletBuilder};
use crate::mesh::Grid;
use crate::{Error, Result};

/// Condition on one displacement component of a boundary face.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Component {
    /// Prescribed displacement (m).
    Displacement(f64),
    /// Prescribed traction (Pa).
    Traction(f64),
}

/// Per-face mechanical condition used by the stencil. Boundary values are
/// supplied separately, two per face: displacements, total forces (traction
/// times area), or for the `plus` face of a fracture pair the displacement
/// jump `u_plus - u_minus`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MechFaceKind {
    Interior,
    Boundary([ComponentKind; 2]),
    Fracture { partner: usize, plus: bool },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ComponentKind {
    Displacement,
    Traction,
}

/// Face forces `T_f = σ n_f` (normal scaled by the face measure) and face
/// displacements as linear maps of cell displacements and boundary values.
/// Unknowns and values are interleaved by component: index `2 i + k`.
#[derive(Clone, Debug)]
pub struct StressStencil {
    pub stress: CsrMatrix,
    pub bound_stress: CsrMatrix,
    pub displacement: CsrMatrix,
    pub bound_displacement: CsrMatrix,
}

impl StressStencil {
    pub fn forces(&self, u: &[f64], v: &[f64]) -> Vec<f64> {
        add(self.stress.matvec(u), self.bound_stress.matvec(v))
    }

    pub fn face_displacements(&self, u: &[f64], v: &[f64]) -> Vec<f64> {
        add(self.displacement.matvec(u), self.bound_displacement.matvec(v))
    }
}

fn add(mut a: Vec<f64>, b: Vec<f64>) -> Vec<f64> {
    a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
    a
}

pub const ETA: f64 = 1.0 / 3.0;

/// Relative singular value below which a local mode counts as null.
const NULL_TOL: f64 = 1e-10;

/// Stress `2 μ ε + λ tr(ε) I` of the displacement gradient `g` (g[(i, j)] = ∂u_i/∂x_j).
pub fn hooke(mu: f64, lam: f64, g: &Matrix2<f64>) -> Matrix2<f64> {
    (g + g.transpose()) * mu + Matrix2::identity() * (lam * g.trace())
}

pub fn mpsa(grid: &Grid, mu: &[f64], lam: &[f64], kinds: &[MechFaceKind]) -> Result<StressStencil> {
    assert_eq!(grid.dim, 2, "MPSA needs a 2D grid");
    assert_eq!(mu.len(), grid.num_cells());
    assert_eq!(lam.len(), grid.num_cells());
    assert_eq!(kinds.len(), grid.num_faces());
    let (nf, nc) = (grid.num_faces(), grid.num_cells());
    let mut node_faces: Vec<Vec<usize>> = vec![Vec::new(); grid.num_nodes()];
    for f in 0..nf {
        for &n in &grid.face_nodes[f] {
            node_faces[n].push(f);
        }
    }
    let mut out = Emit {
        stress: TripletBuilder::with_capacity(2 * nf, 2 * nc, 16 * nf),
        bound_stress: TripletBuilder::with_capacity(2 * nf, 2 * nf, 8 * nf),
        displacement: TripletBuilder::with_capacity(2 * nf, 2 * nc, 16 * nf),
        bound_displacement: TripletBuilder::with_capacity(2 * nf, 2 * nf, 8 * nf),
    };
    for (node, faces) in node_faces.iter().enumerate() {
        if !faces.is_empty() {
            local(grid, node, faces, mu, lam, kinds, &mut out)?;
        }
    }
    Ok(StressStencil {
        stress: out.stress.build(),
        bound_stress: out.bound_stress.build(),
        displacement: out.displacement.build(),
        bound_displacement: out.bound_displacement.build(),
    })
}

struct Emit {
    stress: TripletBuilder,
    bound_stress: TripletBuilder,
    displacement: TripletBuilder,
    bound_displacement: TripletBuilder,
}

/// Subface force from cell c: Σ_k B_k (u_{f_k} - u_c), k over the two faces of c at the node.
struct SubTraction {
    faces: [usize; 2],
    b: [Matrix2<f64>; 2],
}

fn local(
    grid: &Grid,
    node: usize,
    faces: &[usize],
    mu: &[f64],
    lam: &[f64],
    kinds: &[MechFaceKind],
    out: &mut Emit,
) -> Result<()> {
    let m = faces.len();
    let face_pos: BTreeMap<usize, usize> = faces.iter().enumerate().map(|(i, &f)| (f, i)).collect();
    let mut cells: Vec<usize> = Vec::new();
    for &f in faces {
        for c in grid.face_cells[f].iter().flatten() {
            if !cells.contains(c) {
                cells.push(*c);
            }
        }
    }
    let cell_pos: BTreeMap<usize, usize> = cells.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let mut sub: BTreeMap<(usize, usize), SubTraction> = BTreeMap::new();
    // local cell gradients, row 4 lc + 2 a + b holds ∂u_a/∂x_b = grad_u u + grad_p p
    let nl = cells.len();
    let mut grad_u = DMatrix::<f64>::zeros(4 * nl, 2 * m);
    let mut grad_p = DMatrix::<f64>::zeros(4 * nl, 2 * nl);
    for (lc, &c) in cells.iter().enumerate() {
        let cf: Vec<usize> = grid.cell_faces[c].iter().map(|&(f, _)| f).filter(|f| face_pos.contains_key(f)).collect();
        if cf.len() != 2 {
            return Err(Error::SingularLocalSystem { node });
        }
        let xc = grid.cell_centers[c];
        let xn = grid.nodes[node];
        let eta = |f: usize| if matches!(kinds[f], MechFaceKind::Boundary(_)) { 0.0 } else { ETA };
        let xp = |f: usize| grid.face_centers[f] + (xn - grid.face_centers[f]) * eta(f);
        let d = Matrix2::from_rows(&[(xp(cf[0]) - xc).transpose(), (xp(cf[1]) - xc).transpose()]);
        let dinv = d.try_inverse().ok_or(Error::SingularLocalSystem { node })?;
        for (k, &f) in cf.iter().enumerate() {
            let j = face_pos[&f];
            for a in 0..2 {
                for b in 0..2 {
                    grad_u[(4 * lc + 2 * a + b, 2 * j + a)] += dinv[(b, k)];
                    grad_p[(4 * lc + 2 * a + b, 2 * lc + a)] -= dinv[(b, k)];
                }
            }
        }
        for &f in &cf {
            let n: Vector2<f64> = grid.face_normals[f] * 0.5;
            let b = [0, 1].map(|k| {
                let g: Vector2<f64> = dinv.column(k).into();
                Matrix2::identity() * (mu[c] * g.dot(&n)) + g * n.transpose() * mu[c] + n * g.transpose() * lam[c]
            });
            sub.insert((f, c), SubTraction { faces: [face_pos[&cf[0]], face_pos[&cf[1]]], b });
        }
    }
    let mut mat = DMatrix::<f64>::zeros(2 * m, 2 * m);
    let mut rhs_c = DMatrix::<f64>::zeros(2 * m, 2 * nl);
    let mut rhs_b = DMatrix::<f64>::zeros(2 * m, 2 * m);
    // adds s * (force through subface f from cell c) to rows 2*row..2*row+2
    let add_force = |row: usize, f: usize, c: usize, s: f64, mat: &mut DMatrix<f64>, rhs_c: &mut DMatrix<f64>| {
        let st = &sub[&(f, c)];
        let lc = cell_pos[&c];
        for k in 0..2 {
            for a in 0..2 {
                for b in 0..2 {
                    let v = s * st.b[k][(a, b)];
                    mat[(2 * row + a, 2 * st.faces[k] + b)] += v;
                    rhs_c[(2 * row + a, 2 * lc + b)] += v;
                }
            }
        }
    };
    for (j, &f) in faces.iter().enumerate() {
        let c0 = grid.face_cells[f][0].unwrap();
        let frac = 1.0 / grid.face_nodes[f].len() as f64;
        match kinds[f] {
            MechFaceKind::Interior => {
                let c1 = grid.face_cells[f][1].expect("interior face with one cell");
                add_force(j, f, c0, 1.0, &mut mat, &mut rhs_c);
                add_force(j, f, c1, -1.0, &mut mat, &mut rhs_c);
            }
            MechFaceKind::Boundary(comp) => {
                let mut tmp = DMatrix::<f64>::zeros(2 * m, 2 * m);
                let mut tmp_c = DMatrix::<f64>::zeros(2 * m, 2 * nl);
                add_force(j, f, c0, 1.0, &mut tmp, &mut tmp_c);
                for (a, kind) in comp.iter().enumerate() {
                    let r = 2 * j + a;
                    match kind {
                        ComponentKind::Displacement => {
                            mat[(r, r)] = 1.0;
                            rhs_b[(r, r)] = 1.0;
                        }
                        ComponentKind::Traction => {
                            mat.row_mut(r).copy_from(&tmp.row(r));
                            rhs_c.row_mut(r).copy_from(&tmp_c.row(r));
                            rhs_b[(r, r)] = frac;
                        }
                    }
                }
            }
            MechFaceKind::Fracture { partner, plus } => {
                let p = *face_pos.get(&partner).ok_or(Error::SingularLocalSystem { node })?;
                if plus {
                    for a in 0..2 {
                        mat[(2 * j + a, 2 * j + a)] = 1.0;
                        mat[(2 * j + a, 2 * p + a)] = -1.0;
                        rhs_b[(2 * j + a, 2 * j + a)] = 1.0;
                    }
                } else {
                    let cp = grid.face_cells[partner][0].unwrap();
                    add_force(j, f, c0, 1.0, &mut mat, &mut rhs_c);
                    add_force(j, partner, cp, 1.0, &mut mat, &mut rhs_c);
                }
            }
        }
    }
    // mat u = rhs_c p + rhs_b v
    let (u_c, u_b) = solve_local(&mat, &rhs_c, &rhs_b, &grad_u, &grad_p, |x| {
        // forces through every subface of the node for local unknowns x
        let mut worst: f64 = 0.0;
        for st in sub.values() {
            let mut t = Vector2::zeros();
            for k in 0..2 {
                t += st.b[k] * Vector2::new(x[2 * st.faces[k]], x[2 * st.faces[k] + 1]);
            }
            worst = worst.max(t.norm());
        }
        worst
    })
    .ok_or(Error::SingularLocalSystem { node })?;
    for (j, &f) in faces.iter().enumerate() {
        let c0 = grid.face_cells[f][0].unwrap();
        let st = &sub[&(f, c0)];
        let lc0 = cell_pos[&c0];
        let frac = 1.0 / grid.face_nodes[f].len() as f64;
        for a in 0..2 {
            let row = 2 * f + a;
            let mut cc = vec![0.0; 2 * nl];
            let mut bc = vec![0.0; 2 * m];
            for k in 0..2 {
                for b in 0..2 {
                    let coef = st.b[k][(a, b)];
                    if coef == 0.0 {
                        continue;
                    }
                    cc[2 * lc0 + b] -= coef;
                    let ur = 2 * st.faces[k] + b;
                    for (x, v) in cc.iter_mut().enumerate() {
                        *v += coef * u_c[(ur, x)];
                    }
                    for (x, v) in bc.iter_mut().enumerate() {
                        *v += coef * u_b[(ur, x)];
                    }
                }
            }
            push(&mut out.stress, row, &cc, |x| 2 * cells[x / 2] + x % 2);
            push(&mut out.bound_stress, row, &bc, |x| 2 * faces[x / 2] + x % 2);
            let ur = 2 * j + a;
            let dc: Vec<f64> = (0..2 * nl).map(|x| frac * u_c[(ur, x)]).collect();
            let db: Vec<f64> = (0..2 * m).map(|x| frac * u_b[(ur, x)]).collect();
            push(&mut out.displacement, row, &dc, |x| 2 * cells[x / 2] + x % 2);
            push(&mut out.bound_displacement, row, &db, |x| 2 * faces[x / 2] + x % 2);
        }
    }
    Ok(())
}

/// Solution of the local system for every right-hand side column. The
/// component along null modes is fixed in two stages: first make the local
/// cell gradients as uniform as possible (symmetric nodes), then make the cell
/// rotations as small as possible (single-cell corners, where the two shear
/// tractions coincide). Both reproduce linear fields that the boundary data
/// admit. Any ambiguity left must carry no force.
fn solve_local(
    mat: &DMatrix<f64>,
    rhs_c: &DMatrix<f64>,
    rhs_b: &DMatrix<f64>,
    grad_u: &DMatrix<f64>,
    grad_p: &DMatrix<f64>,
    force_of: impl Fn(&[f64]) -> f64,
) -> Option<(DMatrix<f64>, DMatrix<f64>)> {
    let svd = checked_svd(mat);
    let smax = svd.singular_values.max();
    let tol = NULL_TOL * smax;
    let mut a = svd.solve(rhs_c, tol).ok()?;
    let mut b = svd.solve(rhs_b, tol).ok()?;
    // cell columns must lie in the range; boundary columns may not (the two
    // shear tractions at a corner are one stress component) and are met in
    // the least-squares sense
    if (mat * &a - rhs_c).amax() > 1e-8 * rhs_c.amax().max(f64::MIN_POSITIVE) {
        return None;
    }
    let mut basis = null_space(mat, tol);
    if basis.ncols() == 0 {
        return Some((a, b));
    }
    let nl = grad_u.nrows() / 4;
    let mut spread = DMatrix::<f64>::identity(4 * nl, 4 * nl);
    for i in 0..4 * nl {
        for j in 0..4 * nl {
            if i % 4 == j % 4 {
                spread[(i, j)] -= 1.0 / nl as f64;
            }
        }
    }
    let mut rotation = DMatrix::<f64>::zeros(nl, 4 * nl);
    for c in 0..nl {
        rotation[(c, 4 * c + 2)] = 0.5;
        rotation[(c, 4 * c + 1)] = -0.5;
    }
    for stage in [spread, rotation] {
        if basis.ncols() == 0 {
            break;
        }
        let op = &stage * grad_u;
        let restricted = &op * &basis;
        let reduced = checked_svd(&restricted);
        let rtol = NULL_TOL * reduced.singular_values.max().max(1.0);
        let fix_a = reduced.solve(&(&op * &a + &stage * grad_p), rtol).ok()?;
        let fix_b = reduced.solve(&(&op * &b), rtol).ok()?;
        a -= &basis * fix_a;
        b -= &basis * fix_b;
        basis = &basis * null_space(&restricted, rtol);
    }
    for mode in basis.column_iter() {
        if force_of(mode.as_slice()) > 1e-8 * smax {
            return None;
        }
    }
    Some((a, b))
}

/// SVD accepted only if it reproduces `m`. The convergence test of nalgebra
/// can stop early on some local matrices; other thresholds or the transpose
/// then usually succeed.
fn checked_svd(m: &DMatrix<f64>) -> SVD<f64, Dyn, Dyn> {
    let scale = m.amax().max(f64::MIN_POSITIVE);
    let error = |s: &SVD<f64, Dyn, Dyn>| s.clone().recompose().map_or(f64::INFINITY, |r| (r - m).amax() / scale);
    let mut best: Option<(f64, SVD<f64, Dyn, Dyn>)> = None;
    for transpose in [false, true] {
        for eps in [f64::EPSILON, 0.25 * f64::EPSILON, 5.0 * f64::EPSILON] {
            let input = if transpose { m.transpose() } else { m.clone() };
            let Some(mut s) = input.try_svd(true, true, eps, 0) else { continue };
            if transpose {
                let (u, v_t) = (s.u.take(), s.v_t.take());
                s.u = v_t.map(|v| v.transpose());
                s.v_t = u.map(|u| u.transpose());
            }
            let err = error(&s);
            if err <= 1e-11 {
                return s;
            }
            if best.as_ref().map_or(true, |(e, _)| err < *e) {
                best = Some((err, s));
            }
        }
    }
    best.map_or_else(|| m.clone().svd(true, true), |(_, s)| s)
}

/// Orthonormal basis of the right null space of `m`, singular values `<= tol`.
fn null_space(m: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let n = m.ncols();
    // pad to square so the SVD yields all right singular vectors
    let padded = m.clone().resize_vertically(m.nrows().max(n), 0.0);
    let svd = checked_svd(&padded);
    let vt = svd.v_t.expect("SVD without V");
    let cols: Vec<_> = (0..n).filter(|&k| svd.singular_values[k] <= tol).map(|k| vt.row(k).transpose()).collect();
    if cols.is_empty() {
        DMatrix::zeros(n, 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}

fn push(t: &mut TripletBuilder, row: usize, vals: &[f64], col: impl Fn(usize) -> usize) {
    for (x, &v) in vals.iter().enumerate() {
        if v != 0.0 {
            t.push(row, col(x), v);
        }
    }
}
