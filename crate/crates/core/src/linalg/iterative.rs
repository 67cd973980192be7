//! Krylov solvers (CG, BiCGStab) with Jacobi and ILU(0) preconditioning.

use super::sparse::{dot, norm, CsrMatrix};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preconditioner {
    None,
    Jacobi,
    Ilu0,
}

/// Result of an iterative solve.
#[derive(Clone, Debug)]
pub struct IterativeOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub relative_residual: f64,
}

enum Precond {
    Identity,
    Jacobi(Vec<f64>),
    Ilu(Ilu0),
}

impl Precond {
    fn new(a: &CsrMatrix, kind: Preconditioner) -> Result<Self> {
        Ok(match kind {
            Preconditioner::None => Precond::Identity,
            Preconditioner::Jacobi => Precond::Jacobi(
                a.diagonal().iter().map(|&d| if d != 0.0 { 1.0 / d } else { 1.0 }).collect(),
            ),
            Preconditioner::Ilu0 => Precond::Ilu(Ilu0::new(a)?),
        })
    }

    fn apply(&self, r: &[f64]) -> Vec<f64> {
        match self {
            Precond::Identity => r.to_vec(),
            Precond::Jacobi(d) => r.iter().zip(d).map(|(a, b)| a * b).collect(),
            Precond::Ilu(ilu) => ilu.solve(r),
        }
    }
}

/// Incomplete LU factorization with the sparsity pattern of `A` (natural ordering).
pub struct Ilu0 {
    lu: CsrMatrix,
    diag: Vec<usize>,
}

impl Ilu0 {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        let n = a.nrows();
        let rp = a.row_ptr().to_vec();
        let ci = a.col_idx().to_vec();
        let mut val = a.values().to_vec();
        let mut diag = vec![usize::MAX; n];
        for i in 0..n {
            for k in rp[i]..rp[i + 1] {
                if ci[k] == i {
                    diag[i] = k;
                }
            }
            if diag[i] == usize::MAX {
                return Err(Error::SingularMatrix { row: i });
            }
        }
        let mut pos = vec![usize::MAX; n];
        for i in 0..n {
            for k in rp[i]..rp[i + 1] {
                pos[ci[k]] = k;
            }
            for k in rp[i]..rp[i + 1] {
                let j = ci[k];
                if j >= i {
                    break;
                }
                let piv = val[diag[j]];
                if piv == 0.0 {
                    return Err(Error::SingularMatrix { row: j });
                }
                let m = val[k] / piv;
                val[k] = m;
                for kk in diag[j] + 1..rp[j + 1] {
                    let p = pos[ci[kk]];
                    if p != usize::MAX {
                        val[p] -= m * val[kk];
                    }
                }
            }
            for k in rp[i]..rp[i + 1] {
                pos[ci[k]] = usize::MAX;
            }
            if val[diag[i]] == 0.0 {
                return Err(Error::SingularMatrix { row: i });
            }
        }
        let lu = CsrMatrix::from_triplets(
            n,
            n,
            (0..n).flat_map(|i| (rp[i]..rp[i + 1]).map(move |k| (i, k))).map(|(i, k)| (i, ci[k], val[k])).collect(),
        );
        Ok(Self { lu, diag })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = b.len();
        let (rp, ci, v) = (self.lu.row_ptr(), self.lu.col_idx(), self.lu.values());
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in rp[i]..self.diag[i] {
                s -= v[k] * y[ci[k]];
            }
            y[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in self.diag[i] + 1..rp[i + 1] {
                s -= v[k] * y[ci[k]];
            }
            y[i] = s / v[self.diag[i]];
        }
        y
    }
}

/// Preconditioned conjugate gradients. The matrix must be symmetric positive (semi-)definite.
pub fn conjugate_gradient(
    a: &CsrMatrix,
    b: &[f64],
    precond: Preconditioner,
    tol: f64,
    max_iter: usize,
) -> Result<IterativeOutcome> {
    let n = b.len();
    let bn = norm(b);
    if bn == 0.0 {
        return Ok(IterativeOutcome { x: vec![0.0; n], iterations: 0, relative_residual: 0.0 });
    }
    let m = Precond::new(a, precond)?;
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z = m.apply(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    for it in 1..=max_iter {
        a.matvec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 || !pap.is_finite() {
            return Err(Error::SolverDivergence(format!("CG: non-positive curvature at iteration {it}")));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let res = norm(&r) / bn;
        if res <= tol {
            return Ok(IterativeOutcome { x, iterations: it, relative_residual: res });
        }
        z = m.apply(&r);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::MaxIterations { iterations: max_iter, residual: norm(&r) / bn })
}

/// Right-preconditioned BiCGStab for general nonsymmetric matrices.
pub fn bicgstab(
    a: &CsrMatrix,
    b: &[f64],
    precond: Preconditioner,
    tol: f64,
    max_iter: usize,
) -> Result<IterativeOutcome> {
    let n = b.len();
    let bn = norm(b);
    if bn == 0.0 {
        return Ok(IterativeOutcome { x: vec![0.0; n], iterations: 0, relative_residual: 0.0 });
    }
    let m = Precond::new(a, precond)?;
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let r0 = r.clone();
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let breakdown = 1e-300;
    for it in 1..=max_iter {
        let rho_new = dot(&r0, &r);
        if rho_new.abs() < breakdown * bn * bn + f64::MIN_POSITIVE {
            return Err(Error::Breakdown { iteration: it });
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        let phat = m.apply(&p);
        a.matvec_into(&phat, &mut v);
        let r0v = dot(&r0, &v);
        if r0v.abs() < f64::MIN_POSITIVE {
            return Err(Error::Breakdown { iteration: it });
        }
        alpha = rho / r0v;
        let s: Vec<f64> = r.iter().zip(&v).map(|(ri, vi)| ri - alpha * vi).collect();
        let sn = norm(&s) / bn;
        if sn <= tol {
            for i in 0..n {
                x[i] += alpha * phat[i];
            }
            return Ok(IterativeOutcome { x, iterations: it, relative_residual: sn });
        }
        let shat = m.apply(&s);
        let t = a.matvec(&shat);
        let tt = dot(&t, &t);
        if tt == 0.0 {
            return Err(Error::Breakdown { iteration: it });
        }
        omega = dot(&t, &s) / tt;
        for i in 0..n {
            x[i] += alpha * phat[i] + omega * shat[i];
            r[i] = s[i] - omega * t[i];
        }
        let res = norm(&r) / bn;
        if !res.is_finite() {
            return Err(Error::SolverDivergence("BiCGStab residual is not finite".into()));
        }
        if res <= tol {
            return Ok(IterativeOutcome { x, iterations: it, relative_residual: res });
        }
        if omega == 0.0 {
            return Err(Error::Breakdown { iteration: it });
        }
    }
    let res = norm(&r) / bn;
    Err(Error::MaxIterations { iterations: max_iter, residual: res })
}
