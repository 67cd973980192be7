//! Banded LU factorization with partial pivoting on a reverse Cuthill-McKee
//! reordering of the matrix.

use std::collections::VecDeque;

use super::sparse::{norm, CsrMatrix, SparseSystem};
use crate::{Error, Result};

/// Reverse Cuthill-McKee ordering of the symmetrized sparsity pattern.
/// `perm[new] = old`.
pub fn reverse_cuthill_mckee(a: &CsrMatrix) -> Vec<usize> {
    let n = a.nrows();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for &j in a.row(i).0 {
            if i != j {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    for nb in adj.iter_mut() {
        nb.sort_unstable();
        nb.dedup();
    }
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&i| (degree[i], i));
    for &seed in &by_degree {
        if visited[seed] {
            continue;
        }
        let start = pseudo_peripheral(seed, &adj, &degree);
        visited[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = adj[v].iter().copied().filter(|&w| !visited[w]).collect();
            next.sort_by_key(|&w| (degree[w], w));
            for w in next {
                visited[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

fn bfs_levels(start: usize, adj: &[Vec<usize>]) -> (Vec<usize>, usize) {
    let mut level = vec![usize::MAX; adj.len()];
    level[start] = 0;
    let mut last = vec![start];
    let mut depth = 0;
    let mut queue = VecDeque::from([start]);
    while let Some(v) = queue.pop_front() {
        for &w in &adj[v] {
            if level[w] == usize::MAX {
                level[w] = level[v] + 1;
                if level[w] > depth {
                    depth = level[w];
                    last.clear();
                }
                if level[w] == depth {
                    last.push(w);
                }
                queue.push_back(w);
            }
        }
    }
    (last, depth)
}

fn pseudo_peripheral(seed: usize, adj: &[Vec<usize>], degree: &[usize]) -> usize {
    let mut v = seed;
    let (mut last, mut depth) = bfs_levels(v, adj);
    for _ in 0..8 {
        let cand = *last.iter().min_by_key(|&&w| (degree[w], w)).unwrap();
        let (l2, d2) = bfs_levels(cand, adj);
        if d2 <= depth {
            break;
        }
        v = cand;
        last = l2;
        depth = d2;
    }
    v
}

/// LU factors of a row/column permuted banded matrix.
#[derive(Clone, Debug)]
pub struct BandLu {
    n: usize,
    kl: usize,
    width: usize,
    /// Row-major band rows; row `i` stores columns `i - kl ..= i + kl + ku`.
    band: Vec<f64>,
    lower: Vec<f64>,
    pivots: Vec<usize>,
    perm: Vec<usize>,
}

impl BandLu {
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        assert_eq!(a.nrows(), a.ncols());
        let n = a.nrows();
        let perm = reverse_cuthill_mckee(a);
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let (mut kl, mut ku) = (0usize, 0usize);
        for old_i in 0..n {
            let i = inv[old_i];
            for &old_j in a.row(old_i).0 {
                let j = inv[old_j];
                if j < i {
                    kl = kl.max(i - j);
                } else {
                    ku = ku.max(j - i);
                }
            }
        }
        let width = 2 * kl + ku + 1;
        let mut band = vec![0.0; n * width];
        for old_i in 0..n {
            let i = inv[old_i];
            for (old_j, v) in a.row_iter(old_i) {
                let j = inv[old_j];
                band[i * width + (j + kl - i)] += v;
            }
        }
        let scale = a.max_abs();
        let threshold = scale * 1e-14 * (n.max(1) as f64);
        let mut lower = vec![0.0; n * kl.max(1)];
        let mut pivots = vec![0; n];
        let upper = kl + ku;
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = band[k * width + kl].abs();
            for i in k + 1..=last_row {
                let v = band[i * width + (k + kl - i)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best <= threshold || !best.is_finite() {
                return Err(Error::SingularMatrix { row: perm[k] });
            }
            pivots[k] = p;
            let last_col = (k + upper).min(n - 1);
            if p != k {
                for j in k..=last_col {
                    band.swap(k * width + (j + kl - k), p * width + (j + kl - p));
                }
            }
            let piv = band[k * width + kl];
            for i in k + 1..=last_row {
                let idx = i * width + (k + kl - i);
                let m = band[idx] / piv;
                band[idx] = 0.0;
                lower[k * kl + (i - k - 1)] = m;
                if m != 0.0 {
                    for j in k + 1..=last_col {
                        band[i * width + (j + kl - i)] -= m * band[k * width + (j + kl - k)];
                    }
                }
            }
        }
        Ok(Self { n, kl, width, band, lower, pivots, perm })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let (n, kl, width) = (self.n, self.kl, self.width);
        let mut y: Vec<f64> = self.perm.iter().map(|&old| b[old]).collect();
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                y.swap(k, p);
            }
            let yk = y[k];
            if yk != 0.0 {
                for i in k + 1..=(k + kl).min(n.saturating_sub(1)) {
                    y[i] -= self.lower[k * kl + (i - k - 1)] * yk;
                }
            }
        }
        let upper = width - kl - 1;
        for k in (0..n).rev() {
            let mut s = y[k];
            for j in k + 1..=(k + upper).min(n - 1) {
                s -= self.band[k * width + (j + kl - k)] * y[j];
            }
            y[k] = s / self.band[k * width + kl];
        }
        let mut x = vec![0.0; n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }
}

/// Direct solve with iterative refinement on compensated residuals.
pub fn solve_direct(sys: &SparseSystem) -> Result<Vec<f64>> {
    solve_direct_matrix(&sys.matrix, &sys.rhs)
}

pub fn solve_direct_matrix(a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>> {
    if a.nrows() == 0 {
        return Ok(Vec::new());
    }
    solve_factored(a, &BandLu::factor(a)?, b)
}

/// Solve with existing factors of `a`, refined against `a`.
pub fn solve_factored(a: &CsrMatrix, lu: &BandLu, b: &[f64]) -> Result<Vec<f64>> {
    if a.nrows() == 0 {
        return Ok(Vec::new());
    }
    let mut x = lu.solve(b);
    let bn = norm(b);
    for _ in 0..4 {
        let r = accurate_residual(a, &x, b);
        if norm(&r) <= 1e-15 * bn {
            break;
        }
        let dx = lu.solve(&r);
        x.iter_mut().zip(dx).for_each(|(xi, d)| *xi += d);
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularSystem("direct solve produced non-finite values".into()));
    }
    Ok(x)
}

/// `b - A x` with error-free products and compensated summation per row.
fn accurate_residual(a: &CsrMatrix, x: &[f64], b: &[f64]) -> Vec<f64> {
    (0..a.nrows())
        .map(|i| {
            let (mut s, mut c) = (b[i], 0.0);
            for (j, v) in a.row_iter(i) {
                let p = -v * x[j];
                let pe = (-v).mul_add(x[j], -p);
                let t = s + p;
                c += if s.abs() >= p.abs() { (s - t) + p } else { (p - t) + s } + pe;
                s = t;
            }
            s + c
        })
        .collect()
}
