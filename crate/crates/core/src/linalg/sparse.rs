use std::fmt;

/// Square or rectangular sparse matrix in compressed sparse row layout.
///
/// Column indices are sorted and unique within every row.
#[derive(Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl fmt::Debug for CsrMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CsrMatrix({}x{}, nnz={})", self.nrows, self.ncols, self.nnz())
    }
}

/// Accumulates (row, col, value) entries; duplicates are summed on conversion.
#[derive(Clone, Debug, Default)]
pub struct TripletBuilder {
    nrows: usize,
    ncols: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl TripletBuilder {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Self { nrows, ncols, entries: Vec::new() }
    }

    pub fn with_capacity(nrows: usize, ncols: usize, cap: usize) -> Self {
        Self { nrows, ncols, entries: Vec::with_capacity(cap) }
    }

    #[inline]
    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.nrows && col < self.ncols, "entry ({row},{col}) out of bounds");
        self.entries.push((row, col, value));
    }

    pub fn build(self) -> CsrMatrix {
        CsrMatrix::from_triplets(self.nrows, self.ncols, self.entries)
    }
}

impl CsrMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self { nrows, ncols, row_ptr: vec![0; nrows + 1], col_idx: Vec::new(), values: Vec::new() }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    /// Builds a matrix from unordered triplets. Duplicate entries are summed;
    /// explicit zeros are kept so that the sparsity pattern is deterministic.
    pub fn from_triplets(nrows: usize, ncols: usize, mut entries: Vec<(usize, usize, f64)>) -> Self {
        entries.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; nrows + 1];
        let mut col_idx = Vec::with_capacity(entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in entries {
            assert!(r < nrows && c < ncols, "triplet ({r},{c}) outside {nrows}x{ncols}");
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self { nrows, ncols, row_ptr, col_idx, values }
    }

    /// Builds from a dense row-major array, dropping exact zeros.
    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.len());
        let mut b = TripletBuilder::new(nrows, ncols);
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    b.push(i, j, v);
                }
            }
        }
        b.build()
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Column indices and values of one row.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.col_idx[a..b], &self.values[a..b])
    }

    pub fn row_iter(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (c, v) = self.row(i);
        c.iter().copied().zip(v.iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (c, v) = self.row(i);
        match c.binary_search(&j) {
            Ok(k) => v[k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        for (i, yi) in y.iter_mut().enumerate() {
            let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
            *yi = self.col_idx[a..b].iter().zip(&self.values[a..b]).map(|(&j, &v)| v * x[j]).sum();
        }
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut b = TripletBuilder::with_capacity(self.ncols, self.nrows, self.nnz());
        for i in 0..self.nrows {
            for (j, v) in self.row_iter(i) {
                b.push(j, i, v);
            }
        }
        b.build()
    }

    /// Product `self * other`.
    pub fn matmul(&self, other: &CsrMatrix) -> CsrMatrix {
        assert_eq!(self.ncols, other.nrows);
        let mut b = TripletBuilder::new(self.nrows, other.ncols);
        for i in 0..self.nrows {
            for (k, a) in self.row_iter(i) {
                for (j, v) in other.row_iter(k) {
                    b.push(i, j, a * v);
                }
            }
        }
        b.build()
    }

    pub fn scale(&mut self, s: f64) {
        self.values.iter_mut().for_each(|v| *v *= s);
    }

    /// `self + s * other`.
    pub fn add_scaled(&self, s: f64, other: &CsrMatrix) -> CsrMatrix {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let mut b = TripletBuilder::with_capacity(self.nrows, self.ncols, self.nnz() + other.nnz());
        for i in 0..self.nrows {
            for (j, v) in self.row_iter(i) {
                b.push(i, j, v);
            }
            for (j, v) in other.row_iter(i) {
                b.push(i, j, s * v);
            }
        }
        b.build()
    }

    /// Returns a copy with `d[i]` added to each diagonal entry.
    pub fn add_diagonal(&self, d: &[f64]) -> CsrMatrix {
        assert_eq!(d.len(), self.nrows);
        let mut b = TripletBuilder::with_capacity(self.nrows, self.ncols, self.nnz() + d.len());
        for i in 0..self.nrows {
            for (j, v) in self.row_iter(i) {
                b.push(i, j, v);
            }
            b.push(i, i, d[i]);
        }
        b.build()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Structural and numerical symmetry check with relative tolerance.
    pub fn is_symmetric(&self, rtol: f64) -> bool {
        if self.nrows != self.ncols {
            return false;
        }
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        for i in 0..self.nrows {
            for (j, v) in self.row_iter(i) {
                if (v - self.get(j, i)).abs() > rtol * scale {
                    return false;
                }
            }
        }
        true
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.ncols]; self.nrows];
        for (i, row) in d.iter_mut().enumerate() {
            for (j, v) in self.row_iter(i) {
                row[j] = v;
            }
        }
        d
    }
}

/// Maps (grid, cell, component) triples to rows of a global system.
///
/// Grids appear in the order of the mixed-dimensional grid (descending
/// dimension, insertion order within a dimension); within a grid the unknowns
/// are ordered by cell and then by component.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DofMap {
    offsets: Vec<usize>,
    components: usize,
}

impl DofMap {
    pub fn new(cells_per_grid: &[usize], components: usize) -> Self {
        assert!(components > 0);
        let mut offsets = Vec::with_capacity(cells_per_grid.len() + 1);
        offsets.push(0);
        for &n in cells_per_grid {
            offsets.push(offsets.last().unwrap() + n * components);
        }
        Self { offsets, components }
    }

    /// A single block of `n` scalar unknowns.
    pub fn single(n: usize) -> Self {
        Self::new(&[n], 1)
    }

    pub fn len(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn num_grids(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn grid_offset(&self, grid: usize) -> usize {
        self.offsets[grid]
    }

    pub fn grid_range(&self, grid: usize) -> std::ops::Range<usize> {
        self.offsets[grid]..self.offsets[grid + 1]
    }

    #[inline]
    pub fn index(&self, grid: usize, cell: usize, component: usize) -> usize {
        debug_assert!(component < self.components);
        let i = self.offsets[grid] + cell * self.components + component;
        debug_assert!(i < self.offsets[grid + 1]);
        i
    }

    pub fn lookup(&self, row: usize) -> Option<(usize, usize, usize)> {
        if row >= self.len() {
            return None;
        }
        let grid = self.offsets.partition_point(|&o| o <= row) - 1;
        let local = row - self.offsets[grid];
        Some((grid, local / self.components, local % self.components))
    }

    /// Splits a global vector into per-grid slices.
    pub fn split<'a>(&self, x: &'a [f64]) -> Vec<&'a [f64]> {
        (0..self.num_grids()).map(|g| &x[self.grid_range(g)]).collect()
    }
}

/// Assembled linear system `matrix * x = rhs`.
#[derive(Clone, Debug)]
pub struct SparseSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    pub dof_map: DofMap,
}

impl SparseSystem {
    pub fn new(matrix: CsrMatrix, rhs: Vec<f64>, dof_map: DofMap) -> Self {
        assert_eq!(matrix.nrows(), matrix.ncols(), "system matrix must be square");
        assert_eq!(matrix.nrows(), rhs.len());
        assert_eq!(dof_map.len(), rhs.len());
        Self { matrix, rhs, dof_map }
    }

    pub fn len(&self) -> usize {
        self.rhs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rhs.is_empty()
    }

    /// `‖A x − b‖₂ / ‖b‖₂`, or the absolute residual norm when `b = 0`.
    pub fn relative_residual(&self, x: &[f64]) -> f64 {
        let r = residual(&self.matrix, x, &self.rhs);
        let bn = norm(&self.rhs);
        if bn > 0.0 {
            norm(&r) / bn
        } else {
            norm(&r)
        }
    }
}

pub fn residual(a: &CsrMatrix, x: &[f64], b: &[f64]) -> Vec<f64> {
    let ax = a.matvec(x);
    b.iter().zip(ax).map(|(bi, ai)| bi - ai).collect()
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
