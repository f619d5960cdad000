//! Square nonnegative matrix storage used for the supradjacency matrix.
//!
//! Dense row-major storage is used unless fewer than a quarter of the
//! entries are nonzero, in which case a CSR layout is used. All reductions
//! run in a fixed order so results do not depend on thread scheduling.

use ndarray::{Array2, Axis};
use rayon::prelude::*;

/// Density below which [`SupraMatrix::from_dense_auto`] switches to CSR.
pub const SPARSE_DENSITY_THRESHOLD: f64 = 0.25;

const ROW_CHUNK: usize = 256;

#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn from_dense(a: &Array2<f64>) -> Self {
        let n = a.nrows();
        let mut indptr = Vec::with_capacity(n + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for row in a.rows() {
            for (c, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    indices.push(c);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        CsrMatrix {
            n,
            indptr,
            indices,
            values,
        }
    }

    fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.indptr[r]..self.indptr[r + 1];
        self.indices[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SupraMatrix {
    Dense(Array2<f64>),
    Sparse(CsrMatrix),
}

impl SupraMatrix {
    /// Chooses the layout from the fraction of nonzero entries.
    pub fn from_dense_auto(a: Array2<f64>) -> Self {
        assert_eq!(a.nrows(), a.ncols(), "supradjacency matrix must be square");
        let total = a.len().max(1);
        let nnz = a.iter().filter(|&&v| v != 0.0).count();
        if (nnz as f64) / (total as f64) < SPARSE_DENSITY_THRESHOLD {
            SupraMatrix::Sparse(CsrMatrix::from_dense(&a))
        } else {
            SupraMatrix::Dense(a)
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            SupraMatrix::Dense(a) => a.nrows(),
            SupraMatrix::Sparse(s) => s.n,
        }
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self, SupraMatrix::Sparse(_))
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        match self {
            SupraMatrix::Dense(a) => a[[r, c]],
            SupraMatrix::Sparse(s) => {
                let span = s.indptr[r]..s.indptr[r + 1];
                match s.indices[span.clone()].binary_search(&c) {
                    Ok(pos) => s.values[span.start + pos],
                    Err(_) => 0.0,
                }
            }
        }
    }

    pub fn nnz(&self) -> usize {
        match self {
            SupraMatrix::Dense(a) => a.iter().filter(|&&v| v != 0.0).count(),
            SupraMatrix::Sparse(s) => s.values.len(),
        }
    }

    pub fn density(&self) -> f64 {
        let n = self.dim();
        if n == 0 {
            0.0
        } else {
            self.nnz() as f64 / (n * n) as f64
        }
    }

    /// Calls `f(row, col, value)` for every nonzero entry in row-major order.
    pub fn for_each_nonzero(&self, mut f: impl FnMut(usize, usize, f64)) {
        match self {
            SupraMatrix::Dense(a) => {
                for (r, row) in a.rows().into_iter().enumerate() {
                    for (c, &v) in row.iter().enumerate() {
                        if v != 0.0 {
                            f(r, c, v);
                        }
                    }
                }
            }
            SupraMatrix::Sparse(s) => {
                for r in 0..s.n {
                    for (c, v) in s.row(r) {
                        f(r, c, v);
                    }
                }
            }
        }
    }

    pub fn to_dense(&self) -> Array2<f64> {
        match self {
            SupraMatrix::Dense(a) => a.clone(),
            SupraMatrix::Sparse(s) => {
                let mut a = Array2::zeros((s.n, s.n));
                for r in 0..s.n {
                    for (c, v) in s.row(r) {
                        a[[r, c]] = v;
                    }
                }
                a
            }
        }
    }

    /// Copy of the `rows × cols` block starting at `(r0, c0)`.
    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Array2<f64> {
        match self {
            SupraMatrix::Dense(a) => a
                .slice(ndarray::s![r0..r0 + rows, c0..c0 + cols])
                .to_owned(),
            SupraMatrix::Sparse(s) => {
                let mut b = Array2::zeros((rows, cols));
                for r in 0..rows {
                    for (c, v) in s.row(r0 + r) {
                        if c >= c0 && c < c0 + cols {
                            b[[r, c - c0]] = v;
                        }
                    }
                }
                b
            }
        }
    }

    /// Applies `f` to every nonzero entry; zero entries stay zero.
    pub fn map_nonzero(&self, f: impl Fn(f64) -> f64 + Sync) -> SupraMatrix {
        match self {
            SupraMatrix::Dense(a) => {
                let mut out = a.clone();
                out.par_mapv_inplace(|v| if v != 0.0 { f(v) } else { 0.0 });
                SupraMatrix::Dense(out)
            }
            SupraMatrix::Sparse(s) => SupraMatrix::Sparse(CsrMatrix {
                n: s.n,
                indptr: s.indptr.clone(),
                indices: s.indices.clone(),
                values: s.values.iter().map(|&v| f(v)).collect(),
            }),
        }
    }

    pub fn scaled(&self, factor: f64) -> SupraMatrix {
        self.map_nonzero(|v| v * factor)
    }

    /// `W · v`.
    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.dim());
        match self {
            SupraMatrix::Dense(a) => a
                .axis_iter(Axis(0))
                .into_par_iter()
                .map(|row| row.iter().zip(v).map(|(w, x)| w * x).sum())
                .collect(),
            SupraMatrix::Sparse(s) => (0..s.n)
                .into_par_iter()
                .map(|r| s.row(r).map(|(c, w)| w * v[c]).sum())
                .collect(),
        }
    }

    /// `Wᵀ · u`, accumulated over fixed row chunks summed in order.
    pub fn tmatvec(&self, u: &[f64]) -> Vec<f64> {
        let n = self.dim();
        assert_eq!(u.len(), n);
        let chunks: Vec<(usize, usize)> = (0..n)
            .step_by(ROW_CHUNK)
            .map(|start| (start, (start + ROW_CHUNK).min(n)))
            .collect();
        let partials: Vec<Vec<f64>> = chunks
            .par_iter()
            .map(|&(start, end)| {
                let mut acc = vec![0.0; n];
                for r in start..end {
                    let ur = u[r];
                    if ur == 0.0 {
                        continue;
                    }
                    match self {
                        SupraMatrix::Dense(a) => {
                            for (slot, w) in acc.iter_mut().zip(a.row(r)) {
                                *slot += w * ur;
                            }
                        }
                        SupraMatrix::Sparse(s) => {
                            for (c, w) in s.row(r) {
                                acc[c] += w * ur;
                            }
                        }
                    }
                }
                acc
            })
            .collect();
        let mut out = vec![0.0; n];
        for p in partials {
            for (o, x) in out.iter_mut().zip(p) {
                *o += x;
            }
        }
        out
    }

    /// Out-strengths, `W · 1`.
    pub fn row_sums(&self) -> Vec<f64> {
        self.matvec(&vec![1.0; self.dim()])
    }

    /// In-strengths, `Wᵀ · 1`.
    pub fn col_sums(&self) -> Vec<f64> {
        self.tmatvec(&vec![1.0; self.dim()])
    }

    /// Entry sum, taken as the ordered sum of row sums.
    pub fn sum(&self) -> f64 {
        self.row_sums().iter().sum()
    }
}
