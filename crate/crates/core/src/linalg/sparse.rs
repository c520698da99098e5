use alloc::vec;
use alloc::vec::Vec;

use super::{CMatrix, C64, ONE, ZERO};

/// Compressed sparse row complex matrix with sorted, duplicate-free column
/// indices in every row and no explicitly stored zeros.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<C64>,
}

impl SparseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, indptr: vec![0; rows + 1], indices: Vec::new(), values: Vec::new() }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            rows: n,
            cols: n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            values: vec![ONE; n],
        }
    }

    /// Builds from `(row, col, value)` triplets; duplicates are summed and
    /// entries that end up exactly zero are dropped.
    pub fn from_triplets(rows: usize, cols: usize, triplets: &[(usize, usize, C64)]) -> Self {
        let mut sorted: Vec<(usize, usize, C64)> = triplets.to_vec();
        for &(i, j, _) in &sorted {
            assert!(i < rows && j < cols, "triplet ({i}, {j}) out of bounds for {rows}x{cols}");
        }
        sorted.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));

        let mut indptr = vec![0usize; rows + 1];
        let mut indices = Vec::with_capacity(sorted.len());
        let mut values = Vec::with_capacity(sorted.len());
        let mut k = 0;
        while k < sorted.len() {
            let (i, j, mut v) = sorted[k];
            k += 1;
            while k < sorted.len() && sorted[k].0 == i && sorted[k].1 == j {
                v += sorted[k].2;
                k += 1;
            }
            if v != ZERO {
                indices.push(j);
                values.push(v);
                indptr[i + 1] += 1;
            }
        }
        for i in 0..rows {
            indptr[i + 1] += indptr[i];
        }
        Self { rows, cols, indptr, indices, values }
    }

    pub fn from_dense(m: &CMatrix) -> Self {
        let mut triplets = Vec::new();
        for i in 0..m.rows() {
            for j in 0..m.cols() {
                if m[(i, j)] != ZERO {
                    triplets.push((i, j, m[(i, j)]));
                }
            }
        }
        Self::from_triplets(m.rows(), m.cols(), &triplets)
    }

    pub fn to_dense(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.rows, self.cols);
        for (i, j, v) in self.iter() {
            m[(i, j)] = v;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn is_zero(&self) -> bool {
        self.values.is_empty()
    }

    /// Column indices and values of row `i`.
    #[inline]
    pub fn row(&self, i: usize) -> (&[usize], &[C64]) {
        let (a, b) = (self.indptr[i], self.indptr[i + 1]);
        (&self.indices[a..b], &self.values[a..b])
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => ZERO,
        }
    }

    /// Iterates stored entries as `(row, col, value)` in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.rows).flat_map(move |i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(move |(&j, &v)| (i, j, v))
        })
    }

    pub fn triplets(&self) -> Vec<(usize, usize, C64)> {
        self.iter().collect()
    }

    pub fn map_values(&self, f: impl Fn(C64) -> C64) -> Self {
        let trips: Vec<_> = self.iter().map(|(i, j, v)| (i, j, f(v))).collect();
        Self::from_triplets(self.rows, self.cols, &trips)
    }

    pub fn scale(&self, s: C64) -> Self {
        self.map_values(|v| v * s)
    }

    pub fn conj(&self) -> Self {
        self.map_values(|v| v.conj())
    }

    pub fn transpose(&self) -> Self {
        let trips: Vec<_> = self.iter().map(|(i, j, v)| (j, i, v)).collect();
        Self::from_triplets(self.cols, self.rows, &trips)
    }

    pub fn adjoint(&self) -> Self {
        let trips: Vec<_> = self.iter().map(|(i, j, v)| (j, i, v.conj())).collect();
        Self::from_triplets(self.cols, self.rows, &trips)
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "shape mismatch in add");
        let mut trips = self.triplets();
        trips.extend(other.iter());
        Self::from_triplets(self.rows, self.cols, &trips)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-ONE))
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "inner dimensions differ");
        let mut trips = Vec::new();
        let mut acc = vec![ZERO; other.cols];
        let mut touched: Vec<usize> = Vec::new();
        let mut mark = vec![false; other.cols];
        for i in 0..self.rows {
            let (cols, vals) = self.row(i);
            for (&k, &a) in cols.iter().zip(vals) {
                let (ocols, ovals) = other.row(k);
                for (&j, &b) in ocols.iter().zip(ovals) {
                    if !mark[j] {
                        mark[j] = true;
                        touched.push(j);
                    }
                    acc[j] += a * b;
                }
            }
            for &j in &touched {
                trips.push((i, j, acc[j]));
                acc[j] = ZERO;
                mark[j] = false;
            }
            touched.clear();
        }
        Self::from_triplets(self.rows, other.cols, &trips)
    }

    /// Kronecker product `self (x) other`.
    pub fn kron(&self, other: &Self) -> Self {
        let mut trips = Vec::with_capacity(self.nnz() * other.nnz());
        for (i, j, a) in self.iter() {
            for (k, l, b) in other.iter() {
                trips.push((i * other.rows + k, j * other.cols + l, a * b));
            }
        }
        Self::from_triplets(self.rows * other.rows, self.cols * other.cols, &trips)
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| {
                let (cols, vals) = self.row(i);
                cols.iter().zip(vals).map(|(&j, v)| v * x[j]).sum()
            })
            .collect()
    }

    pub fn frobenius_norm(&self) -> f64 {
        libm::sqrt(self.values.iter().map(|z| z.norm_sqr()).sum())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Restriction to the given rows and columns (in the given order).
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> CMatrix {
        CMatrix::from_fn(rows.len(), cols.len(), |i, j| self.get(rows[i], cols[j]))
    }

    pub fn hermiticity_error(&self) -> f64 {
        self.iter().map(|(i, j, v)| (v - self.get(j, i).conj()).norm()).fold(0.0, f64::max)
    }
}
