use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Compressed sparse row matrix with sorted, duplicate-free column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn try_new(
        nrows: usize,
        ncols: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if row_ptr.len() != nrows + 1 {
            return Err(Error::InvalidMatrix(format!(
                "row pointer length {} != nrows + 1 = {}",
                row_ptr.len(),
                nrows + 1
            )));
        }
        if row_ptr[0] != 0 || row_ptr.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidMatrix("row pointers must start at 0 and be nondecreasing".into()));
        }
        if *row_ptr.last().unwrap() != col_idx.len() || col_idx.len() != values.len() {
            return Err(Error::InvalidMatrix("index/value lengths disagree with row pointers".into()));
        }
        if let Some(&c) = col_idx.iter().find(|&&c| c >= ncols) {
            return Err(Error::InvalidMatrix(format!("column index {c} out of bounds for {ncols} columns")));
        }
        Ok(Self { nrows, ncols, row_ptr, col_idx, values })
    }

    /// Builds a CSR matrix from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut sorted: Vec<(usize, usize, f64)> = Vec::with_capacity(triplets.len());
        for &(r, c, v) in triplets {
            if r >= nrows || c >= ncols {
                return Err(Error::InvalidMatrix(format!(
                    "entry ({r}, {c}) out of bounds for {nrows}x{ncols} matrix"
                )));
            }
            sorted.push((r, c, v));
        }
        sorted.sort_by_key(|&(r, c, _)| (r, c));

        let mut row_ptr = vec![0usize; nrows + 1];
        let mut col_idx = Vec::with_capacity(sorted.len());
        let mut values: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in sorted {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
                continue;
            }
            row_ptr[r + 1] += 1;
            col_idx.push(c);
            values.push(v);
            last = Some((r, c));
        }
        for i in 0..nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self::try_new(nrows, ncols, row_ptr, col_idx, values)
    }

    pub fn from_dense(m: &DMatrix<f64>) -> Self {
        let mut triplets = Vec::new();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let v = m[(i, j)];
                if v != 0.0 {
                    triplets.push((i, j, v));
                }
            }
        }
        Self::from_triplets(m.nrows(), m.ncols(), &triplets).expect("dense entries are in bounds")
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

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[span.clone()].iter().copied().zip(self.values[span].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[span.clone()].binary_search(&j) {
            Ok(k) => self.values[span.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                m[(i, j)] = v;
            }
        }
        m
    }
}

/// System matrix behind a uniform matvec interface.
#[derive(Debug, Clone, PartialEq)]
pub enum MatrixHandle {
    Dense(DMatrix<f64>),
    Csr(CsrMatrix),
}

impl From<DMatrix<f64>> for MatrixHandle {
    fn from(m: DMatrix<f64>) -> Self {
        MatrixHandle::Dense(m)
    }
}

impl From<CsrMatrix> for MatrixHandle {
    fn from(m: CsrMatrix) -> Self {
        MatrixHandle::Csr(m)
    }
}

impl MatrixHandle {
    pub fn identity(n: usize) -> Self {
        MatrixHandle::Dense(DMatrix::identity(n, n))
    }

    pub fn nrows(&self) -> usize {
        match self {
            MatrixHandle::Dense(m) => m.nrows(),
            MatrixHandle::Csr(m) => m.nrows(),
        }
    }

    pub fn ncols(&self) -> usize {
        match self {
            MatrixHandle::Dense(m) => m.ncols(),
            MatrixHandle::Csr(m) => m.ncols(),
        }
    }

    pub fn is_square(&self) -> bool {
        self.nrows() == self.ncols()
    }

    /// `A x`, summing each row in increasing column order.
    pub fn apply(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        if x.len() != self.ncols() {
            return Err(Error::DimensionMismatch { expected: self.ncols(), found: x.len() });
        }
        Ok(match self {
            MatrixHandle::Dense(m) => {
                let mut y = DVector::zeros(m.nrows());
                for (j, col) in m.column_iter().enumerate() {
                    let xj = x[j];
                    for (yi, &aij) in y.iter_mut().zip(col.iter()) {
                        *yi += aij * xj;
                    }
                }
                y
            }
            MatrixHandle::Csr(m) => DVector::from_iterator(
                m.nrows(),
                (0..m.nrows()).map(|i| m.row(i).fold(0.0, |acc, (j, v)| acc + v * x[j])),
            ),
        })
    }

    /// `Aᵀ x`.
    pub fn apply_transpose(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        if x.len() != self.nrows() {
            return Err(Error::DimensionMismatch { expected: self.nrows(), found: x.len() });
        }
        Ok(match self {
            MatrixHandle::Dense(m) => DVector::from_iterator(
                m.ncols(),
                m.column_iter().map(|col| col.iter().zip(x.iter()).fold(0.0, |acc, (a, b)| acc + a * b)),
            ),
            MatrixHandle::Csr(m) => {
                let mut y = DVector::zeros(m.ncols());
                for i in 0..m.nrows() {
                    let xi = x[i];
                    for (j, v) in m.row(i) {
                        y[j] += v * xi;
                    }
                }
                y
            }
        })
    }

    /// `A X`, column by column.
    pub fn apply_block(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x.nrows() != self.ncols() {
            return Err(Error::DimensionMismatch { expected: self.ncols(), found: x.nrows() });
        }
        let mut out = DMatrix::zeros(self.nrows(), x.ncols());
        for (j, col) in x.column_iter().enumerate() {
            let y = self.apply(&col.into_owned())?;
            out.set_column(j, &y);
        }
        Ok(out)
    }

    /// `Aᵀ X`, column by column.
    pub fn apply_transpose_block(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x.nrows() != self.nrows() {
            return Err(Error::DimensionMismatch { expected: self.nrows(), found: x.nrows() });
        }
        let mut out = DMatrix::zeros(self.ncols(), x.ncols());
        for (j, col) in x.column_iter().enumerate() {
            let y = self.apply_transpose(&col.into_owned())?;
            out.set_column(j, &y);
        }
        Ok(out)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match self {
            MatrixHandle::Dense(m) => m.clone(),
            MatrixHandle::Csr(m) => m.to_dense(),
        }
    }

    pub fn to_csr(&self) -> CsrMatrix {
        match self {
            MatrixHandle::Dense(m) => CsrMatrix::from_dense(m),
            MatrixHandle::Csr(m) => m.clone(),
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match self {
            MatrixHandle::Dense(m) => m[(i, j)],
            MatrixHandle::Csr(m) => m.get(i, j),
        }
    }

    /// Exact structural symmetry check.
    pub fn is_symmetric(&self) -> bool {
        if !self.is_square() {
            return false;
        }
        match self {
            MatrixHandle::Dense(m) => m == &m.transpose(),
            MatrixHandle::Csr(m) => (0..m.nrows()).all(|i| m.row(i).all(|(j, v)| m.get(j, i) == v)),
        }
    }

    /// Quadratic form `xᵀ A x`.
    pub fn quad_form(&self, x: &DVector<f64>) -> Result<f64> {
        Ok(x.dot(&self.apply(x)?))
    }
}
