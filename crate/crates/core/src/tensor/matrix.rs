use crate::error::{Error, Result};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::LengthMismatch {
                expected: rows * cols,
                actual: data.len(),
            });
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        DenseMatrix { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::LengthMismatch {
                    expected: cols,
                    actual: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(DenseMatrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.cols + j] = value;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    /// Copies the listed rows, in order, into a new matrix.
    pub fn select_rows(&self, idx: &[usize]) -> DenseMatrix {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        DenseMatrix {
            rows: idx.len(),
            cols: self.cols,
            data,
        }
    }

    pub fn transpose(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> DenseMatrix {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    fn check_dims(cond: bool, what: &str, a: (usize, usize), b: (usize, usize)) -> Result<()> {
        if cond {
            Ok(())
        } else {
            Err(Error::Dimension(format!("{what}: {a:?} vs {b:?}")))
        }
    }

    /// `self * other`.
    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        Self::check_dims(self.cols == other.rows, "matmul", self.shape(), other.shape())?;
        let n = other.cols;
        let mut out = DenseMatrix::zeros(self.rows, n);
        // Four output rows per sweep over `other`; each entry still sums over k
        // in order.
        let mut blocks = out.data.chunks_exact_mut(4 * n);
        let mut i = 0;
        for block in &mut blocks {
            let (o0, rest) = block.split_at_mut(n);
            let (o1, rest) = rest.split_at_mut(n);
            let (o2, o3) = rest.split_at_mut(n);
            for k in 0..self.cols {
                let a = [
                    self.data[i * self.cols + k],
                    self.data[(i + 1) * self.cols + k],
                    self.data[(i + 2) * self.cols + k],
                    self.data[(i + 3) * self.cols + k],
                ];
                let b = other.row(k);
                for j in 0..n {
                    o0[j] += a[0] * b[j];
                    o1[j] += a[1] * b[j];
                    o2[j] += a[2] * b[j];
                    o3[j] += a[3] * b[j];
                }
            }
            i += 4;
        }
        for orow in blocks.into_remainder().chunks_exact_mut(n.max(1)) {
            for (k, &a) in self.row(i).iter().enumerate() {
                for (o, b) in orow.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
            i += 1;
        }
        Ok(out)
    }

    /// `self * other^T`.
    pub fn matmul_bt(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        Self::check_dims(self.cols == other.cols, "matmul_bt", self.shape(), other.shape())?;
        let mut out = DenseMatrix::zeros(self.rows, other.rows);
        for i in 0..self.rows {
            let a = self.row(i);
            for j in 0..other.rows {
                out.data[i * other.rows + j] = crate::tensor::dot(a, other.row(j));
            }
        }
        Ok(out)
    }

    /// `self^T * other`.
    pub fn matmul_at(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        Self::check_dims(self.rows == other.rows, "matmul_at", self.shape(), other.shape())?;
        let mut out = DenseMatrix::zeros(self.cols, other.cols);
        for r in 0..self.rows {
            let b = other.row(r);
            for (i, &a) in self.row(r).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let orow = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (o, bv) in orow.iter_mut().zip(b) {
                    *o += a * bv;
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::LengthMismatch {
                expected: self.cols,
                actual: x.len(),
            });
        }
        Ok((0..self.rows).map(|i| crate::tensor::dot(self.row(i), x)).collect())
    }

    /// Largest `|a_ij - a_ji|` relative to the largest entry (0 for a zero matrix).
    pub fn asymmetry(&self) -> Result<f64> {
        if self.rows != self.cols {
            return Err(Error::NotSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        let scale = self.max_abs();
        if scale == 0.0 {
            return Ok(0.0);
        }
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in i + 1..self.cols {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        Ok(worst / scale)
    }

    pub fn column_sum(&self) -> Vec<f64> {
        let mut sum = vec![0.0; self.cols];
        for i in 0..self.rows {
            for (m, x) in sum.iter_mut().zip(self.row(i)) {
                *m += x;
            }
        }
        sum
    }

    pub fn column_mean(&self) -> Vec<f64> {
        let mut mean = self.column_sum();
        if self.rows > 0 {
            let inv = 1.0 / self.rows as f64;
            mean.iter_mut().for_each(|m| *m *= inv);
        }
        mean
    }
}
