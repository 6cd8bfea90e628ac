//! Small dense row-major matrix type and the factorizations the solver needs.

use std::ops::{Index, IndexMut};

use thiserror::Error;

use crate::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("matrix is not positive definite (pivot {index} = {pivot:e})")]
    NotPositiveDefinite { index: usize, pivot: f64 },
    #[error("matrix is singular (pivot column {0})")]
    Singular(usize),
}

/// Dense matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self, LinalgError> {
        if data.len() != rows * cols {
            return Err(LinalgError::Dimension(format!(
                "{} values for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from equally sized rows. An empty slice gives a 0x0 matrix.
    pub fn from_rows<R: AsRef<[T]>>(rows: &[R]) -> Result<Self, LinalgError> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(LinalgError::Dimension(format!(
                    "row {i} has {} columns, expected {cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Ok(Self { rows: rows.len(), cols, data })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_iter(&self) -> impl Iterator<Item = &[T]> + '_ {
        (0..self.rows).map(move |i| self.row(i))
    }

    /// New matrix made of the given rows, in the given order.
    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Self { rows: idx.len(), cols: self.cols, data }
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Self) -> Result<Self, LinalgError> {
        if self.cols != other.rows {
            return Err(LinalgError::Dimension(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == T::zero() {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(other.row(k)) {
                    *o = *o + a * b;
                }
            }
        }
        Ok(out)
    }

    /// `selfᵀ · self`, exploiting symmetry.
    pub fn gram_tn(&self) -> Self {
        let n = self.cols;
        let mut out = Self::zeros(n, n);
        for r in self.row_iter() {
            for i in 0..n {
                let ri = r[i];
                if ri == T::zero() {
                    continue;
                }
                let out_row = &mut out.data[i * n..i * n + i + 1];
                for (o, &rj) in out_row.iter_mut().zip(&r[..=i]) {
                    *o = *o + ri * rj;
                }
            }
        }
        out.mirror_lower();
        out
    }

    /// Copies the lower triangle onto the upper one.
    pub fn mirror_lower(&mut self) {
        let n = self.rows.min(self.cols);
        for i in 0..n {
            for j in 0..i {
                self.data[j * self.cols + i] = self.data[i * self.cols + j];
            }
        }
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        debug_assert_eq!(v.len(), self.cols);
        self.row_iter().map(|r| dot(r, v)).collect()
    }

    /// `selfᵀ · v`.
    pub fn tr_mul_vec(&self, v: &[T]) -> Vec<T> {
        debug_assert_eq!(v.len(), self.rows);
        let mut out = vec![T::zero(); self.cols];
        for (r, &vi) in self.row_iter().zip(v) {
            if vi == T::zero() {
                continue;
            }
            for (o, &a) in out.iter_mut().zip(r) {
                *o = *o + a * vi;
            }
        }
        out
    }

    pub fn diag(&self) -> Vec<T> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// Four interleaved partial sums, so the loop pipelines.
#[inline]
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [T::zero(); 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (x, y) in (&mut ca).zip(&mut cb) {
        for k in 0..4 {
            acc[k] = acc[k] + x[k] * y[k];
        }
    }
    let tail = ca.remainder().iter().zip(cb.remainder()).fold(T::zero(), |s, (&x, &y)| s + x * y);
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

pub fn norm_inf<T: Scalar>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |m, x| m.max(x.abs()))
}

/// Lower Cholesky factor of a symmetric positive definite matrix.
#[derive(Debug, Clone)]
pub struct Cholesky<T> {
    l: Matrix<T>,
    lt: Matrix<T>,
}

impl<T: Scalar> Cholesky<T> {
    /// Factors `a`; only the lower triangle is read.
    pub fn new(a: &Matrix<T>) -> Result<Self, LinalgError> {
        let n = a.rows();
        if a.cols() != n {
            return Err(LinalgError::Dimension("cholesky of a non-square matrix".into()));
        }
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let mut d = a[(j, j)];
            for k in 0..j {
                d = d - l[(j, k)] * l[(j, k)];
            }
            if !(d > T::zero()) || !d.is_finite() {
                return Err(LinalgError::NotPositiveDefinite { index: j, pivot: d.to_f64_lossy() });
            }
            let djj = d.sqrt();
            l[(j, j)] = djj;
            for i in (j + 1)..n {
                let s = a[(i, j)] - dot(&l.row(i)[..j], &l.row(j)[..j]);
                l[(i, j)] = s / djj;
            }
        }
        let lt = l.transpose();
        Ok(Self { l, lt })
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.l.rows();
        let mut y = b.to_vec();
        for i in 0..n {
            let s = y[i] - dot(&self.l.row(i)[..i], &y[..i]);
            y[i] = s / self.l[(i, i)];
        }
        for i in (0..n).rev() {
            let s = y[i] - dot(&self.lt.row(i)[i + 1..], &y[i + 1..]);
            y[i] = s / self.l[(i, i)];
        }
        y
    }

    pub fn factor(&self) -> &Matrix<T> {
        &self.l
    }
}

/// LU factorization with partial pivoting, for the indefinite KKT systems.
#[derive(Debug, Clone)]
pub struct Lu<T> {
    lu: Matrix<T>,
    perm: Vec<usize>,
}

impl<T: Scalar> Lu<T> {
    pub fn new(a: &Matrix<T>) -> Result<Self, LinalgError> {
        let n = a.rows();
        if a.cols() != n {
            return Err(LinalgError::Dimension("lu of a non-square matrix".into()));
        }
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, pv) = (k..n)
                .map(|i| (i, lu[(i, k)].abs()))
                .fold((k, T::zero()), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pv == T::zero() {
                return Err(LinalgError::Singular(k));
            }
            if p != k {
                perm.swap(p, k);
                let (a, b) = lu.data.split_at_mut(p * n);
                a[k * n..(k + 1) * n].swap_with_slice(&mut b[..n]);
            }
            let pivot = lu[(k, k)];
            let (top, rest) = lu.data.split_at_mut((k + 1) * n);
            let pivot_row = &top[k * n + k + 1..(k + 1) * n];
            for row in rest.chunks_exact_mut(n) {
                let f = row[k] / pivot;
                row[k] = f;
                if f == T::zero() {
                    continue;
                }
                for (r, &v) in row[k + 1..].iter_mut().zip(pivot_row) {
                    *r = *r - f * v;
                }
            }
        }
        Ok(Self { lu, perm })
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.lu.rows();
        let mut y: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let s = y[i] - dot(&self.lu.row(i)[..i], &y[..i]);
            y[i] = s;
        }
        for i in (0..n).rev() {
            let s = y[i] - dot(&self.lu.row(i)[i + 1..], &y[i + 1..]);
            y[i] = s / self.lu[(i, i)];
        }
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spd3() -> Matrix<f64> {
        Matrix::from_rows(&[[4.0, 2.0, 0.4], [2.0, 5.0, 1.0], [0.4, 1.0, 3.0]]).unwrap()
    }

    #[test]
    fn matmul_and_transpose() {
        let a = Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap();
        let b = Matrix::from_rows(&[[5.0, 6.0], [7.0, 8.0]]).unwrap();
        let c = a.matmul(&b).unwrap();
        assert_eq!(c.as_slice(), &[19.0, 22.0, 43.0, 50.0]);
        assert_eq!(a.transpose().as_slice(), &[1.0, 3.0, 2.0, 4.0]);
        assert_eq!(a.gram_tn(), a.transpose().matmul(&a).unwrap());
        assert_eq!(a.tr_mul_vec(&[1.0, 1.0]), vec![4.0, 6.0]);
    }

    #[test]
    fn ragged_rows_rejected() {
        let rows: Vec<Vec<f64>> = vec![vec![1.0], vec![1.0, 2.0]];
        assert!(Matrix::from_rows(&rows).is_err());
    }

    #[test]
    fn cholesky_solves() {
        let a = spd3();
        let ch = Cholesky::new(&a).unwrap();
        let x = ch.solve(&[1.0, 2.0, 3.0]);
        let back = a.mul_vec(&x);
        for (b, e) in back.iter().zip([1.0f64, 2.0, 3.0]) {
            assert!((b - e).abs() < 1e-12);
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = Matrix::from_rows(&[[1.0, 2.0], [2.0, 1.0]]).unwrap();
        assert!(matches!(Cholesky::new(&a), Err(LinalgError::NotPositiveDefinite { index: 1, .. })));
    }

    #[test]
    fn lu_solves_indefinite() {
        let a = Matrix::from_rows(&[[0.0, 1.0, 2.0], [1.0, 0.0, 3.0], [2.0, 3.0, -1.0]]).unwrap();
        let lu = Lu::new(&a).unwrap();
        let x = lu.solve(&[1.0, -1.0, 0.5]);
        let back = a.mul_vec(&x);
        for (b, e) in back.iter().zip([1.0f64, -1.0, 0.5]) {
            assert!((b - e).abs() < 1e-12);
        }
    }

    #[test]
    fn f32_cholesky() {
        let a = Matrix::<f32>::from_rows(&[[2.0f32, 0.5], [0.5, 1.0]]).unwrap();
        let x = Cholesky::new(&a).unwrap().solve(&[1.0, 1.0]);
        let back = a.mul_vec(&x);
        assert!((back[0] - 1.0).abs() < 1e-5 && (back[1] - 1.0).abs() < 1e-5);
    }
}
