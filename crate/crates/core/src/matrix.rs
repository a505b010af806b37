//! Dense row-major matrices and the small set of kernels built on them.

use crate::error::{Error, Result};
use crate::scalar::{self, Real};

#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn new(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::BadShape { rows, cols, len: data.len() });
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = T::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    /// Builds a matrix from row vectors; every row must have the same length.
    pub fn from_rows<R: AsRef<[T]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::DimensionMismatch {
                    op: "from_rows",
                    left: (i, r.len()),
                    right: (0, cols),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Matrix { rows: rows.len(), cols, data })
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
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.cols + j] = v;
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

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        out
    }

    /// Copies the listed rows, in the listed order.
    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Matrix { rows: idx.len(), cols: self.cols, data }
    }

    pub fn push_row(&mut self, row: &[T]) -> Result<()> {
        if row.len() != self.cols && !(self.rows == 0 && self.cols == 0) {
            return Err(Error::DimensionMismatch {
                op: "push_row",
                left: (self.rows, self.cols),
                right: (1, row.len()),
            });
        }
        if self.rows == 0 {
            self.cols = row.len();
        }
        self.data.extend_from_slice(row);
        self.rows += 1;
        Ok(())
    }

    pub fn column_means(&self) -> Vec<T> {
        let mut means = vec![T::zero(); self.cols];
        for r in self.row_iter() {
            for (m, &v) in means.iter_mut().zip(r) {
                *m += v;
            }
        }
        if self.rows > 0 {
            let n = T::from_usize_lossy(self.rows);
            for m in &mut means {
                *m /= n;
            }
        }
        means
    }

    pub fn ensure_finite(&self) -> Result<()> {
        match self.data.iter().position(|v| !v.is_finite()) {
            Some(p) => Err(Error::NonFinite { row: p / self.cols.max(1), col: p % self.cols.max(1) }),
            None => Ok(()),
        }
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn frobenius(&self) -> T {
        self.data.iter().map(|&v| v * v).sum::<T>().sqrt()
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&v| f(v)).collect() }
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.shape() != other.shape() {
            return Err(Error::DimensionMismatch { op: "sub", left: self.shape(), right: other.shape() });
        }
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| a - b).collect(),
        })
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        matmul(self, other)
    }

    /// Converts to another scalar type.
    pub fn cast<U: Real>(&self) -> Matrix<U> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| U::lit(v.as_f64())).collect(),
        }
    }
}

/// Standard matrix product `a · b`.
pub fn matmul<T: Real>(a: &Matrix<T>, b: &Matrix<T>) -> Result<Matrix<T>> {
    if a.cols != b.rows {
        return Err(Error::DimensionMismatch { op: "matmul", left: a.shape(), right: b.shape() });
    }
    let mut out = Matrix::zeros(a.rows, b.cols);
    if b.cols == 0 {
        return Ok(out);
    }
    for i in 0..a.rows {
        let arow = a.row(i);
        let orow = &mut out.data[i * b.cols..(i + 1) * b.cols];
        for (k, &aik) in arow.iter().enumerate() {
            if aik == T::zero() {
                continue;
            }
            scalar::axpy(aik, b.row(k), orow);
        }
    }
    Ok(out)
}

/// `a · bᵀ`, reading both operands row-wise.
pub fn matmul_bt<T: Real>(a: &Matrix<T>, b: &Matrix<T>) -> Result<Matrix<T>> {
    if a.cols != b.cols {
        return Err(Error::DimensionMismatch { op: "matmul_bt", left: a.shape(), right: b.shape() });
    }
    let mut out = Matrix::zeros(a.rows, b.rows);
    for i in 0..a.rows {
        let arow = a.row(i);
        for j in 0..b.rows {
            out.data[i * b.rows + j] = scalar::dot(arow, b.row(j));
        }
    }
    Ok(out)
}

/// `aᵀ · b`, accumulated as a sum of row outer products.
pub fn matmul_at<T: Real>(a: &Matrix<T>, b: &Matrix<T>) -> Result<Matrix<T>> {
    if a.rows != b.rows {
        return Err(Error::DimensionMismatch { op: "matmul_at", left: a.shape(), right: b.shape() });
    }
    let mut out = Matrix::zeros(a.cols, b.cols);
    for r in 0..a.rows {
        let arow = a.row(r);
        let brow = b.row(r);
        for (i, &ai) in arow.iter().enumerate() {
            if ai == T::zero() {
                continue;
            }
            scalar::axpy(ai, brow, &mut out.data[i * b.cols..(i + 1) * b.cols]);
        }
    }
    Ok(out)
}

/// Squared Euclidean distances between every row of `a` and every row of `b`.
pub fn pairwise_sq_dist<T: Real>(a: &Matrix<T>, b: &Matrix<T>) -> Result<Matrix<T>> {
    if a.cols != b.cols {
        return Err(Error::DimensionMismatch { op: "pairwise_sq_dist", left: a.shape(), right: b.shape() });
    }
    let mut out = Matrix::zeros(a.rows, b.rows);
    for i in 0..a.rows {
        let arow = a.row(i);
        for j in 0..b.rows {
            out.data[i * b.rows + j] = scalar::sq_dist(arow, b.row(j));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;
    use proptest::prelude::*;

    fn m(rows: &[&[f64]]) -> Matrix<f64> {
        Matrix::from_rows(rows).unwrap()
    }

    #[test]
    fn identity_product_is_noop() {
        let a = m(&[&[1.5, -2.0, 3.0], &[0.0, 4.0, 7.25]]);
        assert_eq!(matmul(&Matrix::identity(2), &a).unwrap(), a);
    }

    #[test]
    fn small_product_by_hand() {
        let a = m(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let b = m(&[&[5.0], &[6.0]]);
        assert_eq!(matmul(&a, &b).unwrap(), m(&[&[17.0], &[39.0]]));
    }

    #[test]
    fn empty_inner_dimension_gives_zeros() {
        let a = Matrix::<f64>::zeros(3, 0);
        let b = Matrix::<f64>::zeros(0, 2);
        let c = matmul(&a, &b).unwrap();
        assert_eq!(c.shape(), (3, 2));
        assert!(c.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn mismatch_names_both_shapes() {
        let err = matmul(&Matrix::<f64>::zeros(2, 3), &Matrix::zeros(2, 3)).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("(2, 3)"), "{msg}");
    }

    #[test]
    fn transposed_products_agree() {
        let mut rng = Rng::new(3);
        let a = Matrix::from_fn(4, 5, |_, _| rng.normal());
        let b = Matrix::from_fn(6, 5, |_, _| rng.normal());
        let direct = matmul(&a, &b.transpose()).unwrap();
        let bt = matmul_bt(&a, &b).unwrap();
        assert!(direct.sub(&bt).unwrap().max_abs() < 1e-12);
        let at = matmul_at(&a.transpose(), &b.transpose()).unwrap();
        assert!(direct.sub(&at).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn pairwise_345_triangle() {
        let a = m(&[&[0.0, 0.0], &[3.0, 4.0]]);
        assert_eq!(pairwise_sq_dist(&a, &a).unwrap(), m(&[&[0.0, 25.0], &[25.0, 0.0]]));
        let one = m(&[&[1.0, 2.0, 3.0]]);
        assert_eq!(pairwise_sq_dist(&one, &one).unwrap(), m(&[&[0.0]]));
        let d = pairwise_sq_dist(&Matrix::<f64>::zeros(2, 3), &Matrix::zeros(4, 3)).unwrap();
        assert_eq!(d.shape(), (2, 4));
        assert!(pairwise_sq_dist(&Matrix::<f64>::zeros(2, 3), &Matrix::zeros(2, 2)).is_err());
    }

    #[test]
    fn ensure_finite_reports_position() {
        let a = m(&[&[1.0, 2.0], &[f64::NAN, 0.0]]);
        assert!(matches!(a.ensure_finite(), Err(Error::NonFinite { row: 1, col: 0 })));
    }

    proptest! {
        #[test]
        fn matmul_is_associative(seed in any::<u64>(), p in 1usize..5, q in 1usize..5, r in 1usize..5, s in 1usize..5) {
            let mut rng = Rng::new(seed);
            let a = Matrix::from_fn(p, q, |_, _| rng.normal());
            let b = Matrix::from_fn(q, r, |_, _| rng.normal());
            let c = Matrix::from_fn(r, s, |_, _| rng.normal());
            let left = matmul(&matmul(&a, &b).unwrap(), &c).unwrap();
            let right = matmul(&a, &matmul(&b, &c).unwrap()).unwrap();
            let scale = left.max_abs().max(1.0);
            prop_assert!(left.sub(&right).unwrap().max_abs() <= 1e-9 * scale);
        }

        #[test]
        fn pairwise_is_symmetric_metric(seed in any::<u64>()) {
            let mut rng = Rng::new(seed);
            let a = Matrix::from_fn(10, 5, |_, _| rng.normal());
            let d = pairwise_sq_dist(&a, &a).unwrap();
            for i in 0..10 {
                prop_assert_eq!(d.get(i, i), 0.0);
                for j in 0..10 {
                    prop_assert!(d.get(i, j) >= 0.0);
                    prop_assert_eq!(d.get(i, j), d.get(j, i));
                    for k in 0..10 {
                        let (ij, jk, ik) = (d.get(i, j).sqrt(), d.get(j, k).sqrt(), d.get(i, k).sqrt());
                        prop_assert!(ik <= ij + jk + 1e-12);
                    }
                }
            }
        }
    }
}
