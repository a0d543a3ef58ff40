use std::fmt;
use std::ops::{Index, IndexMut};

use super::scalar::Scalar;
use crate::error::{Error, Result};

/// Dense row-major matrix. Dimensions here are small (a few dozen at most).
#[derive(Clone, PartialEq)]
pub struct Matrix<T = f64> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

/// Serialized as a list of rows.
impl<T: serde::Serialize> serde::Serialize for Matrix<T> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeSeq;
        let mut seq = s.serialize_seq(Some(self.rows))?;
        for r in 0..self.rows {
            seq.serialize_element(&self.data[r * self.cols..(r + 1) * self.cols])?;
        }
        seq.end()
    }
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { T::one() } else { T::zero() })
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

    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Matrix {
            rows: r,
            cols: c,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_columns(cols: &[Vec<T>]) -> Self {
        let c = cols.len();
        let r = cols.first().map_or(0, Vec::len);
        Self::from_fn(r, c, |i, j| cols[j][i])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Matrix<T>) -> Self {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        Self::from_fn(self.rows, other.cols, |i, j| {
            let mut acc = T::zero();
            for k in 0..self.cols {
                acc += self[(i, k)] * other[(k, j)];
            }
            acc
        })
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(self.cols, v.len(), "mul_vec dimension mismatch");
        (0..self.rows)
            .map(|i| {
                let mut acc = T::zero();
                for (a, b) in self.row(i).iter().zip(v) {
                    acc += *a * *b;
                }
                acc
            })
            .collect()
    }

    pub fn add(&self, other: &Matrix<T>) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| *a + *b).collect(),
        }
    }

    pub fn sub(&self, other: &Matrix<T>) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| *a - *b).collect(),
        }
    }

    pub fn scale(&self, c: T) -> Self {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| *a * c).collect(),
        }
    }

    /// Real parts of every entry.
    pub fn re(&self) -> Matrix<f64> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(Scalar::re).collect(),
        }
    }

    /// Maximum absolute row sum of the real parts.
    pub fn norm_inf(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|a| a.re().abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Largest absolute entry of the real parts.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|a| a.re().abs()).fold(0.0, f64::max)
    }

    /// `v^T A w`.
    pub fn bilinear(&self, v: &[T], w: &[T]) -> T {
        let aw = self.mul_vec(w);
        let mut acc = T::zero();
        for (a, b) in v.iter().zip(&aw) {
            acc += *a * *b;
        }
        acc
    }
}

impl Matrix<f64> {
    /// `||A - A^T||_inf`.
    pub fn asymmetry(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        self.sub(&self.transpose()).norm_inf()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl<T: fmt::Debug> fmt::Debug for Matrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut l = f.debug_list();
        for i in 0..self.rows {
            l.entry(&&self.data[i * self.cols..(i + 1) * self.cols]);
        }
        l.finish()
    }
}

/// Pivot threshold relative to `||A||_inf` below which a matrix is singular.
pub const SINGULAR_PIVOT: f64 = 1e-12;

/// LU factorization with partial pivoting, usable at any `Scalar` level so
/// solves can be differentiated through.
#[derive(Clone, Debug)]
pub struct Lu<T> {
    lu: Matrix<T>,
    perm: Vec<usize>,
    sign: f64,
}

impl<T: Scalar> Lu<T> {
    pub fn factor(a: &Matrix<T>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "LU needs a square matrix, got {}x{}",
                a.rows(),
                a.cols()
            )));
        }
        let n = a.rows();
        let norm = a.norm_inf();
        let threshold = SINGULAR_PIVOT * norm;
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, lu[(i, k)].re().abs()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if !(pmax > threshold) || norm == 0.0 {
                return Err(Error::SingularMatrix {
                    column: k,
                    pivot: pmax.max(0.0),
                });
            }
            if p != k {
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = tmp;
                }
                perm.swap(k, p);
                sign = -sign;
            }
            let pivot = lu[(k, k)];
            for i in k + 1..n {
                let factor = lu[(i, k)] / pivot;
                lu[(i, k)] = factor;
                for j in k + 1..n {
                    let v = lu[(k, j)];
                    lu[(i, j)] -= factor * v;
                }
            }
        }
        Ok(Lu { lu, perm, sign })
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.lu.rows();
        assert_eq!(b.len(), n, "right-hand side length mismatch");
        let mut x: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for k in 0..i {
                let v = x[k];
                x[i] -= self.lu[(i, k)] * v;
            }
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                let v = x[k];
                x[i] -= self.lu[(i, k)] * v;
            }
            x[i] /= self.lu[(i, i)];
        }
        x
    }

    pub fn det(&self) -> T {
        let n = self.lu.rows();
        let mut d = T::from_f64(self.sign);
        for i in 0..n {
            d *= self.lu[(i, i)];
        }
        d
    }

    /// The inverse matrix, column by column.
    pub fn inverse(&self) -> Matrix<T> {
        let n = self.lu.rows();
        let cols: Vec<Vec<T>> = (0..n)
            .map(|j| {
                let e: Vec<T> = (0..n)
                    .map(|i| if i == j { T::one() } else { T::zero() })
                    .collect();
                self.solve(&e)
            })
            .collect();
        Matrix::from_columns(&cols)
    }
}

/// Solves `A x = b` by LU with partial pivoting.
pub fn solve_linear<T: Scalar>(a: &Matrix<T>, b: &[T]) -> Result<Vec<T>> {
    if b.len() != a.rows() {
        return Err(Error::DimensionMismatch(format!(
            "matrix has {} rows but right-hand side has {} entries",
            a.rows(),
            b.len()
        )));
    }
    Ok(Lu::factor(a)?.solve(b))
}

/// `|det A|` divided by the `n`-th power of the largest row norm; the
/// scale-free degeneracy measure used for metrics and Lagrange Hessians.
pub fn scaled_det(a: &Matrix<f64>) -> f64 {
    let n = a.rows();
    let scale = (0..n)
        .map(|i| a.row(i).iter().map(|v| v * v).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    if scale == 0.0 {
        return 0.0;
    }
    let normalized = a.scale(1.0 / scale);
    match Lu::factor(&normalized) {
        Ok(lu) => lu.det().abs(),
        Err(_) => 0.0,
    }
}

/// Residual norm below which Gram-Schmidt declares the frame rank deficient,
/// relative to the norm of the vector before orthogonalization.
pub const RANK_TOLERANCE: f64 = 1e-12;

/// Metric-weighted modified Gram-Schmidt with one reorthogonalization pass.
///
/// Returns the `metric`-orthonormal frame together with the logarithms of the
/// diagonal stretching factors (the residual norms before normalization).
pub fn weighted_gram_schmidt(
    frame: &[Vec<f64>],
    metric: &Matrix<f64>,
) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let dim = metric.rows();
    if !metric.is_square() || frame.iter().any(|v| v.len() != dim) {
        return Err(Error::DimensionMismatch(format!(
            "frame vectors must have dimension {dim}"
        )));
    }
    let inner = |a: &[f64], b: &[f64]| metric.bilinear(a, b);
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(frame.len());
    let mut logs = Vec::with_capacity(frame.len());
    for (index, v) in frame.iter().enumerate() {
        let original = inner(v, v).max(0.0).sqrt();
        let mut w = v.clone();
        for _pass in 0..2 {
            for e in &out {
                let c = inner(&w, e);
                for (wi, ei) in w.iter_mut().zip(e) {
                    *wi -= c * ei;
                }
            }
        }
        let q = inner(&w, &w);
        if q < 0.0 && q < -RANK_TOLERANCE * original * original {
            return Err(Error::NegativeForm(q));
        }
        let norm = q.max(0.0).sqrt();
        if !(norm > RANK_TOLERANCE * original) || norm == 0.0 {
            return Err(Error::RankDeficient {
                index,
                residual: norm,
            });
        }
        logs.push(norm.ln());
        out.push(w.into_iter().map(|x| x / norm).collect());
    }
    Ok((out, logs))
}
