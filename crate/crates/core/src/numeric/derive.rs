//! Forward-mode derivatives built on [`Dual`].
//!
//! First-order helpers take closures over `Dual<T>` so they can themselves be
//! nested inside an outer dual layer. Second-order helpers need a function
//! that can be evaluated at any scalar type and therefore take a
//! [`ScalarField`] or [`VectorField`].

use super::dual::Dual;
use super::matrix::Matrix;
use super::scalar::Scalar;
use crate::error::{Error, Result};

/// A real function of several variables, evaluable at every scalar type.
pub trait ScalarField {
    fn arity(&self) -> usize;
    fn eval<T: Scalar>(&self, x: &[T]) -> Result<T>;
}

/// A vector-valued function of several variables, evaluable at every scalar
/// type.
pub trait VectorField {
    fn dim_in(&self) -> usize;
    fn dim_out(&self) -> usize;
    fn eval<T: Scalar>(&self, x: &[T]) -> Result<Vec<T>>;
}

/// Lifts `point` to duals with tangent `direction`.
pub fn seed<T: Scalar>(point: &[T], direction: &[T]) -> Vec<Dual<T>> {
    point
        .iter()
        .zip(direction)
        .map(|(&p, &d)| Dual::new(p, d))
        .collect()
}

/// Lifts `point` to duals with tangent along coordinate `index`.
pub fn seed_axis<T: Scalar>(point: &[T], index: usize) -> Vec<Dual<T>> {
    point
        .iter()
        .enumerate()
        .map(|(i, &p)| if i == index { Dual::variable(p) } else { Dual::constant(p) })
        .collect()
}

/// Value and directional derivative of a vector function.
pub fn jvp<T, F>(f: F, point: &[T], direction: &[T]) -> Result<(Vec<T>, Vec<T>)>
where
    T: Scalar,
    F: Fn(&[Dual<T>]) -> Result<Vec<Dual<T>>>,
{
    let out = f(&seed(point, direction))?;
    Ok(out.into_iter().map(|d| (d.re, d.eps)).unzip())
}

/// Jacobian `J[i][j] = d f_i / d x_j`.
pub fn jacobian<T, F>(f: F, point: &[T]) -> Result<Matrix<T>>
where
    T: Scalar,
    F: Fn(&[Dual<T>]) -> Result<Vec<Dual<T>>>,
{
    let n = point.len();
    let mut cols = Vec::with_capacity(n);
    for j in 0..n {
        cols.push(f(&seed_axis(point, j))?.into_iter().map(|d| d.eps).collect::<Vec<_>>());
    }
    if n == 0 {
        return Ok(Matrix::zeros(0, 0));
    }
    Ok(Matrix::from_columns(&cols))
}

/// Jacobian restricted to the variables listed in `indices`.
pub fn partial_jacobian<T, F>(f: F, point: &[T], indices: &[usize]) -> Result<Matrix<T>>
where
    T: Scalar,
    F: Fn(&[Dual<T>]) -> Result<Vec<Dual<T>>>,
{
    let mut cols = Vec::with_capacity(indices.len());
    for &j in indices {
        cols.push(f(&seed_axis(point, j))?.into_iter().map(|d| d.eps).collect::<Vec<_>>());
    }
    Ok(Matrix::from_columns(&cols))
}

/// Gradient of a scalar function.
pub fn gradient<T, F>(f: F, point: &[T]) -> Result<Vec<T>>
where
    T: Scalar,
    F: Fn(&[Dual<T>]) -> Result<Dual<T>>,
{
    (0..point.len())
        .map(|j| f(&seed_axis(point, j)).map(|d| d.eps))
        .collect()
}

/// `d^2 f / dx_i dx_j` of a scalar field.
pub fn second_partial<T: Scalar, F: ScalarField>(f: &F, point: &[T], i: usize, j: usize) -> Result<T> {
    let inner = seed_axis(point, j);
    let x: Vec<Dual<Dual<T>>> = inner
        .iter()
        .enumerate()
        .map(|(k, &d)| {
            let tangent = if k == i { Dual::constant(T::one()) } else { Dual::constant(T::zero()) };
            Dual::new(d, tangent)
        })
        .collect();
    Ok(f.eval(&x)?.eps.eps)
}

/// Full Hessian of a scalar field, symmetric by construction.
pub fn hessian<T: Scalar, F: ScalarField>(f: &F, point: &[T]) -> Result<Matrix<T>> {
    let n = point.len();
    let mut h = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = second_partial(f, point, i, j)?;
            h[(i, j)] = v;
            h[(j, i)] = v;
        }
    }
    Ok(h)
}

/// Partial derivative of a scalar field of order `indices.len()` (0, 1 or 2)
/// with respect to the listed variables, at a real point.
pub fn derive<F: ScalarField>(f: &F, point: &[f64], indices: &[usize]) -> Result<f64> {
    if point.len() != f.arity() {
        return Err(Error::DimensionMismatch(format!(
            "function takes {} arguments, got {}",
            f.arity(),
            point.len()
        )));
    }
    if let Some(&bad) = indices.iter().find(|&&i| i >= point.len()) {
        return Err(Error::DimensionMismatch(format!("derivative index {bad} out of range")));
    }
    match *indices {
        [] => f.eval(point),
        [i] => Ok(f.eval(&seed_axis(point, i))?.eps),
        [i, j] => second_partial(f, point, i, j),
        _ => Err(Error::InvalidSettings(format!(
            "derivative order {} is not supported",
            indices.len()
        ))),
    }
}
