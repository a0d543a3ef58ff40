//! Eigenvalues of small dense real matrices.
//!
//! Symmetric input goes through cyclic Jacobi rotations. Everything else is
//! balanced, reduced to upper Hessenberg form by Householder reflections and
//! then deflated with the Francis double-shift QR iteration.

use serde::Serialize;

use super::matrix::Matrix;
use crate::error::{Error, Result};

/// Asymmetry below which the symmetric path is taken.
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;

/// Iterations allowed per eigenvalue before giving up.
const MAX_ITER_PER_EIGENVALUE: usize = 60;

const MAX_JACOBI_SWEEPS: usize = 100;

/// Eigenvalues as `(re, im)` pairs, repeated by algebraic multiplicity and
/// sorted by descending real part, then descending imaginary part.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ComplexEigenSet(pub Vec<(f64, f64)>);

impl ComplexEigenSet {
    fn sorted(mut values: Vec<(f64, f64)>) -> Self {
        values.sort_by(|a, b| b.0.total_cmp(&a.0).then(b.1.total_cmp(&a.1)));
        ComplexEigenSet(values)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &(f64, f64)> {
        self.0.iter()
    }

    pub fn real_parts(&self) -> Vec<f64> {
        self.0.iter().map(|v| v.0).collect()
    }

    pub fn max_re(&self) -> f64 {
        self.0.iter().map(|v| v.0).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_re(&self) -> f64 {
        self.0.iter().map(|v| v.0).fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs_im(&self) -> f64 {
        self.0.iter().map(|v| v.1.abs()).fold(0.0, f64::max)
    }

    /// Evaluates `prod (z - lambda_i)` at a real probe point, returning the
    /// real and imaginary parts.
    pub fn characteristic_at(&self, z: f64) -> (f64, f64) {
        self.0.iter().fold((1.0, 0.0), |(pr, pi), &(re, im)| {
            let (ar, ai) = (z - re, -im);
            (pr * ar - pi * ai, pr * ai + pi * ar)
        })
    }
}

/// All eigenvalues of a square matrix.
pub fn eigenvalues(a: &Matrix<f64>) -> Result<ComplexEigenSet> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "eigenvalues need a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    if !a.is_finite() {
        return Err(Error::InvalidSettings("matrix has non-finite entries".into()));
    }
    let n = a.rows();
    if n == 0 {
        return Ok(ComplexEigenSet(Vec::new()));
    }
    if a.asymmetry() < SYMMETRY_TOLERANCE {
        let values = symmetric_eigenvalues(a)?;
        return Ok(ComplexEigenSet::sorted(values.into_iter().map(|v| (v, 0.0)).collect()));
    }
    let mut h = a.to_rows();
    balance(&mut h);
    hessenberg(&mut h);
    Ok(ComplexEigenSet::sorted(hqr(h)?))
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, unsorted.
pub fn symmetric_eigenvalues(a: &Matrix<f64>) -> Result<Vec<f64>> {
    let n = a.rows();
    let mut m = a.to_rows();
    // symmetrize exactly so rotations stay consistent
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (m[i][j] + m[j][i]);
            m[i][j] = v;
            m[j][i] = v;
        }
    }
    let total: f64 = m.iter().flatten().map(|v| v * v).sum();
    for _sweep in 0..MAX_JACOBI_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i][j] * m[i][j])
            .sum();
        if off <= 1e-30 * total || off == 0.0 {
            return Ok((0..n).map(|i| m[i][i]).collect());
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p][q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[k][p], m[k][q]);
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[p][k], m[q][k]);
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
            }
        }
    }
    Err(Error::NoConvergence {
        iterations: MAX_JACOBI_SWEEPS,
    })
}

/// Diagonal similarity scaling by powers of two so that row and column norms
/// are comparable.
fn balance(a: &mut [Vec<f64>]) {
    const RADIX: f64 = 2.0;
    let n = a.len();
    loop {
        let mut done = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[j][i].abs();
                    r += a[i][j].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / RADIX;
            while c < g {
                f *= RADIX;
                c *= RADIX * RADIX;
            }
            g = r * RADIX;
            while c > g {
                f /= RADIX;
                c /= RADIX * RADIX;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                let inv = 1.0 / f;
                for j in 0..n {
                    a[i][j] *= inv;
                }
                for row in a.iter_mut() {
                    row[i] *= f;
                }
            }
        }
        if done {
            break;
        }
    }
}

/// Householder reduction to upper Hessenberg form, in place.
fn hessenberg(h: &mut [Vec<f64>]) {
    let n = h.len();
    if n < 3 {
        return;
    }
    let high = n - 1;
    let mut ort = vec![0.0; n];
    for m in 1..high {
        let scale: f64 = (m..=high).map(|i| h[i][m - 1].abs()).sum();
        if scale == 0.0 {
            continue;
        }
        let mut hh = 0.0;
        for i in (m..=high).rev() {
            ort[i] = h[i][m - 1] / scale;
            hh += ort[i] * ort[i];
        }
        let mut g = hh.sqrt();
        if ort[m] > 0.0 {
            g = -g;
        }
        hh -= ort[m] * g;
        ort[m] -= g;
        for j in m..n {
            let f = (m..=high).rev().map(|i| ort[i] * h[i][j]).sum::<f64>() / hh;
            for i in m..=high {
                h[i][j] -= f * ort[i];
            }
        }
        for row in h.iter_mut() {
            let f = (m..=high).rev().map(|j| ort[j] * row[j]).sum::<f64>() / hh;
            for j in m..=high {
                row[j] -= f * ort[j];
            }
        }
        h[m][m - 1] = scale * g;
        for row in h.iter_mut().skip(m + 1) {
            row[m - 1] = 0.0;
        }
    }
}

/// Francis double-shift QR on an upper Hessenberg matrix; eigenvalues only.
fn hqr(mut h: Vec<Vec<f64>>) -> Result<Vec<(f64, f64)>> {
    let nn = h.len();
    let eps = f64::EPSILON;
    let mut d = vec![0.0; nn];
    let mut e = vec![0.0; nn];
    let mut norm = 0.0;
    for (i, row) in h.iter().enumerate() {
        for v in &row[i.saturating_sub(1)..] {
            norm += v.abs();
        }
    }
    if norm == 0.0 {
        return Ok(vec![(0.0, 0.0); nn]);
    }

    let at = |h: &Vec<Vec<f64>>, i: isize, j: isize| h[i as usize][j as usize];
    let mut n = nn as isize - 1;
    let low: isize = 0;
    let mut exshift = 0.0;
    let (mut p, mut q, mut r, mut s, mut z);
    let (mut x, mut y, mut w);
    let mut iter = 0usize;
    let mut total_iter = 0usize;
    let budget = MAX_ITER_PER_EIGENVALUE * nn;

    while n >= low {
        let mut l = n;
        while l > low {
            s = at(&h, l - 1, l - 1).abs() + at(&h, l, l).abs();
            if s == 0.0 {
                s = norm;
            }
            if at(&h, l, l - 1).abs() < eps * s {
                break;
            }
            l -= 1;
        }

        let nu = n as usize;
        if l == n {
            h[nu][nu] += exshift;
            d[nu] = h[nu][nu];
            e[nu] = 0.0;
            n -= 1;
            iter = 0;
        } else if l == n - 1 {
            w = h[nu][nu - 1] * h[nu - 1][nu];
            p = (h[nu - 1][nu - 1] - h[nu][nu]) / 2.0;
            q = p * p + w;
            z = q.abs().sqrt();
            h[nu][nu] += exshift;
            h[nu - 1][nu - 1] += exshift;
            x = h[nu][nu];
            if q >= 0.0 {
                z = if p >= 0.0 { p + z } else { p - z };
                d[nu - 1] = x + z;
                d[nu] = d[nu - 1];
                if z != 0.0 {
                    d[nu] = x - w / z;
                }
                e[nu - 1] = 0.0;
                e[nu] = 0.0;
            } else {
                d[nu - 1] = x + p;
                d[nu] = x + p;
                e[nu - 1] = z;
                e[nu] = -z;
            }
            n -= 2;
            iter = 0;
        } else {
            x = h[nu][nu];
            y = 0.0;
            w = 0.0;
            if l < n {
                y = h[nu - 1][nu - 1];
                w = h[nu][nu - 1] * h[nu - 1][nu];
            }
            if iter == 10 {
                exshift += x;
                for i in low as usize..=nu {
                    h[i][i] -= x;
                }
                s = h[nu][nu - 1].abs() + h[nu - 1][nu - 2].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            if iter == 30 {
                s = (y - x) / 2.0;
                s = s * s + w;
                if s > 0.0 {
                    s = s.sqrt();
                    if y < x {
                        s = -s;
                    }
                    s = x - w / ((y - x) / 2.0 + s);
                    for i in low as usize..=nu {
                        h[i][i] -= s;
                    }
                    exshift += s;
                    x = 0.964;
                    y = x;
                    w = x;
                }
            }
            iter += 1;
            total_iter += 1;
            if iter > MAX_ITER_PER_EIGENVALUE || total_iter > budget {
                return Err(Error::NoConvergence {
                    iterations: total_iter,
                });
            }

            // look for two consecutive small sub-diagonal elements
            let mut m = n - 2;
            loop {
                let mu = m as usize;
                z = h[mu][mu];
                r = x - z;
                s = y - z;
                p = (r * s - w) / h[mu + 1][mu] + h[mu][mu + 1];
                q = h[mu + 1][mu + 1] - z - r - s;
                r = h[mu + 2][mu + 1];
                s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                if h[mu][mu - 1].abs() * (q.abs() + r.abs())
                    < eps * (p.abs() * (h[mu - 1][mu - 1].abs() + z.abs() + h[mu + 1][mu + 1].abs()))
                {
                    break;
                }
                m -= 1;
            }
            let mu = m as usize;
            for i in mu + 2..=nu {
                h[i][i - 2] = 0.0;
                if i > mu + 2 {
                    h[i][i - 3] = 0.0;
                }
            }

            // double QR step on rows l..=n and columns m..=n
            for k in mu..nu {
                let notlast = k != nu - 1;
                if k != mu {
                    p = h[k][k - 1];
                    q = h[k + 1][k - 1];
                    r = if notlast { h[k + 2][k - 1] } else { 0.0 };
                    x = p.abs() + q.abs() + r.abs();
                    if x == 0.0 {
                        continue;
                    }
                    p /= x;
                    q /= x;
                    r /= x;
                }
                s = (p * p + q * q + r * r).sqrt();
                if p < 0.0 {
                    s = -s;
                }
                if s != 0.0 {
                    if k != mu {
                        h[k][k - 1] = -s * x;
                    } else if l != m {
                        h[k][k - 1] = -h[k][k - 1];
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    z = r / s;
                    q /= p;
                    r /= p;
                    for j in k..nn {
                        p = h[k][j] + q * h[k + 1][j];
                        if notlast {
                            p += r * h[k + 2][j];
                            h[k + 2][j] -= p * z;
                        }
                        h[k][j] -= p * x;
                        h[k + 1][j] -= p * y;
                    }
                    for i in 0..=nu.min(k + 3) {
                        p = x * h[i][k] + y * h[i][k + 1];
                        if notlast {
                            p += z * h[i][k + 2];
                            h[i][k + 2] -= p * r;
                        }
                        h[i][k] -= p;
                        h[i][k + 1] -= p * q;
                    }
                }
            }
        }
    }
    Ok(d.into_iter().zip(e).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &ComplexEigenSet, expect: &[(f64, f64)], tol: f64) -> bool {
        a.len() == expect.len()
            && a
                .iter()
                .zip(expect)
                .all(|(x, y)| (x.0 - y.0).abs() < tol && (x.1 - y.1).abs() < tol)
    }

    #[test]
    fn identity() {
        let e = eigenvalues(&Matrix::identity(3)).unwrap();
        assert!(close(&e, &[(1.0, 0.0); 3], 1e-14));
    }

    #[test]
    fn inverted_oscillator_block() {
        let mu = 2.0;
        let a = Matrix::from_rows(&[vec![0.0, 1.0], vec![mu * mu, 0.0]]);
        let e = eigenvalues(&a).unwrap();
        assert!(close(&e, &[(2.0, 0.0), (-2.0, 0.0)], 1e-12), "{e:?}");
    }

    #[test]
    fn one_by_one() {
        let e = eigenvalues(&Matrix::from_rows(&[vec![1.0]])).unwrap();
        assert_eq!(e.0, vec![(1.0, 0.0)]);
    }

    #[test]
    fn rotation_is_complex() {
        let a = Matrix::from_rows(&[vec![0.0, -1.0], vec![1.0, 0.0]]);
        let e = eigenvalues(&a).unwrap();
        assert!(close(&e, &[(0.0, 1.0), (0.0, -1.0)], 1e-14), "{e:?}");
    }

    #[test]
    fn companion_matrix_roots() {
        // roots 1, 2, 3, 4 of x^4 - 10x^3 + 35x^2 - 50x + 24
        let a = Matrix::from_rows(&[
            vec![10.0, -35.0, 50.0, -24.0],
            vec![1.0, 0.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0, 0.0],
            vec![0.0, 0.0, 1.0, 0.0],
        ]);
        let e = eigenvalues(&a).unwrap();
        assert!(close(&e, &[(4.0, 0.0), (3.0, 0.0), (2.0, 0.0), (1.0, 0.0)], 1e-9), "{e:?}");
    }

    #[test]
    fn symmetric_path() {
        let a = Matrix::from_rows(&[vec![2.0, 1.0, 0.0], vec![1.0, 2.0, 1.0], vec![0.0, 1.0, 2.0]]);
        let e = eigenvalues(&a).unwrap();
        let s = 2f64.sqrt();
        assert!(close(&e, &[(2.0 + s, 0.0), (2.0, 0.0), (2.0 - s, 0.0)], 1e-12), "{e:?}");
    }

    #[test]
    fn zero_matrix() {
        let e = eigenvalues(&Matrix::zeros(4, 4)).unwrap();
        assert!(close(&e, &[(0.0, 0.0); 4], 1e-300));
    }

    #[test]
    fn nilpotent_shift() {
        let a = Matrix::from_rows(&[vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0], vec![0.0, 0.0, 0.0]]);
        let e = eigenvalues(&a).unwrap();
        assert!(e.iter().all(|v| v.0.abs() < 1e-5 && v.1.abs() < 1e-5), "{e:?}");
    }
}
