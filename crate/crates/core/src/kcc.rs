//! Local stability of second order systems: nonlinear connection, Berwald
//! coefficients, the deviation tensor `P` and the operator `R~` on `TTM`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::Expression;
use crate::flow::{Flow, Trajectory};
use crate::geometry::{Christoffel, GeodesicSpray};
use crate::lagrangian::{LagrangianSystem, NaturalLagrangian};
use crate::numeric::{eigenvalues, ComplexEigenSet, Dual, Matrix, Scalar};

/// Default tolerance on real parts for local verdicts.
pub const LOCAL_TOLERANCE: f64 = 1e-8;

/// Spray coefficients `G^a(x, u)` of a semispray `X = u d_x - 2G d_u`.
pub trait SprayData: Sync {
    fn dim(&self) -> usize;
    fn g<T: Scalar>(&self, x: &[T], u: &[T]) -> Result<Vec<T>>;
}

impl<S: SprayData> SprayData for &S {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn g<T: Scalar>(&self, x: &[T], u: &[T]) -> Result<Vec<T>> {
        (**self).g(x, u)
    }
}

impl SprayData for LagrangianSystem {
    fn dim(&self) -> usize {
        LagrangianSystem::dim(self)
    }
    fn g<T: Scalar>(&self, x: &[T], u: &[T]) -> Result<Vec<T>> {
        self.spray_g(x, u)
    }
}

impl SprayData for NaturalLagrangian {
    fn dim(&self) -> usize {
        NaturalLagrangian::dim(self)
    }
    fn g<T: Scalar>(&self, x: &[T], u: &[T]) -> Result<Vec<T>> {
        Ok(self.acceleration(x, u)?.into_iter().map(|v| v * -0.5).collect())
    }
}

impl SprayData for GeodesicSpray {
    fn dim(&self) -> usize {
        self.metric.dim()
    }
    fn g<T: Scalar>(&self, x: &[T], u: &[T]) -> Result<Vec<T>> {
        let gamma = crate::geometry::christoffel(&self.metric, x)?;
        Ok(gamma.contract(u, u).into_iter().map(|v| v * 0.5).collect())
    }
}

/// Reads `G = -X_2 / 2` off any second order flow on `(x, u)`.
#[derive(Clone, Debug)]
pub struct FlowSpray<F>(F);

impl<F: Flow> FlowSpray<F> {
    pub fn new(flow: F) -> Result<Self> {
        match flow.config_dim() {
            Some(n) if 2 * n == flow.dim() => Ok(FlowSpray(flow)),
            _ => Err(Error::InvalidSettings(
                "spray data needs a second order flow on (x, u)".into(),
            )),
        }
    }

    pub fn flow(&self) -> &F {
        &self.0
    }
}

impl<F: Flow> SprayData for FlowSpray<F> {
    fn dim(&self) -> usize {
        self.0.dim() / 2
    }
    fn g<T: Scalar>(&self, x: &[T], u: &[T]) -> Result<Vec<T>> {
        let state: Vec<T> = x.iter().chain(u).copied().collect();
        let v = self.0.field(&state)?;
        Ok(v[x.len()..].iter().map(|&a| a * -0.5).collect())
    }
}

/// `G^a` given directly as expressions over `2n` phase variables.
#[derive(Clone, Debug)]
pub struct ExpressionSpray {
    n: usize,
    components: Vec<Expression>,
}

impl ExpressionSpray {
    pub fn new(components: Vec<Expression>) -> Result<Self> {
        let n = components.len();
        if n == 0 || components.iter().any(|c| c.arity() != 2 * n) {
            return Err(Error::DimensionMismatch(format!(
                "{n} spray components need a table of {} phase variables",
                2 * n
            )));
        }
        Ok(ExpressionSpray { n, components })
    }

    pub fn components(&self) -> &[Expression] {
        &self.components
    }
}

impl SprayData for ExpressionSpray {
    fn dim(&self) -> usize {
        self.n
    }
    fn g<T: Scalar>(&self, x: &[T], u: &[T]) -> Result<Vec<T>> {
        let p: Vec<T> = x.iter().chain(u).copied().collect();
        self.components.iter().map(|c| Ok(c.eval(&p)?)).collect()
    }
}

/// The semispray flow `(u, -2G)` of spray data.
#[derive(Clone, Debug)]
pub struct Semispray<S>(pub S);

impl<S: SprayData> Flow for Semispray<S> {
    fn dim(&self) -> usize {
        2 * self.0.dim()
    }
    fn config_dim(&self) -> Option<usize> {
        Some(self.0.dim())
    }
    fn field<T: Scalar>(&self, state: &[T]) -> Result<Vec<T>> {
        let n = self.0.dim();
        if state.len() != 2 * n {
            return Err(Error::DimensionMismatch(format!("state must have {} entries", 2 * n)));
        }
        let (x, u) = state.split_at(n);
        let g = self.0.g(x, u)?;
        Ok(u.iter().copied().chain(g.into_iter().map(|v| v * -2.0)).collect())
    }
}

/// `G`, its phase-space gradient, `N = dG/du` and the phase-space gradient of `N`.
struct Jet<T> {
    g: Vec<T>,
    dg: Matrix<T>,
    conn: Matrix<T>,
    dconn: Vec<Matrix<T>>,
}

fn jet<S: SprayData, T: Scalar>(spray: &S, z: &[T]) -> Result<Jet<T>> {
    let n = spray.dim();
    if z.len() != 2 * n {
        return Err(Error::DimensionMismatch(format!("expected {} phase coordinates", 2 * n)));
    }
    let mut g = vec![T::zero(); n];
    let mut dg = Matrix::zeros(n, 2 * n);
    let mut conn = Matrix::zeros(n, n);
    let mut dconn = vec![Matrix::zeros(n, n); 2 * n];
    for outer in 0..2 * n {
        for b in 0..n {
            let w: Vec<Dual<Dual<T>>> = z
                .iter()
                .enumerate()
                .map(|(i, &v)| {
                    let inner = Dual::new(v, if i == n + b { T::one() } else { T::zero() });
                    let seed = if i == outer { T::one() } else { T::zero() };
                    Dual::new(inner, Dual::constant(seed))
                })
                .collect();
            let (x, u) = w.split_at(n);
            let r = spray.g(x, u)?;
            for a in 0..n {
                g[a] = r[a].re.re;
                conn[(a, b)] = r[a].re.eps;
                dg[(a, outer)] = r[a].eps.re;
                dconn[outer][(a, b)] = r[a].eps.eps;
            }
        }
    }
    Ok(Jet { g, dg, conn, dconn })
}

fn split(spray: &impl SprayData, x: &[f64], u: &[f64]) -> Result<Vec<f64>> {
    let n = spray.dim();
    if x.len() != n || u.len() != n {
        return Err(Error::DimensionMismatch(format!("expected x and u with {n} entries")));
    }
    Ok(x.iter().chain(u).copied().collect())
}

/// `N^a_b = dG^a/du^b`.
pub fn nonlinear_connection<S: SprayData>(spray: &S, x: &[f64], u: &[f64]) -> Result<Matrix<f64>> {
    let n = spray.dim();
    let z = split(spray, x, u)?;
    let mut conn = Matrix::zeros(n, n);
    for b in 0..n {
        let w: Vec<Dual<f64>> = z
            .iter()
            .enumerate()
            .map(|(i, &v)| Dual::new(v, if i == n + b { 1.0 } else { 0.0 }))
            .collect();
        let (xd, ud) = w.split_at(n);
        for (a, v) in spray.g(xd, ud)?.into_iter().enumerate() {
            conn[(a, b)] = v.eps;
        }
    }
    Ok(conn)
}

/// Nonlinear connection and Berwald coefficients at a point.
#[derive(Clone, Debug)]
pub struct BerwaldData {
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub connection: Matrix<f64>,
    /// `gamma[(c, b, a)] = d^2 G^c / du^b du^a`.
    pub gamma: Christoffel<f64>,
}

impl BerwaldData {
    /// Largest violation of symmetry in the lower indices.
    pub fn asymmetry(&self) -> f64 {
        let n = self.gamma.dim();
        let mut m = 0.0f64;
        for c in 0..n {
            for b in 0..n {
                for a in 0..n {
                    m = m.max((self.gamma[(c, b, a)] - self.gamma[(c, a, b)]).abs());
                }
            }
        }
        m
    }
}

pub fn berwald_coefficients<S: SprayData>(spray: &S, x: &[f64], u: &[f64]) -> Result<BerwaldData> {
    let n = spray.dim();
    let z = split(spray, x, u)?;
    let j = jet(spray, &z)?;
    let mut gamma = Christoffel::zeros(n);
    for c in 0..n {
        for b in 0..n {
            for a in 0..n {
                gamma.set(c, b, a, j.dconn[n + a][(c, b)]);
            }
        }
    }
    Ok(BerwaldData {
        x: x.to_vec(),
        u: u.to_vec(),
        connection: j.conn,
        gamma,
    })
}

/// `P^a_b = -2 dG^a/dx^b - 2 G^c dN^a_b/du^c + u^c dN^a_b/dx^c + N^a_c N^c_b`.
pub fn deviation_tensor_p<S: SprayData>(spray: &S, x: &[f64], u: &[f64]) -> Result<Matrix<f64>> {
    let n = spray.dim();
    let z = split(spray, x, u)?;
    let j = jet(spray, &z)?;
    let nn = j.conn.matmul(&j.conn);
    Ok(Matrix::from_fn(n, n, |a, b| {
        let mut v = -2.0 * j.dg[(a, b)] + nn[(a, b)];
        for c in 0..n {
            v += -2.0 * j.g[c] * j.dconn[n + c][(a, b)] + u[c] * j.dconn[c][(a, b)];
        }
        v
    }))
}

/// `epsilon = 2G - N u` and its velocity Jacobian.
#[derive(Clone, Debug, Serialize)]
pub struct EpsilonDefect {
    pub epsilon: Vec<f64>,
    pub jacobian: Matrix<f64>,
    /// Largest absolute entry of the Jacobian.
    pub defect: f64,
}

pub fn epsilon_defect<S: SprayData>(spray: &S, x: &[f64], u: &[f64]) -> Result<EpsilonDefect> {
    let n = spray.dim();
    let z = split(spray, x, u)?;
    let j = jet(spray, &z)?;
    let nu = j.conn.mul_vec(u);
    let epsilon: Vec<f64> = (0..n).map(|a| 2.0 * j.g[a] - nu[a]).collect();
    let jacobian = Matrix::from_fn(n, n, |a, b| {
        let mut v = j.conn[(a, b)];
        for c in 0..n {
            v -= j.dconn[n + b][(a, c)] * u[c];
        }
        v
    });
    let defect = jacobian.max_abs();
    Ok(EpsilonDefect {
        epsilon,
        jacobian,
        defect,
    })
}

/// Coordinate-basis coefficients `hat[C][B][A]` of the Berwald connection on
/// `TM` and the operator `A = T(X, .) + nabla X`.
fn connection_and_a<S: SprayData, T: Scalar>(spray: &S, z: &[T]) -> Result<(Vec<T>, Matrix<T>)> {
    let n = spray.dim();
    let m = 2 * n;
    let j = jet(spray, z)?;
    let x_field: Vec<T> = z[n..].iter().copied().chain(j.g.iter().map(|&v| v * -2.0)).collect();

    // adapted-basis coefficients adapted[G][E][F]
    let idx = |g: usize, e: usize, f: usize| (g * m + e) * m + f;
    let mut adapted = vec![T::zero(); m * m * m];
    for c in 0..n {
        for b in 0..n {
            for a in 0..n {
                let v = j.dconn[n + a][(c, b)];
                adapted[idx(c, b, a)] = v;
                adapted[idx(n + c, n + b, a)] = v;
            }
        }
    }
    // lambda maps coordinate vectors to adapted components; lift is its inverse
    let lambda = Matrix::from_fn(m, m, |r, c| {
        if r == c {
            T::one()
        } else if r >= n && c < n {
            j.conn[(r - n, c)]
        } else {
            T::zero()
        }
    });
    let lift = Matrix::from_fn(m, m, |r, c| {
        if r == c {
            T::one()
        } else if r >= n && c < n {
            -j.conn[(r - n, c)]
        } else {
            T::zero()
        }
    });
    // inner[G][B][F] = sum_E lambda^E_B adapted^G_{EF}
    let mut inner = vec![T::zero(); m * m * m];
    for g in 0..m {
        for b in 0..m {
            for f in 0..m {
                let mut acc = T::zero();
                for e in 0..m {
                    acc += lambda[(e, b)] * adapted[idx(g, e, f)];
                }
                inner[idx(g, b, f)] = acc;
            }
        }
    }
    // h[G][B][A] = d_A lambda^G_B + sum_F inner[G][B][F] lambda^F_A
    let mut h = vec![T::zero(); m * m * m];
    for g in 0..m {
        for b in 0..m {
            for a in 0..m {
                let mut acc = if g >= n && b < n { j.dconn[a][(g - n, b)] } else { T::zero() };
                for f in 0..m {
                    acc += inner[idx(g, b, f)] * lambda[(f, a)];
                }
                h[idx(g, b, a)] = acc;
            }
        }
    }
    let mut hat = vec![T::zero(); m * m * m];
    for c in 0..m {
        for b in 0..m {
            for a in 0..m {
                let mut acc = T::zero();
                for g in 0..m {
                    acc += lift[(c, g)] * h[idx(g, b, a)];
                }
                hat[idx(c, b, a)] = acc;
            }
        }
    }
    let amat = Matrix::from_fn(m, m, |c, b| {
        let mut v = if c < n {
            if b == n + c {
                T::one()
            } else {
                T::zero()
            }
        } else {
            j.dg[(c - n, b)] * -2.0
        };
        for a in 0..m {
            v += hat[idx(c, b, a)] * x_field[a];
        }
        v
    });
    Ok((hat, amat))
}

/// `R~ = nabla_X A + A A` with `A = T(X, .) + nabla X`, assembled in the
/// coordinate basis of `TTM` with the Berwald connection.
pub fn rtilde_operator<S: SprayData>(spray: &S, x: &[f64], u: &[f64]) -> Result<Matrix<f64>> {
    let n = spray.dim();
    let m = 2 * n;
    let z = split(spray, x, u)?;
    let g = spray.g(x, u)?;
    let xf: Vec<f64> = u.iter().copied().chain(g.iter().map(|v| -2.0 * v)).collect();
    let zd: Vec<Dual<f64>> = z.iter().zip(&xf).map(|(&p, &d)| Dual::new(p, d)).collect();
    let (hat_d, a_d) = connection_and_a(spray, &zd)?;
    let hat = |c: usize, b: usize, a: usize| hat_d[(c * m + b) * m + a].re;
    let a = a_d.re();
    let mut out = Matrix::from_fn(m, m, |c, b| a_d[(c, b)].eps);
    // contracted connection K^C_E = hat^C_{ED} X^D
    let k = Matrix::from_fn(m, m, |c, e| (0..m).map(|d| hat(c, e, d) * xf[d]).sum::<f64>());
    let ka = k.matmul(&a);
    let ak = a.matmul(&k);
    let aa = a.matmul(&a);
    for c in 0..m {
        for b in 0..m {
            out[(c, b)] += ka[(c, b)] - ak[(c, b)] + aa[(c, b)];
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LocalStability {
    Stable,
    Unstable,
    Marginal,
}

/// Verdict of an eigenvalue track. `complex` flags spectra with imaginary
/// parts above tolerance; the verdict then refers to real parts.
#[derive(Clone, Debug, Serialize)]
pub struct LocalVerdict {
    pub verdict: LocalStability,
    pub complex: bool,
    pub max_real: f64,
    pub min_real: f64,
    pub max_imag: f64,
    pub max_modulus: f64,
}

pub fn classify_local_stability(track: &[ComplexEigenSet], tol: f64) -> Result<LocalVerdict> {
    if track.is_empty() || track.iter().all(ComplexEigenSet::is_empty) {
        return Err(Error::InvalidSettings("empty eigenvalue track".into()));
    }
    let all = track.iter().flat_map(|s| s.iter().copied());
    let (mut max_real, mut min_real, mut max_imag, mut max_modulus) =
        (f64::NEG_INFINITY, f64::INFINITY, 0.0f64, 0.0f64);
    for (re, im) in all {
        max_real = max_real.max(re);
        min_real = min_real.min(re);
        max_imag = max_imag.max(im.abs());
        max_modulus = max_modulus.max(re.hypot(im));
    }
    let verdict = if max_real > tol {
        LocalStability::Unstable
    } else if min_real >= -tol {
        LocalStability::Marginal
    } else {
        LocalStability::Stable
    };
    Ok(LocalVerdict {
        verdict,
        complex: max_imag > tol,
        max_real,
        min_real,
        max_imag,
        max_modulus,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LocalOperator {
    Deviation,
    RTilde,
}

/// Eigenvalues of `P` or `R~` at every sample of a trajectory on `(x, u)`.
pub fn eigen_track<S: SprayData>(spray: &S, traj: &Trajectory, op: LocalOperator) -> Result<Vec<ComplexEigenSet>> {
    let n = spray.dim();
    traj.states
        .iter()
        .map(|s| {
            if s.len() < 2 * n {
                return Err(Error::DimensionMismatch("trajectory states are not (x, u)".into()));
            }
            let (x, u) = (&s[..n], &s[n..2 * n]);
            let m = match op {
                LocalOperator::Deviation => deviation_tensor_p(spray, x, u)?,
                LocalOperator::RTilde => rtilde_operator(spray, x, u)?,
            };
            eigenvalues(&m)
        })
        .collect()
}
