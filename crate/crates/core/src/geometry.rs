//! Riemannian geometry of configuration space.

use std::ops::Index;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::{BinOp, Expression, Node, SymbolTable};
use crate::flow::{hermite, hermite_derivative, integrate_rhs, Flow, IntegratorSettings, Sampling, Trajectory};
use crate::numeric::{scaled_det, seed_axis, Dual, Lu, Matrix, Scalar};

/// Scaled determinant below which a metric counts as degenerate.
pub const DEGENERATE_DET: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Signature {
    PositiveDefinite,
    Indefinite,
}

/// A symmetric `n x n` array of expressions in `x1..xn`.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricField {
    n: usize,
    symbols: Arc<SymbolTable>,
    components: Vec<Vec<Expression>>,
    signature: Signature,
}

impl MetricField {
    pub fn new(components: Vec<Vec<Expression>>, signature: Signature) -> Result<Self> {
        let n = components.len();
        if n == 0 || components.iter().any(|row| row.len() != n) {
            return Err(Error::DimensionMismatch("metric must be a non-empty square array".into()));
        }
        let symbols = Arc::clone(components[0][0].symbols());
        if symbols.num_variables() != n {
            return Err(Error::DimensionMismatch(format!(
                "metric of dimension {n} is written over {} variables",
                symbols.num_variables()
            )));
        }
        for (i, row) in components.iter().enumerate() {
            for (j, c) in row.iter().enumerate() {
                if c.symbols() != &symbols {
                    return Err(Error::DimensionMismatch("metric components use different symbol tables".into()));
                }
                if j < i && c.root() != components[j][i].root() {
                    return Err(Error::AsymmetricMetric { row: i, col: j });
                }
            }
        }
        Ok(MetricField {
            n,
            symbols,
            components,
            signature,
        })
    }

    /// Parses a full component array against `symbols`.
    pub fn parse<S: AsRef<str>>(symbols: &Arc<SymbolTable>, rows: &[Vec<S>], signature: Signature) -> Result<Self> {
        let comps = rows
            .iter()
            .map(|r| r.iter().map(|c| Expression::parse(c.as_ref(), symbols)).collect::<Result<Vec<_>, _>>())
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(comps, signature)
    }

    /// Diagonal metric from its diagonal entries.
    pub fn diagonal<S: AsRef<str>>(symbols: &Arc<SymbolTable>, diag: &[S], signature: Signature) -> Result<Self> {
        let n = diag.len();
        let rows: Vec<Vec<String>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| if i == j { diag[i].as_ref().to_string() } else { "0".to_string() })
                    .collect()
            })
            .collect();
        Self::parse(symbols, &rows, signature)
    }

    /// The flat metric `delta_ab` on `x1..xn`.
    pub fn euclidean(n: usize) -> Self {
        let symbols = Arc::new(SymbolTable::configuration(n));
        let ones = vec!["1"; n];
        Self::diagonal(&symbols, &ones, Signature::PositiveDefinite).expect("valid flat metric")
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn symbols(&self) -> &Arc<SymbolTable> {
        &self.symbols
    }

    pub fn signature(&self) -> Signature {
        self.signature
    }

    pub fn components(&self) -> &[Vec<Expression>] {
        &self.components
    }

    /// `factor * g`, with `factor` an expression over the same symbols.
    pub fn rescale(&self, factor: &Expression) -> Result<MetricField> {
        if factor.symbols() != &self.symbols {
            return Err(Error::DimensionMismatch("conformal factor uses a different symbol table".into()));
        }
        let comps = self
            .components
            .iter()
            .map(|row| {
                row.iter()
                    .map(|c| {
                        Expression::from_node(
                            Node::binary(BinOp::Mul, factor.root().clone(), c.root().clone()),
                            &self.symbols,
                        )
                    })
                    .collect()
            })
            .collect();
        MetricField::new(comps, self.signature)
    }

    fn check_point<T: Scalar>(&self, x: &[T]) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "point has {} coordinates, metric dimension is {}",
                x.len(),
                self.n
            )));
        }
        Ok(())
    }

    /// Component matrix at `x`, symmetric by construction.
    pub fn matrix<T: Scalar>(&self, x: &[T]) -> Result<Matrix<T>> {
        self.check_point(x)?;
        let mut g = Matrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for j in i..self.n {
                let v = self.components[i][j].eval(x)?;
                g[(i, j)] = v;
                g[(j, i)] = v;
            }
        }
        Ok(g)
    }

    /// Component matrix at a real point, rejecting degenerate points.
    pub fn at(&self, x: &[f64]) -> Result<Matrix<f64>> {
        let g = self.matrix(x)?;
        ensure_nondegenerate(&g, x)?;
        Ok(g)
    }

    pub fn inner(&self, x: &[f64], v: &[f64], w: &[f64]) -> Result<f64> {
        Ok(self.matrix(x)?.bilinear(v, w))
    }
}

fn ensure_nondegenerate(g: &Matrix<f64>, x: &[f64]) -> Result<()> {
    if !(scaled_det(g) > DEGENERATE_DET) {
        return Err(Error::DegenerateMetric { point: x.to_vec() });
    }
    Ok(())
}

/// `Gamma^a_{bc}` stored densely; symmetric in the lower pair.
#[derive(Clone, Debug, PartialEq)]
pub struct Christoffel<T = f64> {
    n: usize,
    data: Vec<T>,
}

impl<T: Scalar> Christoffel<T> {
    pub fn zeros(n: usize) -> Self {
        Christoffel {
            n,
            data: vec![T::zero(); n * n * n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub(crate) fn set(&mut self, a: usize, b: usize, c: usize, v: T) {
        let n = self.n;
        self.data[(a * n + b) * n + c] = v;
    }

    /// `Gamma^a_{bc} u^b v^c`.
    pub fn contract(&self, u: &[T], v: &[T]) -> Vec<T> {
        let n = self.n;
        (0..n)
            .map(|a| {
                let mut acc = T::zero();
                for b in 0..n {
                    for c in 0..n {
                        acc += self[(a, b, c)] * u[b] * v[c];
                    }
                }
                acc
            })
            .collect()
    }

    /// The matrix `M^a_c = Gamma^a_{bc} u^b`.
    pub fn contract_first(&self, u: &[T]) -> Matrix<T> {
        let n = self.n;
        Matrix::from_fn(n, n, |a, c| {
            let mut acc = T::zero();
            for b in 0..n {
                acc += self[(a, b, c)] * u[b];
            }
            acc
        })
    }

    pub fn re(&self) -> Christoffel<f64> {
        Christoffel {
            n: self.n,
            data: self.data.iter().map(Scalar::re).collect(),
        }
    }
}

impl<T> Index<(usize, usize, usize)> for Christoffel<T> {
    type Output = T;
    fn index(&self, (a, b, c): (usize, usize, usize)) -> &T {
        &self.data[(a * self.n + b) * self.n + c]
    }
}

/// Levi-Civita connection coefficients at `x`.
pub fn christoffel<T: Scalar>(metric: &MetricField, x: &[T]) -> Result<Christoffel<T>> {
    let n = metric.dim();
    let g = metric.matrix(x)?;
    let xr: Vec<f64> = x.iter().map(Scalar::re).collect();
    ensure_nondegenerate(&g.re(), &xr)?;
    // dg[c] = d_c g
    let mut dg = Vec::with_capacity(n);
    for c in 0..n {
        let gd = metric.matrix(&seed_axis(x, c))?;
        dg.push(Matrix::from_fn(n, n, |i, j| gd[(i, j)].eps));
    }
    let lu = Lu::factor(&g).map_err(|_| Error::DegenerateMetric { point: xr.clone() })?;
    let mut out = Christoffel::zeros(n);
    for b in 0..n {
        for c in b..n {
            let lowered: Vec<T> = (0..n)
                .map(|d| (dg[b][(d, c)] + dg[c][(d, b)] - dg[d][(b, c)]) * 0.5)
                .collect();
            let raised = lu.solve(&lowered);
            for (a, v) in raised.into_iter().enumerate() {
                out.set(a, b, c, v);
                out.set(a, c, b, v);
            }
        }
    }
    Ok(out)
}

/// `R^a_{bcd}` with the convention
/// `R^a_{bcd} = d_c Gamma^a_{db} - d_d Gamma^a_{cb} + Gamma^a_{ce} Gamma^e_{db} - Gamma^a_{de} Gamma^e_{cb}`,
/// so that Jacobi fields satisfy `D^2 xi^a = -R^a_{pbq} u^p u^q xi^b`.
#[derive(Clone, Debug, PartialEq)]
pub struct Riemann {
    n: usize,
    data: Vec<f64>,
}

impl Index<(usize, usize, usize, usize)> for Riemann {
    type Output = f64;
    fn index(&self, (a, b, c, d): (usize, usize, usize, usize)) -> &f64 {
        let n = self.n;
        &self.data[((a * n + b) * n + c) * n + d]
    }
}

impl Riemann {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// `K^a_b = R^a_{pbq} u^p u^q`.
    pub fn jacobi_operator(&self, u: &[f64]) -> Matrix<f64> {
        let n = self.n;
        Matrix::from_fn(n, n, |a, b| {
            let mut acc = 0.0;
            for p in 0..n {
                for q in 0..n {
                    acc += self[(a, p, b, q)] * u[p] * u[q];
                }
            }
            acc
        })
    }

    /// `Ric_{bd} = R^a_{bad}`.
    pub fn ricci(&self) -> Matrix<f64> {
        let n = self.n;
        Matrix::from_fn(n, n, |b, d| (0..n).map(|a| self[(a, b, a, d)]).sum())
    }
}

pub fn riemann(metric: &MetricField, x: &[f64]) -> Result<Riemann> {
    let n = metric.dim();
    let gamma = christoffel(metric, x)?;
    let dgamma: Vec<Christoffel<f64>> = (0..n)
        .map(|c| {
            let gd = christoffel(metric, &seed_axis(x, c))?;
            Ok(Christoffel {
                n,
                data: gd.data.iter().map(|v: &Dual<f64>| v.eps).collect(),
            })
        })
        .collect::<Result<_>>()?;
    let mut data = vec![0.0; n * n * n * n];
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    let mut v = dgamma[c][(a, d, b)] - dgamma[d][(a, c, b)];
                    for e in 0..n {
                        v += gamma[(a, c, e)] * gamma[(e, d, b)] - gamma[(a, d, e)] * gamma[(e, c, b)];
                    }
                    data[((a * n + b) * n + c) * n + d] = v;
                }
            }
        }
    }
    Ok(Riemann { n, data })
}

pub fn ricci_tensor(metric: &MetricField, x: &[f64]) -> Result<Matrix<f64>> {
    Ok(riemann(metric, x)?.ricci())
}

pub fn ricci_scalar(metric: &MetricField, x: &[f64]) -> Result<f64> {
    let ric = ricci_tensor(metric, x)?;
    let ginv = Lu::factor(&metric.at(x)?)?.inverse();
    let n = metric.dim();
    let mut r = 0.0;
    for b in 0..n {
        for d in 0..n {
            r += ginv[(b, d)] * ric[(b, d)];
        }
    }
    Ok(r)
}

/// Smallest conformal factor accepted by [`conformal_ricci`].
pub const CONFORMAL_THRESHOLD: f64 = 1e-10;

/// Ricci scalar of `sigma2 * k` from the curvature of `k` and derivatives of
/// `ln sigma`:
/// `R = sigma^-2 (R_k - 2(n-1) Box ln sigma - (n-2)(n-1) |grad ln sigma|^2)`.
pub fn conformal_ricci(base: &MetricField, sigma2: &Expression, x: &[f64]) -> Result<f64> {
    let n = base.dim();
    if sigma2.symbols() != base.symbols() {
        return Err(Error::DimensionMismatch("conformal factor uses a different symbol table".into()));
    }
    let s = sigma2.eval(x)?;
    if !(s > CONFORMAL_THRESHOLD) {
        return Err(Error::BoundaryPoint {
            point: x.to_vec(),
            gap: s,
        });
    }
    let grad_s: Vec<f64> = (0..n)
        .map(|a| Ok(sigma2.eval(&seed_axis(x, a))?.eps))
        .collect::<Result<_>>()?;
    let hess_s = crate::numeric::hessian(sigma2, x)?;
    // f = ln sigma = (1/2) ln sigma2
    let df: Vec<f64> = grad_s.iter().map(|v| 0.5 * v / s).collect();
    let ddf = Matrix::from_fn(n, n, |a, b| 0.5 * hess_s[(a, b)] / s - 0.5 * grad_s[a] * grad_s[b] / (s * s));
    let k = base.at(x)?;
    let kinv = Lu::factor(&k)?.inverse();
    let gamma = christoffel(base, x)?;
    let mut box_f = 0.0;
    let mut grad_sq = 0.0;
    for a in 0..n {
        for b in 0..n {
            let mut cov = ddf[(a, b)];
            for c in 0..n {
                cov -= gamma[(c, a, b)] * df[c];
            }
            box_f += kinv[(a, b)] * cov;
            grad_sq += kinv[(a, b)] * df[a] * df[b];
        }
    }
    let rk = ricci_scalar(base, x)?;
    let nf = n as f64;
    Ok((rk - 2.0 * (nf - 1.0) * box_f - (nf - 2.0) * (nf - 1.0) * grad_sq) / s)
}

/// The geodesic spray `(u, -Gamma(u, u))` of a metric on `2n` phase variables.
#[derive(Clone, Debug)]
pub struct GeodesicSpray {
    pub metric: MetricField,
}

impl GeodesicSpray {
    pub fn new(metric: MetricField) -> Self {
        GeodesicSpray { metric }
    }
}

impl Flow for GeodesicSpray {
    fn dim(&self) -> usize {
        2 * self.metric.dim()
    }

    fn config_dim(&self) -> Option<usize> {
        Some(self.metric.dim())
    }

    fn field<T: Scalar>(&self, state: &[T]) -> Result<Vec<T>> {
        let n = self.metric.dim();
        if state.len() != 2 * n {
            return Err(Error::DimensionMismatch(format!(
                "geodesic state has {} entries, expected {}",
                state.len(),
                2 * n
            )));
        }
        let (x, u) = state.split_at(n);
        let gamma = christoffel(&self.metric, x)?;
        let acc = gamma.contract(u, u);
        Ok(u.iter().copied().chain(acc.into_iter().map(|v| -v)).collect())
    }
}

/// Parallel transport of `initial_frame` along a curve whose states are
/// `(x, dx/dt)`. Between samples the position is the cubic Hermite
/// interpolant and the velocity its derivative, so the transport equation is
/// solved along one consistent differentiable curve.
pub fn parallel_transport_frame(
    metric: &MetricField,
    curve: &Trajectory,
    initial_frame: &[Vec<f64>],
    settings: &IntegratorSettings,
) -> Result<Trajectory> {
    let n = metric.dim();
    if curve.states.iter().any(|s| s.len() != 2 * n) {
        return Err(Error::DimensionMismatch(format!(
            "curve states must be (x, dx/dt) with {} entries",
            2 * n
        )));
    }
    if initial_frame.iter().any(|e| e.len() != n) {
        return Err(Error::DimensionMismatch(format!("frame vectors must have dimension {n}")));
    }
    let m = initial_frame.len();
    let mut frames = Vec::with_capacity(curve.len());
    let mut current: Vec<f64> = initial_frame.iter().flatten().copied().collect();
    if curve.is_empty() {
        return Ok(curve.clone());
    }
    frames.push(initial_frame.to_vec());
    let mut inner = settings.clone();
    inner.sampling = Sampling::Steps;
    inner.events.clear();
    for k in 0..curve.len() - 1 {
        let (t0, t1) = (curve.times[k], curve.times[k + 1]);
        let (x0, v0) = curve.states[k].split_at(n);
        let (x1, v1) = curve.states[k + 1].split_at(n);
        let rhs = |t: f64, y: &[f64]| -> Result<Vec<f64>> {
            let x = hermite(t0, x0, v0, t1, x1, v1, t);
            let v = hermite_derivative(t0, x0, v0, t1, x1, v1, t);
            let gamma = christoffel(metric, &x)?;
            let mv = gamma.contract_first(&v);
            let mut out = Vec::with_capacity(n * m);
            for e in y.chunks(n) {
                out.extend(mv.mul_vec(e).into_iter().map(|c| -c));
            }
            Ok(out)
        };
        let (piece, err) = integrate_rhs(rhs, &current, (t0, t1), &inner);
        if let Some(e) = err {
            return Err(e);
        }
        current = piece.last_state().to_vec();
        frames.push(current.chunks(n).map(|c| c.to_vec()).collect());
    }
    let mut out = curve.clone();
    out.frames = Some(frames);
    Ok(out)
}
