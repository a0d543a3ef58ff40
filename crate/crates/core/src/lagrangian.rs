//! Lagrangian systems as semisprays on the tangent bundle.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::{BinOp, Expression, Node, SymbolTable};
use crate::flow::{integrate_rhs, Flow, IntegratorSettings, Trajectory};
use crate::geometry::{christoffel, riemann, MetricField};
use crate::numeric::{hessian, scaled_det, second_partial, seed_axis, solve_linear, Lu, Matrix, Scalar};

/// Scaled determinant of the velocity Hessian below which `L` is degenerate.
pub const DEGENERATE_HESSIAN: f64 = 1e-12;

/// A Lagrangian `L(x, u)` on `2n` phase variables.
#[derive(Clone, Debug)]
pub struct LagrangianSystem {
    n: usize,
    lagrangian: Expression,
}

impl LagrangianSystem {
    pub fn new(n: usize, lagrangian: Expression) -> Result<Self> {
        if lagrangian.arity() != 2 * n {
            return Err(Error::DimensionMismatch(format!(
                "a Lagrangian on {n} coordinates needs 2n = {} phase variables, table has {}",
                2 * n,
                lagrangian.arity()
            )));
        }
        Ok(LagrangianSystem { n, lagrangian })
    }

    /// Parses `text` over `x1..xn, u1..un` and the given parameters.
    pub fn parse(n: usize, text: &str, parameters: &[(&str, f64)]) -> Result<Self> {
        let mut t = SymbolTable::phase(n);
        for (name, v) in parameters {
            t.add_parameter(name, *v)?;
        }
        Self::new(n, Expression::parse(text, &Arc::new(t))?)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn expression(&self) -> &Expression {
        &self.lagrangian
    }

    fn check(&self, x: &[impl Scalar], u: &[impl Scalar]) -> Result<()> {
        if x.len() != self.n || u.len() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "expected x and u with {} entries",
                self.n
            )));
        }
        Ok(())
    }

    fn phase<T: Scalar>(x: &[T], u: &[T]) -> Vec<T> {
        x.iter().chain(u).copied().collect()
    }

    /// Generalized Lagrange metric `d^2 L / du^a du^b`.
    pub fn lagrange_metric(&self, x: &[f64], u: &[f64]) -> Result<Matrix<f64>> {
        self.check(x, u)?;
        let g = self.velocity_hessian(&Self::phase(x, u))?;
        if !(scaled_det(&g) > DEGENERATE_HESSIAN) {
            return Err(Error::DegenerateLagrangian {
                x: x.to_vec(),
                u: u.to_vec(),
            });
        }
        Ok(g)
    }

    fn velocity_hessian<T: Scalar>(&self, p: &[T]) -> Result<Matrix<T>> {
        let n = self.n;
        let mut g = Matrix::zeros(n, n);
        for a in 0..n {
            for b in a..n {
                let v = second_partial(&self.lagrangian, p, n + a, n + b)?;
                g[(a, b)] = v;
                g[(b, a)] = v;
            }
        }
        Ok(g)
    }

    pub fn value(&self, x: &[f64], u: &[f64]) -> Result<f64> {
        self.check(x, u)?;
        Ok(self.lagrangian.eval(&Self::phase(x, u))?)
    }

    /// `E = u^a dL/du^a - L`.
    pub fn energy(&self, x: &[f64], u: &[f64]) -> Result<f64> {
        self.check(x, u)?;
        let p = Self::phase(x, u);
        let l = self.lagrangian.eval(&p)?;
        let mut e = -l;
        for a in 0..self.n {
            e += u[a] * self.lagrangian.eval(&seed_axis(&p, self.n + a))?.eps;
        }
        Ok(e)
    }

    /// Acceleration `X_2` solving `g X_2 = dL/dx - (d^2 L / dx^b du^a) u^b`.
    pub fn acceleration<T: Scalar>(&self, x: &[T], u: &[T]) -> Result<Vec<T>> {
        self.check(x, u)?;
        let n = self.n;
        let p = Self::phase(x, u);
        let g = self.velocity_hessian(&p)?;
        if !(scaled_det(&g.re()) > DEGENERATE_HESSIAN) {
            return Err(Error::DegenerateLagrangian {
                x: x.iter().map(Scalar::re).collect(),
                u: u.iter().map(Scalar::re).collect(),
            });
        }
        let mut rhs = Vec::with_capacity(n);
        for a in 0..n {
            let mut v = self.lagrangian.eval(&seed_axis(&p, a))?.eps;
            for b in 0..n {
                v -= second_partial(&self.lagrangian, &p, b, n + a)? * u[b];
            }
            rhs.push(v);
        }
        solve_linear(&g, &rhs).map_err(|_| Error::DegenerateLagrangian {
            x: x.iter().map(Scalar::re).collect(),
            u: u.iter().map(Scalar::re).collect(),
        })
    }

    /// Spray coefficients `G = -X_2 / 2`.
    pub fn spray_g<T: Scalar>(&self, x: &[T], u: &[T]) -> Result<Vec<T>> {
        Ok(self.acceleration(x, u)?.into_iter().map(|v| v * -0.5).collect())
    }

    pub fn semispray(&self) -> LagrangianSemispray {
        LagrangianSemispray { system: self.clone() }
    }
}

/// The semispray of a regular Lagrangian.
#[derive(Clone, Debug)]
pub struct LagrangianSemispray {
    pub system: LagrangianSystem,
}

impl Flow for LagrangianSemispray {
    fn dim(&self) -> usize {
        2 * self.system.n
    }

    fn config_dim(&self) -> Option<usize> {
        Some(self.system.n)
    }

    fn field<T: Scalar>(&self, state: &[T]) -> Result<Vec<T>> {
        let n = self.system.n;
        if state.len() != 2 * n {
            return Err(Error::DimensionMismatch(format!("state must have {} entries", 2 * n)));
        }
        let (x, u) = state.split_at(n);
        let acc = self.system.acceleration(x, u)?;
        Ok(u.iter().copied().chain(acc).collect())
    }
}

/// `L = k(u, u)/2 - V(x)` with kinetic metric `k` and potential `V`.
#[derive(Clone, Debug)]
pub struct NaturalLagrangian {
    kinetic: MetricField,
    potential: Expression,
    lagrangian: LagrangianSystem,
}

impl NaturalLagrangian {
    pub fn new(kinetic: MetricField, potential: Expression) -> Result<Self> {
        if potential.symbols() != kinetic.symbols() {
            return Err(Error::DimensionMismatch(
                "potential and kinetic metric must share a symbol table".into(),
            ));
        }
        let n = kinetic.dim();
        let vel: Vec<String> = (1..=n).map(|i| format!("u{i}")).collect();
        let phase = Arc::new(kinetic.symbols().extended(&vel)?);
        let mut l: Option<Node> = None;
        for a in 0..n {
            for b in 0..n {
                let term = Node::binary(
                    BinOp::Mul,
                    Node::binary(
                        BinOp::Mul,
                        Node::binary(BinOp::Mul, Node::Const(0.5), kinetic.components()[a][b].root().clone()),
                        Node::Var(n + a),
                    ),
                    Node::Var(n + b),
                );
                l = Some(match l {
                    None => term,
                    Some(acc) => Node::binary(BinOp::Add, acc, term),
                });
            }
        }
        let l = Node::binary(BinOp::Sub, l.expect("n >= 1"), potential.root().clone());
        let lagrangian = LagrangianSystem::new(n, Expression::from_node(l, &phase))?;
        Ok(NaturalLagrangian {
            kinetic,
            potential,
            lagrangian,
        })
    }

    /// Parses diagonal or full kinetic entries and the potential over `x1..xn`.
    pub fn parse<S: AsRef<str>>(kinetic: &[Vec<S>], potential: &str, parameters: &[(&str, f64)]) -> Result<Self> {
        let n = kinetic.len();
        let mut t = SymbolTable::configuration(n);
        for (name, v) in parameters {
            t.add_parameter(name, *v)?;
        }
        let t = Arc::new(t);
        let k = MetricField::parse(&t, kinetic, crate::geometry::Signature::PositiveDefinite)?;
        let v = Expression::parse(potential, &t)?;
        Self::new(k, v)
    }

    pub fn dim(&self) -> usize {
        self.kinetic.dim()
    }

    pub fn kinetic(&self) -> &MetricField {
        &self.kinetic
    }

    pub fn potential(&self) -> &Expression {
        &self.potential
    }

    /// The same system viewed as a general Lagrangian.
    pub fn lagrangian(&self) -> &LagrangianSystem {
        &self.lagrangian
    }

    pub fn potential_at(&self, x: &[f64]) -> Result<f64> {
        Ok(self.potential.eval(x)?)
    }

    /// `E = k(u, u)/2 + V(x)`.
    pub fn energy(&self, x: &[f64], u: &[f64]) -> Result<f64> {
        let k = self.kinetic.matrix(x)?;
        Ok(0.5 * k.bilinear(u, u) + self.potential.eval(x)?)
    }

    fn grad_v<T: Scalar>(&self, x: &[T]) -> Result<Vec<T>> {
        (0..x.len())
            .map(|c| Ok(self.potential.eval(&seed_axis(x, c))?.eps))
            .collect()
    }

    /// `-Gamma(u, u) - k^{-1} dV`.
    pub fn acceleration<T: Scalar>(&self, x: &[T], u: &[T]) -> Result<Vec<T>> {
        let gamma = christoffel(&self.kinetic, x)?;
        let k = self.kinetic.matrix(x)?;
        let grad = solve_linear(&k, &self.grad_v(x)?)?;
        let quad = gamma.contract(u, u);
        Ok(quad.into_iter().zip(grad).map(|(q, g)| -q - g).collect())
    }

    pub fn spray(&self) -> NaturalSpray {
        NaturalSpray { system: self.clone() }
    }

    /// `P^a_b = -R^a_{pbq} u^p u^q - k^{ac}(d_c d_b V - Gamma^d_{cb} d_d V)`.
    pub fn perturbation_operator(&self, x: &[f64], u: &[f64]) -> Result<Matrix<f64>> {
        let n = self.dim();
        let r = riemann(&self.kinetic, x)?;
        let gamma = christoffel(&self.kinetic, x)?;
        let dv = self.grad_v(x)?;
        let ddv = hessian(&self.potential, x)?;
        let cov = Matrix::from_fn(n, n, |c, b| {
            let mut v = ddv[(c, b)];
            for d in 0..n {
                v -= gamma[(d, c, b)] * dv[d];
            }
            v
        });
        let kinv = Lu::factor(&self.kinetic.at(x)?)?.inverse();
        Ok(r.jacobi_operator(u).scale(-1.0).sub(&kinv.matmul(&cov)))
    }
}

/// Free function form of [`NaturalLagrangian::perturbation_operator`].
pub fn perturbation_operator_natural(nat: &NaturalLagrangian, x: &[f64], u: &[f64]) -> Result<Matrix<f64>> {
    nat.perturbation_operator(x, u)
}

/// Semispray of a natural Lagrangian assembled from the Levi-Civita
/// connection of `k` and the gradient of `V`.
#[derive(Clone, Debug)]
pub struct NaturalSpray {
    pub system: NaturalLagrangian,
}

impl Flow for NaturalSpray {
    fn dim(&self) -> usize {
        2 * self.system.dim()
    }

    fn config_dim(&self) -> Option<usize> {
        Some(self.system.dim())
    }

    fn field<T: Scalar>(&self, state: &[T]) -> Result<Vec<T>> {
        let n = self.system.dim();
        if state.len() != 2 * n {
            return Err(Error::DimensionMismatch(format!("state must have {} entries", 2 * n)));
        }
        let (x, u) = state.split_at(n);
        let acc = self.system.acceleration(x, u)?;
        Ok(u.iter().copied().chain(acc).collect())
    }
}

/// Integrates the covariant perturbation equation
/// `D^2 xi = P xi` along the solution through `(x0, u0)`, jointly with the
/// solution itself. `xi_dot0` is the coordinate derivative of `xi` at the
/// start. States of the result are `(xi, dxi/dt)` in coordinates.
pub fn evolve_perturbation_natural(
    nat: &NaturalLagrangian,
    x0: &[f64],
    u0: &[f64],
    xi0: &[f64],
    xi_dot0: &[f64],
    tspan: (f64, f64),
    settings: &IntegratorSettings,
) -> Result<Trajectory> {
    let n = nat.dim();
    if [x0, u0, xi0, xi_dot0].iter().any(|v| v.len() != n) {
        return Err(Error::DimensionMismatch(format!("all initial vectors need {n} entries")));
    }
    let gamma0 = christoffel(&nat.kinetic, x0)?;
    let corr = gamma0.contract(u0, xi0);
    let eta0: Vec<f64> = xi_dot0.iter().zip(&corr).map(|(a, b)| a + b).collect();
    let y0: Vec<f64> = [x0, u0, xi0, &eta0[..]].concat();
    let rhs = |_: f64, y: &[f64]| -> Result<Vec<f64>> {
        let (x, rest) = y.split_at(n);
        let (u, rest) = rest.split_at(n);
        let (xi, eta) = rest.split_at(n);
        let gamma = christoffel(&nat.kinetic, x)?;
        let acc = nat.acceleration(x, u)?;
        let p = nat.perturbation_operator(x, u)?;
        let gxi = gamma.contract(u, xi);
        let geta = gamma.contract(u, eta);
        let pxi = p.mul_vec(xi);
        let mut out = Vec::with_capacity(4 * n);
        out.extend_from_slice(u);
        out.extend(acc);
        out.extend((0..n).map(|a| eta[a] - gxi[a]));
        out.extend((0..n).map(|a| -geta[a] + pxi[a]));
        Ok(out)
    };
    let (traj, err) = integrate_rhs(rhs, &y0, tspan, settings);
    if let Some(e) = err {
        return Err(e);
    }
    let mut out = Trajectory::new("t");
    out.events = traj.events;
    for (t, y) in traj.times.iter().zip(&traj.states) {
        let (x, rest) = y.split_at(n);
        let (u, rest) = rest.split_at(n);
        let (xi, eta) = rest.split_at(n);
        let g = christoffel(&nat.kinetic, x)?.contract(u, xi);
        let xidot: Vec<f64> = (0..n).map(|a| eta[a] - g[a]).collect();
        out.times.push(*t);
        out.states.push([xi, &xidot[..]].concat());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inverted(mu: f64) -> LagrangianSystem {
        LagrangianSystem::parse(1, "0.5*(u1^2 + mu^2*x1^2)", &[("mu", mu)]).unwrap()
    }

    #[test]
    fn free_particle() {
        let l = LagrangianSystem::parse(1, "0.5*u1^2", &[]).unwrap();
        assert_eq!(l.lagrange_metric(&[0.3], &[2.0]).unwrap()[(0, 0)], 1.0);
        assert_eq!(l.energy(&[0.3], &[2.0]).unwrap(), 2.0);
        assert_eq!(l.acceleration(&[0.3], &[2.0]).unwrap(), vec![0.0]);
    }

    #[test]
    fn inverted_oscillator_flow() {
        let l = inverted(1.5);
        let a = l.acceleration(&[2.0], &[0.7]).unwrap();
        assert!((a[0] - 1.5 * 1.5 * 2.0).abs() < 1e-14);
        assert!((l.spray_g(&[2.0], &[0.7]).unwrap()[0] + 0.5 * 2.25 * 2.0).abs() < 1e-14);
        assert_eq!(inverted(1.0).energy(&[1.0], &[1.0]).unwrap(), 0.0);
    }

    #[test]
    fn degenerate_lagrangian() {
        let l = LagrangianSystem::parse(1, "u1", &[]).unwrap();
        assert!(matches!(l.lagrange_metric(&[0.0], &[1.0]), Err(Error::DegenerateLagrangian { .. })));
        assert!(matches!(l.acceleration(&[0.0], &[1.0]), Err(Error::DegenerateLagrangian { .. })));
    }

    #[test]
    fn natural_metric_and_energy() {
        let nat = NaturalLagrangian::parse(&[vec!["1", "0"], vec!["0", "1 + x1^2"]], "x2^2", &[]).unwrap();
        let (x, u) = ([0.5, -0.3], [1.2, 0.4]);
        let g = nat.lagrangian().lagrange_metric(&x, &u).unwrap();
        let k = nat.kinetic().at(&x).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((g[(i, j)] - k[(i, j)]).abs() < 1e-14);
            }
        }
        let e = nat.lagrangian().energy(&x, &u).unwrap();
        assert!((e - nat.energy(&x, &u).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn natural_acceleration_matches_general_route() {
        let nat = NaturalLagrangian::parse(
            &[vec!["1 + x2^2", "0.2*x1"], vec!["0.2*x1", "2 + sin(x1)"]],
            "x1^2*x2 + cos(x2)",
            &[],
        )
        .unwrap();
        let (x, u) = ([0.4, -0.7], [0.9, 1.3]);
        let a = nat.acceleration(&x, &u).unwrap();
        let b = nat.lagrangian().acceleration(&x, &u).unwrap();
        for i in 0..2 {
            assert!((a[i] - b[i]).abs() < 1e-12, "{a:?} {b:?}");
        }
    }

    #[test]
    fn perturbation_operator_examples() {
        let free = NaturalLagrangian::parse(&[vec!["1", "0"], vec!["0", "1"]], "0", &[]).unwrap();
        let p = free.perturbation_operator(&[0.1, 0.2], &[1.0, 0.0]).unwrap();
        assert!(p.as_slice().iter().all(|&v| v == 0.0));
        let inv = NaturalLagrangian::parse(&[vec!["1"]], "-0.5*mu^2*x1^2", &[("mu", 1.0)]).unwrap();
        assert_eq!(inv.perturbation_operator(&[0.4], &[0.2]).unwrap()[(0, 0)], 1.0);
        let w = 1.7;
        let osc = NaturalLagrangian::parse(&[vec!["1", "0"], vec!["0", "1"]], "0.5*w^2*(x1^2 + x2^2)", &[("w", w)])
            .unwrap();
        let p = osc.perturbation_operator(&[0.3, -0.1], &[0.5, 0.5]).unwrap();
        assert!((p[(0, 0)] + w * w).abs() < 1e-13 && (p[(1, 1)] + w * w).abs() < 1e-13);
        assert!(p[(0, 1)].abs() < 1e-14);
    }

    #[test]
    fn harmonic_perturbation_is_cosine() {
        let w = 2.0;
        let nat = NaturalLagrangian::parse(&[vec!["1"]], "0.5*w^2*x1^2", &[("w", w)]).unwrap();
        let s = IntegratorSettings::default().with_times((0..=20).map(|k| k as f64 * 0.25).collect());
        let traj = evolve_perturbation_natural(&nat, &[0.3], &[0.0], &[1.0], &[0.0], (0.0, 5.0), &s).unwrap();
        for (t, y) in traj.times.iter().zip(&traj.states) {
            assert!((y[0] - (w * t).cos()).abs() < 1e-8, "t={t}");
        }
    }

    #[test]
    fn inverted_generic_perturbation() {
        let mu = 1.0;
        let nat = NaturalLagrangian::parse(&[vec!["1"]], "-0.5*mu^2*x1^2", &[("mu", mu)]).unwrap();
        let (a, b) = (0.3, -0.8);
        let s = IntegratorSettings::default().with_times(vec![0.0, 1.0, 2.0, 3.0]);
        let traj =
            evolve_perturbation_natural(&nat, &[1.0], &[0.5], &[a + b], &[mu * (a - b)], (0.0, 3.0), &s).unwrap();
        for (t, y) in traj.times.iter().zip(&traj.states) {
            let exact = a * (mu * t).exp() + b * (-mu * t).exp();
            assert!((y[0] - exact).abs() < 1e-8 * exact.abs().max(1.0));
        }
        let zero =
            evolve_perturbation_natural(&nat, &[1.0], &[0.5], &[0.0], &[0.0], (0.0, 3.0), &s).unwrap();
        assert!(zero.states.iter().all(|y| y[0] == 0.0 && y[1] == 0.0));
    }
}
