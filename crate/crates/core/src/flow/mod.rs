//! Vector flows, trajectory integration and the variational equation.

mod ode;

use std::sync::Arc;

pub use ode::{
    hermite, hermite_derivative, integrate_rhs, Direction, Event, EventFn, EventRecord,
    IntegratorSettings, Method, Sampling, Trajectory,
};

use crate::error::{Error, Result};
use crate::expr::{Expression, Node, SymbolTable};
use crate::numeric::{jacobian, seed, Dual, Matrix, Scalar};

/// A vector field `X` on a state space of dimension [`Flow::dim`], evaluable
/// at every scalar type so its derivatives come from dual numbers.
pub trait Flow: Sync {
    fn dim(&self) -> usize;

    /// Configuration dimension `n` when the flow is a semispray on a
    /// `2n`-dimensional phase space with state `(x, u)`.
    fn config_dim(&self) -> Option<usize> {
        None
    }

    fn field<T: Scalar>(&self, state: &[T]) -> Result<Vec<T>>;
}

impl<F: Flow> Flow for &F {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn config_dim(&self) -> Option<usize> {
        (**self).config_dim()
    }
    fn field<T: Scalar>(&self, state: &[T]) -> Result<Vec<T>> {
        (**self).field(state)
    }
}

/// `dX^i/dx^j` at a state.
pub fn flow_jacobian<F: Flow>(flow: &F, state: &[f64]) -> Result<Matrix<f64>> {
    jacobian(|s: &[Dual<f64>]| flow.field(s), state)
}

/// A flow whose components are expressions over the state symbols.
#[derive(Clone, Debug)]
pub struct VectorFlowSystem {
    symbols: Arc<SymbolTable>,
    components: Vec<Expression>,
    config_dim: Option<usize>,
}

impl VectorFlowSystem {
    pub fn new(components: Vec<Expression>) -> Result<Self> {
        let Some(first) = components.first() else {
            return Err(Error::DimensionMismatch("a flow needs at least one component".into()));
        };
        let symbols = Arc::clone(first.symbols());
        if symbols.num_variables() != components.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} components over {} state variables",
                components.len(),
                symbols.num_variables()
            )));
        }
        if components.iter().any(|c| c.symbols() != &symbols) {
            return Err(Error::DimensionMismatch(
                "flow components use different symbol tables".into(),
            ));
        }
        Ok(VectorFlowSystem {
            symbols,
            components,
            config_dim: None,
        })
    }

    /// Parses component strings against `symbols`.
    pub fn parse<S: AsRef<str>>(symbols: &Arc<SymbolTable>, components: &[S]) -> Result<Self> {
        let exprs = components
            .iter()
            .map(|c| Expression::parse(c.as_ref(), symbols))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(exprs)
    }

    /// Tags the system as a semispray over configuration dimension `n`,
    /// checking that component `a` is the variable `n + a` for `a < n`.
    pub fn second_order(mut self, n: usize) -> Result<Self> {
        if 2 * n != self.components.len() {
            return Err(Error::DimensionMismatch(format!(
                "second-order tag needs 2n = {} components, have {}",
                2 * n,
                self.components.len()
            )));
        }
        for a in 0..n {
            if *self.components[a].root() != Node::Var(n + a) {
                return Err(Error::DimensionMismatch(format!(
                    "component {a} must be the velocity `{}`",
                    self.symbols.variables()[n + a]
                )));
            }
        }
        self.config_dim = Some(n);
        Ok(self)
    }

    pub fn symbols(&self) -> &Arc<SymbolTable> {
        &self.symbols
    }

    pub fn components(&self) -> &[Expression] {
        &self.components
    }
}

impl Flow for VectorFlowSystem {
    fn dim(&self) -> usize {
        self.components.len()
    }

    fn config_dim(&self) -> Option<usize> {
        self.config_dim
    }

    fn field<T: Scalar>(&self, state: &[T]) -> Result<Vec<T>> {
        if state.len() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "state has {} entries, flow dimension is {}",
                state.len(),
                self.dim()
            )));
        }
        self.components
            .iter()
            .map(|c| c.eval(state).map_err(Error::from))
            .collect()
    }
}

/// The semispray `(u, accel(x, u))` on `2n` phase variables.
pub fn lift_second_order(n: usize, accel: Vec<Expression>) -> Result<VectorFlowSystem> {
    if accel.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "expected {n} acceleration components, got {}",
            accel.len()
        )));
    }
    let symbols = match accel.first() {
        Some(a) => Arc::clone(a.symbols()),
        None => Arc::new(SymbolTable::phase(0)),
    };
    if symbols.num_variables() != 2 * n {
        return Err(Error::DimensionMismatch(format!(
            "accelerations must be written over 2n = {} phase variables, table has {}",
            2 * n,
            symbols.num_variables()
        )));
    }
    let mut components: Vec<Expression> = (0..n)
        .map(|a| Expression::from_node(Node::Var(n + a), &symbols))
        .collect();
    components.extend(accel);
    if n == 0 {
        return Ok(VectorFlowSystem {
            symbols,
            components,
            config_dim: Some(0),
        });
    }
    VectorFlowSystem::new(components)?.second_order(n)
}

fn autonomous<F: Flow>(flow: &F) -> impl Fn(f64, &[f64]) -> Result<Vec<f64>> + '_ {
    move |_, y| flow.field(y)
}

fn check_state<F: Flow>(flow: &F, x0: &[f64]) -> Result<()> {
    if x0.len() != flow.dim() {
        return Err(Error::DimensionMismatch(format!(
            "initial state has {} entries, flow dimension is {}",
            x0.len(),
            flow.dim()
        )));
    }
    Ok(())
}

/// Integrates `x' = X(x)`.
pub fn integrate<F: Flow>(
    flow: &F,
    x0: &[f64],
    tspan: (f64, f64),
    settings: &IntegratorSettings,
) -> Result<Trajectory> {
    match integrate_partial(flow, x0, tspan, settings) {
        (traj, None) => Ok(traj),
        (_, Some(e)) => Err(e),
    }
}

/// Like [`integrate`] but keeps the samples computed before a failure.
pub fn integrate_partial<F: Flow>(
    flow: &F,
    x0: &[f64],
    tspan: (f64, f64),
    settings: &IntegratorSettings,
) -> (Trajectory, Option<Error>) {
    if let Err(e) = check_state(flow, x0) {
        return (Trajectory::new("t"), Some(e));
    }
    integrate_rhs(autonomous(flow), x0, tspan, settings)
}

/// Right-hand side of the flow augmented by `m` tangent vectors, each
/// propagated by the Jacobian of `X` through a dual-number evaluation.
pub fn variational_rhs<F: Flow>(flow: &F, m: usize) -> impl Fn(f64, &[f64]) -> Result<Vec<f64>> + '_ {
    move |_, y| {
        let n = flow.dim();
        let x = &y[..n];
        let mut out = flow.field(x)?;
        for k in 0..m {
            let xi = &y[n * (k + 1)..n * (k + 2)];
            let d = flow.field(&seed(x, xi))?;
            out.extend(d.into_iter().map(|v| v.eps));
        }
        Ok(out)
    }
}

fn split(y: &[f64], n: usize, m: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let x = y[..n].to_vec();
    let frame = (0..m).map(|k| y[n * (k + 1)..n * (k + 2)].to_vec()).collect();
    (x, frame)
}

fn pack(x: &[f64], frame: &[Vec<f64>]) -> Vec<f64> {
    let mut y = x.to_vec();
    for v in frame {
        y.extend_from_slice(v);
    }
    y
}

pub type RenormalizeFn<'a> = dyn FnMut(f64, &[f64], &mut [Vec<f64>]) -> Result<()> + 'a;

/// Jointly integrates `x' = X(x)` and `xi' = DX(x) xi` for every vector of
/// `frame0`.
pub fn variational_integrate<F: Flow>(
    flow: &F,
    x0: &[f64],
    frame0: &[Vec<f64>],
    tspan: (f64, f64),
    settings: &IntegratorSettings,
) -> Result<Trajectory> {
    variational_integrate_with(flow, x0, frame0, tspan, settings, None)
}

/// [`variational_integrate`] with a callback run every `interval` time units
/// that may rescale or reorthonormalize the frame in place.
pub fn variational_integrate_with<F: Flow>(
    flow: &F,
    x0: &[f64],
    frame0: &[Vec<f64>],
    tspan: (f64, f64),
    settings: &IntegratorSettings,
    mut renormalize: Option<(f64, &mut RenormalizeFn<'_>)>,
) -> Result<Trajectory> {
    check_state(flow, x0)?;
    let n = flow.dim();
    let m = frame0.len();
    if frame0.iter().any(|v| v.len() != n) {
        return Err(Error::DimensionMismatch(format!(
            "perturbation vectors must have dimension {n}"
        )));
    }
    let rhs = variational_rhs(flow, m);
    let (t0, t1) = tspan;
    let interval = match &renormalize {
        Some((dt, _)) if !(*dt > 0.0) => {
            return Err(Error::InvalidSettings("renormalization interval must be positive".into()))
        }
        Some((dt, _)) => *dt,
        None => f64::INFINITY,
    };

    let mut out = Trajectory::new("t");
    let mut frames = Vec::new();
    let mut y = pack(x0, frame0);
    let mut start = t0;
    let mut chunk = 0usize;
    loop {
        let end = if interval.is_finite() {
            (t0 + (chunk + 1) as f64 * interval).min(t1)
        } else {
            t1
        };
        let end = if t1 - end < 1e-9 * interval.min(t1 - t0).max(1e-300) { t1 } else { end };
        let (piece, err) = integrate_rhs(&rhs, &y, (start, end), settings);
        for (t, s) in piece.times.iter().zip(&piece.states) {
            if out.times.last().is_some_and(|&last| *t <= last) {
                continue;
            }
            let (x, frame) = split(s, n, m);
            out.times.push(*t);
            out.states.push(x);
            frames.push(frame);
        }
        out.events.extend(piece.events);
        if let Some(e) = err {
            return Err(e);
        }
        let reached = piece.times.last().copied().unwrap_or(start);
        y = piece.states.last().cloned().unwrap_or(y);
        if reached < end {
            break; // terminal event
        }
        if let Some((_, callback)) = renormalize.as_mut() {
            let (x, mut frame) = split(&y, n, m);
            callback(end, &x, &mut frame)?;
            y = pack(&x, &frame);
            out.events.push(EventRecord {
                kind: "renormalization".into(),
                t: end,
                state: x,
            });
        }
        if end >= t1 {
            break;
        }
        start = end;
        chunk += 1;
    }
    out.frames = Some(frames);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn phase(n: usize) -> Arc<SymbolTable> {
        Arc::new(SymbolTable::phase(n))
    }

    fn inverted(mu: f64) -> VectorFlowSystem {
        let mut t = SymbolTable::phase(1);
        t.add_parameter("mu", mu).unwrap();
        let t = Arc::new(t);
        let accel = vec![Expression::parse("mu^2*x1", &t).unwrap()];
        lift_second_order(1, accel).unwrap()
    }

    #[test]
    fn exponential() {
        let t = Arc::new(SymbolTable::with_variables(&["x"]).unwrap());
        let f = VectorFlowSystem::parse(&t, &["x"]).unwrap();
        let traj = integrate(&f, &[1.0], (0.0, 1.0), &IntegratorSettings::default()).unwrap();
        assert!((traj.last_state()[0] - std::f64::consts::E).abs() < 1e-8);
    }

    #[test]
    fn zero_field_is_constant() {
        let t = Arc::new(SymbolTable::with_variables(&["x", "y"]).unwrap());
        let f = VectorFlowSystem::parse(&t, &["0", "0"]).unwrap();
        let traj = integrate(&f, &[0.3, -2.0], (0.0, 5.0), &IntegratorSettings::default()).unwrap();
        assert!(traj.states.iter().all(|s| s == &[0.3, -2.0]));
    }

    #[test]
    fn inverted_oscillator_grows() {
        let f = inverted(1.0);
        let traj = integrate(&f, &[1.0, 1.0], (0.0, 2.0), &IntegratorSettings::default()).unwrap();
        assert!((traj.last_state()[0] - 2f64.exp()).abs() < 1e-6);
    }

    #[test]
    fn second_order_tag_is_checked() {
        let t = phase(1);
        assert!(VectorFlowSystem::parse(&t, &["u1", "x1"]).unwrap().second_order(1).is_ok());
        assert!(VectorFlowSystem::parse(&t, &["2*u1", "x1"]).unwrap().second_order(1).is_err());
        assert!(lift_second_order(2, vec![Expression::parse("x1", &t).unwrap()]).is_err());
    }

    #[test]
    fn free_motion_is_straight() {
        let t = phase(2);
        let zero = || Expression::parse("0", &t).unwrap();
        let f = lift_second_order(2, vec![zero(), zero()]).unwrap();
        let traj = integrate(&f, &[1.0, 2.0, 0.5, -1.0], (0.0, 3.0), &IntegratorSettings::default()).unwrap();
        for (t, s) in traj.times.iter().zip(&traj.states) {
            assert!((s[0] - (1.0 + 0.5 * t)).abs() < 1e-12);
            assert!((s[1] - (2.0 - t)).abs() < 1e-12);
        }
    }

    #[test]
    fn variational_eigenvector() {
        let f = inverted(1.0);
        let traj =
            variational_integrate(&f, &[1.0, 1.0], &[vec![1.0, 1.0]], (0.0, 1.0), &IntegratorSettings::default())
                .unwrap();
        let xi = traj.frames.as_ref().unwrap().last().unwrap()[0].clone();
        let e = std::f64::consts::E;
        assert!((xi[0] - e).abs() < 1e-7 && (xi[1] - e).abs() < 1e-7, "{xi:?}");
    }

    #[test]
    fn zero_perturbation_stays_zero() {
        let f = inverted(1.0);
        let traj =
            variational_integrate(&f, &[0.2, 0.1], &[vec![0.0, 0.0]], (0.0, 3.0), &IntegratorSettings::default())
                .unwrap();
        assert!(traj.frames.unwrap().iter().all(|fr| fr[0] == vec![0.0, 0.0]));
    }

    #[test]
    fn renormalization_callback_runs_every_interval() {
        let f = inverted(1.0);
        let mut calls = Vec::new();
        let mut cb = |t: f64, _: &[f64], frame: &mut [Vec<f64>]| -> Result<()> {
            calls.push(t);
            let norm = frame[0].iter().map(|v| v * v).sum::<f64>().sqrt();
            frame[0].iter_mut().for_each(|v| *v /= norm);
            Ok(())
        };
        let traj = variational_integrate_with(
            &f,
            &[1.0, 1.0],
            &[vec![1.0, 0.0]],
            (0.0, 2.0),
            &IntegratorSettings::default(),
            Some((0.5, &mut cb)),
        )
        .unwrap();
        assert_eq!(calls, vec![0.5, 1.0, 1.5, 2.0]);
        assert_eq!(traj.events.iter().filter(|e| e.kind == "renormalization").count(), 4);
        assert!(traj.times.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn assembled_jacobian_has_identity_block() {
        let t = phase(2);
        let f = lift_second_order(
            2,
            vec![
                Expression::parse("-sin(x1)*u2", &t).unwrap(),
                Expression::parse("x1*x2 - u1^2", &t).unwrap(),
            ],
        )
        .unwrap();
        let j = flow_jacobian(&f, &[0.3, -0.2, 1.1, 0.7]).unwrap();
        for a in 0..2 {
            for b in 0..4 {
                let expect = if b == a + 2 { 1.0 } else { 0.0 };
                assert_eq!(j[(a, b)], expect);
            }
        }
    }
}
