//! Jacobi-Maupertuis translation of natural systems at fixed energy into
//! geodesics of `g_E = C |E - V| k`, and the comparison of stability notions
//! in the two pictures.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{BinOp, Expression, Func, Node};
use crate::flow::{
    hermite, integrate, integrate_partial, integrate_rhs, Direction, Event, EventRecord, IntegratorSettings,
    Trajectory,
};
use crate::geometry::{christoffel, conformal_ricci, riemann, GeodesicSpray, MetricField, Signature};
use crate::kcc::{classify_local_stability, LocalVerdict, LOCAL_TOLERANCE};
use crate::lagrangian::{evolve_perturbation_natural, NaturalLagrangian};
use crate::lyapunov::{
    classify_global_stability, lyapunov_exponent, lyapunov_spectrum, GlobalStability, LyapunovSettings,
    SeminormFamily, SeminormKind,
};
use crate::numeric::{eigenvalues, seed_axis, weighted_gram_schmidt, ComplexEigenSet, Matrix};

/// `|E - V|` at or below this is on the boundary for pointwise quantities.
pub const BOUNDARY_TOLERANCE: f64 = 1e-10;
/// Relative width of the band that terminates geodesic integration.
pub const BOUNDARY_BAND: f64 = 1e-8;
/// Gap below which an integrator failure is attributed to the boundary.
const BOUNDARY_FAILURE_BAND: f64 = 1e-4;
/// Gap levels at which curvature is sampled on the approach to the boundary.
pub const RICCI_LEVELS: [f64; 3] = [1e-1, 1e-2, 1e-3];

const GAUSS_NODES: [f64; 5] = [
    0.0,
    -0.538_469_310_105_683_1,
    0.538_469_310_105_683_1,
    -0.906_179_845_938_664,
    0.906_179_845_938_664,
];
const GAUSS_WEIGHTS: [f64; 5] = [
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
    0.236_926_885_056_189_1,
];

/// A natural system at fixed energy together with its Jacobi metric.
#[derive(Clone, Debug)]
pub struct JacobiTranslation {
    source: NaturalLagrangian,
    energy: f64,
    constant: f64,
    gap: Expression,
    sigma2: Expression,
    metric: MetricField,
}

impl JacobiTranslation {
    pub fn new(source: NaturalLagrangian, energy: f64, constant: f64) -> Result<Self> {
        if !energy.is_finite() {
            return Err(Error::InvalidSettings("energy must be finite".into()));
        }
        if !(constant > 0.0 && constant.is_finite()) {
            return Err(Error::InvalidSettings("the metric constant C must be positive".into()));
        }
        let symbols = source.kinetic().symbols().clone();
        let gap = Node::binary(BinOp::Sub, Node::constant(energy), source.potential().root().clone());
        let sigma2 = Node::binary(BinOp::Mul, Node::constant(constant), Node::call(Func::Abs, gap.clone()));
        let gap = Expression::from_node(gap, &symbols);
        let sigma2 = Expression::from_node(sigma2, &symbols);
        let metric = source.kinetic().rescale(&sigma2)?;
        Ok(JacobiTranslation {
            source,
            energy,
            constant,
            gap,
            sigma2,
            metric,
        })
    }

    pub fn source(&self) -> &NaturalLagrangian {
        &self.source
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    pub fn metric(&self) -> &MetricField {
        &self.metric
    }

    /// `sigma^2 = C |E - V|`.
    pub fn conformal_factor(&self) -> &Expression {
        &self.sigma2
    }

    /// `E - V(x)`.
    pub fn gap(&self, x: &[f64]) -> Result<f64> {
        Ok(self.gap.eval(x)?)
    }

    /// Gap at which geodesic integration stops.
    pub fn boundary_band(&self) -> f64 {
        BOUNDARY_BAND * (1.0 + self.energy.abs())
    }

    fn off_boundary(&self, x: &[f64]) -> Result<f64> {
        let b = self.gap(x)?;
        if !(b.abs() > BOUNDARY_TOLERANCE) {
            return Err(Error::BoundaryPoint {
                point: x.to_vec(),
                gap: b,
            });
        }
        Ok(b)
    }

    /// `g_E(x)`.
    pub fn metric_at(&self, x: &[f64]) -> Result<Matrix<f64>> {
        self.off_boundary(x)?;
        self.metric.matrix(x)
    }

    /// `dt/dtau = 1 / (sqrt(2C) |E - V|)`.
    pub fn time_rate(&self, x: &[f64]) -> Result<f64> {
        let b = self.off_boundary(x)?;
        Ok(1.0 / ((2.0 * self.constant).sqrt() * b.abs()))
    }

    pub fn spray(&self) -> GeodesicSpray {
        GeodesicSpray::new(self.metric.clone())
    }

    /// Terminal events for leaving the interior: the gap entering the band or
    /// changing sign within one step.
    pub fn boundary_events(&self) -> [Event; 2] {
        let (gap, band) = (self.gap.clone(), self.boundary_band());
        let n = self.metric.dim();
        let g2 = gap.clone();
        [
            Event::new("boundary", Direction::Decreasing, true, move |_, y| {
                gap.eval(&y[..n]).map_or(f64::NAN, |b: f64| b.abs() - band)
            }),
            Event::new("boundary", Direction::Either, true, move |_, y| {
                g2.eval(&y[..n]).unwrap_or(f64::NAN)
            }),
        ]
    }

    fn check_energy(&self, x0: &[f64], u0: &[f64]) -> Result<()> {
        let e = self.source.energy(x0, u0)?;
        if (e - self.energy).abs() > 1e-8 * (1.0 + self.energy.abs()) {
            return Err(Error::EnergyMismatch {
                requested: self.energy,
                actual: e,
            });
        }
        Ok(())
    }

    /// True for a rest point of the source system with `E = V`.
    pub fn is_fixed_point(&self, x0: &[f64], u0: &[f64]) -> Result<bool> {
        if u0.iter().any(|&v| v != 0.0) {
            return Ok(false);
        }
        let pot = self.source.potential();
        let grad = (0..x0.len())
            .map(|a| Ok(pot.eval(&seed_axis(x0, a))?.eps))
            .collect::<Result<Vec<f64>>>()?;
        Ok(grad.iter().all(|g| g.abs() <= 1e-12) && self.gap(x0)?.abs() <= BOUNDARY_TOLERANCE)
    }

    /// Affine initial data `(x0, dx/dtau)` for Lagrangian data `(x0, u0)`.
    pub fn geodesic_initial(&self, x0: &[f64], u0: &[f64]) -> Result<Vec<f64>> {
        let n = self.metric.dim();
        if x0.len() != n || u0.len() != n {
            return Err(Error::DimensionMismatch(format!("expected x and u with {n} entries")));
        }
        if self.is_fixed_point(x0, u0)? {
            return Err(Error::FixedPointUntranslatable);
        }
        self.check_energy(x0, u0)?;
        let r = self.time_rate(x0)?;
        Ok(x0.iter().copied().chain(u0.iter().map(|v| v * r)).collect())
    }

    /// Integrates the geodesic through `y0 = (x, dx/dtau)` up to `tau_end`
    /// or the boundary, whichever comes first.
    pub fn integrate_geodesic(&self, y0: &[f64], tau_end: f64, settings: &IntegratorSettings) -> Result<GeodesicRun> {
        let n = self.metric.dim();
        let mut s = settings.clone();
        s.events.extend(self.boundary_events());
        let (mut traj, err) = integrate_partial(&self.spray(), y0, (0.0, tau_end), &s);
        traj.parameter = "tau".into();
        let mut boundary = traj.events.iter().find(|e| e.kind == "boundary").cloned();
        if let Some(e) = err {
            let stopped = match &e {
                Error::Evaluation { t, state, .. } if state.len() >= n => Some((*t, state.clone())),
                _ => None,
            };
            match stopped {
                Some((t, state))
                    if self.gap(&state[..n]).map_or(true, |b| b.abs() <= BOUNDARY_FAILURE_BAND * (1.0 + self.energy.abs())) =>
                {
                    if traj.times.last().is_none_or(|&l| t > l) && state.len() == 2 * n {
                        traj.push(t, state.clone());
                    }
                    let rec = EventRecord {
                        kind: "boundary".into(),
                        t,
                        state,
                    };
                    traj.events.push(rec.clone());
                    boundary = Some(rec);
                }
                _ => return Err(e),
            }
        }
        Ok(GeodesicRun {
            trajectory: traj,
            boundary,
        })
    }
}

#[derive(Clone, Debug)]
pub struct GeodesicRun {
    pub trajectory: Trajectory,
    pub boundary: Option<EventRecord>,
}

/// `g_E` at `x`.
pub fn jacobi_metric(nat: &NaturalLagrangian, energy: f64, constant: f64, x: &[f64]) -> Result<Matrix<f64>> {
    JacobiTranslation::new(nat.clone(), energy, constant)?.metric_at(x)
}

/// `dt/dtau` at `x`.
pub fn time_reparametrization(nat: &NaturalLagrangian, energy: f64, constant: f64, x: &[f64]) -> Result<f64> {
    JacobiTranslation::new(nat.clone(), energy, constant)?.time_rate(x)
}

/// Affinely parametrized geodesics of `metric` as a flow on `(x, dx/dtau)`.
pub fn geodesic_flow(metric: &MetricField) -> GeodesicSpray {
    GeodesicSpray::new(metric.clone())
}

/// Reparametrizes a trajectory on `(x, dx/ds)` by `r = ds'/ds` evaluated on
/// the positions. Integrals use 5-point Gauss-Legendre on the cubic Hermite
/// interpolant of each interval. Stops with a `boundary` event where `rate`
/// reports a boundary point.
fn reparametrize<R>(traj: &Trajectory, n: usize, parameter: &str, rate: R) -> Result<Trajectory>
where
    R: Fn(&[f64]) -> Result<f64>,
{
    if traj.states.iter().any(|s| s.len() != 2 * n) {
        return Err(Error::DimensionMismatch(format!("states must be (x, dx/ds) with {} entries", 2 * n)));
    }
    let mut out = Trajectory::new(parameter);
    let Some(first) = traj.states.first() else {
        return Ok(out);
    };
    let boundary = |out: &mut Trajectory, s: f64, state: &[f64]| {
        out.events.push(EventRecord {
            kind: "boundary".into(),
            t: s,
            state: state.to_vec(),
        });
    };
    let rescaled = |state: &[f64], r: f64| -> Vec<f64> {
        state[..n].iter().copied().chain(state[n..].iter().map(|v| v / r)).collect()
    };
    let r0 = match rate(&first[..n]) {
        Ok(r) => r,
        Err(Error::BoundaryPoint { .. }) => {
            boundary(&mut out, 0.0, first);
            return Ok(out);
        }
        Err(e) => return Err(e),
    };
    out.push(0.0, rescaled(first, r0));
    let mut s = 0.0;
    // new parameter at the old parameter `at` inside interval k, or None on the boundary
    let partial = |k: usize, at: f64| -> Result<Option<f64>> {
        let (t0, t1) = (traj.times[k], traj.times[k + 1]);
        let (x0, v0) = traj.states[k].split_at(n);
        let (x1, v1) = traj.states[k + 1].split_at(n);
        integrate_rate(t0, at, &|t| rate(&hermite(t0, x0, v0, t1, x1, v1, t)))
    };
    let mut stopped = false;
    for k in 0..traj.len() - 1 {
        let next = traj.states[k + 1].as_slice();
        let (Some(ds), Ok(r)) = (partial(k, traj.times[k + 1])?, rate(&next[..n])) else {
            boundary(&mut out, s, traj.states[k].as_slice());
            stopped = true;
            break;
        };
        s += ds;
        out.push(s, rescaled(next, r));
    }
    for e in &traj.events {
        let k = traj.segment(e.t);
        if stopped && e.t > *traj.times.get(out.len()).unwrap_or(&f64::INFINITY) {
            continue;
        }
        if e.t <= traj.times[0] {
            out.events.push(EventRecord {
                kind: e.kind.clone(),
                t: 0.0,
                state: e.state.clone(),
            });
            continue;
        }
        if k + 1 >= traj.len() || k + 1 > out.len() {
            continue;
        }
        if let Some(ds) = partial(k, e.t.min(traj.times[k + 1]))? {
            out.events.push(EventRecord {
                kind: e.kind.clone(),
                t: out.times[k] + ds,
                state: e.state.clone(),
            });
        }
    }
    Ok(out)
}

fn gauss<F>(a: f64, b: f64, f: &F) -> Result<Option<f64>>
where
    F: Fn(f64) -> Result<f64>,
{
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    let mut acc = 0.0;
    for (node, w) in GAUSS_NODES.iter().zip(GAUSS_WEIGHTS) {
        match f(mid + half * node) {
            Ok(r) => acc += w * r,
            Err(Error::BoundaryPoint { .. }) => return Ok(None),
            Err(e) => return Err(e),
        }
    }
    Ok(Some(acc * half))
}

/// Adaptive Gauss-Legendre quadrature of `f` over `[a, b]`; `None` when
/// the integrand reaches the boundary.
fn integrate_rate<F>(a: f64, b: f64, f: &F) -> Result<Option<f64>>
where
    F: Fn(f64) -> Result<f64>,
{
    fn refine<F: Fn(f64) -> Result<f64>>(a: f64, b: f64, whole: f64, f: &F, depth: u32) -> Result<Option<f64>> {
        let m = 0.5 * (a + b);
        let (Some(l), Some(r)) = (gauss(a, m, f)?, gauss(m, b, f)?) else {
            return Ok(None);
        };
        if depth == 0 || (l + r - whole).abs() <= 1e-13 * (l + r).abs() + 1e-15 * (b - a) {
            return Ok(Some(l + r));
        }
        match (refine(a, m, l, f, depth - 1)?, refine(m, b, r, f, depth - 1)?) {
            (Some(l), Some(r)) => Ok(Some(l + r)),
            _ => Ok(None),
        }
    }
    match gauss(a, b, f)? {
        Some(whole) => refine(a, b, whole, f, 10),
        None => Ok(None),
    }
}

/// Geodesic `(x, dx/dtau)` samples to Lagrangian time `(x, dx/dt)`, with
/// `t = 0` at the first sample.
pub fn translate_trajectory(tr: &JacobiTranslation, geodesic: &Trajectory) -> Result<Trajectory> {
    reparametrize(geodesic, tr.metric.dim(), "t", |x| tr.time_rate(x))
}

/// Lagrangian `(x, dx/dt)` samples to affine `(x, dx/dtau)`, with `tau = 0`
/// at the first sample.
pub fn translate_to_affine(tr: &JacobiTranslation, solution: &Trajectory) -> Result<Trajectory> {
    reparametrize(solution, tr.metric.dim(), "tau", |x| tr.time_rate(x).map(|r| 1.0 / r))
}

/// Sup-norm configuration error of the round trip from a Lagrangian
/// solution through the affine geodesic back to Lagrangian time.
#[derive(Clone, Debug, Serialize)]
pub struct RoundTrip {
    pub sup_error: f64,
    pub energy_drift: f64,
    /// End of the interval on which both pictures exist.
    pub compared_until: f64,
}

pub fn round_trip(
    tr: &JacobiTranslation,
    x0: &[f64],
    u0: &[f64],
    t_end: f64,
    samples: usize,
    settings: &IntegratorSettings,
) -> Result<RoundTrip> {
    let n = tr.metric.dim();
    let grid = |end: f64, m: usize| -> Vec<f64> { (0..=m).map(|k| end * k as f64 / m as f64).collect() };
    let y0: Vec<f64> = x0.iter().chain(u0).copied().collect();
    let geo0 = tr.geodesic_initial(x0, u0)?;
    let mut el_settings = settings.clone();
    el_settings.sampling = crate::flow::Sampling::Times(grid(t_end, samples));
    let el = integrate(&tr.source.spray(), &y0, (0.0, t_end), &el_settings)?;
    let mut drift = 0.0f64;
    for s in &el.states {
        drift = drift.max((tr.source.energy(&s[..n], &s[n..])? - tr.energy).abs());
    }
    let affine = translate_to_affine(tr, &el)?;
    let tau_end = affine.last_time();
    let mut geo_settings = settings.clone();
    geo_settings.sampling = crate::flow::Sampling::Steps;
    let run = tr.integrate_geodesic(&geo0, tau_end, &geo_settings)?;
    let back = translate_trajectory(tr, &run.trajectory)?;
    if back.len() < 2 {
        return Err(Error::BoundaryPoint {
            point: x0.to_vec(),
            gap: tr.gap(x0)?,
        });
    }
    let until = back.last_time();
    let mut sup = 0.0f64;
    for (t, s) in el.times.iter().zip(&el.states) {
        if *t > until + 1e-9 * (1.0 + until) {
            break;
        }
        let k = back.segment(*t);
        let (a, b) = (&back.states[k], &back.states[k + 1]);
        let x = hermite(back.times[k], &a[..n], &a[n..], back.times[k + 1], &b[..n], &b[n..], *t);
        for i in 0..n {
            sup = sup.max((x[i] - s[i]).abs());
        }
    }
    Ok(RoundTrip {
        sup_error: sup,
        energy_drift: drift,
        compared_until: until.min(t_end),
    })
}

/// Jacobi field along a geodesic with states `(x, dx/dtau)`. Result states
/// are `(xi, dxi/dtau)` sampled at the geodesic's parameter values.
pub fn jacobi_deviation(
    metric: &MetricField,
    geodesic: &Trajectory,
    xi0: &[f64],
    xi_dot0: &[f64],
    settings: &IntegratorSettings,
) -> Result<Trajectory> {
    let n = metric.dim();
    let (Some(&t0), Some(first)) = (geodesic.times.first(), geodesic.states.first()) else {
        return Err(Error::InvalidSettings("empty geodesic".into()));
    };
    if first.len() != 2 * n {
        return Err(Error::DimensionMismatch(format!("geodesic states need {} entries", 2 * n)));
    }
    let free = NaturalLagrangian::new(metric.clone(), Expression::constant(0.0, metric.symbols()))?;
    let s = settings.clone().with_times(geodesic.times.clone());
    let mut out = evolve_perturbation_natural(
        &free,
        &first[..n],
        &first[n..],
        xi0,
        xi_dot0,
        (t0, geodesic.last_time()),
        &s,
    )?;
    out.parameter = geodesic.parameter.clone();
    Ok(out)
}

/// Orthonormal frame at a point whose first vector is `v / |v|`.
pub fn adapted_frame(g: &Matrix<f64>, v: &[f64]) -> Result<Vec<Vec<f64>>> {
    let n = v.len();
    if v.iter().all(|&c| c == 0.0) {
        return Err(Error::DegenerateStart);
    }
    let drop = (0..n).max_by(|&a, &b| v[a].abs().total_cmp(&v[b].abs())).unwrap_or(0);
    let mut candidates = vec![v.to_vec()];
    for i in (0..n).filter(|&i| i != drop) {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        candidates.push(e);
    }
    Ok(weighted_gram_schmidt(&candidates, g)?.0)
}

/// Jacobi operator `R^a_{0b0}` in an orthonormal frame.
fn frame_operator(metric: &MetricField, x: &[f64], v: &[f64], frame: &[Vec<f64>]) -> Result<Matrix<f64>> {
    let n = metric.dim();
    let g = metric.matrix(x)?;
    let speed = g.bilinear(v, v).abs().sqrt();
    let k = riemann(metric, x)?.jacobi_operator(v);
    let ke: Vec<Vec<f64>> = frame.iter().map(|e| k.mul_vec(e)).collect();
    Ok(Matrix::from_fn(n, n, |a, b| g.bilinear(&frame[a], &ke[b]) / (speed * speed)))
}

/// Right-hand side of geodesic + parallel frame + reduced Jacobi vectors.
fn split_rhs<'a>(metric: &'a MetricField, m: usize) -> impl Fn(f64, &[f64]) -> Result<Vec<f64>> + 'a {
    let n = metric.dim();
    move |_, y| {
        let (x, rest) = y.split_at(n);
        let (v, rest) = rest.split_at(n);
        let (fr, q) = rest.split_at(n * n);
        let gamma = christoffel(metric, x)?;
        let mut out = Vec::with_capacity(y.len());
        out.extend_from_slice(v);
        out.extend(gamma.contract(v, v).into_iter().map(|a| -a));
        let mv = gamma.contract_first(v);
        for e in fr.chunks(n) {
            out.extend(mv.mul_vec(e).into_iter().map(|c| -c));
        }
        if m > 0 {
            let frame: Vec<Vec<f64>> = fr.chunks(n).map(<[f64]>::to_vec).collect();
            let k = frame_operator(metric, x, v, &frame)?;
            for w in q.chunks(2 * n) {
                let (qa, pa) = w.split_at(n);
                out.extend_from_slice(pa);
                out.extend(k.mul_vec(qa).into_iter().map(|c| -c));
            }
        }
        Ok(out)
    }
}

/// Geodesic with a parallel orthonormal frame `e_0 = dx/dtau / |dx/dtau|`
/// and the Jacobi operator `R^a_{0b0}` expressed in that frame.
#[derive(Clone, Debug, Serialize)]
pub struct FrameSplit {
    /// States `(x, dx/dtau)`; `frames` holds `e_0 .. e_{n-1}`.
    pub trajectory: Trajectory,
    /// Reduced operators: frame components satisfy `q'' = -K q` with row and
    /// column zero vanishing.
    pub reduced: Vec<Matrix<f64>>,
}

pub fn parallel_frame_split(
    metric: &MetricField,
    geodesic: &Trajectory,
    settings: &IntegratorSettings,
) -> Result<FrameSplit> {
    let n = metric.dim();
    let (Some(&t0), Some(first)) = (geodesic.times.first(), geodesic.states.first()) else {
        return Err(Error::InvalidSettings("empty geodesic".into()));
    };
    if first.len() != 2 * n {
        return Err(Error::DimensionMismatch(format!("geodesic states need {} entries", 2 * n)));
    }
    let (x0, v0) = first.split_at(n);
    let frame0 = adapted_frame(&metric.matrix(x0)?, v0)?;
    let y0: Vec<f64> = first.iter().copied().chain(frame0.iter().flatten().copied()).collect();
    let s = settings.clone().with_times(geodesic.times.clone());
    let (joint, err) = integrate_rhs(split_rhs(metric, 0), &y0, (t0, geodesic.last_time()), &s);
    if let Some(e) = err {
        return Err(e);
    }
    let mut traj = Trajectory::new(&geodesic.parameter);
    let mut frames = Vec::with_capacity(joint.len());
    let mut reduced = Vec::with_capacity(joint.len());
    for (t, y) in joint.times.iter().zip(&joint.states) {
        let frame: Vec<Vec<f64>> = y[2 * n..].chunks(n).map(<[f64]>::to_vec).collect();
        reduced.push(frame_operator(metric, &y[..n], &y[n..2 * n], &frame)?);
        traj.push(*t, y[..2 * n].to_vec());
        frames.push(frame);
    }
    traj.frames = Some(frames);
    Ok(FrameSplit {
        trajectory: traj,
        reduced,
    })
}

/// Exponents of the reduced Jacobi system in a parallel frame, ordered
/// so that the two modes along the geodesic come first in the QR sweep.
#[derive(Clone, Debug, Serialize)]
pub struct SplitSpectrum {
    /// Shift along the geodesic and shift of the initial speed.
    pub shift: Vec<f64>,
    /// The remaining `2n - 2` exponents, descending.
    pub transverse: Vec<f64>,
    /// All `2n` exponents, descending.
    pub exponents: Vec<f64>,
    pub spread: Vec<f64>,
    pub renormalizations: usize,
}

/// Lyapunov spectrum of the Jacobi equation along the geodesic through
/// `(x0, v0)`, measured by the frame components of `xi` and `D xi`.
pub fn split_spectrum(metric: &MetricField, x0: &[f64], v0: &[f64], settings: &LyapunovSettings) -> Result<SplitSpectrum> {
    let n = metric.dim();
    let m = 2 * n;
    if !(settings.horizon > 0.0 && settings.interval > 0.0 && settings.interval <= settings.horizon) {
        return Err(Error::InvalidSettings("need 0 < interval <= horizon".into()));
    }
    let frame0 = adapted_frame(&metric.matrix(x0)?, v0)?;
    // basis order: q0, p0, q1, p1, ...
    let basis: Vec<Vec<f64>> = (0..m)
        .map(|k| {
            let mut w = vec![0.0; m];
            w[if k % 2 == 0 { k / 2 } else { n + k / 2 }] = 1.0;
            w
        })
        .collect();
    let mut y: Vec<f64> = x0
        .iter()
        .chain(v0)
        .copied()
        .chain(frame0.iter().flatten().copied())
        .chain(basis.iter().flatten().copied())
        .collect();
    let base = 2 * n + n * n;
    let rhs = split_rhs(metric, m);
    let identity = Matrix::identity(m);
    let mut sums = vec![0.0; m];
    let mut series: Vec<(f64, Vec<f64>)> = Vec::new();
    let chunks = (settings.horizon / settings.interval - 1e-9).ceil().max(1.0) as usize;
    let mut inner = settings.integrator.clone();
    inner.sampling = crate::flow::Sampling::Times(Vec::new());
    for c in 0..chunks {
        let (a, b) = (c as f64 * settings.interval, ((c + 1) as f64 * settings.interval).min(settings.horizon));
        let mut s = inner.clone();
        s.sampling = crate::flow::Sampling::Times(vec![b]);
        let (piece, err) = integrate_rhs(&rhs, &y, (a, b), &s);
        if let Some(e) = err {
            return Err(e);
        }
        y = piece.last_state().to_vec();
        let vecs: Vec<Vec<f64>> = y[base..].chunks(m).map(<[f64]>::to_vec).collect();
        let (q, logs) = weighted_gram_schmidt(&vecs, &identity)?;
        for k in 0..m {
            sums[k] += logs[k];
        }
        y.truncate(base);
        y.extend(q.into_iter().flatten());
        series.push((b, sums.iter().map(|v| v / b).collect()));
    }
    let last = series.last().map(|p| p.1.clone()).unwrap_or_default();
    let spread: Vec<f64> = (0..m)
        .map(|k| {
            let tail = series.iter().filter(|(t, _)| *t >= 0.5 * settings.horizon).map(|(_, v)| v[k]);
            let (lo, hi) = tail.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(v), h.max(v)));
            if hi >= lo {
                hi - lo
            } else {
                0.0
            }
        })
        .collect();
    let mut transverse = last[2..].to_vec();
    transverse.sort_by(|a, b| b.total_cmp(a));
    let mut exponents = last.clone();
    exponents.sort_by(|a, b| b.total_cmp(a));
    Ok(SplitSpectrum {
        shift: last[..2].to_vec(),
        transverse,
        exponents,
        spread,
        renormalizations: series.len(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct RicciSample {
    pub gap: f64,
    pub point: Vec<f64>,
    pub ricci: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundaryDiagnostics {
    pub fixed_point: bool,
    pub boundary_hit: bool,
    pub tau_hit: Option<f64>,
    pub hit_point: Option<Vec<f64>>,
    /// Smallest `|E - V|` seen along the geodesic.
    pub min_gap: f64,
    /// Ricci scalar of `g_E` where `|E - V|` first reaches each level.
    pub ricci_samples: Vec<RicciSample>,
}

/// Integrates the geodesic for Lagrangian data `(x0, u0)` and reports
/// whether and where it meets the boundary `V = E`.
pub fn boundary_diagnostics(
    tr: &JacobiTranslation,
    x0: &[f64],
    u0: &[f64],
    tau_end: f64,
    settings: &IntegratorSettings,
) -> Result<BoundaryDiagnostics> {
    let n = tr.metric.dim();
    let mut diag = BoundaryDiagnostics {
        fixed_point: false,
        boundary_hit: false,
        tau_hit: None,
        hit_point: None,
        min_gap: tr.gap(x0)?.abs(),
        ricci_samples: Vec::new(),
    };
    let y0 = match tr.geodesic_initial(x0, u0) {
        Ok(y) => y,
        Err(Error::FixedPointUntranslatable) => {
            diag.fixed_point = true;
            return Ok(diag);
        }
        Err(Error::BoundaryPoint { .. }) => {
            diag.boundary_hit = true;
            diag.tau_hit = Some(0.0);
            diag.hit_point = Some(x0.to_vec());
            return Ok(diag);
        }
        Err(e) => return Err(e),
    };
    let run = tr.integrate_geodesic(&y0, tau_end, settings)?;
    let traj = &run.trajectory;
    if let Some(b) = &run.boundary {
        diag.boundary_hit = true;
        diag.tau_hit = Some(b.t);
        diag.hit_point = Some(b.state[..n].to_vec());
    }
    let gaps: Vec<f64> = traj
        .states
        .iter()
        .map(|s| tr.gap(&s[..n]).map(f64::abs))
        .collect::<Result<_>>()?;
    diag.min_gap = gaps.iter().copied().fold(diag.min_gap, f64::min);
    for level in RICCI_LEVELS {
        let Some(k) = (0..gaps.len().saturating_sub(1)).find(|&k| gaps[k] > level && gaps[k + 1] <= level) else {
            continue;
        };
        let (a, b) = (&traj.states[k], &traj.states[k + 1]);
        let (t0, t1) = (traj.times[k], traj.times[k + 1]);
        let at = |t: f64| hermite(t0, &a[..n], &a[n..], t1, &b[..n], &b[n..], t);
        let (mut lo, mut hi) = (t0, t1);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if tr.gap(&at(mid))?.abs() > level {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let x = at(0.5 * (lo + hi));
        diag.ricci_samples.push(RicciSample {
            gap: tr.gap(&x)?.abs(),
            ricci: conformal_ricci(tr.source.kinetic(), &tr.sigma2, &x)?,
            point: x,
        });
    }
    Ok(diag)
}

#[derive(Clone, Debug)]
pub struct CompareSettings {
    pub constant: f64,
    /// Horizon and renormalization interval, used in `t` for the intrinsic
    /// picture and in `tau` for the geodesic picture.
    pub lyapunov: LyapunovSettings,
    pub global_tolerance: f64,
    pub local_tolerance: f64,
    /// Lagrangian time span of the round-trip check.
    pub round_trip_horizon: f64,
}

impl Default for CompareSettings {
    fn default() -> Self {
        CompareSettings {
            constant: 2.0,
            lyapunov: LyapunovSettings::default(),
            global_tolerance: 0.05,
            local_tolerance: LOCAL_TOLERANCE,
            round_trip_horizon: 5.0,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct IntrinsicSection {
    /// Spectrum under the Lagrange metric on both blocks, descending.
    pub exponents: Vec<f64>,
    /// Single generic vector under the Lagrange metric on positions.
    pub leading_exponent: f64,
    pub global_verdict: GlobalStability,
    pub local: LocalVerdict,
    pub initial_deviation_tensor: Matrix<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct GeodesicSection {
    /// Absent when the geodesic ends on the boundary.
    pub exponents: Option<Vec<f64>>,
    pub shift_exponents: Option<Vec<f64>>,
    pub global_verdict: Option<GlobalStability>,
    /// Spectrum of `-R(.,v)v` along the geodesic.
    pub local: Option<LocalVerdict>,
    /// Curvature operator vanishes at every sample.
    pub flat: bool,
    pub boundary: BoundaryDiagnostics,
}

#[derive(Clone, Debug, Serialize)]
pub struct ComparisonReport {
    pub dimension: usize,
    pub energy: f64,
    pub constant: f64,
    pub intrinsic: IntrinsicSection,
    pub geodesic: Option<GeodesicSection>,
    pub flags: Vec<String>,
    /// Perturbation directions the geodesic picture cannot represent.
    pub energy_excluded: usize,
    /// Standard basis of the perturbation space projected onto `dE = 0`.
    pub projected_frame: Vec<Vec<f64>>,
    pub round_trip: Option<RoundTrip>,
}

fn generic_vector(m: usize) -> Vec<f64> {
    (0..m).map(|i| 1.0 + 0.31 * i as f64 + 0.05 * (i * i) as f64).collect()
}

/// Runs the intrinsic and the geodesic analysis of the solution through
/// `(x0, u0)` and collects the limitations of the translation.
pub fn compare_stability(
    nat: &NaturalLagrangian,
    energy: f64,
    x0: &[f64],
    u0: &[f64],
    settings: &CompareSettings,
) -> Result<ComparisonReport> {
    let n = nat.dim();
    let tr = JacobiTranslation::new(nat.clone(), energy, settings.constant)?;
    tr.check_energy(x0, u0)?;
    let ls = &settings.lyapunov;
    let p0: Vec<f64> = x0.iter().chain(u0).copied().collect();
    let mut flags = Vec::new();

    // intrinsic picture
    let spray = nat.spray();
    let lift = SeminormFamily::new(SeminormKind::LagrangeLift(nat.lagrangian().clone()));
    let identity: Vec<Vec<f64>> = (0..2 * n)
        .map(|k| (0..2 * n).map(|j| f64::from(u8::from(j == k))).collect())
        .collect();
    let spectrum = lyapunov_spectrum(&spray, &p0, &identity, &lift, ls)?;
    let positions = SeminormFamily::new(SeminormKind::LagrangeMetric(nat.lagrangian().clone()));
    let leading = lyapunov_exponent(&spray, &p0, &generic_vector(2 * n), &positions, ls)?;
    let samples = (ls.horizon / ls.interval).round().max(1.0) as usize;
    let times: Vec<f64> = (0..=samples).map(|k| ls.horizon * k as f64 / samples as f64).collect();
    let el = integrate(&spray, &p0, (0.0, ls.horizon), &ls.integrator.clone().with_times(times.clone()))?;
    let track = el
        .states
        .iter()
        .map(|s| eigenvalues(&nat.perturbation_operator(&s[..n], &s[n..])?))
        .collect::<Result<Vec<ComplexEigenSet>>>()?;
    let intrinsic = IntrinsicSection {
        global_verdict: classify_global_stability(&spectrum.exponents, settings.global_tolerance),
        exponents: spectrum.exponents,
        leading_exponent: leading.value,
        local: classify_local_stability(&track, settings.local_tolerance)?,
        initial_deviation_tensor: nat.perturbation_operator(x0, u0)?,
    };

    // energy constraint on perturbations
    let de = energy_differential(nat, x0, u0)?;
    let norm2: f64 = de.iter().map(|v| v * v).sum();
    let (energy_excluded, projected_frame) = if norm2 > 0.0 {
        let proj = identity
            .iter()
            .map(|e| {
                let c = e.iter().zip(&de).map(|(a, b)| a * b).sum::<f64>() / norm2;
                e.iter().zip(&de).map(|(a, b)| a - c * b).collect()
            })
            .collect();
        (1, proj)
    } else {
        (0, identity.clone())
    };

    if n == 1 {
        flags.push("one-dimensional".to_string());
    }
    if nat.kinetic().signature() == Signature::Indefinite {
        flags.push("indefinite-kinetic-metric".to_string());
    }

    // geodesic picture
    let boundary = boundary_diagnostics(&tr, x0, u0, ls.horizon, &ls.integrator)?;
    let geodesic = if boundary.fixed_point {
        flags.push("fixed-point".to_string());
        None
    } else {
        if boundary.boundary_hit {
            flags.push("boundary-hit".to_string());
        }
        let y0 = tr.geodesic_initial(x0, u0)?;
        let run = tr.integrate_geodesic(&y0, ls.horizon, &ls.integrator.clone().with_times(times))?;
        let mut flat = true;
        let mut curvature = Vec::new();
        for s in &run.trajectory.states {
            let k = riemann(&tr.metric, &s[..n])?.jacobi_operator(&s[n..]);
            flat &= k.max_abs() <= 1e-12;
            curvature.push(eigenvalues(&k.scale(-1.0))?);
        }
        let local = if curvature.is_empty() {
            None
        } else {
            Some(classify_local_stability(&curvature, settings.local_tolerance)?)
        };
        let split = if boundary.boundary_hit {
            None
        } else {
            Some(split_spectrum(&tr.metric, &y0[..n], &y0[n..], ls)?)
        };
        Some(GeodesicSection {
            global_verdict: split
                .as_ref()
                .map(|s| classify_global_stability(&s.exponents, settings.global_tolerance)),
            shift_exponents: split.as_ref().map(|s| s.shift.clone()),
            exponents: split.map(|s| s.exponents),
            local,
            flat,
            boundary,
        })
    };

    if let Some(g) = &geodesic {
        let global_differs = g.global_verdict.is_some_and(|v| v != intrinsic.global_verdict);
        let local_differs = g.local.as_ref().is_some_and(|l| l.verdict != intrinsic.local.verdict);
        if global_differs || local_differs {
            flags.push("contradictory-verdicts".to_string());
        }
    }

    let round_trip = if geodesic.is_some() {
        let horizon = settings.round_trip_horizon.min(ls.horizon);
        match round_trip(&tr, x0, u0, horizon, 500, &ls.integrator) {
            Ok(r) => Some(r),
            Err(e) if matches!(e.root(), Error::BoundaryPoint { .. }) => None,
            Err(e) => return Err(e),
        }
    } else {
        None
    };

    Ok(ComparisonReport {
        dimension: n,
        energy,
        constant: settings.constant,
        intrinsic,
        geodesic,
        flags,
        energy_excluded,
        projected_frame,
        round_trip,
    })
}

/// `dE` at `(x, u)` as a covector on the `2n` perturbation components.
pub fn energy_differential(nat: &NaturalLagrangian, x: &[f64], u: &[f64]) -> Result<Vec<f64>> {
    let n = nat.dim();
    let p: Vec<f64> = x.iter().chain(u).copied().collect();
    let energy = |q: &[crate::numeric::Dual<f64>]| -> Result<crate::numeric::Dual<f64>> {
        let (xd, ud) = q.split_at(n);
        let k = nat.kinetic().matrix(xd)?;
        let mut e = nat.potential().eval(xd)?;
        for a in 0..n {
            for b in 0..n {
                e += k[(a, b)] * ud[a] * ud[b] * 0.5;
            }
        }
        Ok(e)
    };
    (0..2 * n).map(|i| Ok(energy(&seed_axis(&p, i))?.eps)).collect()
}
