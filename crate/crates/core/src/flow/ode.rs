//! Explicit Runge-Kutta integration with dense output and event location.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Method {
    /// Classical fourth-order Runge-Kutta with a fixed step.
    Rk4 { step: f64 },
    /// Dormand-Prince 5(4) with local error control.
    Rk45 { atol: f64, rtol: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub enum Sampling {
    /// Record every accepted step.
    Steps,
    /// Record the dense-output solution at these parameter values.
    Times(Vec<f64>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Increasing,
    Decreasing,
    Either,
}

pub type EventFn = Arc<dyn Fn(f64, &[f64]) -> f64 + Send + Sync>;

/// A scalar function whose sign changes mark events.
#[derive(Clone)]
pub struct Event {
    pub name: String,
    pub func: EventFn,
    pub direction: Direction,
    pub terminal: bool,
}

impl Event {
    pub fn new(
        name: impl Into<String>,
        direction: Direction,
        terminal: bool,
        func: impl Fn(f64, &[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Event {
            name: name.into(),
            func: Arc::new(func),
            direction,
            terminal,
        }
    }
}

impl fmt::Debug for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Event")
            .field("name", &self.name)
            .field("direction", &self.direction)
            .field("terminal", &self.terminal)
            .finish()
    }
}

#[derive(Clone, Debug)]
pub struct IntegratorSettings {
    pub method: Method,
    pub max_steps: usize,
    pub initial_step: Option<f64>,
    pub max_step: Option<f64>,
    pub sampling: Sampling,
    pub events: Vec<Event>,
}

impl Default for IntegratorSettings {
    fn default() -> Self {
        IntegratorSettings {
            method: Method::Rk45 {
                atol: 1e-10,
                rtol: 1e-9,
            },
            max_steps: 200_000,
            initial_step: None,
            max_step: None,
            sampling: Sampling::Steps,
            events: Vec::new(),
        }
    }
}

impl IntegratorSettings {
    pub fn adaptive(atol: f64, rtol: f64) -> Self {
        IntegratorSettings {
            method: Method::Rk45 { atol, rtol },
            ..Default::default()
        }
    }

    pub fn fixed(step: f64) -> Self {
        IntegratorSettings {
            method: Method::Rk4 { step },
            ..Default::default()
        }
    }

    pub fn with_times(mut self, times: Vec<f64>) -> Self {
        self.sampling = Sampling::Times(times);
        self
    }

    pub fn with_event(mut self, event: Event) -> Self {
        self.events.push(event);
        self
    }

    pub fn with_max_step(mut self, h: f64) -> Self {
        self.max_step = Some(h);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidSettings(m.into()));
        match self.method {
            Method::Rk4 { step } if !(step > 0.0 && step.is_finite()) => {
                return bad("fixed step must be positive")
            }
            Method::Rk45 { atol, rtol } if !(atol > 0.0 && rtol > 0.0) => {
                return bad("tolerances must be positive")
            }
            _ => {}
        }
        if self.max_steps == 0 {
            return bad("max_steps must be at least 1");
        }
        if matches!(self.max_step, Some(h) if !(h > 0.0)) {
            return bad("max_step must be positive");
        }
        if let Sampling::Times(ts) = &self.sampling {
            if ts.windows(2).any(|w| !(w[1] > w[0])) {
                return bad("sample times must be strictly increasing");
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EventRecord {
    pub kind: String,
    pub t: f64,
    pub state: Vec<f64>,
}

/// Time-stamped states, optional perturbation frames and event records.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Trajectory {
    pub parameter: String,
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frames: Option<Vec<Vec<Vec<f64>>>>,
    pub events: Vec<EventRecord>,
}

impl Trajectory {
    pub fn new(parameter: &str) -> Self {
        Trajectory {
            parameter: parameter.into(),
            ..Default::default()
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last_time(&self) -> f64 {
        *self.times.last().expect("empty trajectory")
    }

    pub fn last_state(&self) -> &[f64] {
        self.states.last().expect("empty trajectory")
    }

    pub fn push(&mut self, t: f64, state: Vec<f64>) {
        if let Some(&last) = self.times.last() {
            if t <= last {
                return;
            }
        }
        self.times.push(t);
        self.states.push(state);
    }

    pub fn has_event(&self, kind: &str) -> bool {
        self.events.iter().any(|e| e.kind == kind)
    }

    /// Index `i` with `times[i] <= t <= times[i + 1]`, clamped to the ends.
    pub fn segment(&self, t: f64) -> usize {
        let n = self.times.len();
        if n < 2 {
            return 0;
        }
        match self.times.partition_point(|&s| s <= t) {
            0 => 0,
            k if k >= n => n - 2,
            k => k - 1,
        }
    }
}

/// Cubic Hermite interpolation on `[t0, t1]` given values and derivatives.
pub fn hermite(t0: f64, y0: &[f64], f0: &[f64], t1: f64, y1: &[f64], f1: &[f64], t: f64) -> Vec<f64> {
    let h = t1 - t0;
    let s = (t - t0) / h;
    let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
    let h10 = s * (1.0 - s) * (1.0 - s);
    let h01 = s * s * (3.0 - 2.0 * s);
    let h11 = s * s * (s - 1.0);
    (0..y0.len())
        .map(|i| h00 * y0[i] + h10 * h * f0[i] + h01 * y1[i] + h11 * h * f1[i])
        .collect()
}

/// Derivative of [`hermite`] with respect to `t`.
pub fn hermite_derivative(
    t0: f64,
    y0: &[f64],
    f0: &[f64],
    t1: f64,
    y1: &[f64],
    f1: &[f64],
    t: f64,
) -> Vec<f64> {
    let h = t1 - t0;
    let s = (t - t0) / h;
    let d00 = 6.0 * s * (s - 1.0) / h;
    let d10 = (1.0 - s) * (1.0 - 3.0 * s);
    let d01 = -d00;
    let d11 = s * (3.0 * s - 2.0);
    (0..y0.len())
        .map(|i| d00 * y0[i] + d10 * f0[i] + d01 * y1[i] + d11 * f1[i])
        .collect()
}

// Dormand-Prince tableau
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Dense output over one accepted step.
enum Dense {
    Dopri { t0: f64, h: f64, r: [Vec<f64>; 5] },
    Hermite { t0: f64, t1: f64, y0: Vec<f64>, f0: Vec<f64>, y1: Vec<f64>, f1: Vec<f64> },
}

impl Dense {
    fn at(&self, t: f64) -> Vec<f64> {
        match self {
            Dense::Dopri { t0, h, r } => {
                let s = (t - t0) / h;
                let s1 = 1.0 - s;
                (0..r[0].len())
                    .map(|i| r[0][i] + s * (r[1][i] + s1 * (r[2][i] + s * (r[3][i] + s1 * r[4][i]))))
                    .collect()
            }
            Dense::Hermite { t0, t1, y0, f0, y1, f1 } => hermite(*t0, y0, f0, *t1, y1, f1, t),
        }
    }
}

fn axpy(y: &[f64], h: f64, terms: &[(f64, &[f64])]) -> Vec<f64> {
    let mut out = y.to_vec();
    for (c, k) in terms {
        let ch = c * h;
        for (o, v) in out.iter_mut().zip(k.iter()) {
            *o += ch * v;
        }
    }
    out
}

struct Step {
    y1: Vec<f64>,
    f1: Vec<f64>,
    err: f64,
    dense: Dense,
}

fn dopri_step<R>(rhs: &R, t: f64, y: &[f64], k1: &[f64], h: f64, atol: f64, rtol: f64) -> Result<Step>
where
    R: Fn(f64, &[f64]) -> Result<Vec<f64>>,
{
    let k2 = rhs(t + C2 * h, &axpy(y, h, &[(A21, k1)]))?;
    let k3 = rhs(t + C3 * h, &axpy(y, h, &[(A31, k1), (A32, &k2)]))?;
    let k4 = rhs(t + C4 * h, &axpy(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]))?;
    let k5 = rhs(t + C5 * h, &axpy(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]))?;
    let k6 = rhs(
        t + h,
        &axpy(y, h, &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
    )?;
    let y1 = axpy(y, h, &[(A71, k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
    let k7 = rhs(t + h, &y1)?;
    let n = y.len();
    let mut err = 0.0f64;
    for i in 0..n {
        let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        let sc = atol + rtol * y[i].abs().max(y1[i].abs());
        err = err.max((e / sc).abs());
    }
    if !err.is_finite() || y1.iter().any(|v| !v.is_finite()) {
        return Ok(Step {
            y1,
            f1: k7,
            err: f64::INFINITY,
            dense: Dense::Hermite {
                t0: t,
                t1: t + h,
                y0: Vec::new(),
                f0: Vec::new(),
                y1: Vec::new(),
                f1: Vec::new(),
            },
        });
    }
    let r1 = y.to_vec();
    let r2: Vec<f64> = (0..n).map(|i| y1[i] - y[i]).collect();
    let r3: Vec<f64> = (0..n).map(|i| h * k1[i] - r2[i]).collect();
    let r4: Vec<f64> = (0..n).map(|i| r2[i] - h * k7[i] - r3[i]).collect();
    let r5: Vec<f64> = (0..n)
        .map(|i| h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]))
        .collect();
    Ok(Step {
        y1,
        f1: k7,
        err,
        dense: Dense::Dopri {
            t0: t,
            h,
            r: [r1, r2, r3, r4, r5],
        },
    })
}

fn rk4_step<R>(rhs: &R, t: f64, y: &[f64], k1: &[f64], h: f64) -> Result<Step>
where
    R: Fn(f64, &[f64]) -> Result<Vec<f64>>,
{
    let k2 = rhs(t + 0.5 * h, &axpy(y, h, &[(0.5, k1)]))?;
    let k3 = rhs(t + 0.5 * h, &axpy(y, h, &[(0.5, &k2)]))?;
    let k4 = rhs(t + h, &axpy(y, h, &[(1.0, &k3)]))?;
    let y1 = axpy(y, h, &[(1.0 / 6.0, k1), (1.0 / 3.0, &k2), (1.0 / 3.0, &k3), (1.0 / 6.0, &k4)]);
    let f1 = rhs(t + h, &y1)?;
    Ok(Step {
        dense: Dense::Hermite {
            t0: t,
            t1: t + h,
            y0: y.to_vec(),
            f0: k1.to_vec(),
            y1: y1.clone(),
            f1: f1.clone(),
        },
        y1,
        f1,
        err: 0.0,
    })
}

fn crosses(direction: Direction, g0: f64, g1: f64) -> bool {
    let up = g0 < 0.0 && g1 >= 0.0;
    let down = g0 > 0.0 && g1 <= 0.0;
    match direction {
        Direction::Increasing => up,
        Direction::Decreasing => down,
        Direction::Either => up || down,
    }
}

/// Bisection on the dense output for the crossing inside `(ta, tb]`.
fn locate(event: &Event, dense: &Dense, mut ta: f64, mut ga: f64, mut tb: f64) -> f64 {
    for _ in 0..60 {
        if tb - ta <= 1e-10 * 0.5 {
            break;
        }
        let tm = 0.5 * (ta + tb);
        let gm = (event.func)(tm, &dense.at(tm));
        if crosses(Direction::Either, ga, gm) || gm == 0.0 {
            tb = tm;
        } else {
            ta = tm;
            ga = gm;
        }
    }
    tb
}

fn wrap(t: f64, y: &[f64], e: Error) -> Error {
    match e {
        e @ Error::Evaluation { .. } => e,
        e => Error::Evaluation {
            t,
            state: y.to_vec(),
            source: Box::new(e),
        },
    }
}

/// Integrates `y' = rhs(t, y)` over `tspan`, returning whatever was computed
/// together with the error that stopped integration early, if any.
pub fn integrate_rhs<R>(
    rhs: R,
    y0: &[f64],
    tspan: (f64, f64),
    settings: &IntegratorSettings,
) -> (Trajectory, Option<Error>)
where
    R: Fn(f64, &[f64]) -> Result<Vec<f64>>,
{
    let mut traj = Trajectory::new("t");
    if let Err(e) = settings.validate() {
        return (traj, Some(e));
    }
    let (t0, t_end) = tspan;
    if !(t0.is_finite() && t_end.is_finite()) || t_end < t0 {
        return (
            traj,
            Some(Error::InvalidSettings(format!("invalid time span ({t0}, {t_end})"))),
        );
    }
    let sample_times: Option<&[f64]> = match &settings.sampling {
        Sampling::Steps => None,
        Sampling::Times(ts) => Some(ts),
    };
    let mut next_sample = 0;
    if let Some(ts) = sample_times {
        while next_sample < ts.len() && ts[next_sample] < t0 {
            next_sample += 1;
        }
        if next_sample < ts.len() && ts[next_sample] == t0 {
            traj.push(t0, y0.to_vec());
            next_sample += 1;
        }
    } else {
        traj.push(t0, y0.to_vec());
    }
    if t_end == t0 {
        return (traj, None);
    }

    let mut t = t0;
    let mut y = y0.to_vec();
    let mut f = match rhs(t, &y) {
        Ok(f) => f,
        Err(e) => return (traj, Some(wrap(t, &y, e))),
    };
    let span = t_end - t0;
    let hmax = settings.max_step.unwrap_or(span).min(span);
    let mut h = match settings.method {
        Method::Rk4 { step } => step,
        Method::Rk45 { atol, rtol } => settings.initial_step.unwrap_or_else(|| {
            let d0 = y.iter().map(|v| v.abs()).fold(0.0, f64::max);
            let d1 = f.iter().map(|v| v.abs()).fold(0.0, f64::max);
            let scale = atol + rtol * d0;
            if d1 > 1e-12 {
                (0.01 * (scale / (atol + rtol * d1)).powf(0.2) * (d0.max(1e-3) / d1).min(1.0)).max(1e-8)
            } else {
                1e-3
            }
        }),
    }
    .min(hmax);
    let mut g_prev: Vec<f64> = settings.events.iter().map(|e| (e.func)(t, &y)).collect();
    let mut accepted = 0usize;
    let mut last_error: Option<Error> = None;

    while t < t_end {
        if accepted >= settings.max_steps {
            return (
                traj,
                Some(Error::MaxStepsExceeded {
                    t,
                    max_steps: settings.max_steps,
                }),
            );
        }
        let remaining = t_end - t;
        let last = h >= remaining * (1.0 - 1e-9);
        let h_try = if last { remaining } else { h };
        if h_try <= 1e-14 * t.abs().max(1.0) {
            let err = match last_error.take() {
                Some(e) => wrap(t, &y, e),
                None => wrap(t, &y, Error::StepUnderflow { t, step: h_try }),
            };
            return (traj, Some(err));
        }
        let step = match settings.method {
            Method::Rk45 { atol, rtol } => dopri_step(&rhs, t, &y, &f, h_try, atol, rtol),
            Method::Rk4 { .. } => rk4_step(&rhs, t, &y, &f, h_try),
        };
        let step = match step {
            Ok(s) => s,
            Err(e) => {
                last_error = Some(e);
                h = h_try * 0.5;
                continue;
            }
        };
        if let Method::Rk45 { .. } = settings.method {
            if step.err > 1.0 {
                let fac = if step.err.is_finite() {
                    (0.9 * step.err.powf(-0.2)).max(0.2)
                } else {
                    0.25
                };
                h = h_try * fac;
                continue;
            }
        } else if step.y1.iter().any(|v| !v.is_finite()) {
            return (
                traj,
                Some(Error::Evaluation {
                    t,
                    state: y,
                    source: Box::new(Error::InvalidSettings("state became non-finite".into())),
                }),
            );
        }
        last_error = None;
        accepted += 1;
        let t1 = if last { t_end } else { t + h_try };

        // events
        let mut terminal_hit: Option<(f64, usize)> = None;
        let mut found: Vec<(f64, usize)> = Vec::new();
        let g_new: Vec<f64> = settings.events.iter().map(|e| (e.func)(t1, &step.y1)).collect();
        for (k, event) in settings.events.iter().enumerate() {
            if crosses(event.direction, g_prev[k], g_new[k]) {
                let te = locate(event, &step.dense, t, g_prev[k], t1);
                found.push((te, k));
                if event.terminal && terminal_hit.is_none_or(|(tt, _)| te < tt) {
                    terminal_hit = Some((te, k));
                }
            }
        }
        found.sort_by(|a, b| a.0.total_cmp(&b.0));
        let stop_at = terminal_hit.map(|(te, _)| te);
        for &(te, k) in &found {
            if stop_at.is_none_or(|s| te <= s) {
                traj.events.push(EventRecord {
                    kind: settings.events[k].name.clone(),
                    t: te,
                    state: step.dense.at(te),
                });
            }
        }
        let seg_end = stop_at.unwrap_or(t1);

        match sample_times {
            Some(ts) => {
                while next_sample < ts.len() && ts[next_sample] <= seg_end {
                    let ts_k = ts[next_sample];
                    let state = if ts_k == t1 { step.y1.clone() } else { step.dense.at(ts_k) };
                    traj.push(ts_k, state);
                    next_sample += 1;
                }
            }
            None if stop_at.is_none() => traj.push(t1, step.y1.clone()),
            None => {}
        }
        if let Some(te) = stop_at {
            traj.push(te, step.dense.at(te));
            return (traj, None);
        }

        t = t1;
        y = step.y1;
        f = step.f1;
        g_prev = g_new;
        if let Method::Rk45 { .. } = settings.method {
            let fac = if step.err > 0.0 {
                (0.9 * step.err.powf(-0.2)).clamp(0.2, 10.0)
            } else {
                10.0
            };
            h = (h_try * fac).min(hmax);
        }
    }
    (traj, None)
}
