//! Lyapunov exponents under a chosen family of seminorms on the state tangent
//! spaces, by periodic renormalization of propagated perturbations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Expression;
use crate::flow::{variational_integrate_with, Flow, IntegratorSettings};
use crate::geometry::MetricField;
use crate::lagrangian::LagrangianSystem;
use crate::numeric::{symmetric_eigenvalues, weighted_gram_schmidt, Matrix};

/// Quadratic forms below this are negative rather than rounding noise.
pub const NEGATIVE_FORM: f64 = -1e-12;
/// A propagated seminorm below this has collapsed.
pub const COLLAPSE: f64 = 1e-300;

/// Which part of a tangent vector a custom metric sees.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricBlock {
    Full,
    Configuration,
}

#[derive(Clone, Debug)]
pub enum SeminormKind {
    EuclideanChart,
    /// A configuration metric applied to the position block only.
    VerticalLift(MetricField),
    /// The Lagrange metric `d^2 L / du du` on the position block.
    LagrangeMetric(LagrangianSystem),
    /// The Lagrange metric on both the position and the velocity block.
    LagrangeLift(LagrangianSystem),
    /// Matrix entries over the state variables.
    CustomMetric {
        matrix: Vec<Vec<Expression>>,
        block: MetricBlock,
    },
}

/// What to do when a propagated vector falls into the kernel of the form.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DegeneratePolicy {
    #[default]
    Fail,
    /// Stop and return the estimate accumulated so far, flagged.
    Flag,
}

#[derive(Clone, Debug)]
pub struct SeminormFamily {
    pub kind: SeminormKind,
    pub policy: DegeneratePolicy,
}

impl SeminormFamily {
    pub fn new(kind: SeminormKind) -> Self {
        SeminormFamily {
            kind,
            policy: DegeneratePolicy::Fail,
        }
    }

    pub fn euclidean() -> Self {
        Self::new(SeminormKind::EuclideanChart)
    }

    pub fn with_policy(mut self, policy: DegeneratePolicy) -> Self {
        self.policy = policy;
        self
    }

    /// Number of leading state components the form acts on, `None` for all.
    fn block_size(&self) -> Option<usize> {
        match &self.kind {
            SeminormKind::EuclideanChart => None,
            SeminormKind::VerticalLift(m) => Some(m.dim()),
            SeminormKind::LagrangeMetric(l) => Some(l.dim()),
            SeminormKind::LagrangeLift(_) => None,
            SeminormKind::CustomMetric { matrix, block } => match block {
                MetricBlock::Full => None,
                MetricBlock::Configuration => Some(matrix.len()),
            },
        }
    }

    /// True when the form can vanish on nonzero vectors of a `dim`-dimensional state.
    pub fn is_degenerate(&self, dim: usize) -> bool {
        self.block_size().is_some_and(|b| b < dim)
    }

    fn check_dim(&self, dim: usize) -> Result<()> {
        let ok = match &self.kind {
            SeminormKind::EuclideanChart => true,
            SeminormKind::VerticalLift(m) => m.dim() <= dim,
            SeminormKind::LagrangeMetric(l) | SeminormKind::LagrangeLift(l) => 2 * l.dim() == dim,
            SeminormKind::CustomMetric { matrix, block } => {
                let k = matrix.len();
                let square = matrix.iter().all(|r| r.len() == k);
                let arity = matrix.iter().flatten().all(|e| e.arity() == dim);
                square && arity && k > 0 && (if *block == MetricBlock::Full { k == dim } else { k <= dim })
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::DimensionMismatch(format!(
                "seminorm family does not fit a state of dimension {dim}"
            )))
        }
    }

    /// The quadratic form at `state` as a full `dim x dim` matrix.
    pub fn form(&self, state: &[f64]) -> Result<Matrix<f64>> {
        let dim = state.len();
        self.check_dim(dim)?;
        let block = match &self.kind {
            SeminormKind::EuclideanChart => return Ok(Matrix::identity(dim)),
            SeminormKind::VerticalLift(m) => m.matrix(&state[..m.dim()])?,
            SeminormKind::LagrangeMetric(l) => {
                let n = l.dim();
                l.lagrange_metric(&state[..n], &state[n..])?
            }
            SeminormKind::LagrangeLift(l) => {
                let n = l.dim();
                let g = l.lagrange_metric(&state[..n], &state[n..])?;
                return Ok(Matrix::from_fn(dim, dim, |i, j| {
                    if (i < n) == (j < n) {
                        g[(i % n, j % n)]
                    } else {
                        0.0
                    }
                }));
            }
            SeminormKind::CustomMetric { matrix, .. } => {
                let k = matrix.len();
                let mut m = Matrix::zeros(k, k);
                for (i, row) in matrix.iter().enumerate() {
                    for (j, e) in row.iter().enumerate() {
                        m[(i, j)] = e.eval(state)?;
                    }
                }
                m
            }
        };
        let k = block.rows();
        Ok(Matrix::from_fn(dim, dim, |i, j| if i < k && j < k { block[(i, j)] } else { 0.0 }))
    }

    /// Verifies the form is positive semidefinite at `state`.
    pub fn check_semidefinite(&self, state: &[f64]) -> Result<()> {
        let f = self.form(state)?;
        let sym = f.add(&f.transpose()).scale(0.5);
        let min = symmetric_eigenvalues(&sym)?.into_iter().fold(f64::INFINITY, f64::min);
        if min < NEGATIVE_FORM * sym.max_abs().max(1.0) {
            return Err(Error::NegativeForm(min));
        }
        Ok(())
    }
}

/// `sqrt(Q_state(xi, xi))`.
pub fn seminorm(family: &SeminormFamily, state: &[f64], xi: &[f64]) -> Result<f64> {
    if xi.len() != state.len() {
        return Err(Error::DimensionMismatch("perturbation and state differ in dimension".into()));
    }
    let q = family.form(state)?.bilinear(xi, xi);
    if q < NEGATIVE_FORM {
        return Err(Error::NegativeForm(q));
    }
    Ok(q.max(0.0).sqrt())
}

#[derive(Clone, Debug)]
pub struct LyapunovSettings {
    pub horizon: f64,
    pub interval: f64,
    pub integrator: IntegratorSettings,
}

impl Default for LyapunovSettings {
    fn default() -> Self {
        LyapunovSettings {
            horizon: 100.0,
            interval: 0.5,
            integrator: IntegratorSettings::default(),
        }
    }
}

impl LyapunovSettings {
    pub fn new(horizon: f64, interval: f64) -> Self {
        LyapunovSettings {
            horizon,
            interval,
            ..Default::default()
        }
    }

    pub fn with_integrator(mut self, integrator: IntegratorSettings) -> Self {
        self.integrator = integrator;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::InvalidSettings("horizon must be positive and finite".into()));
        }
        if !(self.interval > 0.0 && self.interval <= self.horizon) {
            return Err(Error::InvalidSettings(
                "renormalization interval must lie in (0, horizon]".into(),
            ));
        }
        self.integrator.validate()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ExponentEstimate {
    pub value: f64,
    /// `(t, running average)` at every renormalization.
    pub series: Vec<(f64, f64)>,
    pub renormalizations: usize,
    /// Range of the running average over the second half of the horizon.
    pub spread: f64,
    pub flags: Vec<String>,
}

fn spread_of(series: &[(f64, f64)], horizon: f64) -> f64 {
    let tail = series.iter().filter(|(t, _)| *t >= 0.5 * horizon).map(|p| p.1);
    let (lo, hi) = tail.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if hi >= lo {
        hi - lo
    } else {
        0.0
    }
}

/// Exponent of a single perturbation `xi0` at `p0`.
pub fn lyapunov_exponent<F: Flow>(
    flow: &F,
    p0: &[f64],
    xi0: &[f64],
    family: &SeminormFamily,
    settings: &LyapunovSettings,
) -> Result<ExponentEstimate> {
    settings.validate()?;
    family.check_semidefinite(p0)?;
    let norm0 = seminorm(family, p0, xi0)?;
    if !(norm0 > 0.0) {
        return Err(Error::DegenerateStart);
    }
    let start: Vec<f64> = xi0.iter().map(|v| v / norm0).collect();
    let mut sum = 0.0;
    let mut series = Vec::new();
    let mut collapsed = None;
    let result = {
        let mut renorm = |t: f64, x: &[f64], frame: &mut [Vec<f64>]| -> Result<()> {
            let s = seminorm(family, x, &frame[0])?;
            if !(s >= COLLAPSE) {
                collapsed = Some(t);
                return Err(Error::SeminormCollapse { t });
            }
            sum += s.ln();
            for v in frame[0].iter_mut() {
                *v /= s;
            }
            series.push((t, sum / t));
            Ok(())
        };
        variational_integrate_with(
            flow,
            p0,
            &[start],
            (0.0, settings.horizon),
            &settings.integrator,
            Some((settings.interval, &mut renorm)),
        )
    };
    let mut flags = Vec::new();
    match (result, collapsed) {
        (Ok(_), _) => {}
        (Err(Error::SeminormCollapse { .. }), Some(t)) if family.policy == DegeneratePolicy::Flag => {
            flags.push(format!("seminorm-collapse at t = {t}"));
        }
        (Err(e), _) => return Err(e),
    }
    let value = series.last().map_or(f64::NAN, |p| p.1);
    Ok(ExponentEstimate {
        value,
        spread: spread_of(&series, settings.horizon),
        renormalizations: series.len(),
        series,
        flags,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectrumEstimate {
    /// Descending.
    pub exponents: Vec<f64>,
    /// `(t, running averages)` at every renormalization, ordered like `exponents`.
    pub series: Vec<(f64, Vec<f64>)>,
    pub spread: Vec<f64>,
    pub renormalizations: usize,
}

/// Exponents of the span of `frame0` by repeated Gram-Schmidt
/// orthonormalization under a definite form.
pub fn lyapunov_spectrum<F: Flow>(
    flow: &F,
    p0: &[f64],
    frame0: &[Vec<f64>],
    family: &SeminormFamily,
    settings: &LyapunovSettings,
) -> Result<SpectrumEstimate> {
    settings.validate()?;
    if frame0.is_empty() || frame0.len() > p0.len() {
        return Err(Error::DimensionMismatch(format!(
            "a spectrum frame needs between 1 and {} vectors",
            p0.len()
        )));
    }
    if family.is_degenerate(p0.len()) {
        return Err(Error::DegenerateSeminorm);
    }
    family.check_semidefinite(p0)?;
    let (start, _) = weighted_gram_schmidt(frame0, &family.form(p0)?)?;
    let m = start.len();
    let mut sums = vec![0.0; m];
    let mut series: Vec<(f64, Vec<f64>)> = Vec::new();
    {
        let mut renorm = |t: f64, x: &[f64], frame: &mut [Vec<f64>]| -> Result<()> {
            let (q, logs) = weighted_gram_schmidt(frame, &family.form(x)?)?;
            for (k, v) in q.into_iter().enumerate() {
                frame[k] = v;
                sums[k] += logs[k];
            }
            series.push((t, sums.iter().map(|s| s / t).collect()));
            Ok(())
        };
        variational_integrate_with(
            flow,
            p0,
            &start,
            (0.0, settings.horizon),
            &settings.integrator,
            Some((settings.interval, &mut renorm)),
        )?;
    }
    let last = series.last().map(|p| p.1.clone()).unwrap_or_else(|| vec![f64::NAN; m]);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| last[b].total_cmp(&last[a]));
    let series: Vec<(f64, Vec<f64>)> = series
        .into_iter()
        .map(|(t, v)| (t, order.iter().map(|&k| v[k]).collect()))
        .collect();
    let spread = (0..m)
        .map(|k| {
            let s: Vec<(f64, f64)> = series.iter().map(|(t, v)| (*t, v[k])).collect();
            spread_of(&s, settings.horizon)
        })
        .collect();
    Ok(SpectrumEstimate {
        exponents: order.iter().map(|&k| last[k]).collect(),
        spread,
        renormalizations: series.len(),
        series,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GlobalStability {
    Stable,
    Unstable,
}

/// Stable iff every exponent is at most `tol`.
pub fn classify_global_stability(exponents: &[f64], tol: f64) -> GlobalStability {
    if exponents.iter().all(|&l| l <= tol) {
        GlobalStability::Stable
    } else {
        GlobalStability::Unstable
    }
}
