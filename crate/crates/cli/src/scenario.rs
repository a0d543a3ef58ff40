//! Scenario files: the system under study, the analyses to run and where
//! to put the results.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use geostab::expr::{Expression, SymbolTable};
use geostab::flow::{IntegratorSettings, VectorFlowSystem};
use geostab::geometry::{MetricField, Signature};
use geostab::lagrangian::{LagrangianSystem, NaturalLagrangian};
use geostab::lyapunov::{DegeneratePolicy, MetricBlock, SeminormFamily, SeminormKind};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: Option<String>,
    pub system: SystemSpec,
    pub analysis: AnalysisList,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default)]
    pub seed: u64,
}

/// Exactly one of `flow`, `lagrangian` and `natural` must be present.
/// `dimension` is the state dimension of a flow and the configuration
/// dimension of a Lagrangian system.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub dimension: usize,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub parameters: BTreeMap<String, f64>,
    /// Named subexpressions, each usable by the ones after it.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub definitions: Vec<(String, String)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flow: Option<Vec<String>>,
    /// Marks a flow on `(x, u)` whose first half of components is `u`.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub second_order: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lagrangian: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub natural: Option<NaturalSpec>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NaturalSpec {
    pub kinetic: Vec<Vec<String>>,
    pub potential: String,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub indefinite: bool,
}

#[derive(Clone, Debug, Serialize)]
#[serde(untagged)]
pub enum AnalysisList {
    One(AnalysisSpec),
    Many(Vec<AnalysisSpec>),
}

impl<'de> Deserialize<'de> for AnalysisList {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::value::{MapAccessDeserializer, SeqAccessDeserializer};

        struct ListVisitor;

        impl<'de> serde::de::Visitor<'de> for ListVisitor {
            type Value = AnalysisList;

            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                f.write_str("an analysis object or an array of them")
            }

            fn visit_map<A: serde::de::MapAccess<'de>>(self, map: A) -> Result<AnalysisList, A::Error> {
                AnalysisSpec::deserialize(MapAccessDeserializer::new(map)).map(AnalysisList::One)
            }

            fn visit_seq<A: serde::de::SeqAccess<'de>>(self, seq: A) -> Result<AnalysisList, A::Error> {
                Vec::deserialize(SeqAccessDeserializer::new(seq)).map(AnalysisList::Many)
            }
        }

        d.deserialize_any(ListVisitor)
    }
}

impl AnalysisList {
    pub fn items(&self) -> &[AnalysisSpec] {
        match self {
            AnalysisList::One(a) => std::slice::from_ref(a),
            AnalysisList::Many(v) => v,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSpec {
    #[serde(default = "default_atol")]
    pub atol: f64,
    #[serde(default = "default_rtol")]
    pub rtol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_step: Option<f64>,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
}

fn default_atol() -> f64 {
    1e-10
}
fn default_rtol() -> f64 {
    1e-10
}
fn default_max_steps() -> usize {
    1_000_000
}
fn default_horizon() -> f64 {
    100.0
}
fn default_interval() -> f64 {
    0.5
}
fn default_constant() -> f64 {
    2.0
}
fn default_samples() -> usize {
    200
}
fn default_global_tol() -> f64 {
    0.05
}
fn default_local_tol() -> f64 {
    geostab::kcc::LOCAL_TOLERANCE
}
fn default_round_trip() -> f64 {
    5.0
}

impl Default for IntegratorSpec {
    fn default() -> Self {
        IntegratorSpec {
            atol: default_atol(),
            rtol: default_rtol(),
            fixed_step: None,
            max_steps: default_max_steps(),
        }
    }
}

impl IntegratorSpec {
    pub fn settings(&self) -> IntegratorSettings {
        let mut s = match self.fixed_step {
            Some(h) => IntegratorSettings::fixed(h),
            None => IntegratorSettings::adaptive(self.atol, self.rtol),
        };
        s.max_steps = self.max_steps;
        s
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SeminormSpec {
    #[default]
    Euclidean,
    /// Kinetic metric (or the identity) on the position block.
    VerticalLift,
    LagrangeMetric,
    LagrangeLift,
    Custom {
        matrix: Vec<Vec<String>>,
        #[serde(default = "default_block")]
        block: MetricBlock,
    },
}

fn default_block() -> MetricBlock {
    MetricBlock::Configuration
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OperatorSpec {
    #[default]
    Deviation,
    Rtilde,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicySpec {
    #[default]
    Fail,
    Flag,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum AnalysisSpec {
    Simulate {
        initial: Vec<f64>,
        t_end: f64,
        #[serde(default = "default_samples")]
        samples: usize,
        #[serde(default)]
        integrator: IntegratorSpec,
    },
    Lyapunov {
        initial: Vec<f64>,
        /// Drawn from the scenario seed when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        perturbation: Option<Vec<f64>>,
        #[serde(default)]
        seminorm: SeminormSpec,
        #[serde(default)]
        degenerate: PolicySpec,
        #[serde(default = "default_horizon")]
        horizon: f64,
        #[serde(default = "default_interval")]
        interval: f64,
        #[serde(default = "default_global_tol")]
        tolerance: f64,
        #[serde(default)]
        integrator: IntegratorSpec,
    },
    Spectrum {
        initial: Vec<f64>,
        /// Identity frame when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        frame: Option<Vec<Vec<f64>>>,
        #[serde(default)]
        seminorm: SeminormSpec,
        #[serde(default = "default_horizon")]
        horizon: f64,
        #[serde(default = "default_interval")]
        interval: f64,
        #[serde(default = "default_global_tol")]
        tolerance: f64,
        #[serde(default)]
        integrator: IntegratorSpec,
    },
    LocalStability {
        initial: Vec<f64>,
        t_end: f64,
        #[serde(default = "default_samples")]
        samples: usize,
        #[serde(default)]
        operator: OperatorSpec,
        #[serde(default = "default_local_tol")]
        tolerance: f64,
        #[serde(default)]
        integrator: IntegratorSpec,
    },
    JacobiTranslate {
        initial: Vec<f64>,
        energy: f64,
        #[serde(default = "default_constant")]
        constant: f64,
        #[serde(default = "default_horizon")]
        tau_end: f64,
        #[serde(default = "default_samples")]
        samples: usize,
        #[serde(default)]
        integrator: IntegratorSpec,
    },
    Compare {
        initial: Vec<f64>,
        energy: f64,
        #[serde(default = "default_constant")]
        constant: f64,
        #[serde(default = "default_horizon")]
        horizon: f64,
        #[serde(default = "default_interval")]
        interval: f64,
        #[serde(default = "default_global_tol")]
        global_tolerance: f64,
        #[serde(default = "default_local_tol")]
        local_tolerance: f64,
        #[serde(default = "default_round_trip")]
        round_trip_horizon: f64,
        #[serde(default)]
        integrator: IntegratorSpec,
    },
}

impl AnalysisSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            AnalysisSpec::Simulate { .. } => "simulate",
            AnalysisSpec::Lyapunov { .. } => "lyapunov",
            AnalysisSpec::Spectrum { .. } => "spectrum",
            AnalysisSpec::LocalStability { .. } => "local-stability",
            AnalysisSpec::JacobiTranslate { .. } => "jacobi-translate",
            AnalysisSpec::Compare { .. } => "compare",
        }
    }

    pub fn initial(&self) -> &[f64] {
        match self {
            AnalysisSpec::Simulate { initial, .. }
            | AnalysisSpec::Lyapunov { initial, .. }
            | AnalysisSpec::Spectrum { initial, .. }
            | AnalysisSpec::LocalStability { initial, .. }
            | AnalysisSpec::JacobiTranslate { initial, .. }
            | AnalysisSpec::Compare { initial, .. } => initial,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    /// Relative paths are resolved against the scenario file's directory.
    #[serde(default = "default_directory")]
    pub directory: String,
    #[serde(default = "default_report")]
    pub report: String,
    #[serde(default = "default_csv")]
    pub csv: bool,
}

fn default_directory() -> String {
    "out".into()
}
fn default_report() -> String {
    "report.json".into()
}
fn default_csv() -> bool {
    true
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            directory: default_directory(),
            report: default_report(),
            csv: default_csv(),
        }
    }
}

/// A system built from its specification.
#[derive(Clone, Debug)]
pub enum System {
    Flow(VectorFlowSystem),
    Lagrangian(LagrangianSystem),
    Natural(NaturalLagrangian),
}

impl System {
    pub fn variant(&self) -> &'static str {
        match self {
            System::Flow(_) => "flow",
            System::Lagrangian(_) => "lagrangian",
            System::Natural(_) => "natural",
        }
    }

    /// Length of a state vector.
    pub fn state_dim(&self) -> usize {
        match self {
            System::Flow(f) => f.components().len(),
            System::Lagrangian(l) => 2 * l.dim(),
            System::Natural(n) => 2 * n.dim(),
        }
    }

    /// Configuration dimension of second-order systems.
    pub fn config_dim(&self) -> Option<usize> {
        match self {
            System::Flow(f) => geostab::flow::Flow::config_dim(f),
            System::Lagrangian(l) => Some(l.dim()),
            System::Natural(n) => Some(n.dim()),
        }
    }

    /// Symbols of the state vector, including parameters and definitions.
    pub fn state_symbols(&self) -> &Arc<SymbolTable> {
        match self {
            System::Flow(f) => f.symbols(),
            System::Lagrangian(l) => l.expression().symbols(),
            System::Natural(n) => n.lagrangian().expression().symbols(),
        }
    }

    fn lagrangian(&self) -> Option<&LagrangianSystem> {
        match self {
            System::Flow(_) => None,
            System::Lagrangian(l) => Some(l),
            System::Natural(n) => Some(n.lagrangian()),
        }
    }
}

/// A scenario whose expressions, dimensions and settings have been checked.
#[derive(Clone, Debug)]
pub struct Plan {
    pub name: String,
    pub seed: u64,
    pub system: System,
    pub analyses: Vec<Task>,
    pub output_dir: PathBuf,
    pub report: String,
    pub csv: bool,
}

#[derive(Clone, Debug)]
pub struct Task {
    pub index: usize,
    pub spec: AnalysisSpec,
    pub seminorm: Option<SeminormFamily>,
}

fn config(path: impl Into<String>, message: impl ToString) -> CliError {
    CliError::Config {
        path: path.into(),
        message: message.to_string(),
        line: None,
        column: None,
    }
}

pub fn parse_scenario(text: &str) -> Result<Scenario, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Config {
        path: "scenario".into(),
        message: e.to_string(),
        line: Some(e.line()),
        column: Some(e.column()),
    })
}

pub fn load(path: &Path) -> Result<Scenario, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_scenario(&text)
}

fn base_table(spec: &SystemSpec, vars: SymbolTable) -> Result<SymbolTable, CliError> {
    let mut t = vars;
    for (name, v) in &spec.parameters {
        t.add_parameter(name, *v)
            .map_err(|e| config(format!("system.parameters.{name}"), e))?;
    }
    for (k, (name, text)) in spec.definitions.iter().enumerate() {
        t.define(name, text)
            .map_err(|e| config(format!("system.definitions[{k}]"), e))?;
    }
    Ok(t)
}

fn parse_expr(text: &str, table: &Arc<SymbolTable>, path: String) -> Result<Expression, CliError> {
    Expression::parse(text, table).map_err(|e| config(path, e))
}

pub fn build_system(spec: &SystemSpec) -> Result<System, CliError> {
    let n = spec.dimension;
    if n == 0 {
        return Err(config("system.dimension", "dimension must be positive"));
    }
    let present = [spec.flow.is_some(), spec.lagrangian.is_some(), spec.natural.is_some()];
    if present.iter().filter(|&&p| p).count() != 1 {
        return Err(config(
            "system",
            "exactly one of `flow`, `lagrangian`, `natural` is required",
        ));
    }
    if spec.second_order && spec.flow.is_none() {
        return Err(config("system.second_order", "only applies to `flow` systems"));
    }
    if let Some(components) = &spec.flow {
        if components.len() != n {
            return Err(config(
                "system.flow",
                format!("expected {n} components, found {}", components.len()),
            ));
        }
        let table = if spec.second_order {
            if !n.is_multiple_of(2) {
                return Err(config("system.dimension", "a second-order flow needs an even dimension"));
            }
            SymbolTable::phase(n / 2)
        } else {
            SymbolTable::configuration(n)
        };
        let table = Arc::new(base_table(spec, table)?);
        let exprs = components
            .iter()
            .enumerate()
            .map(|(k, c)| parse_expr(c, &table, format!("system.flow[{k}]")))
            .collect::<Result<Vec<_>, _>>()?;
        let mut flow = VectorFlowSystem::new(exprs).map_err(|e| config("system.flow", e))?;
        if spec.second_order {
            flow = flow.second_order(n / 2).map_err(|e| config("system.flow", e))?;
        }
        return Ok(System::Flow(flow));
    }
    if let Some(text) = &spec.lagrangian {
        let table = Arc::new(base_table(spec, SymbolTable::phase(n))?);
        let l = parse_expr(text, &table, "system.lagrangian".into())?;
        return LagrangianSystem::new(n, l)
            .map(System::Lagrangian)
            .map_err(|e| config("system.lagrangian", e));
    }
    let nat = spec.natural.as_ref().expect("checked above");
    if nat.kinetic.len() != n || nat.kinetic.iter().any(|r| r.len() != n) {
        return Err(config("system.natural.kinetic", format!("expected a {n}x{n} matrix")));
    }
    let table = Arc::new(base_table(spec, SymbolTable::configuration(n))?);
    let rows = nat
        .kinetic
        .iter()
        .enumerate()
        .map(|(i, row)| {
            row.iter()
                .enumerate()
                .map(|(j, c)| parse_expr(c, &table, format!("system.natural.kinetic[{i}][{j}]")))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    let signature = if nat.indefinite {
        Signature::Indefinite
    } else {
        Signature::PositiveDefinite
    };
    let kinetic = MetricField::new(rows, signature).map_err(|e| config("system.natural.kinetic", e))?;
    let v = parse_expr(&nat.potential, &table, "system.natural.potential".into())?;
    NaturalLagrangian::new(kinetic, v)
        .map(System::Natural)
        .map_err(|e| config("system.natural", e))
}

fn build_seminorm(system: &System, spec: &SeminormSpec, path: &str) -> Result<SeminormFamily, CliError> {
    let need_lagrangian = || {
        system
            .lagrangian()
            .cloned()
            .ok_or_else(|| config(path, "requires a `lagrangian` or `natural` system"))
    };
    let kind = match spec {
        SeminormSpec::Euclidean => SeminormKind::EuclideanChart,
        SeminormSpec::VerticalLift => match system {
            System::Natural(n) => SeminormKind::VerticalLift(n.kinetic().clone()),
            _ => {
                let n = system
                    .config_dim()
                    .ok_or_else(|| config(path, "vertical lift needs a second-order system"))?;
                SeminormKind::VerticalLift(MetricField::euclidean(n))
            }
        },
        SeminormSpec::LagrangeMetric => SeminormKind::LagrangeMetric(need_lagrangian()?),
        SeminormSpec::LagrangeLift => SeminormKind::LagrangeLift(need_lagrangian()?),
        SeminormSpec::Custom { matrix, block } => {
            let table = system.state_symbols();
            let k = matrix.len();
            let size_ok = match block {
                MetricBlock::Full => k == system.state_dim(),
                MetricBlock::Configuration => k > 0 && k <= system.state_dim(),
            };
            if !size_ok || matrix.iter().any(|r| r.len() != k) {
                return Err(config(format!("{path}.matrix"), "matrix size does not fit the state"));
            }
            let rows = matrix
                .iter()
                .enumerate()
                .map(|(i, row)| {
                    row.iter()
                        .enumerate()
                        .map(|(j, c)| parse_expr(c, table, format!("{path}.matrix[{i}][{j}]")))
                        .collect::<Result<Vec<_>, _>>()
                })
                .collect::<Result<Vec<_>, _>>()?;
            SeminormKind::CustomMetric { matrix: rows, block: *block }
        }
    };
    Ok(SeminormFamily::new(kind))
}

fn positive(path: &str, name: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(config(format!("{path}.{name}"), format!("`{name}` must be positive, got {v}")))
    }
}

fn check_integrator(path: &str, spec: &IntegratorSpec) -> Result<(), CliError> {
    spec.settings()
        .validate()
        .map_err(|e| config(format!("{path}.integrator"), e))
}

fn check_task(system: &System, index: usize, spec: &AnalysisSpec) -> Result<Task, CliError> {
    let path = format!("analysis[{index}]");
    let dim = system.state_dim();
    let initial = spec.initial();
    if initial.len() != dim {
        return Err(config(
            format!("{path}.initial"),
            format!("expected {dim} entries, found {}", initial.len()),
        ));
    }
    if initial.iter().any(|v| !v.is_finite()) {
        return Err(config(format!("{path}.initial"), "entries must be finite"));
    }
    let mut seminorm = None;
    match spec {
        AnalysisSpec::Simulate {
            t_end,
            samples,
            integrator,
            ..
        } => {
            positive(&path, "t_end", *t_end)?;
            positive(&path, "samples", *samples as f64)?;
            check_integrator(&path, integrator)?;
        }
        AnalysisSpec::Lyapunov {
            perturbation,
            seminorm: s,
            degenerate,
            horizon,
            interval,
            tolerance,
            integrator,
            ..
        } => {
            positive(&path, "horizon", *horizon)?;
            positive(&path, "interval", *interval)?;
            positive(&path, "tolerance", *tolerance)?;
            check_integrator(&path, integrator)?;
            if let Some(p) = perturbation {
                if p.len() != dim {
                    return Err(config(format!("{path}.perturbation"), format!("expected {dim} entries")));
                }
            }
            let policy = match degenerate {
                PolicySpec::Fail => DegeneratePolicy::Fail,
                PolicySpec::Flag => DegeneratePolicy::Flag,
            };
            seminorm = Some(build_seminorm(system, s, &format!("{path}.seminorm"))?.with_policy(policy));
        }
        AnalysisSpec::Spectrum {
            frame,
            seminorm: s,
            horizon,
            interval,
            tolerance,
            integrator,
            ..
        } => {
            positive(&path, "horizon", *horizon)?;
            positive(&path, "interval", *interval)?;
            positive(&path, "tolerance", *tolerance)?;
            check_integrator(&path, integrator)?;
            if let Some(f) = frame {
                if f.is_empty() || f.len() > dim || f.iter().any(|v| v.len() != dim) {
                    return Err(config(format!("{path}.frame"), format!("expected 1..={dim} vectors of length {dim}")));
                }
            }
            let family = build_seminorm(system, s, &format!("{path}.seminorm"))?;
            if family.is_degenerate(dim) {
                return Err(config(
                    format!("{path}.seminorm"),
                    "spectra need a nondegenerate seminorm family",
                ));
            }
            seminorm = Some(family);
        }
        AnalysisSpec::LocalStability {
            t_end,
            samples,
            tolerance,
            integrator,
            ..
        } => {
            if system.config_dim().is_none() {
                return Err(config(&path, "local stability needs a second-order system"));
            }
            positive(&path, "t_end", *t_end)?;
            positive(&path, "samples", *samples as f64)?;
            positive(&path, "tolerance", *tolerance)?;
            check_integrator(&path, integrator)?;
        }
        AnalysisSpec::JacobiTranslate {
            constant,
            tau_end,
            samples,
            integrator,
            energy,
            ..
        } => {
            if !matches!(system, System::Natural(_)) {
                return Err(config(&path, "the Jacobi translation needs a `natural` system"));
            }
            if !energy.is_finite() {
                return Err(config(format!("{path}.energy"), "energy must be finite"));
            }
            positive(&path, "constant", *constant)?;
            positive(&path, "tau_end", *tau_end)?;
            positive(&path, "samples", *samples as f64)?;
            check_integrator(&path, integrator)?;
        }
        AnalysisSpec::Compare {
            energy,
            constant,
            horizon,
            interval,
            global_tolerance,
            local_tolerance,
            round_trip_horizon,
            integrator,
            ..
        } => {
            if !matches!(system, System::Natural(_)) {
                return Err(config(&path, "comparison needs a `natural` system"));
            }
            if !energy.is_finite() {
                return Err(config(format!("{path}.energy"), "energy must be finite"));
            }
            positive(&path, "constant", *constant)?;
            positive(&path, "horizon", *horizon)?;
            positive(&path, "interval", *interval)?;
            positive(&path, "global_tolerance", *global_tolerance)?;
            positive(&path, "local_tolerance", *local_tolerance)?;
            positive(&path, "round_trip_horizon", *round_trip_horizon)?;
            check_integrator(&path, integrator)?;
        }
    }
    Ok(Task {
        index,
        spec: spec.clone(),
        seminorm,
    })
}

/// Checks the whole scenario without integrating anything. `base` is the
/// directory relative output paths are resolved against.
pub fn plan(scenario: &Scenario, base: &Path) -> Result<Plan, CliError> {
    let system = build_system(&scenario.system)?;
    let items = scenario.analysis.items();
    if items.is_empty() {
        return Err(config("analysis", "at least one analysis is required"));
    }
    let analyses = items
        .iter()
        .enumerate()
        .map(|(i, a)| check_task(&system, i, a))
        .collect::<Result<Vec<_>, _>>()?;
    if scenario.output.report.is_empty() || scenario.output.report.contains(['/', '\\']) {
        return Err(config("output.report", "must be a plain file name"));
    }
    Ok(Plan {
        name: scenario.name.clone().unwrap_or_else(|| "scenario".into()),
        seed: scenario.seed,
        system,
        analyses,
        output_dir: base.join(&scenario.output.directory),
        report: scenario.output.report.clone(),
        csv: scenario.output.csv,
    })
}
