//! Execution of checked analyses.

use geostab::flow::{integrate, Flow, IntegratorSettings, Trajectory};
use geostab::kcc::{classify_local_stability, eigen_track, FlowSpray, LocalOperator, SprayData};
use geostab::lyapunov::{classify_global_stability, lyapunov_exponent, lyapunov_spectrum, LyapunovSettings};
use geostab::maupertuis::{boundary_diagnostics, compare_stability, translate_trajectory, CompareSettings, JacobiTranslation};
use geostab::numeric::{eigenvalues, Matrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::output::{Cell, Table};
use crate::scenario::{AnalysisSpec, OperatorSpec, SeminormSpec, System, Task};

type Result<T> = std::result::Result<T, geostab::Error>;

pub struct AnalysisOutput {
    pub result: Value,
    pub tables: Vec<Table>,
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

fn grid(end: f64, samples: usize) -> Vec<f64> {
    (0..=samples).map(|k| end * k as f64 / samples as f64).collect()
}

fn state_names(system: &System) -> Vec<String> {
    system.state_symbols().variables().to_vec()
}

fn trajectory_table(name: &str, parameter: &str, columns: &[String], traj: &Trajectory) -> Table {
    let mut header = vec![parameter.to_string()];
    header.extend(columns.iter().cloned());
    let mut t = Table::new(name, header);
    for (time, s) in traj.times.iter().zip(&traj.states) {
        t.push_floats(std::iter::once(*time).chain(s.iter().copied()));
    }
    t
}

fn spectrum_table(name: &str, exponents: &[f64]) -> Table {
    let mut t = Table::new(name, vec!["index".into(), "exponent".into()]);
    for (i, &l) in exponents.iter().enumerate() {
        t.push(vec![Cell::Int(i), Cell::Float(l)]);
    }
    t
}

fn matrix_rows(m: &Matrix<f64>) -> Value {
    to_value(&m.to_rows())
}

fn run_with_flow<F: Flow>(
    flow: &F,
    system: &System,
    task: &Task,
    seed: u64,
) -> Result<AnalysisOutput> {
    let names = state_names(system);
    match &task.spec {
        AnalysisSpec::Simulate {
            initial,
            t_end,
            samples,
            integrator,
        } => {
            let s = integrator.settings().with_times(grid(*t_end, *samples));
            let traj = integrate(flow, initial, (0.0, *t_end), &s)?;
            let mut table = trajectory_table("trajectory", "t", &names, &traj);
            let mut result = json!({
                "samples": traj.len(),
                "final_time": traj.last_time(),
                "final_state": traj.last_state(),
                "events": to_value(&traj.events),
            });
            if let Some(energy) = energy_fn(system) {
                let values = traj
                    .states
                    .iter()
                    .map(|s| energy(s))
                    .collect::<Result<Vec<f64>>>()?;
                let drift = values.iter().map(|e| (e - values[0]).abs()).fold(0.0, f64::max);
                result["energy"] = json!({ "initial": values[0], "max_drift": drift });
                table.header.push("energy".into());
                for (row, e) in table.rows.iter_mut().zip(values) {
                    row.push(Cell::Float(e));
                }
            }
            Ok(AnalysisOutput {
                result,
                tables: vec![table],
            })
        }
        AnalysisSpec::Lyapunov {
            initial,
            perturbation,
            seminorm,
            horizon,
            interval,
            tolerance,
            integrator,
            ..
        } => {
            let xi0 = match perturbation {
                Some(p) => p.clone(),
                None => {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(task.index as u64));
                    (0..initial.len()).map(|_| rng.gen_range(-1.0..1.0)).collect()
                }
            };
            let family = task.seminorm.as_ref().expect("checked at planning");
            let ls = LyapunovSettings::new(*horizon, *interval).with_integrator(integrator.settings());
            let est = lyapunov_exponent(flow, initial, &xi0, family, &ls)?;
            let mut series = Table::new("series", vec!["t".into(), "estimate".into()]);
            for &(t, v) in &est.series {
                series.push_floats([t, v]);
            }
            Ok(AnalysisOutput {
                result: json!({
                    "seminorm": seminorm_name(seminorm),
                    "perturbation": xi0,
                    "exponent": est.value,
                    "spread": est.spread,
                    "renormalizations": est.renormalizations,
                    "flags": est.flags,
                    "verdict": to_value(&classify_global_stability(&[est.value], *tolerance)),
                }),
                tables: vec![series],
            })
        }
        AnalysisSpec::Spectrum {
            initial,
            frame,
            seminorm,
            horizon,
            interval,
            tolerance,
            integrator,
        } => {
            let dim = initial.len();
            let frame0 = frame.clone().unwrap_or_else(|| {
                (0..dim)
                    .map(|k| (0..dim).map(|j| if j == k { 1.0 } else { 0.0 }).collect())
                    .collect()
            });
            let family = task.seminorm.as_ref().expect("checked at planning");
            let ls = LyapunovSettings::new(*horizon, *interval).with_integrator(integrator.settings());
            let est = lyapunov_spectrum(flow, initial, &frame0, family, &ls)?;
            let mut header = vec!["t".to_string()];
            header.extend((1..=est.exponents.len()).map(|k| format!("lambda{k}")));
            let mut series = Table::new("series", header);
            for (t, v) in &est.series {
                series.push_floats(std::iter::once(*t).chain(v.iter().copied()));
            }
            Ok(AnalysisOutput {
                result: json!({
                    "seminorm": seminorm_name(seminorm),
                    "exponents": est.exponents,
                    "spread": est.spread,
                    "renormalizations": est.renormalizations,
                    "verdict": to_value(&classify_global_stability(&est.exponents, *tolerance)),
                }),
                tables: vec![spectrum_table("spectrum", &est.exponents), series],
            })
        }
        AnalysisSpec::LocalStability {
            initial,
            t_end,
            samples,
            operator,
            tolerance,
            integrator,
        } => {
            let s = integrator.settings().with_times(grid(*t_end, *samples));
            let traj = integrate(flow, initial, (0.0, *t_end), &s)?;
            let op = match operator {
                OperatorSpec::Deviation => LocalOperator::Deviation,
                OperatorSpec::Rtilde => LocalOperator::RTilde,
            };
            match system {
                System::Natural(n) => local_report(n, &traj, op, *tolerance),
                System::Lagrangian(l) => local_report(l, &traj, op, *tolerance),
                System::Flow(f) => local_report(&FlowSpray::new(f)?, &traj, op, *tolerance),
            }
        }
        AnalysisSpec::JacobiTranslate { .. } | AnalysisSpec::Compare { .. } => {
            let System::Natural(nat) = system else {
                return Err(geostab::Error::InvalidSettings("needs a natural system".into()));
            };
            maupertuis_analysis(nat, task)
        }
    }
}

fn seminorm_name(s: &SeminormSpec) -> &'static str {
    match s {
        SeminormSpec::Euclidean => "euclidean",
        SeminormSpec::VerticalLift => "vertical-lift",
        SeminormSpec::LagrangeMetric => "lagrange-metric",
        SeminormSpec::LagrangeLift => "lagrange-lift",
        SeminormSpec::Custom { .. } => "custom",
    }
}

type EnergyFn<'a> = Box<dyn Fn(&[f64]) -> Result<f64> + 'a>;

fn energy_fn(system: &System) -> Option<EnergyFn<'_>> {
    match system {
        System::Flow(_) => None,
        System::Lagrangian(l) => {
            let n = l.dim();
            Some(Box::new(move |s| l.energy(&s[..n], &s[n..])))
        }
        System::Natural(nat) => {
            let n = nat.dim();
            Some(Box::new(move |s| nat.energy(&s[..n], &s[n..])))
        }
    }
}

fn local_report<S: SprayData>(spray: &S, traj: &Trajectory, op: LocalOperator, tol: f64) -> Result<AnalysisOutput> {
    let n = spray.dim();
    let track = eigen_track(spray, traj, op)?;
    let verdict = classify_local_stability(&track, tol)?;
    let (x0, u0) = (&traj.states[0][..n], &traj.states[0][n..2 * n]);
    let initial = match op {
        LocalOperator::Deviation => geostab::kcc::deviation_tensor_p(spray, x0, u0)?,
        LocalOperator::RTilde => geostab::kcc::rtilde_operator(spray, x0, u0)?,
    };
    let width = track.first().map_or(0, |e| e.len());
    let mut header = vec!["t".to_string()];
    for k in 1..=width {
        header.push(format!("re{k}"));
        header.push(format!("im{k}"));
    }
    let mut table = Table::new("eigenvalues", header);
    for (t, set) in traj.times.iter().zip(&track) {
        table.push_floats(std::iter::once(*t).chain(set.iter().flat_map(|&(re, im)| [re, im])));
    }
    let first: Vec<[f64; 2]> = eigenvalues(&initial)?.iter().map(|&(re, im)| [re, im]).collect();
    Ok(AnalysisOutput {
        result: json!({
            "operator": to_value(&op),
            "verdict": to_value(&verdict),
            "initial_operator": matrix_rows(&initial),
            "initial_eigenvalues": first,
            "samples": traj.len(),
        }),
        tables: vec![table],
    })
}

fn maupertuis_analysis(nat: &geostab::lagrangian::NaturalLagrangian, task: &Task) -> Result<AnalysisOutput> {
    let n = nat.dim();
    match &task.spec {
        AnalysisSpec::JacobiTranslate {
            initial,
            energy,
            constant,
            tau_end,
            samples,
            integrator,
        } => {
            let (x0, u0) = initial.split_at(n);
            let tr = JacobiTranslation::new(nat.clone(), *energy, *constant)?;
            let settings: IntegratorSettings = integrator.settings();
            let diag = boundary_diagnostics(&tr, x0, u0, *tau_end, &settings)?;
            let mut result = json!({
                "energy": energy,
                "constant": constant,
                "gap_at_start": tr.gap(x0)?,
                "boundary": to_value(&diag),
            });
            let mut tables = Vec::new();
            let mut ricci = Table::new("ricci", vec!["gap".into(), "ricci".into()]);
            for s in &diag.ricci_samples {
                ricci.push_floats([s.gap, s.ricci]);
            }
            tables.push(ricci);
            if !diag.fixed_point && diag.tau_hit != Some(0.0) {
                result["metric_at_start"] = matrix_rows(&tr.metric_at(x0)?);
                result["time_rate_at_start"] = json!(tr.time_rate(x0)?);
                let y0 = tr.geodesic_initial(x0, u0)?;
                let run = tr.integrate_geodesic(&y0, *tau_end, &settings.with_times(grid(*tau_end, *samples)))?;
                let mut columns: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
                columns.extend((1..=n).map(|i| format!("v{i}")));
                tables.push(trajectory_table("geodesic", "tau", &columns, &run.trajectory));
                let back = translate_trajectory(&tr, &run.trajectory)?;
                let mut columns: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
                columns.extend((1..=n).map(|i| format!("u{i}")));
                tables.push(trajectory_table("translated", "t", &columns, &back));
                result["geodesic"] = json!({
                    "samples": run.trajectory.len(),
                    "tau_reached": run.trajectory.last_time(),
                    "events": to_value(&run.trajectory.events),
                });
                result["translated"] = json!({
                    "samples": back.len(),
                    "t_reached": if back.is_empty() { 0.0 } else { back.last_time() },
                });
            }
            Ok(AnalysisOutput { result, tables })
        }
        AnalysisSpec::Compare {
            initial,
            energy,
            constant,
            horizon,
            interval,
            global_tolerance,
            local_tolerance,
            round_trip_horizon,
            integrator,
        } => {
            let (x0, u0) = initial.split_at(n);
            let settings = CompareSettings {
                constant: *constant,
                lyapunov: LyapunovSettings::new(*horizon, *interval).with_integrator(integrator.settings()),
                global_tolerance: *global_tolerance,
                local_tolerance: *local_tolerance,
                round_trip_horizon: *round_trip_horizon,
            };
            let report = compare_stability(nat, *energy, x0, u0, &settings)?;
            let mut tables = vec![spectrum_table("intrinsic-spectrum", &report.intrinsic.exponents)];
            if let Some(ex) = report.geodesic.as_ref().and_then(|g| g.exponents.as_ref()) {
                tables.push(spectrum_table("geodesic-spectrum", ex));
            }
            Ok(AnalysisOutput {
                result: to_value(&report),
                tables,
            })
        }
        _ => unreachable!("dispatched on kind"),
    }
}

/// Runs one checked analysis of `system`.
pub fn run_task(system: &System, task: &Task, seed: u64) -> Result<AnalysisOutput> {
    match system {
        System::Flow(f) => run_with_flow(f, system, task, seed),
        System::Lagrangian(l) => run_with_flow(&l.semispray(), system, task, seed),
        System::Natural(n) => run_with_flow(&n.spray(), system, task, seed),
    }
}
