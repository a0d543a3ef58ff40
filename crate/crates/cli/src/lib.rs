//! Batch front-end for `geostab`: scenario files in, JSON reports and CSV
//! tables out.

pub mod analysis;
pub mod error;
pub mod examples;
pub mod output;
pub mod scenario;

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde_json::{json, Value};

pub use error::CliError;
use output::{to_json_string, write_file};
pub use scenario::{load, parse_scenario, plan, Plan, Scenario, SCHEMA_VERSION};

/// Upper bound on concurrently running analyses.
pub fn thread_budget() -> usize {
    std::env::var("GEOSTAB_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

#[derive(Debug)]
pub struct RunSummary {
    pub report: PathBuf,
    pub files: Vec<PathBuf>,
    pub value: Value,
}

/// Executes every analysis of `plan` and writes the report and tables.
pub fn execute(plan: &Plan, threads: usize) -> Result<RunSummary, CliError> {
    let count = plan.analyses.len();
    let slots: Mutex<Vec<Option<Result<analysis::AnalysisOutput, CliError>>>> =
        Mutex::new((0..count).map(|_| None).collect());
    let next = AtomicUsize::new(0);
    let workers = threads.clamp(1, count.max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= count {
                    break;
                }
                let task = &plan.analyses[i];
                let out = analysis::run_task(&plan.system, task, plan.seed)
                    .map_err(|e| CliError::from_library(i, task.spec.kind(), e));
                slots.lock().expect("worker panicked")[i] = Some(out);
            });
        }
    });
    let outputs = slots
        .into_inner()
        .expect("worker panicked")
        .into_iter()
        .map(|o| o.expect("every slot filled"))
        .collect::<Result<Vec<_>, _>>()?;

    std::fs::create_dir_all(&plan.output_dir).map_err(|e| CliError::Io {
        path: plan.output_dir.display().to_string(),
        message: e.to_string(),
    })?;
    let mut files = Vec::new();
    let mut entries = Vec::new();
    for (task, out) in plan.analyses.iter().zip(outputs) {
        let mut names = Vec::new();
        if plan.csv {
            for table in &out.tables {
                let name = format!("{:02}-{}-{}.csv", task.index, task.spec.kind(), table.name);
                let path = plan.output_dir.join(&name);
                write_file(&path, &table.to_csv())?;
                files.push(path);
                names.push(name);
            }
        }
        entries.push(json!({
            "index": task.index,
            "kind": task.spec.kind(),
            "files": names,
            "result": out.result,
        }));
    }
    let value = json!({
        "schema_version": SCHEMA_VERSION,
        "scenario": plan.name,
        "seed": plan.seed,
        "system": {
            "variant": plan.system.variant(),
            "state_dimension": plan.system.state_dim(),
            "configuration_dimension": plan.system.config_dim(),
        },
        "analyses": entries,
    });
    let report = plan.output_dir.join(&plan.report);
    write_file(&report, &to_json_string(&value))?;
    Ok(RunSummary { report, files, value })
}

fn base_dir(path: &Path) -> PathBuf {
    path.parent()
        .filter(|p| !p.as_os_str().is_empty())
        .map_or_else(|| PathBuf::from("."), Path::to_path_buf)
}

/// Loads, checks and runs a scenario file. `out_dir` overrides the output
/// directory of the scenario.
pub fn run_file(path: &Path, out_dir: Option<&Path>) -> Result<RunSummary, CliError> {
    let scenario = load(path)?;
    let mut plan = plan(&scenario, &base_dir(path))?;
    if let Some(dir) = out_dir {
        plan.output_dir = dir.to_path_buf();
    }
    execute(&plan, thread_budget())
}

/// Loads and checks a scenario file without running it.
pub fn validate_file(path: &Path) -> Result<Value, CliError> {
    let scenario = load(path)?;
    let plan = plan(&scenario, &base_dir(path))?;
    Ok(json!({
        "schema_version": SCHEMA_VERSION,
        "valid": true,
        "scenario": plan.name,
        "system": plan.system.variant(),
        "analyses": plan.analyses.iter().map(|t| t.spec.kind()).collect::<Vec<_>>(),
    }))
}
