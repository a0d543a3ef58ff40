use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use geostab_cli::output::{to_json_string, write_file};
use geostab_cli::{examples, run_file, validate_file, CliError};
use serde_json::json;

#[derive(Parser)]
#[command(name = "geostab", version, about = "Geometric stability analysis of dynamical systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every analysis of a scenario and write its report.
    Run {
        scenario: PathBuf,
        /// Write outputs here instead of the scenario's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a scenario without running it.
    Validate { scenario: PathBuf },
    /// Write the built-in scenarios as JSON files.
    Examples {
        #[arg(long, default_value = ".")]
        dir: PathBuf,
        /// Only this example.
        #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(examples::NAMES))]
        name: Option<String>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { scenario, out } => {
            let summary = run_file(&scenario, out.as_deref())?;
            let files: Vec<String> = std::iter::once(&summary.report)
                .chain(&summary.files)
                .map(|p| p.display().to_string())
                .collect();
            print!("{}", to_json_string(&json!({ "status": "ok", "files": files })));
        }
        Command::Validate { scenario } => print!("{}", to_json_string(&validate_file(&scenario)?)),
        Command::Examples { dir, name } => {
            std::fs::create_dir_all(&dir).map_err(|e| CliError::Io {
                path: dir.display().to_string(),
                message: e.to_string(),
            })?;
            let list = match &name {
                Some(n) => examples::example(n).unwrap_or_default(),
                None => examples::all(),
            };
            for s in list {
                let file = dir.join(format!("{}.json", s.name.as_deref().unwrap_or("scenario")));
                let text = serde_json::to_string_pretty(&s).expect("scenario serializes") + "\n";
                write_file(&file, &text)?;
                println!("{}", file.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprint!("{}", to_json_string(&e.to_json()));
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
