use serde_json::{json, Value};

use crate::scenario::SCHEMA_VERSION;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {message}")]
    Config {
        path: String,
        message: String,
        line: Option<usize>,
        column: Option<usize>,
    },

    #[error("{path}: {message}")]
    Io { path: String, message: String },

    #[error("analysis[{index}] ({kind}): {source}")]
    Numerical {
        index: usize,
        kind: &'static str,
        source: geostab::Error,
    },
}

impl CliError {
    /// Errors from the library that stem from the scenario rather than the
    /// numerics are reported as configuration errors.
    pub fn from_library(index: usize, kind: &'static str, source: geostab::Error) -> Self {
        use geostab::Error as E;
        match source.root() {
            E::Parse(_)
            | E::InvalidSettings(_)
            | E::DimensionMismatch(_)
            | E::EnergyMismatch { .. }
            | E::AsymmetricMetric { .. }
            | E::DegenerateStart
            | E::DegenerateSeminorm => CliError::Config {
                path: format!("analysis[{index}]"),
                message: source.to_string(),
                line: None,
                column: None,
            },
            _ => CliError::Numerical { index, kind, source },
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } | CliError::Io { .. } => 2,
            CliError::Numerical { .. } => 3,
        }
    }

    pub fn category(&self) -> &'static str {
        match self {
            CliError::Config { .. } => "configuration",
            CliError::Io { .. } => "io",
            CliError::Numerical { .. } => "numerical",
        }
    }

    /// The structured object written to stderr.
    pub fn to_json(&self) -> Value {
        let mut err = json!({
            "category": self.category(),
            "message": self.to_string(),
        });
        let obj = err.as_object_mut().expect("object literal");
        match self {
            CliError::Config { path, line, column, .. } => {
                obj.insert("kind".into(), json!("ConfigError"));
                obj.insert("path".into(), json!(path));
                if let (Some(l), Some(c)) = (line, column) {
                    obj.insert("location".into(), json!({ "line": l, "column": c }));
                }
            }
            CliError::Io { path, .. } => {
                obj.insert("kind".into(), json!("IoError"));
                obj.insert("path".into(), json!(path));
            }
            CliError::Numerical { index, kind, source } => {
                obj.insert("kind".into(), json!(source.root().kind()));
                obj.insert("module_error".into(), json!(source.kind()));
                obj.insert("analysis".into(), json!({ "index": index, "kind": kind }));
                if let geostab::Error::Evaluation { t, state, .. } = source {
                    obj.insert("trajectory".into(), json!({ "t": t, "state": state }));
                }
            }
        }
        json!({ "schema_version": SCHEMA_VERSION, "error": err })
    }
}
