use std::sync::Arc;

use super::{parser, Func, Node, ParseError};

/// Names an expression may refer to: positional variables, named constant
/// parameters, and definitions that are inlined at parse time.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SymbolTable {
    variables: Vec<String>,
    parameters: Vec<(String, f64)>,
    definitions: Vec<(String, Node)>,
}

/// Identifiers that can never be declared.
pub const RESERVED: [&str; 1] = ["pi"];

impl SymbolTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_variables<S: AsRef<str>>(names: &[S]) -> Result<Self, ParseError> {
        let mut t = SymbolTable::new();
        for n in names {
            t.add_variable(n.as_ref())?;
        }
        Ok(t)
    }

    /// `x1..xn`.
    pub fn configuration(n: usize) -> Self {
        let names: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
        Self::with_variables(&names).expect("generated names are unique")
    }

    /// `x1..xn, u1..un`.
    pub fn phase(n: usize) -> Self {
        let names: Vec<String> = (1..=n)
            .map(|i| format!("x{i}"))
            .chain((1..=n).map(|i| format!("u{i}")))
            .collect();
        Self::with_variables(&names).expect("generated names are unique")
    }

    /// A copy of this table with extra variables appended after the existing
    /// ones. Parameters and definitions are kept.
    pub fn extended<S: AsRef<str>>(&self, extra: &[S]) -> Result<Self, ParseError> {
        let mut t = self.clone();
        for n in extra {
            t.add_variable(n.as_ref())?;
        }
        Ok(t)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.variables.iter().any(|v| v == name)
            || self.parameters.iter().any(|(p, _)| p == name)
            || self.definitions.iter().any(|(d, _)| d == name)
    }

    fn check_new(&self, name: &str) -> Result<(), ParseError> {
        let valid = name
            .chars()
            .next()
            .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
            && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
        if !valid {
            return Err(ParseError::Syntax {
                offset: 0,
                message: format!("`{name}` is not a valid identifier"),
            });
        }
        if self.contains(name) || RESERVED.contains(&name) || Func::from_name(name).is_some() {
            return Err(ParseError::DuplicateSymbol { name: name.into() });
        }
        Ok(())
    }

    pub fn add_variable(&mut self, name: &str) -> Result<usize, ParseError> {
        self.check_new(name)?;
        self.variables.push(name.into());
        Ok(self.variables.len() - 1)
    }

    pub fn add_parameter(&mut self, name: &str, value: f64) -> Result<usize, ParseError> {
        self.check_new(name)?;
        if !value.is_finite() {
            return Err(ParseError::NonFiniteParameter { name: name.into() });
        }
        self.parameters.push((name.into(), value));
        Ok(self.parameters.len() - 1)
    }

    /// Declares `name` as shorthand for `text`, parsed against the symbols
    /// known so far.
    pub fn define(&mut self, name: &str, text: &str) -> Result<(), ParseError> {
        self.check_new(name)?;
        let node = parser::parse(text, &Arc::new(self.clone()))?;
        self.definitions.push((name.into(), node));
        Ok(())
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn parameters(&self) -> &[(String, f64)] {
        &self.parameters
    }

    pub fn num_variables(&self) -> usize {
        self.variables.len()
    }

    pub fn num_parameters(&self) -> usize {
        self.parameters.len()
    }

    pub fn variable_index(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v == name)
    }

    pub fn parameter_index(&self, name: &str) -> Option<usize> {
        self.parameters.iter().position(|(p, _)| p == name)
    }

    pub fn parameter_value(&self, index: usize) -> f64 {
        self.parameters[index].1
    }

    pub(crate) fn definition(&self, name: &str) -> Option<&Node> {
        self.definitions.iter().find(|(d, _)| d == name).map(|(_, n)| n)
    }

    /// True when `base` variables are a prefix of ours and parameters agree,
    /// so trees parsed against `base` mean the same thing here.
    pub fn extends(&self, base: &SymbolTable) -> bool {
        self.variables.len() >= base.variables.len()
            && self.variables[..base.variables.len()] == base.variables[..]
            && self.parameters == base.parameters
    }
}
