//! Expression language for flows, metrics, Lagrangians and potentials.
//!
//! Expressions are parsed against a [`SymbolTable`] of positional variables,
//! named parameters and inlined definitions, and are evaluated at any
//! [`Scalar`](crate::numeric::Scalar) type so dual numbers flow through them.

mod eval;
mod parser;
mod print;
mod symbols;

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

pub use symbols::SymbolTable;

use crate::error::Result;
use crate::numeric::{Scalar, ScalarField};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Abs,
    Step,
}

impl Func {
    pub const ALL: [Func; 7] = [
        Func::Sin,
        Func::Cos,
        Func::Exp,
        Func::Log,
        Func::Sqrt,
        Func::Abs,
        Func::Step,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Step => "step",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

/// Expression tree node. Variables and parameters refer to positions in the
/// symbol table.
#[derive(Clone, Debug, PartialEq)]
pub enum Node {
    Const(f64),
    Var(usize),
    Param(usize),
    Neg(Box<Node>),
    Call(Func, Box<Node>),
    Binary(BinOp, Box<Node>, Box<Node>),
}

impl Node {
    /// A constant; negative values become `Neg(Const)` so that printing and
    /// re-parsing reproduce the same tree.
    pub fn constant(c: f64) -> Node {
        if c < 0.0 || (c == 0.0 && c.is_sign_negative()) {
            Node::Neg(Box::new(Node::Const(-c)))
        } else {
            Node::Const(c)
        }
    }

    pub fn binary(op: BinOp, a: Node, b: Node) -> Node {
        Node::Binary(op, Box::new(a), Box::new(b))
    }

    pub fn call(f: Func, a: Node) -> Node {
        Node::Call(f, Box::new(a))
    }

    pub fn negate(a: Node) -> Node {
        Node::Neg(Box::new(a))
    }

    /// True when the subtree contains no variables.
    pub fn is_constant(&self) -> bool {
        match self {
            Node::Const(_) | Node::Param(_) => true,
            Node::Var(_) => false,
            Node::Neg(a) | Node::Call(_, a) => a.is_constant(),
            Node::Binary(_, a, b) => a.is_constant() && b.is_constant(),
        }
    }

    fn collect_vars(&self, out: &mut BTreeSet<usize>) {
        match self {
            Node::Var(i) => {
                out.insert(*i);
            }
            Node::Const(_) | Node::Param(_) => {}
            Node::Neg(a) | Node::Call(_, a) => a.collect_vars(out),
            Node::Binary(_, a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    fn max_param(&self) -> Option<usize> {
        match self {
            Node::Param(i) => Some(*i),
            Node::Const(_) | Node::Var(_) => None,
            Node::Neg(a) | Node::Call(_, a) => a.max_param(),
            Node::Binary(_, a, b) => a.max_param().max(b.max_param()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("unknown symbol `{name}` at byte {offset}")]
    UnknownSymbol { name: String, offset: usize },

    #[error("symbol `{name}` is already declared or reserved")]
    DuplicateSymbol { name: String },

    #[error("parameter `{name}` must be a finite number")]
    NonFiniteParameter { name: String },
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("domain error in `{node}`: {reason} (argument {value})")]
    Domain {
        node: String,
        reason: &'static str,
        value: f64,
    },

    #[error("expression expects {expected} variables, got {got}")]
    Arity { expected: usize, got: usize },

    #[error("no binding for symbol `{0}`")]
    Unbound(String),
}

/// A parsed, immutable expression together with the table it refers to.
#[derive(Clone, Debug)]
pub struct Expression {
    root: Arc<Node>,
    symbols: Arc<SymbolTable>,
}

impl PartialEq for Expression {
    fn eq(&self, other: &Self) -> bool {
        self.root == other.root && self.symbols == other.symbols
    }
}

impl Expression {
    pub fn parse(text: &str, symbols: &Arc<SymbolTable>) -> Result<Expression, ParseError> {
        let root = parser::parse(text, symbols)?;
        Ok(Expression {
            root: Arc::new(root),
            symbols: Arc::clone(symbols),
        })
    }

    /// Wraps a programmatically built tree. Panics if the tree refers to
    /// symbols outside the table.
    pub fn from_node(root: Node, symbols: &Arc<SymbolTable>) -> Expression {
        let mut vars = BTreeSet::new();
        root.collect_vars(&mut vars);
        assert!(
            vars.iter().all(|&v| v < symbols.num_variables()),
            "expression refers to an undeclared variable"
        );
        assert!(
            root.max_param().is_none_or(|p| p < symbols.num_parameters()),
            "expression refers to an undeclared parameter"
        );
        Expression {
            root: Arc::new(root),
            symbols: Arc::clone(symbols),
        }
    }

    pub fn constant(c: f64, symbols: &Arc<SymbolTable>) -> Expression {
        Expression::from_node(Node::constant(c), symbols)
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn symbols(&self) -> &Arc<SymbolTable> {
        &self.symbols
    }

    pub fn arity(&self) -> usize {
        self.symbols.num_variables()
    }

    /// Indices of the variables that occur in the tree.
    pub fn variables_used(&self) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        self.root.collect_vars(&mut out);
        out
    }

    pub fn is_constant(&self) -> bool {
        self.root.is_constant()
    }

    /// Evaluates at positional variable values.
    pub fn eval<T: Scalar>(&self, vars: &[T]) -> Result<T, EvalError> {
        if vars.len() != self.arity() {
            return Err(EvalError::Arity {
                expected: self.arity(),
                got: vars.len(),
            });
        }
        eval::eval(&self.root, vars, &self.symbols)
    }

    /// Evaluates with variables bound by name.
    pub fn evaluate(&self, bindings: &HashMap<String, f64>) -> Result<f64, EvalError> {
        let vars = self
            .symbols
            .variables()
            .iter()
            .map(|name| {
                bindings
                    .get(name)
                    .copied()
                    .ok_or_else(|| EvalError::Unbound(name.clone()))
            })
            .collect::<Result<Vec<f64>, _>>()?;
        self.eval(&vars)
    }

    /// The same tree interpreted against a table that extends this one
    /// (same parameters, variables as a prefix).
    pub fn rebind(&self, table: &Arc<SymbolTable>) -> Option<Expression> {
        if !table.extends(&self.symbols) {
            return None;
        }
        Some(Expression {
            root: Arc::clone(&self.root),
            symbols: Arc::clone(table),
        })
    }

    fn combine(&self, op: BinOp, other: &Expression) -> Expression {
        assert!(
            Arc::ptr_eq(&self.symbols, &other.symbols) || self.symbols == other.symbols,
            "expressions use different symbol tables"
        );
        Expression {
            root: Arc::new(Node::binary(op, (*self.root).clone(), (*other.root).clone())),
            symbols: Arc::clone(&self.symbols),
        }
    }

    pub fn add(&self, other: &Expression) -> Expression {
        self.combine(BinOp::Add, other)
    }

    pub fn sub(&self, other: &Expression) -> Expression {
        self.combine(BinOp::Sub, other)
    }

    pub fn mul(&self, other: &Expression) -> Expression {
        self.combine(BinOp::Mul, other)
    }

    pub fn div(&self, other: &Expression) -> Expression {
        self.combine(BinOp::Div, other)
    }

    pub fn apply(&self, f: Func) -> Expression {
        Expression {
            root: Arc::new(Node::call(f, (*self.root).clone())),
            symbols: Arc::clone(&self.symbols),
        }
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        print::write_node(f, &self.root, &self.symbols)
    }
}

impl ScalarField for Expression {
    fn arity(&self) -> usize {
        Expression::arity(self)
    }

    fn eval<T: Scalar>(&self, x: &[T]) -> Result<T> {
        Ok(Expression::eval(self, x)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::derive;

    fn table(vars: &[&str]) -> Arc<SymbolTable> {
        Arc::new(SymbolTable::with_variables(vars).unwrap())
    }

    fn eval_str(text: &str, vars: &[&str], at: &[f64]) -> f64 {
        Expression::parse(text, &table(vars)).unwrap().eval(at).unwrap()
    }

    #[test]
    fn precedence() {
        assert_eq!(eval_str("1+2*3", &[], &[]), 7.0);
        assert_eq!(eval_str("2^3^2", &[], &[]), 512.0);
        assert_eq!(eval_str("-2^2", &[], &[]), -4.0);
        assert_eq!(eval_str("2*-3", &[], &[]), -6.0);
        assert_eq!(eval_str("2^-1", &[], &[]), 0.5);
        assert_eq!(eval_str("8/4/2", &[], &[]), 1.0);
        assert_eq!(eval_str("1-2-3", &[], &[]), -4.0);
        assert_eq!(eval_str("(1+2)*3", &[], &[]), 9.0);
    }

    #[test]
    fn simple_values() {
        assert_eq!(eval_str("sin(x1)", &["x1"], &[0.0]), 0.0);
        assert_eq!(eval_str("x1^2", &["x1"], &[3.0]), 9.0);
        assert_eq!(eval_str("2*x1^2 - x1^4", &["x1"], &[0.5]), 0.4375);
        assert_eq!(eval_str("step(x1-1)", &["x1"], &[0.5]), 0.0);
        assert_eq!(eval_str("step(x1-1)", &["x1"], &[1.0]), 1.0);
        assert!((eval_str("cos(pi)", &[], &[]) + 1.0).abs() < 1e-15);
        assert_eq!(eval_str("1.5e-1 * 2E1", &[], &[]), 3.0);
    }

    #[test]
    fn vplus_at_unit_radius() {
        let v = "2*r^2 - r^4 + 2*step(r^2-1)*(r^2-1)^2";
        assert_eq!(eval_str(v, &["r"], &[1.0]), 1.0);
    }

    #[test]
    fn syntax_errors_carry_offsets() {
        let t = table(&["x"]);
        assert_eq!(
            Expression::parse("2x", &t).unwrap_err(),
            ParseError::Syntax {
                offset: 1,
                message: "unexpected identifier `x`".into()
            }
        );
        assert!(matches!(
            Expression::parse("1 + ", &t),
            Err(ParseError::Syntax { offset: 4, .. })
        ));
        assert!(matches!(
            Expression::parse("", &t),
            Err(ParseError::Syntax { offset: 0, .. })
        ));
        assert!(matches!(
            Expression::parse("(x", &t),
            Err(ParseError::Syntax { offset: 2, .. })
        ));
        assert!(matches!(
            Expression::parse("x $ 1", &t),
            Err(ParseError::Syntax { offset: 2, .. })
        ));
        assert!(matches!(Expression::parse("sin x", &t), Err(ParseError::Syntax { .. })));
    }

    #[test]
    fn unknown_symbol() {
        assert_eq!(
            Expression::parse("x + y", &table(&["x"])).unwrap_err(),
            ParseError::UnknownSymbol {
                name: "y".into(),
                offset: 4
            }
        );
        assert!(matches!(
            Expression::parse("foo(x)", &table(&["x"])),
            Err(ParseError::UnknownSymbol { .. })
        ));
    }

    #[test]
    fn domain_errors() {
        let t = table(&["x"]);
        for (text, at) in [
            ("log(x)", 0.0),
            ("log(x)", -1.0),
            ("sqrt(x)", -1.0),
            ("1/x", 0.0),
            ("x^0.5", -2.0),
            ("x^-1", 0.0),
            ("2^x", -0.0),
        ] {
            let e = Expression::parse(text, &t).unwrap();
            let r = e.eval(&[at]);
            if text == "2^x" {
                assert_eq!(r.unwrap(), 1.0);
            } else {
                assert!(matches!(r, Err(EvalError::Domain { .. })), "{text} at {at}: {r:?}");
            }
        }
        let e = Expression::parse("x^x", &t).unwrap();
        assert!(matches!(e.eval(&[-1.0]), Err(EvalError::Domain { .. })));
        assert_eq!(Expression::parse("x^3", &t).unwrap().eval(&[-2.0]).unwrap(), -8.0);
    }

    #[test]
    fn parameters_and_definitions() {
        let mut t = SymbolTable::with_variables(&["x"]).unwrap();
        t.add_parameter("mu", 2.0).unwrap();
        t.define("w", "mu^2*x").unwrap();
        let t = Arc::new(t);
        let e = Expression::parse("w + mu", &t).unwrap();
        assert_eq!(e.eval(&[3.0]).unwrap(), 14.0);
        assert_eq!(e.to_string(), "mu^2*x + mu");
        let mut bad = SymbolTable::with_variables(&["x"]).unwrap();
        assert!(bad.add_parameter("x", 1.0).is_err());
        assert!(bad.add_parameter("sin", 1.0).is_err());
        assert!(bad.add_parameter("q", f64::NAN).is_err());
    }

    #[test]
    fn named_bindings() {
        let e = Expression::parse("x*y", &table(&["x", "y"])).unwrap();
        let b: HashMap<String, f64> = [("x".to_string(), 2.0), ("y".to_string(), 5.0)].into();
        assert_eq!(e.evaluate(&b).unwrap(), 10.0);
        let missing: HashMap<String, f64> = [("x".to_string(), 2.0)].into();
        assert_eq!(e.evaluate(&missing), Err(EvalError::Unbound("y".into())));
    }

    #[test]
    fn printing_is_minimal_and_round_trips() {
        let t = table(&["a", "b", "c"]);
        for text in [
            "a - (b - c)",
            "a - b - c",
            "(a^b)^c",
            "a^b^c",
            "(-a)^2",
            "-a^2",
            "a/(b*c)",
            "a*-b",
            "--a",
            "-(a + b)",
            "a^-b",
            "sin(a)^2",
            "abs(a - b)*step(c)",
        ] {
            let e = Expression::parse(text, &t).unwrap();
            assert_eq!(e.to_string(), text);
            let again = Expression::parse(&e.to_string(), &t).unwrap();
            assert_eq!(again.root(), e.root());
        }
    }

    #[test]
    fn abs_and_step_derivatives() {
        let t = table(&["x"]);
        let abs = Expression::parse("abs(x)", &t).unwrap();
        assert_eq!(derive(&abs, &[-2.0], &[0]).unwrap(), -1.0);
        assert_eq!(derive(&abs, &[0.0], &[0]).unwrap(), 0.0);
        let step = Expression::parse("step(x)*x^2", &t).unwrap();
        assert_eq!(derive(&step, &[1.0], &[0]).unwrap(), 2.0);
        assert_eq!(derive(&step, &[0.0], &[0]).unwrap(), 0.0);
    }

    #[test]
    fn rebind_to_extended_table() {
        let x = table(&["x1"]);
        let xu = table(&["x1", "u1"]);
        let v = Expression::parse("x1^2", &x).unwrap();
        let w = v.rebind(&xu).unwrap();
        assert_eq!(w.eval(&[3.0, 7.0]).unwrap(), 9.0);
        assert!(w.rebind(&x).is_none());
    }
}
