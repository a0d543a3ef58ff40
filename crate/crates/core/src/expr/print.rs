use std::fmt::{self, Write};

use super::symbols::SymbolTable;
use super::{BinOp, Node};

const ATOM: u8 = 5;
const POW: u8 = 4;
const NEG: u8 = 3;
const MUL: u8 = 2;
const ADD: u8 = 1;

fn precedence(node: &Node) -> u8 {
    match node {
        Node::Const(_) | Node::Var(_) | Node::Param(_) | Node::Call(..) => ATOM,
        Node::Neg(_) => NEG,
        Node::Binary(BinOp::Pow, ..) => POW,
        Node::Binary(BinOp::Mul | BinOp::Div, ..) => MUL,
        Node::Binary(BinOp::Add | BinOp::Sub, ..) => ADD,
    }
}

fn write_const(f: &mut impl Write, v: f64) -> fmt::Result {
    let a = v.abs();
    if a != 0.0 && !(1e-4..1e16).contains(&a) {
        write!(f, "{v:e}")
    } else {
        write!(f, "{v}")
    }
}

fn child(f: &mut impl Write, node: &Node, symbols: &SymbolTable, parens: bool) -> fmt::Result {
    if parens {
        f.write_char('(')?;
        write_node(f, node, symbols)?;
        f.write_char(')')
    } else {
        write_node(f, node, symbols)
    }
}

/// Writes the tree with the fewest parentheses that re-parse to the same
/// tree.
pub(crate) fn write_node(f: &mut impl Write, node: &Node, symbols: &SymbolTable) -> fmt::Result {
    match node {
        Node::Const(v) => write_const(f, *v),
        Node::Var(i) => f.write_str(&symbols.variables()[*i]),
        Node::Param(i) => f.write_str(&symbols.parameters()[*i].0),
        Node::Neg(a) => {
            f.write_char('-')?;
            child(f, a, symbols, precedence(a) < NEG)
        }
        Node::Call(func, a) => {
            write!(f, "{}(", func.name())?;
            write_node(f, a, symbols)?;
            f.write_char(')')
        }
        Node::Binary(op, a, b) => {
            let (sym, left, right) = match op {
                BinOp::Add => (" + ", precedence(a) < ADD, precedence(b) <= ADD),
                BinOp::Sub => (" - ", precedence(a) < ADD, precedence(b) <= ADD),
                BinOp::Mul => ("*", precedence(a) < MUL, precedence(b) <= MUL),
                BinOp::Div => ("/", precedence(a) < MUL, precedence(b) <= MUL),
                BinOp::Pow => ("^", precedence(a) <= POW, precedence(b) < NEG),
            };
            child(f, a, symbols, left)?;
            f.write_str(sym)?;
            child(f, b, symbols, right)
        }
    }
}
