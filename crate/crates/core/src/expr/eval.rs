use super::print::write_node;
use super::symbols::SymbolTable;
use super::{BinOp, EvalError, Func, Node};
use crate::numeric::Scalar;

fn domain(node: &Node, symbols: &SymbolTable, reason: &'static str, value: f64) -> EvalError {
    let mut text = String::new();
    let _ = write_node(&mut text, node, symbols);
    EvalError::Domain {
        node: text,
        reason,
        value,
    }
}

pub(crate) fn eval<T: Scalar>(node: &Node, vars: &[T], symbols: &SymbolTable) -> Result<T, EvalError> {
    match node {
        Node::Const(c) => Ok(T::from_f64(*c)),
        Node::Var(i) => Ok(vars[*i]),
        Node::Param(i) => Ok(T::from_f64(symbols.parameter_value(*i))),
        Node::Neg(a) => Ok(-eval(a, vars, symbols)?),
        Node::Call(f, a) => {
            let x = eval(a, vars, symbols)?;
            let v = x.re();
            match f {
                Func::Sin => Ok(x.sin()),
                Func::Cos => Ok(x.cos()),
                Func::Exp => Ok(x.exp()),
                Func::Abs => Ok(x.abs()),
                Func::Step => Ok(x.step()),
                Func::Log if v > 0.0 => Ok(x.ln()),
                Func::Log => Err(domain(node, symbols, "logarithm of a non-positive number", v)),
                Func::Sqrt if v > 0.0 => Ok(x.sqrt()),
                Func::Sqrt if v == 0.0 => Ok(T::from_f64(0.0) + x * 0.0),
                Func::Sqrt => Err(domain(node, symbols, "square root of a negative number", v)),
            }
        }
        Node::Binary(op, a, b) => {
            if *op == BinOp::Pow {
                return pow(node, a, b, vars, symbols);
            }
            let x = eval(a, vars, symbols)?;
            let y = eval(b, vars, symbols)?;
            match op {
                BinOp::Add => Ok(x + y),
                BinOp::Sub => Ok(x - y),
                BinOp::Mul => Ok(x * y),
                BinOp::Div if y.re() == 0.0 => Err(domain(node, symbols, "division by zero", 0.0)),
                BinOp::Div => Ok(x / y),
                BinOp::Pow => unreachable!(),
            }
        }
    }
}

fn pow<T: Scalar>(
    node: &Node,
    base: &Node,
    exponent: &Node,
    vars: &[T],
    symbols: &SymbolTable,
) -> Result<T, EvalError> {
    let x = eval(base, vars, symbols)?;
    let xv = x.re();
    if exponent.is_constant() {
        let c: f64 = eval(exponent, &[] as &[f64], symbols)?;
        if c.fract() == 0.0 && c.abs() <= f64::from(i32::MAX) {
            if xv == 0.0 && c < 0.0 {
                return Err(domain(node, symbols, "zero raised to a negative power", xv));
            }
            return Ok(x.powi(c as i32));
        }
        if xv < 0.0 {
            return Err(domain(node, symbols, "negative base with a non-integer exponent", xv));
        }
        if xv == 0.0 && c < 0.0 {
            return Err(domain(node, symbols, "zero raised to a negative power", xv));
        }
        return Ok(x.powf(c));
    }
    let y = eval(exponent, vars, symbols)?;
    if xv > 0.0 {
        Ok((y * x.ln()).exp())
    } else {
        Err(domain(node, symbols, "non-positive base with a variable exponent", xv))
    }
}
