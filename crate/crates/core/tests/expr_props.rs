use std::sync::Arc;

use geostab::expr::{BinOp, EvalError, Expression, Func, Node, SymbolTable};
use geostab::numeric::derive;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn table() -> Arc<SymbolTable> {
    let mut t = SymbolTable::with_variables(&["x", "y"]).unwrap();
    t.add_parameter("k", 0.75).unwrap();
    Arc::new(t)
}

fn leaf() -> impl Strategy<Value = Node> {
    prop_oneof![
        (0.0f64..10.0).prop_map(Node::Const),
        Just(Node::Const(2.0)),
        (0usize..2).prop_map(Node::Var),
        Just(Node::Param(0)),
    ]
}

fn any_tree() -> impl Strategy<Value = Node> {
    leaf().prop_recursive(5, 40, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(Node::negate),
            (prop::sample::select(Func::ALL.to_vec()), inner.clone()).prop_map(|(f, a)| Node::call(f, a)),
            (
                prop::sample::select(vec![BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div, BinOp::Pow]),
                inner.clone(),
                inner
            )
                .prop_map(|(op, a, b)| Node::binary(op, a, b)),
        ]
    })
}

fn smooth_tree() -> impl Strategy<Value = Node> {
    leaf().prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(Node::negate),
            (prop::sample::select(vec![Func::Sin, Func::Cos]), inner.clone()).prop_map(|(f, a)| Node::call(f, a)),
            inner.clone().prop_map(|a| Node::binary(BinOp::Pow, a, Node::Const(2.0))),
            (prop::sample::select(vec![BinOp::Add, BinOp::Sub, BinOp::Mul]), inner.clone(), inner)
                .prop_map(|(op, a, b)| Node::binary(op, a, b)),
        ]
    })
}

fn same(a: &Result<f64, EvalError>, b: &Result<f64, EvalError>) -> bool {
    match (a, b) {
        (Ok(x), Ok(y)) => x == y || (x.is_nan() && y.is_nan()),
        (Err(_), Err(_)) => true,
        _ => false,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn print_parse_round_trip(node in any_tree(), seed in any::<u64>()) {
        let t = table();
        let e = Expression::from_node(node, &t);
        let text = e.to_string();
        let back = Expression::parse(&text, &t).unwrap();
        prop_assert_eq!(back.root(), e.root(), "text {}", text);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..100 {
            let at = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
            prop_assert!(same(&e.eval(&at), &back.eval(&at)));
        }
    }

    #[test]
    fn dual_derivatives_match_central_differences(
        node in smooth_tree(),
        x in -1.0f64..1.0,
        y in -1.0f64..1.0,
    ) {
        let e = Expression::from_node(node, &table());
        for i in 0..2 {
            let ad = derive(&e, &[x, y], &[i]).unwrap();
            let h = 1e-5;
            let mut p = [x, y];
            let mut m = [x, y];
            p[i] += h;
            m[i] -= h;
            let fd = (e.eval(&p).unwrap() - e.eval(&m).unwrap()) / (2.0 * h);
            let scale = ad.abs().max(e.eval(&[x, y]).unwrap().abs()).max(1.0);
            prop_assert!((ad - fd).abs() <= 1e-6 * scale, "{}: ad={} fd={}", e, ad, fd);
        }
    }
}
