//! Random expression trees for property tests.

use mcbatch::expr::{BinOp, Expr, Func};
use proptest::prelude::*;

pub const PARAMS: [&str; 3] = ["a", "k", "theta"];
pub const MAX_VAR: usize = 4;

fn literal() -> impl Strategy<Value = f64> {
    prop_oneof![
        (0u32..100).prop_map(f64::from),
        (0.0f64..10.0),
        (1e-9f64..1e-6),
        (1e6f64..1e12),
    ]
}

fn func() -> impl Strategy<Value = Func> {
    proptest::sample::select(Func::ALL.to_vec())
}

fn binop() -> impl Strategy<Value = BinOp> {
    proptest::sample::select(vec![
        BinOp::Add,
        BinOp::Sub,
        BinOp::Mul,
        BinOp::Div,
        BinOp::Pow,
    ])
}

pub fn arb_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        literal().prop_map(Expr::Num),
        (0..MAX_VAR).prop_map(Expr::Var),
        proptest::sample::select(PARAMS.to_vec()).prop_map(|p| Expr::Param(p.to_string())),
    ];
    leaf.prop_recursive(5, 48, 3, |inner| {
        prop_oneof![
            inner.clone().prop_map(Expr::neg),
            (binop(), inner.clone(), inner.clone()).prop_map(|(op, a, b)| Expr::binary(op, a, b)),
            (func(), proptest::collection::vec(inner, 2)).prop_map(|(f, mut args)| {
                args.truncate(f.arity());
                Expr::call(f, args)
            }),
        ]
    })
}
