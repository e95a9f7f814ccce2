use std::collections::BTreeMap;
use std::sync::Arc;

use num_bigint::BigInt;
use proptest::prelude::*;
use tydi_core::diag::Code;
use tydi_core::eval::{eval, Bindings, EvalResult};
use tydi_core::ir::emit_ir;
use tydi_core::scope::{Binding, Scope};
use tydi_core::syntax::{parse_expr, printer, ClearSpans, Expr, ExprKind};
use tydi_core::types::{hierarchy_eq, strict_eq, NamedType};
use tydi_core::{compile, drc, sugar, BuildConfig, FileId, LogicalType, SourceMap, SourceSpan, Value};

fn leaf() -> impl Strategy<Value = LogicalType> {
    prop_oneof![Just(LogicalType::Null), (1u64..=16).prop_map(LogicalType::Bit)]
}

fn fields(inner: impl Strategy<Value = LogicalType>) -> impl Strategy<Value = Vec<(String, LogicalType)>> {
    prop::collection::vec(("[a-c]", inner), 1..4)
}

fn type_tree() -> impl Strategy<Value = LogicalType> {
    leaf().prop_recursive(4, 24, 3, |inner| {
        prop_oneof![
            fields(inner.clone()).prop_map(LogicalType::Group),
            fields(inner.clone()).prop_map(LogicalType::Union),
            // name derived from the body
            ("[A-C]", inner.clone()).prop_map(|(n, t)| LogicalType::named(format!("{n}<{t}>"), t)),
            (inner, 0u32..3, 1u32..8).prop_map(|(t, d, c)| {
                let mut s = tydi_core::StreamType::new(t);
                s.dimension = d;
                s.complexity = c;
                LogicalType::Stream(Box::new(s))
            }),
        ]
    })
}

fn rename(t: &LogicalType, suffix: &str) -> LogicalType {
    let fs = |v: &[(String, LogicalType)]| v.iter().map(|(n, t)| (n.clone(), rename(t, suffix))).collect();
    match t {
        LogicalType::Null | LogicalType::Bit(_) => t.clone(),
        LogicalType::Group(v) => LogicalType::Group(fs(v)),
        LogicalType::Union(v) => LogicalType::Union(fs(v)),
        LogicalType::Stream(s) => {
            let mut s = (**s).clone();
            s.element = rename(&s.element, suffix);
            LogicalType::Stream(Box::new(s))
        }
        LogicalType::Named(n) => LogicalType::Named(Arc::new(NamedType {
            name: format!("{}{suffix}", n.name),
            ty: rename(&n.ty, suffix),
        })),
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 512, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn strict_implies_hierarchy(a in type_tree(), b in type_tree()) {
        prop_assert!(strict_eq(&a, &a));
        prop_assert!(hierarchy_eq(&a, &a));
        if strict_eq(&a, &b) {
            prop_assert!(hierarchy_eq(&a, &b));
        }
    }

    #[test]
    fn hierarchy_ignores_declaration_names(a in type_tree(), b in type_tree()) {
        let ra = rename(&a, "_x");
        prop_assert!(hierarchy_eq(&a, &ra));
        prop_assert_eq!(hierarchy_eq(&a, &b), hierarchy_eq(&ra, &rename(&b, "_y")));
    }

    #[test]
    fn renamed_named_types_are_strictly_distinct(t in type_tree(), n in "[A-Z]{1,4}") {
        let a = LogicalType::named(n.clone(), t.clone());
        let b = LogicalType::named(format!("{n}2"), t);
        prop_assert!(!strict_eq(&a, &b));
        prop_assert!(hierarchy_eq(&a, &b));
    }
}

// ---- expressions ----

fn ident() -> impl Strategy<Value = String> {
    "v_[a-z]{0,4}"
}

fn mk(kind: ExprKind) -> Expr {
    Expr { kind, span: SourceSpan::default() }
}

fn expr_tree() -> impl Strategy<Value = Expr> {
    use tydi_core::syntax::{BinOp, Builtin, UnOp};
    let leaf = prop_oneof![
        (0u64..1_000_000).prop_map(|i| mk(ExprKind::Int(i.into()))),
        (0u32..10_000, 1u32..100).prop_map(|(a, b)| mk(ExprKind::Float(a as f64 / b as f64 + 0.5))),
        "[ -~]{0,8}".prop_map(|s| mk(ExprKind::Str(s))),
        any::<bool>().prop_map(|b| mk(ExprKind::Bool(b))),
        ident().prop_map(|n| mk(ExprKind::Ident(n))),
    ];
    let ops = [
        BinOp::Or, BinOp::And, BinOp::Eq, BinOp::Ne, BinOp::Lt, BinOp::Le, BinOp::Gt, BinOp::Ge,
        BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div, BinOp::Pow,
    ];
    leaf.prop_recursive(4, 32, 3, move |inner| {
        prop_oneof![
            (prop::sample::select(ops.to_vec()), inner.clone(), inner.clone())
                .prop_map(|(op, a, b)| mk(ExprKind::Binary(op, Box::new(a), Box::new(b)))),
            (prop::bool::ANY, inner.clone()).prop_map(|(neg, a)| {
                mk(ExprKind::Unary(if neg { UnOp::Neg } else { UnOp::Not }, Box::new(a)))
            }),
            (prop::sample::select(vec![Builtin::Ceil, Builtin::Log2, Builtin::Abs]), inner.clone())
                .prop_map(|(b, a)| mk(ExprKind::Call(b, vec![a]))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| mk(ExprKind::Call(Builtin::Max, vec![a, b]))),
            prop::collection::vec(inner.clone(), 0..3).prop_map(|v| mk(ExprKind::Array(v))),
            (ident(), inner.clone())
                .prop_map(|(n, i)| mk(ExprKind::Index(Box::new(mk(ExprKind::Ident(n))), Box::new(i)))),
            (inner.clone(), inner.clone(), inner).prop_map(|(a, b, c)| mk(ExprKind::Range {
                start: Box::new(a),
                step: Box::new(b),
                end: Box::new(c),
            })),
        ]
    })
}

struct Empty;

impl Bindings for Empty {
    fn lookup_value(&mut self, name: &str, span: SourceSpan) -> EvalResult<Value> {
        Err(tydi_core::Diagnostic::error(Code::E002, name, span).into())
    }
}

fn range_oracle(start: i64, step: i64, end: i64) -> Vec<i64> {
    let mut out = Vec::new();
    let mut x = start;
    while x < end {
        out.push(x);
        x += step;
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 1024, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn printed_expressions_reparse(e in expr_tree()) {
        let text = printer::expr(&e);
        let mut back = parse_expr(&text, FileId(0)).map_err(|d| TestCaseError::fail(format!("{text}: {}", d.message)))?;
        back.clear_spans();
        prop_assert_eq!(back, e, "{}", text);
    }

    #[test]
    fn range_length_formula(start in -50i64..50, step in 1i64..9, end in -50i64..80) {
        let e = parse_expr(&format!("{start} - {step} -> {end}"), FileId(0)).unwrap();
        let got = eval(&e, &mut Empty).unwrap();
        let want: Vec<Value> = range_oracle(start, step, end).into_iter().map(Value::int).collect();
        let n = want.len() as i64;
        let formula = if end > start { (end - start + step - 1) / step } else { 0 };
        prop_assert_eq!(n, formula);
        prop_assert_eq!(got, Value::Array(want));
        let len = tydi_core::eval::range_len(&BigInt::from(start), &BigInt::from(step), &BigInt::from(end));
        prop_assert_eq!(len, BigInt::from(formula));
    }

    #[test]
    fn inner_scopes_shadow_outer(names in prop::collection::vec("[a-d]", 1..6), v in 0i64..100) {
        let span = SourceSpan::default();
        let mut outer = Scope::root();
        let mut bound = BTreeMap::new();
        for (i, n) in names.iter().enumerate() {
            let r = outer.bind(n, Binding::Value(Value::int(i as i64)), span);
            if bound.contains_key(n) {
                prop_assert_eq!(r.unwrap_err().code, Code::E008);
            } else {
                prop_assert!(r.is_ok());
                bound.insert(n.clone(), i as i64);
            }
        }
        let mut inner = outer.child();
        for n in bound.keys() {
            prop_assert!(inner.bind(n, Binding::Value(Value::int(v + 1000)), span).is_ok());
            prop_assert_eq!(inner.lookup_value(n, span).unwrap(), Value::int(v + 1000));
        }
        for (n, i) in &bound {
            prop_assert_eq!(outer.lookup(n), Some(&Binding::Value(Value::int(*i))));
        }
    }
}

// ---- sugaring ----

/// A design with one source per entry of `fan`, where source `i` drives `fan[i]` sinks.
fn fan_design(fan: &[u64]) -> String {
    let mut s = String::from(
        "type Byte = Stream(Bit(8));
streamlet src_s { out: Byte out, }
streamlet dst_s { in: Byte in, }
external impl src_i of src_s {}
external impl dst_i of dst_s {}
streamlet top_s { }
impl top of top_s {
",
    );
    for (i, k) in fan.iter().enumerate() {
        s.push_str(&format!("  instance a{i}(src_i),\n"));
        if *k > 0 {
            s.push_str(&format!("  instance b{i}(dst_i) [{k}],\n"));
            s.push_str(&format!("  for j in 0-1->{k} {{ a{i}.out => b{i}[j].in, }}\n"));
        }
    }
    s.push_str("}\n");
    s
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn sugaring_is_idempotent_and_removes_e004(fan in prop::collection::vec(0u64..5, 1..5)) {
        let mut m = SourceMap::new();
        m.add("fan.td", fan_design(&fan));
        let c = compile(m, &BuildConfig { top: Some("top".into()), ..BuildConfig::default() });
        prop_assert!(c.ok(), "{:?}", c.rendered_diagnostics());
        let d = c.design.unwrap();
        let mut again = d.clone();
        sugar::sugar(&mut again);
        prop_assert_eq!(emit_ir(&again), emit_ir(&d));
        prop_assert!(drc::check_design(&again, drc::DrcMode::Strict).is_empty());

        let top = &d.impls["top"];
        let dups = top.instances.iter().filter(|i| i.name.starts_with("__dup_")).count();
        let voids = top.instances.iter().filter(|i| i.name.starts_with("__void_")).count();
        prop_assert_eq!(dups, fan.iter().filter(|k| **k >= 2).count());
        prop_assert_eq!(voids, fan.iter().filter(|k| **k == 0).count());
        let sugared_connections: u64 = fan.iter().map(|k| match k { 0 | 1 => 1, k => k + 1 }).sum();
        prop_assert_eq!(top.connections.len() as u64, sugared_connections);
    }
}
