// SPDX-License-Identifier: Apache-2.0

//! Property tests over generated programs, types and module graphs.

use lolisa_core::dump::dump_state;
use lolisa_core::env::Env;
use lolisa_core::eval::{eval_expr_r, init_mem, ExecOptions};
use lolisa_core::modules::{subtype, ModuleContext};
use lolisa_core::run::{load, run};
use lolisa_core::stdlib::build_stdlib;
use lolisa_core::syntax::{parse, parse_expr, render};
use lolisa_core::types::{final_type, ArrayIndex, IntSize, LolisaMapType, LolisaType, Signedness};
use proptest::prelude::*;

/// A small straight-line program over int, uint and bool variables.
fn program() -> impl Strategy<Value = String> {
    let lit = |k: usize| match k % 3 {
        0 => (-20i64..20).prop_map(|v| v.to_string()).boxed(),
        1 => (0u64..20).prop_map(|v| format!("{v}u")).boxed(),
        _ => any::<bool>().prop_map(|b| b.to_string()).boxed(),
    };
    let ty = |k: usize| ["Tint", "Tuint", "Tbool"][k % 3];
    (1usize..6, prop::collection::vec((0usize..6, 0usize..3), 0..8)).prop_flat_map(move |(n, stmts)| {
        let decls: Vec<String> = (0..n).map(|i| format!("(Var public (Evar v{i} {}))", ty(i))).collect();
        let assigns: Vec<BoxedStrategy<String>> = stmts
            .into_iter()
            .map(|(i, form)| {
                let i = i % n;
                let name = format!("v{i}");
                lit(i)
                    .prop_map(move |l| match (form, i % 3) {
                        (1, 0) => format!("(Assignv {name} ({name} (+) {l}))"),
                        (1, 2) => format!("(Assignv {name} ((!) {name}))"),
                        (2, _) => format!("(If true (Assignv {name} {l}) Snil)"),
                        _ => format!("(Assignv {name} {l})"),
                    })
                    .boxed()
            })
            .collect();
        assigns.prop_map(move |a| {
            let mut items = decls.clone();
            items.extend(a);
            items.join(" ;;\n")
        })
    })
}

fn leaf_type() -> impl Strategy<Value = LolisaType> {
    prop_oneof![
        Just(LolisaType::Tbool),
        Just(LolisaType::Tstring),
        Just(LolisaType::Tint(Signedness::Unsigned, IntSize::I64)),
        Just(LolisaType::Tint(Signedness::Signed, IntSize::I8)),
    ]
}

fn nested_type() -> impl Strategy<Value = LolisaType> {
    leaf_type().prop_recursive(4, 16, 2, |inner| {
        prop_oneof![
            (1u64..5, inner.clone()).prop_map(|(n, t)| LolisaType::Tarray(ArrayIndex::ConstId(n), Box::new(t))),
            inner.prop_map(|t| LolisaType::Tmap(LolisaMapType::Iint(Signedness::Unsigned, IntSize::I64), Box::new(t))),
        ]
    })
}

/// Contracts `M0..Mn` where each inherits from some earlier ones.
fn module_graph() -> impl Strategy<Value = ModuleContext> {
    prop::collection::vec(prop::collection::vec(any::<prop::sample::Index>(), 0..3), 1..7).prop_map(|parents| {
        let mut ctx = ModuleContext::default();
        for (i, ps) in parents.iter().enumerate() {
            let mut names: Vec<String> = if i == 0 {
                vec![]
            } else {
                ps.iter().map(|p| format!("M{}", p.index(i))).collect()
            };
            names.dedup();
            let refs: Vec<&str> = names.iter().map(String::as_str).collect();
            ctx.add_contract(&format!("M{i}"), &refs);
        }
        ctx
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 128, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn print_then_parse_is_identity(src in program()) {
        let p = parse(&src).unwrap();
        let text = render(&p.statement, Some(&p.names));
        let q = parse(&text).unwrap();
        prop_assert_eq!(&q.statement, &p.statement);
        prop_assert_eq!(render(&q.statement, Some(&q.names)), text);
    }

    #[test]
    fn runs_are_deterministic(src in program()) {
        let l = load(&src, None).unwrap();
        let (a, ta, ia) = run(&l, &ExecOptions::default());
        let (b, tb, ib) = run(&l, &ExecOptions::default());
        prop_assert_eq!(dump_state(&a.sigma), dump_state(&b.sigma));
        prop_assert_eq!(dump_state(&ia), dump_state(&ib));
        prop_assert_eq!(ta, tb);
        prop_assert_eq!(a.outcome, b.outcome);
    }

    #[test]
    fn gas_never_increases_and_bounds_work(src in program(), budget in 0u64..40) {
        let l = load(&src, None).unwrap();
        let opts = ExecOptions { budget, ..ExecOptions::default() };
        let (r, trace, _) = run(&l, &opts);
        let mut last = u64::MAX;
        for e in &trace.entries {
            prop_assert!(e.pre_gas <= last);
            last = e.pre_gas;
        }
        prop_assert!(r.env.gas <= budget);
        // A bigger budget executes at least as many statements.
        let more = ExecOptions { budget: budget + 10, ..ExecOptions::default() };
        let (_, trace2, _) = run(&l, &more);
        prop_assert!(trace2.len() >= trace.len());
    }

    #[test]
    fn expressions_do_not_change_state(src in program(), pick in 0usize..6) {
        let l = load(&src, None).unwrap();
        let (r, _, _) = run(&l, &ExecOptions::default());
        let before = dump_state(&r.sigma);
        let names = ["v0", "v1", "v2", "v3", "v4", "v5"];
        if l.names.get(names[pick]).is_some() {
            let ty = ["Tint", "Tuint", "Tbool"][pick % 3];
            let e = parse_expr(&format!("(Evar {} {ty})", names[pick]), &l.names).unwrap();
            let env = Env::global(0);
            let first = eval_expr_r(&r.sigma, &env, &env, &e);
            let second = eval_expr_r(&r.sigma, &env, &env, &e);
            prop_assert_eq!(first, second);
        }
        prop_assert_eq!(dump_state(&r.sigma), before);
    }

    #[test]
    fn final_type_is_idempotent(t in nested_type()) {
        let f = final_type(&t);
        prop_assert_eq!(final_type(&f), f.clone());
        prop_assert!(!matches!(f, LolisaType::Tarray(..) | LolisaType::Tmap(..)));
    }

    #[test]
    fn subtype_is_a_preorder(ctx in module_graph()) {
        let ms: Vec<String> = (0..7).map(|i| format!("M{i}")).filter(|m| ctx.modules.contains_key(m)).collect();
        for a in &ms {
            prop_assert!(subtype(&ctx, a, a));
            for b in &ms {
                for c in &ms {
                    if subtype(&ctx, a, b) && subtype(&ctx, b, c) {
                        prop_assert!(subtype(&ctx, a, c), "{a} <: {b} <: {c}");
                    }
                }
                // Inheritance points backwards, so no cycles.
                if a != b && subtype(&ctx, a, b) {
                    prop_assert!(!subtype(&ctx, b, a));
                }
            }
        }
    }
}

#[test]
fn stdlib_is_stable() {
    let a = build_stdlib();
    let b = build_stdlib();
    assert_eq!(a.declarations, b.declarations);
    assert_eq!(a.bindings, b.bindings);
    let l = load("(Var (Evar x Tint))", None).unwrap();
    let s1 = init_mem(&l.program, &l.lib).unwrap();
    let s2 = init_mem(&l.program, &l.lib).unwrap();
    assert_eq!(dump_state(&s1), dump_state(&s2));
    assert!(dump_state(&s1).contains("m_msg := Str_type"));
}
