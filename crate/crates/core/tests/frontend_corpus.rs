mod common;

use proptest::prelude::*;
use smartgen::frontend::{load_program, pretty_print};
use smartgen::pipeline::{run_program, RunConfig};
use smartgen::testgen::emit_harness;

const FILES: [&str; 8] = [
    "min.c",
    "coverage.c",
    "bugs_oob.c",
    "bugs_fixed.c",
    "bugs_div0.c",
    "dataflow.c",
    "stress.c",
    "limits.c",
];

#[test]
fn corpus_loads() {
    let mut total = 0;
    for f in FILES {
        let s = common::corpus(f);
        total += s.program.functions.len();
        let skipped: Vec<String> = s.program.skipped.iter().map(|e| e.to_string()).collect();
        if f == "limits.c" {
            assert_eq!(skipped.len(), 1, "{skipped:?}");
            assert!(skipped[0].contains("function pointer"), "{skipped:?}");
        } else {
            assert!(skipped.is_empty(), "{f}: {skipped:?}");
        }
    }
    assert!(total >= 80, "{total}");
}

#[test]
fn every_corpus_harness_reloads() {
    for f in FILES {
        let s = common::corpus(f);
        let run = run_program(&s, &RunConfig::default()).unwrap();
        for fr in &run.functions {
            let cases: Vec<_> = fr.test_cases().cloned().collect();
            let text = emit_harness(&s.program, &fr.function, &cases, 4);
            let h = load_program(&text).unwrap_or_else(|e| panic!("{}: {}", fr.function, e.render("harness")));
            let drivers = h.functions.iter().filter(|d| d.name.starts_with("test_")).count();
            assert_eq!(drivers, cases.len(), "{}", fr.function);
        }
    }
}

#[test]
fn pretty_printing_is_a_fixed_point_on_the_corpus() {
    for f in FILES {
        let p = load_program(&common::corpus_source(f)).unwrap();
        let once = pretty_print(&p);
        let again = pretty_print(&load_program(&once).unwrap_or_else(|e| panic!("{f}: {}\n{once}", e.render(f))));
        assert_eq!(once, again, "{f}");
    }
}

#[test]
fn undefined_send_is_an_extern() {
    let s = common::corpus("limits.c");
    let f = s.program.function("PQcancel").unwrap();
    assert!(f.externs_called.contains("send"));
}

fn arb_expr() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        Just("a".to_string()),
        Just("b".to_string()),
        (-9i32..40).prop_map(|v| v.to_string()),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        let ops = prop::sample::select(vec![
            "+", "-", "*", "/", "%", "<", "<=", "==", "!=", "&&", "||", "&", "|", "^", "<<", ">>",
        ]);
        prop_oneof![
            (inner.clone(), ops, inner.clone()).prop_map(|(x, o, y)| format!("({x} {o} {y})")),
            inner.clone().prop_map(|x| format!("-{x}")),
            inner.clone().prop_map(|x| format!("!{x}")),
            inner.prop_map(|x| format!("~({x})")),
        ]
    })
}

proptest! {
    #[test]
    fn printed_expressions_reparse_to_the_same_text(e in arb_expr()) {
        let src = format!("int f(int a, int b) {{ int r = 0; if ({e}) r = 1; return {e}; }}");
        let p = load_program(&src).unwrap();
        let once = pretty_print(&p);
        let again = pretty_print(&load_program(&once).unwrap());
        prop_assert_eq!(once, again);
    }
}
