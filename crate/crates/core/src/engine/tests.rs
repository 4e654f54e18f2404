use std::collections::BTreeSet;

use proptest::prelude::*;

use super::*;
use crate::frontend::load_program;
use crate::solver::{eval_bool, solve, Model, SolveBudget};

fn subject(src: &str) -> Subject {
    Subject::new(load_program(src).expect("program loads"))
}

fn flood(s: &Subject, f: &str) -> ExploreResult {
    flood_search(s, f, &EngineConfig::default()).expect("function exists")
}

/// Runs `f` concretely under `m`.
fn replay(s: &Subject, f: &str, m: &Model) -> End {
    let config = EngineConfig::default();
    let exec = Executor::new(s, &config, Mode::Concrete(m));
    let st = exec.initial_state(s.function_index(f).unwrap());
    let mut adv = exec.advance(st);
    assert!(adv.children.is_empty());
    assert_eq!(adv.ends.len(), 1);
    adv.ends.pop().unwrap()
}

fn model(pairs: &[(&str, i32)]) -> Model {
    let mut m = Model::new();
    for (n, v) in pairs {
        m.set(&crate::solver::SymVar::new(*n, crate::solver::Ty::I32), *v as u32);
    }
    m
}

fn labeled(s: &Subject, f: &str) -> BTreeSet<usize> {
    s.cfg(f).unwrap().labeled_edges().map(|e| e.id).collect()
}

#[test]
fn straight_line_has_one_path() {
    let s = subject("int f(int x){ int y = x * 2; return y + 1; }");
    let r = flood(&s, "f");
    assert_eq!(r.paths.len(), 1);
    assert!(!r.incomplete);
}

#[test]
fn single_if_gives_two_paths() {
    let s = subject("int f(int x){ int y; if (x > 0) y = 1; else y = 2; return y; }");
    let r = flood(&s, "f");
    assert_eq!(r.paths.len(), 2);
    assert!(labeled(&s, "f").is_subset(&r.visited));
    let outcomes: BTreeSet<_> = r.paths.iter().map(|p| p.decisions[0].outcome).collect();
    assert_eq!(outcomes.len(), 2);
}

#[test]
fn forks_split_the_condition() {
    let s = subject("int f(int x){ if (x > 0) return 1; return 0; }");
    let r = flood(&s, "f");
    let pcs: Vec<_> = r.paths.iter().map(|p| p.pc.clone()).collect();
    assert_eq!(pcs.len(), 2);
    let mut both = pcs[0].clone();
    for c in &pcs[1].conjuncts {
        both.push(c.clone());
    }
    let vars: Vec<_> = both.free_vars().into_iter().collect();
    assert!(solve(&both, &vars, &SolveBudget::default()).is_unsat());
    for p in &r.paths {
        assert!(p.pc.conjuncts.iter().all(|c| eval_bool(c, &p.model) == Ok(true)));
    }
}

#[test]
fn loop_unrolls_up_to_the_bound() {
    let s = subject("int f(int n){ int i = 0; while (i < n) { i = i + 1; } return i; }");
    let r = flood(&s, "f");
    let mut iterations: Vec<i32> = r
        .paths
        .iter()
        .map(|p| match replay(&s, "f", &p.model) {
            End::Exit(st) => match st.returned {
                Some(Some(crate::memmodel::Value::Int(t))) => t.as_const().unwrap() as i32,
                other => panic!("unexpected return {other:?}"),
            },
            other => panic!("unexpected end {other:?}"),
        })
        .collect();
    iterations.sort();
    assert_eq!(iterations, vec![0, 1, 2, 3]);
    assert!(r.bound_hit);
}

#[test]
fn payload_size_four_divides_by_zero() {
    let src = r#"
void getLocalPayload(int nUsable, char flags, int nTotal, int *pnLocal) {
  int nLocal;
  int nMinLocal;
  int nMaxLocal;
  if (flags == 0x0D) {
    nMinLocal = (nUsable - 12) * 32 / 255 - 23;
    nMaxLocal = nUsable - 35;
  } else {
    nMinLocal = (nUsable - 12) * 32 / 255 - 23;
    nMaxLocal = (nUsable - 12) * 64 / 255 - 23;
  }
  nLocal = nMinLocal + (nTotal - nMinLocal) % (nUsable - 4);
  if (nLocal > nMaxLocal) nLocal = nMinLocal;
  *pnLocal = nLocal;
}
"#;
    let s = subject(src);
    let r = flood(&s, "getLocalPayload");
    let faults: Vec<_> = r.paths.iter().filter(|p| p.exception.is_some()).collect();
    assert_eq!(faults.len(), 1);
    let rec = faults[0].exception.as_ref().unwrap();
    assert_eq!(rec.category, ExceptionCategory::DividedByZero);
    assert_eq!(rec.site.line, 13);
    assert_eq!(faults[0].model.get("nUsable"), Some(4));
    match replay(&s, "getLocalPayload", &faults[0].model) {
        End::Fault(_, again) => assert_eq!(&again, rec),
        other => panic!("replay did not fault: {other:?}"),
    }
    assert!(labeled(&s, "getLocalPayload").is_subset(&r.visited));
}

#[test]
fn fixed_address_faults_unconditionally() {
    let s = subject("void f(int v){ *(int*)0x52 = v; }");
    let r = flood(&s, "f");
    assert_eq!(r.paths.len(), 1);
    let rec = r.paths[0].exception.as_ref().unwrap();
    assert_eq!(rec.category, ExceptionCategory::FixedMemoryAddress);
}

#[test]
fn array_index_out_of_bounds() {
    let s = subject("int f(int i){ int a[4] = {1,2,3,4}; return a[i]; }");
    let r = flood(&s, "f");
    let fault = r.paths.iter().find(|p| p.exception.is_some()).expect("oob path");
    assert_eq!(
        fault.exception.as_ref().unwrap().category,
        ExceptionCategory::ArrayIndexOutOfBounds
    );
    let i = fault.model.get("i").unwrap() as i32;
    assert!(!(0..4).contains(&i));
    assert!(matches!(replay(&s, "f", &fault.model), End::Fault(..)));
    let ok = r.paths.iter().find(|p| p.exception.is_none()).expect("in-bounds path");
    assert!((0..4).contains(&(ok.model.get("i").unwrap_or(0) as i32)));
}

#[test]
fn option_index_at_argc() {
    let src = r#"
char cmdline_option_value(int argc, char argv[8], int i) {
  if (i == argc) {
    utf8_printf(argc);
    exit(1);
  }
  return argv[i];
}
"#;
    let s = subject(src);
    let r = flood(&s, "cmdline_option_value");
    let f = r.paths.iter().find(|p| p.exception.is_some()).expect("oob");
    assert_eq!(f.exception.as_ref().unwrap().category, ExceptionCategory::ArrayIndexOutOfBounds);
    assert!(labeled(&s, "cmdline_option_value").is_subset(&r.visited));
}

#[test]
fn stub_returns_are_inputs() {
    let s = subject("int f(){ if (probe() > 3) return 1; return 0; }");
    let r = flood(&s, "f");
    assert_eq!(r.paths.len(), 2);
    for p in &r.paths {
        assert!(p.inputs.iter().any(|v| v.name == "__stub_probe_0"));
        let End::Exit(st) = replay(&s, "f", &p.model) else { panic!() };
        assert_eq!(st.trace, p.trace);
    }
}

#[test]
fn defined_calls_are_inlined() {
    let src = "int sq(int v){ if (v < 0) return -v * v; return v * v; }
               int f(int x){ int y = sq(x); if (y == 49) return 1; return 0; }";
    let s = subject(src);
    let r = flood(&s, "f");
    assert!(labeled(&s, "f").is_subset(&r.visited));
    for p in &r.paths {
        let End::Exit(st) = replay(&s, "f", &p.model) else { panic!() };
        assert_eq!(st.trace, p.trace);
    }
}

#[test]
fn mcdc_keys_follow_short_circuit() {
    let s = subject("int f(int a, int b){ if (a > 0 && b > 0) return 1; return 0; }");
    let cfg = s.cfg("f").unwrap();
    assert_eq!(coverage_keys(cfg, Criterion::Mcdc).len(), 3);
    let config = EngineConfig {
        criterion: Criterion::Mcdc,
        ..EngineConfig::default()
    };
    let r = flood_search(&s, "f", &config).unwrap();
    let vectors: BTreeSet<_> = r.paths.iter().map(|p| p.decisions[0].vector.clone()).collect();
    assert_eq!(vectors.len(), 3);
}

#[test]
fn switch_takes_every_case() {
    let src = "int f(int k){ int r = 0; switch (k) { case 1: r = 10; break; case 2: r = 20; break; default: r = 5; } return r; }";
    let s = subject(src);
    let r = flood(&s, "f");
    assert!(labeled(&s, "f").is_subset(&r.visited));
    assert_eq!(r.paths.len(), 3);
}

#[test]
fn guarded_division_has_no_fault() {
    let s = subject("int f(int x, int y){ if (y != 0 && x / y > 2) return 1; return 0; }");
    let r = flood(&s, "f");
    assert!(r.paths.iter().all(|p| p.exception.is_none()));
}

#[test]
fn flood_beats_dfs_on_loop_before_branch() {
    let src = r#"
int stress(int n, int m, int a, int b, int c) {
  int s = 0;
  int i = 0;
  while (i < n) {
    int j = 0;
    while (j < m) {
      if (a > i) s = s + 1;
      if (b > j) s = s + 2;
      if (c > i + j) s = s + 3;
      j = j + 1;
    }
    i = i + 1;
  }
  if (i == 0) s = s - 1;
  if (a == 7) s = s + 100;
  if (b == 9) s = s * 2;
  return s;
}
"#;
    let s = subject(src);
    let cfg = s.cfg("stress").unwrap();
    let last_three: BTreeSet<_> = cfg
        .branch_nodes()
        .filter(|n| n.span.line >= 15)
        .flat_map(|n| n.succs.clone())
        .collect();
    assert_eq!(last_three.len(), 6);
    let r = flood(&s, "stress");
    assert!(last_three.is_subset(&r.visited));
    let d = dfs_search(&s, "stress", &EngineConfig::default()).unwrap();
    assert!(!last_three.is_subset(&d.visited));
}

/// Random branch trees over two inputs.
fn arb_cond() -> impl Strategy<Value = String> {
    let atom = (0..6usize, -8i32..=8).prop_map(|(k, c)| match k {
        0 => format!("x > {c}"),
        1 => format!("y <= {c}"),
        2 => format!("x + y == {c}"),
        3 => format!("x - y != {c}"),
        4 => format!("x == {c}"),
        _ => format!("y * 2 < {c}"),
    });
    prop_oneof![
        3 => atom.clone(),
        1 => (atom.clone(), atom.clone()).prop_map(|(a, b)| format!("{a} && {b}")),
        1 => (atom.clone(), atom).prop_map(|(a, b)| format!("{a} || {b}")),
    ]
}

fn arb_body(depth: u32) -> BoxedStrategy<String> {
    let leaf = (-5i32..5).prop_map(|v| format!("r = r + {v};")).boxed();
    if depth == 0 {
        return leaf;
    }
    prop_oneof![
        1 => leaf,
        2 => (arb_cond(), arb_body(depth - 1), arb_body(depth - 1))
            .prop_map(|(c, a, b)| format!("if ({c}) {{ {a} }} else {{ {b} }}")),
        1 => (arb_body(depth - 1), arb_body(depth - 1)).prop_map(|(a, b)| format!("{a} {b}")),
    ]
    .boxed()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn flood_covers_every_feasible_edge(body in arb_body(3)) {
        let src = format!("int f(int x, int y) {{ int r = 0; {body} return r; }}");
        let s = subject(&src);
        let r = flood(&s, "f");
        let mut oracle = BTreeSet::new();
        for x in -12..=12 {
            for y in -12..=12 {
                let End::Exit(st) = replay(&s, "f", &model(&[("x", x), ("y", y)])) else {
                    panic!("fault in branch-only program")
                };
                oracle.extend(st.trace);
            }
        }
        let labels = labeled(&s, "f");
        let want: BTreeSet<_> = oracle.intersection(&labels).copied().collect();
        let got: BTreeSet<_> = r.visited.intersection(&labels).copied().collect();
        prop_assert!(want.is_subset(&got), "missed {:?}", want.difference(&got).collect::<Vec<_>>());
        for p in &r.paths {
            let End::Exit(st) = replay(&s, "f", &p.model) else { panic!() };
            prop_assert_eq!(&st.trace, &p.trace);
        }
    }
}

#[test]
fn unknown_outcome_is_not_a_crash() {
    let s = subject("int f(int x, int y){ if (y != 0 && ((x - 1) * y) % y == 1) return 1; return 0; }");
    let config = EngineConfig {
        solver: SolveBudget {
            domain: (-8, 8),
            ..SolveBudget::default()
        },
        ..EngineConfig::default()
    };
    let r = flood_search(&s, "f", &config).unwrap();
    assert!(!r.paths.is_empty());
}
