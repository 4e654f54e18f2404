use proptest::prelude::*;

use super::*;

fn x() -> Term {
    Term::var("x", Ty::I32)
}

fn y() -> Term {
    Term::var("y", Ty::I32)
}

fn pc(terms: Vec<Term>) -> PathCondition {
    PathCondition::from_terms(terms)
}

fn vars() -> Vec<SymVar> {
    vec![SymVar::new("x", Ty::I32), SymVar::new("y", Ty::I32)]
}

#[test]
fn unique_integer_between_bounds() {
    let q = pc(vec![
        mk_binary(BinOp::Gt, x(), Term::int(5)),
        mk_binary(BinOp::Lt, x(), Term::int(7)),
    ]);
    let out = solve(&q, &vars()[..1], &SolveBudget::default());
    let m = out.model().expect("sat");
    assert_eq!(m.get("x"), Some(6));
}

#[test]
fn contradictory_bounds_are_unsat() {
    let q = pc(vec![
        mk_binary(BinOp::Gt, x(), Term::int(0)),
        mk_binary(BinOp::Lt, x(), Term::int(0)),
    ]);
    assert!(solve(&q, &vars()[..1], &SolveBudget::default()).is_unsat());
}

fn residue_constraint() -> PathCondition {
    // y != 0 && (((x-1) * y) % y) == 1
    let prod = mk_binary(BinOp::Mul, mk_binary(BinOp::Sub, x(), Term::int(1)), y());
    let rem = Term::raw(Node::Binary(BinOp::Rem, prod, y()));
    pc(vec![
        mk_binary(BinOp::Ne, y(), Term::int(0)),
        mk_binary(BinOp::Eq, rem, Term::int(1)),
    ])
}

#[test]
fn nonlinear_residue_has_no_model_in_small_domain() {
    // brute force over the 17x17 grid first
    let q = residue_constraint();
    let mut found = false;
    for xv in -8..=8 {
        for yv in -8..=8 {
            let mut m = Model::new();
            m.set(&vars()[0], xv as u32);
            m.set(&vars()[1], yv as u32);
            if q.conjuncts.iter().all(|c| eval_bool(c, &m) == Ok(true)) {
                found = true;
            }
        }
    }
    assert!(!found);
    let budget = SolveBudget {
        domain: (-8, 8),
        domain_only: true,
        ..Default::default()
    };
    let out = solve(&q, &vars(), &budget);
    assert!(
        matches!(
            out,
            SolveOutcome::Unsat(UnsatProof::ExhaustedDomain { .. })
                | SolveOutcome::UnknownWithinBudget(_)
        ),
        "{out:?}"
    );
}

#[test]
fn nonlinear_residue_is_sat_with_wraparound() {
    // (INT_MIN - 1) * INT_MAX wraps to 1, and 1 % INT_MAX == 1
    let q = residue_constraint();
    let out = solve(&q, &vars(), &SolveBudget::default());
    let m = out.model().expect("sat under wraparound");
    for c in &q.conjuncts {
        assert_eq!(eval_bool(c, m), Ok(true));
    }
    let mut w = Model::new();
    w.set(&vars()[0], i32::MIN as u32);
    w.set(&vars()[1], i32::MAX as u32);
    assert!(q.conjuncts.iter().all(|c| eval_bool(c, &w) == Ok(true)));
}

#[test]
fn equality_propagation_solves_wide_values() {
    let q = pc(vec![
        mk_binary(BinOp::Eq, mk_binary(BinOp::Add, x(), Term::int(1000)), Term::int(5000)),
        mk_binary(BinOp::Gt, mk_binary(BinOp::Mul, x(), y()), Term::int(4000)),
    ]);
    let m = solve(&q, &vars(), &SolveBudget::default());
    let m = m.model().expect("sat");
    assert_eq!(m.get("x"), Some(4000));
}

#[test]
fn divisor_zero_query_is_sat() {
    let n = Term::var("nUsable", Ty::I32);
    let q = pc(vec![mk_binary(
        BinOp::Eq,
        mk_binary(BinOp::Sub, n, Term::int(4)),
        Term::int(0),
    )]);
    let m = solve(&q, &[], &SolveBudget::default());
    assert_eq!(m.model().unwrap().get("nUsable"), Some(4));
}

#[test]
fn char_variables_stay_in_range() {
    let c = Term::var("c", Ty::I8);
    let q = pc(vec![mk_binary(BinOp::Gt, c.clone(), Term::int(126))]);
    let m = solve(&q, &[], &SolveBudget::default());
    assert_eq!(m.model().unwrap().get("c"), Some(127));
    let q = pc(vec![mk_binary(BinOp::Gt, c, Term::int(127))]);
    assert!(solve(&q, &[], &SolveBudget::default()).is_unsat());
}

#[test]
fn unsigned_wraparound_comparison() {
    let u = Term::var("u", Ty::U32);
    let q = pc(vec![mk_binary(BinOp::Gt, u, Term::constant(0xffff_fff0, Ty::U32))]);
    let out = solve(&q, &[], &SolveBudget::default());
    let v = out.model().expect("sat").get("u").unwrap();
    assert!(v > 0xffff_fff0);
}

#[test]
fn hint_is_reused_when_it_satisfies() {
    let q = pc(vec![mk_binary(BinOp::Gt, x(), Term::int(10))]);
    let mut hint = Model::new();
    hint.set(&vars()[0], 33);
    let out = solve_with_hint(&q, &vars(), &SolveBudget::default(), Some(&hint));
    assert_eq!(out.model().unwrap().get("x"), Some(33));
}

#[test]
fn solving_is_deterministic() {
    let q = pc(vec![
        mk_binary(
            BinOp::Eq,
            mk_binary(BinOp::Rem, mk_binary(BinOp::Mul, x(), y()), Term::int(7)),
            Term::int(3),
        ),
        mk_binary(BinOp::Gt, x(), Term::int(20)),
    ]);
    let a = solve(&q, &vars(), &SolveBudget::with_seed(9));
    let b = solve(&q, &vars(), &SolveBudget::with_seed(9));
    assert_eq!(a, b);
    assert!(a.is_sat());
}

#[test]
fn model_is_total_over_requested_vars() {
    let q = pc(vec![mk_binary(BinOp::Gt, x(), Term::int(1))]);
    let m = solve(&q, &vars(), &SolveBudget::default());
    let m = m.model().unwrap();
    assert!(m.get("y").is_some());
}

#[test]
fn faulting_closed_conjunct_is_unsat() {
    let t = mk_binary(BinOp::Ne, Term::raw(Node::Binary(BinOp::Div, Term::int(1), Term::int(0))), Term::int(0));
    assert!(solve(&pc(vec![t]), &[], &SolveBudget::default()).is_unsat());
}

// ---------------------------------------------------------------------------
// simplify preserves evaluation, faults included

fn leaf() -> impl Strategy<Value = Term> {
    prop_oneof![
        Just(Term::var("x", Ty::I32)),
        Just(Term::var("y", Ty::I32)),
        Just(Term::var("u", Ty::U32)),
        Just(Term::var("c", Ty::I8)),
        prop::sample::select(vec![0i32, 1, -1, 2, 5, 31, 32, i32::MIN, i32::MAX])
            .prop_map(Term::int),
        any::<u32>().prop_map(|b| Term::constant(b, Ty::U32)),
    ]
}

fn term() -> impl Strategy<Value = Term> {
    leaf().prop_recursive(5, 48, 2, |inner| {
        let bin = prop::sample::select(vec![
            BinOp::Add,
            BinOp::Sub,
            BinOp::Mul,
            BinOp::Div,
            BinOp::Rem,
            BinOp::Lt,
            BinOp::Le,
            BinOp::Gt,
            BinOp::Ge,
            BinOp::Eq,
            BinOp::Ne,
            BinOp::LAnd,
            BinOp::LOr,
            BinOp::BitAnd,
            BinOp::BitOr,
            BinOp::BitXor,
            BinOp::Shl,
            BinOp::Shr,
        ]);
        let un = prop::sample::select(vec![UnOp::Neg, UnOp::Not, UnOp::BitNot]);
        let ty = prop::sample::select(vec![Ty::I32, Ty::U32, Ty::I8]);
        prop_oneof![
            (bin, inner.clone(), inner.clone())
                .prop_map(|(op, a, b)| Term::raw(Node::Binary(op, a, b))),
            (un, inner.clone()).prop_map(|(op, a)| Term::raw(Node::Unary(op, a))),
            (ty, inner).prop_map(|(t, a)| Term::raw(Node::Cast(t, a))),
        ]
    })
}

fn assignment() -> impl Strategy<Value = Model> {
    let val = prop_oneof![
        -70i32..70,
        Just(i32::MIN),
        Just(i32::MAX),
        Just(-1),
        any::<i32>()
    ];
    (val.clone(), val.clone(), val.clone(), val).prop_map(|(a, b, c, d)| {
        let mut m = Model::new();
        m.set(&SymVar::new("x", Ty::I32), a as u32);
        m.set(&SymVar::new("y", Ty::I32), b as u32);
        m.set(&SymVar::new("u", Ty::U32), c as u32);
        m.set(&SymVar::new("c", Ty::I8), d as u32);
        m
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn simplify_preserves_semantics(t in term(), m in assignment()) {
        let s = simplify(&t);
        prop_assert_eq!(eval_concrete(&s, &m), eval_concrete(&t, &m), "{} vs {}", t, s);
    }

    #[test]
    fn sat_models_satisfy_every_conjunct(a in term(), b in term()) {
        let q = pc(vec![a, b]);
        let budget = SolveBudget { max_evals: 400, ..Default::default() };
        if let SolveOutcome::Sat(m) = solve(&q, &[], &budget) {
            for c in &q.conjuncts {
                prop_assert_eq!(eval_bool(c, &m), Ok(true));
            }
        }
    }
}
