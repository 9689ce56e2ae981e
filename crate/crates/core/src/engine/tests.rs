use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::ck::derive_ck;
use crate::fixtures;
use crate::ir::{LanguageSpec, Term, EXPRESSION, TYPE};
use crate::parser::{parse_spec, parse_term};
use crate::subtyping::add_subtyping;

fn spec(src: &str) -> LanguageSpec {
    parse_spec(src).unwrap()
}

fn term(spec: &LanguageSpec, src: &str) -> Term {
    parse_term(spec, src).unwrap()
}

#[test]
fn decomposition_finds_the_leftmost_redex() {
    let stlc = spec(fixtures::STLC);
    let t = term(&stlc, "(app (app (lam x int x) c) c)");
    let (context, redex) = decompose(&t, &stlc).unwrap();
    assert_eq!(context, Term::ctor("app", vec![Term::Hole, term(&stlc, "c")]));
    assert_eq!(redex, term(&stlc, "(app (lam x int x) c)"));
    assert_eq!(all_decompositions(&t, &stlc).len(), 1);
    assert_eq!(context.plug(&redex), t);
}

#[test]
fn values_and_stuck_terms_do_not_decompose() {
    let stlc = spec(fixtures::STLC);
    assert!(decompose(&term(&stlc, "(lam x int (app x x))"), &stlc).is_none());
    assert!(decompose(&term(&stlc, "(app c c)"), &stlc).is_none());
}

#[test]
fn reduction_trace_of_the_list_example() {
    let iflist = spec(fixtures::IFLIST);
    let t = term(&iflist, "(if (hd [(and f (app (lam x Bool x) t)), t]) t f)");
    let run = eval(&t, &iflist, DEFAULT_FUEL);
    let rules: Vec<&str> = run.trace.iter().map(|s| s.rule.as_str()).collect();
    assert_eq!(rules, ["beta", "and-f", "hd", "if-f"]);
    assert_eq!(run.trace[0].after, State::Term(term(&iflist, "(if (hd [(and f t), t]) t f)")));
    assert_eq!(
        run.trace[0].to_string(),
        "[contextual-reduction/beta] (if (hd [(and f (app (lam x Bool x) t)), t]) t f)  ~~>  (if (hd [(and f t), t]) t f)"
    );
    assert_eq!(run.result, Ok(term(&iflist, "f")));
}

#[test]
fn machine_trace_of_the_list_example() {
    let iflist = spec(fixtures::IFLIST);
    let ck = derive_ck(&iflist).unwrap();
    let t = term(&iflist, "(if (hd [(and f (app (lam x Bool x) t)), t]) t f)");
    let run = ck_eval(&t, &ck, DEFAULT_FUEL);
    assert_eq!(run.result, Ok(term(&iflist, "f")));
    let kinds: Vec<StepKind> = run.trace.iter().map(|s| s.kind).collect();
    assert_eq!(kinds[0], StepKind::MachineStart);
    assert!(kinds.contains(&StepKind::MachineOrder));
    assert!(kinds.contains(&StepKind::MachineComputation));
    assert!(kinds.contains(&StepKind::MachineRebuild));
    assert!(!kinds.contains(&StepKind::ContextualReduction));
    let State::Machine(last) = &run.trace.last().unwrap().after else { panic!() };
    assert!(is_final(last, &ck));
}

#[test]
fn machine_starts_from_the_empty_continuation() {
    let stlc = spec(fixtures::STLC);
    let config = initial_config(&term(&stlc, "c"));
    assert_eq!(config.to_string(), "<c , mt>");
    let ck = derive_ck(&stlc).unwrap();
    assert!(is_final(&config, &ck));
    assert!(machine_step(&config, &ck).is_none());
}

#[test]
fn substitution_avoids_capture() {
    let stlc = spec(fixtures::STLC);
    // the inner binder x would capture the argument's free x
    let t = term(&stlc, "(app (lam y (int -> int) (lam x int y)) (lam z int x))");
    let next = step(&t, &stlc).unwrap().unwrap().0;
    assert!(next.alpha_eq(&term(&stlc, "(lam x1 int (lam z int x))")), "{next}");
    assert_eq!(next.free_vars().into_iter().collect::<Vec<_>>(), ["x"]);
}

#[test]
fn failures_are_reported() {
    let stlc = spec(fixtures::STLC);
    let ck = derive_ck(&stlc).unwrap();
    let stuck = term(&stlc, "(app c c)");
    assert_eq!(eval(&stuck, &stlc, 10).result, Err(EvalError::Stuck(stuck.clone())));
    assert!(matches!(ck_eval(&stuck, &ck, 10).result, Err(EvalError::StuckMachine(_))));

    let omega = term(&stlc, "(app (lam x B (app x x)) (lam x B (app x x)))");
    let run = eval(&omega, &stlc, 25);
    assert!(matches!(run.result, Err(EvalError::OutOfFuel { steps: 25, .. })));
    assert_eq!(run.trace.len(), 25);
    assert!(matches!(ck_eval(&omega, &ck, 25).result, Err(EvalError::OutOfFuel { .. })));
}

#[test]
fn typing_follows_the_rules() {
    let stlc = spec(fixtures::STLC);
    let t = |s: &str| term(&stlc, s);
    assert_eq!(typecheck(&stlc, &t("(app (lam x int x) c)")), Ok(t("int")));
    assert_eq!(typecheck(&stlc, &t("(lam x int (lam y float x))")), Ok(t("(int -> (float -> int))")));
    assert!(matches!(typecheck(&stlc, &t("(app (lam x float x) c)")), Err(TypeError::Mismatch { .. })));
    assert_eq!(typecheck(&stlc, &t("x")), Err(TypeError::UnboundVariable("x".into())));
}

#[test]
fn subtyping_makes_more_programs_typable() {
    let stlc = spec(fixtures::STLC);
    let sub = add_subtyping(&stlc).unwrap();
    let t = |s: &str| term(&stlc, s);
    assert_eq!(typecheck(&sub, &t("(app (lam x float x) c)")), Ok(t("float")));
    assert!(matches!(typecheck(&sub, &t("(app (lam x int x) d)")), Err(TypeError::SubtypeFailure { .. })));

    let refs = spec(fixtures::REFS);
    let sub = add_subtyping(&refs).unwrap();
    let t = |s: &str| term(&refs, s);
    assert_eq!(typecheck(&sub, &t("(if true c d)")), Ok(t("float")));
    assert!(typecheck(&refs, &t("(if true c d)")).is_err());
    assert!(matches!(typecheck(&sub, &t("(if true c unit)")), Err(TypeError::NoJoin { .. })));
    assert!(matches!(typecheck(&sub, &t("(assign (ref c) d)")), Err(TypeError::NotEqual { .. })));
    assert_eq!(typecheck(&sub, &t("(assign (ref d) d)")), Ok(t("Unit")));
}

#[test]
fn empty_lists_take_their_type_from_context() {
    let funny = spec(fixtures::LANG_FUNNY);
    let checker = TypeChecker::new(&funny).unwrap();
    let nil = Term::constant("nil");
    // nothing fixes the element type of a bare empty list
    assert_eq!(checker.infer(&TypeEnv::new(), &nil), Err(TypeError::Underdetermined { rule: "t-nil".into() }));
    assert_eq!(checker.check(&TypeEnv::new(), &nil, &term(&funny, "(List (B * B))")), Ok(()));
    assert!(checker.check(&TypeEnv::new(), &nil, &term(&funny, "B")).is_err());
    assert_eq!(typecheck(&funny, &term(&funny, "[c, c1]")), Ok(term(&funny, "(List B)")));

    let iflist = spec(fixtures::IFLIST);
    let t = term(&iflist, "(if (hd [(and f (app (lam x Bool x) t)), t]) t f)");
    assert_eq!(typecheck(&iflist, &t), Ok(term(&iflist, "Bool")));
}

#[test]
fn untypable_shapes() {
    let funny = spec(fixtures::LANG_FUNNY);
    assert!(matches!(typecheck(&funny, &term(&funny, "(fst c)")), Err(TypeError::Mismatch { .. })));
    assert!(matches!(typecheck(&funny, &term(&funny, "[c, (lam x B x)]")), Err(TypeError::Mismatch { .. })));

    let mut stlc = spec(fixtures::STLC);
    let rule = stlc.rules.iter_mut().find(|r| r.name == "t-const").unwrap();
    let crate::ir::Formula::Typing { ty, .. } = &mut rule.conclusion else { panic!() };
    *ty = Term::Meta(crate::ir::Metavariable::new("T", None, TYPE));
    assert!(matches!(typecheck(&stlc, &Term::constant("c")), Err(TypeError::Underdetermined { .. })));
}

#[test]
fn enumeration_counts_types() {
    let stlc = spec(fixtures::STLC);
    let mut e = Enumerator::new(&stlc);
    // 3 base types and 3 * 3 arrows between them
    assert_eq!(e.up_to(TYPE, 3).len(), 12);
    assert_eq!(e.up_to(TYPE, 4).len(), 12);
    let exprs = e.up_to(EXPRESSION, 3);
    assert!(exprs.contains(&term(&stlc, "(lam x int x)")));
    assert!(!exprs.iter().any(|t| !t.is_closed()));
}

#[test]
fn programs_are_closed_typed_and_reproducible() {
    let stlc = spec(fixtures::STLC);
    let a = generate_programs(&stlc, 200, 7, 7);
    assert_eq!(a.len(), 200);
    assert_eq!(a, generate_programs(&stlc, 200, 7, 7));
    assert_ne!(a, generate_programs(&stlc, 200, 7, 8));
    for t in &a {
        assert!(t.size() <= 7 && t.is_closed(), "{t}");
        assert!(typecheck(&stlc, t).is_ok(), "{t}");
    }
}

#[test]
fn semantics_agree_on_generated_programs() {
    for src in [fixtures::STLC, fixtures::LANG_FUNNY, fixtures::IFLIST] {
        let source = spec(src);
        let ck = derive_ck(&source).unwrap();
        let report = compare(&source, &ck, &CompareConfig { count: 200, ..CompareConfig::default() });
        assert_eq!(report.tested, 200);
        assert_eq!(report.disagreement, None);
    }
}

#[test]
fn a_broken_machine_is_caught_and_shrunk() {
    let source = spec(fixtures::STLC);
    let mut ck = derive_ck(&source).unwrap();
    // computation forgets to substitute
    let comp = ck.rules.iter_mut().find(|r| r.name == "app-comp-1").unwrap();
    let crate::ir::Formula::MachineStep { rhs, .. } = &mut comp.conclusion else { panic!() };
    rhs.focus = term(&source, "c");
    let report = compare(&source, &ck, &CompareConfig::default());
    let d = report.disagreement.expect("disagreement");
    assert!(d.shrunk.size() <= d.original.size());
    assert!(!agree(&d.smallstep, &d.machine));
}

#[test]
fn shrinking_keeps_the_property() {
    let stlc = spec(fixtures::STLC);
    let t = term(&stlc, "(app (lam x int (app (lam y int y) x)) c)");
    let small = shrink(&t, |u| u.size() >= 3 && u.head() == Some("app"));
    assert_eq!(small.size(), 3);
    assert!(small.head() == Some("app"));
}

#[test]
fn agreement_is_up_to_bound_names() {
    let stlc = spec(fixtures::STLC);
    let a = Ok(term(&stlc, "(lam x int x)"));
    let b = Ok(term(&stlc, "(lam y int y)"));
    assert!(agree(&a, &b));
    assert!(!agree(&a, &Ok(term(&stlc, "(lam y int x)"))));
    assert!(agree(&Err(EvalError::Stuck(Term::Hole)), &Err(EvalError::StuckMachine(initial_config(&Term::Hole)))));
}

#[test]
fn step_kinds_come_from_rule_names() {
    assert_eq!(StepKind::of_machine_rule("app-start"), StepKind::MachineStart);
    assert_eq!(StepKind::of_machine_rule("doublyApply-order-3"), StepKind::MachineOrder);
    assert_eq!(StepKind::of_machine_rule("pair-value"), StepKind::MachineRebuild);
    assert_eq!(StepKind::of_machine_rule("if-comp-2"), StepKind::MachineComputation);
    assert_eq!(StepKind::of_machine_rule("reorder-thing"), StepKind::MachineComputation);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn plug_inverts_decompose(seed in any::<u64>(), size in 1usize..12) {
        for src in [fixtures::STLC, fixtures::LANG_FUNNY, fixtures::IFLIST] {
            let spec = spec(src);
            let generator = TermGenerator::new(&spec);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let Some(t) = generator.generate(EXPRESSION, size, &mut rng) else { continue };
            if let Some((context, redex)) = decompose(&t, &spec) {
                prop_assert_eq!(context.plug(&redex), t.clone());
                prop_assert_eq!(context.positions().iter().filter(|p| context.at(p) == Some(&Term::Hole)).count(), 1);
                prop_assert_eq!(all_decompositions(&t, &spec).len(), 1);
            }
        }
    }

    #[test]
    fn generated_terms_respect_size_and_scope(seed in any::<u64>(), size in 1usize..15) {
        let spec = spec(fixtures::LANG_FUNNY);
        let generator = TermGenerator::new(&spec);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        if let Some(t) = generator.generate(EXPRESSION, size, &mut rng) {
            prop_assert!(t.size() <= size);
            prop_assert!(t.is_closed());
            prop_assert!(spec.derives(EXPRESSION, &t));
        }
    }

    /// Preservation, stated with checking rather than inference: a step
    /// may leave a bare empty list whose type only the context determines.
    #[test]
    fn steps_preserve_types(seed in any::<u64>()) {
        let spec = spec(fixtures::LANG_FUNNY);
        let checker = TypeChecker::new(&spec).unwrap();
        for t in generate_programs(&spec, 5, 10, seed) {
            let ty = checker.infer(&TypeEnv::new(), &t).unwrap();
            let run = eval(&t, &spec, 50);
            for s in &run.trace {
                let State::Term(next) = &s.after else { unreachable!() };
                prop_assert_eq!(checker.check(&TypeEnv::new(), next, &ty), Ok(()), "{} after {}", next, s.rule);
            }
        }
    }
}
