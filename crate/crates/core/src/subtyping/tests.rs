use proptest::prelude::*;

use super::*;
use crate::engine::Enumerator;
use crate::fixtures;
use crate::ir::{EnvExpr, TYPE};
use crate::parser::{parse_rule, parse_spec, parse_term};

fn spec(src: &str) -> LanguageSpec {
    parse_spec(src).unwrap()
}

fn transformed(spec: &LanguageSpec, rule: &str) -> InferenceRule {
    add_subtyping_to_rule(spec.rule(rule).unwrap(), spec).unwrap()
}

fn expected(spec: &LanguageSpec, text: &str) -> InferenceRule {
    parse_rule(spec, text).unwrap()
}

#[test]
fn application_gets_one_subtype_premise() {
    let stlc = spec(fixtures::STLC);
    let want = expected(
        &stlc,
        "rule t-app\n  G |- e1 : (T11 -> T2)\n  G |- e2 : T12\n  T12 <: T11\n  ---\n  G |- (app e1 e2) : T2\n",
    );
    assert_eq!(transformed(&stlc, "t-app"), want);
}

#[test]
fn doubly_apply_matches_the_hand_derived_rule() {
    let funny = spec(fixtures::LANG_FUNNY);
    // primes as in the classroom answer; canonical() makes names irrelevant
    let answer = expected(
        &funny,
        "rule t-doublyApply
  G |- e1 : (T1 -> T2')
  G |- e2 : (T2 -> T1')
  G |- e3 : T1''
  G |- e4 : T2''
  T1' <: T1
  T1'' <: T1
  T2' <: T2
  T2'' <: T2
  ---
  G |- (doublyApply e1 e2 e3 e4) : (T2 * T1)
",
    );
    assert_eq!(transformed(&funny, "t-doublyApply").canonical(), answer.canonical());
}

#[test]
fn peers_are_joined() {
    let funny = spec(fixtures::LANG_FUNNY);
    let answer = expected(
        &funny,
        "rule t-addToPairAsList
  G |- e1 : T'
  G |- e2 : (T'' * T''')
  T = T' \\/ T'' \\/ T'''
  ---
  G |- (addToPairAsList e1 e2) : (List T)
",
    );
    assert_eq!(transformed(&funny, "t-addToPairAsList").canonical(), answer.canonical());

    let refs = spec(fixtures::REFS);
    let answer = expected(
        &refs,
        "rule t-if\n  G |- e1 : Bool\n  G |- e2 : T1\n  G |- e3 : T2\n  T = T1 \\/ T2\n  ---\n  G |- (if e1 e2 e3) : T\n",
    );
    assert_eq!(transformed(&refs, "t-if"), answer);
}

#[test]
fn invariant_occurrences_are_equated() {
    let refs = spec(fixtures::REFS);
    let answer = expected(
        &refs,
        "rule t-assign\n  G |- e1 : (Ref T1)\n  G |- e2 : T2\n  T1 = T2\n  ---\n  G |- (assign e1 e2) : Unit\n",
    );
    assert_eq!(transformed(&refs, "t-assign"), answer);
}

#[test]
fn two_contravariant_occurrences_are_rejected() {
    let app2 = spec(fixtures::APP2);
    let err = add_subtyping(&app2).unwrap_err();
    let AddSubtypingError::Subtyping(err) = err else { panic!("{err}") };
    assert_eq!(err.rule, "t-app2");
    assert_eq!(err.variable.token(), "T");
    assert_eq!(err.reason, SubtypingReason::MultipleContravariant);
    let marks: Vec<Variance> = err.occurrences.iter().map(|o| o.variance).collect();
    use Variance::*;
    assert_eq!(marks, [Contravariant, Contravariant, Covariant, Covariant]);
    assert!(err.to_string().contains("4 occurrences, 2 contravariant"), "{err}");
}

#[test]
fn rules_without_repetition_are_unchanged() {
    let stlc = spec(fixtures::STLC);
    for name in ["t-const", "t-real", "t-abs"] {
        assert_eq!(&transformed(&stlc, name), stlc.rule(name).unwrap());
    }
    let out = add_subtyping(&stlc).unwrap();
    assert_eq!(out.rules.iter().filter(|r| r.is_reduction()).count(), 1);
}

#[test]
fn split_renames_each_repeated_occurrence() {
    let funny = spec(fixtures::LANG_FUNNY);
    let rule = funny.rule("t-doublyApply").unwrap();
    let (premises, varmap) = split_equal_types(&rule.premises, &BTreeSet::new());
    let names: Vec<(String, Vec<String>)> =
        varmap.iter().map(|(k, v)| (k.token(), v.iter().map(Metavariable::token).collect())).collect();
    let want = [("T1", ["T11", "T12", "T13"]), ("T2", ["T21", "T22", "T23"])];
    assert_eq!(names.len(), 2);
    for ((k, v), (wk, wv)) in names.iter().zip(want) {
        assert_eq!(k, wk);
        assert_eq!(v, &wv);
    }
    // subjects and environments are untouched
    for (old, new) in rule.premises.iter().zip(&premises) {
        let (Formula::Typing { env: e1, subject: s1, .. }, Formula::Typing { env: e2, subject: s2, .. }) = (old, new)
        else {
            panic!()
        };
        assert_eq!((e1, s1), (e2, s2));
    }
}

#[test]
fn fresh_names_avoid_reserved_tokens() {
    let funny = spec(fixtures::LANG_FUNNY);
    let rule = funny.rule("t-addToPairAsList").unwrap();
    let reserved: BTreeSet<String> = ["T1".to_string()].into();
    let (_, varmap) = split_equal_types(&rule.premises, &reserved);
    let fresh: Vec<String> = varmap.iter().flat_map(|(_, v)| v.iter().map(Metavariable::token)).collect();
    assert_eq!(fresh, ["T2", "T3", "T4"]);
}

#[test]
fn transformation_is_idempotent() {
    for src in [fixtures::STLC, fixtures::REFS, fixtures::LANG_FUNNY, fixtures::IFLIST] {
        let once = add_subtyping(&spec(src)).unwrap();
        assert_eq!(add_subtyping(&once).unwrap(), once);
    }
}

#[test]
fn lattice_orders_arrows_by_variance() {
    let stlc = spec(fixtures::STLC);
    let t = |s: &str| parse_term(&stlc, s).unwrap();
    let lattice = SubtypeLattice::new(&stlc).unwrap();
    assert!(lattice.is_subtype(&t("int"), &t("float")));
    assert!(!lattice.is_subtype(&t("float"), &t("int")));
    assert!(lattice.is_subtype(&t("(float -> int)"), &t("(int -> float)")));
    assert!(!lattice.is_subtype(&t("(int -> int)"), &t("(float -> int)")));
    assert_eq!(lattice.join(&t("(float -> int)"), &t("(int -> int)")).unwrap(), t("(int -> int)"));
    assert_eq!(lattice.meet(&t("(float -> int)"), &t("(int -> float)")).unwrap(), t("(float -> int)"));
    assert!(matches!(lattice.join(&t("int"), &t("B")), Err(LatticeError::NoJoin(..))));
}

#[test]
fn invariant_constructors_only_relate_equal_arguments() {
    let refs = spec(fixtures::REFS);
    let t = |s: &str| parse_term(&refs, s).unwrap();
    let lattice = SubtypeLattice::new(&refs).unwrap();
    assert!(!lattice.is_subtype(&t("(Ref int)"), &t("(Ref float)")));
    assert!(lattice.is_subtype(&t("(Ref int)"), &t("(Ref int)")));
    assert!(lattice.join(&t("(Ref int)"), &t("(Ref float)")).is_err());
}

#[test]
fn cyclic_base_axioms_are_ill_formed() {
    let mut stlc = spec(fixtures::STLC);
    stlc.base_subtypes.push(("float".into(), "int".into()));
    assert!(matches!(SubtypeLattice::new(&stlc), Err(LatticeError::IllFormedLattice(_))));
}

#[test]
fn generated_relations_cover_bases_and_constructors() {
    let stlc = spec(fixtures::STLC);
    let names: Vec<String> = generate_subtype_relation(&stlc).into_iter().map(|r| r.name).collect();
    assert!(names.contains(&"sub-int-float".to_string()));
    assert!(names.contains(&"sub-arrow".to_string()));
    let arrow = generate_subtype_relation(&stlc).into_iter().find(|r| r.name == "sub-arrow").unwrap();
    assert_eq!(arrow.to_string().lines().nth(1).unwrap().trim(), "T1' <: T1");
    let joins: Vec<String> = generate_join_relation(&stlc).unwrap().into_iter().map(|r| r.name).collect();
    assert!(joins.contains(&"join-float-int".to_string()));
    assert!(joins.contains(&"meet-arrow".to_string()));
}

/// Independent polarity walk: occurrences of `var` in `ty` and their variance.
fn polarities(ty: &Term, var: &str, polarity: Variance, out: &mut Vec<Variance>) {
    match ty {
        Term::Meta(m) if m.token() == var => out.push(polarity),
        Term::Ctor { name, args } => {
            for (i, a) in args.iter().enumerate() {
                let p = match (name.as_str(), i, polarity) {
                    ("Ref", _, _) => Variance::Invariant,
                    ("arrow", 0, Variance::Covariant) => Variance::Contravariant,
                    ("arrow", 0, Variance::Contravariant) => Variance::Covariant,
                    _ => polarity,
                };
                polarities(a, var, p, out);
            }
        }
        _ => {}
    }
}

fn type_strategy() -> impl Strategy<Value = Term> {
    let leaf = prop_oneof![
        Just(Term::Meta(Metavariable::new("T", None, TYPE))),
        Just(Term::Meta(Metavariable::new("T", Some("9"), TYPE))),
        Just(Term::constant("B")),
    ];
    leaf.prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Term::ctor("arrow", vec![a, b])),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Term::ctor("product", vec![a, b])),
            inner.prop_map(|a| Term::ctor("Ref", vec![a])),
        ]
    })
}

const TYPES: &str = "language t\n\ngrammar\n  Type T ::= B | (T -> T) | (T * T) | (Ref T)\n  \
                     Expression e ::= (op e e e)\n\nvariance\n  Ref : inv\n  arrow : contra co\n  product : co co\n";

fn premise(i: usize, ty: &Term) -> Formula {
    let e = Term::Meta(Metavariable::new("e", Some(&i.to_string()), "Expression"));
    Formula::Typing { env: EnvExpr::root("G"), subject: e, ty: ty.clone() }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    /// Each repeated variable takes exactly one branch, chosen by the
    /// variances of its occurrences, or the rule is rejected.
    #[test]
    fn branches_are_exclusive(tys in proptest::collection::vec(type_strategy(), 3), out_ty in type_strategy()) {
        let spec = spec(TYPES);
        let premises: Vec<Formula> = tys.iter().enumerate().map(|(i, t)| premise(i + 1, t)).collect();
        let subject = Term::ctor("op", (1..=3).map(|i| Term::Meta(Metavariable::new("e", Some(&i.to_string()), "Expression"))).collect());
        let conclusion = Formula::Typing { env: EnvExpr::root("G"), subject, ty: out_ty };
        let rule = InferenceRule::new("r", premises, conclusion);

        let (mut eqs, mut subs, mut joins, mut rejected) = (0, 0, 0, false);
        for var in ["T", "T9"] {
            let mut marks = Vec::new();
            for t in &tys {
                polarities(t, var, Variance::Covariant, &mut marks);
            }
            let n = marks.len();
            if n < 2 {
                continue;
            }
            let contra = marks.iter().filter(|m| **m == Variance::Contravariant).count();
            if marks.contains(&Variance::Invariant) {
                eqs += n - 1;
            } else if contra == 1 {
                subs += n - 1;
            } else if contra == 0 {
                joins += 1;
            } else {
                rejected = true;
            }
        }

        match add_subtyping_to_rule(&rule, &spec) {
            Err(AddSubtypingError::Subtyping(e)) => {
                prop_assert!(rejected);
                prop_assert_eq!(e.reason, SubtypingReason::MultipleContravariant);
            }
            Err(e) => prop_assert!(false, "{}", e),
            Ok(out) => {
                prop_assert!(!rejected);
                let added = &out.premises[3..];
                let count = |f: fn(&Formula) -> bool| added.iter().filter(|p| f(p)).count();
                prop_assert_eq!(count(|p| matches!(p, Formula::TypeEq { .. })), eqs);
                prop_assert_eq!(count(|p| matches!(p, Formula::Subtype { .. })), subs);
                prop_assert_eq!(count(|p| matches!(p, Formula::Join { .. })), joins);
                // after the split no type variable is shared between output types
                let mut seen = BTreeSet::new();
                for p in &out.premises[..3] {
                    let Formula::Typing { ty, .. } = p else { unreachable!() };
                    for m in ty.metavariables() {
                        prop_assert!(seen.insert(m.token()), "{} repeated in {}", m.token(), out);
                    }
                }
            }
        }
    }

    /// The subtype relation is a partial order, and joins and meets are
    /// least upper and greatest lower bounds among the enumerated types.
    #[test]
    fn subtyping_is_a_partial_order(a in 0usize..48, b in 0usize..48, c in 0usize..48) {
        let stlc = spec(fixtures::STLC);
        let types = Enumerator::new(&stlc).up_to(TYPE, 5);
        let lattice = SubtypeLattice::new(&stlc).unwrap();
        let (a, b, c) = (&types[a % types.len()], &types[b % types.len()], &types[c % types.len()]);
        let le = |x: &Term, y: &Term| lattice.is_subtype(x, y);
        prop_assert!(le(a, a));
        if le(a, b) && le(b, a) {
            prop_assert_eq!(a, b);
        }
        if le(a, b) && le(b, c) {
            prop_assert!(le(a, c));
        }
        if let Ok(j) = lattice.join(a, b) {
            prop_assert!(le(a, &j) && le(b, &j));
            if le(a, c) && le(b, c) {
                prop_assert!(le(&j, c));
            }
        }
        if let Ok(m) = lattice.meet(a, b) {
            prop_assert!(le(&m, a) && le(&m, b));
            if le(c, a) && le(c, b) {
                prop_assert!(le(c, &m));
            }
        }
    }
}
