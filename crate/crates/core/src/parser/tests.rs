use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::ck::derive_ck;
use crate::engine::TermGenerator;
use crate::fixtures;
use crate::ir::{Formula, EXPRESSION, TYPE};
use crate::subtyping::add_subtyping;

fn errors(src: &str) -> Vec<String> {
    parse_spec_named("t.lang", src).map(|_| ()).unwrap_err().iter().map(ToString::to_string).collect()
}

const MINI: &str = "language mini\n\ngrammar\n  Type T ::= B\n  Variable x ::= %name\n  \
                    Expression e ::= x | (app e e)\n  Value v ::= x\n";

#[test]
fn fixtures_print_back_byte_for_byte() {
    for (name, src) in fixtures::ALL {
        let spec = parse_spec(src).unwrap_or_else(|e| panic!("{name}: {e:?}"));
        assert_eq!(print_spec(&spec), src, "{name}");
    }
}

#[test]
fn stlc_shape() {
    let stlc = parse_spec(fixtures::STLC).unwrap();
    assert_eq!(stlc.name, "stlc");
    assert_eq!(stlc.typing_rules().count(), 4);
    assert_eq!(stlc.reduction_rules().count(), 1);
    assert_eq!(stlc.context_category().unwrap().productions.len(), 3);
    assert!(stlc.binders.contains("lam"));
    assert_eq!(stlc.base_subtypes, [("int".to_string(), "float".to_string())]);
}

#[test]
fn infix_and_list_sugar() {
    let funny = parse_spec(fixtures::LANG_FUNNY).unwrap();
    let t = parse_term(&funny, "(B -> (B * B))").unwrap();
    assert_eq!(t.head(), Some("arrow"));
    assert_eq!(t.args()[1].head(), Some("product"));
    let list = parse_term(&funny, "[c, c1]").unwrap();
    assert_eq!(
        list,
        Term::ctor(
            "cons",
            vec![Term::constant("c"), Term::ctor("cons", vec![Term::constant("c1"), Term::constant("nil")])]
        )
    );
    assert_eq!(list.to_string(), "[c, c1]");
    assert_eq!(parse_term(&funny, "[]").unwrap(), Term::constant("nil"));
}

#[test]
fn ground_terms_resolve_names_by_scope() {
    let stlc = parse_spec(fixtures::STLC).unwrap();
    let t = parse_term(&stlc, "(lam x int (app x y))").unwrap();
    let Term::Binder { bound, args, .. } = &t else { panic!("{t:?}") };
    assert_eq!(bound, "x");
    assert_eq!(args[1], Term::ctor("app", vec![Term::Var("x".into()), Term::Var("y".into())]));
    assert_eq!(t.free_vars().into_iter().collect::<Vec<_>>(), ["y"]);
    assert_eq!(parse_term(&stlc, "c2").unwrap(), Term::constant("c2"));
}

#[test]
fn patterns_resolve_metavariables() {
    let stlc = parse_spec(fixtures::STLC).unwrap();
    let p = parse_pattern(&stlc, "(app v1 e')").unwrap();
    let metas: Vec<(String, String)> = p.metavariables().into_iter().map(|m| (m.token(), m.category.clone())).collect();
    assert_eq!(metas, [("v1".into(), "Value".into()), ("e'".into(), "Expression".into())]);
    assert!(parse_pattern(&stlc, "(app q e)").is_err());
}

#[test]
fn formula_kinds() {
    let stlc = parse_spec(fixtures::STLC).unwrap();
    let ck = derive_ck(&stlc).unwrap();
    let conclusion =
        |spec: &LanguageSpec, f: &str| parse_rule(spec, &format!("rule r\n  ---\n  {f}\n")).unwrap().conclusion;
    assert!(
        matches!(conclusion(&stlc, "G, x : T1 |- e : T2"), Formula::Typing { env, .. } if env.extensions.len() == 1)
    );
    assert!(matches!(conclusion(&stlc, "(app e1 e2) --> e1"), Formula::Reduction { .. }));
    assert!(matches!(conclusion(&ck, "<v , k> --> <v , k>"), Formula::MachineStep { .. }));
    assert!(matches!(conclusion(&stlc, "T1 <: T2"), Formula::Subtype { .. }));
    assert!(matches!(conclusion(&stlc, "T1 = T2"), Formula::TypeEq { .. }));
    assert!(matches!(conclusion(&stlc, "T = T1 \\/ T2 \\/ T3"), Formula::Join { operands, .. } if operands.len() == 3));
    assert!(matches!(conclusion(&stlc, "T = T1 /\\ T2"), Formula::Meet { .. }));
}

#[test]
fn substitution_only_on_unspaced_brackets() {
    let stlc = parse_spec(fixtures::STLC).unwrap();
    let beta = stlc.rule("beta").unwrap();
    let Formula::Reduction { rhs, .. } = &beta.conclusion else { panic!() };
    assert!(matches!(rhs, Term::Subst { .. }));
    assert!(parse_term(&stlc, "e[v/x]").is_err(), "substitution is a pattern-only form");
}

#[test]
fn missing_header() {
    assert_eq!(errors("grammar\n  Type T ::= B\n"), ["t.lang:1:1: expected 'language' header"]);
}

#[test]
fn unbalanced_parenthesis_points_at_the_line_end() {
    let errs = errors("language x\n\ngrammar\n  Type T ::= B | (foo T\n");
    assert_eq!(errs, ["t.lang:4:24: expected `)`, found end of line"]);
}

#[test]
fn unknown_metavariable_is_located() {
    let src = format!("{MINI}\nrule r\n  G |- e1 : Q\n  ---\n  G |- (app e1 e2) : B\n");
    let errs = errors(&src);
    assert_eq!(errs.len(), 1);
    assert!(errs[0].starts_with("t.lang:10:13: unknown metavariable `Q`"), "{errs:?}");
}

#[test]
fn bad_variance_mark_lists_the_choices() {
    let src = "language x\n\ngrammar\n  Type T ::= B | (Box T)\n\nvariance\n  Box : sideways\n";
    let err = &parse_spec(src).unwrap_err()[0];
    assert_eq!(err.expected, ["co", "contra", "inv"]);
    assert_eq!((err.span.line, err.span.column), (7, 9));
}

#[test]
fn all_validation_errors_are_reported_in_order() {
    let src = "language x\n\ngrammar\n  Type T ::= B | (Box T)\n  Expression e ::= (app e e)\n\n\
               rule a\n  ---\n  (app e1 e2) --> (bogus e1)\n";
    let errs = errors(src);
    assert_eq!(errs.len(), 3, "{errs:?}");
    assert!(errs[0].contains("missing required grammar category `Value`"));
    assert!(errs[1].contains("no variance declared for type constructor `Box`"));
    assert!(errs[2].contains("constructor `bogus`"));
    let lines: Vec<&str> = errs.iter().map(|e| e.split(':').nth(1).unwrap()).collect();
    assert_eq!(lines, ["1", "4", "7"]);
}

#[test]
fn cyclic_base_subtypes_are_rejected() {
    let src = "language x\n\ngrammar\n  Type T ::= A | B\n\nsubtype-base\n  A <: B\n  B <: A\n";
    let errs = errors(src);
    assert!(errs.iter().any(|e| e.contains("form a cycle")), "{errs:?}");
}

#[test]
fn typing_must_be_syntax_directed() {
    let src = format!("{MINI}\nrule r1\n  ---\n  G |- (app e1 e2) : B\n\nrule r2\n  ---\n  G |- (app e1 e2) : B\n");
    assert!(errors(&src).iter().any(|e| e.contains("syntax-directed")));
}

#[test]
fn holes_stay_in_contexts() {
    let src = format!("{MINI}\nrule r\n  ---\n  (app [.] e) --> e\n");
    assert!(errors(&src).iter().any(|e| e.contains("hole")), "{:?}", errors(&src));
}

#[test]
fn context_productions_need_exactly_one_hole() {
    let src = format!("{MINI}  Context E ::= [.] | (app E E)\n");
    assert!(errors(&src).iter().any(|e| e.contains("exactly one hole")));
}

#[test]
fn rule_blocks_have_one_conclusion() {
    let src = format!("{MINI}\nrule r\n  G |- e : B\n  ---\n  G |- e : B\n  G |- e : B\n");
    assert!(!errors(&src).is_empty());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn programs_round_trip(seed in any::<u64>(), size in 1usize..20) {
        for (_, src) in fixtures::ALL {
            let spec = parse_spec(src).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let generator = TermGenerator::new(&spec);
            for category in [EXPRESSION, TYPE] {
                if let Some(t) = generator.generate(category, size, &mut rng) {
                    prop_assert_eq!(parse_term(&spec, &t.to_string()).unwrap(), t);
                }
            }
        }
    }

    #[test]
    fn specs_round_trip(keep in proptest::collection::vec(any::<bool>(), 40), which in 0usize..3) {
        for (_, src) in fixtures::ALL {
            let source = parse_spec(src).unwrap();
            let mut spec = match which {
                0 => source,
                1 => match add_subtyping(&source) { Ok(s) => s, Err(_) => continue },
                _ => match derive_ck(&source) { Ok(s) => s, Err(_) => continue },
            };
            let mut flags = keep.iter().cycle();
            spec.rules.retain(|_| *flags.next().unwrap());
            let text = print_spec(&spec);
            let back = parse_spec(&text).unwrap();
            prop_assert_eq!(print_spec(&back), text);
            prop_assert_eq!(back, spec);
        }
    }
}
