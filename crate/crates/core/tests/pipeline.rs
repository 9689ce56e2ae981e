//! The library used end to end through its public API.

use langx::engine::{self, CompareConfig};
use langx::{ck, fixtures, parser, subtyping};

const SMALL: CompareConfig = CompareConfig { count: 200, seed: 3, max_size: 6, fuel: engine::DEFAULT_FUEL };

#[test]
fn fixtures_survive_print_and_reparse() {
    for (name, src) in fixtures::ALL {
        let spec = parser::parse_spec(src).unwrap_or_else(|e| panic!("{name}: {e:?}"));
        let again = parser::parse_spec(&parser::print_spec(&spec)).unwrap();
        assert_eq!(parser::print_spec(&again), parser::print_spec(&spec), "{name}");
    }
}

// Subtyping only touches typing rules, so the machine derived from the
// transformed spec must still agree with the original reduction rules.
#[test]
fn transforms_compose() {
    for (name, src) in [("stlc", fixtures::STLC), ("langFunny", fixtures::LANG_FUNNY)] {
        let spec = parser::parse_spec(src).unwrap();
        let typed = subtyping::add_subtyping(&spec).unwrap();
        let machine = ck::derive_ck(&typed).unwrap();
        let report = engine::compare(&spec, &machine, &SMALL);
        assert_eq!(report.tested, SMALL.count, "{name}");
        assert!(report.disagreement.is_none(), "{name}: {:?}", report.disagreement);
    }
}

#[test]
fn machine_output_is_itself_a_spec() {
    let spec = parser::parse_spec(fixtures::LANG_FUNNY).unwrap();
    let machine = ck::derive_ck(&spec).unwrap();
    let text = parser::print_spec(&machine);
    let reparsed = parser::parse_spec(&text).unwrap();
    assert_eq!(parser::print_spec(&reparsed), text);
    assert!(engine::compare(&spec, &reparsed, &SMALL).disagreement.is_none());
}

#[test]
fn generated_programs_are_closed_values_or_reduce() {
    let spec = parser::parse_spec(fixtures::STLC).unwrap();
    let programs = engine::generate_programs(&spec, 100, 6, 11);
    assert_eq!(programs.len(), 100);
    for p in &programs {
        let ty = engine::typecheck(&spec, p).unwrap();
        let run = engine::eval(p, &spec, engine::DEFAULT_FUEL);
        let value = run.result.unwrap_or_else(|e| panic!("{p}: {e:?}"));
        assert_eq!(engine::typecheck(&spec, &value), Ok(ty), "{p}");
    }
}
