//! Executing specifications: reduction semantics, CK machines, type
//! checking, program generation and differential testing of the two
//! semantics.

mod compare;
mod generate;
mod machine;
mod matching;
mod smallstep;
mod trace;
mod typecheck;

pub use compare::{agree, compare, compare_programs, shrink, CompareConfig, CompareReport, Disagreement};
pub use generate::{enumerate_programs, generate_programs, Enumerator, TermGenerator};
pub use machine::{ck_eval, initial_config, is_final, machine_step};
pub use matching::{instantiate, is_bound, match_into, match_pattern, InstantiateError, Substitution};
pub use smallstep::{all_decompositions, decompose, eval, step, EvalError, Evaluation, DEFAULT_FUEL};
pub use trace::{State, StepKind, TraceStep};
pub use typecheck::{typecheck, TypeChecker, TypeEnv, TypeError};

#[cfg(test)]
mod tests;
