//! In-memory representation of language specifications.
//!
//! Everything here is an immutable value: transformations build new specs
//! rather than editing existing ones.

mod formula;
mod spec;
mod term;

pub use formula::{EnvExpr, Formula, InferenceRule, MachineConfig};
pub use spec::{
    fresh, resolve_in, resolve_metavariable, CategoryKind, GrammarCategory, LanguageSpec, ResolveError, Variance,
    VarianceTable, CONTEXT, CONTINUATION, EXPRESSION, TYPE, VALUE,
};
pub use term::{Metavariable, Term};

pub(crate) use formula::is_suffix_char;
