use thiserror::Error;

use super::matching::{instantiate, match_pattern, InstantiateError};
use super::trace::{State, StepKind, TraceStep};
use crate::ir::{Formula, LanguageSpec, MachineConfig, Term};

pub const DEFAULT_FUEL: usize = 10_000;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("stuck at `{0}`")]
    Stuck(Term),
    #[error("machine stuck at `{0}`")]
    StuckMachine(MachineConfig),
    #[error("out of fuel after {steps} steps at `{last}`")]
    OutOfFuel { steps: usize, last: String },
    #[error("rule `{rule}`: {source}")]
    BadRule { rule: String, source: InstantiateError },
}

/// Outcome of a run together with every step taken.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Evaluation {
    pub result: Result<Term, EvalError>,
    pub trace: Vec<TraceStep>,
}

/// Does `t` match the left-hand side of some reduction rule?
fn is_redex(t: &Term, spec: &LanguageSpec) -> bool {
    spec.reduction_rules().any(|r| match &r.conclusion {
        Formula::Reduction { lhs, .. } => match_pattern(lhs, t, spec).is_some(),
        _ => false,
    })
}

/// Context productions of `spec` that can decompose `t`: same head and
/// arity, non-hole arguments derivable from their slots. Returns the hole
/// position of each.
fn applicable_contexts(t: &Term, spec: &LanguageSpec) -> Vec<usize> {
    let Some(cat) = spec.context_category() else { return Vec::new() };
    let Term::Ctor { name, args } = t else { return Vec::new() };
    cat.productions
        .iter()
        .filter_map(|p| {
            let Term::Ctor { name: pn, args: pa } = p else { return None };
            if pn != name || pa.len() != args.len() {
                return None;
            }
            let hole = spec.context_hole(p)?;
            let fits = pa.iter().zip(args).enumerate().all(|(i, (slot, a))| match slot {
                _ if i == hole => true,
                Term::Meta(m) => spec.derives(&m.category, a),
                _ => false,
            });
            fits.then_some(hole)
        })
        .collect()
}

/// Split `t` into an evaluation context and a redex, leftmost-innermost:
/// context productions are tried in grammar order and the subterm in the
/// hole is decomposed before `t` itself is considered as a redex.
///
/// Returns `None` when `t` contains no redex reachable through contexts.
pub fn decompose(t: &Term, spec: &LanguageSpec) -> Option<(Term, Term)> {
    for hole in applicable_contexts(t, spec) {
        if let Some((inner, redex)) = decompose(&t.args()[hole], spec) {
            let mut args = t.args().to_vec();
            args[hole] = inner;
            return Some((Term::ctor(t.head().unwrap_or_default(), args), redex));
        }
    }
    is_redex(t, spec).then(|| (Term::Hole, t.clone()))
}

/// Every way of splitting `t` into a context and a redex.
pub fn all_decompositions(t: &Term, spec: &LanguageSpec) -> Vec<(Term, Term)> {
    let mut out = Vec::new();
    if is_redex(t, spec) {
        out.push((Term::Hole, t.clone()));
    }
    for hole in applicable_contexts(t, spec) {
        for (inner, redex) in all_decompositions(&t.args()[hole], spec) {
            let mut args = t.args().to_vec();
            args[hole] = inner;
            out.push((Term::ctor(t.head().unwrap_or_default(), args), redex));
        }
    }
    out
}

/// One reduction step: decompose, rewrite the redex with the first
/// matching rule, plug the result back. `None` when no step applies.
pub fn step(t: &Term, spec: &LanguageSpec) -> Option<Result<(Term, TraceStep), EvalError>> {
    let (context, redex) = decompose(t, spec)?;
    debug_assert!(all_decompositions(t, spec).len() <= 1, "evaluation contexts decompose `{t}` in more than one way");
    for rule in spec.reduction_rules() {
        let Formula::Reduction { lhs, rhs } = &rule.conclusion else { continue };
        let Some(sigma) = match_pattern(lhs, &redex, spec) else { continue };
        let result = instantiate(rhs, &sigma).map(|contractum| {
            let next = context.plug(&contractum);
            let trace = TraceStep {
                kind: StepKind::ContextualReduction,
                rule: rule.name.clone(),
                before: State::Term(t.clone()),
                after: State::Term(next.clone()),
            };
            (next, trace)
        });
        return Some(result.map_err(|source| EvalError::BadRule { rule: rule.name.clone(), source }));
    }
    None
}

/// Step until a value, a stuck term, or `fuel` steps.
pub fn eval(term: &Term, spec: &LanguageSpec, fuel: usize) -> Evaluation {
    let mut trace = Vec::new();
    let mut current = term.clone();
    loop {
        if spec.is_value(&current) {
            return Evaluation { result: Ok(current), trace };
        }
        if trace.len() >= fuel {
            let last = current.to_string();
            return Evaluation { result: Err(EvalError::OutOfFuel { steps: trace.len(), last }), trace };
        }
        match step(&current, spec) {
            None => return Evaluation { result: Err(EvalError::Stuck(current)), trace },
            Some(Err(e)) => return Evaluation { result: Err(e), trace },
            Some(Ok((next, s))) => {
                trace.push(s);
                current = next;
            }
        }
    }
}
