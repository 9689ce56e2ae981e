//! Deriving a CK machine from a reduction semantics with evaluation
//! contexts.
//!
//! Each context production `(op ... [.] ...)` with the hole at position `i`
//! becomes a continuation constructor `op_i` holding the other arguments
//! and the rest of the continuation. Per operator the machine gets:
//!
//! * a start rule, entering the operator through its value-free context;
//! * order rules, moving from one argument to the next once the focus is a value;
//! * computation rules, one per reduction rule, fired at the final continuation;
//! * a rebuild rule when the fully evaluated operator is itself a value
//!   (such as a pair), so the machine can return it to the enclosing continuation.

use std::collections::BTreeSet;
use std::fmt;

use crate::ir::{
    CategoryKind, Formula, GrammarCategory, InferenceRule, LanguageSpec, MachineConfig, Metavariable, Term,
    CONTINUATION, EXPRESSION, VALUE,
};

/// Name of the empty continuation.
pub const EMPTY_CONTINUATION: &str = "mt";
/// Metavariable of the continuation category.
pub const CONTINUATION_METAVARIABLE: &str = "k";

/// A continuation constructor derived from one context production.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContinuationOp {
    pub operator: String,
    /// 1-based position of the hole in the source context.
    pub index: usize,
    /// The context's arguments other than the hole, in order.
    pub args: Vec<Term>,
}

impl ContinuationOp {
    /// `op_i`
    pub fn name(&self) -> String {
        format!("{}_{}", self.operator, self.index)
    }

    /// Number of arguments of the source operator.
    pub fn arity(&self) -> usize {
        self.args.len() + 1
    }

    /// The grammar production `(op_i args... k)`.
    pub fn production(&self) -> Term {
        let mut args = self.args.clone();
        args.push(k_meta());
        Term::ctor(self.name(), args)
    }

    /// Full argument vector of the source context with the hole position
    /// left empty.
    fn slots(&self) -> Vec<Option<&Term>> {
        let mut out: Vec<Option<&Term>> = self.args.iter().map(Some).collect();
        out.insert(self.index - 1, None);
        out
    }

    /// Continuation term `(op_i full-args-minus-index... k)`.
    fn instance(&self, full_args: &[Term]) -> Term {
        let mut args: Vec<Term> =
            full_args.iter().enumerate().filter(|(p, _)| p + 1 != self.index).map(|(_, t)| t.clone()).collect();
        args.push(k_meta());
        Term::ctor(self.name(), args)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CkErrorKind {
    NoContextCategory,
    /// A context production without exactly one hole, or with structured arguments.
    BadContext(String),
    /// No context of the operator is free of value slots.
    NoStart,
    AmbiguousStart(Vec<String>),
    /// A value inserted at one position enables contexts with different holes.
    OrderAmbiguity {
        continuation: String,
        positions: Vec<usize>,
    },
    NoFinalContinuation,
    AmbiguousFinal(Vec<String>),
    /// A reduction rule's left-hand side does not fit the operator's contexts.
    PatternMismatch {
        rule: String,
        detail: String,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CkError {
    pub operator: Option<String>,
    pub kind: CkErrorKind,
}

impl fmt::Display for CkError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(op) = &self.operator {
            write!(f, "operator `{op}`: ")?;
        }
        match &self.kind {
            CkErrorKind::NoContextCategory => f.write_str("the spec has no evaluation-context category"),
            CkErrorKind::BadContext(p) => {
                write!(f, "context production `{p}` must have exactly one hole and only metavariable arguments")
            }
            CkErrorKind::NoStart => f.write_str("no context is free of value positions, so there is no start rule"),
            CkErrorKind::AmbiguousStart(c) => write!(f, "several contexts could start evaluation: {}", c.join(", ")),
            CkErrorKind::OrderAmbiguity { continuation, positions } => {
                write!(f, "after `{continuation}` evaluation could continue at positions {positions:?}")
            }
            CkErrorKind::NoFinalContinuation => f.write_str("every continuation leads to another; none is final"),
            CkErrorKind::AmbiguousFinal(c) => write!(f, "several continuations are final: {}", c.join(", ")),
            CkErrorKind::PatternMismatch { rule, detail } => write!(f, "rule `{rule}`: {detail}"),
        }
    }
}

impl std::error::Error for CkError {}

fn err(op: &str, kind: CkErrorKind) -> CkError {
    CkError { operator: Some(op.to_string()), kind }
}

fn k_meta() -> Term {
    Term::Meta(Metavariable::new(CONTINUATION_METAVARIABLE, None, CONTINUATION))
}

fn category_of(t: &Term) -> Option<&str> {
    t.as_meta().map(|m| m.category.as_str())
}

/// Context productions of `spec` other than the bare hole, with their operator.
fn context_productions(spec: &LanguageSpec) -> Result<Vec<(String, &Term)>, CkError> {
    let cat = spec.context_category().ok_or(CkError { operator: None, kind: CkErrorKind::NoContextCategory })?;
    let mut out = Vec::new();
    for p in &cat.productions {
        match p {
            Term::Hole => {}
            Term::Ctor { name, args }
                if spec.context_hole(p).is_some() && args.iter().all(|a| matches!(a, Term::Hole | Term::Meta(_))) =>
            {
                out.push((name.clone(), p))
            }
            _ => {
                let op = p.head().map(str::to_string);
                return Err(CkError { operator: op, kind: CkErrorKind::BadContext(p.to_string()) });
            }
        }
    }
    Ok(out)
}

/// One continuation constructor per context production, in source order.
pub fn continuation_ops(spec: &LanguageSpec) -> Result<Vec<ContinuationOp>, CkError> {
    Ok(context_productions(spec)?
        .into_iter()
        .map(|(operator, p)| {
            let hole = spec.context_hole(p).expect("checked above");
            let index = hole + 1;
            let args = p.args().iter().enumerate().filter(|(i, _)| *i != hole).map(|(_, a)| a.clone()).collect();
            ContinuationOp { operator, index, args }
        })
        .collect())
}

/// The `Continuation` category: `mt` and one production per context.
pub fn generate_continuation_grammar(spec: &LanguageSpec) -> Result<GrammarCategory, CkError> {
    let mut productions = vec![Term::constant(EMPTY_CONTINUATION)];
    productions.extend(continuation_ops(spec)?.iter().map(ContinuationOp::production));
    Ok(GrammarCategory {
        name: CONTINUATION.to_string(),
        metavariable: CONTINUATION_METAVARIABLE.to_string(),
        kind: CategoryKind::Syntax,
        productions,
    })
}

fn is_value_slot(t: &Term) -> bool {
    category_of(t) == Some(VALUE)
}

/// Metavariable of `category` numbered by argument position.
fn positional(base: &Term, position: usize) -> Term {
    match base {
        Term::Meta(m) => Term::Meta(m.with_suffix(Some(position.to_string()))),
        other => other.clone(),
    }
}

fn meta_of(spec: &LanguageSpec, category: &str, fallback: &str, position: usize) -> Term {
    let base = spec.category(category).map_or(fallback, |c| c.metavariable.as_str());
    Term::Meta(Metavariable::new(base, Some(&position.to_string()), category))
}

/// Argument vector of `cont` with positional metavariables, and `fill` at
/// the hole position.
fn positional_args(cont: &ContinuationOp, fill: Term) -> Vec<Term> {
    let mut fill = Some(fill);
    cont.slots()
        .into_iter()
        .enumerate()
        .map(|(p, slot)| match slot {
            Some(t) => positional(t, p + 1),
            None => fill.take().expect("one hole"),
        })
        .collect()
}

fn machine_rule(name: String, focus: Term, continuation: Term, focus2: Term, continuation2: Term) -> InferenceRule {
    InferenceRule::new(
        name,
        vec![],
        Formula::MachineStep {
            lhs: MachineConfig { focus, continuation },
            rhs: MachineConfig { focus: focus2, continuation: continuation2 },
        },
    )
}

/// `<(op e1 ... en), k> --> <ei, (op_i ... k)>` for the unique context of
/// `op` without value slots.
pub fn generate_start_rule(spec: &LanguageSpec, op: &str, conts: &[ContinuationOp]) -> Result<InferenceRule, CkError> {
    let starts: Vec<&ContinuationOp> =
        conts.iter().filter(|c| c.operator == op && !c.args.iter().any(is_value_slot)).collect();
    let start = match starts.as_slice() {
        [] => return Err(err(op, CkErrorKind::NoStart)),
        [one] => *one,
        many => return Err(err(op, CkErrorKind::AmbiguousStart(many.iter().map(|c| c.name()).collect()))),
    };
    let focus = meta_of(spec, EXPRESSION, "e", start.index);
    let args = positional_args(start, focus.clone());
    Ok(machine_rule(format!("{op}-start"), Term::ctor(op, args.clone()), k_meta(), focus, start.instance(&args)))
}

/// Does the argument vector fit context `c` with the hole at any argument?
fn fits(c: &ContinuationOp, args: &[Term]) -> bool {
    c.slots().iter().zip(args).all(|(slot, a)| match slot {
        None => true,
        Some(s) => category_of(s).is_some() && category_of(s) == category_of(a),
    })
}

/// Where evaluation goes after the argument at `cont.index` became a
/// value: `Ok(Some(next))`, or `Ok(None)` when `cont` is final.
fn successor<'a>(
    spec: &LanguageSpec,
    cont: &ContinuationOp,
    conts: &'a [ContinuationOp],
) -> Result<Option<(&'a ContinuationOp, Vec<Term>)>, CkError> {
    let value = meta_of(spec, VALUE, "v", cont.index);
    let args = positional_args(cont, value);
    let next: Vec<&ContinuationOp> =
        conts.iter().filter(|c| c.operator == cont.operator && c.index != cont.index && fits(c, &args)).collect();
    let positions: BTreeSet<usize> = next.iter().map(|c| c.index).collect();
    match positions.len() {
        0 => Ok(None),
        1 => Ok(Some((next[0], args))),
        _ => Err(err(
            &cont.operator,
            CkErrorKind::OrderAmbiguity { continuation: cont.name(), positions: positions.into_iter().collect() },
        )),
    }
}

/// `<vi, (op_i ... k)> --> <ej, (op_j ... vi ... k)>` for every continuation
/// of `op` that has a successor.
pub fn generate_order_rules(
    spec: &LanguageSpec,
    op: &str,
    conts: &[ContinuationOp],
) -> Result<Vec<InferenceRule>, CkError> {
    let mut rules = Vec::new();
    for cont in conts.iter().filter(|c| c.operator == op) {
        if let Some((next, args)) = successor(spec, cont, conts)? {
            rules.push(machine_rule(
                format!("{op}-order-{}", cont.index),
                args[cont.index - 1].clone(),
                cont.instance(&args),
                args[next.index - 1].clone(),
                next.instance(&args),
            ));
        }
    }
    Ok(rules)
}

/// The unique continuation of `op` without a successor.
pub fn final_continuation<'a>(
    spec: &LanguageSpec,
    op: &str,
    conts: &'a [ContinuationOp],
) -> Result<&'a ContinuationOp, CkError> {
    let mut finals = Vec::new();
    for c in conts.iter().filter(|c| c.operator == op) {
        if successor(spec, c, conts)?.is_none() {
            finals.push(c);
        }
    }
    match finals.as_slice() {
        [] => Err(err(op, CkErrorKind::NoFinalContinuation)),
        [one] => Ok(one),
        many => Err(err(op, CkErrorKind::AmbiguousFinal(many.iter().map(|c| c.name()).collect()))),
    }
}

/// One machine rule per reduction rule of `op`: the argument at the final
/// continuation's position goes in focus, the others into the
/// continuation, verbatim.
pub fn generate_computation_rules(
    spec: &LanguageSpec,
    op: &str,
    conts: &[ContinuationOp],
) -> Result<Vec<InferenceRule>, CkError> {
    let reductions: Vec<&InferenceRule> = spec
        .reduction_rules()
        .filter(|r| matches!(&r.conclusion, Formula::Reduction { lhs, .. } if lhs.head() == Some(op)))
        .collect();
    let own: Vec<&ContinuationOp> = conts.iter().filter(|c| c.operator == op).collect();
    let mut rules = Vec::new();
    if own.is_empty() {
        for (n, r) in reductions.iter().enumerate() {
            let Formula::Reduction { lhs, rhs } = &r.conclusion else { unreachable!() };
            rules.push(machine_rule(format!("{op}-comp-{}", n + 1), lhs.clone(), k_meta(), rhs.clone(), k_meta()));
        }
        return Ok(rules);
    }
    let fin = final_continuation(spec, op, conts)?;
    let evaluated: BTreeSet<usize> = own.iter().map(|c| c.index).collect();
    for (n, r) in reductions.iter().enumerate() {
        let Formula::Reduction { lhs, rhs } = &r.conclusion else { unreachable!() };
        let args = lhs.args();
        if args.len() != fin.arity() || matches!(lhs, Term::Binder { .. }) {
            return Err(err(
                op,
                CkErrorKind::PatternMismatch {
                    rule: r.name.clone(),
                    detail: format!("left-hand side `{lhs}` does not have the arity of the contexts"),
                },
            ));
        }
        for &p in &evaluated {
            if !spec.derives(VALUE, &args[p - 1]) {
                return Err(err(
                    op,
                    CkErrorKind::PatternMismatch {
                        rule: r.name.clone(),
                        detail: format!(
                            "argument {p} (`{}`) is evaluated first but is not a value pattern",
                            args[p - 1]
                        ),
                    },
                ));
            }
        }
        rules.push(machine_rule(
            format!("{op}-comp-{}", n + 1),
            args[fin.index - 1].clone(),
            fin.instance(args),
            rhs.clone(),
            k_meta(),
        ));
    }
    Ok(rules)
}

/// `<vf, (op_f v1 ... k)> --> <(op v1 ... vf ...), k>` when the fully
/// evaluated operator is a value and so has no reduction of its own.
pub fn generate_rebuild_rule(
    spec: &LanguageSpec,
    op: &str,
    conts: &[ContinuationOp],
) -> Result<Option<InferenceRule>, CkError> {
    if !conts.iter().any(|c| c.operator == op) {
        return Ok(None);
    }
    let fin = final_continuation(spec, op, conts)?;
    let args = positional_args(fin, meta_of(spec, VALUE, "v", fin.index));
    let whole = Term::ctor(op, args.clone());
    if !spec.is_value(&whole) {
        return Ok(None);
    }
    Ok(Some(machine_rule(format!("{op}-value"), args[fin.index - 1].clone(), fin.instance(&args), whole, k_meta())))
}

/// Operators in order of first appearance among the contexts, then
/// operators that only have reduction rules.
fn operators(spec: &LanguageSpec, conts: &[ContinuationOp]) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    let heads =
        conts.iter().map(|c| c.operator.clone()).chain(spec.reduction_rules().filter_map(|r| match &r.conclusion {
            Formula::Reduction { lhs, .. } => lhs.head().map(str::to_string),
            _ => None,
        }));
    for h in heads {
        if !out.contains(&h) {
            out.push(h);
        }
    }
    out
}

/// Replace the reduction semantics of `spec` by a CK machine.
///
/// The result keeps every category except the context category, adds the
/// `Continuation` category, keeps all rules that are not reduction rules,
/// and appends the machine rules grouped per operator.
pub fn derive_ck(spec: &LanguageSpec) -> Result<LanguageSpec, CkError> {
    let context =
        spec.context_category().ok_or(CkError { operator: None, kind: CkErrorKind::NoContextCategory })?.name.clone();
    let conts = continuation_ops(spec)?;
    let mut machine = Vec::new();
    for op in operators(spec, &conts) {
        if conts.iter().any(|c| c.operator == op) {
            machine.push(generate_start_rule(spec, &op, &conts)?);
            machine.extend(generate_order_rules(spec, &op, &conts)?);
        }
        machine.extend(generate_computation_rules(spec, &op, &conts)?);
        machine.extend(generate_rebuild_rule(spec, &op, &conts)?);
    }
    let mut categories: Vec<GrammarCategory> = spec.categories.iter().filter(|c| c.name != context).cloned().collect();
    categories.push(generate_continuation_grammar(spec)?);
    let mut rules: Vec<InferenceRule> = spec.rules.iter().filter(|r| !r.is_reduction()).cloned().collect();
    rules.extend(machine);
    Ok(LanguageSpec { contexts: None, categories, rules, ..spec.clone() })
}
