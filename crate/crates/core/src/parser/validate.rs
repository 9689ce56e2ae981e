use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::ir::{Formula, InferenceRule, LanguageSpec, Term, EXPRESSION, TYPE, VALUE};

/// The spec element a validation error is about.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Site {
    Header,
    Binder(String),
    Category(String),
    Variance(String),
    /// Index into `base_subtypes`.
    SubtypeBase(usize),
    Rule(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ValidationError {
    #[error("constructor `{constructor}` is used with {found} arguments but elsewhere with {expected}")]
    ArityMismatch { site: Site, constructor: String, expected: usize, found: usize },
    #[error("constructor `{1}` does not appear in any grammar production")]
    UndeclaredConstructor(Site, String),
    #[error("duplicate rule name `{0}`")]
    DuplicateRule(String),
    #[error("duplicate grammar category `{0}`")]
    DuplicateCategory(String),
    #[error("metavariable `{metavariable}` is used by both `{first}` and `{second}`")]
    DuplicateMetavariable { metavariable: String, first: String, second: String },
    #[error("missing required grammar category `{0}`")]
    MissingCategory(String),
    #[error("`contexts` names `{0}`, which is not a grammar category")]
    UnknownContextCategory(String),
    #[error("context production `{production}` {reason}")]
    BadContext { category: String, production: String, reason: &'static str },
    #[error("the hole `[.]` may only appear in the evaluation-context category")]
    HoleOutsideContext(Site),
    #[error("value production `{0}` is not derivable from the expression category")]
    ValueNotExpression(String),
    #[error("no variance declared for type constructor `{1}`")]
    MissingVariance(Site, String),
    #[error("variance of `{constructor}` has {marks} marks but the constructor takes {arity} arguments")]
    VarianceArity { constructor: String, marks: usize, arity: usize },
    #[error("base subtype axiom mentions `{1}`, which is not a base type")]
    UnknownBaseType(Site, String),
    #[error("base subtype axioms form a cycle through {0:?}")]
    IllFormedLattice(Vec<String>),
    #[error("reduction and machine rules may not have premises (rule `{0}`)")]
    PremiseInComputationRule(String),
    #[error("metavariable `{token}` occurs more than once in the left-hand side of rule `{rule}`")]
    NonlinearPattern { rule: String, token: String },
    #[error("typing rules `{first}` and `{second}` both apply to `{subject}`; typing must be syntax-directed")]
    NotSyntaxDirected { first: String, second: String, subject: String },
    #[error("environment extends `{var}` twice in rule `{rule}`")]
    DuplicateExtension { rule: String, var: String },
    #[error("substitution may only appear on the right-hand side of a reduction or machine rule (rule `{0}`)")]
    MisplacedSubstitution(String),
}

impl ValidationError {
    /// Name of the check, stable across releases.
    pub fn kind(&self) -> &'static str {
        use ValidationError::*;
        match self {
            ArityMismatch { .. } => "ArityMismatch",
            UndeclaredConstructor { .. } => "UndeclaredConstructor",
            DuplicateRule { .. } => "DuplicateRule",
            DuplicateCategory { .. } => "DuplicateCategory",
            DuplicateMetavariable { .. } => "DuplicateMetavariable",
            MissingCategory { .. } => "MissingCategory",
            UnknownContextCategory { .. } => "UnknownContextCategory",
            BadContext { .. } => "BadContext",
            HoleOutsideContext { .. } => "HoleOutsideContext",
            ValueNotExpression { .. } => "ValueNotExpression",
            MissingVariance { .. } => "MissingVariance",
            VarianceArity { .. } => "VarianceArity",
            UnknownBaseType { .. } => "UnknownBaseType",
            IllFormedLattice { .. } => "IllFormedLattice",
            PremiseInComputationRule { .. } => "PremiseInComputationRule",
            NonlinearPattern { .. } => "NonlinearPattern",
            NotSyntaxDirected { .. } => "NotSyntaxDirected",
            DuplicateExtension { .. } => "DuplicateExtension",
            MisplacedSubstitution { .. } => "MisplacedSubstitution",
        }
    }

    pub fn site(&self) -> Site {
        use ValidationError::*;
        match self {
            ArityMismatch { site, .. }
            | UndeclaredConstructor(site, _)
            | HoleOutsideContext(site)
            | MissingVariance(site, _)
            | UnknownBaseType(site, _) => site.clone(),
            DuplicateRule(r)
            | PremiseInComputationRule(r)
            | NonlinearPattern { rule: r, .. }
            | DuplicateExtension { rule: r, .. }
            | MisplacedSubstitution(r) => Site::Rule(r.clone()),
            NotSyntaxDirected { second, .. } => Site::Rule(second.clone()),
            DuplicateCategory(c) | BadContext { category: c, .. } => Site::Category(c.clone()),
            DuplicateMetavariable { second, .. } => Site::Category(second.clone()),
            ValueNotExpression(_) => Site::Category(VALUE.to_string()),
            MissingCategory(_) | UnknownContextCategory(_) => Site::Header,
            VarianceArity { constructor, .. } => Site::Variance(constructor.clone()),
            IllFormedLattice(_) => Site::SubtypeBase(0),
        }
    }
}

/// Check every structural invariant of a spec. An empty result means the
/// spec is valid.
pub fn validate(spec: &LanguageSpec) -> Vec<ValidationError> {
    let mut errors = Vec::new();
    check_names(spec, &mut errors);
    check_arities(spec, &mut errors);
    check_contexts(spec, &mut errors);
    check_values(spec, &mut errors);
    check_variance(spec, &mut errors);
    check_lattice(spec, &mut errors);
    for rule in &spec.rules {
        check_rule(spec, rule, &mut errors);
    }
    check_syntax_directed(spec, &mut errors);
    errors
}

fn check_names(spec: &LanguageSpec, errors: &mut Vec<ValidationError>) {
    let mut seen = BTreeSet::new();
    for r in &spec.rules {
        if !seen.insert(&r.name) {
            errors.push(ValidationError::DuplicateRule(r.name.clone()));
        }
    }
    let mut names = BTreeSet::new();
    let mut metas: BTreeMap<&str, &str> = BTreeMap::new();
    for c in &spec.categories {
        if !names.insert(&c.name) {
            errors.push(ValidationError::DuplicateCategory(c.name.clone()));
        }
        if let Some(first) = metas.insert(&c.metavariable, &c.name) {
            errors.push(ValidationError::DuplicateMetavariable {
                metavariable: c.metavariable.clone(),
                first: first.to_string(),
                second: c.name.clone(),
            });
        }
    }
    let needs = |cat: &str, errors: &mut Vec<ValidationError>| {
        if spec.category(cat).is_none() {
            errors.push(ValidationError::MissingCategory(cat.to_string()));
        }
    };
    if spec.typing_rules().next().is_some() {
        needs(TYPE, errors);
    }
    if spec.reduction_rules().next().is_some() || spec.machine_rules().next().is_some() {
        needs(EXPRESSION, errors);
        needs(VALUE, errors);
    }
    if let Some(c) = &spec.contexts {
        if spec.category(c).is_none() {
            errors.push(ValidationError::UnknownContextCategory(c.clone()));
        }
    }
}

/// Every term of a rule, paired with whether it is a type position.
fn rule_terms(rule: &InferenceRule) -> Vec<(&Term, bool)> {
    let mut out = Vec::new();
    for f in rule.premises.iter().chain(std::iter::once(&rule.conclusion)) {
        match f {
            Formula::Typing { env, subject, ty } => {
                out.extend(env.extensions.iter().map(|(_, t)| (t, true)));
                out.push((subject, false));
                out.push((ty, true));
            }
            Formula::Reduction { .. } | Formula::MachineStep { .. } => {
                out.extend(f.terms().into_iter().map(|t| (t, false)))
            }
            Formula::Subtype { .. } | Formula::TypeEq { .. } | Formula::Join { .. } | Formula::Meet { .. } => {
                out.extend(f.terms().into_iter().map(|t| (t, true)))
            }
        }
    }
    out
}

fn visit<'a>(t: &'a Term, f: &mut impl FnMut(&'a Term)) {
    f(t);
    match t {
        Term::Ctor { args, .. } | Term::Binder { args, .. } => args.iter().for_each(|a| visit(a, f)),
        Term::Subst { body, value, var } => {
            visit(body, f);
            visit(value, f);
            visit(var, f);
        }
        _ => {}
    }
}

/// Arity of each constructor application node; binders count their bound name.
fn arity_of(t: &Term) -> Option<(&str, usize)> {
    match t {
        Term::Ctor { name, args } => Some((name, args.len())),
        Term::Binder { name, args, .. } => Some((name, args.len() + 1)),
        _ => None,
    }
}

fn check_arities(spec: &LanguageSpec, errors: &mut Vec<ValidationError>) {
    let mut declared = BTreeSet::new();
    for c in &spec.categories {
        for p in &c.productions {
            visit(p, &mut |t| {
                if let Some((name, _)) = arity_of(t) {
                    declared.insert(name.to_string());
                }
            });
        }
    }
    let mut arity: BTreeMap<String, usize> = BTreeMap::new();
    // one report per constructor, at its first conflicting use
    let mut reported = BTreeSet::new();
    let mut record = |t: &Term, site: &Site, errors: &mut Vec<ValidationError>| {
        if let Some((name, n)) = arity_of(t) {
            let expected = *arity.entry(name.to_string()).or_insert(n);
            if expected != n && reported.insert(name.to_string()) {
                errors.push(ValidationError::ArityMismatch {
                    site: site.clone(),
                    constructor: name.to_string(),
                    expected,
                    found: n,
                });
            }
        }
    };
    for c in &spec.categories {
        let site = Site::Category(c.name.clone());
        for p in &c.productions {
            visit(p, &mut |t| record(t, &site, errors));
        }
    }
    for r in &spec.rules {
        let site = Site::Rule(r.name.clone());
        let mut undeclared = BTreeSet::new();
        for (term, _) in rule_terms(r) {
            visit(term, &mut |t| {
                record(t, &site, errors);
                if let Some((name, _)) = arity_of(t) {
                    if !declared.contains(name) && undeclared.insert(name.to_string()) {
                        errors.push(ValidationError::UndeclaredConstructor(site.clone(), name.to_string()));
                    }
                }
            });
        }
    }
}

fn check_contexts(spec: &LanguageSpec, errors: &mut Vec<ValidationError>) {
    let context = spec.context_category().map(|c| c.name.clone());
    for c in &spec.categories {
        let is_context = Some(&c.name) == context.as_ref();
        for p in &c.productions {
            if !is_context {
                if p.contains_hole() {
                    errors.push(ValidationError::HoleOutsideContext(Site::Category(c.name.clone())));
                }
                continue;
            }
            let bad =
                |reason| ValidationError::BadContext { category: c.name.clone(), production: p.to_string(), reason };
            match p {
                Term::Hole => {}
                Term::Ctor { args, .. } => {
                    let holes = spec.hole_slots(p).len();
                    if args.iter().any(|a| !matches!(a, Term::Hole | Term::Meta(_))) {
                        errors.push(bad("may only have metavariables and the hole as arguments"));
                    } else if holes != 1 {
                        errors.push(bad("must contain exactly one hole"));
                    }
                }
                _ => errors.push(bad("must be the hole or an operator applied to its arguments")),
            }
        }
    }
    for r in &spec.rules {
        for (term, _) in rule_terms(r) {
            if term.contains_hole() {
                errors.push(ValidationError::HoleOutsideContext(Site::Rule(r.name.clone())));
                break;
            }
        }
    }
}

fn check_values(spec: &LanguageSpec, errors: &mut Vec<ValidationError>) {
    let (Some(values), Some(_)) = (spec.category(VALUE), spec.category(EXPRESSION)) else {
        return;
    };
    for p in &values.productions {
        if !spec.derives(EXPRESSION, p) {
            errors.push(ValidationError::ValueNotExpression(p.to_string()));
        }
    }
}

/// Type constructors with at least one argument that occur in the type
/// grammar or in a type position of some rule.
pub(crate) fn used_type_constructors(spec: &LanguageSpec) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    let mut collect = |t: &Term| {
        visit(t, &mut |t| {
            if let Term::Ctor { name, args } = t {
                if !args.is_empty() {
                    out.insert(name.clone());
                }
            }
        })
    };
    if let Some(c) = spec.category(TYPE) {
        c.productions.iter().for_each(&mut collect);
    }
    for r in &spec.rules {
        for (t, is_type) in rule_terms(r) {
            if is_type {
                collect(t);
            }
        }
    }
    out
}

fn check_variance(spec: &LanguageSpec, errors: &mut Vec<ValidationError>) {
    let used = used_type_constructors(spec);
    for ctor in &used {
        if !spec.variance.contains(ctor) {
            let site = spec
                .rules
                .iter()
                .find(|r| {
                    rule_terms(r).iter().any(|(t, ty)| {
                        let mut hit = false;
                        visit(t, &mut |s| hit |= *ty && s.head() == Some(ctor.as_str()));
                        hit
                    })
                })
                .map_or(Site::Category(TYPE.to_string()), |r| Site::Rule(r.name.clone()));
            errors.push(ValidationError::MissingVariance(site, ctor.clone()));
        }
    }
    let mut arities = BTreeMap::new();
    for c in &spec.categories {
        for p in &c.productions {
            visit(p, &mut |t| {
                if let Some((n, a)) = arity_of(t) {
                    arities.entry(n.to_string()).or_insert(a);
                }
            });
        }
    }
    for (ctor, marks) in spec.variance.iter() {
        if let Some(&arity) = arities.get(ctor) {
            if arity != marks.len() {
                errors.push(ValidationError::VarianceArity { constructor: ctor.clone(), marks: marks.len(), arity });
            }
        }
    }
}

fn check_lattice(spec: &LanguageSpec, errors: &mut Vec<ValidationError>) {
    let declared: BTreeSet<String> = spec
        .category(TYPE)
        .into_iter()
        .flat_map(|c| &c.productions)
        .filter_map(|p| match p {
            Term::Ctor { name, args } if args.is_empty() => Some(name.clone()),
            _ => None,
        })
        .collect();
    for (i, (a, b)) in spec.base_subtypes.iter().enumerate() {
        for x in [a, b] {
            if !declared.contains(x) {
                errors.push(ValidationError::UnknownBaseType(Site::SubtypeBase(i), x.clone()));
            }
        }
    }
    if let Some(cycle) = find_cycle(&spec.base_subtypes) {
        errors.push(ValidationError::IllFormedLattice(cycle));
    }
}

/// A cycle of length at least two in the axiom graph, if any. Self-loops
/// are harmless restatements of reflexivity.
pub(crate) fn find_cycle(edges: &[(String, String)]) -> Option<Vec<String>> {
    let mut succ: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for (a, b) in edges {
        if a != b {
            succ.entry(a).or_default().push(b);
        }
    }
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Active,
        Done,
    }
    fn dfs<'a>(
        n: &'a str,
        succ: &BTreeMap<&'a str, Vec<&'a str>>,
        marks: &mut BTreeMap<&'a str, Mark>,
        path: &mut Vec<&'a str>,
    ) -> Option<Vec<String>> {
        marks.insert(n, Mark::Active);
        path.push(n);
        for &m in succ.get(n).into_iter().flatten() {
            match marks.get(m) {
                Some(Mark::Active) => {
                    let start = path.iter().position(|p| *p == m).unwrap_or(0);
                    return Some(path[start..].iter().map(|s| s.to_string()).collect());
                }
                Some(Mark::Done) => {}
                None => {
                    if let Some(c) = dfs(m, succ, marks, path) {
                        return Some(c);
                    }
                }
            }
        }
        path.pop();
        marks.insert(n, Mark::Done);
        None
    }
    let mut marks = BTreeMap::new();
    let nodes: Vec<&str> = succ.keys().copied().collect();
    for n in nodes {
        if !marks.contains_key(n) {
            if let Some(c) = dfs(n, &succ, &mut marks, &mut Vec::new()) {
                return Some(c);
            }
        }
    }
    None
}

fn check_rule(spec: &LanguageSpec, rule: &InferenceRule, errors: &mut Vec<ValidationError>) {
    let _ = spec;
    let lhs_terms: Vec<&Term> = match &rule.conclusion {
        Formula::Reduction { lhs, .. } => vec![lhs],
        Formula::MachineStep { lhs, .. } => vec![&lhs.focus, &lhs.continuation],
        _ => Vec::new(),
    };
    let is_step = !lhs_terms.is_empty();
    if is_step && !rule.premises.is_empty() {
        errors.push(ValidationError::PremiseInComputationRule(rule.name.clone()));
    }
    if is_step {
        let mut tokens = Vec::new();
        for t in &lhs_terms {
            t.pattern_tokens(&mut tokens);
        }
        let mut seen = BTreeSet::new();
        for tok in tokens {
            if !seen.insert(tok.clone()) {
                errors.push(ValidationError::NonlinearPattern { rule: rule.name.clone(), token: tok });
                break;
            }
        }
    }
    // substitution: allowed only in right-hand sides
    let rhs_terms: Vec<&Term> = match &rule.conclusion {
        Formula::Reduction { rhs, .. } => vec![rhs],
        Formula::MachineStep { rhs, .. } => vec![&rhs.focus, &rhs.continuation],
        _ => Vec::new(),
    };
    let misplaced = rule_terms(rule).into_iter().any(|(t, _)| {
        let mut hit = false;
        visit(t, &mut |s| hit |= matches!(s, Term::Subst { .. }));
        hit && !rhs_terms.iter().any(|r| std::ptr::eq(*r, t))
    });
    if misplaced {
        errors.push(ValidationError::MisplacedSubstitution(rule.name.clone()));
    }
    for f in rule.premises.iter().chain(std::iter::once(&rule.conclusion)) {
        if let Formula::Typing { env, .. } = f {
            let mut seen = BTreeSet::new();
            for (x, _) in &env.extensions {
                if !seen.insert(x) {
                    errors.push(ValidationError::DuplicateExtension { rule: rule.name.clone(), var: x.clone() });
                }
            }
        }
    }
}

/// The key a typing rule dispatches on: the subject's head constructor,
/// or the category of a bare metavariable subject.
pub(crate) fn dispatch_key(subject: &Term) -> Option<String> {
    match subject {
        Term::Ctor { name, .. } | Term::Binder { name, .. } => Some(name.clone()),
        Term::Meta(m) => Some(format!("{}:", m.category)),
        _ => None,
    }
}

fn check_syntax_directed(spec: &LanguageSpec, errors: &mut Vec<ValidationError>) {
    let mut owners: BTreeMap<String, &str> = BTreeMap::new();
    for r in spec.typing_rules() {
        let Formula::Typing { subject, .. } = &r.conclusion else { continue };
        let Some(key) = dispatch_key(subject) else { continue };
        if let Some(first) = owners.get(&key) {
            errors.push(ValidationError::NotSyntaxDirected {
                first: first.to_string(),
                second: r.name.clone(),
                subject: subject.to_string(),
            });
        } else {
            owners.insert(key, &r.name);
        }
    }
}
