use std::collections::{BTreeMap, BTreeSet};

/// A rule-level variable ranging over one grammar category.
///
/// The token is `base` followed by `suffix`; `T12` has base `T` and suffix
/// `12`, `e'` has base `e` and suffix `'`. Two metavariables are the same
/// variable exactly when their tokens are equal.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Metavariable {
    pub base: String,
    pub suffix: Option<String>,
    pub category: String,
}

impl Metavariable {
    pub fn new(base: impl Into<String>, suffix: Option<&str>, category: impl Into<String>) -> Self {
        Metavariable {
            base: base.into(),
            suffix: suffix.filter(|s| !s.is_empty()).map(str::to_string),
            category: category.into(),
        }
    }

    pub fn token(&self) -> String {
        match &self.suffix {
            Some(s) => format!("{}{}", self.base, s),
            None => self.base.clone(),
        }
    }

    /// Same base and category, different suffix.
    pub fn with_suffix(&self, suffix: Option<String>) -> Self {
        Metavariable {
            base: self.base.clone(),
            suffix: suffix.filter(|s| !s.is_empty()),
            category: self.category.clone(),
        }
    }
}

/// First-order terms over constructors, metavariables and binders.
///
/// One type serves for types, expressions, evaluation contexts and
/// continuations, and for both rule patterns and ground (runtime) terms.
/// Patterns contain [`Term::Meta`]; ground terms contain [`Term::Var`] for
/// object-level variable names instead.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Meta(Metavariable),
    /// An object-level variable name in a ground term.
    Var(String),
    /// Constructor application; constants are nullary constructors.
    Ctor {
        name: String,
        args: Vec<Term>,
    },
    /// A binding constructor such as `lam`. In patterns `bound` is the token
    /// of a variable-category metavariable, in ground terms it is the name.
    /// The bound name scopes over every argument.
    Binder {
        name: String,
        bound: String,
        args: Vec<Term>,
    },
    /// The hole `[.]` of an evaluation context.
    Hole,
    /// Capture-avoiding substitution `body[value/var]`, only on the
    /// right-hand side of reduction and machine rules.
    Subst {
        body: Box<Term>,
        value: Box<Term>,
        var: Box<Term>,
    },
}

impl Term {
    pub fn ctor(name: impl Into<String>, args: Vec<Term>) -> Term {
        Term::Ctor { name: name.into(), args }
    }

    pub fn constant(name: impl Into<String>) -> Term {
        Term::Ctor { name: name.into(), args: Vec::new() }
    }

    pub fn meta(mv: Metavariable) -> Term {
        Term::Meta(mv)
    }

    pub fn as_meta(&self) -> Option<&Metavariable> {
        match self {
            Term::Meta(m) => Some(m),
            _ => None,
        }
    }

    /// Head symbol of a constructor or binder application.
    pub fn head(&self) -> Option<&str> {
        match self {
            Term::Ctor { name, .. } | Term::Binder { name, .. } => Some(name),
            _ => None,
        }
    }

    pub fn args(&self) -> &[Term] {
        match self {
            Term::Ctor { args, .. } | Term::Binder { args, .. } => args,
            _ => &[],
        }
    }

    /// Number of nodes. A binder's bound name is not a node.
    pub fn size(&self) -> usize {
        match self {
            Term::Meta(_) | Term::Var(_) | Term::Hole => 1,
            Term::Ctor { args, .. } | Term::Binder { args, .. } => 1 + args.iter().map(Term::size).sum::<usize>(),
            Term::Subst { body, value, var } => 1 + body.size() + value.size() + var.size(),
        }
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Meta(_) | Term::Subst { .. } => false,
            Term::Var(_) | Term::Hole => true,
            Term::Ctor { args, .. } | Term::Binder { args, .. } => args.iter().all(Term::is_ground),
        }
    }

    pub fn contains_hole(&self) -> bool {
        match self {
            Term::Hole => true,
            Term::Meta(_) | Term::Var(_) => false,
            Term::Ctor { args, .. } | Term::Binder { args, .. } => args.iter().any(Term::contains_hole),
            Term::Subst { body, value, var } => body.contains_hole() || value.contains_hole() || var.contains_hole(),
        }
    }

    /// Metavariables in left-to-right order, with repetitions.
    pub fn metavariables(&self) -> Vec<&Metavariable> {
        let mut out = Vec::new();
        self.collect_metavariables(&mut out);
        out
    }

    fn collect_metavariables<'a>(&'a self, out: &mut Vec<&'a Metavariable>) {
        match self {
            Term::Meta(m) => out.push(m),
            Term::Var(_) | Term::Hole => {}
            Term::Ctor { args, .. } | Term::Binder { args, .. } => {
                for a in args {
                    a.collect_metavariables(out);
                }
            }
            Term::Subst { body, value, var } => {
                body.collect_metavariables(out);
                value.collect_metavariables(out);
                var.collect_metavariables(out);
            }
        }
    }

    /// Every metavariable token, including binder bound-variable tokens.
    /// Only meaningful on patterns.
    pub fn pattern_tokens(&self, out: &mut Vec<String>) {
        match self {
            Term::Meta(m) => out.push(m.token()),
            Term::Var(_) | Term::Hole => {}
            Term::Ctor { args, .. } => args.iter().for_each(|a| a.pattern_tokens(out)),
            Term::Binder { bound, args, .. } => {
                out.push(bound.clone());
                args.iter().for_each(|a| a.pattern_tokens(out));
            }
            Term::Subst { body, value, var } => {
                body.pattern_tokens(out);
                value.pattern_tokens(out);
                var.pattern_tokens(out);
            }
        }
    }

    /// Replace metavariables by token. Binder bound tokens are renamed when
    /// the replacement for that token is itself a metavariable.
    pub fn rename_metavariables(&self, map: &BTreeMap<String, Metavariable>) -> Term {
        match self {
            Term::Meta(m) => Term::Meta(map.get(&m.token()).cloned().unwrap_or_else(|| m.clone())),
            Term::Var(_) | Term::Hole => self.clone(),
            Term::Ctor { name, args } => {
                Term::Ctor { name: name.clone(), args: args.iter().map(|a| a.rename_metavariables(map)).collect() }
            }
            Term::Binder { name, bound, args } => Term::Binder {
                name: name.clone(),
                bound: map.get(bound).map(Metavariable::token).unwrap_or_else(|| bound.clone()),
                args: args.iter().map(|a| a.rename_metavariables(map)).collect(),
            },
            Term::Subst { body, value, var } => Term::Subst {
                body: Box::new(body.rename_metavariables(map)),
                value: Box::new(value.rename_metavariables(map)),
                var: Box::new(var.rename_metavariables(map)),
            },
        }
    }

    /// Free object-level variable names of a ground term.
    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free_vars(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free_vars(&self, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        match self {
            Term::Var(x) => {
                if !bound.contains(x) {
                    out.insert(x.clone());
                }
            }
            Term::Meta(_) | Term::Hole => {}
            Term::Ctor { args, .. } => args.iter().for_each(|a| a.collect_free_vars(bound, out)),
            Term::Binder { bound: b, args, .. } => {
                bound.push(b.clone());
                args.iter().for_each(|a| a.collect_free_vars(bound, out));
                bound.pop();
            }
            Term::Subst { body, value, var } => {
                body.collect_free_vars(bound, out);
                value.collect_free_vars(bound, out);
                var.collect_free_vars(bound, out);
            }
        }
    }

    pub fn is_closed(&self) -> bool {
        self.free_vars().is_empty()
    }

    /// Capture-avoiding substitution of `value` for the free name `var`.
    ///
    /// A binder whose bound name occurs free in `value` is renamed first,
    /// by appending the smallest numeric suffix that clashes with nothing.
    pub fn substitute(&self, var: &str, value: &Term) -> Term {
        let value_fv = value.free_vars();
        self.substitute_with(var, value, &value_fv)
    }

    fn substitute_with(&self, var: &str, value: &Term, value_fv: &BTreeSet<String>) -> Term {
        match self {
            Term::Var(x) if x == var => value.clone(),
            Term::Var(_) | Term::Meta(_) | Term::Hole => self.clone(),
            Term::Ctor { name, args } => Term::Ctor {
                name: name.clone(),
                args: args.iter().map(|a| a.substitute_with(var, value, value_fv)).collect(),
            },
            Term::Binder { name, bound, args } => {
                if bound == var {
                    return self.clone();
                }
                if value_fv.contains(bound) {
                    let mut avoid: BTreeSet<String> = value_fv.clone();
                    avoid.insert(var.to_string());
                    for a in args {
                        avoid.extend(a.free_vars());
                    }
                    let renamed = fresh_name(bound, &avoid);
                    let renamed_var = Term::Var(renamed.clone());
                    let args = args
                        .iter()
                        .map(|a| a.substitute(bound, &renamed_var).substitute_with(var, value, value_fv))
                        .collect();
                    Term::Binder { name: name.clone(), bound: renamed, args }
                } else {
                    Term::Binder {
                        name: name.clone(),
                        bound: bound.clone(),
                        args: args.iter().map(|a| a.substitute_with(var, value, value_fv)).collect(),
                    }
                }
            }
            Term::Subst { body, value: v, var: x } => Term::Subst {
                body: Box::new(body.substitute_with(var, value, value_fv)),
                value: Box::new(v.substitute_with(var, value, value_fv)),
                var: x.clone(),
            },
        }
    }

    /// Equality up to renaming of bound names.
    pub fn alpha_eq(&self, other: &Term) -> bool {
        self.alpha_normal(&mut Vec::new()) == other.alpha_normal(&mut Vec::new())
    }

    /// Bound names replaced by their binding depth, written `#n`, which no
    /// parsed identifier can collide with.
    fn alpha_normal(&self, scope: &mut Vec<(String, String)>) -> Term {
        match self {
            Term::Var(x) => match scope.iter().rev().find(|(name, _)| name == x) {
                Some((_, canon)) => Term::Var(canon.clone()),
                None => self.clone(),
            },
            Term::Meta(_) | Term::Hole => self.clone(),
            Term::Ctor { name, args } => {
                Term::Ctor { name: name.clone(), args: args.iter().map(|a| a.alpha_normal(scope)).collect() }
            }
            Term::Binder { name, bound, args } => {
                let canon = format!("#{}", scope.len());
                // every argument is in scope, as in `free_vars`
                scope.push((bound.clone(), canon.clone()));
                let args = args.iter().map(|a| a.alpha_normal(scope)).collect();
                scope.pop();
                Term::Binder { name: name.clone(), bound: canon, args }
            }
            Term::Subst { body, value, var } => Term::Subst {
                body: Box::new(body.alpha_normal(scope)),
                value: Box::new(value.alpha_normal(scope)),
                var: Box::new(var.alpha_normal(scope)),
            },
        }
    }

    /// Replace the (first) hole of a context by `filler`.
    pub fn plug(&self, filler: &Term) -> Term {
        let mut filler = Some(filler.clone());
        self.plug_once(&mut filler)
    }

    fn plug_once(&self, filler: &mut Option<Term>) -> Term {
        match self {
            Term::Hole => filler.take().unwrap_or(Term::Hole),
            Term::Ctor { name, args } => {
                Term::Ctor { name: name.clone(), args: args.iter().map(|a| a.plug_once(filler)).collect() }
            }
            Term::Binder { name, bound, args } => Term::Binder {
                name: name.clone(),
                bound: bound.clone(),
                args: args.iter().map(|a| a.plug_once(filler)).collect(),
            },
            _ => self.clone(),
        }
    }

    /// All subterm positions in pre-order, as argument-index paths.
    pub fn positions(&self) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        self.collect_positions(&mut Vec::new(), &mut out);
        out
    }

    fn collect_positions(&self, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        out.push(path.clone());
        for (i, a) in self.args().iter().enumerate() {
            path.push(i);
            a.collect_positions(path, out);
            path.pop();
        }
    }

    pub fn at(&self, path: &[usize]) -> Option<&Term> {
        match path.split_first() {
            None => Some(self),
            Some((i, rest)) => self.args().get(*i)?.at(rest),
        }
    }

    /// Copy of `self` with the subterm at `path` replaced.
    pub fn replace_at(&self, path: &[usize], with: Term) -> Term {
        match path.split_first() {
            None => with,
            Some((i, rest)) => match self {
                Term::Ctor { name, args } => {
                    let mut args = args.clone();
                    args[*i] = args[*i].replace_at(rest, with);
                    Term::Ctor { name: name.clone(), args }
                }
                Term::Binder { name, bound, args } => {
                    let mut args = args.clone();
                    args[*i] = args[*i].replace_at(rest, with);
                    Term::Binder { name: name.clone(), bound: bound.clone(), args }
                }
                _ => self.clone(),
            },
        }
    }
}

/// `base` with the smallest numeric suffix not in `avoid`.
pub(crate) fn fresh_name(base: &str, avoid: &BTreeSet<String>) -> String {
    (1..).map(|n| format!("{base}{n}")).find(|c| !avoid.contains(c)).expect("unbounded suffix search")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn var(x: &str) -> Term {
        Term::Var(x.into())
    }

    fn lam(x: &str, body: Term) -> Term {
        Term::Binder { name: "lam".into(), bound: x.into(), args: vec![Term::constant("B"), body] }
    }

    fn app(a: Term, b: Term) -> Term {
        Term::ctor("app", vec![a, b])
    }

    #[test]
    fn substitution_replaces_free_occurrences_only() {
        let t = app(var("x"), lam("x", var("x")));
        let got = t.substitute("x", &Term::constant("c"));
        assert_eq!(got, app(Term::constant("c"), lam("x", var("x"))));
    }

    #[test]
    fn substitution_renames_on_capture() {
        // (lam y (app x y))[y/x] must not capture the substituted y
        let t = lam("y", app(var("x"), var("y")));
        let got = t.substitute("x", &var("y"));
        assert_eq!(got, lam("y1", app(var("y"), var("y1"))));
        assert_eq!(got.free_vars(), BTreeSet::from(["y".to_string()]));
    }

    #[test]
    fn plug_fills_the_hole() {
        let ctx = app(Term::Hole, Term::constant("c"));
        assert_eq!(ctx.plug(&var("z")), app(var("z"), Term::constant("c")));
    }

    #[test]
    fn size_counts_nodes_not_bound_names() {
        assert_eq!(lam("x", var("x")).size(), 3);
        assert_eq!(app(lam("x", var("x")), Term::constant("c")).size(), 5);
    }

    #[test]
    fn replace_at_and_at_agree() {
        let t = app(lam("x", var("x")), Term::constant("c"));
        for p in t.positions() {
            let sub = t.at(&p).unwrap().clone();
            assert_eq!(t.replace_at(&p, sub), t);
        }
        assert_eq!(t.replace_at(&[1], var("q")).at(&[1]), Some(&var("q")));
    }
}
