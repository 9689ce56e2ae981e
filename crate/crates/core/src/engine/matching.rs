use std::collections::BTreeMap;

use thiserror::Error;

use crate::ir::{LanguageSpec, Term};

/// Bindings of metavariable tokens to ground terms. A binder's bound-name
/// token binds to the [`Term::Var`] of the actual name.
pub type Substitution = BTreeMap<String, Term>;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum InstantiateError {
    #[error("metavariable `{0}` is not bound")]
    Unbound(String),
    #[error("`{0}` must be bound to a variable name")]
    NotAName(String),
}

/// Match `pattern` against the ground `subject`, extending `sigma`.
///
/// A metavariable matches only terms derivable from its category, so `v`
/// matches values and nothing else. A metavariable already bound in
/// `sigma` must match its binding exactly.
pub fn match_into(pattern: &Term, subject: &Term, spec: &LanguageSpec, sigma: &mut Substitution) -> bool {
    match (pattern, subject) {
        (Term::Meta(m), _) => {
            let token = m.token();
            if let Some(bound) = sigma.get(&token) {
                return bound == subject;
            }
            if !spec.derives(&m.category, subject) {
                return false;
            }
            sigma.insert(token, subject.clone());
            true
        }
        (Term::Ctor { name: p, args: pa }, Term::Ctor { name: s, args: sa }) => {
            p == s && pa.len() == sa.len() && pa.iter().zip(sa).all(|(p, s)| match_into(p, s, spec, sigma))
        }
        (Term::Binder { name: p, bound: pb, args: pa }, Term::Binder { name: s, bound: sb, args: sa }) => {
            if p != s || pa.len() != sa.len() {
                return false;
            }
            let name = Term::Var(sb.clone());
            match sigma.get(pb) {
                Some(existing) if *existing != name => return false,
                Some(_) => {}
                None => {
                    sigma.insert(pb.clone(), name);
                }
            }
            pa.iter().zip(sa).all(|(p, s)| match_into(p, s, spec, sigma))
        }
        (Term::Var(a), Term::Var(b)) => a == b,
        (Term::Hole, Term::Hole) => true,
        _ => false,
    }
}

/// Match a linear pattern from scratch.
pub fn match_pattern(pattern: &Term, subject: &Term, spec: &LanguageSpec) -> Option<Substitution> {
    let mut sigma = Substitution::new();
    match_into(pattern, subject, spec, &mut sigma).then_some(sigma)
}

/// Replace metavariables by their bindings and perform substitutions
/// `e[v/x]` capture-avoidingly.
pub fn instantiate(pattern: &Term, sigma: &Substitution) -> Result<Term, InstantiateError> {
    Ok(match pattern {
        Term::Meta(m) => {
            let token = m.token();
            sigma.get(&token).cloned().ok_or(InstantiateError::Unbound(token))?
        }
        Term::Var(_) | Term::Hole => pattern.clone(),
        Term::Ctor { name, args } => Term::Ctor {
            name: name.clone(),
            args: args.iter().map(|a| instantiate(a, sigma)).collect::<Result<_, _>>()?,
        },
        Term::Binder { name, bound, args } => {
            let bound = match sigma.get(bound) {
                Some(Term::Var(x)) => x.clone(),
                Some(_) => return Err(InstantiateError::NotAName(bound.clone())),
                None => return Err(InstantiateError::Unbound(bound.clone())),
            };
            Term::Binder {
                name: name.clone(),
                bound,
                args: args.iter().map(|a| instantiate(a, sigma)).collect::<Result<_, _>>()?,
            }
        }
        Term::Subst { body, value, var } => {
            let body = instantiate(body, sigma)?;
            let value = instantiate(value, sigma)?;
            match instantiate(var, sigma)? {
                Term::Var(x) => body.substitute(&x, &value),
                other => return Err(InstantiateError::NotAName(other.to_string())),
            }
        }
    })
}

/// Is every metavariable of `pattern` bound?
pub fn is_bound(pattern: &Term, sigma: &Substitution) -> bool {
    let mut tokens = Vec::new();
    pattern.pattern_tokens(&mut tokens);
    tokens.iter().all(|t| sigma.contains_key(t))
}
