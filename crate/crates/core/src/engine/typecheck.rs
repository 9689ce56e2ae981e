use thiserror::Error;

use super::matching::{instantiate, is_bound, match_into, match_pattern, Substitution};
use crate::ir::{EnvExpr, Formula, InferenceRule, LanguageSpec, Term};
use crate::subtyping::{LatticeError, SubtypeLattice};

/// Variable bindings, innermost last.
pub type TypeEnv = Vec<(String, Term)>;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum TypeError {
    #[error("no typing rule applies to `{0}`")]
    NoRuleApplies(Term),
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("rule `{rule}`: `{subject}` has type `{found}`, expected `{expected}`")]
    Mismatch { rule: String, subject: Term, expected: Term, found: Term },
    #[error("rule `{rule}`: `{sub}` is not a subtype of `{sup}`")]
    SubtypeFailure { rule: String, sub: Term, sup: Term },
    #[error("rule `{rule}`: `{left}` and `{right}` differ")]
    NotEqual { rule: String, left: Term, right: Term },
    #[error("rule `{rule}`: {source}")]
    NoJoin { rule: String, source: LatticeError },
    #[error("rule `{rule}`: premises cannot be ordered so that each has its inputs")]
    Underdetermined { rule: String },
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

/// Rule-driven type inference for a spec's typing rules.
///
/// Rules are algorithmic: the subject of a rule's conclusion selects the
/// rule, each typing premise computes a type, and relational premises
/// (`<:`, `=`, joins and meets) check or compute types from ones already
/// known.
#[derive(Clone, Debug)]
pub struct TypeChecker<'a> {
    spec: &'a LanguageSpec,
    lattice: SubtypeLattice,
}

impl<'a> TypeChecker<'a> {
    pub fn new(spec: &'a LanguageSpec) -> Result<Self, LatticeError> {
        Ok(TypeChecker { spec, lattice: SubtypeLattice::new(spec)? })
    }

    pub fn infer(&self, env: &TypeEnv, term: &Term) -> Result<Term, TypeError> {
        self.run(env, term, None)
    }

    /// Check `term` against a known type. Accepts what [`Self::infer`]
    /// accepts with that type, and also terms whose rule leaves part of the
    /// type open (such as an empty list), which the expectation fills in.
    pub fn check(&self, env: &TypeEnv, term: &Term, expected: &Term) -> Result<(), TypeError> {
        self.run(env, term, Some(expected)).map(|_| ())
    }

    fn run(&self, env: &TypeEnv, term: &Term, expected: Option<&Term>) -> Result<Term, TypeError> {
        if let Term::Var(x) = term {
            let found = env
                .iter()
                .rev()
                .find(|(y, _)| y == x)
                .map(|(_, t)| t.clone())
                .ok_or_else(|| TypeError::UnboundVariable(x.clone()))?;
            return match expected {
                Some(e) if *e != found => Err(mismatch("variable", term, e, &found)),
                _ => Ok(found),
            };
        }
        for rule in self.spec.typing_rules() {
            let Formula::Typing { subject, ty, .. } = &rule.conclusion else { continue };
            let Some(mut sigma) = match_pattern(subject, term, self.spec) else { continue };
            if let Some(e) = expected {
                if !match_into(ty, e, self.spec, &mut sigma) {
                    let shape = instantiate(ty, &sigma).unwrap_or_else(|_| ty.clone());
                    return Err(mismatch(&rule.name, term, e, &shape));
                }
            }
            self.solve(rule, env, &mut sigma)?;
            let found = instantiate(ty, &sigma).map_err(|_| TypeError::Underdetermined { rule: rule.name.clone() })?;
            return match expected {
                Some(e) if *e != found => Err(mismatch(&rule.name, term, e, &found)),
                _ => Ok(found),
            };
        }
        Err(TypeError::NoRuleApplies(term.clone()))
    }

    /// Discharge the premises of `rule`, always taking the first one whose
    /// inputs are known.
    fn solve(&self, rule: &InferenceRule, env: &TypeEnv, sigma: &mut Substitution) -> Result<(), TypeError> {
        let mut pending: Vec<&Formula> = rule.premises.iter().collect();
        while !pending.is_empty() {
            let Some(i) = pending.iter().position(|p| ready(p, sigma)) else {
                return Err(TypeError::Underdetermined { rule: rule.name.clone() });
            };
            let premise = pending.remove(i);
            self.discharge(rule, premise, env, sigma)?;
        }
        Ok(())
    }

    fn discharge(
        &self,
        rule: &InferenceRule,
        premise: &Formula,
        env: &TypeEnv,
        sigma: &mut Substitution,
    ) -> Result<(), TypeError> {
        let name = || rule.name.clone();
        let ground = |t: &Term| instantiate(t, sigma).expect("premise is ready");
        match premise {
            Formula::Typing { env: extension, subject, ty } => {
                let subject = ground(subject);
                let env = extend(env, extension, sigma);
                if is_bound(ty, sigma) {
                    return self.check(&env, &subject, &ground(ty));
                }
                let found = self.infer(&env, &subject)?;
                if !match_into(ty, &found, self.spec, sigma) {
                    let expected = instantiate(ty, sigma).unwrap_or_else(|_| ty.clone());
                    return Err(TypeError::Mismatch { rule: name(), subject, expected, found });
                }
            }
            Formula::Subtype { sub, sup } => {
                let (sub, sup) = (ground(sub), ground(sup));
                if !self.lattice.is_subtype(&sub, &sup) {
                    return Err(TypeError::SubtypeFailure { rule: name(), sub, sup });
                }
            }
            Formula::TypeEq { left, right } => {
                let (known, other) = if is_bound(left, sigma) { (left, right) } else { (right, left) };
                let known = ground(known);
                if !match_into(other, &known, self.spec, sigma) {
                    let other = instantiate(other, sigma).unwrap_or_else(|_| other.clone());
                    return Err(TypeError::NotEqual { rule: name(), left: known, right: other });
                }
            }
            Formula::Join { result, operands } | Formula::Meet { result, operands } => {
                let upper = matches!(premise, Formula::Join { .. });
                let mut operands = operands.iter().map(ground);
                let first = operands.next().expect("lattice premise has operands");
                let bound = operands.try_fold(first, |acc, t| {
                    if upper {
                        self.lattice.join(&acc, &t)
                    } else {
                        self.lattice.meet(&acc, &t)
                    }
                });
                let bound = bound.map_err(|source| TypeError::NoJoin { rule: name(), source })?;
                if !match_into(result, &bound, self.spec, sigma) {
                    let result = instantiate(result, sigma).unwrap_or_else(|_| result.clone());
                    return Err(TypeError::NotEqual { rule: name(), left: result, right: bound });
                }
            }
            Formula::Reduction { .. } | Formula::MachineStep { .. } => {
                unreachable!("validation keeps these out of typing rules")
            }
        }
        Ok(())
    }
}

fn mismatch(rule: &str, subject: &Term, expected: &Term, found: &Term) -> TypeError {
    TypeError::Mismatch {
        rule: rule.to_string(),
        subject: subject.clone(),
        expected: expected.clone(),
        found: found.clone(),
    }
}

/// Can `premise` be discharged with the bindings in `sigma`?
fn ready(premise: &Formula, sigma: &Substitution) -> bool {
    match premise {
        Formula::Typing { env, subject, .. } => {
            is_bound(subject, sigma) && env.extensions.iter().all(|(_, t)| is_bound(t, sigma))
        }
        Formula::Subtype { sub, sup } => is_bound(sub, sigma) && is_bound(sup, sigma),
        Formula::TypeEq { left, right } => is_bound(left, sigma) || is_bound(right, sigma),
        Formula::Join { operands, .. } | Formula::Meet { operands, .. } => operands.iter().all(|t| is_bound(t, sigma)),
        Formula::Reduction { .. } | Formula::MachineStep { .. } => false,
    }
}

fn extend(env: &TypeEnv, extension: &EnvExpr, sigma: &Substitution) -> TypeEnv {
    let mut env = env.clone();
    for (x, t) in &extension.extensions {
        let name = match sigma.get(x) {
            Some(Term::Var(name)) => name.clone(),
            _ => x.clone(),
        };
        env.push((name, instantiate(t, sigma).expect("extension is ready")));
    }
    env
}

/// Type of a closed term, if it has one.
pub fn typecheck(spec: &LanguageSpec, term: &Term) -> Result<Term, TypeError> {
    TypeChecker::new(spec)?.infer(&TypeEnv::new(), term)
}
