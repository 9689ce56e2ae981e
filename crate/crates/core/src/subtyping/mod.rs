//! Adding algorithmic subtyping to the typing rules of a language.
//!
//! The transformation works in two passes over each typing rule. The first
//! gives every repeated type metavariable in the premises' output types a
//! fresh name per occurrence; the second relates the fresh names according
//! to the variance of the positions they occupy.

mod lattice;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::ir::{fresh, Formula, InferenceRule, LanguageSpec, Metavariable, Term, Variance};
use crate::variance::{collect_occurrences, Occurrence, VarianceError};

pub use lattice::{
    check_subtype, generate_join_relation, generate_subtype_relation, join, meet, LatticeError, SubtypeLattice,
};

/// Original type metavariable to the fresh metavariables that replaced its
/// occurrences, in order of first appearance.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct VarMap {
    entries: Vec<(Metavariable, Vec<Metavariable>)>,
}

impl VarMap {
    pub fn get(&self, original: &Metavariable) -> Option<&[Metavariable]> {
        self.entries.iter().find(|(k, _)| k == original).map(|(_, v)| v.as_slice())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Metavariable, &[Metavariable])> {
        self.entries.iter().map(|(k, v)| (k, v.as_slice()))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn push(&mut self, original: &Metavariable, replacement: Metavariable) {
        match self.entries.iter_mut().find(|(k, _)| k == original) {
            Some((_, v)) => v.push(replacement),
            None => self.entries.push((original.clone(), vec![replacement])),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SubtypingReason {
    /// More than one occurrence sits in contravariant position, so there is
    /// no single input type the others could flow into.
    MultipleContravariant,
}

impl fmt::Display for SubtypingReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SubtypingReason::MultipleContravariant => f.write_str("MultipleContravariant"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubtypingError {
    pub rule: String,
    pub variable: Metavariable,
    pub reason: SubtypingReason,
    pub occurrences: Vec<Occurrence>,
}

impl fmt::Display for SubtypingError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let contra = self.occurrences.iter().filter(|o| o.variance == Variance::Contravariant).count();
        write!(
            f,
            "rule `{}`: cannot relate the occurrences of `{}` ({}): {} occurrences, {} contravariant",
            self.rule,
            self.variable.token(),
            self.reason,
            self.occurrences.len(),
            contra
        )?;
        for o in &self.occurrences {
            write!(f, "\n  premise {} at {:?}: {}", o.premise + 1, o.path, o.variance)?;
        }
        Ok(())
    }
}

impl std::error::Error for SubtypingError {}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum AddSubtypingError {
    #[error("{0}")]
    Subtyping(#[from] SubtypingError),
    #[error("rule `{rule}`: {source}")]
    Variance { rule: String, source: VarianceError },
}

/// Replace each metavariable occurrence in pre-order, left to right.
fn map_metas(t: &Term, f: &mut impl FnMut(&Metavariable) -> Metavariable) -> Term {
    match t {
        Term::Meta(m) => Term::Meta(f(m)),
        Term::Ctor { name, args } => {
            Term::Ctor { name: name.clone(), args: args.iter().map(|a| map_metas(a, f)).collect() }
        }
        Term::Binder { name, bound, args } => Term::Binder {
            name: name.clone(),
            bound: bound.clone(),
            args: args.iter().map(|a| map_metas(a, f)).collect(),
        },
        Term::Subst { body, value, var } => Term::Subst {
            body: Box::new(map_metas(body, f)),
            value: Box::new(map_metas(value, f)),
            var: Box::new(map_metas(var, f)),
        },
        Term::Var(_) | Term::Hole => t.clone(),
    }
}

/// Give each occurrence of a type metavariable that appears more than once
/// across the premises' output types its own fresh name.
///
/// Fresh names avoid every token of the premises and of `reserved` (pass
/// the rest of the rule there). Premises other than typing premises, and
/// the environment and subject of typing premises, are left untouched.
pub fn split_equal_types(premises: &[Formula], reserved: &BTreeSet<String>) -> (Vec<Formula>, VarMap) {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for f in premises {
        if let Formula::Typing { ty, .. } = f {
            for m in ty.metavariables() {
                *counts.entry(m.token()).or_insert(0) += 1;
            }
        }
    }
    let mut used: BTreeSet<String> = reserved.clone();
    used.extend(premises.iter().flat_map(Formula::tokens));

    let mut varmap = VarMap::default();
    let new_premises = premises
        .iter()
        .map(|f| match f {
            Formula::Typing { env, subject, ty } => {
                let ty = map_metas(ty, &mut |m| {
                    if counts.get(&m.token()).copied().unwrap_or(0) < 2 {
                        return m.clone();
                    }
                    let n = fresh(m, &used);
                    used.insert(n.token());
                    varmap.push(m, n.clone());
                    n
                });
                Formula::Typing { env: env.clone(), subject: subject.clone(), ty }
            }
            other => other.clone(),
        })
        .collect();
    (new_premises, varmap)
}

/// Apply [`add_subtyping_to_rule`] to every typing rule of `spec`.
pub fn add_subtyping(spec: &LanguageSpec) -> Result<LanguageSpec, AddSubtypingError> {
    let rules = spec
        .rules
        .iter()
        .map(|r| if r.is_typing() { add_subtyping_to_rule(r, spec) } else { Ok(r.clone()) })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(LanguageSpec { rules, ..spec.clone() })
}

/// Split the repeated type metavariables of one typing rule and relate the
/// fresh names:
///
/// * any invariant occurrence: a chain of equalities;
/// * exactly one contravariant occurrence: every other name is a subtype of it;
/// * only covariant occurrences: the original name is their join;
/// * otherwise: [`SubtypingReason::MultipleContravariant`].
///
/// When the original name is still needed by the conclusion (or by an
/// environment extension), the first fresh name (equalities) or the
/// contravariant one (subtypes) is renamed back to it.
pub fn add_subtyping_to_rule(rule: &InferenceRule, spec: &LanguageSpec) -> Result<InferenceRule, AddSubtypingError> {
    let mut reserved: BTreeSet<String> = rule.conclusion.tokens().into_iter().collect();
    reserved.extend(rule.premises.iter().flat_map(Formula::tokens));
    let (mut premises, varmap) = split_equal_types(&rule.premises, &reserved);

    // tokens that must stay bound after the split
    let mut needed: BTreeSet<String> = rule.conclusion.tokens().into_iter().collect();
    for f in &rule.premises {
        if let Formula::Typing { env, .. } = f {
            for (_, t) in &env.extensions {
                let mut toks = Vec::new();
                t.pattern_tokens(&mut toks);
                needed.extend(toks);
            }
        }
    }

    let mut added = Vec::new();
    let mut renames: BTreeMap<String, Metavariable> = BTreeMap::new();
    for (original, fresh_vars) in varmap.iter() {
        let mut occurrences = Vec::new();
        let mut variances = Vec::new();
        for v in fresh_vars {
            let occ = collect_occurrences(v, &premises, &spec.variance)
                .map_err(|source| AddSubtypingError::Variance { rule: rule.name.clone(), source })?;
            variances.push(occ.first().map_or(Variance::Covariant, |o| o.variance));
            occurrences.extend(occ);
        }
        let keep_name = needed.contains(&original.token());
        let contravariant: Vec<usize> =
            (0..fresh_vars.len()).filter(|&i| variances[i] == Variance::Contravariant).collect();

        if variances.contains(&Variance::Invariant) {
            for pair in fresh_vars.windows(2) {
                added.push(Formula::TypeEq { left: Term::Meta(pair[0].clone()), right: Term::Meta(pair[1].clone()) });
            }
            if keep_name {
                renames.insert(fresh_vars[0].token(), original.clone());
            }
        } else if let [i] = contravariant.as_slice() {
            let target = &fresh_vars[*i];
            for (j, v) in fresh_vars.iter().enumerate() {
                if j != *i {
                    added.push(Formula::Subtype { sub: Term::Meta(v.clone()), sup: Term::Meta(target.clone()) });
                }
            }
            if keep_name {
                renames.insert(target.token(), original.clone());
            }
        } else if contravariant.is_empty() {
            added.push(Formula::Join {
                result: Term::Meta(original.clone()),
                operands: fresh_vars.iter().cloned().map(Term::Meta).collect(),
            });
        } else {
            return Err(SubtypingError {
                rule: rule.name.clone(),
                variable: original.clone(),
                reason: SubtypingReason::MultipleContravariant,
                occurrences,
            }
            .into());
        }
    }
    premises.extend(added);
    let premises = premises.iter().map(|p| p.rename_metavariables(&renames)).collect();
    Ok(InferenceRule { name: rule.name.clone(), premises, conclusion: rule.conclusion.clone() })
}

#[cfg(test)]
mod tests;
