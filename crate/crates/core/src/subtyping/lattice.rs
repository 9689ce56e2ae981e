use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::ir::{Formula, InferenceRule, LanguageSpec, Metavariable, Term, Variance, VarianceTable, TYPE};
use crate::parser::find_cycle;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum LatticeError {
    #[error("base subtype axioms form a cycle through {0:?}")]
    IllFormedLattice(Vec<String>),
    #[error("`{0}` and `{1}` have no join")]
    NoJoin(Box<Term>, Box<Term>),
    #[error("`{0}` and `{1}` have no meet")]
    NoMeet(Box<Term>, Box<Term>),
}

/// The subtype order on ground types: reflexivity, the transitive closure
/// of the base axioms, and one structural rule per type constructor.
#[derive(Clone, Debug)]
pub struct SubtypeLattice {
    /// Reflexive-transitive closure of the base axioms.
    below: BTreeMap<String, BTreeSet<String>>,
    bases: BTreeSet<String>,
    variance: VarianceTable,
}

impl SubtypeLattice {
    pub fn new(spec: &LanguageSpec) -> Result<Self, LatticeError> {
        if let Some(cycle) = find_cycle(&spec.base_subtypes) {
            return Err(LatticeError::IllFormedLattice(cycle));
        }
        let bases = spec.base_types();
        let mut below: BTreeMap<String, BTreeSet<String>> =
            bases.iter().map(|b| (b.clone(), BTreeSet::from([b.clone()]))).collect();
        // upward closure: below[a] holds every b with a <: b
        let mut changed = true;
        while changed {
            changed = false;
            for (a, b) in &spec.base_subtypes {
                let ups: Vec<String> = below.get(b).into_iter().flatten().cloned().collect();
                let entry = below.entry(a.clone()).or_default();
                for u in ups {
                    changed |= entry.insert(u);
                }
            }
        }
        Ok(SubtypeLattice { below, bases, variance: spec.variance.clone() })
    }

    fn base_le(&self, a: &str, b: &str) -> bool {
        a == b || self.below.get(a).is_some_and(|s| s.contains(b))
    }

    pub fn is_subtype(&self, sub: &Term, sup: &Term) -> bool {
        if sub == sup {
            return true;
        }
        match (sub, sup) {
            (Term::Ctor { name: a, args: xs }, Term::Ctor { name: b, args: ys }) => {
                if xs.is_empty() && ys.is_empty() {
                    return self.base_le(a, b);
                }
                if a != b || xs.len() != ys.len() {
                    return false;
                }
                let Some(marks) = self.variance.get(a) else {
                    return false;
                };
                xs.iter().zip(ys).zip(marks).all(|((x, y), m)| match m {
                    Variance::Covariant => self.is_subtype(x, y),
                    Variance::Contravariant => self.is_subtype(y, x),
                    Variance::Invariant => x == y,
                })
            }
            _ => false,
        }
    }

    pub fn join(&self, a: &Term, b: &Term) -> Result<Term, LatticeError> {
        self.bound(a, b, true)
    }

    pub fn meet(&self, a: &Term, b: &Term) -> Result<Term, LatticeError> {
        self.bound(a, b, false)
    }

    fn bound(&self, a: &Term, b: &Term, upper: bool) -> Result<Term, LatticeError> {
        let fail = || {
            if upper {
                LatticeError::NoJoin(Box::new(a.clone()), Box::new(b.clone()))
            } else {
                LatticeError::NoMeet(Box::new(a.clone()), Box::new(b.clone()))
            }
        };
        if a == b {
            return Ok(a.clone());
        }
        match (a, b) {
            (Term::Ctor { name: x, args: xs }, Term::Ctor { name: y, args: ys }) => {
                if xs.is_empty() && ys.is_empty() {
                    return self.base_bound(x, y, upper).map(Term::constant).ok_or_else(fail);
                }
                if x != y || xs.len() != ys.len() {
                    return Err(fail());
                }
                let marks = self.variance.get(x).ok_or_else(fail)?;
                let args = xs
                    .iter()
                    .zip(ys)
                    .zip(marks)
                    .map(|((p, q), m)| match m {
                        Variance::Covariant => self.bound(p, q, upper),
                        Variance::Contravariant => self.bound(p, q, !upper),
                        Variance::Invariant if p == q => Ok(p.clone()),
                        Variance::Invariant => Err(fail()),
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(Term::ctor(x.clone(), args))
            }
            _ => Err(fail()),
        }
    }

    /// Least upper (or greatest lower) bound of two base types.
    fn base_bound(&self, a: &str, b: &str, upper: bool) -> Option<String> {
        let le = |x: &str, y: &str| if upper { self.base_le(x, y) } else { self.base_le(y, x) };
        let candidates: Vec<&String> = self.bases.iter().filter(|c| le(a, c) && le(b, c)).collect();
        candidates.iter().find(|c| candidates.iter().all(|d| le(c, d))).map(|c| c.to_string())
    }
}

/// Is `sub <: sup` derivable in `spec`'s subtype order?
pub fn check_subtype(sub: &Term, sup: &Term, spec: &LanguageSpec) -> Result<bool, LatticeError> {
    Ok(SubtypeLattice::new(spec)?.is_subtype(sub, sup))
}

pub fn join(a: &Term, b: &Term, spec: &LanguageSpec) -> Result<Term, LatticeError> {
    SubtypeLattice::new(spec)?.join(a, b)
}

pub fn meet(a: &Term, b: &Term, spec: &LanguageSpec) -> Result<Term, LatticeError> {
    SubtypeLattice::new(spec)?.meet(a, b)
}

fn type_meta(spec: &LanguageSpec, suffix: &str) -> Term {
    let base = spec.category(TYPE).map_or("T", |c| c.metavariable.as_str());
    Term::Meta(Metavariable::new(base, Some(suffix), TYPE))
}

/// Type constructors with a declared variance, in table order.
fn constructors(spec: &LanguageSpec) -> Vec<(String, Vec<Variance>)> {
    spec.variance.iter().filter(|(_, m)| !m.is_empty()).map(|(c, m)| (c.clone(), m.clone())).collect()
}

/// The algorithmic subtype relation as inference rules: reflexivity for
/// each base type, the base axioms, and one structural rule per type
/// constructor. There is no transitivity rule.
pub fn generate_subtype_relation(spec: &LanguageSpec) -> Vec<InferenceRule> {
    let mut rules = Vec::new();
    for b in spec.base_types() {
        let t = Term::constant(&b);
        rules.push(InferenceRule::new(format!("sub-refl-{b}"), vec![], Formula::Subtype { sub: t.clone(), sup: t }));
    }
    for (a, b) in &spec.base_subtypes {
        rules.push(InferenceRule::new(
            format!("sub-{a}-{b}"),
            vec![],
            Formula::Subtype { sub: Term::constant(a), sup: Term::constant(b) },
        ));
    }
    for (ctor, marks) in constructors(spec) {
        let left: Vec<Term> = (1..=marks.len()).map(|i| type_meta(spec, &i.to_string())).collect();
        let right: Vec<Term> = (1..=marks.len()).map(|i| type_meta(spec, &format!("{i}'"))).collect();
        let premises = marks
            .iter()
            .enumerate()
            .map(|(i, m)| match m {
                Variance::Covariant => Formula::Subtype { sub: left[i].clone(), sup: right[i].clone() },
                Variance::Contravariant => Formula::Subtype { sub: right[i].clone(), sup: left[i].clone() },
                Variance::Invariant => Formula::TypeEq { left: left[i].clone(), right: right[i].clone() },
            })
            .collect();
        rules.push(InferenceRule::new(
            format!("sub-{ctor}"),
            premises,
            Formula::Subtype { sub: Term::ctor(&ctor, left), sup: Term::ctor(&ctor, right) },
        ));
    }
    rules
}

/// The join and meet computations as inference rules, for documentation:
/// base-type bounds from the declared order, then one structural rule per
/// constructor and direction. Covariant arguments take the same bound,
/// contravariant ones the opposite bound, invariant ones must be equal.
pub fn generate_join_relation(spec: &LanguageSpec) -> Result<Vec<InferenceRule>, LatticeError> {
    let lattice = SubtypeLattice::new(spec)?;
    let mut rules = Vec::new();
    let t = type_meta(spec, "");
    rules.push(InferenceRule::new(
        "join-refl",
        vec![],
        Formula::Join { result: t.clone(), operands: vec![t.clone(), t.clone()] },
    ));
    rules.push(InferenceRule::new(
        "meet-refl",
        vec![],
        Formula::Meet { result: t.clone(), operands: vec![t.clone(), t] },
    ));
    let bases: Vec<String> = spec.base_types().into_iter().collect();
    for (upper, kind) in [(true, "join"), (false, "meet")] {
        for (i, a) in bases.iter().enumerate() {
            for b in &bases[i + 1..] {
                let Some(c) = lattice.base_bound(a, b, upper) else { continue };
                let operands = vec![Term::constant(a), Term::constant(b)];
                let result = Term::constant(c);
                let f = if upper { Formula::Join { result, operands } } else { Formula::Meet { result, operands } };
                rules.push(InferenceRule::new(format!("{kind}-{a}-{b}"), vec![], f));
            }
        }
    }
    for (upper, kind) in [(true, "join"), (false, "meet")] {
        for (ctor, marks) in constructors(spec) {
            let n = marks.len();
            let left: Vec<Term> = (1..=n).map(|i| type_meta(spec, &i.to_string())).collect();
            let right: Vec<Term> = (1..=n).map(|i| type_meta(spec, &format!("{i}'"))).collect();
            let mut result = Vec::new();
            let mut premises = Vec::new();
            for (i, m) in marks.iter().enumerate() {
                let bound = type_meta(spec, &format!("{}''", i + 1));
                let operands = vec![left[i].clone(), right[i].clone()];
                let same_direction = match m {
                    Variance::Covariant => upper,
                    Variance::Contravariant => !upper,
                    Variance::Invariant => {
                        premises.push(Formula::TypeEq { left: left[i].clone(), right: right[i].clone() });
                        result.push(left[i].clone());
                        continue;
                    }
                };
                premises.push(if same_direction {
                    Formula::Join { result: bound.clone(), operands }
                } else {
                    Formula::Meet { result: bound.clone(), operands }
                });
                result.push(bound);
            }
            let result = Term::ctor(&ctor, result);
            let operands = vec![Term::ctor(&ctor, left), Term::ctor(&ctor, right)];
            let conclusion =
                if upper { Formula::Join { result, operands } } else { Formula::Meet { result, operands } };
            rules.push(InferenceRule::new(format!("{kind}-{ctor}"), premises, conclusion));
        }
    }
    Ok(rules)
}
