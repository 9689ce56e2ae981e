use std::collections::BTreeMap;

use super::term::{Metavariable, Term};

/// A typing environment: a root (such as `G`) followed by extensions
/// `x : T`, innermost last.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct EnvExpr {
    pub root: String,
    pub extensions: Vec<(String, Term)>,
}

impl EnvExpr {
    pub fn root(root: impl Into<String>) -> Self {
        EnvExpr { root: root.into(), extensions: Vec::new() }
    }
}

/// State of a CK machine: the term in focus and the continuation.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MachineConfig {
    pub focus: Term,
    pub continuation: Term,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Formula {
    /// `G |- e : T`
    Typing { env: EnvExpr, subject: Term, ty: Term },
    /// `e --> e'`
    Reduction { lhs: Term, rhs: Term },
    /// `<e , k> --> <e' , k'>`
    MachineStep { lhs: MachineConfig, rhs: MachineConfig },
    /// `T1 <: T2`
    Subtype { sub: Term, sup: Term },
    /// `T1 = T2`
    TypeEq { left: Term, right: Term },
    /// `T = T1 \/ T2 \/ ...`, at least two operands.
    Join { result: Term, operands: Vec<Term> },
    /// `T = T1 /\ T2 /\ ...`, at least two operands.
    Meet { result: Term, operands: Vec<Term> },
}

impl Formula {
    pub fn is_typing(&self) -> bool {
        matches!(self, Formula::Typing { .. })
    }

    /// Every term in the formula, left to right, as written.
    pub fn terms(&self) -> Vec<&Term> {
        match self {
            Formula::Typing { env, subject, ty } => {
                let mut out: Vec<&Term> = env.extensions.iter().map(|(_, t)| t).collect();
                out.push(subject);
                out.push(ty);
                out
            }
            Formula::Reduction { lhs, rhs } => vec![lhs, rhs],
            Formula::MachineStep { lhs, rhs } => {
                vec![&lhs.focus, &lhs.continuation, &rhs.focus, &rhs.continuation]
            }
            Formula::Subtype { sub, sup } => vec![sub, sup],
            Formula::TypeEq { left, right } => vec![left, right],
            Formula::Join { result, operands } | Formula::Meet { result, operands } => {
                std::iter::once(result).chain(operands.iter()).collect()
            }
        }
    }

    /// Metavariable tokens in reading order, including binder bound tokens
    /// and environment extension variables.
    pub fn tokens(&self) -> Vec<String> {
        let mut out = Vec::new();
        match self {
            Formula::Typing { env, subject, ty } => {
                for (x, t) in &env.extensions {
                    out.push(x.clone());
                    t.pattern_tokens(&mut out);
                }
                subject.pattern_tokens(&mut out);
                ty.pattern_tokens(&mut out);
            }
            _ => {
                for t in self.terms() {
                    t.pattern_tokens(&mut out);
                }
            }
        }
        out
    }

    pub fn rename_metavariables(&self, map: &BTreeMap<String, Metavariable>) -> Formula {
        let r = |t: &Term| t.rename_metavariables(map);
        match self {
            Formula::Typing { env, subject, ty } => Formula::Typing {
                env: EnvExpr {
                    root: env.root.clone(),
                    extensions: env
                        .extensions
                        .iter()
                        .map(|(x, t)| {
                            let x = map.get(x).map(Metavariable::token).unwrap_or_else(|| x.clone());
                            (x, r(t))
                        })
                        .collect(),
                },
                subject: r(subject),
                ty: r(ty),
            },
            Formula::Reduction { lhs, rhs } => Formula::Reduction { lhs: r(lhs), rhs: r(rhs) },
            Formula::MachineStep { lhs, rhs } => Formula::MachineStep {
                lhs: MachineConfig { focus: r(&lhs.focus), continuation: r(&lhs.continuation) },
                rhs: MachineConfig { focus: r(&rhs.focus), continuation: r(&rhs.continuation) },
            },
            Formula::Subtype { sub, sup } => Formula::Subtype { sub: r(sub), sup: r(sup) },
            Formula::TypeEq { left, right } => Formula::TypeEq { left: r(left), right: r(right) },
            Formula::Join { result, operands } => {
                Formula::Join { result: r(result), operands: operands.iter().map(r).collect() }
            }
            Formula::Meet { result, operands } => {
                Formula::Meet { result: r(result), operands: operands.iter().map(r).collect() }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct InferenceRule {
    pub name: String,
    pub premises: Vec<Formula>,
    pub conclusion: Formula,
}

impl InferenceRule {
    pub fn new(name: impl Into<String>, premises: Vec<Formula>, conclusion: Formula) -> Self {
        InferenceRule { name: name.into(), premises, conclusion }
    }

    pub fn is_typing(&self) -> bool {
        self.conclusion.is_typing()
    }

    pub fn is_reduction(&self) -> bool {
        matches!(self.conclusion, Formula::Reduction { .. })
    }

    pub fn is_machine_step(&self) -> bool {
        matches!(self.conclusion, Formula::MachineStep { .. })
    }

    /// Metavariable tokens of the whole rule in reading order: premises
    /// first, then the conclusion. Repeats included.
    pub fn tokens(&self) -> Vec<String> {
        self.premises.iter().chain(std::iter::once(&self.conclusion)).flat_map(Formula::tokens).collect()
    }

    /// Metavariables (not bound-name tokens) of the whole rule, in reading order.
    pub fn metavariables(&self) -> Vec<&Metavariable> {
        self.premises
            .iter()
            .chain(std::iter::once(&self.conclusion))
            .flat_map(|f| f.terms())
            .flat_map(|t| t.metavariables())
            .collect()
    }

    pub fn rename_metavariables(&self, map: &BTreeMap<String, Metavariable>) -> InferenceRule {
        InferenceRule {
            name: self.name.clone(),
            premises: self.premises.iter().map(|p| p.rename_metavariables(map)).collect(),
            conclusion: self.conclusion.rename_metavariables(map),
        }
    }

    /// Rename every metavariable to `<base><n>`, numbering each base in order
    /// of first appearance. Two rules that differ only in the choice of
    /// metavariable names have equal canonical forms.
    pub fn canonical(&self) -> InferenceRule {
        let metas: BTreeMap<String, Metavariable> =
            self.metavariables().into_iter().map(|m| (m.token(), m.clone())).collect();
        let mut counters: BTreeMap<String, usize> = BTreeMap::new();
        let mut map: BTreeMap<String, Metavariable> = BTreeMap::new();
        for token in self.tokens() {
            if map.contains_key(&token) {
                continue;
            }
            // bound-name tokens without a Meta occurrence keep their category unknown
            let mv = metas
                .get(&token)
                .cloned()
                .unwrap_or_else(|| Metavariable::new(token.trim_end_matches(is_suffix_char), None, ""));
            let n = counters.entry(mv.base.clone()).or_insert(0);
            *n += 1;
            map.insert(token, mv.with_suffix(Some(n.to_string())));
        }
        self.rename_metavariables(&map)
    }
}

pub(crate) fn is_suffix_char(c: char) -> bool {
    c.is_ascii_digit() || c == '\''
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(token: &str) -> Term {
        let base = token.trim_end_matches(is_suffix_char);
        Term::Meta(Metavariable::new(base, Some(&token[base.len()..]), "Type"))
    }

    fn rule(sub: &str, sup: &str) -> InferenceRule {
        InferenceRule::new(
            "r",
            vec![Formula::Subtype { sub: t(sub), sup: t(sup) }],
            Formula::TypeEq { left: t(sup), right: t(sub) },
        )
    }

    #[test]
    fn canonical_form_ignores_names() {
        assert_eq!(rule("T12", "T11").canonical(), rule("T'", "T").canonical());
        assert_ne!(rule("T12", "T11").canonical(), rule("T", "T").canonical());
    }

    #[test]
    fn canonical_renaming_is_simultaneous() {
        // T2 -> T1 and T1 -> T2 must not collide
        let r = rule("T2", "T1").canonical();
        assert_eq!(r.premises[0], Formula::Subtype { sub: t("T1"), sup: t("T2") });
    }
}
