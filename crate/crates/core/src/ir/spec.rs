use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use super::formula::{is_suffix_char, InferenceRule};
use super::term::{Metavariable, Term};

pub const TYPE: &str = "Type";
pub const EXPRESSION: &str = "Expression";
pub const VALUE: &str = "Value";
pub const CONTEXT: &str = "Context";
pub const CONTINUATION: &str = "Continuation";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Variance {
    Covariant,
    Contravariant,
    Invariant,
}

impl Variance {
    /// Variance of a position nested at `inner` inside a position of
    /// variance `self`.
    pub fn compose(self, inner: Variance) -> Variance {
        use Variance::*;
        match (self, inner) {
            (Invariant, _) | (_, Invariant) => Invariant,
            (Contravariant, Contravariant) | (Covariant, Covariant) => Covariant,
            (Contravariant, Covariant) | (Covariant, Contravariant) => Contravariant,
        }
    }

    pub fn mark(self) -> &'static str {
        match self {
            Variance::Covariant => "co",
            Variance::Contravariant => "contra",
            Variance::Invariant => "inv",
        }
    }

    pub fn from_mark(mark: &str) -> Option<Variance> {
        match mark {
            "co" => Some(Variance::Covariant),
            "contra" => Some(Variance::Contravariant),
            "inv" => Some(Variance::Invariant),
            _ => None,
        }
    }
}

impl fmt::Display for Variance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variance::Covariant => "covariant",
            Variance::Contravariant => "contravariant",
            Variance::Invariant => "invariant",
        })
    }
}

/// Per-argument variance of each type constructor.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct VarianceTable(BTreeMap<String, Vec<Variance>>);

impl VarianceTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, ctor: &str) -> Option<&[Variance]> {
        self.0.get(ctor).map(Vec::as_slice)
    }

    pub fn insert(&mut self, ctor: impl Into<String>, marks: Vec<Variance>) {
        self.0.insert(ctor.into(), marks);
    }

    pub fn contains(&self, ctor: &str) -> bool {
        self.0.contains_key(ctor)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Vec<Variance>)> {
        self.0.iter()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Marks for the usual type constructors, used when a spec does not
    /// declare them itself.
    pub fn builtin(ctor: &str) -> Option<Vec<Variance>> {
        use Variance::*;
        match ctor {
            "arrow" => Some(vec![Contravariant, Covariant]),
            "Ref" => Some(vec![Invariant]),
            "List" => Some(vec![Covariant]),
            "product" | "sum" => Some(vec![Covariant, Covariant]),
            _ => None,
        }
    }
}

impl FromIterator<(String, Vec<Variance>)> for VarianceTable {
    fn from_iter<I: IntoIterator<Item = (String, Vec<Variance>)>>(iter: I) -> Self {
        VarianceTable(iter.into_iter().collect())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CategoryKind {
    /// Ordinary productions.
    Syntax,
    /// Object-level variable names (`%name`), bound by binders.
    Names,
    /// Atomic constants (`%atom`): any identifier made of the category's
    /// metavariable plus a suffix, such as `c`, `c1`, `c2`.
    Atoms,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrammarCategory {
    pub name: String,
    pub metavariable: String,
    pub kind: CategoryKind,
    pub productions: Vec<Term>,
}

impl GrammarCategory {
    pub fn syntax(name: &str, metavariable: &str, productions: Vec<Term>) -> Self {
        GrammarCategory {
            name: name.into(),
            metavariable: metavariable.into(),
            kind: CategoryKind::Syntax,
            productions,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LanguageSpec {
    pub name: String,
    /// Explicit `contexts` directive, if any.
    pub contexts: Option<String>,
    /// Binder constructors. A binder's first argument is the bound name.
    pub binders: BTreeSet<String>,
    pub categories: Vec<GrammarCategory>,
    pub variance: VarianceTable,
    pub base_subtypes: Vec<(String, String)>,
    pub rules: Vec<InferenceRule>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ResolveError {
    #[error("unknown metavariable `{0}`: no grammar category uses it")]
    UnknownMetavariable(String),
}

/// Resolve `token` against the declared category metavariables: the longest
/// metavariable that prefixes the token wins, and the rest must be digits
/// and primes.
pub fn resolve_metavariable(token: &str, spec: &LanguageSpec) -> Result<Metavariable, ResolveError> {
    resolve_in(token, &spec.categories)
}

pub fn resolve_in(token: &str, categories: &[GrammarCategory]) -> Result<Metavariable, ResolveError> {
    let best = categories
        .iter()
        .filter(|c| token.starts_with(c.metavariable.as_str()))
        .max_by_key(|c| c.metavariable.len())
        .ok_or_else(|| ResolveError::UnknownMetavariable(token.to_string()))?;
    let rest = &token[best.metavariable.len()..];
    if !rest.chars().all(is_suffix_char) {
        return Err(ResolveError::UnknownMetavariable(token.to_string()));
    }
    Ok(Metavariable::new(best.metavariable.clone(), Some(rest), best.name.clone()))
}

/// `base` with the smallest positive integer appended to its suffix such
/// that the token is not in `used`.
pub fn fresh(base: &Metavariable, used: &BTreeSet<String>) -> Metavariable {
    let prefix = base.suffix.clone().unwrap_or_default();
    (1..)
        .map(|n| base.with_suffix(Some(format!("{prefix}{n}"))))
        .find(|m| !used.contains(&m.token()))
        .expect("unbounded suffix search")
}

const MAX_UNIT_DEPTH: usize = 16;

impl LanguageSpec {
    pub fn category(&self, name: &str) -> Option<&GrammarCategory> {
        self.categories.iter().find(|c| c.name == name)
    }

    pub fn category_of_metavariable(&self, metavariable: &str) -> Option<&GrammarCategory> {
        self.categories.iter().find(|c| c.metavariable == metavariable)
    }

    /// The evaluation-context category: the `contexts` directive's target,
    /// or a category named `Context`.
    pub fn context_category(&self) -> Option<&GrammarCategory> {
        match &self.contexts {
            Some(name) => self.category(name),
            None => self.category(CONTEXT),
        }
    }

    /// Argument positions of a context production that act as the hole:
    /// a literal `[.]` or the context category's own metavariable, as in
    /// `(app E e)`.
    pub fn hole_slots(&self, production: &Term) -> Vec<usize> {
        let context = self.context_category().map(|c| c.name.as_str());
        production
            .args()
            .iter()
            .enumerate()
            .filter(|(_, a)| match a {
                Term::Hole => true,
                Term::Meta(m) => Some(m.category.as_str()) == context,
                _ => false,
            })
            .map(|(i, _)| i)
            .collect()
    }

    /// The single hole position of a context production, if it has one.
    pub fn context_hole(&self, production: &Term) -> Option<usize> {
        match self.hole_slots(production)[..] {
            [i] => Some(i),
            _ => None,
        }
    }

    pub fn typing_rules(&self) -> impl Iterator<Item = &InferenceRule> {
        self.rules.iter().filter(|r| r.is_typing())
    }

    pub fn reduction_rules(&self) -> impl Iterator<Item = &InferenceRule> {
        self.rules.iter().filter(|r| r.is_reduction())
    }

    pub fn machine_rules(&self) -> impl Iterator<Item = &InferenceRule> {
        self.rules.iter().filter(|r| r.is_machine_step())
    }

    pub fn rule(&self, name: &str) -> Option<&InferenceRule> {
        self.rules.iter().find(|r| r.name == name)
    }

    /// Nullary constructors of the type category.
    pub fn base_types(&self) -> BTreeSet<String> {
        let mut out: BTreeSet<String> = self
            .category(TYPE)
            .into_iter()
            .flat_map(|c| &c.productions)
            .filter_map(|p| match p {
                Term::Ctor { name, args } if args.is_empty() => Some(name.clone()),
                _ => None,
            })
            .collect();
        for (a, b) in &self.base_subtypes {
            out.insert(a.clone());
            out.insert(b.clone());
        }
        out
    }

    /// The category an identifier belongs to when it is an atom constant.
    pub fn atom_category(&self, name: &str) -> Option<&GrammarCategory> {
        let mv = resolve_in(name, &self.categories).ok()?;
        self.category(&mv.category).filter(|c| c.kind == CategoryKind::Atoms)
    }

    /// Every name that occurs as a nullary constructor in some production.
    pub fn declared_constants(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for c in &self.categories {
            for p in &c.productions {
                collect_constants(p, &mut out);
            }
        }
        out
    }

    /// Does category `sup` contain every term of category `sub`?
    ///
    /// Holds when the two are equal, when `sup` is the expression category
    /// and `sub` the value category, or through a production of `sup` that
    /// is a bare metavariable of a category including `sub`.
    pub fn includes(&self, sup: &str, sub: &str) -> bool {
        self.includes_at(sup, sub, 0)
    }

    fn includes_at(&self, sup: &str, sub: &str, depth: usize) -> bool {
        if sup == sub || (sup == EXPRESSION && sub == VALUE) {
            return true;
        }
        if depth > MAX_UNIT_DEPTH {
            return false;
        }
        self.category(sup).is_some_and(|c| {
            c.productions.iter().any(|p| match p {
                Term::Meta(m) => self.includes_at(&m.category, sub, depth + 1),
                _ => false,
            })
        })
    }

    /// Grammar membership: is `term` derivable from `category`?
    ///
    /// Works for ground terms and for patterns; a metavariable in `term`
    /// stands for every term of its own category.
    pub fn derives(&self, category: &str, term: &Term) -> bool {
        self.derives_at(category, term, 0)
    }

    fn derives_at(&self, category: &str, term: &Term, depth: usize) -> bool {
        if depth > MAX_UNIT_DEPTH {
            return false;
        }
        let Some(cat) = self.category(category) else {
            return false;
        };
        match term {
            Term::Meta(m) => return self.includes(category, &m.category),
            Term::Subst { .. } => return self.includes(category, EXPRESSION),
            _ => {}
        }
        match cat.kind {
            CategoryKind::Names => matches!(term, Term::Var(_)),
            CategoryKind::Atoms => match term {
                Term::Ctor { name, args } if args.is_empty() => {
                    self.atom_category(name).is_some_and(|c| c.name == cat.name)
                }
                _ => false,
            },
            CategoryKind::Syntax => cat.productions.iter().any(|p| self.matches_production(p, term, depth)),
        }
    }

    fn matches_production(&self, production: &Term, term: &Term, depth: usize) -> bool {
        match (production, term) {
            (Term::Meta(m), _) => {
                let next = if matches!(term, Term::Meta(_)) { depth } else { depth + 1 };
                self.derives_at(&m.category, term, next)
            }
            (Term::Hole, Term::Hole) => true,
            (Term::Ctor { name: pn, args: pa }, Term::Ctor { name: tn, args: ta })
            | (Term::Binder { name: pn, args: pa, .. }, Term::Binder { name: tn, args: ta, .. }) => {
                pn == tn && pa.len() == ta.len() && pa.iter().zip(ta).all(|(p, t)| self.matches_production(p, t, 0))
            }
            _ => false,
        }
    }

    pub fn is_value(&self, term: &Term) -> bool {
        self.derives(VALUE, term)
    }
}

fn collect_constants(t: &Term, out: &mut BTreeSet<String>) {
    match t {
        Term::Ctor { name, args } if args.is_empty() => {
            out.insert(name.clone());
        }
        _ => t.args().iter().for_each(|a| collect_constants(a, out)),
    }
}
