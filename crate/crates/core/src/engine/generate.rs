use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::typecheck::{TypeChecker, TypeEnv};
use crate::ir::{CategoryKind, LanguageSpec, Term, EXPRESSION};

/// Atom spellings used by the random generator, as suffixes of the atom
/// category's metavariable: `c`, `c1`, `c2`.
const ATOM_SUFFIXES: [&str; 3] = ["", "1", "2"];
/// Relative weight of compound productions against leaves.
const COMPOUND_WEIGHT: usize = 3;
/// Bound names the random generator picks from; reuse gives shadowing.
const NAME_SUFFIXES: [&str; 3] = ["", "1", "2"];

/// Grammar-directed term generation, random and exhaustive.
///
/// Sizes count nodes as [`Term::size`] does. Names are only generated
/// where a binder has put them in scope, so every generated term is closed.
#[derive(Clone, Debug)]
pub struct TermGenerator<'a> {
    spec: &'a LanguageSpec,
    /// Smallest size of a term in each category; absent when the category
    /// derives no finite ground term.
    min: BTreeMap<String, usize>,
}

impl<'a> TermGenerator<'a> {
    pub fn new(spec: &'a LanguageSpec) -> Self {
        let mut generator = TermGenerator { spec, min: BTreeMap::new() };
        let mut changed = true;
        while changed {
            changed = false;
            for c in &spec.categories {
                let size = match c.kind {
                    CategoryKind::Names | CategoryKind::Atoms => Some(1),
                    CategoryKind::Syntax => c.productions.iter().filter_map(|p| generator.min_pattern(p)).min(),
                };
                if let Some(size) = size {
                    if generator.min.get(&c.name).is_none_or(|old| size < *old) {
                        generator.min.insert(c.name.clone(), size);
                        changed = true;
                    }
                }
            }
        }
        generator
    }

    pub fn min_size(&self, category: &str) -> Option<usize> {
        self.min.get(category).copied()
    }

    fn min_pattern(&self, p: &Term) -> Option<usize> {
        match p {
            Term::Meta(m) => self.min_size(&m.category),
            Term::Ctor { args, .. } | Term::Binder { args, .. } => {
                args.iter().map(|a| self.min_pattern(a)).sum::<Option<usize>>().map(|s| s + 1)
            }
            Term::Var(_) | Term::Hole | Term::Subst { .. } => None,
        }
    }

    fn name_base(&self) -> Option<&str> {
        self.spec.categories.iter().find(|c| c.kind == CategoryKind::Names).map(|c| c.metavariable.as_str())
    }

    /// A random term of `category` with at most `max_size` nodes, or
    /// `None` when this attempt ran into a dead end.
    pub fn generate<R: Rng>(&self, category: &str, max_size: usize, rng: &mut R) -> Option<Term> {
        self.gen_category(category, max_size, &mut Vec::new(), rng)
    }

    fn gen_category<R: Rng>(
        &self,
        category: &str,
        budget: usize,
        scope: &mut Vec<String>,
        rng: &mut R,
    ) -> Option<Term> {
        let cat = self.spec.category(category)?;
        match cat.kind {
            CategoryKind::Names => scope.choose(rng).map(|x| Term::Var(x.clone())),
            CategoryKind::Atoms => {
                let suffix = ATOM_SUFFIXES.choose(rng).expect("non-empty");
                Some(Term::constant(format!("{}{suffix}", cat.metavariable)))
            }
            CategoryKind::Syntax => {
                let feasible: Vec<&Term> = cat
                    .productions
                    .iter()
                    .filter(|p| self.min_pattern(p).is_some_and(|m| m <= budget))
                    .filter(|p| !scope.is_empty() || !self.is_bare_name(p))
                    .collect();
                let p = feasible.choose_weighted(rng, |p| self.weight(p, budget)).ok()?;
                self.gen_pattern(p, budget, scope, rng)
            }
        }
    }

    /// Compound productions are favoured while the budget allows them, so
    /// that terms do not collapse to leaves.
    fn weight(&self, p: &Term, budget: usize) -> usize {
        match p.args() {
            [] => 1,
            _ if budget > 2 => COMPOUND_WEIGHT,
            _ => 1,
        }
    }

    fn is_bare_name(&self, p: &Term) -> bool {
        p.as_meta().and_then(|m| self.spec.category(&m.category)).is_some_and(|c| c.kind == CategoryKind::Names)
    }

    fn gen_pattern<R: Rng>(&self, p: &Term, budget: usize, scope: &mut Vec<String>, rng: &mut R) -> Option<Term> {
        match p {
            Term::Meta(m) => self.gen_category(&m.category, budget, scope, rng),
            Term::Ctor { name, args } => {
                Some(Term::ctor(name, self.gen_args(args, budget.checked_sub(1)?, scope, rng)?))
            }
            Term::Binder { name, args, .. } => {
                let suffix = NAME_SUFFIXES.choose(rng).expect("non-empty");
                let bound = format!("{}{suffix}", self.name_base()?);
                scope.push(bound.clone());
                let args = self.gen_args(args, budget.checked_sub(1)?, scope, rng);
                scope.pop();
                Some(Term::Binder { name: name.clone(), bound, args: args? })
            }
            Term::Var(_) | Term::Hole | Term::Subst { .. } => None,
        }
    }

    /// Generate arguments within a shared budget. Each argument is reserved
    /// its minimum size; the slack goes to arguments in random order.
    fn gen_args<R: Rng>(
        &self,
        args: &[Term],
        budget: usize,
        scope: &mut Vec<String>,
        rng: &mut R,
    ) -> Option<Vec<Term>> {
        let mins: Vec<usize> = args.iter().map(|a| self.min_pattern(a)).collect::<Option<_>>()?;
        let mut slack = budget.checked_sub(mins.iter().sum())?;
        let mut budgets = mins.clone();
        let mut order: Vec<usize> = (0..args.len()).collect();
        order.shuffle(rng);
        for i in order {
            let extra = rng.gen_range(0..=slack);
            budgets[i] += extra;
            slack -= extra;
        }
        let mut out = Vec::with_capacity(args.len());
        for (a, b) in args.iter().zip(budgets) {
            out.push(self.gen_pattern(a, b, scope, rng)?);
        }
        Some(out)
    }
}

/// Exhaustive enumeration of the terms of a category, up to a size.
///
/// Bound names are canonical by binder depth (`x`, `x1`, `x2`, ...), so
/// alpha-equivalent terms appear once, and each atom category contributes
/// a single atom, its bare metavariable.
#[derive(Debug)]
pub struct Enumerator<'a> {
    spec: &'a LanguageSpec,
    cache: BTreeMap<(String, usize, usize), Vec<Term>>,
}

impl<'a> Enumerator<'a> {
    pub fn new(spec: &'a LanguageSpec) -> Self {
        Enumerator { spec, cache: BTreeMap::new() }
    }

    /// Every term of `category` with at most `max_size` nodes, smallest first.
    pub fn up_to(&mut self, category: &str, max_size: usize) -> Vec<Term> {
        (1..=max_size).flat_map(|n| self.exact(category, n, 0)).collect()
    }

    fn bound_name(&self, depth: usize) -> String {
        let base = self
            .spec
            .categories
            .iter()
            .find(|c| c.kind == CategoryKind::Names)
            .map_or("x", |c| c.metavariable.as_str());
        if depth == 0 {
            base.to_string()
        } else {
            format!("{base}{depth}")
        }
    }

    /// Terms of exactly `size` nodes with `depth` enclosing binders.
    fn exact(&mut self, category: &str, size: usize, depth: usize) -> Vec<Term> {
        let key = (category.to_string(), size, depth);
        if let Some(hit) = self.cache.get(&key) {
            return hit.clone();
        }
        let Some(cat) = self.spec.category(category) else { return Vec::new() };
        let out = match cat.kind {
            CategoryKind::Names if size == 1 => (0..depth).map(|d| Term::Var(self.bound_name(d))).collect(),
            CategoryKind::Atoms if size == 1 => vec![Term::constant(&cat.metavariable)],
            CategoryKind::Names | CategoryKind::Atoms => Vec::new(),
            CategoryKind::Syntax => {
                let productions = cat.productions.clone();
                productions.iter().flat_map(|p| self.pattern(p, size, depth)).collect()
            }
        };
        self.cache.insert(key, out.clone());
        out
    }

    fn pattern(&mut self, p: &Term, size: usize, depth: usize) -> Vec<Term> {
        match p {
            Term::Meta(m) => self.exact(&m.category, size, depth),
            Term::Ctor { name, args } if size >= 1 => {
                self.args(args, size - 1, depth).into_iter().map(|a| Term::ctor(name, a)).collect()
            }
            Term::Binder { name, args, .. } if size >= 1 => {
                let bound = self.bound_name(depth);
                self.args(args, size - 1, depth + 1)
                    .into_iter()
                    .map(|a| Term::Binder { name: name.clone(), bound: bound.clone(), args: a })
                    .collect()
            }
            _ => Vec::new(),
        }
    }

    /// Argument vectors whose sizes sum to exactly `size`.
    fn args(&mut self, args: &[Term], size: usize, depth: usize) -> Vec<Vec<Term>> {
        let Some((first, rest)) = args.split_first() else {
            return if size == 0 { vec![Vec::new()] } else { Vec::new() };
        };
        let mut out = Vec::new();
        for n in 1..=size.saturating_sub(rest.len()) {
            let heads = self.pattern(first, n, depth);
            if heads.is_empty() {
                continue;
            }
            for tail in self.args(rest, size - n, depth) {
                for h in &heads {
                    let mut v = Vec::with_capacity(args.len());
                    v.push(h.clone());
                    v.extend(tail.iter().cloned());
                    out.push(v);
                }
            }
        }
        out
    }
}

/// `count` random closed, well-typed expressions of at most `max_size`
/// nodes, reproducible from `seed`. Gives up after a bounded number of
/// attempts, so fewer terms come back for languages where typed terms are
/// rare at that size.
pub fn generate_programs(spec: &LanguageSpec, count: usize, max_size: usize, seed: u64) -> Vec<Term> {
    let generator = TermGenerator::new(spec);
    let Ok(checker) = TypeChecker::new(spec) else { return Vec::new() };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let attempts = count.saturating_mul(1000).max(1000);
    for _ in 0..attempts {
        if out.len() == count {
            break;
        }
        let Some(t) = generator.generate(EXPRESSION, max_size, &mut rng) else { continue };
        if t.is_closed() && checker.infer(&TypeEnv::new(), &t).is_ok() {
            out.push(t);
        }
    }
    out
}

/// Every closed, well-typed expression of at most `max_size` nodes.
pub fn enumerate_programs(spec: &LanguageSpec, max_size: usize) -> Vec<Term> {
    let Ok(checker) = TypeChecker::new(spec) else { return Vec::new() };
    Enumerator::new(spec)
        .up_to(EXPRESSION, max_size)
        .into_iter()
        .filter(|t| t.is_closed() && checker.infer(&TypeEnv::new(), t).is_ok())
        .collect()
}
