use super::generate::generate_programs;
use super::machine::ck_eval;
use super::smallstep::{eval, EvalError, DEFAULT_FUEL};
use super::typecheck::{TypeChecker, TypeEnv};
use crate::ir::{LanguageSpec, Term};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CompareConfig {
    pub count: usize,
    pub seed: u64,
    pub max_size: usize,
    /// Step budget for the reduction semantics; the machine gets three
    /// times as much since it takes several transitions per reduction.
    pub fuel: usize,
}

impl Default for CompareConfig {
    fn default() -> Self {
        CompareConfig { count: 1000, seed: 0, max_size: 7, fuel: DEFAULT_FUEL }
    }
}

/// A program on which the two semantics disagree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Disagreement {
    pub original: Term,
    /// Smallest disagreeing program found by shrinking `original`.
    pub shrunk: Term,
    pub smallstep: Result<Term, EvalError>,
    pub machine: Result<Term, EvalError>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CompareReport {
    /// Programs run on both semantics.
    pub tested: usize,
    pub disagreement: Option<Disagreement>,
}

/// Both semantics produce alpha-equivalent values, or both fail.
pub fn agree(smallstep: &Result<Term, EvalError>, machine: &Result<Term, EvalError>) -> bool {
    match (smallstep, machine) {
        (Ok(a), Ok(b)) => a.alpha_eq(b),
        (Err(_), Err(_)) => true,
        _ => false,
    }
}

fn run_both(
    source: &LanguageSpec,
    ck: &LanguageSpec,
    term: &Term,
    fuel: usize,
) -> (Result<Term, EvalError>, Result<Term, EvalError>) {
    (eval(term, source, fuel).result, ck_eval(term, ck, fuel.saturating_mul(3)).result)
}

/// Run generated programs of `source` on its reduction semantics and on
/// the machine `ck`, stopping at the first disagreement.
pub fn compare(source: &LanguageSpec, ck: &LanguageSpec, config: &CompareConfig) -> CompareReport {
    let programs = generate_programs(source, config.count, config.max_size, config.seed);
    compare_programs(source, ck, &programs, config.fuel)
}

pub fn compare_programs(source: &LanguageSpec, ck: &LanguageSpec, programs: &[Term], fuel: usize) -> CompareReport {
    for (i, t) in programs.iter().enumerate() {
        let (small, machine) = run_both(source, ck, t, fuel);
        if agree(&small, &machine) {
            continue;
        }
        let checker = TypeChecker::new(source).ok();
        let disagrees = |u: &Term| {
            u.is_closed() && checker.as_ref().is_none_or(|c| c.infer(&TypeEnv::new(), u).is_ok()) && {
                let (a, b) = run_both(source, ck, u, fuel);
                !agree(&a, &b)
            }
        };
        let shrunk = shrink(t, disagrees);
        let (smallstep, machine) = run_both(source, ck, &shrunk, fuel);
        return CompareReport {
            tested: i + 1,
            disagreement: Some(Disagreement { original: t.clone(), shrunk, smallstep, machine }),
        };
    }
    CompareReport { tested: programs.len(), disagreement: None }
}

/// Greedy shrinking: repeatedly replace some subterm by one of its own
/// arguments while `keep` still holds, until no replacement does.
pub fn shrink(term: &Term, keep: impl Fn(&Term) -> bool) -> Term {
    let mut current = term.clone();
    'outer: loop {
        for path in current.positions() {
            let Some(node) = current.at(&path) else { continue };
            for child in node.args() {
                let candidate = current.replace_at(&path, child.clone());
                if candidate.size() < current.size() && keep(&candidate) {
                    current = candidate;
                    continue 'outer;
                }
            }
        }
        return current;
    }
}
