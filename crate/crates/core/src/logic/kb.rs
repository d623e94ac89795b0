//! Indexed clause store with host-function builtins.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use super::builtins;
use super::clause::{Clause, Literal};
use super::lexer::SyntaxError;
use super::parser::parse_clauses;
use super::solve::{SolveLimits, Solutions};
use super::term::{Sym, Term};

/// Failure reported by a builtin. Surfaces from `solve` as
/// [`SolveError::Builtin`](super::SolveError::Builtin).
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{0}")]
pub struct BuiltinError(pub String);

/// Host function behind a builtin predicate.
///
/// It receives the call arguments with bindings applied (unbound variables
/// appear as `Term::Var("_G<n>")`) and returns zero or more answers. Each
/// answer is an argument tuple of the same arity that the engine unifies with
/// the call, so a builtin can bind output arguments or simply echo its input
/// to signal success.
pub type BuiltinFn = Arc<dyn Fn(&[Term]) -> Result<Vec<Vec<Term>>, BuiltinError> + Send + Sync>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum KbError {
    #[error("{name}/{arity} is already defined")]
    NameCollision { name: String, arity: usize },
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
}

/// Clause-local term: variables are numbered per clause and renamed apart at
/// resolution time by adding a fresh base offset.
#[derive(Clone, Debug)]
pub(crate) enum CTerm {
    Atom(Sym),
    Int(i64),
    Str(Sym),
    Local(usize),
    Compound(Sym, Box<[CTerm]>),
}

#[derive(Clone, Debug)]
pub(crate) struct CGoal {
    pub negated: bool,
    pub term: CTerm,
}

#[derive(Clone, Debug)]
pub(crate) struct CClause {
    pub head_args: Box<[CTerm]>,
    pub body: Box<[CGoal]>,
    pub nvars: usize,
}

/// Key used for first-argument indexing.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub(crate) enum FirstKey {
    Atom(Sym),
    Int(i64),
    Str(Sym),
    Functor(Sym, usize),
}

#[derive(Default, Debug, Clone)]
pub(crate) struct Bucket {
    pub clauses: Vec<CClause>,
    pub by_first: HashMap<FirstKey, Vec<usize>>,
    pub var_first: Vec<usize>,
}

impl Bucket {
    fn push(&mut self, clause: CClause) {
        let idx = self.clauses.len();
        match clause.head_args.first().and_then(first_key_of) {
            Some(key) => self.by_first.entry(key).or_default().push(idx),
            None => self.var_first.push(idx),
        }
        self.clauses.push(clause);
    }
}

fn first_key_of(t: &CTerm) -> Option<FirstKey> {
    match t {
        CTerm::Atom(a) => Some(FirstKey::Atom(a.clone())),
        CTerm::Int(v) => Some(FirstKey::Int(*v)),
        CTerm::Str(s) => Some(FirstKey::Str(s.clone())),
        CTerm::Compound(f, args) => Some(FirstKey::Functor(f.clone(), args.len())),
        CTerm::Local(_) => None,
    }
}

/// Compiles a public term into clause-local form, numbering variables via
/// `names`. `_` is anonymous: every occurrence is a distinct variable.
pub(crate) fn compile_term(t: &Term, names: &mut Vec<Sym>) -> CTerm {
    match t {
        Term::Atom(a) => CTerm::Atom(a.clone()),
        Term::Int(v) => CTerm::Int(*v),
        Term::Str(s) => CTerm::Str(s.clone()),
        Term::Var(v) => {
            if &**v == "_" {
                names.push(v.clone());
                return CTerm::Local(names.len() - 1);
            }
            match names.iter().position(|n| n == v) {
                Some(i) => CTerm::Local(i),
                None => {
                    names.push(v.clone());
                    CTerm::Local(names.len() - 1)
                }
            }
        }
        Term::Compound(f, args) => CTerm::Compound(
            f.clone(),
            args.iter().map(|a| compile_term(a, names)).collect(),
        ),
    }
}

fn compile_clause(clause: &Clause) -> CClause {
    let mut names = Vec::new();
    let head_args = clause
        .head()
        .args()
        .iter()
        .map(|a| compile_term(a, &mut names))
        .collect();
    let body = clause
        .body()
        .iter()
        .map(|lit| CGoal {
            negated: matches!(lit, Literal::Neg(_)),
            term: compile_term(lit.term(), &mut names),
        })
        .collect();
    CClause {
        head_args,
        body,
        nvars: names.len(),
    }
}

type PredKey = (Sym, usize);

/// A Horn-clause knowledge base.
///
/// Clauses are kept in source order and indexed by `(functor, arity)` and by
/// first argument. Loading appends; a loaded base is only read by `solve`,
/// so an `Arc<KnowledgeBase>` can be queried from many threads at once.
#[derive(Clone, Default)]
pub struct KnowledgeBase {
    source: Vec<Clause>,
    preds: HashMap<PredKey, Bucket>,
    builtins: HashMap<PredKey, BuiltinFn>,
}

impl fmt::Debug for KnowledgeBase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut builtins: Vec<_> = self
            .builtins
            .keys()
            .map(|(n, a)| format!("{n}/{a}"))
            .collect();
        builtins.sort();
        f.debug_struct("KnowledgeBase")
            .field("clauses", &self.source.len())
            .field("builtins", &builtins)
            .finish()
    }
}

impl KnowledgeBase {
    /// An empty base without builtins.
    pub fn new() -> Self {
        Self::default()
    }

    /// An empty base with `regex/3`, `lt/2`, `lte/2` and `eq/2` registered.
    pub fn with_standard_builtins() -> Self {
        let mut kb = Self::new();
        builtins::register_standard(&mut kb).expect("fresh knowledge base has no clauses");
        kb
    }

    /// Appends clauses. Fails without modifying the base when any clause
    /// head names a registered builtin.
    pub fn load<I: IntoIterator<Item = Clause>>(&mut self, clauses: I) -> Result<(), KbError> {
        let clauses: Vec<Clause> = clauses.into_iter().collect();
        for c in &clauses {
            let (name, arity) = c.indicator();
            if self.builtins.contains_key(&(Sym::from(name), arity)) {
                return Err(KbError::NameCollision {
                    name: name.to_string(),
                    arity,
                });
            }
        }
        for c in clauses {
            let (name, arity) = c.indicator();
            self.preds
                .entry((Sym::from(name), arity))
                .or_default()
                .push(compile_clause(&c));
            self.source.push(c);
        }
        Ok(())
    }

    /// Parses clause text and loads it.
    pub fn load_str(&mut self, text: &str) -> Result<(), KbError> {
        let clauses = parse_clauses(text)?;
        self.load(clauses)
    }

    /// Registers a host function for `name/arity`.
    pub fn register_builtin<F>(&mut self, name: &str, arity: usize, f: F) -> Result<(), KbError>
    where
        F: Fn(&[Term]) -> Result<Vec<Vec<Term>>, BuiltinError> + Send + Sync + 'static,
    {
        let key = (Sym::from(name), arity);
        if self.preds.contains_key(&key) || self.builtins.contains_key(&key) {
            return Err(KbError::NameCollision {
                name: name.to_string(),
                arity,
            });
        }
        self.builtins.insert(key, Arc::new(f));
        Ok(())
    }

    pub fn has_builtin(&self, name: &str, arity: usize) -> bool {
        self.builtins.contains_key(&(Sym::from(name), arity))
    }

    /// All loaded clauses in source order.
    pub fn clauses(&self) -> &[Clause] {
        &self.source
    }

    pub fn len(&self) -> usize {
        self.source.len()
    }

    pub fn is_empty(&self) -> bool {
        self.source.is_empty()
    }

    /// Number of facts whose head is `name/arity`.
    pub fn count_facts(&self, name: &str, arity: usize) -> usize {
        self.source
            .iter()
            .filter(|c| c.is_fact() && c.indicator() == (name, arity))
            .count()
    }

    /// Enumerates solutions of `query` by SLD resolution.
    pub fn solve<'kb>(&'kb self, query: &[Literal], limits: SolveLimits) -> Solutions<'kb> {
        Solutions::new(self, query, limits)
    }

    /// Convenience: parse `query` and collect every solution.
    pub fn query_all(
        &self,
        query: &str,
    ) -> Result<Vec<super::Solution>, Box<dyn std::error::Error + Send + Sync>> {
        let goals = super::parser::parse_query(query)?;
        let mut out = Vec::new();
        for s in self.solve(&goals, SolveLimits::default()) {
            out.push(s?);
        }
        Ok(out)
    }

    /// Textual clause dump, one clause per line.
    pub fn to_clause_text(&self) -> String {
        let mut out = String::new();
        for c in &self.source {
            out.push_str(&c.to_string());
            out.push('\n');
        }
        out
    }

    pub(crate) fn bucket(&self, name: &Sym, arity: usize) -> Option<&Bucket> {
        self.preds.get(&(name.clone(), arity))
    }

    pub(crate) fn builtin(&self, name: &Sym, arity: usize) -> Option<&BuiltinFn> {
        self.builtins.get(&(name.clone(), arity))
    }
}
