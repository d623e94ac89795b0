//! SLD resolution with leftmost goal selection and source-order clause
//! selection, exposed as a lazy iterator of solutions.

use std::collections::BTreeMap;
use std::rc::Rc;

use super::clause::Literal;
use super::kb::{compile_term, Bucket, CTerm, FirstKey, KnowledgeBase};
use super::term::{Sym, Term};

/// Resource limits for one `solve` call.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolveLimits {
    /// Maximum resolution depth (length of a derivation branch).
    pub depth: usize,
}

impl Default for SolveLimits {
    fn default() -> Self {
        SolveLimits { depth: 10_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SolveError {
    #[error("resolution depth limit {limit} exceeded")]
    DepthExceeded { limit: usize },
    #[error("negated goal {goal} is not ground")]
    Floundered { goal: Term },
    #[error("goal {goal} is not sufficiently instantiated")]
    Instantiation { goal: Term },
    #[error("goal {goal} is not callable")]
    NotCallable { goal: Term },
    #[error("builtin {name}/{arity} failed: {message}")]
    Builtin {
        name: String,
        arity: usize,
        message: String,
    },
}

/// One answer: query variable name to fully resolved value. Variables left
/// unbound appear as `_G<n>` variables. The anonymous variable `_` is never
/// reported.
pub type Solution = BTreeMap<String, Term>;

/// Runtime term. Compound arguments are reference counted so that walking
/// bindings is cheap.
#[derive(Clone, Debug)]
enum Cell {
    Atom(Sym),
    Int(i64),
    Str(Sym),
    Var(usize),
    Compound(Sym, Rc<[Cell]>),
}

#[derive(Debug)]
enum Goal {
    Call(Cell),
    Not(Cell),
}

#[derive(Debug)]
struct GoalNode {
    goal: Goal,
    depth: usize,
    next: Option<Rc<GoalNode>>,
}

enum Candidates<'kb> {
    All(usize),
    Slice(&'kb [usize]),
    Owned(Vec<usize>),
}

impl Candidates<'_> {
    fn len(&self) -> usize {
        match self {
            Candidates::All(n) => *n,
            Candidates::Slice(s) => s.len(),
            Candidates::Owned(v) => v.len(),
        }
    }

    fn get(&self, i: usize) -> usize {
        match self {
            Candidates::All(_) => i,
            Candidates::Slice(s) => s[i],
            Candidates::Owned(v) => v[i],
        }
    }
}

enum Alternatives<'kb> {
    Clauses {
        bucket: &'kb Bucket,
        candidates: Candidates<'kb>,
        pos: usize,
    },
    Answers {
        answers: Vec<Vec<Cell>>,
        pos: usize,
    },
}

struct ChoicePoint<'kb> {
    node: Rc<GoalNode>,
    args: Rc<[Cell]>,
    trail_len: usize,
    var_top: usize,
    alts: Alternatives<'kb>,
}

#[derive(PartialEq, Eq)]
enum Phase {
    Fresh,
    Running,
    Done,
}

/// Lazy stream of solutions. Each item is either a solution or the error that
/// ended the search; after an error the iterator is exhausted.
pub struct Solutions<'kb> {
    kb: &'kb KnowledgeBase,
    limits: SolveLimits,
    bindings: Vec<Option<Cell>>,
    trail: Vec<usize>,
    goals: Option<Rc<GoalNode>>,
    stack: Vec<ChoicePoint<'kb>>,
    query_vars: Vec<(Sym, usize)>,
    phase: Phase,
}

impl<'kb> Solutions<'kb> {
    pub(crate) fn new(kb: &'kb KnowledgeBase, query: &[Literal], limits: SolveLimits) -> Self {
        Self::with_start_depth(kb, query, limits, 1)
    }

    fn with_start_depth(
        kb: &'kb KnowledgeBase,
        query: &[Literal],
        limits: SolveLimits,
        depth: usize,
    ) -> Self {
        let mut names: Vec<Sym> = Vec::new();
        let compiled: Vec<(bool, CTerm)> = query
            .iter()
            .map(|lit| {
                (
                    matches!(lit, Literal::Neg(_)),
                    compile_term(lit.term(), &mut names),
                )
            })
            .collect();
        let mut s = Solutions {
            kb,
            limits,
            bindings: vec![None; names.len()],
            trail: Vec::new(),
            goals: None,
            stack: Vec::new(),
            query_vars: names
                .iter()
                .enumerate()
                .filter(|(_, n)| &***n != "_")
                .map(|(i, n)| (n.clone(), i))
                .collect(),
            phase: Phase::Fresh,
        };
        let mut goals = None;
        for (negated, t) in compiled.iter().rev() {
            let cell = s.rename(t, 0);
            goals = Some(Rc::new(GoalNode {
                goal: if *negated {
                    Goal::Not(cell)
                } else {
                    Goal::Call(cell)
                },
                depth,
                next: goals,
            }));
        }
        s.goals = goals;
        s
    }

    fn walk(&self, c: &Cell) -> Cell {
        let mut cur = c.clone();
        while let Cell::Var(v) = cur {
            match &self.bindings[v] {
                Some(next) => cur = next.clone(),
                None => break,
            }
        }
        cur
    }

    fn bind(&mut self, var: usize, value: Cell) {
        self.bindings[var] = Some(value);
        self.trail.push(var);
    }

    fn undo(&mut self, trail_len: usize, var_top: usize) {
        while self.trail.len() > trail_len {
            let v = self.trail.pop().expect("trail length checked");
            if v < self.bindings.len() {
                self.bindings[v] = None;
            }
        }
        self.bindings.truncate(var_top);
    }

    fn rename(&self, t: &CTerm, base: usize) -> Cell {
        match t {
            CTerm::Atom(a) => Cell::Atom(a.clone()),
            CTerm::Int(v) => Cell::Int(*v),
            CTerm::Str(s) => Cell::Str(s.clone()),
            CTerm::Local(i) => Cell::Var(base + i),
            CTerm::Compound(f, args) => Cell::Compound(
                f.clone(),
                args.iter().map(|a| self.rename(a, base)).collect(),
            ),
        }
    }

    fn unify(&mut self, a: &Cell, b: &Cell) -> bool {
        let mut work = vec![(a.clone(), b.clone())];
        while let Some((x, y)) = work.pop() {
            let x = self.walk(&x);
            let y = self.walk(&y);
            match (&x, &y) {
                (Cell::Var(i), Cell::Var(j)) if i == j => {}
                (Cell::Var(i), Cell::Var(j)) => {
                    // bind the younger variable to the older one
                    if i > j {
                        self.bind(*i, y.clone());
                    } else {
                        self.bind(*j, x.clone());
                    }
                }
                (Cell::Var(i), _) => self.bind(*i, y.clone()),
                (_, Cell::Var(j)) => self.bind(*j, x.clone()),
                (Cell::Atom(p), Cell::Atom(q)) | (Cell::Str(p), Cell::Str(q)) => {
                    if p != q {
                        return false;
                    }
                }
                (Cell::Int(p), Cell::Int(q)) => {
                    if p != q {
                        return false;
                    }
                }
                (Cell::Compound(f, xs), Cell::Compound(g, ys)) => {
                    if f != g || xs.len() != ys.len() {
                        return false;
                    }
                    work.extend(xs.iter().cloned().zip(ys.iter().cloned()));
                }
                _ => return false,
            }
        }
        true
    }

    /// Unifies a runtime cell with a clause-local head argument whose
    /// variables live at `base..`. Clause subterms are only copied when they
    /// get bound to a runtime variable.
    fn unify_head(&mut self, goal: &Cell, head: &CTerm, base: usize) -> bool {
        match head {
            CTerm::Local(i) => {
                let v = base + i;
                match self.bindings[v].clone() {
                    None => {
                        let g = self.walk(goal);
                        if matches!(g, Cell::Var(j) if j == v) {
                            return true;
                        }
                        self.bind(v, g);
                        true
                    }
                    Some(bound) => self.unify(&bound, goal),
                }
            }
            CTerm::Atom(a) => match self.walk(goal) {
                Cell::Var(x) => {
                    self.bind(x, Cell::Atom(a.clone()));
                    true
                }
                Cell::Atom(b) => *a == b,
                _ => false,
            },
            CTerm::Int(v) => match self.walk(goal) {
                Cell::Var(x) => {
                    self.bind(x, Cell::Int(*v));
                    true
                }
                Cell::Int(w) => *v == w,
                _ => false,
            },
            CTerm::Str(s) => match self.walk(goal) {
                Cell::Var(x) => {
                    self.bind(x, Cell::Str(s.clone()));
                    true
                }
                Cell::Str(t) => *s == t,
                _ => false,
            },
            CTerm::Compound(f, args) => match self.walk(goal) {
                Cell::Var(x) => {
                    let copy = self.rename(head, base);
                    self.bind(x, copy);
                    true
                }
                Cell::Compound(g, gargs) => {
                    if *f != g || gargs.len() != args.len() {
                        return false;
                    }
                    gargs
                        .iter()
                        .zip(args.iter())
                        .all(|(ga, ha)| self.unify_head(ga, ha, base))
                }
                _ => false,
            },
        }
    }

    fn to_term(&self, c: &Cell) -> Term {
        match self.walk(c) {
            Cell::Atom(a) => Term::Atom(a),
            Cell::Int(v) => Term::Int(v),
            Cell::Str(s) => Term::Str(s),
            Cell::Var(i) => Term::Var(Sym::from(format!("_G{i}"))),
            Cell::Compound(f, args) => {
                Term::Compound(f, args.iter().map(|a| self.to_term(a)).collect())
            }
        }
    }

    fn cell_of(&mut self, t: &Term, fresh: &mut Vec<(Sym, usize)>) -> Cell {
        match t {
            Term::Atom(a) => Cell::Atom(a.clone()),
            Term::Int(v) => Cell::Int(*v),
            Term::Str(s) => Cell::Str(s.clone()),
            Term::Var(name) => {
                if let Some(i) = name
                    .strip_prefix("_G")
                    .and_then(|n| n.parse::<usize>().ok())
                    .filter(|i| *i < self.bindings.len())
                {
                    return Cell::Var(i);
                }
                if let Some((_, i)) = fresh.iter().find(|(n, _)| n == name) {
                    return Cell::Var(*i);
                }
                self.bindings.push(None);
                let i = self.bindings.len() - 1;
                fresh.push((name.clone(), i));
                Cell::Var(i)
            }
            Term::Compound(f, args) => {
                let cells: Vec<Cell> = args.iter().map(|a| self.cell_of(a, fresh)).collect();
                Cell::Compound(f.clone(), cells.into())
            }
        }
    }

    fn is_ground(&self, c: &Cell) -> bool {
        match self.walk(c) {
            Cell::Var(_) => false,
            Cell::Compound(_, args) => args.iter().all(|a| self.is_ground(a)),
            _ => true,
        }
    }

    /// Tries the remaining alternatives of the newest choice point, popping
    /// exhausted ones. Returns false when no alternative is left.
    fn backtrack(&mut self) -> bool {
        while let Some(mut cp) = self.stack.pop() {
            self.undo(cp.trail_len, cp.var_top);
            let mut success = None;
            match &mut cp.alts {
                Alternatives::Clauses {
                    bucket,
                    candidates,
                    pos,
                } => {
                    while *pos < candidates.len() {
                        let clause = &bucket.clauses[candidates.get(*pos)];
                        *pos += 1;
                        let base = self.bindings.len();
                        self.bindings.resize(base + clause.nvars, None);
                        let ok = cp
                            .args
                            .iter()
                            .zip(clause.head_args.iter())
                            .all(|(g, h)| self.unify_head(g, h, base));
                        if ok {
                            let mut goals = cp.node.next.clone();
                            for g in clause.body.iter().rev() {
                                let cell = self.rename(&g.term, base);
                                goals = Some(Rc::new(GoalNode {
                                    goal: if g.negated {
                                        Goal::Not(cell)
                                    } else {
                                        Goal::Call(cell)
                                    },
                                    depth: cp.node.depth + 1,
                                    next: goals,
                                }));
                            }
                            success = Some((goals, *pos < candidates.len()));
                            break;
                        }
                        self.undo(cp.trail_len, cp.var_top);
                    }
                }
                Alternatives::Answers { answers, pos } => {
                    while *pos < answers.len() {
                        let answer = std::mem::take(&mut answers[*pos]);
                        *pos += 1;
                        let ok = cp
                            .args
                            .iter()
                            .zip(answer.iter())
                            .all(|(g, a)| self.unify(g, a));
                        if ok {
                            success = Some((cp.node.next.clone(), *pos < answers.len()));
                            break;
                        }
                        self.undo(cp.trail_len, cp.var_top);
                    }
                }
            }
            if let Some((goals, more)) = success {
                self.goals = goals;
                if more {
                    self.stack.push(cp);
                }
                return true;
            }
        }
        false
    }

    /// Runs until the goal list is empty (a solution) or the search space is
    /// exhausted.
    fn advance(&mut self) -> Result<bool, SolveError> {
        loop {
            let Some(node) = self.goals.clone() else {
                return Ok(true);
            };
            if node.depth > self.limits.depth {
                return Err(SolveError::DepthExceeded {
                    limit: self.limits.depth,
                });
            }
            match &node.goal {
                Goal::Call(cell) => {
                    let (name, args): (Sym, Rc<[Cell]>) = match self.walk(cell) {
                        Cell::Atom(a) => (a, Rc::from(Vec::new())),
                        Cell::Compound(f, args) => (f, args),
                        Cell::Var(_) => {
                            return Err(SolveError::Instantiation {
                                goal: self.to_term(cell),
                            })
                        }
                        _ => {
                            return Err(SolveError::NotCallable {
                                goal: self.to_term(cell),
                            })
                        }
                    };
                    let arity = args.len();
                    let alts = if let Some(f) = self.kb.builtin(&name, arity) {
                        let input: Vec<Term> = args.iter().map(|a| self.to_term(a)).collect();
                        let answers = f(&input).map_err(|e| SolveError::Builtin {
                            name: name.to_string(),
                            arity,
                            message: e.0,
                        })?;
                        let mut fresh = Vec::new();
                        let answers = answers
                            .iter()
                            .filter(|a| a.len() == arity)
                            .map(|a| a.iter().map(|t| self.cell_of(t, &mut fresh)).collect())
                            .collect();
                        Some(Alternatives::Answers { answers, pos: 0 })
                    } else if let Some(bucket) = self.kb.bucket(&name, arity) {
                        let candidates = self.candidates(bucket, args.first());
                        Some(Alternatives::Clauses {
                            bucket,
                            candidates,
                            pos: 0,
                        })
                    } else {
                        None
                    };
                    if let Some(alts) = alts {
                        self.stack.push(ChoicePoint {
                            node: node.clone(),
                            args,
                            trail_len: self.trail.len(),
                            var_top: self.bindings.len(),
                            alts,
                        });
                    }
                    if !self.backtrack() {
                        return Ok(false);
                    }
                }
                Goal::Not(cell) => {
                    if !self.is_ground(cell) {
                        return Err(SolveError::Floundered {
                            goal: self.to_term(cell),
                        });
                    }
                    let goal = self.to_term(cell);
                    let mut sub = Solutions::with_start_depth(
                        self.kb,
                        &[Literal::Pos(goal)],
                        self.limits,
                        node.depth,
                    );
                    match sub.next() {
                        Some(Err(e)) => return Err(e),
                        Some(Ok(_)) => {
                            if !self.backtrack() {
                                return Ok(false);
                            }
                        }
                        None => self.goals = node.next.clone(),
                    }
                }
            }
        }
    }

    fn candidates(&self, bucket: &'kb Bucket, first: Option<&Cell>) -> Candidates<'kb> {
        let key = first.and_then(|c| match self.walk(c) {
            Cell::Atom(a) => Some(FirstKey::Atom(a)),
            Cell::Int(v) => Some(FirstKey::Int(v)),
            Cell::Str(s) => Some(FirstKey::Str(s)),
            Cell::Compound(f, args) => Some(FirstKey::Functor(f, args.len())),
            Cell::Var(_) => None,
        });
        let Some(key) = key else {
            return Candidates::All(bucket.clauses.len());
        };
        let indexed: &'kb [usize] = bucket.by_first.get(&key).map_or(&[], Vec::as_slice);
        if bucket.var_first.is_empty() {
            return Candidates::Slice(indexed);
        }
        // merge two ascending lists to keep source order
        let mut merged = Vec::with_capacity(indexed.len() + bucket.var_first.len());
        let (mut i, mut j) = (0, 0);
        while i < indexed.len() || j < bucket.var_first.len() {
            let take_indexed = j >= bucket.var_first.len()
                || (i < indexed.len() && indexed[i] < bucket.var_first[j]);
            if take_indexed {
                merged.push(indexed[i]);
                i += 1;
            } else {
                merged.push(bucket.var_first[j]);
                j += 1;
            }
        }
        Candidates::Owned(merged)
    }

    fn extract(&self) -> Solution {
        self.query_vars
            .iter()
            .map(|(name, i)| (name.to_string(), self.to_term(&Cell::Var(*i))))
            .collect()
    }
}

impl Iterator for Solutions<'_> {
    type Item = Result<Solution, SolveError>;

    fn next(&mut self) -> Option<Self::Item> {
        let found = match self.phase {
            Phase::Done => return None,
            Phase::Fresh => {
                self.phase = Phase::Running;
                self.advance()
            }
            Phase::Running => {
                if self.backtrack() {
                    self.advance()
                } else {
                    Ok(false)
                }
            }
        };
        match found {
            Ok(true) => Some(Ok(self.extract())),
            Ok(false) => {
                self.phase = Phase::Done;
                None
            }
            Err(e) => {
                self.phase = Phase::Done;
                Some(Err(e))
            }
        }
    }
}
