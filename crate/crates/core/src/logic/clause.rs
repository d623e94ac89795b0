use std::fmt;

use super::term::Term;

/// A body literal. Builtin calls are ordinary positive literals whose
/// functor/arity is registered as a builtin in the knowledge base.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Literal {
    Pos(Term),
    /// Negation as failure, `\+ goal`. Must be ground when selected.
    Neg(Term),
}

impl Literal {
    pub fn term(&self) -> &Term {
        match self {
            Literal::Pos(t) | Literal::Neg(t) => t,
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Pos(t) => write!(f, "{t}"),
            Literal::Neg(t) => write!(f, "\\+ {t}"),
        }
    }
}

/// A Horn clause `head :- body`. Facts have an empty body.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Clause {
    head: Term,
    body: Vec<Literal>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("clause head must be an atom or compound term, got {0}")]
pub struct BadHead(pub Term);

impl Clause {
    pub fn new(head: Term, body: Vec<Literal>) -> Result<Clause, BadHead> {
        match head {
            Term::Atom(_) | Term::Compound(..) => Ok(Clause { head, body }),
            other => Err(BadHead(other)),
        }
    }

    /// A fact. Panics if `head` is not an atom or compound.
    pub fn fact(head: Term) -> Clause {
        Clause::new(head, Vec::new()).expect("fact head must be callable")
    }

    pub fn head(&self) -> &Term {
        &self.head
    }

    pub fn body(&self) -> &[Literal] {
        &self.body
    }

    pub fn is_fact(&self) -> bool {
        self.body.is_empty()
    }

    /// `(functor, arity)` of the head.
    pub fn indicator(&self) -> (&str, usize) {
        self.head.indicator().expect("clause heads are callable")
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.head)?;
        if !self.body.is_empty() {
            f.write_str(" :- ")?;
            for (i, lit) in self.body.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{lit}")?;
            }
        }
        f.write_str(".")
    }
}
