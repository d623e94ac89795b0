//! First-order terms shared by policies, labels, routes and clauses.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Interned-by-reference symbol name. Cloning is a reference-count bump.
pub type Sym = Arc<str>;

/// A first-order logic term.
///
/// Atom and functor names are never empty and never contain whitespace;
/// compound terms always have at least one argument. Use the constructors
/// ([`Term::atom`], [`Term::compound`], ...) to keep those invariants.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Atom(Sym),
    Var(Sym),
    Int(i64),
    Str(Sym),
    Compound(Sym, Vec<Term>),
}

/// Error returned when a name violates the term invariants.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid name {name:?}: {reason}")]
pub struct NameError {
    pub name: String,
    pub reason: &'static str,
}

fn check_name(name: &str) -> Result<(), NameError> {
    if name.is_empty() {
        return Err(NameError {
            name: name.to_string(),
            reason: "names must not be empty",
        });
    }
    if name.chars().any(char::is_whitespace) {
        return Err(NameError {
            name: name.to_string(),
            reason: "names must not contain whitespace",
        });
    }
    Ok(())
}

impl Term {
    /// Builds an atom. Panics if `name` is empty or contains whitespace.
    pub fn atom(name: &str) -> Term {
        Term::try_atom(name).expect("invalid atom name")
    }

    pub fn try_atom(name: &str) -> Result<Term, NameError> {
        check_name(name)?;
        Ok(Term::Atom(Arc::from(name)))
    }

    /// Builds a variable. Panics if `name` is empty or contains whitespace.
    pub fn var(name: &str) -> Term {
        check_name(name).expect("invalid variable name");
        Term::Var(Arc::from(name))
    }

    pub fn int(value: i64) -> Term {
        Term::Int(value)
    }

    pub fn string(value: &str) -> Term {
        Term::Str(Arc::from(value))
    }

    /// Builds `functor(args...)`. A zero-argument compound is normalized to an
    /// atom, since 0-ary predicates are atoms. Panics on an invalid functor.
    pub fn compound(functor: &str, args: Vec<Term>) -> Term {
        Term::try_compound(functor, args).expect("invalid functor name")
    }

    pub fn try_compound(functor: &str, args: Vec<Term>) -> Result<Term, NameError> {
        check_name(functor)?;
        if args.is_empty() {
            return Ok(Term::Atom(Arc::from(functor)));
        }
        Ok(Term::Compound(Arc::from(functor), args))
    }

    /// Functor name and arity for atoms and compounds.
    pub fn indicator(&self) -> Option<(&str, usize)> {
        match self {
            Term::Atom(name) => Some((name, 0)),
            Term::Compound(name, args) => Some((name, args.len())),
            _ => None,
        }
    }

    pub fn args(&self) -> &[Term] {
        match self {
            Term::Compound(_, args) => args,
            _ => &[],
        }
    }

    pub fn as_atom(&self) -> Option<&str> {
        match self {
            Term::Atom(name) => Some(name),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Term::Int(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Term::Str(s) => Some(s),
            _ => None,
        }
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }

    /// True when the term contains no variables.
    pub fn is_ground(&self) -> bool {
        match self {
            Term::Var(_) => false,
            Term::Compound(_, args) => args.iter().all(Term::is_ground),
            _ => true,
        }
    }

    /// Collects variable names in first-occurrence order, without duplicates.
    pub fn variables(&self) -> Vec<Sym> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    pub(crate) fn collect_vars(&self, out: &mut Vec<Sym>) {
        match self {
            Term::Var(name) => {
                if !out.iter().any(|v| v == name) {
                    out.push(name.clone());
                }
            }
            Term::Compound(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
            _ => {}
        }
    }

    /// Replaces every occurrence of the atom `name` with `with`.
    pub fn replace_atom(&self, name: &str, with: &Term) -> Term {
        match self {
            Term::Atom(a) if &**a == name => with.clone(),
            Term::Compound(f, args) => Term::Compound(
                f.clone(),
                args.iter().map(|a| a.replace_atom(name, with)).collect(),
            ),
            other => other.clone(),
        }
    }
}

/// True when `name` can be printed as a bare (unquoted) atom.
pub fn is_plain_atom(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_lowercase() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

pub(crate) fn write_quoted(f: &mut fmt::Formatter<'_>, s: &str, quote: char) -> fmt::Result {
    use fmt::Write;
    f.write_char(quote)?;
    for c in s.chars() {
        match c {
            '\\' => f.write_str("\\\\")?,
            '\n' => f.write_str("\\n")?,
            '\t' => f.write_str("\\t")?,
            '\r' => f.write_str("\\r")?,
            c if c == quote => {
                f.write_char('\\')?;
                f.write_char(c)?;
            }
            c => f.write_char(c)?,
        }
    }
    f.write_char(quote)
}

fn write_atom(f: &mut fmt::Formatter<'_>, name: &str) -> fmt::Result {
    if is_plain_atom(name) {
        f.write_str(name)
    } else {
        write_quoted(f, name, '\'')
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Atom(name) => write_atom(f, name),
            Term::Var(name) => f.write_str(name),
            Term::Int(v) => write!(f, "{v}"),
            Term::Str(s) => write_quoted(f, s, '"'),
            Term::Compound(functor, args) => {
                write_atom(f, functor)?;
                f.write_str("(")?;
                for (i, arg) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{arg}")?;
                }
                f.write_str(")")
            }
        }
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Serialize for Term {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Term {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Term, D::Error> {
        let text = String::deserialize(deserializer)?;
        super::parse_term(&text).map_err(serde::de::Error::custom)
    }
}
