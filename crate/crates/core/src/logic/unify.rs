//! Syntactic unification over public [`Term`]s.
//!
//! The occurs check is disabled, as in conventional Prolog systems. Nothing
//! in this crate builds cyclic terms, so the only cost is that unifying `X`
//! with `f(X)` succeeds and yields a binding that [`resolve`] refuses to
//! expand past a fixed depth.

use std::collections::BTreeMap;

use super::term::{Sym, Term};

/// Triangular substitution: a variable may map to a term that mentions other
/// bound variables. Use [`resolve`] to obtain the fully applied form.
pub type Substitution = BTreeMap<Sym, Term>;

fn walk<'a>(mut t: &'a Term, s: &'a Substitution) -> &'a Term {
    while let Term::Var(v) = t {
        match s.get(v) {
            Some(next) => t = next,
            None => break,
        }
    }
    t
}

/// Returns the most general unifier of `a` and `b` extending `bindings`, or
/// `None` when the terms do not unify.
pub fn unify(a: &Term, b: &Term, bindings: &Substitution) -> Option<Substitution> {
    let mut s = bindings.clone();
    if unify_in_place(a, b, &mut s) {
        Some(s)
    } else {
        None
    }
}

/// Like [`unify`] but mutates `s`. On failure `s` may hold partial bindings.
pub fn unify_in_place(a: &Term, b: &Term, s: &mut Substitution) -> bool {
    let mut stack = vec![(a.clone(), b.clone())];
    while let Some((x, y)) = stack.pop() {
        let x = walk(&x, s).clone();
        let y = walk(&y, s).clone();
        match (&x, &y) {
            (Term::Var(v), Term::Var(w)) if v == w => {}
            (Term::Var(v), _) => {
                s.insert(v.clone(), y);
            }
            (_, Term::Var(w)) => {
                s.insert(w.clone(), x);
            }
            (Term::Atom(p), Term::Atom(q)) | (Term::Str(p), Term::Str(q)) => {
                if p != q {
                    return false;
                }
            }
            (Term::Int(p), Term::Int(q)) => {
                if p != q {
                    return false;
                }
            }
            (Term::Compound(f, xs), Term::Compound(g, ys)) => {
                if f != g || xs.len() != ys.len() {
                    return false;
                }
                stack.extend(xs.iter().cloned().zip(ys.iter().cloned()));
            }
            _ => return false,
        }
    }
    true
}

/// Applies `s` to `t` completely.
pub fn resolve(t: &Term, s: &Substitution) -> Term {
    resolve_depth(t, s, 0)
}

fn resolve_depth(t: &Term, s: &Substitution, depth: usize) -> Term {
    // cyclic bindings can only come from the missing occurs check
    if depth > 1_000 {
        return t.clone();
    }
    match walk(t, s) {
        Term::Compound(f, args) => Term::Compound(
            f.clone(),
            args.iter().map(|a| resolve_depth(a, s, depth + 1)).collect(),
        ),
        other => other.clone(),
    }
}
