//! Expression evaluation for choices and property assignments.
//!
//! A choice condition is a goal proved against `env_prop(K, V)` facts for Δ
//! and `msg_prop(K, V)` facts for the message, with the standard builtins.
//! `and(G1, ..., Gn)` is a conjunction, `not(G)` negation as failure,
//! `true` the empty conjunction.

use crate::logic::{Clause, KnowledgeBase, Literal, SolveLimits, Term};

use super::{Env, Props};

fn to_literals(cond: &Term, negated: bool, out: &mut Vec<Literal>) -> Result<(), String> {
    match cond {
        Term::Atom(a) if &**a == "true" && !negated => Ok(()),
        Term::Compound(f, args) if &**f == "and" && !negated => {
            for a in args {
                to_literals(a, false, out)?;
            }
            Ok(())
        }
        Term::Compound(f, args) if &**f == "not" && args.len() == 1 && !negated => {
            to_literals(&args[0], true, out)
        }
        Term::Atom(_) | Term::Compound(..) => {
            out.push(if negated {
                Literal::Neg(cond.clone())
            } else {
                Literal::Pos(cond.clone())
            });
            Ok(())
        }
        other => Err(format!("condition {other} is not a goal")),
    }
}

/// Whether `cond` is provable against Δ and μ_m.
pub fn eval_condition(cond: &Term, env: &Env, props: &Props, depth: usize) -> Result<bool, String> {
    let mut goals = Vec::new();
    to_literals(cond, false, &mut goals)?;
    let mut kb = KnowledgeBase::with_standard_builtins();
    let facts = env
        .iter()
        .map(|(k, v)| ("env_prop", k, v))
        .chain(props.iter().map(|(k, v)| ("msg_prop", k, v)))
        .map(|(p, k, v)| Clause::fact(Term::compound(p, vec![Term::atom(k), v.clone()])));
    kb.load(facts).map_err(|e| e.to_string())?;
    match kb.solve(&goals, SolveLimits { depth }).next() {
        None => Ok(false),
        Some(Ok(_)) => Ok(true),
        Some(Err(e)) => Err(format!("cannot evaluate {cond}: {e}")),
    }
}

/// Value of an assignment right-hand side: `msg(K)`, `env(K)` or a ground
/// literal.
pub fn eval_value(expr: &Term, env: &Env, props: &Props) -> Result<Term, String> {
    if let Term::Compound(f, args) = expr {
        if args.len() == 1 && (&**f == "msg" || &**f == "env") {
            let key = args[0]
                .as_atom()
                .ok_or_else(|| format!("{expr}: property names are atoms"))?;
            let (scope, map) = if &**f == "msg" {
                ("message", props)
            } else {
                ("environment", env)
            };
            return map
                .get(key)
                .cloned()
                .ok_or_else(|| format!("{scope} property {key} is not set"));
        }
    }
    if expr.is_ground() {
        Ok(expr.clone())
    } else {
        Err(format!("{expr} is not ground"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::parse_term;

    fn t(s: &str) -> Term {
        parse_term(s).unwrap()
    }

    #[test]
    fn conditions() {
        let env: Env = [("tainted".to_string(), t("true"))].into();
        let props: Props = [("tmp".to_string(), t("1"))].into();
        let d = 100;
        assert!(eval_condition(&t("env_prop(tainted,true)"), &env, &props, d).unwrap());
        assert!(!eval_condition(&t("not(msg_prop(tmp,1))"), &env, &props, d).unwrap());
        assert!(eval_condition(&t("and(msg_prop(tmp,X),lt(X,2))"), &env, &props, d).unwrap());
        assert!(eval_condition(&t("true"), &env, &props, d).unwrap());
        assert!(!eval_condition(&t("false"), &env, &props, d).unwrap());
        assert!(eval_condition(&t("not(msg_prop(tmp,X))"), &env, &props, d).is_err());
        assert!(eval_condition(&t("3"), &env, &props, d).is_err());
    }

    #[test]
    fn values() {
        let env: Env = [("a".to_string(), t("1"))].into();
        let props: Props = [("b".to_string(), t("x"))].into();
        assert_eq!(eval_value(&t("env(a)"), &env, &props).unwrap(), t("1"));
        assert_eq!(eval_value(&t("msg(b)"), &env, &props).unwrap(), t("x"));
        assert_eq!(eval_value(&t("f(2)"), &env, &props).unwrap(), t("f(2)"));
        assert!(eval_value(&t("msg(zz)"), &env, &props).is_err());
        assert!(eval_value(&t("f(X)"), &env, &props).is_err());
    }
}
