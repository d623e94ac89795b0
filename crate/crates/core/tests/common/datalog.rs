//! Random non-recursive (plus acyclic-graph reachability) Datalog programs
//! and a bottom-up fixpoint oracle.

use std::collections::{BTreeMap, BTreeSet};

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::Rng;

pub const CONSTS: [&str; 4] = ["a", "b", "c", "d"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Arg {
    Const(String),
    Var(String),
}

#[derive(Debug, Clone)]
pub struct Atom {
    pub pred: String,
    pub args: Vec<Arg>,
}

#[derive(Debug, Clone)]
pub struct Rule {
    pub head: Atom,
    /// (negated, atom)
    pub body: Vec<(bool, Atom)>,
}

#[derive(Debug, Clone)]
pub struct Program {
    pub facts: Vec<(String, Vec<String>)>,
    pub rules: Vec<Rule>,
    /// Predicates in dependency order with their arity.
    pub preds: Vec<(String, usize)>,
}

fn fmt_arg(a: &Arg) -> String {
    match a {
        Arg::Const(c) | Arg::Var(c) => c.clone(),
    }
}

fn fmt_atom(a: &Atom) -> String {
    let args: Vec<String> = a.args.iter().map(fmt_arg).collect();
    format!("{}({})", a.pred, args.join(","))
}

impl Program {
    pub fn text(&self) -> String {
        let mut out = String::new();
        for (p, args) in &self.facts {
            out.push_str(&format!("{p}({}).\n", args.join(",")));
        }
        for r in &self.rules {
            let body: Vec<String> = r
                .body
                .iter()
                .map(|(neg, a)| format!("{}{}", if *neg { "\\+ " } else { "" }, fmt_atom(a)))
                .collect();
            out.push_str(&format!("{} :- {}.\n", fmt_atom(&r.head), body.join(", ")));
        }
        out
    }
}

const VARS: [&str; 3] = ["X", "Y", "Z"];

fn arg(rng: &mut StdRng, vars: &[&str]) -> Arg {
    if rng.gen_bool(0.8) {
        Arg::Var(vars.choose(rng).unwrap().to_string())
    } else {
        Arg::Const(CONSTS.choose(rng).unwrap().to_string())
    }
}

pub fn random_program(rng: &mut StdRng) -> Program {
    let mut preds: Vec<(String, usize)> = vec![("e".into(), 2), ("f".into(), 2), ("p".into(), 1)];
    let mut facts = Vec::new();
    for _ in 0..rng.gen_range(0..8) {
        let x = CONSTS.choose(rng).unwrap().to_string();
        let y = CONSTS.choose(rng).unwrap().to_string();
        facts.push(("e".to_string(), vec![x, y]));
    }
    // f is a DAG over the constants' order, so reachability terminates
    for _ in 0..rng.gen_range(0..6) {
        let i = rng.gen_range(0..CONSTS.len() - 1);
        let j = rng.gen_range(i + 1..CONSTS.len());
        facts.push(("f".to_string(), vec![CONSTS[i].into(), CONSTS[j].into()]));
    }
    for _ in 0..rng.gen_range(0..4) {
        facts.push(("p".to_string(), vec![CONSTS.choose(rng).unwrap().to_string()]));
    }

    let mut rules = Vec::new();
    if rng.gen_bool(0.5) {
        let v = |s: &str| Arg::Var(s.into());
        preds.push(("reach".into(), 2));
        rules.push(Rule {
            head: Atom { pred: "reach".into(), args: vec![v("X"), v("Y")] },
            body: vec![(false, Atom { pred: "f".into(), args: vec![v("X"), v("Y")] })],
        });
        rules.push(Rule {
            head: Atom { pred: "reach".into(), args: vec![v("X"), v("Y")] },
            body: vec![
                (false, Atom { pred: "f".into(), args: vec![v("X"), v("Z")] }),
                (false, Atom { pred: "reach".into(), args: vec![v("Z"), v("Y")] }),
            ],
        });
    }

    let mut plain_rules = 0;
    for k in 0..rng.gen_range(1..=3) {
        let name = format!("i{k}");
        let arity = rng.gen_range(1..=2);
        let lower = preds.clone();
        for _ in 0..rng.gen_range(1..=2) {
            if plain_rules == 5 {
                break;
            }
            let mut body = Vec::new();
            let mut bound: Vec<String> = Vec::new();
            for _ in 0..rng.gen_range(1..=2) {
                let (p, n) = lower.choose(rng).unwrap().clone();
                let args: Vec<Arg> = (0..n).map(|_| arg(rng, &VARS)).collect();
                for a in &args {
                    if let Arg::Var(v) = a {
                        if !bound.contains(v) {
                            bound.push(v.clone());
                        }
                    }
                }
                body.push((false, Atom { pred: p, args }));
            }
            if bound.is_empty() {
                continue;
            }
            let bound_refs: Vec<&str> = bound.iter().map(String::as_str).collect();
            if rng.gen_bool(0.4) {
                // negation over a lower predicate, only on bound variables
                let (p, n) = lower.choose(rng).unwrap().clone();
                let args = (0..n).map(|_| arg(rng, &bound_refs)).collect();
                body.push((true, Atom { pred: p, args }));
            }
            let head_args = (0..arity)
                .map(|_| Arg::Var(bound_refs.choose(rng).unwrap().to_string()))
                .collect();
            rules.push(Rule {
                head: Atom { pred: name.clone(), args: head_args },
                body,
            });
            plain_rules += 1;
        }
        preds.push((name, arity));
    }
    Program { facts, rules, preds }
}

pub type Relation = BTreeSet<Vec<String>>;

fn matches(atom: &Atom, tuple: &[String], env: &BTreeMap<String, String>) -> Option<BTreeMap<String, String>> {
    let mut env = env.clone();
    for (a, v) in atom.args.iter().zip(tuple) {
        match a {
            Arg::Const(c) => {
                if c != v {
                    return None;
                }
            }
            Arg::Var(x) => match env.get(x) {
                Some(bound) if bound != v => return None,
                Some(_) => {}
                None => {
                    env.insert(x.clone(), v.clone());
                }
            },
        }
    }
    Some(env)
}

fn ground(atom: &Atom, env: &BTreeMap<String, String>) -> Vec<String> {
    atom.args
        .iter()
        .map(|a| match a {
            Arg::Const(c) => c.clone(),
            Arg::Var(x) => env[x].clone(),
        })
        .collect()
}

/// Least model, computed bottom-up predicate by predicate in dependency
/// order, each to its own fixpoint.
pub fn fixpoint(prog: &Program) -> BTreeMap<String, Relation> {
    let mut db: BTreeMap<String, Relation> = BTreeMap::new();
    for (p, _) in &prog.preds {
        db.insert(p.clone(), Relation::new());
    }
    for (p, args) in &prog.facts {
        db.get_mut(p).unwrap().insert(args.clone());
    }
    for (p, _) in &prog.preds {
        loop {
            let mut added = false;
            for r in prog.rules.iter().filter(|r| &r.head.pred == p) {
                let mut envs = vec![BTreeMap::new()];
                for (neg, atom) in &r.body {
                    let rel = &db[&atom.pred];
                    if *neg {
                        envs.retain(|env| !rel.contains(&ground(atom, env)));
                    } else {
                        envs = envs
                            .iter()
                            .flat_map(|env| rel.iter().filter_map(|t| matches(atom, t, env)))
                            .collect();
                    }
                }
                for env in envs {
                    added |= db.get_mut(p).unwrap().insert(ground(&r.head, &env));
                }
            }
            if !added {
                break;
            }
        }
    }
    db
}
