use std::collections::{BTreeMap, HashMap};

use crate::compiler::CompiledPolicy;
use crate::logic::{Clause, KnowledgeBase, Term};
use crate::route::{Route, Statement, StmtNo};

/// `stmt/1`, `succ/2`, `stmt_kind/2` and `stmt_service/2` facts for a route.
/// Statements are named after their service (`from`, `to`, `bean`) or
/// their kind (`split`, `aggr`, `choice`, ...); a name used twice gets the
/// statement number appended.
#[derive(Debug, Clone)]
pub struct RouteFacts {
    pub clauses: Vec<Clause>,
    pub names: BTreeMap<StmtNo, String>,
}

fn base_name(stmt: &Statement) -> String {
    match stmt {
        Statement::From(s) | Statement::To(s) | Statement::Bean(s) => s.clone(),
        Statement::Aggregate(_) => "aggr".into(),
        other => other.kind().as_str().into(),
    }
}

/// Node name of every statement.
pub fn node_names(route: &Route) -> BTreeMap<StmtNo, String> {
    let mut count: HashMap<String, usize> = HashMap::new();
    for s in route.statements().values() {
        *count.entry(base_name(s)).or_default() += 1;
    }
    route
        .statements()
        .iter()
        .map(|(&n, s)| {
            let base = base_name(s);
            let name = if count[&base] > 1 {
                format!("{base}_{n}")
            } else {
                base
            };
            (n, name)
        })
        .collect()
}

pub fn compile_route_facts(route: &Route) -> RouteFacts {
    let names = node_names(route);
    let node = |n: StmtNo| Term::atom(&names[&n]);
    let mut clauses = Vec::new();
    for &n in route.statements().keys() {
        clauses.push(Clause::fact(Term::compound("stmt", vec![node(n)])));
    }
    for (a, b) in route.edges() {
        clauses.push(Clause::fact(Term::compound("succ", vec![node(a), node(b)])));
    }
    for (&n, s) in route.statements() {
        clauses.push(Clause::fact(Term::compound(
            "stmt_kind",
            vec![node(n), Term::atom(s.kind().as_str())],
        )));
        if let Some(svc) = s.service() {
            clauses.push(Clause::fact(Term::compound(
                "stmt_service",
                vec![node(n), Term::atom(svc)],
            )));
        }
    }
    RouteFacts { clauses, names }
}

/// The policy knowledge base extended with the route's facts.
pub fn route_kb(route: &Route, policy: &CompiledPolicy) -> KnowledgeBase {
    let mut kb = policy.kb().clone();
    kb.load(compile_route_facts(route).clauses)
        .expect("route predicates do not collide with builtins");
    kb
}
