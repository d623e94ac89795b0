//! Policy to Horn-clause compilation.
//!
//! For every service `S` the knowledge base holds `service(S)`,
//! `has_endpoint(S, "re")`, and one `has_property`, `has_capability`,
//! `creates_label`, `removes_label` fact per list entry. For every rule `R`
//! with decision node `dec_R`: `rule(R)`, `has_target(R, S)`,
//! `receives_label(R, L)` per trigger, `has_decision(R, dec_R)`,
//! `has_effect(dec_R, E)`, `has_obligation(dec_R, A)` per obligation and
//! `has_otherwise(dec_R, A, E)` for its fallback effect.

use std::collections::HashMap;

use regex::Regex;

use crate::labels::LabelTransform;
use crate::logic::{full_match_regex, Clause, KnowledgeBase, Term};
use crate::policy::{Decision, FlowRule, PolicyAst, ServiceDecl};

#[derive(Debug, Clone)]
pub struct CompiledService {
    pub decl: ServiceDecl,
    regex: Regex,
}

impl CompiledService {
    /// A service applies to a target given either by its id or by a URL
    /// matching its endpoint regex in full.
    pub fn matches(&self, target: &str) -> bool {
        self.decl.id == target || self.regex.is_match(target)
    }

    pub fn endpoint_matches(&self, url: &str) -> bool {
        self.regex.is_match(url)
    }

    pub fn transform(&self) -> LabelTransform {
        LabelTransform {
            removes: self.decl.removes_labels.clone(),
            creates: self.decl.creates_labels.clone(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CompiledRule {
    pub name: String,
    pub target: usize,
    pub triggers: Vec<Term>,
    pub decision: Decision,
}

/// Compiled form of a policy: the knowledge base plus indexes used to
/// assemble decisions without re-parsing.
#[derive(Debug, Clone)]
pub struct CompiledPolicy {
    ast: PolicyAst,
    kb: KnowledgeBase,
    services: Vec<CompiledService>,
    service_index: HashMap<String, usize>,
    rules: Vec<CompiledRule>,
    rule_index: HashMap<String, usize>,
}

pub fn decision_node(rule: &str) -> Term {
    Term::atom(&format!("dec_{rule}"))
}

fn fact(functor: &str, args: Vec<Term>) -> Clause {
    Clause::fact(Term::compound(functor, args))
}

fn service_facts(s: &ServiceDecl, out: &mut Vec<Clause>) {
    let id = Term::atom(&s.id);
    out.push(fact("service", vec![id.clone()]));
    out.push(fact(
        "has_endpoint",
        vec![id.clone(), Term::string(&s.endpoint)],
    ));
    let lists = [
        ("has_property", &s.properties),
        ("has_capability", &s.capabilities),
        ("creates_label", &s.creates_labels),
        ("removes_label", &s.removes_labels),
    ];
    for (functor, terms) in lists {
        for t in terms {
            out.push(fact(functor, vec![id.clone(), t.clone()]));
        }
    }
}

fn rule_facts(r: &FlowRule, out: &mut Vec<Clause>) {
    let name = Term::atom(&r.name);
    let dec = decision_node(&r.name);
    out.push(fact("rule", vec![name.clone()]));
    out.push(fact("has_target", vec![name.clone(), Term::atom(&r.target)]));
    for l in &r.trigger_labels {
        out.push(fact("receives_label", vec![name.clone(), l.clone()]));
    }
    out.push(fact("has_decision", vec![name, dec.clone()]));
    out.push(fact(
        "has_effect",
        vec![dec.clone(), Term::atom(r.decision.effect.as_str())],
    ));
    for o in &r.decision.obligations {
        out.push(fact("has_obligation", vec![dec.clone(), o.action.clone()]));
    }
    for o in &r.decision.obligations {
        out.push(fact(
            "has_otherwise",
            vec![
                dec.clone(),
                o.action.clone(),
                Term::atom(o.otherwise.as_str()),
            ],
        ));
    }
}

/// The clauses of `ast` in emission order: services, then rules.
pub fn policy_clauses(ast: &PolicyAst) -> Vec<Clause> {
    let mut out = Vec::new();
    for s in &ast.services {
        service_facts(s, &mut out);
    }
    for r in &ast.rules {
        rule_facts(r, &mut out);
    }
    out
}

/// Compiles a validated AST. Panics only if the AST violates the invariants
/// `parse_policy` enforces (unknown rule target, invalid regex).
pub fn compile(ast: &PolicyAst) -> CompiledPolicy {
    let mut kb = KnowledgeBase::with_standard_builtins();
    kb.load(policy_clauses(ast))
        .expect("policy predicates do not collide with builtins");
    let services: Vec<CompiledService> = ast
        .services
        .iter()
        .map(|d| CompiledService {
            regex: full_match_regex(&d.endpoint).expect("endpoint regex validated by parser"),
            decl: d.clone(),
        })
        .collect();
    let service_index: HashMap<String, usize> = services
        .iter()
        .enumerate()
        .map(|(i, s)| (s.decl.id.clone(), i))
        .collect();
    let rules: Vec<CompiledRule> = ast
        .rules
        .iter()
        .map(|r| CompiledRule {
            name: r.name.clone(),
            target: *service_index
                .get(&r.target)
                .unwrap_or_else(|| panic!("rule {} targets unknown service", r.name)),
            triggers: r.trigger_labels.clone(),
            decision: r.decision.clone(),
        })
        .collect();
    let rule_index = rules
        .iter()
        .enumerate()
        .map(|(i, r)| (r.name.clone(), i))
        .collect();
    CompiledPolicy {
        ast: ast.clone(),
        kb,
        services,
        service_index,
        rules,
        rule_index,
    }
}

impl CompiledPolicy {
    pub fn ast(&self) -> &PolicyAst {
        &self.ast
    }

    pub fn kb(&self) -> &KnowledgeBase {
        &self.kb
    }

    pub fn services(&self) -> &[CompiledService] {
        &self.services
    }

    pub fn rules(&self) -> &[CompiledRule] {
        &self.rules
    }

    pub fn service(&self, id: &str) -> Option<&CompiledService> {
        self.service_index.get(id).map(|&i| &self.services[i])
    }

    pub fn rule(&self, name: &str) -> Option<&CompiledRule> {
        self.rule_index.get(name).map(|&i| &self.rules[i])
    }

    pub fn target_service(&self, rule: &CompiledRule) -> &CompiledService {
        &self.services[rule.target]
    }

    /// Services whose endpoint regex matches all of `url`, in declaration
    /// order.
    pub fn match_services(&self, url: &str) -> Vec<&str> {
        self.services
            .iter()
            .filter(|s| s.endpoint_matches(url))
            .map(|s| s.decl.id.as_str())
            .collect()
    }

    /// Union of ℒ± over services matching `target` (by id or endpoint).
    /// `None` when no service matches.
    pub fn transform_for(&self, target: &str) -> Option<LabelTransform> {
        let mut found = None::<LabelTransform>;
        for s in self.services.iter().filter(|s| s.matches(target)) {
            found.get_or_insert_with(LabelTransform::default).merge(&s.transform());
        }
        found
    }

    /// Clause dump for `--emit-clauses`.
    pub fn to_clause_text(&self) -> String {
        self.kb.to_clause_text()
    }
}
