//! Static verification of routes against policies.

mod explore;
mod facts;
mod render;

pub use facts::{compile_route_facts, node_names, route_kb, RouteFacts};
pub use render::{render_counterexample, render_verdict};

use serde::Serialize;

use crate::bindings::bind_route;
use crate::compiler::CompiledPolicy;
use crate::labels::LabelSet;
use crate::logic::Term;
use crate::policy::Effect;
use crate::route::{split_joins, Route, StmtKind, StmtNo};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceStep {
    pub statement: StmtNo,
    pub node: String,
    pub kind: StmtKind,
    /// Labels on arrival; for the `from` step, the labels created.
    pub labels: LabelSet,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Counterexample {
    /// `None` when the default decision refuses the message.
    pub rule: Option<String>,
    pub effect: Effect,
    /// The rule's target service, or the route service when the default
    /// decision refused the message.
    pub service: String,
    /// Service named by the violating statement.
    pub route_service: String,
    pub statement: StmtNo,
    /// Trigger labels of `rule` as matched.
    pub offending_labels: Vec<Term>,
    pub arrival_labels: LabelSet,
    pub trace: Vec<TraceStep>,
    /// Choice outcomes in execution order; replaying them with
    /// `ChoiceMode::Script` reproduces the violation.
    pub choices: Vec<(StmtNo, bool)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", content = "counterexamples", rename_all = "lowercase")]
pub enum Verdict {
    Valid,
    Invalid(Vec<Counterexample>),
}

impl Verdict {
    pub fn is_valid(&self) -> bool {
        matches!(self, Verdict::Valid)
    }

    pub fn counterexamples(&self) -> &[Counterexample] {
        match self {
            Verdict::Valid => &[],
            Verdict::Invalid(c) => c,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct VerifyStats {
    /// Distinct (statement, labels, enclosing join) states explored.
    pub states: usize,
    pub statements: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VerifyOptions {
    pub default_effect: Effect,
    /// Report every violating path instead of one per
    /// (rule, statement, offending labels).
    pub all_paths: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            default_effect: Effect::Allow,
            all_paths: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VerifyReport {
    pub route: String,
    #[serde(flatten)]
    pub verdict: Verdict,
    pub warnings: Vec<String>,
    pub stats: VerifyStats,
}

/// Checks every path of `route` against `policy`.
pub fn verify(route: &Route, policy: &CompiledPolicy) -> Verdict {
    verify_with(route, policy, VerifyOptions::default()).verdict
}

pub fn verify_with(route: &Route, policy: &CompiledPolicy, opts: VerifyOptions) -> VerifyReport {
    let (bindings, warnings) = bind_route(route, policy);
    let joins = split_joins(route);
    let names = node_names(route);
    let mut ex = explore::Explorer::new(
        route,
        policy,
        &bindings,
        &joins,
        &names,
        opts.default_effect,
        opts.all_paths,
    );
    let ces = ex.run();
    VerifyReport {
        route: route.name().to_string(),
        verdict: if ces.is_empty() {
            Verdict::Valid
        } else {
            Verdict::Invalid(ces)
        },
        warnings,
        stats: VerifyStats {
            states: ex.states(),
            statements: route.len(),
        },
    }
}
