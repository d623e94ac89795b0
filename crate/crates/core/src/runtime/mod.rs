//! Route interpreter with dynamic taint tracking.
//!
//! Labels follow the message: `from` assigns ℒ⁺ of the source, `to` and
//! `bean` consult the PDP and then apply `τ \ ℒ⁻ ∪ ℒ⁺` of the service,
//! `split` copies the labels to every branch and `aggregate` unions them.
//! Property assignments never touch labels.

mod demo;
mod eval;
mod machine;
mod registry;

pub use demo::{
    implicit_leak_route, ingest_route, leak_demo_policy, leak_demo_services, run_implicit_leak,
    taint_permissiveness_demo, LeakDemo,
};
pub use eval::{eval_condition, eval_value};
pub use machine::Machine;
pub use registry::{Action, Handler, ObligationRegistry, Props, ServiceRegistry};

use std::collections::BTreeMap;

use serde::{Serialize, Serializer};

use crate::compiler::CompiledPolicy;
use crate::labels::LabelSet;
use crate::logic::Term;
use crate::policy::Effect;
use crate::route::{Route, StmtKind, StmtNo};

pub type MessageId = u64;

/// Global variables Δ. Owned by the caller so it can outlive one run.
pub type Env = BTreeMap<String, Term>;

fn lossy<S: Serializer>(bytes: &[u8], s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&String::from_utf8_lossy(bytes))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Message {
    pub id: MessageId,
    #[serde(serialize_with = "lossy")]
    pub payload: Vec<u8>,
    /// μ_m
    pub props: Props,
    /// τ[m]
    pub labels: LabelSet,
}

impl Message {
    /// The term obligations see in place of `message`.
    pub fn handle(&self) -> Term {
        Term::atom(&format!("m{}", self.id))
    }
}

/// External trigger consumed by the route's `from`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Input {
    pub payload: Vec<u8>,
    pub props: Props,
}

/// How choice conditions are decided.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub enum ChoiceMode {
    /// Prove the condition.
    #[default]
    Evaluate,
    /// Take outcomes from the list in execution order; `false` once it runs
    /// out. Used to replay counterexamples and to enumerate all branches.
    Script(Vec<bool>),
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    /// Effect when no rule matches.
    pub default_effect: Effect,
    /// Resolution depth for choice conditions.
    pub depth_limit: usize,
    pub choices: ChoiceMode,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            default_effect: Effect::Allow,
            depth_limit: 10_000,
            choices: ChoiceMode::Evaluate,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Completed,
    Dropped,
    Errored,
}

/// One executed statement.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AuditEvent {
    pub seq: usize,
    pub statement: StmtNo,
    pub kind: StmtKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub service: Option<String>,
    pub message: Option<MessageId>,
    pub labels_before: Option<LabelSet>,
    pub labels_after: Option<LabelSet>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decision: Option<Effect>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rule: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

/// A message refused entry to a service.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub statement: StmtNo,
    pub service: String,
    pub effect: Effect,
    pub rule: Option<String>,
    /// Labels on arrival.
    pub labels: LabelSet,
    /// Instantiated trigger labels of `rule`.
    pub offending: Vec<Term>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunOutcome {
    pub route: String,
    pub status: RunStatus,
    /// Statement of the first drop, or of the error.
    pub at_statement: Option<StmtNo>,
    pub rule: Option<String>,
    pub reason: Option<String>,
    pub final_messages: Vec<Message>,
    #[serde(skip)]
    pub audit: Vec<AuditEvent>,
    pub pdp_calls: usize,
    /// Choice outcomes in execution order.
    pub choices: Vec<(StmtNo, bool)>,
    pub violations: Vec<Violation>,
    pub warnings: Vec<String>,
}

impl RunOutcome {
    /// Audit log as line-delimited JSON.
    pub fn audit_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.audit {
            out.push_str(&serde_json::to_string(e).expect("audit events serialize"));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RuntimeError {
    #[error("no handler registered for service {0}")]
    MissingHandler(String),
}

/// Shared, read-only pieces of an execution.
#[derive(Debug, Clone)]
pub struct Engine<'a> {
    pub policy: &'a CompiledPolicy,
    pub services: &'a ServiceRegistry,
    pub obligations: &'a ObligationRegistry,
    pub config: RunConfig,
}

impl<'a> Engine<'a> {
    pub fn new(
        policy: &'a CompiledPolicy,
        services: &'a ServiceRegistry,
        obligations: &'a ObligationRegistry,
    ) -> Self {
        Engine {
            policy,
            services,
            obligations,
            config: RunConfig::default(),
        }
    }

    pub fn with_config(mut self, config: RunConfig) -> Self {
        self.config = config;
        self
    }

    /// A machine positioned before the entry statement.
    pub fn machine<'r>(
        &'r self,
        route: &'r Route,
        input: Input,
        env: &'r mut Env,
    ) -> Result<Machine<'r>, RuntimeError> {
        Machine::new(self, route, input, env)
    }

    /// Runs `route` to completion.
    pub fn execute(&self, route: &Route, input: Input, env: &mut Env) -> Result<RunOutcome, RuntimeError> {
        let mut m = self.machine(route, input, env)?;
        while m.step() {}
        Ok(m.into_outcome())
    }
}

/// Runs `route` once with fresh Δ.
pub fn execute(
    route: &Route,
    policy: &CompiledPolicy,
    services: &ServiceRegistry,
    obligations: &ObligationRegistry,
    input: Input,
) -> Result<RunOutcome, RuntimeError> {
    let mut env = Env::new();
    Engine::new(policy, services, obligations).execute(route, input, &mut env)
}
