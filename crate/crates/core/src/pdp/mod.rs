//! Policy decision point.

mod alloc;
mod bench;

pub use alloc::{measure_peak, CountingAllocator};
pub use bench::{bench_decide, format_csv, linear_fit, worst_case_policy, BenchConfig, BenchRow, LinearFit};

use serde::Serialize;

use crate::compiler::CompiledPolicy;
use crate::labels::LabelSet;
use crate::logic::{resolve, Term};
use crate::policy::Effect;

/// The decision question: may a message with `labels` enter `target`
/// (an endpoint URL or a service id)?
#[derive(Debug, Clone)]
pub struct DecisionRequest<'a> {
    pub target: &'a str,
    pub labels: &'a LabelSet,
    /// Replaces the atom `message` in obligation actions.
    pub message_ref: Option<Term>,
}

impl<'a> DecisionRequest<'a> {
    pub fn new(target: &'a str, labels: &'a LabelSet) -> Self {
        DecisionRequest {
            target,
            labels,
            message_ref: None,
        }
    }

    pub fn with_message(mut self, message: Term) -> Self {
        self.message_ref = Some(message);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BoundObligation {
    pub action: Term,
    pub otherwise: Effect,
    /// Rule that contributed the obligation.
    pub rule: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RuleMatch {
    pub name: String,
    pub effect: Effect,
    /// Trigger labels instantiated against the request labels.
    pub labels: Vec<Term>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DecisionResult {
    pub effect: Effect,
    pub obligations: Vec<BoundObligation>,
    pub matched: Vec<RuleMatch>,
}

impl DecisionResult {
    pub fn matched_rules(&self) -> Vec<&str> {
        self.matched.iter().map(|m| m.name.as_str()).collect()
    }

    /// Name of the first matched rule carrying the final effect.
    pub fn deciding_rule(&self) -> Option<&str> {
        self.matched
            .iter()
            .find(|m| m.effect == self.effect)
            .map(|m| m.name.as_str())
    }
}

/// Decides with the default effect `allow`.
pub fn decide(policy: &CompiledPolicy, req: &DecisionRequest<'_>) -> DecisionResult {
    decide_with_default(policy, req, Effect::Allow)
}

/// A rule matches when its target service matches `req.target` (id or full
/// regex match) and all its trigger labels are members of `req.labels`,
/// up to unification with shared variables. The effect is the most
/// restrictive matched effect (`error > drop > allow`), or `default` when
/// nothing matched. Obligations are concatenated in rule order.
pub fn decide_with_default(
    policy: &CompiledPolicy,
    req: &DecisionRequest<'_>,
    default: Effect,
) -> DecisionResult {
    let rules = policy.rules();
    let mut matched = Vec::with_capacity(rules.len());
    let mut obligations = Vec::new();
    let mut effect = None::<Effect>;
    for rule in rules {
        if !policy.target_service(rule).matches(req.target) {
            continue;
        }
        let Some(subst) = req.labels.satisfies_all(&rule.triggers) else {
            continue;
        };
        effect = Some(effect.map_or(rule.decision.effect, |e| e.fold(rule.decision.effect)));
        for o in &rule.decision.obligations {
            let action = match &req.message_ref {
                Some(m) => o.action.replace_atom("message", m),
                None => o.action.clone(),
            };
            obligations.push(BoundObligation {
                action,
                otherwise: o.otherwise,
                rule: rule.name.clone(),
            });
        }
        matched.push(RuleMatch {
            name: rule.name.clone(),
            effect: rule.decision.effect,
            labels: rule.triggers.iter().map(|t| resolve(t, &subst)).collect(),
        });
    }
    DecisionResult {
        effect: effect.unwrap_or(default),
        obligations,
        matched,
    }
}
