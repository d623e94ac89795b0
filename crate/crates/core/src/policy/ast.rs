use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::logic::Term;

/// Rule effect. The derived order is the restrictiveness order used to fold
/// several matching rules: `Allow < Drop < Error`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Effect {
    Allow,
    Drop,
    Error,
}

impl Effect {
    pub fn as_str(self) -> &'static str {
        match self {
            Effect::Allow => "allow",
            Effect::Drop => "drop",
            Effect::Error => "error",
        }
    }

    /// Most restrictive of the two.
    pub fn fold(self, other: Effect) -> Effect {
        self.max(other)
    }
}

impl fmt::Display for Effect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Effect {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "allow" => Ok(Effect::Allow),
            "drop" => Ok(Effect::Drop),
            "error" => Ok(Effect::Error),
            other => Err(format!("unknown effect `{other}` (expected allow, drop or error)")),
        }
    }
}

/// `service { ... }` block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ServiceDecl {
    pub id: String,
    /// Regular expression over endpoint URLs, matched against the whole URL.
    pub endpoint: String,
    pub properties: Vec<Term>,
    /// Parsed and stored; nothing consumes them yet.
    pub capabilities: Vec<Term>,
    /// ℒ⁺: labels added when a message passes the service. Ground.
    pub creates_labels: Vec<Term>,
    /// ℒ⁻: labels removed. May contain variables, e.g. `classification(_)`.
    pub removes_labels: Vec<Term>,
}

impl ServiceDecl {
    pub fn new(id: impl Into<String>, endpoint: impl Into<String>) -> Self {
        ServiceDecl {
            id: id.into(),
            endpoint: endpoint.into(),
            properties: Vec::new(),
            capabilities: Vec::new(),
            creates_labels: Vec::new(),
            removes_labels: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Obligation {
    /// Host action; the atom `message` stands for the message being decided.
    pub action: Term,
    pub otherwise: Effect,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decision {
    pub effect: Effect,
    pub obligations: Vec<Obligation>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowRule {
    pub name: String,
    /// Id of a top-level service (inline services are hoisted by the parser).
    pub target: String,
    /// Conjunction: every label must be present.
    pub trigger_labels: Vec<Term>,
    pub decision: Decision,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PolicyAst {
    pub services: Vec<ServiceDecl>,
    pub rules: Vec<FlowRule>,
}

impl PolicyAst {
    pub fn service(&self, id: &str) -> Option<&ServiceDecl> {
        self.services.iter().find(|s| s.id == id)
    }

    pub fn rule(&self, name: &str) -> Option<&FlowRule> {
        self.rules.iter().find(|r| r.name == name)
    }
}
