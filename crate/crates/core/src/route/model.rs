use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::logic::Term;

use super::RouteError;

pub type StmtNo = u32;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Statement {
    From(String),
    To(String),
    Bean(String),
    Choice {
        cond: Term,
        then_target: StmtNo,
        else_target: StmtNo,
    },
    /// Each successor edge is one branch; every branch gets a copy of the
    /// message. The expression is kept for documentation.
    Split(Term),
    /// Join of the enclosing split.
    Aggregate(Term),
    SetMsgProp(String, Term),
    SetEnvProp(String, Term),
}

/// Statement kind without operands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StmtKind {
    From,
    To,
    Bean,
    Choice,
    Split,
    Aggregate,
    SetMsgProp,
    SetEnvProp,
}

impl StmtKind {
    pub fn as_str(self) -> &'static str {
        match self {
            StmtKind::From => "from",
            StmtKind::To => "to",
            StmtKind::Bean => "bean",
            StmtKind::Choice => "choice",
            StmtKind::Split => "split",
            StmtKind::Aggregate => "aggregate",
            StmtKind::SetMsgProp => "set_msg_prop",
            StmtKind::SetEnvProp => "set_env_prop",
        }
    }
}

impl Statement {
    pub fn kind(&self) -> StmtKind {
        match self {
            Statement::From(_) => StmtKind::From,
            Statement::To(_) => StmtKind::To,
            Statement::Bean(_) => StmtKind::Bean,
            Statement::Choice { .. } => StmtKind::Choice,
            Statement::Split(_) => StmtKind::Split,
            Statement::Aggregate(_) => StmtKind::Aggregate,
            Statement::SetMsgProp(..) => StmtKind::SetMsgProp,
            Statement::SetEnvProp(..) => StmtKind::SetEnvProp,
        }
    }

    /// Service touched by `from`, `to` or `bean`.
    pub fn service(&self) -> Option<&str> {
        match self {
            Statement::From(s) | Statement::To(s) | Statement::Bean(s) => Some(s),
            _ => None,
        }
    }
}

fn atom(name: &str) -> Term {
    Term::atom(name)
}

impl fmt::Display for Statement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Statement::From(s) => write!(f, "from({})", atom(s)),
            Statement::To(s) => write!(f, "to({})", atom(s)),
            Statement::Bean(s) => write!(f, "bean({})", atom(s)),
            Statement::Choice {
                cond,
                then_target,
                else_target,
            } => write!(
                f,
                "when {cond} then goto {then_target} otherwise goto {else_target}"
            ),
            Statement::Split(e) => write!(f, "split({e})"),
            Statement::Aggregate(e) => write!(f, "aggregate({e})"),
            Statement::SetMsgProp(k, e) => write!(f, "set_msg_prop({},{e})", atom(k)),
            Statement::SetEnvProp(k, e) => write!(f, "set_env_prop({},{e})", atom(k)),
        }
    }
}

/// A validated message route: numbered statements forming a DAG whose
/// entry, the lowest number, is a `from`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Route {
    pub(crate) name: String,
    pub(crate) statements: BTreeMap<StmtNo, Statement>,
    /// Explicit `-> n, m` / `-> end` successor lists as written.
    pub(crate) links: BTreeMap<StmtNo, Vec<StmtNo>>,
    /// Endpoint URL per service, from `endpoint` lines.
    pub(crate) endpoints: BTreeMap<String, String>,
}

impl Route {
    /// Builds and validates a route.
    pub fn new(
        name: impl Into<String>,
        statements: BTreeMap<StmtNo, Statement>,
        links: BTreeMap<StmtNo, Vec<StmtNo>>,
        endpoints: BTreeMap<String, String>,
    ) -> Result<Route, RouteError> {
        let route = Route {
            name: name.into(),
            statements,
            links,
            endpoints,
        };
        super::validate::validate(&route)?;
        Ok(route)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn statements(&self) -> &BTreeMap<StmtNo, Statement> {
        &self.statements
    }

    pub fn statement(&self, n: StmtNo) -> Option<&Statement> {
        self.statements.get(&n)
    }

    pub fn links(&self) -> &BTreeMap<StmtNo, Vec<StmtNo>> {
        &self.links
    }

    pub fn endpoints(&self) -> &BTreeMap<String, String> {
        &self.endpoints
    }

    pub fn entry(&self) -> StmtNo {
        *self
            .statements
            .keys()
            .next()
            .expect("validated routes are non-empty")
    }

    pub fn len(&self) -> usize {
        self.statements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.statements.is_empty()
    }

    /// The string a policy service is matched against for `service`: its
    /// declared endpoint URL, or the bare id when none is declared.
    pub fn target_of<'a>(&'a self, service: &'a str) -> &'a str {
        self.endpoints.get(service).map_or(service, String::as_str)
    }

    pub(crate) fn raw_successors(&self, n: StmtNo) -> Vec<StmtNo> {
        match &self.statements[&n] {
            Statement::Choice {
                then_target,
                else_target,
                ..
            } => vec![*then_target, *else_target],
            _ => match self.links.get(&n) {
                Some(explicit) => explicit.clone(),
                None => self
                    .statements
                    .range(n + 1..)
                    .next()
                    .map(|(k, _)| vec![*k])
                    .unwrap_or_default(),
            },
        }
    }

    /// Successor statement numbers: both targets for a choice, the branch
    /// heads for a split, otherwise the explicit link list or the next
    /// statement number.
    pub fn successors(&self, n: StmtNo) -> Result<Vec<StmtNo>, RouteError> {
        if !self.statements.contains_key(&n) {
            return Err(RouteError::UnknownStatement(n));
        }
        Ok(self.raw_successors(n))
    }

    /// All `(from, to)` edges in statement order.
    pub fn edges(&self) -> Vec<(StmtNo, StmtNo)> {
        self.statements
            .keys()
            .flat_map(|&n| self.raw_successors(n).into_iter().map(move |m| (n, m)))
            .collect()
    }

    /// Distinct services in first-use order.
    pub fn services(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for s in self.statements.values().filter_map(Statement::service) {
            if !out.contains(&s) {
                out.push(s);
            }
        }
        out
    }
}
