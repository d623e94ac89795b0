//! Message routes: numbered statements over services forming a DAG.

mod format;
mod model;
mod parser;
mod validate;

pub use format::format_route;
pub use model::{Route, Statement, StmtKind, StmtNo};
pub use parser::parse_route;
pub use validate::split_joins;

use crate::logic::SyntaxError;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RouteError {
    #[error("syntax error at {0}")]
    Syntax(#[from] SyntaxError),
    #[error("route has no statements")]
    Empty,
    #[error("entry statement {0} must be a from")]
    EntryNotFrom(StmtNo),
    #[error("statement {0}: from is only allowed as the entry statement")]
    FromNotAtEntry(StmtNo),
    #[error("statement {from} refers to missing statement {target}")]
    DanglingTarget { from: StmtNo, target: StmtNo },
    #[error("route has a cycle through the edge {from} -> {to}")]
    CycleError { from: StmtNo, to: StmtNo },
    #[error("split at statement {split} is not matched by an aggregate: {reason}")]
    UnmatchedSplit { split: StmtNo, reason: String },
    #[error("aggregate at statement {0} is not inside a split")]
    StrayAggregate(StmtNo),
    #[error("statement {at}: {message}")]
    Invalid { at: StmtNo, message: String },
    #[error("no statement {0}")]
    UnknownStatement(StmtNo),
}
