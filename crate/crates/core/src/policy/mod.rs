//! Policy language: AST, parser and canonical formatter.

mod ast;
mod format;
mod parser;

pub use ast::{Decision, Effect, FlowRule, Obligation, PolicyAst, ServiceDecl};
pub use format::format_policy;
pub use parser::{generated_service_id, parse_policy, PolicyError};
