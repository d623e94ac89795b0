//! Horn-clause store and SLD resolution engine.

mod builtins;
mod clause;
mod kb;
mod lexer;
mod parser;
mod solve;
mod term;
mod unify;

pub use builtins::{full_match_regex, register_standard};
pub use clause::{BadHead, Clause, Literal};
pub use kb::{BuiltinError, BuiltinFn, KbError, KnowledgeBase};
pub use lexer::{tokenize, CommentStyle, SyntaxError, Tok, Token, TokenStream};
pub use parser::{parse_clauses, parse_query, parse_term, read_term};
pub use solve::{Solution, SolveError, SolveLimits, Solutions};
pub use term::{is_plain_atom, NameError, Sym, Term};
pub use unify::{resolve, unify, unify_in_place, Substitution};
