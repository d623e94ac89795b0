//! Reader for Prolog-style terms and clause files.

use super::clause::{Clause, Literal};
use super::lexer::{CommentStyle, SyntaxError, Tok, TokenStream};
use super::term::Term;

/// Parses a single term. A trailing `.` is accepted.
pub fn parse_term(text: &str) -> Result<Term, SyntaxError> {
    let mut ts = TokenStream::new(text, CommentStyle::Percent)?;
    let term = read_term(&mut ts)?;
    ts.eat_punct(".");
    if !ts.at_eof() {
        return Err(ts.unexpected("end of input"));
    }
    Ok(term)
}

/// Parses a clause file: `head.` facts, `head :- b1, \+ b2.` rules and `%`
/// line comments.
pub fn parse_clauses(text: &str) -> Result<Vec<Clause>, SyntaxError> {
    let mut ts = TokenStream::new(text, CommentStyle::Percent)?;
    let mut clauses = Vec::new();
    while !ts.at_eof() {
        let start = ts.peek().clone();
        let head = read_term(&mut ts)?;
        let mut body = Vec::new();
        if ts.eat_punct(":-") {
            loop {
                body.push(read_literal(&mut ts)?);
                if !ts.eat_punct(",") {
                    break;
                }
            }
        }
        ts.expect_punct(".")?;
        let clause = Clause::new(head, body)
            .map_err(|e| SyntaxError::new(start.line, start.column, e.to_string()))?;
        clauses.push(clause);
    }
    Ok(clauses)
}

/// Parses a comma-separated goal list such as `succ(a,X), \+ p(X)`.
pub fn parse_query(text: &str) -> Result<Vec<Literal>, SyntaxError> {
    let mut ts = TokenStream::new(text, CommentStyle::Percent)?;
    let mut goals = Vec::new();
    loop {
        goals.push(read_literal(&mut ts)?);
        if !ts.eat_punct(",") {
            break;
        }
    }
    ts.eat_punct(".");
    if !ts.at_eof() {
        return Err(ts.unexpected("`,` or end of query"));
    }
    Ok(goals)
}

fn read_literal(ts: &mut TokenStream) -> Result<Literal, SyntaxError> {
    if ts.eat_punct("\\+") {
        Ok(Literal::Neg(read_term(ts)?))
    } else {
        Ok(Literal::Pos(read_term(ts)?))
    }
}

/// Reads one term from the stream.
pub fn read_term(ts: &mut TokenStream) -> Result<Term, SyntaxError> {
    let tok = ts.peek().clone();
    match tok.tok {
        Tok::Ident(name) | Tok::Quoted(name) => {
            ts.next_token();
            let bad_name = |e: super::term::NameError| {
                SyntaxError::new(tok.line, tok.column, e.to_string())
            };
            if ts.is_punct("(") {
                ts.next_token();
                if ts.is_punct(")") {
                    return Err(ts.error_here("compound terms need at least one argument"));
                }
                let mut args = Vec::new();
                loop {
                    args.push(read_term(ts)?);
                    if !ts.eat_punct(",") {
                        break;
                    }
                }
                ts.expect_punct(")")?;
                Term::try_compound(&name, args).map_err(bad_name)
            } else {
                Term::try_atom(&name).map_err(bad_name)
            }
        }
        Tok::Var(name) => {
            ts.next_token();
            Ok(Term::var(&name))
        }
        Tok::Str(s) => {
            ts.next_token();
            Ok(Term::string(&s))
        }
        Tok::Int(v) => {
            ts.next_token();
            Ok(Term::int(v))
        }
        _ => Err(ts.unexpected("a term")),
    }
}
