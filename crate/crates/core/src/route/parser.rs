//! Reader for `.route` files.
//!
//! ```text
//! route Sensor_Messaging
//! endpoint mqueue "amqp://queue.example/out"
//! 1: from(sensor)
//! 2: split(parts) -> 3, 4
//! 3: to(log) -> 5
//! 4: bean(merge)
//! 5: aggregate(concat)
//! 6: to(mqueue)
//! ```
//!
//! A statement's successor is the next higher number unless `-> n, ...` or
//! `-> end` says otherwise. Choices read
//! `n: when cond then goto a otherwise goto b`.

use std::collections::BTreeMap;

use crate::logic::{read_term, CommentStyle, SyntaxError, Term, Tok, TokenStream};

use super::{Route, RouteError, Statement, StmtNo};

fn read_name(ts: &mut TokenStream, what: &str) -> Result<String, SyntaxError> {
    match ts.peek().tok.clone() {
        Tok::Ident(n) | Tok::Var(n) | Tok::Quoted(n) => {
            let tok = ts.next_token();
            Term::try_atom(&n).map_err(|e| SyntaxError::new(tok.line, tok.column, e.to_string()))?;
            Ok(n)
        }
        _ => Err(ts.unexpected(what)),
    }
}

fn name_arg(t: &Term) -> Option<String> {
    match t {
        Term::Atom(n) | Term::Var(n) => Some(n.to_string()),
        _ => None,
    }
}

fn stmt_no(ts: &mut TokenStream) -> Result<StmtNo, SyntaxError> {
    let (v, tok) = ts.expect_int()?;
    StmtNo::try_from(v)
        .map_err(|_| SyntaxError::new(tok.line, tok.column, "statement numbers are non-negative"))
}

fn read_statement(ts: &mut TokenStream) -> Result<Statement, SyntaxError> {
    if ts.eat_keyword("when") {
        let cond = read_term(ts)?;
        ts.expect_keyword("then")?;
        ts.expect_keyword("goto")?;
        let then_target = stmt_no(ts)?;
        ts.expect_keyword("otherwise")?;
        ts.expect_keyword("goto")?;
        let else_target = stmt_no(ts)?;
        return Ok(Statement::Choice {
            cond,
            then_target,
            else_target,
        });
    }
    let start = ts.peek().clone();
    let term = read_term(ts)?;
    let bad = |msg: &str| SyntaxError::new(start.line, start.column, msg);
    let (name, args) = match &term {
        Term::Compound(f, args) => (f.as_ref(), args.as_slice()),
        _ => return Err(bad("expected a statement")),
    };
    let service = |what: &str| {
        name_arg(&args[0]).ok_or_else(|| bad(&format!("{what} needs a service name")))
    };
    Ok(match (name, args.len()) {
        ("from", 1) => Statement::From(service("from")?),
        ("to", 1) => Statement::To(service("to")?),
        ("bean", 1) => Statement::Bean(service("bean")?),
        ("split", 1) => Statement::Split(args[0].clone()),
        ("aggregate", 1) => Statement::Aggregate(args[0].clone()),
        ("set_msg_prop", 2) | ("set_env_prop", 2) => {
            let key = args[0]
                .as_atom()
                .ok_or_else(|| bad("property names are atoms"))?
                .to_string();
            if name == "set_msg_prop" {
                Statement::SetMsgProp(key, args[1].clone())
            } else {
                Statement::SetEnvProp(key, args[1].clone())
            }
        }
        _ => return Err(bad(&format!("unknown statement {name}/{}", args.len()))),
    })
}

/// Parses and validates a route.
pub fn parse_route(text: &str) -> Result<Route, RouteError> {
    let mut ts = TokenStream::new(text, CommentStyle::DoubleSlash)?;
    ts.expect_keyword("route")?;
    let name = read_name(&mut ts, "a route name")?;
    let mut endpoints = BTreeMap::new();
    while ts.eat_keyword("endpoint") {
        let at = ts.peek().clone();
        let svc = read_name(&mut ts, "a service name")?;
        let (url, _) = ts.expect_string()?;
        if endpoints.insert(svc.clone(), url).is_some() {
            return Err(SyntaxError::new(
                at.line,
                at.column,
                format!("endpoint of {svc} declared twice"),
            )
            .into());
        }
    }
    let mut statements = BTreeMap::new();
    let mut links = BTreeMap::new();
    while !ts.at_eof() {
        let at = ts.peek().clone();
        let n = stmt_no(&mut ts)?;
        ts.expect_punct(":")?;
        let stmt = read_statement(&mut ts)?;
        if ts.eat_punct("->") {
            let mut targets = Vec::new();
            if !ts.eat_keyword("end") {
                loop {
                    targets.push(stmt_no(&mut ts)?);
                    if !ts.eat_punct(",") {
                        break;
                    }
                }
            }
            links.insert(n, targets);
        }
        if statements.insert(n, stmt).is_some() {
            return Err(SyntaxError::new(
                at.line,
                at.column,
                format!("statement {n} defined twice"),
            )
            .into());
        }
    }
    Route::new(name, statements, links, endpoints)
}
