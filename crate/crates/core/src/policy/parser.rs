//! Reader for `.lucon` policy files.
//!
//! ```text
//! service {
//!   id publicEndpoint
//!   endpoint "http[s]?://.+"
//!   properties publish("http://example.org")
//!   creates_label public
//! }
//! flow_rule {
//!   id dontPublishRaw
//!   when publicEndpoint
//!   receives raw
//!   decide drop
//!   require log("Preventing data leak. ", message) otherwise error
//! }
//! ```
//!
//! `when` also accepts an inline `service { ... }` block. Inline blocks
//! without an `id` get a generated one.

use std::collections::HashSet;

use crate::logic::{full_match_regex, read_term, CommentStyle, SyntaxError, Term, Tok, TokenStream};

use super::ast::{Decision, Effect, FlowRule, Obligation, PolicyAst, ServiceDecl};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PolicyError {
    #[error("syntax error at {0}")]
    Syntax(#[from] SyntaxError),
    #[error("invalid policy at {line}:{column}: {message}")]
    Validation {
        line: usize,
        column: usize,
        message: String,
    },
}

impl PolicyError {
    fn validation(pos: Pos, message: impl Into<String>) -> Self {
        PolicyError::Validation {
            line: pos.0,
            column: pos.1,
            message: message.into(),
        }
    }
}

type Pos = (usize, usize);

const SERVICE_KEYS: &[&str] = &[
    "id",
    "endpoint",
    "properties",
    "capabilities",
    "creates_label",
    "removes_label",
];

struct Located<T> {
    value: T,
    pos: Pos,
}

struct ServiceSrc {
    decl: ServiceDecl,
    pos: Pos,
    id_given: bool,
    endpoint_pos: Pos,
    labels: Vec<Located<Term>>,
}

enum TargetSrc {
    Ref(String),
    Inline(Box<ServiceSrc>),
}

struct RuleSrc {
    name: String,
    pos: Pos,
    target: TargetSrc,
    target_pos: Pos,
    triggers: Vec<Term>,
    decision: Decision,
}

fn here(ts: &TokenStream) -> Pos {
    let t = ts.peek();
    (t.line, t.column)
}

fn read_name(ts: &mut TokenStream, what: &str) -> Result<String, SyntaxError> {
    match ts.peek().tok.clone() {
        Tok::Ident(name) | Tok::Quoted(name) => {
            let term = read_term(ts)?;
            match term {
                Term::Atom(_) => Ok(name),
                _ => Err(SyntaxError::new(
                    ts.peek().line,
                    ts.peek().column,
                    format!("{what} must be an atom"),
                )),
            }
        }
        _ => Err(ts.unexpected(what)),
    }
}

fn read_term_list(ts: &mut TokenStream) -> Result<Vec<Located<Term>>, SyntaxError> {
    let mut out = Vec::new();
    loop {
        let pos = here(ts);
        out.push(Located {
            value: read_term(ts)?,
            pos,
        });
        if !ts.eat_punct(",") {
            return Ok(out);
        }
    }
}

fn read_effect(ts: &mut TokenStream) -> Result<Effect, SyntaxError> {
    let tok = ts.peek().clone();
    if let Tok::Ident(name) = &tok.tok {
        if let Ok(effect) = name.parse::<Effect>() {
            ts.next_token();
            return Ok(effect);
        }
    }
    Err(ts.unexpected("`allow`, `drop` or `error`"))
}

fn read_service(ts: &mut TokenStream) -> Result<ServiceSrc, SyntaxError> {
    let start = ts.expect_keyword("service")?;
    ts.expect_punct("{")?;
    let mut decl = ServiceDecl::new("", "");
    let mut id_given = false;
    let mut endpoint_pos = None;
    let mut labels = Vec::new();
    let mut seen = HashSet::new();
    while !ts.is_punct("}") {
        let key_tok = ts.peek().clone();
        let key = match &key_tok.tok {
            Tok::Ident(k) if SERVICE_KEYS.contains(&k.as_str()) => k.clone(),
            _ => return Err(ts.unexpected("a service attribute or `}`")),
        };
        ts.next_token();
        if !seen.insert(key.clone()) {
            return Err(SyntaxError::new(
                key_tok.line,
                key_tok.column,
                format!("duplicate `{key}` attribute"),
            ));
        }
        match key.as_str() {
            "id" => {
                decl.id = read_name(ts, "a service id")?;
                id_given = true;
            }
            "endpoint" => {
                endpoint_pos = Some(here(ts));
                decl.endpoint = ts.expect_string()?.0;
            }
            "properties" => {
                decl.properties = read_term_list(ts)?.into_iter().map(|l| l.value).collect()
            }
            "capabilities" => {
                decl.capabilities = read_term_list(ts)?.into_iter().map(|l| l.value).collect()
            }
            "creates_label" => {
                let list = read_term_list(ts)?;
                decl.creates_labels = list.iter().map(|l| l.value.clone()).collect();
                labels.extend(list);
            }
            "removes_label" => {
                decl.removes_labels = read_term_list(ts)?.into_iter().map(|l| l.value).collect()
            }
            _ => unreachable!("key checked against SERVICE_KEYS"),
        }
    }
    ts.expect_punct("}")?;
    let Some(endpoint_pos) = endpoint_pos else {
        return Err(SyntaxError::new(
            start.line,
            start.column,
            "service block needs an `endpoint`",
        ));
    };
    Ok(ServiceSrc {
        decl,
        pos: (start.line, start.column),
        id_given,
        endpoint_pos,
        labels,
    })
}

fn read_rule(ts: &mut TokenStream) -> Result<RuleSrc, SyntaxError> {
    let start = ts.expect_keyword("flow_rule")?;
    ts.expect_punct("{")?;
    ts.expect_keyword("id")?;
    let name = read_name(ts, "a rule name")?;
    ts.expect_keyword("when")?;
    let target_pos = here(ts);
    let target = if ts.is_keyword("service") && ts.peek_nth(1).tok == Tok::Punct("{") {
        TargetSrc::Inline(Box::new(read_service(ts)?))
    } else {
        TargetSrc::Ref(read_name(ts, "a service reference")?)
    };
    ts.expect_keyword("receives")?;
    let triggers = read_term_list(ts)?.into_iter().map(|l| l.value).collect();
    ts.expect_keyword("decide")?;
    let effect = read_effect(ts)?;
    let mut obligations = Vec::new();
    while ts.eat_keyword("require") {
        let action = read_term(ts)?;
        let otherwise = if ts.eat_keyword("otherwise") {
            read_effect(ts)?
        } else {
            Effect::Error
        };
        obligations.push(Obligation { action, otherwise });
    }
    ts.expect_punct("}")?;
    Ok(RuleSrc {
        name,
        pos: (start.line, start.column),
        target,
        target_pos,
        triggers,
        decision: Decision {
            effect,
            obligations,
        },
    })
}

/// FNV-1a, used for stable generated service ids.
fn fnv1a(text: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in text.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Id for an inline service of rule `rule`: `service` plus eight digits.
pub fn generated_service_id(rule: &str, taken: &HashSet<String>) -> String {
    let mut n = fnv1a(rule) % 100_000_000;
    loop {
        let id = format!("service{n:08}");
        if !taken.contains(&id) {
            return id;
        }
        n = (n + 1) % 100_000_000;
    }
}

fn check_service(src: &ServiceSrc) -> Result<(), PolicyError> {
    let d = &src.decl;
    if let Err(e) = full_match_regex(&d.endpoint) {
        return Err(PolicyError::validation(
            src.endpoint_pos,
            format!("endpoint of service {} is not a valid regex: {e}", d.id),
        ));
    }
    for l in &src.labels {
        if !l.value.is_ground() {
            return Err(PolicyError::validation(
                l.pos,
                format!("created label {} must be ground", l.value),
            ));
        }
        if d.removes_labels.contains(&l.value) {
            return Err(PolicyError::validation(
                l.pos,
                format!("service {} both creates and removes {}", d.id, l.value),
            ));
        }
    }
    Ok(())
}

/// Parses and validates a policy document.
pub fn parse_policy(text: &str) -> Result<PolicyAst, PolicyError> {
    let mut ts = TokenStream::new(text, CommentStyle::DoubleSlash)?;
    let mut services: Vec<ServiceSrc> = Vec::new();
    let mut rules: Vec<RuleSrc> = Vec::new();
    while !ts.at_eof() {
        if ts.is_keyword("service") {
            services.push(read_service(&mut ts)?);
        } else if ts.is_keyword("flow_rule") {
            rules.push(read_rule(&mut ts)?);
        } else {
            return Err(ts.unexpected("`service` or `flow_rule`").into());
        }
    }

    for s in &services {
        if !s.id_given {
            return Err(PolicyError::validation(s.pos, "top-level service needs an `id`"));
        }
    }
    let mut taken: HashSet<String> = services.iter().map(|s| s.decl.id.clone()).collect();
    // explicit ids of inline services are reserved before generating any
    for r in &rules {
        if let TargetSrc::Inline(s) = &r.target {
            if s.id_given && !taken.insert(s.decl.id.clone()) {
                return Err(PolicyError::validation(
                    s.pos,
                    format!("duplicate service id {}", s.decl.id),
                ));
            }
        }
    }

    let mut seen_ids = HashSet::new();
    for s in &services {
        if !seen_ids.insert(s.decl.id.clone()) {
            return Err(PolicyError::validation(
                s.pos,
                format!("duplicate service id {}", s.decl.id),
            ));
        }
    }

    let mut ast = PolicyAst::default();
    for s in &services {
        check_service(s)?;
        ast.services.push(s.decl.clone());
    }
    let mut names = HashSet::new();
    for r in rules {
        if !names.insert(r.name.clone()) {
            return Err(PolicyError::validation(
                r.pos,
                format!("duplicate rule name {}", r.name),
            ));
        }
        let target = match r.target {
            TargetSrc::Ref(id) => {
                if !taken.contains(&id) {
                    return Err(PolicyError::validation(
                        r.target_pos,
                        format!("rule {} refers to undeclared service {id}", r.name),
                    ));
                }
                id
            }
            TargetSrc::Inline(mut s) => {
                if !s.id_given {
                    s.decl.id = generated_service_id(&r.name, &taken);
                    taken.insert(s.decl.id.clone());
                }
                check_service(&s)?;
                let id = s.decl.id.clone();
                ast.services.push(s.decl);
                id
            }
        };
        ast.rules.push(FlowRule {
            name: r.name,
            target,
            trigger_labels: r.triggers,
            decision: r.decision,
        });
    }
    Ok(ast)
}
