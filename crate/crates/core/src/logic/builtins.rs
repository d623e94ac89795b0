//! Standard builtins: `regex/3`, `lt/2`, `lte/2`, `eq/2`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use regex::Regex;

use super::kb::{BuiltinError, KbError, KnowledgeBase};
use super::term::Term;

/// Compiles patterns as anchored full matches, caching by source text.
#[derive(Default)]
struct RegexCache {
    compiled: Mutex<HashMap<String, Arc<Regex>>>,
}

impl RegexCache {
    fn get(&self, pattern: &str) -> Result<Arc<Regex>, BuiltinError> {
        let mut map = self.compiled.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(re) = map.get(pattern) {
            return Ok(re.clone());
        }
        let re = Regex::new(&format!("^(?:{pattern})$"))
            .map_err(|e| BuiltinError(format!("invalid regex {pattern:?}: {e}")))?;
        let re = Arc::new(re);
        map.insert(pattern.to_string(), re.clone());
        Ok(re)
    }
}

fn text_of<'a>(t: &'a Term, what: &str) -> Result<&'a str, BuiltinError> {
    match t {
        Term::Str(s) | Term::Atom(s) => Ok(s),
        Term::Var(_) => Err(BuiltinError(format!("{what} is unbound"))),
        other => Err(BuiltinError(format!("{what} must be a string, got {other}"))),
    }
}

fn int_of(t: &Term) -> Result<i64, BuiltinError> {
    match t {
        Term::Int(v) => Ok(*v),
        Term::Var(_) => Err(BuiltinError("argument is unbound".into())),
        other => Err(BuiltinError(format!("expected an integer, got {other}"))),
    }
}

fn yes_if(cond: bool, args: &[Term]) -> Vec<Vec<Term>> {
    if cond {
        vec![args.to_vec()]
    } else {
        Vec::new()
    }
}

/// Registers the standard builtins.
///
/// `regex(Pattern, Subject, R)` binds `R` to `true` when the whole of
/// `Subject` matches `Pattern`, else to `false`. `lt`, `lte` compare
/// integers; `eq` compares two ground terms.
pub fn register_standard(kb: &mut KnowledgeBase) -> Result<(), KbError> {
    let cache = Arc::new(RegexCache::default());
    kb.register_builtin("regex", 3, move |args| {
        let pattern = text_of(&args[0], "regex pattern")?;
        let subject = text_of(&args[1], "regex subject")?;
        let matched = cache.get(pattern)?.is_match(subject);
        Ok(vec![vec![
            args[0].clone(),
            args[1].clone(),
            Term::atom(if matched { "true" } else { "false" }),
        ]])
    })?;
    kb.register_builtin("lt", 2, |args| {
        Ok(yes_if(int_of(&args[0])? < int_of(&args[1])?, args))
    })?;
    kb.register_builtin("lte", 2, |args| {
        Ok(yes_if(int_of(&args[0])? <= int_of(&args[1])?, args))
    })?;
    kb.register_builtin("eq", 2, |args| {
        if !args[0].is_ground() || !args[1].is_ground() {
            return Err(BuiltinError("eq/2 needs ground arguments".into()));
        }
        Ok(yes_if(args[0] == args[1], args))
    })?;
    Ok(())
}

/// Full-match test shared with code that matches endpoints outside the
/// engine. Compiles `^(?:pattern)$`.
pub fn full_match_regex(pattern: &str) -> Result<Regex, regex::Error> {
    Regex::new(&format!("^(?:{pattern})$"))
}
