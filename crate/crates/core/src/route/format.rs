use std::fmt::Write;

use crate::logic::{is_plain_atom, Term};

use super::Route;

fn name(n: &str) -> String {
    let ident = n.chars().next().is_some_and(|c| c.is_ascii_alphabetic())
        && n.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
    if ident || is_plain_atom(n) {
        n.to_string()
    } else {
        Term::atom(n).to_string()
    }
}

/// Canonical text; `parse_route(&format_route(r)) == r`.
pub fn format_route(route: &Route) -> String {
    let mut out = format!("route {}\n", name(&route.name));
    for (svc, url) in &route.endpoints {
        let _ = writeln!(out, "endpoint {} {}", name(svc), Term::string(url));
    }
    for (n, stmt) in &route.statements {
        let _ = write!(out, "{n}: {stmt}");
        if let Some(links) = route.links.get(n) {
            if links.is_empty() {
                out.push_str(" -> end");
            } else {
                let list: Vec<String> = links.iter().map(u32::to_string).collect();
                let _ = write!(out, " -> {}", list.join(", "));
            }
        }
        out.push('\n');
    }
    out
}
