use std::fmt::Write;

use crate::logic::Term;

use super::ast::{Effect, PolicyAst, ServiceDecl};

fn join(terms: &[Term]) -> String {
    terms
        .iter()
        .map(Term::to_string)
        .collect::<Vec<_>>()
        .join(", ")
}

fn atom(name: &str) -> String {
    Term::atom(name).to_string()
}

fn write_service(out: &mut String, s: &ServiceDecl) {
    out.push_str("service {\n");
    let _ = writeln!(out, "  id {}", atom(&s.id));
    let _ = writeln!(out, "  endpoint {}", Term::string(&s.endpoint));
    let lists = [
        ("properties", &s.properties),
        ("capabilities", &s.capabilities),
        ("creates_label", &s.creates_labels),
        ("removes_label", &s.removes_labels),
    ];
    for (key, terms) in lists {
        if !terms.is_empty() {
            let _ = writeln!(out, "  {key} {}", join(terms));
        }
    }
    out.push_str("}\n");
}

/// Canonical text for `ast`. All services are written as top-level blocks,
/// so `parse_policy(&format_policy(ast)) == ast`.
pub fn format_policy(ast: &PolicyAst) -> String {
    let mut out = String::from("// dfc policy\n");
    for s in &ast.services {
        out.push('\n');
        write_service(&mut out, s);
    }
    for r in &ast.rules {
        out.push('\n');
        out.push_str("flow_rule {\n");
        let _ = writeln!(out, "  id {}", atom(&r.name));
        let _ = writeln!(out, "  when {}", atom(&r.target));
        let _ = writeln!(out, "  receives {}", join(&r.trigger_labels));
        let _ = writeln!(out, "  decide {}", r.decision.effect);
        for o in &r.decision.obligations {
            let _ = write!(out, "  require {}", o.action);
            if o.otherwise != Effect::Error {
                let _ = write!(out, " otherwise {}", o.otherwise);
            }
            out.push('\n');
        }
        out.push_str("}\n");
    }
    out
}
