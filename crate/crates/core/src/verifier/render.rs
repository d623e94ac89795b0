use std::fmt::Write;

use super::{explore::creates, Counterexample, Verdict};

fn label_list(labels: &[crate::logic::Term]) -> String {
    let items: Vec<String> = labels.iter().map(ToString::to_string).collect();
    format!("[{}]", items.join(", "))
}

/// Text report for one counterexample:
///
/// ```text
/// Route Sensor_Messaging is invalid because
/// service mqueue may receive label(s) [raw].
/// This is forbidden by rule dontPublishRaw
///
/// Example flows violating policy follow:
/// |-- sensor creates message labeled [raw]
/// |-- split receives message labeled [raw]
/// ...
/// |-- fail!
/// ```
pub fn render_counterexample(ce: &Counterexample, route_name: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "Route {route_name} is invalid because");
    let offending = if ce.offending_labels.is_empty() {
        ce.arrival_labels.to_string()
    } else {
        label_list(&ce.offending_labels)
    };
    let _ = writeln!(out, "service {} may receive label(s) {offending}.", ce.service);
    match &ce.rule {
        Some(rule) => {
            let _ = writeln!(out, "This is forbidden by rule {rule}");
        }
        None => {
            let _ = writeln!(out, "This is forbidden by the default decision");
        }
    }
    out.push('\n');
    out.push_str("Example flows violating policy follow:\n");
    for step in &ce.trace {
        let verb = if creates(step.kind) { "creates" } else { "receives" };
        let _ = writeln!(out, "|-- {} {verb} message labeled {}", step.node, step.labels);
    }
    out.push_str("|-- fail!\n");
    out
}

/// All counterexamples of a verdict separated by blank lines; a one-line
/// message for a valid route.
pub fn render_verdict(verdict: &Verdict, route_name: &str) -> String {
    match verdict {
        Verdict::Valid => format!("Route {route_name} is valid\n"),
        Verdict::Invalid(ces) => ces
            .iter()
            .map(|ce| render_counterexample(ce, route_name))
            .collect::<Vec<_>>()
            .join("\n"),
    }
}
