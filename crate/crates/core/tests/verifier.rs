use std::collections::BTreeSet;

use dfc_core::compiler::{compile, CompiledPolicy};
use dfc_core::logic::Term;
use dfc_core::policy::{parse_policy, Effect};
use dfc_core::route::{parse_route, Route};
use dfc_core::verifier::{
    compile_route_facts, render_counterexample, render_verdict, route_kb, verify, verify_with,
    Verdict, VerifyOptions,
};

const FIXTURES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures");

fn fixture(name: &str) -> String {
    std::fs::read_to_string(format!("{FIXTURES}/{name}")).unwrap()
}

fn policy(text: &str) -> CompiledPolicy {
    compile(&parse_policy(text).unwrap())
}

fn sensor_route() -> Route {
    parse_route(&fixture("sensor.route")).unwrap()
}

#[test]
fn fig_route_facts() {
    let facts = compile_route_facts(&sensor_route());
    let text: BTreeSet<String> = facts.clauses.iter().map(|c| c.to_string()).collect();
    for s in ["sensor", "split", "log", "merge", "aggr", "mqueue"] {
        assert!(text.contains(&format!("stmt({s}).")), "{s}");
    }
    for (a, b) in [
        ("sensor", "split"),
        ("split", "log"),
        ("split", "merge"),
        ("merge", "aggr"),
        ("log", "aggr"),
        ("aggr", "mqueue"),
    ] {
        assert!(text.contains(&format!("succ({a},{b}).")), "{a}->{b}");
    }
    let count = |p: &str| facts.clauses.iter().filter(|c| c.indicator().0 == p).count();
    assert_eq!((count("stmt"), count("succ")), (6, 6));
    assert_eq!(count("stmt_kind"), 6);
    assert_eq!(count("stmt_service"), 4);
}

#[test]
fn single_statement_facts() {
    let r = parse_route("route r\n1: from(s)\n").unwrap();
    let facts = compile_route_facts(&r);
    let count = |p: &str| facts.clauses.iter().filter(|c| c.indicator().0 == p).count();
    assert_eq!((count("stmt"), count("succ")), (1, 0));
}

#[test]
fn duplicate_names_get_statement_suffix() {
    let r = parse_route("route r\n1: from(s)\n2: to(t)\n3: to(t)\n").unwrap();
    let names: Vec<String> = compile_route_facts(&r).names.into_values().collect();
    assert_eq!(names, ["s", "t_2", "t_3"]);
}

#[test]
fn route_facts_share_the_policy_kb() {
    let p = policy(&fixture("policy.lucon"));
    let kb = route_kb(&sensor_route(), &p);
    let after_split = kb.query_all("succ(split, X)").unwrap();
    assert_eq!(after_split.len(), 2);
    assert_eq!(kb.query_all("rule(dontPublishRaw), succ(aggr, mqueue)").unwrap().len(), 1);
}

#[test]
fn sensor_counterexample_golden() {
    let start = std::time::Instant::now();
    let route = sensor_route();
    let p = policy(&fixture("policy.lucon"));
    let verdict = verify(&route, &p);
    let ces = verdict.counterexamples();
    assert_eq!(ces.len(), 1);
    let text = render_counterexample(&ces[0], route.name());
    assert_eq!(text, fixture("sensor_counterexample.txt"));
    assert_eq!(render_verdict(&verdict, route.name()), text);
    assert!(start.elapsed().as_secs_f64() < 1.0);
}

#[test]
fn counterexample_fields() {
    let p = policy(&fixture("policy.lucon"));
    let v = verify(&sensor_route(), &p);
    let ce = &v.counterexamples()[0];
    assert_eq!(ce.rule.as_deref(), Some("dontPublishRaw"));
    assert_eq!(ce.effect, Effect::Drop);
    assert_eq!(ce.service, "Outbound_Queue");
    assert_eq!(ce.route_service, "mqueue");
    assert_eq!(ce.statement, 6);
    assert_eq!(ce.offending_labels, vec![Term::atom("raw")]);
    let stmts: Vec<u32> = ce.trace.iter().map(|s| s.statement).collect();
    assert_eq!(stmts, [1, 2, 3, 5, 6]);
    assert!(ce.choices.is_empty());
}

#[test]
fn merge_removing_raw_does_not_hide_log_branch() {
    let p = policy(&fixture("merge_removes_raw.lucon"));
    let v = verify(&sensor_route(), &p);
    let ce = &v.counterexamples()[0];
    let aggr = ce.trace.iter().find(|s| s.node == "aggr").unwrap();
    // oracle: the two branch arrivals and their union
    let log_branch = ["raw"];
    let merge_branch = ["merge(10)"];
    let union: BTreeSet<&str> = log_branch.iter().chain(merge_branch.iter()).copied().collect();
    let got: BTreeSet<String> = aggr.labels.iter().map(|t| t.to_string()).collect();
    assert_eq!(got, union.into_iter().map(String::from).collect());
    assert!(ce.trace.iter().any(|s| s.node == "log"));
    assert!(!ce.trace.iter().any(|s| s.node == "merge"));
}

#[test]
fn no_rules_is_valid() {
    let r = parse_route("route r\n1: from(s)\n2: to(t)\n").unwrap();
    assert_eq!(verify(&r, &policy(&fixture("empty.lucon"))), Verdict::Valid);
}

#[test]
fn one_hop_violation_renders_three_trace_lines() {
    let p = policy(
        "service { id s endpoint \"s\" creates_label x }\n\
         flow_rule { id noX when service { endpoint \"t\" } receives x decide error }",
    );
    let r = parse_route("route r\n1: from(s)\n2: to(t)\n").unwrap();
    let v = verify(&r, &p);
    let text = render_counterexample(&v.counterexamples()[0], "r");
    let lines: Vec<&str> = text.lines().filter(|l| l.starts_with("|--")).collect();
    assert_eq!(
        lines,
        [
            "|-- s creates message labeled [x]",
            "|-- t receives message labeled [x]",
            "|-- fail!"
        ]
    );
}

#[test]
fn default_deny_reports_without_rule() {
    let r = parse_route("route r\n1: from(s)\n2: to(t)\n").unwrap();
    let opts = VerifyOptions {
        default_effect: Effect::Drop,
        all_paths: false,
    };
    let report = verify_with(&r, &policy(""), opts);
    let ce = &report.verdict.counterexamples()[0];
    assert_eq!(ce.rule, None);
    assert!(render_counterexample(ce, "r").contains("forbidden by the default decision"));
}

#[test]
fn undeclared_services_warn() {
    let p = policy(&fixture("policy.lucon"));
    let report = verify_with(&sensor_route(), &p, VerifyOptions::default());
    assert!(report.warnings.iter().any(|w| w.contains("log")));
    assert!(report.stats.states <= report.stats.statements * 2);
}

#[test]
fn choices_explore_both_ways() {
    let p = policy(
        "service { id s endpoint \"s\" creates_label x }\n\
         service { id clean endpoint \"clean\" removes_label x }\n\
         flow_rule { id noX when service { endpoint \"t\" } receives x decide drop }",
    );
    let r = parse_route(
        "route r\n1: from(s)\n2: when true then goto 3 otherwise goto 4\n3: bean(clean)\n4: to(t)\n",
    )
    .unwrap();
    let v = verify(&r, &p);
    assert_eq!(v.counterexamples().len(), 1);
    assert_eq!(v.counterexamples()[0].choices, vec![(2, false)]);

    let all = verify_with(&r, &p, VerifyOptions { default_effect: Effect::Allow, all_paths: true });
    assert_eq!(all.verdict.counterexamples().len(), 1);
}

#[test]
fn all_paths_lists_every_violating_path() {
    let p = policy(
        "service { id s endpoint \"s\" creates_label x }\n\
         flow_rule { id noX when service { endpoint \"t\" } receives x decide drop }",
    );
    let r = parse_route(
        "route r\n1: from(s)\n2: when true then goto 3 otherwise goto 4\n3: set_msg_prop(a, 1)\n4: to(t)\n",
    )
    .unwrap();
    assert_eq!(verify(&r, &p).counterexamples().len(), 1);
    let all = verify_with(&r, &p, VerifyOptions { default_effect: Effect::Allow, all_paths: true });
    let choices: Vec<_> = all.verdict.counterexamples().iter().map(|c| c.choices.clone()).collect();
    assert_eq!(choices, vec![vec![(2, true)], vec![(2, false)]]);
}

#[test]
fn json_shape() {
    let p = policy(&fixture("policy.lucon"));
    let report = verify_with(&sensor_route(), &p, VerifyOptions::default());
    let v = serde_json::to_value(&report).unwrap();
    assert_eq!(v["verdict"], "invalid");
    assert_eq!(v["counterexamples"][0]["rule"], "dontPublishRaw");
    assert_eq!(v["counterexamples"][0]["offending_labels"][0], "raw");
    assert_eq!(v["counterexamples"][0]["trace"][0]["labels"][0], "raw");
    assert_eq!(v["counterexamples"][0]["trace"][0]["kind"], "from");
}
