//! Post-state checks for each statement kind, the labelled three-service
//! chain, obligations and the implicit-leak program. Each check returns a
//! description of the first mismatch.

use std::collections::BTreeMap;

use dfc_core::compiler::{compile, CompiledPolicy};
use dfc_core::labels::LabelSet;
use dfc_core::logic::{parse_term, Term};
use dfc_core::policy::parse_policy;
use dfc_core::route::parse_route;
use dfc_core::runtime::{
    run_implicit_leak, Engine, Env, Input, Message, ObligationRegistry, Props, RunStatus,
    ServiceRegistry,
};

pub type Check = Result<(), String>;

macro_rules! ensure_eq {
    ($left:expr, $right:expr, $what:expr) => {{
        let (l, r) = (&$left, &$right);
        if l != r {
            return Err(format!("{}: got {:?}, want {:?}", $what, l, r));
        }
    }};
}

fn t(s: &str) -> Term {
    parse_term(s).unwrap()
}

fn labels(items: &[&str]) -> LabelSet {
    items.iter().map(|s| t(s)).collect()
}

fn props(items: &[(&str, &str)]) -> Props {
    items.iter().map(|(k, v)| (k.to_string(), t(v))).collect()
}

fn policy(text: &str) -> CompiledPolicy {
    compile(&parse_policy(text).unwrap())
}

const POLICY: &str = r#"
service { id s endpoint "s" creates_label x }
service { id t endpoint "t" removes_label x creates_label y }
"#;

/// `s` turns any input into payload `p1` with `k = 1`; `t` into `p2` with
/// `k = 2`; every other service is the identity.
fn services() -> ServiceRegistry {
    let mut reg = ServiceRegistry::new();
    reg.register("s", |_, _| Ok((b"p1".to_vec(), props(&[("k", "1")]))));
    reg.register("t", |_, _| Ok((b"p2".to_vec(), props(&[("k", "2")]))));
    for id in ["u", "a", "b", "c", "sink"] {
        reg.register_identity(id);
    }
    reg
}

fn input() -> Input {
    Input {
        payload: b"in".to_vec(),
        props: Props::new(),
    }
}

struct State {
    taints: BTreeMap<u64, LabelSet>,
    messages: BTreeMap<u64, Message>,
    env: Env,
    pc: Option<u32>,
    next: Option<u32>,
}

/// Runs `route` statement by statement and returns the states before and
/// after the statement executed at step `at` (0-based).
fn around(route: &str, policy_text: &str, env: Env, at: usize) -> Result<(State, State), String> {
    let route = parse_route(route).map_err(|e| e.to_string())?;
    let policy = policy(policy_text);
    let services = services();
    let obligations = ObligationRegistry::new();
    let engine = Engine::new(&policy, &services, &obligations);
    let mut env = env;
    let mut m = engine
        .machine(&route, input(), &mut env)
        .map_err(|e| e.to_string())?;
    let snap = |m: &dfc_core::runtime::Machine<'_>| State {
        taints: m.taints(),
        messages: m.messages().clone(),
        env: m.env().clone(),
        pc: m.pc(),
        next: m.next(),
    };
    for _ in 0..at {
        if !m.step() {
            return Err("route ended early".into());
        }
    }
    let before = snap(&m);
    if !m.step() {
        return Err("statement did not execute".into());
    }
    Ok((before, snap(&m)))
}

fn message(id: u64, payload: &str, p: &[(&str, &str)], l: &[&str]) -> Message {
    Message {
        id,
        payload: payload.as_bytes().to_vec(),
        props: props(p),
        labels: labels(l),
    }
}

pub fn rule_from() -> Check {
    let (before, after) = around("route r\n1: from(s)\n2: to(u)\n", POLICY, Env::new(), 0)?;
    ensure_eq!(before.messages.len(), 0, "no message before from");
    ensure_eq!((before.pc, before.next), (None, Some(1)), "pc before");
    ensure_eq!(
        after.messages,
        BTreeMap::from([(1, message(1, "p1", &[("k", "1")], &["x"]))]),
        "message created with the service's initial labels"
    );
    ensure_eq!(after.taints[&1], labels(&["x"]), "tau'");
    ensure_eq!(after.env, before.env, "delta unchanged");
    ensure_eq!((after.pc, after.next), (Some(1), Some(2)), "pc after");
    Ok(())
}

fn service_rule(kind: &str) -> Check {
    let route = format!("route r\n1: from(s)\n2: {kind}(t)\n3: to(u)\n");
    let (before, after) = around(&route, POLICY, Env::new(), 1)?;
    ensure_eq!(before.taints[&1], labels(&["x"]), "tau before");
    // removes x, then adds y
    ensure_eq!(after.taints[&1], labels(&["y"]), "tau'");
    ensure_eq!(after.messages[&1].props, props(&[("k", "2")]), "mu'");
    ensure_eq!(after.messages[&1].payload, b"p2".to_vec(), "payload");
    ensure_eq!(after.env, before.env, "delta unchanged");
    ensure_eq!((after.pc, after.next), (Some(2), Some(3)), "pc after");
    Ok(())
}

pub fn rule_to() -> Check {
    service_rule("to")
}

pub fn rule_bean() -> Check {
    service_rule("bean")
}

fn choice_rule(cond: &str, taken: u32) -> Check {
    let route = format!(
        "route r\n1: from(s)\n2: when {cond} then goto 3 otherwise goto 4\n3: to(u)\n4: to(a)\n"
    );
    let env: Env = [("flag".to_string(), t("on"))].into();
    let (before, after) = around(&route, POLICY, env, 1)?;
    ensure_eq!(after.taints, before.taints, "tau unchanged");
    ensure_eq!(after.messages, before.messages, "mu unchanged");
    ensure_eq!(after.env, before.env, "delta unchanged");
    ensure_eq!((after.pc, after.next), (Some(2), Some(taken)), "pc after");
    Ok(())
}

pub fn rule_choice_true() -> Check {
    choice_rule("and(env_prop(flag, on), msg_prop(k, 1))", 3)
}

pub fn rule_choice_false() -> Check {
    choice_rule("env_prop(flag, off)", 4)
}

const SPLIT_ROUTE: &str = "route r\n1: from(s)\n2: split(parts) -> 3, 4\n3: to(t) -> 5\n4: to(u)\n5: aggregate(all)\n6: to(a)\n";

pub fn rule_split() -> Check {
    let (before, after) = around(SPLIT_ROUTE, POLICY, Env::new(), 1)?;
    ensure_eq!(before.messages.keys().copied().collect::<Vec<_>>(), vec![1], "one message");
    // the original is replaced by one copy per branch
    ensure_eq!(
        after.messages,
        BTreeMap::from([
            (2, message(2, "p1", &[("k", "1")], &["x"])),
            (3, message(3, "p1", &[("k", "1")], &["x"])),
        ]),
        "copies carry the original's labels and properties"
    );
    ensure_eq!(after.env, before.env, "delta unchanged");
    ensure_eq!((after.pc, after.next), (Some(2), Some(3)), "first branch next");
    Ok(())
}

pub fn rule_aggregate() -> Check {
    // steps: from, split, to(t), to(u), aggregate
    let (before, after) = around(SPLIT_ROUTE, POLICY, Env::new(), 4)?;
    ensure_eq!(before.taints.len(), 2, "two branch messages before");
    ensure_eq!(
        after.messages,
        BTreeMap::from([(
            4,
            Message {
                id: 4,
                payload: b"p2p1".to_vec(),
                // later branch wins on clashing keys
                props: props(&[("k", "1")]),
                labels: labels(&["x", "y"]),
            }
        )]),
        "joined message carries the union of labels"
    );
    ensure_eq!(after.env, before.env, "delta unchanged");
    ensure_eq!((after.pc, after.next), (Some(5), Some(6)), "pc after");
    Ok(())
}

pub fn rule_set_msg_prop() -> Check {
    let route = "route r\n1: from(s)\n2: set_msg_prop(copy, msg(k))\n3: to(u)\n";
    let (before, after) = around(route, POLICY, Env::new(), 1)?;
    ensure_eq!(after.taints, before.taints, "tau unchanged");
    ensure_eq!(
        after.messages[&1].props,
        props(&[("k", "1"), ("copy", "1")]),
        "mu' extended"
    );
    ensure_eq!(after.env, before.env, "delta unchanged");
    ensure_eq!((after.pc, after.next), (Some(2), Some(3)), "pc after");
    Ok(())
}

pub fn rule_set_env_prop() -> Check {
    let route = "route r\n1: from(s)\n2: set_env_prop(last, msg(k))\n3: to(u)\n";
    let env: Env = [("old".to_string(), t("v"))].into();
    let (before, after) = around(route, POLICY, env, 1)?;
    ensure_eq!(after.taints, before.taints, "tau unchanged");
    ensure_eq!(after.messages, before.messages, "mu unchanged");
    let want: Env = [("old".to_string(), t("v")), ("last".to_string(), t("1"))].into();
    ensure_eq!(after.env, want, "delta'");
    ensure_eq!((after.pc, after.next), (Some(2), Some(3)), "pc after");
    Ok(())
}

/// Every inference-rule check by name.
pub fn all_rules() -> Vec<(&'static str, Check)> {
    vec![
        ("from", rule_from()),
        ("to", rule_to()),
        ("choice-true", rule_choice_true()),
        ("choice-false", rule_choice_false()),
        ("split", rule_split()),
        ("aggregate", rule_aggregate()),
        ("set-msg-prop", rule_set_msg_prop()),
        ("set-env-prop", rule_set_env_prop()),
        ("bean", rule_bean()),
    ]
}

/// Source labelled {raw, temperature}; A keeps labels; B removes raw and
/// adds merge(10); C publishes.
pub fn label_chain() -> Check {
    let p = policy(
        r#"
        service { id src endpoint "src" creates_label raw, temperature }
        service { id a endpoint "hdfs2://.*" properties persist("hdfs2://store") }
        service { id b endpoint "b" removes_label raw creates_label merge(10) }
        service { id c endpoint "http://.*" properties publish("http://out") }
        flow_rule { id publishNoRaw when c receives raw decide drop }
        "#,
    );
    let route = parse_route(
        "route chain\nendpoint a \"hdfs2://store/x\"\nendpoint c \"http://out/x\"\n\
         1: from(src)\n2: to(a)\n3: bean(b)\n4: to(c)\n",
    )
    .map_err(|e| e.to_string())?;
    let mut services = ServiceRegistry::new();
    for s in ["src", "a", "b", "c"] {
        services.register_identity(s);
    }
    let obligations = ObligationRegistry::new();
    let out = Engine::new(&p, &services, &obligations)
        .execute(&route, input(), &mut Env::new())
        .map_err(|e| e.to_string())?;
    ensure_eq!(out.status, RunStatus::Completed, "status");
    let entering = |svc: &str| {
        out.audit
            .iter()
            .find(|e| e.service.as_deref() == Some(svc) && e.statement > 1)
            .and_then(|e| e.labels_before.clone())
    };
    ensure_eq!(entering("a"), Some(labels(&["raw", "temperature"])), "entering A");
    ensure_eq!(entering("b"), Some(labels(&["raw", "temperature"])), "entering B");
    ensure_eq!(entering("c"), Some(labels(&["temperature", "merge(10)"])), "entering C");
    Ok(())
}

const OBLIGATION_POLICY: &str = r#"
service { id s endpoint "s" creates_label x }
flow_rule {
  id logX
  when service { endpoint "t" }
  receives x
  decide allow
  require log("x seen", message)
}
"#;

const OBLIGATION_ROUTE: &str = "route r\n1: from(s)\n2: to(t)\n3: to(u)\n";

fn run_with_obligation(succeeds: bool, policy_text: &str) -> Result<dfc_core::runtime::RunOutcome, String> {
    let p = policy(policy_text);
    let route = parse_route(OBLIGATION_ROUTE).map_err(|e| e.to_string())?;
    let services = services();
    let mut obligations = ObligationRegistry::new();
    obligations.register("log", 2, move |action, msg| {
        // `message` is replaced by the message handle
        action.args()[1] == msg.handle() && succeeds
    });
    Engine::new(&p, &services, &obligations)
        .execute(&route, input(), &mut Env::new())
        .map_err(|e| e.to_string())
}

pub fn obligations() -> Check {
    let ok = run_with_obligation(true, OBLIGATION_POLICY)?;
    ensure_eq!(ok.status, RunStatus::Completed, "succeeding obligation: primary effect");
    ensure_eq!(ok.violations.len(), 0, "no violations");

    let failed = run_with_obligation(false, OBLIGATION_POLICY)?;
    ensure_eq!(failed.status, RunStatus::Errored, "failing obligation: default otherwise error");
    ensure_eq!(failed.at_statement, Some(2), "terminates at the deciding statement");
    ensure_eq!(failed.rule.as_deref(), Some("logX"), "rule");

    let explicit = OBLIGATION_POLICY.replace("message)", "message) otherwise drop");
    let dropped = run_with_obligation(false, &explicit)?;
    ensure_eq!(dropped.status, RunStatus::Dropped, "explicit otherwise drop");
    Ok(())
}

pub fn implicit_leak() -> Check {
    for tainted in [false, true] {
        let demo = run_implicit_leak(tainted);
        ensure_eq!(demo.ingest.status, RunStatus::Completed, "ingest status");
        ensure_eq!(demo.program.status, RunStatus::Completed, "program status");
        ensure_eq!(demo.program.violations.len(), 0, "no policy trigger");
        let bit = Term::int(i64::from(tainted));
        ensure_eq!(demo.sink_value, Some(bit), "sink value equals the secret bit");
        ensure_eq!(demo.sink_labels, Some(LabelSet::new()), "sink message unlabelled");
    }
    Ok(())
}
