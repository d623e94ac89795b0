//! The implicit-leak program: `public` ends up equal to a secret bit that
//! is never assigned to it, so taint tracking sees no labelled data reach
//! the public sink.
//!
//! ```text
//! tainted := ...;
//! public := 1;
//! tmp := 0;
//! if tainted then tmp := 1;
//! if tmp != 1 then public := 0
//! ```
//!
//! An ingest route reads the secret (labelled `secret`) and stores its bit
//! in Δ as `tainted`; the program route then runs on the same Δ.

use std::sync::{Arc, Mutex};

use crate::compiler::{compile, CompiledPolicy};
use crate::labels::LabelSet;
use crate::logic::Term;
use crate::policy::parse_policy;
use crate::route::{parse_route, Route};

use super::{Engine, Env, Input, ObligationRegistry, Props, RunOutcome, ServiceRegistry};

const POLICY: &str = r#"
service {
  id secret_sensor
  endpoint "sensor://secret"
  creates_label secret
}
service {
  id public_sink
  endpoint "https://public\.example/.*"
}
flow_rule {
  id noSecretsInPublic
  when public_sink
  receives secret
  decide drop
}
"#;

const INGEST: &str = r#"route ingest
endpoint secret_sensor "sensor://secret"
1: from(secret_sensor)
2: set_env_prop(tainted, msg(value))
3: to(vault)
"#;

const PROGRAM: &str = r#"route implicit_leak
endpoint public_sink "https://public.example/feed"
1: from(trigger)
2: set_msg_prop(public, 1)
3: set_msg_prop(tmp, 0)
4: when env_prop(tainted, true) then goto 5 otherwise goto 6
5: set_msg_prop(tmp, 1)
6: when not(msg_prop(tmp, 1)) then goto 7 otherwise goto 8
7: set_msg_prop(public, 0)
8: to(public_sink)
"#;

pub fn leak_demo_policy() -> CompiledPolicy {
    compile(&parse_policy(POLICY).expect("demo policy parses"))
}

pub fn ingest_route() -> Route {
    parse_route(INGEST).expect("ingest route parses")
}

pub fn implicit_leak_route() -> Route {
    parse_route(PROGRAM).expect("demo route parses")
}

/// Identity handlers for every demo service; `public_sink` also records
/// the `public` property it receives.
pub fn leak_demo_services() -> (ServiceRegistry, Arc<Mutex<Vec<Term>>>) {
    let mut reg = ServiceRegistry::new();
    for s in ["secret_sensor", "vault", "trigger"] {
        reg.register_identity(s);
    }
    let seen = Arc::new(Mutex::new(Vec::new()));
    let sink = seen.clone();
    reg.register("public_sink", move |p, props: &Props| {
        if let Some(v) = props.get("public") {
            sink.lock().unwrap_or_else(|e| e.into_inner()).push(v.clone());
        }
        Ok((p.to_vec(), props.clone()))
    });
    (reg, seen)
}

#[derive(Debug, Clone)]
pub struct LeakDemo {
    pub ingest: RunOutcome,
    pub program: RunOutcome,
    /// `public` as received by the sink.
    pub sink_value: Option<Term>,
    /// Labels of the message entering the sink.
    pub sink_labels: Option<LabelSet>,
}

/// Runs the ingest route with the given secret bit, then `program`, on one
/// shared Δ.
pub fn taint_permissiveness_demo(program: &Route, tainted: bool) -> LeakDemo {
    let policy = leak_demo_policy();
    let (services, seen) = leak_demo_services();
    let obligations = ObligationRegistry::new();
    let engine = Engine::new(&policy, &services, &obligations);
    let mut env = Env::new();
    let secret = Input {
        payload: b"reading".to_vec(),
        props: [("value".to_string(), Term::atom(if tainted { "true" } else { "false" }))].into(),
    };
    let ingest = engine
        .execute(&ingest_route(), secret, &mut env)
        .expect("demo services registered");
    let program_out = engine
        .execute(program, Input::default(), &mut env)
        .expect("demo services registered");
    let sink_labels = program_out
        .audit
        .iter()
        .find(|e| e.service.as_deref() == Some("public_sink"))
        .and_then(|e| e.labels_before.clone());
    let sink_value = seen.lock().unwrap_or_else(|e| e.into_inner()).last().cloned();
    LeakDemo {
        ingest,
        program: program_out,
        sink_value,
        sink_labels,
    }
}

/// [`taint_permissiveness_demo`] on the bundled program.
pub fn run_implicit_leak(tainted: bool) -> LeakDemo {
    taint_permissiveness_demo(&implicit_leak_route(), tainted)
}
