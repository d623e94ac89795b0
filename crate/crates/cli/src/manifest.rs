//! Stub-service manifest for `dfc run`.
//!
//! ```toml
//! [services.sensor]
//! behavior = "constant"
//! payload = "21.5"
//!
//! [services.tagger]
//! behavior = "set_props"
//! props = { unit = "celsius" }
//!
//! [services.mqueue]
//! behavior = "sink"
//!
//! [obligations]
//! log = "succeed"
//! "notify/1" = "fail"
//!
//! [input]
//! payload = "trigger"
//! props = { value = "true" }
//! ```
//!
//! Property values are term text (`"true"`, `"42"`, `"f(a)"`).

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

use anyhow::{bail, Context, Result};
use dfc_core::logic::{parse_term, Term};
use dfc_core::runtime::{Input, ObligationRegistry, Props, ServiceRegistry};
use serde::Deserialize;

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum Behavior {
    /// Passes payload and properties through.
    Identity,
    /// Replaces the payload.
    Constant,
    /// Identity that also records every payload it receives.
    Sink,
    /// Always fails.
    Fail,
    /// Identity that sets the listed properties.
    SetProps,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceSpec {
    pub behavior: Behavior,
    #[serde(default)]
    pub payload: Option<String>,
    #[serde(default)]
    pub props: BTreeMap<String, String>,
    #[serde(default)]
    pub message: Option<String>,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum ObligationOutcome {
    Succeed,
    Fail,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputSpec {
    #[serde(default)]
    pub payload: String,
    #[serde(default)]
    pub props: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    #[serde(default)]
    pub services: BTreeMap<String, ServiceSpec>,
    #[serde(default)]
    pub obligations: BTreeMap<String, ObligationOutcome>,
    #[serde(default)]
    pub input: InputSpec,
}

/// Payloads received by sink services, per service.
pub type SinkLog = Arc<Mutex<BTreeMap<String, Vec<String>>>>;

fn props(map: &BTreeMap<String, String>) -> Result<Props> {
    map.iter()
        .map(|(k, v)| {
            let t = parse_term(v).with_context(|| format!("property {k}: bad term {v:?}"))?;
            if !t.is_ground() {
                bail!("property {k}: {v:?} is not ground");
            }
            Ok((k.clone(), t))
        })
        .collect()
}

/// Largest obligation arity registered for names given without `/N`.
const MAX_ARITY: usize = 8;

impl Manifest {
    pub fn parse(text: &str) -> Result<Manifest> {
        Ok(toml::from_str(text)?)
    }

    pub fn input(&self) -> Result<Input> {
        Ok(Input {
            payload: self.input.payload.clone().into_bytes(),
            props: props(&self.input.props)?,
        })
    }

    pub fn services(&self) -> Result<(ServiceRegistry, SinkLog)> {
        let mut reg = ServiceRegistry::new();
        let sinks: SinkLog = Arc::default();
        for (name, spec) in &self.services {
            let extra = props(&spec.props).with_context(|| format!("service {name}"))?;
            match spec.behavior {
                Behavior::Identity => reg.register_identity(name),
                Behavior::Constant => {
                    let Some(payload) = spec.payload.clone() else {
                        bail!("service {name}: constant needs a payload");
                    };
                    reg.register(name, move |_, p| Ok((payload.clone().into_bytes(), p.clone())));
                }
                Behavior::Sink => {
                    let sinks = sinks.clone();
                    let me = name.clone();
                    reg.register(name, move |payload, p| {
                        sinks
                            .lock()
                            .unwrap_or_else(|e| e.into_inner())
                            .entry(me.clone())
                            .or_default()
                            .push(String::from_utf8_lossy(payload).into_owned());
                        Ok((payload.to_vec(), p.clone()))
                    });
                }
                Behavior::Fail => {
                    let msg = spec.message.clone().unwrap_or_else(|| "stub failure".into());
                    reg.register(name, move |_, _| Err(msg.clone()));
                }
                Behavior::SetProps => {
                    reg.register(name, move |payload, p| {
                        let mut p = p.clone();
                        p.extend(extra.clone());
                        Ok((payload.to_vec(), p))
                    });
                }
            }
        }
        Ok((reg, sinks))
    }

    pub fn obligations(&self) -> Result<ObligationRegistry> {
        let mut reg = ObligationRegistry::new();
        for (key, outcome) in &self.obligations {
            let ok = *outcome == ObligationOutcome::Succeed;
            let (name, arities) = match key.split_once('/') {
                Some((n, a)) => {
                    let a: usize = a.parse().with_context(|| format!("obligation {key}: bad arity"))?;
                    (n, a..=a)
                }
                None => (key.as_str(), 0..=MAX_ARITY),
            };
            for arity in arities {
                reg.register(name, arity, move |_: &Term, _| ok);
            }
        }
        Ok(reg)
    }
}
