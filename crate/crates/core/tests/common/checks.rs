//! Randomized cross-checks shared by the property tests and the acceptance
//! suite.

use std::collections::BTreeSet;

use rand::rngs::StdRng;
use rand::SeedableRng;

use dfc_core::compiler::compile;
use dfc_core::logic::{KnowledgeBase, Literal, SolveLimits, Term};
use dfc_core::policy::{parse_policy, Effect};
use dfc_core::route::{parse_route, Statement};
use dfc_core::runtime::{
    ChoiceMode, Engine, Env, Input, ObligationRegistry, RunConfig, RunStatus, ServiceRegistry,
};
use dfc_core::verifier::{verify_with, VerifyOptions};

use super::datalog::{fixpoint, random_program};
use super::gen::{random_policy, random_route, SERVICES};

/// Solution sets of every predicate against the bottom-up least model.
pub fn logic_case(seed: u64) -> Result<(), String> {
    let mut rng = StdRng::seed_from_u64(seed);
    let prog = random_program(&mut rng);
    let text = prog.text();
    let mut kb = KnowledgeBase::with_standard_builtins();
    kb.load_str(&text).map_err(|e| format!("{e}\n{text}"))?;
    let model = fixpoint(&prog);
    for (pred, arity) in &prog.preds {
        let vars: Vec<String> = (0..*arity).map(|i| format!("A{i}")).collect();
        let goal = Term::compound(pred, vars.iter().map(|v| Term::var(v)).collect());
        let mut got = BTreeSet::new();
        for s in kb.solve(&[Literal::Pos(goal)], SolveLimits::default()) {
            let s = s.map_err(|e| format!("{pred}: {e}\n{text}"))?;
            got.insert(vars.iter().map(|v| s[v].to_string()).collect::<Vec<_>>());
        }
        if got != model[pred] {
            return Err(format!(
                "seed {seed}, {pred}: solve {got:?} vs fixpoint {:?}\n{text}",
                model[pred]
            ));
        }
    }
    Ok(())
}

pub struct AgreementCase {
    pub route: String,
    pub policy: String,
    pub invalid: bool,
}

/// verify=valid iff no run over every choice valuation is dropped or
/// errored; every counterexample replays; the memo stays within bounds.
pub fn agreement_case(seed: u64) -> Result<AgreementCase, String> {
    let mut rng = StdRng::seed_from_u64(seed);
    let route_text = random_route(&mut rng, 10, 3);
    let policy_text = random_policy(&mut rng, 10, 6);
    let ctx = |msg: String| format!("seed {seed}: {msg}\n{route_text}\n{policy_text}");
    let route = parse_route(&route_text).map_err(|e| ctx(e.to_string()))?;
    let policy = compile(&parse_policy(&policy_text).map_err(|e| ctx(e.to_string()))?);
    let default_effect = if seed % 4 == 3 { Effect::Drop } else { Effect::Allow };
    let report = verify_with(
        &route,
        &policy,
        VerifyOptions {
            default_effect,
            all_paths: false,
        },
    );

    let mut services = ServiceRegistry::new();
    for s in std::iter::once("src").chain(SERVICES) {
        services.register_identity(s);
    }
    let obligations = ObligationRegistry::new();
    let run = |script: Vec<bool>| {
        let engine = Engine::new(&policy, &services, &obligations).with_config(RunConfig {
            default_effect,
            choices: ChoiceMode::Script(script),
            ..RunConfig::default()
        });
        engine
            .execute(&route, Input::default(), &mut Env::new())
            .expect("all services registered")
    };

    let n_choices = route
        .statements()
        .values()
        .filter(|s| matches!(s, Statement::Choice { .. }))
        .count();
    let mut dynamic_bad = false;
    for mask in 0..(1u32 << n_choices) {
        let script = (0..n_choices).map(|i| mask & (1 << i) != 0).collect();
        if run(script).status != RunStatus::Completed {
            dynamic_bad = true;
            break;
        }
    }
    let invalid = !report.verdict.is_valid();
    if invalid != dynamic_bad {
        return Err(ctx(format!(
            "verify invalid={invalid} but some dynamic run failed={dynamic_bad}"
        )));
    }

    for ce in report.verdict.counterexamples() {
        let out = run(ce.choices.iter().map(|(_, b)| *b).collect());
        let replayed = out
            .violations
            .iter()
            .any(|v| v.statement == ce.statement && v.labels == ce.arrival_labels);
        if !replayed {
            return Err(ctx(format!("counterexample did not replay: {ce:?}\n{:?}", out.violations)));
        }
        if ce.trace.first().map(|s| s.statement) != Some(route.entry())
            || ce.trace.last().map(|s| s.statement) != Some(ce.statement)
        {
            return Err(ctx(format!("trace endpoints wrong: {ce:?}")));
        }
    }

    let bound = report.stats.statements << 6;
    if report.stats.states > bound {
        return Err(ctx(format!("{} states over bound {bound}", report.stats.states)));
    }
    Ok(AgreementCase {
        route: route_text,
        policy: policy_text,
        invalid,
    })
}
