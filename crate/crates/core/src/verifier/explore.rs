//! Path exploration over (statement, label set) states.
//!
//! A region is the part of the route between a statement and the aggregate
//! that closes the enclosing split (or the end of the route). Its result
//! lists how a message entering with given labels can leave it and which
//! violations it can hit on the way; results are memoized per
//! (statement, labels, closing aggregate). Choices go both ways.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::rc::Rc;

use crate::bindings::ServiceBinding;
use crate::compiler::CompiledPolicy;
use crate::labels::LabelSet;
use crate::logic::Term;
use crate::pdp::{decide_with_default, DecisionRequest};
use crate::policy::Effect;
use crate::route::{Route, Statement, StmtKind, StmtNo};

use super::{Counterexample, TraceStep};

#[derive(Clone, Debug, Default)]
struct Witness {
    trace: Vec<TraceStep>,
    choices: Vec<(StmtNo, bool)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
enum Exit {
    Arrived(LabelSet),
    Completed,
    Dropped,
    Errored,
}

#[derive(Clone, Debug)]
struct Found {
    rule: Option<String>,
    effect: Effect,
    service: String,
    route_service: String,
    statement: StmtNo,
    offending: Vec<Term>,
    labels: LabelSet,
    witness: Witness,
}

type FoundKey = (Option<String>, StmtNo, Vec<Term>);

impl Found {
    fn key(&self) -> FoundKey {
        let mut off = self.offending.clone();
        off.sort();
        (self.rule.clone(), self.statement, off)
    }
}

#[derive(Default, Debug)]
struct Region {
    exits: Vec<(Exit, Witness)>,
    found: Vec<Found>,
}

pub(super) struct Explorer<'a> {
    pub route: &'a Route,
    pub policy: &'a CompiledPolicy,
    pub bindings: &'a BTreeMap<StmtNo, ServiceBinding>,
    pub joins: &'a HashMap<StmtNo, StmtNo>,
    pub names: &'a BTreeMap<StmtNo, String>,
    pub default_effect: Effect,
    pub all_paths: bool,
    memo: HashMap<(StmtNo, LabelSet, Option<StmtNo>), Rc<Region>>,
}

/// Accumulates a region result, deduplicating unless every path is wanted.
struct Collector {
    all_paths: bool,
    region: Region,
    exits_seen: HashSet<Exit>,
    found_seen: HashSet<FoundKey>,
}

impl Collector {
    fn new(all_paths: bool) -> Self {
        Collector {
            all_paths,
            region: Region::default(),
            exits_seen: HashSet::new(),
            found_seen: HashSet::new(),
        }
    }

    fn exit(&mut self, exit: Exit, w: Witness) {
        if self.all_paths || self.exits_seen.insert(exit.clone()) {
            self.region.exits.push((exit, w));
        }
    }

    fn found(&mut self, f: Found) {
        if self.all_paths || self.found_seen.insert(f.key()) {
            self.region.found.push(f);
        }
    }

    fn has_found(&self, key: &FoundKey) -> bool {
        !self.all_paths && self.found_seen.contains(key)
    }
}

fn prefixed(prefix: &Witness, w: &Witness) -> Witness {
    let mut trace = prefix.trace.clone();
    trace.extend(w.trace.iter().cloned());
    let mut choices = prefix.choices.clone();
    choices.extend(w.choices.iter().copied());
    Witness { trace, choices }
}

impl<'a> Explorer<'a> {
    pub fn new(
        route: &'a Route,
        policy: &'a CompiledPolicy,
        bindings: &'a BTreeMap<StmtNo, ServiceBinding>,
        joins: &'a HashMap<StmtNo, StmtNo>,
        names: &'a BTreeMap<StmtNo, String>,
        default_effect: Effect,
        all_paths: bool,
    ) -> Self {
        Explorer {
            route,
            policy,
            bindings,
            joins,
            names,
            default_effect,
            all_paths,
            memo: HashMap::new(),
        }
    }

    /// Number of memoized states.
    pub fn states(&self) -> usize {
        self.memo.len()
    }

    fn step(&self, n: StmtNo, labels: &LabelSet) -> TraceStep {
        TraceStep {
            statement: n,
            node: self.names[&n].clone(),
            kind: self.route.statements()[&n].kind(),
            labels: labels.clone(),
        }
    }

    fn successor(&self, n: StmtNo) -> Option<StmtNo> {
        self.route.successors(n).expect("statement exists").first().copied()
    }

    /// Counterexamples over every path from the entry.
    pub fn run(&mut self) -> Vec<Counterexample> {
        let entry = self.route.entry();
        let labels = self.bindings[&entry].transform.initial();
        let head = Witness {
            trace: vec![self.step(entry, &labels)],
            choices: Vec::new(),
        };
        let found = match self.successor(entry) {
            Some(next) => {
                let sub = self.region(next, labels, None);
                sub.found
                    .iter()
                    .map(|f| {
                        let mut f = f.clone();
                        f.witness = prefixed(&head, &f.witness);
                        f
                    })
                    .collect()
            }
            None => Vec::new(),
        };
        found
            .into_iter()
            .map(|f| Counterexample {
                rule: f.rule,
                effect: f.effect,
                service: f.service,
                route_service: f.route_service,
                statement: f.statement,
                offending_labels: f.offending,
                arrival_labels: f.labels,
                trace: f.witness.trace,
                choices: f.witness.choices,
            })
            .collect()
    }

    fn region(&mut self, n: StmtNo, labels: LabelSet, stop: Option<StmtNo>) -> Rc<Region> {
        let key = (n, labels, stop);
        if let Some(r) = self.memo.get(&key) {
            return r.clone();
        }
        let r = Rc::new(self.compute(n, &key.1, stop));
        self.memo.insert(key, r.clone());
        r
    }

    fn compute(&mut self, n: StmtNo, labels: &LabelSet, stop: Option<StmtNo>) -> Region {
        let mut out = Collector::new(self.all_paths);
        if Some(n) == stop {
            out.exit(Exit::Arrived(labels.clone()), Witness::default());
            return out.region;
        }
        let step = self.step(n, labels);
        let stmt = self.route.statements()[&n].clone();
        match stmt {
            Statement::To(svc) | Statement::Bean(svc) => {
                let binding = &self.bindings[&n];
                let d = decide_with_default(
                    self.policy,
                    &DecisionRequest::new(&binding.target, labels),
                    self.default_effect,
                );
                if d.effect != Effect::Allow {
                    let rule = d.deciding_rule().map(str::to_string);
                    let offending = d
                        .matched
                        .iter()
                        .find(|m| Some(&m.name) == rule.as_ref())
                        .map(|m| m.labels.clone())
                        .unwrap_or_default();
                    let service = rule
                        .as_deref()
                        .and_then(|r| self.policy.rule(r))
                        .map(|r| self.policy.target_service(r).decl.id.clone())
                        .unwrap_or_else(|| svc.clone());
                    let w = Witness {
                        trace: vec![step],
                        choices: Vec::new(),
                    };
                    out.found(Found {
                        rule,
                        effect: d.effect,
                        service,
                        route_service: svc,
                        statement: n,
                        offending,
                        labels: labels.clone(),
                        witness: w.clone(),
                    });
                    let exit = if d.effect == Effect::Drop {
                        Exit::Dropped
                    } else {
                        Exit::Errored
                    };
                    out.exit(exit, w);
                    return out.region;
                }
                let after = binding.transform.apply(labels);
                let prefix = Witness {
                    trace: vec![step],
                    choices: Vec::new(),
                };
                self.continue_with(&mut out, prefix, self.successor(n), after, stop);
            }
            Statement::Choice {
                then_target,
                else_target,
                ..
            } => {
                for (target, b) in [(then_target, true), (else_target, false)] {
                    let prefix = Witness {
                        trace: vec![step.clone()],
                        choices: vec![(n, b)],
                    };
                    self.continue_with(&mut out, prefix, Some(target), labels.clone(), stop);
                }
            }
            Statement::Split(_) => self.split(&mut out, n, labels, stop, step),
            Statement::From(_)
            | Statement::Aggregate(_)
            | Statement::SetMsgProp(..)
            | Statement::SetEnvProp(..) => {
                let prefix = Witness {
                    trace: vec![step],
                    choices: Vec::new(),
                };
                self.continue_with(&mut out, prefix, self.successor(n), labels.clone(), stop);
            }
        }
        out.region
    }

    fn continue_with(
        &mut self,
        out: &mut Collector,
        prefix: Witness,
        next: Option<StmtNo>,
        labels: LabelSet,
        stop: Option<StmtNo>,
    ) {
        let Some(next) = next else {
            out.exit(Exit::Completed, prefix);
            return;
        };
        let sub = self.region(next, labels, stop);
        for f in &sub.found {
            if out.has_found(&f.key()) {
                continue;
            }
            let mut f = f.clone();
            f.witness = prefixed(&prefix, &f.witness);
            out.found(f);
        }
        for (e, w) in &sub.exits {
            out.exit(e.clone(), prefixed(&prefix, w));
        }
    }

    fn split(
        &mut self,
        out: &mut Collector,
        n: StmtNo,
        labels: &LabelSet,
        stop: Option<StmtNo>,
        step: TraceStep,
    ) {
        let join = self.joins[&n];
        let heads = self.route.successors(n).expect("statement exists");
        let branches: Vec<Rc<Region>> = heads
            .iter()
            .map(|&h| self.region(h, labels.clone(), Some(join)))
            .collect();
        let head = Witness {
            trace: vec![step],
            choices: Vec::new(),
        };
        // combinations of non-error exits of the branches run so far
        let mut partial: Vec<Vec<(Exit, Witness)>> = vec![Vec::new()];
        for branch in &branches {
            let mut extended = Vec::new();
            for combo in &partial {
                let mut pre = head.clone();
                for (_, w) in combo {
                    pre.choices.extend(w.choices.iter().copied());
                }
                for f in &branch.found {
                    if out.has_found(&f.key()) {
                        continue;
                    }
                    let mut f = f.clone();
                    f.witness = prefixed(&pre, &f.witness);
                    out.found(f);
                }
                for (e, w) in &branch.exits {
                    if *e == Exit::Errored {
                        out.exit(Exit::Errored, prefixed(&pre, w));
                        continue;
                    }
                    let mut c = combo.clone();
                    c.push((e.clone(), w.clone()));
                    extended.push(c);
                }
            }
            if !self.all_paths {
                // combinations with equal exit vectors behave the same
                let mut seen = HashSet::new();
                extended.retain(|c| seen.insert(c.iter().map(|(e, _)| e.clone()).collect::<Vec<_>>()));
            }
            partial = extended;
        }

        for combo in partial {
            let mut choices = Vec::new();
            for (_, w) in &combo {
                choices.extend(w.choices.iter().copied());
            }
            let arrived: Vec<(&LabelSet, &Witness)> = combo
                .iter()
                .filter_map(|(e, w)| match e {
                    Exit::Arrived(l) => Some((l, w)),
                    _ => None,
                })
                .collect();
            if arrived.is_empty() {
                out.exit(
                    Exit::Dropped,
                    Witness {
                        trace: head.trace.clone(),
                        choices,
                    },
                );
                continue;
            }
            let union = arrived
                .iter()
                .fold(LabelSet::new(), |acc, (l, _)| acc.union(l));
            let join_step = self.step(join, &union);
            // the branch shown in traces: the one carrying most of `wanted`
            let shown = |wanted: &[Term]| -> &Witness {
                let mut best = arrived[0].1;
                let mut best_score = 0;
                for (l, w) in &arrived {
                    let score = wanted.iter().filter(|t| l.contains(t)).count();
                    if score > best_score {
                        best = w;
                        best_score = score;
                    }
                }
                best
            };
            let prefix_for = |wanted: &[Term]| -> Witness {
                let mut trace = head.trace.clone();
                trace.extend(shown(wanted).trace.iter().cloned());
                trace.push(join_step.clone());
                Witness {
                    trace,
                    choices: choices.clone(),
                }
            };
            match self.successor(join) {
                None => out.exit(Exit::Completed, prefix_for(&[])),
                Some(next) => {
                    let sub = self.region(next, union.clone(), stop);
                    for f in &sub.found {
                        if out.has_found(&f.key()) {
                            continue;
                        }
                        let mut f = f.clone();
                        f.witness = prefixed(&prefix_for(&f.offending), &f.witness);
                        out.found(f);
                    }
                    for (e, w) in &sub.exits {
                        out.exit(e.clone(), prefixed(&prefix_for(&[]), w));
                    }
                }
            }
        }
    }
}

/// Kind used when rendering a trace step.
pub(super) fn creates(kind: StmtKind) -> bool {
    kind == StmtKind::From
}
