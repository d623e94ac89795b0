use std::collections::{BTreeMap, HashMap, VecDeque};

use crate::bindings::{bind_route, ServiceBinding};
use crate::labels::LabelSet;
use crate::logic::Term;
use crate::pdp::{decide_with_default, DecisionRequest};
use crate::policy::Effect;
use crate::route::{split_joins, Route, Statement, StmtNo};

use super::eval::{eval_condition, eval_value};
use super::{
    AuditEvent, ChoiceMode, Engine, Env, Input, Message, MessageId, RunOutcome, RunStatus,
    RuntimeError, Violation,
};

/// Pending branches of a split and the messages that reached its join.
#[derive(Debug, Clone)]
struct JoinFrame {
    join: StmtNo,
    pending: VecDeque<(StmtNo, MessageId)>,
    arrived: Vec<MessageId>,
}

#[derive(Debug, Clone)]
struct Halt {
    status: RunStatus,
    at: StmtNo,
    rule: Option<String>,
    reason: String,
}

/// Small-step interpreter. Each [`step`](Machine::step) executes one
/// statement; split branches run one after another, each to the split's
/// aggregate, before the aggregate itself runs.
pub struct Machine<'r> {
    engine: &'r Engine<'r>,
    route: &'r Route,
    bindings: BTreeMap<StmtNo, ServiceBinding>,
    warnings: Vec<String>,
    joins: HashMap<StmtNo, StmtNo>,
    env: &'r mut Env,
    input: Option<Input>,
    messages: BTreeMap<MessageId, Message>,
    next_id: MessageId,
    pc: Option<StmtNo>,
    next: Option<StmtNo>,
    current: Option<MessageId>,
    frames: Vec<JoinFrame>,
    script: Option<VecDeque<bool>>,
    choices: Vec<(StmtNo, bool)>,
    audit: Vec<AuditEvent>,
    violations: Vec<Violation>,
    pdp_calls: usize,
    halted: Option<Halt>,
    finished: bool,
}

impl<'r> Machine<'r> {
    pub(super) fn new(
        engine: &'r Engine<'r>,
        route: &'r Route,
        input: Input,
        env: &'r mut Env,
    ) -> Result<Self, RuntimeError> {
        for s in route.services() {
            if !engine.services.contains(s) {
                return Err(RuntimeError::MissingHandler(s.to_string()));
            }
        }
        let (bindings, warnings) = bind_route(route, engine.policy);
        let script = match &engine.config.choices {
            ChoiceMode::Evaluate => None,
            ChoiceMode::Script(s) => Some(s.iter().copied().collect()),
        };
        Ok(Machine {
            engine,
            route,
            bindings,
            warnings,
            joins: split_joins(route),
            env,
            input: Some(input),
            messages: BTreeMap::new(),
            next_id: 1,
            pc: None,
            next: Some(route.entry()),
            current: None,
            frames: Vec::new(),
            script,
            choices: Vec::new(),
            audit: Vec::new(),
            violations: Vec::new(),
            pdp_calls: 0,
            halted: None,
            finished: false,
        })
    }

    /// Statement executed last.
    pub fn pc(&self) -> Option<StmtNo> {
        self.pc
    }

    /// Statement the current thread executes next (ι).
    pub fn next(&self) -> Option<StmtNo> {
        self.next
    }

    /// Message of the current thread.
    pub fn current(&self) -> Option<&Message> {
        self.current.and_then(|id| self.messages.get(&id))
    }

    pub fn messages(&self) -> &BTreeMap<MessageId, Message> {
        &self.messages
    }

    /// τ: labels of every live message.
    pub fn taints(&self) -> BTreeMap<MessageId, LabelSet> {
        self.messages
            .iter()
            .map(|(id, m)| (*id, m.labels.clone()))
            .collect()
    }

    /// Δ
    pub fn env(&self) -> &Env {
        self.env
    }

    pub fn audit(&self) -> &[AuditEvent] {
        &self.audit
    }

    pub fn pdp_calls(&self) -> usize {
        self.pdp_calls
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    /// Executes the next statement. Returns false once the run is over.
    pub fn step(&mut self) -> bool {
        loop {
            if self.finished {
                return false;
            }
            let Some(n) = self.next else {
                // the current thread is over (terminal statement or drop)
                if self.frames.is_empty() {
                    self.finished = true;
                    return false;
                }
                if self.next_branch() {
                    return true;
                }
                continue;
            };
            if self.frames.last().is_some_and(|f| f.join == n) {
                let msg = self.current.take().expect("arriving thread carries a message");
                self.frames.last_mut().expect("checked").arrived.push(msg);
                self.next = None;
                if self.next_branch() {
                    return true;
                }
                continue;
            }
            self.exec(n);
            return true;
        }
    }

    /// Starts the next pending branch, or runs the aggregate when none is
    /// left. Returns true if the aggregate executed.
    fn next_branch(&mut self) -> bool {
        let frame = self.frames.last_mut().expect("caller checked");
        if let Some((head, msg)) = frame.pending.pop_front() {
            self.current = Some(msg);
            self.next = Some(head);
            return false;
        }
        let frame = self.frames.pop().expect("caller checked");
        let join = frame.join;
        self.pc = Some(join);
        if frame.arrived.is_empty() {
            // every branch was dropped
            self.record(join, None, None, None, None, None, Some("no branch reached the aggregate".into()));
            self.current = None;
            self.next = None;
            return true;
        }
        let mut labels = LabelSet::new();
        let mut props = BTreeMap::new();
        let mut payload = Vec::new();
        for id in &frame.arrived {
            let m = self.messages.remove(id).expect("arrived messages are live");
            labels = labels.union(&m.labels);
            props.extend(m.props);
            payload.extend(m.payload);
        }
        let id = self.fresh_id();
        self.messages.insert(
            id,
            Message {
                id,
                payload,
                props,
                labels: labels.clone(),
            },
        );
        self.current = Some(id);
        self.next = self.successor(join);
        let detail = format!("joined messages {:?}", frame.arrived);
        self.record(join, Some(id), None, Some(labels), None, None, Some(detail));
        true
    }

    fn fresh_id(&mut self) -> MessageId {
        let id = self.next_id;
        self.next_id += 1;
        id
    }

    fn successor(&self, n: StmtNo) -> Option<StmtNo> {
        self.route
            .successors(n)
            .expect("statement exists")
            .first()
            .copied()
    }

    #[allow(clippy::too_many_arguments)]
    fn record(
        &mut self,
        statement: StmtNo,
        message: Option<MessageId>,
        labels_before: Option<LabelSet>,
        labels_after: Option<LabelSet>,
        decision: Option<Effect>,
        rule: Option<String>,
        detail: Option<String>,
    ) {
        let stmt = &self.route.statements()[&statement];
        self.audit.push(AuditEvent {
            seq: self.audit.len(),
            statement,
            kind: stmt.kind(),
            service: stmt.service().map(str::to_string),
            message,
            labels_before,
            labels_after,
            decision,
            rule,
            detail,
        });
    }

    fn halt(&mut self, status: RunStatus, at: StmtNo, rule: Option<String>, reason: String) {
        if status == RunStatus::Errored || self.halted.is_none() {
            self.halted = Some(Halt {
                status,
                at,
                rule,
                reason,
            });
        }
        if status == RunStatus::Errored {
            self.finished = true;
        }
        self.current = None;
        self.next = None;
    }

    fn error(&mut self, at: StmtNo, reason: String) {
        self.record(at, self.current, None, None, None, None, Some(reason.clone()));
        self.halt(RunStatus::Errored, at, None, reason);
    }

    fn exec(&mut self, n: StmtNo) {
        self.pc = Some(n);
        let stmt = self.route.statements()[&n].clone();
        match stmt {
            Statement::From(svc) => self.exec_from(n, &svc),
            Statement::To(svc) | Statement::Bean(svc) => self.exec_service(n, &svc),
            Statement::Choice {
                cond,
                then_target,
                else_target,
            } => {
                let msg = self.current.expect("threads carry a message");
                let outcome = match &mut self.script {
                    Some(script) => Ok(script.pop_front().unwrap_or(false)),
                    None => eval_condition(
                        &cond,
                        self.env,
                        &self.messages[&msg].props,
                        self.engine.config.depth_limit,
                    ),
                };
                match outcome {
                    Ok(b) => {
                        self.choices.push((n, b));
                        self.next = Some(if b { then_target } else { else_target });
                        let labels = self.messages[&msg].labels.clone();
                        self.record(
                            n,
                            Some(msg),
                            Some(labels.clone()),
                            Some(labels),
                            None,
                            None,
                            Some(format!("condition {}", if b { "holds" } else { "fails" })),
                        );
                    }
                    Err(e) => self.error(n, e),
                }
            }
            Statement::Split(_) => {
                let msg_id = self.current.expect("threads carry a message");
                let original = self.messages.remove(&msg_id).expect("current message is live");
                let heads = self.route.successors(n).expect("statement exists");
                let mut copies = VecDeque::new();
                for head in heads {
                    let id = self.fresh_id();
                    self.messages.insert(
                        id,
                        Message {
                            id,
                            ..original.clone()
                        },
                    );
                    copies.push_back((head, id));
                }
                let ids: Vec<MessageId> = copies.iter().map(|(_, id)| *id).collect();
                let (head, first) = copies.pop_front().expect("splits have branches");
                self.frames.push(JoinFrame {
                    join: self.joins[&n],
                    pending: copies,
                    arrived: Vec::new(),
                });
                self.current = Some(first);
                self.next = Some(head);
                self.record(
                    n,
                    Some(msg_id),
                    Some(original.labels.clone()),
                    Some(original.labels),
                    None,
                    None,
                    Some(format!("copies {ids:?}")),
                );
            }
            Statement::Aggregate(_) => {
                self.error(n, "aggregate reached outside its split".into());
            }
            Statement::SetMsgProp(key, expr) => {
                let msg = self.current.expect("threads carry a message");
                match eval_value(&expr, self.env, &self.messages[&msg].props) {
                    Ok(v) => {
                        let m = self.messages.get_mut(&msg).expect("live");
                        m.props.insert(key.clone(), v.clone());
                        let labels = m.labels.clone();
                        self.next = self.successor(n);
                        self.record(n, Some(msg), Some(labels.clone()), Some(labels), None, None, Some(format!("{key} := {v}")));
                    }
                    Err(e) => self.error(n, e),
                }
            }
            Statement::SetEnvProp(key, expr) => {
                let msg = self.current.expect("threads carry a message");
                match eval_value(&expr, self.env, &self.messages[&msg].props) {
                    Ok(v) => {
                        self.env.insert(key.clone(), v.clone());
                        let labels = self.messages[&msg].labels.clone();
                        self.next = self.successor(n);
                        self.record(n, Some(msg), Some(labels.clone()), Some(labels), None, None, Some(format!("{key} := {v}")));
                    }
                    Err(e) => self.error(n, e),
                }
            }
        }
    }

    fn exec_from(&mut self, n: StmtNo, svc: &str) {
        let input = self.input.take().unwrap_or_default();
        let handler = self.engine.services.get(svc).expect("checked at start");
        match handler(&input.payload, &input.props) {
            Ok((payload, props)) => {
                let labels = self.bindings[&n].transform.initial();
                let id = self.fresh_id();
                self.messages.insert(
                    id,
                    Message {
                        id,
                        payload,
                        props,
                        labels: labels.clone(),
                    },
                );
                self.current = Some(id);
                self.next = self.successor(n);
                self.record(n, Some(id), None, Some(labels), None, None, None);
            }
            Err(e) => self.error(n, format!("service {svc} failed: {e}")),
        }
    }

    fn exec_service(&mut self, n: StmtNo, svc: &str) {
        let msg_id = self.current.expect("threads carry a message");
        let binding = self.bindings[&n].clone();
        let msg = self.messages[&msg_id].clone();
        let before = msg.labels.clone();

        self.pdp_calls += 1;
        let decision = decide_with_default(
            self.engine.policy,
            &DecisionRequest::new(&binding.target, &msg.labels).with_message(msg.handle()),
            self.engine.config.default_effect,
        );
        let mut effect = decision.effect;
        let mut rule = decision.deciding_rule().map(str::to_string);
        let mut offending: Vec<Term> = decision
            .matched
            .iter()
            .find(|m| Some(&m.name) == rule.as_ref())
            .map(|m| m.labels.clone())
            .unwrap_or_default();
        let mut detail = None;
        for o in &decision.obligations {
            if !self.engine.obligations.run(&o.action, &msg) {
                effect = o.otherwise;
                rule = Some(o.rule.clone());
                offending = decision
                    .matched
                    .iter()
                    .find(|m| m.name == o.rule)
                    .map(|m| m.labels.clone())
                    .unwrap_or_default();
                detail = Some(format!("obligation {} failed", o.action));
                break;
            }
        }

        match effect {
            Effect::Allow => {
                let handler = self.engine.services.get(svc).expect("checked at start");
                match handler(&msg.payload, &msg.props) {
                    Ok((payload, props)) => {
                        let after = binding.transform.apply(&before);
                        let m = self.messages.get_mut(&msg_id).expect("live");
                        m.payload = payload;
                        m.props = props;
                        m.labels = after.clone();
                        self.next = self.successor(n);
                        self.record(n, Some(msg_id), Some(before), Some(after), Some(effect), rule, detail);
                    }
                    Err(e) => {
                        let reason = format!("service {svc} failed: {e}");
                        self.record(n, Some(msg_id), Some(before), None, Some(effect), rule, Some(reason.clone()));
                        self.halt(RunStatus::Errored, n, None, reason);
                    }
                }
            }
            Effect::Drop | Effect::Error => {
                self.violations.push(Violation {
                    statement: n,
                    service: svc.to_string(),
                    effect,
                    rule: rule.clone(),
                    labels: before.clone(),
                    offending,
                });
                let reason = match (&rule, effect) {
                    (Some(r), _) => format!("{effect} by rule {r}"),
                    (None, _) => format!("{effect} by default decision"),
                };
                self.record(n, Some(msg_id), Some(before), None, Some(effect), rule.clone(), detail.or(Some(reason.clone())));
                self.messages.remove(&msg_id);
                let status = if effect == Effect::Drop {
                    RunStatus::Dropped
                } else {
                    RunStatus::Errored
                };
                self.halt(status, n, rule, reason);
            }
        }
    }

    pub fn into_outcome(self) -> RunOutcome {
        let (status, at_statement, rule, reason) = match self.halted {
            Some(h) => (h.status, Some(h.at), h.rule, Some(h.reason)),
            None => (RunStatus::Completed, None, None, None),
        };
        RunOutcome {
            route: self.route.name().to_string(),
            status,
            at_statement,
            rule,
            reason,
            final_messages: self.messages.into_values().collect(),
            audit: self.audit,
            pdp_calls: self.pdp_calls,
            choices: self.choices,
            violations: self.violations,
            warnings: self.warnings,
        }
    }
}
