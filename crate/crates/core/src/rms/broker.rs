use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::net::Ipv4Addr;

use serde::Serialize;
use thiserror::Error;

use super::command::{compile_with, measurement_conditions, ClassAllocator, CompileError, ConfigCommand, Verb};
use super::controller::ResourceController;
use super::tc::TcRenderer;
use crate::pep::Pep;
use crate::policy::{evaluate, Action, Condition, EvalContext, Metric, PacketFields, PolicyRule};
use crate::simcore::{NodeId, Role, SimTime};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Endpoint {
    Broker,
    Controller(NodeId),
    NetMon(NodeId),
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementReport {
    pub at: SimTime,
    pub values: Vec<(Metric, f64)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ApplyOp {
    Install(ConfigCommand),
    Remove { verb: Verb, rule_id: String },
}

impl ApplyOp {
    pub fn rule_id(&self) -> &str {
        match self {
            ApplyOp::Install(c) => &c.rule_id,
            ApplyOp::Remove { rule_id, .. } => rule_id,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Payload {
    Apply(ApplyOp),
    Ack,
    Error(String),
    MeasurementReport(MeasurementReport),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ControlMessage {
    pub from: Endpoint,
    pub to: Endpoint,
    /// Monotone per sender; replies carry the seq of the apply they answer.
    pub seq: u64,
    pub sent_at: SimTime,
    pub payload: Payload,
}

impl ControlMessage {
    pub fn kind(&self) -> &'static str {
        match self.payload {
            Payload::Apply(_) => "apply",
            Payload::Ack => "ack",
            Payload::Error(_) => "error",
            Payload::MeasurementReport(_) => "measurement_report",
        }
    }
}

impl ResourceController {
    /// Handles an apply message and produces its single ack or error.
    pub fn handle(&mut self, pep: &mut Pep, msg: &ControlMessage, now: SimTime) -> Option<ControlMessage> {
        let Payload::Apply(op) = &msg.payload else {
            return None;
        };
        let result = match op {
            ApplyOp::Install(cmd) => self.apply(pep, cmd).map(|_| ()),
            ApplyOp::Remove { verb, rule_id } if verb.role() == self.role() => {
                self.remove(pep, rule_id);
                Ok(())
            }
            ApplyOp::Remove { verb, .. } => Err(super::RcError::RoleMismatch {
                verb: *verb,
                role: self.role(),
            }),
        };
        Some(ControlMessage {
            from: Endpoint::Controller(self.node()),
            to: msg.from,
            seq: msg.seq,
            sent_at: now,
            payload: match result {
                Ok(()) => Payload::Ack,
                Err(e) => Payload::Error(e.to_string()),
            },
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Admit,
    Deny,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FlowRequest {
    pub src: Ipv4Addr,
    pub dst: Ipv4Addr,
    pub tos: u8,
}

#[derive(Clone, Debug, PartialEq)]
pub enum BrokerEvent {
    PolicyLoad(Vec<PolicyRule>),
    MeasurementReport(MeasurementReport),
    FlowRequest(FlowRequest),
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct BrokerOutput {
    pub messages: Vec<ControlMessage>,
    pub verdict: Option<Verdict>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BrokerError {
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error("rule '{rule}' needs a {role} controller but none is registered")]
    NoController { rule: String, role: Role },
    #[error("rule id '{0}' is already loaded")]
    DuplicateRule(String),
    #[error("rule has no id")]
    MissingId,
    #[error("reply to unknown apply seq {0}")]
    UnknownReply(u64),
    #[error("second reply to apply seq {0}")]
    DuplicateReply(u64),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AuditEntry {
    pub at: SimTime,
    pub rule_id: String,
    pub verb: String,
    pub node: String,
    pub tc: Vec<String>,
}

impl fmt::Display for AuditEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {} {}", self.at, self.rule_id, self.verb, self.node)?;
        for (i, line) in self.tc.iter().enumerate() {
            f.write_str(if i == 0 { ": " } else { " ; " })?;
            f.write_str(line)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
struct LoadedRule {
    rule: PolicyRule,
    commands: Vec<ConfigCommand>,
    metric_conds: Vec<Condition>,
    active: bool,
}

#[derive(Clone, Debug)]
struct RegisteredController {
    node: NodeId,
    name: String,
    role: Role,
}

#[derive(Clone, Debug)]
struct PendingApply {
    rule_id: String,
}

/// Policy decision point: compiles rules, dispatches commands to the
/// registered controllers and answers admission requests.
#[derive(Clone, Debug)]
pub struct ResourceBroker {
    controllers: Vec<RegisteredController>,
    rules: Vec<LoadedRule>,
    alloc: ClassAllocator,
    measurements: BTreeMap<Metric, f64>,
    next_seq: u64,
    pending: BTreeMap<u64, PendingApply>,
    answered: BTreeSet<u64>,
    acks: u64,
    errors: Vec<(u64, String)>,
    audit: Vec<AuditEntry>,
    renderer: TcRenderer,
}

impl Default for ResourceBroker {
    fn default() -> Self {
        Self::new(TcRenderer::default())
    }
}

impl ResourceBroker {
    pub fn new(renderer: TcRenderer) -> Self {
        ResourceBroker {
            controllers: Vec::new(),
            rules: Vec::new(),
            alloc: ClassAllocator::default(),
            measurements: BTreeMap::new(),
            next_seq: 1,
            pending: BTreeMap::new(),
            answered: BTreeSet::new(),
            acks: 0,
            errors: Vec::new(),
            audit: Vec::new(),
            renderer,
        }
    }

    pub fn register_controller(&mut self, node: NodeId, name: &str, role: Role) {
        self.controllers.push(RegisteredController {
            node,
            name: name.to_string(),
            role,
        });
    }

    pub fn controller_nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.controllers.iter().map(|rc| rc.node)
    }

    pub fn rules(&self) -> impl Iterator<Item = &PolicyRule> {
        self.rules.iter().map(|r| &r.rule)
    }

    pub fn is_active(&self, rule_id: &str) -> Option<bool> {
        self.rules.iter().find(|r| r.rule.id == rule_id).map(|r| r.active)
    }

    pub fn audit(&self) -> &[AuditEntry] {
        &self.audit
    }

    pub fn acks(&self) -> u64 {
        self.acks
    }

    pub fn errors(&self) -> &[(u64, String)] {
        &self.errors
    }

    pub fn applies_sent(&self) -> u64 {
        self.next_seq - 1
    }

    /// Every apply sent so far has been answered exactly once.
    pub fn all_answered(&self) -> bool {
        self.pending.is_empty() && self.answered.len() as u64 == self.applies_sent()
    }

    pub fn step(&mut self, now: SimTime, event: BrokerEvent) -> Result<BrokerOutput, BrokerError> {
        match event {
            BrokerEvent::PolicyLoad(rules) => self.policy_load(now, rules).map(|messages| BrokerOutput {
                messages,
                verdict: None,
            }),
            BrokerEvent::MeasurementReport(report) => Ok(BrokerOutput {
                messages: self.measurement_report(now, &report),
                verdict: None,
            }),
            BrokerEvent::FlowRequest(req) => Ok(BrokerOutput {
                messages: Vec::new(),
                verdict: Some(self.flow_request(&req)),
            }),
        }
    }

    /// Compiles and loads `rules`; either all are loaded or none.
    pub fn policy_load(&mut self, now: SimTime, rules: Vec<PolicyRule>) -> Result<Vec<ControlMessage>, BrokerError> {
        let mut alloc = self.alloc.clone();
        let mut staged = Vec::new();
        for rule in rules {
            if rule.id.is_empty() {
                return Err(BrokerError::MissingId);
            }
            let taken = self
                .rules
                .iter()
                .chain(&staged)
                .any(|r: &LoadedRule| r.rule.id == rule.id);
            if taken {
                return Err(BrokerError::DuplicateRule(rule.id));
            }
            let commands = compile_with(&rule, &mut alloc)?;
            for c in &commands {
                let role = c.verb.role();
                if !self.controllers.iter().any(|rc| rc.role == role) {
                    return Err(BrokerError::NoController { rule: rule.id, role });
                }
            }
            staged.push(LoadedRule {
                metric_conds: measurement_conditions(&rule),
                commands,
                rule,
                active: false,
            });
        }
        self.alloc = alloc;
        let mut out = Vec::new();
        for mut loaded in staged {
            if loaded.metric_conds.is_empty() || self.holds(&loaded.metric_conds) {
                loaded.active = true;
                for cmd in &loaded.commands {
                    self.dispatch(now, ApplyOp::Install(cmd.clone()), &mut out);
                }
            }
            let at = self
                .rules
                .iter()
                .position(|r| r.rule.priority > loaded.rule.priority)
                .unwrap_or(self.rules.len());
            self.rules.insert(at, loaded);
        }
        Ok(out)
    }

    fn holds(&self, conds: &[Condition]) -> bool {
        let ctx = EvalContext {
            packet: None,
            measurements: self.measurements.clone(),
        };
        evaluate(conds, &ctx)
    }

    /// Records the report and re-evaluates measurement-conditioned rules.
    /// Commands go out only when a rule's condition changes value.
    pub fn measurement_report(&mut self, now: SimTime, report: &MeasurementReport) -> Vec<ControlMessage> {
        for (m, v) in &report.values {
            self.measurements.insert(m.clone(), *v);
        }
        let mut out = Vec::new();
        for i in 0..self.rules.len() {
            let r = &self.rules[i];
            if r.metric_conds.is_empty() || r.commands.is_empty() {
                continue;
            }
            let now_true = self.holds(&r.metric_conds);
            if now_true == r.active {
                continue;
            }
            self.rules[i].active = now_true;
            let ops: Vec<ApplyOp> = self.rules[i]
                .commands
                .iter()
                .map(|c| {
                    if now_true {
                        ApplyOp::Install(c.clone())
                    } else {
                        ApplyOp::Remove {
                            verb: c.verb,
                            rule_id: c.rule_id.clone(),
                        }
                    }
                })
                .collect();
            for op in ops {
                self.dispatch(now, op, &mut out);
            }
        }
        out
    }

    /// First admission rule (in priority order) whose conditions hold
    /// decides; flows are admitted when none does.
    pub fn flow_request(&self, req: &FlowRequest) -> Verdict {
        let ctx = EvalContext {
            packet: Some(PacketFields {
                src: req.src,
                dst: req.dst,
                tos: req.tos,
            }),
            measurements: self.measurements.clone(),
        };
        for r in &self.rules {
            if !r.rule.is_admission() || !evaluate(&r.rule.conditions, &ctx) {
                continue;
            }
            for a in &r.rule.actions {
                match a {
                    Action::Admit => return Verdict::Admit,
                    Action::Deny => return Verdict::Deny,
                    _ => {}
                }
            }
        }
        Verdict::Admit
    }

    fn dispatch(&mut self, now: SimTime, op: ApplyOp, out: &mut Vec<ControlMessage>) {
        let (verb, cmd) = match &op {
            ApplyOp::Install(c) => (c.verb, c),
            ApplyOp::Remove { verb, rule_id } => {
                let cmd = self
                    .rules
                    .iter()
                    .flat_map(|r| &r.commands)
                    .find(|c| c.verb == *verb && &c.rule_id == rule_id)
                    .expect("removal of a loaded rule");
                (*verb, cmd)
            }
        };
        let (audit_verb, tc) = match &op {
            ApplyOp::Install(_) => (verb.to_string(), self.renderer.render(cmd)),
            ApplyOp::Remove { .. } => {
                let what = match verb {
                    Verb::ConfigureEdge => "RemoveEdge",
                    Verb::ConfigureCore => "RemoveCore",
                };
                (what.to_string(), self.renderer.render_removal(cmd))
            }
        };
        let targets: Vec<(NodeId, String)> = self
            .controllers
            .iter()
            .filter(|rc| rc.role == verb.role())
            .map(|rc| (rc.node, rc.name.clone()))
            .collect();
        for (node, name) in targets {
            let seq = self.next_seq;
            self.next_seq += 1;
            self.pending.insert(
                seq,
                PendingApply {
                    rule_id: op.rule_id().to_string(),
                },
            );
            self.audit.push(AuditEntry {
                at: now,
                rule_id: op.rule_id().to_string(),
                verb: audit_verb.clone(),
                node: name,
                tc: tc.clone(),
            });
            out.push(ControlMessage {
                from: Endpoint::Broker,
                to: Endpoint::Controller(node),
                seq,
                sent_at: now,
                payload: Payload::Apply(op.clone()),
            });
        }
    }

    /// Accounts for an ack or error from a controller.
    pub fn handle_reply(&mut self, msg: &ControlMessage) -> Result<(), BrokerError> {
        let Some(pending) = self.pending.remove(&msg.seq) else {
            return Err(if self.answered.contains(&msg.seq) {
                BrokerError::DuplicateReply(msg.seq)
            } else {
                BrokerError::UnknownReply(msg.seq)
            });
        };
        self.answered.insert(msg.seq);
        match &msg.payload {
            Payload::Error(e) => self.errors.push((msg.seq, format!("{}: {e}", pending.rule_id))),
            _ => self.acks += 1,
        }
        Ok(())
    }
}
