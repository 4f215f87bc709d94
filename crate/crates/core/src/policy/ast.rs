use std::fmt;

use serde::{Deserialize, Serialize};

use crate::simcore::{Ipv4Net, Role};

/// A measurement a condition can refer to. The argument is an interface
/// (`B:egress`) for link metrics and a path (`A->C`) for probe metrics.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Metric {
    LinkUtil(String),
    LinkBw(String),
    ProbeLoss(String),
    ProbeDelay(String),
}

impl Metric {
    pub fn name(&self) -> &'static str {
        match self {
            Metric::LinkUtil(_) => "link.util",
            Metric::LinkBw(_) => "link.bw",
            Metric::ProbeLoss(_) => "probe.loss",
            Metric::ProbeDelay(_) => "probe.delay",
        }
    }

    pub fn arg(&self) -> &str {
        match self {
            Metric::LinkUtil(a) | Metric::LinkBw(a) | Metric::ProbeLoss(a) | Metric::ProbeDelay(a) => a,
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.name(), self.arg())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Field {
    SrcIp,
    DstIp,
    Dscp,
    Tos,
    Metric(Metric),
}

impl Field {
    pub fn is_ip(&self) -> bool {
        matches!(self, Field::SrcIp | Field::DstIp)
    }

    pub fn is_packet_field(&self) -> bool {
        !matches!(self, Field::Metric(_))
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Field::SrcIp => f.write_str("src.ip"),
            Field::DstIp => f.write_str("dst.ip"),
            Field::Dscp => f.write_str("dscp"),
            Field::Tos => f.write_str("tos"),
            Field::Metric(m) => m.fmt(f),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Op {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl Op {
    pub fn as_str(self) -> &'static str {
        match self {
            Op::Eq => "==",
            Op::Ne => "!=",
            Op::Lt => "<",
            Op::Le => "<=",
            Op::Gt => ">",
            Op::Ge => ">=",
        }
    }

    pub fn is_relational(self) -> bool {
        !matches!(self, Op::Eq | Op::Ne)
    }

    pub fn compare<T: PartialOrd>(self, a: T, b: T) -> bool {
        match self {
            Op::Eq => a == b,
            Op::Ne => a != b,
            Op::Lt => a < b,
            Op::Le => a <= b,
            Op::Gt => a > b,
            Op::Ge => a >= b,
        }
    }
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Net(Ipv4Net),
    /// dscp or tos byte.
    Byte(u8),
    /// Measurement threshold: percent for util/loss, bit/s for bw, seconds
    /// for delay.
    Number(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Condition {
    pub lhs: Field,
    pub op: Op,
    pub rhs: Value,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} ", self.lhs, self.op)?;
        match &self.rhs {
            Value::Net(n) => write!(f, "{n}"),
            Value::Byte(b) => write!(f, "{b:#04x}"),
            Value::Number(x) => write!(f, "{x}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    Mark { dscp: u8 },
    Queue { priority: u8 },
    Police { rate_bps: u64, burst_bytes: u64 },
    Admit,
    Deny,
}

impl Action {
    /// The role this action is enforced at, if it configures a PEP at all.
    pub fn enforced_at(&self) -> Option<Role> {
        match self {
            Action::Mark { .. } | Action::Police { .. } => Some(Role::Edge),
            Action::Queue { .. } => Some(Role::Core),
            Action::Admit | Action::Deny => None,
        }
    }

    pub fn is_admission(&self) -> bool {
        matches!(self, Action::Admit | Action::Deny)
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Mark { dscp } => write!(f, "MARK packets with DSCP {dscp:#04x}"),
            Action::Queue { priority } => write!(f, "QUEUE packets with PRIORITY {priority}"),
            Action::Police { rate_bps, burst_bytes } => write!(f, "POLICE rate {rate_bps} burst {burst_bytes}"),
            Action::Admit => f.write_str("ADMIT"),
            Action::Deny => f.write_str("DENY"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PolicyRule {
    /// Empty until assigned by a label or by the policy file loader.
    pub id: String,
    pub target: Role,
    pub conditions: Vec<Condition>,
    pub actions: Vec<Action>,
    /// Lower values are evaluated and installed first.
    pub priority: u16,
}

impl PolicyRule {
    /// Whether any condition depends on a live measurement.
    pub fn is_measurement_conditioned(&self) -> bool {
        self.conditions.iter().any(|c| matches!(c.lhs, Field::Metric(_)))
    }

    pub fn packet_conditions(&self) -> impl Iterator<Item = &Condition> {
        self.conditions.iter().filter(|c| c.lhs.is_packet_field())
    }

    pub fn is_admission(&self) -> bool {
        self.actions.iter().any(Action::is_admission)
    }
}

/// Canonical text form; parses back to an equal rule.
impl fmt::Display for PolicyRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.id.is_empty() {
            write!(f, "{}: ", self.id)?;
        }
        write!(f, "@{}", self.target)?;
        if self.priority != 0 {
            write!(f, " @priority={}", self.priority)?;
        }
        for (i, c) in self.conditions.iter().enumerate() {
            f.write_str(if i == 0 { " if " } else { " and " })?;
            c.fmt(f)?;
        }
        for a in &self.actions {
            write!(f, " {a}")?;
        }
        Ok(())
    }
}

pub fn render_rule(r: &PolicyRule) -> String {
    r.to_string()
}
