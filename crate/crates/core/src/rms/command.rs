use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::pep::{ClassId, DsmarkAction, FilterRule, TokenBucketPolicer, TosMatch};
use crate::policy::{Action, Condition, Field, Op, PolicyRule, Value};
use crate::simcore::{Ipv4Net, Role};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Verb {
    ConfigureEdge,
    ConfigureCore,
}

impl Verb {
    pub fn role(self) -> Role {
        match self {
            Verb::ConfigureEdge => Role::Edge,
            Verb::ConfigureCore => Role::Core,
        }
    }

    pub fn for_role(role: Role) -> Self {
        match role {
            Role::Edge => Verb::ConfigureEdge,
            Role::Core => Verb::ConfigureCore,
        }
    }
}

impl fmt::Display for Verb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verb::ConfigureEdge => "ConfigureEdge",
            Verb::ConfigureCore => "ConfigureCore",
        })
    }
}

/// Enforcement configuration for one rule on one router role.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigCommand {
    pub verb: Verb,
    pub rule_id: String,
    pub dsmark: Option<(ClassId, DsmarkAction)>,
    pub filters: Vec<FilterRule>,
    /// Class to strict-priority band mapping (core only).
    pub qdisc_changes: Option<(ClassId, usize)>,
    pub policers: Vec<(ClassId, TokenBucketPolicer)>,
}

impl ConfigCommand {
    pub fn empty(verb: Verb, rule_id: &str) -> Self {
        ConfigCommand {
            verb,
            rule_id: rule_id.to_string(),
            dsmark: None,
            filters: Vec::new(),
            qdisc_changes: None,
            policers: Vec::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.dsmark.is_none() && self.filters.is_empty() && self.qdisc_changes.is_none() && self.policers.is_empty()
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CompileError {
    #[error("rule '{rule}': condition '{cond}' cannot be expressed as a filter")]
    Unsupported { rule: String, cond: String },
    #[error("rule '{rule}': two conditions constrain {field}")]
    Overconstrained { rule: String, field: String },
    #[error("rule '{rule}': no class ids left")]
    ClassesExhausted { rule: String },
}

/// Hands out ingress class ids `1:1`, `1:2`, ... for edge rules.
#[derive(Clone, Debug)]
pub struct ClassAllocator {
    next: u16,
}

impl Default for ClassAllocator {
    fn default() -> Self {
        ClassAllocator { next: 1 }
    }
}

impl ClassAllocator {
    pub fn next_class(&mut self) -> Option<ClassId> {
        let minor = self.next;
        self.next = self.next.checked_add(1)?;
        Some(ClassId::new(1, minor))
    }
}

#[derive(Default)]
struct Matches {
    src: Option<Ipv4Net>,
    dst: Option<Ipv4Net>,
    tos: Option<TosMatch>,
}

fn filter_matches(r: &PolicyRule) -> Result<Matches, CompileError> {
    let mut m = Matches::default();
    for c in r.packet_conditions() {
        let unsupported = || CompileError::Unsupported {
            rule: r.id.clone(),
            cond: c.to_string(),
        };
        if c.op != Op::Eq {
            return Err(unsupported());
        }
        let (slot_taken, field) = match (&c.lhs, &c.rhs) {
            (Field::SrcIp, Value::Net(n)) => (m.src.replace(*n).is_some(), "src.ip"),
            (Field::DstIp, Value::Net(n)) => (m.dst.replace(*n).is_some(), "dst.ip"),
            (Field::Dscp, Value::Byte(v)) => (
                m.tos
                    .replace(TosMatch {
                        value: v << 2,
                        mask: 0xfc,
                    })
                    .is_some(),
                "the tos byte",
            ),
            (Field::Tos, Value::Byte(v)) => (
                m.tos.replace(TosMatch { value: *v, mask: 0xff }).is_some(),
                "the tos byte",
            ),
            _ => return Err(unsupported()),
        };
        if slot_taken {
            return Err(CompileError::Overconstrained {
                rule: r.id.clone(),
                field: field.to_string(),
            });
        }
    }
    Ok(m)
}

fn filter(r: &PolicyRule, m: &Matches, class_id: ClassId) -> FilterRule {
    let any = m.src.is_none() && m.dst.is_none() && m.tos.is_none();
    FilterRule {
        priority: r.priority.saturating_add(1),
        match_src: if any { Some(Ipv4Net::ANY) } else { m.src },
        match_dst: m.dst,
        match_tos: m.tos,
        class_id,
    }
}

/// Compiles a rule into PEP commands, allocating edge classes from `alloc`.
///
/// MARK and POLICE share one ingress class per rule; the first action of
/// each kind wins. QUEUE `p` steers matching packets to class `1:p`, which
/// maps to band `p - 1`. ADMIT and DENY produce no commands. Only packet conditions become filters;
/// measurement conditions decide when the broker installs the commands.
pub fn compile_with(r: &PolicyRule, alloc: &mut ClassAllocator) -> Result<Vec<ConfigCommand>, CompileError> {
    let m = filter_matches(r)?;
    let mut out = Vec::new();

    let mark = r.actions.iter().find_map(|a| match a {
        Action::Mark { dscp } => Some(*dscp),
        _ => None,
    });
    let police = r.actions.iter().find_map(|a| match a {
        Action::Police { rate_bps, burst_bytes } => Some((*rate_bps, *burst_bytes)),
        _ => None,
    });
    if mark.is_some() || police.is_some() {
        let class = alloc
            .next_class()
            .ok_or_else(|| CompileError::ClassesExhausted { rule: r.id.clone() })?;
        let mut cmd = ConfigCommand::empty(Verb::ConfigureEdge, &r.id);
        cmd.dsmark = mark.map(|d| (class, DsmarkAction::set_dscp(d)));
        if let Some((rate, burst)) = police {
            cmd.policers.push((class, TokenBucketPolicer::new(rate, burst)));
        }
        cmd.filters.push(filter(r, &m, class));
        out.push(cmd);
    }

    let queue = r.actions.iter().find_map(|a| match a {
        Action::Queue { priority } => Some(*priority),
        _ => None,
    });
    if let Some(priority) = queue {
        let class = ClassId::new(1, priority as u16);
        let mut cmd = ConfigCommand::empty(Verb::ConfigureCore, &r.id);
        cmd.filters.push(filter(r, &m, class));
        cmd.qdisc_changes = Some((class, priority as usize - 1));
        out.push(cmd);
    }
    Ok(out)
}

/// Compiles a single rule with a fresh class allocator.
pub fn compile_policy(r: &PolicyRule) -> Result<Vec<ConfigCommand>, CompileError> {
    compile_with(r, &mut ClassAllocator::default())
}

/// Conditions the broker evaluates against measurements.
pub fn measurement_conditions(r: &PolicyRule) -> Vec<Condition> {
    r.conditions
        .iter()
        .filter(|c| !c.lhs.is_packet_field())
        .cloned()
        .collect()
}
