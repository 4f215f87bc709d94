use std::collections::BTreeMap;

use thiserror::Error;

use super::command::{ConfigCommand, Verb};
use crate::pep::{Pep, PepError};
use crate::simcore::{NodeId, Role};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RcError {
    #[error("{verb} rejected by {role} controller")]
    RoleMismatch { verb: Verb, role: Role },
    #[error("malformed command: {0}")]
    Malformed(String),
    #[error(transparent)]
    Pep(#[from] PepError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ApplyOutcome {
    Installed,
    /// Same command was already installed under this rule id.
    Unchanged,
    /// An empty command; nothing to install.
    NoOp,
}

/// Wraps one router's PEP and applies broker commands to it.
///
/// Commands are keyed by rule id: re-applying the same command is a no-op
/// and a changed command replaces the previous one.
#[derive(Clone, Debug)]
pub struct ResourceController {
    node: NodeId,
    role: Role,
    installed: BTreeMap<String, ConfigCommand>,
}

impl ResourceController {
    pub fn new(node: NodeId, role: Role) -> Self {
        ResourceController {
            node,
            role,
            installed: BTreeMap::new(),
        }
    }

    pub fn node(&self) -> NodeId {
        self.node
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn installed(&self) -> &BTreeMap<String, ConfigCommand> {
        &self.installed
    }

    pub fn apply(&mut self, pep: &mut Pep, cmd: &ConfigCommand) -> Result<ApplyOutcome, RcError> {
        match cmd.verb {
            Verb::ConfigureEdge => self.configure_edge(pep, cmd),
            Verb::ConfigureCore => self.configure_core(pep, cmd),
        }
    }

    fn check(&self, pep: &Pep, cmd: &ConfigCommand, verb: Verb) -> Result<(), RcError> {
        if cmd.verb != verb || self.role != verb.role() || pep.role() != self.role {
            return Err(RcError::RoleMismatch {
                verb: cmd.verb,
                role: self.role,
            });
        }
        if cmd.rule_id.is_empty() {
            return Err(RcError::Malformed("missing rule id".into()));
        }
        Ok(())
    }

    fn begin(&self, cmd: &ConfigCommand) -> Option<ApplyOutcome> {
        if cmd.is_empty() {
            return Some(ApplyOutcome::NoOp);
        }
        if self.installed.get(&cmd.rule_id) == Some(cmd) {
            return Some(ApplyOutcome::Unchanged);
        }
        None
    }

    fn replace_previous(&mut self, pep: &mut Pep, rule_id: &str) {
        if self.installed.remove(rule_id).is_some() {
            pep.remove_owner(rule_id);
        }
    }

    pub fn configure_edge(&mut self, pep: &mut Pep, cmd: &ConfigCommand) -> Result<ApplyOutcome, RcError> {
        self.check(pep, cmd, Verb::ConfigureEdge)?;
        if cmd.qdisc_changes.is_some() {
            return Err(RcError::Malformed("band mapping in an edge command".into()));
        }
        if let Some(done) = self.begin(cmd) {
            return Ok(done);
        }
        let owner = cmd.rule_id.as_str();
        let classes = cmd
            .dsmark
            .iter()
            .map(|(c, _)| *c)
            .chain(cmd.policers.iter().map(|(c, _)| *c));
        for class in classes {
            pep.check_class_free(class, owner)?;
        }
        self.replace_previous(pep, owner);
        for f in &cmd.filters {
            pep.add_ingress_filter(f.clone(), owner);
        }
        if let Some((class, a)) = cmd.dsmark {
            pep.set_class(class, Some(a), None, owner)?;
        }
        for (class, tb) in &cmd.policers {
            pep.set_class(*class, None, Some(tb.clone()), owner)?;
        }
        self.installed.insert(cmd.rule_id.clone(), cmd.clone());
        Ok(ApplyOutcome::Installed)
    }

    pub fn configure_core(&mut self, pep: &mut Pep, cmd: &ConfigCommand) -> Result<ApplyOutcome, RcError> {
        self.check(pep, cmd, Verb::ConfigureCore)?;
        if cmd.dsmark.is_some() || !cmd.policers.is_empty() {
            return Err(RcError::Malformed("marking or policing in a core command".into()));
        }
        if let Some(done) = self.begin(cmd) {
            return Ok(done);
        }
        if let Some((_, band)) = cmd.qdisc_changes {
            pep.check_band(band)?;
        }
        let owner = cmd.rule_id.as_str();
        self.replace_previous(pep, owner);
        for f in &cmd.filters {
            pep.add_egress_filter(f.clone(), owner);
        }
        if let Some((class, band)) = cmd.qdisc_changes {
            pep.map_class_band(class, band, owner)?;
        }
        self.installed.insert(cmd.rule_id.clone(), cmd.clone());
        Ok(ApplyOutcome::Installed)
    }

    /// Uninstalls everything owned by `rule_id`. Returns whether anything
    /// was installed.
    pub fn remove(&mut self, pep: &mut Pep, rule_id: &str) -> bool {
        let had = self.installed.remove(rule_id).is_some();
        pep.remove_owner(rule_id) || had
    }
}
