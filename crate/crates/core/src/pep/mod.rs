//! Policy Enforcement Point internals: filter tables, dsmark rewriting,
//! strict-priority queuing and token-bucket policing.
//!
//! A [`Pep`] is owned by one simulated router. Ingress filters, marking and
//! policing act on packets entering through access interfaces; egress
//! filters pick the [`PrioQdisc`] band on every output interface.

mod classifier;
mod dsmark;
mod policer;
mod qdisc;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

pub use classifier::{classify, ClassId, Classifier, FilterEntry, FilterError, FilterRule, TosMatch};
pub use dsmark::{mark, DsmarkAction};
pub use policer::{police, PoliceVerdict, TokenBucketPolicer};
pub use qdisc::{EnqueueOutcome, PrioQdisc, DEFAULT_BAND_LIMITS};

use crate::simcore::{Packet, Role, SimTime};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PepError {
    #[error("band {band} out of range (qdisc has {bands} bands)")]
    BandOutOfRange { band: usize, bands: usize },
    #[error("class {0} is already configured by rule '{1}'")]
    ClassInUse(ClassId, String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassConfig {
    pub dsmark: Option<DsmarkAction>,
    pub policer: Option<TokenBucketPolicer>,
    pub owner: String,
}

#[derive(Clone, Debug)]
pub struct Pep {
    role: Role,
    access: Vec<bool>,
    ingress: Classifier,
    egress: Classifier,
    classes: BTreeMap<ClassId, ClassConfig>,
    band_owners: BTreeMap<ClassId, String>,
    qdiscs: Vec<PrioQdisc>,
    policed_drops: u64,
}

impl Pep {
    /// `access[i]` marks interface `i` as facing an edge network.
    pub fn new(role: Role, access: Vec<bool>, band_limits: &[usize]) -> Self {
        let qdiscs = access.iter().map(|_| PrioQdisc::new(band_limits)).collect();
        Pep {
            role,
            access,
            ingress: Classifier::new(),
            egress: Classifier::new(),
            classes: BTreeMap::new(),
            band_owners: BTreeMap::new(),
            qdiscs,
            policed_drops: 0,
        }
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn is_access(&self, iface: usize) -> bool {
        self.access.get(iface).copied().unwrap_or(false)
    }

    /// Ingress marking/policing. Returns `None` when the policer drops.
    #[inline]
    pub fn ingress(&mut self, mut p: Packet, in_iface: usize, now: SimTime) -> Option<Packet> {
        if self.ingress.is_empty() || !self.is_access(in_iface) {
            return Some(p);
        }
        let class = self.ingress.classify(&p);
        if let Some(cfg) = self.classes.get_mut(&class) {
            if let Some(tb) = cfg.policer.as_mut() {
                if tb.police(p.size, now) == PoliceVerdict::Exceed {
                    self.policed_drops += 1;
                    return None;
                }
            }
            if let Some(a) = cfg.dsmark {
                p.tos = a.apply(p.tos);
            }
        }
        Some(p)
    }

    #[inline]
    pub fn egress_class(&self, p: &Packet) -> ClassId {
        if self.egress.is_empty() {
            ClassId::DEFAULT
        } else {
            self.egress.classify(p)
        }
    }

    #[inline]
    pub fn enqueue(&mut self, iface: usize, p: Packet) -> EnqueueOutcome {
        let class = self.egress_class(&p);
        self.qdiscs[iface].enqueue(p, class)
    }

    pub fn qdisc(&self, iface: usize) -> &PrioQdisc {
        &self.qdiscs[iface]
    }

    pub fn qdisc_mut(&mut self, iface: usize) -> &mut PrioQdisc {
        &mut self.qdiscs[iface]
    }

    pub fn policed_drops(&self) -> u64 {
        self.policed_drops
    }

    pub fn ingress_filters(&self) -> &Classifier {
        &self.ingress
    }

    pub fn egress_filters(&self) -> &Classifier {
        &self.egress
    }

    pub fn classes(&self) -> &BTreeMap<ClassId, ClassConfig> {
        &self.classes
    }

    pub fn add_ingress_filter(&mut self, rule: FilterRule, owner: &str) {
        self.ingress.insert(rule, owner);
    }

    pub fn add_egress_filter(&mut self, rule: FilterRule, owner: &str) {
        self.egress.insert(rule, owner);
    }

    pub fn check_class_free(&self, class: ClassId, owner: &str) -> Result<(), PepError> {
        match self.classes.get(&class) {
            Some(c) if c.owner != owner => Err(PepError::ClassInUse(class, c.owner.clone())),
            _ => Ok(()),
        }
    }

    /// Sets the ingress treatment of `class`, merging with existing state
    /// owned by the same rule.
    pub fn set_class(
        &mut self,
        class: ClassId,
        dsmark: Option<DsmarkAction>,
        policer: Option<TokenBucketPolicer>,
        owner: &str,
    ) -> Result<(), PepError> {
        self.check_class_free(class, owner)?;
        let cfg = self.classes.entry(class).or_insert_with(|| ClassConfig {
            dsmark: None,
            policer: None,
            owner: owner.to_string(),
        });
        if dsmark.is_some() {
            cfg.dsmark = dsmark;
        }
        if policer.is_some() {
            cfg.policer = policer;
        }
        Ok(())
    }

    pub fn check_band(&self, band: usize) -> Result<(), PepError> {
        let bands = self.qdiscs.first().map_or(0, PrioQdisc::band_count);
        if band >= bands {
            return Err(PepError::BandOutOfRange { band, bands });
        }
        Ok(())
    }

    /// Maps `class` to `band` on every interface's qdisc.
    pub fn map_class_band(&mut self, class: ClassId, band: usize, owner: &str) -> Result<(), PepError> {
        self.check_band(band)?;
        for q in &mut self.qdiscs {
            q.map_class(class, band);
        }
        self.band_owners.insert(class, owner.to_string());
        Ok(())
    }

    /// Removes every artifact installed by `owner`. Returns whether anything
    /// was removed.
    pub fn remove_owner(&mut self, owner: &str) -> bool {
        let mut removed = self.ingress.remove_owner(owner) + self.egress.remove_owner(owner);
        let before = self.classes.len();
        self.classes.retain(|_, c| c.owner != owner);
        removed += before - self.classes.len();
        let classes: Vec<ClassId> = self
            .band_owners
            .iter()
            .filter(|(_, o)| *o == owner)
            .map(|(c, _)| *c)
            .collect();
        for c in classes {
            self.band_owners.remove(&c);
            for q in &mut self.qdiscs {
                q.unmap_class(c);
            }
            removed += 1;
        }
        removed > 0
    }

    /// Canonical text dump of the enforcement state, with stable field order.
    pub fn dump(&self) -> String {
        let mut s = self.config_dump();
        for (i, q) in self.qdiscs.iter().enumerate() {
            writeln!(
                s,
                "qdisc {i} limits={} occupancy={} drops={}",
                join(q.limits()),
                join(&q.occupancy()),
                join(q.drops())
            )
            .unwrap();
        }
        writeln!(s, "policed-drops {}", self.policed_drops).unwrap();
        s
    }

    /// Filters, classes and band mappings only, without queue state.
    pub fn config_dump(&self) -> String {
        let mut s = String::new();
        writeln!(s, "role {}", self.role).unwrap();
        for (i, e) in self.ingress.entries().iter().enumerate() {
            writeln!(s, "ingress-filter {i} {} owner={}", e.rule, e.owner).unwrap();
        }
        for (i, e) in self.egress.entries().iter().enumerate() {
            writeln!(s, "egress-filter {i} {} owner={}", e.rule, e.owner).unwrap();
        }
        for (class, cfg) in &self.classes {
            write!(s, "class {class}").unwrap();
            if let Some(d) = cfg.dsmark {
                write!(s, " dsmark mask={:#04x} value={:#04x}", d.mask, d.value).unwrap();
            }
            if let Some(tb) = &cfg.policer {
                write!(s, " police rate={} burst={}", tb.rate_bps(), tb.burst_bytes()).unwrap();
            }
            writeln!(s, " owner={}", cfg.owner).unwrap();
        }
        for (class, owner) in &self.band_owners {
            let band = self.qdiscs.first().map_or(0, |q| q.band_for(*class));
            writeln!(s, "band-map {class} -> {band} owner={owner}").unwrap();
        }
        s
    }
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}
