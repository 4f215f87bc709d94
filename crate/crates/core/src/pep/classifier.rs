use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::simcore::{Ipv4Net, Packet};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FilterError {
    #[error("filter must match on at least one field")]
    NoMatchField,
    #[error("invalid class id '{0}' (expected major:minor)")]
    BadClassId(String),
}

/// A tc-style `major:minor` class handle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ClassId {
    pub major: u16,
    pub minor: u16,
}

impl ClassId {
    /// Returned by classification when no filter matches.
    pub const DEFAULT: ClassId = ClassId { major: 0, minor: 0 };

    pub const fn new(major: u16, minor: u16) -> Self {
        ClassId { major, minor }
    }
}

impl fmt::Display for ClassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.major, self.minor)
    }
}

impl FromStr for ClassId {
    type Err = FilterError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || FilterError::BadClassId(s.to_string());
        let (maj, min) = s.split_once(':').ok_or_else(bad)?;
        Ok(ClassId {
            major: maj.parse().map_err(|_| bad())?,
            minor: min.parse().map_err(|_| bad())?,
        })
    }
}

/// u32-style TOS match: a packet matches iff `(tos & mask) == (value & mask)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TosMatch {
    pub value: u8,
    pub mask: u8,
}

impl TosMatch {
    #[inline]
    pub fn matches(&self, tos: u8) -> bool {
        tos & self.mask == self.value & self.mask
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FilterRule {
    /// Lower values are evaluated first.
    pub priority: u16,
    pub match_src: Option<Ipv4Net>,
    pub match_dst: Option<Ipv4Net>,
    pub match_tos: Option<TosMatch>,
    pub class_id: ClassId,
}

impl FilterRule {
    pub fn new(
        priority: u16,
        match_src: Option<Ipv4Net>,
        match_dst: Option<Ipv4Net>,
        match_tos: Option<TosMatch>,
        class_id: ClassId,
    ) -> Result<Self, FilterError> {
        if match_src.is_none() && match_dst.is_none() && match_tos.is_none() {
            return Err(FilterError::NoMatchField);
        }
        Ok(FilterRule {
            priority,
            match_src,
            match_dst,
            match_tos,
            class_id,
        })
    }

    #[inline]
    pub fn matches(&self, p: &Packet) -> bool {
        self.match_src.is_none_or(|n| n.contains(p.src))
            && self.match_dst.is_none_or(|n| n.contains(p.dst))
            && self.match_tos.is_none_or(|m| m.matches(p.tos))
    }
}

impl fmt::Display for FilterRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "prio={}", self.priority)?;
        if let Some(n) = self.match_src {
            write!(f, " src={n}")?;
        }
        if let Some(n) = self.match_dst {
            write!(f, " dst={n}")?;
        }
        if let Some(m) = self.match_tos {
            write!(f, " tos={:#04x}/{:#04x}", m.value, m.mask)?;
        }
        write!(f, " -> {}", self.class_id)
    }
}

/// Returns the class of the first rule matching `p` in (priority, list
/// order); [`ClassId::DEFAULT`] when none match.
pub fn classify(p: &Packet, filters: &[FilterRule]) -> ClassId {
    let mut best: Option<&FilterRule> = None;
    for f in filters {
        if best.is_some_and(|b| b.priority <= f.priority) {
            continue;
        }
        if f.matches(p) {
            best = Some(f);
        }
    }
    best.map_or(ClassId::DEFAULT, |f| f.class_id)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FilterEntry {
    pub rule: FilterRule,
    /// Policy rule that installed the entry.
    pub owner: String,
}

/// Ordered filter table; entries are kept sorted by (priority, insertion).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Classifier {
    entries: Vec<FilterEntry>,
}

impl Classifier {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, rule: FilterRule, owner: &str) {
        let pos = self.entries.partition_point(|e| e.rule.priority <= rule.priority);
        self.entries.insert(
            pos,
            FilterEntry {
                rule,
                owner: owner.to_string(),
            },
        );
    }

    pub fn remove_owner(&mut self, owner: &str) -> usize {
        let before = self.entries.len();
        self.entries.retain(|e| e.owner != owner);
        before - self.entries.len()
    }

    pub fn entries(&self) -> &[FilterEntry] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    #[inline]
    pub fn classify(&self, p: &Packet) -> ClassId {
        self.entries
            .iter()
            .find(|e| e.rule.matches(p))
            .map_or(ClassId::DEFAULT, |e| e.rule.class_id)
    }
}
