use std::fmt;

use thiserror::Error;

use crate::simcore::{InterfaceId, Network, SimTime};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasureError {
    #[error("unknown interface {0}")]
    UnknownInterface(String),
    #[error("unknown object identifier '{0}'")]
    UnknownOid(String),
    #[error("samples are not from the same object and interface")]
    MismatchedSamples,
    #[error("samples are taken at the same time")]
    ZeroInterval,
    #[error("interface speed is zero")]
    ZeroSpeed,
    #[error("smoothing factor {0} outside [0, 1]")]
    BadAlpha(f64),
}

/// Interface MIB objects read by the monitors.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MibObject {
    IfInOctets,
    IfOutOctets,
    IfSpeed,
}

impl MibObject {
    pub const ALL: [MibObject; 3] = [MibObject::IfInOctets, MibObject::IfOutOctets, MibObject::IfSpeed];

    pub fn oid(self) -> &'static str {
        match self {
            MibObject::IfInOctets => "1.3.6.1.2.1.2.2.1.10.2",
            MibObject::IfOutOctets => "1.3.6.1.2.1.2.2.1.16.1",
            MibObject::IfSpeed => "1.3.6.1.2.1.2.2.1.5.1",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MibObject::IfInOctets => "ifInOctets",
            MibObject::IfOutOctets => "ifOutOctets",
            MibObject::IfSpeed => "ifSpeed",
        }
    }

    pub fn from_oid(oid: &str) -> Result<Self, MeasureError> {
        Self::ALL
            .into_iter()
            .find(|o| o.oid() == oid || o.name() == oid)
            .ok_or_else(|| MeasureError::UnknownOid(oid.to_string()))
    }
}

impl fmt::Display for MibObject {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CounterSample {
    pub oid: MibObject,
    pub iface: InterfaceId,
    pub value: u32,
    pub t: SimTime,
}

/// Reads one object from an interface at time `t`. ifSpeed is a Gauge32
/// and saturates at `u32::MAX`.
pub fn poll(net: &Network, iface: InterfaceId, oid: MibObject, t: SimTime) -> Result<CounterSample, MeasureError> {
    let c = net
        .counters(iface)
        .map_err(|_| MeasureError::UnknownInterface(format!("#{}.{}", iface.node.0, iface.index)))?;
    let value = match oid {
        MibObject::IfInOctets => c.if_in_octets,
        MibObject::IfOutOctets => c.if_out_octets,
        MibObject::IfSpeed => c.if_speed.min(u32::MAX as u64) as u32,
    };
    Ok(CounterSample { oid, iface, value, t })
}
