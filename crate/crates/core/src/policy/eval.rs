use std::collections::BTreeMap;
use std::net::Ipv4Addr;

use super::ast::{Condition, Field, Metric, Value};
use crate::simcore::Packet;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PacketFields {
    pub src: Ipv4Addr,
    pub dst: Ipv4Addr,
    pub tos: u8,
}

impl From<&Packet> for PacketFields {
    fn from(p: &Packet) -> Self {
        PacketFields {
            src: p.src,
            dst: p.dst,
            tos: p.tos,
        }
    }
}

/// What a condition can be evaluated against. Anything absent makes the
/// conditions that need it false.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EvalContext {
    pub packet: Option<PacketFields>,
    pub measurements: BTreeMap<Metric, f64>,
}

impl EvalContext {
    pub fn with_packet(p: PacketFields) -> Self {
        EvalContext {
            packet: Some(p),
            ..Default::default()
        }
    }

    pub fn set(&mut self, m: Metric, v: f64) -> &mut Self {
        self.measurements.insert(m, v);
        self
    }
}

pub fn evaluate_condition(c: &Condition, ctx: &EvalContext) -> bool {
    match (&c.lhs, &c.rhs) {
        (Field::SrcIp | Field::DstIp, Value::Net(net)) => {
            let Some(p) = ctx.packet else { return false };
            let addr = if c.lhs == Field::SrcIp { p.src } else { p.dst };
            match c.op {
                super::Op::Eq => net.contains(addr),
                super::Op::Ne => !net.contains(addr),
                _ => false,
            }
        }
        (Field::Dscp, Value::Byte(v)) => ctx.packet.is_some_and(|p| c.op.compare(p.tos >> 2, *v)),
        (Field::Tos, Value::Byte(v)) => ctx.packet.is_some_and(|p| c.op.compare(p.tos, *v)),
        (Field::Metric(m), Value::Number(x)) => ctx
            .measurements
            .get(m)
            .is_some_and(|v| !v.is_nan() && c.op.compare(*v, *x)),
        _ => false,
    }
}

/// Conjunction of all conditions; false for an empty list.
pub fn evaluate(conds: &[Condition], ctx: &EvalContext) -> bool {
    !conds.is_empty() && conds.iter().all(|c| evaluate_condition(c, ctx))
}
