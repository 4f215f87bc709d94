use std::fmt;
use std::net::Ipv4Addr;

use super::time::SimTime;

/// Smallest packet the simulator accepts: IPv4 header plus an 8-byte
/// ICMP/UDP header.
pub const MIN_PACKET_SIZE: u32 = 28;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct FlowId(pub u32);

impl fmt::Display for FlowId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PacketKind {
    Data,
    ProbeRequest,
    ProbeReply,
}

impl PacketKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PacketKind::Data => "data",
            PacketKind::ProbeRequest => "probe_request",
            PacketKind::ProbeReply => "probe_reply",
        }
    }

    pub fn index(self) -> usize {
        match self {
            PacketKind::Data => 0,
            PacketKind::ProbeRequest => 1,
            PacketKind::ProbeReply => 2,
        }
    }

    pub fn is_probe(self) -> bool {
        !matches!(self, PacketKind::Data)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Packet {
    /// Assigned by the network on injection; monotone per simulation.
    pub id: u64,
    pub flow_id: FlowId,
    /// Sequence number within the flow (probe sequence for probe packets).
    pub seq: u32,
    pub src: Ipv4Addr,
    pub dst: Ipv4Addr,
    pub tos: u8,
    pub size: u32,
    pub kind: PacketKind,
    /// Creation time. Echo replies carry the request's timestamp.
    pub created_at: SimTime,
}

impl Packet {
    pub fn data(flow_id: FlowId, src: Ipv4Addr, dst: Ipv4Addr, size: u32) -> Self {
        Packet {
            id: 0,
            flow_id,
            seq: 0,
            src,
            dst,
            tos: 0,
            size,
            kind: PacketKind::Data,
            created_at: SimTime::ZERO,
        }
    }

    /// DiffServ code point: the upper six bits of the TOS byte.
    #[inline]
    pub fn dscp(&self) -> u8 {
        self.tos >> 2
    }

    /// Builds the echo reply for a probe request, keeping size, TOS and the
    /// request timestamp.
    pub fn echo_reply(&self) -> Packet {
        Packet {
            id: 0,
            flow_id: self.flow_id,
            seq: self.seq,
            src: self.dst,
            dst: self.src,
            tos: self.tos,
            size: self.size,
            kind: PacketKind::ProbeReply,
            created_at: self.created_at,
        }
    }
}
