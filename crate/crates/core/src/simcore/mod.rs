//! Deterministic discrete-event simulation core: clock, event queue,
//! topology, packets, interface counters and the packet-forwarding runtime.

mod addr;
mod counters;
mod engine;
mod network;
mod packet;
mod time;
mod topology;

pub use addr::{Ipv4Net, PrefixParseError};
pub use counters::InterfaceCounters;
pub use engine::{EventHandle, ScheduleError, Scheduler};
pub use network::{Delivery, EventLog, IfaceStats, NetEvent, Network, Tap, TapDirection, TapId};
pub use packet::{FlowId, Packet, PacketKind, MIN_PACKET_SIZE};
pub use time::SimTime;
pub use topology::{Hop, Interface, InterfaceId, Link, LinkId, Node, NodeId, Role, Topology, TopologyError};
