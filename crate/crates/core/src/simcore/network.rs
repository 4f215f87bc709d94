//! Packet-level network runtime on top of a [`Topology`].
//!
//! Each output interface serializes one packet at a time; waiting packets
//! sit in the node's PEP queue discipline. An interface only has a pending
//! `Drain` event while its queue is backlogged, so uncongested hops cost a
//! single `Arrive` event per packet.

use std::collections::hash_map::DefaultHasher;
use std::fmt::Write as _;
use std::hash::Hasher;

use sha2::{Digest, Sha256};

use super::counters::InterfaceCounters;
use super::engine::Scheduler;
use super::packet::{FlowId, Packet};
use super::time::SimTime;
use super::topology::{Hop, InterfaceId, LinkId, NodeId, Topology, TopologyError};
use crate::pep::{EnqueueOutcome, Pep};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NetEvent {
    /// Packet finishes propagating and arrives on `iface`.
    Arrive { iface: InterfaceId, packet: Packet },
    /// Output interface finished serializing; start the next queued packet.
    Drain { iface: InterfaceId },
}

/// A packet that left the forwarding plane: addressed to a router itself
/// (`iface == None`) or handed to an edge network through an access port.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Delivery {
    pub node: NodeId,
    pub iface: Option<InterfaceId>,
    pub packet: Packet,
    pub at: SimTime,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct IfaceStats {
    /// Packets handed to the interface's queue discipline.
    pub offered: u64,
    pub transmitted: u64,
    pub dropped: u64,
    /// Drops broken down by packet kind (data, probe request, probe reply).
    pub dropped_by_kind: [u64; 3],
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TapDirection {
    In,
    Out,
}

/// In-simulator packet capture point.
#[derive(Clone, Debug)]
pub struct Tap {
    pub iface: InterfaceId,
    pub direction: TapDirection,
    pub flow: Option<FlowId>,
    /// `(time, flow, bytes)` per observed packet.
    pub records: Vec<(SimTime, FlowId, u32)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TapId(pub usize);

#[derive(Clone, Debug)]
struct Wire {
    peer: InterfaceId,
    link: LinkId,
    capacity_bps: u64,
    prop_delay: SimTime,
    /// Exact per-byte serialization time when the capacity divides 8e12.
    ps_per_byte: Option<u64>,
}

#[derive(Clone, Debug)]
struct IfaceRuntime {
    counters: InterfaceCounters,
    stats: IfaceStats,
    busy_until: SimTime,
    drain_pending: bool,
    wire: Option<Wire>,
    access: bool,
    taps: Vec<usize>,
    name: String,
}

/// Line-oriented packet event log, hashed as it is written.
pub struct EventLog {
    hasher: Sha256,
    lines: Option<Vec<String>>,
    count: u64,
    buf: String,
}

impl EventLog {
    pub fn digest_only() -> Self {
        EventLog {
            hasher: Sha256::new(),
            lines: None,
            count: 0,
            buf: String::new(),
        }
    }

    pub fn retaining() -> Self {
        EventLog {
            lines: Some(Vec::new()),
            ..Self::digest_only()
        }
    }

    fn record(&mut self, t: SimTime, kind: &str, iface: &str, p: &Packet) {
        self.buf.clear();
        writeln!(
            self.buf,
            "{t} {kind} {iface} {} {} {:#04x} {}",
            p.id, p.flow_id, p.tos, p.size
        )
        .unwrap();
        self.hasher.update(self.buf.as_bytes());
        self.count += 1;
        if let Some(lines) = self.lines.as_mut() {
            lines.push(self.buf.trim_end().to_string());
        }
    }

    pub fn len(&self) -> u64 {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn lines(&self) -> Option<&[String]> {
        self.lines.as_deref()
    }

    pub fn digest(&self) -> String {
        hex::encode(self.hasher.clone().finalize())
    }
}

pub struct Network {
    topo: Topology,
    peps: Vec<Pep>,
    ifaces: Vec<Vec<IfaceRuntime>>,
    taps: Vec<Tap>,
    link_up: Vec<bool>,
    next_packet_id: u64,
    unroutable: u64,
    log: Option<EventLog>,
    decisions: DefaultHasher,
}

impl Network {
    pub fn new(mut topo: Topology, band_limits: &[usize]) -> Self {
        if !topo.routes_ready() {
            topo.compute_routes();
        }
        let mut peps = Vec::new();
        let mut ifaces = Vec::new();
        for node in topo.nodes() {
            peps.push(Pep::new(
                node.role,
                node.interfaces.iter().map(|i| i.access).collect(),
                band_limits,
            ));
            let rts = node
                .interfaces
                .iter()
                .map(|i| {
                    let wire = i.link.map(|l| {
                        let link = topo.link(l);
                        let peer = if link.a == i.id { link.b } else { link.a };
                        let per_byte = 8 * SimTime::PS_PER_SEC;
                        Wire {
                            peer,
                            link: l,
                            capacity_bps: link.capacity_bps,
                            prop_delay: link.prop_delay,
                            ps_per_byte: per_byte
                                .is_multiple_of(link.capacity_bps)
                                .then(|| per_byte / link.capacity_bps),
                        }
                    });
                    IfaceRuntime {
                        counters: InterfaceCounters::new(wire.as_ref().map_or(0, |w| w.capacity_bps)),
                        stats: IfaceStats::default(),
                        busy_until: SimTime::ZERO,
                        drain_pending: false,
                        wire,
                        access: i.access,
                        taps: Vec::new(),
                        name: format!("{}:{}", node.name, i.name),
                    }
                })
                .collect();
            ifaces.push(rts);
        }
        let link_up = vec![true; topo.links().len()];
        Network {
            topo,
            peps,
            ifaces,
            taps: Vec::new(),
            link_up,
            next_packet_id: 1,
            unroutable: 0,
            log: None,
            decisions: DefaultHasher::new(),
        }
    }

    pub fn topology(&self) -> &Topology {
        &self.topo
    }

    pub fn pep(&self, node: NodeId) -> &Pep {
        &self.peps[node.0 as usize]
    }

    pub fn pep_mut(&mut self, node: NodeId) -> &mut Pep {
        &mut self.peps[node.0 as usize]
    }

    fn rt(&self, id: InterfaceId) -> Result<&IfaceRuntime, TopologyError> {
        self.ifaces
            .get(id.node.0 as usize)
            .and_then(|n| n.get(id.index as usize))
            .ok_or_else(|| TopologyError::UnknownInterface(format!("#{}.{}", id.node.0, id.index)))
    }

    #[inline]
    fn rt_mut(&mut self, id: InterfaceId) -> &mut IfaceRuntime {
        &mut self.ifaces[id.node.0 as usize][id.index as usize]
    }

    pub fn counters(&self, id: InterfaceId) -> Result<&InterfaceCounters, TopologyError> {
        self.rt(id).map(|r| &r.counters)
    }

    /// Starts an interface's octet counters at `value` (both directions).
    pub fn preset_counters(&mut self, id: InterfaceId, value: u32) -> Result<(), TopologyError> {
        self.rt(id)?;
        let rt = self.rt_mut(id);
        rt.counters = InterfaceCounters::preset(rt.counters.if_speed, value);
        Ok(())
    }

    pub fn stats(&self, id: InterfaceId) -> Result<&IfaceStats, TopologyError> {
        self.rt(id).map(|r| &r.stats)
    }

    pub fn queued(&self, id: InterfaceId) -> usize {
        self.pep(id.node).qdisc(id.index as usize).len()
    }

    pub fn unroutable(&self) -> u64 {
        self.unroutable
    }

    pub fn set_link_up(&mut self, link: LinkId, up: bool) {
        self.link_up[link.0 as usize] = up;
    }

    pub fn enable_event_log(&mut self, log: EventLog) {
        self.log = Some(log);
    }

    pub fn event_log(&self) -> Option<&EventLog> {
        self.log.as_ref()
    }

    pub fn take_event_log(&mut self) -> Option<EventLog> {
        self.log.take()
    }

    /// Digest over every per-packet forward/drop decision, in order.
    pub fn decision_digest(&self) -> u64 {
        self.decisions.finish()
    }

    pub fn install_tap(
        &mut self,
        iface: InterfaceId,
        direction: TapDirection,
        flow: Option<FlowId>,
    ) -> Result<TapId, TopologyError> {
        self.rt(iface)?;
        let id = self.taps.len();
        self.taps.push(Tap {
            iface,
            direction,
            flow,
            records: Vec::new(),
        });
        self.rt_mut(iface).taps.push(id);
        Ok(TapId(id))
    }

    pub fn tap(&self, id: TapId) -> &Tap {
        &self.taps[id.0]
    }

    /// Every interface satisfies offered = transmitted + dropped + queued.
    pub fn conservation_holds(&self) -> bool {
        self.topo.interfaces().all(|i| {
            let s = &self.rt(i.id).unwrap().stats;
            s.offered == s.transmitted + s.dropped + self.queued(i.id) as u64
        })
    }

    fn next_id(&mut self) -> u64 {
        let id = self.next_packet_id;
        self.next_packet_id += 1;
        id
    }

    #[inline]
    fn log(&mut self, t: SimTime, kind: &str, iface: InterfaceId, p: &Packet) {
        if let Some(log) = self.log.as_mut() {
            let name = &self.ifaces[iface.node.0 as usize][iface.index as usize].name;
            log.record(t, kind, name, p);
        }
    }

    #[inline]
    fn observe(&mut self, iface: InterfaceId, dir: TapDirection, t: SimTime, p: &Packet) {
        let rt = &self.ifaces[iface.node.0 as usize][iface.index as usize];
        if rt.taps.is_empty() {
            return;
        }
        for &tap in &rt.taps {
            let tap = &mut self.taps[tap];
            if tap.direction == dir && tap.flow.is_none_or(|f| f == p.flow_id) {
                tap.records.push((t, p.flow_id, p.size));
            }
        }
    }

    /// A packet enters from the edge network behind access port `iface`.
    pub fn inject<E: From<NetEvent>>(
        &mut self,
        sched: &mut Scheduler<E>,
        iface: InterfaceId,
        mut packet: Packet,
    ) -> Result<Option<Delivery>, TopologyError> {
        if !self.rt(iface)?.access {
            return Err(TopologyError::UnknownInterface(format!(
                "{} is not an access interface",
                self.topo.iface_name(iface)
            )));
        }
        packet.id = self.next_id();
        Ok(self.receive(sched, iface, packet))
    }

    /// A packet generated by the router `node` itself (e.g. a probe).
    pub fn originate<E: From<NetEvent>>(
        &mut self,
        sched: &mut Scheduler<E>,
        node: NodeId,
        mut packet: Packet,
    ) -> Result<Option<Delivery>, TopologyError> {
        packet.id = self.next_id();
        self.forward(sched, node, packet)
    }

    pub fn handle<E: From<NetEvent>>(&mut self, sched: &mut Scheduler<E>, ev: NetEvent) -> Option<Delivery> {
        match ev {
            NetEvent::Arrive { iface, packet } => self.receive(sched, iface, packet),
            NetEvent::Drain { iface } => {
                self.rt_mut(iface).drain_pending = false;
                self.advance(sched, iface);
                self.ensure_drain(sched, iface);
                None
            }
        }
    }

    fn receive<E: From<NetEvent>>(
        &mut self,
        sched: &mut Scheduler<E>,
        iface: InterfaceId,
        packet: Packet,
    ) -> Option<Delivery> {
        let now = sched.now();
        self.rt_mut(iface).counters.count_in(packet.size);
        self.observe(iface, TapDirection::In, now, &packet);
        self.log(now, "rx", iface, &packet);
        let node = iface.node;
        let Some(packet) = self.peps[node.0 as usize].ingress(packet, iface.index as usize, now) else {
            // policed; the packet is gone
            return None;
        };
        self.forward(sched, node, packet)
            .expect("routes only point at attached or access interfaces")
    }

    fn forward<E: From<NetEvent>>(
        &mut self,
        sched: &mut Scheduler<E>,
        node: NodeId,
        packet: Packet,
    ) -> Result<Option<Delivery>, TopologyError> {
        match self.topo.route(node, packet.dst) {
            Some(Hop::Local) => Ok(Some(Delivery {
                node,
                iface: None,
                packet,
                at: sched.now(),
            })),
            Some(Hop::Out(out)) => self.send_packet(sched, packet, out),
            None => {
                self.unroutable += 1;
                Ok(None)
            }
        }
    }

    /// Hands `packet` to output interface `out`.
    ///
    /// On a linked interface the packet is queued (or dropped) by the PEP and
    /// serialized when the link frees up. An unlinked access port delivers
    /// straight into its edge network.
    pub fn send_packet<E: From<NetEvent>>(
        &mut self,
        sched: &mut Scheduler<E>,
        packet: Packet,
        out: InterfaceId,
    ) -> Result<Option<Delivery>, TopologyError> {
        let now = sched.now();
        let rt = self.rt(out)?;
        let Some(wire) = rt.wire.as_ref() else {
            if rt.access {
                self.rt_mut(out).counters.count_out(packet.size);
                self.observe(out, TapDirection::Out, now, &packet);
                self.log(now, "deliver", out, &packet);
                return Ok(Some(Delivery {
                    node: out.node,
                    iface: Some(out),
                    packet,
                    at: now,
                }));
            }
            return Err(TopologyError::Unattached(self.topo.iface_name(out)));
        };
        let link_up = self.link_up[wire.link.0 as usize];
        self.rt_mut(out).stats.offered += 1;
        if !link_up {
            self.record_drop(now, out, &packet);
            return Ok(None);
        }
        self.advance(sched, out);
        let pid = packet.id;
        match self.peps[out.node.0 as usize].enqueue(out.index as usize, packet) {
            EnqueueOutcome::Dropped { packet, .. } => {
                self.record_drop(now, out, &packet);
            }
            EnqueueOutcome::Queued { band } => {
                self.decisions.write_u64(pid);
                self.decisions.write_u8(band as u8);
                self.advance(sched, out);
                self.ensure_drain(sched, out);
            }
        }
        Ok(None)
    }

    fn record_drop(&mut self, now: SimTime, out: InterfaceId, packet: &Packet) {
        let rt = self.rt_mut(out);
        rt.stats.dropped += 1;
        rt.stats.dropped_by_kind[packet.kind.index()] += 1;
        self.decisions.write_u64(packet.id);
        self.decisions.write_u8(u8::MAX);
        self.log(now, "drop", out, packet);
    }

    fn ensure_drain<E: From<NetEvent>>(&mut self, sched: &mut Scheduler<E>, iface: InterfaceId) {
        let backlogged = !self.pep(iface.node).qdisc(iface.index as usize).is_empty();
        let rt = self.rt_mut(iface);
        if backlogged && !rt.drain_pending {
            rt.drain_pending = true;
            let at = rt.busy_until;
            sched
                .schedule(at, NetEvent::Drain { iface }.into())
                .expect("busy_until is never in the past");
        }
    }

    /// Starts the next queued packet if the link is free.
    fn advance<E: From<NetEvent>>(&mut self, sched: &mut Scheduler<E>, iface: InterfaceId) {
        let now = sched.now();
        if self.rt_mut(iface).busy_until > now {
            return;
        }
        let Some(packet) = self.peps[iface.node.0 as usize]
            .qdisc_mut(iface.index as usize)
            .dequeue()
        else {
            return;
        };
        self.observe(iface, TapDirection::Out, now, &packet);
        self.log(now, "tx", iface, &packet);
        let rt = self.rt_mut(iface);
        let wire = rt.wire.as_ref().expect("queued only on linked interfaces");
        let ser = match wire.ps_per_byte {
            Some(k) => SimTime::from_ps(packet.size as u64 * k),
            None => SimTime::serialization(packet.size as u64, wire.capacity_bps),
        };
        let arrive_at = now + ser + wire.prop_delay;
        let peer = wire.peer;
        rt.busy_until = now + ser;
        rt.counters.count_out(packet.size);
        rt.stats.transmitted += 1;
        sched
            .schedule(arrive_at, NetEvent::Arrive { iface: peer, packet }.into())
            .expect("arrival is in the future");
    }
}

#[cfg(test)]
mod tests {
    use std::net::Ipv4Addr;

    use super::*;
    use crate::pep::DEFAULT_BAND_LIMITS;
    use crate::simcore::{FlowId, Role};

    /// H --(access)-- X ==link== Y --(access)-- sink
    fn two_nodes(capacity: u64, prop: SimTime) -> (Network, InterfaceId, InterfaceId) {
        let mut t = Topology::new();
        let x = t.add_node("X", Role::Edge, Ipv4Addr::new(10, 0, 0, 1)).unwrap();
        let y = t.add_node("Y", Role::Edge, Ipv4Addr::new(10, 0, 0, 2)).unwrap();
        let xa = t.add_interface(x, "lan", true).unwrap();
        t.add_network(xa, "192.168.1.0/24".parse().unwrap()).unwrap();
        let xo = t.add_interface(x, "wan", false).unwrap();
        let yi = t.add_interface(y, "wan", false).unwrap();
        let ya = t.add_interface(y, "lan", true).unwrap();
        t.add_network(ya, "172.16.0.0/24".parse().unwrap()).unwrap();
        t.connect(xo, yi, capacity, prop).unwrap();
        (Network::new(t, &DEFAULT_BAND_LIMITS), xa, xo)
    }

    fn pkt(size: u32) -> Packet {
        Packet::data(
            FlowId(1),
            Ipv4Addr::new(192, 168, 1, 5),
            Ipv4Addr::new(172, 16, 0, 5),
            size,
        )
    }

    fn run(net: &mut Network, s: &mut Scheduler<NetEvent>, until: SimTime) -> Vec<Delivery> {
        let mut out = vec![];
        s.run_until(until, |s, e| out.extend(net.handle(s, e))).unwrap();
        out
    }

    #[test]
    fn serialization_on_100mbps() {
        let (mut net, _, xo) = two_nodes(100_000_000, SimTime::ZERO);
        let mut s: Scheduler<NetEvent> = Scheduler::new();
        net.send_packet(&mut s, pkt(1000), xo).unwrap();
        let d = run(&mut net, &mut s, SimTime::from_secs(1));
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].at, SimTime::from_micros(80));
    }

    #[test]
    fn serialization_plus_propagation() {
        let (mut net, _, xo) = two_nodes(1_000_000_000, SimTime::from_millis(1));
        let mut s: Scheduler<NetEvent> = Scheduler::new();
        net.send_packet(&mut s, pkt(1000), xo).unwrap();
        let d = run(&mut net, &mut s, SimTime::from_secs(1));
        assert_eq!(d[0].at, SimTime::from_micros(1008));
    }

    #[test]
    fn counters_wrap_like_counter32() {
        let (mut net, _, xo) = two_nodes(1_000_000_000, SimTime::ZERO);
        net.preset_counters(xo, 4_294_967_000).unwrap();
        let mut s: Scheduler<NetEvent> = Scheduler::new();
        net.send_packet(&mut s, pkt(600), xo).unwrap();
        let shadow: u64 = 4_294_967_000 + 600;
        let c = net.counters(xo).unwrap();
        assert_eq!(c.if_out_octets, 304);
        assert_eq!(c.if_out_octets as u64, shadow % (1 << 32));
        assert_eq!(c.out_octets_total(), shadow);
    }

    #[test]
    fn back_to_back_packets_are_serialized_in_order() {
        let (mut net, xa, xo) = two_nodes(100_000_000, SimTime::ZERO);
        let mut s: Scheduler<NetEvent> = Scheduler::new();
        for _ in 0..3 {
            net.inject(&mut s, xa, pkt(1000)).unwrap();
        }
        assert_eq!(net.queued(xo), 2);
        let d = run(&mut net, &mut s, SimTime::from_secs(1));
        let times: Vec<_> = d.iter().map(|d| d.at).collect();
        assert_eq!(
            times,
            vec![
                SimTime::from_micros(80),
                SimTime::from_micros(160),
                SimTime::from_micros(240)
            ]
        );
        assert!(net.conservation_holds());
        assert_eq!(net.stats(xo).unwrap().transmitted, 3);
    }

    #[test]
    fn unattached_interface_is_an_error() {
        let mut t = Topology::new();
        let x = t.add_node("X", Role::Core, Ipv4Addr::new(10, 0, 0, 1)).unwrap();
        let i = t.add_interface(x, "dangling", false).unwrap();
        let mut net = Network::new(t, &DEFAULT_BAND_LIMITS);
        let mut s: Scheduler<NetEvent> = Scheduler::new();
        assert!(matches!(
            net.send_packet(&mut s, pkt(100), i),
            Err(TopologyError::Unattached(_))
        ));
    }

    #[test]
    fn link_down_drops() {
        let (mut net, xa, xo) = two_nodes(100_000_000, SimTime::ZERO);
        net.set_link_up(LinkId(0), false);
        let mut s: Scheduler<NetEvent> = Scheduler::new();
        net.inject(&mut s, xa, pkt(100)).unwrap();
        assert!(run(&mut net, &mut s, SimTime::from_secs(1)).is_empty());
        assert_eq!(net.stats(xo).unwrap().dropped, 1);
        assert!(net.conservation_holds());
    }
}
