use std::net::Ipv4Addr;

use thiserror::Error;

use crate::simcore::{
    FlowId, NetEvent, Network, NodeId, Packet, PacketKind, Scheduler, SimTime, TopologyError, MIN_PACKET_SIZE,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProbeError {
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error("invalid probe parameters: {0}")]
    BadParams(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ProbeParams {
    pub n: u32,
    pub size: u32,
    pub interval: SimTime,
    /// How long after the last request replies are still counted.
    pub timeout: SimTime,
    pub dscp: u8,
}

impl Default for ProbeParams {
    fn default() -> Self {
        ProbeParams {
            n: 10,
            size: 64,
            interval: SimTime::from_millis(100),
            timeout: SimTime::from_secs(2),
            dscp: 0,
        }
    }
}

impl ProbeParams {
    pub fn validate(&self) -> Result<(), ProbeError> {
        if self.n == 0 {
            return Err(ProbeError::BadParams("train needs at least one probe".into()));
        }
        if self.size < MIN_PACKET_SIZE {
            return Err(ProbeError::BadParams(format!(
                "probe size below {MIN_PACKET_SIZE} bytes"
            )));
        }
        if self.dscp > 63 {
            return Err(ProbeError::BadParams(format!("DSCP {} out of range", self.dscp)));
        }
        Ok(())
    }
}

/// Outcome of one probe train. Averages over zero replies are `None`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbeReport {
    pub sent: u32,
    pub received: u32,
    pub loss_pct: f64,
    /// Seconds.
    pub avg_rtt: Option<f64>,
    /// Half the average round-trip time, in seconds.
    pub one_way_delay: Option<f64>,
    /// Reply throughput in bit/s.
    pub bw_estimate: Option<f64>,
    pub dscp: u8,
    pub first_send: Option<SimTime>,
}

/// Echo-style probe train state: requests go out at a fixed interval and
/// replies are matched by sequence number.
#[derive(Clone, Debug)]
pub struct ProbeTrain {
    flow: FlowId,
    src: Ipv4Addr,
    dst: Ipv4Addr,
    params: ProbeParams,
    send_times: Vec<SimTime>,
    reply_times: Vec<Option<SimTime>>,
}

impl ProbeTrain {
    pub fn new(flow: FlowId, src: Ipv4Addr, dst: Ipv4Addr, params: ProbeParams) -> Result<Self, ProbeError> {
        params.validate()?;
        Ok(ProbeTrain {
            flow,
            src,
            dst,
            params,
            send_times: Vec::new(),
            reply_times: vec![None; params.n as usize],
        })
    }

    pub fn flow(&self) -> FlowId {
        self.flow
    }

    pub fn params(&self) -> &ProbeParams {
        &self.params
    }

    pub fn sent(&self) -> u32 {
        self.send_times.len() as u32
    }

    pub fn first_send(&self) -> Option<SimTime> {
        self.send_times.first().copied()
    }

    /// When the next request is due, if any remain.
    pub fn next_send_at(&self) -> Option<SimTime> {
        match self.send_times.first() {
            _ if self.sent() >= self.params.n => None,
            None => Some(SimTime::ZERO),
            Some(&t0) => Some(t0 + SimTime::from_ps(self.params.interval.as_ps() * self.sent() as u64)),
        }
    }

    pub fn next_request(&mut self, now: SimTime) -> Option<Packet> {
        if self.sent() >= self.params.n {
            return None;
        }
        let mut p = Packet::data(self.flow, self.src, self.dst, self.params.size);
        p.kind = PacketKind::ProbeRequest;
        p.seq = self.sent();
        p.tos = self.params.dscp << 2;
        p.created_at = now;
        self.send_times.push(now);
        Some(p)
    }

    /// Replies stop counting `timeout` after the last request.
    pub fn deadline(&self) -> Option<SimTime> {
        if self.sent() < self.params.n {
            return None;
        }
        self.send_times.last().map(|t| *t + self.params.timeout)
    }

    pub fn is_complete(&self, now: SimTime) -> bool {
        self.deadline().is_some_and(|d| now >= d)
    }

    /// Records a reply; returns whether it belonged to this train and was
    /// counted.
    pub fn on_reply(&mut self, p: &Packet, now: SimTime) -> bool {
        if p.kind != PacketKind::ProbeReply || p.flow_id != self.flow {
            return false;
        }
        let seq = p.seq as usize;
        if seq >= self.send_times.len() || self.reply_times[seq].is_some() {
            return false;
        }
        if self.deadline().is_some_and(|d| now > d) {
            return false;
        }
        self.reply_times[seq] = Some(now);
        true
    }

    pub fn report(&self) -> ProbeReport {
        let sent = self.sent();
        let replies: Vec<(SimTime, SimTime)> = self
            .send_times
            .iter()
            .zip(&self.reply_times)
            .filter_map(|(s, r)| r.map(|r| (*s, r)))
            .collect();
        let received = replies.len() as u32;
        let loss_pct = if sent == 0 {
            0.0
        } else {
            100.0 * (sent - received) as f64 / sent as f64
        };
        let avg_rtt =
            (received > 0).then(|| replies.iter().map(|(s, r)| (*r - *s).as_secs_f64()).sum::<f64>() / received as f64);
        let bw_estimate = match (self.first_send(), replies.iter().map(|r| r.1).max()) {
            (Some(first), Some(last)) if last > first => {
                Some(received as f64 * self.params.size as f64 * 8.0 / (last - first).as_secs_f64())
            }
            _ => None,
        };
        ProbeReport {
            sent,
            received,
            loss_pct,
            avg_rtt,
            one_way_delay: avg_rtt.map(|r| r / 2.0),
            bw_estimate,
            dscp: self.params.dscp,
            first_send: self.first_send(),
        }
    }
}

enum Ev {
    Net(NetEvent),
    Send,
}

impl From<NetEvent> for Ev {
    fn from(e: NetEvent) -> Self {
        Ev::Net(e)
    }
}

/// Runs a single probe train between two routers on an otherwise idle
/// network whose clock starts at zero.
pub fn run_probe(net: &mut Network, src: NodeId, dst: NodeId, params: &ProbeParams) -> Result<ProbeReport, ProbeError> {
    let nodes = net.topology().nodes();
    let (Some(s), Some(d)) = (nodes.get(src.0 as usize), nodes.get(dst.0 as usize)) else {
        return Err(TopologyError::UnknownNode(format!("#{} or #{}", src.0, dst.0)).into());
    };
    let mut train = ProbeTrain::new(FlowId(u32::MAX), s.address, d.address, *params)?;
    let end = SimTime::from_ps(params.interval.as_ps() * (params.n as u64 - 1)) + params.timeout;
    let mut sched: Scheduler<Ev> = Scheduler::new();
    sched
        .schedule(SimTime::ZERO, Ev::Send)
        .expect("start is not in the past");
    let mut failure = None;
    sched
        .run_until(end, |sched, ev| {
            let delivered = match ev {
                Ev::Send => {
                    let now = sched.now();
                    let p = train.next_request(now).expect("one send event per probe");
                    if let Some(at) = train.next_send_at() {
                        sched.schedule(at, Ev::Send).expect("sends move forward");
                    }
                    net.originate(sched, src, p)
                }
                Ev::Net(e) => Ok(net.handle(sched, e)),
            };
            let mut delivered = match delivered {
                Ok(d) => d,
                Err(e) => {
                    failure.get_or_insert(e);
                    None
                }
            };
            while let Some(del) = delivered.take() {
                let now = sched.now();
                if del.iface.is_some() {
                    continue;
                }
                match del.packet.kind {
                    PacketKind::ProbeRequest if del.node == dst => {
                        delivered = net.originate(sched, dst, del.packet.echo_reply()).unwrap_or(None);
                    }
                    PacketKind::ProbeReply if del.node == src => {
                        train.on_reply(&del.packet, now);
                    }
                    _ => {}
                }
            }
        })
        .expect("probe events are scheduled in the future");
    if let Some(e) = failure {
        return Err(e.into());
    }
    Ok(train.report())
}
