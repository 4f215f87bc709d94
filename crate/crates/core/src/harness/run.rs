use std::collections::BTreeMap;
use std::net::Ipv4Addr;

use super::config::{scaled, HarnessError, LoadedScenario, ScenarioConfig, TapDir};
use super::export::{congestion_windows, in_window, ControlSummary, SeriesExport, Summary};
use crate::mms::{Cmm, NetMon, ProbeParams, ProbeTrain};
use crate::pep::Pep;
use crate::policy::{parse_policy_file, Action, Metric, PolicyRule};
use crate::rms::{
    compile_with, ClassAllocator, ControlMessage, Endpoint, FlowRequest, MeasurementReport, Payload, ResourceBroker,
    ResourceController, Verdict,
};
use crate::simcore::{
    Delivery, EventLog, FlowId, InterfaceId, Ipv4Net, NetEvent, Network, NodeId, Packet, PacketKind, Scheduler,
    SimTime, Tap, TapDirection, TapId, Topology,
};
use crate::traffic::{sample_arrivals, substream, FlowSpec, PacketTimes};

use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Probe trains use flow ids from here upward.
pub const PROBE_FLOW_BASE: u32 = 0xF000_0000;

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Hash every packet event into the summary digest. Slow on full runs.
    pub event_log: bool,
    /// Rules loaded after the scenario's policy file.
    pub extra_rules: Vec<PolicyRule>,
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub series: SeriesExport,
    pub audit: Vec<String>,
    pub summary: Summary,
    /// Every flow of the run, nominal time.
    pub flows: Vec<FlowSpec>,
    pub rules: Vec<PolicyRule>,
}

/// Builds the topology described by the config, with capacities and
/// delays already compressed.
pub fn build_topology(cfg: &ScenarioConfig) -> Result<Topology, HarnessError> {
    let k = cfg.time_compression;
    let mut t = Topology::new();
    for n in &cfg.topology.nodes {
        let id = t.add_node(&n.name, n.role, n.address)?;
        for f in &n.interfaces {
            let i = t.add_interface(id, &f.name, f.access)?;
            for net in &f.networks {
                let net: Ipv4Net =
                    net.parse()
                        .map_err(|e: crate::simcore::PrefixParseError| HarnessError::Invalid {
                            field: format!("{}:{}", n.name, f.name),
                            msg: e.to_string(),
                        })?;
                t.add_network(i, net)?;
            }
        }
    }
    for (i, l) in cfg.topology.links.iter().enumerate() {
        let a = t.iface_by_name(&l.a)?;
        let b = t.iface_by_name(&l.b)?;
        let delay = scaled(&format!("topology.links[{i}].prop_delay"), l.prop_delay, k)?;
        t.connect(a, b, l.capacity_bps * k, delay)?;
    }
    t.compute_routes();
    Ok(t)
}

/// Policy rules for a run: the scenario file (when enabled) plus extras.
pub fn scenario_rules(sc: &LoadedScenario, extra: &[PolicyRule]) -> Result<Vec<PolicyRule>, HarnessError> {
    let mut rules = match &sc.policy_text {
        Some(text) => parse_policy_file(text).map_err(|source| HarnessError::Policy {
            file: sc
                .config
                .policies
                .file
                .as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_default(),
            source,
        })?,
        None => Vec::new(),
    };
    for r in extra {
        let mut r = r.clone();
        if r.id.is_empty() || rules.iter().any(|x| x.id == r.id) {
            r.id = format!("staged{}", rules.len() + 1);
        }
        rules.push(r);
    }
    Ok(rules)
}

enum Ev {
    Net(NetEvent),
    FlowStart(u32),
    Emit(u32),
    Poll,
    ProbeTrain,
    ProbeSend(u32),
    ProbeDone(u32),
    Control(Box<ControlMessage>),
}

impl From<NetEvent> for Ev {
    fn from(e: NetEvent) -> Self {
        Ev::Net(e)
    }
}

struct Source {
    spec: FlowSpec,
    iface: InterfaceId,
    times: Option<PacketTimes>,
    next: Option<SimTime>,
    seq: u32,
}

struct ProbeSample {
    t: f64,
    loss: f64,
    delay: Option<f64>,
}

struct World {
    k: u64,
    seed: u64,
    net: Network,
    broker: ResourceBroker,
    controllers: BTreeMap<NodeId, ResourceController>,
    netmons: Vec<NetMon>,
    netmon_seq: Vec<u64>,
    cmm: Cmm,
    sources: Vec<Source>,
    trains: Vec<ProbeTrain>,
    probe_src: NodeId,
    probe_dst: NodeId,
    probe_path: String,
    probe_params: ProbeParams,
    probe_period: SimTime,
    probe_span: SimTime,
    /// Nominal microseconds.
    probe_jitter_us: u64,
    probe_rng: ChaCha8Rng,
    latency: SimTime,
    poll: SimTime,
    end: SimTime,
    aggregate_iface: InterfaceId,
    aggregate: Vec<(f64, f64)>,
    probes: Vec<ProbeSample>,
    started: u64,
    denied: u64,
    injected: u64,
    reports: u64,
    control_errors: Vec<String>,
}

impl World {
    fn nominal(&self, t: SimTime) -> SimTime {
        SimTime::from_ps(t.as_ps() * self.k)
    }

    fn to_sim(&self, nominal: SimTime) -> SimTime {
        SimTime::from_ps(nominal.as_ps() / self.k)
    }

    fn jitter(&mut self) -> SimTime {
        if self.probe_jitter_us == 0 {
            return SimTime::ZERO;
        }
        SimTime::from_micros(self.probe_rng.gen_range(0..self.probe_jitter_us))
    }

    fn send(&mut self, sched: &mut Scheduler<Ev>, msg: ControlMessage) {
        sched.schedule_in(self.latency, Ev::Control(Box::new(msg)));
    }

    fn handle(&mut self, sched: &mut Scheduler<Ev>, ev: Ev) {
        let delivered = match ev {
            Ev::Net(e) => self.net.handle(sched, e),
            Ev::FlowStart(i) => {
                self.flow_start(sched, i as usize);
                None
            }
            Ev::Emit(i) => {
                self.pump(sched, i as usize);
                None
            }
            Ev::Poll => {
                self.on_poll(sched);
                None
            }
            Ev::ProbeTrain => self.start_train(sched),
            Ev::ProbeSend(i) => self.probe_send(sched, i as usize),
            Ev::ProbeDone(i) => {
                self.probe_done(sched, i as usize);
                None
            }
            Ev::Control(msg) => {
                self.on_control(sched, *msg);
                None
            }
        };
        if let Some(d) = delivered {
            self.deliver(sched, d);
        }
    }

    fn flow_start(&mut self, sched: &mut Scheduler<Ev>, i: usize) {
        let s = &self.sources[i].spec;
        let req = FlowRequest {
            src: s.src,
            dst: s.dst,
            tos: s.tos,
        };
        if self.broker.flow_request(&req) == Verdict::Deny {
            self.denied += 1;
            return;
        }
        self.started += 1;
        let mut times = PacketTimes::new(s, self.seed);
        let src = &mut self.sources[i];
        src.next = times.next();
        src.times = Some(times);
        self.pump(sched, i);
    }

    /// Injects every packet of source `i` that is due and schedules the next.
    fn pump(&mut self, sched: &mut Scheduler<Ev>, i: usize) {
        let now = sched.now();
        loop {
            let Some(t) = self.sources[i].next else {
                return;
            };
            let at = self.to_sim(t);
            if at > now {
                sched.schedule(at, Ev::Emit(i as u32)).expect("future emit");
                return;
            }
            let src = &mut self.sources[i];
            let mut p = Packet::data(src.spec.flow_id, src.spec.src, src.spec.dst, src.spec.pkt_size);
            p.tos = src.spec.tos;
            p.seq = src.seq;
            p.created_at = now;
            src.seq += 1;
            src.next = src.times.as_mut().and_then(Iterator::next);
            let iface = src.iface;
            self.injected += 1;
            match self.net.inject(sched, iface, p) {
                Ok(Some(d)) => self.deliver(sched, d),
                Ok(None) => {}
                Err(e) => self.control_errors.push(e.to_string()),
            }
        }
    }

    fn deliver(&mut self, sched: &mut Scheduler<Ev>, d: Delivery) {
        let mut next = Some(d);
        while let Some(d) = next.take() {
            if d.iface.is_some() {
                continue;
            }
            match d.packet.kind {
                PacketKind::ProbeRequest if d.node == self.probe_dst => {
                    next = self.net.originate(sched, d.node, d.packet.echo_reply()).unwrap_or(None);
                }
                PacketKind::ProbeReply if d.node == self.probe_src => {
                    let idx = d.packet.flow_id.0.wrapping_sub(PROBE_FLOW_BASE) as usize;
                    let now = self.nominal(sched.now());
                    if let Some(train) = self.trains.get_mut(idx) {
                        train.on_reply(&d.packet, now);
                    }
                }
                _ => {}
            }
        }
    }

    fn on_poll(&mut self, sched: &mut Scheduler<Ev>) {
        let now = sched.now();
        let nominal = self.nominal(now);
        for i in 0..self.netmons.len() {
            let est = self.netmons[i]
                .poll(&self.net, nominal)
                .expect("watched interfaces exist");
            for (iface, e) in est {
                if iface == self.aggregate_iface {
                    self.aggregate.push((nominal.as_secs_f64(), e.bw_bps));
                }
            }
            let report = self.netmons[i].report(nominal);
            if report.values.is_empty() {
                continue;
            }
            self.netmon_seq[i] += 1;
            let msg = ControlMessage {
                from: Endpoint::NetMon(self.netmons[i].node()),
                to: Endpoint::Broker,
                seq: self.netmon_seq[i],
                sent_at: nominal,
                payload: Payload::MeasurementReport(report),
            };
            self.send(sched, msg);
        }
        if now + self.poll <= self.end {
            sched.schedule_in(self.poll, Ev::Poll);
        }
    }

    fn start_train(&mut self, sched: &mut Scheduler<Ev>) -> Option<Delivery> {
        let now = sched.now();
        let next = now + self.probe_period;
        if next + self.probe_span <= self.end {
            sched.schedule(next, Ev::ProbeTrain).expect("future train");
        }
        let topo = self.net.topology();
        let (src, dst) = (topo.node(self.probe_src).address, topo.node(self.probe_dst).address);
        let idx = self.trains.len();
        let train = ProbeTrain::new(FlowId(PROBE_FLOW_BASE + idx as u32), src, dst, self.probe_params)
            .expect("validated params");
        self.trains.push(train);
        let first = self.nominal(now) + self.jitter();
        sched
            .schedule(self.to_sim(first), Ev::ProbeSend(idx as u32))
            .expect("future probe");
        None
    }

    fn probe_send(&mut self, sched: &mut Scheduler<Ev>, i: usize) -> Option<Delivery> {
        let nominal = self.nominal(sched.now());
        let train = &mut self.trains[i];
        let p = train.next_request(nominal)?;
        let (next, ev) = match train.next_send_at() {
            Some(t) => (t, Ev::ProbeSend(i as u32)),
            None => (train.deadline().expect("train fully sent"), Ev::ProbeDone(i as u32)),
        };
        let next = match ev {
            Ev::ProbeSend(_) => next + self.jitter(),
            _ => next,
        };
        sched.schedule(self.to_sim(next), ev).expect("future probe event");
        self.net.originate(sched, self.probe_src, p).unwrap_or(None)
    }

    fn probe_done(&mut self, sched: &mut Scheduler<Ev>, i: usize) {
        let r = self.trains[i].report();
        let t = r.first_send.map_or(0.0, SimTime::as_secs_f64);
        self.probes.push(ProbeSample {
            t,
            loss: r.loss_pct,
            delay: r.one_way_delay,
        });
        let mut values = vec![(Metric::ProbeLoss(self.probe_path.clone()), r.loss_pct)];
        if let Some(d) = r.one_way_delay {
            values.push((Metric::ProbeDelay(self.probe_path.clone()), d));
        }
        let nominal = self.nominal(sched.now());
        let msg = ControlMessage {
            from: Endpoint::NetMon(self.probe_src),
            to: Endpoint::Broker,
            seq: 0,
            sent_at: nominal,
            payload: Payload::MeasurementReport(MeasurementReport { at: nominal, values }),
        };
        self.send(sched, msg);
    }

    fn on_control(&mut self, sched: &mut Scheduler<Ev>, msg: ControlMessage) {
        let nominal = self.nominal(sched.now());
        match msg.to {
            Endpoint::Broker => match &msg.payload {
                Payload::MeasurementReport(r) => {
                    self.reports += 1;
                    self.cmm.ingest(r);
                    for m in self.broker.measurement_report(nominal, r) {
                        self.send(sched, m);
                    }
                }
                Payload::Ack | Payload::Error(_) => {
                    if let Err(e) = self.broker.handle_reply(&msg) {
                        self.control_errors.push(e.to_string());
                    }
                }
                Payload::Apply(_) => self.control_errors.push("apply addressed to the broker".into()),
            },
            Endpoint::Controller(node) => {
                let Some(rc) = self.controllers.get_mut(&node) else {
                    self.control_errors.push(format!("no controller on node #{}", node.0));
                    return;
                };
                if let Some(reply) = rc.handle(self.net.pep_mut(node), &msg, nominal) {
                    self.send(sched, reply);
                }
            }
            Endpoint::NetMon(_) => {}
        }
    }
}

fn tap_series(tap: &Tap, flow: FlowId, k: u64, window: SimTime, end: SimTime) -> Vec<(f64, Option<f64>)> {
    let nominal = Tap {
        records: tap
            .records
            .iter()
            .map(|&(t, f, b)| (SimTime::from_ps(t.as_ps() * k), f, b))
            .collect(),
        ..tap.clone()
    };
    crate::mms::flow_rate(&nominal, flow, window, SimTime::ZERO, end)
        .points
        .into_iter()
        .map(|(t, v)| (t.as_secs_f64(), Some(v)))
        .collect()
}

fn access_iface(topo: &Topology, addr: Ipv4Addr, field: &str) -> Result<InterfaceId, HarnessError> {
    topo.access_iface_for(addr).ok_or_else(|| HarnessError::Invalid {
        field: field.into(),
        msg: format!("no access interface serves {addr}"),
    })
}

/// POLICE rates are nominal; the simulated policers run `k` times faster.
fn compress_rule(r: &PolicyRule, k: u64) -> PolicyRule {
    let mut r = r.clone();
    for a in &mut r.actions {
        if let Action::Police { rate_bps, .. } = a {
            *rate_bps = rate_bps.saturating_mul(k);
        }
    }
    r
}

/// Applies the active rules straight to fresh PEPs and compares the result
/// with the PEPs configured through broker messages.
fn two_path_equivalent(net: &Network, broker: &ResourceBroker, rules: &[PolicyRule], band_limits: &[usize]) -> bool {
    let topo = net.topology();
    let mut fresh: BTreeMap<NodeId, (Pep, ResourceController)> = BTreeMap::new();
    let mut alloc = ClassAllocator::default();
    for r in rules {
        let Ok(cmds) = compile_with(r, &mut alloc) else {
            return false;
        };
        if broker.is_active(&r.id) != Some(true) {
            continue;
        }
        for node in topo.nodes().iter().filter(|n| n.role == r.target) {
            if !broker_has_controller(broker, node.id) {
                continue;
            }
            let (pep, rc) = fresh.entry(node.id).or_insert_with(|| {
                let access = node.interfaces.iter().map(|i| i.access).collect();
                (
                    Pep::new(node.role, access, band_limits),
                    ResourceController::new(node.id, node.role),
                )
            });
            for c in &cmds {
                if rc.apply(pep, c).is_err() {
                    return false;
                }
            }
        }
    }
    topo.nodes()
        .iter()
        .filter(|n| broker_has_controller(broker, n.id))
        .all(|n| {
            let direct = match fresh.get(&n.id) {
                Some((pep, _)) => pep.config_dump(),
                None => {
                    let access = n.interfaces.iter().map(|i| i.access).collect();
                    Pep::new(n.role, access, band_limits).config_dump()
                }
            };
            direct == net.pep(n.id).config_dump()
        })
}

fn broker_has_controller(broker: &ResourceBroker, node: NodeId) -> bool {
    broker.controller_nodes().any(|n| n == node)
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = xs.fold((0.0, 0u64), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Runs one scenario to completion.
pub fn run_scenario(sc: &LoadedScenario, opts: &RunOptions) -> Result<RunResult, HarnessError> {
    let cfg = &sc.config;
    cfg.validate()?;
    let k = cfg.time_compression;
    let mut net = Network::new(build_topology(cfg)?, &cfg.topology.band_limits);
    if opts.event_log {
        net.enable_event_log(EventLog::digest_only());
    }
    let topo = net.topology().clone();
    let end = scaled("duration", cfg.duration, k)?;
    let m = &cfg.measurement;

    let rules = scenario_rules(sc, &opts.extra_rules)?;
    let deployed: Vec<PolicyRule> = rules.iter().map(|r| compress_rule(r, k)).collect();
    let mut broker = ResourceBroker::default();
    let mut controllers = BTreeMap::new();
    for name in &cfg.control.controllers {
        let node = topo.node(topo.node_by_name(name)?);
        broker.register_controller(node.id, &node.name, node.role);
        controllers.insert(node.id, ResourceController::new(node.id, node.role));
    }

    let mut netmons = Vec::new();
    for nm in &m.netmon {
        let node = topo.node_by_name(&nm.node)?;
        let mut mon = NetMon::new(node, m.alpha).map_err(|e| HarnessError::Invalid {
            field: "measurement.alpha".into(),
            msg: e.to_string(),
        })?;
        mon.set_time_compression(k);
        for f in &nm.interfaces {
            mon.watch(&net, topo.iface_by_name(f)?)
                .map_err(|e| HarnessError::Invalid {
                    field: format!("measurement.netmon {f}"),
                    msg: e.to_string(),
                })?;
        }
        netmons.push(mon);
    }

    let tagged = cfg.tagged_spec();
    let mut taps: Vec<TapId> = Vec::new();
    for t in [&m.tagged_ingress, &m.tagged_egress] {
        let dir = match t.direction {
            TapDir::In => TapDirection::In,
            TapDir::Out => TapDirection::Out,
        };
        taps.push(net.install_tap(topo.iface_by_name(&t.iface)?, dir, Some(tagged.flow_id))?);
    }

    let mut flows = vec![tagged.clone()];
    for a in &cfg.traffic.arrivals {
        flows.extend(sample_arrivals(&cfg.arrival_process(a)));
    }
    let mut sources = Vec::with_capacity(flows.len());
    for (i, f) in flows.iter().enumerate() {
        let field = if i == 0 {
            "traffic.tagged.src".to_string()
        } else {
            format!("flow {}", f.flow_id)
        };
        sources.push(Source {
            spec: f.clone(),
            iface: access_iface(&topo, f.src, &field)?,
            times: None,
            next: None,
            seq: 0,
        });
    }

    let p = &m.probe;
    let probe_params = cfg.probe_params();
    let span_nominal =
        SimTime::from_ps(probe_params.interval.as_ps() * (probe_params.n as u64 - 1)) + probe_params.timeout;
    let mut world = World {
        k,
        seed: cfg.seed,
        net,
        broker,
        controllers,
        netmon_seq: vec![0; netmons.len()],
        netmons,
        cmm: Cmm::new(SimTime::from_secs_f64(cfg.duration)),
        sources,
        trains: Vec::new(),
        probe_src: topo.node_by_name(&p.src)?,
        probe_dst: topo.node_by_name(&p.dst)?,
        probe_path: format!("{}->{}", p.src, p.dst),
        probe_params,
        probe_period: scaled("measurement.probe.period", p.period, k)?,
        probe_span: SimTime::from_ps(span_nominal.as_ps() / k) + scaled("measurement.probe.jitter", p.jitter, k)?,
        probe_jitter_us: (p.jitter * 1e6).round() as u64,
        probe_rng: substream(cfg.seed, "probe", "jitter"),
        latency: scaled("control.latency", cfg.control.latency, k)?,
        poll: scaled("measurement.poll_interval", m.poll_interval, k)?,
        end,
        aggregate_iface: topo.iface_by_name(&m.aggregate_iface)?,
        aggregate: Vec::new(),
        probes: Vec::new(),
        started: 0,
        denied: 0,
        injected: 0,
        reports: 0,
        control_errors: Vec::new(),
    };

    let mut sched: Scheduler<Ev> = Scheduler::new();
    for msg in world.broker.policy_load(SimTime::ZERO, deployed)? {
        world.send(&mut sched, msg);
    }
    sched.schedule(SimTime::ZERO, Ev::Poll).expect("start of run");
    let offset = scaled("measurement.probe.offset", p.offset, k)?;
    if offset + world.probe_span <= end {
        sched.schedule(offset, Ev::ProbeTrain).expect("start of run");
    }
    for (i, f) in flows.iter().enumerate() {
        let at = world.to_sim(f.start);
        if at < end {
            sched.schedule(at, Ev::FlowStart(i as u32)).expect("start of run");
        }
    }
    sched
        .run_until(end, |s, ev| world.handle(s, ev))
        .expect("events are never scheduled in the past");

    let poll_nominal = SimTime::from_secs_f64(m.poll_interval);
    let end_nominal = SimTime::from_secs_f64(cfg.duration);
    let mut series = SeriesExport::new();
    for &(t, v) in &world.aggregate {
        series.aggregate_bw.push(t, Some(v));
    }
    series.tagged_ingress_bw.points = tap_series(world.net.tap(taps[0]), tagged.flow_id, k, poll_nominal, end_nominal);
    series.tagged_egress_bw.points = tap_series(world.net.tap(taps[1]), tagged.flow_id, k, poll_nominal, end_nominal);
    for s in &world.probes {
        series.probe_delay.push(s.t, s.delay);
        series.probe_loss.push(s.t, Some(s.loss));
    }

    let windows = congestion_windows(&series.aggregate_bw, m.poll_interval, m.congestion_threshold_bps);
    let tagged_egress_min_congested = series
        .tagged_egress_bw
        .points
        .iter()
        .filter(|(t, _)| in_window(*t, &windows).is_some())
        .filter_map(|p| p.1)
        .reduce(f64::min);
    let mean_delay_congested = mean(
        world
            .probes
            .iter()
            .filter(|s| in_window(s.t, &windows).is_some())
            .filter_map(|s| s.delay),
    );

    let net = &world.net;
    let mut drops = BTreeMap::new();
    let mut probe_drops = 0;
    for i in topo.interfaces() {
        let st = net.stats(i.id)?;
        drops.insert(topo.iface_name(i.id), st.dropped);
        probe_drops +=
            st.dropped_by_kind[PacketKind::ProbeRequest.index()] + st.dropped_by_kind[PacketKind::ProbeReply.index()];
    }
    let policed_drops = topo.nodes().iter().map(|n| net.pep(n.id).policed_drops()).sum();

    let broker = &world.broker;
    let mut errors: Vec<String> = broker
        .errors()
        .iter()
        .map(|(seq, e)| format!("seq {seq}: {e}"))
        .collect();
    errors.extend(world.control_errors.iter().cloned());
    let control = ControlSummary {
        applies_sent: broker.applies_sent(),
        acks: broker.acks(),
        exactly_once: broker.all_answered() && world.control_errors.is_empty(),
        two_path_equivalent: two_path_equivalent(net, broker, &deployed_copy(&rules, k), &cfg.topology.band_limits),
        reports_received: world.reports,
        errors,
    };

    let summary = Summary {
        scenario: cfg.name.clone(),
        seed: cfg.seed,
        time_compression: k,
        duration: cfg.duration,
        policies_enabled: cfg.policies.enabled,
        rules: rules.iter().map(ToString::to_string).collect(),
        peak_aggregate_bps: series.aggregate_bw.max().unwrap_or(0.0),
        tagged_ingress_min_bps: series.tagged_ingress_bw.min(),
        tagged_ingress_max_bps: series.tagged_ingress_bw.max(),
        tagged_egress_min_bps: series.tagged_egress_bw.min(),
        tagged_egress_min_congested_bps: tagged_egress_min_congested,
        max_probe_delay_s: series.probe_delay.max(),
        mean_probe_delay_congested_s: mean_delay_congested,
        max_probe_loss_pct: series.probe_loss.max(),
        congestion_windows: windows,
        drops,
        probe_drops,
        policed_drops,
        flows_started: world.started,
        flows_denied: world.denied,
        packets_injected: world.injected,
        events: sched.processed(),
        conservation_holds: net.conservation_holds(),
        decision_digest: format!("{:016x}", net.decision_digest()),
        event_log_digest: net.event_log().map(EventLog::digest),
        control,
    };
    Ok(RunResult {
        series,
        audit: broker.audit().iter().map(ToString::to_string).collect(),
        summary,
        flows,
        rules,
    })
}

fn deployed_copy(rules: &[PolicyRule], k: u64) -> Vec<PolicyRule> {
    rules.iter().map(|r| compress_rule(r, k)).collect()
}
