use std::fs;
use std::net::Ipv4Addr;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mms::{ProbeParams, DEFAULT_ALPHA};
use crate::pep::DEFAULT_BAND_LIMITS;
use crate::policy::ParseError;
use crate::rms::BrokerError;
use crate::simcore::{Ipv4Net, Role, SimTime, TopologyError};
use crate::traffic::{default_pkt_size, FlowError, FlowKind, FlowTemplate};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{file}: at {field}: {msg}")]
    Schema { file: String, field: String, msg: String },
    #[error("{field}: unknown {what} '{name}'")]
    Reference {
        field: String,
        what: &'static str,
        name: String,
    },
    #[error("{field}: {msg}")]
    Invalid { field: String, msg: String },
    #[error("{file}: {source}")]
    Policy {
        file: String,
        #[source]
        source: ParseError,
    },
    #[error("policy deployment failed: {0}")]
    Deploy(#[from] BrokerError),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Flow(#[from] FlowError),
}

fn invalid(field: impl Into<String>, msg: impl Into<String>) -> HarnessError {
    HarnessError::Invalid {
        field: field.into(),
        msg: msg.into(),
    }
}

/// Top-level scenario file. All times are nominal seconds and all rates
/// nominal bit/s; `time_compression` is applied when the run starts.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub name: String,
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub duration: f64,
    #[serde(default = "one")]
    pub time_compression: u64,
    #[serde(default)]
    pub topology: TopologyConfig,
    #[serde(default)]
    pub policies: PolicyConfig,
    pub traffic: TrafficConfig,
    #[serde(default)]
    pub measurement: MeasurementConfig,
    #[serde(default)]
    pub control: ControlConfig,
}

fn default_seed() -> u64 {
    1
}

fn one() -> u64 {
    1
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologyConfig {
    pub nodes: Vec<NodeConfig>,
    pub links: Vec<LinkConfig>,
    #[serde(default = "default_band_limits")]
    pub band_limits: Vec<usize>,
}

fn default_band_limits() -> Vec<usize> {
    DEFAULT_BAND_LIMITS.to_vec()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeConfig {
    pub name: String,
    pub role: Role,
    pub address: Ipv4Addr,
    pub interfaces: Vec<InterfaceConfig>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterfaceConfig {
    pub name: String,
    #[serde(default)]
    pub access: bool,
    #[serde(default)]
    pub networks: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkConfig {
    pub a: String,
    pub b: String,
    pub capacity_bps: u64,
    pub prop_delay: f64,
}

impl Default for TopologyConfig {
    /// Edge router A, core router B and edge router C in a line: 1 Gbps
    /// from A to B and a 100 Mbps bottleneck from B to C, 10 ms per link.
    fn default() -> Self {
        let iface = |name: &str, access: bool, nets: &[&str]| InterfaceConfig {
            name: name.into(),
            access,
            networks: nets.iter().map(|s| s.to_string()).collect(),
        };
        let node = |name: &str, role, last: u8, ifaces| NodeConfig {
            name: name.into(),
            role,
            address: Ipv4Addr::new(10, 0, 0, last),
            interfaces: ifaces,
        };
        TopologyConfig {
            nodes: vec![
                node(
                    "A",
                    Role::Edge,
                    1,
                    vec![iface("ingress", true, &["192.168.0.0/16"]), iface("egress", false, &[])],
                ),
                node(
                    "B",
                    Role::Core,
                    2,
                    vec![iface("ingress", false, &[]), iface("egress", false, &[])],
                ),
                node(
                    "C",
                    Role::Edge,
                    3,
                    vec![iface("ingress", false, &[]), iface("egress", true, &["172.16.0.0/16"])],
                ),
            ],
            links: vec![
                LinkConfig {
                    a: "A:egress".into(),
                    b: "B:ingress".into(),
                    capacity_bps: 1_000_000_000,
                    prop_delay: 0.01,
                },
                LinkConfig {
                    a: "B:egress".into(),
                    b: "C:ingress".into(),
                    capacity_bps: 100_000_000,
                    prop_delay: 0.01,
                },
            ],
            band_limits: default_band_limits(),
        }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyConfig {
    /// Policy file, relative to the scenario file.
    #[serde(default)]
    pub file: Option<PathBuf>,
    #[serde(default)]
    pub enabled: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrafficConfig {
    #[serde(default)]
    pub arrivals: Vec<ArrivalConfig>,
    pub tagged: TaggedConfig,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrivalConfig {
    pub name: String,
    pub lambda: f64,
    pub mean_duration: f64,
    pub window: (f64, f64),
    pub first_flow_id: u32,
    /// Overrides the scenario seed for this process.
    #[serde(default)]
    pub seed: Option<u64>,
    pub template: FlowTemplate,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TaggedConfig {
    pub flow_id: u32,
    #[serde(flatten)]
    pub kind: FlowKind,
    pub rate_bps: u64,
    #[serde(default = "default_pkt_size")]
    pub pkt_size: u32,
    pub src: Ipv4Addr,
    pub dst: Ipv4Addr,
    #[serde(default)]
    pub tos: u8,
    #[serde(default)]
    pub start: f64,
    /// Defaults to the rest of the run.
    #[serde(default)]
    pub duration: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TapDir {
    In,
    Out,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TapConfig {
    pub iface: String,
    pub direction: TapDir,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetMonConfig {
    pub node: String,
    pub interfaces: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeConfig {
    pub src: String,
    pub dst: String,
    /// Seconds between train starts.
    #[serde(default = "default_probe_period")]
    pub period: f64,
    /// First train start.
    #[serde(default = "default_probe_offset")]
    pub offset: f64,
    #[serde(default = "default_probe_n")]
    pub n: u32,
    #[serde(default = "default_probe_size")]
    pub size: u32,
    #[serde(default = "default_probe_interval")]
    pub interval: f64,
    #[serde(default = "default_probe_timeout")]
    pub timeout: f64,
    #[serde(default)]
    pub dscp: u8,
    /// Each request is delayed by a seeded uniform draw from `[0, jitter)`,
    /// so trains do not lock onto the phase of periodic background traffic.
    #[serde(default = "default_probe_jitter")]
    pub jitter: f64,
}

fn default_probe_jitter() -> f64 {
    0.002
}

fn default_probe_period() -> f64 {
    5.0
}
fn default_probe_offset() -> f64 {
    0.5
}
fn default_probe_n() -> u32 {
    ProbeParams::default().n
}
fn default_probe_size() -> u32 {
    ProbeParams::default().size
}
fn default_probe_interval() -> f64 {
    ProbeParams::default().interval.as_secs_f64()
}
fn default_probe_timeout() -> f64 {
    ProbeParams::default().timeout.as_secs_f64()
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            src: "A".into(),
            dst: "C".into(),
            period: default_probe_period(),
            offset: default_probe_offset(),
            n: default_probe_n(),
            size: default_probe_size(),
            interval: default_probe_interval(),
            timeout: default_probe_timeout(),
            dscp: 0,
            jitter: default_probe_jitter(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementConfig {
    #[serde(default = "default_poll")]
    pub poll_interval: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_netmons")]
    pub netmon: Vec<NetMonConfig>,
    /// Interface whose output rate is the aggregate series.
    #[serde(default = "default_aggregate_iface")]
    pub aggregate_iface: String,
    /// Aggregate rate at or above which an interval counts as congested.
    #[serde(default = "default_congestion")]
    pub congestion_threshold_bps: f64,
    #[serde(default)]
    pub probe: ProbeConfig,
    #[serde(default = "default_tagged_ingress")]
    pub tagged_ingress: TapConfig,
    #[serde(default = "default_tagged_egress")]
    pub tagged_egress: TapConfig,
}

fn default_poll() -> f64 {
    crate::mms::DEFAULT_POLL_INTERVAL.as_secs_f64()
}
fn default_alpha() -> f64 {
    DEFAULT_ALPHA
}
fn default_netmons() -> Vec<NetMonConfig> {
    [("A", "A:egress"), ("B", "B:egress"), ("C", "C:egress")]
        .into_iter()
        .map(|(n, i)| NetMonConfig {
            node: n.into(),
            interfaces: vec![i.into()],
        })
        .collect()
}
fn default_aggregate_iface() -> String {
    "A:egress".into()
}
fn default_congestion() -> f64 {
    100e6
}
fn default_tagged_ingress() -> TapConfig {
    TapConfig {
        iface: "A:ingress".into(),
        direction: TapDir::In,
    }
}
fn default_tagged_egress() -> TapConfig {
    TapConfig {
        iface: "C:egress".into(),
        direction: TapDir::Out,
    }
}

impl Default for MeasurementConfig {
    fn default() -> Self {
        MeasurementConfig {
            poll_interval: default_poll(),
            alpha: default_alpha(),
            netmon: default_netmons(),
            aggregate_iface: default_aggregate_iface(),
            congestion_threshold_bps: default_congestion(),
            probe: ProbeConfig::default(),
            tagged_ingress: default_tagged_ingress(),
            tagged_egress: default_tagged_egress(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlConfig {
    /// One-way delay of broker, controller and NetMon messages.
    #[serde(default = "default_latency")]
    pub latency: f64,
    /// Routers that run a resource controller; the role comes from the node.
    #[serde(default = "default_controllers")]
    pub controllers: Vec<String>,
}

fn default_latency() -> f64 {
    0.001
}
fn default_controllers() -> Vec<String> {
    vec!["A".into(), "B".into()]
}

impl Default for ControlConfig {
    fn default() -> Self {
        ControlConfig {
            latency: default_latency(),
            controllers: default_controllers(),
        }
    }
}

/// Nominal seconds to an exact simulator time under compression `k`.
pub(crate) fn scaled(field: &str, secs: f64, k: u64) -> Result<SimTime, HarnessError> {
    if !(secs >= 0.0 && secs.is_finite()) {
        return Err(invalid(field, format!("{secs} is not a non-negative time")));
    }
    let ps = SimTime::from_secs_f64(secs).as_ps();
    if !ps.is_multiple_of(k) {
        return Err(invalid(
            field,
            format!("{secs} s is not divisible by time compression {k}"),
        ));
    }
    Ok(SimTime::from_ps(ps / k))
}

fn check_iface(cfg: &ScenarioConfig, field: &str, qualified: &str) -> Result<(), HarnessError> {
    let (node, iface) = qualified.split_once(':').ok_or_else(|| HarnessError::Reference {
        field: field.into(),
        what: "interface",
        name: qualified.into(),
    })?;
    let n = check_node(cfg, field, node)?;
    if !n.interfaces.iter().any(|i| i.name == iface) {
        return Err(HarnessError::Reference {
            field: field.into(),
            what: "interface",
            name: qualified.into(),
        });
    }
    Ok(())
}

fn check_node<'a>(cfg: &'a ScenarioConfig, field: &str, name: &str) -> Result<&'a NodeConfig, HarnessError> {
    cfg.topology
        .nodes
        .iter()
        .find(|n| n.name == name)
        .ok_or_else(|| HarnessError::Reference {
            field: field.into(),
            what: "node",
            name: name.into(),
        })
}

impl ScenarioConfig {
    pub fn from_json(text: &str, file: &str) -> Result<Self, HarnessError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: ScenarioConfig = serde_path_to_error::deserialize(de).map_err(|e| HarnessError::Schema {
            file: file.into(),
            field: e.path().to_string(),
            msg: e.inner().to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks values and resolves every node and interface reference.
    pub fn validate(&self) -> Result<(), HarnessError> {
        let k = self.time_compression;
        if k == 0 || 1_000 % k != 0 {
            return Err(invalid("time_compression", format!("{k} must be a divisor of 1000")));
        }
        if self.duration.is_nan() || self.duration <= 0.0 {
            return Err(invalid("duration", "must be positive"));
        }
        scaled("duration", self.duration, k)?;
        let topo = &self.topology;
        if topo.band_limits.is_empty() || topo.band_limits.contains(&0) {
            return Err(invalid(
                "topology.band_limits",
                "need at least one band, each holding a packet",
            ));
        }
        for (i, n) in topo.nodes.iter().enumerate() {
            if topo.nodes[..i].iter().any(|m| m.name == n.name) {
                return Err(invalid(
                    format!("topology.nodes[{i}].name"),
                    format!("duplicate node '{}'", n.name),
                ));
            }
            for (j, f) in n.interfaces.iter().enumerate() {
                for (x, net) in f.networks.iter().enumerate() {
                    net.parse::<Ipv4Net>().map_err(|e| {
                        invalid(
                            format!("topology.nodes[{i}].interfaces[{j}].networks[{x}]"),
                            e.to_string(),
                        )
                    })?;
                }
            }
        }
        for (i, l) in topo.links.iter().enumerate() {
            check_iface(self, &format!("topology.links[{i}].a"), &l.a)?;
            check_iface(self, &format!("topology.links[{i}].b"), &l.b)?;
            if l.capacity_bps == 0 {
                return Err(invalid(format!("topology.links[{i}].capacity_bps"), "must be positive"));
            }
            l.capacity_bps
                .checked_mul(k)
                .ok_or_else(|| invalid(format!("topology.links[{i}].capacity_bps"), "overflows when compressed"))?;
            scaled(&format!("topology.links[{i}].prop_delay"), l.prop_delay, k)?;
        }
        if self.policies.enabled && self.policies.file.is_none() {
            return Err(invalid("policies.file", "required when policies are enabled"));
        }
        for (i, a) in self.traffic.arrivals.iter().enumerate() {
            let field = format!("traffic.arrivals[{i}]");
            scaled(&format!("{field}.window[0]"), a.window.0, k)?;
            scaled(&format!("{field}.window[1]"), a.window.1, k)?;
            self.arrival_process(a).validate()?;
        }
        let t = &self.traffic.tagged;
        scaled("traffic.tagged.start", t.start, k)?;
        if let Some(d) = t.duration {
            scaled("traffic.tagged.duration", d, k)?;
        }
        self.tagged_spec().validate()?;
        let m = &self.measurement;
        if m.poll_interval.is_nan() || m.poll_interval <= 0.0 {
            return Err(invalid("measurement.poll_interval", "must be positive"));
        }
        scaled("measurement.poll_interval", m.poll_interval, k)?;
        if !(0.0..=1.0).contains(&m.alpha) {
            return Err(invalid("measurement.alpha", format!("{} is outside [0, 1]", m.alpha)));
        }
        for (i, nm) in m.netmon.iter().enumerate() {
            check_node(self, &format!("measurement.netmon[{i}].node"), &nm.node)?;
            for (j, f) in nm.interfaces.iter().enumerate() {
                check_iface(self, &format!("measurement.netmon[{i}].interfaces[{j}]"), f)?;
                if !f.starts_with(&format!("{}:", nm.node)) {
                    return Err(invalid(
                        format!("measurement.netmon[{i}].interfaces[{j}]"),
                        format!("{f} is not on node {}", nm.node),
                    ));
                }
            }
        }
        check_iface(self, "measurement.aggregate_iface", &m.aggregate_iface)?;
        if !m.netmon.iter().any(|nm| nm.interfaces.contains(&m.aggregate_iface)) {
            return Err(invalid(
                "measurement.aggregate_iface",
                format!("{} is not watched by any NetMon", m.aggregate_iface),
            ));
        }
        check_iface(self, "measurement.tagged_ingress.iface", &m.tagged_ingress.iface)?;
        check_iface(self, "measurement.tagged_egress.iface", &m.tagged_egress.iface)?;
        let p = &m.probe;
        check_node(self, "measurement.probe.src", &p.src)?;
        check_node(self, "measurement.probe.dst", &p.dst)?;
        if p.period.is_nan() || p.period <= 0.0 {
            return Err(invalid("measurement.probe.period", "must be positive"));
        }
        for (f, v) in [
            ("period", p.period),
            ("offset", p.offset),
            ("interval", p.interval),
            ("timeout", p.timeout),
            ("jitter", p.jitter),
        ] {
            scaled(&format!("measurement.probe.{f}"), v, k)?;
        }
        if p.jitter >= p.interval {
            return Err(invalid(
                "measurement.probe.jitter",
                "must be shorter than the probe interval",
            ));
        }
        self.probe_params()
            .validate()
            .map_err(|e| invalid("measurement.probe", e.to_string()))?;
        scaled("control.latency", self.control.latency, k)?;
        for (i, c) in self.control.controllers.iter().enumerate() {
            check_node(self, &format!("control.controllers[{i}]"), c)?;
        }
        Ok(())
    }

    pub fn arrival_process(&self, a: &ArrivalConfig) -> crate::traffic::ArrivalProcess {
        crate::traffic::ArrivalProcess {
            name: a.name.clone(),
            lambda: a.lambda,
            mean_duration: a.mean_duration,
            window: (SimTime::from_secs_f64(a.window.0), SimTime::from_secs_f64(a.window.1)),
            template: a.template.clone(),
            first_flow_id: a.first_flow_id,
            seed: a.seed.unwrap_or(self.seed),
        }
    }

    /// The tagged flow in nominal time.
    pub fn tagged_spec(&self) -> crate::traffic::FlowSpec {
        let t = &self.traffic.tagged;
        let start = SimTime::from_secs_f64(t.start);
        let duration = match t.duration {
            Some(d) => SimTime::from_secs_f64(d),
            None => SimTime::from_secs_f64(self.duration).saturating_sub(start),
        };
        crate::traffic::FlowSpec {
            flow_id: crate::simcore::FlowId(t.flow_id),
            kind: t.kind,
            rate_bps: t.rate_bps,
            pkt_size: t.pkt_size,
            src: t.src,
            dst: t.dst,
            tos: t.tos,
            start,
            duration,
        }
    }

    /// Probe parameters in nominal time.
    pub fn probe_params(&self) -> ProbeParams {
        let p = &self.measurement.probe;
        ProbeParams {
            n: p.n,
            size: p.size,
            interval: SimTime::from_secs_f64(p.interval),
            timeout: SimTime::from_secs_f64(p.timeout),
            dscp: p.dscp,
        }
    }
}

/// A loaded scenario with its policy file resolved against the scenario's
/// directory.
#[derive(Clone, Debug)]
pub struct LoadedScenario {
    pub config: ScenarioConfig,
    pub source: Option<PathBuf>,
    pub policy_text: Option<String>,
}

pub fn load_config(path: &Path) -> Result<LoadedScenario, HarnessError> {
    let name = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|source| HarnessError::Io {
        path: name.clone(),
        source,
    })?;
    let config = ScenarioConfig::from_json(&text, &name)?;
    let policy_text = match &config.policies.file {
        Some(f) if config.policies.enabled => {
            let p = path.parent().unwrap_or(Path::new(".")).join(f);
            let text = fs::read_to_string(&p).map_err(|source| HarnessError::Io {
                path: p.display().to_string(),
                source,
            })?;
            crate::policy::parse_policy_file(&text).map_err(|source| HarnessError::Policy {
                file: p.display().to_string(),
                source,
            })?;
            Some(text)
        }
        _ => None,
    };
    Ok(LoadedScenario {
        config,
        source: Some(path.to_path_buf()),
        policy_text,
    })
}
