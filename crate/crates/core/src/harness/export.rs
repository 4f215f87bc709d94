use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

/// A named `(t, value)` series in nominal seconds. Points without a value
/// (e.g. a probe train with no replies) are exported as empty cells.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Series {
    pub name: &'static str,
    pub unit: &'static str,
    pub points: Vec<(f64, Option<f64>)>,
}

impl Series {
    pub fn new(name: &'static str, unit: &'static str) -> Self {
        Series {
            name,
            unit,
            points: Vec::new(),
        }
    }

    pub fn push(&mut self, t: f64, v: Option<f64>) {
        self.points.push((t, v));
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().filter_map(|p| p.1)
    }

    pub fn max(&self) -> Option<f64> {
        self.values().reduce(f64::max)
    }

    pub fn min(&self) -> Option<f64> {
        self.values().reduce(f64::min)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,value\n");
        for (t, v) in &self.points {
            match v {
                Some(v) => writeln!(s, "{t},{v}").unwrap(),
                None => writeln!(s, "{t},").unwrap(),
            }
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeriesExport {
    /// Output rate of the aggregate interface, bit/s.
    pub aggregate_bw: Series,
    /// Tagged flow rate where it enters the network, bit/s.
    pub tagged_ingress_bw: Series,
    /// Tagged flow rate where it leaves the network, bit/s.
    pub tagged_egress_bw: Series,
    /// Probe one-way delay (half the mean RTT), seconds.
    pub probe_delay: Series,
    /// Probe loss, percent.
    pub probe_loss: Series,
}

impl SeriesExport {
    pub fn new() -> Self {
        SeriesExport {
            aggregate_bw: Series::new("aggregate_bw", "bit/s"),
            tagged_ingress_bw: Series::new("tagged_ingress_bw", "bit/s"),
            tagged_egress_bw: Series::new("tagged_egress_bw", "bit/s"),
            probe_delay: Series::new("probe_delay", "s"),
            probe_loss: Series::new("probe_loss", "%"),
        }
    }

    pub fn all(&self) -> [&Series; 5] {
        [
            &self.aggregate_bw,
            &self.tagged_ingress_bw,
            &self.tagged_egress_bw,
            &self.probe_delay,
            &self.probe_loss,
        ]
    }
}

impl Default for SeriesExport {
    fn default() -> Self {
        Self::new()
    }
}

/// Intervals `(start, end]` covered by consecutive aggregate samples at or
/// above `threshold`. Sample `t` covers `(t - poll, t]`.
pub fn congestion_windows(aggregate: &Series, poll: f64, threshold: f64) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::new();
    let mut open = false;
    for &(t, v) in &aggregate.points {
        let hot = v.is_some_and(|v| v >= threshold);
        match (hot, open) {
            (true, true) => out.last_mut().unwrap().1 = t,
            (true, false) => out.push((t - poll, t)),
            _ => {}
        }
        open = hot;
    }
    out
}

pub fn in_window(t: f64, windows: &[(f64, f64)]) -> Option<usize> {
    windows.iter().position(|&(s, e)| t > s && t <= e)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ControlSummary {
    pub applies_sent: u64,
    pub acks: u64,
    pub errors: Vec<String>,
    /// Every apply was answered exactly once.
    pub exactly_once: bool,
    /// Enforcement state reached through messages equals direct application.
    pub two_path_equivalent: bool,
    pub reports_received: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Summary {
    pub scenario: String,
    pub seed: u64,
    pub time_compression: u64,
    pub duration: f64,
    pub policies_enabled: bool,
    pub rules: Vec<String>,
    pub peak_aggregate_bps: f64,
    pub tagged_ingress_min_bps: Option<f64>,
    pub tagged_ingress_max_bps: Option<f64>,
    pub tagged_egress_min_bps: Option<f64>,
    pub tagged_egress_min_congested_bps: Option<f64>,
    pub max_probe_delay_s: Option<f64>,
    pub mean_probe_delay_congested_s: Option<f64>,
    pub max_probe_loss_pct: Option<f64>,
    pub congestion_windows: Vec<(f64, f64)>,
    /// Queue drops per interface.
    pub drops: BTreeMap<String, u64>,
    pub probe_drops: u64,
    pub policed_drops: u64,
    pub flows_started: u64,
    pub flows_denied: u64,
    pub packets_injected: u64,
    pub events: u64,
    pub conservation_holds: bool,
    pub decision_digest: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub event_log_digest: Option<String>,
    pub control: ControlSummary,
}

impl Summary {
    pub fn total_drops(&self) -> u64 {
        self.drops.values().sum()
    }
}
