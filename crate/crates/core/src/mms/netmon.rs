use super::estimate::{bandwidth, update_ewma, utilization};
use super::mib::{poll, CounterSample, MeasureError, MibObject};
use crate::policy::Metric;
use crate::rms::MeasurementReport;
use crate::simcore::{InterfaceId, Network, NodeId, SimTime};

/// Output-direction estimate for one interface over the last poll interval.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinkEstimate {
    pub t: SimTime,
    pub bw_bps: f64,
    pub util_pct: f64,
    pub ewma_bps: f64,
    /// Input-direction throughput over the same interval.
    pub bw_in_bps: f64,
}

#[derive(Clone, Debug)]
struct Watch {
    iface: InterfaceId,
    name: String,
    speed: u64,
    prev_out: Option<CounterSample>,
    prev_in: Option<CounterSample>,
    ewma: Option<f64>,
    latest: Option<LinkEstimate>,
}

/// Passive counter monitor for the interfaces of one router.
#[derive(Clone, Debug)]
pub struct NetMon {
    node: NodeId,
    alpha: f64,
    compression: u64,
    watched: Vec<Watch>,
}

impl NetMon {
    pub fn new(node: NodeId, alpha: f64) -> Result<Self, MeasureError> {
        update_ewma(None, 0.0, alpha)?;
        Ok(NetMon {
            node,
            alpha,
            compression: 1,
            watched: Vec::new(),
        })
    }

    /// For a network running `k` times faster than nominal: polls are then
    /// stamped with nominal time and interface speeds read as nominal, so
    /// every estimate comes out in nominal units.
    pub fn set_time_compression(&mut self, k: u64) {
        self.compression = k.max(1);
    }

    pub fn node(&self) -> NodeId {
        self.node
    }

    pub fn watch(&mut self, net: &Network, iface: InterfaceId) -> Result<(), MeasureError> {
        let speed = net
            .counters(iface)
            .map_err(|_| MeasureError::UnknownInterface(format!("#{}.{}", iface.node.0, iface.index)))?
            .if_speed;
        self.watched.push(Watch {
            iface,
            name: net.topology().iface_name(iface),
            speed,
            prev_out: None,
            prev_in: None,
            ewma: None,
            latest: None,
        });
        Ok(())
    }

    /// Samples every watched interface. The first poll only primes the
    /// counters and yields no estimates.
    pub fn poll(&mut self, net: &Network, now: SimTime) -> Result<Vec<(InterfaceId, LinkEstimate)>, MeasureError> {
        let mut out = Vec::new();
        for w in &mut self.watched {
            let cur_out = poll(net, w.iface, MibObject::IfOutOctets, now)?;
            let cur_in = poll(net, w.iface, MibObject::IfInOctets, now)?;
            if let (Some(po), Some(pi)) = (w.prev_out, w.prev_in) {
                let bw = bandwidth(&po, &cur_out)?;
                let speed = w.speed / self.compression;
                let util = if speed > 0 {
                    utilization(&po, &cur_out, speed)?
                } else {
                    0.0
                };
                let ewma = update_ewma(w.ewma, bw, self.alpha)?;
                w.ewma = Some(ewma);
                let est = LinkEstimate {
                    t: now,
                    bw_bps: bw,
                    util_pct: util,
                    ewma_bps: ewma,
                    bw_in_bps: bandwidth(&pi, &cur_in)?,
                };
                w.latest = Some(est);
                out.push((w.iface, est));
            }
            w.prev_out = Some(cur_out);
            w.prev_in = Some(cur_in);
        }
        Ok(out)
    }

    pub fn latest(&self, iface: InterfaceId) -> Option<LinkEstimate> {
        self.watched.iter().find(|w| w.iface == iface).and_then(|w| w.latest)
    }

    /// Report of the latest estimates: `link.util` is the last interval's
    /// utilization and `link.bw` the smoothed throughput.
    pub fn report(&self, now: SimTime) -> MeasurementReport {
        let mut values = Vec::new();
        for w in &self.watched {
            if let Some(e) = w.latest {
                values.push((Metric::LinkUtil(w.name.clone()), e.util_pct));
                values.push((Metric::LinkBw(w.name.clone()), e.ewma_bps));
            }
        }
        MeasurementReport { at: now, values }
    }
}
