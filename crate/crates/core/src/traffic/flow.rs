use std::net::Ipv4Addr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::simcore::{FlowId, SimTime, MIN_PACKET_SIZE};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    #[error("flow {0}: rate must be positive")]
    ZeroRate(FlowId),
    #[error("flow {0}: duration must be positive")]
    ZeroDuration(FlowId),
    #[error("flow {flow}: packet size {size} below the {MIN_PACKET_SIZE}-byte minimum")]
    SmallPacket { flow: FlowId, size: u32 },
    #[error("flow {flow}: bad on/off periods ({on}, {off})")]
    BadPeriods { flow: FlowId, on: f64, off: f64 },
    #[error("arrival process {0}: lambda and mean duration must be positive and finite")]
    BadProcess(String),
    #[error("arrival process {0}: window end precedes start")]
    BadWindow(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum FlowKind {
    Cbr,
    /// Exponential ON and OFF periods with the given means in seconds.
    Onoff {
        mean_on: f64,
        mean_off: f64,
    },
    /// CBR whose rate is redrawn every second, uniformly in
    /// `[min_factor, 1] * rate`.
    Vbr {
        #[serde(default = "default_vbr_min")]
        min_factor: f64,
    },
}

fn default_vbr_min() -> f64 {
    0.5
}

impl FlowKind {
    pub fn name(&self) -> &'static str {
        match self {
            FlowKind::Cbr => "cbr",
            FlowKind::Onoff { .. } => "onoff",
            FlowKind::Vbr { .. } => "vbr",
        }
    }
}

/// One open-loop flow. Times and rates are nominal, i.e. before any
/// time compression is applied.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowSpec {
    pub flow_id: FlowId,
    pub kind: FlowKind,
    /// Bits per second; the peak rate for ON-OFF and VBR.
    pub rate_bps: u64,
    pub pkt_size: u32,
    pub src: Ipv4Addr,
    pub dst: Ipv4Addr,
    pub tos: u8,
    pub start: SimTime,
    pub duration: SimTime,
}

impl FlowSpec {
    pub fn cbr(flow_id: FlowId, rate_bps: u64, pkt_size: u32, src: Ipv4Addr, dst: Ipv4Addr) -> Self {
        FlowSpec {
            flow_id,
            kind: FlowKind::Cbr,
            rate_bps,
            pkt_size,
            src,
            dst,
            tos: 0,
            start: SimTime::ZERO,
            duration: SimTime::from_secs(1),
        }
    }

    pub fn end(&self) -> SimTime {
        self.start.saturating_add(self.duration)
    }

    pub fn validate(&self) -> Result<(), FlowError> {
        if self.rate_bps == 0 {
            return Err(FlowError::ZeroRate(self.flow_id));
        }
        if self.duration == SimTime::ZERO {
            return Err(FlowError::ZeroDuration(self.flow_id));
        }
        if self.pkt_size < MIN_PACKET_SIZE {
            return Err(FlowError::SmallPacket {
                flow: self.flow_id,
                size: self.pkt_size,
            });
        }
        match self.kind {
            FlowKind::Onoff { mean_on, mean_off }
                if !(mean_on > 0.0 && mean_on.is_finite() && mean_off >= 0.0 && mean_off.is_finite()) =>
            {
                Err(FlowError::BadPeriods {
                    flow: self.flow_id,
                    on: mean_on,
                    off: mean_off,
                })
            }
            FlowKind::Vbr { min_factor } if !(min_factor > 0.0 && min_factor <= 1.0) => Err(FlowError::BadPeriods {
                flow: self.flow_id,
                on: min_factor,
                off: 1.0,
            }),
            _ => Ok(()),
        }
    }

    /// Packet spacing at `rate_bps`, in picoseconds.
    pub fn gap(&self) -> SimTime {
        SimTime::serialization(self.pkt_size as u64, self.rate_bps)
    }
}

/// Per-flow fields shared by every flow an arrival process creates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowTemplate {
    #[serde(flatten)]
    pub kind: FlowKind,
    pub rate_bps: u64,
    #[serde(default = "default_pkt_size")]
    pub pkt_size: u32,
    pub src: Ipv4Addr,
    pub dst: Ipv4Addr,
    #[serde(default)]
    pub tos: u8,
}

pub fn default_pkt_size() -> u32 {
    1000
}

impl FlowTemplate {
    pub fn instantiate(&self, flow_id: FlowId, start: SimTime, duration: SimTime) -> FlowSpec {
        FlowSpec {
            flow_id,
            kind: self.kind,
            rate_bps: self.rate_bps,
            pkt_size: self.pkt_size,
            src: self.src,
            dst: self.dst,
            tos: self.tos,
            start,
            duration,
        }
    }
}

/// Poisson flow arrivals with exponential holding times.
#[derive(Clone, Debug, PartialEq)]
pub struct ArrivalProcess {
    /// Sub-stream name; processes with different names draw independently.
    pub name: String,
    /// Flows per second.
    pub lambda: f64,
    /// Mean flow duration in seconds.
    pub mean_duration: f64,
    pub window: (SimTime, SimTime),
    pub template: FlowTemplate,
    /// Flow id of the first sampled flow; later flows count up from here.
    pub first_flow_id: u32,
    pub seed: u64,
}

impl ArrivalProcess {
    pub fn validate(&self) -> Result<(), FlowError> {
        let ok = |x: f64| x > 0.0 && x.is_finite();
        if !ok(self.lambda) || !ok(self.mean_duration) {
            return Err(FlowError::BadProcess(self.name.clone()));
        }
        if self.window.1 < self.window.0 {
            return Err(FlowError::BadWindow(self.name.clone()));
        }
        self.template
            .instantiate(FlowId(self.first_flow_id), SimTime::ZERO, SimTime::from_secs(1))
            .validate()
    }
}
