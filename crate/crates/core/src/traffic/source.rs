use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

use super::flow::{FlowKind, FlowSpec};
use super::rng::{quantize_ns, quantize_us, substream};
use crate::simcore::SimTime;

const SEGMENT: SimTime = SimTime::from_secs(1);

/// Offset of the `k`-th packet of a constant-rate stream, floored to whole
/// nanoseconds.
fn cbr_offset(k: u64, bits: u64, rate_bps: u64) -> SimTime {
    let ps = k as u128 * bits as u128 * SimTime::PS_PER_SEC as u128 / rate_bps as u128;
    let ns = ps / 1_000;
    SimTime::from_nanos(u64::try_from(ns).unwrap_or(u64::MAX / 1_000))
}

#[derive(Clone, Debug)]
enum State {
    Cbr,
    OnOff {
        rng: ChaCha8Rng,
        on: Exp<f64>,
        off: Option<Exp<f64>>,
        on_start: SimTime,
        on_len: SimTime,
        /// Active (ON) time elapsed before the current period.
        active_before: SimTime,
    },
    Vbr {
        rng: ChaCha8Rng,
        min_factor: f64,
        segment: u64,
        gap: SimTime,
        next: SimTime,
    },
}

/// Lazily generated departure times of one flow, in nominal time.
///
/// All times are whole nanoseconds and lie in `[start, start + duration)`.
#[derive(Clone, Debug)]
pub struct PacketTimes {
    start: SimTime,
    end: SimTime,
    bits: u64,
    rate_bps: u64,
    k: u64,
    state: State,
}

impl PacketTimes {
    pub fn new(spec: &FlowSpec, seed: u64) -> Self {
        let stream = spec.flow_id.to_string();
        let state = match spec.kind {
            FlowKind::Cbr => State::Cbr,
            FlowKind::Onoff { mean_on, mean_off } => {
                let mut rng = substream(seed, "onoff", &stream);
                let on = Exp::new(1.0 / mean_on).expect("validated on period");
                let off = (mean_off > 0.0).then(|| Exp::new(1.0 / mean_off).expect("validated off period"));
                let on_len = quantize_us(on.sample(&mut rng));
                State::OnOff {
                    rng,
                    on,
                    off,
                    on_start: spec.start,
                    on_len,
                    active_before: SimTime::ZERO,
                }
            }
            FlowKind::Vbr { min_factor } => {
                let mut rng = substream(seed, "vbr", &stream);
                let gap = vbr_gap_for(&mut rng, min_factor, spec.pkt_size as u64 * 8, spec.rate_bps);
                State::Vbr {
                    rng,
                    min_factor,
                    segment: 0,
                    gap,
                    next: spec.start,
                }
            }
        };
        PacketTimes {
            start: spec.start,
            end: spec.end(),
            bits: spec.pkt_size as u64 * 8,
            rate_bps: spec.rate_bps,
            k: 0,
            state,
        }
    }
}

impl Iterator for PacketTimes {
    type Item = SimTime;

    fn next(&mut self) -> Option<SimTime> {
        let t = match &mut self.state {
            State::Cbr => self.start + cbr_offset(self.k, self.bits, self.rate_bps),
            State::OnOff {
                rng,
                on,
                off,
                on_start,
                on_len,
                active_before,
            } => {
                let a = cbr_offset(self.k, self.bits, self.rate_bps);
                loop {
                    if a < *active_before + *on_len {
                        break *on_start + (a - *active_before);
                    }
                    let silent = off.as_ref().map_or(SimTime::ZERO, |d| quantize_us(d.sample(rng)));
                    *active_before += *on_len;
                    *on_start = on_start.saturating_add(*on_len).saturating_add(silent);
                    if *on_start >= self.end {
                        return None;
                    }
                    *on_len = quantize_us(on.sample(rng));
                }
            }
            State::Vbr {
                rng,
                min_factor,
                segment,
                gap,
                next,
            } => {
                let t = *next;
                if t >= self.end {
                    return None;
                }
                let seg = (t - self.start).as_ps() / SEGMENT.as_ps();
                while *segment < seg {
                    *segment += 1;
                    *gap = vbr_gap_for(rng, *min_factor, self.bits, self.rate_bps);
                }
                *next = t + *gap;
                t
            }
        };
        if t >= self.end {
            return None;
        }
        self.k += 1;
        Some(t)
    }
}

fn vbr_gap_for(rng: &mut ChaCha8Rng, min_factor: f64, bits: u64, rate_bps: u64) -> SimTime {
    let factor = if min_factor < 1.0 {
        rng.gen_range(min_factor..=1.0)
    } else {
        1.0
    };
    quantize_ns(bits as f64 * SimTime::PS_PER_SEC as f64 / (rate_bps as f64 * factor))
}

/// Departure times of a CBR flow: `pkt_size * 8 / rate` apart from `start`.
pub fn emit_cbr(spec: &FlowSpec) -> PacketTimes {
    debug_assert!(matches!(spec.kind, FlowKind::Cbr));
    PacketTimes::new(spec, 0)
}

/// Departure times of an ON-OFF flow drawn from the flow's seeded stream.
pub fn emit_onoff(spec: &FlowSpec, seed: u64) -> PacketTimes {
    debug_assert!(matches!(spec.kind, FlowKind::Onoff { .. }));
    PacketTimes::new(spec, seed)
}

pub fn emit_vbr(spec: &FlowSpec, seed: u64) -> PacketTimes {
    debug_assert!(matches!(spec.kind, FlowKind::Vbr { .. }));
    PacketTimes::new(spec, seed)
}
