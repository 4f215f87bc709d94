use std::io::{self, Write};

use rand_distr::{Distribution, Exp};

use super::flow::{ArrivalProcess, FlowSpec};
use super::rng::{quantize_us, substream};
use crate::simcore::{FlowId, SimTime};

/// Samples flow starts and durations for `p`.
///
/// Starts are `t0` plus cumulative exponential gaps, keeping those before
/// `t1`. Gaps and durations come from separate sub-streams, both quantized
/// to microseconds. Durations are at least one microsecond.
pub fn sample_arrivals(p: &ArrivalProcess) -> Vec<FlowSpec> {
    let (t0, t1) = p.window;
    let mut out = Vec::new();
    if t1 <= t0 {
        return out;
    }
    let gaps = Exp::new(p.lambda).expect("validated lambda");
    let holds = Exp::new(1.0 / p.mean_duration).expect("validated mean duration");
    let mut arrivals = substream(p.seed, &p.name, "arrivals");
    let mut durations = substream(p.seed, &p.name, "durations");
    let mut t = t0;
    loop {
        t = t.saturating_add(quantize_us(gaps.sample(&mut arrivals)));
        if t >= t1 {
            break;
        }
        let d = quantize_us(holds.sample(&mut durations)).max(SimTime::from_micros(1));
        let id = FlowId(p.first_flow_id + out.len() as u32);
        out.push(p.template.instantiate(id, t, d));
    }
    out
}

/// Writes `flow_id,start,duration,rate` rows, times in seconds.
pub fn write_schedule_csv<W: Write>(flows: &[FlowSpec], mut w: W) -> io::Result<()> {
    writeln!(w, "flow_id,start,duration,rate")?;
    for f in flows {
        writeln!(
            w,
            "{},{},{},{}",
            f.flow_id,
            f.start.as_secs_f64(),
            f.duration.as_secs_f64(),
            f.rate_bps
        )?;
    }
    Ok(())
}
