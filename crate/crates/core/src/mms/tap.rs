use crate::simcore::{FlowId, SimTime, Tap};

#[derive(Clone, Debug, PartialEq)]
pub struct FlowTapSeries {
    pub flow_id: FlowId,
    pub window: SimTime,
    /// `(t, bit/s)` where the rate covers `(t - window, t]`.
    pub points: Vec<(SimTime, f64)>,
}

/// Per-window throughput of `flow` as seen by `tap`, with windows ending
/// at `start + window`, `start + 2 * window`, ... up to `end`.
pub fn flow_rate(tap: &Tap, flow: FlowId, window: SimTime, start: SimTime, end: SimTime) -> FlowTapSeries {
    let mut points = Vec::new();
    let secs = window.as_secs_f64();
    if window.as_ps() > 0 {
        let records = &tap.records;
        // records are in time order; skip ahead of the first window
        let mut i = records.partition_point(|r| r.0 <= start);
        let mut t = start + window;
        while t <= end {
            let mut bytes = 0u64;
            while i < records.len() && records[i].0 <= t {
                if records[i].1 == flow {
                    bytes += records[i].2 as u64;
                }
                i += 1;
            }
            points.push((t, bytes as f64 * 8.0 / secs));
            t += window;
        }
    }
    FlowTapSeries {
        flow_id: flow,
        window,
        points,
    }
}
