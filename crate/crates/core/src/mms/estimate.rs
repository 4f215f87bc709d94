use super::mib::{CounterSample, MeasureError};

fn delta(prev: &CounterSample, cur: &CounterSample) -> Result<(u32, f64), MeasureError> {
    if prev.oid != cur.oid || prev.iface != cur.iface {
        return Err(MeasureError::MismatchedSamples);
    }
    let dt = cur
        .t
        .checked_sub(prev.t)
        .filter(|d| d.as_ps() > 0)
        .ok_or(MeasureError::ZeroInterval)?;
    Ok((cur.value.wrapping_sub(prev.value), dt.as_secs_f64()))
}

/// Mean throughput between two octet-counter samples in bit/s, assuming at
/// most one counter wrap in between.
pub fn bandwidth(prev: &CounterSample, cur: &CounterSample) -> Result<f64, MeasureError> {
    let (octets, dt) = delta(prev, cur)?;
    Ok(octets as f64 * 8.0 / dt)
}

/// Link utilization in percent of `if_speed`.
pub fn utilization(prev: &CounterSample, cur: &CounterSample, if_speed: u64) -> Result<f64, MeasureError> {
    if if_speed == 0 {
        return Err(MeasureError::ZeroSpeed);
    }
    Ok(bandwidth(prev, cur)? * 100.0 / if_speed as f64)
}

/// Exponentially weighted moving average; the first sample (`prev = None`)
/// initializes it.
pub fn update_ewma(prev: Option<f64>, inst: f64, alpha: f64) -> Result<f64, MeasureError> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(MeasureError::BadAlpha(alpha));
    }
    Ok(match prev {
        None => inst,
        Some(p) => (1.0 - alpha) * p + alpha * inst,
    })
}
