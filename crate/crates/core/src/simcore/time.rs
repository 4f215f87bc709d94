use std::fmt;
use std::ops::{Add, AddAssign, Sub};

/// Simulated time, stored as integer picoseconds.
///
/// Picosecond resolution keeps serialization times of small packets on fast
/// links exact (64 B at 10 Gbps is 51.2 ns), which the rate-scaling
/// transform relies on: dividing every time parameter by `k` must not round.
/// `u64` picoseconds covers roughly 213 days of simulated time.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SimTime(u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);
    pub const MAX: SimTime = SimTime(u64::MAX);
    pub const PS_PER_SEC: u64 = 1_000_000_000_000;

    pub const fn from_ps(ps: u64) -> Self {
        SimTime(ps)
    }

    pub const fn from_nanos(ns: u64) -> Self {
        SimTime(ns * 1_000)
    }

    pub const fn from_micros(us: u64) -> Self {
        SimTime(us * 1_000_000)
    }

    pub const fn from_millis(ms: u64) -> Self {
        SimTime(ms * 1_000_000_000)
    }

    pub const fn from_secs(s: u64) -> Self {
        SimTime(s * Self::PS_PER_SEC)
    }

    /// Rounds to the nearest picosecond. Negative and NaN inputs map to zero.
    pub fn from_secs_f64(s: f64) -> Self {
        if s.is_nan() || s <= 0.0 {
            return SimTime::ZERO;
        }
        SimTime((s * Self::PS_PER_SEC as f64).round() as u64)
    }

    pub const fn as_ps(self) -> u64 {
        self.0
    }

    pub fn as_secs_f64(self) -> f64 {
        // split to keep full precision for large values
        let whole = self.0 / Self::PS_PER_SEC;
        let frac = self.0 % Self::PS_PER_SEC;
        whole as f64 + frac as f64 / Self::PS_PER_SEC as f64
    }

    pub fn checked_sub(self, rhs: SimTime) -> Option<SimTime> {
        self.0.checked_sub(rhs.0).map(SimTime)
    }

    pub fn saturating_sub(self, rhs: SimTime) -> SimTime {
        SimTime(self.0.saturating_sub(rhs.0))
    }

    pub fn saturating_add(self, rhs: SimTime) -> SimTime {
        SimTime(self.0.saturating_add(rhs.0))
    }

    /// Time to clock `bytes` onto a link of `capacity_bps`, rounded up to the
    /// next picosecond.
    pub fn serialization(bytes: u64, capacity_bps: u64) -> SimTime {
        assert!(capacity_bps > 0, "link capacity must be positive");
        let bits_ps = bytes as u128 * 8 * Self::PS_PER_SEC as u128;
        let ps = bits_ps.div_ceil(capacity_bps as u128);
        SimTime(u64::try_from(ps).unwrap_or(u64::MAX))
    }
}

impl Add for SimTime {
    type Output = SimTime;
    fn add(self, rhs: SimTime) -> SimTime {
        SimTime(self.0 + rhs.0)
    }
}

impl AddAssign for SimTime {
    fn add_assign(&mut self, rhs: SimTime) {
        self.0 += rhs.0;
    }
}

impl Sub for SimTime {
    type Output = SimTime;
    fn sub(self, rhs: SimTime) -> SimTime {
        SimTime(self.0 - rhs.0)
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{:012}", self.0 / Self::PS_PER_SEC, self.0 % Self::PS_PER_SEC)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn serialization_examples() {
        // 8000 bits at 100 Mbps
        assert_eq!(SimTime::serialization(1000, 100_000_000), SimTime::from_micros(80));
        assert_eq!(SimTime::serialization(1000, 1_000_000_000), SimTime::from_micros(8));
        assert_eq!(SimTime::serialization(64, 10_000_000_000).as_ps(), 51_200);
    }

    #[test]
    fn display_and_seconds() {
        let t = SimTime::from_millis(1008);
        assert_eq!(t.to_string(), "1.008000000000");
        assert!((t.as_secs_f64() - 1.008).abs() < 1e-15);
        assert_eq!(SimTime::from_secs_f64(0.5), SimTime::from_millis(500));
        assert_eq!(SimTime::from_secs_f64(-1.0), SimTime::ZERO);
    }
}
