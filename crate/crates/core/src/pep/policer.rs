use crate::simcore::SimTime;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PoliceVerdict {
    Conform,
    Exceed,
}

/// Single-rate token bucket.
///
/// Tokens are tracked in exact integer units of bit-picoseconds
/// (`bytes * 8 * 10^12`) so the conformance bound holds without rounding.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TokenBucketPolicer {
    rate_bps: u64,
    burst_bytes: u64,
    tokens: u128,
    last_update: SimTime,
}

const SCALE: u128 = 8 * SimTime::PS_PER_SEC as u128;

impl TokenBucketPolicer {
    /// A bucket that starts full at time zero.
    pub fn new(rate_bps: u64, burst_bytes: u64) -> Self {
        Self::with_tokens(rate_bps, burst_bytes, burst_bytes, SimTime::ZERO)
    }

    pub fn with_tokens(rate_bps: u64, burst_bytes: u64, tokens_bytes: u64, at: SimTime) -> Self {
        TokenBucketPolicer {
            rate_bps,
            burst_bytes,
            tokens: tokens_bytes.min(burst_bytes) as u128 * SCALE,
            last_update: at,
        }
    }

    pub fn rate_bps(&self) -> u64 {
        self.rate_bps
    }

    pub fn burst_bytes(&self) -> u64 {
        self.burst_bytes
    }

    pub fn last_update(&self) -> SimTime {
        self.last_update
    }

    pub fn tokens(&self) -> f64 {
        self.tokens as f64 / SCALE as f64
    }

    fn refill(&mut self, now: SimTime) {
        let elapsed = now.saturating_sub(self.last_update).as_ps() as u128;
        let cap = self.burst_bytes as u128 * SCALE;
        self.tokens = (self.tokens + self.rate_bps as u128 * elapsed).min(cap);
        if now > self.last_update {
            self.last_update = now;
        }
    }

    pub fn police(&mut self, size: u32, now: SimTime) -> PoliceVerdict {
        self.refill(now);
        let need = size as u128 * SCALE;
        if self.tokens >= need {
            self.tokens -= need;
            PoliceVerdict::Conform
        } else {
            PoliceVerdict::Exceed
        }
    }
}

pub fn police(tb: &mut TokenBucketPolicer, p: &crate::simcore::Packet, now: SimTime) -> PoliceVerdict {
    tb.police(p.size, now)
}
