/// Interface octet counters with RFC 1213 `Counter32` semantics.
///
/// The 64-bit shadow totals are kept alongside so tests and the tap/counter
/// agreement check can reconstruct unwrapped deltas.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct InterfaceCounters {
    pub if_in_octets: u32,
    pub if_out_octets: u32,
    /// Bits per second of the attached link; 0 for unattached ports.
    pub if_speed: u64,
    in_total: u64,
    out_total: u64,
}

impl InterfaceCounters {
    pub fn new(if_speed: u64) -> Self {
        InterfaceCounters {
            if_speed,
            ..Default::default()
        }
    }

    /// Starts both counters at `value`, as a long-running agent would.
    pub fn preset(if_speed: u64, value: u32) -> Self {
        InterfaceCounters {
            if_in_octets: value,
            if_out_octets: value,
            if_speed,
            in_total: value as u64,
            out_total: value as u64,
        }
    }

    #[inline]
    pub fn count_in(&mut self, bytes: u32) {
        self.if_in_octets = self.if_in_octets.wrapping_add(bytes);
        self.in_total += bytes as u64;
    }

    #[inline]
    pub fn count_out(&mut self, bytes: u32) {
        self.if_out_octets = self.if_out_octets.wrapping_add(bytes);
        self.out_total += bytes as u64;
    }

    pub fn in_octets_total(&self) -> u64 {
        self.in_total
    }

    pub fn out_octets_total(&self) -> u64 {
        self.out_total
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counter32_wraps() {
        let mut c = InterfaceCounters::preset(100_000_000, 4_294_967_000);
        c.count_out(600);
        // shadow oracle: 4_294_967_000 + 600 mod 2^32
        let shadow: u64 = 4_294_967_000 + 600;
        assert_eq!(c.if_out_octets as u64, shadow % (1u64 << 32));
        assert_eq!(c.if_out_octets, 304);
        assert_eq!(c.out_octets_total(), shadow);
    }
}
