use crate::simcore::Packet;

/// dsmark rewrite: `tos' = (tos & mask) | value`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct DsmarkAction {
    pub mask: u8,
    pub value: u8,
}

impl DsmarkAction {
    /// Overwrites the whole TOS byte with the code point `dscp`.
    pub fn set_dscp(dscp: u8) -> Self {
        DsmarkAction {
            mask: 0x00,
            value: dscp << 2,
        }
    }

    #[inline]
    pub fn apply(&self, tos: u8) -> u8 {
        (tos & self.mask) | self.value
    }
}

pub fn mark(mut p: Packet, a: DsmarkAction) -> Packet {
    p.tos = a.apply(p.tos);
    p
}

#[cfg(test)]
mod tests {
    use std::net::Ipv4Addr;

    use super::*;
    use crate::simcore::FlowId;

    fn with_tos(tos: u8) -> Packet {
        let mut p = Packet::data(FlowId(3), Ipv4Addr::new(1, 2, 3, 4), Ipv4Addr::new(5, 6, 7, 8), 200);
        p.tos = tos;
        p
    }

    #[test]
    fn ef_marking() {
        let out = mark(
            with_tos(0x00),
            DsmarkAction {
                mask: 0x00,
                value: 0xb8,
            },
        );
        assert_eq!(out.tos, 0xb8);
        assert_eq!(out.dscp(), 0x2e);
        assert_eq!(DsmarkAction::set_dscp(0x2e), DsmarkAction { mask: 0, value: 0xb8 });
    }

    #[test]
    fn identity_action() {
        assert_eq!(
            mark(
                with_tos(0x20),
                DsmarkAction {
                    mask: 0xff,
                    value: 0x00
                }
            )
            .tos,
            0x20
        );
    }

    #[test]
    fn bitwise_oracle_all_tos() {
        let a = DsmarkAction {
            mask: 0x03,
            value: 0xb8,
        };
        assert_eq!(mark(with_tos(0xff), a).tos, 0xbb);
        for tos in 0..=255u8 {
            // bit-by-bit oracle, independent of the byte-wide expression
            let mut expect = 0u8;
            for bit in 0..8 {
                let keep = (a.mask >> bit) & 1 == 1 && (tos >> bit) & 1 == 1;
                let set = (a.value >> bit) & 1 == 1;
                if keep || set {
                    expect |= 1 << bit;
                }
            }
            let p = with_tos(tos);
            let out = mark(p.clone(), a);
            assert_eq!(out.tos, expect, "tos {tos:#04x}");
            assert_eq!(Packet { tos: p.tos, ..out }, p);
        }
    }
}
