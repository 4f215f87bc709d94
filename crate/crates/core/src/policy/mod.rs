//! High-level QoS policy language.
//!
//! A rule is a single line:
//!
//! ```text
//! [label:] [@edge|@core] [@priority=N] if cond (and cond)* action+
//! ```
//!
//! Conditions compare a packet field or a live measurement against a value:
//! - `src.ip`, `dst.ip` with `==`/`!=` and an address, a prefix, or
//!   `a.b.c.X` for the enclosing /24
//! - `dscp`, `tos` with a hex (`0x2e`) or decimal byte
//! - `link.util(B:egress)`, `probe.loss(A->C)` in percent (`%` optional),
//!   `link.bw(B:egress)` in bit/s, `probe.delay(A->C)` in seconds
//!
//! Actions are `MARK packets with DSCP v`, `QUEUE packets with PRIORITY n`,
//! `POLICE rate R burst B`, `ADMIT` and `DENY`. `packets`, `with` and the
//! `==` before a value are optional, and keywords are case-insensitive.
//! Without an annotation, MARK and POLICE rules target edge routers and
//! QUEUE rules target core routers.
//!
//! ```
//! use pbqos::policy::{parse_rule, Action};
//! use pbqos::simcore::Role;
//!
//! let r = parse_rule("If src.ip == 192.168.20.X MARK packets with DSCP ==0x2e").unwrap();
//! assert_eq!(r.target, Role::Edge);
//! assert_eq!(r.actions, vec![Action::Mark { dscp: 46 }]);
//! assert_eq!(r.to_string(), "@edge if src.ip == 192.168.20.0/24 MARK packets with DSCP 0x2e");
//! ```

mod ast;
mod eval;
mod parse;

pub use ast::{render_rule, Action, Condition, Field, Metric, Op, PolicyRule, Value};
pub use eval::{evaluate, evaluate_condition, EvalContext, PacketFields};
pub use parse::{parse_policy_file, parse_prefix, parse_rule, ParseError, ParseErrorKind};

#[cfg(test)]
mod tests {
    use std::net::Ipv4Addr;

    use proptest::prelude::*;

    use super::*;
    use crate::simcore::{Ipv4Net, Role};

    const RULE1: &str = "If src.ip == 192.168.20.X MARK packets with DSCP ==0x2e";
    const RULE2: &str = "If DSCP ==0x2e QUEUE packets with PRIORITY 1";

    fn net(s: &str) -> Ipv4Net {
        s.parse().unwrap()
    }

    #[test]
    fn marking_rule() {
        let r = parse_rule(RULE1).unwrap();
        assert_eq!(r.target, Role::Edge);
        assert_eq!(
            r.conditions,
            vec![Condition {
                lhs: Field::SrcIp,
                op: Op::Eq,
                rhs: Value::Net(net("192.168.20.0/24")),
            }]
        );
        assert_eq!(r.actions, vec![Action::Mark { dscp: 46 }]);
        assert_eq!(r.priority, 0);
    }

    #[test]
    fn queuing_rule() {
        let r = parse_rule(RULE2).unwrap();
        assert_eq!(r.target, Role::Core);
        assert_eq!(
            r.conditions,
            vec![Condition {
                lhs: Field::Dscp,
                op: Op::Eq,
                rhs: Value::Byte(46),
            }]
        );
        assert_eq!(r.actions, vec![Action::Queue { priority: 1 }]);
    }

    #[test]
    fn dscp_out_of_range() {
        let e = parse_rule("if dscp == 0x7f MARK packets with DSCP ==0x00").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::DscpOutOfRange("0x7f".into()));
        assert_eq!((e.line, e.col), (1, 12));
        assert_eq!(e.to_string(), "line 1, column 12: DSCP 0x7f out of range");
    }

    #[test]
    fn cidr_with_relational_operator() {
        let e = parse_rule("if src.ip < 10.0.0.0/8 ADMIT").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::CidrWithRelational(Op::Lt));
    }

    #[test]
    fn syntax_error_has_position() {
        let e = parse_rule("if dscp == 46\n  FROB").unwrap_err();
        assert_eq!((e.line, e.col), (2, 3));
        assert!(matches!(e.kind, ParseErrorKind::Unexpected { .. }));
        assert!(parse_rule("MARK packets with DSCP 1").is_err());
        assert!(parse_rule("if dscp == 1").is_err());
    }

    #[test]
    fn spacing_and_case_variants() {
        let a = parse_rule(RULE1).unwrap();
        for text in [
            "if src.ip == 192.168.20.X mark packets with dscp == 0x2e",
            "IF SRC.IP==192.168.20.0/24 MARK DSCP 46",
            "if src.ip == 192.168.20.77/24 Mark Packets With Dscp 0x2E",
        ] {
            assert_eq!(parse_rule(text).unwrap(), a, "{text}");
        }
    }

    #[test]
    fn wildcard_equals_explicit_prefix() {
        let a = parse_rule("if dst.ip != 172.16.5.X DENY").unwrap();
        let b = parse_rule("if dst.ip != 172.16.5.0/24 DENY").unwrap();
        assert_eq!(a.conditions, b.conditions);
    }

    #[test]
    fn render_forms() {
        let r = parse_rule(RULE2).unwrap();
        assert_eq!(r.to_string(), "@core if dscp == 0x2e QUEUE packets with PRIORITY 1");
        let two =
            parse_rule("x1: if src.ip == 10.1.2.3 and link.util( B:egress ) > 80% POLICE rate 500000 burst 10000")
                .unwrap();
        let text = render_rule(&two);
        assert_eq!(
            text,
            "x1: @edge if src.ip == 10.1.2.3/32 and link.util(B:egress) > 80 POLICE rate 500000 burst 10000"
        );
        assert_eq!(text.matches(" and ").count(), 1);
        assert_eq!(parse_rule(&text).unwrap(), two);
    }

    #[test]
    fn target_annotation_conflicts() {
        let e = parse_rule("@core if src.ip == 1.2.3.X MARK DSCP 46").unwrap_err();
        assert!(matches!(e.kind, ParseErrorKind::TargetMismatch { .. }));
        assert!(parse_rule("if dscp == 46 MARK DSCP 46 QUEUE PRIORITY 1").is_err());
        assert!(parse_rule("@edge @core if dscp == 1 ADMIT").is_err());
        assert_eq!(
            parse_rule("@core if link.util(B:egress) > 90 DENY").unwrap().target,
            Role::Core
        );
    }

    #[test]
    fn action_range_checks() {
        assert_eq!(
            parse_rule("if dscp == 1 QUEUE PRIORITY 0").unwrap_err().kind,
            ParseErrorKind::BadQueuePriority
        );
        assert_eq!(
            parse_rule("if dscp == 1 POLICE rate 0 burst 10").unwrap_err().kind,
            ParseErrorKind::ZeroRate
        );
        assert!(parse_rule("if dscp == 1 MARK DSCP 64").is_err());
        assert!(parse_rule("if tos == 0x100 ADMIT").is_err());
        assert!(parse_rule("if link.bw(B:egress) > inf ADMIT").is_err());
        assert!(parse_rule("if link.bw(B) > 5 ADMIT").is_err());
    }

    #[test]
    fn policy_file_ids_and_comments() {
        let text = format!("# EF policies\n{RULE1}\n\n{RULE2}  # core\nmine: if dscp == 0 ADMIT\n");
        let rules = parse_policy_file(&text).unwrap();
        let ids: Vec<_> = rules.iter().map(|r| r.id.as_str()).collect();
        assert_eq!(ids, ["rule1", "rule2", "mine"]);
        let e = parse_policy_file("a: if dscp == 1 ADMIT\n\na: if dscp == 2 ADMIT").unwrap_err();
        assert_eq!(e.line, 3);
        let e = parse_policy_file("if dscp == 1 ADMIT\nif dscp == 99 ADMIT").unwrap_err();
        assert_eq!(e.line, 2);
    }

    fn pkt(src: [u8; 4], tos: u8) -> EvalContext {
        EvalContext::with_packet(PacketFields {
            src: Ipv4Addr::from(src),
            dst: Ipv4Addr::new(172, 16, 0, 10),
            tos,
        })
    }

    #[test]
    fn evaluation() {
        let r = parse_rule(RULE1).unwrap();
        assert!(evaluate(&r.conditions, &pkt([192, 168, 20, 10], 0)));
        assert!(!evaluate(&r.conditions, &pkt([192, 168, 30, 10], 0)));

        let r = parse_rule("if link.util(B:egress) > 80 DENY").unwrap();
        let mut ctx = EvalContext::default();
        assert!(!evaluate(&r.conditions, &ctx));
        ctx.set(Metric::LinkUtil("B:egress".into()), 85.0);
        assert!(evaluate(&r.conditions, &ctx));

        let r = parse_rule(RULE2).unwrap();
        assert!(!evaluate(&r.conditions, &ctx));
        assert!(evaluate(&r.conditions, &pkt([1, 1, 1, 1], 0xb8)));
        assert!(evaluate(&r.conditions, &pkt([1, 1, 1, 1], 0xbb)));
        assert!(!evaluate(&r.conditions, &pkt([1, 1, 1, 1], 0)));
        assert!(!evaluate(&[], &ctx));
    }

    #[test]
    fn evaluation_does_not_mutate() {
        let r = parse_rule("if src.ip == 192.168.20.X and link.util(B:egress) >= 50 POLICE rate 1 burst 1").unwrap();
        let mut ctx = pkt([192, 168, 20, 1], 0);
        ctx.set(Metric::LinkUtil("B:egress".into()), 50.0);
        let before = ctx.clone();
        let first = evaluate(&r.conditions, &ctx);
        for _ in 0..10 {
            assert_eq!(evaluate(&r.conditions, &ctx), first);
        }
        assert!(first);
        assert_eq!(ctx, before);
    }

    fn arb_metric() -> impl Strategy<Value = Metric> {
        let iface = ("[A-Z]", "[a-z]{1,7}").prop_map(|(n, i)| format!("{n}:{i}"));
        let path = ("[A-Z]", "[A-Z]").prop_map(|(a, b)| format!("{a}->{b}"));
        prop_oneof![
            iface.clone().prop_map(Metric::LinkUtil),
            iface.prop_map(Metric::LinkBw),
            path.clone().prop_map(Metric::ProbeLoss),
            path.prop_map(Metric::ProbeDelay),
        ]
    }

    fn arb_op() -> impl Strategy<Value = Op> {
        prop_oneof![
            Just(Op::Eq),
            Just(Op::Ne),
            Just(Op::Lt),
            Just(Op::Le),
            Just(Op::Gt),
            Just(Op::Ge)
        ]
    }

    fn arb_condition() -> impl Strategy<Value = Condition> {
        let ip_op = prop_oneof![Just(Op::Eq), Just(Op::Ne)];
        let prefix = (any::<u32>(), 0u8..=32).prop_map(|(a, l)| Ipv4Net::new(Ipv4Addr::from(a), l).unwrap());
        prop_oneof![
            (prop_oneof![Just(Field::SrcIp), Just(Field::DstIp)], ip_op, prefix).prop_map(|(lhs, op, n)| Condition {
                lhs,
                op,
                rhs: Value::Net(n)
            }),
            (arb_op(), 0u8..64).prop_map(|(op, v)| Condition {
                lhs: Field::Dscp,
                op,
                rhs: Value::Byte(v)
            }),
            (arb_op(), any::<u8>()).prop_map(|(op, v)| Condition {
                lhs: Field::Tos,
                op,
                rhs: Value::Byte(v)
            }),
            (arb_metric(), arb_op(), -1e12f64..1e12).prop_map(|(m, op, x)| Condition {
                lhs: Field::Metric(m),
                op,
                rhs: Value::Number(if x == 0.0 { 0.0 } else { x })
            }),
        ]
    }

    fn arb_rule() -> impl Strategy<Value = PolicyRule> {
        let edge_action = prop_oneof![
            (0u8..64).prop_map(|dscp| Action::Mark { dscp }),
            (1u64..u64::MAX, any::<u64>()).prop_map(|(rate_bps, burst_bytes)| Action::Police { rate_bps, burst_bytes }),
            Just(Action::Admit),
            Just(Action::Deny),
        ];
        let core_action = prop_oneof![
            (1u8..=255).prop_map(|priority| Action::Queue { priority }),
            Just(Action::Admit),
            Just(Action::Deny),
        ];
        let body = prop_oneof![
            prop::collection::vec(edge_action, 1..4).prop_map(|a| (Role::Edge, a)),
            prop::collection::vec(core_action, 1..4).prop_map(|a| (Role::Core, a)),
        ];
        (
            prop_oneof![Just(String::new()), "[a-z][a-z0-9_-]{0,8}"],
            body,
            prop::collection::vec(arb_condition(), 1..4),
            prop_oneof![Just(0u16), 0u16..u16::MAX],
        )
            .prop_map(|(id, (target, actions), conditions, priority)| PolicyRule {
                id,
                target,
                conditions,
                actions,
                priority,
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]

        #[test]
        fn render_parse_round_trip(rule in arb_rule()) {
            let text = render_rule(&rule);
            let back = parse_rule(&text).map_err(|e| TestCaseError::fail(format!("{text}: {e}")))?;
            prop_assert_eq!(&back, &rule);
            prop_assert_eq!(render_rule(&back), text);
        }
    }
}
