//! Measurement and monitoring: interface counter polling and the
//! bandwidth/utilization estimators built on it, active probe trains,
//! per-flow packet taps and the aggregating measurement manager (CMM).

mod cmm;
mod estimate;
mod mib;
mod netmon;
mod probe;
mod tap;

pub use cmm::{cmm_aggregate, Cmm, SummaryRow};
pub use estimate::{bandwidth, update_ewma, utilization};
pub use mib::{poll, CounterSample, MeasureError, MibObject};
pub use netmon::{LinkEstimate, NetMon};
pub use probe::{run_probe, ProbeError, ProbeParams, ProbeReport, ProbeTrain};
pub use tap::{flow_rate, FlowTapSeries};

/// Default counter poll interval.
pub const DEFAULT_POLL_INTERVAL: crate::simcore::SimTime = crate::simcore::SimTime::from_secs(1);
/// Default EWMA smoothing factor.
pub const DEFAULT_ALPHA: f64 = 0.2;

#[cfg(test)]
mod tests {
    use std::net::Ipv4Addr;

    use proptest::prelude::*;

    use super::*;
    use crate::pep::DEFAULT_BAND_LIMITS;
    use crate::policy::Metric;
    use crate::rms::MeasurementReport;
    use crate::simcore::{
        FlowId, InterfaceId, LinkId, NetEvent, Network, NodeId, Packet, PacketKind, Role, Scheduler, SimTime,
        TapDirection, Topology,
    };

    /// A -(1 Gbps)- B -(100 Mbps)- C, 10 ms per link.
    fn line() -> Network {
        let mut t = Topology::new();
        let a = t.add_node("A", Role::Edge, Ipv4Addr::new(10, 0, 0, 1)).unwrap();
        let b = t.add_node("B", Role::Core, Ipv4Addr::new(10, 0, 0, 2)).unwrap();
        let c = t.add_node("C", Role::Edge, Ipv4Addr::new(10, 0, 0, 3)).unwrap();
        let ai = t.add_interface(a, "ingress", true).unwrap();
        t.add_network(ai, "192.168.0.0/16".parse().unwrap()).unwrap();
        let ae = t.add_interface(a, "egress", false).unwrap();
        let bi = t.add_interface(b, "ingress", false).unwrap();
        let be = t.add_interface(b, "egress", false).unwrap();
        let ci = t.add_interface(c, "ingress", false).unwrap();
        let ce = t.add_interface(c, "egress", true).unwrap();
        t.add_network(ce, "172.16.0.0/16".parse().unwrap()).unwrap();
        t.connect(ae, bi, 1_000_000_000, SimTime::from_millis(10)).unwrap();
        t.connect(be, ci, 100_000_000, SimTime::from_millis(10)).unwrap();
        Network::new(t, &DEFAULT_BAND_LIMITS)
    }

    fn iface(net: &Network, name: &str) -> InterfaceId {
        net.topology().iface_by_name(name).unwrap()
    }

    fn sample(value: u32, secs: u64) -> CounterSample {
        CounterSample {
            oid: MibObject::IfOutOctets,
            iface: InterfaceId {
                node: NodeId(0),
                index: 0,
            },
            value,
            t: SimTime::from_secs(secs),
        }
    }

    fn data(size: u32) -> Packet {
        Packet::data(
            FlowId(7),
            Ipv4Addr::new(192, 168, 20, 10),
            Ipv4Addr::new(172, 16, 0, 10),
            size,
        )
    }

    #[test]
    fn poll_counters() {
        let mut net = line();
        let ae = iface(&net, "A:egress");
        let be = iface(&net, "B:egress");
        assert_eq!(poll(&net, ae, MibObject::IfOutOctets, SimTime::ZERO).unwrap().value, 0);
        assert_eq!(
            poll(&net, be, MibObject::IfSpeed, SimTime::ZERO).unwrap().value,
            100_000_000
        );
        let mut s: Scheduler<NetEvent> = Scheduler::new();
        for _ in 0..10 {
            net.send_packet(&mut s, data(1000), ae).unwrap();
        }
        s.run_until(SimTime::from_secs(1), |s, e| {
            net.handle(s, e);
        })
        .unwrap();
        assert_eq!(
            poll(&net, ae, MibObject::IfOutOctets, SimTime::from_secs(1))
                .unwrap()
                .value,
            10_000
        );
        assert_eq!(MibObject::from_oid("1.3.6.1.2.1.2.2.1.10.2"), Ok(MibObject::IfInOctets));
        assert!(MibObject::from_oid("1.3.6.1.2.1.2.2.1.99").is_err());
    }

    #[test]
    fn bandwidth_examples() {
        assert_eq!(bandwidth(&sample(0, 0), &sample(1_250_000, 1)), Ok(10_000_000.0));
        assert_eq!(bandwidth(&sample(5, 0), &sample(5, 1)), Ok(0.0));
        // 64-bit shadow oracle for the wrap case
        let prev: u64 = 4_294_967_000;
        let cur_shadow: u64 = prev + 592;
        let cur = (cur_shadow % (1 << 32)) as u32;
        assert_eq!(cur, 296);
        let expect = (cur_shadow - prev) as f64 * 8.0;
        assert_eq!(bandwidth(&sample(prev as u32, 0), &sample(cur, 1)), Ok(expect));
        assert_eq!(expect, 4736.0);
        assert_eq!(bandwidth(&sample(0, 1), &sample(1, 1)), Err(MeasureError::ZeroInterval));
        let mut other = sample(1, 2);
        other.oid = MibObject::IfInOctets;
        assert_eq!(bandwidth(&sample(0, 1), &other), Err(MeasureError::MismatchedSamples));
    }

    #[test]
    fn utilization_examples() {
        assert_eq!(utilization(&sample(0, 0), &sample(1_250_000, 1), 100_000_000), Ok(10.0));
        assert_eq!(utilization(&sample(0, 0), &sample(0, 1), 100_000_000), Ok(0.0));
        assert_eq!(
            utilization(&sample(0, 0), &sample(12_500_000, 1), 100_000_000),
            Ok(100.0)
        );
        assert_eq!(
            utilization(&sample(0, 0), &sample(1, 1), 0),
            Err(MeasureError::ZeroSpeed)
        );
    }

    #[test]
    fn ewma_examples() {
        assert!((update_ewma(Some(10e6), 20e6, 0.2).unwrap() - 12e6).abs() < 1e-6);
        assert_eq!(update_ewma(Some(10e6), 20e6, 1.0), Ok(20e6));
        assert_eq!(update_ewma(Some(10e6), 20e6, 0.0), Ok(10e6));
        assert_eq!(update_ewma(None, 3.0, 0.2), Ok(3.0));
        assert_eq!(update_ewma(Some(1.0), 2.0, 1.5), Err(MeasureError::BadAlpha(1.5)));
    }

    proptest! {
        #[test]
        fn bandwidth_and_utilization_agree(a in any::<u32>(), b in any::<u32>(), dt_us in 1u64..10_000_000, speed in 1u64..100_000_000_000) {
            let prev = CounterSample { t: SimTime::ZERO, ..sample(a, 0) };
            let cur = CounterSample { t: SimTime::from_micros(dt_us), ..sample(b, 0) };
            let bw = bandwidth(&prev, &cur).unwrap();
            let util = utilization(&prev, &cur, speed).unwrap();
            let expect = bw * 100.0 / speed as f64;
            prop_assert!((util - expect).abs() <= f64::EPSILON * expect.abs());
        }

        #[test]
        fn ewma_bounded_and_converges(hist in prop::collection::vec(0.0f64..1e10, 1..50), alpha in 0.01f64..=1.0, target in 0.0f64..1e10) {
            let mut e = None;
            for v in &hist {
                e = Some(update_ewma(e, *v, alpha).unwrap());
            }
            let lo = hist.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = hist.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let e0 = e.unwrap();
            prop_assert!(e0 >= lo * (1.0 - 1e-12) && e0 <= hi * (1.0 + 1e-12));
            // relative tolerance on the starting gap
            let eps: f64 = 1e-9;
            let steps = if alpha >= 1.0 { 1 } else { (eps.ln() / (1.0 - alpha).ln()).ceil() as usize };
            let gap = (e0 - target).abs().max(1.0);
            let mut x = e0;
            for _ in 0..steps {
                x = update_ewma(Some(x), target, alpha).unwrap();
            }
            prop_assert!((x - target).abs() <= eps * gap * (1.0 + 1e-6));
        }
    }

    #[test]
    fn netmon_reports_util_and_smoothed_bw() {
        let mut net = line();
        let ae = iface(&net, "A:egress");
        let mut mon = NetMon::new(NodeId(0), 0.2).unwrap();
        mon.watch(&net, ae).unwrap();
        assert!(mon.poll(&net, SimTime::ZERO).unwrap().is_empty());
        let mut s: Scheduler<NetEvent> = Scheduler::new();
        for _ in 0..125 {
            net.send_packet(&mut s, data(1000), ae).unwrap();
        }
        s.run_until(SimTime::from_secs(1), |s, e| {
            net.handle(s, e);
        })
        .unwrap();
        let est = mon.poll(&net, SimTime::from_secs(1)).unwrap();
        assert_eq!(est[0].1.bw_bps, 1_000_000.0);
        assert_eq!(est[0].1.util_pct, 0.1);
        let r = mon.report(SimTime::from_secs(1));
        assert_eq!(
            r.values,
            vec![
                (Metric::LinkUtil("A:egress".into()), 0.1),
                (Metric::LinkBw("A:egress".into()), 1_000_000.0)
            ]
        );
    }

    #[test]
    fn idle_probe_rtt_is_twice_path_delay() {
        let mut net = line();
        let r = run_probe(&mut net, NodeId(0), NodeId(2), &ProbeParams::default()).unwrap();
        assert_eq!((r.sent, r.received, r.loss_pct), (10, 10, 0.0));
        let one_way = SimTime::from_millis(20)
            + SimTime::serialization(64, 1_000_000_000)
            + SimTime::serialization(64, 100_000_000);
        let rtt = (one_way + one_way).as_secs_f64();
        assert!((r.avg_rtt.unwrap() - rtt).abs() < 1e-12);
        assert!((r.one_way_delay.unwrap() - rtt / 2.0).abs() < 1e-12);
    }

    #[test]
    fn partitioned_probe_loses_everything() {
        let mut net = line();
        net.set_link_up(LinkId(1), false);
        let r = run_probe(&mut net, NodeId(0), NodeId(2), &ProbeParams::default()).unwrap();
        assert_eq!((r.received, r.loss_pct), (0, 100.0));
        assert_eq!((r.avg_rtt, r.one_way_delay, r.bw_estimate), (None, None, None));
        let drops = net.stats(iface(&net, "B:egress")).unwrap().dropped_by_kind;
        assert_eq!(drops[PacketKind::ProbeRequest.index()], 10);
    }

    #[test]
    fn partial_loss_is_counted() {
        let mut train = ProbeTrain::new(
            FlowId(1),
            Ipv4Addr::new(10, 0, 0, 1),
            Ipv4Addr::new(10, 0, 0, 3),
            ProbeParams::default(),
        )
        .unwrap();
        let mut reqs = Vec::new();
        while let Some(at) = train.next_send_at() {
            let at = at.max(SimTime::from_secs(1));
            reqs.push(train.next_request(at).unwrap());
        }
        for p in reqs.iter().take(6) {
            assert!(train.on_reply(&p.echo_reply(), p.created_at + SimTime::from_millis(40)));
        }
        assert!(!train.on_reply(&reqs[0].echo_reply(), SimTime::from_secs(2)));
        let r = train.report();
        assert_eq!((r.sent, r.received, r.loss_pct), (10, 6, 40.0));
        assert!((r.avg_rtt.unwrap() - 0.04).abs() < 1e-12);
        // last counted reply: request 5 at 1.5 s + 40 ms
        let span = 0.54;
        assert!((r.bw_estimate.unwrap() - 6.0 * 64.0 * 8.0 / span).abs() < 1e-6);
    }

    #[test]
    fn tap_rates_and_counter_agreement() {
        let mut net = line();
        let ae = iface(&net, "A:egress");
        let ai = iface(&net, "A:ingress");
        let tap = net.install_tap(ae, TapDirection::Out, None).unwrap();
        let arrivals = net
            .install_tap(iface(&net, "B:ingress"), TapDirection::In, Some(FlowId(7)))
            .unwrap();
        let before = net.counters(ae).unwrap().out_octets_total();
        let mut s: Scheduler<NetEvent> = Scheduler::new();
        for _ in 0..125 {
            net.inject(&mut s, ai, data(1000)).unwrap();
        }
        s.run_until(SimTime::from_secs(2), |s, e| {
            net.handle(s, e);
        })
        .unwrap();
        let series = flow_rate(
            net.tap(arrivals),
            FlowId(7),
            SimTime::from_secs(1),
            SimTime::ZERO,
            SimTime::from_secs(2),
        );
        assert_eq!(
            series.points,
            vec![(SimTime::from_secs(1), 1_000_000.0), (SimTime::from_secs(2), 0.0)]
        );
        let tapped: u64 = net.tap(tap).records.iter().map(|r| r.2 as u64).sum();
        assert_eq!(tapped, net.counters(ae).unwrap().out_octets_total() - before);
    }

    #[test]
    fn cmm_examples() {
        let report = |at: u64, values: Vec<(Metric, f64)>| MeasurementReport {
            at: SimTime::from_secs(at),
            values,
        };
        let b = || Metric::LinkUtil("B:egress".into());
        let a = || Metric::LinkUtil("A:egress".into());
        let reports = [report(1, vec![(b(), 40.0)]), report(2, vec![(b(), 60.0), (a(), 5.0)])];
        let rows = cmm_aggregate(&reports, SimTime::from_secs(60));
        assert_eq!(rows.len(), 2);
        assert_eq!((rows[0].metric.clone(), rows[0].mean), (a(), 5.0));
        assert_eq!(
            (rows[1].mean, rows[1].min, rows[1].max, rows[1].latest),
            (50.0, 40.0, 60.0, 60.0)
        );
        assert!(cmm_aggregate(&[], SimTime::from_secs(60)).is_empty());

        let mut cmm = Cmm::new(SimTime::from_secs(5));
        cmm.ingest(&report(0, vec![(b(), 10.0)]));
        cmm.ingest(&report(10, vec![(b(), 30.0)]));
        assert_eq!(cmm.summary()[0].samples, 1);
        assert_eq!(cmm.latest(&b()), Some(30.0));
    }
}
