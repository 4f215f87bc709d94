//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Scenario runs are started first on their own threads; the cheap suites
//! run meanwhile. Exits non-zero if any line fails.

use std::collections::VecDeque;
use std::net::Ipv4Addr;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::thread;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pbqos::harness::{in_window, load_config, run_scenario, LoadedScenario, RunOptions, RunResult, Series};
use pbqos::mms::{bandwidth, update_ewma, utilization, CounterSample, MibObject};
use pbqos::pep::{ClassId, EnqueueOutcome, PoliceVerdict, PrioQdisc, TokenBucketPolicer};
use pbqos::policy::{parse_rule, render_rule, Action, Condition, Field, Metric, Op, PolicyRule, Value};
use pbqos::simcore::{FlowId, InterfaceId, Ipv4Net, NodeId, Packet, Role, SimTime};

const GOLDEN_TC: [&str; 3] = [
    "tc class change dev eth0 classid 1:1 dsmark mask 0x0 value 0xb8",
    "tc filter add dev eth0 parent 1:0 protocol ip prio 1 u32 match ip src 192.168.20.10/24 flow id 1:1",
    "tc filter add dev eth0 parent 1:0 protocol ip prio 1 u32 match ip tos 0xb8 0xfc flow id 1:1",
];

const ESTIMATOR_PAIRS: usize = 1000;
const EWMA_SEQUENCES: usize = 1000;

const PEAK_BAND_MBPS: (f64, f64) = (550.0, 650.0);
const TAGGED_RATE_BPS: f64 = 1e6;
const TAGGED_TOL: f64 = 0.05;
const LOSS_MAJORITY_PCT: f64 = 60.0;
const DELAY_BAND_MS: (f64, f64) = (30.0, 50.0);
const DEGRADED_EGRESS_BPS: f64 = 0.5e6;
const EF_LOSS_MAX_PCT: f64 = 5.0;
const EF_DELAY_WIDTH_S: f64 = 0.002;

const QDISC_PACKETS: usize = 100_000;
const POLICER_PACKETS: usize = 100_000;
const FUZZED_RULES: usize = 10_000;

struct Report {
    lines: Vec<(bool, String)>,
}

impl Report {
    fn check(&mut self, id: &str, pass: bool, detail: impl Into<String>) {
        let detail = detail.into();
        println!("{} {id:<4} {detail}", if pass { "PASS" } else { "FAIL" });
        self.lines.push((pass, id.to_string()));
    }

    fn timing(&self, id: &str, started: Instant) {
        println!("     {id:<4} took {:.2?}", started.elapsed());
    }
}

fn scenario_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn load(name: &str, k: u64) -> LoadedScenario {
    let mut sc = load_config(&scenario_dir().join(name)).expect("scenario loads");
    sc.config.time_compression = k;
    sc.config.validate().expect("compression valid");
    sc
}

fn spawn_run(name: &'static str, k: u64) -> thread::JoinHandle<(RunResult, Duration)> {
    thread::spawn(move || {
        let sc = load(name, k);
        let t = Instant::now();
        let r = run_scenario(&sc, &RunOptions::default()).expect("scenario runs");
        (r, t.elapsed())
    })
}

fn mbps(x: f64) -> f64 {
    x / 1e6
}

// ---------------------------------------------------------------- 1

fn golden_tc(rep: &mut Report) {
    let t = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_pbqos"))
        .arg("render-tc")
        .arg(scenario_dir().join("policies.txt"))
        .output()
        .expect("binary runs");
    let stdout = String::from_utf8_lossy(&out.stdout);
    let lines: Vec<&str> = stdout.lines().collect();
    let ok = out.status.success() && lines == GOLDEN_TC;
    rep.check(
        "1",
        ok,
        if ok {
            "render-tc reproduces the three tc command strings byte-exactly".to_string()
        } else {
            format!("render-tc printed {lines:?}")
        },
    );
    rep.timing("1", t);
}

// ---------------------------------------------------------------- 2

fn sample(value: u32, t: SimTime) -> CounterSample {
    CounterSample {
        oid: MibObject::IfOutOctets,
        iface: InterfaceId {
            node: NodeId(0),
            index: 0,
        },
        value,
        t,
    }
}

fn ulps(a: f64, b: f64) -> u64 {
    (a.to_bits() as i64 - b.to_bits() as i64).unsigned_abs()
}

fn estimators(rep: &mut Report) {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xE57);
    let (mut worst_ulp, mut wraps, mut wrap_mismatch) = (0u64, 0usize, 0usize);
    for _ in 0..ESTIMATOR_PAIRS {
        // A 64-bit shadow counter; the agent only sees its low 32 bits.
        let shadow0: u64 = rng.gen_range(0..1u64 << 40);
        let octets: u64 = rng.gen_range(0..=u32::MAX as u64);
        let shadow1 = shadow0 + octets;
        let t_prev = SimTime::from_micros(rng.gen_range(0..1_000_000_000));
        let dt = SimTime::from_micros(rng.gen_range(1..100_000_000));
        let speed: u64 = rng.gen_range(1..=10_000_000_000);
        let prev = sample(shadow0 as u32, t_prev);
        let cur = sample(shadow1 as u32, t_prev + dt);

        let bw = bandwidth(&prev, &cur).expect("valid pair");
        let util = utilization(&prev, &cur, speed).expect("valid pair");
        worst_ulp = worst_ulp.max(ulps(util, bw * 100.0 / speed as f64));

        let oracle = octets as f64 * 8.0 / dt.as_secs_f64();
        if (shadow1 as u32) < (shadow0 as u32) {
            wraps += 1;
        }
        if bw != oracle {
            wrap_mismatch += 1;
        }
    }
    let pairs_ok = worst_ulp <= 1 && wrap_mismatch == 0 && wraps > 0;

    let mut bounded = true;
    for _ in 0..EWMA_SEQUENCES {
        let alpha: f64 = rng.gen_range(0.0..=1.0);
        let n = rng.gen_range(1..200);
        let (mut lo, mut hi, mut s) = (f64::INFINITY, f64::NEG_INFINITY, None);
        for _ in 0..n {
            let x: f64 = rng.gen_range(0.0..1e10);
            lo = lo.min(x);
            hi = hi.max(x);
            let v = update_ewma(s, x, alpha).expect("alpha in range");
            bounded &= v >= lo && v <= hi;
            s = Some(v);
        }
    }
    rep.check(
        "2",
        pairs_ok && bounded,
        format!(
            "{ESTIMATOR_PAIRS} counter pairs: util/bw within {worst_ulp} ulp, {wraps} wraps, \
             {wrap_mismatch} disagreements with the 64-bit oracle; EWMA bounded over {EWMA_SEQUENCES} sequences: {bounded}"
        ),
    );
    rep.timing("2", t0);
}

// ---------------------------------------------------------------- 3, 4

fn samples_in_windows(s: &Series, windows: &[(f64, f64)]) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::new(); windows.len()];
    for &(t, v) in &s.points {
        if let (Some(w), Some(v)) = (in_window(t, windows), v) {
            out[w].push(v);
        }
    }
    out
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn scenario1(rep: &mut Report, r: &RunResult, took: Duration) -> Option<f64> {
    let s = &r.summary;
    let windows = &s.congestion_windows;

    let peak = mbps(s.peak_aggregate_bps);
    rep.check(
        "3a",
        (PEAK_BAND_MBPS.0..=PEAK_BAND_MBPS.1).contains(&peak),
        format!(
            "peak aggregate {peak:.1} Mbit/s in [{}, {}]",
            PEAK_BAND_MBPS.0, PEAK_BAND_MBPS.1
        ),
    );

    let ing = &r.series.tagged_ingress_bw;
    let off = ing
        .values()
        .filter(|v| (v - TAGGED_RATE_BPS).abs() > TAGGED_TOL * TAGGED_RATE_BPS)
        .count();
    rep.check(
        "3b",
        off == 0 && ing.values().count() > 0,
        format!(
            "tagged ingress {:.3}..{:.3} Mbit/s, {off} samples outside 1 Mbit/s +-5%",
            mbps(ing.min().unwrap_or(0.0)),
            mbps(ing.max().unwrap_or(0.0))
        ),
    );

    let per_window = samples_in_windows(&r.series.probe_loss, windows);
    let mut ok = !windows.is_empty();
    let mut detail = Vec::new();
    for (w, xs) in windows.iter().zip(&per_window) {
        let above = xs.iter().filter(|&&x| x > LOSS_MAJORITY_PCT).count();
        let full = xs.iter().any(|&x| x >= 100.0);
        ok &= 2 * above > xs.len() && full;
        detail.push(format!(
            "({:.0}, {:.0}]: {above}/{} above 60%, peak 100%: {full}",
            w.0,
            w.1,
            xs.len()
        ));
    }
    rep.check(
        "3c",
        ok,
        if detail.is_empty() {
            "no congestion window found".to_string()
        } else {
            detail.join("; ")
        },
    );

    let d = s.max_probe_delay_s.unwrap_or(0.0) * 1e3;
    rep.check(
        "3d",
        (DELAY_BAND_MS.0..=DELAY_BAND_MS.1).contains(&d),
        format!(
            "max probe delay {d:.2} ms in [{}, {}]",
            DELAY_BAND_MS.0, DELAY_BAND_MS.1
        ),
    );

    let eg = samples_in_windows(&r.series.tagged_egress_bw, windows)
        .into_iter()
        .flatten()
        .reduce(f64::min);
    rep.check(
        "3e",
        eg.is_some_and(|v| v < DEGRADED_EGRESS_BPS),
        format!(
            "min tagged egress during congestion {:.3} Mbit/s",
            mbps(eg.unwrap_or(f64::NAN))
        ),
    );
    println!(
        "     3    scenario 1 (K={}) simulated in {took:.2?}",
        s.time_compression
    );

    let congested: Vec<f64> = samples_in_windows(&r.series.probe_delay, windows)
        .into_iter()
        .flatten()
        .collect();
    (!congested.is_empty()).then(|| mean(&congested))
}

fn scenario2(rep: &mut Report, r: &RunResult, took: Duration, s1_congested_mean: Option<f64>) {
    let s = &r.summary;
    let eg = &r.series.tagged_egress_bw;
    let off = eg
        .points
        .iter()
        .filter(|p| {
            p.1.is_none_or(|v| (v - TAGGED_RATE_BPS).abs() > TAGGED_TOL * TAGGED_RATE_BPS)
        })
        .count();
    rep.check(
        "4a",
        off == 0 && !eg.points.is_empty(),
        format!(
            "tagged egress {:.3}..{:.3} Mbit/s over {} samples, {off} outside 1 Mbit/s +-5%",
            mbps(eg.min().unwrap_or(0.0)),
            mbps(eg.max().unwrap_or(0.0)),
            eg.points.len()
        ),
    );

    let loss = &r.series.probe_loss;
    let worst = loss.max();
    let missing = loss.points.iter().filter(|p| p.1.is_none()).count();
    rep.check(
        "4b",
        worst.is_some_and(|w| w <= EF_LOSS_MAX_PCT) && missing == 0,
        format!(
            "max EF probe loss {:.1}% over {} trains",
            worst.unwrap_or(f64::NAN),
            loss.points.len()
        ),
    );

    let delays: Vec<f64> = r.series.probe_delay.values().collect();
    let width = r.series.probe_delay.max().unwrap_or(f64::NAN) - r.series.probe_delay.min().unwrap_or(f64::NAN);
    let congested: Vec<f64> = samples_in_windows(&r.series.probe_delay, &s.congestion_windows)
        .into_iter()
        .flatten()
        .collect();
    let m2 = if congested.is_empty() {
        mean(&delays)
    } else {
        mean(&congested)
    };
    let ok = width <= EF_DELAY_WIDTH_S && s1_congested_mean.is_some_and(|m1| m2 < m1);
    rep.check(
        "4c",
        ok,
        format!(
            "EF delay band width {:.3} ms, congested mean {:.3} ms vs best effort {:.3} ms",
            width * 1e3,
            m2 * 1e3,
            s1_congested_mean.unwrap_or(f64::NAN) * 1e3
        ),
    );
    println!(
        "     4    scenario 2 (K={}) simulated in {took:.2?}",
        s.time_compression
    );
}

// ---------------------------------------------------------------- 5

fn pkt(flow: u32) -> Packet {
    Packet::data(
        FlowId(flow),
        Ipv4Addr::new(10, 0, 0, 1),
        Ipv4Addr::new(10, 0, 0, 2),
        1000,
    )
}

/// Strict priority and drop-tail against a reference model.
fn qdisc_property(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let bands = rng.gen_range(1..=4);
    let limits: Vec<usize> = (0..bands).map(|_| rng.gen_range(1..50)).collect();
    let mut q = PrioQdisc::new(&limits);
    let classes: Vec<ClassId> = (1..=6).map(|m| ClassId::new(1, m)).collect();
    let mut band_of = Vec::new();
    for c in &classes {
        let b = rng.gen_range(0..bands);
        q.map_class(*c, b);
        band_of.push(b);
    }
    let mut model: Vec<VecDeque<u32>> = vec![VecDeque::new(); bands];
    let mut next = 0u32;
    for _ in 0..QDISC_PACKETS {
        if rng.gen_bool(0.55) {
            let ci = rng.gen_range(0..classes.len());
            let b = band_of[ci];
            let out = q.enqueue(pkt(next), classes[ci]);
            let full = model[b].len() >= limits[b];
            match out {
                EnqueueOutcome::Queued { band } if band == b && !full => model[b].push_back(next),
                EnqueueOutcome::Dropped { band, .. } if band == b && full => {}
                o => return Err(format!("packet {next}: {o:?}, model full={full}")),
            }
            next += 1;
        } else {
            let want = model.iter_mut().find_map(|b| b.pop_front());
            let got = q.dequeue().map(|p| p.flow_id.0);
            if got != want {
                return Err(format!("dequeue gave {got:?}, expected {want:?}"));
            }
        }
    }
    Ok(())
}

/// Conformance against an independent signed-integer bucket, plus the
/// envelope bound: conformant bytes in any interval never exceed
/// `burst + rate * interval`.
fn policer_property(rng: &mut ChaCha8Rng) -> Result<(), String> {
    const PS: i128 = 1_000_000_000_000;
    let rate: u64 = rng.gen_range(10_000..1_000_000_000);
    let burst: u64 = rng.gen_range(64..100_000);
    let mut tb = TokenBucketPolicer::new(rate, burst);
    // Oracle units: bits * ps.
    let cap = burst as i128 * 8 * PS;
    let mut tokens = cap;
    let mut last = 0i128;
    let mut now = 0u64;
    // Envelope: max over earlier conformant i of (rate * t_i - bits before i).
    let mut conf_bits = 0i128;
    let mut best: Option<i128> = None;
    for i in 0..POLICER_PACKETS {
        now += rng.gen_range(0..2_000_000_000u64);
        let size: u32 = rng.gen_range(28..1500);
        let t = now as i128;
        tokens = (tokens + rate as i128 * (t - last)).min(cap);
        last = t;
        let need = size as i128 * 8 * PS;
        let want = if tokens >= need {
            tokens -= need;
            PoliceVerdict::Conform
        } else {
            PoliceVerdict::Exceed
        };
        let got = tb.police(size, SimTime::from_ps(now));
        if got != want {
            return Err(format!("packet {i}: {got:?}, oracle {want:?}"));
        }
        if got == PoliceVerdict::Conform {
            let start_term = rate as i128 * t - conf_bits * PS;
            best = Some(best.map_or(start_term, |b| b.max(start_term)));
            conf_bits += size as i128 * 8;
            // bits(i..=j) * PS - rate * (t_j - t_i) <= burst bits * PS
            let lhs = conf_bits * PS - rate as i128 * t + best.unwrap();
            if lhs > cap {
                return Err(format!("packet {i}: envelope exceeded by {} bit-ps", lhs - cap));
            }
        }
    }
    Ok(())
}

fn arb_net(rng: &mut ChaCha8Rng) -> Ipv4Net {
    Ipv4Net::new(Ipv4Addr::from(rng.gen::<u32>()), rng.gen_range(0..=32)).expect("prefix length in range")
}

fn arb_op(rng: &mut ChaCha8Rng) -> Op {
    [Op::Eq, Op::Ne, Op::Lt, Op::Le, Op::Gt, Op::Ge][rng.gen_range(0..6)]
}

fn arb_word(rng: &mut ChaCha8Rng, alphabet: &[u8], len: usize) -> String {
    (0..len)
        .map(|_| alphabet[rng.gen_range(0..alphabet.len())] as char)
        .collect()
}

fn arb_condition(rng: &mut ChaCha8Rng) -> Condition {
    const UPPER: &[u8] = b"ABCDEFGHIJKLMNOPQRSTUVWXYZ";
    const LOWER: &[u8] = b"abcdefghijklmnopqrstuvwxyz";
    match rng.gen_range(0..4) {
        0 => Condition {
            lhs: if rng.gen() { Field::SrcIp } else { Field::DstIp },
            op: if rng.gen() { Op::Eq } else { Op::Ne },
            rhs: Value::Net(arb_net(rng)),
        },
        1 => Condition {
            lhs: Field::Dscp,
            op: arb_op(rng),
            rhs: Value::Byte(rng.gen_range(0..64)),
        },
        2 => Condition {
            lhs: Field::Tos,
            op: arb_op(rng),
            rhs: Value::Byte(rng.gen()),
        },
        _ => {
            let len = rng.gen_range(1..8);
            let iface = format!("{}:{}", arb_word(rng, UPPER, 1), arb_word(rng, LOWER, len));
            let path = format!("{}->{}", arb_word(rng, UPPER, 1), arb_word(rng, UPPER, 1));
            let m = match rng.gen_range(0..4) {
                0 => Metric::LinkUtil(iface),
                1 => Metric::LinkBw(iface),
                2 => Metric::ProbeLoss(path),
                _ => Metric::ProbeDelay(path),
            };
            Condition {
                lhs: Field::Metric(m),
                op: arb_op(rng),
                rhs: Value::Number(rng.gen_range(-1e12..1e12)),
            }
        }
    }
}

fn arb_rule(rng: &mut ChaCha8Rng) -> PolicyRule {
    let target = if rng.gen() { Role::Edge } else { Role::Core };
    let actions = (0..rng.gen_range(1..4))
        .map(|_| match (target, rng.gen_range(0..3)) {
            (_, 2) => {
                if rng.gen() {
                    Action::Admit
                } else {
                    Action::Deny
                }
            }
            (Role::Edge, 0) => Action::Mark {
                dscp: rng.gen_range(0..64),
            },
            (Role::Edge, _) => Action::Police {
                rate_bps: rng.gen_range(1..u64::MAX),
                burst_bytes: rng.gen(),
            },
            (Role::Core, _) => Action::Queue {
                priority: rng.gen_range(1..=255),
            },
        })
        .collect();
    let id = if rng.gen() {
        String::new()
    } else {
        let len = rng.gen_range(0..9);
        arb_word(rng, b"abcdefghijklmnopqrstuvwxyz", 1) + &arb_word(rng, b"abcdefghijklmnopqrstuvwxyz0123456789_-", len)
    };
    PolicyRule {
        id,
        target,
        conditions: (0..rng.gen_range(1..4)).map(|_| arb_condition(rng)).collect(),
        actions,
        priority: if rng.gen() { 0 } else { rng.gen() },
    }
}

fn round_trip_property(rng: &mut ChaCha8Rng) -> Result<(), String> {
    for _ in 0..FUZZED_RULES {
        let rule = arb_rule(rng);
        let text = render_rule(&rule);
        let back = parse_rule(&text).map_err(|e| format!("{text}: {e}"))?;
        if back != rule || render_rule(&back) != text {
            return Err(format!("{text} parsed back as {}", render_rule(&back)));
        }
    }
    Ok(())
}

/// Two short runs of the same scenario with the packet event log enabled.
fn determinism() -> Result<String, String> {
    let short = || {
        let mut sc = load("scenario2.json", 10);
        sc.config.duration = 30.0;
        for a in &mut sc.config.traffic.arrivals {
            a.window = (0.0, 20.0);
        }
        sc.config.validate().expect("short preset valid");
        run_scenario(
            &sc,
            &RunOptions {
                event_log: true,
                ..RunOptions::default()
            },
        )
        .expect("short run")
    };
    let (a, b) = (short(), short());
    let (sa, sb) = (&a.summary, &b.summary);
    if !sa.conservation_holds {
        return Err("packet conservation violated".into());
    }
    if sa.event_log_digest.is_none() || sa.event_log_digest != sb.event_log_digest {
        return Err(format!(
            "event digests differ: {:?} vs {:?}",
            sa.event_log_digest, sb.event_log_digest
        ));
    }
    if sa.decision_digest != sb.decision_digest || a.series != b.series {
        return Err("decision digest or series differ between identical runs".into());
    }
    Ok(format!(
        "{} events, digest {}",
        sa.events,
        sa.event_log_digest.as_deref().unwrap_or("")
    ))
}

fn properties(rep: &mut Report) {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED);
    let res = determinism();
    rep.check(
        "5a",
        res.is_ok(),
        match res {
            Ok(d) => format!("simcore conservation and determinism: {d}"),
            Err(e) => e,
        },
    );
    let res = qdisc_property(&mut rng);
    rep.check(
        "5b",
        res.is_ok(),
        format!("strict priority over {QDISC_PACKETS} packets: {res:?}"),
    );
    let res = policer_property(&mut rng);
    rep.check(
        "5c",
        res.is_ok(),
        format!("policer conformance over {POLICER_PACKETS} packets: {res:?}"),
    );
    let res = round_trip_property(&mut rng);
    rep.check(
        "5d",
        res.is_ok(),
        format!("parse/render round trip over {FUZZED_RULES} rules: {res:?}"),
    );
    rep.timing("5a-d", t);
}

fn control_plane(rep: &mut Report, runs: &[(&str, &RunResult)]) {
    let mut ok = true;
    let mut detail = Vec::new();
    for (name, r) in runs {
        let c = &r.summary.control;
        let good = c.exactly_once && c.two_path_equivalent && c.errors.is_empty() && c.acks == c.applies_sent;
        ok &= good && r.summary.conservation_holds;
        detail.push(format!(
            "{name}: {}/{} acks, two-path {}",
            c.acks, c.applies_sent, c.two_path_equivalent
        ));
    }
    rep.check("5e", ok, detail.join("; "));
}

// ---------------------------------------------------------------- 6

fn compression(rep: &mut Report, k10: &RunResult, k1: &RunResult, took: Duration) {
    let (a, b) = (&k10.summary, &k1.summary);
    let same_drops = a.drops == b.drops && a.probe_drops == b.probe_drops;
    let same_loss = k10.series.probe_loss == k1.series.probe_loss;
    rep.check(
        "6",
        same_drops && same_loss && a.decision_digest == b.decision_digest,
        format!(
            "K={} vs K={}: drops {} vs {}, loss series identical: {same_loss}, digest {} vs {}",
            a.time_compression,
            b.time_compression,
            a.total_drops(),
            b.total_drops(),
            a.decision_digest,
            b.decision_digest
        ),
    );
    println!("     6    uncompressed run simulated in {took:.2?}");
}

fn main() -> ExitCode {
    let started = Instant::now();
    let s1 = spawn_run("scenario1.json", 10);
    let s2 = spawn_run("scenario2.json", 10);
    let s1k1 = spawn_run("scenario1.json", 1);

    let mut rep = Report { lines: Vec::new() };
    golden_tc(&mut rep);
    estimators(&mut rep);
    properties(&mut rep);

    let (r1, t1) = s1.join().expect("scenario 1 thread");
    let (r2, t2) = s2.join().expect("scenario 2 thread");
    let s1_mean = scenario1(&mut rep, &r1, t1);
    scenario2(&mut rep, &r2, t2, s1_mean);
    let (r1k1, t1k1) = s1k1.join().expect("uncompressed thread");
    control_plane(
        &mut rep,
        &[("scenario1", &r1), ("scenario2", &r2), ("scenario1 K=1", &r1k1)],
    );
    compression(&mut rep, &r1, &r1k1, t1k1);

    let failed: Vec<&str> = rep.lines.iter().filter(|l| !l.0).map(|l| l.1.as_str()).collect();
    println!(
        "\n{} of {} criteria passed in {:.1?}{}",
        rep.lines.len() - failed.len(),
        rep.lines.len(),
        started.elapsed(),
        if failed.is_empty() {
            String::new()
        } else {
            format!("; failed: {}", failed.join(", "))
        }
    );
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
