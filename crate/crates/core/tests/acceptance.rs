//! Acceptance suite: end-to-end properties of the synthesis pipeline at
//! desk scale, one test (and one printed PASS/FAIL line) per criterion.
//!
//! Run with `cargo test -p gatesched-core --test acceptance -- --nocapture`
//! to see the per-criterion lines. Requires an SMT solver (z3 by default,
//! override with $GATESCHED_SOLVER).

mod common;

use std::collections::BTreeMap;
use std::sync::OnceLock;
use std::time::Duration;

use common::*;
use gatesched_core::encoder::ir::ConstraintCategory;
use gatesched_core::encoder::encode;
use gatesched_core::netmodel::{
    build_port_models, e2e_floor, EdgeSpec, FrameKey, Network, Stream, TopologyDescription,
};
use gatesched_core::pipeline::SynthesisReport;
use gatesched_core::schedule::{ArithmeticMode, ObjectiveKind, OrderingMode, Schedule};
use gatesched_core::simulator::{
    isolation_probe, offsets_from_seed, simulate, LossSpec, SimConfig,
};
use gatesched_core::smtlib::{optimize_by_bisection, Logic, SolverStatus};
use gatesched_core::validator::{brute_force_feasible, OracleError};
use gatesched_core::EncoderConfig;

const CORPUS_SIZE: u64 = 200;
const TINY_CORPUS_SIZE: usize = 100;

struct Solved {
    instance: GenInstance,
    sequential: SynthesisReport,
    pairwise: SynthesisReport,
}

fn corpus() -> &'static [Solved] {
    static CORPUS: OnceLock<Vec<Solved>> = OnceLock::new();
    CORPUS.get_or_init(|| {
        ensure_solver();
        (0..CORPUS_SIZE)
            .map(|seed| {
                let instance = random_instance(seed);
                let seq_cfg = encoder_config(
                    instance.delta,
                    OrderingMode::Sequential,
                    ArithmeticMode::Linearized,
                    instance.multi_period,
                );
                let sequential = solve(&instance.network, &instance.streams, &seq_cfg);
                let pw_cfg = encoder_config(
                    instance.delta,
                    OrderingMode::Pairwise,
                    ArithmeticMode::Linearized,
                    instance.multi_period,
                );
                let pairwise = solve(&instance.network, &instance.streams, &pw_cfg);
                Solved { instance, sequential, pairwise }
            })
            .collect()
    })
}

fn verdict(criterion: &str, pass: bool, detail: &str) {
    println!(
        "{} criterion {criterion}: {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {criterion} failed: {detail}");
}

#[test]
fn criterion_1_constraint_soundness() {
    let mut sat = 0usize;
    let mut max_wall = Duration::ZERO;
    let mut failures = Vec::new();
    for solved in corpus() {
        max_wall = max_wall.max(solved.sequential.wall);
        if solved.sequential.wall > Duration::from_secs(60) {
            failures.push(format!("{}: solve took {:?}", solved.instance.label, solved.sequential.wall));
        }
        match &solved.sequential.status {
            SolverStatus::Sat => {
                sat += 1;
                if !solved.sequential.violations.is_empty() {
                    failures.push(format!(
                        "{}: sat model has {} validator violations: {:?}",
                        solved.instance.label,
                        solved.sequential.violations.len(),
                        solved.sequential.violations.first(),
                    ));
                }
            }
            SolverStatus::Unsat => {}
            other => failures.push(format!("{}: solver returned {other:?}", solved.instance.label)),
        }
    }
    let pass = failures.is_empty() && sat >= corpus().len() / 2;
    verdict(
        "1 (constraint soundness)",
        pass,
        &format!(
            "{} instances, {sat} sat, every sat schedule validator-clean, max solve {max_wall:?}{}",
            corpus().len(),
            if failures.is_empty() { String::new() } else { format!("; failures: {failures:?}") },
        ),
    );
}

#[test]
fn criterion_2_oracle_equivalence() {
    ensure_solver();
    let mut checked = 0usize;
    let mut disagreements = Vec::new();
    let mut seed = 0u64;
    while checked < TINY_CORPUS_SIZE {
        seed += 1;
        let tiny = random_tiny_instance(seed);
        let oracle = match brute_force_feasible(
            &tiny.network,
            &tiny.streams,
            tiny.delta,
            tiny.multi_period,
            1,
        ) {
            Ok(result) => result.is_feasible(),
            Err(OracleError::ExceedsBounds(_)) => continue,
            Err(err) => panic!("oracle error: {err}"),
        };
        for (ordering, arithmetic) in mode_grid() {
            let cfg = encoder_config(tiny.delta, ordering, arithmetic, tiny.multi_period);
            let report = solve(&tiny.network, &tiny.streams, &cfg);
            let solver_sat = match report.status {
                SolverStatus::Sat => true,
                SolverStatus::Unsat => false,
                ref other => {
                    disagreements.push(format!(
                        "seed {seed} {ordering:?}/{arithmetic:?}: solver {other:?}"
                    ));
                    continue;
                }
            };
            if solver_sat != oracle {
                disagreements.push(format!(
                    "seed {seed} {ordering:?}/{arithmetic:?}: solver={solver_sat} oracle={oracle}"
                ));
            }
        }
        checked += 1;
    }
    verdict(
        "2 (oracle equivalence)",
        disagreements.is_empty(),
        &format!(
            "{checked} tiny instances x 4 mode combinations, {} disagreements{}",
            disagreements.len(),
            if disagreements.is_empty() { String::new() } else { format!(": {disagreements:?}") },
        ),
    );
}

#[test]
fn criterion_3_ordering_equivalence_and_cost() {
    let mut mismatches = Vec::new();
    for solved in corpus() {
        let seq_sat = solved.sequential.status == SolverStatus::Sat;
        let pw_sat = solved.pairwise.status == SolverStatus::Sat;
        if seq_sat != pw_sat {
            mismatches.push(format!(
                "{}: sequential={:?} pairwise={:?}",
                solved.instance.label, solved.sequential.status, solved.pairwise.status
            ));
        }
        // Structural cost: wmax-1 chained assertions per link vs one
        // disjunction per unordered window pair.
        let ports = build_port_models(&solved.instance.network, &solved.instance.streams).unwrap();
        let expected_seq: usize = ports.values().map(|p| p.wmax as usize - 1).sum();
        let expected_pw: usize =
            ports.values().map(|p| (p.wmax as usize * (p.wmax as usize - 1)) / 2).sum();
        assert_eq!(
            solved.sequential.assertion_counts[&ConstraintCategory::Ordering],
            expected_seq,
            "{}",
            solved.instance.label
        );
        assert_eq!(
            solved.pairwise.assertion_counts[&ConstraintCategory::Ordering],
            expected_pw,
            "{}",
            solved.instance.label
        );
    }
    verdict(
        "3 (ordering equivalence and cost)",
        mismatches.is_empty(),
        &format!(
            "{} instances agree on sat/unsat across orderings; assertion counts match wmax-1 vs wmax(wmax-1)/2{}",
            corpus().len(),
            if mismatches.is_empty() { String::new() } else { format!("; mismatches: {mismatches:?}") },
        ),
    );
}

#[test]
fn criterion_4_unsat_detection() {
    ensure_solver();
    let mut failures = Vec::new();
    let mut cases = 0usize;

    // Pigeonhole: the total frame time on a link exceeds its hyperperiod.
    for k in 0..20u64 {
        cases += 1;
        let slow = 10_000_000 + (k % 3) * 10_000_000; // 10..30 Mbit/s
        let topo = TopologyDescription {
            vertices: vec!["a".into(), "b".into()],
            edges: vec![EdgeSpec::new("a", "b", slow)],
        };
        let net = Network::build(&topo).unwrap();
        let n = 1 + (k % 3) as usize;
        let streams: Vec<Stream> = (0..n)
            .map(|i| {
                Stream::along(
                    format!("s{i}"),
                    &["a", "b"],
                    100_000_000,
                    250_000,
                    1500,
                    250_000,
                )
                .unwrap()
            })
            .collect();
        let load: i64 = streams
            .iter()
            .map(|s| net.links().next().unwrap().frame_duration(s.size_bytes))
            .sum();
        assert!(load > 250_000, "test setup must overflow the hyperperiod");
        let cfg = encoder_config(0, OrderingMode::Sequential, ArithmeticMode::Linearized, false);
        let report = solve(&net, &streams, &cfg);
        if report.status != SolverStatus::Unsat {
            failures.push(format!("pigeonhole {k}: {:?}", report.status));
        }
    }

    // Latency-infeasible: e2e below the oracle path floor.
    for k in 0..20u64 {
        cases += 1;
        let hops = 2 + (k % 2) as usize;
        let names: Vec<String> = (0..=hops).map(|i| format!("v{i}")).collect();
        let topo = TopologyDescription {
            vertices: names.iter().map(|n| n.as_str().into()).collect(),
            edges: (0..hops)
                .map(|i| EdgeSpec::new(names[i].as_str(), names[i + 1].as_str(), 1_000_000_000))
                .collect(),
        };
        let net = Network::build(&topo).unwrap();
        let delta = (k % 2) as i64 * 1000;
        let path: Vec<&str> = names.iter().map(String::as_str).collect();
        let size = 64 + (k as u32 * 37) % 1400;
        let probe = Stream::along("s", &path, i64::MAX / 4, 500_000, size, 500_000).unwrap();
        let floor = e2e_floor(&probe, &net, delta).unwrap();
        let s = Stream::along("s", &path, floor - 1, 500_000, size, 500_000).unwrap();
        let cfg = encoder_config(delta, OrderingMode::Sequential, ArithmeticMode::Linearized, false);
        let report = solve(&net, &[s], &cfg);
        if report.status != SolverStatus::Unsat {
            failures.push(format!("latency {k}: {:?}", report.status));
        }
    }

    verdict(
        "4 (unsatisfiability detection)",
        failures.is_empty(),
        &format!(
            "{cases} infeasible instances all reported unsat{}",
            if failures.is_empty() { String::new() } else { format!("; failures: {failures:?}") },
        ),
    );
}

fn conformance_failures(
    instance: &GenInstance,
    schedule: &Schedule,
    trace: &gatesched_core::simulator::SimTrace,
    context: &str,
) -> Vec<String> {
    let mut failures = Vec::new();
    if !trace.conformance_errors.is_empty() {
        failures.push(format!(
            "{context}: frames outside assigned windows: {:?}",
            trace.conformance_errors.first()
        ));
    }
    for stream in &instance.streams {
        let stats = &trace.streams[&stream.id];
        if stats.max_e2e > stream.e2e {
            failures.push(format!(
                "{context}: stream {} observed e2e {} > bound {}",
                stream.id, stats.max_e2e, stream.e2e
            ));
        }
        if !schedule.multi_period && stats.receiver_jitter > stream.jitter {
            failures.push(format!(
                "{context}: stream {} observed jitter {} > bound {}",
                stream.id, stats.receiver_jitter, stream.jitter
            ));
        }
    }
    failures
}

#[test]
fn criterion_5_simulation_conformance() {
    let mut failures = Vec::new();
    let mut schedules = 0usize;
    let mut runs = 0usize;
    for solved in corpus() {
        if solved.sequential.status != SolverStatus::Sat {
            continue;
        }
        let instance = &solved.instance;
        let schedule = solved.sequential.schedule.as_ref().unwrap();
        schedules += 1;
        let delta = instance.delta;
        let vertices: Vec<_> = instance.network.vertices().cloned().collect();

        // Loss scenarios: every (stream, repetition within the first
        // global hyperperiod, hop).
        let hp_global = schedule
            .ports
            .values()
            .map(|p| p.hyperperiod)
            .fold(1i64, num_integer::lcm);
        let mut scenarios = vec![None];
        for stream in &instance.streams {
            for rep in 0..(hp_global / stream.period) as u32 {
                for hop in 0..stream.route.len() as u32 {
                    scenarios.push(Some(LossSpec {
                        stream: stream.id.clone(),
                        repetition: rep,
                        hop,
                    }));
                }
            }
        }

        for draw in 0..10u64 {
            let offsets = offsets_from_seed(vertices.iter(), delta, draw.wrapping_mul(7919) ^ instance.seed);
            for scenario in &scenarios {
                let mut cfg = SimConfig::new(2).with_offsets(offsets.clone(), delta);
                if let Some(loss) = scenario {
                    cfg = cfg.with_losses([loss.clone()]);
                }
                let trace = simulate(&instance.network, &instance.streams, schedule, &cfg)
                    .expect("validated schedules simulate");
                runs += 1;
                let context = format!("{} draw {draw} loss {scenario:?}", instance.label);
                failures.extend(conformance_failures(instance, schedule, &trace, &context));
                if failures.len() > 5 {
                    break;
                }
            }
            if failures.len() > 5 {
                break;
            }
        }

        // The probe re-checks deterministic window usage end to end.
        let offsets = offsets_from_seed(vertices.iter(), delta, instance.seed);
        let cfg = SimConfig::new(2).with_offsets(offsets, delta);
        let report = isolation_probe(&instance.network, &instance.streams, schedule, &cfg)
            .expect("probe runs");
        if !report.deterministic {
            failures.push(format!(
                "{}: window usage shifted under loss: {:?}",
                instance.label,
                report.shifts.first()
            ));
        }
        if failures.len() > 5 {
            break;
        }
    }
    verdict(
        "5 (simulation conformance)",
        failures.is_empty(),
        &format!(
            "{schedules} validated schedules, {runs} simulation runs (10 offset draws x all single-loss scenarios), zero violations{}",
            if failures.is_empty() { String::new() } else { format!("; failures: {failures:?}") },
        ),
    );
}

/// Minimum achievable latency term found by shrinking the e2e bound until
/// the brute-force oracle reports infeasible.
fn oracle_min_latency_term(net: &Network, stream: &Stream, delta: i64) -> i64 {
    let last = net.link(stream.last_link()).unwrap();
    let l_last = last.frame_duration(stream.size_bytes);
    let (mut lo, mut hi) = (0i64, stream.period * 2);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        let probe = Stream::new(
            stream.id.clone(),
            stream.route.clone(),
            mid + l_last + delta,
            stream.jitter,
            stream.size_bytes,
            stream.period,
        )
        .unwrap();
        let feasible = brute_force_feasible(net, std::slice::from_ref(&probe), delta, false, 1)
            .unwrap()
            .is_feasible();
        if feasible {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    lo
}

#[test]
fn criterion_6_optimization() {
    ensure_solver();
    let mut failures = Vec::new();

    // Minimum end-to-end latency matches the brute-force optimum.
    let mut e2e_cases = 0usize;
    for seed in 0..12u64 {
        let n_links = 1 + (seed % 3) as usize;
        let delta = (seed % 3) as i64;
        let size = 2 + (seed % 2) as u32;
        let names: Vec<String> = (0..=n_links).map(|i| format!("n{i}")).collect();
        let topo = TopologyDescription {
            vertices: names.iter().map(|n| n.as_str().into()).collect(),
            edges: (0..n_links)
                .map(|i| {
                    EdgeSpec::new(names[i].as_str(), names[i + 1].as_str(), 8_000_000_000)
                        .with_overhead(0)
                        .with_wmax(1)
                })
                .collect(),
        };
        let net = Network::build(&topo).unwrap();
        let path: Vec<&str> = names.iter().map(String::as_str).collect();
        let stream = Stream::along("s", &path, 64, 64, size, 64).unwrap();
        let expected = oracle_min_latency_term(&net, &stream, delta);

        let ports = build_port_models(&net, std::slice::from_ref(&stream)).unwrap();
        let cfg = EncoderConfig { delta, objective: ObjectiveKind::MinE2eSum, ..Default::default() };
        let ir = encode(std::slice::from_ref(&stream), &ports, cfg).unwrap();
        let outcome = optimize_by_bisection(
            &ir,
            Logic::QfLia,
            &solver_config().command,
            Duration::from_secs(60),
        )
        .unwrap();
        e2e_cases += 1;
        match (outcome.result.status.clone(), outcome.result.objective_value) {
            (SolverStatus::Sat, Some(value)) if (value - expected).abs() <= 1 && outcome.optimal => {}
            (status, value) => failures.push(format!(
                "e2e seed {seed}: bisection {status:?}/{value:?} vs oracle {expected}"
            )),
        }
    }

    // Minimum accrued jitter reaches the per-stream floor L with ample
    // window budgets.
    let mut psi_total = 0usize;
    let mut psi_at_floor = 0usize;
    for seed in 0..15u64 {
        let k = 2 + (seed % 3) as usize;
        let stations: Vec<String> = (0..k + 1).map(|i| format!("es{i}")).collect();
        let mut vertices = stations.clone();
        vertices.push("sw".to_string());
        let topo = TopologyDescription {
            vertices: vertices.iter().map(|v| v.as_str().into()).collect(),
            edges: stations
                .iter()
                .map(|s| EdgeSpec::new(s.as_str(), "sw", 1_000_000_000))
                .collect(),
        };
        let net = Network::build(&topo).unwrap();
        // k streams, all to the last station: the shared last hop gets one
        // window per frame by default.
        let listener = stations.last().unwrap().clone();
        let streams: Vec<Stream> = (0..k)
            .map(|i| {
                let r = route(&net, &stations[i].as_str().into(), &listener.as_str().into()).unwrap();
                let size = 64 + (seed as u32 * 53 + i as u32 * 101) % 1000;
                Stream::new(format!("s{i}"), r, 500_000, 500_000, size, 500_000).unwrap()
            })
            .collect();
        let ports = build_port_models(&net, &streams).unwrap();
        let cfg = EncoderConfig {
            objective: ObjectiveKind::MinJitterSum,
            ..Default::default()
        };
        let ir = encode(&streams, &ports, cfg).unwrap();
        let outcome = optimize_by_bisection(
            &ir,
            Logic::QfLia,
            &solver_config().command,
            Duration::from_secs(60),
        )
        .unwrap();
        if outcome.result.status != SolverStatus::Sat {
            failures.push(format!("jitter seed {seed}: {:?}", outcome.result.status));
            continue;
        }
        // Decode and inspect each stream's last-hop window size.
        let ctx = gatesched_core::smtlib::DecodeContext {
            delta: 0,
            ordering: OrderingMode::Sequential,
            multi_period: false,
        };
        let schedule =
            gatesched_core::smtlib::decode_model(&outcome.result, &ir, &ports, ctx).unwrap();
        for stream in &streams {
            psi_total += 1;
            let key = FrameKey {
                stream: stream.id.clone(),
                link: stream.last_link().clone(),
                repetition: 0,
            };
            let window = schedule.assigned_window(&key).unwrap();
            let l = net.link(stream.last_link()).unwrap().frame_duration(stream.size_bytes);
            if window.size() == l {
                psi_at_floor += 1;
            }
        }
    }
    let psi_fraction = psi_at_floor as f64 / psi_total.max(1) as f64;
    if psi_fraction < 0.95 {
        failures.push(format!(
            "only {psi_at_floor}/{psi_total} streams reached the jitter floor"
        ));
    }

    verdict(
        "6 (optimization)",
        failures.is_empty(),
        &format!(
            "{e2e_cases} bisection minima match the oracle within 1 ns; {psi_at_floor}/{psi_total} streams at jitter floor L{}",
            if failures.is_empty() { String::new() } else { format!("; failures: {failures:?}") },
        ),
    );
}

#[test]
fn criterion_7_multi_period_slots() {
    let mut checked = 0usize;
    let mut failures = Vec::new();
    for solved in corpus() {
        if !solved.instance.multi_period || solved.sequential.status != SolverStatus::Sat {
            continue;
        }
        checked += 1;
        let schedule = solved.sequential.schedule.as_ref().unwrap();
        let mut periods: BTreeMap<_, i64> = BTreeMap::new();
        for stream in &solved.instance.streams {
            periods.insert(stream.id.clone(), stream.period);
        }
        for key in schedule.assignment.keys() {
            let window = schedule.assigned_window(key).unwrap();
            let period = periods[&key.stream];
            let lo = key.repetition as i64 * period;
            let hi = (key.repetition as i64 + 1) * period;
            if window.open < lo || window.close > hi {
                failures.push(format!(
                    "{}: {key:?} window [{}, {}] outside slot [{lo}, {hi}]",
                    solved.instance.label, window.open, window.close
                ));
            }
        }
    }
    let pass = failures.is_empty() && checked >= 10;
    verdict(
        "7 (multi-period slot bounds)",
        pass,
        &format!(
            "{checked} mixed-period sat instances, every repetition window inside its period slot{}",
            if failures.is_empty() { String::new() } else { format!("; failures: {failures:?}") },
        ),
    );
}
