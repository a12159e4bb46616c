//! Shared test support: topologies, random instance generation and solver
//! plumbing for the integration and acceptance suites.
#![allow(dead_code)]

use std::collections::{BTreeMap, VecDeque};
use std::time::Duration;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use gatesched_core::netmodel::{
    e2e_floor, EdgeSpec, LinkId, Nanos, Network, Stream, TopologyDescription, VertexId,
};
use gatesched_core::pipeline::{synthesize, SolverConfig, SynthesisReport};
use gatesched_core::schedule::{ArithmeticMode, ObjectiveKind, OrderingMode};
use gatesched_core::smtlib::default_solver_command;
use gatesched_core::EncoderConfig;

pub fn solver_config() -> SolverConfig {
    SolverConfig {
        command: default_solver_command(),
        timeout: Duration::from_secs(60),
        emit_path: None,
    }
}

/// Fails fast with a readable message when no SMT solver is reachable.
pub fn ensure_solver() {
    let cmd = default_solver_command();
    let probe = gatesched_core::smtlib::run_solver(
        "(set-logic QF_LIA)(check-sat)\n",
        &cmd,
        Duration::from_secs(10),
    );
    if !matches!(probe.status, gatesched_core::smtlib::SolverStatus::Sat) {
        panic!(
            "no working SMT solver: `{}` answered {:?}; install z3 or set $GATESCHED_SOLVER",
            cmd.join(" "),
            probe.status
        );
    }
}

pub fn encoder_config(
    delta: Nanos,
    ordering: OrderingMode,
    arithmetic: ArithmeticMode,
    multi_period: bool,
) -> EncoderConfig {
    EncoderConfig { delta, ordering, arithmetic, multi_period, ..EncoderConfig::default() }
}

/// Undirected shortest path through the graph, as directed route links.
pub fn route(network: &Network, from: &VertexId, to: &VertexId) -> Option<Vec<LinkId>> {
    let mut prev: BTreeMap<VertexId, VertexId> = BTreeMap::new();
    let mut queue = VecDeque::from([from.clone()]);
    while let Some(v) = queue.pop_front() {
        if &v == to {
            let mut path = vec![v.clone()];
            let mut cur = v;
            while let Some(p) = prev.get(&cur) {
                path.push(p.clone());
                cur = p.clone();
            }
            path.reverse();
            return Some(path.windows(2).map(|w| LinkId { src: w[0].clone(), dst: w[1].clone() }).collect());
        }
        for link in network.links() {
            if link.id.src == v && !prev.contains_key(&link.id.dst) && &link.id.dst != from {
                prev.insert(link.id.dst.clone(), v.clone());
                queue.push_back(link.id.dst.clone());
            }
        }
    }
    None
}

/// The eight-vertex reference tree: three switches in a line, five end
/// stations (two on sw1, one on sw2, two on sw3). Seven undirected edges,
/// fourteen directed links.
pub fn fig1_topology(wmax: Option<u32>) -> TopologyDescription {
    let vertices = ["es1", "es2", "es3", "es4", "es5", "sw1", "sw2", "sw3"];
    let edges = [
        ("es1", "sw1"),
        ("es2", "sw1"),
        ("sw1", "sw2"),
        ("es3", "sw2"),
        ("sw2", "sw3"),
        ("es4", "sw3"),
        ("es5", "sw3"),
    ];
    TopologyDescription {
        vertices: vertices.iter().map(|v| (*v).into()).collect(),
        edges: edges
            .iter()
            .map(|(a, b)| {
                let mut e = EdgeSpec::new(*a, *b, 1_000_000_000);
                e.wmax = wmax;
                e
            })
            .collect(),
    }
}

/// Five streams whose routes cover all fourteen directed links of the
/// reference tree.
pub fn fig1_cover_streams(network: &Network, period: Nanos, e2e: Nanos, jitter: Nanos) -> Vec<Stream> {
    let pairs = [
        ("s1", "es1", "es3"),
        ("s2", "es3", "es1"),
        ("s3", "es2", "es4"),
        ("s4", "es5", "es2"),
        ("s5", "es4", "es5"),
    ];
    pairs
        .iter()
        .map(|(id, from, to)| {
            let r = route(network, &(*from).into(), &(*to).into()).unwrap();
            Stream::new(*id, r, e2e, jitter, 100, period).unwrap()
        })
        .collect()
}

pub struct GenInstance {
    pub network: Network,
    pub streams: Vec<Stream>,
    pub delta: Nanos,
    pub multi_period: bool,
    pub seed: u64,
    pub label: String,
}

/// Randomized desk-scale instance: line / star / reference-tree topologies,
/// 2..10 streams, periods from {250, 500, 1000} us, 64..1500 byte frames,
/// gigabit links.
pub fn random_instance(seed: u64) -> GenInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_streams = rng.gen_range(2..=10usize);
    // The default budget (one window per frame) blows the encoding up on
    // busy links, so it is only exercised on small instances.
    let wmax = if n_streams <= 4 && rng.gen_bool(0.3) {
        None
    } else {
        Some(rng.gen_range(2..=3))
    };

    let (label, topo, end_stations): (&str, TopologyDescription, Vec<String>) =
        match rng.gen_range(0..3u8) {
            0 => {
                // line: chain of switches, one end station per switch end
                let switches = rng.gen_range(1..=3usize);
                let mut vertices: Vec<String> = (1..=switches).map(|i| format!("sw{i}")).collect();
                let mut edges = Vec::new();
                for i in 1..switches {
                    edges.push((format!("sw{i}"), format!("sw{}", i + 1)));
                }
                let mut stations = Vec::new();
                for i in 1..=switches {
                    for j in 0..rng.gen_range(1..=2usize) {
                        let name = format!("es{i}{j}");
                        edges.push((name.clone(), format!("sw{i}")));
                        stations.push(name);
                    }
                }
                if stations.len() < 2 {
                    let name = "esx".to_string();
                    edges.push((name.clone(), "sw1".to_string()));
                    stations.push(name);
                }
                vertices.extend(stations.iter().cloned());
                let topo = TopologyDescription {
                    vertices: vertices.iter().map(|v| v.as_str().into()).collect(),
                    edges: edges
                        .iter()
                        .map(|(a, b)| {
                            let mut e = EdgeSpec::new(a.as_str(), b.as_str(), 1_000_000_000);
                            e.wmax = wmax;
                            e
                        })
                        .collect(),
                };
                ("line", topo, stations)
            }
            1 => {
                // star: one switch, several end stations
                let k = rng.gen_range(3..=6usize);
                let stations: Vec<String> = (1..=k).map(|i| format!("es{i}")).collect();
                let mut vertices = stations.clone();
                vertices.push("sw".to_string());
                let topo = TopologyDescription {
                    vertices: vertices.iter().map(|v| v.as_str().into()).collect(),
                    edges: stations
                        .iter()
                        .map(|s| {
                            let mut e = EdgeSpec::new(s.as_str(), "sw", 1_000_000_000);
                            e.wmax = wmax;
                            e
                        })
                        .collect(),
                };
                ("star", topo, stations)
            }
            _ => {
                let topo = fig1_topology(wmax);
                let stations = ["es1", "es2", "es3", "es4", "es5"]
                    .iter()
                    .map(|s| s.to_string())
                    .collect();
                ("fig1", topo, stations)
            }
        };

    let network = Network::build(&topo).unwrap();
    let delta = *[0, 1000].choose(&mut rng).unwrap();
    let periods = [250_000i64, 500_000, 1_000_000];
    // A third of the corpus stays single-period so the receiver-jitter
    // constraint gets exercised.
    let shared_period =
        if rng.gen_bool(0.33) { Some(*periods.choose(&mut rng).unwrap()) } else { None };

    let mut streams = Vec::new();
    for i in 0..n_streams {
        let talker = end_stations.choose(&mut rng).unwrap().clone();
        let listener = loop {
            let cand = end_stations.choose(&mut rng).unwrap().clone();
            if cand != talker {
                break cand;
            }
        };
        let r = route(&network, &talker.as_str().into(), &listener.as_str().into()).unwrap();
        let period = shared_period.unwrap_or_else(|| *periods.choose(&mut rng).unwrap());
        let size = rng.gen_range(64..=1500u32);
        let tmp = Stream::new(format!("s{i}"), r.clone(), i64::MAX / 4, 0, size, period).unwrap();
        let floor = e2e_floor(&tmp, &network, delta).unwrap();
        let e2e = if rng.gen_bool(0.9) {
            floor * 2 + (n_streams as i64) * 30_000
        } else {
            floor + rng.gen_range(0..5_000)
        };
        let max_l = network
            .links()
            .map(|l| l.frame_duration(size))
            .max()
            .unwrap();
        let jitter = if rng.gen_bool(0.7) { period } else { max_l * rng.gen_range(1..=3) };
        streams.push(Stream::new(format!("s{i}"), r, e2e, jitter, size, period).unwrap());
    }

    let multi_period = {
        let first = streams[0].period;
        streams.iter().any(|s| s.period != first)
    };

    // Windows carrying repetition j are confined to the j-th period slot,
    // so a port needs at least one window per slot of its fastest stream.
    // Bump the budget for mixed-period instances to keep them meaningful.
    let network = if multi_period && wmax.is_some() {
        let hp = streams.iter().map(|s| s.period).fold(1i64, num_integer::lcm);
        let min_period = streams.iter().map(|s| s.period).min().unwrap();
        let needed = (hp / min_period) as u32 + rng.gen_range(0..=1);
        let mut bumped = topo;
        for edge in &mut bumped.edges {
            edge.wmax = Some(needed.max(edge.wmax.unwrap_or(needed)));
        }
        Network::build(&bumped).unwrap()
    } else {
        network
    };

    GenInstance {
        network,
        streams,
        delta,
        multi_period,
        seed,
        label: format!("{label}-{seed}"),
    }
}

/// Tiny instance inside the brute-force oracle's bounds. Links run at
/// 8 Gbit/s with zero overhead so one byte is exactly one nanosecond of
/// wire time; periods are 8..32 ns.
pub struct TinyInstance {
    pub network: Network,
    pub streams: Vec<Stream>,
    pub delta: Nanos,
    pub multi_period: bool,
}

pub fn random_tiny_instance(seed: u64) -> TinyInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7111_7111);
    let wmax = Some(rng.gen_range(1..=2u32));
    let shape = rng.gen_range(0..4u8);
    let edge = |a: &str, b: &str| {
        let mut e = EdgeSpec::new(a, b, 8_000_000_000).with_overhead(0);
        e.wmax = wmax;
        e
    };
    let (topo, routes): (TopologyDescription, Vec<Vec<&str>>) = match shape {
        0 => (
            TopologyDescription {
                vertices: vec!["a".into(), "b".into()],
                edges: vec![edge("a", "b")],
            },
            vec![vec!["a", "b"], vec!["a", "b"], vec!["a", "b"]],
        ),
        1 => (
            TopologyDescription {
                vertices: vec!["a".into(), "b".into(), "c".into()],
                edges: vec![edge("a", "b"), edge("b", "c")],
            },
            vec![vec!["a", "b", "c"], vec!["b", "c"]],
        ),
        2 => (
            TopologyDescription {
                vertices: vec!["a".into(), "b".into(), "c".into(), "d".into()],
                edges: vec![edge("a", "b"), edge("b", "c"), edge("c", "d")],
            },
            vec![vec!["a", "b", "c", "d"]],
        ),
        _ => (
            // two talkers into one listener through a switch
            TopologyDescription {
                vertices: vec!["t1".into(), "t2".into(), "sw".into(), "l".into()],
                edges: vec![edge("t1", "sw"), edge("t2", "sw"), edge("sw", "l")],
            },
            vec![vec!["t1", "sw", "l"], vec!["t2", "sw", "l"]],
        ),
    };
    let network = Network::build(&topo).unwrap();
    let delta = rng.gen_range(0..=2i64);
    let n_streams = rng.gen_range(1..=routes.len());
    let mix_periods = rng.gen_bool(0.3);

    let mut streams = Vec::new();
    for (i, path) in routes.iter().take(n_streams).enumerate() {
        let size = rng.gen_range(2..=4u32);
        let period: Nanos =
            if mix_periods { *[16, 32].choose(&mut rng).unwrap() } else { 16 };
        let hops = (path.len() - 1) as i64;
        let l = size as i64;
        // Mix of clearly feasible, borderline and infeasible bounds.
        let min_e2e = hops * l + (hops - 1).max(0) * delta + l + delta;
        let e2e = (min_e2e + rng.gen_range(-3..=6i64)).max(1);
        let jitter = *[0, 1, 2, 16].choose(&mut rng).unwrap();
        streams.push(
            Stream::along(format!("s{i}"), path, e2e, jitter, size, period).unwrap(),
        );
    }
    let multi_period = streams.iter().any(|s| s.period != streams[0].period);
    TinyInstance { network, streams, delta, multi_period }
}

pub fn solve(
    instance_net: &Network,
    streams: &[Stream],
    cfg: &EncoderConfig,
) -> SynthesisReport {
    synthesize(instance_net, streams, cfg, &solver_config()).expect("pipeline runs")
}

pub fn mode_grid() -> [(OrderingMode, ArithmeticMode); 4] {
    [
        (OrderingMode::Sequential, ArithmeticMode::Linearized),
        (OrderingMode::Sequential, ArithmeticMode::Nonlinear),
        (OrderingMode::Pairwise, ArithmeticMode::Linearized),
        (OrderingMode::Pairwise, ArithmeticMode::Nonlinear),
    ]
}

pub fn objective_config(
    delta: Nanos,
    arithmetic: ArithmeticMode,
    objective: ObjectiveKind,
) -> EncoderConfig {
    EncoderConfig {
        delta,
        arithmetic,
        objective,
        ..EncoderConfig::default()
    }
}
