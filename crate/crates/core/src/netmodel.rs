//! Network, stream, frame and window-plan model for 802.1Qbv window scheduling.
//!
//! Vertices are end stations or switches; every undirected edge of the input
//! topology becomes two directed links, each with its own egress port, link
//! speed and window budget. Streams are periodic unicast flows routed along
//! directed links; unrolling them over each link's hyperperiod yields the
//! frame instances the scheduler places into gate windows.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_integer::Integer;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// All times are integer nanoseconds.
pub type Nanos = i64;

pub const NANOS_PER_SEC: u64 = 1_000_000_000;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VertexId(String);

impl VertexId {
    pub fn new(name: impl Into<String>) -> Self {
        VertexId(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for VertexId {
    fn from(s: &str) -> Self {
        VertexId::new(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StreamId(String);

impl StreamId {
    pub fn new(name: impl Into<String>) -> Self {
        StreamId(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for StreamId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for StreamId {
    fn from(s: &str) -> Self {
        StreamId::new(s)
    }
}

impl From<String> for StreamId {
    fn from(s: String) -> Self {
        StreamId(s)
    }
}

/// A directed link, identified by its endpoints.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LinkId {
    pub src: VertexId,
    pub dst: VertexId,
}

impl LinkId {
    pub fn new(src: impl Into<VertexId>, dst: impl Into<VertexId>) -> Self {
        LinkId { src: src.into(), dst: dst.into() }
    }

    pub fn reversed(&self) -> LinkId {
        LinkId { src: self.dst.clone(), dst: self.src.clone() }
    }
}

impl From<(&str, &str)> for LinkId {
    fn from((a, b): (&str, &str)) -> Self {
        LinkId::new(a, b)
    }
}

impl fmt::Display for LinkId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}->{}", self.src, self.dst)
    }
}

/// Directed link with egress-port parameters.
///
/// `wmax` is the window budget for the egress port; `None` defers to the
/// default (one window per frame instance routed through the link).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Link {
    pub id: LinkId,
    pub speed_bps: u64,
    pub overhead_bytes: u32,
    pub wmax: Option<u32>,
}

/// Wire overhead added to every frame: preamble + SFD (8) and IFG (12).
pub const DEFAULT_OVERHEAD_BYTES: u32 = 20;

impl Link {
    /// Wire-time of one frame of `size_bytes` payload on this link,
    /// rounded up to whole nanoseconds.
    pub fn frame_duration(&self, size_bytes: u32) -> Nanos {
        let bits = (size_bytes as u128 + self.overhead_bytes as u128) * 8;
        let num = bits * NANOS_PER_SEC as u128;
        num.div_ceil(self.speed_bps as u128) as Nanos
    }
}

/// Input description of an undirected edge.
#[derive(Debug, Clone)]
pub struct EdgeSpec {
    pub a: VertexId,
    pub b: VertexId,
    pub speed_bps: u64,
    pub wmax: Option<u32>,
    pub overhead_bytes: Option<u32>,
}

impl EdgeSpec {
    pub fn new(a: impl Into<VertexId>, b: impl Into<VertexId>, speed_bps: u64) -> Self {
        EdgeSpec { a: a.into(), b: b.into(), speed_bps, wmax: None, overhead_bytes: None }
    }

    pub fn with_wmax(mut self, wmax: u32) -> Self {
        self.wmax = Some(wmax);
        self
    }

    pub fn with_overhead(mut self, bytes: u32) -> Self {
        self.overhead_bytes = Some(bytes);
        self
    }
}

/// Input description of the whole topology.
#[derive(Debug, Clone, Default)]
pub struct TopologyDescription {
    pub vertices: Vec<VertexId>,
    pub edges: Vec<EdgeSpec>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("edge references unknown vertex `{0}`")]
    UnknownVertex(VertexId),
    #[error("duplicate edge between `{0}` and `{1}`")]
    DuplicateEdge(VertexId, VertexId),
    #[error("edge between `{0}` and `{1}` has non-positive speed")]
    NonPositiveSpeed(VertexId, VertexId),
    #[error("self-edge at vertex `{0}`")]
    SelfEdge(VertexId),
    #[error("window budget on edge between `{0}` and `{1}` must be >= 1")]
    ZeroWindowBudget(VertexId, VertexId),
    #[error("stream `{0}`: {1}")]
    InvalidStream(StreamId, String),
    #[error("stream `{stream}` routes over link `{link}` missing from the graph")]
    RouteLinkMissing { stream: StreamId, link: LinkId },
    #[error("hyperperiod of an empty frame set is undefined")]
    EmptyFrameSet,
    #[error("non-positive period {0}")]
    NonPositivePeriod(Nanos),
}

/// Directed-link graph built from an undirected topology description.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Network {
    vertices: BTreeSet<VertexId>,
    links: BTreeMap<LinkId, Link>,
}

impl Network {
    /// Builds the graph: every undirected edge yields two directed links.
    pub fn build(topo: &TopologyDescription) -> Result<Network, ModelError> {
        let vertices: BTreeSet<VertexId> = topo.vertices.iter().cloned().collect();
        let mut links = BTreeMap::new();
        let mut seen = BTreeSet::new();
        for edge in &topo.edges {
            if edge.a == edge.b {
                return Err(ModelError::SelfEdge(edge.a.clone()));
            }
            for v in [&edge.a, &edge.b] {
                if !vertices.contains(v) {
                    return Err(ModelError::UnknownVertex(v.clone()));
                }
            }
            if edge.speed_bps == 0 {
                return Err(ModelError::NonPositiveSpeed(edge.a.clone(), edge.b.clone()));
            }
            if edge.wmax == Some(0) {
                return Err(ModelError::ZeroWindowBudget(edge.a.clone(), edge.b.clone()));
            }
            let key = if edge.a <= edge.b {
                (edge.a.clone(), edge.b.clone())
            } else {
                (edge.b.clone(), edge.a.clone())
            };
            if !seen.insert(key) {
                return Err(ModelError::DuplicateEdge(edge.a.clone(), edge.b.clone()));
            }
            let overhead = edge.overhead_bytes.unwrap_or(DEFAULT_OVERHEAD_BYTES);
            for id in [LinkId::new(edge.a.clone(), edge.b.clone()), LinkId::new(edge.b.clone(), edge.a.clone())]
            {
                let link = Link {
                    id: id.clone(),
                    speed_bps: edge.speed_bps,
                    overhead_bytes: overhead,
                    wmax: edge.wmax,
                };
                links.insert(id, link);
            }
        }
        Ok(Network { vertices, links })
    }

    pub fn link(&self, id: &LinkId) -> Option<&Link> {
        self.links.get(id)
    }

    pub fn links(&self) -> impl Iterator<Item = &Link> {
        self.links.values()
    }

    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    pub fn vertices(&self) -> impl Iterator<Item = &VertexId> {
        self.vertices.iter()
    }

    pub fn contains_vertex(&self, v: &VertexId) -> bool {
        self.vertices.contains(v)
    }
}

/// Periodic unicast flow over a fixed route of directed links.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stream {
    pub id: StreamId,
    /// Talker-first list of directed links.
    pub route: Vec<LinkId>,
    /// Maximum allowed end-to-end latency.
    pub e2e: Nanos,
    /// Maximum allowed receiver jitter.
    pub jitter: Nanos,
    /// Frame size in bytes (full Ethernet frame).
    pub size_bytes: u32,
    pub period: Nanos,
}

impl Stream {
    pub fn new(
        id: impl Into<StreamId>,
        route: Vec<LinkId>,
        e2e: Nanos,
        jitter: Nanos,
        size_bytes: u32,
        period: Nanos,
    ) -> Result<Stream, ModelError> {
        let id = id.into();
        let err = |msg: &str| Err(ModelError::InvalidStream(id.clone(), msg.to_string()));
        if route.is_empty() {
            return err("route must contain at least one link");
        }
        let mut visited = BTreeSet::new();
        visited.insert(route[0].src.clone());
        for (i, link) in route.iter().enumerate() {
            if link.src == link.dst {
                return err("route contains a self-link");
            }
            if i > 0 && route[i - 1].dst != link.src {
                return err("route links are not connected");
            }
            if !visited.insert(link.dst.clone()) {
                return err("route revisits a vertex");
            }
        }
        if period <= 0 {
            return err("period must be positive");
        }
        if size_bytes == 0 {
            return err("size must be positive");
        }
        if e2e <= 0 {
            return err("e2e bound must be positive");
        }
        if jitter < 0 {
            return err("jitter bound must be non-negative");
        }
        Ok(Stream { id, route, e2e, jitter, size_bytes, period })
    }

    /// Convenience constructor from a talker-first vertex path.
    pub fn along(
        id: impl Into<StreamId>,
        path: &[&str],
        e2e: Nanos,
        jitter: Nanos,
        size_bytes: u32,
        period: Nanos,
    ) -> Result<Stream, ModelError> {
        let route = path.windows(2).map(|w| LinkId::new(w[0], w[1])).collect();
        Stream::new(id, route, e2e, jitter, size_bytes, period)
    }

    pub fn talker(&self) -> &VertexId {
        &self.route[0].src
    }

    pub fn listener(&self) -> &VertexId {
        &self.route[self.route.len() - 1].dst
    }

    pub fn first_link(&self) -> &LinkId {
        &self.route[0]
    }

    pub fn last_link(&self) -> &LinkId {
        &self.route[self.route.len() - 1]
    }

    /// Index of `link` within the route, if the stream crosses it.
    pub fn hop_of(&self, link: &LinkId) -> Option<usize> {
        self.route.iter().position(|l| l == link)
    }
}

/// Identity of one periodic repetition of a stream's frame on one link.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FrameKey {
    pub stream: StreamId,
    pub link: LinkId,
    pub repetition: u32,
}

/// One transmission unit to be assigned to a window.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameInstance {
    pub key: FrameKey,
    /// Wire-time of the frame on this link.
    pub duration: Nanos,
    /// Period inherited from the owning stream.
    pub period: Nanos,
}

impl FrameInstance {
    pub fn stream(&self) -> &StreamId {
        &self.key.stream
    }

    pub fn link(&self) -> &LinkId {
        &self.key.link
    }

    pub fn repetition(&self) -> u32 {
        self.key.repetition
    }
}

/// Least common multiple of the given periods.
pub fn hyperperiod<I>(periods: I) -> Result<Nanos, ModelError>
where
    I: IntoIterator<Item = Nanos>,
{
    let mut acc: Option<Nanos> = None;
    for p in periods {
        if p <= 0 {
            return Err(ModelError::NonPositivePeriod(p));
        }
        acc = Some(match acc {
            None => p,
            Some(a) => a.lcm(&p),
        });
    }
    acc.ok_or(ModelError::EmptyFrameSet)
}

/// Hyperperiod of a set of frame instances.
pub fn hyperperiod_of_frames<'a, I>(frames: I) -> Result<Nanos, ModelError>
where
    I: IntoIterator<Item = &'a FrameInstance>,
{
    hyperperiod(frames.into_iter().map(|f| f.period))
}

/// Unrolls streams into frame instances: on each route link, a stream with
/// period T contributes hp_link / T instances, one per period slot of that
/// link's hyperperiod.
pub fn unroll_streams(
    streams: &[Stream],
    network: &Network,
) -> Result<Vec<FrameInstance>, ModelError> {
    // Period mix per link decides each link's hyperperiod.
    let mut periods: BTreeMap<&LinkId, Vec<Nanos>> = BTreeMap::new();
    for stream in streams {
        for link in &stream.route {
            if network.link(link).is_none() {
                return Err(ModelError::RouteLinkMissing {
                    stream: stream.id.clone(),
                    link: link.clone(),
                });
            }
            periods.entry(link).or_default().push(stream.period);
        }
    }
    let mut hp_by_link: BTreeMap<&LinkId, Nanos> = BTreeMap::new();
    for (link, ps) in &periods {
        hp_by_link.insert(link, hyperperiod(ps.iter().copied())?);
    }
    let mut frames = Vec::new();
    for stream in streams {
        for link_id in &stream.route {
            let link = network.link(link_id).expect("checked above");
            let hp = hp_by_link[link_id];
            let reps = hp / stream.period;
            let duration = link.frame_duration(stream.size_bytes);
            for j in 0..reps {
                frames.push(FrameInstance {
                    key: FrameKey {
                        stream: stream.id.clone(),
                        link: link_id.clone(),
                        repetition: j as u32,
                    },
                    duration,
                    period: stream.period,
                });
            }
        }
    }
    Ok(frames)
}

/// Per-egress-port plan: window budget, hyperperiod and the frame instances
/// competing for this port. Only links that carry at least one frame get a
/// port model (a frameless port has no well-defined hyperperiod and an empty
/// gate control list).
#[derive(Debug, Clone)]
pub struct PortModel {
    pub link: Link,
    pub wmax: u32,
    pub hyperperiod: Nanos,
    pub frames: Vec<FrameInstance>,
}

impl PortModel {
    pub fn frame(&self, key: &FrameKey) -> Option<&FrameInstance> {
        self.frames.iter().find(|f| &f.key == key)
    }
}

/// Groups unrolled frames by link and resolves window budgets.
pub fn build_port_models(
    network: &Network,
    streams: &[Stream],
) -> Result<BTreeMap<LinkId, PortModel>, ModelError> {
    let frames = unroll_streams(streams, network)?;
    let mut by_link: BTreeMap<LinkId, Vec<FrameInstance>> = BTreeMap::new();
    for frame in frames {
        by_link.entry(frame.key.link.clone()).or_default().push(frame);
    }
    let mut ports = BTreeMap::new();
    for (link_id, mut frames) in by_link {
        frames.sort_by(|a, b| a.key.cmp(&b.key));
        let link = network.link(&link_id).expect("frames only unroll over graph links");
        let hp = hyperperiod_of_frames(frames.iter())?;
        let wmax = link.wmax.unwrap_or(frames.len() as u32);
        ports.insert(
            link_id,
            PortModel { link: link.clone(), wmax, hyperperiod: hp, frames },
        );
    }
    Ok(ports)
}

/// Lower bound on the end-to-end latency term used by the e2e constraint:
/// the frame must traverse every hop in sequence and the constraint itself
/// reserves the last-hop transmission time and precision once more.
pub fn e2e_floor(stream: &Stream, network: &Network, delta: Nanos) -> Option<Nanos> {
    let mut acc: Nanos = 0;
    for link_id in &stream.route {
        let link = network.link(link_id)?;
        acc += link.frame_duration(stream.size_bytes);
    }
    let last = network.link(stream.last_link())?;
    let hops = stream.route.len() as Nanos;
    Some(acc + (hops - 1) * delta + last.frame_duration(stream.size_bytes) + delta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn two_node_topo() -> TopologyDescription {
        TopologyDescription {
            vertices: vec!["a".into(), "b".into()],
            edges: vec![EdgeSpec::new("a", "b", 1_000_000_000)],
        }
    }

    /// Tree used across the test suite: three switches in a line, five end
    /// stations. Eight vertices, seven undirected edges, fourteen links.
    pub(crate) fn example_topology() -> TopologyDescription {
        let vertices = ["es1", "es2", "es3", "es4", "es5", "sw1", "sw2", "sw3"];
        TopologyDescription {
            vertices: vertices.iter().map(|v| VertexId::new(*v)).collect(),
            edges: vec![
                EdgeSpec::new("es1", "sw1", 1_000_000_000),
                EdgeSpec::new("es2", "sw1", 1_000_000_000),
                EdgeSpec::new("sw1", "sw2", 1_000_000_000),
                EdgeSpec::new("es3", "sw2", 1_000_000_000),
                EdgeSpec::new("sw2", "sw3", 1_000_000_000),
                EdgeSpec::new("es4", "sw3", 1_000_000_000),
                EdgeSpec::new("es5", "sw3", 1_000_000_000),
            ],
        }
    }

    #[test]
    fn undirected_edge_yields_two_links() {
        let net = Network::build(&two_node_topo()).unwrap();
        assert_eq!(net.link_count(), 2);
        assert!(net.link(&LinkId::new("a", "b")).is_some());
        assert!(net.link(&LinkId::new("b", "a")).is_some());
    }

    #[test]
    fn seven_edges_yield_fourteen_links() {
        let net = Network::build(&example_topology()).unwrap();
        assert_eq!(net.link_count(), 14);
    }

    #[test]
    fn unknown_vertex_rejected() {
        let mut topo = two_node_topo();
        topo.edges.push(EdgeSpec::new("a", "c", 1_000_000_000));
        assert_eq!(
            Network::build(&topo),
            Err(ModelError::UnknownVertex("c".into()))
        );
    }

    #[test]
    fn duplicate_edge_rejected() {
        let mut topo = two_node_topo();
        topo.edges.push(EdgeSpec::new("b", "a", 1_000_000_000));
        assert!(matches!(Network::build(&topo), Err(ModelError::DuplicateEdge(_, _))));
    }

    #[test]
    fn non_positive_speed_rejected() {
        let mut topo = two_node_topo();
        topo.edges[0].speed_bps = 0;
        assert!(matches!(Network::build(&topo), Err(ModelError::NonPositiveSpeed(_, _))));
    }

    #[test]
    fn zero_window_budget_rejected() {
        let mut topo = two_node_topo();
        topo.edges[0].wmax = Some(0);
        assert!(matches!(Network::build(&topo), Err(ModelError::ZeroWindowBudget(_, _))));
    }

    #[test]
    fn frame_duration_examples() {
        let gig = |overhead| Link {
            id: LinkId::new("a", "b"),
            speed_bps: 1_000_000_000,
            overhead_bytes: overhead,
            wmax: None,
        };
        assert_eq!(gig(0).frame_duration(1500), 12_000);
        assert_eq!(gig(20).frame_duration(100), 960);
        assert_eq!(gig(0).frame_duration(1), 8);
    }

    #[test]
    fn frame_duration_rounds_up() {
        let link = Link {
            id: LinkId::new("a", "b"),
            speed_bps: 3_000_000_000,
            overhead_bytes: 0,
            wmax: None,
        };
        // 8 bits at 3 bits/ns is 2.67 ns, rounded up to 3.
        assert_eq!(link.frame_duration(1), 3);
    }

    #[test]
    fn hyperperiod_examples() {
        assert_eq!(hyperperiod([500_000]).unwrap(), 500_000);
        assert_eq!(hyperperiod([250_000, 500_000]).unwrap(), 500_000);
        assert_eq!(hyperperiod([300_000, 400_000]).unwrap(), 1_200_000);
        assert_eq!(hyperperiod([]), Err(ModelError::EmptyFrameSet));
    }

    #[test]
    fn stream_route_validation() {
        let ok = Stream::along("s1", &["a", "b", "c"], 1000, 0, 64, 1000);
        assert!(ok.is_ok());
        let disconnected = Stream::new(
            "s2",
            vec![LinkId::new("a", "b"), LinkId::new("c", "d")],
            1000,
            0,
            64,
            1000,
        );
        assert!(disconnected.is_err());
        let cycle = Stream::along("s3", &["a", "b", "a"], 1000, 0, 64, 1000);
        assert!(cycle.is_err());
        let empty = Stream::new("s4", vec![], 1000, 0, 64, 1000);
        assert!(empty.is_err());
    }

    #[test]
    fn unroll_single_period() {
        let net = Network::build(&example_topology()).unwrap();
        let s = Stream::along("s1", &["es1", "sw1", "sw2"], 100_000, 500_000, 100, 500_000)
            .unwrap();
        let frames = unroll_streams(&[s], &net).unwrap();
        assert_eq!(frames.len(), 2);
        assert!(frames.iter().all(|f| f.repetition() == 0));
    }

    #[test]
    fn unroll_mixed_periods_on_shared_link() {
        let net = Network::build(&example_topology()).unwrap();
        let fast = Stream::along("fast", &["es1", "sw1", "sw2"], 100_000, 500_000, 100, 250_000)
            .unwrap();
        let slow = Stream::along("slow", &["es2", "sw1", "sw2"], 100_000, 500_000, 100, 500_000)
            .unwrap();
        let frames = unroll_streams(&[fast, slow], &net).unwrap();
        let shared = LinkId::new("sw1", "sw2");
        let on_shared: Vec<_> = frames.iter().filter(|f| f.link() == &shared).collect();
        // fast contributes j in {0,1}, slow contributes j = 0.
        assert_eq!(on_shared.len(), 3);
        let fast_reps: Vec<u32> = on_shared
            .iter()
            .filter(|f| f.stream().as_str() == "fast")
            .map(|f| f.repetition())
            .collect();
        assert_eq!(fast_reps, vec![0, 1]);
        // On its private first hop the fast stream has a 250 us hyperperiod,
        // hence a single repetition.
        let first = LinkId::new("es1", "sw1");
        assert_eq!(frames.iter().filter(|f| f.link() == &first).count(), 1);
    }

    #[test]
    fn unroll_missing_link_rejected() {
        let net = Network::build(&two_node_topo()).unwrap();
        let s = Stream::along("s1", &["a", "b", "c"], 1000, 0, 64, 1000).unwrap();
        assert!(matches!(
            unroll_streams(&[s], &net),
            Err(ModelError::RouteLinkMissing { .. })
        ));
    }

    #[test]
    fn port_models_default_wmax_is_frame_count() {
        let net = Network::build(&example_topology()).unwrap();
        let fast = Stream::along("fast", &["es1", "sw1", "sw2"], 100_000, 500_000, 100, 250_000)
            .unwrap();
        let slow = Stream::along("slow", &["es2", "sw1", "sw2"], 100_000, 500_000, 100, 500_000)
            .unwrap();
        let ports = build_port_models(&net, &[fast, slow]).unwrap();
        let shared = &ports[&LinkId::new("sw1", "sw2")];
        assert_eq!(shared.wmax, 3);
        assert_eq!(shared.hyperperiod, 500_000);
        // Frameless links get no port model at all.
        assert_eq!(ports.len(), 3);
    }

    proptest! {
        #[test]
        fn frame_duration_monotone(size in 1u32..3000, bump in 1u32..500, speed in 1u64..10_000_000_000) {
            let link = Link { id: LinkId::new("a", "b"), speed_bps: speed, overhead_bytes: 0, wmax: None };
            prop_assert!(link.frame_duration(size + bump) >= link.frame_duration(size));
            let faster = Link { speed_bps: speed * 2, ..link.clone() };
            prop_assert!(faster.frame_duration(size) <= link.frame_duration(size));
        }

        #[test]
        fn hyperperiod_divides_common_multiples(periods in proptest::collection::vec(1i64..200, 1..6)) {
            let hp = hyperperiod(periods.iter().copied()).unwrap();
            let common: i64 = periods.iter().product();
            prop_assert_eq!(common % hp, 0);
            for p in periods {
                prop_assert_eq!(hp % p, 0);
            }
        }

        #[test]
        fn graph_links_closed_under_reversal(n_edges in 1usize..6) {
            let names: Vec<String> = (0..=n_edges).map(|i| format!("v{i}")).collect();
            let topo = TopologyDescription {
                vertices: names.iter().map(VertexId::new).collect(),
                edges: (0..n_edges)
                    .map(|i| EdgeSpec::new(names[i].as_str(), names[i + 1].as_str(), 1_000_000_000))
                    .collect(),
            };
            let net = Network::build(&topo).unwrap();
            for link in net.links() {
                prop_assert!(net.link(&link.id.reversed()).is_some());
            }
        }

        #[test]
        fn unroll_count_matches_hp_over_period(fast_t in prop::sample::select(vec![250_000i64, 500_000]),
                                               slow_t in prop::sample::select(vec![500_000i64, 1_000_000])) {
            let net = Network::build(&example_topology()).unwrap();
            let a = Stream::along("a", &["es1", "sw1", "sw2"], 100_000, 500_000, 100, fast_t).unwrap();
            let b = Stream::along("b", &["es2", "sw1", "sw2"], 100_000, 500_000, 100, slow_t).unwrap();
            let frames = unroll_streams(&[a, b], &net).unwrap();
            let shared = LinkId::new("sw1", "sw2");
            let hp = hyperperiod([fast_t, slow_t]).unwrap();
            let expected = hp / fast_t + hp / slow_t;
            let got = frames.iter().filter(|f| f.link() == &shared).count() as i64;
            prop_assert_eq!(got, expected);
        }
    }
}
