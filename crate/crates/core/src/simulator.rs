//! Discrete-event simulation of 802.1Qbv egress ports running gate control
//! lists: periodic frame injection, FIFO queues, gates opening and closing
//! per schedule, static per-node clock offsets and frame-loss injection.
//!
//! A frame at the head of a queue starts transmitting when its gate is open
//! and the remaining open interval covers its whole duration; there is no
//! preemption and no spillover past a gate close.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, VecDeque};

use num_integer::Integer;
use rand::{Rng, SeedableRng};
use serde::Serialize;
use thiserror::Error;

use crate::netmodel::{
    build_port_models, FrameKey, LinkId, ModelError, Nanos, Network, Stream, StreamId, VertexId,
};
use crate::schedule::{Schedule, Window};

/// A single injected frame loss: the repetition-r frame of a stream never
/// reaches the queue of the given hop (0 = never leaves the talker).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct LossSpec {
    pub stream: StreamId,
    /// Global injection index within the simulated horizon.
    pub repetition: u32,
    pub hop: u32,
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    /// Horizon in global hyperperiods.
    pub duration_hyperperiods: u32,
    /// Static per-node clock offsets; missing nodes read as 0.
    pub offsets: BTreeMap<VertexId, Nanos>,
    /// Precision bound the offsets must respect (max pairwise spread).
    pub delta: Nanos,
    pub losses: BTreeSet<LossSpec>,
    pub seed: u64,
}

impl SimConfig {
    pub fn new(duration_hyperperiods: u32) -> Self {
        SimConfig {
            duration_hyperperiods,
            offsets: BTreeMap::new(),
            delta: 0,
            losses: BTreeSet::new(),
            seed: 0,
        }
    }

    pub fn with_losses(mut self, losses: impl IntoIterator<Item = LossSpec>) -> Self {
        self.losses = losses.into_iter().collect();
        self
    }

    pub fn with_offsets(mut self, offsets: BTreeMap<VertexId, Nanos>, delta: Nanos) -> Self {
        self.offsets = offsets;
        self.delta = delta;
        self
    }
}

/// Deterministic per-node offsets in [-delta/2, +delta/2].
pub fn offsets_from_seed<'a, I>(vertices: I, delta: Nanos, seed: u64) -> BTreeMap<VertexId, Nanos>
where
    I: IntoIterator<Item = &'a VertexId>,
{
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let half = delta / 2;
    vertices
        .into_iter()
        .map(|v| {
            let offset = if half == 0 { 0 } else { rng.gen_range(-half..=half) };
            (v.clone(), offset)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Enqueue,
    Select,
    TxStart,
    TxEnd,
    Deliver,
    Drop,
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceEvent {
    /// True (offset-free) time.
    pub time: Nanos,
    pub kind: EventKind,
    pub stream: StreamId,
    pub repetition: u32,
    pub hop: u32,
    pub link: LinkId,
}

/// One completed transmission and the window occurrence that carried it.
#[derive(Debug, Clone, Serialize)]
pub struct WindowUse {
    pub stream: StreamId,
    pub repetition: u32,
    pub hop: u32,
    pub link: LinkId,
    pub window: u32,
    /// Which repetition of the port's gate cycle the transmission used.
    pub cycle: i64,
    pub expected_window: u32,
    pub expected_cycle: i64,
    /// Start/end in the port's local schedule time.
    pub start_local: Nanos,
    pub end_local: Nanos,
    pub in_assigned_window: bool,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct StreamStats {
    /// Observed end-to-end latency per delivered repetition: delivery minus
    /// the first-hop gate-open the frame was released at.
    pub observed_e2e: BTreeMap<u32, Nanos>,
    /// Max spread of delivery times relative to their period start, in the
    /// listener's clock.
    pub receiver_jitter: Nanos,
    pub delivered: u32,
    pub max_e2e: Nanos,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimTrace {
    pub events: Vec<TraceEvent>,
    pub window_uses: Vec<WindowUse>,
    pub streams: BTreeMap<StreamId, StreamStats>,
    /// Frames that transmitted outside their assigned window occurrence, or
    /// could not be serviced at all.
    pub conformance_errors: Vec<String>,
}

impl SimTrace {
    /// One JSON object per line, one line per event.
    pub fn events_jsonl(&self) -> String {
        let mut out = String::new();
        for event in &self.events {
            out.push_str(&serde_json::to_string(event).expect("trace events serialize"));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("invalid schedule for simulation: {0}")]
    BadSchedule(String),
    #[error("clock offsets spread {0} exceeds the precision bound {1}")]
    OffsetSpread(Nanos, Nanos),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Payload {
    // Order matters: arrivals before transmit-ends before service retries.
    Enqueue { stream: usize, repetition: u32, hop: u32 },
    TxEnd { link: usize, stream: usize, repetition: u32, hop: u32 },
    TryService { link: usize },
}

fn payload_rank(p: &Payload) -> u8 {
    match p {
        Payload::Enqueue { .. } => 0,
        Payload::TxEnd { .. } => 1,
        Payload::TryService { .. } => 2,
    }
}

struct SimPort {
    link: LinkId,
    hyperperiod: Nanos,
    /// Windows sorted by open time.
    windows: Vec<Window>,
    /// Offset of the sourcing node's clock.
    offset: Nanos,
    queue: VecDeque<(usize, u32, u32)>,
    busy: bool,
    max_window_size: Nanos,
}

impl SimPort {
    /// Earliest local time >= `from` at which a frame of length `len` fits
    /// inside a window occurrence. Returns (start, window index, cycle).
    fn next_fit(&self, from: Nanos, len: Nanos) -> Option<(Nanos, u32, i64)> {
        if self.max_window_size < len {
            return None;
        }
        let mut cycle = from.div_euclid(self.hyperperiod);
        loop {
            for w in &self.windows {
                let occ_open = w.open + cycle * self.hyperperiod;
                let occ_close = w.close + cycle * self.hyperperiod;
                let start = occ_open.max(from);
                if occ_close - start >= len {
                    return Some((start, w.index, cycle));
                }
            }
            cycle += 1;
            // One full extra cycle is always enough to find a fitting window.
            if cycle > from.div_euclid(self.hyperperiod) + 2 {
                return None;
            }
        }
    }
}

struct Sim<'a> {
    streams: &'a [Stream],
    schedule: &'a Schedule,
    config: &'a SimConfig,
    ports: Vec<SimPort>,
    port_index: BTreeMap<LinkId, usize>,
    /// duration of stream s on hop h
    durations: Vec<Vec<Nanos>>,
    /// reps of stream s on hop h per that port's hyperperiod
    reps: Vec<Vec<i64>>,
    events: BinaryHeap<Reverse<(Nanos, u8, u64, Payload)>>,
    seq: u64,
    trace: SimTrace,
    inject_time: BTreeMap<(usize, u32), Nanos>,
    deliveries: BTreeMap<usize, Vec<(u32, Nanos)>>,
}

/// Runs the event-driven gate simulation of a schedule.
pub fn simulate(
    network: &Network,
    streams: &[Stream],
    schedule: &Schedule,
    config: &SimConfig,
) -> Result<SimTrace, SimError> {
    let models = build_port_models(network, streams)?;

    if !config.offsets.is_empty() {
        let min = config.offsets.values().min().copied().unwrap_or(0).min(0);
        let max = config.offsets.values().max().copied().unwrap_or(0).max(0);
        if max - min > config.delta {
            return Err(SimError::OffsetSpread(max - min, config.delta));
        }
    }

    // Reject structurally unusable schedules before simulating.
    let mut ports = Vec::new();
    let mut port_index = BTreeMap::new();
    for (link, model) in &models {
        let sched = schedule
            .port(link)
            .ok_or_else(|| SimError::BadSchedule(format!("no port schedule for `{link}`")))?;
        if sched.hyperperiod != model.hyperperiod {
            return Err(SimError::BadSchedule(format!(
                "port `{link}` hyperperiod {} does not match the stream set ({})",
                sched.hyperperiod, model.hyperperiod
            )));
        }
        let mut windows = sched.windows.clone();
        windows.sort_by_key(|w| (w.open, w.index));
        for pair in windows.windows(2) {
            if pair[0].open.max(pair[1].open) < pair[0].close.min(pair[1].close) {
                return Err(SimError::BadSchedule(format!(
                    "windows {} and {} overlap on `{link}`",
                    pair[0].index, pair[1].index
                )));
            }
        }
        for frame in &model.frames {
            if schedule.assigned_window(&frame.key).is_none() {
                return Err(SimError::BadSchedule(format!(
                    "frame {:?} has no assigned window",
                    frame.key
                )));
            }
        }
        let offset = config.offsets.get(&link.src).copied().unwrap_or(0);
        let max_window_size = windows.iter().map(Window::size).max().unwrap_or(0);
        port_index.insert(link.clone(), ports.len());
        ports.push(SimPort {
            link: link.clone(),
            hyperperiod: sched.hyperperiod,
            windows,
            offset,
            queue: VecDeque::new(),
            busy: false,
            max_window_size,
        });
    }

    let durations: Vec<Vec<Nanos>> = streams
        .iter()
        .map(|s| {
            s.route
                .iter()
                .map(|l| models[l].frame(&FrameKey {
                    stream: s.id.clone(),
                    link: l.clone(),
                    repetition: 0,
                })
                .map(|f| f.duration)
                .unwrap_or(0))
                .collect()
        })
        .collect();
    let reps: Vec<Vec<i64>> = streams
        .iter()
        .map(|s| s.route.iter().map(|l| models[l].hyperperiod / s.period).collect())
        .collect();

    let mut sim = Sim {
        streams,
        schedule,
        config,
        ports,
        port_index,
        durations,
        reps,
        events: BinaryHeap::new(),
        seq: 0,
        trace: SimTrace {
            events: Vec::new(),
            window_uses: Vec::new(),
            streams: BTreeMap::new(),
            conformance_errors: Vec::new(),
        },
        inject_time: BTreeMap::new(),
        deliveries: BTreeMap::new(),
    };
    sim.run()?;
    Ok(sim.trace)
}

impl<'a> Sim<'a> {
    fn push(&mut self, time: Nanos, payload: Payload) {
        self.seq += 1;
        self.events.push(Reverse((time, payload_rank(&payload), self.seq, payload)));
    }

    fn record(&mut self, time: Nanos, kind: EventKind, stream: usize, repetition: u32, hop: u32) {
        let s = &self.streams[stream];
        self.trace.events.push(TraceEvent {
            time,
            kind,
            stream: s.id.clone(),
            repetition,
            hop,
            link: s.route[hop as usize].clone(),
        });
    }

    fn is_lost(&self, stream: usize, repetition: u32, hop: u32) -> bool {
        self.config.losses.contains(&LossSpec {
            stream: self.streams[stream].id.clone(),
            repetition,
            hop,
        })
    }

    /// Talker release time for a repetition: the true time of its assigned
    /// first-hop window open. The talker times its own queue, so frames are
    /// handed over exactly at the window; periodic availability at r*T is
    /// always earlier (the window lies inside the repetition's period slot).
    fn injection(&self, stream: usize, repetition: u32) -> Result<Nanos, SimError> {
        let s = &self.streams[stream];
        let port = &self.ports[self.port_index[&s.route[0]]];
        let reps = self.reps[stream][0];
        let rep_on_link = (repetition as i64).rem_euclid(reps) as u32;
        let cycle = (repetition as i64).div_euclid(reps);
        let key = FrameKey { stream: s.id.clone(), link: s.route[0].clone(), repetition: rep_on_link };
        let window = self
            .schedule
            .assigned_window(&key)
            .ok_or_else(|| SimError::BadSchedule(format!("frame {key:?} unassigned")))?;
        Ok(window.open + cycle * port.hyperperiod - port.offset)
    }

    fn run(&mut self) -> Result<(), SimError> {
        // Global horizon: all ports cycle back in phase every lcm.
        let hp_global = self
            .ports
            .iter()
            .map(|p| p.hyperperiod)
            .fold(1i64, |acc, hp| acc.lcm(&hp));
        for (idx, stream) in self.streams.iter().enumerate() {
            let total = self.config.duration_hyperperiods as i64 * hp_global / stream.period;
            for r in 0..total {
                let r = r as u32;
                if self.is_lost(idx, r, 0) {
                    let t = self.injection(idx, r)?;
                    self.inject_time.insert((idx, r), t);
                    self.record(t, EventKind::Drop, idx, r, 0);
                    continue;
                }
                let t = self.injection(idx, r)?;
                self.inject_time.insert((idx, r), t);
                self.push(t, Payload::Enqueue { stream: idx, repetition: r, hop: 0 });
            }
        }

        while let Some(Reverse((time, _, _, payload))) = self.events.pop() {
            match payload {
                Payload::Enqueue { stream, repetition, hop } => {
                    self.record(time, EventKind::Enqueue, stream, repetition, hop);
                    let link = &self.streams[stream].route[hop as usize];
                    let port_idx = self.port_index[link];
                    self.ports[port_idx].queue.push_back((stream, repetition, hop));
                    self.push(time, Payload::TryService { link: port_idx });
                }
                Payload::TryService { link } => {
                    self.try_service(link, time);
                }
                Payload::TxEnd { link, stream, repetition, hop } => {
                    self.record(time, EventKind::TxEnd, stream, repetition, hop);
                    self.ports[link].busy = false;
                    let route_len = self.streams[stream].route.len() as u32;
                    if hop + 1 < route_len {
                        let next_hop = hop + 1;
                        if self.is_lost(stream, repetition, next_hop) {
                            self.record(time, EventKind::Drop, stream, repetition, next_hop);
                        } else {
                            self.push(
                                time,
                                Payload::Enqueue { stream, repetition, hop: next_hop },
                            );
                        }
                    } else {
                        self.record(time, EventKind::Deliver, stream, repetition, hop);
                        self.deliveries.entry(stream).or_default().push((repetition, time));
                    }
                    self.push(time, Payload::TryService { link });
                }
            }
        }

        self.finish_stats();
        Ok(())
    }

    fn try_service(&mut self, port_idx: usize, now: Nanos) {
        if self.ports[port_idx].busy {
            return;
        }
        let Some(&(stream, repetition, hop)) = self.ports[port_idx].queue.front() else {
            return;
        };
        let len = self.durations[stream][hop as usize];
        let offset = self.ports[port_idx].offset;
        let now_local = now + offset;
        let Some((start_local, window, cycle)) = self.ports[port_idx].next_fit(now_local, len)
        else {
            // No window on this port can ever carry the frame.
            self.ports[port_idx].queue.pop_front();
            self.trace.conformance_errors.push(format!(
                "stream {} repetition {repetition} hop {hop}: no window fits a {len} ns frame on {}",
                self.streams[stream].id, self.ports[port_idx].link
            ));
            self.record(now, EventKind::Drop, stream, repetition, hop);
            self.push(now, Payload::TryService { link: port_idx });
            return;
        };
        if start_local > now_local {
            // Gate closed (or remaining interval too short): wake up again.
            self.push(start_local - offset, Payload::TryService { link: port_idx });
            return;
        }

        self.ports[port_idx].queue.pop_front();
        self.ports[port_idx].busy = true;
        self.record(now, EventKind::Select, stream, repetition, hop);
        self.record(now, EventKind::TxStart, stream, repetition, hop);

        let reps = self.reps[stream][hop as usize];
        let expected_cycle = (repetition as i64).div_euclid(reps);
        let key = FrameKey {
            stream: self.streams[stream].id.clone(),
            link: self.streams[stream].route[hop as usize].clone(),
            repetition: (repetition as i64).rem_euclid(reps) as u32,
        };
        let expected_window =
            self.schedule.assignment.get(&key).copied().unwrap_or(u32::MAX);
        let in_assigned = window == expected_window && cycle == expected_cycle;
        let use_record = WindowUse {
            stream: self.streams[stream].id.clone(),
            repetition,
            hop,
            link: self.ports[port_idx].link.clone(),
            window,
            cycle,
            expected_window,
            expected_cycle,
            start_local,
            end_local: start_local + len,
            in_assigned_window: in_assigned,
        };
        if !in_assigned {
            self.trace.conformance_errors.push(format!(
                "stream {} repetition {repetition} hop {hop}: transmitted in window {window} (cycle {cycle}) instead of {expected_window} (cycle {expected_cycle})",
                self.streams[stream].id
            ));
        }
        self.trace.window_uses.push(use_record);
        self.push(now + len, Payload::TxEnd { link: port_idx, stream, repetition, hop });
    }

    fn finish_stats(&mut self) {
        for (idx, stream) in self.streams.iter().enumerate() {
            let mut stats = StreamStats::default();
            let listener_offset =
                self.config.offsets.get(stream.listener()).copied().unwrap_or(0);
            let mut phases: Vec<Nanos> = Vec::new();
            if let Some(deliveries) = self.deliveries.get(&idx) {
                for &(r, t) in deliveries {
                    let e2e = t - self.inject_time[&(idx, r)];
                    stats.max_e2e = stats.max_e2e.max(e2e);
                    stats.observed_e2e.insert(r, e2e);
                    let local = t + listener_offset;
                    phases.push(local - r as i64 * stream.period);
                }
            }
            stats.delivered = phases.len() as u32;
            if phases.len() > 1 {
                stats.receiver_jitter =
                    phases.iter().max().unwrap() - phases.iter().min().unwrap();
            }
            self.trace.streams.insert(stream.id.clone(), stats);
        }
    }
}

// ---------------------------------------------------------------------------
// Isolation probe
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct WindowShift {
    pub scenario: LossSpec,
    pub stream: StreamId,
    pub repetition: u32,
    pub hop: u32,
    pub baseline: Option<(u32, i64)>,
    pub observed: Option<(u32, i64)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct IsolationReport {
    pub scenarios: usize,
    pub shifts: Vec<WindowShift>,
    pub deterministic: bool,
}

/// Replays the schedule once per single-frame-loss scenario and reports
/// whether every surviving frame keeps using its baseline window occurrence.
pub fn isolation_probe(
    network: &Network,
    streams: &[Stream],
    schedule: &Schedule,
    base_config: &SimConfig,
) -> Result<IsolationReport, SimError> {
    let mut base = base_config.clone();
    base.losses = BTreeSet::new();
    let baseline = simulate(network, streams, schedule, &base)?;
    let usage_map = |trace: &SimTrace| -> BTreeMap<(StreamId, u32, u32), (u32, i64)> {
        trace
            .window_uses
            .iter()
            .map(|u| ((u.stream.clone(), u.repetition, u.hop), (u.window, u.cycle)))
            .collect()
    };
    let base_usage = usage_map(&baseline);

    let models = build_port_models(network, streams)?;
    let hp_global = models.values().map(|m| m.hyperperiod).fold(1i64, |acc, hp| acc.lcm(&hp));

    let mut shifts = Vec::new();
    let mut scenarios = 0usize;
    for stream in streams {
        let reps_in_hp = hp_global / stream.period;
        for repetition in 0..reps_in_hp {
            for hop in 0..stream.route.len() as u32 {
                let loss = LossSpec {
                    stream: stream.id.clone(),
                    repetition: repetition as u32,
                    hop,
                };
                scenarios += 1;
                let mut cfg = base.clone();
                cfg.losses = BTreeSet::from([loss.clone()]);
                let trace = simulate(network, streams, schedule, &cfg)?;
                let usage = usage_map(&trace);

                // Surviving frames must use exactly their baseline windows.
                for (key, base_val) in &base_usage {
                    let lost_here = key.0 == loss.stream
                        && key.1 == loss.repetition
                        && key.2 >= loss.hop;
                    if lost_here {
                        continue;
                    }
                    match usage.get(key) {
                        Some(v) if v == base_val => {}
                        observed => shifts.push(WindowShift {
                            scenario: loss.clone(),
                            stream: key.0.clone(),
                            repetition: key.1,
                            hop: key.2,
                            baseline: Some(*base_val),
                            observed: observed.copied(),
                        }),
                    }
                }
                // And the loss run may not invent transmissions absent from
                // the baseline.
                for (key, val) in &usage {
                    if !base_usage.contains_key(key) {
                        shifts.push(WindowShift {
                            scenario: loss.clone(),
                            stream: key.0.clone(),
                            repetition: key.1,
                            hop: key.2,
                            baseline: None,
                            observed: Some(*val),
                        });
                    }
                }
            }
        }
    }
    Ok(IsolationReport { scenarios, deterministic: shifts.is_empty(), shifts })
}
