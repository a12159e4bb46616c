//! Independent schedule checking and a brute-force feasibility oracle.
//!
//! `check_schedule` re-evaluates every constraint family with plain integer
//! arithmetic over the concrete window times. It deliberately shares no
//! expression code with the encoder so it can serve as an oracle for
//! encoder and solver-driver defects.

use std::collections::BTreeMap;

use num_integer::Integer;
use serde::Serialize;
use thiserror::Error;

use crate::netmodel::{
    build_port_models, FrameKey, LinkId, ModelError, Nanos, Network, PortModel, Stream, StreamId,
};
use crate::schedule::{OrderingMode, PortSchedule, Schedule, Window};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintFamily {
    WellDefined,
    Ordering,
    Assignment,
    WindowSize,
    Precedence,
    Isolation,
    EndToEnd,
    Jitter,
    MultiPeriod,
}

#[derive(Debug, Clone, Serialize)]
pub struct Violation {
    pub family: ConstraintFamily,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub link: Option<LinkId>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stream: Option<StreamId>,
    pub detail: String,
}

#[derive(Debug, Error)]
pub enum ValidateError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("schedule has no port for link `{0}` which carries frames")]
    MissingPort(LinkId),
    #[error("frame {0:?} assigned to window {1} which does not exist on `{2}`")]
    UnknownWindow(FrameKey, u32, LinkId),
    #[error("schedule assigns unknown frame {0:?}")]
    UnknownFrame(FrameKey),
    #[error("port `{0}` hyperperiod {1} does not match the stream set ({2})")]
    HyperperiodMismatch(LinkId, Nanos, Nanos),
}

#[derive(Debug, Clone, Copy, Default)]
pub struct CheckOptions {
    /// Evaluate the isolation disjunction in its verbatim assignment-scaled
    /// form instead of the guarded interpretation (fidelity experiments).
    pub verbatim_isolation: bool,
}

struct Checker<'a> {
    streams: &'a [Stream],
    schedule: &'a Schedule,
    ports: BTreeMap<LinkId, PortModel>,
    violations: Vec<Violation>,
    opts: CheckOptions,
}

/// Ground-truth re-check of a concrete schedule against every constraint
/// family. An empty report means the schedule is valid.
#[allow(clippy::result_large_err)]
pub fn check_schedule(
    network: &Network,
    streams: &[Stream],
    schedule: &Schedule,
) -> Result<Vec<Violation>, ValidateError> {
    check_schedule_with(network, streams, schedule, CheckOptions::default())
}

#[allow(clippy::result_large_err)]
pub fn check_schedule_with(
    network: &Network,
    streams: &[Stream],
    schedule: &Schedule,
    opts: CheckOptions,
) -> Result<Vec<Violation>, ValidateError> {
    let ports = build_port_models(network, streams)?;

    // Structural sanity first: these are malformed-input errors, not
    // constraint violations.
    for (link, port) in &ports {
        let sched_port = schedule.port(link).ok_or_else(|| ValidateError::MissingPort(link.clone()))?;
        if sched_port.hyperperiod != port.hyperperiod {
            return Err(ValidateError::HyperperiodMismatch(
                link.clone(),
                sched_port.hyperperiod,
                port.hyperperiod,
            ));
        }
    }
    for (key, window) in &schedule.assignment {
        let Some(port) = ports.get(&key.link) else {
            return Err(ValidateError::UnknownFrame(key.clone()));
        };
        if port.frame(key).is_none() {
            return Err(ValidateError::UnknownFrame(key.clone()));
        }
        let sched_port = schedule.port(&key.link).expect("checked above");
        if sched_port.window(*window).is_none() {
            return Err(ValidateError::UnknownWindow(key.clone(), *window, key.link.clone()));
        }
    }

    let mut checker = Checker { streams, schedule, ports, violations: Vec::new(), opts };
    checker.check_well_defined();
    checker.check_ordering();
    checker.check_assignment();
    checker.check_window_size();
    checker.check_precedence();
    checker.check_isolation();
    checker.check_e2e();
    if schedule.multi_period {
        checker.check_multi_period();
    } else {
        checker.check_jitter();
    }
    Ok(checker.violations)
}

/// Device-occupancy interval of one frame-instance occurrence, in egress
/// schedule time.
#[derive(Debug, Clone, Copy)]
struct ConcreteOccupancy {
    entry: Nanos,
    leave: Nanos,
    /// Egress window the occurrence transmits in.
    egress_window: u32,
    /// Entry is timed by another node's clock.
    entry_cross_clock: bool,
}

impl<'a> Checker<'a> {
    fn violation(
        &mut self,
        family: ConstraintFamily,
        link: Option<&LinkId>,
        window: Option<u32>,
        stream: Option<&StreamId>,
        detail: String,
    ) {
        self.violations.push(Violation {
            family,
            link: link.cloned(),
            window,
            stream: stream.cloned(),
            detail,
        });
    }

    fn sched_port(&self, link: &LinkId) -> &'a PortSchedule {
        self.schedule.port(link).expect("port presence checked up front")
    }

    /// Window assigned to a frame; absence is reported separately as an
    /// Assignment violation.
    fn assigned(&self, key: &FrameKey) -> Option<Window> {
        self.schedule.assigned_window(key).copied()
    }

    fn check_well_defined(&mut self) {
        let links: Vec<LinkId> = self.ports.keys().cloned().collect();
        for link in links {
            let port = self.sched_port(&link).clone();
            for w in &port.windows {
                if w.open > w.close {
                    self.violation(
                        ConstraintFamily::WellDefined,
                        Some(&link),
                        Some(w.index),
                        None,
                        format!("window opens at {} after close {}", w.open, w.close),
                    );
                }
                if w.open < 0 {
                    self.violation(
                        ConstraintFamily::WellDefined,
                        Some(&link),
                        Some(w.index),
                        None,
                        format!("window opens at {} before time 0", w.open),
                    );
                }
                if w.close >= port.hyperperiod {
                    self.violation(
                        ConstraintFamily::WellDefined,
                        Some(&link),
                        Some(w.index),
                        None,
                        format!("window closes at {} beyond hyperperiod {}", w.close, port.hyperperiod),
                    );
                }
            }
        }
    }

    fn check_ordering(&mut self) {
        let links: Vec<LinkId> = self.ports.keys().cloned().collect();
        for link in links {
            let port = self.sched_port(&link).clone();
            for (i, a) in port.windows.iter().enumerate() {
                for b in port.windows.iter().skip(i + 1) {
                    if a.open.max(b.open) < a.close.min(b.close) {
                        self.violation(
                            ConstraintFamily::Ordering,
                            Some(&link),
                            Some(a.index),
                            None,
                            format!(
                                "windows {} [{}, {}] and {} [{}, {}] overlap",
                                a.index, a.open, a.close, b.index, b.open, b.close
                            ),
                        );
                    }
                }
            }
            if self.schedule.ordering == OrderingMode::Sequential {
                for pair in port.windows.windows(2) {
                    if pair[0].close > pair[1].open {
                        self.violation(
                            ConstraintFamily::Ordering,
                            Some(&link),
                            Some(pair[0].index),
                            None,
                            format!(
                                "sequential order broken: close of window {} is {} but window {} opens at {}",
                                pair[0].index, pair[0].close, pair[1].index, pair[1].open
                            ),
                        );
                    }
                }
            }
        }
    }

    fn check_assignment(&mut self) {
        let keys: Vec<FrameKey> = self
            .ports
            .values()
            .flat_map(|p| p.frames.iter().map(|f| f.key.clone()))
            .collect();
        for key in keys {
            if !self.schedule.assignment.contains_key(&key) {
                self.violation(
                    ConstraintFamily::Assignment,
                    Some(&key.link.clone()),
                    None,
                    Some(&key.stream.clone()),
                    format!("frame repetition {} is not assigned to any window", key.repetition),
                );
            }
        }
    }

    fn check_window_size(&mut self) {
        let links: Vec<LinkId> = self.ports.keys().cloned().collect();
        for link in links {
            let port = self.ports[&link].clone();
            let sched = self.sched_port(&link).clone();
            for w in &sched.windows {
                let load: Nanos = port
                    .frames
                    .iter()
                    .filter(|f| self.schedule.assignment.get(&f.key) == Some(&w.index))
                    .map(|f| f.duration)
                    .sum();
                if w.close - w.open != load {
                    self.violation(
                        ConstraintFamily::WindowSize,
                        Some(&link),
                        Some(w.index),
                        None,
                        format!(
                            "window spans {} but assigned frames need exactly {}",
                            w.close - w.open,
                            load
                        ),
                    );
                }
            }
        }
    }

    /// Repetitions of a stream on a link per that link's hyperperiod.
    fn reps_on(&self, stream: &Stream, link: &LinkId) -> i64 {
        self.ports[link].hyperperiod / stream.period
    }

    /// Assigned window of a stream's frame at a global period slot on a
    /// link, together with the cycle shift placing it on the timeline.
    fn window_at_slot(&self, stream: &Stream, link: &LinkId, slot: i64) -> Option<(Window, Nanos)> {
        let reps = self.reps_on(stream, link);
        let rep = slot.rem_euclid(reps) as u32;
        let shift = slot.div_euclid(reps) * self.ports[link].hyperperiod;
        let key = FrameKey { stream: stream.id.clone(), link: link.clone(), repetition: rep };
        self.assigned(&key).map(|w| (w, shift))
    }

    fn check_precedence(&mut self) {
        let delta = self.schedule.delta;
        for stream in self.streams {
            for hop in stream.route.windows(2) {
                let (g, e) = (&hop[0], &hop[1]);
                let reps_g = self.reps_on(stream, g);
                let reps_e = self.reps_on(stream, e);
                for slot in 0..reps_g.lcm(&reps_e) {
                    let (Some((wg, shift_g)), Some((we, shift_e))) = (
                        self.window_at_slot(stream, g, slot),
                        self.window_at_slot(stream, e, slot),
                    ) else {
                        continue; // missing assignment already reported
                    };
                    let leaves = wg.close + shift_g + delta;
                    let opens = we.open + shift_e;
                    if leaves > opens {
                        let detail = format!(
                            "slot {slot}: hop {g} window {} closes at {} (+precision) after hop {e} window {} opens at {}",
                            wg.index, wg.close + shift_g, we.index, we.open + shift_e,
                        );
                        self.violation(
                            ConstraintFamily::Precedence,
                            Some(e),
                            Some(we.index),
                            Some(&stream.id.clone()),
                            detail,
                        );
                    }
                }
            }
        }
    }

    /// Occupancy of a stream's frame inside the device sourcing `egress`
    /// for a given global period slot.
    fn occupancy_at(&self, stream: &Stream, egress: &LinkId, slot: i64) -> Option<ConcreteOccupancy> {
        let (we, shift_e) = self.window_at_slot(stream, egress, slot)?;
        let hop = stream.hop_of(egress)?;
        let (entry, cross) = if hop == 0 {
            (we.open + shift_e, false)
        } else {
            let ingress = &stream.route[hop - 1];
            let (wg, shift_g) = self.window_at_slot(stream, ingress, slot)?;
            (wg.open + shift_g, true)
        };
        Some(ConcreteOccupancy {
            entry,
            leave: we.close + shift_e,
            egress_window: we.index,
            entry_cross_clock: cross,
        })
    }

    fn check_isolation(&mut self) {
        let egress_links: Vec<LinkId> = self.ports.keys().cloned().collect();
        for egress in egress_links {
            let frames = self.ports[&egress].frames.clone();
            for (i, fa) in frames.iter().enumerate() {
                for fb in frames.iter().skip(i + 1) {
                    if fa.stream() == fb.stream() {
                        continue;
                    }
                    let sa = self.streams.iter().find(|s| &s.id == fa.stream()).unwrap();
                    let sb = self.streams.iter().find(|s| &s.id == fb.stream()).unwrap();
                    let a_first = sa.hop_of(&egress) == Some(0);
                    let b_first = sb.hop_of(&egress) == Some(0);
                    if a_first && b_first {
                        continue;
                    }
                    if self.opts.verbatim_isolation {
                        self.check_isolation_pair_verbatim(&egress, sa, sb, &fa.key, &fb.key);
                    } else {
                        self.check_isolation_pair(
                            &egress,
                            sa,
                            sb,
                            fa.key.repetition,
                            fb.key.repetition,
                        );
                    }
                }
            }
        }
    }

    fn check_isolation_pair(
        &mut self,
        egress: &LinkId,
        sa: &Stream,
        sb: &Stream,
        rep_a: u32,
        rep_b: u32,
    ) {
        let hp_e = self.ports[egress].hyperperiod;
        let entry_hp = |s: &Stream| -> Nanos {
            match s.hop_of(egress) {
                Some(0) | None => hp_e,
                Some(h) => self.ports[&s.route[h - 1]].hyperperiod,
            }
        };
        let cycle = hp_e.lcm(&entry_hp(sa)).lcm(&entry_hp(sb));
        let reps_a = hp_e / sa.period;
        let reps_b = hp_e / sb.period;
        let delta = self.schedule.delta;

        for c in 0..(cycle / hp_e) {
            let slot_a = rep_a as i64 + c * reps_a;
            let (a_lo, a_hi) = (slot_a * sa.period, (slot_a + 1) * sa.period);
            let Some(occ_a) = self.occupancy_at(sa, egress, slot_a) else { continue };

            let b_from = (a_lo - sb.period).div_euclid(sb.period);
            let b_to = a_hi.div_euclid(sb.period) + 1;
            for slot_b in b_from..=b_to {
                if slot_b.rem_euclid(reps_b) != rep_b as i64 {
                    continue;
                }
                let (b_lo, b_hi) = (slot_b * sb.period, (slot_b + 1) * sb.period);
                if a_lo >= b_hi || b_lo >= a_hi {
                    continue;
                }
                let Some(occ_b) = self.occupancy_at(sb, egress, slot_b) else { continue };

                let same_window = occ_a.egress_window == occ_b.egress_window;
                let margin_b = if occ_b.entry_cross_clock { delta } else { 0 };
                let margin_a = if occ_a.entry_cross_clock { delta } else { 0 };
                let a_then_b = occ_a.leave + margin_b <= occ_b.entry;
                let b_then_a = occ_b.leave + margin_a <= occ_a.entry;
                if !(same_window || a_then_b || b_then_a) {
                    let detail = format!(
                        "streams {} (slot {slot_a}, window {}, in device [{}, {}]) and {} (slot {slot_b}, window {}, in device [{}, {}]) interleave in the egress queue",
                        sa.id, occ_a.egress_window, occ_a.entry, occ_a.leave,
                        sb.id, occ_b.egress_window, occ_b.entry, occ_b.leave,
                    );
                    self.violation(
                        ConstraintFamily::Isolation,
                        Some(egress),
                        Some(occ_a.egress_window),
                        Some(&sa.id.clone()),
                        detail,
                    );
                }
            }
        }
    }

    /// Verbatim evaluation of the assignment-scaled isolation disjunction
    /// over every window triple. Kept for fidelity experiments; the scaled
    /// comparisons degenerate to 0 <= 0 for unassigned windows, so this
    /// form is weaker than the guarded interpretation.
    fn check_isolation_pair_verbatim(
        &mut self,
        egress: &LinkId,
        sa: &Stream,
        sb: &Stream,
        key_a: &FrameKey,
        key_b: &FrameKey,
    ) {
        let ingress = |s: &Stream| -> Option<LinkId> {
            s.hop_of(egress).filter(|h| *h > 0).map(|h| s.route[h - 1].clone())
        };
        let (Some(link_a), Some(link_b)) = (ingress(sa), ingress(sb)) else {
            return;
        };
        let schedule: &Schedule = self.schedule;
        let eps = |key: &FrameKey, w: &Window| -> Nanos {
            (schedule.assignment.get(key) == Some(&w.index)) as Nanos
        };
        let e_port = self.sched_port(egress).clone();
        let a_port = self.sched_port(&link_a).clone();
        let b_port = self.sched_port(&link_b).clone();
        let in_a = FrameKey { stream: sa.id.clone(), link: link_a, repetition: key_a.repetition };
        let in_b = FrameKey { stream: sb.id.clone(), link: link_b, repetition: key_b.repetition };
        for wk in &e_port.windows {
            for wl in &a_port.windows {
                for wm in &b_port.windows {
                    let first = wk.close * eps(key_a, wk) <= wm.open * eps(&in_b, wm);
                    let second = wk.close * eps(key_b, wk) <= wl.open * eps(&in_a, wl);
                    let same = eps(key_b, wk) == eps(key_a, wk);
                    if !(first || second || same) {
                        self.violation(
                            ConstraintFamily::Isolation,
                            Some(egress),
                            Some(wk.index),
                            Some(&sa.id.clone()),
                            format!(
                                "verbatim isolation disjunction fails for windows ({}, {}, {})",
                                wk.index, wl.index, wm.index
                            ),
                        );
                    }
                }
            }
        }
    }

    fn check_e2e(&mut self) {
        let delta = self.schedule.delta;
        for stream in self.streams {
            let first = stream.first_link().clone();
            let last = stream.last_link().clone();
            let duration_last = self.ports[&last]
                .frames
                .iter()
                .find(|f| f.stream() == &stream.id)
                .map(|f| f.duration)
                .unwrap_or(0);
            let bound = stream.e2e - duration_last - delta;
            let reps_f = self.reps_on(stream, &first);
            let reps_l = self.reps_on(stream, &last);
            for slot in 0..reps_f.lcm(&reps_l) {
                let (Some((wf, shift_f)), Some((wl, shift_l))) = (
                    self.window_at_slot(stream, &first, slot),
                    self.window_at_slot(stream, &last, slot),
                ) else {
                    continue;
                };
                let latency_term = (wl.close + shift_l) - (wf.open + shift_f);
                if latency_term > bound {
                    let detail = format!(
                        "slot {slot}: last-hop close {} minus first-hop open {} is {}, exceeding e2e {} - L {} - precision {}",
                        wl.close + shift_l,
                        wf.open + shift_f,
                        latency_term,
                        stream.e2e,
                        duration_last,
                        delta,
                    );
                    self.violation(
                        ConstraintFamily::EndToEnd,
                        Some(&last),
                        Some(wl.index),
                        Some(&stream.id.clone()),
                        detail,
                    );
                }
            }
        }
    }

    fn check_jitter(&mut self) {
        for stream in self.streams {
            let last = stream.last_link().clone();
            let key = FrameKey { stream: stream.id.clone(), link: last.clone(), repetition: 0 };
            let Some(window) = self.assigned(&key) else { continue };
            let duration = self.ports[&last]
                .frames
                .iter()
                .find(|f| f.key == key)
                .map(|f| f.duration)
                .unwrap_or(0);
            let psi = window.close - window.open;
            if psi > stream.jitter + duration {
                let detail = format!(
                    "last-hop window size {} exceeds jitter {} + L {}",
                    psi, stream.jitter, duration
                );
                self.violation(
                    ConstraintFamily::Jitter,
                    Some(&last),
                    Some(window.index),
                    Some(&stream.id.clone()),
                    detail,
                );
            }
        }
    }

    fn check_multi_period(&mut self) {
        let keys: Vec<(FrameKey, Nanos)> = self
            .ports
            .values()
            .flat_map(|p| p.frames.iter().map(|f| (f.key.clone(), f.period)))
            .collect();
        for (key, period) in keys {
            let Some(window) = self.assigned(&key) else { continue };
            let index = window.index;
            let lo = key.repetition as Nanos * period;
            let hi = (key.repetition as Nanos + 1) * period;
            if window.open < lo || window.close > hi {
                let detail = format!(
                    "repetition {} window [{}, {}] leaves its period slot [{lo}, {hi}]",
                    key.repetition, window.open, window.close
                );
                self.violation(
                    ConstraintFamily::MultiPeriod,
                    Some(&key.link.clone()),
                    Some(index),
                    Some(&key.stream.clone()),
                    detail,
                );
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Brute-force oracle
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub enum Feasibility {
    Feasible(Box<Schedule>),
    Infeasible,
}

impl Feasibility {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Feasibility::Feasible(_))
    }
}

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("instance exceeds oracle bounds: {0}")]
    ExceedsBounds(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("grid step must be positive")]
    BadGrid,
}

const MAX_LINKS: usize = 3;
const MAX_FRAMES_PER_LINK: usize = 3;
const MAX_GRID_POINTS: i64 = 64;

/// One candidate layout of a single port: ordered non-empty windows with
/// concrete times, plus the frame assignment producing them.
#[derive(Debug, Clone)]
struct PortPlacement {
    windows: Vec<Window>,
    assignment: Vec<(FrameKey, u32)>,
}

/// Exhaustive search for any schedule on the time grid that passes
/// `check_schedule`. Instances are deliberately bounded; the oracle exists
/// to cross-check the solver pipeline on tiny cases.
pub fn brute_force_feasible(
    network: &Network,
    streams: &[Stream],
    delta: Nanos,
    multi_period: bool,
    grid: Nanos,
) -> Result<Feasibility, OracleError> {
    if grid <= 0 {
        return Err(OracleError::BadGrid);
    }
    let ports = build_port_models(network, streams)?;
    if ports.len() > MAX_LINKS {
        return Err(OracleError::ExceedsBounds(format!(
            "{} links with frames, oracle handles at most {MAX_LINKS}",
            ports.len()
        )));
    }
    for port in ports.values() {
        if port.frames.len() > MAX_FRAMES_PER_LINK {
            return Err(OracleError::ExceedsBounds(format!(
                "{} frames on link {}, oracle handles at most {MAX_FRAMES_PER_LINK}",
                port.frames.len(),
                port.link.id
            )));
        }
        if port.hyperperiod / grid > MAX_GRID_POINTS {
            return Err(OracleError::ExceedsBounds(format!(
                "{} grid points on link {}, oracle handles at most {MAX_GRID_POINTS}",
                port.hyperperiod / grid,
                port.link.id
            )));
        }
    }

    // Early pigeonhole cut: total load may not exceed the hyperperiod.
    for port in ports.values() {
        let load: Nanos = port.frames.iter().map(|f| f.duration).sum();
        if load > port.hyperperiod {
            return Ok(Feasibility::Infeasible);
        }
    }

    // Candidate placements per link, enumerated independently.
    let mut links: Vec<LinkId> = ports.keys().cloned().collect();
    // Visit links roughly in route order so precedence pruning bites early.
    let hop_rank = |link: &LinkId| -> usize {
        streams.iter().filter_map(|s| s.hop_of(link)).min().unwrap_or(usize::MAX)
    };
    links.sort_by_key(|l| (hop_rank(l), l.clone()));

    let mut candidates: Vec<Vec<PortPlacement>> = Vec::new();
    for link in &links {
        let cands = enumerate_port_placements(&ports[link], grid, multi_period);
        if cands.is_empty() {
            return Ok(Feasibility::Infeasible);
        }
        candidates.push(cands);
    }

    let mut chosen: Vec<usize> = Vec::new();
    let found = search(network, streams, delta, multi_period, &links, &candidates, &mut chosen, &ports);
    Ok(match found {
        Some(schedule) => Feasibility::Feasible(Box::new(schedule)),
        None => Feasibility::Infeasible,
    })
}

fn enumerate_port_placements(port: &PortModel, grid: Nanos, multi_period: bool) -> Vec<PortPlacement> {
    let frames = &port.frames;
    let mut placements = Vec::new();
    // Ordered set partitions of the frames into at most wmax groups.
    let mut groups: Vec<Vec<usize>> = Vec::new();
    fn partitions(
        idx: usize,
        n: usize,
        wmax: usize,
        groups: &mut Vec<Vec<usize>>,
        out: &mut Vec<Vec<Vec<usize>>>,
    ) {
        if idx == n {
            out.push(groups.clone());
            return;
        }
        for g in 0..groups.len() {
            groups[g].push(idx);
            partitions(idx + 1, n, wmax, groups, out);
            groups[g].pop();
        }
        if groups.len() < wmax {
            groups.push(vec![idx]);
            partitions(idx + 1, n, wmax, groups, out);
            groups.pop();
        }
    }
    let mut all_groupings = Vec::new();
    partitions(0, frames.len(), port.wmax as usize, &mut groups, &mut all_groupings);

    for grouping in all_groupings {
        // Window load and period-slot bounds per group.
        let mut sizes = Vec::new();
        let mut bounds = Vec::new();
        let mut ok = true;
        for group in &grouping {
            let size: Nanos = group.iter().map(|i| frames[*i].duration).sum();
            let mut lo = 0;
            let mut hi = port.hyperperiod;
            if multi_period {
                for i in group {
                    let f = &frames[*i];
                    lo = lo.max(f.repetition() as Nanos * f.period);
                    hi = hi.min((f.repetition() as Nanos + 1) * f.period);
                }
            }
            if lo + size > hi {
                ok = false;
                break;
            }
            sizes.push(size);
            bounds.push((lo, hi));
        }
        if !ok {
            continue;
        }
        // DFS over grid-aligned opens in increasing order. Group order in
        // `grouping` is the window order on the timeline.
        let mut opens = vec![0i64; grouping.len()];
        let mut stack_out = Vec::new();
        #[allow(clippy::too_many_arguments)]
        fn place(
            level: usize,
            min_open: Nanos,
            grid: Nanos,
            hp: Nanos,
            sizes: &[Nanos],
            bounds: &[(Nanos, Nanos)],
            opens: &mut Vec<Nanos>,
            out: &mut Vec<Vec<Nanos>>,
        ) {
            if level == sizes.len() {
                out.push(opens.clone());
                return;
            }
            let (lo, hi) = bounds[level];
            let mut t = min_open.max(lo);
            // align up to the grid
            if t.rem_euclid(grid) != 0 {
                t = (t.div_euclid(grid) + 1) * grid;
            }
            // close stays strictly inside the hyperperiod and within the
            // period-slot bound (inclusive).
            while t + sizes[level] < hp && t + sizes[level] <= hi {
                opens[level] = t;
                place(level + 1, t + sizes[level], grid, hp, sizes, bounds, opens, out);
                t += grid;
            }
        }
        place(0, 0, grid, port.hyperperiod, &sizes, &bounds, &mut opens, &mut stack_out);

        for opens in stack_out {
            let mut windows = Vec::new();
            let mut assignment = Vec::new();
            for (w, group) in grouping.iter().enumerate() {
                let index = (w + 1) as u32;
                windows.push(Window {
                    index,
                    open: opens[w],
                    close: opens[w] + sizes[w],
                });
                for i in group {
                    assignment.push((frames[*i].key.clone(), index));
                }
            }
            placements.push(PortPlacement { windows, assignment });
        }
    }
    placements
}

#[allow(clippy::too_many_arguments)]
fn search(
    network: &Network,
    streams: &[Stream],
    delta: Nanos,
    multi_period: bool,
    links: &[LinkId],
    candidates: &[Vec<PortPlacement>],
    chosen: &mut Vec<usize>,
    ports: &BTreeMap<LinkId, PortModel>,
) -> Option<Schedule> {
    let level = chosen.len();
    if level == links.len() {
        let schedule = assemble(delta, multi_period, links, candidates, chosen, ports);
        return match check_schedule(network, streams, &schedule) {
            Ok(violations) if violations.is_empty() => Some(schedule),
            _ => None,
        };
    }
    'next: for i in 0..candidates[level].len() {
        chosen.push(i);
        // Partial pruning: the already-placed links must not violate
        // precedence among themselves.
        let partial = assemble(delta, multi_period, &links[..=level], candidates, chosen, ports);
        for stream in streams {
            for hop in stream.route.windows(2) {
                let (g, e) = (&hop[0], &hop[1]);
                if !partial.ports.contains_key(g) || !partial.ports.contains_key(e) {
                    continue;
                }
                let wg = partial.assigned_window(&FrameKey {
                    stream: stream.id.clone(),
                    link: g.clone(),
                    repetition: 0,
                });
                let we = partial.assigned_window(&FrameKey {
                    stream: stream.id.clone(),
                    link: e.clone(),
                    repetition: 0,
                });
                if let (Some(wg), Some(we)) = (wg, we) {
                    // Only the slot-0 fast check; the leaf check is exact.
                    if ports[g].hyperperiod == ports[e].hyperperiod && wg.close + delta > we.open {
                        chosen.pop();
                        continue 'next;
                    }
                }
            }
        }
        if let Some(found) =
            search(network, streams, delta, multi_period, links, candidates, chosen, ports)
        {
            return Some(found);
        }
        chosen.pop();
    }
    None
}

fn assemble(
    delta: Nanos,
    multi_period: bool,
    links: &[LinkId],
    candidates: &[Vec<PortPlacement>],
    chosen: &[usize],
    ports: &BTreeMap<LinkId, PortModel>,
) -> Schedule {
    let mut port_schedules = BTreeMap::new();
    let mut assignment = BTreeMap::new();
    for (level, link) in links.iter().enumerate().take(chosen.len()) {
        let placement = &candidates[level][chosen[level]];
        port_schedules.insert(
            link.clone(),
            PortSchedule {
                link: link.clone(),
                hyperperiod: ports[link].hyperperiod,
                windows: placement.windows.clone(),
            },
        );
        for (key, w) in &placement.assignment {
            assignment.insert(key.clone(), *w);
        }
    }
    Schedule {
        delta,
        ordering: OrderingMode::Sequential,
        multi_period,
        ports: port_schedules,
        assignment,
        objective_value: None,
    }
}
