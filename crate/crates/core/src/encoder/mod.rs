//! Translates the port/stream model into the constraint IR.
//!
//! Every constraint family is emitted by its own method so tests and
//! reporting can exercise them independently; `encode_all` runs the full
//! set in a canonical order.
//!
//! Two arithmetic modes are supported. The nonlinear mode keeps
//! assignment-times-term products as written in the window formulas; the
//! linearized mode (default) rewrites every such product into a guarded
//! implication over the assignment bits, staying in linear integer
//! arithmetic.

pub mod ir;

use std::collections::BTreeMap;

use num_integer::Integer;
use thiserror::Error;

pub use ir::{
    Assertion, BoolExpr, ConstraintCategory, ConstraintIr, IntExpr, ModelValue, Objective, Sort,
    VarDecl, VarId, VarRole,
};

use crate::netmodel::{FrameKey, LinkId, Nanos, PortModel, Stream, StreamId};
use crate::schedule::{ArithmeticMode, ObjectiveKind, OrderingMode};

#[derive(Debug, Clone)]
pub struct EncoderConfig {
    /// Worst-case clock difference between any two synchronized nodes.
    pub delta: Nanos,
    pub ordering: OrderingMode,
    pub arithmetic: ArithmeticMode,
    pub multi_period: bool,
    pub objective: ObjectiveKind,
    /// Optional symmetry breaking: force empty windows to sort last
    /// (sequential ordering only).
    pub empty_windows_last: bool,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig {
            delta: 0,
            ordering: OrderingMode::Sequential,
            arithmetic: ArithmeticMode::Linearized,
            multi_period: false,
            objective: ObjectiveKind::None,
            empty_windows_last: false,
        }
    }
}

#[derive(Debug, Error)]
pub enum EncodeError {
    #[error("delta must be non-negative, got {0}")]
    NegativeDelta(Nanos),
    #[error("streams have multiple repetitions per hyperperiod; enable multi-period mode")]
    MultiPeriodRequired,
    #[error("the receiver jitter constraint is not defined for multi-period schedules")]
    JitterUnsupportedInMultiPeriod,
    #[error("multi-period constraints requested but multi-period mode is disabled")]
    MultiPeriodNotEnabled,
    #[error("stream `{0}` routes over link `{1}` that has no port model")]
    MissingPort(StreamId, LinkId),
}

/// Replaces characters outside the SMT-LIB simple-symbol set.
fn sanitize(raw: &str) -> String {
    raw.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' || c == '.' { c } else { '_' })
        .collect()
}

pub struct Encoder<'a> {
    cfg: EncoderConfig,
    streams: &'a [Stream],
    ports: &'a BTreeMap<LinkId, PortModel>,
    ir: ConstraintIr,
    opens: BTreeMap<(LinkId, u32), VarId>,
    closes: BTreeMap<(LinkId, u32), VarId>,
    eps: BTreeMap<(FrameKey, u32), VarId>,
    link_names: BTreeMap<LinkId, String>,
    stream_names: BTreeMap<StreamId, String>,
}

/// Occupancy of a frame instance inside the egress device for one period
/// slot: when it can enter the device and when it has surely left the
/// egress queue, both as (window-variable + constant-shift) terms.
struct Occupancy {
    /// Frame instance on the egress link (selects the leave window).
    egress: FrameKey,
    egress_shift: Nanos,
    /// Frame instance whose window open marks the device entry. For
    /// forwarded frames this is the instance on the ingress link; for
    /// talker-sourced frames the egress instance itself (the host hands
    /// the frame to the queue at its own window).
    entry: FrameKey,
    entry_shift: Nanos,
    /// Entry is timed by a different node's clock than the egress port.
    entry_cross_clock: bool,
}

impl<'a> Encoder<'a> {
    pub fn new(
        streams: &'a [Stream],
        ports: &'a BTreeMap<LinkId, PortModel>,
        cfg: EncoderConfig,
    ) -> Result<Self, EncodeError> {
        if cfg.delta < 0 {
            return Err(EncodeError::NegativeDelta(cfg.delta));
        }
        for stream in streams {
            for link in &stream.route {
                if !ports.contains_key(link) {
                    return Err(EncodeError::MissingPort(stream.id.clone(), link.clone()));
                }
            }
        }
        if !cfg.multi_period {
            let repeated = ports
                .values()
                .flat_map(|p| p.frames.iter())
                .any(|f| f.repetition() > 0);
            if repeated {
                return Err(EncodeError::MultiPeriodRequired);
            }
        }

        let mut enc = Encoder {
            cfg,
            streams,
            ports,
            ir: ConstraintIr::new(),
            opens: BTreeMap::new(),
            closes: BTreeMap::new(),
            eps: BTreeMap::new(),
            link_names: BTreeMap::new(),
            stream_names: BTreeMap::new(),
        };
        enc.build_names();
        enc.declare_vars();
        Ok(enc)
    }

    fn build_names(&mut self) {
        let mut used = std::collections::BTreeSet::new();
        for link in self.ports.keys() {
            let mut name = format!("{}-{}", sanitize(link.src.as_str()), sanitize(link.dst.as_str()));
            while !used.insert(name.clone()) {
                name.push('x');
            }
            self.link_names.insert(link.clone(), name);
        }
        let mut used = std::collections::BTreeSet::new();
        for stream in self.streams {
            let mut name = sanitize(stream.id.as_str());
            while !used.insert(name.clone()) {
                name.push('x');
            }
            self.stream_names.insert(stream.id.clone(), name);
        }
    }

    fn declare_vars(&mut self) {
        for (link, port) in self.ports {
            let link_name = self.link_names[link].clone();
            for k in 1..=port.wmax {
                let open = self.ir.declare(
                    format!("w_{link_name}_{k}_open"),
                    Sort::Int,
                    Some(VarRole::WindowOpen { link: link.clone(), window: k }),
                );
                self.opens.insert((link.clone(), k), open);
                let close = self.ir.declare(
                    format!("w_{link_name}_{k}_close"),
                    Sort::Int,
                    Some(VarRole::WindowClose { link: link.clone(), window: k }),
                );
                self.closes.insert((link.clone(), k), close);
                for frame in &port.frames {
                    let stream_name = &self.stream_names[frame.stream()];
                    let j = frame.repetition();
                    let var = self.ir.declare(
                        format!("e_{link_name}_{k}_{stream_name}_{j}"),
                        Sort::Int,
                        Some(VarRole::Epsilon { window: k, frame: frame.key.clone() }),
                    );
                    self.eps.insert((frame.key.clone(), k), var);
                }
            }
        }
    }

    fn open(&self, link: &LinkId, k: u32) -> IntExpr {
        IntExpr::Var(self.opens[&(link.clone(), k)])
    }

    fn close(&self, link: &LinkId, k: u32) -> IntExpr {
        IntExpr::Var(self.closes[&(link.clone(), k)])
    }

    fn eps(&self, frame: &FrameKey, k: u32) -> IntExpr {
        IntExpr::Var(self.eps[&(frame.clone(), k)])
    }

    fn eps_is_one(&self, frame: &FrameKey, k: u32) -> BoolExpr {
        BoolExpr::Eq(self.eps(frame, k), IntExpr::Const(1))
    }

    fn stream(&self, id: &StreamId) -> &'a Stream {
        self.streams.iter().find(|s| &s.id == id).expect("frame of unknown stream")
    }

    fn linear(&self) -> bool {
        self.cfg.arithmetic == ArithmeticMode::Linearized
    }

    /// `eps(a)=1 /\ eps(b)=1 => lhs <= rhs`, in the mode's preferred shape.
    /// The nonlinear shape multiplies both sides by the assignment product,
    /// which is vacuous when either bit is 0 and the plain inequality when
    /// both are 1.
    fn product_guarded_le(
        &self,
        guards: &[(FrameKey, u32)],
        lhs: IntExpr,
        rhs: IntExpr,
    ) -> BoolExpr {
        if self.linear() {
            let gs = guards.iter().map(|(f, k)| self.eps_is_one(f, *k)).collect();
            BoolExpr::guarded(gs, BoolExpr::Le(lhs, rhs))
        } else {
            let factors: Vec<IntExpr> = guards.iter().map(|(f, k)| self.eps(f, *k)).collect();
            let mut l = factors.clone();
            l.push(lhs);
            let mut r = factors;
            r.push(rhs);
            BoolExpr::Le(IntExpr::Mul(l), IntExpr::Mul(r))
        }
    }

    /// Well-defined windows: open before close, and window events bounded to
    /// the port hyperperiod. The sequential ordering lets the bound collapse
    /// to the first open and the last close per link.
    pub fn encode_well_defined(&mut self) {
        for (link, port) in self.ports {
            for k in 1..=port.wmax {
                let expr = BoolExpr::Le(self.open(link, k), self.close(link, k));
                self.ir.assert(ConstraintCategory::WellDefined, expr);
            }
            match self.cfg.ordering {
                OrderingMode::Sequential => {
                    self.ir.assert(
                        ConstraintCategory::WellDefined,
                        BoolExpr::Le(IntExpr::Const(0), self.open(link, 1)),
                    );
                    self.ir.assert(
                        ConstraintCategory::WellDefined,
                        BoolExpr::Lt(self.close(link, port.wmax), IntExpr::Const(port.hyperperiod)),
                    );
                }
                OrderingMode::Pairwise => {
                    for k in 1..=port.wmax {
                        self.ir.assert(
                            ConstraintCategory::WellDefined,
                            BoolExpr::Le(IntExpr::Const(0), self.open(link, k)),
                        );
                        self.ir.assert(
                            ConstraintCategory::WellDefined,
                            BoolExpr::Lt(self.close(link, k), IntExpr::Const(port.hyperperiod)),
                        );
                    }
                }
            }
        }
    }

    /// Ordered windows: either chained sequentially or pairwise disjoint.
    pub fn encode_ordering(&mut self) {
        for (link, port) in self.ports {
            match self.cfg.ordering {
                OrderingMode::Sequential => {
                    for k in 1..port.wmax {
                        let expr = BoolExpr::Le(self.close(link, k), self.open(link, k + 1));
                        self.ir.assert(ConstraintCategory::Ordering, expr);
                    }
                }
                OrderingMode::Pairwise => {
                    for k in 1..=port.wmax {
                        for l in (k + 1)..=port.wmax {
                            let expr = BoolExpr::or(vec![
                                BoolExpr::Le(self.close(link, k), self.open(link, l)),
                                BoolExpr::Le(self.close(link, l), self.open(link, k)),
                            ]);
                            self.ir.assert(ConstraintCategory::Ordering, expr);
                        }
                    }
                }
            }
        }
    }

    /// Frame-to-window assignment: each assignment bit is 0/1 and each frame
    /// goes to exactly one window of its link.
    pub fn encode_assignment(&mut self) {
        for port in self.ports.values() {
            for frame in &port.frames {
                for k in 1..=port.wmax {
                    let e = self.eps(&frame.key, k);
                    let range = BoolExpr::and(vec![
                        BoolExpr::Le(IntExpr::Const(0), e.clone()),
                        BoolExpr::Le(e, IntExpr::Const(1)),
                    ]);
                    self.ir.assert(ConstraintCategory::Assignment, range);
                }
                let sum =
                    IntExpr::sum((1..=port.wmax).map(|k| self.eps(&frame.key, k)).collect());
                self.ir.assert(
                    ConstraintCategory::Assignment,
                    BoolExpr::Eq(sum, IntExpr::Const(1)),
                );
            }
        }
    }

    /// Window size: the close event is the open event plus the summed
    /// durations of the frames assigned to the window.
    pub fn encode_window_size(&mut self) {
        for (link, port) in self.ports {
            for k in 1..=port.wmax {
                let mut terms = vec![self.open(link, k)];
                for frame in &port.frames {
                    terms.push(IntExpr::Const(frame.duration).times(self.eps(&frame.key, k)));
                }
                let expr = BoolExpr::Eq(self.close(link, k), IntExpr::Add(terms));
                self.ir.assert(ConstraintCategory::WindowSize, expr);
            }
        }
    }

    /// Stream precedence: along each route, a hop's window must close
    /// (plus precision) before the next hop's window opens, per period slot.
    pub fn encode_stream_precedence(&mut self) {
        let delta = self.cfg.delta;
        for stream in self.streams {
            for hop in stream.route.windows(2) {
                let (g, e) = (&hop[0], &hop[1]);
                let pg = &self.ports[g];
                let pe = &self.ports[e];
                let reps_g = pg.hyperperiod / stream.period;
                let reps_e = pe.hyperperiod / stream.period;
                for slot in 0..reps_g.lcm(&reps_e) {
                    let (rep_g, shift_g) = (slot % reps_g, (slot / reps_g) * pg.hyperperiod);
                    let (rep_e, shift_e) = (slot % reps_e, (slot / reps_e) * pe.hyperperiod);
                    let fg = FrameKey {
                        stream: stream.id.clone(),
                        link: g.clone(),
                        repetition: rep_g as u32,
                    };
                    let fe = FrameKey {
                        stream: stream.id.clone(),
                        link: e.clone(),
                        repetition: rep_e as u32,
                    };
                    for k in 1..=pg.wmax {
                        for l in 1..=pe.wmax {
                            let lhs = self.close(g, k).plus_const(shift_g + delta);
                            let rhs = self.open(e, l).plus_const(shift_e);
                            let expr = self.product_guarded_le(
                                &[(fg.clone(), k), (fe.clone(), l)],
                                lhs,
                                rhs,
                            );
                            self.ir.assert(ConstraintCategory::Precedence, expr);
                        }
                    }
                }
            }
        }
    }

    /// Device occupancy of an egress frame instance for a given global
    /// period slot of its stream.
    fn occupancy(&self, stream: &Stream, egress: &LinkId, slot: i64) -> Occupancy {
        let pe = &self.ports[egress];
        let reps_e = pe.hyperperiod / stream.period;
        let rep_e = slot.rem_euclid(reps_e);
        let shift_e = slot.div_euclid(reps_e) * pe.hyperperiod;
        let egress_key = FrameKey {
            stream: stream.id.clone(),
            link: egress.clone(),
            repetition: rep_e as u32,
        };
        let hop = stream.hop_of(egress).expect("egress on route");
        if hop == 0 {
            Occupancy {
                egress: egress_key.clone(),
                egress_shift: shift_e,
                entry: egress_key,
                entry_shift: shift_e,
                entry_cross_clock: false,
            }
        } else {
            let ingress = &stream.route[hop - 1];
            let pg = &self.ports[ingress];
            let reps_g = pg.hyperperiod / stream.period;
            let rep_g = slot.rem_euclid(reps_g);
            let shift_g = slot.div_euclid(reps_g) * pg.hyperperiod;
            Occupancy {
                egress: egress_key,
                egress_shift: shift_e,
                entry: FrameKey {
                    stream: stream.id.clone(),
                    link: ingress.clone(),
                    repetition: rep_g as u32,
                },
                entry_shift: shift_g,
                entry_cross_clock: true,
            }
        }
    }

    /// Disjuncts asserting that `before` has left the egress queue (plus
    /// precision, when the enterer is timed by another clock) by the time
    /// `after` enters the device, quantified over both window choices.
    fn leaves_before_enters(&self, before: &Occupancy, after: &Occupancy) -> Vec<BoolExpr> {
        let margin = if after.entry_cross_clock { self.cfg.delta } else { 0 };
        let egress_port = &self.ports[&before.egress.link];
        let entry_port = &self.ports[&after.entry.link];
        let mut terms = Vec::new();
        for k in 1..=egress_port.wmax {
            for m in 1..=entry_port.wmax {
                let lhs = self
                    .close(&before.egress.link, k)
                    .plus_const(before.egress_shift + margin);
                let rhs = self.open(&after.entry.link, m).plus_const(after.entry_shift);
                let guards = [(before.egress.clone(), k), (after.entry.clone(), m)];
                let ineq = if self.linear() {
                    BoolExpr::and(vec![
                        self.eps_is_one(&guards[0].0, k),
                        self.eps_is_one(&guards[1].0, m),
                        BoolExpr::Le(lhs, rhs),
                    ])
                } else {
                    let factors: Vec<IntExpr> =
                        guards.iter().map(|(f, w)| self.eps(f, *w)).collect();
                    let mut l = factors.clone();
                    l.push(lhs);
                    let mut r = factors.clone();
                    r.push(rhs);
                    BoolExpr::and(vec![
                        BoolExpr::Eq(IntExpr::Mul(factors), IntExpr::Const(1)),
                        BoolExpr::Le(IntExpr::Mul(l), IntExpr::Mul(r)),
                    ])
                };
                terms.push(ineq);
            }
        }
        terms
    }

    /// Stream isolation: for every pair of frame instances of different
    /// streams meeting on an egress link, either both ride the same window
    /// or their device occupancies are temporally disjoint, for every pair
    /// of period-slot occurrences that can overlap in time.
    ///
    /// Pairs whose frames are both sourced by the egress device itself are
    /// exempt: the host feeds each frame to the queue at its own window, so
    /// window ordering already isolates them.
    pub fn encode_isolation(&mut self) {
        for (egress, pe) in self.ports {
            let frames = &pe.frames;
            for (i, fa) in frames.iter().enumerate() {
                for fb in frames.iter().skip(i + 1) {
                    if fa.stream() == fb.stream() {
                        continue;
                    }
                    let sa = self.stream(fa.stream());
                    let sb = self.stream(fb.stream());
                    let a_first_hop = sa.hop_of(egress) == Some(0);
                    let b_first_hop = sb.hop_of(egress) == Some(0);
                    if a_first_hop && b_first_hop {
                        continue;
                    }
                    self.encode_isolation_pair(
                        egress,
                        sa,
                        sb,
                        fa.key.repetition,
                        fb.key.repetition,
                    );
                }
            }
        }
    }

    fn encode_isolation_pair(
        &mut self,
        egress: &LinkId,
        sa: &Stream,
        sb: &Stream,
        rep_a: u32,
        rep_b: u32,
    ) {
        let pe = &self.ports[egress];
        let hp_e = pe.hyperperiod;
        let entry_hp = |s: &Stream| -> Nanos {
            match s.hop_of(egress) {
                Some(0) | None => hp_e,
                Some(h) => self.ports[&s.route[h - 1]].hyperperiod,
            }
        };
        let cycle = hp_e.lcm(&entry_hp(sa)).lcm(&entry_hp(sb));
        let reps_a = hp_e / sa.period;
        let reps_b = hp_e / sb.period;

        // Anchor stream a's slots within one repetition cycle; stream b's
        // overlapping slots may spill into neighbouring cycles.
        for c in 0..(cycle / hp_e) {
            let slot_a = rep_a as i64 + c * reps_a;
            let (a_lo, a_hi) = (slot_a * sa.period, (slot_a + 1) * sa.period);
            let occ_a = self.occupancy(sa, egress, slot_a);

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
                let occ_b = self.occupancy(sb, egress, slot_b);

                let mut terms = Vec::new();
                // Same egress window: the queue state is identical for both.
                for k in 1..=pe.wmax {
                    let term = if self.linear() {
                        BoolExpr::and(vec![
                            self.eps_is_one(&occ_a.egress, k),
                            self.eps_is_one(&occ_b.egress, k),
                        ])
                    } else {
                        BoolExpr::Eq(
                            self.eps(&occ_a.egress, k).times(self.eps(&occ_b.egress, k)),
                            IntExpr::Const(1),
                        )
                    };
                    terms.push(term);
                }
                terms.extend(self.leaves_before_enters(&occ_a, &occ_b));
                terms.extend(self.leaves_before_enters(&occ_b, &occ_a));
                self.ir.assert(ConstraintCategory::Isolation, BoolExpr::or(terms));
            }
        }
    }

    /// End-to-end latency: last-hop close minus first-hop open, per period
    /// slot, bounded by e2e minus the last frame duration and precision.
    pub fn encode_e2e(&mut self) {
        let delta = self.cfg.delta;
        for stream in self.streams {
            let first = stream.first_link().clone();
            let last = stream.last_link().clone();
            let pf = &self.ports[&first];
            let pl = &self.ports[&last];
            let duration_last = pl
                .frames
                .iter()
                .find(|f| f.stream() == &stream.id)
                .expect("stream has a frame on its last hop")
                .duration;
            let bound = stream.e2e - duration_last - delta;
            let reps_f = pf.hyperperiod / stream.period;
            let reps_l = pl.hyperperiod / stream.period;
            for slot in 0..reps_f.lcm(&reps_l) {
                let (rep_f, shift_f) = (slot % reps_f, (slot / reps_f) * pf.hyperperiod);
                let (rep_l, shift_l) = (slot % reps_l, (slot / reps_l) * pl.hyperperiod);
                let kf = FrameKey {
                    stream: stream.id.clone(),
                    link: first.clone(),
                    repetition: rep_f as u32,
                };
                let kl = FrameKey {
                    stream: stream.id.clone(),
                    link: last.clone(),
                    repetition: rep_l as u32,
                };
                if self.linear() {
                    for k in 1..=pf.wmax {
                        for l in 1..=pl.wmax {
                            let lhs = self.close(&last, l).plus_const(shift_l);
                            let rhs = self.open(&first, k).plus_const(bound + shift_f);
                            let expr = BoolExpr::guarded(
                                vec![self.eps_is_one(&kf, k), self.eps_is_one(&kl, l)],
                                BoolExpr::Le(lhs, rhs),
                            );
                            self.ir.assert(ConstraintCategory::EndToEnd, expr);
                        }
                    }
                } else {
                    // sum eps*close (last) + shift_l <= bound + shift_f + sum eps*open (first)
                    let mut lhs = Vec::new();
                    for l in 1..=pl.wmax {
                        lhs.push(self.eps(&kl, l).times(self.close(&last, l)));
                    }
                    let lhs = IntExpr::sum(lhs).plus_const(shift_l);
                    let mut rhs = Vec::new();
                    for k in 1..=pf.wmax {
                        rhs.push(self.eps(&kf, k).times(self.open(&first, k)));
                    }
                    let rhs = IntExpr::sum(rhs).plus_const(bound + shift_f);
                    self.ir.assert(ConstraintCategory::EndToEnd, BoolExpr::Le(lhs, rhs));
                }
            }
        }
    }

    /// Receiver jitter: the size of the last-hop window carrying the frame
    /// is bounded by the jitter budget plus one frame duration.
    /// Only defined for single-period schedules.
    pub fn encode_jitter(&mut self) -> Result<(), EncodeError> {
        if self.cfg.multi_period {
            return Err(EncodeError::JitterUnsupportedInMultiPeriod);
        }
        for stream in self.streams {
            let last = stream.last_link().clone();
            let pl = &self.ports[&last];
            let frame = pl
                .frames
                .iter()
                .find(|f| f.stream() == &stream.id)
                .expect("stream has a frame on its last hop");
            let bound = stream.jitter + frame.duration;
            let key = frame.key.clone();
            if self.linear() {
                for l in 1..=pl.wmax {
                    let expr = BoolExpr::guarded(
                        vec![self.eps_is_one(&key, l)],
                        BoolExpr::Le(
                            self.close(&last, l),
                            self.open(&last, l).plus_const(bound),
                        ),
                    );
                    self.ir.assert(ConstraintCategory::Jitter, expr);
                }
            } else {
                // psi = sum eps * (close - open) <= jitter + L
                let mut psi = Vec::new();
                for l in 1..=pl.wmax {
                    let size = self
                        .close(&last, l)
                        .plus(IntExpr::Const(-1).times(self.open(&last, l)));
                    psi.push(self.eps(&key, l).times(size));
                }
                self.ir.assert(
                    ConstraintCategory::Jitter,
                    BoolExpr::Le(IntExpr::sum(psi), IntExpr::Const(bound)),
                );
            }
        }
        Ok(())
    }

    /// Multi-period slot bounds: a window carrying repetition j of a frame
    /// with period T lies inside [j*T, (j+1)*T].
    pub fn encode_multi_period(&mut self) -> Result<(), EncodeError> {
        if !self.cfg.multi_period {
            return Err(EncodeError::MultiPeriodNotEnabled);
        }
        for (link, port) in self.ports {
            for frame in &port.frames {
                let j = frame.repetition() as Nanos;
                let lo = j * frame.period;
                let hi = (j + 1) * frame.period;
                for k in 1..=port.wmax {
                    let (open_bound, close_bound) = if self.linear() {
                        (
                            BoolExpr::guarded(
                                vec![self.eps_is_one(&frame.key, k)],
                                BoolExpr::Le(IntExpr::Const(lo), self.open(link, k)),
                            ),
                            BoolExpr::guarded(
                                vec![self.eps_is_one(&frame.key, k)],
                                BoolExpr::Le(self.close(link, k), IntExpr::Const(hi)),
                            ),
                        )
                    } else {
                        let beta = || self.eps(&frame.key, k);
                        (
                            BoolExpr::Le(
                                beta().times(IntExpr::Const(lo)),
                                beta().times(self.open(link, k)),
                            ),
                            BoolExpr::Le(
                                beta().times(self.close(link, k)),
                                beta().times(IntExpr::Const(hi)),
                            ),
                        )
                    };
                    self.ir.assert(ConstraintCategory::MultiPeriod, open_bound);
                    self.ir.assert(ConstraintCategory::MultiPeriod, close_bound);
                }
            }
        }
        Ok(())
    }

    /// Optional symmetry breaking for sequential ordering: an empty window
    /// may not precede a non-empty one.
    pub fn encode_symmetry_break(&mut self) {
        if self.cfg.ordering != OrderingMode::Sequential {
            return;
        }
        for (link, port) in self.ports {
            for k in 1..port.wmax {
                let expr = BoolExpr::or(vec![
                    BoolExpr::Le(self.open(link, k).plus_const(1), self.close(link, k)),
                    BoolExpr::Le(self.close(link, k + 1), self.open(link, k + 1)),
                ]);
                self.ir.assert(ConstraintCategory::SymmetryBreak, expr);
            }
        }
    }

    /// Attaches the configured minimization objective.
    pub fn encode_objective(&mut self) -> Result<(), EncodeError> {
        match self.cfg.objective {
            ObjectiveKind::None => Ok(()),
            ObjectiveKind::MinE2eSum => {
                self.encode_objective_e2e();
                Ok(())
            }
            ObjectiveKind::MinJitterSum => {
                if self.cfg.multi_period {
                    return Err(EncodeError::JitterUnsupportedInMultiPeriod);
                }
                self.encode_objective_jitter();
                Ok(())
            }
        }
    }

    fn encode_objective_e2e(&mut self) {
        let mut objective_terms = Vec::new();
        for stream in self.streams {
            let first = stream.first_link().clone();
            let last = stream.last_link().clone();
            let pf = &self.ports[&first];
            let pl = &self.ports[&last];
            let reps_f = pf.hyperperiod / stream.period;
            let reps_l = pl.hyperperiod / stream.period;
            for slot in 0..reps_f.lcm(&reps_l) {
                let (rep_f, shift_f) = (slot % reps_f, (slot / reps_f) * pf.hyperperiod);
                let (rep_l, shift_l) = (slot % reps_l, (slot / reps_l) * pl.hyperperiod);
                let kf = FrameKey {
                    stream: stream.id.clone(),
                    link: first.clone(),
                    repetition: rep_f as u32,
                };
                let kl = FrameKey {
                    stream: stream.id.clone(),
                    link: last.clone(),
                    repetition: rep_l as u32,
                };
                if self.linear() {
                    let stream_name = self.stream_names[&stream.id].clone();
                    let aux = self.ir.declare(
                        format!("lat_{stream_name}_{slot}"),
                        Sort::Int,
                        Some(VarRole::LatencyAux { stream: stream.id.clone(), slot: slot as u32 }),
                    );
                    for k in 1..=pf.wmax {
                        for l in 1..=pl.wmax {
                            let value = self
                                .close(&last, l)
                                .plus_const(shift_l - shift_f)
                                .plus(IntExpr::Const(-1).times(self.open(&first, k)));
                            let expr = BoolExpr::guarded(
                                vec![self.eps_is_one(&kf, k), self.eps_is_one(&kl, l)],
                                BoolExpr::Eq(IntExpr::Var(aux), value),
                            );
                            self.ir.assert(ConstraintCategory::Objective, expr);
                        }
                    }
                    objective_terms.push(IntExpr::Var(aux));
                } else {
                    for l in 1..=pl.wmax {
                        objective_terms.push(self.eps(&kl, l).times(self.close(&last, l)));
                    }
                    for k in 1..=pf.wmax {
                        objective_terms.push(
                            IntExpr::Mul(vec![
                                IntExpr::Const(-1),
                                self.eps(&kf, k),
                                self.open(&first, k),
                            ]),
                        );
                    }
                    objective_terms.push(IntExpr::Const(shift_l - shift_f));
                }
            }
        }
        self.ir.set_objective(IntExpr::sum(objective_terms));
    }

    fn encode_objective_jitter(&mut self) {
        let mut objective_terms = Vec::new();
        for stream in self.streams {
            let last = stream.last_link().clone();
            let pl = &self.ports[&last];
            let key = FrameKey { stream: stream.id.clone(), link: last.clone(), repetition: 0 };
            if self.linear() {
                let stream_name = self.stream_names[&stream.id].clone();
                let aux = self.ir.declare(
                    format!("psi_{stream_name}"),
                    Sort::Int,
                    Some(VarRole::JitterAux { stream: stream.id.clone() }),
                );
                for l in 1..=pl.wmax {
                    let size = self
                        .close(&last, l)
                        .plus(IntExpr::Const(-1).times(self.open(&last, l)));
                    let expr = BoolExpr::guarded(
                        vec![self.eps_is_one(&key, l)],
                        BoolExpr::Eq(IntExpr::Var(aux), size),
                    );
                    self.ir.assert(ConstraintCategory::Objective, expr);
                }
                objective_terms.push(IntExpr::Var(aux));
            } else {
                for l in 1..=pl.wmax {
                    let size = self
                        .close(&last, l)
                        .plus(IntExpr::Const(-1).times(self.open(&last, l)));
                    objective_terms.push(self.eps(&key, l).times(size));
                }
            }
        }
        self.ir.set_objective(IntExpr::sum(objective_terms));
    }

    /// Emits all constraint families in canonical order and returns the IR.
    pub fn encode_all(mut self) -> Result<ConstraintIr, EncodeError> {
        self.encode_well_defined();
        self.encode_ordering();
        self.encode_assignment();
        self.encode_window_size();
        self.encode_stream_precedence();
        self.encode_isolation();
        self.encode_e2e();
        if !self.cfg.multi_period {
            self.encode_jitter()?;
        } else {
            self.encode_multi_period()?;
        }
        if self.cfg.empty_windows_last {
            self.encode_symmetry_break();
        }
        self.encode_objective()?;
        Ok(self.ir)
    }

    pub fn finish(self) -> ConstraintIr {
        self.ir
    }

    pub fn ir(&self) -> &ConstraintIr {
        &self.ir
    }
}

/// Convenience wrapper: build and run a full encoding.
pub fn encode(
    streams: &[Stream],
    ports: &BTreeMap<LinkId, PortModel>,
    cfg: EncoderConfig,
) -> Result<ConstraintIr, EncodeError> {
    Encoder::new(streams, ports, cfg)?.encode_all()
}
