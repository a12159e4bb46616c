//! Concrete (solved) schedules: per-port window lists plus the
//! frame-to-window assignment, as decoded from a solver model or built by
//! hand for validation tests.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::netmodel::{FrameKey, LinkId, Nanos};

/// How windows on one link are kept from overlapping.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum OrderingMode {
    /// Windows are chained in index order: close_k <= open_{k+1}.
    #[default]
    Sequential,
    /// Every unordered window pair gets a non-overlap disjunction.
    Pairwise,
}

/// How boolean-times-term products are encoded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ArithmeticMode {
    /// Products rewritten as guarded implications; stays in linear arithmetic.
    #[default]
    Linearized,
    /// Products kept as written; requires nonlinear integer arithmetic.
    Nonlinear,
}

/// Optional optimization objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveKind {
    #[default]
    None,
    /// Minimize the summed end-to-end latency terms over all streams.
    MinE2eSum,
    /// Minimize the accrued receiver jitter (sum of last-hop window sizes).
    MinJitterSum,
}

/// One gate-open interval on an egress port.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    /// 1-based window index on the port.
    pub index: u32,
    pub open: Nanos,
    pub close: Nanos,
}

impl Window {
    pub fn size(&self) -> Nanos {
        self.close - self.open
    }

    pub fn is_empty(&self) -> bool {
        self.close == self.open
    }
}

/// Gate control list of one egress port: its windows over one hyperperiod.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PortSchedule {
    pub link: LinkId,
    pub hyperperiod: Nanos,
    /// Windows in ascending index order.
    pub windows: Vec<Window>,
}

impl PortSchedule {
    pub fn window(&self, index: u32) -> Option<&Window> {
        self.windows.iter().find(|w| w.index == index)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct AssignmentEntry {
    #[serde(flatten)]
    frame: FrameKey,
    window: u32,
}

mod assignment_serde {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(
        map: &BTreeMap<FrameKey, u32>,
        ser: S,
    ) -> Result<S::Ok, S::Error> {
        let entries: Vec<AssignmentEntry> = map
            .iter()
            .map(|(frame, window)| AssignmentEntry { frame: frame.clone(), window: *window })
            .collect();
        serde::Serialize::serialize(&entries, ser)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        de: D,
    ) -> Result<BTreeMap<FrameKey, u32>, D::Error> {
        let entries: Vec<AssignmentEntry> = serde::Deserialize::deserialize(de)?;
        Ok(entries.into_iter().map(|e| (e.frame, e.window)).collect())
    }
}

mod ports_serde {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(
        map: &BTreeMap<LinkId, PortSchedule>,
        ser: S,
    ) -> Result<S::Ok, S::Error> {
        let entries: Vec<&PortSchedule> = map.values().collect();
        serde::Serialize::serialize(&entries, ser)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        de: D,
    ) -> Result<BTreeMap<LinkId, PortSchedule>, D::Error> {
        let entries: Vec<PortSchedule> = serde::Deserialize::deserialize(de)?;
        Ok(entries.into_iter().map(|p| (p.link.clone(), p)).collect())
    }
}

/// A complete solved schedule: every port's windows with concrete times,
/// the frame-to-window assignment, and the encoding parameters it was
/// produced under (needed to re-check it).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    pub delta: Nanos,
    pub ordering: OrderingMode,
    pub multi_period: bool,
    #[serde(with = "ports_serde")]
    pub ports: BTreeMap<LinkId, PortSchedule>,
    #[serde(with = "assignment_serde")]
    pub assignment: BTreeMap<FrameKey, u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective_value: Option<i64>,
}

impl Schedule {
    pub fn port(&self, link: &LinkId) -> Option<&PortSchedule> {
        self.ports.get(link)
    }

    /// The window a frame instance is assigned to, if any.
    pub fn assigned_window(&self, key: &FrameKey) -> Option<&Window> {
        let index = *self.assignment.get(key)?;
        self.ports.get(&key.link)?.window(index)
    }

    /// Frames assigned to a given window, in key order.
    pub fn frames_in_window<'a>(
        &'a self,
        link: &'a LinkId,
        index: u32,
    ) -> impl Iterator<Item = &'a FrameKey> + 'a {
        self.assignment
            .iter()
            .filter(move |(key, w)| &key.link == link && **w == index)
            .map(|(key, _)| key)
    }
}
