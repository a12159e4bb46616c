//! Gate control list export: per egress port, a cyclic list of gate state
//! changes covering exactly one hyperperiod.

use serde::Serialize;

use gatesched_core::netmodel::Nanos;
use gatesched_core::schedule::{PortSchedule, Schedule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GateState {
    Open,
    Closed,
}

#[derive(Debug, Clone, Serialize)]
pub struct GclEntry {
    pub offset_ns: Nanos,
    pub gate_state: GateState,
    pub duration_ns: Nanos,
}

#[derive(Debug, Clone, Serialize)]
pub struct PortGcl {
    pub src: String,
    pub dst: String,
    pub cycle_ns: Nanos,
    pub entries: Vec<GclEntry>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GclFile {
    pub ports: Vec<PortGcl>,
}

/// Entries for one port: open spans for its non-empty windows, closed spans
/// for the gaps, summing exactly to the cycle.
pub fn port_entries(port: &PortSchedule) -> Vec<GclEntry> {
    let mut windows: Vec<_> = port.windows.iter().filter(|w| !w.is_empty()).collect();
    windows.sort_by_key(|w| w.open);
    let mut entries = Vec::new();
    let mut cursor: Nanos = 0;
    for w in windows {
        if w.open > cursor {
            entries.push(GclEntry {
                offset_ns: cursor,
                gate_state: GateState::Closed,
                duration_ns: w.open - cursor,
            });
        }
        entries.push(GclEntry {
            offset_ns: w.open,
            gate_state: GateState::Open,
            duration_ns: w.size(),
        });
        cursor = w.close;
    }
    if cursor < port.hyperperiod {
        entries.push(GclEntry {
            offset_ns: cursor,
            gate_state: GateState::Closed,
            duration_ns: port.hyperperiod - cursor,
        });
    }
    entries
}

pub fn export(schedule: &Schedule) -> GclFile {
    let ports = schedule
        .ports
        .values()
        .map(|port| PortGcl {
            src: port.link.src.to_string(),
            dst: port.link.dst.to_string(),
            cycle_ns: port.hyperperiod,
            entries: port_entries(port),
        })
        .collect();
    GclFile { ports }
}
