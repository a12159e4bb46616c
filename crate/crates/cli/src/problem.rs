//! Problem-file schema: one JSON document describing topology, streams and
//! encoder configuration.

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use gatesched_core::netmodel::{EdgeSpec, Nanos, Network, Stream, TopologyDescription};
use gatesched_core::schedule::{ArithmeticMode, ObjectiveKind, OrderingMode};
use gatesched_core::EncoderConfig;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub vertices: Vec<String>,
    pub edges: Vec<EdgeFile>,
    pub streams: Vec<StreamFile>,
    #[serde(default)]
    pub config: ConfigFile,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeFile {
    pub a: String,
    pub b: String,
    pub speed_bps: u64,
    #[serde(default)]
    pub wmax: Option<u32>,
    #[serde(default)]
    pub overhead_bytes: Option<u32>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StreamFile {
    pub id: String,
    /// Talker-first vertex path.
    pub route: Vec<String>,
    pub size_bytes: u32,
    pub period_ns: Nanos,
    pub e2e_ns: Nanos,
    pub jitter_ns: Nanos,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub delta_ns: Nanos,
    #[serde(default)]
    pub ordering: Option<String>,
    #[serde(default)]
    pub arithmetic: Option<String>,
    #[serde(default)]
    pub objective: Option<String>,
    #[serde(default)]
    pub multi_period: bool,
}

pub fn parse_ordering(name: &str) -> Result<OrderingMode> {
    Ok(match name {
        "seq" | "sequential" => OrderingMode::Sequential,
        "pairwise" => OrderingMode::Pairwise,
        other => bail!("unknown ordering `{other}` (expected seq|pairwise)"),
    })
}

pub fn parse_arithmetic(name: &str) -> Result<ArithmeticMode> {
    Ok(match name {
        "lin" | "linearized" => ArithmeticMode::Linearized,
        "nia" | "nonlinear" => ArithmeticMode::Nonlinear,
        other => bail!("unknown arithmetic `{other}` (expected lin|nia)"),
    })
}

pub fn parse_objective(name: &str) -> Result<ObjectiveKind> {
    Ok(match name {
        "none" => ObjectiveKind::None,
        "e2e" => ObjectiveKind::MinE2eSum,
        "jitter" => ObjectiveKind::MinJitterSum,
        other => bail!("unknown objective `{other}` (expected none|e2e|jitter)"),
    })
}

pub struct Problem {
    pub network: Network,
    pub streams: Vec<Stream>,
    pub encoder: EncoderConfig,
}

pub fn load_problem(path: &std::path::Path) -> Result<Problem> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read problem file {}", path.display()))?;
    let file: ProblemFile = serde_json::from_str(&text)
        .with_context(|| format!("cannot parse problem file {}", path.display()))?;

    let topo = TopologyDescription {
        vertices: file.vertices.iter().map(|v| v.as_str().into()).collect(),
        edges: file
            .edges
            .iter()
            .map(|e| {
                let mut spec = EdgeSpec::new(e.a.as_str(), e.b.as_str(), e.speed_bps);
                spec.wmax = e.wmax;
                spec.overhead_bytes = e.overhead_bytes;
                spec
            })
            .collect(),
    };
    let network = Network::build(&topo)?;

    let mut streams = Vec::new();
    for s in &file.streams {
        let path: Vec<&str> = s.route.iter().map(String::as_str).collect();
        streams.push(Stream::along(
            s.id.as_str(),
            &path,
            s.e2e_ns,
            s.jitter_ns,
            s.size_bytes,
            s.period_ns,
        )?);
    }

    let mut encoder = EncoderConfig {
        delta: file.config.delta_ns,
        multi_period: file.config.multi_period,
        ..EncoderConfig::default()
    };
    if let Some(name) = &file.config.ordering {
        encoder.ordering = parse_ordering(name)?;
    }
    if let Some(name) = &file.config.arithmetic {
        encoder.arithmetic = parse_arithmetic(name)?;
    }
    if let Some(name) = &file.config.objective {
        encoder.objective = parse_objective(name)?;
    }

    Ok(Problem { network, streams, encoder })
}
