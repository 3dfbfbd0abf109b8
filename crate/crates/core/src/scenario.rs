//! JSON topology and scenario files.
//!
//! A topology file looks like
//!
//! ```json
//! {"nodes": [{"id": 1, "role": "RRH"}, {"id": 2, "role": "CRAN"}],
//!  "links": [{"i": 1, "j": 2, "k": 1, "technology": "xDSL",
//!             "capacity_mbps": 50, "mean_delay_ms": 20}]}
//! ```
//!
//! `occupation` (default 0) and `up` (default true) are optional per link.
//! A scenario file is a topology file plus an optional `experiment` block;
//! when `nodes` and `links` are both absent the built-in four-node
//! topology is used.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::experiments::{OccupationModel, ScenarioConfig};
use crate::graph::{
    builtin_topology, GraphError, Link, LinkId, NodeId, NodeRole, QosProfile, Technology, Topology,
};
use crate::routing::RoutingParams;
use crate::stochastic::BetaParams;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeSpec {
    pub id: NodeId,
    pub role: NodeRole,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkSpec {
    pub i: NodeId,
    pub j: NodeId,
    pub k: u32,
    pub technology: Technology,
    pub capacity_mbps: f64,
    pub mean_delay_ms: f64,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub occupation: f64,
    #[serde(default = "yes", skip_serializing_if = "is_true")]
    pub up: bool,
}

fn is_zero(v: &f64) -> bool {
    *v == 0.0
}

fn yes() -> bool {
    true
}

fn is_true(v: &bool) -> bool {
    *v
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TopologyFile {
    #[serde(default)]
    pub nodes: Vec<NodeSpec>,
    #[serde(default)]
    pub links: Vec<LinkSpec>,
}

impl TopologyFile {
    pub fn from_topology(topology: &Topology) -> Self {
        TopologyFile {
            nodes: topology
                .nodes()
                .map(|(id, role)| NodeSpec { id, role })
                .collect(),
            links: topology
                .links()
                .map(|l| LinkSpec {
                    i: l.id.i(),
                    j: l.id.j(),
                    k: l.id.k(),
                    technology: l.technology,
                    capacity_mbps: l.capacity_mbps,
                    mean_delay_ms: l.mean_delay_ms,
                    occupation: l.occupation,
                    up: l.up,
                })
                .collect(),
        }
    }

    pub fn to_topology(&self) -> Result<Topology, GraphError> {
        let mut topo = Topology::new();
        for n in &self.nodes {
            topo.add_node(n.id, n.role)?;
        }
        for l in &self.links {
            let id = LinkId::new(l.i, l.j, l.k)?;
            let mut link = Link::new(id, l.technology, l.capacity_mbps, l.mean_delay_ms)?;
            link.occupation = l.occupation;
            link.up = l.up;
            topo.add_link(link)?;
        }
        Ok(topo)
    }
}

pub fn parse_topology(json: &str) -> Result<Topology, ScenarioError> {
    let file: TopologyFile = serde_json::from_str(json)?;
    Ok(file.to_topology()?)
}

pub fn load_topology(path: &Path) -> Result<Topology, ScenarioError> {
    parse_topology(&read(path)?)
}

pub fn topology_to_json(topology: &Topology) -> String {
    serde_json::to_string_pretty(&TopologyFile::from_topology(topology)).expect("serializable")
}

/// The `experiment` block. Every field is optional; missing fields take
/// the [`ScenarioConfig`] defaults.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<NodeId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub destination: Option<NodeId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qos: Option<QosProfile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub occupation: Option<OccupationModel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_fragment_mbps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failed_links: Option<Vec<LinkId>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delay: Option<BetaParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_sweep: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ScenarioFile {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub nodes: Vec<NodeSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub links: Vec<LinkSpec>,
    #[serde(default)]
    pub experiment: ExperimentSpec,
}

impl ScenarioFile {
    pub fn into_config(self) -> Result<ScenarioConfig, ScenarioError> {
        let topology = if self.nodes.is_empty() && self.links.is_empty() {
            builtin_topology()
        } else {
            TopologyFile {
                nodes: self.nodes,
                links: self.links,
            }
            .to_topology()?
        };
        let d = ScenarioConfig::default();
        let e = self.experiment;
        let routing = RoutingParams {
            m_initial: e.m.unwrap_or(d.routing.m_initial),
            m_step: e.m_step.unwrap_or(d.routing.m_step),
            min_fragment_mbps: e.min_fragment_mbps.unwrap_or(d.routing.min_fragment_mbps),
        };
        Ok(ScenarioConfig {
            topology,
            occupation: e.occupation.unwrap_or(d.occupation),
            qos: e.qos.unwrap_or(d.qos),
            routing,
            trials: e.trials.unwrap_or(d.trials),
            seed: e.seed.unwrap_or(d.seed),
            source: e.source.unwrap_or(d.source),
            destination: e.destination.unwrap_or(d.destination),
            failed_links: e.failed_links.unwrap_or_default(),
            delay_params: e.delay.unwrap_or(d.delay_params),
            m_sweep: e.m_sweep.unwrap_or_default(),
        })
    }

    /// Fully spelled-out form of a config: explicit topology and every
    /// experiment field.
    pub fn from_config(config: &ScenarioConfig) -> Self {
        let topo = TopologyFile::from_topology(&config.topology);
        ScenarioFile {
            nodes: topo.nodes,
            links: topo.links,
            experiment: ExperimentSpec {
                source: Some(config.source),
                destination: Some(config.destination),
                qos: Some(config.qos),
                occupation: Some(config.occupation),
                m: Some(config.routing.m_initial),
                m_step: Some(config.routing.m_step),
                min_fragment_mbps: Some(config.routing.min_fragment_mbps),
                trials: Some(config.trials),
                seed: Some(config.seed),
                failed_links: Some(config.failed_links.clone()),
                delay: Some(config.delay_params),
                m_sweep: Some(config.m_sweep.clone()),
            },
        }
    }
}

pub fn parse_scenario(json: &str) -> Result<ScenarioConfig, ScenarioError> {
    let file: ScenarioFile = serde_json::from_str(json)?;
    file.into_config()
}

pub fn load_scenario(path: &Path) -> Result<ScenarioConfig, ScenarioError> {
    parse_scenario(&read(path)?)
}

pub fn scenario_to_json(config: &ScenarioConfig) -> String {
    serde_json::to_string_pretty(&ScenarioFile::from_config(config)).expect("serializable")
}

fn read(path: &Path) -> Result<String, ScenarioError> {
    std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    })
}
