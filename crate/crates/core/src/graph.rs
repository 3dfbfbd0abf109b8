//! Multigraph model of a hybrid backhaul network.
//!
//! Nodes are joined by any number of parallel links, one per radio access
//! technology (RAT) or wired interface. A link is identified by the unordered
//! node pair plus an interface index, written `ijk` in the usual notation
//! (`123` is interface 3 between nodes 1 and 2).

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type NodeId = u32;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("link {0} connects a node to itself")]
    SelfLoop(LinkId),
    #[error("link {0} references unknown node {1}")]
    UnknownNode(LinkId, NodeId),
    #[error("duplicate link {0}")]
    DuplicateLink(LinkId),
    #[error("node ids start at 1, got {0}")]
    InvalidNode(NodeId),
    #[error("duplicate node {0}")]
    DuplicateNode(NodeId),
    #[error("unknown link {0}")]
    UnknownLink(LinkId),
    #[error("invalid link {0}: {1}")]
    InvalidLink(LinkId, String),
    #[error("link {link} cannot carry {rate_mbps} Mbps (residual {residual_mbps} Mbps)")]
    OverCapacity {
        link: LinkId,
        rate_mbps: f64,
        residual_mbps: f64,
    },
    #[error("invalid link id {0:?}")]
    BadLinkId(String),
    #[error("invalid QoS profile: {0}")]
    InvalidQos(String),
}

/// Identifier of one interface between two nodes.
///
/// Always stored with `i < j`; the graph is undirected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "(NodeId, NodeId, u32)", into = "(NodeId, NodeId, u32)")]
pub struct LinkId {
    i: NodeId,
    j: NodeId,
    k: u32,
}

impl LinkId {
    /// Builds a canonical id, swapping the endpoints when needed.
    pub fn new(a: NodeId, b: NodeId, k: u32) -> Result<Self, GraphError> {
        let (i, j) = if a <= b { (a, b) } else { (b, a) };
        let id = LinkId { i, j, k };
        if a == b {
            return Err(GraphError::SelfLoop(id));
        }
        if k == 0 || i == 0 {
            return Err(GraphError::InvalidLink(
                id,
                "node and interface indices start at 1".into(),
            ));
        }
        Ok(id)
    }

    pub fn i(&self) -> NodeId {
        self.i
    }

    pub fn j(&self) -> NodeId {
        self.j
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn endpoints(&self) -> (NodeId, NodeId) {
        (self.i, self.j)
    }

    pub fn touches(&self, node: NodeId) -> bool {
        self.i == node || self.j == node
    }
}

impl TryFrom<(NodeId, NodeId, u32)> for LinkId {
    type Error = GraphError;

    fn try_from((a, b, k): (NodeId, NodeId, u32)) -> Result<Self, Self::Error> {
        LinkId::new(a, b, k)
    }
}

impl From<LinkId> for (NodeId, NodeId, u32) {
    fn from(id: LinkId) -> Self {
        (id.i, id.j, id.k)
    }
}

impl fmt::Display for LinkId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.i < 10 && self.j < 10 && self.k < 10 {
            write!(f, "{}{}{}", self.i, self.j, self.k)
        } else {
            write!(f, "{}-{}-{}", self.i, self.j, self.k)
        }
    }
}

/// Accepts `i-j-k`, `i,j,k`, or the compact three-digit form `ijk`.
impl FromStr for LinkId {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || GraphError::BadLinkId(s.to_string());
        let s = s.trim();
        let parts: Vec<&str> = if s.contains('-') {
            s.split('-').collect()
        } else if s.contains(',') {
            s.split(',').collect()
        } else if s.len() == 3 && s.chars().all(|c| c.is_ascii_digit()) {
            vec![&s[0..1], &s[1..2], &s[2..3]]
        } else {
            return Err(bad());
        };
        if parts.len() != 3 {
            return Err(bad());
        }
        let nums = parts
            .iter()
            .map(|p| p.trim().parse::<u32>().map_err(|_| bad()))
            .collect::<Result<Vec<_>, _>>()?;
        LinkId::new(nums[0], nums[1], nums[2])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Technology {
    Fiber,
    #[serde(rename = "xDSL")]
    Xdsl,
    Sub6GHz,
    MmWave,
    Other,
}

impl Technology {
    pub fn label(&self) -> &'static str {
        match self {
            Technology::Fiber => "Fiber",
            Technology::Xdsl => "xDSL",
            Technology::Sub6GHz => "Sub6GHz",
            Technology::MmWave => "MmWave",
            Technology::Other => "Other",
        }
    }
}

impl fmt::Display for Technology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum NodeRole {
    Rrh,
    Bbu,
    Cran,
    #[serde(rename = "Other")]
    Other,
}

/// One interface between two nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Link {
    pub id: LinkId,
    pub technology: Technology,
    /// c_ijk, Mbps.
    pub capacity_mbps: f64,
    /// o_ijk, fraction of capacity in use.
    pub occupation: f64,
    /// d_ijk, milliseconds.
    pub mean_delay_ms: f64,
    /// `false` when the link is in fault.
    pub up: bool,
}

impl Link {
    pub fn new(
        id: LinkId,
        technology: Technology,
        capacity_mbps: f64,
        mean_delay_ms: f64,
    ) -> Result<Self, GraphError> {
        let link = Link {
            id,
            technology,
            capacity_mbps,
            occupation: 0.0,
            mean_delay_ms,
            up: true,
        };
        link.validate()?;
        Ok(link)
    }

    pub fn validate(&self) -> Result<(), GraphError> {
        let bad = |msg: &str| Err(GraphError::InvalidLink(self.id, msg.to_string()));
        if !(self.capacity_mbps.is_finite() && self.capacity_mbps > 0.0) {
            return bad("capacity must be positive and finite");
        }
        if !(0.0..=1.0).contains(&self.occupation) {
            return bad("occupation must lie in [0, 1]");
        }
        if !(self.mean_delay_ms.is_finite() && self.mean_delay_ms >= 0.0) {
            return bad("mean delay must be non-negative and finite");
        }
        Ok(())
    }

    /// Spare rate `c·(1 − o)`, or 0 for a link in fault.
    pub fn residual_capacity(&self) -> f64 {
        if !self.up {
            return 0.0;
        }
        (self.capacity_mbps * (1.0 - self.occupation)).clamp(0.0, self.capacity_mbps)
    }

    /// Rate currently carried, `o·c`.
    pub fn carried_load(&self) -> f64 {
        self.occupation * self.capacity_mbps
    }
}

/// Free-function form of [`Link::residual_capacity`].
pub fn residual_capacity(link: &Link) -> f64 {
    link.residual_capacity()
}

/// A flow's rate requirement `r0` and delay budget `d0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QosProfile {
    pub rate_mbps: f64,
    pub max_delay_ms: f64,
}

impl QosProfile {
    /// Low-latency users: 8 Mbps within 30 ms.
    pub const P1: QosProfile = QosProfile {
        rate_mbps: 8.0,
        max_delay_ms: 30.0,
    };
    /// Throughput-oriented users: 30 Mbps within 50 ms.
    pub const P2: QosProfile = QosProfile {
        rate_mbps: 30.0,
        max_delay_ms: 50.0,
    };

    pub fn new(rate_mbps: f64, max_delay_ms: f64) -> Result<Self, GraphError> {
        let qos = QosProfile {
            rate_mbps,
            max_delay_ms,
        };
        qos.validate()?;
        Ok(qos)
    }

    pub fn validate(&self) -> Result<(), GraphError> {
        if !(self.rate_mbps.is_finite() && self.rate_mbps > 0.0) {
            return Err(GraphError::InvalidQos("rate must be positive".into()));
        }
        if self.max_delay_ms.is_nan() || self.max_delay_ms <= 0.0 {
            return Err(GraphError::InvalidQos(
                "maximum delay must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn by_name(name: &str) -> Option<QosProfile> {
        match name {
            "p1" | "P1" => Some(Self::P1),
            "p2" | "P2" => Some(Self::P2),
            _ => None,
        }
    }
}

/// Weighted multigraph of nodes and parallel links.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Topology {
    nodes: BTreeMap<NodeId, NodeRole>,
    links: BTreeMap<LinkId, Link>,
}

impl Topology {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, id: NodeId, role: NodeRole) -> Result<(), GraphError> {
        if id == 0 {
            return Err(GraphError::InvalidNode(id));
        }
        if self.nodes.insert(id, role).is_some() {
            return Err(GraphError::DuplicateNode(id));
        }
        Ok(())
    }

    pub fn add_link(&mut self, link: Link) -> Result<(), GraphError> {
        link.validate()?;
        let id = link.id;
        for n in [id.i, id.j] {
            if !self.nodes.contains_key(&n) {
                return Err(GraphError::UnknownNode(id, n));
            }
        }
        if self.links.contains_key(&id) {
            return Err(GraphError::DuplicateLink(id));
        }
        self.links.insert(id, link);
        Ok(())
    }

    pub fn nodes(&self) -> impl Iterator<Item = (NodeId, NodeRole)> + '_ {
        self.nodes.iter().map(|(&n, &r)| (n, r))
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.keys().copied()
    }

    pub fn has_node(&self, id: NodeId) -> bool {
        self.nodes.contains_key(&id)
    }

    pub fn role(&self, id: NodeId) -> Option<NodeRole> {
        self.nodes.get(&id).copied()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Links in `(i, j, k)` order.
    pub fn links(&self) -> impl Iterator<Item = &Link> + '_ {
        self.links.values()
    }

    pub fn links_mut(&mut self) -> impl Iterator<Item = &mut Link> + '_ {
        self.links.values_mut()
    }

    pub fn link_ids(&self) -> impl Iterator<Item = LinkId> + '_ {
        self.links.keys().copied()
    }

    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    pub fn link(&self, id: LinkId) -> Option<&Link> {
        self.links.get(&id)
    }

    pub fn link_mut(&mut self, id: LinkId) -> Option<&mut Link> {
        self.links.get_mut(&id)
    }

    /// Parallel links between `a` and `b`, in interface order.
    pub fn links_between(&self, a: NodeId, b: NodeId) -> impl Iterator<Item = &Link> + '_ {
        let (i, j) = if a <= b { (a, b) } else { (b, a) };
        let lo = LinkId { i, j, k: 0 };
        let hi = LinkId { i, j, k: u32::MAX };
        self.links.range(lo..=hi).map(|(_, l)| l)
    }

    pub fn set_up(&mut self, id: LinkId, up: bool) -> Result<(), GraphError> {
        let link = self.links.get_mut(&id).ok_or(GraphError::UnknownLink(id))?;
        link.up = up;
        Ok(())
    }

    pub fn set_occupation(&mut self, id: LinkId, occupation: f64) -> Result<(), GraphError> {
        let link = self.links.get_mut(&id).ok_or(GraphError::UnknownLink(id))?;
        if !(0.0..=1.0).contains(&occupation) {
            return Err(GraphError::InvalidLink(
                id,
                "occupation must lie in [0, 1]".into(),
            ));
        }
        link.occupation = occupation;
        Ok(())
    }

    /// Adds `rate_mbps` of traffic to a link, raising its occupation by
    /// `rate / capacity`.
    pub fn commit_load(&mut self, id: LinkId, rate_mbps: f64) -> Result<(), GraphError> {
        let link = self.links.get_mut(&id).ok_or(GraphError::UnknownLink(id))?;
        let residual = link.residual_capacity();
        if rate_mbps.is_nan() || rate_mbps < 0.0 || rate_mbps > residual {
            return Err(GraphError::OverCapacity {
                link: id,
                rate_mbps,
                residual_mbps: residual,
            });
        }
        link.occupation = (link.occupation + rate_mbps / link.capacity_mbps).min(1.0);
        Ok(())
    }

    /// Inverse of [`Topology::commit_load`].
    pub fn release_load(&mut self, id: LinkId, rate_mbps: f64) -> Result<(), GraphError> {
        let link = self.links.get_mut(&id).ok_or(GraphError::UnknownLink(id))?;
        link.occupation = (link.occupation - rate_mbps / link.capacity_mbps).max(0.0);
        Ok(())
    }

    /// Checks every structural invariant. Construction through
    /// `add_node`/`add_link` already enforces them; this is for values that
    /// were mutated through `links_mut`.
    pub fn validate(&self) -> Result<(), GraphError> {
        for (id, link) in &self.links {
            if *id != link.id {
                return Err(GraphError::InvalidLink(
                    *id,
                    "key does not match link id".into(),
                ));
            }
            link.validate()?;
            for n in [id.i, id.j] {
                if !self.nodes.contains_key(&n) {
                    return Err(GraphError::UnknownNode(*id, n));
                }
            }
        }
        Ok(())
    }
}

/// The four-node reference deployment: two RRHs (1, 2), a BBU (3) and the
/// C-RAN (4), joined by nine links.
///
/// | Technology | Links         | Capacity  | Mean delay |
/// |------------|---------------|-----------|------------|
/// | Fiber      | 231, 342      | 2000 Mbps | 5 ms       |
/// | xDSL       | 121, 131      | 50 Mbps   | 20 ms      |
/// | Sub-6GHz   | 122, 241, 341 | 200 Mbps  | 40 ms      |
/// | mmWave     | 123, 232      | 1000 Mbps | 5 ms       |
pub fn builtin_topology() -> Topology {
    let mut topo = Topology::new();
    for (id, role) in [
        (1, NodeRole::Rrh),
        (2, NodeRole::Rrh),
        (3, NodeRole::Bbu),
        (4, NodeRole::Cran),
    ] {
        topo.add_node(id, role).expect("distinct node ids");
    }
    type Row = (Technology, f64, f64, &'static [(NodeId, NodeId, u32)]);
    let table: [Row; 4] = [
        (Technology::Fiber, 2000.0, 5.0, &[(2, 3, 1), (3, 4, 2)]),
        (Technology::Xdsl, 50.0, 20.0, &[(1, 2, 1), (1, 3, 1)]),
        (
            Technology::Sub6GHz,
            200.0,
            40.0,
            &[(1, 2, 2), (2, 4, 1), (3, 4, 1)],
        ),
        (Technology::MmWave, 1000.0, 5.0, &[(1, 2, 3), (2, 3, 2)]),
    ];
    for (tech, capacity, delay, ids) in table {
        for &(i, j, k) in ids {
            let id = LinkId::new(i, j, k).expect("valid id");
            let link = Link::new(id, tech, capacity, delay).expect("valid link");
            topo.add_link(link).expect("unique link");
        }
    }
    topo
}
