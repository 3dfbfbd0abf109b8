//! QoS-aware path selection over a backhaul multigraph.
//!
//! A flow with rate `r0` and delay budget `d0` is routed as follows:
//!
//! 1. Every link gets weight `o^m · d` if its spare capacity `c·(1 − o)`
//!    exceeds `r0`, and `+∞` otherwise.
//! 2. The multigraph is collapsed to a simple graph, keeping the cheapest
//!    interface per node pair.
//! 3. Dijkstra finds the minimum-weight path.
//! 4. If the path's summed mean delay is within `d0`, it is accepted.
//! 5. Otherwise `m` is lowered by `m_step` (clamped at 0) and the search
//!    repeats, so the weights lean more toward delay.
//! 6. Once `m` reaches 0, the rate is halved and each half is routed
//!    independently from step 1, with `m` reset.
//!
//! Accepted fragments are committed to the topology one at a time, so later
//! fragments see the load of earlier ones.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BinaryHeap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{GraphError, Link, LinkId, NodeId, QosProfile, Topology};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RoutingError {
    #[error("no admissible path for the requested QoS after {iterations} iterations")]
    Infeasible { iterations: u32 },
    #[error("no finite-weight path from {from} to {to}")]
    NoPath { from: NodeId, to: NodeId },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

impl RoutingError {
    /// Dijkstra invocations spent before giving up (0 for input errors).
    pub fn iterations(&self) -> u32 {
        match self {
            RoutingError::Infeasible { iterations } => *iterations,
            _ => 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoutingParams {
    /// Starting value of the load exponent `m`.
    pub m_initial: f64,
    /// Amount `m` is lowered by after a delay-budget miss.
    pub m_step: f64,
    /// Smallest rate a fragment may have.
    pub min_fragment_mbps: f64,
}

impl Default for RoutingParams {
    fn default() -> Self {
        RoutingParams {
            m_initial: 4.0,
            m_step: 1.0,
            min_fragment_mbps: 0.2,
        }
    }
}

impl RoutingParams {
    pub fn with_m(m: f64) -> Self {
        RoutingParams {
            m_initial: m,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), RoutingError> {
        if !(self.m_initial.is_finite() && self.m_initial >= 0.0) {
            return Err(RoutingError::InvalidInput(
                "m must be finite and >= 0".into(),
            ));
        }
        if !(self.m_step.is_finite() && self.m_step > 0.0) {
            return Err(RoutingError::InvalidInput("m_step must be > 0".into()));
        }
        if !(self.min_fragment_mbps.is_finite() && self.min_fragment_mbps > 0.0) {
            return Err(RoutingError::InvalidInput(
                "min_fragment_mbps must be > 0".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathHop {
    pub from: NodeId,
    pub to: NodeId,
    pub interface: u32,
}

impl PathHop {
    pub fn link_id(&self) -> Result<LinkId, GraphError> {
        LinkId::new(self.from, self.to, self.interface)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fragment {
    pub rate_mbps: f64,
    pub path: Vec<PathHop>,
    pub sum_mean_delay_ms: f64,
    pub sum_weight: f64,
    /// Exponent at which this fragment was admitted.
    pub m_used: f64,
}

impl Fragment {
    pub fn link_ids(&self) -> impl Iterator<Item = LinkId> + '_ {
        self.path
            .iter()
            .map(|h| h.link_id().expect("hops come from existing links"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteResult {
    pub fragments: Vec<Fragment>,
    /// Dijkstra invocations across all fragments.
    pub total_iterations: u32,
    pub qos: QosProfile,
}

impl RouteResult {
    /// Sum of fragment rates, correctly rounded. Fragment rates are
    /// `r0 / 2^d`, so a naive left-to-right sum can drift off `r0`.
    pub fn total_rate(&self) -> f64 {
        exact_sum(self.fragments.iter().map(|f| f.rate_mbps))
    }

    /// Rate placed on each link, summed over fragments.
    pub fn link_loads(&self) -> BTreeMap<LinkId, f64> {
        let mut loads = BTreeMap::new();
        for frag in &self.fragments {
            for id in frag.link_ids() {
                *loads.entry(id).or_insert(0.0) += frag.rate_mbps;
            }
        }
        loads
    }
}

/// Correctly rounded sum of finite non-negative values whose binary
/// exponents span less than 70 bits; falls back to compensated summation
/// otherwise.
fn exact_sum(values: impl Iterator<Item = f64> + Clone) -> f64 {
    // (mantissa, exponent) with value = mantissa · 2^exponent
    fn split(x: f64) -> (u64, i32) {
        let bits = x.to_bits();
        let exp = ((bits >> 52) & 0x7ff) as i32;
        let frac = bits & ((1u64 << 52) - 1);
        if exp == 0 {
            (frac, -1074)
        } else {
            (frac | (1u64 << 52), exp - 1075)
        }
    }
    let parts: Vec<(u64, i32)> = values.clone().filter(|x| *x != 0.0).map(split).collect();
    let finite = values.clone().all(|x| x.is_finite() && x >= 0.0);
    if parts.is_empty() || !finite {
        return values.sum();
    }
    let lo = parts.iter().map(|p| p.1).min().expect("non-empty");
    let hi = parts.iter().map(|p| p.1).max().expect("non-empty");
    if hi - lo >= 70 || parts.len() > 1 << 16 {
        let (mut sum, mut comp) = (0.0f64, 0.0f64);
        for x in values {
            let t = sum + x;
            comp += if sum.abs() >= x.abs() {
                (sum - t) + x
            } else {
                (x - t) + sum
            };
            sum = t;
        }
        return sum + comp;
    }
    let total: u128 = parts.iter().map(|&(m, e)| (m as u128) << (e - lo)).sum();
    total as f64 * 2f64.powi(lo)
}

/// `o^m · d` when the link is up and `c·(1 − o) > rate`, else `+∞`.
///
/// `o^0` is taken as 1 for every `o`, so `m = 0` gives pure delay weights.
pub fn link_weight(link: &Link, rate_mbps: f64, m: f64) -> f64 {
    if !link.up || link.residual_capacity() <= rate_mbps {
        return f64::INFINITY;
    }
    let load_factor = if m == 0.0 {
        1.0
    } else {
        link.occupation.powf(m)
    };
    load_factor * link.mean_delay_ms
}

/// Cheapest interface between a node pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedEdge {
    pub weight: f64,
    pub interface: u32,
    pub delay_ms: f64,
    /// Spare capacity of the selected interface.
    pub residual_mbps: f64,
}

impl ReducedEdge {
    // Lower weight, then lower delay, then tighter fit, then lower k.
    fn better_than(&self, other: &ReducedEdge) -> bool {
        self.weight
            .total_cmp(&other.weight)
            .then(self.delay_ms.total_cmp(&other.delay_ms))
            .then(self.residual_mbps.total_cmp(&other.residual_mbps))
            .then(self.interface.cmp(&other.interface))
            == Ordering::Less
    }
}

/// Simple graph obtained by keeping the minimum-weight interface of every
/// node pair. Pairs whose interfaces are all infinite carry no edge.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedGraph {
    nodes: Vec<NodeId>,
    edges: BTreeMap<(NodeId, NodeId), ReducedEdge>,
}

impl ReducedGraph {
    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn edge(&self, a: NodeId, b: NodeId) -> Option<&ReducedEdge> {
        let key = if a <= b { (a, b) } else { (b, a) };
        self.edges.get(&key)
    }

    pub fn edges(&self) -> impl Iterator<Item = ((NodeId, NodeId), &ReducedEdge)> + '_ {
        self.edges.iter().map(|(&k, e)| (k, e))
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }
}

pub fn reduce_multigraph(topology: &Topology, rate_mbps: f64, m: f64) -> ReducedGraph {
    let mut edges: BTreeMap<(NodeId, NodeId), ReducedEdge> = BTreeMap::new();
    for link in topology.links() {
        let weight = link_weight(link, rate_mbps, m);
        if weight.is_infinite() {
            continue;
        }
        let candidate = ReducedEdge {
            weight,
            interface: link.id.k(),
            delay_ms: link.mean_delay_ms,
            residual_mbps: link.residual_capacity(),
        };
        edges
            .entry(link.id.endpoints())
            .and_modify(|best| {
                if candidate.better_than(best) {
                    *best = candidate;
                }
            })
            .or_insert(candidate);
    }
    ReducedGraph {
        nodes: topology.node_ids().collect(),
        edges,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShortestPath {
    /// Visited nodes, source first. A single node when source = destination.
    pub nodes: Vec<NodeId>,
    pub sum_weight: f64,
    pub sum_delay_ms: f64,
}

impl ShortestPath {
    pub fn hop_count(&self) -> usize {
        self.nodes.len().saturating_sub(1)
    }

    /// Hops annotated with the interfaces chosen in `graph`.
    pub fn hops(&self, graph: &ReducedGraph) -> Vec<PathHop> {
        self.nodes
            .windows(2)
            .map(|w| PathHop {
                from: w[0],
                to: w[1],
                interface: graph.edge(w[0], w[1]).expect("edge on path").interface,
            })
            .collect()
    }
}

// Dijkstra label, ordered by weight, then delay, then hop count, then node
// sequence. Every component is monotone under path extension, so label
// setting stays exact with the composite order.
#[derive(Debug, Clone)]
struct Label {
    weight: f64,
    delay: f64,
    seq: Vec<NodeId>,
}

impl Label {
    fn key_cmp(&self, other: &Self) -> Ordering {
        self.weight
            .total_cmp(&other.weight)
            .then(self.delay.total_cmp(&other.delay))
            .then(self.seq.len().cmp(&other.seq.len()))
            .then_with(|| self.seq.cmp(&other.seq))
    }
}

impl PartialEq for Label {
    fn eq(&self, other: &Self) -> bool {
        self.key_cmp(other) == Ordering::Equal
    }
}

impl Eq for Label {}

impl PartialOrd for Label {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Label {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key_cmp(other)
    }
}

/// Minimum-sum-weight path by Dijkstra.
///
/// Ties on weight are broken by smaller summed delay, then fewer hops, then
/// the lexicographically smallest node sequence.
pub fn shortest_path(
    graph: &ReducedGraph,
    source: NodeId,
    destination: NodeId,
) -> Result<ShortestPath, RoutingError> {
    let index_of = |n: NodeId| graph.nodes.binary_search(&n).ok();
    let (Some(src), Some(dst)) = (index_of(source), index_of(destination)) else {
        return Err(RoutingError::InvalidInput(format!(
            "unknown endpoint {source} or {destination}"
        )));
    };

    let n = graph.nodes.len();
    let mut adjacency: Vec<Vec<(usize, f64, f64)>> = vec![Vec::new(); n];
    for (&(a, b), e) in &graph.edges {
        let (ia, ib) = (index_of(a).expect("node"), index_of(b).expect("node"));
        adjacency[ia].push((ib, e.weight, e.delay_ms));
        adjacency[ib].push((ia, e.weight, e.delay_ms));
    }

    let mut best: Vec<Option<Label>> = vec![None; n];
    let mut done = vec![false; n];
    let start = Label {
        weight: 0.0,
        delay: 0.0,
        seq: vec![source],
    };
    best[src] = Some(start.clone());
    let mut heap = BinaryHeap::new();
    heap.push(Reverse((start, src)));

    while let Some(Reverse((label, u))) = heap.pop() {
        if done[u] {
            continue;
        }
        done[u] = true;
        if u == dst {
            return Ok(ShortestPath {
                nodes: label.seq,
                sum_weight: label.weight,
                sum_delay_ms: label.delay,
            });
        }
        for &(v, w, d) in &adjacency[u] {
            if done[v] {
                continue;
            }
            let mut seq = label.seq.clone();
            seq.push(graph.nodes[v]);
            let next = Label {
                weight: label.weight + w,
                delay: label.delay + d,
                seq,
            };
            if best[v].as_ref().is_none_or(|b| next < *b) {
                best[v] = Some(next.clone());
                heap.push(Reverse((next, v)));
            }
        }
    }
    Err(RoutingError::NoPath {
        from: source,
        to: destination,
    })
}

/// Sum of the mean delays of the links along `path`.
pub fn path_delay(topology: &Topology, path: &[PathHop]) -> Result<f64, RoutingError> {
    let mut total = 0.0;
    for hop in path {
        let id = hop.link_id()?;
        let link = topology.link(id).ok_or(GraphError::UnknownLink(id))?;
        total += link.mean_delay_ms;
    }
    Ok(total)
}

/// Routes `qos.rate_mbps` from `source` to `destination`, committing the
/// admitted load to `topology`.
///
/// On error the topology is left exactly as it was.
pub fn route(
    topology: &mut Topology,
    source: NodeId,
    destination: NodeId,
    qos: QosProfile,
    params: &RoutingParams,
) -> Result<RouteResult, RoutingError> {
    qos.validate()?;
    params.validate()?;
    if source == destination {
        return Err(RoutingError::InvalidInput(
            "source and destination must differ".into(),
        ));
    }
    for node in [source, destination] {
        if !topology.has_node(node) {
            return Err(RoutingError::InvalidInput(format!("unknown node {node}")));
        }
    }

    let mut work = topology.clone();
    let mut router = Router {
        topology: &mut work,
        source,
        destination,
        qos,
        params,
        iterations: 0,
        fragments: Vec::new(),
    };
    match router.route_fragment(qos.rate_mbps) {
        Ok(()) => {
            let result = RouteResult {
                fragments: router.fragments,
                total_iterations: router.iterations,
                qos,
            };
            *topology = work;
            Ok(result)
        }
        Err(()) => Err(RoutingError::Infeasible {
            iterations: router.iterations,
        }),
    }
}

struct Router<'a> {
    topology: &'a mut Topology,
    source: NodeId,
    destination: NodeId,
    qos: QosProfile,
    params: &'a RoutingParams,
    iterations: u32,
    fragments: Vec<Fragment>,
}

impl Router<'_> {
    fn route_fragment(&mut self, rate: f64) -> Result<(), ()> {
        let mut m = self.params.m_initial;
        loop {
            let reduced = reduce_multigraph(self.topology, rate, m);
            self.iterations += 1;
            let Ok(found) = shortest_path(&reduced, self.source, self.destination) else {
                // The capacity gate does not depend on m, so lowering it
                // cannot open a path.
                break;
            };
            if found.sum_delay_ms <= self.qos.max_delay_ms {
                let path = found.hops(&reduced);
                for hop in &path {
                    let id = hop.link_id().expect("hop from existing link");
                    self.topology
                        .commit_load(id, rate)
                        .expect("capacity gate admits the rate");
                }
                self.fragments.push(Fragment {
                    rate_mbps: rate,
                    path,
                    sum_mean_delay_ms: found.sum_delay_ms,
                    sum_weight: found.sum_weight,
                    m_used: m,
                });
                return Ok(());
            }
            if m > 0.0 {
                m = (m - self.params.m_step).max(0.0);
            } else {
                break;
            }
        }

        let half = rate / 2.0;
        if half < self.params.min_fragment_mbps {
            return Err(());
        }
        self.route_fragment(half)?;
        self.route_fragment(rate - half)
    }
}
