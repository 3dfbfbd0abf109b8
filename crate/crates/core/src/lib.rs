//! Routing and simulation for hybrid wired/wireless backhaul networks.
//!
//! The network is a multigraph: each node pair may be joined by several
//! interfaces (fiber, xDSL, sub-6 GHz, mmWave, ...), each with a capacity,
//! a mean occupation and a mean delay. [`routing::route`] places a new flow
//! with a rate requirement and a delay budget, and [`experiments`] runs the
//! Monte Carlo studies built on it.

pub mod experiments;
pub mod graph;
pub mod routing;
pub mod scenario;
pub mod stochastic;

#[cfg(feature = "cli")]
pub mod cli;

pub use experiments::{ScenarioConfig, TrialStats};
pub use graph::{builtin_topology, Link, LinkId, NodeId, QosProfile, Topology};
pub use routing::{route, RouteResult, RoutingError, RoutingParams};
pub use stochastic::BetaParams;
