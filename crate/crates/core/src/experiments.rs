//! Monte Carlo experiments on top of the router.
//!
//! * [`run_allocation`]: where a single new flow's traffic lands, averaged
//!   over random occupation draws.
//! * [`run_m_sweep`]: delay-violation probability and iteration count as a
//!   function of the load exponent `m`.
//! * [`run_failure`]: rerouting the load of faulted links.
//!
//! Every trial draws from its own generator keyed by `(seed, trial index)`.
//! Trials may run in parallel (feature `parallel`); the reduction is always
//! done sequentially in trial order, so results are bit-identical across
//! runs and thread counts.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{builtin_topology, GraphError, LinkId, NodeId, QosProfile, Topology};
use crate::routing::{route, RouteResult, RoutingError, RoutingParams};
use crate::stochastic::{
    sample_instantaneous_delay, sample_occupations, trial_rng, BetaParams, StochasticError,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExperimentError {
    #[error("invalid scenario: {0}")]
    Config(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Stochastic(#[from] StochasticError),
    #[error(transparent)]
    Routing(#[from] RoutingError),
}

/// How link occupations are set at the start of each trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OccupationModel {
    /// Independent Beta(α, β) draw per up link.
    Beta(BetaParams),
    /// Keep the occupations stored in the topology.
    Static,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub topology: Topology,
    pub occupation: OccupationModel,
    pub qos: QosProfile,
    pub routing: RoutingParams,
    pub trials: u32,
    pub seed: u64,
    pub source: NodeId,
    pub destination: NodeId,
    pub failed_links: Vec<LinkId>,
    /// Law of the instantaneous hop delays, scaled to `[0, 2·d̄]`.
    pub delay_params: BetaParams,
    pub m_sweep: Vec<f64>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            topology: builtin_topology(),
            occupation: OccupationModel::Beta(BetaParams::UNIFORM),
            qos: QosProfile::P1,
            routing: RoutingParams::default(),
            trials: 5000,
            seed: 0,
            source: 1,
            destination: 4,
            failed_links: Vec::new(),
            delay_params: BetaParams::BELL,
            m_sweep: Vec::new(),
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.trials == 0 {
            return Err(ExperimentError::Config("trials must be at least 1".into()));
        }
        self.topology.validate()?;
        self.qos.validate()?;
        self.routing.validate()?;
        self.delay_params.validate()?;
        if let OccupationModel::Beta(p) = self.occupation {
            p.validate()?;
        }
        for node in [self.source, self.destination] {
            if !self.topology.has_node(node) {
                return Err(ExperimentError::Config(format!("unknown node {node}")));
            }
        }
        if self.source == self.destination {
            return Err(ExperimentError::Config(
                "source and destination must differ".into(),
            ));
        }
        for id in &self.failed_links {
            if self.topology.link(*id).is_none() {
                return Err(GraphError::UnknownLink(*id).into());
            }
        }
        if self.m_sweep.iter().any(|m| !(m.is_finite() && *m >= 0.0)) {
            return Err(ExperimentError::Config("m values must be >= 0".into()));
        }
        Ok(())
    }
}

/// Aggregated results of a batch of trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialStats {
    pub trials: u32,
    /// Mean rate added to each link per trial, Mbps.
    pub per_link_mean_traffic_mbps: BTreeMap<LinkId, f64>,
    /// Share of admitted flows whose sampled delay exceeded `d0`.
    pub violation_probability: f64,
    /// Dijkstra invocations per routed flow.
    pub mean_iterations: f64,
    /// Share of routed flows that came back infeasible.
    pub infeasible_fraction: f64,
    /// Mean unserved rate per trial, Mbps.
    pub blocked_load_mbps: f64,
    /// Mean offered rate per trial, Mbps.
    pub offered_load_mbps: f64,
    pub admitted_flows: u64,
    pub total_flows: u64,
}

impl TrialStats {
    pub fn traffic(&self, id: LinkId) -> f64 {
        self.per_link_mean_traffic_mbps
            .get(&id)
            .copied()
            .unwrap_or(0.0)
    }

    /// Blocked share of the offered load; 0 when nothing was offered.
    pub fn blocked_fraction(&self) -> f64 {
        if self.offered_load_mbps > 0.0 {
            self.blocked_load_mbps / self.offered_load_mbps
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub m: f64,
    pub violation_probability: f64,
    pub mean_iterations: f64,
    pub infeasible_fraction: f64,
    pub admitted_flows: u64,
}

/// What a single trial produced.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    /// Added rate per link, in the topology's link order.
    pub link_traffic: Vec<f64>,
    pub offered_mbps: f64,
    pub admitted_mbps: f64,
    pub blocked_mbps: f64,
    pub flows: u32,
    pub admitted_flows: u32,
    pub violated_flows: u32,
    pub iterations: u64,
    pub routes: Vec<RouteResult>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    Allocation,
    Failure,
}

/// One new flow per trial from `source` to `destination`.
pub fn run_allocation(config: &ScenarioConfig) -> Result<TrialStats, ExperimentError> {
    run(config, Mode::Allocation)
}

/// Runs [`run_allocation`] once per value in `config.m_sweep`, each with the
/// same trial seeds.
pub fn run_m_sweep(config: &ScenarioConfig) -> Result<Vec<SweepPoint>, ExperimentError> {
    if config.m_sweep.is_empty() {
        return Err(ExperimentError::Config("m sweep is empty".into()));
    }
    config.validate()?;
    config
        .m_sweep
        .iter()
        .map(|&m| {
            let mut cfg = config.clone();
            cfg.routing.m_initial = m;
            let stats = run_allocation(&cfg)?;
            Ok(SweepPoint {
                m,
                violation_probability: stats.violation_probability,
                mean_iterations: stats.mean_iterations,
                infeasible_fraction: stats.infeasible_fraction,
                admitted_flows: stats.admitted_flows,
            })
        })
        .collect()
}

/// Takes the links in `config.failed_links` down after the occupations are
/// drawn and reroutes the load they were carrying, as flows of
/// `config.qos.rate_mbps` each.
pub fn run_failure(config: &ScenarioConfig) -> Result<TrialStats, ExperimentError> {
    if config.failed_links.is_empty() {
        return Err(ExperimentError::Config(
            "failure experiment needs at least one failed link".into(),
        ));
    }
    run(config, Mode::Failure)
}

fn run(config: &ScenarioConfig, mode: Mode) -> Result<TrialStats, ExperimentError> {
    config.validate()?;
    let outcomes = collect_trials(config.trials, |t| run_trial(config, mode, t));
    Ok(reduce(config, &outcomes))
}

#[cfg(feature = "parallel")]
fn collect_trials<F>(trials: u32, f: F) -> Vec<TrialOutcome>
where
    F: Fn(u64) -> TrialOutcome + Sync + Send,
{
    use rayon::prelude::*;
    (0..trials as u64).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn collect_trials<F>(trials: u32, f: F) -> Vec<TrialOutcome>
where
    F: Fn(u64) -> TrialOutcome,
{
    (0..trials as u64).map(f).collect()
}

/// Runs trial number `trial` of a scenario. Exposed for inspection and
/// testing; the batch runners call it for every index.
pub fn run_allocation_trial(config: &ScenarioConfig, trial: u64) -> TrialOutcome {
    run_trial(config, Mode::Allocation, trial)
}

pub fn run_failure_trial(config: &ScenarioConfig, trial: u64) -> TrialOutcome {
    run_trial(config, Mode::Failure, trial)
}

fn run_trial(config: &ScenarioConfig, mode: Mode, trial: u64) -> TrialOutcome {
    let mut rng = trial_rng(config.seed, trial);
    let mut topo = config.topology.clone();

    if mode == Mode::Allocation {
        for id in &config.failed_links {
            topo.set_up(*id, false).expect("validated link");
        }
    } else {
        for id in &config.failed_links {
            topo.set_up(*id, true).expect("validated link");
        }
    }
    if let OccupationModel::Beta(p) = config.occupation {
        sample_occupations(&mut topo, p, &mut rng).expect("validated params");
    }

    let rate = config.qos.rate_mbps;
    let mut flows = Vec::new();
    let mut blocked = 0.0;
    let offered = match mode {
        Mode::Allocation => {
            flows.push(rate);
            rate
        }
        Mode::Failure => {
            let mut load = 0.0;
            for id in &config.failed_links {
                load += topo.link(*id).expect("validated link").carried_load();
                topo.set_up(*id, false).expect("validated link");
            }
            let whole = (load / rate).floor();
            flows.extend(std::iter::repeat_n(rate, whole as usize));
            let remainder = load - whole * rate;
            if remainder >= config.routing.min_fragment_mbps {
                flows.push(remainder);
            } else {
                blocked += remainder;
            }
            load
        }
    };

    let link_index: BTreeMap<LinkId, usize> =
        topo.link_ids().enumerate().map(|(n, id)| (id, n)).collect();
    let mut outcome = TrialOutcome {
        link_traffic: vec![0.0; link_index.len()],
        offered_mbps: offered,
        admitted_mbps: 0.0,
        blocked_mbps: 0.0,
        flows: flows.len() as u32,
        admitted_flows: 0,
        violated_flows: 0,
        iterations: 0,
        routes: Vec::new(),
    };

    // A rejected flow leaves the topology untouched, so an identical flow
    // right after it is rejected the same way.
    let mut last_rejected: Option<(f64, u32)> = None;
    for flow_rate in flows {
        if let Some((r, iters)) = last_rejected {
            if r == flow_rate {
                blocked += flow_rate;
                outcome.iterations += iters as u64;
                continue;
            }
        }
        let qos = QosProfile {
            rate_mbps: flow_rate,
            max_delay_ms: config.qos.max_delay_ms,
        };
        match route(
            &mut topo,
            config.source,
            config.destination,
            qos,
            &config.routing,
        ) {
            Ok(result) => {
                outcome.iterations += result.total_iterations as u64;
                outcome.admitted_flows += 1;
                outcome.admitted_mbps += result.total_rate();
                for (id, load) in result.link_loads() {
                    outcome.link_traffic[link_index[&id]] += load;
                }
                let mut violated = false;
                for frag in &result.fragments {
                    let mut delay = 0.0;
                    for id in frag.link_ids() {
                        let link = topo.link(id).expect("path link");
                        delay += sample_instantaneous_delay(link, config.delay_params, &mut rng);
                    }
                    violated |= delay > config.qos.max_delay_ms;
                }
                if violated {
                    outcome.violated_flows += 1;
                }
                outcome.routes.push(result);
                last_rejected = None;
            }
            Err(err) => {
                let iters = err.iterations();
                outcome.iterations += iters as u64;
                blocked += flow_rate;
                last_rejected = Some((flow_rate, iters));
            }
        }
    }
    outcome.blocked_mbps = blocked;
    outcome
}

fn reduce(config: &ScenarioConfig, outcomes: &[TrialOutcome]) -> TrialStats {
    let ids: Vec<LinkId> = config.topology.link_ids().collect();
    let mut traffic = vec![0.0; ids.len()];
    let (mut flows, mut admitted, mut violated, mut iterations) = (0u64, 0u64, 0u64, 0u64);
    let (mut blocked, mut offered) = (0.0, 0.0);
    for o in outcomes {
        for (sum, t) in traffic.iter_mut().zip(&o.link_traffic) {
            *sum += t;
        }
        flows += o.flows as u64;
        admitted += o.admitted_flows as u64;
        violated += o.violated_flows as u64;
        iterations += o.iterations;
        blocked += o.blocked_mbps;
        offered += o.offered_mbps;
    }
    let n = outcomes.len() as f64;
    let ratio = |a: u64, b: u64| if b > 0 { a as f64 / b as f64 } else { 0.0 };
    TrialStats {
        trials: outcomes.len() as u32,
        per_link_mean_traffic_mbps: ids
            .into_iter()
            .zip(traffic.into_iter().map(|t| t / n))
            .collect(),
        violation_probability: ratio(violated, admitted),
        mean_iterations: ratio(iterations, flows),
        infeasible_fraction: ratio(flows - admitted, flows),
        blocked_load_mbps: blocked / n,
        offered_load_mbps: offered / n,
        admitted_flows: admitted,
        total_flows: flows,
    }
}
