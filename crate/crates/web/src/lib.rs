//! Browser bindings for the backhaul router. Every export takes a JSON
//! request and returns a JSON response, with `{"error": ...}` on failure.

use backhaul::experiments::{run_allocation, run_m_sweep, OccupationModel, ScenarioConfig};
use backhaul::graph::{LinkId, QosProfile};
use backhaul::routing::{route, RoutingParams};
use backhaul::stochastic::{sample_occupations, trial_rng, BetaParams};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

const MAX_TRIALS: u32 = 20_000;

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct Request {
    rate: f64,
    max_delay: f64,
    m: f64,
    alpha: f64,
    beta: f64,
    /// Keep every link idle instead of sampling occupations.
    idle: bool,
    seed: u64,
    trials: u32,
    failed: Vec<String>,
    m_values: Vec<f64>,
}

impl Default for Request {
    fn default() -> Self {
        Request {
            rate: QosProfile::P1.rate_mbps,
            max_delay: QosProfile::P1.max_delay_ms,
            m: RoutingParams::default().m_initial,
            alpha: 1.0,
            beta: 1.0,
            idle: false,
            seed: 0,
            trials: 2000,
            failed: Vec::new(),
            m_values: (0..=8).map(f64::from).collect(),
        }
    }
}

impl Request {
    fn config(&self) -> Result<ScenarioConfig, String> {
        if self.trials > MAX_TRIALS {
            return Err(format!("at most {MAX_TRIALS} trials in the browser"));
        }
        let failed = self
            .failed
            .iter()
            .map(|s| s.parse::<LinkId>().map_err(|e| e.to_string()))
            .collect::<Result<Vec<_>, _>>()?;
        let occupation = if self.idle {
            OccupationModel::Static
        } else {
            OccupationModel::Beta(
                BetaParams::new(self.alpha, self.beta).map_err(|e| e.to_string())?,
            )
        };
        let cfg = ScenarioConfig {
            occupation,
            qos: QosProfile {
                rate_mbps: self.rate,
                max_delay_ms: self.max_delay,
            },
            routing: RoutingParams::with_m(self.m),
            trials: self.trials,
            seed: self.seed,
            failed_links: failed,
            m_sweep: self.m_values.clone(),
            ..ScenarioConfig::default()
        };
        cfg.validate().map_err(|e| e.to_string())?;
        Ok(cfg)
    }
}

#[derive(Serialize)]
struct LinkView {
    id: String,
    technology: &'static str,
    capacity_mbps: f64,
    mean_delay_ms: f64,
    occupation: f64,
    up: bool,
}

fn respond(request: &str, op: impl FnOnce(&Request) -> Result<Value, String>) -> String {
    let parsed = if request.trim().is_empty() {
        Ok(Request::default())
    } else {
        serde_json::from_str::<Request>(request).map_err(|e| e.to_string())
    };
    let out = parsed
        .and_then(|r| op(&r))
        .unwrap_or_else(|e| json!({ "error": e }));
    out.to_string()
}

/// Draws one set of occupations and routes a single flow from 1 to 4.
#[wasm_bindgen]
pub fn route_once(request: &str) -> String {
    respond(request, |req| {
        let cfg = req.config()?;
        let mut topo = cfg.topology.clone();
        for id in &cfg.failed_links {
            topo.set_up(*id, false).map_err(|e| e.to_string())?;
        }
        if let OccupationModel::Beta(p) = cfg.occupation {
            sample_occupations(&mut topo, p, &mut trial_rng(cfg.seed, 0))
                .map_err(|e| e.to_string())?;
        }
        let links = link_views(&topo);
        let routed = route(
            &mut topo,
            cfg.source,
            cfg.destination,
            cfg.qos,
            &cfg.routing,
        );
        Ok(match routed {
            Ok(res) => json!({
                "links": links,
                "iterations": res.total_iterations,
                "fragments": res.fragments.iter().map(|f| json!({
                    "rate_mbps": f.rate_mbps,
                    "links": f.link_ids().map(|l| l.to_string()).collect::<Vec<_>>(),
                    "nodes": std::iter::once(f.path[0].from).chain(f.path.iter().map(|h| h.to)).collect::<Vec<_>>(),
                    "delay_ms": f.sum_mean_delay_ms,
                    "weight": f.sum_weight,
                    "m": f.m_used,
                })).collect::<Vec<_>>(),
            }),
            Err(e) => json!({
                "links": links,
                "iterations": e.iterations(),
                "fragments": [],
                "rejected": e.to_string(),
            }),
        })
    })
}

/// Mean per-link traffic of one new flow over many trials.
#[wasm_bindgen]
pub fn allocate(request: &str) -> String {
    respond(request, |req| {
        let cfg = req.config()?;
        let stats = run_allocation(&cfg).map_err(|e| e.to_string())?;
        Ok(json!({
            "links": cfg.topology.links().map(|l| json!({
                "id": l.id.to_string(),
                "technology": l.technology.label(),
                "mean_traffic_mbps": stats.traffic(l.id),
            })).collect::<Vec<_>>(),
            "violation_probability": stats.violation_probability,
            "mean_iterations": stats.mean_iterations,
            "infeasible_fraction": stats.infeasible_fraction,
        }))
    })
}

/// Violation probability and mean iterations for each value in `m_values`.
#[wasm_bindgen]
pub fn sweep(request: &str) -> String {
    respond(request, |req| {
        let cfg = req.config()?;
        let points = run_m_sweep(&cfg).map_err(|e| e.to_string())?;
        Ok(json!({ "points": points }))
    })
}

fn link_views(topo: &backhaul::Topology) -> Vec<LinkView> {
    topo.links()
        .map(|l| LinkView {
            id: l.id.to_string(),
            technology: l.technology.label(),
            capacity_mbps: l.capacity_mbps,
            mean_delay_ms: l.mean_delay_ms,
            occupation: l.occupation,
            up: l.up,
        })
        .collect()
}
