//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 on runtime errors, 2 on usage errors.

pub mod output;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand as ClapSubcommand};

use crate::experiments::{
    run_allocation, run_failure, run_m_sweep, OccupationModel, ScenarioConfig, SweepPoint,
    TrialStats,
};
use crate::graph::{LinkId, NodeId, QosProfile};
use crate::routing::route;
use crate::scenario::{load_scenario, scenario_to_json};
use crate::stochastic::{sample_occupations, trial_rng, BetaParams};
use output::{format_real, write_report, Report};

pub const SEED_ENV: &str = "BACKHAUL_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    Allocate,
    Msweep,
    Failure,
    Route,
    Validate,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScenarioSource {
    Builtin,
    File(PathBuf),
}

impl From<&str> for ScenarioSource {
    fn from(s: &str) -> Self {
        if s == "builtin" {
            ScenarioSource::Builtin
        } else {
            ScenarioSource::File(PathBuf::from(s))
        }
    }
}

/// One or more values of `m`: `4`, `0,2,4` or `start:end:step` (inclusive).
#[derive(Debug, Clone, PartialEq)]
pub struct MValues(pub Vec<f64>);

impl FromStr for MValues {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let num = |t: &str| -> Result<f64, String> {
            let v: f64 = t.trim().parse().map_err(|_| format!("bad number {t:?}"))?;
            if v.is_finite() && v >= 0.0 {
                Ok(v)
            } else {
                Err(format!("m must be >= 0, got {t:?}"))
            }
        };
        let values = if s.contains(':') {
            let parts: Vec<&str> = s.split(':').collect();
            let (start, end, step) = match parts.as_slice() {
                [a, b] => (num(a)?, num(b)?, 1.0),
                [a, b, c] => (num(a)?, num(b)?, num(c)?),
                _ => return Err("range must be start:end[:step]".into()),
            };
            if step <= 0.0 || end < start {
                return Err("range needs step > 0 and end >= start".into());
            }
            let count = ((end - start) / step + 1e-9).floor() as usize;
            (0..=count).map(|n| start + n as f64 * step).collect()
        } else {
            s.split(',').map(num).collect::<Result<Vec<_>, _>>()?
        };
        Ok(MValues(values))
    }
}

fn parse_profile(s: &str) -> Result<QosProfile, String> {
    QosProfile::by_name(s).ok_or_else(|| format!("unknown profile {s:?} (expected p1 or p2)"))
}

/// Values given on the command line; each one replaces the scenario's.
#[derive(Debug, Clone, PartialEq, Default, Args)]
pub struct Overrides {
    /// Number of Monte Carlo trials.
    #[arg(long)]
    pub trials: Option<u32>,
    /// Master seed.
    #[arg(long, env = SEED_ENV)]
    pub seed: Option<u64>,
    /// Load exponent; a list or start:end:step range for msweep.
    #[arg(long)]
    pub m: Option<MValues>,
    #[arg(long)]
    pub m_step: Option<f64>,
    #[arg(long)]
    pub min_fragment: Option<f64>,
    /// Beta shape α of the occupation law.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Beta shape β of the occupation law.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Use the occupations stored in the topology instead of sampling.
    #[arg(long = "static", conflicts_with_all = ["alpha", "beta"])]
    pub static_occupation: bool,
    /// QoS profile: p1 (8 Mbps, 30 ms) or p2 (30 Mbps, 50 ms).
    #[arg(long, value_parser = parse_profile)]
    pub profile: Option<QosProfile>,
    /// Required rate in Mbps (overrides the profile's).
    #[arg(long)]
    pub rate: Option<f64>,
    /// Delay budget in ms (overrides the profile's).
    #[arg(long)]
    pub max_delay: Option<f64>,
    #[arg(long)]
    pub source: Option<NodeId>,
    #[arg(long)]
    pub destination: Option<NodeId>,
    /// Link in fault, e.g. 123 or 1-2-3. Repeatable.
    #[arg(long = "fail")]
    pub failed_links: Vec<LinkId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Command {
    pub subcommand: Subcommand,
    pub scenario: ScenarioSource,
    pub output: Option<PathBuf>,
    pub overrides: Overrides,
    /// `validate` only: write the fully expanded scenario.
    pub normalize: bool,
}

#[derive(Debug, Parser)]
#[command(
    name = "backhaul",
    version,
    about = "QoS-aware routing over hybrid backhaul multigraphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Debug, Args)]
struct Common {
    /// Scenario JSON file, or "builtin".
    #[arg(long, default_value = "builtin")]
    scenario: String,
    /// Where to write CSV (stdout when omitted).
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Debug, ClapSubcommand)]
enum Sub {
    /// Mean per-link traffic of one new flow.
    Allocate(Common),
    /// Violation probability and iterations versus m.
    Msweep(Common),
    /// Reallocation of the load of failed links.
    Failure(Common),
    /// A single routing decision.
    Route(Common),
    /// Check a scenario file.
    Validate {
        #[command(flatten)]
        common: Common,
        /// Write the fully expanded scenario JSON.
        #[arg(long)]
        normalize: bool,
    },
}

/// Usage errors carry clap's diagnostic; `exit()` prints it and exits
/// with status 2.
pub type UsageError = clap::Error;

pub fn parse_args<I, T>(argv: I) -> Result<Command, UsageError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv = std::iter::once(OsString::from("backhaul")).chain(argv.into_iter().map(Into::into));
    let cli = Cli::try_parse_from(argv)?;
    let (subcommand, common, normalize) = match cli.command {
        Sub::Allocate(c) => (Subcommand::Allocate, c, false),
        Sub::Msweep(c) => (Subcommand::Msweep, c, false),
        Sub::Failure(c) => (Subcommand::Failure, c, false),
        Sub::Route(c) => (Subcommand::Route, c, false),
        Sub::Validate { common, normalize } => (Subcommand::Validate, common, normalize),
    };
    if subcommand != Subcommand::Msweep {
        if let Some(MValues(ms)) = &common.overrides.m {
            if ms.len() != 1 {
                return Err(clap::Error::raw(
                    clap::error::ErrorKind::ValueValidation,
                    "--m takes a single value outside msweep\n",
                ));
            }
        }
    }
    Ok(Command {
        subcommand,
        scenario: ScenarioSource::from(common.scenario.as_str()),
        output: common.output,
        overrides: common.overrides,
        normalize,
    })
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Scenario(#[from] crate::scenario::ScenarioError),
    #[error(transparent)]
    Experiment(#[from] crate::experiments::ExperimentError),
    #[error(transparent)]
    Routing(#[from] crate::routing::RoutingError),
    #[error(transparent)]
    Stochastic(#[from] crate::stochastic::StochasticError),
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
}

impl Command {
    /// Scenario from the file (or built-in defaults) with flags applied.
    pub fn scenario_config(&self) -> Result<ScenarioConfig, CliError> {
        let mut cfg = match &self.scenario {
            ScenarioSource::Builtin => ScenarioConfig::default(),
            ScenarioSource::File(p) => load_scenario(p)?,
        };
        let o = &self.overrides;
        if let Some(t) = o.trials {
            cfg.trials = t;
        }
        if let Some(s) = o.seed {
            cfg.seed = s;
        }
        if let Some(MValues(ms)) = &o.m {
            if self.subcommand == Subcommand::Msweep {
                cfg.m_sweep = ms.clone();
            } else {
                cfg.routing.m_initial = ms[0];
            }
        }
        if let Some(step) = o.m_step {
            cfg.routing.m_step = step;
        }
        if let Some(min) = o.min_fragment {
            cfg.routing.min_fragment_mbps = min;
        }
        if o.static_occupation {
            cfg.occupation = OccupationModel::Static;
        } else if o.alpha.is_some() || o.beta.is_some() {
            let base = match cfg.occupation {
                OccupationModel::Beta(p) => p,
                OccupationModel::Static => BetaParams::UNIFORM,
            };
            cfg.occupation = OccupationModel::Beta(BetaParams::new(
                o.alpha.unwrap_or(base.alpha),
                o.beta.unwrap_or(base.beta),
            )?);
        }
        if let Some(p) = o.profile {
            cfg.qos = p;
        }
        if let Some(r) = o.rate {
            cfg.qos.rate_mbps = r;
        }
        if let Some(d) = o.max_delay {
            cfg.qos.max_delay_ms = d;
        }
        if let Some(s) = o.source {
            cfg.source = s;
        }
        if let Some(d) = o.destination {
            cfg.destination = d;
        }
        if !o.failed_links.is_empty() {
            cfg.failed_links = o.failed_links.clone();
        }
        if self.subcommand == Subcommand::Msweep && cfg.m_sweep.is_empty() {
            cfg.m_sweep = (0..=8).map(f64::from).collect();
        }
        if self.subcommand == Subcommand::Failure && cfg.failed_links.is_empty() {
            cfg.failed_links = vec![LinkId::new(1, 2, 3).expect("valid id")];
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Executes a parsed command. CSV goes to `--output` when given and to
/// `stdout` otherwise; the human-readable summary goes to `stdout` when the
/// CSV went to a file and to `stderr` otherwise.
pub fn run(cmd: &Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    let cfg = cmd.scenario_config()?;
    let report = match cmd.subcommand {
        Subcommand::Allocate => Report::Stats(run_allocation(&cfg)?),
        Subcommand::Failure => Report::Stats(run_failure(&cfg)?),
        Subcommand::Msweep => Report::Sweep(run_m_sweep(&cfg)?),
        Subcommand::Route => return run_route(&cfg, stdout),
        Subcommand::Validate => return run_validate(cmd, &cfg, stdout),
    };
    let summary = match &report {
        Report::Stats(s) => stats_summary(&cfg, s),
        Report::Sweep(p) => sweep_summary(p),
    };
    match &cmd.output {
        Some(path) => {
            output::emit_csv(&report, &cfg.topology, path)?;
            stdout.write_all(summary.as_bytes())?;
        }
        None => {
            write_report(&report, &cfg.topology, &mut *stdout)?;
            stderr.write_all(summary.as_bytes())?;
        }
    }
    Ok(())
}

fn run_route(cfg: &ScenarioConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let mut topo = cfg.topology.clone();
    for id in &cfg.failed_links {
        topo.set_up(*id, false).expect("validated link");
    }
    if let OccupationModel::Beta(p) = cfg.occupation {
        sample_occupations(&mut topo, p, &mut trial_rng(cfg.seed, 0))?;
    }
    writeln!(out, "link occupations:")?;
    for l in topo.links() {
        let state = if l.up { "" } else { " (down)" };
        writeln!(
            out,
            "  {} {:<8} o={}{state}",
            l.id,
            l.technology.label(),
            format_real(l.occupation)
        )?;
    }
    let result = route(
        &mut topo,
        cfg.source,
        cfg.destination,
        cfg.qos,
        &cfg.routing,
    )?;
    writeln!(
        out,
        "routed {} Mbps from {} to {} in {} fragment(s), {} iteration(s)",
        format_real(cfg.qos.rate_mbps),
        cfg.source,
        cfg.destination,
        result.fragments.len(),
        result.total_iterations
    )?;
    for (n, f) in result.fragments.iter().enumerate() {
        let hops: Vec<String> = f
            .path
            .iter()
            .map(|h| format!("({},{},{})", h.from, h.to, h.interface))
            .collect();
        writeln!(
            out,
            "  #{n}: {} Mbps via {} delay={} ms weight={} m={}",
            format_real(f.rate_mbps),
            hops.join(" "),
            format_real(f.sum_mean_delay_ms),
            format_real(f.sum_weight),
            format_real(f.m_used)
        )?;
    }
    Ok(())
}

fn run_validate(cmd: &Command, cfg: &ScenarioConfig, out: &mut dyn Write) -> Result<(), CliError> {
    if cmd.normalize {
        let json = scenario_to_json(cfg) + "\n";
        match &cmd.output {
            Some(path) => std::fs::write(path, json)?,
            None => out.write_all(json.as_bytes())?,
        }
        return Ok(());
    }
    writeln!(
        out,
        "ok: {} nodes, {} links, {} -> {}, r0={} Mbps, d0={} ms, m={}, {} trials, seed {}",
        cfg.topology.node_count(),
        cfg.topology.link_count(),
        cfg.source,
        cfg.destination,
        format_real(cfg.qos.rate_mbps),
        format_real(cfg.qos.max_delay_ms),
        format_real(cfg.routing.m_initial),
        cfg.trials,
        cfg.seed
    )?;
    Ok(())
}

fn stats_summary(cfg: &ScenarioConfig, stats: &TrialStats) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{} trials, r0={} Mbps, d0={} ms, m={}",
        stats.trials,
        format_real(cfg.qos.rate_mbps),
        format_real(cfg.qos.max_delay_ms),
        format_real(cfg.routing.m_initial)
    );
    for link in cfg.topology.links() {
        let _ = writeln!(
            s,
            "  {} {:<8} {:>12} Mbps",
            link.id,
            link.technology.label(),
            format_real(stats.traffic(link.id))
        );
    }
    let _ = writeln!(
        s,
        "mean iterations {}, infeasible {}, blocked {} of {} Mbps, violation {}",
        format_real(stats.mean_iterations),
        format_real(stats.infeasible_fraction),
        format_real(stats.blocked_load_mbps),
        format_real(stats.offered_load_mbps),
        format_real(stats.violation_probability)
    );
    s
}

fn sweep_summary(points: &[SweepPoint]) -> String {
    let mut s = String::from("     m  violation  iterations\n");
    for p in points {
        let _ = writeln!(
            s,
            "{:>6} {:>10} {:>11}",
            format_real(p.m),
            format_real(p.violation_probability),
            format_real(p.mean_iterations)
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn msweep_p1_range() {
        let cmd = parse_args([
            "msweep",
            "--profile",
            "p1",
            "--m",
            "0:8:1",
            "--trials",
            "5000",
        ])
        .unwrap();
        assert_eq!(cmd.subcommand, Subcommand::Msweep);
        assert_eq!(cmd.overrides.profile, Some(QosProfile::P1));
        let cfg = cmd.scenario_config().unwrap();
        assert_eq!(cfg.m_sweep, (0..=8).map(f64::from).collect::<Vec<_>>());
        assert_eq!(
            cfg.qos,
            QosProfile {
                rate_mbps: 8.0,
                max_delay_ms: 30.0
            }
        );
        assert_eq!(cfg.trials, 5000);
    }

    #[test]
    fn allocate_defaults() {
        let cmd = parse_args(["allocate"]).unwrap();
        assert_eq!(cmd.scenario, ScenarioSource::Builtin);
        assert_eq!(cmd.output, None);
        let cfg = cmd.scenario_config().unwrap();
        assert_eq!(cfg.routing.m_initial, 4.0);
        assert_eq!(cfg.trials, 5000);
        if std::env::var_os(SEED_ENV).is_none() {
            assert_eq!(cfg.seed, 0);
        }
    }

    #[test]
    fn usage_errors() {
        let err = parse_args(["allocate", "--profile", "p9"]).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(parse_args(["bogus"]).is_err());
        assert!(parse_args(["allocate", "--frobnicate"]).is_err());
        assert!(parse_args(["allocate", "--m", "0:4"]).is_err());
        assert!(parse_args(["allocate", "--m", "-1"]).is_err());
        assert!(parse_args(["allocate", "--fail", "12"]).is_err());
        assert!(parse_args(["allocate", "--static", "--alpha", "2"]).is_err());
    }

    #[test]
    fn m_values() {
        assert_eq!("4".parse::<MValues>().unwrap().0, vec![4.0]);
        assert_eq!("0,2.5".parse::<MValues>().unwrap().0, vec![0.0, 2.5]);
        assert_eq!(
            "0:1:0.25".parse::<MValues>().unwrap().0,
            vec![0.0, 0.25, 0.5, 0.75, 1.0]
        );
        assert_eq!("2:4".parse::<MValues>().unwrap().0, vec![2.0, 3.0, 4.0]);
        assert!("4:2".parse::<MValues>().is_err());
        assert!("0:4:0".parse::<MValues>().is_err());
    }

    #[test]
    fn overrides_apply() {
        let cmd = parse_args([
            "failure",
            "--profile",
            "p2",
            "--alpha",
            "2",
            "--fail",
            "1-2-3",
            "--fail",
            "232",
            "--m",
            "3",
            "--seed",
            "9",
        ])
        .unwrap();
        let cfg = cmd.scenario_config().unwrap();
        assert_eq!(cfg.qos, QosProfile::P2);
        assert_eq!(
            cfg.occupation,
            OccupationModel::Beta(BetaParams::new(2.0, 1.0).unwrap())
        );
        assert_eq!(cfg.failed_links.len(), 2);
        assert_eq!(cfg.routing.m_initial, 3.0);
        assert_eq!(cfg.seed, 9);
    }

    #[test]
    fn route_prints_idle_path() {
        let cmd = parse_args(["route", "--static", "--profile", "p1"]).unwrap();
        let (mut out, mut err) = (Vec::new(), Vec::new());
        run(&cmd, &mut out, &mut err).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(
            text.contains("(1,2,3) (2,3,2) (3,4,2) delay=15 ms"),
            "{text}"
        );
    }
}
