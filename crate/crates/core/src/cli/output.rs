use std::io::{self, Write};
use std::path::Path;

use crate::experiments::{SweepPoint, TrialStats};
use crate::graph::Topology;

/// Formats a real with six significant digits, `%g` style: trailing zeros
/// are dropped and scientific notation is used for very small or large
/// magnitudes.
pub fn format_real(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        return format!("{}e{exp}", trim_zeros(mantissa));
    }
    let decimals = (5 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Per-link allocation table: one row per link in `(i, j, k)` order, then
/// `infeasible_fraction` and `blocked_load_mbps` rows.
pub fn write_stats_csv<W: Write>(
    out: W,
    topology: &Topology,
    stats: &TrialStats,
) -> Result<(), csv::Error> {
    let mut w = csv::WriterBuilder::new().flexible(true).from_writer(out);
    w.write_record([
        "link_i",
        "link_j",
        "link_k",
        "technology",
        "mean_traffic_mbps",
    ])?;
    for link in topology.links() {
        let id = link.id;
        w.write_record([
            id.i().to_string(),
            id.j().to_string(),
            id.k().to_string(),
            link.technology.to_string(),
            format_real(stats.traffic(id)),
        ])?;
    }
    w.write_record([
        "infeasible_fraction".to_string(),
        format_real(stats.infeasible_fraction),
    ])?;
    w.write_record([
        "blocked_load_mbps".to_string(),
        format_real(stats.blocked_load_mbps),
    ])?;
    w.flush()?;
    Ok(())
}

pub fn write_sweep_csv<W: Write>(out: W, points: &[SweepPoint]) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["m", "violation_probability", "mean_iterations"])?;
    for p in points {
        w.write_record([
            format_real(p.m),
            format_real(p.violation_probability),
            format_real(p.mean_iterations),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Result of an experiment subcommand, ready to be written out.
#[derive(Debug, Clone, PartialEq)]
pub enum Report {
    Stats(TrialStats),
    Sweep(Vec<SweepPoint>),
}

/// Writes `report` as CSV to `path`.
pub fn emit_csv(report: &Report, topology: &Topology, path: &Path) -> io::Result<()> {
    let file = std::fs::File::create(path)?;
    let buf = io::BufWriter::new(file);
    write_report(report, topology, buf)
}

pub fn write_report<W: Write>(report: &Report, topology: &Topology, out: W) -> io::Result<()> {
    let res = match report {
        Report::Stats(s) => write_stats_csv(out, topology, s),
        Report::Sweep(p) => write_sweep_csv(out, p),
    };
    res.map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => io,
        other => io::Error::other(format!("{other:?}")),
    })
}
