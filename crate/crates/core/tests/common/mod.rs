//! Test-only oracles. Nothing here calls into the router's reduction or
//! Dijkstra code.

#![allow(dead_code)]

use backhaul::graph::{Link, LinkId, NodeId, NodeRole, Technology, Topology};
use rand::Rng;

/// Weight of one interface for a given rate, written out from the
/// definition: `o^m · d` behind the strict spare-capacity gate.
pub fn oracle_weight(link: &Link, rate: f64, m: f64) -> Option<f64> {
    let spare = if link.up {
        link.capacity_mbps * (1.0 - link.occupation)
    } else {
        0.0
    };
    if spare > rate {
        let factor = if m == 0.0 {
            1.0
        } else {
            link.occupation.powf(m)
        };
        Some(factor * link.mean_delay_ms)
    } else {
        None
    }
}

#[derive(Debug, Clone)]
pub struct Candidate {
    pub nodes: Vec<NodeId>,
    pub interfaces: Vec<u32>,
    pub weight: f64,
    pub delay: f64,
}

/// Every simple path from `src` to `dst` combined with every choice of
/// interface on each hop, keeping only gate-feasible combinations.
pub fn enumerate(topo: &Topology, src: NodeId, dst: NodeId, rate: f64, m: f64) -> Vec<Candidate> {
    let mut out = Vec::new();
    let mut stack = vec![src];
    walk(topo, dst, &mut stack, &mut out);
    let mut result = Vec::new();
    for nodes in out {
        let per_hop: Vec<Vec<(u32, f64, f64)>> = nodes
            .windows(2)
            .map(|w| {
                topo.links()
                    .filter(|l| {
                        let (i, j) = l.id.endpoints();
                        (i == w[0] && j == w[1]) || (i == w[1] && j == w[0])
                    })
                    .filter_map(|l| {
                        oracle_weight(l, rate, m).map(|wt| (l.id.k(), wt, l.mean_delay_ms))
                    })
                    .collect()
            })
            .collect();
        if per_hop.iter().any(|h| h.is_empty()) {
            continue;
        }
        let mut idx = vec![0usize; per_hop.len()];
        loop {
            let mut weight = 0.0;
            let mut delay = 0.0;
            let mut interfaces = Vec::new();
            for (h, &c) in per_hop.iter().zip(&idx) {
                weight += h[c].1;
                delay += h[c].2;
                interfaces.push(h[c].0);
            }
            result.push(Candidate {
                nodes: nodes.clone(),
                interfaces,
                weight,
                delay,
            });
            // odometer increment
            let mut pos = 0;
            loop {
                if pos == idx.len() {
                    break;
                }
                idx[pos] += 1;
                if idx[pos] < per_hop[pos].len() {
                    break;
                }
                idx[pos] = 0;
                pos += 1;
            }
            if pos == idx.len() {
                break;
            }
        }
    }
    result
}

fn walk(topo: &Topology, dst: NodeId, stack: &mut Vec<NodeId>, out: &mut Vec<Vec<NodeId>>) {
    let here = *stack.last().unwrap();
    if here == dst {
        out.push(stack.clone());
        return;
    }
    let mut next: Vec<NodeId> = topo
        .links()
        .filter(|l| l.id.touches(here))
        .map(|l| if l.id.i() == here { l.id.j() } else { l.id.i() })
        .collect();
    next.sort();
    next.dedup();
    for n in next {
        if !stack.contains(&n) {
            stack.push(n);
            walk(topo, dst, stack, out);
            stack.pop();
        }
    }
}

pub fn min_weight(cands: &[Candidate]) -> Option<f64> {
    cands.iter().map(|c| c.weight).min_by(|a, b| a.total_cmp(b))
}

/// Random multigraph with `2..=max_nodes` nodes and `1..=max_links` links.
/// Delays are integers half of the time so that weight ties show up.
pub fn random_topology<R: Rng>(rng: &mut R, max_nodes: u32, max_links: usize) -> Topology {
    let n = rng.random_range(2..=max_nodes);
    let mut t = Topology::new();
    for id in 1..=n {
        t.add_node(id, NodeRole::Other).unwrap();
    }
    let links = rng.random_range(1..=max_links);
    let integer_delays = rng.random_bool(0.5);
    for _ in 0..links {
        let a = rng.random_range(1..=n);
        let mut b = rng.random_range(1..=n);
        while b == a {
            b = rng.random_range(1..=n);
        }
        let k = t.links_between(a, b).count() as u32 + 1;
        let id = LinkId::new(a, b, k).unwrap();
        let delay = if integer_delays {
            rng.random_range(0..=40) as f64
        } else {
            rng.random_range(0.0..50.0)
        };
        let mut link =
            Link::new(id, Technology::Other, rng.random_range(1.0..2000.0), delay).unwrap();
        link.occupation = match rng.random_range(0..10) {
            0 => 0.0,
            1 => 1.0,
            _ => rng.random_range(0.0..1.0),
        };
        link.up = rng.random_range(0..12) != 0;
        t.add_link(link).unwrap();
    }
    t
}

/// Adaptive Simpson quadrature.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
    }
    #[allow(clippy::too_many_arguments)]
    fn rec(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        m: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, fa, m, fm, lm, flm, left, tol / 2.0, depth - 1)
            + rec(f, m, fm, b, fb, rm, frm, right, tol / 2.0, depth - 1)
    }
    let (fa, fb) = (f(a), f(b));
    let (m, fm, whole) = simpson(f, a, fa, b, fb);
    rec(f, a, fa, b, fb, m, fm, whole, tol, 50)
}

/// Tabulated CDF from a density, by Simpson's rule on each grid cell.
pub struct TabulatedCdf {
    grid: Vec<f64>,
    values: Vec<f64>,
}

impl TabulatedCdf {
    pub fn new(pdf: impl Fn(f64) -> f64, cells: usize) -> Self {
        let h = 1.0 / cells as f64;
        let mut grid = vec![0.0];
        let mut values = vec![0.0];
        let mut acc = 0.0;
        for c in 0..cells {
            let a = c as f64 * h;
            let b = a + h;
            acc += h / 6.0 * (pdf(a) + 4.0 * pdf(0.5 * (a + b)) + pdf(b));
            grid.push(b);
            values.push(acc);
        }
        TabulatedCdf { grid, values }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        let cells = self.grid.len() - 1;
        let pos = ((x * cells as f64) as usize).min(cells - 1);
        let (a, b) = (self.grid[pos], self.grid[pos + 1]);
        let t = (x - a) / (b - a);
        self.values[pos] + t * (self.values[pos + 1] - self.values[pos])
    }
}

/// Two-sided Kolmogorov–Smirnov statistic of `samples` against `cdf`.
pub fn ks_statistic(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(|a, b| a.total_cmp(b));
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Pearson correlation coefficient.
pub fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let cov: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let vx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let vy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}
