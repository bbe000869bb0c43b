//! All-pairs routing on random cubic graphs and the squared-congestion
//! crossing estimate.

use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RouterError {
    #[error("cubic graphs need an even vertex count of at least 4, got {0}")]
    VertexCount(usize),
    #[error("no simple connected cubic graph after {0} attempts")]
    BudgetExhausted(usize),
}

/// Simple connected 3-regular graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CubicGraph {
    adj: Vec<[usize; 3]>,
}

const CUBIC_ATTEMPTS: usize = 10_000;

impl CubicGraph {
    pub fn vertex_count(&self) -> usize {
        self.adj.len()
    }

    pub fn neighbors(&self, v: usize) -> &[usize; 3] {
        &self.adj[v]
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (u, nb) in self.adj.iter().enumerate() {
            for &v in nb {
                if u < v {
                    out.push((u, v));
                }
            }
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        bfs(self, 0).iter().all(|&d| d != usize::MAX)
    }

    /// Degree 3, no loops, no repeated neighbors, symmetric.
    pub fn is_simple_cubic(&self) -> bool {
        self.adj.iter().enumerate().all(|(u, nb)| {
            nb.iter()
                .all(|&v| v != u && v < self.adj.len() && self.adj[v].contains(&u))
                && nb[0] != nb[1]
                && nb[1] != nb[2]
                && nb[0] != nb[2]
        })
    }
}

/// Configuration model: pairs 3g shuffled stubs and rejects loops, repeated
/// edges and disconnected results.
pub fn random_cubic_graph(g: usize, seed: u64) -> Result<CubicGraph, RouterError> {
    if g < 4 || g % 2 == 1 {
        return Err(RouterError::VertexCount(g));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stubs: Vec<usize> = (0..3 * g).map(|i| i / 3).collect();
    'attempt: for _ in 0..CUBIC_ATTEMPTS {
        stubs.shuffle(&mut rng);
        let mut adj: Vec<Vec<usize>> = vec![Vec::with_capacity(3); g];
        for pair in stubs.chunks(2) {
            let (u, v) = (pair[0], pair[1]);
            if u == v || adj[u].contains(&v) {
                continue 'attempt;
            }
            adj[u].push(v);
            adj[v].push(u);
        }
        let graph = CubicGraph {
            adj: adj
                .into_iter()
                .map(|mut a| {
                    a.sort_unstable();
                    [a[0], a[1], a[2]]
                })
                .collect(),
        };
        if graph.is_connected() {
            return Ok(graph);
        }
    }
    Err(RouterError::BudgetExhausted(CUBIC_ATTEMPTS))
}

fn bfs(graph: &CubicGraph, src: usize) -> Vec<usize> {
    let mut d = vec![usize::MAX; graph.vertex_count()];
    d[src] = 0;
    let mut q = VecDeque::from([src]);
    while let Some(u) = q.pop_front() {
        for &v in graph.neighbors(u) {
            if d[v] == usize::MAX {
                d[v] = d[u] + 1;
                q.push_back(v);
            }
        }
    }
    d
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoutingResult {
    pub congestion: Vec<f64>,
    pub max: f64,
    pub sum_sq: f64,
    /// n² / g² units per pair.
    pub flow_per_pair: f64,
    /// Σ over pairs of (path length + 1).
    pub path_vertices: u64,
}

/// Lexicographically smallest shortest path from `s` to `t`, both included.
fn lex_path(graph: &CubicGraph, dist: &[Vec<usize>], s: usize, t: usize) -> Vec<usize> {
    let mut path = vec![s];
    let mut cur = s;
    while cur != t {
        // Neighbors are sorted, so the first closer one is the smallest.
        cur = *graph
            .neighbors(cur)
            .iter()
            .find(|&&w| dist[t][w] + 1 == dist[t][cur])
            .expect("distances are consistent");
        path.push(cur);
    }
    path
}

/// Sends n²/g² units between every unordered vertex pair, each along its
/// lexicographically smallest shortest path from the lower endpoint.
pub fn route_all_pairs(graph: &CubicGraph, n: usize) -> RoutingResult {
    let g = graph.vertex_count();
    let dist: Vec<Vec<usize>> = (0..g).into_par_iter().map(|s| bfs(graph, s)).collect();
    let flow = (n as f64 / g as f64).powi(2);
    let (counts, total) = (0..g)
        .into_par_iter()
        .map(|s| {
            let mut local = vec![0u64; g];
            let mut total = 0u64;
            for t in (s + 1)..g {
                for v in lex_path(graph, &dist, s, t) {
                    local[v] += 1;
                    total += 1;
                }
            }
            (local, total)
        })
        .reduce(
            || (vec![0u64; g], 0u64),
            |(mut a, ta), (b, tb)| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                (a, ta + tb)
            },
        );
    let congestion: Vec<f64> = counts.iter().map(|&c| c as f64 * flow).collect();
    RoutingResult {
        max: congestion.iter().copied().fold(0.0, f64::max),
        sum_sq: congestion.iter().map(|c| c * c).sum(),
        congestion,
        flow_per_pair: flow,
        path_vertices: total,
    }
}

/// Σ_v con(v)².
pub fn congestion_crossing_estimate(result: &RoutingResult) -> f64 {
    result.sum_sq
}

pub const ROUTER_CSV_HEADER: &str = "g,n,seed,con_max,con_sum_sq,estimate,normalized";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RouterRecord {
    pub g: usize,
    pub n: usize,
    pub seed: u64,
    pub con_max: f64,
    pub con_sum_sq: f64,
    pub estimate: f64,
    /// estimate · g / (n⁴ log² g).
    pub normalized: f64,
}

impl RouterRecord {
    pub fn new(g: usize, n: usize, seed: u64, r: &RoutingResult) -> Self {
        let est = congestion_crossing_estimate(r);
        let l = (g as f64).ln();
        RouterRecord {
            g,
            n,
            seed,
            con_max: r.max,
            con_sum_sq: r.sum_sq,
            estimate: est,
            normalized: est * g as f64 / ((n as f64).powi(4) * l * l),
        }
    }

    /// con_max / (n² log g / g).
    pub fn fitted_constant(&self) -> f64 {
        let (g, n) = (self.g as f64, self.n as f64);
        self.con_max / (n * n * g.ln() / g)
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.g, self.n, self.seed, self.con_max, self.con_sum_sq, self.estimate, self.normalized
        )
    }
}
