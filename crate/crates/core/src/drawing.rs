//! Geodesic drawings of graphs on a surface, crossing counts and congestion.

use std::collections::HashMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geodesic::{
    path_from_tree, sample_uniform, GeodesicError, GeodesicPath, PortalGraph, SurfacePoint,
};
use crate::hyp::{orient2d, KleinPoint, PlanePoint};
use crate::surface::{tile, CombinatorialSurface, Slot};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DrawingError {
    #[error("vertices {0} and {1} sit at the same point")]
    DuplicatePoint(usize, usize),
    #[error("edge ({0}, {1}) is a loop or repeats an earlier edge")]
    NotSimple(usize, usize),
    #[error("edge endpoint {0} out of range")]
    VertexOutOfRange(usize),
    #[error("point {0} is not inside its face")]
    BadPoint(usize),
    #[error("path: {0}")]
    Path(#[from] GeodesicError),
    #[error("drawing document: {0}")]
    Document(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrawnEdge {
    pub u: usize,
    pub v: usize,
    pub path: GeodesicPath,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct SegRef {
    edge: u32,
    seg: u32,
}

/// Vertices at surface points and one geodesic path per edge, with segments
/// bucketed by face.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Drawing {
    pub faces: usize,
    pub vertices: Vec<SurfacePoint>,
    pub edges: Vec<DrawnEdge>,
    #[serde(skip)]
    buckets: Vec<Vec<SegRef>>,
}

#[derive(Deserialize)]
struct DrawingDoc {
    faces: usize,
    vertices: Vec<SurfacePoint>,
    edges: Vec<DrawnEdge>,
}

impl Drawing {
    fn assemble(faces: usize, vertices: Vec<SurfacePoint>, edges: Vec<DrawnEdge>) -> Self {
        let mut buckets = vec![Vec::new(); faces];
        for (e, edge) in edges.iter().enumerate() {
            for (i, seg) in edge.path.segments.iter().enumerate() {
                buckets[seg.face].push(SegRef {
                    edge: e as u32,
                    seg: i as u32,
                });
            }
        }
        Drawing {
            faces,
            vertices,
            edges,
            buckets,
        }
    }

    pub fn segment_count(&self) -> usize {
        self.buckets.iter().map(Vec::len).sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("drawing serializes")
    }

    /// Reads a drawing and checks its structural invariants.
    pub fn from_json(text: &str) -> Result<Self, DrawingError> {
        let doc: DrawingDoc =
            serde_json::from_str(text).map_err(|e| DrawingError::Document(e.to_string()))?;
        for edge in &doc.edges {
            for w in [edge.u, edge.v] {
                if w >= doc.vertices.len() {
                    return Err(DrawingError::VertexOutOfRange(w));
                }
            }
            if edge.path.segments.iter().any(|s| s.face >= doc.faces) {
                return Err(DrawingError::Document("segment face out of range".into()));
            }
            let ends = (edge.path.start(), edge.path.end());
            let (pu, pv) = (doc.vertices[edge.u], doc.vertices[edge.v]);
            if ends != (Some(pu), Some(pv)) && !(pu == pv && edge.path.segments.is_empty()) {
                return Err(DrawingError::Document(format!(
                    "path of edge ({}, {}) does not join its vertices",
                    edge.u, edge.v
                )));
            }
        }
        Ok(Drawing::assemble(doc.faces, doc.vertices, doc.edges))
    }
}

/// Draws `edges` with vertices at `points`, every edge a shortest path.
pub fn draw_graph(
    surface: &CombinatorialSurface,
    graph: &PortalGraph,
    edges: &[(usize, usize)],
    points: Vec<SurfacePoint>,
) -> Result<Drawing, DrawingError> {
    let n = points.len();
    for (i, p) in points.iter().enumerate() {
        if p.face >= surface.faces() || !p.pos().is_valid() || !tile().contains(p.pos(), 1e-12) {
            return Err(DrawingError::BadPoint(i));
        }
    }
    let mut keys: Vec<(usize, u64, u64, usize)> = points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let k = p.key();
            (k.0, k.1, k.2, i)
        })
        .collect();
    keys.sort_unstable();
    for w in keys.windows(2) {
        if (w[0].0, w[0].1, w[0].2) == (w[1].0, w[1].1, w[1].2) {
            return Err(DrawingError::DuplicatePoint(
                w[0].3.min(w[1].3),
                w[0].3.max(w[1].3),
            ));
        }
    }
    let mut seen = std::collections::HashSet::new();
    for &(u, v) in edges {
        for w in [u, v] {
            if w >= n {
                return Err(DrawingError::VertexOutOfRange(w));
            }
        }
        if u == v || !seen.insert((u.min(v), u.max(v))) {
            return Err(DrawingError::NotSimple(u, v));
        }
    }

    // One portal tree per canonical source, exactly as `shortest_path` does.
    let mut by_source: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (e, &(u, v)) in edges.iter().enumerate() {
        let src = if points[u].key() < points[v].key() { u } else { v };
        by_source[src].push(e);
    }
    let computed: Vec<Vec<(usize, GeodesicPath)>> = by_source
        .par_iter()
        .enumerate()
        .filter(|(_, list)| !list.is_empty())
        .map(|(src, list)| {
            let tree = graph.tree_from(surface, points[src]);
            list.iter()
                .map(|&e| {
                    let (u, v) = edges[e];
                    let dst = if u == src { v } else { u };
                    let path = path_from_tree(surface, &tree, points[dst])?;
                    let path = if u == src { path } else { path.reversed(surface) };
                    Ok((e, path))
                })
                .collect::<Result<Vec<_>, GeodesicError>>()
        })
        .collect::<Result<Vec<_>, GeodesicError>>()?;
    let mut paths: Vec<Option<GeodesicPath>> = vec![None; edges.len()];
    for (e, p) in computed.into_iter().flatten() {
        paths[e] = Some(p);
    }
    let drawn = edges
        .iter()
        .zip(paths)
        .map(|(&(u, v), p)| DrawnEdge {
            u,
            v,
            path: p.expect("every edge routed"),
        })
        .collect();
    Ok(Drawing::assemble(surface.faces(), points, drawn))
}

/// Edges of the complete graph on `n` vertices, lexicographic.
pub fn complete_graph_edges(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect()
}

/// `n` uniform points joined pairwise by shortest paths.
pub fn random_geometric_drawing<R: Rng + ?Sized>(
    surface: &CombinatorialSurface,
    graph: &PortalGraph,
    n: usize,
    rng: &mut R,
) -> Result<Drawing, DrawingError> {
    let points: Vec<SurfacePoint> = (0..n).map(|_| sample_uniform(surface, rng)).collect();
    draw_graph(surface, graph, &complete_graph_edges(n), points)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossingReport {
    pub total: u64,
    pub per_face: Vec<u64>,
    /// Touching or overlapping segment pairs; never counted as crossings.
    pub degenerate_events: u64,
    /// Pairs of edges that cross more than once.
    pub multi_crossing_pairs: u64,
}

/// Which side of the reference triangle `k` lies on, if any.
fn boundary_side(k: KleinPoint) -> Option<usize> {
    let kv = tile().klein_vertices();
    (0..3).find(|&s| orient2d(kv[s], kv[(s + 1) % 3], k).abs() < 1e-12)
}

enum PairKind {
    Skip,
    Cross,
    Degenerate,
    Apart,
}

fn classify(
    drawing: &Drawing,
    a: SegRef,
    b: SegRef,
    sa: (KleinPoint, KleinPoint),
    sb: (KleinPoint, KleinPoint),
    face: usize,
) -> PairKind {
    if a.edge == b.edge {
        return PairKind::Skip;
    }
    let ea = &drawing.edges[a.edge as usize];
    let eb = &drawing.edges[b.edge as usize];
    // A shared graph vertex inside this face: chords from one point meet
    // only there.
    for w in [ea.u, ea.v] {
        if (w == eb.u || w == eb.v) && drawing.vertices[w].face == face {
            let p = drawing.vertices[w].pos();
            let touches = |seg: SegRef, e: &DrawnEdge| {
                let s = e.path.segments[seg.seg as usize];
                s.entry == p || s.exit == p
            };
            if touches(a, ea) && touches(b, eb) {
                return PairKind::Skip;
            }
        }
    }
    let o1 = orient2d(sa.0, sa.1, sb.0);
    let o2 = orient2d(sa.0, sa.1, sb.1);
    let o3 = orient2d(sb.0, sb.1, sa.0);
    let o4 = orient2d(sb.0, sb.1, sa.1);
    if o1 == 0.0 || o2 == 0.0 || o3 == 0.0 || o4 == 0.0 {
        return PairKind::Degenerate;
    }
    if (o1 > 0.0) != (o2 > 0.0) && (o3 > 0.0) != (o4 > 0.0) {
        PairKind::Cross
    } else {
        PairKind::Apart
    }
}

fn klein_of(drawing: &Drawing, r: SegRef) -> (KleinPoint, KleinPoint) {
    let s = drawing.edges[r.edge as usize].path.segments[r.seg as usize];
    (s.entry.to_klein(), s.exit.to_klein())
}

/// Counts proper crossings face by face in the Klein chart.
pub fn count_crossings(surface: &CombinatorialSurface, drawing: &Drawing) -> CrossingReport {
    // (crossings, degenerate events, crossing edge pairs) per face.
    type FaceCount = (u64, u64, Vec<(u32, u32)>);
    let per: Vec<FaceCount> = (0..drawing.faces)
        .into_par_iter()
        .map(|face| {
            let bucket = &drawing.buckets[face];
            let chords: Vec<_> = bucket.iter().map(|&r| klein_of(drawing, r)).collect();
            let mut crossings = 0;
            let mut degenerate = 0;
            let mut pairs = Vec::new();
            for i in 0..bucket.len() {
                for j in (i + 1)..bucket.len() {
                    match classify(drawing, bucket[i], bucket[j], chords[i], chords[j], face) {
                        PairKind::Cross => {
                            crossings += 1;
                            let (x, y) = (bucket[i].edge, bucket[j].edge);
                            pairs.push((x.min(y), x.max(y)));
                        }
                        PairKind::Degenerate => {
                            if owns_touch(surface, face, chords[i], chords[j]) {
                                degenerate += 1;
                            }
                        }
                        PairKind::Skip | PairKind::Apart => {}
                    }
                }
            }
            (crossings, degenerate, pairs)
        })
        .collect();
    let mut report = CrossingReport {
        total: 0,
        per_face: Vec::with_capacity(drawing.faces),
        degenerate_events: 0,
        multi_crossing_pairs: 0,
    };
    let mut counts: HashMap<(u32, u32), u32> = HashMap::new();
    for (c, d, pairs) in per {
        report.total += c;
        report.per_face.push(c);
        report.degenerate_events += d;
        for p in pairs {
            *counts.entry(p).or_default() += 1;
        }
    }
    report.multi_crossing_pairs = counts.values().filter(|&&c| c > 1).count() as u64;
    report
}

/// A touch on a triangulation edge is seen from both incident faces; only
/// the lower slot of that edge reports it.
fn owns_touch(
    surface: &CombinatorialSurface,
    face: usize,
    a: (KleinPoint, KleinPoint),
    b: (KleinPoint, KleinPoint),
) -> bool {
    let shared = [a.0, a.1].into_iter().find(|p| *p == b.0 || *p == b.1);
    match shared.and_then(boundary_side) {
        Some(side) => {
            let slot = Slot::new(face, side);
            slot < surface.partner(slot).slot
        }
        None => true,
    }
}

/// Reference count over every pair of segments in the drawing, with
/// orientation signs taken from hyperboloid-model determinants.
pub fn count_crossings_naive(drawing: &Drawing) -> (u64, u64) {
    fn lift(p: PlanePoint) -> [f64; 3] {
        let r2 = p.x * p.x + p.y * p.y;
        let d = 1.0 - r2;
        [(1.0 + r2) / d, 2.0 * p.x / d, 2.0 * p.y / d]
    }
    fn det(a: [f64; 3], b: [f64; 3], c: [f64; 3]) -> f64 {
        a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0])
            + a[2] * (b[0] * c[1] - b[1] * c[0])
    }
    struct Seg {
        edge: usize,
        face: usize,
        a: [f64; 3],
        b: [f64; 3],
        pa: PlanePoint,
        pb: PlanePoint,
    }
    let mut all = Vec::new();
    for (e, edge) in drawing.edges.iter().enumerate() {
        for s in &edge.path.segments {
            all.push(Seg {
                edge: e,
                face: s.face,
                a: lift(s.entry),
                b: lift(s.exit),
                pa: s.entry,
                pb: s.exit,
            });
        }
    }
    let mut crossings = 0;
    let mut degenerate = 0;
    for i in 0..all.len() {
        for j in (i + 1)..all.len() {
            let (x, y) = (&all[i], &all[j]);
            if x.edge == y.edge || x.face != y.face {
                continue;
            }
            let (ex, ey) = (&drawing.edges[x.edge], &drawing.edges[y.edge]);
            let common = [ex.u, ex.v]
                .into_iter()
                .filter(|w| *w == ey.u || *w == ey.v)
                .any(|w| {
                    let v = drawing.vertices[w];
                    v.face == x.face
                        && (x.pa == v.pos() || x.pb == v.pos())
                        && (y.pa == v.pos() || y.pb == v.pos())
                });
            if common {
                continue;
            }
            let s1 = det(x.a, x.b, y.a);
            let s2 = det(x.a, x.b, y.b);
            let s3 = det(y.a, y.b, x.a);
            let s4 = det(y.a, y.b, x.b);
            if s1 == 0.0 || s2 == 0.0 || s3 == 0.0 || s4 == 0.0 {
                degenerate += 1;
            } else if s1.signum() != s2.signum() && s3.signum() != s4.signum() {
                crossings += 1;
            }
        }
    }
    (crossings, degenerate)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CongestionReport {
    pub per_face: Vec<u64>,
    pub max: u64,
    pub sum: u64,
    pub sum_sq: u64,
    /// Σ con(T)·(con(T) − 1)/2: the number of segment pairs sharing a face.
    pub pair_bound: u64,
}

pub fn congestion(drawing: &Drawing) -> CongestionReport {
    let per_face: Vec<u64> = drawing.buckets.iter().map(|b| b.len() as u64).collect();
    CongestionReport {
        max: per_face.iter().copied().max().unwrap_or(0),
        sum: per_face.iter().sum(),
        sum_sq: per_face.iter().map(|c| c * c).sum(),
        pair_bound: per_face.iter().map(|c| c * c.saturating_sub(1) / 2).sum(),
        per_face,
    }
}

/// max con(T)² · F.
pub fn congestion_bound(drawing: &Drawing) -> u64 {
    let c = congestion(drawing);
    c.max * c.max * drawing.faces as u64
}

/// Per-trial seed: splitmix64 applied to the master seed plus the trial
/// counter times the golden-ratio increment.
pub fn trial_seed(master: u64, trial: u64) -> u64 {
    let mut z = master.wrapping_add(trial.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub const CSV_HEADER: &str = "surface_id,g,F,n,trial,seed,crossings,con_max,con_sum,degenerate_events";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub surface_id: String,
    pub g: usize,
    #[serde(rename = "F")]
    pub faces: usize,
    pub n: usize,
    pub trial: u64,
    pub seed: u64,
    pub crossings: u64,
    pub con_max: u64,
    pub con_sum: u64,
    pub degenerate_events: u64,
}

impl ExperimentRecord {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.surface_id,
            self.g,
            self.faces,
            self.n,
            self.trial,
            self.seed,
            self.crossings,
            self.con_max,
            self.con_sum,
            self.degenerate_events
        )
    }

    /// cr · g / (n⁴ log²(g + 1)).
    pub fn normalized(&self) -> f64 {
        let g = self.g as f64;
        let l = (g + 1.0).ln();
        self.crossings as f64 * g / ((self.n as f64).powi(4) * l * l)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSummary {
    pub records: Vec<ExperimentRecord>,
    pub mean: f64,
    pub std: f64,
    /// Edge pairs crossing more than once, summed over trials.
    pub multi_crossing_pairs: u64,
}

/// Mean and sample standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    use statrs::statistics::Statistics;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.mean();
    let std = if xs.len() > 1 { xs.std_dev() } else { 0.0 };
    (mean, std)
}

/// Repeated random drawings of K_n. Trial `t` uses `trial_seed(master, t)`.
pub fn expectation_experiment(
    surface: &CombinatorialSurface,
    surface_id: &str,
    graph: &PortalGraph,
    n: usize,
    trials: u64,
    master_seed: u64,
) -> Result<ExperimentSummary, DrawingError> {
    let out: Vec<(ExperimentRecord, u64)> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let seed = trial_seed(master_seed, t);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let d = random_geometric_drawing(surface, graph, n, &mut rng)?;
            let cr = count_crossings(surface, &d);
            let con = congestion(&d);
            assert!(cr.total <= con.pair_bound);
            assert!(con.pair_bound <= con.max * con.max * surface.faces() as u64);
            Ok((
                ExperimentRecord {
                    surface_id: surface_id.to_string(),
                    g: surface.genus(),
                    faces: surface.faces(),
                    n,
                    trial: t,
                    seed,
                    crossings: cr.total,
                    con_max: con.max,
                    con_sum: con.sum,
                    degenerate_events: cr.degenerate_events,
                },
                cr.multi_crossing_pairs,
            ))
        })
        .collect::<Result<_, DrawingError>>()?;
    let xs: Vec<f64> = out.iter().map(|(r, _)| r.crossings as f64).collect();
    let (mean, std) = mean_std(&xs);
    Ok(ExperimentSummary {
        multi_crossing_pairs: out.iter().map(|(_, m)| m).sum(),
        records: out.into_iter().map(|(r, _)| r).collect(),
        mean,
        std,
    })
}
