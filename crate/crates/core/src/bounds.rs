//! Dense-subgraph and metric-ball lemmas as executable checks.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, HashSet};

use serde::Serialize;
use thiserror::Error;

use crate::drawing::Drawing;
use crate::geodesic::SurfacePoint;
use crate::hyp::{Isometry, KleinPoint, PlanePoint};
use crate::surface::{tile, CombinatorialSurface, Corner, Slot};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("loop at vertex {0}")]
    Loop(usize),
    #[error("edge ({0}, {1}) listed twice")]
    MultiEdge(usize, usize),
    #[error("vertex {0} out of range")]
    OutOfRange(usize),
}

/// Undirected graph without loops or multiple edges.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SimpleGraph {
    n: usize,
    edges: Vec<(usize, usize)>,
    #[serde(skip)]
    adj: Vec<Vec<usize>>,
}

impl SimpleGraph {
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        let mut seen = HashSet::new();
        let mut adj = vec![Vec::new(); n];
        let mut list = Vec::with_capacity(edges.len());
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(GraphError::OutOfRange(u.max(v)));
            }
            if u == v {
                return Err(GraphError::Loop(u));
            }
            let e = (u.min(v), u.max(v));
            if !seen.insert(e) {
                return Err(GraphError::MultiEdge(e.0, e.1));
            }
            adj[u].push(v);
            adj[v].push(u);
            list.push(e);
        }
        for a in &mut adj {
            a.sort_unstable();
        }
        list.sort_unstable();
        Ok(SimpleGraph { n, edges: list, adj })
    }

    /// One `u v` pair per line; blank lines and `#` comments are skipped.
    /// The vertex count is one more than the largest id, or `min_n`.
    pub fn parse_edge_list(text: &str, min_n: usize) -> Result<Self, GraphError> {
        let mut edges = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let ids: Vec<&str> = line.split_whitespace().collect();
            let syntax = |message: String| GraphError::Syntax { line: i + 1, message };
            if ids.len() != 2 {
                return Err(syntax(format!("expected two ids, found {}", ids.len())));
            }
            let parse = |s: &str| s.parse::<usize>().map_err(|e| syntax(format!("{s:?}: {e}")));
            edges.push((parse(ids[0])?, parse(ids[1])?));
        }
        let n = edges
            .iter()
            .map(|&(u, v)| u.max(v) + 1)
            .max()
            .unwrap_or(0)
            .max(min_n);
        SimpleGraph::new(n, &edges)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u].binary_search(&v).is_ok()
    }

    /// Edges with both endpoints in `keep`.
    pub fn induced_edge_count(&self, keep: &[bool]) -> usize {
        self.edges.iter().filter(|&&(u, v)| keep[u] && keep[v]).count()
    }
}

/// A vertex and the subgraph induced on its closed second neighborhood.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ball2 {
    pub center: usize,
    /// Vertices within graph distance two of the center, ascending.
    pub vertices: Vec<usize>,
    pub edge_count: usize,
    /// m² / 8n².
    pub bound: f64,
}

/// Removes vertices of degree below m/2n (lowest id first, degrees
/// recomputed after every removal), then takes the smallest surviving
/// vertex and its closed second neighborhood in the input graph.
pub fn dense_ball2_subgraph(g: &SimpleGraph) -> Option<Ball2> {
    let (n, m) = (g.n(), g.m());
    if m == 0 {
        return None;
    }
    let threshold = m as f64 / (2.0 * n as f64);
    let mut deg: Vec<usize> = (0..n).map(|v| g.neighbors(v).len()).collect();
    let mut alive = vec![true; n];
    let mut low: std::collections::BTreeSet<usize> =
        (0..n).filter(|&v| (deg[v] as f64) < threshold).collect();
    while let Some(v) = low.pop_first() {
        alive[v] = false;
        for &u in g.neighbors(v) {
            if alive[u] {
                deg[u] -= 1;
                if (deg[u] as f64) < threshold {
                    low.insert(u);
                }
            }
        }
    }
    let center = (0..n)
        .find(|&v| alive[v])
        .expect("pruning keeps at least m/2 edges");
    let mut keep = vec![false; n];
    keep[center] = true;
    for &u in g.neighbors(center) {
        keep[u] = true;
        for &w in g.neighbors(u) {
            keep[w] = true;
        }
    }
    let vertices: Vec<usize> = (0..n).filter(|&v| keep[v]).collect();
    Some(Ball2 {
        center,
        vertices,
        edge_count: g.induced_edge_count(&keep),
        bound: (m * m) as f64 / (8.0 * (n * n) as f64),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricBallReport {
    pub center: usize,
    pub average_length: f64,
    pub radius: f64,
    /// Edges of length at most twice the average.
    pub kept: usize,
    /// Kept edges certified inside the ball.
    pub inside: usize,
    /// m² / 32n².
    pub bound: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Dist(f64, usize);

impl Eq for Dist {}

impl Ord for Dist {
    fn cmp(&self, o: &Self) -> Ordering {
        o.0.total_cmp(&self.0).then_with(|| o.1.cmp(&self.1))
    }
}

impl PartialOrd for Dist {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

/// Shortest distances through drawn edges, an upper bound on surface distance.
fn drawn_distances(n: usize, edges: &[(usize, usize, f64)], src: usize) -> Vec<f64> {
    let mut adj = vec![Vec::new(); n];
    for &(u, v, w) in edges {
        adj[u].push((v, w));
        adj[v].push((u, w));
    }
    let mut d = vec![f64::INFINITY; n];
    d[src] = 0.0;
    let mut heap = BinaryHeap::from([Dist(0.0, src)]);
    while let Some(Dist(du, u)) = heap.pop() {
        if du > d[u] {
            continue;
        }
        for &(v, w) in &adj[u] {
            if du + w < d[v] {
                d[v] = du + w;
                heap.push(Dist(d[v], v));
            }
        }
    }
    d
}

/// Farthest a point of an edge of length `len` can be from the center when
/// its endpoints are within `a` and `b`.
fn edge_reach(a: f64, b: f64, len: f64) -> f64 {
    if (a - b).abs() <= len {
        0.5 * (a + b + len)
    } else {
        a.min(b) + len
    }
}

/// Finds a vertex whose ball of radius four times the average edge length
/// holds many drawn edges.
pub fn metric_ball_dense(drawing: &Drawing) -> Option<MetricBallReport> {
    let n = drawing.vertices.len();
    let m = drawing.edges.len();
    if m == 0 {
        return None;
    }
    let avg = drawing.edges.iter().map(|e| e.path.length).sum::<f64>() / m as f64;
    let kept: Vec<(usize, usize, f64)> = drawing
        .edges
        .iter()
        .filter(|e| e.path.length <= 2.0 * avg)
        .map(|e| (e.u, e.v, e.path.length))
        .collect();
    assert!(2 * kept.len() >= m, "Markov filter");
    let pairs: Vec<(usize, usize)> = kept.iter().map(|&(u, v, _)| (u, v)).collect();
    let g = SimpleGraph::new(n, &pairs).expect("drawn graphs are simple");
    let ball = dense_ball2_subgraph(&g).expect("kept edges exist");
    let all: Vec<(usize, usize, f64)> = drawing.edges.iter().map(|e| (e.u, e.v, e.path.length)).collect();
    let d = drawn_distances(n, &all, ball.center);
    let radius = 4.0 * avg;
    let inside = kept
        .iter()
        .filter(|&&(u, v, len)| edge_reach(d[u], d[v], len) <= radius * (1.0 + 1e-12))
        .count();
    Some(MetricBallReport {
        center: ball.center,
        average_length: avg,
        radius,
        kept: kept.len(),
        inside,
        bound: (m * m) as f64 / (32.0 * (n * n) as f64),
    })
}

/// m²/32g when m ≥ max(2√3·n, 12g, 24n²/g), otherwise `None`.
pub fn ssv_lower_bound(n: f64, m: f64, g: f64) -> Option<f64> {
    let need = (2.0 * 3f64.sqrt() * n).max(12.0 * g).max(24.0 * n * n / g);
    (m >= need).then(|| m * m / (32.0 * g))
}

/// A placed copy of a face in the developing chart around a center.
#[derive(Debug, Clone, Copy)]
struct Placed {
    face: usize,
    iso: Isometry,
    /// Distance from the center to the nearest point of the tile.
    near: f64,
    /// Distance from the center to the farthest vertex.
    far: f64,
}

/// Distance from the chart origin to a placed triangle.
fn triangle_near(tri: [KleinPoint; 3]) -> f64 {
    let o = KleinPoint { x: 0.0, y: 0.0 };
    let sides = (0..3).map(|i| crate::hyp::orient2d(tri[i], tri[(i + 1) % 3], o));
    let signs: Vec<f64> = sides.collect();
    if signs.iter().all(|&x| x >= 0.0) || signs.iter().all(|&x| x <= 0.0) {
        return 0.0;
    }
    (0..3)
        .map(|i| segment_near(tri[i], tri[(i + 1) % 3]))
        .fold(f64::INFINITY, f64::min)
}

fn radial(k: KleinPoint) -> f64 {
    k.norm().min(1.0 - 1e-16).atanh()
}

/// Develops tiles around `center` in order of their distance to it, calling
/// `visit` on each new tile until it returns false or no tile is nearer
/// than `limit`.
fn develop<F: FnMut(&Placed) -> bool>(
    surface: &CombinatorialSurface,
    center: SurfacePoint,
    limit: f64,
    mut visit: F,
) {
    let t = tile();
    let place = |face: usize, iso: Isometry| {
        let kv = t.vertices.map(|v| iso.apply(v).to_klein());
        Placed {
            face,
            iso,
            near: triangle_near(kv),
            far: kv.iter().map(|&k| radial(k)).fold(0.0, f64::max),
        }
    };
    let key = |iso: &Isometry| {
        let c = iso.apply(PlanePoint::ORIGIN);
        ((c.x * 1e9).round() as i64, (c.y * 1e9).round() as i64)
    };
    let start = Isometry::to_origin(center.pos());
    let mut tiles = vec![place(center.face, start)];
    let mut seen = HashSet::from([key(&start)]);
    let mut heap = BinaryHeap::from([Dist(0.0, 0)]);
    while let Some(Dist(d, i)) = heap.pop() {
        if d > limit {
            break;
        }
        let p = tiles[i];
        if !visit(&p) {
            return;
        }
        for side in 0..3 {
            let next_face = surface.partner(Slot::new(p.face, side)).slot.face;
            let iso = p.iso.compose(surface.transition(p.face, side));
            if seen.insert(key(&iso)) {
                let q = place(next_face, iso);
                tiles.push(q);
                heap.push(Dist(q.near, tiles.len() - 1));
            }
        }
    }
}

/// Faces of a surface viewed as a surface with boundary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BallSubcomplex {
    pub center: SurfacePoint,
    pub radius: f64,
    pub faces: Vec<usize>,
    pub euler_characteristic: i64,
    pub genus: i64,
    pub boundary_components: usize,
    pub components: usize,
}

fn find(p: &mut [usize], mut x: usize) -> usize {
    while p[x] != x {
        p[x] = p[p[x]];
        x = p[x];
    }
    x
}

/// Topology of the closure of a set of faces, with vertices split into
/// separate points where the included corners around them form several fans.
pub fn subcomplex_topology(surface: &CombinatorialSurface, faces: &[usize]) -> (i64, i64, usize, usize) {
    let mut inc = vec![false; surface.faces()];
    for &f in faces {
        inc[f] = true;
    }
    let nf = faces.len();
    if nf == 0 {
        return (0, 0, 0, 0);
    }
    // Components through interior edges, and edge counts.
    let mut parent: Vec<usize> = (0..surface.faces()).collect();
    let mut edges = 0i64;
    for &(a, b) in surface.edges() {
        match (inc[a.face], inc[b.face]) {
            (true, true) => {
                edges += 1;
                let (x, y) = (find(&mut parent, a.face), find(&mut parent, b.face));
                parent[x] = y;
            }
            (true, false) | (false, true) => edges += 1,
            _ => {}
        }
    }
    let mut roots: HashSet<usize> = HashSet::new();
    for &f in faces {
        roots.insert(find(&mut parent, f));
    }
    // Fans: maximal runs of included corners around each vertex.
    let mut run_of: HashMap<Corner, usize> = HashMap::new();
    let mut open = Vec::new();
    for v in 0..surface.vertex_count() {
        let cycle = surface.vertex_cycle(v);
        let k = cycle.len();
        let on: Vec<bool> = cycle.iter().map(|s| inc[s.corner.face]).collect();
        if on.iter().all(|&x| x) {
            let id = open.len();
            open.push(false);
            for s in cycle {
                run_of.insert(s.corner, id);
            }
            continue;
        }
        let Some(gap) = on.iter().position(|&x| !x) else {
            continue;
        };
        let mut current: Option<usize> = None;
        for j in 1..=k {
            let i = (gap + j) % k;
            if on[i] {
                let id = *current.get_or_insert_with(|| {
                    open.push(true);
                    open.len() - 1
                });
                run_of.insert(cycle[i].corner, id);
            } else {
                current = None;
            }
        }
    }
    let vertices = open.len() as i64;
    // Boundary cycles through open fans.
    let mut rp: Vec<usize> = (0..open.len()).collect();
    for &(a, b) in surface.edges() {
        for (s, o) in [(a, b), (b, a)] {
            if inc[s.face] && !inc[o.face] {
                let c0 = Corner {
                    face: s.face,
                    corner: s.side,
                };
                let c1 = Corner {
                    face: s.face,
                    corner: (s.side + 1) % 3,
                };
                let (x, y) = (find(&mut rp, run_of[&c0]), find(&mut rp, run_of[&c1]));
                rp[x] = y;
            }
        }
    }
    let mut bset = HashSet::new();
    for (i, &is_open) in open.iter().enumerate() {
        if is_open {
            bset.insert(find(&mut rp, i));
        }
    }
    let chi = vertices - edges + nf as i64;
    let b = bset.len();
    let c = roots.len();
    let twice = 2 * c as i64 - chi - b as i64;
    debug_assert!(twice >= 0 && twice % 2 == 0);
    (chi, twice / 2, b, c)
}

/// Faces with a lift inside the ball of radius `r` about `center`.
pub fn ball_faces(surface: &CombinatorialSurface, center: SurfacePoint, r: f64) -> Vec<usize> {
    let mut inside = vec![false; surface.faces()];
    let mut count = 0;
    develop(surface, center, r, |p| {
        if p.far <= r && !inside[p.face] {
            inside[p.face] = true;
            count += 1;
        }
        count < surface.faces()
    });
    (0..surface.faces()).filter(|&f| inside[f]).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenusVerdict {
    pub ball: BallSubcomplex,
    /// r / log g.
    pub c: f64,
    /// g^c / 4 + 1.
    pub limit: f64,
    pub pass: bool,
}

/// Genus of the faces certified inside B(center, r) against g^c/4 + 1.
pub fn disk_genus_check(surface: &CombinatorialSurface, center: SurfacePoint, r: f64) -> GenusVerdict {
    let faces = ball_faces(surface, center, r);
    let (chi, genus, b, comps) = subcomplex_topology(surface, &faces);
    let g = surface.genus() as f64;
    let c = r / g.ln();
    let limit = g.powf(c) / 4.0 + 1.0;
    GenusVerdict {
        pass: genus as f64 <= limit,
        ball: BallSubcomplex {
            center,
            radius: r,
            faces,
            euler_characteristic: chi,
            genus,
            boundary_components: b,
            components: comps,
        },
        c,
        limit,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmbeddedVerdict {
    /// Largest multiple of the resolution at which the ball is certified
    /// embedded.
    pub radius: f64,
    /// log g + log 4.
    pub limit: f64,
    pub pass: bool,
}

pub const EMBED_RESOLUTION: f64 = 0.01;

fn segment_near(a: KleinPoint, b: KleinPoint) -> f64 {
    let d = b - a;
    let t = (-(a.x * d.x + a.y * d.y) / d.norm_sqr()).clamp(0.0, 1.0);
    radial(a.lerp(b, t))
}

/// Largest radius r (down to the resolution) such that no face, edge or
/// vertex has two distinct lifts meeting B(center, r). Two lifts at
/// distances d₁, d₂ can only both meet the ball once r ≥ max(d₁, d₂), so
/// the smallest such maximum is a lower bound on the embedding radius.
pub fn embedded_disk_check(surface: &CombinatorialSurface, center: SurfacePoint) -> EmbeddedVerdict {
    let t = tile();
    // Element key: 0 = face, 1 = edge, 2 = vertex.
    let mut first: HashMap<(u8, usize), (PlanePoint, f64)> = HashMap::new();
    let mut conflict = f64::INFINITY;
    let mut note = |key: (u8, usize), pos: PlanePoint, d: f64, conflict: &mut f64| {
        let (p0, d0) = *first.entry(key).or_insert((pos, d));
        if crate::hyp::dist_unchecked(p0, pos) > 1e-6 {
            *conflict = conflict.min(d0.max(d));
        }
    };
    develop(surface, center, f64::INFINITY, |p| {
        if p.near >= conflict {
            return false;
        }
        note(
            (0, p.face),
            p.iso.apply(PlanePoint::ORIGIN),
            p.near,
            &mut conflict,
        );
        for c in 0..3 {
            let v = surface.vertex_of(Corner {
                face: p.face,
                corner: c,
            });
            let pos = p.iso.apply(t.vertices[c]);
            note((2, v), pos, radial(pos.to_klein()), &mut conflict);
            let e = surface.edge_of(Slot::new(p.face, c));
            let (a, b) = t.side(c);
            let (ka, kb) = (p.iso.apply(a).to_klein(), p.iso.apply(b).to_klein());
            let mid = p.iso.apply(t.point_on_side(c, 0.5));
            note((1, e), mid, segment_near(ka, kb), &mut conflict);
        }
        true
    });
    let radius = (conflict / EMBED_RESOLUTION).floor() * EMBED_RESOLUTION;
    let g = surface.genus() as f64;
    let limit = g.ln() + 4f64.ln();
    EmbeddedVerdict {
        radius,
        limit,
        pass: radius <= limit,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drawing::random_geometric_drawing;
    use crate::geodesic::{build_portal_graph, sample_uniform};
    use crate::surface::{generate_surface, surface_diameter_estimate};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn complete(n: usize) -> SimpleGraph {
        SimpleGraph::new(n, &crate::drawing::complete_graph_edges(n)).unwrap()
    }

    #[test]
    fn edge_list_parsing() {
        let g = SimpleGraph::parse_edge_list("# k3\n0 1\n1 2\n\n2 0\n", 0).unwrap();
        assert_eq!((g.n(), g.m()), (3, 3));
        assert!(g.has_edge(2, 0));
        assert_eq!(
            SimpleGraph::parse_edge_list("0 1\n1 x\n", 0).unwrap_err(),
            GraphError::Syntax {
                line: 2,
                message: "\"x\": invalid digit found in string".into()
            }
        );
        assert_eq!(
            SimpleGraph::parse_edge_list("0 0", 0).unwrap_err(),
            GraphError::Loop(0)
        );
        assert_eq!(
            SimpleGraph::parse_edge_list("0 1\n1 0", 0).unwrap_err(),
            GraphError::MultiEdge(0, 1)
        );
        assert_eq!(SimpleGraph::parse_edge_list("", 5).unwrap().n(), 5);
    }

    #[test]
    fn ball2_small_cases() {
        let k4 = complete(4);
        let b = dense_ball2_subgraph(&k4).unwrap();
        assert_eq!(b.vertices, vec![0, 1, 2, 3]);
        assert_eq!(b.edge_count, 6);
        assert!(b.bound < 1.0);
        let star: Vec<(usize, usize)> = (1..9).map(|i| (0, i)).collect();
        let s = SimpleGraph::new(9, &star).unwrap();
        let b = dense_ball2_subgraph(&s).unwrap();
        assert_eq!(b.center, 0);
        assert_eq!(b.edge_count, 8);
        assert!(dense_ball2_subgraph(&SimpleGraph::new(3, &[]).unwrap()).is_none());
    }

    /// Edge count by scanning all vertex pairs.
    fn recount(g: &SimpleGraph, verts: &[usize]) -> usize {
        let mut c = 0;
        for (i, &u) in verts.iter().enumerate() {
            for &v in &verts[i + 1..] {
                if g.has_edge(u, v) {
                    c += 1;
                }
            }
        }
        c
    }

    #[test]
    fn ball2_holds_on_random_graphs() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let n = rng.gen_range(2..60);
            let p: f64 = rng.gen_range(0.02..0.9);
            let edges: Vec<(usize, usize)> = crate::drawing::complete_graph_edges(n)
                .into_iter()
                .filter(|_| rng.gen::<f64>() < p)
                .collect();
            let g = SimpleGraph::new(n, &edges).unwrap();
            if let Some(b) = dense_ball2_subgraph(&g) {
                let c = recount(&g, &b.vertices);
                assert_eq!(c, b.edge_count);
                assert!(c as f64 >= b.bound.ceil());
            }
        }
    }

    #[test]
    fn ssv_examples() {
        assert_eq!(ssv_lower_bound(100.0, 30000.0, 100.0), Some(281250.0));
        assert_eq!(ssv_lower_bound(100.0, 2000.0, 100.0), None);
        let a = ssv_lower_bound(100.0, 30000.0, 100.0).unwrap();
        let b = ssv_lower_bound(100.0, 60000.0, 100.0).unwrap();
        assert_eq!(b, 4.0 * a);
    }

    #[test]
    fn edge_reach_bounds() {
        assert_eq!(edge_reach(0.0, 1.0, 1.0), 1.0);
        assert_eq!(edge_reach(1.0, 1.0, 2.0), 2.0);
        assert_eq!(edge_reach(0.0, 5.0, 1.0), 1.0);
    }

    #[test]
    fn metric_ball_on_drawings() {
        let s = generate_surface(16, 1).unwrap();
        let g = build_portal_graph(&s, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let d = random_geometric_drawing(&s, &g, 2, &mut rng).unwrap();
        let r = metric_ball_dense(&d).unwrap();
        assert_eq!((r.kept, r.inside), (1, 1));
        for n in 3..10 {
            let d = random_geometric_drawing(&s, &g, n, &mut rng).unwrap();
            let r = metric_ball_dense(&d).unwrap();
            assert!(2 * r.kept >= d.edges.len());
            assert!(r.inside as f64 >= r.bound);
        }
    }

    #[test]
    fn subcomplex_topology_basics() {
        let s = generate_surface(16, 1).unwrap();
        assert_eq!(subcomplex_topology(&s, &[0]), (1, 0, 1, 1));
        let all: Vec<usize> = (0..16).collect();
        assert_eq!(subcomplex_topology(&s, &all), (-2, 2, 0, 1));
        let n = s.dual_neighbors(0)[0];
        let (chi, genus, b, c) = subcomplex_topology(&s, &[0, n]);
        assert_eq!((genus, c), (0, 1));
        assert_eq!(chi, 2 - 2 * genus - b as i64);
        let far = (1..16).find(|f| !s.dual_neighbors(0).contains(f)).unwrap();
        assert_eq!(subcomplex_topology(&s, &[0, far]).3, 2);
    }

    #[test]
    fn ball_genus_sweep() {
        let s = generate_surface(64, 3).unwrap();
        let center = SurfacePoint::new(0, PlanePoint::ORIGIN);
        let small = disk_genus_check(&s, center, 0.3);
        assert!(small.ball.faces.is_empty() && small.ball.genus == 0 && small.pass);
        let diam = surface_diameter_estimate(&s, 4, 8);
        let whole = disk_genus_check(&s, center, diam + 2.0 * tile().circumradius);
        assert_eq!(whole.ball.faces.len(), 64);
        assert_eq!(whole.ball.genus, 5);
        assert!(whole.pass);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let c = sample_uniform(&s, &mut rng);
            let r = rng.gen_range(0.5..diam);
            let v = disk_genus_check(&s, c, r);
            assert!(v.pass);
            assert_eq!(
                v.ball.euler_characteristic,
                2 * v.ball.components as i64 - 2 * v.ball.genus - v.ball.boundary_components as i64
            );
        }
    }

    #[test]
    fn embedded_radius_is_bounded() {
        for (f, seed) in [(16, 1), (64, 3)] {
            let s = generate_surface(f, seed).unwrap();
            for face in 0..4 {
                let v = embedded_disk_check(&s, SurfacePoint::new(face, PlanePoint::ORIGIN));
                assert!(v.radius >= tile().inradius - EMBED_RESOLUTION);
                assert!(v.pass, "{} > {}", v.radius, v.limit);
                // Faces inside a certified embedded ball form a disk.
                let ball = disk_genus_check(&s, SurfacePoint::new(face, PlanePoint::ORIGIN), v.radius);
                if !ball.ball.faces.is_empty() {
                    assert_eq!((ball.ball.genus, ball.ball.components), (0, 1));
                }
            }
        }
    }
}
