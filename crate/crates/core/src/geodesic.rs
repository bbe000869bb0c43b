//! Uniform sampling and shortest geodesics on a tiled surface.
//!
//! A shortest path is found in three stages. Dijkstra over a portal graph
//! (sample points on every triangulation edge) picks a strip of faces. The
//! strip is unfolded into one hyperbolic chart and straightened with a funnel
//! pass in the Klein model, where geodesics are chords. Whenever the funnel
//! wraps around a triangulation vertex, the strip is rerouted around the other
//! side of that vertex, which strictly shortens the path; at convergence the
//! path is a single chord of the unfolded strip, hence locally geodesic.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hyp::{dist_unchecked, midpoint, orient2d, Isometry, KleinPoint, PlanePoint};
use crate::surface::{tile, CombinatorialSurface, Corner, Slot};

/// A point on the surface: a face and a position in that face's chart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfacePoint {
    pub face: usize,
    pub x: f64,
    pub y: f64,
}

impl SurfacePoint {
    pub fn new(face: usize, p: PlanePoint) -> Self {
        SurfacePoint { face, x: p.x, y: p.y }
    }

    pub fn pos(&self) -> PlanePoint {
        PlanePoint { x: self.x, y: self.y }
    }

    /// Inside (or on) the reference triangle of its chart.
    pub fn is_valid(&self) -> bool {
        self.pos().is_valid() && tile().contains(self.pos(), 1e-12)
    }

    pub(crate) fn key(&self) -> (usize, u64, u64) {
        (self.face, self.x.to_bits(), self.y.to_bits())
    }
}

/// Straight piece of a path inside one face, in that face's chart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub face: usize,
    pub entry: PlanePoint,
    pub exit: PlanePoint,
}

impl Segment {
    pub fn length(&self) -> f64 {
        dist_unchecked(self.entry, self.exit)
    }
}

/// Chain of in-face segments. `exits[i]` is the slot of `segments[i].face`
/// through which the path leaves into `segments[i + 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeodesicPath {
    pub segments: Vec<Segment>,
    pub exits: Vec<(usize, usize)>,
    pub length: f64,
    /// True when no bend survived straightening.
    pub locally_geodesic: bool,
}

impl GeodesicPath {
    pub fn empty() -> Self {
        GeodesicPath {
            segments: Vec::new(),
            exits: Vec::new(),
            length: 0.0,
            locally_geodesic: true,
        }
    }

    pub fn exit_slot(&self, i: usize) -> Slot {
        let (f, s) = self.exits[i];
        Slot::new(f, s)
    }

    pub fn start(&self) -> Option<SurfacePoint> {
        self.segments.first().map(|s| SurfacePoint::new(s.face, s.entry))
    }

    pub fn end(&self) -> Option<SurfacePoint> {
        self.segments.last().map(|s| SurfacePoint::new(s.face, s.exit))
    }

    /// The same path traversed backwards.
    pub fn reversed(&self, surface: &CombinatorialSurface) -> GeodesicPath {
        GeodesicPath {
            segments: self
                .segments
                .iter()
                .rev()
                .map(|s| Segment {
                    face: s.face,
                    entry: s.exit,
                    exit: s.entry,
                })
                .collect(),
            exits: self
                .exits
                .iter()
                .rev()
                .map(|&(f, s)| {
                    let m = surface.partner(Slot::new(f, s)).slot;
                    (m.face, m.side)
                })
                .collect(),
            length: self.length,
            locally_geodesic: self.locally_geodesic,
        }
    }

    /// Largest continuity defect across crossed sides.
    pub fn continuity_residual(&self, surface: &CombinatorialSurface) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.exits.len() {
            let slot = self.exit_slot(i);
            let t = surface.transition(slot.face, slot.side);
            let next = t.apply(self.segments[i + 1].entry);
            worst = worst.max(dist_unchecked(next, self.segments[i].exit));
        }
        worst
    }

    /// Largest turning angle at crossed sides, measured after unfolding the
    /// two adjacent faces into one chart.
    pub fn collinearity_residual(&self, surface: &CombinatorialSurface) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.exits.len() {
            let a = &self.segments[i];
            let b = &self.segments[i + 1];
            if a.length() < 1e-9 || b.length() < 1e-9 {
                continue;
            }
            let slot = self.exit_slot(i);
            let t = surface.transition(slot.face, slot.side);
            let far = t.apply(b.exit);
            let angle = crate::hyp::angle_at(a.entry, a.exit, far);
            worst = worst.max((PI - angle).abs());
        }
        worst
    }
}

/// Number of faces the path passes through, with multiplicity.
pub fn faces_crossed(path: &GeodesicPath) -> usize {
    path.segments.len()
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeodesicError {
    #[error("faces {0} and {1} are not adjacent")]
    NotAdjacent(usize, usize),
    #[error("slot (face {face}, side {side}) does not leave face {expected}")]
    BadExit {
        face: usize,
        side: usize,
        expected: usize,
    },
    #[error("portal count must be at least 1")]
    NoPortals,
    #[error("target unreachable in portal graph")]
    Unreachable,
    #[error("point is not inside its face")]
    BadPoint,
}

/// Draws a point uniformly with respect to hyperbolic area.
///
/// All tiles have area π/4, so the face is uniform; inside the face the
/// density `4/(1 − |z|²)²` is realized by rejection from the circumscribed
/// Euclidean disk.
pub fn sample_uniform<R: Rng + ?Sized>(surface: &CombinatorialSurface, rng: &mut R) -> SurfacePoint {
    let face = rng.gen_range(0..surface.faces());
    SurfacePoint::new(face, sample_in_tile(rng))
}

pub(crate) fn sample_in_tile<R: Rng + ?Sized>(rng: &mut R) -> PlanePoint {
    let t = tile();
    let rho = t.vertices[0].x;
    let floor = 1.0 - rho * rho;
    loop {
        let r = rho * rng.gen::<f64>().sqrt();
        let th = rng.gen::<f64>() * 2.0 * PI;
        let p = PlanePoint {
            x: r * th.cos(),
            y: r * th.sin(),
        };
        if !t.contains(p, 0.0) {
            continue;
        }
        let ratio = floor / (1.0 - r * r);
        if rng.gen::<f64>() < ratio * ratio {
            return p;
        }
    }
}

/// Portal parameters: the first `k` terms of the base-2 van der Corput
/// sequence, so the portal set for `k` is contained in the set for any
/// larger `k`.
pub fn portal_params(k: usize) -> Vec<f64> {
    (1..=k)
        .map(|mut i| {
            let mut x = 0.0;
            let mut f = 0.5;
            while i > 0 {
                if i & 1 == 1 {
                    x += f;
                }
                i >>= 1;
                f *= 0.5;
            }
            x
        })
        .collect()
}

#[derive(Debug, Clone, Copy)]
struct Arc {
    to: u32,
    face: u32,
    from_side: u8,
    to_side: u8,
    w: f64,
}

/// Portal nodes on every edge and in-face arcs between them.
#[derive(Debug, Clone)]
pub struct PortalGraph {
    k: usize,
    /// Position of node `i` of the edge under `slot`, at `slot_pos[3f+s][i]`
    /// in the chart of face `f`.
    slot_pos: Vec<Vec<PlanePoint>>,
    offsets: Vec<usize>,
    arcs: Vec<Arc>,
    edges: usize,
}

/// Builds the portal graph with `k` nodes per edge.
pub fn build_portal_graph(surface: &CombinatorialSurface, k: usize) -> Result<PortalGraph, GeodesicError> {
    if k == 0 {
        return Err(GeodesicError::NoPortals);
    }
    let t = tile();
    let params = portal_params(k);
    let faces = surface.faces();
    let mut slot_pos = vec![Vec::new(); 3 * faces];
    for &(a, b) in surface.edges() {
        let m = surface.partner(a);
        slot_pos[a.index()] = params.iter().map(|&u| t.point_on_side(a.side, u)).collect();
        slot_pos[b.index()] = params
            .iter()
            .map(|&u| {
                let v = match m.orient {
                    crate::surface::Orient::Plus => 1.0 - u,
                    crate::surface::Orient::Minus => u,
                };
                t.point_on_side(b.side, v)
            })
            .collect();
    }
    let n = surface.edge_count() * k;
    let mut lists: Vec<Vec<Arc>> = vec![Vec::new(); n];
    for f in 0..faces {
        for s1 in 0..3 {
            for s2 in (s1 + 1)..3 {
                let e1 = surface.edge_of(Slot::new(f, s1));
                let e2 = surface.edge_of(Slot::new(f, s2));
                for i in 0..k {
                    for j in 0..k {
                        let u = e1 * k + i;
                        let v = e2 * k + j;
                        if u == v {
                            continue;
                        }
                        let w = dist_unchecked(slot_pos[3 * f + s1][i], slot_pos[3 * f + s2][j]);
                        lists[u].push(Arc {
                            to: v as u32,
                            face: f as u32,
                            from_side: s1 as u8,
                            to_side: s2 as u8,
                            w,
                        });
                        lists[v].push(Arc {
                            to: u as u32,
                            face: f as u32,
                            from_side: s2 as u8,
                            to_side: s1 as u8,
                            w,
                        });
                    }
                }
            }
        }
    }
    let mut offsets = Vec::with_capacity(n + 1);
    let mut arcs = Vec::new();
    offsets.push(0);
    for l in lists {
        arcs.extend(l);
        offsets.push(arcs.len());
    }
    Ok(PortalGraph {
        k,
        slot_pos,
        offsets,
        arcs,
        edges: surface.edge_count(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct HeapItem {
    d: f64,
    node: usize,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap on distance, ties by ascending node id.
        other
            .d
            .total_cmp(&self.d)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone, Copy)]
enum Prev {
    None,
    /// Reached directly from the source through its face's `side`.
    Source(u8),
    Arc {
        from: u32,
        face: u32,
        from_side: u8,
        to_side: u8,
    },
}

/// Single-source portal distances.
#[derive(Debug, Clone)]
pub struct PortalTree<'g> {
    graph: &'g PortalGraph,
    source: SurfacePoint,
    dist: Vec<f64>,
    prev: Vec<Prev>,
}

/// One straight hop of a portal route, inside `face`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Leg {
    face: usize,
    /// Side the hop starts on (`None` at the source).
    from_side: Option<usize>,
    /// Side the hop ends on (`None` at the target).
    to_side: Option<usize>,
}

impl PortalGraph {
    pub fn node_count(&self) -> usize {
        self.edges * self.k
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn arc_weights(&self) -> impl Iterator<Item = f64> + '_ {
        self.arcs.iter().map(|a| a.w)
    }

    /// Whether every node has arcs into both faces incident to its edge.
    pub fn arcs_cover_both_faces(&self, surface: &CombinatorialSurface) -> bool {
        (0..self.node_count()).all(|u| {
            let (a, b) = surface.edges()[u / self.k];
            let faces: Vec<u32> = self.arcs[self.offsets[u]..self.offsets[u + 1]]
                .iter()
                .map(|arc| arc.face)
                .collect();
            faces.contains(&(a.face as u32)) && faces.contains(&(b.face as u32))
        })
    }

    fn nodes_on(
        &self,
        surface: &CombinatorialSurface,
        slot: Slot,
    ) -> impl Iterator<Item = (usize, PlanePoint)> + '_ {
        let e = surface.edge_of(slot);
        let k = self.k;
        self.slot_pos[slot.index()]
            .iter()
            .enumerate()
            .map(move |(i, &p)| (e * k + i, p))
    }

    /// Dijkstra from a surface point.
    pub fn tree_from<'g>(&'g self, surface: &CombinatorialSurface, source: SurfacePoint) -> PortalTree<'g> {
        let n = self.node_count();
        let mut dist = vec![f64::INFINITY; n];
        let mut prev = vec![Prev::None; n];
        let mut heap = BinaryHeap::new();
        for s in 0..3 {
            for (u, p) in self.nodes_on(surface, Slot::new(source.face, s)) {
                let d = dist_unchecked(source.pos(), p);
                if d < dist[u] {
                    dist[u] = d;
                    prev[u] = Prev::Source(s as u8);
                }
            }
        }
        for (u, &d) in dist.iter().enumerate() {
            if d.is_finite() {
                heap.push(HeapItem { d, node: u });
            }
        }
        while let Some(HeapItem { d, node }) = heap.pop() {
            if d > dist[node] {
                continue;
            }
            for arc in &self.arcs[self.offsets[node]..self.offsets[node + 1]] {
                let nd = d + arc.w;
                let v = arc.to as usize;
                if nd < dist[v] {
                    dist[v] = nd;
                    prev[v] = Prev::Arc {
                        from: node as u32,
                        face: arc.face,
                        from_side: arc.from_side,
                        to_side: arc.to_side,
                    };
                    heap.push(HeapItem { d: nd, node: v });
                }
            }
        }
        PortalTree {
            graph: self,
            source,
            dist,
            prev,
        }
    }
}

impl PortalTree<'_> {
    pub fn node_dist(&self, node: usize) -> f64 {
        self.dist[node]
    }

    /// Portal-graph distance to a surface point (an upper bound on the true
    /// distance).
    pub fn dist_to(&self, surface: &CombinatorialSurface, target: SurfacePoint) -> f64 {
        self.best_entry(surface, target).map_or(f64::INFINITY, |(d, _)| d)
    }

    fn best_entry(
        &self,
        surface: &CombinatorialSurface,
        target: SurfacePoint,
    ) -> Option<(f64, Option<(usize, usize)>)> {
        let mut best: Option<(f64, Option<(usize, usize)>)> = None;
        if target.face == self.source.face {
            best = Some((dist_unchecked(self.source.pos(), target.pos()), None));
        }
        for s in 0..3 {
            for (u, p) in self.graph.nodes_on(surface, Slot::new(target.face, s)) {
                let d = self.dist[u] + dist_unchecked(p, target.pos());
                if best.is_none_or(|(b, _)| d < b) {
                    best = Some((d, Some((u, s))));
                }
            }
        }
        best
    }

    fn legs_to(&self, surface: &CombinatorialSurface, target: SurfacePoint) -> Option<(f64, Vec<Leg>)> {
        let (d, entry) = self.best_entry(surface, target)?;
        let Some((mut node, side)) = entry else {
            return Some((
                d,
                vec![Leg {
                    face: target.face,
                    from_side: None,
                    to_side: None,
                }],
            ));
        };
        let mut legs = vec![Leg {
            face: target.face,
            from_side: Some(side),
            to_side: None,
        }];
        loop {
            match self.prev[node] {
                Prev::None => return None,
                Prev::Source(s) => {
                    legs.push(Leg {
                        face: self.source.face,
                        from_side: None,
                        to_side: Some(s as usize),
                    });
                    break;
                }
                Prev::Arc {
                    from,
                    face,
                    from_side,
                    to_side,
                } => {
                    legs.push(Leg {
                        face: face as usize,
                        from_side: Some(from_side as usize),
                        to_side: Some(to_side as usize),
                    });
                    node = from as usize;
                }
            }
        }
        legs.reverse();
        Some((d, legs))
    }

    /// Best portal route to `target` as a face strip, with its length.
    pub fn strip_to(&self, surface: &CombinatorialSurface, target: SurfacePoint) -> Option<(f64, Strip)> {
        let (d, legs) = self.legs_to(surface, target)?;
        let mut faces = vec![legs[0].face];
        let mut exits = Vec::new();
        for w in legs.windows(2) {
            let out = Slot::new(w[0].face, w[0].to_side.expect("interior leg"));
            let inn = Slot::new(w[1].face, w[1].from_side.expect("interior leg"));
            if out == inn {
                continue;
            }
            debug_assert_eq!(surface.partner(out).slot, inn);
            exits.push(out);
            faces.push(w[1].face);
        }
        let mut strip = Strip { faces, exits };
        strip.cancel_backtracks(surface);
        Some((d, strip))
    }
}

/// A sequence of faces joined through explicit sides.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Strip {
    pub faces: Vec<usize>,
    /// `exits[i]` is a side of `faces[i]` glued to a side of `faces[i + 1]`.
    pub exits: Vec<Slot>,
}

impl Strip {
    /// Strip through consecutive faces, crossing the first shared side.
    pub fn from_faces(surface: &CombinatorialSurface, faces: &[usize]) -> Result<Self, GeodesicError> {
        let mut exits = Vec::new();
        for w in faces.windows(2) {
            let side = (0..3)
                .find(|&s| surface.partner(Slot::new(w[0], s)).slot.face == w[1])
                .ok_or(GeodesicError::NotAdjacent(w[0], w[1]))?;
            exits.push(Slot::new(w[0], side));
        }
        Ok(Strip {
            faces: faces.to_vec(),
            exits,
        })
    }

    fn check(&self, surface: &CombinatorialSurface) -> Result<(), GeodesicError> {
        for (i, e) in self.exits.iter().enumerate() {
            if e.face != self.faces[i] {
                return Err(GeodesicError::BadExit {
                    face: e.face,
                    side: e.side,
                    expected: self.faces[i],
                });
            }
            let m = surface.partner(*e).slot;
            if m.face != self.faces[i + 1] {
                return Err(GeodesicError::NotAdjacent(self.faces[i], self.faces[i + 1]));
            }
        }
        Ok(())
    }

    /// Removes immediate back-and-forth crossings of the same side.
    fn cancel_backtracks(&mut self, surface: &CombinatorialSurface) {
        let mut faces = vec![self.faces[0]];
        let mut exits: Vec<Slot> = Vec::new();
        for (i, &e) in self.exits.iter().enumerate() {
            if let Some(&last) = exits.last() {
                if surface.partner(last).slot == e {
                    exits.pop();
                    faces.pop();
                    continue;
                }
            }
            exits.push(e);
            faces.push(self.faces[i + 1]);
        }
        self.faces = faces;
        self.exits = exits;
    }
}

/// Placement of every strip face in the chart of the first face.
pub fn unfold_strip(surface: &CombinatorialSurface, strip: &Strip) -> Result<Vec<Isometry>, GeodesicError> {
    strip.check(surface)?;
    let mut out = Vec::with_capacity(strip.faces.len());
    let mut cur = Isometry::identity();
    out.push(cur);
    for e in &strip.exits {
        cur = cur.compose(surface.transition(e.face, e.side));
        out.push(cur);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    Left,
    Right,
}

/// Funnel output for one strip.
#[derive(Debug, Clone)]
pub struct StripPath {
    pub path: GeodesicPath,
    /// Interior bends: portal index and whether the bend point is that
    /// portal's left endpoint.
    bends: Vec<(usize, Side)>,
    /// Crossings that pass through a strip vertex.
    through_vertex: bool,
}

struct Portals {
    frame: Vec<Isometry>,
    left: Vec<KleinPoint>,
    right: Vec<KleinPoint>,
    /// Corner index (in `faces[i]`) of the left and right endpoints.
    left_corner: Vec<usize>,
    right_corner: Vec<usize>,
}

fn build_portals(strip: &Strip, placements: &[Isometry], frame: &Isometry) -> Portals {
    let t = tile();
    let mut p = Portals {
        frame: placements.iter().map(|pl| frame.compose(pl)).collect(),
        left: Vec::new(),
        right: Vec::new(),
        left_corner: Vec::new(),
        right_corner: Vec::new(),
    };
    for (i, e) in strip.exits.iter().enumerate() {
        let pl = &p.frame[i];
        let c = pl.apply(PlanePoint::ORIGIN).to_klein();
        let ca = e.side;
        let cb = (e.side + 1) % 3;
        let a = pl.apply(t.vertices[ca]).to_klein();
        let b = pl.apply(t.vertices[cb]).to_klein();
        if orient2d(c, a, b) > 0.0 {
            p.left.push(b);
            p.right.push(a);
            p.left_corner.push(cb);
            p.right_corner.push(ca);
        } else {
            p.left.push(a);
            p.right.push(b);
            p.left_corner.push(ca);
            p.right_corner.push(cb);
        }
    }
    p
}

/// Shortest path inside the unfolded strip from `p` (in the first face) to
/// `q` (in the last face).
pub fn shorten_in_strip(strip: &Strip, placements: &[Isometry], p: PlanePoint, q: PlanePoint) -> StripPath {
    let last = placements.last().expect("non-empty strip");
    // Work in a frame centered on the hyperbolic midpoint of the endpoints.
    let q_first = last.apply(q);
    let frame = Isometry::to_origin(midpoint(p, q_first));
    let portals = build_portals(strip, placements, &frame);
    let start = frame.apply(p).to_klein();
    let end = frame.apply(q_first).to_klein();
    let (points, bends) = funnel(start, end, &portals.left, &portals.right);

    // Crossing point of the polyline with every portal.
    let n = strip.exits.len();
    let mut crossings = Vec::with_capacity(n);
    let mut piece = 0;
    let mut through_vertex = false;
    for i in 0..n {
        let (l, r) = (portals.left[i], portals.right[i]);
        loop {
            let a = points[piece];
            let b = points[piece + 1];
            if let Some(x) = crossing_point(a, b, l, r) {
                if (x - l).norm() < 1e-12 || (x - r).norm() < 1e-12 {
                    let is_bend = bends.iter().any(|&(j, _)| j == i);
                    if !is_bend {
                        through_vertex = true;
                    }
                }
                crossings.push(x);
                break;
            }
            if piece + 2 < points.len() {
                piece += 1;
            } else {
                // Numerical fallback: closest portal point to the chord.
                crossings.push(closest_on_segment(l, r, a, b));
                break;
            }
        }
    }

    let mut segments = Vec::with_capacity(n + 1);
    let mut length = 0.0;
    for i in 0..=n {
        let inv = portals.frame[i].inverse();
        let entry = if i == 0 {
            p
        } else {
            inv.apply(crossings[i - 1].to_poincare())
        };
        let exit = if i == n {
            q
        } else {
            inv.apply(crossings[i].to_poincare())
        };
        let seg = Segment {
            face: strip.faces[i],
            entry,
            exit,
        };
        length += seg.length();
        segments.push(seg);
    }
    StripPath {
        path: GeodesicPath {
            segments,
            exits: strip.exits.iter().map(|s| (s.face, s.side)).collect(),
            length,
            locally_geodesic: bends.is_empty(),
        },
        bends,
        through_vertex,
    }
}

fn crossing_point(a: KleinPoint, b: KleinPoint, l: KleinPoint, r: KleinPoint) -> Option<KleinPoint> {
    let d1 = b - a;
    let d2 = r - l;
    let den = d1.x * d2.y - d1.y * d2.x;
    let w = l - a;
    if den.abs() < 1e-300 {
        return None;
    }
    let t = (w.x * d2.y - w.y * d2.x) / den;
    let u = (w.x * d1.y - w.y * d1.x) / den;
    let eps = 1e-9;
    if (-eps..=1.0 + eps).contains(&t) && (-eps..=1.0 + eps).contains(&u) {
        Some(l.lerp(r, u.clamp(0.0, 1.0)))
    } else {
        None
    }
}

fn closest_on_segment(l: KleinPoint, r: KleinPoint, a: KleinPoint, b: KleinPoint) -> KleinPoint {
    let mid = a.lerp(b, 0.5);
    let d = r - l;
    let len2 = d.x * d.x + d.y * d.y;
    let u = (((mid.x - l.x) * d.x + (mid.y - l.y) * d.y) / len2).clamp(0.0, 1.0);
    l.lerp(r, u)
}

/// Funnel pass over portals given by their left and right endpoints.
/// Returns the polyline (start, bends..., end) and the bend origins.
fn funnel(
    start: KleinPoint,
    end: KleinPoint,
    left: &[KleinPoint],
    right: &[KleinPoint],
) -> (Vec<KleinPoint>, Vec<(usize, Side)>) {
    let n = left.len();
    // Portal i for i in 1..=n is the i-1th crossing; portal n+1 is the target.
    let get = |i: usize| -> (KleinPoint, KleinPoint) {
        if i == 0 {
            (start, start)
        } else if i <= n {
            (left[i - 1], right[i - 1])
        } else {
            (end, end)
        }
    };
    let mut points = vec![start];
    let mut bends = Vec::new();
    let mut apex = start;
    let mut apex_i = 0;
    let (mut fl, mut fr) = (start, start);
    let (mut li, mut ri) = (0usize, 0usize);
    let mut i = 1;
    while i <= n + 1 {
        let (pl, pr) = get(i);
        // Right side.
        if orient2d(apex, fr, pr) >= 0.0 {
            if ri == apex_i || orient2d(apex, fl, pr) < 0.0 {
                fr = pr;
                ri = i;
            } else {
                points.push(fl);
                bends.push((li - 1, Side::Left));
                apex = fl;
                apex_i = li;
                fr = apex;
                ri = apex_i;
                i = apex_i + 1;
                continue;
            }
        }
        // Left side.
        if orient2d(apex, fl, pl) <= 0.0 {
            if li == apex_i || orient2d(apex, fr, pl) > 0.0 {
                fl = pl;
                li = i;
            } else {
                points.push(fr);
                bends.push((ri - 1, Side::Right));
                apex = fr;
                apex_i = ri;
                fl = apex;
                li = apex_i;
                i = apex_i + 1;
                continue;
            }
        }
        i += 1;
    }
    points.push(end);
    // Drop numerically straight bends.
    let mut keep_pts = vec![points[0]];
    let mut keep_bends = Vec::new();
    for j in 1..points.len() - 1 {
        let a = *keep_pts.last().expect("start kept");
        let b = points[j];
        let c = points[j + 1];
        let cross = orient2d(a, b, c);
        let scale = (b - a).norm() * (c - b).norm();
        if scale > 0.0 && cross.abs() > 1e-12 * scale {
            keep_pts.push(b);
            keep_bends.push(bends[j - 1]);
        }
    }
    keep_pts.push(end);
    (keep_pts, keep_bends)
}

/// Path-finding parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathParams {
    /// Portals per edge.
    pub k: usize,
    /// Target relative accuracy against a dense-portal reference.
    pub epsilon: f64,
}

impl Default for PathParams {
    fn default() -> Self {
        PathParams { k: 8, epsilon: 0.02 }
    }
}

const MAX_REROUTES: usize = 256;

/// Replaces the fan around a bend vertex with the fan on its other side.
fn reroute(
    surface: &CombinatorialSurface,
    strip: &Strip,
    portals: &Portals,
    bend: (usize, Side),
) -> Option<Strip> {
    let (i, side) = bend;
    let corner_at = |j: usize, s: Side| -> Corner {
        let c = match s {
            Side::Left => portals.left_corner[j],
            Side::Right => portals.right_corner[j],
        };
        Corner {
            face: strip.faces[j],
            corner: c,
        }
    };
    let point_at = |j: usize, s: Side| match s {
        Side::Left => portals.left[j],
        Side::Right => portals.right[j],
    };
    let v = surface.vertex_of(corner_at(i, side));
    let here = point_at(i, side);
    let same =
        |j: usize| surface.vertex_of(corner_at(j, side)) == v && (point_at(j, side) - here).norm() < 1e-9;
    let mut i0 = i;
    while i0 > 0 && same(i0 - 1) {
        i0 -= 1;
    }
    let mut i1 = i;
    while i1 + 1 < strip.exits.len() && same(i1 + 1) {
        i1 += 1;
    }
    let a = corner_at(i0, side);
    let b = surface.corner_across(strip.exits[i1], corner_at(i1, side).corner);
    let mut new_faces: Vec<usize> = strip.faces[..=i0].to_vec();
    let mut new_exits: Vec<Slot> = strip.exits[..i0].to_vec();
    let mut cur = a;
    let mut exit = if strip.exits[i0].side == a.corner {
        (a.corner + 2) % 3
    } else {
        a.corner
    };
    let mut steps = 0;
    while cur != b {
        let slot = Slot::new(cur.face, exit);
        let m = surface.partner(slot).slot;
        let next = surface.corner_across(slot, cur.corner);
        new_exits.push(slot);
        new_faces.push(next.face);
        exit = if m.side == next.corner {
            (next.corner + 2) % 3
        } else {
            next.corner
        };
        cur = next;
        steps += 1;
        if steps > 8 {
            return None;
        }
    }
    new_faces.extend_from_slice(&strip.faces[i1 + 2..]);
    new_exits.extend_from_slice(&strip.exits[i1 + 1..]);
    let mut s = Strip {
        faces: new_faces,
        exits: new_exits,
    };
    s.cancel_backtracks(surface);
    Some(s)
}

/// Straightens a strip route between `p` and `q` until no vertex bend remains.
fn straighten(surface: &CombinatorialSurface, mut strip: Strip, p: PlanePoint, q: PlanePoint) -> StripPath {
    let mut best: Option<StripPath> = None;
    for _ in 0..MAX_REROUTES {
        let placements = unfold_strip(surface, &strip).expect("strip from portal route");
        let sp = shorten_in_strip(&strip, &placements, p, q);
        if sp.bends.is_empty() {
            return sp;
        }
        // Frame for reroute bookkeeping.
        let q_first = placements.last().expect("non-empty").apply(q);
        let frame = Isometry::to_origin(midpoint(p, q_first));
        let portals = build_portals(&strip, &placements, &frame);
        let next = reroute(surface, &strip, &portals, sp.bends[0]);
        let improved = best
            .as_ref()
            .is_none_or(|b| sp.path.length < b.path.length - 1e-12);
        if improved {
            best = Some(sp);
        } else {
            break;
        }
        match next {
            Some(s) => strip = s,
            None => break,
        }
    }
    best.expect("at least one pass")
}

/// Shortest geodesic between two surface points.
///
/// Endpoints are ordered canonically before searching, so the result for
/// `(q, p)` is exactly the reverse of the result for `(p, q)`.
pub fn shortest_path(
    surface: &CombinatorialSurface,
    graph: &PortalGraph,
    p: SurfacePoint,
    q: SurfacePoint,
) -> Result<GeodesicPath, GeodesicError> {
    if p.key() > q.key() {
        return shortest_path(surface, graph, q, p).map(|path| path.reversed(surface));
    }
    let tree = graph.tree_from(surface, p);
    path_from_tree(surface, &tree, q)
}

/// Shortest path from the tree's source to `q`.
pub fn path_from_tree(
    surface: &CombinatorialSurface,
    tree: &PortalTree<'_>,
    q: SurfacePoint,
) -> Result<GeodesicPath, GeodesicError> {
    let p = tree.source;
    if !p.pos().is_valid() || !q.pos().is_valid() {
        return Err(GeodesicError::BadPoint);
    }
    if p == q {
        return Ok(GeodesicPath::empty());
    }
    let (_, strip) = tree.strip_to(surface, q).ok_or(GeodesicError::Unreachable)?;
    let mut sp = straighten(surface, strip.clone(), p.pos(), q.pos());
    // A chord through a triangulation vertex: nudge the target and retry.
    let mut nudge = 0;
    while sp.through_vertex && nudge < 3 {
        nudge += 1;
        let pos = q.pos();
        let s = 1.0 - 1e-9 * nudge as f64;
        let moved = PlanePoint {
            x: pos.x * s,
            y: pos.y * s,
        };
        sp = straighten(surface, strip.clone(), p.pos(), moved);
    }
    let mut path = sp.path;
    if nudge > 0 {
        // Keep the endpoint exact; the defect is below the nudge size.
        let last = path.segments.last_mut().expect("non-empty path");
        path.length += dist_unchecked(last.entry, q.pos()) - last.length();
        last.exit = q.pos();
    }
    Ok(path)
}

/// Path between two points by the portal route only (no straightening).
pub fn portal_length(
    surface: &CombinatorialSurface,
    graph: &PortalGraph,
    p: SurfacePoint,
    q: SurfacePoint,
) -> f64 {
    graph.tree_from(surface, p).dist_to(surface, q)
}
