//! Closed hyperbolic surfaces glued from copies of the (π/4, π/4, π/4) triangle.
//!
//! A [`GluingTable`] pairs up the `3F` side slots of `F` triangles. Validation
//! turns a table into a [`CombinatorialSurface`]: every vertex must collect
//! exactly eight corners (angle sum 2π), the dual graph must be connected and
//! the gluing must be orientable. Chart transitions across sides are the
//! isometries that make the tiles fit together in the hyperbolic plane.

use std::collections::VecDeque;
use std::fmt;
use std::sync::OnceLock;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use thiserror::Error;

use crate::hyp::{build_reference_triangle, midpoint, Isometry, ReferenceTriangle};

/// One side of one face.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Slot {
    pub face: usize,
    pub side: usize,
}

impl Slot {
    pub fn new(face: usize, side: usize) -> Self {
        Slot { face, side }
    }

    pub fn index(self) -> usize {
        3 * self.face + self.side
    }

    pub fn from_index(i: usize) -> Self {
        Slot {
            face: i / 3,
            side: i % 3,
        }
    }
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(face {}, side {})", self.face, self.side)
    }
}

/// Whether a gluing reverses the direction of the shared side (`+1`, the
/// orientation-compatible case for counterclockwise faces) or keeps it (`−1`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Orient {
    Plus,
    Minus,
}

impl Orient {
    pub fn sign(self) -> i8 {
        match self {
            Orient::Plus => 1,
            Orient::Minus => -1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SlotMatch {
    pub slot: Slot,
    pub orient: Orient,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GluingError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("entry {entry}: slot {slot} is glued to itself (fixed slot)")]
    FixedSlot { entry: usize, slot: Slot },
    #[error("entry {entry}: slot {slot} is out of range for {faces} faces")]
    OutOfRange { entry: usize, slot: Slot, faces: usize },
    #[error("entry {entry}: slot {slot} already matched (not an involution)")]
    DuplicateSlot { entry: usize, slot: Slot },
    #[error("slot {slot} is never matched")]
    Unmatched { slot: Slot },
    #[error("entry {entry}: orientation must be 1 or -1, got {value}")]
    BadOrient { entry: usize, value: i64 },
    #[error("face count must be positive")]
    NoFaces,
}

/// A fixed-point-free involution on side slots, with orientation bits.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GluingTable {
    faces: usize,
    matches: Vec<SlotMatch>,
}

#[derive(Deserialize)]
struct GluingDoc {
    faces: usize,
    #[serde(rename = "match")]
    entries: Vec<[i64; 5]>,
}

impl GluingTable {
    /// Builds a table from a list of pairs, each slot appearing exactly once.
    pub fn from_pairs(
        faces: usize,
        pairs: impl IntoIterator<Item = (Slot, Slot, Orient)>,
    ) -> Result<Self, GluingError> {
        if faces == 0 {
            return Err(GluingError::NoFaces);
        }
        let mut matches: Vec<Option<SlotMatch>> = vec![None; 3 * faces];
        for (entry, (a, b, orient)) in pairs.into_iter().enumerate() {
            for s in [a, b] {
                if s.face >= faces || s.side > 2 {
                    return Err(GluingError::OutOfRange {
                        entry,
                        slot: s,
                        faces,
                    });
                }
            }
            if a == b {
                return Err(GluingError::FixedSlot { entry, slot: a });
            }
            for s in [a, b] {
                if matches[s.index()].is_some() {
                    return Err(GluingError::DuplicateSlot { entry, slot: s });
                }
            }
            matches[a.index()] = Some(SlotMatch { slot: b, orient });
            matches[b.index()] = Some(SlotMatch { slot: a, orient });
        }
        let matches = matches
            .into_iter()
            .enumerate()
            .map(|(i, m)| {
                m.ok_or(GluingError::Unmatched {
                    slot: Slot::from_index(i),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(GluingTable { faces, matches })
    }

    pub fn parse(text: &str) -> Result<Self, GluingError> {
        let doc: GluingDoc = serde_json::from_str(text).map_err(|e| GluingError::Syntax {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        let mut pairs = Vec::with_capacity(doc.entries.len());
        for (entry, [f, s, f2, s2, o]) in doc.entries.into_iter().enumerate() {
            let orient = match o {
                1 => Orient::Plus,
                -1 => Orient::Minus,
                value => return Err(GluingError::BadOrient { entry, value }),
            };
            let slot = |face: i64, side: i64| {
                if face < 0 || side < 0 {
                    Err(GluingError::OutOfRange {
                        entry,
                        slot: Slot::new(face.max(0) as usize, side.max(0) as usize),
                        faces: doc.faces,
                    })
                } else {
                    Ok(Slot::new(face as usize, side as usize))
                }
            };
            pairs.push((slot(f, s)?, slot(f2, s2)?, orient));
        }
        GluingTable::from_pairs(doc.faces, pairs)
    }

    /// Canonical text: one entry per glued pair, lower slot first, sorted.
    pub fn serialize(&self) -> String {
        let mut out = format!("{{\n  \"faces\": {},\n  \"match\": [\n", self.faces);
        let pairs = self.pairs();
        for (i, (a, b, o)) in pairs.iter().enumerate() {
            out.push_str(&format!(
                "    [{}, {}, {}, {}, {}]{}\n",
                a.face,
                a.side,
                b.face,
                b.side,
                o.sign(),
                if i + 1 < pairs.len() { "," } else { "" }
            ));
        }
        out.push_str("  ]\n}\n");
        out
    }

    pub fn faces(&self) -> usize {
        self.faces
    }

    pub fn partner(&self, slot: Slot) -> SlotMatch {
        self.matches[slot.index()]
    }

    /// Glued pairs with the lower slot first, in ascending order.
    pub fn pairs(&self) -> Vec<(Slot, Slot, Orient)> {
        (0..3 * self.faces)
            .filter_map(|i| {
                let a = Slot::from_index(i);
                let m = self.matches[i];
                (a < m.slot).then_some((a, m.slot, m.orient))
            })
            .collect()
    }
}

/// Corner `corner` of `face`; corner `c` sits at reference vertex `c`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Corner {
    pub face: usize,
    pub corner: usize,
}

/// The corner of the neighbor that is identified with `corner` across `slot`.
/// `corner` must be one of the two endpoints of `slot`.
fn corner_across(m: SlotMatch, slot: Slot, corner: usize) -> Corner {
    let at_start = corner == slot.side;
    let s2 = m.slot.side;
    let c2 = match (m.orient, at_start) {
        (Orient::Plus, true) | (Orient::Minus, false) => (s2 + 1) % 3,
        (Orient::Plus, false) | (Orient::Minus, true) => s2,
    };
    Corner {
        face: m.slot.face,
        corner: c2,
    }
}

/// The side of a face incident to `corner` other than `side`.
fn other_side(corner: usize, side: usize) -> usize {
    if side == corner {
        (corner + 2) % 3
    } else {
        corner
    }
}

/// One step of a rotation around a vertex: the corner visited and the side
/// through which the walk leaves it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CornerStep {
    pub corner: Corner,
    pub exit_side: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    /// A vertex with angle sum different from 2π.
    ConePoint {
        vertex: usize,
        corners: usize,
        first: Corner,
    },
    Disconnected {
        components: usize,
    },
    FaceCount {
        faces: usize,
    },
    NonOrientable {
        slot: Slot,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::ConePoint {
                vertex,
                corners,
                first,
            } => write!(
                f,
                "cone point: vertex orbit {vertex} (through face {} corner {}) has {corners} corners, expected 8",
                first.face, first.corner
            ),
            Violation::Disconnected { components } => {
                write!(f, "disconnected: dual graph has {components} components")
            }
            Violation::FaceCount { faces } => {
                write!(f, "face count {faces} is not a positive multiple of 16")
            }
            Violation::NonOrientable { slot } => {
                write!(f, "non-orientable: inconsistent orientation across slot {slot}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
        write!(f, "invalid surface: {}", parts.join("; "))
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SurfaceError {
    #[error(transparent)]
    Gluing(#[from] GluingError),
    #[error(transparent)]
    Invalid(#[from] ValidationReport),
    #[error("face count {0} must be a positive multiple of 16")]
    FaceCount(usize),
    #[error("generation budget exhausted after {attempts} attempts; retry with another seed")]
    BudgetExhausted { attempts: usize },
}

/// A validated closed surface.
#[derive(Debug, Clone)]
pub struct CombinatorialSurface {
    table: GluingTable,
    /// Vertex id of every corner, indexed by `3 * face + corner`.
    corner_vertex: Vec<usize>,
    /// Corner cycles around each vertex.
    vertex_cycles: Vec<Vec<CornerStep>>,
    /// Edge id of every slot.
    slot_edge: Vec<usize>,
    /// Lower slot of each edge, ascending.
    edges: Vec<(Slot, Slot)>,
    /// Face orientation class (`false` = as given).
    flipped: Vec<bool>,
    transitions: Vec<Isometry>,
    genus: usize,
}

fn reference() -> &'static ReferenceTriangle {
    static REF: OnceLock<ReferenceTriangle> = OnceLock::new();
    REF.get_or_init(build_reference_triangle)
}

/// Shared reference triangle.
pub fn tile() -> &'static ReferenceTriangle {
    reference()
}

/// Walks the corner cycle starting at `start`, leaving through `exit_side`.
fn corner_cycle(table: &GluingTable, start: Corner, exit_side: usize) -> Vec<CornerStep> {
    let mut steps = Vec::new();
    let mut cur = CornerStep {
        corner: start,
        exit_side,
    };
    loop {
        steps.push(cur);
        let slot = Slot::new(cur.corner.face, cur.exit_side);
        let m = table.partner(slot);
        let next = corner_across(m, slot, cur.corner.corner);
        let exit = other_side(next.corner, m.slot.side);
        cur = CornerStep {
            corner: next,
            exit_side: exit,
        };
        if cur.corner == start && cur.exit_side == exit_side {
            return steps;
        }
        if steps.len() > 3 * table.faces() + 1 {
            // Unreachable for an involution; guards against malformed input.
            return steps;
        }
    }
}

/// Validates a gluing table.
pub fn validate(table: &GluingTable) -> Result<CombinatorialSurface, ValidationReport> {
    let faces = table.faces();
    let mut violations = Vec::new();
    if faces == 0 || !faces.is_multiple_of(16) {
        violations.push(Violation::FaceCount { faces });
    }

    // Vertex orbits.
    let mut corner_vertex = vec![usize::MAX; 3 * faces];
    let mut vertex_cycles = Vec::new();
    for i in 0..3 * faces {
        if corner_vertex[i] != usize::MAX {
            continue;
        }
        let start = Corner {
            face: i / 3,
            corner: i % 3,
        };
        let cycle = corner_cycle(table, start, start.corner);
        let v = vertex_cycles.len();
        for st in &cycle {
            corner_vertex[3 * st.corner.face + st.corner.corner] = v;
        }
        if cycle.len() != 8 {
            violations.push(Violation::ConePoint {
                vertex: v,
                corners: cycle.len(),
                first: start,
            });
        }
        vertex_cycles.push(cycle);
    }

    // Dual connectivity and orientation classes in one sweep.
    let mut flipped = vec![false; faces];
    let mut seen = vec![false; faces];
    let mut components = 0;
    let mut orient_bad = None;
    for root in 0..faces {
        if seen[root] {
            continue;
        }
        components += 1;
        seen[root] = true;
        let mut queue = VecDeque::from([root]);
        while let Some(f) = queue.pop_front() {
            for s in 0..3 {
                let slot = Slot::new(f, s);
                let m = table.partner(slot);
                let want = flipped[f] ^ (m.orient == Orient::Minus);
                let g = m.slot.face;
                if !seen[g] {
                    seen[g] = true;
                    flipped[g] = want;
                    queue.push_back(g);
                } else if flipped[g] != want && orient_bad.is_none() {
                    orient_bad = Some(slot);
                }
            }
        }
    }
    if components > 1 {
        violations.push(Violation::Disconnected { components });
    }
    if let Some(slot) = orient_bad {
        violations.push(Violation::NonOrientable { slot });
    }

    if !violations.is_empty() {
        return Err(ValidationReport { violations });
    }

    let mut slot_edge = vec![usize::MAX; 3 * faces];
    let mut edges = Vec::with_capacity(3 * faces / 2);
    for (a, b, _) in table.pairs() {
        slot_edge[a.index()] = edges.len();
        slot_edge[b.index()] = edges.len();
        edges.push((a, b));
    }

    let v = vertex_cycles.len();
    let e = edges.len();
    let chi = v as i64 - e as i64 + faces as i64;
    let genus_formula = 1 + faces / 16;
    // Both routes must agree on a valid surface.
    assert_eq!(chi, 2 - 2 * genus_formula as i64, "Euler characteristic mismatch");

    let transitions = (0..3 * faces)
        .map(|i| transition_isometry(Slot::from_index(i), table.partner(Slot::from_index(i))))
        .collect();

    Ok(CombinatorialSurface {
        table: table.clone(),
        corner_vertex,
        vertex_cycles,
        slot_edge,
        edges,
        flipped,
        transitions,
        genus: genus_formula,
    })
}

/// Isometry taking the neighbor's chart into this face's chart across `slot`.
fn transition_isometry(slot: Slot, m: SlotMatch) -> Isometry {
    let t = reference();
    let (a, b) = t.side(slot.side);
    let shift = (slot.side as i64 - m.slot.side as i64).rem_euclid(3) as f64;
    let rot = Isometry::rotation(2.0 * std::f64::consts::PI * shift / 3.0);
    let flip = match m.orient {
        Orient::Plus => Isometry::half_turn(midpoint(a, b)),
        Orient::Minus => Isometry::reflection_through(a, b),
    };
    flip.compose(&rot)
}

impl CombinatorialSurface {
    pub fn table(&self) -> &GluingTable {
        &self.table
    }

    pub fn faces(&self) -> usize {
        self.table.faces()
    }

    pub fn genus(&self) -> usize {
        self.genus
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_cycles.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.vertex_count() as i64 - self.edge_count() as i64 + self.faces() as i64
    }

    pub fn partner(&self, slot: Slot) -> SlotMatch {
        self.table.partner(slot)
    }

    pub fn edges(&self) -> &[(Slot, Slot)] {
        &self.edges
    }

    pub fn edge_of(&self, slot: Slot) -> usize {
        self.slot_edge[slot.index()]
    }

    pub fn vertex_of(&self, c: Corner) -> usize {
        self.corner_vertex[3 * c.face + c.corner]
    }

    pub fn face_vertices(&self, face: usize) -> [usize; 3] {
        [0, 1, 2].map(|c| self.corner_vertex[3 * face + c])
    }

    pub fn vertex_cycle(&self, v: usize) -> &[CornerStep] {
        &self.vertex_cycles[v]
    }

    pub fn is_flipped(&self, face: usize) -> bool {
        self.flipped[face]
    }

    /// Neighbor faces across sides 0, 1, 2.
    pub fn dual_neighbors(&self, face: usize) -> [usize; 3] {
        [0, 1, 2].map(|s| self.table.partner(Slot::new(face, s)).slot.face)
    }

    pub fn transition(&self, face: usize, side: usize) -> &Isometry {
        &self.transitions[3 * face + side]
    }

    /// Corner of the neighbor identified with `corner` of `slot.face`.
    pub fn corner_across(&self, slot: Slot, corner: usize) -> Corner {
        corner_across(self.table.partner(slot), slot, corner)
    }

    /// Holonomy of the chart transitions once around vertex `v`.
    pub fn vertex_holonomy(&self, v: usize) -> Isometry {
        let mut acc = Isometry::identity();
        for st in &self.vertex_cycles[v] {
            acc = acc.compose(self.transition(st.corner.face, st.exit_side));
        }
        acc
    }
}

/// Parses and validates in one step.
pub fn load_surface(text: &str) -> Result<CombinatorialSurface, SurfaceError> {
    let table = GluingTable::parse(text)?;
    Ok(validate(&table)?)
}

/// Upper estimate of the diameter from portal-graph distances.
///
/// Sources are `sample_count` face centroids spread over the face range;
/// targets are every face centroid and every vertex. Portal sets are nested
/// under refinement, so the estimate never grows when `portal_density` grows.
pub fn surface_diameter_estimate(
    surface: &CombinatorialSurface,
    sample_count: usize,
    portal_density: usize,
) -> f64 {
    use crate::geodesic::{build_portal_graph, SurfacePoint};
    use crate::hyp::PlanePoint;

    let graph = match build_portal_graph(surface, portal_density.max(1)) {
        Ok(g) => g,
        Err(_) => return f64::INFINITY,
    };
    let faces = surface.faces();
    let count = sample_count.clamp(1, faces);
    let mut targets: Vec<SurfacePoint> = (0..faces)
        .map(|f| SurfacePoint::new(f, PlanePoint::ORIGIN))
        .collect();
    let mut seen = vec![false; surface.vertex_count()];
    for f in 0..faces {
        for c in 0..3 {
            let v = surface.vertex_of(Corner { face: f, corner: c });
            if !seen[v] {
                seen[v] = true;
                targets.push(SurfacePoint::new(f, tile().vertices[c]));
            }
        }
    }
    let mut worst: f64 = 0.0;
    for i in 0..count {
        let src = SurfacePoint::new(i * faces / count, PlanePoint::ORIGIN);
        let tree = graph.tree_from(surface, src);
        for t in &targets {
            worst = worst.max(tree.dist_to(surface, *t));
        }
    }
    worst
}

const GEN_ATTEMPTS: usize = 64;
const GEN_BACKTRACK_BUDGET: usize = 200_000;

/// Random orientable gluing of `faces` triangles with every vertex of degree 8.
///
/// Randomized depth-first search over side matchings: the search always
/// extends the longest open vertex chain, rejects gluings that would close a
/// vertex with fewer or more than eight corners, and restarts when the
/// backtrack budget runs out.
pub fn generate_surface(faces: usize, seed: u64) -> Result<CombinatorialSurface, SurfaceError> {
    if faces == 0 || !faces.is_multiple_of(16) {
        return Err(SurfaceError::FaceCount(faces));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..GEN_ATTEMPTS {
        let mut search = GluingSearch::new(faces);
        if let Some(pairs) = search.run(&mut rng, GEN_BACKTRACK_BUDGET) {
            let table = GluingTable::from_pairs(faces, pairs)?;
            if let Ok(surface) = validate(&table) {
                return Ok(surface);
            }
        }
    }
    Err(SurfaceError::BudgetExhausted {
        attempts: GEN_ATTEMPTS,
    })
}

/// Partial matching state. All gluings are `+1`.
struct GluingSearch {
    faces: usize,
    partner: Vec<Option<usize>>,
}

#[derive(Debug, Clone, Copy)]
struct Chain {
    len: usize,
    closed: bool,
    ends: [Option<usize>; 2],
}

impl GluingSearch {
    fn new(faces: usize) -> Self {
        GluingSearch {
            faces,
            partner: vec![None; 3 * faces],
        }
    }

    /// Walks from `corner` leaving through `side` until the chain closes or
    /// hits an unmatched slot. Returns steps taken and the stop condition.
    fn walk(&self, start: Corner, side: usize) -> (usize, Option<usize>, bool) {
        let mut cur = start;
        let mut exit = side;
        let mut steps = 0;
        loop {
            let slot = Slot::new(cur.face, exit);
            let Some(p) = self.partner[slot.index()] else {
                return (steps, Some(slot.index()), false);
            };
            let m = SlotMatch {
                slot: Slot::from_index(p),
                orient: Orient::Plus,
            };
            let next = corner_across(m, slot, cur.corner);
            exit = other_side(next.corner, m.slot.side);
            steps += 1;
            if next == start {
                return (steps, None, true);
            }
            cur = next;
            if steps > 16 {
                return (steps, None, false);
            }
        }
    }

    fn chain(&self, c: Corner) -> Chain {
        let (fwd, end_a, closed) = self.walk(c, c.corner);
        if closed {
            return Chain {
                len: fwd,
                closed: true,
                ends: [None, None],
            };
        }
        let (back, end_b, _) = self.walk(c, (c.corner + 2) % 3);
        Chain {
            len: 1 + fwd + back,
            closed: false,
            ends: [end_a, end_b],
        }
    }

    fn chain_ok(ch: &Chain) -> bool {
        if ch.closed {
            ch.len == 8
        } else {
            ch.len < 8 || (ch.len == 8 && ch.ends[0] != ch.ends[1])
        }
    }

    fn gluing_ok(&self, a: usize) -> bool {
        let s = Slot::from_index(a);
        [s.side, (s.side + 1) % 3].iter().all(|&c| {
            let ch = self.chain(Corner {
                face: s.face,
                corner: c,
            });
            Self::chain_ok(&ch)
        })
    }

    /// The free slot that must be glued next, with forced partner if any.
    fn focus(&self) -> Option<(usize, Option<usize>)> {
        let mut best: Option<(usize, usize, Option<usize>)> = None;
        for i in 0..3 * self.faces {
            if self.partner[i].is_some() {
                continue;
            }
            let s = Slot::from_index(i);
            for c in [s.side, (s.side + 1) % 3] {
                let ch = self.chain(Corner {
                    face: s.face,
                    corner: c,
                });
                let forced = if ch.len == 8 {
                    ch.ends.iter().flatten().copied().find(|&e| e != i)
                } else {
                    None
                };
                if best.is_none_or(|(l, _, _)| ch.len > l) {
                    best = Some((ch.len, i, forced));
                }
            }
        }
        best.map(|(_, i, forced)| (i, forced))
    }

    fn run(&mut self, rng: &mut ChaCha8Rng, budget: usize) -> Option<Vec<(Slot, Slot, Orient)>> {
        struct Frame {
            focus: usize,
            candidates: Vec<usize>,
            next: usize,
            glued: Option<usize>,
        }
        let total = 3 * self.faces / 2;
        let mut stack: Vec<Frame> = Vec::with_capacity(total);
        let mut backtracks = 0;
        let mut fresh = true;
        loop {
            if fresh {
                if stack.len() == total {
                    break;
                }
                let (focus, forced) = self.focus()?;
                let candidates = match forced {
                    Some(p) => vec![p],
                    None => {
                        let mut c: Vec<usize> = (0..3 * self.faces)
                            .filter(|&j| j != focus && self.partner[j].is_none())
                            .collect();
                        c.shuffle(rng);
                        c
                    }
                };
                stack.push(Frame {
                    focus,
                    candidates,
                    next: 0,
                    glued: None,
                });
            }
            let frame = stack.last_mut()?;
            if let Some(prev) = frame.glued.take() {
                self.partner[frame.focus] = None;
                self.partner[prev] = None;
            }
            let mut placed = false;
            while frame.next < frame.candidates.len() {
                let cand = frame.candidates[frame.next];
                frame.next += 1;
                self.partner[frame.focus] = Some(cand);
                self.partner[cand] = Some(frame.focus);
                if self.gluing_ok(frame.focus) && self.gluing_ok(cand) {
                    frame.glued = Some(cand);
                    placed = true;
                    break;
                }
                self.partner[frame.focus] = None;
                self.partner[cand] = None;
            }
            if placed {
                fresh = true;
            } else {
                stack.pop();
                backtracks += 1;
                if backtracks > budget || stack.is_empty() {
                    return None;
                }
                fresh = false;
            }
        }
        let mut pairs = Vec::with_capacity(total);
        for i in 0..3 * self.faces {
            let j = self.partner[i].expect("complete matching");
            if i < j {
                pairs.push((Slot::from_index(i), Slot::from_index(j), Orient::Plus));
            }
        }
        Some(pairs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hyp::dist_unchecked;

    #[test]
    fn genus_two_generation_and_counts() {
        let s = generate_surface(16, 1).unwrap();
        assert_eq!(s.genus(), 2);
        assert_eq!(s.vertex_count(), 6);
        assert_eq!(s.edge_count(), 24);
        assert_eq!(s.euler_characteristic(), -2);
    }

    #[test]
    fn generator_rejects_bad_face_counts() {
        assert_eq!(generate_surface(24, 1).unwrap_err(), SurfaceError::FaceCount(24));
        assert_eq!(generate_surface(0, 1).unwrap_err(), SurfaceError::FaceCount(0));
    }

    #[test]
    fn generator_is_deterministic() {
        let a = generate_surface(32, 9).unwrap();
        let b = generate_surface(32, 9).unwrap();
        assert_eq!(a.table().serialize(), b.table().serialize());
    }

    #[test]
    fn genus_five_family_member() {
        for seed in [0, 1, 2] {
            let s = generate_surface(64, seed).unwrap();
            assert_eq!(s.genus(), 5);
            assert_eq!(s.euler_characteristic(), -8);
        }
    }

    #[test]
    fn fixed_slot_is_rejected() {
        let text = r#"{"faces": 1, "match": [[0, 0, 0, 0, 1]]}"#;
        match GluingTable::parse(text) {
            Err(GluingError::FixedSlot { slot, .. }) => assert_eq!(slot, Slot::new(0, 0)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn syntax_errors_carry_position() {
        let err = GluingTable::parse("{\n \"faces\": 16,\n \"match\": [ [0,0,1 }").unwrap_err();
        match err {
            GluingError::Syntax { line, .. } => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn duplicate_and_unmatched_slots() {
        let dup = r#"{"faces": 1, "match": [[0, 0, 0, 1, 1], [0, 1, 0, 2, 1]]}"#;
        assert!(matches!(
            GluingTable::parse(dup),
            Err(GluingError::DuplicateSlot { .. })
        ));
        let missing = r#"{"faces": 1, "match": [[0, 0, 0, 1, 1]]}"#;
        assert!(matches!(
            GluingTable::parse(missing),
            Err(GluingError::Unmatched { .. })
        ));
        let bad_o = r#"{"faces": 1, "match": [[0, 0, 0, 1, 2]]}"#;
        assert!(matches!(
            GluingTable::parse(bad_o),
            Err(GluingError::BadOrient { .. })
        ));
    }

    #[test]
    fn serialize_roundtrip() {
        let s = generate_surface(16, 4).unwrap();
        let text = s.table().serialize();
        let back = GluingTable::parse(&text).unwrap();
        assert_eq!(&back, s.table());
        assert_eq!(back.serialize(), text);
    }

    #[test]
    fn cone_point_is_reported() {
        // Swap partners of two gluings to break vertex degrees.
        let s = generate_surface(16, 1).unwrap();
        let mut pairs = s.table().pairs();
        let (a0, b0, o0) = pairs[0];
        let (a1, b1, o1) = pairs[1];
        pairs[0] = (a0, b1, o0);
        pairs[1] = (a1, b0, o1);
        let t = GluingTable::from_pairs(16, pairs).unwrap();
        let report = validate(&t).unwrap_err();
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::ConePoint { corners, .. } if *corners != 8)));
        assert!(report.to_string().contains("cone point"));
    }

    #[test]
    fn disjoint_union_is_disconnected() {
        let s = generate_surface(16, 1).unwrap();
        let mut pairs = s.table().pairs();
        let shifted: Vec<_> = pairs
            .iter()
            .map(|&(a, b, o)| (Slot::new(a.face + 16, a.side), Slot::new(b.face + 16, b.side), o))
            .collect();
        pairs.extend(shifted);
        let t = GluingTable::from_pairs(32, pairs).unwrap();
        let report = validate(&t).unwrap_err();
        assert_eq!(report.violations, vec![Violation::Disconnected { components: 2 }]);
    }

    #[test]
    fn flipping_a_face_keeps_the_surface_valid() {
        // Relabel face 0 clockwise: the gluing stays orientable with mixed
        // orientation bits and the geometry must still close up.
        let s = generate_surface(16, 2).unwrap();
        let relabel = |sl: Slot| -> Slot {
            if sl.face == 0 {
                let new_side = match sl.side {
                    0 => 2,
                    1 => 1,
                    _ => 0,
                };
                Slot::new(0, new_side)
            } else {
                sl
            }
        };
        let pairs: Vec<_> = s
            .table()
            .pairs()
            .into_iter()
            .map(|(a, b, o)| {
                let touches = (a.face == 0) as u8 + (b.face == 0) as u8;
                let o = if touches == 1 {
                    match o {
                        Orient::Plus => Orient::Minus,
                        Orient::Minus => Orient::Plus,
                    }
                } else {
                    o
                };
                (relabel(a), relabel(b), o)
            })
            .collect();
        let t = GluingTable::from_pairs(16, pairs).unwrap();
        let flipped = validate(&t).unwrap();
        assert!((0..16).any(|f| flipped.is_flipped(f)));
        for v in 0..flipped.vertex_count() {
            assert!(flipped.vertex_holonomy(v).approx_eq(&Isometry::identity(), 1e-8));
        }
    }

    #[test]
    fn transitions_are_consistent() {
        let s = generate_surface(32, 3).unwrap();
        let t = tile();
        for f in 0..s.faces() {
            for side in 0..3 {
                let slot = Slot::new(f, side);
                let m = s.partner(slot);
                let there = s.transition(m.slot.face, m.slot.side);
                let here = s.transition(f, side);
                assert!(here.compose(there).approx_eq(&Isometry::identity(), 1e-9));
                // Shared side endpoints coincide.
                let (a, b) = t.side(side);
                let (a2, b2) = t.side(m.slot.side);
                let (ia, ib) = (here.apply(a2), here.apply(b2));
                assert!(dist_unchecked(ia, b) < 1e-9 && dist_unchecked(ib, a) < 1e-9);
                // The neighbor's opposite vertex lands outside this tile.
                let opp = t.vertices[(m.slot.side + 2) % 3];
                assert!(!t.contains(here.apply(opp), 1e-9));
            }
        }
        for v in 0..s.vertex_count() {
            assert_eq!(s.vertex_cycle(v).len(), 8);
            assert!(s.vertex_holonomy(v).approx_eq(&Isometry::identity(), 1e-8));
        }
    }

    #[test]
    fn dual_graph_is_cubic_and_connected() {
        let s = generate_surface(48, 5).unwrap();
        let mut deg = vec![0; s.faces()];
        for f in 0..s.faces() {
            for g in s.dual_neighbors(f) {
                deg[g] += 1;
            }
        }
        assert!(deg.iter().all(|&d| d == 3));
    }
}
