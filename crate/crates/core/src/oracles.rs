//! Random geometric drawings on the round sphere and on flat tori, as
//! reference backends with known or checkable answers.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::drawing::{trial_seed, ExperimentRecord};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("point is not on the unit sphere")]
    NotUnit,
    #[error("lattice generators are dependent")]
    Degenerate,
}

/// Unit vector in R³.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpherePoint([f64; 3]);

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

impl SpherePoint {
    pub fn new(v: [f64; 3]) -> Result<Self, OracleError> {
        if (dot(v, v).sqrt() - 1.0).abs() > 1e-12 {
            return Err(OracleError::NotUnit);
        }
        Ok(SpherePoint(v))
    }

    pub fn coords(&self) -> [f64; 3] {
        self.0
    }

    /// Uniform point: uniform height and longitude (Archimedes).
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let z: f64 = rng.gen_range(-1.0..=1.0);
        let t: f64 = rng.gen_range(0.0..2.0 * PI);
        let s = (1.0 - z * z).max(0.0).sqrt();
        SpherePoint([s * t.cos(), s * t.sin(), z])
    }
}

fn triple(a: SpherePoint, b: SpherePoint, c: SpherePoint) -> f64 {
    dot(cross(a.0, b.0), c.0)
}

fn sign(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

/// Whether the minor arcs `ab` and `cd` cross at an interior point of both.
/// Arcs sharing an endpoint never cross.
pub fn arcs_cross(a: SpherePoint, b: SpherePoint, c: SpherePoint, d: SpherePoint) -> bool {
    if a == c || a == d || b == c || b == d {
        return false;
    }
    let acb = -sign(triple(a, b, c));
    let bda = sign(triple(a, b, d));
    if acb != bda || acb == 0 {
        return false;
    }
    let cbd = -sign(triple(c, d, b));
    let dac = sign(triple(c, d, a));
    cbd == acb && dac == acb
}

/// Points with no antipodal or coincident pair.
fn sphere_points<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<SpherePoint> {
    let mut pts: Vec<SpherePoint> = Vec::with_capacity(n);
    while pts.len() < n {
        let p = SpherePoint::random(rng);
        let bad = pts.iter().any(|q| dot(p.0, q.0).abs() > 1.0 - 1e-12);
        if !bad {
            pts.push(p);
        }
    }
    pts
}

/// Crossings of the complete graph on `pts` drawn with minor arcs.
pub fn sphere_crossings(pts: &[SpherePoint]) -> u64 {
    let edges = crate::drawing::complete_graph_edges(pts.len());
    let mut count = 0;
    for (i, &(a, b)) in edges.iter().enumerate() {
        for &(c, d) in &edges[i + 1..] {
            if a == c || a == d || b == c || b == d {
                continue;
            }
            if arcs_cross(pts[a], pts[b], pts[c], pts[d]) {
                count += 1;
            }
        }
    }
    count
}

/// Crossings of a random geometric drawing of K_n on the sphere.
pub fn sphere_drawing<R: Rng + ?Sized>(n: usize, rng: &mut R) -> u64 {
    sphere_crossings(&sphere_points(n, rng))
}

/// 3·C(n, 4)/8: every 4-set crosses with probability 1/8 under each of its
/// three perfect matchings.
pub fn sphere_expected_crossings(n: usize) -> f64 {
    if n < 4 {
        return 0.0;
    }
    let n = n as f64;
    3.0 * n * (n - 1.0) * (n - 2.0) * (n - 3.0) / 24.0 / 8.0
}

/// Lattice in the plane given by two generators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorusLattice {
    pub v1: [f64; 2],
    pub v2: [f64; 2],
}

impl TorusLattice {
    pub fn new(v1: [f64; 2], v2: [f64; 2]) -> Result<Self, OracleError> {
        let l = TorusLattice { v1, v2 };
        if l.area().abs() < 1e-12 {
            return Err(OracleError::Degenerate);
        }
        Ok(l)
    }

    pub fn square() -> Self {
        TorusLattice {
            v1: [1.0, 0.0],
            v2: [0.0, 1.0],
        }
    }

    /// Z[1, e^{2πi/3}], with the equivalent reduced basis 1, e^{iπ/3}.
    pub fn honeycomb() -> Self {
        TorusLattice {
            v1: [1.0, 0.0],
            v2: [0.5, 3f64.sqrt() / 2.0],
        }
    }

    pub fn area(&self) -> f64 {
        self.v1[0] * self.v2[1] - self.v1[1] * self.v2[0]
    }

    pub fn vector(&self, i: i64, j: i64) -> [f64; 2] {
        let (i, j) = (i as f64, j as f64);
        [i * self.v1[0] + j * self.v2[0], i * self.v1[1] + j * self.v2[1]]
    }

    pub fn point(&self, a: f64, b: f64) -> [f64; 2] {
        [a * self.v1[0] + b * self.v2[0], a * self.v1[1] + b * self.v2[1]]
    }

    /// Lattice coordinates of a plane point.
    pub fn coords(&self, p: [f64; 2]) -> [f64; 2] {
        let det = self.area();
        [
            (p[0] * self.v2[1] - p[1] * self.v2[0]) / det,
            (self.v1[0] * p[1] - self.v1[1] * p[0]) / det,
        ]
    }
}

/// Offset from `p` to the nearest translate of `q`, the translate chosen,
/// and whether the choice was tied or needed the wider window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShortArc {
    pub delta: [f64; 2],
    pub tie: bool,
    pub widened: bool,
}

fn norm2(v: [f64; 2]) -> f64 {
    v[0] * v[0] + v[1] * v[1]
}

fn nearest(l: &TorusLattice, p: [f64; 2], q: [f64; 2], reach: i64) -> ([f64; 2], bool) {
    let mut best: Option<([f64; 2], f64)> = None;
    let mut tie = false;
    for i in -reach..=reach {
        for j in -reach..=reach {
            let w = l.vector(i, j);
            let d = [q[0] + w[0] - p[0], q[1] + w[1] - p[1]];
            let len = norm2(d);
            match best {
                Some((_, b)) if len == b => tie = true,
                Some((_, b)) if len > b => {}
                _ => {
                    best = Some((d, len));
                    tie = false;
                }
            }
        }
    }
    (best.expect("window is non-empty").0, tie)
}

/// Shortest straight arc from `p` to `q` on the torus: nearest of the nine
/// adjacent translates, widened to 25 when a farther one is shorter.
pub fn short_arc(l: &TorusLattice, p: [f64; 2], q: [f64; 2]) -> ShortArc {
    let (d9, tie9) = nearest(l, p, q, 1);
    let (d25, tie25) = nearest(l, p, q, 2);
    if norm2(d25) < norm2(d9) {
        ShortArc {
            delta: d25,
            tie: tie25,
            widened: true,
        }
    } else {
        ShortArc {
            delta: d9,
            tie: tie9,
            widened: false,
        }
    }
}

fn orient(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn segments_cross(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> bool {
    let (o1, o2) = (orient(a, b, c), orient(a, b, d));
    let (o3, o4) = (orient(c, d, a), orient(c, d, b));
    o1 * o2 < 0.0 && o3 * o4 < 0.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TorusReport {
    pub crossings: u64,
    pub ties: u64,
    pub widened: u64,
}

/// Crossings of K_n on the torus with vertices at plane points `pts`
/// (inside the fundamental domain) and edges drawn as shortest arcs.
pub fn torus_crossings(l: &TorusLattice, pts: &[[f64; 2]]) -> TorusReport {
    let n = pts.len();
    let mut arcs = vec![[0.0; 2]; n * n];
    let mut report = TorusReport {
        crossings: 0,
        ties: 0,
        widened: 0,
    };
    for u in 0..n {
        for v in (u + 1)..n {
            let a = short_arc(l, pts[u], pts[v]);
            report.ties += a.tie as u64;
            report.widened += a.widened as u64;
            arcs[u * n + v] = a.delta;
            arcs[v * n + u] = [-a.delta[0], -a.delta[1]];
        }
    }
    let edges = crate::drawing::complete_graph_edges(n);
    let add = |p: [f64; 2], d: [f64; 2]| [p[0] + d[0], p[1] + d[1]];
    for (i, &(a, b)) in edges.iter().enumerate() {
        for &(c, d) in &edges[i + 1..] {
            // Start both segments at a shared vertex, if any, so the shared
            // point has identical coordinates in both.
            let (s1, e1, s2, e2) = match (a == c || a == d, b == c || b == d) {
                (true, _) => {
                    let o = if a == c { d } else { c };
                    (a, b, a, o)
                }
                (_, true) => {
                    let o = if b == c { d } else { c };
                    (b, a, b, o)
                }
                _ => (a, b, c, d),
            };
            let p1 = pts[s1];
            let q1 = add(p1, arcs[s1 * n + e1]);
            for i in -2..=2 {
                for j in -2..=2 {
                    let w = l.vector(i, j);
                    let p2 = add(pts[s2], w);
                    let q2 = add(p2, arcs[s2 * n + e2]);
                    if segments_cross(p1, q1, p2, q2) {
                        report.crossings += 1;
                    }
                }
            }
        }
    }
    report
}

pub fn torus_points<R: Rng + ?Sized>(l: &TorusLattice, n: usize, rng: &mut R) -> Vec<[f64; 2]> {
    (0..n).map(|_| l.point(rng.gen(), rng.gen())).collect()
}

/// Crossings of a random geometric drawing of K_n on a flat torus.
pub fn torus_drawing<R: Rng + ?Sized>(n: usize, l: &TorusLattice, rng: &mut R) -> TorusReport {
    torus_crossings(l, &torus_points(l, n, rng))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Backend {
    Sphere,
    TorusSquare,
    TorusHoneycomb,
}

impl Backend {
    pub fn id(self) -> &'static str {
        match self {
            Backend::Sphere => "sphere",
            Backend::TorusSquare => "torus:square",
            Backend::TorusHoneycomb => "torus:honeycomb",
        }
    }

    pub fn genus(self) -> usize {
        match self {
            Backend::Sphere => 0,
            _ => 1,
        }
    }
}

impl std::str::FromStr for Backend {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        [Backend::Sphere, Backend::TorusSquare, Backend::TorusHoneycomb]
            .into_iter()
            .find(|b| b.id() == s)
            .ok_or_else(|| format!("unknown backend {s:?}"))
    }
}

/// Independent trials of K_n on a reference backend, in the experiment CSV
/// schema. Congestion columns are zero; torus arc ties count as degenerate.
pub fn oracle_experiment(backend: Backend, n: usize, trials: u64, master_seed: u64) -> Vec<ExperimentRecord> {
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let seed = trial_seed(master_seed, t);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (crossings, degenerate_events) = match backend {
                Backend::Sphere => (sphere_drawing(n, &mut rng), 0),
                Backend::TorusSquare | Backend::TorusHoneycomb => {
                    let l = if backend == Backend::TorusSquare {
                        TorusLattice::square()
                    } else {
                        TorusLattice::honeycomb()
                    };
                    let r = torus_drawing(n, &l, &mut rng);
                    (r.crossings, r.ties)
                }
            };
            ExperimentRecord {
                surface_id: backend.id().to_string(),
                g: backend.genus(),
                faces: 0,
                n,
                trial: t,
                seed,
                crossings,
                con_max: 0,
                con_sum: 0,
                degenerate_events,
            }
        })
        .collect()
}

/// One-sided Welch test of mean(a) < mean(b). Returns (t, df, p).
pub fn welch_less(a: &[f64], b: &[f64]) -> (f64, f64, f64) {
    use statrs::distribution::{ContinuousCDF, StudentsT};
    use statrs::statistics::Statistics;
    let (ma, mb) = (a.mean(), b.mean());
    let (va, vb) = (a.variance() / a.len() as f64, b.variance() / b.len() as f64);
    let se = (va + vb).sqrt();
    let t = (mb - ma) / se;
    let df = (va + vb).powi(2) / (va * va / (a.len() as f64 - 1.0) + vb * vb / (b.len() as f64 - 1.0));
    let p = StudentsT::new(0.0, 1.0, df).expect("positive df").sf(t);
    (t, df, p)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Crossing test by locating the great-circle intersection and checking
    /// it lies on both arcs.
    fn arcs_cross_by_angles(a: SpherePoint, b: SpherePoint, c: SpherePoint, d: SpherePoint) -> bool {
        let n1 = cross(a.0, b.0);
        let n2 = cross(c.0, d.0);
        let x = cross(n1, n2);
        let len = dot(x, x).sqrt();
        let angle = |u: [f64; 3], v: [f64; 3]| dot(u, v).clamp(-1.0, 1.0).acos();
        [1.0, -1.0].iter().any(|s| {
            let p = [s * x[0] / len, s * x[1] / len, s * x[2] / len];
            (angle(a.0, p) + angle(p, b.0) - angle(a.0, b.0)).abs() < 1e-9
                && (angle(c.0, p) + angle(p, d.0) - angle(c.0, d.0)).abs() < 1e-9
        })
    }

    #[test]
    fn sphere_predicate_matches_angle_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20_000 {
            let p = sphere_points(4, &mut rng);
            let v = arcs_cross(p[0], p[1], p[2], p[3]);
            assert_eq!(v, arcs_cross_by_angles(p[0], p[1], p[2], p[3]));
            assert_eq!(v, arcs_cross(p[2], p[3], p[0], p[1]));
            assert_eq!(v, arcs_cross(p[1], p[0], p[3], p[2]));
            assert!(!arcs_cross(p[0], p[1], p[0], p[2]));
        }
    }

    #[test]
    fn small_sphere_drawings() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        assert_eq!(sphere_drawing(2, &mut rng), 0);
        assert_eq!(sphere_drawing(3, &mut rng), 0);
        assert_eq!(sphere_expected_crossings(12), 185.625);
        assert!(SpherePoint::new([1.0, 1.0, 0.0]).is_err());
    }

    #[test]
    fn quadruple_probability_is_one_eighth() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let trials = 1_000_000;
        let mut hits = 0u64;
        for _ in 0..trials {
            let p: Vec<SpherePoint> = (0..4).map(|_| SpherePoint::random(&mut rng)).collect();
            hits += arcs_cross(p[0], p[1], p[2], p[3]) as u64;
        }
        let f = hits as f64 / trials as f64;
        let se = (0.125f64 * 0.875 / trials as f64).sqrt();
        assert!((f - 0.125).abs() < 3.0 * se, "{f}");
    }

    /// Unrolled count: every translate of every edge in a 5×5 window, with
    /// crossings kept when their point reduces into the fundamental domain.
    fn unrolled(l: &TorusLattice, pts: &[[f64; 2]]) -> u64 {
        let n = pts.len();
        let mut segs = Vec::new();
        for u in 0..n {
            for v in (u + 1)..n {
                let d = short_arc(l, pts[u], pts[v]).delta;
                for i in -2..=2 {
                    for j in -2..=2 {
                        let w = l.vector(i, j);
                        let p = [pts[u][0] + w[0], pts[u][1] + w[1]];
                        segs.push(((u, v), p, [p[0] + d[0], p[1] + d[1]]));
                    }
                }
            }
        }
        let mut count = 0;
        for i in 0..segs.len() {
            for j in (i + 1)..segs.len() {
                let ((a, b), p, q) = segs[i];
                let ((c, d), r, s) = segs[j];
                if (a, b) == (c, d) {
                    continue;
                }
                let den = (q[0] - p[0]) * (s[1] - r[1]) - (q[1] - p[1]) * (s[0] - r[0]);
                if den == 0.0 {
                    continue;
                }
                let t = ((r[0] - p[0]) * (s[1] - r[1]) - (r[1] - p[1]) * (s[0] - r[0])) / den;
                let u = ((r[0] - p[0]) * (q[1] - p[1]) - (r[1] - p[1]) * (q[0] - p[0])) / den;
                let eps = 1e-9;
                if t > eps && t < 1.0 - eps && u > eps && u < 1.0 - eps {
                    let x = [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])];
                    let c = l.coords(x);
                    if (0.0..1.0).contains(&c[0]) && (0.0..1.0).contains(&c[1]) {
                        count += 1;
                    }
                }
            }
        }
        count
    }

    #[test]
    fn torus_count_matches_unrolled_oracle() {
        for (l, seed) in [(TorusLattice::square(), 4), (TorusLattice::honeycomb(), 5)] {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for n in [2, 4, 6, 9] {
                let pts = torus_points(&l, n, &mut rng);
                let r = torus_crossings(&l, &pts);
                assert_eq!(r.crossings, unrolled(&l, &pts), "n = {n}");
                if n == 2 {
                    assert_eq!(r.crossings, 0);
                }
            }
        }
    }

    #[test]
    fn torus_count_is_translation_invariant() {
        let l = TorusLattice::honeycomb();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let pts = torus_points(&l, 8, &mut rng);
        let base = torus_crossings(&l, &pts).crossings;
        let shift = [0.37, 0.21];
        let moved: Vec<[f64; 2]> = pts
            .iter()
            .map(|p| {
                let c = l.coords([p[0] + shift[0], p[1] + shift[1]]);
                l.point(c[0].rem_euclid(1.0), c[1].rem_euclid(1.0))
            })
            .collect();
        assert_eq!(torus_crossings(&l, &moved).crossings, base);
    }

    #[test]
    fn welch_direction() {
        let a: Vec<f64> = (0..100).map(|i| (i % 10) as f64).collect();
        let b: Vec<f64> = (0..100).map(|i| (i % 10) as f64 + 3.0).collect();
        assert!(welch_less(&a, &b).2 < 1e-6);
        assert!(welch_less(&b, &a).2 > 0.99);
        assert!(TorusLattice::new([1.0, 0.0], [2.0, 0.0]).is_err());
    }

    #[test]
    fn experiment_is_reproducible() {
        let a = oracle_experiment(Backend::TorusHoneycomb, 6, 10, 7);
        let b = oracle_experiment(Backend::TorusHoneycomb, 6, 10, 7);
        assert_eq!(a, b);
        let one = &a[4];
        let mut rng = ChaCha8Rng::seed_from_u64(one.seed);
        assert_eq!(
            torus_drawing(6, &TorusLattice::honeycomb(), &mut rng).crossings,
            one.crossings
        );
        assert_eq!("torus:square".parse(), Ok(Backend::TorusSquare));
        assert!("klein".parse::<Backend>().is_err());
        assert!(oracle_experiment(Backend::Sphere, 3, 5, 0)
            .iter()
            .all(|r| r.crossings == 0));
    }
}
