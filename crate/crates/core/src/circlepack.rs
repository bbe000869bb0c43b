//! Tangency circle packings of closed hyperbolic triangulations and the
//! arithmetic of the packing-based crossing lower bound.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hyp::disk_area;
use crate::surface::CombinatorialSurface;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PackError {
    #[error("triangulation: {0}")]
    Invalid(String),
    #[error("genus {0} is below 2")]
    LowGenus(i64),
    #[error("vertex {vertex} has degree {degree}")]
    LowDegree { vertex: usize, degree: usize },
    #[error("no convergence after {iterations} sweeps, residual {residual:e}")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("packing area {lhs} is not below {rhs}")]
    AreaViolation { lhs: f64, rhs: f64 },
    #[error("epsilon {0} outside (0, 1/4)")]
    Epsilon(f64),
    #[error("genus {0} below 2")]
    Genus(f64),
    #[error("negative radius {0}")]
    NegativeRadius(f64),
    #[error("triangulation document: {0}")]
    Document(String),
}

/// Closed triangulation given by corner triples. Triangles need not be
/// determined by their vertex sets, so multiple edges are allowed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Triangulation {
    pub vertices: usize,
    pub triangles: Vec<[usize; 3]>,
}

impl Triangulation {
    /// Checks that every directed edge is matched by its reverse and that the
    /// vertex graph is connected.
    pub fn new(vertices: usize, triangles: Vec<[usize; 3]>) -> Result<Self, PackError> {
        let t = Triangulation { vertices, triangles };
        t.check()?;
        Ok(t)
    }

    fn check(&self) -> Result<(), PackError> {
        if self.triangles.is_empty() {
            return Err(PackError::Invalid("no triangles".into()));
        }
        let mut count = std::collections::HashMap::new();
        for tri in &self.triangles {
            for i in 0..3 {
                let (a, b) = (tri[i], tri[(i + 1) % 3]);
                if a >= self.vertices || b >= self.vertices {
                    return Err(PackError::Invalid(format!("vertex {} out of range", a.max(b))));
                }
                *count.entry((a, b)).or_insert(0i64) += 1;
            }
        }
        for (&(a, b), &c) in &count {
            if count.get(&(b, a)).copied().unwrap_or(0) != c {
                return Err(PackError::Invalid(format!(
                    "edge ({a}, {b}) is not in exactly two triangles"
                )));
            }
        }
        let mut parent: Vec<usize> = (0..self.vertices).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for tri in &self.triangles {
            for i in 0..3 {
                let (a, b) = (find(&mut parent, tri[i]), find(&mut parent, tri[(i + 1) % 3]));
                parent[a] = b;
            }
        }
        let degree = self.degrees();
        if let Some(v) = degree.iter().position(|&d| d == 0) {
            return Err(PackError::Invalid(format!("vertex {v} is in no triangle")));
        }
        let root = find(&mut parent, 0);
        if (0..self.vertices).any(|v| find(&mut parent, v) != root) {
            return Err(PackError::Invalid("disconnected".into()));
        }
        Ok(())
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.vertices];
        for tri in &self.triangles {
            for &v in tri {
                d[v] += 1;
            }
        }
        d
    }

    pub fn euler_characteristic(&self) -> i64 {
        let f = self.triangles.len() as i64;
        self.vertices as i64 - 3 * f / 2 + f
    }

    pub fn genus(&self) -> i64 {
        (2 - self.euler_characteristic()) / 2
    }

    /// The triangulation underlying a tiled surface.
    pub fn from_surface(surface: &CombinatorialSurface) -> Self {
        Triangulation {
            vertices: surface.vertex_count(),
            triangles: (0..surface.faces()).map(|f| surface.face_vertices(f)).collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("triangulation serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, PackError> {
        let t: Triangulation = serde_json::from_str(text).map_err(|e| PackError::Document(e.to_string()))?;
        t.check()?;
        Ok(t)
    }

    /// Flips the edge opposite corner `corner` of triangle `tri`, if that
    /// edge has a unique partner and both endpoints keep degree at least 3.
    /// Returns whether a flip happened.
    pub fn flip(&mut self, tri: usize, corner: usize) -> bool {
        let t = self.triangles[tri];
        let (a, b, c) = (t[(corner + 1) % 3], t[(corner + 2) % 3], t[corner]);
        let mut partner = None;
        let mut copies = 0;
        for (j, u) in self.triangles.iter().enumerate() {
            for i in 0..3 {
                if u[i] == b && u[(i + 1) % 3] == a {
                    partner = Some((j, u[(i + 2) % 3]));
                    copies += 1;
                }
                if u[i] == a && u[(i + 1) % 3] == b {
                    copies += 1;
                }
            }
        }
        // The (a, b) side must be matched once and appear once.
        let Some((j, d)) = partner else { return false };
        if copies != 2 || j == tri || c == d || a == b {
            return false;
        }
        let deg = self.degrees();
        if deg[a] <= 3 || deg[b] <= 3 {
            return false;
        }
        // (a, b, c) and (b, a, d) become (c, a, d) and (d, b, c).
        self.triangles[tri] = [c, a, d];
        self.triangles[j] = [d, b, c];
        true
    }

    /// Applies up to `count` random flips.
    pub fn random_flips<R: Rng + ?Sized>(&mut self, count: usize, rng: &mut R) -> usize {
        let mut done = 0;
        for _ in 0..count {
            let tri = rng.gen_range(0..self.triangles.len());
            if self.flip(tri, rng.gen_range(0..3)) {
                done += 1;
            }
        }
        done
    }
}

/// Angle at the `x` circle of three mutually tangent circles with radii
/// `x`, `y`, `z`, via the half-angle formula.
pub fn tangency_angle(x: f64, y: f64, z: f64) -> f64 {
    let s = (y.sinh() * z.sinh() / ((x + y).sinh() * (x + z).sinh())).sqrt();
    2.0 * s.min(1.0).asin()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Packing {
    pub radii: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
}

struct Incidence {
    /// For each vertex, the other two radii indices of every corner.
    corners: Vec<Vec<(usize, usize)>>,
}

impl Incidence {
    fn new(tri: &Triangulation) -> Self {
        let mut corners = vec![Vec::new(); tri.vertices];
        for t in &tri.triangles {
            for i in 0..3 {
                corners[t[i]].push((t[(i + 1) % 3], t[(i + 2) % 3]));
            }
        }
        Incidence { corners }
    }

    /// Angle sum at `v` with `r[v]` replaced by `x`. Corners whose other
    /// vertices include `v` itself see `x` there too.
    fn angle_sum(&self, r: &[f64], v: usize, x: f64) -> f64 {
        self.corners[v]
            .iter()
            .map(|&(u, w)| {
                let ru = if u == v { x } else { r[u] };
                let rw = if w == v { x } else { r[w] };
                tangency_angle(x, ru, rw)
            })
            .sum()
    }
}

const RADIUS_LO: f64 = 1e-6;
const RADIUS_HI: f64 = 20.0;

/// Angle sums at every vertex for the given radii.
pub fn angle_sums(tri: &Triangulation, radii: &[f64]) -> Vec<f64> {
    let inc = Incidence::new(tri);
    (0..tri.vertices)
        .map(|v| inc.angle_sum(radii, v, radii[v]))
        .collect()
}

fn max_residual(inc: &Incidence, r: &[f64]) -> f64 {
    (0..r.len())
        .map(|v| (inc.angle_sum(r, v, r[v]) - 2.0 * PI).abs())
        .fold(0.0, f64::max)
}

/// Gauss–Seidel relaxation: each sweep visits vertices in index order and
/// bisects the radius that makes the angle sum 2π with neighbors fixed.
/// The angle sum decreases strictly in the vertex's own radius.
pub fn thurston_pack(tri: &Triangulation, tol: f64, max_iter: usize) -> Result<Packing, PackError> {
    tri.check()?;
    let g = tri.genus();
    if g < 2 {
        return Err(PackError::LowGenus(g));
    }
    if let Some((v, &d)) = tri.degrees().iter().enumerate().find(|(_, &d)| d < 3) {
        return Err(PackError::LowDegree { vertex: v, degree: d });
    }
    let inc = Incidence::new(tri);
    let mut r = vec![0.5; tri.vertices];
    let mut residual = max_residual(&inc, &r);
    let mut sweeps = 0;
    while residual > tol {
        if sweeps == max_iter {
            return Err(PackError::NotConverged {
                iterations: sweeps,
                residual,
            });
        }
        for v in 0..tri.vertices {
            let (mut lo, mut hi) = (RADIUS_LO, RADIUS_HI);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if inc.angle_sum(&r, v, mid) > 2.0 * PI {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            r[v] = 0.5 * (lo + hi);
        }
        sweeps += 1;
        residual = max_residual(&inc, &r);
    }
    Ok(Packing {
        radii: r,
        residual,
        iterations: sweeps,
    })
}

/// Radius of the symmetric packing of a degree-8 triangulation:
/// equilateral triangles of side 2r with angles π/4.
pub fn regular_radius() -> f64 {
    (1.0 + 2f64.sqrt()).acosh() / 2.0
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AreaReport {
    /// π Σ r².
    pub lhs: f64,
    /// Σ area of the packed disks.
    pub disks: f64,
    /// 2π(2g − 2).
    pub rhs: f64,
}

/// π Σ r² ≤ Σ disk area < 2π(2g − 2).
pub fn packing_area_check(packing: &Packing, g: usize) -> Result<AreaReport, PackError> {
    let mut lhs = 0.0;
    let mut disks = 0.0;
    for &r in &packing.radii {
        lhs += PI * r * r;
        disks += disk_area(r).map_err(|_| PackError::NegativeRadius(r))?;
    }
    let rhs = 2.0 * PI * (2.0 * g as f64 - 2.0);
    if !(lhs <= disks && disks < rhs) {
        return Err(PackError::AreaViolation { lhs: disks, rhs });
    }
    Ok(AreaReport { lhs, disks, rhs })
}

/// (Σ r)² / 4g.
pub fn cauchy_schwarz_bound(radii: &[f64], g: usize) -> f64 {
    let s: f64 = radii.iter().sum();
    s * s / (4.0 * g as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Case {
    /// Short average edge length: dense-graph counting on the surface.
    Short,
    /// Long average edge length: packing radii bound.
    Long,
    /// Short case whose density hypothesis fails; no bound is claimed.
    Inapplicable,
}

/// Inputs, branch and value of the two-case lower bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub n: f64,
    pub m: f64,
    pub g: f64,
    pub epsilon: f64,
    pub avg_edge_length: f64,
    pub radii: Vec<f64>,
    /// ¼(1 − 2ε) log g.
    pub threshold: f64,
    pub case: Case,
    /// m²/32n² against the maximum it must dominate (short case only).
    pub hypothesis: Option<(f64, f64)>,
    pub bound: Option<f64>,
    /// Vertices with radius at least 1/4; not reconstructible here.
    pub large_radius_vertices: Option<Vec<usize>>,
    /// Edges kept in the long case; not reconstructible here.
    pub kept_edges: Option<Vec<(usize, usize)>>,
}

pub fn lower_bound_case_evaluator(
    n: f64,
    m: f64,
    g: f64,
    epsilon: f64,
    avg_edge_length: f64,
) -> Result<Certificate, PackError> {
    if !(epsilon > 0.0 && epsilon < 0.25) {
        return Err(PackError::Epsilon(epsilon));
    }
    if g.is_nan() || g < 2.0 {
        return Err(PackError::Genus(g));
    }
    let threshold = 0.25 * (1.0 - 2.0 * epsilon) * g.ln();
    let mut cert = Certificate {
        n,
        m,
        g,
        epsilon,
        avg_edge_length,
        radii: Vec::new(),
        threshold,
        case: Case::Long,
        hypothesis: None,
        bound: None,
        large_radius_vertices: None,
        kept_edges: None,
    };
    if avg_edge_length < threshold {
        let ge = g.powf(1.0 - 2.0 * epsilon) + 1.0;
        let lhs = m * m / (32.0 * n * n);
        let rhs = (2.0 * 3f64.sqrt() * n).max(12.0 * ge).max(24.0 * n * n / ge);
        cert.hypothesis = Some((lhs, rhs));
        if lhs >= rhs {
            cert.case = Case::Short;
            cert.bound = Some(m * m / (32.0 * ge));
        } else {
            cert.case = Case::Inapplicable;
        }
    } else {
        let l = g.ln();
        cert.bound = Some(m * m * l * l / (16384.0 * g));
    }
    Ok(cert)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hyp::triangle_angle;
    use crate::surface::generate_surface;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn tangency_angle_agrees_with_law_of_cosines() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let (x, y, z): (f64, f64, f64) = (
                rng.gen_range(0.01..5.0),
                rng.gen_range(0.01..5.0),
                rng.gen_range(0.01..5.0),
            );
            let a = triangle_angle(y + z, x + y, x + z).unwrap();
            assert_abs_diff_eq!(tangency_angle(x, y, z), a, epsilon = 1e-7);
            // Growing the own radius shrinks the angle.
            assert!(tangency_angle(x * 1.01, y, z) < tangency_angle(x, y, z));
        }
    }

    #[test]
    fn regular_radius_value() {
        assert_abs_diff_eq!(regular_radius(), 0.7642854, epsilon = 1e-7);
        let r = regular_radius();
        assert_abs_diff_eq!(tangency_angle(r, r, r), PI / 4.0, epsilon = 1e-14);
    }

    #[test]
    fn surface_triangulations_pack_regularly() {
        for (f, seed) in [(16, 1), (32, 2), (64, 3)] {
            let s = generate_surface(f, seed).unwrap();
            let t = Triangulation::from_surface(&s);
            assert_eq!(t.genus() as usize, s.genus());
            assert!(t.degrees().iter().all(|&d| d == 8));
            let p = thurston_pack(&t, 1e-10, 100_000).unwrap();
            assert!(p.residual < 1e-8);
            for &r in &p.radii {
                assert_abs_diff_eq!(r, regular_radius(), epsilon = 1e-9);
            }
            let sums = angle_sums(&t, &p.radii);
            assert!(sums.iter().all(|a| (a - 2.0 * PI).abs() < 1e-8));
            let area = packing_area_check(&p, s.genus()).unwrap();
            assert!(area.lhs < area.rhs);
        }
    }

    #[test]
    fn genus_two_area_arithmetic() {
        let p = Packing {
            radii: vec![regular_radius(); 6],
            residual: 0.0,
            iterations: 0,
        };
        let a = packing_area_check(&p, 2).unwrap();
        assert_abs_diff_eq!(a.lhs, 11.0106, epsilon = 1e-3);
        assert_abs_diff_eq!(a.rhs, 4.0 * PI, epsilon = 1e-12);
        let big = Packing {
            radii: vec![3.0; 6],
            residual: 0.0,
            iterations: 0,
        };
        assert!(matches!(
            packing_area_check(&big, 2),
            Err(PackError::AreaViolation { .. })
        ));
    }

    #[test]
    fn flipped_triangulations_converge() {
        let s = generate_surface(32, 5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..3 {
            let mut t = Triangulation::from_surface(&s);
            let done = t.random_flips(10, &mut rng);
            assert!(done > 0);
            t.check().unwrap();
            assert_eq!(t.genus() as usize, s.genus());
            let p = thurston_pack(&t, 1e-10, 100_000).unwrap();
            assert!(p.residual < 1e-8);
            let again = thurston_pack(&t, 1e-10, 100_000).unwrap();
            assert_eq!(p, again);
            packing_area_check(&p, s.genus()).unwrap();
        }
    }

    #[test]
    fn bad_triangulations() {
        assert!(Triangulation::new(3, vec![[0, 1, 2]]).is_err());
        let sphere = Triangulation::new(4, vec![[0, 1, 2], [0, 2, 3], [0, 3, 1], [1, 3, 2]]).unwrap();
        assert_eq!(sphere.genus(), 0);
        assert_eq!(thurston_pack(&sphere, 1e-8, 10), Err(PackError::LowGenus(0)));
        let s = generate_surface(16, 1).unwrap();
        let t = Triangulation::from_surface(&s);
        let back = Triangulation::from_json(&t.to_json()).unwrap();
        assert_eq!(back, t);
        assert!(matches!(
            thurston_pack(&t, 1e-14, 1),
            Err(PackError::NotConverged { .. })
        ));
    }

    #[test]
    fn cauchy_schwarz_examples() {
        assert_eq!(cauchy_schwarz_bound(&[], 3), 0.0);
        assert_eq!(cauchy_schwarz_bound(&[1.0; 4], 2), 2.0);
        let r = [0.3, 0.7, 1.1];
        let scaled: Vec<f64> = r.iter().map(|x| x * 2.5).collect();
        assert_abs_diff_eq!(
            cauchy_schwarz_bound(&scaled, 4),
            6.25 * cauchy_schwarz_bound(&r, 4),
            epsilon = 1e-12
        );
    }

    #[test]
    fn case_evaluator() {
        let g = 8f64.exp();
        let m = 1e5;
        let c = lower_bound_case_evaluator(1e3, m, g, 0.2, 10.0).unwrap();
        assert_eq!(c.case, Case::Long);
        assert_abs_diff_eq!(c.bound.unwrap(), m * m * 64.0 / (16384.0 * g), epsilon = 1e-6);
        assert!(lower_bound_case_evaluator(1e3, m, g, 0.25, 10.0).is_err());
        assert!(lower_bound_case_evaluator(1e3, m, 1.5, 0.2, 10.0).is_err());

        let (n, m, g) = (1e4, 4.5e7, 1e6);
        let c = lower_bound_case_evaluator(n, m, g, 0.2, 1.0).unwrap();
        assert_eq!(c.case, Case::Short);
        let ge = g.powf(0.6) + 1.0;
        let (lhs, rhs) = c.hypothesis.unwrap();
        assert!(lhs >= 24.0 * n * n / ge && lhs >= 12.0 * ge && lhs >= 2.0 * 3f64.sqrt() * n);
        assert_eq!(rhs, (24.0 * n * n / ge).max(12.0 * ge).max(2.0 * 3f64.sqrt() * n));
        assert_abs_diff_eq!(c.bound.unwrap(), m * m / (32.0 * ge), epsilon = 1.0);
        let thin = lower_bound_case_evaluator(n, 1e6, g, 0.2, 1.0).unwrap();
        assert_eq!(thin.case, Case::Inapplicable);
        assert_eq!(thin.bound, None);
    }
}
