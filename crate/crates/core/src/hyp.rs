//! Hyperbolic plane primitives.
//!
//! Points are stored in the Poincaré unit-disk model. The Klein (projective)
//! model is used wherever straightness of geodesics matters, e.g. for segment
//! intersection and funnel predicates. Conversion between the two is always
//! explicit.

use std::f64::consts::PI;
use std::ops::Sub;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerances shared by every module.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Agreement of distances and isometry actions.
    pub metric: f64,
    /// Model round trips (Poincaré ⇄ Klein).
    pub roundtrip: f64,
    /// Points must satisfy `|z|² < 1 − boundary`.
    pub boundary: f64,
}

pub const TOL: Tolerances = Tolerances {
    metric: 1e-9,
    roundtrip: 1e-12,
    boundary: 1e-12,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HypError {
    #[error("point ({x}, {y}) is not inside the open unit disk")]
    OutsideDisk { x: f64, y: f64 },
    #[error("negative radius {0}")]
    NegativeRadius(f64),
    #[error("side lengths ({a}, {b}, {c}) do not form a hyperbolic triangle")]
    NotRealizable { a: f64, b: f64, c: f64 },
}

/// A point of the Poincaré disk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanePoint {
    pub x: f64,
    pub y: f64,
}

impl PlanePoint {
    pub const ORIGIN: PlanePoint = PlanePoint { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Result<Self, HypError> {
        let p = PlanePoint { x, y };
        if p.is_valid() {
            Ok(p)
        } else {
            Err(HypError::OutsideDisk { x, y })
        }
    }

    /// Builds a point without checking the disk invariant.
    pub(crate) fn raw(x: f64, y: f64) -> Self {
        PlanePoint { x, y }
    }

    pub fn is_valid(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.norm_sqr() < 1.0 - TOL.boundary
    }

    pub fn norm_sqr(&self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::new(self.x, self.y)
    }

    pub(crate) fn from_complex(z: Complex64) -> Self {
        PlanePoint { x: z.re, y: z.im }
    }

    pub fn to_klein(self) -> KleinPoint {
        klein_from_poincare(self)
    }

    /// Point at hyperbolic distance `r` from the origin in direction `theta`.
    pub fn polar(r: f64, theta: f64) -> Self {
        let rho = (r / 2.0).tanh();
        PlanePoint::raw(rho * theta.cos(), rho * theta.sin())
    }
}

/// A point of the Klein disk. Geodesics are straight chords here.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KleinPoint {
    pub x: f64,
    pub y: f64,
}

impl KleinPoint {
    pub fn norm_sqr(&self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn to_poincare(self) -> PlanePoint {
        poincare_from_klein(self)
    }

    pub fn lerp(self, other: KleinPoint, t: f64) -> KleinPoint {
        KleinPoint {
            x: self.x + (other.x - self.x) * t,
            y: self.y + (other.y - self.y) * t,
        }
    }
}

impl Sub for KleinPoint {
    type Output = KleinPoint;
    fn sub(self, o: KleinPoint) -> KleinPoint {
        KleinPoint {
            x: self.x - o.x,
            y: self.y - o.y,
        }
    }
}

/// Twice the signed Euclidean area of `(a, b, c)`; positive when counterclockwise.
pub fn orient2d(a: KleinPoint, b: KleinPoint, c: KleinPoint) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

pub fn klein_from_poincare(p: PlanePoint) -> KleinPoint {
    let s = 2.0 / (1.0 + p.norm_sqr());
    KleinPoint {
        x: s * p.x,
        y: s * p.y,
    }
}

pub fn poincare_from_klein(k: KleinPoint) -> PlanePoint {
    let s = 1.0 / (1.0 + (1.0 - k.norm_sqr()).max(0.0).sqrt());
    PlanePoint::raw(s * k.x, s * k.y)
}

/// Hyperbolic distance between two points of the disk.
pub fn dist(p: PlanePoint, q: PlanePoint) -> Result<f64, HypError> {
    for pt in [p, q] {
        if !pt.is_valid() {
            return Err(HypError::OutsideDisk { x: pt.x, y: pt.y });
        }
    }
    Ok(dist_unchecked(p, q))
}

/// `2 artanh |(p − q)/(1 − p̄q)|`, equal to the arccosh form but stable for
/// nearby points.
pub(crate) fn dist_unchecked(p: PlanePoint, q: PlanePoint) -> f64 {
    let zp = p.to_complex();
    let zq = q.to_complex();
    let num = (zp - zq).norm();
    if num == 0.0 {
        return 0.0;
    }
    let den = (Complex64::new(1.0, 0.0) - zp.conj() * zq).norm();
    let t = (num / den).min(1.0 - 1e-17);
    2.0 * t.atanh()
}

/// Area of a hyperbolic disk of radius `r`: `4π sinh²(r/2)`.
pub fn disk_area(r: f64) -> Result<f64, HypError> {
    if r < 0.0 || r.is_nan() {
        return Err(HypError::NegativeRadius(r));
    }
    let s = (r / 2.0).sinh();
    Ok(4.0 * PI * s * s)
}

/// Angle opposite side `a` in the hyperbolic triangle with sides `a, b, c`.
pub fn triangle_angle(a: f64, b: f64, c: f64) -> Result<f64, HypError> {
    let bad = || HypError::NotRealizable { a, b, c };
    if !(a >= 0.0 && b > 0.0 && c > 0.0) || !(a.is_finite() && b.is_finite() && c.is_finite()) {
        return Err(bad());
    }
    // Triangle inequality up to rounding.
    let slack = 1e-12 * (a + b + c).max(1.0);
    if a > b + c + slack || b > a + c + slack || c > a + b + slack {
        return Err(bad());
    }
    Ok(triangle_angle_unchecked(a, b, c))
}

pub(crate) fn triangle_angle_unchecked(a: f64, b: f64, c: f64) -> f64 {
    let cos_a = (b.cosh() * c.cosh() - a.cosh()) / (b.sinh() * c.sinh());
    cos_a.clamp(-1.0, 1.0).acos()
}

/// Orientation-preserving or reversing isometry of the disk.
///
/// Acts by `z ↦ (az + b)/(cz + d)`, applied to `z̄` instead of `z` when
/// `reversing` is set. Matrices are kept in the normalized disk form
/// `[[α, β], [β̄, ᾱ]]` with `|α|² − |β|² = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Isometry {
    pub m: [[Complex64; 2]; 2],
    pub reversing: bool,
}

impl Isometry {
    pub fn identity() -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        Isometry {
            m: [[one, zero], [zero, one]],
            reversing: false,
        }
    }

    /// Rotation about the origin by `theta`.
    pub fn rotation(theta: f64) -> Self {
        let h = Complex64::from_polar(1.0, theta / 2.0);
        let zero = Complex64::new(0.0, 0.0);
        Isometry {
            m: [[h, zero], [zero, h.conj()]],
            reversing: false,
        }
    }

    /// The hyperbolic translation taking `a` to the origin.
    pub fn to_origin(a: PlanePoint) -> Self {
        let za = a.to_complex();
        let s = 1.0 / (1.0 - a.norm_sqr()).sqrt();
        let one = Complex64::new(s, 0.0);
        Isometry {
            m: [[one, -za * s], [-za.conj() * s, one]],
            reversing: false,
        }
    }

    /// Reflection in the diameter at angle `theta`.
    pub fn diameter_reflection(theta: f64) -> Self {
        let h = Complex64::from_polar(1.0, theta);
        let zero = Complex64::new(0.0, 0.0);
        Isometry {
            m: [[h, zero], [zero, h.conj()]],
            reversing: true,
        }
    }

    /// Half-turn about `c`.
    pub fn half_turn(c: PlanePoint) -> Self {
        let t = Isometry::to_origin(c);
        t.inverse().compose(&Isometry::rotation(PI)).compose(&t)
    }

    /// Reflection in the geodesic through `a` and `b`.
    pub fn reflection_through(a: PlanePoint, b: PlanePoint) -> Self {
        let t = Isometry::to_origin(a);
        let bb = t.apply(b);
        let theta = bb.y.atan2(bb.x);
        t.inverse()
            .compose(&Isometry::diameter_reflection(theta))
            .compose(&t)
    }

    pub fn apply_complex(&self, z: Complex64) -> Complex64 {
        let w = if self.reversing { z.conj() } else { z };
        let [[a, b], [c, d]] = self.m;
        (a * w + b) / (c * w + d)
    }

    pub fn apply(&self, p: PlanePoint) -> PlanePoint {
        PlanePoint::from_complex(self.apply_complex(p.to_complex()))
    }

    pub fn apply_klein(&self, k: KleinPoint) -> KleinPoint {
        self.apply(k.to_poincare()).to_klein()
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Isometry) -> Isometry {
        let g = if self.reversing {
            conj_matrix(&other.m)
        } else {
            other.m
        };
        let f = self.m;
        let mut m = [[Complex64::new(0.0, 0.0); 2]; 2];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = f[i][0] * g[0][j] + f[i][1] * g[1][j];
            }
        }
        Isometry {
            m: normalize(m),
            reversing: self.reversing ^ other.reversing,
        }
    }

    pub fn inverse(&self) -> Isometry {
        let [[a, b], [c, d]] = self.m;
        let det = a * d - b * c;
        let inv = [[d / det, -b / det], [-c / det, a / det]];
        let m = if self.reversing { conj_matrix(&inv) } else { inv };
        Isometry {
            m: normalize(m),
            reversing: self.reversing,
        }
    }

    /// Compares actions on a fixed probe set.
    pub fn approx_eq(&self, other: &Isometry, tol: f64) -> bool {
        if self.reversing != other.reversing {
            return false;
        }
        PROBES.iter().all(|&(x, y)| {
            let p = PlanePoint::raw(x, y);
            let a = self.apply(p);
            let b = other.apply(p);
            dist_unchecked(a, b) <= tol
        })
    }
}

const PROBES: [(f64, f64); 3] = [(0.0, 0.0), (0.5, 0.0), (0.0, 0.5)];

fn conj_matrix(m: &[[Complex64; 2]; 2]) -> [[Complex64; 2]; 2] {
    [[m[0][0].conj(), m[0][1].conj()], [m[1][0].conj(), m[1][1].conj()]]
}

fn normalize(m: [[Complex64; 2]; 2]) -> [[Complex64; 2]; 2] {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let s = det.sqrt();
    if s.norm() == 0.0 {
        return m;
    }
    [[m[0][0] / s, m[0][1] / s], [m[1][0] / s, m[1][1] / s]]
}

/// Interior angle of the tiles: π/4, so eight of them close up at a vertex.
pub const TILE_ANGLE: f64 = PI / 4.0;

/// Side length of the equilateral (π/4, π/4, π/4) triangle, `arccosh(1 + √2)`.
pub fn tile_side_length() -> f64 {
    (1.0 + 2f64.sqrt()).acosh()
}

/// The equilateral triangle with all angles π/4, centered at the origin with
/// vertex 0 on the positive real axis and vertices numbered counterclockwise.
///
/// Side `s` runs from vertex `s` to vertex `s + 1 (mod 3)`.
#[derive(Debug, Clone)]
pub struct ReferenceTriangle {
    pub vertices: [PlanePoint; 3],
    pub side_length: f64,
    pub angle: f64,
    pub area: f64,
    /// Hyperbolic distance from the center to a vertex.
    pub circumradius: f64,
    /// Hyperbolic distance from the center to a side.
    pub inradius: f64,
    klein: [KleinPoint; 3],
}

pub fn build_reference_triangle() -> ReferenceTriangle {
    let alpha = TILE_ANGLE;
    // Right triangle center/vertex/side-midpoint: angles π/3 and α/2.
    let circumradius = ((PI / 3.0).tan().recip() * (alpha / 2.0).tan().recip()).acosh();
    let inradius = ((alpha / 2.0).cos() / (PI / 3.0).sin()).acosh();
    let vertices = [0, 1, 2].map(|k| PlanePoint::polar(circumradius, 2.0 * PI * k as f64 / 3.0));
    let klein = vertices.map(klein_from_poincare);
    ReferenceTriangle {
        vertices,
        side_length: tile_side_length(),
        angle: alpha,
        area: PI - 3.0 * alpha,
        circumradius,
        inradius,
        klein,
    }
}

impl ReferenceTriangle {
    pub fn klein_vertices(&self) -> [KleinPoint; 3] {
        self.klein
    }

    /// Endpoints of side `s`, in order.
    pub fn side(&self, s: usize) -> (PlanePoint, PlanePoint) {
        (self.vertices[s % 3], self.vertices[(s + 1) % 3])
    }

    /// Point on side `s` at fraction `t` of its hyperbolic length from vertex `s`.
    pub fn point_on_side(&self, s: usize, t: f64) -> PlanePoint {
        let (a, b) = self.side(s);
        let to = Isometry::to_origin(a);
        let bb = to.apply(b);
        let theta = bb.y.atan2(bb.x);
        to.inverse().apply(PlanePoint::polar(t * self.side_length, theta))
    }

    /// Closed containment test in the Klein chart, with slack `eps`.
    pub fn contains(&self, p: PlanePoint, eps: f64) -> bool {
        let k = p.to_klein();
        (0..3).all(|s| orient2d(self.klein[s], self.klein[(s + 1) % 3], k) >= -eps)
    }

    pub fn contains_klein(&self, k: KleinPoint, eps: f64) -> bool {
        (0..3).all(|s| orient2d(self.klein[s], self.klein[(s + 1) % 3], k) >= -eps)
    }
}

/// Hyperbolic midpoint of the geodesic segment `pq`.
pub fn midpoint(p: PlanePoint, q: PlanePoint) -> PlanePoint {
    let t = Isometry::to_origin(p);
    let qq = t.apply(q);
    let d = dist_unchecked(PlanePoint::ORIGIN, qq);
    let theta = qq.y.atan2(qq.x);
    t.inverse().apply(PlanePoint::polar(d / 2.0, theta))
}

/// Interior angle at `b` between geodesics `ba` and `bc`.
pub fn angle_at(a: PlanePoint, b: PlanePoint, c: PlanePoint) -> f64 {
    // The disk model is conformal; measure at the origin after moving b there.
    let t = Isometry::to_origin(b);
    let aa = t.apply(a);
    let cc = t.apply(c);
    let d = (cc.y.atan2(cc.x) - aa.y.atan2(aa.x)).abs();
    if d > PI {
        2.0 * PI - d
    } else {
        d
    }
}
