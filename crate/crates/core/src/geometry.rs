//! Points, directions, medium shapes and the deterministic geometric queries
//! the walks are built on.

use std::ops::{Add, AddAssign, Div, Index, Mul, Neg, Sub};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::GeometryError;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);
    pub const X: Vec3 = Vec3::new(1.0, 0.0, 0.0);
    pub const Y: Vec3 = Vec3::new(0.0, 1.0, 0.0);
    pub const Z: Vec3 = Vec3::new(0.0, 0.0, 1.0);

    #[inline]
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    #[inline]
    pub fn splat(v: f64) -> Self {
        Self::new(v, v, v)
    }

    #[inline]
    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    #[inline]
    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(self.y * o.z - self.z * o.y, self.z * o.x - self.x * o.z, self.x * o.y - self.y * o.x)
    }

    #[inline]
    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.norm_squared().sqrt()
    }

    #[inline]
    pub fn distance(self, o: Vec3) -> f64 {
        (self - o).norm()
    }

    #[inline]
    pub fn distance_squared(self, o: Vec3) -> f64 {
        (self - o).norm_squared()
    }

    #[inline]
    pub fn min(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x.min(o.x), self.y.min(o.y), self.z.min(o.z))
    }

    #[inline]
    pub fn max(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x.max(o.x), self.y.max(o.y), self.z.max(o.z))
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }
}

impl From<Vec3> for [f64; 3] {
    fn from(v: Vec3) -> Self {
        v.to_array()
    }
}

impl Index<usize> for Vec3 {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        match i {
            0 => &self.x,
            1 => &self.y,
            2 => &self.z,
            _ => panic!("Vec3 index {i} out of range"),
        }
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    #[inline]
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    #[inline]
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    #[inline]
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    #[inline]
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Mul<Vec3> for f64 {
    type Output = Vec3;
    #[inline]
    fn mul(self, v: Vec3) -> Vec3 {
        v * self
    }
}

impl Div<f64> for Vec3 {
    type Output = Vec3;
    #[inline]
    fn div(self, s: f64) -> Vec3 {
        Vec3::new(self.x / s, self.y / s, self.z / s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    #[inline]
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// A direction of unit Euclidean length.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UnitVec3(Vec3);

impl UnitVec3 {
    /// Normalizes `v`; fails on zero or non-finite input.
    pub fn new(v: Vec3) -> Result<Self, GeometryError> {
        let n = v.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(GeometryError::DegenerateDirection);
        }
        Ok(UnitVec3(v / n))
    }

    /// Wraps a vector the caller already knows to be unit length.
    #[inline]
    pub(crate) fn new_unchecked(v: Vec3) -> Self {
        debug_assert!((v.norm() - 1.0).abs() < 1e-9);
        UnitVec3(v)
    }

    #[inline]
    pub fn get(self) -> Vec3 {
        self.0
    }
}

impl Neg for UnitVec3 {
    type Output = UnitVec3;
    fn neg(self) -> UnitVec3 {
        UnitVec3(-self.0)
    }
}

/// Unit vector pointing from `x` to `y`.
pub fn dir(x: Vec3, y: Vec3) -> Result<UnitVec3, GeometryError> {
    UnitVec3::new(y - x)
}

/// Uniform direction on the unit sphere, or on the hemisphere around `axis`.
///
/// Always consumes exactly two uniforms; the hemisphere variant reflects
/// samples from the opposite side so both variants share a stream layout.
pub fn sample_direction<R: Rng + ?Sized>(rng: &mut R, hemisphere_axis: Option<UnitVec3>) -> UnitVec3 {
    let u1: f64 = rng.random();
    let u2: f64 = rng.random();
    let z = 1.0 - 2.0 * u1;
    let r = (1.0 - z * z).max(0.0).sqrt();
    let phi = 2.0 * std::f64::consts::PI * u2;
    let mut w = Vec3::new(r * phi.cos(), r * phi.sin(), z);
    if let Some(axis) = hemisphere_axis {
        if w.dot(axis.get()) < 0.0 {
            w = -w;
        }
    }
    UnitVec3::new_unchecked(w)
}

/// Smallest root `t` in `(t_min, t_max]` of `|origin + t w - center| = radius`.
pub fn first_ray_sphere_hit(
    origin: Vec3,
    w: UnitVec3,
    center: Vec3,
    radius: f64,
    t_min: f64,
    t_max: f64,
) -> Option<(f64, Vec3)> {
    let w = w.get();
    let oc = origin - center;
    let b = w.dot(oc);
    let c = oc.norm_squared() - radius * radius;
    let disc = b * b - c;
    if disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    // stable pair of roots
    let q = if b > 0.0 { -b - sq } else { -b + sq };
    let (mut t0, mut t1) = if q != 0.0 { (q, c / q) } else { (0.0, 0.0) };
    if t0 > t1 {
        std::mem::swap(&mut t0, &mut t1);
    }
    for t in [t0, t1] {
        if t > t_min && t <= t_max {
            return Some((t, origin + w * t));
        }
    }
    None
}

/// Axis-aligned bounding box.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn empty() -> Self {
        Aabb { min: Vec3::splat(f64::INFINITY), max: Vec3::splat(f64::NEG_INFINITY) }
    }

    pub fn grow(&mut self, p: Vec3) {
        self.min = self.min.min(p);
        self.max = self.max.max(p);
    }

    pub fn union(&self, o: &Aabb) -> Aabb {
        Aabb { min: self.min.min(o.min), max: self.max.max(o.max) }
    }

    pub fn extent(&self) -> Vec3 {
        self.max - self.min
    }

    pub fn center(&self) -> Vec3 {
        (self.min + self.max) * 0.5
    }

    pub fn volume(&self) -> f64 {
        let e = self.extent();
        e.x * e.y * e.z
    }

    pub fn contains(&self, p: Vec3) -> bool {
        p.x >= self.min.x
            && p.x <= self.max.x
            && p.y >= self.min.y
            && p.y <= self.max.y
            && p.z >= self.min.z
            && p.z <= self.max.z
    }

    /// Squared distance from `p` to the box (zero inside).
    pub fn distance_squared(&self, p: Vec3) -> f64 {
        let q = p.max(self.min).min(self.max);
        p.distance_squared(q)
    }

    /// Distance from `p` to the farthest point of the box.
    pub fn max_distance(&self, p: Vec3) -> f64 {
        let dx = (p.x - self.min.x).abs().max((p.x - self.max.x).abs());
        let dy = (p.y - self.min.y).abs().max((p.y - self.max.y).abs());
        let dz = (p.z - self.min.z).abs().max((p.z - self.max.z).abs());
        Vec3::new(dx, dy, dz).norm()
    }
}

/// Analytic building block of a medium.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Primitive {
    Sphere {
        center: Vec3,
        radius: f64,
    },
    #[serde(rename = "box")]
    AxisAlignedBox {
        min: Vec3,
        max: Vec3,
    },
}

impl Primitive {
    fn validate(&self) -> Result<(), GeometryError> {
        match *self {
            Primitive::Sphere { center, radius } => {
                if !center.is_finite() || !(radius > 0.0) || !radius.is_finite() {
                    return Err(GeometryError::InvalidPrimitive(format!(
                        "sphere needs a finite center and positive radius, got radius {radius}"
                    )));
                }
            }
            Primitive::AxisAlignedBox { min, max } => {
                if !min.is_finite() || !max.is_finite() || !(min.x < max.x && min.y < max.y && min.z < max.z) {
                    return Err(GeometryError::InvalidPrimitive("box min must be componentwise below max".into()));
                }
            }
        }
        Ok(())
    }

    /// Signed distance: negative inside, zero on the surface.
    pub fn signed_distance(&self, p: Vec3) -> f64 {
        match *self {
            Primitive::Sphere { center, radius } => p.distance(center) - radius,
            Primitive::AxisAlignedBox { min, max } => {
                let c = (min + max) * 0.5;
                let h = (max - min) * 0.5;
                let d = Vec3::new((p.x - c.x).abs() - h.x, (p.y - c.y).abs() - h.y, (p.z - c.z).abs() - h.z);
                let outside = d.max(Vec3::ZERO).norm();
                let inside = d.x.max(d.y).max(d.z).min(0.0);
                outside + inside
            }
        }
    }

    /// Nearest point on the primitive's surface.
    pub fn closest_surface_point(&self, p: Vec3) -> Vec3 {
        match *self {
            Primitive::Sphere { center, radius } => match dir(center, p) {
                Ok(d) => center + d.get() * radius,
                Err(_) => center + Vec3::X * radius,
            },
            Primitive::AxisAlignedBox { min, max } => {
                let inside = p.x > min.x && p.x < max.x && p.y > min.y && p.y < max.y && p.z > min.z && p.z < max.z;
                if !inside {
                    return p.max(min).min(max);
                }
                let mut best = f64::INFINITY;
                let mut q = p;
                for axis in 0..3 {
                    let lo = p[axis] - min[axis];
                    let hi = max[axis] - p[axis];
                    for (gap, target) in [(lo, min[axis]), (hi, max[axis])] {
                        if gap < best {
                            best = gap;
                            q = p;
                            match axis {
                                0 => q.x = target,
                                1 => q.y = target,
                                _ => q.z = target,
                            }
                        }
                    }
                }
                q
            }
        }
    }

    pub fn bounding_box(&self) -> Aabb {
        match *self {
            Primitive::Sphere { center, radius } => {
                Aabb { min: center - Vec3::splat(radius), max: center + Vec3::splat(radius) }
            }
            Primitive::AxisAlignedBox { min, max } => Aabb { min, max },
        }
    }
}

/// Triangle mesh queried by brute force.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TriangleSoup {
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[usize; 3]>,
}

impl TriangleSoup {
    fn validate(&self) -> Result<(), GeometryError> {
        if self.triangles.is_empty() {
            return Err(GeometryError::InvalidPrimitive("triangle soup has no triangles".into()));
        }
        for t in &self.triangles {
            if t.iter().any(|&i| i >= self.vertices.len()) {
                return Err(GeometryError::InvalidPrimitive(format!("triangle {t:?} indexes past the vertex list")));
            }
        }
        Ok(())
    }

    fn corners(&self, t: &[usize; 3]) -> (Vec3, Vec3, Vec3) {
        (self.vertices[t[0]], self.vertices[t[1]], self.vertices[t[2]])
    }

    pub fn closest_point(&self, p: Vec3) -> (Vec3, f64) {
        let mut best = (p, f64::INFINITY);
        for t in &self.triangles {
            let (a, b, c) = self.corners(t);
            let q = closest_point_on_triangle(p, a, b, c);
            let d = p.distance_squared(q);
            if d < best.1 {
                best = (q, d);
            }
        }
        (best.0, best.1.sqrt())
    }

    /// Parity of crossings along a fixed, deliberately irregular direction.
    pub fn contains(&self, p: Vec3) -> bool {
        let w = Vec3::new(0.5773, 0.5774, 0.5775);
        let w = w / w.norm();
        let mut crossings = 0usize;
        for t in &self.triangles {
            let (a, b, c) = self.corners(t);
            if ray_triangle(p, w, a, b, c).is_some() {
                crossings += 1;
            }
        }
        crossings % 2 == 1
    }

    pub fn bounding_box(&self) -> Aabb {
        let mut bb = Aabb::empty();
        for &v in &self.vertices {
            bb.grow(v);
        }
        bb
    }
}

fn ray_triangle(o: Vec3, w: Vec3, a: Vec3, b: Vec3, c: Vec3) -> Option<f64> {
    let e1 = b - a;
    let e2 = c - a;
    let pv = w.cross(e2);
    let det = e1.dot(pv);
    if det.abs() < 1e-14 {
        return None;
    }
    let inv = 1.0 / det;
    let tv = o - a;
    let u = tv.dot(pv) * inv;
    if !(0.0..=1.0).contains(&u) {
        return None;
    }
    let qv = tv.cross(e1);
    let v = w.dot(qv) * inv;
    if v < 0.0 || u + v > 1.0 {
        return None;
    }
    let t = e2.dot(qv) * inv;
    (t > 0.0).then_some(t)
}

/// Closest point on triangle `abc` to `p` (Voronoi-region walk).
pub fn closest_point_on_triangle(p: Vec3, a: Vec3, b: Vec3, c: Vec3) -> Vec3 {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(ap);
    let d2 = ac.dot(ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return a;
    }
    let bp = p - b;
    let d3 = ab.dot(bp);
    let d4 = ac.dot(bp);
    if d3 >= 0.0 && d4 <= d3 {
        return b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        return a + ab * (d1 / (d1 - d3));
    }
    let cp = p - c;
    let d5 = ab.dot(cp);
    let d6 = ac.dot(cp);
    if d6 >= 0.0 && d5 <= d6 {
        return c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        return a + ac * (d2 / (d2 - d6));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    a + ab * v + ac * w
}

/// Where a closest point came from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Provenance {
    MediumBoundary,
    /// Freshly sampled particle, carrying its center.
    StochasticParticle(Vec3),
    /// Particle pinned in a walk's memory, by index.
    MemoryParticle(usize),
    /// Particle of an explicit configuration, by index.
    ConfigurationParticle(usize),
    /// The query point lies inside a particle; the hit point is the query.
    InsideParticle,
}

impl Provenance {
    pub fn is_medium(&self) -> bool {
        matches!(self, Provenance::MediumBoundary)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClosestHit {
    pub point: Vec3,
    /// Negative only for fixed particles that contain the query.
    pub distance: f64,
    pub provenance: Provenance,
}

/// The deterministic medium: a union of analytic primitives plus an optional mesh.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MediumShape {
    pub primitives: Vec<Primitive>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mesh: Option<TriangleSoup>,
}

impl MediumShape {
    pub fn new(primitives: Vec<Primitive>, mesh: Option<TriangleSoup>) -> Result<Self, GeometryError> {
        let shape = MediumShape { primitives, mesh };
        shape.validate()?;
        Ok(shape)
    }

    pub fn sphere(center: Vec3, radius: f64) -> Result<Self, GeometryError> {
        Self::new(vec![Primitive::Sphere { center, radius }], None)
    }

    pub fn cube(min: Vec3, max: Vec3) -> Result<Self, GeometryError> {
        Self::new(vec![Primitive::AxisAlignedBox { min, max }], None)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if self.primitives.is_empty() && self.mesh.is_none() {
            return Err(GeometryError::EmptyMedium);
        }
        for p in &self.primitives {
            p.validate()?;
        }
        if let Some(m) = &self.mesh {
            m.validate()?;
        }
        Ok(())
    }

    /// Nearest point on the medium boundary, minimized over every primitive
    /// surface (and the mesh). Ties go to the first primitive declared.
    pub fn closest_point(&self, x: Vec3) -> ClosestHit {
        let mut best_point = x;
        let mut best = f64::INFINITY;
        for p in &self.primitives {
            let q = p.closest_surface_point(x);
            let d = x.distance(q);
            if d < best {
                best = d;
                best_point = q;
            }
        }
        if let Some(mesh) = &self.mesh {
            let (q, d) = mesh.closest_point(x);
            if d < best {
                best = d;
                best_point = q;
            }
        }
        ClosestHit { point: best_point, distance: best, provenance: Provenance::MediumBoundary }
    }

    /// Strict interior test; boundary points are outside.
    pub fn contains(&self, x: Vec3) -> bool {
        self.primitives.iter().any(|p| p.signed_distance(x) < 0.0)
            || self.mesh.as_ref().is_some_and(|m| m.contains(x) && m.closest_point(x).1 > 0.0)
    }

    pub fn bounding_box(&self) -> Aabb {
        let mut bb = Aabb::empty();
        for p in &self.primitives {
            bb = bb.union(&p.bounding_box());
        }
        if let Some(m) = &self.mesh {
            bb = bb.union(&m.bounding_box());
        }
        bb
    }

    /// Largest bounding-box extent; the length scale for relative tolerances.
    pub fn scale(&self) -> f64 {
        let e = self.bounding_box().extent();
        e.x.max(e.y).max(e.z)
    }
}

pub fn closest_point_on_medium(shape: &MediumShape, x: Vec3) -> ClosestHit {
    shape.closest_point(x)
}
