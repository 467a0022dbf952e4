//! Particle-center density fields of the Poisson Boolean model.
//!
//! A [`DensityField`] is one of three analytic or tabulated variants, masked to
//! zero outside the medium. Besides pointwise evaluation it answers the two
//! questions the samplers need: a majorant over a ball (for thinning) and,
//! for validation only, quadrature estimates of ball and sphere integrals.

use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Aabb, MediumShape, Vec3};

/// Anything that can report a particle-center density at a point.
pub trait Intensity {
    fn eval(&self, x: Vec3) -> f64;

    /// Density at `c` and whether a thinning draw `threshold = u·λ̄` keeps it.
    fn thinning_accept(&self, c: Vec3, threshold: f64) -> (f64, bool) {
        let v = self.eval(c);
        (v, threshold < v)
    }

    /// Distance from `x` past which the density is identically zero.
    fn support_radius(&self, _x: Vec3) -> f64 {
        f64::INFINITY
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianTerm {
    pub amplitude: f64,
    pub center: Vec3,
    pub width: f64,
}

impl GaussianTerm {
    #[inline]
    fn eval(&self, x: Vec3) -> f64 {
        self.amplitude * (-x.distance_squared(self.center) / (self.width * self.width)).exp()
    }

    /// Value at the point of `B(x, r)` closest to the peak.
    #[inline]
    fn ball_bound(&self, x: Vec3, r: f64) -> f64 {
        let gap = (x.distance(self.center) - r).max(0.0);
        self.amplitude * (-(gap * gap) / (self.width * self.width)).exp()
    }
}

/// Node values on a regular lattice spanning `bounds`, interpolated trilinearly.
#[derive(Clone, Debug, PartialEq)]
pub struct TrilinearGrid {
    dims: [usize; 3],
    bounds: Aabb,
    values: Vec<f32>,
    max_value: f64,
}

impl TrilinearGrid {
    /// Values are x-fastest, then y, then z. Negative values clamp to zero.
    pub fn new(dims: [usize; 3], bounds: Aabb, values: Vec<f32>) -> Result<Self> {
        if dims.iter().any(|&n| n < 2) {
            return Err(Error::Density(format!("grid needs at least 2 nodes per axis, got {dims:?}")));
        }
        let e = bounds.extent();
        if !(e.x > 0.0 && e.y > 0.0 && e.z > 0.0) || !bounds.min.is_finite() || !bounds.max.is_finite() {
            return Err(Error::Density("grid bounds must have positive finite extent".into()));
        }
        let n = dims[0] * dims[1] * dims[2];
        if values.len() != n {
            return Err(Error::Density(format!("grid expects {n} values, got {}", values.len())));
        }
        let values: Vec<f32> = values.into_iter().map(|v| if v.is_finite() { v.max(0.0) } else { 0.0 }).collect();
        let max_value = values.iter().fold(0.0f32, |m, &v| m.max(v)) as f64;
        Ok(TrilinearGrid { dims, bounds, values, max_value })
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn bounds(&self) -> Aabb {
        self.bounds
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn max_value(&self) -> f64 {
        self.max_value
    }

    #[inline]
    fn node(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[i + self.dims[0] * (j + self.dims[1] * k)] as f64
    }

    pub fn eval(&self, x: Vec3) -> f64 {
        if !self.bounds.contains(x) {
            return 0.0;
        }
        let e = self.bounds.extent();
        let mut idx = [0usize; 3];
        let mut frac = [0.0f64; 3];
        for a in 0..3 {
            let cells = (self.dims[a] - 1) as f64;
            let t = ((x[a] - self.bounds.min[a]) / e[a] * cells).clamp(0.0, cells);
            let i = (t.floor() as usize).min(self.dims[a] - 2);
            idx[a] = i;
            frac[a] = t - i as f64;
        }
        let [i, j, k] = idx;
        let [fx, fy, fz] = frac;
        let lerp = |a: f64, b: f64, t: f64| a + (b - a) * t;
        let c00 = lerp(self.node(i, j, k), self.node(i + 1, j, k), fx);
        let c10 = lerp(self.node(i, j + 1, k), self.node(i + 1, j + 1, k), fx);
        let c01 = lerp(self.node(i, j, k + 1), self.node(i + 1, j, k + 1), fx);
        let c11 = lerp(self.node(i, j + 1, k + 1), self.node(i + 1, j + 1, k + 1), fx);
        lerp(lerp(c00, c10, fy), lerp(c01, c11, fy), fz)
    }

    /// Parses the `VGRID` format: one ASCII header line
    /// `VGRID nx ny nz xmin ymin zmin xmax ymax zmax` followed by
    /// `nx*ny*nz` little-endian `f32` values, x-fastest.
    pub fn from_vgrid_bytes(bytes: &[u8]) -> Result<Self> {
        let nl = bytes
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| Error::Density("VGRID header has no newline".into()))?;
        let header =
            std::str::from_utf8(&bytes[..nl]).map_err(|_| Error::Density("VGRID header is not ASCII".into()))?;
        let mut tok = header.split_ascii_whitespace();
        if tok.next() != Some("VGRID") {
            return Err(Error::Density("missing VGRID magic".into()));
        }
        let fields: Vec<&str> = tok.collect();
        if fields.len() != 9 {
            return Err(Error::Density(format!("VGRID header needs 9 fields, got {}", fields.len())));
        }
        let mut dims = [0usize; 3];
        for a in 0..3 {
            dims[a] = fields[a].parse().map_err(|_| Error::Density(format!("bad grid dimension {:?}", fields[a])))?;
        }
        let mut b = [0.0f64; 6];
        for (i, f) in fields[3..].iter().enumerate() {
            b[i] = f.parse().map_err(|_| Error::Density(format!("bad grid bound {f:?}")))?;
        }
        let payload = &bytes[nl + 1..];
        let n = dims[0]
            .checked_mul(dims[1])
            .and_then(|v| v.checked_mul(dims[2]))
            .ok_or_else(|| Error::Density("grid dimensions overflow".into()))?;
        if payload.len() != 4 * n {
            return Err(Error::Density(format!("VGRID payload has {} bytes, expected {}", payload.len(), 4 * n)));
        }
        let values = payload.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect();
        let bounds = Aabb { min: Vec3::new(b[0], b[1], b[2]), max: Vec3::new(b[3], b[4], b[5]) };
        TrilinearGrid::new(dims, bounds, values)
    }

    pub fn to_vgrid_bytes(&self) -> Vec<u8> {
        let [nx, ny, nz] = self.dims;
        let (lo, hi) = (self.bounds.min, self.bounds.max);
        let mut out =
            format!("VGRID {nx} {ny} {nz} {} {} {} {} {} {}\n", lo.x, lo.y, lo.z, hi.x, hi.y, hi.z).into_bytes();
        out.reserve(4 * self.values.len());
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_vgrid_bytes(&bytes).map_err(|e| Error::Grid { path: path.to_path_buf(), msg: e.to_string() })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(&self.to_vgrid_bytes()).map_err(|e| Error::io(path, e))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum DensityVariant {
    Constant(f64),
    GaussianSum(Vec<GaussianTerm>),
    Grid(TrilinearGrid),
}

/// Density of particle centers, zero outside the medium mask.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityField {
    variant: DensityVariant,
    mask: MediumShape,
}

/// Monte Carlo quadrature value with its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureEstimate {
    pub value: f64,
    pub std_error: f64,
}

impl DensityField {
    pub fn new(variant: DensityVariant, mask: MediumShape) -> Result<Self> {
        match &variant {
            DensityVariant::Constant(l) => {
                if !(*l >= 0.0) || !l.is_finite() {
                    return Err(Error::Density(format!("constant density must be finite and >= 0, got {l}")));
                }
            }
            DensityVariant::GaussianSum(terms) => {
                for t in terms {
                    if !(t.amplitude >= 0.0) || !t.amplitude.is_finite() || !(t.width > 0.0) || !t.center.is_finite() {
                        return Err(Error::Density(format!("invalid gaussian term {t:?}")));
                    }
                }
            }
            DensityVariant::Grid(_) => {}
        }
        Ok(DensityField { variant, mask })
    }

    pub fn constant(lambda: f64, mask: MediumShape) -> Result<Self> {
        Self::new(DensityVariant::Constant(lambda), mask)
    }

    pub fn gaussian_sum(terms: Vec<GaussianTerm>, mask: MediumShape) -> Result<Self> {
        Self::new(DensityVariant::GaussianSum(terms), mask)
    }

    pub fn variant(&self) -> &DensityVariant {
        &self.variant
    }

    pub fn mask(&self) -> &MediumShape {
        &self.mask
    }

    /// True when no particle can ever be sampled.
    pub fn is_zero(&self) -> bool {
        match &self.variant {
            DensityVariant::Constant(l) => *l == 0.0,
            DensityVariant::GaussianSum(terms) => terms.iter().all(|t| t.amplitude == 0.0),
            DensityVariant::Grid(g) => g.max_value() == 0.0,
        }
    }

    /// Constant value, if the variant is homogeneous.
    pub fn homogeneous_value(&self) -> Option<f64> {
        match self.variant {
            DensityVariant::Constant(l) => Some(l),
            _ => None,
        }
    }

    #[inline]
    fn unmasked(&self, x: Vec3) -> f64 {
        match &self.variant {
            DensityVariant::Constant(l) => *l,
            DensityVariant::GaussianSum(terms) => terms.iter().map(|t| t.eval(x)).sum(),
            DensityVariant::Grid(g) => g.eval(x),
        }
    }

    /// Upper bound of the density over `B(x, r_max)`.
    pub fn majorant(&self, x: Vec3, r_max: f64) -> f64 {
        match &self.variant {
            DensityVariant::Constant(l) => *l,
            DensityVariant::GaussianSum(terms) => terms.iter().map(|t| t.ball_bound(x, r_max)).sum(),
            DensityVariant::Grid(g) => g.max_value(),
        }
    }

    /// Upper bound of the density over the whole mask.
    pub fn global_majorant(&self) -> f64 {
        let bb = self.mask.bounding_box();
        match &self.variant {
            DensityVariant::GaussianSum(terms) => {
                terms.iter().map(|t| t.amplitude * (-bb.distance_squared(t.center) / (t.width * t.width)).exp()).sum()
            }
            _ => self.majorant(bb.center(), 0.0),
        }
    }

    /// `∫_{B(x,r)} λ` by stratified Monte Carlo with `2^16` samples.
    ///
    /// Validation oracle only; samplers never call this.
    pub fn ball_integral(&self, x: Vec3, r: f64) -> QuadratureEstimate {
        self.ball_integral_with(x, r, [32, 32, 64], 0x5eed_ba11)
    }

    pub fn ball_integral_with(&self, x: Vec3, r: f64, strata: [usize; 3], seed: u64) -> QuadratureEstimate {
        if r <= 0.0 {
            return QuadratureEstimate { value: 0.0, std_error: 0.0 };
        }
        let volume = 4.0 / 3.0 * std::f64::consts::PI * r * r * r;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let [na, nb, nc] = strata;
        let n = (na * nb * nc) as f64;
        let (mut sum, mut sum2) = (0.0, 0.0);
        for a in 0..na {
            for b in 0..nb {
                for c in 0..nc {
                    let u1 = (a as f64 + rng.random::<f64>()) / na as f64;
                    let u2 = (b as f64 + rng.random::<f64>()) / nb as f64;
                    let u3 = (c as f64 + rng.random::<f64>()) / nc as f64;
                    // volume-preserving map of the unit cube onto the ball
                    let rho = r * u1.cbrt();
                    let z = 1.0 - 2.0 * u2;
                    let s = (1.0 - z * z).max(0.0).sqrt();
                    let phi = 2.0 * std::f64::consts::PI * u3;
                    let p = x + Vec3::new(s * phi.cos(), s * phi.sin(), z) * rho;
                    let v = self.eval(p);
                    sum += v;
                    sum2 += v * v;
                }
            }
        }
        let mean = sum / n;
        let var = (sum2 / n - mean * mean).max(0.0);
        QuadratureEstimate { value: volume * mean, std_error: volume * (var / n).sqrt() }
    }

    /// `∮_{∂B(x,r)} λ dA` by a midpoint rule on an equal-area `(z, φ)` grid.
    pub fn sphere_integral(&self, x: Vec3, r: f64, n_per_axis: usize) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        let area = 4.0 * std::f64::consts::PI * r * r;
        let m = n_per_axis;
        let mut sum = 0.0;
        for i in 0..m {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / m as f64;
            let s = (1.0 - z * z).max(0.0).sqrt();
            for j in 0..m {
                let phi = 2.0 * std::f64::consts::PI * (j as f64 + 0.5) / m as f64;
                sum += self.eval(x + Vec3::new(s * phi.cos(), s * phi.sin(), z) * r);
            }
        }
        area * sum / (m * m) as f64
    }

    /// `∫_M λ`, the expected particle count, by stratified quadrature over the
    /// mask's bounding box with `2^20` samples.
    pub fn total_mass(&self) -> QuadratureEstimate {
        let bb = self.mask.bounding_box();
        let e = bb.extent();
        let volume = bb.volume();
        let (na, nb, nc) = (64usize, 128usize, 128usize);
        let n = (na * nb * nc) as f64;
        let mut rng = ChaCha8Rng::seed_from_u64(0x0ba55);
        let (mut sum, mut sum2) = (0.0, 0.0);
        for a in 0..na {
            for b in 0..nb {
                for c in 0..nc {
                    let p = Vec3::new(
                        bb.min.x + e.x * (a as f64 + rng.random::<f64>()) / na as f64,
                        bb.min.y + e.y * (b as f64 + rng.random::<f64>()) / nb as f64,
                        bb.min.z + e.z * (c as f64 + rng.random::<f64>()) / nc as f64,
                    );
                    let v = self.eval(p);
                    sum += v;
                    sum2 += v * v;
                }
            }
        }
        let mean = sum / n;
        let var = (sum2 / n - mean * mean).max(0.0);
        QuadratureEstimate { value: volume * mean, std_error: volume * (var / n).sqrt() }
    }
}

impl Intensity for DensityField {
    #[inline]
    fn eval(&self, x: Vec3) -> f64 {
        if !self.mask.contains(x) {
            return 0.0;
        }
        self.unmasked(x)
    }

    fn support_radius(&self, x: Vec3) -> f64 {
        self.mask.bounding_box().max_distance(x)
    }
}

pub fn eval_density(field: &DensityField, x: Vec3) -> f64 {
    field.eval(x)
}

/// Density plus the shared particle radius.
#[derive(Clone, Debug, PartialEq)]
pub struct PbmParams {
    pub density: DensityField,
    pub radius: f64,
}

impl PbmParams {
    pub fn new(density: DensityField, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::Density(format!("particle radius must be positive, got {radius}")));
        }
        Ok(PbmParams { density, radius })
    }
}
