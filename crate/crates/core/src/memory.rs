//! Per-walk memory of what earlier closest-point samples revealed.
//!
//! Every sampling step certifies a ball free of particle centers (after
//! dilation by `s`) and may pin one or more particles. Later steps must sample
//! conditionally on both, otherwise the walk sees a geometry that changes
//! under it.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::density::DensityField;
use crate::error::SamplingError;
use crate::geometry::{ClosestHit, MediumShape, Provenance, Vec3};
use crate::pbm::{sample_closest_point, ClosestPointOutcome, ConditionalDensityView, EmptyBall};

/// Written as `full`, `finite:KE,KP` or `memoryless` in scene files and reports.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum MemoryMode {
    #[default]
    Full,
    /// Keep only the most recent entries of each list.
    Finite {
        max_empty: usize,
        max_particles: usize,
    },
    Memoryless,
}

impl MemoryMode {
    fn caps(self) -> (usize, usize) {
        match self {
            MemoryMode::Full => (usize::MAX, usize::MAX),
            MemoryMode::Finite { max_empty, max_particles } => (max_empty, max_particles),
            MemoryMode::Memoryless => (0, 0),
        }
    }
}

impl std::fmt::Display for MemoryMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MemoryMode::Full => write!(f, "full"),
            MemoryMode::Finite { max_empty, max_particles } => write!(f, "finite:{max_empty},{max_particles}"),
            MemoryMode::Memoryless => write!(f, "memoryless"),
        }
    }
}

impl std::str::FromStr for MemoryMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "full" => Ok(MemoryMode::Full),
            "memoryless" => Ok(MemoryMode::Memoryless),
            _ => {
                let rest = s.strip_prefix("finite:").ok_or_else(|| format!("unknown memory mode {s:?}"))?;
                let (a, b) =
                    rest.split_once(',').ok_or_else(|| format!("finite memory needs two caps, got {rest:?}"))?;
                let max_empty: usize = a.trim().parse().map_err(|_| format!("bad cap {a:?}"))?;
                let max_particles: usize = b.trim().parse().map_err(|_| format!("bad cap {b:?}"))?;
                if max_empty == 0 || max_particles == 0 {
                    return Err("finite memory caps must be positive".into());
                }
                Ok(MemoryMode::Finite { max_empty, max_particles })
            }
        }
    }
}

impl Serialize for MemoryMode {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for MemoryMode {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, Default)]
pub struct Memory {
    empty_balls: Vec<EmptyBall>,
    particle_centers: Vec<Vec3>,
    mode: MemoryMode,
    origin: Option<EmptyBall>,
}

impl Memory {
    pub fn new(mode: MemoryMode) -> Self {
        Memory { empty_balls: Vec::new(), particle_centers: Vec::new(), mode, origin: None }
    }

    /// Conditions every later sample on `x` being outside all particles.
    /// Kept in every mode and not counted in the empty-ball list.
    pub fn condition_uncovered(&mut self, x: Vec3) {
        self.origin = Some(EmptyBall { center: x, radius: 0.0 });
    }

    pub fn view<'a>(&'a self, field: &'a DensityField, s: f64) -> ConditionalDensityView<'a> {
        ConditionalDensityView::new(field, &self.empty_balls, s).with_extra(self.origin)
    }

    pub fn mode(&self) -> MemoryMode {
        self.mode
    }

    pub fn empty_balls(&self) -> &[EmptyBall] {
        &self.empty_balls
    }

    pub fn particle_centers(&self) -> &[Vec3] {
        &self.particle_centers
    }

    pub fn clear(&mut self) {
        self.empty_balls.clear();
        self.particle_centers.clear();
        self.origin = None;
    }

    pub fn record_empty(&mut self, center: Vec3, radius: f64) {
        let (cap, _) = self.mode.caps();
        if cap == 0 {
            return;
        }
        if self.empty_balls.len() == cap {
            self.empty_balls.remove(0);
        }
        self.empty_balls.push(EmptyBall { center, radius });
    }

    /// Pins a particle; returns false if it was already pinned or the mode keeps none.
    pub fn add_particle(&mut self, center: Vec3) -> bool {
        let (_, cap) = self.mode.caps();
        if cap == 0 || self.particle_centers.contains(&center) {
            return false;
        }
        if self.particle_centers.len() == cap {
            self.particle_centers.remove(0);
        }
        self.particle_centers.push(center);
        true
    }

    /// Records the outcome of one closest-point sample taken at `x`.
    pub fn update(&mut self, x: Vec3, hit: &ClosestHit) {
        debug_assert!(hit.distance > 0.0);
        self.record_empty(x, hit.distance);
        if let Provenance::StochasticParticle(c) = hit.provenance {
            self.add_particle(c);
        }
    }

    pub fn is_inside_dilated_empty(&self, x: Vec3, s: f64) -> bool {
        self.empty_balls.iter().any(|b| x.distance(b.center) < b.radius + s)
    }

    /// Nearest pinned center, skipping `exclude` if given.
    pub fn nearest_particle(&self, x: Vec3, exclude: Option<Vec3>) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for (i, &c) in self.particle_centers.iter().enumerate() {
            if Some(c) == exclude {
                continue;
            }
            let d = x.distance_squared(c);
            if best.is_none_or(|(_, b)| d < b) {
                best = Some((i, d));
            }
        }
        best.map(|(i, d2)| (i, d2.sqrt()))
    }

    /// Closest point on the pinned particles. The distance is negative when
    /// `x` lies inside one of them.
    pub fn closest_point_on_sampled_particles(&self, x: Vec3, s: f64) -> Option<ClosestHit> {
        let (i, d) = self.nearest_particle(x, None)?;
        let c = self.particle_centers[i];
        let point = if d > 0.0 { c + (x - c) * (s / d) } else { x };
        Some(ClosestHit { point, distance: d - s, provenance: Provenance::MemoryParticle(i) })
    }
}

/// Closest boundary point around `x`, sampling the particle geometry
/// conditionally on `memory`.
///
/// `majorant` must bound `field` over `B(x, d + s)` with `d` the distance to
/// the medium boundary.
pub fn sample_closest_point_with_memory<R: Rng + ?Sized>(
    x: Vec3,
    majorant: f64,
    field: &DensityField,
    s: f64,
    memory: &Memory,
    medium: &MediumShape,
    rng: &mut R,
) -> Result<ClosestHit, SamplingError> {
    sample_closest_point_with_memory_from(x, medium.closest_point(x), majorant, field, s, memory, rng)
}

/// As [`sample_closest_point_with_memory`], with the medium query already done.
pub fn sample_closest_point_with_memory_from<R: Rng + ?Sized>(
    x: Vec3,
    medium_hit: ClosestHit,
    majorant: f64,
    field: &DensityField,
    s: f64,
    memory: &Memory,
    rng: &mut R,
) -> Result<ClosestHit, SamplingError> {
    let mut det = medium_hit;
    if let Some(p) = memory.closest_point_on_sampled_particles(x, s) {
        if p.distance < det.distance {
            det = p;
        }
    }
    if det.distance <= 0.0 {
        return Ok(det);
    }
    let view = memory.view(field, s);
    Ok(match sample_closest_point(x, majorant, &view, s, rng, Some(det.distance))? {
        ClosestPointOutcome::Surface { point, center } => {
            ClosestHit { point, distance: x.distance(center) - s, provenance: Provenance::StochasticParticle(center) }
        }
        ClosestPointOutcome::Inside { .. } => {
            ClosestHit { point: x, distance: 0.0, provenance: Provenance::InsideParticle }
        }
        ClosestPointOutcome::BeyondStop => det,
    })
}
