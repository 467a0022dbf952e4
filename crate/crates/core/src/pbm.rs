//! Poisson Boolean model sampling.
//!
//! Closest-center sampling proceeds outward from a query point: cubed radii
//! grow by exponential increments at the majorant rate, each candidate gets a
//! uniform direction, and thinning keeps it with probability `λ(c)/λ̄`.
//! [`ThinningStream`] exposes that outward sweep so callers can keep going past
//! the first accepted center.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use statrs::function::gamma::gamma;

use crate::density::{DensityField, Intensity};
use crate::error::{Result, SamplingError};
use crate::geometry::{sample_direction, MediumShape, Vec3};

/// Relative slack on majorant checks, absorbing rounding in the bound itself.
const MAJORANT_SLACK: f64 = 1e-9;

/// A ball known to hold no particle center once dilated by `s`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EmptyBall {
    pub center: Vec3,
    pub radius: f64,
}

/// Density with the dilated empty balls zeroed out.
#[derive(Clone, Copy, Debug)]
pub struct ConditionalDensityView<'a> {
    pub base: &'a DensityField,
    pub excluded: &'a [EmptyBall],
    /// One more excluded ball kept outside the list.
    pub extra: Option<EmptyBall>,
    pub s: f64,
}

impl<'a> ConditionalDensityView<'a> {
    pub fn new(base: &'a DensityField, excluded: &'a [EmptyBall], s: f64) -> Self {
        ConditionalDensityView { base, excluded, extra: None, s }
    }

    pub fn with_extra(mut self, extra: Option<EmptyBall>) -> Self {
        self.extra = extra;
        self
    }

    /// Most recent records first: they are the ones a walk is still near.
    #[inline]
    pub fn is_excluded(&self, x: Vec3) -> bool {
        let hit = |b: &EmptyBall| {
            let r = b.radius + self.s;
            x.distance_squared(b.center) <= r * r
        };
        self.extra.as_ref().is_some_and(hit) || self.excluded.iter().rev().any(hit)
    }
}

impl Intensity for ConditionalDensityView<'_> {
    fn eval(&self, x: Vec3) -> f64 {
        if self.is_excluded(x) {
            0.0
        } else {
            self.base.eval(x)
        }
    }

    fn thinning_accept(&self, c: Vec3, threshold: f64) -> (f64, bool) {
        let base = self.base.eval(c);
        // the exclusion scan only matters for candidates thinning would keep
        (base, threshold < base && !self.is_excluded(c))
    }

    fn support_radius(&self, x: Vec3) -> f64 {
        self.base.support_radius(x)
    }
}

pub fn eval_conditional(view: &ConditionalDensityView<'_>, x: Vec3) -> f64 {
    view.eval(x)
}

pub fn exponential_from_uniform(rate: f64, u: f64) -> f64 {
    -(-u).ln_1p() / rate
}

pub fn sample_exponential<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> Result<f64, SamplingError> {
    if !(rate > 0.0) {
        return Err(SamplingError::NonPositiveRate(rate));
    }
    Ok(exponential_from_uniform(rate, rng.random::<f64>()))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ClosestPointOutcome {
    /// Closest point on the first accepted particle, plus that particle's center.
    Surface { point: Vec3, center: Vec3 },
    /// The query lies inside the first accepted particle.
    Inside { center: Vec3 },
    /// No center within the stop radius (dilated by `s`), or within the density's support.
    BeyondStop,
}

impl ClosestPointOutcome {
    pub fn center(&self) -> Option<Vec3> {
        match *self {
            ClosestPointOutcome::Surface { center, .. } | ClosestPointOutcome::Inside { center } => Some(center),
            ClosestPointOutcome::BeyondStop => None,
        }
    }
}

/// Outward sweep of thinned candidate centers around `x`.
///
/// Per candidate the RNG is consumed in a fixed order: exponential increment,
/// direction, acceptance uniform. The exponential is drawn first so a sweep
/// that overshoots its limit stops after a single uniform.
#[derive(Clone, Debug)]
pub struct ThinningStream {
    x: Vec3,
    majorant: f64,
    rate: f64,
    cubed: f64,
    limit: f64,
    exhausted: bool,
    candidates: usize,
}

impl ThinningStream {
    /// `limit` bounds the candidate center distance; beyond it the sweep ends.
    pub fn new(x: Vec3, majorant: f64, limit: f64) -> Result<Self, SamplingError> {
        if !(majorant >= 0.0) || !majorant.is_finite() {
            return Err(SamplingError::NonPositiveRate(majorant));
        }
        Ok(ThinningStream {
            x,
            majorant,
            rate: 4.0 / 3.0 * PI * majorant,
            cubed: 0.0,
            limit,
            exhausted: majorant == 0.0,
            candidates: 0,
        })
    }

    /// Distance of the most recent candidate.
    pub fn radius(&self) -> f64 {
        self.cubed.cbrt()
    }

    pub fn limit(&self) -> f64 {
        self.limit
    }

    /// Candidates drawn so far, accepted or not.
    pub fn candidates(&self) -> usize {
        self.candidates
    }

    pub fn shrink_limit(&mut self, limit: f64) {
        self.limit = self.limit.min(limit);
    }

    /// Next accepted center, or `None` once the sweep passes its limit.
    pub fn next_center<I, R>(&mut self, field: &I, rng: &mut R) -> Result<Option<Vec3>, SamplingError>
    where
        I: Intensity + ?Sized,
        R: Rng + ?Sized,
    {
        while !self.exhausted {
            self.cubed += exponential_from_uniform(self.rate, rng.random::<f64>());
            let r = self.cubed.cbrt();
            if r > self.limit {
                self.exhausted = true;
                break;
            }
            self.candidates += 1;
            let w = sample_direction(rng, None).get();
            let c = self.x + w * r;
            let u: f64 = rng.random();
            let (density, accepted) = field.thinning_accept(c, u * self.majorant);
            if density > self.majorant * (1.0 + MAJORANT_SLACK) {
                return Err(SamplingError::MajorantViolated { x: self.x, center: c, density, majorant: self.majorant });
            }
            if accepted {
                return Ok(Some(c));
            }
        }
        Ok(None)
    }
}

/// Classifies an accepted center relative to the query point.
pub fn outcome_for_center(x: Vec3, center: Vec3, s: f64) -> ClosestPointOutcome {
    let d = x.distance(center);
    if d < s {
        return ClosestPointOutcome::Inside { center };
    }
    let point = x + (center - x) * ((d - s) / d);
    ClosestPointOutcome::Surface { point, center }
}

/// Closest particle point around `x` under the density `field`.
///
/// `majorant` must bound the field over the ball the sweep can reach. With a
/// `stop_radius` the sweep ends once candidate centers pass `stop_radius + s`;
/// it always ends at the field's support.
pub fn sample_closest_point<I, R>(
    x: Vec3,
    majorant: f64,
    field: &I,
    s: f64,
    rng: &mut R,
    stop_radius: Option<f64>,
) -> Result<ClosestPointOutcome, SamplingError>
where
    I: Intensity + ?Sized,
    R: Rng + ?Sized,
{
    let mut limit = field.support_radius(x);
    if let Some(r) = stop_radius {
        limit = limit.min(r + s);
    }
    let mut stream = ThinningStream::new(x, majorant, limit)?;
    Ok(match stream.next_center(field, rng)? {
        Some(c) => outcome_for_center(x, c, s),
        None => ClosestPointOutcome::BeyondStop,
    })
}

pub fn cdf_center_distance_hom(r: f64, lambda: f64) -> f64 {
    -(-4.0 / 3.0 * PI * r.powi(3) * lambda).exp_m1()
}

pub fn pdf_center_distance_hom(r: f64, lambda: f64) -> f64 {
    (-4.0 / 3.0 * PI * r.powi(3) * lambda).exp() * 4.0 * PI * r * r * lambda
}

/// Density of the distance from `x` to the nearest center, by quadrature.
pub fn pdf_center_distance(field: &DensityField, x: Vec3, r: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    let lambda_ball = field.ball_integral(x, r).value;
    (-lambda_ball).exp() * field.sphere_integral(x, r, 128)
}

/// Contact distance CDF for an uncovered point in a homogeneous model.
pub fn cdf_spherical_contact_hom(r: f64, lambda: f64, s: f64) -> f64 {
    let shell = (r + s).powi(3) - s.powi(3);
    -(-4.0 / 3.0 * PI * shell * lambda).exp_m1()
}

/// Probability that `x` lies inside some particle.
pub fn coverage_probability(field: &DensityField, x: Vec3, s: f64) -> f64 {
    -(-field.ball_integral(x, s).value).exp_m1()
}

pub fn coverage_probability_hom(lambda: f64, s: f64) -> f64 {
    -(-4.0 / 3.0 * PI * s.powi(3) * lambda).exp_m1()
}

/// Mean distance to the nearest center in a homogeneous model.
pub fn mean_free_ball_radius(lambda: f64) -> f64 {
    gamma(4.0 / 3.0) * (4.0 / 3.0 * PI * lambda).powf(-1.0 / 3.0)
}

/// One explicit realization of the particle geometry.
#[derive(Clone, Debug, PartialEq)]
pub struct ParticleConfiguration {
    pub centers: Vec<Vec3>,
    pub radius: f64,
}

impl ParticleConfiguration {
    pub fn new(centers: Vec<Vec3>, radius: f64) -> Self {
        ParticleConfiguration { centers, radius }
    }

    pub fn empty(radius: f64) -> Self {
        ParticleConfiguration { centers: Vec::new(), radius }
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn covers(&self, x: Vec3) -> bool {
        let s2 = self.radius * self.radius;
        self.centers.iter().any(|c| c.distance_squared(x) < s2)
    }
}

/// Draws a full configuration by thinning a homogeneous Poisson process on
/// the medium's bounding box.
pub fn sample_configuration<R: Rng + ?Sized>(
    medium: &MediumShape,
    field: &DensityField,
    s: f64,
    rng: &mut R,
) -> Result<ParticleConfiguration, SamplingError> {
    let bb = medium.bounding_box();
    let mid = bb.center();
    let majorant = field.global_majorant().min(field.majorant(mid, bb.max_distance(mid)));
    let mean = majorant * bb.volume();
    if field.is_zero() || !(mean > 0.0) {
        return Ok(ParticleConfiguration::empty(s));
    }
    let n = Poisson::new(mean).map_err(|_| SamplingError::NonPositiveRate(mean))?.sample(rng) as usize;
    let e = bb.extent();
    let mut centers = Vec::with_capacity(((n as f64) * 0.7) as usize);
    for _ in 0..n {
        let c = Vec3::new(
            bb.min.x + e.x * rng.random::<f64>(),
            bb.min.y + e.y * rng.random::<f64>(),
            bb.min.z + e.z * rng.random::<f64>(),
        );
        let u: f64 = rng.random();
        let lambda = if medium.contains(c) { field.eval(c) } else { 0.0 };
        if lambda > majorant * (1.0 + MAJORANT_SLACK) {
            return Err(SamplingError::MajorantViolated { x: mid, center: c, density: lambda, majorant });
        }
        if u * majorant < lambda {
            centers.push(c);
        }
    }
    Ok(ParticleConfiguration::new(centers, s))
}
