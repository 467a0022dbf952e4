use serde::{Deserialize, Serialize};

use crate::density::PbmParams;
use crate::error::{Error, Result};
use crate::geometry::{MediumShape, Vec3};

/// Builtin boundary data. `g` is defined on all of space so it can be
/// evaluated at walk points as well as on the boundary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum BoundaryFunction {
    Constant {
        value: f64,
    },
    /// `scale * x[axis] + offset`
    Linear {
        axis: usize,
        scale: f64,
        #[serde(default)]
        offset: f64,
    },
    /// `scale * (cos(k x0) cos(k x1) + offset)` with `k = frequency * exp(-decay (x2 - z_shift))`
    CosProduct {
        scale: f64,
        frequency: f64,
        decay: f64,
        z_shift: f64,
        offset: f64,
    },
    /// `amplitude * cos(frequency x2) + offset` for `x0 < 0`, `- offset` otherwise
    SplitCos {
        amplitude: f64,
        frequency: f64,
        offset: f64,
    },
    /// `-a * g(p) * exp(-b d^2)` with `p` the closest medium-boundary point and
    /// `d` its distance. Only valid as particle data.
    GaussianShell {
        a: f64,
        b: f64,
    },
}

impl BoundaryFunction {
    pub fn constant(value: f64) -> Self {
        BoundaryFunction::Constant { value }
    }

    pub fn cos_product_default() -> Self {
        BoundaryFunction::CosProduct { scale: 0.5, frequency: 2.0, decay: 2.0, z_shift: 1.75, offset: -1.75 }
    }

    pub fn split_cos_default() -> Self {
        BoundaryFunction::SplitCos { amplitude: 0.5, frequency: 10.0, offset: 0.5 }
    }

    fn validate(&self) -> Result<()> {
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        let ok = match *self {
            BoundaryFunction::Constant { value } => finite(&[value]),
            BoundaryFunction::Linear { axis, scale, offset } => axis < 3 && finite(&[scale, offset]),
            BoundaryFunction::CosProduct { scale, frequency, decay, z_shift, offset } => {
                finite(&[scale, frequency, decay, z_shift, offset])
            }
            BoundaryFunction::SplitCos { amplitude, frequency, offset } => finite(&[amplitude, frequency, offset]),
            BoundaryFunction::GaussianShell { a, b } => finite(&[a, b]) && b >= 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid boundary function {self:?}")))
        }
    }

    /// Value at `x`; `None` for data that needs the medium context.
    pub fn eval_plain(&self, x: Vec3) -> Option<f64> {
        Some(match *self {
            BoundaryFunction::Constant { value } => value,
            BoundaryFunction::Linear { axis, scale, offset } => scale * x[axis] + offset,
            BoundaryFunction::CosProduct { scale, frequency, decay, z_shift, offset } => {
                let k = frequency * (-decay * (x.z - z_shift)).exp();
                scale * ((k * x.x).cos() * (k * x.y).cos() + offset)
            }
            BoundaryFunction::SplitCos { amplitude, frequency, offset } => {
                let base = amplitude * (frequency * x.z).cos();
                if x.x < 0.0 {
                    base + offset
                } else {
                    base - offset
                }
            }
            BoundaryFunction::GaussianShell { .. } => return None,
        })
    }

    /// Range of values over `medium`, given the range of the medium data for
    /// context-dependent variants.
    fn bounds(&self, medium: &MediumShape, medium_range: (f64, f64)) -> (f64, f64) {
        let sort = |a: f64, b: f64| if a <= b { (a, b) } else { (b, a) };
        match *self {
            BoundaryFunction::Constant { value } => (value, value),
            BoundaryFunction::Linear { axis, scale, offset } => {
                let bb = medium.bounding_box();
                sort(scale * bb.min[axis] + offset, scale * bb.max[axis] + offset)
            }
            BoundaryFunction::CosProduct { scale, offset, .. } => sort(scale * (offset - 1.0), scale * (offset + 1.0)),
            BoundaryFunction::SplitCos { amplitude, offset, .. } => {
                let m = amplitude.abs() + offset.abs();
                (-m, m)
            }
            BoundaryFunction::GaussianShell { a, .. } => {
                let m = a.abs() * medium_range.0.abs().max(medium_range.1.abs());
                (-m, m)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ParticleCondition {
    /// Dirichlet data on particle surfaces; `None` reuses the medium data.
    Dirichlet {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        data: Option<BoundaryFunction>,
    },
    NeumannZero,
}

impl ParticleCondition {
    pub fn dirichlet(data: BoundaryFunction) -> Self {
        ParticleCondition::Dirichlet { data: Some(data) }
    }

    pub fn is_neumann(&self) -> bool {
        matches!(self, ParticleCondition::NeumannZero)
    }
}

/// Laplace problem on a medium perforated by Poisson Boolean particles.
#[derive(Clone, Debug, PartialEq)]
pub struct Problem {
    pub medium: MediumShape,
    pub medium_bc: BoundaryFunction,
    pub pbm: PbmParams,
    pub particle_bc: ParticleCondition,
}

impl Problem {
    pub fn new(
        medium: MediumShape,
        medium_bc: BoundaryFunction,
        pbm: PbmParams,
        particle_bc: ParticleCondition,
    ) -> Result<Self> {
        medium.validate()?;
        medium_bc.validate()?;
        if matches!(medium_bc, BoundaryFunction::GaussianShell { .. }) {
            return Err(Error::Config(
                "gaussian_shell data depends on the medium data and cannot be the medium data".into(),
            ));
        }
        if let ParticleCondition::Dirichlet { data: Some(f) } = &particle_bc {
            f.validate()?;
        }
        Ok(Problem { medium, medium_bc, pbm, particle_bc })
    }

    pub fn radius(&self) -> f64 {
        self.pbm.radius
    }

    /// Medium Dirichlet data.
    #[inline]
    pub fn g(&self, x: Vec3) -> f64 {
        self.medium_bc.eval_plain(x).expect("medium data validated at construction")
    }

    /// Particle Dirichlet data at `x`. Zero-flux particles carry no data and
    /// fall back to the medium data.
    pub fn particle_value(&self, x: Vec3) -> f64 {
        match &self.particle_bc {
            ParticleCondition::Dirichlet { data: Some(BoundaryFunction::GaussianShell { a, b }) } => {
                let hit = self.medium.closest_point(x);
                -a * self.g(hit.point) * (-b * hit.distance * hit.distance).exp()
            }
            ParticleCondition::Dirichlet { data: Some(f) } => f.eval_plain(x).expect("validated"),
            _ => self.g(x),
        }
    }

    /// Range of all boundary data over the medium; walk values stay inside it.
    pub fn data_bounds(&self) -> (f64, f64) {
        let m = self.medium_bc.bounds(&self.medium, (0.0, 0.0));
        match &self.particle_bc {
            ParticleCondition::Dirichlet { data: Some(f) } => {
                let p = f.bounds(&self.medium, m);
                (m.0.min(p.0), m.1.max(p.1))
            }
            _ => m,
        }
    }

    /// True when every particle carries zero Dirichlet data.
    pub fn particles_absorb_to_zero(&self) -> bool {
        matches!(
            self.particle_bc,
            ParticleCondition::Dirichlet { data: Some(BoundaryFunction::Constant { value }) } if value == 0.0
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::DensityField;
    use approx::assert_abs_diff_eq;

    fn ball() -> MediumShape {
        MediumShape::sphere(Vec3::ZERO, 1.0).unwrap()
    }

    fn pbm() -> PbmParams {
        PbmParams::new(DensityField::constant(0.0, ball()).unwrap(), 0.1).unwrap()
    }

    #[test]
    fn table_forms() {
        let g = BoundaryFunction::cos_product_default();
        let x = Vec3::new(0.3, -0.2, 1.75);
        let expect = 0.5 * ((2.0f64 * 0.3).cos() * (2.0f64 * -0.2).cos() - 1.75);
        assert_abs_diff_eq!(g.eval_plain(x).unwrap(), expect, epsilon = 1e-15);

        let g = BoundaryFunction::split_cos_default();
        assert_abs_diff_eq!(g.eval_plain(Vec3::new(-0.1, 0.0, 0.0)).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(g.eval_plain(Vec3::new(0.1, 0.0, 0.0)).unwrap(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn gaussian_shell_uses_medium_data() {
        let p = Problem::new(
            ball(),
            BoundaryFunction::Linear { axis: 0, scale: 2.0, offset: 0.0 },
            pbm(),
            ParticleCondition::dirichlet(BoundaryFunction::GaussianShell { a: 0.25, b: 200.0 }),
        )
        .unwrap();
        let x = Vec3::new(0.9, 0.0, 0.0);
        assert_abs_diff_eq!(p.particle_value(x), -0.25 * 2.0 * (-200.0f64 * 0.01).exp(), epsilon = 1e-12);
        let (lo, hi) = p.data_bounds();
        assert!(lo <= -0.5 && hi >= 2.0);
    }

    #[test]
    fn rejects_shell_as_medium_data() {
        assert!(Problem::new(
            ball(),
            BoundaryFunction::GaussianShell { a: 1.0, b: 1.0 },
            pbm(),
            ParticleCondition::NeumannZero
        )
        .is_err());
        assert!(Problem::new(
            ball(),
            BoundaryFunction::Linear { axis: 3, scale: 1.0, offset: 0.0 },
            pbm(),
            ParticleCondition::NeumannZero
        )
        .is_err());
    }

    #[test]
    fn serde_tags() {
        let f = BoundaryFunction::split_cos_default();
        let j = serde_json::to_string(&f).unwrap();
        assert!(j.contains("\"type\":\"split_cos\""));
        assert_eq!(serde_json::from_str::<BoundaryFunction>(&j).unwrap(), f);
    }
}
