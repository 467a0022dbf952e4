use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::density::{DensityField, DensityVariant, GaussianTerm, PbmParams, TrilinearGrid};
use crate::error::{Error, Result};
use crate::geometry::MediumShape;
use crate::solvers::{BoundaryFunction, ParticleCondition, Problem, SolverConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DensitySpec {
    Constant {
        lambda: f64,
    },
    GaussianSum {
        terms: Vec<GaussianTerm>,
    },
    /// VGRID file, relative to the scene file.
    Grid {
        path: PathBuf,
    },
}

/// A scene file: medium, particles, boundary data and solver defaults.
///
/// ```toml
/// particle_radius = 0.05
///
/// [medium]
/// primitives = [{ type = "sphere", center = [0.0, 0.0, 0.0], radius = 1.0 }]
///
/// [density]
/// type = "constant"
/// lambda = 20.0
///
/// [medium_bc]
/// type = "linear"
/// axis = 0
/// scale = 0.5
/// offset = 0.5
///
/// [particle_bc]
/// type = "dirichlet"
/// data = { type = "constant", value = 0.0 }
///
/// [solver]
/// eps = 1e-3
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub particle_radius: f64,
    pub medium: MediumShape,
    pub density: DensitySpec,
    pub medium_bc: BoundaryFunction,
    pub particle_bc: ParticleCondition,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

impl SceneSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let scene: SceneSpec = toml::from_str(text).map_err(|e| Error::Scene(e.to_string()))?;
        scene.validate()?;
        Ok(scene)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut scene = Self::parse(&text)?;
        scene.base_dir = path.parent().map(Path::to_path_buf);
        Ok(scene)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Scene(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.particle_radius > 0.0) || !self.particle_radius.is_finite() {
            return Err(Error::Scene(format!("particle_radius must be positive, got {}", self.particle_radius)));
        }
        self.medium.validate()?;
        self.solver.validate(self.particle_radius)
    }

    fn density_field(&self) -> Result<DensityField> {
        let mask = self.medium.clone();
        match &self.density {
            DensitySpec::Constant { lambda } => DensityField::constant(*lambda, mask),
            DensitySpec::GaussianSum { terms } => DensityField::gaussian_sum(terms.clone(), mask),
            DensitySpec::Grid { path } => {
                let full = match &self.base_dir {
                    Some(dir) if path.is_relative() => dir.join(path),
                    _ => path.clone(),
                };
                DensityField::new(DensityVariant::Grid(TrilinearGrid::load(&full)?), mask)
            }
        }
    }

    pub fn problem(&self) -> Result<Problem> {
        self.validate()?;
        let pbm = PbmParams::new(self.density_field()?, self.particle_radius)?;
        Problem::new(self.medium.clone(), self.medium_bc.clone(), pbm, self.particle_bc.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vec3;

    const EXAMPLE: &str = r#"
particle_radius = 0.05

[medium]
primitives = [{ type = "sphere", center = [0.0, 0.0, 0.0], radius = 1.0 }]

[density]
type = "constant"
lambda = 20.0

[medium_bc]
type = "linear"
axis = 0
scale = 0.5
offset = 0.5

[particle_bc]
type = "dirichlet"
data = { type = "constant", value = 0.0 }

[solver]
eps = 1e-3
"#;

    #[test]
    fn parses_and_round_trips() {
        let scene = SceneSpec::parse(EXAMPLE).unwrap();
        assert_eq!(scene.solver.eps, 1e-3);
        assert_eq!(scene.solver.max_steps, 10_000);
        let text = scene.to_toml().unwrap();
        let back = SceneSpec::parse(&text).unwrap();
        assert_eq!(back, scene);
        assert_eq!(back.to_toml().unwrap(), text);
        let p = scene.problem().unwrap();
        assert_eq!(p.g(Vec3::X), 1.0);
    }

    #[test]
    fn rejects_large_eps() {
        let bad = EXAMPLE.replace("eps = 1e-3", "eps = 1e-2");
        let err = SceneSpec::parse(&bad).unwrap_err();
        assert!(err.to_string().contains("tenth"));
    }

    #[test]
    fn grid_path_is_relative_to_scene() {
        let dir = tempfile::tempdir().unwrap();
        let grid = TrilinearGrid::new(
            [2, 2, 2],
            crate::geometry::Aabb { min: Vec3::splat(-1.0), max: Vec3::splat(1.0) },
            vec![5.0; 8],
        )
        .unwrap();
        grid.save(&dir.path().join("rho.vgrid")).unwrap();
        let text = EXAMPLE.replace("type = \"constant\"\nlambda = 20.0", "type = \"grid\"\npath = \"rho.vgrid\"");
        let path = dir.path().join("scene.toml");
        std::fs::write(&path, text).unwrap();
        let scene = SceneSpec::load(&path).unwrap();
        let p = scene.problem().unwrap();
        use crate::density::Intensity;
        assert_eq!(p.pbm.density.eval(Vec3::new(0.1, 0.2, 0.3)), 5.0);
    }
}
