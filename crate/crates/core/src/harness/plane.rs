use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{MediumShape, Vec3};

/// Regular grid of evaluation points on a parallelogram.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalPlane {
    pub origin: Vec3,
    pub u_axis: Vec3,
    pub v_axis: Vec3,
    pub nu: usize,
    pub nv: usize,
}

impl EvalPlane {
    pub fn new(origin: Vec3, u_axis: Vec3, v_axis: Vec3, nu: usize, nv: usize) -> Result<Self> {
        if nu == 0 || nv == 0 {
            return Err(Error::InvalidInput("plane resolution must be positive".into()));
        }
        let cross = u_axis.cross(v_axis).norm();
        if !(cross > 1e-12 * u_axis.norm() * v_axis.norm()) || !cross.is_finite() {
            return Err(Error::InvalidInput("plane axes must be finite and non-parallel".into()));
        }
        Ok(EvalPlane { origin, u_axis, v_axis, nu, nv })
    }

    /// Parses `"ox,oy,oz;ux,uy,uz;vx,vy,vz;nu,nv"`.
    pub fn parse(text: &str) -> Result<Self> {
        let bad = || Error::InvalidInput(format!("plane {text:?} is not \"ox,oy,oz;ux,uy,uz;vx,vy,vz;nu,nv\""));
        let parts: Vec<&str> = text.split(';').map(str::trim).collect();
        if parts.len() != 4 {
            return Err(bad());
        }
        let vec3 = |s: &str| -> Result<Vec3> {
            let v: Vec<f64> =
                s.split(',').map(|t| t.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|_| bad())?;
            if v.len() != 3 {
                return Err(bad());
            }
            Ok(Vec3::new(v[0], v[1], v[2]))
        };
        let res: Vec<usize> =
            parts[3].split(',').map(|t| t.trim().parse::<usize>()).collect::<Result<_, _>>().map_err(|_| bad())?;
        if res.len() != 2 {
            return Err(bad());
        }
        Self::new(vec3(parts[0])?, vec3(parts[1])?, vec3(parts[2])?, res[0], res[1])
    }

    pub fn point(&self, i: usize, j: usize) -> Vec3 {
        let fu = if self.nu > 1 { i as f64 / (self.nu - 1) as f64 } else { 0.0 };
        let fv = if self.nv > 1 { j as f64 / (self.nv - 1) as f64 } else { 0.0 };
        self.origin + self.u_axis * fu + self.v_axis * fv
    }

    /// In-domain grid points as `(i, j, x)`, `i` fastest.
    pub fn domain_points(&self, medium: &MediumShape) -> Vec<(usize, usize, Vec3)> {
        let mut out = Vec::new();
        for j in 0..self.nv {
            for i in 0..self.nu {
                let x = self.point(i, j);
                if medium.contains(x) {
                    out.push((i, j, x));
                }
            }
        }
        out
    }
}

impl std::fmt::Display for EvalPlane {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let (o, u, v) = (self.origin, self.u_axis, self.v_axis);
        write!(f, "{},{},{};{},{},{};{},{},{};{},{}", o.x, o.y, o.z, u.x, u.y, u.z, v.x, v.y, v.z, self.nu, self.nv)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_points() {
        let p = EvalPlane::parse("-1,-1,0; 2,0,0; 0,2,0; 3,5").unwrap();
        assert_eq!(p.point(0, 0), Vec3::new(-1.0, -1.0, 0.0));
        assert_eq!(p.point(2, 4), Vec3::new(1.0, 1.0, 0.0));
        assert_eq!(p.point(1, 2), Vec3::new(0.0, 0.0, 0.0));
        assert_eq!(EvalPlane::parse(&p.to_string()).unwrap(), p);
    }

    #[test]
    fn rejects_bad_planes() {
        assert!(EvalPlane::parse("0,0,0;1,0,0;2,0,0;4,4").is_err());
        assert!(EvalPlane::parse("0,0,0;1,0,0;0,1,0;4").is_err());
        assert!(EvalPlane::parse("0,0;1,0,0;0,1,0;4,4").is_err());
        assert!(EvalPlane::parse("0,0,0;1,0,0;0,1,0;0,4").is_err());
    }

    #[test]
    fn skips_outside_points() {
        let p = EvalPlane::parse("-1,-1,0;2,0,0;0,2,0;5,5").unwrap();
        let ball = MediumShape::sphere(Vec3::ZERO, 1.0).unwrap();
        let pts = p.domain_points(&ball);
        // corners and edge midpoints sit on or outside the unit circle
        assert_eq!(pts.len(), 9);
        assert!(pts.iter().all(|&(_, _, x)| ball.contains(x)));
    }
}
