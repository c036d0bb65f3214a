//! Standard boundary variation functions used for the geometry studies.
//! Coordinates are centered at the centroid and scaled by the diameter.

use std::f64::consts::PI;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::fem::{normalize_fields, FieldSet};
use crate::mesh::Mesh2D;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EtaKind {
    Constant,
    Linear,
    Sinusoidal,
    /// `1 + sin(10 pi x) sin(5 pi y)`; `Sinusoidal` omits the factors of pi.
    SinusoidalPi,
    Step,
}

impl EtaKind {
    pub const ALL: [EtaKind; 4] = [EtaKind::Constant, EtaKind::Linear, EtaKind::Sinusoidal, EtaKind::Step];

    pub fn name(self) -> &'static str {
        match self {
            EtaKind::Constant => "constant",
            EtaKind::Linear => "linear",
            EtaKind::Sinusoidal => "sinusoidal",
            EtaKind::SinusoidalPi => "sinusoidal_pi",
            EtaKind::Step => "step",
        }
    }

    /// Unnormalized profile in scaled coordinates.
    pub fn eval(self, x: f64, y: f64) -> f64 {
        match self {
            EtaKind::Constant => 1.0,
            EtaKind::Linear => 1.0 + x + y,
            EtaKind::Sinusoidal => 1.0 + (10.0 * x).sin() * (5.0 * y).sin(),
            EtaKind::SinusoidalPi => 1.0 + (10.0 * PI * x).sin() * (5.0 * PI * y).sin(),
            EtaKind::Step => {
                if y < 0.0 {
                    0.0
                } else {
                    2.0
                }
            }
        }
    }
}

impl FromStr for EtaKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "constant" => Ok(EtaKind::Constant),
            "linear" => Ok(EtaKind::Linear),
            "sinusoidal" | "sin" => Ok(EtaKind::Sinusoidal),
            "sinusoidal_pi" => Ok(EtaKind::SinusoidalPi),
            "step" => Ok(EtaKind::Step),
            other => Err(Error::invalid(format!("unknown eta profile '{other}'"))),
        }
    }
}

/// Applies `kind` on top of the volume coefficients of `base` and normalizes.
pub fn with_profile(mesh: &Mesh2D, base: &FieldSet, kind: EtaKind) -> Result<FieldSet> {
    let s = mesh.geometry_stats()?;
    let raw = base.clone().with_eta_fn(mesh, |p| {
        kind.eval((p[0] - s.centroid[0]) / s.diameter, (p[1] - s.centroid[1]) / s.diameter)
    });
    Ok(normalize_fields(mesh, &raw)?.0)
}

/// Homogeneous volume coefficients with the given boundary profile.
pub fn profile_fields(mesh: &Mesh2D, kind: EtaKind) -> Result<FieldSet> {
    with_profile(mesh, &FieldSet::uniform(mesh), kind)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::var_eta;
    use crate::mesh::{generate_canonical, Shape};

    #[test]
    fn step_and_linear_variances() {
        // Jump vertices sit exactly on y = 0 for the disk and the square.
        let disk = generate_canonical(Shape::Disk, 6).unwrap();
        let f = profile_fields(&disk, EtaKind::Step).unwrap();
        assert!((var_eta(&disk, &f.eta) - 1.0).abs() < 1e-9);
        let sq = generate_canonical(Shape::Square, 3).unwrap();
        let f = profile_fields(&sq, EtaKind::Linear).unwrap();
        assert!((var_eta(&sq, &f.eta) - 1.0 / 6.0).abs() < 1e-12);
        let f = profile_fields(&sq, EtaKind::Constant).unwrap();
        assert_eq!(var_eta(&sq, &f.eta), 0.0);
    }

    #[test]
    fn names_round_trip() {
        for k in EtaKind::ALL.into_iter().chain([EtaKind::SinusoidalPi]) {
            assert_eq!(k.name().parse::<EtaKind>().unwrap(), k);
        }
        assert!("wavy".parse::<EtaKind>().is_err());
    }
}
