//! Forced-convection Nusselt correlations, length-scale functions, the
//! length-scale change of a correlation, and bundled material ratios.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Default transitional Reynolds number of the turbulent flat plate.
pub const DEFAULT_RE_TR: f64 = 5e5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Correlation {
    FlatPlateLaminar,
    FlatPlateTurbulent { re_tr: f64 },
    ChurchillBernstein,
    RanzMarshall,
}

/// Inclusive ranges unless noted in `strict_upper`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Validity {
    pub re_min: f64,
    pub re_max: f64,
    pub pr_min: f64,
    pub pr_max: f64,
    /// `(Re, Pr)` upper bounds are strict.
    pub strict_upper: (bool, bool),
    pub pr_min_strict: bool,
}

impl Validity {
    pub fn contains(&self, re: f64, pr: f64) -> bool {
        let re_ok = re >= self.re_min && if self.strict_upper.0 { re < self.re_max } else { re <= self.re_max };
        let pr_lo = if self.pr_min_strict { pr > self.pr_min } else { pr >= self.pr_min };
        let pr_hi = if self.strict_upper.1 { pr < self.pr_max } else { pr <= self.pr_max };
        re_ok && pr_lo && pr_hi
    }
}

impl Correlation {
    pub const NAMES: [&'static str; 4] =
        ["flat_plate_laminar", "flat_plate_turbulent", "churchill_bernstein", "ranz_marshall"];

    pub fn name(&self) -> &'static str {
        match self {
            Correlation::FlatPlateLaminar => "flat_plate_laminar",
            Correlation::FlatPlateTurbulent { .. } => "flat_plate_turbulent",
            Correlation::ChurchillBernstein => "churchill_bernstein",
            Correlation::RanzMarshall => "ranz_marshall",
        }
    }

    /// Name of the length the correlation is written in.
    pub fn reference_length(&self) -> &'static str {
        match self {
            Correlation::FlatPlateLaminar | Correlation::FlatPlateTurbulent { .. } => "plate length",
            Correlation::ChurchillBernstein | Correlation::RanzMarshall => "diameter",
        }
    }

    pub fn validity(&self) -> Validity {
        let inf = f64::INFINITY;
        match *self {
            Correlation::FlatPlateLaminar => Validity {
                re_min: 0.0,
                re_max: 1e5,
                pr_min: 0.6,
                pr_max: inf,
                strict_upper: (false, false),
                pr_min_strict: false,
            },
            Correlation::FlatPlateTurbulent { re_tr } => Validity {
                re_min: re_tr,
                re_max: inf,
                pr_min: 0.6,
                pr_max: inf,
                strict_upper: (false, false),
                pr_min_strict: false,
            },
            Correlation::ChurchillBernstein => Validity {
                re_min: 0.0,
                re_max: 1e7,
                pr_min: 0.7,
                pr_max: 500.0,
                strict_upper: (true, true),
                pr_min_strict: true,
            },
            // Reasonable up to Re ~ 1e4; originally fitted for Re <= 200.
            Correlation::RanzMarshall => Validity {
                re_min: 0.0,
                re_max: 1e4,
                pr_min: 0.0,
                pr_max: inf,
                strict_upper: (false, false),
                pr_min_strict: true,
            },
        }
    }

    /// Formula value without range checks.
    pub fn raw(&self, re: f64, pr: f64) -> f64 {
        let p3 = pr.cbrt();
        match *self {
            Correlation::FlatPlateLaminar => 0.664 * re.sqrt() * p3,
            Correlation::FlatPlateTurbulent { re_tr } => {
                0.664 * re_tr.sqrt() * p3 + 0.037 * (re.powf(0.8) - re_tr.powf(0.8)) * pr.powf(0.6)
            }
            Correlation::ChurchillBernstein => {
                0.3 + 0.62 * re.sqrt() * p3 / (1.0 + (0.4 / pr).powf(2.0 / 3.0)).powf(0.25)
                    * (1.0 + (re / 282000.0).powf(5.0 / 8.0)).powf(0.8)
            }
            Correlation::RanzMarshall => 2.0 + 0.6 * re.sqrt() * p3,
        }
    }

    /// `(Nu, in_range)`; `strict` turns out-of-range into an error.
    pub fn eval(&self, re: f64, pr: f64, strict: bool) -> Result<(f64, bool)> {
        check_re_pr(re, pr)?;
        let ok = self.validity().contains(re, pr);
        if strict && !ok {
            let v = self.validity();
            return Err(Error::invalid(format!(
                "{} outside validity range (Re = {re}, Pr = {pr}; Re in [{}, {}], Pr in [{}, {}])",
                self.name(),
                v.re_min,
                v.re_max,
                v.pr_min,
                v.pr_max
            )));
        }
        Ok((self.raw(re, pr), ok))
    }
}

fn check_re_pr(re: f64, pr: f64) -> Result<()> {
    if !(re >= 0.0 && re.is_finite()) {
        return Err(Error::invalid(format!("Reynolds number must be nonnegative, got {re}")));
    }
    if !(pr > 0.0 && pr.is_finite()) {
        return Err(Error::invalid(format!("Prandtl number must be positive, got {pr}")));
    }
    Ok(())
}

impl FromStr for Correlation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "flat_plate_laminar" => Ok(Correlation::FlatPlateLaminar),
            "flat_plate_turbulent" => Ok(Correlation::FlatPlateTurbulent { re_tr: DEFAULT_RE_TR }),
            "churchill_bernstein" => Ok(Correlation::ChurchillBernstein),
            "ranz_marshall" => Ok(Correlation::RanzMarshall),
            other => Err(Error::invalid(format!(
                "unknown correlation '{other}' (expected one of {})",
                Correlation::NAMES.join(", ")
            ))),
        }
    }
}

impl fmt::Display for Correlation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// `Re[q D] = q Re[D]`.
pub fn transform_reynolds(q: f64, re: f64) -> f64 {
    q * re
}

/// `Nu[D] = Nu[q D] / q`.
pub fn transform_nusselt(q: f64, nu_in_qd: f64) -> f64 {
    nu_in_qd / q
}

/// Correlation written in `D1 = q D2`, evaluated with `D2`-based numbers.
pub fn transform_correlation(corr: &Correlation, q: f64, re_d2: f64, pr: f64) -> Result<f64> {
    if !(q > 0.0 && q.is_finite()) {
        return Err(Error::invalid(format!("length-scale ratio must be positive, got {q}")));
    }
    check_re_pr(re_d2, pr)?;
    Ok(transform_nusselt(q, corr.raw(transform_reynolds(q, re_d2), pr)))
}

pub fn biot_from_nusselt(r2: f64, nu: f64) -> Result<f64> {
    if !(r2 > 0.0) {
        return Err(Error::invalid(format!("conductivity ratio must be positive, got {r2}")));
    }
    if !(nu >= 0.0) {
        return Err(Error::invalid(format!("Nusselt number must be nonnegative, got {nu}")));
    }
    Ok(r2 * nu)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LengthScaleKind {
    Diameter,
    EquivalentSphere,
    SqrtArea,
    VolumeOverSurface,
}

impl LengthScaleKind {
    pub const ALL: [LengthScaleKind; 4] = [
        LengthScaleKind::Diameter,
        LengthScaleKind::EquivalentSphere,
        LengthScaleKind::SqrtArea,
        LengthScaleKind::VolumeOverSurface,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LengthScaleKind::Diameter => "diameter",
            LengthScaleKind::EquivalentSphere => "equivalent_sphere",
            LengthScaleKind::SqrtArea => "sqrt_area",
            LengthScaleKind::VolumeOverSurface => "volume_over_surface",
        }
    }
}

impl FromStr for LengthScaleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LengthScaleKind::ALL
            .into_iter()
            .find(|k| k.name() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| Error::invalid(format!("unknown length scale '{s}'")))
    }
}

/// Body description. Spheroid: `polar` semi-axis along the symmetry axis,
/// `equatorial` semi-axis perpendicular to it.
#[derive(Debug, Clone, PartialEq)]
pub enum ShapeDescriptor {
    Sphere { diameter: f64 },
    Spheroid { polar: f64, equatorial: f64 },
    Cuboid { lx: f64, ly: f64, lz: f64 },
    Cylinder { diameter: f64, length: f64 },
    PointCloud(Vec<[f64; 3]>),
}

impl ShapeDescriptor {
    fn check(&self) -> Result<()> {
        let dims: Vec<f64> = match self {
            ShapeDescriptor::Sphere { diameter } => vec![*diameter],
            ShapeDescriptor::Spheroid { polar, equatorial } => vec![*polar, *equatorial],
            ShapeDescriptor::Cuboid { lx, ly, lz } => vec![*lx, *ly, *lz],
            ShapeDescriptor::Cylinder { diameter, length } => vec![*diameter, *length],
            ShapeDescriptor::PointCloud(p) => {
                if p.len() < 2 {
                    return Err(Error::invalid("point cloud needs at least two points"));
                }
                return Ok(());
            }
        };
        if dims.iter().all(|d| *d > 0.0 && d.is_finite()) {
            Ok(())
        } else {
            Err(Error::invalid("shape dimensions must be positive"))
        }
    }

    pub fn volume(&self) -> Option<f64> {
        match *self {
            ShapeDescriptor::Sphere { diameter } => Some(PI * diameter.powi(3) / 6.0),
            ShapeDescriptor::Spheroid { polar, equatorial } => Some(4.0 / 3.0 * PI * polar * equatorial * equatorial),
            ShapeDescriptor::Cuboid { lx, ly, lz } => Some(lx * ly * lz),
            ShapeDescriptor::Cylinder { diameter, length } => Some(PI * diameter * diameter / 4.0 * length),
            ShapeDescriptor::PointCloud(_) => None,
        }
    }

    pub fn surface_area(&self) -> Option<f64> {
        match *self {
            ShapeDescriptor::Sphere { diameter } => Some(PI * diameter * diameter),
            ShapeDescriptor::Spheroid { polar: c, equatorial: a } => Some(spheroid_area(a, c)),
            ShapeDescriptor::Cuboid { lx, ly, lz } => Some(2.0 * (lx * ly + ly * lz + lx * lz)),
            ShapeDescriptor::Cylinder { diameter, length } => {
                Some(PI * diameter * length + PI * diameter * diameter / 2.0)
            }
            ShapeDescriptor::PointCloud(_) => None,
        }
    }

    /// Largest distance between two points of the body.
    pub fn diameter(&self) -> f64 {
        match self {
            ShapeDescriptor::Sphere { diameter } => *diameter,
            ShapeDescriptor::Spheroid { polar, equatorial } => 2.0 * polar.max(*equatorial),
            ShapeDescriptor::Cuboid { lx, ly, lz } => (lx * lx + ly * ly + lz * lz).sqrt(),
            ShapeDescriptor::Cylinder { diameter, length } => diameter.hypot(*length),
            ShapeDescriptor::PointCloud(p) => {
                let mut d2: f64 = 0.0;
                for i in 0..p.len() {
                    for j in i + 1..p.len() {
                        let s: f64 = (0..3).map(|k| (p[i][k] - p[j][k]).powi(2)).sum();
                        d2 = d2.max(s);
                    }
                }
                d2.sqrt()
            }
        }
    }
}

/// Surface area of a spheroid with equatorial semi-axis `a`, polar `c`.
fn spheroid_area(a: f64, c: f64) -> f64 {
    if (a - c).abs() <= 1e-12 * a.max(c) {
        return 4.0 * PI * a * a;
    }
    if c < a {
        let e = (1.0 - c * c / (a * a)).sqrt();
        2.0 * PI * a * a * (1.0 + (1.0 - e * e) / e * e.atanh())
    } else {
        let e = (1.0 - a * a / (c * c)).sqrt();
        2.0 * PI * a * a * (1.0 + c / (a * e) * e.asin())
    }
}

pub fn length_scale(shape: &ShapeDescriptor, kind: LengthScaleKind) -> Result<f64> {
    shape.check()?;
    let need = |v: Option<f64>, what: &str| {
        v.ok_or_else(|| Error::invalid(format!("{} needs the body {what}", kind.name())))
    };
    Ok(match kind {
        LengthScaleKind::Diameter => shape.diameter(),
        LengthScaleKind::EquivalentSphere => (6.0 * need(shape.volume(), "volume")? / PI).cbrt(),
        LengthScaleKind::SqrtArea => need(shape.surface_area(), "surface area")?.sqrt(),
        LengthScaleKind::VolumeOverSurface => need(shape.volume(), "volume")? / need(shape.surface_area(), "surface area")?,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Material {
    pub name: String,
    pub is_fluid: bool,
    pub rho: f64,
    pub cp: f64,
    pub k: f64,
    pub nu: Option<f64>,
    pub pr: Option<f64>,
}

/// Fluid-by-solid table of a property ratio.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioTable {
    pub solids: Vec<String>,
    pub rows: Vec<(String, Vec<f64>)>,
}

impl RatioTable {
    pub fn get(&self, fluid: &str, solid: &str) -> Option<f64> {
        let j = self.solids.iter().position(|s| s.eq_ignore_ascii_case(solid))?;
        self.rows.iter().find(|(f, _)| f.eq_ignore_ascii_case(fluid)).map(|(_, v)| v[j])
    }
}

pub const MATERIALS_CSV: &str = include_str!("../data/materials.csv");
pub const R1_CSV: &str = include_str!("../data/r1_table.csv");
pub const R2_CSV: &str = include_str!("../data/r2_table.csv");

fn parse_opt(s: &str, line: usize) -> Result<Option<f64>> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(None);
    }
    s.parse().map(Some).map_err(|_| Error::Parse { line, msg: format!("bad number '{s}'") })
}

pub fn parse_materials(text: &str) -> Result<Vec<Material>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 7 {
            return Err(Error::Parse { line: i + 1, msg: "expected 7 columns".into() });
        }
        let req = |s: &str| parse_opt(s, i + 1)?.ok_or(Error::Parse { line: i + 1, msg: "missing value".into() });
        out.push(Material {
            name: f[0].to_string(),
            is_fluid: f[1].trim() == "fluid",
            rho: req(f[2])?,
            cp: req(f[3])?,
            k: req(f[4])?,
            nu: parse_opt(f[5], i + 1)?,
            pr: parse_opt(f[6], i + 1)?,
        });
    }
    Ok(out)
}

pub fn parse_ratio_table(text: &str) -> Result<RatioTable> {
    let mut lines = text.lines().enumerate();
    let (_, head) = lines.next().ok_or(Error::Parse { line: 1, msg: "empty table".into() })?;
    let solids: Vec<String> = head.split(',').skip(1).map(|s| s.trim().to_string()).collect();
    let mut rows = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != solids.len() + 1 {
            return Err(Error::Parse { line: i + 1, msg: format!("expected {} columns", solids.len() + 1) });
        }
        let vals = f[1..]
            .iter()
            .map(|s| parse_opt(s, i + 1)?.ok_or(Error::Parse { line: i + 1, msg: "missing value".into() }))
            .collect::<Result<Vec<_>>>()?;
        rows.push((f[0].trim().to_string(), vals));
    }
    Ok(RatioTable { solids, rows })
}

pub fn bundled_materials() -> Vec<Material> {
    parse_materials(MATERIALS_CSV).expect("bundled materials table")
}

pub fn bundled_r1() -> RatioTable {
    parse_ratio_table(R1_CSV).expect("bundled r1 table")
}

pub fn bundled_r2() -> RatioTable {
    parse_ratio_table(R2_CSV).expect("bundled r2 table")
}

/// Warning when either ratio is not small; the solid then no longer sees
/// the fluid as a fixed heat transfer coefficient.
pub fn ratio_warning(r1: f64, r2: f64) -> Option<String> {
    if r1 >= 0.1 || r2 >= 0.1 {
        Some(format!(
            "r1 = {r1}, r2 = {r2}: ratios are not small; isothermal-wall Nusselt data may misrepresent the coupled problem"
        ))
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formula_values() {
        let rm = Correlation::RanzMarshall;
        assert_eq!(rm.eval(0.0, 0.71, true).unwrap().0, 2.0);
        let v = rm.eval(100.0, 0.71, true).unwrap().0;
        assert!((v - (2.0 + 6.0 * 0.71f64.cbrt())).abs() < 1e-12);
        assert!((v - 7.3526).abs() < 1e-4);
        let fp = Correlation::FlatPlateLaminar.eval(1e4, 0.71, true).unwrap().0;
        assert!((fp - 59.24).abs() < 0.01);
        assert!(Correlation::ChurchillBernstein.eval(100.0, 0.5, true).is_err());
        let (_, ok) = Correlation::ChurchillBernstein.eval(100.0, 0.5, false).unwrap();
        assert!(!ok);
        assert!(rm.eval(-1.0, 0.7, false).is_err());
        assert!(rm.eval(1.0, 0.0, false).is_err());
    }

    #[test]
    fn turbulent_is_continuous_at_transition() {
        let t = Correlation::FlatPlateTurbulent { re_tr: DEFAULT_RE_TR };
        let l = Correlation::FlatPlateLaminar;
        assert!((t.raw(DEFAULT_RE_TR, 0.71) - l.raw(DEFAULT_RE_TR, 0.71)).abs() < 1e-9);
    }

    #[test]
    fn sphere_length_scales() {
        let s = ShapeDescriptor::Sphere { diameter: 2.0 };
        assert!((length_scale(&s, LengthScaleKind::VolumeOverSurface).unwrap() - 2.0 / 6.0).abs() < 1e-14);
        assert!((length_scale(&s, LengthScaleKind::SqrtArea).unwrap() - 2.0 * PI.sqrt()).abs() < 1e-14);
        assert!((length_scale(&s, LengthScaleKind::EquivalentSphere).unwrap() - 2.0).abs() < 1e-14);
        let sp = ShapeDescriptor::Spheroid { polar: 1.0, equatorial: 1.0 };
        assert!((sp.surface_area().unwrap() - 4.0 * PI).abs() < 1e-12);
        // Near-spherical spheroids approach the sphere from both sides.
        for c in [0.999999, 1.000001] {
            let a = ShapeDescriptor::Spheroid { polar: c, equatorial: 1.0 }.surface_area().unwrap();
            assert!((a - 4.0 * PI).abs() < 1e-4);
        }
        let pc = ShapeDescriptor::PointCloud(vec![[0.0; 3], [1.0, 0.0, 0.0]]);
        assert!(length_scale(&pc, LengthScaleKind::SqrtArea).is_err());
    }

    #[test]
    fn biot_examples() {
        assert!((biot_from_nusselt(0.01085, 6.27).unwrap() - 0.0680).abs() < 1e-4);
        assert!((biot_from_nusselt(0.01085, 6.25).unwrap() - 0.0678).abs() < 1e-4);
        assert_eq!(biot_from_nusselt(0.01085, 0.0).unwrap(), 0.0);
        assert!(biot_from_nusselt(0.01085, -1.0).is_err());
    }

    #[test]
    fn bundled_tables() {
        let m = bundled_materials();
        assert_eq!(m.len(), 8);
        let r1 = bundled_r1();
        let r2 = bundled_r2();
        assert_eq!(r1.get("Air", "Aluminum"), Some(0.000483));
        assert_eq!(r2.get("lead", "silica aerogel"), Some(2000.0));
        // r1 = (rho c)_f / (rho c)_s, r2 = k_f / k_s
        let by = |n: &str| m.iter().find(|x| x.name.starts_with(n)).unwrap();
        let (air, al) = (by("Air"), by("Aluminum"));
        assert!((air.rho * air.cp / (al.rho * al.cp) - 0.000483).abs() < 1e-6);
        assert!((air.k / al.k - 0.000111).abs() < 1e-6);
        assert!(ratio_warning(0.000483, 0.000111).is_none());
        assert!(ratio_warning(2.78, 2.07).is_some());
        assert!("nusselt".parse::<Correlation>().is_err());
    }
}
