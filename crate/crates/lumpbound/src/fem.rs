//! Coefficient fields, their normalization, and P1 assembly of the stiffness,
//! boundary-mass and volume-mass forms.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::linalg::CsrMatrix;
use crate::mesh::Mesh2D;

/// Volume coefficients per triangle and the boundary variation function as
/// side values at both ends of every boundary edge (so jumps are exact).
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSet {
    pub kappa: Vec<f64>,
    pub sigma: Vec<f64>,
    pub eta: Vec<[f64; 2]>,
}

/// Factors that the raw fields were divided by.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizationScales {
    pub kappa: f64,
    pub sigma: f64,
    pub eta: f64,
}

/// Relative offset for sampling a boundary function just inside each edge, so
/// that each edge sees its own side of a discontinuity.
const SIDE_OFFSET: f64 = 1e-7;

impl FieldSet {
    pub fn uniform(mesh: &Mesh2D) -> Self {
        FieldSet {
            kappa: vec![1.0; mesh.num_triangles()],
            sigma: vec![1.0; mesh.num_triangles()],
            eta: vec![[1.0, 1.0]; mesh.boundary_edges().len()],
        }
    }

    /// Per-region `(kappa, sigma)`; every region tag of the mesh must appear.
    pub fn from_regions(mesh: &Mesh2D, regions: &BTreeMap<u32, (f64, f64)>) -> Result<Self> {
        let mut f = FieldSet::uniform(mesh);
        for (t, tag) in mesh.regions().iter().enumerate() {
            let &(k, s) = regions
                .get(tag)
                .ok_or_else(|| Error::invalid(format!("no coefficients for region {tag}")))?;
            f.kappa[t] = k;
            f.sigma[t] = s;
        }
        Ok(f)
    }

    /// One-sided limits of `f` at both ends of every boundary edge, by linear
    /// extrapolation from two points inside the edge (exact for linear `f`).
    pub fn with_eta_fn(mut self, mesh: &Mesh2D, f: impl Fn([f64; 2]) -> f64) -> Self {
        let v = mesh.vertices();
        let side = |p: [f64; 2], d: [f64; 2]| {
            let at = |s: f64| f([p[0] + s * SIDE_OFFSET * d[0], p[1] + s * SIDE_OFFSET * d[1]]);
            2.0 * at(1.0) - at(2.0)
        };
        self.eta = mesh
            .boundary_edges()
            .iter()
            .map(|&[a, b]| {
                let (pa, pb) = (v[a], v[b]);
                let d = [pb[0] - pa[0], pb[1] - pa[1]];
                [side(pa, d), side(pb, [-d[0], -d[1]])]
            })
            .collect();
        self
    }

    pub fn with_eta_by_tag(mut self, mesh: &Mesh2D, values: &BTreeMap<u32, f64>) -> Result<Self> {
        self.eta = mesh
            .boundary_tags()
            .iter()
            .map(|tag| {
                values
                    .get(tag)
                    .map(|&v| [v, v])
                    .ok_or_else(|| Error::invalid(format!("no eta for boundary tag {tag}")))
            })
            .collect::<Result<_>>()?;
        Ok(self)
    }

    /// Continuous nodal values listed in ascending boundary-vertex order.
    pub fn with_eta_nodal(mut self, mesh: &Mesh2D, values: &[f64]) -> Result<Self> {
        let bv = mesh.boundary_vertices();
        if values.len() != bv.len() {
            return Err(Error::invalid(format!(
                "expected {} boundary values, got {}",
                bv.len(),
                values.len()
            )));
        }
        let mut at = vec![f64::NAN; mesh.num_vertices()];
        for (&v, &x) in bv.iter().zip(values) {
            at[v] = x;
        }
        self.eta = mesh.boundary_edges().iter().map(|&[a, b]| [at[a], at[b]]).collect();
        Ok(self)
    }

    pub fn check_sizes(&self, mesh: &Mesh2D) -> Result<()> {
        if self.kappa.len() != mesh.num_triangles()
            || self.sigma.len() != mesh.num_triangles()
            || self.eta.len() != mesh.boundary_edges().len()
        {
            return Err(Error::invalid("field sizes do not match the mesh"));
        }
        Ok(())
    }

    /// Parses `region <tag> kappa <v> sigma <v>`, `boundary <tag> eta <v>`
    /// and `eta_nodal <values...>` lines; `#` starts a comment.
    pub fn from_text(mesh: &Mesh2D, text: &str) -> Result<Self> {
        let mut regions = BTreeMap::new();
        let mut tags = BTreeMap::new();
        let mut nodal: Option<Vec<f64>> = None;
        let num = |line: usize, s: Option<&str>| -> Result<f64> {
            s.and_then(|w| w.parse::<f64>().ok())
                .ok_or(Error::Parse { line, msg: "expected a number".into() })
        };
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let l = raw.split('#').next().unwrap_or("").trim();
            if l.is_empty() {
                continue;
            }
            let mut w = l.split_whitespace();
            match w.next() {
                Some("region") => {
                    let tag: u32 = w
                        .next()
                        .and_then(|t| t.parse().ok())
                        .ok_or(Error::Parse { line, msg: "bad region tag".into() })?;
                    let (mut k, mut s) = (None, None);
                    while let Some(key) = w.next() {
                        match key {
                            "kappa" => k = Some(num(line, w.next())?),
                            "sigma" => s = Some(num(line, w.next())?),
                            other => return Err(Error::Parse { line, msg: format!("unknown key '{other}'") }),
                        }
                    }
                    regions.insert(tag, (k.unwrap_or(1.0), s.unwrap_or(1.0)));
                }
                Some("boundary") => {
                    let tag: u32 = w
                        .next()
                        .and_then(|t| t.parse().ok())
                        .ok_or(Error::Parse { line, msg: "bad boundary tag".into() })?;
                    if w.next() != Some("eta") {
                        return Err(Error::Parse { line, msg: "expected 'eta'".into() });
                    }
                    tags.insert(tag, num(line, w.next())?);
                }
                Some("eta_nodal") => {
                    let v = nodal.get_or_insert_with(Vec::new);
                    for x in w {
                        v.push(num(line, Some(x))?);
                    }
                }
                Some(other) => {
                    // Continuation lines of an eta_nodal block hold bare numbers.
                    match (&mut nodal, other.parse::<f64>()) {
                        (Some(v), Ok(x)) => {
                            v.push(x);
                            for y in w {
                                v.push(num(line, Some(y))?);
                            }
                        }
                        _ => return Err(Error::Parse { line, msg: format!("unknown directive '{other}'") }),
                    }
                }
                None => {}
            }
        }
        let mut f = if regions.is_empty() {
            FieldSet::uniform(mesh)
        } else {
            FieldSet::from_regions(mesh, &regions)?
        };
        if let Some(v) = nodal {
            f = f.with_eta_nodal(mesh, &v)?;
        } else if !tags.is_empty() {
            f = f.with_eta_by_tag(mesh, &tags)?;
        }
        Ok(f)
    }
}

/// Perimeter integral of the piecewise-linear boundary field.
pub fn boundary_integral(mesh: &Mesh2D, eta: &[[f64; 2]]) -> f64 {
    eta.iter()
        .enumerate()
        .map(|(e, v)| 0.5 * mesh.edge_length(e) * (v[0] + v[1]))
        .sum()
}

/// Scales so that min kappa = 1, area mean of sigma = 1 and perimeter mean of
/// eta = 1.
pub fn normalize_fields(mesh: &Mesh2D, raw: &FieldSet) -> Result<(FieldSet, NormalizationScales)> {
    raw.check_sizes(mesh)?;
    if raw.kappa.iter().chain(&raw.sigma).any(|&x| !(x > 0.0) || !x.is_finite()) {
        return Err(Error::invalid("kappa and sigma must be strictly positive"));
    }
    if raw.eta.iter().flatten().any(|&x| !(x >= 0.0) || !x.is_finite()) {
        return Err(Error::invalid("eta must be nonnegative"));
    }
    let stats = mesh.geometry_stats()?;
    let k0 = raw.kappa.iter().cloned().fold(f64::INFINITY, f64::min);
    let s0 = (0..mesh.num_triangles()).map(|t| raw.sigma[t] * mesh.triangle_area(t)).sum::<f64>() / stats.area;
    let e0 = boundary_integral(mesh, &raw.eta) / stats.perimeter;
    if !(e0 > 0.0) {
        return Err(Error::invalid("eta has zero boundary mean"));
    }
    let f = FieldSet {
        kappa: raw.kappa.iter().map(|k| k / k0).collect(),
        sigma: raw.sigma.iter().map(|s| s / s0).collect(),
        eta: raw.eta.iter().map(|v| [v[0] / e0, v[1] / e0]).collect(),
    };
    Ok((f, NormalizationScales { kappa: k0, sigma: s0, eta: e0 }))
}

/// Gradients of the three barycentric basis functions on triangle `t`.
fn basis_gradients(mesh: &Mesh2D, t: usize) -> ([[f64; 2]; 3], f64) {
    let v = mesh.vertices();
    let [a, b, c] = mesh.triangles()[t];
    let p = [v[a], v[b], v[c]];
    let area = mesh.triangle_area(t);
    let mut g = [[0.0; 2]; 3];
    for i in 0..3 {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        g[i] = [
            (p[j][1] - p[k][1]) / (2.0 * area),
            (p[k][0] - p[j][0]) / (2.0 * area),
        ];
    }
    (g, area)
}

/// Element loop emitting all 9 pairs per triangle, optionally with values.
fn volume_triplets(mesh: &Mesh2D, mut local: impl FnMut(usize, usize, usize) -> f64) -> Vec<(usize, usize, f64)> {
    let mut trip = Vec::with_capacity(9 * mesh.num_triangles());
    for (t, tri) in mesh.triangles().iter().enumerate() {
        for i in 0..3 {
            for j in 0..3 {
                trip.push((tri[i], tri[j], local(t, i, j)));
            }
        }
    }
    trip
}

pub fn stiffness(mesh: &Mesh2D, kappa: &[f64]) -> CsrMatrix {
    let grads: Vec<_> = (0..mesh.num_triangles()).map(|t| basis_gradients(mesh, t)).collect();
    let trip = volume_triplets(mesh, |t, i, j| {
        let (g, area) = &grads[t];
        kappa[t] * area * (g[i][0] * g[j][0] + g[i][1] * g[j][1])
    });
    CsrMatrix::from_triplets(mesh.num_vertices(), &trip)
}

/// Consistent P1 mass with piecewise-constant weight.
pub fn mass(mesh: &Mesh2D, sigma: &[f64]) -> CsrMatrix {
    let trip = volume_triplets(mesh, |t, i, j| {
        let w = sigma[t] * mesh.triangle_area(t) / 12.0;
        if i == j {
            2.0 * w
        } else {
            w
        }
    });
    CsrMatrix::from_triplets(mesh.num_vertices(), &trip)
}

/// Boundary mass with a weight linear along each edge, integrated exactly.
/// The volume pattern is carried with explicit zeros so that all forms share
/// one sparsity pattern.
pub fn boundary_mass(mesh: &Mesh2D, eta: &[[f64; 2]]) -> CsrMatrix {
    let mut trip = volume_triplets(mesh, |_, _, _| 0.0);
    for (e, &[a, b]) in mesh.boundary_edges().iter().enumerate() {
        let l = mesh.edge_length(e) / 12.0;
        let [ea, eb] = eta[e];
        trip.push((a, a, l * (3.0 * ea + eb)));
        trip.push((b, b, l * (ea + 3.0 * eb)));
        trip.push((a, b, l * (ea + eb)));
        trip.push((b, a, l * (ea + eb)));
    }
    CsrMatrix::from_triplets(mesh.num_vertices(), &trip)
}

/// Boundary load vector `int eta phi_i`.
pub fn boundary_load(mesh: &Mesh2D, eta: &[[f64; 2]]) -> Vec<f64> {
    let mut b = vec![0.0; mesh.num_vertices()];
    for (e, &[a, c]) in mesh.boundary_edges().iter().enumerate() {
        let l = mesh.edge_length(e) / 6.0;
        let [ea, ec] = eta[e];
        b[a] += l * (2.0 * ea + ec);
        b[c] += l * (ea + 2.0 * ec);
    }
    b
}

/// Assembled forms plus the mean-constraint weights `c = M 1`.
#[derive(Debug, Clone)]
pub struct Forms {
    pub a0: CsrMatrix,
    pub a1: CsrMatrix,
    pub m: CsrMatrix,
    pub c: Vec<f64>,
}

pub fn assemble_forms(mesh: &Mesh2D, fields: &FieldSet) -> Result<Forms> {
    fields.check_sizes(mesh)?;
    let a0 = stiffness(mesh, &fields.kappa);
    let a1 = boundary_mass(mesh, &fields.eta);
    let m = mass(mesh, &fields.sigma);
    let c = m.row_sums();
    Ok(Forms { a0, a1, m, c })
}

/// Area-weighted `mean (sigma - 1)^2`.
pub fn var_sigma(mesh: &Mesh2D, sigma: &[f64]) -> f64 {
    let mut area = 0.0;
    let mut acc = 0.0;
    for (t, s) in sigma.iter().enumerate() {
        let a = mesh.triangle_area(t);
        area += a;
        acc += a * (s - 1.0) * (s - 1.0);
    }
    acc / area
}

/// Perimeter-weighted `mean (eta - 1)^2`, exact for edgewise-linear eta.
pub fn var_eta(mesh: &Mesh2D, eta: &[[f64; 2]]) -> f64 {
    let mut per = 0.0;
    let mut acc = 0.0;
    for (e, v) in eta.iter().enumerate() {
        let l = mesh.edge_length(e);
        let (p, q) = (v[0] - 1.0, v[1] - 1.0);
        per += l;
        acc += l * (p * p + p * q + q * q) / 3.0;
    }
    acc / per
}

/// `int |f - g|` over the boundary for edgewise-linear fields, splitting
/// edges where the difference changes sign.
pub fn boundary_l1_distance(mesh: &Mesh2D, f: &[[f64; 2]], g: &[[f64; 2]]) -> f64 {
    f.iter()
        .zip(g)
        .enumerate()
        .map(|(e, (a, b))| {
            let (p, q) = (a[0] - b[0], a[1] - b[1]);
            let l = mesh.edge_length(e);
            if p * q >= 0.0 {
                0.5 * l * (p.abs() + q.abs())
            } else {
                0.5 * l * (p * p + q * q) / (p.abs() + q.abs())
            }
        })
        .sum()
}
