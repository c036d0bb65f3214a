//! Learning the length-scale ratio `q` that maps a reference correlation onto
//! a new geometry family, plus a PCA spheroid fit for point clouds.

use std::collections::BTreeMap;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::correlations::{transform_correlation, Correlation};
use crate::error::{Error, Result};
use crate::linalg::dense;

pub const Q_MIN: f64 = 1e-4;
pub const Q_MAX: f64 = 1e4;
/// Golden-section tolerance in `ln q`.
pub const LOG_Q_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct NuSample {
    pub geometry_id: String,
    pub s: f64,
    pub theta_deg: f64,
    pub re: f64,
    pub nu: f64,
    pub pr: f64,
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be positive, got {v}")))
    }
}

/// Minimizer of `(Nu - corr(q Re, Pr) / q)^2` over `[Q_MIN, Q_MAX]`.
/// A coarse log scan brackets the minimum, golden section refines it.
pub fn solve_q_pointwise(corr: &Correlation, re: f64, nu: f64, pr: f64) -> Result<f64> {
    check_positive("Re", re)?;
    check_positive("Nu", nu)?;
    check_positive("Pr", pr)?;
    // |r| has the same minimizer as r^2 but a kink instead of a flat
    // bottom, so golden section resolves it to the full tolerance.
    let obj = |lq: f64| (nu - transform_correlation(corr, lq.exp(), re, pr).unwrap_or(f64::NAN)).abs();
    let (lo, hi) = (Q_MIN.ln(), Q_MAX.ln());
    let n = 400;
    let grid: Vec<f64> = (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect();
    let vals: Vec<f64> = grid.iter().map(|&x| obj(x)).collect();
    if vals.iter().any(|v| !v.is_finite()) {
        return Err(Error::Learning(format!("{} is not finite on the search range", corr.name())));
    }
    let imin = (0..=n).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap();
    if imin == 0 || imin == n {
        return Err(Error::Learning(format!(
            "no interior minimum for Re = {re}, Nu = {nu}, Pr = {pr}: best q = {:.3e} at the bracket end, residual {:.3e}",
            grid[imin].exp(),
            vals[imin]
        )));
    }
    let (mut a, mut b) = (grid[imin - 1], grid[imin + 1]);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (obj(c), obj(d));
    while b - a > LOG_Q_TOL {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = obj(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = obj(d);
        }
    }
    Ok((0.5 * (a + b)).exp())
}

/// Closed form for Ranz-Marshall: `Nu x^2 - b x - 2 = 0`, `x = sqrt(q)`,
/// `b = 0.6 sqrt(Re) Pr^(1/3)`.
pub fn solve_q_ranz_marshall(re: f64, nu: f64, pr: f64) -> Result<f64> {
    check_positive("Nu", nu)?;
    check_positive("Pr", pr)?;
    if !(re >= 0.0) {
        return Err(Error::invalid(format!("Re must be nonnegative, got {re}")));
    }
    let b = 0.6 * re.sqrt() * pr.cbrt();
    let x = (b + (b * b + 8.0 * nu).sqrt()) / (2.0 * nu);
    Ok(x * x)
}

/// Trapezoidal average of `q` against `ln Re`.
pub fn average_q_log(samples: &[(f64, f64)]) -> Result<f64> {
    if samples.len() < 2 {
        return Err(Error::invalid("need at least two (Re, q) samples"));
    }
    let mut v = samples.to_vec();
    for &(re, q) in &v {
        check_positive("Re", re)?;
        check_positive("q", q)?;
    }
    v.sort_by(|a, b| a.0.total_cmp(&b.0));
    if v.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(Error::invalid("duplicate Reynolds numbers"));
    }
    let mut s = 0.0;
    for w in v.windows(2) {
        s += 0.5 * (w[0].1 + w[1].1) * (w[1].0.ln() - w[0].0.ln());
    }
    Ok(s / (v[v.len() - 1].0.ln() - v[0].0.ln()))
}

/// Per-geometry `(id, s, theta, q)` from pointwise solves and log averaging.
pub fn learn_per_geometry(corr: &Correlation, samples: &[NuSample]) -> Result<Vec<(String, f64, f64, f64)>> {
    let mut groups: BTreeMap<&str, Vec<&NuSample>> = BTreeMap::new();
    for s in samples {
        groups.entry(&s.geometry_id).or_default().push(s);
    }
    let mut out = Vec::new();
    for (id, g) in groups {
        let (s, th) = (g[0].s, g[0].theta_deg);
        if g.iter().any(|x| x.s != s || x.theta_deg != th) {
            return Err(Error::invalid(format!("geometry '{id}' has inconsistent (s, theta)")));
        }
        let pts = g
            .iter()
            .map(|x| Ok((x.re, solve_q_pointwise(corr, x.re, x.nu, x.pr)?)))
            .collect::<Result<Vec<_>>>()?;
        let q = if pts.len() == 1 { pts[0].1 } else { average_q_log(&pts)? };
        out.push((id.to_string(), s, th, q));
    }
    Ok(out)
}

/// Reads `geometry_id,s,theta_deg,Re,Nu,Pr`.
pub fn parse_samples_csv(text: &str) -> Result<Vec<NuSample>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let l = line.trim();
        if l.is_empty() || l.starts_with('#') || (i == 0 && l.starts_with("geometry_id")) {
            continue;
        }
        let f: Vec<&str> = l.split(',').map(str::trim).collect();
        if f.len() != 6 {
            return Err(Error::Parse { line: i + 1, msg: "expected 6 columns".into() });
        }
        let num = |k: usize| {
            f[k].parse::<f64>().map_err(|_| Error::Parse { line: i + 1, msg: format!("bad number '{}'", f[k]) })
        };
        let s = NuSample { geometry_id: f[0].to_string(), s: num(1)?, theta_deg: num(2)?, re: num(3)?, nu: num(4)?, pr: num(5)? };
        if !(s.re > 0.0 && s.nu > 0.0 && s.pr > 0.0 && s.s > 0.0) {
            return Err(Error::Parse { line: i + 1, msg: "Re, Nu, Pr and s must be positive".into() });
        }
        out.push(s);
    }
    Ok(out)
}

/// Bilinear interpolant of `q` over `(log10 s, theta)` on a full grid.
#[derive(Debug, Clone, PartialEq)]
pub struct LengthScaleModel {
    pub log_s: Vec<f64>,
    pub theta: Vec<f64>,
    /// `q[i][j]` at `(log_s[i], theta[j])`.
    pub q: Vec<Vec<f64>>,
}

fn unique_sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * (1.0 + b.abs()));
    v
}

fn locate(grid: &[f64], x: f64) -> Option<usize> {
    grid.iter().position(|g| (g - x).abs() <= 1e-9 * (1.0 + g.abs()))
}

pub fn build_surrogate(points: &[(f64, f64, f64)]) -> Result<LengthScaleModel> {
    for &(s, _, q) in points {
        check_positive("s", s)?;
        check_positive("q", q)?;
    }
    let log_s = unique_sorted(points.iter().map(|p| p.0.log10()).collect());
    let theta = unique_sorted(points.iter().map(|p| p.1).collect());
    if log_s.len() < 2 || theta.len() < 2 {
        return Err(Error::invalid("surrogate needs at least two distinct values of s and theta"));
    }
    let mut q = vec![vec![f64::NAN; theta.len()]; log_s.len()];
    for &(s, th, v) in points {
        let (i, j) = (locate(&log_s, s.log10()).unwrap(), locate(&theta, th).unwrap());
        if !q[i][j].is_nan() {
            return Err(Error::invalid(format!("duplicate surrogate node s = {s}, theta = {th}")));
        }
        q[i][j] = v;
    }
    let missing: Vec<String> = (0..log_s.len())
        .flat_map(|i| (0..theta.len()).map(move |j| (i, j)))
        .filter(|&(i, j)| q[i][j].is_nan())
        .map(|(i, j)| format!("(s = {}, theta = {})", crate::fmt_sig(10f64.powf(log_s[i])), theta[j]))
        .collect();
    if !missing.is_empty() {
        return Err(Error::Learning(format!("incomplete grid, missing {}", missing.join(", "))));
    }
    Ok(LengthScaleModel { log_s, theta, q })
}

fn cell(grid: &[f64], x: f64) -> Option<(usize, f64)> {
    let n = grid.len();
    let eps = 1e-12 * (1.0 + x.abs());
    if x < grid[0] - eps || x > grid[n - 1] + eps {
        return None;
    }
    let i = grid.partition_point(|&g| g <= x).clamp(1, n - 1) - 1;
    Some((i, ((x - grid[i]) / (grid[i + 1] - grid[i])).clamp(0.0, 1.0)))
}

impl LengthScaleModel {
    /// `q(s, theta)`; outside the grid is an error.
    pub fn eval(&self, s: f64, theta_deg: f64) -> Result<f64> {
        check_positive("s", s)?;
        let out = || Error::invalid(format!("(s = {s}, theta = {theta_deg}) lies outside the surrogate grid"));
        let (i, u) = cell(&self.log_s, s.log10()).ok_or_else(out)?;
        let (j, v) = cell(&self.theta, theta_deg).ok_or_else(out)?;
        let q = &self.q;
        Ok((1.0 - u) * (1.0 - v) * q[i][j] + u * (1.0 - v) * q[i + 1][j] + (1.0 - u) * v * q[i][j + 1] + u * v * q[i + 1][j + 1])
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("s,theta_deg,q\n");
        for (i, ls) in self.log_s.iter().enumerate() {
            for (j, th) in self.theta.iter().enumerate() {
                s += &format!("{},{},{}\n", crate::fmt_sig(10f64.powf(*ls)), crate::fmt_sig(*th), crate::fmt_sig(self.q[i][j]));
            }
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut pts = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let l = line.trim();
            if l.is_empty() || l.starts_with('#') || (i == 0 && l.starts_with('s')) {
                continue;
            }
            let f: Vec<f64> = l
                .split(',')
                .map(|x| x.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::Parse { line: i + 1, msg: "bad number".into() })?;
            if f.len() != 3 {
                return Err(Error::Parse { line: i + 1, msg: "expected s,theta_deg,q".into() });
            }
            pts.push((f[0], f[1], f[2]));
        }
        build_surrogate(&pts)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpheroidFit {
    /// Symmetry-axis half extent over equatorial half extent.
    pub s: f64,
    /// Angle between the symmetry axis and x, in the x-y plane, in [0, 90].
    pub theta_deg: f64,
    /// Half extents: symmetry axis, then the two equatorial directions.
    /// The symmetry axis is the covariance eigenvector.
    pub axes: [f64; 3],
    pub symmetry_axis: [f64; 3],
    /// `s` within 5% of 1; `theta` carries no information.
    pub isotropic: bool,
}

/// PCA spheroid fit. The symmetry axis is the eigenvector whose eigenvalue
/// is separated from the other two; scales are half extents of the cloud.
pub fn fit_spheroid(points: &[[f64; 3]]) -> Result<SpheroidFit> {
    if points.len() < 10 {
        return Err(Error::invalid("need at least 10 points"));
    }
    let n = points.len() as f64;
    let mut c = [0.0; 3];
    for p in points {
        for k in 0..3 {
            c[k] += p[k] / n;
        }
    }
    let pts: Vec<[f64; 3]> = points.iter().map(|p| [p[0] - c[0], p[1] - c[1], p[2] - c[2]]).collect();
    let mut cov = vec![0.0; 9];
    for p in &pts {
        for i in 0..3 {
            for j in 0..3 {
                cov[i * 3 + j] += p[i] * p[j] / n;
            }
        }
    }
    let (vals, vecs) = dense::symmetric_eigen(&cov, 3);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]));
    let l: Vec<f64> = order.iter().map(|&i| vals[i]).collect();
    if !(l[2] > 1e-12 * l[0]) {
        return Err(Error::invalid("degenerate covariance (points are collinear or coplanar)"));
    }
    let col = |i: usize| [vecs[i], vecs[3 + i], vecs[6 + i]];
    // Prolate when the top gap dominates, oblate otherwise.
    let (sym, e1, e2) = if l[0] - l[1] >= l[1] - l[2] {
        (col(order[0]), col(order[1]), col(order[2]))
    } else {
        (col(order[2]), col(order[0]), col(order[1]))
    };
    let half = |d: [f64; 3]| {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for p in &pts {
            let x = p[0] * d[0] + p[1] * d[1] + p[2] * d[2];
            lo = lo.min(x);
            hi = hi.max(x);
        }
        0.5 * (hi - lo)
    };
    // Equatorial directions: rotate in their plane to the smallest
    // bounding rectangle, then polish the whole frame to the smallest
    // bounding box. A spheroid's minimal box is the aligned one, and a
    // slightly tilted PCA axis would leak the long extent sideways.
    let rot = |u: [f64; 3], v: [f64; 3], t: f64| {
        let (s, c) = t.sin_cos();
        ([c * u[0] + s * v[0], c * u[1] + s * v[1], c * u[2] + s * v[2]], [
            -s * u[0] + c * v[0],
            -s * u[1] + c * v[1],
            -s * u[2] + c * v[2],
        ])
    };
    let vol = |f: &[[f64; 3]; 3]| half(f[0]) * half(f[1]) * half(f[2]);
    let (mut e1, mut e2) = (e1, e2);
    let mut best = f64::INFINITY;
    let steps = 180;
    let mut t_best = 0.0;
    for k in 0..steps {
        let t = std::f64::consts::FRAC_PI_2 * k as f64 / steps as f64;
        let (d1, d2) = rot(e1, e2, t);
        let a = half(d1) * half(d2);
        if a < best {
            best = a;
            t_best = t;
        }
    }
    (e1, e2) = rot(e1, e2, t_best);
    let mut frame = [sym, e1, e2];
    let mut v = vol(&frame);
    let mut step = 1f64.to_radians();
    while step > 1e-5f64.to_radians() {
        let mut improved = false;
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            for sgn in [1.0, -1.0] {
                let mut f = frame;
                (f[i], f[j]) = rot(frame[i], frame[j], sgn * step);
                let w = vol(&f);
                if w < v {
                    v = w;
                    frame = f;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    let axes = [half(frame[0]), half(frame[1]), half(frame[2])];
    // The covariance axis averages over every point; the box frame only
    // sees the extremes, so the angle comes from the former.
    let proj = sym[0].hypot(sym[1]);
    let theta_deg = if proj < 1e-12 { 90.0 } else { sym[1].abs().atan2(sym[0].abs()).to_degrees() };
    let s = axes[0] / (0.5 * (axes[1] + axes[2]));
    Ok(SpheroidFit { s, theta_deg, axes, symmetry_axis: sym, isotropic: (s - 1.0).abs() < 0.05 })
}

/// Uniform-area samples of a spheroid with symmetry axis in the x-y plane
/// at `theta_deg` from x, centered at the origin.
pub fn sample_spheroid_surface(polar: f64, equatorial: f64, theta_deg: f64, n: usize, seed: u64) -> Result<Vec<[f64; 3]>> {
    check_positive("polar semi-axis", polar)?;
    check_positive("equatorial semi-axis", equatorial)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (a, c) = (equatorial, polar);
    let gmax = a.max(c);
    let (st, ct) = theta_deg.to_radians().sin_cos();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        // Sphere point, then accept with the spheroid/sphere area ratio.
        let u: f64 = 2.0 * rng.random::<f64>() - 1.0;
        let phi: f64 = 2.0 * std::f64::consts::PI * rng.random::<f64>();
        let r = (1.0 - u * u).sqrt();
        let g = (a * a * u * u + c * c * r * r).sqrt();
        if rng.random::<f64>() * gmax > g {
            continue;
        }
        // Symmetry axis along x before rotation.
        let (x, y, z) = (c * u, a * r * phi.cos(), a * r * phi.sin());
        out.push([ct * x - st * y, st * x + ct * y, z]);
    }
    Ok(out)
}

/// Uniform-area samples of an axis-aligned box centered at the origin.
pub fn sample_cuboid_surface(lx: f64, ly: f64, lz: f64, n: usize, seed: u64) -> Result<Vec<[f64; 3]>> {
    for (k, v) in [("lx", lx), ("ly", ly), ("lz", lz)] {
        check_positive(k, v)?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let l = [lx, ly, lz];
    let areas = [ly * lz, lx * lz, lx * ly];
    let total: f64 = areas.iter().sum();
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let mut pick = rng.random::<f64>() * total;
        let mut ax = 0;
        while ax < 2 && pick > areas[ax] {
            pick -= areas[ax];
            ax += 1;
        }
        let mut p = [0.0; 3];
        for k in 0..3 {
            p[k] = (rng.random::<f64>() - 0.5) * l[k];
        }
        p[ax] = if rng.random::<f64>() < 0.5 { -0.5 * l[ax] } else { 0.5 * l[ax] };
        out.push(p);
    }
    Ok(out)
}
