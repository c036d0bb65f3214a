//! Nusselt time series and boundary profiles from external runs: vortex
//! shedding period, sliding-window steady-state detection, and normalized
//! variation profiles.

use crate::error::{Error, Result};

pub const DEFAULT_STROUHAL: f64 = 0.2;

/// `f = St (r2 / r1) Re Pr` in solid diffusive time units, and `1 / f`.
pub fn vortex_frequency(st: f64, r1: f64, r2: f64, re: f64, pr: f64) -> Result<(f64, f64)> {
    for (name, v) in [("St", st), ("r1", r1), ("r2", r2), ("Re", re), ("Pr", pr)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::invalid(format!("{name} must be positive, got {v}")));
        }
    }
    let f = st * (r2 / r1) * re * pr;
    Ok((f, 1.0 / f))
}

#[derive(Debug, Clone, PartialEq)]
pub struct NusseltSeries {
    pub times: Vec<f64>,
    pub nu: Vec<f64>,
    /// Number of duplicated time stamps dropped on ingestion.
    pub duplicates_dropped: usize,
}

impl NusseltSeries {
    /// Sorts nothing: times must be nondecreasing. Repeated stamps keep the
    /// last value.
    pub fn new(times: Vec<f64>, nu: Vec<f64>) -> Result<Self> {
        if times.len() != nu.len() {
            return Err(Error::invalid("times and values differ in length"));
        }
        let mut t_out: Vec<f64> = Vec::with_capacity(times.len());
        let mut n_out: Vec<f64> = Vec::with_capacity(times.len());
        let mut dup = 0;
        for (t, v) in times.into_iter().zip(nu) {
            if !t.is_finite() || !v.is_finite() {
                return Err(Error::invalid(format!("non-finite sample at t = {t}")));
            }
            match t_out.last() {
                Some(&last) if t < last => {
                    return Err(Error::invalid(format!("times decrease at t = {t}")));
                }
                Some(&last) if t == last => {
                    *n_out.last_mut().unwrap() = v;
                    dup += 1;
                }
                _ => {
                    t_out.push(t);
                    n_out.push(v);
                }
            }
        }
        if t_out.len() < 2 {
            return Err(Error::invalid("series needs at least two distinct times"));
        }
        Ok(NusseltSeries { times: t_out, nu: n_out, duplicates_dropped: dup })
    }

    /// Reads `t,nu` with an optional header.
    pub fn from_csv(text: &str) -> Result<Self> {
        let (mut t, mut v) = (Vec::new(), Vec::new());
        for (i, line) in text.lines().enumerate() {
            let l = line.trim();
            if l.is_empty() || l.starts_with('#') || (i == 0 && l.starts_with('t')) {
                continue;
            }
            let f: Vec<&str> = l.split(',').map(str::trim).collect();
            if f.len() != 2 {
                return Err(Error::Parse { line: i + 1, msg: "expected t,nu".into() });
            }
            let p = |s: &str| s.parse::<f64>().map_err(|_| Error::Parse { line: i + 1, msg: format!("bad number '{s}'") });
            t.push(p(f[0])?);
            v.push(p(f[1])?);
        }
        NusseltSeries::new(t, v)
    }

    /// Trapezoidal mean of the piecewise-linear interpolant over `[a, b]`.
    pub fn window_mean(&self, a: f64, b: f64) -> Result<f64> {
        let (t, y) = (&self.times, &self.nu);
        if !(a < b) || a < t[0] || b > t[t.len() - 1] {
            return Err(Error::invalid(format!("window [{a}, {b}] outside the series")));
        }
        let at = |x: f64| {
            let i = t.partition_point(|&s| s <= x).clamp(1, t.len() - 1) - 1;
            let w = (x - t[i]) / (t[i + 1] - t[i]);
            y[i] + w * (y[i + 1] - y[i])
        };
        let mut s = 0.0;
        let mut x0 = a;
        let mut y0 = at(a);
        for i in t.partition_point(|&s| s <= a)..t.len() {
            if t[i] >= b {
                break;
            }
            s += 0.5 * (y0 + y[i]) * (t[i] - x0);
            x0 = t[i];
            y0 = y[i];
        }
        s += 0.5 * (y0 + at(b)) * (b - x0);
        Ok(s / (b - a))
    }
}

/// Sliding-window schedule, all lengths in units of the shedding period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyStateConfig {
    pub initial_width: f64,
    pub step: f64,
    /// Width growth per step, applied from `initial_width` on.
    pub growth_per_step: f64,
    /// Criterion applied only for window ends beyond this time.
    pub activation: f64,
    pub tolerance: f64,
    /// Number of successive window averages compared.
    pub history: usize,
}

impl Default for SteadyStateConfig {
    fn default() -> Self {
        SteadyStateConfig { initial_width: 5.0, step: 0.5, growth_per_step: 0.05, activation: 7.5, tolerance: 1e-3, history: 5 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowRecord {
    pub t_end: f64,
    pub width: f64,
    pub mean: f64,
    /// Mean of the relative deltas among the last `history` window means.
    pub mean_rel_change: Option<f64>,
    pub active: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteadyStateReport {
    pub t_vs: f64,
    pub windows: Vec<WindowRecord>,
    pub converged: bool,
    /// End of the converged window, or of the last window evaluated.
    pub t_f: Option<f64>,
    pub nu_stavg: Option<f64>,
}

pub fn steady_state_detect(series: &NusseltSeries, t_vs: f64, cfg: &SteadyStateConfig) -> Result<SteadyStateReport> {
    if !(t_vs > 0.0 && t_vs.is_finite()) {
        return Err(Error::invalid(format!("shedding period must be positive, got {t_vs}")));
    }
    if cfg.history < 2 || !(cfg.step > 0.0) || !(cfg.initial_width > 0.0) || !(cfg.tolerance > 0.0) {
        return Err(Error::invalid("invalid steady-state schedule"));
    }
    let t0 = series.times[0];
    let t_last = *series.times.last().unwrap();
    let mut rep = SteadyStateReport { t_vs, windows: Vec::new(), converged: false, t_f: None, nu_stavg: None };
    for k in 0usize.. {
        let t_end = t0 + (cfg.initial_width + cfg.step * k as f64) * t_vs;
        if t_end > t_last * (1.0 + 1e-12) {
            break;
        }
        let t_end = t_end.min(t_last);
        let width = (cfg.initial_width + cfg.growth_per_step * k as f64) * t_vs;
        let mean = series.window_mean(t_end - width, t_end)?;
        let active = t_end - t0 > cfg.activation * t_vs;
        let n = rep.windows.len();
        let mean_rel_change = if n + 1 >= cfg.history {
            let means: Vec<f64> = rep.windows[n + 1 - cfg.history..].iter().map(|w| w.mean).chain([mean]).collect();
            let d: f64 = means.windows(2).map(|w| ((w[1] - w[0]) / w[0]).abs()).sum();
            Some(d / (cfg.history - 1) as f64)
        } else {
            None
        };
        rep.windows.push(WindowRecord { t_end, width, mean, mean_rel_change, active });
        rep.t_f = Some(t_end);
        if active && mean_rel_change.is_some_and(|c| c < cfg.tolerance) {
            rep.converged = true;
            rep.nu_stavg = Some(mean);
            break;
        }
    }
    Ok(rep)
}

/// Normalized boundary variation profile.
#[derive(Debug, Clone, PartialEq)]
pub struct EtaProfile {
    pub coord: Vec<f64>,
    pub eta: Vec<f64>,
    /// Closed boundary: the last sample connects to the first one period on.
    pub period: Option<f64>,
    /// Mean of the raw samples the profile was divided by.
    pub raw_mean: f64,
    pub variance: f64,
}

fn trapezoid(coord: &[f64], f: &[f64], period: Option<f64>) -> (f64, f64) {
    let mut s = 0.0;
    for i in 0..coord.len() - 1 {
        s += 0.5 * (f[i] + f[i + 1]) * (coord[i + 1] - coord[i]);
    }
    let mut len = coord[coord.len() - 1] - coord[0];
    if let Some(p) = period {
        let gap = coord[0] + p - coord[coord.len() - 1];
        s += 0.5 * (f[f.len() - 1] + f[0]) * gap;
        len = p;
    }
    (s, len)
}

/// Mean-one normalization and variance `mean (eta - 1)^2`, both with the
/// trapezoidal rule on the piecewise-linear profile.
pub fn eta_profile_stats(coord: &[f64], eta: &[f64], period: Option<f64>) -> Result<EtaProfile> {
    if coord.len() != eta.len() || coord.len() < 2 {
        return Err(Error::invalid("need at least two (coordinate, eta) samples"));
    }
    if coord.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("coordinates must be strictly increasing"));
    }
    if eta.iter().any(|&e| !(e >= 0.0 && e.is_finite())) {
        return Err(Error::invalid("eta samples must be nonnegative"));
    }
    if let Some(p) = period {
        if !(coord[0] + p > coord[coord.len() - 1]) {
            return Err(Error::invalid("period shorter than the sampled range"));
        }
    }
    let (s, len) = trapezoid(coord, eta, period);
    let mean = s / len;
    if !(mean > 0.0) {
        return Err(Error::invalid("profile has zero mean"));
    }
    let norm: Vec<f64> = eta.iter().map(|e| e / mean).collect();
    // Exact integral of the squared linear interpolant minus the mean.
    let mut q = 0.0;
    let mut seg = |a: f64, b: f64, h: f64| q += h * ((a - 1.0).powi(2) + (a - 1.0) * (b - 1.0) + (b - 1.0).powi(2)) / 3.0;
    for i in 0..coord.len() - 1 {
        seg(norm[i], norm[i + 1], coord[i + 1] - coord[i]);
    }
    if let Some(p) = period {
        seg(norm[norm.len() - 1], norm[0], coord[0] + p - coord[coord.len() - 1]);
    }
    Ok(EtaProfile { coord: coord.to_vec(), eta: norm, period, raw_mean: mean, variance: q / len })
}

/// Reads `coord,eta` rows; a first line `periodic=true period=<p>` closes
/// the boundary (`periodic=false` or no flag leaves it open).
pub fn parse_profile_csv(text: &str) -> Result<(Vec<f64>, Vec<f64>, Option<f64>)> {
    let (mut c, mut e) = (Vec::new(), Vec::new());
    let mut period = None;
    for (i, line) in text.lines().enumerate() {
        let l = line.trim().trim_start_matches('#').trim();
        if l.is_empty() {
            continue;
        }
        if l.starts_with("periodic") {
            let mut periodic = false;
            for tok in l.split([' ', ',']).filter(|t| !t.is_empty()) {
                match tok.split_once('=') {
                    Some(("periodic", v)) => periodic = v.trim() == "true",
                    Some(("period", v)) => {
                        period = Some(v.trim().parse::<f64>().map_err(|_| Error::Parse { line: i + 1, msg: "bad period".into() })?)
                    }
                    _ => return Err(Error::Parse { line: i + 1, msg: format!("unknown flag '{tok}'") }),
                }
            }
            if periodic && period.is_none() {
                return Err(Error::Parse { line: i + 1, msg: "periodic profile needs period=<value>".into() });
            }
            if !periodic {
                period = None;
            }
            continue;
        }
        if l.starts_with("coord") {
            continue;
        }
        let f: Vec<&str> = l.split(',').map(str::trim).collect();
        if f.len() != 2 {
            return Err(Error::Parse { line: i + 1, msg: "expected coord,eta".into() });
        }
        let p = |s: &str| s.parse::<f64>().map_err(|_| Error::Parse { line: i + 1, msg: format!("bad number '{s}'") });
        c.push(p(f[0])?);
        e.push(p(f[1])?);
    }
    Ok((c, e, period))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frequency_example() {
        let (f, t) = vortex_frequency(0.2, 1.0, 0.8220, 143.0, 0.71).unwrap();
        assert!((f - 16.69).abs() < 0.01);
        assert!((f * t - 1.0).abs() < 1e-15);
        assert!(vortex_frequency(0.2, 0.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn duplicates_keep_last() {
        let s = NusseltSeries::new(vec![0.0, 1.0, 1.0, 2.0], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(s.nu, vec![1.0, 3.0, 4.0]);
        assert_eq!(s.duplicates_dropped, 1);
        assert!(NusseltSeries::new(vec![0.0, 2.0, 1.0], vec![1.0; 3]).is_err());
    }

    #[test]
    fn window_mean_of_linear() {
        let t: Vec<f64> = (0..=10).map(|i| i as f64 * 0.37).collect();
        let s = NusseltSeries::new(t.clone(), t.iter().map(|x| 2.0 * x + 1.0).collect()).unwrap();
        let m = s.window_mean(0.5, 2.9).unwrap();
        assert!((m - (2.0 * 1.7 + 1.0)).abs() < 1e-12);
        assert!(s.window_mean(-1.0, 1.0).is_err());
    }

    #[test]
    fn constant_series_converges_first_admissible() {
        let t: Vec<f64> = (0..=2000).map(|i| i as f64 * 0.01).collect();
        let s = NusseltSeries::new(t, vec![6.27; 2001]).unwrap();
        let r = steady_state_detect(&s, 1.0, &SteadyStateConfig::default()).unwrap();
        assert!(r.converged);
        assert!((r.t_f.unwrap() - 8.0).abs() < 1e-12);
        assert!((r.nu_stavg.unwrap() - 6.27).abs() < 1e-12);
    }

    #[test]
    fn profile_stats() {
        let c: Vec<f64> = (0..8).map(|i| i as f64).collect();
        let p = eta_profile_stats(&c, &[3.0; 8], Some(8.0)).unwrap();
        assert_eq!(p.variance, 0.0);
        assert!((p.eta[0] - 1.0).abs() < 1e-15);
        let again = eta_profile_stats(&p.coord, &p.eta, p.period).unwrap();
        assert!((again.variance - p.variance).abs() < 1e-15);
        assert!(eta_profile_stats(&c, &[0.0; 8], None).is_err());
        let (c, e, per) = parse_profile_csv("periodic=true period=6.5\ncoord,eta\n0,1\n2,2\n4,3\n").unwrap();
        assert_eq!((c.len(), e[2], per), (3, 3.0, Some(6.5)));
        assert!(parse_profile_csv("periodic=true\n0,1\n").is_err());
    }
}
