//! Lumped capacitance model `u(t) = exp(-B gamma t)` and time-scale ratios.

use crate::error::{Error, Result};

/// Dimensional data: volume, surface area, average volumetric heat capacity,
/// average heat transfer coefficient, far-field and initial temperature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DimensionalInputs {
    pub volume: f64,
    pub area: f64,
    pub rho_c: f64,
    pub h: f64,
    pub t_inf: f64,
    pub t_init: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LumpedModel {
    pub biot: f64,
    pub gamma: f64,
    pub tau_eq: f64,
    pub dimensional: Option<DimensionalInputs>,
}

impl LumpedModel {
    /// `B = 0` gives the constant model with infinite time constant.
    pub fn new(biot: f64, gamma: f64) -> Result<Self> {
        if !(biot >= 0.0 && biot.is_finite()) {
            return Err(Error::invalid(format!("Biot number must be nonnegative, got {biot}")));
        }
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::invalid(format!("gamma must be positive, got {gamma}")));
        }
        Ok(LumpedModel { biot, gamma, tau_eq: 1.0 / (biot * gamma), dimensional: None })
    }

    pub fn with_dimensional(mut self, d: DimensionalInputs) -> Result<Self> {
        for (name, v) in [("volume", d.volume), ("area", d.area), ("rho_c", d.rho_c), ("h", d.h)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if d.t_init == d.t_inf {
            return Err(Error::invalid("initial and far-field temperatures coincide"));
        }
        self.dimensional = Some(d);
        Ok(self)
    }

    /// Nondimensional temperature `exp(-B gamma t)`.
    pub fn evaluate(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::invalid(format!("time must be nonnegative, got {t}")));
        }
        Ok((-self.biot * self.gamma * t).exp())
    }

    pub fn evaluate_series(&self, ts: &[f64]) -> Result<Vec<f64>> {
        ts.iter().map(|&t| self.evaluate(t)).collect()
    }

    /// `(V / A) (rho c) / h` in seconds.
    pub fn tau_dimensional(&self) -> Option<f64> {
        self.dimensional.map(|d| d.volume / d.area * d.rho_c / d.h)
    }

    /// Temperature `T(t)` at dimensional time `t` (seconds).
    pub fn temperature(&self, t: f64) -> Result<f64> {
        let d = self.dimensional.ok_or_else(|| Error::invalid("no dimensional inputs"))?;
        if !(t >= 0.0) {
            return Err(Error::invalid(format!("time must be nonnegative, got {t}")));
        }
        let tau = self.tau_dimensional().unwrap_or(f64::INFINITY);
        Ok(d.t_inf + (d.t_init - d.t_inf) * (-t / tau).exp())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeScaleReport {
    pub tau_conv: f64,
    pub tau_eq: f64,
    pub ratio: f64,
    pub tau_diff: f64,
}

/// Convective `r1 / (r2 Re Pr)` versus equilibration `1 / (B gamma)`.
pub fn time_scales(r1: f64, r2: f64, re: f64, pr: f64, biot: f64, gamma: f64) -> Result<TimeScaleReport> {
    for (name, v) in [("r1", r1), ("r2", r2), ("Re", re), ("Pr", pr), ("gamma", gamma)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::invalid(format!("{name} must be positive, got {v}")));
        }
    }
    if !(biot >= 0.0) {
        return Err(Error::invalid(format!("Biot number must be nonnegative, got {biot}")));
    }
    let tau_conv = r1 / (r2 * re * pr);
    let tau_eq = 1.0 / (biot * gamma);
    Ok(TimeScaleReport { tau_conv, tau_eq, ratio: r2 / r1 * re * pr / (biot * gamma), tau_diff: 1.0 })
}
