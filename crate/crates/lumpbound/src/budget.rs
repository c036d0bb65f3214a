//! The sensitivity coefficient phi, its computable upper bound, the error
//! budget terms and related asymptotic checks.

use std::f64::consts::{E, PI};

use crate::eigen::{rhe_eigenpairs, EigenOptions, StabilityConstants};
use crate::error::{Error, Result};
use crate::fem::{assemble_forms, boundary_load, var_eta, var_sigma, FieldSet};
use crate::linalg::{dot, ConstrainedSolver, SolverKind};
use crate::mesh::Mesh2D;

#[derive(Debug, Clone)]
pub struct PhiResult {
    pub phi: f64,
    /// Nodal sensitivity field, sigma-mean-free.
    pub sensitivity: Vec<f64>,
    /// `int sigma psi`, zero up to roundoff.
    pub mean: f64,
}

/// Solves `a0(psi, v) = |Omega|^(-1/2) (gamma int sigma v - int eta v)` on the
/// sigma-mean-free space and returns `phi = a0(psi, psi)`.
pub fn solve_phi(mesh: &Mesh2D, fields: &FieldSet, solver: SolverKind) -> Result<PhiResult> {
    let forms = assemble_forms(mesh, fields)?;
    let stats = mesh.geometry_stats()?;
    let load = boundary_load(mesh, &fields.eta);
    let scale = stats.area.powf(-0.5);
    let rhs: Vec<f64> = forms
        .c
        .iter()
        .zip(&load)
        .map(|(c, b)| scale * (stats.gamma * c - b))
        .collect();
    let s = ConstrainedSolver::new(&forms.a0, &forms.c, solver)?;
    let (psi, _) = s.solve(&rhs)?;
    Ok(PhiResult {
        phi: forms.a0.quad_form(&psi),
        mean: dot(&forms.c, &psi),
        sensitivity: psi,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiUpperBound {
    pub phi111: f64,
    pub delta_sigma: f64,
    pub delta_eta: f64,
    pub var_sigma: f64,
    pub var_eta: f64,
    pub bound: f64,
}

/// Bound from externally supplied variances.
pub fn phi_upper_bound_from_variances(
    phi111: f64,
    stability: &StabilityConstants,
    var_sigma: f64,
    var_eta: f64,
) -> Result<PhiUpperBound> {
    if !(var_sigma >= 0.0) || !(var_eta >= 0.0) {
        return Err(Error::invalid("variances must be nonnegative"));
    }
    if !(phi111 >= 0.0) {
        return Err(Error::invalid("phi111 must be nonnegative"));
    }
    let delta_sigma = stability.gamma_sq_over_mu * var_sigma;
    let delta_eta = stability.gamma_over_lambda * var_eta;
    let root = phi111.sqrt() + delta_sigma.sqrt() + delta_eta.sqrt();
    Ok(PhiUpperBound {
        phi111,
        delta_sigma,
        delta_eta,
        var_sigma,
        var_eta,
        bound: root * root,
    })
}

pub fn phi_upper_bound(
    mesh: &Mesh2D,
    fields: &FieldSet,
    stability: &StabilityConstants,
    phi111: f64,
) -> Result<PhiUpperBound> {
    fields.check_sizes(mesh)?;
    phi_upper_bound_from_variances(
        phi111,
        stability,
        var_sigma(mesh, &fields.sigma),
        var_eta(mesh, &fields.eta),
    )
}

/// Variance of the normalized heat capacity of a multi-phase body.
pub fn composite_sigma_variance(fractions: &[f64], rho_c: &[f64]) -> Result<f64> {
    if fractions.len() != rho_c.len() || fractions.is_empty() {
        return Err(Error::invalid("fractions and rho_c must be nonempty and of equal length"));
    }
    if fractions.iter().any(|&v| !(v > 0.0)) || rho_c.iter().any(|&r| !(r > 0.0)) {
        return Err(Error::invalid("fractions and rho_c must be positive"));
    }
    if (fractions.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
        return Err(Error::invalid("fractions must sum to 1"));
    }
    let mean: f64 = fractions.iter().zip(rho_c).map(|(v, r)| v * r).sum();
    Ok(fractions
        .iter()
        .zip(rho_c)
        .map(|(v, r)| v * (r / mean - 1.0).powi(2))
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhiKind {
    Computed,
    UpperBound,
    Supplied,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BudgetInputs {
    pub biot: f64,
    pub biot_est: f64,
    pub gamma: f64,
    pub phi_used: f64,
    pub phi_kind: PhiKind,
    /// `(|Omega|, ||eta - eta_bar||_{L1(0,tf; L1(boundary))})`
    pub temporal: Option<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorBudget {
    pub temporal: Option<f64>,
    pub lumping: f64,
    pub biot: f64,
    pub total: f64,
    pub b_used: f64,
    pub gamma: f64,
    pub phi_used: f64,
    pub phi_kind: PhiKind,
    /// Set when B/gamma exceeds 0.1, where the neglected O(B^2) terms may matter.
    pub outside_asymptotic_regime: bool,
}

pub fn temporal_bound(biot: f64, area: f64, l1l1: f64) -> f64 {
    (2.0 * biot / area * l1l1).sqrt()
}

pub fn lumping_term(phi: f64, biot: f64, gamma: f64) -> f64 {
    phi * biot / (gamma * E)
}

pub fn biot_term(biot: f64, biot_est: f64) -> Result<f64> {
    if biot == biot_est {
        return Ok(0.0);
    }
    if !(biot_est > 0.0) {
        return Err(Error::invalid("estimated Biot number must be positive"));
    }
    Ok((biot - biot_est).abs() / (biot_est * E))
}

pub fn assemble_budget(inp: &BudgetInputs) -> Result<ErrorBudget> {
    if !(inp.biot >= 0.0) || !(inp.biot_est >= 0.0) {
        return Err(Error::invalid("Biot numbers must be nonnegative"));
    }
    if !(inp.gamma > 0.0) || !(inp.phi_used > 0.0) {
        return Err(Error::invalid("gamma and phi must be positive"));
    }
    let lumping = lumping_term(inp.phi_used, inp.biot, inp.gamma);
    let biot = biot_term(inp.biot, inp.biot_est)?;
    let temporal = match inp.temporal {
        Some((area, norm)) => {
            if !(area > 0.0) || !(norm >= 0.0) {
                return Err(Error::invalid("temporal inputs must be positive area and nonnegative norm"));
            }
            Some(temporal_bound(inp.biot, area, norm))
        }
        None => None,
    };
    Ok(ErrorBudget {
        temporal,
        lumping,
        biot,
        total: lumping + biot + temporal.unwrap_or(0.0),
        b_used: inp.biot,
        gamma: inp.gamma,
        phi_used: inp.phi_used,
        phi_kind: inp.phi_kind,
        outside_asymptotic_regime: inp.biot / inp.gamma > 0.1,
    })
}

#[derive(Debug, Clone)]
pub struct ExpansionFit {
    pub gamma_fit: f64,
    pub phi_fit: f64,
    pub samples: Vec<(f64, f64)>,
}

/// Fits `lambda_1(B) = a B + b B^2` (no intercept) and returns `(a, -b)`.
pub fn lambda1_expansion_check(
    mesh: &Mesh2D,
    fields: &FieldSet,
    samples: &[f64],
    opts: &EigenOptions,
) -> Result<ExpansionFit> {
    if samples.len() < 3 {
        return Err(Error::invalid("need at least 3 Biot samples"));
    }
    if samples.iter().any(|&b| !(b > 0.0)) || samples.windows(2).any(|w| !(w[0] > w[1])) {
        return Err(Error::invalid("Biot samples must be positive and strictly decreasing"));
    }
    let gamma = mesh.geometry_stats()?.gamma;
    if samples[0] > 0.1 * gamma {
        return Err(Error::invalid("largest Biot sample exceeds 0.1 gamma"));
    }
    let forms = assemble_forms(mesh, fields)?;
    let mut pts = Vec::with_capacity(samples.len());
    for &b in samples {
        let l = rhe_eigenpairs(&forms, b, 1, opts)?[0].value;
        pts.push((b, l));
    }
    let (a, b) = fit_linear_quadratic(&pts);
    Ok(ExpansionFit { gamma_fit: a, phi_fit: -b, samples: pts })
}

/// Least squares for `y = a x + b x^2`.
pub fn fit_linear_quadratic(pts: &[(f64, f64)]) -> (f64, f64) {
    let s = pts.iter().fold(0.0f64, |m, p| m.max(p.0.abs()));
    let (mut s2, mut s3, mut s4, mut y1, mut y2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(x, y) in pts {
        let u = x / s;
        s2 += u * u;
        s3 += u * u * u;
        s4 += u * u * u * u;
        y1 += y * u;
        y2 += y * u * u;
    }
    let det = s2 * s4 - s3 * s3;
    let a = (y1 * s4 - y2 * s3) / det;
    let b = (s2 * y2 - s3 * y1) / det;
    (a / s, b / (s * s))
}

/// Interface temperature and Nusselt number of two semi-infinite media in
/// contact, valid for very short times.
pub fn short_time_asymptotics(r1: f64, r2: f64, t: f64) -> Result<(f64, f64)> {
    if !(r1 > 0.0) || !(r2 > 0.0) || !(t > 0.0) {
        return Err(Error::invalid("r1, r2 and t must be positive"));
    }
    let u = 1.0 / (1.0 + (r1 * r2).sqrt());
    let nu = (r1 / r2).sqrt() / (PI * t).sqrt();
    Ok((u, nu))
}

/// Upper bound on `|exp(-z(1-eps)) - exp(-z)|` uniform in `z >= 0`.
pub fn exp_gap_bound(eps: f64) -> f64 {
    eps / E + eps * eps
}
