//! Transient Robin heat equation `M u' + (A0 + B A1(t)) u = 0`, `u(0) = 1`.
//! BDF2 on a uniform grid with one backward-Euler startup step.

use crate::eigen::EigenPair;
use crate::error::{Error, Result};
use crate::fem::{assemble_forms, boundary_l1_distance, boundary_mass, mass, FieldSet, Forms};
use crate::linalg::{dot, CsrMatrix, SpdFactor};
use crate::mesh::Mesh2D;

/// Mass matrix used in the time derivative. Row-sum lumping keeps the
/// discrete maximum principle; both give the same `c = M 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MassKind {
    Consistent,
    #[default]
    Lumped,
}

#[derive(Debug, Clone)]
pub struct RheOptions {
    pub steps: usize,
    /// Snapshots kept at this many equispaced step indices (plus t = 0).
    pub max_snapshots: usize,
    pub mass: MassKind,
}

impl Default for RheOptions {
    fn default() -> Self {
        RheOptions { steps: 2000, max_snapshots: 200, mass: MassKind::Lumped }
    }
}

/// Time dependence of the Robin coefficient on top of `fields.eta`.
pub enum TimeEta<'a> {
    /// `eta(t, x) = g(t) * fields.eta(x)`; only a scalar multiplies `A1`.
    Separable(&'a dyn Fn(f64) -> f64),
    /// Full per-edge side values at time `t`, reassembled every step.
    Tabulated(&'a dyn Fn(f64) -> Vec<[f64; 2]>),
}

#[derive(Debug, Clone)]
pub struct TransientSolution {
    pub times: Vec<f64>,
    pub u_avg: Vec<f64>,
    pub snapshot_times: Vec<f64>,
    pub snapshots: Vec<Vec<f64>>,
    /// Extremes of the nodal values over all steps.
    pub u_min: f64,
    pub u_max: f64,
}

impl TransientSolution {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,u_avg\n");
        for (t, u) in self.times.iter().zip(&self.u_avg) {
            s += &format!("{},{}\n", crate::fmt_sig(*t), crate::fmt_sig(*u));
        }
        s
    }

    /// `max_t |u_avg(t) - exp(-rate t)|`.
    pub fn max_gap_to_exp(&self, rate: f64) -> f64 {
        self.times.iter().zip(&self.u_avg).map(|(t, u)| (u - (-rate * t).exp()).abs()).fold(0.0, f64::max)
    }

    /// `max_t |u_avg - other.u_avg|` on a shared grid.
    pub fn max_gap(&self, other: &TransientSolution) -> Result<f64> {
        if self.times.len() != other.times.len() {
            return Err(Error::invalid("time grids differ"));
        }
        Ok(self.u_avg.iter().zip(&other.u_avg).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
    }
}

fn check_common(fields: &FieldSet, biot: f64, t_f: f64, opts: &RheOptions) -> Result<()> {
    if !(biot >= 0.0 && biot.is_finite()) {
        return Err(Error::invalid(format!("Biot number must be nonnegative, got {biot}")));
    }
    if !(t_f > 0.0 && t_f.is_finite()) {
        return Err(Error::invalid(format!("final time must be positive, got {t_f}")));
    }
    if opts.steps < 2 {
        return Err(Error::invalid("at least two time steps are required"));
    }
    if fields.eta.iter().flatten().any(|&e| !(e >= 0.0)) {
        return Err(Error::invalid("Robin variation must be nonnegative"));
    }
    Ok(())
}

fn time_mass(forms: &Forms, kind: MassKind) -> CsrMatrix {
    match kind {
        MassKind::Consistent => forms.m.clone(),
        MassKind::Lumped => forms.m.lumped(),
    }
}

/// Autonomous problem with the static coefficient `B * fields.eta`.
pub fn solve_rhea(mesh: &Mesh2D, fields: &FieldSet, biot: f64, t_f: f64, opts: &RheOptions) -> Result<TransientSolution> {
    check_common(fields, biot, t_f, opts)?;
    let forms = assemble_forms(mesh, fields)?;
    let k = CsrMatrix::combine(&[(1.0, &forms.a0), (biot, &forms.a1)]);
    integrate(&forms, t_f, opts, |_| Ok(k.clone()), false)
}

/// Time-dependent coefficient. Every step refactors numerically on the
/// fixed pattern; the symbolic analysis is reused.
pub fn solve_rhe_timedep(
    mesh: &Mesh2D,
    fields: &FieldSet,
    biot: f64,
    eta: TimeEta<'_>,
    t_f: f64,
    opts: &RheOptions,
) -> Result<TransientSolution> {
    check_common(fields, biot, t_f, opts)?;
    let forms = assemble_forms(mesh, fields)?;
    let nb = mesh.boundary_edges().len();
    match eta {
        TimeEta::Separable(g) => integrate(
            &forms,
            t_f,
            opts,
            |t| {
                let gt = g(t);
                if !(gt >= 0.0) {
                    return Err(Error::invalid(format!("Robin coefficient negative at t = {t}")));
                }
                Ok(CsrMatrix::combine(&[(1.0, &forms.a0), (biot * gt, &forms.a1)]))
            },
            true,
        ),
        TimeEta::Tabulated(f) => integrate(
            &forms,
            t_f,
            opts,
            |t| {
                let e = f(t);
                if e.len() != nb {
                    return Err(Error::invalid(format!("eta at t = {t} has {} edges, mesh has {nb}", e.len())));
                }
                if e.iter().flatten().any(|&v| !(v >= 0.0)) {
                    return Err(Error::invalid(format!("Robin coefficient negative at t = {t}")));
                }
                let a1 = boundary_mass(mesh, &e).on_pattern_of(&forms.a0)?;
                Ok(CsrMatrix::combine(&[(1.0, &forms.a0), (biot, &a1)]))
            },
            true,
        ),
    }
}

fn integrate(
    forms: &Forms,
    t_f: f64,
    opts: &RheOptions,
    mut stiffness_at: impl FnMut(f64) -> Result<CsrMatrix>,
    time_dependent: bool,
) -> Result<TransientSolution> {
    let n = forms.c.len();
    let steps = opts.steps;
    let dt = t_f / steps as f64;
    let m = time_mass(forms, opts.mass);
    let total: f64 = forms.c.iter().sum();
    let avg = |u: &[f64]| dot(&forms.c, u) / total;

    let keep: Vec<usize> = {
        let s = opts.max_snapshots.max(1).min(steps);
        let mut v: Vec<usize> = (0..=s).map(|k| k * steps / s).collect();
        v.dedup();
        v
    };
    let mut next_keep = 0usize;

    let mut sol = TransientSolution {
        times: Vec::with_capacity(steps + 1),
        u_avg: Vec::with_capacity(steps + 1),
        snapshot_times: Vec::new(),
        snapshots: Vec::new(),
        u_min: 1.0,
        u_max: 1.0,
    };
    let mut record = |sol: &mut TransientSolution, i: usize, u: &[f64]| {
        let t = if i == steps { t_f } else { i as f64 * dt };
        sol.times.push(t);
        sol.u_avg.push(if i == 0 { 1.0 } else { avg(u) });
        for &x in u {
            sol.u_min = sol.u_min.min(x);
            sol.u_max = sol.u_max.max(x);
        }
        if next_keep < keep.len() && keep[next_keep] == i {
            sol.snapshot_times.push(t);
            sol.snapshots.push(u.to_vec());
            next_keep += 1;
        }
    };

    let u0 = vec![1.0; n];
    record(&mut sol, 0, &u0);

    // Startup: (M/dt + K) u1 = M/dt u0.
    let k1 = stiffness_at(dt)?;
    let s_be = CsrMatrix::combine(&[(1.0 / dt, &m), (1.0, &k1)]);
    let be = SpdFactor::new(&s_be)?;
    let mut rhs = m.mul_vec(&u0);
    rhs.iter_mut().for_each(|x| *x /= dt);
    let mut prev = u0;
    let mut cur = be.solve(&rhs);
    check_finite(&cur, 1)?;
    record(&mut sol, 1, &cur);

    // (3/2 M/dt + K) u^{n+1} = M/dt (2 u^n - u^{n-1}/2).
    let k_next = if time_dependent { stiffness_at(2.0 * dt)? } else { k1.clone() };
    let mut bdf = SpdFactor::new(&CsrMatrix::combine(&[(1.5 / dt, &m), (1.0, &k_next)]))?;
    let mut hist = vec![0.0; n];
    for i in 2..=steps {
        if time_dependent && i > 2 {
            let ki = stiffness_at(i as f64 * dt)?;
            bdf.refactor(&CsrMatrix::combine(&[(1.5 / dt, &m), (1.0, &ki)]))?;
        }
        for j in 0..n {
            hist[j] = (2.0 * cur[j] - 0.5 * prev[j]) / dt;
        }
        let next = bdf.solve(&m.mul_vec(&hist));
        check_finite(&next, i)?;
        prev = std::mem::replace(&mut cur, next);
        record(&mut sol, i, &cur);
    }
    Ok(sol)
}

fn check_finite(u: &[f64], step: usize) -> Result<()> {
    if u.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::Factorization(format!("non-finite solution at step {step}")))
    }
}

#[derive(Debug, Clone)]
pub struct SpectralQoi {
    pub u_avg: Vec<f64>,
    /// Per-mode weights `(c . psi)^2 / sum(c)`; they sum to 1 over a full basis.
    pub weights: Vec<f64>,
    pub captured_mass: f64,
}

/// `u_avg(t) = sum_j w_j exp(-lambda_j t)` from M-orthonormal eigenpairs.
pub fn spectral_reconstruction(pairs: &[EigenPair], c: &[f64], times: &[f64]) -> Result<SpectralQoi> {
    if pairs.is_empty() {
        return Err(Error::invalid("no eigenpairs supplied"));
    }
    let total: f64 = c.iter().sum();
    let mut weights = Vec::with_capacity(pairs.len());
    for p in pairs {
        if p.vector.len() != c.len() {
            return Err(Error::invalid("eigenvector length does not match the constraint weights"));
        }
        let a = dot(c, &p.vector);
        weights.push(a * a / total);
    }
    let u_avg = times
        .iter()
        .map(|&t| pairs.iter().zip(&weights).map(|(p, w)| w * (-p.value * t).exp()).sum())
        .collect();
    let captured_mass = weights.iter().sum();
    Ok(SpectralQoi { u_avg, weights, captured_mass })
}

/// Unweighted `sqrt(mean (u - mean u)^2) / mean u` per stored snapshot;
/// `None` where the mean is not positive.
pub fn coefficient_of_variation(sol: &TransientSolution, mesh: &Mesh2D) -> Result<Vec<Option<f64>>> {
    if sol.snapshots.is_empty() {
        return Err(Error::invalid("solution has no stored snapshots"));
    }
    let m1 = mass(mesh, &vec![1.0; mesh.num_triangles()]);
    let w = m1.row_sums();
    let area: f64 = w.iter().sum();
    sol.snapshots
        .iter()
        .map(|u| {
            if u.len() != w.len() {
                return Err(Error::invalid("snapshot length does not match the mesh"));
            }
            let mean = dot(&w, u) / area;
            if !(mean > 0.0) {
                return Ok(None);
            }
            let var = (m1.quad_form(u) / area - mean * mean).max(0.0);
            Ok(Some(var.sqrt() / mean))
        })
        .collect()
}

/// `int_0^tf int_bdry |eta(t) - eta_bar|` by the composite trapezoid rule.
pub fn eta_l1l1_distance(
    mesh: &Mesh2D,
    eta: &dyn Fn(f64) -> Vec<[f64; 2]>,
    eta_bar: &[[f64; 2]],
    t_f: f64,
    intervals: usize,
) -> Result<f64> {
    if intervals == 0 || !(t_f > 0.0) {
        return Err(Error::invalid("need a positive horizon and at least one interval"));
    }
    let h = t_f / intervals as f64;
    let mut s = 0.0;
    for i in 0..=intervals {
        let w = if i == 0 || i == intervals { 0.5 } else { 1.0 };
        s += w * boundary_l1_distance(mesh, &eta(i as f64 * h), eta_bar);
    }
    Ok(s * h)
}
