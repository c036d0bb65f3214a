//! Smallest eigenpairs of `A v = lambda Mrhs v`, optionally restricted to a
//! weighted-mean-zero subspace, by block shift-invert subspace iteration with
//! Rayleigh-Ritz extraction.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fem::{boundary_mass, mass, stiffness, FieldSet, Forms};
use crate::linalg::{dense, dot, norm2, ConstrainedSolver, CsrMatrix, SolverKind, SpdFactor};
use crate::mesh::Mesh2D;

#[derive(Debug, Clone)]
pub struct EigenPair {
    pub value: f64,
    /// Normalized so that `vᵀ Mrhs v = 1`.
    pub vector: Vec<f64>,
    pub residual: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct EigenOptions {
    pub tol_value: f64,
    pub tol_residual: f64,
    pub max_iter: usize,
    pub seed: u64,
    pub solver: SolverKind,
    /// Spectral shift for unconstrained problems; `None` picks 0, or -1 when
    /// `A` annihilates the constants.
    pub shift: Option<f64>,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions {
            tol_value: 1e-10,
            tol_residual: 1e-8,
            max_iter: 500,
            seed: 0x5eed,
            solver: SolverKind::Direct,
            shift: None,
        }
    }
}

enum Operator {
    Shifted(SpdFactor),
    Constrained(ConstrainedSolver),
}

pub fn generalized_eigs(
    a: &CsrMatrix,
    mrhs: &CsrMatrix,
    k: usize,
    constraint: Option<&[f64]>,
    opts: &EigenOptions,
) -> Result<Vec<EigenPair>> {
    let n = a.dim();
    if mrhs.dim() != n {
        return Err(Error::invalid("matrix dimensions differ"));
    }
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    let rank = mrhs.diagonal().iter().filter(|&&d| d > 0.0).count();
    let available = rank.saturating_sub(constraint.is_some() as usize);
    if k > available {
        return Err(Error::invalid(format!(
            "requested {k} eigenpairs but only {available} are available"
        )));
    }
    let p = (k + (k / 2).max(6)).min(available);

    let (op, shift) = match constraint {
        Some(c) => (Operator::Constrained(ConstrainedSolver::new(a, c, opts.solver)?), 0.0),
        None => {
            let s = opts.shift.unwrap_or_else(|| {
                let ones = vec![1.0; n];
                let kernel = a.mul_vec(&ones).iter().fold(0.0f64, |m, x| m.max(x.abs()));
                let scale = a.values().iter().fold(0.0f64, |m, x| m.max(x.abs()));
                if kernel <= 1e-10 * scale {
                    -1.0
                } else {
                    0.0
                }
            });
            let shifted = CsrMatrix::combine(&[(1.0, a), (-s, mrhs)]);
            (Operator::Shifted(SpdFactor::new(&shifted)?), s)
        }
    };
    let a_shift = if shift != 0.0 { CsrMatrix::combine(&[(1.0, a), (-shift, mrhs)]) } else { a.clone() };

    let project = |x: &mut Vec<f64>| {
        if let Some(c) = constraint {
            let m = dot(c, x) / c.iter().sum::<f64>();
            x.iter_mut().for_each(|v| *v -= m);
        }
    };
    let apply = |x: &[f64]| -> Result<Vec<f64>> {
        let rhs = mrhs.mul_vec(x);
        match &op {
            Operator::Shifted(f) => Ok(f.solve(&rhs)),
            Operator::Constrained(s) => Ok(s.solve_projected(&rhs)?.0),
        }
    };

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut x: Vec<Vec<f64>> = (0..p)
        .map(|_| {
            let mut v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
            project(&mut v);
            v
        })
        .collect();

    let mut prev = vec![f64::NAN; k];
    let mut worst = f64::INFINITY;
    for _ in 0..opts.max_iter {
        let mut y: Vec<Vec<f64>> = x.iter().map(|v| apply(v)).collect::<Result<_>>()?;
        let ay: Vec<Vec<f64>> = y
            .iter_mut()
            .map(|v| {
                let av = a_shift.mul_vec(v);
                let s = dot(v, &av).max(f64::MIN_POSITIVE).sqrt();
                v.iter_mut().for_each(|z| *z /= s);
                av.into_iter().map(|z| z / s).collect()
            })
            .collect();
        let my: Vec<Vec<f64>> = y.iter().map(|v| mrhs.mul_vec(v)).collect();

        let mut kk = vec![0.0; p * p];
        let mut gg = vec![0.0; p * p];
        for i in 0..p {
            for j in 0..=i {
                let kij = 0.5 * (dot(&y[i], &ay[j]) + dot(&y[j], &ay[i]));
                let gij = 0.5 * (dot(&y[i], &my[j]) + dot(&y[j], &my[i]));
                kk[i * p + j] = kij;
                kk[j * p + i] = kij;
                gg[i * p + j] = gij;
                gg[j * p + i] = gij;
            }
        }
        let mut l = kk;
        if dense::cholesky(&mut l, p).is_none() {
            return Err(Error::Factorization("Ritz basis lost independence".into()));
        }
        // C = L^-1 G L^-T
        let mut tmp = gg;
        for j in 0..p {
            let mut col: Vec<f64> = (0..p).map(|i| tmp[i * p + j]).collect();
            dense::forward(&l, p, &mut col);
            for i in 0..p {
                tmp[i * p + j] = col[i];
            }
        }
        let mut cmat = vec![0.0; p * p];
        for i in 0..p {
            let mut row: Vec<f64> = tmp[i * p..(i + 1) * p].to_vec();
            dense::forward(&l, p, &mut row);
            cmat[i * p..(i + 1) * p].copy_from_slice(&row);
        }
        for i in 0..p {
            for j in 0..i {
                let s = 0.5 * (cmat[i * p + j] + cmat[j * p + i]);
                cmat[i * p + j] = s;
                cmat[j * p + i] = s;
            }
        }
        let (w, q) = dense::symmetric_eigen(&cmat, p);
        let mut order: Vec<usize> = (0..p).collect();
        order.sort_by(|&i, &j| w[j].total_cmp(&w[i]));

        let mut z: Vec<Vec<f64>> = Vec::with_capacity(p);
        let mut theta = Vec::with_capacity(p);
        for &j in &order {
            let mut coef: Vec<f64> = (0..p).map(|i| q[i * p + j]).collect();
            dense::backward_t(&l, p, &mut coef);
            let mut v = vec![0.0; n];
            for (i, ci) in coef.iter().enumerate() {
                crate::linalg::axpy(*ci, &y[i], &mut v);
            }
            let wj = w[j];
            if wj > 0.0 {
                let s = 1.0 / wj.sqrt();
                v.iter_mut().for_each(|t| *t *= s);
                theta.push(1.0 / wj + shift);
            } else {
                theta.push(f64::INFINITY);
            }
            project(&mut v);
            z.push(v);
        }

        // Spectral scale of the block, used to floor relative measures near 0.
        let scale = theta.iter().filter(|t| t.is_finite()).fold(0.0f64, |m, t| m.max(t.abs()));
        let mut converged = true;
        worst = 0.0;
        let mut res = vec![0.0; k];
        for j in 0..k {
            let az = a.mul_vec(&z[j]);
            let mz = mrhs.mul_vec(&z[j]);
            let mut r: Vec<f64> = az.iter().zip(&mz).map(|(p, q)| p - theta[j] * q).collect();
            if let Some(c) = constraint {
                let m = dot(c, &r) / dot(c, c);
                r.iter_mut().zip(c).for_each(|(ri, ci)| *ri -= m * ci);
            }
            let denom = norm2(&az) + theta[j].abs().max(1e-4 * scale) * norm2(&mz);
            res[j] = if denom > 0.0 { norm2(&r) / denom } else { norm2(&r) };
            worst = worst.max(res[j]);
            let tol_abs = opts.tol_value * theta[j].abs().max(1e-4 * scale).max(f64::MIN_POSITIVE);
            if !((theta[j] - prev[j]).abs() <= tol_abs && res[j] <= opts.tol_residual) {
                converged = false;
            }
        }
        prev.copy_from_slice(&theta[..k]);
        x = z;
        if converged {
            return Ok((0..k)
                .map(|j| EigenPair { value: theta[j], vector: x[j].clone(), residual: res[j] })
                .collect());
        }
    }
    Err(Error::NoConvergence { iterations: opts.max_iter, residual: worst })
}

/// Geometry-only stability eigenvalues on the mean-zero subspace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityConstants {
    pub mu: f64,
    pub lambda_steklov: f64,
    pub gamma_sq_over_mu: f64,
    pub gamma_over_lambda: f64,
}

pub fn stability_constants(mesh: &Mesh2D, opts: &EigenOptions) -> Result<StabilityConstants> {
    let f = FieldSet::uniform(mesh);
    let a0 = stiffness(mesh, &f.kappa);
    let m = mass(mesh, &f.sigma);
    let bm = boundary_mass(mesh, &f.eta);
    let c = m.row_sums();
    let gamma = mesh.geometry_stats()?.gamma;
    let mu = generalized_eigs(&a0, &m, 1, Some(&c), opts)?[0].value;
    let lambda_steklov = generalized_eigs(&a0, &bm, 1, Some(&c), opts)?[0].value;
    Ok(StabilityConstants {
        mu,
        lambda_steklov,
        gamma_sq_over_mu: gamma * gamma / mu,
        gamma_over_lambda: gamma / lambda_steklov,
    })
}

/// Lowest `k` pairs of the Robin operator `(A0 + B A1) v = lambda M v`.
pub fn rhe_eigenpairs(forms: &Forms, biot: f64, k: usize, opts: &EigenOptions) -> Result<Vec<EigenPair>> {
    let a = CsrMatrix::combine(&[(1.0, &forms.a0), (biot, &forms.a1)]);
    generalized_eigs(&a, &forms.m, k, None, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::assemble_forms;
    use crate::mesh::{generate_canonical, Shape};

    #[test]
    fn neumann_disk_spectrum() {
        let mesh = generate_canonical(Shape::Disk, 4).unwrap();
        let f = FieldSet::uniform(&mesh);
        let forms = assemble_forms(&mesh, &f).unwrap();
        let pairs = generalized_eigs(&forms.a0, &forms.m, 4, None, &EigenOptions::default()).unwrap();
        assert!(pairs[0].value.abs() < 1e-9);
        let v0 = &pairs[0].vector;
        assert!(v0.iter().all(|x| (x - v0[0]).abs() < 1e-8));
        for w in pairs.windows(2) {
            assert!(w[0].value <= w[1].value);
        }
        // Mrhs-orthonormality
        for i in 0..4 {
            for j in 0..4 {
                let g = forms.m.bilinear(&pairs[i].vector, &pairs[j].vector);
                assert!((g - (i == j) as u8 as f64).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn rejects_oversized_requests() {
        let mesh = generate_canonical(Shape::EquilateralTriangle, 1).unwrap();
        let forms = assemble_forms(&mesh, &FieldSet::uniform(&mesh)).unwrap();
        let r = generalized_eigs(&forms.a0, &forms.m, 3, Some(&forms.c), &EigenOptions::default());
        assert!(r.is_err());
        assert!(generalized_eigs(&forms.a0, &forms.m, 0, None, &EigenOptions::default()).is_err());
    }

    #[test]
    fn constrained_matches_unconstrained_second() {
        let mesh = generate_canonical(Shape::Square, 4).unwrap();
        let forms = assemble_forms(&mesh, &FieldSet::uniform(&mesh)).unwrap();
        let opts = EigenOptions::default();
        let free = generalized_eigs(&forms.a0, &forms.m, 2, None, &opts).unwrap();
        let con = generalized_eigs(&forms.a0, &forms.m, 1, Some(&forms.c), &opts).unwrap();
        assert!((free[1].value - con[0].value).abs() < 1e-8 * con[0].value);
    }
}
