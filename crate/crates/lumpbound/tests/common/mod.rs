//! Independent reference solutions shared by the integration tests.
#![allow(dead_code)]

/// 1D two-medium conduction: solid on x < 0 (capacity 1, conductivity 1,
/// initial value 1), fluid on x > 0 (capacity r1, conductivity r2, initial
/// value 0). Finite volumes on a graded grid, backward Euler with geometric
/// time steps. Returns `(u_interface, nu)` at each requested time, where
/// `nu = -du/dx (solid side) / (r2 u)`.
pub fn two_medium_fd(r1: f64, r2: f64, times: &[f64]) -> Vec<(f64, f64)> {
    let t_min = times.iter().cloned().fold(f64::INFINITY, f64::min);
    let t_max = times.iter().cloned().fold(0.0, f64::max);
    let side = |d: f64| {
        let mut h = 0.01 * (d * t_min).sqrt();
        let len = 25.0 * (d * t_max).sqrt();
        let mut xs = vec![0.0];
        while *xs.last().unwrap() < len {
            xs.push(xs.last().unwrap() + h);
            h *= 1.02;
        }
        xs
    };
    let s = side(1.0);
    let f = side(r2 / r1);
    // nodes ordered from the far solid end to the far fluid end
    let mut x: Vec<f64> = s.iter().rev().map(|v| -v).collect();
    let i0 = x.len() - 1;
    x.extend(f.iter().skip(1));
    let n = x.len();
    let cap_k = |a: f64, b: f64| if 0.5 * (a + b) < 0.0 { (1.0, 1.0) } else { (r1, r2) };
    let mut cap = vec![0.0; n];
    let mut cond = vec![0.0; n - 1];
    for i in 0..n - 1 {
        let h = x[i + 1] - x[i];
        let (c, k) = cap_k(x[i], x[i + 1]);
        cap[i] += 0.5 * c * h;
        cap[i + 1] += 0.5 * c * h;
        cond[i] = k / h;
    }
    let mut u: Vec<f64> = (0..n).map(|i| if i <= i0 { 1.0 } else { 0.0 }).collect();
    let mut out = Vec::new();
    let mut targets: Vec<f64> = times.to_vec();
    targets.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut t = 0.0;
    let mut dt = 1e-4 * t_min;
    for &tt in &targets {
        while t < tt {
            let step = dt.min(tt - t);
            // tridiagonal (cap/dt + K) u_new = cap/dt u
            let mut a = vec![0.0; n];
            let mut b = vec![0.0; n];
            let mut c = vec![0.0; n];
            let mut d = vec![0.0; n];
            for i in 0..n {
                b[i] = cap[i] / step;
                d[i] = cap[i] / step * u[i];
                if i > 0 {
                    a[i] = -cond[i - 1];
                    b[i] += cond[i - 1];
                }
                if i + 1 < n {
                    c[i] = -cond[i];
                    b[i] += cond[i];
                }
            }
            for i in 1..n {
                let m = a[i] / b[i - 1];
                b[i] -= m * c[i - 1];
                d[i] -= m * d[i - 1];
            }
            u[n - 1] = d[n - 1] / b[n - 1];
            for i in (0..n - 1).rev() {
                u[i] = (d[i] - c[i] * u[i + 1]) / b[i];
            }
            t += step;
            dt *= 1.002;
        }
        // second-order one-sided derivative on the solid side
        let (x0, x1, x2) = (x[i0], x[i0 - 1], x[i0 - 2]);
        let (h1, h2) = (x0 - x1, x0 - x2);
        let du = u[i0] * (1.0 / h1 + 1.0 / h2) - u[i0 - 1] * h2 / (h1 * (h2 - h1)) + u[i0 - 2] * h1 / (h2 * (h2 - h1));
        out.push((u[i0], -du / (r2 * u[i0])));
    }
    out
}
