//! One pipeline per subcommand. Each returns the report text and writes its
//! report and CSV files into the output directory.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use lumpbound::budget::*;
use lumpbound::correlations::{length_scale, transform_correlation, LengthScaleKind, ShapeDescriptor};
use lumpbound::eigen::{rhe_eigenpairs, stability_constants, EigenOptions, StabilityConstants};
use lumpbound::fem::{assemble_forms, normalize_fields, FieldSet};
use lumpbound::fmt_sig as f;
use lumpbound::lcm::{time_scales, DimensionalInputs, LumpedModel};
use lumpbound::learning::*;
use lumpbound::linalg::SolverKind;
use lumpbound::mesh::{generate_canonical, Mesh2D};
use lumpbound::nusselt::*;
use lumpbound::profiles::{profile_fields, with_profile};
use lumpbound::rhe::*;
use lumpbound::tables::{reproduce_tables, tables_csv};

use crate::{BoundsArgs, CliError, Cmd, CorrelateArgs, DomainArgs, FitArgs, LcmArgs, LearnArgs, Mass, PhiArgs, RheArgs, SteadyArgs, TablesArgs};

type Res<T> = Result<T, CliError>;

pub fn write(dir: &Path, name: &str, text: &str) -> Res<()> {
    let p = dir.join(name);
    std::fs::write(&p, text).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))
}

fn read(p: &Path) -> Res<String> {
    std::fs::read_to_string(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))
}

fn config(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

pub fn dispatch(cmd: &Cmd, out: &Path) -> Res<String> {
    let report = match cmd {
        Cmd::Phi(a) => phi(a, out)?,
        Cmd::Bounds(a) => bounds(a, out)?,
        Cmd::Rhe(a) => rhe(a, out)?,
        Cmd::Lcm(a) => lcm(a, out)?,
        Cmd::LearnQ(a) => learn(a, out)?,
        Cmd::FitShape(a) => fit(a, out)?,
        Cmd::SteadyState(a) => steady(a, out)?,
        Cmd::Correlate(a) => correlate(a, out)?,
        Cmd::Tables(a) => tables(a, out)?,
    };
    write(out, "report.txt", &report)?;
    Ok(report)
}

fn mesh_at(d: &DomainArgs, level: usize) -> Res<Mesh2D> {
    if level == 0 {
        return Err(config("levels start at 1"));
    }
    Ok(match &d.mesh {
        Some(p) => Mesh2D::from_text(&read(p)?)?.refined(level - 1),
        None => generate_canonical(d.shape, level)?,
    })
}

fn fields_on(d: &DomainArgs, mesh: &Mesh2D) -> Res<FieldSet> {
    Ok(match &d.fields {
        Some(p) => normalize_fields(mesh, &FieldSet::from_text(mesh, &read(p)?)?)?.0,
        None => with_profile(mesh, &normalize_fields(mesh, &FieldSet::uniform(mesh))?.0, d.eta)?,
    })
}

fn domain_name(d: &DomainArgs) -> String {
    match (&d.mesh, &d.fields) {
        (Some(m), _) => format!("mesh {}", m.display()),
        (None, _) => d.shape.name().to_string(),
    }
}

fn phi(a: &PhiArgs, out: &Path) -> Res<String> {
    if a.levels.is_empty() {
        return Err(config("no levels given"));
    }
    let solver: SolverKind = a.domain.solver.into();
    let eig = EigenOptions { solver, ..Default::default() };
    let mut csv = String::from("level,vertices,gamma,phi,phi111,phi_ub,delta_sigma,delta_eta,var_sigma,var_eta,gamma_sq_over_mu,gamma_over_lambda\n");
    let mut r = format!("phi on {} ({})\n", domain_name(&a.domain), a.domain.fields.as_ref().map_or(a.domain.eta.name().to_string(), |p| p.display().to_string()));
    for &level in &a.levels {
        let mesh = mesh_at(&a.domain, level)?;
        let fields = fields_on(&a.domain, &mesh)?;
        let gamma = mesh.geometry_stats()?.gamma;
        let phi = solve_phi(&mesh, &fields, solver)?.phi;
        let phi111 = solve_phi(&mesh, &profile_fields(&mesh, lumpbound::profiles::EtaKind::Constant)?, solver)?.phi;
        let st = stability_constants(&mesh, &eig)?;
        let ub = phi_upper_bound(&mesh, &fields, &st, phi111)?;
        let _ = writeln!(
            csv,
            "{level},{},{},{},{},{},{},{},{},{},{},{}",
            mesh.num_vertices(),
            f(gamma),
            f(phi),
            f(phi111),
            f(ub.bound),
            f(ub.delta_sigma),
            f(ub.delta_eta),
            f(ub.var_sigma),
            f(ub.var_eta),
            f(st.gamma_sq_over_mu),
            f(st.gamma_over_lambda)
        );
        let _ = writeln!(r, "level {level} ({} vertices): phi = {}, phi_ub = {}, phi111 = {}, gamma = {}", mesh.num_vertices(), f(phi), f(ub.bound), f(phi111), f(gamma));
    }
    write(out, "phi.csv", &csv)?;
    Ok(r)
}

fn bounds(a: &BoundsArgs, out: &Path) -> Res<String> {
    let (phi_used, kind, ub) = match (a.phi, a.phi111, a.gamma_over_lambda) {
        (Some(p), _, _) => (p, PhiKind::Supplied, None),
        (None, Some(p111), Some(gl)) => {
            let st = StabilityConstants { mu: f64::NAN, lambda_steklov: f64::NAN, gamma_sq_over_mu: a.gamma_sq_over_mu, gamma_over_lambda: gl };
            let ub = phi_upper_bound_from_variances(p111, &st, a.var_sigma, a.var_eta)?;
            (ub.bound, PhiKind::UpperBound, Some(ub))
        }
        _ => return Err(config("give --phi, or --phi111 with --gamma-over-lambda (and variances)")),
    };
    let temporal = match (a.area, a.l1l1) {
        (Some(area), Some(l)) => Some((area, l)),
        (None, None) => None,
        _ => return Err(config("--area and --l1l1 go together")),
    };
    let b = assemble_budget(&BudgetInputs { biot: a.b, biot_est: a.b_est.unwrap_or(a.b), gamma: a.gamma, phi_used, phi_kind: kind, temporal })?;
    let mut r = String::from("error budget\n");
    let mut csv = String::from("term,value\n");
    let mut row = |k: &str, v: f64| {
        let _ = writeln!(r, "{k} = {}", f(v));
        let _ = writeln!(csv, "{k},{}", f(v));
    };
    if let Some(ub) = ub {
        row("delta_sigma", ub.delta_sigma);
        row("delta_eta", ub.delta_eta);
    }
    row("phi_used", b.phi_used);
    row("biot_term", b.biot);
    row("lumping_term", b.lumping);
    if let Some(t) = b.temporal {
        row("temporal_term", t);
    }
    row("total", b.total);
    let _ = writeln!(r, "phi source = {}", match kind {
        PhiKind::Supplied => "supplied",
        PhiKind::UpperBound => "upper bound",
        PhiKind::Computed => "computed",
    });
    if b.outside_asymptotic_regime {
        r += "warning: B/gamma > 0.1, second-order terms may not be negligible\n";
    }
    write(out, "budget.csv", &csv)?;
    Ok(r)
}

fn rhe(a: &RheArgs, out: &Path) -> Res<String> {
    let mesh = mesh_at(&a.domain, a.level)?;
    let fields = fields_on(&a.domain, &mesh)?;
    let gs = mesh.geometry_stats()?;
    let g = gs.gamma;
    let b = match (a.b, a.b_over_gamma) {
        (Some(b), None) => b,
        (None, Some(r)) => r * g,
        _ => return Err(config("give one of --B or --B-over-gamma")),
    };
    if !(b > 0.0) {
        return Err(config("the Biot number must be positive"));
    }
    let tf = a.t_final.unwrap_or(3.0 / (b * g));
    let mass = match a.mass {
        Mass::Lumped => MassKind::Lumped,
        Mass::Consistent => MassKind::Consistent,
    };
    let opts = RheOptions { steps: a.steps, max_snapshots: a.snapshots, mass };
    let solver: SolverKind = a.domain.solver.into();
    let phi = solve_phi(&mesh, &fields, solver)?.phi;
    let sol = solve_rhea(&mesh, &fields, b, tf, &opts)?;
    let gap = sol.max_gap_to_exp(b * g);
    let bound = lumping_term(phi, b, g);
    let mut r = format!("transient solve on {} level {} ({} vertices)\n", domain_name(&a.domain), a.level, mesh.num_vertices());
    let _ = writeln!(r, "B = {}, gamma = {}, B/gamma = {}, t_final = {}, steps = {}", f(b), f(g), f(b / g), f(tf), a.steps);
    let _ = writeln!(r, "phi = {}\nlumping bound = {}\nmax |u_avg - exp(-B gamma t)| = {}\nerror / bound = {}", f(phi), f(bound), f(gap), f(gap / bound));
    let _ = writeln!(r, "min u = {}\nmax u = {}", f(sol.u_min), f(sol.u_max));
    let mut csv = String::from("t,u_avg,u_lcm\n");
    for (t, u) in sol.times.iter().zip(&sol.u_avg) {
        let _ = writeln!(csv, "{},{},{}", f(*t), f(*u), f((-b * g * t).exp()));
    }
    write(out, "transient.csv", &csv)?;
    let cov = coefficient_of_variation(&sol, &mesh)?;
    let mut cv = String::from("t,cov\n");
    for (t, c) in sol.snapshot_times.iter().zip(&cov) {
        let _ = writeln!(cv, "{},{}", f(*t), c.map(f).unwrap_or_else(|| "nan".into()));
    }
    write(out, "variation.csv", &cv)?;
    if a.modes > 0 {
        let forms = assemble_forms(&mesh, &fields)?;
        let pairs = rhe_eigenpairs(&forms, b, a.modes, &EigenOptions { solver, ..Default::default() })?;
        let q = spectral_reconstruction(&pairs, &forms.c, &sol.times)?;
        let diff = q.u_avg.iter().zip(&sol.u_avg).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        let _ = writeln!(r, "spectral modes = {}, captured mass = {}, max |spectral - transient| = {}", a.modes, f(q.captured_mass), f(diff));
        let mut sc = String::from("k,lambda,weight\n");
        for (k, (p, w)) in pairs.iter().zip(&q.weights).enumerate() {
            let _ = writeln!(sc, "{},{},{}", k + 1, f(p.value), f(*w));
        }
        write(out, "spectrum.csv", &sc)?;
    }
    if a.eps > 0.0 {
        let (eps, amp) = (a.eps, a.amplitude);
        let gf = move |t: f64| 1.0 + amp * (2.0 * PI * t / eps).sin();
        let osc = solve_rhe_timedep(&mesh, &fields, b, TimeEta::Separable(&gf), tf, &opts)?;
        let eta_t = |t: f64| fields.eta.iter().map(|e| [e[0] * gf(t), e[1] * gf(t)]).collect::<Vec<_>>();
        let l1 = eta_l1l1_distance(&mesh, &eta_t, &fields.eta, tf, a.steps)?;
        let tgap = osc.max_gap(&sol)?;
        let _ = writeln!(r, "oscillating eta: eps = {}, amplitude = {}, max gap to averaged = {}, l1l1 = {}, temporal bound = {}", f(eps), f(amp), f(tgap), f(l1), f(temporal_bound(b, gs.area, l1)));
        write(out, "oscillating.csv", &osc.to_csv())?;
    }
    Ok(r)
}

fn lcm(a: &LcmArgs, out: &Path) -> Res<String> {
    let mut m = LumpedModel::new(a.b, a.gamma)?;
    let dims = [a.volume, a.area, a.rho_c, a.h, a.t_inf, a.t_init];
    if dims.iter().all(Option::is_some) {
        let v: Vec<f64> = dims.iter().map(|x| x.unwrap()).collect();
        m = m.with_dimensional(DimensionalInputs { volume: v[0], area: v[1], rho_c: v[2], h: v[3], t_inf: v[4], t_init: v[5] })?;
    } else if dims.iter().any(Option::is_some) {
        return Err(config("dimensional output needs --volume, --area, --rho-c, --h, --T-inf and --T-init"));
    }
    if a.samples < 2 {
        return Err(config("need at least 2 samples"));
    }
    let tf = match a.t_final {
        Some(t) => t,
        None if m.tau_eq.is_finite() => 5.0 * m.tau_eq,
        None => return Err(config("B = 0 needs --t-final")),
    };
    let mut r = format!("lumped model: B = {}, gamma = {}\ntau = {}\n", f(a.b), f(a.gamma), f(m.tau_eq));
    let mut csv = String::from(if m.dimensional.is_some() { "t,u,t_seconds,T\n" } else { "t,u\n" });
    let tau_s = m.tau_dimensional();
    for i in 0..a.samples {
        let t = tf * i as f64 / (a.samples - 1) as f64;
        let u = m.evaluate(t)?;
        match tau_s {
            Some(ts) => {
                // same curve on the dimensional time axis
                let sec = t / m.tau_eq * ts;
                let _ = writeln!(csv, "{},{},{},{}", f(t), f(u), f(sec), f(m.temperature(sec)?));
            }
            None => {
                let _ = writeln!(csv, "{},{}", f(t), f(u));
            }
        }
    }
    if let Some(ts) = tau_s {
        let _ = writeln!(r, "tau_seconds = {}", f(ts));
    }
    let ratio = [a.r1, a.r2, a.re, a.pr];
    if ratio.iter().all(Option::is_some) {
        let s = time_scales(a.r1.unwrap(), a.r2.unwrap(), a.re.unwrap(), a.pr.unwrap(), a.b, a.gamma)?;
        let _ = writeln!(r, "tau_conv = {}\ntau_eq = {}\ntau_diff = {}\ntau_eq / tau_conv = {}", f(s.tau_conv), f(s.tau_eq), f(s.tau_diff), f(s.ratio));
    } else if ratio.iter().any(Option::is_some) {
        return Err(config("the time-scale ratio needs --r1, --r2, --Re and --Pr"));
    }
    write(out, "lcm.csv", &csv)?;
    Ok(r)
}

fn learn(a: &LearnArgs, out: &Path) -> Res<String> {
    if a.query.as_ref().is_some_and(|q| q.len() != 2) {
        return Err(config("--query takes s,theta_deg"));
    }
    let samples = parse_samples_csv(&read(&a.input)?)?;
    let learned = learn_per_geometry(&a.correlation, &samples)?;
    let mut csv = String::from("s,theta_deg,q\n");
    let mut r = format!("learned q against {} from {} samples, {} geometries\n", a.correlation.name(), samples.len(), learned.len());
    for (id, s, th, q) in &learned {
        let _ = writeln!(csv, "{},{},{}", f(*s), f(*th), f(*q));
        let _ = writeln!(r, "{id}: s = {}, theta = {}, q = {}", f(*s), f(*th), f(*q));
    }
    write(out, "q.csv", &csv)?;
    let pts: Vec<(f64, f64, f64)> = learned.iter().map(|(_, s, t, q)| (*s, *t, *q)).collect();
    match build_surrogate(&pts) {
        Ok(model) => {
            write(out, "surrogate.csv", &model.to_csv())?;
            let _ = writeln!(r, "surrogate grid: {} s values x {} theta values", model.log_s.len(), model.theta.len());
            if let Some(q) = &a.query {
                let v = model.eval(q[0], q[1])?;
                let _ = writeln!(r, "q({}, {}) = {}", f(q[0]), f(q[1]), f(v));
            }
        }
        Err(e) => {
            if a.query.is_some() {
                return Err(e.into());
            }
            let _ = writeln!(r, "no surrogate: {e}");
        }
    }
    Ok(r)
}

fn parse_points(text: &str) -> Res<Vec<[f64; 3]>> {
    let mut pts = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let l = line.trim();
        if l.is_empty() || l.starts_with('#') {
            continue;
        }
        let v: Vec<Option<f64>> = l.split(',').map(|w| w.trim().parse().ok()).collect();
        match v.as_slice() {
            [Some(x), Some(y), Some(z)] => pts.push([*x, *y, *z]),
            _ if i == 0 => continue,
            _ => return Err(config(format!("points line {}: expected x,y,z", i + 1))),
        }
    }
    Ok(pts)
}

fn fit(a: &FitArgs, out: &Path) -> Res<String> {
    for (flag, v) in [("--spheroid", &a.spheroid), ("--cuboid", &a.cuboid)] {
        if v.as_ref().is_some_and(|v| v.len() != 3) {
            return Err(config(format!("{flag} takes three comma-separated numbers")));
        }
    }
    let (src, pts) = match (&a.input, &a.spheroid, &a.cuboid) {
        (Some(p), None, None) => (p.display().to_string(), parse_points(&read(p)?)?),
        (None, Some(s), None) => (format!("spheroid {},{},{}", f(s[0]), f(s[1]), f(s[2])), sample_spheroid_surface(s[0], s[1], s[2], a.n, a.seed)?),
        (None, None, Some(c)) => (format!("cuboid {},{},{}", f(c[0]), f(c[1]), f(c[2])), sample_cuboid_surface(c[0], c[1], c[2], a.n, a.seed)?),
        _ => return Err(config("give exactly one of --input, --spheroid, --cuboid")),
    };
    let fit = fit_spheroid(&pts)?;
    let mut r = format!("spheroid fit of {src} ({} points)\n", pts.len());
    let _ = writeln!(r, "s = {}\ntheta_deg = {}\nisotropic = {}", f(fit.s), f(fit.theta_deg), fit.isotropic);
    let _ = writeln!(r, "half extents = {}, {}, {}", f(fit.axes[0]), f(fit.axes[1]), f(fit.axes[2]));
    let sym = fit.symmetry_axis;
    let _ = writeln!(r, "symmetry axis = {}, {}, {}", f(sym[0]), f(sym[1]), f(sym[2]));
    let mut csv = format!("quantity,value\ns,{}\ntheta_deg,{}\n", f(fit.s), f(fit.theta_deg));
    let eq = 0.5 * (fit.axes[1] + fit.axes[2]);
    let body = ShapeDescriptor::Spheroid { polar: fit.axes[0], equatorial: eq };
    for k in LengthScaleKind::ALL {
        let l = length_scale(&body, k)?;
        let _ = writeln!(r, "fitted spheroid {} = {}", k.name(), f(l));
        let _ = writeln!(csv, "{},{}", k.name(), f(l));
    }
    write(out, "fit.csv", &csv)?;
    Ok(r)
}

fn steady(a: &SteadyArgs, out: &Path) -> Res<String> {
    if a.input.is_none() && a.profile.is_none() {
        return Err(config("give --input and/or --profile"));
    }
    let mut r = String::new();
    if let Some(p) = &a.input {
        let series = NusseltSeries::from_csv(&read(p)?)?;
        let t_vs = match (a.t_vs, a.r1, a.r2, a.re, a.pr) {
            (Some(t), ..) => t,
            (None, Some(r1), Some(r2), Some(re), Some(pr)) => vortex_frequency(a.strouhal, r1, r2, re, pr)?.1,
            _ => return Err(config("give --t-vs, or --r1, --r2, --Re and --Pr")),
        };
        let cfg = SteadyStateConfig {
            initial_width: a.initial_width,
            step: a.window_step,
            growth_per_step: a.growth,
            activation: a.activation,
            tolerance: a.tolerance,
            history: a.history,
        };
        let rep = steady_state_detect(&series, t_vs, &cfg)?;
        let mut csv = String::from("t_end,width,mean,mean_rel_change,active\n");
        for w in &rep.windows {
            let c = w.mean_rel_change.map(f).unwrap_or_default();
            let _ = writeln!(csv, "{},{},{},{c},{}", f(w.t_end), f(w.width), f(w.mean), w.active);
        }
        write(out, "windows.csv", &csv)?;
        let _ = writeln!(r, "steady-state detection: t_vs = {}, {} windows", f(t_vs), rep.windows.len());
        if series.duplicates_dropped > 0 {
            let _ = writeln!(r, "duplicate time stamps dropped = {}", series.duplicates_dropped);
        }
        let _ = writeln!(r, "converged = {}", rep.converged);
        if let Some(t) = rep.t_f {
            let _ = writeln!(r, "t_f = {}", f(t));
        }
        if let Some(m) = rep.nu_stavg {
            let _ = writeln!(r, "nu_stavg = {}", f(m));
        }
    }
    if let Some(p) = &a.profile {
        let (c, e, period) = parse_profile_csv(&read(p)?)?;
        let prof = eta_profile_stats(&c, &e, period)?;
        let mut csv = String::from("coord,eta\n");
        for (x, y) in prof.coord.iter().zip(&prof.eta) {
            let _ = writeln!(csv, "{},{}", f(*x), f(*y));
        }
        write(out, "profile.csv", &csv)?;
        let _ = writeln!(r, "profile: {} samples, raw mean = {}, variance = {}", prof.coord.len(), f(prof.raw_mean), f(prof.variance));
    }
    Ok(r)
}

fn correlate(a: &CorrelateArgs, out: &Path) -> Res<String> {
    let (nu, in_range) = match a.q {
        None => a.name.eval(a.re, a.pr, a.strict)?,
        Some(q) => {
            let ok = a.name.eval(q * a.re, a.pr, a.strict)?.1;
            (transform_correlation(&a.name, q, a.re, a.pr)?, ok)
        }
    };
    let mut r = format!("{} at Re = {}, Pr = {}\n", a.name.name(), f(a.re), f(a.pr));
    if let Some(q) = a.q {
        let _ = writeln!(r, "length-scale ratio q = {}", f(q));
    }
    let _ = writeln!(r, "Nu = {}\nin validity range = {in_range}", f(nu));
    let mut csv = format!("correlation,Re,Pr,q,Nu,in_range\n{},{},{},{},{},{in_range}\n", a.name.name(), f(a.re), f(a.pr), f(a.q.unwrap_or(1.0)), f(nu));
    if let Some(r2) = a.r2 {
        let b = lumpbound::correlations::biot_from_nusselt(r2, nu)?;
        let _ = writeln!(r, "B = {}", f(b));
        csv += &format!("# B = {}\n", f(b));
    }
    if !in_range {
        r += "warning: outside the correlation's validity range\n";
    }
    write(out, "correlate.csv", &csv)?;
    Ok(r)
}

fn tables(a: &TablesArgs, out: &Path) -> Res<String> {
    let t = reproduce_tables(a.level, a.solver.into())?;
    write(out, "tables.csv", &tables_csv(&t))?;
    let mut r = String::new();
    for s in &t {
        let _ = writeln!(r, "{} level {} ({} vertices)", s.shape.name(), s.level, s.vertices);
        for (name, c) in [("phi111", &s.phi111), ("gamma^2/mu", &s.gamma_sq_over_mu), ("gamma/Lambda", &s.gamma_over_lambda), ("phi_ub_est", &s.phi_ub_est)] {
            let _ = writeln!(r, "  {name:<13} {:>16} ref {:>16} err {:.2e}", f(c.value), f(c.reference), c.error());
        }
        for row in &s.rows {
            let _ = writeln!(
                r,
                "  {:<13} phi {} (err {:.2e})  phi_ub {} (err {:.2e})  delta_eta {}  variance {}",
                row.kind.name(),
                f(row.phi.value),
                row.phi.error(),
                f(row.phi_ub.value),
                row.phi_ub.error(),
                f(row.delta_eta.value),
                f(row.variance.value)
            );
        }
    }
    Ok(r)
}
