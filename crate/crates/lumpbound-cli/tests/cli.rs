use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_lumpbound"));
    c.env_remove("LUMPBOUND_OUT");
    c
}

fn scratch(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("lumpbound-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    std::fs::create_dir_all(&d).unwrap();
    d
}

fn run(args: &[&str], out: &Path) -> Output {
    bin().args(args).arg("--out").arg(out).output().unwrap()
}

fn report(out: &Path) -> String {
    std::fs::read_to_string(out.join("report.txt")).unwrap()
}

/// Value of `key = <number>` in a report.
fn value(text: &str, key: &str) -> f64 {
    let prefix = format!("{key} = ");
    let line = text.lines().find_map(|l| l.strip_prefix(&prefix)).unwrap_or_else(|| panic!("{key} missing in\n{text}"));
    line.split([',', ' ']).next().unwrap().parse().unwrap()
}

#[test]
fn phi_on_disk() {
    let d = scratch("phi");
    let o = run(&["phi", "--shape", "disk", "--eta", "constant", "--levels", "5"], &d);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(d.join("phi.csv")).unwrap();
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    let phi: f64 = row[3].parse().unwrap();
    assert!((phi - 0.5).abs() < 0.005, "{phi}");
    let m = std::fs::read_to_string(d.join("manifest.txt")).unwrap();
    assert!(m.contains("command = phi") && m.contains("levels = 5") && m.contains("solver = direct  # default"));
}

#[test]
fn worked_budget() {
    let d = scratch("bounds");
    let o = run(&["bounds", "--B", "0.0680", "--B-est", "0.0678", "--gamma", "4", "--phi", "1.1053"], &d);
    assert!(o.status.success());
    let r = report(&d);
    assert!((value(&r, "lumping_term") - 0.006912).abs() < 1e-5);
    // 0.0002 / (0.0678 e)
    assert!((value(&r, "biot_term") - 0.0002 / (0.0678 * std::f64::consts::E)).abs() < 1e-12);
    let o = run(&["bounds", "--B", "0.068", "--gamma", "4", "--phi111", "0.5", "--gamma-over-lambda", "2", "--var-eta", "0.316"], &d);
    assert!(o.status.success());
    assert!((value(&report(&d), "phi_used") - 2.257).abs() < 0.045);
}

#[test]
fn ranz_marshall_at_rest() {
    let d = scratch("corr");
    let o = run(&["correlate", "--name", "ranz_marshall", "--Re", "0", "--Pr", "0.71"], &d);
    assert!(o.status.success());
    assert_eq!(value(&report(&d), "Nu"), 2.0);
    assert!(String::from_utf8_lossy(&o.stdout).contains("Nu = 2\n"));
}

#[test]
fn exit_codes() {
    let d = scratch("codes");
    assert_eq!(run(&["nonsense"], &d).status.code(), Some(2));
    assert_eq!(run(&["phi", "--shape", "blob"], &d).status.code(), Some(2));
    assert_eq!(run(&["bounds", "--B", "0.1", "--gamma", "4"], &d).status.code(), Some(2));
    assert_eq!(run(&["fit-shape", "--cuboid", "1,2"], &d).status.code(), Some(2));
    assert_eq!(run(&["fit-shape", "--input", "/definitely/not/here.csv"], &d).status.code(), Some(4));
    // Nu far above anything reachable for q in range
    let s = d.join("samples.csv");
    std::fs::write(&s, "geometry_id,s,theta_deg,Re,Nu,Pr\ng,1,0,100,1e9,0.71\n").unwrap();
    let o = run(&["learn-q", "--input", s.to_str().unwrap()], &d);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(d.join("manifest.txt").exists());
}

#[test]
fn config_file_and_override() {
    let d = scratch("cfg");
    let cfg = d.join("run.cfg");
    std::fs::write(&cfg, format!("command = lcm\nB = 0.0678\ngamma = 4\nout = {}\n", d.display())).unwrap();
    let o = bin().args(["--config", cfg.to_str().unwrap()]).output().unwrap();
    assert!(o.status.success());
    assert!((value(&report(&d), "tau") - 3.688).abs() < 1e-3);
    let o = bin().args(["--config", cfg.to_str().unwrap(), "--gamma", "2"]).output().unwrap();
    assert!(o.status.success());
    assert!((value(&report(&d), "tau") - 2.0 * 3.6873).abs() < 1e-3);
    let m = std::fs::read_to_string(d.join("manifest.txt")).unwrap();
    assert!(m.contains("gamma = 2  # flag") && m.contains("B = 0.0678  # config"), "{m}");
    // the manifest replays as a config
    let replay = d.join("replay");
    let o = bin().args(["--config", d.join("manifest.txt").to_str().unwrap(), "--out", replay.to_str().unwrap()]).output().unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(std::fs::read(replay.join("lcm.csv")).unwrap(), std::fs::read(d.join("lcm.csv")).unwrap());
    std::fs::write(&cfg, "command = lcm\nnot_a_flag = 1\n").unwrap();
    assert_eq!(bin().args(["--config", cfg.to_str().unwrap()]).output().unwrap().status.code(), Some(2));
}

#[test]
fn environment_output_directory() {
    let d = scratch("env");
    let o = bin().current_dir(&d).env("LUMPBOUND_OUT", d.join("from-env")).args(["lcm", "--B", "0.1", "--gamma", "2"]).output().unwrap();
    assert!(o.status.success());
    assert!(d.join("from-env/lcm.csv").exists());
    let o = bin().current_dir(&d).env("LUMPBOUND_OUT", d.join("from-env")).args(["lcm", "--B", "0.1", "--gamma", "2", "--out", "flag-dir"]).output().unwrap();
    assert!(o.status.success());
    assert!(d.join("flag-dir/lcm.csv").exists());
}

#[test]
fn reruns_are_bit_identical() {
    let (a, b) = (scratch("rerun-a"), scratch("rerun-b"));
    let args = ["fit-shape", "--spheroid", "5,1,30", "--n", "2000", "--seed", "3"];
    assert!(run(&args, &a).status.success());
    assert!(run(&args, &b).status.success());
    assert_eq!(std::fs::read(a.join("fit.csv")).unwrap(), std::fs::read(b.join("fit.csv")).unwrap());
    let s = value(&report(&a), "s");
    assert!((s / 5.0 - 1.0).abs() < 0.02, "{s}");
    let args = ["rhe", "--shape", "square", "--level", "3", "--B-over-gamma", "0.01", "--steps", "2000", "--modes", "5"];
    assert!(run(&args, &a).status.success());
    assert!(run(&args, &b).status.success());
    for f in ["transient.csv", "spectrum.csv", "variation.csv", "report.txt"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    let ratio = value(&report(&a), "error / bound");
    assert!(ratio > 0.8 && ratio < 1.05, "{ratio}");
}

#[test]
fn learn_and_query_surrogate() {
    let d = scratch("learn");
    let mut csv = String::from("geometry_id,s,theta_deg,Re,Nu,Pr\n");
    let q = |s: f64, th: f64| 1.0 + 0.1 * s + th / 900.0;
    for s in [0.5, 2.0] {
        for th in [0.0, 90.0] {
            for re in [20.0, 200.0] {
                let qq = q(s, th);
                let nu = (2.0 + 0.6 * (qq * re).sqrt() * 0.71f64.cbrt()) / qq;
                csv += &format!("g{s}-{th},{s},{th},{re},{nu:.17e},0.71\n");
            }
        }
    }
    let p = d.join("samples.csv");
    std::fs::write(&p, csv).unwrap();
    let o = run(&["learn-q", "--input", p.to_str().unwrap(), "--query", "2,90"], &d);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = std::fs::read_to_string(d.join("q.csv")).unwrap();
    assert_eq!(out.lines().next().unwrap(), "s,theta_deg,q");
    assert!((value(&report(&d), "q(2, 90)") - q(2.0, 90.0)).abs() < 1e-8);
    assert!(d.join("surrogate.csv").exists());
}

#[test]
fn steady_state_and_profile() {
    let d = scratch("steady");
    let mut s = String::from("t,nu\n");
    for i in 0..=2000 {
        let t = i as f64 * 0.001;
        s += &format!("{t},{}\n", 7.0 + (-t / 0.005).exp());
    }
    let series = d.join("nu.csv");
    std::fs::write(&series, s).unwrap();
    let mut p = String::from("periodic=true period=4\n");
    for i in 0..4 {
        p += &format!("{i},{}\n", if i < 2 { 0.0 } else { 2.0 });
    }
    let prof = d.join("eta.csv");
    std::fs::write(&prof, p).unwrap();
    let o = run(&["steady-state", "--input", series.to_str().unwrap(), "--t-vs", "0.1", "--profile", prof.to_str().unwrap()], &d);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&d);
    assert!(r.contains("converged = true"));
    assert!((value(&r, "nu_stavg") - 7.0).abs() < 0.035);
    let w = std::fs::read_to_string(d.join("windows.csv")).unwrap();
    assert!(w.lines().nth(1).unwrap().starts_with("0.5,0.5,"));
    assert!(r.contains("variance = "));
}

#[test]
fn tables_at_coarse_level() {
    let d = scratch("tables");
    let o = run(&["tables", "--level", "3"], &d);
    assert!(o.status.success());
    let csv = std::fs::read_to_string(d.join("tables.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 4 * 20);
    assert!(csv.lines().any(|l| l.starts_with("disk,3,phi111,,")));
}
