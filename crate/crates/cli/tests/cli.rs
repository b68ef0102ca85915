use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn latteds(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_latteds"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write_config(dir: &Path, name: &str, text: &str) {
    fs::write(dir.join(name), text).unwrap();
}

const FK: &str =
    "model.kind = fk\nwindow.radius = 16\nintegrator.dt = 0.01\nintegrator.t_end = 2\n\
                  integrator.sample_every = 20\ndiagnostics.radii = 2, 4, 8\nseed = 3\n";

fn read(dir: &Path, rel: &str) -> Vec<u8> {
    fs::read(dir.join(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

#[test]
fn simulate_writes_artifacts_deterministically() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    write_config(d, "a.cfg", &format!("{FK}output.dir = a\n"));
    write_config(d, "b.cfg", &format!("{FK}output.dir = b\n"));
    for cfg in ["a.cfg", "b.cfg"] {
        let out = latteds(d, &["simulate", "--config", cfg]);
        assert!(out.status.success(), "{}", stderr(&out));
    }
    for rel in [
        "energy_flux.csv",
        "bounds.csv",
        "trajectory/times.csv",
        "trajectory/u_000010.txt",
    ] {
        assert_eq!(
            read(&d.join("a"), rel),
            read(&d.join("b"), rel),
            "{rel} differs between reruns"
        );
    }
    let bounds = String::from_utf8(read(&d.join("a"), "bounds.csv")).unwrap();
    assert!(bounds.starts_with("kind,N,R,T,beta,e0,eps,bound,observed,satisfied\n"));
    assert!(
        bounds.lines().skip(1).all(|l| l.ends_with(",true")),
        "{bounds}"
    );
    let times = String::from_utf8(read(&d.join("a"), "trajectory/times.csv")).unwrap();
    assert_eq!(times.lines().count(), 12);
}

#[test]
fn echoed_config_reparses_identically() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    write_config(d, "a.cfg", &format!("{FK}output.dir = a\n"));
    assert!(latteds(d, &["simulate", "--config", "a.cfg"])
        .status
        .success());
    let echo = read(&d.join("a"), "config.txt");
    fs::write(d.join("echo.cfg"), &echo).unwrap();
    assert!(latteds(d, &["simulate", "--config", "echo.cfg"])
        .status
        .success());
    assert_eq!(read(&d.join("a"), "config.txt"), echo);
    let text = String::from_utf8(echo).unwrap();
    assert!(text.contains("window.boundary = periodic"));
    assert!(text.contains("integrator.scheme = rk4"));
}

#[test]
fn stationary_initial_condition_gives_zero_ledger() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    write_config(
        d,
        "s.cfg",
        &format!("{FK}init.kind = constant\ninit.value = 0\noutput.dir = s\n"),
    );
    let out = latteds(d, &["simulate", "--config", "s.cfg"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = String::from_utf8(read(&d.join("s"), "energy_flux.csv")).unwrap();
    for line in csv.lines().skip(1) {
        let cols: Vec<f64> = line
            .split(',')
            .skip(2)
            .map(|c| c.parse().unwrap())
            .collect();
        assert!(cols.iter().all(|&c| c == 0.0), "{line}");
    }
}

#[test]
fn diagnose_reproduces_the_simulated_ledger() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    write_config(d, "a.cfg", &format!("{FK}output.dir = a\n"));
    assert!(latteds(d, &["simulate", "--config", "a.cfg"])
        .status
        .success());
    let out = latteds(
        d,
        &[
            "diagnose",
            "--trajectory",
            "a/trajectory",
            "--radii",
            "2,4,8",
            "--out",
            "diag",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(
        read(&d.join("a"), "energy_flux.csv"),
        read(&d.join("diag"), "energy_flux.csv")
    );
    assert_eq!(
        read(&d.join("a"), "bounds.csv"),
        read(&d.join("diag"), "bounds.csv")
    );
}

#[test]
fn config_errors_name_the_key_or_rule() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    write_config(
        d,
        "bad.cfg",
        "model.kind = fk\nwindow.radius = 16\nmodel.temperature = 3\n",
    );
    let out = latteds(d, &["simulate", "--config", "bad.cfg"]);
    assert!(!out.status.success());
    assert!(
        stderr(&out).contains("model.temperature"),
        "{}",
        stderr(&out)
    );

    write_config(
        d,
        "wide.cfg",
        "model.kind = fk\nwindow.radius = 16\nwindow.buffer = 8\ndiagnostics.radii = 9\n",
    );
    let out = latteds(d, &["simulate", "--config", "wide.cfg"]);
    assert!(!out.status.success());
    assert!(
        stderr(&out).contains("window.radius - window.buffer"),
        "{}",
        stderr(&out)
    );
}

#[test]
fn blow_up_exits_nonzero_with_diagnostic() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    write_config(
        d,
        "blow.cfg",
        "model.kind = fk\nwindow.radius = 8\nintegrator.dt = 5\nintegrator.t_end = 5000\noutput.dir = blow\n",
    );
    let out = latteds(d, &["simulate", "--config", "blow.cfg"]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("blow-up"), "{}", stderr(&out));
}

#[test]
fn recurrence_table_has_header_and_matches_saddle() {
    let tmp = tempfile::tempdir().unwrap();
    let out = latteds(
        tmp.path(),
        &[
            "recurrence",
            "--N",
            "1",
            "--lambda",
            "4",
            "--eps",
            "1",
            "--r-max",
            "3",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("r,g_s,bound_ricatti1_or_all,bound_ricatti2,satisfied")
    );
    for line in lines {
        let g: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!((g - 2.0).abs() < 1e-8, "{line}");
    }
}

#[test]
fn coarsen_writes_droplets_and_flips() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let base = "coarsen.N = 1\nwindow.radius = 32\nintegrator.t_end = 20\n";
    write_config(d, "a.cfg", &format!("{base}output.dir = a\n"));
    write_config(d, "b.cfg", &format!("{base}output.dir = b\n"));
    for cfg in ["a.cfg", "b.cfg"] {
        let out = latteds(d, &["coarsen", "--config", cfg]);
        assert!(out.status.success(), "{}", stderr(&out));
    }
    for rel in [
        "droplets.csv",
        "flips.csv",
        "summary.csv",
        "snapshots/u_000002.txt",
    ] {
        assert_eq!(read(&d.join("a"), rel), read(&d.join("b"), rel), "{rel}");
    }
    let droplets = String::from_utf8(read(&d.join("a"), "droplets.csv")).unwrap();
    assert!(droplets.starts_with("t,count,mean_size,max_size,phase_fraction\n"));
    assert_eq!(droplets.lines().count(), 4);
    let flips = String::from_utf8(read(&d.join("a"), "flips.csv")).unwrap();
    assert_eq!(flips.lines().count(), 1 + 65);
}

#[test]
fn verify_suites_pass_and_report_per_check() {
    let tmp = tempfile::tempdir().unwrap();
    for suite in ["calculus", "recurrence", "coarsen"] {
        let out = latteds(tmp.path(), &["verify", "--suite", suite]);
        assert!(
            out.status.success(),
            "{suite}: {}",
            String::from_utf8_lossy(&out.stdout)
        );
        let text = String::from_utf8(out.stdout).unwrap();
        assert!(
            text.lines().filter(|l| l.starts_with("PASS ")).count() >= 4,
            "{text}"
        );
    }
}

#[test]
fn thread_cap_must_be_a_number() {
    let tmp = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_latteds"))
        .args(["verify", "--suite", "calculus"])
        .env("LATTEDS_THREADS", "many")
        .current_dir(tmp.path())
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(stderr(&out).contains("LATTEDS_THREADS"));
}
