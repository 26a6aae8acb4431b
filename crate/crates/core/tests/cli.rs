use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_cmtomo");

fn run(dir: &Path, config: &str, args: &[&str]) -> Output {
    let path = dir.join("run.cfg");
    std::fs::write(&path, config).unwrap();
    Command::new(BIN)
        .arg("--config")
        .arg(&path)
        .args(args)
        .output()
        .unwrap()
}

fn rows(text: &str) -> Vec<Vec<f64>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(|f| f.parse().unwrap()).collect())
        .collect()
}

const VACUUM: &str = "[system]\nhbar = 1\nmode = fock 0\n[frame]\nmu = 1\nnu = 0\nr = 0.5\nR = 2\n";

#[test]
fn marginal_of_vacuum_is_normalized() {
    let dir = TempDir::new().unwrap();
    let out = run(dir.path(), VACUUM, &["marginal"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("# cmtomo "));
    assert!(text.contains("# command = marginal"));
    let r = rows(&text);
    let dx = r[1][0] - r[0][0];
    let mass: f64 = r.iter().map(|row| row[1]).sum::<f64>() * dx;
    assert!((mass - 1.0).abs() < 1e-9);
    let peak = r.iter().find(|row| row[0].abs() < 1e-12).unwrap();
    assert!((peak[1] - 1.0 / std::f64::consts::PI.sqrt()).abs() < 1e-12);
}

#[test]
fn single_mode_center_of_mass_matches_marginal() {
    let dir = TempDir::new().unwrap();
    let cfg = "[system]\nhbar = 0.7\nmode = fock 3\n[frame]\nmu = 0.6\nnu = 0.8\nr = 0.5\nR = 2\n";
    let m = rows(&String::from_utf8(run(dir.path(), cfg, &["marginal"]).stdout).unwrap());
    let c = rows(&String::from_utf8(run(dir.path(), cfg, &["cm"]).stdout).unwrap());
    assert_eq!(m.len(), c.len());
    for (a, b) in m.iter().zip(&c) {
        assert!((a[0] - b[0]).abs() < 1e-12);
        assert!((a[1] - b[1]).abs() < 1e-9);
    }
}

#[test]
fn output_file_is_byte_identical_across_thread_counts() {
    let dir = TempDir::new().unwrap();
    let cfg = "[system]\nhbar = 0.5\nmode = fock 1\nmode = even 0.7 0.2\nmode = fock 2\n\
               [frame]\nmu = 1, 0.6\nnu = 0, 0.8\nr = 0.5\nR = 2\n[run]\nseed = 11\nsamples = 20000\n";
    let mut outputs = Vec::new();
    for threads in ["1", "4", "4"] {
        let path = dir.path().join(format!("cm{}.csv", outputs.len()));
        let out = run(
            dir.path(),
            cfg,
            &["cm", "--all-backends", "--threads", threads, "--out", path.to_str().unwrap()],
        );
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        outputs.push(std::fs::read(&path).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[1], outputs[2]);
}

#[test]
fn seed_changes_only_the_sampled_column() {
    let dir = TempDir::new().unwrap();
    let cfg = "[system]\nmode = fock 0\nmode = fock 1\n[frame]\nmu = 1\nnu = 0\nr = 0.5\nR = 2\n[run]\nsamples = 5000\n";
    let a = String::from_utf8(run(dir.path(), cfg, &["cm", "--all-backends", "--seed", "1"]).stdout).unwrap();
    let b = String::from_utf8(run(dir.path(), cfg, &["cm", "--all-backends", "--seed", "2"]).stdout).unwrap();
    let (ra, rb) = (rows(&a), rows(&b));
    assert!(ra.iter().zip(&rb).all(|(x, y)| x[1] == y[1] && x[2] == y[2]));
    assert!(ra.iter().zip(&rb).any(|(x, y)| x[3] != y[3]));
}

#[test]
fn configuration_errors_exit_with_two() {
    let dir = TempDir::new().unwrap();
    let cases = [
        ("[system]\nmode = odd 0 0\n", "marginal"),
        ("[system]\nmode = fock 0\n[frame]\nr = 2\nR = 1\n", "marginal"),
        ("[system]\nmode = fock 0\n[frame]\nmu = 3\nnu = 0\nr = 0.5\nR = 2\n", "marginal"),
        ("[system]\nmode = fock 0\nmode = fock 1\n", "marginal"),
        ("[system]\nmode = fock 0\nbogus = 1\n", "cm"),
        ("[nowhere]\n", "cm"),
        ("mode = fock 0\n", "cm"),
        ("[system]\nhbar = -1\nmode = fock 0\n", "cm"),
    ];
    for (cfg, cmd) in cases {
        let out = run(dir.path(), cfg, &[cmd]);
        assert_eq!(out.status.code(), Some(2), "{cfg:?}");
        assert!(!out.stderr.is_empty());
    }
    let out = Command::new(BIN).arg("no-such-command").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = Command::new(BIN).args(["--config", "/nonexistent/cfg", "cm"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn failed_run_leaves_no_output_file() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("never.csv");
    let out = run(dir.path(), "[system]\nmode = odd 0 0\n", &["marginal", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!path.exists());
    let leftovers: Vec<_> = std::fs::read_dir(dir.path()).unwrap().collect();
    assert_eq!(leftovers.len(), 1);
}

#[test]
fn header_round_trips_the_configuration() {
    let dir = TempDir::new().unwrap();
    let out = run(dir.path(), VACUUM, &["marginal"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let resolved: String = text
        .lines()
        .filter_map(|l| l.strip_prefix("# config: "))
        .map(|l| format!("{l}\n"))
        .collect();
    let again = run(dir.path(), &resolved, &["marginal"]);
    assert_eq!(again.status.code(), Some(0));
    assert_eq!(String::from_utf8(again.stdout).unwrap(), text);
}

#[test]
fn odd_cat_marginal_reports_rescale() {
    let dir = TempDir::new().unwrap();
    let cfg = "[system]\nmode = odd 1 0\n[frame]\nmu = 1\nnu = 0\nr = 0.5\nR = 2\n";
    let out = run(dir.path(), cfg, &["marginal"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let line = text.lines().find(|l| l.starts_with("# rescale")).unwrap();
    let factor: f64 = line.rsplit('=').next().unwrap().trim().parse().unwrap();
    let n_minus = 1.0 / (2.0 * (1.0 - (-2.0f64).exp())).sqrt();
    assert!((factor - n_minus).abs() < 1e-6, "{factor}");
}
