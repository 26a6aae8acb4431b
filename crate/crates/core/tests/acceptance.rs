//! Acceptance criteria, one PASS/FAIL line each. Exits nonzero if any fails.

use std::f64::consts::FRAC_PI_4;
use std::process::Command;
use std::time::{Duration, Instant};

use cmtomo::clt::{hbar_scan, n_scan, sigma2_closed, system_lyapunov_ratio, ScanSchedule};
use cmtomo::convolution::{com_density, ks_samples_vs_density, sample_sum, tv_distance, Backend};
use cmtomo::discrepancy::{discrepancy_report, DiscrepancyMatrix};
use cmtomo::grid::{Grid, GridPolicy};
use cmtomo::marginals::{
    evenodd_tomogram, fock_marginal, fock_tomogram, oracle_density, ModeTomogram, Tomogram,
};
use cmtomo::reconstruct::{fidelity, reconstruct_single_mode, ReconstructOptions};
use cmtomo::special::erf;
use cmtomo::states::{fock_expansion, FrameSpec, ModeSpec, Parity, SystemSpec};
use num_complex::Complex64;

type Outcome = Result<String, String>;

struct Criterion {
    id: u32,
    name: &'static str,
    limit: Option<Duration>,
    run: fn() -> Outcome,
}

fn ensure(ok: bool, msg: String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg)
    }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

// 1
fn fock_normalization_and_variance() -> Outcome {
    let mut worst_mass = 0.0f64;
    let mut worst_var = 0.0f64;
    let policy = GridPolicy::default();
    for n in [0, 1, 5, 20, 50] {
        for rho in [0.5f64, 1.0, 2.0] {
            for hbar in [0.01, 1.0, 10.0] {
                // frame with μ² + ν² = ρ off both axes
                let (mu, nu) = ((0.36 * rho).sqrt(), (0.64 * rho).sqrt());
                let want = hbar * rho * (0.5 + n as f64);
                let grid = Grid::for_sigma(want.sqrt(), &policy).map_err(|e| e.to_string())?;
                let d = fock_marginal(n, mu, nu, hbar, &grid).map_err(|e| e.to_string())?;
                worst_mass = worst_mass.max((d.integral() - 1.0).abs());
                worst_var = worst_var.max((d.moments().var - want).abs());
            }
        }
    }
    let detail = format!("max |mass-1| = {worst_mass:.2e}, max |var - closed form| = {worst_var:.2e}");
    ensure(worst_mass < 1e-8 && worst_var < 1e-8, detail.clone())?;
    Ok(detail)
}

// 2
fn lyapunov_ratio_hbar_free() -> Outcome {
    let levels = [0, 1, 2, 3, 5, 8, 1, 4];
    let frames = [(1.0, 0.0), (0.6, 0.8), (0.0, 1.2), (0.9, -0.3)];
    let (mu, nu) = (0..8).map(|i| frames[i % frames.len()]).unzip();
    let frame = FrameSpec::new(mu, nu, 0.5, 2.0).map_err(|e| e.to_string())?;
    let base = SystemSpec::new(levels.iter().map(|&n| ModeSpec::Fock(n)).collect(), 1.0).map_err(|e| e.to_string())?;
    let s: Vec<f64> = [10.0, 1.0, 0.01]
        .iter()
        .map(|&h| system_lyapunov_ratio(&base.with_hbar(h), &frame))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let spread = s.iter().map(|v| ((v - s[1]) / s[1]).abs()).fold(0.0, f64::max);
    let detail = format!("S_N = {:.15}, max rel spread = {spread:.2e}", s[1]);
    ensure(spread <= 1e-12, detail.clone())?;
    Ok(detail)
}

// 3
fn fixed_energy_scan() -> Outcome {
    let schedule = ScanSchedule { levels: vec![1], frames: vec![(1.0, 0.0)], r: 0.5, big_r: 2.0 };
    let rows = n_scan(&schedule, 10.0, &[4, 8, 16, 32, 64], 0.1, &GridPolicy::default()).map_err(|e| e.to_string())?;
    let scaled: Vec<f64> = rows.iter().map(|r| r.s_n * (r.n as f64).sqrt()).collect();
    let spread = scaled.iter().map(|v| ((v - scaled[0]) / scaled[0]).abs()).fold(0.0, f64::max);
    let (ks4, ks64) = (rows[0].ks_distance, rows[4].ks_distance);
    let bracket = rows.iter().all(|r| r.bracket_holds());
    let detail = format!(
        "S_N sqrt(N) = {:.12}, spread {spread:.2e}; KS(4) = {ks4:.3e}, KS(64) = {ks64:.3e}; bracket {bracket}",
        scaled[0]
    );
    ensure(spread < 1e-6 && ks64 < ks4 / 3.0 && bracket, detail.clone())?;
    Ok(detail)
}

/// Modes, frames repeated cyclically, and `ħ`.
type BackendCase = (Vec<ModeSpec>, Vec<(f64, f64)>, f64);

fn backend_matrix() -> Vec<BackendCase> {
    use ModeSpec::{CoherentEven as E, CoherentOdd as O, Fock as F};
    let w = Complex64::from_polar(1.0, FRAC_PI_4);
    vec![
        (vec![F(0), F(1)], vec![(1.0, 0.0)], 1.0),
        (vec![F(1); 4], vec![(0.6, 0.8)], 0.5),
        (vec![F(3), F(0), F(5)], vec![(1.0, 0.0), (0.0, 1.0)], 1.0),
        (vec![F(2); 8], vec![(0.8, 0.4)], 0.25),
        (vec![E(c(1.0, 0.0)), F(0)], vec![(1.0, 0.0)], 1.0),
        (vec![O(c(1.0, 0.0)), O(c(1.0, 0.0))], vec![(0.0, 1.0)], 1.0),
        (vec![E(c(0.7, 0.7)), F(1), O(c(0.5, 0.0))], vec![(0.6, 0.8), (1.0, 0.0)], 0.5),
        (vec![E(c(2.0, 0.0)), F(2), F(0), O(c(0.0, 1.0))], vec![(1.0, 0.0), (0.8, -0.6)], 1.0),
        (vec![O(w * 2.0); 6], vec![(0.6, 0.8)], 0.25),
        (
            vec![F(10), E(c(1.5, 0.0)), F(4), O(c(0.8, 0.0)), F(0), F(7), E(c(0.0, 0.5)), F(1)],
            vec![(1.0, 0.0), (0.6, 0.8), (0.0, 1.0)],
            0.5,
        ),
    ]
}

// 4
fn backend_agreement() -> Outcome {
    let policy = GridPolicy::default();
    let (mut worst_tv, mut worst_ks) = (0.0f64, 0.0f64);
    for (i, (modes, frames, hbar)) in backend_matrix().into_iter().enumerate() {
        let n = modes.len();
        let (mu, nu) = (0..n).map(|j| frames[j % frames.len()]).unzip();
        let frame = FrameSpec::new(mu, nu, 0.1, 3.0).map_err(|e| e.to_string())?;
        let sys = SystemSpec::new(modes, hbar).map_err(|e| e.to_string())?;
        let fft = com_density(&sys, &frame, &policy, Backend::Fft).map_err(|e| e.to_string())?;
        let cf = com_density(&sys, &frame, &policy, Backend::CfProduct).map_err(|e| e.to_string())?;
        let samples = sample_sum(&sys, &frame, 1_000_000, 20 + i as u64).map_err(|e| e.to_string())?;
        worst_tv = worst_tv.max(tv_distance(&fft, &cf));
        worst_ks = worst_ks.max(ks_samples_vs_density(&samples, &fft));
    }
    let detail = format!("max TV(fft, cf) = {worst_tv:.2e}, max KS(fft, mc) = {worst_ks:.2e}");
    ensure(worst_tv < 1e-6 && worst_ks < 0.005, detail.clone())?;
    Ok(detail)
}

// 5
fn classical_limit() -> Outcome {
    let sys = SystemSpec::new(vec![ModeSpec::Fock(1); 8], 1.0).map_err(|e| e.to_string())?;
    let frame = FrameSpec::uniform(8, 1.0, 0.0, 0.5, 2.0).map_err(|e| e.to_string())?;
    let hbars = [1.0, 0.1, 0.01, 0.001];
    let rows = hbar_scan(&sys, &frame, &hbars, 0.1, &GridPolicy::default()).map_err(|e| e.to_string())?;
    let masses: Vec<f64> = rows.iter().map(|r| r.mass_in_epsilon).collect();
    let monotone = masses.windows(2).all(|w| w[1] > w[0]);
    let mut worst = 0.0f64;
    for (&h, r) in hbars.iter().zip(&rows) {
        let s2 = sigma2_closed(&sys.with_hbar(h), &frame).map_err(|e| e.to_string())?;
        worst = worst.max((r.mass_in_epsilon - erf(0.1 / (2.0 * s2).sqrt())).abs());
    }
    let detail = format!("masses = {masses:.6?}, max |mass - erf| = {worst:.3e}");
    ensure(monotone && worst < 0.02, detail.clone())?;
    Ok(detail)
}

// 6
fn cat_consistency() -> Outcome {
    let hbar = 1.0;
    let policy = GridPolicy::default();
    let mut worst = 0.0f64;
    let frames = [(1.0, 0.0), (0.0, 1.0), (0.6, 0.8), (-0.8, 0.6)];
    for scale in [0.5, 1.0, 2.0] {
        for phase in [0.0, FRAC_PI_4] {
            let alpha = Complex64::from_polar(scale, phase);
            for parity in [Parity::Even, Parity::Odd] {
                let psi = fock_expansion(&ModeSpec::cat(alpha, parity), 64).map_err(|e| e.to_string())?;
                for &(mu, nu) in &frames {
                    let grid = Grid::for_sigma(3.0, &policy).map_err(|e| e.to_string())?;
                    let d = evenodd_tomogram(alpha, parity, mu, nu, hbar, &grid).map_err(|e| e.to_string())?;
                    for i in (0..grid.count).step_by(97) {
                        let o = oracle_density(&psi, mu, nu, hbar, grid.x(i)).map_err(|e| e.to_string())?;
                        worst = worst.max((d.values[i] - o).abs());
                    }
                }
                if parity == Parity::Odd {
                    let t = ModeTomogram::new(ModeSpec::cat(alpha, parity), hbar).map_err(|e| e.to_string())?;
                    let at_zero = t.density(0.0, 0.0, 1.0);
                    ensure(at_zero.abs() < 1e-12, format!("odd cat at X = 0: {at_zero:.3e}"))?;
                }
            }
        }
    }
    let mut vac = 0.0f64;
    let t = ModeTomogram::new(ModeSpec::CoherentEven(c(1e-6, 0.0)), hbar).map_err(|e| e.to_string())?;
    for i in 0..=40 {
        let x = -4.0 + 0.2 * i as f64;
        let want = fock_tomogram(0, 0.6, 0.8, hbar, x).map_err(|e| e.to_string())?;
        vac = vac.max((t.density(x, 0.6, 0.8) - want).abs());
    }
    let detail = format!("max |closed - oracle| = {worst:.2e}, small-alpha vs vacuum = {vac:.2e}");
    ensure(worst < 1e-6 && vac < 1e-10, detail.clone())?;
    Ok(detail)
}

// 7
fn homogeneity() -> Outcome {
    let fock = ModeTomogram::new(ModeSpec::Fock(3), 1.0).map_err(|e| e.to_string())?;
    let cat = ModeTomogram::new(ModeSpec::CoherentEven(c(1.0, 0.0)), 1.0).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for t in [&fock as &dyn Tomogram, &cat] {
        for l in [0.5, 2.0, -3.0] {
            for &(mu, nu) in &[(1.0, 0.0), (0.6, 0.8), (0.3, -1.1)] {
                for i in 0..=60 {
                    let x = -3.0 + 0.1 * i as f64;
                    let a = t.density(l * x, l * mu, l * nu);
                    let b = t.density(x, mu, nu) / f64::abs(l);
                    worst = worst.max((a - b).abs());
                }
            }
        }
    }
    let detail = format!("max deviation = {worst:.2e}");
    ensure(worst < 1e-9, detail.clone())?;
    Ok(detail)
}

// 8
fn reconstruction_round_trip() -> Outcome {
    let cases = [
        (ModeSpec::Fock(0), 8, 0.99),
        (ModeSpec::Fock(1), 8, 0.99),
        (ModeSpec::CoherentEven(c(1.0, 0.0)), 16, 0.98),
    ];
    let mut parts = Vec::new();
    let mut ok = true;
    for (mode, dim, floor) in cases {
        let t = ModeTomogram::new(mode, 1.0).map_err(|e| e.to_string())?;
        let rho = reconstruct_single_mode(&t, dim, 1.0, &ReconstructOptions::default()).map_err(|e| e.to_string())?;
        let psi = fock_expansion(&mode, 64).map_err(|e| e.to_string())?;
        let f = fidelity(&rho, &psi);
        let herm = rho.max_hermitian_deviation();
        let min_eig = rho.min_eigenvalue();
        ok &= f >= floor && herm <= 1e-8 && min_eig >= -1e-6;
        parts.push(format!(
            "{mode}: F = {f:.6}, herm = {herm:.1e} (raw {:.1e}), min eig = {min_eig:.2e}",
            rho.hermiticity_defect
        ));
    }
    let detail = parts.join("; ");
    ensure(ok, detail.clone())?;
    Ok(detail)
}

// 9
fn discrepancy_completeness() -> Outcome {
    let matrix = DiscrepancyMatrix::default();
    let report = discrepancy_report(&matrix).map_err(|e| e.to_string())?;
    let quantities = [
        "wavefunction-norm",
        "<a|x|a>",
        "<a|x^2|a>",
        "<-a|x|a> re",
        "<-a|x|a> im",
        "<-a|x^2|a> re",
        "<-a|x^2|a> im",
        "tomogram-integral",
        "var",
    ];
    let mut missing = Vec::new();
    for q in quantities {
        for &a in &matrix.alphas {
            // the wave function does not depend on the frame
            let frames = if q == "wavefunction-norm" { vec![(1.0, 0.0)] } else { matrix.frames.clone() };
            for &(mu, nu) in &frames {
                for &h in &matrix.hbars {
                    let present = report
                        .rows
                        .iter()
                        .any(|r| r.quantity == q && r.alpha == a && r.mu == mu && r.nu == nu && r.hbar == h);
                    if !present {
                        missing.push(format!("{q} at alpha={a}, ({mu},{nu}), hbar={h}"));
                    }
                }
            }
        }
    }
    let header_ok = report.to_text().lines().any(|l| l.contains("printed,oracle,ratio"));
    let zero: Vec<_> = report.alpha_zero_rows().collect();
    let mut disagree: std::collections::BTreeMap<String, (usize, f64, f64)> = Default::default();
    for r in zero.iter().filter(|r| !r.agrees()) {
        let parity = r.parity.map(|p| format!(" {p:?}").to_lowercase()).unwrap_or_default();
        let e = disagree.entry(format!("{}{parity}", r.quantity)).or_insert((0, f64::INFINITY, f64::NEG_INFINITY));
        e.0 += 1;
        e.1 = e.1.min(r.ratio());
        e.2 = e.2.max(r.ratio());
    }
    let kinds: Vec<String> = disagree
        .iter()
        .map(|(k, (n, lo, hi))| format!("{k}: {n} rows, printed/oracle in [{lo:.6}, {hi:.6}]"))
        .collect();
    let detail = format!(
        "{} rows, missing {}, header {header_ok}; alpha=0 rows {} of which {} disagree [{}]",
        report.rows.len(),
        missing.len(),
        zero.len(),
        disagree.values().map(|v| v.0).sum::<usize>(),
        kinds.join("; ")
    );
    ensure(missing.is_empty() && header_ok && disagree.is_empty(), detail.clone())?;
    Ok(detail)
}

// 10
fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = dir.path().join("run.cfg");
    std::fs::write(
        &cfg,
        "[system]\nhbar = 0.5\nmode = fock 2\nmode = even 1 0.5\nmode = odd 0.8 0\nmode = fock 0\n\
         [frame]\nmu = 1, 0.6\nnu = 0, 0.8\nr = 0.5\nR = 2\n\
         [scan]\nhbar_list = 1, 0.1\nn_list = 4, 8\n\
         [reconstruct]\ndim = 6\nn_k = 48\n\
         [run]\nseed = 7\nsamples = 200000\n",
    )
    .map_err(|e| e.to_string())?;
    let commands: [&[&str]; 4] = [&["cm", "--all-backends"], &["clt-scan"], &["hbar-scan"], &["discrepancy"]];
    let mut checked = 0;
    for cmd in commands {
        let mut files = Vec::new();
        for (k, threads) in ["1", "1", "4"].iter().enumerate() {
            let out = dir.path().join(format!("{}-{k}.csv", cmd[0]));
            let status = Command::new(env!("CARGO_BIN_EXE_cmtomo"))
                .arg("--config")
                .arg(&cfg)
                .args(cmd)
                .args(["--threads", threads, "--out"])
                .arg(&out)
                .status()
                .map_err(|e| e.to_string())?;
            ensure(status.success(), format!("{} exited with {status}", cmd[0]))?;
            files.push(std::fs::read(&out).map_err(|e| e.to_string())?);
        }
        ensure(files[0] == files[1], format!("{}: consecutive runs differ", cmd[0]))?;
        ensure(files[1] == files[2], format!("{}: threads 1 and 4 differ", cmd[0]))?;
        checked += 1;
    }
    let single = dir.path().join("single.cfg");
    std::fs::write(&single, "[system]\nmode = even 1 0\n[reconstruct]\ndim = 8\n").map_err(|e| e.to_string())?;
    let mut outs = Vec::new();
    for threads in ["1", "4"] {
        let out = Command::new(env!("CARGO_BIN_EXE_cmtomo"))
            .arg("--config")
            .arg(&single)
            .args(["reconstruct", "--threads", threads])
            .output()
            .map_err(|e| e.to_string())?;
        ensure(out.status.success(), "reconstruct failed".into())?;
        outs.push(out.stdout);
    }
    ensure(outs[0] == outs[1], "reconstruct: threads 1 and 4 differ".into())?;
    Ok(format!("{} commands byte-identical across runs and thread counts", checked + 1))
}

fn main() {
    let criteria = [
        Criterion { id: 1, name: "fock normalization and variance", limit: Some(Duration::from_secs(10)), run: fock_normalization_and_variance },
        Criterion { id: 2, name: "lyapunov ratio independent of hbar", limit: None, run: lyapunov_ratio_hbar_free },
        Criterion { id: 3, name: "fixed-energy clt scan", limit: Some(Duration::from_secs(60)), run: fixed_energy_scan },
        Criterion { id: 4, name: "backend agreement", limit: Some(Duration::from_secs(120)), run: backend_agreement },
        Criterion { id: 5, name: "classical limit", limit: Some(Duration::from_secs(60)), run: classical_limit },
        Criterion { id: 6, name: "cat tomograms vs amplitude oracle", limit: None, run: cat_consistency },
        Criterion { id: 7, name: "homogeneity", limit: None, run: homogeneity },
        Criterion { id: 8, name: "reconstruction round trip", limit: Some(Duration::from_secs(300)), run: reconstruction_round_trip },
        Criterion { id: 9, name: "discrepancy report", limit: None, run: discrepancy_completeness },
        Criterion { id: 10, name: "determinism", limit: None, run: determinism },
    ];
    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let outcome = (c.run)();
        let elapsed = start.elapsed();
        let over = c.limit.is_some_and(|l| elapsed > l);
        let (tag, detail) = match (&outcome, over) {
            (Ok(d), false) => ("PASS", d.clone()),
            (Ok(d), true) => ("FAIL", format!("{d}; over time limit {:?}", c.limit.unwrap())),
            (Err(d), _) => ("FAIL", d.clone()),
        };
        if tag == "FAIL" {
            failed += 1;
        }
        println!("{tag} {:>2} {} [{:.1} s] {detail}", c.id, c.name, elapsed.as_secs_f64());
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
