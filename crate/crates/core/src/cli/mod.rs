//! The `cmtomo` command line: subcommands, CSV emission, exit codes.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure.

pub mod config;

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::clt::{hbar_scan, n_scan, sigma2_closed, system_lyapunov_ratio, ScanSchedule};
use crate::convolution::{
    binned_tv_samples_vs_density, com_density, digest, ks_samples_vs_density, sample_sum, tv_distance, Backend,
};
use crate::discrepancy::{discrepancy_report, DiscrepancyMatrix};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::marginals::{grid_for_mode, marginal_for_mode, ModeTomogram};
use crate::reconstruct::{fidelity, reconstruct_single_mode};
use crate::states::fock_expansion;

pub use config::ExperimentConfig;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "cmtomo", version, about = "Symplectic and center-of-mass tomograms of oscillator product states")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Experiment configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Output file; standard output when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,

    /// Overrides `[run] seed`.
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,

    /// Overrides `[scan] epsilon`.
    #[arg(long, global = true, value_name = "REAL")]
    pub epsilon: Option<f64>,

    /// Worker threads; results do not depend on this.
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tomogram of a single mode.
    Marginal,
    /// Center-of-mass tomogram of the configured product state.
    Cm {
        /// Add CF-product and Monte Carlo columns with pairwise distances.
        #[arg(long)]
        all_backends: bool,
    },
    /// Lyapunov ratio and Gaussian distance along N at fixed energy.
    CltScan,
    /// Concentration at X = 0 along a decreasing list of hbar.
    HbarScan,
    /// Density matrix of a single mode from its tomogram.
    Reconstruct,
    /// Printed coherent-state formulas against independent computations.
    Discrepancy,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Marginal => "marginal",
            Command::Cm { .. } => "cm",
            Command::CltScan => "clt-scan",
            Command::HbarScan => "hbar-scan",
            Command::Reconstruct => "reconstruct",
            Command::Discrepancy => "discrepancy",
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    if e.is_config() {
        EXIT_CONFIG
    } else {
        EXIT_NUMERICAL
    }
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Accumulates one output file.
struct Document {
    text: String,
}

impl Document {
    fn new(command: &str, cfg: &ExperimentConfig) -> Self {
        let resolved = cfg.resolved();
        let mut text = String::new();
        let _ = writeln!(text, "# cmtomo {}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(text, "# command = {command}");
        let _ = writeln!(text, "# config-digest = {}", digest(&resolved));
        for line in resolved.lines() {
            let _ = writeln!(text, "# config: {line}");
        }
        Document { text }
    }

    fn meta(&mut self, key: &str, value: impl std::fmt::Display) {
        let _ = writeln!(self.text, "# {key} = {value}");
    }

    fn line(&mut self, fields: &[String]) {
        let _ = writeln!(self.text, "{}", fields.join(","));
    }
}

/// Writes via a temporary file in the target directory and a rename.
fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| Error::InvalidInput(format!("output path {} has no file name", path.display())))?;
    let tmp = dir.join(format!(".{}.{}.tmp", name.to_string_lossy(), std::process::id()));
    let result = std::fs::write(&tmp, contents).and_then(|_| std::fs::rename(&tmp, path));
    if result.is_err() {
        let _ = std::fs::remove_file(&tmp);
    }
    result.map_err(Error::from)
}

fn emit(out: Option<&Path>, doc: Document) -> Result<()> {
    match out {
        Some(p) => write_atomic(p, &doc.text),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(doc.text.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::Config {
                line: 0,
                field: "--config".into(),
                message: format!("cannot read {}: {e}", path.display()),
            })?;
            ExperimentConfig::parse(&text)?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed_override(seed);
    }
    if let Some(eps) = cli.epsilon {
        cfg.epsilon_override(eps)?;
    }
    Ok(cfg)
}

fn cmd_marginal(cfg: &ExperimentConfig) -> Result<Document> {
    let mode = cfg.single_mode()?;
    let frame = cfg.frame_for(1)?;
    let (mu, nu) = (frame.mu[0], frame.nu[0]);
    let grid = grid_for_mode(&mode, mu, nu, cfg.hbar, &cfg.grid)?;
    let d = marginal_for_mode(&mode, mu, nu, cfg.hbar, &grid)?;
    let mut doc = Document::new("marginal", cfg);
    doc.meta("mode", mode);
    doc.meta("mu", num(mu));
    doc.meta("nu", num(nu));
    doc.meta("hbar", num(cfg.hbar));
    doc.meta("rescale", d.meta.rescale.map_or_else(|| "none".to_string(), num));
    doc.meta("normalization-warning", d.meta.normalization_warning);
    doc.line(&["X".into(), "density".into()]);
    for (i, v) in d.values.iter().enumerate() {
        doc.line(&[num(grid.x(i)), num(*v)]);
    }
    Ok(doc)
}

/// Sample histogram on bins of width `bin` aligned at 0, evaluated at each grid node.
fn histogram_on(samples: &[f64], grid: &Grid, bin: f64) -> Vec<f64> {
    let mut counts = std::collections::BTreeMap::<i64, usize>::new();
    for &x in samples {
        *counts.entry((x / bin).floor() as i64).or_default() += 1;
    }
    let scale = 1.0 / (samples.len() as f64 * bin);
    (0..grid.count)
        .map(|i| counts.get(&((grid.x(i) / bin).floor() as i64)).copied().unwrap_or(0) as f64 * scale)
        .collect()
}

fn cmd_cm(cfg: &ExperimentConfig, all_backends: bool) -> Result<Document> {
    let sys = cfg.system()?;
    let frame = cfg.frame_for(sys.len())?;
    let fft = com_density(&sys, &frame, &cfg.grid, Backend::Fft)?;
    let mut doc = Document::new("cm", cfg);
    doc.meta("system", sys.describe());
    doc.meta("system-digest", &fft.meta.system_digest);
    doc.meta("frame-digest", &fft.meta.frame_digest);
    doc.meta("sigma2", num(sigma2_closed(&sys, &frame)?));
    doc.meta("S_N", num(system_lyapunov_ratio(&sys, &frame)?));
    doc.meta("clamped-mass", num(fft.meta.clamped_mass));
    if !all_backends {
        doc.line(&["X".into(), "density".into()]);
        for (i, v) in fft.values.iter().enumerate() {
            doc.line(&[num(fft.grid.x(i)), num(*v)]);
        }
        return Ok(doc);
    }
    let cf = com_density(&sys, &frame, &cfg.grid, Backend::CfProduct)?;
    let samples = sample_sum(&sys, &frame, cfg.samples, cfg.seed)?;
    let bin = fft.moments().var.sqrt() / 4.0;
    let hist = histogram_on(&samples, &fft.grid, bin);
    doc.meta("monte-carlo-samples", cfg.samples);
    doc.meta("monte-carlo-seed", cfg.seed);
    doc.meta("monte-carlo-bin", num(bin));
    doc.line(&["X".into(), "density".into(), "cf_product".into(), "monte_carlo".into()]);
    for (i, (&v, &h)) in fft.values.iter().zip(&hist).enumerate() {
        let x = fft.grid.x(i);
        doc.line(&[num(x), num(v), num(cf.eval(x)), num(h)]);
    }
    doc.meta("tv fft cf-product", num(tv_distance(&fft, &cf)));
    doc.meta("tv fft monte-carlo", num(binned_tv_samples_vs_density(&samples, &fft, bin)));
    doc.meta("tv cf-product monte-carlo", num(binned_tv_samples_vs_density(&samples, &cf, bin)));
    doc.meta("ks fft monte-carlo", num(ks_samples_vs_density(&samples, &fft)));
    Ok(doc)
}

fn cmd_clt_scan(cfg: &ExperimentConfig) -> Result<Document> {
    let schedule = ScanSchedule {
        levels: cfg.levels.clone(),
        frames: cfg.frame_pattern(),
        r: cfg.r,
        big_r: cfg.big_r,
    };
    let reports = n_scan(&schedule, cfg.energy, &cfg.n_list, cfg.epsilon, &cfg.grid)?;
    let mut doc = Document::new("clt-scan", cfg);
    doc.meta("energy", num(cfg.energy));
    doc.line(&["N", "hbar", "S_N", "sigma2", "rE", "RE", "ks", "tv"].map(String::from));
    for r in &reports {
        doc.line(&[
            r.n.to_string(),
            num(r.hbar),
            num(r.s_n),
            num(r.sigma2),
            num(r.r_e),
            num(r.big_r_e),
            num(r.ks_distance),
            num(r.tv_distance),
        ]);
    }
    Ok(doc)
}

fn cmd_hbar_scan(cfg: &ExperimentConfig) -> Result<Document> {
    let sys = cfg.system()?;
    let frame = cfg.frame_for(sys.len())?;
    let reports = hbar_scan(&sys, &frame, &cfg.hbar_list, cfg.epsilon, &cfg.grid)?;
    let mut doc = Document::new("hbar-scan", cfg);
    doc.meta("system", sys.describe());
    doc.meta("epsilon", num(cfg.epsilon));
    doc.line(&["hbar", "sigma2", "mass_in_epsilon", "gaussian_predicted_mass"].map(String::from));
    for r in &reports {
        doc.line(&[num(r.hbar), num(r.sigma2), num(r.mass_in_epsilon), num(r.gaussian_mass)]);
    }
    Ok(doc)
}

fn cmd_reconstruct(cfg: &ExperimentConfig) -> Result<Document> {
    let mode = cfg.single_mode()?;
    let tomogram = ModeTomogram::new(mode, cfg.hbar)?;
    let rho = reconstruct_single_mode(&tomogram, cfg.dim, cfg.hbar, &cfg.reconstruct)?;
    let psi = fock_expansion(&mode, cfg.dim)?;
    let mut doc = Document::new("reconstruct", cfg);
    doc.meta("mode", mode);
    doc.meta("dim", cfg.dim);
    doc.meta("k-max", num(cfg.reconstruct.k_max_for(cfg.dim, cfg.hbar)));
    doc.meta("n-theta", cfg.reconstruct.n_theta_for(cfg.dim));
    doc.meta("n-x", cfg.reconstruct.n_x_for(cfg.dim, cfg.hbar));
    doc.meta("pre-rescale-trace", num(rho.pre_rescale_trace));
    doc.meta("fidelity", num(fidelity(&rho, &psi)));
    doc.meta("hermiticity-defect", num(rho.hermiticity_defect));
    doc.meta("min-eigenvalue", num(rho.min_eigenvalue()));
    doc.meta("truncation-leakage-warning", rho.leakage_warning);
    doc.line(&["m", "n", "re", "im"].map(String::from));
    for m in 0..rho.dim {
        for n in 0..rho.dim {
            let z = rho.entries[(m, n)];
            doc.line(&[m.to_string(), n.to_string(), num(z.re), num(z.im)]);
        }
    }
    Ok(doc)
}

fn cmd_discrepancy(cfg: &ExperimentConfig) -> Result<Document> {
    let report = discrepancy_report(&DiscrepancyMatrix::default())?;
    let mut doc = Document::new("discrepancy", cfg);
    let zero: Vec<_> = report.alpha_zero_rows().collect();
    doc.meta("rows", report.rows.len());
    doc.meta("alpha-zero-rows", zero.len());
    doc.meta("alpha-zero-rows-disagreeing", zero.iter().filter(|r| !r.agrees()).count());
    doc.text.push_str(&report.to_text());
    Ok(doc)
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return EXIT_CONFIG;
        }
        // a pool may already exist when called in-process; results do not depend on it
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let result = load_config(&cli).and_then(|cfg| {
        let doc = match &cli.command {
            Command::Marginal => cmd_marginal(&cfg),
            Command::Cm { all_backends } => cmd_cm(&cfg, *all_backends),
            Command::CltScan => cmd_clt_scan(&cfg),
            Command::HbarScan => cmd_hbar_scan(&cfg),
            Command::Reconstruct => cmd_reconstruct(&cfg),
            Command::Discrepancy => cmd_discrepancy(&cfg),
        }?;
        emit(cli.out.as_deref(), doc)
    });
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("cmtomo {}: {e}", cli.command.name());
            exit_code(&e)
        }
    }
}

pub fn main_entry() -> i32 {
    match Cli::try_parse() {
        Ok(cli) => run(cli),
        Err(e) => {
            let _ = e.print();
            if e.use_stderr() {
                EXIT_CONFIG
            } else {
                EXIT_OK
            }
        }
    }
}
