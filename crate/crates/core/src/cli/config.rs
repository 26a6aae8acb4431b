//! Experiment configuration: `[section]` headers and `key = value` lines.
//!
//! ```text
//! # comments start with '#', anywhere on a line
//! [system]
//! hbar = 1.0
//! mode = fock 3          # number state |3>
//! mode = even 1.0 0.5    # even coherent state, alpha = 1.0 + 0.5i
//! mode = odd 1.5 0       # odd coherent state, alpha must be nonzero
//!
//! [frame]
//! mu = 1.0, 0.6          # lists repeat cyclically over the modes
//! nu = 0.0, 0.8
//! r = 0.5                # r < mu^2 + nu^2 < R for every mode
//! R = 2.0
//!
//! [grid]
//! points_per_sigma = 64
//! half_width_sigmas = 8
//! max_points = 4194304
//!
//! [scan]
//! energy = 10            # clt-scan: hbar = energy / (N/2 + sum of levels)
//! n_list = 4, 8, 16, 32, 64
//! levels = 1             # clt-scan Fock levels, repeated cyclically
//! hbar_list = 1, 0.1, 0.01, 0.001
//! epsilon = 0.1
//!
//! [reconstruct]
//! dim = 8
//! k_max = 8              # default (8 + 2 sqrt(2 dim))/sqrt(hbar)
//! n_k = 96
//! n_theta = 64           # default max(64, 4 dim)
//! n_x = 512              # default max(512, ceil(3 half k_max / pi))
//!
//! [run]
//! seed = 0
//! samples = 1000000      # Monte Carlo draws for cm --all-backends
//! ```
//!
//! Every key is optional except that commands needing a system require at
//! least one `mode` line.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::GridPolicy;
use crate::reconstruct::ReconstructOptions;
use crate::states::{FrameSpec, ModeSpec, SystemSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub hbar: f64,
    pub modes: Vec<ModeSpec>,
    pub mu: Vec<f64>,
    pub nu: Vec<f64>,
    pub r: f64,
    pub big_r: f64,
    pub grid: GridPolicy,
    pub energy: f64,
    pub n_list: Vec<usize>,
    pub levels: Vec<usize>,
    pub hbar_list: Vec<f64>,
    pub epsilon: f64,
    pub dim: usize,
    pub reconstruct: ReconstructOptions,
    pub seed: u64,
    pub samples: usize,
    // where each key was set, for error messages raised after parsing
    lines: BTreeMap<&'static str, usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            hbar: 1.0,
            modes: Vec::new(),
            mu: vec![1.0],
            nu: vec![0.0],
            r: 0.5,
            big_r: 2.0,
            grid: GridPolicy::default(),
            energy: 10.0,
            n_list: vec![4, 8, 16, 32, 64],
            levels: vec![1],
            hbar_list: vec![1.0, 0.1, 0.01, 0.001],
            epsilon: 0.1,
            dim: 8,
            reconstruct: ReconstructOptions::default(),
            seed: 0,
            samples: 1_000_000,
            lines: BTreeMap::new(),
        }
    }
}

fn config_error(line: usize, field: &str, message: impl Into<String>) -> Error {
    Error::Config {
        line,
        field: field.to_string(),
        message: message.into(),
    }
}

fn parse_f64(line: usize, field: &str, s: &str) -> Result<f64> {
    match s.trim().parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(config_error(line, field, format!("expected a finite number, got `{}`", s.trim()))),
    }
}

fn parse_usize(line: usize, field: &str, s: &str) -> Result<usize> {
    s.trim()
        .parse::<usize>()
        .map_err(|_| config_error(line, field, format!("expected a nonnegative integer, got `{}`", s.trim())))
}

fn parse_list<T>(line: usize, field: &str, s: &str, item: fn(usize, &str, &str) -> Result<T>) -> Result<Vec<T>> {
    let items: Vec<T> = s
        .split(',')
        .map(|part| item(line, field, part))
        .collect::<Result<_>>()?;
    if items.is_empty() {
        return Err(config_error(line, field, "empty list"));
    }
    Ok(items)
}

fn parse_mode(line: usize, value: &str) -> Result<ModeSpec> {
    let parts: Vec<&str> = value.split_whitespace().collect();
    let mode = match parts.as_slice() {
        ["fock", n] => ModeSpec::Fock(parse_usize(line, "mode", n)?),
        [kind @ ("even" | "odd"), re, im] => {
            let alpha = Complex64::new(parse_f64(line, "mode", re)?, parse_f64(line, "mode", im)?);
            if *kind == "even" {
                ModeSpec::CoherentEven(alpha)
            } else {
                ModeSpec::CoherentOdd(alpha)
            }
        }
        _ => {
            return Err(config_error(
                line,
                "mode",
                format!("expected `fock N`, `even RE IM` or `odd RE IM`, got `{value}`"),
            ))
        }
    };
    mode.validate().map_err(|e| config_error(line, "mode", e.to_string()))?;
    Ok(mode)
}

const SECTIONS: &[(&str, &[&str])] = &[
    ("system", &["hbar", "mode"]),
    ("frame", &["mu", "nu", "r", "R"]),
    ("grid", &["points_per_sigma", "half_width_sigmas", "max_points"]),
    ("scan", &["energy", "n_list", "levels", "hbar_list", "epsilon"]),
    ("reconstruct", &["dim", "k_max", "n_k", "n_theta", "n_x"]),
    ("run", &["seed", "samples"]),
];

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        let mut section: Option<&'static str> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(name) = content.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                let name = name.trim();
                section = Some(
                    SECTIONS
                        .iter()
                        .find(|(s, _)| *s == name)
                        .map(|(s, _)| *s)
                        .ok_or_else(|| config_error(line, name, "unknown section"))?,
                );
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(config_error(line, content, "expected `key = value` or `[section]`"));
            };
            let (key, value) = (key.trim(), value.trim());
            let sec = section.ok_or_else(|| config_error(line, key, "key outside of any section"))?;
            let keys = SECTIONS.iter().find(|(s, _)| *s == sec).map(|(_, k)| *k).unwrap_or(&[]);
            let Some(&key) = keys.iter().find(|&&k| k == key) else {
                return Err(config_error(line, key, format!("unknown key in [{sec}]")));
            };
            if key == "mode" {
                cfg.lines.entry(key).or_insert(line);
            } else if cfg.lines.insert(key, line).is_some() {
                return Err(config_error(line, key, "set more than once"));
            }
            cfg.set(line, key, value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, line: usize, key: &'static str, value: &str) -> Result<()> {
        let positive = |v: f64| -> Result<f64> {
            if v > 0.0 {
                Ok(v)
            } else {
                Err(config_error(line, key, format!("must be positive, got {v}")))
            }
        };
        let at_least = |v: usize, min: usize| -> Result<usize> {
            if v >= min {
                Ok(v)
            } else {
                Err(config_error(line, key, format!("must be at least {min}, got {v}")))
            }
        };
        match key {
            "hbar" => self.hbar = positive(parse_f64(line, key, value)?)?,
            "mode" => self.modes.push(parse_mode(line, value)?),
            "mu" => self.mu = parse_list(line, key, value, parse_f64)?,
            "nu" => self.nu = parse_list(line, key, value, parse_f64)?,
            "r" => self.r = positive(parse_f64(line, key, value)?)?,
            "R" => self.big_r = positive(parse_f64(line, key, value)?)?,
            "points_per_sigma" => self.grid.points_per_sigma = positive(parse_f64(line, key, value)?)?,
            "half_width_sigmas" => self.grid.half_width_sigmas = positive(parse_f64(line, key, value)?)?,
            "max_points" => self.grid.max_points = at_least(parse_usize(line, key, value)?, 2)?,
            "energy" => self.energy = positive(parse_f64(line, key, value)?)?,
            "n_list" => {
                self.n_list = parse_list(line, key, value, parse_usize)?;
                if self.n_list.contains(&0) {
                    return Err(config_error(line, key, "mode counts must be at least 1"));
                }
            }
            "levels" => self.levels = parse_list(line, key, value, parse_usize)?,
            "hbar_list" => {
                self.hbar_list = parse_list(line, key, value, parse_f64)?;
                if self.hbar_list.iter().any(|&h| !(h > 0.0)) {
                    return Err(config_error(line, key, "every hbar must be positive"));
                }
                if self.hbar_list.windows(2).any(|w| !(w[1] < w[0])) {
                    return Err(config_error(line, key, "list must be strictly decreasing"));
                }
            }
            "epsilon" => self.epsilon = positive(parse_f64(line, key, value)?)?,
            "dim" => self.dim = at_least(parse_usize(line, key, value)?, 2)?,
            "k_max" => self.reconstruct.k_max = Some(positive(parse_f64(line, key, value)?)?),
            "n_k" => self.reconstruct.n_k = at_least(parse_usize(line, key, value)?, 1)?,
            "n_theta" => self.reconstruct.n_theta = Some(at_least(parse_usize(line, key, value)?, 1)?),
            "n_x" => self.reconstruct.n_x = Some(at_least(parse_usize(line, key, value)?, 2)?),
            "seed" => {
                self.seed = value
                    .parse::<u64>()
                    .map_err(|_| config_error(line, key, format!("expected an unsigned 64-bit integer, got `{value}`")))?
            }
            "samples" => self.samples = at_least(parse_usize(line, key, value)?, 1)?,
            _ => unreachable!("key list and setter disagree on `{key}`"),
        }
        Ok(())
    }

    fn line_of(&self, key: &str) -> usize {
        self.lines.get(key).copied().unwrap_or(0)
    }

    fn validate(&self) -> Result<()> {
        if !(self.r < self.big_r) {
            return Err(config_error(
                self.line_of("R").max(self.line_of("r")),
                "R",
                format!("need r < R, got r = {} and R = {}", self.r, self.big_r),
            ));
        }
        let count = self.mu.len().max(self.nu.len());
        for i in 0..count {
            let (mu, nu) = self.frame_pair(i);
            let rho = mu * mu + nu * nu;
            if !(self.r < rho && rho < self.big_r) {
                let field = if self.mu.len() >= self.nu.len() { "mu" } else { "nu" };
                return Err(config_error(
                    self.line_of(field),
                    field,
                    format!(
                        "frame entry {i} has mu^2 + nu^2 = {rho}, outside ({}, {})",
                        self.r, self.big_r
                    ),
                ));
            }
        }
        Ok(())
    }

    fn frame_pair(&self, i: usize) -> (f64, f64) {
        (self.mu[i % self.mu.len()], self.nu[i % self.nu.len()])
    }

    pub fn seed_override(&mut self, seed: u64) {
        self.seed = seed;
    }

    pub fn epsilon_override(&mut self, epsilon: f64) -> Result<()> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(config_error(0, "epsilon", format!("must be positive, got {epsilon}")));
        }
        self.epsilon = epsilon;
        Ok(())
    }

    /// Frames for `n` modes, cycling the `mu` and `nu` lists.
    pub fn frame_for(&self, n: usize) -> Result<FrameSpec> {
        let (mu, nu) = (0..n).map(|i| self.frame_pair(i)).unzip();
        FrameSpec::new(mu, nu, self.r, self.big_r)
    }

    pub fn frame_pattern(&self) -> Vec<(f64, f64)> {
        (0..self.mu.len().max(self.nu.len())).map(|i| self.frame_pair(i)).collect()
    }

    pub fn system(&self) -> Result<SystemSpec> {
        if self.modes.is_empty() {
            return Err(config_error(0, "mode", "this command needs at least one `mode` line in [system]"));
        }
        SystemSpec::new(self.modes.clone(), self.hbar)
    }

    pub fn single_mode(&self) -> Result<ModeSpec> {
        match self.modes.as_slice() {
            [m] => Ok(*m),
            [] => Err(config_error(0, "mode", "this command needs exactly one `mode` line")),
            _ => Err(config_error(
                self.line_of("mode"),
                "mode",
                format!("this command takes a single mode, found {}", self.modes.len()),
            )),
        }
    }

    /// Canonical text of every resolved setting, the input to the config digest.
    pub fn resolved(&self) -> String {
        let list = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ");
        let ints = |v: &[usize]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ");
        let mut s = String::new();
        let _ = writeln!(s, "[system]");
        let _ = writeln!(s, "hbar = {:?}", self.hbar);
        for m in &self.modes {
            match m {
                ModeSpec::Fock(n) => {
                    let _ = writeln!(s, "mode = fock {n}");
                }
                ModeSpec::CoherentEven(a) | ModeSpec::CoherentOdd(a) => {
                    let kind = if matches!(m, ModeSpec::CoherentEven(_)) { "even" } else { "odd" };
                    let _ = writeln!(s, "mode = {kind} {:?} {:?}", a.re, a.im);
                }
            }
        }
        let _ = writeln!(s, "[frame]");
        let _ = writeln!(s, "mu = {}", list(&self.mu));
        let _ = writeln!(s, "nu = {}", list(&self.nu));
        let _ = writeln!(s, "r = {:?}", self.r);
        let _ = writeln!(s, "R = {:?}", self.big_r);
        let _ = writeln!(s, "[grid]");
        let _ = writeln!(s, "points_per_sigma = {:?}", self.grid.points_per_sigma);
        let _ = writeln!(s, "half_width_sigmas = {:?}", self.grid.half_width_sigmas);
        let _ = writeln!(s, "max_points = {}", self.grid.max_points);
        let _ = writeln!(s, "[scan]");
        let _ = writeln!(s, "energy = {:?}", self.energy);
        let _ = writeln!(s, "n_list = {}", ints(&self.n_list));
        let _ = writeln!(s, "levels = {}", ints(&self.levels));
        let _ = writeln!(s, "hbar_list = {}", list(&self.hbar_list));
        let _ = writeln!(s, "epsilon = {:?}", self.epsilon);
        let _ = writeln!(s, "[reconstruct]");
        let _ = writeln!(s, "dim = {}", self.dim);
        match self.reconstruct.k_max {
            Some(k) => {
                let _ = writeln!(s, "k_max = {k:?}");
            }
            None => {
                let _ = writeln!(s, "# k_max = (8 + 2 sqrt(2 dim))/sqrt(hbar)");
            }
        }
        let _ = writeln!(s, "n_k = {}", self.reconstruct.n_k);
        match self.reconstruct.n_theta {
            Some(n) => {
                let _ = writeln!(s, "n_theta = {n}");
            }
            None => {
                let _ = writeln!(s, "# n_theta = max(64, 4 dim)");
            }
        }
        match self.reconstruct.n_x {
            Some(n) => {
                let _ = writeln!(s, "n_x = {n}");
            }
            None => {
                let _ = writeln!(s, "# n_x = max(512, ceil(3 half k_max / pi))");
            }
        }
        let _ = writeln!(s, "[run]");
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "samples = {}", self.samples);
        s
    }
}
