//! Single-mode states, product systems, measurement frames and Fock-basis
//! expansions.

use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::special::ln_factorial;

/// Fock expansions stop growing at this many levels unless told otherwise.
pub const DEFAULT_TRUNCATION_CAP: usize = 512;

/// Largest tolerated probability outside the retained Fock levels.
pub const TAIL_BOUND: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    /// `+1` for even, `-1` for odd.
    pub fn sign(self) -> f64 {
        match self {
            Parity::Even => 1.0,
            Parity::Odd => -1.0,
        }
    }
}

impl fmt::Display for Parity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Parity::Even => "even",
            Parity::Odd => "odd",
        })
    }
}

/// State of one oscillator mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModeSpec {
    /// Number state `|n⟩`.
    Fock(usize),
    /// `N₊(|α⟩ + |−α⟩)`.
    CoherentEven(Complex64),
    /// `N₋(|α⟩ − |−α⟩)`, requires `α ≠ 0`.
    CoherentOdd(Complex64),
}

impl ModeSpec {
    pub fn cat(alpha: Complex64, parity: Parity) -> Self {
        match parity {
            Parity::Even => ModeSpec::CoherentEven(alpha),
            Parity::Odd => ModeSpec::CoherentOdd(alpha),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ModeSpec::Fock(_) => Ok(()),
            ModeSpec::CoherentEven(a) | ModeSpec::CoherentOdd(a) if !(a.re.is_finite() && a.im.is_finite()) => {
                Err(Error::InvalidInput(format!("non-finite coherent amplitude {a}")))
            }
            ModeSpec::CoherentOdd(a) if a.norm() == 0.0 => Err(Error::InvalidInput(
                "odd coherent state needs |alpha| > 0".into(),
            )),
            _ => Ok(()),
        }
    }

    pub fn is_fock(&self) -> bool {
        matches!(self, ModeSpec::Fock(_))
    }

    /// `(α, parity)` for the cat kinds.
    pub fn cat_parts(&self) -> Option<(Complex64, Parity)> {
        match *self {
            ModeSpec::Fock(_) => None,
            ModeSpec::CoherentEven(a) => Some((a, Parity::Even)),
            ModeSpec::CoherentOdd(a) => Some((a, Parity::Odd)),
        }
    }
}

impl fmt::Display for ModeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModeSpec::Fock(n) => write!(f, "fock {n}"),
            ModeSpec::CoherentEven(a) => write!(f, "even {:?} {:?}", a.re, a.im),
            ModeSpec::CoherentOdd(a) => write!(f, "odd {:?} {:?}", a.re, a.im),
        }
    }
}

/// Product state of `N` modes together with the value of ħ (m = Ω = 1).
#[derive(Debug, Clone, PartialEq)]
pub struct SystemSpec {
    pub modes: Vec<ModeSpec>,
    pub hbar: f64,
}

impl SystemSpec {
    pub fn new(modes: Vec<ModeSpec>, hbar: f64) -> Result<Self> {
        let sys = SystemSpec { modes, hbar };
        sys.validate()?;
        Ok(sys)
    }

    pub fn validate(&self) -> Result<()> {
        if self.modes.is_empty() {
            return Err(Error::InvalidInput("system has no modes".into()));
        }
        if !(self.hbar > 0.0 && self.hbar.is_finite()) {
            return Err(Error::InvalidInput(format!("hbar must be positive, got {}", self.hbar)));
        }
        self.modes.iter().try_for_each(ModeSpec::validate)
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn with_hbar(&self, hbar: f64) -> Self {
        SystemSpec { modes: self.modes.clone(), hbar }
    }

    /// Canonical text used for digests and CSV headers.
    pub fn describe(&self) -> String {
        let modes: Vec<String> = self.modes.iter().map(ToString::to_string).collect();
        format!("hbar={:?};modes=[{}]", self.hbar, modes.join(","))
    }
}

/// Per-mode frame parameters `(μ_i, ν_i)` with uniform bounds `r < μ_i² + ν_i² < R`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSpec {
    pub mu: Vec<f64>,
    pub nu: Vec<f64>,
    pub r: f64,
    pub big_r: f64,
}

impl FrameSpec {
    pub fn new(mu: Vec<f64>, nu: Vec<f64>, r: f64, big_r: f64) -> Result<Self> {
        let frame = FrameSpec { mu, nu, r, big_r };
        frame.validate()?;
        Ok(frame)
    }

    /// The same `(μ, ν)` for all `n` modes.
    pub fn uniform(n: usize, mu: f64, nu: f64, r: f64, big_r: f64) -> Result<Self> {
        Self::new(vec![mu; n], vec![nu; n], r, big_r)
    }

    pub fn validate(&self) -> Result<()> {
        if self.mu.len() != self.nu.len() {
            return Err(Error::InvalidInput(format!(
                "frame has {} mu values but {} nu values",
                self.mu.len(),
                self.nu.len()
            )));
        }
        if !(self.r > 0.0 && self.r < self.big_r && self.big_r.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "frame bounds need 0 < r < R, got r={} R={}",
                self.r, self.big_r
            )));
        }
        for i in 0..self.mu.len() {
            let rho = self.rho(i);
            if !(rho > self.r && rho < self.big_r) {
                return Err(Error::InvalidInput(format!(
                    "mode {i}: mu^2 + nu^2 = {rho} not inside ({}, {})",
                    self.r, self.big_r
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }

    /// `μ_i² + ν_i²`.
    pub fn rho(&self, i: usize) -> f64 {
        self.mu[i] * self.mu[i] + self.nu[i] * self.nu[i]
    }

    pub fn check_matches(&self, sys: &SystemSpec) -> Result<()> {
        if self.len() != sys.len() {
            return Err(Error::InvalidInput(format!(
                "frame has {} modes, system has {}",
                self.len(),
                sys.len()
            )));
        }
        Ok(())
    }

    pub fn describe(&self) -> String {
        format!(
            "mu={:?};nu={:?};r={:?};R={:?}",
            self.mu, self.nu, self.r, self.big_r
        )
    }
}

/// Pure state `Σ c_k |k⟩` truncated at level `D = coefficients.len() - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct FockExpansion {
    pub coefficients: Vec<Complex64>,
}

impl FockExpansion {
    pub fn basis(n: usize) -> Self {
        let mut coefficients = vec![Complex64::new(0.0, 0.0); n + 1];
        coefficients[n] = Complex64::new(1.0, 0.0);
        FockExpansion { coefficients }
    }

    pub fn truncation(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coefficients.iter().map(|c| c.norm_sqr()).sum()
    }

    /// `⟨n̂⟩ = Σ k |c_k|²`.
    pub fn mean_number(&self) -> f64 {
        self.coefficients
            .iter()
            .enumerate()
            .map(|(k, c)| k as f64 * c.norm_sqr())
            .sum()
    }

    /// Copy padded with zeros (or cut) to `dim` levels.
    pub fn resized(&self, dim: usize) -> Vec<Complex64> {
        let mut v = self.coefficients.clone();
        v.resize(dim, Complex64::new(0.0, 0.0));
        v
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &[Complex64]) -> Complex64 {
        self.coefficients
            .iter()
            .zip(other)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }
}

/// `α^k / √k!` restricted to a parity class, with a rigorous bound on the
/// discarded tail relative to the retained weight.
fn poisson_amplitudes(alpha: Complex64, levels: usize, parity: Option<Parity>) -> (Vec<Complex64>, f64) {
    let r = alpha.norm();
    let phase = alpha.arg();
    let keep = |k: usize| match parity {
        None => true,
        Some(Parity::Even) => k.is_multiple_of(2),
        Some(Parity::Odd) => k % 2 == 1,
    };
    if r == 0.0 {
        let mut c = vec![Complex64::new(0.0, 0.0); levels];
        if keep(0) {
            c[0] = Complex64::new(1.0, 0.0);
        }
        return (c, 0.0);
    }
    let ln_mag = |k: usize| k as f64 * r.ln() - 0.5 * ln_factorial(k);
    let peak = (0..levels).filter(|&k| keep(k)).map(ln_mag).fold(f64::NEG_INFINITY, f64::max);
    let coefficients: Vec<Complex64> = (0..levels)
        .map(|k| {
            if keep(k) {
                Complex64::from_polar((ln_mag(k) - peak).exp(), k as f64 * phase)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    let retained: f64 = coefficients.iter().map(|c| c.norm_sqr()).sum();
    // first discarded level of the right parity and the ratio of successive
    // retained weights beyond it
    let stride = if parity.is_some() { 2 } else { 1 };
    let mut first = levels;
    while !keep(first) {
        first += 1;
    }
    let ratio = (1..=stride)
        .map(|j| r * r / (first + j) as f64)
        .product::<f64>();
    let tail = if ratio < 1.0 {
        (2.0 * (ln_mag(first) - peak)).exp() / (1.0 - ratio)
    } else {
        f64::INFINITY
    };
    (coefficients, tail / retained)
}

fn grown_expansion(
    alpha: Complex64,
    parity: Option<Parity>,
    truncation: usize,
    cap: usize,
) -> Result<FockExpansion> {
    let mut d = truncation.max(1);
    loop {
        let (mut c, tail) = poisson_amplitudes(alpha, d + 1, parity);
        if tail < TAIL_BOUND {
            let norm = c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            c.iter_mut().for_each(|z| *z /= norm);
            return Ok(FockExpansion { coefficients: c });
        }
        if d >= cap {
            return Err(Error::TruncationCap { cap });
        }
        d = (2 * d).min(cap);
    }
}

/// Fock-basis amplitudes of `mode`, starting at truncation `truncation` and
/// doubling until the discarded tail is below [`TAIL_BOUND`].
pub fn fock_expansion(mode: &ModeSpec, truncation: usize) -> Result<FockExpansion> {
    fock_expansion_capped(mode, truncation, DEFAULT_TRUNCATION_CAP)
}

pub fn fock_expansion_capped(mode: &ModeSpec, truncation: usize, cap: usize) -> Result<FockExpansion> {
    mode.validate()?;
    match *mode {
        ModeSpec::Fock(n) => {
            if n > cap {
                return Err(Error::TruncationCap { cap });
            }
            let mut e = FockExpansion::basis(n);
            if truncation > n {
                e.coefficients.resize(truncation + 1, Complex64::new(0.0, 0.0));
            }
            Ok(e)
        }
        ModeSpec::CoherentEven(a) => grown_expansion(a, Some(Parity::Even), truncation, cap),
        ModeSpec::CoherentOdd(a) => grown_expansion(a, Some(Parity::Odd), truncation, cap),
    }
}

/// Glauber coherent state `|α⟩`.
pub fn coherent_expansion(alpha: Complex64, truncation: usize) -> Result<FockExpansion> {
    grown_expansion(alpha, None, truncation, DEFAULT_TRUNCATION_CAP)
}

/// `⟨n̂⟩` of a single mode.
pub fn mean_number(mode: &ModeSpec) -> Result<f64> {
    match *mode {
        ModeSpec::Fock(n) => Ok(n as f64),
        _ => Ok(fock_expansion(mode, 32)?.mean_number()),
    }
}

/// `Σ_i ħ(1/2 + ⟨n̂⟩_i)`; for Fock products this is `ħ(N/2 + Σ n_i)`.
pub fn energy(sys: &SystemSpec) -> Result<f64> {
    sys.validate()?;
    let mut total = 0.0;
    for mode in &sys.modes {
        total += 0.5 + mean_number(mode)?;
    }
    Ok(sys.hbar * total)
}

/// The ħ for which a Fock product has total energy `e`.
pub fn hbar_for_fixed_energy(e: f64, modes: &[ModeSpec]) -> Result<f64> {
    if !(e > 0.0 && e.is_finite()) {
        return Err(Error::InvalidInput(format!("energy must be positive, got {e}")));
    }
    if modes.is_empty() {
        return Err(Error::InvalidInput("no modes".into()));
    }
    let mut levels = 0.0;
    for mode in modes {
        match mode {
            ModeSpec::Fock(n) => levels += 0.5 + *n as f64,
            other => {
                return Err(Error::InvalidInput(format!(
                    "fixed-energy constraint is only defined for Fock modes, got `{other}`"
                )))
            }
        }
    }
    Ok(e / levels)
}

/// `(μq̂ + νp̂)|ψ⟩` in the Fock basis, one level longer than the input.
///
/// Uses `μq̂ + νp̂ = √(ħ/2)[(μ − iν) â + (μ + iν) â†]`.
pub fn apply_quadrature(psi: &[Complex64], mu: f64, nu: f64, hbar: f64) -> Vec<Complex64> {
    let s = (0.5 * hbar).sqrt();
    let lower = Complex64::new(mu, -nu) * s;
    let raise = Complex64::new(mu, nu) * s;
    let mut out = vec![Complex64::new(0.0, 0.0); psi.len() + 1];
    for (k, &c) in psi.iter().enumerate() {
        if k > 0 {
            out[k - 1] += lower * c * (k as f64).sqrt();
        }
        out[k + 1] += raise * c * ((k + 1) as f64).sqrt();
    }
    out
}

/// `⟨bra|(μq̂ + νp̂)^power|ket⟩` for `power` 1 or 2.
pub fn quadrature_matrix_element(
    bra: &FockExpansion,
    ket: &FockExpansion,
    mu: f64,
    nu: f64,
    hbar: f64,
    power: u32,
) -> Complex64 {
    let mut v = ket.coefficients.clone();
    for _ in 0..power {
        v = apply_quadrature(&v, mu, nu, hbar);
    }
    bra.inner(&v)
}

/// Mean and variance of `μq̂ + νp̂` in the normalized state `psi`.
pub fn quadrature_moments(psi: &FockExpansion, mu: f64, nu: f64, hbar: f64) -> (f64, f64) {
    let mean = quadrature_matrix_element(psi, psi, mu, nu, hbar, 1).re;
    let second = quadrature_matrix_element(psi, psi, mu, nu, hbar, 2).re;
    (mean, second - mean * mean)
}
