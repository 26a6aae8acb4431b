//! Single-mode symplectic tomograms `ω(X, μ, ν)` and their moments.
//!
//! Three evaluation routes are kept side by side:
//!
//! * [`fock_tomogram`]: closed form for number states, a scaled `h_n²`;
//! * [`evenodd_tomogram`]: closed form for even/odd coherent states, rescaled
//!   numerically to unit mass;
//! * [`tomogram_oracle`]: any pure state `Σ c_k |k⟩` as `|Σ c_k A_k(X)|²` with
//!   amplitude functions calibrated against the Fock and coherent cases.
//!
//! All of them satisfy `ω(λX, λμ, λν) = ω(X, μ, ν) / |λ|`.

use std::f64::consts::{PI, SQRT_2};
use std::sync::OnceLock;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{cumulative_trapezoid, interpolate, trapezoid, Grid, GridPolicy};
use crate::special::{
    gauss_laguerre_scaled, hermite_function, hermite_functions_into, hermite_sq_density_factor,
};
use crate::states::{
    coherent_expansion, fock_expansion, quadrature_moments, FockExpansion, ModeSpec, Parity,
};

/// Pre-rescale integrals further than this from 1 raise the normalization warning.
pub const NORMALIZATION_WARN_TOLERANCE: f64 = 0.05;

/// Provenance of a sampled single-mode density.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalMeta {
    pub kind: String,
    pub mu: f64,
    pub nu: f64,
    pub hbar: f64,
    /// Factor applied to reach unit mass, for densities that were rescaled.
    pub rescale: Option<f64>,
    /// Set when the pre-rescale mass differed from 1 by more than 5%.
    pub normalization_warning: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarginalDensity {
    pub grid: Grid,
    pub values: Vec<f64>,
    pub meta: MarginalMeta,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mean: f64,
    pub var: f64,
    pub abs3: f64,
}

impl MarginalDensity {
    pub fn integral(&self) -> f64 {
        trapezoid(&self.values, self.grid.dx)
    }

    pub fn cdf(&self) -> Vec<f64> {
        cumulative_trapezoid(&self.values, self.grid.dx)
    }

    /// Linear interpolation, zero off the grid.
    pub fn eval(&self, x: f64) -> f64 {
        interpolate(&self.grid, &self.values, x)
    }

    pub fn moments(&self) -> Moments {
        moments_of(&self.grid, &self.values)
    }
}

/// Trapezoid mean, variance and `E|X|³` of grid samples.
pub fn moments_of(grid: &Grid, values: &[f64]) -> Moments {
    let weighted = |f: &dyn Fn(f64) -> f64| -> f64 {
        let v: Vec<f64> = values.iter().enumerate().map(|(i, &d)| f(grid.x(i)) * d).collect();
        trapezoid(&v, grid.dx)
    };
    let mean = weighted(&|x| x);
    let var = weighted(&|x| (x - mean) * (x - mean));
    let abs3 = weighted(&|x| x.abs().powi(3));
    Moments { mean, var, abs3 }
}

pub fn moments(d: &MarginalDensity) -> Moments {
    d.moments()
}

fn frame_rho(mu: f64, nu: f64) -> Result<f64> {
    let rho = mu * mu + nu * nu;
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(Error::InvalidInput(format!("degenerate frame mu={mu}, nu={nu}")));
    }
    Ok(rho)
}

fn check_hbar(hbar: f64) -> Result<()> {
    if hbar > 0.0 && hbar.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("hbar must be positive, got {hbar}")))
    }
}

/// `ω_n(X, μ, ν)` for the number state `|n⟩`:
/// `h_n(X/√(ħρ))² / √(ħρ)` with `ρ = μ² + ν²`.
pub fn fock_tomogram(n: usize, mu: f64, nu: f64, hbar: f64, x: f64) -> Result<f64> {
    let scale = (hbar * frame_rho(mu, nu)?).sqrt();
    check_hbar(hbar)?;
    Ok(hermite_sq_density_factor(n, x / scale) / scale)
}

fn sample<F: Fn(f64) -> f64 + Sync>(grid: &Grid, f: F) -> Vec<f64> {
    (0..grid.count).into_par_iter().map(|i| f(grid.x(i))).collect()
}

/// [`fock_tomogram`] sampled on `grid`.
pub fn fock_marginal(n: usize, mu: f64, nu: f64, hbar: f64, grid: &Grid) -> Result<MarginalDensity> {
    let scale = (hbar * frame_rho(mu, nu)?).sqrt();
    check_hbar(hbar)?;
    let values = sample(grid, |x| hermite_sq_density_factor(n, x / scale) / scale);
    Ok(MarginalDensity {
        grid: *grid,
        values,
        meta: MarginalMeta {
            kind: ModeSpec::Fock(n).to_string(),
            mu,
            nu,
            hbar,
            rescale: None,
            normalization_warning: false,
        },
    })
}

/// `ħ(μ² + ν²)(1/2 + n)`.
pub fn fock_var_closed(n: usize, mu: f64, nu: f64, hbar: f64) -> f64 {
    hbar * (mu * mu + nu * nu) * (0.5 + n as f64)
}

/// `ln N±` with `N₊ = e^{|α|²/2} / (2√cosh|α|²)` and `N₋` using `sinh`.
pub fn ln_cat_normalization(alpha: Complex64, parity: Parity) -> f64 {
    let x = alpha.norm_sqr();
    let ln_hyper = match parity {
        // ln cosh x, ln sinh x without overflow
        Parity::Even => x + (-2.0 * x).exp().ln_1p() - std::f64::consts::LN_2,
        Parity::Odd => x + (-(-2.0 * x).exp_m1()).ln() - std::f64::consts::LN_2,
    };
    0.5 * x - std::f64::consts::LN_2 - 0.5 * ln_hyper
}

/// Interference exponent scaling in the closed cat form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CatExponent {
    /// `i√2 αX / (√ħ (iμ − ν))`, the dimensionally consistent form.
    SqrtHbar,
    /// `i√2 αX / (ħ (iμ − ν))`, as printed in the reference formula.
    AsPrinted,
}

/// The closed even/odd coherent tomogram exactly as structured in the
/// reference formula, including its first-power `N±` prefactor.
///
/// Not normalized: integrates to `1/N±` when the exponent is
/// [`CatExponent::SqrtHbar`].
pub fn evenodd_closed_form(
    alpha: Complex64,
    parity: Parity,
    mu: f64,
    nu: f64,
    hbar: f64,
    x: f64,
    exponent: CatExponent,
) -> f64 {
    let rho = mu * mu + nu * nu;
    let i = Complex64::i();
    let envelope = -0.5 * (alpha + alpha.conj()).powi(2)
        + nu * (alpha * alpha / Complex64::new(nu, -mu) + alpha.conj() * alpha.conj() / Complex64::new(nu, mu));
    let exponent_scale = match exponent {
        CatExponent::SqrtHbar => hbar.sqrt(),
        CatExponent::AsPrinted => hbar,
    };
    let l = i * SQRT_2 * alpha * x / (exponent_scale * Complex64::new(-nu, mu));
    // |e^L ± e^{-L}|² = e^{2|Re L|} |1 ± e^{-2 sgn(Re L) L}|²
    let flip = if l.re >= 0.0 { -2.0 * l } else { 2.0 * l };
    let interference = (Complex64::new(1.0, 0.0) + parity.sign() * flip.exp()).norm_sqr();
    let log_part = ln_cat_normalization(alpha, parity) - 0.5 * (PI * hbar * rho).ln()
        + envelope.re
        - x * x / (hbar * rho)
        + 2.0 * l.re.abs();
    log_part.exp() * interference
}

/// Even/odd coherent tomogram on `grid`, rescaled to unit trapezoid mass.
pub fn evenodd_tomogram(
    alpha: Complex64,
    parity: Parity,
    mu: f64,
    nu: f64,
    hbar: f64,
    grid: &Grid,
) -> Result<MarginalDensity> {
    frame_rho(mu, nu)?;
    check_hbar(hbar)?;
    ModeSpec::cat(alpha, parity).validate()?;
    let mut values = sample(grid, |x| {
        evenodd_closed_form(alpha, parity, mu, nu, hbar, x, CatExponent::SqrtHbar)
    });
    let mass = trapezoid(&values, grid.dx);
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "cat tomogram has mass {mass} on the grid; grid does not cover the density"
        )));
    }
    let factor = 1.0 / mass;
    values.iter_mut().for_each(|v| *v *= factor);
    Ok(MarginalDensity {
        grid: *grid,
        values,
        meta: MarginalMeta {
            kind: ModeSpec::cat(alpha, parity).to_string(),
            mu,
            nu,
            hbar,
            rescale: Some(factor),
            normalization_warning: (mass - 1.0).abs() > NORMALIZATION_WARN_TOLERANCE,
        },
    })
}

/// Which complex phase `u^k` multiplies the `k`-th amplitude function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseConvention {
    /// `u = (μ − iν)/√ρ`
    MuMinusINu,
    /// `u = (μ + iν)/√ρ`
    MuPlusINu,
}

impl PhaseConvention {
    fn phase(self, mu: f64, nu: f64) -> Complex64 {
        let r = (mu * mu + nu * nu).sqrt();
        match self {
            PhaseConvention::MuMinusINu => Complex64::new(mu / r, -nu / r),
            PhaseConvention::MuPlusINu => Complex64::new(mu / r, nu / r),
        }
    }
}

/// Pointwise `|Σ c_k u^k h_k(X/√(ħρ))|² / √(ħρ)`.
fn oracle_eval(coeffs: &[Complex64], scale: f64, x: f64, buf: &mut [f64]) -> f64 {
    hermite_functions_into(x / scale, buf);
    let amp: Complex64 = coeffs.iter().zip(buf.iter()).map(|(c, &h)| c * h).sum();
    amp.norm_sqr() / scale
}

fn phased(psi: &FockExpansion, mu: f64, nu: f64, convention: PhaseConvention) -> Vec<Complex64> {
    let u = convention.phase(mu, nu);
    let mut p = Complex64::new(1.0, 0.0);
    psi.coefficients
        .iter()
        .map(|c| {
            let v = c * p;
            p *= u;
            v
        })
        .collect()
}

fn oracle_point_with(psi: &FockExpansion, mu: f64, nu: f64, hbar: f64, x: f64, conv: PhaseConvention) -> f64 {
    let scale = (hbar * (mu * mu + nu * nu)).sqrt();
    let coeffs = phased(psi, mu, nu, conv);
    let mut buf = vec![0.0; coeffs.len()];
    oracle_eval(&coeffs, scale, x, &mut buf)
}

fn calibrate() -> std::result::Result<PhaseConvention, String> {
    let frames = [(1.0, 0.0), (0.6, 0.8), (-0.3, 1.2), (0.0, -0.7)];
    let xs: Vec<f64> = (0..41).map(|i| -4.0 + 0.2 * i as f64).collect();
    // |A_k|² must reproduce the Fock closed form whatever the phase
    for k in 0..=8 {
        let psi = FockExpansion::basis(k);
        for &(mu, nu) in &frames {
            for &x in &xs {
                let want = fock_tomogram(k, mu, nu, 1.0, x).map_err(|e| e.to_string())?;
                let got = oracle_point_with(&psi, mu, nu, 1.0, x, PhaseConvention::MuMinusINu);
                if (got - want).abs() > 1e-8 {
                    return Err(format!(
                        "Fock {k} at frame ({mu}, {nu}), X={x}: amplitude gives {got}, closed form {want}"
                    ));
                }
            }
        }
    }
    // relative phases: a coherent state must give a Gaussian with mean
    // √(2ħ)(Re α μ + Im α ν) and variance ħρ/2
    let alpha = Complex64::new(0.8, -0.5);
    let psi = coherent_expansion(alpha, 40).map_err(|e| e.to_string())?;
    let matches = |conv: PhaseConvention| {
        frames.iter().all(|&(mu, nu)| {
            let rho: f64 = mu * mu + nu * nu;
            let mean = SQRT_2 * (alpha.re * mu + alpha.im * nu);
            let var = rho / 2.0;
            xs.iter().all(|&x| {
                let gauss = (-(x - mean).powi(2) / (2.0 * var)).exp() / (2.0 * PI * var).sqrt();
                (oracle_point_with(&psi, mu, nu, 1.0, x, conv) - gauss).abs() < 1e-8
            })
        })
    };
    let candidates: Vec<PhaseConvention> = [PhaseConvention::MuMinusINu, PhaseConvention::MuPlusINu]
        .into_iter()
        .filter(|&c| matches(c))
        .collect();
    match candidates.as_slice() {
        [one] => Ok(*one),
        [] => Err("no phase convention reproduces the coherent-state Gaussian".into()),
        _ => Err("coherent-state check does not distinguish the phase conventions".into()),
    }
}

/// Phase convention fixed once per process by the Fock and coherent checks.
pub fn calibrated_convention() -> Result<PhaseConvention> {
    static CONVENTION: OnceLock<std::result::Result<PhaseConvention, String>> = OnceLock::new();
    CONVENTION
        .get_or_init(calibrate)
        .clone()
        .map_err(Error::Calibration)
}

/// Oracle tomogram of `psi` at one point.
pub fn oracle_density(psi: &FockExpansion, mu: f64, nu: f64, hbar: f64, x: f64) -> Result<f64> {
    frame_rho(mu, nu)?;
    check_hbar(hbar)?;
    Ok(oracle_point_with(psi, mu, nu, hbar, x, calibrated_convention()?))
}

/// Tomogram of the pure state `psi` by superposing calibrated Fock amplitudes.
pub fn tomogram_oracle(
    psi: &FockExpansion,
    mu: f64,
    nu: f64,
    hbar: f64,
    grid: &Grid,
) -> Result<MarginalDensity> {
    let rho = frame_rho(mu, nu)?;
    check_hbar(hbar)?;
    let conv = calibrated_convention()?;
    let scale = (hbar * rho).sqrt();
    let coeffs = phased(psi, mu, nu, conv);
    let values: Vec<f64> = (0..grid.count)
        .into_par_iter()
        .map_init(
            || vec![0.0; coeffs.len()],
            |buf, i| oracle_eval(&coeffs, scale, grid.x(i), buf),
        )
        .collect();
    Ok(MarginalDensity {
        grid: *grid,
        values,
        meta: MarginalMeta {
            kind: format!("fock-expansion D={}", psi.truncation()),
            mu,
            nu,
            hbar,
            rescale: None,
            normalization_warning: false,
        },
    })
}

/// `E|x̂|³ / (ħρ)^{3/2}` for `|n⟩`, exact: with `t = y²` the integrand is a
/// polynomial of degree `n + 1` times `e^{-t}`, integrated by Gauss–Laguerre.
pub fn fock_abs3_unit(n: usize) -> f64 {
    let m = (n + 2).div_ceil(2) + 4;
    let rule = gauss_laguerre_scaled(m).expect("Gauss-Laguerre rule of moderate order");
    rule.integrate(|t| {
        let h = hermite_function(n, t.sqrt());
        t * h * h
    })
}

/// `E|x̂|³` for `|n⟩` in the frame `(μ, ν)`.
pub fn fock_abs3(n: usize, mu: f64, nu: f64, hbar: f64) -> f64 {
    (hbar * (mu * mu + nu * nu)).powf(1.5) * fock_abs3_unit(n)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Abs3Bound {
    pub abs3: f64,
    /// `abs3 / (n^{3/2} (ħρ)^{3/2})`, or `abs3 / (ħρ)^{3/2}` for `n = 0`.
    pub bound_ratio: f64,
}

pub fn fock_abs3_bound_check(n: usize, mu: f64, nu: f64, hbar: f64) -> Abs3Bound {
    let abs3 = fock_abs3(n, mu, nu, hbar);
    let scale = (hbar * (mu * mu + nu * nu)).powf(1.5);
    let level = if n == 0 { 1.0 } else { (n as f64).powf(1.5) };
    Abs3Bound {
        abs3,
        bound_ratio: abs3 / (level * scale),
    }
}

/// Largest `bound_ratio` over `1 ≤ n ≤ n_max`, with the level attaining it.
pub fn fitted_abs3_constant(n_max: usize) -> (usize, f64) {
    (1..=n_max)
        .map(|n| (n, fock_abs3_bound_check(n, 1.0, 0.0, 1.0).bound_ratio))
        .fold((0, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best })
}

/// The `Var(x̂)` expression for even/odd coherent states exactly as printed:
/// `N± ħ [(1 + e^{−2|α|²})ρ + 4(Re α μ + Im α ν)² ∓ 4e^{−2|α|²}(Im α μ + Re α ν)²]`.
pub fn evenodd_var_closed(alpha: Complex64, parity: Parity, mu: f64, nu: f64, hbar: f64) -> f64 {
    let decay = (-2.0 * alpha.norm_sqr()).exp();
    let rho = mu * mu + nu * nu;
    let direct = alpha.re * mu + alpha.im * nu;
    let cross = alpha.im * mu + alpha.re * nu;
    ln_cat_normalization(alpha, parity).exp()
        * hbar
        * ((1.0 + decay) * rho + 4.0 * direct * direct - parity.sign() * 4.0 * decay * cross * cross)
}

/// Variance of `μq̂ + νp̂` for one mode: closed form for Fock states, the
/// Fock-expansion value for cat states.
pub fn mode_variance(mode: &ModeSpec, mu: f64, nu: f64, hbar: f64) -> Result<f64> {
    frame_rho(mu, nu)?;
    match *mode {
        ModeSpec::Fock(n) => Ok(fock_var_closed(n, mu, nu, hbar)),
        _ => {
            let psi = fock_expansion(mode, 32)?;
            Ok(quadrature_moments(&psi, mu, nu, hbar).1)
        }
    }
}

/// Sampling grid for one mode under `policy`.
pub fn grid_for_mode(mode: &ModeSpec, mu: f64, nu: f64, hbar: f64, policy: &GridPolicy) -> Result<Grid> {
    Grid::for_sigma(mode_variance(mode, mu, nu, hbar)?.sqrt(), policy)
}

/// Tomogram of `mode` on `grid`, by the closed form of its kind.
pub fn marginal_for_mode(mode: &ModeSpec, mu: f64, nu: f64, hbar: f64, grid: &Grid) -> Result<MarginalDensity> {
    match *mode {
        ModeSpec::Fock(n) => fock_marginal(n, mu, nu, hbar, grid),
        ModeSpec::CoherentEven(a) => evenodd_tomogram(a, Parity::Even, mu, nu, hbar, grid),
        ModeSpec::CoherentOdd(a) => evenodd_tomogram(a, Parity::Odd, mu, nu, hbar, grid),
    }
}

/// Pointwise tomogram `ω(X, μ, ν)` of a fixed single-mode state.
pub trait Tomogram: Sync {
    fn density(&self, x: f64, mu: f64, nu: f64) -> f64;
}

impl<F> Tomogram for F
where
    F: Fn(f64, f64, f64) -> f64 + Sync,
{
    fn density(&self, x: f64, mu: f64, nu: f64) -> f64 {
        self(x, mu, nu)
    }
}

/// Normalized pointwise tomogram of one [`ModeSpec`].
#[derive(Debug, Clone, Copy)]
pub struct ModeTomogram {
    mode: ModeSpec,
    hbar: f64,
    // unit-mass factor for the closed cat form; frame independent
    cat_scale: f64,
}

impl ModeTomogram {
    pub fn new(mode: ModeSpec, hbar: f64) -> Result<Self> {
        mode.validate()?;
        check_hbar(hbar)?;
        let cat_scale = match mode.cat_parts() {
            None => 1.0,
            Some((alpha, parity)) => {
                let grid = grid_for_mode(&mode, 1.0, 0.0, hbar, &GridPolicy::default())?;
                evenodd_tomogram(alpha, parity, 1.0, 0.0, hbar, &grid)?
                    .meta
                    .rescale
                    .unwrap_or(1.0)
            }
        };
        Ok(ModeTomogram { mode, hbar, cat_scale })
    }

    pub fn mode(&self) -> ModeSpec {
        self.mode
    }
}

impl Tomogram for ModeTomogram {
    fn density(&self, x: f64, mu: f64, nu: f64) -> f64 {
        match self.mode {
            ModeSpec::Fock(n) => {
                let scale = (self.hbar * (mu * mu + nu * nu)).sqrt();
                hermite_sq_density_factor(n, x / scale) / scale
            }
            ModeSpec::CoherentEven(a) => {
                self.cat_scale * evenodd_closed_form(a, Parity::Even, mu, nu, self.hbar, x, CatExponent::SqrtHbar)
            }
            ModeSpec::CoherentOdd(a) => {
                self.cat_scale * evenodd_closed_form(a, Parity::Odd, mu, nu, self.hbar, x, CatExponent::SqrtHbar)
            }
        }
    }
}
