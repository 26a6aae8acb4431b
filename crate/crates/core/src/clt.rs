//! Gaussianization of the center-of-mass tomogram as `N` grows at fixed
//! energy, and its concentration at `X = 0` as `ħ → 0`.

use std::f64::consts::SQRT_2;

use crate::convolution::{com_density, Backend, CenterOfMassDensity};
use crate::error::{Error, Result};
use crate::grid::{cumulative_corrected, trapezoid, GridPolicy};
use crate::marginals::{evenodd_var_closed, fock_abs3, fock_var_closed, grid_for_mode, marginal_for_mode, Moments};
use crate::special::{erf, normal_cdf};
use crate::states::{
    energy, fock_expansion, hbar_for_fixed_energy, quadrature_moments, FrameSpec, ModeSpec, SystemSpec,
};

/// One scan point.
#[derive(Debug, Clone, PartialEq)]
pub struct CltReport {
    pub n: usize,
    pub hbar: f64,
    pub s_n: f64,
    pub sigma2: f64,
    /// `r·E`, lower end of the variance bracket.
    pub r_e: f64,
    /// `R·E`, upper end of the variance bracket.
    pub big_r_e: f64,
    pub ks_distance: f64,
    pub tv_distance: f64,
    pub mass_in_epsilon: f64,
    pub epsilon: f64,
    /// `erf(ε / (σ√2))`, the mass a Gaussian with the same variance puts in `[-ε, ε]`.
    pub gaussian_mass: f64,
}

impl CltReport {
    pub fn bracket_holds(&self) -> bool {
        self.r_e <= self.sigma2 && self.sigma2 <= self.big_r_e
    }
}

/// `Σ abs3 / (Σ var)^{3/2}`.
pub fn lyapunov_ratio(per_mode: &[Moments]) -> Result<f64> {
    if per_mode.iter().any(|m| !(m.var > 0.0)) {
        return Err(Error::InvalidInput("every mode needs a positive variance".into()));
    }
    let abs3: f64 = per_mode.iter().map(|m| m.abs3).sum();
    let var: f64 = per_mode.iter().map(|m| m.var).sum();
    Ok(abs3 / var.powf(1.5))
}

/// Mean, variance and `E|x|³` of one mode's quadrature: exact for Fock
/// states; from the Fock expansion (mean, variance) and a grid quadrature
/// (`E|x|³`) for cat states.
pub fn mode_moments(mode: &ModeSpec, mu: f64, nu: f64, hbar: f64) -> Result<Moments> {
    match *mode {
        ModeSpec::Fock(n) => Ok(Moments {
            mean: 0.0,
            var: fock_var_closed(n, mu, nu, hbar),
            abs3: fock_abs3(n, mu, nu, hbar),
        }),
        _ => {
            let psi = fock_expansion(mode, 32)?;
            let (mean, var) = quadrature_moments(&psi, mu, nu, hbar);
            let grid = grid_for_mode(mode, mu, nu, hbar, &GridPolicy::default())?;
            let abs3 = marginal_for_mode(mode, mu, nu, hbar, &grid)?.moments().abs3;
            Ok(Moments { mean, var, abs3 })
        }
    }
}

pub fn system_moments(sys: &SystemSpec, frame: &FrameSpec) -> Result<Vec<Moments>> {
    frame.check_matches(sys)?;
    (0..sys.len())
        .map(|i| mode_moments(&sys.modes[i], frame.mu[i], frame.nu[i], sys.hbar))
        .collect()
}

pub fn system_lyapunov_ratio(sys: &SystemSpec, frame: &FrameSpec) -> Result<f64> {
    lyapunov_ratio(&system_moments(sys, frame)?)
}

/// `σ²_N = Σ Var(x̂_i)` with the trusted per-mode variances.
pub fn sigma2_closed(sys: &SystemSpec, frame: &FrameSpec) -> Result<f64> {
    Ok(system_moments(sys, frame)?.iter().map(|m| m.var).sum())
}

/// `σ²_N` with cat modes taken from the printed variance expression.
pub fn sigma2_as_printed(sys: &SystemSpec, frame: &FrameSpec) -> Result<f64> {
    frame.check_matches(sys)?;
    Ok((0..sys.len())
        .map(|i| {
            let (mu, nu) = (frame.mu[i], frame.nu[i]);
            match sys.modes[i] {
                ModeSpec::Fock(n) => fock_var_closed(n, mu, nu, sys.hbar),
                ModeSpec::CoherentEven(a) => evenodd_var_closed(a, crate::states::Parity::Even, mu, nu, sys.hbar),
                ModeSpec::CoherentOdd(a) => evenodd_var_closed(a, crate::states::Parity::Odd, mu, nu, sys.hbar),
            }
        })
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianDistance {
    pub ks: f64,
    pub tv: f64,
}

/// KS and total-variation distance from `N(0, σ²)`, over the density's grid.
pub fn gaussian_distance(d: &CenterOfMassDensity, sigma2: f64) -> Result<GaussianDistance> {
    if !(sigma2 > 0.0) {
        return Err(Error::InvalidInput(format!("sigma2 must be positive, got {sigma2}")));
    }
    let sigma = sigma2.sqrt();
    let cdf = cumulative_corrected(&d.values, d.grid.dx);
    let norm = 1.0 / (sigma * (2.0 * std::f64::consts::PI).sqrt());
    let mut ks: f64 = 0.0;
    let mut diff = Vec::with_capacity(d.grid.count);
    for (i, (&f, &c)) in d.values.iter().zip(&cdf).enumerate() {
        let x = d.grid.x(i);
        ks = ks.max((c - normal_cdf(x / sigma)).abs());
        diff.push((f - norm * (-0.5 * (x / sigma).powi(2)).exp()).abs());
    }
    Ok(GaussianDistance {
        ks,
        tv: 0.5 * trapezoid(&diff, d.grid.dx),
    })
}

/// `erf(ε / (σ√2))`.
pub fn gaussian_mass_in_epsilon(sigma2: f64, epsilon: f64) -> f64 {
    erf(epsilon / (sigma2.sqrt() * SQRT_2))
}

fn report(sys: &SystemSpec, frame: &FrameSpec, energy_value: f64, epsilon: f64, policy: &GridPolicy) -> Result<CltReport> {
    let moments = system_moments(sys, frame)?;
    let s_n = lyapunov_ratio(&moments)?;
    let sigma2: f64 = moments.iter().map(|m| m.var).sum();
    let d = com_density(sys, frame, policy, Backend::Fft)?;
    let dist = gaussian_distance(&d, sigma2)?;
    Ok(CltReport {
        n: sys.len(),
        hbar: sys.hbar,
        s_n,
        sigma2,
        r_e: frame.r * energy_value,
        big_r_e: frame.big_r * energy_value,
        ks_distance: dist.ks,
        tv_distance: dist.tv,
        mass_in_epsilon: d.mass_between(-epsilon, epsilon),
        epsilon,
        gaussian_mass: gaussian_mass_in_epsilon(sigma2, epsilon),
    })
}

/// Report for one system at its own energy.
pub fn clt_report(sys: &SystemSpec, frame: &FrameSpec, epsilon: f64, policy: &GridPolicy) -> Result<CltReport> {
    report(sys, frame, energy(sys)?, epsilon, policy)
}

/// Fock levels and frames repeated cyclically over the modes.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanSchedule {
    pub levels: Vec<usize>,
    pub frames: Vec<(f64, f64)>,
    pub r: f64,
    pub big_r: f64,
}

impl ScanSchedule {
    pub fn system(&self, n: usize, hbar: f64) -> Result<(SystemSpec, FrameSpec)> {
        if self.levels.is_empty() || self.frames.is_empty() {
            return Err(Error::InvalidInput("scan schedule needs at least one level and one frame".into()));
        }
        let modes = (0..n).map(|i| ModeSpec::Fock(self.levels[i % self.levels.len()])).collect();
        let (mu, nu) = (0..n).map(|i| self.frames[i % self.frames.len()]).unzip();
        Ok((SystemSpec::new(modes, hbar)?, FrameSpec::new(mu, nu, self.r, self.big_r)?))
    }
}

/// For each `N`, sets `ħ` so the energy equals `e` and reports the Gaussian distance.
pub fn n_scan(
    schedule: &ScanSchedule,
    e: f64,
    n_list: &[usize],
    epsilon: f64,
    policy: &GridPolicy,
) -> Result<Vec<CltReport>> {
    n_list
        .iter()
        .map(|&n| {
            let (probe, _) = schedule.system(n, 1.0)?;
            let hbar = hbar_for_fixed_energy(e, &probe.modes)?;
            let (sys, frame) = schedule.system(n, hbar)?;
            report(&sys, &frame, e, epsilon, policy)
        })
        .collect()
}

/// Reports along a strictly decreasing list of `ħ` for fixed modes and frames.
pub fn hbar_scan(
    sys_base: &SystemSpec,
    frame: &FrameSpec,
    hbar_list: &[f64],
    epsilon: f64,
    policy: &GridPolicy,
) -> Result<Vec<CltReport>> {
    if hbar_list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidInput("hbar list must be strictly decreasing".into()));
    }
    if !(epsilon > 0.0) {
        return Err(Error::InvalidInput(format!("epsilon must be positive, got {epsilon}")));
    }
    hbar_list
        .iter()
        .map(|&h| {
            let sys = sys_base.with_hbar(h);
            sys.validate()?;
            report(&sys, frame, energy(&sys)?, epsilon, policy)
        })
        .collect()
}
