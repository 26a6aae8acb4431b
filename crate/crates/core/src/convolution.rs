//! Center-of-mass tomogram: density of `Σ Y_j` for independent per-mode
//! quadratures, by FFT convolution, by a product of characteristic functions,
//! or by Monte Carlo sampling.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::FftPlanner;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::grid::{cdf_at, cumulative_trapezoid, interpolate, trapezoid, Grid, GridPolicy};
use crate::marginals::{marginal_for_mode, mode_variance, moments_of, MarginalDensity, Moments};
use crate::states::{FrameSpec, SystemSpec};

/// Largest negative mass that clamping may discard silently.
pub const CLAMP_LIMIT: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Backend {
    Fft,
    CfProduct,
    MonteCarlo,
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Backend::Fft => "fft",
            Backend::CfProduct => "cf-product",
            Backend::MonteCarlo => "monte-carlo",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CenterOfMassMeta {
    pub system_digest: String,
    pub frame_digest: String,
    pub backend: Backend,
    /// Negative mass removed before renormalizing.
    pub clamped_mass: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CenterOfMassDensity {
    pub grid: Grid,
    pub values: Vec<f64>,
    pub meta: CenterOfMassMeta,
}

impl CenterOfMassDensity {
    pub fn integral(&self) -> f64 {
        trapezoid(&self.values, self.grid.dx)
    }

    pub fn moments(&self) -> Moments {
        moments_of(&self.grid, &self.values)
    }

    pub fn eval(&self, x: f64) -> f64 {
        interpolate(&self.grid, &self.values, x)
    }

    pub fn cdf(&self) -> Vec<f64> {
        cumulative_trapezoid(&self.values, self.grid.dx)
    }

    /// `∫_a^b` of the interpolated density.
    pub fn mass_between(&self, a: f64, b: f64) -> f64 {
        let cum = self.cdf();
        cdf_at(&self.grid, &self.values, &cum, b) - cdf_at(&self.grid, &self.values, &cum, a)
    }
}

/// Short hex digest used to tag outputs with the inputs they came from.
pub fn digest(text: &str) -> String {
    hex::encode(&Sha256::digest(text.as_bytes())[..8])
}

fn untagged() -> (String, String) {
    (String::from("-"), String::from("-"))
}

/// Resample onto the `dx` lattice, covering the input's support.
fn to_lattice(m: &MarginalDensity, dx: f64) -> (i64, Vec<f64>) {
    let same = (m.grid.dx - dx).abs() <= 1e-12 * dx;
    if same {
        if let Some(off) = m.grid.lattice_offset() {
            return (off, m.values.clone());
        }
    }
    let start = (m.grid.x0 / dx).floor() as i64;
    let end = (m.grid.last() / dx).ceil() as i64;
    let values = (start..=end).map(|j| m.eval(j as f64 * dx)).collect();
    (start, values)
}

struct Prepared {
    dx: f64,
    offsets: Vec<i64>,
    samples: Vec<Vec<f64>>,
    out: Grid,
}

fn prepare(marginals: &[MarginalDensity], max_points: usize) -> Result<Prepared> {
    if marginals.is_empty() {
        return Err(Error::InvalidInput("no marginals to convolve".into()));
    }
    let dx = marginals.iter().map(|m| m.grid.dx).fold(f64::INFINITY, f64::min);
    let (offsets, samples): (Vec<i64>, Vec<Vec<f64>>) =
        marginals.iter().map(|m| to_lattice(m, dx)).unzip();
    let (mean, var) = marginals.iter().fold((0.0, 0.0), |(m0, v0), m| {
        let mo = m.moments();
        (m0 + mo.mean, v0 + mo.var)
    });
    let out = Grid::centered(dx, mean.abs() + 8.0 * var.sqrt(), max_points)?;
    Ok(Prepared {
        dx,
        offsets,
        samples,
        out,
    })
}

/// Zero negatives, fail above [`CLAMP_LIMIT`], renormalize.
fn clamp_and_normalize(values: &mut [f64], dx: f64) -> Result<f64> {
    let mut clamped = 0.0;
    for v in values.iter_mut() {
        if *v < 0.0 {
            clamped -= *v * dx;
            *v = 0.0;
        }
    }
    if clamped > CLAMP_LIMIT {
        return Err(Error::ClampedMass {
            mass: clamped,
            limit: CLAMP_LIMIT,
        });
    }
    let mass = trapezoid(values, dx);
    if !(mass > 0.0) {
        return Err(Error::InvalidInput("convolution produced no mass on the output grid".into()));
    }
    values.iter_mut().for_each(|v| *v /= mass);
    Ok(clamped)
}

fn finish(
    prepared: &Prepared,
    mut values: Vec<f64>,
    backend: Backend,
    tags: (String, String),
) -> Result<CenterOfMassDensity> {
    let clamped_mass = clamp_and_normalize(&mut values, prepared.dx)?;
    Ok(CenterOfMassDensity {
        grid: prepared.out,
        values,
        meta: CenterOfMassMeta {
            system_digest: tags.0,
            frame_digest: tags.1,
            backend,
            clamped_mass,
        },
    })
}

/// Density of the sum by zero-padded FFT convolution.
pub fn convolve_fft(marginals: &[MarginalDensity]) -> Result<CenterOfMassDensity> {
    convolve_fft_with(marginals, crate::grid::DEFAULT_MAX_POINTS, untagged())
}

fn convolve_fft_with(
    marginals: &[MarginalDensity],
    max_points: usize,
    tags: (String, String),
) -> Result<CenterOfMassDensity> {
    let p = prepare(marginals, max_points)?;
    let support: usize = p.samples.iter().map(Vec::len).sum();
    let size = support.max(2 * p.out.count).next_power_of_two();
    if size > max_points {
        return Err(Error::GridTooLarge {
            requested: size,
            max: max_points,
        });
    }
    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(size);
    let inverse = planner.plan_fft_inverse(size);

    let spectra: Vec<Vec<Complex64>> = p
        .samples
        .par_iter()
        .map(|s| {
            let mut buf = vec![Complex64::new(0.0, 0.0); size];
            // cell masses keep the spectra near unit size for any N
            for (b, &v) in buf.iter_mut().zip(s) {
                b.re = v * p.dx;
            }
            forward.process(&mut buf);
            buf
        })
        .collect();
    let mut acc = spectra[0].clone();
    for s in &spectra[1..] {
        acc.iter_mut().zip(s).for_each(|(a, b)| *a *= b);
    }
    inverse.process(&mut acc);

    // sample j of the full convolution sits at (Σ offsets + j)·dx
    let start: i64 = p.offsets.iter().sum();
    let scale = 1.0 / (p.dx * size as f64);
    let out0 = p.out.lattice_offset().expect("output grid lies on the lattice");
    let values = (0..p.out.count)
        .map(|i| {
            let j = out0 + i as i64 - start;
            if j >= 0 && (j as usize) < support {
                acc[j as usize].re * scale
            } else {
                0.0
            }
        })
        .collect();
    finish(&p, values, Backend::Fft, tags)
}

/// `Σ_j f_j e^{ik x_j} dx` over the grid samples.
pub fn characteristic_function(grid: &Grid, values: &[f64], k: f64) -> Complex64 {
    let mut sum = Complex64::new(0.0, 0.0);
    let step = Complex64::from_polar(1.0, k * grid.dx);
    let mut phase = Complex64::new(0.0, 0.0);
    for (j, &v) in values.iter().enumerate() {
        // resynchronize the phasor recurrence to keep rounding bounded
        if j % 64 == 0 {
            phase = Complex64::from_polar(1.0, k * grid.x(j));
        }
        sum += v * phase;
        phase *= step;
    }
    sum * grid.dx
}

/// One period `[-π/dx, π/dx)` of wavenumbers, aliasing period `count·dx` in X.
pub fn default_k_grid(dx: f64, count: usize) -> Result<Grid> {
    let dk = 2.0 * PI / (count as f64 * dx);
    Grid::new(-((count / 2) as f64) * dk, dk, count)
}

/// Density of the sum by inverting the product of characteristic functions
/// sampled on `k_grid`; `None` picks one Nyquist period with twice the output length.
pub fn cf_product(marginals: &[MarginalDensity], k_grid: Option<&Grid>) -> Result<CenterOfMassDensity> {
    cf_product_with(marginals, k_grid, crate::grid::DEFAULT_MAX_POINTS, untagged())
}

fn cf_product_with(
    marginals: &[MarginalDensity],
    k_grid: Option<&Grid>,
    max_points: usize,
    tags: (String, String),
) -> Result<CenterOfMassDensity> {
    let p = prepare(marginals, max_points)?;
    let kg = match k_grid {
        Some(g) => *g,
        None => default_k_grid(p.dx, 2 * p.out.count)?,
    };
    if kg.count as f64 * kg.dx > 2.0 * PI / p.dx * (1.0 + 1e-12) {
        return Err(Error::InvalidInput(
            "k grid spans more than one period of the sampled characteristic functions".into(),
        ));
    }
    let lattice: Vec<Grid> = p
        .offsets
        .iter()
        .zip(&p.samples)
        .map(|(&o, s)| Grid {
            x0: o as f64 * p.dx,
            dx: p.dx,
            count: s.len(),
        })
        .collect();
    let product: Vec<Complex64> = (0..kg.count)
        .into_par_iter()
        .map(|i| {
            let k = kg.x(i);
            lattice
                .iter()
                .zip(&p.samples)
                .map(|(g, s)| characteristic_function(g, s, k))
                .fold(Complex64::new(1.0, 0.0), |a, b| a * b)
        })
        .collect();
    let norm = kg.dx / (2.0 * PI);
    let values = (0..p.out.count)
        .into_par_iter()
        .map(|j| {
            let x = p.out.x(j);
            let mut sum = Complex64::new(0.0, 0.0);
            let step = Complex64::from_polar(1.0, -kg.dx * x);
            let mut phase = Complex64::new(0.0, 0.0);
            for (i, f) in product.iter().enumerate() {
                if i % 64 == 0 {
                    phase = Complex64::from_polar(1.0, -kg.x(i) * x);
                }
                sum += f * phase;
                phase *= step;
            }
            sum.re * norm
        })
        .collect();
    finish(&p, values, Backend::CfProduct, tags)
}

/// Per-mode marginals on grids sharing one lattice spacing, as the
/// convolution backends expect.
pub fn system_marginals(
    sys: &SystemSpec,
    frame: &FrameSpec,
    policy: &GridPolicy,
) -> Result<Vec<MarginalDensity>> {
    sys.validate()?;
    frame.check_matches(sys)?;
    let sigmas: Vec<f64> = (0..sys.len())
        .map(|i| mode_variance(&sys.modes[i], frame.mu[i], frame.nu[i], sys.hbar).map(f64::sqrt))
        .collect::<Result<_>>()?;
    let dx = sigmas.iter().cloned().fold(f64::INFINITY, f64::min) / policy.points_per_sigma;
    (0..sys.len())
        .into_par_iter()
        .map(|i| {
            let grid = Grid::centered(dx, policy.half_width_sigmas * sigmas[i], policy.max_points)?;
            marginal_for_mode(&sys.modes[i], frame.mu[i], frame.nu[i], sys.hbar, &grid)
        })
        .collect()
}

/// Center-of-mass tomogram of a product state by a deterministic backend.
pub fn com_density(
    sys: &SystemSpec,
    frame: &FrameSpec,
    policy: &GridPolicy,
    backend: Backend,
) -> Result<CenterOfMassDensity> {
    let marginals = system_marginals(sys, frame, policy)?;
    let tags = (digest(&sys.describe()), digest(&frame.describe()));
    match backend {
        Backend::Fft => convolve_fft_with(&marginals, policy.max_points, tags),
        Backend::CfProduct => cf_product_with(&marginals, None, policy.max_points, tags),
        Backend::MonteCarlo => Err(Error::InvalidInput(
            "Monte Carlo yields samples, use sample_sum".into(),
        )),
    }
}

/// Inverse-CDF sampler over a gridded density, linear within each cell.
struct InverseCdf {
    grid: Grid,
    cdf: Vec<f64>,
}

impl InverseCdf {
    fn new(m: &MarginalDensity) -> Self {
        let mut cdf = m.cdf();
        let total = *cdf.last().expect("non-empty grid");
        cdf.iter_mut().for_each(|c| *c /= total);
        InverseCdf { grid: m.grid, cdf }
    }

    fn sample(&self, u: f64) -> f64 {
        let i = self.cdf.partition_point(|&c| c <= u).clamp(1, self.cdf.len() - 1);
        let (lo, hi) = (self.cdf[i - 1], self.cdf[i]);
        let frac = if hi > lo { (u - lo) / (hi - lo) } else { 0.5 };
        self.grid.x(i - 1) + frac * self.grid.dx
    }
}

/// Modes sampled concurrently before their draws are added up.
const SAMPLE_BATCH: usize = 8;

/// `n_samples` draws of `Σ Y_j`; mode `j` uses stream `j` of a ChaCha8
/// generator seeded with `seed`, so results do not depend on thread count.
pub fn sample_sum(sys: &SystemSpec, frame: &FrameSpec, n_samples: usize, seed: u64) -> Result<Vec<f64>> {
    let marginals = system_marginals(sys, frame, &GridPolicy::default())?;
    sample_from_marginals(&marginals, n_samples, seed)
}

pub fn sample_from_marginals(marginals: &[MarginalDensity], n_samples: usize, seed: u64) -> Result<Vec<f64>> {
    let samplers: Vec<InverseCdf> = marginals.iter().map(InverseCdf::new).collect();
    let mut sums = vec![0.0; n_samples];
    for (batch_no, batch) in samplers.chunks(SAMPLE_BATCH).enumerate() {
        let draws: Vec<Vec<f64>> = batch
            .par_iter()
            .enumerate()
            .map(|(j, s)| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream((batch_no * SAMPLE_BATCH + j) as u64);
                (0..n_samples).map(|_| s.sample(rng.gen::<f64>())).collect()
            })
            .collect();
        for d in &draws {
            sums.iter_mut().zip(d).for_each(|(a, b)| *a += b);
        }
    }
    Ok(sums)
}

/// Kolmogorov–Smirnov distance between samples and a gridded density.
pub fn ks_samples_vs_density(samples: &[f64], d: &CenterOfMassDensity) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let cum = d.cdf();
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf_at(&d.grid, &d.values, &cum, x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Total variation between a sample histogram and a density, on bins of
/// width `bin` aligned at 0.
pub fn binned_tv_samples_vs_density(samples: &[f64], d: &CenterOfMassDensity, bin: f64) -> f64 {
    let lo = (d.grid.x0 / bin).floor() as i64;
    let hi = (d.grid.last() / bin).ceil() as i64;
    let nbins = (hi - lo) as usize;
    let mut counts = vec![0usize; nbins];
    let mut outside = 0usize;
    for &x in samples {
        let b = (x / bin).floor() as i64 - lo;
        if b >= 0 && (b as usize) < nbins {
            counts[b as usize] += 1;
        } else {
            outside += 1;
        }
    }
    let cum = d.cdf();
    let n = samples.len() as f64;
    let inside: f64 = counts
        .iter()
        .enumerate()
        .map(|(b, &c)| {
            let a = (lo + b as i64) as f64 * bin;
            let mass = cdf_at(&d.grid, &d.values, &cum, a + bin) - cdf_at(&d.grid, &d.values, &cum, a);
            (c as f64 / n - mass).abs()
        })
        .sum();
    0.5 * (inside + outside as f64 / n)
}

/// `½∫|a − b|` for two densities on grids with the same spacing and lattice.
pub fn tv_distance(a: &CenterOfMassDensity, b: &CenterOfMassDensity) -> f64 {
    let dx = a.grid.dx.min(b.grid.dx);
    let lo = a.grid.x0.min(b.grid.x0);
    let hi = a.grid.last().max(b.grid.last());
    let steps = ((hi - lo) / dx).round() as usize;
    let diffs: Vec<f64> = (0..=steps)
        .map(|i| {
            let x = lo + i as f64 * dx;
            (a.eval(x) - b.eval(x)).abs()
        })
        .collect();
    0.5 * trapezoid(&diffs, dx)
}
