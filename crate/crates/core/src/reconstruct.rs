//! Single-mode density matrix from a symplectic tomogram:
//!
//! `ρ̂ = (ħ/2π) ∫∫ dμ dν χ(μ, ν) e^{−i(μq̂ + νp̂)}`, `χ(μ, ν) = ∫ e^{iX} w(X, μ, ν) dX`,
//!
//! in polar frame coordinates `(μ, ν) = k (cos θ, sin θ)`. The rotation
//! `cos θ q̂ + sin θ p̂ = U q̂ U†` with `U = e^{iθn̂}` is diagonal in the Fock
//! basis, so only `exp(−ik Q)` has to be formed, once per radial node.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::marginals::Tomogram;
use crate::special::gauss_legendre;
use crate::states::FockExpansion;

/// Pre-rescale traces further than this from 1 indicate truncation leakage.
pub const LEAKAGE_TOLERANCE: f64 = 0.05;

/// Truncated `Q` and `P` with `Q_{k,k+1} = √(ħ(k+1)/2)` and
/// `P_{k,k+1} = −i√(ħ(k+1)/2)`.
pub fn quadrature_matrices(dim: usize, hbar: f64) -> Result<(DMatrix<Complex64>, DMatrix<Complex64>)> {
    if dim < 2 {
        return Err(Error::InvalidInput(format!("dimension must be at least 2, got {dim}")));
    }
    if !(hbar > 0.0) {
        return Err(Error::InvalidInput(format!("hbar must be positive, got {hbar}")));
    }
    let mut q = DMatrix::zeros(dim, dim);
    let mut p = DMatrix::zeros(dim, dim);
    for k in 0..dim - 1 {
        let c = (hbar * (k + 1) as f64 / 2.0).sqrt();
        q[(k, k + 1)] = Complex64::new(c, 0.0);
        q[(k + 1, k)] = Complex64::new(c, 0.0);
        p[(k, k + 1)] = Complex64::new(0.0, -c);
        p[(k + 1, k)] = Complex64::new(0.0, c);
    }
    Ok((q, p))
}

/// Matrix exponential by scaling and squaring with a `[8/8]` Padé approximant.
pub fn expm(a: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let n = a.nrows();
    let norm = (0..n)
        .map(|j| a.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let a = a / Complex64::new(2f64.powi(squarings), 0.0);
    // c_k = (2m−k)! m! / ((2m)! k! (m−k)!), m = 8
    let mut c = [1.0f64; 9];
    for k in 1..=8 {
        c[k] = c[k - 1] * (8 - k + 1) as f64 / (k as f64 * (16 - k + 1) as f64);
    }
    let id = DMatrix::<Complex64>::identity(n, n);
    let mut num = id.clone() * Complex64::new(c[0], 0.0);
    let mut den = num.clone();
    let mut power = id;
    for (k, &ck) in c.iter().enumerate().skip(1) {
        power = &power * &a;
        let term = &power * Complex64::new(ck, 0.0);
        num += &term;
        if k % 2 == 1 {
            den -= &term;
        } else {
            den += &term;
        }
    }
    let mut r = den.lu().solve(&num).expect("Padé denominator is well conditioned after scaling");
    for _ in 0..squarings {
        r = &r * &r;
    }
    r
}

/// Quadrature and cutoff settings; `None` fields take values scaled by `ħ` and `dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructOptions {
    /// Frame radius cutoff `K`, default `(8 + 2√(2·dim))/√ħ`.
    pub k_max: Option<f64>,
    pub n_k: usize,
    /// Angular nodes, default `max(64, 4·dim)`.
    pub n_theta: Option<usize>,
    /// Trapezoid nodes in X, default `max(512, ⌈3·half·K/π⌉)` so that `K·dX < π/1.5`.
    pub n_x: Option<usize>,
    /// Half-extent of the X integral in units of `σ̂ = √(ħ(dim − ½))` at unit frame radius.
    pub x_extent_sigmas: f64,
    /// Levels added above `dim` before exponentiating `Q`.
    pub extra_levels: usize,
}

impl ReconstructOptions {
    pub fn k_max_for(&self, dim: usize, hbar: f64) -> f64 {
        // χ of a state on levels below dim oscillates out to k√ħ ≈ 2√(2·dim)
        self.k_max
            .unwrap_or((8.0 + 2.0 * (2.0 * dim as f64).sqrt()) / hbar.sqrt())
    }

    pub fn n_theta_for(&self, dim: usize) -> usize {
        self.n_theta.unwrap_or((4 * dim).max(64))
    }

    /// Half-width of the X range at unit frame radius.
    pub fn x_half_width(&self, dim: usize, hbar: f64) -> f64 {
        self.x_extent_sigmas * (hbar * (dim as f64 - 0.5)).sqrt()
    }

    pub fn n_x_for(&self, dim: usize, hbar: f64) -> usize {
        self.n_x.unwrap_or_else(|| {
            let k = self.k_max_for(dim, hbar);
            ((3.0 * self.x_half_width(dim, hbar) * k / PI).ceil() as usize).max(512)
        })
    }
}

impl Default for ReconstructOptions {
    fn default() -> Self {
        ReconstructOptions {
            k_max: None,
            n_k: 96,
            n_theta: None,
            n_x: None,
            x_extent_sigmas: 10.0,
            extra_levels: 128,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    pub dim: usize,
    pub entries: DMatrix<Complex64>,
    /// Real trace before the final rescale.
    pub pre_rescale_trace: f64,
    /// Largest `|ρ − ρ†|` entry before symmetrization.
    pub hermiticity_defect: f64,
    pub leakage_warning: bool,
}

impl DensityMatrix {
    pub fn trace(&self) -> f64 {
        self.entries.trace().re
    }

    pub fn min_eigenvalue(&self) -> f64 {
        SymmetricEigen::new(self.entries.clone())
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_hermitian_deviation(&self) -> f64 {
        (&self.entries - self.entries.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn pure(psi: &FockExpansion, dim: usize) -> Self {
        let v = nalgebra::DVector::from_vec(psi.resized(dim));
        DensityMatrix {
            dim,
            entries: &v * v.adjoint(),
            pre_rescale_trace: 1.0,
            hermiticity_defect: 0.0,
            leakage_warning: false,
        }
    }
}

/// `⟨ψ|ρ̂|ψ⟩` with `ψ` cut or padded to `ρ`'s dimension.
pub fn fidelity(rho: &DensityMatrix, psi: &FockExpansion) -> f64 {
    let v = nalgebra::DVector::from_vec(psi.resized(rho.dim));
    (v.adjoint() * &rho.entries * &v)[(0, 0)].re
}

/// `⟨m|exp(−ikQ)|n⟩` for `m, n < dim` from the spectrum of a larger truncated `Q`.
struct QuadratureExponential {
    dim: usize,
    eigenvalues: Vec<f64>,
    // first `dim` rows of the eigenvector matrix
    vectors: DMatrix<f64>,
}

impl QuadratureExponential {
    fn new(dim: usize, extra: usize, hbar: f64) -> Self {
        let w = dim + extra;
        let mut q = DMatrix::<f64>::zeros(w, w);
        for k in 0..w - 1 {
            let c = (hbar * (k + 1) as f64 / 2.0).sqrt();
            q[(k, k + 1)] = c;
            q[(k + 1, k)] = c;
        }
        let eig = SymmetricEigen::new(q);
        QuadratureExponential {
            dim,
            eigenvalues: eig.eigenvalues.iter().cloned().collect(),
            vectors: eig.eigenvectors.rows(0, dim).into_owned(),
        }
    }

    fn at(&self, k: f64) -> DMatrix<Complex64> {
        let phases: Vec<Complex64> = self.eigenvalues.iter().map(|&l| Complex64::from_polar(1.0, -k * l)).collect();
        DMatrix::from_fn(self.dim, self.dim, |m, n| {
            let (vm, vn) = (self.vectors.row(m), self.vectors.row(n));
            phases
                .iter()
                .enumerate()
                .map(|(j, p)| p * (vm[j] * vn[j]))
                .sum()
        })
    }
}

fn pairwise_matrix_sum(mut items: Vec<DMatrix<Complex64>>) -> DMatrix<Complex64> {
    while items.len() > 1 {
        let mut next = Vec::with_capacity(items.len().div_ceil(2));
        let mut it = items.into_iter();
        while let Some(a) = it.next() {
            match it.next() {
                Some(b) => next.push(a + b),
                None => next.push(a),
            }
        }
        items = next;
    }
    items.pop().expect("at least one term")
}

/// Inverts the tomogram `w` onto the Fock levels `0..dim`.
pub fn reconstruct_single_mode<T: Tomogram + ?Sized>(
    w: &T,
    dim: usize,
    hbar: f64,
    opts: &ReconstructOptions,
) -> Result<DensityMatrix> {
    if dim < 2 {
        return Err(Error::InvalidInput(format!("dimension must be at least 2, got {dim}")));
    }
    if !(hbar > 0.0 && hbar.is_finite()) {
        return Err(Error::InvalidInput(format!("hbar must be positive, got {hbar}")));
    }
    let n_x = opts.n_x_for(dim, hbar);
    if opts.n_k == 0 || n_x < 2 {
        return Err(Error::InvalidInput("reconstruction needs n_k ≥ 1 and n_x ≥ 2".into()));
    }
    let k_max = opts.k_max_for(dim, hbar);
    let n_theta = opts.n_theta_for(dim);
    let half = opts.x_half_width(dim, hbar);
    let dy = 2.0 * half / (n_x - 1) as f64;
    let radial = gauss_legendre(opts.n_k, 0.0, k_max)?;
    let expo = QuadratureExponential::new(dim, opts.extra_levels, hbar);
    let thetas: Vec<(f64, f64)> = (0..n_theta)
        .map(|j| (2.0 * PI * j as f64 / n_theta as f64).sin_cos())
        .collect();

    let terms: Vec<DMatrix<Complex64>> = radial
        .nodes
        .par_iter()
        .zip(radial.weights.par_iter())
        .map(|(&k, &wk)| {
            // χ(k, θ) with X = kY, trapezoid in Y over [−half, half]
            let chi: Vec<Complex64> = thetas
                .iter()
                .map(|&(s, c)| {
                    let (mu, nu) = (k * c, k * s);
                    let mut acc = Complex64::new(0.0, 0.0);
                    for j in 0..n_x {
                        let y = -half + j as f64 * dy;
                        let edge = if j == 0 || j == n_x - 1 { 0.5 } else { 1.0 };
                        acc += Complex64::from_polar(edge * w.density(k * y, mu, nu), k * y);
                    }
                    acc * (k * dy)
                })
                .collect();
            // angular sums depend on m − n only
            let angular: Vec<Complex64> = (0..2 * dim - 1)
                .map(|i| {
                    let d = i as f64 - (dim - 1) as f64;
                    thetas
                        .iter()
                        .zip(&chi)
                        .enumerate()
                        .map(|(j, (_, x))| x * Complex64::from_polar(1.0, d * 2.0 * PI * j as f64 / n_theta as f64))
                        .sum::<Complex64>()
                        * (2.0 * PI / n_theta as f64)
                })
                .collect();
            let e = expo.at(k);
            let scale = wk * k * hbar / (2.0 * PI);
            DMatrix::from_fn(dim, dim, |m, n| e[(m, n)] * angular[m + dim - 1 - n] * scale)
        })
        .collect();
    let raw = pairwise_matrix_sum(terms);

    let hermiticity_defect = (&raw - raw.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    let sym = (&raw + raw.adjoint()) * Complex64::new(0.5, 0.0);
    let trace = sym.trace().re;
    if !(trace.is_finite() && trace.abs() > 0.0) {
        return Err(Error::InvalidInput(format!("reconstructed trace is {trace}")));
    }
    Ok(DensityMatrix {
        dim,
        entries: sym / Complex64::new(trace, 0.0),
        pre_rescale_trace: trace,
        hermiticity_defect,
        leakage_warning: (trace - 1.0).abs() > LEAKAGE_TOLERANCE,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::marginals::ModeTomogram;
    use crate::states::{fock_expansion, ModeSpec};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn quadrature_matrix_examples() {
        let (q, _) = quadrature_matrices(2, 1.0).unwrap();
        let h = 0.5f64.sqrt();
        assert_eq!(q, DMatrix::from_row_slice(2, 2, &[c(0.0), c(h), c(h), c(0.0)]));
        let (q, p) = quadrature_matrices(10, 0.7).unwrap();
        let comm = &q * &p - &p * &q;
        for i in 0..9 {
            for j in 0..9 {
                let want = if i == j { Complex64::new(0.0, 0.7) } else { c(0.0) };
                assert!((comm[(i, j)] - want).norm() < 1e-12);
            }
        }
        assert!(((&q * &q)[(0, 0)] - c(0.35)).norm() < 1e-15);
        assert!(quadrature_matrices(1, 1.0).is_err());
    }

    #[test]
    fn pade_matches_closed_forms() {
        // exp of a rotation generator
        let t = 2.7;
        let a = DMatrix::from_row_slice(2, 2, &[c(0.0), c(-t), c(t), c(0.0)]);
        let e = expm(&a);
        assert!((e[(0, 0)] - c(t.cos())).norm() < 1e-13);
        assert!((e[(1, 0)] - c(t.sin())).norm() < 1e-13);
        let z = DMatrix::<Complex64>::zeros(3, 3);
        assert_eq!(expm(&z), DMatrix::identity(3, 3));
    }

    #[test]
    fn spectral_exponential_matches_pade() {
        let (q, _) = quadrature_matrices(40, 0.5).unwrap();
        let k = 3.1;
        let pade = expm(&(q * Complex64::new(0.0, -k)));
        let expo = QuadratureExponential::new(40, 0, 0.5);
        let spec = expo.at(k);
        for m in 0..40 {
            for n in 0..40 {
                assert!((pade[(m, n)] - spec[(m, n)]).norm() < 1e-11);
            }
        }
    }

    #[test]
    fn enlarged_basis_gives_displacement_elements() {
        // ⟨0|e^{−ikQ}|0⟩ = e^{−k²ħ/4}
        let expo = QuadratureExponential::new(4, 128, 1.0);
        for k in [0.5, 2.0, 8.0] {
            assert!((expo.at(k)[(0, 0)] - c((-k * k / 4.0f64).exp())).norm() < 1e-12);
        }
    }

    #[test]
    fn fidelity_examples() {
        let rho = DensityMatrix::pure(&FockExpansion::basis(0), 4);
        assert!((fidelity(&rho, &FockExpansion::basis(0)) - 1.0).abs() < 1e-15);
        assert_eq!(fidelity(&rho, &FockExpansion::basis(1)), 0.0);
        let mut mixed = rho.clone();
        mixed.entries[(0, 0)] = c(0.5);
        mixed.entries[(1, 1)] = c(0.5);
        assert!((fidelity(&mixed, &FockExpansion::basis(0)) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn vacuum_round_trip() {
        let t = ModeTomogram::new(ModeSpec::Fock(0), 1.0).unwrap();
        let rho = reconstruct_single_mode(&t, 8, 1.0, &ReconstructOptions::default()).unwrap();
        assert!(rho.entries[(0, 0)].re >= 0.99);
        for i in 1..8 {
            assert!(rho.entries[(i, i)].re <= 0.01);
        }
        assert!((rho.pre_rescale_trace - 1.0).abs() < 1e-6);
        assert!(rho.min_eigenvalue() > -1e-6);
    }

    #[test]
    fn cat_round_trip_off_unit_hbar() {
        let mode = ModeSpec::CoherentOdd(Complex64::new(0.6, 0.5));
        let t = ModeTomogram::new(mode, 0.3).unwrap();
        let rho = reconstruct_single_mode(&t, 12, 0.3, &ReconstructOptions::default()).unwrap();
        let psi = fock_expansion(&mode, 12).unwrap();
        assert!(fidelity(&rho, &psi) > 0.99);
        assert!(rho.hermiticity_defect < 1e-8);
    }

    #[test]
    fn reconstruction_is_linear() {
        let a = ModeTomogram::new(ModeSpec::Fock(0), 1.0).unwrap();
        let b = ModeTomogram::new(ModeSpec::Fock(2), 1.0).unwrap();
        let mix = |x: f64, mu: f64, nu: f64| 0.5 * a.density(x, mu, nu) + 0.5 * b.density(x, mu, nu);
        let opts = ReconstructOptions::default();
        let rm = reconstruct_single_mode(&mix, 8, 1.0, &opts).unwrap();
        let ra = reconstruct_single_mode(&a, 8, 1.0, &opts).unwrap();
        let rb = reconstruct_single_mode(&b, 8, 1.0, &opts).unwrap();
        let avg = (&ra.entries + &rb.entries) * c(0.5);
        assert!((&rm.entries - avg).iter().all(|z| z.norm() < 1e-4));
    }

    #[test]
    fn small_truncation_leaks() {
        let mode = ModeSpec::CoherentEven(Complex64::new(2.0, 0.0));
        let t = ModeTomogram::new(mode, 1.0).unwrap();
        let rho = reconstruct_single_mode(&t, 4, 1.0, &ReconstructOptions::default()).unwrap();
        assert!(rho.leakage_warning);
    }
}
