//! Hermite polynomials and functions, factorials, and Gaussian quadrature rules.
//!
//! Everything downstream evaluates oscillator densities through the orthonormal
//! Hermite functions
//!
//! ```text
//! h_n(y) = H_n(y) exp(-y²/2) / sqrt(2ⁿ n! √π)
//! ```
//!
//! computed with the three-term recurrence on `h_n` itself. The recurrence keeps
//! a separate logarithmic scale so that large `n` and large `|y|` neither overflow
//! nor flush to zero early.

use std::f64::consts::PI;

use libm::lgamma;

use crate::error::{Error, Result};

const RESCALE: f64 = 1e150;
// ln(1e150)
const LN_RESCALE: f64 = 345.387_763_949_107_04;

/// Largest quadrature order accepted by [`gauss_hermite`].
pub const MAX_GAUSS_HERMITE_ORDER: usize = 512;

/// Physicists' Hermite polynomial `H_n(y)` by the raw recurrence
/// `H_{k+1} = 2y H_k - 2k H_{k-1}`.
///
/// Fails with [`Error::Overflow`] once the value leaves the `f64` range; use
/// [`hermite_function`] for large `n`.
pub fn hermite_eval(n: usize, y: f64) -> Result<f64> {
    if n == 0 {
        return Ok(1.0);
    }
    let mut prev = 1.0;
    let mut cur = 2.0 * y;
    for k in 1..n {
        let next = 2.0 * y * cur - 2.0 * k as f64 * prev;
        prev = cur;
        cur = next;
        if !cur.is_finite() {
            return Err(Error::Overflow(format!("H_{n}({y})")));
        }
    }
    Ok(cur)
}

/// Mantissas of `h_n`, `h_{n-1}` and the shared log scale.
fn hermite_function_parts(n: usize, y: f64) -> (f64, f64, f64) {
    let mut ln_scale = -0.5 * y * y;
    let mut prev = 0.0;
    let mut cur = PI.powf(-0.25);
    for k in 0..n {
        let kf = k as f64;
        let next = (2.0 / (kf + 1.0)).sqrt() * y * cur - (kf / (kf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
        if cur.abs() > RESCALE {
            cur /= RESCALE;
            prev /= RESCALE;
            ln_scale += LN_RESCALE;
        }
    }
    (cur, prev, ln_scale)
}

#[inline]
fn apply_scale(mantissa: f64, ln_scale: f64) -> f64 {
    if mantissa == 0.0 {
        return 0.0;
    }
    (mantissa.abs().ln() + ln_scale).exp().copysign(mantissa)
}

/// Orthonormal Hermite function `h_n(y)`.
pub fn hermite_function(n: usize, y: f64) -> f64 {
    let (cur, _, ln_scale) = hermite_function_parts(n, y);
    apply_scale(cur, ln_scale)
}

/// `(ln |h_n(y)|, sign)`. Returns `-inf` for an exact zero.
pub fn hermite_function_ln(n: usize, y: f64) -> (f64, f64) {
    let (cur, _, ln_scale) = hermite_function_parts(n, y);
    if cur == 0.0 {
        (f64::NEG_INFINITY, 1.0)
    } else {
        (cur.abs().ln() + ln_scale, cur.signum())
    }
}

/// Fills `out[k] = h_k(y)` for `k = 0..out.len()`.
pub fn hermite_functions_into(y: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    let mut ln_scale = -0.5 * y * y;
    let mut factor = ln_scale.exp();
    let mut prev = 0.0;
    let mut cur = PI.powf(-0.25);
    let store = |m: f64, factor: f64, ln_scale: f64| {
        if factor.is_normal() {
            m * factor
        } else {
            apply_scale(m, ln_scale)
        }
    };
    out[0] = store(cur, factor, ln_scale);
    for k in 0..out.len() - 1 {
        let kf = k as f64;
        let next = (2.0 / (kf + 1.0)).sqrt() * y * cur - (kf / (kf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
        if cur.abs() > RESCALE {
            cur /= RESCALE;
            prev /= RESCALE;
            ln_scale += LN_RESCALE;
            factor = ln_scale.exp();
        }
        out[k + 1] = store(cur, factor, ln_scale);
    }
}

/// `H_n(y)² e^{-y²} / (2ⁿ n! √π)`, the unit-frame Fock tomogram.
///
/// Evaluated as `h_n(y)²` so that `n` in the hundreds is safe.
pub fn hermite_sq_density_factor(n: usize, y: f64) -> f64 {
    let h = hermite_function(n, y);
    h * h
}

/// `ln(n!)`.
pub fn ln_factorial(n: usize) -> f64 {
    if n < 2 {
        0.0
    } else {
        lgamma(n as f64 + 1.0)
    }
}

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

/// A one-dimensional quadrature rule `∫ f(y) w(y) dy ≈ Σ weights[i] f(nodes[i])`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Gauss–Hermite rule of order `m` for the weight `e^{-y²}`.
///
/// Nodes are the roots of `H_m`. The largest root is seeded from its
/// asymptotic location and each next one by the local WKB spacing; every seed
/// is polished by Newton's method deflated against the roots already found. Weights are computed from
/// `h_{m-1}` in log space; for `m` above roughly 300 the outermost weights are
/// below the smallest `f64` and come out as exactly zero.
pub fn gauss_hermite(m: usize) -> Result<QuadratureRule> {
    if m == 0 || m > MAX_GAUSS_HERMITE_ORDER {
        return Err(Error::InvalidInput(format!(
            "Gauss-Hermite order {m} outside 1..={MAX_GAUSS_HERMITE_ORDER}"
        )));
    }
    let half = m.div_ceil(2);
    let mf = m as f64;
    let mut pos = vec![0.0f64; half];
    let mut z = 0.0f64;
    for i in 0..half {
        if m % 2 == 1 && i == half - 1 {
            // middle root of an odd-order rule
            pos[i] = 0.0;
            continue;
        }
        z = if i == 0 {
            (2.0 * mf + 1.0).sqrt() - 1.855_75 * (2.0 * mf + 1.0).powf(-0.166_67)
        } else {
            // step down by the local WKB half-period pi / sqrt(2m + 1 - z²)
            let gap = |x: f64| PI / (2.0 * mf + 1.0 - x * x).max(1.0).sqrt();
            let mid = z - 0.5 * gap(z);
            z - gap(mid)
        };
        let mut converged = false;
        let mut step = f64::INFINITY;
        for _ in 0..100 {
            let (hm, hm1, _) = hermite_function_parts(m, z);
            // H_m' / H_m through the orthonormal functions (the Gaussian factor
            // cancels), deflated by the roots already found and their mirrors.
            let log_deriv = (2.0 * mf).sqrt() * hm1 / hm;
            let deflation: f64 = pos[..i].iter().map(|&x| 1.0 / (z - x) + 1.0 / (z + x)).sum();
            step = 1.0 / (log_deriv - deflation);
            z -= step;
            if step.abs() <= 1e-14 * z.abs().max(1.0) {
                converged = true;
                break;
            }
        }
        if !converged || (i > 0 && !(z < pos[i - 1])) || z <= 0.0 {
            return Err(Error::NoConvergence {
                what: format!("Gauss-Hermite root {i} of order {m}"),
                residual: step,
            });
        }
        pos[i] = z;
    }
    let weight = |x: f64| {
        let (ln_h, _) = hermite_function_ln(m - 1, x);
        (-x * x - mf.ln() - 2.0 * ln_h).exp()
    };
    let mut nodes = Vec::with_capacity(m);
    let mut weights = Vec::with_capacity(m);
    for &x in &pos {
        nodes.push(-x);
        weights.push(weight(x));
    }
    let mirror = m / 2;
    for i in (0..mirror).rev() {
        nodes.push(pos[i]);
        weights.push(weights[i]);
    }
    // `pos` holds positive roots in decreasing order, so the first half of
    // `nodes` is increasing; the middle root (odd m) was stored as 0.
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| nodes[a].total_cmp(&nodes[b]));
    Ok(QuadratureRule {
        nodes: order.iter().map(|&i| nodes[i]).collect(),
        weights: order.iter().map(|&i| weights[i]).collect(),
    })
}

/// Gauss–Legendre rule of order `m` on `[a, b]`.
pub fn gauss_legendre(m: usize, a: f64, b: f64) -> Result<QuadratureRule> {
    if m == 0 {
        return Err(Error::InvalidInput("Gauss-Legendre order must be positive".into()));
    }
    let mf = m as f64;
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (mf + 0.5)).cos();
        let mut pp = 0.0;
        let mut step = f64::INFINITY;
        for _ in 0..100 {
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 0..m {
                let jf = j as f64;
                let p3 = p2;
                p2 = p1;
                p1 = ((2.0 * jf + 1.0) * z * p2 - jf * p3) / (jf + 1.0);
            }
            pp = mf * (z * p1 - p2) / (z * z - 1.0);
            step = p1 / pp;
            z -= step;
            if step.abs() <= 1e-15 {
                break;
            }
        }
        if step.abs() > 1e-13 {
            return Err(Error::NoConvergence {
                what: format!("Gauss-Legendre root {i} of order {m}"),
                residual: step,
            });
        }
        let w = 2.0 * half / ((1.0 - z * z) * pp * pp);
        nodes[i] = mid - half * z;
        nodes[m - 1 - i] = mid + half * z;
        weights[i] = w;
        weights[m - 1 - i] = w;
    }
    Ok(QuadratureRule { nodes, weights })
}

/// Gauss–Laguerre rule of order `m` with the weight folded into the returned
/// weights: `∫₀^∞ f(t) dt ≈ Σ weights[i] f(nodes[i])`, exact whenever
/// `f(t) e^{t}` is a polynomial of degree `≤ 2m - 1`.
pub fn gauss_laguerre_scaled(m: usize) -> Result<QuadratureRule> {
    if m == 0 {
        return Err(Error::InvalidInput("Gauss-Laguerre order must be positive".into()));
    }
    let mf = m as f64;
    let mut nodes = vec![0.0f64; m];
    let mut weights = vec![0.0f64; m];
    let mut z = 0.0f64;
    for i in 0..m {
        z = match i {
            0 => 3.0 / (1.0 + 2.4 * mf),
            1 => z + 15.0 / (1.0 + 2.5 * mf),
            _ => {
                let ai = (i - 1) as f64;
                z + (1.0 + 2.55 * ai) / (1.9 * ai) * (z - nodes[i - 2])
            }
        };
        let mut converged = false;
        let mut step = f64::INFINITY;
        let mut ln_weight = 0.0;
        for _ in 0..200 {
            // L_m(z), L_{m-1}(z) with a shared log scale
            let mut p1 = 1.0f64;
            let mut p2 = 0.0f64;
            let mut ln_scale = 0.0;
            for j in 1..=m {
                let jf = j as f64;
                let p3 = p2;
                p2 = p1;
                p1 = ((2.0 * jf - 1.0 - z) * p2 - (jf - 1.0) * p3) / jf;
                if p1.abs() > RESCALE {
                    p1 /= RESCALE;
                    p2 /= RESCALE;
                    ln_scale += LN_RESCALE;
                }
            }
            let pp = mf * (p1 - p2) / z;
            step = p1 / pp;
            z -= step;
            ln_weight = -(pp.abs().ln() + p2.abs().ln() + 2.0 * ln_scale + mf.ln());
            if step.abs() <= 1e-14 * z.abs().max(1.0) {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::NoConvergence {
                what: format!("Gauss-Laguerre root {i} of order {m}"),
                residual: step,
            });
        }
        nodes[i] = z;
        weights[i] = (ln_weight + z).exp();
    }
    Ok(QuadratureRule { nodes, weights })
}

/// Summation in a fixed binary tree, independent of how the caller splits work.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}
