//! Side-by-side values of the printed even/odd coherent-state formulas and
//! of independent Fock-expansion computations over a fixed parameter matrix.

use std::f64::consts::{PI, SQRT_2};
use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::Result;
use crate::grid::{trapezoid, Grid};
use crate::marginals::{evenodd_closed_form, evenodd_var_closed, tomogram_oracle, CatExponent};
use crate::states::{coherent_expansion, fock_expansion, quadrature_matrix_element, quadrature_moments, ModeSpec, Parity};

/// Relative agreement threshold used for the `agree` column.
pub const AGREEMENT_TOLERANCE: f64 = 1e-8;

const EXPANSION_LEVELS: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct DiscrepancyRow {
    pub quantity: &'static str,
    pub alpha: Complex64,
    pub parity: Option<Parity>,
    pub mu: f64,
    pub nu: f64,
    pub hbar: f64,
    pub printed: f64,
    pub oracle: f64,
}

impl DiscrepancyRow {
    /// `printed / oracle`, with `0/0` read as 1.
    pub fn ratio(&self) -> f64 {
        if self.oracle == 0.0 && self.printed.abs() <= AGREEMENT_TOLERANCE {
            1.0
        } else {
            self.printed / self.oracle
        }
    }

    pub fn agrees(&self) -> bool {
        (self.printed - self.oracle).abs() <= AGREEMENT_TOLERANCE * self.oracle.abs().max(1.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscrepancyReport {
    pub rows: Vec<DiscrepancyRow>,
}

/// Parameter matrix covered by the report.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscrepancyMatrix {
    pub alphas: Vec<Complex64>,
    pub frames: Vec<(f64, f64)>,
    pub hbars: Vec<f64>,
}

impl Default for DiscrepancyMatrix {
    fn default() -> Self {
        DiscrepancyMatrix {
            alphas: vec![
                Complex64::new(0.0, 0.0),
                Complex64::new(0.5, 0.0),
                Complex64::new(1.0, 0.0),
                Complex64::new(0.7, 0.7),
                Complex64::new(0.0, 2.0),
            ],
            frames: vec![(1.0, 0.0), (0.0, 1.0), (0.6, 0.8)],
            hbars: vec![1.0, 0.25],
        }
    }
}

/// `∫|⟨X|α⟩|²` for the printed wave function, whose linear term is `√α X/√ħ`.
fn printed_wavefunction_norm(alpha: Complex64, hbar: f64) -> f64 {
    let lin = alpha.sqrt() / hbar.sqrt();
    let center = hbar * lin.re;
    let half = center.abs() + 12.0 * hbar.sqrt();
    let grid = Grid::centered(hbar.sqrt() / 64.0, half + center.abs(), 1 << 22).expect("moderate grid");
    let v: Vec<f64> = grid
        .points()
        .iter()
        .map(|&x| {
            let e = -0.5 * alpha.norm_sqr() - x * x / (2.0 * hbar) + lin * x - 0.5 * alpha * alpha;
            (2.0 * e.re).exp() / (PI * hbar).sqrt()
        })
        .collect();
    trapezoid(&v, grid.dx)
}

/// `∫|⟨X|α⟩|²` for the wave function with linear term `√2 α X/√ħ`.
fn standard_wavefunction_norm(alpha: Complex64, hbar: f64) -> f64 {
    let center = (2.0 * hbar).sqrt() * alpha.re;
    let grid = Grid::centered(hbar.sqrt() / 64.0, 2.0 * center.abs() + 12.0 * hbar.sqrt(), 1 << 22)
        .expect("moderate grid");
    let v: Vec<f64> = grid
        .points()
        .iter()
        .map(|&x| {
            let e = -0.5 * alpha.norm_sqr() - x * x / (2.0 * hbar) + SQRT_2 * alpha * x / hbar.sqrt()
                - 0.5 * alpha * alpha;
            (2.0 * e.re).exp() / (PI * hbar).sqrt()
        })
        .collect();
    trapezoid(&v, grid.dx)
}

/// Grid wide enough for both the printed closed form and the normalized density.
fn integral_grid(alpha: Complex64, mu: f64, nu: f64, hbar: f64) -> Grid {
    let rho = mu * mu + nu * nu;
    let width = (hbar * rho).sqrt();
    // the printed exponent divides by ħ, which moves the printed peak outward
    let shift = SQRT_2 * alpha.norm() * hbar * rho.sqrt() / hbar.min(hbar.sqrt());
    let spread = (hbar * rho * (0.5 + 4.0 * alpha.norm_sqr())).sqrt();
    Grid::centered(width / 64.0, shift + 12.0 * width + 8.0 * spread, 1 << 22).expect("moderate grid")
}

fn printed_cross_x(alpha: Complex64, mu: f64, nu: f64, hbar: f64) -> Complex64 {
    Complex64::new(0.0, (2.0 * hbar).sqrt() * (-2.0 * alpha.norm_sqr()).exp() * (alpha.im * mu + alpha.re * nu))
}

fn printed_cross_x2(alpha: Complex64, mu: f64, nu: f64, hbar: f64) -> f64 {
    let cross = alpha.im * mu + alpha.re * nu;
    (-2.0 * alpha.norm_sqr()).exp() * (0.5 * hbar * (mu * mu + nu * nu) - 2.0 * hbar * cross * cross)
}

fn printed_direct_x(alpha: Complex64, mu: f64, nu: f64, hbar: f64) -> f64 {
    (2.0 * hbar).sqrt() * (alpha.re * mu + alpha.im * nu)
}

fn printed_direct_x2(alpha: Complex64, mu: f64, nu: f64, hbar: f64) -> f64 {
    let d = alpha.re * mu + alpha.im * nu;
    0.5 * hbar * (mu * mu + nu * nu) + 2.0 * hbar * d * d
}

/// Builds every row of the report for `matrix`.
pub fn discrepancy_report(matrix: &DiscrepancyMatrix) -> Result<DiscrepancyReport> {
    let mut rows = Vec::new();
    for &hbar in &matrix.hbars {
        for &alpha in &matrix.alphas {
            rows.push(DiscrepancyRow {
                quantity: "wavefunction-norm",
                alpha,
                parity: None,
                mu: 1.0,
                nu: 0.0,
                hbar,
                printed: printed_wavefunction_norm(alpha, hbar),
                oracle: standard_wavefunction_norm(alpha, hbar),
            });
            let plus = coherent_expansion(alpha, EXPANSION_LEVELS)?;
            let minus = coherent_expansion(-alpha, EXPANSION_LEVELS)?;
            for &(mu, nu) in &matrix.frames {
                let row = |quantity, printed, oracle| DiscrepancyRow {
                    quantity,
                    alpha,
                    parity: None,
                    mu,
                    nu,
                    hbar,
                    printed,
                    oracle,
                };
                let elem = |bra, power| quadrature_matrix_element(bra, &plus, mu, nu, hbar, power);
                let direct_x = elem(&plus, 1);
                let direct_x2 = elem(&plus, 2);
                let cross_x = elem(&minus, 1);
                let cross_x2 = elem(&minus, 2);
                let px = printed_cross_x(alpha, mu, nu, hbar);
                rows.push(row("<a|x|a>", printed_direct_x(alpha, mu, nu, hbar), direct_x.re));
                rows.push(row("<a|x^2|a>", printed_direct_x2(alpha, mu, nu, hbar), direct_x2.re));
                rows.push(row("<-a|x|a> re", px.re, cross_x.re));
                rows.push(row("<-a|x|a> im", px.im, cross_x.im));
                rows.push(row("<-a|x^2|a> re", printed_cross_x2(alpha, mu, nu, hbar), cross_x2.re));
                rows.push(row("<-a|x^2|a> im", 0.0, cross_x2.im));

                for parity in [Parity::Even, Parity::Odd] {
                    let mode = ModeSpec::cat(alpha, parity);
                    if mode.validate().is_err() {
                        continue;
                    }
                    let psi = fock_expansion(&mode, EXPANSION_LEVELS)?;
                    let grid = integral_grid(alpha, mu, nu, hbar);
                    let printed: Vec<f64> = grid
                        .points()
                        .iter()
                        .map(|&x| evenodd_closed_form(alpha, parity, mu, nu, hbar, x, CatExponent::AsPrinted))
                        .collect();
                    let oracle = tomogram_oracle(&psi, mu, nu, hbar, &grid)?;
                    let cat_row = |quantity, printed, oracle| DiscrepancyRow {
                        quantity,
                        alpha,
                        parity: Some(parity),
                        mu,
                        nu,
                        hbar,
                        printed,
                        oracle,
                    };
                    rows.push(cat_row("tomogram-integral", trapezoid(&printed, grid.dx), oracle.integral()));
                    rows.push(cat_row(
                        "var",
                        evenodd_var_closed(alpha, parity, mu, nu, hbar),
                        quadrature_moments(&psi, mu, nu, hbar).1,
                    ));
                }
            }
        }
    }
    Ok(DiscrepancyReport { rows })
}

impl DiscrepancyReport {
    pub fn alpha_zero_rows(&self) -> impl Iterator<Item = &DiscrepancyRow> {
        self.rows.iter().filter(|r| r.alpha.norm() == 0.0)
    }

    /// Fixed-format table, one line per row.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "quantity,alpha_re,alpha_im,parity,mu,nu,hbar,printed,oracle,ratio,agree"
        );
        for r in &self.rows {
            let parity = r.parity.map_or_else(|| "-".to_string(), |p| p.to_string());
            let _ = writeln!(
                s,
                "{},{:.16e},{:.16e},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}",
                r.quantity,
                r.alpha.re,
                r.alpha.im,
                parity,
                r.mu,
                r.nu,
                r.hbar,
                r.printed,
                r.oracle,
                r.ratio(),
                r.agrees()
            );
        }
        s
    }
}
