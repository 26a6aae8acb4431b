//! Uniform grids on the lattice `x_j = x0 + j·dx` and trapezoid helpers.

use crate::error::{Error, Result};

/// Default ceiling on grid sizes (2²² points).
pub const DEFAULT_MAX_POINTS: usize = 1 << 22;

/// `count` points starting at `x0` with spacing `dx`; `count` is a power of two.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub x0: f64,
    pub dx: f64,
    pub count: usize,
}

/// How densities are discretized: spacing in units of the standard deviation
/// and the half-width of the covered interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPolicy {
    pub points_per_sigma: f64,
    pub half_width_sigmas: f64,
    pub max_points: usize,
}

impl Default for GridPolicy {
    fn default() -> Self {
        GridPolicy {
            points_per_sigma: 64.0,
            half_width_sigmas: 8.0,
            max_points: DEFAULT_MAX_POINTS,
        }
    }
}

impl Grid {
    pub fn new(x0: f64, dx: f64, count: usize) -> Result<Self> {
        if !(dx > 0.0 && dx.is_finite() && x0.is_finite()) {
            return Err(Error::InvalidInput(format!("bad grid spacing {dx} or start {x0}")));
        }
        if !count.is_power_of_two() || count < 2 {
            return Err(Error::InvalidInput(format!("grid count {count} is not a power of two >= 2")));
        }
        Ok(Grid { x0, dx, count })
    }

    /// Grid on the lattice `j·dx` (so grids with equal `dx` share nodes)
    /// covering `[-half_width, half_width]`.
    pub fn centered(dx: f64, half_width: f64, max_points: usize) -> Result<Self> {
        if !(dx > 0.0 && dx.is_finite()) {
            return Err(Error::InvalidInput(format!("grid spacing underflow: dx = {dx}")));
        }
        let half_steps = (half_width / dx).ceil();
        if !half_steps.is_finite() || half_steps > max_points as f64 {
            return Err(Error::GridTooLarge {
                requested: usize::MAX,
                max: max_points,
            });
        }
        let count = (2 * half_steps as usize + 1).next_power_of_two();
        if count > max_points {
            return Err(Error::GridTooLarge {
                requested: count,
                max: max_points,
            });
        }
        Grid::new(-((count / 2) as f64) * dx, dx, count)
    }

    /// Grid for a density with standard deviation `sigma` centered at 0.
    pub fn for_sigma(sigma: f64, policy: &GridPolicy) -> Result<Self> {
        Grid::centered(
            sigma / policy.points_per_sigma,
            policy.half_width_sigmas * sigma,
            policy.max_points,
        )
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.dx
    }

    pub fn last(&self) -> f64 {
        self.x(self.count - 1)
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.count).map(|i| self.x(i)).collect()
    }

    /// Index of `x0` on the `dx` lattice, when the grid lies on it.
    pub fn lattice_offset(&self) -> Option<i64> {
        let k = (self.x0 / self.dx).round();
        ((self.x0 - k * self.dx).abs() <= 1e-9 * self.dx).then_some(k as i64)
    }

    /// Same grid with every coordinate multiplied by `s > 0`.
    pub fn scaled(&self, s: f64) -> Grid {
        Grid {
            x0: self.x0 * s,
            dx: self.dx * s,
            count: self.count,
        }
    }
}

/// Trapezoid integral of samples on `grid`.
pub fn trapezoid(values: &[f64], dx: f64) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => 0.0,
        n => (values.iter().sum::<f64>() - 0.5 * (values[0] + values[n - 1])) * dx,
    }
}

/// Running trapezoid integral, starting at 0.
pub fn cumulative_trapezoid(values: &[f64], dx: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    for (i, &v) in values.iter().enumerate() {
        if i > 0 {
            acc += 0.5 * (values[i - 1] + v) * dx;
        }
        out.push(acc);
    }
    out
}

/// Running integral with the leading Euler–Maclaurin end correction, accurate
/// to `O(dx⁴)` for smooth densities.
pub fn cumulative_corrected(values: &[f64], dx: f64) -> Vec<f64> {
    let n = values.len();
    let mut out = cumulative_trapezoid(values, dx);
    if n < 3 {
        return out;
    }
    let slope = |i: usize| match i {
        0 => (values[1] - values[0]) / dx,
        i if i == n - 1 => (values[n - 1] - values[n - 2]) / dx,
        i => (values[i + 1] - values[i - 1]) / (2.0 * dx),
    };
    let start = slope(0);
    for (i, c) in out.iter_mut().enumerate().skip(1) {
        *c -= dx * dx / 12.0 * (slope(i) - start);
    }
    out
}

/// Linear interpolation of grid samples, zero outside the grid.
pub fn interpolate(grid: &Grid, values: &[f64], x: f64) -> f64 {
    let t = (x - grid.x0) / grid.dx;
    if !(t >= 0.0) || t > (grid.count - 1) as f64 {
        return 0.0;
    }
    let i = (t.floor() as usize).min(grid.count - 2);
    let f = t - i as f64;
    values[i] * (1.0 - f) + values[i + 1] * f
}

/// Integral up to `x` of the piecewise-linear interpolant, given the running
/// trapezoid integral `cumulative` of the same samples.
pub fn cdf_at(grid: &Grid, values: &[f64], cumulative: &[f64], x: f64) -> f64 {
    let t = (x - grid.x0) / grid.dx;
    if !(t > 0.0) {
        return 0.0;
    }
    if t >= (grid.count - 1) as f64 {
        return cumulative[grid.count - 1];
    }
    let i = t.floor() as usize;
    let s = (t - i as f64) * grid.dx;
    cumulative[i] + values[i] * s + (values[i + 1] - values[i]) * s * s / (2.0 * grid.dx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centered_grid_covers_and_is_on_lattice() {
        let g = Grid::centered(0.1, 3.0, DEFAULT_MAX_POINTS).unwrap();
        assert!(g.count.is_power_of_two());
        assert!(g.x0 <= -3.0 && g.last() >= 3.0);
        assert_eq!(g.lattice_offset(), Some(-(g.count as i64) / 2));
        assert!(g.x(g.count / 2).abs() < 1e-15);
    }

    #[test]
    fn policy_grid_spacing() {
        let g = Grid::for_sigma(2.0, &GridPolicy::default()).unwrap();
        assert!(g.dx <= 2.0 / 64.0 + 1e-15);
        assert!(g.x0 <= -16.0 && g.last() >= 16.0);
    }

    #[test]
    fn too_large_grid_fails() {
        assert!(matches!(
            Grid::centered(1e-9, 1.0, DEFAULT_MAX_POINTS),
            Err(Error::GridTooLarge { .. })
        ));
        assert!(Grid::centered(0.0, 1.0, 16).is_err());
        assert!(Grid::new(0.0, 1.0, 12).is_err());
    }

    #[test]
    fn trapezoid_rules() {
        let v = vec![1.0; 11];
        assert!((trapezoid(&v, 0.1) - 1.0).abs() < 1e-15);
        let c = cumulative_trapezoid(&v, 0.1);
        assert!((c[10] - 1.0).abs() < 1e-15 && c[0] == 0.0);
    }

    #[test]
    fn cdf_integrates_interpolant() {
        let g = Grid::new(0.0, 1.0, 4).unwrap();
        let v = vec![0.0, 2.0, 2.0, 0.0];
        let c = cumulative_trapezoid(&v, g.dx);
        assert_eq!(cdf_at(&g, &v, &c, 0.5), 0.25);
        assert_eq!(cdf_at(&g, &v, &c, 1.5), 2.0);
        assert_eq!(cdf_at(&g, &v, &c, 9.0), 4.0);
        assert_eq!(cdf_at(&g, &v, &c, -1.0), 0.0);
    }

    #[test]
    fn interpolation_is_exact_on_nodes() {
        let g = Grid::new(-1.0, 0.5, 8).unwrap();
        let v: Vec<f64> = (0..8).map(|i| (i * i) as f64).collect();
        assert_eq!(interpolate(&g, &v, g.x(3)), 9.0);
        assert_eq!(interpolate(&g, &v, -1.25), 0.0);
        assert!((interpolate(&g, &v, g.x(2) + 0.25) - 6.5).abs() < 1e-15);
    }
}
