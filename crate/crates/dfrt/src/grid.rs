//! Uniform 1D grid, banded finite-difference operators and trapezoid quadrature.
//!
//! Everything downstream (potentials, eigensolvers, the two-electron product
//! space) works on a `Grid1D` with Dirichlet boundaries: basis functions are
//! implicitly zero outside `[x_min, x_max]`. The complex-scaled kinetic
//! operator -1/2 e^{-2i theta} d^2/dx^2 is a real banded Laplacian times a
//! complex scalar, so a single symmetric banded representation covers both.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Minimum number of grid points accepted by [`make_grid`].
pub const MIN_POINTS: usize = 8;

/// Upper end of the admissible scaling-angle range (exclusive): pi/4.
/// Beyond it the scaled kinetic term loses its negative-definite real part.
pub const THETA_MAX: f64 = std::f64::consts::FRAC_PI_4;

/// Uniform grid on `[x_min, x_max]` with trapezoid quadrature weights.
#[derive(Debug, Clone)]
pub struct Grid1D {
    x_min: f64,
    x_max: f64,
    n_points: usize,
    spacing: f64,
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl Grid1D {
    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Trapezoid weights: h/2 at both ends, h inside.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Build a uniform grid with `n_points` nodes spanning `[x_min, x_max]`.
pub fn make_grid(x_min: f64, x_max: f64, n_points: usize) -> Result<Grid1D> {
    if !(x_max > x_min) || !x_min.is_finite() || !x_max.is_finite() {
        return Err(Error::Config(format!(
            "grid bounds must satisfy x_min < x_max, got [{x_min}, {x_max}]"
        )));
    }
    if n_points < MIN_POINTS {
        return Err(Error::Config(format!(
            "n_points must be at least {MIN_POINTS}, got {n_points}"
        )));
    }
    let spacing = (x_max - x_min) / (n_points - 1) as f64;
    let points: Vec<f64> = (0..n_points).map(|i| x_min + i as f64 * spacing).collect();
    let mut weights = vec![spacing; n_points];
    weights[0] = 0.5 * spacing;
    weights[n_points - 1] = 0.5 * spacing;
    Ok(Grid1D {
        x_min,
        x_max,
        n_points,
        spacing,
        points,
        weights,
    })
}

/// Central finite-difference accuracy order for the Laplacian stencil.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FdOrder {
    Two,
    #[default]
    Four,
    Six,
}

impl FdOrder {
    /// Stencil half-width.
    pub fn radius(self) -> usize {
        match self {
            FdOrder::Two => 1,
            FdOrder::Four => 2,
            FdOrder::Six => 3,
        }
    }

    /// (center, off-diagonal) coefficients of the second-derivative stencil,
    /// before division by h^2.
    fn coefficients(self) -> (f64, &'static [f64]) {
        match self {
            FdOrder::Two => (-2.0, &[1.0]),
            FdOrder::Four => (-5.0 / 2.0, &[4.0 / 3.0, -1.0 / 12.0]),
            FdOrder::Six => (-49.0 / 18.0, &[3.0 / 2.0, -3.0 / 20.0, 1.0 / 90.0]),
        }
    }

    pub fn from_int(order: usize) -> Result<Self> {
        match order {
            2 => Ok(FdOrder::Two),
            4 => Ok(FdOrder::Four),
            6 => Ok(FdOrder::Six),
            other => Err(Error::Config(format!(
                "finite-difference order must be 2, 4 or 6, got {other}"
            ))),
        }
    }

    pub fn as_int(self) -> usize {
        match self {
            FdOrder::Two => 2,
            FdOrder::Four => 4,
            FdOrder::Six => 6,
        }
    }
}

/// Complex-symmetric banded operator on grid values.
///
/// Only the diagonal and super-diagonals are stored; `band(k)[i]` holds the
/// entry `(i, i+k)`, and symmetry supplies `(i+k, i)`. Dirichlet boundaries:
/// stencil legs that fall outside the grid are dropped.
#[derive(Debug, Clone)]
pub struct BandedOperator {
    dim: usize,
    radius: usize,
    /// bands[k] has length dim - k, k = 0..=radius.
    bands: Vec<Vec<Complex64>>,
}

impl BandedOperator {
    /// Zero operator with the given symmetric half-bandwidth.
    pub fn zeros(dim: usize, radius: usize) -> Self {
        let bands = (0..=radius).map(|k| vec![Complex64::ZERO; dim - k]).collect();
        BandedOperator { dim, radius, bands }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn band(&self, k: usize) -> &[Complex64] {
        &self.bands[k]
    }

    /// Entry (i, j); zero outside the band.
    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
        let k = hi - lo;
        if k > self.radius {
            Complex64::ZERO
        } else {
            self.bands[k][lo]
        }
    }

    /// Multiply every stored entry by `factor`.
    pub fn scale(&mut self, factor: Complex64) {
        for band in &mut self.bands {
            for v in band.iter_mut() {
                *v *= factor;
            }
        }
    }

    /// Add `values` to the diagonal.
    pub fn add_diagonal(&mut self, values: &[Complex64]) -> Result<()> {
        if values.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: values.len(),
            });
        }
        for (d, v) in self.bands[0].iter_mut().zip(values) {
            *d += v;
        }
        Ok(())
    }

    /// y = A x.
    pub fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        let d = &self.bands[0];
        for i in 0..self.dim {
            y[i] = d[i] * x[i];
        }
        for k in 1..=self.radius {
            let band = &self.bands[k];
            for i in 0..self.dim - k {
                let b = band[i];
                y[i] += b * x[i + k];
                y[i + k] += b * x[i];
            }
        }
    }

    /// Dense copy, mainly for the LAPACK-backed eigensolver.
    pub fn to_dense(&self) -> ndarray::Array2<Complex64> {
        let mut a = ndarray::Array2::zeros((self.dim, self.dim));
        for k in 0..=self.radius {
            for (i, &v) in self.bands[k].iter().enumerate() {
                a[[i, i + k]] = v;
                a[[i + k, i]] = v;
            }
        }
        a
    }
}

/// Second-derivative operator d^2/dx^2 at the given accuracy order.
pub fn laplacian(grid: &Grid1D, order: FdOrder) -> BandedOperator {
    let (center, off) = order.coefficients();
    let h2 = grid.spacing() * grid.spacing();
    let n = grid.n_points();
    let mut op = BandedOperator::zeros(n, order.radius());
    op.bands[0] = vec![Complex64::new(center / h2, 0.0); n];
    for (k, &c) in off.iter().enumerate() {
        op.bands[k + 1] = vec![Complex64::new(c / h2, 0.0); n - (k + 1)];
    }
    op
}

/// Complex-scaled kinetic operator -1/2 e^{-2i theta} d^2/dx^2.
///
/// `theta` must lie in [0, pi/4); theta = 0 reduces to the ordinary kinetic
/// operator.
pub fn scaled_kinetic(grid: &Grid1D, theta: f64, order: FdOrder) -> Result<BandedOperator> {
    check_theta_scaling(theta)?;
    let mut op = laplacian(grid, order);
    let factor = -0.5 * Complex64::new(0.0, -2.0 * theta).exp();
    op.scale(factor);
    Ok(op)
}

/// Validate a scaling angle for operator construction (0 allowed).
pub fn check_theta_scaling(theta: f64) -> Result<()> {
    if !theta.is_finite() || theta < 0.0 || theta >= THETA_MAX {
        return Err(Error::Config(format!(
            "theta must lie in [0, {THETA_MAX:.4}), got {theta}"
        )));
    }
    Ok(())
}

/// Trapezoid quadrature of complex samples over the grid.
pub fn integrate(grid: &Grid1D, samples: &[Complex64]) -> Result<Complex64> {
    if samples.len() != grid.n_points() {
        return Err(Error::DimensionMismatch {
            expected: grid.n_points(),
            got: samples.len(),
        });
    }
    let mut acc = Complex64::ZERO;
    for (w, v) in grid.weights().iter().zip(samples) {
        acc += w * v;
    }
    Ok(acc)
}
