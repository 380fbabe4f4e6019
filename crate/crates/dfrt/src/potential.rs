//! The open-well model potential, its complex-scaled continuation, and the
//! soft-Coulomb interaction / Hartree machinery.
//!
//! Parent confining well (Gaussian dip in a flat background of height `a`):
//!
//! ```text
//!   v_parent(x) = a (1 - exp(-x^2 / b))
//! ```
//!
//! The open well truncates the background with a smooth double-sigmoid box so
//! that every state can eventually escape:
//!
//! ```text
//!   box(x) = 1/(1 + exp(-2c (x + d))) - 1/(1 + exp(-2c (x - d)))
//!   v(x)   = a (box(x) - exp(-x^2 / b))
//! ```
//!
//! `box` is ~1 inside |x| < d and falls to 0 over a width set by `c`, so v has
//! a central dip of depth ~a, barriers of height ~a near |x| = d, and tends to
//! zero beyond. Resonances of this well are the object of the whole crate.
//!
//! Complex scaling substitutes x -> x e^{i theta} analytically; the scaled
//! potential is evaluated with complex arithmetic directly. The two-particle
//! interaction is the soft Coulomb
//!
//! ```text
//!   w(s) = lambda / sqrt(1 + s^2)     (principal branch once scaled)
//! ```
//!
//! and the Hartree potential of a complex density uses the same scaled kernel
//! as the interaction, so mean-field operators remain analytic continuations
//! of their real-axis counterparts.

use num_complex::Complex64;

use crate::density::ComplexDensity;
use crate::error::{Error, Result};
use crate::grid::Grid1D;

/// Exponent magnitude beyond which sigmoids are saturated to their limits
/// instead of evaluating `exp` (f64 overflows near 709).
const EXP_SATURATION: f64 = 700.0;

/// Parameters of the model system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialParams {
    /// Well depth / barrier height scale.
    pub a: f64,
    /// Gaussian width parameter of the central dip.
    pub b: f64,
    /// Steepness of the box walls.
    pub c: f64,
    /// Half-width of the box (barrier location).
    pub d: f64,
    /// Interaction strength in [0, 1].
    pub lambda: f64,
}

impl Default for PotentialParams {
    fn default() -> Self {
        PotentialParams {
            a: 4.0,
            b: 0.5,
            c: 4.0,
            d: 2.0,
            lambda: 1.0,
        }
    }
}

impl PotentialParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("a", self.a), ("b", self.b), ("c", self.c), ("d", self.d)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !self.lambda.is_finite() || self.lambda < 0.0 || self.lambda > 1.0 {
            return Err(Error::Config(format!(
                "lambda must lie in [0, 1], got {}",
                self.lambda
            )));
        }
        Ok(())
    }
}

/// Logistic sigmoid 1/(1 + e^{-u}) continued to complex argument, saturated
/// where the real part of the exponent would overflow.
fn sigmoid(u: Complex64) -> Complex64 {
    if u.re > EXP_SATURATION {
        Complex64::new(1.0, 0.0)
    } else if u.re < -EXP_SATURATION {
        Complex64::ZERO
    } else {
        Complex64::new(1.0, 0.0) / (Complex64::new(1.0, 0.0) + (-u).exp())
    }
}

fn model_potential_c(p: &PotentialParams, z: Complex64) -> Complex64 {
    let two_c = 2.0 * p.c;
    let box_part = sigmoid(two_c * (z + p.d)) - sigmoid(two_c * (z - p.d));
    // Re(z^2) >= 0 on the rotated ray for theta < pi/4, so the Gaussian never overflows.
    let gauss = (-z * z / p.b).exp();
    p.a * (box_part - gauss)
}

fn parent_potential_c(p: &PotentialParams, z: Complex64) -> Complex64 {
    p.a * (Complex64::new(1.0, 0.0) - (-z * z / p.b).exp())
}

/// Unbounded parent well a (1 - e^{-x^2/b}) on the real axis.
pub fn parent_potential(p: &PotentialParams, x: f64) -> f64 {
    parent_potential_c(p, Complex64::new(x, 0.0)).re
}

/// Open-well model potential on the real axis.
pub fn model_potential(p: &PotentialParams, x: f64) -> f64 {
    model_potential_c(p, Complex64::new(x, 0.0)).re
}

/// Model potential analytically continued along x e^{i theta}.
pub fn scaled_potential(p: &PotentialParams, theta: f64, x: f64) -> Result<Complex64> {
    crate::grid::check_theta_scaling(theta)?;
    let z = Complex64::new(x, 0.0) * Complex64::new(0.0, theta).exp();
    Ok(model_potential_c(p, z))
}

/// Parent well continued along x e^{i theta} (used for potential plots).
pub fn scaled_parent_potential(p: &PotentialParams, theta: f64, x: f64) -> Result<Complex64> {
    crate::grid::check_theta_scaling(theta)?;
    let z = Complex64::new(x, 0.0) * Complex64::new(0.0, theta).exp();
    Ok(parent_potential_c(p, z))
}

/// Scaled model potential sampled over a whole grid.
pub fn scaled_potential_on_grid(
    p: &PotentialParams,
    theta: f64,
    grid: &Grid1D,
) -> Result<Vec<Complex64>> {
    grid.points()
        .iter()
        .map(|&x| scaled_potential(p, theta, x))
        .collect()
}

/// One-body Hamiltonian -1/2 e^{-2i theta} d2/dx2 + v(x e^{i theta}) in banded form.
pub fn scaled_hamiltonian(
    grid: &Grid1D,
    p: &PotentialParams,
    theta: f64,
    order: crate::grid::FdOrder,
) -> Result<crate::grid::BandedOperator> {
    let mut h = crate::grid::scaled_kinetic(grid, theta, order)?;
    h.add_diagonal(&scaled_potential_on_grid(p, theta, grid)?)?;
    Ok(h)
}

/// Soft-Coulomb interaction at separation `s`, scaled:
/// lambda / sqrt(1 + s^2 e^{2i theta}), principal square root.
///
/// For theta < pi/4 the argument of the root stays in the right half-plane,
/// so the branch never crosses a cut.
pub fn soft_coulomb(p: &PotentialParams, theta: f64, s: f64) -> Result<Complex64> {
    crate::grid::check_theta_scaling(theta)?;
    let rot = Complex64::new(0.0, 2.0 * theta).exp();
    let val = (Complex64::new(1.0, 0.0) + s * s * rot).sqrt();
    Ok(p.lambda / val)
}

/// Hartree potential of a complex density along the rotated contour:
/// v_H(x) = lambda * integral dy n(y) / sqrt(1 + (x - y)^2 e^{2 i theta}).
///
/// This is the analytic continuation of the real-axis Hartree potential; the
/// kernel carries the same scaling as the two-particle interaction, so the
/// one-body mean-field problem stays a genuine continuation of an unrotated
/// problem and resonance widths come out contour-independent. theta = 0
/// recovers the plain real-kernel potential. The square root stays on the
/// principal branch: 1 + s^2 e^{2 i theta} has nonnegative imaginary part for
/// theta below pi/4, so the argument never crosses the negative real axis.
pub fn hartree_potential(
    grid: &Grid1D,
    density: &ComplexDensity,
    p: &PotentialParams,
    theta: f64,
) -> Result<Vec<Complex64>> {
    crate::grid::check_theta_scaling(theta)?;
    if density.grid().n_points() != grid.n_points() {
        return Err(Error::DimensionMismatch {
            expected: grid.n_points(),
            got: density.grid().n_points(),
        });
    }
    let n = grid.n_points();
    let h = grid.spacing();
    // Uniform grid: the kernel depends only on |i - j|.
    let kernel: Vec<Complex64> = (0..n)
        .map(|k| soft_coulomb(p, theta, k as f64 * h))
        .collect::<Result<_>>()?;
    let w = grid.weights();
    let nv = density.values();
    let mut vh = vec![Complex64::ZERO; n];
    for i in 0..n {
        let mut acc = Complex64::ZERO;
        for j in 0..n {
            let k = i.abs_diff(j);
            acc += w[j] * nv[j] * kernel[k];
        }
        vh[i] = acc;
    }
    Ok(vh)
}

/// Hartree energy E_H[n] = 1/2 * integral v_H n dx for a precomputed v_H.
pub fn hartree_energy(grid: &Grid1D, vh: &[Complex64], density: &ComplexDensity) -> Result<Complex64> {
    if vh.len() != grid.n_points() {
        return Err(Error::DimensionMismatch {
            expected: grid.n_points(),
            got: vh.len(),
        });
    }
    let prod: Vec<Complex64> = vh
        .iter()
        .zip(density.values())
        .map(|(a, b)| a * b)
        .collect();
    Ok(0.5 * crate::grid::integrate(grid, &prod)?)
}
