//! Complex one-particle densities on a grid.
//!
//! Under complex scaling the density is the bilinear (no conjugation)
//! expectation of the density operator, so it is genuinely complex valued.
//! Its defining invariant is that it still integrates to the particle number.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::Grid1D;

/// Tolerance on |integral(n) - N| accepted by the checked constructor.
pub const PARTICLE_NUMBER_TOL: f64 = 1e-8;

/// Complex density n(x) carrying its grid and particle number.
#[derive(Debug, Clone)]
pub struct ComplexDensity {
    grid: Grid1D,
    values: Vec<Complex64>,
    particle_number: u32,
}

impl ComplexDensity {
    /// Build a density, enforcing that it integrates to `particle_number`
    /// within [`PARTICLE_NUMBER_TOL`].
    pub fn new(grid: Grid1D, values: Vec<Complex64>, particle_number: u32) -> Result<Self> {
        if values.len() != grid.n_points() {
            return Err(Error::DimensionMismatch {
                expected: grid.n_points(),
                got: values.len(),
            });
        }
        let d = ComplexDensity {
            grid,
            values,
            particle_number,
        };
        let total = d.integral();
        let defect = (total - Complex64::new(particle_number as f64, 0.0)).norm();
        if defect > PARTICLE_NUMBER_TOL {
            return Err(Error::Normalization(format!(
                "density integrates to {total} instead of {particle_number} (defect {defect:.3e})"
            )));
        }
        Ok(d)
    }

    /// Constructor without the particle-number check, for synthetic test
    /// densities and intermediate mixing states.
    pub fn new_unchecked(grid: Grid1D, values: Vec<Complex64>, particle_number: u32) -> Self {
        assert_eq!(values.len(), grid.n_points());
        ComplexDensity {
            grid,
            values,
            particle_number,
        }
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn particle_number(&self) -> u32 {
        self.particle_number
    }

    /// Trapezoid integral of the density.
    pub fn integral(&self) -> Complex64 {
        crate::grid::integrate(&self.grid, &self.values).expect("length checked at construction")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    #[test]
    fn accepts_normalized_density() {
        let g = make_grid(-10.0, 10.0, 201).unwrap();
        let raw: Vec<Complex64> = g
            .points()
            .iter()
            .map(|&x| Complex64::new((-x * x).exp(), 0.1 * x * (-x * x).exp()))
            .collect();
        let total = crate::grid::integrate(&g, &raw).unwrap();
        let scaled: Vec<Complex64> = raw.iter().map(|v| v * (2.0 / total)).collect();
        let d = ComplexDensity::new(g, scaled, 2).unwrap();
        assert_eq!(d.particle_number(), 2);
        assert!((d.integral() - Complex64::new(2.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn rejects_wrong_particle_number() {
        let g = make_grid(-10.0, 10.0, 101).unwrap();
        let raw: Vec<Complex64> = g
            .points()
            .iter()
            .map(|&x| Complex64::new((-x * x).exp(), 0.0))
            .collect();
        let err = ComplexDensity::new(g, raw, 2).unwrap_err();
        match err {
            crate::error::Error::Normalization(_) => {}
            other => panic!("expected normalization error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_length_mismatch() {
        let g = make_grid(-10.0, 10.0, 101).unwrap();
        let err = ComplexDensity::new(g, vec![Complex64::ZERO; 77], 0).unwrap_err();
        match err {
            crate::error::Error::DimensionMismatch { .. } => {}
            other => panic!("unexpected {other:?}"),
        }
    }
}
