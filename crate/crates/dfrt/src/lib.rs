//! Resonance energies, lifetimes and complex densities of unbound 1D model
//! systems via complex coordinate scaling, both exactly (one and two
//! electrons) and through a complex-scaled Kohn-Sham construction.
//!
//! Under the scaling x -> x e^{i theta} a metastable (resonance) state of an
//! open potential turns into an isolated, theta-stationary complex eigenvalue
//! E = Re E - i Gamma / 2 of a complex-symmetric operator, while scattering
//! states rotate with 2 theta. The crate provides
//!
//! * uniform grids, banded finite-difference operators and quadrature
//!   ([`grid`]),
//! * the open-well model potential, its analytic continuation, and the
//!   soft-Coulomb / Hartree machinery ([`potential`]),
//! * dense and shift-invert eigensolvers built on the bilinear c-product
//!   (no complex conjugation) appropriate for complex-symmetric operators
//!   ([`eigen`]),
//! * resonance identification by theta-stationarity and complex densities
//!   ([`resonance`], [`density`]),
//! * the exact two-electron solver in the product grid basis
//!   ([`two_electron`]),
//! * the exchange-only self-consistent Kohn-Sham loop, the density-to-
//!   potential inversion and the correlation-potential split ([`ks`]).

pub mod density;
pub mod eigen;
pub mod error;
pub mod grid;
pub mod potential;
pub mod ks;
pub mod resonance;
pub mod two_electron;

pub use density::ComplexDensity;
pub use error::{Error, Result};
pub use grid::{make_grid, FdOrder, Grid1D};
pub use potential::PotentialParams;
