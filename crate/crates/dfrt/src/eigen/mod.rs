//! Eigensolvers for complex-symmetric operators built on the bilinear
//! c-product.
//!
//! Complex scaling produces operators that are symmetric (A = A^T) but not
//! Hermitian. The natural inner product is then the c-product
//! `<u|v> = sum_i u_i v_i` with no complex conjugation: left eigenvectors are
//! transposes of right ones, eigenvectors of distinct eigenvalues are
//! c-orthogonal, and normalization means `sum psi^2 = 1` (a complex
//! condition). All solvers here respect that convention.

use ndarray::Array2;
use ndarray_linalg::Eig;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::Grid1D;

mod banded;
mod shift_invert;

pub use banded::{BandedLu, GeneralBanded, BAND_STORAGE_LIMIT_BYTES};
pub use shift_invert::{shift_invert, DEFAULT_EIG_TOL, DEFAULT_KRYLOV_K};

/// Dimension cap for dense diagonalization (zgeev is O(n^3)).
pub const DENSE_DIM_CAP: usize = 4000;

/// C-norms smaller than this (relative to the Euclidean norm) are treated as
/// quasi-null: the vector is left Euclidean-normalized.
const C_NORM_FLOOR: f64 = 1e-12;

/// Bilinear dot product sum_i u_i v_i, no conjugation.
pub fn c_dot(u: &[Complex64], v: &[Complex64]) -> Complex64 {
    debug_assert_eq!(u.len(), v.len());
    let mut acc = Complex64::ZERO;
    for (a, b) in u.iter().zip(v) {
        acc += a * b;
    }
    acc
}

/// Quadrature-weighted c-product integral u(x) v(x) dx on a grid.
pub fn c_inner(grid: &Grid1D, u: &[Complex64], v: &[Complex64]) -> Result<Complex64> {
    if u.len() != grid.n_points() || v.len() != grid.n_points() {
        return Err(Error::DimensionMismatch {
            expected: grid.n_points(),
            got: if u.len() != grid.n_points() {
                u.len()
            } else {
                v.len()
            },
        });
    }
    let mut acc = Complex64::ZERO;
    for ((w, a), b) in grid.weights().iter().zip(u).zip(v) {
        acc += w * a * b;
    }
    Ok(acc)
}

/// Squared Euclidean norm (this one does conjugate).
pub fn l2_norm_sqr(u: &[Complex64]) -> f64 {
    u.iter().map(|v| v.norm_sqr()).sum()
}

/// One eigenvalue with its right eigenvector.
///
/// Vectors from the solvers are c-normalized (`c_dot(v, v) = 1`) whenever the
/// c-norm is not quasi-null; quadrature normalization against a grid is the
/// caller's concern.
#[derive(Debug, Clone)]
pub struct Eigenpair {
    pub value: Complex64,
    pub vector: Vec<Complex64>,
}

/// Scale `v` to c-norm one when possible (principal square root).
/// Returns false if the c-norm was quasi-null and the vector was left alone.
pub fn c_normalize(v: &mut [Complex64]) -> bool {
    let q = c_dot(v, v);
    let l2 = l2_norm_sqr(v);
    if l2 == 0.0 || q.norm() < C_NORM_FLOOR * l2 {
        return false;
    }
    let s = q.sqrt();
    for x in v.iter_mut() {
        *x /= s;
    }
    true
}

/// All eigenpairs of a general complex matrix via LAPACK (zgeev), sorted by
/// ascending real part (ties: ascending |Im|), c-normalized where possible.
pub fn dense_eig(a: &Array2<Complex64>) -> Result<Vec<Eigenpair>> {
    dense_eig_with_cap(a, DENSE_DIM_CAP)
}

/// [`dense_eig`] with an explicit dimension cap.
pub fn dense_eig_with_cap(a: &Array2<Complex64>, cap: usize) -> Result<Vec<Eigenpair>> {
    let (r, c) = a.dim();
    if r != c {
        return Err(Error::DimensionMismatch { expected: r, got: c });
    }
    if r > cap {
        return Err(Error::TooLarge(format!(
            "dense eigensolve of dimension {r} exceeds the cap {cap}"
        )));
    }
    let (values, vectors) = a
        .eig()
        .map_err(|e| Error::Solver(format!("LAPACK zgeev failed: {e}")))?;
    if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::Solver("zgeev produced non-finite eigenvalues".into()));
    }
    let mut pairs: Vec<Eigenpair> = values
        .iter()
        .enumerate()
        .map(|(idx, &value)| {
            let mut vector: Vec<Complex64> = vectors.column(idx).to_vec();
            c_normalize(&mut vector);
            Eigenpair { value, vector }
        })
        .collect();
    sort_by_real_part(&mut pairs);
    Ok(pairs)
}

/// Ascending real part; ties broken by ascending imaginary-part magnitude.
pub fn sort_by_real_part(pairs: &mut [Eigenpair]) {
    pairs.sort_by(|a, b| {
        a.value
            .re
            .total_cmp(&b.value.re)
            .then(a.value.im.abs().total_cmp(&b.value.im.abs()))
    });
}

/// Complex-symmetric linear operator usable by the shift-invert solver:
/// matrix-vector products plus a banded realization of A - shift I.
pub trait ComplexSymOp {
    fn dim(&self) -> usize;
    /// y = A x.
    fn apply(&self, x: &[Complex64], y: &mut [Complex64]);
    /// Banded storage of A - shift I, ready for factorization.
    fn shifted_banded(&self, shift: Complex64) -> Result<GeneralBanded>;
}

impl ComplexSymOp for crate::grid::BandedOperator {
    fn dim(&self) -> usize {
        self.dim()
    }

    fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        crate::grid::BandedOperator::apply(self, x, y);
    }

    fn shifted_banded(&self, shift: Complex64) -> Result<GeneralBanded> {
        let n = self.dim();
        let r = self.radius();
        let mut gb = GeneralBanded::zeros(n, r, r)?;
        for i in 0..n {
            gb.add(i, i, self.band(0)[i] - shift);
        }
        for k in 1..=r {
            for (i, &v) in self.band(k).iter().enumerate() {
                gb.add(i, i + k, v);
                gb.add(i + k, i, v);
            }
        }
        Ok(gb)
    }
}

/// Dense operator wrapper (test oracles, small systems). The caller is
/// responsible for the matrix actually being complex symmetric when handing
/// it to the Lanczos-based solver.
#[derive(Debug, Clone)]
pub struct DenseOp(pub Array2<Complex64>);

impl ComplexSymOp for DenseOp {
    fn dim(&self) -> usize {
        self.0.nrows()
    }

    fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        let n = self.dim();
        assert_eq!(x.len(), n);
        assert_eq!(y.len(), n);
        for i in 0..n {
            let mut acc = Complex64::ZERO;
            let row = self.0.row(i);
            for (a, b) in row.iter().zip(x) {
                acc += a * b;
            }
            y[i] = acc;
        }
    }

    fn shifted_banded(&self, shift: Complex64) -> Result<GeneralBanded> {
        let n = self.dim();
        let mut gb = GeneralBanded::zeros(n, n - 1, n - 1)?;
        for i in 0..n {
            for j in 0..n {
                let mut v = self.0[[i, j]];
                if i == j {
                    v -= shift;
                }
                if v != Complex64::ZERO {
                    gb.add(i, j, v);
                }
            }
        }
        Ok(gb)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_grid, scaled_kinetic, FdOrder};
    use ndarray::array;
    use rand::Rng;
    use rand::SeedableRng;

    #[test]
    fn c_dot_examples() {
        // two identical real unit vectors
        let u = vec![Complex64::new(0.6, 0.0), Complex64::new(0.8, 0.0)];
        assert!((c_dot(&u, &u) - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        // multiplying one argument by i multiplies the product by i (bilinearity,
        // a Hermitian product would conjugate instead)
        let iu: Vec<Complex64> = u.iter().map(|v| v * Complex64::new(0.0, 1.0)).collect();
        assert!((c_dot(&iu, &u) - Complex64::new(0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn c_inner_matches_direct_sum() {
        let g = make_grid(-2.0, 2.0, 33).unwrap();
        let u: Vec<Complex64> = g
            .points()
            .iter()
            .map(|&x| Complex64::new(x.sin(), 0.2 * x))
            .collect();
        let v: Vec<Complex64> = g
            .points()
            .iter()
            .map(|&x| Complex64::new(x.cos(), -0.1 * x * x))
            .collect();
        let got = c_inner(&g, &u, &v).unwrap();
        let mut expect = Complex64::ZERO;
        for i in 0..33 {
            expect += g.weights()[i] * u[i] * v[i];
        }
        assert!((got - expect).norm() < 1e-14);
        assert!(c_inner(&g, &u[..10], &v).is_err());
    }

    #[test]
    fn dense_eig_diagonal() {
        let a = array![
            [Complex64::new(2.0, 0.0), Complex64::ZERO],
            [Complex64::ZERO, Complex64::new(1.0, 1.0)],
        ];
        let pairs = dense_eig(&a).unwrap();
        assert_eq!(pairs.len(), 2);
        assert!((pairs[0].value - Complex64::new(1.0, 1.0)).norm() < 1e-12);
        assert!((pairs[1].value - Complex64::new(2.0, 0.0)).norm() < 1e-12);
        // c-normalized
        for p in &pairs {
            assert!((c_dot(&p.vector, &p.vector) - Complex64::new(1.0, 0.0)).norm() < 1e-10);
        }
    }

    #[test]
    fn dense_eig_respects_cap() {
        let a = Array2::<Complex64>::zeros((12, 12));
        assert!(dense_eig_with_cap(&a, 8).is_err());
        assert!(dense_eig_with_cap(&a, 12).is_ok());
    }

    fn harmonic_hamiltonian(n: usize) -> Array2<Complex64> {
        let g = make_grid(-10.0, 10.0, n).unwrap();
        let mut h = scaled_kinetic(&g, 0.0, FdOrder::Four).unwrap();
        let diag: Vec<Complex64> = g
            .points()
            .iter()
            .map(|&x| Complex64::new(0.5 * x * x, 0.0))
            .collect();
        h.add_diagonal(&diag).unwrap();
        h.to_dense()
    }

    #[test]
    fn harmonic_oscillator_ground_state() {
        let pairs = dense_eig(&harmonic_hamiltonian(1001)).unwrap();
        // E_n = n + 1/2
        for (n, expect) in [(0usize, 0.5f64), (1, 1.5), (2, 2.5)] {
            let e = pairs[n].value;
            assert!(
                (e.re - expect).abs() < 1e-6 && e.im.abs() < 1e-10,
                "level {n}: {e}"
            );
        }
    }

    #[test]
    fn real_symmetric_input_gives_real_spectrum() {
        let pairs = dense_eig(&harmonic_hamiltonian(301)).unwrap();
        for p in &pairs {
            assert!(p.value.im.abs() < 1e-10, "complex eigenvalue {}", p.value);
        }
    }

    #[test]
    fn free_particle_spectrum_rotates_by_minus_two_theta() {
        // Pure scaled kinetic operator: every eigenvalue is a positive real
        // number times e^{-2 i theta}.
        let g = make_grid(-10.0, 10.0, 201).unwrap();
        let theta = 0.35;
        let h = scaled_kinetic(&g, theta, FdOrder::Four).unwrap();
        let pairs = dense_eig(&h.to_dense()).unwrap();
        for p in &pairs {
            let arg = p.value.arg();
            assert!(
                (arg + 2.0 * theta).abs() < 1e-10,
                "eigenvalue {} has argument {arg}, want {}",
                p.value,
                -2.0 * theta
            );
        }
    }

    #[test]
    fn eigenpairs_satisfy_residual_and_c_orthogonality() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let n = 40;
        let mut a = Array2::<Complex64>::zeros((n, n));
        for i in 0..n {
            for j in i..n {
                let v = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                a[[i, j]] = v;
                a[[j, i]] = v;
            }
        }
        let pairs = dense_eig(&a).unwrap();
        for p in &pairs {
            let mut av = vec![Complex64::ZERO; n];
            DenseOp(a.clone()).apply(&p.vector, &mut av);
            let mut res = 0.0f64;
            for i in 0..n {
                res += (av[i] - p.value * p.vector[i]).norm_sqr();
            }
            let res = res.sqrt() / l2_norm_sqr(&p.vector).sqrt();
            assert!(res < 1e-10, "residual {res} for {}", p.value);
        }
        // c-orthogonality between distinct eigenvalues
        for i in 0..n {
            for j in i + 1..n {
                if (pairs[i].value - pairs[j].value).norm() > 1e-6 {
                    let o = c_dot(&pairs[i].vector, &pairs[j].vector).norm();
                    assert!(o < 1e-8, "pair ({i},{j}) overlap {o}");
                }
            }
        }
    }
}
