//! Exact two-electron solver on the tensor-product grid.
//!
//! Two interacting electrons on an N-point grid live on the N^2-point
//! product grid with composite index `i * N + j` (first electron varies
//! slowest). The scaled Hamiltonian is
//!
//! ```text
//! H2 = h (x) I  +  I (x) h  +  diag W(x_i - x_j)
//! ```
//!
//! with `h` the scaled one-body operator and `W` the scaled soft-Coulomb
//! repulsion, which depends only on the separation and is tabulated once
//! per angle. The operator is complex symmetric and commutes with particle
//! exchange `(i, j) -> (j, i)`, so eigenvectors can be classified by their
//! exchange parity after the fact; the solver works in the full product
//! space and checks parity on the selected state instead of projecting
//! beforehand.
//!
//! Matrix-free application costs O(N^2) per stencil point and is cheap.
//! The shifted factorization needed for shift-invert iteration is the
//! expensive part: the bandwidth is `radius * N`, so LU storage grows like
//! N^3 and hits the banded-storage budget near N = 320. Routine runs use
//! N around 300; refining the grid much further requires a different
//! factorization strategy than this crate carries.

use num_complex::Complex64;

use crate::density::ComplexDensity;
use crate::eigen::{shift_invert, ComplexSymOp, GeneralBanded};
use crate::error::{Error, Result};
use crate::grid::{check_theta_scaling, FdOrder, Grid1D, THETA_MAX};
use crate::potential::{scaled_hamiltonian, soft_coulomb, PotentialParams};
use crate::resonance::{decaying_convention, theta_trajectory, ResonanceEigenpair, ThetaTrajectory};
use crate::resonance::{DEFAULT_STATIONARITY_TOL, NORMALIZATION_TOL};

/// Relative defect below which a product-space vector counts as exchange
/// symmetric (or antisymmetric).
pub const SYMMETRY_TOL: f64 = 1e-8;

/// Detuning added to the automatic shift estimate. Without interaction the
/// estimate lands exactly on a two-body eigenvalue and the shifted
/// factorisation is numerically singular; a small offset keeps it well
/// conditioned while leaving the spectral window unchanged.
const SHIFT_DETUNE: Complex64 = Complex64::new(0.05, -0.05);

/// Knobs shared by the lowest-energy-resonance drivers.
///
/// Stationarity needs at least two angles; the drivers solve at the
/// requested angle and once more at `theta + theta_step` and compare.
#[derive(Debug, Clone, Copy)]
pub struct LerOptions {
    /// Offset to the companion angle used for the stationarity check.
    pub theta_step: f64,
    /// Largest admissible |dE/dtheta| for a trajectory to count as stationary.
    pub stationarity_tol: f64,
    /// Finite-difference stencil order.
    pub fd_order: FdOrder,
    /// Number of eigenvalue trajectories tracked across angles. The default
    /// suits shift-anchored drivers, whose window is centred where the
    /// resonance is expected; the dense one-body driver ranks by real part
    /// instead and overrides this upward (see [`ONE_BODY_TRACK_COUNT`]),
    /// because the rotated continuum can undercut the resonance.
    pub track_count: usize,
    /// Residual tolerance for the iterative eigensolver. Continuum
    /// combinations come in quasi-degenerate exchange pairs whose splitting
    /// is tunnelling-suppressed far below 1e-8; demanding tighter residuals
    /// stalls on resolving those pairs without changing any tracked energy.
    pub eig_tol: f64,
}

impl Default for LerOptions {
    fn default() -> Self {
        Self {
            theta_step: 0.08,
            stationarity_tol: DEFAULT_STATIONARITY_TOL,
            fd_order: FdOrder::default(),
            track_count: 12,
            eig_tol: 1e-8,
        }
    }
}

impl LerOptions {
    fn validate(&self, theta: f64) -> Result<()> {
        check_theta_scaling(theta)?;
        if self.theta_step <= 0.0 {
            return Err(Error::Config("theta_step must be positive".into()));
        }
        if theta + self.theta_step >= THETA_MAX {
            return Err(Error::Config(format!(
                "companion angle {:.4} for the stationarity check exceeds the \
                 scaling limit; lower theta or theta_step",
                theta + self.theta_step
            )));
        }
        if self.track_count < 2 {
            return Err(Error::Config("track_count must be at least 2".into()));
        }
        Ok(())
    }
}

/// Scaled two-electron Hamiltonian in matrix-free form.
///
/// Stores the one-body banded operator and the interaction tabulated by
/// separation index; rows are never materialised except inside
/// [`ComplexSymOp::shifted_banded`].
pub struct TwoBodyOperator {
    grid: Grid1D,
    theta: f64,
    h1: crate::grid::BandedOperator,
    /// w_sep[k] = W(k * spacing) on the rotated contour.
    w_sep: Vec<Complex64>,
}

impl TwoBodyOperator {
    /// Number of points of the underlying one-dimensional grid.
    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    /// Scaling angle the operator was built at.
    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// One-body part `h` of the tensor sum.
    pub fn one_body(&self) -> &crate::grid::BandedOperator {
        &self.h1
    }

    /// Interaction value at separation `k * spacing`.
    pub fn interaction(&self, sep: usize) -> Complex64 {
        self.w_sep[sep]
    }
}

/// Build the scaled two-electron Hamiltonian with the default stencil order.
pub fn build_h2(grid: &Grid1D, p: &PotentialParams, theta: f64) -> Result<TwoBodyOperator> {
    build_h2_with(grid, p, theta, FdOrder::default())
}

/// Build the scaled two-electron Hamiltonian with an explicit stencil order.
pub fn build_h2_with(
    grid: &Grid1D,
    p: &PotentialParams,
    theta: f64,
    order: FdOrder,
) -> Result<TwoBodyOperator> {
    let h1 = scaled_hamiltonian(grid, p, theta, order)?;
    let h = grid.spacing();
    let w_sep = (0..grid.n_points())
        .map(|k| soft_coulomb(p, theta, k as f64 * h))
        .collect::<Result<Vec<_>>>()?;
    Ok(TwoBodyOperator {
        grid: grid.clone(),
        theta,
        h1,
        w_sep,
    })
}

impl ComplexSymOp for TwoBodyOperator {
    fn dim(&self) -> usize {
        let n = self.grid.n_points();
        n * n
    }

    fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        let n = self.grid.n_points();
        let r = self.h1.radius();
        let d0 = self.h1.band(0);
        // I (x) h: second-coordinate stencil, contiguous within each block
        for i in 0..n {
            let row = &x[i * n..(i + 1) * n];
            let out = &mut y[i * n..(i + 1) * n];
            for j in 0..n {
                let mut acc = d0[j] * row[j];
                for k in 1..=r {
                    let b = self.h1.band(k);
                    if j >= k {
                        acc += b[j - k] * row[j - k];
                    }
                    if j + k < n {
                        acc += b[j] * row[j + k];
                    }
                }
                out[j] = acc;
            }
        }
        // h (x) I: first-coordinate stencil couples whole blocks at stride n
        for i in 0..n {
            let out = &mut y[i * n..(i + 1) * n];
            let di = d0[i];
            for (o, &xi) in out.iter_mut().zip(&x[i * n..(i + 1) * n]) {
                *o += di * xi;
            }
            for k in 1..=r {
                let b = self.h1.band(k);
                if i >= k {
                    let c = b[i - k];
                    let xb = &x[(i - k) * n..(i - k + 1) * n];
                    for (o, &xv) in out.iter_mut().zip(xb) {
                        *o += c * xv;
                    }
                }
                if i + k < n {
                    let c = b[i];
                    let xb = &x[(i + k) * n..(i + k + 1) * n];
                    for (o, &xv) in out.iter_mut().zip(xb) {
                        *o += c * xv;
                    }
                }
            }
        }
        // interaction is diagonal in the product basis
        for i in 0..n {
            let out = &mut y[i * n..(i + 1) * n];
            let row = &x[i * n..(i + 1) * n];
            for j in 0..n {
                out[j] += self.w_sep[i.abs_diff(j)] * row[j];
            }
        }
    }

    fn shifted_banded(&self, shift: Complex64) -> Result<GeneralBanded> {
        let n = self.grid.n_points();
        let r = self.h1.radius();
        let half = r * n;
        let mut gb = GeneralBanded::zeros(n * n, half, half)?;
        let d0 = self.h1.band(0);
        for i in 0..n {
            for j in 0..n {
                let row = i * n + j;
                gb.add(row, row, d0[i] + d0[j] + self.w_sep[i.abs_diff(j)] - shift);
                for k in 1..=r {
                    let b = self.h1.band(k);
                    // second coordinate: offset k, stays inside the block
                    if j + k < n {
                        gb.add(row, row + k, b[j]);
                        gb.add(row + k, row, b[j]);
                    }
                    // first coordinate: offset k * n, couples blocks
                    if i + k < n {
                        gb.add(row, row + k * n, b[i]);
                        gb.add(row + k * n, row, b[i]);
                    }
                }
            }
        }
        Ok(gb)
    }
}

/// Relative defects of a product-space vector against its exchange image:
/// `(|psi - psi^T| / |psi|, |psi + psi^T| / |psi|)` in the Euclidean norm.
fn exchange_defects(n: usize, v: &[Complex64]) -> (f64, f64) {
    let mut sym = 0.0;
    let mut anti = 0.0;
    let mut tot = 0.0;
    for i in 0..n {
        for j in 0..n {
            let a = v[i * n + j];
            let b = v[j * n + i];
            sym += (a - b).norm_sqr();
            anti += (a + b).norm_sqr();
            tot += a.norm_sqr();
        }
    }
    ((sym / tot).sqrt(), (anti / tot).sqrt())
}

/// Bilinear self-overlap under the two-dimensional quadrature,
/// `sum_{ij} w_i w_j psi_{ij}^2`.
fn c_norm_2d(grid: &Grid1D, v: &[Complex64]) -> Complex64 {
    let n = grid.n_points();
    let w = grid.weights();
    let mut q = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            let a = v[i * n + j];
            q += w[i] * w[j] * a * a;
        }
    }
    q
}

/// Trajectories tracked by the dense one-body driver. It ranks candidates
/// by real part, and the continuum rotates down by 2 theta, so at large
/// angles or wide boxes a dozen-plus rotated continuum states sit below
/// the resonance; the list must clear them with margin.
pub const ONE_BODY_TRACK_COUNT: usize = 24;

/// One-body lowest-energy resonance by dense diagonalisation at `theta`
/// and at one companion angle.
///
/// The returned vector is normalised to `integral phi^2 dx = 1` under the
/// bilinear form, ready for density or matrix-element use.
pub fn exact_1e_ler(grid: &Grid1D, p: &PotentialParams, theta: f64) -> Result<ResonanceEigenpair> {
    let opts = LerOptions {
        track_count: ONE_BODY_TRACK_COUNT,
        ..LerOptions::default()
    };
    exact_1e_ler_with(grid, p, theta, &opts)
}

/// Same as [`exact_1e_ler`] with explicit options.
pub fn exact_1e_ler_with(
    grid: &Grid1D,
    p: &PotentialParams,
    theta: f64,
    opts: &LerOptions,
) -> Result<ResonanceEigenpair> {
    opts.validate(theta)?;
    let thetas = [theta, theta + opts.theta_step];
    let traj = theta_trajectory(
        |th| scaled_hamiltonian(grid, p, th, opts.fd_order),
        &thetas,
        opts.track_count,
    )?;
    let mut pair = crate::resonance::select_ler(&traj, opts.stationarity_tol)?;
    crate::resonance::c_normalize_on_grid(grid, &mut pair.vector)?;
    Ok(pair)
}

/// Two-electron lowest-energy resonance.
///
/// Solves the interacting product-space problem by shift-invert iteration
/// at `theta` and at a companion angle, matches trajectories, and selects
/// the lowest stationary exchange-symmetric state. A stationary
/// antisymmetric state below it is reported to stderr and skipped: with
/// two electrons in a spin singlet only the symmetric spatial state is
/// admissible.
///
/// `shift_hint` targets the shift-invert spectrum window; when absent the
/// shift is taken as twice the one-body resonance energy plus the
/// zero-separation interaction, a cheap estimate of where the lowest
/// two-electron resonance sits.
pub fn solve_2e_ler(
    grid: &Grid1D,
    p: &PotentialParams,
    theta: f64,
    shift_hint: Option<Complex64>,
) -> Result<ResonanceEigenpair> {
    solve_2e_ler_with(grid, p, theta, shift_hint, &LerOptions::default())
}

/// Same as [`solve_2e_ler`] with explicit options.
pub fn solve_2e_ler_with(
    grid: &Grid1D,
    p: &PotentialParams,
    theta: f64,
    shift_hint: Option<Complex64>,
    opts: &LerOptions,
) -> Result<ResonanceEigenpair> {
    opts.validate(theta)?;
    let thetas = [theta, theta + opts.theta_step];
    let mut sets = Vec::with_capacity(thetas.len());
    for &th in &thetas {
        let shift = match shift_hint {
            Some(s) => s,
            // contour eigenvalue, not the decaying-convention energy: the
            // shift must sit near the spectrum of the operator actually
            // factorised at this angle
            None => {
                let one = exact_1e_ler_with(grid, p, th, opts)?;
                2.0 * one.raw_energy + soft_coulomb(p, th, 0.0)? + SHIFT_DETUNE
            }
        };
        let op = build_h2_with(grid, p, th, opts.fd_order)?;
        // the factorisation dominates memory; one operator lives at a time
        sets.push(shift_invert(&op, shift, opts.track_count, opts.eig_tol)?);
    }
    let traj = ThetaTrajectory::from_eigenpair_sets(&thetas, sets)?;
    select_symmetric_ler(grid, &traj, opts.stationarity_tol)
}

/// Lowest stationary exchange-symmetric trajectory of a two-angle
/// product-space run, c-normalised under the 2d quadrature.
fn select_symmetric_ler(
    grid: &Grid1D,
    traj: &ThetaTrajectory,
    stationarity_tol: f64,
) -> Result<ResonanceEigenpair> {
    let n = grid.n_points();
    let mid = traj.mid_index();
    let mut candidates: Vec<usize> = (0..traj.num_trajectories())
        .filter(|&j| {
            traj.energies(j)[mid].re > 0.0 && traj.stationarity(j) < stationarity_tol
        })
        .collect();
    candidates.sort_by(|&a, &b| {
        traj.energies(a)[mid]
            .re
            .total_cmp(&traj.energies(b)[mid].re)
    });
    for j in candidates {
        let raw_energy = traj.energies(j)[mid];
        let (dsym, danti) = exchange_defects(n, traj.mid_vector(j));
        if danti < SYMMETRY_TOL {
            eprintln!(
                "notice: skipping exchange-antisymmetric stationary state at \
                 E = {:.6} + {:.6}i; a singlet needs the symmetric spatial state",
                raw_energy.re, raw_energy.im
            );
            continue;
        }
        if dsym >= SYMMETRY_TOL {
            return Err(Error::Solver(format!(
                "stationary state at E = {:.6} + {:.6}i has no definite \
                 exchange parity (defects {dsym:.2e} symmetric, {danti:.2e} \
                 antisymmetric); possibly a degenerate pair mixed by the solver",
                raw_energy.re, raw_energy.im
            )));
        }
        let mut vector = traj.mid_vector(j).to_vec();
        let q = c_norm_2d(grid, &vector);
        let qn = q.norm();
        if qn <= 1e-12 {
            return Err(Error::Normalization(format!(
                "quasi-null product-space vector: self-overlap modulus {qn:.3e}"
            )));
        }
        let scale = 1.0 / q.sqrt();
        for v in vector.iter_mut() {
            *v *= scale;
        }
        crate::resonance::fix_sign(&mut vector);
        return Ok(ResonanceEigenpair {
            theta: traj.thetas()[mid],
            energy: decaying_convention(raw_energy),
            raw_energy,
            vector,
            stationarity: traj.stationarity(j),
        });
    }
    Err(Error::NoResonance(format!(
        "no stationary exchange-symmetric eigenvalue with positive real part \
         drifts below {stationarity_tol} hartree/radian in the tracked window; \
         widen track_count or adjust the shift hint"
    )))
}

/// Reduce a normalised two-electron wavefunction to its complex density
/// `n(x) = 2 integral psi(x, x')^2 dx'`.
///
/// Requires `integral integral psi^2 = 1` under the bilinear form, which
/// makes the result integrate to two particles.
pub fn reduce_density(grid: &Grid1D, psi: &[Complex64]) -> Result<ComplexDensity> {
    let n = grid.n_points();
    if psi.len() != n * n {
        return Err(Error::DimensionMismatch {
            expected: n * n,
            got: psi.len(),
        });
    }
    let q = c_norm_2d(grid, psi);
    let defect = (q - Complex64::new(1.0, 0.0)).norm();
    if defect > NORMALIZATION_TOL {
        return Err(Error::Normalization(format!(
            "two-electron wavefunction is not c-normalised: \
             self-overlap deviates from one by {defect:.3e}"
        )));
    }
    let w = grid.weights();
    let values: Vec<Complex64> = (0..n)
        .map(|i| {
            let row = &psi[i * n..(i + 1) * n];
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..n {
                acc += w[j] * row[j] * row[j];
            }
            2.0 * acc
        })
        .collect();
    ComplexDensity::new(grid.clone(), values, 2)
}

/// First-order estimate of the interacting resonance energy as reported by
/// the mean-field loop: the orbital-energy sum shifts by the scaled-kernel
/// Hartree energy of the bare density,
/// `E = 2 eps + lambda E_H^theta[n_0] = 2 eps + 2 lambda <phi phi|W_1|phi phi>`
/// under the bilinear form (each occupied orbital feels the mean field of
/// the full pair density).
pub fn first_order_pt(grid: &Grid1D, p: &PotentialParams, theta: f64) -> Result<Complex64> {
    first_order_pt_with(grid, p, theta, &LerOptions::default())
}

/// Same as [`first_order_pt`] with explicit options.
pub fn first_order_pt_with(
    grid: &Grid1D,
    p: &PotentialParams,
    theta: f64,
    opts: &LerOptions,
) -> Result<Complex64> {
    let pair = exact_1e_ler_with(grid, p, theta, opts)?;
    let phi = &pair.vector;
    let mut unit = *p;
    unit.lambda = 1.0;
    let h = grid.spacing();
    let n = grid.n_points();
    let kernel = (0..n)
        .map(|k| soft_coulomb(&unit, theta, k as f64 * h))
        .collect::<Result<Vec<_>>>()?;
    let w = grid.weights();
    // weighted squares reused across the double sum
    let sq: Vec<Complex64> = (0..n).map(|i| w[i] * phi[i] * phi[i]).collect();
    let mut expect = Complex64::new(0.0, 0.0);
    for i in 0..n {
        let mut inner = Complex64::new(0.0, 0.0);
        for j in 0..n {
            inner += kernel[i.abs_diff(j)] * sq[j];
        }
        expect += sq[i] * inner;
    }
    let raw = 2.0 * pair.raw_energy + 2.0 * p.lambda * expect;
    Ok(decaying_convention(raw))
}
