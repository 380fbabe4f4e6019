//! Resonance identification from scaling-angle trajectories.
//!
//! Under complex scaling the discretized continuum rotates with the angle
//! (eigenvalues move at a rate of roughly 2|E| per radian) while genuine
//! resonances stay put. This module tracks eigenvalues across a set of
//! angles by eigenvector overlap, measures each trajectory's drift, and
//! selects the lowest-energy resonance: the stationary trajectory with the
//! smallest positive real part. The associated lifetime is (-2 Im E)^{-1}.

use num_complex::Complex64;

use crate::density::ComplexDensity;
use crate::eigen::{c_dot, c_inner, dense_eig, Eigenpair};
use crate::error::{Error, Result};
use crate::grid::{check_theta_scaling, BandedOperator, Grid1D};

/// Drift threshold (hartree/radian) separating resonances from continuum.
pub const DEFAULT_STATIONARITY_TOL: f64 = 1e-2;

/// Scaling angles used for regression against tabulated reference energies.
pub const DEFAULT_THETAS: [f64; 3] = [0.27, 0.35, 0.43];

/// Two overlaps within this ratio of each other make a match ambiguous.
const AMBIGUITY_MARGIN: f64 = 0.99;

/// Largest |Im E| still treated as an exactly real (bound-like) eigenvalue.
const IM_NOISE_FLOOR: f64 = 1e-8;

/// Orbitals fed to [`orbital_density`] must be c-normalized this tightly.
pub(crate) const NORMALIZATION_TOL: f64 = 1e-8;

/// Eigenvalue trajectories over a sorted set of scaling angles.
///
/// Consecutive eigenpair sets are linked by maximal |c-overlap| between
/// eigenvectors; each linked chain is one trajectory. Matching ties
/// (overlaps within 1% of each other) are flagged, not fatal.
#[derive(Debug, Clone)]
pub struct ThetaTrajectory {
    thetas: Vec<f64>,
    /// energies[j][t] = eigenvalue of trajectory j at angle t.
    energies: Vec<Vec<Complex64>>,
    /// Eigenvector of each trajectory at the middle angle, sign-fixed.
    mid_vectors: Vec<Vec<Complex64>>,
    ambiguous: Vec<bool>,
}

impl ThetaTrajectory {
    /// Assemble trajectories from per-angle eigenpair sets.
    ///
    /// Sets may have unequal lengths; all are truncated to the shortest
    /// (solvers order pairs by relevance, so truncation keeps the best).
    /// Vectors are assumed c-normalized, as the solvers produce them.
    pub fn from_eigenpair_sets(thetas: &[f64], sets: Vec<Vec<Eigenpair>>) -> Result<Self> {
        if thetas.len() < 2 {
            return Err(Error::Config(
                "trajectory tracking needs at least two scaling angles".into(),
            ));
        }
        if thetas.len() != sets.len() {
            return Err(Error::Config(format!(
                "{} angles but {} eigenpair sets",
                thetas.len(),
                sets.len()
            )));
        }
        for pair in thetas.windows(2) {
            if pair[1] <= pair[0] {
                return Err(Error::Config(
                    "scaling angles must be strictly increasing".into(),
                ));
            }
        }
        for &th in thetas {
            check_theta_scaling(th)?;
        }
        let k = sets.iter().map(Vec::len).min().unwrap_or(0);
        if k == 0 {
            return Err(Error::Config(
                "each angle needs at least one eigenpair".into(),
            ));
        }
        let dim = sets[0][0].vector.len();
        for set in &sets {
            for pair in &set[..k] {
                if pair.vector.len() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: pair.vector.len(),
                    });
                }
            }
        }

        let t_count = thetas.len();
        let mid = (t_count - 1) / 2;
        let mut energies = vec![Vec::with_capacity(t_count); k];
        let mut ambiguous = vec![false; k];
        // cur[j]: index of trajectory j inside sets[t] while sweeping t.
        let mut cur: Vec<usize> = (0..k).collect();
        let mut mid_index = vec![0usize; k];
        for t in 0..t_count {
            for j in 0..k {
                energies[j].push(sets[t][cur[j]].value);
                if t == mid {
                    mid_index[j] = cur[j];
                }
            }
            if t + 1 < t_count {
                let (perm, flagged) = match_sets(&sets[t][..k], &sets[t + 1][..k]);
                for j in 0..k {
                    if flagged[cur[j]] {
                        ambiguous[j] = true;
                    }
                    cur[j] = perm[cur[j]];
                }
            }
        }
        let mid_vectors = (0..k)
            .map(|j| {
                let mut v = sets[mid][mid_index[j]].vector.clone();
                fix_sign(&mut v);
                v
            })
            .collect();
        Ok(ThetaTrajectory {
            thetas: thetas.to_vec(),
            energies,
            mid_vectors,
            ambiguous,
        })
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    pub fn num_trajectories(&self) -> usize {
        self.energies.len()
    }

    /// Eigenvalues of trajectory `j`, one per angle.
    pub fn energies(&self, j: usize) -> &[Complex64] {
        &self.energies[j]
    }

    /// Index of the middle angle, where results are reported.
    pub fn mid_index(&self) -> usize {
        (self.thetas.len() - 1) / 2
    }

    /// Sign-fixed eigenvector of trajectory `j` at the middle angle.
    pub fn mid_vector(&self, j: usize) -> &[Complex64] {
        &self.mid_vectors[j]
    }

    /// Worst drift rate |dE/dtheta| over consecutive angle pairs.
    pub fn stationarity(&self, j: usize) -> f64 {
        let mut worst = 0.0f64;
        for t in 0..self.thetas.len() - 1 {
            let rate = (self.energies[j][t + 1] - self.energies[j][t]).norm()
                / (self.thetas[t + 1] - self.thetas[t]);
            worst = worst.max(rate);
        }
        worst
    }

    /// Total eigenvalue displacement between the first and last angle.
    pub fn endpoint_move(&self, j: usize) -> f64 {
        let e = &self.energies[j];
        (e[e.len() - 1] - e[0]).norm()
    }

    /// Whether any overlap match along trajectory `j` was ambiguous.
    pub fn is_ambiguous(&self, j: usize) -> bool {
        self.ambiguous[j]
    }
}

/// Greedy bijective matching of two eigenpair sets by |c-overlap|.
/// Returns (perm, flagged): perm[i] is the partner of prev[i] in next,
/// flagged[i] marks matches with a competing overlap within 1%.
fn match_sets(prev: &[Eigenpair], next: &[Eigenpair]) -> (Vec<usize>, Vec<bool>) {
    let k = prev.len();
    let mut overlap = vec![vec![0.0f64; k]; k];
    for (i, p) in prev.iter().enumerate() {
        for (j, q) in next.iter().enumerate() {
            overlap[i][j] = c_dot(&p.vector, &q.vector).norm();
        }
    }
    let mut row_used = vec![false; k];
    let mut col_used = vec![false; k];
    let mut perm = vec![0usize; k];
    let mut flagged = vec![false; k];
    for _ in 0..k {
        let (mut bi, mut bj, mut bv) = (0usize, 0usize, -1.0f64);
        for i in 0..k {
            if row_used[i] {
                continue;
            }
            for j in 0..k {
                if !col_used[j] && overlap[i][j] > bv {
                    bv = overlap[i][j];
                    bi = i;
                    bj = j;
                }
            }
        }
        // near-ties taint the winner and every competitor that nearly won
        for j in 0..k {
            if !col_used[j] && j != bj && overlap[bi][j] >= AMBIGUITY_MARGIN * bv {
                flagged[bi] = true;
            }
        }
        for i in 0..k {
            if !row_used[i] && i != bi && overlap[i][bj] >= AMBIGUITY_MARGIN * bv {
                flagged[bi] = true;
                flagged[i] = true;
            }
        }
        perm[bi] = bj;
        row_used[bi] = true;
        col_used[bj] = true;
    }
    (perm, flagged)
}

/// Track the `k` lowest-real-part eigenvalues of `builder(theta)` across
/// `thetas` by dense diagonalization plus overlap matching.
///
/// Operators must share one dimension; angles must be strictly increasing
/// and inside the admissible scaling range.
pub fn theta_trajectory<F>(mut builder: F, thetas: &[f64], k: usize) -> Result<ThetaTrajectory>
where
    F: FnMut(f64) -> Result<BandedOperator>,
{
    if k == 0 {
        return Err(Error::Config("need k >= 1 trajectories".into()));
    }
    if thetas.len() < 2 {
        return Err(Error::Config(
            "trajectory tracking needs at least two scaling angles".into(),
        ));
    }
    let mut sets = Vec::with_capacity(thetas.len());
    let mut dim_expected = None;
    for &th in thetas {
        check_theta_scaling(th)?;
        let op = builder(th)?;
        match dim_expected {
            None => dim_expected = Some(op.dim()),
            Some(d) if d != op.dim() => {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: op.dim(),
                })
            }
            _ => {}
        }
        // dense_eig sorts ascending by real part, so truncation keeps the k lowest
        let mut pairs = dense_eig(&op.to_dense())?;
        pairs.truncate(k.min(pairs.len()));
        sets.push(pairs);
    }
    ThetaTrajectory::from_eigenpair_sets(thetas, sets)
}

/// The lowest-energy resonance: a stationary complex eigenvalue with its
/// eigenvector, reporting angle, drift estimate, and decay lifetime.
///
/// When the scaling ray passes beyond complex singularities of the
/// potential (for the sigmoid-edged model this happens at angles above
/// arctan(pi / (2 c d)), about 0.194 at defaults) a narrow stationary
/// eigenvalue can surface time-reversed, with positive imaginary part.
/// `energy` is always reported in the decaying convention (Im <= 0) so
/// lifetimes stay positive; `raw_energy` keeps the eigenvalue exactly as
/// the contour produced it and satisfies H v = raw_energy v.
#[derive(Debug, Clone)]
pub struct ResonanceEigenpair {
    /// Scaling angle the energy and vector are reported at.
    pub theta: f64,
    /// Resonance energy in the decaying convention, Im <= 0.
    pub energy: Complex64,
    /// Contour eigenvalue; either `energy` itself or its conjugate.
    pub raw_energy: Complex64,
    /// Sign-fixed eigenvector (normalization is the producer's concern).
    pub vector: Vec<Complex64>,
    /// Observed |dE/dtheta| of the selected trajectory (hartree/radian).
    pub stationarity: f64,
}

impl ResonanceEigenpair {
    /// Decay lifetime (-2 Im E)^{-1} in atomic time units.
    pub fn lifetime(&self) -> Result<f64> {
        lifetime(self.energy)
    }
}

/// Among trajectories drifting slower than `stationarity_tol`, pick the one
/// with the smallest positive real part, reported at the middle angle.
pub fn select_ler(traj: &ThetaTrajectory, stationarity_tol: f64) -> Result<ResonanceEigenpair> {
    if stationarity_tol <= 0.0 {
        return Err(Error::Config(
            "stationarity tolerance must be positive".into(),
        ));
    }
    let mid = traj.mid_index();
    let mut best: Option<(usize, Complex64)> = None;
    for j in 0..traj.num_trajectories() {
        let e = traj.energies(j)[mid];
        if e.re <= 0.0 || traj.stationarity(j) >= stationarity_tol {
            continue;
        }
        if best.map_or(true, |(_, b)| e.re < b.re) {
            best = Some((j, e));
        }
    }
    let (j, raw_energy) = best.ok_or_else(|| {
        Error::NoResonance(format!(
            "no stationary eigenvalue with positive real part drifts below \
             {stationarity_tol} hartree/radian; the box may be too small, the \
             angle range unsuitable, or no resonance present"
        ))
    })?;
    Ok(ResonanceEigenpair {
        theta: traj.thetas()[mid],
        energy: decaying_convention(raw_energy),
        raw_energy,
        vector: traj.mid_vector(j).to_vec(),
        stationarity: traj.stationarity(j),
    })
}

/// Map a contour eigenvalue to the decaying-convention energy of the
/// resonance it represents.
///
/// An imaginary part within the noise floor is clamped to exactly zero; a
/// positive one signals the time-reversed partner surfacing on the contour
/// (see [`ResonanceEigenpair`]) and is conjugated. Identities that involve
/// the operator itself must use the contour eigenvalue, not this value.
pub fn decaying_convention(raw: Complex64) -> Complex64 {
    let mut e = raw;
    if e.im.abs() <= IM_NOISE_FLOOR {
        e.im = 0.0;
    } else if e.im > 0.0 {
        e = e.conj();
    }
    e
}

/// Lifetime (-2 Im E)^{-1} of a decaying state.
///
/// Im >= 0 is reported as a distinct bound-state condition instead of an
/// infinite or negative lifetime.
pub fn lifetime(energy: Complex64) -> Result<f64> {
    if energy.im >= 0.0 {
        return Err(Error::BoundState(energy.im));
    }
    Ok(1.0 / (-2.0 * energy.im))
}

/// Complex density n(x) = sum_i occ_i phi_i(x)^2 (square, not modulus).
///
/// Each orbital must integrate to one under the bilinear form; occupations
/// must sum to an integer particle number. The result integrates to that
/// number by construction, which the density type re-checks.
pub fn orbital_density(grid: &Grid1D, orbitals: &[(&[Complex64], f64)]) -> Result<ComplexDensity> {
    if orbitals.is_empty() {
        return Err(Error::Config("at least one orbital required".into()));
    }
    let n = grid.n_points();
    let mut values = vec![Complex64::new(0.0, 0.0); n];
    let mut total_occ = 0.0f64;
    for (idx, (phi, occ)) in orbitals.iter().enumerate() {
        if phi.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: phi.len(),
            });
        }
        if *occ <= 0.0 {
            return Err(Error::Config(format!(
                "occupation of orbital {idx} must be positive, got {occ}"
            )));
        }
        let q = c_inner(grid, phi, phi)?;
        if (q - Complex64::new(1.0, 0.0)).norm() > NORMALIZATION_TOL {
            return Err(Error::Normalization(format!(
                "orbital {idx} has c-norm {q}, want 1 within {NORMALIZATION_TOL:e}"
            )));
        }
        for (v, p) in values.iter_mut().zip(phi.iter()) {
            *v += *occ * p * p;
        }
        total_occ += occ;
    }
    let rounded = total_occ.round();
    if (total_occ - rounded).abs() > 1e-9 || rounded < 1.0 {
        return Err(Error::Config(format!(
            "occupations sum to {total_occ}, not a positive integer"
        )));
    }
    ComplexDensity::new(grid.clone(), values, rounded as u32)
}

/// Scale `v` so its bilinear self-integral over the grid is exactly one,
/// then fix the overall sign. Fails on quasi-null (self-orthogonal) norms.
pub fn c_normalize_on_grid(grid: &Grid1D, v: &mut [Complex64]) -> Result<()> {
    let q = c_inner(grid, v, v)?;
    let l2: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>() * grid.spacing();
    if l2 == 0.0 || q.norm() < 1e-12 * l2 {
        return Err(Error::Normalization(
            "bilinear norm is quasi-null; cannot normalize".into(),
        ));
    }
    let s = q.sqrt();
    for z in v.iter_mut() {
        *z /= s;
    }
    fix_sign(v);
    Ok(())
}

/// Flip the global sign so the entry of largest modulus has positive real
/// part (positive imaginary part breaking an exact tie). Returns whether a
/// flip happened. Makes the residual sign freedom after c-normalization
/// deterministic, so densities are reproducible bitwise.
pub fn fix_sign(v: &mut [Complex64]) -> bool {
    let mut imax = 0usize;
    let mut best = -1.0f64;
    for (i, z) in v.iter().enumerate() {
        let m = z.norm_sqr();
        if m > best {
            best = m;
            imax = i;
        }
    }
    let z = v[imax];
    let flip = z.re < 0.0 || (z.re == 0.0 && z.im < 0.0);
    if flip {
        for z in v.iter_mut() {
            *z = -*z;
        }
    }
    flip
}
