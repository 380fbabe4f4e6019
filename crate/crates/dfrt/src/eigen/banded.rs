//! General banded complex matrices and their LU factorization with partial
//! pivoting, LAPACK band-storage style.
//!
//! This is the direct-solver backend of the shift-invert eigensolver: the
//! shifted operators are complex symmetric and banded (the two-electron
//! product-space operator has half-bandwidth stencil_radius x N), and no
//! external sparse complex factorization is available, so a classic gbtrf /
//! gbtrs pair is implemented here.
//!
//! Storage is column major: entry (i, j) lives at `ab[j * ldab + kl + ku + i - j]`
//! with `ldab = 2 kl + ku + 1`; the extra `kl` super-diagonals hold pivoting
//! fill-in.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Cap on the factorization workspace. A band matrix whose storage would
/// exceed this is refused up front instead of thrashing the machine.
pub const BAND_STORAGE_LIMIT_BYTES: usize = 3_600_000_000;

/// General banded complex matrix with `kl` sub- and `ku` super-diagonals.
#[derive(Debug, Clone)]
pub struct GeneralBanded {
    n: usize,
    kl: usize,
    ku: usize,
    ldab: usize,
    ab: Vec<Complex64>,
}

impl GeneralBanded {
    /// Zero matrix. Fails if the band storage would exceed
    /// [`BAND_STORAGE_LIMIT_BYTES`].
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config("banded matrix dimension must be positive".into()));
        }
        let kl = kl.min(n - 1);
        let ku = ku.min(n - 1);
        let ldab = 2 * kl + ku + 1;
        let bytes = ldab
            .checked_mul(n)
            .and_then(|e| e.checked_mul(std::mem::size_of::<Complex64>()))
            .ok_or_else(|| Error::TooLarge("banded storage size overflows".into()))?;
        if bytes > BAND_STORAGE_LIMIT_BYTES {
            return Err(Error::TooLarge(format!(
                "banded storage needs {:.2} GB, limit is {:.2} GB \
                 (dim {n}, bandwidths {kl}/{ku})",
                bytes as f64 / 1e9,
                BAND_STORAGE_LIMIT_BYTES as f64 / 1e9,
            )));
        }
        Ok(GeneralBanded {
            n,
            kl,
            ku,
            ldab,
            ab: vec![Complex64::ZERO; ldab * n],
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        j * self.ldab + self.kl + self.ku + i - j
    }

    /// True if (i, j) lies inside the stored profile (sub-band `kl`,
    /// super-band `ku`; fill rows above `ku` are reserved for the factorization).
    #[inline]
    fn in_profile(&self, i: usize, j: usize) -> bool {
        i < self.n && j < self.n && i + self.ku >= j && j + self.kl >= i
    }

    /// Add `v` to entry (i, j). Panics outside the declared band.
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: Complex64) {
        assert!(self.in_profile(i, j), "entry ({i}, {j}) outside band");
        let at = self.idx(i, j);
        self.ab[at] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        if self.in_profile(i, j) {
            self.ab[self.idx(i, j)]
        } else {
            Complex64::ZERO
        }
    }

    /// LU factorization with row partial pivoting (consumes the matrix;
    /// the band array is reused for the factors).
    pub fn factorize(mut self) -> Result<BandedLu> {
        let (n, kl, ku, ldab) = (self.n, self.kl, self.ku, self.ldab);
        let klu = kl + ku;
        let mut piv = vec![0usize; n];
        let ab = &mut self.ab;
        for j in 0..n {
            let ilast = (j + kl).min(n - 1);
            let nrows = ilast - j;
            // pivot search in column j, rows j..=ilast
            let base = j * ldab + klu; // a(j, j)
            let mut p = 0usize;
            let mut best = ab[base].norm_sqr();
            for t in 1..=nrows {
                let m = ab[base + t].norm_sqr();
                if m > best {
                    best = m;
                    p = t;
                }
            }
            if best == 0.0 {
                return Err(Error::ShiftFactorization(format!(
                    "zero pivot column {j}; the shift may coincide with an eigenvalue"
                )));
            }
            piv[j] = j + p;
            if p != 0 {
                // swap rows j and j+p across columns j..=min(j+klu, n-1)
                let cend = (j + klu).min(n - 1);
                for c in j..=cend {
                    let a = c * ldab + klu + j - c;
                    ab.swap(a, a + p);
                }
            }
            // multipliers
            let pivval = ab[base];
            for t in 1..=nrows {
                ab[base + t] /= pivval;
            }
            if nrows == 0 {
                continue;
            }
            // trailing update, column by column (contiguous in memory)
            let cend = (j + klu).min(n - 1);
            let (head, tail) = ab.split_at_mut((j + 1) * ldab);
            let mult = &head[base + 1..base + 1 + nrows];
            for (t, slab) in tail.chunks_exact_mut(ldab).take(cend - j).enumerate() {
                let c = j + 1 + t;
                let urow = klu + j - c;
                let u = slab[urow];
                if u == Complex64::ZERO {
                    continue;
                }
                let dst = &mut slab[urow + 1..urow + 1 + nrows];
                for (d, m) in dst.iter_mut().zip(mult) {
                    *d -= m * u;
                }
            }
        }
        Ok(BandedLu {
            n,
            kl,
            klu,
            ldab,
            ab: self.ab,
            piv,
        })
    }
}

/// Factorized banded matrix; solves in O(n * bandwidth).
#[derive(Debug)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    klu: usize,
    ldab: usize,
    ab: Vec<Complex64>,
    piv: Vec<usize>,
}

impl BandedLu {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solve A x = b in place.
    pub fn solve_in_place(&self, b: &mut [Complex64]) {
        assert_eq!(b.len(), self.n);
        let (n, kl, klu, ldab) = (self.n, self.kl, self.klu, self.ldab);
        // forward: apply pivots and L
        for j in 0..n {
            if self.piv[j] != j {
                b.swap(j, self.piv[j]);
            }
            let bj = b[j];
            if bj == Complex64::ZERO {
                continue;
            }
            let ilast = (j + kl).min(n - 1);
            let base = j * ldab + klu;
            for t in 1..=ilast - j {
                b[j + t] -= self.ab[base + t] * bj;
            }
        }
        // backward: solve U x = y
        for j in (0..n).rev() {
            let base = j * ldab + klu;
            b[j] /= self.ab[base];
            let bj = b[j];
            if bj == Complex64::ZERO {
                continue;
            }
            let ifirst = j.saturating_sub(klu);
            for i in ifirst..j {
                b[i] -= self.ab[base - (j - i)] * bj;
            }
        }
    }
}
