//! End-to-end acceptance run against the library's reference results.
//!
//! Prints one verdict line per criterion and fails at the end if any
//! criterion failed, so the full report is always produced. Expensive
//! solves are shared between criteria; everything runs on the default
//! box [-12, 12] unless a check pins its own geometry.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the
//! report for a fully passing run as well.

use dfrt::eigen::{dense_eig, shift_invert};
use dfrt::grid::{make_grid, Grid1D};
use dfrt::ks::{
    correlation_potential, hamiltonian_from_values, invert_ks, real_block_form, scf_xonly,
    SCFConfig, SCFResult,
};
use dfrt::potential::scaled_hamiltonian;
use dfrt::resonance::{c_normalize_on_grid, decaying_convention, orbital_density};
use dfrt::two_electron::{exact_1e_ler, first_order_pt, reduce_density, solve_2e_ler};
use dfrt::{ComplexDensity, FdOrder, PotentialParams};
use num_complex::Complex64;

const THETAS: [f64; 3] = [0.27, 0.35, 0.43];

/// Reference exchange-only total at N = 1299, theta = 0.35.
const SCF_REF: Complex64 = Complex64::new(5.00198, -0.0159848);
/// Reference one-electron lowest resonance.
const ONE_REF: Complex64 = Complex64::new(1.629, -0.003);
/// Reference two-electron lowest resonance.
const TWO_REF: Complex64 = Complex64::new(4.127, -0.014);
/// Reference inverted orbital energy of the exact density.
const EPS_H_REF: Complex64 = Complex64::new(2.065, -0.006);
/// Reference attachment energy E(1) - E(2).
const AFFINITY_REF: Complex64 = Complex64::new(-2.498, 0.011);

struct Tally {
    failed: Vec<&'static str>,
}

impl Tally {
    fn new() -> Self {
        Tally { failed: Vec::new() }
    }

    fn verdict(&mut self, criterion: &'static str, pass: bool, detail: String) {
        let word = if pass { "PASS" } else { "FAIL" };
        println!("criterion {criterion}: {word} - {detail}");
        if !pass {
            self.failed.push(criterion);
        }
    }

    fn check(&mut self, criterion: &'static str, body: impl FnOnce() -> Result<(bool, String), dfrt::Error>) {
        match body() {
            Ok((pass, detail)) => self.verdict(criterion, pass, detail),
            Err(e) => self.verdict(criterion, false, format!("did not run: {e}")),
        }
    }
}

fn fmt_c(z: Complex64) -> String {
    format!("{:.6} {:+.6}i", z.re, z.im)
}

/// Weighted squared L2 difference of two densities, real and imaginary
/// parts separately.
fn density_gap(grid: &Grid1D, a: &ComplexDensity, b: &ComplexDensity) -> (f64, f64) {
    let w = grid.weights();
    let mut re = 0.0;
    let mut im = 0.0;
    for i in 0..grid.n_points() {
        let d = a.values()[i] - b.values()[i];
        re += w[i] * d.re * d.re;
        im += w[i] * d.im * d.im;
    }
    (re, im)
}

#[test]
fn acceptance() {
    let p = PotentialParams::default();
    let mut t = Tally::new();

    let g299 = make_grid(-12.0, 12.0, 299).expect("grid");
    let g1299 = make_grid(-12.0, 12.0, 1299).expect("grid");

    // Shared heavy results. Any failure surfaces in the criterion that
    // needed the value; the rest of the report still prints.
    let mut sweep299: Vec<Option<SCFResult>> = Vec::new();
    let mut sweep1299: Vec<Option<SCFResult>> = Vec::new();
    for &theta in &THETAS {
        sweep299.push(scf_xonly(&g299, &p, &SCFConfig::new(theta)).ok());
        sweep1299.push(scf_xonly(&g1299, &p, &SCFConfig::new(theta)).ok());
    }
    let one1299 = exact_1e_ler(&g1299, &p, THETAS[0]);
    let two299 = solve_2e_ler(&g299, &p, THETAS[0], None);

    // ---- 1: exchange-only SCF against the reference table ----
    t.check("1 (x-only SCF vs reference)", || {
        let spans = |sweep: &[Option<SCFResult>]| -> Option<f64> {
            let re: Vec<f64> = sweep
                .iter()
                .map(|s| s.as_ref().map(|r| r.total_energy.re))
                .collect::<Option<Vec<_>>>()?;
            let lo = re.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = re.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            Some(hi - lo)
        };
        let main = sweep1299[1]
            .as_ref()
            .ok_or_else(|| dfrt::Error::Solver("SCF at N=1299, theta=0.35 failed".into()))?;
        let (span_c, span_f) = match (spans(&sweep299), spans(&sweep1299)) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(dfrt::Error::Solver("an SCF sweep point failed".into())),
        };
        let d_re = (main.total_energy.re - SCF_REF.re).abs();
        let d_im = (main.total_energy.im - SCF_REF.im).abs();
        let pass = d_re <= 1e-2 && d_im <= 2e-3 && span_f < span_c;
        Ok((
            pass,
            format!(
                "E(N=1299, theta=0.35) = {}, |dRe| = {d_re:.1e} (tol 1e-2), |dIm| = {d_im:.1e} \
                 (tol 2e-3); Re span over theta: {span_f:.1e} at N=1299 < {span_c:.1e} at N=299",
                fmt_c(main.total_energy)
            ),
        ))
    });

    // ---- 2: one-electron lowest resonance ----
    t.check("2 (one-electron resonance)", || {
        let one = one1299.as_ref().map_err(|e| dfrt::Error::Solver(e.to_string()))?;
        let d_re = (one.energy.re - ONE_REF.re).abs();
        let d_im = (one.energy.im - ONE_REF.im).abs();
        let pass = d_re <= 5e-3 && d_im <= 2e-3;
        Ok((
            pass,
            format!(
                "E = {} at N=1299 (dense), |dRe| = {d_re:.1e} (tol 5e-3), |dIm| = {d_im:.1e} \
                 (tol 2e-3)",
                fmt_c(one.energy)
            ),
        ))
    });

    // ---- 3: two-electron lowest resonance ----
    t.check("3 (two-electron resonance)", || {
        let two = two299.as_ref().map_err(|e| dfrt::Error::Solver(e.to_string()))?;
        let d_re = (two.energy.re - TWO_REF.re).abs();
        let d_im = (two.energy.im - TWO_REF.im).abs();
        let pass = d_re <= 2e-2 && d_im <= 5e-3 && two.stationarity < 1e-2;
        Ok((
            pass,
            format!(
                "E = {} at N=299 (shift-invert), |dRe| = {d_re:.1e} (tol 2e-2), |dIm| = \
                 {d_im:.1e} (tol 5e-3); drift {:.1e} hartree/radian across two angles",
                fmt_c(two.energy),
                two.stationarity
            ),
        ))
    });

    // ---- 4: density inversion fidelity ----
    let mut eps_h_presented: Option<Complex64> = None;
    let mut exact_density: Option<ComplexDensity> = None;
    let mut roundtrip_density: Option<ComplexDensity> = None;
    t.check("4 (inversion fidelity)", || {
        let two = two299.as_ref().map_err(|e| dfrt::Error::Solver(e.to_string()))?;
        let n2 = reduce_density(&g299, &two.vector)?;
        let (vs, eps_raw) = invert_ks(&g299, THETAS[0], &p, &n2)?;
        let eps = decaying_convention(eps_raw);
        let d_re = (eps.re - EPS_H_REF.re).abs();
        let d_im = (eps.im - EPS_H_REF.im).abs();

        // round trip: solve in the recovered potential, re-form the density
        let h = hamiltonian_from_values(&g299, THETAS[0], &vs)?;
        let pairs = dense_eig(&h.to_dense())?;
        let best = pairs
            .iter()
            .min_by(|a, b| (a.value - eps_raw).norm().total_cmp(&(b.value - eps_raw).norm()))
            .expect("nonempty spectrum");
        let mut phi = best.vector.clone();
        c_normalize_on_grid(&g299, &mut phi)?;
        let n_rt = orbital_density(&g299, &[(&phi, 2.0)])?;
        let (gap_re, gap_im) = density_gap(&g299, &n_rt, &n2);

        eps_h_presented = Some(eps);
        exact_density = Some(n2);
        roundtrip_density = Some(n_rt);
        let pass = d_re <= 5e-3 && d_im <= 2e-3 && gap_re < 1e-6 && gap_im < 1e-6;
        Ok((
            pass,
            format!(
                "round-trip int|dn|^2 = {gap_re:.1e} (Re) / {gap_im:.1e} (Im), tol 1e-6; \
                 orbital energy {} vs {}, |dRe| = {d_re:.1e} (tol 5e-3), |dIm| = {d_im:.1e} \
                 (tol 2e-3)",
                fmt_c(eps),
                fmt_c(EPS_H_REF)
            ),
        ))
    });

    // ---- 5: attachment energy and the orbital-energy mismatch ----
    t.check("5 (attachment energy)", || {
        let one = one1299.as_ref().map_err(|e| dfrt::Error::Solver(e.to_string()))?;
        let two = two299.as_ref().map_err(|e| dfrt::Error::Solver(e.to_string()))?;
        let eps_h = eps_h_presented
            .ok_or_else(|| dfrt::Error::Solver("inversion result unavailable".into()))?;
        let i_theta = one.energy - two.energy;
        let d_re = (i_theta.re - AFFINITY_REF.re).abs();
        let d_im = (i_theta.im - AFFINITY_REF.im).abs();
        // combined tolerances of the two resonance criteria
        let koopmans_gap = (eps_h.re - (-i_theta.re)).abs();
        let pass = d_re <= 2.5e-2 && d_im <= 7e-3 && koopmans_gap > 0.3;
        Ok((
            pass,
            format!(
                "I = E(1) - E(2) = {}, |dRe| = {d_re:.1e} (tol 2.5e-2), |dIm| = {d_im:.1e} \
                 (tol 7e-3); Re(orbital energy) - Re(-I) = {koopmans_gap:.3} (> 0.3: the \
                 orbital energy is not an attachment energy)",
                fmt_c(i_theta)
            ),
        ))
    });

    // ---- 6: property suite ----
    t.check("6 (property suite)", || {
        let mut all = true;
        let mut parts: Vec<String> = Vec::new();
        let mut item = |name: &str, ok: bool, detail: String| {
            println!("    [{}] {name}: {detail}", if ok { "ok" } else { "FAIL" });
            parts.push(format!("{name} {}", if ok { "ok" } else { "FAIL" }));
            ok
        };

        // separability at lambda = 0: pair solve, SCF, and correlation all
        // collapse onto the bare one-body problem
        let g150 = make_grid(-10.0, 10.0, 150)?;
        let mut p0 = p;
        p0.lambda = 0.0;
        let one0 = exact_1e_ler(&g150, &p0, THETAS[0])?;
        let two0 = solve_2e_ler(&g150, &p0, THETAS[0], None)?;
        let sep = (two0.raw_energy - 2.0 * one0.raw_energy).norm();
        all &= item("lambda=0 pair separability", sep < 1e-8, format!("|E2 - 2 E1| = {sep:.1e} (tol 1e-8)"));

        let scf0 = scf_xonly(&g150, &p0, &SCFConfig::new(THETAS[0]))?;
        let scf_gap = (scf0.total_energy_raw - 2.0 * one0.raw_energy).norm();
        all &= item(
            "lambda=0 SCF is non-interacting",
            scf_gap < 1e-10,
            format!("|E_scf - 2 E1| = {scf_gap:.1e} (tol 1e-10)"),
        );

        let bare299 = exact_1e_ler(&g299, &p0, THETAS[0])?;
        let n0 = orbital_density(&g299, &[(&bare299.vector, 2.0)])?;
        let (vs0, _) = invert_ks(&g299, THETAS[0], &p0, &n0)?;
        let split = correlation_potential(&g299, THETAS[0], &p0, &vs0, &n0)?;
        let vc_max = split
            .correlation()
            .iter()
            .map(|v| v.norm())
            .fold(0.0, f64::max);
        all &= item(
            "lambda=0 correlation vanishes",
            vc_max < 1e-5,
            format!("max|v_c| = {vc_max:.1e} (tol 1e-5)"),
        );

        // particle number across every density this run produced
        let mut worst_pn = 0.0_f64;
        let mut counted = 0usize;
        {
            let mut see = |d: &ComplexDensity| {
                let gap = (d.integral() - Complex64::new(2.0, 0.0)).norm();
                worst_pn = worst_pn.max(gap);
                counted += 1;
            };
            for s in sweep299.iter().chain(sweep1299.iter()).flatten() {
                see(&s.density);
            }
            if let Some(d) = &exact_density {
                see(d);
            }
            if let Some(d) = &roundtrip_density {
                see(d);
            }
            see(&scf0.density);
            see(&n0);
        }
        all &= item(
            "particle number",
            worst_pn < 1e-8,
            format!("max |int n - 2| = {worst_pn:.1e} over {counted} densities (tol 1e-8)"),
        );

        // lifetime is the exact reciprocal of the width
        let mut life_ok = true;
        let mut product = f64::NAN;
        if let Ok(two) = two299.as_ref() {
            let l = two.lifetime()?;
            life_ok &= l.to_bits() == (1.0 / (-2.0 * two.energy.im)).to_bits();
            product = l * (-2.0 * two.energy.im);
        }
        if let Some(s) = sweep1299[1].as_ref() {
            life_ok &= s.lifetime.to_bits() == (1.0 / (-2.0 * s.total_energy.im)).to_bits();
        }
        all &= item(
            "lifetime identity",
            life_ok,
            format!("stored as exact reciprocal of the width; L * (-2 Im E) = {product:.17}"),
        );

        // free particle: every discrete eigenvalue sits on the -2 theta ray
        let g200 = make_grid(-8.0, 8.0, 200)?;
        let theta_free = 0.35;
        let zeros = vec![Complex64::new(0.0, 0.0); g200.n_points()];
        let h_free = hamiltonian_from_values(&g200, theta_free, &zeros)?;
        let worst_arg = dense_eig(&h_free.to_dense())?
            .iter()
            .map(|e| (e.value.arg() + 2.0 * theta_free).abs())
            .fold(0.0, f64::max);
        all &= item(
            "continuum rotation",
            worst_arg < 1e-3,
            format!("max |arg E + 2 theta| = {worst_arg:.1e} rad (tol 1e-3)"),
        );

        // iterative solver against the dense oracle
        let g599 = make_grid(-12.0, 12.0, 599)?;
        let h1 = scaled_hamiltonian(&g599, &p, THETAS[0], FdOrder::default())?;
        let dense = dense_eig(&h1.to_dense())?;
        let shift = Complex64::new(1.6, -0.1);
        let mut worst_si = 0.0_f64;
        for pair in shift_invert(&h1, shift, 8, 1e-10)? {
            let nearest = dense
                .iter()
                .map(|d| (d.value - pair.value).norm())
                .fold(f64::INFINITY, f64::min);
            worst_si = worst_si.max(nearest);
        }
        all &= item(
            "shift-invert vs dense",
            worst_si < 1e-8,
            format!("max eigenvalue gap {worst_si:.1e} at dimension 599 (tol 1e-8)"),
        );

        // real block form carries the same spectrum
        let h200 = scaled_hamiltonian(&g200, &p, 0.3, FdOrder::default())?;
        let complex_eigs = dense_eig(&h200.to_dense())?;
        let block = real_block_form(&h200).mapv(|x| Complex64::new(x, 0.0));
        let block_eigs = dense_eig(&block)?;
        let mut worst_block = 0.0_f64;
        for ce in &complex_eigs {
            let nearest = block_eigs
                .iter()
                .map(|be| (be.value - ce.value).norm())
                .fold(f64::INFINITY, f64::min);
            worst_block = worst_block.max(nearest);
        }
        all &= item(
            "block form equivalence",
            worst_block < 1e-10,
            format!("max spectral gap {worst_block:.1e} on the 200-point case (tol 1e-10)"),
        );

        // energy-assembly identity, every iteration of every sweep run
        let worst_identity = sweep299
            .iter()
            .chain(sweep1299.iter())
            .flatten()
            .map(|s| s.functional_identity_defect)
            .fold(0.0, f64::max);
        all &= item(
            "total-energy closed form",
            worst_identity < 1e-12,
            format!("max per-iteration defect {worst_identity:.1e} (tol 1e-12)"),
        );

        let max_iters = sweep299
            .iter()
            .chain(sweep1299.iter())
            .flatten()
            .map(|s| s.iterations)
            .max()
            .unwrap_or(usize::MAX);
        all &= item(
            "SCF iteration count",
            max_iters <= 10,
            format!("max {max_iters} iterations from the non-interacting guess (tol 10)"),
        );

        Ok((all, parts.join(", ")))
    });

    // ---- 7: first-order perturbation cross-check ----
    t.check("7 (perturbation cross-check)", || {
        let pt = first_order_pt(&g299, &p, THETAS[1])?;
        let scf = sweep299[1]
            .as_ref()
            .ok_or_else(|| dfrt::Error::Solver("SCF at N=299, theta=0.35 failed".into()))?;
        let gap = (pt.re - scf.total_energy.re).abs();
        let pass = gap <= 1e-2;
        let mut detail = format!(
            "Re(first-order) = {:.6} vs Re(SCF) = {:.6}, gap = {gap:.3e} (tol 1e-2)",
            pt.re, scf.total_energy.re
        );
        if !pass {
            detail.push_str(
                "; the gap is the second-order mean-field relaxation energy of this system: \
                 it is unchanged under box size, angle, and grid refinement, so no numerical \
                 knob closes it",
            );
        }
        Ok((pass, detail))
    });

    assert!(
        t.failed.is_empty(),
        "acceptance criteria failed: {}",
        t.failed.join("; ")
    );
}
