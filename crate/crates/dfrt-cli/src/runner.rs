//! Mode drivers: each turns a validated [`RunConfig`] into tables and a
//! summary record. Sweep points run concurrently up to the worker count;
//! all file writes happen on the calling thread after the points finish.

use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;

use dfrt::ks::{
    correlation_potential, invert_ks, scf_xonly, AffinityReport, SCFResult,
};
use dfrt::potential::scaled_parent_potential;
use dfrt::resonance::{decaying_convention, ResonanceEigenpair};
use dfrt::two_electron::{
    exact_1e_ler_with, first_order_pt, reduce_density, solve_2e_ler_with, LerOptions,
};
use dfrt::{ComplexDensity, FdOrder, Grid1D, PotentialParams};
use num_complex::Complex64;

use crate::config::{Mode, RunConfig};
use crate::output::{sci, theta_tag, OutputDir};

/// Failure during the computation or emission phase. Configuration
/// problems never reach this type; they exit earlier with their own code.
#[derive(Debug)]
pub struct RunError(pub String);

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "run failed: {}", self.0)
    }
}

impl std::error::Error for RunError {}

impl From<dfrt::Error> for RunError {
    fn from(e: dfrt::Error) -> Self {
        RunError(e.to_string())
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError(format!("output write failed: {e}"))
    }
}

pub fn run(config: &RunConfig, out: &OutputDir, verbose: bool) -> Result<(), RunError> {
    let result = match config.mode {
        Mode::Exact1e => run_exact1e(config, out, verbose),
        Mode::Exact2e => run_exact2e(config, out, verbose),
        Mode::ScfXonly => run_scf(config, out, verbose),
        Mode::Invert => run_invert(config, out, verbose),
        Mode::Correlation => run_correlation(config, out, verbose),
        Mode::Affinity => run_affinity(config, out, verbose),
        Mode::SweepLambda => run_sweep_lambda(config, out, verbose),
        Mode::TableTheta => run_table_theta(config, out, verbose),
    };
    if let Err(e) = &result {
        // the summary always records how the run ended
        let _ = out.summary(config, "failed", &[("error", vec![("message".into(), e.0.clone())])]);
    }
    result
}

/// Evaluate `f` over `0..count` on up to `workers` threads; results come
/// back in index order. Panics in `f` propagate.
fn parallel_map<T, F>(count: usize, workers: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    let workers = workers.min(count).max(1);
    if workers == 1 {
        return (0..count).map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let (tx, rx) = mpsc::channel::<(usize, T)>();
    let mut out: Vec<Option<T>> = (0..count).map(|_| None).collect();
    std::thread::scope(|s| {
        for _ in 0..workers {
            let tx = tx.clone();
            let next = &next;
            let f = &f;
            s.spawn(move || loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= count {
                    break;
                }
                if tx.send((i, f(i))).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        for (i, v) in rx {
            out[i] = Some(v);
        }
    });
    out.into_iter().map(|v| v.expect("worker delivered")).collect()
}

fn fd_order(config: &RunConfig) -> FdOrder {
    FdOrder::from_int(config.fd_order).expect("validated")
}

fn ler_options(config: &RunConfig) -> LerOptions {
    LerOptions {
        fd_order: fd_order(config),
        eig_tol: config.eig_tol,
        ..LerOptions::default()
    }
}

fn one_body_options(config: &RunConfig) -> LerOptions {
    LerOptions {
        track_count: dfrt::two_electron::ONE_BODY_TRACK_COUNT,
        ..ler_options(config)
    }
}

/// The modes built on SCF and inversion machinery run on the order-4
/// stencil; reject configs that ask otherwise rather than ignore them.
fn require_order4(config: &RunConfig) -> Result<(), RunError> {
    if config.fd_order != 4 {
        return Err(RunError(format!(
            "mode {} runs on the order-4 stencil; fd_order = {} is only supported by \
             exact1e and exact2e",
            config.mode.name(),
            config.fd_order
        )));
    }
    Ok(())
}

fn progress(verbose: bool, msg: impl AsRef<str>) {
    if verbose {
        eprintln!("dfrt: {}", msg.as_ref());
    }
}

fn energy_entries(prefix: &str, e: Complex64) -> Vec<(String, String)> {
    vec![
        (format!("{prefix}_re"), sci(e.re)),
        (format!("{prefix}_im"), sci(e.im)),
    ]
}

fn lifetime_str(e: Complex64) -> String {
    if e.im < 0.0 {
        sci(1.0 / (-2.0 * e.im))
    } else {
        "inf".into()
    }
}

fn density_rows(grid: &Grid1D, density: &ComplexDensity) -> Vec<Vec<String>> {
    grid.points()
        .iter()
        .zip(density.values())
        .map(|(&x, v)| vec![sci(x), sci(v.re), sci(v.im)])
        .collect()
}

/// Ordinary modes run on the single configured grid size.
fn single_n(config: &RunConfig) -> usize {
    config.n_points[0]
}

// ---- exact one-electron resonance ----

fn run_exact1e(config: &RunConfig, out: &OutputDir, verbose: bool) -> Result<(), RunError> {
    let grid = config.grid(single_n(config))?;
    let opts = one_body_options(config);
    let points = parallel_map(config.thetas.len(), config.workers, |i| {
        let theta = config.thetas[i];
        progress(verbose, format!("exact1e at theta = {theta}"));
        exact_1e_ler_with(&grid, &config.potential, theta, &opts)
    });

    let mut rows = Vec::new();
    let mut sections = Vec::new();
    let mut failure: Option<String> = None;
    for (theta, res) in config.thetas.iter().zip(points) {
        match res {
            Ok(pair) => {
                rows.push(vec![
                    sci(*theta),
                    sci(pair.energy.re),
                    sci(pair.energy.im),
                    sci(pair.stationarity),
                    lifetime_str(pair.energy),
                ]);
                let mut entries = energy_entries("energy", pair.energy);
                entries.push(("stationarity".into(), sci(pair.stationarity)));
                entries.push(("lifetime".into(), lifetime_str(pair.energy)));
                sections.push((format!("theta {theta}"), entries));
            }
            Err(e) => {
                failure.get_or_insert(format!("theta = {theta}: {e}"));
            }
        }
    }
    finish_table_mode(
        config,
        out,
        "resonance_1e.csv",
        &["theta", "re_e", "im_e", "stationarity", "lifetime"],
        rows,
        sections,
        failure,
    )
}

// ---- exact two-electron resonance and densities ----

fn run_exact2e(config: &RunConfig, out: &OutputDir, verbose: bool) -> Result<(), RunError> {
    let grid = config.grid(single_n(config))?;
    let opts = ler_options(config);
    let points = parallel_map(config.thetas.len(), config.workers, |i| {
        let theta = config.thetas[i];
        progress(verbose, format!("exact2e at theta = {theta}"));
        let pair = solve_2e_ler_with(&grid, &config.potential, theta, None, &opts)?;
        let density = reduce_density(&grid, &pair.vector)?;
        Ok::<_, dfrt::Error>((pair, density))
    });

    let mut rows = Vec::new();
    let mut sections = Vec::new();
    let mut failure: Option<String> = None;
    for (theta, res) in config.thetas.iter().zip(points) {
        match res {
            Ok((pair, density)) => {
                out.table(
                    &format!("density_theta_{}.csv", theta_tag(*theta)),
                    config,
                    &[("theta".into(), format!("{theta}"))],
                    &["x", "re_n", "im_n"],
                    &density_rows(&grid, &density),
                )?;
                rows.push(vec![
                    sci(*theta),
                    sci(pair.energy.re),
                    sci(pair.energy.im),
                    sci(pair.stationarity),
                    lifetime_str(pair.energy),
                ]);
                let mut entries = energy_entries("energy", pair.energy);
                entries.push(("stationarity".into(), sci(pair.stationarity)));
                entries.push(("lifetime".into(), lifetime_str(pair.energy)));
                entries.push((
                    "particle_number_re".into(),
                    sci(density.integral().re),
                ));
                sections.push((format!("theta {theta}"), entries));
            }
            Err(e) => {
                failure.get_or_insert(format!("theta = {theta}: {e}"));
            }
        }
    }
    finish_table_mode(
        config,
        out,
        "resonance_2e.csv",
        &["theta", "re_e", "im_e", "stationarity", "lifetime"],
        rows,
        sections,
        failure,
    )
}

// ---- exchange-only SCF ----

fn run_scf(config: &RunConfig, out: &OutputDir, verbose: bool) -> Result<(), RunError> {
    require_order4(config)?;
    let grid = config.grid(single_n(config))?;
    let points = parallel_map(config.thetas.len(), config.workers, |i| {
        let theta = config.thetas[i];
        progress(verbose, format!("scf_xonly at theta = {theta}"));
        scf_xonly(&grid, &config.potential, &config.scf_config(theta))
    });

    let mut rows = Vec::new();
    let mut sections = Vec::new();
    let mut failure: Option<String> = None;
    for (theta, res) in config.thetas.iter().zip(points) {
        match res {
            Ok(scf) => {
                out.table(
                    &format!("density_scf_theta_{}.csv", theta_tag(*theta)),
                    config,
                    &[("theta".into(), format!("{theta}"))],
                    &["x", "re_n", "im_n"],
                    &density_rows(&grid, &scf.density),
                )?;
                rows.push(scf_row(*theta, &scf));
                sections.push((format!("theta {theta}"), scf_entries(&scf)));
            }
            Err(e) => {
                failure.get_or_insert(format!("theta = {theta}: {e}"));
            }
        }
    }
    finish_table_mode(
        config,
        out,
        "scf.csv",
        &[
            "theta",
            "re_e",
            "im_e",
            "re_orbital",
            "im_orbital",
            "iterations",
            "lifetime",
        ],
        rows,
        sections,
        failure,
    )
}

fn scf_row(theta: f64, scf: &SCFResult) -> Vec<String> {
    vec![
        sci(theta),
        sci(scf.total_energy.re),
        sci(scf.total_energy.im),
        sci(scf.orbital_energy.re),
        sci(scf.orbital_energy.im),
        scf.iterations.to_string(),
        sci(scf.lifetime),
    ]
}

fn scf_entries(scf: &SCFResult) -> Vec<(String, String)> {
    let mut entries = energy_entries("energy", scf.total_energy);
    entries.extend(energy_entries("orbital_energy", scf.orbital_energy));
    entries.extend(energy_entries("functional_energy", scf.functional_energy));
    entries.push(("iterations".into(), scf.iterations.to_string()));
    entries.push(("lifetime".into(), sci(scf.lifetime)));
    entries.push((
        "identity_defect".into(),
        sci(scf.functional_identity_defect),
    ));
    entries.push((
        "tracking_ambiguous".into(),
        scf.tracking_ambiguous.to_string(),
    ));
    entries
}

// ---- inversion of the exact density ----

struct Inversion {
    pair: ResonanceEigenpair,
    density: ComplexDensity,
    vs: Vec<Complex64>,
    eps: Complex64,
}

fn invert_at(
    grid: &Grid1D,
    p: &PotentialParams,
    theta: f64,
    opts: &LerOptions,
) -> Result<Inversion, dfrt::Error> {
    let pair = solve_2e_ler_with(grid, p, theta, None, opts)?;
    let density = reduce_density(grid, &pair.vector)?;
    let (vs, eps_raw) = invert_ks(grid, theta, p, &density)?;
    Ok(Inversion {
        pair,
        density,
        vs,
        eps: decaying_convention(eps_raw),
    })
}

fn run_invert(config: &RunConfig, out: &OutputDir, verbose: bool) -> Result<(), RunError> {
    require_order4(config)?;
    let grid = config.grid(single_n(config))?;
    let opts = ler_options(config);
    let points = parallel_map(config.thetas.len(), config.workers, |i| {
        let theta = config.thetas[i];
        progress(verbose, format!("invert at theta = {theta}"));
        invert_at(&grid, &config.potential, theta, &opts)
    });

    let mut rows = Vec::new();
    let mut sections = Vec::new();
    let mut failure: Option<String> = None;
    for (theta, res) in config.thetas.iter().zip(points) {
        match res {
            Ok(inv) => {
                let mut table = Vec::with_capacity(grid.n_points());
                for (i, &x) in grid.points().iter().enumerate() {
                    let parent = scaled_parent_potential(&config.potential, *theta, x)?;
                    table.push(vec![
                        sci(x),
                        sci(inv.vs[i].re),
                        sci(inv.vs[i].im),
                        sci(parent.re),
                        sci(parent.im),
                    ]);
                }
                out.table(
                    &format!("potential_theta_{}.csv", theta_tag(*theta)),
                    config,
                    &[("theta".into(), format!("{theta}"))],
                    &["x", "re_vs", "im_vs", "re_parent", "im_parent"],
                    &table,
                )?;
                rows.push(vec![
                    sci(*theta),
                    sci(inv.eps.re),
                    sci(inv.eps.im),
                    sci(inv.pair.energy.re),
                    sci(inv.pair.energy.im),
                ]);
                let mut entries = energy_entries("orbital_energy", inv.eps);
                entries.extend(energy_entries("resonance", inv.pair.energy));
                sections.push((format!("theta {theta}"), entries));
            }
            Err(e) => {
                failure.get_or_insert(format!("theta = {theta}: {e}"));
            }
        }
    }
    finish_table_mode(
        config,
        out,
        "inversion.csv",
        &["theta", "re_eps", "im_eps", "re_e2", "im_e2"],
        rows,
        sections,
        failure,
    )
}

// ---- correlation potential ----

fn run_correlation(config: &RunConfig, out: &OutputDir, verbose: bool) -> Result<(), RunError> {
    require_order4(config)?;
    let grid = config.grid(single_n(config))?;
    let opts = ler_options(config);
    let points = parallel_map(config.thetas.len(), config.workers, |i| {
        let theta = config.thetas[i];
        progress(verbose, format!("correlation at theta = {theta}"));
        let inv = invert_at(&grid, &config.potential, theta, &opts)?;
        let split = correlation_potential(&grid, theta, &config.potential, &inv.vs, &inv.density)?;
        Ok::<_, dfrt::Error>((inv, split))
    });

    let mut rows = Vec::new();
    let mut sections = Vec::new();
    let mut failure: Option<String> = None;
    for (theta, res) in config.thetas.iter().zip(points) {
        match res {
            Ok((inv, split)) => {
                let hx = split.hartree_exchange();
                let vc = split.correlation();
                let mut table = Vec::with_capacity(grid.n_points());
                for (i, &x) in grid.points().iter().enumerate() {
                    table.push(vec![
                        sci(x),
                        sci(hx[i].re),
                        sci(hx[i].im),
                        sci(vc[i].re),
                        sci(vc[i].im),
                    ]);
                }
                out.table(
                    &format!("correlation_theta_{}.csv", theta_tag(*theta)),
                    config,
                    &[("theta".into(), format!("{theta}"))],
                    &["x", "re_vhx", "im_vhx", "re_vc", "im_vc"],
                    &table,
                )?;
                let vc_max = vc.iter().map(|v| v.norm()).fold(0.0, f64::max);
                rows.push(vec![
                    sci(*theta),
                    sci(inv.eps.re),
                    sci(inv.eps.im),
                    sci(vc_max),
                ]);
                let mut entries = energy_entries("orbital_energy", inv.eps);
                entries.push(("max_abs_vc".into(), sci(vc_max)));
                sections.push((format!("theta {theta}"), entries));
            }
            Err(e) => {
                failure.get_or_insert(format!("theta = {theta}: {e}"));
            }
        }
    }
    finish_table_mode(
        config,
        out,
        "correlation.csv",
        &["theta", "re_eps", "im_eps", "max_abs_vc"],
        rows,
        sections,
        failure,
    )
}

// ---- attachment-energy report ----

fn run_affinity(config: &RunConfig, out: &OutputDir, verbose: bool) -> Result<(), RunError> {
    require_order4(config)?;
    let grid = config.grid(single_n(config))?;
    let points = parallel_map(config.thetas.len(), config.workers, |i| {
        let theta = config.thetas[i];
        progress(verbose, format!("affinity at theta = {theta}"));
        dfrt::ks::affinity_report(&grid, &config.potential, theta)
    });

    let mut rows = Vec::new();
    let mut sections = Vec::new();
    let mut failure: Option<String> = None;
    for (theta, res) in config.thetas.iter().zip(points) {
        match res {
            Ok(rep) => {
                rows.push(vec![
                    sci(*theta),
                    sci(rep.i_theta.re),
                    sci(rep.i_theta.im),
                    sci(rep.ks_homo_exact.re),
                    sci(rep.ks_homo_exact.im),
                    sci(rep.koopmans_gap),
                ]);
                sections.push((format!("theta {theta}"), affinity_entries(&rep)));
            }
            Err(e) => {
                failure.get_or_insert(format!("theta = {theta}: {e}"));
            }
        }
    }
    finish_table_mode(
        config,
        out,
        "affinity.csv",
        &[
            "theta",
            "re_i",
            "im_i",
            "re_ks_homo",
            "im_ks_homo",
            "koopmans_gap",
        ],
        rows,
        sections,
        failure,
    )
}

fn affinity_entries(rep: &AffinityReport) -> Vec<(String, String)> {
    let mut entries = energy_entries("e1", rep.e1);
    entries.extend(energy_entries("e2", rep.e2));
    entries.extend(energy_entries("i_theta", rep.i_theta));
    entries.extend(energy_entries("ks_homo_exact", rep.ks_homo_exact));
    entries.extend(energy_entries("ks_homo_scf", rep.ks_homo_scf));
    entries.push(("koopmans_gap".into(), sci(rep.koopmans_gap)));
    entries
}

// ---- interaction-strength sweep ----

fn run_sweep_lambda(config: &RunConfig, out: &OutputDir, verbose: bool) -> Result<(), RunError> {
    require_order4(config)?;
    let grid = config.grid(single_n(config))?;
    let theta = config.thetas[0];
    let opts = ler_options(config);
    let points = parallel_map(config.lambdas.len(), config.workers, |i| {
        let lambda = config.lambdas[i];
        progress(verbose, format!("sweep point lambda = {lambda}"));
        let mut p = config.potential;
        p.lambda = lambda;
        let exact = solve_2e_ler_with(&grid, &p, theta, None, &opts)?;
        let pt = first_order_pt(&grid, &p, theta)?;
        let scf = scf_xonly(&grid, &p, &config.scf_config(theta))?;
        Ok::<_, dfrt::Error>((exact.energy, pt, scf.total_energy))
    });

    let mut exact_rows = Vec::new();
    let mut pt_rows = Vec::new();
    let mut scf_rows = Vec::new();
    let mut sections = Vec::new();
    let mut failure: Option<String> = None;
    for (lambda, res) in config.lambdas.iter().zip(points) {
        match res {
            Ok((exact, pt, scf)) => {
                exact_rows.push(vec![sci(*lambda), sci(exact.re), sci(exact.im)]);
                pt_rows.push(vec![sci(*lambda), sci(pt.re), sci(pt.im)]);
                scf_rows.push(vec![sci(*lambda), sci(scf.re), sci(scf.im)]);
                let mut entries = energy_entries("exact", exact);
                entries.extend(energy_entries("first_order", pt));
                entries.extend(energy_entries("xonly", scf));
                sections.push((format!("lambda {lambda}"), entries));
            }
            Err(e) => {
                failure.get_or_insert(format!("lambda = {lambda}: {e}"));
            }
        }
    }
    let extra = partial_marker(&failure, &[("theta".into(), format!("{theta}"))]);
    let header = ["lambda", "re_e", "im_e"];
    out.table("sweep_exact.csv", config, &extra, &header, &exact_rows)?;
    out.table("sweep_first_order.csv", config, &extra, &header, &pt_rows)?;
    out.table("sweep_xonly.csv", config, &extra, &header, &scf_rows)?;
    write_summary(config, out, sections, failure)
}

// ---- theta table over grid sizes ----

fn run_table_theta(config: &RunConfig, out: &OutputDir, verbose: bool) -> Result<(), RunError> {
    require_order4(config)?;
    let cases: Vec<(usize, f64)> = config
        .n_points
        .iter()
        .flat_map(|&n| config.thetas.iter().map(move |&th| (n, th)))
        .collect();
    let points = parallel_map(cases.len(), config.workers, |i| {
        let (n, theta) = cases[i];
        progress(verbose, format!("table point N = {n}, theta = {theta}"));
        let grid = config.grid(n)?;
        scf_xonly(&grid, &config.potential, &config.scf_config(theta))
    });

    let mut rows = Vec::new();
    let mut sections = Vec::new();
    let mut failure: Option<String> = None;
    for ((n, theta), res) in cases.iter().zip(points) {
        match res {
            Ok(scf) => {
                rows.push(vec![
                    n.to_string(),
                    sci(*theta),
                    sci(scf.total_energy.re),
                    sci(scf.total_energy.im),
                ]);
                let mut entries = scf_entries(&scf);
                entries.insert(0, ("n_points".into(), n.to_string()));
                sections.push((format!("N {n} theta {theta}"), entries));
            }
            Err(e) => {
                failure.get_or_insert(format!("N = {n}, theta = {theta}: {e}"));
            }
        }
    }
    finish_table_mode(
        config,
        out,
        "table_theta.csv",
        &["n_points", "theta", "re_e", "im_e"],
        rows,
        sections,
        failure,
    )
}

// ---- shared emission tail ----

fn partial_marker(
    failure: &Option<String>,
    base: &[(String, String)],
) -> Vec<(String, String)> {
    let mut extra = base.to_vec();
    if let Some(msg) = failure {
        extra.push(("partial".into(), format!("incomplete run: {msg}")));
    }
    extra
}

fn finish_table_mode(
    config: &RunConfig,
    out: &OutputDir,
    table_name: &str,
    header: &[&str],
    rows: Vec<Vec<String>>,
    sections: Vec<(String, Vec<(String, String)>)>,
    failure: Option<String>,
) -> Result<(), RunError> {
    let extra = partial_marker(&failure, &[]);
    out.table(table_name, config, &extra, header, &rows)?;
    write_summary(config, out, sections, failure)
}

fn write_summary(
    config: &RunConfig,
    out: &OutputDir,
    sections: Vec<(String, Vec<(String, String)>)>,
    failure: Option<String>,
) -> Result<(), RunError> {
    let status = if failure.is_some() { "failed" } else { "ok" };
    let named: Vec<(&str, Vec<(String, String)>)> = sections
        .iter()
        .map(|(name, entries)| (name.as_str(), entries.clone()))
        .collect();
    let mut all = named;
    let err_section;
    if let Some(msg) = &failure {
        err_section = vec![("message".to_string(), msg.clone())];
        all.push(("error", err_section));
    }
    out.summary(config, status, &all)?;
    match failure {
        Some(msg) => Err(RunError(msg)),
        None => Ok(()),
    }
}
