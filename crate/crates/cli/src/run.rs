//! The `pressure`, `spectrum`, `access` and `correlate` runners.

use crate::config::{parse_irrep, ExperimentConfig};
use crate::output::Outputs;
use crate::Failure;
use extmix::accessibility::{nli_certificate, transitivity_group, NliOptions};
use extmix::compact_group::{Backend, GroupElement, HaarQuadrature};
use extmix::correlation::{correlate, fit_decay_rate, Suspension, SuspensionObservable};
use extmix::fourier::TrigSeries;
use extmix::grid::Grid;
use extmix::thermo::{rpf_solve, EquilibriumState};
use extmix::transfer::{contraction_rate, iterate_norms, Observable, TwistedOperator};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub fn solve(cfg: &ExperimentConfig, nodes: usize) -> Result<EquilibriumState, Failure> {
    let grid = Grid::new(nodes).map_err(Failure::numeric)?;
    rpf_solve(&cfg.model()?, &cfg.potential()?, grid, cfg.thermo.tol).map_err(Failure::numeric)
}

#[derive(Serialize)]
struct PressureReport {
    pressure: f64,
    iterations: usize,
    residual: f64,
    grid: usize,
    nodes: Vec<f64>,
    eigenfunction: Vec<f64>,
    measure: Vec<f64>,
}

pub fn pressure(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<(), Failure> {
    let s = solve(cfg, cfg.thermo.grid)?;
    println!("P = {:.15} ({} iterations, residual {:.2e})", s.pressure, s.iterations, s.residual);
    let report = PressureReport {
        pressure: s.pressure,
        iterations: s.iterations,
        residual: s.residual,
        grid: s.grid.len(),
        nodes: s.grid.nodes().collect(),
        eigenfunction: s.eigenfunction.clone(),
        measure: s.measure.clone(),
    };
    out.json(&cfg.thermo.out, &report)
}

#[derive(Serialize)]
struct SpectrumSummary {
    irrep: String,
    pressure: f64,
    runs: Vec<SpectrumRun>,
}

#[derive(Serialize)]
struct SpectrumRun {
    im_z: f64,
    rate: f64,
    prefactor: f64,
    no_contraction: bool,
}

pub fn spectrum(cfg: &ExperimentConfig, seed: u64, out: &mut Outputs) -> Result<(), Failure> {
    let sec = &cfg.spectrum;
    let irrep = parse_irrep(&sec.irrep, cfg.backend(), "spectrum.irrep")?;
    let s = solve(cfg, cfg.thermo.grid)?;
    let (roof, cocycle) = (cfg.roof()?, cfg.cocycle()?);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = csv::Writer::from_writer(Vec::new());
    rows.write_record(["im_z", "member", "n", "l2_norm", "c1_norm"]).map_err(Failure::io)?;
    let mut runs = Vec::new();
    for &im in &sec.im_z {
        let op = TwistedOperator::new(&s, &roof, &cocycle, irrep, Complex64::new(s.pressure, im)).map_err(Failure::numeric)?;
        let cols = irrep.dim();
        let family: Vec<Observable> = (0..sec.family)
            .map(|_| Observable::random_band_limited(s.grid, irrep, cols, sec.bandwidth, &mut rng))
            .collect();
        for (m, phi) in family.iter().enumerate() {
            for r in iterate_norms(&op, phi, sec.iters).map_err(Failure::numeric)? {
                rows.serialize((im, m, r.n, r.l2(), r.c1())).map_err(Failure::io)?;
            }
        }
        let rep = contraction_rate(&op, &family, sec.iters).map_err(Failure::numeric)?;
        println!(
            "Im z = {im}: rate {:.6}{}",
            rep.rate,
            if rep.no_contraction { " (no contraction)" } else { "" }
        );
        runs.push(SpectrumRun { im_z: im, rate: rep.rate, prefactor: rep.prefactor, no_contraction: rep.no_contraction });
    }
    out.bytes(&sec.out, rows.into_inner().map_err(|e| Failure::io(e.into_error()))?)?;
    let summary = SpectrumSummary { irrep: sec.irrep.clone(), pressure: s.pressure, runs };
    out.json(&sibling(&sec.out, "summary.json"), &summary)
}

/// `dir/name.csv` -> `dir/name.<suffix>`.
fn sibling(path: &str, suffix: &str) -> String {
    let stem = path.rsplit_once('.').map_or(path, |(s, _)| s);
    format!("{stem}.{suffix}")
}

#[derive(Serialize)]
struct AccessReport {
    depth: usize,
    pasts: usize,
    irrep: String,
    algebra_dim: usize,
    full_fraction: f64,
    epsilon_measured: Option<f64>,
    certificate_error: Option<String>,
    points: Vec<AccessPoint>,
}

#[derive(Serialize)]
struct AccessPoint {
    x: f64,
    dimension: usize,
    singular_values: Vec<f64>,
    epsilon: Option<f64>,
    singular_floor: Option<f64>,
}

pub fn access(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<(), Failure> {
    let sec = &cfg.access;
    let (model, cocycle) = (cfg.model()?, cfg.cocycle()?);
    let irrep = parse_irrep(&sec.irrep, cfg.backend(), "access.irrep")?;
    let grid = Grid::new(sec.grid).map_err(Failure::numeric)?;
    let groups = grid
        .nodes()
        .map(|x| transitivity_group(&model, &cocycle, x, sec.depth, sec.pasts))
        .collect::<extmix::Result<Vec<_>>>()
        .map_err(Failure::numeric)?;
    let opts = NliOptions { depth: sec.depth, past_budget: sec.pasts, mesh_points: sec.mesh_points, ..NliOptions::default() };
    // a refusal (degenerate locus, trivial irrep) is a reported outcome, not a failure
    let cert = nli_certificate(&model, &cocycle, irrep, grid, &vec![true; grid.len()], opts);
    let algebra_dim = cfg.backend().algebra_dim();
    let full = groups.iter().filter(|g| g.dimension == algebra_dim).count();
    let points = groups
        .iter()
        .enumerate()
        .map(|(i, g)| AccessPoint {
            x: g.x,
            dimension: g.dimension,
            singular_values: g.singular_values.clone(),
            epsilon: cert.as_ref().ok().map(|c| c.per_point[i]),
            singular_floor: cert.as_ref().ok().map(|c| c.singular_floor[i]),
        })
        .collect();
    let report = AccessReport {
        depth: sec.depth,
        pasts: sec.pasts,
        irrep: sec.irrep.clone(),
        algebra_dim,
        full_fraction: full as f64 / grid.len() as f64,
        epsilon_measured: cert.as_ref().ok().map(|c| c.epsilon_measured),
        certificate_error: cert.as_ref().err().map(|e| e.to_string()),
        points,
    };
    match &report.epsilon_measured {
        Some(e) => println!("full dimension at {full}/{} points, epsilon = {e:.6}", grid.len()),
        None => println!("full dimension at {full}/{} points, no certificate: {}", grid.len(), report.certificate_error.as_deref().unwrap_or("")),
    }
    out.json(&sec.out, &report)
}

/// `base(u)` times a fiber character: `cos(n theta)` on SO(2), the spin-`n/2` character on SU(2).
fn mode(backend: Backend, base: TrigSeries, n: u32) -> SuspensionObservable {
    match backend {
        Backend::So2 => SuspensionObservable::so2_mode(base, n as i32),
        Backend::Su2 => {
            let c1 = (base.sup_norm() + base.derivative_sup()) * (n as f64 + 1.0) * (1.0 + n as f64);
            SuspensionObservable::new(Backend::Su2, c1, move |u, g: &GroupElement, _| {
                let w = g.as_su2().w.clamp(-1.0, 1.0);
                let half = w.acos();
                // chi_{n/2} = sin((n+1) a / 2) / sin(a / 2) with cos(a/2) = w
                let chi = if half.sin().abs() < 1e-12 { (n as f64 + 1.0) * w.signum().powi(n as i32) } else { ((n as f64 + 1.0) * half).sin() / half.sin() };
                base.eval(u) * chi
            })
        }
    }
}

pub fn correlate_run(cfg: &ExperimentConfig, seed: u64, out: &mut Outputs) -> Result<(), Failure> {
    let sec = &cfg.correlate;
    let model = cfg.model()?;
    let (roof, cocycle) = (cfg.roof()?, cfg.cocycle()?);
    let s = solve(cfg, sec.grid)?;
    let backend = cfg.backend();
    let haar = match backend {
        Backend::So2 => HaarQuadrature::so2(16),
        Backend::Su2 => HaarQuadrature::su2_euler(16, 8, 16),
    };
    let mut observables = vec![
        mode(backend, TrigSeries::cosine(0.0, 1.0), 1),
        mode(backend, TrigSeries::new(0.5, vec![1.0], vec![0.3]), 1),
    ];
    // the extra factor carries character 2 so the fiber product has nonzero mean
    for _ in 1..sec.k {
        observables.push(mode(backend, TrigSeries::sine(0.2, 1.0), 2));
    }
    let observables: Vec<_> = observables.into_iter().map(|o| o.with_measured_mean(&s, &roof, &haar)).collect();
    let steps = (sec.tmax / sec.dt).round() as usize;
    let times: Vec<Vec<f64>> = (0..=steps)
        .map(|i| {
            let t = (i as f64 * sec.dt).min(sec.tmax);
            (1..=sec.k).map(|j| t * j as f64 / sec.k as f64).collect()
        })
        .collect();
    let sys = Suspension { model: &model, roof: &roof, cocycle: &cocycle, state: &s };
    let series = correlate(sys, &observables, &times, sec.samples, seed).map_err(Failure::numeric)?;
    match fit_decay_rate(&series) {
        Ok(f) => println!("fitted rate {:.6} per unit time, R^2 {:.4}, {} points excluded", f.rate, f.r2, f.excluded.len()),
        Err(e) => println!("no decay fit: {e}"),
    }
    out.bytes(&sec.out, series.to_csv().into_bytes())
}
