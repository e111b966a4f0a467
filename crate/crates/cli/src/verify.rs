//! `verify-lemmas`: the lemma-level inequality checks, one CSV row each.

use crate::config::{parse_irrep, ExperimentConfig};
use crate::output::Outputs;
use crate::run::solve;
use crate::Failure;
use extmix::accessibility::truncation_bound;
use extmix::compact_group::{fourier_decay_check, GroupElement, HaarQuadrature, Irrep};
use extmix::correlation::{kernel_integral_check, log_space};
use extmix::grid::Grid;
use extmix::symbolic_model::{ConsistentPast, ExpandingModel};
use extmix::thermo::{smooth_potential, sqrt_cusp, Potential};
use extmix::transfer::{
    alternative_radius, cancellation_bound, dichotomy_check, domination_breach, lipschitz_propagation, select_n0,
    uniform_c_budget, ControlFunction, Dichotomy, Observable, TwistedOperator, N0_CAP,
};
use num_complex::Complex64 as C;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::f64::consts::{PI, TAU};

#[derive(Debug, Clone, Serialize)]
pub struct CheckRow {
    pub check_name: String,
    pub value: f64,
    pub bound: f64,
    pub pass: bool,
}

fn row(name: impl Into<String>, value: f64, bound: f64, pass: bool) -> CheckRow {
    CheckRow { check_name: name.into(), value, bound, pass }
}

/// A random `(phi, control)` pair with `|phi| <= control`, `control` in the
/// `C`-Lipschitz-log class and `phi` slowly varying.
fn dominated_pair(g: Grid, rng: &mut ChaCha8Rng) -> Option<(Observable, ControlFunction, f64)> {
    let c = 2.0 + 8.0 * rng.random::<f64>();
    let a = rng.random::<f64>() * c / (4.0 * PI);
    let p = rng.random::<f64>() * TAU;
    let k = rng.random_range(1..4) as f64;
    let ph = rng.random::<f64>() * TAU;
    let amp = 0.06 + 0.88 * rng.random::<f64>();
    let wobble = (c / (16.0 * PI * k)).min(amp - 0.05).min(0.95 - amp) * rng.random::<f64>();
    let twist = c / (16.0 * PI * k) * rng.random::<f64>();
    let big = move |u: f64| (a * (TAU * u + p).sin()).exp();
    let control = ControlFunction::new(g, g.nodes().map(big).collect(), c).ok()?;
    let phi = Observable::scalar(g, Irrep::So2 { n: 1 }, |u| {
        C::from_polar(big(u) * (amp + wobble * (TAU * k * u + ph).sin()), twist * (TAU * k * u).sin())
    });
    domination_breach(&phi, &control).is_none().then_some((phi, control, c))
}

fn dichotomy_and_lipschitz(trials: usize, rng: &mut ChaCha8Rng) -> Result<Vec<CheckRow>, Failure> {
    let g = Grid::power_of_two(10).map_err(Failure::numeric)?;
    let m = ExpandingModel::Doubling;
    let (mut done, mut violations, mut lip_worst, mut lip_count) = (0, 0, 0.0f64, 0);
    while done < trials {
        let Some((phi, control, c)) = dominated_pair(g, rng) else { continue };
        done += 1;
        let depth = rng.random_range(1..6);
        let past = ConsistentPast::new((0..depth).map(|_| rng.random_range(0..2)).collect());
        let delta = alternative_radius(c, 1.0);
        let center: f64 = rng.random();
        if let Dichotomy::Violation { .. } = dichotomy_check(&m, &phi, &control, delta, &past, center).map_err(Failure::numeric)? {
            violations += 1;
        }
        if let Some(rep) = lipschitz_propagation(&m, &phi, &control, delta, &past, center).map_err(Failure::numeric)? {
            lip_count += 1;
            lip_worst = lip_worst.max(rep.measured / rep.bound);
        }
    }
    Ok(vec![
        row("dichotomy_violations", violations as f64, 0.0, violations == 0),
        // the bound carries a 10% allowance for sampling the Lipschitz constant
        row("lipschitz_propagation_ratio", lip_worst, extmix::transfer::SAFETY, lip_count > 0 && lip_worst <= extmix::transfer::SAFETY),
    ])
}

fn cancellation(pairs: usize, rng: &mut ChaCha8Rng) -> Result<Vec<CheckRow>, Failure> {
    let mut worst = 0.0f64;
    let norm = |v: &[C]| v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    for _ in 0..pairs {
        let v: Vec<C> = (0..4).map(|_| C::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
        let w: Vec<C> = (0..4).map(|_| C::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
        let (nv, nw) = (norm(&v), norm(&w));
        let sep = v.iter().zip(&w).map(|(a, b)| (a / nv - b / nw).norm_sqr()).sum::<f64>().sqrt();
        let rep = cancellation_bound(&v, &w, sep * rng.random::<f64>()).map_err(Failure::numeric)?;
        worst = worst.max(rep.norm_sum / rep.bound);
    }
    let e1 = [C::new(1.0, 0.0), C::new(0.0, 0.0)];
    let e2 = [C::new(0.0, 0.0), C::new(1.0, 0.0)];
    let witness = cancellation_bound(&e1, &e2, 2f64.sqrt()).map_err(Failure::numeric)?;
    Ok(vec![
        row("cancellation_quarter_constant", worst, 1.0, worst <= 1.0),
        // orthogonal unit vectors: |v + w| = sqrt 2 exceeds the half-constant bound 1
        row("cancellation_half_constant_witness", witness.norm_sum, witness.uncorrected_bound, witness.holds && !witness.uncorrected_holds),
    ])
}

fn uniform_budget(cfg: &ExperimentConfig) -> Result<CheckRow, Failure> {
    let model = cfg.model()?;
    let (roof, cocycle) = (cfg.roof()?, cfg.cocycle()?);
    let irrep = parse_irrep(&cfg.spectrum.irrep, cfg.backend(), "spectrum.irrep")?;
    let s = solve(cfg, 2048.min(cfg.thermo.grid))?;
    let op = TwistedOperator::new(&s, &roof, &cocycle, irrep, C::new(s.pressure, 1.0)).map_err(Failure::numeric)?;
    let probe = uniform_c_budget(&op, 1.0, 1);
    let c = 10.0 * (probe.alpha_c1 + probe.hol_c1).max(1.0);
    Ok(match select_n0(&op, c, |n| truncation_bound(&model, &cocycle, n), 1e-3, N0_CAP) {
        Some(n0) => {
            let rep = uniform_c_budget(&op, c, n0);
            row(format!("uniform_c_budget_margin_n0_{n0}"), rep.margin, 0.0, rep.pass)
        }
        None => row("uniform_c_budget_margin", f64::NAN, 0.0, false),
    })
}

fn kernel(eps: f64) -> Result<CheckRow, Failure> {
    let fit = kernel_integral_check(eps, &log_space(10.0, 1e4, 40)).map_err(Failure::numeric)?;
    let need = 0.5 - 2.0 * eps - 0.05;
    Ok(row("kernel_integral_decay_exponent", fit.decay, need, fit.decay >= need))
}

fn fourier(bound: f64) -> CheckRow {
    let quad = HaarQuadrature::su2_euler(32, 16, 32);
    let f = |g: &GroupElement| {
        let q = g.as_su2();
        (q.w + 0.5 * q.x).exp() + (0.3 * q.y * q.z).sin()
    };
    let rep = fourier_decay_check(&f, &quad, &Irrep::su2_range(12), 2);
    row("fourier_decay_su2_order2", rep.max_ratio, bound, rep.max_ratio <= bound)
}

fn mollification() -> Result<Vec<CheckRow>, Failure> {
    let pot = Potential::holder(0.5, sqrt_cusp);
    let mut rows = Vec::new();
    let mut prev = f64::INFINITY;
    for b in [10.0f64, 100.0, 1000.0] {
        let m = smooth_potential(&pot, b).map_err(Failure::numeric)?;
        rows.push(row(format!("mollification_error_b{b}"), m.sup_error, m.error_bound, m.sup_error <= m.error_bound));
        let scaled = m.c1_norm / b.sqrt();
        rows.push(row(format!("mollification_c1_over_sqrt_b{b}"), scaled, prev, scaled <= prev));
        prev = scaled;
    }
    Ok(rows)
}

pub fn verify_lemmas(cfg: &ExperimentConfig, seed: u64, out: &mut Outputs) -> Result<Vec<CheckRow>, Failure> {
    let sec = &cfg.verify;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = dichotomy_and_lipschitz(sec.dichotomy_trials, &mut rng)?;
    rows.extend(cancellation(sec.cancellation_pairs, &mut rng)?);
    rows.push(uniform_budget(cfg)?);
    rows.push(kernel(sec.kernel_eps)?);
    rows.push(fourier(sec.fourier_bound));
    rows.extend(mollification()?);
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in &rows {
        w.serialize(r).map_err(Failure::io)?;
        println!("{:<40} {:>14.6e} {:>14.6e} {}", r.check_name, r.value, r.bound, if r.pass { "pass" } else { "FAIL" });
    }
    out.bytes(&sec.out, w.into_inner().map_err(|e| Failure::io(e.into_error()))?)?;
    Ok(rows)
}
