//! Control functions, the 3/4 vs 1/4 alternative, the cancellation
//! inequality, Lipschitz propagation, the uniform-C budget and the bump step
//! that introduces contraction into the untwisted dominating operator.

use super::{block_norm, mat_block_mul, Observable, TwistedOperator};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::symbolic_model::{enumerate_pasts, holonomy_product, ConsistentPast, ExpandingModel};
use num_complex::Complex64;
use serde::Serialize;

/// Relative slack used in sampled inequality checks.
pub const SAFETY: f64 = 1.1;

/// Positive grid function with `C`-Lipschitz logarithm.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlFunction {
    pub grid: Grid,
    pub values: Vec<f64>,
    pub lipschitz_budget: f64,
}

impl ControlFunction {
    pub fn new(grid: Grid, values: Vec<f64>, lipschitz_budget: f64) -> Result<Self> {
        let rep = k_class_check(grid, &values, lipschitz_budget)?;
        if !rep.member {
            return Err(Error::Precondition(format!(
                "log-Lipschitz constant {} exceeds budget {} at u = {}",
                rep.lipschitz, lipschitz_budget, rep.witness
            )));
        }
        Ok(Self { grid, values, lipschitz_budget })
    }

    pub fn constant(grid: Grid, c: f64, lipschitz_budget: f64) -> Self {
        Self { grid, values: vec![c; grid.len()], lipschitz_budget }
    }

    pub fn at(&self, x: f64) -> f64 {
        self.grid.interpolate(&self.values, x)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct KClassReport {
    /// Sampled `sup |(log Phi)'|`.
    pub lipschitz: f64,
    pub budget: f64,
    pub member: bool,
    /// Grid point attaining the sup.
    pub witness: f64,
}

pub fn k_class_check(grid: Grid, values: &[f64], c: f64) -> Result<KClassReport> {
    if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
        return Err(Error::Domain(format!("control function is not positive at u = {} (value {v})", grid.node(i))));
    }
    let logs: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let d = grid.derivative(&logs);
    let (imax, lip) = d.iter().enumerate().fold((0, 0.0f64), |(bi, bv), (i, v)| if v.abs() > bv { (i, v.abs()) } else { (bi, bv) });
    Ok(KClassReport { lipschitz: lip, budget: c, member: lip <= c, witness: grid.node(imax) })
}

/// Root of `a e^a = 1/8`.
pub fn alternative_constant() -> f64 {
    let mut a = 0.1f64;
    for _ in 0..50 {
        let g = a * a.exp() - 0.125;
        a -= g / ((1.0 + a) * a.exp());
    }
    a
}

/// The uniform constant `A = delta C` for minimal expansion prefactor `f`.
pub fn uniform_a(f: f64) -> f64 {
    0.5 * alternative_constant() * f
}

/// Radius for which the 3/4 vs 1/4 alternative holds for `K_C` controls.
pub fn alternative_radius(c: f64, f: f64) -> f64 {
    uniform_a(f) / c
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Dichotomy {
    /// `|phi o v| <= 3/4 Phi o v` on the ball.
    Upper,
    /// `|phi o v| >= 1/4 Phi o v` on the ball.
    Lower,
    /// Neither bound holds throughout; points where each fails.
    Violation { above_three_quarters: f64, below_one_quarter: f64 },
}

/// Check `|phi| < Phi` and `|phi'| < C Phi` on the grid; returns the first breach.
pub fn domination_breach(phi: &Observable, control: &ControlFunction) -> Option<(f64, String)> {
    let norms = phi.pointwise_norms();
    let dnorms = phi.derivative_norms();
    for i in 0..phi.grid.len() {
        let u = phi.grid.node(i);
        if norms[i] >= control.values[i] {
            return Some((u, format!("|phi| = {} >= Phi = {}", norms[i], control.values[i])));
        }
        if dnorms[i] >= control.lipschitz_budget * control.values[i] {
            return Some((u, format!("|phi'| = {} >= C Phi = {}", dnorms[i], control.lipschitz_budget * control.values[i])));
        }
    }
    None
}

fn ball_samples(grid: Grid, center: f64, r: f64) -> Vec<f64> {
    let mut pts: Vec<f64> = grid.ball(center, r).into_iter().map(|i| grid.node(i)).collect();
    pts.push(center.rem_euclid(1.0));
    pts
}

/// Classify `B_delta(center)` for the pullback along `past`.
pub fn dichotomy_check(
    model: &ExpandingModel,
    phi: &Observable,
    control: &ControlFunction,
    delta: f64,
    past: &ConsistentPast,
    center: f64,
) -> Result<Dichotomy> {
    let f = model.expansion_bounds().f;
    if delta * control.lipschitz_budget > uniform_a(f) * (1.0 + 1e-12) {
        return Err(Error::Precondition(format!(
            "delta C = {} exceeds A = {}",
            delta * control.lipschitz_budget,
            uniform_a(f)
        )));
    }
    if let Some((u, msg)) = domination_breach(phi, control) {
        return Err(Error::Refused { reason: msg, locus: vec![u] });
    }
    let mut block = vec![Complex64::new(0.0, 0.0); phi.block_len()];
    let mut above = None;
    let mut below = None;
    for u in ball_samples(phi.grid, center, delta) {
        let x = past.apply(model, u);
        phi.interpolate_into(x, &mut block);
        let q = block_norm(&block) / control.at(x);
        if q > 0.75 && above.is_none() {
            above = Some(u);
        }
        if q < 0.25 && below.is_none() {
            below = Some(u);
        }
    }
    Ok(match (above, below) {
        (None, _) => Dichotomy::Upper,
        (Some(_), None) => Dichotomy::Lower,
        (Some(a), Some(b)) => Dichotomy::Violation { above_three_quarters: a, below_one_quarter: b },
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct LipschitzReport {
    pub measured: f64,
    /// `8 C / (f kappa^n)`.
    pub bound: f64,
    pub holds: bool,
}

/// Sampled Lipschitz constant of `phi o v / |phi o v|` on `B_delta(center)`;
/// `None` when the lower alternative does not hold there.
pub fn lipschitz_propagation(
    model: &ExpandingModel,
    phi: &Observable,
    control: &ControlFunction,
    delta: f64,
    past: &ConsistentPast,
    center: f64,
) -> Result<Option<LipschitzReport>> {
    if dichotomy_check(model, phi, control, delta, past, center)? != Dichotomy::Lower {
        return Ok(None);
    }
    let eb = model.expansion_bounds();
    let samples = 129;
    let bl = phi.block_len();
    let mut prev: Option<(f64, Vec<Complex64>)> = None;
    let mut measured = 0.0f64;
    for j in 0..samples {
        let u = center - delta + 2.0 * delta * j as f64 / (samples - 1) as f64;
        let mut b = vec![Complex64::new(0.0, 0.0); bl];
        phi.interpolate_into(past.apply(model, u), &mut b);
        let nb = block_norm(&b);
        b.iter_mut().for_each(|v| *v /= nb);
        if let Some((pu, pb)) = &prev {
            let diff: f64 = b.iter().zip(pb).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt();
            measured = measured.max(diff / (u - pu));
        }
        prev = Some((u, b));
    }
    let bound = 8.0 * control.lipschitz_budget / (eb.f * eb.kappa.powi(past.depth() as i32));
    Ok(Some(LipschitzReport { measured, bound, holds: measured <= bound * SAFETY }))
}

#[derive(Debug, Clone, Serialize)]
pub struct CancellationReport {
    /// `(1 - eps^2/4) |v| + |w|` with `|v| <= |w|`.
    pub bound: f64,
    pub norm_sum: f64,
    pub holds: bool,
    pub swapped: bool,
    pub separation: f64,
    /// `(1 - eps^2/2) |v| + |w|`, the uncorrected constant.
    pub uncorrected_bound: f64,
    pub uncorrected_holds: bool,
}

/// Bound `|v + w|` for vectors whose directions are at least `eps` apart.
pub fn cancellation_bound(v: &[Complex64], w: &[Complex64], eps: f64) -> Result<CancellationReport> {
    if v.len() != w.len() {
        return Err(Error::Precondition("vectors of different dimension".into()));
    }
    let (mut a, mut b) = (v, w);
    let mut swapped = false;
    if block_norm(a) > block_norm(b) {
        std::mem::swap(&mut a, &mut b);
        swapped = true;
    }
    let (na, nb) = (block_norm(a), block_norm(b));
    if na == 0.0 {
        return Err(Error::Precondition("zero vector has no direction".into()));
    }
    let separation = a.iter().zip(b).map(|(x, y)| (x / na - y / nb).norm_sqr()).sum::<f64>().sqrt();
    if separation < eps * (1.0 - 1e-12) {
        return Err(Error::Precondition(format!("directions are {separation} apart, less than eps = {eps}")));
    }
    let norm_sum = a.iter().zip(b).map(|(x, y)| (x + y).norm_sqr()).sum::<f64>().sqrt();
    let bound = (1.0 - eps * eps / 4.0) * na + nb;
    let uncorrected_bound = (1.0 - eps * eps / 2.0) * na + nb;
    let tol = 1e-12 * (na + nb);
    Ok(CancellationReport {
        bound,
        norm_sum,
        holds: norm_sum <= bound + tol,
        swapped,
        separation,
        uncorrected_bound,
        uncorrected_holds: norm_sum <= uncorrected_bound + tol,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct UniformCReport {
    pub c: f64,
    pub n: usize,
    pub alpha_c1: f64,
    pub hol_c1: f64,
    pub rep_norm: f64,
    /// `|alpha_z|_{C^1} / (f (kappa - 1))`.
    pub alpha_term: f64,
    /// `|rho| |Hol|_{C^1} / (f (kappa - 1))`.
    pub holonomy_term: f64,
    /// `C (1 + |Im z|) |rho| / (f kappa^n)`.
    pub control_term: f64,
    /// `C (1 + |Im z|) |rho|`.
    pub rhs: f64,
    pub margin: f64,
    pub pass: bool,
}

/// Sampled `sup |alpha_z| + sup |alpha_z'|` on the operator grid.
pub fn weight_c1_norm(op: &TwistedOperator) -> f64 {
    let w = op.state.weight(&op.roof, op.z).expect("strip checked at construction");
    let g = op.grid();
    let vals: Vec<Complex64> = g.nodes().map(|u| w.eval(u)).collect();
    let n = g.len();
    let sup = vals.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let dsup = (0..n)
        .map(|i| ((vals[(i + 1) % n] - vals[(i + n - 1) % n]) * (n as f64 / 2.0)).norm())
        .fold(0.0, f64::max);
    sup + dsup
}

pub fn uniform_c_budget(op: &TwistedOperator, c: f64, n: usize) -> UniformCReport {
    let eb = op.state.model.expansion_bounds();
    let alpha_c1 = weight_c1_norm(op);
    let hol_c1 = op.cocycle.c1_norm();
    let rep_norm = op.irrep.rep_norm();
    let im = op.z.im.abs();
    let alpha_term = alpha_c1 / (eb.f * (eb.kappa - 1.0));
    let holonomy_term = rep_norm * hol_c1 / (eb.f * (eb.kappa - 1.0));
    let control_term = c * (1.0 + im) * rep_norm / (eb.f * eb.kappa.powi(n as i32));
    let rhs = c * (1.0 + im) * rep_norm;
    let margin = rhs - alpha_term - holonomy_term - control_term;
    UniformCReport { c, n, alpha_c1, hol_c1, rep_norm, alpha_term, holonomy_term, control_term, rhs, margin, pass: margin > 0.0 }
}

/// Default upper limit for the step depth.
pub const N0_CAP: usize = 25;

/// Smallest `n <= cap` passing the uniform-C budget with `truncation(n) <= tol`.
pub fn select_n0(op: &TwistedOperator, c: f64, truncation: impl Fn(usize) -> f64, tol: f64, cap: usize) -> Option<usize> {
    (1..=cap).find(|&n| truncation(n) <= tol && uniform_c_budget(op, c, n).pass)
}

/// Constants of one contraction step.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DolgopyatParams {
    /// Ball radius, `delta C = A`.
    pub delta: f64,
    /// Non-integrability constant.
    pub epsilon: f64,
    /// Shrink factor in `(0, 1)`.
    pub s: f64,
    /// Step depth.
    pub n0: usize,
    /// Measure-fraction constant `nu(B_{s delta / 2}) >= r nu(B_{3 delta})`.
    pub r: f64,
    /// Lipschitz budget of the control functions.
    pub c: f64,
}

/// `(eps delta (1 + |Im z|) |rho|)^2 / 2048`.
pub fn bump_height(epsilon: f64, delta: f64, im_z: f64, rep_norm: f64) -> f64 {
    (epsilon * delta * (1.0 + im_z.abs()) * rep_norm).powi(2) / 2048.0
}

/// `1 - bump_height`, the per-pair contraction factor.
pub fn contraction_factor(epsilon: f64, delta: f64, im_z: f64, rep_norm: f64) -> f64 {
    1.0 - bump_height(epsilon, delta, im_z, rep_norm)
}

/// Radially decreasing C^1 profile: 1 on `[0, R/2]`, 0 beyond `R`.
pub fn bump_profile(d: f64, radius: f64) -> f64 {
    if d <= 0.5 * radius {
        1.0
    } else if d < radius {
        let t = 2.0 * d / radius - 1.0;
        (1.0 + 1.0 / (t * t - 1.0)).exp()
    } else {
        0.0
    }
}

/// `min_y nu(B_a(y)) / nu(B_b(y))` over grid centers.
pub fn measure_fraction(weights: &[f64], grid: Grid, a: f64, b: f64) -> f64 {
    let n = grid.len();
    let h = grid.step();
    let mut prefix = vec![0.0; 3 * n + 1];
    for i in 0..3 * n {
        prefix[i + 1] = prefix[i] + weights[i % n];
    }
    let ball = |i: usize, r: f64| {
        let j = ((r / h + 1e-9).floor() as usize).min(n / 2 - 1);
        prefix[i + n + j + 1] - prefix[i + n - j]
    };
    (0..n).map(|i| ball(i, a) / ball(i, b)).fold(f64::INFINITY, f64::min)
}

impl DolgopyatParams {
    /// Derive `delta`, `s` and `r` from the operator for given `C`, `eps` and `n0`.
    pub fn derive(op: &TwistedOperator, c: f64, epsilon: f64, n0: usize) -> Self {
        let eb = op.state.model.expansion_bounds();
        let delta = alternative_radius(c, eb.f);
        let rho = op.irrep.rep_norm();
        let im = op.z.im.abs();
        let hol = op.cocycle.c1_norm();
        let s1 = (epsilon / 32.0) * (1.0 + im) * rho / (rho * hol / (eb.f * (eb.kappa - 1.0)) + epsilon / 8.0 * (1.0 + im) * rho);
        let alpha_re = {
            let real = TwistedOperator { z: Complex64::new(op.z.re, 0.0), ..op.clone() };
            weight_c1_norm(&real)
        };
        let k = eb.big_k;
        let growth = if (k - 1.0).abs() < 1e-12 { n0 as f64 } else { (k.powi(n0 as i32 + 1) - k) / (k - 1.0) };
        let s2 = c / (eb.b * alpha_re * growth + c);
        let s = 0.99 * s1.min(s2).min(1.0);
        let r = measure_fraction(&op.state.measure, op.grid(), 0.5 * s * delta, 3.0 * delta);
        Self { delta, epsilon, s, n0, r, c }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DolgopyatReport {
    pub accepted: bool,
    /// `min_u (Phi'(u) - |phi'(u)|) / sup Phi'`.
    pub domination_margin: f64,
    pub centers: usize,
    pub bumped: usize,
    /// Centers for which no pair of pasts satisfied the two-term bound.
    pub unresolved: usize,
    pub bump_height: f64,
    /// `nu` mass of the union of inner balls `B_{s delta / 2}(y_i)`.
    pub bumped_measure: f64,
    pub lni_measure: f64,
    /// `|L^{n0}_{P,0}(beta Phi)|_{L^2} / |Phi|_{L^2}`.
    pub l2_ratio: f64,
    /// `1 - r eta nu(U_lni)`.
    pub predicted_factor: f64,
    pub predicted_bound_holds: bool,
}

#[derive(Debug, Clone)]
pub struct DolgopyatOutput {
    pub phi: Observable,
    pub control: ControlFunction,
    pub report: DolgopyatReport,
}

struct PastSample {
    term: Vec<Complex64>,
    envelope: f64,
}

fn sample_past(op: &TwistedOperator, past: &ConsistentPast, u: f64, phi: &Observable, control: &ControlFunction) -> PastSample {
    let model = &op.state.model;
    let w = op.state.weight(&op.roof, op.z).expect("strip checked at construction");
    let weight = w.along(past, u).exp();
    let x = past.apply(model, u);
    let g = holonomy_product(model, &op.cocycle, past, u);
    let mut interp = vec![Complex64::new(0.0, 0.0); phi.block_len()];
    phi.interpolate_into(x, &mut interp);
    let mut term = vec![Complex64::new(0.0, 0.0); phi.block_len()];
    mat_block_mul(op.irrep.matrix(&g).as_slice(), op.irrep.dim(), &interp, &mut term);
    term.iter_mut().for_each(|t| *t *= weight);
    PastSample { term, envelope: weight.norm() * control.at(x) }
}

/// One contraction step: `phi' = L^{n0} phi`, `Phi' = L^{n0}_{Re z,0}(beta Phi)`
/// with `beta` bumped down on balls inside the certified set `lni`.
///
/// `past_prefix` symbols are searched for each pair of pasts; deeper symbols
/// are zero.
pub fn dolgopyat_step(
    phi: &Observable,
    control: &ControlFunction,
    op: &TwistedOperator,
    params: &DolgopyatParams,
    lni: &[bool],
    past_prefix: usize,
) -> Result<DolgopyatOutput> {
    let grid = op.grid();
    if lni.len() != grid.len() {
        return Err(Error::Precondition("certified set mask has the wrong length".into()));
    }
    if !(params.s > 0.0 && params.s < 1.0) {
        return Err(Error::Precondition(format!("shrink factor s = {} must lie in (0, 1)", params.s)));
    }
    let f = op.state.model.expansion_bounds().f;
    if params.delta * control.lipschitz_budget > uniform_a(f) * (1.0 + 1e-12) {
        return Err(Error::Precondition("delta C exceeds the uniform constant A".into()));
    }
    if let Some((u, msg)) = domination_breach(phi, control) {
        return Err(Error::Refused { reason: msg, locus: vec![u] });
    }
    let n0 = params.n0;
    let modulus = op.modulus();
    let phi_next = op.apply_n(phi, n0)?;
    let mut envelope = modulus.apply_n(&control.values, n0);
    let real_at_p = {
        let p = Complex64::new(op.state.pressure, 0.0);
        TwistedOperator::new(&op.state, &op.roof, &op.cocycle, op.irrep, p)?.modulus()
    };
    let at_p_same = (op.z.re - op.state.pressure).abs() == 0.0;
    let mut envelope_p = if at_p_same { envelope.clone() } else { real_at_p.apply_n(&control.values, n0) };

    let eta = if op.irrep.is_trivial() {
        0.0
    } else {
        bump_height(params.epsilon, params.delta, op.z.im, op.irrep.rep_norm())
    };
    let delta = params.delta;
    let radius = params.s * delta;
    let mut centers = Vec::new();
    if eta > 0.0 {
        for i in 0..grid.len() {
            let x = grid.node(i);
            if !lni[i] || centers.iter().any(|&c: &f64| Grid::circle_distance(c, x) < 2.0 * delta) {
                continue;
            }
            if grid.ball(x, delta).iter().all(|&j| lni[j]) {
                centers.push(x);
            }
        }
    }
    let prefix = past_prefix.min(n0);
    let pasts: Vec<ConsistentPast> = enumerate_pasts(&op.state.model, prefix)?
        .into_iter()
        .map(|p| {
            let mut s = p.symbols;
            s.resize(n0, 0);
            ConsistentPast::new(s)
        })
        .collect();
    let mut bumped = 0;
    let mut unresolved = 0;
    let mut inner = vec![false; grid.len()];
    'centers: for &x in &centers {
        for y in [x, x + 0.5 * delta, x - 0.5 * delta] {
            let pts = ball_samples(grid, y, radius);
            let samples: Vec<Vec<PastSample>> =
                pasts.iter().map(|p| pts.iter().map(|&u| sample_past(op, p, u, phi, control)).collect()).collect();
            for a in 0..pasts.len() {
                for b in 0..pasts.len() {
                    if a == b {
                        continue;
                    }
                    let ok = (0..pts.len()).all(|k| {
                        let (s1, s2) = (&samples[a][k], &samples[b][k]);
                        let sum: Vec<Complex64> = s1.term.iter().zip(&s2.term).map(|(p, q)| p + q).collect();
                        block_norm(&sum) <= (1.0 - eta) * s1.envelope + s2.envelope
                    });
                    if !ok {
                        continue;
                    }
                    // subtract the bump from the v1 term at grid nodes of B_{s delta}(y)
                    for j in grid.ball(y, radius) {
                        let u = grid.node(j);
                        let d = Grid::circle_distance(u, y);
                        let prof = bump_profile(d, radius);
                        if prof == 0.0 {
                            continue;
                        }
                        let s1 = sample_past(op, &pasts[a], u, phi, control);
                        envelope[j] -= eta * prof * s1.envelope;
                        if !at_p_same {
                            let wp = op.state.weight(&op.roof, Complex64::new(op.state.pressure, 0.0))?;
                            let xa = pasts[a].apply(&op.state.model, u);
                            envelope_p[j] -= eta * prof * wp.along(&pasts[a], u).exp().re * control.at(xa);
                        } else {
                            envelope_p[j] = envelope[j];
                        }
                        if d <= 0.5 * radius {
                            inner[j] = true;
                        }
                    }
                    bumped += 1;
                    continue 'centers;
                }
            }
        }
        unresolved += 1;
    }

    let norms = phi_next.pointwise_norms();
    let sup_env = envelope.iter().fold(0.0f64, |m, v| m.max(*v));
    let (mut margin, mut witness) = (f64::INFINITY, 0.0);
    for i in 0..grid.len() {
        let m = (envelope[i] - norms[i]) / sup_env;
        if m < margin {
            margin = m;
            witness = grid.node(i);
        }
    }
    if margin < 0.0 {
        return Err(Error::Refused {
            reason: format!("pointwise domination fails with relative margin {margin:e}"),
            locus: vec![witness],
        });
    }
    let nu = &op.state.measure;
    let l2 = |v: &[f64]| v.iter().zip(nu).map(|(a, w)| w * a * a).sum::<f64>().sqrt();
    let l2_ratio = l2(&envelope_p) / l2(&control.values);
    let lni_measure: f64 = lni.iter().zip(nu).filter(|(m, _)| **m).map(|(_, w)| w).sum();
    let bumped_measure: f64 = inner.iter().zip(nu).filter(|(m, _)| **m).map(|(_, w)| w).sum();
    let predicted_factor = 1.0 - params.r * eta * lni_measure;
    let report = DolgopyatReport {
        accepted: true,
        domination_margin: margin,
        centers: centers.len(),
        bumped,
        unresolved,
        bump_height: eta,
        bumped_measure,
        lni_measure,
        l2_ratio,
        predicted_factor,
        predicted_bound_holds: l2_ratio <= predicted_factor,
    };
    let control_next = ControlFunction { grid, values: envelope, lipschitz_budget: control.lipschitz_budget };
    Ok(DolgopyatOutput { phi: phi_next, control: control_next, report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compact_group::{Backend, Irrep};
    use crate::symbolic_model::{HolonomyCocycle, RoofFunction};
    use crate::thermo::{rpf_solve, Potential, DEFAULT_TOL};
    use num_complex::Complex64 as C;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn grid() -> Grid {
        Grid::power_of_two(10).unwrap()
    }

    #[test]
    fn k_class_examples() {
        let g = grid();
        let one = vec![1.0; g.len()];
        let r = k_class_check(g, &one, 0.0).unwrap();
        assert_eq!(r.lipschitz, 0.0);
        assert!(r.member);
        let e: Vec<f64> = g.nodes().map(|u| (2.0 * PI * u).sin().exp()).collect();
        assert!(k_class_check(g, &e, 2.0 * PI).unwrap().member);
        let fail = k_class_check(g, &e, 5.0).unwrap();
        assert!(!fail.member);
        // |cos| peaks at 0 and 1/2
        let w = fail.witness;
        assert!(Grid::circle_distance(w, 0.0).min(Grid::circle_distance(w, 0.5)) < 0.01, "{w}");
        let mut bad = one.clone();
        bad[3] = 0.0;
        assert!(matches!(k_class_check(g, &bad, 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn alternative_constant_solves_its_equation() {
        let a = alternative_constant();
        assert!((a * a.exp() - 0.125).abs() < 1e-15);
        assert!(a.exp() <= 2.0);
        assert!((alternative_radius(4.0, 1.0) * 4.0 - uniform_a(1.0)).abs() < 1e-15);
    }

    #[test]
    fn contraction_factor_arithmetic() {
        // (0.1 * 0.05 * 2 * 1)^2 / 2048 = 1e-4 / 2048
        assert!((bump_height(0.1, 0.05, 1.0, 1.0) - 4.8828125e-8).abs() < 1e-22);
        let f = contraction_factor(0.1, 0.05, 1.0, 1.0);
        assert!((f - (1.0 - 4.8828125e-8)).abs() < 1e-15);
    }

    #[test]
    fn bump_profile_is_c1_and_supported() {
        let r = 0.2;
        assert_eq!(bump_profile(0.0, r), 1.0);
        assert_eq!(bump_profile(0.1, r), 1.0);
        assert_eq!(bump_profile(0.2, r), 0.0);
        assert!(bump_profile(0.199999, r) < 1e-10);
        let h = 1e-7;
        let slope_in = (bump_profile(0.1 + h, r) - 1.0) / h;
        assert!(slope_in.abs() < 1e-4);
        let mut prev = 1.0;
        for k in 0..=100 {
            let v = bump_profile(0.1 + 0.001 * k as f64, r);
            assert!(v <= prev);
            prev = v;
        }
    }

    #[test]
    fn cancellation_examples() {
        let v = [C::new(1.0, 0.0), C::new(0.0, 0.0)];
        let same = cancellation_bound(&v, &v, 0.0).unwrap();
        assert!(same.holds && (same.norm_sum - same.bound).abs() < 1e-15);
        let w = [C::new(0.0, 0.0), C::new(1.0, 0.0)];
        let rep = cancellation_bound(&v, &w, 2f64.sqrt()).unwrap();
        assert!((rep.bound - 1.5).abs() < 1e-12);
        assert!((rep.norm_sum - 2f64.sqrt()).abs() < 1e-12);
        assert!(rep.holds);
        assert!((rep.uncorrected_bound - 1.0).abs() < 1e-12);
        assert!(!rep.uncorrected_holds);
        let big = [C::new(3.0, 0.0), C::new(0.0, 0.0)];
        assert!(cancellation_bound(&big, &w, 1.0).unwrap().swapped);
        assert!(cancellation_bound(&v, &w, 1.5).is_err());
    }

    #[test]
    fn cancellation_holds_on_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut violations = 0;
        for _ in 0..20_000 {
            let v: Vec<C> = (0..4).map(|_| C::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
            let w: Vec<C> = (0..4).map(|_| C::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
            let nv = block_norm(&v);
            let nw = block_norm(&w);
            let sep = v.iter().zip(&w).map(|(a, b)| (a / nv - b / nw).norm_sqr()).sum::<f64>().sqrt();
            let eps = sep * rng.random::<f64>();
            if !cancellation_bound(&v, &w, eps).unwrap().holds {
                violations += 1;
            }
        }
        assert_eq!(violations, 0);
    }

    /// Random `(phi, Phi)` with `|phi| < Phi` and `|phi'| <= 3/4 C Phi`.
    fn smooth_pair<R: Rng>(rng: &mut R, g: Grid, c: f64) -> (Observable, ControlFunction) {
        // log Phi has slope <= C/2; |phi|/Phi and arg phi have slopes <= C/8
        let a = rng.random::<f64>() * c / (4.0 * PI);
        let p = rng.random::<f64>() * 2.0 * PI;
        let k = rng.random_range(1..4) as f64;
        let ph = rng.random::<f64>() * 2.0 * PI;
        let amp = 0.06 + 0.88 * rng.random::<f64>();
        let wobble = (c / (16.0 * PI * k)).min(amp - 0.05).min(0.95 - amp) * rng.random::<f64>();
        let twist = c / (16.0 * PI * k) * rng.random::<f64>();
        let big = move |u: f64| (a * (2.0 * PI * u + p).sin()).exp();
        let control = ControlFunction::new(g, g.nodes().map(big).collect(), c).unwrap();
        let phi = Observable::from_fn(g, Irrep::So2 { n: 1 }, 1, |u, b| {
            let m = amp + wobble * (2.0 * PI * k * u + ph).sin();
            b[0] = C::from_polar(big(u) * m, twist * (2.0 * PI * k * u).sin());
        });
        (phi, control)
    }

    #[test]
    fn dichotomy_never_violated_on_random_admissible_pairs() {
        let g = grid();
        let model = ExpandingModel::Doubling;
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut counts = [0usize; 2];
        let mut tried = 0;
        while tried < 1000 {
            let c = 2.0 + 8.0 * rng.random::<f64>();
            let (phi, control) = smooth_pair(&mut rng, g, c);
            if domination_breach(&phi, &control).is_some() {
                continue;
            }
            tried += 1;
            let depth = rng.random_range(1..6);
            let past = ConsistentPast::new((0..depth).map(|_| rng.random_range(0..2)).collect());
            let delta = alternative_radius(c, 1.0);
            match dichotomy_check(&model, &phi, &control, delta, &past, rng.random()).unwrap() {
                Dichotomy::Upper => counts[0] += 1,
                Dichotomy::Lower => counts[1] += 1,
                v => panic!("{v:?}"),
            }
        }
        assert!(counts[0] > 0 && counts[1] > 0, "{counts:?}");
    }

    #[test]
    fn dichotomy_examples() {
        let g = grid();
        let model = ExpandingModel::Doubling;
        let control = ControlFunction::new(g, g.nodes().map(|u| (0.1 * (2.0 * PI * u).sin()).exp()).collect(), 1.0).unwrap();
        let zero = Observable::zeros(g, Irrep::So2 { n: 1 }, 1);
        let past = ConsistentPast::new(vec![1, 0]);
        assert_eq!(dichotomy_check(&model, &zero, &control, 0.05, &past, 0.3).unwrap(), Dichotomy::Upper);
        let near = Observable::from_fn(g, Irrep::So2 { n: 1 }, 1, |u, b| b[0] = C::new(0.99 * (0.1 * (2.0 * PI * u).sin()).exp(), 0.0));
        assert_eq!(dichotomy_check(&model, &near, &control, 0.05, &past, 0.3).unwrap(), Dichotomy::Lower);
        assert!(dichotomy_check(&model, &near, &control, 1.0, &past, 0.3).is_err());
    }

    #[test]
    fn lipschitz_propagation_on_lower_balls() {
        let g = Grid::power_of_two(12).unwrap();
        let model = ExpandingModel::Doubling;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut checked = 0;
        for _ in 0..300 {
            let c = 2.0 + 8.0 * rng.random::<f64>();
            let (phi, control) = smooth_pair(&mut rng, g, c);
            if domination_breach(&phi, &control).is_some() {
                continue;
            }
            let depth = rng.random_range(1..5);
            let past = ConsistentPast::new((0..depth).map(|_| rng.random_range(0..2)).collect());
            if let Some(rep) = lipschitz_propagation(&model, &phi, &control, alternative_radius(c, 1.0), &past, rng.random()).unwrap() {
                assert!(rep.holds, "{rep:?}");
                checked += 1;
            }
        }
        assert!(checked > 50);
    }

    fn benchmark_op(im: f64) -> TwistedOperator {
        let s = rpf_solve(&ExpandingModel::Doubling, &Potential::zero(), Grid::power_of_two(11).unwrap(), DEFAULT_TOL).unwrap();
        TwistedOperator::new(
            &s,
            &RoofFunction::default_benchmark(),
            &HolonomyCocycle::so2_benchmark(),
            Irrep::So2 { n: 1 },
            C::new(s.pressure, im),
        )
        .unwrap()
    }

    #[test]
    fn uniform_c_budget_examples() {
        let op = benchmark_op(1.0);
        assert!(!uniform_c_budget(&op, 0.0, 5).pass);
        let probe = uniform_c_budget(&op, 1.0, 5);
        let c = 10.0 * (probe.alpha_c1 + probe.hol_c1);
        assert!(uniform_c_budget(&op, c, 5).pass);
        let s = op.state.clone();
        let trivial = TwistedOperator::new(&s, &op.roof, &HolonomyCocycle::Trivial(Backend::So2), Irrep::So2 { n: 2 }, op.z).unwrap();
        let rep = uniform_c_budget(&trivial, 1e3, 4);
        assert_eq!(rep.holonomy_term, 0.0);
        let expected = 1e3 * 2.0 * 2.0 * (1.0 - 1.0 / 16.0) - rep.alpha_c1;
        assert!((rep.margin - expected).abs() < 1e-9);
        assert_eq!(select_n0(&op, c, |_| 0.0, 1.0, N0_CAP), Some(1));
        assert_eq!(select_n0(&op, c, |n| 0.5f64.powi(n as i32), 1e-3, N0_CAP), Some(10));
    }

    #[test]
    fn trivial_irrep_step_is_inactive() {
        let s = rpf_solve(&ExpandingModel::Doubling, &Potential::zero(), Grid::power_of_two(10).unwrap(), DEFAULT_TOL).unwrap();
        let op = TwistedOperator::new(&s, &RoofFunction::default_benchmark(), &HolonomyCocycle::so2_benchmark(), Irrep::So2 { n: 0 }, C::new(s.pressure, 0.0))
            .unwrap();
        let phi = Observable::scalar(s.grid, Irrep::So2 { n: 0 }, |u| C::new(0.5 * (2.0 * PI * u).cos(), 0.0));
        let control = ControlFunction::constant(s.grid, 1.0, 8.0);
        let params = DolgopyatParams { delta: alternative_radius(8.0, 1.0), epsilon: 1.0, s: 0.5, n0: 3, r: 0.1, c: 8.0 };
        let out = dolgopyat_step(&phi, &control, &op, &params, &vec![true; s.grid.len()], 2).unwrap();
        assert_eq!(out.report.bump_height, 0.0);
        let expected = op.modulus().apply_n(&control.values, 3);
        assert_eq!(out.control.values, expected);
    }

    #[test]
    fn accessible_step_is_accepted_and_contracts() {
        let op = benchmark_op(1.0);
        let g = op.grid();
        let c = 20.0;
        let params = DolgopyatParams::derive(&op, c, 1.0, 4);
        assert!(params.s > 0.0 && params.s < 1.0);
        let phi = Observable::scalar(g, Irrep::So2 { n: 1 }, |u| C::from_polar(0.9, (2.0 * PI * u).sin()));
        let control = ControlFunction::constant(g, 1.0, c);
        let out = dolgopyat_step(&phi, &control, &op, &params, &vec![true; g.len()], 3).unwrap();
        let rep = &out.report;
        assert!(rep.accepted && rep.domination_margin >= 0.0);
        assert!(rep.bumped > 0 && rep.unresolved == 0, "{rep:?}");
        assert!(rep.l2_ratio < 1.0, "{rep:?}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn cancellation_bound_is_never_violated(
            re in proptest::collection::vec(-1.0f64..1.0, 16),
            frac in 0.0f64..1.0,
        ) {
            let v: Vec<C> = (0..4).map(|i| C::new(re[i], re[i + 4])).collect();
            let w: Vec<C> = (0..4).map(|i| C::new(re[i + 8], re[i + 12])).collect();
            prop_assume!(block_norm(&v) > 1e-6 && block_norm(&w) > 1e-6);
            let (nv, nw) = (block_norm(&v), block_norm(&w));
            let sep = v.iter().zip(&w).map(|(a, b)| (a / nv - b / nw).norm_sqr()).sum::<f64>().sqrt();
            prop_assert!(cancellation_bound(&v, &w, sep * frac).unwrap().holds);
        }
    }
}
