//! Monte-Carlo correlation functions of the suspension flow, decay-rate
//! fitting, fiber-time Laplace transforms, the Laplace majorant and the
//! kernel integral behind the inverse-transform step.

use crate::compact_group::{Backend, GroupElement, HaarQuadrature};
use crate::error::{Error, Result};
use crate::fourier::TrigSeries;
use crate::quadrature::{gauss_legendre_on, integrate_adaptive};
use crate::symbolic_model::{flow, ExpandingModel, HolonomyCocycle, RoofFunction, SuspensionPoint};
use crate::thermo::EquilibriumState;
use crate::transfer::fit_line;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::sync::Arc;

/// Mean-zero tolerance relative to the C^1 norm.
pub const MEAN_ZERO_TOL: f64 = 1e-6;

pub type Evaluator = Arc<dyn Fn(f64, &GroupElement, f64) -> f64 + Send + Sync>;

/// Real function `phi(u, g, s)` on the suspension `{0 <= s < tau(u)}`.
#[derive(Clone)]
pub struct SuspensionObservable {
    eval: Evaluator,
    pub backend: Backend,
    pub c1_norm: f64,
    /// Measured `int phi`, when available.
    pub mean: Option<f64>,
    pub mean_zero: bool,
}

impl std::fmt::Debug for SuspensionObservable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SuspensionObservable")
            .field("backend", &self.backend)
            .field("c1_norm", &self.c1_norm)
            .field("mean", &self.mean)
            .field("mean_zero", &self.mean_zero)
            .finish()
    }
}

impl SuspensionObservable {
    pub fn new(backend: Backend, c1_norm: f64, f: impl Fn(f64, &GroupElement, f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { eval: Arc::new(f), backend, c1_norm, mean: None, mean_zero: false }
    }

    pub fn zero(backend: Backend) -> Self {
        Self { eval: Arc::new(|_, _, _| 0.0), backend, c1_norm: 0.0, mean: Some(0.0), mean_zero: true }
    }

    /// `base(u) cos(n angle(g))` on an SO(2) extension.
    pub fn so2_mode(base: TrigSeries, n: i32) -> Self {
        let c1 = base.sup_norm() * (1.0 + n.abs() as f64) + base.derivative_sup();
        Self::new(Backend::So2, c1, move |u, g, _| base.eval(u) * (n as f64 * g.as_so2()).cos())
    }

    pub fn eval(&self, u: f64, g: &GroupElement, s: f64) -> f64 {
        (self.eval)(u, g, s)
    }

    /// Measure the mean by quadrature and set the mean-zero flag accordingly.
    pub fn with_measured_mean(mut self, state: &EquilibriumState, roof: &RoofFunction, haar: &HaarQuadrature) -> Self {
        let f = self.eval.clone();
        let m = suspension_integral(state, roof, haar, move |u, g, s| f(u, g, s));
        self.mean = Some(m);
        self.mean_zero = m.abs() <= MEAN_ZERO_TOL * self.c1_norm.max(f64::MIN_POSITIVE);
        self
    }

    /// Subtract the measured mean.
    pub fn centered(self, state: &EquilibriumState, roof: &RoofFunction, haar: &HaarQuadrature) -> Self {
        let measured = self.with_measured_mean(state, roof, haar);
        let m = measured.mean.unwrap_or(0.0);
        let f = measured.eval.clone();
        Self {
            eval: Arc::new(move |u, g, s| f(u, g, s) - m),
            backend: measured.backend,
            c1_norm: measured.c1_norm + m.abs(),
            mean: Some(0.0),
            mean_zero: true,
        }
    }
}

/// `(1 / tau_bar) sum_i nu_i int_G int_0^{tau(u_i)} f ds dg`.
pub fn suspension_integral(
    state: &EquilibriumState,
    roof: &RoofFunction,
    haar: &HaarQuadrature,
    f: impl Fn(f64, &GroupElement, f64) -> f64 + Sync,
) -> f64 {
    let tau_bar = mean_roof(state, roof);
    let total: f64 = (0..state.grid.len())
        .into_par_iter()
        .map(|i| {
            let u = state.grid.node(i);
            let (s, w) = gauss_legendre_on(8, 0.0, roof.eval(u));
            let fiber = haar.integrate(|g| Complex64::new(s.iter().zip(&w).map(|(s, w)| w * f(u, g, *s)).sum(), 0.0)).re;
            state.measure[i] * fiber
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum();
    total / tau_bar
}

/// `int tau d nu`.
pub fn mean_roof(state: &EquilibriumState, roof: &RoofFunction) -> f64 {
    let vals: Vec<f64> = state.grid.nodes().map(|u| roof.eval(u)).collect();
    state.integrate(&vals)
}

/// Samples base points from the grid measure, read as a piecewise-linear density.
struct BaseSampler {
    cdf: Vec<f64>,
    h: f64,
    n: usize,
}

impl BaseSampler {
    fn new(state: &EquilibriumState) -> Self {
        let mut acc = 0.0;
        let cdf = state
            .measure
            .iter()
            .map(|w| {
                acc += w.max(0.0);
                acc
            })
            .collect::<Vec<f64>>();
        let total = acc;
        Self { cdf: cdf.into_iter().map(|c| c / total).collect(), h: state.grid.step(), n: state.grid.len() }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        let r: f64 = rng.random();
        let i = self.cdf.partition_point(|&c| c < r).min(self.n - 1);
        // hat function around the node
        let jitter = (rng.random::<f64>() + rng.random::<f64>() - 1.0) * self.h;
        (i as f64 * self.h + jitter).rem_euclid(1.0)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CorrelationSeries {
    /// `max_j t_j` for each time tuple.
    pub times: Vec<f64>,
    pub tuples: Vec<Vec<f64>>,
    pub estimates: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub samples: usize,
    pub batches: usize,
}

impl CorrelationSeries {
    /// `t,beta,stderr` rows with round-trip precision.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,beta,stderr\n");
        for ((t, b), e) in self.times.iter().zip(&self.estimates).zip(&self.std_errors) {
            out.push_str(&format!("{t:.17e},{b:.17e},{e:.17e}\n"));
        }
        out
    }
}

/// Everything that defines the suspension flow.
#[derive(Clone, Copy)]
pub struct Suspension<'a> {
    pub model: &'a ExpandingModel,
    pub roof: &'a RoofFunction,
    pub cocycle: &'a HolonomyCocycle,
    pub state: &'a EquilibriumState,
}

/// Number of independent batches (and random streams).
pub const BATCHES: usize = 64;
pub const MIN_SAMPLES: usize = 1000;

/// Estimate `beta_k(t) = int phi_0 prod_i phi_i o f_{t_i}` for each tuple in `times`.
///
/// Points are drawn from `nu x Haar x uniform[0, tau(u))` and reweighted by
/// `tau(u) / tau_bar`. Batch `b` uses ChaCha stream `b` of `seed`, so the
/// result does not depend on the thread count.
pub fn correlate(
    sys: Suspension<'_>,
    observables: &[SuspensionObservable],
    times: &[Vec<f64>],
    samples: usize,
    seed: u64,
) -> Result<CorrelationSeries> {
    if observables.len() < 2 {
        return Err(Error::Precondition("need phi_0 and at least one more observable".into()));
    }
    let k = observables.len() - 1;
    if let Some(i) = observables.iter().position(|o| !o.mean_zero) {
        return Err(Error::Precondition(format!("observable {i} is not flagged mean zero")));
    }
    if samples < MIN_SAMPLES {
        return Err(Error::Precondition(format!("{samples} samples, need at least {MIN_SAMPLES}")));
    }
    if observables.iter().any(|o| o.backend != sys.cocycle.backend()) {
        return Err(Error::Precondition("observable and cocycle live in different groups".into()));
    }
    if times.iter().any(|t| t.len() != k || t.iter().any(|v| !(*v >= 0.0))) {
        return Err(Error::Precondition(format!("every time tuple needs {k} nonnegative entries")));
    }
    let maxes: Vec<f64> = times.iter().map(|t| t.iter().copied().fold(0.0, f64::max)).collect();
    if maxes.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Precondition("max times must be strictly increasing".into()));
    }
    let mut distinct: Vec<f64> = times.iter().flatten().copied().collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    let slot: Vec<Vec<usize>> =
        times.iter().map(|t| t.iter().map(|v| distinct.partition_point(|d| d < v)).collect()).collect();
    let tau_bar = mean_roof(sys.state, sys.roof);
    let sampler = BaseSampler::new(sys.state);
    let per_batch = samples.div_ceil(BATCHES);
    let backend = sys.cocycle.backend();
    let batch_means: Vec<Vec<f64>> = (0..BATCHES)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let mut acc = vec![0.0; times.len()];
            let mut pts = vec![SuspensionPoint { u: 0.0, s: 0.0, g: GroupElement::identity(backend) }; distinct.len()];
            for _ in 0..per_batch {
                let u = sampler.sample(&mut rng);
                let tau = sys.roof.eval(u);
                let g = GroupElement::haar_sample(backend, &mut rng);
                let p0 = SuspensionPoint { u, s: rng.random::<f64>() * tau, g };
                let w = tau / tau_bar * observables[0].eval(p0.u, &p0.g, p0.s);
                let (mut p, mut t) = (p0, 0.0);
                for (q, &d) in pts.iter_mut().zip(&distinct) {
                    p = flow(&p, d - t, sys.model, sys.roof, sys.cocycle);
                    t = d;
                    *q = p;
                }
                for (a, sl) in acc.iter_mut().zip(&slot) {
                    let mut v = w;
                    for (i, &j) in sl.iter().enumerate() {
                        let q = &pts[j];
                        v *= observables[i + 1].eval(q.u, &q.g, q.s);
                    }
                    *a += v;
                }
            }
            acc.iter().map(|a| a / per_batch as f64).collect()
        })
        .collect();
    let nb = BATCHES as f64;
    let mut estimates = vec![0.0; times.len()];
    let mut std_errors = vec![0.0; times.len()];
    for j in 0..times.len() {
        let mean = batch_means.iter().map(|m| m[j]).sum::<f64>() / nb;
        let var = batch_means.iter().map(|m| (m[j] - mean).powi(2)).sum::<f64>() / (nb - 1.0);
        estimates[j] = mean;
        std_errors[j] = (var / nb).sqrt();
    }
    Ok(CorrelationSeries {
        times: maxes,
        tuples: times.to_vec(),
        estimates,
        std_errors,
        samples: per_batch * BATCHES,
        batches: BATCHES,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayFit {
    /// Decay per unit time, `|beta(t)| ~ prefactor * rate^t`.
    pub rate: f64,
    pub prefactor: f64,
    pub r2: f64,
    /// Times dropped because the estimate was within two standard errors of 0.
    pub excluded: Vec<f64>,
    pub non_decaying: bool,
}

pub const MIN_FIT_POINTS: usize = 6;

/// Weighted least squares of `log |beta|` against `t`.
pub fn fit_decay_rate(series: &CorrelationSeries) -> Result<DecayFit> {
    fit_decay_values(&series.times, &series.estimates, &series.std_errors)
}

pub fn fit_decay_values(times: &[f64], estimates: &[f64], std_errors: &[f64]) -> Result<DecayFit> {
    let mut pts = Vec::new();
    let mut excluded = Vec::new();
    for ((&t, &b), &se) in times.iter().zip(estimates).zip(std_errors) {
        if b.abs() <= 2.0 * se || b == 0.0 {
            excluded.push(t);
        } else {
            // var(log |b|) ~ (se / b)^2
            pts.push((t, b.abs().ln(), 1.0 / (se / b).powi(2).max(1e-12)));
        }
    }
    if pts.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientSignal { usable: pts.len(), required: MIN_FIT_POINTS });
    }
    let sw: f64 = pts.iter().map(|p| p.2).sum();
    let mt = pts.iter().map(|p| p.2 * p.0).sum::<f64>() / sw;
    let my = pts.iter().map(|p| p.2 * p.1).sum::<f64>() / sw;
    let stt: f64 = pts.iter().map(|p| p.2 * (p.0 - mt).powi(2)).sum();
    let sty: f64 = pts.iter().map(|p| p.2 * (p.0 - mt) * (p.1 - my)).sum();
    let slope = sty / stt;
    let intercept = my - slope * mt;
    let ss_res: f64 = pts.iter().map(|p| p.2 * (p.1 - intercept - slope * p.0).powi(2)).sum();
    let ss_tot: f64 = pts.iter().map(|p| p.2 * (p.1 - my).powi(2)).sum();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    let rate = slope.exp();
    Ok(DecayFit { rate, prefactor: intercept.exp(), r2, excluded, non_decaying: rate >= 1.0 })
}

/// `int_0^{tau(u)} phi(u, g, t) e^{-xi t} dt` for `-1/k < Re xi < 0`.
pub fn hat_transform(
    phi: &SuspensionObservable,
    roof: &RoofFunction,
    xi: Complex64,
    u: f64,
    g: &GroupElement,
    k: usize,
) -> Result<Complex64> {
    if !(xi.re < 0.0 && xi.re > -1.0 / k.max(1) as f64) {
        return Err(Error::Domain(format!("Re xi = {} outside (-1/{k}, 0)", xi.re)));
    }
    let tau = roof.eval(u);
    // enough panels to resolve the oscillation before adapting
    let panels = (xi.im.abs() * tau / 2.0).ceil().max(1.0) as usize;
    let mut out = Complex64::new(0.0, 0.0);
    for p in 0..panels {
        let (a, b) = (tau * p as f64 / panels as f64, tau * (p + 1) as f64 / panels as f64);
        let part = |im: bool| {
            integrate_adaptive(
                |t| {
                    let v = phi.eval(u, g, t) * (-xi * t).exp();
                    if im {
                        v.im
                    } else {
                        v.re
                    }
                },
                a,
                b,
                1e-14,
                1e-12,
                4000,
            )
        };
        out += Complex64::new(part(false)?.value, part(true)?.value);
    }
    Ok(out)
}

/// Contraction data of one representation: `|L^n phi^rho| <= prefactor rate^n |phi^rho|`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RepresentationTerm {
    pub rate: f64,
    pub prefactor: f64,
    /// `|hat phi_0^rho|_{C^1}`.
    pub component_norm: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LaplaceMajorant {
    /// `sum_rho sum_{1 <= n_j <= n_max} C |hat phi_0^rho| r^{max n_j} prod |hat phi_i|`.
    pub total: f64,
    /// Geometric bound on the terms with `max n_j > n_max`.
    pub tail: f64,
    /// `k! sum_rho sum_n C |hat phi_0^rho| r^n prod |hat phi_i|` over the same range.
    pub factorial_form: f64,
    /// Whether the factorial form dominates the exact tuple sum.
    pub factorial_form_dominates: bool,
    pub certifying: bool,
}

/// Majorant of the Laplace transform of `beta_k`.
///
/// The number of `k`-tuples in `[1, m]^k` with maximum `m` is
/// `m^k - (m-1)^k`, so the tuple sum is evaluated exactly; the factorial form
/// is reported next to it because it does not bound the tuple sum for `k >= 2`.
pub fn laplace_majorant(terms: &[RepresentationTerm], fiber_sups: &[f64], n_max: usize) -> LaplaceMajorant {
    let k = fiber_sups.len() as i32;
    let fibers: f64 = fiber_sups.iter().product();
    if terms.iter().any(|t| t.rate >= 1.0 && t.component_norm * t.prefactor * fibers > 0.0) {
        return LaplaceMajorant {
            total: f64::INFINITY,
            tail: f64::INFINITY,
            factorial_form: f64::INFINITY,
            factorial_form_dominates: false,
            certifying: false,
        };
    }
    let count = |m: usize| (m as f64).powi(k) - (m as f64 - 1.0).powi(k);
    let factorial: f64 = (1..=k).map(|i| i as f64).product();
    let (mut total, mut tail, mut fact) = (0.0, 0.0, 0.0);
    for t in terms {
        let c = t.prefactor * t.component_norm * fibers;
        if c == 0.0 {
            continue;
        }
        let mut rm = 1.0;
        for m in 1..=n_max {
            rm *= t.rate;
            total += c * rm * count(m);
            fact += factorial * c * rm;
        }
        // later terms shrink at least by q per step
        let n = n_max as f64;
        let q = t.rate * ((n + 2.0) / (n + 1.0)).powi((k - 1).max(0));
        let first = c * t.rate.powi(n_max as i32 + 1) * count(n_max + 1);
        tail += if q < 1.0 { first / (1.0 - q) } else { f64::INFINITY };
    }
    LaplaceMajorant {
        total,
        tail,
        factorial_form: fact,
        factorial_form_dominates: fact >= total,
        certifying: tail.is_finite(),
    }
}

/// `int (1 + |x + y|)^{-a} (1 + |y|)^{-1} dy` over the real line.
pub fn kernel_integral(a: f64, x: f64) -> Result<f64> {
    if !(a > 0.0) {
        return Err(Error::Domain(format!("exponent {a} must be positive")));
    }
    let f = |y: f64| (1.0 + (x + y).abs()).powf(-a) / (1.0 + y.abs());
    let (lo, hi) = if -x < 0.0 { (-x, 0.0) } else { (0.0, -x) };
    let tol = 1e-10;
    let abs = 1e-18;
    let max = 20_000;
    // tails through y = edge +- (e^v - 1); the integrand decays like e^{-a v}
    let vmax = 60.0 / a;
    let right = integrate_adaptive(|v| f(hi + v.exp_m1()) * v.exp(), 0.0, vmax, abs, tol, max)?;
    let left = integrate_adaptive(|v| f(lo - v.exp_m1()) * v.exp(), 0.0, vmax, abs, tol, max)?;
    let mut mid = 0.0;
    if hi > lo {
        let c = 0.5 * (lo + hi);
        // logarithmic grading toward both kinks
        for (edge, sign) in [(lo, 1.0), (hi, -1.0)] {
            let w = (c - edge).abs();
            mid += integrate_adaptive(|v| f(edge + sign * v.exp_m1()) * v.exp(), 0.0, w.ln_1p(), abs, tol, max)?.value;
        }
    }
    Ok(left.value + mid + right.value)
}

#[derive(Debug, Clone, Serialize)]
pub struct KernelFit {
    pub exponent: f64,
    /// Fitted `p` in `f(x) ~ C (1 + x)^{-p}`.
    pub decay: f64,
    pub r2: f64,
    pub xs: Vec<f64>,
    pub values: Vec<f64>,
}

/// Fit the decay of `kernel_integral(exponent, x)` over `xs`.
pub fn fit_kernel_decay(exponent: f64, xs: &[f64]) -> Result<KernelFit> {
    let values = xs.iter().map(|&x| kernel_integral(exponent, x)).collect::<Result<Vec<f64>>>()?;
    let lx: Vec<f64> = xs.iter().map(|x| (1.0 + x.abs()).ln()).collect();
    let ly: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let fit = fit_line(&lx, &ly);
    Ok(KernelFit { exponent, decay: -fit.slope, r2: fit.r2, xs: xs.to_vec(), values })
}

/// Decay exponent of `int (1 + |x + y|)^{-(1/2 - eps)} (1 + |y|)^{-1} dy`.
pub fn kernel_integral_check(eps: f64, xs: &[f64]) -> Result<KernelFit> {
    if !(eps > 0.0 && eps < 0.1) {
        return Err(Error::Precondition(format!("eps = {eps} outside (0, 0.1)")));
    }
    fit_kernel_decay(0.5 - eps, xs)
}

/// `n` log-spaced points in `[a, b]`.
pub fn log_space(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a * (b / a).powf(i as f64 / (n - 1) as f64)).collect()
}
