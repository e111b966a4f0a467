//! Pressure, RPF eigenfunction and conditional Gibbs measure of a potential on
//! the circle, normalized weights, doubling ratios and potential mollification.

use crate::error::{Error, Result};
use crate::fourier::TrigSeries;
use crate::grid::Grid;
use crate::symbolic_model::{ConsistentPast, ExpandingModel, RoofFunction};
use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;
use std::fmt;
use std::sync::Arc;

/// Power iteration tolerance on the eigen-residual.
pub const DEFAULT_TOL: f64 = 1e-12;
/// Power iteration budget.
pub const MAX_ITERATIONS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Regularity {
    C1,
    Holder(f64),
}

#[derive(Clone)]
enum PotentialKind {
    Trig(TrigSeries),
    Function(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
    Sampled { grid: Grid, values: Vec<f64> },
}

/// A potential on the circle with its regularity class.
#[derive(Clone)]
pub struct Potential {
    kind: PotentialKind,
    pub regularity: Regularity,
}

impl fmt::Debug for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            PotentialKind::Trig(s) => write!(f, "Potential::Trig({s:?})"),
            PotentialKind::Function(_) => write!(f, "Potential::Function({:?})", self.regularity),
            PotentialKind::Sampled { grid, .. } => write!(f, "Potential::Sampled({} nodes)", grid.len()),
        }
    }
}

/// Samples used for Hölder seminorm estimates.
const HOLDER_SAMPLES: usize = 2048;

impl Potential {
    pub fn trig(series: TrigSeries) -> Self {
        Self { kind: PotentialKind::Trig(series), regularity: Regularity::C1 }
    }

    pub fn zero() -> Self {
        Self::trig(TrigSeries::constant(0.0))
    }

    pub fn constant(c: f64) -> Self {
        Self::trig(TrigSeries::constant(c))
    }

    /// A continuous potential known to be `alpha`-Hölder.
    pub fn holder(alpha: f64, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        assert!(alpha > 0.0 && alpha <= 1.0, "Hölder exponent must lie in (0, 1]");
        Self { kind: PotentialKind::Function(Arc::new(f)), regularity: Regularity::Holder(alpha) }
    }

    /// Grid samples of a C^1 function, interpolated cubically.
    pub fn sampled(grid: Grid, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), grid.len());
        Self { kind: PotentialKind::Sampled { grid, values }, regularity: Regularity::C1 }
    }

    pub fn eval(&self, u: f64) -> f64 {
        match &self.kind {
            PotentialKind::Trig(s) => s.eval(u),
            PotentialKind::Function(f) => f(u.rem_euclid(1.0)),
            PotentialKind::Sampled { grid, values } => grid.interpolate(values, u),
        }
    }

    pub fn as_trig(&self) -> Option<&TrigSeries> {
        match &self.kind {
            PotentialKind::Trig(s) => Some(s),
            _ => None,
        }
    }

    /// The potential plus a constant.
    pub fn shifted(&self, c: f64) -> Self {
        match &self.kind {
            PotentialKind::Trig(s) => {
                let mut s = s.clone();
                s.c0 += c;
                Self::trig(s)
            }
            _ => {
                let me = self.clone();
                Self { kind: PotentialKind::Function(Arc::new(move |u| me.eval(u) + c)), regularity: self.regularity }
            }
        }
    }

    /// `sup |f| + sup |f'|` on `samples` equispaced points (derivative by
    /// centered differences unless the potential is a trigonometric series).
    pub fn c1_norm(&self) -> f64 {
        match &self.kind {
            PotentialKind::Trig(s) => s.c1_norm(),
            PotentialKind::Sampled { grid, values } => {
                let d = grid.derivative(values);
                values.iter().fold(0.0f64, |m, v| m.max(v.abs())) + d.iter().fold(0.0f64, |m, v| m.max(v.abs()))
            }
            PotentialKind::Function(_) => {
                let g = Grid::new(HOLDER_SAMPLES).expect("grid");
                let v: Vec<f64> = g.nodes().map(|u| self.eval(u)).collect();
                Potential::sampled(g, v).c1_norm()
            }
        }
    }

    /// Sampled `sup_{x != y} |f(x) - f(y)| / d(x, y)^alpha` on the circle.
    pub fn holder_seminorm(&self, alpha: f64) -> f64 {
        let n = HOLDER_SAMPLES;
        let v: Vec<f64> = (0..n).map(|i| self.eval(i as f64 / n as f64)).collect();
        let mut best = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                let d = Grid::circle_distance(i as f64 / n as f64, j as f64 / n as f64);
                best = best.max((v[i] - v[j]).abs() / d.powf(alpha));
            }
        }
        best
    }

    /// `sup |f| + [f]_alpha`.
    pub fn holder_norm(&self, alpha: f64) -> f64 {
        let n = HOLDER_SAMPLES;
        let sup = (0..n).map(|i| self.eval(i as f64 / n as f64).abs()).fold(0.0, f64::max);
        sup + self.holder_seminorm(alpha)
    }
}

/// Pressure, RPF eigenfunction and conditional Gibbs measure on a grid.
#[derive(Debug, Clone)]
pub struct EquilibriumState {
    pub model: ExpandingModel,
    pub potential: Potential,
    pub grid: Grid,
    /// `P(potential)`.
    pub pressure: f64,
    /// Positive eigenfunction, normalized so that `sum conformal_i h_i = 1`.
    pub eigenfunction: Vec<f64>,
    /// Left eigenvector of the unnormalized operator, `sum = 1`.
    pub conformal: Vec<f64>,
    /// Weights of the invariant measure for the normalized operator, `sum = 1`.
    pub measure: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

/// The grid operator `(Mf)_i = sum_k e^{potential(v_k u_i)} f(v_k u_i)` with
/// cubic interpolation, stored row-wise.
struct GridOperator {
    width: usize,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl GridOperator {
    fn new(model: &ExpandingModel, potential: &Potential, grid: &Grid, linear: bool) -> Self {
        let k = model.branch_count();
        let width = if linear { 2 * k } else { 4 * k };
        let n = grid.len();
        let mut cols = Vec::with_capacity(n * width);
        let mut vals = Vec::with_capacity(n * width);
        for i in 0..n {
            let u = grid.node(i);
            for b in 0..k {
                let x = model.inverse(b, u);
                let e = potential.eval(x).exp();
                if linear {
                    let t = x.rem_euclid(1.0) * n as f64;
                    let j = (t.floor() as usize).min(n - 1);
                    let frac = t - j as f64;
                    cols.extend([j, (j + 1) % n]);
                    vals.extend([e * (1.0 - frac), e * frac]);
                } else {
                    let st = grid.stencil(x);
                    for l in 0..4 {
                        cols.push(st.idx[l]);
                        vals.push(e * st.w[l]);
                    }
                }
            }
        }
        Self { width, cols, vals }
    }

    fn apply(&self, f: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let r = i * self.width..(i + 1) * self.width;
            *o = self.cols[r.clone()].iter().zip(&self.vals[r]).map(|(&c, &v)| v * f[c]).sum();
        }
    }

    fn apply_transpose(&self, m: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (i, mi) in m.iter().enumerate() {
            let r = i * self.width..(i + 1) * self.width;
            for (&c, &v) in self.cols[r.clone()].iter().zip(&self.vals[r]) {
                out[c] += mi * v;
            }
        }
    }
}

fn power_iterate(
    mut v: Vec<f64>,
    tol: f64,
    step: impl Fn(&[f64], &mut [f64]),
) -> Result<(f64, Vec<f64>, usize, f64)> {
    let n = v.len();
    let sup = |x: &[f64]| x.iter().fold(0.0f64, |m, a| m.max(a.abs()));
    let s = sup(&v);
    v.iter_mut().for_each(|a| *a /= s);
    let mut w = vec![0.0; n];
    let mut history = Vec::new();
    for it in 1..=MAX_ITERATIONS {
        step(&v, &mut w);
        let lam = sup(&w);
        if !(lam.is_finite() && lam > 0.0) {
            return Err(Error::NoConvergence { iterations: it, residual: f64::NAN });
        }
        let residual = v.iter().zip(&w).map(|(a, b)| (b / lam - a).abs()).fold(0.0, f64::max);
        std::mem::swap(&mut v, &mut w);
        v.iter_mut().for_each(|a| *a /= lam);
        if residual < tol {
            return Ok((lam, v, it, residual));
        }
        if history.len() < 64 {
            history.push(residual);
        }
    }
    let residual = *history.last().unwrap_or(&f64::NAN);
    Err(Error::NoConvergence { iterations: MAX_ITERATIONS, residual })
}

/// Solve for the leading eigen-data of the transfer operator of `potential`.
pub fn rpf_solve(model: &ExpandingModel, potential: &Potential, grid: Grid, tol: f64) -> Result<EquilibriumState> {
    rpf_solve_from(model, potential, grid, tol, vec![1.0; grid.len()])
}

/// [`rpf_solve`] starting the right power iteration at `init`.
pub fn rpf_solve_from(
    model: &ExpandingModel,
    potential: &Potential,
    grid: Grid,
    tol: f64,
    init: Vec<f64>,
) -> Result<EquilibriumState> {
    model.validate()?;
    if !grid.len().is_power_of_two() || grid.len() < 64 {
        return Err(Error::Precondition(format!("grid size {} must be a power of two >= 64", grid.len())));
    }
    let op = GridOperator::new(model, potential, &grid, false);
    let (lam, mut h, iterations, residual) = power_iterate(init, tol, |f, o| op.apply(f, o))?;
    if let Some((i, v)) = h.iter().enumerate().find(|(_, v)| **v <= 0.0) {
        return Err(Error::Domain(format!("eigenfunction not positive at node {i} (value {v:e})")));
    }
    // The conformal measure is generally singular, so node weights dual to
    // cubic interpolation oscillate in sign. The dual of linear interpolation
    // is a nonnegative matrix and agrees to O(h^2).
    let dual = GridOperator::new(model, potential, &grid, true);
    let (lam_left, mut m, _, _) =
        power_iterate(vec![1.0 / grid.len() as f64; grid.len()], tol, |f, o| dual.apply_transpose(f, o))?;
    if (lam_left - lam).abs() > 1e-4 * lam {
        return Err(Error::NoConvergence { iterations, residual: (lam_left - lam).abs() / lam });
    }
    let mmax = m.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    if let Some((index, &value)) = m.iter().enumerate().find(|(_, v)| **v < -1e-12 * mmax) {
        return Err(Error::NegativeMeasure { index, value: value / m.iter().sum::<f64>() });
    }
    m.iter_mut().for_each(|v| *v = v.max(0.0));
    let total: f64 = m.iter().sum();
    m.iter_mut().for_each(|v| *v /= total);
    let pairing: f64 = m.iter().zip(&h).map(|(a, b)| a * b).sum();
    h.iter_mut().for_each(|v| *v /= pairing);
    let measure: Vec<f64> = m.iter().zip(&h).map(|(a, b)| a * b).collect();
    Ok(EquilibriumState {
        model: model.clone(),
        potential: potential.clone(),
        grid,
        pressure: lam.ln(),
        eigenfunction: h,
        conformal: m,
        measure,
        iterations,
        residual,
    })
}

impl EquilibriumState {
    /// `h(x)` by cubic interpolation.
    pub fn eigenfunction_at(&self, x: f64) -> f64 {
        self.grid.interpolate(&self.eigenfunction, x)
    }

    /// `sum_i nu_i f(u_i)`.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        self.measure.iter().zip(f).map(|(w, v)| w * v).sum()
    }

    /// Transition probabilities of the normalized operator from `u` to its preimages.
    pub fn branch_probabilities(&self, u: f64, out: &mut Vec<f64>) {
        out.clear();
        let k = self.model.branch_count();
        for b in 0..k {
            let x = self.model.inverse(b, u);
            out.push((self.potential.eval(x)).exp() * self.eigenfunction_at(x).max(0.0));
        }
        let s: f64 = out.iter().sum();
        out.iter_mut().for_each(|p| *p /= s);
    }

    /// Draw from the invariant measure by running the backward branch chain of
    /// the normalized operator for `steps` steps from a uniform start.
    pub fn sample_base<R: Rng + ?Sized>(&self, rng: &mut R, steps: usize) -> f64 {
        let mut u: f64 = rng.random();
        let mut p = Vec::with_capacity(self.model.branch_count());
        for _ in 0..steps {
            self.branch_probabilities(u, &mut p);
            let r: f64 = rng.random();
            let mut acc = 0.0;
            let mut pick = p.len() - 1;
            for (b, pb) in p.iter().enumerate() {
                acc += pb;
                if r < acc {
                    pick = b;
                    break;
                }
            }
            u = self.model.inverse(pick, u);
        }
        u
    }

    /// Normalized weight for the spectral parameter `z`.
    pub fn weight<'a>(&'a self, roof: &'a RoofFunction, z: Complex64) -> Result<NormalizedWeight<'a>> {
        NormalizedWeight::new(self, roof, z)
    }
}

/// `alpha_z(x) = potential(x) - (z - P) tau(x) + log h(x) - log h(sigma x) - P`.
///
/// The roof term is measured from the pressure so that `alpha_P` is the
/// normalized (Markov) weight.
pub struct NormalizedWeight<'a> {
    pub state: &'a EquilibriumState,
    pub roof: &'a RoofFunction,
    pub z: Complex64,
}

impl<'a> NormalizedWeight<'a> {
    pub fn new(state: &'a EquilibriumState, roof: &'a RoofFunction, z: Complex64) -> Result<Self> {
        if (z.re - state.pressure).abs() >= 1.0 {
            return Err(Error::Domain(format!(
                "Re z = {} lies outside the strip |Re z - P| < 1 around P = {}",
                z.re, state.pressure
            )));
        }
        Ok(Self { state, roof, z })
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        let s = self.state;
        let p = s.pressure;
        let real = s.potential.eval(x) + s.eigenfunction_at(x).ln() - s.eigenfunction_at(s.model.forward(x)).ln() - p;
        Complex64::new(real, 0.0) - (self.z - p) * self.roof.eval(x)
    }

    /// Sum of one-step weights along the orbit `v^(1) u, ..., v^(n) u`.
    pub fn along(&self, past: &ConsistentPast, u: f64) -> Complex64 {
        past.orbit(&self.state.model, u).iter().map(|&x| self.eval(x)).sum()
    }

    /// Telescoped `n`-step weight at `x = v^(n) u`.
    pub fn telescoped(&self, past: &ConsistentPast, u: f64) -> Complex64 {
        let s = self.state;
        let orbit = past.orbit(&s.model, u);
        let n = orbit.len() as f64;
        let x = *orbit.last().unwrap_or(&u);
        let birk: f64 = orbit.iter().map(|&y| s.potential.eval(y)).sum();
        let roof: f64 = orbit.iter().map(|&y| self.roof.eval(y)).sum();
        Complex64::new(birk + s.eigenfunction_at(x).ln() - s.eigenfunction_at(u).ln() - n * s.pressure, 0.0)
            - (self.z - s.pressure) * roof
    }
}

/// Per-(k, r) doubling ratio.
#[derive(Debug, Clone, Serialize)]
pub struct DoublingEntry {
    pub k: f64,
    pub r: f64,
    /// `None` when `r` is below the grid resolution.
    pub max_ratio: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DoublingReport {
    pub entries: Vec<DoublingEntry>,
    /// Set when, for some `k`, the ratio at the finest resolved radius exceeds
    /// twice the ratio at the coarsest.
    pub growth_flag: bool,
}

/// `max_x nu(B_{kr}(x)) / nu(B_r(x))` over grid centers.
pub fn doubling_check(state: &EquilibriumState, ks: &[f64], rs: &[f64]) -> DoublingReport {
    let n = state.grid.len();
    let h = state.grid.step();
    let mut prefix = vec![0.0; 3 * n + 1];
    for i in 0..3 * n {
        prefix[i + 1] = prefix[i] + state.measure[i % n];
    }
    // mass of nodes within j grid steps of node i
    let ball = |i: usize, j: usize| -> f64 {
        if 2 * j + 1 >= n {
            return 1.0;
        }
        let lo = i + n - j;
        prefix[lo + 2 * j + 1] - prefix[lo]
    };
    let mut entries = Vec::new();
    let mut growth_flag = false;
    for &k in ks {
        let mut resolved = Vec::new();
        for &r in rs {
            if r < 2.0 * h {
                entries.push(DoublingEntry { k, r, max_ratio: None });
                continue;
            }
            let j1 = (r / h + 1e-9).floor() as usize;
            let j2 = (k * r / h + 1e-9).floor() as usize;
            let ratio = (0..n).map(|i| ball(i, j2) / ball(i, j1)).fold(0.0, f64::max);
            resolved.push((r, ratio));
            entries.push(DoublingEntry { k, r, max_ratio: Some(ratio) });
        }
        if resolved.len() >= 2 {
            resolved.sort_by(|a, b| a.0.total_cmp(&b.0));
            if resolved[0].1 > 2.0 * resolved[resolved.len() - 1].1 {
                growth_flag = true;
            }
        }
    }
    DoublingReport { entries, growth_flag }
}

/// Smooth bump supported on `(-1, 1)`.
fn bump(x: f64) -> f64 {
    if x.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - x * x)).exp()
    }
}

/// Nodes used to sample mollified potentials.
pub const MOLLIFY_GRID: usize = 1 << 14;

/// Result of [`smooth_potential`].
#[derive(Debug, Clone)]
pub struct Mollified {
    pub potential: Potential,
    pub width: f64,
    /// `sup |f - f_b|` on the sampling grid.
    pub sup_error: f64,
    /// `|f|_{C^alpha} b^{-alpha/2}`.
    pub error_bound: f64,
    pub c1_norm: f64,
    pub holder_norm: f64,
}

/// Convolve a Hölder potential with a bump of width `b^{-1/2}`.
pub fn smooth_potential(potential: &Potential, b: f64) -> Result<Mollified> {
    if b < 1.0 {
        return Err(Error::Precondition(format!("mollification parameter b = {b} must be >= 1")));
    }
    let alpha = match potential.regularity {
        Regularity::C1 => {
            return Ok(Mollified {
                potential: potential.clone(),
                width: 0.0,
                sup_error: 0.0,
                error_bound: 0.0,
                c1_norm: potential.c1_norm(),
                holder_norm: f64::NAN,
            })
        }
        Regularity::Holder(a) => a,
    };
    let grid = Grid::new(MOLLIFY_GRID)?;
    let h = grid.step();
    let width = b.powf(-0.5);
    let half = (width / h).ceil() as i64;
    let offsets: Vec<f64> = (-half..=half).map(|j| j as f64 * h).collect();
    let kernel: Vec<f64> = offsets.iter().map(|y| bump(y / width)).collect();
    let ksum: f64 = kernel.iter().sum();
    let raw: Vec<f64> = grid.nodes().map(|u| potential.eval(u)).collect();
    let n = grid.len() as i64;
    let values: Vec<f64> = (0..n)
        .map(|i| {
            (-half..=half)
                .zip(&kernel)
                .map(|(j, kv)| kv * raw[((i - j).rem_euclid(n)) as usize])
                .sum::<f64>()
                / ksum
        })
        .collect();
    let sup_error = raw.iter().zip(&values).map(|(a, c)| (a - c).abs()).fold(0.0, f64::max);
    let holder_norm = potential.holder_norm(alpha);
    let smooth = Potential::sampled(grid, values);
    Ok(Mollified {
        c1_norm: smooth.c1_norm(),
        potential: smooth,
        width,
        sup_error,
        error_bound: holder_norm * b.powf(-alpha / 2.0),
        holder_norm,
    })
}

/// Lebesgue mean of `sqrt(|u - 1/2|)`, used by tests and examples.
pub fn sqrt_cusp(u: f64) -> f64 {
    (u - 0.5).abs().sqrt()
}
