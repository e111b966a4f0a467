//! Twisted transfer operators `L_{z, rho}` acting on `V^rho`-valued grid
//! functions, their iterates and norm trajectories.

mod dolgopyat;

pub use dolgopyat::*;

use crate::compact_group::Irrep;
use crate::error::{Error, Result};
use crate::grid::{Grid, Stencil};
use crate::symbolic_model::{holonomy_product, ConsistentPast, HolonomyCocycle, RoofFunction};
use crate::thermo::EquilibriumState;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

/// A `V^rho`-valued function on the grid. Each node carries a `rows x cols`
/// block (column-major) on which `rho` acts from the left; `rows = dim rho`.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    pub grid: Grid,
    pub irrep: Irrep,
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<Complex64>,
}

impl Observable {
    pub fn zeros(grid: Grid, irrep: Irrep, cols: usize) -> Self {
        let rows = irrep.dim();
        Self { grid, irrep, rows, cols, values: vec![Complex64::new(0.0, 0.0); grid.len() * rows * cols] }
    }

    /// Fill each block from `f(u, block)`.
    pub fn from_fn(grid: Grid, irrep: Irrep, cols: usize, f: impl Fn(f64, &mut [Complex64])) -> Self {
        let mut o = Self::zeros(grid, irrep, cols);
        let bl = o.block_len();
        for (i, chunk) in o.values.chunks_mut(bl).enumerate() {
            f(grid.node(i), chunk);
        }
        o
    }

    /// `f(u)` placed in the first entry of each block.
    pub fn scalar(grid: Grid, irrep: Irrep, f: impl Fn(f64) -> Complex64) -> Self {
        Self::from_fn(grid, irrep, 1, |u, b| b[0] = f(u))
    }

    /// Random trigonometric polynomial of the given bandwidth in every entry.
    pub fn random_band_limited<R: Rng + ?Sized>(
        grid: Grid,
        irrep: Irrep,
        cols: usize,
        bandwidth: usize,
        rng: &mut R,
    ) -> Self {
        let rows = irrep.dim();
        let modes = 2 * bandwidth + 1;
        let scale = 1.0 / ((modes * rows * cols) as f64).sqrt();
        let coeffs: Vec<Complex64> = (0..rows * cols * modes)
            .map(|_| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex64::new(re, im) * scale
            })
            .collect();
        Self::from_fn(grid, irrep, cols, |u, b| {
            for (e, slot) in b.iter_mut().enumerate() {
                *slot = (0..modes)
                    .map(|m| {
                        let freq = m as f64 - bandwidth as f64;
                        coeffs[e * modes + m] * Complex64::from_polar(1.0, 2.0 * PI * freq * u)
                    })
                    .sum();
            }
        })
    }

    pub fn block_len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn block(&self, i: usize) -> &[Complex64] {
        let bl = self.block_len();
        &self.values[i * bl..(i + 1) * bl]
    }

    /// Cubic interpolation of every entry at `x`.
    pub fn interpolate_into(&self, x: f64, out: &mut [Complex64]) {
        let st = self.grid.stencil(x);
        self.interpolate_stencil(&st, out);
    }

    fn interpolate_stencil(&self, st: &Stencil, out: &mut [Complex64]) {
        let bl = self.block_len();
        out.iter_mut().for_each(|o| *o = Complex64::new(0.0, 0.0));
        for l in 0..4 {
            let src = &self.values[st.idx[l] * bl..(st.idx[l] + 1) * bl];
            for (o, s) in out.iter_mut().zip(src) {
                *o += s * st.w[l];
            }
        }
    }

    /// `|phi(u_i)|` (Frobenius norm of the block, equal to the `L^2(G)` norm).
    pub fn pointwise_norms(&self) -> Vec<f64> {
        self.values.chunks(self.block_len()).map(block_norm).collect()
    }

    /// `|phi'(u_i)|` by centered differences.
    pub fn derivative_norms(&self) -> Vec<f64> {
        let n = self.grid.len();
        let bl = self.block_len();
        let inv = n as f64 / 2.0;
        (0..n)
            .map(|i| {
                let a = self.block((i + 1) % n);
                let b = self.block((i + n - 1) % n);
                (0..bl).map(|e| ((a[e] - b[e]) * inv).norm_sqr()).sum::<f64>().sqrt()
            })
            .collect()
    }

    pub fn sup_norm(&self) -> f64 {
        self.pointwise_norms().into_iter().fold(0.0, f64::max)
    }

    /// `sup |phi| + sup |phi'|`.
    pub fn c1_norm(&self) -> f64 {
        self.sup_norm() + self.derivative_norms().into_iter().fold(0.0, f64::max)
    }

    /// `(sum_i w_i |phi(u_i)|^2)^{1/2}`.
    pub fn l2_norm(&self, weights: &[f64]) -> f64 {
        self.values
            .chunks(self.block_len())
            .zip(weights)
            .map(|(b, w)| w * b.iter().map(|c| c.norm_sqr()).sum::<f64>())
            .sum::<f64>()
            .sqrt()
    }

    pub fn scale(&mut self, s: f64) {
        self.values.iter_mut().for_each(|v| *v *= s);
    }
}

pub(crate) fn block_norm(b: &[Complex64]) -> f64 {
    b.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// `out = M block` for a column-major `d x d` matrix and a `d x c` block.
pub(crate) fn mat_block_mul(m: &[Complex64], d: usize, block: &[Complex64], out: &mut [Complex64]) {
    let c = block.len() / d;
    for col in 0..c {
        for r in 0..d {
            let mut acc = Complex64::new(0.0, 0.0);
            for s in 0..d {
                acc += m[r + d * s] * block[s + d * col];
            }
            out[r + d * col] = acc;
        }
    }
}

/// `(L_{z, rho} phi)(u) = sum_{sigma x = u} e^{alpha_z(x)} rho(hol(x)) phi(x)`.
#[derive(Debug, Clone)]
pub struct TwistedOperator {
    pub state: EquilibriumState,
    pub roof: RoofFunction,
    pub cocycle: HolonomyCocycle,
    pub irrep: Irrep,
    pub z: Complex64,
    branches: usize,
    stencils: Vec<Stencil>,
    weights: Vec<Complex64>,
    reps: Vec<Complex64>,
}

impl TwistedOperator {
    pub fn new(
        state: &EquilibriumState,
        roof: &RoofFunction,
        cocycle: &HolonomyCocycle,
        irrep: Irrep,
        z: Complex64,
    ) -> Result<Self> {
        if irrep.backend() != cocycle.backend() {
            return Err(Error::Precondition(format!(
                "irrep {irrep:?} does not belong to the cocycle group {:?}",
                cocycle.backend()
            )));
        }
        let weight = state.weight(roof, z)?;
        let k = state.model.branch_count();
        let n = state.grid.len();
        let d = irrep.dim();
        let mut stencils = Vec::with_capacity(n * k);
        let mut weights = Vec::with_capacity(n * k);
        let mut reps = Vec::with_capacity(n * k * d * d);
        for u in state.grid.nodes() {
            for b in 0..k {
                let x = state.model.inverse(b, u);
                stencils.push(state.grid.stencil(x));
                weights.push(weight.eval(x).exp());
                reps.extend_from_slice(irrep.matrix(&cocycle.eval(x)).as_slice());
            }
        }
        Ok(Self {
            state: state.clone(),
            roof: roof.clone(),
            cocycle: cocycle.clone(),
            irrep,
            z,
            branches: k,
            stencils,
            weights,
            reps,
        })
    }

    pub fn grid(&self) -> Grid {
        self.state.grid
    }

    fn check(&self, phi: &Observable) -> Result<()> {
        if phi.irrep != self.irrep || phi.grid != self.state.grid {
            return Err(Error::Precondition(format!(
                "observable ({:?}, {} nodes) does not match operator ({:?}, {} nodes)",
                phi.irrep,
                phi.grid.len(),
                self.irrep,
                self.state.grid.len()
            )));
        }
        Ok(())
    }

    pub fn apply(&self, phi: &Observable) -> Result<Observable> {
        self.check(phi)?;
        let d = self.irrep.dim();
        let bl = phi.block_len();
        let k = self.branches;
        let mut out = Observable::zeros(phi.grid, phi.irrep, phi.cols);
        out.values.par_chunks_mut(bl).enumerate().for_each_init(
            || (vec![Complex64::new(0.0, 0.0); bl], vec![Complex64::new(0.0, 0.0); bl]),
            |(interp, prod), (i, chunk)| {
                for b in 0..k {
                    let j = i * k + b;
                    phi.interpolate_stencil(&self.stencils[j], interp);
                    mat_block_mul(&self.reps[j * d * d..(j + 1) * d * d], d, interp, prod);
                    let w = self.weights[j];
                    for (o, p) in chunk.iter_mut().zip(prod.iter()) {
                        *o += w * p;
                    }
                }
            },
        );
        Ok(out)
    }

    pub fn apply_n(&self, phi: &Observable, n: usize) -> Result<Observable> {
        let mut cur = phi.clone();
        for _ in 0..n {
            cur = self.apply(&cur)?;
        }
        Ok(cur)
    }

    /// The untwisted real operator `L_{Re z, 0}`.
    pub fn modulus(&self) -> RealOperator {
        RealOperator {
            grid: self.state.grid,
            branches: self.branches,
            stencils: self.stencils.clone(),
            weights: self.weights.iter().map(|w| w.norm()).collect(),
        }
    }

    /// One path term `e^{alpha_z^(n)(x)} rho(Hol^(n)(x)) phi(x)` at `x = v^(n) u`,
    /// together with `e^{alpha_{Re z}^(n)(x)}`.
    pub fn path_term(&self, past: &ConsistentPast, u: f64, phi: &Observable, out: &mut [Complex64]) -> f64 {
        let w = self.state.weight(&self.roof, self.z).expect("strip checked at construction");
        let weight = w.along(past, u).exp();
        let x = past.apply(&self.state.model, u);
        let g = holonomy_product(&self.state.model, &self.cocycle, past, u);
        let m = self.irrep.matrix(&g);
        let mut interp = vec![Complex64::new(0.0, 0.0); phi.block_len()];
        phi.interpolate_into(x, &mut interp);
        mat_block_mul(m.as_slice(), self.irrep.dim(), &interp, out);
        out.iter_mut().for_each(|o| *o *= weight);
        weight.norm()
    }

    /// `L^n phi` by summing over all pasts of length `n` directly.
    pub fn apply_by_pasts(&self, phi: &Observable, pasts: &[ConsistentPast]) -> Result<Observable> {
        self.check(phi)?;
        let bl = phi.block_len();
        let mut out = Observable::zeros(phi.grid, phi.irrep, phi.cols);
        out.values.par_chunks_mut(bl).enumerate().for_each(|(i, chunk)| {
            let u = phi.grid.node(i);
            let mut term = vec![Complex64::new(0.0, 0.0); bl];
            for p in pasts {
                self.path_term(p, u, phi, &mut term);
                for (o, t) in chunk.iter_mut().zip(&term) {
                    *o += t;
                }
            }
        });
        Ok(out)
    }

    /// Largest relative excess of `|L phi|` over `L_{Re z, 0} |phi|` on the grid
    /// (nonpositive when the pointwise modulus bound holds).
    pub fn modulus_bound_excess(&self, phi: &Observable) -> Result<f64> {
        let lhs = self.apply(phi)?.pointwise_norms();
        let rhs = self.modulus().apply(&phi.pointwise_norms());
        let scale = rhs.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        Ok(lhs.iter().zip(&rhs).map(|(a, b)| (a - b) / scale).fold(f64::NEG_INFINITY, f64::max))
    }
}

/// A positive operator `(Lf)(u) = sum_x w(x) f(x)` on real grid functions.
#[derive(Debug, Clone)]
pub struct RealOperator {
    grid: Grid,
    branches: usize,
    stencils: Vec<Stencil>,
    weights: Vec<f64>,
}

impl RealOperator {
    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        let k = self.branches;
        (0..self.grid.len())
            .into_par_iter()
            .map(|i| (0..k).map(|b| self.weights[i * k + b] * self.stencils[i * k + b].apply(f)).sum())
            .collect()
    }

    pub fn apply_n(&self, f: &[f64], n: usize) -> Vec<f64> {
        let mut cur = f.to_vec();
        for _ in 0..n {
            cur = self.apply(&cur);
        }
        cur
    }
}

/// Norms of `L^n phi`, stored as logarithms to survive under- and overflow.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct NormRecord {
    pub n: usize,
    pub log_l2: f64,
    pub log_c1: f64,
}

impl NormRecord {
    pub fn l2(&self) -> f64 {
        self.log_l2.exp()
    }
    pub fn c1(&self) -> f64 {
        self.log_c1.exp()
    }
}

/// `(n, |L^n phi|_{L^2(nu)}, |L^n phi|_{C^1})` for `n = 0..=n_max`.
pub fn iterate_norms(op: &TwistedOperator, phi: &Observable, n_max: usize) -> Result<Vec<NormRecord>> {
    op.check(phi)?;
    let weights = &op.state.measure;
    let mut cur = phi.clone();
    let mut log_scale = 0.0;
    let mut out = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        if n > 0 {
            cur = op.apply(&cur)?;
        }
        let sup = cur.sup_norm();
        if sup > 0.0 && !(1e-100..=1e100).contains(&sup) {
            cur.scale(1.0 / sup);
            log_scale += sup.ln();
        }
        out.push(NormRecord {
            n,
            log_l2: cur.l2_norm(weights).ln() + log_scale,
            log_c1: cur.c1_norm().ln() + log_scale,
        });
    }
    Ok(out)
}

/// Ordinary least squares line with coefficient of determination.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

pub fn fit_line(xs: &[f64], ys: &[f64]) -> LinearFit {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let r2 = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    LinearFit { slope, intercept, r2 }
}

/// Exponential fit `|L^n phi| ~ D |phi|_{C^1} r^n` over the tail of a trajectory.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ContractionFit {
    pub rate: f64,
    pub prefactor: f64,
    pub r2: f64,
    pub no_contraction: bool,
}

/// Fit `log |L^n phi|` against `n` over `n in [N/2, N]` from a list of norms
/// indexed by `n`, normalizing the prefactor by `c1_initial`.
pub fn fit_norm_trajectory(norms: &[f64], c1_initial: f64) -> ContractionFit {
    let logs: Vec<f64> = norms.iter().map(|v| v.ln()).collect();
    fit_log_trajectory(&logs, c1_initial)
}

pub fn fit_log_trajectory(logs: &[f64], c1_initial: f64) -> ContractionFit {
    let n_max = logs.len() - 1;
    let (xs, ys): (Vec<f64>, Vec<f64>) =
        (n_max / 2..=n_max).filter(|&n| logs[n].is_finite()).map(|n| (n as f64, logs[n])).unzip();
    if xs.len() < 2 {
        // collapsed to exact zero
        return ContractionFit { rate: 0.0, prefactor: 0.0, r2: 1.0, no_contraction: false };
    }
    let fit = fit_line(&xs, &ys);
    let rate = fit.slope.exp();
    ContractionFit { rate, prefactor: fit.intercept.exp() / c1_initial, r2: fit.r2, no_contraction: rate >= 1.0 }
}

/// Worst-case fit over a family of observables.
#[derive(Debug, Clone, Serialize)]
pub struct ContractionReport {
    pub rate: f64,
    pub prefactor: f64,
    pub no_contraction: bool,
    pub fits: Vec<ContractionFit>,
}

pub fn contraction_rate(op: &TwistedOperator, family: &[Observable], n_max: usize) -> Result<ContractionReport> {
    if family.is_empty() {
        return Err(Error::Precondition("empty observable family".into()));
    }
    if n_max < 2 {
        return Err(Error::Precondition("need at least two iterations to fit a rate".into()));
    }
    let mut fits = Vec::with_capacity(family.len());
    for phi in family {
        let rec = iterate_norms(op, phi, n_max)?;
        let logs: Vec<f64> = rec.iter().map(|r| r.log_l2).collect();
        fits.push(fit_log_trajectory(&logs, rec[0].c1()));
    }
    let rate = fits.iter().map(|f| f.rate).fold(0.0, f64::max);
    let prefactor = fits.iter().map(|f| f.prefactor).fold(0.0, f64::max);
    Ok(ContractionReport { rate, prefactor, no_contraction: rate >= 1.0, fits })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compact_group::{Backend, GroupElement};
    use crate::fourier::TrigSeries;
    use crate::symbolic_model::{enumerate_pasts, ExpandingModel};
    use crate::thermo::{rpf_solve, Potential, DEFAULT_TOL};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn doubling_state(m: u32, pot: Potential) -> EquilibriumState {
        rpf_solve(&ExpandingModel::Doubling, &pot, Grid::power_of_two(m).unwrap(), DEFAULT_TOL).unwrap()
    }

    fn so2(n: i32) -> Irrep {
        Irrep::So2 { n }
    }

    #[test]
    fn constant_is_fixed_at_the_pressure() {
        let s = doubling_state(12, Potential::trig(TrigSeries::cosine(0.0, 0.5)));
        let roof = RoofFunction::default_benchmark();
        let op = TwistedOperator::new(&s, &roof, &HolonomyCocycle::Trivial(Backend::So2), so2(0), Complex64::new(s.pressure, 0.0))
            .unwrap();
        let one = Observable::scalar(s.grid, so2(0), |_| Complex64::new(1.0, 0.0));
        let out = op.apply(&one).unwrap();
        assert!(out.values.iter().all(|v| (v - 1.0).norm() < 1e-9));
    }

    #[test]
    fn untwisted_operator_preserves_the_measure() {
        let s = doubling_state(12, Potential::trig(TrigSeries::cosine(0.0, 0.5)));
        let roof = RoofFunction::default_benchmark();
        let op = TwistedOperator::new(&s, &roof, &HolonomyCocycle::Trivial(Backend::So2), so2(0), Complex64::new(s.pressure, 0.0))
            .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let phi = Observable::random_band_limited(s.grid, so2(0), 1, 3, &mut rng);
        let out = op.apply(&phi).unwrap();
        let mean = |o: &Observable| -> Complex64 { o.values.iter().zip(&s.measure).map(|(v, w)| v * w).sum() };
        let err = (mean(&out) - mean(&phi)).norm();
        // nu is exactly invariant for the linear scheme; cubic evaluation differs at O(h^2)
        assert!(err < 1e-6, "{err:e}");
    }

    #[test]
    fn constant_cocycle_factors_out_a_character() {
        let s = doubling_state(10, Potential::zero());
        let roof = RoofFunction::default_benchmark();
        let h0 = GroupElement::so2(0.9);
        let z = Complex64::new(s.pressure, 2.0);
        let twisted = TwistedOperator::new(&s, &roof, &HolonomyCocycle::Constant(h0), so2(3), z).unwrap();
        let plain = TwistedOperator::new(&s, &roof, &HolonomyCocycle::Trivial(Backend::So2), so2(3), z).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let phi = Observable::random_band_limited(s.grid, so2(3), 1, 2, &mut rng);
        let a = twisted.apply(&phi).unwrap();
        let b = plain.apply(&phi).unwrap();
        let chi = Complex64::from_polar(1.0, 3.0 * 0.9);
        assert!(a.values.iter().zip(&b.values).all(|(x, y)| (x - chi * y).norm() < 1e-13));
        // norms agree exactly along iterates
        let na = iterate_norms(&twisted, &phi, 5).unwrap();
        let nb = iterate_norms(&plain, &phi, 5).unwrap();
        for (x, y) in na.iter().zip(&nb) {
            assert!((x.log_l2 - y.log_l2).abs() < 1e-12);
        }
    }

    #[test]
    fn hand_evaluated_two_term_sum() {
        let s = doubling_state(10, Potential::zero());
        let roof = RoofFunction::constant(1.0).unwrap();
        let cocycle = HolonomyCocycle::so2_benchmark();
        let z = Complex64::new(s.pressure, 2.0);
        let op = TwistedOperator::new(&s, &roof, &cocycle, so2(1), z).unwrap();
        // phi(u) = e^{2 pi i u} sampled on the grid; u = 0.4 is a node of 1024? no: use 0.4 = 409.6/1024
        let f = |u: f64| Complex64::from_polar(1.0, 2.0 * PI * u);
        let phi = Observable::scalar(s.grid, so2(1), f);
        let i = 410;
        let u = s.grid.node(i);
        let hand: Complex64 = [u / 2.0, (u + 1.0) / 2.0]
            .iter()
            .map(|&x| {
                // alpha = -log 2 - 2i tau, rho(hol) = e^{i sin 2 pi x}
                Complex64::new(-(2f64.ln()), -2.0) .exp() * Complex64::from_polar(1.0, (2.0 * PI * x).sin()) * f(x)
            })
            .sum();
        let out = op.apply(&phi).unwrap();
        assert!((out.block(i)[0] - hand).norm() < 1e-10, "{} vs {hand}", out.block(i)[0]);
    }

    #[test]
    fn irrep_mismatch_is_rejected() {
        let s = doubling_state(8, Potential::zero());
        let roof = RoofFunction::default_benchmark();
        let op = TwistedOperator::new(&s, &roof, &HolonomyCocycle::so2_benchmark(), so2(1), Complex64::new(s.pressure, 0.0))
            .unwrap();
        let phi = Observable::scalar(s.grid, so2(2), |_| Complex64::new(1.0, 0.0));
        assert!(op.apply(&phi).is_err());
        assert!(TwistedOperator::new(&s, &roof, &HolonomyCocycle::so2_benchmark(), Irrep::Su2 { two_j: 1 }, Complex64::new(s.pressure, 0.0)).is_err());
        assert!(TwistedOperator::new(&s, &roof, &HolonomyCocycle::so2_benchmark(), so2(1), Complex64::new(s.pressure + 1.0, 0.0)).is_err());
    }

    #[test]
    fn iterate_composition_matches_two_step_sum() {
        let s = doubling_state(12, Potential::trig(TrigSeries::cosine(0.0, 0.5)));
        let roof = RoofFunction::default_benchmark();
        let op = TwistedOperator::new(&s, &roof, &HolonomyCocycle::su2_benchmark(), Irrep::Su2 { two_j: 1 }, Complex64::new(s.pressure, 1.5))
            .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let phi = Observable::random_band_limited(s.grid, Irrep::Su2 { two_j: 1 }, 2, 2, &mut rng);
        let twice = op.apply(&op.apply(&phi).unwrap()).unwrap();
        let pasts = enumerate_pasts(&s.model, 2).unwrap();
        let direct = op.apply_by_pasts(&phi, &pasts).unwrap();
        let err = twice.values.iter().zip(&direct.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn modulus_bound_holds_pointwise() {
        let s = doubling_state(12, Potential::trig(TrigSeries::cosine(0.0, 0.5)));
        let roof = RoofFunction::default_benchmark();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for (cocycle, irrep) in [
            (HolonomyCocycle::so2_benchmark(), so2(2)),
            (HolonomyCocycle::su2_benchmark(), Irrep::Su2 { two_j: 2 }),
        ] {
            let op = TwistedOperator::new(&s, &roof, &cocycle, irrep, Complex64::new(s.pressure + 0.3, 4.0)).unwrap();
            let phi = Observable::random_band_limited(s.grid, irrep, irrep.dim(), 3, &mut rng);
            assert!(op.modulus_bound_excess(&phi).unwrap() <= 1e-9);
        }
    }

    #[test]
    fn trivial_cocycle_shows_no_contraction() {
        let s = doubling_state(12, Potential::zero());
        let roof = RoofFunction::default_benchmark();
        let op = TwistedOperator::new(&s, &roof, &HolonomyCocycle::Trivial(Backend::So2), so2(1), Complex64::new(s.pressure, 0.0))
            .unwrap();
        let one = Observable::scalar(s.grid, so2(1), |_| Complex64::new(1.0, 0.0));
        let rec = iterate_norms(&op, &one, 20).unwrap();
        assert_eq!(rec[0].l2(), one.l2_norm(&s.measure));
        assert!(rec.iter().all(|r| (r.l2() - 1.0).abs() < 1e-9));
        let rep = contraction_rate(&op, &[one], 20).unwrap();
        assert!(rep.no_contraction);
    }

    #[test]
    fn accessible_circle_extension_contracts() {
        let s = doubling_state(12, Potential::zero());
        let roof = RoofFunction::default_benchmark();
        let op = TwistedOperator::new(&s, &roof, &HolonomyCocycle::so2_benchmark(), so2(1), Complex64::new(s.pressure, 0.0))
            .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let fam: Vec<_> = (0..3).map(|_| Observable::random_band_limited(s.grid, so2(1), 1, 3, &mut rng)).collect();
        let rep = contraction_rate(&op, &fam, 30).unwrap();
        assert!(rep.rate < 1.0 && !rep.no_contraction, "{rep:?}");
    }

    #[test]
    fn synthetic_exponential_fit() {
        let norms: Vec<f64> = (0..=40).map(|n| 3.0 * 0.8f64.powi(n)).collect();
        let fit = fit_norm_trajectory(&norms, 1.0);
        assert!((fit.rate - 0.8).abs() < 1e-6);
        assert!((fit.prefactor - 3.0).abs() < 1e-6);
        let flat = fit_norm_trajectory(&[1.0; 11], 1.0);
        assert!(flat.no_contraction);
    }

    #[test]
    fn rescaling_keeps_log_norms_exact() {
        let s = doubling_state(8, Potential::zero());
        let roof = RoofFunction::constant(1.0).unwrap();
        // Re z far below P inflates norms by e^{0.9} per step
        let op = TwistedOperator::new(&s, &roof, &HolonomyCocycle::Trivial(Backend::So2), so2(0), Complex64::new(s.pressure - 0.9, 0.0))
            .unwrap();
        let one = Observable::scalar(s.grid, so2(0), |_| Complex64::new(1e-90, 0.0));
        let rec = iterate_norms(&op, &one, 300).unwrap();
        let expected = (1e-90f64).ln() + 0.9 * 300.0;
        assert!((rec[300].log_l2 - expected).abs() < 1e-8, "{} vs {expected}", rec[300].log_l2);
    }
}
