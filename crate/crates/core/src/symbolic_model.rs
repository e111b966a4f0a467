//! Full-branch expanding circle maps, consistent pasts, roof functions,
//! holonomy cocycles and the suspension flow with group fibers.

use crate::compact_group::{AlgebraElement, Backend, GroupElement};
use crate::error::{Error, Result};
use crate::fourier::{TrigSeries, NORM_SAMPLES};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

/// Largest number of pasts [`enumerate_pasts`] will materialize.
pub const MAX_PASTS: usize = 1 << 22;

/// One affine inverse branch `v(u) = offset + slope * u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineBranch {
    pub slope: f64,
    pub offset: f64,
}

/// Orientation preserving full-branch expanding map of the circle `[0, 1)`,
/// described through its inverse branches `v_0, ..., v_{k-1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ExpandingModel {
    /// `u -> 2u`, branches `u/2`, `(u+1)/2`.
    Doubling,
    /// `u -> 3u`.
    Tripling,
    /// User supplied affine branches; images must tile `[0, 1)` in order.
    Affine { branches: Vec<AffineBranch> },
    /// `v_i(u) = h((u + i)/k)` with `h(y) = y + a sin(2 pi y)/(2 pi)`.
    Perturbed { k: usize, a: f64 },
}

/// Expansion rates: `f kappa^n <= |(sigma^n)'| <= b K^n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpansionBounds {
    pub f: f64,
    pub kappa: f64,
    pub b: f64,
    pub big_k: f64,
}

fn perturb(a: f64, y: f64) -> f64 {
    y + a * (TAU * y).sin() / TAU
}

fn perturb_inverse(a: f64, x: f64) -> f64 {
    let mut y = x;
    for _ in 0..60 {
        let r = perturb(a, y) - x;
        let d = 1.0 + a * (TAU * y).cos();
        let step = r / d;
        y -= step;
        if step.abs() < 1e-16 {
            break;
        }
    }
    y
}

impl ExpandingModel {
    /// Validated affine table.
    pub fn affine(branches: Vec<AffineBranch>) -> Result<Self> {
        let m = ExpandingModel::Affine { branches };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ExpandingModel::Doubling | ExpandingModel::Tripling => Ok(()),
            ExpandingModel::Affine { branches } => {
                if branches.len() < 2 {
                    return Err(Error::InvalidModel("need at least two branches".into()));
                }
                let mut edge = 0.0;
                for (i, br) in branches.iter().enumerate() {
                    if !(br.slope > 0.0 && br.slope < 1.0) {
                        return Err(Error::InvalidModel(format!(
                            "branch {i} has slope {} (must lie in (0, 1) to be expanding)",
                            br.slope
                        )));
                    }
                    if (br.offset - edge).abs() > 1e-12 {
                        return Err(Error::InvalidModel(format!(
                            "branch {i} image starts at {} but the previous image ends at {edge}",
                            br.offset
                        )));
                    }
                    edge = br.offset + br.slope;
                }
                if (edge - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidModel(format!("branch images cover [0, {edge}) instead of [0, 1)")));
                }
                Ok(())
            }
            ExpandingModel::Perturbed { k, a } => {
                if *k < 2 {
                    return Err(Error::InvalidModel("need at least two branches".into()));
                }
                if a.abs() >= 1.0 || (1.0 + a.abs()) >= *k as f64 {
                    return Err(Error::InvalidModel(format!("perturbation {a} breaks monotonicity or expansion")));
                }
                Ok(())
            }
        }
    }

    pub fn branch_count(&self) -> usize {
        match self {
            ExpandingModel::Doubling => 2,
            ExpandingModel::Tripling => 3,
            ExpandingModel::Affine { branches } => branches.len(),
            ExpandingModel::Perturbed { k, .. } => *k,
        }
    }

    /// `v_i(u)`.
    pub fn inverse(&self, i: usize, u: f64) -> f64 {
        match self {
            ExpandingModel::Doubling => (u + i as f64) / 2.0,
            ExpandingModel::Tripling => (u + i as f64) / 3.0,
            ExpandingModel::Affine { branches } => branches[i].offset + branches[i].slope * u,
            ExpandingModel::Perturbed { k, a } => perturb(*a, (u + i as f64) / *k as f64),
        }
    }

    /// `v_i'(u)`.
    pub fn inverse_derivative(&self, i: usize, u: f64) -> f64 {
        match self {
            ExpandingModel::Doubling => 0.5,
            ExpandingModel::Tripling => 1.0 / 3.0,
            ExpandingModel::Affine { branches } => branches[i].slope,
            ExpandingModel::Perturbed { k, a } => {
                let k = *k as f64;
                (1.0 + a * (TAU * (u + i as f64) / k).cos()) / k
            }
        }
    }

    /// Index of the branch whose image contains `x`.
    pub fn branch_of(&self, x: f64) -> usize {
        let x = x.rem_euclid(1.0);
        let k = self.branch_count();
        let idx = match self {
            ExpandingModel::Doubling => (2.0 * x).floor() as usize,
            ExpandingModel::Tripling => (3.0 * x).floor() as usize,
            ExpandingModel::Affine { branches } => {
                branches.iter().rposition(|b| b.offset <= x).unwrap_or(0)
            }
            ExpandingModel::Perturbed { k, a } => (perturb_inverse(*a, x) * *k as f64).floor() as usize,
        };
        idx.min(k - 1)
    }

    /// The forward map `sigma`.
    pub fn forward(&self, x: f64) -> f64 {
        let x = x.rem_euclid(1.0);
        let r = match self {
            ExpandingModel::Doubling => 2.0 * x,
            ExpandingModel::Tripling => 3.0 * x,
            ExpandingModel::Affine { branches } => {
                let b = branches[self.branch_of(x)];
                (x - b.offset) / b.slope
            }
            ExpandingModel::Perturbed { k, a } => *k as f64 * perturb_inverse(*a, x),
        };
        let r = r.rem_euclid(1.0);
        if r >= 1.0 {
            0.0
        } else {
            r
        }
    }

    /// `sigma'(x)`.
    pub fn forward_derivative(&self, x: f64) -> f64 {
        let i = self.branch_of(x);
        1.0 / self.inverse_derivative(i, self.forward(x))
    }

    pub fn expansion_bounds(&self) -> ExpansionBounds {
        let (kappa, big_k) = match self {
            ExpandingModel::Doubling => (2.0, 2.0),
            ExpandingModel::Tripling => (3.0, 3.0),
            ExpandingModel::Affine { branches } => {
                let smax = branches.iter().map(|b| b.slope).fold(0.0, f64::max);
                let smin = branches.iter().map(|b| b.slope).fold(1.0, f64::min);
                (1.0 / smax, 1.0 / smin)
            }
            ExpandingModel::Perturbed { k, a } => (*k as f64 / (1.0 + a.abs()), *k as f64 / (1.0 - a.abs())),
        };
        ExpansionBounds { f: 1.0, kappa, b: 1.0, big_k }
    }
}

/// Strictly positive roof function `tau` given by a trigonometric series.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoofFunction {
    series: TrigSeries,
    pub tau_min: f64,
    pub tau_max: f64,
    pub c1_norm: f64,
}

impl RoofFunction {
    pub fn new(series: TrigSeries) -> Result<Self> {
        let tau_min = series.min_value();
        if !(tau_min > 0.0) {
            return Err(Error::InvalidModel(format!("roof function has minimum {tau_min}, must be positive")));
        }
        Ok(Self { tau_max: series.max_value(), c1_norm: series.c1_norm(), tau_min, series })
    }

    /// `1 + 0.3 cos(2 pi u)`.
    pub fn default_benchmark() -> Self {
        Self::new(TrigSeries::cosine(1.0, 0.3)).expect("positive roof")
    }

    pub fn constant(c: f64) -> Result<Self> {
        Self::new(TrigSeries::constant(c))
    }

    pub fn series(&self) -> &TrigSeries {
        &self.series
    }

    pub fn eval(&self, u: f64) -> f64 {
        self.series.eval(u)
    }

    pub fn derivative(&self, u: f64) -> f64 {
        self.series.derivative(u)
    }

    /// Mean of `tau` against Lebesgue measure.
    pub fn mean(&self) -> f64 {
        self.series.mean()
    }
}

/// A differentiable group-valued function on the circle, used both as the
/// holonomy cocycle `hol` and as a gauge.
#[derive(Debug, Clone, PartialEq)]
pub enum HolonomyCocycle {
    Trivial(Backend),
    Constant(GroupElement),
    /// Rotation by `2 pi winding u + series(u)`.
    So2Angle { winding: i32, series: TrigSeries },
    /// `exp(x(u) e1 + y(u) e2 + z(u) e3)` in SU(2).
    Su2Exp { x: TrigSeries, y: TrigSeries, z: TrigSeries },
    /// `g(sigma u) hol(u) g(u)^{-1}`.
    Gauged { base: Box<HolonomyCocycle>, gauge: Box<HolonomyCocycle>, model: ExpandingModel },
}

/// `d/dt exp(A(t)) exp(A(t))^{-1} = J(A) A'` for the su(2) exponential.
pub fn su2_exp_right_derivative(a: [f64; 3], da: [f64; 3]) -> [f64; 3] {
    use crate::compact_group::AlgebraElement as A;
    let th2 = a[0] * a[0] + a[1] * a[1] + a[2] * a[2];
    let th = th2.sqrt();
    let (c1, c2) = if th < 1e-4 {
        (0.5 - th2 / 24.0, 1.0 / 6.0 - th2 / 120.0)
    } else {
        ((1.0 - th.cos()) / th2, (th - th.sin()) / (th2 * th))
    };
    let xa = A::Su2(a);
    let b1 = xa.bracket(&A::Su2(da));
    let b2 = xa.bracket(&b1);
    let (AlgebraElement::Su2(b1), AlgebraElement::Su2(b2)) = (b1, b2) else { unreachable!() };
    [
        da[0] + c1 * b1[0] + c2 * b2[0],
        da[1] + c1 * b1[1] + c2 * b2[1],
        da[2] + c1 * b1[2] + c2 * b2[2],
    ]
}

impl HolonomyCocycle {
    /// `exp(0.7 cos(2 pi u) e1 + 0.5 sin(2 pi u) e2)`.
    pub fn su2_benchmark() -> Self {
        HolonomyCocycle::Su2Exp {
            x: TrigSeries::cosine(0.0, 0.7),
            y: TrigSeries::sine(0.0, 0.5),
            z: TrigSeries::default(),
        }
    }

    /// Rotation by `sin(2 pi u)`.
    pub fn so2_benchmark() -> Self {
        HolonomyCocycle::So2Angle { winding: 0, series: TrigSeries::sine(0.0, 1.0) }
    }

    /// `g(sigma u) hol(u) g(u)^{-1}`.
    pub fn gauge_transform(&self, gauge: &HolonomyCocycle, model: &ExpandingModel) -> Result<Self> {
        if gauge.backend() != self.backend() {
            return Err(Error::Precondition("gauge and cocycle live in different groups".into()));
        }
        Ok(HolonomyCocycle::Gauged {
            base: Box::new(self.clone()),
            gauge: Box::new(gauge.clone()),
            model: model.clone(),
        })
    }

    pub fn backend(&self) -> Backend {
        match self {
            HolonomyCocycle::Trivial(b) => *b,
            HolonomyCocycle::Constant(g) => g.backend(),
            HolonomyCocycle::So2Angle { .. } => Backend::So2,
            HolonomyCocycle::Su2Exp { .. } => Backend::Su2,
            HolonomyCocycle::Gauged { base, .. } => base.backend(),
        }
    }

    pub fn is_trivial(&self) -> bool {
        matches!(self, HolonomyCocycle::Trivial(_))
    }

    pub fn eval(&self, u: f64) -> GroupElement {
        match self {
            HolonomyCocycle::Trivial(b) => GroupElement::identity(*b),
            HolonomyCocycle::Constant(g) => *g,
            HolonomyCocycle::So2Angle { winding, series } => {
                GroupElement::so2(TAU * *winding as f64 * u + series.eval(u))
            }
            HolonomyCocycle::Su2Exp { x, y, z } => {
                GroupElement::exp(&AlgebraElement::Su2([x.eval(u), y.eval(u), z.eval(u)]))
            }
            HolonomyCocycle::Gauged { base, gauge, model } => {
                gauge.eval(model.forward(u)).mul(&base.eval(u)).mul(&gauge.eval(u).inv())
            }
        }
    }

    /// Right logarithmic derivative `hol'(u) hol(u)^{-1}` as an algebra element.
    pub fn right_log_derivative(&self, u: f64) -> AlgebraElement {
        match self {
            HolonomyCocycle::Trivial(b) => AlgebraElement::zero(*b),
            HolonomyCocycle::Constant(g) => AlgebraElement::zero(g.backend()),
            HolonomyCocycle::So2Angle { winding, series } => {
                AlgebraElement::So2(TAU * *winding as f64 + series.derivative(u))
            }
            HolonomyCocycle::Su2Exp { x, y, z } => AlgebraElement::Su2(su2_exp_right_derivative(
                [x.eval(u), y.eval(u), z.eval(u)],
                [x.derivative(u), y.derivative(u), z.derivative(u)],
            )),
            HolonomyCocycle::Gauged { base, gauge, model } => {
                let su = model.forward(u);
                let a = gauge.eval(su);
                let b = base.eval(u);
                let c = gauge.eval(u);
                let t1 = gauge.right_log_derivative(su).scale(model.forward_derivative(u));
                let t2 = a.ad(&base.right_log_derivative(u));
                let t3 = a.mul(&b).mul(&c.inv()).ad(&gauge.right_log_derivative(u));
                t1.add(&t2).sub(&t3)
            }
        }
    }

    /// Sampled `sup |hol' hol^{-1}|`.
    pub fn c1_norm(&self) -> f64 {
        (0..NORM_SAMPLES)
            .map(|i| self.right_log_derivative(i as f64 / NORM_SAMPLES as f64).norm())
            .fold(0.0, f64::max)
    }
}

/// Sequence of inverse branch indices `(i_1, ..., i_n)` realizing
/// `v^(n) = v_{i_n} o ... o v_{i_1}`, so that `sigma o v^(n) = v^(n-1)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct ConsistentPast {
    pub symbols: Vec<usize>,
}

impl ConsistentPast {
    pub fn new(symbols: Vec<usize>) -> Self {
        Self { symbols }
    }

    /// The constant past `(i, i, ..., i)`.
    pub fn constant(i: usize, depth: usize) -> Self {
        Self { symbols: vec![i; depth] }
    }

    pub fn depth(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_valid_for(&self, model: &ExpandingModel) -> bool {
        self.symbols.iter().all(|&i| i < model.branch_count())
    }

    /// First `n` symbols.
    pub fn truncated(&self, n: usize) -> Self {
        Self { symbols: self.symbols[..n.min(self.depth())].to_vec() }
    }

    /// `v^(n)(u)`.
    pub fn apply(&self, model: &ExpandingModel, u: f64) -> f64 {
        self.symbols.iter().fold(u, |x, &i| model.inverse(i, x))
    }

    /// `[v^(1)(u), ..., v^(n)(u)]`.
    pub fn orbit(&self, model: &ExpandingModel, u: f64) -> Vec<f64> {
        let mut x = u;
        self.symbols
            .iter()
            .map(|&i| {
                x = model.inverse(i, x);
                x
            })
            .collect()
    }

    /// `(v^(n))'(u)`.
    pub fn derivative(&self, model: &ExpandingModel, u: f64) -> f64 {
        let mut x = u;
        let mut d = 1.0;
        for &i in &self.symbols {
            d *= model.inverse_derivative(i, x);
            x = model.inverse(i, x);
        }
        d
    }
}

/// All pasts of the given depth in lexicographic order.
pub fn enumerate_pasts(model: &ExpandingModel, depth: usize) -> Result<Vec<ConsistentPast>> {
    let k = model.branch_count();
    let count = (k as u128).checked_pow(depth as u32).filter(|&c| c <= MAX_PASTS as u128).ok_or_else(|| {
        Error::Precondition(format!("{k}^{depth} pasts exceed the capacity limit {MAX_PASTS}"))
    })? as usize;
    Ok((0..count)
        .map(|mut idx| {
            let mut symbols = vec![0; depth];
            for s in symbols.iter_mut().rev() {
                *s = idx % k;
                idx /= k;
            }
            ConsistentPast { symbols }
        })
        .collect())
}

/// `Hol^(n)(v^(n) u) = hol(v^(1) u) hol(v^(2) u) ... hol(v^(n) u)`.
pub fn holonomy_product(
    model: &ExpandingModel,
    cocycle: &HolonomyCocycle,
    past: &ConsistentPast,
    u: f64,
) -> GroupElement {
    past.orbit(model, u)
        .iter()
        .fold(GroupElement::identity(cocycle.backend()), |acc, &x| acc.mul(&cocycle.eval(x)))
}

/// `tau^(n)(v^(n) u) = sum_j tau(v^(j) u)`.
pub fn birkhoff_roof(model: &ExpandingModel, roof: &RoofFunction, past: &ConsistentPast, u: f64) -> f64 {
    past.orbit(model, u).iter().map(|&x| roof.eval(x)).sum()
}

/// Point `(u, s, g)` of the suspension with `0 <= s < tau(u)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuspensionPoint {
    pub u: f64,
    pub s: f64,
    pub g: GroupElement,
}

/// Flow for time `t >= 0`; each roof crossing maps `(u, tau(u), g)` to
/// `(sigma u, 0, hol(u) g)`.
pub fn flow(
    p: &SuspensionPoint,
    t: f64,
    model: &ExpandingModel,
    roof: &RoofFunction,
    cocycle: &HolonomyCocycle,
) -> SuspensionPoint {
    assert!(t >= 0.0, "flow time must be nonnegative");
    let mut q = *p;
    let mut remaining = t;
    loop {
        let tau = roof.eval(q.u);
        if q.s + remaining < tau {
            q.s += remaining;
            return q;
        }
        remaining -= tau - q.s;
        q.g = cocycle.eval(q.u).mul(&q.g);
        q.u = model.forward(q.u);
        q.s = 0.0;
    }
}
