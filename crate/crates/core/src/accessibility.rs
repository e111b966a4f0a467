//! Symbolic unstable holonomies along consistent pasts, their infinitesimal
//! versions, the transitivity algebra spanned by differences over pasts, and
//! non-integrability certificates for the twisted operators.

use crate::compact_group::{AlgebraElement, Backend, GroupElement, Irrep};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::symbolic_model::{enumerate_pasts, holonomy_product, ConsistentPast, ExpandingModel, HolonomyCocycle};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

/// Relative singular-value threshold for the rank of a difference set.
pub const RANK_TOL: f64 = 1e-7;
/// Absolute floor, relative to `1 + max |X|`, below which nothing counts.
pub const RANK_FLOOR: f64 = 1e-10;

/// `Hol^(n)(v^(n) y) Hol^(n)(v^(n) x)^{-1}` for a fixed past.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymbolicHolonomy {
    pub x: f64,
    pub y: f64,
    pub depth: usize,
    #[serde(skip)]
    pub value: GroupElement,
    /// Bound on the distance to the infinite-depth limit.
    pub error_bound: f64,
}

/// `|Hol|_{C^1} kappa^{-n} / (f (kappa - 1))`: tail of the holonomy product
/// beyond depth `n` per unit base distance.
pub fn truncation_bound(model: &ExpandingModel, cocycle: &HolonomyCocycle, n: usize) -> f64 {
    let eb = model.expansion_bounds();
    cocycle.c1_norm() * eb.kappa.powi(-(n as i32)) / (eb.f * (eb.kappa - 1.0))
}

pub fn symbolic_holonomy(
    model: &ExpandingModel,
    cocycle: &HolonomyCocycle,
    past: &ConsistentPast,
    x: f64,
    y: f64,
) -> Result<SymbolicHolonomy> {
    let (x, y) = (x.rem_euclid(1.0), y.rem_euclid(1.0));
    if model.branch_of(x) != model.branch_of(y) {
        return Err(Error::Domain(format!("{x} and {y} lie in different branch cylinders")));
    }
    if !past.is_valid_for(model) {
        return Err(Error::Precondition("past uses symbols outside the branch range".into()));
    }
    let hy = holonomy_product(model, cocycle, past, y);
    let hx = holonomy_product(model, cocycle, past, x);
    Ok(SymbolicHolonomy {
        x,
        y,
        depth: past.depth(),
        value: hy.mul(&hx.inv()),
        error_bound: Grid::circle_distance(x, y) * truncation_bound(model, cocycle, past.depth()),
    })
}

/// Right logarithmic derivative of `u -> Hol^(n)(v^(n) u) Hol^(n)(v^(n) x)^{-1}`
/// at `u = x`, in the positive direction of the circle.
pub fn infinitesimal_holonomy(
    model: &ExpandingModel,
    cocycle: &HolonomyCocycle,
    past: &ConsistentPast,
    x: f64,
) -> AlgebraElement {
    // d(AB)(AB)^{-1} = dA A^{-1} + Ad_A(dB B^{-1})
    let mut prefix = GroupElement::identity(cocycle.backend());
    let mut out = AlgebraElement::zero(cocycle.backend());
    let mut u = x;
    let mut chain = 1.0;
    for &i in &past.symbols {
        chain *= model.inverse_derivative(i, u);
        u = model.inverse(i, u);
        out = out.add(&prefix.ad(&cocycle.right_log_derivative(u)).scale(chain));
        prefix = prefix.mul(&cocycle.eval(u));
    }
    out
}

/// `past_budget` pasts of length `depth`: distinct prefixes on the fewest
/// leading symbols, padded with zeros.
pub fn candidate_pasts(model: &ExpandingModel, depth: usize, past_budget: usize) -> Result<Vec<ConsistentPast>> {
    if past_budget < 2 {
        return Err(Error::Precondition("need at least two pasts".into()));
    }
    let k = model.branch_count();
    let mut len = 0;
    while k.pow(len as u32) < past_budget {
        len += 1;
    }
    if len > depth {
        return Err(Error::Precondition(format!("{past_budget} pasts need prefixes longer than depth {depth}")));
    }
    Ok(enumerate_pasts(model, len)?
        .into_iter()
        .take(past_budget)
        .map(|p| {
            let mut s = p.symbols;
            s.resize(depth, 0);
            ConsistentPast::new(s)
        })
        .collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct TransitivityGroup {
    pub x: f64,
    /// Differences `X_{v_a}(x) - X_{v_b}(x)` over pairs `a < b`.
    #[serde(skip)]
    pub generators: Vec<AlgebraElement>,
    /// Orthonormal basis of the span, in algebra coordinates.
    pub span_basis: Vec<Vec<f64>>,
    pub dimension: usize,
    pub singular_values: Vec<f64>,
}

impl TransitivityGroup {
    pub fn is_full(&self, backend: Backend) -> bool {
        self.dimension == backend.algebra_dim()
    }
}

fn span_of(x: f64, backend: Backend, values: &[AlgebraElement]) -> TransitivityGroup {
    let mut generators = Vec::new();
    for a in 0..values.len() {
        for b in a + 1..values.len() {
            generators.push(values[a].sub(&values[b]));
        }
    }
    let dim = backend.algebra_dim();
    let scale = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let m = DMatrix::from_fn(dim, generators.len().max(1), |r, c| generators.get(c).map_or(0.0, |g| g.coords()[r]));
    let svd = m.svd(true, false);
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let singular_values: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let top = singular_values.first().copied().unwrap_or(0.0);
    let cut = (RANK_TOL * top).max(RANK_FLOOR * (1.0 + scale));
    let u = svd.u.expect("left singular vectors requested");
    let span_basis: Vec<Vec<f64>> =
        order.iter().filter(|&&i| svd.singular_values[i] > cut).map(|&i| u.column(i).iter().copied().collect()).collect();
    TransitivityGroup { x, generators, dimension: span_basis.len(), span_basis, singular_values }
}

pub fn transitivity_group(
    model: &ExpandingModel,
    cocycle: &HolonomyCocycle,
    x: f64,
    depth: usize,
    past_budget: usize,
) -> Result<TransitivityGroup> {
    let pasts = candidate_pasts(model, depth, past_budget)?;
    let values: Vec<AlgebraElement> = pasts.iter().map(|p| infinitesimal_holonomy(model, cocycle, p, x)).collect();
    Ok(span_of(x, cocycle.backend(), &values))
}

/// Points of Fibonacci-lattice type on the unit 2-sphere.
pub fn sphere_mesh(n: usize) -> Vec<[f64; 3]> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|k| {
            let z = 1.0 - (2 * k + 1) as f64 / n as f64;
            let r = (1.0 - z * z).sqrt();
            let a = golden * k as f64;
            [r * a.cos(), r * a.sin(), z]
        })
        .collect()
}

/// Unit vectors in the representation space used to minimize over directions:
/// orbit of the first basis vector under rotations taking the pole to each
/// mesh point, plus the standard basis.
pub fn representation_mesh(irrep: Irrep, n: usize) -> Vec<DVector<Complex64>> {
    let d = irrep.dim();
    let basis = (0..d).map(|i| DVector::from_fn(d, |r, _| Complex64::new(if r == i { 1.0 } else { 0.0 }, 0.0)));
    if d == 1 {
        return basis.collect();
    }
    let e0 = DVector::from_fn(d, |r, _| Complex64::new(if r == 0 { 1.0 } else { 0.0 }, 0.0));
    let mut out: Vec<DVector<Complex64>> = sphere_mesh(n)
        .into_iter()
        .map(|p| {
            // rotation about z x p by the polar angle
            let axis = [-p[1], p[0], 0.0];
            let s = (axis[0] * axis[0] + axis[1] * axis[1]).sqrt();
            let theta = p[2].clamp(-1.0, 1.0).acos();
            let v = if s < 1e-14 { [theta, 0.0, 0.0] } else { [axis[0] / s * theta, axis[1] / s * theta, 0.0] };
            irrep.matrix(&GroupElement::exp(&AlgebraElement::Su2(v))) * &e0
        })
        .collect();
    out.extend(basis);
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct NliCertificate {
    /// Minimum over the region of the per-point constant.
    pub epsilon_measured: f64,
    /// `min_phi max_pairs |d rho(Delta X) phi| / |rho|` at each grid node (0 outside the region).
    pub per_point: Vec<f64>,
    /// Rigorous lower bound `max_pairs sigma_min(d rho(Delta X)) / |rho|` per node.
    pub singular_floor: Vec<f64>,
    /// Nodes with per-point constant at least the requested `epsilon`.
    pub mask: Vec<bool>,
    pub requested_epsilon: f64,
    /// Fraction of region nodes in the mask.
    pub fraction: f64,
    /// Largest change of the per-point constant when the direction mesh is doubled.
    pub mesh_refinement_change: f64,
    pub pass: bool,
}

/// Options for [`nli_certificate`].
#[derive(Debug, Clone, Copy)]
pub struct NliOptions {
    pub depth: usize,
    pub past_budget: usize,
    pub mesh_points: usize,
    /// Number of evenly spaced region nodes checked for full dimension.
    pub centers: usize,
    pub requested_epsilon: f64,
}

impl Default for NliOptions {
    fn default() -> Self {
        Self { depth: 20, past_budget: 16, mesh_points: 80, centers: 8, requested_epsilon: 0.0 }
    }
}

fn point_constant(irrep: Irrep, diffs: &[DMatrix<Complex64>], mesh: &[DVector<Complex64>]) -> f64 {
    mesh.iter()
        .map(|phi| diffs.iter().map(|m| (m * phi).norm()).fold(0.0, f64::max) / phi.norm())
        .fold(f64::INFINITY, f64::min)
        / irrep.rep_norm()
}

pub fn nli_certificate(
    model: &ExpandingModel,
    cocycle: &HolonomyCocycle,
    irrep: Irrep,
    grid: Grid,
    region: &[bool],
    opts: NliOptions,
) -> Result<NliCertificate> {
    if region.len() != grid.len() {
        return Err(Error::Precondition("region mask has the wrong length".into()));
    }
    if irrep.backend() != cocycle.backend() {
        return Err(Error::Precondition("irrep and cocycle live in different groups".into()));
    }
    if irrep.is_trivial() {
        return Err(Error::Precondition("the trivial representation has no derived action".into()));
    }
    let idx: Vec<usize> = (0..grid.len()).filter(|&i| region[i]).collect();
    if idx.is_empty() {
        return Err(Error::Precondition("empty region".into()));
    }
    let step = (idx.len() / opts.centers.max(1)).max(1);
    let degenerate: Vec<f64> = idx
        .iter()
        .step_by(step)
        .map(|&i| grid.node(i))
        .filter(|&x| !transitivity_group(model, cocycle, x, opts.depth, opts.past_budget).map(|t| t.is_full(cocycle.backend())).unwrap_or(false))
        .collect();
    if !degenerate.is_empty() {
        return Err(Error::Refused {
            reason: format!("transitivity algebra is not full at {} region centers", degenerate.len()),
            locus: degenerate,
        });
    }
    let pasts = candidate_pasts(model, opts.depth, opts.past_budget)?;
    let mesh = representation_mesh(irrep, opts.mesh_points);
    let fine = representation_mesh(irrep, 2 * opts.mesh_points);
    let rows: Vec<(f64, f64, f64)> = idx
        .par_iter()
        .map(|&i| {
            let x = grid.node(i);
            let values: Vec<AlgebraElement> = pasts.iter().map(|p| infinitesimal_holonomy(model, cocycle, p, x)).collect();
            let mut diffs = Vec::new();
            for a in 0..values.len() {
                for b in a + 1..values.len() {
                    diffs.push(irrep.derived(&values[a].sub(&values[b])));
                }
            }
            let coarse = point_constant(irrep, &diffs, &mesh);
            let refined = point_constant(irrep, &diffs, &fine);
            let floor = diffs.iter().map(|m| m.singular_values().min()).fold(0.0, f64::max) / irrep.rep_norm();
            (coarse, floor, (coarse - refined).abs())
        })
        .collect();
    let mut per_point = vec![0.0; grid.len()];
    let mut singular_floor = vec![0.0; grid.len()];
    let mut mask = vec![false; grid.len()];
    let mut change = 0.0f64;
    for (&i, &(c, f, d)) in idx.iter().zip(&rows) {
        per_point[i] = c;
        singular_floor[i] = f;
        mask[i] = c > opts.requested_epsilon;
        change = change.max(d);
    }
    let epsilon_measured = rows.iter().map(|r| r.0).fold(f64::INFINITY, f64::min);
    let fraction = idx.iter().filter(|&&i| mask[i]).count() as f64 / idx.len() as f64;
    Ok(NliCertificate {
        epsilon_measured,
        per_point,
        singular_floor,
        mask,
        requested_epsilon: opts.requested_epsilon,
        fraction,
        mesh_refinement_change: change,
        pass: fraction > 0.0,
    })
}

/// Geodesic distance between subspaces of equal dimension given by
/// orthonormal bases; infinite when the dimensions differ.
pub fn grassmann_distance(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    if a.is_empty() {
        return 0.0;
    }
    // sines of the principal angles are the singular values of (I - P_b) A;
    // acos of cosines near 1 would lose half the digits
    let n = a[0].len();
    let resid = DMatrix::from_fn(n, a.len(), |r, j| {
        let proj: f64 = b.iter().map(|bk| bk.iter().zip(&a[j]).map(|(p, q)| p * q).sum::<f64>() * bk[r]).sum();
        a[j][r] - proj
    });
    resid.singular_values().iter().map(|s| s.clamp(0.0, 1.0).asin().powi(2)).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, Serialize)]
pub struct GaugePoint {
    pub x: f64,
    pub dimension_before: usize,
    pub dimension_after: usize,
    /// Distance between `Ad_{g(x)}` of the original span and the gauged span.
    pub distance: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GaugeReport {
    pub points: Vec<GaugePoint>,
    pub max_distance: f64,
}

/// Gauge-transform `cocycle` by `gauge` and compare transitivity algebras.
///
/// At finite depth the gauged holonomy keeps a boundary term of size
/// `|g|_{C^1} kappa^{-depth}`, so `depth` must push it below the rank cutoff.
pub fn gauge_transform(
    model: &ExpandingModel,
    cocycle: &HolonomyCocycle,
    gauge: &HolonomyCocycle,
    points: &[f64],
    depth: usize,
    past_budget: usize,
) -> Result<(HolonomyCocycle, GaugeReport)> {
    let gauged = cocycle.gauge_transform(gauge, model)?;
    let backend = cocycle.backend();
    let mut out = Vec::new();
    for &x in points {
        let before = transitivity_group(model, cocycle, x, depth, past_budget)?;
        let after = transitivity_group(model, &gauged, x, depth, past_budget)?;
        let g = gauge.eval(x);
        let moved: Vec<AlgebraElement> =
            before.span_basis.iter().map(|c| g.ad(&AlgebraElement::from_coords(backend, c))).collect();
        let moved = span_of(x, backend, &{
            // rebuild an orthonormal basis through the same rank routine
            let mut v = vec![AlgebraElement::zero(backend)];
            v.extend(moved);
            v
        });
        out.push(GaugePoint {
            x,
            dimension_before: before.dimension,
            dimension_after: after.dimension,
            distance: grassmann_distance(&moved.span_basis, &after.span_basis),
        });
    }
    let max_distance = out.iter().map(|p| p.distance).fold(0.0, f64::max);
    Ok((gauged, GaugeReport { points: out, max_distance }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier::TrigSeries;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::TAU;

    fn affine_angle() -> HolonomyCocycle {
        HolonomyCocycle::So2Angle { winding: 1, series: TrigSeries::default() }
    }

    #[test]
    fn holonomy_of_a_point_with_itself_is_trivial() {
        let m = ExpandingModel::Doubling;
        for c in [HolonomyCocycle::so2_benchmark(), HolonomyCocycle::su2_benchmark()] {
            for d in [1, 5, 20] {
                let h = symbolic_holonomy(&m, &c, &ConsistentPast::new(vec![1; d]), 0.37, 0.37).unwrap();
                assert!(h.value.distance(&GroupElement::identity(c.backend())) < 1e-14);
            }
        }
        let k = HolonomyCocycle::Constant(GroupElement::so2(0.4));
        let h = symbolic_holonomy(&m, &k, &ConsistentPast::new(vec![0, 1, 1]), 0.1, 0.4).unwrap();
        assert!(h.value.distance(&GroupElement::so2(0.0)) < 1e-14);
        assert!(matches!(symbolic_holonomy(&m, &k, &ConsistentPast::new(vec![0]), 0.2, 0.7), Err(Error::Domain(_))));
    }

    #[test]
    fn symbolic_holonomy_converges_geometrically() {
        let m = ExpandingModel::Doubling;
        let c = HolonomyCocycle::so2_benchmark();
        let at = |d| symbolic_holonomy(&m, &c, &ConsistentPast::constant(0, d), 0.2, 0.3).unwrap();
        let (h20, h40) = (at(20), at(40));
        assert!(h20.value.distance(&h40.value) <= 1e-5);
        assert!(h20.value.distance(&h40.value) <= h20.error_bound);
        // measured constant in d(n, 2n) <= C kappa^{-n}
        for n in [4, 8, 12, 16] {
            let d = at(n).value.distance(&at(2 * n).value);
            assert!(d * 2f64.powi(n as i32) <= 0.1 * TAU / 1.0, "n = {n}: {d}");
        }
    }

    fn fd_oracle(m: &ExpandingModel, c: &HolonomyCocycle, p: &ConsistentPast, x: f64) -> Vec<f64> {
        let h = 1e-5;
        let a = holonomy_product(m, c, p, x + h);
        let b = holonomy_product(m, c, p, x - h);
        a.mul(&b.inv()).log().unwrap().scale(0.5 / h).coords()
    }

    #[test]
    fn infinitesimal_holonomy_of_constants_and_affine_angles() {
        let m = ExpandingModel::Doubling;
        let k = HolonomyCocycle::Constant(GroupElement::so2(1.1));
        assert_eq!(infinitesimal_holonomy(&m, &k, &ConsistentPast::new(vec![0, 1]), 0.3).norm(), 0.0);
        for p in enumerate_pasts(&m, 4).unwrap() {
            let mut s = p.symbols.clone();
            s.resize(12, 1);
            let x = infinitesimal_holonomy(&m, &affine_angle(), &ConsistentPast::new(s), 0.41);
            assert!((x.norm() - TAU * (1.0 - 2f64.powi(-12))).abs() < 1e-12);
        }
    }

    #[test]
    fn infinitesimal_holonomy_matches_finite_differences() {
        let m = ExpandingModel::Doubling;
        for c in [HolonomyCocycle::so2_benchmark(), HolonomyCocycle::su2_benchmark()] {
            let p0 = ConsistentPast::constant(0, 20);
            let p1 = ConsistentPast::new(std::iter::once(1).chain(std::iter::repeat(0).take(19)).collect());
            let x0 = infinitesimal_holonomy(&m, &c, &p0, 0.2);
            let x1 = infinitesimal_holonomy(&m, &c, &p1, 0.2);
            assert!(x0.sub(&x1).norm() > 1e-3);
            for (p, x) in [(&p0, x0), (&p1, x1)] {
                let fd = fd_oracle(&m, &c, p, 0.2);
                let err = fd.iter().zip(x.coords()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                assert!(err < 1e-6, "{err:e}");
            }
        }
    }

    #[test]
    fn transitivity_dimensions() {
        let m = ExpandingModel::Doubling;
        let t = transitivity_group(&m, &HolonomyCocycle::Trivial(Backend::Su2), 0.2, 20, 64).unwrap();
        assert_eq!(t.dimension, 0);
        let t = transitivity_group(&m, &HolonomyCocycle::so2_benchmark(), 0.2, 20, 64).unwrap();
        assert_eq!(t.dimension, 1);
        let t = transitivity_group(&m, &HolonomyCocycle::su2_benchmark(), 0.2, 20, 64).unwrap();
        assert_eq!(t.dimension, 3, "{:?}", t.singular_values);
        for (i, a) in t.span_basis.iter().enumerate() {
            for (j, b) in t.span_basis.iter().enumerate() {
                let dot: f64 = a.iter().zip(b).map(|(p, q)| p * q).sum();
                assert!((dot - if i == j { 1.0 } else { 0.0 }).abs() < 1e-10);
            }
        }
        for x in [0.0, 0.13, 0.5, 0.77, 0.99] {
            assert_eq!(transitivity_group(&m, &affine_angle(), x, 20, 64).unwrap().dimension, 0);
        }
        assert!(transitivity_group(&m, &affine_angle(), 0.1, 20, 1).is_err());
    }

    #[test]
    fn nli_certificates() {
        let m = ExpandingModel::Doubling;
        let g = Grid::new(256).unwrap();
        let all = vec![true; 256];
        let opts = NliOptions::default();
        let refused = nli_certificate(&m, &HolonomyCocycle::Trivial(Backend::So2), Irrep::So2 { n: 1 }, g, &all, opts);
        assert!(matches!(refused, Err(Error::Refused { .. })));
        let so2 = nli_certificate(&m, &HolonomyCocycle::so2_benchmark(), Irrep::So2 { n: 1 }, g, &all, opts).unwrap();
        assert!(so2.fraction >= 0.99);
        // abelian reduction: the constant is the largest |Delta X|, independent of n
        let so2b = nli_certificate(&m, &HolonomyCocycle::so2_benchmark(), Irrep::So2 { n: 3 }, g, &all, opts).unwrap();
        for i in 0..256 {
            assert!((so2.per_point[i] - so2b.per_point[i]).abs() < 1e-12);
        }
        let su2 = nli_certificate(&m, &HolonomyCocycle::su2_benchmark(), Irrep::Su2 { two_j: 1 }, g, &all, opts).unwrap();
        assert!(su2.fraction >= 0.95);
        assert!(su2.mesh_refinement_change < 1e-9, "{}", su2.mesh_refinement_change);
        for i in 0..256 {
            assert!(su2.singular_floor[i] <= su2.per_point[i] + 1e-12);
        }
    }

    #[test]
    fn spin_half_mesh_covers_all_directions() {
        // |d rho(X) phi| = |X| / 2 for every unit spinor
        let x = AlgebraElement::Su2([0.3, -1.2, 0.5]);
        let d = Irrep::Su2 { two_j: 1 }.derived(&x);
        for phi in representation_mesh(Irrep::Su2 { two_j: 1 }, 80) {
            assert!(((&d * &phi).norm() / phi.norm() - x.norm() / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn gauge_equivariance() {
        let m = ExpandingModel::Doubling;
        let pts = [0.1, 0.23, 0.45, 0.6, 0.81];
        let id = HolonomyCocycle::Trivial(Backend::Su2);
        let (same, rep) = gauge_transform(&m, &HolonomyCocycle::su2_benchmark(), &id, &pts, 40, 16).unwrap();
        assert!(rep.max_distance < 1e-9);
        assert!(same.eval(0.3).distance(&HolonomyCocycle::su2_benchmark().eval(0.3)) < 1e-14);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let su2_gauges = [
            HolonomyCocycle::Constant(GroupElement::haar_sample(Backend::Su2, &mut rng)),
            HolonomyCocycle::Su2Exp { x: TrigSeries::sine(0.1, 0.4), y: TrigSeries::default(), z: TrigSeries::cosine(0.0, 0.3) },
            HolonomyCocycle::Su2Exp { x: TrigSeries::default(), y: TrigSeries::cosine(0.5, 0.2), z: TrigSeries::sine(0.0, 0.6) },
        ];
        // a one-dimensional algebra makes the comparison nontrivial in SU(2)
        let line = HolonomyCocycle::Su2Exp { x: TrigSeries::sine(0.0, 0.8), y: TrigSeries::default(), z: TrigSeries::default() };
        for gauge in &su2_gauges {
            for c in [HolonomyCocycle::su2_benchmark(), line.clone()] {
                let (_, rep) = gauge_transform(&m, &c, gauge, &pts, 40, 16).unwrap();
                for p in &rep.points {
                    assert_eq!(p.dimension_before, p.dimension_after);
                }
                assert!(rep.max_distance <= 1e-6, "{rep:?}");
            }
        }
        let so2_gauge = HolonomyCocycle::So2Angle { winding: 1, series: TrigSeries::cosine(0.3, rng.random::<f64>()) };
        let (_, rep) = gauge_transform(&m, &HolonomyCocycle::so2_benchmark(), &so2_gauge, &pts, 40, 16).unwrap();
        assert!(rep.points.iter().all(|p| p.dimension_before == 1 && p.dimension_after == 1));
        assert!(rep.max_distance < 1e-9);
    }
}
