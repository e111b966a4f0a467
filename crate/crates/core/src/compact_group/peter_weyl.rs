use super::{AlgebraElement, Backend, GroupElement, Irrep, Quat};
use crate::quadrature::gauss_legendre;
use nalgebra::{DMatrix, Matrix3, SymmetricEigen};
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::{PI, TAU};

/// Nodes and weights of a Haar quadrature rule (weights sum to 1).
#[derive(Debug, Clone)]
pub struct HaarQuadrature {
    pub backend: Backend,
    pub nodes: Vec<GroupElement>,
    pub weights: Vec<f64>,
}

impl HaarQuadrature {
    /// Trapezoidal rule on `n` equispaced angles.
    pub fn so2(n: usize) -> Self {
        Self {
            backend: Backend::So2,
            nodes: (0..n).map(|k| GroupElement::so2(TAU * k as f64 / n as f64)).collect(),
            weights: vec![1.0 / n as f64; n],
        }
    }

    /// Product rule in Euler angles `g = exp(a e3) exp(b e2) exp(c e3)`.
    ///
    /// `a` and `c` run over `[0, 4 pi)` with the trapezoidal rule (the double
    /// cover keeps half-integer spins periodic), `cos b` uses Gauss-Legendre.
    /// A product of a spin `j` and a spin `j'` matrix entry is integrated exactly
    /// when `n_alpha, n_gamma > 2 (j + j')` and `n_beta > j + j'`.
    pub fn su2_euler(n_alpha: usize, n_beta: usize, n_gamma: usize) -> Self {
        let (xb, wb) = gauss_legendre(n_beta);
        let da = 2.0 * TAU / n_alpha as f64;
        let dc = 2.0 * TAU / n_gamma as f64;
        let norm = 1.0 / (32.0 * PI * PI);
        let mut nodes = Vec::with_capacity(n_alpha * n_beta * n_gamma);
        let mut weights = Vec::with_capacity(nodes.capacity());
        for ia in 0..n_alpha {
            let qa = Quat::exp([0.0, 0.0, da * ia as f64]);
            for (xi, wi) in xb.iter().zip(&wb) {
                let qb = Quat::exp([0.0, xi.acos(), 0.0]);
                let qab = qa.mul(&qb);
                for ic in 0..n_gamma {
                    let qc = Quat::exp([0.0, 0.0, dc * ic as f64]);
                    nodes.push(GroupElement::Su2(qab.mul(&qc).normalized()));
                    weights.push(da * dc * wi * norm);
                }
            }
        }
        Self { backend: Backend::Su2, nodes, weights }
    }

    pub fn integrate(&self, f: impl Fn(&GroupElement) -> Complex64) -> Complex64 {
        self.nodes.iter().zip(&self.weights).map(|(g, w)| f(g) * *w).sum()
    }
}

/// The `rho`-isotypic component of a function on the group.
///
/// `coeffs[(a, b)] = sqrt(d) * integral of f(g) conj(rho(g)[a, b])`, so the
/// Frobenius norm of `coeffs` is the `L^2(G)` norm of the component.
#[derive(Debug, Clone)]
pub struct IsotypicVector {
    pub irrep: Irrep,
    pub coeffs: DMatrix<Complex64>,
}

impl IsotypicVector {
    pub fn norm(&self) -> f64 {
        self.coeffs.norm()
    }

    /// Value of the component at `g`.
    pub fn eval(&self, g: &GroupElement) -> Complex64 {
        let m = self.irrep.matrix(g);
        let d = self.irrep.dim() as f64;
        m.iter().zip(self.coeffs.iter()).map(|(a, c)| a * c).sum::<Complex64>() * d.sqrt()
    }
}

#[derive(Debug, Clone)]
pub struct PeterWeylResult {
    pub components: Vec<IsotypicVector>,
    /// `L^2` norm squared of the input under the quadrature.
    pub norm_sq: f64,
    /// `norm_sq - sum of component norms squared`.
    pub residual: f64,
    pub truncation_warning: Option<String>,
}

/// Project `f` onto the isotypic components listed in `irreps`.
pub fn peter_weyl(
    f: impl Fn(&GroupElement) -> Complex64,
    quad: &HaarQuadrature,
    irreps: &[Irrep],
    residual_tol: f64,
) -> PeterWeylResult {
    let values: Vec<Complex64> = quad.nodes.iter().map(&f).collect();
    let norm_sq: f64 = values.iter().zip(&quad.weights).map(|(v, w)| v.norm_sqr() * w).sum();
    let mut components = Vec::with_capacity(irreps.len());
    for rho in irreps {
        let d = rho.dim();
        let mut c = DMatrix::<Complex64>::zeros(d, d);
        for ((g, v), w) in quad.nodes.iter().zip(&values).zip(&quad.weights) {
            let m = rho.matrix(g);
            for (ci, mi) in c.iter_mut().zip(m.iter()) {
                *ci += v * mi.conj() * *w;
            }
        }
        c *= Complex64::new((d as f64).sqrt(), 0.0);
        components.push(IsotypicVector { irrep: *rho, coeffs: c });
    }
    let captured: f64 = components.iter().map(|c| c.norm().powi(2)).sum();
    let residual = norm_sq - captured;
    let truncation_warning = (residual > residual_tol * norm_sq.max(1e-300)).then(|| {
        format!("cutoff misses {residual:.3e} of {norm_sq:.3e} in squared L2 norm")
    });
    PeterWeylResult { components, norm_sq, residual, truncation_warning }
}

/// Sum of the components evaluated at `g`.
pub fn reconstruct(components: &[IsotypicVector], g: &GroupElement) -> Complex64 {
    components.iter().map(|c| c.eval(g)).sum()
}

/// `sup |f| + sup_{|X|=1} |D_X f| + sup_{|X|=1} |D_X^2 f|` (up to order `k <= 2`)
/// over `points`, with derivatives along `t -> g exp(tX)` by central differences.
pub fn ck_norm_sampled(f: &dyn Fn(&GroupElement) -> f64, points: &[GroupElement], k: usize) -> f64 {
    assert!(k <= 2, "orders above 2 are not supported");
    let h = 1e-4;
    let mut sup = [0.0f64; 3];
    for g in points {
        let backend = g.backend();
        let dim = backend.algebra_dim();
        let at = |s: &[f64]| f(&g.mul(&GroupElement::exp(&AlgebraElement::from_coords(backend, s))));
        let f0 = f(g);
        sup[0] = sup[0].max(f0.abs());
        if k == 0 {
            continue;
        }
        let mut grad = [0.0; 3];
        let mut hess = Matrix3::<f64>::zeros();
        for a in 0..dim {
            let mut e = [0.0; 3];
            e[a] = h;
            let fp = at(&e);
            e[a] = -h;
            let fm = at(&e);
            grad[a] = (fp - fm) / (2.0 * h);
            hess[(a, a)] = (fp - 2.0 * f0 + fm) / (h * h);
        }
        if k == 2 {
            for a in 0..dim {
                for b in (a + 1)..dim {
                    let mut e = [0.0; 3];
                    let mut val = 0.0;
                    for (sa, sb, sign) in [(1.0, 1.0, 1.0), (1.0, -1.0, -1.0), (-1.0, 1.0, -1.0), (-1.0, -1.0, 1.0)] {
                        e[a] = sa * h;
                        e[b] = sb * h;
                        val += sign * at(&e);
                    }
                    let m = val / (4.0 * h * h);
                    hess[(a, b)] = m;
                    hess[(b, a)] = m;
                }
            }
        }
        sup[1] = sup[1].max(grad.iter().map(|v| v * v).sum::<f64>().sqrt());
        if k == 2 {
            let top = if dim == 1 {
                hess[(0, 0)].abs()
            } else {
                SymmetricEigen::new(hess).eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()))
            };
            sup[2] = sup[2].max(top);
        }
    }
    sup[..=k].iter().sum()
}

#[derive(Debug, Clone, Serialize)]
pub struct FourierDecayReport {
    pub order: usize,
    pub ck_norm: f64,
    /// `(irrep label, |rho|^n |f^rho|_{L^2} / |f|_{C^n})` for nontrivial irreps.
    pub ratios: Vec<(String, f64)>,
    pub max_ratio: f64,
}

/// Ratios `|rho|^n |f^rho| / |f|_{C^n}` over the nontrivial irreps in the list.
pub fn fourier_decay_check(
    f: &dyn Fn(&GroupElement) -> f64,
    quad: &HaarQuadrature,
    irreps: &[Irrep],
    order: usize,
) -> FourierDecayReport {
    let ck = ck_norm_sampled(f, &quad.nodes, order);
    let pw = peter_weyl(|g| Complex64::new(f(g), 0.0), quad, irreps, f64::INFINITY);
    let ratios: Vec<(String, f64)> = pw
        .components
        .iter()
        .filter(|c| !c.irrep.is_trivial())
        .map(|c| {
            let label = match c.irrep {
                Irrep::So2 { n } => format!("n={n}"),
                Irrep::Su2 { two_j } => format!("j={}", two_j as f64 / 2.0),
            };
            (label, c.irrep.rep_norm().powi(order as i32) * c.norm() / ck)
        })
        .collect();
    let max_ratio = ratios.iter().map(|r| r.1).fold(0.0, f64::max);
    FourierDecayReport { order, ck_norm: ck, ratios, max_ratio }
}
