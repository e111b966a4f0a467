use super::{AlgebraElement, Backend, GroupElement, Quat};
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Irreducible unitary representation.
///
/// SO(2): the character `e^{i n theta}`. SU(2): spin `j = two_j / 2`, realized
/// on homogeneous polynomials of degree `2j` in two variables with the
/// orthonormal basis `x^{j+m} y^{j-m} / sqrt((j+m)! (j-m)!)`, ordered by
/// `m = j, j-1, ..., -j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Irrep {
    So2 { n: i32 },
    Su2 { two_j: u32 },
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

fn binomial(n: u32, k: u32) -> f64 {
    factorial(n) / (factorial(k) * factorial(n - k))
}

impl Irrep {
    pub fn trivial(backend: Backend) -> Self {
        match backend {
            Backend::So2 => Irrep::So2 { n: 0 },
            Backend::Su2 => Irrep::Su2 { two_j: 0 },
        }
    }

    pub fn backend(&self) -> Backend {
        match self {
            Irrep::So2 { .. } => Backend::So2,
            Irrep::Su2 { .. } => Backend::Su2,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Irrep::So2 { .. } => 1,
            Irrep::Su2 { two_j } => *two_j as usize + 1,
        }
    }

    pub fn is_trivial(&self) -> bool {
        matches!(self, Irrep::So2 { n: 0 } | Irrep::Su2 { two_j: 0 })
    }

    /// Characters `-max_n..=max_n`.
    pub fn so2_range(max_n: i32) -> Vec<Irrep> {
        (-max_n..=max_n).map(|n| Irrep::So2 { n }).collect()
    }

    /// Spins `0, 1/2, ..., max_two_j / 2`.
    pub fn su2_range(max_two_j: u32) -> Vec<Irrep> {
        (0..=max_two_j).map(|two_j| Irrep::Su2 { two_j }).collect()
    }

    /// `sup_{|X| = 1} |d rho(X)|_op`: `|n|` for SO(2), `j` for SU(2).
    pub fn rep_norm(&self) -> f64 {
        match self {
            Irrep::So2 { n } => n.unsigned_abs() as f64,
            Irrep::Su2 { two_j } => *two_j as f64 / 2.0,
        }
    }

    pub fn matrix(&self, g: &GroupElement) -> DMatrix<Complex64> {
        match (self, g) {
            (Irrep::So2 { n }, GroupElement::So2(a)) => {
                DMatrix::from_element(1, 1, Complex64::from_polar(1.0, *n as f64 * a))
            }
            (Irrep::Su2 { two_j }, GroupElement::Su2(q)) => spin_matrix(*two_j, q),
            _ => panic!("irrep and group element backends differ"),
        }
    }

    /// `d/dt rho(exp(tX))` at `t = 0`.
    pub fn derived(&self, x: &AlgebraElement) -> DMatrix<Complex64> {
        match (self, x) {
            (Irrep::So2 { n }, AlgebraElement::So2(t)) => {
                DMatrix::from_element(1, 1, Complex64::new(0.0, *n as f64 * t))
            }
            (Irrep::Su2 { two_j }, AlgebraElement::Su2(v)) => spin_derived(*two_j, v),
            _ => panic!("irrep and algebra element backends differ"),
        }
    }

    /// Mesh estimate of [`Irrep::rep_norm`]: largest singular value of
    /// `d rho(X)` over `directions` (normalized internally).
    pub fn rep_norm_on_mesh(&self, directions: &[AlgebraElement]) -> f64 {
        directions
            .iter()
            .filter(|x| x.norm() > 0.0)
            .map(|x| {
                let m = self.derived(&x.scale(1.0 / x.norm()));
                m.singular_values().max()
            })
            .fold(0.0, f64::max)
    }
}

/// `SU(2) -> SU(2, C)`: `i -> -i sigma_x`, `j -> -i sigma_y`, `k -> -i sigma_z`.
pub(crate) fn su2_matrix(q: &Quat) -> [[Complex64; 2]; 2] {
    [
        [Complex64::new(q.w, -q.z), Complex64::new(-q.y, -q.x)],
        [Complex64::new(q.y, -q.x), Complex64::new(q.w, q.z)],
    ]
}

fn spin_matrix(two_j: u32, q: &Quat) -> DMatrix<Complex64> {
    let d = two_j as usize + 1;
    let u = su2_matrix(q);
    let mut m = DMatrix::<Complex64>::zeros(d, d);
    // column a holds the image of x^p y^q, p = two_j - a, q = a
    for a in 0..d {
        let p = two_j - a as u32;
        let qd = a as u32;
        let norm_in = (factorial(p) * factorial(qd)).sqrt();
        for r in 0..=p {
            let c1 = binomial(p, r) * u[0][0].powu(r) * u[1][0].powu(p - r);
            for s in 0..=qd {
                let c2 = binomial(qd, s) * u[0][1].powu(s) * u[1][1].powu(qd - s);
                let p_out = r + s;
                let a_out = (two_j - p_out) as usize;
                let norm_out = (factorial(p_out) * factorial(two_j - p_out)).sqrt();
                m[(a_out, a)] += c1 * c2 * (norm_out / norm_in);
            }
        }
    }
    m
}

fn spin_derived(two_j: u32, v: &[f64; 3]) -> DMatrix<Complex64> {
    let d = two_j as usize + 1;
    // tangent of the 2x2 matrix: -(i/2) X . sigma
    let h = 0.5;
    let a11 = Complex64::new(0.0, -h * v[2]);
    let a22 = Complex64::new(0.0, h * v[2]);
    let a12 = Complex64::new(-h * v[1], -h * v[0]);
    let a21 = Complex64::new(h * v[1], -h * v[0]);
    let mut m = DMatrix::<Complex64>::zeros(d, d);
    for a in 0..d {
        let p = (two_j as usize - a) as f64;
        let q = a as f64;
        m[(a, a)] += a11 * p + a22 * q;
        if a + 1 < d {
            m[(a + 1, a)] += a21 * (p * (q + 1.0)).sqrt();
        }
        if a >= 1 {
            m[(a - 1, a)] += a12 * (q * (p + 1.0)).sqrt();
        }
    }
    m
}
