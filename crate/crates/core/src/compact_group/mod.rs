//! Fiber groups SO(2) and SU(2): arithmetic, Lie algebra, Haar measure,
//! irreducible representations and Peter-Weyl analysis.

mod irrep;
mod peter_weyl;
mod quaternion;

pub use irrep::Irrep;
pub use peter_weyl::{
    ck_norm_sampled, fourier_decay_check, peter_weyl, reconstruct, FourierDecayReport,
    HaarQuadrature, IsotypicVector, PeterWeylResult,
};
pub use quaternion::Quat;

use crate::error::{Error, Result};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    So2,
    Su2,
}

impl Backend {
    /// Dimension of the Lie algebra.
    pub fn algebra_dim(self) -> usize {
        match self {
            Backend::So2 => 1,
            Backend::Su2 => 3,
        }
    }
}

/// Element of SO(2) (angle in `[0, 2 pi)`) or SU(2) (unit quaternion).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GroupElement {
    So2(f64),
    Su2(Quat),
}

/// Lie algebra element in the fixed orthonormal basis.
///
/// For su(2) the basis `e_1, e_2, e_3` is chosen so that `exp(t e_k)` has
/// period `4 pi`, the bracket is the cross product and `Ad_{exp X}` is the
/// rotation about `X` by angle `|X|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlgebraElement {
    So2(f64),
    Su2([f64; 3]),
}

fn reduce_angle(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Angle representative in `(-pi, pi]`.
pub fn centered_angle(a: f64) -> f64 {
    let r = reduce_angle(a);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

impl GroupElement {
    pub fn identity(backend: Backend) -> Self {
        match backend {
            Backend::So2 => GroupElement::So2(0.0),
            Backend::Su2 => GroupElement::Su2(Quat::IDENTITY),
        }
    }

    pub fn so2(angle: f64) -> Self {
        GroupElement::So2(reduce_angle(angle))
    }

    pub fn backend(&self) -> Backend {
        match self {
            GroupElement::So2(_) => Backend::So2,
            GroupElement::Su2(_) => Backend::Su2,
        }
    }

    pub fn mul(&self, other: &GroupElement) -> GroupElement {
        match (self, other) {
            (GroupElement::So2(a), GroupElement::So2(b)) => GroupElement::so2(a + b),
            (GroupElement::Su2(p), GroupElement::Su2(q)) => GroupElement::Su2(p.mul(q).normalized()),
            _ => panic!("group backend mismatch in mul"),
        }
    }

    pub fn inv(&self) -> GroupElement {
        match self {
            GroupElement::So2(a) => GroupElement::so2(-a),
            GroupElement::Su2(q) => GroupElement::Su2(q.conj()),
        }
    }

    pub fn exp(x: &AlgebraElement) -> GroupElement {
        match x {
            AlgebraElement::So2(t) => GroupElement::so2(*t),
            AlgebraElement::Su2(v) => GroupElement::Su2(Quat::exp(*v)),
        }
    }

    /// Inverse of `exp` on the injectivity domain.
    ///
    /// SO(2): rotation by `pi` is the cut locus. SU(2): `-1` is the cut locus.
    pub fn log(&self) -> Result<AlgebraElement> {
        match self {
            GroupElement::So2(a) => {
                let c = centered_angle(*a);
                if (c.abs() - PI).abs() < 1e-12 {
                    return Err(Error::Domain("log of SO(2) rotation by pi (cut locus)".into()));
                }
                Ok(AlgebraElement::So2(c))
            }
            GroupElement::Su2(q) => q.log().map(AlgebraElement::Su2).ok_or_else(|| {
                Error::Domain("log of -1 in SU(2) (cut locus)".into())
            }),
        }
    }

    /// `Ad_g X = d/dt g exp(tX) g^{-1}`.
    pub fn ad(&self, x: &AlgebraElement) -> AlgebraElement {
        match (self, x) {
            (GroupElement::So2(_), AlgebraElement::So2(t)) => AlgebraElement::So2(*t),
            (GroupElement::Su2(q), AlgebraElement::Su2(v)) => AlgebraElement::Su2(q.rotate(*v)),
            _ => panic!("group backend mismatch in ad"),
        }
    }

    /// Bi-invariant Riemannian distance for the algebra norm.
    pub fn distance(&self, other: &GroupElement) -> f64 {
        match (self, other) {
            (GroupElement::So2(a), GroupElement::So2(b)) => centered_angle(b - a).abs(),
            (GroupElement::Su2(p), GroupElement::Su2(q)) => {
                let d = p.conj().mul(q);
                let v = (d.x * d.x + d.y * d.y + d.z * d.z).sqrt();
                2.0 * v.atan2(d.w)
            }
            _ => panic!("group backend mismatch in distance"),
        }
    }

    /// Sample from the normalized Haar measure.
    pub fn haar_sample<R: Rng + ?Sized>(backend: Backend, rng: &mut R) -> GroupElement {
        match backend {
            Backend::So2 => GroupElement::so2(rng.random::<f64>() * TAU),
            Backend::Su2 => {
                let mut c = [0.0f64; 4];
                loop {
                    for ci in c.iter_mut() {
                        *ci = rng.sample(StandardNormal);
                    }
                    let n = c.iter().map(|v| v * v).sum::<f64>().sqrt();
                    if n > 1e-12 {
                        return GroupElement::Su2(Quat::new(c[0] / n, c[1] / n, c[2] / n, c[3] / n));
                    }
                }
            }
        }
    }

    pub fn as_su2(&self) -> Quat {
        match self {
            GroupElement::Su2(q) => *q,
            _ => panic!("expected an SU(2) element"),
        }
    }

    pub fn as_so2(&self) -> f64 {
        match self {
            GroupElement::So2(a) => *a,
            _ => panic!("expected an SO(2) element"),
        }
    }
}

impl AlgebraElement {
    pub fn zero(backend: Backend) -> Self {
        match backend {
            Backend::So2 => AlgebraElement::So2(0.0),
            Backend::Su2 => AlgebraElement::Su2([0.0; 3]),
        }
    }

    pub fn from_coords(backend: Backend, c: &[f64]) -> Self {
        match backend {
            Backend::So2 => AlgebraElement::So2(c[0]),
            Backend::Su2 => AlgebraElement::Su2([c[0], c[1], c[2]]),
        }
    }

    pub fn backend(&self) -> Backend {
        match self {
            AlgebraElement::So2(_) => Backend::So2,
            AlgebraElement::Su2(_) => Backend::Su2,
        }
    }

    pub fn coords(&self) -> Vec<f64> {
        match self {
            AlgebraElement::So2(t) => vec![*t],
            AlgebraElement::Su2(v) => v.to_vec(),
        }
    }

    pub fn norm(&self) -> f64 {
        match self {
            AlgebraElement::So2(t) => t.abs(),
            AlgebraElement::Su2(v) => (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt(),
        }
    }

    pub fn add(&self, o: &AlgebraElement) -> AlgebraElement {
        match (self, o) {
            (AlgebraElement::So2(a), AlgebraElement::So2(b)) => AlgebraElement::So2(a + b),
            (AlgebraElement::Su2(a), AlgebraElement::Su2(b)) => {
                AlgebraElement::Su2([a[0] + b[0], a[1] + b[1], a[2] + b[2]])
            }
            _ => panic!("algebra backend mismatch"),
        }
    }

    pub fn sub(&self, o: &AlgebraElement) -> AlgebraElement {
        self.add(&o.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> AlgebraElement {
        match self {
            AlgebraElement::So2(a) => AlgebraElement::So2(a * s),
            AlgebraElement::Su2(a) => AlgebraElement::Su2([a[0] * s, a[1] * s, a[2] * s]),
        }
    }

    pub fn bracket(&self, o: &AlgebraElement) -> AlgebraElement {
        match (self, o) {
            (AlgebraElement::So2(_), AlgebraElement::So2(_)) => AlgebraElement::So2(0.0),
            (AlgebraElement::Su2(a), AlgebraElement::Su2(b)) => AlgebraElement::Su2(cross(a, b)),
            _ => panic!("algebra backend mismatch"),
        }
    }
}

pub(crate) fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn exp_zero_is_identity() {
        assert_eq!(GroupElement::exp(&AlgebraElement::So2(0.0)), GroupElement::identity(Backend::So2));
        assert_eq!(GroupElement::exp(&AlgebraElement::Su2([0.0; 3])), GroupElement::identity(Backend::Su2));
    }

    #[test]
    fn so2_multiplication_adds_angles() {
        let g = GroupElement::so2(5.0).mul(&GroupElement::so2(2.0));
        assert!((g.as_so2() - (7.0 - TAU)).abs() < 1e-12);
        assert!(g.as_so2() >= 0.0 && g.as_so2() < TAU);
    }

    #[test]
    fn log_inverts_exp() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let v = [rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5];
            let x = AlgebraElement::Su2(v).scale(4.0);
            let back = GroupElement::exp(&x).log().unwrap();
            assert!(back.sub(&x).norm() < 1e-10);
            let g = GroupElement::haar_sample(Backend::Su2, &mut rng);
            let h = GroupElement::exp(&g.log().unwrap());
            assert!(g.distance(&h) < 1e-10);
        }
    }

    #[test]
    fn log_refuses_cut_locus() {
        assert!(GroupElement::so2(PI).log().is_err());
        let minus_one = GroupElement::Su2(Quat::new(-1.0, 0.0, 0.0, 0.0));
        assert!(matches!(minus_one.log(), Err(Error::Domain(_))));
    }

    #[test]
    fn ad_preserves_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..1000 {
            let g = GroupElement::haar_sample(Backend::Su2, &mut rng);
            let x = AlgebraElement::Su2([rng.random(), rng.random::<f64>() - 0.3, -rng.random::<f64>()]);
            assert!((g.ad(&x).norm() - x.norm()).abs() < 1e-10);
        }
    }

    #[test]
    fn ad_is_the_derivative_of_conjugation() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = GroupElement::haar_sample(Backend::Su2, &mut rng);
        let x = AlgebraElement::Su2([0.3, -0.5, 0.8]);
        let t = 1e-6;
        let c = g.mul(&GroupElement::exp(&x.scale(t))).mul(&g.inv());
        let approx = c.log().unwrap().scale(1.0 / t);
        assert!(approx.sub(&g.ad(&x)).norm() < 1e-6);
    }

    #[test]
    fn bracket_matches_group_commutator() {
        let x = AlgebraElement::Su2([0.2, 0.1, -0.4]);
        let y = AlgebraElement::Su2([-0.3, 0.6, 0.05]);
        let t = 1e-4;
        let gx = GroupElement::exp(&x.scale(t));
        let gy = GroupElement::exp(&y.scale(t));
        let comm = gx.mul(&gy).mul(&gx.inv()).mul(&gy.inv());
        let approx = comm.log().unwrap().scale(1.0 / (t * t));
        assert!(approx.sub(&x.bracket(&y)).norm() < 1e-3);
    }

    #[test]
    fn distance_is_norm_for_small_steps() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let g = GroupElement::haar_sample(Backend::Su2, &mut rng);
        let x = AlgebraElement::Su2([0.01, -0.02, 0.005]);
        let h = g.mul(&GroupElement::exp(&x));
        assert!((g.distance(&h) - x.norm()).abs() < 1e-12);
        let a = GroupElement::so2(6.2);
        let b = GroupElement::so2(0.1);
        assert!((a.distance(&b) - (TAU - 6.1)).abs() < 1e-12);
    }

    #[test]
    fn haar_samples_have_zero_mean_quaternion() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 20000;
        let mut m = [0.0; 4];
        for _ in 0..n {
            let q = GroupElement::haar_sample(Backend::Su2, &mut rng).as_su2();
            m[0] += q.w;
            m[1] += q.x;
            m[2] += q.y;
            m[3] += q.z;
        }
        for v in m {
            assert!((v / n as f64).abs() < 0.02);
        }
    }
}
