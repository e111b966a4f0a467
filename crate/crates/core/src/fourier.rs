//! Real trigonometric polynomials on the unit circle `[0, 1)`.

use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

/// `f(u) = c0 + sum_k (a_k cos(2 pi k u) + b_k sin(2 pi k u))`, `k = 1, 2, ...`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct TrigSeries {
    pub c0: f64,
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
}

/// Number of equispaced samples used for sup-norm estimates.
pub const NORM_SAMPLES: usize = 8192;

impl TrigSeries {
    pub fn constant(c0: f64) -> Self {
        Self { c0, cos: Vec::new(), sin: Vec::new() }
    }

    pub fn new(c0: f64, cos: Vec<f64>, sin: Vec<f64>) -> Self {
        Self { c0, cos, sin }
    }

    /// `c0 + a cos(2 pi u)`.
    pub fn cosine(c0: f64, a: f64) -> Self {
        Self { c0, cos: vec![a], sin: Vec::new() }
    }

    /// `c0 + b sin(2 pi u)`.
    pub fn sine(c0: f64, b: f64) -> Self {
        Self { c0, cos: Vec::new(), sin: vec![b] }
    }

    pub fn bandwidth(&self) -> usize {
        self.cos.len().max(self.sin.len())
    }

    pub fn is_constant(&self) -> bool {
        self.cos.iter().chain(&self.sin).all(|&c| c == 0.0)
    }

    pub fn eval(&self, u: f64) -> f64 {
        let mut s = self.c0;
        for (k, a) in self.cos.iter().enumerate() {
            s += a * (TAU * (k + 1) as f64 * u).cos();
        }
        for (k, b) in self.sin.iter().enumerate() {
            s += b * (TAU * (k + 1) as f64 * u).sin();
        }
        s
    }

    pub fn derivative(&self, u: f64) -> f64 {
        let mut s = 0.0;
        for (k, a) in self.cos.iter().enumerate() {
            let w = TAU * (k + 1) as f64;
            s -= a * w * (w * u).sin();
        }
        for (k, b) in self.sin.iter().enumerate() {
            let w = TAU * (k + 1) as f64;
            s += b * w * (w * u).cos();
        }
        s
    }

    pub fn second_derivative(&self, u: f64) -> f64 {
        let mut s = 0.0;
        for (k, a) in self.cos.iter().enumerate() {
            let w = TAU * (k + 1) as f64;
            s -= a * w * w * (w * u).cos();
        }
        for (k, b) in self.sin.iter().enumerate() {
            let w = TAU * (k + 1) as f64;
            s -= b * w * w * (w * u).sin();
        }
        s
    }

    /// The same series scaled by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            c0: self.c0 * s,
            cos: self.cos.iter().map(|c| c * s).collect(),
            sin: self.sin.iter().map(|c| c * s).collect(),
        }
    }

    fn sampled_sup(&self, f: impl Fn(&Self, f64) -> f64) -> f64 {
        (0..NORM_SAMPLES)
            .map(|i| f(self, i as f64 / NORM_SAMPLES as f64).abs())
            .fold(0.0, f64::max)
    }

    pub fn sup_norm(&self) -> f64 {
        self.sampled_sup(Self::eval)
    }

    pub fn min_value(&self) -> f64 {
        (0..NORM_SAMPLES)
            .map(|i| self.eval(i as f64 / NORM_SAMPLES as f64))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        (0..NORM_SAMPLES)
            .map(|i| self.eval(i as f64 / NORM_SAMPLES as f64))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn derivative_sup(&self) -> f64 {
        self.sampled_sup(Self::derivative)
    }

    /// `sup |f| + sup |f'|`.
    pub fn c1_norm(&self) -> f64 {
        self.sup_norm() + self.derivative_sup()
    }

    /// Mean over the circle (Lebesgue).
    pub fn mean(&self) -> f64 {
        self.c0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivative_matches_central_difference() {
        let f = TrigSeries::new(0.3, vec![0.5, -0.2], vec![0.1, 0.7]);
        let h = 1e-6;
        for i in 0..17 {
            let u = i as f64 / 17.0;
            let fd = (f.eval(u + h) - f.eval(u - h)) / (2.0 * h);
            assert!((fd - f.derivative(u)).abs() < 1e-6);
            let fd2 = (f.derivative(u + h) - f.derivative(u - h)) / (2.0 * h);
            assert!((fd2 - f.second_derivative(u)).abs() < 1e-4);
        }
    }

    #[test]
    fn c1_norm_of_cosine() {
        let f = TrigSeries::cosine(1.0, 0.3);
        assert!((f.c1_norm() - (1.3 + 0.3 * TAU)).abs() < 1e-6);
        assert!((f.min_value() - 0.7).abs() < 1e-12);
    }
}
