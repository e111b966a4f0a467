//! Uniform periodic grids on `[0, 1)` and four point Lagrange interpolation.

use crate::error::{Error, Result};

/// `n` equispaced nodes `u_i = i / n` on the circle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grid {
    n: usize,
}

impl Grid {
    pub fn new(n: usize) -> Result<Self> {
        if n < 8 {
            return Err(Error::Precondition(format!("grid needs at least 8 nodes, got {n}")));
        }
        Ok(Self { n })
    }

    /// `2^m` nodes.
    pub fn power_of_two(m: u32) -> Result<Self> {
        Self::new(1usize << m)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        i as f64 / self.n as f64
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |i| self.node(i))
    }

    /// Cubic Lagrange stencil at `x`: node indices and weights.
    ///
    /// Exact for cubic polynomials in the local coordinate, error `O(h^4)`
    /// for smooth periodic data.
    pub fn stencil(&self, x: f64) -> Stencil {
        let n = self.n as f64;
        let s = x.rem_euclid(1.0) * n;
        let base = s.floor();
        let t = s - base;
        let i0 = base as i64;
        let n_i = self.n as i64;
        let idx = |o: i64| ((i0 + o).rem_euclid(n_i)) as usize;
        Stencil {
            idx: [idx(-1), idx(0), idx(1), idx(2)],
            w: lagrange_weights(t),
        }
    }

    pub fn interpolate(&self, values: &[f64], x: f64) -> f64 {
        self.stencil(x).apply(values)
    }

    /// Centered difference derivative of periodic samples.
    pub fn derivative(&self, values: &[f64]) -> Vec<f64> {
        let n = self.n;
        let inv = self.n as f64 / 2.0;
        (0..n)
            .map(|i| (values[(i + 1) % n] - values[(i + n - 1) % n]) * inv)
            .collect()
    }

    /// Distance on the circle.
    pub fn circle_distance(a: f64, b: f64) -> f64 {
        let d = (a - b).rem_euclid(1.0);
        d.min(1.0 - d)
    }

    /// Indices of nodes within circle distance `r` of `center`.
    pub fn ball(&self, center: f64, r: f64) -> Vec<usize> {
        (0..self.n)
            .filter(|&i| Self::circle_distance(self.node(i), center) <= r)
            .collect()
    }
}

/// Four point interpolation stencil.
#[derive(Debug, Clone, Copy)]
pub struct Stencil {
    pub idx: [usize; 4],
    pub w: [f64; 4],
}

impl Stencil {
    pub fn apply(&self, values: &[f64]) -> f64 {
        (0..4).map(|l| self.w[l] * values[self.idx[l]]).sum()
    }
}

/// Lagrange weights for nodes at offsets `-1, 0, 1, 2` evaluated at `t` in `[0, 1)`.
pub fn lagrange_weights(t: f64) -> [f64; 4] {
    [
        -t * (t - 1.0) * (t - 2.0) / 6.0,
        (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
        -(t + 1.0) * t * (t - 2.0) / 2.0,
        (t + 1.0) * t * (t - 1.0) / 6.0,
    ]
}
