//! Uniform one-dimensional grids and trapezoidal quadrature on them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A uniform grid `xi_min + i * dx`, `i = 0..n`.
///
/// The same type is used for the Lagrangian label line and for the
/// spatial line of Eulerian states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    xi_min: f64,
    xi_max: f64,
    n: usize,
}

impl Grid {
    pub fn new(xi_min: f64, xi_max: f64, n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::Structural(format!("grid needs at least 3 nodes, got {n}")));
        }
        if !(xi_min.is_finite() && xi_max.is_finite()) || xi_max <= xi_min {
            return Err(Error::Structural(format!(
                "grid bounds must be finite with xi_min < xi_max, got [{xi_min}, {xi_max}]"
            )));
        }
        Ok(Self { xi_min, xi_max, n })
    }

    /// Grid with spacing `dx` whose node `anchor_index` sits exactly at `anchor`.
    pub fn anchored(anchor: f64, anchor_index: usize, dx: f64, n: usize) -> Result<Self> {
        if anchor_index >= n || !(dx > 0.0) {
            return Err(Error::Structural("anchor index outside grid or dx <= 0".into()));
        }
        let xi_min = anchor - anchor_index as f64 * dx;
        Self::new(xi_min, xi_min + (n - 1) as f64 * dx, n)
    }

    #[inline]
    pub fn xi_min(&self) -> f64 {
        self.xi_min
    }

    #[inline]
    pub fn xi_max(&self) -> f64 {
        self.xi_max
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn dx(&self) -> f64 {
        (self.xi_max - self.xi_min) / (self.n - 1) as f64
    }

    #[inline]
    pub fn node(&self, i: usize) -> f64 {
        if i + 1 == self.n {
            self.xi_max
        } else {
            self.xi_min + i as f64 * self.dx()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.node(i)).collect()
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.xi_min && x <= self.xi_max
    }

    /// Cell index `i` with `node(i) <= x < node(i+1)` (clamped to the last
    /// cell) and the local coordinate `t = (x - node(i)) / dx`.
    ///
    /// Points within a relative 1e-10 of a node are snapped onto it, so an
    /// exact node always selects the cell to its right.
    pub fn locate(&self, x: f64) -> (usize, f64) {
        let h = self.dx();
        let mut s = (x - self.xi_min) / h;
        let r = s.round();
        if (s - r).abs() < 1e-10 {
            s = r;
        }
        let last = (self.n - 2) as f64;
        if s <= 0.0 {
            return (0, s);
        }
        if s >= last {
            return (self.n - 2, s - last);
        }
        let i = s.floor();
        (i as usize, s - i)
    }

    /// Trapezoid weights: `dx/2` at the two ends, `dx` inside.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let h = self.dx();
        let mut w = vec![h; self.n];
        w[0] = 0.5 * h;
        w[self.n - 1] = 0.5 * h;
        w
    }

    pub fn trapezoid(&self, f: &[f64]) -> f64 {
        debug_assert_eq!(f.len(), self.n);
        let h = self.dx();
        let inner: f64 = f[1..self.n - 1].iter().sum();
        h * (inner + 0.5 * (f[0] + f[self.n - 1]))
    }

    /// Running trapezoid integral from the first node, `out[0] = 0`.
    pub fn cumulative_trapezoid(&self, f: &[f64]) -> Vec<f64> {
        debug_assert_eq!(f.len(), self.n);
        let h = self.dx();
        let mut out = Vec::with_capacity(self.n);
        let mut acc = 0.0;
        out.push(acc);
        for w in f.windows(2) {
            acc += 0.5 * h * (w[0] + w[1]);
            out.push(acc);
        }
        out
    }

    /// Discrete L² norm by the trapezoid rule.
    pub fn l2_norm(&self, f: &[f64]) -> f64 {
        let sq: Vec<f64> = f.iter().map(|v| v * v).collect();
        self.trapezoid(&sq).max(0.0).sqrt()
    }
}

pub fn sup_norm(f: &[f64]) -> f64 {
    f.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

pub fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
}
