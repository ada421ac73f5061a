use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::grid::Grid;
use crate::interp::eno_cubic;

/// A Lagrangian state `X = (y, U, H, r)` sampled on a label grid, together
/// with the independently carried derivative fields `y_ξ`, `U_ξ`, `H_ξ`.
///
/// `y - ξ` (the displacement) is derived, never stored. Derivative fields and
/// `r` are densities: at a node where they jump, the sample is the right limit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagrangianState {
    pub grid: Grid,
    pub y: Vec<f64>,
    pub u: Vec<f64>,
    pub h: Vec<f64>,
    pub r: Vec<f64>,
    pub yxi: Vec<f64>,
    pub uxi: Vec<f64>,
    pub hxi: Vec<f64>,
}

/// All seven fields of a state evaluated at one label.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PointSample {
    pub y: f64,
    pub u: f64,
    pub h: f64,
    pub r: f64,
    pub yxi: f64,
    pub uxi: f64,
    pub hxi: f64,
}

impl LagrangianState {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        grid: Grid,
        y: Vec<f64>,
        u: Vec<f64>,
        h: Vec<f64>,
        r: Vec<f64>,
        yxi: Vec<f64>,
        uxi: Vec<f64>,
        hxi: Vec<f64>,
    ) -> Result<Self> {
        let s = Self { grid, y, u, h, r, yxi, uxi, hxi };
        s.validate()?;
        Ok(s)
    }

    /// `y = ξ`, everything else zero except `y_ξ = 1`.
    pub fn ground(grid: Grid) -> Self {
        let n = grid.len();
        Self {
            grid,
            y: grid.nodes(),
            u: vec![0.0; n],
            h: vec![0.0; n],
            r: vec![0.0; n],
            yxi: vec![1.0; n],
            uxi: vec![0.0; n],
            hxi: vec![0.0; n],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.grid.len();
        for (name, f) in self.fields() {
            check_len(name, f.len(), n)?;
            if let Some(i) = f.iter().position(|v| !v.is_finite()) {
                return Err(Error::Structural(format!("{name}[{i}] is not finite")));
            }
        }
        Ok(())
    }

    pub fn fields(&self) -> [(&'static str, &Vec<f64>); 7] {
        [
            ("y", &self.y),
            ("U", &self.u),
            ("H", &self.h),
            ("r", &self.r),
            ("yxi", &self.yxi),
            ("Uxi", &self.uxi),
            ("Hxi", &self.hxi),
        ]
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn zeta(&self) -> Vec<f64> {
        self.y.iter().zip(self.grid.nodes()).map(|(y, x)| y - x).collect()
    }

    /// `y + H`, the map whose inverse projects onto the normalised section.
    pub fn w(&self) -> Vec<f64> {
        self.y.iter().zip(&self.h).map(|(a, b)| a + b).collect()
    }

    /// Total energy `H(ξ_max) - H(ξ_min)`.
    pub fn total_energy(&self) -> f64 {
        self.h[self.len() - 1] - self.h[0]
    }

    pub fn sample_node(&self, i: usize) -> PointSample {
        PointSample {
            y: self.y[i],
            u: self.u[i],
            h: self.h[i],
            r: self.r[i],
            yxi: self.yxi[i],
            uxi: self.uxi[i],
            hxi: self.hxi[i],
        }
    }

    /// Evaluate every field at an arbitrary label.
    ///
    /// Inside the grid each field is ENO-interpolated; the nonnegative
    /// densities `y_ξ`, `H_ξ` are clamped at zero. Outside the grid the
    /// state is continued as it is at the boundary node: densities frozen,
    /// primary fields extended linearly with their carried slope.
    pub fn sample(&self, xi: f64) -> PointSample {
        let g = &self.grid;
        let (edge, d) = if xi < g.xi_min() {
            (0, xi - g.xi_min())
        } else if xi > g.xi_max() {
            (self.len() - 1, xi - g.xi_max())
        } else {
            let v = |f: &[f64]| eno_cubic(g, f, xi).0;
            return PointSample {
                y: v(&self.y),
                u: v(&self.u),
                h: v(&self.h),
                r: v(&self.r),
                yxi: v(&self.yxi).max(0.0),
                uxi: v(&self.uxi),
                hxi: v(&self.hxi).max(0.0),
            };
        };
        let b = self.sample_node(edge);
        PointSample {
            y: b.y + b.yxi * d,
            u: b.u + b.uxi * d,
            h: b.h + b.hxi * d,
            ..b
        }
    }

    /// Evaluate only `w = y + H` at a label, with the same rules as [`sample`].
    ///
    /// [`sample`]: LagrangianState::sample
    pub(crate) fn sample_w(&self, xi: f64) -> f64 {
        let g = &self.grid;
        if xi < g.xi_min() {
            let d = xi - g.xi_min();
            return self.y[0] + self.h[0] + (self.yxi[0] + self.hxi[0]) * d;
        }
        if xi > g.xi_max() {
            let n = self.len() - 1;
            let d = xi - g.xi_max();
            return self.y[n] + self.h[n] + (self.yxi[n] + self.hxi[n]) * d;
        }
        eno_cubic(g, &self.y, xi).0 + eno_cubic(g, &self.h, xi).0
    }

    pub(crate) fn from_samples(grid: Grid, samples: &[PointSample]) -> Self {
        Self {
            grid,
            y: samples.iter().map(|s| s.y).collect(),
            u: samples.iter().map(|s| s.u).collect(),
            h: samples.iter().map(|s| s.h).collect(),
            r: samples.iter().map(|s| s.r).collect(),
            yxi: samples.iter().map(|s| s.yxi).collect(),
            uxi: samples.iter().map(|s| s.uxi).collect(),
            hxi: samples.iter().map(|s| s.hxi).collect(),
        }
    }

    /// The state sampled at the nodes of another label grid. Labels of
    /// normalised states do not depend on the grid, so this moves them
    /// between grids without relabeling.
    pub fn resample(&self, grid: Grid) -> Self {
        let samples: Vec<PointSample> = grid.nodes().into_iter().map(|s| self.sample(s)).collect();
        Self::from_samples(grid, &samples)
    }

    pub(crate) fn same_grid(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::Structural(format!(
                "states live on different grids: {:?} vs {:?}",
                self.grid, other.grid
            )));
        }
        Ok(())
    }

    /// Largest pointwise difference over all seven fields.
    pub fn sup_distance(&self, other: &Self) -> f64 {
        self.fields()
            .iter()
            .zip(other.fields().iter())
            .map(|((_, a), (_, b))| crate::grid::sup_diff(a, b))
            .fold(0.0, f64::max)
    }
}

/// Piecewise-linear profiles representing energy `E` concentrated at the
/// origin: `y` is flat on `[0, E)`, `H` ramps over the same interval, and
/// `U = r = 0`.
///
/// Nodes falling exactly on `0` or `E` get the right-limit derivative values.
pub fn concentrated_energy_state(grid: Grid, energy: f64) -> LagrangianState {
    let snap = 1e-9 * grid.dx();
    let mut s = LagrangianState::ground(grid);
    for (i, mut xi) in grid.nodes().into_iter().enumerate() {
        if xi.abs() < snap {
            xi = 0.0;
        } else if (xi - energy).abs() < snap {
            xi = energy;
        }
        if xi < 0.0 {
            s.y[i] = xi;
            s.h[i] = 0.0;
        } else if xi < energy {
            s.y[i] = 0.0;
            s.h[i] = xi;
            s.yxi[i] = 0.0;
            s.hxi[i] = 1.0;
        } else {
            s.y[i] = xi - energy;
            s.h[i] = energy;
        }
    }
    s
}
