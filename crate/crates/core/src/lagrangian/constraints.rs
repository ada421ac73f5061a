//! Membership tests for the Lagrangian constraint sets and the norms used
//! to measure states and their differences.

use serde::{Deserialize, Serialize};

use super::LagrangianState;
use crate::error::Result;
use crate::grid::{sup_norm, Grid};

/// Default tolerance for freshly constructed states.
pub const TOL_CONSTRAINT: f64 = 1e-8;

/// Residuals of the structural conditions on a Lagrangian state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintReport {
    pub tol: f64,
    pub max_negative_yxi: f64,
    pub max_negative_hxi: f64,
    pub min_sum_yxi_hxi: f64,
    /// `max |y_ξ H_ξ - (y_ξ² U² + U_ξ² + r²)|`.
    pub max_lagcoord3_residual: f64,
    pub h_monotonicity_violation: f64,
    pub left_decay: f64,
    /// Largest gap between a primary field and the running trapezoid
    /// integral of its carried derivative. Informational: it is O(dξ) at
    /// jumps of the derivative fields and does not enter `in_g`.
    pub max_consistency_residual: f64,
    /// `max |y + H - ξ|`.
    pub max_f0_residual: f64,
    /// Largest of `|U|, |U_ξ|, H_ξ, |r|` over the boundary margins.
    pub boundary_leakage: f64,
    pub h_sup: f64,
    pub norm_e: f64,
    pub in_g: bool,
    pub in_f0: bool,
}

impl ConstraintReport {
    /// Total energy bounded by `m`.
    pub fn in_fm(&self, m: f64) -> bool {
        self.in_g && self.h_sup <= m
    }

    pub fn in_f0m(&self, m: f64) -> bool {
        self.in_f0 && self.h_sup <= m
    }

    /// Whether the state lies in the ball of radius `m` in the E-norm.
    pub fn in_ball(&self, m: f64) -> bool {
        self.norm_e <= m
    }
}

pub fn check_in_g(x: &LagrangianState, tol: f64) -> Result<ConstraintReport> {
    x.validate()?;
    let n = x.len();
    let nodes = x.grid.nodes();

    let mut neg_y = 0.0_f64;
    let mut neg_h = 0.0_f64;
    let mut min_sum = f64::INFINITY;
    let mut lag3 = 0.0_f64;
    let mut f0 = 0.0_f64;
    for i in 0..n {
        let (yx, ux, hx) = (x.yxi[i], x.uxi[i], x.hxi[i]);
        neg_y = neg_y.max(-yx);
        neg_h = neg_h.max(-hx);
        min_sum = min_sum.min(yx + hx);
        lag3 = lag3.max(lagcoord3_residual(yx, x.u[i], ux, hx, x.r[i]));
        f0 = f0.max((x.y[i] + x.h[i] - nodes[i]).abs());
    }
    let mono = x
        .h
        .windows(2)
        .map(|w| w[0] - w[1])
        .fold(0.0_f64, f64::max);

    let consistency = [(&x.y, &x.yxi), (&x.u, &x.uxi), (&x.h, &x.hxi)]
        .iter()
        .map(|(f, fx)| {
            let c = x.grid.cumulative_trapezoid(fx);
            f.iter()
                .zip(c)
                .map(|(v, ci)| (v - f[0] - ci).abs())
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max);

    let margin = (n / 50).max(2).min(n);
    let leak = (0..margin)
        .chain(n - margin..n)
        .map(|i| {
            x.u[i]
                .abs()
                .max(x.uxi[i].abs())
                .max(x.hxi[i].abs())
                .max(x.r[i].abs())
        })
        .fold(0.0, f64::max);

    let norm_e = Deviation::of(x).norm_e(&x.grid);
    let h_sup = sup_norm(&x.h);
    let left_decay = x.h[0].abs();
    let neg_y = neg_y.max(0.0);
    let neg_h = neg_h.max(0.0);
    let in_g = neg_y <= tol
        && neg_h <= tol
        && min_sum > 0.0
        && lag3 <= tol
        && mono <= tol
        && left_decay <= tol;
    Ok(ConstraintReport {
        tol,
        max_negative_yxi: neg_y,
        max_negative_hxi: neg_h,
        min_sum_yxi_hxi: min_sum,
        max_lagcoord3_residual: lag3,
        h_monotonicity_violation: mono.max(0.0),
        left_decay,
        max_consistency_residual: consistency,
        max_f0_residual: f0,
        boundary_leakage: leak,
        h_sup,
        norm_e,
        in_g,
        in_f0: in_g && f0 <= tol,
    })
}

#[inline]
pub fn lagcoord3_residual(yxi: f64, u: f64, uxi: f64, hxi: f64, r: f64) -> f64 {
    (yxi * hxi - (yxi * yxi * u * u + uxi * uxi + r * r)).abs()
}

/// Field-wise deviation of a state from the ground state, or of one state
/// from another: `(ζ, ζ_ξ, U, U_ξ, H, H_ξ, r)`.
#[derive(Debug, Clone)]
pub struct Deviation {
    pub zeta: Vec<f64>,
    pub zeta_xi: Vec<f64>,
    pub u: Vec<f64>,
    pub uxi: Vec<f64>,
    pub h: Vec<f64>,
    pub hxi: Vec<f64>,
    pub r: Vec<f64>,
}

impl Deviation {
    pub fn of(x: &LagrangianState) -> Self {
        Self {
            zeta: x.zeta(),
            zeta_xi: x.yxi.iter().map(|v| v - 1.0).collect(),
            u: x.u.clone(),
            uxi: x.uxi.clone(),
            h: x.h.clone(),
            hxi: x.hxi.clone(),
            r: x.r.clone(),
        }
    }

    /// `a - b`; both states must share a grid.
    pub fn between(a: &LagrangianState, b: &LagrangianState) -> Result<Self> {
        a.same_grid(b)?;
        let d = |p: &[f64], q: &[f64]| p.iter().zip(q).map(|(s, t)| s - t).collect::<Vec<_>>();
        Ok(Self {
            zeta: d(&a.y, &b.y),
            zeta_xi: d(&a.yxi, &b.yxi),
            u: d(&a.u, &b.u),
            uxi: d(&a.uxi, &b.uxi),
            h: d(&a.h, &b.h),
            hxi: d(&a.hxi, &b.hxi),
            r: d(&a.r, &b.r),
        })
    }

    /// `‖ζ‖_V + ‖U‖_{H¹} + ‖H‖_V + ‖r‖_{L²}` with `‖f‖_V = ‖f‖_∞ + ‖f_ξ‖_{L²}`
    /// and `‖U‖_{H¹} = ‖U‖_{L²} + ‖U_ξ‖_{L²}`.
    pub fn norm_e(&self, g: &Grid) -> f64 {
        sup_norm(&self.zeta)
            + g.l2_norm(&self.zeta_xi)
            + g.l2_norm(&self.u)
            + g.l2_norm(&self.uxi)
            + sup_norm(&self.h)
            + g.l2_norm(&self.hxi)
            + g.l2_norm(&self.r)
    }

    /// `‖y - id‖_∞ + ‖U‖_∞ + ‖H‖_∞`.
    pub fn linf(&self) -> f64 {
        sup_norm(&self.zeta) + sup_norm(&self.u) + sup_norm(&self.h)
    }

    /// `‖y_ξ - 1‖_{L²} + ‖U_ξ‖_{L²} + ‖H_ξ‖_{L²} + ‖r‖_{L²}`.
    pub fn deriv_l2(&self, g: &Grid) -> f64 {
        g.l2_norm(&self.zeta_xi) + g.l2_norm(&self.uxi) + g.l2_norm(&self.hxi) + g.l2_norm(&self.r)
    }

    /// `‖y_ξ - 1‖_∞ + ‖U_ξ‖_∞ + ‖H_ξ‖_∞ + ‖r‖_∞`.
    pub fn deriv_linf(&self) -> f64 {
        sup_norm(&self.zeta_xi) + sup_norm(&self.uxi) + sup_norm(&self.hxi) + sup_norm(&self.r)
    }
}

pub fn norm_e(x: &LagrangianState) -> f64 {
    Deviation::of(x).norm_e(&x.grid)
}

pub fn norm_e_between(a: &LagrangianState, b: &LagrangianState) -> Result<f64> {
    Ok(Deviation::between(a, b)?.norm_e(&a.grid))
}

pub fn linf_between(a: &LagrangianState, b: &LagrangianState) -> Result<f64> {
    Ok(Deviation::between(a, b)?.linf())
}
