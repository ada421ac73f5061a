//! Kernels, right-hand side and time integration of the Lagrangian system.
//!
//! With `g = U² y_ξ + H_ξ` the nonlocal terms are
//! `P(ξ) = ¼ ∫ e^{-|y(ξ)-y(η)|} g(η) dη` and
//! `Q(ξ) = -¼ ∫ sign(ξ-η) e^{-|y(ξ)-y(η)|} g(η) dη`.
//! Because `y` is nondecreasing both split into a left and a right
//! exponential sweep, each O(N) with only nonpositive exponents.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eulerian::EulerianState;
use crate::grid::{sup_norm, Grid};
use crate::lagrangian::{lagcoord3_residual, project_f0, LagrangianState};
use crate::transforms::{to_eulerian, to_lagrangian};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelValues {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
}

/// `g = U² y_ξ + H_ξ`.
pub fn kernel_integrand(x: &LagrangianState) -> Vec<f64> {
    (0..x.len()).map(|i| x.u[i] * x.u[i] * x.yxi[i] + x.hxi[i]).collect()
}

/// Largest relative decrease of nodal `y` accepted by the kernels. Near a
/// collision neighbouring characteristics meet and RK4 can cross them by
/// an amount far below the grid scale; the sweeps clamp such gaps to 0.
pub const Y_MONOTONE_TOL: f64 = 1e-6;

/// Crossings up to this fraction of `dξ` are accepted as well.
pub const Y_CROSSING_DXI: f64 = 1e-2;

fn check_monotone_y(x: &LagrangianState) -> Result<()> {
    let scale = (Y_MONOTONE_TOL * (1.0 + sup_norm(&x.y))).max(Y_CROSSING_DXI * x.grid.dx());
    if let Some(i) = x.y.windows(2).position(|w| w[1] < w[0] - scale) {
        return Err(Error::Domain(format!(
            "y decreases between nodes {i} and {}: {} -> {}",
            i + 1,
            x.y[i],
            x.y[i + 1]
        )));
    }
    Ok(())
}

/// `P` and `Q` by two exponential sweeps.
///
/// `A_i` collects labels `η ≤ ξ_i`, `B_i` labels `η > ξ_i`. The self term
/// sits in `A_i` for `P` and is dropped from `Q` (`sign(0) = 0`).
pub fn compute_kernels(x: &LagrangianState) -> Result<KernelValues> {
    check_monotone_y(x)?;
    Ok(sweep_kernels(x))
}

/// The sweeps without the monotonicity guard. RK4 stage states are only
/// first-order predictors and may cross characteristics near a collision.
fn sweep_kernels(x: &LagrangianState) -> KernelValues {
    let n = x.len();
    let w = x.grid.trapezoid_weights();
    let gw: Vec<f64> = kernel_integrand(x).iter().zip(&w).map(|(g, w)| g * w).collect();
    let decay: Vec<f64> = x.y.windows(2).map(|p| (-(p[1] - p[0]).max(0.0)).exp()).collect();

    let mut a = vec![0.0; n];
    a[0] = gw[0];
    for i in 1..n {
        a[i] = decay[i - 1] * a[i - 1] + gw[i];
    }
    let mut b = vec![0.0; n];
    for i in (0..n - 1).rev() {
        b[i] = decay[i] * (b[i + 1] + gw[i + 1]);
    }
    let p = a.iter().zip(&b).map(|(a, b)| 0.25 * (a + b)).collect();
    let q = (0..n).map(|i| -0.25 * ((a[i] - gw[i]) - b[i])).collect();
    KernelValues { p, q }
}

/// Time derivative of every field; `r_t = 0`.
pub fn rhs(x: &LagrangianState) -> Result<LagrangianState> {
    let k = compute_kernels(x)?;
    Ok(rhs_with(x, &k))
}

pub fn rhs_with(x: &LagrangianState, k: &KernelValues) -> LagrangianState {
    let n = x.len();
    let mut d = LagrangianState::ground(x.grid);
    for i in 0..n {
        let (u, p, q) = (x.u[i], k.p[i], k.q[i]);
        let (yx, ux, hx) = (x.yxi[i], x.uxi[i], x.hxi[i]);
        d.y[i] = u;
        d.u[i] = -q;
        d.h[i] = u * u * u - 2.0 * p * u;
        d.r[i] = 0.0;
        d.yxi[i] = ux;
        d.uxi[i] = 0.5 * hx + (0.5 * u * u - p) * yx;
        d.hxi[i] = (3.0 * u * u - 2.0 * p) * ux - 2.0 * q * u * yx;
    }
    d
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub t_end: f64,
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
    /// Allowed growth of the derivative-identity residual and of the
    /// relative energy drift over the run.
    pub drift_budget: f64,
    /// `dt ≤ stability_c · dξ`.
    #[serde(default = "default_stability_c")]
    pub stability_c: f64,
    /// Negative `y_ξ`, `H_ξ` down to `-clip_tol` are set to 0.
    #[serde(default = "default_clip_tol")]
    pub clip_tol: f64,
}

fn default_stability_c() -> f64 {
    0.5
}

fn default_clip_tol() -> f64 {
    1e-8
}

impl IntegratorConfig {
    pub fn new(dt: f64, t_end: f64, drift_budget: f64) -> Self {
        Self {
            dt,
            t_end,
            snapshot_times: Vec::new(),
            drift_budget,
            stability_c: default_stability_c(),
            clip_tol: default_clip_tol(),
        }
    }

    pub fn with_snapshots(mut self, times: Vec<f64>) -> Self {
        self.snapshot_times = times;
        self
    }

    pub fn validate(&self, grid: &Grid) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Domain(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::Domain(format!("t_end must be nonnegative, got {}", self.t_end)));
        }
        if self.dt > self.stability_c * grid.dx() * (1.0 + 1e-12) {
            return Err(Error::Domain(format!(
                "dt = {} exceeds {} * dxi = {}",
                self.dt,
                self.stability_c,
                self.stability_c * grid.dx()
            )));
        }
        if !(self.drift_budget >= 0.0) {
            return Err(Error::Domain("drift budget must be nonnegative".into()));
        }
        if let Some(t) = self.snapshot_times.iter().find(|&&t| !(0.0..=self.t_end).contains(&t)) {
            return Err(Error::Domain(format!("snapshot time {t} outside [0, {}]", self.t_end)));
        }
        Ok(())
    }
}

/// Per-step diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub t: f64,
    /// `H(ξ_max) - H(ξ_min)`.
    pub energy: f64,
    pub max_lagcoord3_residual: f64,
    pub min_yxi: f64,
    pub max_abs_u: f64,
    /// Total magnitude removed by clipping in this step.
    pub clipped: f64,
}

impl Diagnostic {
    fn of(t: f64, x: &LagrangianState, clipped: f64) -> Self {
        Self {
            t,
            energy: x.total_energy(),
            max_lagcoord3_residual: max_lagcoord3(x),
            min_yxi: x.yxi.iter().cloned().fold(f64::INFINITY, f64::min),
            max_abs_u: sup_norm(&x.u),
            clipped,
        }
    }
}

fn max_lagcoord3(x: &LagrangianState) -> f64 {
    (0..x.len())
        .map(|i| lagcoord3_residual(x.yxi[i], x.u[i], x.uxi[i], x.hxi[i], x.r[i]))
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub snapshots: Vec<(f64, LagrangianState)>,
    pub diagnostics: Vec<Diagnostic>,
    pub final_state: LagrangianState,
}

impl Trajectory {
    pub fn snapshot(&self, t: f64) -> Option<&LagrangianState> {
        self.snapshots.iter().find(|(s, _)| (s - t).abs() < 1e-12).map(|(_, x)| x)
    }
}

/// `out = x + Σ c_k · d_k`, field by field.
fn combine(x: &LagrangianState, terms: &[(f64, &LagrangianState)]) -> LagrangianState {
    let mut out = x.clone();
    let dst = [
        &mut out.y, &mut out.u, &mut out.h, &mut out.r, &mut out.yxi, &mut out.uxi, &mut out.hxi,
    ];
    for (k, f) in dst.into_iter().enumerate() {
        for &(c, d) in terms {
            let src = d.fields()[k].1;
            for (o, s) in f.iter_mut().zip(src) {
                *o += c * s;
            }
        }
    }
    out
}

fn rk4_step(x: &LagrangianState, dt: f64) -> Result<LagrangianState> {
    let stage = |s: &LagrangianState| rhs_with(s, &sweep_kernels(s));
    let k1 = rhs(x)?;
    let k2 = stage(&combine(x, &[(0.5 * dt, &k1)]));
    let k3 = stage(&combine(x, &[(0.5 * dt, &k2)]));
    let k4 = stage(&combine(x, &[(dt, &k3)]));
    Ok(combine(
        x,
        &[(dt / 6.0, &k1), (dt / 3.0, &k2), (dt / 3.0, &k3), (dt / 6.0, &k4)],
    ))
}

/// Clip slightly negative `y_ξ`, `H_ξ`; returns the total clipped magnitude.
fn clip(x: &mut LagrangianState, tol: f64, t: f64) -> Result<f64> {
    let mut clipped = 0.0;
    for (name, f) in [("y_xi", &mut x.yxi), ("H_xi", &mut x.hxi)] {
        for (i, v) in f.iter_mut().enumerate() {
            if *v < 0.0 {
                if *v < -tol {
                    return Err(Error::Integration {
                        time: t,
                        reason: format!("{name}[{i}] = {v} below -{tol}: under-resolved"),
                    });
                }
                clipped -= *v;
                *v = 0.0;
            }
        }
    }
    Ok(clipped)
}

/// Fixed-step RK4 from `t = 0` to `cfg.t_end`. Steps are shortened to land
/// exactly on snapshot times.
pub fn evolve(x0: &LagrangianState, cfg: &IntegratorConfig) -> Result<Trajectory> {
    x0.validate()?;
    cfg.validate(&x0.grid)?;
    let mut stops: Vec<f64> = cfg.snapshot_times.clone();
    stops.sort_by(f64::total_cmp);
    stops.dedup();

    let lag0 = max_lagcoord3(x0);
    let e0 = x0.total_energy();
    let mut x = x0.clone();
    let mut t = 0.0;
    let mut diagnostics = vec![Diagnostic::of(0.0, &x, 0.0)];
    let mut snapshots = Vec::new();
    let mut next = 0;
    while next < stops.len() && stops[next] <= 0.0 {
        snapshots.push((stops[next], x.clone()));
        next += 1;
    }

    let eps_t = 1e-12 * cfg.t_end.max(1.0);
    while t < cfg.t_end - eps_t {
        let target = stops.get(next).copied().unwrap_or(cfg.t_end).min(cfg.t_end);
        let mut dt = cfg.dt.min(target - t);
        // Avoid a sliver step right before a stop.
        if target - t - dt < 1e-3 * cfg.dt {
            dt = target - t;
        }
        let mut xn = rk4_step(&x, dt)?;
        let tn = if (target - (t + dt)).abs() <= eps_t { target } else { t + dt };
        if let Err(Error::Domain(reason)) = check_monotone_y(&xn) {
            return Err(Error::Integration { time: tn, reason: format!("characteristics crossed: {reason}") });
        }
        if let Some((name, _)) = xn.fields().into_iter().find(|(_, f)| f.iter().any(|v| !v.is_finite())) {
            return Err(Error::Integration { time: tn, reason: format!("{name} is not finite") });
        }
        let clipped = clip(&mut xn, cfg.clip_tol, tn)?;
        let d = Diagnostic::of(tn, &xn, clipped);
        if d.max_lagcoord3_residual > lag0 + cfg.drift_budget {
            return Err(Error::Integration {
                time: tn,
                reason: format!(
                    "derivative identity residual {} exceeds budget {}",
                    d.max_lagcoord3_residual,
                    lag0 + cfg.drift_budget
                ),
            });
        }
        if (d.energy - e0).abs() > cfg.drift_budget * e0.max(1.0) {
            return Err(Error::Integration {
                time: tn,
                reason: format!("energy drifted from {e0} to {}", d.energy),
            });
        }
        diagnostics.push(d);
        x = xn;
        t = tn;
        while next < stops.len() && stops[next] <= t + eps_t {
            snapshots.push((stops[next], x.clone()));
            next += 1;
        }
    }
    Ok(Trajectory { snapshots, diagnostics, final_state: x })
}

/// `S_t` for a single time.
pub fn flow(x0: &LagrangianState, t: f64, dt: f64, drift_budget: f64) -> Result<LagrangianState> {
    let mut cfg = IntegratorConfig::new(dt, t, drift_budget);
    cfg.stability_c = f64::INFINITY;
    Ok(evolve(x0, &cfg)?.final_state)
}

/// `T_t = M ∘ Π ∘ S_t ∘ L`, with `L` onto `label_grid` and `M` back onto the
/// spatial grid of `z0`. `cfg.t_end` is replaced by `t`.
pub fn semigroup_t(
    z0: &EulerianState,
    t: f64,
    label_grid: Grid,
    cfg: &IntegratorConfig,
) -> Result<EulerianState> {
    let x0 = to_lagrangian(z0, label_grid)?;
    let cfg = IntegratorConfig { t_end: t, snapshot_times: Vec::new(), ..cfg.clone() };
    let xt = evolve(&x0, &cfg)?.final_state;
    to_eulerian(&project_f0(&xt)?, z0.grid)
}
