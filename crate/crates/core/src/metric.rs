//! Two-sided estimates of the relabeling-invariant distance between
//! Lagrangian states and of its chained version on normalised states.
//!
//! The objective of `J` is
//! `‖X_α ∘ f1 - X_β‖ + ‖X_α - X_β ∘ f2‖` over relabelings `f1, f2`. The two
//! terms are independent, so each is minimised on its own over a small
//! deterministic candidate set. Every candidate value is an upper bound;
//! `½ ‖X_α - X_β‖_{L∞}` is the lower bound.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eulerian::EulerianState;
use crate::grid::{sup_norm, Grid};
use crate::lagrangian::{
    bisect, check_in_g, linf_between, norm_e_between, project_f0, relabel, solve_w,
    LagrangianState, Relabeling,
};
use crate::transforms::to_lagrangian;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricConfig {
    /// Energy bound `M`.
    #[serde(rename = "M")]
    pub m: f64,
    /// Number of links of the longer chain candidate; 1 disables chaining.
    #[serde(default = "default_chain_length")]
    pub chain_length: usize,
    /// Membership tolerance for the input states.
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Number of smooth bump perturbations per relabeling.
    #[serde(default = "default_knots")]
    pub knots: usize,
    /// Coordinate-descent sweeps over the bumps.
    #[serde(default = "default_passes")]
    pub passes: usize,
}

fn default_chain_length() -> usize {
    2
}

fn default_tol() -> f64 {
    1e-5
}

fn default_knots() -> usize {
    12
}

fn default_passes() -> usize {
    2
}

impl MetricConfig {
    pub fn new(m: f64) -> Self {
        Self {
            m,
            chain_length: default_chain_length(),
            tol: default_tol(),
            knots: default_knots(),
            passes: default_passes(),
        }
    }
}

/// Chain candidate that produced the upper bound of a chained estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainInfo {
    /// Interpolation parameters of the intermediate states.
    pub thetas: Vec<f64>,
    /// Upper bound of `J` on each link.
    pub links: Vec<f64>,
    #[serde(skip)]
    pub states: Vec<LagrangianState>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricEstimate {
    pub lower: f64,
    pub upper: f64,
    /// `2 ‖X_α - X_β‖`, the bound attained by the identity relabelings.
    pub identity_bound: f64,
    pub witness_f1: Relabeling,
    pub witness_f2: Relabeling,
    /// Set when a chain beat the direct estimate.
    pub chain: Option<ChainInfo>,
}

impl MetricEstimate {
    fn zero(grid: Grid) -> Self {
        Self {
            lower: 0.0,
            upper: 0.0,
            identity_bound: 0.0,
            witness_f1: Relabeling::identity(grid),
            witness_f2: Relabeling::identity(grid),
            chain: None,
        }
    }
}

/// `Σ_{k=1..3}` sup-norm part of the deviation, halved.
pub fn lower_bound(a: &LagrangianState, b: &LagrangianState) -> Result<f64> {
    Ok(0.5 * linf_between(a, b)?)
}

/// The relabeling `f` with `(y_a + H_a) ∘ f = y_b + H_b`.
pub fn matched_relabeling(a: &LagrangianState, b: &LagrangianState) -> Result<Relabeling> {
    let wa = a.w();
    let wb = b.w();
    let (f, fxi) = (0..b.len())
        .map(|i| {
            let s = solve_w(a, &wa, wb[i]);
            let p = a.sample(s);
            (s, (b.yxi[i] + b.hxi[i]) / (p.yxi + p.hxi))
        })
        .unzip();
    Relabeling::new(a.grid, f, fxi)
}

/// Weights `λ` of the candidates `(y_a + λ H_a)⁻¹ ∘ (y_b + λ H_b)`. Small
/// `λ` lines up features at the same spatial position, such as crests.
const BLEND_WEIGHTS: [f64; 3] = [0.3, 0.1, 0.03];

/// The relabeling `f` with `(y_a + λ H_a) ∘ f = y_b + λ H_b`.
pub fn blended_relabeling(a: &LagrangianState, b: &LagrangianState, lambda: f64) -> Result<Relabeling> {
    let g = a.grid;
    let n = a.len();
    let va: Vec<f64> = a.y.iter().zip(&a.h).map(|(y, h)| y + lambda * h).collect();
    let slope = |i: usize| a.yxi[i] + lambda * a.hxi[i];
    let (f, fxi) = (0..n)
        .map(|i| {
            let target = b.y[i] + lambda * b.h[i];
            let s = if target <= va[0] {
                g.xi_min() + (target - va[0]) / slope(0)
            } else if target >= va[n - 1] {
                g.xi_max() + (target - va[n - 1]) / slope(n - 1)
            } else {
                let j = va.partition_point(|&v| v <= target).saturating_sub(1).min(n - 2);
                bisect(g.node(j), g.node(j + 1), |s| {
                    let p = a.sample(s);
                    p.y + lambda * p.h - target
                })
            };
            let p = a.sample(s);
            (s, (b.yxi[i] + lambda * b.hxi[i]) / (p.yxi + lambda * p.hxi))
        })
        .unzip();
    Relabeling::new(g, f, fxi)
}

/// Smooth partition-of-unity bumps `cos²` centred on equally spaced knots
/// over the labels where either state differs from the ground state.
struct Bumps {
    centres: Vec<f64>,
    half_width: f64,
}

impl Bumps {
    fn new(a: &LagrangianState, b: &LagrangianState, k: usize) -> Self {
        let active = |x: &LagrangianState, i: usize| {
            x.u[i] != 0.0 || x.hxi[i] != 0.0 || x.r[i] != 0.0 || x.yxi[i] != 1.0
        };
        let n = a.len();
        let lo = (0..n).find(|&i| active(a, i) || active(b, i)).unwrap_or(0);
        let hi = (0..n).rev().find(|&i| active(a, i) || active(b, i)).unwrap_or(n - 1);
        let g = a.grid;
        let (lo, hi) = (g.node(lo), g.node(hi).max(g.node(lo) + g.dx()));
        let k = k.max(1);
        let step = (hi - lo) / k as f64;
        let centres = (0..=k).map(|j| lo + j as f64 * step).collect();
        Self { centres, half_width: step }
    }

    /// Value and derivative of bump `j` at `x`.
    fn eval(&self, j: usize, x: f64) -> (f64, f64) {
        let d = (x - self.centres[j]) / self.half_width;
        if d.abs() >= 1.0 {
            return (0.0, 0.0);
        }
        let a = std::f64::consts::FRAC_PI_2 * d;
        let c = a.cos();
        (c * c, -2.0 * c * a.sin() * std::f64::consts::FRAC_PI_2 / self.half_width)
    }
}

/// `base + c · bump_j`, if it is still a valid relabeling.
fn perturb(base: &Relabeling, bumps: &Bumps, j: usize, c: f64) -> Option<Relabeling> {
    let g = *base.grid();
    let mut f = base.knots().to_vec();
    let mut d = base.slopes().to_vec();
    for (i, x) in g.nodes().into_iter().enumerate() {
        let (v, dv) = bumps.eval(j, x);
        if v != 0.0 || dv != 0.0 {
            f[i] += c * v;
            d[i] += c * dv;
        }
    }
    if d.iter().any(|&s| s < 1e-3) {
        return None;
    }
    Relabeling::new(g, f, d).ok()
}

/// Minimise `objective` by coordinate descent over bump coefficients,
/// starting from the best of `starts`.
fn descend(
    starts: Vec<Relabeling>,
    bumps: &Bumps,
    passes: usize,
    objective: impl Fn(&Relabeling) -> Result<f64>,
) -> Result<(f64, Relabeling)> {
    let mut best: Option<(f64, Relabeling)> = None;
    for f in starts {
        let v = objective(&f)?;
        if best.as_ref().is_none_or(|(b, _)| v < *b) {
            best = Some((v, f));
        }
    }
    let (mut val, mut f) = best.expect("at least one start");
    let mut step = 0.25 * bumps.half_width;
    for _ in 0..passes {
        for j in 0..bumps.centres.len() {
            let mut s = step;
            while s > 1e-2 * step {
                let mut improved = false;
                for c in [s, -s] {
                    if let Some(g) = perturb(&f, bumps, j, c) {
                        let v = objective(&g)?;
                        if v < val {
                            val = v;
                            f = g;
                            improved = true;
                            break;
                        }
                    }
                }
                if !improved {
                    s *= 0.25;
                }
            }
        }
        step *= 0.5;
        if val == 0.0 {
            break;
        }
    }
    Ok((val, f))
}

fn normalised(x: &LagrangianState, tol: f64) -> bool {
    x.y.iter().zip(&x.h).zip(x.grid.nodes()).all(|((y, h), s)| (y + h - s).abs() <= tol)
}

/// Upper bound for `J(X_α, X_β)`. The lower bound is reported only when
/// both states are normalised; otherwise it is 0.
pub fn j_upper(a: &LagrangianState, b: &LagrangianState, cfg: &MetricConfig) -> Result<MetricEstimate> {
    a.same_grid(b)?;
    if a == b {
        return Ok(MetricEstimate::zero(a.grid));
    }
    let lower = if normalised(a, cfg.tol) && normalised(b, cfg.tol) { lower_bound(a, b)? } else { 0.0 };
    let direct = norm_e_between(a, b)?;
    let id = Relabeling::identity(a.grid);
    let bumps = Bumps::new(a, b, cfg.knots);

    let mut starts1 = vec![id.clone()];
    starts1.extend(matched_relabeling(a, b).ok());
    starts1.extend(BLEND_WEIGHTS.iter().filter_map(|&l| blended_relabeling(a, b, l).ok()));
    let (t1, f1) = descend(starts1, &bumps, cfg.passes, |f| norm_e_between(&relabel(a, f)?, b))?;

    let mut starts2 = vec![id];
    starts2.extend(matched_relabeling(b, a).ok());
    starts2.extend(BLEND_WEIGHTS.iter().filter_map(|&l| blended_relabeling(b, a, l).ok()));
    let (t2, f2) = descend(starts2, &bumps, cfg.passes, |f| norm_e_between(a, &relabel(b, f)?))?;

    Ok(MetricEstimate {
        lower,
        upper: (t1 + t2).min(2.0 * direct).max(lower),
        identity_bound: 2.0 * direct,
        witness_f1: f1,
        witness_f2: f2,
        chain: None,
    })
}

/// `(1-θ) X_α + θ X_β` with `H_ξ` rebuilt from the derivative identity,
/// `H` re-integrated, then projected onto the normalised section.
pub fn chain_point(a: &LagrangianState, b: &LagrangianState, theta: f64) -> Result<LagrangianState> {
    a.same_grid(b)?;
    let mix = |p: &[f64], q: &[f64]| -> Vec<f64> {
        p.iter().zip(q).map(|(s, t)| (1.0 - theta) * s + theta * t).collect()
    };
    let mut m = LagrangianState {
        grid: a.grid,
        y: mix(&a.y, &b.y),
        u: mix(&a.u, &b.u),
        h: Vec::new(),
        r: mix(&a.r, &b.r),
        yxi: mix(&a.yxi, &b.yxi),
        uxi: mix(&a.uxi, &b.uxi),
        hxi: mix(&a.hxi, &b.hxi),
    };
    for i in 0..m.len() {
        let yx = m.yxi[i];
        if yx > 0.0 {
            m.hxi[i] = (yx * yx * m.u[i] * m.u[i] + m.uxi[i] * m.uxi[i] + m.r[i] * m.r[i]) / yx;
        }
    }
    let h0 = mix(&a.h[..1], &b.h[..1])[0];
    m.h = m.grid.cumulative_trapezoid(&m.hxi).into_iter().map(|v| v + h0).collect();
    project_f0(&m)
}

fn check_f0m(x: &LagrangianState, cfg: &MetricConfig, name: &str) -> Result<()> {
    let rep = check_in_g(x, cfg.tol)?;
    if !rep.in_f0m(cfg.m) {
        return Err(Error::Domain(format!(
            "{name} is not in the normalised set with energy bound {}: {rep:?}",
            cfg.m
        )));
    }
    Ok(())
}

/// Bounds for the chained distance on normalised states with energy at
/// most `M`: the direct `J` and one chain through equally spaced
/// intermediate states, whichever is smaller.
pub fn dm_estimate(a: &LagrangianState, b: &LagrangianState, cfg: &MetricConfig) -> Result<MetricEstimate> {
    check_f0m(a, cfg, "first state")?;
    check_f0m(b, cfg, "second state")?;
    let mut best = j_upper(a, b, cfg)?;
    if cfg.chain_length < 2 || best.upper == 0.0 {
        return Ok(best);
    }
    let thetas: Vec<f64> = (1..cfg.chain_length).map(|k| k as f64 / cfg.chain_length as f64).collect();
    let mut states = Vec::with_capacity(thetas.len());
    for &t in &thetas {
        match chain_point(a, b, t) {
            Ok(m) if check_in_g(&m, cfg.tol).map(|r| r.h_sup <= cfg.m).unwrap_or(false) => states.push(m),
            _ => return Ok(best),
        }
    }
    let mut nodes = vec![a];
    nodes.extend(states.iter());
    nodes.push(b);
    let mut links = Vec::with_capacity(nodes.len() - 1);
    for w in nodes.windows(2) {
        links.push(j_upper(w[0], w[1], cfg)?.upper);
    }
    let total: f64 = links.iter().sum();
    if total < best.upper {
        best.upper = total.max(best.lower);
        best.chain = Some(ChainInfo { thetas, links, states });
    }
    Ok(best)
}

/// Label grid wide enough for `L` of both states.
pub fn common_label_grid(za: &EulerianState, zb: &EulerianState, n: usize) -> Result<Grid> {
    let lo = za.grid.xi_min().min(zb.grid.xi_min());
    let hi = (za.grid.xi_max() + za.total_energy()).max(zb.grid.xi_max() + zb.total_energy());
    Grid::new(lo, hi, n)
}

/// The chained distance between Eulerian states, through `L`.
pub fn d_dm(za: &EulerianState, zb: &EulerianState, label_grid: Grid, cfg: &MetricConfig) -> Result<MetricEstimate> {
    for (z, name) in [(za, "first"), (zb, "second")] {
        if z.total_energy() > cfg.m {
            return Err(Error::Domain(format!(
                "{name} state has energy {} above the bound {}",
                z.total_energy(),
                cfg.m
            )));
        }
    }
    let a = to_lagrangian(za, label_grid)?;
    let b = to_lagrangian(zb, label_grid)?;
    dm_estimate(&a, &b, cfg)
}

/// `R(ξ) = ∫_{-∞}^ξ r(η) e^{-|η|} dη`.
pub fn r_separation(x: &LagrangianState) -> Vec<f64> {
    let f: Vec<f64> = x.r.iter().zip(x.grid.nodes()).map(|(r, s)| r * (-s.abs()).exp()).collect();
    x.grid.cumulative_trapezoid(&f)
}

/// `sup |R_α - R_β|`.
pub fn r_gap(a: &LagrangianState, b: &LagrangianState) -> f64 {
    let (ra, rb) = (r_separation(a), r_separation(b));
    sup_norm(&ra.iter().zip(&rb).map(|(p, q)| p - q).collect::<Vec<_>>())
}
