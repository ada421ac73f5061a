//! The maps between Eulerian states and normalised Lagrangian states.
//!
//! `L` labels each point by `ξ = x + μ((-∞, x))`, so an atom of mass `m`
//! becomes a plateau of `y` of width `m`. `M` pushes `H_ξ dξ` forward by `y`,
//! turning every plateau back into an atom.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eulerian::{Atom, EnergyMeasure, EulerianState};
use crate::grid::{sup_norm, Grid};
use crate::dynamics::Y_MONOTONE_TOL;
use crate::interp::eno_cubic;
use crate::lagrangian::{bisect, LagrangianState, PointSample};

/// Relative threshold on `y_ξ` separating density from atoms in `M`.
pub const PLATEAU_EPS_REL: f64 = 1e-10;

/// Relative variation of `U` tolerated across one plateau.
pub const U_PLATEAU_TOL: f64 = 1e-6;

/// Fields below this fraction of their maximum count as outside the support.
const SUPPORT_REL: f64 = 1e-10;

/// Piece of `g(x) = x + μ((-∞, x))` between consecutive breakpoints
/// (nodes and atoms). `g0` is the right limit at `x0`.
#[derive(Debug, Clone, Copy)]
struct Piece {
    x0: f64,
    x1: f64,
    g0: f64,
    d0: f64,
    d1: f64,
}

impl Piece {
    fn len(&self) -> f64 {
        self.x1 - self.x0
    }

    fn g1(&self) -> f64 {
        self.g0 + self.len() * (1.0 + 0.5 * (self.d0 + self.d1))
    }

    /// Solve `g(x) = v` inside the piece.
    fn solve(&self, v: f64) -> f64 {
        let dv = (v - self.g0).max(0.0);
        let l = self.len();
        if l == 0.0 {
            return self.x0;
        }
        // s (1 + d0) + s² (d1 - d0) / (2l) = dv
        let a = (self.d1 - self.d0) / (2.0 * l);
        let b = 1.0 + self.d0;
        let disc = (b * b + 4.0 * a * dv).max(0.0);
        let s = 2.0 * dv / (b + disc.sqrt());
        (self.x0 + s).min(self.x1)
    }
}

fn pieces(mu: &EnergyMeasure) -> Result<Vec<Piece>> {
    let g = &mu.grid;
    let xs = g.nodes();
    let d = &mu.density;
    let mut out = Vec::with_capacity(xs.len() + mu.atoms.len());
    let mut atoms = mu.atoms.iter().peekable();
    if let Some(a) = atoms.peek() {
        if a.location < g.xi_min() || mu.atoms.last().unwrap().location > g.xi_max() {
            return Err(Error::Domain("atom outside the spatial grid".into()));
        }
    }
    let mut acc = 0.0; // μ([xmin, x0]) including atoms at x0
    for i in 0..xs.len() - 1 {
        let (xa, xb) = (xs[i], xs[i + 1]);
        let mut x0 = xa;
        let mut d0 = d[i];
        let slope = (d[i + 1] - d[i]) / (xb - xa);
        while let Some(a) = atoms.next_if(|a| a.location < xb) {
            if a.location > x0 {
                let d1 = d[i] + slope * (a.location - xa);
                let p = Piece { x0, x1: a.location, g0: x0 + acc, d0, d1 };
                acc += p.g1() - p.g0 - p.len();
                out.push(p);
                x0 = a.location;
                d0 = d1;
            }
            acc += a.mass;
        }
        let p = Piece { x0, x1: xb, g0: x0 + acc, d0, d1: d[i + 1] };
        acc += p.g1() - p.g0 - p.len();
        out.push(p);
    }
    Ok(out)
}

/// Where `ξ` lands under `L`: a point off the plateaus, or a plateau at `x`.
enum Label {
    Point(f64),
    Plateau(f64),
}

fn locate_label(pieces: &[Piece], grid: &Grid, total: f64, xi: f64) -> Label {
    if xi <= grid.xi_min() {
        return Label::Point(xi);
    }
    let k = pieces.partition_point(|p| p.g0 <= xi);
    if k == 0 {
        return Label::Plateau(grid.xi_min());
    }
    let p = &pieces[k - 1];
    if xi < p.g1() {
        return Label::Point(p.solve(xi));
    }
    if k == pieces.len() {
        if xi < grid.xi_max() + total {
            // Atom at the right end node.
            return Label::Plateau(grid.xi_max());
        }
        return Label::Point(xi - total);
    }
    Label::Plateau(p.x1)
}

/// Indices of the first and last node where the Eulerian state is not at
/// rest.
fn support(z: &EulerianState) -> Option<(usize, usize)> {
    let scale = sup_norm(&z.u).max(sup_norm(&z.rho)).max(sup_norm(&z.mu.density)).max(1.0);
    let active = |i: usize| {
        z.u[i].abs().max(z.rho[i].abs()).max(z.mu.density[i]) > SUPPORT_REL * scale
    };
    let lo = (0..z.grid.len()).find(|&i| active(i));
    let hi = (0..z.grid.len()).rev().find(|&i| active(i));
    let lo = match (lo, z.mu.atoms.first()) {
        (Some(i), Some(a)) => Some(i.min(z.grid.locate(a.location).0)),
        (None, Some(a)) => Some(z.grid.locate(a.location).0),
        (l, None) => l,
    };
    let hi = match (hi, z.mu.atoms.last()) {
        (Some(i), Some(a)) => Some(i.max((z.grid.locate(a.location).0 + 1).min(z.grid.len() - 1))),
        (None, Some(a)) => Some((z.grid.locate(a.location).0 + 1).min(z.grid.len() - 1)),
        (h, None) => h,
    };
    lo.zip(hi)
}

/// `L`: the normalised Lagrangian state of an Eulerian state.
///
/// `y` is the exact generalised inverse of `x + μ((-∞, x))` with the density
/// read piecewise linearly; `H = ξ - y`. Off plateaus the derivative fields
/// are rebuilt from `e = u² + u_x² + ρ²` at `y` as `y_ξ = 1/(1+e)`,
/// `H_ξ = e/(1+e)`, so `y_ξ + H_ξ = 1` and the pointwise identity between
/// derivatives holds exactly.
pub fn to_lagrangian(z: &EulerianState, grid: Grid) -> Result<LagrangianState> {
    z.validate()?;
    let sg = z.grid;
    let ps = pieces(&z.mu)?;
    let total = z.total_energy();
    let prefix = z.mu.density_prefix();
    if let Some((lo, hi)) = support(z) {
        let x_lo = sg.node(lo);
        let x_hi = sg.node(hi);
        let g_lo = x_lo + z.mu.ac_cumulative(&prefix, x_lo)
            + z.mu.atoms.iter().take_while(|a| a.location < x_lo).map(|a| a.mass).sum::<f64>();
        let g_hi = x_hi + z.mu.cumulative(x_hi)
            + z.mu.atoms.iter().filter(|a| a.location == x_hi).map(|a| a.mass).sum::<f64>();
        let slack = 1e-9 * (1.0 + g_lo.abs().max(g_hi.abs()));
        if grid.xi_min() > g_lo + slack || grid.xi_max() < g_hi - slack {
            return Err(Error::Domain(format!(
                "label grid [{}, {}] does not cover the support image [{g_lo}, {g_hi}]",
                grid.xi_min(),
                grid.xi_max()
            )));
        }
    }
    let samples: Vec<PointSample> = grid
        .nodes()
        .into_iter()
        .map(|xi| match locate_label(&ps, &sg, total, xi) {
            Label::Plateau(x) => PointSample {
                y: x,
                u: field_at(&sg, &z.u, x),
                h: xi - x,
                r: 0.0,
                yxi: 0.0,
                uxi: 0.0,
                hxi: 1.0,
            },
            Label::Point(y) => {
                let (u, ux, rho) = if sg.contains(y) {
                    let (u, ux) = eno_cubic(&sg, &z.u, y);
                    (u, ux, eno_cubic(&sg, &z.rho, y).0)
                } else {
                    (0.0, 0.0, 0.0)
                };
                let e = u * u + ux * ux + rho * rho;
                let yxi = 1.0 / (1.0 + e);
                PointSample { y, u, h: xi - y, r: rho * yxi, yxi, uxi: ux * yxi, hxi: e * yxi }
            }
        })
        .collect();
    Ok(LagrangianState::from_samples(grid, &samples))
}

fn field_at(g: &Grid, f: &[f64], x: f64) -> f64 {
    if g.contains(x) {
        eno_cubic(g, f, x).0
    } else {
        0.0
    }
}

/// Diagnostics of one application of `M`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EulerizeReport {
    /// Absolute `y_ξ` threshold used for the density/atom split.
    pub plateau_eps: f64,
    pub plateaus: usize,
    /// Spatial nodes whose preimage has `y_ξ` below the threshold outside
    /// any plateau (isolated breaking points); density and `ρ` are set to 0.
    pub flagged_nodes: Vec<usize>,
}

/// `M` with the default plateau threshold.
pub fn to_eulerian(x: &LagrangianState, grid: Grid) -> Result<EulerianState> {
    Ok(to_eulerian_report(x, grid, PLATEAU_EPS_REL)?.0)
}

/// `M`: `u = U ∘ y⁻¹`, `μ = y_#(H_ξ dξ)`, `ρ dx = y_#(r dξ)`.
///
/// Maximal runs of cells whose end nodes both have `y_ξ < eps_rel · max y_ξ`
/// are plateaus; each becomes one atom carrying the plateau's `H`
/// increment. Elsewhere the density is `H'/y'` from the ENO
/// interpolants of the primary fields.
pub fn to_eulerian_report(
    x: &LagrangianState,
    grid: Grid,
    eps_rel: f64,
) -> Result<(EulerianState, EulerizeReport)> {
    x.validate()?;
    let tol = Y_MONOTONE_TOL * (1.0 + sup_norm(&x.y));
    if let Some(i) = x.y.windows(2).position(|w| w[1] < w[0] - tol) {
        return Err(Error::Domain(format!("y decreases between labels {i} and {}", i + 1)));
    }
    // Crossings within tolerance are integration noise at a collision.
    let mut owned;
    let x = if x.y.windows(2).any(|w| w[1] < w[0]) {
        owned = x.clone();
        for i in 1..owned.y.len() {
            owned.y[i] = owned.y[i].max(owned.y[i - 1]);
        }
        &owned
    } else {
        x
    };
    let lg = x.grid;
    let n = x.len();
    let eps = eps_rel * x.yxi.iter().cloned().fold(0.0, f64::max).max(f64::MIN_POSITIVE);

    // Cell i is flat when y_ξ vanishes at both ends, or at its left end with
    // no rise of y across it (the carried y_ξ is a right limit).
    // run_end[i] = last node of the plateau containing cell i, if cell i is flat.
    let rise = eps * lg.dx();
    let flat: Vec<bool> = (0..n - 1)
        .map(|i| x.yxi[i] < eps && (x.yxi[i + 1] < eps || x.y[i + 1] - x.y[i] <= rise))
        .collect();
    let mut run_end = vec![None; n - 1];
    let mut atoms = Vec::new();
    let u_scale = U_PLATEAU_TOL * (1.0 + sup_norm(&x.u));
    let mut i = 0;
    while i < n - 1 {
        if !flat[i] {
            i += 1;
            continue;
        }
        let a = i;
        while i < n - 1 && flat[i] {
            i += 1;
        }
        let b = i;
        let spread = x.u[a..=b].iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        if spread.1 - spread.0 > u_scale {
            return Err(Error::ConstraintViolation(format!(
                "U varies by {} on the plateau between labels {} and {}",
                spread.1 - spread.0,
                lg.node(a),
                lg.node(b)
            )));
        }
        for r in run_end.iter_mut().take(b).skip(a) {
            *r = Some(b);
        }
        let mass = x.h[b] - x.h[a];
        if mass > 0.0 {
            atoms.push(Atom { location: x.y[a], mass });
        }
    }
    let plateaus = atoms.len();

    let mut u = Vec::with_capacity(grid.len());
    let mut rho = Vec::with_capacity(grid.len());
    let mut density = Vec::with_capacity(grid.len());
    let mut flagged = Vec::new();
    for (j, xj) in grid.nodes().into_iter().enumerate() {
        let s = if xj < x.y[0] {
            let d = if x.yxi[0] > 0.0 { (xj - x.y[0]) / x.yxi[0] } else { 0.0 };
            lg.xi_min() + d
        } else if xj > x.y[n - 1] {
            let d = if x.yxi[n - 1] > 0.0 { (xj - x.y[n - 1]) / x.yxi[n - 1] } else { 0.0 };
            lg.xi_max() + d
        } else {
            let k = x.y.partition_point(|&v| v <= xj).max(1) - 1;
            if k == n - 1 || x.y[k] == xj {
                lg.node(k)
            } else if let Some(b) = run_end[k] {
                lg.node(b)
            } else {
                bisect(lg.node(k), lg.node(k + 1), |s| eno_cubic(&lg, &x.y, s).0 - xj)
            }
        };
        let p = if lg.contains(s) {
            let (k, _) = lg.locate(s);
            if k + 1 < n && s > lg.node(k) && x.yxi[k] >= eps && x.yxi[k + 1] < eps {
                left_sided(x, k, s)
            } else {
                x.sample(s)
            }
        } else {
            x.sample(s)
        };
        u.push(p.u);
        if p.yxi > eps || !lg.contains(s) {
            let inv = if p.yxi > eps { 1.0 / p.yxi } else { 0.0 };
            rho.push(p.r * inv);
            density.push(p.hxi * inv);
        } else {
            flagged.push(j);
            rho.push(0.0);
            density.push(0.0);
        }
    }

    // Atoms outside the spatial grid cannot be represented.
    if atoms.iter().any(|a| !grid.contains(a.location)) {
        return Err(Error::Domain("plateau maps outside the spatial grid".into()));
    }
    let mu = EnergyMeasure::new(grid, density, atoms)?;
    let z = EulerianState::new(grid, u, rho, mu)?;
    Ok((z, EulerizeReport { plateau_eps: eps, plateaus, flagged_nodes: flagged }))
}

/// Sample in cell `k` whose right node starts a plateau. That node carries
/// the plateau's right limits, so the densities are extrapolated linearly
/// from the left instead.
fn left_sided(x: &LagrangianState, k: usize, s: f64) -> PointSample {
    let mut p = x.sample(s);
    let lg = x.grid;
    let t = (s - lg.node(k)) / lg.dx();
    let from_left = |f: &[f64]| {
        if k > 0 && x.yxi[k - 1] > 0.0 {
            f[k] + t * (f[k] - f[k - 1])
        } else {
            f[k]
        }
    };
    p.yxi = from_left(&x.yxi).max(0.0);
    p.uxi = from_left(&x.uxi);
    p.hxi = from_left(&x.hxi).max(0.0);
    p.r = from_left(&x.r);
    p
}

/// `L ∘ M` on the label grid of `x`.
pub fn roundtrip_f0(x: &LagrangianState, spatial: Grid) -> Result<LagrangianState> {
    to_lagrangian(&to_eulerian(x, spatial)?, x.grid)
}
