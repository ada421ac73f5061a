//! Reference solutions and brute-force versions of the fast operations.

use crate::dynamics::KernelValues;
use crate::error::{Error, Result};
use crate::eulerian::{Atom, EnergyMeasure, EulerianState};
use crate::grid::Grid;
use crate::interp::eno_cubic;
use crate::lagrangian::{bisect, LagrangianState, PointSample};

/// One peakon `c · e^{-|x - x0|}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peakon {
    pub c: f64,
    pub x0: f64,
}

/// `u` and the right limit of `u_x` of a sum of peakons.
pub fn peakon_sum(peakons: &[Peakon], x: f64) -> (f64, f64) {
    peakons.iter().fold((0.0, 0.0), |(u, ux), p| {
        let s = x - p.x0;
        let e = p.c * (-s.abs()).exp();
        let sgn = if s >= 0.0 { 1.0 } else { -1.0 };
        (u + e, ux - sgn * e)
    })
}

/// Superposition of peakons with `ρ = 0` and `μ = (u² + u_x²) dx`, the
/// density taken from the exact derivative.
pub fn multipeakon(peakons: &[Peakon], grid: Grid) -> Result<EulerianState> {
    let (u, density): (Vec<f64>, Vec<f64>) = grid
        .nodes()
        .into_iter()
        .map(|x| {
            let (u, ux) = peakon_sum(peakons, x);
            (u, u * u + ux * ux)
        })
        .unzip();
    let mu = EnergyMeasure::new(grid, density, Vec::new())?;
    EulerianState::new(grid, u, vec![0.0; grid.len()], mu)
}

pub fn single_peakon(c: f64, x0: f64, grid: Grid) -> Result<EulerianState> {
    if c == 0.0 || !c.is_finite() {
        return Err(Error::Domain(format!("peakon height must be nonzero, got {c}")));
    }
    multipeakon(&[Peakon { c, x0 }], grid)
}

/// `c e^{-|x+a|} - c e^{-|x-a|}`: a peakon at `-a` moving right towards an
/// antipeakon at `a`.
pub fn peakon_antipeakon(c: f64, a: f64, grid: Grid) -> Result<EulerianState> {
    if c == 0.0 || !(a > 0.0) {
        return Err(Error::Domain("need c ≠ 0 and a > 0".into()));
    }
    multipeakon(&[Peakon { c, x0: -a }, Peakon { c: -c, x0: a }], grid)
}

/// Exact state of the pair above: `(p(t), q(t))` with
/// `u = p (e^{-|x+q|} - e^{-|x-q|})`.
///
/// Before the collision `p² (1 - e^{-2q})` is conserved and
/// `e^{q(t)} = cosh(arccosh(e^a) - √K t)`. The conservative continuation is
/// the time reflection `u(t_c + s, x) = -u(t_c - s, x)`. At `t_c` itself
/// `u ≡ 0` and `None` is returned.
pub fn peakon_antipeakon_exact(c: f64, a: f64, t: f64) -> Option<(f64, f64)> {
    let k = c * c * (1.0 - (-2.0 * a).exp());
    let s = a.exp().acosh() - k.sqrt() * t;
    if s == 0.0 {
        return None;
    }
    let q = s.abs().cosh().ln();
    let p = s.signum() * c.signum() * (k / (1.0 - (-2.0 * q).exp())).sqrt();
    Some((p, q))
}

/// Time at which the pair annihilates in `L^∞`.
pub fn peakon_antipeakon_collision_time(c: f64, a: f64) -> f64 {
    a.exp().acosh() / (c.abs() * (1.0 - (-2.0 * a).exp()).sqrt())
}

/// Label grid covering `[lo, hi]` with spacing close to `h` on which every
/// crest label sits at a cell midpoint.
///
/// One crest fixes the offset; with two crests the spacing is shrunk so
/// their distance is a whole number of cells. The trapezoid rule then stays
/// second order across the jump of the kernel integrand at a crest.
pub fn crest_aligned_grid(crests: &[f64], lo: f64, hi: f64, h: f64) -> Result<Grid> {
    let (first, h) = match crests {
        [c] => (*c, h),
        [c1, c2] => {
            let d = (c2 - c1).abs();
            (c1.min(*c2), d / (d / h).round().max(1.0))
        }
        _ => return Err(Error::Domain("crest alignment supports one or two crests".into())),
    };
    let anchor = first - 0.5 * h;
    let below = ((anchor - lo) / h).ceil().max(0.0) as usize;
    let above = ((hi - anchor) / h).ceil().max(0.0) as usize;
    Grid::anchored(anchor, below, h, below + above + 1)
}

/// Labels of the peakon crests under `L` for an atom-free state.
pub fn crest_labels(z: &EulerianState, peakons: &[Peakon]) -> Vec<f64> {
    peakons.iter().map(|p| p.x0 + z.mu.cumulative(p.x0)).collect()
}

/// `(0, 0, E δ_0)`; `E = 0` gives the zero state.
pub fn collision_state(energy: f64, grid: Grid) -> Result<EulerianState> {
    if !(energy >= 0.0 && energy.is_finite()) {
        return Err(Error::Domain(format!("energy must be nonnegative, got {energy}")));
    }
    let atoms = if energy > 0.0 { vec![Atom { location: 0.0, mass: energy }] } else { Vec::new() };
    let mu = EnergyMeasure::new(grid, vec![0.0; grid.len()], atoms)?;
    EulerianState::new(grid, vec![0.0; grid.len()], vec![0.0; grid.len()], mu)
}

/// Direct O(N²) trapezoid sums for `P` and `Q`.
pub fn brute_force_kernels(x: &LagrangianState) -> KernelValues {
    let n = x.len();
    let w = x.grid.trapezoid_weights();
    let gw: Vec<f64> = (0..n).map(|j| (x.u[j] * x.u[j] * x.yxi[j] + x.hxi[j]) * w[j]).collect();
    let mut p = vec![0.0; n];
    let mut q = vec![0.0; n];
    for i in 0..n {
        let (mut sp, mut sq) = (0.0, 0.0);
        for j in 0..n {
            let e = (-(x.y[i] - x.y[j]).abs()).exp() * gw[j];
            sp += e;
            sq += match i.cmp(&j) {
                std::cmp::Ordering::Greater => e,
                std::cmp::Ordering::Less => -e,
                std::cmp::Ordering::Equal => 0.0,
            };
        }
        p[i] = 0.25 * sp;
        q[i] = -0.25 * sq;
    }
    KernelValues { p, q }
}

/// `L` for atom-free measures by per-node bisection on `x + μ((-∞, x)) = ξ`.
pub fn bisection_l(z: &EulerianState, grid: Grid) -> Result<LagrangianState> {
    if !z.mu.atoms.is_empty() {
        return Err(Error::Domain("bisection inverse needs an atom-free measure".into()));
    }
    let sg = z.grid;
    let prefix = z.mu.density_prefix();
    let total = prefix[prefix.len() - 1];
    let g = |x: f64| x + z.mu.ac_cumulative(&prefix, x);
    let samples: Vec<PointSample> = grid
        .nodes()
        .into_iter()
        .map(|xi| {
            let y = bisect(xi - total - 1.0, xi + 1.0, |x| g(x) - xi);
            let (u, ux, rho) = if sg.contains(y) {
                let (u, ux) = eno_cubic(&sg, &z.u, y);
                (u, ux, eno_cubic(&sg, &z.rho, y).0)
            } else {
                (0.0, 0.0, 0.0)
            };
            let e = u * u + ux * ux + rho * rho;
            let yxi = 1.0 / (1.0 + e);
            PointSample { y, u, h: xi - y, r: rho * yxi, yxi, uxi: ux * yxi, hxi: e * yxi }
        })
        .collect();
    Ok(LagrangianState::from_samples(grid, &samples))
}
