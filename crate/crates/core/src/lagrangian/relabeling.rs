use serde::{Deserialize, Serialize};

use super::{LagrangianState, PointSample};
use crate::error::{check_len, Error, Result};
use crate::grid::{sup_norm, Grid};

/// A strictly increasing relabeling `f` with `f - id` bounded, stored as knot
/// values and knot slopes on a grid and evaluated by cubic Hermite
/// interpolation. Outside the grid `f` continues as a translation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Relabeling {
    grid: Grid,
    f: Vec<f64>,
    fxi: Vec<f64>,
}

impl Relabeling {
    pub fn new(grid: Grid, f: Vec<f64>, fxi: Vec<f64>) -> Result<Self> {
        check_len("f", f.len(), grid.len())?;
        check_len("f_xi", fxi.len(), grid.len())?;
        if let Some(i) = f.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::Domain(format!(
                "relabeling is not strictly increasing between knots {i} and {}",
                i + 1
            )));
        }
        if let Some(i) = fxi.iter().position(|d| !(d.is_finite() && *d > 0.0)) {
            return Err(Error::Domain(format!("relabeling slope at knot {i} is {}", fxi[i])));
        }
        Ok(Self { grid, f, fxi })
    }

    pub fn identity(grid: Grid) -> Self {
        Self { grid, f: grid.nodes(), fxi: vec![1.0; grid.len()] }
    }

    /// Knot values only; slopes come from centred differences, limited so
    /// the Hermite interpolant stays monotone.
    pub fn from_knots(grid: Grid, f: Vec<f64>) -> Result<Self> {
        check_len("f", f.len(), grid.len())?;
        let n = f.len();
        let h = grid.dx();
        let sec: Vec<f64> = f.windows(2).map(|w| (w[1] - w[0]) / h).collect();
        let mut d = vec![0.0; n];
        d[0] = sec[0];
        d[n - 1] = sec[n - 2];
        for i in 1..n - 1 {
            d[i] = 0.5 * (sec[i - 1] + sec[i]);
        }
        // Fritsch–Carlson: keep (d_i, d_{i+1}) / secant inside the circle of radius 3.
        for (i, &s) in sec.iter().enumerate() {
            if s <= 0.0 {
                continue;
            }
            let a = d[i] / s;
            let b = d[i + 1] / s;
            let q = a * a + b * b;
            if q > 9.0 {
                let tau = 3.0 / q.sqrt();
                d[i] = tau * a * s;
                d[i + 1] = tau * b * s;
            }
        }
        Self::new(grid, f, d)
    }

    /// Sample an analytic relabeling and its derivative at the knots.
    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64, fprime: impl Fn(f64) -> f64) -> Result<Self> {
        let xs = grid.nodes();
        let vals = xs.iter().map(|&x| f(x)).collect();
        let slopes = xs.iter().map(|&x| fprime(x)).collect();
        Self::new(grid, vals, slopes)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn knots(&self) -> &[f64] {
        &self.f
    }

    pub fn slopes(&self) -> &[f64] {
        &self.fxi
    }

    /// `f(x)` and `f'(x)`.
    pub fn eval(&self, x: f64) -> (f64, f64) {
        let g = &self.grid;
        let n = self.f.len();
        if x <= g.xi_min() {
            return (self.f[0] + (x - g.xi_min()), if x == g.xi_min() { self.fxi[0] } else { 1.0 });
        }
        if x >= g.xi_max() {
            return (
                self.f[n - 1] + (x - g.xi_max()),
                if x == g.xi_max() { self.fxi[n - 1] } else { 1.0 },
            );
        }
        let (i, t) = g.locate(x);
        if t == 0.0 {
            return (self.f[i], self.fxi[i]);
        }
        hermite(self.f[i], self.f[i + 1], self.fxi[i], self.fxi[i + 1], g.dx(), t)
    }

    /// `f⁻¹(v)` and its derivative `1 / f'(f⁻¹(v))`.
    pub fn inverse_at(&self, v: f64) -> (f64, f64) {
        let g = &self.grid;
        let n = self.f.len();
        if v <= self.f[0] {
            let x = g.xi_min() + (v - self.f[0]);
            return (x, 1.0 / self.eval(x).1);
        }
        if v >= self.f[n - 1] {
            let x = g.xi_max() + (v - self.f[n - 1]);
            return (x, 1.0 / self.eval(x).1);
        }
        let j = self.f.partition_point(|&fv| fv <= v) - 1;
        if self.f[j] == v {
            return (g.node(j), 1.0 / self.fxi[j]);
        }
        let x = bisect(g.node(j), g.node(j + 1), |x| self.eval(x).0 - v);
        (x, 1.0 / self.eval(x).1)
    }

    pub fn inverse(&self) -> Result<Self> {
        let (f, fxi) = self.grid.nodes().into_iter().map(|x| self.inverse_at(x)).unzip();
        Self::new(self.grid, f, fxi)
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Relabeling) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::Structural("relabelings live on different grids".into()));
        }
        let (f, fxi) = other
            .f
            .iter()
            .zip(&other.fxi)
            .map(|(&gv, &gd)| {
                let (v, d) = self.eval(gv);
                (v, d * gd)
            })
            .unzip();
        Self::new(self.grid, f, fxi)
    }

    /// `‖f - id‖_{W^{1,∞}} + ‖f⁻¹ - id‖_{W^{1,∞}}` over the knots.
    ///
    /// On the knots `sup |f⁻¹ - id|` equals `sup |f - id|`, and the slope of
    /// the inverse is `1 / f_ξ`.
    pub fn kappa(&self) -> f64 {
        let shift = self
            .f
            .iter()
            .zip(self.grid.nodes())
            .map(|(v, x)| v - x)
            .collect::<Vec<_>>();
        let s = sup_norm(&shift);
        let d = self.fxi.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
        let di = self.fxi.iter().map(|v| (1.0 / v - 1.0).abs()).fold(0.0, f64::max);
        2.0 * s + d + di
    }

    pub fn in_g_kappa(&self, kappa: f64) -> bool {
        self.kappa() <= kappa
    }
}

fn hermite(f0: f64, f1: f64, d0: f64, d1: f64, h: f64, t: f64) -> (f64, f64) {
    let t2 = t * t;
    let t3 = t2 * t;
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + t;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    let v = h00 * f0 + h10 * h * d0 + h01 * f1 + h11 * h * d1;
    let dh00 = 6.0 * t2 - 6.0 * t;
    let dh10 = 3.0 * t2 - 4.0 * t + 1.0;
    let dh01 = -6.0 * t2 + 6.0 * t;
    let dh11 = 3.0 * t2 - 2.0 * t;
    let d = (dh00 * f0 + dh01 * f1) / h + dh10 * d0 + dh11 * d1;
    (v, d)
}

/// Root of `g` in `[a, b]` assuming `g(a) <= 0 <= g(b)`, to machine precision.
pub(crate) fn bisect(mut a: f64, mut b: f64, g: impl Fn(f64) -> f64) -> f64 {
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if g(m) < 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Violation of the derivative identity, relative to the squared local
/// density, above which a sampled point is repaired.
pub const IDENTITY_REPAIR_TOL: f64 = 1e-6;

/// The relabeled state `X ∘ f`: primary fields are composed, densities are
/// composed and multiplied by `f_ξ`.
///
/// A sample taken inside a cell across which the densities jump mixes
/// values from both sides and can break the identity at O(1). Such samples
/// are repaired by [`repair_identity`].
pub fn relabel(x: &LagrangianState, f: &Relabeling) -> Result<LagrangianState> {
    if x.grid != f.grid {
        return Err(Error::Structural("state and relabeling live on different grids".into()));
    }
    let samples: Vec<PointSample> = f
        .f
        .iter()
        .zip(&f.fxi)
        .map(|(&s, &ds)| repair_identity(scale_densities(x.sample(s), ds)))
        .collect();
    Ok(LagrangianState::from_samples(x.grid, &samples))
}

fn scale_densities(p: PointSample, ds: f64) -> PointSample {
    PointSample {
        r: p.r * ds,
        yxi: p.yxi * ds,
        uxi: p.uxi * ds,
        hxi: p.hxi * ds,
        ..p
    }
}

/// Restore `y_ξ H_ξ = y_ξ² U² + U_ξ² + r²` at a sample whose residual
/// exceeds [`IDENTITY_REPAIR_TOL`] times `(y_ξ + H_ξ)²`.
///
/// `y_ξ` and `H_ξ` are kept when `U_ξ, r` can be rescaled to fit; otherwise
/// `H_ξ` is recomputed from the rest.
pub fn repair_identity(p: PointSample) -> PointSample {
    let lhs = p.yxi * p.hxi;
    let q = p.uxi * p.uxi + p.r * p.r;
    let rhs = p.yxi * p.yxi * p.u * p.u + q;
    if (lhs - rhs).abs() <= IDENTITY_REPAIR_TOL * (p.yxi + p.hxi).powi(2) {
        return p;
    }
    let target = lhs - p.yxi * p.yxi * p.u * p.u;
    if target >= 0.0 && q > 0.0 {
        let k = (target / q).sqrt();
        return PointSample { uxi: p.uxi * k, r: p.r * k, ..p };
    }
    if p.yxi > 0.0 {
        return PointSample { hxi: rhs / p.yxi, ..p };
    }
    PointSample { uxi: 0.0, r: 0.0, ..p }
}

/// Solve `y(s) + H(s) = target` for the label `s`.
pub(crate) fn solve_w(x: &LagrangianState, w: &[f64], target: f64) -> f64 {
    let g = &x.grid;
    let n = w.len();
    if target <= w[0] {
        let slope = x.yxi[0] + x.hxi[0];
        return g.xi_min() + (target - w[0]) / slope;
    }
    if target >= w[n - 1] {
        let slope = x.yxi[n - 1] + x.hxi[n - 1];
        return g.xi_max() + (target - w[n - 1]) / slope;
    }
    let j = w.partition_point(|&v| v <= target) - 1;
    if w[j] == target {
        return g.node(j);
    }
    bisect(g.node(j), g.node(j + 1), |s| x.sample_w(s) - target)
}

fn check_w_increasing(x: &LagrangianState, w: &[f64]) -> Result<()> {
    let scale = sup_norm(w).max(1.0);
    if let Some(i) = w.windows(2).position(|p| !(p[1] - p[0] > -1e-12 * scale)) {
        return Err(Error::Domain(format!(
            "y + H decreases between nodes {i} and {} ({} -> {})",
            i + 1,
            w[i],
            w[i + 1]
        )));
    }
    if let Some(i) = (0..x.len()).position(|i| !(x.yxi[i] + x.hxi[i] > 0.0)) {
        return Err(Error::Domain(format!("y_xi + H_xi vanishes at node {i}")));
    }
    Ok(())
}

/// The relabeling `(y + H)⁻¹` that carries `x` onto the normalised section.
pub fn normalizing_relabeling(x: &LagrangianState) -> Result<Relabeling> {
    let w = x.w();
    check_w_increasing(x, &w)?;
    let (f, fxi) = x
        .grid
        .nodes()
        .into_iter()
        .map(|t| {
            let s = solve_w(x, &w, t);
            let p = x.sample(s);
            (s, 1.0 / (p.yxi + p.hxi))
        })
        .unzip();
    Relabeling::new(x.grid, f, fxi)
}

/// Projection onto the section `y + H = id`: `Π(X) = X ∘ (y + H)⁻¹`.
///
/// Interpolating `H` across a kink inside a cell can overshoot by O(dξ).
/// Each increment of `H` is then clamped to `[0, dξ]`, which keeps `y` and
/// `H` nondecreasing with `y + H = ξ`; samples that already comply are
/// left untouched.
pub fn project_f0(x: &LagrangianState) -> Result<LagrangianState> {
    let mut p = relabel(x, &normalizing_relabeling(x)?)?;
    let h = p.grid.dx();
    for k in 1..p.len() {
        let (lo, hi) = (p.h[k - 1], p.h[k - 1] + h);
        if p.h[k] < lo || p.h[k] > hi {
            p.h[k] = p.h[k].clamp(lo, hi);
            p.y[k] = p.grid.node(k) - p.h[k];
        }
    }
    Ok(p)
}

/// Left-continuous generalised inverse `w⁻¹(v) = sup { ξ : w(ξ) < v }` of a
/// nondecreasing sampled map, read piecewise linearly and continued with
/// unit slope beyond the samples, evaluated at the nodes of `target`.
///
/// On a plateau `w ≡ v` the strict inequality selects the plateau's left
/// end; immediately above `v` the inverse has jumped to the right end.
pub fn invert_monotone(w: &[f64], source: &Grid, target: &Grid) -> Result<Vec<f64>> {
    check_len("w", w.len(), source.len())?;
    let scale = sup_norm(w).max(1.0);
    if let Some(i) = w.windows(2).position(|p| p[1] < p[0] - 1e-12 * scale) {
        return Err(Error::Domain(format!("map decreases between nodes {i} and {}", i + 1)));
    }
    let n = w.len();
    let h = source.dx();
    Ok(target
        .nodes()
        .into_iter()
        .map(|v| {
            // Number of samples strictly below v.
            let k = w.partition_point(|&wi| wi < v);
            if k == 0 {
                source.xi_min() + (v - w[0])
            } else if k == n {
                source.xi_max() + (v - w[n - 1])
            } else {
                let i = k - 1;
                source.node(i) + h * (v - w[i]) / (w[i + 1] - w[i])
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lagrangian::{check_in_g, concentrated_energy_state, lagcoord3_residual, TOL_CONSTRAINT};

    fn bump_relabeling(grid: Grid, a: f64) -> Relabeling {
        // f(ξ) = ξ + a·exp(-ξ²), strictly increasing for |a| < sqrt(e/2).
        Relabeling::from_fn(
            grid,
            |x| x + a * (-x * x).exp(),
            |x| 1.0 - 2.0 * a * x * (-x * x).exp(),
        )
        .unwrap()
    }

    #[test]
    fn repair_restores_the_identity() {
        let res = |p: &PointSample| lagcoord3_residual(p.yxi, p.u, p.uxi, p.hxi, p.r);
        let ok = PointSample { y: 0.0, u: 0.5, h: 0.0, r: 0.3, yxi: 0.5, uxi: 0.2, hxi: 0.0 };
        let ok = PointSample { hxi: (0.25 * 0.25 + 0.04 + 0.09) / 0.5, ..ok };
        assert_eq!(repair_identity(ok), ok);
        let mixed = PointSample { uxi: -0.6, ..ok };
        let fixed = repair_identity(mixed);
        assert!(res(&fixed) < 1e-14 && fixed.yxi == ok.yxi && fixed.hxi == ok.hxi);
        let steep = PointSample { hxi: 0.01, ..ok };
        let fixed = repair_identity(steep);
        assert!(res(&fixed) < 1e-14 && fixed.uxi == ok.uxi);
        let flat = PointSample { yxi: 0.0, hxi: 1.0, ..ok };
        let fixed = repair_identity(flat);
        assert_eq!((fixed.uxi, fixed.r), (0.0, 0.0));
    }

    #[test]
    fn rejects_non_monotone_knots() {
        let g = Grid::new(0.0, 1.0, 5).unwrap();
        let f = vec![0.0, 0.3, 0.2, 0.7, 1.0];
        assert!(matches!(Relabeling::from_knots(g, f), Err(Error::Domain(_))));
    }

    #[test]
    fn identity_relabeling_leaves_state_unchanged() {
        let g = Grid::new(-3.0, 4.0, 71).unwrap();
        let x = concentrated_energy_state(g, 1.0);
        let y = relabel(&x, &Relabeling::identity(g)).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn inverse_and_compose_round_trip() {
        let g = Grid::new(-5.0, 5.0, 201).unwrap();
        let f = bump_relabeling(g, 0.3);
        let id = f.compose(&f.inverse().unwrap()).unwrap();
        for (v, x) in id.knots().iter().zip(g.nodes()) {
            assert!((v - x).abs() < 1e-9);
        }
        for d in id.slopes() {
            assert!((d - 1.0).abs() < 1e-6);
        }
        assert!(f.kappa() > 0.0 && Relabeling::identity(g).kappa() == 0.0);
    }

    #[test]
    fn shift_moves_the_plateau_left() {
        // Grid commensurate with 1/2 so the shifted labels land on nodes.
        let g = Grid::new(-4.0, 5.0, 181).unwrap();
        let x = concentrated_energy_state(g, 1.0);
        let f = Relabeling::from_fn(g, |s| s + 0.5, |_| 1.0).unwrap();
        let z = relabel(&x, &f).unwrap();
        for (i, xi) in g.nodes().into_iter().enumerate() {
            let s = xi + 0.5;
            let (y, h) = if s < 0.0 {
                (s, 0.0)
            } else if s < 1.0 {
                (0.0, s)
            } else {
                (s - 1.0, 1.0)
            };
            assert!((z.y[i] - y).abs() < 1e-12, "y at {xi}");
            assert!((z.h[i] - h).abs() < 1e-12, "H at {xi}");
            let on_plateau = (-0.5..0.5).contains(&xi);
            assert_eq!(z.hxi[i], if on_plateau { 1.0 } else { 0.0 }, "Hxi at {xi}");
        }
    }

    #[test]
    fn invert_identity() {
        let g = Grid::new(-2.0, 2.0, 41).unwrap();
        let inv = invert_monotone(&g.nodes(), &g, &g).unwrap();
        for (a, b) in inv.iter().zip(g.nodes()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn invert_plateau_takes_strict_inequality_convention() {
        // w = ξ for ξ < 0, 0 on [0, 1], ξ - 1 beyond: a flat step of width 1.
        let src = Grid::new(-3.0, 4.0, 71).unwrap();
        let w: Vec<f64> = src
            .nodes()
            .iter()
            .map(|&x| if x < 0.0 { x } else if x <= 1.0 { 0.0 } else { x - 1.0 })
            .collect();
        let tgt = Grid::new(-1.0, 1.0, 5).unwrap(); // -1, -0.5, 0, 0.5, 1
        let inv = invert_monotone(&w, &src, &tgt).unwrap();
        let want = [-1.0, -0.5, 0.0, 1.5, 2.0];
        for (a, b) in inv.iter().zip(want) {
            assert!((a - b).abs() < 1e-12, "{inv:?}");
        }
        // Just above the plateau height the inverse has jumped by the plateau width.
        let tiny = Grid::new(1e-9, 1.0, 3).unwrap();
        let inv = invert_monotone(&w, &src, &tiny).unwrap();
        assert!((inv[0] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn invert_concentrated_w_by_hand() {
        // y + H for the concentrated state: ξ for ξ < 0, ξ on [0, 1), ξ beyond.
        // It is the identity, so its inverse is too.
        let g = Grid::new(-3.0, 4.0, 71).unwrap();
        let x = concentrated_energy_state(g, 1.0);
        let inv = invert_monotone(&x.w(), &g, &g).unwrap();
        for (a, b) in inv.iter().zip(g.nodes()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn invert_rejects_decreasing_maps() {
        let g = Grid::new(0.0, 1.0, 3).unwrap();
        assert!(invert_monotone(&[0.0, 1.0, 0.5], &g, &g).is_err());
    }

    #[test]
    fn projection_fixes_normalised_states() {
        let g = Grid::new(-3.0, 4.0, 71).unwrap();
        let x = concentrated_energy_state(g, 1.0);
        let p = project_f0(&x).unwrap();
        assert!(p.sup_distance(&x) < 1e-12);
        let rep = check_in_g(&p, TOL_CONSTRAINT).unwrap();
        assert!(rep.in_f0);
    }

    #[test]
    fn projection_undoes_a_relabeling_of_the_concentrated_state() {
        let g = Grid::new(-4.0, 5.0, 181).unwrap();
        let x = concentrated_energy_state(g, 1.0);
        let f = Relabeling::from_fn(g, |s| s + 0.5, |_| 1.0).unwrap();
        let p = project_f0(&relabel(&x, &f).unwrap()).unwrap();
        assert!(p.sup_distance(&x) < 1e-12);
    }
}
