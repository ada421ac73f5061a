//! Random states and relabelings shared by the integration tests.
#![allow(dead_code)]

use ch2_core::lagrangian::{LagrangianState, Relabeling};
use ch2_core::Grid;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;
pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `Σ a_k exp(-((ξ - c_k)/s_k)²)` and its derivative.
#[derive(Debug, Clone)]
pub struct Bumps(Vec<(f64, f64, f64)>);

impl Bumps {
    pub fn random(rng: &mut TestRng, count: usize, amp: f64, centre: f64) -> Self {
        Bumps(
            (0..count)
                .map(|_| (rng.gen_range(-amp..amp), rng.gen_range(-centre..centre), rng.gen_range(0.6..1.5)))
                .collect(),
        )
    }

    pub fn eval(&self, x: f64) -> (f64, f64) {
        self.0.iter().fold((0.0, 0.0), |(v, d), &(a, c, s)| {
            let z = (x - c) / s;
            let e = a * (-z * z).exp();
            (v + e, d - 2.0 * z / s * e)
        })
    }
}

/// `1` on `[-6, 6]`, `cos²` taper to `0` at `|ξ| = 9`.
fn window(s: f64) -> f64 {
    let d = ((s.abs() - 6.0) / 3.0).clamp(0.0, 1.0);
    (std::f64::consts::FRAC_PI_2 * d).cos().powi(2)
}

/// A smooth state satisfying the derivative identity exactly at every node,
/// `y` and `H` integrated by the trapezoid rule from `y(ξ_min) = ξ_min`,
/// `H(ξ_min) = 0`. With `positive_r`, `r / y_ξ ≥ 0.5` on `[-6, 6]` and
/// tapers to zero outside so the energy stays finite.
pub fn random_state(rng: &mut TestRng, grid: Grid, positive_r: bool) -> LagrangianState {
    let ub = Bumps::random(rng, 3, 0.8, 2.5);
    let rb = Bumps::random(rng, 2, 0.6, 2.5);
    let yb = Bumps::random(rng, 2, 0.5, 2.5);
    let n = grid.len();
    let mut x = LagrangianState::ground(grid);
    for (i, s) in grid.nodes().into_iter().enumerate() {
        let (u, du) = ub.eval(s);
        let yx = yb.eval(s).0.exp();
        let r = if positive_r { 0.5 * (1.0 + rb.eval(s).0.abs()) * yx * window(s) } else { rb.eval(s).0 };
        x.u[i] = u;
        x.yxi[i] = yx;
        x.uxi[i] = du;
        x.r[i] = r;
        x.hxi[i] = (yx * yx * u * u + du * du + r * r) / yx;
    }
    let y = grid.cumulative_trapezoid(&x.yxi);
    x.y = y.iter().map(|v| v + grid.xi_min()).collect();
    x.h = grid.cumulative_trapezoid(&x.hxi);
    debug_assert_eq!(x.len(), n);
    x
}

/// `f(ξ) = ξ + Σ bumps` with `sup |f - id|`, `sup |f' - 1|` small enough
/// for `f ∈ G_κ`.
pub fn random_relabeling(rng: &mut TestRng, grid: Grid, kappa: f64) -> Relabeling {
    loop {
        let b = Bumps::random(rng, 2, 0.5 * kappa, 3.0);
        let f = Relabeling::from_fn(grid, |s| s + b.eval(s).0, |s| 1.0 + b.eval(s).1).unwrap();
        if f.in_g_kappa(kappa) {
            return f;
        }
    }
}
