//! Named initial data and the grids they are discretised on.

use ch2_core::eulerian::EulerianState;
use ch2_core::grid::Grid;
use ch2_core::oracles::{
    collision_state, crest_aligned_grid, crest_labels, multipeakon, peakon_antipeakon_exact, Peakon,
};
use ch2_core::lagrangian::LagrangianState;
use ch2_core::transforms::to_lagrangian;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use serde_json::Value;

use crate::config::GridSection;
use crate::error::{setup, CliError};

#[derive(Debug, Clone, PartialEq)]
pub enum Scenario {
    Ground,
    SinglePeakon { c: f64, x0: f64 },
    /// Peakon at `-a` with height `c`, antipeakon at `a`.
    PeakonAntipeakon { c: f64, a: f64 },
    /// `(0, 0, E δ_0)`.
    Collision { energy: f64 },
    /// Seeded sums of gaussians for `u` and a nonnegative `ρ`.
    Smooth { bumps: usize, amplitude: f64, rho_amplitude: f64, width: f64 },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NoParams {}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PeakonParams {
    #[serde(default = "one")]
    c: f64,
    #[serde(default)]
    x0: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PairParams {
    #[serde(default = "one")]
    c: f64,
    #[serde(default = "five")]
    a: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CollisionParams {
    #[serde(default = "one")]
    energy: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SmoothParams {
    #[serde(default = "three")]
    bumps: usize,
    #[serde(default = "one")]
    amplitude: f64,
    #[serde(default = "half")]
    rho_amplitude: f64,
    #[serde(default = "one")]
    width: f64,
}

fn one() -> f64 {
    1.0
}

fn five() -> f64 {
    5.0
}

fn half() -> f64 {
    0.5
}

fn three() -> usize {
    3
}

fn params<T: for<'de> Deserialize<'de>>(name: &str, v: Value) -> Result<T, CliError> {
    serde_json::from_value(v).map_err(|e| CliError::Config(format!("scenario_params of {name}: {e}")))
}

impl Scenario {
    pub fn parse(name: &str, v: Value) -> Result<Self, CliError> {
        let s = match name {
            "ground" => {
                params::<NoParams>(name, v)?;
                Scenario::Ground
            }
            "single_peakon" => {
                let p: PeakonParams = params(name, v)?;
                Scenario::SinglePeakon { c: p.c, x0: p.x0 }
            }
            "peakon_antipeakon" => {
                let p: PairParams = params(name, v)?;
                Scenario::PeakonAntipeakon { c: p.c, a: p.a }
            }
            "collision" => {
                let p: CollisionParams = params(name, v)?;
                Scenario::Collision { energy: p.energy }
            }
            "smooth" => {
                let p: SmoothParams = params(name, v)?;
                Scenario::Smooth {
                    bumps: p.bumps,
                    amplitude: p.amplitude,
                    rho_amplitude: p.rho_amplitude,
                    width: p.width,
                }
            }
            other => {
                return Err(CliError::Config(format!(
                    "unknown scenario {other:?}; expected ground, single_peakon, peakon_antipeakon, collision or smooth"
                )))
            }
        };
        Ok(s)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Scenario::Ground => "ground",
            Scenario::SinglePeakon { .. } => "single_peakon",
            Scenario::PeakonAntipeakon { .. } => "peakon_antipeakon",
            Scenario::Collision { .. } => "collision",
            Scenario::Smooth { .. } => "smooth",
        }
    }

    fn peakons(&self) -> Vec<Peakon> {
        match *self {
            Scenario::SinglePeakon { c, x0 } => vec![Peakon { c, x0 }],
            Scenario::PeakonAntipeakon { c, a } => vec![Peakon { c, x0: -a }, Peakon { c: -c, x0: a }],
            _ => Vec::new(),
        }
    }

    pub fn eulerian(&self, grid: Grid, seed: u64) -> Result<EulerianState, CliError> {
        match *self {
            Scenario::Ground => Ok(EulerianState::zero(grid)),
            Scenario::SinglePeakon { c, .. } | Scenario::PeakonAntipeakon { c, .. } if c == 0.0 || !c.is_finite() => {
                Err(CliError::Config(format!("peakon height must be finite and nonzero, got {c}")))
            }
            Scenario::PeakonAntipeakon { a, .. } if !(a > 0.0 && a.is_finite()) => {
                Err(CliError::Config(format!("half distance a must be positive, got {a}")))
            }
            Scenario::SinglePeakon { .. } | Scenario::PeakonAntipeakon { .. } => {
                multipeakon(&self.peakons(), grid).map_err(setup)
            }
            Scenario::Collision { energy } => collision_state(energy, grid).map_err(setup),
            Scenario::Smooth { bumps, amplitude, rho_amplitude, width } => {
                if !(width > 0.0) || !amplitude.is_finite() || !(rho_amplitude >= 0.0) {
                    return Err(CliError::Config("smooth needs width > 0 and rho_amplitude >= 0".into()));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut gaussians = |amp: f64| -> Vec<(f64, f64, f64)> {
                    (0..bumps)
                        .map(|_| {
                            let a = amp * rng.gen_range(-1.0..=1.0);
                            (a, rng.gen_range(-3.0..=3.0), width * rng.gen_range(0.5..=1.5))
                        })
                        .collect()
                };
                let ub = gaussians(amplitude);
                let rb = gaussians(rho_amplitude);
                let eval = |bs: &[(f64, f64, f64)], x: f64, abs: bool| -> f64 {
                    bs.iter()
                        .map(|&(a, c, w)| if abs { a.abs() } else { a } * (-((x - c) / w).powi(2)).exp())
                        .sum()
                };
                let nodes = grid.nodes();
                let u = nodes.iter().map(|&x| eval(&ub, x, false)).collect();
                let rho = nodes.iter().map(|&x| eval(&rb, x, true)).collect();
                EulerianState::from_fields(grid, u, rho).map_err(setup)
            }
        }
    }

    /// Exact `u(t, x)` where one is known.
    pub fn exact_u(&self, t: f64, x: f64) -> Option<f64> {
        match *self {
            Scenario::Ground => Some(0.0),
            Scenario::SinglePeakon { c, x0 } => Some(c * (-(x - x0 - c * t).abs()).exp()),
            Scenario::PeakonAntipeakon { c, a } => Some(match peakon_antipeakon_exact(c, a, t) {
                Some((p, q)) => p * ((-(x + q).abs()).exp() - (-(x - q).abs()).exp()),
                None => 0.0,
            }),
            _ => None,
        }
    }
}

/// Spatial grid, label grid and the two initial states of one scenario.
#[derive(Debug, Clone)]
pub struct Setup {
    pub spatial: Grid,
    pub eulerian: EulerianState,
    pub lagrangian: LagrangianState,
}

/// Spatial grid `[xi_min, xi_max]`, refined `2^level` times.
pub fn spatial_grid(g: &GridSection, level: usize) -> Result<Grid, CliError> {
    let n = g.spatial_n.unwrap_or(3 * (g.n - 1) + 1);
    Grid::new(g.xi_min, g.xi_max, ((n - 1) << level) + 1).map_err(setup)
}

/// Label spacing of `g`, refined `2^level` times.
pub fn label_spacing(g: &GridSection, level: usize) -> f64 {
    (g.xi_max - g.xi_min) / (((g.n - 1) << level) as f64)
}

/// Label grid from `xi_min` past `xi_max + energy` with spacing `h`.
pub fn plain_label_grid(g: &GridSection, h: f64, energy: f64) -> Result<Grid, CliError> {
    let cells = ((g.xi_max + energy - g.xi_min) / h * (1.0 - 1e-12)).ceil() as usize;
    Grid::anchored(g.xi_min, 0, h, cells + 1).map_err(setup)
}

/// Initial states on the grids of `g` at refinement `level`.
pub fn build(s: &Scenario, g: &GridSection, level: usize, seed: u64) -> Result<Setup, CliError> {
    let spatial = spatial_grid(g, level)?;
    let eulerian = s.eulerian(spatial, seed)?;
    let h = label_spacing(g, level);
    let energy = eulerian.total_energy();
    let peakons = s.peakons();
    let labels = if g.align_crests && !peakons.is_empty() {
        let crests = crest_labels(&eulerian, &peakons);
        crest_aligned_grid(&crests, g.xi_min, g.xi_max + energy, h).map_err(setup)?
    } else {
        plain_label_grid(g, h, energy)?
    };
    let lagrangian = to_lagrangian(&eulerian, labels).map_err(setup)?;
    Ok(Setup { spatial, eulerian, lagrangian })
}
