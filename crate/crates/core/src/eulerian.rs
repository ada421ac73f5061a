//! Eulerian states `(u, ρ, μ)` with an energy measure made of a sampled
//! density and finitely many atoms.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::grid::Grid;
use crate::interp::eno_cubic;

/// Point mass of the energy measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub location: f64,
    pub mass: f64,
}

/// `μ = density dx + Σ mass δ_location`.
///
/// The density is read piecewise linearly between nodes and vanishes
/// outside the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyMeasure {
    pub grid: Grid,
    pub density: Vec<f64>,
    pub atoms: Vec<Atom>,
}

impl EnergyMeasure {
    pub fn new(grid: Grid, density: Vec<f64>, atoms: Vec<Atom>) -> Result<Self> {
        let m = Self { grid, density, atoms };
        m.validate()?;
        Ok(m)
    }

    pub fn zero(grid: Grid) -> Self {
        Self { grid, density: vec![0.0; grid.len()], atoms: Vec::new() }
    }

    pub fn validate(&self) -> Result<()> {
        check_len("density", self.density.len(), self.grid.len())?;
        if let Some(i) = self.density.iter().position(|d| !(d.is_finite() && *d >= 0.0)) {
            return Err(Error::Domain(format!("density[{i}] = {} is not a nonnegative number", self.density[i])));
        }
        for a in &self.atoms {
            if !(a.location.is_finite() && a.mass.is_finite() && a.mass > 0.0) {
                return Err(Error::Domain(format!("invalid atom {a:?}")));
            }
        }
        if self.atoms.windows(2).any(|w| !(w[1].location > w[0].location)) {
            return Err(Error::Domain("atom locations must be strictly increasing".into()));
        }
        Ok(())
    }

    /// Running integral of the density at the nodes.
    pub(crate) fn density_prefix(&self) -> Vec<f64> {
        self.grid.cumulative_trapezoid(&self.density)
    }

    /// `∫_{-∞}^x density`.
    pub(crate) fn ac_cumulative(&self, prefix: &[f64], x: f64) -> f64 {
        let g = &self.grid;
        if x <= g.xi_min() {
            return 0.0;
        }
        if x >= g.xi_max() {
            return prefix[prefix.len() - 1];
        }
        let (i, t) = g.locate(x);
        let (d0, d1) = (self.density[i], self.density[i + 1]);
        prefix[i] + g.dx() * t * (d0 + 0.5 * (d1 - d0) * t)
    }

    /// `μ((-∞, x))`: atoms sitting exactly at `x` are excluded.
    pub fn cumulative(&self, x: f64) -> f64 {
        let prefix = self.density_prefix();
        self.ac_cumulative(&prefix, x)
            + self.atoms.iter().take_while(|a| a.location < x).map(|a| a.mass).sum::<f64>()
    }

    pub fn atom_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass).sum()
    }

    /// `μ(ℝ)`.
    pub fn total_energy(&self) -> f64 {
        self.grid.trapezoid(&self.density) + self.atom_mass()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EulerianState {
    pub grid: Grid,
    pub u: Vec<f64>,
    pub rho: Vec<f64>,
    pub mu: EnergyMeasure,
}

impl EulerianState {
    pub fn new(grid: Grid, u: Vec<f64>, rho: Vec<f64>, mu: EnergyMeasure) -> Result<Self> {
        let z = Self { grid, u, rho, mu };
        z.validate()?;
        Ok(z)
    }

    /// `(0, 0, 0)`.
    pub fn zero(grid: Grid) -> Self {
        let n = grid.len();
        Self { grid, u: vec![0.0; n], rho: vec![0.0; n], mu: EnergyMeasure::zero(grid) }
    }

    /// State whose energy measure is exactly `(u² + u_x² + ρ²) dx`.
    pub fn from_fields(grid: Grid, u: Vec<f64>, rho: Vec<f64>) -> Result<Self> {
        check_len("u", u.len(), grid.len())?;
        check_len("rho", rho.len(), grid.len())?;
        let density = energy_density(&grid, &u, &rho);
        Self::new(grid, u, rho, EnergyMeasure::new(grid, density, Vec::new())?)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.grid.len();
        check_len("u", self.u.len(), n)?;
        check_len("rho", self.rho.len(), n)?;
        if self.mu.grid != self.grid {
            return Err(Error::Structural("energy measure lives on a different grid".into()));
        }
        for (name, f) in [("u", &self.u), ("rho", &self.rho)] {
            if let Some(i) = f.iter().position(|v| !v.is_finite()) {
                return Err(Error::Structural(format!("{name}[{i}] is not finite")));
            }
        }
        self.mu.validate()
    }

    pub fn total_energy(&self) -> f64 {
        self.mu.total_energy()
    }

    /// `u_x` at every node, the right limit where `u` has a kink on a node.
    pub fn u_x(&self) -> Vec<f64> {
        self.grid.nodes().iter().map(|&x| eno_cubic(&self.grid, &self.u, x).1).collect()
    }
}

/// `u² + u_x² + ρ²` at the nodes.
pub fn energy_density(grid: &Grid, u: &[f64], rho: &[f64]) -> Vec<f64> {
    grid.nodes()
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let ux = eno_cubic(grid, u, x).1;
            u[i] * u[i] + ux * ux + rho[i] * rho[i]
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EulerianReport {
    pub tol: f64,
    /// `max |density - (u² + u_x² + ρ²)|`.
    pub max_density_residual: f64,
    pub total_energy: f64,
    pub atom_count: usize,
    pub in_d: bool,
}

impl EulerianReport {
    pub fn in_dm(&self, m: f64) -> bool {
        self.in_d && self.total_energy <= m
    }
}

pub fn check_in_d(z: &EulerianState, tol: f64) -> Result<EulerianReport> {
    z.validate()?;
    let want = energy_density(&z.grid, &z.u, &z.rho);
    let residual = crate::grid::sup_diff(&z.mu.density, &want);
    Ok(EulerianReport {
        tol,
        max_density_residual: residual,
        total_energy: z.total_energy(),
        atom_count: z.mu.atoms.len(),
        in_d: residual <= tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid {
        Grid::new(-5.0, 5.0, 201).unwrap()
    }

    fn delta(g: Grid, mass: f64) -> EulerianState {
        let mu = EnergyMeasure::new(g, vec![0.0; g.len()], vec![Atom { location: 0.0, mass }]).unwrap();
        EulerianState::new(g, vec![0.0; g.len()], vec![0.0; g.len()], mu).unwrap()
    }

    #[test]
    fn zero_state_is_in_d() {
        let r = check_in_d(&EulerianState::zero(grid()), 1e-10).unwrap();
        assert!(r.in_d && r.in_dm(0.0));
        assert_eq!(r.total_energy, 0.0);
    }

    #[test]
    fn atom_is_in_d_with_unit_energy() {
        let r = check_in_d(&delta(grid(), 1.0), 1e-10).unwrap();
        assert!(r.in_d);
        assert_eq!(r.total_energy, 1.0);
        assert!(!r.in_dm(0.5));
    }

    #[test]
    fn density_without_velocity_is_rejected() {
        let g = grid();
        let density = g.nodes().iter().map(|&x| if (0.0..=1.0).contains(&x) { 1.0 } else { 0.0 }).collect();
        let z = EulerianState::new(g, vec![0.0; g.len()], vec![0.0; g.len()], EnergyMeasure::new(g, density, vec![]).unwrap()).unwrap();
        let r = check_in_d(&z, 1e-10).unwrap();
        assert!(!r.in_d);
        assert_eq!(r.max_density_residual, 1.0);
    }

    #[test]
    fn cumulative_excludes_atoms_at_the_point() {
        let z = delta(grid(), 1.0);
        assert_eq!(z.mu.cumulative(0.0), 0.0);
        assert_eq!(z.mu.cumulative(1e-12), 1.0);
        assert_eq!(z.mu.cumulative(10.0), z.total_energy());
    }

    #[test]
    fn cumulative_of_uniform_density() {
        let g = Grid::new(-1.0, 2.0, 301).unwrap();
        // Ramps over one cell at each end; the interior integral is exact.
        let density: Vec<f64> = g.nodes().iter().map(|&x| if (0.0..=1.0).contains(&x) { 1.0 } else { 0.0 }).collect();
        let mu = EnergyMeasure::new(g, density, vec![]).unwrap();
        let h = g.dx();
        assert!((mu.cumulative(0.5) - 0.5 - h / 2.0).abs() < 1e-12);
        assert!((mu.total_energy() - 1.0 - h).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_measures() {
        let g = grid();
        let mut d = vec![0.0; g.len()];
        d[3] = -1.0;
        assert!(EnergyMeasure::new(g, d, vec![]).is_err());
        let atoms = vec![Atom { location: 1.0, mass: 1.0 }, Atom { location: 0.0, mass: 1.0 }];
        assert!(EnergyMeasure::new(g, vec![0.0; g.len()], atoms).is_err());
        assert!(EnergyMeasure::new(g, vec![0.0; g.len()], vec![Atom { location: 0.0, mass: 0.0 }]).is_err());
    }

    #[test]
    fn adding_an_atom_does_not_change_the_residual() {
        let g = grid();
        let u: Vec<f64> = g.nodes().iter().map(|x| (-x * x).exp()).collect();
        let mut z = EulerianState::from_fields(g, u, vec![0.0; g.len()]).unwrap();
        let before = check_in_d(&z, 1e-10).unwrap();
        z.mu.atoms.push(Atom { location: 0.3, mass: 2.0 });
        let after = check_in_d(&z, 1e-10).unwrap();
        assert_eq!(before.max_density_residual, after.max_density_residual);
        assert!((after.total_energy - before.total_energy - 2.0).abs() < 1e-14);
    }
}
