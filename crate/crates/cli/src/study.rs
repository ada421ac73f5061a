//! `metric`: distance estimates between two evolved initial states.

use std::fs;
use std::path::PathBuf;

use ch2_core::dynamics::{evolve, IntegratorConfig};
use ch2_core::lagrangian::{project_f0, LagrangianState};
use ch2_core::metric::{dm_estimate, MetricConfig};
use ch2_core::transforms::to_lagrangian;
use serde::Serialize;

use crate::config::Config;
use crate::error::{numerical, setup, CliError};
use crate::run::write_json;
use crate::scenario::{label_spacing, plain_label_grid, spatial_grid};

#[derive(Debug, Clone, Serialize)]
pub struct MetricEntry {
    pub t: f64,
    pub lower: f64,
    pub upper: f64,
    pub identity_bound: f64,
    pub chained: bool,
    /// `upper(t) / lower(0)`, with `0 / 0 = 0`.
    pub ratio: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct MetricReport {
    pub scenario: String,
    #[serde(rename = "M")]
    pub m: f64,
    pub chain_length: usize,
    pub cap: f64,
    pub label_nodes: usize,
    pub energies: [f64; 2],
    pub entries: Vec<MetricEntry>,
    pub max_ratio: f64,
    pub flagged: bool,
}

fn ratio(upper: f64, lower0: f64) -> f64 {
    if upper == 0.0 {
        0.0
    } else {
        upper / lower0
    }
}

/// States at `t = 0` and at every snapshot time, normalised.
fn normalised_path(x0: &LagrangianState, icfg: &IntegratorConfig) -> Result<Vec<LagrangianState>, CliError> {
    let tr = evolve(x0, icfg).map_err(numerical)?;
    std::iter::once(x0)
        .chain(tr.snapshots.iter().map(|(_, x)| x))
        .map(|x| project_f0(x).map_err(numerical))
        .collect()
}

/// Evolves both initial states on one shared label grid and bounds their
/// distance at `t = 0` and every snapshot time.
pub fn run_metric_study(cfg: &Config) -> Result<(PathBuf, MetricReport), CliError> {
    let spatial = spatial_grid(&cfg.grid, 0)?;
    let za = cfg.scenario.eulerian(spatial, cfg.seed)?;
    let zb = cfg.pair.eulerian(spatial, cfg.seed)?;
    let energies = [za.total_energy(), zb.total_energy()];
    let emax = energies[0].max(energies[1]);
    let labels = plain_label_grid(&cfg.grid, label_spacing(&cfg.grid, 0), emax)?;
    let xa = to_lagrangian(&za, labels).map_err(setup)?;
    let xb = to_lagrangian(&zb, labels).map_err(setup)?;

    let mut times: Vec<f64> = cfg.integrator.snapshot_times.iter().copied().filter(|&t| t > 0.0).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let icfg = IntegratorConfig { snapshot_times: times.clone(), ..cfg.integrator.clone() };
    icfg.validate(&labels).map_err(setup)?;
    if cfg.metric.m.is_some_and(|m| emax > m) {
        return Err(CliError::Config(format!("initial energy {emax} exceeds metric.M")));
    }

    let dir = cfg.resolved_output_dir();
    fs::create_dir_all(&dir)?;
    let (pa, pb) = std::thread::scope(|s| {
        let ha = s.spawn(|| normalised_path(&xa, &icfg));
        let hb = s.spawn(|| normalised_path(&xb, &icfg));
        (ha.join().expect("evolution thread panicked"), hb.join().expect("evolution thread panicked"))
    });
    let (pa, pb) = (pa?, pb?);
    // Π moves the energy by interpolation error, so the default bound is
    // taken over the normalised trajectories.
    let path_max = pa.iter().chain(&pb).map(|x| x.total_energy()).fold(emax, f64::max);
    let mut mcfg = MetricConfig::new(cfg.metric.m.unwrap_or(path_max * (1.0 + 1e-9)));
    mcfg.chain_length = cfg.metric.chain_length;
    mcfg.knots = cfg.metric.knots.unwrap_or(mcfg.knots);
    mcfg.passes = cfg.metric.passes.unwrap_or(mcfg.passes);
    let estimates = std::thread::scope(|s| {
        let handles: Vec<_> = pa
            .iter()
            .zip(&pb)
            .map(|(a, b)| {
                let mcfg = &mcfg;
                s.spawn(move || dm_estimate(a, b, mcfg))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("metric thread panicked")).collect::<Result<Vec<_>, _>>()
    })
    .map_err(numerical)?;

    let lower0 = estimates[0].lower;
    let entries: Vec<MetricEntry> = std::iter::once(0.0)
        .chain(times)
        .zip(&estimates)
        .map(|(t, e)| {
            let r = ratio(e.upper, lower0);
            MetricEntry {
                t,
                lower: e.lower,
                upper: e.upper,
                identity_bound: e.identity_bound,
                chained: e.chain.is_some(),
                ratio: r,
                flagged: !r.is_finite() || r > cfg.metric.cap,
            }
        })
        .collect();
    let report = MetricReport {
        scenario: cfg.scenario.name().into(),
        m: mcfg.m,
        chain_length: mcfg.chain_length,
        cap: cfg.metric.cap,
        label_nodes: labels.len(),
        energies,
        max_ratio: entries.iter().map(|e| e.ratio).fold(0.0, f64::max),
        flagged: entries.iter().any(|e| e.flagged),
        entries,
    };
    write_json(&dir.join("metric.json"), &report)?;
    if report.flagged {
        return Err(CliError::Numerical(format!(
            "Lipschitz ratio {} is not finite or exceeds the cap {}",
            report.max_ratio, report.cap
        )));
    }
    Ok((dir, report))
}
