//! `run` and `converge`.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use ch2_core::dynamics::{evolve, Diagnostic, IntegratorConfig};
use ch2_core::io::{write_eulerian, write_lagrangian};
use ch2_core::lagrangian::{project_f0, LagrangianState};
use ch2_core::oracles::peakon_antipeakon_collision_time;
use ch2_core::transforms::to_eulerian;
use ch2_core::Grid;
use serde::Serialize;

use crate::config::Config;
use crate::error::{setup, CliError};
use crate::scenario::{build, Scenario};

pub const DIAGNOSTIC_COLUMNS: [&str; 6] = ["t", "energy", "max_lagcoord3_residual", "min_yxi", "max_abs_u", "clipped"];

#[derive(Debug, Clone, Serialize)]
pub struct SnapshotEntry {
    pub t: f64,
    pub lagrangian: String,
    pub eulerian: Option<String>,
    pub energy: f64,
    /// Set when `M ∘ Π` failed for this snapshot.
    pub eulerian_error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub scenario: String,
    pub seed: u64,
    pub status: String,
    pub error: Option<String>,
    pub t_end: f64,
    pub t_reached: f64,
    pub label_nodes: usize,
    pub spatial_nodes: usize,
    pub dxi: f64,
    pub dt: f64,
    pub energy0: f64,
    pub max_relative_energy_drift: f64,
    pub max_lagcoord3_residual: f64,
    pub min_yxi: f64,
    /// Smallest `max |U|` over the recorded steps and where it occurred.
    pub min_max_abs_u: f64,
    pub t_min_max_abs_u: f64,
    pub collision_time: Option<f64>,
    pub snapshots: Vec<SnapshotEntry>,
}

pub fn write_text(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<(), CliError> {
    let mut w = BufWriter::new(File::create(path)?);
    f(&mut w)?;
    w.flush()?;
    Ok(())
}

pub fn write_json(path: &Path, v: &impl Serialize) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(v).map_err(|e| CliError::Numerical(e.to_string()))?;
    fs::write(path, text + "\n")?;
    Ok(())
}

fn core_io(e: ch2_core::Error) -> std::io::Error {
    match e {
        ch2_core::Error::Io(e) => e,
        other => std::io::Error::other(other.to_string()),
    }
}

fn write_diagnostics(path: &Path, ds: &[Diagnostic]) -> Result<(), CliError> {
    write_text(path, |w| {
        writeln!(w, "{}", DIAGNOSTIC_COLUMNS.join(" "))?;
        for d in ds {
            writeln!(
                w,
                "{:?} {:?} {:?} {:?} {:?} {:?}",
                d.t, d.energy, d.max_lagcoord3_residual, d.min_yxi, d.max_abs_u, d.clipped
            )?;
        }
        Ok(())
    })
}

fn write_snapshot(dir: &Path, k: usize, t: f64, x: &LagrangianState, spatial: Grid) -> Result<SnapshotEntry, CliError> {
    let lname = format!("snapshots/lagrangian_{k:03}.txt");
    write_text(&dir.join(&lname), |w| write_lagrangian(w, x, t).map_err(core_io))?;
    let mut entry = SnapshotEntry { t, lagrangian: lname, eulerian: None, energy: x.total_energy(), eulerian_error: None };
    match project_f0(x).and_then(|p| to_eulerian(&p, spatial)) {
        Ok(z) => {
            let ename = format!("snapshots/eulerian_{k:03}.txt");
            write_text(&dir.join(&ename), |w| write_eulerian(w, &z, t).map_err(core_io))?;
            entry.eulerian = Some(ename);
        }
        Err(e) => entry.eulerian_error = Some(e.to_string()),
    }
    Ok(entry)
}

/// Evolves the scenario and writes snapshots, diagnostics and a summary
/// into the output directory. Outputs written before a failure are kept.
pub fn run_scenario(cfg: &Config) -> Result<(PathBuf, RunSummary), CliError> {
    let start = Instant::now();
    let st = build(&cfg.scenario, &cfg.grid, 0, cfg.seed)?;
    let x0 = st.lagrangian;
    cfg.integrator.validate(&x0.grid).map_err(setup)?;
    let dir = cfg.resolved_output_dir();
    fs::create_dir_all(dir.join("snapshots"))?;
    write_text(&dir.join("initial_eulerian.txt"), |w| write_eulerian(w, &st.eulerian, 0.0).map_err(core_io))?;

    let t_end = cfg.integrator.t_end;
    let collision_time = match cfg.scenario {
        Scenario::PeakonAntipeakon { c, a } => Some(peakon_antipeakon_collision_time(c, a)),
        _ => None,
    };
    let mut snaps = cfg.integrator.snapshot_times.clone();
    snaps.sort_by(f64::total_cmp);
    snaps.dedup();
    let mut stops = snaps.clone();
    stops.extend(collision_time.filter(|&tc| tc > 0.0 && tc < t_end));
    stops.push(t_end);
    stops.sort_by(f64::total_cmp);
    stops.dedup();

    let budget = cfg.integrator.drift_budget;
    let e0 = x0.total_energy();
    let mut diagnostics: Vec<Diagnostic> = Vec::new();
    let mut entries = Vec::new();
    let mut x = x0.clone();
    let mut t = 0.0;
    let mut error = None;
    let mut next_snap = 0;
    let at_zero = IntegratorConfig { t_end: 0.0, snapshot_times: Vec::new(), ..cfg.integrator.clone() };
    let lag0 = evolve(&x0, &at_zero).map_err(setup)?.diagnostics[0];
    diagnostics.push(lag0);
    let limits = |d: &Diagnostic| -> Option<String> {
        if d.max_lagcoord3_residual > lag0.max_lagcoord3_residual + budget {
            Some(format!("derivative identity residual {} exceeds budget at t = {}", d.max_lagcoord3_residual, d.t))
        } else if (d.energy - e0).abs() > budget * e0.max(1.0) {
            Some(format!("energy drifted from {e0} to {} at t = {}", d.energy, d.t))
        } else {
            None
        }
    };

    for &stop in &stops {
        if stop > t {
            let seg = IntegratorConfig { t_end: stop - t, snapshot_times: Vec::new(), ..cfg.integrator.clone() };
            match evolve(&x, &seg) {
                Ok(tr) => {
                    let shifted = tr.diagnostics[1..].iter().map(|d| Diagnostic { t: t + d.t, ..*d });
                    diagnostics.extend(shifted);
                    x = tr.final_state;
                    t = stop;
                }
                Err(e) => {
                    error = Some(e.to_string());
                    break;
                }
            }
            if let Some(msg) = diagnostics.iter().find_map(limits) {
                error = Some(msg);
                break;
            }
        }
        while next_snap < snaps.len() && snaps[next_snap] <= stop {
            entries.push(write_snapshot(&dir, entries.len(), snaps[next_snap], &x, st.spatial)?);
            next_snap += 1;
        }
    }

    write_diagnostics(&dir.join("diagnostics.txt"), &diagnostics)?;
    let (umin, tumin) = diagnostics
        .iter()
        .map(|d| (d.max_abs_u, d.t))
        .fold((f64::INFINITY, 0.0), |a, b| if b.0 < a.0 { b } else { a });
    let summary = RunSummary {
        scenario: cfg.scenario.name().into(),
        seed: cfg.seed,
        status: if error.is_some() { "failed".into() } else { "ok".into() },
        error: error.clone(),
        t_end,
        t_reached: t,
        label_nodes: x0.len(),
        spatial_nodes: st.spatial.len(),
        dxi: x0.grid.dx(),
        dt: cfg.integrator.dt,
        energy0: e0,
        max_relative_energy_drift: diagnostics.iter().map(|d| (d.energy - e0).abs() / e0.max(1.0)).fold(0.0, f64::max),
        max_lagcoord3_residual: diagnostics.iter().map(|d| d.max_lagcoord3_residual).fold(0.0, f64::max),
        min_yxi: diagnostics.iter().map(|d| d.min_yxi).fold(f64::INFINITY, f64::min),
        min_max_abs_u: umin,
        t_min_max_abs_u: tumin,
        collision_time,
        snapshots: entries,
    };
    write_json(&dir.join("summary.json"), &summary)?;
    write_json(&dir.join("timing.json"), &serde_json::json!({ "runtime_s": start.elapsed().as_secs_f64() }))?;
    match error {
        Some(e) => Err(CliError::Numerical(e)),
        None => Ok((dir, summary)),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelResult {
    pub level: usize,
    pub label_nodes: usize,
    pub dxi: f64,
    pub dt: f64,
    /// `sup_i |U_i - u_exact(t_end, y_i)|`.
    pub sup_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergeReport {
    pub scenario: String,
    pub t_end: f64,
    pub levels: Vec<LevelResult>,
    /// `e_k / e_{k+1}`; about 4 for a second order method.
    pub ratios: Vec<f64>,
}

fn converge_level(cfg: &Config, level: usize, dir: &Path) -> Result<LevelResult, CliError> {
    let st = build(&cfg.scenario, &cfg.grid, level, cfg.seed)?;
    let dt = cfg.integrator.dt / (1u64 << level) as f64;
    let icfg = IntegratorConfig { dt, snapshot_times: Vec::new(), ..cfg.integrator.clone() };
    icfg.validate(&st.lagrangian.grid).map_err(setup)?;
    let t = icfg.t_end;
    let x = evolve(&st.lagrangian, &icfg)
        .map_err(|e| CliError::Numerical(format!("level {level}: {e}")))?
        .final_state;
    let sub = dir.join(format!("level_{level}"));
    fs::create_dir_all(&sub)?;
    write_text(&sub.join("final_lagrangian.txt"), |w| write_lagrangian(w, &x, t).map_err(core_io))?;
    let sup_error = (0..x.len())
        .map(|i| (x.u[i] - cfg.scenario.exact_u(t, x.y[i]).unwrap_or(f64::NAN)).abs())
        .fold(0.0, f64::max);
    Ok(LevelResult { level, label_nodes: x.len(), dxi: x.grid.dx(), dt, sup_error })
}

/// Runs the scenario on `converge.levels` successively halved grids in
/// parallel and compares each final state with the exact solution.
pub fn run_converge(cfg: &Config) -> Result<(PathBuf, ConvergeReport), CliError> {
    if cfg.scenario.exact_u(0.0, 0.0).is_none() {
        return Err(CliError::Config(format!("no exact solution for scenario {}", cfg.scenario.name())));
    }
    let dir = cfg.resolved_output_dir();
    fs::create_dir_all(&dir)?;
    let results: Vec<Result<LevelResult, CliError>> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..cfg.converge.levels)
            .map(|k| {
                let dir = &dir;
                s.spawn(move || converge_level(cfg, k, dir))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("level thread panicked")).collect()
    });
    let levels = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    let ratios = levels.windows(2).map(|w| w[0].sup_error / w[1].sup_error).collect();
    let report = ConvergeReport { scenario: cfg.scenario.name().into(), t_end: cfg.integrator.t_end, levels, ratios };
    write_json(&dir.join("converge.json"), &report)?;
    Ok((dir, report))
}
