//! End-to-end acceptance criteria. Runs as a plain binary and prints one
//! PASS/FAIL line per criterion; exits nonzero if any fails.

mod common;

use std::time::Instant;

use ch2_core::dynamics::{compute_kernels, evolve, flow, IntegratorConfig, Trajectory};
use ch2_core::eulerian::EulerianState;
use ch2_core::grid::{sup_diff, sup_norm};
use ch2_core::lagrangian::{norm_e_between, project_f0, relabel, LagrangianState};
use ch2_core::metric::{dm_estimate, j_upper, MetricConfig};
use ch2_core::oracles::{
    brute_force_kernels, collision_state, crest_aligned_grid, crest_labels, peakon_antipeakon,
    peakon_antipeakon_collision_time, single_peakon, Peakon,
};
use ch2_core::transforms::{to_eulerian, to_eulerian_report, to_lagrangian, PLATEAU_EPS_REL};
use ch2_core::Grid;
use common::{random_relabeling, random_state, rng};

type Outcome = Result<String, String>;

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn err(e: ch2_core::Error) -> String {
    e.to_string()
}

fn random_grid(n: usize) -> Grid {
    Grid::new(-8.0, 8.0, n).unwrap()
}

/// Single peakon on `[-30, 30]` with its crest label at a cell midpoint.
fn peakon_start(n: usize, c: f64, x0: f64) -> (EulerianState, LagrangianState) {
    let sg = Grid::new(-30.0, 30.0, 6001).unwrap();
    let z = single_peakon(c, x0, sg).unwrap();
    let crest = crest_labels(&z, &[Peakon { c, x0 }]);
    let hi = 30.0 + z.total_energy();
    let lg = crest_aligned_grid(&crest, -30.0, hi, (hi + 30.0) / (n - 1) as f64).unwrap();
    let x = to_lagrangian(&z, lg).unwrap();
    (z, x)
}

fn pair_start(c: f64, a: f64, h: f64) -> (EulerianState, LagrangianState) {
    let sg = Grid::new(-25.0, 25.0, 5001).unwrap();
    let z = peakon_antipeakon(c, a, sg).unwrap();
    let crests = crest_labels(&z, &[Peakon { c, x0: -a }, Peakon { c: -c, x0: a }]);
    let lg = crest_aligned_grid(&crests, -25.0, 25.0 + z.total_energy(), h).unwrap();
    let x = to_lagrangian(&z, lg).unwrap();
    (z, x)
}

fn max_lag3(tr: &Trajectory) -> f64 {
    tr.diagnostics.iter().map(|d| d.max_lagcoord3_residual).fold(0.0, f64::max)
}

fn c1_kernels() -> Outcome {
    let mut r = rng(1);
    let mut worst = 0.0_f64;
    for _ in 0..20 {
        let x = random_state(&mut r, random_grid(1000), false);
        let fast = compute_kernels(&x).map_err(err)?;
        let slow = brute_force_kernels(&x);
        let rel = |a: &[f64], b: &[f64]| sup_diff(a, b) / sup_norm(b).max(f64::MIN_POSITIVE);
        worst = worst.max(rel(&fast.p, &slow.p)).max(rel(&fast.q, &slow.q));
    }
    verdict(worst <= 1e-12, format!("max relative difference {worst:.2e} (tol 1e-12)"))
}

fn c2_constraint() -> Outcome {
    let (_, x0) = peakon_start(2001, 1.0, -5.0);
    let h = x0.grid.dx();
    let run = |dt: f64| -> Result<f64, String> {
        let tr = evolve(&x0, &IntegratorConfig::new(dt, 5.0, 1e-3)).map_err(err)?;
        Ok(max_lag3(&tr))
    };
    let coarse = run(0.5 * h)?;
    let fine = run(0.25 * h)?;
    let ratio = coarse / fine;
    verdict(
        coarse <= 1e-6 && ratio >= 8.0,
        format!("residual {coarse:.2e} (tol 1e-6), dt-halving ratio {ratio:.1} (need >= 8)"),
    )
}

/// Shared by criteria 3 and 4.
struct CollisionRun {
    c: f64,
    tc: f64,
    tr: Trajectory,
    eulerian_totals: Vec<(f64, f64)>,
}

fn collision_run() -> Result<CollisionRun, String> {
    let (c, a) = (1.0, 5.0);
    let tc = peakon_antipeakon_collision_time(c, a);
    let (z, x0) = pair_start(c, a, 0.027);
    let mut times: Vec<f64> = (1..=8).map(f64::from).collect();
    times.push(tc);
    times.sort_by(f64::total_cmp);
    let cfg = IntegratorConfig::new(0.5 * x0.grid.dx(), 8.0, 1e-3).with_snapshots(times);
    let tr = evolve(&x0, &cfg).map_err(err)?;
    let mut eulerian_totals = Vec::new();
    for (t, x) in &tr.snapshots {
        let p = project_f0(x).map_err(err)?;
        let (ze, _) = to_eulerian_report(&p, z.grid, PLATEAU_EPS_REL).map_err(err)?;
        eulerian_totals.push((*t, ze.total_energy()));
    }
    Ok(CollisionRun { c, tc, tr, eulerian_totals })
}

fn c3_energy(run: &CollisionRun) -> Outcome {
    let e0 = run.tr.diagnostics[0].energy;
    let drift = run
        .tr
        .diagnostics
        .iter()
        .chain(std::iter::once(&run.tr.diagnostics[run.tr.diagnostics.len() - 1]))
        .map(|d| ((d.energy - e0) / e0).abs())
        .fold(0.0, f64::max);
    let snaps = run
        .tr
        .snapshots
        .iter()
        .map(|(_, x)| ((x.total_energy() - e0) / e0).abs())
        .fold(0.0, f64::max);
    let at_tc = run.eulerian_totals.iter().find(|(t, _)| (t - run.tc).abs() < 1e-9).map(|p| p.1).unwrap_or(f64::NAN);
    verdict(
        drift.max(snaps) <= 1e-6,
        format!(
            "relative drift {:.2e} over {} steps and {} snapshots incl. t_c = {:.4} (tol 1e-6); E0 = {e0:.6}, sampled Eulerian total at t_c = {at_tc:.3}",
            drift.max(snaps),
            run.tr.diagnostics.len(),
            run.tr.snapshots.len(),
            run.tc
        ),
    )
}

fn c4_breaking(run: &CollisionRun) -> Outcome {
    let (tmin, umin) = run
        .tr
        .diagnostics
        .iter()
        .map(|d| (d.t, d.max_abs_u))
        .fold((0.0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
    let after = run
        .tr
        .diagnostics
        .iter()
        .filter(|d| d.t > run.tc)
        .map(|d| d.max_abs_u)
        .fold(0.0, f64::max);
    let c = run.c.abs();
    verdict(
        umin <= 0.05 * c && after >= 0.5 * c,
        format!("min max|u| = {umin:.4} at t = {tmin:.3} (<= {:.3}), max|u| after t_c = {after:.3} (>= {:.3})", 0.05 * c, 0.5 * c),
    )
}

fn peakon_error(n: usize) -> Result<f64, String> {
    let (c, x0, t) = (1.0, -5.0, 2.0);
    let (_, x) = peakon_start(n, c, x0);
    let xt = flow(&x, t, 0.5 * x.grid.dx(), 1e-3).map_err(err)?;
    Ok((0..xt.len())
        .map(|i| (xt.u[i] - c * (-(xt.y[i] - x0 - c * t).abs()).exp()).abs())
        .fold(0.0, f64::max))
}

fn c5_peakon() -> Outcome {
    let e1 = peakon_error(1001)?;
    let e2 = peakon_error(2001)?;
    let e4 = peakon_error(4001)?;
    let (r1, r2) = (e1 / e2, e2 / e4);
    verdict(
        e2 <= 5e-3 && (3.0..=5.0).contains(&r1) && (3.0..=5.0).contains(&r2),
        format!("sup error {e2:.2e} at N=2001 (tol 5e-3); refinement ratios {r1:.2}, {r2:.2} (need 4 ± 1)"),
    )
}

fn eulerian_gap(a: &EulerianState, b: &EulerianState) -> f64 {
    let atoms = if a.mu.atoms.len() == b.mu.atoms.len() {
        a.mu.atoms
            .iter()
            .zip(&b.mu.atoms)
            .map(|(p, q)| (p.location - q.location).abs().max((p.mass - q.mass).abs()))
            .fold(0.0, f64::max)
    } else {
        f64::INFINITY
    };
    sup_diff(&a.u, &b.u).max(sup_diff(&a.rho, &b.rho)).max(sup_diff(&a.mu.density, &b.mu.density)).max(atoms)
}

fn roundtrips(z: &EulerianState, labels: Grid) -> Result<(f64, f64), String> {
    let x = to_lagrangian(z, labels).map_err(err)?;
    let back = to_eulerian(&x, z.grid).map_err(err)?;
    let ml = eulerian_gap(&back, z);
    let x2 = to_lagrangian(&back, labels).map_err(err)?;
    Ok((ml, x2.sup_distance(&x)))
}

fn c6_roundtrips() -> Outcome {
    let sg = Grid::new(-20.0, 20.0, 4001).unwrap();
    let lg = Grid::new(-20.0, 22.5, 4251).unwrap();
    let (g1, g2) = roundtrips(&EulerianState::zero(sg), lg)?;
    let (c1, c2) = roundtrips(&collision_state(1.0, sg).map_err(err)?, lg)?;
    // The crest sits on a spatial node and its label on a label node.
    let z = single_peakon(1.0, 0.0, sg).map_err(err)?;
    let crest = crest_labels(&z, &[Peakon { c: 1.0, x0: 0.0 }])[0];
    let below = ((crest + 20.0) / 0.01).ceil() as usize;
    let pg = Grid::anchored(crest, below, 0.01, below + ((22.5 - crest) / 0.01).ceil() as usize + 1).map_err(err)?;
    let (p1, p2) = roundtrips(&z, pg)?;
    verdict(
        g1.max(g2) <= 1e-6 && c1.max(c2) <= 1e-12 && p1.max(p2) <= 1e-6,
        format!(
            "ground {:.1e}, collision {:.1e} (tol 1e-12), peakon M∘L {p1:.1e} L∘M {p2:.1e} (tol 1e-6)",
            g1.max(g2),
            c1.max(c2)
        ),
    )
}

fn c7_projection() -> Outcome {
    let mut r = rng(7);
    let (mut idem, mut inv) = (0.0_f64, 0.0_f64);
    for _ in 0..20 {
        let x = random_state(&mut r, random_grid(4001), false);
        let p = project_f0(&x).map_err(err)?;
        idem = idem.max(project_f0(&p).map_err(err)?.sup_distance(&p));
        for _ in 0..5 {
            let f = random_relabeling(&mut r, x.grid, 0.2);
            let q = project_f0(&relabel(&x, &f).map_err(err)?).map_err(err)?;
            inv = inv.max(q.sup_distance(&p));
        }
    }
    verdict(
        idem <= 1e-8 && inv <= 1e-8,
        format!("idempotence {idem:.2e}, relabeling invariance {inv:.2e} (tol 1e-8)"),
    )
}

fn c8_equivariance() -> Outcome {
    let mut r = rng(8);
    let x = random_state(&mut r, random_grid(2001), false);
    let dt = 0.5 * x.grid.dx();
    let xt = flow(&x, 1.0, dt, 1e-3).map_err(err)?;
    let mut worst = 0.0_f64;
    for _ in 0..5 {
        let f = random_relabeling(&mut r, x.grid, 0.2);
        let a = flow(&relabel(&x, &f).map_err(err)?, 1.0, dt, 1e-3).map_err(err)?;
        let b = relabel(&xt, &f).map_err(err)?;
        worst = worst.max(a.sup_distance(&b));
    }
    verdict(worst <= 1e-4, format!("sup difference {worst:.2e} (tol 1e-4)"))
}

fn c9_sandwich() -> Outcome {
    let mut r = rng(9);
    let grid = random_grid(1001);
    let fine = random_grid(2001);
    let mut violations = 0;
    let mut relabeled = 0.0_f64;
    let mut slack = f64::INFINITY;
    for k in 0..50 {
        let a = project_f0(&random_state(&mut r, grid, false)).map_err(err)?;
        let b = project_f0(&random_state(&mut r, grid, false)).map_err(err)?;
        let cfg = MetricConfig::new(a.total_energy().max(b.total_energy()) + 1.0);
        let e = dm_estimate(&a, &b, &cfg).map_err(err)?;
        let norm2 = 2.0 * norm_e_between(&a, &b).map_err(err)?;
        if !(e.lower <= e.upper && e.upper <= norm2 * (1.0 + 1e-12)) {
            violations += 1;
        }
        slack = slack.min(e.upper / norm2);
        if k < 10 {
            let a = project_f0(&random_state(&mut r, fine, false)).map_err(err)?;
            let f = random_relabeling(&mut r, fine, 0.2);
            let j = j_upper(&a, &relabel(&a, &f).map_err(err)?, &cfg).map_err(err)?;
            relabeled = relabeled.max(j.upper);
        }
    }
    verdict(
        violations == 0 && relabeled <= 1e-6,
        format!("{violations} sandwich violations in 50 pairs (min upper/2‖·‖ = {slack:.3}); J on relabeled pairs {relabeled:.2e} (tol 1e-6)"),
    )
}

fn c10_lipschitz() -> Outcome {
    let (c, a) = (1.0, 2.0);
    let tc = peakon_antipeakon_collision_time(c, a);
    let times = [1.0, 2.0, tc, 3.5, 5.0];
    let sg = Grid::new(-25.0, 25.0, 5001).unwrap();
    let eps_list = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3];
    let m = eps_list
        .iter()
        .chain(&[0.0])
        .map(|e| peakon_antipeakon(c * (1.0 + e), a + e, sg).map(|z| z.total_energy()))
        .collect::<Result<Vec<_>, _>>()
        .map_err(err)?
        .into_iter()
        .fold(0.0, f64::max);
    let lg = Grid::new(-25.0, 25.0 + m, 2001).map_err(err)?;
    let cfg = IntegratorConfig::new(0.5 * lg.dx(), 5.0, 1e-3).with_snapshots(times.to_vec());
    let run = |c: f64, a: f64| -> Result<Vec<LagrangianState>, String> {
        let x0 = to_lagrangian(&peakon_antipeakon(c, a, sg).map_err(err)?, lg).map_err(err)?;
        let tr = evolve(&x0, &cfg).map_err(err)?;
        std::iter::once(&x0).chain(tr.snapshots.iter().map(|(_, x)| x)).map(|x| project_f0(x).map_err(err)).collect()
    };
    let sa = run(c, a)?;
    let mcfg = MetricConfig::new(m * (1.0 + 1e-9));
    let mut worst = 0.0_f64;
    let mut per_eps = Vec::new();
    for eps in eps_list {
        let sb = run(c * (1.0 + eps), a + eps)?;
        let lower0 = dm_estimate(&sa[0], &sb[0], &mcfg).map_err(err)?.lower;
        let mut ratio = 0.0_f64;
        for (xa, xb) in sa.iter().zip(&sb) {
            ratio = ratio.max(dm_estimate(xa, xb, &mcfg).map_err(err)?.upper / lower0);
        }
        per_eps.push(format!("{eps:.0e}:{ratio:.1}"));
        worst = worst.max(ratio);
    }
    verdict(worst < 1e3, format!("max d_upper(t)/d_lower(0) over t in [0,5] = {worst:.1} (cap 1e3); by size {}", per_eps.join(" ")))
}

fn c11_smoothing() -> Outcome {
    let mut r = rng(11);
    let mut worst = f64::INFINITY;
    for _ in 0..3 {
        let x = random_state(&mut r, Grid::new(-12.0, 12.0, 1501).unwrap(), true);
        let tr = evolve(&x, &IntegratorConfig::new(0.5 * x.grid.dx(), 5.0, 1e-3)).map_err(err)?;
        worst = worst.min(tr.diagnostics.iter().map(|d| d.min_yxi).fold(f64::INFINITY, f64::min));
    }
    verdict(worst >= 0.01, format!("min y_ξ over t in [0,5] = {worst:.3} (need >= 0.01)"))
}

fn main() {
    let start = Instant::now();
    let mut failed = 0;
    let mut report = |name: &str, f: &dyn Fn() -> Outcome| {
        let t = Instant::now();
        let (tag, detail) = match f() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("{tag} {name}: {detail} [{:.1}s]", t.elapsed().as_secs_f64());
    };
    report("criterion 1 kernel oracle", &c1_kernels);
    report("criterion 2 constraint preservation", &c2_constraint);
    match collision_run() {
        Ok(run) => {
            report("criterion 3 energy conservation", &|| c3_energy(&run));
            report("criterion 4 wave breaking", &|| c4_breaking(&run));
        }
        Err(e) => {
            report("criterion 3 energy conservation", &|| Err(e.clone()));
            report("criterion 4 wave breaking", &|| Err(e.clone()));
        }
    }
    report("criterion 5 traveling wave", &c5_peakon);
    report("criterion 6 round trips", &c6_roundtrips);
    report("criterion 7 projection", &c7_projection);
    report("criterion 8 equivariance", &c8_equivariance);
    report("criterion 9 metric sandwich", &c9_sandwich);
    report("criterion 10 Lipschitz ratio", &c10_lipschitz);
    report("criterion 11 smoothing", &c11_smoothing);
    println!("{} criteria failed, {:.1}s total", failed, start.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}
