//! Invariants checked over randomly generated states and relabelings.

mod common;

use ch2_core::dynamics::compute_kernels;
use ch2_core::eulerian::EulerianState;
use ch2_core::grid::{sup_diff, sup_norm};
use ch2_core::io::{read_lagrangian, write_lagrangian};
use ch2_core::lagrangian::{check_in_g, project_f0, relabel, TOL_CONSTRAINT};
use ch2_core::metric::{dm_estimate, MetricConfig};
use ch2_core::oracles::{bisection_l, brute_force_kernels};
use ch2_core::transforms::to_lagrangian;
use ch2_core::Grid;
use common::{random_relabeling, random_state, rng, Bumps};
use proptest::prelude::*;

fn grid(n: usize) -> Grid {
    Grid::new(-8.0, 8.0, n).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn random_states_are_in_g(seed in any::<u64>()) {
        let x = random_state(&mut rng(seed), grid(401), false);
        prop_assert!(check_in_g(&x, TOL_CONSTRAINT).unwrap().in_g);
    }

    #[test]
    fn fast_kernels_match_brute_force(seed in any::<u64>(), n in 50usize..300) {
        let x = random_state(&mut rng(seed), grid(n), false);
        let fast = compute_kernels(&x).unwrap();
        let slow = brute_force_kernels(&x);
        prop_assert!(sup_diff(&fast.p, &slow.p) <= 1e-12 * sup_norm(&slow.p));
        prop_assert!(sup_diff(&fast.q, &slow.q) <= 1e-12 * sup_norm(&slow.q).max(1e-300));
    }

    #[test]
    fn projection_is_idempotent_and_normalises(seed in any::<u64>()) {
        let x = random_state(&mut rng(seed), grid(801), false);
        let p = project_f0(&x).unwrap();
        let rep = check_in_g(&p, 1e-5).unwrap();
        prop_assert!(rep.in_f0, "{rep:?}");
        prop_assert!(project_f0(&p).unwrap().sup_distance(&p) <= 1e-9);
    }

    #[test]
    fn relabeling_keeps_total_energy(seed in any::<u64>()) {
        let mut r = rng(seed);
        let x = random_state(&mut r, grid(801), false);
        let f = random_relabeling(&mut r, x.grid, 0.2);
        let xf = relabel(&x, &f).unwrap();
        prop_assert!((xf.total_energy() - x.total_energy()).abs() <= 1e-9 * (1.0 + x.total_energy()));
    }

    #[test]
    fn relabeling_composes(seed in any::<u64>()) {
        let mut r = rng(seed);
        let x = random_state(&mut r, grid(1601), false);
        let f = random_relabeling(&mut r, x.grid, 0.2);
        let g = random_relabeling(&mut r, x.grid, 0.2);
        let two_steps = relabel(&relabel(&x, &f).unwrap(), &g).unwrap();
        let one_step = relabel(&x, &f.compose(&g).unwrap()).unwrap();
        prop_assert!(two_steps.sup_distance(&one_step) <= 1e-5, "{}", two_steps.sup_distance(&one_step));
    }

    #[test]
    fn relabeling_by_inverse_undoes(seed in any::<u64>()) {
        let mut r = rng(seed);
        let f = random_relabeling(&mut r, grid(801), 0.2);
        let id = f.compose(&f.inverse().unwrap()).unwrap();
        let nodes = f.grid().nodes();
        prop_assert!(sup_diff(id.knots(), &nodes) <= 1e-9);
        prop_assert!(id.slopes().iter().all(|s| (s - 1.0).abs() <= 1e-9));
    }

    #[test]
    fn lagrangian_files_round_trip(seed in any::<u64>()) {
        let x = random_state(&mut rng(seed), grid(101), true);
        let mut buf = Vec::new();
        write_lagrangian(&mut buf, &x, 0.125).unwrap();
        let (back, t) = read_lagrangian(&buf[..]).unwrap();
        prop_assert_eq!(t, 0.125);
        prop_assert_eq!(back, x);
    }

    #[test]
    fn inverse_by_bisection_matches(seed in any::<u64>()) {
        let mut r = rng(seed);
        let sg = Grid::new(-10.0, 10.0, 801).unwrap();
        let ub = Bumps::random(&mut r, 3, 1.0, 4.0);
        let rb = Bumps::random(&mut r, 2, 0.5, 4.0);
        let u = sg.nodes().iter().map(|&x| ub.eval(x).0).collect();
        let rho = sg.nodes().iter().map(|&x| rb.eval(x).0).collect();
        let z = EulerianState::from_fields(sg, u, rho).unwrap();
        let lg = Grid::new(-10.0, 10.0 + z.total_energy() + 0.5, 901).unwrap();
        let fast = to_lagrangian(&z, lg).unwrap();
        let slow = bisection_l(&z, lg).unwrap();
        prop_assert!(fast.sup_distance(&slow) <= 1e-10, "{}", fast.sup_distance(&slow));
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 6, ..ProptestConfig::default() })]

    #[test]
    fn metric_bounds_are_ordered(seed in any::<u64>()) {
        let mut r = rng(seed);
        let a = project_f0(&random_state(&mut r, grid(301), false)).unwrap();
        let b = project_f0(&random_state(&mut r, grid(301), false)).unwrap();
        let mut cfg = MetricConfig::new(a.total_energy().max(b.total_energy()) + 1.0);
        cfg.tol = 1e-3;
        let e = dm_estimate(&a, &b, &cfg).unwrap();
        prop_assert!(e.lower <= e.upper && e.upper <= e.identity_bound * (1.0 + 1e-12));
        let same = dm_estimate(&a, &a, &cfg).unwrap();
        prop_assert_eq!((same.lower, same.upper), (0.0, 0.0));
    }
}
