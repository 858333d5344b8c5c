mod support;

use nvgame_core::lp::{solve_lp, LinearProgram, LpStatus, Sense};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use support::{dense_form, dual_program, random_boxed_lp, rank};

fn min_value(lp: &LinearProgram, v: f64) -> f64 {
    match lp.sense {
        Sense::Minimize => v,
        Sense::Maximize => -v,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn matches_vertex_enumeration(seed in any::<u64>()) {
        let lp = random_boxed_lp(&mut ChaCha8Rng::seed_from_u64(seed));
        let sol = solve_lp(&lp).unwrap();
        let form = dense_form(&lp);
        match form.brute_force_min() {
            None => prop_assert_eq!(sol.status, LpStatus::Infeasible),
            Some(best) => {
                prop_assert_eq!(sol.status, LpStatus::Optimal);
                prop_assert!((min_value(&lp, sol.objective_value) - best).abs() <= 1e-7,
                    "solver {} brute force {}", sol.objective_value, best);
            }
        }
    }

    #[test]
    fn optimal_points_are_feasible_vertices(seed in any::<u64>()) {
        let lp = random_boxed_lp(&mut ChaCha8Rng::seed_from_u64(seed));
        let sol = solve_lp(&lp).unwrap();
        if !sol.is_optimal() {
            return Ok(());
        }
        let form = dense_form(&lp);
        prop_assert!(form.feasible(&sol.x, 1e-8));
        for (x, l) in sol.x.iter().zip(&lp.lower) {
            prop_assert!(*x >= l - 1e-10);
        }
        let obj: f64 = lp.objective.iter().zip(&sol.x).map(|(c, x)| c * x).sum();
        prop_assert!((obj - sol.objective_value).abs() <= 1e-8);
        let active = form.active(&sol.x, 1e-7);
        prop_assert_eq!(rank(&active, 1e-9), lp.objective.len());
    }

    #[test]
    fn strong_duality(seed in any::<u64>()) {
        let lp = random_boxed_lp(&mut ChaCha8Rng::seed_from_u64(seed));
        let primal = solve_lp(&lp).unwrap();
        let dual = solve_lp(&dual_program(&lp)).unwrap();
        match primal.status {
            LpStatus::Optimal => {
                prop_assert_eq!(dual.status, LpStatus::Optimal);
                prop_assert!((min_value(&lp, primal.objective_value) - dual.objective_value).abs() <= 1e-7);
            }
            // the box keeps the dual feasible
            LpStatus::Infeasible => prop_assert_eq!(dual.status, LpStatus::Unbounded),
            LpStatus::Unbounded => prop_assert!(false, "boxed program reported unbounded"),
        }
    }

    #[test]
    fn row_permutation_keeps_objective(seed in any::<u64>(), rot_eq in 0usize..4, rot_ub in 0usize..8) {
        let lp = random_boxed_lp(&mut ChaCha8Rng::seed_from_u64(seed));
        let a = solve_lp(&lp).unwrap();
        let mut eq: Vec<usize> = (0..lp.eq.nrows()).collect();
        let mut ub: Vec<usize> = (0..lp.ub.nrows()).collect();
        if !eq.is_empty() {
            let k = rot_eq % eq.len();
            eq.rotate_left(k);
        }
        if !ub.is_empty() {
            let k = rot_ub % ub.len();
            ub.rotate_left(k);
        }
        ub.reverse();
        let b = solve_lp(&lp.with_row_order(&eq, &ub)).unwrap();
        prop_assert_eq!(a.status, b.status);
        if a.is_optimal() {
            prop_assert!((a.objective_value - b.objective_value).abs() <= 1e-9);
        }
    }

    #[test]
    fn deterministic(seed in any::<u64>()) {
        let lp = random_boxed_lp(&mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(solve_lp(&lp).unwrap(), solve_lp(&lp).unwrap());
    }
}

/// Transportation program with equal supplies and demands.
fn transportation(n: usize, cost: impl Fn(usize, usize) -> f64) -> LinearProgram {
    let mut lp = LinearProgram::new(
        Sense::Minimize,
        (0..n * n).map(|k| cost(k / n, k % n)).collect(),
    );
    for i in 0..n {
        lp.add_eq((0..n).map(|j| (i * n + j, 1.0)), 1.0);
        lp.add_eq((0..n).map(|j| (j * n + i, 1.0)), 1.0);
    }
    lp
}

#[test]
fn terminates_on_tied_transportation() {
    for n in 2..=6 {
        // every assignment costs the same: maximal degeneracy
        let sol = solve_lp(&transportation(n, |_, _| 1.0)).unwrap();
        assert!(sol.is_optimal());
        assert!((sol.objective_value - n as f64).abs() < 1e-9);
        let sol = solve_lp(&transportation(n, |i, j| ((i + j) % n) as f64)).unwrap();
        assert!(sol.is_optimal());
        assert!(sol.objective_value.abs() < 1e-9);
        let sol = solve_lp(&transportation(n, |i, j| (i as f64 - j as f64).abs())).unwrap();
        assert!(sol.objective_value.abs() < 1e-9);
    }
}

#[test]
fn unbounded_and_infeasible_objective_values() {
    let mut lp = LinearProgram::new(Sense::Maximize, vec![1.0, 1.0]);
    lp.add_le([(0, 1.0), (1, -1.0)], 1.0);
    let sol = solve_lp(&lp).unwrap();
    assert_eq!(sol.status, LpStatus::Unbounded);
    assert_eq!(sol.objective_value, f64::INFINITY);
    let mut lp = LinearProgram::new(Sense::Minimize, vec![1.0]);
    lp.add_le([(0, 1.0)], -1.0);
    let sol = solve_lp(&lp).unwrap();
    assert_eq!(sol.status, LpStatus::Infeasible);
    assert_eq!(sol.objective_value, f64::INFINITY);
}
