//! Solver answers against independently derived values.

mod common;

use std::f64::consts::PI;

use common::*;
use qsd_core::certificate::dual_upper_bound;
use qsd_core::model::{success_probability, validate_povm, Ensemble};
use qsd_core::oracle::{projective_oracle_qubit, random_povm_search};
use qsd_core::scenario::{
    coplanar_three_states, find_threshold_numeric, region_three_error, scenario_config,
    solve_point, threshold_xi_23, CoplanarScenario, RegionPair,
};
use qsd_core::solver::{solve, SolverConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn zero_plus_matches_helstrom() {
    let e = zero_plus();
    let r = solve(&e, &SolverConfig::default()).unwrap();
    assert!(r.converged);
    assert!((r.success_probability - HELSTROM_ZERO_PLUS).abs() < 1e-6);
    assert!((helstrom_two_state(&e) - HELSTROM_ZERO_PLUS).abs() < 1e-14);
    let grid = projective_oracle_qubit(&e, 400, None).unwrap();
    assert!((grid.best_value - HELSTROM_ZERO_PLUS).abs() < 1e-4);
    assert!(grid.best_value <= r.certificate.upper_bound + 1e-9);
}

#[test]
fn random_two_state_problems_match_trace_norm_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for p in [2, 3, 4] {
        for _ in 0..20 {
            let e = random_ensemble(&mut rng, 2, p);
            let cfg = SolverConfig {
                max_iterations: 100_000,
                ..SolverConfig::default()
            };
            let r = solve(&e, &cfg).unwrap();
            assert!(r.converged, "p = {p}: gap {}", r.gap);
            let exact = helstrom_two_state(&e);
            assert!(
                (r.success_probability - exact).abs() < 1e-6,
                "p = {p}: {} vs {exact}",
                r.success_probability
            );
        }
    }
}

#[test]
fn trine_optimum_is_two_thirds() {
    let e = trine();
    let r = solve(&e, &SolverConfig::default()).unwrap();
    assert!((r.success_probability - 2.0 / 3.0).abs() < 1e-6);
    assert!(r.certificate.gap <= 1e-7);
    // Recorded: seed 1 reaches 0.664535.
    let search = random_povm_search(&e, 100_000, 1).unwrap();
    assert!(search.best_value >= 0.66, "{}", search.best_value);
    assert!(search.best_value <= r.certificate.upper_bound + 1e-9);
    assert!(validate_povm(&search.best_povm, 2).is_valid());
}

#[test]
fn single_state_oracles() {
    let e = Ensemble::new(vec![bloch([0.3, 0.1, 0.2])], vec![1.0]).unwrap();
    assert_eq!(random_povm_search(&e, 10, 0).unwrap().best_value, 1.0);
    let r = solve(&e, &SolverConfig::default()).unwrap();
    assert!((r.success_probability - 1.0).abs() < 1e-12);
}

#[test]
fn oracles_never_beat_the_dual_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for m in [2, 3, 4] {
        let e = random_ensemble(&mut rng, m, 2);
        let r = solve(&e, &SolverConfig::default()).unwrap();
        let bound = dual_upper_bound(&e, &r.lagrange_operator)
            .unwrap()
            .upper_bound;
        let search = random_povm_search(&e, 5_000, m as u64).unwrap();
        let grid = projective_oracle_qubit(&e, 120, None).unwrap();
        assert!(search.best_value <= bound + 1e-9);
        assert!(grid.best_value <= bound + 1e-9);
        assert!(
            (success_probability(&e, &grid.best_povm).unwrap() - grid.best_value).abs() < 1e-12
        );
    }
}

#[test]
fn region_three_is_two_outcome() {
    let phi = PI / 16.0;
    let sol = solve_point(phi, 0.95, &scenario_config()).unwrap();
    let grid = projective_oracle_qubit(&sol.ensemble, 400, None).unwrap();
    let solver_ps = 1.0 - sol.point.error_rate;
    assert!(
        (grid.best_value - solver_ps).abs() < 1e-4,
        "{} vs {solver_ps}",
        grid.best_value
    );
    assert!((sol.point.error_rate - region_three_error(phi, 0.95)).abs() < 1e-6);
}

#[test]
fn scenario_endpoints() {
    for phi in [PI / 32.0, PI / 16.0, PI / 8.0, 0.7] {
        let zero = solve_point(phi, 0.0, &scenario_config()).unwrap();
        assert!(zero.point.error_rate <= 1e-9);
        let one = solve_point(phi, 1.0, &scenario_config()).unwrap();
        let exact = (1.0 - (2.0 * phi).sin()) / 2.0;
        assert!((one.point.error_rate - exact).abs() < 1e-6, "phi = {phi}");
    }
    let one = solve_point(PI / 16.0, 1.0, &scenario_config()).unwrap();
    assert!((one.point.error_rate - 0.308658).abs() < 1e-6);
}

#[test]
fn two_three_boundary_matches_closed_form() {
    let phi = PI / 16.0;
    let exact = threshold_xi_23(phi).unwrap();
    assert!((exact - 0.839390).abs() < 1e-6);
    let numeric = find_threshold_numeric(phi, RegionPair::TwoThree, &scenario_config()).unwrap();
    assert!((numeric - exact).abs() < 1e-3, "{numeric} vs {exact}");
}

#[test]
fn one_two_boundary_golden() {
    // Self-generated; an independent SDP solve puts the boundary between
    // 0.755 and 0.760.
    let numeric =
        find_threshold_numeric(PI / 16.0, RegionPair::OneTwo, &scenario_config()).unwrap();
    assert!((numeric - 0.75584).abs() < 1e-3, "{numeric}");
}

#[test]
fn convention_certificate_at_threshold() {
    use qsd_core::hermitian::min_eigenvalue;
    for phi in [PI / 32.0, PI / 16.0, PI / 8.0] {
        let xi = threshold_xi_23(phi).unwrap();
        let e = coplanar_three_states(&CoplanarScenario::new(phi, xi).unwrap()).unwrap();
        // Region III only discriminates the symmetric pair, and λ is linear
        // in the priors, so λ* = ξ λ_pair.
        let pair = Ensemble::new(e.states()[..2].to_vec(), vec![0.5, 0.5]).unwrap();
        let r = solve(&pair, &SolverConfig::default()).unwrap();
        assert!(r.converged);
        let lambda = r.lagrange_operator.scale(xi);
        let residual = min_eigenvalue(&(&lambda - &e.weighted_state(2))).unwrap();
        assert!(residual.abs() < 1e-8, "phi = {phi}: {residual:e}");
    }
}
