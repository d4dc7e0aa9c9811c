use approx::assert_abs_diff_eq;
use proptest::prelude::*;

use super::*;
use crate::catalog;
use crate::economy::SolverConfig;
use crate::preferences::UtilitySpec;

fn single(i: usize) -> CoalitionWeights {
    CoalitionWeights::characteristic(Coalition::from_members(&[i]), 2).unwrap()
}

#[test]
fn single_agent_margin_is_closed_form() {
    let (econ, scheme) = catalog::agree();
    let sol = blocking_margin(&econ, &scheme, &single(1), 1, &[2.0, 0.4]).unwrap();
    assert_abs_diff_eq!(sol.margin, (0.45f64 * 0.95).sqrt() - 0.4, epsilon = 1e-12);
    assert_abs_diff_eq!(sol.margin, 0.2538, epsilon = 1e-4);
    assert_abs_diff_eq!(sol.xi[1][0], 0.45, epsilon = 1e-12);
    assert_abs_diff_eq!(sol.xi[1][1], 0.95, epsilon = 1e-12);
}

#[test]
fn grand_coalition_at_equilibrium_has_zero_margin() {
    let (econ, scheme) = catalog::agree();
    let sol = blocking_margin(&econ, &scheme, &CoalitionWeights::grand(2), 0, &[1.2, 1.2]).unwrap();
    assert_abs_diff_eq!(sol.margin, 0.0, epsilon = 1e-8);
    assert!(sol.upper >= sol.margin && sol.upper < 1e-8);
}

#[test]
fn zero_resources_zero_margin() {
    let econ = Economy::new(
        vec!["a".into()],
        vec![vec![0.5, 0.5], vec![0.5, 0.5]],
        vec![vec![1.0, 1.0]],
        vec![UtilitySpec::cobb_douglas(vec![0.5, 0.5], vec![1.0]); 2],
        SolverConfig::default(),
    )
    .unwrap();
    let scheme = CostScheme::equal(2, 1);
    let sol = blocking_margin(&econ, &scheme, &single(0), 0, &[0.0, 0.0]).unwrap();
    assert_eq!(sol.margin, 0.0);
    assert!(sol.xi[0].iter().all(|v| *v == 0.0));
}

#[test]
fn unaffordable_share_is_an_error() {
    let (econ, scheme) = catalog::agree();
    // agent 0 alone cannot pay half of (2, 2)
    let econ = econ.with_endowments(vec![vec![0.1, 0.1], vec![2.0, 2.0]]).unwrap();
    let err = blocking_margin(&econ, &scheme, &single(0), 0, &[0.0, 0.0]).unwrap_err();
    assert!(matches!(err, Error::Unaffordable { .. }));
}

#[test]
fn singleton_blocks_lopsided_allocation() {
    let (econ, scheme) = catalog::agree();
    let alloc = catalog::agree_lopsided();
    let cert = is_blocked_by_coalition(&econ, &scheme, Coalition::from_members(&[1]), &alloc).unwrap().unwrap();
    assert_eq!(cert.project, 0);
    assert_abs_diff_eq!(cert.margin, 2.0 * 0.2975f64.sqrt() - 0.4, epsilon = 1e-10);
    let refs = econ.utilities_at(&alloc).unwrap();
    assert!(cert.check(&econ, &scheme, &refs).unwrap().valid);
}

#[test]
fn equilibrium_is_unblocked() {
    let (econ, scheme) = catalog::agree();
    let ce = catalog::agree_equilibrium();
    assert!(is_blocked_by_coalition(&econ, &scheme, Coalition::grand(2), &ce).unwrap().is_none());
    let v = sigma_core_check(&econ, &scheme, &ce).unwrap();
    assert!(v.in_core);
    assert_eq!(v.coalitions_checked, 3);
}

#[test]
fn agent_with_everything_cannot_improve_alone() {
    let (econ, scheme) = catalog::agree();
    let alloc = Allocation::new(vec![vec![1.2, 1.2], vec![0.0, 0.0]], 0);
    assert!(is_blocked_by_coalition(&econ, &scheme, Coalition::from_members(&[0]), &alloc).unwrap().is_none());
}

#[test]
fn core_check_finds_singleton_witness() {
    let (econ, scheme) = catalog::agree();
    let v = sigma_core_check(&econ, &scheme, &catalog::agree_lopsided()).unwrap();
    assert!(!v.in_core);
    let w = v.witness.unwrap();
    assert_eq!(w.gamma.as_slice(), &[0.0, 1.0]);
}

#[test]
fn one_agent_economy_optimum_is_in_core() {
    let econ = Economy::new(
        vec!["a".into(), "b".into()],
        vec![vec![1.0, 1.0]],
        vec![vec![0.2, 0.2], vec![0.5, 0.5]],
        vec![UtilitySpec::cobb_douglas(vec![0.5, 0.5], vec![1.0, 1.0])],
        SolverConfig::default(),
    )
    .unwrap();
    let scheme = CostScheme::equal(1, 2);
    let v = sigma_core_check(&econ, &scheme, &Allocation::new(vec![vec![0.8, 0.8]], 0)).unwrap();
    assert!(v.in_core);
}

#[test]
fn pareto_examples() {
    let (econ, _) = catalog::agree();
    let v = is_pareto_optimal(&econ, &catalog::agree_equilibrium()).unwrap();
    assert!(v.optimal);
    assert_abs_diff_eq!(v.margins[0], 0.0, epsilon = 1e-8);
    // at y2 equal split (0.7, 0.7) gives 0.7 against 1.2
    assert_abs_diff_eq!(v.margins[1], -0.5, epsilon = 1e-8);

    let v = is_pareto_optimal(&econ, &catalog::agree_lopsided()).unwrap();
    assert!(v.optimal);
    assert_abs_diff_eq!(v.margins[0], 0.0, epsilon = 1e-8);
    assert!(v.margins[1] <= -0.6 + 1e-8);

    let burnt = Allocation::new(vec![vec![0.5, 0.5], vec![0.5, 0.5]], 0);
    assert!(matches!(is_pareto_optimal(&econ, &burnt), Err(Error::Infeasible(_))));
}

#[test]
fn grid_oracle_examples() {
    let (econ, scheme) = catalog::agree();
    let g = brute_force_blocking(&econ, &scheme, &single(1), 1, &[2.0, 0.4], 200).unwrap();
    assert_abs_diff_eq!(g, (0.45f64 * 0.95).sqrt() - 0.4, epsilon = 1e-12);
    let three = Economy::new(
        vec!["a".into()],
        vec![vec![1.0, 1.0, 1.0]],
        vec![vec![0.1, 0.1, 0.1]],
        vec![UtilitySpec::cobb_douglas(vec![0.3, 0.3, 0.4], vec![1.0])],
        SolverConfig::default(),
    )
    .unwrap();
    let err = brute_force_blocking(&three, &CostScheme::equal(1, 1), &CoalitionWeights::grand(1), 0, &[0.0], 10);
    assert!(matches!(err, Err(Error::Dimension(_))));
}

#[test]
fn solver_agrees_with_grid_on_pair() {
    let (econ, scheme) = catalog::opposing();
    let refs = [0.9, 0.5];
    let gamma = CoalitionWeights::new(vec![0.5, 1.0]).unwrap();
    for z in 0..2 {
        let sol = blocking_margin(&econ, &scheme, &gamma, z, &refs).unwrap();
        let g = brute_force_blocking(&econ, &scheme, &gamma, z, &refs, 200).unwrap();
        let bound = grid_error_bound(&econ, &scheme, &gamma, z, &sol.xi, 200).unwrap();
        assert!(g <= sol.upper + 1e-7, "grid {g} above dual bound {}", sol.upper);
        assert!(sol.margin - g <= bound, "gap {} exceeds {bound}", sol.margin - g);
    }
}

fn arb_instance() -> impl Strategy<Value = (Vec<[f64; 2]>, Vec<f64>, Vec<f64>, Vec<f64>)> {
    (2usize..=3).prop_flat_map(|n| {
        (
            prop::collection::vec((0.2f64..1.5, 0.2f64..1.5).prop_map(|(a, b)| [a, b]), n),
            prop::collection::vec(0.15f64..0.85, n),
            prop::collection::vec(0.1f64..=1.0, n),
            prop::collection::vec(0.0f64..0.6, n),
        )
    })
}

fn build(endow: &[[f64; 2]], a0: &[f64]) -> (Economy, CostScheme) {
    let n = endow.len();
    let econ = Economy::new(
        vec!["z".into()],
        endow.iter().map(|e| e.to_vec()).collect(),
        vec![vec![0.05, 0.05]],
        a0.iter().map(|a| UtilitySpec::cobb_douglas(vec![*a, 1.0 - a], vec![1.0])).collect(),
        SolverConfig::default(),
    )
    .unwrap();
    (econ, CostScheme::equal(n, 1))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn margin_is_scale_invariant((endow, a0, gamma, refs) in arb_instance(), lam in 0.3f64..1.0) {
        let (econ, scheme) = build(&endow, &a0);
        let g = CoalitionWeights::new(gamma.clone()).unwrap();
        let top = gamma.iter().cloned().fold(0.0, f64::max);
        let scaled = CoalitionWeights::new(gamma.iter().map(|v| v * lam / top).collect()).unwrap();
        let a = blocking_margin(&econ, &scheme, &g, 0, &refs).unwrap();
        let b = blocking_margin(&econ, &scheme, &scaled, 0, &refs).unwrap();
        prop_assert!((a.margin - b.margin).abs() <= 1e-7, "{} vs {}", a.margin, b.margin);
    }

    #[test]
    fn margin_monotone_in_refs((endow, a0, gamma, refs) in arb_instance(), bump in 0.0f64..0.3, who in 0usize..3) {
        let (econ, scheme) = build(&endow, &a0);
        let g = CoalitionWeights::new(gamma).unwrap();
        let mut higher = refs.clone();
        let k = who % higher.len();
        higher[k] += bump;
        let a = blocking_margin(&econ, &scheme, &g, 0, &refs).unwrap();
        let b = blocking_margin(&econ, &scheme, &g, 0, &higher).unwrap();
        prop_assert!(b.margin <= a.margin + 1e-8);
    }

    #[test]
    fn solution_respects_bounds_and_resources((endow, a0, gamma, refs) in arb_instance()) {
        let (econ, scheme) = build(&endow, &a0);
        let g = CoalitionWeights::new(gamma).unwrap();
        let sol = blocking_margin(&econ, &scheme, &g, 0, &refs).unwrap();
        prop_assert!(sol.upper - sol.margin <= 1e-7, "gap {}", sol.upper - sol.margin);
        let cert = BlockingCertificate { gamma: g.clone(), project: 0, xi: sol.xi.clone(), margin: sol.margin };
        let check = cert.check(&econ, &scheme, &refs).unwrap();
        prop_assert!(check.resource_residual <= 1e-9);
        prop_assert!((check.min_improvement - sol.margin).abs() <= 1e-12);
    }

    #[test]
    fn grid_brackets_solver((endow, a0, gamma, refs) in arb_instance()) {
        let (econ, scheme) = build(&endow, &a0);
        let g = CoalitionWeights::new(gamma).unwrap();
        let sol = blocking_margin(&econ, &scheme, &g, 0, &refs).unwrap();
        let grid = brute_force_blocking(&econ, &scheme, &g, 0, &refs, 60).unwrap();
        let bound = grid_error_bound(&econ, &scheme, &g, 0, &sol.xi, 60).unwrap();
        prop_assert!(grid <= sol.upper + 1e-7);
        prop_assert!(sol.margin - grid <= bound);
    }
}
