//! Small hand-checkable economies used by examples and tests.
//!
//! All three share two agents, two commodities, endowments `(1, 0.5)` and
//! `(0.5, 1)`, symmetric Cobb-Douglas tastes and an equal cost split; they
//! differ in how the agents rank the projects.

use crate::economy::{Allocation, CostScheme, Economy, SolverConfig};
use crate::preferences::UtilitySpec;

fn pair(theta: [[f64; 2]; 2], cost: [[f64; 2]; 2]) -> (Economy, CostScheme) {
    let econ = Economy::new(
        vec!["y1".into(), "y2".into()],
        vec![vec![1.0, 0.5], vec![0.5, 1.0]],
        cost.iter().map(|c| c.to_vec()).collect(),
        theta.iter().map(|t| UtilitySpec::cobb_douglas(vec![0.5, 0.5], t.to_vec())).collect(),
        SolverConfig::default(),
    )
    .expect("catalog economies are well formed");
    (econ, CostScheme::equal(2, 2))
}

/// Both agents prefer `y1` (multipliers 2 and 1); costs `(0.3, 0.3)` and `(0.1, 0.1)`.
pub fn agree() -> (Economy, CostScheme) {
    pair([[2.0, 1.0], [2.0, 1.0]], [[0.3, 0.3], [0.1, 0.1]])
}

/// Agent 0 prefers `y1`, agent 1 prefers `y2`; same costs as [`agree`].
pub fn opposing() -> (Economy, CostScheme) {
    pair([[2.0, 1.0], [1.0, 2.0]], [[0.3, 0.3], [0.1, 0.1]])
}

/// Mild opposing preferences (1.1 vs 1.0) and cheap projects `(0.05, 0.05)`.
pub fn mild() -> (Economy, CostScheme) {
    pair([[1.1, 1.0], [1.0, 1.1]], [[0.05, 0.05], [0.05, 0.05]])
}

/// The cost share equilibrium allocation of [`agree`].
pub fn agree_equilibrium() -> Allocation {
    Allocation::new(vec![vec![0.6, 0.6], vec![0.6, 0.6]], 0)
}

/// A Pareto optimal allocation of [`agree`] that favours agent 0 and is not
/// an equilibrium.
pub fn agree_lopsided() -> Allocation {
    Allocation::new(vec![vec![1.0, 1.0], vec![0.2, 0.2]], 0)
}
