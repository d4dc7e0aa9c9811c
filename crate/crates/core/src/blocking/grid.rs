//! Exhaustive lattice search for the max-min blocking program.
//!
//! Commodity `j` is cut into `N` units of `R_j / N`; every way of handing the
//! units of the first commodity to the support agents is enumerated, and the
//! units of the second are handed out greedily to the currently worst-off
//! agent, which is exact for max-min of non-decreasing functions.

use crate::preferences::{UtilityForm, UtilitySpec};

pub(crate) struct GridAgent<'a> {
    pub spec: &'a UtilitySpec,
    pub theta: f64,
    pub gamma: f64,
    pub reference: f64,
}

/// Best grid margin. `resources` has one or two components.
pub(crate) fn grid_margin(agents: &[GridAgent], resources: &[f64], steps: usize) -> f64 {
    let s = agents.len();
    let ell = resources.len();
    // table[i][k0 * (N+1) + k1] = u_i - ref_i
    let side = steps + 1;
    let table: Vec<Vec<f64>> = agents
        .iter()
        .map(|a| {
            let unit: Vec<f64> = resources.iter().map(|r| r / (steps as f64 * a.gamma)).collect();
            let mut t = vec![0.0; if ell == 2 { side * side } else { side }];
            for (idx, slot) in t.iter_mut().enumerate() {
                let x: Vec<f64> = if ell == 2 {
                    vec![(idx / side) as f64 * unit[0], (idx % side) as f64 * unit[1]]
                } else {
                    vec![idx as f64 * unit[0]]
                };
                *slot = a.theta * a.spec.base_value(&x) - a.reference;
            }
            t
        })
        .collect();

    let greedy = |offset: &dyn Fn(usize) -> usize, stride: usize| -> f64 {
        let mut k = vec![0usize; s];
        for _ in 0..steps {
            let mut worst = 0;
            for i in 1..s {
                if table[i][offset(i) + k[i] * stride] < table[worst][offset(worst) + k[worst] * stride] {
                    worst = i;
                }
            }
            k[worst] += 1;
        }
        (0..s).map(|i| table[i][offset(i) + k[i] * stride]).fold(f64::INFINITY, f64::min)
    };

    if ell == 1 {
        return greedy(&|_| 0, 1);
    }
    let mut best = f64::NEG_INFINITY;
    let mut split = vec![0usize; s];
    for_each_composition(steps, &mut split, 0, &mut |k0| {
        let v = greedy(&|i| k0[i] * side, 1);
        if v > best {
            best = v;
        }
    });
    best
}

fn for_each_composition(total: usize, parts: &mut Vec<usize>, at: usize, f: &mut dyn FnMut(&[usize])) {
    if at + 1 == parts.len() {
        parts[at] = total;
        f(parts);
        return;
    }
    for k in 0..=total {
        parts[at] = k;
        for_each_composition(total - k, parts, at + 1, f);
    }
}

/// `2 max_i sum_j sup |d_j u_i| * step_ij` over the box of half-width one step
/// below `xi`; infinite when the box touches the boundary of a Cobb-Douglas
/// domain.
pub(crate) fn lipschitz_gap(agents: &[GridAgent], xi: &[Vec<f64>], resources: &[f64], steps: usize) -> f64 {
    let mut worst = 0.0f64;
    for (a, x) in agents.iter().zip(xi) {
        let step: Vec<f64> = resources.iter().map(|r| r / (steps as f64 * a.gamma)).collect();
        let lo: Vec<f64> = x.iter().zip(&step).map(|(v, h)| v - h).collect();
        let hi: Vec<f64> = x.iter().zip(&step).map(|(v, h)| v + h).collect();
        let mut total = 0.0;
        match &a.spec.form {
            UtilityForm::CobbDouglas { a: alpha } => {
                for j in 0..x.len() {
                    if alpha[j] == 0.0 {
                        continue;
                    }
                    if lo[j] <= 0.0 {
                        return f64::INFINITY;
                    }
                    // d_j u = alpha_j u / x_j: largest with x_j low and the rest high
                    let mut corner = hi.clone();
                    corner[j] = lo[j];
                    let u = a.theta * a.spec.base_value(&corner);
                    total += alpha[j] * u / lo[j] * step[j];
                }
            }
            UtilityForm::Linear { b } => {
                total = b.iter().zip(&step).map(|(bj, h)| a.theta * bj * h).sum();
            }
        }
        worst = worst.max(total);
    }
    2.0 * worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn single_agent_matches_closed_form() {
        let u = UtilitySpec::cobb_douglas(vec![0.5, 0.5], vec![1.0, 1.0]);
        let a = [GridAgent { spec: &u, theta: 1.0, gamma: 1.0, reference: 0.4 }];
        let t = grid_margin(&a, &[0.45, 0.95], 50);
        assert_abs_diff_eq!(t, (0.45f64 * 0.95).sqrt() - 0.4, epsilon = 1e-12);
    }

    #[test]
    fn zero_resources_give_zero() {
        let u = UtilitySpec::cobb_douglas(vec![0.5, 0.5], vec![1.0]);
        let a = [
            GridAgent { spec: &u, theta: 1.0, gamma: 1.0, reference: 0.0 },
            GridAgent { spec: &u, theta: 1.0, gamma: 0.5, reference: 0.0 },
        ];
        assert_eq!(grid_margin(&a, &[0.0, 0.0], 20), 0.0);
    }

    #[test]
    fn symmetric_pair_splits_evenly() {
        let u = UtilitySpec::cobb_douglas(vec![0.5, 0.5], vec![2.0]);
        let a = [
            GridAgent { spec: &u, theta: 2.0, gamma: 1.0, reference: 1.2 },
            GridAgent { spec: &u, theta: 2.0, gamma: 1.0, reference: 1.2 },
        ];
        assert_abs_diff_eq!(grid_margin(&a, &[1.2, 1.2], 10), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn compositions_are_exhaustive() {
        let mut count = 0;
        for_each_composition(4, &mut vec![0; 3], 0, &mut |p| {
            assert_eq!(p.iter().sum::<usize>(), 4);
            count += 1;
        });
        assert_eq!(count, 15);
    }
}
