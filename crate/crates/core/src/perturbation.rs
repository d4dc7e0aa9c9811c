//! Perturbed economies `E(gamma^z, z, alpha)` and grand-coalition domination.
//!
//! Only endowments move: agent `i` holds
//! `alpha_i e_i + (1 - alpha_i)(gamma^z_i + rho(i, z) c(z))`; the cost
//! function is left untouched.

use rayon::prelude::*;
use serde::Serialize;

use crate::blocking::{is_pareto_optimal, solve_on_resources, BlockingCertificate, CertificateCheck, CoalitionWeights};
use crate::economy::{Allocation, CostScheme, Economy};
use crate::error::{Error, Result};
use crate::vecops::sum_bundles;

/// Recorded in reports: which perturbation is in force.
pub const CONSTRUCTION: &str = "endowment perturbation; cost function unchanged";

fn check_alpha(alpha: &[f64], n: usize) -> Result<()> {
    if alpha.len() != n {
        return Err(Error::Dimension(format!("{} alpha weights for {n} agents", alpha.len())));
    }
    match alpha.iter().find(|a| !(0.0..=1.0).contains(*a)) {
        Some(a) => Err(Error::AlphaRange(*a)),
        None => Ok(()),
    }
}

pub fn perturbed_endowments(
    econ: &Economy,
    scheme: &CostScheme,
    gamma_z: &[Vec<f64>],
    z: usize,
    alpha: &[f64],
) -> Result<Vec<Vec<f64>>> {
    econ.check_project(z)?;
    check_alpha(alpha, econ.n())?;
    if gamma_z.len() != econ.n() || gamma_z.iter().any(|g| g.len() != econ.ell()) {
        return Err(Error::Dimension("compensating allocation does not match the economy".into()));
    }
    Ok((0..econ.n())
        .map(|i| {
            let a = alpha[i];
            let rho = scheme.rho(i, z);
            (0..econ.ell())
                .map(|j| {
                    if a == 1.0 {
                        econ.endowment(i)[j]
                    } else {
                        a * econ.endowment(i)[j] + (1.0 - a) * (gamma_z[i][j] + rho * econ.cost(z)[j])
                    }
                })
                .collect()
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DominationWitness {
    pub project: usize,
    pub alpha: Vec<f64>,
    pub xi: Vec<Vec<f64>>,
    pub margin: f64,
}

impl DominationWitness {
    /// Re-validates as a grand-coalition blocking certificate of the
    /// perturbed economy.
    pub fn check(&self, econ: &Economy, scheme: &CostScheme, alloc: &Allocation, gamma_z: &[Vec<f64>]) -> Result<CertificateCheck> {
        let endow = perturbed_endowments(econ, scheme, gamma_z, self.project, &self.alpha)?;
        let perturbed = econ.with_endowments(endow)?;
        let refs = econ.utilities_at(alloc)?;
        let cert = BlockingCertificate {
            gamma: CoalitionWeights::grand(econ.n()),
            project: self.project,
            xi: self.xi.clone(),
            margin: self.margin,
        };
        cert.check(&perturbed, scheme, &refs)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DominationResult {
    /// Grand-coalition margin; `None` when the perturbed resources cannot
    /// cover the cost.
    pub margin: Option<f64>,
    pub negative_resources: bool,
    pub witness: Option<DominationWitness>,
}

fn domination(
    econ: &Economy,
    scheme: &CostScheme,
    refs: &[f64],
    gamma_z: &[Vec<f64>],
    z: usize,
    alpha: &[f64],
    screen: Option<f64>,
) -> Result<DominationResult> {
    let endow = perturbed_endowments(econ, scheme, gamma_z, z, alpha)?;
    let mut resources = sum_bundles(econ.ell(), &endow);
    for (r, c) in resources.iter_mut().zip(econ.cost(z)) {
        *r -= c;
    }
    let ones = vec![1.0; econ.n()];
    let eps = econ.config().eps_strict;
    match solve_on_resources(econ, &ones, z, refs, &resources, screen) {
        Ok(Some(sol)) => {
            let witness = (sol.margin > eps)
                .then(|| DominationWitness { project: z, alpha: alpha.to_vec(), xi: sol.xi, margin: sol.margin });
            Ok(DominationResult { margin: Some(sol.margin), negative_resources: false, witness })
        }
        Ok(None) => Ok(DominationResult { margin: None, negative_resources: false, witness: None }),
        Err(Error::Unaffordable { .. }) => Ok(DominationResult { margin: None, negative_resources: true, witness: None }),
        Err(e) => Err(e),
    }
}

/// Grand-coalition `z`-domination of a Pareto optimal allocation at one `alpha`.
pub fn z_domination_check(
    econ: &Economy,
    scheme: &CostScheme,
    alloc: &Allocation,
    gamma_z: &[Vec<f64>],
    z: usize,
    alpha: &[f64],
) -> Result<DominationResult> {
    if !is_pareto_optimal(econ, alloc)?.optimal {
        return Err(Error::NotParetoOptimal);
    }
    let refs = econ.utilities_at(alloc)?;
    domination(econ, scheme, &refs, gamma_z, z, alpha, None)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlphaSweep {
    /// No witness anywhere on the grid (and refinement, if requested).
    pub consistent: bool,
    pub grid: u32,
    pub points_checked: usize,
    /// Projects without a compensating allocation.
    pub skipped: Vec<usize>,
    /// Largest-margin witness, ties to the first `(z, alpha)` in order.
    pub witness: Option<DominationWitness>,
    pub refined: bool,
    pub construction: &'static str,
}

fn alpha_grid(n: usize, g: u32) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    let mut k = vec![0u32; n];
    loop {
        out.push(k.iter().map(|v| *v as f64 / g as f64).collect());
        let mut i = n;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if k[i] < g {
                k[i] += 1;
                break;
            }
            k[i] = 0;
        }
    }
}

/// Sweeps `alpha` over `{0, 1/g, ..., 1}^n` at every project with a
/// compensating allocation. With `refine`, near-witnesses are polished by
/// coordinate search.
pub fn alpha_sweep(
    econ: &Economy,
    scheme: &CostScheme,
    alloc: &Allocation,
    gammas: &[Option<Vec<Vec<f64>>>],
    grid: u32,
    refine: bool,
) -> Result<AlphaSweep> {
    if grid < 1 {
        return Err(Error::Input("alpha grid must be >= 1".into()));
    }
    if gammas.len() != econ.k() {
        return Err(Error::Dimension(format!("{} compensating allocations for {} projects", gammas.len(), econ.k())));
    }
    let count = (grid as f64 + 1.0).powi(econ.n() as i32) * econ.k() as f64;
    if count > crate::replica::ENUMERATION_CAP as f64 {
        return Err(Error::EnumerationCap(format!("{count:.0} alpha points")));
    }
    if !is_pareto_optimal(econ, alloc)?.optimal {
        return Err(Error::NotParetoOptimal);
    }
    let refs = econ.utilities_at(alloc)?;
    let skipped: Vec<usize> = (0..econ.k()).filter(|z| gammas[*z].is_none()).collect();
    let points = alpha_grid(econ.n(), grid);
    let tasks: Vec<(usize, &Vec<f64>)> = (0..econ.k())
        .filter(|z| gammas[*z].is_some())
        .flat_map(|z| points.iter().map(move |a| (z, a)))
        .collect();
    let eps = econ.config().eps_strict;
    let near = -1e-3 * (1.0 + refs.iter().fold(0.0f64, |m, v| m.max(v.abs())));
    let screen = if refine { near } else { eps };
    let results = tasks
        .par_iter()
        .map(|(z, a)| domination(econ, scheme, &refs, gammas[*z].as_ref().expect("filtered"), *z, a, Some(screen)))
        .collect::<Result<Vec<_>>>()?;
    let mut witness: Option<DominationWitness> = None;
    for r in &results {
        if let Some(w) = &r.witness {
            if witness.as_ref().is_none_or(|b| w.margin > b.margin) {
                witness = Some(w.clone());
            }
        }
    }
    let mut refined = false;
    if witness.is_none() && refine {
        let mut near_points: Vec<(f64, usize)> =
            results.iter().enumerate().filter_map(|(k, r)| r.margin.map(|m| (m, k))).collect();
        near_points.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        for (_, k) in near_points.into_iter().take(3) {
            let (z, a) = tasks[k];
            if let Some(w) = refine_alpha(econ, scheme, &refs, gammas[z].as_ref().expect("filtered"), z, a, grid)? {
                witness = Some(w);
                refined = true;
                break;
            }
        }
    }
    Ok(AlphaSweep {
        consistent: witness.is_none(),
        grid,
        points_checked: tasks.len(),
        skipped,
        witness,
        refined,
        construction: CONSTRUCTION,
    })
}

fn refine_alpha(
    econ: &Economy,
    scheme: &CostScheme,
    refs: &[f64],
    gamma_z: &[Vec<f64>],
    z: usize,
    start: &[f64],
    grid: u32,
) -> Result<Option<DominationWitness>> {
    let value = |a: &[f64]| -> Result<(f64, Option<DominationWitness>)> {
        let r = domination(econ, scheme, refs, gamma_z, z, a, None)?;
        Ok((r.margin.unwrap_or(f64::NEG_INFINITY), r.witness))
    };
    let mut a = start.to_vec();
    let (mut best, mut found) = value(&a)?;
    let mut h = 1.0 / (2.0 * grid as f64);
    while h >= 1e-4 && found.is_none() {
        let mut improved = false;
        for i in 0..a.len() {
            for sign in [1.0, -1.0] {
                let mut trial = a.clone();
                trial[i] = (trial[i] + sign * h).clamp(0.0, 1.0);
                if trial[i] == a[i] {
                    continue;
                }
                let (m, w) = value(&trial)?;
                if m > best {
                    best = m;
                    a = trial;
                    found = w;
                    improved = true;
                }
            }
        }
        if !improved {
            h *= 0.5;
        }
    }
    Ok(found)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::economy::SolverConfig;
    use crate::equilibrium::construct_gamma_z;
    use crate::preferences::{utility_eval, UtilitySpec};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn endowment_formula_examples() {
        let (econ, scheme) = catalog::agree();
        let x = catalog::agree_lopsided();
        assert_eq!(perturbed_endowments(&econ, &scheme, &x.bundles, 0, &[1.0, 1.0]).unwrap(), econ.endowments());
        let e = perturbed_endowments(&econ, &scheme, &x.bundles, 0, &[0.0, 1.0]).unwrap();
        assert_abs_diff_eq!(e[0][0], 1.15, epsilon = 1e-15);
        assert_abs_diff_eq!(e[0][1], 1.15, epsilon = 1e-15);
        assert_eq!(e[1], vec![0.5, 1.0]);
        let zero = perturbed_endowments(&econ, &scheme, &x.bundles, 0, &[0.0, 0.0]).unwrap();
        assert_abs_diff_eq!(zero[1][0], 0.35, epsilon = 1e-15);
        assert!(matches!(perturbed_endowments(&econ, &scheme, &x.bundles, 0, &[1.5, 0.0]), Err(Error::AlphaRange(_))));
    }

    #[test]
    fn domination_examples() {
        let (econ, scheme) = catalog::agree();
        let ce = catalog::agree_equilibrium();
        let r = z_domination_check(&econ, &scheme, &ce, &ce.bundles, 0, &[1.0, 1.0]).unwrap();
        assert!(r.witness.is_none());
        assert_abs_diff_eq!(r.margin.unwrap(), 0.0, epsilon = 1e-8);

        let bad = catalog::agree_lopsided();
        let r = z_domination_check(&econ, &scheme, &bad, &bad.bundles, 0, &[0.0, 1.0]).unwrap();
        let w = r.witness.unwrap();
        assert!(w.check(&econ, &scheme, &bad, &bad.bundles).unwrap().valid);
        // the hand bundle also dominates
        let hand = [vec![1.0, 1.35], vec![0.35, 0.5]];
        let u0 = utility_eval(econ.utility(0), &hand[0], 0).unwrap();
        let u1 = utility_eval(econ.utility(1), &hand[1], 0).unwrap();
        assert!(u0 > 2.0 && u1 > 0.4);
        assert_abs_diff_eq!(u0, 2.0 * 1.35f64.sqrt(), epsilon = 1e-12);

        let r = z_domination_check(&econ, &scheme, &bad, &bad.bundles, 0, &[0.0, 0.0]).unwrap();
        assert!(r.witness.is_none());
    }

    #[test]
    fn sweep_examples() {
        let (econ, scheme) = catalog::agree();
        let ce = catalog::agree_equilibrium();
        let gammas: Vec<_> = (0..2).map(|z| construct_gamma_z(&econ, &ce, z).unwrap().bundles).collect();
        let s = alpha_sweep(&econ, &scheme, &ce, &gammas, 4, false).unwrap();
        assert!(s.consistent);
        assert_eq!(s.skipped, vec![1]);

        let bad = catalog::agree_lopsided();
        let gammas: Vec<_> = (0..2).map(|z| construct_gamma_z(&econ, &bad, z).unwrap().bundles).collect();
        let s = alpha_sweep(&econ, &scheme, &bad, &gammas, 8, false).unwrap();
        let w = s.witness.unwrap();
        assert_eq!((w.project, w.alpha.clone()), (0, vec![0.0, 1.0]));
    }

    #[test]
    fn single_agent_never_dominated() {
        let econ = Economy::new(
            vec!["a".into(), "b".into()],
            vec![vec![1.0, 1.0]],
            vec![vec![0.2, 0.2], vec![0.1, 0.3]],
            vec![UtilitySpec::cobb_douglas(vec![0.4, 0.6], vec![1.0, 1.1])],
            SolverConfig::default(),
        )
        .unwrap();
        let scheme = CostScheme::equal(1, 2);
        let alloc = Allocation::new(vec![vec![0.8, 0.8]], 0);
        let po = is_pareto_optimal(&econ, &alloc).unwrap();
        if po.optimal {
            let gammas: Vec<_> = (0..2).map(|z| construct_gamma_z(&econ, &alloc, z).unwrap().bundles).collect();
            assert!(alpha_sweep(&econ, &scheme, &alloc, &gammas, 8, false).unwrap().consistent);
        } else {
            // project b is better for the only agent
            assert!(matches!(alpha_sweep(&econ, &scheme, &alloc, &[None, None], 8, false), Err(Error::NotParetoOptimal)));
        }
    }

    proptest! {
        #[test]
        fn total_endowment_identity(a0 in 0.0f64..=1.0, a1 in 0.0f64..=1.0) {
            let (econ, scheme) = catalog::agree();
            let g = catalog::agree_lopsided().bundles;
            let alpha = [a0, a1];
            let e = perturbed_endowments(&econ, &scheme, &g, 0, &alpha).unwrap();
            for j in 0..2 {
                let lhs: f64 = e.iter().map(|b| b[j]).sum();
                let share: f64 = (0..2).map(|i| (1.0 - alpha[i]) * scheme.rho(i, 0)).sum();
                let rhs: f64 = (0..2).map(|i| alpha[i] * econ.endowment(i)[j] + (1.0 - alpha[i]) * g[i][j]).sum::<f64>()
                    + share * econ.cost(0)[j];
                prop_assert!((lhs - rhs).abs() <= 1e-14);
            }
        }
    }
}
