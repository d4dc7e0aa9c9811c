//! Coalition improvement oracle: max-min surplus of a (weighted) coalition
//! that must cover its cost share out of its own endowment.

mod grid;
pub(crate) mod solver;

use rayon::prelude::*;
use serde::Serialize;

use crate::economy::{require_feasible, sigma_of_coalition, Allocation, Coalition, CostScheme, Economy};
use crate::error::{Error, Result};
use crate::preferences::utility_eval;
use crate::vecops::max_abs;
use grid::GridAgent;
use solver::{MaxMin, Member};

/// Participation weights in `[0, 1]^n` with non-empty support.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoalitionWeights(Vec<f64>);

impl CoalitionWeights {
    pub fn new(gamma: Vec<f64>) -> Result<Self> {
        if let Some(g) = gamma.iter().find(|g| !(0.0..=1.0).contains(*g)) {
            return Err(Error::InvalidCoalition(format!("weight {g} outside [0, 1]")));
        }
        if gamma.iter().all(|g| *g == 0.0) {
            return Err(Error::InvalidCoalition("empty support".into()));
        }
        Ok(Self(gamma))
    }

    pub fn characteristic(s: Coalition, n: usize) -> Result<Self> {
        Self::new(s.indicator(n))
    }

    pub fn grand(n: usize) -> Self {
        Self(vec![1.0; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.0.len()).filter(|i| self.0[*i] > 0.0).collect()
    }
}

/// `sum_i gamma_i e_i - sigma~(gamma, z) c(z)`; may have negative entries.
pub fn coalition_resources(econ: &Economy, scheme: &CostScheme, gamma: &CoalitionWeights, z: usize) -> Vec<f64> {
    let share = scheme.sigma_tilde(gamma.as_slice(), z);
    (0..econ.ell())
        .map(|j| {
            let own: f64 = gamma.as_slice().iter().enumerate().map(|(i, g)| g * econ.endowment(i)[j]).sum();
            own - share * econ.cost(z)[j]
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarginSolution {
    /// Margin attained by `xi`, a lower bound on the optimum.
    pub margin: f64,
    /// Upper bound on the optimum from the price dual.
    pub upper: f64,
    /// One bundle per agent; zero off the support.
    pub xi: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockingCertificate {
    pub gamma: CoalitionWeights,
    pub project: usize,
    pub xi: Vec<Vec<f64>>,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificateCheck {
    pub valid: bool,
    pub resource_residual: f64,
    pub min_improvement: f64,
}

impl BlockingCertificate {
    /// Re-derives the resource identity and the strict improvement from scratch.
    pub fn check(&self, econ: &Economy, scheme: &CostScheme, refs: &[f64]) -> Result<CertificateCheck> {
        econ.check_project(self.project)?;
        if self.xi.len() != econ.n() || refs.len() != econ.n() || self.gamma.as_slice().len() != econ.n() {
            return Err(Error::Dimension("certificate does not match the economy".into()));
        }
        let g = self.gamma.as_slice();
        let resources = coalition_resources(econ, scheme, &self.gamma, self.project);
        let residual: Vec<f64> = (0..econ.ell())
            .map(|j| g.iter().zip(&self.xi).map(|(gi, x)| gi * x[j]).sum::<f64>() - resources[j])
            .collect();
        let mut min_improvement = f64::INFINITY;
        for i in self.gamma.support() {
            let u = utility_eval(econ.utility(i), &self.xi[i], self.project)?;
            min_improvement = min_improvement.min(u - refs[i]);
        }
        let resource_residual = max_abs(&residual);
        let cfg = econ.config();
        Ok(CertificateCheck {
            valid: resource_residual <= cfg.tol_feas && min_improvement >= cfg.eps_strict,
            resource_residual,
            min_improvement,
        })
    }
}

fn check_refs(econ: &Economy, refs: &[f64]) -> Result<()> {
    if refs.len() != econ.n() {
        return Err(Error::Dimension(format!("{} reference utilities for {} agents", refs.len(), econ.n())));
    }
    Ok(())
}

/// Solves the max-min program on explicit resources. With `screen = Some(t)`
/// returns `None` as soon as the optimum is proven below `t`.
pub(crate) fn solve_on_resources(
    econ: &Economy,
    gamma: &[f64],
    z: usize,
    refs: &[f64],
    resources: &[f64],
    screen: Option<f64>,
) -> Result<Option<MarginSolution>> {
    let cfg = econ.config();
    if let Some(short) = resources.iter().copied().find(|r| *r < -cfg.tol_feas) {
        return Err(Error::Unaffordable { project: econ.project_name(z).to_string(), shortfall: -short });
    }
    let support: Vec<usize> = (0..gamma.len()).filter(|i| gamma[*i] > 0.0).collect();
    let members = support
        .iter()
        .map(|&i| {
            Ok(Member {
                spec: econ.utility(i),
                theta: econ.utility(i).theta(z)?,
                gamma: gamma[i],
                reference: refs[i],
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let problem = MaxMin {
        members,
        resources: resources.iter().map(|r| r.max(0.0)).collect(),
        tol: cfg.tol_solver,
        max_iter: cfg.max_iter,
    };
    if let Some(t) = screen {
        if problem.screen(t) {
            return Ok(None);
        }
    }
    let sol = problem.solve();
    let mut xi = vec![vec![0.0; econ.ell()]; econ.n()];
    for (k, i) in support.iter().enumerate() {
        xi[*i] = sol.bundles[k].clone();
    }
    Ok(Some(MarginSolution { margin: sol.margin, upper: sol.upper, xi }))
}

/// Price at `z` minimising the largest excess `p.(e_i - rho(i, z) c(z)) - ref_i e_i(p)`
/// of an agent's net wealth over the cost of their reference utility, and
/// that excess. Supporting prices at `z` exist iff the minimum is `<= 0`.
pub fn least_excess_price(econ: &Economy, scheme: &CostScheme, refs: &[f64], z: usize) -> Result<(Vec<f64>, f64)> {
    econ.check_project(z)?;
    check_refs(econ, refs)?;
    let members = (0..econ.n())
        .map(|i| Ok(Member { spec: econ.utility(i), theta: econ.utility(i).theta(z)?, gamma: 1.0, reference: refs[i] }))
        .collect::<Result<Vec<_>>>()?;
    let incomes: Vec<Vec<f64>> = (0..econ.n())
        .map(|i| econ.endowment(i).iter().zip(econ.cost(z)).map(|(e, c)| e - scheme.rho(i, z) * c).collect())
        .collect();
    Ok(solver::least_excess_price(&members, &incomes))
}

pub fn blocking_margin(
    econ: &Economy,
    scheme: &CostScheme,
    gamma: &CoalitionWeights,
    z: usize,
    refs: &[f64],
) -> Result<MarginSolution> {
    econ.check_project(z)?;
    check_refs(econ, refs)?;
    if gamma.as_slice().len() != econ.n() {
        return Err(Error::Dimension("coalition weights do not match the agent count".into()));
    }
    let resources = coalition_resources(econ, scheme, gamma, z);
    Ok(solve_on_resources(econ, gamma.as_slice(), z, refs, &resources, None)?.expect("no screening requested"))
}

/// Certificate if `gamma` blocks at `z` with margin above `eps_strict`.
/// Unaffordable cost shares count as non-blocking.
pub(crate) fn try_block(
    econ: &Economy,
    scheme: &CostScheme,
    gamma: &CoalitionWeights,
    z: usize,
    refs: &[f64],
) -> Result<Option<BlockingCertificate>> {
    let eps = econ.config().eps_strict;
    let resources = coalition_resources(econ, scheme, gamma, z);
    match solve_on_resources(econ, gamma.as_slice(), z, refs, &resources, Some(eps)) {
        Ok(Some(sol)) if sol.margin > eps => {
            Ok(Some(BlockingCertificate { gamma: gamma.clone(), project: z, xi: sol.xi, margin: sol.margin }))
        }
        Ok(_) | Err(Error::Unaffordable { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

pub fn is_blocked_by_coalition(
    econ: &Economy,
    scheme: &CostScheme,
    s: Coalition,
    alloc: &Allocation,
) -> Result<Option<BlockingCertificate>> {
    require_feasible(econ, alloc)?;
    sigma_of_coalition(scheme, s, 0)?;
    let refs = econ.utilities_at(alloc)?;
    let gamma = CoalitionWeights::characteristic(s, econ.n())?;
    for z in 0..econ.k() {
        if let Some(cert) = try_block(econ, scheme, &gamma, z, &refs)? {
            return Ok(Some(cert));
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoreVerdict {
    pub in_core: bool,
    pub coalitions_checked: usize,
    pub witness: Option<BlockingCertificate>,
}

pub fn sigma_core_check(econ: &Economy, scheme: &CostScheme, alloc: &Allocation) -> Result<CoreVerdict> {
    let n = econ.n();
    if n > Coalition::MAX_AGENTS {
        return Err(Error::EnumerationCap(format!("{n} agents exceed the coalition enumeration bound")));
    }
    require_feasible(econ, alloc)?;
    let refs = econ.utilities_at(alloc)?;
    let total = (1u64 << n) - 1;
    let found = (1..=total as u32)
        .into_par_iter()
        .map(|mask| {
            let gamma = CoalitionWeights::characteristic(Coalition(mask), n)?;
            for z in 0..econ.k() {
                if let Some(c) = try_block(econ, scheme, &gamma, z, &refs)? {
                    return Ok(Some(c));
                }
            }
            Ok(None)
        })
        .find_first(|r: &Result<Option<BlockingCertificate>>| !matches!(r, Ok(None)));
    match found {
        Some(Err(e)) => Err(e),
        Some(Ok(witness)) => Ok(CoreVerdict { in_core: false, coalitions_checked: total as usize, witness }),
        None => Ok(CoreVerdict { in_core: true, coalitions_checked: total as usize, witness: None }),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParetoVerdict {
    pub optimal: bool,
    /// Grand-coalition margin per project.
    pub margins: Vec<f64>,
    pub witness: Option<BlockingCertificate>,
}

/// Grand coalition with the full net resources `sum e - c(z)` at every project.
pub fn is_pareto_optimal(econ: &Economy, alloc: &Allocation) -> Result<ParetoVerdict> {
    require_feasible(econ, alloc)?;
    let refs = econ.utilities_at(alloc)?;
    let gamma = CoalitionWeights::grand(econ.n());
    let eps = econ.config().eps_strict;
    let mut margins = Vec::with_capacity(econ.k());
    let mut witness = None;
    for z in 0..econ.k() {
        let resources = econ.net_resources(z);
        let sol = solve_on_resources(econ, gamma.as_slice(), z, &refs, &resources, None)?
            .expect("no screening requested");
        if witness.is_none() && sol.margin > eps {
            witness = Some(BlockingCertificate { gamma: gamma.clone(), project: z, xi: sol.xi.clone(), margin: sol.margin });
        }
        margins.push(sol.margin);
    }
    Ok(ParetoVerdict { optimal: witness.is_none(), margins, witness })
}

/// Lattice lower bound on the blocking margin; at most two commodities and
/// three support agents.
pub fn brute_force_blocking(
    econ: &Economy,
    scheme: &CostScheme,
    gamma: &CoalitionWeights,
    z: usize,
    refs: &[f64],
    grid_steps: usize,
) -> Result<f64> {
    econ.check_project(z)?;
    check_refs(econ, refs)?;
    let support = gamma.support();
    if econ.ell() > 2 || support.len() > 3 {
        return Err(Error::Dimension(format!(
            "grid oracle needs at most 2 commodities and 3 agents, got {} and {}",
            econ.ell(),
            support.len()
        )));
    }
    if grid_steps == 0 {
        return Err(Error::Input("grid_steps must be positive".into()));
    }
    let resources = coalition_resources(econ, scheme, gamma, z);
    if let Some(short) = resources.iter().copied().find(|r| *r < -econ.config().tol_feas) {
        return Err(Error::Unaffordable { project: econ.project_name(z).to_string(), shortfall: -short });
    }
    let resources: Vec<f64> = resources.iter().map(|r| r.max(0.0)).collect();
    let agents = grid_agents(econ, gamma, z, refs)?;
    Ok(grid::grid_margin(&agents, &resources, grid_steps))
}

fn grid_agents<'a>(econ: &'a Economy, gamma: &CoalitionWeights, z: usize, refs: &[f64]) -> Result<Vec<GridAgent<'a>>> {
    gamma
        .support()
        .into_iter()
        .map(|i| {
            Ok(GridAgent {
                spec: econ.utility(i),
                theta: econ.utility(i).theta(z)?,
                gamma: gamma.as_slice()[i],
                reference: refs[i],
            })
        })
        .collect()
}

/// Admissible gap `2 L step` between the solver optimum (bundles `xi`) and the
/// lattice optimum at `grid_steps`.
pub fn grid_error_bound(
    econ: &Economy,
    scheme: &CostScheme,
    gamma: &CoalitionWeights,
    z: usize,
    xi: &[Vec<f64>],
    grid_steps: usize,
) -> Result<f64> {
    let resources: Vec<f64> = coalition_resources(econ, scheme, gamma, z).iter().map(|r| r.max(0.0)).collect();
    let refs = vec![0.0; econ.n()];
    let agents = grid_agents(econ, gamma, z, &refs)?;
    let bundles: Vec<Vec<f64>> = gamma.support().into_iter().map(|i| xi[i].clone()).collect();
    Ok(grid::lipschitz_gap(&agents, &bundles, &resources, grid_steps))
}

#[cfg(test)]
mod tests;
