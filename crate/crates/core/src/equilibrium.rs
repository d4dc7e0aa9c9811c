//! Per-project Walrasian markets, cost share equilibria and supporting prices.

use rayon::prelude::*;
use serde::Serialize;

use crate::blocking::{least_excess_price, solve_on_resources};
use crate::economy::{check_feasible, require_feasible, Allocation, CostScheme, Economy};
use crate::error::{Error, Result};
use crate::preferences::{demand, indirect_utility, utility_eval, utility_gradient, CheckEntry};
use crate::vecops::{dot, max_abs, normalize_simplex, sum_bundles};

/// Prices indexed by project, each on the unit simplex.
pub type PriceSystem = Vec<Vec<f64>>;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WalrasSolution {
    pub project: usize,
    pub prices: Vec<f64>,
    pub bundles: Vec<Vec<f64>>,
    pub excess: Vec<f64>,
    pub iterations: usize,
    /// Largest `|p . Z(p)|` over all iterates.
    pub walras_law_gap: f64,
}

const DAMPING: f64 = 0.5;
const PRICE_FLOOR: f64 = 1e-12;

/// `e_i - rho(i, z) c(z)`, rejecting negative components beyond `tol_feas`.
pub fn net_endowments(econ: &Economy, scheme: &CostScheme, z: usize) -> Result<Vec<Vec<f64>>> {
    econ.check_project(z)?;
    let tol = econ.config().tol_feas;
    (0..econ.n())
        .map(|i| {
            let rho = scheme.rho(i, z);
            let w: Vec<f64> = econ.endowment(i).iter().zip(econ.cost(z)).map(|(e, c)| e - rho * c).collect();
            if w.iter().any(|v| *v < -tol) {
                return Err(Error::NegativeNetEndowment { agent: i, project: econ.project_name(z).to_string() });
            }
            Ok(w.into_iter().map(|v| v.max(0.0)).collect())
        })
        .collect()
}

fn market_demand(econ: &Economy, net: &[Vec<f64>], p: &[f64], z: usize) -> Result<Vec<Vec<f64>>> {
    (0..econ.n()).map(|i| demand(econ.utility(i), p, dot(p, &net[i]), z)).collect()
}

/// Damped multiplicative tatonnement from the uniform price.
pub fn walras_solve(econ: &Economy, scheme: &CostScheme, z: usize) -> Result<WalrasSolution> {
    let net = net_endowments(econ, scheme, z)?;
    let ell = econ.ell();
    let supply = sum_bundles(ell, &net);
    let cfg = econ.config();
    let target = 1e-3 * cfg.tol_feas;
    let mut p = vec![1.0 / ell as f64; ell];
    let mut gap = 0.0f64;
    for it in 0..=cfg.max_iter {
        let bundles = market_demand(econ, &net, &p, z)?;
        let excess: Vec<f64> = sum_bundles(ell, &bundles).iter().zip(&supply).map(|(d, s)| d - s).collect();
        gap = gap.max(dot(&p, &excess).abs());
        if max_abs(&excess) <= target {
            return Ok(WalrasSolution { project: z, prices: p, bundles, excess, iterations: it, walras_law_gap: gap });
        }
        for j in 0..ell {
            p[j] = (p[j] * (1.0 + DAMPING * excess[j] / supply[j])).max(PRICE_FLOOR);
        }
        normalize_simplex(&mut p);
    }
    Err(Error::NonConvergence(cfg.max_iter))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumCertificate {
    pub allocation: Allocation,
    pub prices: PriceSystem,
    pub rho: Vec<Vec<f64>>,
    /// `indirect[i][z] = V_i(z)`.
    pub indirect: Vec<Vec<f64>>,
    /// `margins[i][z] = u_i(x_i, y) - V_i(z)`.
    pub margins: Vec<Vec<f64>>,
}

fn indirect_matrix_column(econ: &Economy, scheme: &CostScheme, p: &[f64], z: usize) -> Result<Vec<f64>> {
    let cz = dot(p, econ.cost(z));
    (0..econ.n())
        .map(|i| indirect_utility(econ.utility(i), p, dot(p, econ.endowment(i)) - scheme.rho(i, z) * cz, z))
        .collect()
}

/// Best utility agent `i` can afford at project `z` under `prices[z]`.
pub fn indirect_matrix(econ: &Economy, scheme: &CostScheme, prices: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    if prices.len() != econ.k() {
        return Err(Error::Dimension(format!("{} price vectors for {} projects", prices.len(), econ.k())));
    }
    let mut v = vec![vec![0.0; econ.k()]; econ.n()];
    for z in 0..econ.k() {
        let p = &prices[z];
        let cz = dot(p, econ.cost(z));
        for (i, row) in v.iter_mut().enumerate() {
            let wealth = dot(p, econ.endowment(i)) - scheme.rho(i, z) * cz;
            row[z] = indirect_utility(econ.utility(i), p, wealth, z)?;
        }
    }
    Ok(v)
}

pub fn find_cost_share_equilibrium(econ: &Economy, scheme: &CostScheme) -> Result<Option<EquilibriumCertificate>> {
    let solutions = (0..econ.k()).into_par_iter().map(|z| walras_solve(econ, scheme, z)).collect::<Result<Vec<_>>>()?;
    let prices: PriceSystem = solutions.iter().map(|s| s.prices.clone()).collect();
    let indirect = indirect_matrix(econ, scheme, &prices)?;
    let eps = econ.config().eps_strict;
    for (y, sol) in solutions.iter().enumerate() {
        let alloc = Allocation::new(sol.bundles.clone(), y);
        let u = econ.utilities_at(&alloc)?;
        // Walras prices elsewhere first; a failing project gets the price
        // that minimises the largest affordable gain instead.
        let mut prices = prices.clone();
        let mut indirect = indirect.clone();
        let mut ok = true;
        for z in (0..econ.k()).filter(|z| *z != y) {
            if (0..econ.n()).all(|i| u[i] - indirect[i][z] >= -eps) {
                continue;
            }
            let (p, excess) = least_excess_price(econ, scheme, &u, z)?;
            if excess > eps {
                ok = false;
                break;
            }
            let column = indirect_matrix_column(econ, scheme, &p, z)?;
            for (row, v) in indirect.iter_mut().zip(column) {
                row[z] = v;
            }
            prices[z] = p;
        }
        let margins: Vec<Vec<f64>> = (0..econ.n()).map(|i| indirect[i].iter().map(|v| u[i] - v).collect()).collect();
        if ok && margins.iter().flatten().all(|m| *m >= -eps) {
            return Ok(Some(EquilibriumCertificate {
                allocation: alloc,
                prices,
                rho: scheme.matrix().to_vec(),
                indirect,
                margins,
            }));
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub agent: usize,
    pub project: usize,
    pub amount: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumReport {
    pub pass: bool,
    pub checks: Vec<CheckEntry>,
    /// Largest optimality shortfall `V_i(z) - u_i(x_i, y)`, if any is positive.
    pub worst: Option<Violation>,
    pub margins: Vec<Vec<f64>>,
}

pub fn verify_cost_share_equilibrium(
    econ: &Economy,
    scheme: &CostScheme,
    alloc: &Allocation,
    prices: &[Vec<f64>],
) -> EquilibriumReport {
    let cfg = econ.config();
    let mut checks = Vec::new();
    let fail = |checks: &mut Vec<CheckEntry>, name: &str, detail: String| {
        checks.push(CheckEntry::new(name, false, detail));
    };
    let feasible = match check_feasible(econ, alloc) {
        Ok(f) => {
            checks.push(CheckEntry::new("feasible", f.feasible, format!("residual {:?}", f.residual)));
            true
        }
        Err(e) => {
            fail(&mut checks, "feasible", e.to_string());
            false
        }
    };
    let shaped = prices.len() == econ.k() && prices.iter().all(|p| p.len() == econ.ell());
    let normalized = shaped
        && prices.iter().all(|p| p.iter().all(|v| *v >= 0.0) && (p.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
    checks.push(CheckEntry::new("prices_normalized", normalized, ""));
    let mut margins = Vec::new();
    let mut worst = None;
    if feasible && shaped {
        let y = alloc.project;
        let p = &prices[y];
        let cy = dot(p, econ.cost(y));
        let mut budget_ok = true;
        let mut detail = String::new();
        for i in 0..econ.n() {
            let slack = dot(p, econ.endowment(i)) + cfg.tol_feas - dot(p, &alloc.bundles[i]) - scheme.rho(i, y) * cy;
            if slack < 0.0 {
                budget_ok = false;
                detail.push_str(&format!("agent {i} over budget by {} ", -slack));
            }
        }
        checks.push(CheckEntry::new("budget", budget_ok, detail.trim_end()));
        match (indirect_matrix(econ, scheme, prices), econ.utilities_at(alloc)) {
            (Ok(v), Ok(u)) => {
                margins = (0..econ.n()).map(|i| v[i].iter().map(|vz| u[i] - vz).collect::<Vec<f64>>()).collect();
                let mut w: Option<Violation> = None;
                for (i, row) in margins.iter().enumerate() {
                    for (z, m) in row.iter().enumerate() {
                        if -m > w.as_ref().map_or(0.0, |w| w.amount) {
                            w = Some(Violation { agent: i, project: z, amount: -m });
                        }
                    }
                }
                let ok = w.as_ref().is_none_or(|w| w.amount <= cfg.eps_strict);
                let detail = match &w {
                    Some(w) => format!("agent {} at {} short by {}", w.agent, econ.project_name(w.project), w.amount),
                    None => "all margins non-negative".to_string(),
                };
                checks.push(CheckEntry::new("optimality", ok, detail));
                worst = w;
            }
            (Err(e), _) | (_, Err(e)) => fail(&mut checks, "optimality", e.to_string()),
        }
    }
    EquilibriumReport { pass: checks.iter().all(|c| c.pass), checks, worst, margins }
}

/// Common normalised gradient direction of all agents at `bundles`.
pub fn supporting_price(econ: &Economy, bundles: &[Vec<f64>], z: usize) -> Result<Vec<f64>> {
    const TOL_GRAD: f64 = 1e-6;
    let mut directions = Vec::with_capacity(econ.n());
    for (i, x) in bundles.iter().enumerate() {
        let mut g = utility_gradient(econ.utility(i), x, z)?;
        normalize_simplex(&mut g);
        directions.push(g);
    }
    for (i, d) in directions.iter().enumerate().skip(1) {
        let gap = d.iter().zip(&directions[0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if gap > TOL_GRAD {
            return Err(Error::NonProportional { project: econ.project_name(z).to_string(), first: 0, second: i, gap });
        }
    }
    Ok(directions.swap_remove(0))
}

/// Supporting prices from first-order conditions at the compensating
/// allocations `gammas[z]`; `gammas[y]` must be the allocation itself.
pub fn recover_prices(econ: &Economy, alloc: &Allocation, gammas: &[Vec<Vec<f64>>]) -> Result<PriceSystem> {
    require_feasible(econ, alloc)?;
    if gammas.len() != econ.k() {
        return Err(Error::Dimension(format!("{} compensating allocations for {} projects", gammas.len(), econ.k())));
    }
    let own = &gammas[alloc.project];
    let drift = own.iter().zip(&alloc.bundles).flat_map(|(a, b)| a.iter().zip(b).map(|(u, v)| (u - v).abs())).fold(0.0, f64::max);
    if own.len() != alloc.bundles.len() || drift > econ.config().tol_feas {
        return Err(Error::Input("compensating allocation at the realised project must be the allocation".into()));
    }
    (0..econ.k()).map(|z| supporting_price(econ, &gammas[z], z)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GammaZ {
    pub project: usize,
    /// Grand-coalition max-min margin against the allocation's utilities.
    pub margin: f64,
    /// Present iff `margin >= -eps_strict`.
    pub bundles: Option<Vec<Vec<f64>>>,
}

/// Allocation at `z` that gives every agent at least their utility under
/// `alloc`, when one exists.
pub fn construct_gamma_z(econ: &Economy, alloc: &Allocation, z: usize) -> Result<GammaZ> {
    require_feasible(econ, alloc)?;
    econ.check_project(z)?;
    if z == alloc.project {
        return Ok(GammaZ { project: z, margin: 0.0, bundles: Some(alloc.bundles.clone()) });
    }
    let refs = econ.utilities_at(alloc)?;
    let ones = vec![1.0; econ.n()];
    let sol = solve_on_resources(econ, &ones, z, &refs, &econ.net_resources(z), None)?.expect("no screening requested");
    let ok = sol.margin >= -econ.config().eps_strict;
    Ok(GammaZ { project: z, margin: sol.margin, bundles: ok.then_some(sol.xi) })
}

/// `u_i(x, z)` for every agent, for callers holding raw bundles.
pub fn bundle_utilities(econ: &Economy, bundles: &[Vec<f64>], z: usize) -> Result<Vec<f64>> {
    (0..econ.n()).map(|i| utility_eval(econ.utility(i), &bundles[i], z)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blocking::sigma_core_check;
    use crate::catalog;
    use crate::economy::SolverConfig;
    use crate::preferences::UtilitySpec;
    use approx::assert_abs_diff_eq;

    #[test]
    fn walras_agree_both_projects() {
        let (econ, scheme) = catalog::agree();
        for (z, share) in [(0, 0.6), (1, 0.7)] {
            let s = walras_solve(&econ, &scheme, z).unwrap();
            assert_abs_diff_eq!(s.prices[0], 0.5, epsilon = 1e-12);
            for b in &s.bundles {
                assert_abs_diff_eq!(b[0], share, epsilon = 1e-11);
                assert_abs_diff_eq!(b[1], share, epsilon = 1e-11);
            }
            assert!(s.walras_law_gap <= 1e-12);
        }
    }

    #[test]
    fn walras_single_agent_is_autarky() {
        let econ = Economy::new(
            vec!["a".into()],
            vec![vec![1.0, 2.0]],
            vec![vec![0.2, 0.4]],
            vec![UtilitySpec::cobb_douglas(vec![0.3, 0.7], vec![1.0])],
            SolverConfig::default(),
        )
        .unwrap();
        let s = walras_solve(&econ, &CostScheme::equal(1, 1), 0).unwrap();
        assert_abs_diff_eq!(s.bundles[0][0], 0.8, epsilon = 1e-11);
        assert_abs_diff_eq!(s.bundles[0][1], 1.6, epsilon = 1e-11);
        // p proportional to the gradient at the autarky bundle
        let g = utility_gradient(econ.utility(0), &[0.8, 1.6], 0).unwrap();
        assert_abs_diff_eq!(s.prices[0] / s.prices[1], g[0] / g[1], epsilon = 1e-9);
    }

    #[test]
    fn negative_net_endowment_is_rejected() {
        let (econ, _) = catalog::agree();
        let scheme = CostScheme::unchecked(vec![vec![0.0, 0.5], vec![1.0, 0.5]]);
        let econ = econ.with_endowments(vec![vec![1.0, 1.0], vec![0.1, 0.1]]).unwrap();
        assert!(matches!(walras_solve(&econ, &scheme, 0), Err(Error::NegativeNetEndowment { agent: 1, .. })));
    }

    #[test]
    fn agree_equilibrium_certificate() {
        let (econ, scheme) = catalog::agree();
        let cert = find_cost_share_equilibrium(&econ, &scheme).unwrap().unwrap();
        assert_eq!(cert.allocation.project, 0);
        for i in 0..2 {
            assert_abs_diff_eq!(cert.allocation.bundles[i][0], 0.6, epsilon = 1e-11);
            assert_abs_diff_eq!(cert.indirect[i][0], 1.2, epsilon = 1e-11);
            assert_abs_diff_eq!(cert.indirect[i][1], 0.7, epsilon = 1e-11);
        }
        let report = verify_cost_share_equilibrium(&econ, &scheme, &cert.allocation, &cert.prices);
        assert!(report.pass, "{:?}", report.checks);
        assert!(sigma_core_check(&econ, &scheme, &cert.allocation).unwrap().in_core);
    }

    #[test]
    fn opposing_tastes_have_no_equilibrium_under_walras_selection() {
        let (econ, scheme) = catalog::opposing();
        assert!(find_cost_share_equilibrium(&econ, &scheme).unwrap().is_none());
    }

    #[test]
    fn single_project_always_has_equilibrium() {
        let econ = Economy::new(
            vec!["only".into()],
            vec![vec![1.0, 0.2], vec![0.3, 1.0], vec![0.5, 0.5]],
            vec![vec![0.1, 0.1]],
            vec![
                UtilitySpec::cobb_douglas(vec![0.2, 0.8], vec![1.0]),
                UtilitySpec::cobb_douglas(vec![0.6, 0.4], vec![1.5]),
                UtilitySpec::cobb_douglas(vec![0.5, 0.5], vec![1.0]),
            ],
            SolverConfig::default(),
        )
        .unwrap();
        let scheme = CostScheme::equal(3, 1);
        assert!(find_cost_share_equilibrium(&econ, &scheme).unwrap().is_some());
    }

    #[test]
    fn verify_names_the_violating_pair() {
        // Cheaper first good at y2 lets agent 0 (rich in it) reach 1.5 > 1.2.
        let (econ, scheme) = catalog::agree();
        let prices = vec![vec![0.5, 0.5], vec![0.9, 0.1]];
        let r = verify_cost_share_equilibrium(&econ, &scheme, &catalog::agree_equilibrium(), &prices);
        assert!(!r.pass);
        let w = r.worst.unwrap();
        assert_eq!((w.agent, w.project), (0, 1));
        assert_abs_diff_eq!(w.amount, 1.5 - 1.2, epsilon = 1e-9);
    }

    #[test]
    fn verify_rejects_infeasible() {
        let (econ, scheme) = catalog::agree();
        let alloc = Allocation::new(vec![vec![1.0, 1.0], vec![1.0, 1.0]], 0);
        let r = verify_cost_share_equilibrium(&econ, &scheme, &alloc, &[vec![0.5, 0.5], vec![0.5, 0.5]]);
        assert!(!r.pass);
        assert!(r.checks.iter().any(|c| c.name == "feasible" && !c.pass));
    }

    #[test]
    fn recover_prices_examples() {
        let (econ, _) = catalog::agree();
        let x = catalog::agree_equilibrium();
        let gammas = vec![x.bundles.clone(), vec![vec![0.7, 0.7], vec![0.7, 0.7]]];
        let p = recover_prices(&econ, &x, &gammas).unwrap();
        for pz in &p {
            assert_abs_diff_eq!(pz[0], 0.5, epsilon = 1e-12);
        }
        let skew = vec![x.bundles.clone(), vec![vec![0.9, 0.3], vec![0.3, 0.9]]];
        assert!(matches!(recover_prices(&econ, &x, &skew), Err(Error::NonProportional { second: 1, .. })));
    }

    #[test]
    fn gamma_z_examples() {
        let (econ, _) = catalog::agree();
        let x = catalog::agree_lopsided();
        assert_eq!(construct_gamma_z(&econ, &x, 0).unwrap().bundles.unwrap(), x.bundles);
        let g = construct_gamma_z(&econ, &catalog::agree_equilibrium(), 1).unwrap();
        assert!(g.bundles.is_none());
        assert!(g.margin < -0.4);

        let (mild, _) = catalog::mild();
        let alloc = Allocation::new(vec![vec![0.5, 0.5], vec![0.95, 0.95]], 0);
        let g = construct_gamma_z(&mild, &alloc, 1).unwrap();
        let bundles = g.bundles.unwrap();
        let refs = mild.utilities_at(&alloc).unwrap();
        let got = bundle_utilities(&mild, &bundles, 1).unwrap();
        for i in 0..2 {
            assert!(got[i] >= refs[i] - 1e-7);
        }
        assert!(check_feasible(&mild, &Allocation::new(bundles, 1)).unwrap().feasible);
    }
}
