//! Finite exchange economies with a finite set of public projects.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preferences::{check_desirable, CheckEntry, UtilitySpec};
use crate::vecops::{max_abs, sum_bundles};

/// Numerical tolerances and search bounds shared by every solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub tol_feas: f64,
    pub eps_strict: f64,
    pub tol_solver: f64,
    pub max_iter: usize,
    pub r_max: u32,
    pub alpha_grid: u32,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol_feas: 1e-9,
            eps_strict: 1e-7,
            tol_solver: 1e-8,
            max_iter: 100_000,
            r_max: 8,
            alpha_grid: 8,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let tolerances = [self.tol_feas, self.eps_strict, self.tol_solver];
        if tolerances.iter().any(|t| !(*t > 0.0)) {
            return Err(Error::Input("tolerances must be > 0".into()));
        }
        if self.r_max < 1 {
            return Err(Error::Input("r_max must be >= 1".into()));
        }
        if self.alpha_grid < 2 {
            return Err(Error::Input("alpha_grid must be >= 2".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::Input("max_iter must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Economy {
    projects: Vec<String>,
    endowments: Vec<Vec<f64>>,
    cost: Vec<Vec<f64>>,
    utilities: Vec<UtilitySpec>,
    config: SolverConfig,
}

impl Economy {
    /// Structural checks only (shapes, finiteness). Value invariants are
    /// reported by [`validate_economy`].
    pub fn new(
        projects: Vec<String>,
        endowments: Vec<Vec<f64>>,
        cost: Vec<Vec<f64>>,
        utilities: Vec<UtilitySpec>,
        config: SolverConfig,
    ) -> Result<Self> {
        config.validate()?;
        if projects.is_empty() {
            return Err(Error::Input("project set is empty".into()));
        }
        if endowments.is_empty() {
            return Err(Error::Input("economy needs at least one agent".into()));
        }
        let ell = endowments[0].len();
        if ell == 0 {
            return Err(Error::Input("economy needs at least one commodity".into()));
        }
        if utilities.len() != endowments.len() {
            return Err(Error::Dimension(format!(
                "{} endowments but {} utilities",
                endowments.len(),
                utilities.len()
            )));
        }
        if cost.len() != projects.len() {
            return Err(Error::Dimension(format!("{} projects but {} cost bundles", projects.len(), cost.len())));
        }
        for (i, e) in endowments.iter().enumerate() {
            if e.len() != ell {
                return Err(Error::Dimension(format!("endowment of agent {i} has {} components", e.len())));
            }
        }
        for (z, c) in cost.iter().enumerate() {
            if c.len() != ell {
                return Err(Error::Dimension(format!("cost of project {} has {} components", projects[z], c.len())));
            }
        }
        for (i, u) in utilities.iter().enumerate() {
            if u.ell() != ell {
                return Err(Error::Dimension(format!("utility of agent {i} has {} parameters", u.ell())));
            }
            if u.theta.len() != projects.len() {
                return Err(Error::Dimension(format!("utility of agent {i} has {} theta values", u.theta.len())));
            }
        }
        let finite = endowments.iter().chain(&cost).flatten().all(|v| v.is_finite());
        if !finite {
            return Err(Error::Input("non-finite endowment or cost".into()));
        }
        for (k, p) in projects.iter().enumerate() {
            if projects[..k].contains(p) {
                return Err(Error::Input(format!("duplicate project `{p}`")));
            }
        }
        Ok(Self { projects, endowments, cost, utilities, config })
    }

    pub fn n(&self) -> usize {
        self.endowments.len()
    }

    pub fn ell(&self) -> usize {
        self.endowments[0].len()
    }

    pub fn projects(&self) -> &[String] {
        &self.projects
    }

    pub fn k(&self) -> usize {
        self.projects.len()
    }

    pub fn project_index(&self, name: &str) -> Result<usize> {
        self.projects.iter().position(|p| p == name).ok_or_else(|| Error::UnknownProject(name.to_string()))
    }

    pub fn project_name(&self, z: usize) -> &str {
        &self.projects[z]
    }

    pub fn endowment(&self, i: usize) -> &[f64] {
        &self.endowments[i]
    }

    pub fn endowments(&self) -> &[Vec<f64>] {
        &self.endowments
    }

    pub fn cost(&self, z: usize) -> &[f64] {
        &self.cost[z]
    }

    pub fn utility(&self, i: usize) -> &UtilitySpec {
        &self.utilities[i]
    }

    pub fn utilities(&self) -> &[UtilitySpec] {
        &self.utilities
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn with_config(mut self, config: SolverConfig) -> Result<Self> {
        config.validate()?;
        self.config = config;
        Ok(self)
    }

    /// A copy with the endowments replaced.
    pub fn with_endowments(&self, endowments: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(self.projects.clone(), endowments, self.cost.clone(), self.utilities.clone(), self.config.clone())
    }

    pub fn aggregate_endowment(&self) -> Vec<f64> {
        sum_bundles(self.ell(), &self.endowments)
    }

    /// `sum_i e_i - c(z)`.
    pub fn net_resources(&self, z: usize) -> Vec<f64> {
        let mut r = self.aggregate_endowment();
        for (rj, cj) in r.iter_mut().zip(&self.cost[z]) {
            *rj -= cj;
        }
        r
    }

    pub(crate) fn check_project(&self, z: usize) -> Result<()> {
        if z < self.k() {
            Ok(())
        } else {
            Err(Error::ProjectIndex(z))
        }
    }

    /// Utilities `u_i(x_i, y)` of an allocation.
    pub fn utilities_at(&self, alloc: &Allocation) -> Result<Vec<f64>> {
        self.check_allocation_shape(alloc)?;
        (0..self.n())
            .map(|i| crate::preferences::utility_eval(&self.utilities[i], &alloc.bundles[i], alloc.project))
            .collect()
    }

    pub(crate) fn check_allocation_shape(&self, alloc: &Allocation) -> Result<()> {
        self.check_project(alloc.project)?;
        if alloc.bundles.len() != self.n() {
            return Err(Error::Dimension(format!("allocation has {} bundles for {} agents", alloc.bundles.len(), self.n())));
        }
        if let Some(b) = alloc.bundles.iter().find(|b| b.len() != self.ell()) {
            return Err(Error::Dimension(format!("bundle with {} components, expected {}", b.len(), self.ell())));
        }
        Ok(())
    }
}

/// Agent subset encoded as a bit mask (agent `i` is bit `i`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Coalition(pub u32);

impl Coalition {
    pub const MAX_AGENTS: usize = 20;

    pub fn grand(n: usize) -> Self {
        Coalition(((1u64 << n) - 1) as u32)
    }

    pub fn from_members(members: &[usize]) -> Self {
        Coalition(members.iter().fold(0, |m, i| m | (1 << i)))
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0 >> i & 1 == 1
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    pub fn members(&self, n: usize) -> Vec<usize> {
        (0..n).filter(|i| self.contains(*i)).collect()
    }

    pub fn indicator(&self, n: usize) -> Vec<f64> {
        (0..n).map(|i| if self.contains(i) { 1.0 } else { 0.0 }).collect()
    }
}

/// Cost distribution function `rho` stored jointly with the singleton values
/// of the contribution measure; the two coincide by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct CostScheme {
    /// `rho[i][z]`
    rho: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SchemeKind {
    Equal,
    /// Shares independent of the project.
    Linear(Vec<f64>),
    /// `rho[i][z]`.
    Explicit(Vec<Vec<f64>>),
}

const SCHEME_SUM_TOL: f64 = 1e-9;

pub fn make_scheme(kind: SchemeKind, n: usize, k: usize) -> Result<CostScheme> {
    let rho = match kind {
        SchemeKind::Equal => vec![vec![1.0 / n as f64; k]; n],
        SchemeKind::Linear(w) => {
            if w.len() != n {
                return Err(Error::Dimension(format!("{} weights for {n} agents", w.len())));
            }
            w.iter().map(|wi| vec![*wi; k]).collect()
        }
        SchemeKind::Explicit(rho) => rho,
    };
    let scheme = CostScheme::unchecked(rho);
    scheme.check(n, k)?;
    Ok(scheme)
}

impl CostScheme {
    /// No invariant checks; used when a report should describe the defects.
    pub fn unchecked(rho: Vec<Vec<f64>>) -> Self {
        Self { rho }
    }

    pub fn equal(n: usize, k: usize) -> Self {
        make_scheme(SchemeKind::Equal, n, k).expect("equal scheme is always valid")
    }

    pub fn matrix(&self) -> &[Vec<f64>] {
        &self.rho
    }

    pub fn rho(&self, i: usize, z: usize) -> f64 {
        self.rho[i][z]
    }

    pub fn sigma_singleton(&self, i: usize, z: usize) -> f64 {
        self.rho[i][z]
    }

    /// Contribution of a weighted (Aubin) coalition: `sum_i gamma_i sigma({i}, z)`.
    pub fn sigma_tilde(&self, gamma: &[f64], z: usize) -> f64 {
        gamma.iter().enumerate().map(|(i, g)| g * self.rho[i][z]).sum()
    }

    pub fn check(&self, n: usize, k: usize) -> Result<()> {
        if self.rho.len() != n || self.rho.iter().any(|r| r.len() != k) {
            return Err(Error::Dimension(format!("cost scheme must be {n} x {k}")));
        }
        if let Some(v) = self.rho.iter().flatten().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidScheme(format!("share {v} outside [0, 1]")));
        }
        for z in 0..k {
            let sum: f64 = (0..n).map(|i| self.rho[i][z]).sum();
            if (sum - 1.0).abs() > SCHEME_SUM_TOL {
                return Err(Error::RowSum { project: z.to_string(), sum });
            }
        }
        Ok(())
    }
}

pub fn sigma_of_coalition(scheme: &CostScheme, s: Coalition, z: usize) -> Result<f64> {
    if s.is_empty() {
        return Err(Error::InvalidCoalition("empty coalition".into()));
    }
    let n = scheme.rho.len();
    if scheme.rho.first().is_none_or(|r| z >= r.len()) {
        return Err(Error::ProjectIndex(z));
    }
    if s.0 >> n != 0 {
        return Err(Error::InvalidCoalition(format!("coalition mentions agents beyond {n}")));
    }
    Ok(s.members(n).iter().map(|i| scheme.rho[*i][z]).sum())
}

/// Private bundles per agent plus the realised project.
#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    pub bundles: Vec<Vec<f64>>,
    pub project: usize,
}

impl Allocation {
    pub fn new(bundles: Vec<Vec<f64>>, project: usize) -> Self {
        Self { bundles, project }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Feasibility {
    pub feasible: bool,
    /// `sum_i x_i + c(y) - sum_i e_i`
    pub residual: Vec<f64>,
}

pub fn check_feasible(econ: &Economy, alloc: &Allocation) -> Result<Feasibility> {
    econ.check_allocation_shape(alloc)?;
    for b in &alloc.bundles {
        if let Some(index) = b.iter().position(|v| *v < 0.0 || v.is_nan()) {
            return Err(Error::NegativeComponent { index, value: b[index] });
        }
    }
    let mut residual = sum_bundles(econ.ell(), &alloc.bundles);
    let aggregate = econ.aggregate_endowment();
    for j in 0..econ.ell() {
        residual[j] += econ.cost(alloc.project)[j] - aggregate[j];
    }
    Ok(Feasibility { feasible: max_abs(&residual) <= econ.config().tol_feas, residual })
}

pub(crate) fn require_feasible(econ: &Economy, alloc: &Allocation) -> Result<()> {
    let f = check_feasible(econ, alloc)?;
    if f.feasible {
        Ok(())
    } else {
        Err(Error::Infeasible(max_abs(&f.residual)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub pass: bool,
    pub checks: Vec<CheckEntry>,
}

pub fn validate_economy(econ: &Economy, scheme: &CostScheme) -> ValidationReport {
    let tol = econ.config().tol_feas;
    let (n, k) = (econ.n(), econ.k());
    let mut checks = Vec::new();

    let nonneg = econ.endowments().iter().flatten().all(|v| *v >= 0.0)
        && (0..k).all(|z| econ.cost(z).iter().all(|v| *v >= 0.0));
    checks.push(CheckEntry::new("nonnegative_endowments_and_costs", nonneg, ""));

    let aggregate = econ.aggregate_endowment();
    checks.push(CheckEntry::new(
        "aggregate_endowment_positive",
        aggregate.iter().all(|v| *v > 0.0),
        format!("sum e = {aggregate:?}"),
    ));

    for z in 0..k {
        let r = econ.net_resources(z);
        checks.push(CheckEntry::new(
            format!("resources_exceed_cost[{}]", econ.project_name(z)),
            r.iter().all(|v| *v >= tol),
            format!("sum e - c = {r:?}"),
        ));
    }

    let shape_ok = scheme.rho.len() == n && scheme.rho.iter().all(|r| r.len() == k);
    checks.push(CheckEntry::new("scheme_shape", shape_ok, format!("expected {n} x {k}")));
    if shape_ok {
        let in_range = scheme.rho.iter().flatten().all(|v| (0.0..=1.0).contains(v));
        checks.push(CheckEntry::new("shares_in_unit_interval", in_range, ""));
        for z in 0..k {
            let sum: f64 = (0..n).map(|i| scheme.rho[i][z]).sum();
            checks.push(CheckEntry::new(
                format!("rho_sums_to_one[{}]", econ.project_name(z)),
                (sum - 1.0).abs() <= SCHEME_SUM_TOL,
                format!("sum = {sum}"),
            ));
        }
        // sigma(N, z) = 1 and additivity hold by representation; the singleton
        // bridge rho(i, z) = sigma({i}, z) is structural.
        let grand = Coalition::grand(n.min(Coalition::MAX_AGENTS));
        let normalized = n > Coalition::MAX_AGENTS
            || (0..k).all(|z| sigma_of_coalition(scheme, grand, z).is_ok_and(|s| (s - 1.0).abs() <= SCHEME_SUM_TOL));
        checks.push(CheckEntry::new("sigma_normalized_and_additive", normalized, "sigma(S, z) = sum of singletons"));
        let zero_shares: Vec<String> = (0..n)
            .flat_map(|i| (0..k).map(move |z| (i, z)))
            .filter(|(i, z)| scheme.rho[*i][*z] == 0.0)
            .map(|(i, z)| format!("({i}, {})", econ.project_name(z)))
            .collect();
        // admitted, only flagged
        checks.push(CheckEntry::new(
            "zero_shares_flagged",
            true,
            if zero_shares.is_empty() { "none".to_string() } else { zero_shares.join(" ") },
        ));
    }

    for (i, u) in econ.utilities().iter().enumerate() {
        let r = check_desirable(u, k);
        let failed: Vec<&str> = r.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
        checks.push(CheckEntry::new(format!("utility_admissible[{i}]"), r.pass, failed.join(", ")));
    }

    ValidationReport { pass: checks.iter().all(|c| c.pass), checks }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn e2(c1: Vec<f64>) -> Economy {
        let u = |t: Vec<f64>| UtilitySpec::cobb_douglas(vec![0.5, 0.5], t);
        Economy::new(
            vec!["y1".into(), "y2".into()],
            vec![vec![1.0, 0.5], vec![0.5, 1.0]],
            vec![c1, vec![0.1, 0.1]],
            vec![u(vec![2.0, 1.0]), u(vec![2.0, 1.0])],
            SolverConfig::default(),
        )
        .unwrap()
    }

    #[test]
    fn validate_examples() {
        let econ = e2(vec![0.3, 0.3]);
        let scheme = CostScheme::equal(2, 2);
        assert!(validate_economy(&econ, &scheme).pass);

        let r = validate_economy(&e2(vec![2.0, 2.0]), &scheme);
        assert!(!r.pass);
        assert!(r.checks.iter().any(|c| c.name == "resources_exceed_cost[y1]" && !c.pass));

        let bad = CostScheme::unchecked(vec![vec![0.7, 0.5], vec![0.7, 0.5]]);
        let r = validate_economy(&econ, &bad);
        assert!(r.checks.iter().any(|c| c.name == "rho_sums_to_one[y1]" && !c.pass));
        assert!(r.checks.iter().any(|c| c.name == "rho_sums_to_one[y2]" && c.pass));
    }

    #[test]
    fn zero_share_is_admitted_and_flagged() {
        let econ = e2(vec![0.3, 0.3]);
        let scheme = make_scheme(SchemeKind::Linear(vec![0.0, 1.0]), 2, 2).unwrap();
        let r = validate_economy(&econ, &scheme);
        let flag = r.checks.iter().find(|c| c.name == "zero_shares_flagged").unwrap();
        assert!(flag.pass && flag.detail.contains("(0, y1)"));
    }

    #[test]
    fn feasibility_examples() {
        let econ = e2(vec![0.3, 0.3]);
        let f = check_feasible(&econ, &Allocation::new(vec![vec![0.6, 0.6], vec![0.6, 0.6]], 0)).unwrap();
        assert!(f.feasible);
        assert!(max_abs(&f.residual) < 1e-15);
        assert!(check_feasible(&econ, &Allocation::new(vec![vec![1.0, 1.0], vec![0.2, 0.2]], 0)).unwrap().feasible);
        let f = check_feasible(&econ, &Allocation::new(vec![vec![1.0, 1.0], vec![1.0, 1.0]], 0)).unwrap();
        assert!(!f.feasible);
        assert_abs_diff_eq!(f.residual[0], 0.8, epsilon = 1e-12);
        assert_abs_diff_eq!(f.residual[1], 0.8, epsilon = 1e-12);
        assert!(matches!(
            check_feasible(&econ, &Allocation::new(vec![vec![1.0], vec![0.2, 0.2]], 0)),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn sigma_examples() {
        let scheme = CostScheme::equal(2, 2);
        assert_eq!(sigma_of_coalition(&scheme, Coalition::grand(2), 0).unwrap(), 1.0);
        assert_eq!(sigma_of_coalition(&scheme, Coalition::from_members(&[1]), 1).unwrap(), 0.5);
        let s = make_scheme(SchemeKind::Explicit(vec![vec![0.3, 0.5], vec![0.7, 0.5]]), 2, 2).unwrap();
        assert_eq!(sigma_of_coalition(&s, Coalition::from_members(&[0]), 0).unwrap(), 0.3);
        assert!(sigma_of_coalition(&s, Coalition(0), 0).is_err());
        assert_eq!(sigma_of_coalition(&s, Coalition(1), 5), Err(Error::ProjectIndex(5)));
    }

    #[test]
    fn make_scheme_examples() {
        let s = make_scheme(SchemeKind::Equal, 2, 3).unwrap();
        assert!(s.matrix().iter().flatten().all(|v| *v == 0.5));
        let s = make_scheme(SchemeKind::Linear(vec![0.25, 0.75]), 2, 2).unwrap();
        assert_eq!(s.matrix(), &[vec![0.25, 0.25], vec![0.75, 0.75]]);
        let err = make_scheme(SchemeKind::Explicit(vec![vec![0.4], vec![0.5]]), 2, 1).unwrap_err();
        assert!(matches!(err, Error::RowSum { .. }));
    }

    #[test]
    fn config_validation() {
        let mut c = SolverConfig::default();
        assert!(c.validate().is_ok());
        c.alpha_grid = 1;
        assert!(c.validate().is_err());
    }
}
