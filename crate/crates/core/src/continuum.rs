//! Equal-treatment continuum economy: `n` type intervals of measure `1/n`,
//! cost `c / n`, shares `n rho`. Coalitions are described by per-type masses.

use serde::Serialize;

use crate::blocking::{BlockingCertificate, CoalitionWeights};
use crate::economy::{Allocation, CostScheme, Economy};
use crate::equilibrium::construct_gamma_z;
use crate::error::{Error, Result};
use crate::preferences::utility_eval;
use crate::replica::{aubin_core_check, ReplicaVerdict};
use crate::vecops::max_abs;

#[derive(Debug, Clone)]
pub struct ContinuumEconomy {
    base: Economy,
    scheme: CostScheme,
}

/// Lifts a finite economy; the lifted data are derived on demand from the
/// stored base, so projecting back is exact.
pub fn lift(econ: &Economy, scheme: &CostScheme) -> ContinuumEconomy {
    ContinuumEconomy { base: econ.clone(), scheme: scheme.clone() }
}

impl ContinuumEconomy {
    pub fn base(&self) -> &Economy {
        &self.base
    }

    pub fn scheme(&self) -> &CostScheme {
        &self.scheme
    }

    pub fn type_measure(&self) -> f64 {
        1.0 / self.base.n() as f64
    }

    /// `c(z) / n`
    pub fn cost(&self, z: usize) -> Vec<f64> {
        let n = self.base.n() as f64;
        self.base.cost(z).iter().map(|c| c / n).collect()
    }

    /// `n rho(i, z)`
    pub fn rho(&self, i: usize, z: usize) -> f64 {
        self.base.n() as f64 * self.scheme.rho(i, z)
    }

    /// `sum_i sigma({i}, z) m_i / mu(T_i)`
    pub fn sigma(&self, masses: &[f64], z: usize) -> f64 {
        let n = self.base.n() as f64;
        masses.iter().enumerate().map(|(i, m)| self.scheme.sigma_singleton(i, z) * m * n).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuumCertificate {
    /// `m_i = mu(S cap T_i)`, each in `[0, 1/n]`.
    pub masses: Vec<f64>,
    pub project: usize,
    /// Per-type bundles; only types with positive mass matter.
    pub bundles: Vec<Vec<f64>>,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuumCheck {
    pub valid: bool,
    pub measure: f64,
    pub resource_residual: f64,
    pub min_improvement: f64,
}

impl ContinuumCertificate {
    pub fn measure(&self) -> f64 {
        self.masses.iter().sum()
    }

    /// `gamma = n m`.
    pub fn from_aubin(cont: &ContinuumEconomy, cert: &BlockingCertificate) -> Self {
        let mu = cont.type_measure();
        Self {
            masses: cert.gamma.as_slice().iter().map(|g| g * mu).collect(),
            project: cert.project,
            bundles: cert.xi.clone(),
            margin: cert.margin,
        }
    }

    pub fn to_aubin(&self, cont: &ContinuumEconomy) -> Result<BlockingCertificate> {
        let n = cont.base.n() as f64;
        let gamma = CoalitionWeights::new(self.masses.iter().map(|m| (m * n).min(1.0)).collect())?;
        Ok(BlockingCertificate { gamma, project: self.project, xi: self.bundles.clone(), margin: self.margin })
    }

    /// Resource identity within `tol_feas` and improvement of at least
    /// `threshold` on every type with positive mass.
    pub fn check(&self, cont: &ContinuumEconomy, refs: &[f64], threshold: f64) -> Result<ContinuumCheck> {
        let econ = &cont.base;
        econ.check_project(self.project)?;
        if self.masses.len() != econ.n() || self.bundles.len() != econ.n() || refs.len() != econ.n() {
            return Err(Error::Dimension("certificate does not match the economy".into()));
        }
        let mu = cont.type_measure();
        if let Some(m) = self.masses.iter().find(|m| !(**m >= 0.0 && **m <= mu + 1e-12)) {
            return Err(Error::InvalidCoalition(format!("type mass {m} outside [0, {mu}]")));
        }
        let z = self.project;
        let share = cont.sigma(&self.masses, z);
        let cost = cont.cost(z);
        let residual: Vec<f64> = (0..econ.ell())
            .map(|j| {
                self.masses
                    .iter()
                    .enumerate()
                    .map(|(i, m)| m * (self.bundles[i][j] - econ.endowment(i)[j]))
                    .sum::<f64>()
                    + share * cost[j]
            })
            .collect();
        let mut min_improvement = f64::INFINITY;
        for (i, m) in self.masses.iter().enumerate() {
            if *m > 0.0 {
                min_improvement = min_improvement.min(utility_eval(econ.utility(i), &self.bundles[i], z)? - refs[i]);
            }
        }
        let resource_residual = max_abs(&residual);
        Ok(ContinuumCheck {
            valid: resource_residual <= econ.config().tol_feas && min_improvement >= threshold,
            measure: self.measure(),
            resource_residual,
            min_improvement,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuumVerdict {
    pub in_core: bool,
    pub witness: Option<ContinuumCertificate>,
    /// Largest-margin witness, used for resizing.
    pub strongest: Option<ContinuumCertificate>,
    pub aubin: ReplicaVerdict,
}

/// Core membership of the step allocation `f = x_i on T_i`, via the Aubin
/// core of the base economy with `gamma = n m`.
pub fn continuum_core_check(cont: &ContinuumEconomy, alloc: &Allocation) -> Result<ContinuumVerdict> {
    let aubin = aubin_core_check(&cont.base, &cont.scheme, alloc, cont.base.config().r_max)?;
    let witness = aubin.witness.as_ref().map(|w| ContinuumCertificate::from_aubin(cont, &w.certificate));
    let strongest = aubin.strongest.as_ref().map(|w| ContinuumCertificate::from_aubin(cont, &w.certificate)).or(witness.clone());
    Ok(ContinuumVerdict { in_core: !aubin.blocked, witness, strongest, aubin })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Resized {
    pub certificate: ContinuumCertificate,
    pub check: ContinuumCheck,
    /// Mixing weight on the original coalition's bundles (1 in the shrink case).
    pub delta: f64,
    /// Per-capita uniform surplus extracted from the original bundles.
    pub lambda: f64,
}

fn margins_ok(econ: &Economy, z: usize, refs: &[f64], bundles: &[(usize, Vec<f64>)], floor: f64) -> bool {
    bundles
        .iter()
        .all(|(i, x)| x.iter().all(|v| *v >= 0.0) && utility_eval(econ.utility(*i), x, z).is_ok_and(|u| u - refs[*i] >= floor))
}

/// Resizes a blocking coalition to total measure `epsilon`.
///
/// Growth mixes the coalition's bundles with the compensating allocation
/// `gamma_z` and hands a uniform surplus `lambda 1` to the newcomers.
pub fn vind_resize(
    cont: &ContinuumEconomy,
    alloc: &Allocation,
    cert: &ContinuumCertificate,
    gamma_z: Option<&[Vec<f64>]>,
    epsilon: f64,
) -> Result<Resized> {
    let econ = &cont.base;
    let cfg = econ.config();
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Resize(format!("target measure {epsilon} outside (0, 1)")));
    }
    let refs = econ.utilities_at(alloc)?;
    let original = cert.check(cont, &refs, cfg.eps_strict)?;
    if !original.valid {
        return Err(Error::Resize("input certificate does not validate".into()));
    }
    let mu_s = cert.measure();
    let z = cert.project;
    let floor = 0.5 * cfg.eps_strict;
    let finish = |c: ContinuumCertificate, delta: f64, lambda: f64| -> Result<Resized> {
        let check = c.check(cont, &refs, floor)?;
        if !check.valid || (check.measure - epsilon).abs() > 1e-9 {
            return Err(Error::Resize(format!("resized certificate fails validation: {check:?}")));
        }
        Ok(Resized { certificate: c, check, delta, lambda })
    };

    if epsilon <= mu_s {
        let f = epsilon / mu_s;
        let c = ContinuumCertificate { masses: cert.masses.iter().map(|m| m * f).collect(), ..cert.clone() };
        return finish(c, 1.0, 0.0);
    }

    let gz = gamma_z.ok_or_else(|| Error::Resize("growth needs a compensating allocation".into()))?;
    if gz.len() != econ.n() {
        return Err(Error::Dimension("compensating allocation has the wrong agent count".into()));
    }
    for (i, x) in gz.iter().enumerate() {
        let u = utility_eval(econ.utility(i), x, z)?;
        if u < refs[i] - cfg.eps_strict {
            return Err(Error::Resize(format!("compensating bundle of type {i} falls short of its reference utility")));
        }
    }
    let mu = cont.type_measure();
    let delta = 1.0 - (epsilon - mu_s) / (1.0 - mu_s);
    let newcomers: Vec<f64> = cert.masses.iter().map(|m| (1.0 - delta) * (mu - m)).collect();
    let mu_d: f64 = newcomers.iter().sum();
    let kappa = delta * mu_s / mu_d;
    let members: Vec<usize> = (0..econ.n()).filter(|i| cert.masses[*i] > 0.0).collect();

    let mixed = |lambda: f64| -> Vec<(usize, Vec<f64>)> {
        members
            .iter()
            .map(|&i| {
                let x = cert.bundles[i].iter().zip(&gz[i]).map(|(g, c)| delta * (g - lambda) + (1.0 - delta) * c).collect();
                (i, x)
            })
            .collect()
    };
    if !margins_ok(econ, z, &refs, &mixed(0.0), floor) {
        return Err(Error::Resize("mixing with the compensating allocation destroys the improvement".into()));
    }
    let cap = members.iter().flat_map(|i| cert.bundles[*i].iter()).fold(f64::INFINITY, |m, v| m.min(*v));
    let (mut lo, mut hi) = (0.0, cap);
    if margins_ok(econ, z, &refs, &mixed(hi), floor) {
        lo = hi;
    }
    for _ in 0..200 {
        if hi - lo <= 1e-15 * (1.0 + hi) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if margins_ok(econ, z, &refs, &mixed(mid), floor) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if lo <= 0.0 {
        return Err(Error::Resize("no surplus can be extracted".into()));
    }
    // Members lose and newcomers gain as lambda grows; stop where they meet.
    let lowest = |xs: &[(usize, Vec<f64>)]| -> f64 {
        xs.iter()
            .map(|(i, x)| utility_eval(econ.utility(*i), x, z).map_or(f64::NEG_INFINITY, |u| u - refs[*i]))
            .fold(f64::INFINITY, f64::min)
    };
    let newcomer = |lambda: f64| -> Vec<(usize, Vec<f64>)> {
        (0..econ.n())
            .filter(|i| newcomers[*i] > 0.0)
            .map(|i| (i, gz[i].iter().map(|c| c + kappa * lambda).collect()))
            .collect()
    };
    let mut lambda = lo;
    if lowest(&mixed(lo)) < lowest(&newcomer(lo)) {
        let (mut a, mut b) = (0.0, lo);
        for _ in 0..200 {
            if b - a <= 1e-15 * (1.0 + b) {
                break;
            }
            let mid = 0.5 * (a + b);
            if lowest(&mixed(mid)) >= lowest(&newcomer(mid)) {
                a = mid;
            } else {
                b = mid;
            }
        }
        lambda = a;
    }

    let ell = econ.ell();
    let mut masses = vec![0.0; econ.n()];
    let mut bundles = vec![vec![0.0; ell]; econ.n()];
    let s_part = mixed(lambda);
    for i in 0..econ.n() {
        let m_s = cert.masses[i];
        let m_d = newcomers[i];
        let h: Vec<f64> = gz[i].iter().map(|c| c + kappa * lambda).collect();
        masses[i] = m_s + m_d;
        bundles[i] = match (m_s > 0.0, m_d > 0.0) {
            (true, true) => {
                let g = &s_part.iter().find(|(k, _)| *k == i).expect("member").1;
                (0..ell).map(|j| (m_s * g[j] + m_d * h[j]) / (m_s + m_d)).collect()
            }
            (true, false) => s_part.iter().find(|(k, _)| *k == i).expect("member").1.clone(),
            (false, true) => h,
            (false, false) => vec![0.0; ell],
        };
    }
    let margin = (0..econ.n())
        .filter(|i| masses[*i] > 0.0)
        .map(|i| utility_eval(econ.utility(i), &bundles[i], z).map(|u| u - refs[i]))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    finish(ContinuumCertificate { masses, project: z, bundles, margin }, delta, lambda)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepEntry {
    pub epsilon: f64,
    pub valid: bool,
    pub result: Option<Resized>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VindSweep {
    pub base: ContinuumCertificate,
    pub entries: Vec<SweepEntry>,
}

/// Resizes the strongest blocking coalition to every measure in `epsilons`.
pub fn vind_sweep(cont: &ContinuumEconomy, alloc: &Allocation, epsilons: &[f64]) -> Result<VindSweep> {
    let verdict = continuum_core_check(cont, alloc)?;
    let base = verdict
        .strongest
        .ok_or_else(|| Error::Resize("allocation is in the core; no blocking coalition to resize".into()))?;
    let gamma_z = construct_gamma_z(&cont.base, alloc, base.project)?.bundles;
    let entries = epsilons
        .iter()
        .map(|&epsilon| match vind_resize(cont, alloc, &base, gamma_z.as_deref(), epsilon) {
            Ok(r) => SweepEntry { epsilon, valid: true, result: Some(r), error: None },
            Err(e) => SweepEntry { epsilon, valid: false, result: None, error: Some(e.to_string()) },
        })
        .collect();
    Ok(VindSweep { base, entries })
}
