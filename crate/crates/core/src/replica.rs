//! Replica economies, Edgeworth equilibria and the Aubin (fuzzy) core.
//!
//! In the `r`-fold replica with cost `r c(z)` and singleton contributions
//! `sigma({i}, z) / r`, a coalition holding `l_i` copies of type `i` blocks an
//! equal-treatment allocation iff the Aubin coalition `gamma = l / r` blocks it
//! (average the members of each type; concavity keeps the improvement). Since
//! blocking depends only on the direction of `gamma`, each primitive integer
//! direction is solved once and shared across all `(r, l)`.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::blocking::{coalition_resources, solve_on_resources, try_block, BlockingCertificate, CoalitionWeights};
use crate::economy::{require_feasible, Allocation, CostScheme, Economy};
use crate::error::{Error, Result};

/// Upper bound on `r_max (r_max + 1)^n`.
pub const ENUMERATION_CAP: u64 = 50_000_000;

/// Number of near-blocking directions refined continuously.
const REFINE_CANDIDATES: usize = 3;
const REFINE_MIN_STEP: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicaWitness {
    pub r: u32,
    pub l: Vec<u32>,
    pub certificate: BlockingCertificate,
}

#[derive(Debug, Clone)]
struct DirectionResult {
    /// Blocking certificate per project, for `gamma = d / max(d)`.
    blocks: Vec<Option<BlockingCertificate>>,
    /// Best margin over projects when within the near band.
    near: Option<(f64, usize)>,
}

/// Every primitive direction with entries in `0..=r_max`, solved at every
/// project against one allocation.
#[derive(Debug, Clone)]
pub struct ReplicaScan {
    r_max: u32,
    n: usize,
    directions: Vec<Vec<u32>>,
    index: HashMap<Vec<u32>, usize>,
    results: Vec<DirectionResult>,
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn primitive(l: &[u32]) -> Vec<u32> {
    let g = l.iter().fold(0, |g, v| gcd(g, *v));
    l.iter().map(|v| v / g.max(1)).collect()
}

/// Calls `f` on every vector of `{lo..=hi}^n` in lexicographic order.
fn for_each_lattice(n: usize, lo: u32, hi: u32, mut f: impl FnMut(&[u32]) -> bool) {
    let mut l = vec![lo; n];
    loop {
        if !f(&l) {
            return;
        }
        let mut k = n;
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            if l[k] < hi {
                l[k] += 1;
                break;
            }
            l[k] = lo;
        }
    }
}

pub fn check_enumeration(n: usize, r_max: u32) -> Result<()> {
    if r_max < 1 {
        return Err(Error::Input("r_max must be >= 1".into()));
    }
    let count = (r_max as f64) * ((r_max + 1) as f64).powi(n as i32);
    if count > ENUMERATION_CAP as f64 {
        return Err(Error::EnumerationCap(format!("r_max (r_max + 1)^n = {count:.0} exceeds {ENUMERATION_CAP}")));
    }
    Ok(())
}

fn weights(d: &[u32]) -> CoalitionWeights {
    let top = *d.iter().max().expect("non-empty direction") as f64;
    CoalitionWeights::new(d.iter().map(|v| *v as f64 / top).collect()).expect("non-zero direction")
}

impl ReplicaScan {
    pub fn run(econ: &Economy, scheme: &CostScheme, alloc: &Allocation, r_max: u32) -> Result<Self> {
        require_feasible(econ, alloc)?;
        let n = econ.n();
        check_enumeration(n, r_max)?;
        let refs = econ.utilities_at(alloc)?;
        let mut directions = Vec::new();
        for_each_lattice(n, 0, r_max, |l| {
            if l.iter().any(|v| *v > 0) && primitive(l) == l {
                directions.push(l.to_vec());
            }
            true
        });
        let near_band = -1e-3 * (1.0 + refs.iter().fold(0.0f64, |m, v| m.max(v.abs())));
        let results = directions
            .par_iter()
            .map(|d| evaluate_direction(econ, scheme, d, &refs, near_band))
            .collect::<Result<Vec<_>>>()?;
        let index = directions.iter().enumerate().map(|(k, d)| (d.clone(), k)).collect();
        Ok(Self { r_max, n, directions, index, results })
    }

    pub fn r_max(&self) -> u32 {
        self.r_max
    }

    pub fn directions(&self) -> usize {
        self.directions.len()
    }

    fn lookup(&self, l: &[u32], z: usize) -> Option<&BlockingCertificate> {
        self.results[self.index[&primitive(l)]].blocks[z].as_ref()
    }

    fn witness(&self, r: u32, l: &[u32], cert: &BlockingCertificate) -> ReplicaWitness {
        // per-capita bundles are unchanged by rescaling the weights
        let gamma = CoalitionWeights::new(l.iter().map(|v| *v as f64 / r as f64).collect()).expect("non-zero l");
        ReplicaWitness { r, l: l.to_vec(), certificate: BlockingCertificate { gamma, ..cert.clone() } }
    }

    /// First blocking `(r, l, z)` in lexicographic order.
    fn first_witness(&self, k: usize, full_support: bool) -> Option<ReplicaWitness> {
        for r in 1..=self.r_max {
            let mut found = None;
            let lo = if full_support { 1 } else { 0 };
            for_each_lattice(self.n, lo, r, |l| {
                if l.iter().all(|v| *v == 0) {
                    return true;
                }
                for z in 0..k {
                    if let Some(c) = self.lookup(l, z) {
                        found = Some(self.witness(r, l, c));
                        return false;
                    }
                }
                true
            });
            if found.is_some() {
                return found;
            }
        }
        None
    }

    /// Largest-margin blocking direction, ties to the earlier direction.
    fn strongest(&self, full_support: bool) -> Option<ReplicaWitness> {
        let mut best: Option<(usize, &BlockingCertificate)> = None;
        for (k, res) in self.results.iter().enumerate() {
            if full_support && self.directions[k].contains(&0) {
                continue;
            }
            for c in res.blocks.iter().flatten() {
                if best.is_none_or(|(_, b)| c.margin > b.margin) {
                    best = Some((k, c));
                }
            }
        }
        best.map(|(k, c)| {
            let d = &self.directions[k];
            self.witness(*d.iter().max().expect("non-empty"), d, c)
        })
    }

    fn verdict(&self, projects: usize, full_support: bool) -> ReplicaVerdict {
        let first = self.first_witness(projects, full_support);
        ReplicaVerdict {
            blocked: first.is_some(),
            r_max: self.r_max,
            directions_checked: self.directions.len(),
            strongest: if first.is_some() { self.strongest(full_support) } else { None },
            witness: first,
            refined: false,
        }
    }

    pub fn edgeworth(&self, econ: &Economy) -> ReplicaVerdict {
        self.verdict(econ.k(), false)
    }

    pub fn full_support(&self, econ: &Economy) -> ReplicaVerdict {
        self.verdict(econ.k(), true)
    }

    /// Near-blocking directions ordered by margin, best first.
    fn candidates(&self, full_support: bool) -> Vec<(f64, usize, usize)> {
        let mut c: Vec<(f64, usize, usize)> = self
            .results
            .iter()
            .enumerate()
            .filter(|(k, _)| !full_support || !self.directions[*k].contains(&0))
            .filter_map(|(k, r)| r.near.map(|(m, z)| (m, k, z)))
            .collect();
        c.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        c.truncate(REFINE_CANDIDATES);
        c
    }

    /// Aubin verdict: rational scan plus coordinate ascent around the most
    /// promising near-blocking directions.
    pub fn aubin(&self, econ: &Economy, scheme: &CostScheme, alloc: &Allocation, full_support: bool) -> Result<ReplicaVerdict> {
        let mut v = self.verdict(econ.k(), full_support);
        if v.blocked {
            return Ok(v);
        }
        let refs = econ.utilities_at(alloc)?;
        for (_, k, z) in self.candidates(full_support) {
            let start = weights(&self.directions[k]);
            if let Some(cert) = refine(econ, scheme, &refs, start, z, self.r_max, full_support)? {
                v.blocked = true;
                v.refined = true;
                v.strongest = None;
                v.witness = Some(ReplicaWitness { r: 0, l: Vec::new(), certificate: cert });
                break;
            }
        }
        Ok(v)
    }
}

fn evaluate_direction(
    econ: &Economy,
    scheme: &CostScheme,
    d: &[u32],
    refs: &[f64],
    near_band: f64,
) -> Result<DirectionResult> {
    let gamma = weights(d);
    let mut blocks = Vec::with_capacity(econ.k());
    let mut near: Option<(f64, usize)> = None;
    for z in 0..econ.k() {
        let cert = try_block(econ, scheme, &gamma, z, refs)?;
        if cert.is_none() {
            let resources = coalition_resources(econ, scheme, &gamma, z);
            match solve_on_resources(econ, gamma.as_slice(), z, refs, &resources, Some(near_band)) {
                Ok(Some(sol)) if near.is_none_or(|(m, _)| sol.margin > m) => near = Some((sol.margin, z)),
                Ok(_) | Err(Error::Unaffordable { .. }) => {}
                Err(e) => return Err(e),
            }
        }
        blocks.push(cert);
    }
    Ok(DirectionResult { blocks, near })
}

fn margin_at(econ: &Economy, scheme: &CostScheme, refs: &[f64], gamma: &[f64], z: usize) -> Result<f64> {
    let Ok(w) = CoalitionWeights::new(gamma.to_vec()) else {
        return Ok(f64::NEG_INFINITY);
    };
    let resources = coalition_resources(econ, scheme, &w, z);
    match solve_on_resources(econ, gamma, z, refs, &resources, None) {
        Ok(Some(s)) => Ok(s.margin),
        Ok(None) | Err(Error::Unaffordable { .. }) => Ok(f64::NEG_INFINITY),
        Err(e) => Err(e),
    }
}

/// Coordinate ascent on `gamma` at fixed project; returns a certificate once
/// the margin clears `eps_strict`.
fn refine(
    econ: &Economy,
    scheme: &CostScheme,
    refs: &[f64],
    start: CoalitionWeights,
    z: usize,
    r_max: u32,
    full_support: bool,
) -> Result<Option<BlockingCertificate>> {
    let eps = econ.config().eps_strict;
    let floor = if full_support { REFINE_MIN_STEP } else { 0.0 };
    let mut g = start.as_slice().to_vec();
    let mut best = margin_at(econ, scheme, refs, &g, z)?;
    let mut h = 1.0 / (2.0 * r_max as f64);
    while h >= REFINE_MIN_STEP && best <= eps {
        let mut improved = false;
        for i in 0..g.len() {
            for sign in [1.0, -1.0] {
                let mut trial = g.clone();
                trial[i] = (trial[i] + sign * h).clamp(floor, 1.0);
                if trial[i] == g[i] {
                    continue;
                }
                let m = margin_at(econ, scheme, refs, &trial, z)?;
                if m > best {
                    best = m;
                    g = trial;
                    improved = true;
                }
            }
        }
        if !improved {
            h *= 0.5;
        }
    }
    if best <= eps {
        return Ok(None);
    }
    let gamma = CoalitionWeights::new(g)?;
    try_block(econ, scheme, &gamma, z, refs)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicaVerdict {
    pub blocked: bool,
    /// Search bound; "not blocked" means none found up to this denominator.
    pub r_max: u32,
    pub directions_checked: usize,
    /// Lexicographically first `(r, l, z)` witness, or the refined one.
    pub witness: Option<ReplicaWitness>,
    /// Largest-margin rational witness.
    pub strongest: Option<ReplicaWitness>,
    /// True when the witness came from continuous refinement.
    pub refined: bool,
}

pub fn edgeworth_check(econ: &Economy, scheme: &CostScheme, alloc: &Allocation, r_max: u32) -> Result<ReplicaVerdict> {
    Ok(ReplicaScan::run(econ, scheme, alloc, r_max)?.edgeworth(econ))
}

/// Checks `e_i - sigma({i}, z) c(z) >> 0` for every agent and project.
pub fn aubin_hypothesis(econ: &Economy, scheme: &CostScheme) -> Result<()> {
    let tol = econ.config().tol_feas;
    for z in 0..econ.k() {
        for i in 0..econ.n() {
            let s = scheme.sigma_singleton(i, z);
            if econ.endowment(i).iter().zip(econ.cost(z)).any(|(e, c)| e - s * c < tol) {
                return Err(Error::Hypothesis(format!(
                    "e_{i} - sigma({{{i}}}, {}) c is not strictly positive",
                    econ.project_name(z)
                )));
            }
        }
    }
    Ok(())
}

pub fn aubin_core_check(econ: &Economy, scheme: &CostScheme, alloc: &Allocation, r_max: u32) -> Result<ReplicaVerdict> {
    aubin_hypothesis(econ, scheme)?;
    ReplicaScan::run(econ, scheme, alloc, r_max)?.aubin(econ, scheme, alloc, false)
}

/// Blocking restricted to Aubin coalitions with full support.
pub fn full_support_check(econ: &Economy, scheme: &CostScheme, alloc: &Allocation, r_max: u32) -> Result<ReplicaVerdict> {
    aubin_hypothesis(econ, scheme)?;
    ReplicaScan::run(econ, scheme, alloc, r_max)?.aubin(econ, scheme, alloc, true)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum FuzzyOutcome {
    /// Both sides say equilibrium, or both say not.
    Agree,
    /// Price support found but a rational coalition blocks: a real conflict.
    Conflict,
    /// Unblocked up to `r_max` yet no supporting prices were verified.
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FuzzyEntry {
    pub index: usize,
    pub equilibrium: bool,
    pub aubin_blocked: bool,
    pub outcome: FuzzyOutcome,
    pub witness: Option<ReplicaWitness>,
    pub prices: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FuzzyReport {
    pub r_max: u32,
    pub entries: Vec<FuzzyEntry>,
    pub agreements: usize,
    pub conflicts: usize,
    pub inconclusive: usize,
}

/// Equilibrium side: supporting prices from first-order conditions at the
/// compensating allocations, then full verification. Projects where no
/// compensating allocation exists take the least-excess price.
pub fn supported_prices(econ: &Economy, scheme: &CostScheme, alloc: &Allocation) -> Option<Vec<Vec<f64>>> {
    use crate::blocking::least_excess_price;
    use crate::equilibrium::{construct_gamma_z, supporting_price, verify_cost_share_equilibrium};
    let refs = econ.utilities_at(alloc).ok()?;
    let mut prices = Vec::with_capacity(econ.k());
    for z in 0..econ.k() {
        let p = match construct_gamma_z(econ, alloc, z).ok()?.bundles {
            Some(g) => supporting_price(econ, &g, z).ok()?,
            None => least_excess_price(econ, scheme, &refs, z).ok()?.0,
        };
        prices.push(p);
    }
    verify_cost_share_equilibrium(econ, scheme, alloc, &prices).pass.then_some(prices)
}

pub fn fuzzy_equivalence_suite(
    econ: &Economy,
    scheme: &CostScheme,
    allocs: &[Allocation],
    r_max: u32,
) -> Result<FuzzyReport> {
    aubin_hypothesis(econ, scheme)?;
    let mut entries = Vec::with_capacity(allocs.len());
    for (index, alloc) in allocs.iter().enumerate() {
        let prices = supported_prices(econ, scheme, alloc);
        let v = aubin_core_check(econ, scheme, alloc, r_max)?;
        let equilibrium = prices.is_some();
        let outcome = match (equilibrium, v.blocked) {
            (true, false) | (false, true) => FuzzyOutcome::Agree,
            (true, true) => FuzzyOutcome::Conflict,
            (false, false) => FuzzyOutcome::Inconclusive,
        };
        entries.push(FuzzyEntry { index, equilibrium, aubin_blocked: v.blocked, outcome, witness: v.witness, prices });
    }
    let count = |o: FuzzyOutcome| entries.iter().filter(|e| e.outcome == o).count();
    Ok(FuzzyReport {
        r_max,
        agreements: count(FuzzyOutcome::Agree),
        conflicts: count(FuzzyOutcome::Conflict),
        inconclusive: count(FuzzyOutcome::Inconclusive),
        entries,
    })
}
