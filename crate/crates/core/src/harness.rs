//! Five-way equivalence report, seeded economy generator and fuzz corpus.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::blocking::{is_pareto_optimal, least_excess_price, solve_on_resources, BlockingCertificate};
use crate::economy::{make_scheme, validate_economy, Allocation, CostScheme, Economy, SchemeKind, SolverConfig};
use crate::equilibrium::{construct_gamma_z, supporting_price, verify_cost_share_equilibrium, walras_solve, PriceSystem, Violation};
use crate::error::{Error, Result};
use crate::perturbation::{alpha_sweep, DominationWitness, CONSTRUCTION};
use crate::preferences::{CheckEntry, UtilitySpec};
use crate::replica::{aubin_hypothesis, ReplicaScan, ReplicaVerdict, ReplicaWitness};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumFailure {
    pub prices: PriceSystem,
    pub failed: Vec<CheckEntry>,
    pub worst: Option<Violation>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Certificate {
    /// Grand-coalition improvement at full net resources.
    Pareto { certificate: BlockingCertificate },
    /// Verification failure at the supporting prices.
    Equilibrium(EquilibriumFailure),
    Blocking { witness: ReplicaWitness },
    Domination { witness: DominationWitness },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Verdict {
    /// Universally quantified claims carry the bound they were searched to.
    True { bound: Option<String> },
    False { certificate: Certificate, revalidated: bool },
    HypothesisUnmet { reason: String },
    Error { message: String },
}

impl Verdict {
    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Verdict::True { .. } => Some(true),
            Verdict::False { .. } => Some(false),
            _ => None,
        }
    }

    fn revalidated(&self) -> bool {
        !matches!(self, Verdict::False { revalidated: false, .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Preconditions {
    pub aubin_hypothesis: bool,
    pub hypothesis_detail: Option<String>,
    /// Per project: compensating allocation, or proof that none exists.
    pub gamma_z: Vec<GammaStatus>,
    pub pareto_optimal: bool,
    pub all_met: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum GammaStatus {
    Available,
    /// Grand-coalition margin at `z` is strictly negative: no allocation at
    /// `z` compensates everyone, and the project is settled without one.
    Unreachable { margin: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EscalationKind {
    /// Disagreement backed by a re-validated certificate: a release blocker.
    ValidatedViolation,
    /// A "true" side was only searched up to `r_max`.
    InconclusiveAtBound,
    /// A "false" side's certificate did not survive re-validation.
    CertificateRejected,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Escalation {
    pub kind: EscalationKind,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchBounds {
    pub r_max: u32,
    pub alpha_grid: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdicts {
    pub competitive_equilibrium: Verdict,
    pub sigma_aubin_core: Verdict,
    /// Full-support Aubin coalitions only (inferred reading).
    pub aubin_non_dominated: Verdict,
    pub sigma_edgeworth: Verdict,
    pub not_z_dominated: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquivalenceReport {
    pub project: String,
    pub preconditions: Preconditions,
    pub bounds: SearchBounds,
    pub verdicts: Verdicts,
    pub escalation: Option<Escalation>,
    pub notes: Vec<String>,
}

fn replica_verdict(
    v: Result<ReplicaVerdict>,
    econ: &Economy,
    scheme: &CostScheme,
    refs: &[f64],
) -> Verdict {
    match v {
        Ok(v) => match v.witness {
            Some(witness) => {
                let revalidated = witness.certificate.check(econ, scheme, refs).map(|c| c.valid).unwrap_or(false);
                Verdict::False { certificate: Certificate::Blocking { witness }, revalidated }
            }
            None => Verdict::True { bound: Some(format!("no blocking coalition with r <= {}", v.r_max)) },
        },
        Err(Error::Hypothesis(reason)) => Verdict::HypothesisUnmet { reason },
        Err(e) => Verdict::Error { message: e.to_string() },
    }
}

fn equilibrium_verdict(
    econ: &Economy,
    scheme: &CostScheme,
    alloc: &Allocation,
    gammas: &[Option<Vec<Vec<f64>>>],
    refs: &[f64],
) -> Result<Verdict> {
    let mut prices = Vec::with_capacity(econ.k());
    for (z, g) in gammas.iter().enumerate() {
        prices.push(match g {
            Some(g) => supporting_price(econ, g, z)?,
            None => least_excess_price(econ, scheme, refs, z)?.0,
        });
    }
    let report = verify_cost_share_equilibrium(econ, scheme, alloc, &prices);
    if report.pass {
        return Ok(Verdict::True { bound: None });
    }
    let again = verify_cost_share_equilibrium(econ, scheme, alloc, &prices);
    let failed = report.checks.into_iter().filter(|c| !c.pass).collect();
    Ok(Verdict::False {
        certificate: Certificate::Equilibrium(EquilibriumFailure { prices, failed, worst: report.worst }),
        revalidated: !again.pass,
    })
}

fn classify(v: &Verdicts) -> Option<Escalation> {
    let named = [
        ("(i)", &v.competitive_equilibrium),
        ("(ii)", &v.sigma_aubin_core),
        ("(iv)", &v.sigma_edgeworth),
    ];
    let values: Vec<Option<bool>> = named.iter().map(|(_, v)| v.as_bool()).collect();
    if values.iter().any(|b| b.is_none()) || values.iter().all(|b| *b == values[0]) {
        return None;
    }
    let detail = named
        .iter()
        .map(|(k, v)| format!("{k}={}", v.as_bool().expect("checked")))
        .collect::<Vec<_>>()
        .join(" ");
    if named.iter().any(|(_, v)| !v.revalidated()) {
        return Some(Escalation { kind: EscalationKind::CertificateRejected, detail });
    }
    // A refined (irrational) Aubin witness is invisible to the Edgeworth scan;
    // a failed price check with no blocking coalition up to r_max is one-sided.
    let refined_only = matches!(
        &v.sigma_aubin_core,
        Verdict::False { certificate: Certificate::Blocking { witness }, .. } if witness.r == 0
    ) && v.sigma_edgeworth.as_bool() == Some(true);
    let ce_false_unblocked = v.competitive_equilibrium.as_bool() == Some(false)
        && v.sigma_aubin_core.as_bool() == Some(true)
        && v.sigma_edgeworth.as_bool() == Some(true);
    let kind = if refined_only || ce_false_unblocked {
        EscalationKind::InconclusiveAtBound
    } else {
        EscalationKind::ValidatedViolation
    };
    Some(Escalation { kind, detail })
}

/// Runs every check on one allocation. Sub-verdicts carry their own error
/// state; only malformed input fails the whole report.
pub fn equivalence_report(econ: &Economy, scheme: &CostScheme, alloc: &Allocation) -> Result<EquivalenceReport> {
    let validation = validate_economy(econ, scheme);
    if !validation.pass {
        let failed: Vec<&str> = validation.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
        return Err(Error::Input(format!("economy fails validation: {}", failed.join(", "))));
    }
    let cfg = econ.config();
    let refs = econ.utilities_at(alloc)?;
    let pareto = is_pareto_optimal(econ, alloc)?;
    let constructed = (0..econ.k()).map(|z| construct_gamma_z(econ, alloc, z)).collect::<Result<Vec<_>>>()?;
    let gamma_status = constructed
        .iter()
        .map(|g| match g.bundles {
            Some(_) => GammaStatus::Available,
            None => GammaStatus::Unreachable { margin: g.margin },
        })
        .collect();
    let gammas: Vec<Option<Vec<Vec<f64>>>> = constructed.into_iter().map(|g| g.bundles).collect();
    let hypothesis = aubin_hypothesis(econ, scheme);
    let preconditions = Preconditions {
        aubin_hypothesis: hypothesis.is_ok(),
        hypothesis_detail: hypothesis.as_ref().err().map(|e| e.to_string()),
        gamma_z: gamma_status,
        pareto_optimal: pareto.optimal,
        all_met: hypothesis.is_ok() && pareto.optimal,
    };

    let competitive_equilibrium = match &pareto.witness {
        Some(w) => {
            let revalidated = w.check(econ, scheme, &refs).map(|c| c.valid).unwrap_or(false);
            Verdict::False { certificate: Certificate::Pareto { certificate: w.clone() }, revalidated }
        }
        None => equilibrium_verdict(econ, scheme, alloc, &gammas, &refs).unwrap_or_else(|e| Verdict::Error { message: e.to_string() }),
    };

    let (sigma_aubin_core, aubin_non_dominated, sigma_edgeworth) = match &hypothesis {
        Err(e) => {
            let unmet = || Verdict::HypothesisUnmet { reason: e.to_string() };
            (unmet(), unmet(), unmet())
        }
        Ok(()) => match ReplicaScan::run(econ, scheme, alloc, cfg.r_max) {
            Ok(scan) => (
                replica_verdict(scan.aubin(econ, scheme, alloc, false), econ, scheme, &refs),
                replica_verdict(scan.aubin(econ, scheme, alloc, true), econ, scheme, &refs),
                replica_verdict(Ok(scan.edgeworth(econ)), econ, scheme, &refs),
            ),
            Err(e) => {
                let err = || Verdict::Error { message: e.to_string() };
                (err(), err(), err())
            }
        },
    };

    let not_z_dominated = if !pareto.optimal {
        Verdict::HypothesisUnmet { reason: Error::NotParetoOptimal.to_string() }
    } else {
        match alpha_sweep(econ, scheme, alloc, &gammas, cfg.alpha_grid, false) {
            Ok(s) => match s.witness {
                Some(w) => {
                    let g = gammas[w.project].as_ref().expect("witness project has a compensating allocation");
                    let revalidated = w.check(econ, scheme, alloc, g).map(|c| c.valid).unwrap_or(false);
                    Verdict::False { certificate: Certificate::Domination { witness: w }, revalidated }
                }
                None => {
                    let skipped = if s.skipped.is_empty() {
                        String::new()
                    } else {
                        let names: Vec<&str> = s.skipped.iter().map(|z| econ.project_name(*z)).collect();
                        format!("; projects without a compensating allocation skipped: {}", names.join(", "))
                    };
                    Verdict::True { bound: Some(format!("alpha grid 1/{}{skipped}", s.grid)) }
                }
            },
            Err(e) => Verdict::Error { message: e.to_string() },
        }
    };

    let verdicts = Verdicts {
        competitive_equilibrium,
        sigma_aubin_core,
        aubin_non_dominated,
        sigma_edgeworth,
        not_z_dominated,
    };
    let escalation = if preconditions.all_met { classify(&verdicts) } else { None };
    Ok(EquivalenceReport {
        project: econ.project_name(alloc.project).to_string(),
        preconditions,
        bounds: SearchBounds { r_max: cfg.r_max, alpha_grid: cfg.alpha_grid },
        verdicts,
        escalation,
        notes: vec![
            "aubin_non_dominated: full-support Aubin blocking (inferred definition)".into(),
            format!("not_z_dominated: {CONSTRUCTION}"),
        ],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Difficulty {
    Standard,
    /// Agents rank projects differently.
    Opposing,
}

/// Largest sizes the default test profile generates.
pub const MAX_GENERATED: (usize, usize, usize) = (4, 3, 3);

/// Random Cobb-Douglas economy, deterministic in `seed`.
pub fn generate_economy(seed: u64, n: usize, ell: usize, k: usize, difficulty: Difficulty) -> Result<(Economy, CostScheme)> {
    if n == 0 || ell == 0 || k == 0 || n > MAX_GENERATED.0 || ell > MAX_GENERATED.1 || k > MAX_GENERATED.2 {
        return Err(Error::Input(format!("generator sizes out of range: n={n} ell={ell} k={k}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let endowments: Vec<Vec<f64>> = (0..n).map(|_| (0..ell).map(|_| rng.gen_range(0.5..1.5)).collect()).collect();
    let utilities: Vec<UtilitySpec> = (0..n)
        .map(|i| {
            let raw: Vec<f64> = (0..ell).map(|_| rng.gen_range(0.2..1.0)).collect();
            let s: f64 = raw.iter().sum();
            let theta: Vec<f64> = match difficulty {
                Difficulty::Standard => (0..k).map(|_| rng.gen_range(1.0..1.25)).collect(),
                Difficulty::Opposing => (0..k).map(|z| if z == i % k { 1.25 } else { 1.0 }).collect(),
            };
            UtilitySpec::cobb_douglas(raw.iter().map(|a| a / s).collect(), theta)
        })
        .collect();
    let weights: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..1.5)).collect();
    let total: f64 = weights.iter().sum();
    let scheme = make_scheme(SchemeKind::Linear(weights.iter().map(|w| w / total).collect()), n, k)?;
    let aggregate: Vec<f64> = (0..ell).map(|j| endowments.iter().map(|e| e[j]).sum()).collect();
    let mut costs: Vec<Vec<f64>> =
        (0..k).map(|_| aggregate.iter().map(|a| rng.gen_range(0.02..0.2) * a).collect()).collect();
    // keep every agent's own share well inside their endowment
    let mut scale = 1.0f64;
    for (z, c) in costs.iter().enumerate() {
        for (i, e) in endowments.iter().enumerate() {
            for j in 0..ell {
                let share = scheme.rho(i, z) * c[j];
                if share > 0.0 {
                    scale = scale.min(0.9 * e[j] / share * 0.99);
                }
            }
        }
    }
    if scale < 1.0 {
        costs.iter_mut().flatten().for_each(|c| *c *= scale);
    }
    let projects = (1..=k).map(|z| format!("y{z}")).collect();
    let econ = Economy::new(projects, endowments, costs, utilities, SolverConfig::default())?;
    Ok((econ, scheme))
}

#[derive(Debug, Clone)]
pub struct FuzzCase {
    pub seed: u64,
    pub econ: Economy,
    pub scheme: CostScheme,
    pub allocations: Vec<(String, Allocation)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FuzzProfile {
    pub max_agents: usize,
    pub max_goods: usize,
    pub max_projects: usize,
}

impl Default for FuzzProfile {
    fn default() -> Self {
        Self { max_agents: 3, max_goods: 3, max_projects: 3 }
    }
}

/// Point on the contract curve at `z` shifting utility toward agent 0 by
/// `shift` (relative).
fn contract_shift(econ: &Economy, base: &Allocation, shift: f64) -> Result<Option<Allocation>> {
    let n = econ.n();
    if n < 2 {
        return Ok(None);
    }
    let mut refs = econ.utilities_at(base)?;
    refs[0] *= 1.0 + shift;
    for r in refs.iter_mut().skip(1) {
        *r *= 1.0 - shift / (n - 1) as f64;
    }
    let ones = vec![1.0; n];
    let resources = econ.net_resources(base.project);
    Ok(solve_on_resources(econ, &ones, base.project, &refs, &resources, None)?
        .map(|s| Allocation::new(s.xi, base.project)))
}

/// Walras allocation per project, two contract-curve shifts of the first
/// one, and a one-good transfer that breaks Pareto optimality.
pub fn fuzz_case(seed: u64, profile: FuzzProfile) -> Result<FuzzCase> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let n = rng.gen_range(2..=profile.max_agents.max(2));
    let ell = rng.gen_range(2..=profile.max_goods.max(2));
    let k = rng.gen_range(1..=profile.max_projects.max(1));
    let difficulty = if rng.gen_bool(0.3) { Difficulty::Opposing } else { Difficulty::Standard };
    let (econ, scheme) = generate_economy(seed, n, ell, k, difficulty)?;
    let mut allocations = Vec::new();
    for z in 0..k {
        let w = walras_solve(&econ, &scheme, z)?;
        allocations.push((format!("walras[{}]", econ.project_name(z)), Allocation::new(w.bundles, z)));
    }
    let base = allocations[0].1.clone();
    for shift in [0.02, 0.15] {
        if let Some(a) = contract_shift(&econ, &base, shift)? {
            allocations.push((format!("contract_shift[{shift}]"), a));
        }
    }
    let (from, to) = (rng.gen_range(0..n), rng.gen_range(0..n - 1));
    let to = if to >= from { to + 1 } else { to };
    let mut bundles = base.bundles.clone();
    let moved = rng.gen_range(0.1..0.3) * bundles[from][0];
    bundles[from][0] -= moved;
    bundles[to][0] += moved;
    allocations.push(("transfer".into(), Allocation::new(bundles, base.project)));
    Ok(FuzzCase { seed, econ, scheme, allocations })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FuzzRecord {
    pub economy_seed: u64,
    pub label: String,
    pub agents: usize,
    pub goods: usize,
    pub projects: usize,
    pub preconditions_met: bool,
    /// `[(i), (ii), (iii), (iv), (v)]`; `None` when not decided.
    pub verdicts: [Option<bool>; 5],
    pub escalation: Option<Escalation>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FuzzSummary {
    pub seed: u64,
    pub economies: usize,
    pub allocations: usize,
    pub preconditions_met: usize,
    pub agreements: usize,
    pub validated_violations: usize,
    pub inconclusive: usize,
    pub rejected: usize,
    pub records: Vec<FuzzRecord>,
}

impl FuzzSummary {
    pub fn passed(&self) -> bool {
        self.validated_violations == 0
    }
}

/// Economy seeds are `seed, seed + 1, ...`.
pub fn run_fuzz(seed: u64, count: usize, profile: FuzzProfile) -> Result<FuzzSummary> {
    let mut records = Vec::new();
    for s in seed..seed + count as u64 {
        let case = fuzz_case(s, profile)?;
        for (label, alloc) in &case.allocations {
            let mut rec = FuzzRecord {
                economy_seed: s,
                label: label.clone(),
                agents: case.econ.n(),
                goods: case.econ.ell(),
                projects: case.econ.k(),
                preconditions_met: false,
                verdicts: [None; 5],
                escalation: None,
                error: None,
            };
            match equivalence_report(&case.econ, &case.scheme, alloc) {
                Ok(r) => {
                    let v = &r.verdicts;
                    rec.preconditions_met = r.preconditions.all_met;
                    rec.verdicts = [
                        v.competitive_equilibrium.as_bool(),
                        v.sigma_aubin_core.as_bool(),
                        v.aubin_non_dominated.as_bool(),
                        v.sigma_edgeworth.as_bool(),
                        v.not_z_dominated.as_bool(),
                    ];
                    rec.escalation = r.escalation;
                }
                Err(e) => rec.error = Some(e.to_string()),
            }
            records.push(rec);
        }
    }
    let count_kind = |k: EscalationKind| records.iter().filter(|r| r.escalation.as_ref().is_some_and(|e| e.kind == k)).count();
    Ok(FuzzSummary {
        seed,
        economies: count,
        allocations: records.len(),
        preconditions_met: records.iter().filter(|r| r.preconditions_met).count(),
        agreements: records.iter().filter(|r| r.preconditions_met && r.escalation.is_none()).count(),
        validated_violations: count_kind(EscalationKind::ValidatedViolation),
        inconclusive: count_kind(EscalationKind::InconclusiveAtBound),
        rejected: count_kind(EscalationKind::CertificateRejected),
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    fn all(r: &EquivalenceReport) -> Vec<Option<bool>> {
        let v = &r.verdicts;
        [&v.competitive_equilibrium, &v.sigma_aubin_core, &v.aubin_non_dominated, &v.sigma_edgeworth, &v.not_z_dominated]
            .iter()
            .map(|v| v.as_bool())
            .collect()
    }

    #[test]
    fn equilibrium_is_true_everywhere() {
        let (econ, scheme) = catalog::agree();
        let r = equivalence_report(&econ, &scheme, &catalog::agree_equilibrium()).unwrap();
        assert_eq!(all(&r), vec![Some(true); 5]);
        assert!(r.preconditions.all_met);
        assert!(r.escalation.is_none());
    }

    #[test]
    fn lopsided_is_false_everywhere() {
        let (econ, scheme) = catalog::agree();
        let r = equivalence_report(&econ, &scheme, &catalog::agree_lopsided()).unwrap();
        assert_eq!(all(&r), vec![Some(false); 5]);
        for v in [&r.verdicts.sigma_aubin_core, &r.verdicts.sigma_edgeworth, &r.verdicts.not_z_dominated] {
            assert!(matches!(v, Verdict::False { revalidated: true, .. }));
        }
        match &r.verdicts.not_z_dominated {
            Verdict::False { certificate: Certificate::Domination { witness }, .. } => {
                assert_eq!((witness.project, witness.alpha.clone()), (0, vec![0.0, 1.0]));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unmet_hypothesis_is_reported_not_escalated() {
        let (econ, _) = catalog::agree();
        // agent 0 pays everything: e_0 - c(y1) has a negative component
        let scheme = CostScheme::unchecked(vec![vec![1.0, 1.0], vec![0.0, 0.0]]);
        let econ = econ.with_endowments(vec![vec![1.0, 0.25], vec![0.5, 1.25]]).unwrap();
        let r = equivalence_report(&econ, &scheme, &Allocation::new(vec![vec![0.6, 0.6], vec![0.6, 0.6]], 0));
        match r {
            Ok(r) => {
                assert!(matches!(r.verdicts.sigma_aubin_core, Verdict::HypothesisUnmet { .. }));
                assert!(matches!(r.verdicts.sigma_edgeworth, Verdict::HypothesisUnmet { .. }));
                assert!(r.escalation.is_none());
            }
            Err(e) => panic!("{e}"),
        }
    }

    #[test]
    fn non_pareto_allocation() {
        let (econ, scheme) = catalog::agree();
        let alloc = Allocation::new(vec![vec![1.0, 0.2], vec![0.2, 1.0]], 0);
        let r = equivalence_report(&econ, &scheme, &alloc).unwrap();
        assert!(matches!(
            r.verdicts.competitive_equilibrium,
            Verdict::False { certificate: Certificate::Pareto { .. }, revalidated: true }
        ));
        assert!(matches!(r.verdicts.not_z_dominated, Verdict::HypothesisUnmet { .. }));
    }

    #[test]
    fn generator_contract() {
        let (econ, scheme) = generate_economy(1, 3, 2, 2, Difficulty::Standard).unwrap();
        assert!(validate_economy(&econ, &scheme).pass);
        assert!(aubin_hypothesis(&econ, &scheme).is_ok());
        let (again, _) = generate_economy(1, 3, 2, 2, Difficulty::Standard).unwrap();
        assert_eq!(econ.endowments(), again.endowments());

        let (econ, _) = generate_economy(5, 2, 2, 2, Difficulty::Opposing).unwrap();
        let best = |i: usize| if econ.utility(i).theta(0).unwrap() > econ.utility(i).theta(1).unwrap() { 0 } else { 1 };
        assert_ne!(best(0), best(1));

        let (econ, scheme) = generate_economy(9, 1, 2, 3, Difficulty::Standard).unwrap();
        assert!(crate::equilibrium::find_cost_share_equilibrium(&econ, &scheme).unwrap().is_some());
        assert!(generate_economy(1, 5, 2, 2, Difficulty::Standard).is_err());
    }

    #[test]
    fn generated_economies_respect_bounds() {
        for seed in 0..30 {
            let (econ, scheme) = generate_economy(seed, 4, 3, 3, Difficulty::Standard).unwrap();
            assert!(validate_economy(&econ, &scheme).pass);
            let agg = econ.aggregate_endowment();
            for z in 0..3 {
                for j in 0..3 {
                    assert!(econ.cost(z)[j] <= 0.2 * agg[j]);
                }
            }
            for i in 0..4 {
                let t = |z| econ.utility(i).theta(z).unwrap();
                for (a, b) in [(0, 1), (0, 2), (1, 2)] {
                    let ratio = t(a) / t(b);
                    assert!((0.8..=1.25).contains(&ratio));
                }
            }
        }
    }
}
