//! JSON documents read and written by the command line.
//!
//! Projects are referred to by name in files and by position in memory.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::economy::{Allocation, CostScheme, Economy, SolverConfig};
use crate::equilibrium::{EquilibriumCertificate, PriceSystem};
use crate::error::{Error, Result};
use crate::preferences::{UtilityForm, UtilitySpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilityDoc {
    #[serde(flatten)]
    pub form: UtilityForm,
    pub theta: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentDoc {
    pub endowment: Vec<f64>,
    pub utility: UtilityDoc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RhoKind {
    Equal,
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RhoDoc {
    Kind {
        kind: RhoKind,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        weights: Option<Vec<f64>>,
    },
    /// Shares of every agent, per project.
    PerProject(BTreeMap<String, Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EconomyDoc {
    pub agents: Vec<AgentDoc>,
    pub projects: Vec<String>,
    pub cost: BTreeMap<String, Vec<f64>>,
    pub rho: RhoDoc,
    #[serde(default)]
    pub config: SolverConfig,
}

fn by_project<T: Clone>(map: &BTreeMap<String, T>, projects: &[String], what: &str) -> Result<Vec<T>> {
    if let Some(extra) = map.keys().find(|k| !projects.contains(k)) {
        return Err(Error::UnknownProject(extra.clone()));
    }
    projects
        .iter()
        .map(|p| map.get(p).cloned().ok_or_else(|| Error::Input(format!("{what} missing for project `{p}`"))))
        .collect()
}

impl EconomyDoc {
    /// Builds the economy; the scheme is not checked so that a validation
    /// report can describe its defects.
    pub fn build(&self) -> Result<(Economy, CostScheme)> {
        let n = self.agents.len();
        let k = self.projects.len();
        let utilities = self
            .agents
            .iter()
            .map(|a| Ok(UtilitySpec { form: a.utility.form.clone(), theta: by_project(&a.utility.theta, &self.projects, "theta")? }))
            .collect::<Result<Vec<_>>>()?;
        let cost = by_project(&self.cost, &self.projects, "cost")?;
        let rho = match &self.rho {
            RhoDoc::Kind { kind: RhoKind::Equal, .. } => vec![vec![1.0 / n.max(1) as f64; k]; n],
            RhoDoc::Kind { kind: RhoKind::Linear, weights } => {
                let w = weights.as_ref().ok_or_else(|| Error::Input("linear cost scheme needs `weights`".into()))?;
                if w.len() != n {
                    return Err(Error::Dimension(format!("{} weights for {n} agents", w.len())));
                }
                w.iter().map(|wi| vec![*wi; k]).collect()
            }
            RhoDoc::PerProject(map) => {
                let cols = by_project(map, &self.projects, "rho")?;
                if cols.iter().any(|c| c.len() != n) {
                    return Err(Error::Dimension(format!("rho columns must have {n} entries")));
                }
                (0..n).map(|i| cols.iter().map(|c| c[i]).collect()).collect()
            }
        };
        let econ = Economy::new(
            self.projects.clone(),
            self.agents.iter().map(|a| a.endowment.clone()).collect(),
            cost,
            utilities,
            self.config.clone(),
        )?;
        Ok((econ, CostScheme::unchecked(rho)))
    }

    pub fn from_economy(econ: &Economy, scheme: &CostScheme) -> Self {
        let named = |v: &[f64]| -> BTreeMap<String, f64> { econ.projects().iter().cloned().zip(v.iter().copied()).collect() };
        EconomyDoc {
            agents: (0..econ.n())
                .map(|i| AgentDoc {
                    endowment: econ.endowment(i).to_vec(),
                    utility: UtilityDoc { form: econ.utility(i).form.clone(), theta: named(&econ.utility(i).theta) },
                })
                .collect(),
            projects: econ.projects().to_vec(),
            cost: (0..econ.k()).map(|z| (econ.project_name(z).to_string(), econ.cost(z).to_vec())).collect(),
            rho: RhoDoc::PerProject(
                (0..econ.k())
                    .map(|z| (econ.project_name(z).to_string(), (0..econ.n()).map(|i| scheme.rho(i, z)).collect()))
                    .collect(),
            ),
            config: econ.config().clone(),
        }
    }
}

/// Also accepts an equilibrium certificate, whose extra keys are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationDoc {
    pub allocation: Vec<Vec<f64>>,
    pub project: String,
}

impl AllocationDoc {
    pub fn build(&self, econ: &Economy) -> Result<Allocation> {
        Ok(Allocation::new(self.allocation.clone(), econ.project_index(&self.project)?))
    }

    pub fn from_allocation(econ: &Economy, alloc: &Allocation) -> Self {
        AllocationDoc { allocation: alloc.bundles.clone(), project: econ.project_name(alloc.project).to_string() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateDoc {
    pub allocation: Vec<Vec<f64>>,
    pub project: String,
    pub prices: BTreeMap<String, Vec<f64>>,
    #[serde(default)]
    pub indirect: Vec<Vec<f64>>,
    #[serde(default)]
    pub margins: Vec<Vec<f64>>,
}

impl CertificateDoc {
    pub fn from_certificate(econ: &Economy, cert: &EquilibriumCertificate) -> Self {
        CertificateDoc {
            allocation: cert.allocation.bundles.clone(),
            project: econ.project_name(cert.allocation.project).to_string(),
            prices: econ.projects().iter().cloned().zip(cert.prices.iter().cloned()).collect(),
            indirect: cert.indirect.clone(),
            margins: cert.margins.clone(),
        }
    }

    pub fn build(&self, econ: &Economy) -> Result<(Allocation, PriceSystem)> {
        let alloc = Allocation::new(self.allocation.clone(), econ.project_index(&self.project)?);
        Ok((alloc, by_project(&self.prices, econ.projects(), "prices")?))
    }
}

pub fn parse<T: for<'de> Deserialize<'de>>(text: &str, what: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Input(format!("{what}: {e}")))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
    parse(&text, &path.display().to_string())
}

pub fn load_economy(path: &Path) -> Result<(Economy, CostScheme)> {
    read_json::<EconomyDoc>(path)?.build()
}

pub fn load_allocation(path: &Path, econ: &Economy) -> Result<Allocation> {
    read_json::<AllocationDoc>(path)?.build(econ)
}

/// Pretty JSON with a trailing newline; identical input gives identical bytes.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    std::fs::write(path, to_json(value)).map_err(|e| Error::Input(format!("{}: {e}", path.display())))
}
