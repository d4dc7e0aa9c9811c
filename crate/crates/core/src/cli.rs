//! Command-line surface. Every command prints one JSON document on stdout
//! and optionally persists it with `--out`.
//!
//! Exit status: 0 when a verdict was computed, 1 when the fuzz suite finds
//! a validated violation, 2 on input errors (diagnostic JSON on stderr).

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use crate::blocking::sigma_core_check;
use crate::continuum::{lift, vind_sweep};
use crate::economy::{validate_economy, CostScheme, Economy};
use crate::equilibrium::{construct_gamma_z, find_cost_share_equilibrium, verify_cost_share_equilibrium, walras_solve};
use crate::error::{Error, Result};
use crate::harness::{equivalence_report, run_fuzz, FuzzProfile};
use crate::io::{self, AllocationDoc, CertificateDoc};
use crate::perturbation::alpha_sweep;
use crate::replica::{aubin_core_check, edgeworth_check};

#[derive(Debug, Parser)]
#[command(name = "pubshare", version, about = "Cost-share equilibria and cores of public-project economies")]
pub struct Cli {
    /// Also write the report to this file.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the economy and cost scheme invariants.
    Validate { file: PathBuf },
    /// Exchange equilibrium with project `z` fixed.
    Walras {
        file: PathBuf,
        #[arg(long)]
        project: String,
    },
    /// Search for a cost-share equilibrium.
    FindCe { file: PathBuf },
    /// Verify an equilibrium certificate.
    VerifyCe {
        file: PathBuf,
        #[arg(long)]
        cert: PathBuf,
    },
    /// Enumerate ordinary coalitions.
    Core {
        file: PathBuf,
        #[arg(long)]
        alloc: PathBuf,
    },
    /// Weighted-coalition core check up to denominator `rmax`.
    Aubin {
        file: PathBuf,
        #[arg(long)]
        alloc: PathBuf,
        #[arg(long)]
        rmax: Option<u32>,
    },
    /// Replica-economy (Edgeworth) check up to `rmax` replicas.
    Edgeworth {
        file: PathBuf,
        #[arg(long)]
        alloc: PathBuf,
        #[arg(long)]
        rmax: Option<u32>,
    },
    /// Resize the strongest blocking coalition of the continuum economy.
    Vind {
        file: PathBuf,
        #[arg(long)]
        alloc: PathBuf,
        /// One or more measures, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        eps: Vec<f64>,
    },
    /// Grand-coalition domination in perturbed economies.
    Perturb {
        file: PathBuf,
        #[arg(long)]
        alloc: PathBuf,
        #[arg(long)]
        grid: Option<u32>,
        /// Polish near-witnesses by coordinate search.
        #[arg(long)]
        refine: bool,
    },
    /// All five equivalent characterisations for one allocation.
    Equiv {
        file: PathBuf,
        #[arg(long)]
        alloc: PathBuf,
    },
    /// Equivalence cross-check over seeded random economies.
    Fuzz {
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        count: usize,
    },
}

#[derive(Debug, Serialize)]
struct Envelope<'a, T: Serialize> {
    command: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    projects: Option<&'a [String]>,
    result: T,
}

pub struct Outcome {
    pub report: Value,
    pub code: i32,
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Dimension(_) => "dimension",
        Error::UnknownProject(_) => "unknown_project",
        Error::ProjectIndex(_) => "project_index",
        Error::RowSum { .. } => "row_sum",
        Error::InvalidScheme(_) => "invalid_scheme",
        Error::NegativeComponent { .. } => "negative_component",
        Error::BoundaryGradient(_) => "boundary_gradient",
        Error::InvalidCoalition(_) => "invalid_coalition",
        Error::Unaffordable { .. } => "unaffordable",
        Error::NegativeNetEndowment { .. } => "negative_net_endowment",
        Error::NonConvergence(_) => "non_convergence",
        Error::EnumerationCap(_) => "enumeration_cap",
        Error::Hypothesis(_) => "hypothesis",
        Error::NonProportional { .. } => "non_proportional",
        Error::Infeasible(_) => "infeasible",
        Error::NotParetoOptimal => "not_pareto_optimal",
        Error::AlphaRange(_) => "alpha_range",
        Error::Input(_) => "input",
        Error::Resize(_) => "resize",
    }
}

pub fn diagnostic(e: &Error) -> Value {
    json!({ "error": error_kind(e), "message": e.to_string() })
}

fn envelope<T: Serialize>(command: &str, econ: Option<&Economy>, result: T) -> Value {
    serde_json::to_value(Envelope { command, projects: econ.map(|e| e.projects()), result }).expect("reports serialize")
}

/// Loads an economy that must pass validation.
fn load_valid(path: &Path) -> Result<(Economy, CostScheme)> {
    let (econ, scheme) = io::load_economy(path)?;
    let report = validate_economy(&econ, &scheme);
    if !report.pass {
        let failed: Vec<String> = report.checks.iter().filter(|c| !c.pass).map(|c| format!("{}: {}", c.name, c.detail)).collect();
        return Err(Error::Input(format!("economy fails validation: {}", failed.join("; "))));
    }
    Ok((econ, scheme))
}

fn with_rmax(econ: Economy, rmax: Option<u32>) -> Result<Economy> {
    match rmax {
        Some(r) => {
            let mut cfg = econ.config().clone();
            cfg.r_max = r;
            econ.with_config(cfg)
        }
        None => Ok(econ),
    }
}

/// Runs one command without touching the process.
pub fn execute(command: &Command) -> Result<Outcome> {
    let ok = |report: Value| Ok(Outcome { report, code: 0 });
    match command {
        Command::Validate { file } => {
            let (econ, scheme) = io::load_economy(file)?;
            let report = validate_economy(&econ, &scheme);
            let code = if report.pass { 0 } else { 2 };
            Ok(Outcome { report: envelope("validate", Some(&econ), report), code })
        }
        Command::Walras { file, project } => {
            let (econ, scheme) = load_valid(file)?;
            let z = econ.project_index(project)?;
            ok(envelope("walras", Some(&econ), walras_solve(&econ, &scheme, z)?))
        }
        Command::FindCe { file } => {
            let (econ, scheme) = load_valid(file)?;
            let found = find_cost_share_equilibrium(&econ, &scheme)?;
            let doc = found.as_ref().map(|c| CertificateDoc::from_certificate(&econ, c));
            ok(envelope("find-ce", Some(&econ), json!({ "found": doc.is_some(), "certificate": doc })))
        }
        Command::VerifyCe { file, cert } => {
            let (econ, scheme) = load_valid(file)?;
            let (alloc, prices) = io::read_json::<CertificateDoc>(cert)?.build(&econ)?;
            ok(envelope("verify-ce", Some(&econ), verify_cost_share_equilibrium(&econ, &scheme, &alloc, &prices)))
        }
        Command::Core { file, alloc } => {
            let (econ, scheme) = load_valid(file)?;
            let alloc = io::load_allocation(alloc, &econ)?;
            ok(envelope("core", Some(&econ), sigma_core_check(&econ, &scheme, &alloc)?))
        }
        Command::Aubin { file, alloc, rmax } => {
            let (econ, scheme) = load_valid(file)?;
            let econ = with_rmax(econ, *rmax)?;
            let alloc = io::load_allocation(alloc, &econ)?;
            ok(envelope("aubin", Some(&econ), aubin_core_check(&econ, &scheme, &alloc, econ.config().r_max)?))
        }
        Command::Edgeworth { file, alloc, rmax } => {
            let (econ, scheme) = load_valid(file)?;
            let econ = with_rmax(econ, *rmax)?;
            let alloc = io::load_allocation(alloc, &econ)?;
            ok(envelope("edgeworth", Some(&econ), edgeworth_check(&econ, &scheme, &alloc, econ.config().r_max)?))
        }
        Command::Vind { file, alloc, eps } => {
            let (econ, scheme) = load_valid(file)?;
            let alloc = io::load_allocation(alloc, &econ)?;
            let cont = lift(&econ, &scheme);
            ok(envelope("vind", Some(&econ), vind_sweep(&cont, &alloc, eps)?))
        }
        Command::Perturb { file, alloc, grid, refine } => {
            let (econ, scheme) = load_valid(file)?;
            let alloc = io::load_allocation(alloc, &econ)?;
            let gammas = (0..econ.k()).map(|z| construct_gamma_z(&econ, &alloc, z).map(|g| g.bundles)).collect::<Result<Vec<_>>>()?;
            let g = grid.unwrap_or(econ.config().alpha_grid);
            ok(envelope("perturb", Some(&econ), alpha_sweep(&econ, &scheme, &alloc, &gammas, g, *refine)?))
        }
        Command::Equiv { file, alloc } => {
            let (econ, scheme) = load_valid(file)?;
            let alloc = io::load_allocation(alloc, &econ)?;
            let report = equivalence_report(&econ, &scheme, &alloc)?;
            ok(envelope("equiv", Some(&econ), json!({ "allocation": AllocationDoc::from_allocation(&econ, &alloc), "report": report })))
        }
        Command::Fuzz { seed, count } => {
            let summary = run_fuzz(*seed, *count, FuzzProfile::default())?;
            let code = if summary.passed() { 0 } else { 1 };
            Ok(Outcome { report: envelope("fuzz", None, summary), code })
        }
    }
}

/// Parses arguments, runs, prints and persists; returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli.command) {
        Ok(outcome) => {
            let text = io::to_json(&outcome.report);
            print!("{text}");
            if let Some(path) = &cli.out {
                if let Err(e) = std::fs::write(path, &text) {
                    eprint!("{}", io::to_json(&diagnostic(&Error::Input(format!("{}: {e}", path.display())))));
                    return 2;
                }
            }
            outcome.code
        }
        Err(e) => {
            eprint!("{}", io::to_json(&diagnostic(&e)));
            2
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_every_command() {
        for args in [
            vec!["pubshare", "validate", "e.json"],
            vec!["pubshare", "walras", "e.json", "--project", "y1"],
            vec!["pubshare", "find-ce", "e.json", "--out", "r.json"],
            vec!["pubshare", "verify-ce", "e.json", "--cert", "c.json"],
            vec!["pubshare", "core", "e.json", "--alloc", "a.json"],
            vec!["pubshare", "aubin", "e.json", "--alloc", "a.json", "--rmax", "4"],
            vec!["pubshare", "edgeworth", "e.json", "--alloc", "a.json"],
            vec!["pubshare", "vind", "e.json", "--alloc", "a.json", "--eps", "0.1,0.5"],
            vec!["pubshare", "perturb", "e.json", "--alloc", "a.json", "--grid", "8"],
            vec!["pubshare", "equiv", "e.json", "--alloc", "a.json"],
            vec!["pubshare", "fuzz", "--seed", "7", "--count", "100"],
        ] {
            assert!(Cli::try_parse_from(&args).is_ok(), "{args:?}");
        }
        assert!(Cli::try_parse_from(["pubshare", "walras", "e.json"]).is_err());
    }

    #[test]
    fn missing_file_is_input_error() {
        assert_eq!(run(["pubshare", "validate", "/nonexistent/economy.json"]), 2);
    }
}
