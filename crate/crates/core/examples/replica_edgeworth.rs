//! Replica (Edgeworth) and weighted-coalition (Aubin) checks. The fractional
//! allocation survives every ordinary coalition but is blocked once agents
//! can join with fractional weights, i.e. in a large enough replica.

use pubshare::blocking::sigma_core_check;
use pubshare::catalog;
use pubshare::economy::Allocation;
use pubshare::replica::{aubin_core_check, edgeworth_check};

fn main() -> anyhow::Result<()> {
    let (econ, scheme) = catalog::agree();
    let fractional = Allocation::new(vec![vec![0.64, 0.64], vec![0.56, 0.56]], 0);
    for (label, alloc) in [("equilibrium", catalog::agree_equilibrium()), ("fractional", fractional)] {
        let core = sigma_core_check(&econ, &scheme, &alloc)?;
        let edge = edgeworth_check(&econ, &scheme, &alloc, 8)?;
        let aubin = aubin_core_check(&econ, &scheme, &alloc, 8)?;
        println!("{label}: core {} | edgeworth blocked {} | aubin blocked {} ({} directions)", core.in_core, edge.blocked, aubin.blocked, aubin.directions_checked);
        if let Some(w) = &edge.witness {
            println!(
                "  first replica witness r={} l={:?} at {} margin {:.5}",
                w.r,
                w.l,
                econ.project_name(w.certificate.project),
                w.certificate.margin
            );
        }
        if let Some(w) = &aubin.strongest {
            println!("  strongest weights {:?} margin {:.5}", w.certificate.gamma.as_slice(), w.certificate.margin);
        }
    }
    Ok(())
}
