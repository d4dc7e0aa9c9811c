//! Ordinary coalitions: the equilibrium is in the core, a lopsided Pareto
//! optimum is blocked, and the blocking certificate checks out.

use pubshare::blocking::{is_pareto_optimal, sigma_core_check};
use pubshare::catalog;

fn main() -> anyhow::Result<()> {
    let (econ, scheme) = catalog::agree();
    for (label, alloc) in [("equilibrium", catalog::agree_equilibrium()), ("lopsided", catalog::agree_lopsided())] {
        let po = is_pareto_optimal(&econ, &alloc)?;
        let v = sigma_core_check(&econ, &scheme, &alloc)?;
        println!("{label}: pareto optimal {} (margins {:?}), in core {} after {} coalitions", po.optimal, po.margins, v.in_core, v.coalitions_checked);
        if let Some(w) = v.witness {
            let refs = econ.utilities_at(&alloc)?;
            let check = w.check(&econ, &scheme, &refs)?;
            println!("  blocked by {:?} at {} with margin {:.4}; re-check valid={}", w.gamma.support(), econ.project_name(w.project), w.margin, check.valid);
        }
    }
    Ok(())
}
