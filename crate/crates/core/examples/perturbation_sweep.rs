//! Domination in perturbed economies: nothing dominates the equilibrium,
//! the lopsided optimum is dominated at y1 with alpha = (0, 1).

use pubshare::catalog;
use pubshare::equilibrium::construct_gamma_z;
use pubshare::perturbation::{alpha_sweep, perturbed_endowments};

fn main() -> anyhow::Result<()> {
    let (econ, scheme) = catalog::agree();
    for (label, alloc) in [("equilibrium", catalog::agree_equilibrium()), ("lopsided", catalog::agree_lopsided())] {
        let gammas = (0..econ.k()).map(|z| construct_gamma_z(&econ, &alloc, z).map(|g| g.bundles)).collect::<Result<Vec<_>, _>>()?;
        let sweep = alpha_sweep(&econ, &scheme, &alloc, &gammas, 8, false)?;
        println!("{label}: {} points, skipped projects {:?}, dominated {}", sweep.points_checked, sweep.skipped, !sweep.consistent);
        if let Some(w) = &sweep.witness {
            let g = gammas[w.project].as_ref().expect("witness project has a compensating allocation");
            let endow = perturbed_endowments(&econ, &scheme, g, w.project, &w.alpha)?;
            let check = w.check(&econ, &scheme, &alloc, g)?;
            println!("  at {} alpha {:?}: endowments {:?}", econ.project_name(w.project), w.alpha, endow);
            println!("  bundles {:?} margin {:.4} re-check valid {}", w.xi, w.margin, check.valid);
        }
    }
    Ok(())
}
