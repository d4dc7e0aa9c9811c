//! Exchange equilibrium of the net economy at each fixed project.

use pubshare::catalog;
use pubshare::equilibrium::walras_solve;

fn main() -> anyhow::Result<()> {
    let (econ, scheme) = catalog::opposing();
    for z in 0..econ.k() {
        let w = walras_solve(&econ, &scheme, z)?;
        println!("project {}: prices {:?} after {} iterations", econ.project_name(z), w.prices, w.iterations);
        for (i, x) in w.bundles.iter().enumerate() {
            println!("  agent {i}: {x:?}");
        }
        println!("  excess {:?}, Walras law gap {:.1e}", w.excess, w.walras_law_gap);
    }
    Ok(())
}
