//! Cost share equilibrium of the agreeing two-agent economy, which has the
//! closed form x = (0.6, 0.6) for both agents at y1 with prices (0.5, 0.5).

use pubshare::catalog;
use pubshare::equilibrium::find_cost_share_equilibrium;

fn main() -> anyhow::Result<()> {
    for (name, (econ, scheme)) in [("agree", catalog::agree()), ("opposing", catalog::opposing()), ("mild", catalog::mild())] {
        match find_cost_share_equilibrium(&econ, &scheme)? {
            Some(ce) => {
                println!("{name}: equilibrium at {}", econ.project_name(ce.allocation.project));
                println!("  bundles {:?}", ce.allocation.bundles);
                println!("  prices  {:?}", ce.prices);
                println!("  utilities {:?}", econ.utilities_at(&ce.allocation)?);
            }
            None => println!("{name}: no equilibrium among the per-project Walras allocations"),
        }
    }
    Ok(())
}
