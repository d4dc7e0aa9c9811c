//! Max-min blocking margin from the price-dual solver against the lattice
//! oracle, with the oracle's Lipschitz error bound.

use pubshare::blocking::{blocking_margin, brute_force_blocking, grid_error_bound, CoalitionWeights};
use pubshare::catalog;

fn main() -> anyhow::Result<()> {
    let (econ, scheme) = catalog::opposing();
    let refs = econ.utilities_at(&catalog::agree_equilibrium())?;
    for gamma in [vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0], vec![1.0, 0.5]] {
        let g = CoalitionWeights::new(gamma.clone())?;
        for z in 0..econ.k() {
            let exact = blocking_margin(&econ, &scheme, &g, z, &refs)?;
            let grid = brute_force_blocking(&econ, &scheme, &g, z, &refs, 200)?;
            let bound = grid_error_bound(&econ, &scheme, &g, z, &exact.xi, 200)?;
            println!(
                "gamma {gamma:?} {}: solver {:+.6} (dual bound {:+.6}), grid {:+.6}, gap {:.2e} <= {:.2e}",
                econ.project_name(z),
                exact.margin,
                exact.upper,
                grid,
                exact.margin - grid,
                bound
            );
        }
    }
    Ok(())
}
