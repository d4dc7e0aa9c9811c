//! Continuum economy: a blocking coalition is resized to every measure
//! between 0.05 and 0.95 and each resized coalition still blocks.

use pubshare::catalog;
use pubshare::continuum::{lift, vind_sweep};

fn main() -> anyhow::Result<()> {
    let (econ, scheme) = catalog::agree();
    let cont = lift(&econ, &scheme);
    let alloc = catalog::agree_lopsided();
    let eps: Vec<f64> = (1..=19).map(|k| k as f64 * 0.05).collect();
    let sweep = vind_sweep(&cont, &alloc, &eps)?;
    println!("base coalition masses {:?} at {} (measure {:.4})", sweep.base.masses, econ.project_name(sweep.base.project), sweep.base.measure());
    for e in &sweep.entries {
        match &e.result {
            Some(r) => println!(
                "eps {:.2}: measure {:.12} residual {:.1e} min gain {:.5} delta {:.3} valid {}",
                e.epsilon, r.check.measure, r.check.resource_residual, r.check.min_improvement, r.delta, r.check.valid
            ),
            None => println!("eps {:.2}: failed ({})", e.epsilon, e.error.as_deref().unwrap_or("")),
        }
    }
    Ok(())
}
