//! Load an economy from JSON and print every invariant check.
//!
//! `cargo run --example validate_economy -- examples/data/e2_agree.json`

use pubshare::economy::validate_economy;
use pubshare::io::load_economy;

fn main() -> anyhow::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data/e2_agree.json").into());
    let (econ, scheme) = load_economy(path.as_ref())?;
    let report = validate_economy(&econ, &scheme);
    for c in &report.checks {
        println!("{:<5} {:<32} {}", if c.pass { "ok" } else { "FAIL" }, c.name, c.detail);
    }
    println!("n={} ell={} projects={:?} -> {}", econ.n(), econ.ell(), econ.projects(), if report.pass { "valid" } else { "invalid" });
    Ok(())
}
