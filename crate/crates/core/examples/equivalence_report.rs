//! Five characterisations of one allocation side by side, as JSON.
//!
//! `cargo run --example equivalence_report -- [economy.json allocation.json]`

use pubshare::harness::equivalence_report;
use pubshare::io::{load_allocation, load_economy, to_json};

fn main() -> anyhow::Result<()> {
    let data = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data/");
    let mut args = std::env::args().skip(1);
    let econ_path = args.next().unwrap_or_else(|| format!("{data}e2_agree.json"));
    let alloc_path = args.next().unwrap_or_else(|| format!("{data}e2_agree_lopsided.json"));
    let (econ, scheme) = load_economy(econ_path.as_ref())?;
    let alloc = load_allocation(alloc_path.as_ref(), &econ)?;
    let report = equivalence_report(&econ, &scheme, &alloc)?;
    print!("{}", to_json(&report));
    Ok(())
}
