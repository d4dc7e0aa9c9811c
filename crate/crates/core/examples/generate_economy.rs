//! Seeded random economies and the allocations the fuzz suite derives
//! from them.

use pubshare::harness::{fuzz_case, generate_economy, Difficulty, FuzzProfile};
use pubshare::io::{to_json, EconomyDoc};

fn main() -> anyhow::Result<()> {
    let (econ, scheme) = generate_economy(1, 3, 2, 2, Difficulty::Opposing)?;
    print!("{}", to_json(&EconomyDoc::from_economy(&econ, &scheme)));
    let case = fuzz_case(7, FuzzProfile::default())?;
    println!("fuzz seed 7: n={} ell={} k={}", case.econ.n(), case.econ.ell(), case.econ.k());
    for (label, a) in &case.allocations {
        println!("  {label:<22} at {} utilities {:?}", case.econ.project_name(a.project), case.econ.utilities_at(a)?);
    }
    Ok(())
}
