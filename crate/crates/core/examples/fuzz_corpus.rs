//! Seeded fuzz corpus: equivalence verdicts across generated economies.

use pubshare::harness::{run_fuzz, FuzzProfile};
use std::time::Instant;

fn main() -> anyhow::Result<()> {
    let count: usize = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(10);
    let start = Instant::now();
    let summary = run_fuzz(7, count, FuzzProfile::default())?;
    for r in &summary.records {
        println!(
            "seed {:>3} {:<22} n={} l={} k={} met={} verdicts={:?} escalation={:?}",
            r.economy_seed, r.label, r.agents, r.goods, r.projects, r.preconditions_met, r.verdicts, r.escalation.as_ref().map(|e| e.kind)
        );
    }
    println!(
        "{} economies, {} allocations, {} with preconditions, {} agree, {} violations, {} inconclusive, {} rejected in {:.1?}",
        summary.economies,
        summary.allocations,
        summary.preconditions_met,
        summary.agreements,
        summary.validated_violations,
        summary.inconclusive,
        summary.rejected,
        start.elapsed()
    );
    Ok(())
}
