//! Checking a claimed equilibrium: the true one passes, a tampered price
//! system at the unchosen project does not.

use pubshare::catalog;
use pubshare::equilibrium::verify_cost_share_equilibrium;

fn main() {
    let (econ, scheme) = catalog::agree();
    let ce = catalog::agree_equilibrium();
    let good = vec![vec![0.5, 0.5], vec![0.5, 0.5]];
    let bad = vec![vec![0.5, 0.5], vec![0.9, 0.1]];
    for (label, prices) in [("supporting prices", good), ("tampered y2 price", bad)] {
        let r = verify_cost_share_equilibrium(&econ, &scheme, &ce, &prices);
        println!("{label}: pass={}", r.pass);
        for c in r.checks.iter().filter(|c| !c.pass) {
            println!("  {} {}", c.name, c.detail);
        }
        if let Some(w) = r.worst {
            println!("  worst: agent {} prefers {} by {:.4}", w.agent, econ.project_name(w.project), w.amount);
        }
    }
}
