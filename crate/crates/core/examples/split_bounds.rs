//! Early and late crossing windows: `m ≤ ψ ≤ m + M` on shared paths.

use brisk::gaussian::CovarianceModel;
use brisk::simulator::{simulate_split, RuinScenario};

fn main() -> brisk::Result<()> {
    let s = RuinScenario::new(CovarianceModel::identity(2), vec![1.0, 1.0], 2.0).with_budget(1024, 50_000);
    for lambda in [0.5, 1.0, 2.0, 3.0] {
        let e = simulate_split(&s, lambda)?;
        println!(
            "Λ={lambda}: δ={:.3}  m={:.5}  M={:.5}  ψ={:.5}",
            e.delta, e.m.point, e.big_m.point, e.psi.point
        );
    }
    Ok(())
}
