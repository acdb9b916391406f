//! Crude and tilted simulation of the ruin probability, against the exact
//! one-dimensional formula.

use brisk::asymptotics::exact_ruin_1d;
use brisk::gaussian::CovarianceModel;
use brisk::simulator::{simulate_ruin, simulate_ruin_tilted, RuinScenario};
use brisk::trend::TrendDistribution;

fn main() -> brisk::Result<()> {
    let c = 0.5;
    for u in [1.0, 2.0, 4.0] {
        let s = RuinScenario::new(CovarianceModel::identity(1), vec![1.0], u)
            .with_trend(TrendDistribution::PointMass { c: vec![c] })
            .with_budget(4096, 50_000)
            .with_seed(1);
        let exact = exact_ruin_1d(u, c, 1.0, 1.0)?;
        let crude = simulate_ruin(&s)?;
        let tilted = simulate_ruin_tilted(&s)?;
        println!(
            "u={u}: exact {exact:.4e}  crude {:.4e} ± {:.1e}  tilted {:.4e} ± {:.1e}",
            crude.point, crude.stderr, tilted.point, tilted.stderr
        );
    }
    Ok(())
}
