//! How Bernoulli and uniform trends rescale the Gaussian tail.

use brisk::asymptotics::{bernoulli_asymptotic_factor, tail_term, uniform_trend_asymptotic};
use brisk::gaussian::CovarianceModel;
use brisk::qp::solve_qp;
use brisk::trend::TrendDistribution;

fn main() -> brisk::Result<()> {
    let model = CovarianceModel::identity(2);
    let qp = solve_qp(&model, &[1.0, 1.0])?;
    let bern = TrendDistribution::Bernoulli { p: vec![0.5, 0.5] };
    let unif = TrendDistribution::UniformBox { lo: vec![0.0, 0.0], hi: vec![1.0, 1.0] };
    let limit = bernoulli_asymptotic_factor(&[0.5, 0.5])?;
    for u in [3.0, 5.0, 8.0] {
        let b = [u, u];
        let zero = tail_term(&model, &b, &TrendDistribution::zero(2), 400_000, 256, 2)?;
        let with_bern = tail_term(&model, &b, &bern, 400_000, 256, 2)?;
        let with_unif = tail_term(&model, &b, &unif, 400_000, 256, 2)?;
        println!(
            "u={u}: bernoulli {:.4} (limit {limit})  uniform {:.4} (limit {:.4})",
            with_bern.point / zero.point,
            with_unif.point / zero.point,
            uniform_trend_asymptotic(&qp, u)?
        );
    }
    Ok(())
}
