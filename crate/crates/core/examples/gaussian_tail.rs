//! Orthant tail probabilities `P(W(1) > b)`, plain and exponentially tilted.

use brisk::gaussian::{tail_probability_with, univariate_phibar, CovarianceModel, TailStrategy};

fn main() -> brisk::Result<()> {
    let model = CovarianceModel::identity(2);
    for level in [1.0, 3.0, 6.0] {
        let b = [level, level];
        let exact = univariate_phibar(level).powi(2);
        let plain = tail_probability_with(&model, &b, 200_000, 1, TailStrategy::Plain)?;
        let tilted = tail_probability_with(&model, &b, 200_000, 1, TailStrategy::Tilted)?;
        println!(
            "b={level}: exact {exact:.4e}  plain {:.4e} ± {:.1e}  tilted {:.4e} ± {:.1e}",
            plain.point, plain.stderr, tilted.point, tilted.stderr
        );
    }
    Ok(())
}
