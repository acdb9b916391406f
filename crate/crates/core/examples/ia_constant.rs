//! The constant `I_a(Λ)` for a single index (value 2) and for an
//! equicorrelated pair, over a few horizons.

use brisk::asymptotics::estimate_ia_horizons;
use brisk::gaussian::CovarianceModel;
use brisk::qp::solve_qp;
use nalgebra::DMatrix;

fn main() -> brisk::Result<()> {
    let one = CovarianceModel::identity(1);
    let qp = solve_qp(&one, &[1.0])?;
    for e in estimate_ia_horizons(&qp, &one, &[5.0, 10.0, 20.0], 1024, 5000, 1)? {
        println!("d=1: {:.4} ± {:.4}", e.point, e.stderr);
    }

    let pair = CovarianceModel::from_covariance(DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]))?;
    let qp = solve_qp(&pair, &[1.0, 0.8])?;
    let est = estimate_ia_horizons(&qp, &pair, &[5.0, 10.0, 20.0], 512, 5000, 1)?;
    for (h, e) in [5, 10, 20].iter().zip(est) {
        println!("rho=0.5 a=(1,0.8) Λ={h}: {:.4} ± {:.4}", e.point, e.stderr);
    }
    Ok(())
}
