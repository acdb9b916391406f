//! Solve the barrier quadratic program for an equicorrelated pair and a
//! random 3-dimensional covariance, and compare with the closed form.

use brisk::gaussian::CovarianceModel;
use brisk::qp::{solve_equicorrelated, solve_qp, EquicorrSpec};
use nalgebra::DMatrix;

fn main() -> brisk::Result<()> {
    let rho = 0.5;
    for a in [[1.0, 0.8], [1.0, 0.3]] {
        let spec = EquicorrSpec::new(2, rho, a.to_vec())?;
        let qp = solve_equicorrelated(&spec)?;
        println!("rho={rho} a={a:?}: a_tilde={:?} I={:?} lambda={:?}", qp.a_tilde, qp.active_set, qp.lambda);
    }

    let sigma = DMatrix::from_row_slice(3, 3, &[2.0, 0.6, -0.3, 0.6, 1.0, 0.2, -0.3, 0.2, 1.5]);
    let model = CovarianceModel::from_covariance(sigma)?;
    let qp = solve_qp(&model, &[1.0, 0.2, -0.5])?;
    println!(
        "3-d: a_tilde={:?} I={:?} J={:?} U={:?} objective={:.6}",
        qp.a_tilde, qp.active_set, qp.complement, qp.weak_set, qp.objective
    );
    Ok(())
}
