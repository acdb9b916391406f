//! Simulated ruin probability over its asymptotic approximation as the
//! capital level grows.

use brisk::asymptotics::{asymptotic_psi_with_ia, ia_for, AsymptoticConfig, IaConfig};
use brisk::gaussian::CovarianceModel;
use brisk::qp::solve_qp;
use brisk::simulator::{simulate_ruin_auto, RuinScenario};
use nalgebra::DMatrix;

fn main() -> brisk::Result<()> {
    let model = CovarianceModel::from_covariance(DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]))?;
    let a = vec![1.0, 0.8];
    let config = AsymptoticConfig {
        ia: IaConfig { horizon: 20.0, steps_per_unit: 1024, n_paths: 5000 },
        tail_budget: 200_000,
        ..AsymptoticConfig::default()
    };
    let qp = solve_qp(&model, &a)?;
    let (ia, horizon) = ia_for(&qp, &model, &config, 7)?;
    println!("I_a = {:.4} ± {:.4}, lambda product {:.4}", ia.point, ia.stderr, qp.lambda_product());
    for u in [2.0, 3.0, 4.0, 5.0] {
        let s = RuinScenario::new(model.clone(), a.clone(), u).with_budget(4096, 20_000).with_seed(7);
        let sim = simulate_ruin_auto(&s)?;
        let asym = asymptotic_psi_with_ia(&s, &config, ia.clone(), horizon, 7)?;
        println!(
            "u={u}: simulated {:.4e}  asymptotic {:.4e}  ratio {:.3}",
            sim.point,
            asym.psi_approx.point,
            sim.point / asym.psi_approx.point
        );
    }
    Ok(())
}
