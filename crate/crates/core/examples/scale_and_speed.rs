//! Scale function, speed density and the exit probabilities they give.

use threshold_diffusion::passage::exit_probability_down;
use threshold_diffusion::stationary::{scale_function, speed_density, speed_total};
use threshold_diffusion::ThresholdModel;

fn main() -> threshold_diffusion::Result<()> {
    let m = ThresholdModel::new(vec![-1.0, 0.0, 2.0], vec![0.5, -1.0, 0.0, -0.3], vec![1.0, 1.2, 2.0, 0.7])?;
    println!("{:>5} {:>16} {:>16}", "x", "phi", "m");
    for k in 0..=10 {
        let x = -2.0 + 0.5 * k as f64;
        println!("{x:>5} {:>16.10} {:>16.10}", scale_function(&m, x)?, speed_density(&m, x)?);
    }
    println!("total speed mass {:.10}", speed_total(&m)?);
    for x in [-1.5, 0.0, 1.0, 2.5] {
        println!("P_{x}(hit -2 before 3) = {:.10}", exit_probability_down(&m, x, -2.0, 3.0)?);
    }
    Ok(())
}
