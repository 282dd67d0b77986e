//! Probability that a transient model drifts off to -infinity.

use threshold_diffusion::escape::{escape_coefficients, escape_to_minus_infinity};
use threshold_diffusion::stationary::{scale_function, scale_limits};
use threshold_diffusion::ThresholdModel;

fn main() -> threshold_diffusion::Result<()> {
    let m = ThresholdModel::new(vec![0.0, 1.0], vec![-1.0, 0.2, 1.0], vec![1.0, 2.0, 1.0])?;
    let ec = escape_coefficients(&m)?;
    println!("A = {:?}\nB = {:?}", ec.a, ec.b);

    let (lo, hi) = scale_limits(&m);
    println!("{:>5} {:>14} {:>14}", "y", "p_minus", "scale oracle");
    for k in 0..=12 {
        let y = -2.0 + 0.5 * k as f64;
        let p = escape_to_minus_infinity(&m, y)?;
        let oracle = (hi - scale_function(&m, y)?) / (hi - lo);
        println!("{y:>5} {p:>14.10} {oracle:>14.10}");
    }
    Ok(())
}
