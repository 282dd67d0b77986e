//! The increasing and decreasing solutions g+ and g- of the generator
//! equation, their coefficients, and a check of smooth gluing.

use threshold_diffusion::fundamentals::{spectral_params, FundamentalSolution};
use threshold_diffusion::ThresholdModel;

fn main() -> threshold_diffusion::Result<()> {
    let m = ThresholdModel::new(vec![0.0, 1.0], vec![1.0, -0.5, -1.0], vec![1.0, 2.0, 1.0])?;
    let q = 1.0;
    let sp = spectral_params(&m, q)?;
    println!("l = {:?}\ndelta- = {:?}\ndelta+ = {:?}", sp.l, sp.delta_minus, sp.delta_plus);

    for g in [FundamentalSolution::plus(&m, q)?, FundamentalSolution::minus(&m, q)?] {
        println!("{:?}", g.side());
        print!("{}", g.csv_dump());
        for i in 1..=m.n() {
            let os = g.one_sided(i)?;
            println!("  a_{i}: g {:.15} | {:.15}   g' {:.15} | {:.15}", os.value.0, os.value.1, os.derivative.0, os.derivative.1);
        }
        for x in [-3.0, 0.5, 4.0] {
            println!("  log g({x}) = {:.12}", g.eval_log_g(x)?);
        }
    }
    Ok(())
}
