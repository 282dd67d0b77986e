//! Laplace transforms of hitting times and two-sided exits for a
//! three-regime model.

use threshold_diffusion::passage::{exit_probability_down, PassageKernel};
use threshold_diffusion::ThresholdModel;

fn main() -> threshold_diffusion::Result<()> {
    let m = ThresholdModel::new(vec![0.0, 1.0], vec![1.0, -0.5, -1.0], vec![1.0, 2.0, 1.0])?;
    let x = -0.5;

    println!("E_x[exp(-q tau_y)] from x = {x}");
    println!("{:>6} {:>12} {:>12} {:>12}", "y", "q=0.1", "q=1", "q=10");
    for y in [-2.0, -1.0, 0.0, 0.75, 2.0, 4.0] {
        let row: Vec<f64> = [0.1, 1.0, 10.0]
            .iter()
            .map(|&q| PassageKernel::new(&m, q).and_then(|k| k.hit(x, y)))
            .collect::<Result<_, _>>()?;
        println!("{y:>6} {:>12.6e} {:>12.6e} {:>12.6e}", row[0], row[1], row[2]);
    }

    // exit from (-1, 2): both transforms, and their q -> 0 limit
    let (lo, hi) = (-1.0, 2.0);
    for q in [1.0, 1e-2, 1e-4] {
        let k = PassageKernel::new(&m, q)?;
        println!("q={q:<6} down {:.8} up {:.8}", k.exit_down(x, lo, hi)?, k.exit_up(x, lo, hi)?);
    }
    println!("P(tau_lo < tau_hi) = {:.8}", exit_probability_down(&m, x, lo, hi)?);
    Ok(())
}
