//! Density of X at an independent exponential time, in closed form.

use threshold_diffusion::potential::Resolvent;
use threshold_diffusion::ThresholdModel;

fn main() -> threshold_diffusion::Result<()> {
    let m = ThresholdModel::new(vec![0.0, 1.0], vec![1.0, -0.5, -1.0], vec![1.0, 2.0, 1.0])?;
    let (q, x) = (1.0, 0.5);
    let res = Resolvent::new(&m, q)?;

    for z in [-2.0, -0.5, 0.0, 0.5, 1.0, 1.5, 3.0] {
        println!("u({x}, {z:>4}) = {:.10}", res.density(x, z)?);
    }

    let pieces = res.pieces(x)?;
    println!("total mass {:.15}", pieces.total_mass()?);
    println!("P(0 < X < 1) = {:.10}", pieces.mass_between(0.0, 1.0)?);
    print!("{}", pieces.csv());

    // the constants C_i of the middle regimes
    for i in 1..m.n() {
        println!("C_{i} = {:.12}", res.c_const(i)?);
    }
    Ok(())
}
