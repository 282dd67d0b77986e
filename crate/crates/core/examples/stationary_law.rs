//! Stationary density of a positive-recurrent model and the q -> 0 limit
//! of the potential density.

use threshold_diffusion::potential::potential_density;
use threshold_diffusion::stationary::{limit_sequences, normalizer_fbar1, stationary_density, StationaryLaw};
use threshold_diffusion::ThresholdModel;

fn main() -> threshold_diffusion::Result<()> {
    let m = ThresholdModel::new(vec![0.0, 1.0], vec![1.0, -0.5, -1.0], vec![1.0, 2.0, 1.0])?;
    let law = StationaryLaw::new(&m)?;
    println!("F1bar = {:.12}", normalizer_fbar1(&m)?);
    println!("regime masses {:?}", law.regime_masses);

    for z in [-1.0, 0.0, 0.5, 1.0, 2.0] {
        let pi = stationary_density(&m, z)?;
        let near: Vec<String> = [1e-2, 1e-3, 1e-4]
            .iter()
            .map(|&q| potential_density(&m, q, 3.0, z).map(|u| format!("{:.2e}", (u - pi).abs())))
            .collect::<Result<_, _>>()?;
        println!("pi({z:>4}) = {pi:.10}  |u_q - pi| for q=1e-2,1e-3,1e-4: {}", near.join(" "));
    }

    let ls = limit_sequences(&m);
    println!("F    = {:?}", ls.f);
    println!("Fbar = {:?}", ls.fbar);

    // no long-run law when the drifts point outward
    let t = ThresholdModel::new(vec![0.0], vec![-1.0, 1.0], vec![1.0, 1.0])?;
    println!("{}", StationaryLaw::new(&t).unwrap_err());
    Ok(())
}
