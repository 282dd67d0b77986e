//! Monte Carlo estimates next to the closed forms. Pass a path count as the
//! first argument (default 20000).

use threshold_diffusion::montecarlo::{estimate_escape, estimate_hit_laplace, sample_exponential_time_law};
use threshold_diffusion::passage::laplace_hit;
use threshold_diffusion::potential::potential_pieces;
use threshold_diffusion::{escape, SimConfig, ThresholdModel};

fn main() -> threshold_diffusion::Result<()> {
    let paths = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(20_000);
    let cfg = SimConfig { paths, dt: 1e-3, horizon: 30.0, ..SimConfig::default() };
    let m = ThresholdModel::new(vec![0.0, 1.0], vec![1.0, -0.5, -1.0], vec![1.0, 2.0, 1.0])?;

    let e = estimate_hit_laplace(&m, 1.0, -0.5, 0.75, &cfg)?;
    let exact = laplace_hit(&m, 1.0, -0.5, 0.75)?;
    println!("hit: {:.5} ± {:.5}, exact {exact:.5}, z {:+.2}", e.value.estimate, e.value.std_error, e.value.z_score(exact));

    let edges: Vec<f64> = (0..=10).map(|k| -1.5 + 0.5 * k as f64).collect();
    let law = sample_exponential_time_law(&m, 1.0, 0.5, &cfg, &edges, &[0.5, 1.0])?;
    let pieces = potential_pieces(&m, 1.0, 0.5)?;
    for (k, b) in law.mass.iter().enumerate() {
        let want = pieces.mass_between(edges[k], edges[k + 1])?;
        println!("[{:>5}, {:>5}) {:.5} ± {:.5}  exact {want:.5}  z {:+.2}", edges[k], edges[k + 1], b.estimate, b.std_error, b.z_score(want));
    }
    for (t, (p, q)) in law.checkpoints.iter().zip(law.martingale_plus.iter().zip(&law.martingale_minus)) {
        println!("t={t}: martingale g+ {:.4} ± {:.4}, g- {:.4} ± {:.4}", p.estimate, p.std_error, q.estimate, q.std_error);
    }

    let t = ThresholdModel::new(vec![0.0, 1.0], vec![-1.0, 0.2, 1.0], vec![1.0, 2.0, 1.0])?;
    let es = estimate_escape(&t, 4.0, 0.5, &SimConfig { horizon: 200.0, ..cfg })?;
    let exact = escape::escape_to_minus_infinity(&t, 0.5)?;
    println!(
        "escape: M=4 {:.5} ± {:.5}, M=8 {:.5}, exact {exact:.5}",
        es.inner.estimate, es.inner.std_error, es.outer.estimate
    );
    Ok(())
}
