use proptest::prelude::*;
use threshold_diffusion::escape::escape_to_minus_infinity;
use threshold_diffusion::passage::PassageKernel;
use threshold_diffusion::potential::Resolvent;
use threshold_diffusion::ThresholdModel;

fn model(kind: i8) -> impl Strategy<Value = ThresholdModel> {
    (1usize..=4)
        .prop_flat_map(|n| {
            (
                -1.0..1.0f64,
                prop::collection::vec(0.2..1.5f64, n - 1),
                prop::collection::vec(prop_oneof![Just(0.0), -2.0..2.0f64], n + 1),
                prop::collection::vec(0.5..2.5f64, n + 1),
            )
        })
        .prop_map(move |(a0, widths, mut mu, sigma)| {
            let mut a = vec![a0];
            for w in widths {
                a.push(a[a.len() - 1] + w);
            }
            let n = a.len();
            if kind > 0 {
                mu[0] = mu[0].abs() + 0.2;
                mu[n] = -mu[n].abs() - 0.2;
            } else if kind < 0 {
                mu[0] = -mu[0].abs() - 0.2;
                mu[n] = mu[n].abs() + 0.2;
            }
            ThresholdModel::new(a, mu, sigma).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn transforms_are_sub_probabilities(m in model(0), q in 0.01..10.0f64, x in -3.0..4.0f64, d in 0.1..3.0f64) {
        let k = PassageKernel::new(&m, q).unwrap();
        let (y, z) = (x - d, x + 0.7 * d);
        let (down, up) = (k.exit_down(x, y, z).unwrap(), k.exit_up(x, y, z).unwrap());
        prop_assert!((0.0..=1.0).contains(&down) && (0.0..=1.0).contains(&up));
        prop_assert!(down + up <= 1.0 + 1e-12);
        prop_assert!(down <= k.hit(x, y).unwrap() * (1.0 + 1e-12));
        prop_assert!(k.hit(x, z + 1.0).unwrap() <= k.hit(x, z).unwrap() * (1.0 + 1e-12));
    }

    #[test]
    fn strong_markov(m in model(0), q in 0.01..10.0f64, x in -3.0..4.0f64, d1 in 0.05..2.0f64, d2 in 0.05..2.0f64) {
        let k = PassageKernel::new(&m, q).unwrap();
        let (w, y) = (x + d1, x + d1 + d2);
        let lhs = k.hit(x, y).unwrap();
        let rhs = k.hit(x, w).unwrap() * k.hit(w, y).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * lhs.max(1e-300));
    }

    #[test]
    fn density_integrates_to_one(m in model(0), q in 0.01..10.0f64, x in -3.0..4.0f64) {
        let p = Resolvent::new(&m, q).unwrap().pieces(x).unwrap();
        prop_assert!((p.total_mass().unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn escape_is_a_decreasing_probability(m in model(-1), y in -3.0..4.0f64, d in 0.0..1.0f64) {
        let p = escape_to_minus_infinity(&m, y).unwrap();
        let r = escape_to_minus_infinity(&m, y + d).unwrap();
        prop_assert!((0.0..=1.0).contains(&p));
        prop_assert!(r <= p + 1e-12);
    }

    #[test]
    fn json_round_trip(m in model(1)) {
        prop_assert_eq!(ThresholdModel::from_json(&m.to_json()).unwrap(), m);
    }
}
