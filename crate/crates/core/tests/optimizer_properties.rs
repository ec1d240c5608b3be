use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wiretap_csi::channel::{
    bsc, check_less_noisy, embed_policy, example_channel, is_physically_degraded,
    liu_chen_embedded, rate_csi_1_value, rate_csi_2_value, BroadcastChannel, ChannelWithState,
};
use wiretap_csi::optimizer::{
    grid_count, maximize_branch, maximize_lower_bound, simplex_grid, Branch, SearchConfig,
    DEFAULT_EVALUATION_CAP,
};

fn cfg(card_v: usize, res: u32, rounds: u32, restarts: u32) -> SearchConfig {
    SearchConfig {
        card_v,
        grid_resolution: res,
        refine_rounds: rounds,
        restarts,
        seed: 3,
        max_evaluations: DEFAULT_EVALUATION_CAP,
    }
}

fn random_channel(seed: u64) -> ChannelWithState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut row = |n: usize| -> Vec<f64> {
        let w: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 1e-3).collect();
        let t: f64 = w.iter().sum();
        w.into_iter().map(|x| x / t).collect()
    };
    let p_s = row(2);
    let table: Vec<f64> = (0..4).flat_map(|_| row(4)).collect();
    ChannelWithState::new(2, 2, 2, 2, p_s, table).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn doubling_the_resolution_never_loses(seed in any::<u64>()) {
        let ch = random_channel(seed);
        for branch in [Branch::Csi1, Branch::Csi2] {
            let coarse = maximize_branch(&ch, &cfg(2, 2, 0, 0), branch).unwrap().value.0;
            let fine = maximize_branch(&ch, &cfg(2, 4, 0, 0), branch).unwrap().value.0;
            prop_assert!(fine >= coarse - 1e-12, "{branch:?}: {fine} < {coarse}");
        }
    }

    #[test]
    fn witnesses_reproduce_their_values(seed in any::<u64>()) {
        let ch = random_channel(seed);
        let r1 = maximize_branch(&ch, &cfg(2, 3, 1, 0), Branch::Csi1).unwrap();
        prop_assert_eq!(r1.value, rate_csi_1_value(&ch, &r1.witness).unwrap());
        let r2 = maximize_branch(&ch, &cfg(2, 3, 1, 0), Branch::Csi2).unwrap();
        prop_assert_eq!(r2.value, rate_csi_2_value(&ch, &r2.witness).unwrap());
    }

    #[test]
    fn optimum_dominates_the_embedded_noncausal_value(seed in any::<u64>()) {
        let ch = random_channel(seed);
        let r = maximize_lower_bound(&ch, &cfg(2, 3, 1, 0)).unwrap();
        let lc = liu_chen_embedded(&ch, &embed_policy(&r.csi1_witness).unwrap()).unwrap();
        prop_assert!(r.lower_bound.0 >= lc.0 - 1e-10);
    }
}

#[test]
fn results_do_not_depend_on_worker_count() {
    let ch = example_channel();
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| {
                let c = cfg(3, 4, 2, 2);
                (
                    maximize_branch(&ch, &c, Branch::Csi1).unwrap(),
                    maximize_branch(&ch, &c, Branch::Csi2).unwrap(),
                )
            })
    };
    assert_eq!(run(1), run(4));
}

#[test]
fn grid_counts_match_enumeration() {
    for dim in 1..=4 {
        for res in 1..=6 {
            let pts = simplex_grid(dim, res).unwrap();
            assert_eq!(pts.len() as u128, grid_count(dim, res));
            assert!(pts.iter().all(|p| (p.iter().sum::<f64>() - 1.0).abs() < 1e-12));
            assert!(pts.windows(2).all(|w| w[0] != w[1]));
        }
    }
}

#[test]
fn degraded_channels_pass_the_concavity_certificate() {
    let (wy, wz) = (bsc(0.1), bsc(0.25));
    let bc = BroadcastChannel::from_fn(2, 2, 2, |x, y, z| wy[x][y] * wz[y][z]).unwrap();
    assert!(is_physically_degraded(&bc));
    assert!(check_less_noisy(&bc, 16).unwrap().holds);
    // Z better than Y: the certificate must find a counterexample
    assert!(!check_less_noisy(&bc.swapped(), 16).unwrap().holds);
}
