use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wiretap_csi::channel::{example_channel, ChannelWithState, ShannonStrategy};
use wiretap_csi::info::Alphabet;
use wiretap_csi::simulator::{
    generate_codebook, key_bin, pad, run_session, typicality_check, unpad, Case, KeyBinning,
    Log2Sizes, Scheme, SchemeConfig,
};
use wiretap_csi::JointPmf;

fn config(case: Case, n: usize, sizes: Log2Sizes, seed: u64) -> SchemeConfig {
    SchemeConfig {
        case,
        n,
        b: 2,
        log2_sizes: sizes,
        epsilon: 2.0,
        seed,
        trials: 100,
        strategy: None,
    }
}

/// A strategy whose transmitted symbol depends on the current state.
fn state_dependent_strategy() -> ShannonStrategy {
    ShannonStrategy {
        p_u: vec![0.5, 0.5],
        v_of_us: vec![vec![0, 1], vec![1, 0]],
        card_v: 2,
        p_x_given_vs: vec![
            vec![vec![0.7, 0.3], vec![0.2, 0.8]],
            vec![vec![0.4, 0.6], vec![0.9, 0.1]],
        ],
    }
}

fn all_binary(n: usize) -> Vec<Vec<usize>> {
    (0..1usize << n)
        .map(|i| (0..n).map(|t| (i >> (n - 1 - t)) & 1).collect())
        .collect()
}

fn schemes_for(n: usize) -> Vec<Scheme> {
    let ch = example_channel();
    let mut out = Vec::new();
    let c1 = Log2Sizes { total: 3, bins: 1, subbins: 1, key: 2, keyd: 0 };
    let c2 = Log2Sizes { total: 3, bins: 1, subbins: 1, key: 2, keyd: 1 };
    let c3 = Log2Sizes { total: 2, key: 2, ..Default::default() };
    for (case, sizes) in [(Case::Case1, c1), (Case::Case2, c2), (Case::Case3, c3)] {
        let mut cfg = config(case, n, sizes, 5 + n as u64);
        if case != Case::Case3 {
            cfg.strategy = Some(state_dependent_strategy());
        }
        out.push(Scheme::new(&ch, &cfg).unwrap());
    }
    out
}

#[test]
fn encoder_is_causal_exhaustively() {
    for n in 1..=6 {
        let seqs = all_binary(n);
        for scheme in schemes_for(n) {
            let lay = *scheme.layout();
            let mut inputs = vec![(None, None)];
            for m in 0..lay.messages {
                for k in 0..lay.n_key {
                    inputs.push((Some(m), Some(k)));
                }
            }
            for (m, k) in inputs {
                let xs: Vec<Vec<usize>> = seqs
                    .iter()
                    .map(|s| {
                        let mut rng = ChaCha8Rng::seed_from_u64(42);
                        scheme.encode_block(m, k, s, &mut rng).unwrap().0
                    })
                    .collect();
                for (a, sa) in seqs.iter().enumerate() {
                    for (b, sb) in seqs.iter().enumerate() {
                        let common = sa.iter().zip(sb).take_while(|(p, q)| p == q).count();
                        assert_eq!(
                            xs[a][..common],
                            xs[b][..common],
                            "{:?} n={n}: states {sa:?} vs {sb:?}",
                            scheme.config().case
                        );
                    }
                }
            }
        }
    }
}

#[test]
fn pad_is_invertible_exhaustively() {
    for e in 0..=6 {
        let modulus = 1u64 << e;
        for m in 0..modulus {
            for k in 0..256 {
                assert_eq!(unpad(pad(m, k, modulus), k, modulus), m);
            }
        }
    }
}

#[test]
fn codeword_sets_partition_and_invert() {
    for n in [2, 4] {
        for scheme in schemes_for(n) {
            let lay = *scheme.layout();
            let mut seen = vec![0u32; lay.n_total as usize];
            for o in 0..lay.n_outer {
                for i in 0..lay.n_inner {
                    for l in lay.group_range(o, i) {
                        seen[l as usize] += 1;
                        assert_eq!(lay.group_of(l), (o, i));
                    }
                }
            }
            assert!(seen.iter().all(|&c| c == 1));
            for k in 0..lay.n_key {
                let allowed = scheme.search_range(k);
                let mut owner = vec![None; lay.n_total as usize];
                for m in 0..lay.messages {
                    for l in scheme.codeword_range(Some(m), Some(k)).unwrap() {
                        assert!(allowed.contains(&l));
                        assert_eq!(scheme.recover(l, k), m);
                        assert!(owner[l as usize].replace(m).is_none(), "codeword {l} reused");
                    }
                }
            }
        }
    }
}

proptest! {
    #[test]
    fn pad_round_trips(e in 0u32..31, m in any::<u64>(), k in any::<u64>()) {
        let modulus = 1u64 << e;
        let m = m % modulus;
        prop_assert_eq!(unpad(pad(m, k, modulus), k, modulus), m);
    }

    #[test]
    fn key_bins_stay_in_range(seed in any::<u64>(), nk in 1u64..64,
                              s in prop::collection::vec(0usize..3, 0..12)) {
        let kb = KeyBinning::new(seed, nk).unwrap();
        prop_assert!(key_bin(&s, &kb) < nk);
    }
}

/// Exact probability that every one of `k` equiprobable bins receives between
/// `lo` and `hi` of `n` items.
fn multinomial_all_within(n: usize, k: usize, lo: usize, hi: usize) -> f64 {
    // dp[j] = P(first i bins hold exactly j items, all within range) / multinomial weights
    let ln_fact: Vec<f64> = (0..=n)
        .scan(0.0, |acc, i| {
            if i > 0 {
                *acc += (i as f64).ln();
            }
            Some(*acc)
        })
        .collect();
    let mut dp = vec![f64::NEG_INFINITY; n + 1];
    dp[0] = 0.0;
    for _ in 0..k {
        let mut next = vec![f64::NEG_INFINITY; n + 1];
        for (j, &w) in dp.iter().enumerate() {
            if w == f64::NEG_INFINITY {
                continue;
            }
            for c in lo..=hi.min(n - j) {
                let v = w - ln_fact[c];
                let t = &mut next[j + c];
                *t = if *t == f64::NEG_INFINITY { v } else { t.max(v) + (-(t.max(v) - t.min(v))).exp().ln_1p() };
            }
        }
        dp = next;
    }
    (dp[n] + ln_fact[n] - n as f64 * (k as f64).ln()).exp()
}

#[test]
fn key_binning_matches_the_multinomial_law() {
    let seqs = all_binary(8);
    let expect = multinomial_all_within(256, 4, 48, 80);
    let seeds = 400;
    let mut hits = 0;
    let mut pooled = [0u64; 4];
    for seed in 0..seeds {
        let kb = KeyBinning::new(seed, 4).unwrap();
        let mut counts = [0usize; 4];
        for s in &seqs {
            counts[key_bin(s, &kb) as usize] += 1;
        }
        hits += counts.iter().all(|c| (48..=80).contains(c)) as u32;
        for (p, c) in pooled.iter_mut().zip(counts) {
            *p += c as u64;
        }
    }
    let frac = hits as f64 / seeds as f64;
    let sigma = (expect * (1.0 - expect) / seeds as f64).sqrt();
    assert!((frac - expect).abs() <= 4.0 * sigma, "{frac} vs {expect}");
    // pooled counts: each bin is Binomial(256 * 400, 1/4)
    let total = 256.0 * seeds as f64;
    let sd = (total * 0.25 * 0.75).sqrt();
    for c in pooled {
        assert!((c as f64 - total / 4.0).abs() <= 4.0 * sd, "{pooled:?}");
    }
}

#[test]
fn codebook_symbols_follow_the_input_law() {
    let strat = ShannonStrategy::from_independent_policy(
        vec![0.3, 0.7],
        vec![vec![vec![1.0, 0.0]; 2], vec![vec![0.0, 1.0]; 2]],
    );
    let cfg = config(Case::Case3, 8, Log2Sizes { total: 10, key: 10, ..Default::default() }, 9);
    let cb = generate_codebook(&cfg, &strat).unwrap();
    let symbols = (cb.len() * cb.n) as f64;
    let zeros = cb.sequences.iter().flatten().filter(|&&u| u == 0).count() as f64;
    let sd = (symbols * 0.3 * 0.7).sqrt();
    assert!((zeros - 0.3 * symbols).abs() <= 4.0 * sd, "{zeros} of {symbols}");
}

#[test]
fn typicality_acceptance_rate_matches_binomial_oracle() {
    let (n, q, eps) = (20usize, 0.3f64, 0.2f64);
    let p = JointPmf::new(vec![Alphabet::new("A", 2).unwrap()], vec![q, 1.0 - q]).unwrap();
    // zeros c must satisfy |c/n - q| <= eps q and |(n-c)/n - (1-q)| <= eps (1-q)
    let binom = |c: usize| -> f64 {
        let ln_choose: f64 = (1..=c).map(|i| ((n - c + i) as f64 / i as f64).ln()).sum();
        (ln_choose + c as f64 * q.ln() + (n - c) as f64 * (1.0 - q).ln()).exp()
    };
    let expect: f64 = (0..=n)
        .filter(|&c| {
            let f = c as f64 / n as f64;
            (f - q).abs() <= eps * q && (f - q).abs() <= eps * (1.0 - q)
        })
        .map(binom)
        .sum();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let draws = 4000;
    let mut accepted = 0;
    for _ in 0..draws {
        let seq: Vec<usize> = (0..n).map(|_| (rng.random::<f64>() >= q) as usize).collect();
        accepted += typicality_check(&[&seq], &p, eps).unwrap() as u32;
    }
    let frac = accepted as f64 / draws as f64;
    let sd = (expect * (1.0 - expect) / draws as f64).sqrt();
    assert!((frac - expect).abs() <= 4.0 * sd, "{frac} vs {expect}");
}

#[test]
fn longer_blocks_do_not_raise_the_error_rate() {
    // U = X uniform gives I(U;Y,S) = 1 - h(0.1) ~ 0.531; codebooks hold
    // 2^floor(0.75 * 0.531 * n) words: 2 at n = 4 and 16 at n = 12.
    let ch = example_channel();
    let trials = 4000u64;
    for seed in 1..=4 {
        let run = |n: usize, log2: u32| {
            let mut cfg = config(Case::Case3, n, Log2Sizes { total: log2, key: log2, ..Default::default() }, seed);
            cfg.epsilon = 2.0;
            let r = run_session(&Scheme::new(&ch, &cfg).unwrap(), trials).unwrap();
            r.empirical_pe
        };
        let short = run(4, 1);
        let long = run(12, 4);
        let sigma = (short * (1.0 - short) / trials as f64).sqrt()
            + (long * (1.0 - long) / trials as f64).sqrt();
        assert!(long <= short + 3.0 * sigma, "seed {seed}: n=12 {long} vs n=4 {short}");
    }
}

#[test]
fn noiseless_sessions_decode_every_block() {
    let ch = ChannelWithState::from_fn(2, 2, 1, vec![0.5, 0.5], |_, x, y, _| (x == y) as u8 as f64)
        .unwrap();
    // seed chosen so the two codewords differ
    let cfg = config(Case::Case3, 4, Log2Sizes { total: 1, key: 1, ..Default::default() }, 1);
    let scheme = Scheme::new(&ch, &cfg).unwrap();
    assert_ne!(scheme.codebook().sequences[0], scheme.codebook().sequences[1]);
    let r = run_session(&scheme, 500).unwrap();
    assert_eq!(r.errors, 0);
}
