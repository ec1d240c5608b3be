use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{Case, DecodeOutcome, Scheme};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BlockTrace {
    pub block: usize,
    pub states: Vec<usize>,
    pub codeword: u64,
    pub x: Vec<usize>,
    pub y: Vec<usize>,
    pub z: Vec<usize>,
    pub key_used: Option<u64>,
    pub key_generated: u64,
    pub message: Option<u64>,
    pub decoded: Option<DecodeOutcome>,
    pub error: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SessionTrace {
    pub trial: u64,
    pub blocks: Vec<BlockTrace>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimulationReport {
    pub case: Case,
    pub n: usize,
    pub b: usize,
    pub trials: u64,
    pub message_blocks: u64,
    pub errors: u64,
    pub empirical_pe: f64,
    /// Errors per message-bearing block, blocks `2..=b`.
    pub per_block_errors: Vec<u64>,
    pub misses: u64,
    pub ambiguities: u64,
    /// Counts of the keys handed from each block to the next.
    pub key_histogram: Vec<u64>,
}

#[derive(Clone, Debug, Default)]
struct Counts {
    per_block: Vec<u64>,
    misses: u64,
    ambiguities: u64,
    keys: Vec<u64>,
}

impl Counts {
    fn new(b: usize, nk: u64) -> Self {
        Counts {
            per_block: vec![0; b - 1],
            misses: 0,
            ambiguities: 0,
            keys: vec![0; nk as usize],
        }
    }

    fn merge(mut self, other: Counts) -> Counts {
        for (a, b) in self.per_block.iter_mut().zip(other.per_block) {
            *a += b;
        }
        for (a, b) in self.keys.iter_mut().zip(other.keys) {
            *a += b;
        }
        self.misses += other.misses;
        self.ambiguities += other.ambiguities;
        self
    }
}

fn stream(seed: u64, trial: u64, role: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial.wrapping_mul(4).wrapping_add(role));
    rng
}

fn run_trial(scheme: &Scheme, trial: u64, trace: bool) -> Result<(Counts, Option<SessionTrace>)> {
    let cfg = scheme.config();
    let lay = scheme.layout();
    let ns = scheme.channel().ns();
    let p_s = scheme.channel().p_s();
    let mut enc_rng = stream(cfg.seed, trial, 1);
    let mut state_rng = stream(cfg.seed, trial, 2);
    let mut chan_rng = stream(cfg.seed, trial, 3);
    let mut counts = Counts::new(cfg.b, lay.n_key);
    let mut blocks = Vec::new();
    let mut key_enc: Option<u64> = None;
    let mut key_dec: Option<u64> = None;
    for j in 0..cfg.b {
        let m = key_enc.map(|_| enc_rng.random_range(0..lay.messages));
        let states: Vec<usize> = (0..cfg.n)
            .map(|_| {
                let r = state_rng.random::<f64>();
                let mut acc = 0.0;
                let mut pick = ns - 1;
                for (s, &p) in p_s.iter().enumerate() {
                    acc += p;
                    if p > 0.0 && r < acc {
                        pick = s;
                        break;
                    }
                }
                pick
            })
            .collect();
        let (x, l) = scheme.encode_block(m, key_enc, &states, &mut enc_rng)?;
        let (y, z) = scheme.channel_outputs(&x, &states, &mut chan_rng);
        let mut decoded = None;
        let mut error = false;
        if let (Some(m), Some(k)) = (m, key_dec) {
            let out = scheme.decode_block(&y, &states, k)?;
            match out {
                DecodeOutcome::Decoded(mh) => error = mh != m,
                DecodeOutcome::NoCandidate => {
                    error = true;
                    counts.misses += 1;
                }
                DecodeOutcome::Ambiguous => {
                    error = true;
                    counts.ambiguities += 1;
                }
            }
            if error {
                counts.per_block[j - 1] += 1;
            }
            decoded = Some(out);
        }
        // Both ends observe the same state block, so their keys must agree.
        let k_enc = scheme.key_of(&states);
        let k_dec = scheme.key_of(&states);
        if k_enc != k_dec {
            return Err(Error::Internal(format!(
                "key chain diverged in trial {trial}, block {}",
                j + 1
            )));
        }
        if j + 1 < cfg.b {
            counts.keys[k_enc as usize] += 1;
        }
        if trace {
            blocks.push(BlockTrace {
                block: j + 1,
                states,
                codeword: l,
                x,
                y,
                z,
                key_used: key_enc,
                key_generated: k_enc,
                message: m,
                decoded,
                error,
            });
        }
        key_enc = Some(k_enc);
        key_dec = Some(k_dec);
    }
    Ok((counts, trace.then_some(SessionTrace { trial, blocks })))
}

/// Runs `trials` independent sessions against the scheme's fixed codebook.
/// Each trial draws from its own counter-derived streams, so the report does
/// not depend on scheduling.
pub fn run_session(scheme: &Scheme, trials: u64) -> Result<SimulationReport> {
    let cfg = scheme.config();
    let nk = scheme.layout().n_key;
    let parts: Vec<Counts> = (0..trials)
        .into_par_iter()
        .map(|t| run_trial(scheme, t, false).map(|(c, _)| c))
        .collect::<Result<_>>()?;
    let total = parts
        .into_iter()
        .fold(Counts::new(cfg.b, nk), Counts::merge);
    let message_blocks = trials * (cfg.b as u64 - 1);
    let errors: u64 = total.per_block.iter().sum();
    Ok(SimulationReport {
        case: cfg.case,
        n: cfg.n,
        b: cfg.b,
        trials,
        message_blocks,
        errors,
        empirical_pe: if message_blocks == 0 {
            0.0
        } else {
            errors as f64 / message_blocks as f64
        },
        per_block_errors: total.per_block,
        misses: total.misses,
        ambiguities: total.ambiguities,
        key_histogram: total.keys,
    })
}

/// Full record of one trial.
pub fn trace_session(scheme: &Scheme, trial: u64) -> Result<SessionTrace> {
    Ok(run_trial(scheme, trial, true)?
        .1
        .expect("trace requested"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{example_channel, ChannelWithState};
    use crate::simulator::tests::case3;
    use crate::simulator::MessageCodebook;

    #[test]
    fn noiseless_session_has_no_errors() {
        let ch = ChannelWithState::from_fn(2, 2, 1, vec![0.5, 0.5], |_, x, y, _| {
            (x == y) as u8 as f64
        })
        .unwrap();
        let mut cfg = case3(4, 1, 0);
        cfg.epsilon = 10.0;
        let cb = MessageCodebook::from_sequences(
            vec![vec![0, 0, 1, 1], vec![1, 1, 0, 0]],
            2,
            cfg.layout().unwrap(),
        )
        .unwrap();
        let scheme = Scheme::with_codebook(&ch, &cfg, cb).unwrap();
        let r = run_session(&scheme, 200).unwrap();
        assert_eq!(r.empirical_pe, 0.0);
        assert_eq!(r.key_histogram.iter().sum::<u64>(), 200);
    }

    #[test]
    fn same_seed_same_report() {
        let ch = example_channel();
        let mut cfg = case3(6, 1, 11);
        cfg.b = 3;
        let scheme = Scheme::new(&ch, &cfg).unwrap();
        let a = run_session(&scheme, 300).unwrap();
        let b = run_session(&scheme, 300).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.key_histogram.iter().sum::<u64>(), 600);
        assert!((0.0..=1.0).contains(&a.empirical_pe));
    }

    #[test]
    fn trace_matches_session_counts() {
        let ch = example_channel();
        let scheme = Scheme::new(&ch, &case3(4, 1, 2)).unwrap();
        let tr = trace_session(&scheme, 0).unwrap();
        assert_eq!(tr.blocks.len(), 2);
        assert!(tr.blocks[0].message.is_none());
        assert_eq!(tr.blocks[1].key_used, Some(tr.blocks[0].key_generated));
        let r = run_session(&scheme, 1).unwrap();
        assert_eq!(r.errors, tr.blocks[1].error as u64);
    }
}
