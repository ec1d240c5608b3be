//! Desk-scale block-Markov secrecy coding: random codebooks, key extraction
//! from the state sequence, causal Shannon-strategy encoding, and robust
//! typicality decoding.

mod config;
mod session;

pub use config::{pad, unpad, Case, Layout, Log2Sizes, SchemeConfig, MAX_LOG2_SIZE};
pub use session::{
    run_session, trace_session, BlockTrace, SessionTrace, SimulationReport,
};

use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::channel::{ChannelWithState, ShannonStrategy};
use crate::error::{Error, Result};
use crate::info::JointPmf;

/// Default cap on stored codebook symbols.
pub const CODEBOOK_SYMBOL_CAP: u64 = 100_000_000;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seeded pseudorandom assignment of state sequences to key bins.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct KeyBinning {
    pub prf_seed: u64,
    pub nk: u64,
}

impl KeyBinning {
    pub fn new(prf_seed: u64, nk: u64) -> Result<Self> {
        if nk == 0 {
            return Err(Error::domain("key bin count must be positive"));
        }
        Ok(KeyBinning { prf_seed, nk })
    }

    /// The binning used by a scheme with the given master seed.
    pub fn for_seed(master_seed: u64, nk: u64) -> Result<Self> {
        KeyBinning::new(splitmix64(master_seed ^ 0x6b65_792d_6269_6e73), nk)
    }
}

/// Bin index of a state sequence, uniform in `[0, nk)` over random seeds.
pub fn key_bin(s_seq: &[usize], kb: &KeyBinning) -> u64 {
    let mut h = splitmix64(kb.prf_seed ^ (s_seq.len() as u64).wrapping_mul(0xA076_1D64_78BD_642F));
    for &s in s_seq {
        h = splitmix64(h ^ (s as u64).wrapping_mul(0xE703_7ED1_A0B4_28DB));
    }
    h % kb.nk
}

/// Randomly generated codewords together with their bin structure.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MessageCodebook {
    pub n: usize,
    pub card_u: usize,
    pub sequences: Vec<Vec<usize>>,
    pub layout: Layout,
}

impl MessageCodebook {
    /// Wraps explicit sequences, e.g. for hand-built test codebooks.
    pub fn from_sequences(sequences: Vec<Vec<usize>>, card_u: usize, layout: Layout) -> Result<Self> {
        if sequences.len() as u64 != layout.n_total {
            return Err(Error::domain(format!(
                "codebook has {} sequences, layout expects {}",
                sequences.len(),
                layout.n_total
            )));
        }
        let n = sequences.first().map_or(0, Vec::len);
        if sequences.iter().any(|s| s.len() != n || s.iter().any(|&u| u >= card_u)) {
            return Err(Error::domain("codewords must share one length and stay in the alphabet"));
        }
        Ok(MessageCodebook {
            n,
            card_u,
            sequences,
            layout,
        })
    }

    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }

    /// `(outer bin, inner sub-bin)` of codeword `l`.
    pub fn bin_of(&self, l: u64) -> (u64, u64) {
        self.layout.group_of(l)
    }
}

fn sample_index(probs: &[f64], r: f64) -> usize {
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last = i;
            if r < acc {
                return i;
            }
        }
    }
    last
}

/// I.i.d. codewords from `p(u)`, drawn from stream 0 of the master seed.
pub fn generate_codebook(cfg: &SchemeConfig, strat: &ShannonStrategy) -> Result<MessageCodebook> {
    let layout = cfg.layout()?;
    let symbols = layout.n_total as u128 * cfg.n as u128;
    if symbols > CODEBOOK_SYMBOL_CAP as u128 {
        return Err(Error::resource("codebook symbols", symbols, CODEBOOK_SYMBOL_CAP as u128));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(0);
    let sequences = (0..layout.n_total)
        .map(|_| {
            (0..cfg.n)
                .map(|_| sample_index(&strat.p_u, rng.random::<f64>()))
                .collect()
        })
        .collect();
    MessageCodebook::from_sequences(sequences, strat.card_u(), layout)
}

/// Robust typicality: every tuple frequency within `epsilon * p` of its
/// probability, so tuples of probability zero must not occur.
pub fn typicality_check(seqs: &[&[usize]], joint: &JointPmf, epsilon: f64) -> Result<bool> {
    let vars = joint.variables();
    if seqs.len() != vars.len() {
        return Err(Error::domain(format!(
            "{} sequences for a joint over {} variables",
            seqs.len(),
            vars.len()
        )));
    }
    let n = seqs.first().map_or(0, |s| s.len());
    if seqs.iter().any(|s| s.len() != n) {
        return Err(Error::domain("typicality sequences differ in length"));
    }
    if n == 0 {
        return Err(Error::domain("typicality needs at least one symbol"));
    }
    let sizes: Vec<usize> = vars.iter().map(|a| a.size()).collect();
    let mut counts = vec![0u32; joint.table().len()];
    for i in 0..n {
        let mut idx = 0;
        for (s, &k) in seqs.iter().zip(&sizes) {
            if s[i] >= k {
                return Err(Error::domain("symbol outside its alphabet"));
            }
            idx = idx * k + s[i];
        }
        counts[idx] += 1;
    }
    Ok(counts_typical(&counts, joint.table(), n, epsilon))
}

fn counts_typical(counts: &[u32], p: &[f64], n: usize, epsilon: f64) -> bool {
    let n = n as f64;
    counts
        .iter()
        .zip(p)
        .all(|(&c, &q)| (c as f64 / n - q).abs() <= epsilon * q)
}

/// Result of searching the allowed codewords for typical candidates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Located {
    Unique(u64),
    None,
    Multiple,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum DecodeOutcome {
    Decoded(u64),
    NoCandidate,
    Ambiguous,
}

/// A configured scheme: code sizes, strategy, codebook, key binning and the
/// effective per-symbol channels used by the decoder and the oracle.
#[derive(Clone, Debug)]
pub struct Scheme {
    cfg: SchemeConfig,
    layout: Layout,
    strategy: ShannonStrategy,
    codebook: MessageCodebook,
    kb: KeyBinning,
    ch: ChannelWithState,
    /// design joint `p(u,s,y)`, `[u][s][y]`
    design: Vec<f64>,
    /// `p(y|u,s)`, `[u][s][y]`
    wy: Vec<f64>,
    /// `p(z|u,s)`, `[u][s][z]`
    wz: Vec<f64>,
}

impl Scheme {
    /// Builds the scheme, generating the codebook from the configured seed.
    pub fn new(ch: &ChannelWithState, cfg: &SchemeConfig) -> Result<Self> {
        let strategy = cfg
            .strategy
            .clone()
            .unwrap_or_else(|| ShannonStrategy::uniform_identity(ch.nx(), ch.ns()));
        strategy.validate(ch)?;
        let codebook = generate_codebook(cfg, &strategy)?;
        Scheme::with_codebook(ch, cfg, codebook)
    }

    /// Builds the scheme around a given codebook.
    pub fn with_codebook(
        ch: &ChannelWithState,
        cfg: &SchemeConfig,
        codebook: MessageCodebook,
    ) -> Result<Self> {
        let layout = cfg.layout()?;
        let strategy = cfg
            .strategy
            .clone()
            .unwrap_or_else(|| ShannonStrategy::uniform_identity(ch.nx(), ch.ns()));
        strategy.validate(ch)?;
        if cfg.case == Case::Case3
            && strategy.v_of_us.iter().enumerate().any(|(u, row)| row.iter().any(|&v| v != u))
        {
            return Err(Error::contract(
                "the third scheme sends v^n directly; the strategy map must be v(u,s) = u",
            ));
        }
        if codebook.layout != layout || codebook.n != cfg.n || codebook.card_u != strategy.card_u() {
            return Err(Error::contract("codebook does not match the scheme configuration"));
        }
        let (nu, ns, ny, nz) = (strategy.card_u(), ch.ns(), ch.ny(), ch.nz());
        let mut wy = vec![0.0; nu * ns * ny];
        let mut wz = vec![0.0; nu * ns * nz];
        let mut design = vec![0.0; nu * ns * ny];
        for u in 0..nu {
            for s in 0..ns {
                let v = strategy.v(u, s);
                for x in 0..ch.nx() {
                    let px = strategy.p_x(v, s, x);
                    if px == 0.0 {
                        continue;
                    }
                    for y in 0..ny {
                        wy[(u * ns + s) * ny + y] += px * ch.p_y_given_xs(s, x, y);
                    }
                    for z in 0..nz {
                        wz[(u * ns + s) * nz + z] += px * ch.p_z_given_xs(s, x, z);
                    }
                }
                for y in 0..ny {
                    let i = (u * ns + s) * ny + y;
                    design[i] = strategy.p_u[u] * ch.p_s()[s] * wy[i];
                }
            }
        }
        Ok(Scheme {
            cfg: cfg.clone(),
            layout,
            kb: KeyBinning::for_seed(cfg.seed, layout.n_key)?,
            strategy,
            codebook,
            ch: ch.clone(),
            design,
            wy,
            wz,
        })
    }

    pub fn config(&self) -> &SchemeConfig {
        &self.cfg
    }
    pub fn layout(&self) -> &Layout {
        &self.layout
    }
    pub fn codebook(&self) -> &MessageCodebook {
        &self.codebook
    }
    pub fn key_binning(&self) -> &KeyBinning {
        &self.kb
    }
    pub fn strategy(&self) -> &ShannonStrategy {
        &self.strategy
    }
    pub fn channel(&self) -> &ChannelWithState {
        &self.ch
    }
    pub fn messages(&self) -> u64 {
        self.layout.messages
    }

    /// The design joint over `(U, S, Y)` used for typicality decoding.
    pub fn design_joint(&self) -> Result<JointPmf> {
        use crate::info::Alphabet;
        JointPmf::new(
            vec![
                Alphabet::new("U", self.strategy.card_u())?,
                self.ch.s().clone(),
                self.ch.y().clone(),
            ],
            self.design.clone(),
        )
    }

    /// `p(y|u,s)` with `x` averaged out through the strategy.
    pub fn p_y_given_us(&self, u: usize, s: usize, y: usize) -> f64 {
        self.wy[(u * self.ch.ns() + s) * self.ch.ny() + y]
    }

    /// `p(z|u,s)` with `x` averaged out through the strategy.
    pub fn p_z_given_us(&self, u: usize, s: usize, z: usize) -> f64 {
        self.wz[(u * self.ch.ns() + s) * self.ch.nz() + z]
    }

    /// Codewords the encoder may pick: all of them in the first block,
    /// otherwise the sub-bin selected by the message and the previous key.
    pub fn codeword_range(&self, m: Option<u64>, key_prev: Option<u64>) -> Result<Range<u64>> {
        let lay = &self.layout;
        match (m, key_prev) {
            (None, None) => Ok(0..lay.n_total),
            (Some(m), Some(k)) => {
                if m >= lay.messages {
                    return Err(Error::domain(format!("message {m} outside [0, {})", lay.messages)));
                }
                if k >= lay.n_key {
                    return Err(Error::domain(format!("key {k} outside [0, {})", lay.n_key)));
                }
                Ok(match self.cfg.case {
                    Case::Case1 => {
                        let (m0, m1) = (m / lay.n_inner, m % lay.n_inner);
                        lay.group_range(m0, pad(m1, k, lay.n_inner))
                    }
                    Case::Case2 => {
                        let (kd, km) = (k % lay.n_keyd, k / lay.n_keyd);
                        lay.group_range(kd, pad(m, km, lay.n_inner))
                    }
                    Case::Case3 => {
                        let l = pad(m, k, lay.n_total);
                        l..l + 1
                    }
                })
            }
            _ => Err(Error::domain("a message block needs both a message and a key")),
        }
    }

    /// Codeword indices the decoder searches, given the previous key.
    pub fn search_range(&self, key_prev: u64) -> Range<u64> {
        match self.cfg.case {
            Case::Case2 => self.layout.outer_range(key_prev % self.layout.n_keyd),
            _ => 0..self.layout.n_total,
        }
    }

    /// Message carried by codeword `l` under key `key_prev`.
    pub fn recover(&self, l: u64, key_prev: u64) -> u64 {
        let lay = &self.layout;
        let (outer, inner) = lay.group_of(l);
        match self.cfg.case {
            Case::Case1 => outer * lay.n_inner + unpad(inner, key_prev, lay.n_inner),
            Case::Case2 => unpad(inner, key_prev / lay.n_keyd, lay.n_inner),
            Case::Case3 => unpad(l, key_prev, lay.n_total),
        }
    }

    /// Picks the codeword and sends it symbol by symbol. At time `i` the
    /// transmitted symbol depends only on `states[..=i]`: the codeword index is
    /// drawn first and each symbol consumes exactly one uniform.
    pub fn encode_block<R: Rng>(
        &self,
        m: Option<u64>,
        key_prev: Option<u64>,
        states: &[usize],
        rng: &mut R,
    ) -> Result<(Vec<usize>, u64)> {
        if states.len() != self.cfg.n {
            return Err(Error::domain(format!(
                "state block has {} symbols, n = {}",
                states.len(),
                self.cfg.n
            )));
        }
        if let Some(&s) = states.iter().find(|&&s| s >= self.ch.ns()) {
            return Err(Error::domain(format!("state symbol {s} outside the alphabet")));
        }
        let range = self.codeword_range(m, key_prev)?;
        let l = if range.end - range.start == 1 {
            range.start
        } else {
            rng.random_range(range)
        };
        let word = &self.codebook.sequences[l as usize];
        let mut x = Vec::with_capacity(states.len());
        for (i, &s) in states.iter().enumerate() {
            let v = self.strategy.v(word[i], s);
            let r = rng.random::<f64>();
            x.push(sample_index(&self.strategy.p_x_given_vs[v][s], r));
        }
        Ok((x, l))
    }

    /// Draws `(y_i, z_i)` for every symbol, one uniform per symbol.
    pub fn channel_outputs<R: Rng>(
        &self,
        x: &[usize],
        states: &[usize],
        rng: &mut R,
    ) -> (Vec<usize>, Vec<usize>) {
        let nz = self.ch.nz();
        let mut y = Vec::with_capacity(x.len());
        let mut z = Vec::with_capacity(x.len());
        for (&xi, &si) in x.iter().zip(states) {
            let k = sample_index(self.ch.yz_row(si, xi), rng.random::<f64>());
            y.push(k / nz);
            z.push(k % nz);
        }
        (y, z)
    }

    fn typical(&self, word: &[usize], s: &[usize], y: &[usize], counts: &mut [u32]) -> bool {
        let (ns, ny) = (self.ch.ns(), self.ch.ny());
        counts.iter_mut().for_each(|c| *c = 0);
        for i in 0..word.len() {
            counts[(word[i] * ns + s[i]) * ny + y[i]] += 1;
        }
        counts_typical(counts, &self.design, word.len(), self.cfg.epsilon)
    }

    /// Finds the codewords in the allowed set that are jointly typical with
    /// the observed outputs and states.
    pub fn locate(&self, y: &[usize], s: &[usize], key_prev: u64) -> Located {
        let mut counts = vec![0u32; self.design.len()];
        let mut hit = None;
        for l in self.search_range(key_prev) {
            if self.typical(&self.codebook.sequences[l as usize], s, y, &mut counts) {
                if hit.is_some() {
                    return Located::Multiple;
                }
                hit = Some(l);
            }
        }
        hit.map_or(Located::None, Located::Unique)
    }

    pub fn decode_block(&self, y: &[usize], s: &[usize], key_prev: u64) -> Result<DecodeOutcome> {
        if y.len() != self.cfg.n || s.len() != self.cfg.n {
            return Err(Error::domain("decoder inputs must have length n"));
        }
        if key_prev >= self.layout.n_key {
            return Err(Error::domain(format!("key {key_prev} outside [0, {})", self.layout.n_key)));
        }
        Ok(match self.locate(y, s, key_prev) {
            Located::Unique(l) => DecodeOutcome::Decoded(self.recover(l, key_prev)),
            Located::None => DecodeOutcome::NoCandidate,
            Located::Multiple => DecodeOutcome::Ambiguous,
        })
    }

    pub fn key_of(&self, states: &[usize]) -> u64 {
        key_bin(states, &self.kb)
    }
}
