//! Exact finite-`n` quantities of a configured scheme, by full enumeration.
//!
//! Everything is conditioned on the realized codebook and key binning. Two
//! independently structured enumerators exist for the error probability and
//! the leakage; [`second_enumerator_crosscheck`] compares them.
//!
//! The session-level leakage is `I(M_2..M_b; Z^{bn} | C)`, normalized by the
//! `(b-1) n` symbols of the message-bearing blocks.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::info::{entropy_of, Bits, CLAMP_TOL};
use crate::simulator::{DecodeOutcome, Located, Scheme};

/// Agreement required between the two enumerators.
pub const CROSSCHECK_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct EnumerationBudget {
    pub max_terms: u64,
}

impl Default for EnumerationBudget {
    fn default() -> Self {
        EnumerationBudget {
            max_terms: 100_000_000,
        }
    }
}

impl EnumerationBudget {
    fn check(&self, what: &str, required: u128) -> Result<()> {
        if required > self.max_terms as u128 {
            Err(Error::resource(what, required, self.max_terms as u128))
        } else {
            Ok(())
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KeyStatistics {
    pub j: usize,
    /// `H(K_j | C)`
    pub key_entropy: Bits,
    /// `I(K_j; Z(j) | C)`, the eavesdropper's view of the current block
    pub key_leakage_block: Bits,
    /// `I(K_j; Z^j | C)`, everything seen up to block `j`
    pub key_leakage: Bits,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CrossCheck {
    pub pe_factored: f64,
    pub pe_bruteforce: f64,
    pub leakage_recursive: Bits,
    pub leakage_bruteforce: Bits,
    pub agree: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleReport {
    pub exact_pe: f64,
    pub leakage_bits: Bits,
    pub leakage_bits_per_symbol: Bits,
    pub message_entropy: Bits,
    pub key_statistics: Vec<KeyStatistics>,
    pub crosscheck: Option<CrossCheck>,
}

fn pow(base: usize, e: usize) -> u128 {
    (0..e).fold(1u128, |acc, _| acc.saturating_mul(base as u128))
}

/// All sequences of length `n` over `[0, base)`, first symbol most significant.
fn all_sequences(base: usize, n: usize) -> Vec<Vec<usize>> {
    let count = pow(base, n) as usize;
    (0..count)
        .map(|mut idx| {
            let mut s = vec![0; n];
            for i in (0..n).rev() {
                s[i] = idx % base;
                idx /= base;
            }
            s
        })
        .collect()
}

fn clamp(v: f64, what: &str) -> Result<f64> {
    if v >= 0.0 {
        Ok(v)
    } else if v >= -CLAMP_TOL {
        Ok(0.0)
    } else {
        Err(Error::Internal(format!("{what} came out negative: {v:e}")))
    }
}

/// `I(A;B)` for a joint table laid out `[a][b]`.
fn table_mi(joint: &[f64], na: usize, nb: usize) -> Result<f64> {
    let mut pa = vec![0.0; na];
    let mut pb = vec![0.0; nb];
    for a in 0..na {
        for b in 0..nb {
            let p = joint[a * nb + b];
            pa[a] += p;
            pb[b] += p;
        }
    }
    clamp(entropy_of(&pa) + entropy_of(&pb) - entropy_of(joint), "mutual information")
}

/// Shared enumeration tables for one scheme.
struct Tables<'a> {
    scheme: &'a Scheme,
    n: usize,
    states: Vec<Vec<usize>>,
    p_state: Vec<f64>,
    key: Vec<u64>,
    p_key: Vec<f64>,
    nk: usize,
    messages: u64,
}

impl<'a> Tables<'a> {
    fn new(scheme: &'a Scheme, budget: &EnumerationBudget) -> Result<Self> {
        let ch = scheme.channel();
        let n = scheme.config().n;
        budget.check("state sequences", pow(ch.ns(), n))?;
        let states = all_sequences(ch.ns(), n);
        let p_state: Vec<f64> = states
            .iter()
            .map(|s| s.iter().map(|&si| ch.p_s()[si]).product())
            .collect();
        let key: Vec<u64> = states.iter().map(|s| scheme.key_of(s)).collect();
        let nk = scheme.layout().n_key as usize;
        let mut p_key = vec![0.0; nk];
        for (i, &k) in key.iter().enumerate() {
            p_key[k as usize] += p_state[i];
        }
        Ok(Tables {
            scheme,
            n,
            states,
            p_state,
            key,
            p_key,
            nk,
            messages: scheme.messages(),
        })
    }

    /// Largest number of codewords an encoder may choose among in one block.
    fn max_choices(&self) -> u128 {
        let lay = self.scheme.layout();
        (lay.n_total / (lay.n_outer * lay.n_inner)).max(1) as u128
    }

    /// `p(z^n | u^n(l), s^n)` for every codeword, state and output sequence,
    /// laid out `[l][s][z]`.
    fn z_likelihoods(&self, budget: &EnumerationBudget) -> Result<(Vec<f64>, usize)> {
        let ch = self.scheme.channel();
        let zn = pow(ch.nz(), self.n);
        let nl = self.scheme.layout().n_total as u128;
        budget.check(
            "eavesdropper likelihood table",
            nl.saturating_mul(self.states.len() as u128).saturating_mul(zn),
        )?;
        let zs = all_sequences(ch.nz(), self.n);
        let zn = zn as usize;
        let mut out = Vec::with_capacity(nl as usize * self.states.len() * zn);
        for word in &self.scheme.codebook().sequences {
            for s in &self.states {
                for z in &zs {
                    out.push(
                        (0..self.n)
                            .map(|i| self.scheme.p_z_given_us(word[i], s[i], z[i]))
                            .product(),
                    );
                }
            }
        }
        Ok((out, zn))
    }
}

/// Exact per-block probability that a message-bearing block is decoded
/// wrongly. Keys from distinct blocks are i.i.d., so every message block has
/// the same error probability; this is also the block average.
pub fn exact_error_probability(scheme: &Scheme, budget: &EnumerationBudget) -> Result<f64> {
    let t = Tables::new(scheme, budget)?;
    let ch = scheme.channel();
    let ys = {
        let yn = pow(ch.ny(), t.n);
        budget.check(
            "error-probability enumeration",
            (t.nk as u128)
                .saturating_mul(t.states.len() as u128)
                .saturating_mul(yn)
                .saturating_mul(t.messages as u128 * t.max_choices() + scheme.layout().n_total as u128),
        )?;
        all_sequences(ch.ny(), t.n)
    };
    let m_weight = 1.0 / t.messages as f64;
    let mut pe = 0.0;
    for k in 0..t.nk as u64 {
        let pk = t.p_key[k as usize];
        if pk == 0.0 {
            continue;
        }
        let ranges: Vec<_> = (0..t.messages)
            .map(|m| scheme.codeword_range(Some(m), Some(k)))
            .collect::<Result<_>>()?;
        for (si, s) in t.states.iter().enumerate() {
            let ps = t.p_state[si];
            if ps == 0.0 {
                continue;
            }
            for y in &ys {
                let outcome = match scheme.locate(y, s, k) {
                    Located::Unique(l) => Some(scheme.recover(l, k)),
                    _ => None,
                };
                for (m, range) in ranges.iter().enumerate() {
                    if outcome == Some(m as u64) {
                        continue;
                    }
                    let w = 1.0 / (range.end - range.start) as f64;
                    let mut lik = 0.0;
                    for l in range.clone() {
                        let word = &scheme.codebook().sequences[l as usize];
                        lik += (0..t.n)
                            .map(|i| scheme.p_y_given_us(word[i], s[i], y[i]))
                            .product::<f64>();
                    }
                    pe += pk * m_weight * ps * w * lik;
                }
            }
        }
    }
    Ok(pe.clamp(0.0, 1.0))
}

/// Output-first enumeration over `(y^n, previous states, states, m, l, x^n)`
/// that calls the full decoder for every configuration.
fn error_probability_bruteforce(scheme: &Scheme, budget: &EnumerationBudget) -> Result<f64> {
    let ch = scheme.channel();
    let strat = scheme.strategy();
    let n = scheme.config().n;
    let sn = pow(ch.ns(), n);
    let per_block = pow(ch.ny(), n)
        .saturating_mul(sn)
        .saturating_mul(sn)
        .saturating_mul(scheme.messages() as u128)
        .saturating_mul(scheme.layout().n_total as u128)
        .saturating_mul(pow(ch.nx(), n));
    budget.check("brute-force error enumeration", per_block)?;
    let ys = all_sequences(ch.ny(), n);
    let ss = all_sequences(ch.ns(), n);
    let xs = all_sequences(ch.nx(), n);
    let p_seq = |s: &[usize]| -> f64 { s.iter().map(|&si| ch.p_s()[si]).product() };
    let mut pe = 0.0;
    for y in &ys {
        for s_prev in &ss {
            let k = scheme.key_of(s_prev);
            let p_prev = p_seq(s_prev);
            for s in &ss {
                let ps = p_prev * p_seq(s);
                if ps == 0.0 {
                    continue;
                }
                let out = scheme.decode_block(y, s, k)?;
                for m in 0..scheme.messages() {
                    if out == DecodeOutcome::Decoded(m) {
                        continue;
                    }
                    let range = scheme.codeword_range(Some(m), Some(k))?;
                    let w = ps / scheme.messages() as f64 / (range.end - range.start) as f64;
                    for l in range {
                        let word = &scheme.codebook().sequences[l as usize];
                        for x in &xs {
                            let mut p = w;
                            for i in 0..n {
                                let v = strat.v(word[i], s[i]);
                                p *= strat.p_x(v, s[i], x[i]) * ch.p_y_given_xs(s[i], x[i], y[i]);
                                if p == 0.0 {
                                    break;
                                }
                            }
                            pe += p;
                        }
                    }
                }
            }
        }
    }
    Ok(pe.clamp(0.0, 1.0))
}

/// Transition tables of the key chain as seen by the eavesdropper.
struct Chain {
    zn: usize,
    /// first block: `[k'][z]`
    g1: Vec<f64>,
    /// message blocks: `[m][k][k'][z]`
    gm: Vec<f64>,
}

fn chain_tables(t: &Tables, budget: &EnumerationBudget) -> Result<Chain> {
    let scheme = t.scheme;
    let (lik, zn) = t.z_likelihoods(budget)?;
    let ns_seq = t.states.len();
    let nl = scheme.layout().n_total as usize;
    let nk = t.nk;
    let m_count = t.messages as usize;
    budget.check(
        "key-chain tables",
        (m_count as u128 * nk as u128 * nk as u128 * zn as u128)
            .saturating_mul(t.max_choices() * ns_seq as u128),
    )?;
    let lik_at = |l: usize, s: usize| &lik[(l * ns_seq + s) * zn..(l * ns_seq + s + 1) * zn];
    let mut g1 = vec![0.0; nk * zn];
    for s in 0..ns_seq {
        let kp = t.key[s] as usize;
        let w = t.p_state[s] / nl as f64;
        for l in 0..nl {
            for (z, &p) in lik_at(l, s).iter().enumerate() {
                g1[kp * zn + z] += w * p;
            }
        }
    }
    let mut gm = vec![0.0; m_count * nk * nk * zn];
    for m in 0..m_count {
        for k in 0..nk {
            let range = scheme.codeword_range(Some(m as u64), Some(k as u64))?;
            let wl = 1.0 / (range.end - range.start) as f64;
            for s in 0..ns_seq {
                let kp = t.key[s] as usize;
                let w = t.p_state[s] * wl;
                let base = ((m * nk + k) * nk + kp) * zn;
                for l in range.clone() {
                    for (z, &p) in lik_at(l as usize, s).iter().enumerate() {
                        gm[base + z] += w * p;
                    }
                }
            }
        }
    }
    Ok(Chain { zn, g1, gm })
}

/// Extends `alpha[k][history]` by one block through `g[k][k'][z]`.
fn step(alpha: &[f64], hist: usize, g: &[f64], nk: usize, zn: usize) -> Vec<f64> {
    let new_hist = hist * zn;
    let mut out = vec![0.0; nk * new_hist];
    for k in 0..nk {
        for h in 0..hist {
            let a = alpha[k * hist + h];
            if a == 0.0 {
                continue;
            }
            for kp in 0..nk {
                let row = &g[(k * nk + kp) * zn..(k * nk + kp + 1) * zn];
                let dst = &mut out[kp * new_hist + h * zn..kp * new_hist + (h + 1) * zn];
                for z in 0..zn {
                    dst[z] += a * row[z];
                }
            }
        }
    }
    out
}

/// `I(M_2..M_b; Z^{bn} | C)` in bits, by forward recursion over the key chain.
fn leakage_recursive(t: &Tables, budget: &EnumerationBudget) -> Result<f64> {
    let cfg = t.scheme.config();
    let chain = chain_tables(t, budget)?;
    let (nk, zn) = (t.nk, chain.zn);
    let mb = cfg.b - 1;
    let m_count = t.messages as usize;
    let vectors = pow(m_count, mb);
    let z_all = pow(zn, cfg.b);
    budget.check(
        "leakage recursion",
        vectors
            .saturating_mul(z_all)
            .saturating_mul((nk * nk) as u128),
    )?;
    let (vectors, z_all) = (vectors as usize, z_all as usize);
    let mut p_z = vec![0.0; z_all];
    let mut h_cond = 0.0;
    let block = nk * nk * zn;
    for v in 0..vectors {
        let mut alpha = chain.g1.clone();
        let mut hist = zn;
        let mut code = v;
        for _ in 0..mb {
            let m = code % m_count;
            code /= m_count;
            alpha = step(&alpha, hist, &chain.gm[m * block..(m + 1) * block], nk, zn);
            hist *= zn;
        }
        let mut pz_m = vec![0.0; z_all];
        for k in 0..nk {
            for h in 0..z_all {
                pz_m[h] += alpha[k * z_all + h];
            }
        }
        h_cond += entropy_of(&pz_m);
        for h in 0..z_all {
            p_z[h] += pz_m[h] / vectors as f64;
        }
    }
    clamp(entropy_of(&p_z) - h_cond / vectors as f64, "leakage")
}

/// Output-first leakage: for each eavesdropper sequence and message vector,
/// sums directly over every block's states and codeword choice.
fn leakage_bruteforce(scheme: &Scheme, budget: &EnumerationBudget) -> Result<f64> {
    let ch = scheme.channel();
    let strat = scheme.strategy();
    let cfg = scheme.config();
    let (n, b) = (cfg.n, cfg.b);
    let m_count = scheme.messages() as usize;
    let required = pow(ch.nz(), b * n)
        .saturating_mul(pow(m_count, b - 1))
        .saturating_mul(pow(ch.ns(), b * n))
        .saturating_mul(pow(scheme.layout().n_total as usize, b));
    budget.check("brute-force leakage enumeration", required)?;
    let zs = all_sequences(ch.nz(), n);
    let ss = all_sequences(ch.ns(), n);
    let wz = |u: usize, s: usize, z: usize| -> f64 {
        let v = strat.v(u, s);
        (0..ch.nx())
            .map(|x| strat.p_x(v, s, x) * ch.p_z_given_xs(s, x, z))
            .sum()
    };
    let p_seq = |s: &[usize]| -> f64 { s.iter().map(|&si| ch.p_s()[si]).product() };

    // probability of the eavesdropper blocks `zb` given messages `ms`
    fn rec(
        j: usize,
        key: Option<u64>,
        zb: &[usize],
        ms: &[u64],
        ctx: &dyn Fn(usize, Option<u64>, usize, &[u64]) -> Result<Vec<(f64, u64)>>,
    ) -> Result<f64> {
        if j == zb.len() {
            return Ok(1.0);
        }
        let mut acc = 0.0;
        for (w, next_key) in ctx(j, key, zb[j], ms)? {
            if w != 0.0 {
                acc += w * rec(j + 1, Some(next_key), zb, ms, ctx)?;
            }
        }
        Ok(acc)
    }
    // weight of each (states) choice in block j, with its generated key
    let ctx = |j: usize, key: Option<u64>, z: usize, ms: &[u64]| -> Result<Vec<(f64, u64)>> {
        let m = if j == 0 { None } else { Some(ms[j - 1]) };
        let range = scheme.codeword_range(m, key)?;
        let wl = 1.0 / (range.end - range.start) as f64;
        let zseq = &zs[z];
        let mut out = Vec::with_capacity(ss.len());
        for s in &ss {
            let mut lik = 0.0;
            for l in range.clone() {
                let word = &scheme.codebook().sequences[l as usize];
                lik += (0..n).map(|i| wz(word[i], s[i], zseq[i])).product::<f64>();
            }
            out.push((p_seq(s) * wl * lik, scheme.key_of(s)));
        }
        Ok(out)
    };

    let z_blocks = pow(zs.len(), b) as usize;
    let vectors = pow(m_count, b - 1) as usize;
    let mut p_z = vec![0.0; z_blocks];
    let mut h_cond = 0.0;
    let mut per_m = vec![vec![0.0; z_blocks]; vectors];
    for zc in 0..z_blocks {
        let mut zb = vec![0; b];
        let mut c = zc;
        for j in (0..b).rev() {
            zb[j] = c % zs.len();
            c /= zs.len();
        }
        for (v, row) in per_m.iter_mut().enumerate() {
            let mut ms = vec![0u64; b - 1];
            let mut c = v;
            for m in ms.iter_mut() {
                *m = (c % m_count) as u64;
                c /= m_count;
            }
            row[zc] = rec(0, None, &zb, &ms, &ctx)?;
        }
    }
    for row in &per_m {
        h_cond += entropy_of(row);
        for (acc, &p) in p_z.iter_mut().zip(row) {
            *acc += p / vectors as f64;
        }
    }
    clamp(entropy_of(&p_z) - h_cond / vectors as f64, "leakage")
}

/// Exact session leakage in bits per message-bearing symbol.
pub fn exact_leakage(scheme: &Scheme, budget: &EnumerationBudget) -> Result<Bits> {
    let t = Tables::new(scheme, budget)?;
    let cfg = scheme.config();
    Ok(Bits(leakage_recursive(&t, budget)? / ((cfg.b - 1) * cfg.n) as f64))
}

/// `(H(K_j|C), I(K_j; Z(j)|C), I(K_j; Z^j|C))` for the key generated in block `j`.
pub fn key_statistics(scheme: &Scheme, budget: &EnumerationBudget, j: usize) -> Result<KeyStatistics> {
    let cfg = scheme.config();
    if j == 0 || j >= cfg.b {
        return Err(Error::domain(format!("key index j = {j} outside [1, {}]", cfg.b - 1)));
    }
    let t = Tables::new(scheme, budget)?;
    let chain = chain_tables(&t, budget)?;
    let (nk, zn) = (t.nk, chain.zn);
    budget.check("key statistics", pow(zn, j).saturating_mul((nk * nk) as u128))?;
    let m_count = t.messages as usize;
    let block = nk * nk * zn;
    let mut g_avg = vec![0.0; block];
    for m in 0..m_count {
        for (a, &g) in g_avg.iter_mut().zip(&chain.gm[m * block..(m + 1) * block]) {
            *a += g / m_count as f64;
        }
    }
    // the eavesdropper's view of block j alone
    let current: Vec<f64> = if j == 1 {
        chain.g1.clone()
    } else {
        let mut c = vec![0.0; nk * zn];
        for k in 0..nk {
            for kp in 0..nk {
                for z in 0..zn {
                    c[kp * zn + z] += t.p_key[k] * g_avg[(k * nk + kp) * zn + z];
                }
            }
        }
        c
    };
    let mut alpha = chain.g1.clone();
    let mut hist = zn;
    for _ in 1..j {
        alpha = step(&alpha, hist, &g_avg, nk, zn);
        hist *= zn;
    }
    Ok(KeyStatistics {
        j,
        key_entropy: Bits(entropy_of(&t.p_key)),
        key_leakage_block: Bits(table_mi(&current, nk, zn)?),
        key_leakage: Bits(table_mi(&alpha, nk, hist)?),
    })
}

/// Recomputes the error probability and the leakage with the brute-force
/// enumerators; disagreement beyond `1e-10` is an internal fault.
pub fn second_enumerator_crosscheck(scheme: &Scheme, budget: &EnumerationBudget) -> Result<CrossCheck> {
    let t = Tables::new(scheme, budget)?;
    let pe_factored = exact_error_probability(scheme, budget)?;
    let pe_bruteforce = error_probability_bruteforce(scheme, budget)?;
    let lr = leakage_recursive(&t, budget)?;
    let lb = leakage_bruteforce(scheme, budget)?;
    let agree = (pe_factored - pe_bruteforce).abs() <= CROSSCHECK_TOL && (lr - lb).abs() <= CROSSCHECK_TOL;
    if !agree {
        return Err(Error::Internal(format!(
            "enumerators disagree: P_e {pe_factored:.15} vs {pe_bruteforce:.15}, leakage {lr:.15} vs {lb:.15}"
        )));
    }
    Ok(CrossCheck {
        pe_factored,
        pe_bruteforce,
        leakage_recursive: Bits(lr),
        leakage_bruteforce: Bits(lb),
        agree,
    })
}

/// All oracle quantities for one scheme.
pub fn oracle_report(scheme: &Scheme, budget: &EnumerationBudget, crosscheck: bool) -> Result<OracleReport> {
    let cfg = scheme.config();
    let exact_pe = exact_error_probability(scheme, budget)?;
    let t = Tables::new(scheme, budget)?;
    let leak = leakage_recursive(&t, budget)?;
    let key_statistics = (1..cfg.b)
        .map(|j| key_statistics(scheme, budget, j))
        .collect::<Result<_>>()?;
    Ok(OracleReport {
        exact_pe,
        leakage_bits: Bits(leak),
        leakage_bits_per_symbol: Bits(leak / ((cfg.b - 1) * cfg.n) as f64),
        message_entropy: Bits((cfg.b - 1) as f64 * (scheme.messages() as f64).log2()),
        key_statistics,
        crosscheck: if crosscheck {
            Some(second_enumerator_crosscheck(scheme, budget)?)
        } else {
            None
        },
    })
}
