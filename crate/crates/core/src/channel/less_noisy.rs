//! Orderings between the two receivers, and the capacity formulas that
//! assume them.

use serde::Serialize;

use super::ChannelWithState;
use crate::error::{Error, Result};
use crate::info::{CondPmf, NORMALIZATION_TOL};
use crate::optimizer::{compositions, special_case_unchecked, OptimResult, SpecialCase};

/// Cap on midpoint pairs examined by [`check_less_noisy`].
pub const MIDPOINT_PAIR_CAP: u64 = 100_000_000;

/// Tolerance for midpoint concavity violations and degradedness.
pub const CONCAVITY_TOL: f64 = 1e-12;
pub const DEGRADED_TOL: f64 = 1e-9;

/// A state-free broadcast channel `p(y,z|x)`, laid out `[x][y][z]`.
#[derive(Clone, Debug, PartialEq)]
pub struct BroadcastChannel {
    nx: usize,
    ny: usize,
    nz: usize,
    p: Vec<f64>,
}

impl BroadcastChannel {
    pub fn new(nx: usize, ny: usize, nz: usize, p: Vec<f64>) -> Result<Self> {
        CondPmf::new(nx, ny * nz, p.clone())?;
        Ok(BroadcastChannel { nx, ny, nz, p })
    }

    pub fn from_fn(
        nx: usize,
        ny: usize,
        nz: usize,
        f: impl Fn(usize, usize, usize) -> f64,
    ) -> Result<Self> {
        let mut p = Vec::with_capacity(nx * ny * nz);
        for x in 0..nx {
            for y in 0..ny {
                for z in 0..nz {
                    p.push(f(x, y, z));
                }
            }
        }
        BroadcastChannel::new(nx, ny, nz, p)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn ny(&self) -> usize {
        self.ny
    }
    pub fn nz(&self) -> usize {
        self.nz
    }

    pub fn p(&self, x: usize, y: usize, z: usize) -> f64 {
        self.p[(x * self.ny + y) * self.nz + z]
    }

    /// The same channel with the roles of `Y` and `Z` exchanged.
    pub fn swapped(&self) -> BroadcastChannel {
        BroadcastChannel::from_fn(self.nx, self.nz, self.ny, |x, z, y| self.p(x, y, z))
            .expect("permutation preserves normalization")
    }

    fn wy(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.nx * self.ny];
        for x in 0..self.nx {
            for y in 0..self.ny {
                w[x * self.ny + y] = (0..self.nz).map(|z| self.p(x, y, z)).sum();
            }
        }
        w
    }

    fn wz(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.nx * self.nz];
        for x in 0..self.nx {
            for z in 0..self.nz {
                w[x * self.nz + z] = (0..self.ny).map(|y| self.p(x, y, z)).sum();
            }
        }
        w
    }
}

fn xlx(p: f64) -> f64 {
    if p > 0.0 {
        p * p.log2()
    } else {
        0.0
    }
}

fn mutual_info(px: &[f64], w: &[f64], nout: usize) -> f64 {
    let mut pout = vec![0.0; nout];
    let mut cond = 0.0;
    for (x, &p) in px.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let row = &w[x * nout..(x + 1) * nout];
        for (o, &t) in row.iter().enumerate() {
            pout[o] += p * t;
        }
        cond += p * row.iter().map(|&t| xlx(t)).sum::<f64>();
    }
    cond - pout.iter().map(|&p| xlx(p)).sum::<f64>()
}

/// A midpoint at which `f = I(X;Y) - I(X;Z)` dips below the chord.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConcavityViolation {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub midpoint: Vec<f64>,
    pub f_p: f64,
    pub f_q: f64,
    pub f_mid: f64,
}

/// Outcome of the midpoint scan. `holds = true` is evidence on a grid only,
/// not a proof.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LessNoisyCertificate {
    pub holds: bool,
    pub resolution: u32,
    pub pairs_checked: u64,
    pub violation: Option<ConcavityViolation>,
}

/// Scans every pair of points on the `1/resolution` input grid and checks
/// `f((p+q)/2) >= (f(p)+f(q))/2` for `f(p) = I(X;Y) - I(X;Z)`. Concavity of
/// `f` is equivalent to `Y` being less noisy than `Z`. The first violating
/// pair in lexicographic order is returned.
pub fn check_less_noisy(bc: &BroadcastChannel, resolution: u32) -> Result<LessNoisyCertificate> {
    if resolution == 0 {
        return Err(Error::domain("resolution must be positive"));
    }
    let nx = bc.nx;
    let coarse = compositions(nx, resolution, MIDPOINT_PAIR_CAP)?;
    let pairs = (coarse.len() as u128 * (coarse.len() as u128 + 1)) / 2;
    if pairs > MIDPOINT_PAIR_CAP as u128 {
        return Err(Error::resource("less-noisy midpoint scan", pairs, MIDPOINT_PAIR_CAP as u128));
    }
    let (wy, wz) = (bc.wy(), bc.wz());
    let fine_r = 2.0 * resolution as f64;
    let f = |c: &[u32], denom: f64| -> (Vec<f64>, f64) {
        let p: Vec<f64> = c.iter().map(|&k| k as f64 / denom).collect();
        let v = mutual_info(&p, &wy, bc.ny) - mutual_info(&p, &wz, bc.nz);
        (p, v)
    };
    let values: Vec<(Vec<f64>, f64)> = coarse.iter().map(|c| f(c, resolution as f64)).collect();
    let mut checked = 0u64;
    let mut mid = vec![0u32; nx];
    for i in 0..coarse.len() {
        for j in i + 1..coarse.len() {
            for k in 0..nx {
                mid[k] = coarse[i][k] + coarse[j][k];
            }
            checked += 1;
            let (pm, fm) = f(&mid, fine_r);
            let chord = 0.5 * (values[i].1 + values[j].1);
            if fm < chord - CONCAVITY_TOL {
                return Ok(LessNoisyCertificate {
                    holds: false,
                    resolution,
                    pairs_checked: checked,
                    violation: Some(ConcavityViolation {
                        p: values[i].0.clone(),
                        q: values[j].0.clone(),
                        midpoint: pm,
                        f_p: values[i].1,
                        f_q: values[j].1,
                        f_mid: fm,
                    }),
                });
            }
        }
    }
    Ok(LessNoisyCertificate {
        holds: true,
        resolution,
        pairs_checked: checked,
        violation: None,
    })
}

/// Whether `p(y,z|x) = p(y|x) p(z|y)` for a single `p(z|y)`, i.e. `X -> Y -> Z`.
pub fn is_physically_degraded(bc: &BroadcastChannel) -> bool {
    let wy = bc.wy();
    for y in 0..bc.ny {
        let mut reference: Option<Vec<f64>> = None;
        for x in 0..bc.nx {
            let py = wy[x * bc.ny + y];
            if py <= NORMALIZATION_TOL {
                continue;
            }
            let row: Vec<f64> = (0..bc.nz).map(|z| bc.p(x, y, z) / py).collect();
            match &reference {
                None => reference = Some(row),
                Some(r) => {
                    if r.iter().zip(&row).any(|(a, b)| (a - b).abs() > DEGRADED_TOL) {
                        return false;
                    }
                }
            }
        }
    }
    true
}

/// `max over p(x|s)` of `min{I(X;Y|S) - I(X;Z|S) + H(S|Z), I(X;Y|S)}`.
///
/// The caller is responsible for `Y` being less noisy than `Z`; under that
/// ordering the value is the secrecy capacity.
pub fn less_noisy_capacity(ch: &ChannelWithState, resolution: u32) -> Result<OptimResult> {
    special_case_unchecked(ch, SpecialCase::Thm3, resolution)
}

/// `max over p(x)` of `min{H(S), I(X;Y)}` for a state-free channel law.
///
/// The caller is responsible for `Z` being less noisy than `Y`.
pub fn z_less_noisy_capacity(ch: &ChannelWithState, resolution: u32) -> Result<OptimResult> {
    if !ch.is_state_independent() {
        return Err(Error::contract("channel law depends on the state"));
    }
    special_case_unchecked(ch, SpecialCase::ZLessNoisy, resolution)
}
