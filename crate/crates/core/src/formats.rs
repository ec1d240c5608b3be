//! JSON documents for channels, policies and scheme configurations.
//!
//! Probability vectors in files must sum to one within [`LOAD_TOL`]; they are
//! then renormalized exactly so that the stricter in-memory checks pass.

use serde::{Deserialize, Serialize};

use crate::channel::{CausalPolicy, ChannelWithState, PolicyDoc};
use crate::error::{Error, Result};
use crate::simulator::SchemeConfig;

pub const LOAD_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlphabetSizes {
    pub x: usize,
    pub s: usize,
    pub y: usize,
    pub z: usize,
}

/// Channel file: `p_yz_given_xs[s][x]` is the row-major `(y, z)` table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelDoc {
    pub alphabets: AlphabetSizes,
    pub p_s: Vec<f64>,
    pub p_yz_given_xs: Vec<Vec<Vec<f64>>>,
}

fn normalize(v: &mut [f64], what: &str) -> Result<()> {
    if let Some(p) = v.iter().find(|p| !p.is_finite() || **p < 0.0) {
        return Err(Error::domain(format!("{what}: entry {p} is not a probability")));
    }
    let total: f64 = v.iter().sum();
    if (total - 1.0).abs() > LOAD_TOL {
        return Err(Error::domain(format!(
            "{what}: sums to {total}, not 1 within {LOAD_TOL:e}"
        )));
    }
    v.iter_mut().for_each(|p| *p /= total);
    Ok(())
}

impl ChannelDoc {
    pub fn from_channel(ch: &ChannelWithState) -> Self {
        ChannelDoc {
            alphabets: AlphabetSizes {
                x: ch.nx(),
                s: ch.ns(),
                y: ch.ny(),
                z: ch.nz(),
            },
            p_s: ch.p_s().to_vec(),
            p_yz_given_xs: (0..ch.ns())
                .map(|s| (0..ch.nx()).map(|x| ch.yz_row(s, x).to_vec()).collect())
                .collect(),
        }
    }

    pub fn into_channel(mut self) -> Result<ChannelWithState> {
        let a = self.alphabets;
        if self.p_s.len() != a.s {
            return Err(Error::domain(format!(
                "p_s has {} entries but alphabets.s = {}",
                self.p_s.len(),
                a.s
            )));
        }
        normalize(&mut self.p_s, "p_s")?;
        if self.p_yz_given_xs.len() != a.s {
            return Err(Error::domain(format!(
                "p_yz_given_xs has {} state rows but alphabets.s = {}",
                self.p_yz_given_xs.len(),
                a.s
            )));
        }
        let mut flat = Vec::with_capacity(a.s * a.x * a.y * a.z);
        for (s, per_x) in self.p_yz_given_xs.iter_mut().enumerate() {
            if per_x.len() != a.x {
                return Err(Error::domain(format!(
                    "p_yz_given_xs[{s}] has {} input rows but alphabets.x = {}",
                    per_x.len(),
                    a.x
                )));
            }
            for (x, row) in per_x.iter_mut().enumerate() {
                if row.len() != a.y * a.z {
                    return Err(Error::domain(format!(
                        "p_yz_given_xs[{s}][{x}] has {} entries, expected |Y||Z| = {}",
                        row.len(),
                        a.y * a.z
                    )));
                }
                normalize(row, &format!("p_yz_given_xs[{s}][{x}]"))?;
                flat.extend_from_slice(row);
            }
        }
        ChannelWithState::new(a.x, a.s, a.y, a.z, self.p_s, flat)
    }
}

fn parse_json<T: for<'de> Deserialize<'de>>(text: &str, what: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| {
        Error::Parse(format!(
            "{what} at line {}, column {}: {e}",
            e.line(),
            e.column()
        ))
    })
}

pub fn parse_channel(text: &str) -> Result<ChannelWithState> {
    parse_json::<ChannelDoc>(text, "channel document")?.into_channel()
}

pub fn parse_policy(text: &str) -> Result<CausalPolicy> {
    let mut doc: PolicyDoc = parse_json(text, "policy document")?;
    for (s, row) in doc.p_v_given_s.iter_mut().enumerate() {
        normalize(row, &format!("p_v_given_s[{s}]"))?;
    }
    for (v, per_s) in doc.p_x_given_vs.iter_mut().enumerate() {
        for (s, row) in per_s.iter_mut().enumerate() {
            normalize(row, &format!("p_x_given_vs[{v}][{s}]"))?;
        }
    }
    CausalPolicy::try_from(doc)
}

pub fn parse_scheme(text: &str) -> Result<SchemeConfig> {
    let mut cfg: SchemeConfig = parse_json(text, "scheme document")?;
    if let Some(st) = cfg.strategy.as_mut() {
        normalize(&mut st.p_u, "strategy.p_u")?;
        for (v, per_s) in st.p_x_given_vs.iter_mut().enumerate() {
            for (s, row) in per_s.iter_mut().enumerate() {
                normalize(row, &format!("strategy.p_x_given_vs[{v}][{s}]"))?;
            }
        }
    }
    cfg.layout()?;
    Ok(cfg)
}
