use serde::{Deserialize, Serialize};

use crate::channel::ShannonStrategy;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Case {
    #[serde(alias = "Case1", alias = "1")]
    Case1,
    #[serde(alias = "Case2", alias = "2")]
    Case2,
    #[serde(alias = "Case3", alias = "3")]
    Case3,
}

/// Base-two logarithms of the code sizes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Log2Sizes {
    pub total: u32,
    pub bins: u32,
    pub subbins: u32,
    pub key: u32,
    pub keyd: u32,
}

/// A coding-scheme configuration as read from a scheme document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchemeConfig {
    pub case: Case,
    pub n: usize,
    pub b: usize,
    pub log2_sizes: Log2Sizes,
    pub epsilon: f64,
    pub seed: u64,
    #[serde(default = "default_trials")]
    pub trials: u64,
    /// Defaults to `U = V = X` uniform with identity maps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strategy: Option<ShannonStrategy>,
}

fn default_trials() -> u64 {
    1000
}

/// Largest exponent accepted for any code size.
pub const MAX_LOG2_SIZE: u32 = 30;

/// How codeword indices are grouped.
///
/// Index `l` lies in group `l / sub_size`; group `g` splits as
/// `outer = g / inner`, `inner = g % inner`. The outer index is the public
/// bin (Case 1), the decoder-side key part (Case 2) or trivial (Case 3); the
/// inner index carries the padded message part.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Layout {
    pub n_total: u64,
    pub n_outer: u64,
    pub n_inner: u64,
    pub sub_size: u64,
    pub n_key: u64,
    pub n_keyd: u64,
    pub messages: u64,
}

impl Layout {
    pub fn group_of(&self, l: u64) -> (u64, u64) {
        let g = l / self.sub_size;
        (g / self.n_inner, g % self.n_inner)
    }

    pub fn group_range(&self, outer: u64, inner: u64) -> std::ops::Range<u64> {
        let start = (outer * self.n_inner + inner) * self.sub_size;
        start..start + self.sub_size
    }

    pub fn outer_range(&self, outer: u64) -> std::ops::Range<u64> {
        let width = self.n_inner * self.sub_size;
        outer * width..(outer + 1) * width
    }
}

/// One-time pad on `[0, modulus)`; the key is reduced modulo the modulus.
pub fn pad(m: u64, k: u64, modulus: u64) -> u64 {
    (m + k % modulus) % modulus
}

pub fn unpad(c: u64, k: u64, modulus: u64) -> u64 {
    (c + modulus - k % modulus) % modulus
}

impl SchemeConfig {
    /// Checks every structural constraint and returns the index layout.
    pub fn layout(&self) -> Result<Layout> {
        let bad = |msg: String| Err(Error::domain(format!("scheme validation: {msg}")));
        if self.n == 0 {
            return bad("block length n must be at least 1".into());
        }
        if self.b < 2 {
            return bad(format!("b = {} but at least 2 blocks are needed", self.b));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return bad(format!("epsilon = {} must be positive", self.epsilon));
        }
        let l = self.log2_sizes;
        for (name, v) in [
            ("total", l.total),
            ("bins", l.bins),
            ("subbins", l.subbins),
            ("key", l.key),
            ("keyd", l.keyd),
        ] {
            if v > MAX_LOG2_SIZE {
                return bad(format!("log2 {name} = {v} exceeds {MAX_LOG2_SIZE}"));
            }
        }
        let p = |e: u32| 1u64 << e;
        match self.case {
            Case::Case1 => {
                if l.bins + l.subbins > l.total {
                    return bad(format!(
                        "bins x subbins = 2^{} must divide total = 2^{}",
                        l.bins + l.subbins,
                        l.total
                    ));
                }
                if l.subbins > l.key {
                    return bad(format!(
                        "R1 <= RK violated: subbins 2^{} exceed key bins 2^{}",
                        l.subbins, l.key
                    ));
                }
                Ok(Layout {
                    n_total: p(l.total),
                    n_outer: p(l.bins),
                    n_inner: p(l.subbins),
                    sub_size: p(l.total - l.bins - l.subbins),
                    n_key: p(l.key),
                    n_keyd: 1,
                    messages: p(l.bins + l.subbins),
                })
            }
            Case::Case2 => {
                if l.bins != l.keyd {
                    return bad(format!(
                        "bins = 2^{} must equal the decoder key part keyd = 2^{}",
                        l.bins, l.keyd
                    ));
                }
                if l.keyd + l.subbins > l.total {
                    return bad(format!(
                        "keyd x messages = 2^{} exceeds total = 2^{}",
                        l.keyd + l.subbins,
                        l.total
                    ));
                }
                if l.keyd + l.subbins > l.key {
                    return bad(format!(
                        "messages 2^{} exceed key bins / keyd = 2^{}",
                        l.subbins,
                        l.key as i64 - l.keyd as i64
                    ));
                }
                Ok(Layout {
                    n_total: p(l.total),
                    n_outer: p(l.keyd),
                    n_inner: p(l.subbins),
                    sub_size: p(l.total - l.keyd - l.subbins),
                    n_key: p(l.key),
                    n_keyd: p(l.keyd),
                    messages: p(l.subbins),
                })
            }
            Case::Case3 => {
                if l.total != l.key {
                    return bad(format!(
                        "message count 2^{} must equal key bins 2^{}",
                        l.total, l.key
                    ));
                }
                Ok(Layout {
                    n_total: p(l.total),
                    n_outer: 1,
                    n_inner: p(l.total),
                    sub_size: 1,
                    n_key: p(l.key),
                    n_keyd: 1,
                    messages: p(l.total),
                })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(case: Case, sizes: Log2Sizes) -> SchemeConfig {
        SchemeConfig {
            case,
            n: 4,
            b: 2,
            log2_sizes: sizes,
            epsilon: 0.5,
            seed: 1,
            trials: 10,
            strategy: None,
        }
    }

    #[test]
    fn pad_round_trip_small() {
        for modulus in [1u64, 2, 4, 8] {
            for m in 0..modulus {
                for k in 0..4 * modulus {
                    assert_eq!(unpad(pad(m, k, modulus), k, modulus), m);
                }
            }
        }
        assert_eq!(pad(1, 1, 2), 0);
    }

    #[test]
    fn case1_constraints() {
        let ok = Log2Sizes { total: 2, bins: 1, subbins: 1, key: 1, keyd: 0 };
        let lay = cfg(Case::Case1, ok).layout().unwrap();
        assert_eq!((lay.n_outer, lay.n_inner, lay.sub_size, lay.messages), (2, 2, 1, 4));
        let bad = Log2Sizes { key: 0, ..ok };
        let err = cfg(Case::Case1, bad).layout().unwrap_err().to_string();
        assert!(err.contains("R1 <= RK"), "{err}");
        let bad = Log2Sizes { total: 1, ..ok };
        assert!(cfg(Case::Case1, bad).layout().is_err());
    }

    #[test]
    fn case2_and_case3_constraints() {
        let ok = Log2Sizes { total: 3, bins: 1, subbins: 1, key: 2, keyd: 1 };
        let lay = cfg(Case::Case2, ok).layout().unwrap();
        assert_eq!((lay.n_outer, lay.n_inner, lay.sub_size, lay.messages), (2, 2, 2, 2));
        assert!(cfg(Case::Case2, Log2Sizes { key: 1, ..ok }).layout().is_err());
        assert!(cfg(Case::Case2, Log2Sizes { bins: 0, ..ok }).layout().is_err());

        let ok = Log2Sizes { total: 1, key: 1, ..Default::default() };
        assert_eq!(cfg(Case::Case3, ok).layout().unwrap().messages, 2);
        assert!(cfg(Case::Case3, Log2Sizes { key: 2, ..ok }).layout().is_err());
    }

    #[test]
    fn layout_partitions_exactly() {
        let sizes = Log2Sizes { total: 5, bins: 2, subbins: 1, key: 2, keyd: 0 };
        let lay = cfg(Case::Case1, sizes).layout().unwrap();
        let mut seen = vec![0; lay.n_total as usize];
        for o in 0..lay.n_outer {
            for i in 0..lay.n_inner {
                for l in lay.group_range(o, i) {
                    seen[l as usize] += 1;
                    assert_eq!(lay.group_of(l), (o, i));
                }
            }
        }
        assert!(seen.iter().all(|&c| c == 1));
    }

    #[test]
    fn short_scheme_is_rejected() {
        let mut c = cfg(Case::Case3, Log2Sizes::default());
        c.b = 1;
        assert!(c.layout().is_err());
    }
}
