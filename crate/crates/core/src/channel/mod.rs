//! Channels with state, auxiliary-variable policies, and evaluators for the
//! secrecy bound expressions.
//!
//! All evaluators build the induced joint distribution as a [`JointPmf`] and
//! read the information terms off it, so they share one code path with the
//! rest of the workbench. Negative bound values are returned unchanged; only
//! reporting layers floor them at zero.

mod less_noisy;

pub use less_noisy::{
    check_less_noisy, is_physically_degraded, less_noisy_capacity, z_less_noisy_capacity,
    BroadcastChannel, ConcavityViolation, LessNoisyCertificate,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::info::{binary_entropy, check_pmf, Alphabet, Bits, CondPmf, JointPmf};

/// Tolerance used when comparing conditional slices for structural properties.
pub const STRUCTURE_TOL: f64 = 1e-12;

/// A discrete memoryless wiretap channel with i.i.d. state.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelWithState {
    x: Alphabet,
    s: Alphabet,
    y: Alphabet,
    z: Alphabet,
    p_s: Vec<f64>,
    /// `p(y,z|x,s)` laid out as `[s][x][y][z]`.
    p_yz: Vec<f64>,
}

impl ChannelWithState {
    pub fn new(
        nx: usize,
        ns: usize,
        ny: usize,
        nz: usize,
        p_s: Vec<f64>,
        p_yz_given_xs: Vec<f64>,
    ) -> Result<Self> {
        let x = Alphabet::new("X", nx)?;
        let s = Alphabet::new("S", ns)?;
        let y = Alphabet::new("Y", ny)?;
        let z = Alphabet::new("Z", nz)?;
        if p_s.len() != ns {
            return Err(Error::domain(format!("p_s has {} entries, |S| = {ns}", p_s.len())));
        }
        check_pmf(&p_s, "p_s")?;
        // Validate each (s, x) slice as a row of a conditional table.
        CondPmf::new(ns * nx, ny * nz, p_yz_given_xs.clone())
            .map_err(|e| Error::domain(format!("p(y,z|x,s): {e}")))?;
        Ok(ChannelWithState {
            x,
            s,
            y,
            z,
            p_s,
            p_yz: p_yz_given_xs,
        })
    }

    /// Builds the table from a closure `f(s, x, y, z) = p(y,z|x,s)`.
    pub fn from_fn(
        nx: usize,
        ny: usize,
        nz: usize,
        p_s: Vec<f64>,
        f: impl Fn(usize, usize, usize, usize) -> f64,
    ) -> Result<Self> {
        let ns = p_s.len();
        let mut table = Vec::with_capacity(ns * nx * ny * nz);
        for s in 0..ns {
            for x in 0..nx {
                for y in 0..ny {
                    for z in 0..nz {
                        table.push(f(s, x, y, z));
                    }
                }
            }
        }
        ChannelWithState::new(nx, ns, ny, nz, p_s, table)
    }

    /// A channel whose law `p(y,z|x)` does not depend on the state.
    pub fn state_independent(p_s: Vec<f64>, slice: &BroadcastChannel) -> Result<Self> {
        ChannelWithState::from_fn(slice.nx(), slice.ny(), slice.nz(), p_s, |_, x, y, z| {
            slice.p(x, y, z)
        })
    }

    pub fn x(&self) -> &Alphabet {
        &self.x
    }
    pub fn s(&self) -> &Alphabet {
        &self.s
    }
    pub fn y(&self) -> &Alphabet {
        &self.y
    }
    pub fn z(&self) -> &Alphabet {
        &self.z
    }

    pub fn nx(&self) -> usize {
        self.x.size()
    }
    pub fn ns(&self) -> usize {
        self.s.size()
    }
    pub fn ny(&self) -> usize {
        self.y.size()
    }
    pub fn nz(&self) -> usize {
        self.z.size()
    }

    pub fn p_s(&self) -> &[f64] {
        &self.p_s
    }

    pub fn p_yz(&self, s: usize, x: usize, y: usize, z: usize) -> f64 {
        let (nx, ny, nz) = (self.nx(), self.ny(), self.nz());
        self.p_yz[((s * nx + x) * ny + y) * nz + z]
    }

    /// The `p(y,z|x)` table at state `s`, row index `x`, column `y * |Z| + z`.
    pub fn yz_row(&self, s: usize, x: usize) -> &[f64] {
        let w = self.ny() * self.nz();
        let start = (s * self.nx() + x) * w;
        &self.p_yz[start..start + w]
    }

    pub fn p_y_given_xs(&self, s: usize, x: usize, y: usize) -> f64 {
        (0..self.nz()).map(|z| self.p_yz(s, x, y, z)).sum()
    }

    pub fn p_z_given_xs(&self, s: usize, x: usize, z: usize) -> f64 {
        (0..self.ny()).map(|y| self.p_yz(s, x, y, z)).sum()
    }

    /// The broadcast channel seen at a fixed state.
    pub fn slice(&self, s: usize) -> BroadcastChannel {
        let w = self.nx() * self.ny() * self.nz();
        BroadcastChannel::new(
            self.nx(),
            self.ny(),
            self.nz(),
            self.p_yz[s * w..(s + 1) * w].to_vec(),
        )
        .expect("validated at construction")
    }

    pub fn is_state_independent(&self) -> bool {
        let w = self.nx() * self.ny() * self.nz();
        let first = &self.p_yz[..w];
        (1..self.ns()).all(|s| {
            self.p_yz[s * w..(s + 1) * w]
                .iter()
                .zip(first)
                .all(|(a, b)| (a - b).abs() <= STRUCTURE_TOL)
        })
    }

    /// Entropy of the state distribution.
    pub fn state_entropy(&self) -> Bits {
        Bits(crate::info::entropy_of(&self.p_s))
    }
}

/// Auxiliary description `p(v|s) p(x|v,s)` of a causal encoder.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "PolicyDoc", try_from = "PolicyDoc")]
pub struct CausalPolicy {
    card_v: usize,
    /// rows `s`, columns `v`
    p_v_given_s: CondPmf,
    /// rows `v * |S| + s`, columns `x`
    p_x_given_vs: CondPmf,
    independent_v: bool,
}

impl CausalPolicy {
    pub fn new(
        p_v_given_s: CondPmf,
        p_x_given_vs: CondPmf,
        independent_v: bool,
    ) -> Result<Self> {
        let ns = p_v_given_s.rows();
        let card_v = p_v_given_s.cols();
        if p_x_given_vs.rows() != card_v * ns {
            return Err(Error::domain(format!(
                "p(x|v,s) has {} rows, expected |V||S| = {}",
                p_x_given_vs.rows(),
                card_v * ns
            )));
        }
        if independent_v {
            let first = p_v_given_s.row(0);
            for s in 1..ns {
                if p_v_given_s
                    .row(s)
                    .iter()
                    .zip(first)
                    .any(|(a, b)| (a - b).abs() > STRUCTURE_TOL)
                {
                    return Err(Error::domain(
                        "independent_v is set but p(v|s) varies with s",
                    ));
                }
            }
        }
        Ok(CausalPolicy {
            card_v,
            p_v_given_s,
            p_x_given_vs,
            // with a single state, V is trivially independent of it
            independent_v: independent_v || ns == 1,
        })
    }

    /// A policy with `p(v)` free of the state.
    pub fn independent(p_v: &[f64], ns: usize, p_x_given_vs: CondPmf) -> Result<Self> {
        CausalPolicy::new(CondPmf::repeated(ns, p_v)?, p_x_given_vs, true)
    }

    /// `V = X` with `p(x)` independent of the state.
    pub fn input_only(p_x: &[f64], ns: usize) -> Result<Self> {
        let nx = p_x.len();
        CausalPolicy::independent(p_x, ns, CondPmf::deterministic(nx * ns, nx, |r| r / ns)?)
    }

    pub fn card_v(&self) -> usize {
        self.card_v
    }
    pub fn ns(&self) -> usize {
        self.p_v_given_s.rows()
    }
    pub fn nx(&self) -> usize {
        self.p_x_given_vs.cols()
    }
    pub fn independent_v(&self) -> bool {
        self.independent_v
    }
    pub fn p_v_given_s(&self) -> &CondPmf {
        &self.p_v_given_s
    }
    pub fn p_x_given_vs(&self) -> &CondPmf {
        &self.p_x_given_vs
    }

    pub fn p_v(&self, s: usize, v: usize) -> f64 {
        self.p_v_given_s.get(s, v)
    }

    pub fn p_x(&self, v: usize, s: usize, x: usize) -> f64 {
        self.p_x_given_vs.get(v * self.ns() + s, x)
    }

    fn check_against(&self, ch: &ChannelWithState) -> Result<()> {
        if self.ns() != ch.ns() || self.nx() != ch.nx() {
            return Err(Error::domain(format!(
                "policy expects |S|={}, |X|={} but channel has |S|={}, |X|={}",
                self.ns(),
                self.nx(),
                ch.ns(),
                ch.nx()
            )));
        }
        Ok(())
    }
}

/// Serialized form of a [`CausalPolicy`]: `p_x_given_vs` indexed `[v][s][x]`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PolicyDoc {
    pub card_v: usize,
    pub p_v_given_s: Vec<Vec<f64>>,
    pub p_x_given_vs: Vec<Vec<Vec<f64>>>,
    #[serde(default)]
    pub independent_v: bool,
}

impl From<CausalPolicy> for PolicyDoc {
    fn from(p: CausalPolicy) -> Self {
        let ns = p.ns();
        PolicyDoc {
            card_v: p.card_v,
            p_v_given_s: (0..ns).map(|s| p.p_v_given_s.row(s).to_vec()).collect(),
            p_x_given_vs: (0..p.card_v)
                .map(|v| {
                    (0..ns)
                        .map(|s| p.p_x_given_vs.row(v * ns + s).to_vec())
                        .collect()
                })
                .collect(),
            independent_v: p.independent_v,
        }
    }
}

impl TryFrom<PolicyDoc> for CausalPolicy {
    type Error = Error;
    fn try_from(doc: PolicyDoc) -> Result<Self> {
        let pvs = CondPmf::from_rows(&doc.p_v_given_s)?;
        if pvs.cols() != doc.card_v {
            return Err(Error::domain(format!(
                "card_v = {} but p_v_given_s rows have {} entries",
                doc.card_v,
                pvs.cols()
            )));
        }
        if doc.p_x_given_vs.len() != doc.card_v {
            return Err(Error::domain("p_x_given_vs must have card_v outer entries"));
        }
        let rows: Vec<Vec<f64>> = doc.p_x_given_vs.into_iter().flatten().collect();
        CausalPolicy::new(pvs, CondPmf::from_rows(&rows)?, doc.independent_v)
    }
}

/// Shannon strategy: `U ~ p(u)` independent of the state, `v = v(u, s)`, then `p(x|v,s)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShannonStrategy {
    pub p_u: Vec<f64>,
    /// `v_of_us[u][s]`
    pub v_of_us: Vec<Vec<usize>>,
    pub card_v: usize,
    /// `p_x_given_vs[v][s][x]`
    pub p_x_given_vs: Vec<Vec<Vec<f64>>>,
}

impl ShannonStrategy {
    /// Checks every table against the channel alphabets.
    pub fn validate(&self, ch: &ChannelWithState) -> Result<()> {
        check_pmf(&self.p_u, "p_u")?;
        let (ns, nx) = (ch.ns(), ch.nx());
        if self.v_of_us.len() != self.p_u.len() {
            return Err(Error::domain("v_of_us must have one row per u"));
        }
        for (u, row) in self.v_of_us.iter().enumerate() {
            if row.len() != ns {
                return Err(Error::domain(format!("v_of_us[{u}] must cover every state")));
            }
            if let Some(v) = row.iter().find(|&&v| v >= self.card_v) {
                return Err(Error::domain(format!("v_of_us[{u}] maps to {v} >= card_v")));
            }
        }
        if self.p_x_given_vs.len() != self.card_v {
            return Err(Error::domain("p_x_given_vs must have card_v outer entries"));
        }
        for (v, per_s) in self.p_x_given_vs.iter().enumerate() {
            if per_s.len() != ns {
                return Err(Error::domain(format!("p_x_given_vs[{v}] must cover every state")));
            }
            for (s, px) in per_s.iter().enumerate() {
                if px.len() != nx {
                    return Err(Error::domain(format!("p_x_given_vs[{v}][{s}] must cover X")));
                }
                check_pmf(px, &format!("p_x_given_vs[{v}][{s}]"))?;
            }
        }
        Ok(())
    }

    /// Uses `V = U` directly: `v(u, s) = u`.
    pub fn from_independent_policy(p_v: Vec<f64>, p_x_given_vs: Vec<Vec<Vec<f64>>>) -> Self {
        let ns = p_x_given_vs.first().map_or(0, Vec::len);
        let card_v = p_v.len();
        ShannonStrategy {
            v_of_us: (0..card_v).map(|u| vec![u; ns]).collect(),
            p_u: p_v,
            card_v,
            p_x_given_vs,
        }
    }

    /// `U = V = X`, uniform input, deterministic transmission.
    pub fn uniform_identity(nx: usize, ns: usize) -> Self {
        let p_x = (0..nx)
            .map(|v| {
                let mut row = vec![0.0; nx];
                row[v] = 1.0;
                vec![row; ns]
            })
            .collect();
        ShannonStrategy::from_independent_policy(vec![1.0 / nx as f64; nx], p_x)
    }

    pub fn card_u(&self) -> usize {
        self.p_u.len()
    }

    pub fn v(&self, u: usize, s: usize) -> usize {
        self.v_of_us[u][s]
    }

    pub fn p_x(&self, v: usize, s: usize, x: usize) -> f64 {
        self.p_x_given_vs[v][s][x]
    }

    /// The policy `p(v|s) = sum over u with v(u,s) = v of p(u)`, same `p(x|v,s)`.
    pub fn collapse(&self) -> Result<CausalPolicy> {
        let ns = self.v_of_us.first().map_or(0, Vec::len);
        let mut pvs = vec![0.0; ns * self.card_v];
        for s in 0..ns {
            for (u, &pu) in self.p_u.iter().enumerate() {
                pvs[s * self.card_v + self.v(u, s)] += pu;
            }
        }
        let rows: Vec<Vec<f64>> = self.p_x_given_vs.iter().flatten().cloned().collect();
        CausalPolicy::new(
            CondPmf::new(ns, self.card_v, pvs)?,
            CondPmf::from_rows(&rows)?,
            false,
        )
    }
}

/// Auxiliary chain `p(u|s) p(v1|u,s) p(v2|v1,s) p(x|v2,s)`.
#[derive(Clone, Debug, PartialEq)]
pub struct AuxChain {
    /// rows `s`, columns `u`
    pub p_u_given_s: CondPmf,
    /// rows `u * |S| + s`, columns `v1`
    pub p_v1_given_us: CondPmf,
    /// rows `v1 * |S| + s`, columns `v2`
    pub p_v2_given_v1s: CondPmf,
    /// rows `v2 * |S| + s`, columns `x`
    pub p_x_given_v2s: CondPmf,
}

impl AuxChain {
    fn sizes(&self, ch: &ChannelWithState) -> Result<(usize, usize, usize)> {
        let ns = ch.ns();
        let nu = self.p_u_given_s.cols();
        let nv1 = self.p_v1_given_us.cols();
        let nv2 = self.p_v2_given_v1s.cols();
        let ok = self.p_u_given_s.rows() == ns
            && self.p_v1_given_us.rows() == nu * ns
            && self.p_v2_given_v1s.rows() == nv1 * ns
            && self.p_x_given_v2s.rows() == nv2 * ns
            && self.p_x_given_v2s.cols() == ch.nx();
        if !ok {
            return Err(Error::domain("auxiliary chain dimensions do not match the channel"));
        }
        Ok((nu, nv1, nv2))
    }
}

/// Embedding of a causal policy into the noncausal auxiliary `U = V + S |V|`.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddedPolicy {
    /// rows `s`, columns `u`
    pub p_u_given_s: CondPmf,
    /// rows `u * |S| + s`, columns `x`
    pub p_x_given_us: CondPmf,
}

/// Joint law of `(V, S, X, Y, Z)` induced by a policy.
pub fn induce_joint(ch: &ChannelWithState, pol: &CausalPolicy) -> Result<JointPmf> {
    pol.check_against(ch)?;
    let vars = vec![
        Alphabet::new("V", pol.card_v())?,
        ch.s.clone(),
        ch.x.clone(),
        ch.y.clone(),
        ch.z.clone(),
    ];
    JointPmf::from_fn(vars, |i| {
        let (v, s, x, y, z) = (i[0], i[1], i[2], i[3], i[4]);
        ch.p_s[s] * pol.p_v(s, v) * pol.p_x(v, s, x) * ch.p_yz(s, x, y, z)
    })
}

/// `min{I(V;Y|S) - I(V;Z|S) + H(S|Z), I(V;Y|S)}` at the policy.
pub fn rate_csi_1_value(ch: &ChannelWithState, pol: &CausalPolicy) -> Result<Bits> {
    let p = induce_joint(ch, pol)?;
    let iy = p.conditional_mutual_information(&["V"], &["Y"], &["S"])?;
    let iz = p.conditional_mutual_information(&["V"], &["Z"], &["S"])?;
    let hsz = p.conditional_entropy(&["S"], &["Z"])?;
    Ok((iy - iz + hsz).min(iy))
}

/// `min{H(S|Z,V), I(V;Y|S)}` at a policy whose `p(v)` is free of the state.
pub fn rate_csi_2_value(ch: &ChannelWithState, pol: &CausalPolicy) -> Result<Bits> {
    if !pol.independent_v() {
        return Err(Error::contract(
            "the second bound requires V independent of S (independent_v unset)",
        ));
    }
    let p = induce_joint(ch, pol)?;
    let hs = p.conditional_entropy(&["S"], &["Z", "V"])?;
    let iy = p.conditional_mutual_information(&["V"], &["Y"], &["S"])?;
    Ok(hs.min(iy))
}

fn noncausal_joint(
    ch: &ChannelWithState,
    p_u_given_s: &CondPmf,
    p_x_given_us: &CondPmf,
) -> Result<JointPmf> {
    let ns = ch.ns();
    let nu = p_u_given_s.cols();
    if p_u_given_s.rows() != ns || p_x_given_us.rows() != nu * ns || p_x_given_us.cols() != ch.nx()
    {
        return Err(Error::domain("noncausal policy dimensions do not match the channel"));
    }
    let vars = vec![
        Alphabet::new("U", nu)?,
        ch.s.clone(),
        ch.x.clone(),
        ch.y.clone(),
        ch.z.clone(),
    ];
    JointPmf::from_fn(vars, |i| {
        let (u, s, x, y, z) = (i[0], i[1], i[2], i[3], i[4]);
        ch.p_s[s] * p_u_given_s.get(s, u) * p_x_given_us.get(u * ns + s, x) * ch.p_yz(s, x, y, z)
    })
}

/// Noncausal lower bound `min{I(U;Y|S) - I(U;Z|S) + I(S;U|Z), I(U;Y|S)}`.
pub fn liu_chen_value(
    ch: &ChannelWithState,
    p_u_given_s: &CondPmf,
    p_x_given_us: &CondPmf,
) -> Result<Bits> {
    let p = noncausal_joint(ch, p_u_given_s, p_x_given_us)?;
    let iy = p.conditional_mutual_information(&["U"], &["Y"], &["S"])?;
    let iz = p.conditional_mutual_information(&["U"], &["Z"], &["S"])?;
    let isu = p.conditional_mutual_information(&["S"], &["U"], &["Z"])?;
    Ok((iy - iz + isu).min(iy))
}

/// Evaluates the noncausal bound at an [`EmbeddedPolicy`].
pub fn liu_chen_embedded(ch: &ChannelWithState, e: &EmbeddedPolicy) -> Result<Bits> {
    liu_chen_value(ch, &e.p_u_given_s, &e.p_x_given_us)
}

/// `H(S|Z,U)` under an embedded policy; zero whenever `U` encodes the state.
pub fn embedded_state_residual(ch: &ChannelWithState, e: &EmbeddedPolicy) -> Result<Bits> {
    noncausal_joint(ch, &e.p_u_given_s, &e.p_x_given_us)?.conditional_entropy(&["S"], &["Z", "U"])
}

/// Maps `(v, s)` to `u = v + s |V|`, so that `U` determines the state.
pub fn embed_policy(pol: &CausalPolicy) -> Result<EmbeddedPolicy> {
    let (nv, ns, nx) = (pol.card_v(), pol.ns(), pol.nx());
    let nu = nv * ns;
    let mut pus = vec![0.0; ns * nu];
    let mut pxus = vec![0.0; nu * ns * nx];
    for u in 0..nu {
        let (v, su) = (u % nv, u / nv);
        for s in 0..ns {
            let row = &mut pxus[(u * ns + s) * nx..(u * ns + s + 1) * nx];
            if s == su {
                pus[s * nu + u] = pol.p_v(s, v);
                row.copy_from_slice(pol.p_x_given_vs.row(v * ns + s));
            } else {
                // (u, s) has zero mass; any normalized row will do
                row[0] = 1.0;
            }
        }
    }
    Ok(EmbeddedPolicy {
        p_u_given_s: CondPmf::new(ns, nu, pus)?,
        p_x_given_us: CondPmf::new(nu * ns, nx, pxus)?,
    })
}

/// `min{I(U;Y,S) - I(U;Z,S) + H(S|Z), I(U;Y,S)}` for a Shannon strategy.
pub fn shannon_strategy_value(ch: &ChannelWithState, strat: &ShannonStrategy) -> Result<Bits> {
    strat.validate(ch)?;
    let vars = vec![
        Alphabet::new("U", strat.card_u())?,
        ch.s.clone(),
        ch.x.clone(),
        ch.y.clone(),
        ch.z.clone(),
    ];
    let p = JointPmf::from_fn(vars, |i| {
        let (u, s, x, y, z) = (i[0], i[1], i[2], i[3], i[4]);
        strat.p_u[u] * ch.p_s[s] * strat.p_x(strat.v(u, s), s, x) * ch.p_yz(s, x, y, z)
    })?;
    let iy = p.mutual_information(&["U"], &["Y", "S"])?;
    let iz = p.mutual_information(&["U"], &["Z", "S"])?;
    let hsz = p.conditional_entropy(&["S"], &["Z"])?;
    Ok((iy - iz + hsz).min(iy))
}

/// Upper-bound expression `min{I(V1;Y|U,S) - I(V1;Z|U,S) + H(S|Z,U), I(V2;Y|S)}`.
pub fn upper_bound_value(ch: &ChannelWithState, chain: &AuxChain) -> Result<Bits> {
    let (nu, nv1, nv2) = chain.sizes(ch)?;
    let ns = ch.ns();
    let vars = vec![
        Alphabet::new("U", nu)?,
        Alphabet::new("V1", nv1)?,
        Alphabet::new("V2", nv2)?,
        ch.s.clone(),
        ch.x.clone(),
        ch.y.clone(),
        ch.z.clone(),
    ];
    let p = JointPmf::from_fn(vars, |i| {
        let (u, v1, v2, s, x, y, z) = (i[0], i[1], i[2], i[3], i[4], i[5], i[6]);
        ch.p_s[s]
            * chain.p_u_given_s.get(s, u)
            * chain.p_v1_given_us.get(u * ns + s, v1)
            * chain.p_v2_given_v1s.get(v1 * ns + s, v2)
            * chain.p_x_given_v2s.get(v2 * ns + s, x)
            * ch.p_yz(s, x, y, z)
    })?;
    let iy1 = p.conditional_mutual_information(&["V1"], &["Y"], &["U", "S"])?;
    let iz1 = p.conditional_mutual_information(&["V1"], &["Z"], &["U", "S"])?;
    let hszu = p.conditional_entropy(&["S"], &["Z", "U"])?;
    let iy2 = p.conditional_mutual_information(&["V2"], &["Y"], &["S"])?;
    Ok((iy1 - iz1 + hszu).min(iy2))
}

/// Which tightness condition, if any, certifies the lower bound as capacity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Tightness {
    CaseI,
    CaseII,
    Unknown,
}

/// Values of the two lower-bound branches and the policies attaining them.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundReport {
    pub card_v: usize,
    pub r_csi_1: Bits,
    /// `None` when the supplied policy lets `V` depend on the state.
    pub r_csi_2: Option<Bits>,
    pub lower_bound: Bits,
    pub liu_chen: Option<Bits>,
    pub csi1_witness: CausalPolicy,
    pub csi2_witness: Option<CausalPolicy>,
    pub evaluations: u64,
    pub tightness: Option<Tightness>,
    /// Set once a tightness case holds on the grid.
    pub capacity_grid_certified: bool,
}

impl BoundReport {
    /// Evaluates every applicable expression at one policy.
    pub fn at_policy(ch: &ChannelWithState, pol: &CausalPolicy) -> Result<Self> {
        let r1 = rate_csi_1_value(ch, pol)?;
        let r2 = if pol.independent_v() {
            Some(rate_csi_2_value(ch, pol)?)
        } else {
            None
        };
        let lc = liu_chen_embedded(ch, &embed_policy(pol)?)?;
        Ok(BoundReport {
            card_v: pol.card_v(),
            r_csi_1: r1,
            r_csi_2: r2,
            lower_bound: r2.map_or(r1, |r2| r1.max(r2)),
            liu_chen: Some(lc),
            csi1_witness: pol.clone(),
            csi2_witness: r2.map(|_| pol.clone()),
            evaluations: 3,
            tightness: None,
            capacity_grid_certified: false,
        })
    }

    pub fn certify(&mut self, t: Tightness) {
        self.tightness = Some(t);
        self.capacity_grid_certified = matches!(t, Tightness::CaseI | Tightness::CaseII);
    }
}

/// Root of `h(q) = target` on `[0, 1/2]` by bisection, to within `1e-12` in `q`.
pub fn inverse_binary_entropy(target: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&target) {
        return Err(Error::domain(format!("binary entropy target {target} outside [0, 1]")));
    }
    let (mut lo, mut hi) = (0.0f64, 0.5f64);
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if binary_entropy(mid)?.0 < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Binary symmetric channel matrix `p(y|x)` with crossover `eps`.
pub fn bsc(eps: f64) -> [[f64; 2]; 2] {
    [[1.0 - eps, eps], [eps, 1.0 - eps]]
}

/// Binary example channel: `Z = X`, `Y` is `X` through a BSC(0.1), and the
/// state is Bernoulli with `H(S) = 1 - h(0.1)` (root below one half).
pub fn example_channel() -> ChannelWithState {
    let q = inverse_binary_entropy(1.0 - binary_entropy(0.1).expect("valid").0)
        .expect("target in range");
    let w = bsc(0.1);
    ChannelWithState::from_fn(2, 2, 2, vec![1.0 - q, q], |_, x, y, z| {
        if z == x {
            w[x][y]
        } else {
            0.0
        }
    })
    .expect("example channel is well formed")
}
