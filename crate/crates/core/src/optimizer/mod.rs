//! Grid-search maximization of the lower-bound branches and the closed-form
//! special cases.
//!
//! The first branch is searched over the joint conditional `p(v,x|s)`, one
//! simplex per state. This covers exactly the same set of induced joints as
//! the factored `p(v|s) p(x|v,s)` description while keeping the grid size
//! manageable. The second branch keeps `p(v)` and `p(x|v,s)` as separate
//! simplices, since `V` must stay independent of the state.

mod fast;
pub mod grid;
mod search;

pub use grid::{compositions, grid_count, simplex_grid, DEFAULT_EVALUATION_CAP};

use serde::{Deserialize, Serialize};

use crate::channel::{
    check_less_noisy, embed_policy, is_physically_degraded, liu_chen_embedded, rate_csi_1_value,
    rate_csi_2_value, BoundReport, CausalPolicy, ChannelWithState, Tightness,
};
use crate::error::{Error, Result};
use crate::info::Bits;
use fast::{FastChannel, Objective};
use search::{search, Param, Plan, Space};

/// Resolution of the concavity grid used to certify structural preconditions.
pub const CERTIFICATE_RESOLUTION: u32 = 16;

/// Tolerance used when comparing the two terms of a tightness condition.
pub const TIGHTNESS_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub card_v: usize,
    pub grid_resolution: u32,
    pub refine_rounds: u32,
    pub restarts: u32,
    pub seed: u64,
    pub max_evaluations: u64,
}

impl SearchConfig {
    /// Defaults: `|V| = |X||S| + 1`, resolution 2, two refinement rounds.
    pub fn for_channel(ch: &ChannelWithState) -> Self {
        SearchConfig {
            card_v: ch.nx() * ch.ns() + 1,
            grid_resolution: 2,
            refine_rounds: 2,
            restarts: 0,
            seed: 0,
            max_evaluations: DEFAULT_EVALUATION_CAP,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.card_v == 0 {
            return Err(Error::domain("card_v must be at least 1"));
        }
        if self.grid_resolution < 2 {
            return Err(Error::domain("grid_resolution must be at least 2"));
        }
        if self.refine_rounds > 12 {
            return Err(Error::domain("refine_rounds above 12 overflows the grid denominator"));
        }
        Ok(())
    }

    fn plan(&self) -> Plan {
        Plan {
            resolution: self.grid_resolution,
            refine_rounds: self.refine_rounds,
            restarts: self.restarts,
            seed: self.seed,
            cap: self.max_evaluations,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    Csi1,
    Csi2,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpecialCase {
    /// `max over p(x|s)` of the first branch at `V = X`; needs `Y` less noisy
    /// than `Z` at every state.
    Thm3,
    /// `max over p(x)` of `min{I(X;Y) - I(X;Z) + H(S), I(X;Y)}`; needs a
    /// state-independent channel with `Z` degraded (or less noisy) w.r.t. `Y`.
    Yamamoto,
    /// `max over p(x)` of `min{H(S), I(X;Y)}`; needs a state-independent
    /// channel with `Z` less noisy than `Y`.
    ZLessNoisy,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OptimResult {
    pub value: Bits,
    pub witness: CausalPolicy,
    pub branch: Branch,
    pub evaluations: u64,
    pub card_v: usize,
    pub resolution: u32,
}

fn branch_value(ch: &ChannelWithState, branch: Branch, pol: &CausalPolicy) -> Result<Bits> {
    match branch {
        Branch::Csi1 => rate_csi_1_value(ch, pol),
        Branch::Csi2 => rate_csi_2_value(ch, pol),
    }
}

fn run(
    ch: &ChannelWithState,
    space: Space,
    obj: Objective,
    branch: Branch,
    plan: &Plan,
) -> Result<OptimResult> {
    let fc = FastChannel::new(ch);
    let found = search(&fc, &space, obj, plan)?;
    let witness = space.witness(&found.point, found.denom)?;
    Ok(OptimResult {
        value: branch_value(ch, branch, &witness)?,
        witness,
        branch,
        evaluations: found.evaluations,
        card_v: space.nv,
        resolution: plan.resolution,
    })
}

/// Maximizes one branch of the lower bound.
pub fn maximize_branch(ch: &ChannelWithState, cfg: &SearchConfig, branch: Branch) -> Result<OptimResult> {
    cfg.validate()?;
    let (param, obj) = match branch {
        Branch::Csi1 => (Param::Joint, Objective::Csi1),
        Branch::Csi2 => (Param::Product, Objective::Csi2),
    };
    run(ch, Space::new(param, ch.ns(), ch.nx(), cfg.card_v), obj, branch, &cfg.plan())
}

/// Maximizes both branches and reports the larger.
pub fn maximize_lower_bound(ch: &ChannelWithState, cfg: &SearchConfig) -> Result<BoundReport> {
    Ok(maximize_lower_bound_detailed(ch, cfg)?.0)
}

/// As [`maximize_lower_bound`], also returning the per-branch results.
pub fn maximize_lower_bound_detailed(
    ch: &ChannelWithState,
    cfg: &SearchConfig,
) -> Result<(BoundReport, OptimResult, OptimResult)> {
    let r1 = maximize_branch(ch, cfg, Branch::Csi1)?;
    let r2 = maximize_branch(ch, cfg, Branch::Csi2)?;
    let lc = liu_chen_embedded(ch, &embed_policy(&r1.witness)?)?;
    let report = BoundReport {
        card_v: cfg.card_v,
        r_csi_1: r1.value,
        r_csi_2: Some(r2.value),
        lower_bound: r1.value.max(r2.value),
        liu_chen: Some(lc),
        csi1_witness: r1.witness.clone(),
        csi2_witness: Some(r2.witness.clone()),
        evaluations: r1.evaluations + r2.evaluations,
        tightness: None,
        capacity_grid_certified: false,
    };
    Ok((report, r1, r2))
}

fn y_less_noisy_at_every_state(ch: &ChannelWithState) -> Result<Option<usize>> {
    for s in 0..ch.ns() {
        let slice = ch.slice(s);
        if !is_physically_degraded(&slice) && !check_less_noisy(&slice, CERTIFICATE_RESOLUTION)?.holds
        {
            return Ok(Some(s));
        }
    }
    Ok(None)
}

/// Checks the structural precondition of a special case.
pub fn check_special_case(ch: &ChannelWithState, which: SpecialCase) -> Result<()> {
    match which {
        SpecialCase::Thm3 => {
            if let Some(s) = y_less_noisy_at_every_state(ch)? {
                return Err(Error::contract(format!(
                    "Y is not less noisy than Z at state {s} (grid concavity certificate failed)"
                )));
            }
        }
        SpecialCase::Yamamoto => {
            if !ch.is_state_independent() {
                return Err(Error::contract("channel law depends on the state"));
            }
            if y_less_noisy_at_every_state(ch)?.is_some() {
                return Err(Error::contract(
                    "Z is not a degraded version of Y and Y is not certified less noisy than Z",
                ));
            }
        }
        SpecialCase::ZLessNoisy => {
            if !ch.is_state_independent() {
                return Err(Error::contract("channel law depends on the state"));
            }
            let swapped = ch.slice(0).swapped();
            if !check_less_noisy(&swapped, CERTIFICATE_RESOLUTION)?.holds {
                return Err(Error::contract(
                    "Z is not less noisy than Y (grid concavity certificate failed)",
                ));
            }
        }
    }
    Ok(())
}

/// Grid maximization of a special-case formula, without precondition checks.
pub(crate) fn special_case_unchecked(
    ch: &ChannelWithState,
    which: SpecialCase,
    resolution: u32,
) -> Result<OptimResult> {
    if resolution < 2 {
        return Err(Error::domain("resolution must be at least 2"));
    }
    // Under each precondition the closed form coincides with a branch
    // evaluator at V = X: H(S|Z) = H(S) and I(X;Y|S) = I(X;Y) when the law is
    // state-free and X is independent of S.
    let (param, obj, branch) = match which {
        SpecialCase::Thm3 => (Param::InputPerState, Objective::Csi1, Branch::Csi1),
        SpecialCase::Yamamoto => (Param::Input, Objective::Csi1, Branch::Csi1),
        SpecialCase::ZLessNoisy => (Param::Input, Objective::Csi2, Branch::Csi2),
    };
    let plan = Plan {
        resolution,
        refine_rounds: 0,
        restarts: 0,
        seed: 0,
        cap: DEFAULT_EVALUATION_CAP,
    };
    run(ch, Space::new(param, ch.ns(), ch.nx(), ch.nx()), obj, branch, &plan)
}

/// Grid maximization of a special-case formula after checking its precondition.
pub fn maximize_special_case(
    ch: &ChannelWithState,
    which: SpecialCase,
    resolution: u32,
) -> Result<OptimResult> {
    check_special_case(ch, which)?;
    special_case_unchecked(ch, which, resolution)
}

/// Tests the two tightness conditions on grid maximizers of the key term and
/// of `I(V;Y|S)`, using the report's `|V|`.
pub fn tightness_classify(
    ch: &ChannelWithState,
    report: &BoundReport,
    resolution: u32,
) -> Result<Tightness> {
    let space = Space::new(Param::Joint, ch.ns(), ch.nx(), report.card_v);
    let plan = Plan {
        resolution,
        refine_rounds: 0,
        restarts: 0,
        seed: 0,
        cap: DEFAULT_EVALUATION_CAP,
    };
    let fc = FastChannel::new(ch);
    let terms = |pol: &CausalPolicy| -> Result<(f64, f64)> {
        let p = crate::channel::induce_joint(ch, pol)?;
        let iy = p.conditional_mutual_information(&["V"], &["Y"], &["S"])?;
        let iz = p.conditional_mutual_information(&["V"], &["Z"], &["S"])?;
        let hsz = p.conditional_entropy(&["S"], &["Z"])?;
        Ok(((iy - iz + hsz).0, iy.0))
    };
    let key = search(&fc, &space, Objective::KeyTerm, &plan)?;
    let (a, i) = terms(&space.witness(&key.point, key.denom)?)?;
    if a <= i + TIGHTNESS_TOL {
        return Ok(Tightness::CaseI);
    }
    let legit = search(&fc, &space, Objective::Legit, &plan)?;
    let (a, i) = terms(&space.witness(&legit.point, legit.denom)?)?;
    if i <= a + TIGHTNESS_TOL {
        return Ok(Tightness::CaseII);
    }
    Ok(Tightness::Unknown)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{bsc, example_channel, BroadcastChannel};
    use crate::info::binary_entropy;

    fn cfg(card_v: usize, res: u32, rounds: u32) -> SearchConfig {
        SearchConfig {
            card_v,
            grid_resolution: res,
            refine_rounds: rounds,
            restarts: 0,
            seed: 7,
            max_evaluations: DEFAULT_EVALUATION_CAP,
        }
    }

    fn h(p: f64) -> f64 {
        binary_entropy(p).unwrap().0
    }

    #[test]
    fn csi2_attains_uniform_point() {
        let ch = example_channel();
        let r = maximize_branch(&ch, &cfg(2, 16, 0), Branch::Csi2).unwrap();
        assert!(r.value.0 >= 1.0 - h(0.1) - 1e-9, "{}", r.value);
        assert_eq!(r.value, rate_csi_2_value(&ch, &r.witness).unwrap());
    }

    #[test]
    fn csi1_stays_below_csi2() {
        let ch = example_channel();
        let r = maximize_branch(&ch, &cfg(2, 8, 1), Branch::Csi1).unwrap();
        assert!(r.value.0 <= 1.0 - h(0.1) - 1e-3, "{}", r.value);
        assert!(r.value.0 >= 1.0 - 2.0 * h(0.1) - 1e-12);
    }

    #[test]
    fn no_secrecy_without_state_when_z_equals_y() {
        let w = bsc(0.2);
        let ch = ChannelWithState::from_fn(2, 2, 2, vec![1.0], |_, x, y, z| {
            if y == z { w[x][y] } else { 0.0 }
        })
        .unwrap();
        let r = maximize_lower_bound(&ch, &cfg(3, 4, 1)).unwrap();
        assert!(r.lower_bound.0.abs() <= 1e-12, "{}", r.lower_bound);
    }

    #[test]
    fn fast_and_generic_evaluators_agree() {
        let ch = example_channel();
        for res in [2, 3, 4] {
            for branch in [Branch::Csi1, Branch::Csi2] {
                let r = maximize_branch(&ch, &cfg(2, res, 1), branch).unwrap();
                let fc = FastChannel::new(&ch);
                let p = r.witness.clone();
                let (ns, nx, nv) = (ch.ns(), ch.nx(), p.card_v());
                let mut q = vec![0.0; ns * nv * nx];
                for s in 0..ns {
                    for v in 0..nv {
                        for x in 0..nx {
                            q[(s * nv + v) * nx + x] = p.p_v(s, v) * p.p_x(v, s, x);
                        }
                    }
                }
                let obj = match branch {
                    Branch::Csi1 => Objective::Csi1,
                    Branch::Csi2 => Objective::Csi2,
                };
                let fast = fc.eval(&q, nv, obj, &mut fc.scratch(nv));
                assert!((fast - r.value.0).abs() < 1e-12, "{fast} vs {}", r.value);
            }
        }
    }

    #[test]
    fn cap_is_reported() {
        let ch = example_channel();
        let mut c = cfg(5, 64, 0);
        c.max_evaluations = 1_000_000;
        assert!(matches!(
            maximize_branch(&ch, &c, Branch::Csi1),
            Err(Error::Resource { .. })
        ));
    }

    #[test]
    fn special_cases_on_example() {
        let ch = example_channel();
        let z = maximize_special_case(&ch, SpecialCase::ZLessNoisy, 64).unwrap();
        assert!((z.value.0 - (1.0 - h(0.1))).abs() < 1e-9);
        // Z = X is more capable than Y, so the first special case is refused
        assert!(matches!(
            maximize_special_case(&ch, SpecialCase::Thm3, 16),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn thm3_with_identical_outputs() {
        let w = bsc(0.1);
        let ch = ChannelWithState::from_fn(2, 2, 2, vec![0.7, 0.3], |_, x, y, z| {
            if y == z { w[x][y] } else { 0.0 }
        })
        .unwrap();
        let r = maximize_special_case(&ch, SpecialCase::Thm3, 32).unwrap();
        let expect = h(0.3).min(1.0 - h(0.1));
        assert!((r.value.0 - expect).abs() < 1e-9, "{} vs {expect}", r.value);
    }

    #[test]
    fn state_dependent_channels_are_refused() {
        let ch = ChannelWithState::from_fn(2, 2, 2, vec![0.5, 0.5], |s, x, y, z| {
            let w = bsc(if s == 0 { 0.1 } else { 0.2 });
            if z == x { w[x][y] } else { 0.0 }
        })
        .unwrap();
        for which in [SpecialCase::Yamamoto, SpecialCase::ZLessNoisy] {
            assert!(matches!(maximize_special_case(&ch, which, 8), Err(Error::Contract(_))));
        }
    }

    #[test]
    fn tightness_examples() {
        let ch = example_channel();
        let c = cfg(2, 4, 0);
        let rep = maximize_lower_bound(&ch, &c).unwrap();
        assert_eq!(tightness_classify(&ch, &rep, 4).unwrap(), Tightness::Unknown);

        // Y = X, Z constant
        let clean = ChannelWithState::from_fn(2, 2, 1, vec![0.5, 0.5], |_, x, y, _| {
            (x == y) as u8 as f64
        })
        .unwrap();
        let rep = maximize_lower_bound(&clean, &c).unwrap();
        assert_eq!(tightness_classify(&clean, &rep, 4).unwrap(), Tightness::CaseII);

        // degraded wiretap with a two-bit state
        let (wy, wz) = (bsc(0.1), bsc(0.125));
        let slice = BroadcastChannel::from_fn(2, 2, 2, |x, y, z| wy[x][y] * wz[y][z]).unwrap();
        let deg = ChannelWithState::state_independent(vec![0.25; 4], &slice).unwrap();
        let rep = maximize_lower_bound(&deg, &cfg(2, 2, 0)).unwrap();
        assert_eq!(tightness_classify(&deg, &rep, 2).unwrap(), Tightness::CaseII);
    }
}
