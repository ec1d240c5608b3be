//! Exhaustive product-grid search followed by coordinate-pair refinement.
//!
//! Points are integer compositions over a common denominator, so the search
//! is exact and reproducible. The grid phase is split across rayon workers by
//! the index of the first block; partition winners are reduced in index order
//! with a strict `>`, so the lexicographically first maximizer always wins,
//! whatever the worker count.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::fast::{FastChannel, Objective, StateTerms};
use super::grid::{compositions, grid_count};
use crate::channel::CausalPolicy;
use crate::error::{Error, Result};
use crate::info::CondPmf;

/// How search variables map onto `p(v,x|s)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Param {
    /// One simplex per state over `(v, x)` pairs.
    Joint,
    /// `p(v)` times one simplex `p(x|v,s)` per `(v, s)`.
    Product,
    /// `V = X`, one simplex `p(x|s)` per state.
    InputPerState,
    /// `V = X`, a single `p(x)` shared by all states.
    Input,
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct Space {
    pub param: Param,
    pub ns: usize,
    pub nx: usize,
    pub nv: usize,
}

pub(crate) struct Found {
    pub point: Vec<Vec<u64>>,
    pub denom: u64,
    pub evaluations: u64,
}

pub(crate) struct Plan {
    pub resolution: u32,
    pub refine_rounds: u32,
    pub restarts: u32,
    pub seed: u64,
    pub cap: u64,
}

const MAX_PASSES: usize = 10_000;

/// Integer grid coordinates.
trait Count: Copy {
    fn real(self) -> f64;
}

impl Count for u32 {
    fn real(self) -> f64 {
        self as f64
    }
}

impl Count for u64 {
    fn real(self) -> f64 {
        self as f64
    }
}

impl Space {
    pub fn new(param: Param, ns: usize, nx: usize, nv: usize) -> Self {
        let nv = match param {
            Param::InputPerState | Param::Input => nx,
            _ => nv,
        };
        Space { param, ns, nx, nv }
    }

    fn block_dims(&self) -> Vec<usize> {
        match self.param {
            Param::Joint => vec![self.nv * self.nx; self.ns],
            Param::Product => {
                let mut d = vec![self.nv];
                d.extend(std::iter::repeat(self.nx).take(self.nv * self.ns));
                d
            }
            Param::InputPerState => vec![self.nx; self.ns],
            Param::Input => vec![self.nx],
        }
    }

    /// Blocks correspond one-to-one with states.
    fn separable(&self) -> bool {
        matches!(self.param, Param::Joint | Param::InputPerState)
    }

    fn q_len(&self) -> usize {
        self.ns * self.nv * self.nx
    }

    /// `p(v,x|s)` of one state block, for separable spaces.
    fn fill_state<T: Count>(&self, block: &[T], d: f64, qs: &mut [f64]) {
        match self.param {
            Param::Joint => {
                for (q, &c) in qs.iter_mut().zip(block) {
                    *q = c.real() / d;
                }
            }
            Param::InputPerState => {
                qs.iter_mut().for_each(|q| *q = 0.0);
                for (x, &c) in block.iter().enumerate() {
                    qs[x * self.nx + x] = c.real() / d;
                }
            }
            _ => unreachable!("not a per-state parameterization"),
        }
    }

    fn fill_q<T: Count>(&self, blocks: &[&[T]], d: f64, q: &mut [f64]) {
        let (ns, nx, nv) = (self.ns, self.nx, self.nv);
        let sb = nv * nx;
        match self.param {
            Param::Joint | Param::InputPerState => {
                for s in 0..ns {
                    self.fill_state(blocks[s], d, &mut q[s * sb..(s + 1) * sb]);
                }
            }
            Param::Input => {
                q.iter_mut().for_each(|v| *v = 0.0);
                for s in 0..ns {
                    for x in 0..nx {
                        q[s * sb + x * nx + x] = blocks[0][x].real() / d;
                    }
                }
            }
            Param::Product => {
                for s in 0..ns {
                    for v in 0..nv {
                        let pv = blocks[0][v].real() / d;
                        let px = blocks[1 + v * ns + s];
                        for x in 0..nx {
                            q[s * sb + v * nx + x] = pv * (px[x].real() / d);
                        }
                    }
                }
            }
        }
    }

    /// Converts a point to the policy it represents.
    pub fn witness(&self, point: &[Vec<u64>], denom: u64) -> Result<CausalPolicy> {
        let (ns, nx, nv) = (self.ns, self.nx, self.nv);
        let d = denom as f64;
        let frac = |b: &[u64]| -> Vec<f64> { b.iter().map(|&c| c as f64 / d).collect() };
        match self.param {
            Param::Joint => {
                let mut pvs = Vec::with_capacity(ns * nv);
                let mut pxvs = vec![0.0; nv * ns * nx];
                for s in 0..ns {
                    for v in 0..nv {
                        let cells = &point[s][v * nx..(v + 1) * nx];
                        let tot: u64 = cells.iter().sum();
                        pvs.push(tot as f64 / d);
                        let row = &mut pxvs[(v * ns + s) * nx..(v * ns + s + 1) * nx];
                        if tot == 0 {
                            row.iter_mut().for_each(|p| *p = 1.0 / nx as f64);
                        } else {
                            for x in 0..nx {
                                row[x] = cells[x] as f64 / tot as f64;
                            }
                        }
                    }
                }
                CausalPolicy::new(
                    CondPmf::new(ns, nv, pvs)?,
                    CondPmf::new(nv * ns, nx, pxvs)?,
                    false,
                )
            }
            Param::Product => {
                let rows: Vec<Vec<f64>> = point[1..].iter().map(|b| frac(b)).collect();
                CausalPolicy::independent(&frac(&point[0]), ns, CondPmf::from_rows(&rows)?)
            }
            Param::InputPerState => {
                let rows: Vec<Vec<f64>> = point.iter().map(|b| frac(b)).collect();
                CausalPolicy::new(
                    CondPmf::from_rows(&rows)?,
                    CondPmf::deterministic(nx * ns, nx, |r| r / ns)?,
                    false,
                )
            }
            Param::Input => CausalPolicy::input_only(&frac(&point[0]), ns),
        }
    }
}

/// Per-state terms for every grid point of every state block.
struct TermTable {
    terms: Vec<Vec<StateTerms>>,
    /// `p(s,z)` per state and grid point, flattened `[g][z]`.
    pz: Vec<Vec<f64>>,
}

fn term_table(fc: &FastChannel, space: &Space, grid: &[Vec<u32>]) -> TermTable {
    let nz = fc.nz;
    let per_state: Vec<(Vec<StateTerms>, Vec<f64>)> = (0..space.ns)
        .into_par_iter()
        .map(|s| {
            let mut sc = fc.scratch(space.nv);
            let mut qs = vec![0.0; space.nv * space.nx];
            let mut terms = Vec::with_capacity(grid.len());
            let mut pz = vec![0.0; grid.len() * nz];
            let d = grid[0].iter().sum::<u32>() as f64;
            for (g, c) in grid.iter().enumerate() {
                space.fill_state(c, d, &mut qs);
                terms.push(fc.state_terms(s, &qs, space.nv, &mut sc, &mut pz[g * nz..(g + 1) * nz], None));
            }
            (terms, pz)
        })
        .collect();
    let (terms, pz) = per_state.into_iter().unzip();
    TermTable { terms, pz }
}

fn advance(idx: &mut [usize], lens: &[usize]) -> bool {
    for k in (0..idx.len()).rev() {
        idx[k] += 1;
        if idx[k] < lens[k] {
            return true;
        }
        idx[k] = 0;
    }
    false
}

/// Strictly better, so earlier candidates win ties.
fn better(cand: f64, best: f64) -> bool {
    cand > best || (best.is_nan() && !cand.is_nan())
}

pub(crate) fn search(fc: &FastChannel, space: &Space, obj: Objective, plan: &Plan) -> Result<Found> {
    if plan.resolution == 0 {
        return Err(Error::domain("grid resolution must be positive"));
    }
    let dims = space.block_dims();
    let mut total: u128 = 1;
    for &d in &dims {
        total = total.saturating_mul(grid_count(d, plan.resolution));
    }
    if total > plan.cap as u128 {
        return Err(Error::resource("grid search", total, plan.cap as u128));
    }
    let mut by_dim: BTreeMap<usize, Vec<Vec<u32>>> = BTreeMap::new();
    for &d in &dims {
        if !by_dim.contains_key(&d) {
            by_dim.insert(d, compositions(d, plan.resolution, plan.cap)?);
        }
    }
    let grids: Vec<&Vec<Vec<u32>>> = dims.iter().map(|d| &by_dim[d]).collect();
    let lens: Vec<usize> = grids.iter().map(|g| g.len()).collect();

    let best_idx = if space.separable() && obj != Objective::Csi2 {
        grid_separable(fc, space, obj, grids[0], &lens)
    } else {
        grid_direct(fc, space, obj, &grids, &lens, plan.resolution)
    };

    let mut evaluations = total as u64;
    let scale = 4u64.pow(plan.refine_rounds);
    let denom = plan.resolution as u64 * scale;
    let lift = |idx: &[usize]| -> Vec<Vec<u64>> {
        idx.iter()
            .enumerate()
            .map(|(b, &g)| grids[b][g].iter().map(|&c| c as u64 * scale).collect())
            .collect()
    };

    let mut sc = fc.scratch(space.nv);
    let mut q = vec![0.0; space.q_len()];
    let mut best = lift(&best_idx);
    let mut best_val = eval_point(fc, space, obj, &best, denom, &mut sc, &mut q);
    evaluations += refine(fc, space, obj, &mut best, &mut best_val, plan, &mut sc, &mut q);

    if plan.restarts > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
        for _ in 0..plan.restarts {
            let idx: Vec<usize> = lens.iter().map(|&l| rng.random_range(0..l)).collect();
            let mut cand = lift(&idx);
            let mut val = eval_point(fc, space, obj, &cand, denom, &mut sc, &mut q);
            evaluations += 1;
            evaluations += refine(fc, space, obj, &mut cand, &mut val, plan, &mut sc, &mut q);
            if better(val, best_val) {
                best = cand;
                best_val = val;
            }
        }
    }
    Ok(Found {
        point: best,
        denom,
        evaluations,
    })
}

fn eval_point(
    fc: &FastChannel,
    space: &Space,
    obj: Objective,
    point: &[Vec<u64>],
    denom: u64,
    sc: &mut super::fast::Scratch,
    q: &mut [f64],
) -> f64 {
    let blocks: Vec<&[u64]> = point.iter().map(|b| b.as_slice()).collect();
    space.fill_q(&blocks, denom as f64, q);
    fc.eval(q, space.nv, obj, sc)
}

fn grid_separable(
    fc: &FastChannel,
    space: &Space,
    obj: Objective,
    grid: &[Vec<u32>],
    lens: &[usize],
) -> Vec<usize> {
    let table = term_table(fc, space, grid);
    let nz = fc.nz;
    let ns = space.ns;
    let partials: Vec<(f64, Vec<usize>)> = (0..lens[0])
        .into_par_iter()
        .map(|g0| {
            let mut idx = vec![0usize; ns];
            idx[0] = g0;
            let mut pz = vec![0.0; nz];
            let mut best = (f64::NAN, idx.clone());
            loop {
                let (mut iy, mut iz, mut hsz) = (0.0, 0.0, 0.0);
                pz.iter_mut().for_each(|p| *p = 0.0);
                for s in 0..ns {
                    let t = &table.terms[s][idx[s]];
                    iy += t.iy;
                    iz += t.iz;
                    hsz += t.hsz;
                    let row = &table.pz[s][idx[s] * nz..(idx[s] + 1) * nz];
                    for z in 0..nz {
                        pz[z] += row[z];
                    }
                }
                let hz: f64 = -pz.iter().map(|&p| super::fast::xlx(p)).sum::<f64>();
                let val = obj.combine(iy, iz, hsz - hz);
                if better(val, best.0) {
                    best = (val, idx.clone());
                }
                if !advance(&mut idx[1..], &lens[1..]) {
                    break;
                }
            }
            best
        })
        .collect();
    reduce(partials)
}

fn grid_direct(
    fc: &FastChannel,
    space: &Space,
    obj: Objective,
    grids: &[&Vec<Vec<u32>>],
    lens: &[usize],
    resolution: u32,
) -> Vec<usize> {
    let d = resolution as f64;
    let partials: Vec<(f64, Vec<usize>)> = (0..lens[0])
        .into_par_iter()
        .map(|g0| {
            let mut sc = fc.scratch(space.nv);
            let mut q = vec![0.0; space.q_len()];
            let mut idx = vec![0usize; lens.len()];
            idx[0] = g0;
            let mut best = (f64::NAN, idx.clone());
            loop {
                let blocks: Vec<&[u32]> =
                    idx.iter().enumerate().map(|(b, &g)| grids[b][g].as_slice()).collect();
                space.fill_q(&blocks, d, &mut q);
                let val = fc.eval(&q, space.nv, obj, &mut sc);
                if better(val, best.0) {
                    best = (val, idx.clone());
                }
                if !advance(&mut idx[1..], &lens[1..]) {
                    break;
                }
            }
            best
        })
        .collect();
    reduce(partials)
}

fn reduce(partials: Vec<(f64, Vec<usize>)>) -> Vec<usize> {
    let mut it = partials.into_iter();
    let mut best = it.next().expect("grid is nonempty");
    for cand in it {
        if better(cand.0, best.0) {
            best = cand;
        }
    }
    best.1
}

/// Best-improvement moves of mass `k * h` between two coordinates of one
/// block, `k = 1..=4`, with `h` shrinking fourfold per round. Returns the
/// number of evaluations spent.
#[allow(clippy::too_many_arguments)]
fn refine(
    fc: &FastChannel,
    space: &Space,
    obj: Objective,
    point: &mut [Vec<u64>],
    val: &mut f64,
    plan: &Plan,
    sc: &mut super::fast::Scratch,
    q: &mut [f64],
) -> u64 {
    let denom = plan.resolution as u64 * 4u64.pow(plan.refine_rounds);
    let mut evals = 0;
    for round in 1..=plan.refine_rounds {
        let h = 4u64.pow(plan.refine_rounds - round);
        for _ in 0..MAX_PASSES {
            let mut best_move: Option<(usize, usize, usize, u64)> = None;
            let mut best_val = *val;
            for b in 0..point.len() {
                let dim = point[b].len();
                for i in 0..dim {
                    for j in 0..dim {
                        if i == j {
                            continue;
                        }
                        for k in 1..=4u64 {
                            let step = k * h;
                            if point[b][j] < step {
                                break;
                            }
                            point[b][i] += step;
                            point[b][j] -= step;
                            let v = eval_point(fc, space, obj, point, denom, sc, q);
                            point[b][i] -= step;
                            point[b][j] += step;
                            evals += 1;
                            if better(v, best_val) {
                                best_val = v;
                                best_move = Some((b, i, j, step));
                            }
                        }
                    }
                }
            }
            match best_move {
                Some((b, i, j, step)) => {
                    point[b][i] += step;
                    point[b][j] -= step;
                    *val = best_val;
                }
                None => break,
            }
        }
    }
    evals
}
