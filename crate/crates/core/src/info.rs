//! Finite-alphabet probability tables and information measures.
//!
//! Every quantity is in bits. Entries below [`STRUCTURAL_ZERO`] are skipped
//! in logarithms, which realises the `0 log 0 = 0` convention. Summation runs
//! in table index order so results are reproducible bit for bit.

use std::fmt;
use std::ops::{Add, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the total mass of a table at construction time.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Entries at or below this value are treated as exact zeros in `p log p`.
pub const STRUCTURAL_ZERO: f64 = 1e-15;

/// Negative information values down to this magnitude are clamped to zero.
pub const CLAMP_TOL: f64 = 1e-12;

/// A quantity of information, in bits.
#[derive(Clone, Copy, Debug, Default, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Bits(pub f64);

impl Bits {
    pub const ZERO: Bits = Bits(0.0);

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn min(self, other: Bits) -> Bits {
        Bits(self.0.min(other.0))
    }

    pub fn max(self, other: Bits) -> Bits {
        Bits(self.0.max(other.0))
    }

    /// Rates below zero are not achievable; reports show them as zero.
    pub fn floored(self) -> Bits {
        Bits(self.0.max(0.0))
    }
}

impl Add for Bits {
    type Output = Bits;
    fn add(self, rhs: Bits) -> Bits {
        Bits(self.0 + rhs.0)
    }
}

impl Sub for Bits {
    type Output = Bits;
    fn sub(self, rhs: Bits) -> Bits {
        Bits(self.0 - rhs.0)
    }
}

impl Neg for Bits {
    type Output = Bits;
    fn neg(self) -> Bits {
        Bits(-self.0)
    }
}

impl fmt::Display for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.10} bits", self.0)
    }
}

/// A named finite alphabet with symbols `0..size`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alphabet {
    name: String,
    size: usize,
}

impl Alphabet {
    pub fn new(name: impl Into<String>, size: usize) -> Result<Self> {
        let name = name.into();
        if size == 0 {
            return Err(Error::domain(format!("alphabet `{name}` must be nonempty")));
        }
        Ok(Alphabet { name, size })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn size(&self) -> usize {
        self.size
    }
}

/// `-p log2 p` summed over a slice, skipping structural zeros.
pub(crate) fn entropy_of(probs: &[f64]) -> f64 {
    let mut h = 0.0;
    for &p in probs {
        if p > STRUCTURAL_ZERO {
            h -= p * p.log2();
        }
    }
    h
}

/// Joint probability table over an ordered list of named variables.
///
/// The table is stored row-major: the last variable varies fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct JointPmf {
    vars: Vec<Alphabet>,
    strides: Vec<usize>,
    table: Vec<f64>,
}

impl JointPmf {
    pub fn new(vars: Vec<Alphabet>, table: Vec<f64>) -> Result<Self> {
        if vars.is_empty() {
            return Err(Error::EmptySelection);
        }
        for (i, a) in vars.iter().enumerate() {
            if vars[..i].iter().any(|b| b.name == a.name) {
                return Err(Error::Overlap(a.name.clone()));
            }
        }
        let expected: usize = vars.iter().map(Alphabet::size).product();
        if expected != table.len() {
            return Err(Error::domain(format!(
                "table has {} entries but the variables span {expected}",
                table.len()
            )));
        }
        let mut total = 0.0;
        for &p in &table {
            if !p.is_finite() || p < 0.0 {
                return Err(Error::domain(format!("invalid probability entry {p}")));
            }
            total += p;
        }
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::domain(format!(
                "table mass is {total}, expected 1 within {NORMALIZATION_TOL:e}"
            )));
        }
        let strides = strides_of(&vars);
        Ok(JointPmf {
            vars,
            strides,
            table,
        })
    }

    /// Builds a table by evaluating `f` on every index tuple in row-major order.
    pub fn from_fn(vars: Vec<Alphabet>, mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let sizes: Vec<usize> = vars.iter().map(Alphabet::size).collect();
        let len: usize = sizes.iter().product();
        let mut table = Vec::with_capacity(len);
        let mut idx = vec![0usize; sizes.len()];
        for _ in 0..len {
            table.push(f(&idx));
            advance(&mut idx, &sizes);
        }
        JointPmf::new(vars, table)
    }

    pub fn variables(&self) -> &[Alphabet] {
        &self.vars
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    pub fn prob(&self, idx: &[usize]) -> f64 {
        let flat: usize = idx.iter().zip(&self.strides).map(|(i, s)| i * s).sum();
        self.table[flat]
    }

    pub fn position(&self, name: &str) -> Result<usize> {
        self.vars
            .iter()
            .position(|a| a.name == name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    fn positions(&self, names: &[&str]) -> Result<Vec<usize>> {
        let mut out = Vec::with_capacity(names.len());
        for name in names {
            let p = self.position(name)?;
            if out.contains(&p) {
                return Err(Error::Overlap(name.to_string()));
            }
            out.push(p);
        }
        Ok(out)
    }

    /// Marginal table over `positions` (in that order), summed in source index order.
    fn marginal_table(&self, positions: &[usize]) -> Vec<f64> {
        let sizes: Vec<usize> = self.vars.iter().map(Alphabet::size).collect();
        let mut out_strides = vec![0usize; self.vars.len()];
        let mut stride = 1;
        for &p in positions.iter().rev() {
            out_strides[p] = stride;
            stride *= sizes[p];
        }
        let mut out = vec![0.0; stride];
        let mut idx = vec![0usize; sizes.len()];
        for &p in &self.table {
            let target: usize = idx.iter().zip(&out_strides).map(|(i, s)| i * s).sum();
            out[target] += p;
            advance(&mut idx, &sizes);
        }
        out
    }

    fn entropy_at(&self, positions: &[usize]) -> f64 {
        if positions.is_empty() {
            return 0.0;
        }
        entropy_of(&self.marginal_table(positions))
    }

    /// Sums out every variable not in `keep`; the result lists `keep` in the given order.
    pub fn marginalize(&self, keep: &[&str]) -> Result<JointPmf> {
        if keep.is_empty() {
            return Err(Error::EmptySelection);
        }
        let positions = self.positions(keep)?;
        let vars = positions.iter().map(|&p| self.vars[p].clone()).collect();
        JointPmf::new(vars, self.marginal_table(&positions))
    }

    pub fn entropy(&self, vars: &[&str]) -> Result<Bits> {
        entropy(self, vars)
    }

    pub fn conditional_entropy(&self, target: &[&str], given: &[&str]) -> Result<Bits> {
        conditional_entropy(self, target, given)
    }

    pub fn mutual_information(&self, a: &[&str], b: &[&str]) -> Result<Bits> {
        mutual_information(self, a, b)
    }

    pub fn conditional_mutual_information(
        &self,
        a: &[&str],
        b: &[&str],
        c: &[&str],
    ) -> Result<Bits> {
        conditional_mutual_information(self, a, b, c)
    }
}

fn strides_of(vars: &[Alphabet]) -> Vec<usize> {
    let mut strides = vec![1usize; vars.len()];
    for i in (0..vars.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * vars[i + 1].size;
    }
    strides
}

/// Row-major odometer step.
pub(crate) fn advance(idx: &mut [usize], sizes: &[usize]) {
    for k in (0..idx.len()).rev() {
        idx[k] += 1;
        if idx[k] < sizes[k] {
            return;
        }
        idx[k] = 0;
    }
}

fn disjoint(pmf: &JointPmf, groups: &[&[&str]]) -> Result<Vec<Vec<usize>>> {
    let mut seen: Vec<usize> = Vec::new();
    let mut out = Vec::with_capacity(groups.len());
    for g in groups {
        let pos = pmf.positions(g)?;
        for (&p, name) in pos.iter().zip(g.iter()) {
            if seen.contains(&p) {
                return Err(Error::Overlap(name.to_string()));
            }
            seen.push(p);
        }
        out.push(pos);
    }
    Ok(out)
}

fn clamp_nonnegative(v: f64, what: &str) -> Result<Bits> {
    if v >= 0.0 {
        Ok(Bits(v))
    } else if v >= -CLAMP_TOL {
        Ok(Bits(0.0))
    } else {
        Err(Error::Internal(format!("{what} evaluated to {v}")))
    }
}

fn union(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut v = a.to_vec();
    v.extend_from_slice(b);
    v
}

/// Entropy of the marginal on `vars`.
pub fn entropy(p: &JointPmf, vars: &[&str]) -> Result<Bits> {
    if vars.is_empty() {
        return Err(Error::EmptySelection);
    }
    let pos = p.positions(vars)?;
    Ok(Bits(p.entropy_at(&pos)))
}

/// `H(target | given)`; `given` may be empty.
pub fn conditional_entropy(p: &JointPmf, target: &[&str], given: &[&str]) -> Result<Bits> {
    if target.is_empty() {
        return Err(Error::EmptySelection);
    }
    let g = disjoint(p, &[target, given])?;
    let h = p.entropy_at(&union(&g[0], &g[1])) - p.entropy_at(&g[1]);
    clamp_nonnegative(h, "conditional entropy")
}

/// `I(a; b)`.
pub fn mutual_information(p: &JointPmf, a: &[&str], b: &[&str]) -> Result<Bits> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySelection);
    }
    let g = disjoint(p, &[a, b])?;
    let i = p.entropy_at(&g[0]) + p.entropy_at(&g[1]) - p.entropy_at(&union(&g[0], &g[1]));
    clamp_nonnegative(i, "mutual information")
}

/// `I(a; b | c)`; `c` may be empty.
pub fn conditional_mutual_information(
    p: &JointPmf,
    a: &[&str],
    b: &[&str],
    c: &[&str],
) -> Result<Bits> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySelection);
    }
    let g = disjoint(p, &[a, b, c])?;
    let ac = union(&g[0], &g[2]);
    let bc = union(&g[1], &g[2]);
    let abc = union(&ac, &g[1]);
    let i = p.entropy_at(&ac) + p.entropy_at(&bc) - p.entropy_at(&abc) - p.entropy_at(&g[2]);
    clamp_nonnegative(i, "conditional mutual information")
}

/// Binary entropy function `h(q)` in bits.
pub fn binary_entropy(q: f64) -> Result<Bits> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::domain(format!("probability {q} outside [0, 1]")));
    }
    Ok(Bits(entropy_of(&[q, 1.0 - q])))
}

/// Row-stochastic conditional table `p(col | row)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct CondPmf {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl CondPmf {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::domain("conditional table must have rows and columns"));
        }
        if data.len() != rows * cols {
            return Err(Error::domain(format!(
                "conditional table has {} entries, expected {rows}x{cols}",
                data.len()
            )));
        }
        for r in 0..rows {
            let row = &data[r * cols..(r + 1) * cols];
            if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
                return Err(Error::domain(format!("row {r} has an invalid entry")));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > NORMALIZATION_TOL {
                return Err(Error::domain(format!("row {r} sums to {s}")));
            }
        }
        Ok(CondPmf { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::domain("ragged conditional table"));
        }
        CondPmf::new(rows.len(), cols, rows.concat())
    }

    /// Every row is the point mass produced by `f(row)`.
    pub fn deterministic(rows: usize, cols: usize, f: impl Fn(usize) -> usize) -> Result<Self> {
        let mut data = vec![0.0; rows * cols];
        for r in 0..rows {
            let c = f(r);
            if c >= cols {
                return Err(Error::domain(format!("deterministic map sends {r} to {c}")));
            }
            data[r * cols + c] = 1.0;
        }
        CondPmf::new(rows, cols, data)
    }

    pub fn uniform(rows: usize, cols: usize) -> Result<Self> {
        CondPmf::new(rows, cols, vec![1.0 / cols as f64; rows * cols])
    }

    /// Same distribution on every row.
    pub fn repeated(rows: usize, pmf: &[f64]) -> Result<Self> {
        CondPmf::new(rows, pmf.len(), pmf.repeat(rows))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }
}

impl TryFrom<Vec<Vec<f64>>> for CondPmf {
    type Error = Error;
    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        CondPmf::from_rows(&rows)
    }
}

impl From<CondPmf> for Vec<Vec<f64>> {
    fn from(c: CondPmf) -> Self {
        (0..c.rows).map(|r| c.row(r).to_vec()).collect()
    }
}

/// Validates a plain pmf vector at the construction tolerance.
pub fn check_pmf(p: &[f64], what: &str) -> Result<()> {
    if p.is_empty() {
        return Err(Error::domain(format!("{what} is empty")));
    }
    if p.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(Error::domain(format!("{what} has an invalid entry")));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::domain(format!("{what} sums to {s}")));
    }
    Ok(())
}
