//! Instances, joint supports and the Frechet class of joint distributions.
//!
//! Joint atoms are indexed lexicographically over block tuples
//! `(l_1, …, l_R)` with the last block varying fastest.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::coalition::{Coalition, MAX_PLAYERS};
use crate::error::{Error, Result};
use crate::lp::{solve_lp, LinearProgram, LpStatus, Sense};

/// Default cap on the number of joint atoms.
pub const SUPPORT_CAP: usize = 1_000_000;

const PROB_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct DiscreteMarginal {
    /// `K_r` rows, one demand vector per atom, ordered like the block's members.
    pub atoms: Vec<Vec<f64>>,
    pub probs: Vec<f64>,
}

impl DiscreteMarginal {
    pub fn new(atoms: Vec<Vec<f64>>, probs: Vec<f64>) -> Self {
        Self { atoms, probs }
    }

    /// Scalar marginal (one retailer per block).
    pub fn scalar(values: &[f64], probs: &[f64]) -> Self {
        Self {
            atoms: values.iter().map(|v| vec![*v]).collect(),
            probs: probs.to_vec(),
        }
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct Instance {
    pub price: f64,
    pub cost: f64,
    /// Disjoint blocks covering `0..n`.
    pub partition: Vec<Vec<usize>>,
    pub marginals: Vec<DiscreteMarginal>,
}

impl Instance {
    /// Builds and validates an instance.
    pub fn new(
        price: f64,
        cost: f64,
        partition: Vec<Vec<usize>>,
        marginals: Vec<DiscreteMarginal>,
    ) -> Result<Self> {
        let inst = Self {
            price,
            cost,
            partition,
            marginals,
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<()> {
        let (p, c) = (self.price, self.cost);
        if !(p.is_finite() && c.is_finite() && 0.0 < c && c < p) {
            return Err(Error::input(format!(
                "prices must satisfy 0 < cost < price (cost {c}, price {p})"
            )));
        }
        if self.partition.is_empty() {
            return Err(Error::input("partition: at least one block is required"));
        }
        let n: usize = self.partition.iter().map(Vec::len).sum();
        if n == 0 || n > MAX_PLAYERS {
            return Err(Error::input(format!(
                "partition: player count {n} outside 1..={MAX_PLAYERS}"
            )));
        }
        let mut seen = vec![false; n];
        for (r, block) in self.partition.iter().enumerate() {
            if block.is_empty() {
                return Err(Error::input(format!("partition[{r}]: empty block")));
            }
            for &i in block {
                if i >= n {
                    return Err(Error::input(format!(
                        "partition[{r}]: retailer {i} out of range 0..{n}"
                    )));
                }
                if seen[i] {
                    return Err(Error::input(format!(
                        "partition[{r}]: retailer {i} appears more than once"
                    )));
                }
                seen[i] = true;
            }
        }
        if self.marginals.len() != self.partition.len() {
            return Err(Error::input(format!(
                "marginals: expected {} entries (one per block), found {}",
                self.partition.len(),
                self.marginals.len()
            )));
        }
        for (r, m) in self.marginals.iter().enumerate() {
            let dim = self.partition[r].len();
            if m.probs.is_empty() {
                return Err(Error::input(format!("marginals[{r}].probs: empty")));
            }
            if m.atoms.len() != m.probs.len() {
                return Err(Error::input(format!(
                    "marginals[{r}]: {} atoms but {} probabilities",
                    m.atoms.len(),
                    m.probs.len()
                )));
            }
            for (l, a) in m.atoms.iter().enumerate() {
                if a.len() != dim {
                    return Err(Error::input(format!(
                        "marginals[{r}].atoms[{l}]: dimension {} but block has {dim} retailers",
                        a.len()
                    )));
                }
                if a.iter().any(|v| !v.is_finite() || *v < 0.0) {
                    return Err(Error::input(format!(
                        "marginals[{r}].atoms[{l}]: demands must be finite and nonnegative"
                    )));
                }
            }
            if m.probs.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::input(format!(
                    "marginals[{r}].probs: probabilities must be finite and nonnegative"
                )));
            }
            let s: f64 = m.probs.iter().sum();
            if (s - 1.0).abs() > PROB_SUM_TOL {
                return Err(Error::input(format!(
                    "marginals[{r}].probs: sum is {s}, expected 1"
                )));
            }
        }
        Ok(())
    }

    pub fn num_players(&self) -> usize {
        self.partition.iter().map(Vec::len).sum()
    }

    pub fn num_blocks(&self) -> usize {
        self.partition.len()
    }

    pub fn grand(&self) -> Coalition {
        Coalition::grand(self.num_players())
    }

    pub fn block(&self, r: usize) -> Coalition {
        Coalition::from_members(self.partition[r].iter().copied())
    }

    /// `(p - c) / p`
    pub fn critical_ratio(&self) -> f64 {
        (self.price - self.cost) / self.price
    }

    /// Number of joint atoms `Π K_r`, without overflow.
    pub fn support_size(&self) -> u128 {
        self.marginals
            .iter()
            .fold(1u128, |k, m| k.saturating_mul(m.len() as u128))
    }

    pub fn check_support(&self, cap: usize) -> Result<usize> {
        let size = self.support_size();
        if size > cap as u128 {
            return Err(Error::Capacity { size, cap });
        }
        Ok(size as usize)
    }

    /// Blocks meeting `s`, i.e. the indices `r` with `S_r` nonempty.
    pub fn blocks_meeting(&self, s: Coalition) -> Vec<usize> {
        (0..self.num_blocks())
            .filter(|&r| !self.block(r).is_disjoint(s))
            .collect()
    }

    /// For each atom `l` of block `r`, the aggregate demand of `S_r`.
    pub fn block_aggregates(&self, r: usize, s: Coalition) -> Vec<f64> {
        let cols: Vec<usize> = self.partition[r]
            .iter()
            .enumerate()
            .filter(|(_, i)| s.contains(**i))
            .map(|(j, _)| j)
            .collect();
        self.marginals[r]
            .atoms
            .iter()
            .map(|a| cols.iter().map(|&j| a[j]).sum())
            .collect()
    }

    /// Smallest aggregate demand of block `r` over its atoms with positive probability.
    pub fn block_min_demand(&self, r: usize) -> f64 {
        let agg = self.block_aggregates(r, self.block(r));
        agg.iter()
            .zip(&self.marginals[r].probs)
            .filter(|(_, p)| **p > 0.0)
            .map(|(d, _)| *d)
            .fold(f64::INFINITY, f64::min)
    }

    fn radices(&self) -> Vec<usize> {
        self.marginals.iter().map(DiscreteMarginal::len).collect()
    }
}

/// Iterates block tuples in lexicographic order, last block fastest.
pub(crate) struct TupleCounter {
    radices: Vec<usize>,
    current: Vec<usize>,
    started: bool,
}

impl TupleCounter {
    pub(crate) fn new(radices: Vec<usize>) -> Self {
        let r = radices.len();
        Self {
            radices,
            current: vec![0; r],
            started: false,
        }
    }

    /// Advances and returns the next tuple, or `None` when exhausted.
    pub(crate) fn advance(&mut self) -> Option<&[usize]> {
        if !self.started {
            self.started = true;
            if self.radices.contains(&0) {
                return None;
            }
            return Some(&self.current);
        }
        for r in (0..self.radices.len()).rev() {
            self.current[r] += 1;
            if self.current[r] < self.radices[r] {
                return Some(&self.current);
            }
            self.current[r] = 0;
        }
        None
    }
}

/// Sums per-block values over the product support: entry `k` is
/// `Σ_r values[r][l_r(k)]`.
pub(crate) fn product_sums(values: &[Vec<f64>]) -> Vec<f64> {
    let mut out = vec![0.0];
    for block in values {
        let mut next = Vec::with_capacity(out.len() * block.len());
        for &base in &out {
            for &v in block {
                next.push(base + v);
            }
        }
        out = next;
    }
    out
}

/// Multiplies per-block values over the product support.
pub(crate) fn product_products(values: &[Vec<f64>]) -> Vec<f64> {
    let mut out = vec![1.0];
    for block in values {
        let mut next = Vec::with_capacity(out.len() * block.len());
        for &base in &out {
            for &v in block {
                next.push(base * v);
            }
        }
        out = next;
    }
    out
}

/// The explicit joint support.
#[derive(Debug, Clone, PartialEq)]
pub struct Support {
    n: usize,
    radices: Vec<usize>,
    demand: Vec<f64>,
}

impl Support {
    pub fn len(&self) -> usize {
        self.demand.len() / self.n
    }

    pub fn is_empty(&self) -> bool {
        self.demand.is_empty()
    }

    /// Demand vector of joint atom `k`, indexed by retailer.
    pub fn atom(&self, k: usize) -> &[f64] {
        &self.demand[k * self.n..(k + 1) * self.n]
    }

    /// Block-index tuple `(l_1, …, l_R)` of joint atom `k`.
    pub fn tuple(&self, k: usize) -> Vec<usize> {
        let mut t = vec![0; self.radices.len()];
        let mut rest = k;
        for r in (0..self.radices.len()).rev() {
            t[r] = rest % self.radices[r];
            rest /= self.radices[r];
        }
        t
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], Vec<usize>)> {
        (0..self.len()).map(move |k| (self.atom(k), self.tuple(k)))
    }
}

/// Enumerates the joint support, failing beyond [`SUPPORT_CAP`] atoms.
pub fn product_support(inst: &Instance) -> Result<Support> {
    product_support_capped(inst, SUPPORT_CAP)
}

pub fn product_support_capped(inst: &Instance, cap: usize) -> Result<Support> {
    let k = inst.check_support(cap)?;
    let n = inst.num_players();
    let mut demand = Vec::with_capacity(k * n);
    let mut counter = TupleCounter::new(inst.radices());
    while let Some(t) = counter.advance() {
        let start = demand.len();
        demand.resize(start + n, 0.0);
        for (r, &l) in t.iter().enumerate() {
            for (j, &i) in inst.partition[r].iter().enumerate() {
                demand[start + i] = inst.marginals[r].atoms[l][j];
            }
        }
    }
    Ok(Support {
        n,
        radices: inst.radices(),
        demand,
    })
}

/// Aggregate demand `Σ_{i∈S} atom_i`.
pub fn aggregate_demand(atom: &[f64], s: Coalition) -> f64 {
    atom.iter()
        .enumerate()
        .filter(|(i, _)| s.contains(*i))
        .map(|(_, d)| *d)
        .sum()
}

/// `d_k(S)` for every joint atom `k`.
pub fn joint_aggregates(inst: &Instance, s: Coalition) -> Result<Vec<f64>> {
    inst.check_support(SUPPORT_CAP)?;
    let per_block: Vec<Vec<f64>> = (0..inst.num_blocks())
        .map(|r| inst.block_aggregates(r, s))
        .collect();
    Ok(product_sums(&per_block))
}

/// Probability vector over the joint support.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct JointDistribution {
    pub q: Vec<f64>,
}

impl JointDistribution {
    pub fn new(q: Vec<f64>) -> Self {
        Self { q }
    }

    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    /// Block marginals implied by `q`, one probability vector per block.
    pub fn block_marginals(&self, inst: &Instance) -> Vec<Vec<f64>> {
        let mut out: Vec<Vec<f64>> = inst.marginals.iter().map(|m| vec![0.0; m.len()]).collect();
        let mut counter = TupleCounter::new(inst.radices());
        let mut k = 0;
        while let Some(t) = counter.advance() {
            for (r, &l) in t.iter().enumerate() {
                out[r][l] += self.q[k];
            }
            k += 1;
        }
        out
    }

    /// Largest violation of nonnegativity, total mass and marginal consistency.
    pub fn consistency_error(&self, inst: &Instance) -> f64 {
        if self.q.len() as u128 != inst.support_size() {
            return f64::INFINITY;
        }
        let neg = self.q.iter().fold(0.0f64, |a, v| a.max(-v));
        let mass = (self.q.iter().sum::<f64>() - 1.0).abs();
        let marg = self
            .block_marginals(inst)
            .iter()
            .zip(&inst.marginals)
            .flat_map(|(got, m)| got.iter().zip(&m.probs).map(|(a, b)| (a - b).abs()))
            .fold(0.0f64, f64::max);
        neg.max(mass).max(marg)
    }

    pub fn is_consistent(&self, inst: &Instance, tol: f64) -> bool {
        self.consistency_error(inst) <= tol
    }
}

/// Product of the marginals.
pub fn independent_joint(inst: &Instance) -> Result<JointDistribution> {
    inst.check_support(SUPPORT_CAP)?;
    let probs: Vec<Vec<f64>> = inst.marginals.iter().map(|m| m.probs.clone()).collect();
    Ok(JointDistribution::new(product_products(&probs)))
}

/// Constraint rows of the consistency polytope over `radices`, with
/// `-probs[r][l] * scale_col` added to each marginal row when `scale_col` is
/// given (the homogenized form used by fractional programs).
pub(crate) fn add_consistency_rows(
    lp: &mut LinearProgram,
    radices: &[usize],
    probs: &[Vec<f64>],
    first_col: usize,
    scale_col: Option<usize>,
) {
    let offsets: Vec<usize> = radices
        .iter()
        .scan(0, |acc, &k| {
            let o = *acc;
            *acc += k;
            Some(o)
        })
        .collect();
    let total: usize = radices.iter().sum();
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); total];
    let mut counter = TupleCounter::new(radices.to_vec());
    let mut k = 0;
    while let Some(t) = counter.advance() {
        for (r, &l) in t.iter().enumerate() {
            rows[offsets[r] + l].push((first_col + k, 1.0));
        }
        k += 1;
    }
    for (r, block) in probs.iter().enumerate() {
        for (l, &p) in block.iter().enumerate() {
            let mut row = core::mem::take(&mut rows[offsets[r] + l]);
            match scale_col {
                Some(c) => {
                    row.push((c, -p));
                    lp.add_eq(row, 0.0);
                }
                None => lp.add_eq(row, p),
            }
        }
    }
    let mass = (0..k).map(|j| (first_col + j, 1.0));
    match scale_col {
        Some(c) => lp.add_eq(mass.chain([(c, -1.0)]), 0.0),
        None => lp.add_eq(mass, 1.0),
    }
}

/// A vertex of the consistency polytope maximizing `cost·q`.
pub fn sample_extremal(inst: &Instance, cost: &[f64]) -> Result<JointDistribution> {
    let k = inst.check_support(SUPPORT_CAP)?;
    if cost.len() != k {
        return Err(Error::input(format!(
            "cost vector has {} entries, support has {k}",
            cost.len()
        )));
    }
    if cost.iter().any(|c| !c.is_finite()) {
        return Err(Error::input("cost vector must be finite"));
    }
    let mut lp = LinearProgram::new(Sense::Maximize, cost.to_vec());
    let probs: Vec<Vec<f64>> = inst.marginals.iter().map(|m| m.probs.clone()).collect();
    add_consistency_rows(&mut lp, &inst.radices(), &probs, 0, None);
    let sol = solve_lp(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::Internal(format!(
            "consistency polytope reported {:?}",
            sol.status
        )));
    }
    Ok(JointDistribution::new(sol.x))
}

/// `(1 - λ)·p_i + λ·p_ext`; `λ` weights the extremal distribution.
pub fn contaminate(
    p_i: &JointDistribution,
    p_ext: &JointDistribution,
    lambda: f64,
) -> Result<JointDistribution> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::input(format!("lambda {lambda} outside [0, 1]")));
    }
    if p_i.len() != p_ext.len() {
        return Err(Error::input(format!(
            "supports differ: {} vs {} atoms",
            p_i.len(),
            p_ext.len()
        )));
    }
    let q = p_i
        .q
        .iter()
        .zip(&p_ext.q)
        .map(|(a, b)| {
            if lambda == 0.0 {
                *a
            } else if lambda == 1.0 {
                *b
            } else {
                (1.0 - lambda) * a + lambda * b
            }
        })
        .collect();
    Ok(JointDistribution::new(q))
}

/// A coarsened Frechet class: within each block, atoms that agree on the
/// aggregate demand of every tracked coalition are merged and zero-probability
/// atoms dropped. Any function of those aggregates has the same range of
/// expectations over the coarse class as over the original one.
#[derive(Debug, Clone)]
pub(crate) struct Lumped {
    /// Per block, per group: aggregate demand of each tracked coalition.
    pub stats: Vec<Vec<Vec<f64>>>,
    pub probs: Vec<Vec<f64>>,
    /// Per block, original atom -> group (`usize::MAX` for dropped atoms).
    pub group_of: Vec<Vec<usize>>,
}

impl Lumped {
    pub fn new(inst: &Instance, tracked: &[Coalition]) -> Self {
        let mut stats = Vec::new();
        let mut probs = Vec::new();
        let mut group_of = Vec::new();
        for r in 0..inst.num_blocks() {
            let aggs: Vec<Vec<f64>> = tracked
                .iter()
                .map(|s| inst.block_aggregates(r, *s))
                .collect();
            let m = &inst.marginals[r];
            let mut order: Vec<usize> = (0..m.len()).filter(|&l| m.probs[l] > 0.0).collect();
            let key = |l: usize| -> Vec<f64> { aggs.iter().map(|a| a[l]).collect() };
            order.sort_by(|&a, &b| {
                key(a)
                    .iter()
                    .zip(key(b).iter())
                    .map(|(x, y)| x.total_cmp(y))
                    .find(|o| o.is_ne())
                    .unwrap_or(core::cmp::Ordering::Equal)
                    .then(a.cmp(&b))
            });
            let mut block_stats: Vec<Vec<f64>> = Vec::new();
            let mut block_probs: Vec<f64> = Vec::new();
            let mut map = vec![usize::MAX; m.len()];
            for l in order {
                let kl = key(l);
                let same = block_stats.last().is_some_and(|last| {
                    last.iter()
                        .zip(&kl)
                        .all(|(a, b)| (a - b).abs() <= 1e-12 * (1.0 + a.abs()))
                });
                if !same {
                    block_stats.push(kl);
                    block_probs.push(0.0);
                }
                let g = block_stats.len() - 1;
                block_probs[g] += m.probs[l];
                map[l] = g;
            }
            stats.push(block_stats);
            probs.push(block_probs);
            group_of.push(map);
        }
        Self {
            stats,
            probs,
            group_of,
        }
    }

    pub fn radices(&self) -> Vec<usize> {
        self.probs.iter().map(Vec::len).collect()
    }

    /// Aggregate demand of tracked coalition `t` over the coarse product support.
    pub fn values(&self, t: usize) -> Vec<f64> {
        let per_block: Vec<Vec<f64>> = self
            .stats
            .iter()
            .map(|b| b.iter().map(|g| g[t]).collect())
            .collect();
        product_sums(&per_block)
    }

    /// Support of the comonotone coupling of the coarse marginals (groups in
    /// sorted order), a vertex of the coarse class. Indices are lexicographic
    /// positions in the coarse product support.
    pub fn comonotone_support(&self) -> Vec<usize> {
        let radices = self.radices();
        let r = radices.len();
        let mut left: Vec<Vec<f64>> = self.probs.clone();
        let mut idx = vec![0usize; r];
        let mut out = Vec::new();
        loop {
            let mass = (0..r)
                .map(|b| left[b][idx[b]])
                .fold(f64::INFINITY, f64::min);
            out.push(idx.iter().zip(&radices).fold(0, |acc, (l, k)| acc * k + l));
            let mut moved = false;
            for b in 0..r {
                left[b][idx[b]] -= mass;
                if left[b][idx[b]] <= 1e-14 && idx[b] + 1 < radices[b] {
                    idx[b] += 1;
                    moved = true;
                }
            }
            if !moved {
                break;
            }
        }
        out
    }

    /// Lifts a coarse joint distribution to the full support, splitting each
    /// group's mass in proportion to the original atom probabilities.
    pub fn expand(&self, inst: &Instance, coarse: &[f64]) -> JointDistribution {
        let radices = self.radices();
        let strides: Vec<usize> = (0..radices.len())
            .map(|r| radices[r + 1..].iter().product())
            .collect();
        let share: Vec<Vec<f64>> = inst
            .marginals
            .iter()
            .enumerate()
            .map(|(r, m)| {
                m.probs
                    .iter()
                    .enumerate()
                    .map(|(l, p)| match self.group_of[r][l] {
                        usize::MAX => 0.0,
                        g => p / self.probs[r][g],
                    })
                    .collect()
            })
            .collect();
        let mut q = Vec::with_capacity(inst.support_size() as usize);
        let mut counter = TupleCounter::new(inst.radices());
        while let Some(t) = counter.advance() {
            let mut idx = 0;
            let mut w = 1.0;
            for (r, &l) in t.iter().enumerate() {
                let g = self.group_of[r][l];
                if g == usize::MAX {
                    w = 0.0;
                    break;
                }
                idx += g * strides[r];
                w *= share[r][l];
            }
            q.push(if w == 0.0 { 0.0 } else { coarse[idx] * w });
        }
        JointDistribution::new(q)
    }
}
