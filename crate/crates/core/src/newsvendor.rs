//! Newsvendor profits, quantile orders and worst-case orders over the
//! Frechet class.

use alloc::format;
use alloc::vec::Vec;

use crate::coalition::Coalition;
use crate::distributions::{
    add_consistency_rows, independent_joint, joint_aggregates, Instance, JointDistribution, Lumped,
};
use crate::error::{Error, Result};
use crate::lp::{solve_lp_hinted, LinearProgram, LpStatus, Sense};
use crate::search::bisect_boundary;

/// Bisection tolerance for the ends of `Y(N)`.
pub const INTERVAL_TOL: f64 = 1e-6;

const QUANTILE_SLACK: f64 = 1e-12;

/// A scalar discrete demand distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarDemand {
    pub values: Vec<f64>,
    pub probs: Vec<f64>,
}

impl ScalarDemand {
    pub fn new(values: Vec<f64>, probs: Vec<f64>) -> Self {
        Self { values, probs }
    }

    /// Distribution of `d(S)` under `q`.
    pub fn pushforward(inst: &Instance, q: &JointDistribution, s: Coalition) -> Result<Self> {
        let values = joint_aggregates(inst, s)?;
        if values.len() != q.len() {
            return Err(Error::input(format!(
                "distribution has {} atoms, support has {}",
                q.len(),
                values.len()
            )));
        }
        Ok(Self::new(values, q.q.clone()))
    }

    /// Distribution of `d(S_r)` under the known marginal of block `r`.
    pub fn block(inst: &Instance, r: usize, s: Coalition) -> Self {
        Self::new(inst.block_aggregates(r, s), inst.marginals[r].probs.clone())
    }

    /// `E[(y - d)^+]`
    pub fn shortage(&self, y: f64) -> f64 {
        self.values
            .iter()
            .zip(&self.probs)
            .map(|(d, q)| (y - d).max(0.0) * q)
            .sum()
    }

    /// `(p - c) y - p E[(y - d)^+]`
    pub fn profit(&self, price: f64, cost: f64, y: f64) -> f64 {
        (price - cost) * y - price * self.shortage(y)
    }

    /// Support points sorted ascending with duplicate values merged.
    pub fn merged(&self) -> Vec<(f64, f64)> {
        let mut pairs: Vec<(f64, f64)> = self
            .values
            .iter()
            .copied()
            .zip(self.probs.iter().copied())
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut out: Vec<(f64, f64)> = Vec::with_capacity(pairs.len());
        for (v, p) in pairs {
            match out.last_mut() {
                Some(last) if last.0 == v => last.1 += p,
                _ => out.push((v, p)),
            }
        }
        out
    }

    pub fn optimal(&self, price: f64, cost: f64) -> OrderResult {
        let y = quantile_order(self, (price - cost) / price);
        OrderResult {
            y_star: y,
            value: self.profit(price, cost, y),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderResult {
    pub y_star: f64,
    pub value: f64,
}

/// Smallest support value whose CDF reaches `ratio`.
pub fn quantile_order(d: &ScalarDemand, ratio: f64) -> f64 {
    let merged = d.merged();
    let mut cdf = 0.0;
    for &(v, p) in &merged {
        cdf += p;
        if p > 0.0 && cdf >= ratio - QUANTILE_SLACK {
            return v;
        }
    }
    merged
        .iter()
        .rev()
        .find(|(_, p)| *p > 0.0)
        .map_or(0.0, |(v, _)| *v)
}

/// Expected profit of coalition `s` ordering `y` when demand follows `q`.
pub fn expected_profit(
    inst: &Instance,
    q: &JointDistribution,
    y: f64,
    s: Coalition,
) -> Result<f64> {
    if !(y >= 0.0) {
        return Err(Error::input(format!(
            "order quantity {y} must be nonnegative"
        )));
    }
    Ok(ScalarDemand::pushforward(inst, q, s)?.profit(inst.price, inst.cost, y))
}

/// Optimal order of coalition `s` under `q` and its expected profit.
pub fn optimal_order(inst: &Instance, q: &JointDistribution, s: Coalition) -> Result<OrderResult> {
    if s.is_empty() {
        return Err(Error::input("optimal order of the empty coalition"));
    }
    Ok(ScalarDemand::pushforward(inst, q, s)?.optimal(inst.price, inst.cost))
}

/// Sum of the per-block optimal orders and profits under the known marginals;
/// zero for the empty coalition.
pub fn worst_case_order(inst: &Instance, s: Coalition) -> Result<OrderResult> {
    let mut out = OrderResult {
        y_star: 0.0,
        value: 0.0,
    };
    for r in inst.blocks_meeting(s) {
        let o = ScalarDemand::block(inst, r, s).optimal(inst.price, inst.cost);
        out.y_star += o.y_star;
        out.value += o.value;
    }
    Ok(out)
}

/// `max E[(y - d(S))^+]` over the Frechet class, solved as a linear program.
pub fn worst_case_shortage(inst: &Instance, y: f64, s: Coalition) -> Result<f64> {
    shortage_program(inst, y, s, false).map(|(v, _)| v)
}

/// [`worst_case_shortage`] together with a maximizing joint distribution.
pub fn worst_case_shortage_witness(
    inst: &Instance,
    y: f64,
    s: Coalition,
) -> Result<(f64, JointDistribution)> {
    let (v, q) = shortage_program(inst, y, s, true)?;
    Ok((v, q.unwrap()))
}

fn shortage_program(
    inst: &Instance,
    y: f64,
    s: Coalition,
    witness: bool,
) -> Result<(f64, Option<JointDistribution>)> {
    if !(y >= 0.0) || !y.is_finite() {
        return Err(Error::input(format!(
            "order quantity {y} must be nonnegative"
        )));
    }
    let independent = || -> Result<Option<JointDistribution>> {
        if witness {
            independent_joint(inst).map(Some)
        } else {
            Ok(None)
        }
    };
    let blocks = inst.blocks_meeting(s);
    if blocks.len() <= 1 {
        let v = blocks
            .first()
            .map_or(0.0, |&r| ScalarDemand::block(inst, r, s).shortage(y));
        return Ok((v, independent()?));
    }
    let lumped = Lumped::new(inst, &[s]);
    let d = lumped.values(0);
    if d.iter().all(|v| *v >= y) {
        return Ok((0.0, independent()?));
    }
    let obj: Vec<f64> = d.iter().map(|v| (y - v).max(0.0)).collect();
    let mut lp = LinearProgram::new(Sense::Maximize, obj);
    add_consistency_rows(&mut lp, &lumped.radices(), &lumped.probs, 0, None);
    let sol = solve_lp_hinted(&lp, &lumped.comonotone_support())?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::Internal(format!(
            "worst-case shortage program reported {:?}",
            sol.status
        )));
    }
    let q = witness.then(|| lumped.expand(inst, &sol.x));
    Ok((sol.objective_value, q))
}

/// `(p - c) y - p · max E[(y - d(S))^+]`, the worst-case expected profit.
pub fn worst_case_profit(inst: &Instance, y: f64, s: Coalition) -> Result<f64> {
    Ok((inst.price - inst.cost) * y - inst.price * worst_case_shortage(inst, y, s)?)
}

/// `y*_wc(N)`; a model error when no order gives the grand coalition a
/// positive worst-case profit.
pub fn worst_case_grand_order(inst: &Instance) -> Result<OrderResult> {
    let wc = worst_case_order(inst, inst.grand())?;
    if !(wc.value > 0.0) {
        let lemma = (0..inst.num_blocks())
            .map(|r| inst.block_min_demand(r))
            .fold(0.0f64, f64::max);
        return Err(Error::GameInvalid(format!(
            "Y(N) is empty: worst-case grand profit at y = {} is {} \
             (largest block minimum demand {lemma})",
            wc.y_star, wc.value
        )));
    }
    Ok(wc)
}

/// Ends of `Y(N)`, the open interval where the worst-case grand profit `g`
/// is positive. `g` is concave with `g(0) = 0`, so the interval reaches down
/// to 0 whenever it is nonempty; the upper end is found by bisection, within
/// [`INTERVAL_TOL`] of the boundary and inside the interval.
pub fn grand_action_interval(inst: &Instance) -> Result<(f64, f64)> {
    let n = inst.grand();
    let wc = worst_case_grand_order(inst)?;
    let inside = |y: f64| worst_case_profit(inst, y, n).map(|g| g > 0.0);
    let mean: f64 = (0..inst.num_blocks())
        .map(|r| {
            let b = ScalarDemand::block(inst, r, n);
            b.values
                .iter()
                .zip(&b.probs)
                .map(|(d, p)| d * p)
                .sum::<f64>()
        })
        .sum();
    let out = inst.price * mean / inst.cost;
    let hi = bisect_boundary(inside, wc.y_star, out, INTERVAL_TOL)?;
    Ok((0.0, hi))
}
