//! The robust game: worst-case payoff ratios `v_max(y, S)`, the least-core
//! value `σ(y)`, robust core and least core decisions, and structural checks.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::coalition::Coalition;
use crate::coop::{core_membership, least_core_lp, CharacteristicFunction, MAX_GAME_PLAYERS};
use crate::distributions::{add_consistency_rows, Instance, JointDistribution, Lumped};
use crate::error::{Error, Result};
use crate::exec::{Executor, Sequential};
use crate::lp::{solve_lp_hinted, LinearProgram, LpStatus, Sense};
use crate::newsvendor::{
    grand_action_interval, worst_case_grand_order, worst_case_shortage_witness, ScalarDemand,
};
use crate::search::golden_section;

/// `σ` at or below this value counts as a nonempty core.
pub const CORE_TOL: f64 = 1e-9;
/// Golden-section iteration cap.
pub const MAX_SEARCH_ITER: usize = 200;

const GAMMA_DEDUP: f64 = 1e-12;

/// Grand-coalition order and allocation multiples summing to one.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct Decision {
    pub y: f64,
    pub z: Vec<f64>,
}

impl Decision {
    pub fn new(y: f64, z: Vec<f64>) -> Self {
        Self { y, z }
    }

    pub fn coalition_share(&self, s: Coalition) -> f64 {
        s.members().map(|i| self.z[i]).sum()
    }
}

/// One `v_max(y, S)` value with the maximizing order `γ*` and distribution `q*`.
#[derive(Debug, Clone, PartialEq)]
pub struct VmaxEntry {
    pub value: f64,
    pub gamma: f64,
    pub witness: JointDistribution,
    /// Linear programs solved for this entry.
    pub lp_solves: usize,
    /// Simplex pivots over those solves.
    pub pivots: usize,
    /// Final basis of the payoff-ratio program (empty for single-block
    /// coalitions); reused to warm-start the same coalition at nearby orders.
    pub basis: Vec<usize>,
}

/// Minimum over the Frechet class of the grand coalition's profit at `y`,
/// with a minimizing distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct GrandProfit {
    pub y: f64,
    pub value: f64,
    pub witness: JointDistribution,
}

/// `min_P v_P(y, N)`; fails with a domain error outside `Y(N)`.
pub fn worst_grand_profit(inst: &Instance, y: f64) -> Result<GrandProfit> {
    let (short, witness) = worst_case_shortage_witness(inst, y, inst.grand())?;
    let value = (inst.price - inst.cost) * y - inst.price * short;
    if !(value > 0.0) {
        return Err(Error::Domain { y, profit: value });
    }
    Ok(GrandProfit { y, value, witness })
}

/// `v_max(y, S)` for a nonempty proper coalition.
pub fn vmax(inst: &Instance, y: f64, s: Coalition) -> Result<VmaxEntry> {
    let grand = worst_grand_profit(inst, y)?;
    vmax_given(inst, &grand, s)
}

/// [`vmax`] reusing a precomputed worst grand profit at the same `y`.
pub fn vmax_given(inst: &Instance, grand: &GrandProfit, s: Coalition) -> Result<VmaxEntry> {
    let n = inst.grand();
    if s.is_empty() || !s.is_subset(n) || s == n {
        return Err(Error::input(format!(
            "coalition {s} is not a nonempty proper subset of the players"
        )));
    }
    let blocks = inst.blocks_meeting(s);
    if blocks.len() == 1 {
        // Y(S) is the single worst-case optimal order of S
        let o = ScalarDemand::block(inst, blocks[0], s).optimal(inst.price, inst.cost);
        return Ok(VmaxEntry {
            value: o.value / grand.value,
            gamma: o.y_star,
            witness: grand.witness.clone(),
            lp_solves: 0,
            pivots: 0,
            basis: Vec::new(),
        });
    }
    mixed_vmax(inst, grand, s, &[])
}

/// [`vmax_given`] warm-started from a basis of the same coalition's program
/// at another order, e.g. [`VmaxEntry::basis`]. Every basis of that program
/// stays feasible across `Y(N)`, so the hint only saves pivots.
pub fn vmax_warm(
    inst: &Instance,
    grand: &GrandProfit,
    s: Coalition,
    basis: &[usize],
) -> Result<VmaxEntry> {
    if inst.blocks_meeting(s).len() == 1 || basis.is_empty() {
        return vmax_given(inst, grand, s);
    }
    mixed_vmax(inst, grand, s, basis)
}

fn mixed_vmax(
    inst: &Instance,
    grand: &GrandProfit,
    s: Coalition,
    warm: &[usize],
) -> Result<VmaxEntry> {
    let (p, c, y) = (inst.price, inst.cost, grand.y);
    let lumped = Lumped::new(inst, &[s, inst.grand()]);
    let ds = lumped.values(0);
    let dn = lumped.values(1);
    let k = ds.len();

    // distinct candidate orders
    let mut gammas = ds.clone();
    gammas.sort_by(f64::total_cmp);
    gammas.dedup_by(|a, b| (*a - *b).abs() <= GAMMA_DEDUP * (1.0 + b.abs()));

    // The ratio at γ is at most max(0, (p-c)γ - p(γ - E d(S))^+) / min_P v_P(y, N)
    // since E(γ - d)^+ ≥ (γ - E d)^+.
    let mean_s: f64 = (0..inst.num_blocks())
        .map(|r| {
            let b = ScalarDemand::block(inst, r, s);
            b.values
                .iter()
                .zip(&b.probs)
                .map(|(d, q)| d * q)
                .sum::<f64>()
        })
        .sum();
    let bound = |g: f64| ((p - c) * g - p * (g - mean_s).max(0.0)).max(0.0) / grand.value;
    let mut order: Vec<(f64, f64)> = gammas.iter().map(|&g| (bound(g), g)).collect();
    order.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.total_cmp(&b.1)));

    // columns: θ then ψ_k
    let theta = 0;
    let mut template = LinearProgram::new(Sense::Maximize, vec![0.0; k + 1]);
    add_consistency_rows(
        &mut template,
        &lumped.radices(),
        &lumped.probs,
        1,
        Some(theta),
    );
    template.add_eq(
        [(theta, (p - c) * y)].into_iter().chain(
            dn.iter()
                .enumerate()
                .map(|(j, d)| (j + 1, -p * (y - d).max(0.0))),
        ),
        1.0,
    );

    // start from the comonotone vertex unless a basis is supplied
    let mut hint: Vec<usize> = if warm.is_empty() {
        core::iter::once(theta)
            .chain(lumped.comonotone_support().into_iter().map(|j| j + 1))
            .collect()
    } else {
        warm.to_vec()
    };
    let mut best: Option<(f64, f64, Vec<f64>, Vec<usize>)> = None;
    let mut solves = 0;
    let mut pivots = 0;
    for (ub, g) in order {
        if let Some((v, _, _, _)) = &best {
            if ub <= *v {
                break;
            }
        }
        template.objective[theta] = (p - c) * g;
        for (j, d) in ds.iter().enumerate() {
            template.objective[j + 1] = -p * (g - d).max(0.0);
        }
        let sol = solve_lp_hinted(&template, &hint)?;
        solves += 1;
        pivots += sol.iterations;
        match sol.status {
            LpStatus::Optimal => {}
            LpStatus::Infeasible => {
                return Err(Error::Domain {
                    y,
                    profit: grand.value,
                })
            }
            LpStatus::Unbounded => {
                return Err(Error::Internal(format!(
                    "payoff-ratio program unbounded at y = {y}, gamma = {g}"
                )))
            }
        }
        hint.clone_from(&sol.basis);
        if best
            .as_ref()
            .is_none_or(|(v, _, _, _)| sol.objective_value > *v)
        {
            best = Some((sol.objective_value, g, sol.x, sol.basis));
        }
    }
    let (value, gamma, x, basis) =
        best.ok_or_else(|| Error::Internal("no candidate order".into()))?;
    let th = x[theta];
    if !(th > 0.0) {
        return Err(Error::Internal(format!(
            "scaling variable {th} is not positive"
        )));
    }
    let coarse: Vec<f64> = x[1..].iter().map(|v| v / th).collect();
    Ok(VmaxEntry {
        value,
        gamma,
        witness: lumped.expand(inst, &coarse),
        lp_solves: solves,
        pivots,
        basis,
    })
}

/// `v_max(y, ·)` over all nonempty proper coalitions at a fixed grand order.
#[derive(Debug, Clone, PartialEq)]
pub struct VmaxTable {
    pub y: f64,
    pub n: usize,
    pub grand: GrandProfit,
    /// Indexed by mask; entries for ∅ and N are `None`.
    pub entries: Vec<Option<VmaxEntry>>,
}

impl VmaxTable {
    pub fn value(&self, s: Coalition) -> f64 {
        self.entries[s.bits() as usize]
            .as_ref()
            .map_or(0.0, |e| e.value)
    }

    pub fn entry(&self, s: Coalition) -> Option<&VmaxEntry> {
        self.entries[s.bits() as usize].as_ref()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Coalition, &VmaxEntry)> {
        self.entries
            .iter()
            .enumerate()
            .filter_map(|(m, e)| e.as_ref().map(|e| (Coalition(m as u64), e)))
    }

    /// The table as a game with `v(N) = 1`.
    pub fn as_game(&self) -> CharacteristicFunction {
        CharacteristicFunction::from_fn(self.n, |s| {
            if s == Coalition::grand(self.n) {
                1.0
            } else {
                self.value(s)
            }
        })
        .expect("table dimensions are valid")
    }
}

pub fn build_vmax_table(inst: &Instance, y: f64) -> Result<VmaxTable> {
    build_vmax_table_with(&Sequential, inst, y)
}

/// Builds the table, computing entries through `exec`.
pub fn build_vmax_table_with<E: Executor>(exec: &E, inst: &Instance, y: f64) -> Result<VmaxTable> {
    build_vmax_table_warm(exec, inst, y, None)
}

/// Builds the table, warm-starting each entry from `prev` (a table of the
/// same instance at another order) when given.
pub fn build_vmax_table_warm<E: Executor>(
    exec: &E,
    inst: &Instance,
    y: f64,
    prev: Option<&VmaxTable>,
) -> Result<VmaxTable> {
    let n = inst.num_players();
    if n > MAX_GAME_PLAYERS {
        return Err(Error::input(format!(
            "player count {n} above {MAX_GAME_PLAYERS}"
        )));
    }
    let grand = worst_grand_profit(inst, y)?;
    let full = (1usize << n) - 1;
    let computed = exec.map(full.saturating_sub(1), |j| {
        let s = Coalition(j as u64 + 1);
        match prev.and_then(|t| t.entry(s)) {
            Some(e) => vmax_warm(inst, &grand, s, &e.basis),
            None => vmax_given(inst, &grand, s),
        }
    });
    let mut entries = Vec::with_capacity(full + 1);
    entries.push(None);
    for e in computed {
        entries.push(Some(e?));
    }
    entries.push(None);
    Ok(VmaxTable {
        y,
        n,
        grand,
        entries,
    })
}

/// `σ(y)` and its least-core allocation for a table built at `y`.
pub fn sigma(table: &VmaxTable) -> Result<(f64, Vec<f64>)> {
    let (x, eps) = least_core_lp(table.n, 1.0, |s| table.value(s))?;
    Ok((eps, x))
}

/// Builds the table at `y` (warm-started from `prev`) and returns `σ(y)`.
pub fn sigma_at<E: Executor>(
    exec: &E,
    inst: &Instance,
    y: f64,
    prev: Option<&VmaxTable>,
) -> Result<(f64, Vec<f64>, VmaxTable)> {
    let table = build_vmax_table_warm(exec, inst, y, prev)?;
    let (eps, x) = sigma(&table)?;
    Ok((eps, x, table))
}

/// Outcome of the robust core test at the worst-case optimal grand order.
#[derive(Debug, Clone, PartialEq)]
pub struct CoreReport {
    pub y: f64,
    pub sigma: f64,
    pub allocation: Vec<f64>,
    pub table: VmaxTable,
}

impl CoreReport {
    pub fn decision(&self) -> Option<Decision> {
        (self.sigma <= CORE_TOL).then(|| Decision::new(self.y, self.allocation.clone()))
    }
}

pub fn robust_core_report<E: Executor>(exec: &E, inst: &Instance) -> Result<CoreReport> {
    let y = worst_case_grand_order(inst)?.y_star;
    let (sigma, allocation, table) = sigma_at(exec, inst, y, None)?;
    Ok(CoreReport {
        y,
        sigma,
        allocation,
        table,
    })
}

/// A robust core decision if one exists. Only `y*_wc(N)` can support one.
pub fn robust_core(inst: &Instance) -> Result<Option<Decision>> {
    robust_core_with(&Sequential, inst)
}

pub fn robust_core_with<E: Executor>(exec: &E, inst: &Instance) -> Result<Option<Decision>> {
    Ok(robust_core_report(exec, inst)?.decision())
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeastCoreResult {
    pub decision: Decision,
    pub epsilon: f64,
    /// `σ(y*_wc(N))`, the value at the worst-case optimal order.
    pub sigma_at_wc: f64,
    pub y_wc: f64,
    pub interval: (f64, f64),
}

/// Minimizes the convex function `σ` over `Y(N)` by golden-section search.
/// `y_tol` defaults to `1e-4` of the interval width.
pub fn robust_least_core(inst: &Instance, y_tol: Option<f64>) -> Result<LeastCoreResult> {
    robust_least_core_with(&Sequential, inst, y_tol)
}

pub fn robust_least_core_with<E: Executor>(
    exec: &E,
    inst: &Instance,
    y_tol: Option<f64>,
) -> Result<LeastCoreResult> {
    let (lo, hi) = grand_action_interval(inst)?;
    let y_wc = worst_case_grand_order(inst)?.y_star;
    let (s_wc, x_wc, table_wc) = sigma_at(exec, inst, y_wc, None)?;
    let tol = y_tol.unwrap_or(1e-4 * (hi - lo));
    if !(tol > 0.0) {
        return Err(Error::input(format!(
            "search tolerance {tol} must be positive"
        )));
    }
    let mut best = (s_wc, y_wc, x_wc);
    if hi > lo && inst.num_players() > 1 {
        let mut last = table_wc;
        let mut best_seen: Option<(f64, f64, Vec<f64>)> = None;
        let found = golden_section(
            |y| {
                let (s, x, table) = sigma_at(exec, inst, y, Some(&last))?;
                last = table;
                if best_seen.as_ref().is_none_or(|b| s < b.0) {
                    best_seen = Some((s, y, x));
                }
                Ok::<_, Error>(s)
            },
            lo,
            hi,
            tol,
            MAX_SEARCH_ITER,
        )?;
        if let Some((s, y, x)) = best_seen {
            debug_assert_eq!(s, found.value);
            if s < best.0 {
                best = (s, y, x);
            }
        }
    }
    Ok(LeastCoreResult {
        decision: Decision::new(best.1, best.2),
        epsilon: best.0,
        sigma_at_wc: s_wc,
        y_wc,
        interval: (lo, hi),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImputationCertificate {
    pub y: f64,
    /// `Σ_i v_max(y, {i})`
    pub sum: f64,
    /// `z_i = v_max(y, {i}) + (1 - sum) / n`
    pub z: Vec<f64>,
}

/// Checks `Σ_i v_max(y*_wc(N), {i}) ≤ 1` and builds the individually rational
/// multiples `z` from the slack.
pub fn imputation_exists(inst: &Instance) -> Result<(bool, ImputationCertificate)> {
    let n = inst.num_players();
    let y = worst_case_grand_order(inst)?.y_star;
    let grand = worst_grand_profit(inst, y)?;
    let singles: Vec<f64> = if n == 1 {
        vec![1.0]
    } else {
        (0..n)
            .map(|i| vmax_given(inst, &grand, Coalition::singleton(i)).map(|e| e.value))
            .collect::<Result<_>>()?
    };
    let sum: f64 = singles.iter().sum();
    let share = (1.0 - sum) / n as f64;
    let z = singles.iter().map(|v| v + share).collect();
    Ok((sum <= 1.0 + CORE_TOL, ImputationCertificate { y, sum, z }))
}

/// Deterministic game of block `r` under its known marginal, players
/// re-indexed in block order.
pub fn block_game(inst: &Instance, r: usize) -> Result<CharacteristicFunction> {
    let members = &inst.partition[r];
    CharacteristicFunction::from_fn(members.len(), |t| {
        let s = Coalition::from_members(t.members().map(|j| members[j]));
        ScalarDemand::block(inst, r, s)
            .optimal(inst.price, inst.cost)
            .value
    })
}

/// Structural test of a claimed robust core decision: the order must be
/// `y*_wc(N)` and, on every block, `v_wc(N)·z` must lie in the core of the
/// block's deterministic game.
pub fn verify_rcore2(inst: &Instance, d: &Decision, tol: f64) -> Result<bool> {
    let n = inst.num_players();
    if d.z.len() != n {
        return Err(Error::input(format!(
            "decision has {} multiples for {n} players",
            d.z.len()
        )));
    }
    let wc = worst_case_grand_order(inst)?;
    if (d.y - wc.y_star).abs() > tol {
        return Ok(false);
    }
    for r in 0..inst.num_blocks() {
        let game = block_game(inst, r)?;
        let x: Vec<f64> = inst.partition[r]
            .iter()
            .map(|&i| wc.value * d.z[i])
            .collect();
        if !core_membership(&game, &x, tol) {
            return Ok(false);
        }
    }
    Ok(true)
}
