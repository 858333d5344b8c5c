//! Stress experiment: random instances, robust and independence-based
//! decisions, and their excess values under contaminated distributions.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::coalition::Coalition;
use crate::coop::{build_deterministic_game, least_core, MAX_GAME_PLAYERS};
use crate::distributions::{
    contaminate, independent_joint, sample_extremal, DiscreteMarginal, Instance, JointDistribution,
};
use crate::error::{Error, Result};
use crate::exec::{Executor, Sequential};
use crate::newsvendor::{expected_profit, optimal_order, ScalarDemand};
use crate::robust::{build_vmax_table, robust_core_report, robust_least_core, Decision, VmaxTable};

/// Distinct extremal distributions kept per instance.
pub const POOL_CAP: usize = 256;
const DEDUP_TOL: f64 = 1e-10;
const SEED_STRIDE: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct ExperimentConfig {
    pub n: usize,
    pub block_sizes: Vec<usize>,
    /// Integer demand range of every retailer, inclusive.
    pub support_lo: u32,
    pub support_hi: u32,
    /// `K_r` per block.
    pub atoms_per_block: Vec<usize>,
    pub price: f64,
    pub cost: f64,
    pub lambda_grid: Vec<f64>,
    /// Random-cost vertices drawn per instance.
    pub num_extremal: usize,
    pub num_instances: usize,
    pub seed: u64,
    /// Also evaluate the maximizing distributions found while building the
    /// robust table.
    pub include_witnesses: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n: 6,
            block_sizes: vec![3, 3],
            support_lo: 1,
            support_hi: 10,
            atoms_per_block: vec![4, 4],
            price: 1.5,
            cost: 1.0,
            lambda_grid: default_lambda_grid(),
            num_extremal: 40,
            num_instances: 20,
            seed: 0,
            include_witnesses: true,
        }
    }
}

/// `0, 0.1, …, 1`
pub fn default_lambda_grid() -> Vec<f64> {
    (0..=10).map(|i| i as f64 / 10.0).collect()
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.n > MAX_GAME_PLAYERS {
            return Err(Error::input(format!(
                "n: {} outside 1..={MAX_GAME_PLAYERS}",
                self.n
            )));
        }
        if self.block_sizes.is_empty() || self.block_sizes.contains(&0) {
            return Err(Error::input("block_sizes: blocks must be nonempty"));
        }
        let total: usize = self.block_sizes.iter().sum();
        if total != self.n {
            return Err(Error::input(format!(
                "block_sizes: sum {total} differs from n = {}",
                self.n
            )));
        }
        if self.atoms_per_block.len() != self.block_sizes.len() {
            return Err(Error::input(format!(
                "atoms_per_block: expected {} entries, found {}",
                self.block_sizes.len(),
                self.atoms_per_block.len()
            )));
        }
        if self.atoms_per_block.contains(&0) {
            return Err(Error::input("atoms_per_block: every block needs an atom"));
        }
        let support = self
            .atoms_per_block
            .iter()
            .fold(1u128, |a, k| a.saturating_mul(*k as u128));
        if support > crate::distributions::SUPPORT_CAP as u128 {
            return Err(Error::Capacity {
                size: support,
                cap: crate::distributions::SUPPORT_CAP,
            });
        }
        if self.support_lo > self.support_hi {
            return Err(Error::input(format!(
                "support_lo {} exceeds support_hi {}",
                self.support_lo, self.support_hi
            )));
        }
        let (p, c) = (self.price, self.cost);
        if !(p.is_finite() && c.is_finite() && 0.0 < c && c < p) {
            return Err(Error::input(format!(
                "prices must satisfy 0 < cost < price (cost {c}, price {p})"
            )));
        }
        if let Some(l) = self.lambda_grid.iter().find(|l| !(0.0..=1.0).contains(*l)) {
            return Err(Error::input(format!("lambda_grid: {l} outside [0, 1]")));
        }
        Ok(())
    }

    /// Seed of instance `i`.
    pub fn instance_seed(&self, i: usize) -> u64 {
        self.seed.wrapping_add((i as u64).wrapping_mul(SEED_STRIDE))
    }
}

/// Random instance: blocks are consecutive retailers, atoms uniform on the
/// integer box, probabilities normalized uniform draws.
pub fn gen_instance(cfg: &ExperimentConfig, instance_seed: u64) -> Result<Instance> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(instance_seed);
    gen_with(cfg, &mut rng)
}

fn gen_with(cfg: &ExperimentConfig, rng: &mut ChaCha8Rng) -> Result<Instance> {
    let mut partition = Vec::with_capacity(cfg.block_sizes.len());
    let mut marginals = Vec::with_capacity(cfg.block_sizes.len());
    let mut next = 0;
    for (&size, &k) in cfg.block_sizes.iter().zip(&cfg.atoms_per_block) {
        partition.push((next..next + size).collect());
        next += size;
        let atoms = (0..k)
            .map(|_| {
                (0..size)
                    .map(|_| rng.random_range(cfg.support_lo..=cfg.support_hi) as f64)
                    .collect()
            })
            .collect();
        let raw: Vec<f64> = (0..k).map(|_| 1.0 - rng.random::<f64>()).collect();
        let total: f64 = raw.iter().sum();
        let probs = raw.iter().map(|w| w / total).collect();
        marginals.push(DiscreteMarginal::new(atoms, probs));
    }
    Instance::new(cfg.price, cfg.cost, partition, marginals)
}

/// Both decisions of one instance, with the robust table behind the robust one.
#[derive(Debug, Clone)]
pub struct SolvedPair {
    pub robust: Decision,
    /// `σ` at the robust order; positive when the robust core is empty.
    pub robust_sigma: f64,
    pub det: Decision,
    pub table: VmaxTable,
}

/// Robust core decision (least core when the core is empty) and the
/// deterministic decision under the independent joint distribution.
pub fn solve_pair(inst: &Instance) -> Result<(Decision, Decision)> {
    let s = solve_pair_detailed(inst)?;
    Ok((s.robust, s.det))
}

pub fn solve_pair_detailed(inst: &Instance) -> Result<SolvedPair> {
    let report = robust_core_report(&Sequential, inst)?;
    let (robust, robust_sigma, table) = match report.decision() {
        Some(d) => (d, report.sigma, report.table),
        None => {
            let lc = robust_least_core(inst, None)?;
            let table = build_vmax_table(inst, lc.decision.y)?;
            (lc.decision, lc.epsilon, table)
        }
    };
    let p_i = independent_joint(inst)?;
    let grand = optimal_order(inst, &p_i, inst.grand())?;
    if !(grand.value > 0.0) {
        return Err(Error::GameInvalid(format!(
            "grand profit {} under independence is not positive",
            grand.value
        )));
    }
    let game = build_deterministic_game(inst, &p_i)?;
    let (x, _) = least_core(&game)?;
    let det = Decision::new(grand.y_star, x.iter().map(|v| v / grand.value).collect());
    Ok(SolvedPair {
        robust,
        robust_sigma,
        det,
        table,
    })
}

/// Best profit of every nonempty proper coalition under `q`, indexed by mask.
/// Coalitions inside one block order their fixed `y*(S)`.
pub fn coalition_profits(inst: &Instance, q: &JointDistribution) -> Result<Vec<f64>> {
    let n = inst.num_players();
    let mut out = vec![0.0; 1 << n];
    for s in Coalition::proper(n) {
        let blocks = inst.blocks_meeting(s);
        out[s.bits() as usize] = if blocks.len() == 1 {
            let y = ScalarDemand::block(inst, blocks[0], s)
                .optimal(inst.price, inst.cost)
                .y_star;
            expected_profit(inst, q, y, s)?
        } else {
            optimal_order(inst, q, s)?.value
        };
    }
    Ok(out)
}

/// `max_S (profit(S) / grand - z(S))^+` over nonempty proper `S`.
pub fn excess_from(profits: &[f64], grand: f64, d: &Decision) -> Result<f64> {
    if !(grand > 0.0) {
        return Err(Error::Degenerate(grand));
    }
    let n = d.z.len();
    Ok(Coalition::proper(n)
        .map(|s| profits[s.bits() as usize] / grand - d.coalition_share(s))
        .fold(0.0, f64::max))
}

/// Largest normalized dissatisfaction of any coalition with `d` when demand
/// follows `q`.
pub fn excess(inst: &Instance, q: &JointDistribution, d: &Decision) -> Result<f64> {
    if d.z.len() != inst.num_players() {
        return Err(Error::input(format!(
            "decision has {} multiples for {} players",
            d.z.len(),
            inst.num_players()
        )));
    }
    let grand = expected_profit(inst, q, d.y, inst.grand())?;
    excess_from(&coalition_profits(inst, q)?, grand, d)
}

/// Summary of one instance at one `λ`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ExcessRow {
    pub instance: usize,
    pub lambda: f64,
    pub rob_max: f64,
    pub rob_min: f64,
    pub rob_mean: f64,
    pub det_max: f64,
    pub det_min: f64,
    pub det_mean: f64,
    /// Samples excluded because a grand profit was not positive.
    pub degenerate: usize,
    /// Samples evaluated.
    pub samples: usize,
}

/// Per-instance facts recorded alongside the rows.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct InstanceSummary {
    pub instance: usize,
    pub seed: u64,
    pub robust: Decision,
    pub robust_sigma: f64,
    pub det: Decision,
    /// Distinct extremal distributions evaluated.
    pub pool: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ExcessStats {
    /// Instance-major, `λ` in grid order.
    pub rows: Vec<ExcessRow>,
    pub instances: Vec<InstanceSummary>,
}

impl ExcessStats {
    /// Rows pooled over instances, one per `λ`; `instance` is `usize::MAX`.
    pub fn pooled(&self, lambda_grid: &[f64]) -> Vec<ExcessRow> {
        lambda_grid
            .iter()
            .map(|&lambda| {
                let mut acc = Acc::default();
                let mut degenerate = 0;
                for r in self.rows.iter().filter(|r| r.lambda == lambda) {
                    if r.samples > 0 {
                        acc.merge(r);
                    }
                    degenerate += r.degenerate;
                }
                acc.row(usize::MAX, lambda, degenerate)
            })
            .collect()
    }

    pub fn degenerate_total(&self) -> usize {
        self.rows.iter().map(|r| r.degenerate).sum()
    }
}

#[derive(Default)]
struct Acc {
    rob: (f64, f64, f64),
    det: (f64, f64, f64),
    count: usize,
}

impl Acc {
    fn push(&mut self, rob: f64, det: f64) {
        if self.count == 0 {
            self.rob = (rob, rob, 0.0);
            self.det = (det, det, 0.0);
        }
        self.rob = (self.rob.0.max(rob), self.rob.1.min(rob), self.rob.2 + rob);
        self.det = (self.det.0.max(det), self.det.1.min(det), self.det.2 + det);
        self.count += 1;
    }

    fn merge(&mut self, r: &ExcessRow) {
        let k = r.samples as f64;
        if self.count == 0 {
            self.rob = (r.rob_max, r.rob_min, 0.0);
            self.det = (r.det_max, r.det_min, 0.0);
        }
        self.rob = (
            self.rob.0.max(r.rob_max),
            self.rob.1.min(r.rob_min),
            self.rob.2 + r.rob_mean * k,
        );
        self.det = (
            self.det.0.max(r.det_max),
            self.det.1.min(r.det_min),
            self.det.2 + r.det_mean * k,
        );
        self.count += r.samples;
    }

    fn row(&self, instance: usize, lambda: f64, degenerate: usize) -> ExcessRow {
        let (rob, det) = if self.count == 0 {
            (
                (f64::NAN, f64::NAN, f64::NAN),
                (f64::NAN, f64::NAN, f64::NAN),
            )
        } else {
            let k = self.count as f64;
            // clamp rounding so that min <= mean <= max holds exactly
            let mean = |t: (f64, f64, f64)| (t.0, t.1, (t.2 / k).clamp(t.1, t.0));
            (mean(self.rob), mean(self.det))
        };
        ExcessRow {
            instance,
            lambda,
            rob_max: rob.0,
            rob_min: rob.1,
            rob_mean: rob.2,
            det_max: det.0,
            det_min: det.1,
            det_mean: det.2,
            degenerate,
            samples: self.count,
        }
    }
}

fn push_distinct(pool: &mut Vec<JointDistribution>, q: JointDistribution) {
    if pool.len() >= POOL_CAP {
        return;
    }
    let dup = pool.iter().any(|p| {
        p.q.iter()
            .zip(&q.q)
            .all(|(a, b)| (a - b).abs() <= DEDUP_TOL)
    });
    if !dup {
        pool.push(q);
    }
}

/// Extremal pool of one instance: random-cost vertices, then the robust
/// table's maximizing distributions.
pub fn extremal_pool(
    inst: &Instance,
    cfg: &ExperimentConfig,
    table: Option<&VmaxTable>,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<JointDistribution>> {
    let k = inst.check_support(crate::distributions::SUPPORT_CAP)?;
    let mut pool = Vec::new();
    for _ in 0..cfg.num_extremal {
        let cost: Vec<f64> = (0..k).map(|_| rng.random::<f64>()).collect();
        push_distinct(&mut pool, sample_extremal(inst, &cost)?);
    }
    if let Some(t) = table {
        push_distinct(&mut pool, t.grand.witness.clone());
        for (_, e) in t.iter() {
            push_distinct(&mut pool, e.witness.clone());
        }
    }
    Ok(pool)
}

/// One instance of the experiment.
pub fn run_instance(cfg: &ExperimentConfig, i: usize) -> Result<(InstanceSummary, Vec<ExcessRow>)> {
    let seed = cfg.instance_seed(i);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inst = gen_with(cfg, &mut rng)?;
    let pair = solve_pair_detailed(&inst)?;
    let witnesses = cfg.include_witnesses.then_some(&pair.table);
    let pool = extremal_pool(&inst, cfg, witnesses, &mut rng)?;
    let p_i = independent_joint(&inst)?;
    let grand = inst.grand();
    let mut rows = Vec::with_capacity(cfg.lambda_grid.len());
    for &lambda in &cfg.lambda_grid {
        let mut acc = Acc::default();
        let mut degenerate = 0;
        let evaluate = |q: &JointDistribution| -> Result<Option<(f64, f64)>> {
            let profits = coalition_profits(&inst, q)?;
            let g_rob = expected_profit(&inst, q, pair.robust.y, grand)?;
            let g_det = expected_profit(&inst, q, pair.det.y, grand)?;
            match (
                excess_from(&profits, g_rob, &pair.robust),
                excess_from(&profits, g_det, &pair.det),
            ) {
                (Ok(r), Ok(d)) => Ok(Some((r, d))),
                (Err(Error::Degenerate(_)), _) | (_, Err(Error::Degenerate(_))) => Ok(None),
                (Err(e), _) | (_, Err(e)) => Err(e),
            }
        };
        let samples: Vec<JointDistribution> = if pool.is_empty() {
            vec![p_i.clone()]
        } else {
            pool.iter()
                .map(|ext| contaminate(&p_i, ext, lambda))
                .collect::<Result<_>>()?
        };
        for q in &samples {
            match evaluate(q)? {
                Some((r, d)) => acc.push(r, d),
                None => degenerate += 1,
            }
        }
        rows.push(acc.row(i, lambda, degenerate));
    }
    let summary = InstanceSummary {
        instance: i,
        seed,
        robust: pair.robust,
        robust_sigma: pair.robust_sigma,
        det: pair.det,
        pool: pool.len(),
    };
    Ok((summary, rows))
}

pub fn run_stress(cfg: &ExperimentConfig) -> Result<ExcessStats> {
    run_stress_with(&Sequential, cfg)
}

/// Instances run as independent work units; results keep instance order.
pub fn run_stress_with<E: Executor>(exec: &E, cfg: &ExperimentConfig) -> Result<ExcessStats> {
    cfg.validate()?;
    let results = exec.map(cfg.num_instances, |i| run_instance(cfg, i));
    let mut stats = ExcessStats::default();
    for r in results {
        let (summary, rows) = r?;
        stats.instances.push(summary);
        stats.rows.extend(rows);
    }
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::fixtures::{example1, t1};

    fn small() -> ExperimentConfig {
        ExperimentConfig {
            n: 4,
            block_sizes: vec![2, 2],
            atoms_per_block: vec![2, 3],
            num_extremal: 5,
            num_instances: 3,
            seed: 7,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn generation_is_deterministic_and_in_range() {
        let cfg = ExperimentConfig {
            n: 10,
            block_sizes: vec![4, 6],
            atoms_per_block: vec![3, 3],
            ..ExperimentConfig::default()
        };
        let a = gen_instance(&cfg, 11).unwrap();
        assert_eq!(a, gen_instance(&cfg, 11).unwrap());
        assert_ne!(a, gen_instance(&cfg, 12).unwrap());
        assert_eq!(a.support_size(), 9);
        for m in &a.marginals {
            assert!(m
                .atoms
                .iter()
                .flatten()
                .all(|v| (1.0..=10.0).contains(v) && v.fract() == 0.0));
            assert!(m.probs.iter().all(|p| *p > 0.0));
        }
        for r in 0..2 {
            assert!(a.block_min_demand(r) >= cfg.block_sizes[r] as f64);
        }
    }

    #[test]
    fn config_validation() {
        assert!(ExperimentConfig::default().validate().is_ok());
        let bad = [
            ExperimentConfig { n: 5, ..small() },
            ExperimentConfig {
                lambda_grid: vec![1.5],
                ..small()
            },
            ExperimentConfig {
                cost: 2.0,
                ..small()
            },
            ExperimentConfig {
                atoms_per_block: vec![2],
                ..small()
            },
            ExperimentConfig {
                support_lo: 5,
                support_hi: 4,
                ..small()
            },
        ];
        for cfg in bad {
            assert!(matches!(cfg.validate(), Err(Error::Input(_))), "{cfg:?}");
        }
    }

    #[test]
    fn t1_pair_coincides() {
        let (rob, det) = solve_pair(&t1()).unwrap();
        assert!((rob.y - 3.0).abs() < 1e-12);
        assert!((det.y - 3.0).abs() < 1e-12);
        for (a, b) in rob.z.iter().zip([1.0 / 3.0, 2.0 / 3.0]) {
            assert!((a - b).abs() < 1e-9);
        }
        for (a, b) in det.z.iter().zip(&rob.z) {
            assert!((a - b).abs() < 1e-9);
        }
        let q = independent_joint(&t1()).unwrap();
        assert!(excess(&t1(), &q, &rob).unwrap() < 1e-12);
    }

    #[test]
    fn excess_single_violated_coalition() {
        // player 0 alone earns 0.4 of the grand profit but gets nothing
        let profits = vec![0.0, 0.4, 0.5, 0.0];
        let d = Decision::new(1.0, vec![0.0, 1.0]);
        assert!((excess_from(&profits, 1.0, &d).unwrap() - 0.4).abs() < 1e-15);
        assert!(matches!(
            excess_from(&profits, 0.0, &d),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn empty_core_falls_back_to_least_core() {
        let inst = example1(10);
        let s = solve_pair_detailed(&inst).unwrap();
        assert!(s.robust_sigma > 0.0);
        assert!((s.robust.z.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn rows_are_ordered_and_reproducible() {
        let cfg = small();
        let a = run_stress(&cfg).unwrap();
        assert_eq!(a, run_stress(&cfg).unwrap());
        assert_eq!(a.rows.len(), 3 * 11);
        for r in &a.rows {
            assert!(r.rob_min >= 0.0 && r.det_min >= 0.0);
            assert!(r.rob_min <= r.rob_mean && r.rob_mean <= r.rob_max);
            assert!(r.det_min <= r.det_mean && r.det_mean <= r.det_max);
            if r.lambda == 0.0 {
                assert!(r.det_max <= 1e-9, "{r:?}");
            }
        }
        for r in a.pooled(&cfg.lambda_grid) {
            assert!(r.rob_min <= r.rob_mean && r.rob_mean <= r.rob_max);
        }
    }

    #[test]
    fn empty_pool_evaluates_independence_only() {
        let cfg = ExperimentConfig {
            num_extremal: 0,
            include_witnesses: false,
            num_instances: 1,
            ..small()
        };
        let stats = run_stress(&cfg).unwrap();
        assert_eq!(stats.instances[0].pool, 0);
        for r in &stats.rows {
            assert_eq!(r.samples + r.degenerate, 1);
            assert_eq!(r.rob_max, r.rob_min);
        }
    }
}
