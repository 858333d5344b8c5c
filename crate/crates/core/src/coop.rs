//! Transferable-utility games: characteristic functions, core, least core and
//! the LP-duality balancedness check.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::coalition::Coalition;
use crate::distributions::{joint_aggregates, Instance, JointDistribution};
use crate::error::{Error, Result};
use crate::exec::{Executor, Sequential};
use crate::lp::{solve_lp, LinearProgram, LpStatus, Sense};
use crate::newsvendor::ScalarDemand;

/// Largest player count for which all `2^n` coalitions are tabulated.
pub const MAX_GAME_PLAYERS: usize = 24;

/// Default tolerance of the membership predicates.
pub const DEFAULT_TOL: f64 = 1e-7;

/// `v(S)` for every coalition, indexed by bitmask; `v(∅) = 0`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CharacteristicFunction {
    n: usize,
    values: Vec<f64>,
}

impl CharacteristicFunction {
    /// `values[mask]` for every mask in `0..2^n`; entry 0 must be zero.
    pub fn new(n: usize, values: Vec<f64>) -> Result<Self> {
        if n == 0 || n > MAX_GAME_PLAYERS {
            return Err(Error::input(format!(
                "player count {n} outside 1..={MAX_GAME_PLAYERS}"
            )));
        }
        if values.len() != 1 << n {
            return Err(Error::input(format!(
                "expected {} coalition values, found {}",
                1usize << n,
                values.len()
            )));
        }
        if values[0] != 0.0 {
            return Err(Error::input("v(empty set) must be 0"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::input("coalition values must be finite"));
        }
        Ok(Self { n, values })
    }

    pub fn from_fn<F: FnMut(Coalition) -> f64>(n: usize, mut f: F) -> Result<Self> {
        if n == 0 || n > MAX_GAME_PLAYERS {
            return Err(Error::input(format!(
                "player count {n} outside 1..={MAX_GAME_PLAYERS}"
            )));
        }
        let mut values = vec![0.0; 1 << n];
        for (m, v) in values.iter_mut().enumerate().skip(1) {
            *v = f(Coalition(m as u64));
        }
        Self::new(n, values)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn value(&self, s: Coalition) -> f64 {
        self.values[s.bits() as usize]
    }

    pub fn grand_value(&self) -> f64 {
        *self.values.last().unwrap()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

pub type Allocation = Vec<f64>;

/// `v(S) = v̄_q(S)`, the optimal expected profit of `S` under the joint
/// distribution `q`.
pub fn build_deterministic_game(
    inst: &Instance,
    q: &JointDistribution,
) -> Result<CharacteristicFunction> {
    build_deterministic_game_with(&Sequential, inst, q)
}

pub fn build_deterministic_game_with<E: Executor>(
    exec: &E,
    inst: &Instance,
    q: &JointDistribution,
) -> Result<CharacteristicFunction> {
    let n = inst.num_players();
    if n > MAX_GAME_PLAYERS {
        return Err(Error::input(format!(
            "player count {n} above {MAX_GAME_PLAYERS}"
        )));
    }
    let k = inst.check_support(crate::distributions::SUPPORT_CAP)?;
    if q.len() != k {
        return Err(Error::input(format!(
            "distribution has {} atoms, support has {k}",
            q.len()
        )));
    }
    let values = exec.map(1 << n, |m| -> Result<f64> {
        if m == 0 {
            return Ok(0.0);
        }
        let d = joint_aggregates(inst, Coalition(m as u64))?;
        Ok(ScalarDemand::new(d, q.q.clone())
            .optimal(inst.price, inst.cost)
            .value)
    });
    let values = values.into_iter().collect::<Result<Vec<f64>>>()?;
    CharacteristicFunction::new(n, values)
}

/// `min ε` subject to `x(N) = total` and `x(S) ≥ value(S) - ε` for every
/// nonempty proper `S`, rows in increasing mask order. With one player there
/// are no stability rows and `ε = -∞`.
pub fn least_core_lp<F: Fn(Coalition) -> f64>(
    n: usize,
    total: f64,
    value: F,
) -> Result<(Allocation, f64)> {
    if n == 0 {
        return Err(Error::input("least core of a game without players"));
    }
    if n == 1 {
        return Ok((vec![total], f64::NEG_INFINITY));
    }
    let eps = n;
    let mut obj = vec![0.0; n + 1];
    obj[eps] = 1.0;
    let mut lp = LinearProgram::new(Sense::Minimize, obj);
    for j in 0..=n {
        lp.set_free(j);
    }
    lp.add_eq((0..n).map(|i| (i, 1.0)), total);
    for s in Coalition::proper(n) {
        lp.add_ge(s.members().map(|i| (i, 1.0)).chain([(eps, 1.0)]), value(s));
    }
    let sol = solve_lp(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::Internal(format!(
            "least-core program reported {:?}",
            sol.status
        )));
    }
    let s = sol.x[eps];
    let mut x = sol.x;
    x.truncate(n);
    Ok((x, s))
}

/// Least-core allocation and `s(N, v)`.
pub fn least_core(v: &CharacteristicFunction) -> Result<(Allocation, f64)> {
    least_core_lp(v.n, v.grand_value(), |s| v.value(s))
}

/// `ε(N, v) = max(s(N, v), 0)`
pub fn least_core_epsilon(s_value: f64) -> f64 {
    s_value.max(0.0)
}

fn coalition_sum(x: &[f64], s: Coalition) -> f64 {
    s.members().map(|i| x[i]).sum()
}

fn efficient(v: &CharacteristicFunction, x: &[f64], tol: f64) -> bool {
    x.len() == v.n && (x.iter().sum::<f64>() - v.grand_value()).abs() <= tol
}

/// Efficiency and every proper-coalition stability constraint within `tol`.
pub fn core_membership(v: &CharacteristicFunction, x: &[f64], tol: f64) -> bool {
    efficient(v, x, tol) && Coalition::proper(v.n).all(|s| coalition_sum(x, s) >= v.value(s) - tol)
}

/// Efficiency and individual rationality within `tol`.
pub fn imputation_check(v: &CharacteristicFunction, x: &[f64], tol: f64) -> bool {
    efficient(v, x, tol) && (0..v.n).all(|i| x[i] >= v.value(Coalition::singleton(i)) - tol)
}

/// Optimal value of the balancedness dual
/// `max Σ_S y_S v(S) - p·v(N)` s.t. `Σ_{S∋i} y_S = p`, `y ≥ 0`, capped at
/// `p ≤ 1`. Zero certifies a nonempty core; without the cap an empty core
/// makes the program unbounded, so a positive value is the certificate.
pub fn balancedness_dual_check(v: &CharacteristicFunction) -> Result<f64> {
    let n = v.n;
    let proper: Vec<Coalition> = Coalition::proper(n).collect();
    let p = proper.len();
    let mut obj: Vec<f64> = proper.iter().map(|s| v.value(*s)).collect();
    obj.push(-v.grand_value());
    let mut lp = LinearProgram::new(Sense::Maximize, obj);
    for i in 0..n {
        let row = proper
            .iter()
            .enumerate()
            .filter(|(_, s)| s.contains(i))
            .map(|(j, _)| (j, 1.0))
            .chain([(p, -1.0)]);
        lp.add_eq(row, 0.0);
    }
    lp.add_le([(p, 1.0)], 1.0);
    let sol = solve_lp(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::Internal(format!(
            "balancedness dual reported {:?}",
            sol.status
        )));
    }
    Ok(sol.objective_value.max(0.0))
}

/// Optimal value of the primal feasibility program `x(S) ≥ v(S)` for all
/// nonempty proper `S` with the budget relaxed to `x(N) ≤ v(N) + t`,
/// minimizing the overrun `t ≥ 0`. It is zero exactly when the core is
/// nonempty and equals [`balancedness_dual_check`] by strong duality.
pub fn balancedness_primal_check(v: &CharacteristicFunction) -> Result<f64> {
    let n = v.n;
    let t = n;
    let mut obj = vec![0.0; n + 1];
    obj[t] = 1.0;
    let mut lp = LinearProgram::new(Sense::Minimize, obj);
    for i in 0..n {
        lp.set_free(i);
    }
    for s in Coalition::proper(n) {
        lp.add_ge(s.members().map(|i| (i, 1.0)), v.value(s));
    }
    lp.add_le((0..n).map(|i| (i, 1.0)).chain([(t, -1.0)]), v.grand_value());
    let sol = solve_lp(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::Internal(format!(
            "balancedness primal reported {:?}",
            sol.status
        )));
    }
    Ok(sol.objective_value)
}
