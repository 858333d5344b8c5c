//! Brute-force oracles and random fixtures shared by the integration and
//! acceptance tests.
#![allow(dead_code)]

use nvgame_core::distributions::{
    aggregate_demand, product_support, DiscreteMarginal, Instance, JointDistribution,
};
use nvgame_core::lp::{LinearProgram, Sense};
use nvgame_core::newsvendor::ScalarDemand;
use nvgame_core::stress::{gen_instance, ExperimentConfig};
use nvgame_core::Coalition;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Bounds for random instances.
#[derive(Debug, Clone, Copy)]
pub struct Shape {
    pub max_players: usize,
    pub max_blocks: usize,
    pub max_atoms: usize,
    /// Cap on the joint support size.
    pub max_joint: usize,
    pub lo: u32,
    pub hi: u32,
}

impl Shape {
    pub const fn new(max_players: usize, max_atoms: usize, max_joint: usize) -> Self {
        Self {
            max_players,
            max_blocks: 3,
            max_atoms,
            max_joint,
            lo: 1,
            hi: 10,
        }
    }
}

/// A random instance within `shape`, fully determined by `seed`.
pub fn random_instance(seed: u64, shape: Shape) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(2..=shape.max_players);
    let blocks = rng.random_range(1..=shape.max_blocks.min(n));
    // random composition of n into `blocks` positive parts
    let mut sizes = vec![1; blocks];
    for _ in blocks..n {
        sizes[rng.random_range(0..blocks)] += 1;
    }
    let mut atoms = Vec::with_capacity(blocks);
    let mut joint = 1;
    for r in 0..blocks {
        // leave room for the remaining blocks to have at least one atom
        let room = (shape.max_joint / joint).max(1);
        let k = rng.random_range(1..=shape.max_atoms.min(room));
        joint *= k;
        atoms.push(k);
        let _ = r;
    }
    let cfg = ExperimentConfig {
        n,
        block_sizes: sizes,
        atoms_per_block: atoms,
        support_lo: shape.lo,
        support_hi: shape.hi,
        num_instances: 1,
        ..ExperimentConfig::default()
    };
    gen_instance(&cfg, rng.random()).expect("valid random config")
}

/// Solves the square system `a x = b` by Gaussian elimination; `None` if
/// (numerically) singular.
pub fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-9 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for i in 0..n {
            if i != col {
                let f = a[i][col] / a[col][col];
                if f != 0.0 {
                    for j in col..n {
                        a[i][j] -= f * a[col][j];
                    }
                    b[i] -= f * b[col];
                }
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

/// Rank of a dense matrix.
pub fn rank(rows: &[Vec<f64>], tol: f64) -> usize {
    let mut a = rows.to_vec();
    let ncols = a.first().map_or(0, Vec::len);
    let mut r = 0;
    for col in 0..ncols {
        let Some(piv) = (r..a.len()).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
        else {
            break;
        };
        if a[piv][col].abs() <= tol {
            continue;
        }
        a.swap(r, piv);
        for i in r + 1..a.len() {
            let f = a[i][col] / a[r][col];
            for j in col..ncols {
                a[i][j] -= f * a[r][j];
            }
        }
        r += 1;
    }
    r
}

/// Inequality form of an LP: rows `a·x <= b` (equalities as two rows) and
/// finite lower bounds as `-x_j <= -l_j`, with the minimization objective.
pub struct DenseForm {
    pub c: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
    /// Rows that must be tight (equalities).
    pub tight: Vec<bool>,
}

pub fn dense_form(lp: &LinearProgram) -> DenseForm {
    let n = lp.objective.len();
    let sign = match lp.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let dense = |row: &[(usize, f64)]| {
        let mut v = vec![0.0; n];
        for &(j, a) in row {
            v[j] += a;
        }
        v
    };
    let mut f = DenseForm {
        c: lp.objective.iter().map(|c| sign * c).collect(),
        rows: Vec::new(),
        rhs: Vec::new(),
        tight: Vec::new(),
    };
    for (row, b) in lp.eq.rows().zip(&lp.eq_rhs) {
        f.rows.push(dense(row));
        f.rhs.push(*b);
        f.tight.push(true);
    }
    for (row, b) in lp.ub.rows().zip(&lp.ub_rhs) {
        f.rows.push(dense(row));
        f.rhs.push(*b);
        f.tight.push(false);
    }
    for (j, l) in lp.lower.iter().enumerate() {
        if l.is_finite() {
            let mut v = vec![0.0; n];
            v[j] = -1.0;
            f.rows.push(v);
            f.rhs.push(-l);
            f.tight.push(false);
        }
    }
    f
}

impl DenseForm {
    pub fn feasible(&self, x: &[f64], tol: f64) -> bool {
        self.rows
            .iter()
            .zip(&self.rhs)
            .zip(&self.tight)
            .all(|((a, b), t)| {
                let ax: f64 = a.iter().zip(x).map(|(a, x)| a * x).sum();
                if *t {
                    (ax - b).abs() <= tol
                } else {
                    ax <= b + tol
                }
            })
    }

    /// Constraints active at `x`.
    pub fn active(&self, x: &[f64], tol: f64) -> Vec<Vec<f64>> {
        self.rows
            .iter()
            .zip(&self.rhs)
            .filter(|(a, b)| {
                let ax: f64 = a.iter().zip(x).map(|(a, x)| a * x).sum();
                (ax - *b).abs() <= tol
            })
            .map(|(a, _)| a.clone())
            .collect()
    }

    /// Every vertex of the feasible polyhedron, by trying all `n`-subsets of
    /// constraints as the active set.
    pub fn vertices(&self) -> Vec<Vec<f64>> {
        let n = self.c.len();
        let m = self.rows.len();
        let mut out: Vec<Vec<f64>> = Vec::new();
        let mut pick = Vec::with_capacity(n);
        fn rec(
            f: &DenseForm,
            start: usize,
            n: usize,
            m: usize,
            pick: &mut Vec<usize>,
            out: &mut Vec<Vec<f64>>,
        ) {
            if pick.len() == n {
                let a = pick.iter().map(|&i| f.rows[i].clone()).collect();
                let b = pick.iter().map(|&i| f.rhs[i]).collect();
                if let Some(x) = solve_square(a, b) {
                    if f.feasible(&x, 1e-9)
                        && !out
                            .iter()
                            .any(|v| v.iter().zip(&x).all(|(a, b)| (a - b).abs() < 1e-9))
                    {
                        out.push(x);
                    }
                }
                return;
            }
            for i in start..m {
                pick.push(i);
                rec(f, i + 1, n, m, pick, out);
                pick.pop();
            }
        }
        rec(self, 0, n, m, &mut pick, &mut out);
        out
    }

    /// Minimum of `c·x` over the vertices, if any.
    pub fn brute_force_min(&self) -> Option<f64> {
        self.vertices()
            .iter()
            .map(|x| self.c.iter().zip(x).map(|(c, x)| c * x).sum::<f64>())
            .min_by(f64::total_cmp)
    }
}

/// Explicit LP dual of the minimization form of `lp`, as a maximization:
/// multipliers `u` (free) for equalities, `w >= 0` for `<=` rows entering
/// with a minus sign, `s >= 0` for finite lower bounds.
pub fn dual_program(lp: &LinearProgram) -> LinearProgram {
    let n = lp.objective.len();
    let sign = match lp.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let m_eq = lp.eq.nrows();
    let m_ub = lp.ub.nrows();
    let finite: Vec<usize> = (0..n).filter(|&j| lp.lower[j].is_finite()).collect();
    let nv = m_eq + m_ub + finite.len();
    let mut obj = vec![0.0; nv];
    obj[..m_eq].copy_from_slice(&lp.eq_rhs);
    for (i, b) in lp.ub_rhs.iter().enumerate() {
        obj[m_eq + i] = -b;
    }
    for (t, &j) in finite.iter().enumerate() {
        obj[m_eq + m_ub + t] = lp.lower[j];
    }
    let mut dual = LinearProgram::new(Sense::Maximize, obj);
    let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (i, row) in lp.eq.rows().enumerate() {
        for &(j, a) in row {
            cols[j].push((i, a));
        }
    }
    for (i, row) in lp.ub.rows().enumerate() {
        for &(j, a) in row {
            cols[j].push((m_eq + i, -a));
        }
    }
    for (t, &j) in finite.iter().enumerate() {
        cols[j].push((m_eq + m_ub + t, 1.0));
    }
    for j in 0..n {
        dual.add_eq(cols[j].iter().copied(), sign * lp.objective[j]);
    }
    for i in 0..m_eq {
        dual.set_free(i);
    }
    dual
}

/// Random LP over at most three variables with a bounding box, so it is
/// either infeasible or has an optimal vertex.
pub fn random_boxed_lp(rng: &mut ChaCha8Rng) -> LinearProgram {
    let n = rng.random_range(1..=3);
    let sense = if rng.random() {
        Sense::Minimize
    } else {
        Sense::Maximize
    };
    let obj = (0..n).map(|_| rng.random_range(-3..=3) as f64).collect();
    let mut lp = LinearProgram::new(sense, obj);
    for j in 0..n {
        match rng.random_range(0..3) {
            0 => {}
            1 => lp.set_lower(j, rng.random_range(-2..=2) as f64),
            _ => {
                lp.set_free(j);
                lp.add_le([(j, -1.0)], 4.0);
            }
        }
        lp.add_le([(j, 1.0)], 4.0);
    }
    // a point inside the box that equality rows pass through half the time
    let x0: Vec<f64> = (0..n).map(|_| rng.random_range(0..=3) as f64).collect();
    for _ in 0..rng.random_range(0..=2) {
        let row: Vec<(usize, f64)> = (0..n)
            .map(|j| (j, rng.random_range(-3..=3) as f64))
            .collect();
        let rhs = if rng.random() {
            row.iter().map(|(j, a)| a * x0[*j]).sum()
        } else {
            rng.random_range(-4..=6) as f64
        };
        lp.add_eq(row, rhs);
    }
    for _ in 0..rng.random_range(0..=4) {
        let row: Vec<(usize, f64)> = (0..n)
            .map(|j| (j, rng.random_range(-3..=3) as f64))
            .collect();
        lp.add_le(row, rng.random_range(-2..=6) as f64);
    }
    lp
}

/// Consistency system of `Q` as dense rows (one per block atom, last row the
/// total mass) and its right-hand side.
pub fn consistency_system(inst: &Instance) -> (Vec<Vec<f64>>, Vec<f64>) {
    let support = product_support(inst).unwrap();
    let k = support.len();
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for (r, m) in inst.marginals.iter().enumerate() {
        for (l, p) in m.probs.iter().enumerate() {
            rows.push(
                (0..k)
                    .map(|j| if support.tuple(j)[r] == l { 1.0 } else { 0.0 })
                    .collect(),
            );
            rhs.push(*p);
        }
    }
    rows.push(vec![1.0; k]);
    rhs.push(1.0);
    (rows, rhs)
}

/// All vertices of `Q`: basic solutions over every linearly independent
/// column subset.
pub fn q_vertices(inst: &Instance) -> Vec<Vec<f64>> {
    let (rows, rhs) = consistency_system(inst);
    let k = rows[0].len();
    let rk = rank(&rows, 1e-9);
    let mut out: Vec<Vec<f64>> = Vec::new();
    assert!(
        k <= 20,
        "vertex enumeration is exponential in the support size"
    );
    for mask in 1u32..(1 << k) {
        let cols: Vec<usize> = (0..k).filter(|j| mask >> j & 1 == 1).collect();
        if cols.len() > rk {
            continue;
        }
        let sub: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| cols.iter().map(|&j| r[j]).collect())
            .collect();
        if rank(&sub, 1e-9) < cols.len() {
            continue;
        }
        // least squares through the normal equations; exact when consistent
        let ata: Vec<Vec<f64>> = (0..cols.len())
            .map(|a| {
                (0..cols.len())
                    .map(|b| sub.iter().map(|r| r[a] * r[b]).sum())
                    .collect()
            })
            .collect();
        let atb: Vec<f64> = (0..cols.len())
            .map(|a| sub.iter().zip(&rhs).map(|(r, b)| r[a] * b).sum())
            .collect();
        let Some(xb) = solve_square(ata, atb) else {
            continue;
        };
        let mut q = vec![0.0; k];
        for (t, &j) in cols.iter().enumerate() {
            q[j] = xb[t];
        }
        let residual = rows
            .iter()
            .zip(&rhs)
            .map(|(r, b)| (r.iter().zip(&q).map(|(a, x)| a * x).sum::<f64>() - b).abs())
            .fold(0.0, f64::max);
        if residual > 1e-9 || q.iter().any(|v| *v < -1e-12) {
            continue;
        }
        let q: Vec<f64> = q.iter().map(|v| v.max(0.0)).collect();
        if !out
            .iter()
            .any(|v| v.iter().zip(&q).all(|(a, b)| (a - b).abs() < 1e-9))
        {
            out.push(q);
        }
    }
    out
}

/// Aggregate demand of `s` at every joint atom.
pub fn joint_demands(inst: &Instance, s: Coalition) -> Vec<f64> {
    let support = product_support(inst).unwrap();
    (0..support.len())
        .map(|k| aggregate_demand(support.atom(k), s))
        .collect()
}

pub fn shortage(d: &[f64], q: &[f64], y: f64) -> f64 {
    d.iter().zip(q).map(|(d, q)| q * (y - d).max(0.0)).sum()
}

/// Worst-case grand profit at `y` over the enumerated vertices.
pub fn grand_min_profit(inst: &Instance, vertices: &[Vec<f64>], y: f64) -> f64 {
    let dn = joint_demands(inst, inst.grand());
    let (p, c) = (inst.price, inst.cost);
    vertices
        .iter()
        .map(|q| (p - c) * y - p * shortage(&dn, q, y))
        .fold(f64::INFINITY, f64::min)
}

/// `v_max(y, S)` by enumeration: mixed coalitions maximize the profit ratio
/// over distinct support sums `γ` and vertices of `Q`; coalitions inside one
/// block divide their fixed optimal profit by the worst grand profit.
pub fn vmax_oracle(inst: &Instance, vertices: &[Vec<f64>], y: f64, s: Coalition) -> f64 {
    let blocks = inst.blocks_meeting(s);
    if blocks.len() == 1 {
        let v = ScalarDemand::block(inst, blocks[0], s)
            .optimal(inst.price, inst.cost)
            .value;
        return v / grand_min_profit(inst, vertices, y);
    }
    let ds = joint_demands(inst, s);
    let dn = joint_demands(inst, inst.grand());
    let (p, c) = (inst.price, inst.cost);
    let mut best = f64::NEG_INFINITY;
    for q in vertices {
        let den = (p - c) * y - p * shortage(&dn, q, y);
        for &g in &ds {
            let num = (p - c) * g - p * shortage(&ds, q, g);
            best = best.max(num / den);
        }
    }
    best
}

/// All joint support sums of `s` plus 0, deduplicated and sorted.
pub fn sum_grid(inst: &Instance, s: Coalition) -> Vec<f64> {
    let mut g = joint_demands(inst, s);
    g.push(0.0);
    g.sort_by(f64::total_cmp);
    g.dedup();
    g
}

pub fn is_vertex(q: &JointDistribution, vertices: &[Vec<f64>], tol: f64) -> bool {
    vertices
        .iter()
        .any(|v| v.iter().zip(&q.q).all(|(a, b)| (a - b).abs() <= tol))
}

/// Two scalar blocks with marginals `{1, 3}` equiprobable.
pub fn t2() -> Instance {
    Instance::new(
        2.0,
        1.0,
        vec![vec![0], vec![1]],
        vec![
            DiscreteMarginal::scalar(&[1.0, 3.0], &[0.5, 0.5]),
            DiscreteMarginal::scalar(&[1.0, 3.0], &[0.5, 0.5]),
        ],
    )
    .unwrap()
}

/// The two-retailer fixture with a singleton Frechet class.
pub fn t1() -> Instance {
    Instance::new(
        2.0,
        1.0,
        vec![vec![0], vec![1]],
        vec![
            DiscreteMarginal::scalar(&[1.0, 3.0], &[0.5, 0.5]),
            DiscreteMarginal::scalar(&[2.0], &[1.0]),
        ],
    )
    .unwrap()
}

/// Three retailers: `(d_0, d_1) = (u, D - u)` in one block and `d_2` in
/// another, both `u` uniform on `{1/K, …, 1}`; `p = 1.5`, `c = 1`.
pub fn example1(k: usize) -> Instance {
    let probs = vec![1.0 / k as f64; k];
    let u: Vec<f64> = (1..=k).map(|j| j as f64 / k as f64).collect();
    Instance::new(
        1.5,
        1.0,
        vec![vec![0, 1], vec![2]],
        vec![
            DiscreteMarginal::new(u.iter().map(|v| vec![*v, 1.0 - v]).collect(), probs.clone()),
            DiscreteMarginal::scalar(&u, &probs),
        ],
    )
    .unwrap()
}
