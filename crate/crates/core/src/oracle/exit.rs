//! Exact exit-time statistics for the Metropolis chain on `Σ_N(ρ_N)`.
//!
//! Builds the full transition kernel over all states (feasible only at small
//! N), conditions the initial law on an overlap interval `I = (a, b)`, and
//! computes the expected exit time by an absorbing-chain linear solve plus
//! `P(τ ≤ T)` by forward iteration of the surviving mass.

use crate::model::{Configuration, PlantedInstance};
use crate::oracle::combos::{binomial, visit_combinations, CombinationStep};
use crate::oracle::lse_combine;
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExitConfig {
    pub beta: f64,
    /// Open overlap interval `(a, b)`; interior states satisfy `a < m(x) < b`.
    pub interval: (f64, f64),
    /// Horizons at which `P(τ ≤ T)` is reported.
    pub t_grid: Vec<u64>,
    /// Cap on `C(N, Nρ_N)` when building the state space.
    pub state_budget: u128,
    /// Cap on the interior block size for the dense LU solve.
    pub dense_budget: usize,
}

impl ExitConfig {
    pub fn new(beta: f64, interval: (f64, f64)) -> Self {
        Self {
            beta,
            interval,
            t_grid: vec![1, 10, 100, 1000, 10_000],
            state_budget: 50_000,
            dense_budget: 4_000,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExitStatistics {
    pub n_states: usize,
    pub interior_states: usize,
    pub exit_states: usize,
    /// `E[τ]` under initial law `π_β(·|I)`; `None` flags an impossible exit
    /// (the interval contains every feasible overlap).
    pub expected_exit_time: Option<f64>,
    /// `(T, P(τ ≤ T))` on the requested horizon grid.
    pub p_exit_by: Vec<(u64, f64)>,
}

struct StateTable {
    supports: Vec<Vec<u32>>,
    energies: Vec<f64>,
    overlaps: Vec<u32>,
    /// binom[c][t] = C(c, t) for colex ranking.
    binom: Vec<Vec<u64>>,
    k: usize,
}

impl StateTable {
    fn build(inst: &PlantedInstance, budget: u128) -> Result<Self> {
        let n = inst.n();
        let k = inst.ones();
        let total = binomial(n, k);
        if total > budget {
            return Err(Error::BudgetExceeded { states: total, budget });
        }
        let total = total as usize;

        let mut binom = vec![vec![0u64; k + 1]; n + 1];
        for c in 0..=n {
            binom[c][0] = 1;
            for t in 1..=k.min(c) {
                binom[c][t] = binomial(c, t) as u64;
            }
        }

        let supports = vec![Vec::new(); total];
        let energies = vec![0.0; total];
        let overlaps = vec![0u32; total];

        let mut cfg = Configuration::new(inst, &(0..k).collect::<Vec<_>>())?;
        let mut table = Self { supports, energies, overlaps, binom, k };

        visit_combinations(n, k, |step| {
            if let CombinationStep::Swap { removed, added } = step {
                let delta = inst.swap_delta_unchecked(&cfg, removed, added);
                cfg.apply_swap_with_delta(inst, removed, added, delta);
            }
            let sup = cfg.support();
            let r = table.rank_of(&sup);
            table.supports[r] = sup.iter().map(|&x| x as u32).collect();
            table.energies[r] = cfg.energy();
            table.overlaps[r] = cfg.overlap_count() as u32;
        });

        Ok(table)
    }

    /// Colex rank of a sorted support: Σ_t C(c_t, t+1).
    fn rank_of(&self, sorted: &[usize]) -> usize {
        sorted
            .iter()
            .enumerate()
            .map(|(t, &c)| self.binom[c][t + 1] as usize)
            .sum()
    }

    fn rank_after_swap(&self, sorted: &[u32], out: u32, inn: u32) -> usize {
        debug_assert!(sorted.binary_search(&out).is_ok());
        let mut s: Vec<usize> = Vec::with_capacity(self.k);
        for &c in sorted {
            if c != out {
                s.push(c as usize);
            }
        }
        let pos = s.partition_point(|&c| c < inn as usize);
        s.insert(pos, inn as usize);
        self.rank_of(&s)
    }
}

/// Exact exit-time statistics via absorbing-chain solves under the module
/// `mcmc` Metropolis kernel, with initial law `π_β(·|I)`.
pub fn exact_exit_statistics(inst: &PlantedInstance, cfg: &ExitConfig) -> Result<ExitStatistics> {
    if cfg.beta < 0.0 {
        return Err(Error::InvalidParameter(format!("beta = {} < 0", cfg.beta)));
    }
    let (a, b) = cfg.interval;
    if !(a < b) {
        return Err(Error::InvalidParameter(format!("empty interval ({a}, {b})")));
    }
    let n = inst.n();
    let k = inst.ones();
    let table = StateTable::build(inst, cfg.state_budget)?;
    let n_states = table.supports.len();

    let inside = |c: u32| {
        let m = c as f64 / n as f64;
        m > a + 1e-12 && m < b - 1e-12
    };

    let interior: Vec<usize> = {
        let mut idx: Vec<usize> = (0..n_states).filter(|&s| inside(table.overlaps[s])).collect();
        // Order by overlap for cache locality in the dense block.
        idx.sort_by_key(|&s| (table.overlaps[s], s));
        idx
    };
    if interior.is_empty() {
        return Err(Error::EmptyInterval { lo: a, hi: b });
    }
    let exit_states = n_states - interior.len();

    let mut slot = vec![usize::MAX; n_states];
    for (i, &s) in interior.iter().enumerate() {
        slot[s] = i;
    }

    // Initial law π_β(· | I).
    let log_weights: Vec<f64> = interior.iter().map(|&s| cfg.beta * table.energies[s]).collect();
    let log_norm = lse_combine(log_weights.iter().cloned());
    let init: Vec<f64> = log_weights.iter().map(|&w| (w - log_norm).exp()).collect();

    if exit_states == 0 {
        // Exit impossible: +∞ expectation flag, P(τ ≤ T) ≡ 0.
        return Ok(ExitStatistics {
            n_states,
            interior_states: interior.len(),
            exit_states,
            expected_exit_time: None,
            p_exit_by: cfg.t_grid.iter().map(|&t| (t, 0.0)).collect(),
        });
    }

    // Interior-to-interior transition structure. The proposal is uniform over
    // the k(n−k) swap pairs; acceptance is min(1, e^{βΔ}).
    let prop = 1.0 / (k as f64 * (n - k) as f64);
    let mut neighbors: Vec<Vec<(u32, f64)>> = Vec::with_capacity(interior.len());
    let mut self_prob: Vec<f64> = Vec::with_capacity(interior.len());
    for &s in &interior {
        let sup = &table.supports[s];
        let e_s = table.energies[s];
        let mut row = Vec::new();
        let mut stay = 1.0;
        let mut is_one = vec![false; n];
        for &c in sup {
            is_one[c as usize] = true;
        }
        for &i in sup {
            for j in 0..n as u32 {
                if is_one[j as usize] {
                    continue;
                }
                let r = table.rank_after_swap(sup, i, j);
                let delta = table.energies[r] - e_s;
                let acc = if delta >= 0.0 { 1.0 } else { (cfg.beta * delta).exp() };
                let p = prop * acc;
                stay -= p;
                if slot[r] != usize::MAX {
                    row.push((slot[r] as u32, p));
                }
            }
        }
        neighbors.push(row);
        self_prob.push(stay.max(0.0));
    }

    // Expected exit time: (I − Q_II) t = 1, dense LU.
    let m = interior.len();
    let expected_exit_time = if m <= cfg.dense_budget {
        let mut mat = DMatrix::<f64>::zeros(m, m);
        for i in 0..m {
            mat[(i, i)] = 1.0 - self_prob[i];
            for &(j, p) in &neighbors[i] {
                mat[(i, j as usize)] -= p;
            }
        }
        let rhs = DVector::<f64>::from_element(m, 1.0);
        let lu = mat.lu();
        let t = lu
            .solve(&rhs)
            .ok_or_else(|| Error::NonConverged("singular exit-time system".into()))?;
        Some(init.iter().zip(t.iter()).map(|(p, ti)| p * ti).sum())
    } else {
        return Err(Error::BudgetExceeded {
            states: m as u128,
            budget: cfg.dense_budget as u128,
        });
    };

    // P(τ ≤ T): push surviving mass through the interior block.
    let mut p_exit_by = Vec::with_capacity(cfg.t_grid.len());
    let mut grid = cfg.t_grid.clone();
    grid.sort_unstable();
    let mut mass = init;
    let mut next = vec![0.0; m];
    let mut t_now = 0u64;
    for &t_target in &grid {
        while t_now < t_target {
            next.iter_mut().for_each(|v| *v = 0.0);
            for i in 0..m {
                let mi = mass[i];
                if mi == 0.0 {
                    continue;
                }
                next[i] += mi * self_prob[i];
                for &(j, p) in &neighbors[i] {
                    next[j as usize] += mi * p;
                }
            }
            std::mem::swap(&mut mass, &mut next);
            t_now += 1;
        }
        let survival: f64 = mass.iter().sum();
        p_exit_by.push((t_target, (1.0 - survival).clamp(0.0, 1.0)));
    }

    Ok(ExitStatistics {
        n_states,
        interior_states: m,
        exit_states,
        expected_exit_time,
        p_exit_by,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::PlantedInstance;

    #[test]
    fn full_interval_means_no_exit() {
        let inst = PlantedInstance::generate(8, 0.5, 1.0, 0).unwrap();
        let cfg = ExitConfig::new(1.0, (-1.0, 1.0));
        let st = exact_exit_statistics(&inst, &cfg).unwrap();
        assert_eq!(st.exit_states, 0);
        assert!(st.expected_exit_time.is_none());
        for (_, p) in st.p_exit_by {
            assert_eq!(p, 0.0);
        }
    }

    #[test]
    fn empty_interval_is_an_error() {
        let inst = PlantedInstance::generate(8, 0.5, 1.0, 0).unwrap();
        let cfg = ExitConfig::new(1.0, (0.9, 0.95));
        assert!(matches!(
            exact_exit_statistics(&inst, &cfg),
            Err(Error::EmptyInterval { .. })
        ));
    }

    #[test]
    fn p_exit_is_monotone_in_t() {
        let inst = PlantedInstance::generate(8, 0.5, 2.0, 5).unwrap();
        let mut cfg = ExitConfig::new(1.0, (0.05, 0.45));
        cfg.t_grid = vec![1, 2, 5, 10, 50, 200];
        let st = exact_exit_statistics(&inst, &cfg).unwrap();
        for w in st.p_exit_by.windows(2) {
            assert!(w[1].1 >= w[0].1 - 1e-12);
        }
        assert!(st.p_exit_by.last().unwrap().1 > 0.0);
    }

    #[test]
    fn unbiased_walk_matches_birth_death_reduction() {
        // At β = 0 the overlap count is itself a birth-death chain:
        // p(c→c+1) = (k−c)²/(k(n−k)), p(c→c−1) = c(n−2k+c)/(k(n−k)).
        // Solving that 1-D chain gives an independent expected exit time.
        let n = 8;
        let k = 4;
        let inst = PlantedInstance::generate(n, 0.5, 3.0, 11).unwrap();
        let cfg = ExitConfig::new(0.0, (0.05, 0.45)); // interior counts {1,2,3}
        let st = exact_exit_statistics(&inst, &cfg).unwrap();

        let denom = (k * (n - k)) as f64;
        let up = |c: usize| ((k - c) * (k - c)) as f64 / denom;
        let down = |c: usize| (c * (n - 2 * k + c)) as f64 / denom;
        // Interior counts 1..=3; t_c = 1 + p_up t_{c+1} + p_down t_{c−1} + p_stay t_c.
        let counts = [1usize, 2, 3];
        let mut a = [[0.0f64; 3]; 3];
        for (row, &c) in counts.iter().enumerate() {
            a[row][row] = up(c) + down(c);
            if row + 1 < 3 {
                a[row][row + 1] = -up(c);
            }
            if row > 0 {
                a[row][row - 1] = -down(c);
            }
        }
        // Solve 3×3 with Gaussian elimination.
        let mut rhs = [1.0f64; 3];
        for col in 0..3 {
            let piv = a[col][col];
            for row in col + 1..3 {
                let f = a[row][col] / piv;
                for cc in col..3 {
                    a[row][cc] -= f * a[col][cc];
                }
                rhs[row] -= f * rhs[col];
            }
        }
        let mut t = [0.0f64; 3];
        for row in (0..3).rev() {
            let mut acc = rhs[row];
            for cc in row + 1..3 {
                acc -= a[row][cc] * t[cc];
            }
            t[row] = acc / a[row][row];
        }
        // β = 0: initial law is uniform over interior states, so weight each
        // count by its class size.
        let w = [
            (binomial(4, 1) * binomial(4, 3)) as f64,
            (binomial(4, 2) * binomial(4, 2)) as f64,
            (binomial(4, 3) * binomial(4, 1)) as f64,
        ];
        let tot: f64 = w.iter().sum();
        let expect: f64 = w.iter().zip(t.iter()).map(|(wi, ti)| wi * ti).sum::<f64>() / tot;

        let got = st.expected_exit_time.unwrap();
        assert!(
            (got - expect).abs() < 1e-8 * expect,
            "lumped {expect} vs full {got}"
        );
    }
}
