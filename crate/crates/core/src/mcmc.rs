//! Reversible nearest-neighbor (Hamming-2) Metropolis dynamics on `Σ_N(ρ_N)`
//! targeting `π_β ∝ exp(β (x, Ax))`.
//!
//! A proposal picks a uniform pair (one-index, zero-index) — O(1) through the
//! configuration's index maps — and accepts with `min(1, e^{βΔ})`, so the
//! chain satisfies detailed balance with respect to `π_β` by construction.

use crate::model::{Configuration, PlantedInstance};
use crate::oracle::combos::{binomial, visit_combinations, CombinationStep};
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Steps between cache-drift audits during long runs.
const DRIFT_CHECK_STRIDE: u64 = 100_000;

/// Conditioned initialization samples π_β(·|I) exactly by enumeration up to
/// this many states; larger instances use reflected-chain burn-in.
const EXACT_INIT_BUDGET: u128 = 300_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitMode {
    /// Uniform draw from `Σ_N(ρ_N)`.
    Uniform,
    /// Start at the planted vector.
    Planted,
    /// Start from (approximately) `π_β(·|overlap ∈ (lo, hi))`: rejection
    /// sampling at small N, reflected-chain burn-in at large N.
    Conditioned { lo: f64, hi: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainConfig {
    pub beta: f64,
    pub steps: u64,
    #[serde(default)]
    pub burn_in: u64,
    /// Record every `record_stride`-th step (must divide `steps`).
    #[serde(default = "default_stride")]
    pub record_stride: u64,
    #[serde(default = "default_init")]
    pub init: InitMode,
    pub seed: u64,
    /// When set, arms the exit clock: the run reports the first step at which
    /// the overlap leaves the open interval `(a, b)`.
    #[serde(default)]
    pub exit_interval: Option<(f64, f64)>,
    /// End the run at the exit step (exit-time experiments); off by default
    /// so trajectories stay fully instrumented.
    #[serde(default)]
    pub stop_on_exit: bool,
}

fn default_stride() -> u64 {
    1
}

fn default_init() -> InitMode {
    InitMode::Uniform
}

impl ChainConfig {
    pub fn new(beta: f64, steps: u64, seed: u64) -> Self {
        Self {
            beta,
            steps,
            burn_in: 0,
            record_stride: 1,
            init: InitMode::Uniform,
            seed,
            exit_interval: None,
            stop_on_exit: false,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.beta < 0.0 {
            return Err(Error::InvalidParameter(format!("beta = {} < 0", self.beta)));
        }
        if self.record_stride == 0 || self.steps % self.record_stride != 0 {
            return Err(Error::InvalidParameter(format!(
                "record_stride {} must divide steps {}",
                self.record_stride, self.steps
            )));
        }
        if let Some((a, b)) = self.exit_interval {
            if !(a < b) {
                return Err(Error::InvalidParameter(format!(
                    "exit interval ({a}, {b}) is empty"
                )));
            }
        }
        Ok(())
    }
}

/// Instrumented output of one run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trajectory {
    /// Overlap counts `⟨X_t, v⟩` every `record_stride` steps (post burn-in),
    /// beginning with the initial state.
    pub overlap_series: Vec<u32>,
    /// `(X_t, A X_t)` on the same grid.
    pub energy_series: Vec<f64>,
    pub acceptance_rate: f64,
    /// First step at which the overlap left the armed interval; `None` while
    /// unarmed or when the run ended inside (the +∞ sentinel).
    pub exit_time: Option<u64>,
    pub mean_overlap: f64,
    pub final_energy: f64,
    /// Largest cache-vs-recompute energy drift observed in the audits.
    pub max_cache_drift: f64,
}

/// One Metropolis chain with its own RNG stream.
pub struct Chain<'a> {
    inst: &'a PlantedInstance,
    beta: f64,
    state: Configuration,
    rng: ChaCha12Rng,
    proposed: u64,
    accepted: u64,
}

impl<'a> Chain<'a> {
    pub fn new(inst: &'a PlantedInstance, beta: f64, state: Configuration, seed: u64) -> Self {
        Self {
            inst,
            beta,
            state,
            rng: ChaCha12Rng::seed_from_u64(seed),
            proposed: 0,
            accepted: 0,
        }
    }

    pub fn state(&self) -> &Configuration {
        &self.state
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }

    /// One proposal; returns true when accepted.
    #[inline]
    pub fn step(&mut self) -> bool {
        let ones = self.state.ones_list();
        let zeros = self.state.zeros_list();
        let i = ones[self.rng.random_range(0..ones.len())];
        let j = zeros[self.rng.random_range(0..zeros.len())];
        let delta = self.inst.swap_delta_unchecked(&self.state, i, j);
        self.proposed += 1;
        let accept = delta >= 0.0 || self.rng.random::<f64>() < (self.beta * delta).exp();
        if accept {
            self.state.apply_swap_with_delta(self.inst, i, j, delta);
            self.accepted += 1;
        }
        accept
    }

    /// One proposal restricted to moves that keep the overlap inside `(lo, hi)`
    /// (the reflected chain used for conditioned burn-in).
    #[inline]
    fn step_reflected(&mut self, lo: f64, hi: f64) -> bool {
        let n = self.inst.n() as f64;
        let ones = self.state.ones_list();
        let zeros = self.state.zeros_list();
        let i = ones[self.rng.random_range(0..ones.len())];
        let j = zeros[self.rng.random_range(0..zeros.len())];
        let mut next = self.state.overlap_count() as i64;
        if self.inst.is_planted(i) {
            next -= 1;
        }
        if self.inst.is_planted(j) {
            next += 1;
        }
        let m = next as f64 / n;
        if m <= lo + 1e-12 || m >= hi - 1e-12 {
            return false; // reflected at the boundary
        }
        let delta = self.inst.swap_delta_unchecked(&self.state, i, j);
        let accept = delta >= 0.0 || self.rng.random::<f64>() < (self.beta * delta).exp();
        if accept {
            self.state.apply_swap_with_delta(self.inst, i, j, delta);
        }
        accept
    }
}

fn overlap_in(inst: &PlantedInstance, count: usize, lo: f64, hi: f64) -> bool {
    let m = count as f64 / inst.n() as f64;
    m > lo + 1e-12 && m < hi - 1e-12
}

/// Draw the initial state for a run.
fn initial_state(
    inst: &PlantedInstance,
    config: &ChainConfig,
    rng: &mut ChaCha12Rng,
) -> Result<Configuration> {
    match &config.init {
        InitMode::Uniform => Ok(Configuration::uniform(inst, rng)),
        InitMode::Planted => Ok(Configuration::planted(inst)),
        InitMode::Conditioned { lo, hi } => {
            let (lo, hi) = (*lo, *hi);
            let n = inst.n();
            let k = inst.ones();
            let c_min = (2 * k).saturating_sub(n);
            let feasible = (c_min..=k).any(|c| overlap_in(inst, c, lo, hi));
            if !feasible {
                return Err(Error::EmptyInterval { lo, hi });
            }
            if binomial(n, k) <= EXACT_INIT_BUDGET {
                exact_conditioned_sample(inst, config.beta, lo, hi, rng)
            } else {
                // Deterministic seed state at the interval midpoint, then
                // reflected-chain burn-in of 50·N accepted moves.
                let mid = 0.5 * (lo + hi);
                let mut c = crate::model::q_index(n, mid).clamp(c_min, k);
                while !overlap_in(inst, c, lo, hi) {
                    if (c as f64 / n as f64) <= lo {
                        c += 1;
                    } else {
                        c -= 1;
                    }
                }
                let mut support: Vec<usize> = inst.support()[..c].to_vec();
                let outside: Vec<usize> =
                    (0..n).filter(|i| !inst.is_planted(*i)).take(k - c).collect();
                support.extend(outside);
                let x = Configuration::new(inst, &support)?;
                Ok(reflected_burn_in(inst, config, x, rng, lo, hi))
            }
        }
    }
}

/// Exact draw from π_β(·|overlap ∈ (lo, hi)) by a two-pass enumeration:
/// first the conditional log-normalizer, then inverse-CDF sampling along the
/// same deterministic walk.
fn exact_conditioned_sample(
    inst: &PlantedInstance,
    beta: f64,
    lo: f64,
    hi: f64,
    rng: &mut ChaCha12Rng,
) -> Result<Configuration> {
    let n = inst.n();
    let k = inst.ones();

    let mut max_e = f64::NEG_INFINITY;
    let mut cfg = Configuration::new(inst, &(0..k).collect::<Vec<_>>())?;
    visit_combinations(n, k, |step| {
        if let CombinationStep::Swap { removed, added } = step {
            let delta = inst.swap_delta_unchecked(&cfg, removed, added);
            cfg.apply_swap_with_delta(inst, removed, added, delta);
        }
        if overlap_in(inst, cfg.overlap_count(), lo, hi) && cfg.energy() > max_e {
            max_e = cfg.energy();
        }
    });
    if max_e == f64::NEG_INFINITY {
        return Err(Error::EmptyInterval { lo, hi });
    }

    let mut total = 0.0;
    let mut cfg = Configuration::new(inst, &(0..k).collect::<Vec<_>>())?;
    visit_combinations(n, k, |step| {
        if let CombinationStep::Swap { removed, added } = step {
            let delta = inst.swap_delta_unchecked(&cfg, removed, added);
            cfg.apply_swap_with_delta(inst, removed, added, delta);
        }
        if overlap_in(inst, cfg.overlap_count(), lo, hi) {
            total += (beta * (cfg.energy() - max_e)).exp();
        }
    });

    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut chosen: Option<Vec<usize>> = None;
    let mut cfg = Configuration::new(inst, &(0..k).collect::<Vec<_>>())?;
    visit_combinations(n, k, |step| {
        if let CombinationStep::Swap { removed, added } = step {
            let delta = inst.swap_delta_unchecked(&cfg, removed, added);
            cfg.apply_swap_with_delta(inst, removed, added, delta);
        }
        if chosen.is_none() && overlap_in(inst, cfg.overlap_count(), lo, hi) {
            acc += (beta * (cfg.energy() - max_e)).exp();
            if acc >= target {
                chosen = Some(cfg.support());
            }
        }
    });
    let support = chosen.expect("interval verified nonempty");
    Configuration::new(inst, &support)
}

fn reflected_burn_in(
    inst: &PlantedInstance,
    config: &ChainConfig,
    state: Configuration,
    rng: &mut ChaCha12Rng,
    lo: f64,
    hi: f64,
) -> Configuration {
    let mut chain = Chain::new(inst, config.beta, state, rng.random::<u64>());
    let target = 50 * inst.n() as u64;
    let mut accepted = 0u64;
    let mut budget = 4_000 * target; // proposals, not acceptances
    while accepted < target && budget > 0 {
        if chain.step_reflected(lo, hi) {
            accepted += 1;
        }
        budget -= 1;
    }
    chain.state
}

/// Run one instrumented chain.
pub fn run(inst: &PlantedInstance, config: &ChainConfig) -> Result<Trajectory> {
    config.validate()?;
    let mut rng = ChaCha12Rng::seed_from_u64(config.seed);
    let state = initial_state(inst, config, &mut rng)?;
    let mut chain = Chain::new(inst, config.beta, state, rng.random::<u64>());

    for _ in 0..config.burn_in {
        chain.step();
    }
    chain.proposed = 0;
    chain.accepted = 0;

    let n_records = (config.steps / config.record_stride) as usize + 1;
    let mut overlap_series = Vec::with_capacity(n_records);
    let mut energy_series = Vec::with_capacity(n_records);
    overlap_series.push(chain.state.overlap_count() as u32);
    energy_series.push(chain.state.energy());

    let exit = config.exit_interval;
    let mut exit_time: Option<u64> = None;
    if let Some((a, b)) = exit {
        if !overlap_in(inst, chain.state.overlap_count(), a, b) {
            exit_time = Some(0);
        }
    }

    let mut overlap_sum: f64 = chain.state.overlap_count() as f64;
    let mut max_drift: f64 = 0.0;
    let mut steps_done = 0u64;
    for t in 1..=config.steps {
        chain.step();
        steps_done = t;
        overlap_sum += chain.state.overlap_count() as f64;
        if let (Some((a, b)), None) = (exit, exit_time) {
            if !overlap_in(inst, chain.state.overlap_count(), a, b) {
                exit_time = Some(t);
            }
        }
        if t % config.record_stride == 0 {
            overlap_series.push(chain.state.overlap_count() as u32);
            energy_series.push(chain.state.energy());
        }
        if t % DRIFT_CHECK_STRIDE == 0 {
            max_drift = max_drift.max(chain.state.resync_energy(inst));
        }
        if config.stop_on_exit && exit_time.is_some() {
            break;
        }
    }

    let n = inst.n() as f64;
    Ok(Trajectory {
        acceptance_rate: chain.acceptance_rate(),
        exit_time,
        mean_overlap: overlap_sum / ((steps_done + 1) as f64) / n,
        final_energy: chain.state.energy(),
        max_cache_drift: max_drift,
        overlap_series,
        energy_series,
    })
}

// --- empirical rate function ------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmpiricalRatePoint {
    pub a: f64,
    pub overlap_count: usize,
    /// `−log(empirical window mass)`; when `hits == 0` this is the lower
    /// bound `log(samples)` and `lower_bound_only` is set.
    pub i_hat: f64,
    pub hits: u64,
    pub lower_bound_only: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmpiricalRate {
    pub beta: f64,
    pub epsilon: f64,
    pub samples: u64,
    pub points: Vec<EmpiricalRatePoint>,
}

impl EmpiricalRate {
    /// Depth of the deepest empirical well over lattice triples a < c < b.
    pub fn max_well_depth(&self) -> Option<f64> {
        let pts: Vec<&EmpiricalRatePoint> =
            self.points.iter().filter(|p| p.hits > 0).collect();
        let mut best: Option<f64> = None;
        for ia in 0..pts.len() {
            for ib in ia + 2..pts.len() {
                for ic in ia + 1..ib {
                    let d = pts[ia].i_hat.min(pts[ib].i_hat) - pts[ic].i_hat;
                    if best.map_or(true, |b| d > b) {
                        best = Some(d);
                    }
                }
            }
        }
        best
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WellProfileConfig {
    pub beta: f64,
    pub epsilon: f64,
    pub replicas: usize,
    pub steps_per_replica: u64,
    pub burn_in: u64,
    pub seed: u64,
}

impl WellProfileConfig {
    pub fn new(beta: f64, epsilon: f64, seed: u64) -> Self {
        Self { beta, epsilon, replicas: 8, steps_per_replica: 500_000, burn_in: 20_000, seed }
    }
}

/// Estimate the overlap rate function from independent replicas. At
/// enumerable sizes this should agree with `oracle::rate_function` within
/// sampling error.
pub fn well_profile(inst: &PlantedInstance, cfg: &WellProfileConfig) -> Result<EmpiricalRate> {
    let k = inst.ones();
    let histograms: Vec<Vec<u64>> = (0..cfg.replicas)
        .into_par_iter()
        .map(|r| {
            let mut hist = vec![0u64; k + 1];
            let seed = cfg.seed ^ splitmix64(r as u64 + 1);
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            let state = Configuration::uniform(inst, &mut rng);
            let mut chain = Chain::new(inst, cfg.beta, state, rng.random::<u64>());
            for _ in 0..cfg.burn_in {
                chain.step();
            }
            for _ in 0..cfg.steps_per_replica {
                chain.step();
                hist[chain.state.overlap_count()] += 1;
            }
            hist
        })
        .collect();

    let mut hist = vec![0u64; k + 1];
    for h in histograms {
        for (acc, v) in hist.iter_mut().zip(h) {
            *acc += v;
        }
    }
    let samples: u64 = hist.iter().sum();

    // Window hits on the 1/N lattice, half-open [a−ε, a+ε) as in the oracle.
    let n = inst.n();
    let ne = n as f64 * cfg.epsilon;
    let mut points = Vec::new();
    for j in 0..=k {
        let lo = (j as f64 - ne - 1e-9).ceil().max(0.0) as usize;
        let hi = (((j as f64 + ne - 1e-9).ceil() - 1.0) as usize).min(k);
        let hits: u64 = (lo..=hi).map(|c| hist[c]).sum();
        let (i_hat, lower) = if hits == 0 {
            ((samples as f64).ln(), true)
        } else {
            (-((hits as f64 / samples as f64).ln()), false)
        };
        points.push(EmpiricalRatePoint {
            a: j as f64 / n as f64,
            overlap_count: j,
            i_hat,
            hits,
            lower_bound_only: lower,
        });
    }

    Ok(EmpiricalRate { beta: cfg.beta, epsilon: cfg.epsilon, samples, points })
}

/// SplitMix64: deterministic per-task seed derivation.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}
