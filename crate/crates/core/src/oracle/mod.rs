//! Exhaustive enumeration over `Σ_N(ρ_N)` and `Σ_N(ρ_N, q_N)` at small N.
//!
//! One pass over the configuration space (revolving-door order, incremental
//! energy updates) collects, per overlap class: the state count, the exact
//! constrained maximum of `(x, Ax)`, the argmax set, and log-partition
//! functions at any requested inverse temperatures. Constrained energy
//! profiles, free energies, overlap rate functions and free-energy wells are
//! all derived from that scan; exit-time statistics build the full
//! transition kernel ([`exit`]).

pub mod combos;
mod exit;

pub use exit::{exact_exit_statistics, ExitConfig, ExitStatistics};

use crate::model::{Configuration, PlantedInstance};
use crate::{Error, Result};
use combos::{binomial, visit_combinations, CombinationStep};
use serde::{Deserialize, Serialize};

/// Default cap on `C(N, Nρ_N)` for exhaustive scans.
pub const DEFAULT_ENUM_BUDGET: u128 = 100_000_000;

/// Cap on stored tied argmax supports per overlap class.
const ARGMAX_CAP: usize = 8;

/// Energy tie tolerance when collecting argmax sets.
const TIE_TOL: f64 = 1e-12;

/// Per-overlap-class statistics from one exhaustive scan.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassStats {
    /// `⟨x, v⟩` for every state in the class.
    pub overlap_count: usize,
    /// `|Σ_N(ρ_N, q_N)|` actually visited (equals the binomial product).
    pub count: u128,
    /// Exact `max (x, Ax)` over the class.
    pub max_total: f64,
    /// Tied argmax supports (sorted), capped.
    pub argmax: Vec<Vec<usize>>,
    /// Number of ties seen (may exceed `argmax.len()`).
    pub tie_count: u128,
    /// Per requested β: `log Σ_class exp(β (x, Ax))`.
    pub log_z: Vec<f64>,
}

/// Result of one exhaustive scan of `Σ_N(ρ_N)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OverlapScan {
    pub n: usize,
    pub ones: usize,
    pub lambda: f64,
    pub betas: Vec<f64>,
    /// One entry per feasible overlap count, ascending.
    pub classes: Vec<ClassStats>,
    pub total_states: u128,
}

/// Streaming log-sum-exp accumulator.
#[derive(Debug, Clone, Copy)]
struct StreamingLse {
    max: f64,
    sum: f64,
}

impl StreamingLse {
    fn new() -> Self {
        Self { max: f64::NEG_INFINITY, sum: 0.0 }
    }

    #[inline]
    fn push(&mut self, v: f64) {
        if v <= self.max {
            self.sum += (v - self.max).exp();
        } else {
            self.sum = self.sum * (self.max - v).exp() + 1.0;
            self.max = v;
        }
    }

    fn value(&self) -> f64 {
        self.max + self.sum.ln()
    }
}

/// Combine already-reduced log-sum-exp values.
pub fn lse_combine(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = StreamingLse::new();
    for v in values {
        if v > f64::NEG_INFINITY {
            acc.push(v);
        }
    }
    if acc.max == f64::NEG_INFINITY {
        f64::NEG_INFINITY
    } else {
        acc.value()
    }
}

impl OverlapScan {
    /// Smallest feasible overlap count `max(0, 2k − N)`.
    pub fn min_overlap(&self) -> usize {
        (2 * self.ones).saturating_sub(self.n)
    }

    pub fn class(&self, overlap_count: usize) -> Option<&ClassStats> {
        let lo = self.min_overlap();
        if overlap_count < lo || overlap_count > self.ones {
            return None;
        }
        Some(&self.classes[overlap_count - lo])
    }

    /// Exact unconstrained maximum of `(x, Ax)` (the MLE value, unnormalized).
    pub fn mle_total(&self) -> f64 {
        self.classes
            .iter()
            .map(|c| c.max_total)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Unconstrained `log Σ exp(β (x, Ax))` for the i-th requested β.
    pub fn log_z(&self, beta_index: usize) -> f64 {
        lse_combine(self.classes.iter().map(|c| c.log_z[beta_index]))
    }
}

/// Exhaustively scan `Σ_N(ρ_N)`, grouping by overlap with the planted vector.
pub fn scan(inst: &PlantedInstance, betas: &[f64], budget: u128) -> Result<OverlapScan> {
    let n = inst.n();
    let k = inst.ones();
    let states = binomial(n, k);
    if states > budget {
        return Err(Error::BudgetExceeded { states, budget });
    }

    let lo = (2 * k).saturating_sub(n);
    let n_classes = k - lo + 1;
    let mut counts = vec![0u128; n_classes];
    let mut max_total = vec![f64::NEG_INFINITY; n_classes];
    let mut argmax: Vec<Vec<Vec<usize>>> = vec![Vec::new(); n_classes];
    let mut ties = vec![0u128; n_classes];
    let mut lses = vec![vec![StreamingLse::new(); betas.len()]; n_classes];

    let mut cfg = Configuration::new(inst, &(0..k).collect::<Vec<_>>())?;

    let mut record = |cfg: &Configuration| {
        let cls = cfg.overlap_count() - lo;
        let e = cfg.energy();
        counts[cls] += 1;
        if e > max_total[cls] + TIE_TOL {
            max_total[cls] = e;
            argmax[cls].clear();
            argmax[cls].push(cfg.support());
            ties[cls] = 1;
        } else if e > max_total[cls] - TIE_TOL {
            max_total[cls] = max_total[cls].max(e);
            ties[cls] += 1;
            if argmax[cls].len() < ARGMAX_CAP {
                argmax[cls].push(cfg.support());
            }
        }
        for (b, &beta) in betas.iter().enumerate() {
            lses[cls][b].push(beta * e);
        }
    };

    visit_combinations(n, k, |step| {
        if let CombinationStep::Swap { removed, added } = step {
            let delta = inst.swap_delta_unchecked(&cfg, removed, added);
            cfg.apply_swap_with_delta(inst, removed, added, delta);
        }
        // Init arrives with cfg already at {0..k}.
        record(&cfg);
    });

    let classes = (0..n_classes)
        .map(|c| ClassStats {
            overlap_count: lo + c,
            count: counts[c],
            max_total: max_total[c],
            argmax: std::mem::take(&mut argmax[c]),
            tie_count: ties[c],
            log_z: lses[c]
                .iter()
                .map(|s| if counts[c] == 0 { f64::NEG_INFINITY } else { s.value() })
                .collect(),
        })
        .collect();

    Ok(OverlapScan {
        n,
        ones: k,
        lambda: inst.lambda(),
        betas: betas.to_vec(),
        classes,
        total_states: states,
    })
}

// --- constrained energy profile --------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProfileRow {
    pub overlap_count: usize,
    pub q: f64,
    pub count: u128,
    /// `E_N(q; ρ_N, λ) = (1/N) max_{Σ_N(ρ_N, q_N)} (x, Ax)`.
    pub e_n: f64,
    /// `(1/N) max H_N` over the class (the signal part removed).
    pub noise_part: f64,
    pub argmax: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConstrainedProfile {
    pub n: usize,
    pub ones: usize,
    pub lambda: f64,
    pub rows: Vec<ProfileRow>,
    /// `(1/N) max_{Σ_N(ρ_N)} (x, Ax)`, the exact MLE value per site.
    pub mle_value: f64,
    pub mle_argmax: Vec<Vec<usize>>,
}

/// Exact `E_N(q)` for every feasible overlap plus the exact MLE.
pub fn enumerate_profile(inst: &PlantedInstance, budget: u128) -> Result<ConstrainedProfile> {
    let sc = scan(inst, &[], budget)?;
    profile_from_scan(inst, &sc)
}

pub fn profile_from_scan(
    inst: &PlantedInstance,
    scan: &OverlapScan,
) -> Result<ConstrainedProfile> {
    let n = scan.n as f64;
    let rows: Vec<ProfileRow> = scan
        .classes
        .iter()
        .map(|c| {
            let q = c.overlap_count as f64 / n;
            ProfileRow {
                overlap_count: c.overlap_count,
                q,
                count: c.count,
                e_n: c.max_total / n,
                noise_part: c.max_total / n - inst.lambda() * q * q,
                argmax: c.argmax.clone(),
            }
        })
        .collect();

    let mle_value = scan.mle_total() / n;
    let best = rows
        .iter()
        .max_by(|a, b| a.e_n.partial_cmp(&b.e_n).unwrap())
        .expect("at least one class");
    Ok(ConstrainedProfile {
        n: scan.n,
        ones: scan.ones,
        lambda: scan.lambda,
        mle_argmax: best.argmax.clone(),
        rows,
        mle_value,
    })
}

// --- exact free energy -------------------------------------------------------

/// `(1/N)·log Σ exp(β (x, Ax))` over `Σ_N(ρ_N, q_N)` when `overlap_count` is
/// given, otherwise over all of `Σ_N(ρ_N)`. Overflow is guarded by a
/// streaming max-shift.
pub fn exact_free_energy(
    inst: &PlantedInstance,
    beta: f64,
    overlap_count: Option<usize>,
    budget: u128,
) -> Result<f64> {
    let sc = scan(inst, &[beta], budget)?;
    let n = sc.n as f64;
    match overlap_count {
        Some(c) => {
            let cls = sc
                .class(c)
                .ok_or_else(|| Error::InvalidParameter(format!("infeasible overlap count {c}")))?;
            Ok(cls.log_z[0] / n)
        }
        None => Ok(sc.log_z(0) / n),
    }
}

// --- rate function and wells --------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RatePoint {
    /// Window center on the overlap lattice.
    pub a: f64,
    pub overlap_count: usize,
    /// `I_m(a; ε) = −log π_β(m(x) ∈ [a−ε, a+ε))`; +∞ when the window is empty.
    pub i_value: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Well {
    pub a: f64,
    pub c: f64,
    pub b: f64,
    /// Unnormalized depth `min{I(a), I(b)} − I(c)` (closed ε-windows).
    pub depth: f64,
    /// Depth divided by N (the per-site convention).
    pub depth_per_site: f64,
    pub i_a: f64,
    pub i_c: f64,
    pub i_b: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RateFunction {
    pub beta: f64,
    pub epsilon: f64,
    pub points: Vec<RatePoint>,
    /// Positive-depth wells, one (best interior point) per endpoint pair,
    /// sorted by decreasing depth.
    pub wells: Vec<Well>,
}

/// Count range of the half-open window `[a−ε, a+ε)` on the `1/N` lattice,
/// for `a = j/N`. Half-open windows make lattice-aligned covers exactly
/// disjoint.
fn half_open_window(j: usize, n: usize, eps: f64) -> (i64, i64) {
    let ne = n as f64 * eps;
    let lo = (j as f64 - ne - 1e-9).ceil() as i64;
    let hi = (j as f64 + ne - 1e-9).ceil() as i64 - 1;
    (lo, hi)
}

/// Count range of the closed window `[a−ε, a+ε]` (the free-energy-well
/// convention of the exit-time theorem).
fn closed_window(j: usize, n: usize, eps: f64) -> (i64, i64) {
    let ne = n as f64 * eps;
    let lo = (j as f64 - ne - 1e-9).ceil() as i64;
    let hi = (j as f64 + ne + 1e-9).floor() as i64;
    (lo, hi)
}

fn window_log_mass(scan: &OverlapScan, beta_index: usize, range: (i64, i64)) -> f64 {
    let vals = scan.classes.iter().filter_map(|c| {
        let cnt = c.overlap_count as i64;
        (cnt >= range.0 && cnt <= range.1).then_some(c.log_z[beta_index])
    });
    lse_combine(vals)
}

/// Exact overlap rate function on the feasible lattice, with free-energy-well
/// witnesses.
pub fn rate_function(
    inst: &PlantedInstance,
    beta: f64,
    epsilon: f64,
    budget: u128,
) -> Result<RateFunction> {
    if epsilon < 0.0 {
        return Err(Error::InvalidParameter(format!("epsilon = {epsilon} < 0")));
    }
    let sc = scan(inst, &[beta], budget)?;
    Ok(rate_function_from_scan(&sc, beta, epsilon))
}

pub fn rate_function_from_scan(scan: &OverlapScan, beta: f64, epsilon: f64) -> RateFunction {
    debug_assert_eq!(scan.betas.len(), 1);
    let n = scan.n;
    let log_z = scan.log_z(0);

    let points: Vec<RatePoint> = scan
        .classes
        .iter()
        .map(|c| {
            let mass = window_log_mass(scan, 0, half_open_window(c.overlap_count, n, epsilon));
            RatePoint {
                a: c.overlap_count as f64 / n as f64,
                overlap_count: c.overlap_count,
                i_value: log_z - mass,
            }
        })
        .collect();

    // Closed-window I values for well detection.
    let counts: Vec<usize> = scan.classes.iter().map(|c| c.overlap_count).collect();
    let closed_i: Vec<f64> = counts
        .iter()
        .map(|&j| log_z - window_log_mass(scan, 0, closed_window(j, n, epsilon)))
        .collect();
    let ranges: Vec<(i64, i64)> =
        counts.iter().map(|&j| closed_window(j, n, epsilon)).collect();

    let mut wells = Vec::new();
    for ia in 0..counts.len() {
        for ib in ia + 2..counts.len() {
            if closed_i[ia].is_infinite() || closed_i[ib].is_infinite() {
                continue;
            }
            // Best interior point whose window is disjoint from both ends.
            let mut best: Option<usize> = None;
            for ic in ia + 1..ib {
                if ranges[ic].0 > ranges[ia].1 && ranges[ic].1 < ranges[ib].0 {
                    if best.map_or(true, |b| closed_i[ic] < closed_i[b]) {
                        best = Some(ic);
                    }
                }
            }
            if let Some(ic) = best {
                let depth = closed_i[ia].min(closed_i[ib]) - closed_i[ic];
                if depth > 0.0 {
                    wells.push(Well {
                        a: counts[ia] as f64 / n as f64,
                        c: counts[ic] as f64 / n as f64,
                        b: counts[ib] as f64 / n as f64,
                        depth,
                        depth_per_site: depth / n as f64,
                        i_a: closed_i[ia],
                        i_c: closed_i[ic],
                        i_b: closed_i[ib],
                    });
                }
            }
        }
    }
    wells.sort_by(|x, y| y.depth.partial_cmp(&x.depth).unwrap());

    RateFunction { beta, epsilon, points, wells }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Configuration, PlantedInstance};

    fn feasible_count(n: usize, k: usize, c: usize) -> u128 {
        binomial(k, c) * binomial(n - k, k - c)
    }

    /// Plain lexicographic enumeration of supports (independent of the
    /// revolving-door walker).
    fn lexicographic_supports(n: usize, k: usize) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let mut support: Vec<usize> = (0..k).collect();
        'outer: loop {
            out.push(support.clone());
            let mut i = k;
            while i > 0 {
                i -= 1;
                if support[i] != i + n - k {
                    support[i] += 1;
                    for j in i + 1..k {
                        support[j] = support[j - 1] + 1;
                    }
                    continue 'outer;
                }
            }
            break;
        }
        out
    }

    #[test]
    fn profile_zero_noise_zero_lambda_is_flat() {
        let n = 4;
        let inst =
            PlantedInstance::with_noise_matrix(n, 0.5, 0.0, 0, vec![0, 1], vec![0.0; n * n])
                .unwrap();
        let p = enumerate_profile(&inst, DEFAULT_ENUM_BUDGET).unwrap();
        for row in &p.rows {
            assert_eq!(row.e_n, 0.0);
        }
    }

    #[test]
    fn profile_zero_noise_is_lambda_q_squared() {
        let n = 4;
        let inst =
            PlantedInstance::with_noise_matrix(n, 0.5, 8.0, 0, vec![0, 1], vec![0.0; n * n])
                .unwrap();
        let p = enumerate_profile(&inst, DEFAULT_ENUM_BUDGET).unwrap();
        for row in &p.rows {
            assert!((row.e_n - 8.0 * row.q * row.q).abs() < 1e-12);
        }
        let best =
            p.rows.iter().max_by(|a, b| a.e_n.partial_cmp(&b.e_n).unwrap()).unwrap();
        assert_eq!(best.q, 0.5);
    }

    #[test]
    fn profile_matches_direct_lexicographic_scan() {
        // Double-entry oracle: an independent direct scan with full energy
        // recomputation at every configuration.
        let inst = PlantedInstance::generate(16, 0.25, 0.0, 3).unwrap();
        let p = enumerate_profile(&inst, DEFAULT_ENUM_BUDGET).unwrap();

        let n = inst.n();
        let k = inst.ones();
        let lo = (2 * k).saturating_sub(n);
        let mut max_by_class = vec![f64::NEG_INFINITY; k - lo + 1];
        let mut counts = vec![0u128; k - lo + 1];
        for support in lexicographic_supports(n, k) {
            let cfg = Configuration::new(&inst, &support).unwrap();
            let e = inst.energy(&cfg).unwrap().total;
            let cls = cfg.overlap_count() - lo;
            counts[cls] += 1;
            if e > max_by_class[cls] {
                max_by_class[cls] = e;
            }
        }

        assert_eq!(counts.iter().sum::<u128>(), binomial(n, k));
        for (row, (&mx, &cnt)) in p.rows.iter().zip(max_by_class.iter().zip(counts.iter())) {
            assert_eq!(row.count, cnt);
            assert_eq!(row.count, feasible_count(n, k, row.overlap_count));
            assert!((row.e_n - mx / n as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn profile_max_equals_mle_exactly() {
        let inst = PlantedInstance::generate(12, 0.5, 3.0, 1).unwrap();
        let p = enumerate_profile(&inst, DEFAULT_ENUM_BUDGET).unwrap();
        let best = p.rows.iter().map(|r| r.e_n).fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(best, p.mle_value);
    }

    #[test]
    fn budget_is_enforced() {
        let inst = PlantedInstance::generate(40, 0.5, 1.0, 0).unwrap();
        match enumerate_profile(&inst, 1000) {
            Err(Error::BudgetExceeded { .. }) => {}
            other => panic!("expected budget error, got {other:?}"),
        }
    }

    #[test]
    fn free_energy_beta_zero_counts_states() {
        let inst = PlantedInstance::generate(10, 0.3, 2.0, 4).unwrap();
        let f = exact_free_energy(&inst, 0.0, None, DEFAULT_ENUM_BUDGET).unwrap();
        let expect = (binomial(10, 3) as f64).ln() / 10.0;
        assert!((f - expect).abs() < 1e-12);

        let f2 = exact_free_energy(&inst, 0.0, Some(2), DEFAULT_ENUM_BUDGET).unwrap();
        let expect2 = (feasible_count(10, 3, 2) as f64).ln() / 10.0;
        assert!((f2 - expect2).abs() < 1e-12);
    }

    #[test]
    fn free_energy_sandwich_bound() {
        // |(1/β)F_N − max/N| ≤ log|Σ_N(ρ,q)|/(Nβ) for β ∈ {1, 10, 100}.
        let inst = PlantedInstance::generate(12, 0.5, 3.0, 1).unwrap();
        let sc = scan(&inst, &[1.0, 10.0, 100.0], DEFAULT_ENUM_BUDGET).unwrap();
        let n = 12.0;
        for cls in &sc.classes {
            if cls.count == 0 {
                continue;
            }
            for (bi, &beta) in sc.betas.iter().enumerate() {
                let f = cls.log_z[bi] / n;
                let gap = (f / beta - cls.max_total / n).abs();
                let bound = (cls.count as f64).ln() / (n * beta);
                assert!(
                    gap <= bound + 1e-12,
                    "sandwich violated: β={beta} q={} gap={gap} bound={bound}",
                    cls.overlap_count
                );
            }
        }
    }

    #[test]
    fn free_energy_matches_careful_summation() {
        // Kahan-compensated, ascending-order summation as a second route.
        let inst = PlantedInstance::generate(8, 0.5, 1.0, 1).unwrap();
        let beta = 2.0;
        let f = exact_free_energy(&inst, beta, None, DEFAULT_ENUM_BUDGET).unwrap();

        let mut energies = Vec::new();
        for support in lexicographic_supports(8, 4) {
            let cfg = Configuration::new(&inst, &support).unwrap();
            energies.push(beta * cfg.energy());
        }
        assert_eq!(energies.len() as u128, binomial(8, 4));
        let max = energies.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut vals: Vec<f64> = energies.iter().map(|e| (e - max).exp()).collect();
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let (mut sum, mut comp) = (0.0f64, 0.0f64);
        for v in vals {
            let y = v - comp;
            let t = sum + y;
            comp = (t - sum) - y;
            sum = t;
        }
        let reference = (max + sum.ln()) / 8.0;
        assert!((f - reference).abs() < 1e-13, "f={f} ref={reference}");
    }

    #[test]
    fn convexity_of_log_z() {
        // β ↦ log Z(β) is convex: second divided differences ≥ 0.
        let inst = PlantedInstance::generate(10, 0.5, 2.0, 7).unwrap();
        let betas: Vec<f64> = (0..12).map(|i| 0.25 * i as f64).collect();
        let sc = scan(&inst, &betas, DEFAULT_ENUM_BUDGET).unwrap();
        let logz: Vec<f64> = (0..betas.len()).map(|i| sc.log_z(i)).collect();
        for w in logz.windows(3) {
            assert!(w[2] - 2.0 * w[1] + w[0] >= -1e-9);
        }
    }

    #[test]
    fn rate_function_beta_zero_is_hypergeometric() {
        let inst = PlantedInstance::generate(12, 0.5, 2.0, 3).unwrap();
        let rf = rate_function(&inst, 0.0, 1.0 / 24.0, DEFAULT_ENUM_BUDGET).unwrap();
        let (n, k) = (12, 6);
        for p in &rf.points {
            let c = p.overlap_count;
            let expect = -((feasible_count(n, k, c) as f64 / binomial(n, k) as f64).ln());
            assert!((p.i_value - expect).abs() < 1e-10, "count {c}");
        }
    }

    #[test]
    fn rate_window_cover_sums_to_one() {
        let inst = PlantedInstance::generate(12, 0.5, 2.0, 9).unwrap();
        let beta = 1.5;
        let sc = scan(&inst, &[beta], DEFAULT_ENUM_BUDGET).unwrap();
        let log_z = sc.log_z(0);
        // Half-open windows of width 2ε = 2/N tile the lattice disjointly.
        let eps = 1.0 / 12.0;
        let mut total = 0.0;
        let mut j = 0usize;
        while j <= 6 {
            let mass = window_log_mass(&sc, 0, half_open_window(j, 12, eps));
            if mass > f64::NEG_INFINITY {
                total += (mass - log_z).exp();
            }
            j += 2;
        }
        assert!((total - 1.0).abs() < 1e-9, "cover mass {total}");
    }

    #[test]
    fn rate_function_concentrates_at_rho_under_strong_signal() {
        // W = 0, λ = 50: π_β mass piles up at q = ρ, so I is minimized there.
        let n = 12;
        let inst = PlantedInstance::with_noise_matrix(
            n,
            0.5,
            50.0,
            0,
            (0..6).collect(),
            vec![0.0; n * n],
        )
        .unwrap();
        let rf = rate_function(&inst, 1.0, 1.0 / 24.0, DEFAULT_ENUM_BUDGET).unwrap();
        let best = rf
            .points
            .iter()
            .min_by(|a, b| a.i_value.partial_cmp(&b.i_value).unwrap())
            .unwrap();
        assert_eq!(best.overlap_count, 6);
    }

    #[test]
    fn rate_function_matches_permuted_summation() {
        let inst = PlantedInstance::generate(12, 1.0 / 3.0, 0.0, 2).unwrap();
        let beta = 3.0;
        let eps = 1.0 / 24.0;
        let rf = rate_function(&inst, beta, eps, DEFAULT_ENUM_BUDGET).unwrap();

        // Second pass: independent enumeration order, per-class sums taken in
        // reversed order with a plain shifted sum.
        let (n, k) = (12usize, 4usize);
        let mut vals: Vec<Vec<f64>> = vec![Vec::new(); k + 1];
        for support in lexicographic_supports(n, k) {
            let cfg = Configuration::new(&inst, &support).unwrap();
            vals[cfg.overlap_count()].push(beta * cfg.energy());
        }
        let class_lse: Vec<f64> = vals
            .iter()
            .map(|v| {
                if v.is_empty() {
                    return f64::NEG_INFINITY;
                }
                let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                max + v.iter().rev().map(|x| (x - max).exp()).sum::<f64>().ln()
            })
            .collect();
        let log_z = lse_combine(class_lse.iter().cloned());
        for p in &rf.points {
            // ε = 1/(2N): each window holds a single lattice point.
            let expect = log_z - class_lse[p.overlap_count];
            assert!(
                (p.i_value - expect).abs() < 1e-9,
                "I({}) = {} vs {}",
                p.a,
                p.i_value,
                expect
            );
        }
    }
}
