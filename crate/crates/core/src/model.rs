//! Planted-instance model and constrained configurations.
//!
//! The observation is `A = (λ/N)·vvᵀ + W` where `v ∈ Σ_N(ρ_N)` (boolean,
//! exactly `N·ρ_N` ones) and `W` is GOE: off-diagonal entries N(0, 1/N),
//! diagonal N(0, 2/N), symmetric. Energies are the bilinear forms
//! `(x, Ax)` and `H_N(x) = (x, Wx)`, with the decomposition
//! `(x, Ax) = H_N(x) + (λ/N)·⟨x,v⟩²`.

use crate::{Error, Result};
use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// `N·ρ_N` from the admissible-sequence rounding rule:
/// `Nρ ∈ (N·ρ_N − 1/2, N·ρ_N + 1/2]`, i.e. ties round down.
pub fn rho_index(n: usize, rho: f64) -> usize {
    let k = (n as f64 * rho - 0.5).ceil();
    k.max(0.0) as usize
}

/// `N·q_N` from the admissible-sequence rounding rule for overlaps:
/// `Nq ∈ [N·q_N − 1/2, N·q_N + 1/2)`, i.e. ties round up.
pub fn q_index(n: usize, q: f64) -> usize {
    let k = (n as f64 * q + 0.5).floor();
    k.max(0.0) as usize
}

/// A target sparsity and a list of overlap targets, with their per-`N`
/// integerizations.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdmissibleGrid {
    pub rho: f64,
    pub q_values: Vec<f64>,
}

impl AdmissibleGrid {
    pub fn new(rho: f64, q_values: Vec<f64>) -> Result<Self> {
        if !(rho > 0.0 && rho < 1.0) {
            return Err(Error::InvalidParameter(format!("rho = {rho} not in (0,1)")));
        }
        for &q in &q_values {
            if !(0.0..=rho).contains(&q) {
                return Err(Error::InvalidParameter(format!("q = {q} not in [0, rho]")));
            }
        }
        Ok(Self { rho, q_values })
    }

    pub fn rho_n(&self, n: usize) -> f64 {
        rho_index(n, self.rho) as f64 / n as f64
    }

    /// Integerized `(N·ρ_N, [N·q_N])` at dimension `n`.
    pub fn integerize(&self, n: usize) -> (usize, Vec<usize>) {
        let k = rho_index(n, self.rho);
        let qs = self.q_values.iter().map(|&q| q_index(n, q)).collect();
        (k, qs)
    }
}

/// An observed instance `A = (λ/N)·vvᵀ + W` together with the hidden vector
/// and the noise realization. Immutable after construction.
#[derive(Debug, Clone)]
pub struct PlantedInstance {
    n: usize,
    ones: usize,
    rho: f64,
    lambda: f64,
    seed: u64,
    shuffled: bool,
    support: Vec<usize>,
    is_planted: Vec<bool>,
    a: Vec<f64>,
    w: Vec<f64>,
}

/// Energy of a configuration split into its noise and signal parts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyDecomposition {
    /// `(x, Ax)`
    pub total: f64,
    /// `H_N(x) = (x, Wx)`
    pub noise: f64,
    /// `(λ/N)·⟨x,v⟩²`
    pub signal: f64,
}

impl PlantedInstance {
    /// Generate an instance with the canonical planted vector
    /// `v = (1,…,1,0,…,0)`.
    pub fn generate(n: usize, rho: f64, lambda: f64, seed: u64) -> Result<Self> {
        Self::generate_with(n, rho, lambda, seed, false)
    }

    /// Generate with an optional uniformly random planted support.
    pub fn generate_with(
        n: usize,
        rho: f64,
        lambda: f64,
        seed: u64,
        shuffle_support: bool,
    ) -> Result<Self> {
        if !(rho > 0.0 && rho < 1.0) {
            return Err(Error::InvalidParameter(format!("rho = {rho} not in (0,1)")));
        }
        if lambda < 0.0 {
            return Err(Error::InvalidParameter(format!("lambda = {lambda} < 0")));
        }
        if n == 0 {
            return Err(Error::InvalidParameter("N = 0".into()));
        }
        let ones = rho_index(n, rho);
        if ones == 0 || ones == n {
            return Err(Error::DegeneratePlanting { n, ones });
        }

        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        // Upper triangle in row-major order; fixed draw order keeps the
        // instance bitwise reproducible.
        let off_sd = 1.0 / (n as f64).sqrt();
        let diag_sd = (2.0 / n as f64).sqrt();
        let mut w = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let z: f64 = rng.sample(StandardNormal);
                let val = if i == j { z * diag_sd } else { z * off_sd };
                w[i * n + j] = val;
                w[j * n + i] = val;
            }
        }

        let support: Vec<usize> = if shuffle_support {
            let mut idx: Vec<usize> = (0..n).collect();
            // Partial Fisher-Yates: the first `ones` slots.
            for t in 0..ones {
                let r = rng.random_range(t..n);
                idx.swap(t, r);
            }
            let mut s = idx[..ones].to_vec();
            s.sort_unstable();
            s
        } else {
            (0..ones).collect()
        };

        let mut is_planted = vec![false; n];
        for &i in &support {
            is_planted[i] = true;
        }

        let mut a = w.clone();
        let bump = lambda / n as f64;
        for &i in &support {
            for &j in &support {
                a[i * n + j] += bump;
            }
        }

        Ok(Self { n, ones, rho, lambda, seed, shuffled: shuffle_support, support, is_planted, a, w })
    }

    /// Build an instance from an explicit noise matrix (row-major, symmetric).
    /// Used by tests and controlled experiments (e.g. `W = 0`).
    pub fn with_noise_matrix(
        n: usize,
        rho: f64,
        lambda: f64,
        seed: u64,
        support: Vec<usize>,
        w: Vec<f64>,
    ) -> Result<Self> {
        if w.len() != n * n {
            return Err(Error::DimensionMismatch { expected: n * n, got: w.len() });
        }
        let ones = support.len();
        if ones == 0 || ones >= n {
            return Err(Error::DegeneratePlanting { n, ones });
        }
        let mut sorted = support.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != ones || *sorted.last().unwrap() >= n {
            return Err(Error::InvalidParameter("bad support".into()));
        }
        let mut is_planted = vec![false; n];
        for &i in &sorted {
            is_planted[i] = true;
        }
        let mut a = w.clone();
        let bump = lambda / n as f64;
        for &i in &sorted {
            for &j in &sorted {
                a[i * n + j] += bump;
            }
        }
        Ok(Self { n, ones, rho, lambda, seed, shuffled: false, support: sorted, is_planted, a, w })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `N·ρ_N`, the exact number of planted ones.
    pub fn ones(&self) -> usize {
        self.ones
    }

    /// Requested sparsity ρ.
    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Integerized sparsity ρ_N = ones/N.
    pub fn rho_n(&self) -> f64 {
        self.ones as f64 / self.n as f64
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn shuffled(&self) -> bool {
        self.shuffled
    }

    /// Sorted support of the hidden vector.
    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn is_planted(&self, i: usize) -> bool {
        self.is_planted[i]
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn w(&self) -> &[f64] {
        &self.w
    }

    #[inline]
    pub fn a_entry(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.n + j]
    }

    #[inline]
    pub fn a_row(&self, i: usize) -> &[f64] {
        &self.a[i * self.n..(i + 1) * self.n]
    }

    /// Exact energy of `x` recomputed from scratch, with the
    /// noise/signal decomposition.
    pub fn energy(&self, x: &Configuration) -> Result<EnergyDecomposition> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: x.len() });
        }
        let mut total = 0.0;
        let mut noise = 0.0;
        for &i in x.ones_list() {
            let arow = &self.a[i * self.n..];
            let wrow = &self.w[i * self.n..];
            for &j in x.ones_list() {
                total += arow[j];
                noise += wrow[j];
            }
        }
        let ov = x.overlap_count() as f64;
        let signal = self.lambda / self.n as f64 * ov * ov;
        Ok(EnergyDecomposition { total, noise, signal })
    }

    /// Energy difference `(x', Ax') − (x, Ax)` for the swap `x' = x − e_i + e_j`
    /// (requires `x_i = 1`, `x_j = 0`), computed in O(N) via row sums.
    pub fn swap_delta(&self, x: &Configuration, i: usize, j: usize) -> Result<f64> {
        if i >= self.n || j >= self.n || !x.is_one(i) || x.is_one(j) {
            return Err(Error::InvalidSwap { i, j });
        }
        Ok(self.swap_delta_unchecked(x, i, j))
    }

    #[inline]
    pub(crate) fn swap_delta_unchecked(&self, x: &Configuration, i: usize, j: usize) -> f64 {
        let arow_i = &self.a[i * self.n..(i + 1) * self.n];
        let arow_j = &self.a[j * self.n..(j + 1) * self.n];
        let mut axi = 0.0;
        let mut axj = 0.0;
        for &l in x.ones_list() {
            axi += arow_i[l];
            axj += arow_j[l];
        }
        2.0 * (axj - axi) + arow_i[i] + arow_j[j] - 2.0 * arow_i[j]
    }

    /// Overlap `⟨x, v⟩/N ∈ [0, ρ_N]`.
    pub fn overlap(&self, x: &Configuration) -> f64 {
        x.overlap_count() as f64 / self.n as f64
    }
}

/// A boolean vector in `Σ_N(ρ_N)` with O(1) swap bookkeeping and cached
/// energy/overlap. Single-writer mutable; cheap to clone for replicas.
#[derive(Debug, Clone)]
pub struct Configuration {
    is_one: Vec<bool>,
    ones_list: Vec<usize>,
    zeros_list: Vec<usize>,
    slot: Vec<usize>,
    cached_energy: f64,
    overlap_count: usize,
}

impl Configuration {
    /// Build from an explicit support; computes the energy exactly.
    pub fn new(inst: &PlantedInstance, support: &[usize]) -> Result<Self> {
        let n = inst.n();
        if support.len() != inst.ones() {
            return Err(Error::InvalidParameter(format!(
                "configuration needs exactly {} ones, got {}",
                inst.ones(),
                support.len()
            )));
        }
        let mut is_one = vec![false; n];
        for &i in support {
            if i >= n {
                return Err(Error::InvalidParameter(format!("index {i} out of range")));
            }
            if is_one[i] {
                return Err(Error::InvalidParameter(format!("duplicate index {i}")));
            }
            is_one[i] = true;
        }
        let mut ones_list = Vec::with_capacity(inst.ones());
        let mut zeros_list = Vec::with_capacity(n - inst.ones());
        let mut slot = vec![0usize; n];
        for i in 0..n {
            if is_one[i] {
                slot[i] = ones_list.len();
                ones_list.push(i);
            } else {
                slot[i] = zeros_list.len();
                zeros_list.push(i);
            }
        }
        let mut cfg = Self {
            is_one,
            ones_list,
            zeros_list,
            slot,
            cached_energy: 0.0,
            overlap_count: 0,
        };
        cfg.overlap_count = cfg.ones_list.iter().filter(|&&i| inst.is_planted(i)).count();
        cfg.cached_energy = inst.energy(&cfg)?.total;
        Ok(cfg)
    }

    /// The planted configuration `x = v`.
    pub fn planted(inst: &PlantedInstance) -> Self {
        Self::new(inst, inst.support()).expect("planted support is valid")
    }

    /// Uniform draw from `Σ_N(ρ_N)` (partial Fisher-Yates).
    pub fn uniform<R: Rng + ?Sized>(inst: &PlantedInstance, rng: &mut R) -> Self {
        let n = inst.n();
        let k = inst.ones();
        let mut idx: Vec<usize> = (0..n).collect();
        for t in 0..k {
            let r = rng.random_range(t..n);
            idx.swap(t, r);
        }
        Self::new(inst, &idx[..k]).expect("sampled support is valid")
    }

    pub fn len(&self) -> usize {
        self.is_one.len()
    }

    pub fn is_empty(&self) -> bool {
        self.is_one.is_empty()
    }

    #[inline]
    pub fn is_one(&self, i: usize) -> bool {
        self.is_one[i]
    }

    /// Unordered list of the one-positions (use [`Self::support`] for sorted).
    #[inline]
    pub fn ones_list(&self) -> &[usize] {
        &self.ones_list
    }

    #[inline]
    pub fn zeros_list(&self) -> &[usize] {
        &self.zeros_list
    }

    /// Sorted support `S(x)`.
    pub fn support(&self) -> Vec<usize> {
        let mut s = self.ones_list.clone();
        s.sort_unstable();
        s
    }

    /// Cached `(x, Ax)`.
    pub fn energy(&self) -> f64 {
        self.cached_energy
    }

    /// Cached `⟨x, v⟩` (a count in `0..=N·ρ_N`).
    pub fn overlap_count(&self) -> usize {
        self.overlap_count
    }

    /// Apply the swap `x ← x − e_i + e_j`, updating all caches in O(N).
    pub fn apply_swap(&mut self, inst: &PlantedInstance, i: usize, j: usize) -> Result<f64> {
        let delta = inst.swap_delta(self, i, j)?;
        self.apply_swap_with_delta(inst, i, j, delta);
        Ok(delta)
    }

    /// Apply a swap whose energy delta has already been computed.
    #[inline]
    pub(crate) fn apply_swap_with_delta(
        &mut self,
        inst: &PlantedInstance,
        i: usize,
        j: usize,
        delta: f64,
    ) {
        debug_assert!(self.is_one[i] && !self.is_one[j]);
        let si = self.slot[i];
        let sj = self.slot[j];
        // i leaves the ones list, j leaves the zeros list; each slot is
        // backfilled so both lists stay dense.
        self.ones_list[si] = j;
        self.zeros_list[sj] = i;
        self.slot[j] = si;
        self.slot[i] = sj;
        self.is_one[i] = false;
        self.is_one[j] = true;
        self.cached_energy += delta;
        if inst.is_planted(i) {
            self.overlap_count -= 1;
        }
        if inst.is_planted(j) {
            self.overlap_count += 1;
        }
    }

    /// Recompute `(x, Ax)` from scratch and resynchronize the cache.
    /// Returns the drift `|cache − exact|` before the resync.
    pub fn resync_energy(&mut self, inst: &PlantedInstance) -> f64 {
        let exact = inst.energy(self).expect("dimensions agree").total;
        let drift = (self.cached_energy - exact).abs();
        self.cached_energy = exact;
        drift
    }
}

// --- serialization -------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct InstanceFile {
    format: String,
    n: usize,
    ones: usize,
    rho: f64,
    lambda: f64,
    seed: u64,
    shuffled: bool,
    support: Vec<usize>,
    /// Row-major lower triangle of A (f64 little-endian, base64).
    a_lower_b64: String,
    /// Row-major lower triangle of W (f64 little-endian, base64).
    w_lower_b64: String,
}

fn lower_triangle_b64(m: &[f64], n: usize) -> String {
    let mut bytes = Vec::with_capacity(n * (n + 1) / 2 * 8);
    for i in 0..n {
        for j in 0..=i {
            bytes.extend_from_slice(&m[i * n + j].to_le_bytes());
        }
    }
    B64.encode(bytes)
}

fn matrix_from_b64(s: &str, n: usize) -> Result<Vec<f64>> {
    let bytes = B64
        .decode(s)
        .map_err(|e| Error::Decode(format!("base64: {e}")))?;
    let want = n * (n + 1) / 2 * 8;
    if bytes.len() != want {
        return Err(Error::Decode(format!(
            "triangle payload holds {} bytes, expected {want}",
            bytes.len()
        )));
    }
    let mut m = vec![0.0; n * n];
    let mut off = 0;
    for i in 0..n {
        for j in 0..=i {
            let v = f64::from_le_bytes(bytes[off..off + 8].try_into().unwrap());
            m[i * n + j] = v;
            m[j * n + i] = v;
            off += 8;
        }
    }
    Ok(m)
}

impl PlantedInstance {
    /// Serialize to the instance file format: JSON header plus base64
    /// lower triangles of A and W. Loading reproduces both bit-exactly.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(InstanceFile {
            format: "ogplab-instance-v1".into(),
            n: self.n,
            ones: self.ones,
            rho: self.rho,
            lambda: self.lambda,
            seed: self.seed,
            shuffled: self.shuffled,
            support: self.support.clone(),
            a_lower_b64: lower_triangle_b64(&self.a, self.n),
            w_lower_b64: lower_triangle_b64(&self.w, self.n),
        })
        .expect("instance serializes")
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        let f: InstanceFile = serde_json::from_value(v.clone())?;
        if f.format != "ogplab-instance-v1" {
            return Err(Error::Decode(format!("unknown format {}", f.format)));
        }
        let a = matrix_from_b64(&f.a_lower_b64, f.n)?;
        let w = matrix_from_b64(&f.w_lower_b64, f.n)?;
        if f.support.len() != f.ones {
            return Err(Error::Decode("support length disagrees with header".into()));
        }
        let mut is_planted = vec![false; f.n];
        for &i in &f.support {
            if i >= f.n {
                return Err(Error::Decode(format!("support index {i} out of range")));
            }
            is_planted[i] = true;
        }
        Ok(Self {
            n: f.n,
            ones: f.ones,
            rho: f.rho,
            lambda: f.lambda,
            seed: f.seed,
            shuffled: f.shuffled,
            support: f.support,
            is_planted,
            a,
            w,
        })
    }

    pub fn write_to(&self, path: &std::path::Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        serde_json::to_writer(std::io::BufWriter::new(file), &self.to_json())?;
        Ok(())
    }

    pub fn read_from(path: &std::path::Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        let v: serde_json::Value = serde_json::from_reader(std::io::BufReader::new(file))?;
        Self::from_json(&v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn canonical_small_instance() {
        let inst = PlantedInstance::generate(4, 0.5, 0.0, 7).unwrap();
        assert_eq!(inst.support(), &[0, 1]);
        // λ = 0 forces A = W.
        assert_eq!(inst.a(), inst.w());
    }

    #[test]
    fn signal_block_is_lambda_over_n() {
        let inst = PlantedInstance::generate(4, 0.5, 8.0, 7).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let diff = inst.a()[i * 4 + j] - inst.w()[i * 4 + j];
                if i < 2 && j < 2 {
                    assert_eq!(diff, 2.0);
                } else {
                    assert_eq!(diff, 0.0);
                }
            }
        }
    }

    #[test]
    fn seed_determinism_is_bitwise() {
        let a = PlantedInstance::generate(100, 0.3, 1.0, 1).unwrap();
        let b = PlantedInstance::generate(100, 0.3, 1.0, 1).unwrap();
        assert_eq!(a.a(), b.a());
        assert_eq!(a.w(), b.w());
        assert_eq!(a.support(), b.support());
    }

    #[test]
    fn degenerate_planting_rejected() {
        assert!(PlantedInstance::generate(4, 0.05, 1.0, 0).is_err());
        assert!(PlantedInstance::generate(4, 0.999, 1.0, 0).is_err());
        assert!(PlantedInstance::generate(4, 1.0, 1.0, 0).is_err());
    }

    #[test]
    fn rounding_rules_match_half_open_intervals() {
        // Nρ = 2.5 lies in (1.5, 2.5] so ρ_N rounds down…
        assert_eq!(rho_index(5, 0.5), 2);
        // …while Nq = 2.5 lies in [2.5, 3.5) so q_N rounds up.
        assert_eq!(q_index(5, 0.5), 3);
        assert_eq!(rho_index(10, 0.25), 2); // 2.5 → 2
        assert_eq!(q_index(10, 0.25), 3); // 2.5 → 3
        assert_eq!(rho_index(10, 0.23), 2);
        assert_eq!(q_index(10, 0.23), 2);
        assert_eq!(rho_index(100, 0.3), 30);
    }

    #[test]
    fn wrong_weight_configuration_rejected() {
        let inst = PlantedInstance::generate(8, 0.5, 1.0, 3).unwrap();
        assert!(Configuration::new(&inst, &[0, 1, 2]).is_err());
        assert!(Configuration::new(&inst, &[0, 1, 2, 8]).is_err());
        assert!(Configuration::new(&inst, &[0, 0, 1, 2]).is_err());
    }

    #[test]
    fn planted_energy_with_zero_noise() {
        // W = 0, x = v: (1/N)(v, Av) = λρ².
        let n = 10;
        let inst = PlantedInstance::with_noise_matrix(
            n,
            0.5,
            3.0,
            0,
            (0..5).collect(),
            vec![0.0; n * n],
        )
        .unwrap();
        let x = Configuration::planted(&inst);
        let e = inst.energy(&x).unwrap();
        assert!((e.total / n as f64 - 3.0 * 0.25).abs() < 1e-12);
        assert_eq!(e.noise, 0.0);
    }

    #[test]
    fn decomposition_identity() {
        let inst = PlantedInstance::generate(10, 0.4, 2.5, 11).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        for _ in 0..50 {
            let x = Configuration::uniform(&inst, &mut rng);
            let e = inst.energy(&x).unwrap();
            assert!((e.total - (e.noise + e.signal)).abs() < 1e-10);
        }
    }

    #[test]
    fn overlap_endpoints_and_baseline() {
        let inst = PlantedInstance::generate(40, 0.25, 1.0, 2).unwrap();
        let planted = Configuration::planted(&inst);
        assert!((inst.overlap(&planted) - inst.rho_n()).abs() < 1e-15);
        let disjoint: Vec<usize> = (10..20).collect();
        let x = Configuration::new(&inst, &disjoint).unwrap();
        assert_eq!(x.overlap_count(), 0);

        // Uniform draws have mean overlap ρ_N² (exactly kρ_N/N in expectation);
        // check within 3σ over 10⁴ draws.
        let inst = PlantedInstance::generate(100, 0.3, 0.0, 9).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(77);
        let trials = 10_000;
        let mut samples = Vec::with_capacity(trials);
        for _ in 0..trials {
            let x = Configuration::uniform(&inst, &mut rng);
            samples.push(inst.overlap(&x));
        }
        let mean = samples.iter().sum::<f64>() / trials as f64;
        let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (trials - 1) as f64;
        let se = (var / trials as f64).sqrt();
        let expect = inst.rho_n() * inst.rho_n();
        assert!(
            (mean - expect).abs() < 3.0 * se,
            "mean {mean} vs ρ² {expect} (3σ = {})",
            3.0 * se
        );
    }

    #[test]
    fn swap_is_involutive_and_matches_recompute() {
        let inst = PlantedInstance::generate(50, 0.3, 4.0, 21).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(13);
        let mut x = Configuration::uniform(&inst, &mut rng);

        // Involution: swap then swap back nets zero.
        let i = x.ones_list()[0];
        let j = x.zeros_list()[0];
        let d1 = x.apply_swap(&inst, i, j).unwrap();
        let d2 = x.apply_swap(&inst, j, i).unwrap();
        assert!((d1 + d2).abs() < 1e-10);

        // 1000 random moves: delta vs full recompute, and cache agreement.
        let mut max_err: f64 = 0.0;
        for _ in 0..1000 {
            let i = x.ones_list()[rng.random_range(0..x.ones_list().len())];
            let j = x.zeros_list()[rng.random_range(0..x.zeros_list().len())];
            let before = inst.energy(&x).unwrap().total;
            let delta = x.apply_swap(&inst, i, j).unwrap();
            let after = inst.energy(&x).unwrap().total;
            max_err = max_err.max((after - before - delta).abs());
            max_err = max_err.max((x.energy() - after).abs());
        }
        assert!(max_err < 1e-9, "max_err = {max_err}");
    }

    #[test]
    fn swap_rejects_bad_indices() {
        let inst = PlantedInstance::generate(10, 0.5, 1.0, 0).unwrap();
        let x = Configuration::planted(&inst);
        assert!(inst.swap_delta(&x, 7, 2).is_err()); // x_7 = 0
        assert!(inst.swap_delta(&x, 0, 1).is_err()); // x_1 = 1
        assert!(inst.swap_delta(&x, 0, 99).is_err());
    }

    #[test]
    fn zero_matrix_swaps_are_flat() {
        let n = 12;
        let inst = PlantedInstance::with_noise_matrix(
            n,
            0.5,
            0.0,
            0,
            (0..6).collect(),
            vec![0.0; n * n],
        )
        .unwrap();
        let x = Configuration::planted(&inst);
        assert_eq!(inst.swap_delta(&x, 0, 7).unwrap(), 0.0);
    }

    #[test]
    fn energy_invariant_under_simultaneous_permutation() {
        let n = 12;
        let inst = PlantedInstance::generate(n, 0.5, 2.0, 4).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let mut perm: Vec<usize> = (0..n).collect();
        for t in (1..n).rev() {
            let r = rng.random_range(0..=t);
            perm.swap(t, r);
        }
        // Permute both the matrix and the planted support.
        let mut w2 = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                w2[perm[i] * n + perm[j]] = inst.w()[i * n + j];
            }
        }
        let support2: Vec<usize> = inst.support().iter().map(|&i| perm[i]).collect();
        let inst2 =
            PlantedInstance::with_noise_matrix(n, 0.5, 2.0, 0, support2, w2).unwrap();

        let x = Configuration::uniform(&inst, &mut rng);
        let mapped: Vec<usize> = x.ones_list().iter().map(|&i| perm[i]).collect();
        let y = Configuration::new(&inst2, &mapped).unwrap();
        assert!((x.energy() - y.energy()).abs() < 1e-10);
        assert_eq!(x.overlap_count(), y.overlap_count());
    }

    #[test]
    fn quadratic_form_variance() {
        // Var((x, Wx)) = (2/N)(Σ x_i²)² = 2Nρ_N²; 10⁴ fresh draws at N = 40.
        let n = 40;
        let k = 20;
        let trials = 10_000;
        let support: Vec<usize> = (0..k).collect();
        let mut vals = Vec::with_capacity(trials);
        for seed in 0..trials as u64 {
            let inst = PlantedInstance::generate(n, 0.5, 0.0, seed).unwrap();
            let x = Configuration::new(&inst, &support).unwrap();
            vals.push(x.energy());
        }
        let mean = vals.iter().sum::<f64>() / trials as f64;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (trials - 1) as f64;
        let expect = 2.0 * (k * k) as f64 / n as f64;
        assert!(
            (var - expect).abs() < 0.05 * expect,
            "var {var} vs expected {expect}"
        );
    }

    #[test]
    fn serialization_round_trip_is_bit_exact() {
        let inst = PlantedInstance::generate_with(30, 0.27, 3.5, 99, true).unwrap();
        let json = inst.to_json();
        let back = PlantedInstance::from_json(&json).unwrap();
        assert_eq!(inst.a(), back.a());
        assert_eq!(inst.w(), back.w());
        assert_eq!(inst.support(), back.support());
        assert_eq!(inst.seed(), back.seed());
        assert_eq!(inst.lambda(), back.lambda());
    }
}
