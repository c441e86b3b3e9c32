//! Discretized order-parameter measures `ν = m(s)ds + c·δ_ρ`.
//!
//! `m` is a right-continuous nondecreasing step function on a grid of
//! `[0, ρ]`. At finite β the same object stores `m(s) = β·μ([0, s])` for a
//! probability measure μ on `[0, ρ]` (so `m ≤ β`, with `1 − m(ρ⁻)/β` the
//! implicit atom of μ at ρ), and the atom `c` is unused.

use crate::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepMeasure {
    rho: f64,
    /// `0 = t_0 < t_1 < … < t_K = ρ`.
    breaks: Vec<f64>,
    /// Value of `m` on `[t_j, t_{j+1})`; nondecreasing, ≥ 0.
    heights: Vec<f64>,
    /// Mass of the atom `c·δ_ρ` (zero-temperature mode only).
    atom: f64,
}

impl StepMeasure {
    pub fn new(rho: f64, breaks: Vec<f64>, heights: Vec<f64>, atom: f64) -> Result<Self> {
        if !(rho > 0.0) {
            return Err(Error::InvalidParameter(format!("rho = {rho} must be positive")));
        }
        if breaks.len() < 2 || heights.len() + 1 != breaks.len() {
            return Err(Error::InvalidParameter(
                "breaks must have one more entry than heights".into(),
            ));
        }
        if (breaks[0] - 0.0).abs() > 1e-14 || (breaks[breaks.len() - 1] - rho).abs() > 1e-12 {
            return Err(Error::InvalidParameter("grid must span [0, rho]".into()));
        }
        for w in breaks.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::InvalidParameter("grid points must increase".into()));
            }
        }
        let mut prev = 0.0;
        for (j, &h) in heights.iter().enumerate() {
            if h < -1e-12 {
                return Err(Error::InvalidParameter(format!("m must be nonnegative (h_{j} = {h})")));
            }
            if h < prev - 1e-10 {
                return Err(Error::InvalidParameter(format!(
                    "m must be nondecreasing (h_{j} = {h} < {prev})"
                )));
            }
            prev = h;
        }
        if atom < 0.0 {
            return Err(Error::InvalidParameter(format!("atom c = {atom} < 0")));
        }
        Ok(Self { rho, breaks, heights, atom })
    }

    /// The zero measure (ν = 0) on a single interval.
    pub fn zero(rho: f64) -> Self {
        Self { rho, breaks: vec![0.0, rho], heights: vec![0.0], atom: 0.0 }
    }

    /// Uniform K-interval grid with the given heights.
    pub fn uniform(rho: f64, heights: Vec<f64>, atom: f64) -> Result<Self> {
        let k = heights.len();
        if k == 0 {
            return Err(Error::InvalidParameter("need at least one interval".into()));
        }
        let breaks = (0..=k).map(|j| rho * j as f64 / k as f64).collect();
        Self::new(rho, breaks, heights, atom)
    }

    /// Uniform grid without the monotonicity check. The PDE layers are
    /// well-defined for any nonnegative step function; finite-difference
    /// probes of single heights may transiently break monotonicity.
    pub(crate) fn uniform_relaxed(rho: f64, heights: Vec<f64>, atom: f64) -> Self {
        let k = heights.len().max(1);
        let breaks = (0..=k).map(|j| rho * j as f64 / k as f64).collect();
        Self { rho, breaks, heights, atom }
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn heights(&self) -> &[f64] {
        &self.heights
    }

    pub fn atom(&self) -> f64 {
        self.atom
    }

    pub fn with_heights(&self, heights: Vec<f64>) -> Result<Self> {
        Self::new(self.rho, self.breaks.clone(), heights, self.atom)
    }

    pub fn with_atom(&self, atom: f64) -> Result<Self> {
        Self::new(self.rho, self.breaks.clone(), self.heights.clone(), atom)
    }

    /// `∫₀^ρ m(t) dt`.
    pub fn mass(&self) -> f64 {
        self.heights
            .iter()
            .zip(self.breaks.windows(2))
            .map(|(h, w)| h * (w[1] - w[0]))
            .sum()
    }

    /// `‖ν‖_TV = ∫ m + c`.
    pub fn total_variation(&self) -> f64 {
        self.mass() + self.atom
    }

    /// `∫₀^ρ s·m(s) ds`, exact for the step function.
    pub fn s_weighted_integral(&self) -> f64 {
        self.heights
            .iter()
            .zip(self.breaks.windows(2))
            .map(|(h, w)| h * (w[1] * w[1] - w[0] * w[0]) / 2.0)
            .sum()
    }

    /// `−2(∫ s dν) = −2(∫ s·m ds + c·ρ)`: the linear term of the functional.
    pub fn linear_term(&self) -> f64 {
        -2.0 * (self.s_weighted_integral() + self.atom * self.rho)
    }

    /// `2∫_t^ρ m(s) ds` — the drift constant in the `x → +∞` asymptote of the
    /// solution at time `t`.
    pub fn drift_after(&self, t: f64) -> f64 {
        let mut acc = 0.0;
        for (h, w) in self.heights.iter().zip(self.breaks.windows(2)) {
            let lo = w[0].max(t);
            if lo < w[1] {
                acc += h * (w[1] - lo);
            }
        }
        2.0 * acc
    }

    /// Intervals with equal (merged) heights, as `(t_lo, t_hi, m)` triples in
    /// increasing time. Heat propagation over equal-m intervals composes
    /// exactly, so merging loses nothing.
    pub fn merged_segments(&self) -> Vec<(f64, f64, f64)> {
        let mut out: Vec<(f64, f64, f64)> = Vec::new();
        for (h, w) in self.heights.iter().zip(self.breaks.windows(2)) {
            match out.last_mut() {
                Some(seg) if (seg.2 - h).abs() < 1e-15 => seg.1 = w[1],
                _ => out.push((w[0], w[1], *h)),
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation_rejects_bad_inputs() {
        assert!(StepMeasure::uniform(0.2, vec![1.0, 0.5], 0.0).is_err()); // decreasing
        assert!(StepMeasure::uniform(0.2, vec![-0.1, 0.5], 0.0).is_err()); // negative
        assert!(StepMeasure::uniform(0.2, vec![0.1], -1.0).is_err()); // bad atom
        assert!(StepMeasure::new(0.2, vec![0.0, 0.1], vec![0.1, 0.2], 0.0).is_err());
    }

    #[test]
    fn integrals_are_exact() {
        let m = StepMeasure::uniform(0.4, vec![0.0, 1.0, 1.0, 3.0], 0.25).unwrap();
        // Intervals of length 0.1 each: ∫m = 0.1(0 + 1 + 1 + 3) = 0.5.
        assert!((m.mass() - 0.5).abs() < 1e-15);
        assert!((m.total_variation() - 0.75).abs() < 1e-15);
        // ∫ s·m: 1·(0.2²−0.1²)/2 + 1·(0.3²−0.2²)/2 + 3·(0.4²−0.3²)/2
        let expect = 0.5 * (0.04 - 0.01) + 0.5 * (0.09 - 0.04) + 1.5 * (0.16 - 0.09);
        assert!((m.s_weighted_integral() - expect).abs() < 1e-15);
        assert!((m.linear_term() + 2.0 * (expect + 0.25 * 0.4)).abs() < 1e-15);
        // drift_after(0.15) = 2[1·0.05 + 1·0.1 + 3·0.1]
        assert!((m.drift_after(0.15) - 2.0 * (0.05 + 0.1 + 0.3)).abs() < 1e-14);
    }

    #[test]
    fn merging_collapses_equal_heights() {
        let m = StepMeasure::uniform(0.4, vec![0.0, 1.0, 1.0, 3.0], 0.0).unwrap();
        let segs = m.merged_segments();
        assert_eq!(segs.len(), 3);
        assert_eq!(segs[0], (0.0, 0.1, 0.0));
        assert!((segs[1].1 - 0.3).abs() < 1e-15);
        assert_eq!(segs[1].2, 1.0);

        let zero = StepMeasure::uniform(0.25, vec![0.0; 16], 0.0).unwrap();
        assert_eq!(zero.merged_segments().len(), 1);
    }

    #[test]
    fn one_atom_linear_term_cross_check() {
        // μ = δ_Q at finite β: m(s) = β·1{s ≥ Q}. The quadrature of
        // ∫ 4β²·s·μ([0,s]) ds must equal 4β²(ρ²−Q²)/2 in closed form.
        let beta = 3.0;
        let rho = 0.4;
        let q_atom = 0.1;
        let m = StepMeasure::new(
            rho,
            vec![0.0, q_atom, rho],
            vec![0.0, beta],
            0.0,
        )
        .unwrap();
        let lhs = 4.0 * beta * m.s_weighted_integral(); // 4β²·∫s·μ([0,s])ds
        let rhs = 4.0 * beta * beta * (rho * rho - q_atom * q_atom) / 2.0;
        assert!((lhs - rhs).abs() < 1e-13);
    }
}
