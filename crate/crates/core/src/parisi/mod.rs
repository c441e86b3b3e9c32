//! Parisi-type variational solver for the constrained ground-state energy.
//!
//! The limit of the constrained maximum likelihood `E_N(q_N; ρ_N, λ)` is
//! `E(q; ρ, λ) = λq² + min_{ν, Λ} P(ν, Λ)` where, for `ν = m(s)ds + c·δ_ρ`
//! with `m ≥ 0` nondecreasing and `Λ = (Λ₁, Λ₂)`,
//!
//! ```text
//! P(ν, Λ) = ρ·u¹(0,0) + (1−ρ)·u²(0,0) − Λ₁q − Λ₂(ρ−q) − 2∫ s dν(s)
//! ```
//!
//! and `u^i` solves the backward PDE of [`pde`] with terminal data
//! `(x + Λ_i + 2c)₊`. The finite-β functional replaces the terminal data by
//! `β⁻¹log(1 + e^{β(x+Λ_i)})`, takes `m(s) = β·μ([0,s])` for a probability
//! measure μ, and adds `log2/β`; one internal convention
//! (`−2∫ s·m(s) ds − 2cρ`) covers both, which is consistent with the
//! translation invariance `P(ν, Λ) = P(ν − cδ_ρ, Λ + 2c)`.

mod measure;
mod minimize;
mod pde;
mod quad;

pub use measure::StepMeasure;
pub use minimize::{functional_p, minimize, MinimizeOptions, ParisiSolution};
pub use pde::{solve_pde, solve_raw, Mode, PdeSolution, SolverConfig};
pub use quad::{cubic_eval, gauss_hermite_normalized, Grid};

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_measure_functional_value() {
        // ν = 0, Λ = (0,0): both species see the plain heat solution, and all
        // linear terms vanish, so P = 2√ρ/√(2π) for any q.
        let rho = 0.25f64;
        let measure = StepMeasure::zero(rho);
        let config = SolverConfig::default();
        let p = functional_p(&measure, 0.0, 0.0, 0.1, Mode::ZeroTemperature, &config).unwrap();
        let expect = 2.0 * rho.sqrt() / (2.0 * std::f64::consts::PI).sqrt();
        assert!((p - expect).abs() < 1e-8, "P = {p} vs {expect}");
    }

    #[test]
    fn shift_invariance_of_the_functional() {
        // P(ν, Λ) = P(ν − cδ_ρ, Λ + 2c): the atom trades exactly against a
        // multiplier shift (checks the −2∫s dν convention).
        let rho = 0.2;
        let q = 0.07;
        let config = SolverConfig::default();
        let c = 0.15;
        let with_atom = StepMeasure::uniform(rho, vec![0.1, 0.4, 0.9, 1.3], c).unwrap();
        let without = with_atom.with_atom(0.0).unwrap();
        let (l1, l2) = (-0.2, 0.35);
        let p_atom =
            functional_p(&with_atom, l1, l2, q, Mode::ZeroTemperature, &config).unwrap();
        let p_shift = functional_p(
            &without,
            l1 + 2.0 * c,
            l2 + 2.0 * c,
            q,
            Mode::ZeroTemperature,
            &config,
        )
        .unwrap();
        assert!((p_atom - p_shift).abs() < 1e-7, "{p_atom} vs {p_shift}");
    }

    #[test]
    fn functional_is_midpoint_convex_along_segments() {
        let rho = 0.15;
        let q = 0.05;
        let config = SolverConfig::default();
        let cases = [
            (vec![0.0, 0.2, 0.5, 1.0], (-0.3, 0.2), vec![0.4, 0.4, 0.8, 0.9], (0.25, -0.1)),
            (vec![0.1, 0.1, 0.1, 0.1], (0.0, 0.0), vec![0.0, 0.5, 1.0, 2.0], (-0.5, 0.4)),
        ];
        for (h1, lam_a, h2, lam_b) in cases {
            let m1 = StepMeasure::uniform(rho, h1.clone(), 0.0).unwrap();
            let m2 = StepMeasure::uniform(rho, h2.clone(), 0.0).unwrap();
            let mid_heights: Vec<f64> =
                h1.iter().zip(&h2).map(|(a, b)| 0.5 * (a + b)).collect();
            let mid = StepMeasure::uniform(rho, mid_heights, 0.0).unwrap();
            let p1 = functional_p(&m1, lam_a.0, lam_a.1, q, Mode::ZeroTemperature, &config)
                .unwrap();
            let p2 = functional_p(&m2, lam_b.0, lam_b.1, q, Mode::ZeroTemperature, &config)
                .unwrap();
            let pm = functional_p(
                &mid,
                0.5 * (lam_a.0 + lam_b.0),
                0.5 * (lam_a.1 + lam_b.1),
                q,
                Mode::ZeroTemperature,
                &config,
            )
            .unwrap();
            assert!(
                pm <= 0.5 * (p1 + p2) + 1e-7,
                "midpoint convexity violated: {pm} vs {}",
                0.5 * (p1 + p2)
            );
        }
    }

    #[test]
    fn gamma_limit_recovery_sequence() {
        // Push a zero-temperature measure through the finite-β functional as
        // μ_β with β·μ_β([0,s]) = m(s): the values converge at rate O(1/β).
        let rho = 0.2;
        let q = 0.06;
        let config = SolverConfig::default();
        let heights = vec![0.2, 0.5, 0.9, 1.4];
        let measure = StepMeasure::uniform(rho, heights, 0.0).unwrap();
        let (l1, l2) = (-0.1, 0.25);
        let p_zero =
            functional_p(&measure, l1, l2, q, Mode::ZeroTemperature, &config).unwrap();
        let beta = 64.0;
        let p_beta = functional_p(
            &measure,
            l1,
            l2,
            q,
            Mode::FiniteBeta { beta },
            &config,
        )
        .unwrap();
        assert!(
            (p_beta - p_zero).abs() < 3.0 * std::f64::consts::LN_2 / beta,
            "gap {}",
            (p_beta - p_zero).abs()
        );
    }
}
