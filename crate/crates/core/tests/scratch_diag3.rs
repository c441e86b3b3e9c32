//! Temporary diagnostics: K-dependence of the optimizer's mass.

use ogplab::parisi::{minimize, MinimizeOptions, Mode, SolverConfig};

#[test]
#[ignore]
fn mass_vs_k_at_symmetric_point() {
    for (rho, q_label) in [(0.05f64, "rho^2"), (0.1, "rho^2"), (0.2, "rho^2")] {
        let q = rho * rho;
        let bound = 0.5 * (rho * (1.0 / rho).ln()).sqrt();
        for k in [8usize, 12, 16, 24, 32] {
            let solver = SolverConfig {
                k_intervals: k,
                grid_dx: 0.02,
                ..SolverConfig::default()
            };
            let opts = MinimizeOptions {
                config: solver,
                mode: Mode::ZeroTemperature,
                multistart: 1,
                optimize_atom: false,
            };
            let sol = minimize(rho, q, 0.0, &opts).unwrap();
            println!(
                "rho={rho} q={q_label} K={k:2}: P={:.8} mass={:.4} (bound {:.4}) tail_h={:.3} gnorm={:.1e} iters={}",
                sol.p_value,
                sol.mass,
                bound,
                sol.nu.heights().last().unwrap(),
                sol.m_grad_norm,
                sol.iterations
            );
        }
    }
}
