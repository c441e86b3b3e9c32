//! Temporary diagnostics (ignored by default).

use ogplab::parisi::{functional_p, minimize, MinimizeOptions, Mode, SolverConfig, StepMeasure};

#[test]
#[ignore]
fn flat_direction_at_symmetric_point() {
    let rho = 0.05f64;
    let q = rho * rho;
    let solver = SolverConfig { k_intervals: 12, grid_dx: 0.02, ..SolverConfig::default() };

    for (label, multistart) in [("single", 1usize), ("multi", 2)] {
        let opts = MinimizeOptions {
            config: solver.clone(),
            mode: Mode::ZeroTemperature,
            multistart,
            optimize_atom: false,
        };
        let sol = minimize(rho, q, 0.0, &opts).unwrap();
        println!(
            "[{label}] P={:.10} mass={:.4} L1={:.5} L2={:.5} gnorm={:.2e} iters={} conv={} spread={:.2e}",
            sol.p_value,
            sol.mass,
            sol.lambda1,
            sol.lambda2,
            sol.m_grad_norm,
            sol.iterations,
            sol.converged,
            sol.multistart_spread
        );
        println!("    heights: {:?}", sol.nu.heights());
    }

    // P along the "trailing mass" gauge direction: block mass M on the last
    // interval, multipliers re-centered by hand via the functional.
    let k = 12;
    let lam_base = -0.45f64; // near the optimizer's multipliers
    for block in [0.0, 0.5, 1.0, 2.0, 3.0] {
        let mut heights = vec![0.0; k];
        heights[k - 1] = block;
        let m = StepMeasure::uniform(rho, heights, 0.0).unwrap();
        let w = rho / k as f64;
        // Try a few Λ shifts and report the best P.
        let mut best = f64::INFINITY;
        for shift_frac in [0.0, 0.5, 1.0] {
            let lam = lam_base - 2.0 * block * w * shift_frac;
            let p = functional_p(&m, lam, lam, q, Mode::ZeroTemperature, &solver).unwrap();
            best = best.min(p);
        }
        println!("block={block}: mass={:.4} best P={:.10}", block * w, best);
    }
}
