//! Temporary diagnostics: solver accuracy at the suspicious converged measure.

mod support;

use ogplab::parisi::{solve_pde, Mode, SolverConfig, StepMeasure};

#[test]
#[ignore]
fn solver_vs_oracle_at_large_heights() {
    let rho = 0.05f64;
    let heights = vec![
        0.0,
        1.311365408355253,
        3.3994627353046964,
        4.699839511431798,
        5.417153081809996,
        5.760053927271154,
        5.881795122746599,
        6.4261763620368,
        6.807445253495198,
        6.84886821556952,
        8.966122465415726,
        9.119579821959997,
    ];
    let measure = StepMeasure::uniform(rho, heights, 0.0).unwrap();
    let config = SolverConfig { k_intervals: 12, grid_dx: 0.02, ..SolverConfig::default() };
    let fine = SolverConfig {
        k_intervals: 12,
        grid_dx: 0.005,
        gh_nodes: 81,
        ..SolverConfig::default()
    };
    for lambda in [-1.05221f64, -0.9, -0.7355] {
        let sol = solve_pde(&measure, lambda, Mode::ZeroTemperature, &config).unwrap();
        let sol_fine = solve_pde(&measure, lambda, Mode::ZeroTemperature, &fine).unwrap();
        let reference = support::cole_hopf_u00(&measure, lambda);
        println!(
            "Λ={lambda}: solver {:.9} fine {:.9} oracle {:.9} (Δ = {:.2e}, Δfine = {:.2e})",
            sol.u00,
            sol_fine.u00,
            reference,
            (sol.u00 - reference).abs(),
            (sol_fine.u00 - reference).abs()
        );
        println!("   w00 {:.6} vs fine {:.6}; dx_u range [{:.3e}, {:.3}]",
            sol.w00, sol_fine.w00, sol.dx_u_min, sol.dx_u_max);
    }
}
