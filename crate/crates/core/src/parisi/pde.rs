//! Backward solver for the Parisi-type Cauchy problem
//!
//! ```text
//! ∂_t u + 2(∂_x² u + m(t)(∂_x u)²) = 0,   (t, x) ∈ [0, ρ) × ℝ
//! ```
//!
//! with terminal data `(x + Λ + 2c)₊` (zero temperature) or
//! `β⁻¹ log(1 + e^{β(x+Λ)})` (finite β, where `m(t) = β·μ([0,t])`).
//!
//! For piecewise-constant `m` the solution advances exactly one interval at
//! a time through the Cole-Hopf transform `w = e^{m·u}`, which turns the
//! interval problem into the backward heat equation: propagation is Gaussian
//! convolution with variance `4Δt`. The terminal-adjacent interval is done in
//! closed form (zero temperature) or by a dedicated Simpson rule against the
//! analytic terminal data (finite β); interior intervals use Gauss-Hermite
//! quadrature on a uniform spatial grid with cubic interpolation. Runs of
//! equal `m` are merged first since their propagations compose exactly.
//!
//! The derivative field `∂_x u` is propagated alongside `u`: it solves the
//! linearized equation, whose Cole-Hopf form `W = (∂_x u)·e^{m·u}` is again
//! the backward heat equation, so each layer updates it with the same
//! quadrature at no extra structure. By spatial translation invariance
//! `∂_Λ u = ∂_x u`, which is the quantile `P(X_ρ + Λ ≥ 0)` of the associated
//! diffusion at (0, 0).

use super::measure::StepMeasure;
use super::quad::{cubic_eval, gauss_hermite_normalized, Grid};
use crate::special::{gaussian_positive_part_mean, log_add_exp, norm_cdf, norm_logcdf, norm_pdf};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Heights below this are treated as m = 0 (avoids catastrophic cancellation
/// in `log E[exp(m·u)]/m`; the induced error is O(m·Var u) < 1e-7).
const M_TINY: f64 = 1e-7;

/// Simpson intervals for the finite-β terminal layer.
const SIMPSON_INTERVALS: usize = 768;
/// Standard-normal truncation for the Simpson rule.
const SIMPSON_RANGE: f64 = 9.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    ZeroTemperature,
    FiniteBeta { beta: f64 },
}

impl Mode {
    pub fn beta(&self) -> Option<f64> {
        match self {
            Mode::ZeroTemperature => None,
            Mode::FiniteBeta { beta } => Some(*beta),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    /// Number of uniform time intervals for discretized measures.
    #[serde(rename = "K")]
    pub k_intervals: usize,
    pub gh_nodes: usize,
    pub grid_dx: f64,
    /// Spatial half-width is `|Λ| + 2c + 2∫m + L_factor·2√ρ`.
    #[serde(rename = "L_factor")]
    pub l_factor: f64,
    /// Stationarity tolerance for the outer minimization.
    pub tol: f64,
    /// Outer iteration cap for the minimization.
    pub max_iter: usize,
    /// Truncation-leak tolerance: |u(0,0; L) − u(0,0; 1.5L)|.
    pub leak_tol: f64,
    pub max_leak_retries: u32,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            k_intervals: 16,
            gh_nodes: 41,
            grid_dx: 0.01,
            l_factor: 8.0,
            tol: 1e-4,
            max_iter: 500,
            leak_tol: 1e-7,
            max_leak_retries: 3,
        }
    }
}

/// Solution fields at t = 0 plus diagnostics.
#[derive(Debug, Clone)]
pub struct PdeSolution {
    /// `u(0, 0)`.
    pub u00: f64,
    /// `∂_Λ u(0,0) = ∂_x u(0,0) = P(X_ρ + Λ ≥ 0)`.
    pub w00: f64,
    pub grid: Grid,
    pub u: Vec<f64>,
    pub w: Vec<f64>,
    /// Extremes of `∂_x u` over every layer (maximum-principle check).
    pub dx_u_min: f64,
    pub dx_u_max: f64,
    /// Total spatial shift `Λ + 2c` of the terminal data.
    pub shift: f64,
    /// `2∫₀^ρ m`, the x → +∞ asymptote constant at t = 0.
    pub drift0: f64,
    /// Boundary-sensitivity measure when the leak check ran.
    pub leak: Option<f64>,
    pub l_used: f64,
}

impl PdeSolution {
    /// Evaluate `u(0, ·)` anywhere (cubic interpolation plus asymptotics).
    pub fn eval_u(&self, x: f64) -> f64 {
        let (shift, drift) = (self.shift, self.drift0);
        cubic_eval(&self.grid, &self.u, x, || 0.0, || x + shift + drift)
    }

    /// Evaluate `∂_x u(0, ·)` anywhere.
    pub fn eval_w(&self, x: f64) -> f64 {
        cubic_eval(&self.grid, &self.w, x, || 0.0, || 1.0)
    }

    /// `∂²_Λ u(0,0) = ∂_x w(0,0)` by central difference on the grid.
    pub fn w00_slope(&self) -> f64 {
        let z = self.grid.zero;
        (self.w[z + 1] - self.w[z - 1]) / (2.0 * self.grid.dx)
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Stable `β⁻¹ log(1 + e^{β y})`.
fn softplus_over_beta(y: f64, beta: f64) -> f64 {
    let z = beta * y;
    (z.max(0.0) + (-z.abs()).exp().ln_1p()) / beta
}

/// Validate the measure/mode pairing.
fn check_mode(measure: &StepMeasure, mode: Mode) -> Result<()> {
    if let Mode::FiniteBeta { beta } = mode {
        if beta <= 0.0 {
            return Err(Error::InvalidParameter(format!("beta = {beta} must be positive")));
        }
        if measure.atom() != 0.0 {
            return Err(Error::InvalidParameter(
                "finite-β mode carries no atom at ρ (it is implicit in m(ρ⁻) < β)".into(),
            ));
        }
    }
    Ok(())
}

/// Solve the Cauchy problem with automatic truncation-leak control: the
/// domain is enlarged (up to `max_leak_retries` times) until doubling it
/// moves `u(0,0)` by less than `leak_tol`.
pub fn solve_pde(
    measure: &StepMeasure,
    lambda: f64,
    mode: Mode,
    config: &SolverConfig,
) -> Result<PdeSolution> {
    check_mode(measure, mode)?;
    let mut l = base_half_width(measure, lambda, config);
    let mut leak = f64::INFINITY;
    for _ in 0..=config.max_leak_retries {
        let tight = solve_raw(measure, lambda, mode, config, l);
        let wide = solve_raw(measure, lambda, mode, config, 1.5 * l);
        leak = (tight.u00 - wide.u00).abs();
        if leak <= config.leak_tol {
            let mut sol = wide;
            sol.leak = Some(leak);
            return Ok(sol);
        }
        l *= 1.5;
    }
    Err(Error::TruncationLeak { leak, retries: config.max_leak_retries })
}

/// Single solve without the leak control (used inside optimization loops
/// where the domain has already been vetted).
pub fn solve_raw(
    measure: &StepMeasure,
    lambda: f64,
    mode: Mode,
    config: &SolverConfig,
    l_half: f64,
) -> PdeSolution {
    let rho = measure.rho();
    let shift = match mode {
        Mode::ZeroTemperature => lambda + 2.0 * measure.atom(),
        Mode::FiniteBeta { .. } => lambda,
    };
    let grid = Grid::symmetric(l_half, config.grid_dx);
    let segments = measure.merged_segments();
    let last = segments.len() - 1;

    // Terminal-adjacent layer: from t = ρ down to the last break.
    let (t_lo, _t_hi, m_bar) = segments[last];
    let sigma = (4.0 * (rho - t_lo)).sqrt();
    let mut u = vec![0.0; grid.len];
    let mut w = vec![0.0; grid.len];
    match mode {
        Mode::ZeroTemperature => {
            terminal_zero_temp(&grid, shift, sigma, m_bar, &mut u, &mut w);
        }
        Mode::FiniteBeta { beta } => {
            terminal_finite_beta(&grid, shift, sigma, m_bar, beta, &mut u, &mut w);
        }
    }

    let mut dx_u_min = w.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut dx_u_max = w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);

    // Interior layers, walking backward in time.
    let (nodes, weights) = gauss_hermite_normalized(config.gh_nodes);
    for seg in (0..last).rev() {
        let (lo, hi, m_seg) = segments[seg];
        let sigma = (4.0 * (hi - lo)).sqrt();
        let drift_hi = measure.drift_after(hi);
        let (nu, nw) = propagate_layer(
            &grid, &u, &w, sigma, m_seg, shift, drift_hi, &nodes, &weights,
        );
        u = nu;
        w = nw;
        dx_u_min = dx_u_min.min(w.iter().cloned().fold(f64::INFINITY, f64::min));
        dx_u_max = dx_u_max.max(w.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
    }

    let u00 = u[grid.zero];
    let w00 = w[grid.zero];
    PdeSolution {
        u00,
        w00,
        u,
        w,
        dx_u_min,
        dx_u_max,
        shift,
        drift0: measure.drift_after(0.0),
        leak: None,
        l_used: l_half,
        grid,
    }
}

pub(crate) fn base_half_width(measure: &StepMeasure, lambda: f64, config: &SolverConfig) -> f64 {
    let shift = lambda.abs() + 2.0 * measure.atom();
    shift + measure.drift_after(0.0) + config.l_factor * 2.0 * measure.rho().sqrt()
}

/// Closed-form terminal layer at zero temperature. With `a = x + shift` and
/// `Y ~ N(a, σ²)`:
///
/// - m = 0:  u = E[Y₊] = σφ(a/σ) + aΦ(a/σ),  ∂_x u = Φ(a/σ);
/// - m > 0:  E[e^{mY₊}] = Φ(−a/σ) + e^{ma + m²σ²/2}Φ(a/σ + mσ),
///           u = m⁻¹ log E[e^{mY₊}],  ∂_x u = sigmoid(A₁ − A₀)
///   where A₀, A₁ are the logs of the two summands.
fn terminal_zero_temp(
    grid: &Grid,
    shift: f64,
    sigma: f64,
    m_bar: f64,
    u: &mut [f64],
    w: &mut [f64],
) {
    for i in 0..grid.len {
        let a = grid.x(i) + shift;
        if m_bar <= M_TINY {
            u[i] = gaussian_positive_part_mean(a, sigma);
            w[i] = norm_cdf(a / sigma);
        } else {
            let a0 = norm_logcdf(-a / sigma);
            let a1 = m_bar * a + 0.5 * m_bar * m_bar * sigma * sigma
                + norm_logcdf(a / sigma + m_bar * sigma);
            u[i] = log_add_exp(a0, a1) / m_bar;
            w[i] = sigmoid(a1 - a0);
        }
    }
}

/// Finite-β terminal layer: composite Simpson against the analytic terminal
/// data (smooth, so no grid interpolation error enters here).
fn terminal_finite_beta(
    grid: &Grid,
    shift: f64,
    sigma: f64,
    m_bar: f64,
    beta: f64,
    u: &mut [f64],
    w: &mut [f64],
) {
    let n = SIMPSON_INTERVALS;
    let h = 2.0 * SIMPSON_RANGE / n as f64;
    let coef: Vec<f64> = (0..=n)
        .map(|i| {
            let c = if i == 0 || i == n {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            c * h / 3.0
        })
        .collect();
    let zs: Vec<f64> = (0..=n).map(|i| -SIMPSON_RANGE + i as f64 * h).collect();

    for gi in 0..grid.len {
        let x = grid.x(gi);
        if m_bar <= M_TINY {
            let mut acc_u = 0.0;
            let mut acc_w = 0.0;
            for (z, c) in zs.iter().zip(&coef) {
                let y = x + sigma * z + shift;
                let p = c * norm_pdf(*z);
                acc_u += p * softplus_over_beta(y, beta);
                acc_w += p * sigmoid(beta * y);
            }
            u[gi] = acc_u;
            w[gi] = acc_w;
        } else {
            // log-domain Simpson for E[e^{m·u_T}] and E[∂u_T·e^{m·u_T}].
            let mut terms = Vec::with_capacity(n + 1);
            let mut wts = Vec::with_capacity(n + 1);
            let mut max_t = f64::NEG_INFINITY;
            for (z, c) in zs.iter().zip(&coef) {
                let y = x + sigma * z + shift;
                let t = c.ln() - 0.5 * z * z - 0.5 * (2.0 * std::f64::consts::PI).ln()
                    + m_bar * softplus_over_beta(y, beta);
                terms.push(t);
                wts.push(sigmoid(beta * y));
                if t > max_t {
                    max_t = t;
                }
            }
            let mut z_sum = 0.0;
            let mut w_sum = 0.0;
            for (t, wt) in terms.iter().zip(&wts) {
                let e = (t - max_t).exp();
                z_sum += e;
                w_sum += e * wt;
            }
            u[gi] = (max_t + z_sum.ln()) / m_bar;
            w[gi] = w_sum / z_sum;
        }
    }
}

/// One interior Cole-Hopf layer: given fields at the upper time of the
/// segment, produce fields at its lower time. `drift_hi` is the asymptote
/// constant of the incoming data.
#[allow(clippy::too_many_arguments)]
fn propagate_layer(
    grid: &Grid,
    u_hi: &[f64],
    w_hi: &[f64],
    sigma: f64,
    m_bar: f64,
    shift: f64,
    drift_hi: f64,
    nodes: &[f64],
    weights: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let mut u_lo = vec![0.0; grid.len];
    let mut w_lo = vec![0.0; grid.len];
    let scale = sigma * std::f64::consts::SQRT_2;

    let eval_u = |y: f64| cubic_eval(grid, u_hi, y, || 0.0, || y + shift + drift_hi);
    let eval_w = |y: f64| cubic_eval(grid, w_hi, y, || 0.0, || 1.0);

    let mut us = vec![0.0; nodes.len()];
    let mut ws = vec![0.0; nodes.len()];
    for gi in 0..grid.len {
        let x = grid.x(gi);
        for (t, &xi) in nodes.iter().enumerate() {
            let y = x + scale * xi;
            us[t] = eval_u(y);
            ws[t] = eval_w(y);
        }
        if m_bar <= M_TINY {
            let mut acc_u = 0.0;
            let mut acc_w = 0.0;
            for t in 0..nodes.len() {
                acc_u += weights[t] * us[t];
                acc_w += weights[t] * ws[t];
            }
            u_lo[gi] = acc_u;
            w_lo[gi] = acc_w;
        } else {
            let mut max_g = f64::NEG_INFINITY;
            for &uv in us.iter() {
                max_g = max_g.max(m_bar * uv);
            }
            let mut z_sum = 0.0;
            let mut w_sum = 0.0;
            for t in 0..nodes.len() {
                let e = weights[t] * (m_bar * us[t] - max_g).exp();
                z_sum += e;
                w_sum += e * ws[t];
            }
            u_lo[gi] = (max_g + z_sum.ln()) / m_bar;
            w_lo[gi] = w_sum / z_sum;
        }
    }
    (u_lo, w_lo)
}
