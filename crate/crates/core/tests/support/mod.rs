//! Shared test support: an independent Cole-Hopf layer-recursion oracle for
//! the Parisi PDE.
//!
//! The oracle evaluates, for piecewise-constant m with values m_j on
//! [t_j, t_{j+1}), the recursion
//!
//! ```text
//! u(t_j, x) = m_j⁻¹ · log E[ exp(m_j · u(t_{j+1}, x + √(4Δt_j) Z)) ]
//! ```
//!
//! (plain Gaussian averaging when m_j = 0) by composite Simpson quadrature
//! on its own fine uniform grid with linear interpolation — a route that
//! shares nothing with the production solver's Gauss-Hermite nodes, cubic
//! interpolation, or closed-form terminal layer. The terminal layer
//! integrates the exact data `(y + Λ + 2c)₊`, splitting the integral at the
//! kink so Simpson keeps its full order.

#![allow(dead_code)]

use ogplab::parisi::StepMeasure;

const SIMPSON_N: usize = 1200;
const Z_RANGE: f64 = 8.5;

fn phi(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Composite Simpson of `f` over `[lo, hi]` with ~n intervals (rounded even).
fn simpson(lo: f64, hi: f64, n: usize, f: impl Fn(f64) -> f64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    let n = (n + n % 2).max(2);
    let h = (hi - lo) / n as f64;
    let mut acc = f(lo) + f(hi);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(lo + i as f64 * h);
    }
    acc * h / 3.0
}

struct OracleGrid {
    x0: f64,
    dx: f64,
    vals: Vec<f64>,
    /// Asymptote constant: u ≈ x + shift + drift for large x.
    shift: f64,
    drift: f64,
}

impl OracleGrid {
    fn eval(&self, y: f64) -> f64 {
        let t = (y - self.x0) / self.dx;
        if t <= 0.0 {
            return 0.0;
        }
        let imax = self.vals.len() - 1;
        if t >= imax as f64 {
            return y + self.shift + self.drift;
        }
        let i = t.floor() as usize;
        let s = t - i as f64;
        (1.0 - s) * self.vals[i] + s * self.vals[i + 1]
    }
}

/// Zero-temperature Cole-Hopf recursion oracle: u(0, 0) for terminal data
/// `(x + lambda + 2c)₊` under the given step measure.
pub fn cole_hopf_u00(measure: &StepMeasure, lambda: f64) -> f64 {
    let rho = measure.rho();
    let shift = lambda + 2.0 * measure.atom();
    let segments = measure.merged_segments();
    let last = segments.len() - 1;

    let span = shift.abs() + measure.drift_after(0.0) + 10.0 * 2.0 * rho.sqrt();
    let dx = (2.0 * span / 4000.0).min(0.004);
    let half = (span / dx).ceil() as usize;
    let x0 = -(half as f64) * dx;
    let npts = 2 * half + 1;

    // Terminal-adjacent layer from the exact data, kink-split Simpson.
    let (t_lo, _, m_bar) = segments[last];
    let sigma = (4.0f64 * (rho - t_lo)).sqrt();
    let mut vals = vec![0.0; npts];
    for (i, v) in vals.iter_mut().enumerate() {
        let x = x0 + i as f64 * dx;
        *v = terminal_point(x, shift, sigma, m_bar);
    }
    let mut grid = OracleGrid { x0, dx, vals, shift, drift: measure.drift_after(t_lo) };

    // Remaining layers walking backward; all data is now smooth.
    for seg_idx in (0..last).rev() {
        let (lo, hi, m_seg) = segments[seg_idx];
        let sigma = (4.0 * (hi - lo)).sqrt();
        if seg_idx == 0 {
            // Only x = 0 is needed at the final time.
            return layer_point(&grid, 0.0, sigma, m_seg);
        }
        let mut vals = vec![0.0; npts];
        for (i, v) in vals.iter_mut().enumerate() {
            let x = x0 + i as f64 * dx;
            *v = layer_point(&grid, x, sigma, m_seg);
        }
        grid = OracleGrid { x0, dx, vals, shift, drift: measure.drift_after(lo) };
    }
    grid.eval(0.0)
}

fn terminal_point(x: f64, shift: f64, sigma: f64, m_bar: f64) -> f64 {
    let kink = -(x + shift) / sigma; // z with x + σz + shift = 0
    let lo = -Z_RANGE;
    let hi = Z_RANGE;
    if m_bar == 0.0 {
        let f = |z: f64| phi(z) * (x + sigma * z + shift).max(0.0);
        if kink > lo && kink < hi {
            simpson(lo, kink, SIMPSON_N / 2, &f) + simpson(kink, hi, SIMPSON_N / 2, &f)
        } else {
            simpson(lo, hi, SIMPSON_N, &f)
        }
    } else {
        let f = |z: f64| phi(z) * (m_bar * (x + sigma * z + shift).max(0.0)).exp();
        let integral = if kink > lo && kink < hi {
            simpson(lo, kink, SIMPSON_N / 2, &f) + simpson(kink, hi, SIMPSON_N / 2, &f)
        } else {
            simpson(lo, hi, SIMPSON_N, &f)
        };
        integral.ln() / m_bar
    }
}

fn layer_point(grid: &OracleGrid, x: f64, sigma: f64, m_bar: f64) -> f64 {
    if m_bar == 0.0 {
        simpson(-Z_RANGE, Z_RANGE, SIMPSON_N, |z| phi(z) * grid.eval(x + sigma * z))
    } else {
        // The layer data is bounded below by 0 and grows linearly, so the
        // integrand e^{m·u} can be large; shift by the value at the right
        // edge for stability.
        let cap = m_bar * grid.eval(x + sigma * Z_RANGE);
        let f =
            |z: f64| phi(z) * (m_bar * grid.eval(x + sigma * z) - cap).exp();
        (cap + simpson(-Z_RANGE, Z_RANGE, SIMPSON_N, f).ln()) / m_bar
    }
}
