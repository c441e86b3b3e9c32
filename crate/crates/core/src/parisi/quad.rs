//! Gauss-Hermite quadrature (Golub-Welsch) and cubic interpolation on a
//! uniform grid.

use nalgebra::{DMatrix, SymmetricEigen};

/// Gauss-Hermite rule: nodes ξ and probabilist-normalized weights w̃ with
/// `E[f(Z)] ≈ Σ w̃_i f(√2 ξ_i)` for `Z ~ N(0,1)` (the w̃ sum to 1).
pub fn gauss_hermite_normalized(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 2, "need at least 2 quadrature nodes");
    let mut jac = DMatrix::<f64>::zeros(n, n);
    for i in 1..n {
        let b = (i as f64 / 2.0).sqrt();
        jac[(i, i - 1)] = b;
        jac[(i - 1, i)] = b;
    }
    let eig = SymmetricEigen::new(jac);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let node = eig.eigenvalues[i];
            let first = eig.eigenvectors[(0, i)];
            (node, first * first) // weights w_i/√π = v₀²
        })
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let nodes = pairs.iter().map(|p| p.0).collect();
    let weights = pairs.iter().map(|p| p.1).collect();
    (nodes, weights)
}

/// Uniform grid `x_i = x0 + i·dx` with a guaranteed node at zero.
#[derive(Debug, Clone)]
pub struct Grid {
    pub x0: f64,
    pub dx: f64,
    pub len: usize,
    /// Index of the node at x = 0.
    pub zero: usize,
}

impl Grid {
    /// Symmetric grid on [−l, l] (rounded outward to a multiple of dx).
    pub fn symmetric(l: f64, dx: f64) -> Self {
        let half = (l / dx).ceil() as usize;
        Self { x0: -(half as f64) * dx, dx, len: 2 * half + 1, zero: half }
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.dx
    }

    pub fn x_max(&self) -> f64 {
        self.x(self.len - 1)
    }
}

/// 4-point (cubic Lagrange) interpolation with caller-supplied extensions
/// beyond the covered range.
pub fn cubic_eval(
    grid: &Grid,
    values: &[f64],
    y: f64,
    below: impl Fn() -> f64,
    above: impl Fn() -> f64,
) -> f64 {
    let t = (y - grid.x0) / grid.dx;
    if t < 1.0 {
        return below();
    }
    if t > (grid.len - 3) as f64 {
        return above();
    }
    let i = t.floor() as usize;
    let s = t - i as f64;
    let f_m1 = values[i - 1];
    let f_0 = values[i];
    let f_1 = values[i + 1];
    let f_2 = values[i + 2];
    let s2 = s * s;
    -s * (s - 1.0) * (s - 2.0) / 6.0 * f_m1
        + (s2 - 1.0) * (s - 2.0) / 2.0 * f_0
        - s * (s + 1.0) * (s - 2.0) / 2.0 * f_1
        + s * (s2 - 1.0) / 6.0 * f_2
}
