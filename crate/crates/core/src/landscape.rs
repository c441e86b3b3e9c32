//! Constrained-energy curves `q ↦ E(q; ρ, λ)`, derivative tracks, overlap-gap
//! detection, and phase-plane scans.
//!
//! The derivative has the closed form `∂E/∂q = 2λq + (Λ₂* − Λ₁*)` from the
//! envelope theorem; a nonuniform central finite difference runs alongside it
//! as a consistency track. The gap detector follows the three conditions of
//! the ε-overlap-gap definition with explicit witnesses and margins, and
//! requires every margin to clear three times the estimated solver noise.

use crate::parisi::{minimize, MinimizeOptions, Mode, ParisiSolution, SolverConfig};
use crate::{Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurvePoint {
    pub q: f64,
    pub e: f64,
    /// `2λq + (Λ₂ − Λ₁)`.
    pub de_formula: f64,
    /// Nonuniform central difference (interior points only).
    pub de_fd: Option<f64>,
    pub lambda1: f64,
    pub lambda2: f64,
    pub mass_m: f64,
    pub atom_c: f64,
    pub p_value: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnergyCurve {
    pub rho: f64,
    pub lambda: f64,
    pub points: Vec<CurvePoint>,
    /// Full solver output per point (same order as `points`).
    pub solutions: Vec<ParisiSolution>,
}

#[derive(Debug, Clone)]
pub struct CurveConfig {
    pub solver: SolverConfig,
    pub multistart: usize,
    pub parallel: bool,
}

impl Default for CurveConfig {
    fn default() -> Self {
        Self { solver: SolverConfig::default(), multistart: 1, parallel: true }
    }
}

/// Default q grid: a 40-point linear grid on (0, ρ) joined with the
/// geometric mesh `ρ^{2−j/10}` (extended a little below ρ² so gap witnesses
/// `w < ρ²` exist at small ρ), always including ρ².
pub fn default_q_grid(rho: f64) -> Vec<f64> {
    let mut qs: Vec<f64> = (1..=40).map(|j| rho * j as f64 / 41.0).collect();
    for j in -4..=10 {
        qs.push(rho.powf(2.0 - j as f64 / 10.0));
    }
    qs.push(rho * rho);
    qs.retain(|&q| q > 0.0 && q < rho * (1.0 - 1e-9));
    qs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    qs.dedup_by(|a, b| (*a - *b).abs() < 1e-9 * rho);
    qs
}

/// Solve the variational problem on a q grid and assemble the curve.
/// Per-point solver failures are flagged on the point; the curve is still
/// returned unless every point failed.
pub fn energy_curve(
    rho: f64,
    lambda: f64,
    q_grid: &[f64],
    config: &CurveConfig,
) -> Result<EnergyCurve> {
    if q_grid.is_empty() {
        return Err(Error::InvalidParameter("empty q grid".into()));
    }
    let mut qs = q_grid.to_vec();
    qs.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let opts = MinimizeOptions {
        config: config.solver.clone(),
        mode: Mode::ZeroTemperature,
        multistart: config.multistart,
        optimize_atom: false,
    };
    let solve = |&q: &f64| minimize(rho, q, lambda, &opts);
    let results: Vec<Result<ParisiSolution>> = if config.parallel {
        qs.par_iter().map(solve).collect()
    } else {
        qs.iter().map(solve).collect()
    };

    let mut solutions = Vec::with_capacity(results.len());
    for (q, r) in qs.iter().zip(results) {
        match r {
            Ok(sol) => solutions.push(sol),
            Err(e) => return Err(Error::NonConverged(format!("q = {q}: {e}"))),
        }
    }

    let es: Vec<f64> = solutions.iter().map(|s| s.energy).collect();
    let mut points = Vec::with_capacity(solutions.len());
    for (i, sol) in solutions.iter().enumerate() {
        let de_fd = if i > 0 && i + 1 < solutions.len() {
            let h0 = qs[i] - qs[i - 1];
            let h1 = qs[i + 1] - qs[i];
            Some(
                -h1 / (h0 * (h0 + h1)) * es[i - 1] + (h1 - h0) / (h0 * h1) * es[i]
                    + h0 / (h1 * (h0 + h1)) * es[i + 1],
            )
        } else {
            None
        };
        points.push(CurvePoint {
            q: qs[i],
            e: sol.energy,
            de_formula: sol.de_dq(),
            de_fd,
            lambda1: sol.lambda1,
            lambda2: sol.lambda2,
            mass_m: sol.mass,
            atom_c: sol.nu.atom(),
            p_value: sol.p_value,
            converged: sol.converged,
        });
    }

    Ok(EnergyCurve { rho, lambda, points, solutions })
}

impl EnergyCurve {
    /// Build a curve from closed-form values (detector tests, synthetic
    /// landscapes). Solutions are not populated.
    pub fn synthetic(
        rho: f64,
        lambda: f64,
        q_grid: &[f64],
        e: impl Fn(f64) -> f64,
        de: impl Fn(f64) -> f64,
    ) -> Self {
        let mut qs = q_grid.to_vec();
        qs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let points = qs
            .iter()
            .map(|&q| CurvePoint {
                q,
                e: e(q),
                de_formula: de(q),
                de_fd: None,
                lambda1: 0.0,
                lambda2: 0.0,
                mass_m: 0.0,
                atom_c: 0.0,
                p_value: e(q) - lambda * q * q,
                converged: true,
            })
            .collect();
        Self { rho, lambda, points, solutions: Vec::new() }
    }

    /// Plot-ready CSV: `q,E,dE_formula,dE_fd,lambda1,lambda2,mass_m,c`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("q,E,dE_formula,dE_fd,lambda1,lambda2,mass_m,c\n");
        for p in &self.points {
            let fd = p.de_fd.map_or(String::new(), |v| v.to_string());
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                p.q, p.e, p.de_formula, fd, p.lambda1, p.lambda2, p.mass_m, p.atom_c
            ));
        }
        out
    }

    /// Fraction of interior points where the two derivative tracks agree
    /// within `max(1e-3, 1e-2·|dE_formula|)`.
    pub fn derivative_consistency(&self) -> f64 {
        let interior: Vec<&CurvePoint> =
            self.points.iter().filter(|p| p.de_fd.is_some()).collect();
        if interior.is_empty() {
            return 1.0;
        }
        let ok = interior
            .iter()
            .filter(|p| {
                let tol = (1e-2 * p.de_formula.abs()).max(1e-3);
                (p.de_formula - p.de_fd.unwrap()).abs() <= tol
            })
            .count();
        ok as f64 / interior.len() as f64
    }

    /// Crude lower envelope `λq² − 2√(ρ³ log 1/ρ)` from planting the block
    /// (monitored, not asserted).
    pub fn lower_envelope(&self, q: f64) -> f64 {
        self.lambda * q * q - 2.0 * (self.rho.powi(3) * (1.0 / self.rho).ln()).sqrt()
    }
}

// --- overlap-gap detection ---------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OgpVerdict {
    pub holds: bool,
    pub epsilon: f64,
    /// `(w, x, y)` with `w < ρ² < x < y < ρ^{1+ε}` when found.
    pub witnesses: Option<(f64, f64, f64)>,
    /// `E(x) − max(E(w), E(y))`.
    pub margin_gap: f64,
    /// `sup_{[ερ, ρ]} E − sup_{(w, ερ]} E`.
    pub margin_sup: f64,
    /// Margins must exceed this (3× estimated solver noise, floored).
    pub noise_floor: f64,
    /// Sign pattern `∂_q E(ρ²) > 0` and `∂_q E < 0` somewhere below ρ^{1+ε}.
    pub derivative_pattern: bool,
    pub diagnostic: String,
}

fn failed(eps: f64, floor: f64, why: &str) -> OgpVerdict {
    OgpVerdict {
        holds: false,
        epsilon: eps,
        witnesses: None,
        margin_gap: f64::NAN,
        margin_sup: f64::NAN,
        noise_floor: floor,
        derivative_pattern: false,
        diagnostic: why.to_string(),
    }
}

/// Decide the ε-overlap-gap property on a sampled curve. `noise` is the
/// estimated per-point solver error (see [`estimate_solver_noise`]); margins
/// must exceed `max(3·noise, 1e-9)`.
pub fn detect_ogp(curve: &EnergyCurve, epsilon: f64, noise: f64) -> OgpVerdict {
    let rho = curve.rho;
    let rho2 = rho * rho;
    let cap = rho.powf(1.0 + epsilon);
    let floor = (3.0 * noise).max(1e-9);
    let pts = &curve.points;

    if pts.len() < 5 {
        return failed(epsilon, floor, "curve too coarse");
    }

    // Candidate x: maximum over (ρ², ρ^{1+ε}).
    let x_idx = pts
        .iter()
        .enumerate()
        .filter(|(_, p)| p.q > rho2 && p.q < cap)
        .max_by(|a, b| a.1.e.partial_cmp(&b.1.e).unwrap())
        .map(|(i, _)| i);
    let Some(xi) = x_idx else {
        return failed(epsilon, floor, "no grid points in (rho^2, rho^{1+eps})");
    };

    // Candidate y: minimum beyond x but still below ρ^{1+ε}.
    let y_idx = pts
        .iter()
        .enumerate()
        .filter(|(i, p)| *i > xi && p.q < cap)
        .min_by(|a, b| a.1.e.partial_cmp(&b.1.e).unwrap())
        .map(|(i, _)| i);
    let Some(yi) = y_idx else {
        return failed(epsilon, floor, "no candidate y beyond x");
    };

    // Candidate w: minimum below ρ².
    let w_idx = pts
        .iter()
        .enumerate()
        .filter(|(_, p)| p.q < rho2)
        .min_by(|a, b| a.1.e.partial_cmp(&b.1.e).unwrap())
        .map(|(i, _)| i);
    let Some(wi) = w_idx else {
        return failed(epsilon, floor, "no grid points below rho^2");
    };

    let (w, x, y) = (pts[wi].q, pts[xi].q, pts[yi].q);
    let margin_gap = pts[xi].e - pts[wi].e.max(pts[yi].e);

    // Condition (3): sup over (w, ερ] vs sup over [ερ, ρ].
    let eps_rho = epsilon * rho;
    let sup_left = pts
        .iter()
        .filter(|p| p.q > w && p.q <= eps_rho)
        .map(|p| p.e)
        .fold(f64::NEG_INFINITY, f64::max);
    let sup_right = pts
        .iter()
        .filter(|p| p.q >= eps_rho)
        .map(|p| p.e)
        .fold(f64::NEG_INFINITY, f64::max);
    let margin_sup = sup_right - sup_left;

    // Derivative sign pattern (diagnostic, not load-bearing).
    let at_rho2 = pts
        .iter()
        .min_by(|a, b| {
            (a.q - rho2).abs().partial_cmp(&(b.q - rho2).abs()).unwrap()
        })
        .unwrap();
    let derivative_pattern = at_rho2.de_formula > 0.0
        && pts.iter().any(|p| p.q > rho2 && p.q < cap && p.de_formula < 0.0);

    let ok = w < rho2
        && rho2 < x
        && x < y
        && y < cap
        && margin_gap > floor
        && sup_left.is_finite()
        && sup_right.is_finite()
        && margin_sup > floor;

    OgpVerdict {
        holds: ok,
        epsilon,
        witnesses: Some((w, x, y)),
        margin_gap,
        margin_sup,
        noise_floor: floor,
        derivative_pattern,
        diagnostic: if ok {
            "gap conditions met".into()
        } else {
            "margins below floor or ordering failed".into()
        },
    }
}

/// Scan ε over the standard ladder and report every verdict plus the largest
/// passing ε.
pub fn detect_ogp_sweep(
    curve: &EnergyCurve,
    noise: f64,
) -> (Vec<OgpVerdict>, Option<f64>) {
    let ladder = [0.05, 0.1, 0.2, 0.3];
    let verdicts: Vec<OgpVerdict> =
        ladder.iter().map(|&e| detect_ogp(curve, e, noise)).collect();
    let best = verdicts.iter().filter(|v| v.holds).map(|v| v.epsilon).fold(
        f64::NEG_INFINITY,
        f64::max,
    );
    (verdicts, (best > 0.0).then_some(best))
}

/// Estimate per-point solver noise by re-solving three representative
/// overlaps with a perturbed discretization.
pub fn estimate_solver_noise(
    rho: f64,
    lambda: f64,
    config: &CurveConfig,
) -> Result<f64> {
    let probes = [rho * rho, rho.powf(1.5), 0.5 * rho];
    let mut perturbed = config.solver.clone();
    perturbed.k_intervals = (perturbed.k_intervals.saturating_sub(2)).max(4);
    perturbed.grid_dx *= 1.25;
    perturbed.gh_nodes = (perturbed.gh_nodes.saturating_sub(8)).max(21);

    let base_opts = MinimizeOptions {
        config: config.solver.clone(),
        mode: Mode::ZeroTemperature,
        multistart: 1,
        optimize_atom: false,
    };
    let pert_opts = MinimizeOptions { config: perturbed, ..base_opts.clone() };

    let mut noise: f64 = 0.0;
    for q in probes {
        let a = minimize(rho, q, lambda, &base_opts)?;
        let b = minimize(rho, q, lambda, &pert_opts)?;
        noise = noise.max((a.energy - b.energy).abs());
    }
    Ok(noise)
}

// --- phase scan ------------------------------------------------------------

/// Reference parameter scales at sparsity ρ.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ThresholdLines {
    /// `√((1/ρ) log(1/ρ))` — information-theoretic impossibility scale.
    pub it_scale: f64,
    /// `2√((1/ρ) log(1/ρ))` — MLE success scale.
    pub mle_scale: f64,
    /// `1/ρ` — spectral (BBP) scale.
    pub spectral_scale: f64,
    /// `2√(ρ³ log(1/ρ))` — null ground-state energy scale.
    pub slepian_null: f64,
    /// `ρ^{−(2−√2)}` — upper λ regime for the gap analysis.
    pub alpha_bound: f64,
}

pub fn threshold_lines(rho: f64) -> ThresholdLines {
    let log_inv = (1.0 / rho).ln();
    ThresholdLines {
        it_scale: (log_inv / rho).sqrt(),
        mle_scale: 2.0 * (log_inv / rho).sqrt(),
        spectral_scale: 1.0 / rho,
        slepian_null: 2.0 * (rho.powi(3) * log_inv).sqrt(),
        alpha_bound: rho.powf(-(2.0 - std::f64::consts::SQRT_2)),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum LambdaRule {
    /// `λ = c·√((1/ρ) log(1/ρ))` for each multiplier c.
    Multipliers(Vec<f64>),
    /// Explicit λ values used at every ρ.
    Explicit(Vec<f64>),
}

impl LambdaRule {
    pub fn lambdas(&self, rho: f64) -> Vec<f64> {
        match self {
            LambdaRule::Multipliers(cs) => {
                let scale = threshold_lines(rho).it_scale;
                cs.iter().map(|c| c * scale).collect()
            }
            LambdaRule::Explicit(ls) => ls.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhaseRow {
    pub rho: f64,
    pub lambda: f64,
    pub thresholds: ThresholdLines,
    pub above_it: bool,
    pub above_mle: bool,
    pub above_spectral: bool,
    /// λ at or beyond the ρ^{−(2−√2)} regime boundary: the gap verdict is
    /// not computed there.
    pub regime_warning: bool,
    /// Largest passing ε, when the verdict ran and the gap holds.
    pub best_epsilon: Option<f64>,
    pub verdicts: Vec<OgpVerdict>,
}

/// Sweep the (ρ, λ) plane: gap verdicts plus reference threshold flags.
pub fn phase_scan(
    rho_list: &[f64],
    rule: &LambdaRule,
    config: &CurveConfig,
) -> Result<Vec<PhaseRow>> {
    let mut rows = Vec::new();
    for &rho in rho_list {
        let lines = threshold_lines(rho);
        for lambda in rule.lambdas(rho) {
            let regime_warning = lambda >= lines.alpha_bound;
            let (verdicts, best_epsilon) = if regime_warning {
                (Vec::new(), None)
            } else {
                let grid = default_q_grid(rho);
                let curve = energy_curve(rho, lambda, &grid, config)?;
                let noise = estimate_solver_noise(rho, lambda, config)?;
                detect_ogp_sweep(&curve, noise)
            };
            rows.push(PhaseRow {
                rho,
                lambda,
                thresholds: lines,
                above_it: lambda > lines.it_scale,
                above_mle: lambda > lines.mle_scale,
                above_spectral: lambda > lines.spectral_scale,
                regime_warning,
                best_epsilon,
                verdicts,
            });
        }
    }
    Ok(rows)
}

/// Phase-scan CSV: one row per (ρ, λ).
pub fn phase_rows_to_csv(rows: &[PhaseRow]) -> String {
    let mut out = String::from(
        "rho,lambda,it_scale,mle_scale,spectral_scale,slepian_null,alpha_bound,\
         above_it,above_mle,above_spectral,regime_warning,ogp_holds,best_epsilon\n",
    );
    for r in rows {
        let holds = r.best_epsilon.is_some();
        let eps = r.best_epsilon.map_or(String::new(), |e| e.to_string());
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.rho,
            r.lambda,
            r.thresholds.it_scale,
            r.thresholds.mle_scale,
            r.thresholds.spectral_scale,
            r.thresholds.slepian_null,
            r.thresholds.alpha_bound,
            r.above_it,
            r.above_mle,
            r.above_spectral,
            r.regime_warning,
            holds,
            eps
        ));
    }
    out
}

/// Predicted `N^{−3/2}·max` principal-submatrix score limit,
/// `E(ρ²; ρ, 0)/√2` (monitored against exact small-N values).
pub fn principal_submatrix_limit(rho: f64, config: &SolverConfig) -> Result<f64> {
    let opts = MinimizeOptions {
        config: config.clone(),
        mode: Mode::ZeroTemperature,
        multistart: 1,
        optimize_atom: false,
    };
    let sol = minimize(rho, rho * rho, 0.0, &opts)?;
    Ok(sol.energy / std::f64::consts::SQRT_2)
}
