//! Minimization of the Parisi functional over `(m, Λ₁, Λ₂)`.
//!
//! Given the measure, the two Lagrange multipliers decouple: each solves a
//! scalar quantile equation `∂_Λ u^i(0,0) = target_i` that is monotone in Λ,
//! handled by safeguarded Newton (the second derivative comes from the grid
//! slope of the propagated `∂_x u`). The step heights of `m` are driven by a
//! projected (isotonic) gradient method with Barzilai-Borwein steps and a
//! backtracking line search; the gradient is taken by forward differences on
//! the heights at the optimal Λ (valid by the envelope theorem).
//!
//! The functional is jointly strictly convex in `(m, Λ)` on the reduced set
//! (no atom), so multistart runs must agree; the spread is recorded.

use super::measure::StepMeasure;
use super::pde::{base_half_width, solve_pde, solve_raw, Mode, PdeSolution, SolverConfig};
use crate::special::norm_quantile;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone)]
pub struct MinimizeOptions {
    pub config: SolverConfig,
    pub mode: Mode,
    /// Number of deterministic starts (0 treated as 1).
    pub multistart: usize,
    /// Optimize the atom `c` at ρ as well (off by default: the reduction
    /// `Λ ↦ Λ + 2c` makes `c = 0` sufficient).
    pub optimize_atom: bool,
}

impl MinimizeOptions {
    pub fn zero_temperature() -> Self {
        Self {
            config: SolverConfig::default(),
            mode: Mode::ZeroTemperature,
            multistart: 2,
            optimize_atom: false,
        }
    }

    pub fn finite_beta(beta: f64) -> Self {
        Self { mode: Mode::FiniteBeta { beta }, ..Self::zero_temperature() }
    }
}

/// Result of one constrained-energy solve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParisiSolution {
    pub rho: f64,
    /// Requested overlap.
    pub q: f64,
    /// Overlap after clamping away from the endpoints {0, ρ}.
    pub q_eff: f64,
    pub lambda: f64,
    pub mode: Mode,
    pub u1_00: f64,
    pub u2_00: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    /// `P(X_ρ^i + Λ_i ≥ 0)` — the diffusion quantiles `∂_{Λ_i} u^i(0,0)`.
    pub quantile1: f64,
    pub quantile2: f64,
    /// Fixed-point residuals `|∂_{Λ₁}u¹(0,0) − q/ρ|`, `|∂_{Λ₂}u²(0,0) − (ρ−q)/(1−ρ)|`.
    pub residual1: f64,
    pub residual2: f64,
    pub nu: StepMeasure,
    /// `∫₀^ρ m dt`.
    pub mass: f64,
    /// The a-priori total-variation cap `½√(ρ log 1/ρ)` imposed on the
    /// discrete feasible set (a property of the continuum minimizer).
    pub mass_cap: f64,
    /// min over (ν, Λ) of the functional.
    pub p_value: f64,
    /// `E(q; ρ, λ) = λq² + min P`.
    pub energy: f64,
    /// Projected-gradient norm on the heights at the final iterate.
    pub m_grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Max |P_i − P_j| across multistart runs (0 when single-start).
    pub multistart_spread: f64,
    pub dx_u_min: f64,
    pub dx_u_max: f64,
}

impl ParisiSolution {
    /// `∂E/∂q = 2λq + (Λ₂ − Λ₁)`.
    pub fn de_dq(&self) -> f64 {
        2.0 * self.lambda * self.q_eff + (self.lambda2 - self.lambda1)
    }
}

/// Evaluate the functional `P(ν, Λ₁, Λ₂)` (leak-checked solves).
pub fn functional_p(
    measure: &StepMeasure,
    lambda1: f64,
    lambda2: f64,
    q: f64,
    mode: Mode,
    config: &SolverConfig,
) -> Result<f64> {
    let sol1 = solve_pde(measure, lambda1, mode, config)?;
    let sol2 = solve_pde(measure, lambda2, mode, config)?;
    Ok(assemble_p(measure, lambda1, lambda2, q, mode, &sol1, &sol2))
}

fn assemble_p(
    measure: &StepMeasure,
    lambda1: f64,
    lambda2: f64,
    q: f64,
    mode: Mode,
    sol1: &PdeSolution,
    sol2: &PdeSolution,
) -> f64 {
    let rho = measure.rho();
    let mut p = rho * sol1.u00 + (1.0 - rho) * sol2.u00 - lambda1 * q - lambda2 * (rho - q)
        + measure.linear_term();
    if let Mode::FiniteBeta { beta } = mode {
        p += std::f64::consts::LN_2 / beta;
    }
    p
}

fn raw(measure: &StepMeasure, lambda: f64, mode: Mode, config: &SolverConfig) -> PdeSolution {
    let l = base_half_width(measure, lambda, config);
    solve_raw(measure, lambda, mode, config, l)
}

/// Solve the scalar quantile equation `∂_Λ u(0,0) = target` in Λ.
fn solve_lambda(
    measure: &StepMeasure,
    target: f64,
    mode: Mode,
    config: &SolverConfig,
    warm: Option<f64>,
) -> Result<(f64, PdeSolution, f64)> {
    let rho = measure.rho();
    let base = 2.0 * rho.sqrt() * norm_quantile(target);
    let slack = 0.5 + mode.beta().map_or(0.0, |b| 4.0 / b);
    let mut lo = base - 4.0 * measure.mass() - 2.0 * measure.atom() - slack;
    let mut hi = base + slack;

    let eval = |lam: f64| raw(measure, lam, mode, config);

    // Expand until the root is bracketed (w00 is nondecreasing in Λ).
    let mut g_lo = eval(lo).w00 - target;
    let mut width = hi - lo;
    let mut guard = 0;
    while g_lo > 0.0 {
        lo -= width;
        width *= 2.0;
        g_lo = eval(lo).w00 - target;
        guard += 1;
        if guard > 40 {
            return Err(Error::NonConverged("lambda bracket (low side)".into()));
        }
    }
    let mut g_hi = eval(hi).w00 - target;
    guard = 0;
    while g_hi < 0.0 {
        hi += width;
        width *= 2.0;
        g_hi = eval(hi).w00 - target;
        guard += 1;
        if guard > 40 {
            return Err(Error::NonConverged("lambda bracket (high side)".into()));
        }
    }

    let mut x = match warm {
        Some(w) if w > lo && w < hi => w,
        _ => base.clamp(lo + 1e-6, hi - 1e-6),
    };
    let mut best: Option<(f64, PdeSolution, f64)> = None;
    for _ in 0..60 {
        let sol = eval(x);
        let g = sol.w00 - target;
        let res = g.abs();
        if best.as_ref().map_or(true, |b| res < b.2) {
            best = Some((x, sol.clone(), res));
        }
        if res < 1e-11 {
            break;
        }
        if g < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let slope = sol.w00_slope();
        let newton = x - g / slope;
        x = if slope > 1e-14 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (hi - lo) < 1e-15 {
            break;
        }
    }
    let (lam, sol, res) = best.expect("at least one iterate");
    Ok((lam, sol, res))
}

/// Projection onto `{0 ≤ v_1 ≤ … ≤ v_K ≤ hi}`: pool-adjacent-violators for
/// the isotonic part, then clamping (exact for the box-isotonic cone).
fn project_monotone_box(v: &[f64], hi: f64) -> Vec<f64> {
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(v.len());
    for &x in v {
        let mut sum = x;
        let mut count = 1usize;
        while let Some(&(s, c)) = blocks.last() {
            if s / c as f64 > sum / count as f64 {
                blocks.pop();
                sum += s;
                count += c;
            } else {
                break;
            }
        }
        blocks.push((sum, count));
    }
    let mut out = Vec::with_capacity(v.len());
    for (s, c) in blocks {
        let mean = (s / c as f64).clamp(0.0, hi);
        out.extend(std::iter::repeat(mean).take(c));
    }
    out
}

/// Retraction onto the feasible measures: isotonic-box projection followed,
/// when the total-variation cap is exceeded, by the uniform downward shift
/// (monotonicity-preserving) that lands exactly on the cap. The cap encodes
/// the a-priori bound `∫m ≤ ½√(ρ log 1/ρ)` that the continuum minimizer is
/// known to satisfy; coarse step-function grids otherwise park excess mass
/// in nearly-flat directions.
fn retract_feasible(v: &[f64], hi: f64, width: f64, mass_cap: f64) -> Vec<f64> {
    let mut out = project_monotone_box(v, hi);
    let mass = |h: &[f64]| width * h.iter().sum::<f64>();
    if mass(&out) <= mass_cap {
        return out;
    }
    // Find the shift δ with Σ max(h_j − δ, 0) = cap/width by bisection.
    let target = mass_cap / width;
    let (mut lo, mut hi_d) = (0.0f64, out.last().copied().unwrap_or(0.0));
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi_d);
        let s: f64 = out.iter().map(|h| (h - mid).max(0.0)).sum();
        if s > target {
            lo = mid;
        } else {
            hi_d = mid;
        }
    }
    let delta = 0.5 * (lo + hi_d);
    for h in out.iter_mut() {
        *h = (*h - delta).max(0.0);
    }
    out
}

struct RunOutcome {
    heights: Vec<f64>,
    atom: f64,
    lambda1: f64,
    lambda2: f64,
    p: f64,
    grad_norm: f64,
    iterations: usize,
    res1: f64,
    res2: f64,
}

#[allow(clippy::too_many_arguments)]
fn optimize_from(
    rho: f64,
    q_eff: f64,
    start: Vec<f64>,
    atom0: f64,
    t1: f64,
    t2: f64,
    opts: &MinimizeOptions,
) -> Result<RunOutcome> {
    let config = &opts.config;
    let mode = opts.mode;
    let height_cap = mode.beta().unwrap_or(f64::INFINITY);
    let symmetric = (t1 - t2).abs() < 1e-13;
    let width = rho / start.len() as f64;
    let mass_cap = 0.5 * (rho * (1.0 / rho).ln()).sqrt();

    let mut heights = retract_feasible(&start, height_cap, width, mass_cap);
    let mut atom = atom0.max(0.0);
    let mut lam1: Option<f64> = None;
    let mut lam2: Option<f64> = None;

    let measure_of = |h: &[f64], c: f64| -> StepMeasure {
        StepMeasure::uniform_relaxed(rho, h.to_vec(), c)
    };

    // P at fixed multipliers (2 raw solves, or 1 in the symmetric case).
    let p_fixed = |h: &[f64], c: f64, l1: f64, l2: f64| -> f64 {
        let m = measure_of(h, c);
        let s1 = raw(&m, l1, mode, config);
        let s2 = if symmetric && (l1 - l2).abs() < 1e-15 {
            s1.clone()
        } else {
            raw(&m, l2, mode, config)
        };
        assemble_p(&m, l1, l2, q_eff, mode, &s1, &s2)
    };

    let mut prev_m: Option<(Vec<f64>, Vec<f64>)> = None; // (heights, grad)
    let mut alpha = 0.05;
    let mut p_cur = f64::INFINITY;
    let mut stall = 0usize;
    let mut outcome: Option<RunOutcome> = None;

    for iter in 0..config.max_iter {
        let measure = measure_of(&heights, atom);
        let (l1, s1, r1) = solve_lambda(&measure, t1, mode, config, lam1)?;
        let (l2, s2, r2) = if symmetric {
            (l1, s1.clone(), r1)
        } else {
            solve_lambda(&measure, t2, mode, config, lam2)?
        };
        lam1 = Some(l1);
        lam2 = Some(l2);
        p_cur = assemble_p(&measure, l1, l2, q_eff, mode, &s1, &s2);

        // Forward-difference gradient in the step heights (and atom), with a
        // scale-aware probe size.
        let k = heights.len();
        let mut grad = vec![0.0; k + 1];
        for j in 0..k {
            let fd_h = 1e-4 * (1.0 + heights[j]);
            let mut h2 = heights.clone();
            h2[j] += fd_h;
            grad[j] = (p_fixed(&h2, atom, l1, l2) - p_cur) / fd_h;
        }
        if opts.optimize_atom {
            let fd_h = 1e-4 * (1.0 + atom);
            grad[k] = (p_fixed(&heights, atom + fd_h, l1, l2) - p_cur) / fd_h;
        }

        // Projected-step stationarity measure (unit step).
        let trial: Vec<f64> =
            heights.iter().zip(&grad[..k]).map(|(h, g)| h - g).collect();
        let projected = retract_feasible(&trial, height_cap, width, mass_cap);
        let mut gnorm = projected
            .iter()
            .zip(&heights)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        if opts.optimize_atom {
            gnorm = gnorm.max(((atom - grad[k]).max(0.0) - atom).abs());
        }

        outcome = Some(RunOutcome {
            heights: heights.clone(),
            atom,
            lambda1: l1,
            lambda2: l2,
            p: p_cur,
            grad_norm: gnorm,
            iterations: iter + 1,
            res1: r1,
            res2: r2,
        });

        if gnorm < (config.tol / 10.0).max(1e-5) || stall >= 4 {
            break;
        }

        // Barzilai-Borwein step with Armijo backtracking on P(·, Λ fixed).
        if let Some((hp, gp)) = &prev_m {
            let mut ss = 0.0;
            let mut sy = 0.0;
            for j in 0..k {
                let s = heights[j] - hp[j];
                let y = grad[j] - gp[j];
                ss += s * s;
                sy += s * y;
            }
            if sy > 1e-14 {
                alpha = (ss / sy).clamp(1e-6, 1e3);
            }
        }
        prev_m = Some((heights.clone(), grad[..k].to_vec()));

        let mut step = alpha;
        let mut accepted = false;
        for _ in 0..30 {
            let cand: Vec<f64> = heights
                .iter()
                .zip(&grad[..k])
                .map(|(h, g)| h - step * g)
                .collect();
            let cand = retract_feasible(&cand, height_cap, width, mass_cap);
            let cand_atom = if opts.optimize_atom {
                (atom - step * grad[k]).max(0.0)
            } else {
                atom
            };
            let decrease: f64 = cand
                .iter()
                .zip(&heights)
                .zip(&grad[..k])
                .map(|((c, h), g)| g * (h - c))
                .sum::<f64>()
                + if opts.optimize_atom { grad[k] * (atom - cand_atom) } else { 0.0 };
            if decrease <= 1e-16 {
                break;
            }
            let p_try = p_fixed(&cand, cand_atom, l1, l2);
            if p_try <= p_cur - 1e-4 * decrease {
                if (p_cur - p_try).abs() < 1e-12 * (1.0 + p_cur.abs()) {
                    stall += 1;
                } else {
                    stall = 0;
                }
                heights = cand;
                atom = cand_atom;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            stall += 1;
            alpha = 0.05; // discard a possibly degenerate BB estimate
            prev_m = None;
            if stall >= 3 {
                break;
            }
        }
    }
    let _ = p_cur;
    outcome.ok_or_else(|| Error::NonConverged("minimization produced no iterate".into()))
}

/// Minimize the Parisi functional and assemble `E(q; ρ, λ) = λq² + min P`.
pub fn minimize(rho: f64, q: f64, lambda: f64, opts: &MinimizeOptions) -> Result<ParisiSolution> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::InvalidParameter(format!("rho = {rho} not in (0,1)")));
    }
    if !(0.0..=rho + 1e-12).contains(&q) {
        return Err(Error::InvalidParameter(format!("q = {q} not in [0, rho]")));
    }
    if rho > 0.5 && q <= 2.0 * rho - 1.0 {
        return Err(Error::InvalidParameter(format!(
            "q = {q} infeasible: needs q > 2ρ−1 = {}",
            2.0 * rho - 1.0
        )));
    }
    // Φ⁻¹ blows up at q ∈ {0, ρ}; clamp into the open interval.
    let q_eff = q.clamp(rho * 1e-6, rho * (1.0 - 1e-6));
    let t1 = q_eff / rho;
    let t2 = (rho - q_eff) / (1.0 - rho);

    let k = opts.config.k_intervals.max(1).min(32);
    let cap = opts.mode.beta().unwrap_or(f64::INFINITY);
    // Deterministic starts: a ramp at half the a-priori mass cap first (the
    // zero start can sit at a spurious boundary stationary point of the
    // coarse forward-difference gradient; a start saturating the cap gets
    // paralyzed reshaping along the cap face), then m ≡ 0.
    let mass_cap = 0.5 * (rho * (1.0 / rho).ln()).sqrt();
    let ramp_top = (mass_cap * k as f64 / ((k + 1) as f64 * rho)).min(cap);
    let mut starts: Vec<Vec<f64>> =
        vec![(0..k).map(|j| ramp_top * (j + 1) as f64 / k as f64).collect()];
    if opts.multistart > 1 {
        starts.push(vec![0.0; k]);
    }

    let mut runs = Vec::new();
    for start in starts {
        runs.push(optimize_from(rho, q_eff, start, 0.0, t1, t2, opts)?);
    }
    let spread = runs
        .iter()
        .flat_map(|a| runs.iter().map(move |b| (a.p - b.p).abs()))
        .fold(0.0f64, f64::max);
    let best = runs
        .into_iter()
        .min_by(|a, b| a.p.partial_cmp(&b.p).unwrap())
        .expect("at least one start");

    // Final leak-checked solves at the optimum.
    let measure = StepMeasure::uniform(rho, best.heights.clone(), best.atom)?;
    let check1 = solve_pde(&measure, best.lambda1, opts.mode, &opts.config)?;
    let check2 = solve_pde(&measure, best.lambda2, opts.mode, &opts.config)?;
    let p_value = assemble_p(&measure, best.lambda1, best.lambda2, q_eff, opts.mode, &check1, &check2);

    let converged = best.res1 < opts.config.tol
        && best.res2 < opts.config.tol
        && best.grad_norm < 100.0 * opts.config.tol;

    Ok(ParisiSolution {
        rho,
        q,
        q_eff,
        lambda,
        mode: opts.mode,
        u1_00: check1.u00,
        u2_00: check2.u00,
        lambda1: best.lambda1,
        lambda2: best.lambda2,
        quantile1: check1.w00,
        quantile2: check2.w00,
        residual1: (check1.w00 - t1).abs(),
        residual2: (check2.w00 - t2).abs(),
        mass: measure.mass(),
        mass_cap: 0.5 * (rho * (1.0 / rho).ln()).sqrt(),
        nu: measure,
        p_value,
        energy: lambda * q * q + p_value,
        m_grad_norm: best.grad_norm,
        iterations: best.iterations,
        converged,
        multistart_spread: spread,
        dx_u_min: check1.dx_u_min.min(check2.dx_u_min),
        dx_u_max: check1.dx_u_max.max(check2.dx_u_max),
    })
}
