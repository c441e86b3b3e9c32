//! Implementations of the subcommands: resolve a config, run the module,
//! write CSV/JSON outputs plus the run manifest.

use crate::config::*;
use ogplab::landscape::{self, CurveConfig, LambdaRule};
use ogplab::mcmc::{self, splitmix64, ChainConfig};
use ogplab::model::PlantedInstance;
use ogplab::oracle;
use ogplab::parisi::{minimize, MinimizeOptions, Mode};
use ogplab::{estimators, Result};
use rayon::prelude::*;
use serde::Serialize;
use std::fs;
use std::path::Path;

fn write(outdir: &Path, name: &str, contents: &str) -> Result<()> {
    fs::create_dir_all(outdir)?;
    fs::write(outdir.join(name), contents)?;
    Ok(())
}

fn write_json(outdir: &Path, name: &str, value: &impl Serialize) -> Result<()> {
    fs::create_dir_all(outdir)?;
    fs::write(outdir.join(name), serde_json::to_string_pretty(value)?)?;
    Ok(())
}

pub fn cmd_generate(cfg: &GenerateConfig, outdir: &Path) -> Result<()> {
    let inst = PlantedInstance::generate_with(
        cfg.n,
        cfg.rho,
        cfg.lambda,
        cfg.seed,
        cfg.shuffle_support,
    )?;
    fs::create_dir_all(outdir)?;
    inst.write_to(&outdir.join("instance.json"))?;
    write_manifest(outdir, "generate", cfg)?;
    println!(
        "wrote instance.json: N={} ones={} lambda={} seed={}",
        inst.n(),
        inst.ones(),
        inst.lambda(),
        inst.seed()
    );
    Ok(())
}

#[derive(Serialize)]
struct OracleSummary {
    n: usize,
    ones: usize,
    lambda: f64,
    beta: f64,
    epsilon: f64,
    mle_value: f64,
    mle_argmax: Vec<Vec<usize>>,
    log_z: f64,
    /// Per-class check of |(1/β)F_N − max/N| ≤ log|Σ_N(ρ,q)|/(Nβ).
    sandwich_ok: bool,
}

pub fn cmd_oracle(cfg: &OracleConfig, outdir: &Path) -> Result<()> {
    let inst = PlantedInstance::generate(cfg.n, cfg.rho, cfg.lambda, cfg.seed)?;
    let scan = oracle::scan(&inst, &[cfg.beta], cfg.budget)?;
    let profile = oracle::profile_from_scan(&inst, &scan)?;
    let epsilon = cfg.epsilon.unwrap_or(0.5 / cfg.n as f64);
    let rate = oracle::rate_function_from_scan(&scan, cfg.beta, epsilon);

    let n = cfg.n as f64;
    let mut sandwich_ok = true;
    let mut csv = String::from("q,count,E_N,F_N_beta,I_m\n");
    for (row, (cls, rp)) in profile
        .rows
        .iter()
        .zip(scan.classes.iter().zip(rate.points.iter()))
    {
        let f_beta = cls.log_z[0] / n;
        if cfg.beta > 0.0 {
            let bound = (cls.count as f64).ln() / (n * cfg.beta);
            if (f_beta / cfg.beta - row.e_n).abs() > bound + 1e-12 {
                sandwich_ok = false;
            }
        }
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            row.q, row.count, row.e_n, f_beta, rp.i_value
        ));
    }
    write(outdir, "oracle_profile.csv", &csv)?;
    write_json(
        outdir,
        "oracle_summary.json",
        &OracleSummary {
            n: cfg.n,
            ones: inst.ones(),
            lambda: cfg.lambda,
            beta: cfg.beta,
            epsilon,
            mle_value: profile.mle_value,
            mle_argmax: profile.mle_argmax.clone(),
            log_z: scan.log_z(0),
            sandwich_ok,
        },
    )?;
    write_manifest(outdir, "oracle", cfg)?;
    println!(
        "oracle: MLE value {} over {} states; sandwich check {}",
        profile.mle_value,
        scan.total_states,
        if sandwich_ok { "pass" } else { "FAIL" }
    );
    Ok(())
}

#[derive(Serialize)]
struct ParisiOutput {
    solution: ogplab::parisi::ParisiSolution,
    /// |Λ₁ − Λ₂| ≤ 1e-4·(1 + |Λ₁|), expected exactly at q = ρ².
    lambda_symmetric: bool,
}

pub fn cmd_parisi(cfg: &ParisiConfig, outdir: &Path) -> Result<()> {
    let mode = match cfg.beta {
        Some(beta) => Mode::FiniteBeta { beta },
        None => Mode::ZeroTemperature,
    };
    let opts = MinimizeOptions {
        config: cfg.solver.clone(),
        mode,
        multistart: cfg.multistart,
        optimize_atom: false,
    };
    let solution = minimize(cfg.rho, cfg.q, cfg.lambda, &opts)?;
    let lambda_symmetric =
        (solution.lambda1 - solution.lambda2).abs() <= 1e-4 * (1.0 + solution.lambda1.abs());
    println!(
        "parisi: E({}; {}, {}) = {}  (P = {}, Λ = ({}, {}), converged: {})",
        cfg.q,
        cfg.rho,
        cfg.lambda,
        solution.energy,
        solution.p_value,
        solution.lambda1,
        solution.lambda2,
        solution.converged
    );
    write_json(outdir, "parisi_solution.json", &ParisiOutput { solution, lambda_symmetric })?;
    write_manifest(outdir, "parisi", cfg)?;
    Ok(())
}

#[derive(Serialize)]
struct LandscapeVerdicts {
    rho: f64,
    lambda: f64,
    noise: f64,
    derivative_consistency: f64,
    verdicts: Vec<landscape::OgpVerdict>,
    best_epsilon: Option<f64>,
}

pub fn cmd_landscape(cfg: &LandscapeConfig, outdir: &Path) -> Result<()> {
    let grid = cfg
        .q_grid
        .clone()
        .unwrap_or_else(|| landscape::default_q_grid(cfg.rho));
    let curve_cfg = CurveConfig {
        solver: cfg.solver.clone(),
        multistart: cfg.multistart,
        parallel: true,
    };
    let curve = landscape::energy_curve(cfg.rho, cfg.lambda, &grid, &curve_cfg)?;
    let noise = landscape::estimate_solver_noise(cfg.rho, cfg.lambda, &curve_cfg)?;
    let verdicts: Vec<landscape::OgpVerdict> = cfg
        .epsilons
        .clone()
        .unwrap_or_else(|| vec![0.05, 0.1, 0.2, 0.3])
        .into_iter()
        .map(|e| landscape::detect_ogp(&curve, e, noise))
        .collect();
    let best_epsilon = verdicts
        .iter()
        .filter(|v| v.holds)
        .map(|v| v.epsilon)
        .fold(f64::NEG_INFINITY, f64::max);
    let best_epsilon = (best_epsilon > 0.0).then_some(best_epsilon);

    write(outdir, "landscape_curve.csv", &curve.to_csv())?;
    write_json(
        outdir,
        "landscape_verdicts.json",
        &LandscapeVerdicts {
            rho: cfg.rho,
            lambda: cfg.lambda,
            noise,
            derivative_consistency: curve.derivative_consistency(),
            verdicts,
            best_epsilon,
        },
    )?;
    write_manifest(outdir, "landscape", cfg)?;
    println!(
        "landscape: {} points, derivative consistency {:.1}%, OGP best ε: {:?}",
        curve.points.len(),
        100.0 * curve.derivative_consistency(),
        best_epsilon
    );
    Ok(())
}

pub fn cmd_ogp_scan(cfg: &OgpScanConfig, outdir: &Path) -> Result<()> {
    let rule = match (&cfg.multipliers, &cfg.lambdas) {
        (Some(m), None) => LambdaRule::Multipliers(m.clone()),
        (None, Some(l)) => LambdaRule::Explicit(l.clone()),
        (None, None) => LambdaRule::Multipliers(vec![3.0]),
        (Some(_), Some(_)) => {
            return Err(ogplab::Error::InvalidParameter(
                "give either multipliers (--c1) or explicit lambdas, not both".into(),
            ))
        }
    };
    let curve_cfg = CurveConfig {
        solver: cfg.solver.clone(),
        multistart: 1,
        parallel: true,
    };
    let rows = landscape::phase_scan(&cfg.rhos, &rule, &curve_cfg)?;
    write(outdir, "ogp_scan.csv", &landscape::phase_rows_to_csv(&rows))?;
    write_json(outdir, "ogp_scan.json", &rows)?;
    write_manifest(outdir, "ogp-scan", cfg)?;
    for r in &rows {
        println!(
            "rho={} lambda={:.4} ogp={:?} (warn={})",
            r.rho, r.lambda, r.best_epsilon, r.regime_warning
        );
    }
    Ok(())
}

#[derive(Serialize)]
struct TrajectoryMeta {
    seed: u64,
    beta: f64,
    record_stride: u64,
    samples: usize,
    layout: &'static str,
    exit_time: Option<u64>,
    acceptance_rate: f64,
    mean_overlap: f64,
}

pub fn cmd_mcmc(cfg: &McmcCliConfig, outdir: &Path) -> Result<()> {
    let inst = PlantedInstance::generate(cfg.n, cfg.rho, cfg.lambda, cfg.seed)?;
    let runs: Vec<(u64, ogplab::mcmc::Trajectory)> = (0..cfg.replicas)
        .into_par_iter()
        .map(|r| {
            let chain_seed = cfg.seed ^ splitmix64(r + 1);
            let chain = ChainConfig {
                beta: cfg.beta,
                steps: cfg.steps,
                burn_in: cfg.burn_in,
                record_stride: cfg.record_stride,
                init: cfg.init.clone(),
                seed: chain_seed,
                exit_interval: cfg.exit_interval,
                stop_on_exit: cfg.stop_on_exit,
            };
            mcmc::run(&inst, &chain).map(|t| (chain_seed, t))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut csv = String::from("seed,exit_time,acceptance,mean_overlap\n");
    for (seed, traj) in &runs {
        let exit = traj
            .exit_time
            .map(|t| t.to_string())
            .unwrap_or_else(|| "inf".into());
        csv.push_str(&format!(
            "{},{},{},{}\n",
            seed, exit, traj.acceptance_rate, traj.mean_overlap
        ));
    }
    write(outdir, "mcmc_summary.csv", &csv)?;

    if cfg.write_trajectories {
        for (seed, traj) in &runs {
            let mut bytes =
                Vec::with_capacity(traj.overlap_series.len() * 12);
            for &c in &traj.overlap_series {
                bytes.extend_from_slice(&c.to_le_bytes());
            }
            for &e in &traj.energy_series {
                bytes.extend_from_slice(&e.to_le_bytes());
            }
            fs::write(outdir.join(format!("trajectory_{seed}.bin")), &bytes)?;
            write_json(
                outdir,
                &format!("trajectory_{seed}.json"),
                &TrajectoryMeta {
                    seed: *seed,
                    beta: cfg.beta,
                    record_stride: cfg.record_stride,
                    samples: traj.overlap_series.len(),
                    layout: "overlap_u32le[samples] then energy_f64le[samples]",
                    exit_time: traj.exit_time,
                    acceptance_rate: traj.acceptance_rate,
                    mean_overlap: traj.mean_overlap,
                },
            )?;
        }
    }
    write_manifest(outdir, "mcmc", cfg)?;
    println!("mcmc: {} replica(s) written", runs.len());
    Ok(())
}

pub fn cmd_estimate(cfg: &EstimateConfig, outdir: &Path) -> Result<()> {
    let reports: Vec<estimators::EstimateReport> = (0..cfg.seeds)
        .into_par_iter()
        .map(|s| {
            let seed = cfg.seed0 + s;
            let inst = PlantedInstance::generate(cfg.n, cfg.rho, cfg.lambda, seed)?;
            Ok(match cfg.estimator {
                EstimatorKind::Spectral => {
                    let sc = estimators::SpectralConfig {
                        delta: cfg.delta,
                        ..Default::default()
                    };
                    estimators::spectral_round(&inst, &sc, seed)
                }
                EstimatorKind::Anneal => {
                    estimators::anneal_mle(&inst, &Default::default(), seed)
                }
                EstimatorKind::Exact => estimators::exact_mle(&inst, cfg.budget)?,
                EstimatorKind::Random => estimators::random_baseline(&inst, seed),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut csv = String::from(estimators::EstimateReport::csv_header());
    csv.push('\n');
    for r in &reports {
        csv.push_str(&r.csv_row());
        csv.push('\n');
    }
    write(outdir, "estimate.csv", &csv)?;
    write_manifest(outdir, "estimate", cfg)?;
    let mean: f64 =
        reports.iter().map(|r| r.overlap_frac).sum::<f64>() / reports.len() as f64;
    println!(
        "estimate: {} run(s), mean overlap fraction {:.4}",
        reports.len(),
        mean
    );
    Ok(())
}

pub fn cmd_thresholds(cfg: &ThresholdsConfig, outdir: &Path) -> Result<()> {
    let mut csv =
        String::from("rho,it_scale,mle_scale,spectral_scale,slepian_null,alpha_bound\n");
    for &rho in &cfg.rhos {
        let t = estimators::verdict_thresholds(rho);
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            rho, t.it_scale, t.mle_scale, t.spectral_scale, t.slepian_null, t.alpha_bound
        ));
    }
    write(outdir, "thresholds.csv", &csv)?;
    write_manifest(outdir, "thresholds", cfg)?;
    println!("thresholds: {} row(s)", cfg.rhos.len());
    Ok(())
}
