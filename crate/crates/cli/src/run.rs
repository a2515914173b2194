//! The four subcommand bodies. Each computes everything first, then
//! writes its file set in one pass.

use serde::Serialize;
use spherical_chaos::chaos::{chaos_curve, solve_u_star};
use spherical_chaos::cs::optimize_cs;
use spherical_chaos::guerra::{oracle_suite, tau_chi, tau_chi_limit, OracleCase};
use spherical_chaos::simulate::{fit_log_tail_slope, overlap_experiment, OverlapReport};

use crate::config::RunConfig;
use crate::output::{manifest, OutputSet};
use crate::CliError;

fn numerical(e: spherical_chaos::Error) -> CliError {
    CliError::Numerical(e.to_string())
}

#[derive(Serialize)]
struct CsOptimumFile {
    value: f64,
    b_star: f64,
    k_used: usize,
    breakpoints: Vec<(f64, f64)>,
    stage_values: Vec<f64>,
    stationarity_residuals: Vec<f64>,
    support_residual: f64,
    active_constraint: String,
}

pub fn cmd_solve(config: &RunConfig) -> Result<OutputSet, CliError> {
    let spec = config.spec();
    let settings = config.optimizer.to_settings(config.seed);
    let optimum = optimize_cs(&spec, &settings).map_err(numerical)?;
    let mut out = OutputSet::new();
    out.add_json("manifest.json", &manifest("solve", config))?;
    out.add_json(
        "cs_optimum.json",
        &CsOptimumFile {
            value: optimum.value,
            b_star: optimum.b_star,
            k_used: optimum.k_used,
            breakpoints: optimum.x_star.breakpoints().collect(),
            stage_values: optimum.stage_values.clone(),
            stationarity_residuals: optimum.stationarity_residuals.clone(),
            support_residual: optimum.support_residual,
            active_constraint: format!("{:?}", optimum.active_constraint),
        },
    )?;
    let rows: Vec<Vec<f64>> = (0..200)
        .map(|i| {
            let q = i as f64 / 199.0;
            vec![q, optimum.x_star.eval(q)]
        })
        .collect();
    out.add_csv("order_param.csv", "q,x", &rows);
    Ok(out)
}

#[derive(Serialize)]
struct ChaosSummaryFile {
    u_star: f64,
    two_p: f64,
    min_gap_off_ustar: f64,
    u_x: f64,
    b_star: f64,
    t: f64,
}

pub fn cmd_chaos(config: &RunConfig) -> Result<OutputSet, CliError> {
    let spec = config.spec();
    if !(config.t > 0.0 && config.t < 1.0) {
        return Err(CliError::Config(format!(
            "chaos requires 0 < t < 1, got t = {}",
            config.t
        )));
    }
    let settings = config.optimizer.to_settings(config.seed);
    let grid = config.u_grid();
    let curve = chaos_curve(&spec, config.t, &grid, &settings).map_err(numerical)?;
    let mut out = OutputSet::new();
    out.add_json("manifest.json", &manifest("chaos", config))?;
    let rows: Vec<Vec<f64>> = curve
        .grid
        .iter()
        .zip(curve.gaps.iter().zip(&curve.lambda_star))
        .map(|(u, (gap, l))| vec![*u, *gap, *l])
        .collect();
    out.add_csv("chaos_curve.csv", "u,gap,lambda_star", &rows);
    out.add_json(
        "chaos_summary.json",
        &ChaosSummaryFile {
            u_star: curve.u_star,
            two_p: curve.two_p,
            min_gap_off_ustar: curve.min_gap_off_center(0.05),
            u_x: curve.u_x,
            b_star: curve.b_star,
            t: config.t,
        },
    )?;
    Ok(out)
}

#[derive(Serialize)]
struct TauRow {
    n: u64,
    value: f64,
    abs_err: f64,
}

#[derive(Serialize)]
struct OracleReportFile {
    cases: Vec<OracleCase>,
    max_abs_err: f64,
    tolerance: f64,
    pass: bool,
    tau_b: f64,
    tau_limit: f64,
    tau_rows: Vec<TauRow>,
    tau_errors_decreasing: bool,
}

pub fn cmd_oracle(config: &RunConfig) -> Result<OutputSet, CliError> {
    let cases = oracle_suite(config.oracle.cases, config.seed).map_err(numerical)?;
    let max_abs_err = cases.iter().map(|c| c.max_abs_err).fold(0.0, f64::max);
    let limit = tau_chi_limit(config.oracle.tau_b);
    let mut tau_rows = Vec::new();
    for &n in &config.oracle.tau_n {
        let value = tau_chi(n, config.oracle.tau_b).map_err(numerical)?;
        tau_rows.push(TauRow { n, value, abs_err: (value - limit).abs() });
    }
    let decreasing = tau_rows.windows(2).all(|w| w[0].abs_err > w[1].abs_err);
    let pass = max_abs_err <= config.oracle.tolerance && decreasing;
    let report = OracleReportFile {
        cases,
        max_abs_err,
        tolerance: config.oracle.tolerance,
        pass,
        tau_b: config.oracle.tau_b,
        tau_limit: limit,
        tau_rows,
        tau_errors_decreasing: decreasing,
    };
    let mut out = OutputSet::new();
    out.add_json("manifest.json", &manifest("oracle", config))?;
    out.add_json("oracle_report.json", &report)?;
    if !pass {
        return Err(CliError::NumericalWithOutput(
            format!(
                "oracle suite failed: max |recursive - closed| = {max_abs_err:.3e} \
                 (tolerance {:.1e}), tau errors decreasing: {decreasing}",
                config.oracle.tolerance
            ),
            out,
        ));
    }
    Ok(out)
}

#[derive(Serialize)]
struct TrendFile {
    u_star: f64,
    t: f64,
    slopes: Vec<TrendEntry>,
}

#[derive(Serialize)]
struct TrendEntry {
    eps: f64,
    slope: f64,
    degenerate: bool,
}

pub fn cmd_simulate(config: &RunConfig) -> Result<OutputSet, CliError> {
    let spec = config.spec();
    let settings = config.optimizer.to_settings(config.seed);
    // The predicted concentration point comes from the functional side,
    // never from the data.
    let u_star = if spec.h() == 0.0 {
        0.0
    } else {
        if config.t >= 1.0 {
            return Err(CliError::Config(
                "t = 1 with a field admits no concentration point; use t < 1".into(),
            ));
        }
        let optimum = optimize_cs(&spec, &settings).map_err(numerical)?;
        solve_u_star(&spec, &optimum.x_star, optimum.b_star, config.t, 1e-10)
            .map_err(numerical)?
    };
    let sim = &config.simulate;
    let mut reports: Vec<OverlapReport> = Vec::new();
    for &n in &sim.n_list {
        let report = overlap_experiment(
            &spec,
            n,
            config.t,
            u_star,
            &sim.eps,
            sim.replicas,
            sim.sweeps,
            config.seed ^ ((n as u64) << 32),
        )
        .map_err(numerical)?;
        reports.push(report);
    }
    let mut out = OutputSet::new();
    out.add_json("manifest.json", &manifest("simulate", config))?;
    for report in &reports {
        let rows: Vec<Vec<f64>> = report
            .masses
            .iter()
            .enumerate()
            .map(|(i, m)| vec![OverlapReport::bin_center(i), *m])
            .collect();
        out.add_csv(&format!("overlap_N{}.csv", report.n), "bin_center,mass", &rows);
    }
    let mut rows = Vec::new();
    for report in &reports {
        for (eps, tail, stderr) in &report.tails {
            rows.push(vec![report.n as f64, *eps, *tail, *stderr]);
        }
    }
    out.add_csv("concentration.csv", "N,eps,tail,stderr", &rows);
    let slopes: Vec<TrendEntry> = sim
        .eps
        .iter()
        .enumerate()
        .map(|(j, &eps)| {
            let points: Vec<(usize, f64)> =
                reports.iter().map(|r| (r.n, r.tails[j].1)).collect();
            let (slope, degenerate) = fit_log_tail_slope(&points);
            TrendEntry { eps, slope, degenerate }
        })
        .collect();
    out.add_json("trend.json", &TrendFile { u_star, t: config.t, slopes })?;
    Ok(out)
}
