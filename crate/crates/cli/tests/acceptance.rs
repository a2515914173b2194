//! Acceptance suite: one test per criterion, each printing a PASS line
//! with the measured numbers (run with `-- --nocapture` to see them all).
//! Criteria 1-9 drive the library; criterion 10 reruns the certificate
//! and simulation workloads through the binary and compares bytes.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use spherical_chaos::chaos::{chaos_curve, coupled_value, f_eval, ChaosPoint};
use spherical_chaos::cs::{cs_value, optimize_cs, OptimizerSettings};
use spherical_chaos::guerra::{oracle_suite, tau_chi, tau_chi_limit};
use spherical_chaos::simulate::{logz_concentration_check, overlap_experiment};
use spherical_chaos::MixtureSpec;

fn settings() -> OptimizerSettings {
    OptimizerSettings::default()
}

/// Brute-force scalar maximization on a grid refined to `xtol`.
fn grid_max(f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64, xtol: f64) -> (f64, f64) {
    let mut best = (lo, f(lo));
    loop {
        let n = 400;
        for i in 0..=n {
            let x = lo + (hi - lo) * i as f64 / n as f64;
            let v = f(x);
            if v > best.1 {
                best = (x, v);
            }
        }
        let width = (hi - lo) / n as f64;
        if width <= xtol {
            return best;
        }
        lo = (best.0 - 2.0 * width).max(lo);
        hi = (best.0 + 2.0 * width).min(hi);
    }
}

/// Deterministic points in `[-u_x, u_x]` shared by criteria 3 and 4.
fn probe_points(u_x: f64) -> Vec<f64> {
    let mut state = 0x1234_5678_u64;
    (0..20)
        .map(|_| {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let frac = (state >> 11) as f64 / (1u64 << 53) as f64;
            -u_x + 2.0 * u_x * frac
        })
        .collect()
}

#[test]
fn criterion_01_pure_field_closed_form() {
    let start = Instant::now();
    // Independent one-dimensional oracle: sup_m { h m + ln(1 - m^2)/2 }.
    let (m_star, oracle_value) =
        grid_max(&|m| m + 0.5 * (1.0 - m * m).ln(), -0.999_999, 0.999_999, 1e-6);
    let spec = MixtureSpec::field_only(1.0);
    let opt = optimize_cs(&spec, &settings()).unwrap();
    let elapsed = start.elapsed();
    assert!(
        (opt.value - 0.377428).abs() <= 1e-5,
        "value {} vs printed 0.377428",
        opt.value
    );
    assert!(
        (opt.value - oracle_value).abs() <= 1e-5,
        "value {} vs oracle {oracle_value}",
        opt.value
    );
    assert!(
        (opt.b_star - 1.618034).abs() <= 1e-5,
        "b* {} vs printed 1.618034",
        opt.b_star
    );
    assert!(elapsed.as_secs_f64() < 1.0, "runtime {elapsed:?} exceeds 1 s");
    let _ = m_star;
    println!(
        "criterion 01 PASS: pure-field value {:.9} (oracle {:.9}), b* {:.9}, {:?}",
        opt.value, oracle_value, opt.b_star, elapsed
    );
}

#[test]
fn criterion_02_high_temperature_two_spin() {
    let start = Instant::now();
    let spec = MixtureSpec::pure(1, 0.25, 0.0);
    let full = OptimizerSettings { k_max: 2, force_full_k: true, ..settings() };
    let opt = optimize_cs(&spec, &full).unwrap();
    let elapsed = start.elapsed();
    assert!((opt.value - 0.125).abs() <= 1e-6, "value {}", opt.value);
    assert!((opt.b_star - 1.5).abs() <= 1e-5, "b* {}", opt.b_star);
    let pieces: Vec<_> = opt.x_star.breakpoints().collect();
    assert_eq!(pieces, vec![(0.0, 1.0)], "x* must be identically one");
    assert_eq!(opt.stage_values.len(), 3);
    for k in [1, 2] {
        let improvement = opt.stage_values[..k]
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
            - opt.stage_values[k];
        assert!(
            improvement < 1e-9,
            "level {k} improved by {improvement:.2e}"
        );
    }
    assert!(elapsed.as_secs_f64() < 10.0, "runtime {elapsed:?} exceeds 10 s");
    println!(
        "criterion 02 PASS: value {:.9}, b* {:.9}, refinements gain < 1e-9, {:?}",
        opt.value, opt.b_star, elapsed
    );
}

#[test]
fn criterion_03_coupling_identity() {
    let mut worst: f64 = 0.0;
    for spec in [MixtureSpec::pure(1, 1.0, 0.0), MixtureSpec::pure(1, 1.0, 0.5)] {
        let opt = optimize_cs(&spec, &settings()).unwrap();
        let u_x = opt.x_star.support_min_default();
        let two_p = 2.0 * cs_value(&spec, &opt.x_star, opt.b_star).unwrap();
        for u in probe_points(u_x) {
            let pt = ChaosPoint::new(0.5, u, 0.0, opt.b_star).unwrap();
            let v = coupled_value(&spec, &opt.x_star, &pt).unwrap();
            worst = worst.max((v - two_p).abs());
        }
    }
    assert!(worst <= 1e-12, "identity error {worst:.3e} exceeds 1e-12");
    println!("criterion 03 PASS: max |P_u(x,b,0) - 2P(x,b)| = {worst:.3e} over 40 points");
}

#[test]
fn criterion_04_multiplier_derivative_identity() {
    let mut worst: f64 = 0.0;
    let step = 1e-6;
    for spec in [MixtureSpec::pure(1, 1.0, 0.0), MixtureSpec::pure(1, 1.0, 0.5)] {
        let opt = optimize_cs(&spec, &settings()).unwrap();
        let u_x = opt.x_star.support_min_default();
        for u in probe_points(u_x) {
            let v = |l: f64| {
                coupled_value(
                    &spec,
                    &opt.x_star,
                    &ChaosPoint::new(0.5, u, l, opt.b_star).unwrap(),
                )
                .unwrap()
            };
            let fd = (v(step) - v(-step)) / (2.0 * step);
            let f = f_eval(&spec, &opt.x_star, opt.b_star, 0.5, u);
            worst = worst.max((fd - f).abs());
        }
    }
    assert!(worst <= 1e-6, "derivative mismatch {worst:.3e} exceeds 1e-6");
    println!("criterion 04 PASS: max |d/dl P_u(x,b,0) - f(u)| = {worst:.3e} over 40 points");
}

#[test]
fn criterion_05_gap_certificate() {
    let start = Instant::now();
    // Symmetric grid with step 0.05 (exact negation pairs).
    let grid: Vec<f64> = (-20..=20).map(|i| i as f64 * 0.05).collect();
    let t = 0.5;

    // Centered model: symmetric curve, u* = 0 exactly.
    let centered = MixtureSpec::pure(1, 1.0, 0.0);
    let curve = chaos_curve(&centered, t, &grid, &settings()).unwrap();
    assert_eq!(curve.u_star, 0.0, "u* must vanish exactly at h = 0");
    let gap_at = |u: f64| {
        let idx = curve.grid.iter().position(|&v| v == u).expect("grid point present");
        curve.gaps[idx]
    };
    for &u in &curve.grid {
        let gap = gap_at(u);
        if (u - curve.u_star).abs() >= 0.05 {
            assert!(gap > 0.0, "h=0: gap not positive at u = {u}: {gap}");
        }
        if u > 0.0 && curve.grid.contains(&(-u)) {
            assert!(
                (gap - gap_at(-u)).abs() < 1e-8,
                "h=0: asymmetry at u = {u}"
            );
        }
    }
    assert!(
        gap_at(curve.u_star).abs() <= 1e-6,
        "h=0: gap at u* is {:.3e}",
        gap_at(curve.u_star)
    );
    let min_off_centered = curve.min_gap_off_center(0.05);
    // Regression baseline recorded from this model and grid.
    assert!(
        min_off_centered >= 3.0e-4,
        "h=0: off-center gap floor regressed: {min_off_centered:.3e}"
    );

    // Field model: u* interior to (0, u_x).
    let field = MixtureSpec::pure(1, 1.0, 0.5);
    let curve_f = chaos_curve(&field, t, &grid, &settings()).unwrap();
    assert!(
        curve_f.u_star > 0.0 && curve_f.u_star < curve_f.u_x,
        "u* = {} not inside (0, u_x = {})",
        curve_f.u_star,
        curve_f.u_x
    );
    let gap_at_f = |u: f64| {
        let idx = curve_f.grid.iter().position(|&v| v == u).expect("grid point present");
        curve_f.gaps[idx]
    };
    for &u in &curve_f.grid {
        if (u - curve_f.u_star).abs() >= 0.05 {
            assert!(gap_at_f(u) > 0.0, "h=0.5: gap not positive at u = {u}");
        }
    }
    assert!(
        gap_at_f(curve_f.u_star).abs() <= 1e-6,
        "h=0.5: gap at u* is {:.3e}",
        gap_at_f(curve_f.u_star)
    );
    // Regression baseline recorded from this model and grid.
    assert!(
        curve_f.min_gap_off_center(0.05) >= 5.0e-4,
        "h=0.5: off-center gap floor regressed: {:.3e}",
        curve_f.min_gap_off_center(0.05)
    );
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 60.0, "runtime {elapsed:?} exceeds 1 min");
    println!(
        "criterion 05 PASS: gaps positive off u* (min off-center {:.3e} at h=0, {:.3e} at h=0.5), \
         gap(u*) <= 1e-6, u*(h=0.5) = {:.6} in (0, {:.6}), {:?}",
        min_off_centered,
        curve_f.min_gap_off_center(0.05),
        curve_f.u_star,
        curve_f.u_x,
        elapsed
    );
}

#[test]
fn criterion_06_recursion_oracle_suite() {
    let start = Instant::now();
    let cases = oracle_suite(100, 0xacce50).unwrap();
    let elapsed = start.elapsed();
    assert_eq!(cases.len(), 100);
    let max_err = cases.iter().map(|c| c.max_abs_err).fold(0.0, f64::max);
    for case in &cases {
        assert!(
            case.max_abs_err <= 1e-5,
            "case {} (k={}, tau={}): error {:.3e}",
            case.index,
            case.k,
            case.tau,
            case.max_abs_err
        );
    }
    assert!(elapsed.as_secs_f64() < 300.0, "runtime {elapsed:?} exceeds 5 min");
    println!(
        "criterion 06 PASS: 100 schedules, max |recursive - closed| = {max_err:.3e}, {elapsed:?}"
    );
}

#[test]
fn criterion_07_norm_tail_limit() {
    let limit = tau_chi_limit(2.0);
    assert!((limit - 0.153_426).abs() < 1e-6);
    let values: Vec<f64> = [100u64, 1000, 10_000]
        .iter()
        .map(|&n| tau_chi(n, 2.0).unwrap())
        .collect();
    let errs: Vec<f64> = values.iter().map(|v| (v - limit).abs()).collect();
    assert!(errs[2] <= 0.01, "final error {} exceeds 0.01", errs[2]);
    assert!(
        errs[0] > errs[1] && errs[1] > errs[2],
        "errors not decreasing: {errs:?}"
    );
    println!(
        "criterion 07 PASS: tau(10^4, 2) = {:.6} vs limit {limit:.6}, errors {errs:?}",
        values[2]
    );
}

#[test]
fn criterion_08_log_partition_concentration() {
    let start = Instant::now();
    let spec = MixtureSpec::pure(1, 1.0, 0.0);
    let table = logz_concentration_check(&spec, 16, 2000, 2000, 0xacce51).unwrap();
    let elapsed = start.elapsed();
    for row in &table.rows {
        let allowance = row.bound + 3.0 * row.stderr.max(1e-12);
        assert!(
            row.empirical <= allowance,
            "s = {:.3}: empirical {:.4} above bound {:.4} (+3 sigma)",
            row.s,
            row.empirical,
            row.bound
        );
    }
    assert!(elapsed.as_secs_f64() < 300.0, "runtime {elapsed:?} exceeds 5 min");
    let summary: Vec<String> = table
        .rows
        .iter()
        .map(|r| format!("s={:.1}sqrt(a): {:.4} <= {:.4}", r.s_in_std_units, r.empirical, r.bound))
        .collect();
    println!("criterion 08 PASS: {} ({elapsed:?})", summary.join("; "));
}

#[test]
fn criterion_09_chaos_by_simulation() {
    let start = Instant::now();
    let spec = MixtureSpec::pure(1, 1.0, 0.0);
    let replicas = 50;
    let sweeps = 4000;
    let eps = [0.3];
    let sizes = [8usize, 16, 24, 32];
    let mut tails = Vec::new();
    let mut mass_near_zero_chaotic = 0.0;
    for &n in &sizes {
        let report = overlap_experiment(
            &spec,
            n,
            0.3,
            0.0,
            &eps,
            replicas,
            sweeps,
            0xc0ffee ^ ((n as u64) << 32),
        )
        .unwrap();
        if n == 24 {
            mass_near_zero_chaotic = report.mass_within(0.2);
        }
        tails.push((n, report.tails[0].1));
    }
    let (slope, degenerate) = spherical_chaos::simulate::fit_log_tail_slope(&tails);
    assert!(!degenerate, "tails all vanished; cannot fit a slope");
    assert!(slope < 0.0, "log-tail slope {slope} not negative (tails {tails:?})");
    let control = overlap_experiment(
        &spec,
        24,
        1.0,
        0.0,
        &eps,
        replicas,
        sweeps,
        0xc0ffee ^ (24u64 << 32),
    )
    .unwrap();
    let mass_near_zero_control = control.mass_within(0.2);
    assert!(
        mass_near_zero_chaotic > mass_near_zero_control,
        "t=0.3 mass {mass_near_zero_chaotic} not above t=1 mass {mass_near_zero_control}"
    );
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 1800.0, "runtime {elapsed:?} exceeds 30 min");
    println!(
        "criterion 09 PASS: slope {slope:.4} over N {:?} (tails {:?}), \
         mass(|R|<=0.2) {mass_near_zero_chaotic:.3} (t=0.3) vs {mass_near_zero_control:.3} (t=1), {elapsed:?}",
        sizes, tails
    );
}

fn run_into(dir: &Path, args: &[&str]) {
    let status = Command::new(env!("CARGO_BIN_EXE_spherical-chaos"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .status()
        .unwrap();
    assert!(status.success(), "run {args:?} failed");
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .filter_map(|e| e.ok())
        .map(|e| {
            (
                e.file_name().to_string_lossy().into_owned(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    files.sort_by(|a, b| a.0.cmp(&b.0));
    files
}

#[test]
fn criterion_10_byte_identical_reruns() {
    // The gap-certificate run (criterion 5 configuration, h = 0 model).
    let chaos_args = [
        "chaos", "--term", "1=1.0", "--h", "0.0", "--t", "0.5", "--u-step", "0.05", "--seed", "7",
    ];
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_into(a.path(), &chaos_args);
    run_into(b.path(), &chaos_args);
    let files_a = dir_bytes(a.path());
    assert_eq!(files_a, dir_bytes(b.path()), "chaos rerun differs");
    let chaos_names: Vec<&str> = files_a.iter().map(|f| f.0.as_str()).collect();
    assert_eq!(
        chaos_names,
        vec!["chaos_curve.csv", "chaos_summary.json", "manifest.json"]
    );

    // The simulation run (criterion 9 configuration).
    let sim_args = [
        "simulate", "--term", "1=1.0", "--h", "0.0", "--t", "0.3", "--replicas", "50",
        "--sweeps", "4000", "--n", "8,16,24,32", "--seed", "7",
    ];
    let c = tempfile::tempdir().unwrap();
    let d = tempfile::tempdir().unwrap();
    run_into(c.path(), &sim_args);
    run_into(d.path(), &sim_args);
    let files_c = dir_bytes(c.path());
    assert_eq!(files_c, dir_bytes(d.path()), "simulate rerun differs");
    println!(
        "criterion 10 PASS: byte-identical reruns for {} chaos files and {} simulation files",
        files_a.len(),
        files_c.len()
    );
}
