//! The free-energy functional of the spherical model and its minimization
//! over discrete order parameters.
//!
//! For an order parameter `x` and a scalar `b` with `b >= 1` and
//! `b > d(0)`, the functional is
//!
//! ```text
//! P(x, b) = 1/2 ( h^2/(b - d(0)) + int_0^1 xi''(q)/(b - d(q)) dq
//!                 + b - 1 - ln b - int_0^1 q xi''(q) x(q) dq )
//! ```
//!
//! with `d(q)` the tail integral of `xi'' x`. Every term has an exact
//! piecewise closed form, so evaluation is cheap and the minimization is
//! done with a derivative-free simplex in transformed coordinates plus
//! one-dimensional refinements.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::mixture::MixtureSpec;
use crate::optim::{cyclic_polish, golden_min, nelder_mead, SimplexOptions};
use crate::order_param::{Envelope, StepOrderParameter};
use crate::par::map_slice;

/// Which part of the admissibility constraint `b >= max(1, d(0))` binds
/// at the reported optimum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ActiveConstraint {
    Interior,
    UnitLowerBound,
    TailLowerBound,
}

#[derive(Debug, Clone, Serialize)]
pub struct CsOptimum {
    pub x_star: StepOrderParameter,
    pub b_star: f64,
    pub value: f64,
    pub k_used: usize,
    /// Best value found at each explored refinement level.
    pub stage_values: Vec<f64>,
    /// Finite-difference partials at the optimum, interior coordinates only.
    pub stationarity_residuals: Vec<f64>,
    /// Residual of the support identity `(h^2 + xi'(u_x))/(b - d(0))^2 = u_x`.
    pub support_residual: f64,
    pub active_constraint: ActiveConstraint,
}

#[derive(Debug, Clone)]
pub struct OptimizerSettings {
    /// Largest number of interior breakpoints tried.
    pub k_max: usize,
    /// Stop refining once a level improves the value by less than this.
    pub tol_k: f64,
    /// Bound the interior stationarity residuals must meet.
    pub grad_tol: f64,
    /// Simplex restarts per refinement level.
    pub restarts: usize,
    /// Iteration budget per simplex run.
    pub max_iter: usize,
    /// Seed for the restart generator; fixed by default so runs repeat.
    pub seed: u64,
    /// Explore every level up to `k_max` even without improvement.
    pub force_full_k: bool,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        OptimizerSettings {
            k_max: 6,
            tol_k: 1e-9,
            grad_tol: 1e-6,
            restarts: 8,
            max_iter: 4000,
            seed: 0x5eed_cafe,
            force_full_k: false,
        }
    }
}

const B_MARGIN: f64 = 1e-12;
const SNAP_DIST: f64 = 5e-5;

/// Evaluate the functional. Errors name the violated admissibility
/// constraint.
pub fn cs_value(spec: &MixtureSpec, x: &StepOrderParameter, b: f64) -> Result<f64> {
    let d0 = x.d_eval(spec, 0.0);
    if b < 1.0 {
        return Err(Error::Inadmissible(format!("b = {b} is below the lower bound 1")));
    }
    if b <= d0 {
        return Err(Error::Inadmissible(format!(
            "b = {b} does not exceed d(0) = {d0}"
        )));
    }
    let h = spec.h();
    let field_term = if h == 0.0 { 0.0 } else { h * h / (b - d0) };
    let log_term = x.log_integral(spec, b, 0.0, 0.0, 1.0, Envelope::Tail)?;
    let weighted = x.weighted_integral(spec);
    Ok(0.5 * (field_term + log_term + b - 1.0 - b.ln() - weighted))
}

/// Residual of the support identity at the smallest support point of `x`.
pub fn support_residual(spec: &MixtureSpec, x: &StepOrderParameter, b: f64) -> f64 {
    let d0 = x.d_eval(spec, 0.0);
    let u_x = x.support_min_default();
    let h = spec.h();
    let den = b - d0;
    (h * h + spec.xi_prime(u_x)) / (den * den) - u_x
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn logit(p: f64) -> f64 {
    let p = p.clamp(1e-9, 1.0 - 1e-9);
    (p / (1.0 - p)).ln()
}

/// Decode a free vector into an admissible `(x, b)` pair for level `k`:
/// logit-transformed q- and m-increments, log-transformed `b` above its
/// lower bound. Every real vector maps to an admissible point.
fn decode(spec: &MixtureSpec, k: usize, z: &[f64]) -> (StepOrderParameter, f64) {
    debug_assert_eq!(z.len(), 2 * k + 1);
    let mut breaks = Vec::with_capacity(k + 1);
    let mut q_prev = 0.0;
    let mut qs = Vec::with_capacity(k);
    for &zq in &z[0..k] {
        let q = q_prev + (1.0 - q_prev) * sigmoid(zq.clamp(-40.0, 40.0));
        qs.push(q.min(1.0));
        q_prev = q;
    }
    let mut m_prev = 0.0;
    let mut ms = Vec::with_capacity(k);
    for &zm in &z[k..2 * k] {
        let m = m_prev + (1.0 - m_prev) * sigmoid(zm.clamp(-40.0, 40.0));
        ms.push(m.min(1.0));
        m_prev = m;
    }
    breaks.push((0.0, if k == 0 { 1.0 } else { ms[0] }));
    for l in 1..k {
        breaks.push((qs[l - 1], ms[l]));
    }
    if k >= 1 {
        breaks.push((qs[k - 1], 1.0));
    }
    let x = StepOrderParameter::new(&breaks).expect("transform produces ordered breakpoints");
    let d0 = x.d_eval(spec, 0.0);
    let b = d0.max(1.0) + z[2 * k].clamp(-700.0, 40.0).exp();
    (x, b)
}

/// Inverse of [`decode`] up to clamping, used to warm-start a level with
/// the previous level's optimum.
fn encode(spec: &MixtureSpec, k: usize, x: &StepOrderParameter, b: f64) -> Vec<f64> {
    let pieces: Vec<(f64, f64)> = x.breakpoints().collect();
    debug_assert_eq!(pieces.len(), k + 1);
    let mut z = Vec::with_capacity(2 * k + 1);
    let mut q_prev = 0.0;
    for piece in pieces.iter().skip(1) {
        let frac = if 1.0 - q_prev > 0.0 { (piece.0 - q_prev) / (1.0 - q_prev) } else { 0.5 };
        z.push(logit(frac).clamp(-16.0, 16.0));
        q_prev = piece.0;
    }
    let mut m_prev = 0.0;
    for piece in pieces.iter().take(k) {
        let frac = if 1.0 - m_prev > 0.0 { (piece.1 - m_prev) / (1.0 - m_prev) } else { 0.5 };
        z.push(logit(frac).clamp(-16.0, 16.0));
        m_prev = piece.1;
    }
    let d0 = x.d_eval(spec, 0.0);
    let gap = (b - d0.max(1.0)).max(1e-9);
    z.push(gap.ln());
    z
}

fn objective(spec: &MixtureSpec, x: &StepOrderParameter, b: f64) -> f64 {
    match cs_value(spec, x, b) {
        Ok(v) if v.is_finite() => v,
        _ => f64::INFINITY,
    }
}

/// Best admissible `b` for a fixed order parameter, by bracket expansion
/// plus golden-section search. The lower bound itself is a candidate, so
/// boundary optima come out exact.
fn best_b(spec: &MixtureSpec, x: &StepOrderParameter, hint: f64) -> (f64, f64) {
    let d0 = x.d_eval(spec, 0.0);
    let lo = if d0 >= 1.0 { d0 + B_MARGIN } else { 1.0 };
    let f = |b: f64| objective(spec, x, b);
    let mut span = (2.0 * (hint - lo)).max(1.0);
    while f(lo + span) < f(lo + 0.5 * span) && span < 1e6 {
        span *= 2.0;
    }
    let res = golden_min(f, lo, lo + span, 1e-12, 400);
    (res.x, res.value)
}

#[derive(Debug, Clone)]
struct StagePoint {
    x: StepOrderParameter,
    b: f64,
    value: f64,
}

/// Try snapping near-boundary or near-duplicate coordinates to their exact
/// values; each accepted snap re-optimizes `b`.
fn snap(spec: &MixtureSpec, point: StagePoint) -> StagePoint {
    let mut best = point;
    for _ in 0..2 {
        let pieces: Vec<(f64, f64)> = best.x.breakpoints().collect();
        let n = pieces.len();
        let mut improved = false;
        for i in 0..n {
            let try_candidate = |pieces_mod: Vec<(f64, f64)>, best: &mut StagePoint| {
                if let Ok(x_new) = StepOrderParameter::new(&pieces_mod) {
                    let x_new = x_new.canonical();
                    let (b_new, v_new) = best_b(spec, &x_new, best.b);
                    if v_new <= best.value + 1e-11 {
                        *best = StagePoint { x: x_new, b: b_new, value: v_new.min(best.value) };
                        return true;
                    }
                }
                false
            };
            // m candidates: clamp to 0, 1 or a neighbour value.
            let m_lo = if i == 0 { 0.0 } else { pieces[i - 1].1 };
            let m_hi = if i + 1 < n { pieces[i + 1].1 } else { 1.0 };
            for cand in [0.0, 1.0, m_lo, m_hi] {
                let m = pieces[i].1;
                if m != cand && (m - cand).abs() < SNAP_DIST && cand >= m_lo && cand <= m_hi {
                    let mut mod_pieces = pieces.clone();
                    mod_pieces[i].1 = cand;
                    if try_candidate(mod_pieces, &mut best) {
                        improved = true;
                        break;
                    }
                }
            }
            // q candidates (never move the leading breakpoint off 0).
            if i >= 1 {
                let q_lo = pieces[i - 1].0;
                let q_hi = if i + 1 < n { pieces[i + 1].0 } else { 1.0 };
                for cand in [q_lo, q_hi, 1.0] {
                    let q = pieces[i].0;
                    if q != cand && (q - cand).abs() < SNAP_DIST && cand >= q_lo && cand <= q_hi {
                        let mut mod_pieces = pieces.clone();
                        mod_pieces[i].0 = cand;
                        if try_candidate(mod_pieces, &mut best) {
                            improved = true;
                            break;
                        }
                    }
                }
            }
            if improved {
                break;
            }
        }
        if !improved {
            break;
        }
    }
    best.x = best.x.canonical();
    let (b, v) = best_b(spec, &best.x, best.b);
    if v < best.value {
        best.b = b;
        best.value = v;
    }
    best
}

/// Coordinate-wise golden refinement in the natural `(q, m, b)` space,
/// keeping snapped boundary coordinates fixed. Runs after the simplex so
/// the reported representation itself is stationary.
fn natural_polish(spec: &MixtureSpec, point: StagePoint) -> StagePoint {
    let mut best = point;
    for pass in 0..4 {
        let pieces: Vec<(f64, f64)> = best.x.breakpoints().collect();
        let n = pieces.len();
        let w = if pass < 2 { 2e-3 } else { 2e-6 };
        let mut current = pieces.clone();
        let mut touched = false;
        for i in 0..n {
            // Interior breakpoint locations.
            if i >= 1 {
                let lo = current[i - 1].0 + 1e-12;
                let hi = (if i + 1 < n { current[i + 1].0 } else { 1.0 }) - 1e-12;
                let q = current[i].0;
                if q > lo && q < hi {
                    let f = |v: f64| {
                        let mut probe = current.clone();
                        probe[i].0 = v;
                        StepOrderParameter::new(&probe)
                            .ok()
                            .map(|x| objective(spec, &x, best.b))
                            .unwrap_or(f64::INFINITY)
                    };
                    let res = golden_min(f, (q - w).max(lo), (q + w).min(hi), 1e-13, 300);
                    if res.value < best.value {
                        current[i].0 = res.x;
                        best.value = res.value;
                        touched = true;
                    }
                }
            }
            // Interior piece values; the top level stays at the cap.
            if i + 1 < n {
                let lo = (if i == 0 { 0.0 } else { current[i - 1].1 }) + 1e-12;
                let hi = current[i + 1].1 - 1e-12;
                let m = current[i].1;
                if m > lo && m < hi {
                    let f = |v: f64| {
                        let mut probe = current.clone();
                        probe[i].1 = v;
                        StepOrderParameter::new(&probe)
                            .ok()
                            .map(|x| objective(spec, &x, best.b))
                            .unwrap_or(f64::INFINITY)
                    };
                    let res = golden_min(f, (m - w).max(lo), (m + w).min(hi), 1e-13, 300);
                    if res.value < best.value {
                        current[i].1 = res.x;
                        best.value = res.value;
                        touched = true;
                    }
                }
            }
        }
        if touched {
            if let Ok(x_new) = StepOrderParameter::new(&current) {
                best.x = x_new;
            }
        }
        let (b_new, v_new) = best_b(spec, &best.x, best.b);
        if v_new <= best.value {
            best.b = b_new;
            best.value = v_new;
        }
    }
    best
}

fn run_stage(
    spec: &MixtureSpec,
    k: usize,
    settings: &OptimizerSettings,
    warm: Option<&StagePoint>,
) -> StagePoint {
    if k == 0 {
        let x = StepOrderParameter::constant_one();
        let (b, value) = best_b(spec, &x, 2.0);
        return snap(spec, StagePoint { x, b, value });
    }
    let dim = 2 * k + 1;
    let mut starts: Vec<Vec<f64>> = Vec::new();
    starts.push(vec![0.0; dim]);
    if let Some(prev) = warm {
        // Embed the previous optimum by splitting its widest piece.
        let pieces: Vec<(f64, f64)> = prev.x.breakpoints().collect();
        let mut x_ref = prev.x.clone();
        while x_ref.len() < k + 1 {
            let pieces_now: Vec<(f64, f64)> = x_ref.breakpoints().collect();
            let mut widest = (0.0, 0.5);
            for (i, &(q, _)) in pieces_now.iter().enumerate() {
                let hi = if i + 1 < pieces_now.len() { pieces_now[i + 1].0 } else { 1.0 };
                if hi - q > widest.0 {
                    widest = (hi - q, 0.5 * (q + hi));
                }
            }
            x_ref = x_ref.insert_breakpoint(widest.1);
        }
        if x_ref.len() == k + 1 {
            starts.push(encode(spec, k, &x_ref, prev.b));
        }
        let _ = pieces;
    }
    // Deterministic pseudo-random restarts.
    let mut state = settings.seed ^ (k as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    let mut next = || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((state >> 11) as f64 / (1u64 << 53) as f64 - 0.5) * 5.0
    };
    while starts.len() < settings.restarts.max(2) {
        starts.push((0..dim).map(|_| next()).collect());
    }

    let objective_z = |z: &[f64]| {
        let (x, b) = decode(spec, k, z);
        objective(spec, &x, b)
    };
    let opts = SimplexOptions { max_iter: settings.max_iter, ..Default::default() };
    let runs = map_slice(&starts, |start| nelder_mead(objective_z, start, &opts));
    let mut best_idx = 0;
    for (i, r) in runs.iter().enumerate() {
        if r.value < runs[best_idx].value {
            best_idx = i;
        }
    }
    let mut z = runs[best_idx].x.clone();
    cyclic_polish(objective_z, &mut z, 0.5, 3, 1e-12);
    let (x, b) = decode(spec, k, &z);
    let (b, value) = best_b(spec, &x, b);
    natural_polish(spec, snap(spec, StagePoint { x, b, value }))
}

fn field_only_optimum(spec: &MixtureSpec, settings: &OptimizerSettings) -> Result<CsOptimum> {
    let h = spec.h();
    let x_probe = StepOrderParameter::constant_one();
    let f = |b: f64| objective(spec, &x_probe, b);
    let mut span = 2.0 + 4.0 * h * h;
    while f(1.0 + span) < f(1.0 + 0.5 * span) && span < 1e6 {
        span *= 2.0;
    }
    let res = golden_min(f, 1.0, 1.0 + span, 1e-12, 400);
    let b = res.x;
    // The functional does not depend on x here; report the order parameter
    // consistent with the support identity so downstream consumers agree.
    let x_star = if h == 0.0 {
        StepOrderParameter::constant_one()
    } else {
        StepOrderParameter::step_at((h * h / (b * b)).min(1.0))?
    };
    let value = cs_value(spec, &x_star, b)?;
    let residuals = if b > 1.0 + 1e-9 {
        let step = 1e-6;
        vec![(objective(spec, &x_star, b + step) - objective(spec, &x_star, b - step)) / (2.0 * step)]
    } else {
        Vec::new()
    };
    let optimum = CsOptimum {
        support_residual: support_residual(spec, &x_star, b),
        active_constraint: if b <= 1.0 + 1e-12 {
            ActiveConstraint::UnitLowerBound
        } else {
            ActiveConstraint::Interior
        },
        x_star,
        b_star: b,
        value,
        k_used: 0,
        stage_values: vec![value],
        stationarity_residuals: residuals,
    };
    check_residuals(optimum, settings)
}

fn stationarity_residuals(
    spec: &MixtureSpec,
    x: &StepOrderParameter,
    b: f64,
) -> Vec<f64> {
    let step = 1e-6;
    let pieces: Vec<(f64, f64)> = x.breakpoints().collect();
    let n = pieces.len();
    let mut out = Vec::new();
    let value_of = |pieces_mod: &[(f64, f64)], b_val: f64| -> Option<f64> {
        let x_mod = StepOrderParameter::new(pieces_mod).ok()?;
        cs_value(spec, &x_mod, b_val).ok()
    };
    for i in 1..n {
        let q_lo = pieces[i - 1].0;
        let q_hi = if i + 1 < n { pieces[i + 1].0 } else { 1.0 };
        let q = pieces[i].0;
        if q - q_lo > 2.0 * step && q_hi - q > 2.0 * step {
            let mut up = pieces.clone();
            up[i].0 = q + step;
            let mut down = pieces.clone();
            down[i].0 = q - step;
            if let (Some(vu), Some(vd)) = (value_of(&up, b), value_of(&down, b)) {
                out.push((vu - vd) / (2.0 * step));
            }
        }
    }
    for i in 0..n {
        let m_lo = if i == 0 { 0.0 } else { pieces[i - 1].1 };
        let m_hi = if i + 1 < n { pieces[i + 1].1 } else { 1.0 };
        let m = pieces[i].1;
        let pinned_top = i + 1 == n; // top level is the distribution cap
        if !pinned_top && m - m_lo > 2.0 * step && m_hi - m > 2.0 * step {
            let mut up = pieces.clone();
            up[i].1 = m + step;
            let mut down = pieces.clone();
            down[i].1 = m - step;
            if let (Some(vu), Some(vd)) = (value_of(&up, b), value_of(&down, b)) {
                out.push((vu - vd) / (2.0 * step));
            }
        }
    }
    let d0 = x.d_eval(spec, 0.0);
    if b - d0.max(1.0) > 2.0 * step {
        if let (Ok(vu), Ok(vd)) = (cs_value(spec, x, b + step), cs_value(spec, x, b - step)) {
            out.push((vu - vd) / (2.0 * step));
        }
    }
    out
}

fn check_residuals(optimum: CsOptimum, settings: &OptimizerSettings) -> Result<CsOptimum> {
    let worst = optimum
        .stationarity_residuals
        .iter()
        .fold(0.0_f64, |acc, r| acc.max(r.abs()));
    if worst > settings.grad_tol {
        return Err(Error::NonConvergence {
            reason: format!(
                "stationarity residual {worst:.3e} exceeds tolerance {:.1e}",
                settings.grad_tol
            ),
            best: Box::new(optimum),
        });
    }
    Ok(optimum)
}

/// Minimize the functional over step order parameters with at most
/// `k_max` interior breakpoints and admissible `b`, refining level by
/// level until the value stops improving.
pub fn optimize_cs(spec: &MixtureSpec, settings: &OptimizerSettings) -> Result<CsOptimum> {
    spec.validated()?;
    if spec.is_zero() {
        return field_only_optimum(spec, settings);
    }
    let mut stages: Vec<StagePoint> = Vec::new();
    let mut stage_values: Vec<f64> = Vec::new();
    for k in 0..=settings.k_max {
        let warm = stages.last();
        let stage = run_stage(spec, k, settings, warm);
        stage_values.push(stage.value);
        let improvement = if k == 0 {
            f64::INFINITY
        } else {
            stage_values[..k]
                .iter()
                .cloned()
                .fold(f64::INFINITY, f64::min)
                - stage.value
        };
        stages.push(stage);
        if !settings.force_full_k && k > 0 && improvement < settings.tol_k {
            break;
        }
    }
    let best_value = stage_values.iter().cloned().fold(f64::INFINITY, f64::min);
    if !best_value.is_finite() {
        return Err(Error::Numerical(
            "no admissible point produced a finite value".into(),
        ));
    }
    let k_used = stage_values
        .iter()
        .position(|&v| v <= best_value + settings.tol_k)
        .unwrap_or(0);
    let chosen = &stages[k_used];
    let d0 = chosen.x.d_eval(spec, 0.0);
    let active = if chosen.b <= 1.0 + 1e-12 && d0 < 1.0 {
        ActiveConstraint::UnitLowerBound
    } else if chosen.b - d0 <= 1e-9 {
        ActiveConstraint::TailLowerBound
    } else {
        ActiveConstraint::Interior
    };
    let optimum = CsOptimum {
        x_star: chosen.x.clone(),
        b_star: chosen.b,
        value: chosen.value,
        k_used,
        stage_values,
        stationarity_residuals: stationarity_residuals(spec, &chosen.x, chosen.b),
        support_residual: support_residual(spec, &chosen.x, chosen.b),
        active_constraint: active,
    };
    check_residuals(optimum, settings)
}
