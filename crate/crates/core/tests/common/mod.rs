//! Independent numerical oracles for the integration tests: adaptive
//! quadrature, brute-force grid minimization, and a plain expectation
//! helper. Nothing here touches the closed forms under test.

#![allow(dead_code)]

/// Adaptive Simpson quadrature with interval-halving error control.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        m: f64,
        fm: f64,
        tol: f64,
        depth: usize,
    ) -> f64 {
        let (left, lm, flm) = simpson(f, a, fa, m, fm);
        let (right, rm, frm) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, fa, m, fm, left, lm, flm, 0.5 * tol, depth - 1)
                + recurse(f, m, fm, b, fb, right, rm, frm, 0.5 * tol, depth - 1)
        }
    }
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let (whole, m, fm) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, whole, m, fm, tol, 48)
}

/// Adaptive Simpson split at the supplied knots, for integrands that are
/// smooth between breakpoints but jump or kink at them.
pub fn piecewise_simpson<F: Fn(f64) -> f64>(
    f: &F,
    knots: &[f64],
    a: f64,
    b: f64,
    tol: f64,
) -> f64 {
    let mut cuts: Vec<f64> = vec![a, b];
    cuts.extend(knots.iter().copied().filter(|&k| k > a && k < b));
    cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    cuts.dedup();
    let mut acc = 0.0;
    for w in cuts.windows(2) {
        // Nudge inside the open interval so jump points are never sampled
        // on the wrong side.
        let eps = 1e-12 * (w[1] - w[0]).max(1e-9);
        acc += adaptive_simpson(f, w[0] + eps, w[1] - eps, tol);
    }
    acc
}

/// Brute-force scalar minimization: coarse grid sweep followed by
/// repeated local refinement down to `xtol`.
pub fn grid_min<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64, xtol: f64) -> (f64, f64) {
    let mut lo = lo;
    let mut hi = hi;
    let mut best = (lo, f(lo));
    loop {
        let n = 400;
        for i in 0..=n {
            let x = lo + (hi - lo) * i as f64 / n as f64;
            let v = f(x);
            if v < best.1 {
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

/// Brute-force scalar maximization.
pub fn grid_max<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64, xtol: f64) -> (f64, f64) {
    let (x, v) = grid_min(&|x| -f(x), lo, hi, xtol);
    (x, -v)
}

/// `E f(Z)` for standard Gaussian `Z`, by quadrature over `[-10, 10]`
/// against the explicit density (independent of any Hermite machinery).
pub fn normal_expectation<F: Fn(f64) -> f64>(f: &F, tol: f64) -> f64 {
    let density = |z: f64| (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
    adaptive_simpson(&|z| f(z) * density(z), -10.0, 10.0, tol)
}
