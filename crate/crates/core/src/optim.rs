//! Derivative-free minimizers: golden-section search in one dimension and
//! a Nelder–Mead simplex for the low-dimensional transformed problems the
//! functional minimization produces.

/// Inverse golden ratio squared / inverse golden ratio.
const INV_PHI: f64 = 0.618_033_988_749_894_9;

#[derive(Debug, Clone, Copy)]
pub struct GoldenResult {
    pub x: f64,
    pub value: f64,
    pub evals: usize,
}

/// Minimize a one-dimensional function on `[lo, hi]` to x-resolution `xtol`.
///
/// The bracket endpoints are evaluated too, so boundary minima are returned
/// exactly rather than `xtol` away from the edge.
pub fn golden_min<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, xtol: f64, max_iter: usize) -> GoldenResult {
    assert!(hi >= lo, "bracket must be ordered");
    if hi == lo {
        return GoldenResult { x: lo, value: f(lo), evals: 1 };
    }
    let mut a = lo;
    let mut b = hi;
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut evals = 2;
    let mut iter = 0;
    while (b - a).abs() > xtol && iter < max_iter {
        iter += 1;
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
        evals += 1;
    }
    let xm = 0.5 * (a + b);
    let fm = f(xm);
    evals += 1;
    let f_lo = f(lo);
    let f_hi = f(hi);
    evals += 2;
    // Pick the best of the interior estimate and the exact endpoints.
    let mut best = GoldenResult { x: xm, value: fm, evals };
    if f1 < best.value {
        best.x = x1;
        best.value = f1;
    }
    if f2 < best.value {
        best.x = x2;
        best.value = f2;
    }
    if f_lo <= best.value {
        best.x = lo;
        best.value = f_lo;
    }
    if f_hi < best.value {
        best.x = hi;
        best.value = f_hi;
    }
    best.evals = evals;
    best
}

#[derive(Debug, Clone)]
pub struct SimplexOptions {
    pub max_iter: usize,
    pub ftol: f64,
    pub xtol: f64,
    pub init_step: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions { max_iter: 4000, ftol: 1e-13, xtol: 1e-10, init_step: 0.6 }
    }
}

#[derive(Debug, Clone)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iters: usize,
    pub converged: bool,
}

/// Classic Nelder–Mead with reflection 1, expansion 2, contraction 1/2,
/// shrink 1/2. Non-finite objective values are treated as +inf.
pub fn nelder_mead<F: Fn(&[f64]) -> f64>(f: F, start: &[f64], opts: &SimplexOptions) -> SimplexResult {
    let dim = start.len();
    assert!(dim >= 1, "need at least one coordinate");
    let guard = |v: f64| if v.is_finite() { v } else { f64::INFINITY };
    let eval = |x: &[f64]| guard(f(x));

    let mut pts: Vec<Vec<f64>> = Vec::with_capacity(dim + 1);
    pts.push(start.to_vec());
    for i in 0..dim {
        let mut p = start.to_vec();
        p[i] += opts.init_step;
        pts.push(p);
    }
    let mut vals: Vec<f64> = pts.iter().map(|p| eval(p)).collect();

    let mut iters = 0;
    let mut converged = false;
    while iters < opts.max_iter {
        iters += 1;
        let mut order: Vec<usize> = (0..=dim).collect();
        order.sort_by(|&i, &j| vals[i].partial_cmp(&vals[j]).unwrap());
        let best = order[0];
        let worst = order[dim];
        let second_worst = order[dim - 1];

        let spread = vals[worst] - vals[best];
        let diam = (0..=dim)
            .map(|i| {
                pts[i]
                    .iter()
                    .zip(&pts[best])
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if spread <= opts.ftol.max(opts.ftol * vals[best].abs()) && diam <= opts.xtol {
            converged = true;
            break;
        }

        // Centroid excluding the worst vertex.
        let mut centroid = vec![0.0; dim];
        for (i, p) in pts.iter().enumerate() {
            if i == worst {
                continue;
            }
            for (c, &x) in centroid.iter_mut().zip(p) {
                *c += x;
            }
        }
        for c in centroid.iter_mut() {
            *c /= dim as f64;
        }

        let lerp = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&pts[worst])
                .map(|(&c, &w)| c + t * (c - w))
                .collect()
        };

        let refl = lerp(1.0);
        let f_refl = eval(&refl);
        if f_refl < vals[best] {
            let exp = lerp(2.0);
            let f_exp = eval(&exp);
            if f_exp < f_refl {
                pts[worst] = exp;
                vals[worst] = f_exp;
            } else {
                pts[worst] = refl;
                vals[worst] = f_refl;
            }
        } else if f_refl < vals[second_worst] {
            pts[worst] = refl;
            vals[worst] = f_refl;
        } else {
            let contr = if f_refl < vals[worst] { lerp(0.5) } else { lerp(-0.5) };
            let f_contr = eval(&contr);
            if f_contr < vals[worst].min(f_refl) {
                pts[worst] = contr;
                vals[worst] = f_contr;
            } else {
                // Shrink everything toward the best vertex.
                let anchor = pts[best].clone();
                for (i, p) in pts.iter_mut().enumerate() {
                    if i == best {
                        continue;
                    }
                    for (x, &a) in p.iter_mut().zip(&anchor) {
                        *x = a + 0.5 * (*x - a);
                    }
                    vals[i] = eval(p);
                }
            }
        }
    }

    let mut best_idx = 0;
    for i in 1..=dim {
        if vals[i] < vals[best_idx] {
            best_idx = i;
        }
    }
    SimplexResult {
        x: pts[best_idx].clone(),
        value: vals[best_idx],
        iters,
        converged,
    }
}

/// Cyclic one-dimensional golden refinement around a point; cheap polish
/// after the simplex has converged.
pub fn cyclic_polish<F: Fn(&[f64]) -> f64>(
    f: F,
    x: &mut [f64],
    mut span: f64,
    rounds: usize,
    xtol: f64,
) -> f64 {
    let guard = |v: f64| if v.is_finite() { v } else { f64::INFINITY };
    let mut best = guard(f(x));
    for _ in 0..rounds {
        for i in 0..x.len() {
            let xi = x[i];
            let g = |v: f64| {
                let mut probe = x.to_vec();
                probe[i] = v;
                guard(f(&probe))
            };
            let res = golden_min(g, xi - span, xi + span, xtol, 200);
            if res.value < best {
                best = res.value;
                x[i] = res.x;
            }
        }
        span *= 0.25;
    }
    best
}
