//! Step-function order parameters.
//!
//! A `StepOrderParameter` is a nondecreasing distribution function on
//! `[0, 1]` that is constant between breakpoints: `x(q) = m_l` on
//! `[q_l, q_{l+1})` with `q_{k+1} = 1` implicit and `x(1) = 1`. The tail
//! integral `d(q)`, the weighted integral of `q xi''(q) x(q)`, and the
//! logarithmic integrals with shifted denominators all have exact
//! piecewise closed forms, which is the point of keeping the
//! representation discrete.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::mixture::MixtureSpec;

pub const SUPPORT_TOL: f64 = 1e-12;

/// Which envelope sits in the denominator of a logarithmic integral:
/// the tail integral `d` itself, or the shrunk envelope
/// `d(u) + (1-t)/(1+t) * (d(q) - d(u))` of the coupled functional.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Envelope {
    Tail,
    Shrunk { t: f64, u_abs: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepOrderParameter {
    /// Breakpoint locations, `qs[0] == 0`, nondecreasing.
    qs: Vec<f64>,
    /// Piece values, same length as `qs`, nondecreasing, within `[0, 1]`.
    ms: Vec<f64>,
}

impl StepOrderParameter {
    /// Build from `(q_l, m_l)` pairs; the first breakpoint must sit at 0.
    pub fn new(breakpoints: &[(f64, f64)]) -> Result<Self> {
        if breakpoints.is_empty() {
            return Err(Error::InvalidArgument(
                "order parameter needs at least one piece".into(),
            ));
        }
        if breakpoints[0].0 != 0.0 {
            return Err(Error::InvalidArgument(format!(
                "first breakpoint must be at q = 0, got {}",
                breakpoints[0].0
            )));
        }
        let mut qs = Vec::with_capacity(breakpoints.len());
        let mut ms = Vec::with_capacity(breakpoints.len());
        for &(q, m) in breakpoints {
            if !(0.0..=1.0).contains(&q) || !(0.0..=1.0).contains(&m) {
                return Err(Error::InvalidArgument(format!(
                    "breakpoint ({q}, {m}) outside the unit square"
                )));
            }
            if let Some(&prev_q) = qs.last() {
                if q < prev_q {
                    return Err(Error::InvalidArgument("breakpoints must be ordered in q".into()));
                }
            }
            if let Some(&prev_m) = ms.last() {
                if m < prev_m {
                    return Err(Error::InvalidArgument("piece values must be nondecreasing".into()));
                }
            }
            qs.push(q);
            ms.push(m);
        }
        Ok(StepOrderParameter { qs, ms })
    }

    /// `x == 1` everywhere: all overlap weight at the origin.
    pub fn constant_one() -> Self {
        StepOrderParameter { qs: vec![0.0], ms: vec![1.0] }
    }

    /// `x = 0` below `q`, `1` from `q` on.
    pub fn step_at(q: f64) -> Result<Self> {
        if q == 0.0 {
            Ok(Self::constant_one())
        } else {
            Self::new(&[(0.0, 0.0), (q, 1.0)])
        }
    }

    pub fn breakpoints(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.qs.iter().copied().zip(self.ms.iter().copied())
    }

    /// Number of pieces.
    pub fn len(&self) -> usize {
        self.qs.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `x(q)`; `x(1) = 1` by convention.
    pub fn eval(&self, q: f64) -> f64 {
        if q >= 1.0 {
            return 1.0;
        }
        let mut value = self.ms[0];
        for (qi, mi) in self.breakpoints() {
            if qi <= q {
                value = mi;
            } else {
                break;
            }
        }
        value
    }

    /// Upper end of piece `l` (`1` for the last piece).
    fn upper(&self, l: usize) -> f64 {
        if l + 1 < self.qs.len() {
            self.qs[l + 1]
        } else {
            1.0
        }
    }

    /// Tail integral `d(q)`; exact piecewise form, no quadrature.
    pub fn d_eval(&self, spec: &MixtureSpec, q: f64) -> f64 {
        let mut acc = 0.0;
        for l in 0..self.len() {
            let hi = self.upper(l);
            if hi <= q {
                continue;
            }
            let lo = self.qs[l].max(q);
            if hi > lo {
                acc += self.ms[l] * (spec.xi_raw(hi, 1) - spec.xi_raw(lo, 1));
            }
        }
        acc
    }

    /// `integral of q xi''(q) x(q) dq` over `[0, 1]`, exact via the
    /// telescoping of `theta(q) = q xi'(q) - xi(q)`.
    pub fn weighted_integral(&self, spec: &MixtureSpec) -> f64 {
        let mut acc = 0.0;
        for l in 0..self.len() {
            let hi = self.upper(l);
            let lo = self.qs[l];
            acc += self.ms[l] * (spec.theta_raw(hi) - spec.theta_raw(lo));
        }
        acc
    }

    /// Exact value of `integral_{lo}^{hi} xi''(s) / (b - shift - env(s)) ds`.
    ///
    /// Within a piece the envelope is affine in `xi'(s)`, so each piece
    /// contributes either a logarithm (nonzero slope) or a rational term
    /// (piece weight exactly zero, or `t = 1` shrinking the envelope to a
    /// constant). Errors if the denominator is not strictly positive
    /// everywhere on `[lo, hi]`.
    pub fn log_integral(
        &self,
        spec: &MixtureSpec,
        b: f64,
        shift: f64,
        lo: f64,
        hi: f64,
        envelope: Envelope,
    ) -> Result<f64> {
        if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || hi < lo {
            return Err(Error::InvalidArgument(format!(
                "integration range [{lo}, {hi}] invalid"
            )));
        }
        if hi == lo {
            return Ok(0.0);
        }
        // env(s) = alpha + gamma * d(s).
        let (alpha, gamma) = match envelope {
            Envelope::Tail => (0.0, 1.0),
            Envelope::Shrunk { t, u_abs } => {
                let g = (1.0 - t) / (1.0 + t);
                (self.d_eval(spec, u_abs) * (1.0 - g), g)
            }
        };
        let mut acc = 0.0;
        for l in 0..self.len() {
            let piece_hi = self.upper(l);
            let piece_lo = self.qs[l];
            let a = piece_lo.max(lo);
            let c = piece_hi.min(hi);
            if c <= a {
                continue;
            }
            let m = self.ms[l];
            let d_hi = self.d_eval(spec, piece_hi);
            // d(s) = d_hi + m (xi'(piece_hi) - xi'(s)) on this piece.
            let denom_at = |s: f64| {
                let d_s = d_hi + m * (spec.xi_raw(piece_hi, 1) - spec.xi_raw(s, 1));
                b - shift - alpha - gamma * d_s
            };
            // d is nonincreasing, so the denominator is smallest at the
            // lower end of the subpiece.
            let d_a = denom_at(a);
            if d_a <= 0.0 {
                return Err(Error::DenominatorAt {
                    what: format!("b - shift - envelope (b = {b}, shift = {shift})"),
                    s: a,
                });
            }
            let slope = gamma * m;
            let span = spec.xi_raw(c, 1) - spec.xi_raw(a, 1);
            if slope == 0.0 {
                acc += span / d_a;
            } else {
                // D(c) = D(a) + slope * span, so the piece integrates to
                // ln_1p(slope * span / D(a)) / slope; stable for any slope.
                acc += (slope * span / d_a).ln_1p() / slope;
            }
        }
        Ok(acc)
    }

    /// Smallest `q` where `x(q) > tol`; `1` when the whole mass sits at the
    /// top (the distribution-function convention `x(1) = 1` always holds).
    pub fn support_min(&self, tol: f64) -> f64 {
        for (q, m) in self.breakpoints() {
            if m > tol {
                return q;
            }
        }
        1.0
    }

    /// `support_min` with the default tolerance, chosen so that stray
    /// optimizer weights of roundoff size do not move the support.
    pub fn support_min_default(&self) -> f64 {
        self.support_min(SUPPORT_TOL)
    }

    /// An equivalent step function whose breakpoint list contains `q`.
    /// Idempotent; every evaluation is unchanged.
    pub fn insert_breakpoint(&self, q: f64) -> Self {
        assert!((0.0..=1.0).contains(&q), "breakpoint outside [0, 1]");
        if q >= 1.0 || self.qs.contains(&q) {
            return self.clone();
        }
        let mut qs = Vec::with_capacity(self.len() + 1);
        let mut ms = Vec::with_capacity(self.len() + 1);
        let value = self.eval(q);
        let mut inserted = false;
        for (qi, mi) in self.breakpoints() {
            if !inserted && qi > q {
                qs.push(q);
                ms.push(value);
                inserted = true;
            }
            qs.push(qi);
            ms.push(mi);
        }
        if !inserted {
            qs.push(q);
            ms.push(value);
        }
        StepOrderParameter { qs, ms }
    }

    /// Canonical form: zero-width pieces are merged keeping the larger
    /// value, and consecutive pieces with equal value collapse into one.
    pub fn canonical(&self) -> Self {
        let mut qs: Vec<f64> = Vec::new();
        let mut ms: Vec<f64> = Vec::new();
        for (q, m) in self.breakpoints() {
            if let (Some(&last_q), Some(last_m)) = (qs.last(), ms.last_mut()) {
                if last_q == q {
                    if m > *last_m {
                        *last_m = m;
                    }
                    continue;
                }
                if m == *last_m {
                    continue;
                }
            }
            qs.push(q);
            ms.push(m);
        }
        StepOrderParameter { qs, ms }
    }
}
