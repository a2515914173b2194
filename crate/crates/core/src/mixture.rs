//! The even mixture function `xi(x) = sum_p beta_p^2 x^{2p}` together with
//! its derivatives, the conjugate `theta(q) = q xi'(q) - xi(q)`, and an
//! external field strength `h`. One `MixtureSpec` fixes a model.

use serde::Serialize;

use crate::error::{Error, Result};

/// One even monomial `beta_sq * x^{2p}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MixtureTerm {
    pub p: u32,
    pub beta_sq: f64,
}

/// An even mixture plus external field. Immutable once built; all
/// evaluations are pure.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MixtureSpec {
    terms: Vec<MixtureTerm>,
    h: f64,
}

/// Outcome of structural validation; an empty violation list means the
/// spec satisfies every invariant the evaluators rely on.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl MixtureSpec {
    /// Build from `(p, beta_sq)` pairs. Terms are stored sorted by degree.
    /// Construction never fails; call [`MixtureSpec::validate`] to check
    /// the structural invariants.
    pub fn new(terms: &[(u32, f64)], h: f64) -> Self {
        let mut terms: Vec<MixtureTerm> = terms
            .iter()
            .map(|&(p, beta_sq)| MixtureTerm { p, beta_sq })
            .collect();
        terms.sort_by_key(|t| t.p);
        MixtureSpec { terms, h }
    }

    /// Pure `x^{2p}` model.
    pub fn pure(p: u32, beta_sq: f64, h: f64) -> Self {
        Self::new(&[(p, beta_sq)], h)
    }

    /// `xi = 0`: no disorder, external field only.
    pub fn field_only(h: f64) -> Self {
        Self::new(&[], h)
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn terms(&self) -> &[MixtureTerm] {
        &self.terms
    }

    /// True when the mixture vanishes identically.
    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|t| t.beta_sq == 0.0)
    }

    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        for w in self.terms.windows(2) {
            if w[0].p == w[1].p {
                violations.push(format!("duplicate degree p = {}", w[0].p));
            }
        }
        for t in &self.terms {
            if t.p < 1 {
                violations.push("degree p must be at least 1".to_string());
            }
            if t.beta_sq.is_nan() || t.beta_sq < 0.0 {
                violations.push(format!("negative coefficient {} at p = {}", t.beta_sq, t.p));
            }
        }
        if !self.h.is_finite() {
            violations.push("field h is not finite".to_string());
        }
        // Convexity and third-derivative positivity are automatic for
        // nonnegative even-monomial coefficients; spot-check on a grid so
        // a future representation change cannot silently break them.
        if violations.is_empty() {
            for i in 0..=50 {
                let x = i as f64 / 50.0;
                if self.xi_raw(x, 2) < -1e-12 || self.xi_raw(x, 3) < -1e-12 {
                    violations.push(format!("curvature check failed at x = {x}"));
                    break;
                }
            }
        }
        ValidationReport { violations }
    }

    /// Ensure the invariants hold, otherwise return an error listing them.
    pub fn validated(&self) -> Result<&Self> {
        let report = self.validate();
        if report.is_valid() {
            Ok(self)
        } else {
            Err(Error::InvalidArgument(format!(
                "mixture violates invariants: {}",
                report.violations.join("; ")
            )))
        }
    }

    /// `xi`, `xi'`, `xi''` or `xi'''` at `x` by direct monomial summation.
    pub fn xi_eval(&self, x: f64, order: u8) -> Result<f64> {
        if order > 3 {
            return Err(Error::InvalidArgument(format!(
                "derivative order {order} not supported (0..=3)"
            )));
        }
        if !(-1.0..=1.0).contains(&x) {
            return Err(Error::InvalidArgument(format!("x = {x} outside [-1, 1]")));
        }
        Ok(self.xi_raw(x, order))
    }

    /// `xi(x)`.
    pub fn xi(&self, x: f64) -> f64 {
        self.xi_raw(x, 0)
    }

    /// `xi'(x)`; odd in `x`.
    pub fn xi_prime(&self, x: f64) -> f64 {
        self.xi_raw(x, 1)
    }

    /// `xi''(x)`.
    pub fn xi_second(&self, x: f64) -> f64 {
        self.xi_raw(x, 2)
    }

    pub(crate) fn xi_raw(&self, x: f64, order: u8) -> f64 {
        let mut acc = 0.0;
        for t in &self.terms {
            let deg = 2 * t.p as i64;
            let mut coeff = t.beta_sq;
            let mut d = deg;
            for _ in 0..order {
                coeff *= d as f64;
                d -= 1;
            }
            if coeff == 0.0 {
                continue;
            }
            debug_assert!(d >= 0);
            acc += coeff * x.powi(d as i32);
        }
        acc
    }

    /// `theta(q) = q xi'(q) - xi(q)`; zero at the origin and nondecreasing.
    pub fn theta(&self, q: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::InvalidArgument(format!("q = {q} outside [0, 1]")));
        }
        Ok(self.theta_raw(q))
    }

    pub(crate) fn theta_raw(&self, q: f64) -> f64 {
        q * self.xi_raw(q, 1) - self.xi_raw(q, 0)
    }

    /// Stable digest of the model parameters, used to tag result records.
    pub fn digest(&self) -> u64 {
        let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
        let mut feed = |bytes: &[u8]| {
            for &b in bytes {
                hash ^= b as u64;
                hash = hash.wrapping_mul(0x100_0000_01b3);
            }
        };
        for t in &self.terms {
            feed(&t.p.to_le_bytes());
            feed(&t.beta_sq.to_bits().to_le_bytes());
        }
        feed(&self.h.to_bits().to_le_bytes());
        hash
    }
}
