//! Gauss–Hermite quadrature rules for expectations against Gaussian laws.
//!
//! Nodes/weights are in the physicists' convention (weight `exp(-x^2)`),
//! computed by Newton iteration on the orthonormal Hermite recurrence,
//! so a rule of degree `n` integrates polynomials up to degree `2n-1`
//! exactly.

use std::f64::consts::PI;

/// A fixed-degree Gauss–Hermite rule.
#[derive(Debug, Clone)]
pub struct GaussHermite {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussHermite {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        let nf = n as f64;
        let mut z = 0.0_f64;
        let mut z_prev = [0.0_f64; 2];
        for i in 0..m {
            // Initial guesses for the roots in decreasing order.
            z = match i {
                0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
                1 => z - 1.14 * nf.powf(0.426) / z,
                2 => 1.86 * z - 0.86 * z_prev[1],
                3 => 1.91 * z - 0.91 * z_prev[1],
                _ => 2.0 * z - z_prev[1],
            };
            let mut pp = 0.0;
            for _ in 0..100 {
                // Orthonormal Hermite recurrence.
                let mut p1 = PI.powf(-0.25);
                let mut p2 = 0.0;
                for j in 0..n {
                    let p3 = p2;
                    p2 = p1;
                    let jf = j as f64;
                    p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
                }
                pp = (2.0 * nf).sqrt() * p2;
                let dz = p1 / pp;
                z -= dz;
                if dz.abs() < 1e-15 {
                    break;
                }
            }
            z_prev[1] = z_prev[0];
            z_prev[0] = z;
            nodes[i] = z;
            nodes[n - 1 - i] = -z;
            let w = 2.0 / (pp * pp);
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        // The middle node of an odd rule is exactly zero.
        if n % 2 == 1 {
            nodes[m - 1] = 0.0;
        }
        GaussHermite { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integrate `exp(-x^2) * f(x)` over the real line.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    /// `E f(Z)` for a standard Gaussian `Z`.
    pub fn expect_normal<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        let s = 2.0_f64.sqrt();
        self.integrate(|x| f(s * x)) / PI.sqrt()
    }

    /// Nodes and probability weights of the rule mapped onto a standard
    /// Gaussian: `sum w_i g(z_i)` approximates `E g(Z)`, with `sum w_i = 1`
    /// up to roundoff.
    pub fn normal_points(&self) -> Vec<(f64, f64)> {
        let s = 2.0_f64.sqrt();
        let norm = PI.sqrt();
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| (s * x, w / norm))
            .collect()
    }
}
