//! Gauss–Hermite quadrature for Gaussian expectations.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Default node count. Exact for polynomials up to degree 127.
pub const DEFAULT_NODES: usize = 64;

/// Newton iteration from the asymptotic root guesses stops converging
/// reliably past this size.
pub const MAX_NODES: usize = 150;

/// Nodes and weights for `∫ e^{-x²} g(x) dx ≈ Σ wᵢ g(xᵢ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussHermite {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussHermite {
    /// Builds the rule by Newton iteration on the orthonormal Hermite
    /// recurrence, starting from the usual asymptotic root estimates.
    pub fn new(count: usize) -> Result<Self> {
        if count == 0 || count > MAX_NODES {
            return Err(Error::InvalidParameter {
                name: "quadrature_nodes".into(),
                reason: format!("must be in 1..={MAX_NODES}, got {count}"),
            });
        }
        let n = count;
        let nf = n as f64;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let pim4 = PI.powf(-0.25);
        let half = n.div_ceil(2);
        let mut z = 0.0f64;
        for i in 0..half {
            z = match i {
                0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
                1 => z - 1.14 * nf.powf(0.426) / z,
                2 => 1.86 * z - 0.86 * nodes[0],
                3 => 1.91 * z - 0.91 * nodes[1],
                _ => 2.0 * z - nodes[i - 2],
            };
            let mut pp = 0.0;
            for _ in 0..100 {
                let (p, dp) = orthonormal_hermite(n, z, pim4);
                pp = dp;
                let dz = p / dp;
                z -= dz;
                if dz.abs() <= 1e-15 * z.abs().max(1.0) {
                    let (_, dp) = orthonormal_hermite(n, z, pim4);
                    pp = dp;
                    break;
                }
            }
            nodes[i] = z;
            nodes[n - 1 - i] = -z;
            weights[i] = 2.0 / (pp * pp);
            weights[n - 1 - i] = weights[i];
        }
        if n % 2 == 1 {
            // The middle root of an odd-degree rule is exactly zero.
            let mid = n / 2;
            nodes[mid] = 0.0;
            let (_, dp) = orthonormal_hermite(n, 0.0, pim4);
            weights[mid] = 2.0 / (dp * dp);
        }
        Ok(Self { nodes, weights })
    }

    /// Shared default-size rule.
    pub fn default_rule() -> &'static GaussHermite {
        static RULE: OnceLock<GaussHermite> = OnceLock::new();
        RULE.get_or_init(|| GaussHermite::new(DEFAULT_NODES).expect("default node count is valid"))
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `E[g(Z)]` for `Z ~ N(mean, variance)`.
    pub fn expectation<F: FnMut(f64) -> f64>(&self, mean: f64, variance: f64, mut g: F) -> f64 {
        let scale = (2.0 * variance).sqrt();
        let sum: f64 = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * g(mean + scale * x))
            .sum();
        sum / PI.sqrt()
    }
}

/// Orthonormal Hermite polynomial of degree `n` and its derivative at `z`.
fn orthonormal_hermite(n: usize, z: f64, pim4: f64) -> (f64, f64) {
    let mut p1 = pim4;
    let mut p2 = 0.0;
    for j in 1..=n {
        let p3 = p2;
        p2 = p1;
        let jf = j as f64;
        p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
    }
    (p1, (2.0 * n as f64).sqrt() * p2)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn double_factorial(k: u32) -> f64 {
        (1..=k).rev().step_by(2).map(f64::from).product()
    }

    #[test]
    fn weights_sum_to_sqrt_pi() {
        for count in [1, 2, 5, 16, 64, 65, 128, MAX_NODES] {
            let rule = GaussHermite::new(count).unwrap();
            let total: f64 = rule.weights().iter().sum();
            assert!((total - PI.sqrt()).abs() < 1e-13, "count={count} total={total}");
        }
    }

    #[test]
    fn gaussian_moments_are_exact() {
        let rule = GaussHermite::default_rule();
        for &v in &[0.1, 0.5, 1.0, 4.0] {
            for p in 0..=20u32 {
                let got = rule.expectation(0.0, v, |z| z.powi(p as i32));
                let exact = if p % 2 == 1 {
                    0.0
                } else {
                    double_factorial(p.saturating_sub(1)) * v.powi(p as i32 / 2)
                };
                let scale = double_factorial(p) * v.powf(p as f64 / 2.0);
                assert!((got - exact).abs() <= 1e-12 * scale, "v={v} p={p}: {got} vs {exact}");
            }
        }
    }

    #[test]
    fn nodes_are_symmetric_and_sorted() {
        let rule = GaussHermite::new(64).unwrap();
        let n = rule.len();
        for i in 0..n {
            assert_eq!(rule.nodes()[i], -rule.nodes()[n - 1 - i]);
        }
        assert!(rule.nodes().windows(2).all(|w| w[0] > w[1]));
    }

    #[test]
    fn rejects_bad_counts() {
        assert!(GaussHermite::new(0).is_err());
        assert!(GaussHermite::new(10_000).is_err());
    }
}
