//! Pairing integrals `∫ f(z) H_k(z - x, v) φ(z - x, v) dz`.
//!
//! Integration by parts turns the pairing into a Gaussian expectation of a
//! derivative,
//!
//! ```text
//! ∫ f(z) H_k(z - x, v) φ(z - x, v) dz = E[f^(k)(x + Z)],   Z ~ N(0, v),
//! ```
//!
//! which is evaluated in closed form for the trigonometric test functions and
//! by Gauss–Hermite quadrature otherwise.

use std::borrow::Cow;

use super::{ExpansionCoefficients, GaussHermite, HermiteOrder, TestFunction, Variance};
use crate::error::{ensure_finite, Error, Result};

/// Diagnostic flags attached to a pairing value.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PairFlags {
    /// `f` is a monomial, outside the bounded-smooth class.
    pub diagnostic_only: bool,
    /// `f^(k)` vanishes identically (monomial with `j < k`).
    pub derivative_vanishes: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairIntegral {
    pub value: f64,
    pub flags: PairFlags,
}

/// Pairing evaluator with a configurable quadrature rule.
#[derive(Debug, Clone)]
pub struct PairingEngine {
    rule: Cow<'static, GaussHermite>,
}

impl Default for PairingEngine {
    fn default() -> Self {
        Self {
            rule: Cow::Borrowed(GaussHermite::default_rule()),
        }
    }
}

impl PairingEngine {
    pub fn with_nodes(count: usize) -> Result<Self> {
        if count == super::DEFAULT_NODES {
            return Ok(Self::default());
        }
        Ok(Self {
            rule: Cow::Owned(GaussHermite::new(count)?),
        })
    }

    pub fn rule(&self) -> &GaussHermite {
        &self.rule
    }

    /// `∫ f(z) H_k(z, v) φ(z, v) dz`.
    pub fn pair(&self, f: &TestFunction, k: HermiteOrder, v: Variance) -> Result<PairIntegral> {
        self.pair_shifted(f, k, v, 0.0)
    }

    /// `∫ f(z) H_k(z - x, v) φ(z - x, v) dz`.
    pub fn pair_shifted(
        &self,
        f: &TestFunction,
        k: HermiteOrder,
        v: Variance,
        x: f64,
    ) -> Result<PairIntegral> {
        ensure_finite(x, "x")?;
        let k = k.get();
        if k > f.max_registered_derivative() {
            return Err(Error::UnregisteredDerivative {
                function: f.to_string(),
                order: k,
            });
        }
        let mut flags = PairFlags {
            diagnostic_only: f.is_diagnostic_only(),
            derivative_vanishes: false,
        };
        if let TestFunction::Monomial { j } = *f {
            if (j as usize) < k {
                flags.derivative_vanishes = true;
                return Ok(PairIntegral { value: 0.0, flags });
            }
        }
        Ok(PairIntegral {
            value: self.gaussian_derivative_expectation(f, k, v.get(), x),
            flags,
        })
    }

    /// `E[f^(k)(x + Z)]` without validation; `k` must be registered for `f`.
    #[inline]
    pub(crate) fn gaussian_derivative_expectation(
        &self,
        f: &TestFunction,
        k: usize,
        v: f64,
        x: f64,
    ) -> f64 {
        match f.characteristic_expectation(k, x, v) {
            Some(value) => value,
            None => self.rule.expectation(x, v, |z| f.derivative_unchecked(k, z)),
        }
    }

    /// `∫ f(z) E[Q_n(z)] dz` contribution of one coefficient sample:
    /// `E f^(0) + n^{-1/2} (A₁ E f' + A₃ E f''' + A₅ E f^(5))` under `N(0, V₀)`.
    pub fn expansion_value(
        &self,
        f: &TestFunction,
        coeffs: &ExpansionCoefficients,
        n: u64,
    ) -> Result<f64> {
        let v = Variance::new(coeffs.v0)?;
        for (value, what) in [(coeffs.a1, "a1"), (coeffs.a3, "a3"), (coeffs.a5, "a5")] {
            ensure_finite(value, what)?;
        }
        if n == 0 {
            return Err(Error::InvalidParameter {
                name: "n".into(),
                reason: "must be at least 1".into(),
            });
        }
        if 5 > f.max_registered_derivative() {
            return Err(Error::UnregisteredDerivative {
                function: f.to_string(),
                order: 5,
            });
        }
        Ok(self.expansion_value_unchecked(f, coeffs, n, v.get()))
    }

    #[inline]
    pub(crate) fn expansion_value_unchecked(
        &self,
        f: &TestFunction,
        coeffs: &ExpansionCoefficients,
        n: u64,
        v: f64,
    ) -> f64 {
        let pair = |k: usize| self.gaussian_derivative_expectation(f, k, v, 0.0);
        let base = pair(0);
        let mut correction = 0.0;
        for (k, a) in [(1, coeffs.a1), (3, coeffs.a3), (5, coeffs.a5)] {
            if a != 0.0 {
                correction += a * pair(k);
            }
        }
        base + correction / (n as f64).sqrt()
    }

    /// Pure mixed-normal value `E_{N(0,V₀)}[f]`.
    pub fn zeroth_order_value(&self, f: &TestFunction, v0: Variance) -> f64 {
        self.gaussian_derivative_expectation(f, 0, v0.get(), 0.0)
    }
}

/// [`PairingEngine::pair`] with the default 64-node rule.
pub fn pair_integral(f: &TestFunction, k: HermiteOrder, v: Variance) -> Result<PairIntegral> {
    PairingEngine::default().pair(f, k, v)
}

/// [`PairingEngine::pair_shifted`] with the default rule.
pub fn pair_integral_shifted(
    f: &TestFunction,
    k: HermiteOrder,
    v: Variance,
    x: f64,
) -> Result<PairIntegral> {
    PairingEngine::default().pair_shifted(f, k, v, x)
}

/// [`PairingEngine::expansion_value`] with the default rule.
pub fn expansion_value(f: &TestFunction, coeffs: &ExpansionCoefficients, n: u64) -> Result<f64> {
    PairingEngine::default().expansion_value(f, coeffs, n)
}

/// [`PairingEngine::zeroth_order_value`] with the default rule.
pub fn zeroth_order_value(f: &TestFunction, v0: Variance) -> f64 {
    PairingEngine::default().zeroth_order_value(f, v0)
}
