//! Variance-parameterized Gaussian kernel, Hermite polynomials and the
//! first-order expansion density.
//!
//! All functions here use the variance (not the standard deviation) as the
//! scale parameter:
//!
//! ```text
//! φ(z, v)    = (2πv)^{-1/2} exp(-z² / 2v)
//! H_k(z, v)  = (-1)^k φ(z, v)^{-1} ∂^k/∂z^k φ(z, v)
//! Q_n(z)     = {1 + n^{-1/2} (A₁H₁ + A₃H₃ + A₅H₅)(z, V₀)} φ(z, V₀)
//! ```
//!
//! `Q_n` is a signed expansion, not a density: it can dip below zero in the
//! tails and is never clamped, since clamping would break `∫ Q_n = 1` and the
//! moment identities the estimator relies on.

mod pairing;
mod quadrature;
mod test_function;

/// Deliberate corruption of the Hermite recurrence, used to prove that the
/// self-test catches it. Never enabled in normal operation.
#[doc(hidden)]
pub mod fault {
    use std::sync::atomic::{AtomicBool, Ordering};

    static CORRUPT_RECURRENCE: AtomicBool = AtomicBool::new(false);

    pub fn set_corrupt_recurrence(on: bool) {
        CORRUPT_RECURRENCE.store(on, Ordering::Relaxed);
    }

    #[inline]
    pub(super) fn recurrence_skew() -> f64 {
        if CORRUPT_RECURRENCE.load(Ordering::Relaxed) {
            0.5
        } else {
            0.0
        }
    }
}

pub use pairing::{
    expansion_value, pair_integral, pair_integral_shifted, zeroth_order_value, PairFlags,
    PairIntegral, PairingEngine,
};
pub use quadrature::{GaussHermite, DEFAULT_NODES, MAX_NODES};
pub use test_function::{TestFunction, MAX_REGISTERED_DERIVATIVE};

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

/// Highest Hermite order accepted by [`hermite_h`].
pub const MAX_HERMITE_ORDER: usize = 8;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Strictly positive, finite variance.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
pub struct Variance(f64);

impl Variance {
    pub fn new(v: f64) -> Result<Self> {
        if !v.is_finite() {
            return Err(Error::NonFinite("variance"));
        }
        if v <= 0.0 {
            return Err(Error::NonPositiveVariance(v));
        }
        Ok(Self(v))
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Variance {
    type Error = Error;

    fn try_from(v: f64) -> Result<Self> {
        Self::new(v)
    }
}

/// Hermite order `k ≤ MAX_HERMITE_ORDER`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct HermiteOrder(usize);

impl HermiteOrder {
    pub fn new(k: usize) -> Result<Self> {
        if k > MAX_HERMITE_ORDER {
            return Err(Error::UnsupportedOrder(k));
        }
        Ok(Self(k))
    }

    #[inline]
    pub fn get(self) -> usize {
        self.0
    }
}

/// The random limit variance and the three first-order coefficients of one
/// expansion sample.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ExpansionCoefficients {
    pub v0: f64,
    pub a1: f64,
    pub a3: f64,
    pub a5: f64,
}

impl ExpansionCoefficients {
    /// Pure mixed-normal coefficients (all corrections switched off).
    pub fn zeroth_order(v0: f64) -> Self {
        Self {
            v0,
            ..Self::default()
        }
    }
}

/// Gaussian density with variance `v` at `z`.
pub fn gaussian_pdf(z: f64, v: Variance) -> Result<f64> {
    ensure_finite(z, "z")?;
    Ok(gaussian_pdf_unchecked(z, v.get()))
}

/// [`gaussian_pdf`] without validation; `v` must be positive.
#[inline]
pub fn gaussian_pdf_unchecked(z: f64, v: f64) -> f64 {
    INV_SQRT_2PI / v.sqrt() * (-0.5 * z * z / v).exp()
}

/// `H_k(z, v)` by the three-term recurrence in `(z/v, 1/v)`.
pub fn hermite_h(k: HermiteOrder, z: f64, v: Variance) -> Result<f64> {
    ensure_finite(z, "z")?;
    Ok(hermite_unchecked(k.get(), z, v.get()))
}

/// [`hermite_h`] without validation; `v` must be positive.
#[inline]
pub fn hermite_unchecked(k: usize, z: f64, v: f64) -> f64 {
    let inv_v = 1.0 / v;
    let x = z * inv_v;
    let mut prev = 1.0;
    if k == 0 {
        return prev;
    }
    let skew = fault::recurrence_skew();
    let mut cur = x;
    for j in 1..k {
        let next = x * cur - (j as f64 + skew) * inv_v * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// All `H_0..=H_k` at once; `out.len()` must be at least `k + 1`.
pub(crate) fn hermite_all(z: f64, v: f64, out: &mut [f64]) {
    let inv_v = 1.0 / v;
    let x = z * inv_v;
    out[0] = 1.0;
    if out.len() > 1 {
        out[1] = x;
    }
    let skew = fault::recurrence_skew();
    for j in 1..out.len().saturating_sub(1) {
        out[j + 1] = x * out[j] - (j as f64 + skew) * inv_v * out[j - 1];
    }
}

/// The first-order expansion density `Q_n(z)` for one set of coefficients.
pub fn qn_density(z: f64, coeffs: &ExpansionCoefficients, n: u64) -> Result<f64> {
    ensure_finite(z, "z")?;
    let v0 = Variance::new(coeffs.v0)?;
    for (value, what) in [(coeffs.a1, "a1"), (coeffs.a3, "a3"), (coeffs.a5, "a5")] {
        ensure_finite(value, what)?;
    }
    if n == 0 {
        return Err(Error::InvalidParameter {
            name: "n".into(),
            reason: "must be at least 1".into(),
        });
    }
    let v = v0.get();
    let mut h = [0.0; 6];
    hermite_all(z, v, &mut h);
    let correction = coeffs.a1 * h[1] + coeffs.a3 * h[3] + coeffs.a5 * h[5];
    Ok((1.0 + correction / (n as f64).sqrt()) * gaussian_pdf_unchecked(z, v))
}
