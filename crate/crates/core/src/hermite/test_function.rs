use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Highest derivative order carried in closed form by the bounded members.
pub const MAX_REGISTERED_DERIVATIVE: usize = 5;

/// Highest monomial degree accepted.
pub const MAX_MONOMIAL_DEGREE: u32 = 6;

/// Test functions `f` against which the law of the discretization error is
/// probed, each with analytic derivatives.
///
/// Every member except [`TestFunction::Monomial`] is bounded with bounded
/// derivatives. Monomials are kept for moment and cumulant diagnostics only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "id", rename_all = "snake_case")]
pub enum TestFunction {
    /// `cos(a (z - c))`
    CosShifted { a: f64, c: f64 },
    /// `sin(a z)`
    SinScaled { a: f64 },
    /// `exp(-z² / 2s²)`
    GaussBump { s: f64 },
    /// `1 / (1 + e^{-z})`
    Logistic,
    /// `z^j`
    Monomial { j: u32 },
}

impl TestFunction {
    /// Resolves a function from its registry id and named parameters.
    pub fn resolve(id: &str, params: &BTreeMap<String, f64>) -> Result<Self> {
        let get = |name: &str, default: Option<f64>| -> Result<f64> {
            match params.get(name).copied().or(default) {
                Some(v) if v.is_finite() => Ok(v),
                Some(_) => Err(Error::InvalidParameter {
                    name: name.into(),
                    reason: "must be finite".into(),
                }),
                None => Err(Error::InvalidParameter {
                    name: name.into(),
                    reason: format!("required by test function `{id}`"),
                }),
            }
        };
        let f = match id {
            "cos_shifted" => Self::CosShifted {
                a: get("a", Some(1.0))?,
                c: get("c", Some(0.0))?,
            },
            "sin_scaled" => Self::SinScaled { a: get("a", Some(1.0))? },
            "gauss_bump" => Self::GaussBump { s: get("s", Some(1.0))? },
            "logistic" => Self::Logistic,
            "monomial" => {
                let j = get("j", None)?;
                if j.fract() != 0.0 || j < 0.0 {
                    return Err(Error::InvalidParameter {
                        name: "j".into(),
                        reason: "must be a non-negative integer".into(),
                    });
                }
                Self::Monomial { j: j as u32 }
            }
            other => {
                return Err(Error::UnknownName {
                    kind: "test function",
                    name: other.into(),
                })
            }
        };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::CosShifted { a, c } if !(a.is_finite() && c.is_finite()) => {
                Err(Error::NonFinite("test function parameter"))
            }
            Self::SinScaled { a } if !a.is_finite() => Err(Error::NonFinite("test function parameter")),
            Self::GaussBump { s } if !(s.is_finite() && s > 0.0) => Err(Error::InvalidParameter {
                name: "s".into(),
                reason: "must be positive".into(),
            }),
            Self::Monomial { j } if j > MAX_MONOMIAL_DEGREE => Err(Error::InvalidParameter {
                name: "j".into(),
                reason: format!("monomial degree at most {MAX_MONOMIAL_DEGREE}"),
            }),
            _ => Ok(()),
        }
    }

    /// Monomials fall outside the bounded-smooth class and only serve
    /// moment checks.
    pub fn is_diagnostic_only(&self) -> bool {
        matches!(self, Self::Monomial { .. })
    }

    pub fn is_bounded(&self) -> bool {
        !self.is_diagnostic_only()
    }

    /// Whether `E[f^(k)(x + Z)]` is evaluated in closed form rather than by
    /// quadrature.
    pub fn has_closed_form_expectation(&self) -> bool {
        matches!(self, Self::CosShifted { .. } | Self::SinScaled { .. } | Self::Monomial { .. })
    }

    pub fn max_registered_derivative(&self) -> usize {
        match self {
            Self::Monomial { .. } => usize::MAX,
            _ => MAX_REGISTERED_DERIVATIVE,
        }
    }

    pub fn value(&self, z: f64) -> f64 {
        self.derivative_unchecked(0, z)
    }

    /// `f^(k)(z)`.
    pub fn derivative(&self, k: usize, z: f64) -> Result<f64> {
        if k > self.max_registered_derivative() {
            return Err(Error::UnregisteredDerivative {
                function: self.to_string(),
                order: k,
            });
        }
        Ok(self.derivative_unchecked(k, z))
    }

    pub(crate) fn derivative_unchecked(&self, k: usize, z: f64) -> f64 {
        match *self {
            Self::CosShifted { a, c } => a.powi(k as i32) * cos_derivative_phase(k, a * (z - c)),
            Self::SinScaled { a } => a.powi(k as i32) * sin_derivative_phase(k, a * z),
            Self::GaussBump { s } => {
                let v = s * s;
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                sign * super::hermite_unchecked(k, z, v) * (-0.5 * z * z / v).exp()
            }
            Self::Logistic => logistic_derivative(k, z),
            Self::Monomial { j } => {
                let j = j as usize;
                if k > j {
                    0.0
                } else {
                    let falling: f64 = ((j - k + 1)..=j).map(|i| i as f64).product();
                    falling * z.powi((j - k) as i32)
                }
            }
        }
    }

    /// Closed form of `E[f^(k)(x + Z)]`, `Z ~ N(0, v)`, for the trigonometric
    /// members and the monomials (exact Gaussian moments).
    pub(crate) fn characteristic_expectation(&self, k: usize, x: f64, v: f64) -> Option<f64> {
        match *self {
            Self::CosShifted { a, c } => Some(
                a.powi(k as i32) * (-0.5 * a * a * v).exp() * cos_derivative_phase(k, a * (x - c)),
            ),
            Self::SinScaled { a } => {
                Some(a.powi(k as i32) * (-0.5 * a * a * v).exp() * sin_derivative_phase(k, a * x))
            }
            Self::Monomial { j } => {
                let j = j as usize;
                if k > j {
                    return Some(0.0);
                }
                let falling: f64 = ((j - k + 1)..=j).map(|i| i as f64).product();
                let p = j - k;
                // Σ_{i even} C(p, i) x^{p-i} (i-1)!! v^{i/2}
                let mut total = 0.0;
                let mut binom = 1.0;
                let mut dfact = 1.0;
                for i in 0..=p {
                    if i > 0 {
                        binom = binom * (p - i + 1) as f64 / i as f64;
                    }
                    if i % 2 == 0 {
                        if i > 0 {
                            dfact *= (i - 1) as f64;
                        }
                        total += binom * x.powi((p - i) as i32) * dfact * v.powi(i as i32 / 2);
                    }
                }
                Some(falling * total)
            }
            _ => None,
        }
    }
}

impl fmt::Display for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::CosShifted { a, c } => write!(f, "cos_shifted(a={a};c={c})"),
            Self::SinScaled { a } => write!(f, "sin_scaled(a={a})"),
            Self::GaussBump { s } => write!(f, "gauss_bump(s={s})"),
            Self::Logistic => write!(f, "logistic"),
            Self::Monomial { j } => write!(f, "monomial(j={j})"),
        }
    }
}

/// `d^k/dθ^k cos θ`.
fn cos_derivative_phase(k: usize, theta: f64) -> f64 {
    match k % 4 {
        0 => theta.cos(),
        1 => -theta.sin(),
        2 => -theta.cos(),
        _ => theta.sin(),
    }
}

/// `d^k/dθ^k sin θ`.
fn sin_derivative_phase(k: usize, theta: f64) -> f64 {
    match k % 4 {
        0 => theta.sin(),
        1 => theta.cos(),
        2 => -theta.sin(),
        _ => -theta.cos(),
    }
}

/// Coefficients (ascending powers of σ) of the k-th derivative of the
/// logistic function written as a polynomial in σ, using σ' = σ - σ².
fn logistic_polynomials() -> &'static [[f64; 8]; MAX_REGISTERED_DERIVATIVE + 1] {
    use std::sync::OnceLock;
    static POLYS: OnceLock<[[f64; 8]; MAX_REGISTERED_DERIVATIVE + 1]> = OnceLock::new();
    POLYS.get_or_init(|| {
        let mut polys = [[0.0; 8]; MAX_REGISTERED_DERIVATIVE + 1];
        polys[0][1] = 1.0;
        for k in 1..=MAX_REGISTERED_DERIVATIVE {
            // d/dz P(σ) = P'(σ) (σ - σ²)
            let prev = polys[k - 1];
            let mut next = [0.0; 8];
            for (p, &coef) in prev.iter().enumerate().skip(1) {
                let d = coef * p as f64; // coefficient of σ^{p-1} in P'
                next[p] += d;
                if p + 1 < next.len() {
                    next[p + 1] -= d;
                }
            }
            polys[k] = next;
        }
        polys
    })
}

fn logistic_derivative(k: usize, z: f64) -> f64 {
    let sigma = if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    };
    let coeffs = &logistic_polynomials()[k.min(MAX_REGISTERED_DERIVATIVE)];
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * sigma + c)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_bounded() -> Vec<TestFunction> {
        vec![
            TestFunction::CosShifted { a: 1.3, c: 0.4 },
            TestFunction::SinScaled { a: 0.7 },
            TestFunction::GaussBump { s: 0.8 },
            TestFunction::Logistic,
        ]
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let h = 1e-4;
        for f in all_bounded().into_iter().chain([TestFunction::Monomial { j: 6 }]) {
            for k in 0..MAX_REGISTERED_DERIVATIVE {
                for &z in &[-2.3, -0.5, 0.0, 0.9, 3.1] {
                    let fd = (f.derivative(k, z + h).unwrap() - f.derivative(k, z - h).unwrap()) / (2.0 * h);
                    let exact = f.derivative(k + 1, z).unwrap();
                    assert!(
                        (fd - exact).abs() < 1e-5 * exact.abs().max(1.0),
                        "{f} k={} z={z}: fd={fd} exact={exact}",
                        k + 1
                    );
                }
            }
        }
    }

    #[test]
    fn monomial_gaussian_moments_are_exact() {
        let m = TestFunction::Monomial { j: 6 };
        assert_eq!(m.characteristic_expectation(0, 0.0, 2.0), Some(15.0 * 8.0));
        assert_eq!(m.characteristic_expectation(1, 0.0, 2.0), Some(0.0));
        assert_eq!(TestFunction::Monomial { j: 3 }.characteristic_expectation(3, 0.0, 0.7), Some(6.0));
        // E[(x+Z)^4] = x^4 + 6x²v + 3v²
        let (x, v) = (0.3, 1.7);
        let got = TestFunction::Monomial { j: 4 }.characteristic_expectation(0, x, v).unwrap();
        assert!((got - (x.powi(4) + 6.0 * x * x * v + 3.0 * v * v)).abs() < 1e-13);
    }

    #[test]
    fn logistic_known_forms() {
        // σ'' = σ(1-σ)(1-2σ), σ''' = σ(1-σ)(1-6σ+6σ²)
        for &z in &[-1.0, 0.3, 2.0] {
            let s = 1.0 / (1.0 + (-z as f64).exp());
            let f = TestFunction::Logistic;
            assert!((f.derivative(2, z).unwrap() - s * (1.0 - s) * (1.0 - 2.0 * s)).abs() < 1e-15);
            let d3 = s * (1.0 - s) * (1.0 - 6.0 * s + 6.0 * s * s);
            assert!((f.derivative(3, z).unwrap() - d3).abs() < 1e-15);
        }
    }

    #[test]
    fn unregistered_order_is_an_error() {
        let f = TestFunction::Logistic;
        assert!(matches!(f.derivative(6, 0.0), Err(Error::UnregisteredDerivative { order: 6, .. })));
        assert_eq!(TestFunction::Monomial { j: 3 }.derivative(7, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn resolve_from_registry() {
        let mut p = BTreeMap::new();
        p.insert("a".to_string(), 1.0);
        p.insert("c".to_string(), 1.0);
        assert_eq!(
            TestFunction::resolve("cos_shifted", &p).unwrap(),
            TestFunction::CosShifted { a: 1.0, c: 1.0 }
        );
        assert!(matches!(
            TestFunction::resolve("tanh", &p),
            Err(Error::UnknownName { .. })
        ));
        assert!(TestFunction::resolve("monomial", &BTreeMap::new()).is_err());
        let mut j = BTreeMap::new();
        j.insert("j".to_string(), 7.0);
        assert!(TestFunction::resolve("monomial", &j).is_err());
        j.insert("j".to_string(), 3.0);
        let m = TestFunction::resolve("monomial", &j).unwrap();
        assert!(m.is_diagnostic_only());
        assert!(all_bounded().iter().all(TestFunction::is_bounded));
    }

    #[test]
    fn bounded_members_stay_bounded() {
        for f in all_bounded() {
            for k in 0..=MAX_REGISTERED_DERIVATIVE {
                for i in -400..=400 {
                    let z = i as f64 * 0.25;
                    assert!(f.derivative(k, z).unwrap().abs() < 20.0);
                }
            }
        }
    }
}
