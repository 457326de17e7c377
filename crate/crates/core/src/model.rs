//! Itô pairs driven by one Brownian motion through explicit maps
//! `X_t = g_X(t, W_t)`, `Y_t = g_Y(t, W_t)`.
//!
//! Itô's lemma gives every coefficient the expansion needs in terms of the
//! partial derivatives of `g_X` and `g_Y`:
//!
//! ```text
//! Ξ = ∂_t g_X + ½ ∂_ww g_X        Γ = ∂_w g_X
//! Θ = ∂_t g_Y + ½ ∂_ww g_Y        Σ = ∂_w g_Y
//! D⁺Θ = ∂_tw g_Y + ½ ∂_www g_Y    D⁺Σ = ∂_ww g_Y
//! ```
//!
//! and, for `s ≥ t`, `D_t[Γ_s²Σ_s²] = ∂_w(Γ²Σ²)(s, W_s)`.
//!
//! Smooth maps whose derivatives grow at most exponentially satisfy the
//! moment and smoothness hypotheses of the expansion; each built-in states
//! why it belongs to that class. Custom models are accepted on the caller's
//! word and flagged as such.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};

/// Value and partial derivatives of one map `g(t, w)`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Partials {
    pub value: f64,
    pub dt: f64,
    pub dw: f64,
    pub dww: f64,
    pub dwww: f64,
    pub dtw: f64,
}

impl Partials {
    fn first_non_finite(&self) -> Option<&'static str> {
        [
            (self.value, "value"),
            (self.dt, "dt"),
            (self.dw, "dw"),
            (self.dww, "dww"),
            (self.dwww, "dwww"),
            (self.dtw, "dtw"),
        ]
        .into_iter()
        .find(|(v, _)| !v.is_finite())
        .map(|(_, name)| name)
    }
}

/// Partials of `g_X` and `g_Y` at one point.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct PairPartials {
    pub x: Partials,
    pub y: Partials,
}

/// Coefficient processes evaluated at one `(t, w)`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct CoefficientPoint {
    /// Drift of X.
    pub xi: f64,
    /// Drift of Y.
    pub theta: f64,
    /// Diffusion of X.
    pub gamma: f64,
    /// Diffusion of Y.
    pub sigma: f64,
    pub d_plus_theta: f64,
    pub d_plus_sigma: f64,
    /// `∂_w(Γ²Σ²)`
    pub d1_gs: f64,
    /// `∂_ww(Γ²Σ²)`
    pub d2_gs: f64,
    pub x_val: f64,
    pub y_val: f64,
}

impl CoefficientPoint {
    pub fn from_partials(p: &PairPartials) -> Self {
        let (x, y) = (&p.x, &p.y);
        let gamma = x.dw;
        let sigma = y.dw;
        let prod = gamma * sigma;
        let prod_w = x.dww * sigma + gamma * y.dww;
        let prod_ww = x.dwww * sigma + 2.0 * x.dww * y.dww + gamma * y.dwww;
        Self {
            xi: x.dt + 0.5 * x.dww,
            theta: y.dt + 0.5 * y.dww,
            gamma,
            sigma,
            d_plus_theta: y.dtw + 0.5 * y.dwww,
            d_plus_sigma: y.dww,
            d1_gs: 2.0 * prod * prod_w,
            d2_gs: 2.0 * (prod_w * prod_w + prod * prod_ww),
            x_val: x.value,
            y_val: y.value,
        }
    }

    pub(crate) fn is_finite(&self) -> bool {
        [
            self.xi,
            self.theta,
            self.gamma,
            self.sigma,
            self.d_plus_theta,
            self.d_plus_sigma,
            self.d1_gs,
            self.d2_gs,
            self.x_val,
            self.y_val,
        ]
        .iter()
        .all(|v| v.is_finite())
    }
}

/// Closed-form model families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Builtin {
    /// `g_X = g_Y = w`: constant unit coefficients.
    BrownianIdentity,
    /// `g_X = e^{a w + b t}`, `g_Y = e^{c w + d t}`.
    ExpPair { a: f64, b: f64, c: f64, d: f64 },
    /// Zero-rate Black–Scholes stock `g_Y = s0 e^{vol w − vol² t / 2}` hedged
    /// with the delta `g_X = N(d₁)` of a call expiring strictly after the
    /// simulation horizon, so every coefficient is smooth and bounded on
    /// `[0, T]`.
    BsDeltaHedge {
        s0: f64,
        vol: f64,
        strike: f64,
        maturity: f64,
    },
}

impl Builtin {
    #[inline]
    fn partials(&self, t: f64, w: f64) -> PairPartials {
        match *self {
            Builtin::BrownianIdentity => {
                let p = Partials {
                    value: w,
                    dw: 1.0,
                    ..Partials::default()
                };
                PairPartials { x: p, y: p }
            }
            Builtin::ExpPair { a, b, c, d } => PairPartials {
                x: exponential_partials(a, b, t, w),
                y: exponential_partials(c, d, t, w),
            },
            Builtin::BsDeltaHedge {
                s0,
                vol,
                strike,
                maturity,
            } => {
                let stock = s0 * (vol * w - 0.5 * vol * vol * t).exp();
                let y = Partials {
                    value: stock,
                    dt: -0.5 * vol * vol * stock,
                    dw: vol * stock,
                    dww: vol * vol * stock,
                    dwww: vol * vol * vol * stock,
                    dtw: -0.5 * vol * vol * vol * stock,
                };
                let tau = maturity - t;
                let sq = tau.sqrt();
                let u = ((s0 / strike).ln() + vol * w + vol * vol * (0.5 * maturity - t)) / (vol * sq);
                let u_w = 1.0 / sq;
                let u_t = -vol / sq + u / (2.0 * tau);
                let u_tw = 1.0 / (2.0 * tau * sq);
                let pdf = (-0.5 * u * u).exp() / (2.0 * PI).sqrt();
                let x = Partials {
                    value: normal_cdf(u),
                    dt: pdf * u_t,
                    dw: pdf * u_w,
                    dww: -u * pdf * u_w * u_w,
                    dwww: (u * u - 1.0) * pdf * u_w * u_w * u_w,
                    dtw: -u * pdf * u_t * u_w + pdf * u_tw,
                };
                PairPartials { x, y }
            }
        }
    }
}

#[inline]
fn exponential_partials(scale: f64, rate: f64, t: f64, w: f64) -> Partials {
    let e = (scale * w + rate * t).exp();
    Partials {
        value: e,
        dt: rate * e,
        dw: scale * e,
        dww: scale * scale * e,
        dwww: scale * scale * scale * e,
        dtw: rate * scale * e,
    }
}

fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

type PartialsFn = dyn Fn(f64, f64) -> PairPartials + Send + Sync;

#[derive(Clone)]
enum Source {
    Builtin(Builtin),
    Custom(Arc<PartialsFn>),
}

/// Where the regularity hypotheses of a model come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Hypotheses {
    /// Built-in family, smooth with derivatives of at most exponential growth.
    Documented,
    /// Custom model; the caller vouches for the hypotheses.
    AssertedByUser,
}

impl fmt::Display for Hypotheses {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Hypotheses::Documented => "documented",
            Hypotheses::AssertedByUser => "asserted_by_user",
        })
    }
}

/// An Itô pair `(X, Y) = (g_X(t, W_t), g_Y(t, W_t))`. Immutable and cheap to
/// clone.
#[derive(Clone)]
pub struct GModel {
    name: String,
    params: Vec<(String, f64)>,
    source: Source,
}

impl fmt::Debug for GModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GModel")
            .field("name", &self.name)
            .field("params", &self.params)
            .field("hypotheses", &self.hypotheses())
            .finish()
    }
}

impl fmt::Display for GModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)?;
        if !self.params.is_empty() {
            f.write_str("(")?;
            for (i, (k, v)) in self.params.iter().enumerate() {
                if i > 0 {
                    f.write_str(";")?;
                }
                write!(f, "{k}={v}")?;
            }
            f.write_str(")")?;
        }
        Ok(())
    }
}

impl GModel {
    pub fn brownian_identity() -> Self {
        Self {
            name: "brownian_identity".into(),
            params: Vec::new(),
            source: Source::Builtin(Builtin::BrownianIdentity),
        }
    }

    pub fn exp_pair(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        for (name, v) in [("a", a), ("b", b), ("c", c), ("d", d)] {
            if !v.is_finite() {
                return Err(invalid(name, "must be finite"));
            }
        }
        if a == 0.0 || c == 0.0 {
            return Err(Error::DegenerateModel(
                "exp_pair with a = 0 or c = 0 has ΓΣ identically zero".into(),
            ));
        }
        Ok(Self {
            name: "exp_pair".into(),
            params: vec![("a".into(), a), ("b".into(), b), ("c".into(), c), ("d".into(), d)],
            source: Source::Builtin(Builtin::ExpPair { a, b, c, d }),
        })
    }

    /// Delta hedge of a call; `horizon` is the simulation horizon `T`, which
    /// must end strictly before the option matures.
    pub fn bs_delta_hedge(s0: f64, vol: f64, strike: f64, maturity: f64, horizon: f64) -> Result<Self> {
        for (name, v) in [("s0", s0), ("vol", vol), ("strike", strike), ("maturity", maturity)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(name, "must be positive and finite"));
            }
        }
        if maturity <= horizon {
            return Err(invalid(
                "maturity",
                "delta singular at maturity: option maturity must exceed the horizon T",
            ));
        }
        Ok(Self {
            name: "bs_delta_hedge".into(),
            params: vec![
                ("s0".into(), s0),
                ("vol".into(), vol),
                ("strike".into(), strike),
                ("maturity".into(), maturity),
            ],
            source: Source::Builtin(Builtin::BsDeltaHedge {
                s0,
                vol,
                strike,
                maturity,
            }),
        })
    }

    /// Resolves a built-in family by name. Missing parameters take the
    /// documented defaults.
    pub fn builtin(name: &str, params: &BTreeMap<String, f64>, horizon: f64) -> Result<Self> {
        let allowed: &[&str] = match name {
            "brownian_identity" => &[],
            "exp_pair" => &["a", "b", "c", "d"],
            "bs_delta_hedge" => &["s0", "vol", "strike", "maturity"],
            other => {
                return Err(Error::UnknownName {
                    kind: "model",
                    name: other.into(),
                })
            }
        };
        if let Some(extra) = params.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(invalid(extra, &format!("not a parameter of model `{name}`")));
        }
        let get = |key: &str, default: f64| params.get(key).copied().unwrap_or(default);
        match name {
            "brownian_identity" => Ok(Self::brownian_identity()),
            "exp_pair" => Self::exp_pair(get("a", 0.5), get("b", 0.0), get("c", 0.5), get("d", 0.0)),
            _ => Self::bs_delta_hedge(
                get("s0", 100.0),
                get("vol", 0.2),
                get("strike", 100.0),
                get("maturity", 2.0 * horizon),
                horizon,
            ),
        }
    }

    /// A user-supplied pair. `partials(t, w)` must return mutually consistent
    /// derivatives; use [`GModel::finite_diff_partials`] to check them.
    pub fn custom<F>(name: impl Into<String>, partials: F) -> Self
    where
        F: Fn(f64, f64) -> PairPartials + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            params: Vec::new(),
            source: Source::Custom(Arc::new(partials)),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn params(&self) -> &[(String, f64)] {
        &self.params
    }

    pub fn as_builtin(&self) -> Option<&Builtin> {
        match &self.source {
            Source::Builtin(b) => Some(b),
            Source::Custom(_) => None,
        }
    }

    pub fn hypotheses(&self) -> Hypotheses {
        match self.source {
            Source::Builtin(_) => Hypotheses::Documented,
            Source::Custom(_) => Hypotheses::AssertedByUser,
        }
    }

    /// Raw partials, without finiteness checks.
    #[inline]
    pub fn partials(&self, t: f64, w: f64) -> PairPartials {
        match &self.source {
            Source::Builtin(b) => b.partials(t, w),
            Source::Custom(f) => f(t, w),
        }
    }

    /// All coefficient processes at `(t, w)`.
    pub fn eval_coefficients(&self, t: f64, w: f64) -> Result<CoefficientPoint> {
        if !(t.is_finite() && w.is_finite()) {
            return Err(Error::NonFinite("model evaluation point"));
        }
        let p = self.partials(t, w);
        for (g, label) in [(&p.x, "g_x"), (&p.y, "g_y")] {
            if let Some(which) = g.first_non_finite() {
                return Err(Error::ModelEvaluation {
                    model: self.to_string(),
                    partial: partial_label(label, which),
                    t,
                    w,
                });
            }
        }
        let point = CoefficientPoint::from_partials(&p);
        if !point.is_finite() {
            return Err(Error::ModelEvaluation {
                model: self.to_string(),
                partial: "coefficient product",
                t,
                w,
            });
        }
        Ok(point)
    }

    /// Central finite-difference estimates of every partial, all at one step.
    pub fn finite_diff_partials(&self, t: f64, w: f64, step: f64) -> Result<PairPartials> {
        self.finite_diff_partials_with(t, w, &FdSteps::uniform(step))
    }

    pub fn finite_diff_partials_with(&self, t: f64, w: f64, steps: &FdSteps) -> Result<PairPartials> {
        steps.validate()?;
        let value = |t: f64, w: f64| {
            let p = self.partials(t, w);
            (p.x.value, p.y.value)
        };
        let each = |pick: fn((f64, f64)) -> f64| {
            let g = |t: f64, w: f64| pick(value(t, w));
            let (h1, h2, h3, hm) = (steps.first, steps.second, steps.third, steps.mixed);
            Partials {
                value: g(t, w),
                dt: (g(t + h1, w) - g(t - h1, w)) / (2.0 * h1),
                dw: (g(t, w + h1) - g(t, w - h1)) / (2.0 * h1),
                dww: (g(t, w + h2) - 2.0 * g(t, w) + g(t, w - h2)) / (h2 * h2),
                dwww: (g(t, w + 2.0 * h3) - 2.0 * g(t, w + h3) + 2.0 * g(t, w - h3)
                    - g(t, w - 2.0 * h3))
                    / (2.0 * h3 * h3 * h3),
                dtw: (g(t + hm, w + hm) - g(t + hm, w - hm) - g(t - hm, w + hm)
                    + g(t - hm, w - hm))
                    / (4.0 * hm * hm),
            }
        };
        Ok(PairPartials {
            x: each(|(x, _)| x),
            y: each(|(_, y)| y),
        })
    }
}

/// Worst disagreement between analytic and finite-difference partials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivativeCheck {
    /// `|analytic − fd| / max(|analytic|, 10⁻³ max(1, |g|))`
    pub max_rel_err: f64,
    pub partial: &'static str,
    pub t: f64,
    pub w: f64,
    pub points: usize,
}

impl GModel {
    /// Compares every analytic partial with [`FdSteps::adaptive`] finite
    /// differences on the 5×5 grid `t ∈ {0, …, 0.9T}`, `w ∈ {−2, …, 2}`.
    pub fn derivative_check(&self, horizon: f64) -> Result<DerivativeCheck> {
        let mut worst = DerivativeCheck {
            max_rel_err: 0.0,
            partial: "g_x.dt",
            t: 0.0,
            w: 0.0,
            points: 0,
        };
        for i in 0..5 {
            for j in 0..5 {
                let t = 0.9 * horizon * i as f64 / 4.0;
                let w = -2.0 + j as f64;
                let exact = self.partials(t, w);
                let fd = self.finite_diff_partials_with(t, w, &FdSteps::adaptive())?;
                worst.points += 1;
                for (g, e, f) in [("g_x", exact.x, fd.x), ("g_y", exact.y, fd.y)] {
                    let floor = 1e-3 * e.value.abs().max(1.0);
                    for (which, a, b) in [
                        ("dt", e.dt, f.dt),
                        ("dw", e.dw, f.dw),
                        ("dww", e.dww, f.dww),
                        ("dwww", e.dwww, f.dwww),
                        ("dtw", e.dtw, f.dtw),
                    ] {
                        let r = (a - b).abs() / a.abs().max(floor);
                        if !(r <= worst.max_rel_err) {
                            worst.max_rel_err = r;
                            worst.partial = partial_label(g, which);
                            worst.t = t;
                            worst.w = w;
                        }
                    }
                }
            }
        }
        Ok(worst)
    }
}

fn partial_label(g: &str, which: &str) -> &'static str {
    match (g, which) {
        ("g_x", "value") => "g_x",
        ("g_x", "dt") => "g_x.dt",
        ("g_x", "dw") => "g_x.dw",
        ("g_x", "dww") => "g_x.dww",
        ("g_x", "dwww") => "g_x.dwww",
        ("g_x", _) => "g_x.dtw",
        (_, "value") => "g_y",
        (_, "dt") => "g_y.dt",
        (_, "dw") => "g_y.dw",
        (_, "dww") => "g_y.dww",
        (_, "dwww") => "g_y.dwww",
        _ => "g_y.dtw",
    }
}

fn invalid(name: &str, reason: &str) -> Error {
    Error::InvalidParameter {
        name: name.into(),
        reason: reason.into(),
    }
}

/// Finite-difference step per derivative order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdSteps {
    pub first: f64,
    pub second: f64,
    pub third: f64,
    pub mixed: f64,
}

impl FdSteps {
    pub fn uniform(step: f64) -> Self {
        Self {
            first: step,
            second: step,
            third: step,
            mixed: step,
        }
    }

    /// Steps balancing truncation against roundoff for each order.
    pub fn adaptive() -> Self {
        Self {
            first: 1e-5,
            second: 1e-4,
            third: 2e-3,
            mixed: 1e-4,
        }
    }

    fn validate(&self) -> Result<()> {
        for v in [self.first, self.second, self.third, self.mixed] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid("step", "must be positive and finite"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn builtins(horizon: f64) -> Vec<GModel> {
        vec![
            GModel::brownian_identity(),
            GModel::exp_pair(0.5, 0.0, 0.5, 0.0).unwrap(),
            GModel::exp_pair(0.3, -0.1, -0.4, 0.2).unwrap(),
            GModel::bs_delta_hedge(100.0, 0.2, 100.0, 2.0 * horizon, horizon).unwrap(),
            GModel::bs_delta_hedge(1.0, 0.4, 1.1, 1.5 * horizon, horizon).unwrap(),
        ]
    }

    #[test]
    fn brownian_identity_coefficients() {
        let m = GModel::brownian_identity();
        for (t, w) in [(0.0, 0.0), (0.3, -1.2), (0.9, 2.5)] {
            let c = m.eval_coefficients(t, w).unwrap();
            assert_eq!(
                c,
                CoefficientPoint {
                    gamma: 1.0,
                    sigma: 1.0,
                    x_val: w,
                    y_val: w,
                    ..Default::default()
                }
            );
        }
    }

    #[test]
    fn exp_pair_reference_point() {
        let m = GModel::exp_pair(0.5, 0.0, 0.5, 0.0).unwrap();
        let c = m.eval_coefficients(0.0, 0.0).unwrap();
        assert_eq!(c.gamma, 0.5);
        assert_eq!(c.sigma, 0.5);
        assert_relative_eq!(c.d1_gs, 0.125, max_relative = 1e-15);
        assert_relative_eq!(c.xi, 0.125, max_relative = 1e-15);
        // 4(a+c)²(ac)² at the origin
        assert_relative_eq!(c.d2_gs, 0.25, max_relative = 1e-15);
    }

    #[test]
    fn degenerate_and_invalid_builtins_are_rejected() {
        assert!(matches!(
            GModel::builtin("exp_pair", &[("a", 0.0), ("b", 0.0), ("c", 0.0), ("d", 0.0)].map(|(k, v)| (k.to_string(), v)).into(), 1.0),
            Err(Error::DegenerateModel(_))
        ));
        let err = GModel::bs_delta_hedge(100.0, 0.2, 100.0, 1.0, 1.0).unwrap_err();
        assert!(err.to_string().contains("delta singular at maturity"), "{err}");
        assert!(GModel::bs_delta_hedge(100.0, 0.0, 100.0, 2.0, 1.0).is_err());
        assert!(matches!(
            GModel::builtin("heston", &BTreeMap::new(), 1.0),
            Err(Error::UnknownName { .. })
        ));
        let mut extra = BTreeMap::new();
        extra.insert("kappa".to_string(), 1.0);
        assert!(GModel::builtin("exp_pair", &extra, 1.0).is_err());
    }

    #[test]
    fn non_finite_partial_is_named() {
        let m = GModel::custom("broken", |_, w| {
            let mut p = Builtin::BrownianIdentity.partials(0.0, w);
            p.y.dwww = f64::NAN;
            p
        });
        match m.eval_coefficients(0.1, 0.2) {
            Err(Error::ModelEvaluation { partial, .. }) => assert_eq!(partial, "g_y.dwww"),
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(m.hypotheses(), Hypotheses::AssertedByUser);
    }

    #[test]
    fn fd_reference_checks() {
        let m = GModel::exp_pair(0.5, 0.0, 0.5, 0.0).unwrap();
        let fd = m.finite_diff_partials(0.0, 0.0, 1e-4).unwrap();
        assert!((fd.x.dw - 0.5).abs() / 0.5 < 1e-6);

        let id = GModel::brownian_identity();
        let fd = id.finite_diff_partials(0.4, 0.7, 1e-3).unwrap();
        for v in [fd.x.dww, fd.x.dwww, fd.x.dtw, fd.y.dww, fd.y.dwww, fd.y.dtw] {
            assert!(v.abs() < 1e-6, "{v}");
        }

        let bs = GModel::bs_delta_hedge(100.0, 0.2, 100.0, 2.0, 1.0).unwrap();
        let fd = bs.finite_diff_partials(0.5, 0.3, 1e-3).unwrap();
        let exact = bs.partials(0.5, 0.3);
        assert!((fd.x.dwww - exact.x.dwww).abs() / exact.x.dwww.abs() < 1e-4);
    }

    #[test]
    fn analytic_partials_match_finite_differences() {
        for m in builtins(1.0) {
            let c = m.derivative_check(1.0).unwrap();
            assert_eq!(c.points, 25);
            assert!(c.max_rel_err < 1e-4, "{m}: {c:?}");
        }
        let wrong = GModel::custom("wrong", |_, w| {
            let mut p = Builtin::BrownianIdentity.partials(0.0, w);
            p.y.dww = 0.1;
            p
        });
        let c = wrong.derivative_check(1.0).unwrap();
        assert_eq!(c.partial, "g_y.dww");
        assert!(c.max_rel_err > 0.5);
    }

    #[test]
    fn linear_models_annihilate_higher_terms() {
        let m = GModel::custom("linear", |_, w| PairPartials {
            x: Partials { value: 2.0 * w + 1.0, dw: 2.0, ..Default::default() },
            y: Partials { value: -0.5 * w, dw: -0.5, ..Default::default() },
        });
        let c = m.eval_coefficients(0.2, 1.3).unwrap();
        for v in [c.xi, c.theta, c.d_plus_theta, c.d_plus_sigma, c.d1_gs, c.d2_gs] {
            assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn exp_pair_swap_symmetry() {
        let m = GModel::exp_pair(0.3, 0.1, 0.7, -0.2).unwrap();
        let s = GModel::exp_pair(0.7, -0.2, 0.3, 0.1).unwrap();
        for (t, w) in [(0.0, 0.0), (0.5, 1.1), (0.9, -1.7)] {
            let a = m.eval_coefficients(t, w).unwrap();
            let b = s.eval_coefficients(t, w).unwrap();
            assert_eq!(a.gamma, b.sigma);
            assert_eq!(a.sigma, b.gamma);
            assert_eq!(a.xi, b.theta);
            assert_eq!(a.theta, b.xi);
        }
    }

    #[test]
    fn delta_hedge_stock_is_a_martingale() {
        let m = GModel::bs_delta_hedge(100.0, 0.25, 90.0, 2.0, 1.0).unwrap();
        for (t, w) in [(0.0, 0.0), (0.7, -0.8)] {
            let c = m.eval_coefficients(t, w).unwrap();
            assert!(c.theta.abs() < 1e-12 * c.y_val);
            assert!(c.d_plus_theta.abs() < 1e-12 * c.y_val);
            assert!(c.x_val > 0.0 && c.x_val < 1.0);
        }
    }

    #[test]
    fn builtin_defaults_and_display() {
        let m = GModel::builtin("exp_pair", &BTreeMap::new(), 1.0).unwrap();
        assert_eq!(m.to_string(), "exp_pair(a=0.5;b=0;c=0.5;d=0)");
        assert_eq!(m.hypotheses(), Hypotheses::Documented);
        let bs = GModel::builtin("bs_delta_hedge", &BTreeMap::new(), 1.0).unwrap();
        assert!(matches!(bs.as_builtin(), Some(Builtin::BsDeltaHedge { maturity, .. }) if *maturity == 2.0));
    }
}
