//! Pathwise anticipating functionals and the expansion coefficients.
//!
//! For the Markov class, `D_t[Γ_s²Σ_s²] = ∂_w(Γ²Σ²)(s, W_s)` for `s ≥ t`, so
//!
//! ```text
//! V_t      = ½ ∫_t^T Γ_s²Σ_s² ds
//! D⁻V_t    = ½ ∫_t^T ∂_w(Γ²Σ²)(s, W_s) ds
//! (D⁻)²V_t = ½ ∫_t^T ∂_ww(Γ²Σ²)(s, W_s) ds
//! ```
//!
//! and
//!
//! ```text
//! A₁ = ½ ∫ (ΞΘ + D⁺Θ Γ) dt
//! A₃ = ¼ ∫ [(ΞΣ + ΘΓ + D⁺Σ Γ) D⁻V_t + ΓΣ (D⁻)²V_t] dt + ⅙ ∫ Σ³Γ³ dt
//! A₅ = ⅛ ∫ ΓΣ |D⁻V_t|² dt
//! ```
//!
//! Every `dt`-integral uses the trapezoid rule on the fine grid.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hermite::ExpansionCoefficients;
use crate::model::GModel;
use crate::path::{CoefficientTrajectory, ErrorAccumulator, ErrorSample, PathGrid, StreamId};
use crate::sum::Trapezoid;

#[derive(Debug, Clone, PartialEq)]
pub struct MalliavinTrajectory {
    pub v0: f64,
    /// `D⁻V_{s_k}` at every fine node; the last entry is `0`.
    pub dminus_v: Vec<f64>,
    /// `(D⁻)²V_{s_k}`; the last entry is `0`.
    pub dminus2_v: Vec<f64>,
}

/// Expansion coefficients of one path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpansionSample {
    pub v0: f64,
    pub a1: f64,
    pub a3: f64,
    pub a5: f64,
    pub stream: StreamId,
}

impl ExpansionSample {
    pub fn coefficients(&self) -> ExpansionCoefficients {
        ExpansionCoefficients {
            v0: self.v0,
            a1: self.a1,
            a3: self.a3,
            a5: self.a5,
        }
    }
}

/// `V₀` and the suffix integrals `D⁻V`, `(D⁻)²V`, in one backward pass.
pub fn dv_trajectories(traj: &CoefficientTrajectory) -> MalliavinTrajectory {
    let points = traj.points();
    let h = traj.spec().fine_dt();
    let len = points.len();
    let mut dminus_v = vec![0.0; len];
    let mut dminus2_v = vec![0.0; len];
    // Running sums keep the suffix integral monotone when the integrand has
    // a fixed sign.
    let (mut s1, mut s2) = (0.0, 0.0);
    for k in (0..len.saturating_sub(1)).rev() {
        s1 += 0.5 * (points[k].d1_gs + points[k + 1].d1_gs);
        s2 += 0.5 * (points[k].d2_gs + points[k + 1].d2_gs);
        dminus_v[k] = 0.5 * h * s1;
        dminus2_v[k] = 0.5 * h * s2;
    }
    let mut v = Trapezoid::new();
    for p in points {
        let gs = p.gamma * p.sigma;
        v.push(gs * gs);
    }
    MalliavinTrajectory {
        v0: 0.5 * v.integral(h),
        dminus_v,
        dminus2_v,
    }
}

/// `(V₀, A₁, A₃, A₅)` of one path.
pub fn expansion_coefficients(
    traj: &CoefficientTrajectory,
    mal: &MalliavinTrajectory,
) -> Result<ExpansionSample> {
    let points = traj.points();
    if mal.dminus_v.len() != points.len() || mal.dminus2_v.len() != points.len() {
        return Err(Error::InvalidGrid("Malliavin trajectory not aligned with coefficients".into()));
    }
    let stream = traj.stream();
    if !(mal.v0 > 0.0) {
        return Err(Error::DegenerateModel(format!(
            "V0 = {} on stream {}: expansion density undefined",
            mal.v0, stream.index
        )));
    }
    let (mut i1, mut i3, mut i5) = (Trapezoid::new(), Trapezoid::new(), Trapezoid::new());
    for ((p, &dv), &d2v) in points.iter().zip(&mal.dminus_v).zip(&mal.dminus2_v) {
        let gs = p.gamma * p.sigma;
        i1.push(0.5 * (p.xi * p.theta + p.d_plus_theta * p.gamma));
        i3.push(
            0.25 * ((p.xi * p.sigma + p.theta * p.gamma + p.d_plus_sigma * p.gamma) * dv + gs * d2v)
                + gs * gs * gs / 6.0,
        );
        i5.push(0.125 * gs * dv * dv);
    }
    let h = traj.spec().fine_dt();
    let sample = ExpansionSample {
        v0: mal.v0,
        a1: i1.integral(h),
        a3: i3.integral(h),
        a5: i5.integral(h),
        stream,
    };
    if ![sample.a1, sample.a3, sample.a5].iter().all(|v| v.is_finite()) {
        return Err(Error::PathEvaluation {
            stream: stream.index,
        });
    }
    Ok(sample)
}

/// Per-path inputs of the stable CLT for `V^n_0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VarianceSample {
    pub error: ErrorSample,
    /// `V₀`, equal bit for bit to [`dv_trajectories`]' value.
    pub v0: f64,
    /// `∫ Γ⁴Σ⁴ dt`
    pub quartic: f64,
}

/// `V^n_0`, `V₀` and `∫Γ⁴Σ⁴dt` in one streaming pass, without storing the
/// trajectory.
pub fn variance_functionals(model: &GModel, path: &PathGrid) -> Result<VarianceSample> {
    let spec = path.spec();
    let mut acc = ErrorAccumulator::new(spec.m());
    let (mut v, mut q) = (Trapezoid::new(), Trapezoid::new());
    for (k, &w) in path.values().iter().enumerate() {
        let p = model.partials(spec.time(k), w);
        acc.push(p.x.value, p.y.value, p.y.dw);
        let gs = p.x.dw * p.y.dw;
        let g2 = gs * gs;
        v.push(g2);
        q.push(g2 * g2);
    }
    let error = acc.finish(spec, path.stream())?;
    let h = spec.fine_dt();
    let sample = VarianceSample {
        error,
        v0: 0.5 * v.integral(h),
        quartic: q.integral(h),
    };
    if !(sample.v0.is_finite() && sample.quartic.is_finite()) {
        return Err(Error::PathEvaluation {
            stream: path.stream().index,
        });
    }
    Ok(sample)
}

/// Largest deviation between `D⁺Θ`, `D⁺Σ` and central differences of `Θ`,
/// `Σ` along `w`, relative to `max(1, |analytic|)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DPlusReport {
    pub max_theta_deviation: f64,
    pub max_sigma_deviation: f64,
    pub nodes_checked: usize,
}

pub fn dplus_consistency_check(model: &GModel, path: &PathGrid, step: f64) -> Result<DPlusReport> {
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::InvalidParameter {
            name: "step".into(),
            reason: "must be positive and finite".into(),
        });
    }
    let spec = path.spec();
    let mut report = DPlusReport {
        max_theta_deviation: 0.0,
        max_sigma_deviation: 0.0,
        nodes_checked: 0,
    };
    for (k, &w) in path.values().iter().enumerate() {
        let t = spec.time(k);
        let c = model.eval_coefficients(t, w)?;
        let up = model.eval_coefficients(t, w + step)?;
        let down = model.eval_coefficients(t, w - step)?;
        let fd_theta = (up.theta - down.theta) / (2.0 * step);
        let fd_sigma = (up.sigma - down.sigma) / (2.0 * step);
        let dev = |analytic: f64, fd: f64| (analytic - fd).abs() / analytic.abs().max(1.0);
        report.max_theta_deviation = report.max_theta_deviation.max(dev(c.d_plus_theta, fd_theta));
        report.max_sigma_deviation = report.max_sigma_deviation.max(dev(c.d_plus_sigma, fd_sigma));
        report.nodes_checked += 1;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Partials, PairPartials};
    use crate::path::{coefficient_trajectory, sample_path, GridSpec};

    fn coefficients(model: &GModel, path: &PathGrid) -> (MalliavinTrajectory, ExpansionSample) {
        let traj = coefficient_trajectory(model, path).unwrap();
        let mal = dv_trajectories(&traj);
        let sample = expansion_coefficients(&traj, &mal).unwrap();
        (mal, sample)
    }

    #[test]
    fn brownian_identity_coefficients_are_exact() {
        let spec = GridSpec::new(1.0, 16, 64).unwrap();
        let path = sample_path(5, StreamId::new(2), &spec);
        let (mal, s) = coefficients(&GModel::brownian_identity(), &path);
        assert_eq!(s.v0, 0.5);
        assert_eq!(s.a1, 0.0);
        assert_eq!(s.a3, 1.0 / 6.0);
        assert_eq!(s.a5, 0.0);
        assert!(mal.dminus_v.iter().chain(&mal.dminus2_v).all(|&x| x == 0.0));
        // skewness identity: 6 A₃ / √n is the exact third cumulant n^{-1/2}
        assert_eq!(6.0 * s.a3 / 4.0, 0.25);
    }

    #[test]
    fn exp_pair_zero_path_closed_forms() {
        let (a, c) = (0.5, 0.5);
        let model = GModel::exp_pair(a, 0.0, c, 0.0).unwrap();
        let spec = GridSpec::new(1.0, 4, 64).unwrap();
        let path = PathGrid::zero(spec);
        let (mal, s) = coefficients(&model, &path);
        let ac = a * c;
        assert!((s.v0 - 0.5 * ac * ac).abs() < 1e-15);
        for (k, &dv) in mal.dminus_v.iter().enumerate() {
            let exact = (a + c) * ac * ac * (1.0 - spec.time(k));
            assert!((dv - exact).abs() < 1e-14, "k={k}");
            let exact2 = 2.0 * (a + c).powi(2) * ac * ac * (1.0 - spec.time(k));
            assert!((mal.dminus2_v[k] - exact2).abs() < 1e-14, "k={k}");
        }
        assert_eq!(*mal.dminus_v.last().unwrap(), 0.0);
        assert_eq!(*mal.dminus2_v.last().unwrap(), 0.0);
        // Closed forms on the zero path (see the fixtures file for the
        // derivation): a1 = 3/128, a3 = 13/1536, a5 = 1/24576.
        assert!((s.a1 - 0.0234375).abs() < 1e-15);
        assert!((s.a3 - 13.0 / 1536.0).abs() < 1e-7, "{}", s.a3);
        assert!((s.a5 - 1.0 / 24576.0).abs() < 1e-8, "{}", s.a5);
    }

    #[test]
    fn suffix_integral_is_monotone_for_positive_integrand() {
        let model = GModel::exp_pair(0.4, 0.0, 0.3, 0.0).unwrap();
        let spec = GridSpec::new(1.0, 8, 64).unwrap();
        for i in 0..4 {
            let path = sample_path(8, StreamId::new(i), &spec);
            let (mal, _) = coefficients(&model, &path);
            assert!(mal.dminus_v.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn coefficients_converge_at_second_order_on_smooth_paths() {
        // On the zero path every integrand is smooth in t.
        let model = GModel::exp_pair(0.5, 0.3, 0.5, -0.2).unwrap();
        let at = |m: usize| coefficients(&model, &PathGrid::zero(GridSpec::new(1.0, 1, m).unwrap())).1;
        let (s1, s2, s4) = (at(16), at(32), at(64));
        for (name, c, m, f) in [
            ("v0", s1.v0, s2.v0, s4.v0),
            ("a1", s1.a1, s2.a1, s4.a1),
            ("a3", s1.a3, s2.a3, s4.a3),
            ("a5", s1.a5, s2.a5, s4.a5),
        ] {
            let ratio = (c - m) / (m - f);
            assert!((ratio - 4.0).abs() < 0.1, "{name}: ratio {ratio}");
        }
    }

    #[test]
    fn coefficients_converge_at_first_order_on_brownian_paths() {
        // Along a Brownian path the integrands are only Hölder-½ in t, so the
        // per-path quadrature error is O(1/m) in L². Common paths sampled at
        // 4m and coarsened; the rms ratio per doubling is pinned near 2.
        let model = GModel::exp_pair(0.2, 0.0, 0.2, 0.0).unwrap();
        let spec = GridSpec::new(1.0, 1, 256).unwrap();
        let (mut v_coarse, mut v_fine, mut a_coarse, mut a_fine) = (0.0, 0.0, 0.0, 0.0);
        for i in 0..1000 {
            let path = sample_path(1, StreamId::new(i), &spec);
            let s = |f: usize| coefficients(&model, &path.coarsen(f).unwrap()).1;
            let (c, m, f) = (s(4), s(2), s(1));
            v_coarse += (c.v0 - m.v0).powi(2);
            v_fine += (m.v0 - f.v0).powi(2);
            a_coarse += (c.a3 - m.a3).powi(2);
            a_fine += (m.a3 - f.a3).powi(2);
        }
        for ratio in [(v_coarse / v_fine).sqrt(), (a_coarse / a_fine).sqrt()] {
            assert!((ratio - 2.0).abs() < 0.3, "ratio {ratio}");
        }
    }

    #[test]
    fn deterministic_coefficients_collapse() {
        // Γ = 1 + t, Σ = 2 − t: linear in w with time-dependent slopes.
        let model = GModel::custom("linear_in_w", |t, w| PairPartials {
            x: Partials { value: (1.0 + t) * w, dt: w, dw: 1.0 + t, dtw: 1.0, ..Default::default() },
            y: Partials { value: (2.0 - t) * w, dt: -w, dw: 2.0 - t, dtw: -1.0, ..Default::default() },
        });
        let spec = GridSpec::new(1.0, 4, 64).unwrap();
        let path = sample_path(3, StreamId::new(0), &spec);
        let (_, s) = coefficients(&model, &path);
        assert_eq!(s.a5, 0.0);
        // ∫₀¹ ((1+t)(2−t))³ dt = 1429/140
        let exact = 1429.0 / 140.0 / 6.0;
        assert!((s.a3 - exact).abs() < 1e-5, "{}", s.a3);
    }

    #[test]
    fn streaming_variance_matches_trajectory() {
        let model = GModel::exp_pair(0.3, 0.1, 0.4, 0.0).unwrap();
        let spec = GridSpec::new(1.0, 8, 16).unwrap();
        let path = sample_path(4, StreamId::new(3), &spec);
        let (mal, _) = coefficients(&model, &path);
        let v = variance_functionals(&model, &path).unwrap();
        assert_eq!(v.v0, mal.v0);
        assert_eq!(v.error, crate::path::discretization_error(&model, &path).unwrap());
        let id = variance_functionals(&GModel::brownian_identity(), &path).unwrap();
        assert_eq!((id.v0, id.quartic), (0.5, 1.0));
    }

    #[test]
    fn degenerate_model_is_rejected() {
        let flat = GModel::custom("flat", |_, _| PairPartials::default());
        let spec = GridSpec::new(1.0, 2, 4).unwrap();
        let path = PathGrid::zero(spec);
        let traj = coefficient_trajectory(&flat, &path).unwrap();
        let mal = dv_trajectories(&traj);
        assert!(matches!(expansion_coefficients(&traj, &mal), Err(Error::DegenerateModel(_))));
    }

    #[test]
    fn dplus_matches_finite_differences() {
        let spec = GridSpec::new(1.0, 4, 8).unwrap();
        let path = sample_path(12, StreamId::new(1), &spec);
        let id = dplus_consistency_check(&GModel::brownian_identity(), &path, 1e-4).unwrap();
        assert_eq!(id.max_theta_deviation, 0.0);
        assert_eq!(id.max_sigma_deviation, 0.0);
        let ep = dplus_consistency_check(&GModel::exp_pair(0.5, 0.1, 0.5, -0.2).unwrap(), &path, 1e-4).unwrap();
        assert!(ep.max_theta_deviation < 1e-6 && ep.max_sigma_deviation < 1e-6, "{ep:?}");
        let bs = GModel::bs_delta_hedge(100.0, 0.2, 100.0, 2.0, 1.0).unwrap();
        let r = dplus_consistency_check(&bs, &path, 1e-4).unwrap();
        assert!(r.max_theta_deviation < 1e-4 && r.max_sigma_deviation < 1e-4, "{r:?}");
        assert_eq!(r.nodes_checked, 33);
    }
}
