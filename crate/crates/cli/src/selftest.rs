//! Fast invariant suite behind `ito-edgeworth selftest`.

use ito_edgeworth::estimator::{convergence_study, FineSteps, McConfig};
use ito_edgeworth::hermite::{
    expansion_value, gaussian_pdf_unchecked, hermite_unchecked, pair_integral, ExpansionCoefficients, HermiteOrder,
    TestFunction, Variance,
};
use ito_edgeworth::malliavin::{dv_trajectories, expansion_coefficients};
use ito_edgeworth::model::{GModel, Partials, PairPartials};
use ito_edgeworth::oracle::{direct_pairing, hermite_explicit, symbolic_diff_check};
use ito_edgeworth::path::{coefficient_trajectory, sample_path, GridSpec, StreamId};

/// Outcome of one invariant.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    /// Measured deviation.
    pub value: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        self.value <= self.tolerance
    }
}

fn result(name: &'static str, value: f64, tolerance: f64, detail: impl Into<String>) -> CheckResult {
    CheckResult {
        name,
        // NaN must fail
        value: if value.is_nan() { f64::INFINITY } else { value },
        tolerance,
        detail: detail.into(),
    }
}

const VARIANCES: [f64; 4] = [0.1, 0.5, 1.0, 2.0];

fn hermite_recurrence() -> CheckResult {
    let mut worst = 0.0f64;
    for v in VARIANCES {
        for i in 0..=40 {
            let z = (-4.0 + 0.2 * i as f64) * v.sqrt();
            for k in 0..=5 {
                let explicit = hermite_explicit(k, z, v).unwrap();
                let scale = v.powf(-(k as f64) / 2.0);
                worst = worst.max((hermite_unchecked(k, z, v) - explicit).abs() / scale);
            }
        }
    }
    result("hermite recurrence", worst, 1e-12, "recurrence vs explicit polynomials, k ≤ 5")
}

fn hermite_derivative() -> CheckResult {
    let worst = VARIANCES.iter().map(|&v| symbolic_diff_check(5, v)).fold(0.0, f64::max);
    result("hermite derivative identity", worst, 1e-5, "H_k φ against differentiated φ")
}

fn heat_equation() -> CheckResult {
    // ∂_v(H_k φ) = ½ ∂_zz(H_k φ)
    let mut worst = 0.0f64;
    for v in VARIANCES {
        let g = |k: usize, z: f64, v: f64| hermite_unchecked(k, z, v) * gaussian_pdf_unchecked(z, v);
        let (hv, hz) = (5e-4 * v, 5e-3 * v.sqrt());
        for i in 0..=40 {
            let z = (-4.0 + 0.2 * i as f64) * v.sqrt();
            for k in 0..=5 {
                // fourth-order stencils
                let dv = (-g(k, z, v + 2.0 * hv) + 8.0 * g(k, z, v + hv) - 8.0 * g(k, z, v - hv) + g(k, z, v - 2.0 * hv))
                    / (12.0 * hv);
                let dzz = (-g(k, z + 2.0 * hz, v) + 16.0 * g(k, z + hz, v) - 30.0 * g(k, z, v) + 16.0 * g(k, z - hz, v)
                    - g(k, z - 2.0 * hz, v))
                    / (12.0 * hz * hz);
                let scale = gaussian_pdf_unchecked(0.0, v) * v.powf(-(k as f64 + 2.0) / 2.0);
                worst = worst.max((dv - 0.5 * dzz).abs() / scale);
            }
        }
    }
    result("heat equation", worst, 1e-5, "Hermite densities solve ∂_v = ½∂_zz")
}

fn pairing_identity() -> CheckResult {
    let mut worst = 0.0f64;
    let functions = [
        TestFunction::CosShifted { a: 1.0, c: 1.0 },
        TestFunction::SinScaled { a: 0.7 },
        TestFunction::GaussBump { s: 0.8 },
        TestFunction::Logistic,
    ];
    for f in functions {
        for v in VARIANCES {
            for k in 0..=5 {
                let lhs = pair_integral(&f, HermiteOrder::new(k).unwrap(), Variance::new(v).unwrap())
                    .map(|p| p.value)
                    .unwrap_or(f64::NAN);
                let rhs = direct_pairing(|z| f.value(z), k, v).unwrap_or(f64::NAN);
                worst = worst.max((lhs - rhs).abs());
            }
        }
    }
    result("pairing identity", worst, 1e-8, "∫f H_k φ against E f^(k)")
}

fn expansion_normalisation() -> CheckResult {
    // Riemann sum over ±12 standard deviations
    let coeffs = ExpansionCoefficients {
        v0: 0.7,
        a1: 0.3,
        a3: -0.4,
        a5: 0.2,
    };
    let mut worst = 0.0f64;
    for n in [1u64, 4, 64] {
        let h = 1e-3;
        let half = (12.0 * coeffs.v0.sqrt() / h) as i64;
        let mut total = 0.0;
        for i in -half..=half {
            let z = i as f64 * h;
            let corr = coeffs.a1 * hermite_unchecked(1, z, coeffs.v0)
                + coeffs.a3 * hermite_unchecked(3, z, coeffs.v0)
                + coeffs.a5 * hermite_unchecked(5, z, coeffs.v0);
            total += (1.0 + corr / (n as f64).sqrt()) * gaussian_pdf_unchecked(z, coeffs.v0);
        }
        worst = worst.max((total * h - 1.0).abs());
    }
    result("expansion normalisation", worst, 1e-8, "∫ Q_n dz = 1")
}

fn identity_skewness() -> CheckResult {
    let coeffs = ExpansionCoefficients {
        v0: 0.5,
        a1: 0.0,
        a3: 1.0 / 6.0,
        a5: 0.0,
    };
    let got = expansion_value(&TestFunction::Monomial { j: 3 }, &coeffs, 16).unwrap_or(f64::NAN);
    result("identity skewness", (got - 0.25).abs(), 0.0, format!("E_Q[z³] = {got}"))
}

fn model_derivatives() -> CheckResult {
    let models = [
        GModel::brownian_identity(),
        GModel::exp_pair(0.5, 0.0, 0.5, 0.0).unwrap(),
        GModel::exp_pair(0.3, -0.1, -0.4, 0.2).unwrap(),
        GModel::bs_delta_hedge(100.0, 0.2, 100.0, 2.0, 1.0).unwrap(),
    ];
    let mut worst = 0.0f64;
    let mut detail = String::new();
    for m in &models {
        match m.derivative_check(1.0) {
            Ok(c) if !(c.max_rel_err <= worst) => {
                worst = c.max_rel_err;
                detail = format!("{m} {} at t={}, w={}", c.partial, c.t, c.w);
            }
            Ok(_) => {}
            Err(e) => return result("model derivatives", f64::INFINITY, 1e-4, e.to_string()),
        }
    }
    result("model derivatives", worst, 1e-4, detail)
}

fn deterministic_collapse() -> CheckResult {
    // g_X = (1 + t) w, g_Y = (2 − t) w: Γ, Σ deterministic
    let model = GModel::custom("linear_in_w", |t, w| PairPartials {
        x: Partials {
            value: (1.0 + t) * w,
            dt: w,
            dw: 1.0 + t,
            dtw: 1.0,
            ..Default::default()
        },
        y: Partials {
            value: (2.0 - t) * w,
            dt: -w,
            dw: 2.0 - t,
            dtw: -1.0,
            ..Default::default()
        },
    });
    let sample = GridSpec::new(1.0, 16, 64)
        .map(|spec| sample_path(5, StreamId::new(0), &spec))
        .and_then(|path| coefficient_trajectory(&model, &path))
        .and_then(|t| expansion_coefficients(&t, &dv_trajectories(&t)));
    match sample {
        Ok(s) => {
            // (1/6)∫((1+t)(2−t))³ dt
            let a3_target = 1429.0 / 140.0 / 6.0;
            let dev = if s.a5 == 0.0 { (s.a3 - a3_target).abs() } else { f64::INFINITY };
            result("deterministic collapse", dev, 1e-5, format!("a5 = {}, a3 = {}", s.a5, s.a3))
        }
        Err(e) => result("deterministic collapse", f64::INFINITY, 1e-5, e.to_string()),
    }
}

fn determinism(threads: Option<usize>) -> CheckResult {
    let run = |t: Option<usize>| {
        convergence_study(
            &GModel::exp_pair(0.5, 0.0, 0.5, 0.0).unwrap(),
            &TestFunction::CosShifted { a: 1.0, c: 1.0 },
            &[4, 16],
            FineSteps::Fixed(16),
            1.0,
            &McConfig::new(17, 512).with_threads(t),
        )
    };
    let other = match threads {
        Some(1) => Some(3),
        _ => Some(1),
    };
    match (run(threads), run(other)) {
        (Ok(a), Ok(b)) => {
            let same = format!("{:?}", a.rows) == format!("{:?}", b.rows);
            result("determinism", if same { 0.0 } else { 1.0 }, 0.0, "study rows under two worker counts")
        }
        (Err(e), _) | (_, Err(e)) => result("determinism", f64::INFINITY, 0.0, e.to_string()),
    }
}

/// Runs every invariant in order; `threads` is the worker count for the
/// simulation smoke test.
pub fn run_checks(threads: Option<usize>) -> Vec<CheckResult> {
    vec![
        hermite_recurrence(),
        hermite_derivative(),
        heat_equation(),
        pairing_identity(),
        expansion_normalisation(),
        identity_skewness(),
        model_derivatives(),
        deterministic_collapse(),
        determinism(threads),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fresh_build_passes() {
        for c in run_checks(Some(2)) {
            assert!(c.passed(), "{c:?}");
        }
    }
}
