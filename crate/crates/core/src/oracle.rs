//! Independent reference computations. Nothing here goes through the path
//! engine or the coefficient assembly; the values pin the tests of those
//! modules through `tests/fixtures/oracles.json`.
//!
//! Regenerate the fixtures with
//! `cargo run -p ito-edgeworth-cli --release -- regen-fixtures`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::McEstimate;
use crate::hermite::{gaussian_pdf_unchecked, hermite_unchecked, GaussHermite, MAX_NODES};
use crate::rng::NormalStream;
use crate::sum::{pairwise_sum, Trapezoid};

/// Fixture schema version.
pub const FIXTURE_SCHEMA: u32 = 1;

/// Seed of the simulation oracles in the fixtures file.
pub const FIXTURE_SEED: u64 = 20_251_015;

/// Paths of the simulation oracles in the fixtures file.
pub const FIXTURE_PATHS: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleMethod {
    ClosedForm,
    QuadratureRefinement,
    CoarseIncrementSimulation,
    SymbolicDifferentiation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub name: String,
    pub value: f64,
    /// Monte Carlo standard error, for simulation oracles.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stderr: Option<f64>,
    pub method: OracleMethod,
    /// Accepted deviation of an implementation from `value`; for
    /// simulation oracles, in units of the combined standard error.
    pub tolerance: f64,
}

impl OracleReport {
    fn exact(name: &str, value: f64, method: OracleMethod, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            value,
            stderr: None,
            method,
            tolerance,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FixtureFile {
    pub schema: u32,
    pub regenerate: String,
    pub entries: Vec<OracleReport>,
}

impl FixtureFile {
    pub fn get(&self, name: &str) -> Option<&OracleReport> {
        self.entries.iter().find(|e| e.name == name)
    }
}

/// Sample moments of `Z^n_T` for `X = Y = W`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentityMoments {
    pub mean: McEstimate,
    pub var: McEstimate,
    pub third_cumulant: McEstimate,
}

/// Simulates `Z^n_T = √n Σ_j ½((ΔW_j)² − T/n)` exactly from the coarse
/// increments; targets are mean 0, variance `T²/2`, third cumulant
/// `T³ n^{-1/2}`. Standard errors come from the influence functions of the
/// central moments.
pub fn brownian_identity_moments(n: usize, horizon: f64, paths: u64, seed: u64) -> Result<IdentityMoments> {
    if n == 0 || paths < 2 || !(horizon > 0.0) {
        return Err(Error::InvalidParameter {
            name: "brownian_identity_moments".into(),
            reason: "need n ≥ 1, paths ≥ 2 and T > 0".into(),
        });
    }
    let h = horizon / n as f64;
    let scale = h.sqrt();
    let root_n = (n as f64).sqrt();
    let z: Vec<f64> = (0..paths)
        .map(|p| {
            let mut rng = NormalStream::new(seed, p);
            let mut block = 0.0;
            for _ in 0..n {
                let dw = scale * rng.next_standard();
                block += 0.5 * (dw * dw - h);
            }
            root_n * block
        })
        .collect();
    Ok(central_moments(&z))
}

fn central_moments(z: &[f64]) -> IdentityMoments {
    let count = z.len() as f64;
    let mu = pairwise_sum(z) / count;
    let d: Vec<f64> = z.iter().map(|x| x - mu).collect();
    let m2 = pairwise_sum(&d.iter().map(|x| x * x).collect::<Vec<_>>()) / count;
    let m3 = pairwise_sum(&d.iter().map(|x| x * x * x).collect::<Vec<_>>()) / count;
    let se = |psi: Vec<f64>| {
        let mean = pairwise_sum(&psi) / count;
        let var = pairwise_sum(&psi.iter().map(|p| (p - mean).powi(2)).collect::<Vec<_>>()) / (count - 1.0);
        (var / count).sqrt()
    };
    let var_se = se(d.iter().map(|x| x * x - m2).collect());
    let k3_se = se(d.iter().map(|x| x * x * x - m3 - 3.0 * m2 * x).collect());
    IdentityMoments {
        mean: McEstimate::new(mu, (m2 / count).sqrt(), z.len() as u64),
        var: McEstimate::new(m2, var_se, z.len() as u64),
        third_cumulant: McEstimate::new(m3, k3_se, z.len() as u64),
    }
}

/// Exact `E[Z²]` and `E[Z³]` of the fine-grid left-point sum for `X = Y = W`:
/// `T²(m−1)/(2m)` and `n^{-1/2} T³ (m−1)(m−2)/m²`.
pub fn identity_fine_grid_moments(n: usize, m: usize, horizon: f64) -> (f64, f64) {
    let m = m as f64;
    let second = horizon * horizon * (m - 1.0) / (2.0 * m);
    let third = horizon.powi(3) * (m - 1.0) * (m - 2.0) / (m * m) / (n as f64).sqrt();
    (second, third)
}

/// Exact `Var(√n(V^n_0 − V₀))` on the fine grid for constant `ΓΣ = c`:
/// `(c⁴T²/3)(m−1)(m²−m+1)/m³`, independent of `n`.
pub fn constant_coefficient_clt_variance(gamma_sigma: f64, horizon: f64, m: usize) -> f64 {
    let m = m as f64;
    gamma_sigma.powi(4) * horizon * horizon / 3.0 * (m - 1.0) * (m * m - m + 1.0) / (m * m * m)
}

/// `(1/3) E∫₀ᵀ Γ⁴Σ⁴ dt` for `exp_pair(a, b, c, d)`:
/// `(1/3)(ac)⁴ (e^{λT} − 1)/λ` with `λ = 4(b+d) + 8(a+c)²`.
pub fn exp_pair_clt_prediction(a: f64, b: f64, c: f64, d: f64, horizon: f64) -> f64 {
    let lambda = 4.0 * (b + d) + 8.0 * (a + c) * (a + c);
    let time = if lambda == 0.0 { horizon } else { (lambda * horizon).exp_m1() / lambda };
    (a * c).powi(4) * time / 3.0
}

/// Time integrands with known integrals, for the refinement oracle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "id", rename_all = "snake_case")]
pub enum Integrand {
    Constant { value: f64 },
    Exponential { rate: f64 },
    /// Integrands of `V₀, A₁, A₃, A₅` for `exp_pair(a, 0, c, 0)` on the
    /// path `W ≡ 0`, written out by hand.
    ZeroPathV0 { a: f64, c: f64 },
    ZeroPathA1 { a: f64, c: f64 },
    ZeroPathA3 { a: f64, c: f64 },
    ZeroPathA5 { a: f64, c: f64 },
}

impl Integrand {
    fn eval(&self, t: f64, horizon: f64) -> f64 {
        match *self {
            Integrand::Constant { value } => value,
            Integrand::Exponential { rate } => (rate * t).exp(),
            Integrand::ZeroPathV0 { a, c } => 0.5 * (a * c).powi(2),
            Integrand::ZeroPathA1 { a, c } => {
                // Ξ = a²/2, Θ = c²/2, D⁺Θ = c³/2, Γ = a
                0.5 * (0.25 * a * a * c * c + 0.5 * c * c * c * a)
            }
            Integrand::ZeroPathA3 { a, c } => {
                let ac = a * c;
                let dv = (a + c) * ac * ac * (horizon - t);
                let d2v = 2.0 * (a + c) * (a + c) * ac * ac * (horizon - t);
                let pre = 0.5 * a * a * c + 0.5 * c * c * a + c * c * a;
                0.25 * (pre * dv + ac * d2v) + ac.powi(3) / 6.0
            }
            Integrand::ZeroPathA5 { a, c } => {
                let ac = a * c;
                let dv = (a + c) * ac * ac * (horizon - t);
                0.125 * ac * dv * dv
            }
        }
    }

    /// Exact integral over `[0, T]`.
    pub fn exact(&self, horizon: f64) -> f64 {
        let t = horizon;
        match *self {
            Integrand::Constant { value } => value * t,
            Integrand::Exponential { rate } => (rate * t).exp_m1() / rate,
            Integrand::ZeroPathV0 { a, c } => 0.5 * (a * c).powi(2) * t,
            Integrand::ZeroPathA1 { .. } => self.eval(0.0, t) * t,
            Integrand::ZeroPathA3 { a, c } => {
                let ac = a * c;
                let pre = 0.5 * a * a * c + 0.5 * c * c * a + c * c * a;
                let lin = 0.25 * (pre * (a + c) * ac * ac + ac * 2.0 * (a + c) * (a + c) * ac * ac);
                lin * t * t / 2.0 + ac.powi(3) / 6.0 * t
            }
            Integrand::ZeroPathA5 { a, c } => {
                let ac = a * c;
                0.125 * ac * ((a + c) * ac * ac).powi(2) * t.powi(3) / 3.0
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RefinementReport {
    pub intervals: Vec<usize>,
    pub values: Vec<f64>,
    /// `(I_k − I_{k+1}) / (I_{k+1} − I_{k+2})`; `None` where the
    /// differences are at roundoff level (the rule is already exact).
    pub ratios: Vec<Option<f64>>,
    /// Richardson extrapolation of the two finest levels.
    pub extrapolated: f64,
}

/// Trapezoid values at `base·2^k` intervals for `k < levels`, the
/// convergence ratios and the Richardson limit. Fails unless every
/// non-degenerate ratio is within `4 ± 0.1`.
pub fn quadrature_refinement(integrand: &Integrand, horizon: f64, base: usize, levels: usize) -> Result<RefinementReport> {
    if levels < 3 || base == 0 {
        return Err(Error::InvalidParameter {
            name: "levels".into(),
            reason: "need at least 3 levels and a positive base".into(),
        });
    }
    let intervals: Vec<usize> = (0..levels).map(|k| base << k).collect();
    let values: Vec<f64> = intervals
        .iter()
        .map(|&k| {
            let mut t = Trapezoid::new();
            for i in 0..=k {
                t.push(integrand.eval(horizon * i as f64 / k as f64, horizon));
            }
            t.integral(horizon / k as f64)
        })
        .collect();
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let ratios: Vec<Option<f64>> = values
        .windows(3)
        .map(|w| {
            let (d0, d1) = (w[0] - w[1], w[1] - w[2]);
            (d1.abs() > 1e-12 * scale).then(|| d0 / d1)
        })
        .collect();
    if let Some(bad) = ratios.iter().flatten().find(|r| (**r - 4.0).abs() > 0.1) {
        return Err(Error::Estimation(format!("trapezoid refinement ratio {bad} outside 4 ± 0.1")));
    }
    let (fine, coarse) = (values[levels - 1], values[levels - 2]);
    Ok(RefinementReport {
        intervals,
        extrapolated: fine + (fine - coarse) / 3.0,
        values,
        ratios,
    })
}

/// Largest relative deviation of `H_k φ` from the `k`-th derivative of `φ`
/// obtained by finite differences, one order at a time:
/// `H_k φ = −∂_z(H_{k−1} φ)` at step `10⁻³√v`, over `z ∈ [−4√v, 4√v]`.
pub fn symbolic_diff_check(k: usize, v: f64) -> f64 {
    let h = 1e-3 * v.sqrt();
    let mut worst = 0.0f64;
    for i in 0..=80 {
        let z = (-4.0 + 0.1 * i as f64) * v.sqrt();
        for j in 1..=k {
            let g = |x: f64| hermite_unchecked(j - 1, x, v) * gaussian_pdf_unchecked(x, v);
            let fd = -(g(z + h) - g(z - h)) / (2.0 * h);
            let exact = hermite_unchecked(j, z, v) * gaussian_pdf_unchecked(z, v);
            let scale = gaussian_pdf_unchecked(0.0, v) * v.powf(-(j as f64) / 2.0);
            worst = worst.max((fd - exact).abs() / scale);
        }
    }
    worst
}

/// Explicit Hermite polynomials `H_k(z, v)` for `k ≤ 5`.
pub fn hermite_explicit(k: usize, z: f64, v: f64) -> Option<f64> {
    let x = z / v;
    Some(match k {
        0 => 1.0,
        1 => x,
        2 => x * x - 1.0 / v,
        3 => x.powi(3) - 3.0 * x / v,
        4 => x.powi(4) - 6.0 * x * x / v + 3.0 / (v * v),
        5 => x.powi(5) - 10.0 * x.powi(3) / v + 15.0 * x / (v * v),
        _ => return None,
    })
}

/// `∫ g(z) H_k(z, v) φ(z, v) dz` by the largest Gauss–Hermite rule, with the
/// Hermite factor taken from the explicit polynomials.
pub fn direct_pairing<G: Fn(f64) -> f64>(g: G, k: usize, v: f64) -> Result<f64> {
    let rule = GaussHermite::new(MAX_NODES)?;
    let hk = |z: f64| hermite_explicit(k, z, v).unwrap_or_else(|| hermite_unchecked(k, z, v));
    Ok(rule.expectation(0.0, v, |z| g(z) * hk(z)))
}

fn fixture_entries(paths: u64, seed: u64) -> Result<Vec<OracleReport>> {
    use OracleMethod::*;
    let mut out = Vec::new();
    let mut push = |name: &str, value: f64, method, tol| out.push(OracleReport::exact(name, value, method, tol));

    push("hermite.pdf_z0_v1", 1.0 / (2.0 * PI).sqrt(), ClosedForm, 1e-15);
    push("hermite.pdf_z0_v0.5", 1.0 / PI.sqrt(), ClosedForm, 1e-15);
    push("hermite.h1_z1_v1", hermite_explicit(1, 1.0, 1.0).unwrap(), SymbolicDifferentiation, 1e-14);
    push("hermite.h3_z1_v1", hermite_explicit(3, 1.0, 1.0).unwrap(), SymbolicDifferentiation, 1e-14);
    push("hermite.h3_z2_v0.5", hermite_explicit(3, 2.0, 0.5).unwrap(), SymbolicDifferentiation, 1e-12);
    push("hermite.h5_z0_v0.5", hermite_explicit(5, 0.0, 0.5).unwrap(), SymbolicDifferentiation, 0.0);
    let phi1 = (-1.0f64).exp() / PI.sqrt();
    push("hermite.qn_z1_v0.5_a3_sixth_n4", phi1 * (2.0 / 3.0), ClosedForm, 1e-15);
    push("pairing.cos_a1_c0_k0_v0.5", (-0.25f64).exp(), ClosedForm, 1e-15);
    push("pairing.cos_a1_c1_k3_v0.5", -(1.0f64).sin() * (-0.25f64).exp(), ClosedForm, 1e-15);
    push("pairing.monomial3_k3_v1", direct_pairing(|z| z.powi(3), 3, 1.0)?, QuadratureRefinement, 1e-12);
    let base = (1.0f64).cos() * (-0.25f64).exp();
    push(
        "expansion.cos_a1_c1_v0.5_a3_sixth_n16",
        base + 0.25 * (1.0 / 6.0) * (-(1.0f64).sin() * (-0.25f64).exp()),
        ClosedForm,
        1e-15,
    );
    // d1_gs = 2(a+c)(ac)² e^{2(a+c)w}, Ξ = (b + a²/2) g_X at the origin
    push("model.exp_pair_half.d1_gs_origin", 2.0 * 1.0 * 0.0625, SymbolicDifferentiation, 1e-15);
    push("model.exp_pair_half.xi_origin", 0.125, SymbolicDifferentiation, 1e-15);

    let (a, c) = (0.5, 0.5);
    for (name, integrand) in [
        ("malliavin.exp_pair_half.zero_path.v0", Integrand::ZeroPathV0 { a, c }),
        ("malliavin.exp_pair_half.zero_path.a1", Integrand::ZeroPathA1 { a, c }),
        ("malliavin.exp_pair_half.zero_path.a3", Integrand::ZeroPathA3 { a, c }),
        ("malliavin.exp_pair_half.zero_path.a5", Integrand::ZeroPathA5 { a, c }),
    ] {
        let r = quadrature_refinement(&integrand, 1.0, 16, 6)?;
        push(name, r.extrapolated, QuadratureRefinement, 1e-7);
    }

    push("clt.identity.predicted", 1.0 / 3.0, ClosedForm, 1e-15);
    push("clt.exp_pair_half.predicted", exp_pair_clt_prediction(0.5, 0.0, 0.5, 0.0, 1.0), ClosedForm, 1e-12);
    push("clt.exp_pair_fifth.predicted", exp_pair_clt_prediction(0.2, 0.0, 0.2, 0.0, 1.0), ClosedForm, 1e-12);
    push("clt.identity.fine_factor_m128", constant_coefficient_clt_variance(1.0, 1.0, 128) * 3.0, ClosedForm, 1e-15);
    let (second, third) = identity_fine_grid_moments(16, 64, 1.0);
    push("path.identity.fine_second_moment_n16_m64", second, ClosedForm, 1e-15);
    push("path.identity.fine_third_moment_n16_m64", third, ClosedForm, 1e-15);
    push("oracle.identity.third_cumulant_n1", 1.0, ClosedForm, 0.0);

    let sim = brownian_identity_moments(16, 1.0, paths, seed)?;
    for (name, est) in [
        ("oracle.identity.mean_n16", sim.mean),
        ("oracle.identity.var_n16", sim.var),
        ("oracle.identity.third_cumulant_n16", sim.third_cumulant),
    ] {
        out.push(OracleReport {
            name: name.into(),
            value: est.mean,
            stderr: Some(est.stderr),
            method: CoarseIncrementSimulation,
            tolerance: 4.0,
        });
    }
    Ok(out)
}

/// Every oracle value, as stored in the fixtures file.
pub fn fixtures() -> Result<FixtureFile> {
    fixtures_with(FIXTURE_PATHS, FIXTURE_SEED)
}

/// Fixtures with a custom simulation budget, for reduced-cost drift checks.
pub fn fixtures_with(paths: u64, seed: u64) -> Result<FixtureFile> {
    Ok(FixtureFile {
        schema: FIXTURE_SCHEMA,
        regenerate: "cargo run -p ito-edgeworth-cli --release -- regen-fixtures".into(),
        entries: fixture_entries(paths, seed)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_block_third_cumulant_is_horizon() {
        // Z = ½√1 (W_T² − T): κ₃ = (1/8)·8T³ = T³ with T = 1
        let m = brownian_identity_moments(1, 1.0, 200_000, 3).unwrap();
        assert!((m.third_cumulant.mean - 1.0).abs() < 4.0 * m.third_cumulant.stderr, "{:?}", m.third_cumulant);
        assert!((m.var.mean - 0.5).abs() < 4.0 * m.var.stderr);
    }

    #[test]
    fn refinement_of_smooth_and_constant_integrands() {
        let c = quadrature_refinement(&Integrand::Constant { value: 0.7 }, 1.0, 8, 4).unwrap();
        assert!(c.values.iter().all(|&v| (v - 0.7).abs() < 1e-15));
        assert!(c.ratios.iter().all(Option::is_none));
        let e = quadrature_refinement(&Integrand::Exponential { rate: 1.3 }, 1.0, 8, 5).unwrap();
        assert!(e.ratios.iter().all(|r| r.is_some()));
        assert!((e.extrapolated - Integrand::Exponential { rate: 1.3 }.exact(1.0)).abs() < 1e-8);
    }

    #[test]
    fn zero_path_integrals_match_closed_forms() {
        let (a, c) = (0.5, 0.5);
        for (integrand, exact) in [
            (Integrand::ZeroPathV0 { a, c }, 1.0 / 32.0),
            (Integrand::ZeroPathA1 { a, c }, 3.0 / 128.0),
            (Integrand::ZeroPathA3 { a, c }, 13.0 / 1536.0),
            (Integrand::ZeroPathA5 { a, c }, 1.0 / 24576.0),
        ] {
            assert!((integrand.exact(1.0) - exact).abs() < 1e-16, "{integrand:?}");
            let r = quadrature_refinement(&integrand, 1.0, 16, 5).unwrap();
            assert!((r.extrapolated - exact).abs() < 1e-15, "{integrand:?}: {}", r.extrapolated);
        }
        // the a5 integrand is quadratic: trapezoid error is exactly ∝ h²
        let r = quadrature_refinement(&Integrand::ZeroPathA5 { a, c }, 1.0, 16, 5).unwrap();
        assert!(r.ratios.iter().flatten().all(|x| (x - 4.0).abs() < 1e-6));
    }

    #[test]
    fn refinement_rejects_bad_input() {
        assert!(quadrature_refinement(&Integrand::Constant { value: 1.0 }, 1.0, 8, 2).is_err());
    }

    #[test]
    fn symbolic_check_is_tight() {
        for k in 1..=5 {
            for v in [0.2, 1.0, 2.0] {
                assert!(symbolic_diff_check(k, v) < 1e-5, "k={k} v={v}");
            }
        }
    }

    #[test]
    fn explicit_hermite_examples() {
        assert_eq!(hermite_explicit(1, 1.0, 1.0), Some(1.0));
        assert_eq!(hermite_explicit(3, 1.0, 1.0), Some(-2.0));
        assert_eq!(hermite_explicit(3, 2.0, 0.5), Some(40.0));
        assert_eq!(hermite_explicit(5, 0.0, 0.5), Some(0.0));
        assert_eq!(hermite_explicit(6, 0.0, 0.5), None);
    }

    #[test]
    fn clt_predictions() {
        assert!((exp_pair_clt_prediction(0.2, 0.0, 0.2, 0.0, 1.0) - 1.7310931503795e-6).abs() < 1e-17);
        assert!((exp_pair_clt_prediction(0.5, 0.0, 0.5, 0.0, 1.0) - 0.0625f64.powi(2) * (8.0f64.exp() - 1.0) / 24.0).abs() < 1e-14);
        assert_eq!(constant_coefficient_clt_variance(1.0, 1.0, 2), 1.0 / 8.0);
    }
}
