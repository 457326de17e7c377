//! Monte Carlo estimation of `E[f(Z^n_T)]`, of the expansion value
//! `∫ f(z) E[Q_n(z)] dz`, and of the stable CLT variance of `V^n_0`.
//!
//! Per-path values are kept in stream order and reduced by pairwise
//! summation, so every estimate is bit-identical for any thread count.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hermite::{PairingEngine, TestFunction};
use crate::malliavin::{dv_trajectories, expansion_coefficients, variance_functionals, ExpansionSample};
use crate::model::{GModel, Hypotheses};
use crate::path::{
    coefficient_trajectory, discretization_error, discretization_error_from, sample_path, ErrorSample,
    GridSpec, PathGrid, StreamId,
};
use crate::sum::pairwise_sum;

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.96;

/// Stream indices of independent-mode expansion samples start here.
pub const INDEPENDENT_STREAM_OFFSET: u64 = 1 << 62;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n_paths: u64,
    pub ci95: (f64, f64),
}

impl McEstimate {
    pub fn new(mean: f64, stderr: f64, n_paths: u64) -> Self {
        Self {
            mean,
            stderr,
            n_paths,
            ci95: (mean - Z95 * stderr, mean + Z95 * stderr),
        }
    }

    /// Mean and Bessel-corrected standard error. `n_paths` may exceed the
    /// sample count when samples are antithetic pair averages.
    pub fn from_samples(samples: &[f64], n_paths: u64) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::Estimation(format!(
                "need at least 2 samples, got {}",
                samples.len()
            )));
        }
        let count = samples.len() as f64;
        // Exact for constant samples, so deterministic quantities report
        // stderr 0.
        if samples.iter().all(|&x| x == samples[0]) {
            return Ok(Self::new(samples[0], 0.0, n_paths));
        }
        let mean = pairwise_sum(samples) / count;
        let centered: Vec<f64> = samples.iter().map(|&x| (x - mean) * (x - mean)).collect();
        let var = pairwise_sum(&centered) / (count - 1.0);
        Ok(Self::new(mean, (var / count).sqrt(), n_paths))
    }

    /// Sample variance with the delta-method standard error
    /// `√((μ₄ − s⁴)/N)`.
    pub fn variance_of(samples: &[f64], n_paths: u64) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::Estimation("need at least 2 samples for a variance".into()));
        }
        let count = samples.len() as f64;
        let mean = pairwise_sum(samples) / count;
        let squares: Vec<f64> = samples.iter().map(|&x| (x - mean).powi(2)).collect();
        let fourths: Vec<f64> = squares.iter().map(|&s| s * s).collect();
        let var = pairwise_sum(&squares) / (count - 1.0);
        let m4 = pairwise_sum(&fourths) / count;
        let se = ((m4 - var * var).max(0.0) / count).sqrt();
        Ok(Self::new(var, se, n_paths))
    }

    pub fn contains(&self, value: f64) -> bool {
        self.ci95.0 <= value && value <= self.ci95.1
    }
}

/// Per-path values of one quantity, in stream order. Estimates of a
/// concatenation equal estimates of the whole range bit for bit.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SampleSet {
    values: Vec<f64>,
    n_paths: u64,
}

impl SampleSet {
    pub fn new(values: Vec<f64>, n_paths: u64) -> Self {
        Self { values, n_paths }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Appends a later stream range.
    pub fn merge(mut self, later: SampleSet) -> Self {
        self.values.extend(later.values);
        self.n_paths += later.n_paths;
        self
    }

    pub fn estimate(&self) -> Result<McEstimate> {
        McEstimate::from_samples(&self.values, self.n_paths)
    }
}

/// How the expansion side is sampled relative to the Monte Carlo side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Same Brownian streams for both sides.
    #[default]
    Coupled,
    /// Disjoint streams, for unbiasedness audits.
    Independent,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Coupled => "coupled",
            Mode::Independent => "independent",
        }
    }
}

/// Sampling settings shared by every estimator.
#[derive(Debug, Clone)]
pub struct McConfig {
    pub seed: u64,
    /// Number of simulated paths; with antithetic pairing each pair counts
    /// as two.
    pub paths: u64,
    /// First stream index; streams `first_stream..first_stream + paths`
    /// (pairs, under antithetic pairing) are used.
    pub first_stream: u64,
    pub antithetic: bool,
    pub mode: Mode,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
    pub pairing: PairingEngine,
}

impl McConfig {
    pub fn new(seed: u64, paths: u64) -> Self {
        Self {
            seed,
            paths,
            first_stream: 0,
            antithetic: false,
            mode: Mode::Coupled,
            threads: None,
            pairing: PairingEngine::default(),
        }
    }

    pub fn with_antithetic(mut self, on: bool) -> Self {
        self.antithetic = on;
        self
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_threads(mut self, threads: Option<usize>) -> Self {
        self.threads = threads;
        self
    }

    pub fn with_first_stream(mut self, first: u64) -> Self {
        self.first_stream = first;
        self
    }

    pub fn with_pairing(mut self, pairing: PairingEngine) -> Self {
        self.pairing = pairing;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.paths < 2 {
            return Err(Error::Estimation(format!("paths must be at least 2, got {}", self.paths)));
        }
        if self.antithetic && self.paths % 2 != 0 {
            return Err(Error::Estimation(format!(
                "antithetic pairing needs an even path count, got {}",
                self.paths
            )));
        }
        if self.first_stream.saturating_add(self.paths) > INDEPENDENT_STREAM_OFFSET {
            return Err(Error::Estimation("stream range too large".into()));
        }
        if self.threads == Some(0) {
            return Err(Error::Estimation("threads must be at least 1".into()));
        }
        Ok(())
    }

    /// Streams in reduction order: `i` alone, or `i` then its twin.
    fn streams(&self, base: u64) -> Vec<StreamId> {
        let start = base + self.first_stream;
        if self.antithetic {
            (start..start + self.paths / 2)
                .flat_map(|i| [StreamId::new(i), StreamId::new(i).twin()])
                .collect()
        } else {
            (start..start + self.paths).map(StreamId::new).collect()
        }
    }

    /// Per-path values, averaged over antithetic pairs when enabled.
    fn samples(&self, values: Vec<f64>) -> SampleSet {
        if self.antithetic {
            let pairs = values.chunks_exact(2).map(|p| 0.5 * (p[0] + p[1])).collect();
            SampleSet::new(pairs, self.paths)
        } else {
            SampleSet::new(values, self.paths)
        }
    }

    /// Maps every stream in order, in parallel. The first failing stream in
    /// stream order determines the error.
    fn map_streams<T, F>(&self, base: u64, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(StreamId) -> Result<T> + Sync + Send,
    {
        let streams = self.streams(base);
        let run = || streams.par_iter().map(|&s| f(s)).collect::<Vec<_>>();
        let results = match self.threads {
            Some(count) => rayon::ThreadPoolBuilder::new()
                .num_threads(count)
                .build()
                .map_err(|e| Error::Estimation(format!("cannot start worker pool: {e}")))?
                .install(run),
            None => run(),
        };
        results.into_iter().collect()
    }
}

/// Error draw and expansion coefficients of one path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathRecord {
    pub error: ErrorSample,
    pub expansion: ExpansionSample,
}

fn path_record(model: &GModel, path: &PathGrid) -> Result<PathRecord> {
    let traj = coefficient_trajectory(model, path)?;
    let error = discretization_error_from(&traj)?;
    let mal = dv_trajectories(&traj);
    let expansion = expansion_coefficients(&traj, &mal)?;
    Ok(PathRecord { error, expansion })
}

fn check_f(f: &TestFunction) -> Result<()> {
    f.validate()?;
    if f.max_registered_derivative() < 5 {
        return Err(Error::UnregisteredDerivative {
            function: f.to_string(),
            order: 5,
        });
    }
    Ok(())
}

/// `E[f(Z^n_T)]`.
pub fn estimate_error_expectation(
    model: &GModel,
    f: &TestFunction,
    spec: &GridSpec,
    cfg: &McConfig,
) -> Result<McEstimate> {
    cfg.validate()?;
    f.validate()?;
    let values = cfg.map_streams(0, |s| {
        let path = sample_path(cfg.seed, s, spec);
        Ok(f.value(discretization_error(model, &path)?.z))
    })?;
    cfg.samples(values).estimate()
}

/// Path-averaged `∫ f(z) Q_n(z) dz`; coupled mode uses the same streams as
/// [`estimate_error_expectation`].
pub fn estimate_expansion(model: &GModel, f: &TestFunction, spec: &GridSpec, cfg: &McConfig) -> Result<McEstimate> {
    cfg.validate()?;
    check_f(f)?;
    let base = match cfg.mode {
        Mode::Coupled => 0,
        Mode::Independent => INDEPENDENT_STREAM_OFFSET,
    };
    let n = spec.n() as u64;
    let values = cfg.map_streams(base, |s| {
        let rec = path_record(model, &sample_path(cfg.seed, s, spec))?;
        let c = rec.expansion.coefficients();
        Ok(cfg.pairing.expansion_value_unchecked(f, &c, n, c.v0))
    })?;
    cfg.samples(values).estimate()
}

/// Every path's records; independent mode also returns the expansion-side
/// records from the offset streams.
pub fn simulate_records(
    model: &GModel,
    spec: &GridSpec,
    cfg: &McConfig,
) -> Result<(Vec<PathRecord>, Option<Vec<PathRecord>>)> {
    cfg.validate()?;
    let sim = |base| cfg.map_streams(base, |s| path_record(model, &sample_path(cfg.seed, s, spec)));
    let main = sim(0)?;
    let other = match cfg.mode {
        Mode::Coupled => None,
        Mode::Independent => Some(sim(INDEPENDENT_STREAM_OFFSET)?),
    };
    Ok((main, other))
}

/// One row of a convergence study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReportRow {
    pub n: usize,
    pub m: usize,
    pub paths: u64,
    pub mc: McEstimate,
    /// Mixed-normal value with `A₁ = A₃ = A₅ = 0`.
    pub zeroth: McEstimate,
    pub expansion: McEstimate,
    /// `mc − expansion`; per-path in coupled mode.
    pub residual: McEstimate,
    /// `expansion − zeroth`, the first-order correction.
    pub correction: McEstimate,
    pub a1: McEstimate,
    pub a3: McEstimate,
    pub a5: McEstimate,
    pub v0: McEstimate,
    pub scaled_residual: f64,
    pub scaled_residual_stderr: f64,
}

/// Aggregates simulated records into a report row.
pub fn report_row(
    f: &TestFunction,
    spec: &GridSpec,
    cfg: &McConfig,
    main: &[PathRecord],
    independent: Option<&[PathRecord]>,
) -> Result<ReportRow> {
    check_f(f)?;
    let n = spec.n() as u64;
    let exp_side = independent.unwrap_or(main);
    let column = |records: &[PathRecord], g: &dyn Fn(&PathRecord) -> f64| {
        cfg.samples(records.iter().map(g).collect()).estimate()
    };
    let pairing = &cfg.pairing;
    let expansion_of = |r: &PathRecord| {
        let c = r.expansion.coefficients();
        pairing.expansion_value_unchecked(f, &c, n, c.v0)
    };
    let zeroth_of = |r: &PathRecord| pairing.gaussian_derivative_expectation(f, 0, r.expansion.v0, 0.0);
    let mc = column(main, &|r| f.value(r.error.z))?;
    let zeroth = column(exp_side, &zeroth_of)?;
    let expansion = column(exp_side, &expansion_of)?;
    let correction = column(exp_side, &|r| expansion_of(r) - zeroth_of(r))?;
    let residual = match independent {
        None => column(main, &|r| f.value(r.error.z) - expansion_of(r))?,
        Some(_) => McEstimate::new(
            mc.mean - expansion.mean,
            mc.stderr.hypot(expansion.stderr),
            cfg.paths,
        ),
    };
    let root_n = (n as f64).sqrt();
    Ok(ReportRow {
        n: spec.n(),
        m: spec.m(),
        paths: cfg.paths,
        mc,
        zeroth,
        expansion,
        residual,
        correction,
        a1: column(exp_side, &|r| r.expansion.a1)?,
        a3: column(exp_side, &|r| r.expansion.a3)?,
        a5: column(exp_side, &|r| r.expansion.a5)?,
        v0: column(exp_side, &|r| r.expansion.v0)?,
        scaled_residual: root_n * residual.mean,
        scaled_residual_stderr: root_n * residual.stderr,
    })
}

/// Fine-step count per coarse step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FineSteps {
    /// `max(64, ⌈8√n⌉)`
    #[default]
    Auto,
    Fixed(usize),
}

impl FineSteps {
    pub fn spec(&self, horizon: f64, n: usize) -> Result<GridSpec> {
        match *self {
            FineSteps::Auto => GridSpec::with_auto_m(horizon, n),
            FineSteps::Fixed(m) => GridSpec::new(horizon, n, m),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub model: String,
    pub f: String,
    pub horizon: f64,
    pub mode: Mode,
    pub antithetic: bool,
    pub seed: u64,
    pub hypotheses: Hypotheses,
    /// `f` lies outside the bounded-smooth class (monomials).
    pub diagnostic_only: bool,
    pub rows: Vec<ReportRow>,
}

impl ExperimentReport {
    fn empty(model: &GModel, f: &TestFunction, horizon: f64, cfg: &McConfig) -> Self {
        Self {
            model: model.to_string(),
            f: f.to_string(),
            horizon,
            mode: cfg.mode,
            antithetic: cfg.antithetic,
            seed: cfg.seed,
            hypotheses: model.hypotheses(),
            diagnostic_only: f.is_diagnostic_only(),
            rows: Vec::new(),
        }
    }
}

fn check_n_list(n_list: &[usize]) -> Result<()> {
    if n_list.is_empty() {
        return Err(Error::Estimation("n_list must not be empty".into()));
    }
    if n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Estimation("n_list must be strictly ascending".into()));
    }
    Ok(())
}

/// One row per `n`: Monte Carlo value, zeroth-order and first-order
/// expansion values and their residual.
pub fn convergence_study(
    model: &GModel,
    f: &TestFunction,
    n_list: &[usize],
    fine: FineSteps,
    horizon: f64,
    cfg: &McConfig,
) -> Result<ExperimentReport> {
    check_n_list(n_list)?;
    check_f(f)?;
    let mut report = ExperimentReport::empty(model, f, horizon, cfg);
    for &n in n_list {
        let spec = fine.spec(horizon, n)?;
        let (main, other) = simulate_records(model, &spec, cfg)?;
        report.rows.push(report_row(f, &spec, cfg, &main, other.as_deref())?);
    }
    Ok(report)
}

/// The same study on a grid with `factor` times as many fine steps, driven
/// by the same Brownian paths.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensitivityReport {
    pub factor: usize,
    pub base: ExperimentReport,
    pub refined: ExperimentReport,
}

/// Paths are drawn on the refined grid and coarsened, so the base rows are
/// exact draws on the base grid and the two reports share their noise.
pub fn fine_grid_sensitivity(
    model: &GModel,
    f: &TestFunction,
    n_list: &[usize],
    fine: FineSteps,
    horizon: f64,
    factor: usize,
    cfg: &McConfig,
) -> Result<SensitivityReport> {
    check_n_list(n_list)?;
    check_f(f)?;
    cfg.validate()?;
    if factor < 2 {
        return Err(Error::Estimation("refinement factor must be at least 2".into()));
    }
    let mut base = ExperimentReport::empty(model, f, horizon, cfg);
    let mut refined = base.clone();
    for &n in n_list {
        let spec = fine.spec(horizon, n)?;
        let fine_spec = spec.refined(factor)?;
        let sim = |offset| {
            cfg.map_streams(offset, |s| {
                let path = sample_path(cfg.seed, s, &fine_spec);
                Ok((path_record(model, &path.coarsen(factor)?)?, path_record(model, &path)?))
            })
        };
        let split = |pairs: Vec<(PathRecord, PathRecord)>| -> (Vec<PathRecord>, Vec<PathRecord>) { pairs.into_iter().unzip() };
        let (main_base, main_fine) = split(sim(0)?);
        let other = match cfg.mode {
            Mode::Coupled => None,
            Mode::Independent => Some(split(sim(INDEPENDENT_STREAM_OFFSET)?)),
        };
        base.rows.push(report_row(f, &spec, cfg, &main_base, other.as_ref().map(|o| o.0.as_slice()))?);
        refined
            .rows
            .push(report_row(f, &fine_spec, cfg, &main_fine, other.as_ref().map(|o| o.1.as_slice()))?);
    }
    Ok(SensitivityReport { factor, base, refined })
}

/// Variance of `√n(V^n_0 − V₀)` against `(1/3) E ∫Γ⁴Σ⁴ dt`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CltCheck {
    pub n: usize,
    pub m: usize,
    pub paths: u64,
    pub empirical_var: McEstimate,
    /// Path average of `(1/3) ∫ Γ⁴Σ⁴ dt`.
    pub predicted: McEstimate,
    /// Mean of `√n(V^n_0 − V₀)`.
    pub centered_mean: McEstimate,
}

impl CltCheck {
    pub fn ratio(&self) -> f64 {
        self.empirical_var.mean / self.predicted.mean
    }
}

pub fn clt_variance_check(model: &GModel, spec: &GridSpec, cfg: &McConfig) -> Result<CltCheck> {
    cfg.validate()?;
    if cfg.antithetic {
        // pair averages would halve the variance being measured
        return Err(Error::Estimation("the variance check does not support antithetic pairing".into()));
    }
    let root_n = (spec.n() as f64).sqrt();
    let samples = cfg.map_streams(0, |s| {
        let v = variance_functionals(model, &sample_path(cfg.seed, s, spec))?;
        Ok((root_n * (v.error.v0n - v.v0), v.quartic / 3.0))
    })?;
    let (centered, quartic): (Vec<f64>, Vec<f64>) = samples.into_iter().unzip();
    Ok(CltCheck {
        n: spec.n(),
        m: spec.m(),
        paths: cfg.paths,
        empirical_var: McEstimate::variance_of(&centered, cfg.paths)?,
        predicted: McEstimate::from_samples(&quartic, cfg.paths)?,
        centered_mean: McEstimate::from_samples(&centered, cfg.paths)?,
    })
}
