//! Brownian paths on a two-level grid and the regular discretization error.
//!
//! `[0, T]` is cut into `n` coarse steps `t_j = jT/n`, each split into `m`
//! fine steps of length `Δ = T/(nm)`. Brownian values are exact at the fine
//! nodes; `X` and `Y` are evaluated there through the model maps, so the only
//! simulation bias is the left-endpoint Itô sum on the fine grid.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{CoefficientPoint, GModel};
use crate::rng::NormalStream;
use crate::sum::PairwiseSum;

/// Largest accepted number of fine steps per path.
pub const MAX_FINE_STEPS: u64 = 1 << 26;

/// Smallest automatic fine-step count.
pub const AUTO_M_FLOOR: usize = 64;

/// Fine steps per coarse step chosen by `m = auto`: `max(64, ⌈8√n⌉)`.
pub fn auto_m(n: usize) -> usize {
    let m = (8.0 * (n as f64).sqrt()).ceil() as usize;
    m.max(AUTO_M_FLOOR)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    horizon: f64,
    n: usize,
    m: usize,
}

impl GridSpec {
    pub fn new(horizon: f64, n: usize, m: usize) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::InvalidGrid(format!("horizon must be positive, got {horizon}")));
        }
        if n == 0 {
            return Err(Error::InvalidGrid("n must be at least 1".into()));
        }
        if m < 2 {
            return Err(Error::InvalidGrid(format!("m must be at least 2, got {m}")));
        }
        let steps = (n as u64).saturating_mul(m as u64);
        if steps > MAX_FINE_STEPS {
            return Err(Error::GridTooLarge {
                steps,
                limit: MAX_FINE_STEPS,
            });
        }
        Ok(Self { horizon, n, m })
    }

    /// Grid with `m = auto`.
    pub fn with_auto_m(horizon: f64, n: usize) -> Result<Self> {
        Self::new(horizon, n, auto_m(n))
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn fine_steps(&self) -> usize {
        self.n * self.m
    }

    /// `Δ = T/(nm)`.
    pub fn fine_dt(&self) -> f64 {
        self.horizon / self.fine_steps() as f64
    }

    /// Time of fine node `k`. Coarse nodes land exactly on `jT/n`, and node
    /// `2k` of a grid refined by two has the same time as node `k`.
    #[inline]
    pub fn time(&self, k: usize) -> f64 {
        self.horizon * k as f64 / self.fine_steps() as f64
    }

    /// Same coarse grid with `factor` times as many fine steps.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        Self::new(self.horizon, self.n, self.m.saturating_mul(factor))
    }
}

/// Path index plus the antithetic flag. The antithetic twin of stream `i`
/// uses the same variates with the sign flipped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct StreamId {
    pub index: u64,
    pub antithetic: bool,
}

impl StreamId {
    pub fn new(index: u64) -> Self {
        Self {
            index,
            antithetic: false,
        }
    }

    pub fn twin(self) -> Self {
        Self {
            antithetic: !self.antithetic,
            ..self
        }
    }
}

impl From<u64> for StreamId {
    fn from(index: u64) -> Self {
        Self::new(index)
    }
}

/// Brownian values at the `nm + 1` fine nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct PathGrid {
    spec: GridSpec,
    w: Vec<f64>,
    stream: StreamId,
}

impl PathGrid {
    /// Path from explicit node values; `w[0]` must be `0`.
    pub fn from_values(spec: GridSpec, w: Vec<f64>, stream: StreamId) -> Result<Self> {
        if w.len() != spec.fine_steps() + 1 {
            return Err(Error::InvalidGrid(format!(
                "expected {} path values, got {}",
                spec.fine_steps() + 1,
                w.len()
            )));
        }
        if w[0] != 0.0 {
            return Err(Error::InvalidGrid("path must start at 0".into()));
        }
        if w.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("path value"));
        }
        Ok(Self { spec, w, stream })
    }

    /// The path that never leaves 0.
    pub fn zero(spec: GridSpec) -> Self {
        Self {
            spec,
            w: vec![0.0; spec.fine_steps() + 1],
            stream: StreamId::new(0),
        }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.w
    }

    pub fn stream(&self) -> StreamId {
        self.stream
    }

    pub fn terminal(&self) -> f64 {
        self.w[self.w.len() - 1]
    }

    /// Keeps every `factor`-th fine node. Sampling a path at `factor·m` and
    /// coarsening gives an exact draw on the `m` grid.
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        if factor == 0 || self.spec.m % factor != 0 {
            return Err(Error::InvalidGrid(format!(
                "cannot coarsen m={} by {factor}",
                self.spec.m
            )));
        }
        let spec = GridSpec::new(self.spec.horizon, self.spec.n, self.spec.m / factor)?;
        let w = self.w.iter().step_by(factor).copied().collect();
        Ok(Self {
            spec,
            w,
            stream: self.stream,
        })
    }
}

/// Draws the Brownian path of `stream` under `seed`. Increment `k` is
/// `√Δ` times variate `k` of ChaCha stream `stream.index`, negated for the
/// antithetic twin.
pub fn sample_path(seed: u64, stream: StreamId, spec: &GridSpec) -> PathGrid {
    let steps = spec.fine_steps();
    let scale = if stream.antithetic { -spec.fine_dt().sqrt() } else { spec.fine_dt().sqrt() };
    let mut rng = NormalStream::new(seed, stream.index);
    let mut w = Vec::with_capacity(steps + 1);
    let mut current = 0.0;
    w.push(current);
    for _ in 0..steps {
        current += scale * rng.next_standard();
        w.push(current);
    }
    PathGrid {
        spec: *spec,
        w,
        stream,
    }
}

/// One draw of `(Z^n_T, V^n_0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorSample {
    pub z: f64,
    pub v0n: f64,
    pub stream: StreamId,
}

/// Model coefficients at every fine node of a path.
#[derive(Debug, Clone)]
pub struct CoefficientTrajectory {
    spec: GridSpec,
    stream: StreamId,
    points: Vec<CoefficientPoint>,
}

impl CoefficientTrajectory {
    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn stream(&self) -> StreamId {
        self.stream
    }

    pub fn points(&self) -> &[CoefficientPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

pub fn coefficient_trajectory(model: &GModel, path: &PathGrid) -> Result<CoefficientTrajectory> {
    let spec = path.spec;
    let points = path
        .w
        .iter()
        .enumerate()
        .map(|(k, &w)| model.eval_coefficients(spec.time(k), w))
        .collect::<Result<Vec<_>>>()?;
    Ok(CoefficientTrajectory {
        spec,
        stream: path.stream,
        points,
    })
}

/// Accumulates the left-endpoint sums node by node.
pub(crate) struct ErrorAccumulator {
    m: usize,
    k: usize,
    x_coarse: f64,
    prev: Option<(f64, f64, f64)>,
    z: PairwiseSum,
    v: PairwiseSum,
}

impl ErrorAccumulator {
    pub(crate) fn new(m: usize) -> Self {
        Self {
            m,
            k: 0,
            x_coarse: 0.0,
            prev: None,
            z: PairwiseSum::new(),
            v: PairwiseSum::new(),
        }
    }

    #[inline]
    pub(crate) fn push(&mut self, x: f64, y: f64, sigma: f64) {
        if let Some((xp, yp, sp)) = self.prev {
            let lag = xp - self.x_coarse;
            self.z.push(lag * (y - yp));
            self.v.push(lag * lag * sp * sp);
        }
        if self.k % self.m == 0 {
            self.x_coarse = x;
        }
        self.prev = Some((x, y, sigma));
        self.k += 1;
    }

    pub(crate) fn finish(&self, spec: &GridSpec, stream: StreamId) -> Result<ErrorSample> {
        let n = spec.n as f64;
        let z = n.sqrt() * self.z.total();
        let v0n = n * spec.fine_dt() * self.v.total();
        if !(z.is_finite() && v0n.is_finite()) {
            return Err(Error::PathEvaluation {
                stream: stream.index,
            });
        }
        Ok(ErrorSample { z, v0n, stream })
    }
}

/// `Z^n_T = √n Σ_k (X_{s_k} − X^n_{s_k})(Y_{s_{k+1}} − Y_{s_k})` and
/// `V^n_0 = n Σ_k (X_{s_k} − X^n_{s_k})² Σ_{s_k}² Δ` over the fine nodes.
pub fn discretization_error(model: &GModel, path: &PathGrid) -> Result<ErrorSample> {
    let spec = path.spec;
    let mut acc = ErrorAccumulator::new(spec.m);
    for (k, &w) in path.w.iter().enumerate() {
        let p = model.partials(spec.time(k), w);
        acc.push(p.x.value, p.y.value, p.y.dw);
    }
    acc.finish(&spec, path.stream)
}

/// [`discretization_error`] from an already evaluated trajectory; the two
/// agree bit for bit.
pub fn discretization_error_from(traj: &CoefficientTrajectory) -> Result<ErrorSample> {
    let mut acc = ErrorAccumulator::new(traj.spec.m);
    for p in &traj.points {
        acc.push(p.x_val, p.y_val, p.sigma);
    }
    acc.finish(&traj.spec, traj.stream)
}
