use nalgebra::DVector;

use crate::error::{Error, Result};

/// Vector signal sampled on a uniform grid `t0 + k * step`, read back with
/// piecewise-linear interpolation and held constant outside the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSignal {
    t0: f64,
    step: f64,
    dim: usize,
    values: Vec<DVector<f64>>,
}

impl SampledSignal {
    pub fn new(t0: f64, step: f64, values: Vec<DVector<f64>>) -> Result<Self> {
        if !(step > 0.0) || !step.is_finite() {
            return Err(Error::format("step", format!("must be positive, got {step}")));
        }
        if values.is_empty() {
            return Err(Error::format("signal", "at least one sample is required"));
        }
        let dim = values[0].len();
        if let Some(k) = values.iter().position(|v| v.len() != dim) {
            return Err(Error::dim(
                format!("sample {k}"),
                format!("expected length {dim}, got {}", values[k].len()),
            ));
        }
        Ok(SampledSignal {
            t0,
            step,
            dim,
            values,
        })
    }

    /// Builds a signal from explicit time stamps. Every interval must match
    /// the first one to within 1e-9 (relative).
    pub fn from_times(times: &[f64], values: Vec<DVector<f64>>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::dim(
                "times",
                format!("{} stamps for {} samples", times.len(), values.len()),
            ));
        }
        if times.len() < 2 {
            return Err(Error::format("times", "at least two stamps are required"));
        }
        let first = times[1] - times[0];
        for (k, pair) in times.windows(2).enumerate() {
            let dt = pair[1] - pair[0];
            if (dt - first).abs() > 1e-9 * first.abs().max(1.0) {
                return Err(Error::NonUniformGrid { index: k + 1 });
            }
        }
        let step = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
        SampledSignal::new(times[0], step, values)
    }

    /// Samples `f` at `t0 + k * step` for `k = 0..count`.
    pub fn from_fn(
        t0: f64,
        step: f64,
        count: usize,
        f: impl Fn(f64) -> DVector<f64>,
    ) -> Result<Self> {
        let values = (0..count).map(|k| f(t0 + k as f64 * step)).collect();
        SampledSignal::new(t0, step, values)
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }
    pub fn step(&self) -> f64 {
        self.step
    }
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn samples(&self) -> &[DVector<f64>] {
        &self.values
    }
    pub fn len(&self) -> usize {
        self.values.len()
    }
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
    pub fn t_end(&self) -> f64 {
        self.t0 + (self.values.len() - 1) as f64 * self.step
    }

    /// Grid time of sample `k`.
    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.step
    }

    pub fn at(&self, t: f64) -> DVector<f64> {
        let n = self.values.len();
        let x = (t - self.t0) / self.step;
        if x <= 0.0 || n == 1 {
            return self.values[0].clone();
        }
        let k = x.floor() as usize;
        if k >= n - 1 {
            return self.values[n - 1].clone();
        }
        let w = x - k as f64;
        &self.values[k] * (1.0 - w) + &self.values[k + 1] * w
    }

    /// Largest value of `norm` over `[a, b]`. Exact for convex `norm`, since
    /// the interpolant is affine between grid points.
    pub(crate) fn sup_over(&self, a: f64, b: f64, norm: impl Fn(&DVector<f64>) -> f64) -> f64 {
        let mut sup = norm(&self.at(a)).max(norm(&self.at(b)));
        for (k, v) in self.values.iter().enumerate() {
            let t = self.time(k);
            if t > a && t < b {
                sup = sup.max(norm(v));
            }
        }
        sup
    }
}
