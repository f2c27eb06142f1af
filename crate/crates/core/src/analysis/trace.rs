use crate::Vec3;

/// Relative tolerance on sample spacing.
const SPACING_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TraceError {
    #[error("a trace needs at least 2 samples, got {0}")]
    TooShort(usize),
    #[error("{times} sample times but {values} values")]
    LengthMismatch { times: usize, values: usize },
    #[error("sample times must be strictly increasing (index {0})")]
    NotIncreasing(usize),
    #[error("sample spacing is not uniform (index {0})")]
    NonUniform(usize),
}

/// Uniformly sampled time series.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceSeries<T> {
    times: Vec<f64>,
    values: Vec<T>,
}

impl<T> TraceSeries<T> {
    pub fn new(times: Vec<f64>, values: Vec<T>) -> Result<Self, TraceError> {
        if times.len() != values.len() {
            return Err(TraceError::LengthMismatch {
                times: times.len(),
                values: values.len(),
            });
        }
        if times.len() < 2 {
            return Err(TraceError::TooShort(times.len()));
        }
        let step = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
        for k in 1..times.len() {
            let d = times[k] - times[k - 1];
            if !(d > 0.0) {
                return Err(TraceError::NotIncreasing(k));
            }
            if (d - step).abs() > SPACING_TOL * step {
                return Err(TraceError::NonUniform(k));
            }
        }
        Ok(Self { times, values })
    }

    /// Samples at `t0 + k·dt`.
    pub fn uniform(t0: f64, dt: f64, values: Vec<T>) -> Result<Self, TraceError> {
        let times = (0..values.len()).map(|k| t0 + k as f64 * dt).collect();
        Self::new(times, values)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.times[self.times.len() - 1] - self.times[0]
    }

    /// Mean sample spacing.
    pub fn dt(&self) -> f64 {
        self.duration() / (self.len() - 1) as f64
    }

    pub fn map<U>(&self, f: impl Fn(&T) -> U) -> TraceSeries<U> {
        TraceSeries {
            times: self.times.clone(),
            values: self.values.iter().map(f).collect(),
        }
    }

    /// Samples with `from <= t <= to`.
    pub fn window(&self, from: f64, to: f64) -> Result<Self, TraceError>
    where
        T: Clone,
    {
        let (times, values) = self
            .times
            .iter()
            .zip(&self.values)
            .filter(|(t, _)| **t >= from && **t <= to)
            .map(|(t, v)| (*t, v.clone()))
            .unzip();
        Self::new(times, values)
    }
}

impl TraceSeries<Vec3> {
    pub fn component(&self, axis: usize) -> TraceSeries<f64> {
        self.map(|v| v[axis])
    }
}

impl TraceSeries<f64> {
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.len() as f64
    }
}
