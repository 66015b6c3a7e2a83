//! Running per-dimension mean and variance (Welford) for observations and
//! returns.

use serde::{Deserialize, Serialize};

/// Floor on the standard deviation used when normalising.
pub const NORM_EPSILON: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunningNorm {
    pub count: u64,
    pub mean: Vec<f64>,
    m2: Vec<f64>,
    /// When set, `update` leaves the statistics untouched.
    pub frozen: bool,
}

impl RunningNorm {
    pub fn new(dim: usize) -> Self {
        Self {
            count: 0,
            mean: vec![0.0; dim],
            m2: vec![0.0; dim],
            frozen: false,
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn update(&mut self, x: &[f64]) {
        if self.frozen {
            return;
        }
        debug_assert_eq!(x.len(), self.dim());
        self.count += 1;
        let n = self.count as f64;
        for ((m, s), &v) in self.mean.iter_mut().zip(&mut self.m2).zip(x) {
            let d = v - *m;
            *m += d / n;
            *s += d * (v - *m);
        }
    }

    /// Population variance per dimension; zero before two samples.
    pub fn variance(&self) -> Vec<f64> {
        if self.count < 2 {
            return vec![0.0; self.dim()];
        }
        self.m2.iter().map(|s| s / self.count as f64).collect()
    }

    pub fn std(&self) -> Vec<f64> {
        self.variance().into_iter().map(f64::sqrt).collect()
    }

    /// `(x − mean) / max(std, ε)`.
    pub fn normalize(&self, x: &[f64]) -> Vec<f64> {
        let std = self.std();
        x.iter()
            .zip(&self.mean)
            .zip(&std)
            .map(|((v, m), s)| (v - m) / s.max(NORM_EPSILON))
            .collect()
    }

    /// Updates with `x` and returns it normalised.
    pub fn observe(&mut self, x: &[f64]) -> Vec<f64> {
        self.update(x);
        self.normalize(x)
    }
}
