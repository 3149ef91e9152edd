//! Sweep configuration: JSON file plus flat flag overrides, flags winning.

use serde::{Deserialize, Serialize};

use dikey_core::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    pub d: Vec<usize>,
    pub epsilon: Vec<f64>,
    pub junk_a: usize,
    pub junk_b: usize,
    pub seed: u64,
    /// Cyclic flip probability on Bob's key outcome, applied to the key-rate
    /// branch only.
    pub noise: f64,
    /// Run the local-polytope LP per grid point.
    pub lp: bool,
    /// Measurement plugin file; its settings are attached to Bob in front of
    /// the key setting before the distance columns are computed.
    pub bob_measurements: Option<String>,
    pub jobs: usize,
    pub tolerance: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            d: vec![2],
            epsilon: Vec::new(),
            junk_a: 1,
            junk_b: 1,
            seed: 0,
            noise: 0.0,
            lp: false,
            bob_measurements: None,
            jobs: 1,
            tolerance: 1e-8,
        }
    }
}

impl SweepConfig {
    pub fn from_json(json: &str) -> Result<Self> {
        serde_json::from_str(json).map_err(|e| Error::InvalidFile(e.to_string()))
    }

    /// Sorts epsilons descending (the order monotonicity checks expect) and
    /// rejects out-of-range values.
    pub fn validate(&mut self) -> Result<()> {
        if self.epsilon.is_empty() {
            return Err(Error::InvalidFile("epsilon list is empty".into()));
        }
        if self.d.is_empty() {
            return Err(Error::InvalidFile("dimension list is empty".into()));
        }
        for &d in &self.d {
            if d < 2 {
                return Err(Error::DimensionTooSmall(d));
            }
        }
        for &eps in &self.epsilon {
            if !(0.0..=1.0).contains(&eps) || !eps.is_finite() {
                return Err(Error::EpsilonOutOfRange(eps));
            }
        }
        if !(0.0..=0.5).contains(&self.noise) {
            return Err(Error::NoiseOutOfRange(self.noise));
        }
        if self.junk_a == 0 || self.junk_b == 0 {
            return Err(Error::InvalidFile("junk dimensions must be >= 1".into()));
        }
        if self.jobs == 0 {
            self.jobs = 1;
        }
        self.epsilon
            .sort_by(|a, b| b.partial_cmp(a).expect("finite epsilons"));
        self.epsilon.dedup();
        Ok(())
    }

    /// The (d, ε) grid in output order.
    pub fn grid(&self) -> Vec<(usize, f64)> {
        let mut points = Vec::with_capacity(self.d.len() * self.epsilon.len());
        for &d in &self.d {
            for &eps in &self.epsilon {
                points.push((d, eps));
            }
        }
        points
    }
}
