use std::time::{Duration, Instant};

use super::{Curvature, GradientOracle, Potential};
use crate::error::Result;

/// `U ≡ c`.
#[derive(Debug, Clone)]
pub struct FlatTarget {
    d: usize,
    level: f64,
}

impl FlatTarget {
    pub fn new(d: usize, level: f64) -> Self {
        Self { d, level }
    }
}

impl Potential for FlatTarget {
    fn dim(&self) -> usize {
        self.d
    }
    fn value(&self, _x: &[f64]) -> f64 {
        self.level
    }
}

impl GradientOracle for FlatTarget {
    fn gradient(&self, _x: &[f64]) -> Result<Vec<f64>> {
        Ok(vec![0.0; self.d])
    }
}

/// `U + c` for an inner potential.
#[derive(Debug, Clone)]
pub struct Shifted<P> {
    pub inner: P,
    pub offset: f64,
}

impl<P: Potential> Potential for Shifted<P> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.inner.value(x) + self.offset
    }
    fn curvature(&self) -> Option<Curvature> {
        self.inner.curvature()
    }
}

impl<P: GradientOracle> GradientOracle for Shifted<P> {
    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.inner.gradient(x)
    }
}

/// Standard Gaussian potential that busy-waits for a fixed time per call,
/// emulating a compute-bound expensive likelihood.
#[derive(Debug, Clone)]
pub struct SpinTarget {
    d: usize,
    spin: Duration,
}

impl SpinTarget {
    pub fn new(d: usize, spin: Duration) -> Self {
        Self { d, spin }
    }
}

impl Potential for SpinTarget {
    fn dim(&self) -> usize {
        self.d
    }
    fn value(&self, x: &[f64]) -> f64 {
        let start = Instant::now();
        while start.elapsed() < self.spin {
            std::hint::spin_loop();
        }
        0.5 * x.iter().map(|v| v * v).sum::<f64>()
    }
}

impl GradientOracle for SpinTarget {}

/// Standard Gaussian potential that sleeps for a fixed time per call,
/// emulating an oracle dominated by I/O or remote latency.
#[derive(Debug, Clone)]
pub struct LatencyTarget {
    d: usize,
    latency: Duration,
}

impl LatencyTarget {
    pub fn new(d: usize, latency: Duration) -> Self {
        Self { d, latency }
    }
}

impl Potential for LatencyTarget {
    fn dim(&self) -> usize {
        self.d
    }
    fn value(&self, x: &[f64]) -> f64 {
        std::thread::sleep(self.latency);
        0.5 * x.iter().map(|v| v * v).sum::<f64>()
    }
}

impl GradientOracle for LatencyTarget {}
