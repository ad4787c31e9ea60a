//! Order-independent accumulation of per-trial values.
//!
//! Values are quantized to a fixed-point grid of `2^-32` before summation, so
//! partial tallies merge with integer arithmetic and any grouping of trials
//! reduces to bit-identical moments.

use serde::{Deserialize, Serialize};

const SCALE: f64 = 4_294_967_296.0; // 2^32

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    count: u64,
    sum: i128,
    sum_sq: i128,
}

fn quantize(x: f64) -> i128 {
    (x * SCALE).round() as i128
}

impl Tally {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        let q = quantize(x);
        self.count += 1;
        self.sum += q;
        // q^2 / SCALE keeps sum_sq on the same fixed-point grid as sum.
        self.sum_sq += (q * q) >> 32;
    }

    pub fn merge(&mut self, other: &Tally) {
        self.count += other.count;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        if self.count == 0 {
            return 0.0;
        }
        self.sum as f64 / SCALE / self.count as f64
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        let n = self.count as f64;
        let mean = self.mean();
        let second = self.sum_sq as f64 / SCALE / n;
        ((second - mean * mean) * n / (n - 1.0)).max(0.0)
    }

    /// Standard error of the mean.
    pub fn std_error(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        (self.variance() / self.count as f64).sqrt()
    }
}

impl FromIterator<f64> for Tally {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut t = Tally::new();
        for x in iter {
            t.push(x);
        }
        t
    }
}
