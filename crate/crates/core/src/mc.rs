//! Batch-means Monte Carlo estimates.
//!
//! A sample batch is cut into [`NUM_BATCHES`] contiguous blocks. Every
//! estimate carries its per-block means, so linear combinations of
//! estimates drawn from different users' batches keep a valid standard
//! error: block `k` of the combination only mixes block `k` of the inputs,
//! and distinct blocks are independent.

use std::ops::{Add, Mul, Sub};

use crate::channel::ChannelSampleBatch;
use crate::linalg::C64;

pub const NUM_BATCHES: usize = 20;

/// Mean and standard error of a Monte Carlo quantity.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_err: f64,
}

/// Per-block means of a per-sample quantity.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchMeans {
    sizes: Vec<usize>,
    means: Vec<f64>,
}

fn block_sizes(count: usize) -> Vec<usize> {
    let blocks = NUM_BATCHES.min(count).max(1);
    (0..blocks)
        .map(|k| count * (k + 1) / blocks - count * k / blocks)
        .collect()
}

impl BatchMeans {
    /// Averages `K` per-sample quantities at once over `batch`.
    pub fn collect<const K: usize>(
        batch: &ChannelSampleBatch,
        mut f: impl FnMut(&[C64]) -> [f64; K],
    ) -> [BatchMeans; K] {
        let sizes = block_sizes(batch.count());
        let mut sums = vec![[0.0; K]; sizes.len()];
        let mut idx = 0;
        for (block, &size) in sizes.iter().enumerate() {
            for _ in 0..size {
                let v = f(batch.get(idx));
                for k in 0..K {
                    sums[block][k] += v[k];
                }
                idx += 1;
            }
        }
        std::array::from_fn(|k| BatchMeans {
            sizes: sizes.clone(),
            means: sums
                .iter()
                .zip(&sizes)
                .map(|(s, &n)| if n == 0 { 0.0 } else { s[k] / n as f64 })
                .collect(),
        })
    }

    pub fn constant(like: &BatchMeans, value: f64) -> BatchMeans {
        BatchMeans { sizes: like.sizes.clone(), means: vec![value; like.means.len()] }
    }

    pub fn mean(&self) -> f64 {
        let total: usize = self.sizes.iter().sum();
        if total == 0 {
            return 0.0;
        }
        self.sizes.iter().zip(&self.means).map(|(&n, m)| n as f64 * m).sum::<f64>() / total as f64
    }

    /// Standard error from the spread of the block means.
    pub fn std_err(&self) -> f64 {
        let b = self.means.len();
        if b < 2 {
            return 0.0;
        }
        let avg = self.means.iter().sum::<f64>() / b as f64;
        let var = self.means.iter().map(|m| (m - avg).powi(2)).sum::<f64>() / (b - 1) as f64;
        (var / b as f64).sqrt()
    }

    pub fn estimate(&self) -> McEstimate {
        McEstimate { mean: self.mean(), std_err: self.std_err() }
    }

    fn zip_with(&self, other: &BatchMeans, f: impl Fn(f64, f64) -> f64) -> BatchMeans {
        assert_eq!(self.sizes, other.sizes, "batch partitions differ");
        BatchMeans {
            sizes: self.sizes.clone(),
            means: self.means.iter().zip(&other.means).map(|(&a, &b)| f(a, b)).collect(),
        }
    }
}

impl Add for &BatchMeans {
    type Output = BatchMeans;
    fn add(self, rhs: &BatchMeans) -> BatchMeans {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl Sub for &BatchMeans {
    type Output = BatchMeans;
    fn sub(self, rhs: &BatchMeans) -> BatchMeans {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl Mul<f64> for &BatchMeans {
    type Output = BatchMeans;
    fn mul(self, rhs: f64) -> BatchMeans {
        BatchMeans { sizes: self.sizes.clone(), means: self.means.iter().map(|m| m * rhs).collect() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uneven_blocks_still_give_the_exact_mean() {
        let samples: Vec<Vec<C64>> = (0..47).map(|i| vec![C64::new(i as f64, 0.0)]).collect();
        let batch = ChannelSampleBatch::from_samples(1, &samples).unwrap();
        let [m] = BatchMeans::collect(&batch, |h| [h[0].re]);
        assert!((m.mean() - 23.0).abs() < 1e-12);
        assert!(m.std_err() > 0.0);
    }

    #[test]
    fn constant_quantity_has_zero_error() {
        let samples: Vec<Vec<C64>> = (0..100).map(|_| vec![C64::new(1.0, 0.0)]).collect();
        let batch = ChannelSampleBatch::from_samples(1, &samples).unwrap();
        let [a, b] = BatchMeans::collect(&batch, |h| [h[0].re, 2.0 * h[0].re]);
        let d = &b - &a;
        assert_eq!(d.estimate(), McEstimate { mean: 1.0, std_err: 0.0 });
    }
}
