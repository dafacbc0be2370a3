//! Fading channel statistics, reproducible sampling, and the degradedness
//! conditions that decide whether both users can get a positive secrecy rate.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, ComplexVector, HermitianMatrix, C64};

/// Mean and covariance of one user's channel vector `H ~ CN(μ, K)`.
#[derive(Debug, Clone)]
pub struct ChannelStatistics {
    mean: ComplexVector,
    cov: HermitianMatrix,
    cov_sqrt: ComplexMatrix,
}

impl ChannelStatistics {
    pub fn new(mean: ComplexVector, cov: HermitianMatrix) -> Result<Self> {
        if mean.len() != cov.dim() {
            return Err(Error::DimensionMismatch(format!(
                "mean has length {}, covariance is {}x{}",
                mean.len(),
                cov.dim(),
                cov.dim()
            )));
        }
        if mean.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("channel mean".into()));
        }
        let cov_sqrt = cov.psd_sqrt()?;
        Ok(Self { mean, cov, cov_sqrt })
    }

    /// Zero-mean (Rayleigh) channel.
    pub fn rayleigh(cov: HermitianMatrix) -> Result<Self> {
        Self::new(ComplexVector::zeros(cov.dim()), cov)
    }

    pub fn rician(mean: &[f64], cov: HermitianMatrix) -> Result<Self> {
        let mean = ComplexVector::from_iterator(mean.len(), mean.iter().map(|&x| C64::new(x, 0.0)));
        Self::new(mean, cov)
    }

    pub fn dim(&self) -> usize {
        self.cov.dim()
    }

    pub fn mean(&self) -> &ComplexVector {
        &self.mean
    }

    pub fn cov(&self) -> &HermitianMatrix {
        &self.cov
    }

    pub fn is_zero_mean(&self) -> bool {
        self.mean.iter().all(|z| z.norm() == 0.0)
    }

    /// Scales to unit noise variance: `K/σ²`, `μ/σ`.
    pub fn normalized_by_noise(&self, noise_var: f64) -> Result<Self> {
        if noise_var <= 0.0 || !noise_var.is_finite() {
            return Err(Error::InvalidArgument(format!("noise variance {noise_var}")));
        }
        Self::new(self.mean.unscale(noise_var.sqrt()), self.cov.scale(1.0 / noise_var))
    }
}

/// `E[H Hᴴ] = K + μμᴴ`.
pub fn effective_second_moment(stats: &ChannelStatistics) -> HermitianMatrix {
    stats.cov().add(&HermitianMatrix::outer(stats.mean()))
}

/// A materialized set of channel draws, stored contiguously.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSampleBatch {
    n_t: usize,
    seed: u64,
    data: Vec<C64>,
}

impl ChannelSampleBatch {
    pub fn from_samples(n_t: usize, samples: &[Vec<C64>]) -> Result<Self> {
        let mut data = Vec::with_capacity(n_t * samples.len());
        for s in samples {
            if s.len() != n_t {
                return Err(Error::DimensionMismatch(format!("sample of length {}", s.len())));
            }
            data.extend_from_slice(s);
        }
        Ok(Self { n_t, seed: 0, data })
    }

    pub fn n_t(&self) -> usize {
        self.n_t
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn count(&self) -> usize {
        self.data.len().checked_div(self.n_t).unwrap_or(0)
    }

    pub fn get(&self, i: usize) -> &[C64] {
        &self.data[i * self.n_t..(i + 1) * self.n_t]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[C64]> + '_ {
        self.data.chunks_exact(self.n_t.max(1))
    }
}

/// SplitMix64 finalizer; used to derive independent seeds from counters.
pub fn mix_seed(seed: u64, counter: u64) -> u64 {
    let mut z = seed ^ counter.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(0x632B_E59B_D9B4_E019);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Draws `count` i.i.d. realizations `μ + K^{1/2} ψ`, `ψ ~ CN(0, I)`.
///
/// Sample `i` depends only on `(seed, i)`, so the batch is identical no
/// matter how the work is split across threads.
pub fn sample(stats: &ChannelStatistics, count: usize, seed: u64) -> ChannelSampleBatch {
    let n = stats.dim();
    let data: Vec<C64> = (0..count)
        .into_par_iter()
        .flat_map_iter(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, i as u64));
            let psi: Vec<C64> = (0..n)
                .map(|_| {
                    let re: f64 = StandardNormal.sample(&mut rng);
                    let im: f64 = StandardNormal.sample(&mut rng);
                    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
                })
                .collect();
            (0..n).map(move |r| {
                let mut acc = stats.mean[r];
                for (c, p) in psi.iter().enumerate() {
                    acc += stats.cov_sqrt[(r, c)] * p;
                }
                acc
            })
        })
        .collect();
    ChannelSampleBatch { n_t: n, seed, data }
}

/// Outcome of the covariance scaling test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScalingVerdict {
    Scaled(f64),
    NotScaled,
}

/// Whether `k1 = c·k2` for some `c`, with `c` estimated as `tr k1 / tr k2`.
///
/// The residual is compared against `tol·max(‖k1‖max, c‖k2‖max)`, which makes
/// the test symmetric under swapping the arguments.
pub fn is_scaled_pair(k1: &HermitianMatrix, k2: &HermitianMatrix, tol: f64) -> Result<ScalingVerdict> {
    if k1.dim() != k2.dim() {
        return Err(Error::DimensionMismatch("covariance pair".into()));
    }
    let (n1, n2) = (k1.max_abs(), k2.max_abs());
    if n1 == 0.0 && n2 == 0.0 {
        return Err(Error::BothZero);
    }
    let (t1, t2) = (k1.trace(), k2.trace());
    if n1 == 0.0 || n2 == 0.0 || t1 <= 0.0 || t2 <= 0.0 {
        return Ok(ScalingVerdict::NotScaled);
    }
    let c = t1 / t2;
    let resid = k1.sub(&k2.scale(c)).max_abs();
    if resid <= tol * n1.max(c * n2) {
        Ok(ScalingVerdict::Scaled(c))
    } else {
        Ok(ScalingVerdict::NotScaled)
    }
}

/// Which users can have a positive secrecy rate as the SNR vanishes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LowSnrPositivity {
    BothPositive,
    OnlyUser1,
    OnlyUser2,
    Neither,
}

/// Signature of `k1 - k2`: both users positive iff the difference is
/// indefinite. Eigenvalues within `1e-9·(1 + ‖k1 - k2‖max)` of zero count as
/// zero.
pub fn low_snr_positivity(k1: &HermitianMatrix, k2: &HermitianMatrix) -> Result<LowSnrPositivity> {
    if k1.dim() != k2.dim() {
        return Err(Error::DimensionMismatch("covariance pair".into()));
    }
    let diff = k1.sub(k2);
    let band = 1e-9 * (1.0 + diff.max_abs());
    let (hi, lo) = (diff.lambda_max(), diff.lambda_min());
    Ok(match (hi > band, lo < -band) {
        (true, true) => LowSnrPositivity::BothPositive,
        (true, false) => LowSnrPositivity::OnlyUser1,
        (false, true) => LowSnrPositivity::OnlyUser2,
        (false, false) => LowSnrPositivity::Neither,
    })
}

/// The two users' channel statistics.
#[derive(Debug, Clone)]
pub struct ChannelPair {
    users: [ChannelStatistics; 2],
}

impl ChannelPair {
    pub fn new(user1: ChannelStatistics, user2: ChannelStatistics) -> Result<Self> {
        if user1.dim() != user2.dim() {
            return Err(Error::DimensionMismatch("users have different antenna counts".into()));
        }
        Ok(Self { users: [user1, user2] })
    }

    pub fn n_t(&self) -> usize {
        self.users[0].dim()
    }

    /// Zero-based user index.
    pub fn user(&self, k: usize) -> &ChannelStatistics {
        &self.users[k]
    }

    pub fn swapped(&self) -> Self {
        Self { users: [self.users[1].clone(), self.users[0].clone()] }
    }

    pub fn is_rayleigh(&self) -> bool {
        self.users.iter().all(ChannelStatistics::is_zero_mean)
    }

    /// Independent draws for both users with seeds derived from `seed`.
    pub fn sample(&self, count: usize, seed: u64) -> SampledPair {
        SampledPair {
            batches: [
                sample(&self.users[0], count, mix_seed(seed, 1)),
                sample(&self.users[1], count, mix_seed(seed, 2)),
            ],
        }
    }
}

/// Channel draws for both users, with equal counts so that batch-means
/// standard errors can be formed across users.
#[derive(Debug, Clone)]
pub struct SampledPair {
    batches: [ChannelSampleBatch; 2],
}

impl SampledPair {
    pub fn new(user1: ChannelSampleBatch, user2: ChannelSampleBatch) -> Result<Self> {
        if user1.count() != user2.count() || user1.n_t() != user2.n_t() {
            return Err(Error::DimensionMismatch("sample batches differ in shape".into()));
        }
        Ok(Self { batches: [user1, user2] })
    }

    pub fn user(&self, k: usize) -> &ChannelSampleBatch {
        &self.batches[k]
    }

    pub fn count(&self) -> usize {
        self.batches[0].count()
    }

    pub fn n_t(&self) -> usize {
        self.batches[0].n_t()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference_pair() -> (HermitianMatrix, HermitianMatrix) {
        (
            HermitianMatrix::from_real_diag(&[0.2, 0.04]),
            HermitianMatrix::from_real_rows(&[&[0.1, 0.08], &[0.08, 0.1]]),
        )
    }

    fn sample_cov(batch: &ChannelSampleBatch) -> (ComplexVector, ComplexMatrix) {
        let n = batch.n_t();
        let count = batch.count() as f64;
        let mut mean = ComplexVector::zeros(n);
        let mut second = ComplexMatrix::zeros(n, n);
        for h in batch.iter() {
            let v = ComplexVector::from_column_slice(h);
            mean += &v;
            second += &v * v.adjoint();
        }
        mean /= C64::new(count, 0.0);
        second /= C64::new(count, 0.0);
        let cov = second - &mean * mean.adjoint();
        (mean, cov)
    }

    #[test]
    fn degenerate_distribution_gives_zero_draws() {
        let stats = ChannelStatistics::rayleigh(HermitianMatrix::zeros(2)).unwrap();
        let b = sample(&stats, 3, 7);
        assert_eq!(b.count(), 3);
        assert!(b.iter().all(|h| h.iter().all(|z| z.norm() == 0.0)));
    }

    #[test]
    fn standard_complex_normal_moments() {
        let stats = ChannelStatistics::rayleigh(HermitianMatrix::identity(2)).unwrap();
        let b = sample(&stats, 1_000_000, 11);
        let (mean, cov) = sample_cov(&b);
        assert!(mean.norm() <= 0.005, "mean {}", mean.norm());
        let err = crate::linalg::max_abs(&(cov - ComplexMatrix::identity(2, 2)));
        assert!(err <= 0.01, "cov err {err}");
    }

    #[test]
    fn reference_covariance_is_reproduced() {
        let (k1, _) = reference_pair();
        let stats = ChannelStatistics::rayleigh(k1.clone()).unwrap();
        let b = sample(&stats, 400_000, 3);
        let (_, cov) = sample_cov(&b);
        assert!(crate::linalg::max_abs(&(cov - k1.as_matrix())) <= 0.005);
    }

    #[test]
    fn sampling_is_independent_of_thread_count() {
        let (k1, _) = reference_pair();
        let stats = ChannelStatistics::rician(&[0.7, 0.1], k1).unwrap();
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| sample(&stats, 5_000, 99))
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn effective_moment_examples() {
        let id = ChannelStatistics::rayleigh(HermitianMatrix::identity(2)).unwrap();
        assert_eq!(effective_second_moment(&id), HermitianMatrix::identity(2));

        let (k1, _) = reference_pair();
        let rician = ChannelStatistics::rician(&[0.7, 0.1], k1).unwrap();
        let r = effective_second_moment(&rician);
        let expected = HermitianMatrix::from_real_rows(&[&[0.69, 0.07], &[0.07, 0.05]]);
        assert!(r.sub(&expected).max_abs() < 1e-12);

        let det = ChannelStatistics::rician(&[1.0, 0.0], HermitianMatrix::zeros(2)).unwrap();
        let r = effective_second_moment(&det);
        assert!(r.sub(&HermitianMatrix::from_real_diag(&[1.0, 0.0])).max_abs() < 1e-15);
    }

    #[test]
    fn scaled_pair_examples() {
        let (k1, k2) = reference_pair();
        match is_scaled_pair(&k1, &k1.scale(4.0), 1e-9).unwrap() {
            ScalingVerdict::Scaled(c) => assert!((c - 0.25).abs() < 1e-12),
            v => panic!("{v:?}"),
        }
        assert_eq!(is_scaled_pair(&k1, &k2, 1e-9).unwrap(), ScalingVerdict::NotScaled);
        let id = HermitianMatrix::identity(2);
        assert_eq!(is_scaled_pair(&id, &id, 1e-9).unwrap(), ScalingVerdict::Scaled(1.0));
        let z = HermitianMatrix::zeros(2);
        assert!(matches!(is_scaled_pair(&z, &z, 1e-9), Err(Error::BothZero)));
    }

    #[test]
    fn positivity_examples() {
        let (k1, k2) = reference_pair();
        assert_eq!(low_snr_positivity(&k1, &k2).unwrap(), LowSnrPositivity::BothPositive);
        let id = HermitianMatrix::identity(2);
        assert_eq!(low_snr_positivity(&id.scale(2.0), &id).unwrap(), LowSnrPositivity::OnlyUser1);
        assert_eq!(low_snr_positivity(&id, &id.scale(2.0)).unwrap(), LowSnrPositivity::OnlyUser2);
        assert_eq!(low_snr_positivity(&k1, &k1).unwrap(), LowSnrPositivity::Neither);
    }

    #[test]
    fn non_psd_covariance_is_rejected() {
        let bad = HermitianMatrix::from_real_rows(&[&[0.1, 0.5], &[0.5, 0.1]]);
        assert!(matches!(ChannelStatistics::rayleigh(bad), Err(Error::NotPsd(_))));
    }
}
