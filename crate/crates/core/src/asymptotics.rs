//! Low-SNR behaviour: the linear region, minimum bit energies and the
//! energy penalties of secrecy and of statistical CSIT.
//!
//! To first order in `P`, a unit-rank beam `e` gives user 1 the secrecy rate
//! `αP·eᴴ(K₁−K₂)e / ln 2`, which the top eigenvector of `K₁ − K₂` maximizes.

use std::f64::consts::LN_2;

use serde::{Serialize, Serializer};

use crate::channel::{effective_second_moment, ChannelPair, SampledPair};
use crate::error::{Error, Result};
use crate::linalg::{trace_max_unit_rank, ComplexVector, HermitianMatrix, C64};
use crate::mc::BatchMeans;
use crate::rates::{rate_pair_statistical, InflationFactor, InputFactor, Order, RatePair};
use crate::region::{RegionBoundary, SolverKind};
use crate::solvers::SolverConfig;

/// A bit energy `E_b/N₀` in linear scale, or unreachable when the rate slope
/// is not positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BitEnergy {
    Finite(f64),
    Unreachable,
}

impl BitEnergy {
    /// `ln 2 / slope`, with the slope in nats per unit energy.
    pub fn from_slope(slope: f64) -> Self {
        if slope > 0.0 && slope.is_finite() {
            BitEnergy::Finite(LN_2 / slope)
        } else {
            BitEnergy::Unreachable
        }
    }

    pub fn value(self) -> Option<f64> {
        match self {
            BitEnergy::Finite(v) => Some(v),
            BitEnergy::Unreachable => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, BitEnergy::Finite(_))
    }
}

impl Serialize for BitEnergy {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            BitEnergy::Finite(v) => s.serialize_f64(*v),
            BitEnergy::Unreachable => s.serialize_str("unreachable"),
        }
    }
}

fn lambda_and_direction(a: &HermitianMatrix, b: &HermitianMatrix) -> Result<(f64, ComplexVector)> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(format!("{} vs {}", a.dim(), b.dim())));
    }
    let top = trace_max_unit_rank(&a.sub(b))?;
    Ok((top.value, top.vector))
}

/// Linear low-power region: `R₁(α) = (αP λmax(K₁−K₂)/ln2)⁺`,
/// `R₂(α) = ((1−α)P λmax(K₂−K₁)/ln2)⁺`.
pub fn low_snr_region(k1: &HermitianMatrix, k2: &HermitianMatrix, p: f64, alpha_grid: &[f64]) -> Result<RegionBoundary> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::InvalidArgument(format!("power {p} must be positive")));
    }
    if let Some(a) = alpha_grid.iter().find(|a| !(0.0..=1.0).contains(*a)) {
        return Err(Error::InvalidArgument(format!("alpha = {a} outside [0, 1]")));
    }
    let (l12, _) = lambda_and_direction(k1, k2)?;
    let (l21, _) = lambda_and_direction(k2, k1)?;
    let points = alpha_grid
        .iter()
        .map(|&alpha| RatePair {
            r1: (alpha * p * l12 / LN_2).max(0.0),
            r2: ((1.0 - alpha) * p * l21 / LN_2).max(0.0),
            order: Order::OneTwo,
            alpha,
            mc_std_err: [0.0; 2],
            iterations: 0,
        })
        .collect();
    Ok(RegionBoundary::new(points, SolverKind::LowSnr))
}

/// Minimum bit energies `(ln2/λmax(K₁−K₂), ln2/λmax(K₂−K₁))` with secrecy.
pub fn min_bit_energy(k1: &HermitianMatrix, k2: &HermitianMatrix) -> Result<(BitEnergy, BitEnergy)> {
    let (l12, _) = lambda_and_direction(k1, k2)?;
    let (l21, _) = lambda_and_direction(k2, k1)?;
    Ok((BitEnergy::from_slope(l12), BitEnergy::from_slope(l21)))
}

/// `λmax(h₁h₁ᴴ − h₂h₂ᴴ)`, from the 2×2 compression onto `span{h₁, h₂}`.
pub fn lambda_max_rank_two(h1: &[C64], h2: &[C64]) -> f64 {
    let a: f64 = h1.iter().map(|z| z.norm_sqr()).sum();
    let c: f64 = h2.iter().map(|z| z.norm_sqr()).sum();
    let p: C64 = h1.iter().zip(h2).map(|(x, y)| x.conj() * y).sum();
    let disc = ((a + c) * (a + c) / 4.0 - p.norm_sqr()).max(0.0);
    (a - c) / 2.0 + disc.sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BitEnergyEstimate {
    pub value: BitEnergy,
    pub std_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LowSnrSummary {
    /// `λmax(R₁ − R₂)`
    pub lambda_max_12: f64,
    /// `λmax(R₂ − R₁)`
    pub lambda_max_21: f64,
    #[serde(serialize_with = "serialize_directions")]
    pub directions: [ComplexVector; 2],
    pub eb_n0_secure_scsit: [BitEnergy; 2],
    pub eb_n0_nosecrecy: [BitEnergy; 2],
    pub eb_n0_secure_fcsit_estimate: [BitEnergyEstimate; 2],
    /// `E_b/N₀` increase caused by the secrecy constraint, where both ends
    /// are finite.
    pub secrecy_penalty: [Option<f64>; 2],
    /// Secure statistical-CSIT energy minus the full-CSIT estimate.
    pub csit_penalty: [Option<f64>; 2],
    /// Set when nonzero channel means were folded into second moments.
    pub rician_extension: bool,
    /// Secure energy is at least the no-secrecy energy.
    pub secrecy_inequality_holds: bool,
    /// Secure statistical-CSIT energy is at least the full-CSIT estimate
    /// minus three standard errors.
    pub csit_inequality_holds: bool,
}

fn serialize_directions<S: Serializer>(d: &[ComplexVector; 2], s: S) -> std::result::Result<S::Ok, S::Error> {
    let v: Vec<Vec<[f64; 2]>> = d.iter().map(|e| e.iter().map(|z| [z.re, z.im]).collect()).collect();
    v.serialize(s)
}

fn fcsit_estimate(samples: &SampledPair, user: usize) -> BitEnergyEstimate {
    let mine = samples.user(user);
    let other = samples.user(1 - user);
    let mut idx = 0;
    let [slope] = BatchMeans::collect(mine, |h| {
        let g = other.get(idx);
        idx += 1;
        [lambda_max_rank_two(h, g).max(0.0)]
    });
    let est = slope.estimate();
    let value = BitEnergy::from_slope(est.mean);
    let std_err = match value {
        BitEnergy::Finite(_) => LN_2 * est.std_err / (est.mean * est.mean),
        BitEnergy::Unreachable => 0.0,
    };
    BitEnergyEstimate { value, std_err }
}

/// Low-SNR energy comparison for a channel pair, with the full-CSIT
/// reference estimated from `cfg.samples` paired draws.
pub fn energy_penalties(pair: &ChannelPair, cfg: &SolverConfig) -> Result<LowSnrSummary> {
    let samples = pair.sample(cfg.samples, cfg.seed);
    energy_penalties_on(pair, &samples)
}

pub fn energy_penalties_on(pair: &ChannelPair, samples: &SampledPair) -> Result<LowSnrSummary> {
    let r = [effective_second_moment(pair.user(0)), effective_second_moment(pair.user(1))];
    let (l12, d12) = lambda_and_direction(&r[0], &r[1])?;
    let (l21, d21) = lambda_and_direction(&r[1], &r[0])?;
    let secure = [BitEnergy::from_slope(l12), BitEnergy::from_slope(l21)];
    let open = [BitEnergy::from_slope(r[0].lambda_max()), BitEnergy::from_slope(r[1].lambda_max())];
    let fcsit = [fcsit_estimate(samples, 0), fcsit_estimate(samples, 1)];
    let mut secrecy_penalty = [None; 2];
    let mut csit_penalty = [None; 2];
    let mut secrecy_ok = true;
    let mut csit_ok = true;
    for k in 0..2 {
        if let (Some(s), Some(o)) = (secure[k].value(), open[k].value()) {
            secrecy_penalty[k] = Some(s - o);
            secrecy_ok &= s >= o * (1.0 - 1e-12);
        }
        match (secure[k].value(), fcsit[k].value.value()) {
            (Some(s), Some(f)) => {
                csit_penalty[k] = Some(s - f);
                csit_ok &= s >= f - 3.0 * fcsit[k].std_err;
            }
            // unreachable with statistical CSIT is never below the reference
            (None, _) => {}
            (Some(_), None) => csit_ok = false,
        }
    }
    Ok(LowSnrSummary {
        lambda_max_12: l12,
        lambda_max_21: l21,
        directions: [d12, d21],
        eb_n0_secure_scsit: secure,
        eb_n0_nosecrecy: open,
        eb_n0_secure_fcsit_estimate: fcsit,
        secrecy_penalty,
        csit_penalty,
        rician_extension: !pair.is_rayleigh(),
        secrecy_inequality_holds: secrecy_ok,
        csit_inequality_holds: csit_ok,
    })
}

/// Measured versus predicted low-power rate slope of one user.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlopeCheck {
    pub user: usize,
    pub alpha: f64,
    pub power: f64,
    /// Monte Carlo rate divided by power, bits per unit energy.
    pub measured: f64,
    pub std_err: f64,
    pub predicted: f64,
    pub rel_err: f64,
}

/// Rates of the low-SNR beamformers at power `p` with no inflation factor,
/// compared against the linear prediction for both users.
pub fn slope_check(pair: &ChannelPair, samples: &SampledPair, p: f64, alpha: f64) -> Result<[SlopeCheck; 2]> {
    let r = [effective_second_moment(pair.user(0)), effective_second_moment(pair.user(1))];
    let (l12, d12) = lambda_and_direction(&r[0], &r[1])?;
    let (l21, d21) = lambda_and_direction(&r[1], &r[0])?;
    let t1 = InputFactor::beam(&d12, alpha * p);
    let t2 = InputFactor::beam(&d21, (1.0 - alpha) * p);
    let b = InflationFactor::zeros(t1.rank(), pair.n_t());
    let rp: RatePair = rate_pair_statistical(&t1, &t2, &b, Order::OneTwo, alpha, samples)?;
    let predicted = [alpha * l12.max(0.0) / LN_2, (1.0 - alpha) * l21.max(0.0) / LN_2];
    let rates = rp.rates();
    Ok(std::array::from_fn(|k| {
        let measured = rates[k] / p;
        let rel_err = if predicted[k] > 0.0 {
            (measured - predicted[k]).abs() / predicted[k]
        } else {
            measured.abs()
        };
        SlopeCheck { user: k + 1, alpha, power: p, measured, std_err: rp.mc_std_err[k] / p, predicted: predicted[k], rel_err }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::ChannelStatistics;

    fn reference_pair() -> (HermitianMatrix, HermitianMatrix) {
        (HermitianMatrix::from_real_diag(&[0.2, 0.04]), HermitianMatrix::from_real_rows(&[&[0.1, 0.08], &[0.08, 0.1]]))
    }

    #[test]
    fn equal_covariances_give_nothing() {
        let (k1, _) = reference_pair();
        let r = low_snr_region(&k1, &k1, 1e-3, &[0.0, 0.5, 1.0]).unwrap();
        assert!(r.points.iter().all(|p| p.r1 == 0.0 && p.r2 == 0.0));
        assert_eq!(min_bit_energy(&k1, &k1).unwrap(), (BitEnergy::Unreachable, BitEnergy::Unreachable));
    }

    #[test]
    fn reference_pair_corner_rate_and_energy() {
        let (k1, k2) = reference_pair();
        let lam = (0.04 + 0.0512f64.sqrt()) / 2.0;
        let r = low_snr_region(&k1, &k2, 1e-3, &[1.0]).unwrap();
        assert!((r.points[0].r1 - 1e-3 * lam / LN_2).abs() < 1e-15);
        assert!((r.points[0].r1 - 1.921e-4).abs() < 1e-7);
        let (e1, _) = min_bit_energy(&k1, &k2).unwrap();
        assert!((e1.value().unwrap() - LN_2 / lam).abs() < 1e-12);
        assert!((e1.value().unwrap() - 5.206).abs() < 1e-3);
    }

    #[test]
    fn one_sided_difference() {
        let k1 = HermitianMatrix::identity(2).scale(2.0);
        let k2 = HermitianMatrix::identity(2);
        let (e1, e2) = min_bit_energy(&k1, &k2).unwrap();
        assert!((e1.value().unwrap() - LN_2).abs() < 1e-12);
        assert_eq!(e2, BitEnergy::Unreachable);
        let r = low_snr_region(&k1, &k2, 0.01, &[0.0, 0.3, 0.9]).unwrap();
        assert!(r.points.iter().all(|p| p.r2 == 0.0));
    }

    #[test]
    fn region_is_linear_in_power() {
        let (k1, k2) = reference_pair();
        let grid: Vec<f64> = (0..11).map(|k| k as f64 / 10.0).collect();
        let a = low_snr_region(&k1, &k2, 1e-3, &grid).unwrap();
        let b = low_snr_region(&k1, &k2, 2e-3, &grid).unwrap();
        for (p, q) in a.points.iter().zip(&b.points) {
            assert!((2.0 * p.r1 - q.r1).abs() <= 1e-18 && (2.0 * p.r2 - q.r2).abs() <= 1e-18);
        }
    }

    #[test]
    fn rank_two_eigenvalue_matches_dense() {
        let h1 = [C64::new(0.3, -0.2), C64::new(1.1, 0.4), C64::new(-0.5, 0.0)];
        let h2 = [C64::new(-0.7, 0.1), C64::new(0.2, 0.2), C64::new(0.9, -0.3)];
        let a = HermitianMatrix::outer(&ComplexVector::from_column_slice(&h1));
        let b = HermitianMatrix::outer(&ComplexVector::from_column_slice(&h2));
        assert!((lambda_max_rank_two(&h1, &h2) - a.sub(&b).lambda_max()).abs() < 1e-12);
    }

    #[test]
    fn no_eavesdropper_means_no_secrecy_penalty() {
        let (k1, _) = reference_pair();
        let pair = ChannelPair::new(
            ChannelStatistics::rayleigh(k1).unwrap(),
            ChannelStatistics::rayleigh(HermitianMatrix::zeros(2)).unwrap(),
        )
        .unwrap();
        let s = energy_penalties(&pair, &SolverConfig { samples: 1_000, ..SolverConfig::default() }).unwrap();
        assert_eq!(s.secrecy_penalty[0], Some(0.0));
    }

    #[test]
    fn deterministic_channels_match_closed_form() {
        let mu1 = [0.9, 0.2];
        let mu2 = [0.1, 0.7];
        let pair = ChannelPair::new(
            ChannelStatistics::rician(&mu1, HermitianMatrix::zeros(2)).unwrap(),
            ChannelStatistics::rician(&mu2, HermitianMatrix::zeros(2)).unwrap(),
        )
        .unwrap();
        let s = energy_penalties(&pair, &SolverConfig { samples: 500, ..SolverConfig::default() }).unwrap();
        let h1: Vec<C64> = mu1.iter().map(|&x| C64::new(x, 0.0)).collect();
        let h2: Vec<C64> = mu2.iter().map(|&x| C64::new(x, 0.0)).collect();
        let expect = LN_2 / lambda_max_rank_two(&h1, &h2);
        let got = s.eb_n0_secure_fcsit_estimate[0].value.value().unwrap();
        assert!((got - expect).abs() < 1e-12 * expect);
        assert!(s.rician_extension);
    }
}
