//! Monte Carlo evaluation of achievable secrecy rate pairs.
//!
//! With the first-encoded user's input factored as `K₁ = T₁T₁ᴴ` and the
//! dirty-paper auxiliary `V = U' + b·U₂`, user `π₁` (encoded second, power
//! share `α`) and user `π₂` get
//!
//! ```text
//! R_π1 = ( E₁[ln(1 + hᴴ(K₁+K₂)h)] − Δ )⁺
//! R_π2 = ( E₂[ln(1 + gᴴ(K₁+K₂)g)] − Δ )⁺
//! Δ    = E₂[ln(1 + gᴴK₁g)] + E₁[ln |M(h)|]
//! M(h) = [[ I + bK₂bᴴ,          (T₁ᴴ + bK₂)h      ],
//!         [ hᴴ(T₁ + K₂bᴴ),      1 + hᴴ(K₁+K₂)h    ]]
//! ```
//!
//! where `E₁` runs over `π₁`'s channel and `E₂` over `π₂`'s. The top-left
//! block of `M` does not depend on the channel, so `ln|M|` is evaluated
//! through one Cholesky factorization and a per-sample Schur complement.

use std::f64::consts::LN_2;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::beamformer;
use crate::channel::{ChannelSampleBatch, SampledPair};
use crate::error::{Error, Result};
use crate::linalg::{BorderedSchur, ComplexMatrix, ComplexVector, HermitianMatrix, C64};
use crate::mc::{BatchMeans, McEstimate};

/// Encoding order `π`. User `π₁` is dirty-paper coded against user `π₂`'s
/// signal and receives the power share `α`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Order {
    /// `π = (1, 2)`
    #[serde(rename = "12")]
    OneTwo,
    /// `π = (2, 1)`
    #[serde(rename = "21")]
    TwoOne,
}

impl Order {
    pub const BOTH: [Order; 2] = [Order::OneTwo, Order::TwoOne];

    /// Zero-based index of user `π₁`.
    pub fn first(self) -> usize {
        match self {
            Order::OneTwo => 0,
            Order::TwoOne => 1,
        }
    }

    /// Zero-based index of user `π₂`.
    pub fn second(self) -> usize {
        1 - self.first()
    }
}

impl fmt::Display for Order {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Order::OneTwo => "12",
            Order::TwoOne => "21",
        })
    }
}

/// Tall factor `T` of an input covariance `K = T·Tᴴ`.
#[derive(Debug, Clone, PartialEq)]
pub struct InputFactor(ComplexMatrix);

impl InputFactor {
    pub fn new(t: ComplexMatrix) -> Result<Self> {
        if t.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("input factor".into()));
        }
        Ok(Self(t))
    }

    /// The `n_t × 0` factor of a zero covariance.
    pub fn empty(n_t: usize) -> Self {
        Self(ComplexMatrix::zeros(n_t, 0))
    }

    /// `√power · e` as an `n_t × 1` factor; zero power gives the empty factor.
    pub fn beam(direction: &ComplexVector, power: f64) -> Self {
        if power <= 0.0 {
            return Self::empty(direction.len());
        }
        let unit = direction.unscale(direction.norm());
        Self(ComplexMatrix::from_column_slice(direction.len(), 1, unit.scale(power.sqrt()).as_slice()))
    }

    pub fn from_covariance(k: &HermitianMatrix) -> Result<Self> {
        Ok(Self(crate::linalg::psd_factor(k, crate::linalg::RANK_TOL)?))
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn n_t(&self) -> usize {
        self.0.nrows()
    }

    pub fn rank(&self) -> usize {
        self.0.ncols()
    }

    pub fn covariance(&self) -> HermitianMatrix {
        HermitianMatrix::from_parts(&self.0 * self.0.adjoint())
    }

    /// `tr(T Tᴴ)`, the transmit power.
    pub fn power(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn within_budget(&self, budget: f64, rel_tol: f64) -> bool {
        self.power() <= budget + rel_tol * budget.abs().max(1.0)
    }
}

/// The `N × n_t` inflation factor `b = a·Hᴴ` of the dirty-paper auxiliary.
#[derive(Debug, Clone, PartialEq)]
pub struct InflationFactor(ComplexMatrix);

impl InflationFactor {
    pub fn new(b: ComplexMatrix) -> Result<Self> {
        if b.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("inflation factor".into()));
        }
        Ok(Self(b))
    }

    pub fn zeros(rank: usize, n_t: usize) -> Self {
        Self(ComplexMatrix::zeros(rank, n_t))
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn rank(&self) -> usize {
        self.0.nrows()
    }

    /// Plug-in of a single channel `h` into the full-CSIT MMSE inflation
    /// factor: `b = T₁ᴴ h hᴴ / (1 + hᴴK₁h)`.
    pub fn mmse_plugin(t1: &InputFactor, h: &ComplexVector) -> Self {
        let k1 = t1.covariance();
        let denom = 1.0 + k1.quad_form(h.as_slice());
        let num = t1.matrix().adjoint() * h * h.adjoint();
        Self(num.unscale(denom))
    }
}

/// One achievable `(R₁, R₂)` point in bits per channel use, labelled by user.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatePair {
    pub r1: f64,
    pub r2: f64,
    pub order: Order,
    pub alpha: f64,
    /// Standard errors of the unclamped estimates of `r1` and `r2`.
    pub mc_std_err: [f64; 2],
    /// Solver iterations spent on this point (0 for closed forms).
    pub iterations: usize,
}

impl RatePair {
    pub fn zero(order: Order, alpha: f64) -> Self {
        RatePair { r1: 0.0, r2: 0.0, order, alpha, mc_std_err: [0.0; 2], iterations: 0 }
    }

    pub fn rates(&self) -> [f64; 2] {
        [self.r1, self.r2]
    }

    /// Rate of user `π₁` and `π₂` respectively.
    pub fn by_order(&self) -> [f64; 2] {
        let r = self.rates();
        [r[self.order.first()], r[self.order.second()]]
    }

    pub fn in_nats(&self) -> Self {
        RatePair {
            r1: self.r1 * LN_2,
            r2: self.r2 * LN_2,
            mc_std_err: [self.mc_std_err[0] * LN_2, self.mc_std_err[1] * LN_2],
            ..*self
        }
    }
}

/// Unclamped rate estimates for users `π₁` and `π₂`, in bits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawRates {
    pub pi1: McEstimate,
    pub pi2: McEstimate,
}

impl RawRates {
    pub fn clamped(&self, order: Order, alpha: f64) -> RatePair {
        let mut r = [0.0; 2];
        let mut se = [0.0; 2];
        r[order.first()] = self.pi1.mean.max(0.0);
        r[order.second()] = self.pi2.mean.max(0.0);
        se[order.first()] = self.pi1.std_err;
        se[order.second()] = self.pi2.std_err;
        RatePair { r1: r[0], r2: r[1], order, alpha, mc_std_err: se, iterations: 0 }
    }
}

/// Constants of one `(T₁, T₂, b)` configuration shared by every sample.
#[derive(Debug, Clone)]
pub(crate) struct OperatingPoint {
    pub t1: ComplexMatrix,
    pub t2: ComplexMatrix,
    pub b: ComplexMatrix,
    pub k1: HermitianMatrix,
    pub ksum: HermitianMatrix,
    /// `T₁ᴴ + b K₂`, so that the border of `M(h)` is `C h`.
    pub border: ComplexMatrix,
    /// Top-left block `I + b K₂ bᴴ`.
    pub schur: BorderedSchur,
}

/// Per-sample quantities of `M(h)`.
pub(crate) struct BorderedSample {
    /// `C h`
    pub col: Vec<C64>,
    /// `1 + hᴴ(K₁+K₂)h`
    pub corner: f64,
    /// `corner − colᴴ P⁻¹ col`
    pub schur: f64,
}

impl OperatingPoint {
    pub fn new(t1: &InputFactor, t2: &InputFactor, b: &InflationFactor) -> Result<Self> {
        let n_t = t1.n_t();
        if t2.n_t() != n_t || b.matrix().ncols() != n_t || b.rank() != t1.rank() {
            return Err(Error::DimensionMismatch(format!(
                "T1 {:?}, T2 {:?}, b {:?}",
                t1.matrix().shape(),
                t2.matrix().shape(),
                b.matrix().shape()
            )));
        }
        let k1 = t1.covariance();
        let k2 = t2.covariance();
        let ksum = k1.add(&k2);
        let bm = b.matrix();
        let n = t1.rank();
        let topleft = HermitianMatrix::from_parts(
            ComplexMatrix::identity(n, n) + bm * k2.as_matrix() * bm.adjoint(),
        );
        let schur = BorderedSchur::new(&topleft)?;
        let border = t1.matrix().adjoint() + bm * k2.as_matrix();
        Ok(Self {
            t1: t1.matrix().clone(),
            t2: t2.matrix().clone(),
            b: bm.clone(),
            k1,
            ksum,
            border,
            schur,
        })
    }

    pub fn rank(&self) -> usize {
        self.t1.ncols()
    }

    pub fn bordered(&self, h: &[C64]) -> BorderedSample {
        let n = self.rank();
        let mut col = vec![C64::new(0.0, 0.0); n];
        for (r, c) in col.iter_mut().enumerate() {
            for (k, hk) in h.iter().enumerate() {
                *c += self.border[(r, k)] * hk;
            }
        }
        let corner = 1.0 + self.ksum.quad_form(h);
        let schur = self.schur.schur_complement(&col, corner);
        BorderedSample { col, corner, schur }
    }

    /// `ln |M(h)|`.
    pub fn log_det_m(&self, s: &BorderedSample) -> Result<f64> {
        if s.schur <= 0.0 || !s.schur.is_finite() {
            return Err(Error::Singular);
        }
        Ok(self.schur.log_det_topleft() + s.schur.ln())
    }

    /// Batch means (nats) of `ln(1+hᴴK h) − ln|M|`, `ln|M|` over `π₁` draws,
    /// and of `ln(1+gᴴK g)`, `ln(1+gᴴK₁g)` over `π₂` draws.
    pub fn terms(&self, first: &ChannelSampleBatch, second: &ChannelSampleBatch) -> Result<RateTerms> {
        let mut failed = false;
        let [gain_first, log_m] = BatchMeans::collect(first, |h| {
            let s = self.bordered(h);
            match self.log_det_m(&s) {
                Ok(lm) => [s.corner.ln(), lm],
                Err(_) => {
                    failed = true;
                    [0.0, 0.0]
                }
            }
        });
        if failed {
            return Err(Error::Singular);
        }
        let [gain_second, leak_second] = BatchMeans::collect(second, |g| {
            [(1.0 + self.ksum.quad_form(g)).ln(), (1.0 + self.k1.quad_form(g)).ln()]
        });
        Ok(RateTerms { gain_first, log_m, gain_second, leak_second })
    }
}

pub(crate) struct RateTerms {
    gain_first: BatchMeans,
    log_m: BatchMeans,
    gain_second: BatchMeans,
    leak_second: BatchMeans,
}

impl RateTerms {
    fn delta(&self) -> BatchMeans {
        &self.leak_second + &self.log_m
    }

    pub fn raw_bits(&self) -> RawRates {
        let delta = self.delta();
        let pi1 = &(&self.gain_first - &delta) * (1.0 / LN_2);
        let pi2 = &(&self.gain_second - &delta) * (1.0 / LN_2);
        RawRates { pi1: pi1.estimate(), pi2: pi2.estimate() }
    }
}

fn order_batches(samples: &SampledPair, order: Order) -> (&ChannelSampleBatch, &ChannelSampleBatch) {
    (samples.user(order.first()), samples.user(order.second()))
}

/// `Δ` in bits: `E₂[log₂(1+gᴴK₁g)] + E₁[log₂|M(h)|]`, with `first` the draws
/// of user `π₁` and `second` those of user `π₂`.
pub fn delta_term(
    t1: &InputFactor,
    k_u2: &HermitianMatrix,
    b: &InflationFactor,
    first: &ChannelSampleBatch,
    second: &ChannelSampleBatch,
) -> Result<McEstimate> {
    let t2 = InputFactor::from_covariance(k_u2)?;
    let op = OperatingPoint::new(t1, &t2, b)?;
    if first.n_t() != t1.n_t() || second.n_t() != t1.n_t() {
        return Err(Error::DimensionMismatch("sample dimension".into()));
    }
    let terms = op.terms(first, second)?;
    Ok((&terms.delta() * (1.0 / LN_2)).estimate())
}

/// Unclamped rates of users `π₁`, `π₂` in bits.
pub fn raw_rates_statistical(
    t1: &InputFactor,
    t2: &InputFactor,
    b: &InflationFactor,
    order: Order,
    samples: &SampledPair,
) -> Result<RawRates> {
    if samples.n_t() != t1.n_t() {
        return Err(Error::DimensionMismatch("sample dimension".into()));
    }
    let op = OperatingPoint::new(t1, t2, b)?;
    let (first, second) = order_batches(samples, order);
    let mut raw = op.terms(first, second)?.raw_bits();
    // a user without power has no rate; skip the rounding residue
    let silent = McEstimate { mean: 0.0, std_err: 0.0 };
    if t1.power() == 0.0 {
        raw.pi1 = silent;
    }
    if t2.power() == 0.0 {
        raw.pi2 = silent;
    }
    Ok(raw)
}

/// Achievable secrecy rate pair with statistical CSIT for inputs
/// `K_π1 = T₁T₁ᴴ`, `K_π2 = T₂T₂ᴴ` and inflation factor `b`.
///
/// All expectations over one user's channel share that user's draws.
pub fn rate_pair_statistical(
    t1: &InputFactor,
    t2: &InputFactor,
    b: &InflationFactor,
    order: Order,
    alpha: f64,
    samples: &SampledPair,
) -> Result<RatePair> {
    Ok(raw_rates_statistical(t1, t2, b, order, samples)?.clamped(order, alpha))
}

/// How the transmitter picks the input covariances per realization when it
/// knows both channels.
#[derive(Debug, Clone)]
pub enum FullCsitRule {
    /// Per-realization beamformers: the two sequential generalized
    /// eigenvectors with `hhᴴ` in place of the second moments.
    Beamformer { alpha: f64, p_t: f64 },
    /// The same covariances for every realization.
    Fixed { k_pi1: HermitianMatrix, k_pi2: HermitianMatrix },
}

impl FullCsitRule {
    fn covariances(&self, h_pi1: &[C64], h_pi2: &[C64]) -> Result<(HermitianMatrix, HermitianMatrix)> {
        match self {
            FullCsitRule::Fixed { k_pi1, k_pi2 } => Ok((k_pi1.clone(), k_pi2.clone())),
            FullCsitRule::Beamformer { alpha, p_t } => {
                let r1 = HermitianMatrix::outer(&ComplexVector::from_column_slice(h_pi1));
                let r2 = HermitianMatrix::outer(&ComplexVector::from_column_slice(h_pi2));
                let sel = beamformer::select_from_moments(&r1, &r2, *alpha, *p_t)?;
                let (t1, t2) = beamformer::build_unit_rank_inputs(&sel, *p_t);
                Ok((t1.covariance(), t2.covariance()))
            }
        }
    }
}

/// Full-CSIT secrecy rate pair with the positive part taken per realization.
/// The inflation factor is the per-realization MMSE one, which cancels the
/// interference at user `π₁` completely, so it does not appear.
///
/// Draw `i` of user 1 is paired with draw `i` of user 2.
pub fn rate_pair_full_csit(rule: &FullCsitRule, order: Order, samples: &SampledPair) -> Result<RatePair> {
    let (first, second) = order_batches(samples, order);
    let alpha = match rule {
        FullCsitRule::Beamformer { alpha, .. } => *alpha,
        FullCsitRule::Fixed { .. } => f64::NAN,
    };
    let mut idx = 0;
    let mut failure = None;
    let [r_pi1, r_pi2] = BatchMeans::collect(first, |h1| {
        let h2 = second.get(idx);
        idx += 1;
        match rule.covariances(h1, h2) {
            Ok((k1, k2)) => {
                let ksum = k1.add(&k2);
                let a1 = 1.0 + k1.quad_form(h1);
                let a2 = 1.0 + k1.quad_form(h2);
                let s1 = 1.0 + ksum.quad_form(h1);
                let s2 = 1.0 + ksum.quad_form(h2);
                [(a1 / a2).log2().max(0.0), ((s2 * a1) / (s1 * a2)).log2().max(0.0)]
            }
            Err(e) => {
                failure.get_or_insert(e);
                [0.0, 0.0]
            }
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    let raw = RawRates { pi1: r_pi1.estimate(), pi2: r_pi2.estimate() };
    Ok(raw.clamped(order, alpha))
}
