//! The stationarity maps `f₁`, `g₁`, `g₂`.
//!
//! With `M⁻¹ = [[Q, q], [qᴴ, 1/s]]`, `w = P⁻¹Ch`, `s = d − cᴴP⁻¹c`:
//!
//! ```text
//! f₁ = E[Q]⁻¹ E[w hᴴ / s],                       E[Q] = P⁻¹ + E[w wᴴ / s]
//! g₁ = E₁[h hᴴT₁ / d] − E₂[g gᴴT₁ / (1+gᴴK₁g)] − E₁[h (hᴴT₁ − wᴴ) / s]
//! g₂ = E₂[g gᴴT₂ / (1+gᴴ(K₁+K₂)g)] − (bᴴP⁻¹b + E₁[(h−v)(h−v)ᴴ / s]) T₂,   v = bᴴw
//! ```
//!
//! `g₁` and `g₂` are the conjugate-Wirtinger derivatives of the unclamped
//! rates (in nats) of users `π₁` and `π₂` with respect to `T₁` and `T₂`.

use nalgebra::Cholesky;

use crate::channel::{ChannelSampleBatch, SampledPair};
use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, C64};
use crate::rates::{InflationFactor, InputFactor, OperatingPoint, Order};

#[derive(Debug, Clone, PartialEq)]
pub struct KktMaps {
    pub f1: ComplexMatrix,
    pub g1: ComplexMatrix,
    pub g2: ComplexMatrix,
}

fn mat_vec(m: &ComplexMatrix, v: &[C64]) -> Vec<C64> {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|k| m[(r, k)] * v[k]).sum())
        .collect()
}

pub(crate) fn f1_at(op: &OperatingPoint, first: &ChannelSampleBatch) -> Result<ComplexMatrix> {
    let n = op.rank();
    let n_t = first.n_t();
    if n == 0 {
        return Ok(ComplexMatrix::zeros(0, n_t));
    }
    let pinv = op.schur.inverse();
    let mut s1 = ComplexMatrix::zeros(n, n);
    let mut s2 = ComplexMatrix::zeros(n, n_t);
    for h in first.iter() {
        let bs = op.bordered(h);
        let w = mat_vec(pinv, &bs.col);
        let inv_s = 1.0 / bs.schur;
        for r in 0..n {
            let wr = w[r] * inv_s;
            for c in 0..n {
                s1[(r, c)] += wr * w[c].conj();
            }
            for k in 0..n_t {
                s2[(r, k)] += wr * h[k].conj();
            }
        }
    }
    let count = first.count() as f64;
    let mean_q = pinv + s1.unscale(count);
    let chol = Cholesky::new(mean_q).ok_or(Error::SingularMean)?;
    let b = chol.solve(&s2.unscale(count));
    if b.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::SingularMean);
    }
    Ok(b)
}

pub(crate) fn g1_at(op: &OperatingPoint, first: &ChannelSampleBatch, second: &ChannelSampleBatch) -> ComplexMatrix {
    let n = op.rank();
    let n_t = first.n_t();
    let t1 = &op.t1;
    let pinv = op.schur.inverse();
    let mut acc1 = ComplexMatrix::zeros(n_t, n);
    let mut u = vec![C64::new(0.0, 0.0); n];
    for h in first.iter() {
        let bs = op.bordered(h);
        let w = mat_vec(pinv, &bs.col);
        for (j, uj) in u.iter_mut().enumerate() {
            *uj = (0..n_t).map(|k| h[k].conj() * t1[(k, j)]).sum();
        }
        for j in 0..n {
            let coef = u[j] / bs.corner - (u[j] - w[j].conj()) / bs.schur;
            for i in 0..n_t {
                acc1[(i, j)] += h[i] * coef;
            }
        }
    }
    let mut acc2 = ComplexMatrix::zeros(n_t, n);
    for g in second.iter() {
        let denom = 1.0 + op.k1.quad_form(g);
        for (j, uj) in u.iter_mut().enumerate() {
            *uj = (0..n_t).map(|k| g[k].conj() * t1[(k, j)]).sum::<C64>() / denom;
        }
        for j in 0..n {
            for i in 0..n_t {
                acc2[(i, j)] += g[i] * u[j];
            }
        }
    }
    acc1.unscale(first.count() as f64) - acc2.unscale(second.count() as f64)
}

pub(crate) fn g2_at(op: &OperatingPoint, first: &ChannelSampleBatch, second: &ChannelSampleBatch) -> ComplexMatrix {
    let n_t = first.n_t();
    let t2 = &op.t2;
    let m = t2.ncols();
    let mut gain = ComplexMatrix::zeros(n_t, m);
    let mut u = vec![C64::new(0.0, 0.0); m];
    for g in second.iter() {
        let denom = 1.0 + op.ksum.quad_form(g);
        for (j, uj) in u.iter_mut().enumerate() {
            *uj = (0..n_t).map(|k| g[k].conj() * t2[(k, j)]).sum::<C64>() / denom;
        }
        for j in 0..m {
            for i in 0..n_t {
                gain[(i, j)] += g[i] * u[j];
            }
        }
    }
    let pinv = op.schur.inverse();
    let bh = op.b.adjoint();
    let mut load = ComplexMatrix::zeros(n_t, n_t);
    let mut r = vec![C64::new(0.0, 0.0); n_t];
    for h in first.iter() {
        let bs = op.bordered(h);
        let w = mat_vec(pinv, &bs.col);
        let v = mat_vec(&bh, &w);
        for k in 0..n_t {
            r[k] = h[k] - v[k];
        }
        let inv_s = 1.0 / bs.schur;
        for a in 0..n_t {
            let ra = r[a] * inv_s;
            for c in 0..n_t {
                load[(a, c)] += ra * r[c].conj();
            }
        }
    }
    let load = load.unscale(first.count() as f64) + &bh * pinv * &op.b;
    gain.unscale(second.count() as f64) - load * t2
}

fn op_and_batches<'a>(
    b: &InflationFactor,
    t1: &InputFactor,
    t2: &InputFactor,
    order: Order,
    samples: &'a SampledPair,
) -> Result<(OperatingPoint, &'a ChannelSampleBatch, &'a ChannelSampleBatch)> {
    if samples.n_t() != t1.n_t() {
        return Err(Error::DimensionMismatch("sample dimension".into()));
    }
    let op = OperatingPoint::new(t1, t2, b)?;
    Ok((op, samples.user(order.first()), samples.user(order.second())))
}

/// One step of the inflation-factor fixed-point map.
pub fn f1_map(
    b: &InflationFactor,
    t1: &InputFactor,
    t2: &InputFactor,
    order: Order,
    samples: &SampledPair,
) -> Result<InflationFactor> {
    let (op, first, _) = op_and_batches(b, t1, t2, order, samples)?;
    InflationFactor::new(f1_at(&op, first)?)
}

pub fn g1_map(
    b: &InflationFactor,
    t1: &InputFactor,
    t2: &InputFactor,
    order: Order,
    samples: &SampledPair,
) -> Result<ComplexMatrix> {
    let (op, first, second) = op_and_batches(b, t1, t2, order, samples)?;
    Ok(g1_at(&op, first, second))
}

pub fn g2_map(
    b: &InflationFactor,
    t1: &InputFactor,
    t2: &InputFactor,
    order: Order,
    samples: &SampledPair,
) -> Result<ComplexMatrix> {
    let (op, first, second) = op_and_batches(b, t1, t2, order, samples)?;
    Ok(g2_at(&op, first, second))
}

/// All three maps at one point, on the same draws.
pub fn kkt_maps(
    b: &InflationFactor,
    t1: &InputFactor,
    t2: &InputFactor,
    order: Order,
    samples: &SampledPair,
) -> Result<KktMaps> {
    let (op, first, second) = op_and_batches(b, t1, t2, order, samples)?;
    Ok(KktMaps { f1: f1_at(&op, first)?, g1: g1_at(&op, first, second), g2: g2_at(&op, first, second) })
}
