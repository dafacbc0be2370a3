use super::maps::f1_at;
use super::{IterationRecord, SolverConfig, SolverTrace};
use crate::channel::SampledPair;
use crate::error::{Error, Result};
use crate::rates::{InflationFactor, InputFactor, OperatingPoint, Order};

/// Power below which the second input is treated as absent.
const ZERO_POWER: f64 = 1e-14;

pub(crate) fn record(
    iteration: usize,
    op: &OperatingPoint,
    order: Order,
    samples: &SampledPair,
    lambdas: [Option<f64>; 2],
) -> Result<IterationRecord> {
    let raw = op.terms(samples.user(order.first()), samples.user(order.second()))?.raw_bits();
    Ok(IterationRecord {
        iteration,
        b: op.b.clone(),
        t1: op.t1.clone(),
        t2: op.t2.clone(),
        lambda1: lambdas[0],
        lambda2: lambdas[1],
        r1: raw.pi1.mean.max(0.0),
        r2: raw.pi2.mean.max(0.0),
    })
}

/// Iterates `b ← f₁(b)` from `b = 0` on the frozen draws in `samples` until
/// successive rate pairs (bits) differ by less than `cfg.delta`.
///
/// Without a second input the inflation factor has no effect on either rate,
/// so `b = 0` is returned straight away. On hitting `cfg.max_inner` the
/// error carries the full trace; its last record is still a feasible point.
pub fn inflation_fixed_point(
    t1: &InputFactor,
    t2: &InputFactor,
    order: Order,
    samples: &SampledPair,
    cfg: &SolverConfig,
) -> Result<(InflationFactor, SolverTrace)> {
    cfg.validate()?;
    let n_t = t1.n_t();
    let mut b = InflationFactor::zeros(t1.rank(), n_t);
    let op = OperatingPoint::new(t1, t2, &b)?;
    let start = record(0, &op, order, samples, [None, None])?;
    let mut trace = SolverTrace::new([start.r1, start.r2]);
    if t1.rank() == 0 || t2.power() <= ZERO_POWER {
        trace.records.push(start);
        trace.converged = true;
        return Ok((b, trace));
    }
    let first = samples.user(order.first());
    let mut op = op;
    for i in 1..=cfg.max_inner {
        b = InflationFactor::new(f1_at(&op, first)?)?;
        op = OperatingPoint::new(t1, t2, &b)?;
        trace.records.push(record(i, &op, order, samples, [None, None])?);
        if trace.last_change().is_some_and(|d| d < cfg.delta) {
            trace.converged = true;
            return Ok((b, trace));
        }
    }
    Err(Error::NonConvergence(Box::new(trace)))
}
