use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::fixed_point::record;
use super::maps::{f1_at, g1_at, g2_at};
use super::{max_abs_diff, Init, SolverConfig, SolverTrace};
use crate::beamformer;
use crate::channel::{mix_seed, ChannelPair, SampledPair};
use crate::error::{Error, Result};
use crate::linalg::{max_abs, ComplexMatrix, C64};
use crate::rates::{InflationFactor, InputFactor, OperatingPoint, Order};

#[derive(Debug, Clone)]
pub struct KktSolution {
    pub t1: InputFactor,
    pub t2: InputFactor,
    pub b: InflationFactor,
    pub trace: SolverTrace,
}

impl KktSolution {
    /// The last recorded iterate of a trace, converged or not.
    pub fn from_trace(trace: SolverTrace) -> Result<Self> {
        let last = trace.last().ok_or_else(|| Error::InvalidArgument("empty trace".into()))?;
        Ok(KktSolution {
            t1: InputFactor::new(last.t1.clone())?,
            t2: InputFactor::new(last.t2.clone())?,
            b: InflationFactor::new(last.b.clone())?,
            trace,
        })
    }
}

fn gaussian_factor(rng: &mut ChaCha8Rng, n_t: usize, power: f64) -> ComplexMatrix {
    if power <= 0.0 {
        return ComplexMatrix::zeros(n_t, 0);
    }
    let m = ComplexMatrix::from_fn(n_t, n_t, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        C64::new(re, im)
    });
    let scale = (power / m.norm_squared()).sqrt();
    m.scale(scale)
}

fn damped(t: &ComplexMatrix, g: &ComplexMatrix, damping: f64) -> (ComplexMatrix, Option<f64>) {
    let tn = t.norm();
    let gn = g.norm();
    if tn == 0.0 || gn == 0.0 {
        return (t.clone(), None);
    }
    let lambda = gn / tn;
    (g.unscale(lambda).scale(damping) + t.scale(1.0 - damping), Some(lambda))
}

fn settled(diff: f64, x: &ComplexMatrix, eps: f64) -> bool {
    diff <= eps || diff <= eps * max_abs(x)
}

/// Alternating KKT fixed-point optimization of `(b, T₁, T₂)` for a fixed
/// power split, with fresh draws from `cfg.samples`/`cfg.seed`.
pub fn kkt_alternating_optimize(
    pair: &ChannelPair,
    order: Order,
    alpha: f64,
    p_t: f64,
    cfg: &SolverConfig,
) -> Result<KktSolution> {
    let samples = pair.sample(cfg.samples, cfg.seed);
    kkt_alternating_optimize_with(pair, &samples, order, alpha, p_t, cfg, mix_seed(cfg.seed, 3))
}

/// As [`kkt_alternating_optimize`] on caller-supplied draws; `init_seed`
/// drives the random Step 1 initialization.
pub fn kkt_alternating_optimize_with(
    pair: &ChannelPair,
    samples: &SampledPair,
    order: Order,
    alpha: f64,
    p_t: f64,
    cfg: &SolverConfig,
    init_seed: u64,
) -> Result<KktSolution> {
    cfg.validate()?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!("alpha = {alpha} must lie strictly inside (0, 1)")));
    }
    if !(p_t > 0.0 && p_t.is_finite()) {
        return Err(Error::InvalidArgument(format!("power budget {p_t} must be positive")));
    }
    let n_t = pair.n_t();
    let (budget1, budget2) = (alpha * p_t, (1.0 - alpha) * p_t);
    let (mut t1, mut t2) = match cfg.init {
        Init::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(init_seed);
            (gaussian_factor(&mut rng, n_t, budget1), gaussian_factor(&mut rng, n_t, budget2))
        }
        Init::Warm => {
            let sel = beamformer::select_for_order(pair, order, alpha, p_t)?;
            let (a, b) = beamformer::build_unit_rank_inputs(&sel, p_t);
            (a.matrix().clone(), b.matrix().clone())
        }
    };
    let mut b = ComplexMatrix::zeros(t1.ncols(), n_t);
    let first = samples.user(order.first());
    let second = samples.user(order.second());
    let point = |b: &ComplexMatrix, t1: &ComplexMatrix, t2: &ComplexMatrix| -> Result<OperatingPoint> {
        OperatingPoint::new(&InputFactor::new(t1.clone())?, &InputFactor::new(t2.clone())?, &InflationFactor::new(b.clone())?)
    };

    let mut op = point(&b, &t1, &t2)?;
    let start = record(0, &op, order, samples, [None, None])?;
    let mut trace = SolverTrace::new([start.r1, start.r2]);

    for i in 1..=cfg.max_outer {
        // 2.A: inflation factor
        if op.rank() > 0 && op.t2.norm() > 0.0 {
            for _ in 0..cfg.max_inner {
                let next = f1_at(&op, first)?;
                let diff = max_abs_diff(&next, &b);
                b = next;
                op = point(&b, &t1, &t2)?;
                if settled(diff, &b, cfg.eps1) {
                    break;
                }
            }
        }
        // 2.B: first input
        let mut lambda1 = None;
        for _ in 0..cfg.max_inner {
            let g = g1_at(&op, first, second);
            let (next, lambda) = damped(&t1, &g, cfg.damping);
            lambda1 = lambda.or(lambda1);
            let diff = max_abs_diff(&next, &t1);
            t1 = next;
            op = point(&b, &t1, &t2)?;
            if lambda.is_none() || settled(diff, &t1, cfg.eps2) {
                break;
            }
        }
        // 2.C: second input
        let mut lambda2 = None;
        for _ in 0..cfg.max_inner {
            let g = g2_at(&op, first, second);
            let (next, lambda) = damped(&t2, &g, cfg.damping);
            lambda2 = lambda.or(lambda2);
            let diff = max_abs_diff(&next, &t2);
            t2 = next;
            op = point(&b, &t1, &t2)?;
            if lambda.is_none() || settled(diff, &t2, cfg.eps3) {
                break;
            }
        }
        debug_assert!(t1.norm_squared() <= budget1 + 1e-6 && t2.norm_squared() <= budget2 + 1e-6);
        trace.records.push(record(i, &op, order, samples, [lambda1, lambda2])?);
        if trace.last_change().is_some_and(|d| d <= cfg.delta) {
            trace.converged = true;
            return KktSolution::from_trace(trace);
        }
    }
    Err(Error::NonConvergence(Box::new(trace)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::ChannelStatistics;
    use crate::linalg::HermitianMatrix;

    fn reference_pair() -> ChannelPair {
        ChannelPair::new(
            ChannelStatistics::rayleigh(HermitianMatrix::from_real_diag(&[0.2, 0.04])).unwrap(),
            ChannelStatistics::rayleigh(HermitianMatrix::from_real_rows(&[&[0.1, 0.08], &[0.08, 0.1]]))
                .unwrap(),
        )
        .unwrap()
    }

    fn small_cfg() -> SolverConfig {
        SolverConfig { samples: 3_000, ..SolverConfig::default() }
    }

    #[test]
    fn budgets_hold_at_every_iterate() {
        let sol = match kkt_alternating_optimize(&reference_pair(), Order::OneTwo, 0.5, 10.0, &small_cfg()) {
            Ok(s) => s,
            Err(Error::NonConvergence(t)) => KktSolution::from_trace(*t).unwrap(),
            Err(e) => panic!("{e}"),
        };
        for r in &sol.trace.records {
            assert!(r.t1.norm_squared() <= 5.0 + 1e-6);
            assert!(r.t2.norm_squared() <= 5.0 + 1e-6);
        }
    }

    #[test]
    fn same_config_same_trace() {
        let cfg = small_cfg();
        let a = kkt_alternating_optimize(&reference_pair(), Order::TwoOne, 0.3, 10.0, &cfg);
        let b = kkt_alternating_optimize(&reference_pair(), Order::TwoOne, 0.3, 10.0, &cfg);
        let trace = |r: Result<KktSolution>| match r {
            Ok(s) => s.trace,
            Err(Error::NonConvergence(t)) => *t,
            Err(e) => panic!("{e}"),
        };
        assert_eq!(trace(a).to_json_lines(), trace(b).to_json_lines());
    }

    #[test]
    fn single_outer_iteration_is_not_converged() {
        let cfg = SolverConfig { max_outer: 1, ..small_cfg() };
        match kkt_alternating_optimize(&reference_pair(), Order::OneTwo, 0.5, 10.0, &cfg) {
            Err(Error::NonConvergence(t)) => assert_eq!(t.iterations(), 1),
            Ok(s) => assert!(s.trace.last_change().unwrap() <= cfg.delta),
            Err(e) => panic!("{e}"),
        }
    }

    #[test]
    fn corners_are_rejected() {
        assert!(matches!(
            kkt_alternating_optimize(&reference_pair(), Order::OneTwo, 0.0, 10.0, &small_cfg()),
            Err(Error::InvalidArgument(_))
        ));
    }
}
