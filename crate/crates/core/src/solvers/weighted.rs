use super::kkt::{kkt_alternating_optimize_with, KktSolution};
use super::{SolverConfig, SolverTrace};
use crate::beamformer;
use crate::channel::{mix_seed, ChannelPair, SampledPair};
use crate::error::{Error, Result};
use crate::rates::{rate_pair_statistical, InflationFactor, Order, RatePair};

/// Weights above this are treated as this.
pub const MU_CAP: f64 = 1e6;

/// Line search over the power split: a uniform grid, then golden-section
/// refinement between the best grid point's neighbours.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedSearch {
    pub grid_steps: usize,
    pub refine_iters: usize,
}

impl Default for WeightedSearch {
    fn default() -> Self {
        WeightedSearch { grid_steps: 11, refine_iters: 6 }
    }
}

struct Candidate {
    pair: RatePair,
    trace: SolverTrace,
    score: f64,
}

fn evaluate(
    pair: &ChannelPair,
    samples: &SampledPair,
    order: Order,
    alpha: f64,
    p_t: f64,
    mu: f64,
    cfg: &SolverConfig,
) -> Result<Candidate> {
    let (t1, t2, b, trace) = if alpha <= 0.0 || alpha >= 1.0 {
        let sel = beamformer::select_for_order(pair, order, alpha, p_t)?;
        let (t1, t2) = beamformer::build_unit_rank_inputs(&sel, p_t);
        let b = InflationFactor::zeros(t1.rank(), pair.n_t());
        let mut trace = SolverTrace::new([0.0; 2]);
        trace.converged = true;
        (t1, t2, b, trace)
    } else {
        let seed = mix_seed(cfg.seed, alpha.to_bits());
        let sol = match kkt_alternating_optimize_with(pair, samples, order, alpha, p_t, cfg, seed) {
            Ok(s) => s,
            Err(Error::NonConvergence(trace)) => KktSolution::from_trace(*trace)?,
            Err(e) => return Err(e),
        };
        (sol.t1, sol.t2, sol.b, sol.trace)
    };
    let mut rp = rate_pair_statistical(&t1, &t2, &b, order, alpha, samples)?;
    rp.iterations = trace.iterations();
    let [r_pi1, r_pi2] = rp.by_order();
    Ok(Candidate { pair: rp, trace, score: r_pi1 + mu * r_pi2 })
}

/// Maximizes `R_π1 + μ·R_π2` over the power split and, for each split, over
/// `(b, T₁, T₂)` with the alternating KKT solver. Returns the best pair and
/// the trace of the solve that produced it.
pub fn weighted_boundary(
    pair: &ChannelPair,
    order: Order,
    p_t: f64,
    mu_weight: f64,
    cfg: &SolverConfig,
    search: WeightedSearch,
) -> Result<(RatePair, SolverTrace)> {
    if mu_weight.is_nan() || mu_weight < 0.0 {
        return Err(Error::InvalidArgument(format!("weight {mu_weight} must be nonnegative")));
    }
    if search.grid_steps < 2 {
        return Err(Error::InvalidArgument("alpha search needs at least two grid points".into()));
    }
    let mu = mu_weight.min(MU_CAP);
    let samples = pair.sample(cfg.samples, cfg.seed);
    let steps = search.grid_steps;
    let grid: Vec<f64> = (0..steps).map(|k| k as f64 / (steps - 1) as f64).collect();
    let mut best: Option<(usize, Candidate)> = None;
    for (k, &alpha) in grid.iter().enumerate() {
        let c = evaluate(pair, &samples, order, alpha, p_t, mu, cfg)?;
        if best.as_ref().is_none_or(|(_, b)| c.score > b.score) {
            best = Some((k, c));
        }
    }
    let (k, mut best) = best.expect("grid is nonempty");

    let h = 1.0 / (steps - 1) as f64;
    let (mut lo, mut hi) = (grid[k] - h, grid[k] + h);
    lo = lo.max(0.5 * h);
    hi = hi.min(1.0 - 0.5 * h);
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    if search.refine_iters > 0 && lo < hi {
        let mut x1 = hi - ratio * (hi - lo);
        let mut x2 = lo + ratio * (hi - lo);
        let mut c1 = evaluate(pair, &samples, order, x1, p_t, mu, cfg)?;
        let mut c2 = evaluate(pair, &samples, order, x2, p_t, mu, cfg)?;
        for _ in 0..search.refine_iters {
            if c1.score >= c2.score {
                hi = x2;
                x2 = x1;
                c2 = c1;
                x1 = hi - ratio * (hi - lo);
                c1 = evaluate(pair, &samples, order, x1, p_t, mu, cfg)?;
            } else {
                lo = x1;
                x1 = x2;
                c1 = c2;
                x2 = lo + ratio * (hi - lo);
                c2 = evaluate(pair, &samples, order, x2, p_t, mu, cfg)?;
            }
        }
        for c in [c1, c2] {
            if c.score > best.score {
                best = c;
            }
        }
    }
    Ok((best.pair, best.trace))
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

    fn quick() -> (SolverConfig, WeightedSearch) {
        (
            SolverConfig { samples: 2_000, ..SolverConfig::default() },
            WeightedSearch { grid_steps: 5, refine_iters: 2 },
        )
    }

    #[test]
    fn zero_weight_gives_everything_to_the_first_user() {
        let (cfg, search) = quick();
        let (p, _) = weighted_boundary(&reference_pair(), Order::OneTwo, 10.0, 0.0, &cfg, search).unwrap();
        assert!(p.alpha > 0.7, "alpha = {}", p.alpha);
        assert!(p.r1 > 0.0);
    }

    #[test]
    fn huge_weight_gives_everything_to_the_second_user() {
        let (cfg, search) = quick();
        let (p, _) = weighted_boundary(&reference_pair(), Order::OneTwo, 10.0, 1e12, &cfg, search).unwrap();
        assert!(p.alpha < 0.3, "alpha = {}", p.alpha);
        assert!(p.r2 > 0.0);
    }

    #[test]
    fn negative_weight_is_rejected() {
        let (cfg, search) = quick();
        assert!(weighted_boundary(&reference_pair(), Order::OneTwo, 10.0, -1.0, &cfg, search).is_err());
    }
}
