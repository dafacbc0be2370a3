//! Rate regions: sweeps over the power split and both encoding orders, the
//! time-sharing baseline and the upper-right convex closure.

use rayon::prelude::*;
use serde::Serialize;

use crate::beamformer;
use crate::channel::{mix_seed, ChannelPair, SampledPair};
use crate::error::{Error, Result};
use crate::mc::McEstimate;
use crate::rates::{
    rate_pair_full_csit, rate_pair_statistical, raw_rates_statistical, FullCsitRule, InflationFactor, Order,
    RatePair,
};
use crate::solvers::{inflation_fixed_point, kkt_alternating_optimize_with, KktSolution, SolverConfig};

/// Which solver produced a region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    BeamformerFixedpoint,
    Kkt,
    FullCsit,
    TimeSharing,
    LowSnr,
    Weighted,
}

impl SolverKind {
    pub fn name(self) -> &'static str {
        match self {
            SolverKind::BeamformerFixedpoint => "beamformer_fixedpoint",
            SolverKind::Kkt => "kkt",
            SolverKind::FullCsit => "full_csit",
            SolverKind::TimeSharing => "time_sharing",
            SolverKind::LowSnr => "low_snr",
            SolverKind::Weighted => "weighted",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub solver: SolverKind,
    /// Digest of the configuration that produced the region; empty when the
    /// region was built programmatically.
    pub config_digest: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionBoundary {
    pub points: Vec<RatePair>,
    /// Frontier vertices in increasing `r1`, taken from `points`.
    pub hull: Vec<RatePair>,
    pub provenance: Provenance,
}

impl RegionBoundary {
    pub fn new(points: Vec<RatePair>, solver: SolverKind) -> Self {
        let coords: Vec<[f64; 2]> = points.iter().map(|p| [p.r1, p.r2]).collect();
        let hull = hull_indices(&coords).into_iter().map(|i| points[i]).collect();
        RegionBoundary { points, hull, provenance: Provenance { solver, config_digest: String::new() } }
    }

    pub fn with_digest(mut self, digest: impl Into<String>) -> Self {
        self.provenance.config_digest = digest.into();
        self
    }

    pub fn hull_coords(&self) -> Vec<[f64; 2]> {
        self.hull.iter().map(|p| [p.r1, p.r2]).collect()
    }

    /// Largest `r2` on the closed region at abscissa `r1`, or `None` past the
    /// largest `r1`.
    pub fn frontier_at(&self, r1: f64) -> Option<f64> {
        frontier_at(&self.hull_coords(), r1)
    }

    /// Whether `p` lies in the region after moving it `tol` toward the origin
    /// in both coordinates.
    pub fn contains(&self, p: [f64; 2], tol: f64) -> bool {
        let x = (p[0] - tol).max(0.0);
        match self.frontier_at(x) {
            Some(y) => p[1] - tol <= y,
            None => false,
        }
    }

    /// Largest standard error over the hull vertices.
    pub fn max_std_err(&self) -> f64 {
        self.hull.iter().flat_map(|p| p.mc_std_err).fold(0.0, f64::max)
    }

    /// Hull vertices of `inner` lying outside this region by more than
    /// `k` combined standard errors.
    pub fn violations_of(&self, inner: &RegionBoundary, k: f64) -> Vec<RatePair> {
        let outer_se = self.max_std_err();
        inner
            .hull
            .iter()
            .filter(|p| {
                let se = p.mc_std_err[0].max(p.mc_std_err[1]);
                let tol = k * (se * se + outer_se * outer_se).sqrt();
                !self.contains([p.r1, p.r2], tol)
            })
            .copied()
            .collect()
    }
}

fn frontier_at(hull: &[[f64; 2]], r1: f64) -> Option<f64> {
    let first = hull.first()?;
    let last = hull.last()?;
    if r1 > last[0] {
        return None;
    }
    if r1 <= first[0] {
        return Some(first[1]);
    }
    for w in hull.windows(2) {
        let (a, b) = (w[0], w[1]);
        if r1 <= b[0] {
            let t = if b[0] > a[0] { (r1 - a[0]) / (b[0] - a[0]) } else { 1.0 };
            return Some(a[1] + t * (b[1] - a[1]));
        }
    }
    Some(last[1])
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn hull_indices(points: &[[f64; 2]]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..points.len()).collect();
    idx.sort_by(|&i, &j| {
        points[i][0]
            .total_cmp(&points[j][0])
            .then(points[i][1].total_cmp(&points[j][1]))
            .then(i.cmp(&j))
    });
    idx.dedup_by(|a, b| points[*a] == points[*b]);
    let mut upper: Vec<usize> = Vec::new();
    for &i in &idx {
        while upper.len() >= 2
            && cross(points[upper[upper.len() - 2]], points[upper[upper.len() - 1]], points[i]) >= 0.0
        {
            upper.pop();
        }
        upper.push(i);
    }
    // drop the rising part left of the highest vertex
    let top = upper
        .iter()
        .enumerate()
        .fold(0, |best, (k, &i)| if points[i][1] >= points[upper[best]][1] { k } else { best });
    upper.split_off(top)
}

/// Vertices of the upper-right concave frontier of `points`, in increasing
/// `r1`: from the point of largest `r2` to the point of largest `r1`.
pub fn upper_hull(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    hull_indices(points).into_iter().map(|i| points[i]).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepSolver {
    /// Closed-form beamformers with the inflation factor from its fixed point.
    BeamformerFixedpoint,
    /// The alternating KKT optimizer inside `(0, 1)`, beamformers at the corners.
    Kkt,
}

impl SweepSolver {
    pub fn kind(self) -> SolverKind {
        match self {
            SweepSolver::BeamformerFixedpoint => SolverKind::BeamformerFixedpoint,
            SweepSolver::Kkt => SolverKind::Kkt,
        }
    }
}

fn cell_seed(seed: u64, alpha: f64, order: Order) -> u64 {
    mix_seed(mix_seed(seed, alpha.to_bits()), order.first() as u64)
}

fn sweep_cell(
    pair: &ChannelPair,
    samples: &SampledPair,
    p_t: f64,
    alpha: f64,
    order: Order,
    solver: SweepSolver,
    cfg: &SolverConfig,
) -> Result<RatePair> {
    let corner = alpha <= 0.0 || alpha >= 1.0;
    if solver == SweepSolver::Kkt && !corner {
        let sol = match kkt_alternating_optimize_with(pair, samples, order, alpha, p_t, cfg, cell_seed(cfg.seed, alpha, order)) {
            Ok(s) => s,
            Err(Error::NonConvergence(trace)) => KktSolution::from_trace(*trace)?,
            Err(e) => return Err(e),
        };
        let mut rp = rate_pair_statistical(&sol.t1, &sol.t2, &sol.b, order, alpha, samples)?;
        rp.iterations = sol.trace.iterations();
        return Ok(rp);
    }
    let sel = beamformer::select_for_order(pair, order, alpha, p_t)?;
    let (t1, t2) = beamformer::build_unit_rank_inputs(&sel, p_t);
    let (b, iterations) = match inflation_fixed_point(&t1, &t2, order, samples, cfg) {
        Ok((b, trace)) => (b, trace.iterations()),
        Err(Error::NonConvergence(trace)) => {
            let last = trace.last().expect("nonempty trace");
            (InflationFactor::new(last.b.clone())?, trace.iterations())
        }
        Err(e) => return Err(e),
    };
    let mut rp = rate_pair_statistical(&t1, &t2, &b, order, alpha, samples)?;
    rp.iterations = iterations;
    Ok(rp)
}

fn check_grid(alpha_grid: &[f64], p_t: f64) -> Result<()> {
    if let Some(a) = alpha_grid.iter().find(|a| !(0.0..=1.0).contains(*a)) {
        return Err(Error::InvalidArgument(format!("alpha = {a} outside [0, 1]")));
    }
    if !(p_t > 0.0 && p_t.is_finite()) {
        return Err(Error::InvalidArgument(format!("power budget {p_t} must be positive")));
    }
    Ok(())
}

fn cells(alpha_grid: &[f64]) -> Vec<(f64, Order)> {
    alpha_grid.iter().flat_map(|&a| Order::BOTH.map(|o| (a, o))).collect()
}

/// Statistical-CSIT region: every `(α, π)` cell on the grid, merged and hulled.
///
/// All cells share one draw of `cfg.samples` channels per user.
pub fn region_sweep(
    pair: &ChannelPair,
    p_t: f64,
    alpha_grid: &[f64],
    solver: SweepSolver,
    cfg: &SolverConfig,
) -> Result<RegionBoundary> {
    cfg.validate()?;
    check_grid(alpha_grid, p_t)?;
    let samples = pair.sample(cfg.samples, cfg.seed);
    region_sweep_on(pair, &samples, p_t, alpha_grid, solver, cfg)
}

/// As [`region_sweep`] on caller-supplied draws.
pub fn region_sweep_on(
    pair: &ChannelPair,
    samples: &SampledPair,
    p_t: f64,
    alpha_grid: &[f64],
    solver: SweepSolver,
    cfg: &SolverConfig,
) -> Result<RegionBoundary> {
    check_grid(alpha_grid, p_t)?;
    let points = cells(alpha_grid)
        .into_par_iter()
        .map(|(alpha, order)| {
            sweep_cell(pair, samples, p_t, alpha, order, solver, cfg).map_err(|e| Error::SolverDiverged {
                alpha,
                order,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RegionBoundary::new(points, solver.kind()))
}

/// Full-CSIT region with per-realization beamformers on the same grid.
pub fn full_csit_region(
    samples: &SampledPair,
    p_t: f64,
    alpha_grid: &[f64],
) -> Result<RegionBoundary> {
    check_grid(alpha_grid, p_t)?;
    let points = cells(alpha_grid)
        .into_par_iter()
        .map(|(alpha, order)| {
            rate_pair_full_csit(&FullCsitRule::Beamformer { alpha, p_t }, order, samples).map_err(|e| {
                Error::SolverDiverged { alpha, order, source: Box::new(e) }
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RegionBoundary::new(points, SolverKind::FullCsit))
}

/// Grid resolution of the time-sharing baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimeSharingGrid {
    /// Number of time fractions `τ` in `[0, 1]`.
    pub tau_steps: usize,
    /// Number of energy splits between the two phases.
    pub energy_steps: usize,
}

impl Default for TimeSharingGrid {
    fn default() -> Self {
        TimeSharingGrid { tau_steps: 21, energy_steps: 21 }
    }
}

/// Single-user wiretap rate (bits) of user `user` at power `p`.
fn wiretap_rate(pair: &ChannelPair, samples: &SampledPair, user: usize, p: f64) -> Result<McEstimate> {
    if p <= 0.0 {
        return Ok(McEstimate { mean: 0.0, std_err: 0.0 });
    }
    let order = if user == 0 { Order::OneTwo } else { Order::TwoOne };
    let sel = beamformer::select_for_order(pair, order, 1.0, p)?;
    let (t1, t2) = beamformer::build_unit_rank_inputs(&sel, p);
    let raw = raw_rates_statistical(&t1, &t2, &InflationFactor::zeros(t1.rank(), pair.n_t()), order, samples)?;
    Ok(McEstimate { mean: raw.pi1.mean.max(0.0), std_err: raw.pi1.std_err })
}

/// Time sharing between the two single-user wiretap schemes: a fraction `τ`
/// of the time serves user 1 at power `P_a`, the rest serves user 2 at `P_b`,
/// with `τP_a + (1−τ)P_b = P_T`. The point's `alpha` field holds `τ`.
pub fn time_sharing_region(
    pair: &ChannelPair,
    p_t: f64,
    grid: TimeSharingGrid,
    cfg: &SolverConfig,
) -> Result<RegionBoundary> {
    let samples = pair.sample(cfg.samples, cfg.seed);
    time_sharing_region_on(pair, &samples, p_t, grid)
}

pub fn time_sharing_region_on(
    pair: &ChannelPair,
    samples: &SampledPair,
    p_t: f64,
    grid: TimeSharingGrid,
) -> Result<RegionBoundary> {
    if !(p_t > 0.0 && p_t.is_finite()) {
        return Err(Error::InvalidArgument(format!("power budget {p_t} must be positive")));
    }
    if grid.tau_steps < 2 || grid.energy_steps < 1 {
        return Err(Error::InvalidArgument("time-sharing grid too small".into()));
    }
    let taus: Vec<f64> = (0..grid.tau_steps).map(|k| k as f64 / (grid.tau_steps - 1) as f64).collect();
    let splits: Vec<f64> = if grid.energy_steps == 1 {
        vec![1.0]
    } else {
        (0..grid.energy_steps).map(|k| k as f64 / (grid.energy_steps - 1) as f64).collect()
    };
    let mut jobs = Vec::new();
    for &tau in &taus {
        for &x in &splits {
            // energy share x to user 1
            let pa = if tau > 0.0 { x * p_t / tau } else { 0.0 };
            let pb = if tau < 1.0 { (1.0 - x) * p_t / (1.0 - tau) } else { 0.0 };
            if (tau == 0.0 && x > 0.0) || (tau == 1.0 && x < 1.0) {
                continue;
            }
            jobs.push((tau, pa, pb));
        }
    }
    let points = jobs
        .into_par_iter()
        .map(|(tau, pa, pb)| {
            let r1 = wiretap_rate(pair, samples, 0, pa)?;
            let r2 = wiretap_rate(pair, samples, 1, pb)?;
            Ok(RatePair {
                r1: tau * r1.mean,
                r2: (1.0 - tau) * r2.mean,
                order: Order::OneTwo,
                alpha: tau,
                mc_std_err: [tau * r1.std_err, (1.0 - tau) * r2.std_err],
                iterations: 0,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RegionBoundary::new(points, SolverKind::TimeSharing))
}
