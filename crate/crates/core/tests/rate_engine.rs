use std::f64::consts::LN_2;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use secrecy_region::beamformer::{build_unit_rank_inputs, select_for_order};
use secrecy_region::linalg::dense_det;
use secrecy_region::rates::{delta_term, rate_pair_statistical, raw_rates_statistical};
use secrecy_region::region::{
    full_csit_region, region_sweep, region_sweep_on, time_sharing_region_on, SweepSolver, TimeSharingGrid,
};
use secrecy_region::solvers::inflation_fixed_point;
use secrecy_region::{
    ChannelPair, ChannelStatistics, ComplexMatrix, HermitianMatrix, InflationFactor, InputFactor, Order,
    SolverConfig, C64,
};

fn k1() -> HermitianMatrix {
    HermitianMatrix::from_real_diag(&[0.2, 0.04])
}

fn k2() -> HermitianMatrix {
    HermitianMatrix::from_real_rows(&[&[0.1, 0.08], &[0.08, 0.1]])
}

fn reference_pair() -> ChannelPair {
    ChannelPair::new(ChannelStatistics::rayleigh(k1()).unwrap(), ChannelStatistics::rayleigh(k2()).unwrap()).unwrap()
}

/// `M(h)` assembled entry by entry from its definition.
fn dense_m(t1: &ComplexMatrix, k_u1: &ComplexMatrix, k_u2: &ComplexMatrix, b: &ComplexMatrix, h: &[C64]) -> ComplexMatrix {
    let n = t1.ncols();
    let hv = ComplexMatrix::from_column_slice(h.len(), 1, h);
    let top_left = ComplexMatrix::identity(n, n) + b * k_u2 * b.adjoint();
    let top_right = (t1.adjoint() + b * k_u2) * &hv;
    let bottom_left = hv.adjoint() * (t1 + k_u2 * b.adjoint());
    let corner = ComplexMatrix::identity(1, 1) + hv.adjoint() * (k_u1 + k_u2) * &hv;
    let mut m = ComplexMatrix::zeros(n + 1, n + 1);
    m.view_mut((0, 0), (n, n)).copy_from(&top_left);
    m.view_mut((0, n), (n, 1)).copy_from(&top_right);
    m.view_mut((n, 0), (1, n)).copy_from(&bottom_left);
    m[(n, n)] = corner[(0, 0)];
    m
}

#[test]
fn delta_matches_dense_determinant_oracle() {
    let pair = reference_pair();
    let cfg = SolverConfig { samples: 20_000, ..SolverConfig::default() };
    let samples = pair.sample(cfg.samples, 11);
    let sel = select_for_order(&pair, Order::OneTwo, 0.5, 10.0).unwrap();
    let (t1, t2) = build_unit_rank_inputs(&sel, 10.0);
    let (b, _) = inflation_fixed_point(&t1, &t2, Order::OneTwo, &samples, &cfg).unwrap();
    assert!(b.matrix().norm() > 0.0);
    let k_u1 = t1.covariance();
    let k_u2 = t2.covariance();
    let delta = delta_term(&t1, &k_u2, &b, samples.user(0), samples.user(1)).unwrap();

    let n1 = samples.count() as f64;
    let mut log_m = 0.0;
    for h in samples.user(0).iter() {
        let d = dense_det(&dense_m(t1.matrix(), k_u1.as_matrix(), k_u2.as_matrix(), b.matrix(), h));
        assert!(d.im.abs() < 1e-9 * d.re.abs());
        log_m += d.re.log2();
    }
    let leak: f64 = samples.user(1).iter().map(|g| (1.0 + k_u1.quad_form(g)).log2()).sum();
    let oracle = leak / n1 + log_m / n1;
    assert!((delta.mean - oracle).abs() < 1e-10, "{} vs {}", delta.mean, oracle);
    assert!(delta.std_err > 0.0);
}

/// Independent sampler: `h = μ + K^{1/2} ψ` with `K^{1/2}` from the
/// closed-form 2×2 diagonal case only.
fn diag_draws(var: [f64; 2], count: usize, seed: u64) -> Vec<[C64; 2]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let mut h = [C64::new(0.0, 0.0); 2];
            for (k, v) in var.iter().enumerate() {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                h[k] = C64::new(re, im) * (v / 2.0).sqrt();
            }
            h
        })
        .collect()
}

#[test]
fn wiretap_degeneration_agrees_with_independent_estimate() {
    // diagonal covariances so the oracle needs no matrix square root
    let pair = ChannelPair::new(
        ChannelStatistics::rayleigh(HermitianMatrix::from_real_diag(&[0.3, 0.05])).unwrap(),
        ChannelStatistics::rayleigh(HermitianMatrix::from_real_diag(&[0.08, 0.2])).unwrap(),
    )
    .unwrap();
    let n = 100_000;
    let samples = pair.sample(n, 21);
    let t1 = InputFactor::new(ComplexMatrix::from_column_slice(2, 1, &[C64::new(2.0, 0.0), C64::new(0.5, 0.5)])).unwrap();
    let ku1 = t1.covariance();
    let p = rate_pair_statistical(&t1, &InputFactor::empty(2), &InflationFactor::zeros(1, 2), Order::OneTwo, 1.0, &samples)
        .unwrap();

    let gain = |draws: &[[C64; 2]]| -> (f64, f64) {
        let v: Vec<f64> = draws.iter().map(|h| (1.0 + ku1.quad_form(h)).log2()).collect();
        let m = v.iter().sum::<f64>() / v.len() as f64;
        let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64;
        (m, (var / v.len() as f64).sqrt())
    };
    let (a, sa) = gain(&diag_draws([0.3, 0.05], n, 1001));
    let (e, se) = gain(&diag_draws([0.08, 0.2], n, 1002));
    let oracle = (a - e).max(0.0);
    let tol = 3.0 * (sa * sa + se * se + p.mc_std_err[0].powi(2)).sqrt();
    assert!((p.r1 - oracle).abs() <= tol, "{} vs {} (tol {})", p.r1, oracle, tol);
    assert_eq!(p.r2, 0.0);
}

#[test]
fn inflation_factor_strictly_helps_the_dirty_paper_user() {
    let pair = reference_pair();
    let cfg = SolverConfig::default();
    let samples = pair.sample(cfg.samples, cfg.seed);
    let sel = select_for_order(&pair, Order::OneTwo, 0.5, 10.0).unwrap();
    let (t1, t2) = build_unit_rank_inputs(&sel, 10.0);
    let (b, trace) = inflation_fixed_point(&t1, &t2, Order::OneTwo, &samples, &cfg).unwrap();
    assert!(trace.converged);
    let with_b = raw_rates_statistical(&t1, &t2, &b, Order::OneTwo, &samples).unwrap();
    let zero = raw_rates_statistical(&t1, &t2, &InflationFactor::zeros(1, 2), Order::OneTwo, &samples).unwrap();
    let se = (with_b.pi1.std_err.powi(2) + zero.pi1.std_err.powi(2)).sqrt();
    assert!(with_b.pi1.mean - zero.pi1.mean > 3.0 * se, "{:?} vs {:?}", with_b.pi1, zero.pi1);
}

#[test]
fn degraded_pair_gives_one_user_nothing() {
    let pair = ChannelPair::new(
        ChannelStatistics::rayleigh(k1()).unwrap(),
        ChannelStatistics::rayleigh(k1().scale(4.0)).unwrap(),
    )
    .unwrap();
    let cfg = SolverConfig { samples: 20_000, ..SolverConfig::default() };
    let grid = [0.0, 0.3, 0.7, 1.0];
    let region = region_sweep(&pair, 10.0, &grid, SweepSolver::BeamformerFixedpoint, &cfg).unwrap();
    for p in &region.points {
        assert!(p.r1.min(p.r2) <= 3.0 * p.mc_std_err[0].max(p.mc_std_err[1]), "{p:?}");
    }
    // the frontier collapses onto the axis of the stronger user
    assert!(region.hull.iter().all(|p| p.r1 <= 3.0 * p.mc_std_err[0]));
}

#[test]
fn corner_only_sweep_gives_the_two_wiretap_points() {
    let pair = reference_pair();
    let cfg = SolverConfig { samples: 20_000, ..SolverConfig::default() };
    let samples = pair.sample(cfg.samples, cfg.seed);
    let region = region_sweep_on(&pair, &samples, 10.0, &[0.0, 1.0], SweepSolver::BeamformerFixedpoint, &cfg).unwrap();
    assert_eq!(region.points.len(), 4);
    assert_eq!(region.hull.len(), 2);
    assert_eq!(region.hull[0].r1, 0.0);
    assert_eq!(region.hull[1].r2, 0.0);
    assert!(region.hull[0].r2 > 0.0 && region.hull[1].r1 > 0.0);
}

#[test]
fn time_sharing_examples() {
    let pair = reference_pair();
    let samples = pair.sample(20_000, 5);
    let ts = time_sharing_region_on(&pair, &samples, 10.0, TimeSharingGrid { tau_steps: 3, energy_steps: 3 }).unwrap();
    let find = |tau: f64, r1_pos: bool| {
        ts.points.iter().filter(|p| p.alpha == tau).map(|p| (p.r1, p.r2)).collect::<Vec<_>>()
            .into_iter()
            .find(|&(a, _)| (a > 0.0) == r1_pos)
    };
    let (a, b) = find(1.0, true).unwrap();
    assert!(a > 0.0 && b == 0.0);
    let (_, c) = ts.points.iter().find(|p| p.alpha == 0.0).map(|p| (p.r1, p.r2)).unwrap();
    // tau = 0.5 with both phases at full power is the midpoint of the corners
    let mid = ts
        .points
        .iter()
        .find(|p| p.alpha == 0.5 && (p.r1 - a / 2.0).abs() < 1e-12)
        .expect("midpoint present");
    assert!((mid.r2 - c / 2.0).abs() < 1e-12);
}

#[test]
fn full_csit_dominates_statistical_per_alpha() {
    let pair = reference_pair();
    let cfg = SolverConfig { samples: 20_000, ..SolverConfig::default() };
    let samples = pair.sample(cfg.samples, cfg.seed);
    let grid: Vec<f64> = (0..=5).map(|k| k as f64 / 5.0).collect();
    let stat = region_sweep_on(&pair, &samples, 10.0, &grid, SweepSolver::BeamformerFixedpoint, &cfg).unwrap();
    let full = full_csit_region(&samples, 10.0, &grid).unwrap();
    for (s, f) in stat.points.iter().zip(&full.points) {
        assert_eq!((s.alpha, s.order), (f.alpha, f.order));
        for k in 0..2 {
            let se = (s.mc_std_err[k].powi(2) + f.mc_std_err[k].powi(2)).sqrt();
            assert!(f.rates()[k] >= s.rates()[k] - 3.0 * se, "alpha {} order {}: {:?} vs {:?}", s.alpha, s.order, f, s);
        }
    }
}

#[test]
fn rates_are_reported_in_bits() {
    let pair = reference_pair();
    let samples = pair.sample(5_000, 3);
    let sel = select_for_order(&pair, Order::OneTwo, 1.0, 10.0).unwrap();
    let (t1, t2) = build_unit_rank_inputs(&sel, 10.0);
    let p = rate_pair_statistical(&t1, &t2, &InflationFactor::zeros(1, 2), Order::OneTwo, 1.0, &samples).unwrap();
    let ku1 = t1.covariance();
    let nats: f64 = samples.user(0).iter().map(|h| (1.0 + ku1.quad_form(h)).ln()).sum::<f64>() / 5_000.0
        - samples.user(1).iter().map(|h| (1.0 + ku1.quad_form(h)).ln()).sum::<f64>() / 5_000.0;
    assert!((p.r1 - nats / LN_2).abs() < 1e-12);
    assert!((p.in_nats().r1 - nats).abs() < 1e-12);
}
