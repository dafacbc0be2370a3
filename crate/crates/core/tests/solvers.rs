use secrecy_region::beamformer::{build_unit_rank_inputs, select_for_order};
use secrecy_region::linalg::max_abs;
use secrecy_region::rates::rate_pair_statistical;
use secrecy_region::region::{region_sweep_on, SweepSolver};
use secrecy_region::solvers::{
    f1_map, inflation_fixed_point, kkt_alternating_optimize, weighted_boundary, Init, KktSolution, WeightedSearch,
};
use secrecy_region::{
    ChannelPair, ChannelStatistics, Error, HermitianMatrix, InflationFactor, Order, RegionBoundary, SolverConfig, SolverKind,
};

fn k1() -> HermitianMatrix {
    HermitianMatrix::from_real_diag(&[0.2, 0.04])
}

fn k2() -> HermitianMatrix {
    HermitianMatrix::from_real_rows(&[&[0.1, 0.08], &[0.08, 0.1]])
}

fn rayleigh() -> ChannelPair {
    ChannelPair::new(ChannelStatistics::rayleigh(k1()).unwrap(), ChannelStatistics::rayleigh(k2()).unwrap()).unwrap()
}

fn rician() -> ChannelPair {
    ChannelPair::new(
        ChannelStatistics::rician(&[0.7, 0.1], k1()).unwrap(),
        ChannelStatistics::rician(&[0.1, 0.6], k2()).unwrap(),
    )
    .unwrap()
}

fn solve(pair: &ChannelPair, alpha: f64, cfg: &SolverConfig) -> KktSolution {
    match kkt_alternating_optimize(pair, Order::OneTwo, alpha, 10.0, cfg) {
        Ok(s) => s,
        Err(Error::NonConvergence(t)) => KktSolution::from_trace(*t).unwrap(),
        Err(e) => panic!("{e}"),
    }
}

#[test]
fn fixed_point_residual_is_small() {
    for pair in [rayleigh(), rician()] {
        let cfg = SolverConfig { samples: 20_000, ..SolverConfig::default() };
        let samples = pair.sample(cfg.samples, 7);
        for alpha in [0.25, 0.5, 0.75] {
            let sel = select_for_order(&pair, Order::OneTwo, alpha, 10.0).unwrap();
            let (t1, t2) = build_unit_rank_inputs(&sel, 10.0);
            let (b, trace) = inflation_fixed_point(&t1, &t2, Order::OneTwo, &samples, &cfg).unwrap();
            assert!(trace.converged);
            let next = f1_map(&b, &t1, &t2, Order::OneTwo, &samples).unwrap();
            let residual = max_abs(&(next.matrix() - b.matrix()));
            assert!(residual <= 10.0 * cfg.eps1, "alpha {alpha}: residual {residual}");
        }
    }
}

#[test]
fn fixed_point_beats_the_plugin_heuristic_on_rician() {
    let pair = rician();
    let cfg = SolverConfig { samples: 20_000, ..SolverConfig::default() };
    let samples = pair.sample(cfg.samples, 8);
    let sel = select_for_order(&pair, Order::OneTwo, 0.5, 10.0).unwrap();
    let (t1, t2) = build_unit_rank_inputs(&sel, 10.0);
    let (b, _) = inflation_fixed_point(&t1, &t2, Order::OneTwo, &samples, &cfg).unwrap();
    let plugin = InflationFactor::mmse_plugin(&t1, pair.user(0).mean());
    let with_b = rate_pair_statistical(&t1, &t2, &b, Order::OneTwo, 0.5, &samples).unwrap();
    let with_plugin = rate_pair_statistical(&t1, &t2, &plugin, Order::OneTwo, 0.5, &samples).unwrap();
    let se = (with_b.mc_std_err[0].powi(2) + with_plugin.mc_std_err[0].powi(2)).sqrt();
    assert!(with_b.r1 >= with_plugin.r1 - 3.0 * se, "{with_b:?} vs {with_plugin:?}");
}

#[test]
fn kkt_trace_contract_across_seeds() {
    for pair in [rayleigh(), rician()] {
        for seed in 1..=3 {
            let cfg = SolverConfig { samples: 5_000, seed, max_outer: 20, ..SolverConfig::default() };
            let sol = solve(&pair, 0.5, &cfg);
            let t = &sol.trace;
            assert!(t.iterations() <= 20);
            if t.converged {
                assert!(t.last_change().unwrap() <= cfg.delta);
            }
            let last = t.last().unwrap();
            assert!(last.r1 >= 0.0 && last.r2 >= 0.0);
            assert!(sol.t1.power() <= 5.0 * (1.0 + 1e-9));
            assert!(sol.t2.power() <= 5.0 * (1.0 + 1e-9));
        }
    }
}

#[test]
fn tiny_first_share_leaves_the_first_user_almost_nothing() {
    let pair = rayleigh();
    let cfg = SolverConfig { samples: 5_000, init: Init::Warm, ..SolverConfig::default() };
    let near = solve(&pair, 1e-4, &cfg);
    let last = near.trace.last().unwrap();
    assert!(last.r1 < 0.01, "{}", last.r1);
    assert!(last.r2 > 0.0);
    assert!(near.t1.power() <= 1e-3 * (1.0 + 1e-9));
}

#[test]
fn weighted_points_lie_inside_the_alpha_sweep() {
    let pair = rayleigh();
    let cfg = SolverConfig { samples: 3_000, ..SolverConfig::default() };
    let samples = pair.sample(cfg.samples, cfg.seed);
    let grid: Vec<f64> = (0..=10).map(|k| k as f64 / 10.0).collect();
    let mut sweep = region_sweep_on(&pair, &samples, 10.0, &grid, SweepSolver::BeamformerFixedpoint, &cfg).unwrap();
    // the KKT solver can only add achievable points
    sweep = RegionBoundary::new(
        sweep
            .points
            .iter()
            .copied()
            .chain(region_sweep_on(&pair, &samples, 10.0, &grid, SweepSolver::Kkt, &cfg).unwrap().points)
            .collect(),
        SolverKind::Kkt,
    );
    let search = WeightedSearch { grid_steps: 11, refine_iters: 0 };
    for mu in [0.0, 0.5, 1.0, 2.0, 1e9] {
        let (p, _) = weighted_boundary(&pair, Order::OneTwo, 10.0, mu, &cfg, search).unwrap();
        assert!(sweep.contains([p.r1, p.r2], 1e-9), "mu {mu}: {p:?}");
    }
}
