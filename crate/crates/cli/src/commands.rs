use std::f64::consts::LN_2;

use serde::Serialize;
use serde_json::json;

use secrecy_region::asymptotics::{energy_penalties, low_snr_region, slope_check, LowSnrSummary, SlopeCheck};
use secrecy_region::channel::{effective_second_moment, is_scaled_pair, low_snr_positivity, LowSnrPositivity, ScalingVerdict};
use secrecy_region::region::{full_csit_region, region_sweep, time_sharing_region, TimeSharingGrid};
use secrecy_region::solvers::{kkt_alternating_optimize, weighted_boundary, WeightedSearch};
use secrecy_region::{Error, Order, RatePair, RegionBoundary, SolverConfig, SolverKind, SolverTrace, SweepSolver};

use crate::config::{AlphaGrid, Format, Loaded, SolverName};
use crate::error::CliError;
use crate::output::{csv_row, to_json, to_json_line, CSV_HEADER};

/// Flag overrides shared by all commands.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub alpha_steps: Option<usize>,
    pub format: Option<Format>,
    pub validate: bool,
    pub nats: bool,
}

/// What a command produced: the main artifact and an optional JSON sidecar.
#[derive(Debug, Clone, PartialEq)]
pub struct Outputs {
    pub main: String,
    pub sidecar: Option<String>,
}

struct Settings {
    cfg: SolverConfig,
    grid: Vec<f64>,
    format: Format,
}

fn settings(loaded: &Loaded, o: &Overrides, default_format: Format) -> Result<Settings, CliError> {
    let mut cfg = loaded.run.solver_cfg.clone();
    if let Some(n) = o.samples {
        cfg.samples = n;
    }
    if let Some(s) = o.seed {
        cfg.seed = s;
    }
    cfg.validate().map_err(|e| CliError::Input(format!("solver settings: {e}")))?;
    let grid = match o.alpha_steps {
        Some(n) => AlphaGrid::uniform(n).values()?,
        None => loaded.run.alpha_grid.values()?,
    };
    let format = o
        .format
        .or(loaded.run.output.as_ref().and_then(|s| s.format))
        .unwrap_or(default_format);
    Ok(Settings { cfg, grid, format })
}

fn units(nats: bool) -> &'static str {
    if nats {
        "nats/channel use"
    } else {
        "bits/channel use"
    }
}

fn convert(p: &RatePair, nats: bool) -> RatePair {
    if nats {
        p.in_nats()
    } else {
        *p
    }
}

fn solve_region(loaded: &Loaded, name: SolverName, s: &Settings) -> Result<RegionBoundary, CliError> {
    let pair = &loaded.pair;
    let p_t = loaded.run.p_t;
    let region = match name {
        SolverName::BeamformerFixedpoint => region_sweep(pair, p_t, &s.grid, SweepSolver::BeamformerFixedpoint, &s.cfg)?,
        SolverName::Kkt => region_sweep(pair, p_t, &s.grid, SweepSolver::Kkt, &s.cfg)?,
        SolverName::FullCsit => full_csit_region(&pair.sample(s.cfg.samples, s.cfg.seed), p_t, &s.grid)?,
        SolverName::TimeSharing => time_sharing_region(pair, p_t, TimeSharingGrid::default(), &s.cfg)?,
        SolverName::LowSnr => low_snr_region(
            &effective_second_moment(pair.user(0)),
            &effective_second_moment(pair.user(1)),
            p_t,
            &s.grid,
        )?,
        SolverName::Weighted => {
            let mut points = Vec::new();
            for &mu in &loaded.run.weights {
                for order in Order::BOTH {
                    let (p, _) = weighted_boundary(pair, order, p_t, mu, &s.cfg, WeightedSearch::default())?;
                    points.push(p);
                }
            }
            RegionBoundary::new(points, SolverKind::Weighted)
        }
    };
    Ok(region.with_digest(loaded.digest.clone()))
}

#[derive(Serialize)]
struct RegionJson {
    solver: &'static str,
    hull: Vec<RatePair>,
    points: Vec<RatePair>,
}

/// Region boundaries for every configured solver, one row per hull vertex.
pub fn region(loaded: &Loaded, o: &Overrides) -> Result<Outputs, CliError> {
    let s = settings(loaded, o, Format::Csv)?;
    let names = loaded.run.solver.names();
    if names.is_empty() {
        return Err(CliError::Input("solver list is empty".into()));
    }
    let mut regions = Vec::with_capacity(names.len());
    for name in &names {
        regions.push(solve_region(loaded, *name, &s)?);
    }
    let main = match s.format {
        Format::Csv => {
            let mut out = String::from(CSV_HEADER);
            out.push('\n');
            for r in &regions {
                for p in &r.hull {
                    out.push_str(&csv_row(&convert(p, o.nats), r.provenance.solver.name()));
                    out.push('\n');
                }
            }
            out
        }
        Format::Json => {
            let body: Vec<RegionJson> = regions
                .iter()
                .map(|r| RegionJson {
                    solver: r.provenance.solver.name(),
                    hull: r.hull.iter().map(|p| convert(p, o.nats)).collect(),
                    points: r.points.iter().map(|p| convert(p, o.nats)).collect(),
                })
                .collect();
            to_json(json!({
                "config_digest": loaded.digest,
                "seed": s.cfg.seed,
                "units": units(o.nats),
                "regions": body,
            }))
        }
    };
    let rows: usize = regions.iter().map(|r| r.hull.len()).sum();
    let sidecar = to_json(json!({
        "command": "region",
        "config_digest": loaded.digest,
        "seed": s.cfg.seed,
        "samples": s.cfg.samples,
        "p_t": loaded.run.p_t,
        "alpha_grid": s.grid,
        "solvers": regions.iter().map(|r| r.provenance.solver.name()).collect::<Vec<_>>(),
        "units": units(o.nats),
        "rows": rows,
    }));
    Ok(Outputs { main, sidecar: Some(sidecar) })
}

fn positivity_name(p: LowSnrPositivity) -> &'static str {
    match p {
        LowSnrPositivity::BothPositive => "both-positive",
        LowSnrPositivity::OnlyUser1 => "user-1 only",
        LowSnrPositivity::OnlyUser2 => "user-2 only",
        LowSnrPositivity::Neither => "neither",
    }
}

fn trim_number(x: f64) -> String {
    let s = format!("{x:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    s.to_string()
}

#[derive(Serialize)]
struct Verdict {
    scaled: bool,
    c: Option<f64>,
    low_snr: LowSnrPositivity,
    /// Eigenvalues of `R₁ − R₂`, largest first.
    eigenvalues: Vec<f64>,
    rician_extension: bool,
    verdict: String,
}

fn verdict(loaded: &Loaded) -> Result<Verdict, CliError> {
    let r1 = effective_second_moment(loaded.pair.user(0));
    let r2 = effective_second_moment(loaded.pair.user(1));
    let scaling = is_scaled_pair(&r1, &r2, 1e-9)?;
    let low_snr = low_snr_positivity(&r1, &r2)?;
    let mut eigenvalues = r1.sub(&r2).eigenvalues();
    eigenvalues.sort_by(|a, b| b.total_cmp(a));
    let (scaled, c, text) = match scaling {
        ScalingVerdict::Scaled(c) => (true, Some(c), format!("scaled(c={}); degraded", trim_number(c))),
        ScalingVerdict::NotScaled => (false, None, format!("not scaled; low-SNR {}", positivity_name(low_snr))),
    };
    Ok(Verdict { scaled, c, low_snr, eigenvalues, rician_extension: !loaded.pair.is_rayleigh(), verdict: text })
}

/// Scaling and low-SNR verdict for the configured pair.
pub fn degrade_check(loaded: &Loaded, o: &Overrides) -> Result<Outputs, CliError> {
    let s = settings(loaded, o, Format::Csv)?;
    let v = verdict(loaded)?;
    let main = match s.format {
        Format::Csv => format!("{}\n", v.verdict),
        Format::Json => to_json(json!({ "config_digest": loaded.digest, "verdict": v })),
    };
    Ok(Outputs { main, sidecar: None })
}

#[derive(Serialize)]
struct SlopeRow {
    #[serde(flatten)]
    check: SlopeCheck,
    pass: bool,
}

#[derive(Serialize)]
struct LowSnrReport {
    config_digest: String,
    seed: u64,
    samples: usize,
    units: &'static str,
    verdict: Verdict,
    summary: LowSnrSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    slope_check: Option<Vec<SlopeRow>>,
}

/// Closed-form low-SNR quantities, the energy comparison and, with
/// `--validate`, a Monte Carlo slope check.
pub fn lowsnr(loaded: &Loaded, o: &Overrides) -> Result<Outputs, CliError> {
    let s = settings(loaded, o, Format::Json)?;
    if s.format == Format::Csv {
        return Err(CliError::Input("lowsnr writes JSON only".into()));
    }
    let summary = energy_penalties(&loaded.pair, &s.cfg)?;
    let slope = if o.validate {
        let samples = loaded.pair.sample(s.cfg.samples, s.cfg.seed);
        let mut rows = Vec::new();
        for alpha in [0.25, 0.5, 0.75] {
            for mut c in slope_check(&loaded.pair, &samples, loaded.run.low_snr_power, alpha)? {
                let pass = c.rel_err <= 0.05;
                if o.nats {
                    c.measured *= LN_2;
                    c.std_err *= LN_2;
                    c.predicted *= LN_2;
                }
                rows.push(SlopeRow { check: c, pass });
            }
        }
        Some(rows)
    } else {
        None
    };
    let report = LowSnrReport {
        config_digest: loaded.digest.clone(),
        seed: s.cfg.seed,
        samples: s.cfg.samples,
        units: units(o.nats),
        verdict: verdict(loaded)?,
        summary,
        slope_check: slope,
    };
    Ok(Outputs { main: to_json(report), sidecar: None })
}

/// KKT trace at the configured `alpha` and order, one JSON line per outer
/// iteration. A run that hits `max_outer` still reports its trace.
pub fn converge(loaded: &Loaded, o: &Overrides) -> Result<Outputs, CliError> {
    let s = settings(loaded, o, Format::Json)?;
    if s.format == Format::Csv {
        return Err(CliError::Input("converge writes JSON lines only".into()));
    }
    let run = &loaded.run;
    let trace: SolverTrace = match kkt_alternating_optimize(&loaded.pair, run.order, run.alpha, run.p_t, &s.cfg) {
        Ok(sol) => sol.trace,
        Err(Error::NonConvergence(t)) => *t,
        Err(e) => return Err(e.into()),
    };
    let scale = if o.nats { LN_2 } else { 1.0 };
    let mut main = String::new();
    for r in &trace.records {
        let mut r = r.clone();
        r.r1 *= scale;
        r.r2 *= scale;
        main.push_str(&to_json_line(&r));
    }
    let sidecar = to_json(json!({
        "command": "converge",
        "config_digest": loaded.digest,
        "seed": s.cfg.seed,
        "samples": s.cfg.samples,
        "alpha": run.alpha,
        "order": run.order,
        "converged": trace.converged,
        "iterations": trace.iterations(),
        "initial_rates": trace.initial_rates.map(|x| x * scale),
        "last_change": trace.last_change().map(|x| x * scale),
        "units": units(o.nats),
    }));
    Ok(Outputs { main, sidecar: Some(sidecar) })
}
