//! JSON run configuration.

use serde::Deserialize;
use sha2::{Digest, Sha256};

use secrecy_region::{ChannelPair, ChannelStatistics, ComplexMatrix, ComplexVector, HermitianMatrix, Order, SolverConfig, C64};

use crate::error::CliError;

/// A complex entry, either `[re, im]` or a bare real number.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(untagged)]
pub enum Entry {
    Real(f64),
    Complex([f64; 2]),
}

impl Entry {
    fn value(self) -> C64 {
        match self {
            Entry::Real(x) => C64::new(x, 0.0),
            Entry::Complex([re, im]) => C64::new(re, im),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpec {
    #[serde(default)]
    pub mean: Option<Vec<Entry>>,
    pub cov: Vec<Vec<Entry>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum AlphaGrid {
    List(Vec<f64>),
    Range { start: f64, stop: f64, steps: usize },
}

impl AlphaGrid {
    pub fn values(&self) -> Result<Vec<f64>, CliError> {
        let v = match self {
            AlphaGrid::List(v) => v.clone(),
            AlphaGrid::Range { start, stop, steps } => match steps {
                0 => return Err(CliError::Input("alpha_grid: steps must be positive".into())),
                1 => vec![*start],
                n => (0..*n).map(|k| start + (stop - start) * k as f64 / (n - 1) as f64).collect(),
            },
        };
        if v.is_empty() {
            return Err(CliError::Input("alpha_grid is empty".into()));
        }
        if let Some(a) = v.iter().find(|a| !(0.0..=1.0).contains(*a)) {
            return Err(CliError::Input(format!("alpha_grid: {a} outside [0, 1]")));
        }
        Ok(v)
    }

    pub fn uniform(steps: usize) -> Self {
        AlphaGrid::Range { start: 0.0, stop: 1.0, steps }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverName {
    BeamformerFixedpoint,
    Kkt,
    FullCsit,
    TimeSharing,
    LowSnr,
    Weighted,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum SolverList {
    One(SolverName),
    Many(Vec<SolverName>),
}

impl SolverList {
    pub fn names(&self) -> Vec<SolverName> {
        match self {
            SolverList::One(s) => vec![*s],
            SolverList::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub path: Option<String>,
    pub format: Option<Format>,
}

fn default_noise() -> f64 {
    1.0
}

fn default_grid() -> AlphaGrid {
    AlphaGrid::uniform(21)
}

fn default_solver() -> SolverList {
    SolverList::One(SolverName::BeamformerFixedpoint)
}

fn default_alpha() -> f64 {
    0.5
}

fn default_order() -> Order {
    Order::OneTwo
}

fn default_weights() -> Vec<f64> {
    vec![0.0, 0.25, 0.5, 1.0, 2.0, 4.0, 1e6]
}

fn default_low_power() -> f64 {
    1e-3
}

/// The file as written by the user.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub n_t: usize,
    pub p_t: f64,
    #[serde(default = "default_noise")]
    pub noise_var: f64,
    pub channels: [ChannelSpec; 2],
    #[serde(default = "default_grid")]
    pub alpha_grid: AlphaGrid,
    #[serde(default = "default_solver")]
    pub solver: SolverList,
    #[serde(default)]
    pub solver_cfg: SolverConfig,
    /// Power split for `converge`.
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Encoding order for `converge` and the weighted search.
    #[serde(default = "default_order")]
    pub order: Order,
    /// Weights `μ` for the weighted solver.
    #[serde(default = "default_weights")]
    pub weights: Vec<f64>,
    /// Power used by the `lowsnr --validate` slope check.
    #[serde(default = "default_low_power")]
    pub low_snr_power: f64,
    #[serde(default)]
    pub output: Option<OutputSpec>,
}

/// Parsed, validated configuration plus the digest of its source bytes.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub run: RunConfig,
    pub pair: ChannelPair,
    pub digest: String,
}

pub fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn matrix(rows: &[Vec<Entry>], n: usize, name: &str) -> Result<ComplexMatrix, CliError> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(CliError::Input(format!("{name}: expected a {n}x{n} matrix")));
    }
    Ok(ComplexMatrix::from_fn(n, n, |i, j| rows[i][j].value()))
}

fn channel(chan: &ChannelSpec, n: usize, noise_var: f64, name: &str) -> Result<ChannelStatistics, CliError> {
    let bad = |what: &str, e: secrecy_region::Error| CliError::Input(format!("{name}.{what}: {e}"));
    let cov = HermitianMatrix::new(matrix(&chan.cov, n, &format!("{name}.cov"))?).map_err(|e| bad("cov", e))?;
    let mean = match &chan.mean {
        None => ComplexVector::zeros(n),
        Some(m) if m.len() == n => ComplexVector::from_iterator(n, m.iter().map(|e| e.value())),
        Some(m) => return Err(CliError::Input(format!("{name}.mean: expected length {n}, got {}", m.len()))),
    };
    let stats = ChannelStatistics::new(mean, cov).map_err(|e| bad("cov", e))?;
    stats.normalized_by_noise(noise_var).map_err(|e| bad("cov", e))
}

impl RunConfig {
    pub fn parse(bytes: &[u8]) -> Result<Self, CliError> {
        serde_json::from_slice(bytes).map_err(|e| CliError::Input(format!("config: {e}")))
    }

    fn validate(&self) -> Result<(), CliError> {
        if self.n_t == 0 {
            return Err(CliError::Input("n_t must be positive".into()));
        }
        if !(self.p_t > 0.0 && self.p_t.is_finite()) {
            return Err(CliError::Input(format!("p_t = {} must be positive", self.p_t)));
        }
        if !(self.noise_var > 0.0 && self.noise_var.is_finite()) {
            return Err(CliError::Input(format!("noise_var = {} must be positive", self.noise_var)));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(CliError::Input(format!("alpha = {} must lie in (0, 1)", self.alpha)));
        }
        if self.weights.iter().any(|w| w.is_nan() || *w < 0.0) {
            return Err(CliError::Input("weights must be nonnegative".into()));
        }
        if self.low_snr_power.is_nan() || self.low_snr_power <= 0.0 {
            return Err(CliError::Input("low_snr_power must be positive".into()));
        }
        self.solver_cfg.validate().map_err(|e| CliError::Input(format!("solver_cfg: {e}")))?;
        self.alpha_grid.values()?;
        Ok(())
    }

    pub fn channel_pair(&self) -> Result<ChannelPair, CliError> {
        let u1 = channel(&self.channels[0], self.n_t, self.noise_var, "channels[0]")?;
        let u2 = channel(&self.channels[1], self.n_t, self.noise_var, "channels[1]")?;
        ChannelPair::new(u1, u2).map_err(|e| CliError::Input(format!("channels: {e}")))
    }
}

impl Loaded {
    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CliError> {
        let run = RunConfig::parse(bytes)?;
        run.validate()?;
        let pair = run.channel_pair()?;
        Ok(Loaded { run, pair, digest: digest(bytes) })
    }
}
