//! Iterative solvers: the inflation-factor fixed point, the KKT maps and the
//! alternating optimizer built on them, and the weighted-sum boundary search.

mod fixed_point;
mod kkt;
mod maps;
mod weighted;

pub use fixed_point::inflation_fixed_point;
pub use kkt::{kkt_alternating_optimize, kkt_alternating_optimize_with, KktSolution};
pub use maps::{f1_map, g1_map, g2_map, kkt_maps, KktMaps};
pub use weighted::{weighted_boundary, WeightedSearch};

use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;

/// Step 1 initialization of the alternating optimizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    /// Seeded complex Gaussian factors of rank `n_t`, scaled to the budgets.
    Random,
    /// The closed-form unit-rank beamformers.
    Warm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Draws per user for every expectation.
    pub samples: usize,
    pub seed: u64,
    /// Outer stop on the max-abs change of the two rates (bits).
    pub delta: f64,
    /// Inner stop for the inflation factor.
    pub eps1: f64,
    /// Inner stop for `T₁`.
    pub eps2: f64,
    /// Inner stop for `T₂`.
    pub eps3: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    /// Weight of the new iterate in the moving-average update.
    pub damping: f64,
    pub init: Init,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            samples: 100_000,
            seed: 1,
            delta: 1e-3,
            eps1: 1e-3,
            eps2: 1e-3,
            eps3: 1e-3,
            max_outer: 50,
            max_inner: 200,
            damping: 0.5,
            init: Init::Random,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let tols = [self.delta, self.eps1, self.eps2, self.eps3];
        if tols.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
            return Err(Error::InvalidArgument("solver tolerances must be positive".into()));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::InvalidArgument(format!("damping {} outside (0, 1]", self.damping)));
        }
        if self.samples == 0 || self.max_outer == 0 || self.max_inner == 0 {
            return Err(Error::InvalidArgument("sample count and iteration caps must be positive".into()));
        }
        Ok(())
    }
}

fn serialize_matrix<S: Serializer>(m: &ComplexMatrix, s: S) -> std::result::Result<S::Ok, S::Error> {
    let rows: Vec<Vec<[f64; 2]>> =
        (0..m.nrows()).map(|r| (0..m.ncols()).map(|c| [m[(r, c)].re, m[(r, c)].im]).collect()).collect();
    rows.serialize(s)
}

/// State after one outer iteration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    #[serde(serialize_with = "serialize_matrix")]
    pub b: ComplexMatrix,
    #[serde(serialize_with = "serialize_matrix")]
    pub t1: ComplexMatrix,
    #[serde(serialize_with = "serialize_matrix")]
    pub t2: ComplexMatrix,
    pub lambda1: Option<f64>,
    pub lambda2: Option<f64>,
    /// Clamped rate of user `π₁` in bits.
    pub r1: f64,
    /// Clamped rate of user `π₂` in bits.
    pub r2: f64,
}

/// Outer iterations of one solve. The starting point is kept apart from the
/// records so that `records.len()` counts iterations.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverTrace {
    /// Clamped `(R_π1, R_π2)` in bits at the starting point.
    pub initial_rates: [f64; 2],
    pub records: Vec<IterationRecord>,
    pub converged: bool,
}

impl SolverTrace {
    pub fn new(initial_rates: [f64; 2]) -> Self {
        SolverTrace { initial_rates, records: Vec::new(), converged: false }
    }

    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    pub fn last(&self) -> Option<&IterationRecord> {
        self.records.last()
    }

    /// Max-abs rate change made by the last iteration.
    pub fn last_change(&self) -> Option<f64> {
        let n = self.records.len();
        let last = self.records.last()?;
        let prev = if n >= 2 {
            [self.records[n - 2].r1, self.records[n - 2].r2]
        } else {
            self.initial_rates
        };
        Some((prev[0] - last.r1).abs().max((prev[1] - last.r2).abs()))
    }

    /// One JSON object per record, newline terminated.
    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("record serializes"));
            out.push('\n');
        }
        out
    }
}

pub(crate) fn max_abs_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}
