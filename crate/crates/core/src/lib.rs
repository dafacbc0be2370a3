//! Achievable secrecy rate regions of the two-user fast-fading multi-antenna
//! broadcast channel with confidential messages, when the transmitter only
//! knows the channels' means and covariances.
//!
//! The crate evaluates rate pairs for a given power split, input factors and
//! dirty-paper inflation factor by Monte Carlo, picks inputs either in
//! closed form ([`beamformer`]) or iteratively ([`solvers`]), assembles
//! regions over both encoding orders ([`region`]) and provides the low-SNR
//! closed forms ([`asymptotics`]). Rates are in bits per channel use.

pub mod asymptotics;
pub mod beamformer;
pub mod channel;
pub mod error;
pub mod linalg;
pub mod mc;
pub mod rates;
pub mod region;
pub mod solvers;

pub use channel::{ChannelPair, ChannelSampleBatch, ChannelStatistics, SampledPair};
pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, ComplexVector, EigenPair, HermitianMatrix, C64};
pub use rates::{InflationFactor, InputFactor, Order, RatePair};
pub use region::{RegionBoundary, SolverKind, SweepSolver};
pub use solvers::{SolverConfig, SolverTrace};
