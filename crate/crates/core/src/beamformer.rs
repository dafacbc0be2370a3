//! Unit-rank input selection from the channels' second moments.
//!
//! The first-encoded user's direction maximizes the ratio of Jensen upper
//! bounds `(1 + αP eᴴR₁e) / (1 + αP eᴴR₂e)`; the second direction repeats
//! the construction for the leftover power, with both moments loaded by the
//! interference the first beam causes.

use crate::channel::{effective_second_moment, ChannelPair, ChannelStatistics};
use crate::error::{Error, Result};
use crate::linalg::{max_generalized_eig, ComplexVector, EigenPair, HermitianMatrix};
use crate::rates::{InputFactor, Order};

#[derive(Debug, Clone, PartialEq)]
pub struct BeamformerSelection {
    pub e1: ComplexVector,
    pub e2: ComplexVector,
    pub alpha: f64,
    pub gen_eig_values: [f64; 2],
}

fn check_alpha(alpha: f64, p_t: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidArgument(format!("alpha = {alpha} outside [0, 1]")));
    }
    if !(p_t > 0.0 && p_t.is_finite()) {
        return Err(Error::InvalidArgument(format!("power budget {p_t} must be positive")));
    }
    Ok(())
}

fn e1_from_moments(r1: &HermitianMatrix, r2: &HermitianMatrix, alpha: f64, p_t: f64) -> Result<EigenPair> {
    let g = alpha * p_t;
    max_generalized_eig(&r1.scale(g).shifted_identity(1.0), &r2.scale(g).shifted_identity(1.0))
}

fn e2_from_moments(
    r1: &HermitianMatrix,
    r2: &HermitianMatrix,
    alpha: f64,
    p_t: f64,
    e1: &ComplexVector,
) -> Result<EigenPair> {
    if (e1.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument("e1 must have unit norm".into()));
    }
    let load1 = 1.0 + alpha * p_t * r1.quad_form(e1.as_slice());
    let load2 = 1.0 + alpha * p_t * r2.quad_form(e1.as_slice());
    let g = (1.0 - alpha) * p_t;
    max_generalized_eig(&r2.scale(g / load2).shifted_identity(1.0), &r1.scale(g / load1).shifted_identity(1.0))
}

/// Direction for user `π₁` (`first`), eavesdropped by user `π₂` (`second`).
pub fn select_e1(
    first: &ChannelStatistics,
    second: &ChannelStatistics,
    alpha: f64,
    p_t: f64,
) -> Result<EigenPair> {
    check_alpha(alpha, p_t)?;
    e1_from_moments(&effective_second_moment(first), &effective_second_moment(second), alpha, p_t)
}

/// Direction for user `π₂` given the first beam `e1`.
pub fn select_e2(
    first: &ChannelStatistics,
    second: &ChannelStatistics,
    alpha: f64,
    p_t: f64,
    e1: &ComplexVector,
) -> Result<EigenPair> {
    check_alpha(alpha, p_t)?;
    e2_from_moments(&effective_second_moment(first), &effective_second_moment(second), alpha, p_t, e1)
}

/// Both directions from arbitrary second moments `r1` (user `π₁`) and `r2`.
pub fn select_from_moments(
    r1: &HermitianMatrix,
    r2: &HermitianMatrix,
    alpha: f64,
    p_t: f64,
) -> Result<BeamformerSelection> {
    check_alpha(alpha, p_t)?;
    let first = e1_from_moments(r1, r2, alpha, p_t)?;
    let second = e2_from_moments(r1, r2, alpha, p_t, &first.vector)?;
    Ok(BeamformerSelection {
        e1: first.vector,
        e2: second.vector,
        alpha,
        gen_eig_values: [first.value, second.value],
    })
}

pub fn select(
    first: &ChannelStatistics,
    second: &ChannelStatistics,
    alpha: f64,
    p_t: f64,
) -> Result<BeamformerSelection> {
    select_from_moments(&effective_second_moment(first), &effective_second_moment(second), alpha, p_t)
}

/// Selection for encoding order `order` of a labelled channel pair.
pub fn select_for_order(pair: &ChannelPair, order: Order, alpha: f64, p_t: f64) -> Result<BeamformerSelection> {
    select(pair.user(order.first()), pair.user(order.second()), alpha, p_t)
}

/// `T₁ = √(αP)·e1`, `T₂ = √((1−α)P)·e2`; a zero share gives an `n_t × 0` factor.
pub fn build_unit_rank_inputs(sel: &BeamformerSelection, p_t: f64) -> (InputFactor, InputFactor) {
    (
        InputFactor::beam(&sel.e1, sel.alpha * p_t),
        InputFactor::beam(&sel.e2, (1.0 - sel.alpha) * p_t),
    )
}
