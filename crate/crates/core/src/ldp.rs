//! Large deviations of the equilibrium measures as `β → ∞`.
//!
//! The rate function is `I(x) = Σ_j (m(f) - F(x_j))`. On a cylinder
//! `D = A_1 × … × A_n` the infimum splits coordinatewise, and
//! `(1/β) log μ̃_β(D) → -Σ_j (m(f) - sup_{A_j} F)`.

use serde::Serialize;

use crate::equilibrium::{cylinder_mass_with, Cylinder};
use crate::error::Result;
use crate::landscape::peak_tolerance;
use crate::optimization::check_betas;
use crate::potential::{EventuallyConstantPoint, PotentialFamily};
use crate::quadrature::QuadOptions;
use crate::transfer::EigenData;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoxRate {
    pub sup_location: f64,
    /// `sup_{A_j} F`.
    pub sup_value: f64,
    /// `m(f) - sup_{A_j} F`.
    pub contribution: f64,
    /// Whether the box contains a maximizer of `F`.
    pub meets_argmax: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateResult {
    pub m_f: f64,
    /// `inf_D I`.
    pub inf_rate: f64,
    pub per_box: Vec<BoxRate>,
}

/// `inf_D I = Σ_j (m(f) - sup_{A_j} F)`.
pub fn rate_on_cylinder(family: &PotentialFamily, cylinder: &Cylinder) -> Result<RateResult> {
    let landscape = family.landscape()?;
    let m_f = landscape.max_value;
    let per_box = cylinder
        .boxes()
        .iter()
        .map(|b| {
            let sup = landscape.sup_on(family, *b)?;
            Ok(BoxRate {
                sup_location: sup.location,
                sup_value: sup.value,
                contribution: m_f - sup.value,
                meets_argmax: sup.value >= m_f - peak_tolerance(m_f),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RateResult {
        m_f,
        inf_rate: per_box.iter().map(|b| b.contribution).sum(),
        per_box,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LdpRow {
    pub beta: f64,
    /// `(1/β) log μ̃_β(D)`.
    pub log_mass_over_beta: f64,
    /// `-inf_D I`.
    pub neg_inf_rate: f64,
    pub residual: f64,
}

/// Compares `(1/β) log μ̃_β(D)` with its limit `-inf_D I` along a list of
/// inverse temperatures.
pub fn ldp_residual(
    family: &PotentialFamily,
    cylinder: &Cylinder,
    betas: &[f64],
    opts: &QuadOptions,
) -> Result<Vec<LdpRow>> {
    check_betas(betas)?;
    let rate = rate_on_cylinder(family, cylinder)?;
    betas
        .iter()
        .map(|&beta| {
            let eigen = EigenData::compute(family, beta, opts)?;
            let mass = cylinder_mass_with(family, &eigen, cylinder, opts)?;
            let scaled = mass.log_mass / beta;
            Ok(LdpRow {
                beta,
                log_mass_over_beta: scaled,
                neg_inf_rate: -rate.inf_rate,
                residual: (scaled + rate.inf_rate).abs(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum RateValue {
    Finite(f64),
    /// Some coordinate repeats forever off the maximizing set.
    Infinite,
}

/// `Σ_{j≤terms} (m(f) - F(x_j))`, or `Infinite` when the tail value is not a
/// maximizer and so contributes a fixed positive amount forever.
pub fn rate_at_point(
    family: &PotentialFamily,
    x: &EventuallyConstantPoint,
    terms: usize,
) -> Result<RateValue> {
    x.check_in(&family.domain())?;
    let m_f = family.landscape()?.max_value;
    let tail_gap = m_f - family.summed(x.tail)?.value;
    if tail_gap > peak_tolerance(m_f) {
        return Ok(RateValue::Infinite);
    }
    let n = terms.max(x.prefix.len());
    let head = x
        .prefix
        .iter()
        .map(|&xj| Ok(m_f - family.summed(xj)?.value))
        .sum::<Result<f64>>()?;
    Ok(RateValue::Finite(head + (n - x.prefix.len()) as f64 * tail_gap))
}
