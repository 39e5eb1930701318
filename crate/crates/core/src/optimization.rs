//! Ergodic optimization: `m(f) = max F`, the calibrated subaction, and the
//! zero-temperature selection of maximizing measures.
//!
//! As `β → ∞` the equilibrium marginal concentrates on the maximizers of `F`.
//! With one interior non-degenerate maximum it converges to the point mass
//! there; with two, to a mixture whose weights follow from the Laplace method,
//! `p_1 / p_2 = sqrt(F''(a_2) / F''(a_1))`.

use rayon::prelude::*;
use serde::Serialize;

use crate::equilibrium::{cylinder_mass_with, Cylinder};
use crate::error::{Error, Result};
use crate::landscape::{peak_tolerance, Landscape, DEFAULT_PEAK_TOL};
use crate::potential::{EventuallyConstantPoint, Interval, PotentialFamily};
use crate::quadrature::{laplace_approx, log_partition_on, QuadOptions};
use crate::transfer::EigenData;

/// Peaks closer than this fraction of the domain width to an endpoint are not
/// interior.
pub const ENDPOINT_MARGIN: f64 = 1e-9;
/// Initial finite-difference step for `F''`, as a fraction of the domain width.
pub const FD_STEP: f64 = 1e-4;
/// Peaks with `F'' > -DEGENERACY_TOL` count as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-8;
/// Probe points for the calibration identity.
pub const CALIBRATION_GRID: usize = 257;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Peak {
    pub location: f64,
    pub value: f64,
    /// `F''` at the peak; absent at an endpoint without an analytic formula.
    pub second_derivative: Option<f64>,
    /// Error estimate for `second_derivative` (zero when analytic).
    pub second_derivative_error: f64,
    pub interior: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaximaReport {
    pub m_f: f64,
    /// Maximizing points, sorted by location.
    pub peaks: Vec<Peak>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectionReport {
    pub report: MaximaReport,
    /// Limiting weight of each peak, in the order of `report.peaks`.
    pub weights: Vec<f64>,
}

/// Maximizers of `F`: grid scan, refinement to `tol` (relative to the domain
/// width), and `F''` at each one.
pub fn find_maxima(family: &PotentialFamily, tol: f64) -> Result<MaximaReport> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    let scanned;
    let landscape = if tol == DEFAULT_PEAK_TOL {
        family.landscape()?
    } else {
        scanned = Landscape::scan(family, tol)?;
        &scanned
    };
    let maximizers: Vec<_> = landscape.maximizers().copied().collect();
    if maximizers.iter().any(|c| c.plateau) {
        return Err(Error::UnsupportedMultiplicity {
            found: landscape.plateau_points,
        });
    }
    if maximizers.len() > 2 {
        return Err(Error::UnsupportedMultiplicity {
            found: maximizers.len(),
        });
    }

    let domain = family.domain();
    let margin = ENDPOINT_MARGIN * domain.width();
    let peaks = maximizers
        .iter()
        .map(|c| {
            let interior = c.location - domain.lo > margin && domain.hi - c.location > margin;
            let (second_derivative, second_derivative_error) = match family.d2(c.location)? {
                Some(d2) => (Some(d2), 0.0),
                None if interior => {
                    let (d2, err) = richardson_second_derivative(family, c.location)?;
                    (Some(d2), err)
                }
                None => (None, 0.0),
            };
            Ok(Peak {
                location: c.location,
                value: c.value,
                second_derivative,
                second_derivative_error,
                interior,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MaximaReport {
        m_f: landscape.max_value,
        peaks,
    })
}

/// Central second differences at steps `h` and `h/2`, combined by Richardson
/// extrapolation; the error estimate is their disagreement.
pub fn richardson_second_derivative(family: &PotentialFamily, a: f64) -> Result<(f64, f64)> {
    let domain = family.domain();
    let room = (a - domain.lo).min(domain.hi - a);
    let h = (FD_STEP * domain.width()).min(0.5 * room);
    if !(h > 0.0) {
        return Err(Error::Domain(format!("no room for central differences at {a}")));
    }
    let f = |t: f64| family.summed(t).map(|e| e.value);
    let f0 = f(a)?;
    let second = |h: f64| -> Result<f64> { Ok((f(a + h)? - 2.0 * f0 + f(a - h)?) / (h * h)) };
    let coarse = second(h)?;
    let fine = second(0.5 * h)?;
    Ok(((4.0 * fine - coarse) / 3.0, (fine - coarse).abs() / 3.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CalibrationReport {
    /// `max_a |f(a x) + u(a x) - u(x) - F(a)|` over the probes.
    pub identity_residual: f64,
    /// `max_a (f(a x) + u(a x) - u(x))` over the probes.
    pub bracket_max: f64,
    pub m_f: f64,
    /// The larger of `identity_residual` and `|bracket_max - m_f|`.
    pub residual: f64,
}

/// Checks `f(a x) + u(a x) - u(x) = F(a)` on a grid of `a` plus the peaks of
/// `F`, and that the maximum of the bracket is `m(f)`.
pub fn calibration_residual(
    family: &PotentialFamily,
    x: &EventuallyConstantPoint,
) -> Result<CalibrationReport> {
    let domain = family.domain();
    x.check_in(&domain)?;
    let landscape = family.landscape()?;
    let mut probes = domain.grid(CALIBRATION_GRID);
    probes.extend(landscape.candidates.iter().map(|c| c.location));

    let u_x = family.subaction(x)?.value;
    let mut identity_residual: f64 = 0.0;
    let mut bracket_max = f64::NEG_INFINITY;
    for a in probes {
        let ax = x.prepend(a);
        let bracket = family.evaluate(&ax)?.value + family.subaction(&ax)?.value - u_x;
        identity_residual = identity_residual.max((bracket - family.summed(a)?.value).abs());
        bracket_max = bracket_max.max(bracket);
    }
    let m_f = landscape.max_value;
    Ok(CalibrationReport {
        identity_residual,
        bracket_max,
        m_f,
        residual: identity_residual.max((bracket_max - m_f).abs()),
    })
}

/// Limiting weights of the maximizing peaks.
pub fn selection_weights(report: &MaximaReport) -> Result<SelectionReport> {
    if report.peaks.is_empty() || report.peaks.len() > 2 {
        return Err(Error::UnsupportedMultiplicity {
            found: report.peaks.len(),
        });
    }
    let mut curvature = Vec::with_capacity(report.peaks.len());
    for p in &report.peaks {
        if !p.interior {
            return Err(Error::EndpointPeak(p.location));
        }
        let d2 = p.second_derivative.ok_or(Error::EndpointPeak(p.location))?;
        if !(d2 + p.second_derivative_error + DEGENERACY_TOL < 0.0) {
            return Err(Error::DegeneratePeak {
                location: p.location,
                second_derivative: d2,
            });
        }
        curvature.push((-d2).sqrt());
    }
    let weights = match curvature.as_slice() {
        [_] => vec![1.0],
        [k1, k2] => {
            let p1 = k2 / (k1 + k2);
            vec![p1, 1.0 - p1]
        }
        _ => unreachable!("length checked above"),
    };
    Ok(SelectionReport {
        report: report.clone(),
        weights,
    })
}

/// Leading Laplace approximation of `log λ_β`, summed over interior peaks.
pub fn laplace_log_partition(report: &MaximaReport, beta: f64) -> Result<f64> {
    let mut terms = Vec::with_capacity(report.peaks.len());
    for p in &report.peaks {
        if !p.interior {
            return Err(Error::EndpointPeak(p.location));
        }
        let d2 = p.second_derivative.ok_or(Error::EndpointPeak(p.location))?;
        terms.push(laplace_approx(p.value, d2, beta)?);
    }
    let top = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(top + terms.iter().map(|t| (t - top).exp()).sum::<f64>().ln())
}

/// Windows `[a_i - ε, a_i + ε]` around each peak, clipped to the domain, with
/// `ε` a quarter of the smallest gap between peaks (or between the domain
/// ends when there is one peak).
pub fn peak_windows(family: &PotentialFamily, report: &MaximaReport) -> Result<Vec<Interval>> {
    let domain = family.domain();
    let locs: Vec<f64> = report.peaks.iter().map(|p| p.location).collect();
    let gap = locs
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(domain.width(), f64::min);
    let eps = 0.25 * gap;
    locs.iter()
        .map(|&a| Interval::new((a - eps).max(domain.lo), (a + eps).min(domain.hi)))
        .collect()
}

/// `log ∫_W exp(β F)` for each window.
pub fn window_log_masses(
    family: &PotentialFamily,
    windows: &[Interval],
    beta: f64,
    opts: &QuadOptions,
) -> Result<Vec<f64>> {
    windows
        .iter()
        .map(|w| Ok(log_partition_on(family, beta, *w, opts)?.log_value))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub beta: f64,
    /// `log μ̃_β(D)`.
    pub log_mass: f64,
    /// `(1/β) log λ_β`.
    pub pressure_over_beta: f64,
}

pub(crate) fn check_betas(betas: &[f64]) -> Result<()> {
    if betas.is_empty() {
        return Err(Error::InvalidParameter("empty list of inverse temperatures".into()));
    }
    if betas.iter().any(|b| !(*b > 0.0) || !b.is_finite()) {
        return Err(Error::InvalidParameter(
            "inverse temperatures must be positive and finite".into(),
        ));
    }
    if betas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter(
            "inverse temperatures must be strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Cylinder mass and pressure per unit `β` along a list of inverse
/// temperatures. Rows are computed in parallel and returned in input order.
pub fn beta_sweep(
    family: &PotentialFamily,
    cylinder: &Cylinder,
    betas: &[f64],
    opts: &QuadOptions,
) -> Result<Vec<SweepRow>> {
    check_betas(betas)?;
    family.landscape()?;
    betas
        .par_iter()
        .map(|&beta| {
            let eigen = EigenData::compute(family, beta, opts)?;
            let mass = cylinder_mass_with(family, &eigen, cylinder, opts)?;
            Ok(SweepRow {
                beta,
                log_mass: mass.log_mass,
                pressure_over_beta: eigen.log_lambda / beta,
            })
        })
        .collect()
}

/// Whether `F(a)` attains `m(f)` within the peak-matching tolerance.
pub fn is_maximizer(family: &PotentialFamily, a: f64) -> Result<bool> {
    let m = family.landscape()?.max_value;
    Ok(family.summed(a)?.value >= m - peak_tolerance(m))
}
