//! Local maxima of the summed potential `F` on the domain.
//!
//! A uniform grid locates every local maximum to within one cell; each is then
//! refined by bisection on `F'` when an analytic derivative is available and by
//! golden-section search on `F` otherwise.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::potential::{Interval, PotentialFamily};

pub const GRID_POINTS: usize = 4097;
pub const DEFAULT_PEAK_TOL: f64 = 1e-12;
/// Refined maxima closer than this fraction of the domain width are merged.
pub const SEPARATION: f64 = 1e-6;

const INV_PHI: f64 = 0.618_033_988_749_894_9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Candidate {
    pub location: f64,
    pub value: f64,
    /// Part of a run of equal grid values rather than an isolated maximum.
    pub plateau: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SupPoint {
    pub location: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Landscape {
    /// Local maxima sorted by location.
    pub candidates: Vec<Candidate>,
    /// `max F` over the domain.
    pub max_value: f64,
    /// Number of grid points lying on maximal plateaus.
    pub plateau_points: usize,
}

impl Landscape {
    pub fn scan(family: &PotentialFamily, tol: f64) -> Result<Self> {
        let domain = family.domain();
        let xs = domain.grid(GRID_POINTS);
        let vals = xs
            .iter()
            .map(|&x| {
                let v = family.summed(x)?.value;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::Domain(format!("F({x}) = {v} is not finite")))
                }
            })
            .collect::<Result<Vec<f64>>>()?;

        let n = xs.len();
        let mut candidates = Vec::new();
        let mut plateau_points = 0;
        let mut k = 0;
        while k < n {
            let mut j = k;
            while j + 1 < n && vals[j + 1] == vals[k] {
                j += 1;
            }
            let left_ok = k == 0 || vals[k - 1] < vals[k];
            let right_ok = j == n - 1 || vals[j + 1] < vals[k];
            if left_ok && right_ok {
                if j == k {
                    let bracket = Interval {
                        lo: xs[k.saturating_sub(1)],
                        hi: xs[(k + 1).min(n - 1)],
                    };
                    candidates.push(refine(family, bracket, xs[k], vals[k], tol)?);
                } else {
                    plateau_points += j - k + 1;
                    for idx in [k, j] {
                        candidates.push(Candidate {
                            location: xs[idx],
                            value: vals[idx],
                            plateau: true,
                        });
                    }
                }
            }
            k = j + 1;
        }

        candidates.sort_by(|a, b| a.location.total_cmp(&b.location));
        let min_gap = SEPARATION * domain.width();
        let mut merged: Vec<Candidate> = Vec::with_capacity(candidates.len());
        for c in candidates {
            match merged.last_mut() {
                Some(prev) if c.location - prev.location < min_gap && !(c.plateau || prev.plateau) => {
                    if c.value > prev.value {
                        *prev = c;
                    }
                }
                _ => merged.push(c),
            }
        }
        let max_value = merged
            .iter()
            .map(|c| c.value)
            .fold(f64::NEG_INFINITY, f64::max);
        Ok(Self {
            candidates: merged,
            max_value,
            plateau_points,
        })
    }

    /// Candidates whose value matches the maximum to within
    /// `1e-9 * max(1, |max|)`.
    pub fn maximizers(&self) -> impl Iterator<Item = &Candidate> {
        let cut = self.max_value - peak_tolerance(self.max_value);
        self.candidates.iter().filter(move |c| c.value >= cut)
    }

    /// `sup F` over a sub-interval: the larger of the endpoint values and any
    /// local maximum strictly inside.
    pub fn sup_on(&self, family: &PotentialFamily, sub: Interval) -> Result<SupPoint> {
        let mut best = SupPoint {
            location: sub.lo,
            value: family.summed(sub.lo)?.value,
        };
        let right = family.summed(sub.hi)?.value;
        if right > best.value {
            best = SupPoint {
                location: sub.hi,
                value: right,
            };
        }
        for c in &self.candidates {
            if c.location > sub.lo && c.location < sub.hi && c.value > best.value {
                best = SupPoint {
                    location: c.location,
                    value: c.value,
                };
            }
        }
        Ok(best)
    }
}

/// Matching tolerance for "attains the maximum".
pub fn peak_tolerance(max_value: f64) -> f64 {
    1e-9 * max_value.abs().max(1.0)
}

fn refine(
    family: &PotentialFamily,
    bracket: Interval,
    grid_x: f64,
    grid_v: f64,
    tol: f64,
) -> Result<Candidate> {
    let width_tol = tol * family.domain().width();
    let f = |x: f64| family.summed(x).map(|e| e.value);

    let mut best = (grid_x, grid_v);
    let consider = |x: f64, v: f64, best: &mut (f64, f64)| {
        if v > best.1 {
            *best = (x, v);
        }
    };
    consider(bracket.lo, f(bracket.lo)?, &mut best);
    consider(bracket.hi, f(bracket.hi)?, &mut best);

    let slope_lo = family.d1(bracket.lo)?;
    let slope_hi = family.d1(bracket.hi)?;
    match (slope_lo, slope_hi) {
        (Some(dl), Some(dh)) if dl > 0.0 && dh < 0.0 => {
            let (mut lo, mut hi) = (bracket.lo, bracket.hi);
            while hi - lo > width_tol {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                let d = family.d1(mid)?.unwrap_or(0.0);
                if d > 0.0 {
                    lo = mid;
                } else if d < 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                    hi = mid;
                }
            }
            // the derivative root is used as is, so the location does not
            // depend on rounding of F itself
            let x = 0.5 * (lo + hi);
            return Ok(Candidate {
                location: x,
                value: f(x)?,
                plateau: false,
            });
        }
        _ => {
            let (mut a, mut b) = (bracket.lo, bracket.hi);
            let mut c = b - INV_PHI * (b - a);
            let mut d = a + INV_PHI * (b - a);
            let mut fc = f(c)?;
            let mut fd = f(d)?;
            consider(c, fc, &mut best);
            consider(d, fd, &mut best);
            for _ in 0..200 {
                if b - a <= width_tol {
                    break;
                }
                if fc >= fd {
                    b = d;
                    d = c;
                    fd = fc;
                    c = b - INV_PHI * (b - a);
                    fc = f(c)?;
                    consider(c, fc, &mut best);
                } else {
                    a = c;
                    c = d;
                    fc = fd;
                    d = a + INV_PHI * (b - a);
                    fd = f(d)?;
                    consider(d, fd, &mut best);
                }
            }
        }
    }
    Ok(Candidate {
        location: best.0,
        value: best.1,
        plateau: false,
    })
}
