//! Product-type potentials `f(x) = Σ_j f_j(x_j)` on `[lo, hi]^ℕ`.
//!
//! A [`PotentialFamily`] knows its factors `f_i`, the summed potential
//! `F(a) = f(a, a, a, …)`, the tails `T_j(a) = Σ_{i>j} f_i(a)` and the double
//! tails `Σ_{j>m} T_j(c)`, each returned as an [`Estimate`] carrying an
//! absolute error bound. Points of the sequence space are represented by
//! [`EventuallyConstantPoint`]s, which makes `f`, the subaction `u` and the
//! eigenfunction exactly computable from finitely many tail evaluations.

use std::ops::Add;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::landscape::Landscape;
use crate::polylog::Polylog;

/// Absolute accuracy every built-in family guarantees for `F`, tails and
/// double tails.
pub const DEFAULT_FAMILY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::Domain(format!("invalid interval [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, a: f64) -> bool {
        a >= self.lo && a <= self.hi
    }

    pub fn check(&self, a: f64) -> Result<f64> {
        if self.contains(a) {
            Ok(a)
        } else {
            Err(Error::OutOfDomain {
                value: a,
                lo: self.lo,
                hi: self.hi,
            })
        }
    }

    /// Errors unless `inner` is a nonempty sub-interval.
    pub fn check_contains(&self, inner: &Interval) -> Result<()> {
        if !(inner.lo < inner.hi) {
            return Err(Error::Domain(format!(
                "empty box [{}, {}]",
                inner.lo, inner.hi
            )));
        }
        self.check(inner.lo)?;
        self.check(inner.hi)?;
        Ok(())
    }

    /// `n` equally spaced points including both endpoints.
    pub fn grid(&self, n: usize) -> Vec<f64> {
        let step = self.width() / (n - 1) as f64;
        (0..n)
            .map(|k| {
                if k == n - 1 {
                    self.hi
                } else {
                    self.lo + k as f64 * step
                }
            })
            .collect()
    }
}

/// A value together with a bound on its absolute error.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Self { value, error: 0.0 }
    }

    pub fn scale(self, k: f64) -> Self {
        Self {
            value: k * self.value,
            error: k.abs() * self.error,
        }
    }
}

impl Add for Estimate {
    type Output = Estimate;

    fn add(self, rhs: Estimate) -> Estimate {
        let value = self.value + rhs.value;
        Estimate {
            value,
            error: self.error + rhs.error + f64::EPSILON * value.abs(),
        }
    }
}

impl std::iter::Sum for Estimate {
    fn sum<I: Iterator<Item = Estimate>>(iter: I) -> Estimate {
        iter.fold(Estimate::default(), |a, b| a + b)
    }
}

/// Sums `term(1), term(2), …` until three consecutive increments fall below
/// `tol / 10`, then bounds the remainder geometrically, assuming successive
/// terms shrink at least by `ratio < 1` in absolute value.
pub fn truncated_series<T>(mut term: T, ratio: f64, tol: f64, max_terms: usize) -> Result<Estimate>
where
    T: FnMut(usize) -> f64,
{
    if !(0.0..1.0).contains(&ratio) {
        return Err(Error::Divergence(format!(
            "no geometric remainder bound for term ratio {ratio}"
        )));
    }
    let mut sum = 0.0;
    let mut abs = 0.0;
    let mut small = 0;
    let mut last = 0.0;
    for i in 1..=max_terms {
        let t = term(i);
        if !t.is_finite() {
            return Err(Error::Divergence(format!("term {i} is {t}")));
        }
        sum += t;
        abs += t.abs();
        last = t;
        if t.abs() < tol / 10.0 {
            small += 1;
            if small == 3 {
                let remainder = last.abs() * ratio / (1.0 - ratio);
                return Ok(Estimate {
                    value: sum,
                    error: remainder + (i as f64) * f64::EPSILON * abs,
                });
            }
        } else {
            small = 0;
        }
    }
    Err(Error::Divergence(format!(
        "series not converged after {max_terms} terms (last term {last})"
    )))
}

/// A point `(x_1, …, x_n, c, c, c, …)` of the sequence space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventuallyConstantPoint {
    pub prefix: Vec<f64>,
    pub tail: f64,
}

impl EventuallyConstantPoint {
    pub fn new(prefix: Vec<f64>, tail: f64) -> Self {
        Self { prefix, tail }
    }

    /// The constant sequence `(c, c, c, …)`.
    pub fn constant(c: f64) -> Self {
        Self {
            prefix: Vec::new(),
            tail: c,
        }
    }

    /// Coordinate `x_k`, 1-based.
    pub fn coordinate(&self, k: usize) -> f64 {
        assert!(k >= 1, "coordinates are 1-based");
        self.prefix.get(k - 1).copied().unwrap_or(self.tail)
    }

    /// The first `d` coordinates.
    pub fn coordinates(&self, d: usize) -> Vec<f64> {
        (1..=d).map(|k| self.coordinate(k)).collect()
    }

    pub fn shift(&self) -> Self {
        Self {
            prefix: self.prefix.iter().skip(1).copied().collect(),
            tail: self.tail,
        }
    }

    /// The concatenation `a x = (a, x_1, x_2, …)`.
    pub fn prepend(&self, a: f64) -> Self {
        let mut prefix = Vec::with_capacity(self.prefix.len() + 1);
        prefix.push(a);
        prefix.extend_from_slice(&self.prefix);
        Self {
            prefix,
            tail: self.tail,
        }
    }

    pub fn check_in(&self, domain: &Interval) -> Result<()> {
        for &x in &self.prefix {
            domain.check(x)?;
        }
        domain.check(self.tail)?;
        Ok(())
    }
}

/// The built-in factor families.
#[derive(Debug, Clone, PartialEq)]
pub enum FamilyKind {
    /// `f_i ≡ 0`.
    Zero,
    /// `f_i(a) = -a^{2i}`, so `F(a) = 1 + 1/(a² - 1)`.
    Example1,
    /// `f_i(a) = a^i i^{-γ}`, so `F = Li_γ`. `reduced` is `Li_{γ-1}`, which
    /// enters the double tail.
    Polylog { series: Polylog, reduced: Polylog },
    /// `f_1` a polynomial (coefficients lowest degree first), `f_i ≡ 0` for `i ≥ 2`.
    Single(Vec<f64>),
}

/// Outcome of the summability-hypothesis check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisCheck {
    pub holds: bool,
    pub route: Option<HypothesisRoute>,
    pub reason: Option<String>,
    /// Largest probed index.
    pub horizon: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HypothesisRoute {
    /// `Lip(f_i) ≤ K 2^{-i}` on the probe horizon.
    Geometric { k: f64 },
    /// `Σ_j sup |T_j| ≤ bound` from a uniform tail estimate.
    UniformDoubleTail { bound: f64 },
}

/// A product-type potential on `[lo, hi]^ℕ`.
#[derive(Debug)]
pub struct PotentialFamily {
    kind: FamilyKind,
    domain: Interval,
    offset: f64,
    landscape: OnceLock<Result<Landscape>>,
}

impl Clone for PotentialFamily {
    fn clone(&self) -> Self {
        Self {
            kind: self.kind.clone(),
            domain: self.domain,
            offset: self.offset,
            landscape: self.landscape.clone(),
        }
    }
}

impl PotentialFamily {
    pub fn zero(domain: Interval) -> Self {
        Self::build(FamilyKind::Zero, domain)
    }

    /// `f_i(a) = -a^{2i}` on `[-1/2, 1/2]`.
    pub fn example1() -> Self {
        Self::build(FamilyKind::Example1, Interval { lo: -0.5, hi: 0.5 })
    }

    pub fn example1_on(domain: Interval) -> Result<Self> {
        if domain.lo <= -1.0 || domain.hi >= 1.0 {
            return Err(Error::InvalidParameter(format!(
                "example1 needs a domain inside (-1, 1), got [{}, {}]",
                domain.lo, domain.hi
            )));
        }
        Ok(Self::build(FamilyKind::Example1, domain))
    }

    /// `f_i(a) = a^i i^{-γ}` on `[-1, 1]`.
    pub fn polylog(gamma: f64) -> Result<Self> {
        Self::polylog_on(gamma, Interval { lo: -1.0, hi: 1.0 })
    }

    pub fn polylog_on(gamma: f64, domain: Interval) -> Result<Self> {
        if !(gamma > 2.0) || !gamma.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "polylog family needs gamma > 2 for a finite subaction, got {gamma}"
            )));
        }
        if domain.lo < -1.0 || domain.hi > 1.0 {
            return Err(Error::InvalidParameter(format!(
                "polylog domain must lie in [-1, 1], got [{}, {}]",
                domain.lo, domain.hi
            )));
        }
        Ok(Self::build(
            FamilyKind::Polylog {
                series: Polylog::new(gamma)?,
                reduced: Polylog::new(gamma - 1.0)?,
            },
            domain,
        ))
    }

    /// Only the first factor is nonzero: `f_1(a) = Σ_k coeffs[k] a^k`.
    pub fn single(coeffs: Vec<f64>, domain: Interval) -> Result<Self> {
        if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter(
                "single family needs a nonempty list of finite coefficients".into(),
            ));
        }
        Ok(Self::build(FamilyKind::Single(coeffs), domain))
    }

    fn build(kind: FamilyKind, domain: Interval) -> Self {
        Self {
            kind,
            domain,
            offset: 0.0,
            landscape: OnceLock::new(),
        }
    }

    /// The same family with `c` added to the first factor, so `F ↦ F + c`.
    pub fn with_offset(&self, c: f64) -> Self {
        Self {
            kind: self.kind.clone(),
            domain: self.domain,
            offset: self.offset + c,
            landscape: OnceLock::new(),
        }
    }

    pub fn kind(&self) -> &FamilyKind {
        &self.kind
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            FamilyKind::Zero => "zero",
            FamilyKind::Example1 => "example1",
            FamilyKind::Polylog { .. } => "polylog",
            FamilyKind::Single(_) => "single",
        }
    }

    pub fn tolerance(&self) -> f64 {
        DEFAULT_FAMILY_TOLERANCE
    }

    /// Peak structure of `F`, computed once on first use.
    pub fn landscape(&self) -> Result<&Landscape> {
        self.landscape
            .get_or_init(|| Landscape::scan(self, crate::landscape::DEFAULT_PEAK_TOL))
            .as_ref()
            .map_err(Clone::clone)
    }

    /// `f_i(a)` for `i ≥ 1`.
    pub fn factor(&self, i: usize, a: f64) -> Result<f64> {
        if i == 0 {
            return Err(Error::InvalidParameter("factor indices start at 1".into()));
        }
        let a = self.domain.check(a)?;
        let base = match &self.kind {
            FamilyKind::Zero => 0.0,
            FamilyKind::Example1 => -(a * a).powi(i as i32),
            FamilyKind::Polylog { series, .. } => series.term(i, a),
            FamilyKind::Single(c) => {
                if i == 1 {
                    horner(c, a)
                } else {
                    0.0
                }
            }
        };
        Ok(if i == 1 { base + self.offset } else { base })
    }

    /// `F(a) = Σ_{i≥1} f_i(a)`.
    pub fn summed(&self, a: f64) -> Result<Estimate> {
        Ok(self.tail(0, a)?)
    }

    /// `T_j(a) = Σ_{i>j} f_i(a)`; `T_0 = F`.
    pub fn tail(&self, j: usize, a: f64) -> Result<Estimate> {
        let a = self.domain.check(a)?;
        let base = match &self.kind {
            FamilyKind::Zero => Estimate::exact(0.0),
            FamilyKind::Example1 => {
                let a2 = a * a;
                let value = -a2.powi(j as i32 + 1) / (1.0 - a2);
                Estimate {
                    value,
                    error: 4.0 * f64::EPSILON * value.abs(),
                }
            }
            FamilyKind::Polylog { series, .. } => series.tail(j, a)?,
            FamilyKind::Single(c) => {
                if j == 0 {
                    let value = horner(c, a);
                    Estimate {
                        value,
                        error: horner_error(c, a),
                    }
                } else {
                    Estimate::exact(0.0)
                }
            }
        };
        Ok(if j == 0 {
            base + Estimate::exact(self.offset)
        } else {
            base
        })
    }

    /// `Σ_{j>m} T_j(c)`.
    pub fn double_tail(&self, m: usize, c: f64) -> Result<Estimate> {
        let c = self.domain.check(c)?;
        Ok(match &self.kind {
            FamilyKind::Zero | FamilyKind::Single(_) => Estimate::exact(0.0),
            FamilyKind::Example1 => {
                let c2 = c * c;
                let value = -c2.powi(m as i32 + 2) / ((1.0 - c2) * (1.0 - c2));
                Estimate {
                    value,
                    error: 6.0 * f64::EPSILON * value.abs(),
                }
            }
            FamilyKind::Polylog { series, reduced } => {
                // Σ_{i>m} (i - m - 1) c^i i^{-γ} = tail_{γ-1}(m) - (m+1) tail_γ(m)
                let first = reduced.tail(m, c)?;
                let second = series.tail(m, c)?.scale((m + 1) as f64);
                let value = first.value - second.value;
                Estimate {
                    value,
                    error: first.error
                        + second.error
                        + 2.0 * f64::EPSILON * (first.value.abs() + second.value.abs()),
                }
            }
        })
    }

    /// An upper bound `c_i ≥ Lip(f_i)` on the domain.
    pub fn lipschitz_bound(&self, i: usize) -> Option<f64> {
        if i == 0 {
            return None;
        }
        let r = self.domain.lo.abs().max(self.domain.hi.abs());
        Some(match &self.kind {
            FamilyKind::Zero => 0.0,
            FamilyKind::Example1 => 2.0 * i as f64 * r.powi(2 * i as i32 - 1),
            FamilyKind::Polylog { series, .. } => {
                (i as f64).powf(1.0 - series.order()) * r.powi(i as i32 - 1)
            }
            FamilyKind::Single(c) => {
                if i == 1 {
                    c.iter()
                        .enumerate()
                        .skip(1)
                        .map(|(k, ck)| k as f64 * ck.abs() * r.powi(k as i32 - 1))
                        .sum()
                } else {
                    0.0
                }
            }
        })
    }

    /// The constant `K` in `Lip(f_i) ≤ K 2^{-i}`, when the family declares one.
    pub fn geometric_lipschitz_constant(&self) -> Option<f64> {
        match &self.kind {
            FamilyKind::Zero => Some(0.0),
            FamilyKind::Example1 => {
                let r = self.domain.lo.abs().max(self.domain.hi.abs());
                if 2.0 * r * r >= 1.0 {
                    return None;
                }
                let sup = (1..=512usize)
                    .map(|i| self.lipschitz_bound(i).unwrap_or(0.0) * 2f64.powi(i as i32))
                    .fold(0.0, f64::max);
                Some(sup.max(4.0))
            }
            FamilyKind::Polylog { .. } => None,
            FamilyKind::Single(_) => Some(2.0 * self.lipschitz_bound(1).unwrap_or(0.0)),
        }
    }

    /// A bound on `Σ_{j≥1} sup_a |T_j(a)|`, when the family declares one.
    pub fn uniform_double_tail_bound(&self) -> Option<f64> {
        match &self.kind {
            FamilyKind::Zero | FamilyKind::Single(_) => Some(0.0),
            FamilyKind::Example1 => {
                let r2 = self.domain.lo.powi(2).max(self.domain.hi.powi(2));
                Some(r2 * r2 / ((1.0 - r2) * (1.0 - r2)))
            }
            FamilyKind::Polylog { series, .. } => {
                // sup |T_j| ≤ Σ_{i>j} i^{-γ} ≤ j^{1-γ}/(γ-1), summed over j ≥ 1
                let g = series.order();
                Some(1.0 / (g - 1.0) + 1.0 / ((g - 1.0) * (g - 2.0)))
            }
        }
    }

    /// Analytic `F'(a)`, when available.
    pub fn d1(&self, a: f64) -> Result<Option<f64>> {
        let a = self.domain.check(a)?;
        Ok(match &self.kind {
            FamilyKind::Zero => Some(0.0),
            FamilyKind::Example1 => {
                let w = 1.0 - a * a;
                Some(-2.0 * a / (w * w))
            }
            FamilyKind::Polylog { .. } => None,
            FamilyKind::Single(c) => Some(horner(&derivative(c), a)),
        })
    }

    /// Analytic `F''(a)`, when available.
    pub fn d2(&self, a: f64) -> Result<Option<f64>> {
        let a = self.domain.check(a)?;
        Ok(match &self.kind {
            FamilyKind::Zero => Some(0.0),
            FamilyKind::Example1 => {
                let w = 1.0 - a * a;
                Some(-2.0 / (w * w) - 8.0 * a * a / (w * w * w))
            }
            FamilyKind::Polylog { .. } => None,
            FamilyKind::Single(c) => Some(horner(&derivative(&derivative(c)), a)),
        })
    }

    pub fn has_analytic_derivatives(&self) -> bool {
        !matches!(self.kind, FamilyKind::Polylog { .. })
    }

    /// `f(x) = Σ_{j≤n} f_j(x_j) + T_n(c)`.
    pub fn evaluate(&self, x: &EventuallyConstantPoint) -> Result<Estimate> {
        let head: Estimate = x
            .prefix
            .iter()
            .enumerate()
            .map(|(k, &xk)| self.factor(k + 1, xk).map(Estimate::exact))
            .sum::<Result<Estimate>>()?;
        let tail = self.tail(x.prefix.len(), x.tail)?;
        Ok(head + tail)
    }

    /// The calibrated subaction `u(x) = Σ_j T_j(x_j) = Σ_{j≤n} T_j(x_j) + Σ_{j>n} T_j(c)`.
    pub fn subaction(&self, x: &EventuallyConstantPoint) -> Result<Estimate> {
        let head: Estimate = x
            .prefix
            .iter()
            .enumerate()
            .map(|(k, &xk)| self.tail(k + 1, xk))
            .sum::<Result<Estimate>>()?;
        let tail = self.double_tail(x.prefix.len(), x.tail)?;
        let total = head + tail;
        if !total.value.is_finite() {
            return Err(Error::Divergence(format!(
                "subaction is not finite at tail value {}",
                x.tail
            )));
        }
        Ok(total)
    }

    /// Checks the summability hypothesis behind the explicit eigenfunction,
    /// either through geometric Lipschitz decay or through a uniform bound on
    /// the double tail, plus finiteness of `u` at `xbar`.
    pub fn check_eigen_hypothesis(&self, xbar: &EventuallyConstantPoint) -> HypothesisCheck {
        const HORIZON: usize = 256;
        let fail = |reason: String| HypothesisCheck {
            holds: false,
            route: None,
            reason: Some(reason),
            horizon: HORIZON,
        };

        let mut bounds = Vec::with_capacity(HORIZON);
        for i in 1..=HORIZON {
            match self.lipschitz_bound(i) {
                Some(c) => bounds.push(c),
                None => return fail("lipschitz_unavailable".into()),
            }
        }
        match self.subaction(xbar) {
            Ok(u) if u.value.is_finite() => {}
            Ok(_) => return fail("subaction_not_finite".into()),
            Err(e) => return fail(format!("subaction_error: {e}")),
        }

        if let Some(k) = self.geometric_lipschitz_constant() {
            let ok = bounds
                .iter()
                .enumerate()
                .all(|(idx, c)| *c <= k * 2f64.powi(-(idx as i32 + 1)) * (1.0 + 1e-12));
            if ok {
                return HypothesisCheck {
                    holds: true,
                    route: Some(HypothesisRoute::Geometric { k }),
                    reason: None,
                    horizon: HORIZON,
                };
            }
        }
        if let Some(bound) = self.uniform_double_tail_bound() {
            if bound.is_finite() {
                return HypothesisCheck {
                    holds: true,
                    route: Some(HypothesisRoute::UniformDoubleTail { bound }),
                    reason: None,
                    horizon: HORIZON,
                };
            }
        }
        fail("no_geometric_or_uniform_bound".into())
    }
}

fn horner(coeffs: &[f64], a: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * a + c)
}

fn horner_error(coeffs: &[f64], a: f64) -> f64 {
    let abs: f64 = coeffs.iter().rev().fold(0.0, |acc, c| acc * a.abs() + c.abs());
    2.0 * coeffs.len() as f64 * f64::EPSILON * abs
}

fn derivative(coeffs: &[f64]) -> Vec<f64> {
    if coeffs.len() <= 1 {
        return vec![0.0];
    }
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, c)| k as f64 * c)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit() -> Interval {
        Interval::new(0.0, 1.0).unwrap()
    }

    fn sym() -> Interval {
        Interval::new(-1.0, 1.0).unwrap()
    }

    #[test]
    fn zero_family_is_zero_everywhere() {
        let z = PotentialFamily::zero(unit());
        assert_eq!(z.summed(0.3).unwrap().value, 0.0);
        let x = EventuallyConstantPoint::new(vec![0.1, 0.9], 0.4);
        assert_eq!(z.evaluate(&x).unwrap().value, 0.0);
        assert_eq!(z.subaction(&x).unwrap().value, 0.0);
    }

    #[test]
    fn example1_closed_form_values() {
        let e = PotentialFamily::example1();
        assert_eq!(e.summed(0.0).unwrap().value, 0.0);
        assert!((e.summed(0.5).unwrap().value + 1.0 / 3.0).abs() < 1e-15);
        let x = EventuallyConstantPoint::new(vec![0.5], 0.0);
        assert!((e.evaluate(&x).unwrap().value + 0.25).abs() < 1e-15);
        assert_eq!(e.evaluate(&EventuallyConstantPoint::constant(0.0)).unwrap().value, 0.0);
    }

    #[test]
    fn example1_subaction_against_geometric_partial_sums() {
        let e = PotentialFamily::example1();
        // Σ_{i>1} -(1/2)^{2i}
        let oracle: f64 = (2..200).map(|i| -(0.5f64).powi(2 * i)).sum();
        assert!((oracle + 1.0 / 12.0).abs() < 1e-16);
        let x = EventuallyConstantPoint::new(vec![0.5], 0.0);
        assert!((e.subaction(&x).unwrap().value - oracle).abs() < 1e-15);
        assert_eq!(e.subaction(&EventuallyConstantPoint::constant(0.0)).unwrap().value, 0.0);
    }

    #[test]
    fn example1_tails_match_partial_sum_oracle() {
        let e = PotentialFamily::example1();
        for &a in &[-0.45f64, -0.3, 0.0, 0.1, 0.45] {
            for j in 0..6 {
                let oracle: f64 = (j + 1..10_000).map(|i| -(a * a).powi(i as i32)).sum();
                assert!((e.tail(j, a).unwrap().value - oracle).abs() < 1e-12);
            }
        }
        for &c in &[-0.45f64, 0.2, 0.45] {
            for m in 0..4 {
                let oracle: f64 = (m + 1..2_000)
                    .map(|j| (j + 1..2_000).map(|i| -(c * c).powi(i as i32)).sum::<f64>())
                    .sum();
                assert!((e.double_tail(m, c).unwrap().value - oracle).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn polylog_double_tail_against_nested_sums() {
        let p = PotentialFamily::polylog(3.0).unwrap();
        for &c in &[-0.8f64, 0.3, 0.9] {
            for m in 0..3 {
                let n = 3000;
                let oracle: f64 = (m + 1..n)
                    .map(|j| {
                        (j + 1..n)
                            .map(|i| c.powi(i as i32) / (i as f64).powi(3))
                            .sum::<f64>()
                    })
                    .sum();
                let got = p.double_tail(m, c).unwrap().value;
                assert!((got - oracle).abs() < 1e-12, "c={c} m={m}: {got} vs {oracle}");
            }
        }
    }

    #[test]
    fn out_of_domain_is_rejected() {
        let e = PotentialFamily::example1();
        assert!(matches!(e.summed(0.6), Err(Error::OutOfDomain { .. })));
        let x = EventuallyConstantPoint::new(vec![0.7], 0.0);
        assert!(e.evaluate(&x).is_err());
        assert!(e.factor(0, 0.1).is_err());
    }

    #[test]
    fn constructors_validate_parameters() {
        assert!(PotentialFamily::polylog(2.0).is_err());
        assert!(PotentialFamily::polylog_on(3.0, Interval::new(-2.0, 1.0).unwrap()).is_err());
        assert!(PotentialFamily::example1_on(Interval::new(-1.0, 0.5).unwrap()).is_err());
        assert!(PotentialFamily::single(vec![], sym()).is_err());
        assert!(Interval::new(1.0, 1.0).is_err());
    }

    #[test]
    fn shift_and_prepend() {
        let x = EventuallyConstantPoint::new(vec![0.1, 0.2], 0.3);
        assert_eq!(x.shift(), EventuallyConstantPoint::new(vec![0.2], 0.3));
        assert_eq!(x.shift().shift().shift(), EventuallyConstantPoint::constant(0.3));
        assert_eq!(x.prepend(0.0).shift(), x);
        assert_eq!(x.coordinates(4), vec![0.1, 0.2, 0.3, 0.3]);
    }

    #[test]
    fn hypothesis_check_routes() {
        let e = PotentialFamily::example1();
        let r = e.check_eigen_hypothesis(&EventuallyConstantPoint::constant(0.0));
        assert!(r.holds);
        assert_eq!(r.route, Some(HypothesisRoute::Geometric { k: 4.0 }));

        let z = PotentialFamily::zero(unit());
        assert!(z.check_eigen_hypothesis(&EventuallyConstantPoint::constant(0.5)).holds);

        let p = PotentialFamily::polylog(3.0).unwrap();
        let r = p.check_eigen_hypothesis(&EventuallyConstantPoint::constant(1.0));
        assert!(r.holds);
        assert!(matches!(r.route, Some(HypothesisRoute::UniformDoubleTail { .. })));
    }

    #[test]
    fn example1_lipschitz_constants() {
        let e = PotentialFamily::example1();
        for i in 1..40 {
            let c = e.lipschitz_bound(i).unwrap();
            assert!((c - i as f64 * 2f64.powi(2 - 2 * i as i32)).abs() < 1e-15);
            assert!(c <= 4.0 * 2f64.powi(-(i as i32)));
        }
    }

    #[test]
    fn single_family_derivatives() {
        // -(a² - 1/4)² = -a⁴ + a²/2 - 1/16
        let s = PotentialFamily::single(vec![-1.0 / 16.0, 0.0, 0.5, 0.0, -1.0], sym()).unwrap();
        assert!(s.summed(0.5).unwrap().value.abs() < 1e-16);
        assert!((s.d2(0.5).unwrap().unwrap() + 2.0).abs() < 1e-14);
        assert!(s.d1(0.5).unwrap().unwrap().abs() < 1e-15);
        assert_eq!(s.tail(1, 0.3).unwrap().value, 0.0);
    }

    #[test]
    fn offset_moves_first_factor_only() {
        let e = PotentialFamily::example1().with_offset(2.5);
        assert!((e.summed(0.0).unwrap().value - 2.5).abs() < 1e-15);
        assert_eq!(e.tail(1, 0.0).unwrap().value, 0.0);
        assert!((e.factor(1, 0.0).unwrap() - 2.5).abs() < 1e-15);
    }

    fn builtins() -> Vec<PotentialFamily> {
        vec![
            PotentialFamily::zero(unit()),
            PotentialFamily::example1(),
            PotentialFamily::polylog(3.0).unwrap(),
            PotentialFamily::single(vec![-0.125, 0.0625, 1.0, -0.5, -2.0, 1.0], sym()).unwrap(),
        ]
    }

    proptest! {
        #[test]
        fn tails_telescope(which in 0usize..4, j in 0usize..40, t in 0.0f64..=1.0) {
            let fam = &builtins()[which];
            let d = fam.domain();
            let a = d.lo + t * d.width();
            let tj = fam.tail(j, a).unwrap();
            let tj1 = fam.tail(j + 1, a).unwrap();
            let fj1 = fam.factor(j + 1, a).unwrap();
            let tol = 2.0 * (tj.error + tj1.error).max(fam.tolerance());
            prop_assert!((tj.value - tj1.value - fj1).abs() <= tol);
        }

        #[test]
        fn constant_point_matches_summed(which in 0usize..4, t in 0.0f64..=1.0) {
            let fam = &builtins()[which];
            let d = fam.domain();
            let a = d.lo + t * d.width();
            let f = fam.evaluate(&EventuallyConstantPoint::constant(a)).unwrap();
            let big = fam.summed(a).unwrap();
            prop_assert!((f.value - big.value).abs() <= f.error + big.error + fam.tolerance());
        }
    }
}
