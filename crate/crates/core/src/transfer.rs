//! The transfer operator `L(φ)(x) = ∫ exp(β f(a x)) φ(a x) da`, its explicit
//! eigendata, and residual checks of the eigen-relations.
//!
//! Everything is carried in log scale. Integrands are shifted by a grid
//! estimate of their maximum before exponentiation.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::potential::{Estimate, EventuallyConstantPoint, Interval, PotentialFamily};
use crate::quadrature::{integrate_with, log_partition, QuadOptions, QuadratureResult};

/// Points used to estimate the maximum of an integrand before shifting.
const SHIFT_GRID: usize = 65;

/// A test function depending on the first `depth` coordinates.
#[derive(Clone)]
pub struct CylinderFunction {
    depth: usize,
    f: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
}

impl std::fmt::Debug for CylinderFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CylinderFunction")
            .field("depth", &self.depth)
            .finish_non_exhaustive()
    }
}

impl CylinderFunction {
    pub fn new<F>(depth: usize, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self {
            depth,
            f: Arc::new(f),
        }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(0, move |_| c)
    }

    /// `φ(y) = Π_k φ_k(y_k)`.
    pub fn product(factors: Vec<Arc<dyn Fn(f64) -> f64 + Send + Sync>>) -> Self {
        let depth = factors.len();
        Self::new(depth, move |y| {
            factors.iter().zip(y).map(|(phi, &t)| phi(t)).product()
        })
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn eval(&self, y: &EventuallyConstantPoint) -> f64 {
        (self.f)(&y.coordinates(self.depth))
    }
}

/// A value `exp(log_scale) * raw.value`, kept factored so that neither part
/// overflows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledIntegral {
    pub log_scale: f64,
    pub raw: QuadratureResult,
}

impl ScaledIntegral {
    pub fn value(&self) -> f64 {
        self.raw.value * self.log_scale.exp()
    }

    /// Log of a positive value.
    pub fn log_value(&self) -> Result<f64> {
        if self.raw.value > 0.0 {
            Ok(self.log_scale + self.raw.value.ln())
        } else {
            Err(Error::Domain(format!(
                "log of non-positive integral {}",
                self.raw.value
            )))
        }
    }

    pub fn log_error(&self) -> f64 {
        self.raw.abs_error_estimate / self.raw.value.abs()
    }
}

/// `∫ exp(exponent(a)) weight(a) da` over the domain, shifted by the largest
/// exponent seen on a coarse grid and at the peaks of `F`.
fn shifted_fiber_integral<E, W>(
    family: &PotentialFamily,
    exponent: E,
    weight: W,
    opts: &QuadOptions,
) -> Result<ScaledIntegral>
where
    E: Fn(f64) -> Result<f64>,
    W: Fn(f64) -> Result<f64>,
{
    let domain = family.domain();
    let landscape = family.landscape()?;
    let mut probes = domain.grid(SHIFT_GRID);
    probes.extend(landscape.candidates.iter().map(|c| c.location));

    let mut shift = f64::NEG_INFINITY;
    let mut argmax = domain.lo;
    for &a in &probes {
        let e = exponent(a)?;
        if e > shift {
            shift = e;
            argmax = a;
        }
    }
    if !shift.is_finite() {
        return Err(Error::Domain(format!("non-finite exponent {shift}")));
    }
    let mut cuts: Vec<f64> = landscape.candidates.iter().map(|c| c.location).collect();
    cuts.push(argmax);

    let raw = integrate_with(
        |a| Ok((exponent(a)? - shift).exp() * weight(a)?),
        domain,
        &cuts,
        opts,
    )?;
    Ok(ScaledIntegral {
        log_scale: shift,
        raw,
    })
}

/// `L(φ)(x) = ∫ exp(β f(a x)) φ(a x) da`, with `f(a x)` evaluated on the
/// concatenated point.
pub fn apply_operator(
    family: &PotentialFamily,
    beta: f64,
    phi: &CylinderFunction,
    x: &EventuallyConstantPoint,
    opts: &QuadOptions,
) -> Result<ScaledIntegral> {
    x.check_in(&family.domain())?;
    shifted_fiber_integral(
        family,
        |a| Ok(beta * family.evaluate(&x.prepend(a))?.value),
        |a| Ok(phi.eval(&x.prepend(a))),
        opts,
    )
}

/// `log h_β(x) = β u(x)`.
pub fn log_eigenfunction(
    family: &PotentialFamily,
    beta: f64,
    x: &EventuallyConstantPoint,
) -> Result<Estimate> {
    x.check_in(&family.domain())?;
    if beta == 0.0 {
        return Ok(Estimate::exact(0.0));
    }
    Ok(family.subaction(x)?.scale(beta))
}

/// Leading eigenvalue of the transfer operator at one inverse temperature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EigenData {
    pub beta: f64,
    pub log_lambda: f64,
    pub log_lambda_error: f64,
}

impl EigenData {
    pub fn compute(family: &PotentialFamily, beta: f64, opts: &QuadOptions) -> Result<Self> {
        let p = log_partition(family, beta, opts)?;
        Ok(Self {
            beta,
            log_lambda: p.log_value,
            log_lambda_error: p.log_error(),
        })
    }

    pub fn lambda(&self) -> f64 {
        self.log_lambda.exp()
    }

    /// `(1/β) log λ_β`; undefined at `β = 0`.
    pub fn pressure_over_beta(&self) -> Option<f64> {
        (self.beta > 0.0).then(|| self.log_lambda / self.beta)
    }

    /// `log g̃(a) = β F(a) - log λ_β`.
    pub fn log_density(&self, family: &PotentialFamily, a: f64) -> Result<f64> {
        Ok(self.beta * family.summed(a)?.value - self.log_lambda)
    }

    pub fn density(&self, family: &PotentialFamily, a: f64) -> Result<f64> {
        Ok(self.log_density(family, a)?.exp())
    }
}

/// The equilibrium marginal density `exp(β F(a)) / λ_β`.
pub fn normalized_density(family: &PotentialFamily, beta: f64, a: f64) -> Result<f64> {
    family.domain().check(a)?;
    EigenData::compute(family, beta, &QuadOptions::default())?.density(family, a)
}

/// `|log L(h)(x) - log λ - log h(x)|` for the explicit eigenfunction, with
/// `L(h)` integrated directly from `f` and `u` on the concatenated points.
pub fn eigen_residual(
    family: &PotentialFamily,
    beta: f64,
    x: &EventuallyConstantPoint,
    opts: &QuadOptions,
) -> Result<f64> {
    x.check_in(&family.domain())?;
    let eigen = EigenData::compute(family, beta, opts)?;
    let lhs = shifted_fiber_integral(
        family,
        |a| {
            let ax = x.prepend(a);
            Ok(beta * (family.evaluate(&ax)?.value + family.subaction(&ax)?.value))
        },
        |_| Ok(1.0),
        opts,
    )?
    .log_value()?;
    let log_h = log_eigenfunction(family, beta, x)?.value;
    Ok((lhs - eigen.log_lambda - log_h).abs())
}

/// Exponent of the normalized kernel, `β (f(a x) + u(a x) - u(x)) - log λ`.
pub fn normalized_kernel_exponent(
    family: &PotentialFamily,
    eigen: &EigenData,
    a: f64,
    x: &EventuallyConstantPoint,
) -> Result<f64> {
    let ax = x.prepend(a);
    let beta = eigen.beta;
    Ok(beta * (family.evaluate(&ax)?.value + family.subaction(&ax)?.value - family.subaction(x)?.value)
        - eigen.log_lambda)
}

/// `|∫ L_{f̃}(φ) dμ̃ - ∫ φ dμ̃|` for a product test function
/// `φ(x) = Π_{k≤n} φ_k(x_k)`.
///
/// The left side applies the normalized operator through its kernel and
/// integrates the result against `μ̃` over the remaining `n - 1` coordinates;
/// the right side is the product of one-dimensional integrals against the
/// closed-form density. Coordinates past the test function's depth are fixed at
/// the middle of the domain.
pub fn dual_fixed_point_residual(
    family: &PotentialFamily,
    beta: f64,
    factors: &[Arc<dyn Fn(f64) -> f64 + Send + Sync>],
    opts: &QuadOptions,
) -> Result<f64> {
    if factors.is_empty() {
        return Err(Error::InvalidParameter(
            "test function needs at least one factor".into(),
        ));
    }
    let eigen = EigenData::compute(family, beta, opts)?;
    let domain = family.domain();
    let rest = 0.5 * (domain.lo + domain.hi);

    let rhs = factors
        .iter()
        .map(|phi| density_moment(family, &eigen, phi.as_ref(), opts))
        .product::<Result<f64>>()?;
    let lhs = outer_integral(family, &eigen, factors, &mut Vec::new(), rest, opts)?;
    Ok((lhs - rhs).abs())
}

fn density_moment(
    family: &PotentialFamily,
    eigen: &EigenData,
    phi: &(dyn Fn(f64) -> f64 + Send + Sync),
    opts: &QuadOptions,
) -> Result<f64> {
    let peaks: Vec<f64> = family
        .landscape()?
        .candidates
        .iter()
        .map(|c| c.location)
        .collect();
    Ok(integrate_with(
        |t| Ok(eigen.density(family, t)? * phi(t)),
        family.domain(),
        &peaks,
        opts,
    )?
    .value)
}

/// Integrates `L_{f̃}(φ)(x_1, …, x_{n-1})` against the product density,
/// one coordinate at a time.
fn outer_integral(
    family: &PotentialFamily,
    eigen: &EigenData,
    factors: &[Arc<dyn Fn(f64) -> f64 + Send + Sync>],
    fixed: &mut Vec<f64>,
    rest: f64,
    opts: &QuadOptions,
) -> Result<f64> {
    let n = factors.len();
    if fixed.len() + 1 == n {
        let x = EventuallyConstantPoint::new(fixed.clone(), rest);
        let phi_first = &factors[0];
        let inner = shifted_fiber_integral(
            family,
            |a| normalized_kernel_exponent(family, eigen, a, &x),
            |a| Ok(phi_first(a)),
            opts,
        )?
        .value();
        let others: f64 = fixed
            .iter()
            .zip(&factors[1..])
            .map(|(&t, phi)| phi(t))
            .product();
        return Ok(inner * others);
    }
    let domain: Interval = family.domain();
    let peaks: Vec<f64> = family
        .landscape()?
        .candidates
        .iter()
        .map(|c| c.location)
        .collect();
    let r = integrate_with(
        |t| {
            fixed.push(t);
            let v = outer_integral(family, eigen, factors, fixed, rest, opts);
            fixed.pop();
            Ok(v? * eigen.density(family, t)?)
        },
        domain,
        &peaks,
        opts,
    )?;
    Ok(r.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn unit() -> Interval {
        Interval::new(0.0, 1.0).unwrap()
    }

    fn opts() -> QuadOptions {
        QuadOptions::default()
    }

    #[test]
    fn zero_family_operator_averages_over_fiber() {
        let z = PotentialFamily::zero(unit());
        let x = EventuallyConstantPoint::new(vec![0.3], 0.7);
        let one = apply_operator(&z, 3.0, &CylinderFunction::constant(1.0), &x, &opts()).unwrap();
        assert_abs_diff_eq!(one.value(), 1.0, epsilon = 1e-14);
        let first = CylinderFunction::new(1, |y| y[0]);
        let mean = apply_operator(&z, 3.0, &first, &x, &opts()).unwrap();
        assert_abs_diff_eq!(mean.value(), 0.5, epsilon = 1e-14);
    }

    #[test]
    fn operator_sees_shifted_coordinates() {
        // φ(y) = y_2 evaluated on a x is x_1
        let z = PotentialFamily::zero(unit());
        let x = EventuallyConstantPoint::new(vec![0.3], 0.7);
        let second = CylinderFunction::new(2, |y| y[1]);
        let v = apply_operator(&z, 1.0, &second, &x, &opts()).unwrap();
        assert_abs_diff_eq!(v.value(), 0.3, epsilon = 1e-14);
    }

    #[test]
    fn eigenfunction_values() {
        let e = PotentialFamily::example1();
        let x = EventuallyConstantPoint::new(vec![0.5], 0.0);
        assert_eq!(log_eigenfunction(&e, 0.0, &x).unwrap().value, 0.0);
        assert_abs_diff_eq!(
            log_eigenfunction(&e, 2.0, &x).unwrap().value,
            -1.0 / 6.0,
            epsilon = 1e-14
        );
        let z = PotentialFamily::zero(unit());
        assert_eq!(log_eigenfunction(&z, 5.0, &x).unwrap().value, 0.0);
    }

    #[test]
    fn operator_on_eigenfunction_matches_eigenvalue() {
        // L(h)(x) by plain quadrature of exp(f + βu) on a x, no shifting
        let e = PotentialFamily::example1();
        let x = EventuallyConstantPoint::constant(0.0);
        let direct = crate::quadrature::integrate(
            |a| {
                let ax = x.prepend(a);
                (e.evaluate(&ax).unwrap().value + e.subaction(&ax).unwrap().value).exp()
            },
            e.domain(),
            1e-13,
        )
        .unwrap()
        .value;
        let lambda = crate::quadrature::integrate(
            |a| (1.0 + 1.0 / (a * a - 1.0)).exp(),
            e.domain(),
            1e-13,
        )
        .unwrap()
        .value;
        let h_x = e.subaction(&x).unwrap().value.exp();
        assert_abs_diff_eq!(direct, lambda * h_x, epsilon = 1e-12);
    }

    #[test]
    fn eigen_residual_small_for_example1() {
        let e = PotentialFamily::example1();
        for x in [
            EventuallyConstantPoint::constant(0.0),
            EventuallyConstantPoint::new(vec![0.3, -0.2], 0.1),
        ] {
            let r = eigen_residual(&e, 1.0, &x, &opts()).unwrap();
            assert!(r <= 1e-8, "{r}");
        }
        let z = PotentialFamily::zero(unit());
        let r = eigen_residual(&z, 2.0, &EventuallyConstantPoint::constant(0.4), &opts()).unwrap();
        assert!(r <= 1e-10);
    }

    #[test]
    fn density_is_uniform_for_zero_family_and_at_zero_beta() {
        let z = PotentialFamily::zero(unit());
        assert_abs_diff_eq!(normalized_density(&z, 4.0, 0.3).unwrap(), 1.0, epsilon = 1e-14);
        let e = PotentialFamily::example1();
        assert_abs_diff_eq!(normalized_density(&e, 0.0, 0.3).unwrap(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn density_at_peak_against_independent_normalizer() {
        let e = PotentialFamily::example1();
        let lambda = crate::quadrature::integrate(
            |a| (1.0 + 1.0 / (a * a - 1.0)).exp(),
            e.domain(),
            1e-13,
        )
        .unwrap()
        .value;
        assert_abs_diff_eq!(normalized_density(&e, 1.0, 0.0).unwrap(), 1.0 / lambda, epsilon = 1e-12);
    }

    #[test]
    fn density_integrates_to_one() {
        let e = PotentialFamily::example1();
        for beta in [0.0, 1.0, 10.0, 100.0] {
            let eigen = EigenData::compute(&e, beta, &opts()).unwrap();
            let total = integrate_with(|a| eigen.density(&e, a), e.domain(), &[0.0], &opts())
                .unwrap()
                .value;
            assert_abs_diff_eq!(total, 1.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn normalized_operator_fixes_constants_and_depends_on_first_coordinate() {
        let e = PotentialFamily::example1();
        let eigen = EigenData::compute(&e, 2.0, &opts()).unwrap();
        let one_at = |x: &EventuallyConstantPoint| {
            shifted_fiber_integral(
                &e,
                |a| normalized_kernel_exponent(&e, &eigen, a, x),
                |_| Ok(1.0),
                &opts(),
            )
            .unwrap()
            .value()
        };
        let x = EventuallyConstantPoint::new(vec![0.1, 0.4], -0.3);
        let y = EventuallyConstantPoint::new(vec![0.1, -0.2, 0.45], 0.2);
        let (lx, ly) = (one_at(&x), one_at(&y));
        assert_abs_diff_eq!(lx, 1.0, epsilon = 1e-9);
        assert!((lx.ln() - ly.ln()).abs() <= 1e-8);
    }

    #[test]
    fn dual_fixed_point_zero_and_example1() {
        let id: Arc<dyn Fn(f64) -> f64 + Send + Sync> = Arc::new(|t| t);
        let sq: Arc<dyn Fn(f64) -> f64 + Send + Sync> = Arc::new(|t| t * t);
        let z = PotentialFamily::zero(unit());
        assert!(dual_fixed_point_residual(&z, 1.0, &[id.clone()], &opts()).unwrap() <= 1e-10);
        let e = PotentialFamily::example1();
        assert!(dual_fixed_point_residual(&e, 1.0, &[sq], &opts()).unwrap() <= 1e-8);
        assert!(dual_fixed_point_residual(&e, 1.0, &[id.clone(), id], &opts()).unwrap() <= 1e-8);
    }
}
