//! Adaptive one-dimensional quadrature and peaked exponential integrals.
//!
//! The workhorse is a globally adaptive 21-point Gauss–Kronrod scheme: the
//! panel with the largest error estimate is bisected until the summed estimate
//! meets the requested tolerance. Integrals of `exp(beta * F)` are always taken
//! in shifted form, `exp(beta * (F - M))` with `M` the maximum of `F`, and
//! reported as logarithms so that large inverse temperatures never overflow.

use crate::error::{Error, Result};
use crate::potential::{Interval, PotentialFamily};

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_904_487_334_954,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// Stopping rule and work limit for the adaptive integrator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_panels: usize,
}

impl QuadOptions {
    pub const DEFAULT_REL_TOL: f64 = 1e-10;

    /// Relative tolerance only; the absolute floor is left at zero so that the
    /// rule adapts to the scale of the integral.
    pub fn relative(rel_tol: f64) -> Self {
        Self {
            abs_tol: 0.0,
            rel_tol,
            max_panels: 4000,
        }
    }
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self::relative(Self::DEFAULT_REL_TOL)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult {
    pub value: f64,
    pub abs_error_estimate: f64,
    pub evaluations: usize,
}

/// `log ∫ exp(beta * G)` over an interval, stored as `beta * shift + log(raw)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakedIntegralResult {
    pub log_value: f64,
    pub shift: f64,
    pub raw: QuadratureResult,
}

impl PeakedIntegralResult {
    /// Absolute error of `log_value` implied by the raw quadrature error.
    pub fn log_error(&self) -> f64 {
        self.raw.abs_error_estimate / self.raw.value
    }
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
    resabs: f64,
    splittable: bool,
}

fn rescale_error(err: f64, resabs: f64, resasc: f64) -> f64 {
    let mut err = err.abs();
    if resasc != 0.0 && err != 0.0 {
        let scale = (200.0 * err / resasc).powf(1.5);
        err = if scale < 1.0 { resasc * scale } else { resasc };
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    err
}

fn gauss_kronrod_21<F>(f: &mut F, lo: f64, hi: f64) -> Result<Panel>
where
    F: FnMut(f64) -> Result<f64>,
{
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let mut eval = |t: f64| -> Result<f64> {
        let v = f(t)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Domain(format!("non-finite integrand value {v} at {t}")))
        }
    };

    let fc = eval(center)?;
    let mut res_k = WGK[10] * fc;
    let mut res_g = 0.0;
    let mut resabs = WGK[10] * fc.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];

    for j in 0..5 {
        let jtw = 2 * j + 1;
        let dx = half * XGK[jtw];
        let f1 = eval(center - dx)?;
        let f2 = eval(center + dx)?;
        fv1[jtw] = f1;
        fv2[jtw] = f2;
        res_g += WG[j] * (f1 + f2);
        res_k += WGK[jtw] * (f1 + f2);
        resabs += WGK[jtw] * (f1.abs() + f2.abs());
    }
    for j in 0..5 {
        let jtwm1 = 2 * j;
        let dx = half * XGK[jtwm1];
        let f1 = eval(center - dx)?;
        let f2 = eval(center + dx)?;
        fv1[jtwm1] = f1;
        fv2[jtwm1] = f2;
        res_k += WGK[jtwm1] * (f1 + f2);
        resabs += WGK[jtwm1] * (f1.abs() + f2.abs());
    }

    let mean = 0.5 * res_k;
    let mut resasc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        resasc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }

    let width = half.abs();
    let value = res_k * half;
    let resabs = resabs * width;
    let resasc = resasc * width;
    let error = rescale_error((res_k - res_g) * half, resabs, resasc);
    let min_width = 64.0 * f64::EPSILON * lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE);
    Ok(Panel {
        lo,
        hi,
        value,
        error,
        resabs,
        splittable: (hi - lo) > min_width,
    })
}

/// Adaptive integration of a fallible integrand over `[lo, hi]`, with the
/// initial panels split at `breakpoints` (points outside the open interval are
/// ignored).
pub fn integrate_with<F>(
    mut f: F,
    interval: Interval,
    breakpoints: &[f64],
    opts: &QuadOptions,
) -> Result<QuadratureResult>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(opts.rel_tol >= 0.0 && opts.abs_tol >= 0.0) || (opts.rel_tol == 0.0 && opts.abs_tol == 0.0)
    {
        return Err(Error::InvalidParameter(format!(
            "quadrature tolerances must be nonnegative and not both zero (abs {}, rel {})",
            opts.abs_tol, opts.rel_tol
        )));
    }

    let mut cuts: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|b| *b > interval.lo && *b < interval.hi)
        .collect();
    cuts.push(interval.lo);
    cuts.push(interval.hi);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let mut panels = Vec::with_capacity(64);
    for w in cuts.windows(2) {
        panels.push(gauss_kronrod_21(&mut f, w[0], w[1])?);
    }
    let mut evaluations = 21 * panels.len();

    loop {
        let value: f64 = panels.iter().map(|p| p.value).sum();
        let error: f64 = panels.iter().map(|p| p.error).sum();
        let resabs: f64 = panels.iter().map(|p| p.resabs).sum();
        let target = opts
            .abs_tol
            .max(opts.rel_tol * value.abs())
            .max(200.0 * f64::EPSILON * resabs);
        if error <= target {
            return Ok(finish(panels, evaluations));
        }

        let worst = panels
            .iter()
            .enumerate()
            .filter(|(_, p)| p.splittable)
            .max_by(|(_, a), (_, b)| a.error.total_cmp(&b.error))
            .map(|(i, _)| i);
        let Some(worst) = worst else {
            return Err(Error::Accuracy {
                estimate: value,
                error,
                panels: panels.len(),
            });
        };
        if panels.len() >= opts.max_panels {
            return Err(Error::Accuracy {
                estimate: value,
                error,
                panels: panels.len(),
            });
        }

        let p = panels.swap_remove(worst);
        let mid = 0.5 * (p.lo + p.hi);
        panels.push(gauss_kronrod_21(&mut f, p.lo, mid)?);
        panels.push(gauss_kronrod_21(&mut f, mid, p.hi)?);
        evaluations += 42;
    }
}

fn finish(mut panels: Vec<Panel>, evaluations: usize) -> QuadratureResult {
    // fixed summation order, independent of refinement history
    panels.sort_by(|a, b| a.lo.total_cmp(&b.lo));
    QuadratureResult {
        value: panels.iter().map(|p| p.value).sum(),
        abs_error_estimate: panels.iter().map(|p| p.error).sum(),
        evaluations,
    }
}

/// Integrates `f` over `interval` to within `tol` (absolute or relative,
/// whichever is looser).
pub fn integrate<F>(f: F, interval: Interval, tol: f64) -> Result<QuadratureResult>
where
    F: Fn(f64) -> f64,
{
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    let opts = QuadOptions {
        abs_tol: tol,
        rel_tol: tol,
        max_panels: 4000,
    };
    integrate_with(|t| Ok(f(t)), interval, &[], &opts)
}

/// `log ∫_interval exp(beta * g(t)) dt`, evaluated as
/// `beta * shift + log ∫ exp(beta * (g - shift))`.
///
/// `shift` should be the supremum of `g` on the interval (or close to it) and
/// `breakpoints` should contain the location of every interior peak.
pub fn log_integral_exp<G>(
    g: G,
    beta: f64,
    interval: Interval,
    shift: f64,
    breakpoints: &[f64],
    opts: &QuadOptions,
) -> Result<PeakedIntegralResult>
where
    G: Fn(f64) -> Result<f64>,
{
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "inverse temperature must be finite and nonnegative, got {beta}"
        )));
    }
    if !shift.is_finite() {
        return Err(Error::Domain(format!("non-finite shift {shift}")));
    }
    let raw = integrate_with(
        |t| Ok((beta * (g(t)? - shift)).exp()),
        interval,
        breakpoints,
        opts,
    )?;
    if !(raw.value > 0.0) {
        return Err(Error::Domain(format!(
            "shifted exponential integral underflowed on [{}, {}]",
            interval.lo, interval.hi
        )));
    }
    Ok(PeakedIntegralResult {
        log_value: beta * shift + raw.value.ln(),
        shift,
        raw,
    })
}

/// Log of the leading eigenvalue, `log ∫ exp(beta * F(a)) da`, with panels
/// pre-split at every local maximum of `F`.
pub fn log_partition(
    family: &PotentialFamily,
    beta: f64,
    opts: &QuadOptions,
) -> Result<PeakedIntegralResult> {
    let landscape = family.landscape()?;
    let peaks: Vec<f64> = landscape.candidates.iter().map(|c| c.location).collect();
    log_integral_exp(
        |a| family.summed(a).map(|e| e.value),
        beta,
        family.domain(),
        landscape.max_value,
        &peaks,
        opts,
    )
}

/// `log ∫_box exp(beta * F)` for a sub-interval of the domain, shifted by the
/// supremum of `F` on the box.
pub fn log_partition_on(
    family: &PotentialFamily,
    beta: f64,
    sub: Interval,
    opts: &QuadOptions,
) -> Result<PeakedIntegralResult> {
    family.domain().check_contains(&sub)?;
    let landscape = family.landscape()?;
    let sup = landscape.sup_on(family, sub)?;
    let mut cuts: Vec<f64> = landscape
        .candidates
        .iter()
        .map(|c| c.location)
        .filter(|x| *x > sub.lo && *x < sub.hi)
        .collect();
    cuts.push(sup.location);
    log_integral_exp(
        |a| family.summed(a).map(|e| e.value),
        beta,
        sub,
        sup.value,
        &cuts,
        opts,
    )
}

/// Leading Laplace term `log( exp(beta F) * sqrt(-2π / (beta F'')) )` at an
/// interior non-degenerate maximum.
pub fn laplace_approx(f_at_peak: f64, f2_at_peak: f64, beta: f64) -> Result<f64> {
    if !(f2_at_peak < 0.0) {
        return Err(Error::NonConcavePeak(f2_at_peak));
    }
    if !(beta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "Laplace asymptotics need beta > 0, got {beta}"
        )));
    }
    Ok(beta * f_at_peak + 0.5 * (-2.0 * std::f64::consts::PI / (beta * f2_at_peak)).ln())
}
