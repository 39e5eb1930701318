//! Shared fixtures and independent oracles for the integration tests.
#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use xygibbs::{EventuallyConstantPoint, Interval, PotentialFamily};

/// `-(a² - 1/4)²` on `[-1, 1]`.
pub fn symmetric_well() -> PotentialFamily {
    PotentialFamily::single(vec![-1.0 / 16.0, 0.0, 0.5, 0.0, -1.0], Interval::new(-1.0, 1.0).unwrap())
        .unwrap()
}

pub fn symmetric_well_f(a: f64) -> f64 {
    -(a * a - 0.25).powi(2)
}

/// `-(a² - 1/4)² (2 - a)` on `[-1, 1]`.
pub fn asymmetric_well() -> PotentialFamily {
    PotentialFamily::single(
        vec![-1.0 / 8.0, 1.0 / 16.0, 1.0, -0.5, -2.0, 1.0],
        Interval::new(-1.0, 1.0).unwrap(),
    )
    .unwrap()
}

pub fn asymmetric_well_f(a: f64) -> f64 {
    -(a * a - 0.25).powi(2) * (2.0 - a)
}

/// `F(a) = 1 + 1/(a² - 1)` for the geometric family.
pub fn example1_f(a: f64) -> f64 {
    1.0 + 1.0 / (a * a - 1.0)
}

/// Eventually constant point with up to `max_prefix` uniform coordinates.
pub fn random_point(rng: &mut ChaCha8Rng, domain: Interval, max_prefix: usize) -> EventuallyConstantPoint {
    let n = rng.gen_range(0..=max_prefix);
    let prefix = (0..n).map(|_| rng.gen_range(domain.lo..=domain.hi)).collect();
    EventuallyConstantPoint::new(prefix, rng.gen_range(domain.lo..=domain.hi))
}

/// ζ(3) from partial sums with an Euler–Maclaurin remainder, independent of
/// the library's polylogarithm.
pub fn zeta3() -> f64 {
    let n = 20_000usize;
    let head: f64 = (1..=n).rev().map(|i| (i as f64).powi(-3)).sum();
    let nf = n as f64;
    head + 0.5 * nf.powi(-2) - 0.5 * nf.powi(-3) + 0.25 * nf.powi(-4)
}

/// Composite Gauss–Legendre (10 points per panel) on `[lo, hi]` with `panels`
/// equal panels; a fixed rule kept separate from the adaptive integrator.
pub fn gauss_legendre<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, panels: usize) -> f64 {
    const X: [f64; 5] = [
        0.148_874_338_981_631_2,
        0.433_395_394_129_247_2,
        0.679_409_568_299_024_4,
        0.865_063_366_688_984_5,
        0.973_906_528_517_171_7,
    ];
    const W: [f64; 5] = [
        0.295_524_224_714_752_9,
        0.269_266_719_309_996_4,
        0.219_086_362_515_982_0,
        0.149_451_349_150_580_6,
        0.066_671_344_308_688_1,
    ];
    let h = (hi - lo) / panels as f64;
    let mut total = 0.0;
    for k in 0..panels {
        let c = lo + (k as f64 + 0.5) * h;
        let r = 0.5 * h;
        let mut s = 0.0;
        for (x, w) in X.iter().zip(W) {
            s += w * (f(c - r * x) + f(c + r * x));
        }
        total += s * r;
    }
    total
}
