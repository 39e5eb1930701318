mod common;

use proptest::prelude::*;

use common::*;
use xygibbs::equilibrium::{entropy, mean_f};
use xygibbs::optimization::{calibration_residual, find_maxima, laplace_log_partition};
use xygibbs::quadrature::{integrate_with, log_partition, QuadOptions};
use xygibbs::transfer::{
    apply_operator, eigen_residual, normalized_kernel_exponent, CylinderFunction, EigenData,
};
use xygibbs::{EventuallyConstantPoint, Interval, PotentialFamily};

fn families() -> Vec<PotentialFamily> {
    vec![
        PotentialFamily::example1(),
        PotentialFamily::polylog(3.0).unwrap(),
        PotentialFamily::polylog(2.5).unwrap(),
        PotentialFamily::zero(Interval::new(0.0, 1.0).unwrap()),
        symmetric_well(),
        asymmetric_well(),
    ]
}

fn opts() -> QuadOptions {
    QuadOptions::default()
}

fn point_strategy() -> impl Strategy<Value = (usize, Vec<f64>, f64)> {
    (0usize..6, prop::collection::vec(0.0f64..=1.0, 0..=5), 0.0f64..=1.0)
}

/// Maps unit-interval coordinates into the family's domain.
fn place(family: &PotentialFamily, prefix: &[f64], tail: f64) -> EventuallyConstantPoint {
    let d = family.domain();
    let to = |t: f64| (d.lo + t * d.width()).clamp(d.lo, d.hi);
    EventuallyConstantPoint::new(prefix.iter().map(|&t| to(t)).collect(), to(tail))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn tails_telescope_and_match_summed((k, prefix, t) in point_strategy(), j in 0usize..40) {
        let family = &families()[k];
        let x = place(family, &prefix, t);
        let a = x.tail;
        let here = family.tail(j, a).unwrap();
        let next = family.tail(j + 1, a).unwrap();
        let f = family.factor(j + 1, a).unwrap();
        prop_assert!((here.value - next.value - f).abs() <= 2.0 * (here.error + next.error) + 1e-15);
        let whole = family.evaluate(&EventuallyConstantPoint::constant(a)).unwrap();
        let summed = family.summed(a).unwrap();
        prop_assert!((whole.value - summed.value).abs() <= whole.error + summed.error + 1e-15);
    }

    #[test]
    fn eigen_relation_at_random_points((k, prefix, t) in point_strategy(), b in 0usize..4) {
        let family = &families()[k];
        let beta = [0.5, 1.0, 2.0, 5.0][b];
        let x = place(family, &prefix, t);
        prop_assert!(eigen_residual(family, beta, &x, &opts()).unwrap() <= 1e-6);
    }

    #[test]
    fn calibration_at_random_points((k, prefix, t) in point_strategy()) {
        let family = &families()[k];
        let x = place(family, &prefix, t);
        prop_assert!(calibration_residual(family, &x).unwrap().residual <= 1e-8);
    }

    #[test]
    fn log_partition_shifts_with_constants(k in 0usize..6, c in -3.0f64..3.0, beta in 0.0f64..200.0) {
        let family = &families()[k];
        let base = log_partition(family, beta, &opts()).unwrap().log_value;
        let shifted = log_partition(&family.with_offset(c), beta, &opts()).unwrap().log_value;
        prop_assert!((shifted - base - beta * c).abs() <= 1e-10 * (1.0 + beta * c.abs()).max(1.0));
    }
}

#[test]
fn log_lambda_is_convex_in_beta() {
    let betas: Vec<f64> = (0..=40).map(|k| 0.5 * k as f64).collect();
    for family in families() {
        let logs: Vec<f64> = betas
            .iter()
            .map(|&b| log_partition(&family, b, &opts()).unwrap().log_value)
            .collect();
        for w in logs.windows(3) {
            assert!(w[0] - 2.0 * w[1] + w[2] >= -1e-8, "{}", family.name());
        }
    }
}

#[test]
fn densities_are_normalized() {
    for family in families() {
        let peaks: Vec<f64> = family.landscape().unwrap().candidates.iter().map(|c| c.location).collect();
        for beta in [0.0, 1.0, 10.0, 100.0] {
            let eigen = EigenData::compute(&family, beta, &opts()).unwrap();
            let total = integrate_with(|a| eigen.density(&family, a), family.domain(), &peaks, &opts())
                .unwrap()
                .value;
            assert!((total - 1.0).abs() <= 1e-8, "{} at {beta}: {total}", family.name());
        }
    }
}

#[test]
fn normalized_operator_depends_on_first_coordinate_only() {
    for family in families() {
        let d = family.domain();
        let mid = 0.5 * (d.lo + d.hi);
        let eigen = EigenData::compute(&family, 2.0, &opts()).unwrap();
        let x = EventuallyConstantPoint::new(vec![mid, d.lo], d.hi);
        let y = EventuallyConstantPoint::new(vec![mid, d.hi, mid], d.lo);
        let total = |p: &EventuallyConstantPoint| {
            integrate_with(
                |a| Ok(normalized_kernel_exponent(&family, &eigen, a, p)?.exp()),
                d,
                &[],
                &opts(),
            )
            .unwrap()
            .value
        };
        let (tx, ty) = (total(&x), total(&y));
        assert!((tx.ln() - ty.ln()).abs() <= 1e-8, "{}", family.name());
        assert!((tx - 1.0).abs() <= 1e-8, "{}", family.name());
    }
}

#[test]
fn operator_on_constants_for_zero_family() {
    let z = PotentialFamily::zero(Interval::new(0.0, 1.0).unwrap());
    let x = EventuallyConstantPoint::new(vec![0.9], 0.1);
    let one = apply_operator(&z, 2.0, &CylinderFunction::constant(1.0), &x, &opts()).unwrap();
    assert!((one.value() - 1.0).abs() < 1e-14);
}

#[test]
fn entropy_bounded_and_energy_monotone() {
    let betas = [0.0, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0];
    for family in families() {
        let log_width = family.domain().width().ln();
        let mut prev = f64::NEG_INFINITY;
        for beta in betas {
            assert!(entropy(&family, beta, &opts()).unwrap() <= log_width + 1e-8);
            let m = mean_f(&family, beta, &opts()).unwrap();
            assert!(m >= prev - 1e-8, "{} at {beta}", family.name());
            prev = m;
        }
    }
}

#[test]
fn laplace_relative_error_is_order_one_over_beta_for_a_non_gaussian_peak() {
    // F = -a²/(1 - a²) has a nonzero quartic term, so the leading correction
    // to the Laplace term is visible
    let family = PotentialFamily::example1();
    let report = find_maxima(&family, 1e-12).unwrap();
    let errors: Vec<f64> = [1e2, 1e3, 1e4]
        .iter()
        .map(|&beta| {
            let quad = log_partition(&family, beta, &opts()).unwrap().log_value;
            (quad - laplace_log_partition(&report, beta).unwrap()).exp_m1().abs()
        })
        .collect();
    for w in errors.windows(2) {
        let factor = w[0] / w[1];
        assert!((5.0..=20.0).contains(&factor), "{errors:?}");
    }
}

#[test]
fn laplace_agrees_with_quadrature_for_two_peaks() {
    let family = asymmetric_well();
    let report = find_maxima(&family, 1e-12).unwrap();
    let quad = log_partition(&family, 1e4, &opts()).unwrap().log_value;
    let asym = laplace_log_partition(&report, 1e4).unwrap();
    assert!((quad - asym).abs() < 1e-3);
}
