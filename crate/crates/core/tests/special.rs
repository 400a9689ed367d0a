use std::f64::consts::PI;

use proptest::prelude::*;
use sucre::special::*;
use sucre_testkit::{integrate, integrate_to_infinity};

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * b.abs().max(1e-300)
}

#[test]
fn log_gamma_examples() {
    assert_eq!(log_gamma(1.0).unwrap(), 0.0);
    assert!(close(log_gamma(0.5).unwrap(), 0.5 * PI.ln(), 1e-14));
    assert!(close(log_gamma(10.0).unwrap(), 362_880f64.ln(), 1e-14));
    assert!(log_gamma(0.0).is_err());
    assert!(log_gamma(-1.5).is_err());
}

#[test]
fn gamma_ratio_examples() {
    assert!(close(gamma_ratio(1).unwrap(), PI.sqrt() / 2.0, 1e-13));
    assert!(close(gamma_ratio(2).unwrap(), 3.0 * PI.sqrt() / 4.0, 1e-13));
    let v = gamma_ratio(100).unwrap();
    assert!((v / 10.0 - 1.0).abs() < 0.002);
    assert!(gamma_ratio(0).is_err());
}

#[test]
fn gamma_ratio_normalized_increases_to_one() {
    let mut prev = 0.0;
    for m in 1..=1000 {
        let r = gamma_ratio(m).unwrap() / (m as f64).sqrt();
        assert!(r > prev && r < 1.0, "M={m}: {r}");
        prev = r;
    }
}

#[test]
fn half_integer_rejects_zero() {
    assert!(HalfInteger::new(0).is_err());
    let a = HalfInteger::new(5).unwrap();
    assert_eq!(a.value(), 2.5);
    assert!(!a.is_integer());
}

#[test]
fn lower_incomplete_gamma_examples() {
    let one = HalfInteger::from_integer(1).unwrap();
    let half = HalfInteger::new(1).unwrap();
    assert!(close(
        lower_incomplete_gamma(one, 1.0).unwrap(),
        1.0 - (-1.0f64).exp(),
        1e-14
    ));
    assert_eq!(lower_incomplete_gamma(half, 0.0).unwrap(), 0.0);
    assert!(lower_incomplete_gamma(half, -0.1).is_err());

    let a = HalfInteger::new(5).unwrap();
    let quad = integrate(|t| t.powf(1.5) * (-t).exp(), 0.0, 2.0, 0.0, 1e-12);
    assert!(close(lower_incomplete_gamma(a, 2.0).unwrap(), quad.value, 1e-9));
}

#[test]
fn lower_incomplete_gamma_saturates() {
    for twice in 1..=40 {
        let a = HalfInteger::new(twice).unwrap();
        let full = a.ln_gamma().exp();
        let v = lower_incomplete_gamma(a, 50.0).unwrap();
        // Γ(a, 50)/Γ(a) stays below 1e-9 up to a = 14
        if twice <= 28 {
            assert!((v - full).abs() <= 1e-9 * full, "a={}: {v} vs {full}", a.value());
        }
        let mut prev = 0.0;
        for i in 0..=100 {
            let x = i as f64 * 0.5;
            let g = lower_incomplete_gamma(a, x).unwrap();
            assert!(g >= prev);
            prev = g;
        }
    }
}

proptest! {
    #[test]
    fn incomplete_gamma_recurrence(twice in 1u32..60, x in 0.01f64..40.0) {
        let a = HalfInteger::new(twice).unwrap();
        let a1 = HalfInteger::new(twice + 2).unwrap();
        let lhs = lower_incomplete_gamma(a1, x).unwrap();
        let rhs = a.value() * lower_incomplete_gamma(a, x).unwrap() - x.powf(a.value()) * (-x).exp();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1e-300), "{} vs {}", lhs, rhs);
    }

    #[test]
    fn q_function_symmetry(x in -30.0f64..30.0) {
        prop_assert!((q_function(x) + q_function(-x) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn log_sum_matches_direct(vals in prop::collection::vec(-50.0f64..50.0, 1..20)) {
        let direct: f64 = vals.iter().sum();
        let terms = vals.iter().map(|&v| {
            let s = if v >= 0.0 { Sign::Plus } else { Sign::Minus };
            (s, v.abs().ln())
        });
        let got = log_sum_signed(terms).unwrap().value();
        let scale: f64 = vals.iter().map(|v| v.abs()).sum();
        prop_assert!((got - direct).abs() <= 1e-12 * scale.max(1.0));
    }
}

#[test]
fn q_function_examples() {
    assert_eq!(q_function(0.0), 0.5);
    assert_eq!(q_function(f64::INFINITY), 0.0);
    assert!(close(q_function(1.0), 0.158_655_253_931_457_05, 1e-12));
    let quad = integrate_to_infinity(|t| (-t * t / 2.0).exp() / (2.0 * PI).sqrt(), 1.0, 0.0, 1e-13);
    assert!(close(q_function(1.0), quad.value, 1e-11));
}

#[test]
fn log_sum_signed_examples() {
    match log_sum_signed([(Sign::Plus, 0.0), (Sign::Plus, 0.0)]).unwrap() {
        LogSum::Positive(l) => assert!(close(l, 2f64.ln(), 1e-15)),
        other => panic!("{other:?}"),
    }
    assert_eq!(
        log_sum_signed([(Sign::Plus, 1000.0), (Sign::Minus, 1000.0)]).unwrap(),
        LogSum::Zero
    );
    match log_sum_signed([(Sign::Plus, 700.0), (Sign::Plus, 699.0)]).unwrap() {
        LogSum::Positive(l) => assert!(close(l, 700.0 + (1.0 + (-1.0f64).exp()).ln(), 1e-15)),
        other => panic!("{other:?}"),
    }
    match log_sum_signed([(Sign::Minus, 7000.0), (Sign::Plus, 6990.0)]).unwrap() {
        LogSum::Negative(l) => assert!(close(l, 7000.0 + (1.0 - (-10.0f64).exp()).ln(), 1e-15)),
        other => panic!("{other:?}"),
    }
    assert!(log_sum_signed(std::iter::empty()).is_err());
    assert!(log_sum_signed([(Sign::Plus, f64::NAN)]).is_err());
}

#[test]
fn moment_integral_examples() {
    assert!(close(
        gaussian_moment_integral(0, 1.0, 0.0).unwrap(),
        PI.sqrt() / 2.0,
        1e-14
    ));
    assert!(close(gaussian_moment_integral(1, 1.0, 0.0).unwrap(), 0.5, 1e-14));
    assert!(gaussian_moment_integral(2, 0.0, 1.0).is_err());
    assert!(gaussian_moment_integral(2, -1.0, 1.0).is_err());
}

fn moment_quadrature(m: usize, a: f64, b: f64) -> f64 {
    let f = |x: f64| {
        let d = x * a - b;
        x.powi(m as i32) * (-d * d).exp()
    };
    // split at the peak so the integrand's bulk is well resolved
    let peak = ((b + (b * b + 2.0 * m as f64).sqrt()) / (2.0 * a)).max(0.0);
    let width = 10.0 / a;
    let lo = (peak - width).max(0.0);
    let hi = peak + width;
    let mut total = integrate(f, lo, hi, 0.0, 1e-13).value;
    if lo > 0.0 {
        total += integrate(f, 0.0, lo, 0.0, 1e-13).value;
    }
    total + integrate_to_infinity(f, hi, 0.0, 1e-13).value
}

#[test]
fn moment_integral_matches_quadrature_grid() {
    for m in 0..=10 {
        for &a in &[0.1, 1.0, 10.0] {
            for bi in -5..=5 {
                let b = bi as f64;
                let exact = moment_quadrature(m, a, b);
                let got = gaussian_moment_integral(m, a, b).unwrap();
                assert!(close(got, exact, 1e-8), "m={m} A={a} B={b}: {got} vs {exact}");
            }
        }
    }
    let exact = moment_quadrature(5, 2.0, -1.3);
    assert!(close(gaussian_moment_integral(5, 2.0, -1.3).unwrap(), exact, 1e-8));
}

#[test]
fn moment_integral_high_order_consistency() {
    // J_{m+1} relation from integration by parts:
    // 2A²·J_{m+1} = 2AB·J_m + m·J_{m-1}   (m ≥ 1)
    for &(a, b) in &[(0.3, 4.0), (0.3, -4.0), (1.0, 12.0), (0.05, -3.0), (2.0, -20.0)] {
        for &m in &[50usize, 200, 999] {
            let j = |k| ln_gaussian_moment_integral(k, a, b).unwrap();
            let (l0, l1, l2) = (j(m - 1), j(m), j(m + 1));
            let lhs = (2.0 * a * a).ln() + l2;
            let rhs_terms = [
                (
                    if b >= 0.0 { Sign::Plus } else { Sign::Minus },
                    (2.0 * a * b.abs()).ln() + l1,
                ),
                (Sign::Plus, (m as f64).ln() + l0),
            ];
            let rhs = match log_sum_signed(rhs_terms).unwrap() {
                LogSum::Positive(l) => l,
                other => panic!("{other:?}"),
            };
            assert!(
                (lhs - rhs).abs() < 1e-9 * lhs.abs().max(1.0),
                "A={a} B={b} m={m}: {lhs} vs {rhs}"
            );
        }
    }
}
