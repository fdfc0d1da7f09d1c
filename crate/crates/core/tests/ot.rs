mod common;

use common::{fd_complex, flat, rel_l2, rng, smooth_signal, transport_lp};
use hvfwi::ot::*;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;

fn nodes(n: usize) -> Vec<f64> {
    (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
}

#[test]
fn quantile_integral_matches_linear_program() {
    let mut r = rng(7);
    for _ in 0..20 {
        let a: Vec<f64> = (0..16).map(|_| r.random_range(0.0..1.0)).collect();
        let b: Vec<f64> = (0..16).map(|_| r.random_range(0.0..1.0)).collect();
        let p = normalize_with_shift(&a, 0.0).unwrap();
        let q = normalize_with_shift(&b, 0.0).unwrap();
        let lp = transport_lp(&nodes(16), &p.masses(), &q.masses());
        let w2 = w2_distance_1d(&p, &q).unwrap();
        assert!((w2 - lp).abs() < 1e-8, "quantile {w2} vs LP {lp}");
    }
}

#[test]
fn translated_bump_costs_its_shift() {
    let n = 201;
    let h = 1.0 / (n - 1) as f64;
    let bump = |c: f64| -> Vec<f64> { nodes(n).iter().map(|x| (-((x - c) / 0.05).powi(2)).exp()).collect() };
    let p = normalize_with_shift(&bump(0.4), 0.0).unwrap();
    for s in [0.013, 0.05, 0.171] {
        let q = normalize_with_shift(&bump(0.4 + s), 0.0).unwrap();
        let w = w2_distance_1d(&p, &q).unwrap().sqrt();
        assert!((w - s).abs() <= h, "shift {s}: W2 {w}");
    }
}

#[test]
fn identical_complex_signals_have_zero_misfit() {
    let mut r = rng(3);
    let re = smooth_signal(&mut r, 40, 4);
    let im = smooth_signal(&mut r, 40, 4);
    let f: Vec<Complex64> = re.iter().zip(&im).map(|(a, b)| Complex64::new(*a, *b)).collect();
    let w = w2_misfit_complex(&f, &f, DEFAULT_BETA_MARGIN).unwrap();
    assert_eq!(w.value, 0.0);
    assert!(w.gradient.iter().all(|g| g.norm() < 1e-14));
    let (v, g) = l2_misfit_complex(&f, &f).unwrap();
    assert_eq!(v, 0.0);
    assert!(g.iter().all(|g| g.norm() == 0.0));
}

#[test]
fn real_pair_has_no_imaginary_part() {
    let mut r = rng(4);
    let a: Vec<Complex64> = smooth_signal(&mut r, 32, 3).into_iter().map(Complex64::from).collect();
    let b: Vec<Complex64> = smooth_signal(&mut r, 32, 3).into_iter().map(Complex64::from).collect();
    let w = w2_misfit_complex(&a, &b, DEFAULT_BETA_MARGIN).unwrap();
    let (v, _) = w2_misfit_real(
        &a.iter().map(|c| c.re).collect::<Vec<_>>(),
        &b.iter().map(|c| c.re).collect::<Vec<_>>(),
        DEFAULT_BETA_MARGIN,
    )
    .unwrap();
    assert_eq!(w.value, v);
    assert!(w.gradient.iter().all(|g| g.im == 0.0));
}

#[test]
fn w2_gradient_matches_finite_differences() {
    let mut r = rng(11);
    for _ in 0..5 {
        let sig = |r: &mut rand_chacha::ChaCha8Rng| -> Vec<Complex64> {
            let a = smooth_signal(r, 64, 5);
            let b = smooth_signal(r, 64, 5);
            a.into_iter().zip(b).map(|(x, y)| Complex64::new(x, y)).collect()
        };
        let f0 = sig(&mut r);
        let f1 = sig(&mut r);
        let eval = w2_misfit_complex(&f0, &f1, DEFAULT_BETA_MARGIN).unwrap();
        let fd = fd_complex(&f0, |f| w2_misfit_complex(f, &f1, DEFAULT_BETA_MARGIN).unwrap().value, 1e-7);
        let err = rel_l2(&flat(&eval.gradient), &flat(&fd));
        assert!(err < 1e-2, "relative error {err}");
    }
}

#[test]
fn l2_gradient_is_exact() {
    let mut r = rng(12);
    let f0: Vec<Complex64> =
        (0..30).map(|_| Complex64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0))).collect();
    let f1: Vec<Complex64> =
        (0..30).map(|_| Complex64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0))).collect();
    let (_, g) = l2_misfit_complex(&f0, &f1).unwrap();
    let fd = fd_complex(&f0, |f| l2_misfit_complex(f, &f1).unwrap().0, 1e-3);
    assert!(rel_l2(&flat(&g), &flat(&fd)) < 1e-8);
}

fn density(values: &[f64]) -> NormalizedDensity {
    normalize_with_shift(values, 0.0).unwrap()
}

proptest! {
    #[test]
    fn w2_is_symmetric(a in prop::collection::vec(0.01f64..1.0, 12), b in prop::collection::vec(0.01f64..1.0, 12)) {
        let (p, q) = (density(&a), density(&b));
        let d1 = w2_distance_1d(&p, &q).unwrap();
        let d2 = w2_distance_1d(&q, &p).unwrap();
        prop_assert!((d1 - d2).abs() <= 1e-12);
    }

    #[test]
    fn w2_triangle_inequality(
        a in prop::collection::vec(0.01f64..1.0, 12),
        b in prop::collection::vec(0.01f64..1.0, 12),
        c in prop::collection::vec(0.01f64..1.0, 12),
    ) {
        let (p, q, s) = (density(&a), density(&b), density(&c));
        let d = |x: &NormalizedDensity, y: &NormalizedDensity| w2_distance_1d(x, y).unwrap().sqrt();
        prop_assert!(d(&p, &s) <= d(&p, &q) + d(&q, &s) + 1e-10);
    }

    #[test]
    fn normalized_density_is_a_probability(f in prop::collection::vec(-3.0f64..3.0, 5..40), margin in 0.01f64..0.5) {
        let p = normalize_linear(&f, margin).unwrap();
        prop_assert!(p.pdf.iter().all(|&v| v >= 0.0));
        prop_assert!((p.cdf[p.len() - 1] - 1.0).abs() <= 1e-12);
        prop_assert!(p.cdf.windows(2).all(|w| w[1] >= w[0]));
        let amp = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let lo = f.iter().map(|v| v + p.shift_beta).fold(f64::INFINITY, f64::min);
        prop_assert!(lo >= margin * amp * (1.0 - 1e-12));
    }
}
