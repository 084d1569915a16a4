use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tncode::experiments::{point_seed, Experiment};
use tncode::holographic::build_code;
use tncode::threshold::{fit_threshold, objective, poly_eval, FitOptions, FitRecord};

fn synthetic(p_th: f64, nu: f64, f: &[f64], ns: &[(usize, usize)], ps: &[f64]) -> Vec<FitRecord> {
    let mut out = Vec::new();
    for &(radius, n) in ns {
        for &p in ps {
            let x = (p - p_th) * (n as f64).powf(1.0 / nu);
            out.push(FitRecord {
                radius,
                n,
                p,
                p_fail: poly_eval(f, x),
                stderr: 0.01,
                samples: 1000,
            });
        }
    }
    out
}

#[test]
fn noiseless_recovery_over_random_configurations() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..10 {
        let f = [
            rng.random_range(0.2..0.4),
            rng.random_range(0.5..1.5),
            rng.random_range(-0.5..0.5),
        ];
        let lo = rng.random_range(0.05..0.07);
        let ps: Vec<f64> = (0..10).map(|i| lo + 0.0055 * i as f64).collect();
        let recs = synthetic(0.09, 3.0, &f, &[(2, 42), (3, 203), (4, 973)], &ps);
        let fit = fit_threshold(&recs, &FitOptions::default()).unwrap();
        assert!((fit.p_th - 0.09).abs() < 1e-4, "{f:?}: {}", fit.p_th);
        assert!((fit.nu - 3.0).abs() < 1e-2, "{f:?}: {}", fit.nu);
        assert!(fit.history.windows(2).all(|w| w[1] <= w[0]));
        assert!(poly_eval(&fit.f_coeffs, 0.0) > 0.0 && poly_eval(&fit.f_coeffs, 0.0) <= 0.75);
    }
}

#[test]
fn explicit_reference_radius() {
    let ps: Vec<f64> = (0..8).map(|i| 0.07 + 0.006 * i as f64).collect();
    let recs = synthetic(
        0.1,
        2.5,
        &[0.3, 1.0, 0.2],
        &[(2, 42), (3, 203), (4, 973)],
        &ps,
    );
    let opts = FitOptions {
        reference: Some(3),
        ..Default::default()
    };
    let fit = fit_threshold(&recs, &opts).unwrap();
    assert_eq!(fit.reference, 3);
    assert!((fit.p_th - 0.1).abs() < 1e-4 && (fit.nu - 2.5).abs() < 1e-2);
    assert!(fit_threshold(
        &recs,
        &FitOptions {
            reference: Some(7),
            ..Default::default()
        }
    )
    .is_err());
}

#[test]
fn collapse_on_small_codes_beats_perturbed_parameters() {
    let ps: Vec<f64> = (0..8).map(|i| 0.06 + 0.01 * i as f64).collect();
    let mut recs = Vec::new();
    for r in 1..=3 {
        let net = build_code(r).unwrap();
        let ex = Experiment::new(&net).unwrap();
        for &p in &ps {
            let res = ex
                .estimate_failure_coset(&[0], p, 300, point_seed(9, r, p))
                .unwrap();
            recs.push(FitRecord::from_result(&res));
        }
    }
    let fit = fit_threshold(&recs, &FitOptions::default()).unwrap();
    let at = |p: f64, nu: f64| objective(&recs, fit.reference, p, nu).unwrap();
    let best = at(fit.p_th, fit.nu);
    assert!((best - fit.residual).abs() < 1e-9 * best.max(1.0));
    for (p, nu) in [
        (fit.p_th + 0.02, fit.nu),
        (fit.p_th - 0.02, fit.nu),
        (fit.p_th, fit.nu + 1.0),
        (fit.p_th, fit.nu - 1.0),
    ] {
        assert!(at(p, nu) > best, "({p}, {nu})");
    }
}
