mod support;

use approx::assert_relative_eq;
use num_complex::Complex64;
use polarosc_core::atomic::{
    circular_split, optical_response, self_rotation_angle, small_signal_gain, steady_state,
    AtomicParams, DriveField,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::oracles::{indices_from_intensities, integrate_to_steady_state, XSystem};

fn compare_to_ode(params: &AtomicParams, drive: &DriveField) -> f64 {
    let x = XSystem {
        gamma_big: params.gamma_big,
        gamma_small: params.gamma_small,
        detuning: params.detuning,
        omega_r: drive.omega_r,
        omega_l: drive.omega_l,
    };
    let reference = integrate_to_steady_state(&x, 0.05, 1e-12, 5_000_000).expect("ODE settles");
    let rho = steady_state(params, drive).unwrap();
    let mut worst: f64 = 0.0;
    for (a, row) in reference.iter().enumerate() {
        for (b, value) in row.iter().enumerate() {
            worst = worst.max((rho.get(a, b) - value).norm());
        }
    }
    worst
}

fn random_draw(rng: &mut ChaCha8Rng) -> (AtomicParams, DriveField) {
    let params = AtomicParams::new(
        rng.random_range(0.5..2.0),
        rng.random_range(0.0..0.5),
        rng.random_range(-1.5..1.5),
        1.0,
        1.0,
        rng.random_range(1.0..100.0),
    )
    .unwrap();
    let omega = |rng: &mut ChaCha8Rng| {
        Complex64::from_polar(rng.random_range(0.15..1.5), rng.random_range(-3.0..3.0))
    };
    let drive = DriveField::new(omega(rng), omega(rng));
    (params, drive)
}

#[test]
fn reference_point_matches_time_integration() {
    let params = AtomicParams::new(1.0, 0.1, 0.11, 1.0, 1.0, 1.0).unwrap();
    let drive = DriveField::new(Complex64::new(0.3, 0.0), Complex64::new(0.1, 0.0));
    assert!(compare_to_ode(&params, &drive) < 1e-8);
}

#[test]
fn random_draws_match_time_integration() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..100 {
        let (params, drive) = random_draw(&mut rng);
        let err = compare_to_ode(&params, &drive);
        assert!(err < 1e-8, "{params:?} {drive:?}: {err}");
    }
}

#[test]
fn random_draws_match_intensity_form_of_indices() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..100 {
        let (params, drive) = random_draw(&mut rng);
        let (i_r, i_l) = drive.saturation_ratios(&params);
        let (n_r, n_l) =
            indices_from_intensities(params.gain_scale, params.detuning_ratio(), i_r, i_l);
        let got = optical_response(&params, &drive).unwrap();
        assert_relative_eq!(got.n_r_minus_1, n_r, max_relative = 1e-6);
        assert_relative_eq!(got.n_l_minus_1, n_l, max_relative = 1e-6);
    }
}

#[test]
fn reference_intensities_match_intensity_form() {
    let params = AtomicParams::from_detuning_ratio(0.1, 1.0).unwrap();
    let drive = DriveField::from_intensities(&params, 9.0, 1.0).unwrap();
    let (n_r, n_l) = indices_from_intensities(1.0, 0.1, 9.0, 1.0);
    let got = optical_response(&params, &drive).unwrap();
    assert_relative_eq!(got.n_r_minus_1, n_r, max_relative = 1e-6);
    assert_relative_eq!(got.n_l_minus_1, n_l, max_relative = 1e-6);
}

#[test]
fn steady_states_are_physical() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..1000 {
        let (params, drive) = random_draw(&mut rng);
        let rho = steady_state(&params, &drive).unwrap();
        assert!(rho.hermiticity_defect() < 1e-12);
        assert!((rho.trace() - 1.0).norm() < 1e-10);
        for k in 0..4 {
            assert!(rho.get(k, k).im.abs() < 1e-12);
            let p = rho.population(k);
            assert!((-1e-10..=1.0 + 1e-10).contains(&p), "{p}");
        }
    }
}

fn rotation_via_indices(delta: f64, s: f64, eps: f64) -> f64 {
    let params = AtomicParams::from_detuning_ratio(delta, 1.0).unwrap();
    let (i_r, i_l) = circular_split(s, eps);
    let drive = DriveField::from_intensities(&params, i_r, i_l).unwrap();
    let r = optical_response(&params, &drive).unwrap();
    -0.5 * (r.n_r_minus_1 - r.n_l_minus_1)
}

proptest! {
    #[test]
    fn rotation_formula_equals_index_route(delta in -2.0f64..2.0, s in 0.1f64..50.0, eps in -0.78f64..0.78) {
        let direct = self_rotation_angle(&AtomicParams::from_detuning_ratio(delta, 1.0).unwrap(), s, eps);
        let via = rotation_via_indices(delta, s, eps);
        prop_assert!((direct - via).abs() <= 1e-12 * direct.abs().max(1.0), "{direct} {via}");
    }

    #[test]
    fn rotation_is_odd(delta in -2.0f64..2.0, s in 0.0f64..50.0, eps in -0.78f64..0.78, c in 1.0f64..200.0) {
        let p = AtomicParams::from_detuning_ratio(delta, c).unwrap();
        prop_assert_eq!(self_rotation_angle(&p, s, -eps), -self_rotation_angle(&p, s, eps));
        let q = AtomicParams::from_detuning_ratio(-delta, c).unwrap();
        prop_assert_eq!(self_rotation_angle(&q, s, eps), -self_rotation_angle(&p, s, eps));
    }

    #[test]
    fn birefringence_is_odd_under_component_swap(
        a in 0.1f64..1.5, b in 0.1f64..1.5, delta in -1.0f64..1.0,
    ) {
        let p = AtomicParams::new(1.0, 0.2, delta, 1.0, 1.0, 10.0).unwrap();
        let fwd = optical_response(&p, &DriveField::new(Complex64::new(a, 0.0), Complex64::new(b, 0.0))).unwrap();
        let rev = optical_response(&p, &DriveField::new(Complex64::new(b, 0.0), Complex64::new(a, 0.0))).unwrap();
        let d1 = fwd.n_r_minus_1 - fwd.n_l_minus_1;
        let d2 = rev.n_r_minus_1 - rev.n_l_minus_1;
        prop_assert!((d1 + d2).abs() <= 1e-12 * d1.abs().max(1e-3));
    }
}

#[test]
fn equal_intensities_give_no_birefringence() {
    let p = AtomicParams::new(1.0, 0.1, 0.4, 1.0, 1.0, 5.0).unwrap();
    let r = optical_response(
        &p,
        &DriveField::new(Complex64::new(0.7, 0.0), Complex64::new(0.0, 0.7)),
    )
    .unwrap();
    assert!((r.n_r_minus_1 - r.n_l_minus_1).abs() < 1e-12);
}

#[test]
fn slope_matches_finite_differences_on_grid() {
    for delta in [-1.0, -0.3, -0.05, 0.05, 0.1, 0.5, 2.0] {
        for s in [0.0, 0.5, 3.0, 10.0, 40.0] {
            let p = AtomicParams::from_detuning_ratio(delta, 7.0).unwrap();
            let h = 1e-6;
            let fd = (self_rotation_angle(&p, s, h) - self_rotation_angle(&p, s, -h)) / (2.0 * h);
            assert_relative_eq!(small_signal_gain(&p, s), fd, max_relative = 1e-6);
        }
    }
}
