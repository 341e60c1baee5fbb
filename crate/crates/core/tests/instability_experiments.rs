use std::f64::consts::PI;

use dnls_core::experiments::{
    fit_multi, interaction_decay, modulation_distance, window_radius, Ball, EscapeConfig, Modulator,
};
use dnls_core::soliton::soliton_profile;
use dnls_core::{ComplexField, Grid, LabError, Params, Real, Spectral, C64};
use proptest::prelude::*;

fn base() -> (Params, Grid) {
    let p = Params::dnls(1.0, 1.0, 0.5);
    (p, Grid::for_decay(p.h(), 512).unwrap())
}

fn angle_gap(a: Real, b: Real) -> Real {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn exact_members_are_recovered(y in -6.0..6.0f64, theta in -3.0..3.0f64) {
        let (p, g) = base();
        let m = Modulator::new(&p, g).unwrap();
        let fit = m.fit(&m.member(y, theta)).unwrap();
        prop_assert!(fit.distance < 1e-8, "distance {}", fit.distance);
        prop_assert!((fit.y - y).abs() < 1e-6, "y {} vs {y}", fit.y);
        prop_assert!(angle_gap(fit.theta, theta) < 1e-6);
    }

    #[test]
    fn fit_is_symmetry_invariant(y in -4.0..4.0f64, theta in -3.0..3.0f64) {
        let (p, g) = base();
        let m = Modulator::new(&p, g).unwrap();
        let u = m.member(0.0, 0.0).add(&ComplexField::from_fn(g, |x| C64::new(0.05 * (-(x - 1.0).powi(2)).exp(), 0.0)));
        let moved = ComplexField {
            grid: g,
            values: Spectral::new(g)
                .shift(&u.values, y)
                .into_iter()
                .map(|z| z * C64::from_polar(1.0, theta))
                .collect(),
        };
        let a = m.fit(&u).unwrap();
        let b = m.fit(&moved).unwrap();
        prop_assert!((a.distance - b.distance).abs() < 1e-8);
        prop_assert!((b.y - a.y - y).abs() < 1e-5);
    }
}

#[test]
fn fit_never_loses_to_the_trivial_choice() {
    let (p, g) = base();
    let phi = soliton_profile(&p, g).unwrap();
    for k in 0..5 {
        let s = 0.3 * k as Real;
        let u = ComplexField::from_fn(g, |x| C64::new(1.0, s) * (-(x - s) * (x - s) / 2.0).exp());
        let fit = modulation_distance(&u, &p, None).unwrap();
        assert!(fit.distance <= u.sub(&phi).norm_l2() + 1e-12);
    }
}

#[test]
fn distant_bump_costs_its_own_norm() {
    let (p, g) = base();
    let phi = soliton_profile(&p, g).unwrap();
    let delta = 1e-3;
    let shape = ComplexField::from_fn(g, |x| C64::new((-(x - 25.0).powi(2)).exp(), 0.0));
    let bump = shape.scale(C64::new(delta / shape.norm_l2(), 0.0));
    let fit = modulation_distance(&phi.add(&bump), &p, None).unwrap();
    assert!(fit.distance >= 0.5 * delta && fit.distance <= delta * (1.0 + 1e-9), "{}", fit.distance);
    // on a ball around the soliton the bump is invisible
    let ball = Ball { center: 0.0, radius: 10.0 };
    let local = modulation_distance(&phi.add(&bump), &p, Some(ball)).unwrap();
    assert!(local.distance < 1e-8, "{}", local.distance);
}

#[test]
fn two_exact_members_fit_jointly() {
    let g = Grid::new(200.0, 2048).unwrap();
    let ps = [
        Params::dnls(0.0, 1.25, -2.0).with_center(-20.0),
        Params::dnls(0.0, 1.25, 2.0).with_center(20.0).with_phase(0.4),
    ];
    let mods: Vec<Modulator> = ps.iter().map(|p| Modulator::new(p, g).unwrap()).collect();
    let u = mods[0].member(-20.3, 0.1).add(&mods[1].member(20.2, 0.4));
    let balls: Vec<Ball> = ps
        .iter()
        .map(|p| Ball { center: p.x0, radius: window_radius(p) })
        .collect();
    let fit = fit_multi(&u, &mods, &balls).unwrap();
    assert!(!fit.overlapped);
    assert!(fit.distance < 1e-6, "{}", fit.distance);
    assert!((fit.components[0].y + 20.3).abs() < 1e-5);
    assert!((fit.components[1].y - 20.2).abs() < 1e-5);
}

#[test]
fn single_soliton_has_no_interaction() {
    let p = Params::dnls(0.0, 1.25, 2.0);
    let g = Grid::new(200.0, 2048).unwrap();
    let fit = interaction_decay(&[p], g, None, &[0.0, 1.0, 2.0]).unwrap();
    assert_eq!(fit.rate, Real::INFINITY);
    assert!(fit.samples.iter().all(|&(_, q)| q == 0.0));
}

#[test]
fn equal_speeds_are_rejected() {
    let g = Grid::new(200.0, 2048).unwrap();
    let ps = [
        Params::dnls(0.0, 1.0, 0.5).with_center(-20.0),
        Params::dnls(0.0, 1.5, 0.5).with_center(20.0),
    ];
    let err = interaction_decay(&ps, g, None, &[0.0, 1.0, 2.0]).unwrap_err();
    assert!(matches!(err, LabError::Separation(_)), "{err}");
}

#[test]
fn counter_propagating_pair_decouples_exponentially() {
    let g = Grid::new(200.0, 2048).unwrap();
    let ps = [
        Params::dnls(0.0, 1.25, -2.0).with_center(-5.0),
        Params::dnls(0.0, 1.25, 2.0).with_center(5.0),
    ];
    let times: Vec<Real> = (0..=8).map(|k| k as Real).collect();
    let fit = interaction_decay(&ps, g, None, &times).unwrap();
    assert!((fit.v_star - 4.0 / 9.0).abs() < 1e-12);
    assert!((fit.h_star - 1.0).abs() < 1e-12);
    assert!(fit.rate >= 0.9 * fit.bound(), "rate {} vs bound {}", fit.rate, fit.bound());
    assert!(fit.pairwise_constant.is_finite());
}

#[test]
fn halving_schedule() {
    let cfg = EscapeConfig::halving(1e-2, 5);
    assert_eq!(cfg.amplitudes.len(), 5);
    for w in cfg.amplitudes.windows(2) {
        assert!((w[1] - 0.5 * w[0]).abs() < 1e-18);
    }
}
