use dnls_core::conserved::mass;
use dnls_core::params::Equation;
use dnls_core::soliton::{multi_profile, soliton_profile, stationary_residual, traveling_soliton, v_star};
use dnls_core::{Grid, ParamError, Params, Real, C64};
use proptest::prelude::*;

#[test]
fn admissibility_examples() {
    assert!(Params::dnls(0.0, 1.0, 1.9).validate().is_ok());
    // gamma = 0 needs a negative speed
    let p = Params::dnls(-3.0 / 16.0, 1.0, 0.0);
    assert_eq!(p.gamma(), Some(0.0));
    assert!(matches!(p.validate(), Err(ParamError::SpeedOutOfRange { .. })));
    assert!(Params::dnls(-3.0 / 16.0, 1.0, -0.5).validate().is_ok());
    assert!(Params::dnls(0.0, 1.0, 3.0).validate().is_err());
    assert!(Params::gdnls(2.0, 1.0, 2.0).validate().is_err());
    assert!(Params::gdnls(-1.0, 1.0, 0.0).validate().is_err());
}

#[test]
fn closed_form_values() {
    let a = Params::dnls(0.0, 0.25, 0.0).amplitude_squared(0.0).unwrap();
    assert!((a - 2.0).abs() < 1e-14);
    let e = Params::dnls(0.0, 1.0, 2.0);
    assert!(e.is_endpoint());
    assert!((e.amplitude_squared(0.0).unwrap() - 8.0).abs() < 1e-14);
}

#[test]
fn sech_mass() {
    let p = Params::dnls(0.0, 0.25, 0.0);
    let g = Grid::for_decay(p.h(), 2048).unwrap();
    let phi = soliton_profile(&p, g).unwrap();
    assert!((mass(&phi) - std::f64::consts::PI).abs() < 1e-6);
}

#[test]
fn endpoint_is_limit_of_cosh_branch() {
    let e = Params::dnls(0.0, 1.0, 2.0);
    let near = Params::dnls(0.0, 1.0, 2.0 * (1.0 - 1e-6));
    assert!(!near.is_endpoint());
    for k in -200..=200 {
        let x = k as Real * 0.1;
        let d = (e.amplitude(x) - near.amplitude(x)).abs();
        assert!(d < 1e-4, "x = {x}: {d}");
    }
}

#[test]
fn residual_detects_wrong_profile() {
    let p = Params::dnls(1.0, 1.0, 0.5);
    let g = Grid::for_decay(p.h(), 2048).unwrap();
    let phi = soliton_profile(&p, g).unwrap();
    assert!(stationary_residual(&phi, &p).unwrap() < 1e-8);
    let half = phi.scale(C64::new(0.5, 0.0));
    assert!(stationary_residual(&half, &p).unwrap() > 1e-2);
}

#[test]
fn translation_and_phase_are_exact() {
    let p = Params::gdnls(1.5, 1.0, 0.3);
    let g = Grid::for_decay(p.h(), 1024).unwrap();
    let base = soliton_profile(&p, g).unwrap();
    let shift = 37;
    let moved = soliton_profile(&p.with_center(shift as Real * g.dx()).with_phase(0.8), g).unwrap();
    for j in 0..g.n() {
        let k = (j + g.n() - shift) % g.n();
        assert!((moved.values[j].norm() - base.values[k].norm()).abs() < 1e-12);
    }
    let rotated = soliton_profile(&p.with_phase(0.8), g).unwrap();
    let expected = base.scale(C64::from_polar(1.0, 0.8));
    assert!(rotated.sub(&expected).norm_inf() < 1e-12);
}

#[test]
fn traveling_soliton_tail_bound() {
    let p = Params::dnls(1.0, 1.0, 1.0).with_center(-4.0);
    let g = Grid::for_decay(p.h(), 1024).unwrap();
    let t = 3.0;
    let r = traveling_soliton(&p, g, t).unwrap();
    let center = p.x0 + p.c * t;
    let c = g
        .xs()
        .zip(&r.values)
        .map(|(x, v)| v.norm() * (0.5 * p.h() * g.wrap(x - center).abs()).exp())
        .fold(0.0, Real::max);
    assert!(c < 10.0, "fitted constant {c}");
}

#[test]
fn v_star_of_symmetric_pair() {
    let ps = [
        Params::dnls(0.0, 1.25, -2.0).with_center(-20.0),
        Params::dnls(0.0, 1.25, 2.0).with_center(20.0),
    ];
    assert!((v_star(&ps).unwrap() - 4.0 / 9.0).abs() < 1e-15);
    let g = Grid::new(200.0, 2048).unwrap();
    let m = multi_profile(&ps, g, 0.0).unwrap();
    assert_eq!(m.v_star, v_star(&ps));
    assert!(v_star(&ps[..1]).is_none());
}

fn dnls_point() -> impl Strategy<Value = Params> {
    (0.0..1.5f64, 0.5..2.0f64, -0.8..0.5f64).prop_map(|(b, w, r)| Params::dnls(b, w, 2.0 * w.sqrt() * r))
}

fn any_cosh_point() -> impl Strategy<Value = Params> {
    prop_oneof![
        (-3.0..3.0f64, 0.1..4.0f64, -0.95..0.95f64).prop_filter_map("admissible", |(b, w, r)| {
            let p = Params::dnls(b, w, 2.0 * w.sqrt() * r);
            p.validate().is_ok().then_some(p)
        }),
        (0.2..4.0f64, 0.1..4.0f64, -0.95..0.95f64).prop_map(|(s, w, r)| Params::gdnls(s, w, 2.0 * w.sqrt() * r)),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn amplitude_even_and_decreasing(p in any_cosh_point(), x in 0.0..20.0f64, dx in 0.01..5.0f64) {
        let a = p.amplitude_squared(x).unwrap();
        let b = p.amplitude_squared(-x).unwrap();
        prop_assert!((a - b).abs() <= 1e-13 * a.abs().max(1e-300));
        let further = p.amplitude_squared(x + dx).unwrap();
        prop_assert!(further <= a);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn sampled_profiles_are_stationary(p in dnls_point()) {
        let g = Grid::for_decay(p.h(), 2048).unwrap();
        let phi = soliton_profile(&p, g).unwrap();
        let r = stationary_residual(&phi, &p).unwrap();
        prop_assert!(r < 1e-8, "{:?}: residual {}", p, r);
        if let Equation::Dnls { .. } = p.equation {
            for (x, v) in g.xs().zip(&phi.values) {
                prop_assert!((v.norm() - p.amplitude(x)).abs() < 1e-12);
            }
        }
    }
}
