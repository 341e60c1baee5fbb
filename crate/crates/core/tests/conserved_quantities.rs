use dnls_core::conserved::{action, classify, d_matrix, energy, gss_classify, mass, momentum, n_of_h, Verdict};
use dnls_core::soliton::soliton_profile;
use dnls_core::{ComplexField, Grid, Params, Real, C64};

fn resampled_energy(p: &Params, n: usize) -> Real {
    let g = Grid::for_decay(p.h(), n).unwrap();
    energy(&soliton_profile(p, g).unwrap(), &p.equation)
}

#[test]
fn energy_converges_under_refinement() {
    for p in [Params::dnls(1.0, 1.0, 0.5), Params::gdnls(2.0, 1.0, -1.0)] {
        let coarse = resampled_energy(&p, 1024);
        let fine = resampled_energy(&p, 2048);
        assert!((coarse - fine).abs() < 1e-8 * fine.abs().max(1.0), "{coarse} vs {fine}");
    }
}

#[test]
fn mass_of_sech_soliton() {
    let p = Params::dnls(0.0, 0.25, 0.0);
    let g = Grid::for_decay(p.h(), 1024).unwrap();
    let phi = soliton_profile(&p, g).unwrap();
    assert!((mass(&phi) - std::f64::consts::PI).abs() < 1e-6);
    // phase slope -|phi|^2/4 gives P = int Phi^4 / 8 = int 4 sech^2 / 8 = 1
    assert!((momentum(&phi) - 1.0).abs() < 1e-6, "P = {}", momentum(&phi));
}

#[test]
fn action_is_critical_at_soliton() {
    let p = Params::dnls(1.0, 1.0, 0.7);
    let g = Grid::for_decay(p.h(), 2048).unwrap();
    let phi = soliton_profile(&p, g).unwrap();
    let bump = ComplexField::from_fn(g, |x| C64::new(1.0, 0.5 * x) * (-(x - 0.3) * (x - 0.3)).exp());
    let eps = 1e-4;
    let s = |e: Real| action(&phi.add(&bump.scale(C64::new(e, 0.0))), &p.equation, p.omega, p.c);
    let derivative = (s(eps) - s(-eps)) / (2.0 * eps);
    assert!(derivative.abs() < 1e-6, "dS = {derivative}");
    // a non-critical direction check: the second variation is not zero
    assert!((s(eps) + s(-eps) - 2.0 * s(0.0)).abs() > 1e-12);
}

#[test]
fn d_matrix_is_symmetric() {
    for p in [Params::dnls(1.0, 1.0, 0.5), Params::gdnls(2.0, 1.0, 1.0), Params::gdnls(0.5, 1.0, 0.0)] {
        let g = Grid::for_decay(p.h(), 1024).unwrap();
        let d = d_matrix(&p, g, None).unwrap();
        assert!(d.asymmetry() < 1e-4, "{p:?}: asymmetry {}", d.asymmetry());
        assert!(d.richardson_gap < 1e-4);
    }
}

#[test]
fn p_count_for_power_nonlinearity() {
    let g2 = |p: &Params| Grid::for_decay(p.h(), 1024).unwrap();
    let s2 = Params::gdnls(2.0, 1.0, 1.0);
    assert_eq!(d_matrix(&s2, g2(&s2), None).unwrap().p_count, 0);
    let half = Params::gdnls(0.5, 1.0, 0.0);
    assert_eq!(d_matrix(&half, g2(&half), None).unwrap().p_count, 1);
}

#[test]
fn hessian_counts_are_resolution_stable() {
    let p = Params::gdnls(1.5, 1.0, 0.3);
    let coarse = n_of_h(&p, Grid::for_decay(p.h(), 512).unwrap()).unwrap();
    let fine = n_of_h(&p, Grid::for_decay(p.h(), 1024).unwrap()).unwrap();
    assert_eq!(coarse.n_negative, 1);
    assert_eq!(fine.n_negative, 1);
    assert_eq!(coarse.near_zero.len(), 2);
    assert_eq!(fine.near_zero.len(), 2);
}

#[test]
fn classification_respects_count_inequality() {
    for p in [
        Params::dnls(0.0, 1.0, 0.5),
        Params::dnls(1.0, 1.0, 1.8),
        Params::dnls(1.0, 2.0, -2.2),
        Params::gdnls(2.0, 1.0, -1.0),
    ] {
        let g = Grid::for_decay(p.h(), 1024).unwrap();
        let r = classify(&p, g).unwrap();
        assert!(r.p_count <= r.n_count, "{p:?}: p {} n {}", r.p_count, r.n_count);
        assert_eq!(r.verdict, gss_classify(r.p_count, r.n_count, 1.0));
    }
}

#[test]
fn stable_partner_of_multi_runs() {
    let p = Params::dnls(1.0, 2.0, -2.2);
    let r = classify(&p, Grid::for_decay(p.h(), 1024).unwrap()).unwrap();
    assert_eq!(r.verdict, Verdict::Stable);
}
