use std::sync::OnceLock;

use dnls_core::approx::{
    build_w, correction_decay, dressed_norm_decay, err_residual, nonlinear_m, quadratic_m, residual_decay,
};
use dnls_core::linearized::{assemble_l, eigen_spectrum, BlockOperator, FilterOptions, OperatorForm, UnstableMode};
use dnls_core::soliton::soliton_profile;
use dnls_core::{ComplexField, Grid, Params, Real, C64};

struct Case {
    op: BlockOperator,
    mode: UnstableMode,
}

fn case() -> &'static Case {
    static C: OnceLock<Case> = OnceLock::new();
    C.get_or_init(|| {
        let p = Params::dnls(1.0, 1.0, 1.8);
        let g = Grid::for_decay(p.h(), 2048).unwrap();
        let op = assemble_l(&p, g, OperatorForm::Plain).unwrap();
        let mode = eigen_spectrum(&op, FilterOptions::default()).unwrap().unstable.unwrap();
        Case { op, mode }
    })
}

fn probe(g: Grid) -> ComplexField {
    ComplexField::from_fn(g, |x| C64::new(1.0, 0.4 * x) * (-(x - 0.5).powi(2) / 2.0).exp())
}

#[test]
fn remainder_is_quadratic_to_leading_order() {
    for p in [Params::dnls(1.0, 1.0, 0.5), Params::gdnls(1.5, 1.0, 0.2)] {
        let g = Grid::for_decay(p.h(), 512).unwrap();
        let phi = soliton_profile(&p, g).unwrap();
        let v = probe(g);
        let q = quadratic_m(&v, &phi, &p.equation).unwrap();
        let gap = |eps: Real| {
            let m = nonlinear_m(&v.scale(C64::new(eps, 0.0)), &phi, &p.equation).unwrap();
            m.scale(C64::new(1.0 / (eps * eps), 0.0)).sub(&q).norm_l2()
        };
        // the cubic remainder halves with the amplitude
        let ratio = gap(1e-2) / gap(5e-3);
        assert!((1.8..=2.2).contains(&ratio), "{p:?}: ratio {ratio}");
    }
}

#[test]
fn remainder_commutes_with_phase_rotation() {
    let p = Params::dnls(1.0, 1.0, 0.5);
    let g = Grid::for_decay(p.h(), 512).unwrap();
    let phi = soliton_profile(&p, g).unwrap();
    let v = probe(g).scale(C64::new(0.3, 0.0));
    let rot = C64::from_polar(1.0, 1.1);
    let base = nonlinear_m(&v, &phi, &p.equation).unwrap();
    let rotated = nonlinear_m(&v.scale(rot), &phi.scale(rot), &p.equation).unwrap();
    assert!(rotated.sub(&base.scale(rot)).norm_inf() < 1e-10 * base.norm_inf().max(1.0));
}

#[test]
fn zero_amplitude_leaves_the_soliton() {
    let c = case();
    let w = build_w(&c.op, &c.mode, 0.0, 2).unwrap();
    assert_eq!(w.terms.len(), 1);
    for t in [0.0, 1.0, 3.0] {
        let r = err_residual(&w, t);
        assert!(r < 1e-8, "t = {t}: residual {r}");
    }
}

#[test]
fn dressed_norm_decays_at_rho() {
    let c = case();
    let rho = c.mode.rho();
    let w = build_w(&c.op, &c.mode, 1e-2, 1).unwrap();
    for s in [0, 1, 2] {
        let fit = dressed_norm_decay(&w, s, 2.0 / rho, 6.0 / rho, 9).unwrap();
        assert!((fit.rate - rho).abs() < 0.05 * rho, "H^{s}: rate {} vs {rho}", fit.rate);
    }
}

#[test]
fn second_order_correction_decays_twice_as_fast() {
    let c = case();
    let rho = c.mode.rho();
    let w = build_w(&c.op, &c.mode, 1.0, 2).unwrap();
    assert!(w.terms.iter().any(|t| t.k == 2));
    let fit = correction_decay(&w, 2.0 / rho, 6.0 / rho, 9).unwrap();
    assert!(fit.rate >= 1.9 * rho, "rate {} vs 2 rho {}", fit.rate, 2.0 * rho);
}

#[test]
fn second_order_improves_residual() {
    let c = case();
    let rho = c.mode.rho();
    let w1 = build_w(&c.op, &c.mode, 1.0, 1).unwrap();
    let w2 = build_w(&c.op, &c.mode, 1.0, 2).unwrap();
    let t = 5.0 / rho;
    assert!(err_residual(&w2, t) < 0.5 * err_residual(&w1, t));
    let fit = residual_decay(&w2, 2.0 / rho, 6.0 / rho, 9).unwrap();
    assert!(fit.rate > residual_decay(&w1, 2.0 / rho, 6.0 / rho, 9).unwrap().rate);
}

#[test]
fn correction_coefficients_are_localized() {
    let c = case();
    let w = build_w(&c.op, &c.mode, 1.0, 2).unwrap();
    let g = c.op.grid;
    let quarter = 0.25 * g.length();
    for term in w.terms.iter().filter(|t| t.k == 2) {
        for f in [&term.a, &term.b] {
            let total: Real = f.values.iter().map(|z| z.norm_sqr()).sum();
            let far: Real = g
                .xs()
                .zip(&f.values)
                .filter(|(x, _)| x.abs() > quarter)
                .map(|(_, z)| z.norm_sqr())
                .sum();
            assert!(far <= 1e-8 * total, "(k, j) = ({}, {}): tail fraction {}", term.k, term.j, far / total);
        }
    }
}

#[test]
fn unsupported_orders_and_forms_are_rejected() {
    let c = case();
    assert!(build_w(&c.op, &c.mode, 1.0, 3).is_err());
    assert!(build_w(&c.op, &c.mode, 1.0, 0).is_err());
    let p = c.op.params.unwrap();
    let tilde = assemble_l(&p, c.op.grid, OperatorForm::Tilde).unwrap();
    assert!(build_w(&tilde, &c.mode, 1.0, 1).is_err());
}
