use std::sync::OnceLock;

use dnls_core::helmholtz::{apply_p, conjugate_prime};
use dnls_core::linearized::{
    apply_l_continuous, assemble_l, decay_fit, eigen_spectrum, pointwise_bound_constant, resolvent_residual,
    resolvent_solve, twist, y_of_t, BlockOperator, FilterOptions, OperatorForm, SpectrumReport,
};
use dnls_core::soliton::soliton_profile;
use dnls_core::{ComplexField, Grid, PairField, Params, Real, C64};

struct Case {
    params: Params,
    op: BlockOperator,
    spectrum: SpectrumReport,
}

fn case() -> &'static Case {
    static C: OnceLock<Case> = OnceLock::new();
    C.get_or_init(|| {
        let params = Params::gdnls(2.0, 1.0, -1.0);
        let grid = Grid::for_decay(params.h(), 512).unwrap();
        let op = assemble_l(&params, grid, OperatorForm::Plain).unwrap();
        let spectrum = eigen_spectrum(&op, FilterOptions::default()).unwrap();
        Case { params, op, spectrum }
    })
}

fn gaussian_pair(grid: Grid, center: Real) -> PairField {
    PairField {
        grid,
        plus: grid.xs().map(|x| C64::new((-(x - center).powi(2)).exp(), 0.0)).collect(),
        minus: grid.xs().map(|x| C64::new(0.0, 0.5 * (-(x + center).powi(2)).exp())).collect(),
    }
}

fn sup(v: &[C64]) -> Real {
    v.iter().map(|z| z.norm()).fold(0.0, Real::max)
}

#[test]
fn eigenpair_residual() {
    let c = case();
    let mode = c.spectrum.unstable.as_ref().unwrap();
    let lz = c.op.apply_pair(&mode.z).to_stacked();
    let z = mode.z.to_stacked();
    let r = lz.iter().zip(&z).map(|(a, b)| (a - mode.lambda * b).norm()).fold(0.0, Real::max);
    assert!(r < 1e-6, "residual {r}");
    assert!((mode.z.norm_l2() - 1.0).abs() < 1e-12);
}

#[test]
fn spectrum_has_hamiltonian_symmetry() {
    let c = case();
    assert!(c.spectrum.quadruple_defect() < 1e-6);
    let l = c.spectrum.lambda().unwrap();
    assert!(l.re > 0.8 && l.im.abs() < 1e-8, "lambda {l}");
}

#[test]
fn matrix_matches_matrix_free_operator() {
    // the two differ by discretization error only, so use a resolved grid
    let p = Params::gdnls(2.0, 1.0, -1.0);
    let g = Grid::for_decay(p.h(), 2048).unwrap();
    let op = assemble_l(&p, g, OperatorForm::Plain).unwrap();
    let phi = soliton_profile(&p, g).unwrap();
    let v = ComplexField::from_fn(g, |x| C64::new(1.0, -0.3 * x) * (-(x * x) / 2.0).exp());
    let a = op.apply_field(&v);
    let b = apply_l_continuous(&p, &phi, &v);
    assert!(a.sub(&b).norm_inf() < 1e-8 * b.norm_inf());
}

#[test]
fn conjugated_form_transports_exactly() {
    let p = Params::dnls(1.0, 1.0, 1.2);
    let g = Grid::for_decay(p.h(), 1024).unwrap();
    let plain = assemble_l(&p, g, OperatorForm::Plain).unwrap();
    let tilde = assemble_l(&p, g, OperatorForm::Tilde).unwrap();
    let v = ComplexField::from_fn(g, |x| C64::new(x.sin(), 1.0) * (-(x * x) / 3.0).exp());
    let direct = plain.apply_field(&v);
    let transported = twist(&tilde.apply_field(&twist(&v, -0.5 * p.c)), 0.5 * p.c);
    let d = direct.sub(&transported).norm_inf();
    assert!(d < 1e-8 * direct.norm_inf(), "difference {d}");
}

#[test]
fn power_case_interior_point_is_unstable() {
    let p = Params::gdnls(2.0, 1.0, 1.0);
    let g = Grid::for_decay(p.h(), 512).unwrap();
    let s = eigen_spectrum(&assemble_l(&p, g, OperatorForm::Plain).unwrap(), FilterOptions::default()).unwrap();
    assert!(s.lambda().unwrap().re > 0.0);
}

#[test]
fn y_solves_linearized_flow() {
    let c = case();
    let mode = c.spectrum.unstable.as_ref().unwrap();
    let (t, dt) = (0.7, 1e-4);
    let dy = y_of_t(mode, t + dt).unwrap().sub(&y_of_t(mode, t - dt).unwrap()).scale(C64::new(0.5 / dt, 0.0));
    let y = y_of_t(mode, t).unwrap();
    let r = dy.add(&c.op.apply_field(&y)).norm_l2() / y.norm_l2();
    assert!(r < 1e-4, "residual {r}");
}

#[test]
fn eigenfunction_tail_bound() {
    let c = case();
    let mode = c.spectrum.unstable.as_ref().unwrap();
    let h = c.params.h();
    assert!(mode.alpha > 0.0 && mode.alpha <= 0.5 * h + 1e-12);
    let k = pointwise_bound_constant(&mode.z, mode.alpha);
    assert!(k.is_finite() && k < 1e3, "constant {k}");
}

#[test]
fn resolvent_in_spectral_gap() {
    let c = case();
    let rho = c.spectrum.lambda().unwrap().re;
    let mu = C64::new(0.5 * rho, 0.0);
    let a = gaussian_pair(c.op.grid, 0.5);
    let x = resolvent_solve(&c.op, mu, &a).unwrap();
    let r = resolvent_residual(&c.op, mu, &x, &a);
    assert!(r < 1e-8 * sup(&a.to_stacked()), "residual {r}");
    let fit = decay_fit(&x.envelope(), c.op.grid).unwrap();
    let mode = c.spectrum.unstable.as_ref().unwrap();
    assert!(fit.alpha >= mode.alpha - 1e-2, "tail {} vs alpha {}", fit.alpha, mode.alpha);
}

#[test]
fn resolvent_near_eigenvalue_is_rejected() {
    let c = case();
    let l = c.spectrum.lambda().unwrap();
    assert!(resolvent_solve(&c.op, l, &gaussian_pair(c.op.grid, 0.0)).is_err());
}

#[test]
fn decay_fit_of_exponentials() {
    let g = Grid::new(80.0, 1024).unwrap();
    let pure: Vec<Real> = g.xs().map(|x| (-x.abs()).exp()).collect();
    let f = decay_fit(&pure, g).unwrap();
    assert!((f.alpha - 1.0).abs() < 1e-3);
    let two: Vec<Real> = g.xs().map(|x| (-x.abs()).exp() + 3.0 * (-2.0 * x.abs()).exp()).collect();
    let f = decay_fit(&two, g).unwrap();
    assert!((f.alpha - 1.0).abs() < 1e-2, "{}", f.alpha);
}

#[test]
fn complex_form_maps_eigenpairs() {
    let c = case();
    let mode = c.spectrum.unstable.as_ref().unwrap();
    let prime = conjugate_prime(&c.op);
    let u = apply_p(&mode.z).to_stacked();
    let m = u.len();
    let target = C64::new(0.0, 1.0) * mode.lambda;
    let r = (0..m)
        .map(|i| {
            let row: C64 = (0..m).map(|j| prime.matrix[(i, j)] * u[j]).sum();
            (row - target * u[i]).norm()
        })
        .fold(0.0, Real::max);
    assert!(r < 1e-6, "residual {r}");
}
