//! Linearized operator around a soliton: dense assembly, spectrum, the
//! unstable mode, resolvent solves and tail-decay fits.

use faer::linalg::solvers::{PartialPivLu, Solve};
use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::grid::{ComplexField, Grid, PairField};
use crate::soliton::profile_at;
use crate::spectral::Spectral;
use crate::{Params, Real, C64};

/// Which operator a [`BlockOperator`] holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorForm {
    /// `L` acting on `(v+, v-)`.
    Plain,
    /// `L` conjugated by `e^{i c x / 2}`.
    Tilde,
    /// The self-adjoint Hessian `H`, with `L = i H`.
    Hessian,
}

/// Dense real `2N x 2N` matrix acting on stacked `(v+, v-)`.
#[derive(Debug, Clone)]
pub struct BlockOperator {
    pub form: OperatorForm,
    pub grid: Grid,
    pub params: Option<Params>,
    pub matrix: Mat<Real>,
    /// Edge `h^2/4` of the essential spectrum on the imaginary axis.
    pub essential_band: Real,
}

impl BlockOperator {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Matrix-vector product on a stacked real vector.
    pub fn apply(&self, v: &[Real]) -> Vec<Real> {
        let x = faer::ColRef::from_slice(v);
        let y = &self.matrix * x;
        y.iter().copied().collect()
    }

    /// Action on a complexified pair, component-wise.
    pub fn apply_pair(&self, v: &PairField) -> PairField {
        let s = v.to_stacked();
        let re: Vec<Real> = s.iter().map(|z| z.re).collect();
        let im: Vec<Real> = s.iter().map(|z| z.im).collect();
        let (ar, ai) = (self.apply(&re), self.apply(&im));
        let out: Vec<C64> = ar.iter().zip(&ai).map(|(&a, &b)| C64::new(a, b)).collect();
        PairField::from_stacked(v.grid, &out)
    }

    /// Action on a complex field viewed as the real pair `(Re, Im)`.
    pub fn apply_field(&self, v: &ComplexField) -> ComplexField {
        ComplexField::from_stacked(v.grid, &self.apply(&v.to_stacked()))
    }
}

/// Profile data entering the potentials.
struct Potentials<'a> {
    q: &'a [C64],
    qx: &'a [C64],
    omega: Real,
    /// Coefficient of `i c v_x`.
    c: Real,
    /// Coefficient of the conjugation term `f v + g q Re(q conj v)`.
    shift: Real,
    sigma: Real,
    b: Real,
}

fn nonlinear_weights(a: Real, sigma: Real) -> (Real, Real) {
    if sigma == 1.0 {
        (a, 2.0)
    } else if a < 1e-300 {
        (0.0, 0.0)
    } else {
        (a.powf(sigma), 2.0 * sigma * a.powf(sigma - 1.0))
    }
}

/// Symmetric assembly of
/// `H v = -v'' + omega v + i c v' - i f v' - i g q' Re(q conj v)
///        + shift (f v + g q Re(q conj v)) - b(|q|^4 v + 4 |q|^2 q Re(q conj v))`
/// with `f = |q|^{2 sigma}`, `g = 2 sigma |q|^{2 sigma - 2}`. The transport
/// term `f d/dx` is split as `(F D + D F)/2 - f'/2`, which keeps the matrix
/// exactly symmetric.
fn assemble_h(grid: Grid, sp: &Spectral, pot: &Potentials<'_>) -> Mat<Real> {
    let n = grid.n();
    let d1 = sp.d1_matrix();
    let d2 = sp.d2_matrix();
    let mut f = vec![0.0; n];
    let mut g = vec![0.0; n];
    for j in 0..n {
        let (fj, gj) = nonlinear_weights(pot.q[j].norm_sqr(), pot.sigma);
        f[j] = fj;
        g[j] = gj;
    }
    let mut h = Mat::<Real>::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let lap = -d2[(i, j)];
            h[(i, j)] = lap;
            h[(n + i, n + j)] = lap;
            // i c d/dx and -i f d/dx (skew part)
            let a = 0.5 * (f[i] + f[j]) * d1[(i, j)];
            let off = -pot.c * d1[(i, j)] + a;
            h[(i, n + j)] = off;
            h[(n + i, j)] = -off;
        }
    }
    for j in 0..n {
        let (qr, qi) = (pot.q[j].re, pot.q[j].im);
        let (pr, pi) = (pot.qx[j].re, pot.qx[j].im);
        let a2 = pot.q[j].norm_sqr();
        let fprime = g[j] * (qr * pr + qi * pi);
        let gj = g[j];
        let mut block = [
            [pot.omega, -0.5 * fprime],
            [0.5 * fprime, pot.omega],
        ];
        // -i g q' Re(q conj v)
        block[0][0] += gj * pi * qr;
        block[0][1] += gj * pi * qi;
        block[1][0] += -gj * pr * qr;
        block[1][1] += -gj * pr * qi;
        // shift (f v + g q Re(q conj v))
        block[0][0] += pot.shift * (f[j] + gj * qr * qr);
        block[0][1] += pot.shift * gj * qr * qi;
        block[1][0] += pot.shift * gj * qi * qr;
        block[1][1] += pot.shift * (f[j] + gj * qi * qi);
        // quintic
        let b = pot.b;
        block[0][0] -= b * (a2 * a2 + 4.0 * a2 * qr * qr);
        block[0][1] -= b * 4.0 * a2 * qr * qi;
        block[1][0] -= b * 4.0 * a2 * qr * qi;
        block[1][1] -= b * (a2 * a2 + 4.0 * a2 * qi * qi);
        h[(j, j)] += block[0][0];
        h[(j, n + j)] += block[0][1];
        h[(n + j, j)] += block[1][0];
        h[(n + j, n + j)] += block[1][1];
    }
    h
}

/// `R H` with `R = [[0, -1], [1, 0]]` (multiplication by `i`).
fn rotate(h: &Mat<Real>) -> Mat<Real> {
    let m = h.nrows() / 2;
    Mat::from_fn(2 * m, 2 * m, |i, j| if i < m { -h[(i + m, j)] } else { h[(i - m, j)] })
}

/// Conjugated profile `e^{-i c x / 2} phi`.
fn untwisted(phi: &ComplexField, c: Real) -> ComplexField {
    let g = phi.grid;
    ComplexField {
        grid: g,
        values: g
            .xs()
            .zip(&phi.values)
            .map(|(x, v)| v * C64::from_polar(1.0, -0.5 * c * x))
            .collect(),
    }
}

/// Assemble `L` (plain or conjugated) or `H` at a soliton.
pub fn assemble_l(p: &Params, grid: Grid, form: OperatorForm) -> Result<BlockOperator> {
    p.validate()?;
    if p.is_endpoint() {
        return Err(LabError::Invalid(
            "the algebraic endpoint soliton has no spectral gap".into(),
        ));
    }
    grid.check_decay(p.h())?;
    let centered = p.with_center(0.0).with_phase(0.0);
    let sp = Spectral::new(grid);
    let phi = profile_at(&centered, grid, &sp, 0.0, 0.0);
    let sigma = p.equation.sigma();
    let b = p.equation.quintic();
    let (q, omega, c, shift) = match form {
        OperatorForm::Plain | OperatorForm::Hessian => (phi, p.omega, p.c, 0.0),
        OperatorForm::Tilde => (
            untwisted(&phi, p.c),
            p.omega - 0.25 * p.c * p.c,
            0.0,
            0.5 * p.c,
        ),
    };
    let qx = sp.derivative(&q.values, 1);
    let pot = Potentials {
        q: &q.values,
        qx: &qx,
        omega,
        c,
        shift,
        sigma,
        b,
    };
    let h = assemble_h(grid, &sp, &pot);
    let matrix = match form {
        OperatorForm::Hessian => h,
        _ => rotate(&h),
    };
    Ok(BlockOperator {
        form,
        grid,
        params: Some(*p),
        matrix,
        essential_band: 0.25 * p.h_squared(),
    })
}

/// Conjugated operator with the soliton removed: `i(-d^2/dx^2 + h^2/4)`.
pub fn assemble_free(grid: Grid, h: Real) -> BlockOperator {
    let sp = Spectral::new(grid);
    let zeros = vec![C64::new(0.0, 0.0); grid.n()];
    let pot = Potentials {
        q: &zeros,
        qx: &zeros,
        omega: 0.25 * h * h,
        c: 0.0,
        shift: 0.0,
        sigma: 1.0,
        b: 0.0,
    };
    BlockOperator {
        form: OperatorForm::Tilde,
        grid,
        params: None,
        matrix: rotate(&assemble_h(grid, &sp, &pot)),
        essential_band: 0.25 * h * h,
    }
}

/// Matrix-free `L_C v = -i v'' + i omega v - c v' + f v' + g phi' Re(phi conj v)
/// - i b (|phi|^4 v + 4 |phi|^2 phi Re(phi conj v))` with spectral derivatives.
pub fn apply_l_continuous(p: &Params, phi: &ComplexField, v: &ComplexField) -> ComplexField {
    let sp = Spectral::new(phi.grid);
    let px = sp.derivative(&phi.values, 1);
    let vx = sp.derivative(&v.values, 1);
    let vxx = sp.derivative(&v.values, 2);
    let i = C64::new(0.0, 1.0);
    let sigma = p.equation.sigma();
    let b = p.equation.quintic();
    let values = (0..v.len())
        .map(|j| {
            let q = phi.values[j];
            let a2 = q.norm_sqr();
            let (f, g) = nonlinear_weights(a2, sigma);
            let re = (q * v.values[j].conj()).re;
            -i * vxx[j] + i * p.omega * v.values[j] - p.c * vx[j]
                + f * vx[j]
                + g * px[j] * re
                - i * b * (a2 * a2 * v.values[j] + 4.0 * a2 * q * re)
        })
        .collect();
    ComplexField { grid: v.grid, values }
}

/// Eigenpair filtering options.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FilterOptions {
    /// Maximal eigenfunction mass fraction in `|x| > L/4`.
    pub localization: Real,
    /// Distance to the essential band below which modes are discarded.
    pub band_margin: Real,
    /// Real part above which a retained eigenvalue counts as unstable.
    pub growth: Real,
    /// Retained eigenvalues with `|lambda|` below this belong to the
    /// generalized-kernel cluster and are never selected as unstable.
    pub kernel_radius: Real,
}

impl Default for FilterOptions {
    fn default() -> Self {
        Self {
            localization: 1e-4,
            band_margin: 1e-3,
            growth: 1e-4,
            kernel_radius: 1e-3,
        }
    }
}

/// The selected unstable eigenvalue with its modes.
#[derive(Debug, Clone)]
pub struct UnstableMode {
    pub lambda: C64,
    /// Eigenfunction of `lambda`, unit `L^2` norm.
    pub z: PairField,
    /// Eigenfunction of `-lambda`, unit `L^2` norm.
    pub z_grow: PairField,
    /// `Re Z` as the complex field `Re Z+ + i Re Z-`.
    pub y1: ComplexField,
    /// `Im Z` in the same convention.
    pub y2: ComplexField,
    /// Raw fitted tail rate of `|Z+| + |Z-|`.
    pub alpha_fit: Real,
    /// `min(alpha_fit, h/2)`.
    pub alpha: Real,
    pub decay_constant: Real,
}

impl UnstableMode {
    pub fn rho(&self) -> Real {
        self.lambda.re
    }

    pub fn theta(&self) -> Real {
        self.lambda.im
    }

    /// Growing perturbation direction `Re Z_grow` as a complex field.
    pub fn growing_field(&self) -> ComplexField {
        let f = self.z_grow.real_part();
        let n = f.norm_l2();
        f.scale(C64::new(1.0 / n, 0.0))
    }
}

#[derive(Debug, Clone)]
pub struct SpectrumReport {
    pub form: OperatorForm,
    /// Retained eigenvalues, by decreasing real part.
    pub eigenvalues: Vec<C64>,
    pub discarded: usize,
    pub essential_band: Real,
    /// `None` when no retained eigenvalue has real part above the growth threshold.
    pub unstable: Option<UnstableMode>,
}

impl SpectrumReport {
    /// Max distance from each retained `lambda` to the nearest retained
    /// `-lambda`, `conj(lambda)` and `-conj(lambda)`, relative to the scale.
    pub fn quadruple_defect(&self) -> Real {
        let ev = &self.eigenvalues;
        let scale = ev.iter().fold(1.0_f64, |m, z| m.max(z.norm()));
        let nearest = |t: C64| ev.iter().map(|z| (z - t).norm()).fold(Real::INFINITY, Real::min);
        ev.iter()
            .map(|&l| nearest(-l).max(nearest(l.conj())).max(nearest(-l.conj())))
            .fold(0.0, Real::max)
            / scale
    }

    /// Retained eigenvalues away from the symmetry cluster at zero.
    pub fn nonzero(&self, tol: Real) -> Vec<C64> {
        self.eigenvalues.iter().copied().filter(|z| z.norm() > tol).collect()
    }

    pub fn lambda(&self) -> Option<C64> {
        self.unstable.as_ref().map(|m| m.lambda)
    }
}

fn normalize(grid: Grid, v: Vec<C64>) -> PairField {
    let mut p = PairField::from_stacked(grid, &v);
    let norm = p.norm_l2();
    let big = v
        .iter()
        .copied()
        .max_by(|a, b| a.norm().total_cmp(&b.norm()))
        .unwrap_or(C64::new(1.0, 0.0));
    let phase = big.conj() / big.norm();
    p = p.scale(phase / norm);
    p
}

/// Dense eigensolve with the spurious-mode filter and unstable-mode selection.
pub fn eigen_spectrum(op: &BlockOperator, opts: FilterOptions) -> Result<SpectrumReport> {
    if op.form == OperatorForm::Hessian {
        return Err(LabError::Invalid("eigen_spectrum expects L, not H".into()));
    }
    let grid = op.grid;
    let n = grid.n();
    let eig = op.matrix.eigen().map_err(|e| LabError::Eigen(format!("{e:?}")))?;
    let values: Vec<C64> = eig.S().column_vector().iter().copied().collect();
    let u = eig.U();
    let quarter = grid.length() / 4.0;
    let outside: Vec<bool> = grid.xs().map(|x| x.abs() > quarter).collect();
    let band = op.essential_band;
    let mut kept: Vec<(C64, usize)> = Vec::new();
    for (i, &l) in values.iter().enumerate() {
        let col = u.col(i);
        let mut total = 0.0;
        let mut out = 0.0;
        for j in 0..n {
            let m = col[j].norm_sqr() + col[n + j].norm_sqr();
            total += m;
            if outside[j] {
                out += m;
            }
        }
        let near_band = l.re.abs() < opts.band_margin && l.im.abs() >= band - opts.band_margin;
        if out / total < opts.localization && !near_band {
            kept.push((l, i));
        }
    }
    kept.sort_by(|a, b| b.0.re.total_cmp(&a.0.re).then(b.0.im.total_cmp(&a.0.im)));
    let scale = kept.iter().fold(1.0_f64, |m, (z, _)| m.max(z.norm()));
    let column = |i: usize| -> Vec<C64> { u.col(i).iter().copied().collect() };
    let candidate = kept.iter().find(|(z, _)| z.norm() >= opts.kernel_radius);
    let unstable = match candidate {
        Some(&(top, _)) if top.re > opts.growth => {
            let tie = 1e-8 * scale;
            let &(lambda, idx) = kept
                .iter()
                .filter(|(z, _)| (z.re - top.re).abs() <= tie && z.norm() >= opts.kernel_radius)
                .max_by(|a, b| {
                    (a.0.im >= 0.0)
                        .cmp(&(b.0.im >= 0.0))
                        .then(a.0.re.total_cmp(&b.0.re))
                        .then(a.0.im.total_cmp(&b.0.im))
                })
                .expect("nonempty tie set");
            let &(_, gidx) = kept
                .iter()
                .min_by(|a, b| (a.0 + lambda).norm().total_cmp(&(b.0 + lambda).norm()))
                .expect("nonempty");
            let z = normalize(grid, column(idx));
            let z_grow = normalize(grid, column(gidx));
            let fit = decay_fit(&z.envelope(), grid)?;
            let h = op.essential_band.sqrt() * 2.0;
            Some(UnstableMode {
                lambda,
                y1: z.real_part(),
                y2: z.imag_part(),
                z,
                z_grow,
                alpha_fit: fit.alpha,
                alpha: fit.alpha.min(0.5 * h),
                decay_constant: fit.constant,
            })
        }
        _ => None,
    };
    Ok(SpectrumReport {
        form: op.form,
        eigenvalues: kept.iter().map(|(z, _)| *z).collect(),
        discarded: values.len() - kept.len(),
        essential_band: band,
        unstable,
    })
}

/// `Y(t) = e^{-rho t}(cos(theta t) Y1 + sin(theta t) Y2)`.
pub fn y_of_t(mode: &UnstableMode, t: Real) -> Result<ComplexField> {
    if !(mode.rho() > 0.0) {
        return Err(LabError::NoUnstableMode);
    }
    let e = (-mode.rho() * t).exp();
    let (s, c) = (mode.theta() * t).sin_cos();
    Ok(mode.y1.axpby(e * c, &mode.y2, e * s))
}

/// Factorized `L - mu` for repeated solves.
pub struct Resolvent {
    pub mu: C64,
    pub condition: Real,
    grid: Grid,
    factor: Factor,
}

enum Factor {
    Real(PartialPivLu<Real>),
    Complex(PartialPivLu<C64>),
}

impl Resolvent {
    /// Factor `L - mu`; fails when the condition estimate exceeds `1e12`.
    pub fn new(op: &BlockOperator, mu: C64) -> Result<Self> {
        let m = op.dim();
        let (factor, norm1) = if mu.im == 0.0 {
            let a = Mat::from_fn(m, m, |i, j| op.matrix[(i, j)] - if i == j { mu.re } else { 0.0 });
            let norm = one_norm(m, |i, j| a[(i, j)].abs());
            (Factor::Real(a.partial_piv_lu()), norm)
        } else {
            let a = Mat::from_fn(m, m, |i, j| {
                C64::new(op.matrix[(i, j)], 0.0) - if i == j { mu } else { C64::new(0.0, 0.0) }
            });
            let norm = one_norm(m, |i, j| a[(i, j)].norm());
            (Factor::Complex(a.partial_piv_lu()), norm)
        };
        let mut r = Self {
            mu,
            condition: 0.0,
            grid: op.grid,
            factor,
        };
        r.condition = norm1 * r.inverse_norm_estimate(m);
        if !(r.condition.is_finite() && r.condition <= 1e12) {
            return Err(LabError::NearSpectrum {
                mu,
                cond: r.condition,
            });
        }
        Ok(r)
    }

    fn solve_vec(&self, rhs: &[C64], adjoint: bool) -> Vec<C64> {
        let m = rhs.len();
        match &self.factor {
            Factor::Complex(lu) => {
                let mut b = Mat::from_fn(m, 1, |i, _| rhs[i]);
                if adjoint {
                    lu.solve_adjoint_in_place(b.as_mut());
                } else {
                    lu.solve_in_place(b.as_mut());
                }
                (0..m).map(|i| b[(i, 0)]).collect()
            }
            Factor::Real(lu) => {
                let mut b = Mat::from_fn(m, 2, |i, j| if j == 0 { rhs[i].re } else { rhs[i].im });
                if adjoint {
                    lu.solve_transpose_in_place(b.as_mut());
                } else {
                    lu.solve_in_place(b.as_mut());
                }
                (0..m).map(|i| C64::new(b[(i, 0)], b[(i, 1)])).collect()
            }
        }
    }

    /// Hager's estimate of `||(L - mu)^{-1}||_1`.
    fn inverse_norm_estimate(&self, m: usize) -> Real {
        let mut x = vec![C64::new(1.0 / m as Real, 0.0); m];
        let mut est = 0.0;
        for _ in 0..5 {
            let y = self.solve_vec(&x, false);
            est = y.iter().map(|z| z.norm()).sum::<Real>();
            if !est.is_finite() {
                return Real::INFINITY;
            }
            let xi: Vec<C64> = y
                .iter()
                .map(|z| if z.norm() > 0.0 { z / z.norm() } else { C64::new(1.0, 0.0) })
                .collect();
            let z = self.solve_vec(&xi, true);
            let (jmax, zmax) = z
                .iter()
                .enumerate()
                .map(|(j, v)| (j, v.norm()))
                .fold((0, 0.0), |a, b| if b.1 > a.1 { b } else { a });
            let ztx: Real = z.iter().zip(&x).map(|(a, b)| (a.conj() * b).re).sum();
            if zmax <= ztx {
                break;
            }
            x = vec![C64::new(0.0, 0.0); m];
            x[jmax] = C64::new(1.0, 0.0);
        }
        est
    }

    pub fn solve(&self, a: &PairField) -> Result<PairField> {
        if a.grid != self.grid {
            return Err(LabError::GridMismatch);
        }
        Ok(PairField::from_stacked(self.grid, &self.solve_vec(&a.to_stacked(), false)))
    }
}

fn one_norm(m: usize, abs: impl Fn(usize, usize) -> Real) -> Real {
    (0..m)
        .map(|j| (0..m).map(|i| abs(i, j)).sum::<Real>())
        .fold(0.0, Real::max)
}

/// Solve `(L - mu) X = A`.
pub fn resolvent_solve(op: &BlockOperator, mu: C64, a: &PairField) -> Result<PairField> {
    Resolvent::new(op, mu)?.solve(a)
}

/// Sup-norm residual `||(L - mu) X - A||`.
pub fn resolvent_residual(op: &BlockOperator, mu: C64, x: &PairField, a: &PairField) -> Real {
    let lx = op.apply_pair(x);
    let s = lx.to_stacked();
    let xs = x.to_stacked();
    let as_ = a.to_stacked();
    s.iter()
        .zip(xs.iter().zip(&as_))
        .map(|(l, (x, a))| (l - mu * x - a).norm())
        .fold(0.0, Real::max)
}

/// Fitted `|f(x)| ~ C e^{-alpha |x|}`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DecayFit {
    pub alpha: Real,
    pub constant: Real,
    pub points: usize,
}

/// Least-squares slope of `log |f|` on both tails, for `|x|` from
/// `min(L/8, last point where |f| >= 1e-3 max|f|)` up to `L/4`, ignoring
/// samples below `1e-7 max|f|` where eigensolver roundoff takes over.
pub fn decay_fit(envelope: &[Real], grid: Grid) -> Result<DecayFit> {
    let peak = envelope.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if peak == 0.0 {
        return Err(LabError::Fit("zero field".into()));
    }
    let core = grid
        .xs()
        .zip(envelope)
        .filter(|(_, v)| v.abs() >= 1e-3 * peak)
        .fold(0.0_f64, |m, (x, _)| m.max(x.abs()));
    let (lo, hi) = (core.min(grid.length() / 8.0), grid.length() / 4.0);
    let pts: Vec<(Real, Real)> = grid
        .xs()
        .zip(envelope)
        .filter(|(x, v)| x.abs() >= lo && x.abs() <= hi && v.abs() > 1e-7 * peak)
        .map(|(x, v)| (x.abs(), v.abs().ln()))
        .collect();
    if pts.len() < 4 {
        return Err(LabError::Fit(format!("only {} usable tail samples", pts.len())));
    }
    let (slope, intercept) = linear_fit(&pts);
    Ok(DecayFit {
        alpha: -slope,
        constant: intercept.exp(),
        points: pts.len(),
    })
}

/// Ordinary least-squares line through `(x, y)` points: `(slope, intercept)`.
pub fn linear_fit(pts: &[(Real, Real)]) -> (Real, Real) {
    let n = pts.len() as Real;
    let mx = pts.iter().map(|p| p.0).sum::<Real>() / n;
    let my = pts.iter().map(|p| p.1).sum::<Real>() / n;
    let sxx: Real = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: Real = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Pointwise `|u| + |v| + |u'| + |v'| <= C e^{-alpha |x|}`: the smallest `C`
/// that works on the grid for the given `alpha`.
pub fn pointwise_bound_constant(z: &PairField, alpha: Real) -> Real {
    let sp = Spectral::new(z.grid);
    let dp = sp.derivative(&z.plus, 1);
    let dm = sp.derivative(&z.minus, 1);
    z.grid
        .xs()
        .enumerate()
        .map(|(j, x)| {
            (z.plus[j].norm() + z.minus[j].norm() + dp[j].norm() + dm[j].norm()) * (alpha * x.abs()).exp()
        })
        .fold(0.0, Real::max)
}

/// Pointwise rotation by `e^{i theta(x)}` of a complex field.
pub fn twist(v: &ComplexField, k: Real) -> ComplexField {
    ComplexField {
        grid: v.grid,
        values: v
            .grid
            .xs()
            .zip(&v.values)
            .map(|(x, z)| z * C64::from_polar(1.0, k * x))
            .collect(),
    }
}
