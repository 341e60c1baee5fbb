//! Asymptotic profile of the unstable direction: the remainder `M` of the
//! perturbation equation `W_t + L W + M(W) = 0`, the expansion `W` to order
//! two, its dressing around the traveling soliton and the PDE residual.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::grid::{ComplexField, Grid, PairField};
use crate::linearized::{linear_fit, BlockOperator, OperatorForm, Resolvent, UnstableMode};
use crate::params::Equation;
use crate::soliton::{profile_at, traveling_with};
use crate::spectral::Spectral;
use crate::{Params, Real, C64};

const I: C64 = C64 { re: 0.0, im: 1.0 };

fn weight(s: Real, sigma: Real, order: u32) -> Real {
    // d^order/ds^order of s^sigma
    if sigma == 1.0 {
        return match order {
            0 => s,
            1 => 1.0,
            _ => 0.0,
        };
    }
    if s < 1e-300 {
        return if order == 2 && sigma == 2.0 { 2.0 } else { 0.0 };
    }
    match order {
        0 => s.powf(sigma),
        1 => sigma * s.powf(sigma - 1.0),
        _ => sigma * (sigma - 1.0) * s.powf(sigma - 2.0),
    }
}

/// `N(u) = i |u|^{2 sigma} u_x + b |u|^4 u`.
pub fn nonlinear_n(u: &ComplexField, eq: &Equation<Real>) -> ComplexField {
    let sp = Spectral::new(u.grid);
    n_with(&u.values, eq, &sp, u.grid)
}

fn n_with(u: &[C64], eq: &Equation<Real>, sp: &Spectral, grid: Grid) -> ComplexField {
    let ux = sp.derivative(u, 1);
    let (sigma, b) = (eq.sigma(), eq.quintic());
    let values = u
        .iter()
        .zip(&ux)
        .map(|(&v, &d)| {
            let s = v.norm_sqr();
            I * weight(s, sigma, 0) * d + b * s * s * v
        })
        .collect();
    ComplexField { grid, values }
}

/// Frechet derivative `DN(phi) v`.
fn dn_with(phi: &[C64], phix: &[C64], v: &[C64], vx: &[C64], eq: &Equation<Real>, grid: Grid) -> ComplexField {
    let (sigma, b) = (eq.sigma(), eq.quintic());
    let values = (0..v.len())
        .map(|j| {
            let (q, w) = (phi[j], v[j]);
            let s = q.norm_sqr();
            let ds = 2.0 * (q.conj() * w).re;
            I * (weight(s, sigma, 0) * vx[j] + weight(s, sigma, 1) * ds * phix[j])
                + b * (s * s * w + 2.0 * s * ds * q)
        })
        .collect();
    ComplexField { grid, values }
}

/// Remainder of the perturbation equation around the profile `phi`:
/// `M(v) = -i (N(phi + v) - N(phi) - DN(phi) v)`, exact in `v`.
pub fn nonlinear_m(v: &ComplexField, phi: &ComplexField, eq: &Equation<Real>) -> Result<ComplexField> {
    v.same_grid(phi)?;
    let sp = Spectral::new(v.grid);
    Ok(m_with(v, phi, eq, &sp))
}

fn m_with(v: &ComplexField, phi: &ComplexField, eq: &Equation<Real>, sp: &Spectral) -> ComplexField {
    let grid = v.grid;
    let sum = phi.add(v);
    let n1 = n_with(&sum.values, eq, sp, grid);
    let n0 = n_with(&phi.values, eq, sp, grid);
    let phix = sp.derivative(&phi.values, 1);
    let vx = sp.derivative(&v.values, 1);
    let dn = dn_with(&phi.values, &phix, &v.values, &vx, eq, grid);
    ComplexField {
        grid,
        values: (0..v.len()).map(|j| -I * (n1.values[j] - n0.values[j] - dn.values[j])).collect(),
    }
}

/// Quadratic part of [`nonlinear_m`].
pub fn quadratic_m(v: &ComplexField, phi: &ComplexField, eq: &Equation<Real>) -> Result<ComplexField> {
    v.same_grid(phi)?;
    let sp = Spectral::new(v.grid);
    Ok(m2_with(v, phi, eq, &sp))
}

fn m2_with(v: &ComplexField, phi: &ComplexField, eq: &Equation<Real>, sp: &Spectral) -> ComplexField {
    let (sigma, b) = (eq.sigma(), eq.quintic());
    let phix = sp.derivative(&phi.values, 1);
    let vx = sp.derivative(&v.values, 1);
    let values = (0..v.len())
        .map(|j| {
            let (q, w) = (phi.values[j], v.values[j]);
            let s = q.norm_sqr();
            let ds = 2.0 * (q.conj() * w).re;
            let vv = w.norm_sqr();
            let g1 = weight(s, sigma, 1);
            let g2 = weight(s, sigma, 2);
            let n2 = I * (g1 * (ds * vx[j] + vv * phix[j]) + 0.5 * g2 * ds * ds * phix[j])
                + b * (2.0 * s * ds * w + (2.0 * s * vv + ds * ds) * q);
            -I * n2
        })
        .collect();
    ComplexField { grid: v.grid, values }
}

/// One term `e^{-k rho t}(A cos(j theta t) + B sin(j theta t))` of `W`.
#[derive(Debug, Clone)]
pub struct ExpansionTerm {
    pub k: u32,
    pub j: u32,
    pub a: ComplexField,
    pub b: ComplexField,
}

/// `W^{N0}(t) = sum_{k <= N0} e^{-k rho t} sum_j (A_{j,k} cos + B_{j,k} sin)(j theta t)`.
#[derive(Debug, Clone)]
pub struct ProfileExpansion {
    pub amplitude: Real,
    pub order: u32,
    pub rho: Real,
    pub theta: Real,
    pub params: Params,
    /// The profile `phi` the expansion lives around.
    pub phi: ComplexField,
    pub terms: Vec<ExpansionTerm>,
}

impl ProfileExpansion {
    pub fn grid(&self) -> Grid {
        self.phi.grid
    }

    pub fn term(&self, j: u32, k: u32) -> Option<&ExpansionTerm> {
        self.terms.iter().find(|t| t.j == j && t.k == k)
    }

    /// `W(t)` as the complex field `W+ + i W-`.
    pub fn w(&self, t: Real) -> ComplexField {
        let mut out = ComplexField::zeros(self.grid());
        for term in &self.terms {
            let e = (-(term.k as Real) * self.rho * t).exp();
            let (s, c) = (term.j as Real * self.theta * t).sin_cos();
            out = out.add(&term.a.axpby(e * c, &term.b, e * s));
        }
        out
    }

    /// Analytic `dW/dt`.
    pub fn w_dot(&self, t: Real) -> ComplexField {
        let mut out = ComplexField::zeros(self.grid());
        for term in &self.terms {
            let kr = term.k as Real * self.rho;
            let jt = term.j as Real * self.theta;
            let e = (-kr * t).exp();
            let (s, c) = (jt * t).sin_cos();
            let ca = e * (-kr * c - jt * s);
            let cb = e * (-kr * s + jt * c);
            out = out.add(&term.a.axpby(ca, &term.b, cb));
        }
        out
    }

    /// `W_t + L W + M(W)` with `L` applied spectrally.
    pub fn equation_residual(&self, t: Real) -> ComplexField {
        let sp = Spectral::new(self.grid());
        let w = self.w(t);
        let lw = crate::linearized::apply_l_continuous(&self.params, &self.phi, &w);
        let m = m_with(&w, &self.phi, &self.params.equation, &sp);
        self.w_dot(t).add(&lw).add(&m)
    }
}

/// `Re(Z e^{-i s})` sampled as the complex field `Y(s)`.
fn y_at_phase(mode: &UnstableMode, s: Real) -> ComplexField {
    let (sn, cs) = s.sin_cos();
    mode.y1.axpby(cs, &mode.y2, sn)
}

/// Build `W^{N0}` for `N0` in `{1, 2}` around the plain operator `op`.
///
/// At order two the quadratic part of `M(a Y)` is collected on the harmonics
/// `e^{-i j theta t}`, `j = 0, 1, 2`, by projecting eight equispaced phase
/// samples, and each harmonic solves `(L - nu_j) C_j = -S_j`,
/// `nu_j = 2 rho + i j theta`.
pub fn build_w(op: &BlockOperator, mode: &UnstableMode, amplitude: Real, order: u32) -> Result<ProfileExpansion> {
    if !(1..=2).contains(&order) {
        return Err(LabError::Invalid(format!("expansion order {order} not in {{1, 2}}")));
    }
    if op.form != OperatorForm::Plain {
        return Err(LabError::Invalid("build_w needs the plain operator".into()));
    }
    let params = op
        .params
        .ok_or_else(|| LabError::Invalid("operator carries no soliton".into()))?;
    let (rho, theta) = (mode.rho(), mode.theta());
    if !(rho > 0.0) {
        return Err(LabError::NoUnstableMode);
    }
    let grid = op.grid;
    let sp = Spectral::new(grid);
    let phi = profile_at(&params, grid, &sp, 0.0, 0.0);
    let mut terms = vec![ExpansionTerm {
        k: 1,
        j: 1,
        a: mode.y1.scale(C64::new(amplitude, 0.0)),
        b: mode.y2.scale(C64::new(amplitude, 0.0)),
    }];
    if order == 2 && amplitude != 0.0 {
        const PHASES: usize = 8;
        let samples: Vec<Vec<Real>> = (0..PHASES)
            .map(|k| {
                let s = 2.0 * std::f64::consts::PI * k as Real / PHASES as Real;
                m2_with(&y_at_phase(mode, s), &phi, &params.equation, &sp).to_stacked()
            })
            .collect();
        let m = samples[0].len();
        let a2 = amplitude * amplitude;
        let scale = samples.iter().flatten().fold(0.0_f64, |x, v| x.max(v.abs()));
        for j in 0..=2u32 {
            let wgt = if j == 0 { 1.0 / PHASES as Real } else { 2.0 / PHASES as Real };
            let source: Vec<C64> = (0..m)
                .map(|r| {
                    let (mut re, mut im) = (0.0, 0.0);
                    for (k, q) in samples.iter().enumerate() {
                        let s = j as Real * 2.0 * std::f64::consts::PI * k as Real / PHASES as Real;
                        re += wgt * q[r] * s.cos();
                        im += wgt * q[r] * s.sin();
                    }
                    -C64::new(re, im)
                })
                .collect();
            let size = source.iter().fold(0.0_f64, |x, z| x.max(z.norm()));
            if size <= 1e-13 * scale {
                continue;
            }
            let nu = C64::new(2.0 * rho, j as Real * theta);
            let res = Resolvent::new(op, nu).map_err(|e| match e {
                LabError::NearSpectrum { mu, cond } => LabError::Resonance(format!(
                    "shift {mu} hits the spectrum (condition {cond:.2e})"
                )),
                other => other,
            })?;
            let c = res.solve(&PairField::from_stacked(grid, &source))?;
            terms.push(ExpansionTerm {
                k: 2,
                j,
                a: c.real_part().scale(C64::new(a2, 0.0)),
                b: c.imag_part().scale(C64::new(a2, 0.0)),
            });
        }
    }
    Ok(ProfileExpansion {
        amplitude,
        order,
        rho,
        theta,
        params,
        phi,
        terms,
    })
}

/// Lab-frame `V(t,x) = e^{i omega t} W(t, x - c t)` and `U = R + V`.
pub fn dress_profile(exp: &ProfileExpansion, t: Real) -> Result<(ComplexField, ComplexField)> {
    let grid = exp.grid();
    let sp = Spectral::new(grid);
    let p = &exp.params;
    let shift = p.x0 + p.c * t;
    let w = exp.w(t);
    let rot = C64::from_polar(1.0, p.omega * t + p.theta0);
    let v = ComplexField {
        grid,
        values: sp.shift(&w.values, shift).into_iter().map(|z| rot * z).collect(),
    };
    let r = traveling_with(p, grid, &sp, t)?;
    let u = r.add(&v);
    Ok((v, u))
}

/// `H^2` norm of `i U_t + U_xx + N(U)` for `U = R + V` at time `t`,
/// evaluated in the comoving frame with the analytic time derivative.
pub fn err_residual(exp: &ProfileExpansion, t: Real) -> Real {
    let grid = exp.grid();
    let sp = Spectral::new(grid);
    let p = &exp.params;
    let w = exp.phi.add(&exp.w(t));
    let wt = exp.w_dot(t);
    let wx = sp.derivative(&w.values, 1);
    let wxx = sp.derivative(&w.values, 2);
    let n = n_with(&w.values, &p.equation, &sp, grid);
    let e: Vec<C64> = (0..w.len())
        .map(|j| I * wt.values[j] - p.omega * w.values[j] - I * p.c * wx[j] + wxx[j] + n.values[j])
        .collect();
    sp.sobolev_norm(&e, 2)
}

/// Exponential rate fitted to a positive quantity sampled in time.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RateFit {
    /// Fitted `r` in `q(t) ~ C e^{-r t}`.
    pub rate: Real,
    pub constant: Real,
    pub samples: Vec<(Real, Real)>,
}

/// Least-squares fit of `log q` against `t`.
pub fn fit_rate(samples: Vec<(Real, Real)>) -> Result<RateFit> {
    let pts: Vec<(Real, Real)> = samples
        .iter()
        .filter(|(_, q)| *q > 0.0 && q.is_finite())
        .map(|&(t, q)| (t, q.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(LabError::Fit("fewer than three usable samples".into()));
    }
    let (slope, intercept) = linear_fit(&pts);
    Ok(RateFit {
        rate: -slope,
        constant: intercept.exp(),
        samples,
    })
}

fn window(t0: Real, t1: Real, count: usize) -> Result<Vec<Real>> {
    if !(t1 > t0) || count < 3 {
        return Err(LabError::Fit(format!("window [{t0}, {t1}] with {count} samples is too short")));
    }
    Ok((0..count)
        .map(|k| t0 + (t1 - t0) * k as Real / (count - 1) as Real)
        .collect())
}

/// Decay rate of [`err_residual`] over `[t0, t1]`; the default window is
/// `[2/rho, 6/rho]`.
pub fn residual_decay(exp: &ProfileExpansion, t0: Real, t1: Real, count: usize) -> Result<RateFit> {
    let ts = window(t0, t1, count)?;
    fit_rate(ts.into_iter().map(|t| (t, err_residual(exp, t))).collect())
}

/// Decay rate of `||V(t)||_{H^s}`.
pub fn dressed_norm_decay(exp: &ProfileExpansion, s: u32, t0: Real, t1: Real, count: usize) -> Result<RateFit> {
    let sp = Spectral::new(exp.grid());
    let ts = window(t0, t1, count)?;
    // the H^s norm is translation and phase invariant
    fit_rate(ts.into_iter().map(|t| (t, sp.sobolev_norm(&exp.w(t).values, s))).collect())
}

/// Decay rate of `||W(t) - a Y(t)||_{H^1}`.
pub fn correction_decay(exp: &ProfileExpansion, t0: Real, t1: Real, count: usize) -> Result<RateFit> {
    let sp = Spectral::new(exp.grid());
    let ts = window(t0, t1, count)?;
    fit_rate(
        ts.into_iter()
            .map(|t| {
                let mut d = ComplexField::zeros(exp.grid());
                for term in exp.terms.iter().filter(|term| term.k >= 2) {
                    let e = (-(term.k as Real) * exp.rho * t).exp();
                    let (s, c) = (term.j as Real * exp.theta * t).sin_cos();
                    d = d.add(&term.a.axpby(e * c, &term.b, e * s));
                }
                (t, sp.sobolev_norm(&d.values, 1))
            })
            .collect(),
    )
}
