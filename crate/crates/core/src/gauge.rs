//! Gauge transformation `u <-> (phi, psi)` and the nonlinearities of the
//! gauge system `(i d_t + d_xx) phi = P`, `(i d_t + d_xx) psi = Q`.

use crate::error::Result;
use crate::grid::ComplexField;
use crate::params::Equation;
use crate::spectral::Spectral;
use crate::{Real, C64};

/// `(phi, psi)` on a common grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GaugePair {
    pub phi: ComplexField,
    pub psi: ComplexField,
}

fn density(u: &ComplexField, sigma: Real) -> Vec<Real> {
    u.values
        .iter()
        .map(|v| {
            let a = v.norm_sqr();
            if sigma == 1.0 {
                a
            } else {
                a.powf(sigma)
            }
        })
        .collect()
}

fn warn_if_spread(u: &ComplexField) {
    let peak = u.norm_inf();
    let quarter = u.grid.length() / 4.0;
    let tail = u
        .grid
        .xs()
        .zip(&u.values)
        .filter(|(x, _)| x.abs() >= quarter)
        .map(|(_, v)| v.norm())
        .fold(0.0, Real::max);
    if peak > 0.0 && tail > 1e-8 * peak.max(1.0) {
        log::warn!("gauge transform of a non-localized field: tail {tail:.2e}");
    }
}

/// Multiply by `exp(s (i/2) int_{-L/2}^x |u|^{2 sigma})`.
fn dress(u: &ComplexField, weight: &ComplexField, sigma: Real, s: Real, sp: &Spectral) -> ComplexField {
    let phase = sp.prefix_integral_real(&density(weight, sigma));
    ComplexField {
        grid: u.grid,
        values: u
            .values
            .iter()
            .zip(&phase)
            .map(|(v, p)| v * C64::from_polar(1.0, 0.5 * s * p))
            .collect(),
    }
}

/// `psi = phi_x - (i/2) |phi|^{2 sigma} phi`.
pub fn constraint(phi: &ComplexField, eq: &Equation<Real>, sp: &Spectral) -> ComplexField {
    let sigma = eq.sigma();
    let d = sp.derivative(&phi.values, 1);
    let a = density(phi, sigma);
    ComplexField {
        grid: phi.grid,
        values: d
            .iter()
            .zip(&phi.values)
            .zip(&a)
            .map(|((dx, v), f)| dx - C64::new(0.0, 0.5 * f) * v)
            .collect(),
    }
}

/// `phi = exp((i/2) int |u|^{2 sigma}) u` and its constraint partner `psi`.
pub fn to_gauge(u: &ComplexField, eq: &Equation<Real>) -> Result<GaugePair> {
    let sp = Spectral::new(u.grid);
    Ok(to_gauge_with(u, eq, &sp))
}

pub(crate) fn to_gauge_with(u: &ComplexField, eq: &Equation<Real>, sp: &Spectral) -> GaugePair {
    warn_if_spread(u);
    let phi = dress(u, u, eq.sigma(), 1.0, sp);
    let psi = constraint(&phi, eq, sp);
    GaugePair { phi, psi }
}

/// Inverse dressing `u = exp(-(i/2) int |phi|^{2 sigma}) phi`.
pub fn from_gauge(pair: &GaugePair, eq: &Equation<Real>) -> ComplexField {
    let sp = Spectral::new(pair.phi.grid);
    from_gauge_with(pair, eq, &sp)
}

pub(crate) fn from_gauge_with(pair: &GaugePair, eq: &Equation<Real>, sp: &Spectral) -> ComplexField {
    dress(&pair.phi, &pair.phi, eq.sigma(), -1.0, sp)
}

/// Whether the gauge nonlinearity is locally Lipschitz for this power.
pub fn lipschitz_regime(sigma: Real) -> bool {
    sigma == 1.0 || sigma == 2.0 || sigma >= 2.5
}

/// Right-hand sides `P(phi, psi)`, `Q(phi, psi)`.
///
/// DNLS: `P = i phi^2 conj(psi) - b |phi|^4 phi`,
/// `Q = -i psi^2 conj(phi) - 3b |phi|^4 psi - 2b |phi|^2 phi^2 conj(psi)`.
/// Power equation: `P = i sigma |phi|^{2 sigma - 2} phi^2 conj(psi) - sigma(sigma-1) phi J`,
/// `Q = -i sigma |phi|^{2 sigma - 2} psi^2 conj(phi) - sigma(sigma-1) psi J`,
/// with `J = int_{-L/2}^x |phi|^{2(sigma-2)} Im(psi^2 conj(phi)^2)`.
pub fn gauge_nonlinearity(pair: &GaugePair, eq: &Equation<Real>) -> (ComplexField, ComplexField) {
    let sp = Spectral::new(pair.phi.grid);
    if let Equation::Gdnls { sigma } = *eq {
        if !lipschitz_regime(sigma) {
            log::warn!("sigma = {sigma} is outside the Lipschitz regime of the gauge system");
        }
    }
    let (p, q) = gauge_rhs(&pair.phi.values, &pair.psi.values, eq, &sp);
    let grid = pair.phi.grid;
    (ComplexField { grid, values: p }, ComplexField { grid, values: q })
}

pub(crate) fn gauge_rhs(phi: &[C64], psi: &[C64], eq: &Equation<Real>, sp: &Spectral) -> (Vec<C64>, Vec<C64>) {
    let i = C64::new(0.0, 1.0);
    match *eq {
        Equation::Dnls { b } => phi
            .iter()
            .zip(psi)
            .map(|(&f, &s)| {
                let a = f.norm_sqr();
                let p = i * f * f * s.conj() - b * a * a * f;
                let q = -i * s * s * f.conj() - 3.0 * b * a * a * s - 2.0 * b * a * f * f * s.conj();
                (p, q)
            })
            .unzip(),
        Equation::Gdnls { sigma } => {
            let coupling = sigma * (sigma - 1.0);
            let j = if coupling != 0.0 {
                let integrand: Vec<Real> = phi
                    .iter()
                    .zip(psi)
                    .map(|(&f, &s)| {
                        let a = f.norm_sqr();
                        if a < 1e-300 {
                            0.0
                        } else {
                            a.powf(sigma - 2.0) * (s * s * f.conj() * f.conj()).im
                        }
                    })
                    .collect();
                sp.prefix_integral_real(&integrand)
            } else {
                vec![0.0; phi.len()]
            };
            phi.iter()
                .zip(psi)
                .zip(&j)
                .map(|((&f, &s), &jj)| {
                    let a = f.norm_sqr();
                    let w = if sigma == 1.0 {
                        1.0
                    } else if a < 1e-300 {
                        0.0
                    } else {
                        sigma * a.powf(sigma - 1.0)
                    };
                    let p = i * w * f * f * s.conj() - coupling * f * jj;
                    let q = -i * w * s * s * f.conj() - coupling * s * jj;
                    (p, q)
                })
                .unzip()
        }
    }
}
