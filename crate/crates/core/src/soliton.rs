//! Sampled soliton profiles, stationary residuals and multi-soliton sums.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::grid::{ComplexField, Grid};
use crate::params::Equation;
use crate::spectral::Spectral;
use crate::{Params, Real, C64};

/// Profile `e^{i theta0} phi(x - center)` sampled on `grid` with the phase
/// prefix integral started at the left edge.
pub(crate) fn profile_at(p: &Params, grid: Grid, sp: &Spectral, center: Real, theta: Real) -> ComplexField {
    let xi: Vec<Real> = grid.xs().map(|x| grid.wrap(x - center)).collect();
    let density: Vec<Real> = xi.iter().map(|&y| p.amplitude_squared_unchecked(y)).collect();
    let phase_int = sp.prefix_integral_real(&density);
    let kappa = p.phase_coefficient();
    let values = xi
        .iter()
        .zip(&phase_int)
        .map(|(&y, &i)| {
            let phase = theta + 0.5 * p.c * y - kappa * i;
            C64::from_polar(p.amplitude(y), phase)
        })
        .collect();
    ComplexField { grid, values }
}

/// `phi_{omega,c}` translated by `x0` and rotated by `theta0`.
pub fn soliton_profile(p: &Params, grid: Grid) -> Result<ComplexField> {
    p.validate()?;
    if !p.is_endpoint() {
        grid.check_decay(p.h())?;
    }
    let sp = Spectral::new(grid);
    Ok(profile_at(p, grid, &sp, p.x0, p.theta0))
}

/// Sup norm of the stationary equation
/// `-phi'' + omega phi + i c phi' - i |phi|^{2 sigma} phi' - b |phi|^4 phi`.
pub fn stationary_residual(phi: &ComplexField, p: &Params) -> Result<Real> {
    let sp = Spectral::new(phi.grid);
    Ok(stationary_defect(phi, p, &sp).norm_inf())
}

pub(crate) fn stationary_defect(phi: &ComplexField, p: &Params, sp: &Spectral) -> ComplexField {
    let d1 = sp.derivative(&phi.values, 1);
    let d2 = sp.derivative(&phi.values, 2);
    let sigma = p.equation.sigma();
    let b = p.equation.quintic();
    let i = C64::new(0.0, 1.0);
    let values = phi
        .values
        .iter()
        .zip(d1.iter().zip(&d2))
        .map(|(&u, (&ux, &uxx))| {
            let a = u.norm_sqr();
            let f = if sigma == 1.0 { a } else { a.powf(sigma) };
            -uxx + p.omega * u + i * p.c * ux - i * f * ux - b * a * a * u
        })
        .collect();
    ComplexField { grid: phi.grid, values }
}

/// Traveling soliton `e^{i theta0} e^{i omega t} phi(x - x0 - c t)`.
pub fn traveling_soliton(p: &Params, grid: Grid, t: Real) -> Result<ComplexField> {
    p.validate()?;
    let sp = Spectral::new(grid);
    traveling_with(p, grid, &sp, t)
}

pub(crate) fn traveling_with(p: &Params, grid: Grid, sp: &Spectral, t: Real) -> Result<ComplexField> {
    let center = grid.wrap(p.x0 + p.c * t);
    let edge = 0.5 * grid.length() - center.abs();
    if edge < grid.length() / 8.0 {
        log::warn!("soliton centre {center:.3} is within L/8 of the domain edge");
    }
    Ok(profile_at(p, grid, sp, center, p.theta0 + p.omega * t))
}

/// Sum of traveling solitons with the interaction scales of the family.
#[derive(Debug, Clone)]
pub struct MultiProfile {
    pub field: ComplexField,
    /// `min_{j != k} |c_j - c_k| / 9`; `None` for a single soliton.
    pub v_star: Option<Real>,
    pub h_min: Real,
}

/// `R(t) = sum_j R_j(t)`.
pub fn multi_profile(params: &[Params], grid: Grid, t: Real) -> Result<MultiProfile> {
    if params.is_empty() {
        return Err(LabError::Invalid("multi-soliton needs at least one soliton".into()));
    }
    let sp = Spectral::new(grid);
    let mut field = ComplexField::zeros(grid);
    for p in params {
        p.validate()?;
        let r = traveling_with(p, grid, &sp, t)?;
        field = field.add(&r);
    }
    Ok(MultiProfile {
        field,
        v_star: v_star(params),
        h_min: params.iter().map(|p| p.h()).fold(Real::INFINITY, Real::min),
    })
}

/// `min_{j != k} |c_j - c_k| / 9`.
pub fn v_star(params: &[Params]) -> Option<Real> {
    let mut best: Option<Real> = None;
    for (j, a) in params.iter().enumerate() {
        for b in &params[j + 1..] {
            let d = (a.c - b.c).abs() / 9.0;
            best = Some(best.map_or(d, |v: Real| v.min(d)));
        }
    }
    best
}

/// Summary written by the `soliton` command.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProfileSummary {
    pub h: Real,
    pub gamma: Option<Real>,
    pub peak: Real,
    pub mass: Real,
    pub stationary_residual: Real,
}

pub fn summarize(p: &Params, phi: &ComplexField) -> Result<ProfileSummary> {
    Ok(ProfileSummary {
        h: p.h(),
        gamma: p.gamma(),
        peak: phi.norm_inf(),
        mass: 0.5 * phi.norm_l2().powi(2),
        stationary_residual: stationary_residual(phi, p)?,
    })
}

/// Whether the soliton's equation is DNLS.
pub fn is_dnls(p: &Params) -> bool {
    matches!(p.equation, Equation::Dnls { .. })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modulus_matches_amplitude() {
        let p = Params::dnls(0.5, 1.0, 0.7);
        let g = Grid::for_decay(p.h(), 1024).unwrap();
        let phi = soliton_profile(&p, g).unwrap();
        for (x, v) in g.xs().zip(&phi.values) {
            assert!((v.norm() - p.amplitude_squared(x).unwrap().sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn halved_amplitude_is_detected() {
        let p = Params::dnls(0.0, 1.0, 0.5);
        let g = Grid::for_decay(p.h(), 2048).unwrap();
        let phi = soliton_profile(&p, g).unwrap();
        assert!(stationary_residual(&phi, &p).unwrap() < 1e-8);
        let half = phi.scale(C64::new(0.5, 0.0));
        assert!(stationary_residual(&half, &p).unwrap() > 1e-2);
        assert_eq!(stationary_residual(&ComplexField::zeros(g), &p).unwrap(), 0.0);
    }

    #[test]
    fn v_star_of_pair() {
        let a = Params::dnls(0.0, 1.25, -2.0 + 1e-9);
        let b = Params::dnls(0.0, 1.25, 2.0);
        assert!((v_star(&[a, b]).unwrap() - 4.0 / 9.0).abs() < 1e-9);
        assert!(v_star(&[a]).is_none());
    }
}
