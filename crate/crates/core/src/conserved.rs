//! Energy, mass, momentum, the action and the stability classification.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::grid::{ComplexField, Grid};
use crate::linearized::{assemble_l, OperatorForm};
use crate::params::Equation;
use crate::soliton::profile_at;
use crate::spectral::Spectral;
use crate::{Params, Real};

fn power(a: Real, sigma: Real) -> Real {
    if sigma == 1.0 {
        a
    } else {
        a.powf(sigma)
    }
}

/// `E(u) = 1/2 |u_x|^2 + 1/(2 sigma + 2) Im int |u|^{2 sigma} u_x conj(u) - b/6 |u|_6^6`.
pub fn energy(u: &ComplexField, eq: &Equation<Real>) -> Real {
    let sp = Spectral::new(u.grid);
    energy_with(u, eq, &sp)
}

pub(crate) fn energy_with(u: &ComplexField, eq: &Equation<Real>, sp: &Spectral) -> Real {
    let ux = sp.derivative(&u.values, 1);
    let sigma = eq.sigma();
    let b = eq.quintic();
    let kappa = 1.0 / (2.0 * sigma + 2.0);
    let sum: Real = u
        .values
        .iter()
        .zip(&ux)
        .map(|(v, d)| {
            let a = v.norm_sqr();
            0.5 * d.norm_sqr() + kappa * power(a, sigma) * (d * v.conj()).im - b / 6.0 * a * a * a
        })
        .sum();
    sum * u.grid.dx()
}

/// `Q(u) = 1/2 |u|^2`.
pub fn mass(u: &ComplexField) -> Real {
    0.5 * u.norm_l2().powi(2)
}

/// `P(u) = -1/2 Im int u_x conj(u)`.
pub fn momentum(u: &ComplexField) -> Real {
    let sp = Spectral::new(u.grid);
    momentum_with(u, &sp)
}

pub(crate) fn momentum_with(u: &ComplexField, sp: &Spectral) -> Real {
    let ux = sp.derivative(&u.values, 1);
    -0.5 * u
        .values
        .iter()
        .zip(&ux)
        .map(|(v, d)| (d * v.conj()).im)
        .sum::<Real>()
        * u.grid.dx()
}

/// `S_{omega,c}(u) = E + omega Q + c P`.
pub fn action(u: &ComplexField, eq: &Equation<Real>, omega: Real, c: Real) -> Real {
    energy(u, eq) + omega * mass(u) + c * momentum(u)
}

/// Conserved quantities of a state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Invariants {
    pub energy: Real,
    pub mass: Real,
    pub momentum: Real,
}

impl Invariants {
    pub fn of(u: &ComplexField, eq: &Equation<Real>, sp: &Spectral) -> Self {
        Self {
            energy: energy_with(u, eq, sp),
            mass: mass(u),
            momentum: momentum_with(u, sp),
        }
    }

    /// Largest relative change against a reference.
    pub fn drift_from(&self, r: &Invariants) -> Real {
        let rel = |a: Real, b: Real| (a - b).abs() / b.abs().max(1e-12);
        rel(self.energy, r.energy)
            .max(rel(self.mass, r.mass))
            .max(rel(self.momentum, r.momentum))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Stable,
    Unstable,
    Inconclusive,
}

/// Parameter Hessian of `d(omega, c)` and its positive-eigenvalue count.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DMatrix {
    /// `[[dQ/domega, dQ/dc], [dP/domega, dP/dc]]`.
    pub d2: [[Real; 2]; 2],
    pub d: Real,
    pub p_count: usize,
    pub fd_step: Real,
    /// Relative change of `d2` when the step is halved.
    pub richardson_gap: Real,
}

impl DMatrix {
    pub fn det(&self) -> Real {
        self.d2[0][0] * self.d2[1][1] - self.d2[0][1] * self.d2[1][0]
    }

    /// Relative asymmetry `|dQ/dc - dP/domega|`.
    pub fn asymmetry(&self) -> Real {
        let scale = self.d2.iter().flatten().fold(0.0_f64, |m, v| m.max(v.abs()));
        (self.d2[0][1] - self.d2[1][0]).abs() / scale.max(1e-300)
    }
}

fn charges(p: &Params, grid: Grid, sp: &Spectral) -> (Real, Real) {
    let phi = profile_at(p, grid, sp, 0.0, 0.0);
    (mass(&phi), momentum_with(&phi, sp))
}

fn central_d2(p: &Params, grid: Grid, sp: &Spectral, step: Real) -> [[Real; 2]; 2] {
    let (qwp, pwp) = charges(&p.at(p.omega + step, p.c), grid, sp);
    let (qwm, pwm) = charges(&p.at(p.omega - step, p.c), grid, sp);
    let (qcp, pcp) = charges(&p.at(p.omega, p.c + step), grid, sp);
    let (qcm, pcm) = charges(&p.at(p.omega, p.c - step), grid, sp);
    let s = 2.0 * step;
    [
        [(qwp - qwm) / s, (qcp - qcm) / s],
        [(pwp - pwm) / s, (pcp - pcm) / s],
    ]
}

/// `d''(omega, c)` by central differences of `Q` and `P` along the family.
/// The default step is `1e-4 max(1, |omega|, |c|)`; it is halved until the
/// stencil stays admissible.
pub fn d_matrix(p: &Params, grid: Grid, fd_step: Option<Real>) -> Result<DMatrix> {
    p.validate()?;
    let mut step = fd_step.unwrap_or(1e-4 * 1f64.max(p.omega.abs()).max(p.c.abs()));
    let admissible = |s: Real| {
        [(s, 0.0), (-s, 0.0), (0.0, s), (0.0, -s)]
            .iter()
            .all(|(dw, dc)| p.at(p.omega + dw, p.c + dc).validate().is_ok())
    };
    let mut tries = 0;
    while !admissible(step) {
        step *= 0.5;
        tries += 1;
        if tries > 20 {
            return Err(LabError::Invalid(
                "finite-difference stencil leaves the admissible region".into(),
            ));
        }
    }
    let sp = Spectral::new(grid);
    let d2 = central_d2(p, grid, &sp, step);
    let half = central_d2(p, grid, &sp, 0.5 * step);
    let scale = d2.iter().flatten().fold(0.0_f64, |m, v| m.max(v.abs())).max(1e-300);
    let gap = (0..2)
        .flat_map(|i| (0..2).map(move |j| (i, j)))
        .map(|(i, j)| (d2[i][j] - half[i][j]).abs())
        .fold(0.0, Real::max)
        / scale;
    if gap > 1e-4 {
        log::warn!("d'' finite differences not converged: relative gap {gap:.2e}");
    }
    let centered = p.at(p.omega, p.c).with_center(0.0).with_phase(0.0);
    let phi = profile_at(&centered, grid, &sp, 0.0, 0.0);
    let d = action(&phi, &p.equation, p.omega, p.c);
    Ok(DMatrix {
        d2,
        d,
        p_count: positive_count(&d2),
        fd_step: step,
        richardson_gap: gap,
    })
}

/// Positive eigenvalues of the symmetric part of a 2x2 matrix.
pub fn positive_count(m: &[[Real; 2]; 2]) -> usize {
    let a = m[0][0];
    let d = m[1][1];
    let b = 0.5 * (m[0][1] + m[1][0]);
    let tr = a + d;
    let disc = (0.25 * (a - d).powi(2) + b * b).sqrt();
    [0.5 * tr + disc, 0.5 * tr - disc].iter().filter(|&&l| l > 0.0).count()
}

/// Negative spectrum of the Hessian operator.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HessianCount {
    pub n_negative: usize,
    pub negative: Vec<Real>,
    pub near_zero: Vec<Real>,
    pub window: Real,
}

/// Number of negative eigenvalues of `H_{omega,c}`, excluding the two
/// symmetry modes. The near-zero window is `1e-4` times the largest
/// eigenvalue magnitude.
pub fn n_of_h(p: &Params, grid: Grid) -> Result<HessianCount> {
    let op = assemble_l(p, grid, OperatorForm::Hessian)?;
    let eig = op
        .matrix
        .self_adjoint_eigenvalues(faer::Side::Lower)
        .map_err(|e| LabError::Eigen(format!("{e:?}")))?;
    let scale = eig.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let window = 1e-4 * scale;
    let near_zero: Vec<Real> = eig.iter().copied().filter(|v| v.abs() <= window).collect();
    if near_zero.len() > 2 {
        return Err(LabError::Resolution(format!(
            "{} eigenvalues of H within {window:.2e} of zero (expected 2)",
            near_zero.len()
        )));
    }
    let negative: Vec<Real> = eig.iter().copied().filter(|v| *v < -window).collect();
    Ok(HessianCount {
        n_negative: negative.len(),
        negative,
        near_zero,
        window,
    })
}

/// Classification from the counts `p(d'')` and `n(H)`.
pub fn gss_classify(p_count: usize, n_count: usize, det: Real) -> Verdict {
    if det.abs() < 1e-6 {
        Verdict::Inconclusive
    } else if p_count == n_count {
        Verdict::Stable
    } else if n_count >= p_count && (n_count - p_count) % 2 == 1 {
        Verdict::Unstable
    } else {
        Verdict::Inconclusive
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StabilityReport {
    pub energy: Real,
    pub mass: Real,
    pub momentum: Real,
    pub action: Real,
    pub d: Real,
    pub d2: [[Real; 2]; 2],
    pub p_count: usize,
    pub n_count: usize,
    pub verdict: Verdict,
    pub fd_step: Real,
    pub richardson_gap: Real,
    pub hessian_negative: Vec<Real>,
    pub hessian_near_zero: Vec<Real>,
}

/// Full conserved-quantity and counting report at one parameter point.
pub fn classify(p: &Params, grid: Grid) -> Result<StabilityReport> {
    let centered = p.with_center(0.0).with_phase(0.0);
    let sp = Spectral::new(grid);
    let phi = crate::soliton::soliton_profile(&centered, grid)?;
    let inv = Invariants::of(&phi, &p.equation, &sp);
    let dm = d_matrix(&centered, grid, None)?;
    let h = n_of_h(&centered, grid)?;
    if dm.p_count > h.n_negative {
        log::warn!(
            "p(d'') = {} exceeds n(H) = {}; resolution is likely insufficient",
            dm.p_count,
            h.n_negative
        );
    }
    Ok(StabilityReport {
        energy: inv.energy,
        mass: inv.mass,
        momentum: inv.momentum,
        action: inv.energy + p.omega * inv.mass + p.c * inv.momentum,
        d: dm.d,
        d2: dm.d2,
        p_count: dm.p_count,
        n_count: h.n_negative,
        verdict: gss_classify(dm.p_count, h.n_negative, dm.det()),
        fd_step: dm.fd_step,
        richardson_gap: dm.richardson_gap,
        hessian_negative: h.negative,
        hessian_near_zero: h.near_zero,
    })
}
