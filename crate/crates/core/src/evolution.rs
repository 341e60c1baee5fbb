//! Time integration: the PDE itself, the gauge system and the linearized flow.

use serde::{Deserialize, Serialize};

use crate::conserved::Invariants;
use crate::error::{LabError, Result};
use crate::gauge::{constraint, from_gauge_with, gauge_rhs, to_gauge_with, GaugePair};
use crate::grid::{ComplexField, Grid};
use crate::linearized::BlockOperator;
use crate::params::Equation;
use crate::spectral::Spectral;
use crate::{Real, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Integrating-factor RK4 on `u`.
    IntegratingFactorRk4,
    /// Same integrator on the gauge pair `(phi, psi)`.
    GaugeSystem,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvolutionConfig {
    pub scheme: Scheme,
    /// Time step; its sign is taken from the span.
    pub dt: Real,
    pub t_start: Real,
    pub t_end: Real,
    /// Fraction of `k_max` kept in the nonlinear term.
    pub dealias: Real,
    /// Steps between conserved-quantity log entries (0 disables).
    pub log_every: usize,
    /// Steps between constraint re-impositions in the gauge system.
    pub reimpose_every: usize,
    /// Steps between stored snapshots (0 keeps only the final state).
    pub snapshot_every: usize,
    /// Velocity of the computational frame `x' = x - v t`.
    pub frame_velocity: Real,
}

impl EvolutionConfig {
    /// Defaults for a grid: `dt = 0.2 dx^2`, 2/3 dealiasing.
    pub fn new(grid: &Grid, t_start: Real, t_end: Real) -> Self {
        Self {
            scheme: Scheme::IntegratingFactorRk4,
            dt: grid.dt().abs(),
            t_start,
            t_end,
            dealias: 2.0 / 3.0,
            log_every: 100,
            reimpose_every: 100,
            snapshot_every: 0,
            frame_velocity: 0.0,
        }
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn with_frame(mut self, v: Real) -> Self {
        self.frame_velocity = v;
        self
    }

    /// Number of steps and the signed step that lands exactly on `t_end`.
    pub fn steps(&self, grid: &Grid) -> Result<(usize, Real)> {
        let span = self.t_end - self.t_start;
        if !span.is_finite() || !self.dt.is_finite() || self.dt == 0.0 {
            return Err(LabError::Invalid("time span and step must be finite".into()));
        }
        let bound = 0.5 * grid.dx() * grid.dx();
        if self.dt.abs() > bound * (1.0 + 1e-12) {
            return Err(LabError::TimeStep {
                dt: self.dt.abs(),
                bound,
            });
        }
        if span == 0.0 {
            return Ok((0, 0.0));
        }
        let n = (span.abs() / self.dt.abs()).ceil().max(1.0) as usize;
        Ok((n, span / n as Real))
    }
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub t: Real,
    pub u: ComplexField,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LogEntry {
    pub t: Real,
    pub invariants: Invariants,
    /// Largest relative change of `E`, `Q`, `P` since the start.
    pub drift: Real,
    /// Constraint defect before re-imposition (gauge system only).
    pub constraint_defect: Option<Real>,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub snapshots: Vec<Snapshot>,
    pub log: Vec<LogEntry>,
    /// Last finite state.
    pub last: Snapshot,
    /// Time at which the state stopped being finite, if it did.
    pub blow_up: Option<Real>,
    pub steps: usize,
}

impl Trajectory {
    pub fn max_drift(&self) -> Real {
        self.log.iter().map(|e| e.drift).fold(0.0, Real::max)
    }
}

fn is_finite(v: &[C64]) -> bool {
    v.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Right-hand side `N` of `v_t = (linear) v + N(v)` in Fourier space.
trait Nonlinear {
    fn eval(&mut self, hat: &[Vec<C64>]) -> Vec<Vec<C64>>;
}

/// Lawson integrating-factor RK4 for diagonal linear symbols.
struct IfRk4 {
    half: Vec<C64>,
    full: Vec<C64>,
    dt: Real,
}

impl IfRk4 {
    fn new(symbol: &[C64], dt: Real) -> Self {
        Self {
            half: symbol.iter().map(|s| (s * (0.5 * dt)).exp()).collect(),
            full: symbol.iter().map(|s| (s * dt).exp()).collect(),
            dt,
        }
    }

    fn step(&self, state: &mut [Vec<C64>], rhs: &mut impl Nonlinear) {
        let dt = self.dt;
        let e = &self.half;
        let e2 = &self.full;
        let k1 = rhs.eval(state);
        let a: Vec<Vec<C64>> = state
            .iter()
            .zip(&k1)
            .map(|(v, k)| (0..v.len()).map(|j| e[j] * (v[j] + 0.5 * dt * k[j])).collect())
            .collect();
        let k2 = rhs.eval(&a);
        let b: Vec<Vec<C64>> = state
            .iter()
            .zip(&k2)
            .map(|(v, k)| (0..v.len()).map(|j| e[j] * v[j] + 0.5 * dt * k[j]).collect())
            .collect();
        let k3 = rhs.eval(&b);
        let c: Vec<Vec<C64>> = state
            .iter()
            .zip(&k3)
            .map(|(v, k)| (0..v.len()).map(|j| e2[j] * v[j] + dt * e[j] * k[j]).collect())
            .collect();
        let k4 = rhs.eval(&c);
        for (f, v) in state.iter_mut().enumerate() {
            for j in 0..v.len() {
                v[j] = e2[j] * v[j]
                    + dt / 6.0 * (e2[j] * k1[f][j] + 2.0 * e[j] * (k2[f][j] + k3[f][j]) + k4[f][j]);
            }
        }
    }
}

struct DirectRhs<'a> {
    sp: &'a Spectral,
    sigma: Real,
    b: Real,
    mask: Vec<Real>,
    ik: Vec<C64>,
}

impl Nonlinear for DirectRhs<'_> {
    fn eval(&mut self, hat: &[Vec<C64>]) -> Vec<Vec<C64>> {
        let h = &hat[0];
        let u = self.sp.ifft(h);
        let dh: Vec<C64> = h.iter().zip(&self.ik).map(|(a, b)| a * b).collect();
        let ux = self.sp.ifft(&dh);
        let i = C64::new(0.0, 1.0);
        let mut n: Vec<C64> = u
            .iter()
            .zip(&ux)
            .map(|(&v, &d)| {
                let a = v.norm_sqr();
                let f = if self.sigma == 1.0 { a } else { a.powf(self.sigma) };
                -f * d + i * self.b * a * a * v
            })
            .collect();
        self.sp.fft_in_place(&mut n);
        n.iter_mut().zip(&self.mask).for_each(|(z, m)| *z *= m);
        vec![n]
    }
}

struct GaugeRhs<'a> {
    sp: &'a Spectral,
    eq: Equation<Real>,
    mask: Vec<Real>,
}

impl Nonlinear for GaugeRhs<'_> {
    fn eval(&mut self, hat: &[Vec<C64>]) -> Vec<Vec<C64>> {
        let phi = self.sp.ifft(&hat[0]);
        let psi = self.sp.ifft(&hat[1]);
        let (p, q) = gauge_rhs(&phi, &psi, &self.eq, self.sp);
        let mi = C64::new(0.0, -1.0);
        [p, q]
            .into_iter()
            .map(|v| {
                let mut w: Vec<C64> = v.into_iter().map(|z| mi * z).collect();
                self.sp.fft_in_place(&mut w);
                w.iter_mut().zip(&self.mask).for_each(|(z, m)| *z *= m);
                w
            })
            .collect()
    }
}

fn dealias_mask(sp: &Spectral, fraction: Real) -> Vec<Real> {
    let cut = fraction * sp.grid().k_max();
    sp.wavenumbers()
        .iter()
        .map(|k| if k.abs() > cut { 0.0 } else { 1.0 })
        .collect()
}

/// Linear symbol `i d_xx + v d_x` in the moving frame.
fn linear_symbol(sp: &Spectral, v: Real) -> Vec<C64> {
    sp.wavenumbers()
        .iter()
        .map(|&k| C64::new(0.0, -k * k + v * k))
        .collect()
}

/// Step-by-step driver of the PDE, usable with early stopping.
pub struct Stepper {
    sp: Spectral,
    eq: Equation<Real>,
    cfg: EvolutionConfig,
    integ: IfRk4,
    state: Vec<Vec<C64>>,
    mask: Vec<Real>,
    ik: Vec<C64>,
    t: Real,
    dt: Real,
    steps_total: usize,
    step: usize,
    reference: Invariants,
    last_defect: Option<Real>,
}

impl Stepper {
    pub fn new(u0: &ComplexField, eq: &Equation<Real>, cfg: &EvolutionConfig) -> Result<Self> {
        let grid = u0.grid;
        let (steps_total, dt) = cfg.steps(&grid)?;
        let sp = Spectral::new(grid);
        let state = match cfg.scheme {
            Scheme::IntegratingFactorRk4 => vec![sp.fft(&u0.values)],
            Scheme::GaugeSystem => {
                let pair = to_gauge_with(u0, eq, &sp);
                vec![sp.fft(&pair.phi.values), sp.fft(&pair.psi.values)]
            }
        };
        let symbol = linear_symbol(&sp, cfg.frame_velocity);
        let mask = dealias_mask(&sp, cfg.dealias);
        let ik = sp.symbol(1);
        let reference = Invariants::of(u0, eq, &sp);
        Ok(Self {
            integ: IfRk4::new(&symbol, if dt == 0.0 { 1.0 } else { dt }),
            sp,
            eq: *eq,
            cfg: cfg.clone(),
            state,
            mask,
            ik,
            t: cfg.t_start,
            dt,
            steps_total,
            step: 0,
            reference,
            last_defect: None,
        })
    }

    /// Start the gauge system from an arbitrary pair.
    pub fn from_pair(pair: &GaugePair, eq: &Equation<Real>, cfg: &EvolutionConfig) -> Result<Self> {
        let sp = Spectral::new(pair.phi.grid);
        let u0 = from_gauge_with(pair, eq, &sp);
        let mut s = Self::new(&u0, eq, &cfg.clone().with_scheme(Scheme::GaugeSystem))?;
        s.state = vec![sp.fft(&pair.phi.values), sp.fft(&pair.psi.values)];
        Ok(s)
    }

    pub fn time(&self) -> Real {
        self.t
    }

    pub fn dt(&self) -> Real {
        self.dt
    }

    pub fn steps_total(&self) -> usize {
        self.steps_total
    }

    pub fn steps_done(&self) -> usize {
        self.step
    }

    pub fn finished(&self) -> bool {
        self.step >= self.steps_total
    }

    pub fn spectral(&self) -> &Spectral {
        &self.sp
    }

    /// Current solution `u` in the computational frame.
    pub fn state(&self) -> ComplexField {
        let grid = self.sp.grid();
        match self.cfg.scheme {
            Scheme::IntegratingFactorRk4 => ComplexField {
                grid,
                values: self.sp.ifft(&self.state[0]),
            },
            Scheme::GaugeSystem => from_gauge_with(&self.pair(), &self.eq, &self.sp),
        }
    }

    /// Current gauge pair (gauge scheme only; otherwise computed from `u`).
    pub fn pair(&self) -> GaugePair {
        let grid = self.sp.grid();
        match self.cfg.scheme {
            Scheme::GaugeSystem => GaugePair {
                phi: ComplexField {
                    grid,
                    values: self.sp.ifft(&self.state[0]),
                },
                psi: ComplexField {
                    grid,
                    values: self.sp.ifft(&self.state[1]),
                },
            },
            Scheme::IntegratingFactorRk4 => to_gauge_with(&self.state(), &self.eq, &self.sp),
        }
    }

    pub fn invariants(&self) -> Invariants {
        Invariants::of(&self.state(), &self.eq, &self.sp)
    }

    pub fn reference_invariants(&self) -> Invariants {
        self.reference
    }

    /// Advance one step. Returns `false` once the span is exhausted.
    pub fn advance(&mut self) -> Result<bool> {
        if self.finished() {
            return Ok(false);
        }
        match self.cfg.scheme {
            Scheme::IntegratingFactorRk4 => {
                let mut rhs = DirectRhs {
                    sp: &self.sp,
                    sigma: self.eq.sigma(),
                    b: self.eq.quintic(),
                    mask: self.mask.clone(),
                    ik: self.ik.clone(),
                };
                self.integ.step(&mut self.state, &mut rhs);
            }
            Scheme::GaugeSystem => {
                let mut rhs = GaugeRhs {
                    sp: &self.sp,
                    eq: self.eq,
                    mask: self.mask.clone(),
                };
                self.integ.step(&mut self.state, &mut rhs);
            }
        }
        self.step += 1;
        self.t = self.cfg.t_start + self.step as Real * self.dt;
        if !self.state.iter().all(|v| is_finite(v)) {
            return Err(LabError::BlowUp { t: self.t });
        }
        if self.cfg.scheme == Scheme::GaugeSystem
            && self.cfg.reimpose_every > 0
            && self.step % self.cfg.reimpose_every == 0
        {
            self.reimpose();
        }
        Ok(true)
    }

    /// Replace `psi` by the constraint built from `phi`; returns the defect.
    pub fn reimpose(&mut self) -> Real {
        let pair = self.pair();
        let psi = constraint(&pair.phi, &self.eq, &self.sp);
        let defect = psi.sub(&pair.psi).norm_l2();
        log::debug!("constraint defect {defect:.3e} at t = {:.4}", self.t);
        self.state[1] = self.sp.fft(&psi.values);
        self.last_defect = Some(defect);
        defect
    }

    /// Constraint defect `|psi - (phi_x - (i/2)|phi|^{2 sigma} phi)|` without modifying the state.
    pub fn constraint_defect(&self) -> Real {
        let pair = self.pair();
        constraint(&pair.phi, &self.eq, &self.sp).sub(&pair.psi).norm_l2()
    }

    fn log_entry(&self) -> LogEntry {
        let inv = self.invariants();
        LogEntry {
            t: self.t,
            invariants: inv,
            drift: inv.drift_from(&self.reference),
            constraint_defect: self.last_defect,
        }
    }

    /// Run to the end of the span, logging and storing snapshots.
    pub fn run(mut self) -> Trajectory {
        let grid = self.sp.grid();
        let mut log = vec![self.log_entry()];
        let mut snapshots = Vec::new();
        if self.cfg.snapshot_every > 0 {
            snapshots.push(Snapshot {
                t: self.t,
                u: self.state(),
            });
        }
        let mut last = Snapshot {
            t: self.t,
            u: self.state(),
        };
        let mut blow_up = None;
        while !self.finished() {
            match self.advance() {
                Ok(_) => {}
                Err(_) => {
                    blow_up = Some(self.t);
                    break;
                }
            }
            let k = self.step;
            if self.cfg.log_every > 0 && (k % self.cfg.log_every == 0 || self.finished()) {
                log.push(self.log_entry());
            }
            if self.cfg.snapshot_every > 0 && (k % self.cfg.snapshot_every == 0 || self.finished()) {
                snapshots.push(Snapshot {
                    t: self.t,
                    u: self.state(),
                });
            }
            if self.cfg.snapshot_every == 0 && self.finished() {
                last = Snapshot {
                    t: self.t,
                    u: self.state(),
                };
            }
        }
        if let Some(s) = snapshots.last() {
            if blow_up.is_none() {
                last = s.clone();
            }
        }
        if blow_up.is_some() && last.t == self.cfg.t_start {
            // keep the initial state as last valid one
            last.u.grid = grid;
        }
        Trajectory {
            snapshots,
            log,
            last,
            blow_up,
            steps: self.step,
        }
    }
}

/// Evolve the PDE for `u` (direct integrating-factor scheme).
pub fn evolve_u(u0: &ComplexField, eq: &Equation<Real>, cfg: &EvolutionConfig) -> Result<Trajectory> {
    let cfg = cfg.clone().with_scheme(Scheme::IntegratingFactorRk4);
    Ok(Stepper::new(u0, eq, &cfg)?.run())
}

/// Evolve the gauge system from a pair; snapshots hold `u = from_gauge(phi, psi)`.
pub fn evolve_gauge(pair0: &GaugePair, eq: &Equation<Real>, cfg: &EvolutionConfig) -> Result<Trajectory> {
    Ok(Stepper::from_pair(pair0, eq, cfg)?.run())
}

/// Classical RK4 for `Y' = -L Y` on the dense operator. Returns `(t, Y)`
/// every `record_every` steps.
pub fn evolve_linearized(
    y0: &ComplexField,
    op: &BlockOperator,
    dt: Real,
    t_end: Real,
    record_every: usize,
) -> Result<Vec<(Real, ComplexField)>> {
    let grid = y0.grid;
    let bound_dx = 0.5 * grid.dx() * grid.dx();
    // RK4 covers the imaginary axis up to 2.8; the row-sum norm bounds the spectral radius
    let m = op.dim();
    let norm_inf = (0..m)
        .map(|i| (0..m).map(|j| op.matrix[(i, j)].abs()).sum::<Real>())
        .fold(0.0, Real::max);
    let bound = bound_dx.min(2.8 / norm_inf);
    if dt.abs() > bound {
        return Err(LabError::TimeStep { dt: dt.abs(), bound });
    }
    let n = (t_end.abs() / dt.abs()).ceil().max(1.0) as usize;
    let h = t_end / n as Real;
    let mut y = y0.to_stacked();
    let mut out = vec![(0.0, y0.clone())];
    let f = |v: &[Real]| -> Vec<Real> { op.apply(v).into_iter().map(|z| -z).collect() };
    let axpy = |a: &[Real], s: Real, b: &[Real]| -> Vec<Real> { a.iter().zip(b).map(|(x, y)| x + s * y).collect() };
    for step in 1..=n {
        let k1 = f(&y);
        let k2 = f(&axpy(&y, 0.5 * h, &k1));
        let k3 = f(&axpy(&y, 0.5 * h, &k2));
        let k4 = f(&axpy(&y, h, &k3));
        for j in 0..y.len() {
            y[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        if record_every > 0 && (step % record_every == 0 || step == n) {
            out.push((step as Real * h, ComplexField::from_stacked(grid, &y)));
        }
    }
    if record_every == 0 {
        out.push((t_end, ComplexField::from_stacked(grid, &y)));
    }
    Ok(out)
}
