//! Orbital-instability experiments: modulation fits against the soliton
//! family, single and multi-soliton escape runs and the interaction decay of
//! separating solitons.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::approx::{fit_rate, nonlinear_n};
use crate::error::{LabError, Result};
use crate::evolution::{EvolutionConfig, Stepper};
use crate::grid::{ComplexField, Grid};
use crate::linearized::UnstableMode;
use crate::soliton::{profile_at, v_star};
use crate::spectral::Spectral;
use crate::{Params, Real, C64};

/// Interval `[center - radius, center + radius]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Real,
    pub radius: Real,
}

impl Ball {
    fn contains(&self, grid: &Grid, x: Real) -> bool {
        grid.wrap(x - self.center).abs() <= self.radius
    }
}

/// Best fit `e^{i theta} phi(x - y)` of a field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModulationFit {
    pub y: Real,
    pub theta: Real,
    pub distance: Real,
    pub restricted: Option<Ball>,
}

/// Cached transforms of one centered profile for repeated fits.
pub struct Modulator {
    sp: Spectral,
    phi: ComplexField,
    phi_hat: Vec<C64>,
    density_hat: Vec<C64>,
}

const GOLDEN: Real = 0.618_033_988_749_894_8;

fn golden_max(mut a: Real, mut b: Real, f: impl Fn(Real) -> Real, tol: Real) -> Real {
    let mut c = b - GOLDEN * (b - a);
    let mut d = a + GOLDEN * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - GOLDEN * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + GOLDEN * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

impl Modulator {
    pub fn new(p: &Params, grid: Grid) -> Result<Self> {
        p.validate()?;
        let sp = Spectral::new(grid);
        let phi = profile_at(p, grid, &sp, 0.0, 0.0);
        let phi_hat = sp.fft(&phi.values);
        let density: Vec<C64> = phi.values.iter().map(|v| C64::new(v.norm_sqr(), 0.0)).collect();
        let density_hat = sp.fft(&density);
        Ok(Self {
            sp,
            phi,
            phi_hat,
            density_hat,
        })
    }

    pub fn profile(&self) -> &ComplexField {
        &self.phi
    }

    /// `e^{i theta} phi(x - y)`.
    pub fn member(&self, y: Real, theta: Real) -> ComplexField {
        let rot = C64::from_polar(1.0, theta);
        ComplexField {
            grid: self.phi.grid,
            values: self.sp.shift(&self.phi.values, y).into_iter().map(|z| rot * z).collect(),
        }
    }

    /// Band-limited interpolant of the cross-correlation `sum_k prod_k e^{i k y}`
    /// and its `y`-derivatives up to `order`.
    fn correlate(&self, prod: &[C64], y: Real, order: usize) -> [C64; 3] {
        let g = self.phi.grid;
        let ny = g.n() / 2;
        let mut out = [C64::new(0.0, 0.0); 3];
        for (j, (z, &k)) in prod.iter().zip(self.sp.wavenumbers()).enumerate() {
            if j == ny {
                let v = z * (k * y).cos();
                out[0] += v;
                if order >= 2 {
                    out[2] -= v * k * k;
                }
            } else {
                let v = z * C64::from_polar(1.0, k * y);
                out[0] += v;
                if order >= 1 {
                    out[1] += v * C64::new(0.0, k);
                }
                if order >= 2 {
                    out[2] -= v * k * k;
                }
            }
        }
        let s = g.dx() / g.n() as Real;
        out.map(|z| z * s)
    }

    fn correlate_at(&self, prod: &[C64], y: Real) -> C64 {
        self.correlate(prod, y, 0)[0]
    }

    /// First and second derivative of `|C(y)|`.
    fn objective_derivatives(&self, prod: &[C64], y: Real) -> (Real, Real) {
        let [c, c1, c2] = self.correlate(prod, y, 2);
        let a = c.norm();
        let r = (c.conj() * c1).re;
        (r / a, (c1.norm_sqr() + (c.conj() * c2).re) / a - r * r / (a * a * a))
    }

    fn grid_shift(&self, m: usize) -> Real {
        let g = self.phi.grid;
        let n = g.n();
        let s = if m > n / 2 { m as isize - n as isize } else { m as isize };
        s as Real * g.dx()
    }

    /// Unrestricted fit over all translations and phases.
    pub fn fit(&self, u: &ComplexField) -> Result<ModulationFit> {
        self.fit_in(u, None, None)
    }

    /// Fit with the distance measured on `ball` only.
    pub fn fit_restricted(&self, u: &ComplexField, ball: Ball) -> Result<ModulationFit> {
        self.fit_in(u, Some(ball), None)
    }

    /// Restricted fit with the translation searched within `search` of `ball.center`.
    pub fn fit_window(&self, u: &ComplexField, ball: Ball, search: Real) -> Result<ModulationFit> {
        self.fit_in(u, Some(ball), Some(search))
    }

    fn fit_in(&self, u: &ComplexField, ball: Option<Ball>, search: Option<Real>) -> Result<ModulationFit> {
        let grid = self.phi.grid;
        if u.grid != grid {
            return Err(LabError::GridMismatch);
        }
        let n = grid.n();
        let mask: Vec<Real> = match ball {
            Some(b) => grid.xs().map(|x| if b.contains(&grid, x) { 1.0 } else { 0.0 }).collect(),
            None => vec![1.0; n],
        };
        let masked: Vec<C64> = u.values.iter().zip(&mask).map(|(v, m)| v * m).collect();
        let uh = self.sp.fft(&masked);
        let prod: Vec<C64> = uh.iter().zip(&self.phi_hat).map(|(a, b)| a * b.conj()).collect();
        let corr = self.sp.ifft(&prod);
        // mass of the shifted profile inside the ball, for every shift
        let mass: Vec<Real> = match ball {
            Some(_) => {
                let mh: Vec<C64> = mask.iter().map(|&m| C64::new(m, 0.0)).collect();
                let mh = self.sp.fft(&mh);
                let p: Vec<C64> = mh.iter().zip(&self.density_hat).map(|(a, b)| a * b.conj()).collect();
                self.sp.ifft(&p).iter().map(|z| z.re * grid.dx()).collect()
            }
            None => vec![0.0; n],
        };
        let objective_at = |m: usize| 2.0 * corr[m].norm() * grid.dx() - mass[m];
        let allowed = |y: Real| match (ball, search) {
            (Some(b), Some(s)) => grid.wrap(y - b.center).abs() <= s,
            _ => true,
        };
        let best = (0..n)
            .filter(|&m| allowed(self.grid_shift(m)))
            .max_by(|&a, &b| objective_at(a).total_cmp(&objective_at(b)))
            .ok_or_else(|| LabError::Fit("empty search window".into()))?;
        let y0 = self.grid_shift(best);
        let dx = grid.dx();
        let (y, theta) = match ball {
            None => {
                let objective = |y: Real| self.correlate_at(&prod, y).norm();
                let mut y = golden_max(y0 - dx, y0 + dx, objective, 1e-8 * dx);
                // Newton polish on the stationarity condition
                for _ in 0..4 {
                    let (g1, g2) = self.objective_derivatives(&prod, y);
                    if !(g2 < 0.0) {
                        break;
                    }
                    let next = y - g1 / g2;
                    // the objective is flat to roundoff near the top, so only
                    // reject steps that clearly lose
                    let base = objective(y);
                    if (next - y0).abs() > dx || objective(next) < base * (1.0 - 1e-12) {
                        break;
                    }
                    let step = (next - y).abs();
                    y = next;
                    if step < 1e-15 * dx.max(y.abs()) {
                        break;
                    }
                }
                (y, self.correlate_at(&prod, y).arg())
            }
            Some(b) => {
                // masked overlap and mass of the exactly shifted profile
                let inside: Vec<bool> = grid.xs().map(|x| b.contains(&grid, x)).collect();
                let overlap = |y: Real| -> (C64, Real) {
                    let m = self.member(y, 0.0);
                    let mut c = C64::new(0.0, 0.0);
                    let mut q = 0.0;
                    for ((v, w), &k) in u.values.iter().zip(&m.values).zip(&inside) {
                        if k {
                            c += v * w.conj();
                            q += w.norm_sqr();
                        }
                    }
                    (c * dx, q * dx)
                };
                let objective = |y: Real| {
                    let (c, q) = overlap(y);
                    2.0 * c.norm() - q
                };
                let y = golden_max(y0 - dx, y0 + dx, objective, 1e-9 * dx);
                (y, overlap(y).0.arg())
            }
        };
        let distance = self.distance(u, y, theta, ball);
        let mut fit = ModulationFit {
            y,
            theta,
            distance,
            restricted: ball,
        };
        // never report worse than the trivial alignment
        let trivial = self.distance(u, 0.0, 0.0, ball);
        if trivial < fit.distance && allowed(0.0) {
            fit = ModulationFit {
                y: 0.0,
                theta: 0.0,
                distance: trivial,
                restricted: ball,
            };
        }
        Ok(fit)
    }

    /// `||u - e^{i theta} phi(. - y)||` on the ball (or the whole grid).
    pub fn distance(&self, u: &ComplexField, y: Real, theta: Real, ball: Option<Ball>) -> Real {
        let g = u.grid;
        let diff = u.sub(&self.member(y, theta));
        match ball {
            Some(b) => diff.mass_where(|x| b.contains(&g, x)).sqrt(),
            None => diff.norm_l2(),
        }
    }
}

/// Distance from `u` to the orbit `{e^{i theta} phi(. - y)}` of `p`.
pub fn modulation_distance(u: &ComplexField, p: &Params, restricted: Option<Ball>) -> Result<ModulationFit> {
    let m = Modulator::new(p, u.grid)?;
    match restricted {
        Some(b) => m.fit_restricted(u, b),
        None => m.fit(u),
    }
}

/// Fit of a sum of solitons.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MultiFit {
    /// Per-component fits; `distance` is the window distance.
    pub components: Vec<ModulationFit>,
    /// `||u - sum_j e^{i theta_j} phi_j(. - y_j)||_{L^2}`.
    pub distance: Real,
    /// Whether the windows overlapped and the joint fallback ran.
    pub overlapped: bool,
}

/// Window radius `8/h` around each soliton.
pub fn window_radius(p: &Params) -> Real {
    8.0 / p.h()
}

/// Greedy window fits around predicted centers; joint coordinate descent
/// when windows overlap.
pub fn fit_multi(u: &ComplexField, mods: &[Modulator], balls: &[Ball]) -> Result<MultiFit> {
    if mods.len() != balls.len() || mods.is_empty() {
        return Err(LabError::Invalid("one window per soliton required".into()));
    }
    let g = u.grid;
    if mods.len() == 1 {
        let f = mods[0].fit(u)?;
        return Ok(MultiFit {
            distance: f.distance,
            components: vec![f],
            overlapped: false,
        });
    }
    let mut overlapped = false;
    for (j, a) in balls.iter().enumerate() {
        for b in &balls[j + 1..] {
            if g.wrap(a.center - b.center).abs() < a.radius + b.radius {
                overlapped = true;
            }
        }
    }
    let mut comps: Vec<ModulationFit> = mods
        .iter()
        .zip(balls)
        .map(|(m, b)| m.fit_window(u, *b, 0.5 * b.radius))
        .collect::<Result<_>>()?;
    if overlapped {
        log::warn!("soliton windows overlap; falling back to joint coordinate descent");
        for _ in 0..5 {
            for j in 0..mods.len() {
                let mut rest = u.clone();
                for (k, (m, c)) in mods.iter().zip(&comps).enumerate() {
                    if k != j {
                        rest = rest.sub(&m.member(c.y, c.theta));
                    }
                }
                comps[j] = mods[j].fit_window(&rest, balls[j], 0.5 * balls[j].radius)?;
            }
        }
    }
    let mut total = u.clone();
    for (m, c) in mods.iter().zip(&comps) {
        total = total.sub(&m.member(c.y, c.theta));
    }
    Ok(MultiFit {
        components: comps,
        distance: total.norm_l2(),
        overlapped,
    })
}

/// Settings of the single-soliton escape runs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EscapeConfig {
    pub amplitudes: Vec<Real>,
    /// Exit threshold; default `1e-2 ||phi||`.
    pub epsilon: Option<Real>,
    /// Default `12/rho`.
    pub t_max: Option<Real>,
    /// Time between modulation checks; default `0.05/rho`.
    pub check_every: Option<Real>,
    pub dt: Option<Real>,
}

impl EscapeConfig {
    /// `a_n = 2^{-n} a0` for `n = 0..count`.
    pub fn halving(a0: Real, count: usize) -> Self {
        Self {
            amplitudes: (0..count).map(|n| a0 * 0.5f64.powi(n as i32)).collect(),
            epsilon: None,
            t_max: None,
            check_every: None,
            dt: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EscapeRecord {
    pub a: Real,
    pub initial_distance: Real,
    /// First check time with distance `>= epsilon`; `None` if not reached.
    pub exit_time: Option<Real>,
    /// Distance at exit (or at `t_max`).
    pub exit_distance: Real,
    pub max_distance: Real,
    /// Rate fitted to `||u(t) - R(t)||` in the linear regime.
    pub fitted_rate: Option<Real>,
    pub blow_up: Option<Real>,
    /// Largest window distance of the unperturbed solitons (multi runs).
    pub max_other_window: Option<Real>,
    pub separation_violated: bool,
    /// `(t, total distance, window distances)` at every check.
    #[serde(skip)]
    pub history: Vec<(Real, Real, Vec<Real>)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EscapeReport {
    pub rho: Real,
    pub epsilon: Real,
    pub t_max: Real,
    /// `H^2` norm of the unit-`L^2` growing direction.
    pub z_grow_h2: Real,
    pub records: Vec<EscapeRecord>,
}

impl EscapeReport {
    /// `t_exit(a/2) - t_exit(a)` for consecutive exited runs sorted by decreasing `a`.
    pub fn exit_spacings(&self) -> Vec<Real> {
        let mut rec: Vec<&EscapeRecord> = self.records.iter().filter(|r| r.a > 0.0).collect();
        rec.sort_by(|a, b| b.a.total_cmp(&a.a));
        rec.windows(2)
            .filter_map(|w| match (w[0].exit_time, w[1].exit_time) {
                (Some(t0), Some(t1)) => Some((t1 - t0) * (0.5f64).ln() / (w[1].a / w[0].a).ln()),
                _ => None,
            })
            .collect()
    }

    /// Spacing predicted by linear growth, `ln 2 / rho`.
    pub fn predicted_spacing(&self) -> Real {
        std::f64::consts::LN_2 / self.rho
    }
}

/// Components of a tracked run: soliton `j` sits at `centers[j] + drift[j] (t - t0)`
/// in the computational frame.
struct Tracked<'a> {
    params: &'a [Params],
    mods: Vec<Modulator>,
    centers: Vec<Real>,
    drift: Vec<Real>,
    radius: Vec<Real>,
    min_separation: Real,
}

impl Tracked<'_> {
    fn balls(&self, grid: &Grid, tau: Real) -> Vec<Ball> {
        self.centers
            .iter()
            .zip(&self.drift)
            .zip(&self.radius)
            .map(|((&c, &v), &r)| Ball {
                center: grid.wrap(c + v * tau),
                radius: r,
            })
            .collect()
    }

    fn separated(&self, grid: &Grid, tau: Real) -> bool {
        let b = self.balls(grid, tau);
        b.iter().enumerate().all(|(j, x)| {
            b[j + 1..]
                .iter()
                .all(|y| grid.wrap(x.center - y.center).abs() >= self.min_separation)
        })
    }

    fn reference(&self, grid: Grid, sp: &Spectral, t: Real, tau: Real) -> ComplexField {
        let mut r = ComplexField::zeros(grid);
        for (p, b) in self.params.iter().zip(self.balls(&grid, tau)) {
            r = r.add(&profile_at(p, grid, sp, b.center, p.theta0 + p.omega * t));
        }
        r
    }
}

struct RunSpec {
    t0: Real,
    t_max: Real,
    dt: Real,
    check_every: Real,
    epsilon: Real,
    frame: Real,
    a: Real,
    perturbed: usize,
}

fn run_tracked(u0: &ComplexField, tr: &Tracked<'_>, spec: &RunSpec) -> Result<EscapeRecord> {
    let grid = u0.grid;
    let eq = tr.params[0].equation;
    let mut cfg = EvolutionConfig::new(&grid, spec.t0, spec.t0 + spec.t_max).with_frame(spec.frame);
    cfg.dt = spec.dt;
    cfg.log_every = 0;
    let mut stepper = Stepper::new(u0, &eq, &cfg)?;
    let sp = Spectral::new(grid);
    let every = ((spec.check_every / stepper.dt().abs()).round() as usize).max(1);
    let mut history = Vec::new();
    let mut growth = Vec::new();
    let cap = (20.0 * spec.a).min(0.5 * spec.epsilon);
    let mut record = EscapeRecord {
        a: spec.a,
        initial_distance: 0.0,
        exit_time: None,
        exit_distance: 0.0,
        max_distance: 0.0,
        fitted_rate: None,
        blow_up: None,
        max_other_window: (tr.params.len() > 1).then_some(0.0),
        separation_violated: false,
        history: Vec::new(),
    };
    loop {
        let t = stepper.time();
        let tau = t - spec.t0;
        if !tr.separated(&grid, tau) {
            record.separation_violated = true;
            log::warn!("separation violated at t = {t:.3}");
            break;
        }
        let u = stepper.state();
        let balls = tr.balls(&grid, tau);
        let fit = fit_multi(&u, &tr.mods, &balls)?;
        let windows: Vec<Real> = fit.components.iter().map(|c| c.distance).collect();
        let d = fit.distance;
        if history.is_empty() {
            record.initial_distance = d;
        }
        record.max_distance = record.max_distance.max(d);
        record.exit_distance = d;
        if let Some(m) = record.max_other_window.as_mut() {
            for (j, w) in windows.iter().enumerate() {
                if j != spec.perturbed {
                    *m = m.max(*w);
                }
            }
        }
        if spec.a > 0.0 {
            let dev = u.sub(&tr.reference(grid, &sp, t, tau)).norm_l2();
            if dev <= cap {
                growth.push((tau, dev));
            }
        }
        history.push((tau, d, windows));
        if d >= spec.epsilon {
            record.exit_time = Some(tau);
            break;
        }
        if stepper.finished() {
            break;
        }
        let mut blown = false;
        for _ in 0..every {
            match stepper.advance() {
                Ok(true) => {}
                Ok(false) => break,
                Err(LabError::BlowUp { t }) => {
                    record.blow_up = Some(t);
                    blown = true;
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        if blown {
            break;
        }
    }
    if growth.len() >= 3 {
        record.fitted_rate = fit_rate(growth).ok().map(|f| -f.rate);
    }
    record.history = history;
    Ok(record)
}

fn embed_mode(mode: &UnstableMode, grid: Grid, center: Real, phase: Real) -> ComplexField {
    let z = mode.growing_field();
    let src = Spectral::new(z.grid);
    let field = if z.grid == grid {
        z
    } else {
        src.resample(&z.values, grid)
    };
    let sp = Spectral::new(grid);
    let rot = C64::from_polar(1.0, phase);
    ComplexField {
        grid,
        values: sp.shift(&field.values, center).into_iter().map(|v| rot * v).collect(),
    }
}

/// Perturb the soliton along the growing mode, evolve forward in the
/// comoving frame and record when the modulation distance reaches epsilon.
pub fn escape_experiment(p: &Params, mode: &UnstableMode, cfg: &EscapeConfig) -> Result<EscapeReport> {
    let rho = mode.rho();
    if !(rho > 0.0) {
        return Err(LabError::NoUnstableMode);
    }
    let grid = mode.z.grid;
    let p0 = p.with_center(0.0).with_phase(0.0);
    let sp = Spectral::new(grid);
    let phi = profile_at(&p0, grid, &sp, 0.0, 0.0);
    let epsilon = cfg.epsilon.unwrap_or(1e-2 * phi.norm_l2());
    let t_max = cfg.t_max.unwrap_or(12.0 / rho);
    let z = mode.growing_field();
    let z_grow_h2 = sp.sobolev_norm(&z.values, 2);
    log::info!("growing direction: ||Z||_H2 = {z_grow_h2:.4}");
    let params = [p0];
    let records = cfg
        .amplitudes
        .par_iter()
        .map(|&a| {
            let tr = Tracked {
                params: &params,
                mods: vec![Modulator::new(&p0, grid)?],
                centers: vec![0.0],
                drift: vec![0.0],
                radius: vec![0.5 * grid.length()],
                min_separation: 0.0,
            };
            let u0 = phi.add(&z.scale(C64::new(a, 0.0)));
            run_tracked(
                &u0,
                &tr,
                &RunSpec {
                    t0: 0.0,
                    t_max,
                    dt: cfg.dt.unwrap_or(grid.dt()),
                    check_every: cfg.check_every.unwrap_or(0.05 / rho),
                    epsilon,
                    frame: p0.c,
                    a,
                    perturbed: 0,
                },
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EscapeReport {
        rho,
        epsilon,
        t_max,
        z_grow_h2,
        records,
    })
}

/// Multi-soliton configuration; soliton 0 carries the perturbation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MultiConfig {
    pub params: Vec<Params>,
    /// Perturbation amplitude along the growing mode of soliton 0.
    pub a: Real,
    /// Exit threshold; default `1e-2 ||phi_0||`.
    pub epsilon: Option<Real>,
    /// Minimal `v_*` accepted (stand-in for the unquantified speed threshold).
    pub speed_threshold: Real,
    /// Tail rate of the unstable mode entering `h_*`.
    pub alpha: Real,
    /// Start time `t_i` of the run.
    pub t_initial: Real,
    pub t_max: Option<Real>,
    pub check_every: Option<Real>,
    pub dt: Option<Real>,
}

impl MultiConfig {
    pub fn v_star(&self) -> Option<Real> {
        v_star(&self.params)
    }

    /// `min(min_j h_j, 2 alpha)`.
    pub fn h_star(&self) -> Real {
        self.params.iter().map(|p| p.h()).fold(2.0 * self.alpha, Real::min)
    }

    /// Minimal allowed distance between centers, `8/h_*`.
    pub fn min_separation(&self) -> Real {
        8.0 / self.h_star()
    }
}

/// Multi-soliton record with the interaction scales used.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MultiRecord {
    pub record: EscapeRecord,
    pub h_star: Real,
    pub v_star: Option<Real>,
    pub alpha: Real,
    pub epsilon: Real,
}

/// Perturb soliton 0 of a well-separated sum along its growing mode at
/// `t_initial` and evolve in its comoving frame.
pub fn multi_escape_experiment(mc: &MultiConfig, mode: &UnstableMode, grid: Grid) -> Result<MultiRecord> {
    let rho = mode.rho();
    if !(rho > 0.0) {
        return Err(LabError::NoUnstableMode);
    }
    if mc.params.is_empty() {
        return Err(LabError::Invalid("no solitons".into()));
    }
    if let Some(v) = mc.v_star() {
        if v < mc.speed_threshold {
            return Err(LabError::Separation(format!(
                "v_* = {v:.4} below the configured threshold {}",
                mc.speed_threshold
            )));
        }
    }
    let ti = mc.t_initial;
    let frame = mc.params[0].c;
    let centers: Vec<Real> = mc.params.iter().map(|p| grid.wrap(p.x0 + p.c * ti)).collect();
    let tr = Tracked {
        params: &mc.params,
        mods: mc.params.iter().map(|p| Modulator::new(p, grid)).collect::<Result<_>>()?,
        centers: centers.clone(),
        drift: mc.params.iter().map(|p| p.c - frame).collect(),
        radius: mc.params.iter().map(window_radius).collect(),
        min_separation: if mc.params.len() > 1 { mc.min_separation() } else { 0.0 },
    };
    if !tr.separated(&grid, 0.0) {
        return Err(LabError::Separation("solitons not separated at t_initial".into()));
    }
    let sp = Spectral::new(grid);
    let p0 = &mc.params[0];
    let base = tr.reference(grid, &sp, ti, 0.0);
    let pert = embed_mode(mode, grid, centers[0], p0.theta0 + p0.omega * ti);
    let u0 = base.add(&pert.scale(C64::new(mc.a, 0.0)));
    let epsilon = mc.epsilon.unwrap_or(1e-2 * tr.mods[0].profile().norm_l2());
    let record = run_tracked(
        &u0,
        &tr,
        &RunSpec {
            t0: ti,
            t_max: mc.t_max.unwrap_or(12.0 / rho),
            dt: mc.dt.unwrap_or(grid.dt()),
            check_every: mc.check_every.unwrap_or(0.05 / rho),
            epsilon,
            frame,
            a: mc.a,
            perturbed: 0,
        },
    )?;
    Ok(MultiRecord {
        record,
        h_star: mc.h_star(),
        v_star: mc.v_star(),
        alpha: mc.alpha,
        epsilon,
    })
}

/// Exponential decay of the nonlinear cross term of separating solitons.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InteractionFit {
    /// Fitted rate of `||f(sum R_j) - sum f(R_j)||_{L^2}`.
    pub rate: Real,
    pub h_star: Real,
    pub v_star: Real,
    /// `(t, cross term)`.
    pub samples: Vec<(Real, Real)>,
    /// Fitted rate of `max_{j<k} ||R_j R_k||_{L^2}`.
    pub pairwise_rate: Real,
    /// `max_t max_{j<k} ||R_j R_k|| e^{h_* v_* t}`.
    pub pairwise_constant: Real,
}

impl InteractionFit {
    pub fn bound(&self) -> Real {
        self.h_star * self.v_star
    }
}

/// Cross term of the nonlinearity along the free superposition of `params`
/// at the given times. `alpha` enters `h_*` when given.
pub fn interaction_decay(params: &[Params], grid: Grid, alpha: Option<Real>, times: &[Real]) -> Result<InteractionFit> {
    for p in params {
        p.validate()?;
    }
    let h_star = params
        .iter()
        .map(|p| p.h())
        .fold(alpha.map_or(Real::INFINITY, |a| 2.0 * a), Real::min);
    let sp = Spectral::new(grid);
    let fields_at = |t: Real| -> Vec<ComplexField> {
        params
            .iter()
            .map(|p| profile_at(p, grid, &sp, grid.wrap(p.x0 + p.c * t), p.theta0 + p.omega * t))
            .collect()
    };
    let Some(vs) = v_star(params) else {
        // a single soliton has no cross term
        return Ok(InteractionFit {
            rate: Real::INFINITY,
            h_star,
            v_star: 0.0,
            samples: times.iter().map(|&t| (t, 0.0)).collect(),
            pairwise_rate: Real::INFINITY,
            pairwise_constant: 0.0,
        });
    };
    if vs <= 0.0 {
        return Err(LabError::Separation("two solitons share a speed".into()));
    }
    let eq = params[0].equation;
    let mut samples = Vec::new();
    let mut pairs = Vec::new();
    let mut constant: Real = 0.0;
    for &t in times {
        let fs = fields_at(t);
        let mut sum = ComplexField::zeros(grid);
        let mut separate = ComplexField::zeros(grid);
        for f in &fs {
            sum = sum.add(f);
            separate = separate.add(&nonlinear_n(f, &eq));
        }
        let cross = nonlinear_n(&sum, &eq).sub(&separate).norm_l2();
        samples.push((t, cross));
        let mut pw: Real = 0.0;
        for (j, a) in fs.iter().enumerate() {
            for b in &fs[j + 1..] {
                pw = pw.max(a.zip_map(b, |x, y| x * y).norm_l2());
            }
        }
        pairs.push((t, pw));
        constant = constant.max(pw * (h_star * vs * t.abs()).exp());
    }
    let floor = 1e-13;
    let usable = |s: &[(Real, Real)]| -> Vec<(Real, Real)> { s.iter().copied().filter(|(_, q)| *q > floor).collect() };
    let rate = fit_rate(usable(&samples))?.rate;
    let pairwise_rate = fit_rate(usable(&pairs))?.rate;
    Ok(InteractionFit {
        rate,
        h_star,
        v_star: vs,
        samples,
        pairwise_rate,
        pairwise_constant: constant,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_finds_parabola_top() {
        let y = golden_max(-1.0, 2.0, |x| -(x - 0.3) * (x - 0.3), 1e-12);
        assert!((y - 0.3).abs() < 1e-9);
    }

    #[test]
    fn ball_wraps() {
        let g = Grid::new(10.0, 16).unwrap();
        let b = Ball {
            center: 4.5,
            radius: 1.0,
        };
        assert!(b.contains(&g, -4.8));
        assert!(!b.contains(&g, 0.0));
    }
}
