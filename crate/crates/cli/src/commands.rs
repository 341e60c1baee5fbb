//! One pipeline per subcommand.

use dnls_core::approx::{build_w, correction_decay, dressed_norm_decay, err_residual, residual_decay, RateFit};
use dnls_core::conserved::classify;
use dnls_core::evolution::Stepper;
use dnls_core::experiments::{escape_experiment, interaction_decay, multi_escape_experiment, MultiConfig};
use dnls_core::linearized::{
    assemble_l, eigen_spectrum, resolvent_residual, resolvent_solve, BlockOperator, FilterOptions, OperatorForm,
    SpectrumReport, UnstableMode,
};
use dnls_core::soliton::{soliton_profile, summarize, ProfileSummary};
use dnls_core::{ComplexField, Grid, LabError, PairField, Params, Real, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{Command, RunConfig};
use crate::error::{CliError, Result};
use crate::output::Artifacts;

#[derive(Serialize)]
struct FieldRow {
    x: Real,
    re: Real,
    im: Real,
    modulus: Real,
}

fn field_rows(u: &ComplexField) -> impl Iterator<Item = FieldRow> + '_ {
    u.grid.xs().zip(&u.values).map(|(x, z)| FieldRow {
        x,
        re: z.re,
        im: z.im,
        modulus: z.norm(),
    })
}

#[derive(Serialize)]
struct PairRow {
    x: Real,
    plus_re: Real,
    plus_im: Real,
    minus_re: Real,
    minus_im: Real,
}

fn pair_rows(z: &PairField) -> impl Iterator<Item = PairRow> + '_ {
    z.grid
        .xs()
        .zip(z.plus.iter().zip(&z.minus))
        .map(|(x, (p, m))| PairRow {
            x,
            plus_re: p.re,
            plus_im: p.im,
            minus_re: m.re,
            minus_im: m.im,
        })
}

pub fn run(cfg: &RunConfig, out: &mut Artifacts) -> Result<()> {
    match cfg.command {
        Command::Soliton => soliton(cfg, out),
        Command::Classify => {
            let report = classify(&cfg.params, cfg.grid)?;
            out.json("stability.json", &report)
        }
        Command::Spectrum => spectrum(cfg, out),
        Command::Profile => profile(cfg, out),
        Command::Evolve => evolve(cfg, out),
        Command::Escape => escape(cfg, out),
        Command::MultiEscape => multi_escape(cfg, out),
        Command::Interaction => interaction(cfg, out),
    }
}

#[derive(Serialize)]
struct SolitonOut<'a> {
    params: &'a Params,
    grid: Grid,
    summary: ProfileSummary,
}

fn soliton(cfg: &RunConfig, out: &mut Artifacts) -> Result<()> {
    let phi = soliton_profile(&cfg.params, cfg.grid)?;
    out.csv("profile.csv", field_rows(&phi))?;
    out.json(
        "summary.json",
        &SolitonOut {
            params: &cfg.params,
            grid: cfg.grid,
            summary: summarize(&cfg.params, &phi)?,
        },
    )
}

fn unstable(cfg: &RunConfig) -> Result<(BlockOperator, SpectrumReport)> {
    let op = assemble_l(&cfg.params.with_center(0.0).with_phase(0.0), cfg.grid, OperatorForm::Plain)?;
    let spec = eigen_spectrum(&op, FilterOptions::default())?;
    Ok((op, spec))
}

fn require_mode(spec: &SpectrumReport) -> Result<&UnstableMode> {
    spec.unstable.as_ref().ok_or(CliError::Lab(LabError::NoUnstableMode))
}

#[derive(Serialize)]
struct EigenRow {
    re: Real,
    im: Real,
}

#[derive(Serialize)]
struct SpectrumOut {
    lambda: Option<[Real; 2]>,
    alpha: Option<Real>,
    alpha_fit: Option<Real>,
    essential_band: Real,
    retained: usize,
    discarded: usize,
    quadruple_defect: Real,
    /// Resolvent check at `mu = rho/2` with a seeded random forcing.
    resolvent_residual: Option<Real>,
}

fn spectrum(cfg: &RunConfig, out: &mut Artifacts) -> Result<()> {
    let (op, spec) = unstable(cfg)?;
    out.csv("eigenvalues.csv", spec.eigenvalues.iter().map(|z| EigenRow { re: z.re, im: z.im }))?;
    let mut residual = None;
    if let Some(mode) = &spec.unstable {
        out.csv("mode.csv", pair_rows(&mode.z))?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let g = cfg.grid;
        let mut draw = |x: Real| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * (-(x * x) / 16.0).exp();
        let plus: Vec<C64> = g.xs().map(&mut draw).collect();
        let minus: Vec<C64> = g.xs().map(&mut draw).collect();
        let a = PairField { grid: g, plus, minus };
        let mu = C64::new(0.5 * mode.rho(), 0.0);
        let x = resolvent_solve(&op, mu, &a)?;
        residual = Some(resolvent_residual(&op, mu, &x, &a));
    }
    out.json(
        "spectrum.json",
        &SpectrumOut {
            lambda: spec.unstable.as_ref().map(|m| [m.lambda.re, m.lambda.im]),
            alpha: spec.unstable.as_ref().map(|m| m.alpha),
            alpha_fit: spec.unstable.as_ref().map(|m| m.alpha_fit),
            essential_band: spec.essential_band,
            retained: spec.eigenvalues.len(),
            discarded: spec.discarded,
            quadruple_defect: spec.quadruple_defect(),
            resolvent_residual: residual,
        },
    )
}

#[derive(Serialize)]
struct ResidualRow {
    t: Real,
    residual_h2: Real,
}

#[derive(Serialize)]
struct ProfileOut {
    rho: Real,
    theta: Real,
    amplitude: Real,
    order: u32,
    window: [Real; 2],
    residual: RateFit,
    dressed_h1: RateFit,
    correction_h1: Option<RateFit>,
}

fn profile(cfg: &RunConfig, out: &mut Artifacts) -> Result<()> {
    let (op, spec) = unstable(cfg)?;
    let mode = require_mode(&spec)?;
    let s = &cfg.profile;
    let w = build_w(&op, mode, s.amplitude, s.order)?;
    let rho = mode.rho();
    let (t0, t1) = (2.0 / rho, 6.0 / rho);
    let residual = residual_decay(&w, t0, t1, s.samples)?;
    out.csv(
        "residual.csv",
        residual.samples.iter().map(|&(t, r)| ResidualRow { t, residual_h2: r }),
    )?;
    let correction_h1 = if s.order >= 2 && s.amplitude != 0.0 {
        Some(correction_decay(&w, t0, t1, s.samples)?)
    } else {
        None
    };
    out.json(
        "profile.json",
        &ProfileOut {
            rho,
            theta: mode.theta(),
            amplitude: s.amplitude,
            order: s.order,
            window: [t0, t1],
            dressed_h1: dressed_norm_decay(&w, 1, t0, t1, s.samples)?,
            residual,
            correction_h1,
        },
    )?;
    // the expansion is cheap to resample for plotting
    out.csv("w_final.csv", field_rows(&w.w(t1)))?;
    log::info!("residual at t1: {:.3e}", err_residual(&w, t1));
    Ok(())
}

#[derive(Serialize)]
struct LogRow {
    t: Real,
    energy: Real,
    mass: Real,
    momentum: Real,
    drift: Real,
    constraint_defect: Option<Real>,
}

#[derive(Serialize)]
struct EvolveOut {
    t_reached: Real,
    steps: usize,
    max_drift: Real,
    blow_up: Option<Real>,
}

fn evolve(cfg: &RunConfig, out: &mut Artifacts) -> Result<()> {
    let g = cfg.grid;
    let mut u0 = soliton_profile(&cfg.params, g)?;
    if cfg.perturbation != 0.0 {
        let a = cfg.perturbation;
        let x0 = cfg.params.x0;
        u0 = u0.add(&ComplexField::from_fn(g, |x| C64::new(a * (-(g.wrap(x - x0)).powi(2)).exp(), 0.0)));
    }
    let tr = Stepper::new(&u0, &cfg.equation(), &cfg.evolution)?.run();
    out.csv(
        "log.csv",
        tr.log.iter().map(|e| LogRow {
            t: e.t,
            energy: e.invariants.energy,
            mass: e.invariants.mass,
            momentum: e.invariants.momentum,
            drift: e.drift,
            constraint_defect: e.constraint_defect,
        }),
    )?;
    out.csv("final.csv", field_rows(&tr.last.u))?;
    out.json(
        "evolve.json",
        &EvolveOut {
            t_reached: tr.last.t,
            steps: tr.steps,
            max_drift: tr.max_drift(),
            blow_up: tr.blow_up,
        },
    )?;
    match tr.blow_up {
        Some(t) => Err(CliError::BlowUp { t }),
        None => Ok(()),
    }
}

#[derive(Serialize)]
struct EscapeRow {
    a: Real,
    initial_distance: Real,
    exit_time: Option<Real>,
    exit_distance: Real,
    max_distance: Real,
    fitted_rate: Option<Real>,
    blow_up: Option<Real>,
}

#[derive(Serialize)]
struct HistoryRow {
    a: Real,
    t: Real,
    distance: Real,
}

#[derive(Serialize)]
struct EscapeOut {
    rho: Real,
    epsilon: Real,
    t_max: Real,
    z_grow_h2: Real,
    exit_spacings: Vec<Real>,
    predicted_spacing: Real,
}

fn escape(cfg: &RunConfig, out: &mut Artifacts) -> Result<()> {
    let (_, spec) = unstable(cfg)?;
    let mode = require_mode(&spec)?;
    let report = escape_experiment(&cfg.params, mode, &cfg.escape)?;
    out.csv(
        "escape.csv",
        report.records.iter().map(|r| EscapeRow {
            a: r.a,
            initial_distance: r.initial_distance,
            exit_time: r.exit_time,
            exit_distance: r.exit_distance,
            max_distance: r.max_distance,
            fitted_rate: r.fitted_rate,
            blow_up: r.blow_up,
        }),
    )?;
    out.csv(
        "history.csv",
        report.records.iter().flat_map(|r| {
            r.history.iter().map(move |(t, d, _)| HistoryRow {
                a: r.a,
                t: *t,
                distance: *d,
            })
        }),
    )?;
    out.json(
        "escape.json",
        &EscapeOut {
            rho: report.rho,
            epsilon: report.epsilon,
            t_max: report.t_max,
            z_grow_h2: report.z_grow_h2,
            exit_spacings: report.exit_spacings(),
            predicted_spacing: report.predicted_spacing(),
        },
    )?;
    match report.records.iter().find_map(|r| r.blow_up) {
        Some(t) => Err(CliError::BlowUp { t }),
        None => Ok(()),
    }
}

#[derive(Serialize)]
struct MultiHistoryRow {
    t: Real,
    distance: Real,
    windows: String,
}

#[derive(Serialize)]
struct MultiOut {
    h_star: Real,
    v_star: Option<Real>,
    alpha: Real,
    epsilon: Real,
    a: Real,
    exit_time: Option<Real>,
    exit_distance: Real,
    max_other_window: Option<Real>,
    separation_violated: bool,
    blow_up: Option<Real>,
}

fn multi_escape(cfg: &RunConfig, out: &mut Artifacts) -> Result<()> {
    let (_, spec) = unstable(cfg)?;
    let mode = require_mode(&spec)?;
    let m = &cfg.multi;
    let mc = MultiConfig {
        params: cfg.train(),
        a: m.a,
        epsilon: m.epsilon,
        speed_threshold: m.speed_threshold,
        alpha: mode.alpha,
        t_initial: m.t_initial,
        t_max: m.t_max,
        check_every: m.check_every,
        dt: m.dt,
    };
    let run = multi_escape_experiment(&mc, mode, m.grid)?;
    let r = &run.record;
    out.csv(
        "history.csv",
        r.history.iter().map(|(t, d, w)| MultiHistoryRow {
            t: *t,
            distance: *d,
            windows: w.iter().map(|v| format!("{v:e}")).collect::<Vec<_>>().join(";"),
        }),
    )?;
    out.json(
        "multi.json",
        &MultiOut {
            h_star: run.h_star,
            v_star: run.v_star,
            alpha: run.alpha,
            epsilon: run.epsilon,
            a: r.a,
            exit_time: r.exit_time,
            exit_distance: r.exit_distance,
            max_other_window: r.max_other_window,
            separation_violated: r.separation_violated,
            blow_up: r.blow_up,
        },
    )?;
    match r.blow_up {
        Some(t) => Err(CliError::BlowUp { t }),
        None => Ok(()),
    }
}

#[derive(Serialize)]
struct CrossRow {
    t: Real,
    cross: Real,
}

#[derive(Serialize)]
struct InteractionOut {
    rate: Real,
    h_star: Real,
    v_star: Real,
    bound: Real,
    pairwise_rate: Real,
    pairwise_constant: Real,
}

fn interaction(cfg: &RunConfig, out: &mut Artifacts) -> Result<()> {
    let fit = interaction_decay(&cfg.train(), cfg.multi.grid, cfg.interaction.alpha, &cfg.interaction.times)?;
    out.csv("interaction.csv", fit.samples.iter().map(|&(t, cross)| CrossRow { t, cross }))?;
    out.json(
        "interaction.json",
        &InteractionOut {
            rate: fit.rate,
            h_star: fit.h_star,
            v_star: fit.v_star,
            bound: fit.bound(),
            pairwise_rate: fit.pairwise_rate,
            pairwise_constant: fit.pairwise_constant,
        },
    )
}
