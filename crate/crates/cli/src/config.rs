//! Run configuration: a TOML file with sections, overridden by flags.

use std::path::{Path, PathBuf};

use clap::{Args, Subcommand, ValueEnum};
use dnls_core::evolution::{EvolutionConfig, Scheme};
use dnls_core::experiments::EscapeConfig;
use dnls_core::{Equation, Grid, Params, Real};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Environment variable naming the default output root.
pub const OUT_ENV: &str = "DNLS_LAB_OUT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Sample the soliton profile and report its summary.
    Soliton,
    /// Conserved quantities, p(d''), n(H) and the stability verdict.
    Classify,
    /// Discrete spectrum of the linearized operator and the unstable mode.
    Spectrum,
    /// Build the approximate unstable profile and fit its residual decay.
    Profile,
    /// Evolve the soliton (optionally perturbed) and log the invariants.
    Evolve,
    /// Escape times along the growing mode for a halving amplitude schedule.
    Escape,
    /// Escape of one soliton of a well-separated train.
    MultiEscape,
    /// Decay of the nonlinear cross term of separating solitons.
    Interaction,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Soliton => "soliton",
            Command::Classify => "classify",
            Command::Spectrum => "spectrum",
            Command::Profile => "profile",
            Command::Evolve => "evolve",
            Command::Escape => "escape",
            Command::MultiEscape => "multi-escape",
            Command::Interaction => "interaction",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EquationKind {
    Dnls,
    Gdnls,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeKind {
    IntegratingFactor,
    Gauge,
}

impl From<SchemeKind> for Scheme {
    fn from(s: SchemeKind) -> Self {
        match s {
            SchemeKind::IntegratingFactor => Scheme::IntegratingFactorRk4,
            SchemeKind::Gauge => Scheme::GaugeSystem,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolitonSection {
    pub equation: Option<EquationKind>,
    pub b: Option<Real>,
    pub sigma: Option<Real>,
    pub omega: Option<Real>,
    pub c: Option<Real>,
    pub theta0: Option<Real>,
    pub x0: Option<Real>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub n: Option<usize>,
    pub length: Option<Real>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionSection {
    pub t_end: Option<Real>,
    pub dt: Option<Real>,
    pub scheme: Option<SchemeKind>,
    pub log_every: Option<usize>,
    pub comoving: Option<bool>,
    /// Amplitude of a Gaussian bump added to the initial soliton.
    pub perturbation: Option<Real>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EscapeSection {
    pub a0: Option<Real>,
    pub count: Option<usize>,
    pub epsilon: Option<Real>,
    pub t_max: Option<Real>,
    pub check_every: Option<Real>,
    pub dt: Option<Real>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSection {
    pub amplitude: Option<Real>,
    pub order: Option<u32>,
    pub samples: Option<usize>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultiSection {
    pub a: Option<Real>,
    pub epsilon: Option<Real>,
    pub speed_threshold: Option<Real>,
    pub t_initial: Option<Real>,
    pub t_max: Option<Real>,
    pub check_every: Option<Real>,
    pub dt: Option<Real>,
    pub length: Option<Real>,
    pub n: Option<usize>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InteractionSection {
    pub t_end: Option<Real>,
    pub samples: Option<usize>,
    pub alpha: Option<Real>,
}

/// Contents of a config file; every key is optional here and checked in
/// [`FileConfig::resolve`].
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub soliton: SolitonSection,
    #[serde(default, rename = "partner")]
    pub partners: Vec<SolitonSection>,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub evolution: EvolutionSection,
    #[serde(default)]
    pub escape: EscapeSection,
    #[serde(default)]
    pub profile: ProfileSection,
    #[serde(default)]
    pub multi: MultiSection,
    #[serde(default)]
    pub interaction: InteractionSection,
}

/// Command-line overrides; each one replaces the matching file key.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// TOML config file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (default: $DNLS_LAB_OUT/<command>, else runs/<command>).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    pub equation: Option<EquationKind>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub b: Option<Real>,
    #[arg(long, global = true)]
    pub sigma: Option<Real>,
    #[arg(long, global = true)]
    pub omega: Option<Real>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub c: Option<Real>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub theta0: Option<Real>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub x0: Option<Real>,
    /// Grid points (power of two).
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// Period of the grid.
    #[arg(long, global = true)]
    pub length: Option<Real>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub t_end: Option<Real>,
    #[arg(long, global = true)]
    pub dt: Option<Real>,
    #[arg(long, global = true, value_enum)]
    pub scheme: Option<SchemeKind>,
    /// Perturbation amplitude (escape a0, multi-escape a, profile a).
    #[arg(long, global = true)]
    pub amplitude: Option<Real>,
    /// Number of escape runs.
    #[arg(long, global = true)]
    pub count: Option<usize>,
    /// Expansion order of the approximate profile.
    #[arg(long, global = true)]
    pub order: Option<u32>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProfileSettings {
    pub amplitude: Real,
    pub order: u32,
    pub samples: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct MultiSettings {
    pub a: Real,
    pub epsilon: Option<Real>,
    pub speed_threshold: Real,
    pub t_initial: Real,
    pub t_max: Option<Real>,
    pub check_every: Option<Real>,
    pub dt: Option<Real>,
    /// Grid of the multi-soliton runs; `RunConfig::grid` carries the mode.
    pub grid: Grid,
}

#[derive(Debug, Clone, Serialize)]
pub struct InteractionSettings {
    pub times: Vec<Real>,
    pub alpha: Option<Real>,
}

/// Fully validated run.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub seed: u64,
    pub out: PathBuf,
    pub params: Params,
    pub partners: Vec<Params>,
    pub grid: Grid,
    pub evolution: EvolutionConfig,
    pub perturbation: Real,
    pub escape: EscapeConfig,
    pub profile: ProfileSettings,
    pub multi: MultiSettings,
    pub interaction: InteractionSettings,
}

fn missing(key: &str) -> CliError {
    CliError::Config(format!("missing required key `{key}`"))
}

fn positive(key: &str, v: Real) -> Result<Real> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(CliError::Config(format!("`{key}` must be a positive number, got {v}")))
    }
}

impl SolitonSection {
    fn params(&self, section: &str) -> Result<Params> {
        let key = |k: &str| format!("{section}.{k}");
        let omega = self.omega.ok_or_else(|| missing(&key("omega")))?;
        let c = self.c.ok_or_else(|| missing(&key("c")))?;
        let mut p = match self.equation.ok_or_else(|| missing(&key("equation")))? {
            EquationKind::Dnls => {
                if self.sigma.is_some() {
                    return Err(CliError::Config(format!("`{}` applies to gdnls only", key("sigma"))));
                }
                Params::dnls(self.b.ok_or_else(|| missing(&key("b")))?, omega, c)
            }
            EquationKind::Gdnls => {
                if self.b.is_some() {
                    return Err(CliError::Config(format!("`{}` applies to dnls only", key("b"))));
                }
                Params::gdnls(self.sigma.ok_or_else(|| missing(&key("sigma")))?, omega, c)
            }
        };
        p.theta0 = self.theta0.unwrap_or(0.0);
        p.x0 = self.x0.unwrap_or(0.0);
        p.validate().map_err(dnls_core::LabError::from)?;
        Ok(p)
    }
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|source| CliError::ConfigParse {
            path: path.display().to_string(),
            source,
        })
    }

    /// Flags win over file keys.
    pub fn apply(&mut self, o: &Overrides) {
        fn set<T: Clone>(slot: &mut Option<T>, v: &Option<T>) {
            if v.is_some() {
                slot.clone_from(v);
            }
        }
        set(&mut self.seed, &o.seed);
        set(&mut self.out, &o.out);
        let s = &mut self.soliton;
        set(&mut s.equation, &o.equation);
        set(&mut s.b, &o.b);
        set(&mut s.sigma, &o.sigma);
        set(&mut s.omega, &o.omega);
        set(&mut s.c, &o.c);
        set(&mut s.theta0, &o.theta0);
        set(&mut s.x0, &o.x0);
        // switching equation on the command line drops the other family's key
        match o.equation {
            Some(EquationKind::Dnls) if o.sigma.is_none() => s.sigma = None,
            Some(EquationKind::Gdnls) if o.b.is_none() => s.b = None,
            _ => {}
        }
        set(&mut self.grid.n, &o.n);
        set(&mut self.grid.length, &o.length);
        set(&mut self.evolution.t_end, &o.t_end);
        set(&mut self.evolution.dt, &o.dt);
        set(&mut self.evolution.scheme, &o.scheme);
        set(&mut self.escape.a0, &o.amplitude);
        set(&mut self.escape.count, &o.count);
        set(&mut self.multi.a, &o.amplitude);
        set(&mut self.profile.amplitude, &o.amplitude);
        set(&mut self.profile.order, &o.order);
    }

    /// Output directory before any validation, so failed runs can still
    /// leave a manifest.
    pub fn out_dir(&self, command: Command) -> PathBuf {
        match &self.out {
            Some(p) => p.clone(),
            None => {
                let root = std::env::var_os(OUT_ENV).map_or_else(|| PathBuf::from("runs"), PathBuf::from);
                root.join(command.name())
            }
        }
    }

    pub fn resolve(&self, command: Command) -> Result<RunConfig> {
        let params = self.soliton.params("soliton")?;
        let partners = self
            .partners
            .iter()
            .enumerate()
            .map(|(j, s)| s.params(&format!("partner[{j}]")))
            .collect::<Result<Vec<_>>>()?;
        if partners.iter().any(|p| p.equation != params.equation) {
            return Err(CliError::Config("partners must solve the same equation as the soliton".into()));
        }

        let n = self.grid.n.unwrap_or(1024);
        let grid = match self.grid.length {
            Some(l) => Grid::new(l, n)?,
            None => Grid::for_decay(params.h(), n)?,
        };
        grid.check_decay(params.h())?;

        let ev = &self.evolution;
        let mut evolution = EvolutionConfig::new(&grid, 0.0, ev.t_end.unwrap_or(1.0));
        if let Some(dt) = ev.dt {
            evolution.dt = positive("evolution.dt", dt)?;
        }
        if let Some(s) = ev.scheme {
            evolution.scheme = s.into();
        }
        if let Some(k) = ev.log_every {
            evolution.log_every = k;
        }
        if ev.comoving.unwrap_or(false) {
            evolution.frame_velocity = params.c;
        }
        evolution.steps(&grid)?;

        let es = &self.escape;
        let mut escape = EscapeConfig::halving(
            positive("escape.a0", es.a0.unwrap_or(1e-2))?,
            es.count.unwrap_or(7),
        );
        if escape.amplitudes.is_empty() {
            return Err(CliError::Config("`escape.count` must be at least 1".into()));
        }
        escape.epsilon = es.epsilon.map(|e| positive("escape.epsilon", e)).transpose()?;
        escape.t_max = es.t_max.map(|t| positive("escape.t_max", t)).transpose()?;
        escape.check_every = es.check_every.map(|t| positive("escape.check_every", t)).transpose()?;
        escape.dt = es.dt.or(ev.dt).map(|t| positive("escape.dt", t)).transpose()?;

        let order = self.profile.order.unwrap_or(2);
        if !(1..=2).contains(&order) {
            return Err(CliError::Config(format!("`profile.order` must be 1 or 2, got {order}")));
        }
        let profile = ProfileSettings {
            amplitude: self.profile.amplitude.unwrap_or(1.0),
            order,
            samples: self.profile.samples.unwrap_or(9).max(3),
        };

        let ms = &self.multi;
        let multi = MultiSettings {
            a: positive("multi.a", ms.a.unwrap_or(1e-3))?,
            epsilon: ms.epsilon.map(|e| positive("multi.epsilon", e)).transpose()?,
            speed_threshold: ms.speed_threshold.unwrap_or(0.1),
            t_initial: ms.t_initial.unwrap_or(0.0),
            t_max: ms.t_max.map(|t| positive("multi.t_max", t)).transpose()?,
            check_every: ms.check_every.map(|t| positive("multi.check_every", t)).transpose()?,
            dt: ms.dt.map(|t| positive("multi.dt", t)).transpose()?,
            grid: Grid::new(ms.length.unwrap_or(300.0), ms.n.unwrap_or(4096))?,
        };

        let is = &self.interaction;
        let t_end = positive("interaction.t_end", is.t_end.unwrap_or(10.0))?;
        let samples = is.samples.unwrap_or(11).max(3);
        let interaction = InteractionSettings {
            times: (0..samples).map(|k| t_end * k as Real / (samples - 1) as Real).collect(),
            alpha: is.alpha.map(|a| positive("interaction.alpha", a)).transpose()?,
        };

        if matches!(command, Command::MultiEscape | Command::Interaction) && partners.is_empty() {
            return Err(CliError::Config(format!(
                "`{}` needs at least one [[partner]] soliton",
                command.name()
            )));
        }

        Ok(RunConfig {
            command,
            seed: self.seed.unwrap_or(0),
            out: self.out_dir(command),
            params,
            partners,
            grid,
            evolution,
            perturbation: ev.perturbation.unwrap_or(0.0),
            escape,
            profile,
            multi,
            interaction,
        })
    }
}

impl RunConfig {
    pub fn equation(&self) -> Equation<Real> {
        self.params.equation
    }

    /// Soliton followed by its partners.
    pub fn train(&self) -> Vec<Params> {
        std::iter::once(self.params).chain(self.partners.iter().copied()).collect()
    }
}
