//! Run configuration files.
//!
//! A config is a TOML document with the sections `[model]`, `[mesh]`,
//! `[time]`, `[diffusion.1]` to `[diffusion.3]`, `[initial]`, `[output]`,
//! `[solver]` and, for refinement studies, `[manufactured]`. Everything
//! except `[model]`, `[mesh]`, `[time]` and the diffusion laws has defaults.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use epifv::solver::{example1_initial, example2_random_initial, Example1};
use epifv::{DiffusionLaw, Field, Mesh, ModelParams, SolverConfig, State};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VariantSpec {
    Sir,
    Sars,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub variant: VariantSpec,
    pub alpha: f64,
    pub mu: f64,
    pub gamma: f64,
    /// Recruitment `A`, SARS only.
    #[serde(default)]
    pub recruitment: f64,
    /// Treatment rate `r`, SARS only.
    #[serde(default)]
    pub treatment: f64,
}

impl ModelSection {
    pub fn params(&self) -> ModelParams {
        match self.variant {
            VariantSpec::Sir => ModelParams::sir(self.alpha, self.mu, self.gamma),
            VariantSpec::Sars => ModelParams::sars(self.alpha, self.mu, self.gamma, self.recruitment, self.treatment),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSection {
    pub nx: usize,
    pub ny: usize,
    #[serde(default = "one")]
    pub lx: f64,
    #[serde(default = "one")]
    pub ly: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    pub dt: f64,
    pub t_end: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "kebab-case", deny_unknown_fields)]
pub enum LawSpec {
    Constant { value: f64 },
    Linear { slope: f64 },
    TruncatedLinear { max: f64, min: f64 },
    TruncatedInverseSquare { scale: f64, center: f64, max: f64, min: f64 },
}

impl From<LawSpec> for DiffusionLaw {
    fn from(s: LawSpec) -> Self {
        match s {
            LawSpec::Constant { value } => DiffusionLaw::Constant { value },
            LawSpec::Linear { slope } => DiffusionLaw::Linear { slope },
            LawSpec::TruncatedLinear { max, min } => DiffusionLaw::TruncatedLinear { max, min },
            LawSpec::TruncatedInverseSquare { scale, center, max, min } => {
                DiffusionLaw::TruncatedInverseSquare { scale, center, max, min }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiffusionSection {
    #[serde(rename = "1")]
    pub d1: LawSpec,
    #[serde(rename = "2")]
    pub d2: LawSpec,
    #[serde(rename = "3")]
    pub d3: LawSpec,
}

impl DiffusionSection {
    pub fn laws(&self) -> [DiffusionLaw; 3] {
        [self.d1.into(), self.d2.into(), self.d3.into()]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialSpec {
    /// Constant susceptible background with sech-shaped pockets of infected.
    Example1 {
        #[serde(default = "ex1_background")]
        background: f64,
        #[serde(default = "ex1_amplitude")]
        amplitude: f64,
        #[serde(default = "ex1_sharpness")]
        sharpness: f64,
        #[serde(default = "ex1_centers")]
        centers: Vec<[f64; 2]>,
    },
    /// `center_i + amplitude_i * omega` with seeded uniform noise per cell.
    Example2Random {
        seed: Option<u64>,
        center: [f64; 3],
        amplitude: [f64; 3],
    },
    Constant {
        values: [f64; 3],
    },
    /// A CSV file in the snapshot format; rows in mesh storage order.
    File {
        path: PathBuf,
    },
}

fn ex1_background() -> f64 {
    Example1::default().background
}
fn ex1_amplitude() -> f64 {
    Example1::default().amplitude
}
fn ex1_sharpness() -> f64 {
    Example1::default().sharpness
}
fn ex1_centers() -> Vec<[f64; 2]> {
    Example1::default().centers
}

impl Default for InitialSpec {
    fn default() -> Self {
        InitialSpec::Constant { values: [0.0; 3] }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
    /// Times of full snapshots; the final time is always written.
    #[serde(default)]
    pub snapshots: Vec<f64>,
}

/// Any key left out keeps its default.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub picard_tol: f64,
    pub picard_max: usize,
    pub damping: f64,
    pub cg_tol: f64,
    pub cg_max: usize,
    pub gronwall_factor: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        let d = SolverConfig::default();
        Self {
            picard_tol: d.picard_tol,
            picard_max: d.picard_max,
            damping: d.damping,
            cg_tol: d.cg_tol,
            cg_max: d.cg_max,
            gronwall_factor: d.gronwall_factor,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ManufacturedSpec {
    /// `base + amplitude cos(pi x) cos(pi y) e^{-t}` in every species.
    Cosine {
        #[serde(default = "two")]
        base: f64,
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default = "one")]
        dt_per_h: f64,
    },
    /// A spatially constant state held by constant sources.
    Constant {
        values: [f64; 3],
        #[serde(default = "one")]
        dt_per_h: f64,
    },
}

fn two() -> f64 {
    2.0
}

impl ManufacturedSpec {
    pub fn dt_per_h(&self) -> f64 {
        match self {
            ManufacturedSpec::Cosine { dt_per_h, .. } | ManufacturedSpec::Constant { dt_per_h, .. } => *dt_per_h,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSection,
    pub mesh: MeshSection,
    pub time: TimeSection,
    pub diffusion: DiffusionSection,
    #[serde(default)]
    pub initial: InitialSpec,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manufactured: Option<ManufacturedSpec>,
}

impl RunConfig {
    /// Parses and validates. Syntax errors carry line and column.
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| anyhow::anyhow!("{e}"))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg = Self::parse(&text).with_context(|| format!("in {}", path.display()))?;
        // a relative initial-data file is taken relative to the config
        if let InitialSpec::File { path: p } = &mut cfg.initial {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.params().validate().context("[model]")?;
        for (i, law) in self.laws().iter().enumerate() {
            law.validate().with_context(|| format!("[diffusion.{}]", i + 1))?;
        }
        self.solver_config().validate().context("[time] / [solver]")?;
        if self.mesh.nx == 0 || self.mesh.ny == 0 {
            bail!("[mesh]: nx and ny must be positive");
        }
        if let InitialSpec::Example2Random { center, amplitude, .. } = &self.initial {
            if center.iter().chain(amplitude).any(|v| !v.is_finite()) {
                bail!("[initial]: center and amplitude must be finite");
            }
        }
        if let Some(m) = &self.manufactured {
            if m.dt_per_h().is_nan() || m.dt_per_h() <= 0.0 {
                bail!("[manufactured]: dt_per_h must be positive");
            }
        }
        Ok(())
    }

    pub fn params(&self) -> ModelParams {
        self.model.params()
    }

    pub fn laws(&self) -> [DiffusionLaw; 3] {
        self.diffusion.laws()
    }

    pub fn solver_config(&self) -> SolverConfig {
        let s = &self.solver;
        SolverConfig {
            dt: self.time.dt,
            t_end: self.time.t_end,
            picard_tol: s.picard_tol,
            picard_max: s.picard_max,
            damping: s.damping,
            cg_tol: s.cg_tol,
            cg_max: s.cg_max,
            gronwall_factor: s.gronwall_factor,
        }
    }

    pub fn build_mesh(&self) -> Result<Mesh> {
        Ok(Mesh::cartesian(self.mesh.nx, self.mesh.ny, self.mesh.lx, self.mesh.ly)?)
    }

    /// Replaces the seed of an `example2-random` initial condition.
    pub fn override_seed(&mut self, seed: u64) -> Result<()> {
        match &mut self.initial {
            InitialSpec::Example2Random { seed: s, .. } => {
                *s = Some(seed);
                Ok(())
            }
            _ => bail!("--seed only applies to the example2-random preset"),
        }
    }

    pub fn initial_state(&self, mesh: &Mesh) -> Result<State> {
        let state = match &self.initial {
            InitialSpec::Example1 { background, amplitude, sharpness, centers } => {
                let data = Example1 {
                    background: *background,
                    amplitude: *amplitude,
                    sharpness: *sharpness,
                    centers: centers.clone(),
                };
                example1_initial(mesh, &data)?
            }
            InitialSpec::Example2Random { seed, center, amplitude } => {
                let Some(seed) = seed else {
                    bail!("[initial]: the example2-random preset needs a seed (in the config or via --seed)");
                };
                example2_random_initial(mesh, *seed, *center, *amplitude)?
            }
            InitialSpec::Constant { values } => {
                let n = mesh.num_cells();
                State::new(Field::constant(n, values[0]), Field::constant(n, values[1]), Field::constant(n, values[2]))?
            }
            InitialSpec::File { path } => crate::output::read_snapshot(path, mesh)?,
        };
        if state.min() < 0.0 {
            bail!("[initial]: initial data must be nonnegative");
        }
        Ok(state)
    }
}
