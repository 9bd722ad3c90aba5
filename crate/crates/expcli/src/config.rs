//! The experiment configuration: one JSON document, schema version 1.
//!
//! Parsing fills every default, so serializing a parsed config gives the
//! canonical form and parsing that again is a fixed point.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use uic_core::bayes::{DEFAULT_PI_GRID, DEFAULT_T_GRID};
use uic_core::gaussmix::two_cluster_mixtures;
use uic_core::train::{Init, Optimizer, TrainConfig};
use uic_core::{GaussianMixture, Link, LossFamily, LossSpec, Task};

use crate::error::ConfigError;

pub const SCHEMA_VERSION: u32 = 1;

/// Fewest α values an alpha sweep may use.
pub const MIN_SWEEP_POINTS: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub recipe: Recipe,
    pub task: TaskConfig,
    /// Empty means the recipe's default list.
    #[serde(default)]
    pub losses: Vec<LossSpec>,
    #[serde(default)]
    pub train: TrainSettings,
    /// Per-family replacements for `train`; the first match wins.
    #[serde(default)]
    pub train_overrides: Vec<TrainOverride>,
    pub seeds: Vec<u64>,
    /// Output directory; the command line takes precedence. Not hashed.
    #[serde(default)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecipeKind {
    Boundary,
    AlphaSweep,
    Fcurve,
    LimitCheck,
    CAblation,
    InfluenceDemo,
}

impl RecipeKind {
    pub fn name(self) -> &'static str {
        match self {
            RecipeKind::Boundary => "boundary",
            RecipeKind::AlphaSweep => "alpha_sweep",
            RecipeKind::Fcurve => "fcurve",
            RecipeKind::LimitCheck => "limit_check",
            RecipeKind::CAblation => "c_ablation",
            RecipeKind::InfluenceDemo => "influence_demo",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Recipe {
    Boundary(BoundaryParams),
    AlphaSweep(AlphaSweepParams),
    Fcurve(FcurveParams),
    LimitCheck(LimitCheckParams),
    CAblation(CAblationParams),
    InfluenceDemo(InfluenceParams),
}

impl Recipe {
    pub fn kind(&self) -> RecipeKind {
        match self {
            Recipe::Boundary(_) => RecipeKind::Boundary,
            Recipe::AlphaSweep(_) => RecipeKind::AlphaSweep,
            Recipe::Fcurve(_) => RecipeKind::Fcurve,
            Recipe::LimitCheck(_) => RecipeKind::LimitCheck,
            Recipe::CAblation(_) => RecipeKind::CAblation,
            Recipe::InfluenceDemo(_) => RecipeKind::InfluenceDemo,
        }
    }
}

/// Decision boundaries of linear fits, one line per loss and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundaryParams {
    /// Range of `x1` over which boundary points are emitted.
    pub x_range: [f64; 2],
    pub n_points: usize,
    /// Also write each seed's training sample.
    pub write_samples: bool,
}

impl Default for BoundaryParams {
    fn default() -> Self {
        BoundaryParams {
            x_range: [-6.0, 6.0],
            n_points: 121,
            write_samples: false,
        }
    }
}

/// Population AUC of alpha-loss fits across a grid of α.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlphaSweepParams {
    pub alphas: Vec<f64>,
}

impl Default for AlphaSweepParams {
    fn default() -> Self {
        let n = MIN_SWEEP_POINTS;
        AlphaSweepParams {
            alphas: (0..n).map(|i| 0.2 + 0.8 * i as f64 / (n - 1) as f64).collect(),
        }
    }
}

/// Exact against asymptotic divergence generators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FcurveParams {
    pub pi_grid: Vec<f64>,
    pub t_grid: Vec<f64>,
    /// Points at which the ratio sequence is reported.
    pub check_t: Vec<f64>,
}

impl Default for FcurveParams {
    fn default() -> Self {
        FcurveParams {
            pi_grid: DEFAULT_PI_GRID.to_vec(),
            t_grid: DEFAULT_T_GRID.to_vec(),
            check_t: vec![0.0, 0.25, 0.5, 0.75],
        }
    }
}

/// Population fits at shrinking imbalance ratio against the limiting classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LimitCheckParams {
    pub rhos: Vec<f64>,
    /// Monte Carlo draws per class for the population objective.
    pub mc_n: usize,
    pub solver_max_iter: usize,
}

impl Default for LimitCheckParams {
    fn default() -> Self {
        LimitCheckParams {
            rhos: vec![1e-3, 1e-4, 1e-5],
            mc_n: 200_000,
            solver_max_iter: 100_000,
        }
    }
}

/// TBL fits across the penalty `C` under label noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CAblationParams {
    pub alpha: f64,
    pub cpens: Vec<f64>,
    /// Probability that each training label is flipped.
    pub label_noise: f64,
    pub n_test_minority: usize,
    pub n_test_majority: usize,
}

impl Default for CAblationParams {
    fn default() -> Self {
        CAblationParams {
            alpha: 0.5,
            cpens: vec![0.0, 0.1, 0.3, 0.5, 1.0, 2.0],
            label_noise: 0.001,
            n_test_minority: 1_000,
            n_test_majority: 100_000,
        }
    }
}

/// Hessian influence against upweight-and-retrain on small samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InfluenceParams {
    pub n_minority: usize,
    pub n_majority: usize,
    /// Upweighting step for the retrain differences.
    pub eps: f64,
    /// Newton gradient-norm tolerance for every fit.
    pub tol: f64,
}

impl Default for InfluenceParams {
    fn default() -> Self {
        InfluenceParams {
            n_minority: 60,
            n_majority: 140,
            eps: 1e-3,
            tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Preset {
    /// Two clusters per class, 200 minority and 100 000 majority samples.
    #[serde(rename = "mixture_1to500")]
    Mixture1To500,
    /// Same layout with 200 000 majority samples.
    #[serde(rename = "mixture_1to1000")]
    Mixture1To1000,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TaskConfig {
    Preset {
        name: Preset,
    },
    Explicit {
        /// Population prior of the minority class.
        pi: f64,
        minority: GaussianMixture,
        majority: GaussianMixture,
        /// Training-sample class counts.
        n_minority: usize,
        n_majority: usize,
    },
}

impl Default for TaskConfig {
    fn default() -> Self {
        TaskConfig::Preset {
            name: Preset::Mixture1To500,
        }
    }
}

/// A task with its training-sample counts.
#[derive(Debug, Clone)]
pub struct ResolvedTask {
    pub task: Task,
    pub n_minority: usize,
    pub n_majority: usize,
}

impl TaskConfig {
    pub fn resolve(&self) -> Result<ResolvedTask, ConfigError> {
        let bad = |e: uic_core::Error| ConfigError::at("task", e.to_string());
        match self {
            TaskConfig::Preset { name } => {
                let (p, q) = two_cluster_mixtures();
                let (n_minority, n_majority) = match name {
                    Preset::Mixture1To500 => (200, 100_000),
                    Preset::Mixture1To1000 => (200, 200_000),
                };
                let pi = n_minority as f64 / (n_minority + n_majority) as f64;
                Ok(ResolvedTask {
                    task: Task::new(pi, p, q, LossSpec::ce()).map_err(bad)?,
                    n_minority,
                    n_majority,
                })
            }
            TaskConfig::Explicit {
                pi,
                minority,
                majority,
                n_minority,
                n_majority,
            } => {
                if *n_minority == 0 || *n_majority == 0 {
                    return Err(ConfigError::at("task", "both class counts must be positive"));
                }
                Ok(ResolvedTask {
                    task: Task::new(*pi, minority.clone(), majority.clone(), LossSpec::ce()).map_err(bad)?,
                    n_minority: *n_minority,
                    n_majority: *n_majority,
                })
            }
        }
    }
}

/// Training settings without the seed, which comes from the seed list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSettings {
    pub optimizer: Optimizer,
    pub epochs: usize,
    pub batch_size: usize,
    pub init: Init,
    pub link: Link,
}

impl Default for TrainSettings {
    fn default() -> Self {
        let d = TrainConfig::default();
        TrainSettings {
            optimizer: d.optimizer,
            epochs: d.epochs,
            batch_size: d.batch_size,
            init: d.init,
            link: d.link,
        }
    }
}

impl TrainSettings {
    pub fn newton(tol: f64) -> Self {
        TrainSettings {
            optimizer: Optimizer::Newton { tol },
            init: Init::LogitAdjusted,
            ..Self::default()
        }
    }

    pub fn with_seed(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            optimizer: self.optimizer,
            epochs: self.epochs,
            batch_size: self.batch_size,
            seed,
            init: self.init.clone(),
            link: self.link,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainOverride {
    pub family: LossFamily,
    pub train: TrainSettings,
}

impl ExperimentConfig {
    /// The configuration a subcommand runs without `--config`.
    pub fn default_for(kind: RecipeKind) -> Self {
        let mut cfg = ExperimentConfig {
            schema_version: SCHEMA_VERSION,
            recipe: match kind {
                RecipeKind::Boundary => Recipe::Boundary(Default::default()),
                RecipeKind::AlphaSweep => Recipe::AlphaSweep(Default::default()),
                RecipeKind::Fcurve => Recipe::Fcurve(Default::default()),
                RecipeKind::LimitCheck => Recipe::LimitCheck(Default::default()),
                RecipeKind::CAblation => Recipe::CAblation(Default::default()),
                RecipeKind::InfluenceDemo => Recipe::InfluenceDemo(Default::default()),
            },
            task: TaskConfig::default(),
            losses: Vec::new(),
            train: TrainSettings::default(),
            train_overrides: Vec::new(),
            seeds: vec![0, 1, 2],
            output: None,
        };
        match &cfg.recipe {
            Recipe::Boundary(_) => {
                // the default step size diverges for exponential-type losses
                // at this imbalance
                let slow = TrainSettings {
                    optimizer: Optimizer::Sgd {
                        lr: 1e-3,
                        momentum: 0.9,
                    },
                    init: Init::LogitAdjusted,
                    ..TrainSettings::default()
                };
                cfg.train_overrides = [LossFamily::Alpha, LossFamily::Tbl]
                    .into_iter()
                    .map(|family| TrainOverride {
                        family,
                        train: slow.clone(),
                    })
                    .collect();
            }
            Recipe::AlphaSweep(_) | Recipe::CAblation(_) => cfg.train = TrainSettings::newton(1e-9),
            Recipe::Fcurve(_) => cfg.seeds = vec![0],
            Recipe::LimitCheck(p) => {
                cfg.seeds = vec![0];
                cfg.train = TrainSettings::newton(1e-9);
                cfg.train_overrides = vec![TrainOverride {
                    family: LossFamily::Square,
                    train: TrainSettings {
                        optimizer: Optimizer::Sgd {
                            lr: 0.25,
                            momentum: 0.7,
                        },
                        epochs: 200,
                        batch_size: 2 * p.mc_n,
                        init: Init::Zeros,
                        link: Link::Identity,
                    },
                }];
            }
            Recipe::InfluenceDemo(p) => {
                cfg.seeds = (0..20).collect();
                cfg.train = TrainSettings::newton(p.tol);
            }
        }
        cfg.losses = default_losses(kind);
        cfg
    }

    /// Parses and validates; errors carry the line and field when known.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let mut cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let inner = e.inner();
            ConfigError {
                line: Some(inner.line()),
                column: Some(inner.column()),
                path: e.path().to_string(),
                message: strip_position(&inner.to_string()),
            }
        })?;
        if cfg.losses.is_empty() {
            cfg.losses = default_losses(cfg.recipe.kind());
        }
        cfg.validate().map_err(|mut e| {
            if let Some((line, column)) = locate(text, &e.path) {
                e.line = Some(line);
                e.column = Some(column);
            }
            e
        })?;
        Ok(cfg)
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self, crate::error::CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| crate::error::CliError::io(path, e))?;
        Ok(Self::parse(&text)?)
    }

    /// Training configuration for `spec` at `seed`, after overrides.
    pub fn train_for(&self, spec: &LossSpec, seed: u64) -> TrainConfig {
        self.train_overrides
            .iter()
            .find(|o| o.family == spec.family)
            .map_or(&self.train, |o| &o.train)
            .with_seed(seed)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(ConfigError::at(
                "schema_version",
                format!(
                    "unsupported schema version {}, expected {SCHEMA_VERSION}",
                    self.schema_version
                ),
            ));
        }
        if self.seeds.is_empty() {
            return Err(ConfigError::at("seeds", "at least one seed is required"));
        }
        let mut seen = self.seeds.clone();
        seen.sort_unstable();
        if seen.windows(2).any(|w| w[0] == w[1]) {
            return Err(ConfigError::at("seeds", "seeds must be distinct"));
        }
        let resolved = self.task.resolve()?;
        let d = resolved.task.dim();
        for spec in self.losses.iter() {
            self.train_for(spec, 0)
                .validate(spec)
                .map_err(|e| ConfigError::at("train", format!("{}: {e}", spec.label())))?;
        }
        match &self.recipe {
            Recipe::Boundary(p) => {
                if d != 2 {
                    return Err(ConfigError::at(
                        "task",
                        format!("boundaries need a 2-D task, got d = {d}"),
                    ));
                }
                if !(p.x_range[0] < p.x_range[1]) || !p.x_range.iter().all(|v| v.is_finite()) {
                    return Err(ConfigError::at("x_range", "x_range must be finite and increasing"));
                }
                if p.n_points < 2 {
                    return Err(ConfigError::at("n_points", "n_points must be >= 2"));
                }
            }
            Recipe::AlphaSweep(p) => {
                if p.alphas.len() < MIN_SWEEP_POINTS {
                    return Err(ConfigError::at(
                        "alphas",
                        format!(
                            "an alpha sweep needs at least {MIN_SWEEP_POINTS} values, got {}",
                            p.alphas.len()
                        ),
                    ));
                }
                for &a in &p.alphas {
                    let spec = LossSpec::alpha(a);
                    spec.validate().map_err(|e| ConfigError::at("alphas", e.to_string()))?;
                    self.train_for(&spec, 0)
                        .validate(&spec)
                        .map_err(|e| ConfigError::at("train", e.to_string()))?;
                }
            }
            Recipe::Fcurve(p) => {
                if p.pi_grid.is_empty() || p.pi_grid.iter().any(|v| !(*v > 0.0 && *v < 1.0)) {
                    return Err(ConfigError::at(
                        "pi_grid",
                        "pi_grid must be nonempty with values in (0, 1)",
                    ));
                }
                if p.t_grid.is_empty() || p.t_grid.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                    return Err(ConfigError::at(
                        "t_grid",
                        "t_grid must be nonempty with finite values >= 0",
                    ));
                }
                if p.check_t.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                    return Err(ConfigError::at("check_t", "check_t values must be finite and >= 0"));
                }
            }
            Recipe::LimitCheck(p) => {
                if p.rhos.is_empty() || p.rhos.iter().any(|v| !(*v > 0.0 && *v <= 1.0)) {
                    return Err(ConfigError::at("rhos", "rhos must be nonempty with values in (0, 1]"));
                }
                if p.mc_n < 2 || p.solver_max_iter == 0 {
                    return Err(ConfigError::at("mc_n", "mc_n must be >= 2 and solver_max_iter >= 1"));
                }
                if let Some(s) = self
                    .losses
                    .iter()
                    .find(|s| !matches!(s.family, LossFamily::Square | LossFamily::Erf | LossFamily::Alpha))
                {
                    return Err(ConfigError::at(
                        "losses",
                        format!("no limiting classifier is available for {}", s.family),
                    ));
                }
            }
            Recipe::CAblation(p) => {
                if !p.cpens.contains(&0.0) || p.cpens.iter().filter(|c| **c > 0.0).count() < 5 {
                    return Err(ConfigError::at(
                        "cpens",
                        "cpens must contain 0 and at least 5 positive values",
                    ));
                }
                for &c in &p.cpens {
                    let spec = LossSpec::tbl(p.alpha, c);
                    spec.validate().map_err(|e| ConfigError::at("cpens", e.to_string()))?;
                    self.train_for(&spec, 0)
                        .validate(&spec)
                        .map_err(|e| ConfigError::at("train", e.to_string()))?;
                }
                if !(0.0..0.5).contains(&p.label_noise) {
                    return Err(ConfigError::at("label_noise", "label_noise must lie in [0, 0.5)"));
                }
                if p.n_test_minority == 0 || p.n_test_majority == 0 {
                    return Err(ConfigError::at("n_test_minority", "test counts must be positive"));
                }
            }
            Recipe::InfluenceDemo(p) => {
                if p.n_minority == 0 || p.n_majority == 0 {
                    return Err(ConfigError::at("n_minority", "both class counts must be positive"));
                }
                if !(p.eps > 0.0 && p.eps < 1.0) || !(p.tol > 0.0) {
                    return Err(ConfigError::at(
                        "eps",
                        "eps must lie in (0, 1) and tol must be positive",
                    ));
                }
                if let Some(s) = self.losses.iter().find(|s| s.family == LossFamily::Square) {
                    return Err(ConfigError::at(
                        "losses",
                        format!("{} has no Hessian on the logistic link", s.family),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Compact serialization with every default filled in.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn pretty_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }

    /// SHA-256 of the canonical form with the output path removed.
    pub fn hash(&self) -> String {
        let stripped = ExperimentConfig {
            output: None,
            ..self.clone()
        };
        hex::encode(Sha256::digest(stripped.canonical_json().as_bytes()))
    }
}

pub fn default_losses(kind: RecipeKind) -> Vec<LossSpec> {
    match kind {
        RecipeKind::Boundary => vec![
            LossSpec::ce(),
            LossSpec::focal(2.0),
            LossSpec::poly(1.0),
            LossSpec::vs(0.5),
            LossSpec::alpha(0.5),
        ],
        RecipeKind::AlphaSweep | RecipeKind::CAblation => vec![LossSpec::ce()],
        RecipeKind::Fcurve => vec![
            LossSpec::ce(),
            LossSpec::square(),
            LossSpec::erf(),
            LossSpec::focal(1.0),
            LossSpec::poly(-0.5),
            LossSpec::vs(0.5),
            LossSpec::alpha(0.5),
            LossSpec::tbl(0.5, 0.3),
        ],
        RecipeKind::LimitCheck => vec![
            LossSpec::square(),
            LossSpec::erf(),
            LossSpec::alpha(0.5),
            LossSpec::alpha(0.9),
        ],
        RecipeKind::InfluenceDemo => vec![LossSpec::ce(), LossSpec::alpha(0.5)],
    }
}

/// serde_json appends " at line L column C"; the position is reported separately.
fn strip_position(msg: &str) -> String {
    match msg.rfind(" at line ") {
        Some(i) => msg[..i].to_string(),
        None => msg.to_string(),
    }
}

/// Line and column of the first `"key"` naming the last segment of `path`.
fn locate(text: &str, path: &str) -> Option<(usize, usize)> {
    let key = path.rsplit('.').next().filter(|k| !k.is_empty())?;
    let needle = format!("\"{key}\"");
    let at = text.find(&needle)?;
    let before = &text[..at];
    let line = before.matches('\n').count() + 1;
    let column = at - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    Some((line, column))
}
