//! Result tables, run manifests and the writer that puts a run on disk.

use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};
use uic_core::LossSpec;

use crate::config::{ExperimentConfig, SCHEMA_VERSION};
use crate::error::CliError;
use crate::io::{format_float, write_plot_data, PlotData};

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub experiment: String,
    /// `None` for rows aggregated over seeds or with no randomness.
    pub seed: Option<u64>,
    pub loss: String,
    /// `name=value` pairs joined by `;`.
    pub hyperparameters: String,
    pub metric: String,
    pub value: f64,
}

impl ResultRow {
    pub fn new(experiment: &str, seed: Option<u64>, spec: &LossSpec, metric: &str, value: f64) -> Self {
        ResultRow {
            experiment: experiment.into(),
            seed,
            loss: spec.family.name().into(),
            hyperparameters: hyperparameter_string(spec),
            metric: metric.into(),
            value,
        }
    }

    fn key(&self) -> (&str, &str, &str, Option<u64>, &str) {
        (
            &self.experiment,
            &self.loss,
            &self.hyperparameters,
            self.seed,
            &self.metric,
        )
    }
}

pub fn hyperparameter_string(spec: &LossSpec) -> String {
    spec.hyperparameters()
        .iter()
        .map(|(k, v)| format!("{k}={}", format_float(*v)))
        .collect::<Vec<_>>()
        .join(";")
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub artifact_version: String,
    pub config_hash: String,
    pub rows: Vec<ResultRow>,
}

impl ResultTable {
    /// Sorts `rows` by (experiment, loss, hyperparameters, seed, metric) so
    /// the table does not depend on the order cells finished in.
    pub fn new(config_hash: String, mut rows: Vec<ResultRow>) -> Self {
        rows.sort_by(|a, b| {
            a.key()
                .partial_cmp(&b.key())
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| a.value.total_cmp(&b.value))
        });
        ResultTable {
            artifact_version: ARTIFACT_VERSION.into(),
            config_hash,
            rows,
        }
    }

    pub fn find(&self, experiment: &str, loss: &str, metric: &str) -> impl Iterator<Item = &ResultRow> {
        let (e, l, m) = (experiment.to_string(), loss.to_string(), metric.to_string());
        self.rows
            .iter()
            .filter(move |r| r.experiment == e && r.loss == l && r.metric == m)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("experiment,seed,loss,hyperparameters,metric,value\n");
        for r in &self.rows {
            s += &format!(
                "{},{},{},{},{},{}\n",
                r.experiment,
                r.seed.map(|v| v.to_string()).unwrap_or_default(),
                r.loss,
                r.hyperparameters,
                r.metric,
                format_float(r.value)
            );
        }
        s
    }
}

/// A cell that could not be computed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Failure {
    pub cell: String,
    pub error: String,
    /// The numerical routines gave up, as opposed to an invalid input.
    pub numerical: bool,
}

/// Everything a recipe computed, before anything touches the disk.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub table: ResultTable,
    /// File name (relative to the output directory) and contents.
    pub plots: Vec<(String, PlotData)>,
    /// Training samples to write, by file name.
    pub samples: Vec<(String, uic_core::Dataset)>,
    pub failures: Vec<Failure>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ManifestFile {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Manifest {
    pub artifact_version: String,
    pub schema_version: u32,
    pub recipe: String,
    pub config_hash: String,
    pub status: String,
    pub files: Vec<ManifestFile>,
    pub failures: Vec<Failure>,
}

pub const RESULTS_FILE: &str = "results.csv";
pub const CONFIG_FILE: &str = "config.json";
pub const MANIFEST_FILE: &str = "manifest.json";

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

fn describe(dir: &Path, name: &str) -> Result<ManifestFile, CliError> {
    let path = dir.join(name);
    let bytes = std::fs::read(&path).map_err(|e| CliError::io(&path, e))?;
    Ok(ManifestFile {
        path: name.into(),
        sha256: hex::encode(Sha256::digest(&bytes)),
        bytes: bytes.len() as u64,
    })
}

/// Writes the result table, plot data, samples, the canonical config and the
/// manifest into `dir`. Returns the manifest path.
pub fn write_run(dir: &Path, cfg: &ExperimentConfig, outcome: &RunOutcome) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut names = vec![RESULTS_FILE.to_string(), CONFIG_FILE.to_string()];
    write_bytes(&dir.join(RESULTS_FILE), outcome.table.to_csv().as_bytes())?;
    let stripped = ExperimentConfig {
        output: None,
        ..cfg.clone()
    };
    write_bytes(&dir.join(CONFIG_FILE), stripped.pretty_json().as_bytes())?;
    for (name, data) in &outcome.plots {
        write_plot_data(data, &dir.join(name))?;
        names.push(name.clone());
    }
    for (name, data) in &outcome.samples {
        crate::io::write_samples(data, &dir.join(name))?;
        names.push(name.clone());
    }
    names.sort();
    let files = names.iter().map(|n| describe(dir, n)).collect::<Result<Vec<_>, _>>()?;
    let manifest = Manifest {
        artifact_version: ARTIFACT_VERSION.into(),
        schema_version: SCHEMA_VERSION,
        recipe: cfg.recipe.kind().name().into(),
        config_hash: outcome.table.config_hash.clone(),
        status: if outcome.failures.is_empty() {
            "complete"
        } else {
            "partial"
        }
        .into(),
        files,
        failures: outcome.failures.clone(),
    };
    let path = dir.join(MANIFEST_FILE);
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    write_bytes(&path, text.as_bytes())?;
    Ok(path)
}
