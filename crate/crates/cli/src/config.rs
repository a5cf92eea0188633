//! JSON experiment configuration.
//!
//! Relative paths are resolved against the directory holding the config file.
//! Omitted grids fall back to the tuning ranges below; `delta` and `n` only
//! apply when one of the penalties is `exp`.

use std::path::{Path, PathBuf};

use lrssc::data::{self, Dataset, PartitionSpec, SynthParams};
use lrssc::{PenaltyKind, PenaltySpec, SolverConfig};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub fn default_delta_grid() -> Vec<f64> {
    vec![
        1.0 / 50.0,
        1.0 / 5.0,
        2.0 / 5.0,
        7.0 / 10.0,
        10.0,
        20.0,
        30.0,
        40.0,
        50.0,
    ]
}

pub fn default_n_grid() -> Vec<f64> {
    (0..=10).map(|i| 1.0 + i as f64 / 10.0).collect()
}

pub fn default_lambda_grid() -> Vec<f64> {
    (0..=10).map(|i| i as f64 / 10.0).collect()
}

pub fn default_mu0_grid() -> Vec<f64> {
    (0..=4).map(|i| 2.0 + i as f64 / 2.0).collect()
}

fn default_rho() -> f64 {
    3.0
}

fn default_partitions() -> usize {
    1
}

fn default_true() -> bool {
    true
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("results")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSource {
    Synth {
        ambient_dim: usize,
        clusters: usize,
        subspace_dim: usize,
        points_per_cluster: usize,
        #[serde(default)]
        noise_sigma: f64,
        /// Generator seed; defaults to the experiment seed.
        #[serde(default)]
        seed: Option<u64>,
    },
    Idx {
        images: PathBuf,
        labels: PathBuf,
    },
    PgmDir {
        dir: PathBuf,
    },
    Csv {
        path: PathBuf,
        #[serde(default = "default_true")]
        has_labels_row: bool,
    },
    F64bin {
        path: PathBuf,
    },
}

/// Penalty family. Exponential parameters come from the `delta` / `n` grids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PenaltyConfig {
    pub kind: String,
    #[serde(default)]
    pub scale_by_inv_delta: bool,
}

impl PenaltyConfig {
    pub fn kind(&self) -> CliResult<PenaltyKind> {
        self.kind
            .parse()
            .map_err(|e: lrssc::Error| CliError::config(e.to_string()))
    }

    fn spec(&self, delta: Option<f64>, n: Option<f64>) -> CliResult<PenaltySpec> {
        Ok(match self.kind()? {
            PenaltyKind::ExpAdaptive => PenaltySpec::exp(
                delta.unwrap_or(1.0),
                n.unwrap_or(1.0),
                self.scale_by_inv_delta,
            )
            .map_err(|e| CliError::config(e.to_string()))?,
            k => PenaltySpec::simple(k),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionConfig {
    pub in_per_cluster: usize,
    #[serde(default)]
    pub out_per_cluster: usize,
}

/// Solver knobs other than the tuned ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverOptions {
    pub eps: f64,
    pub k_max: usize,
    pub mu_max: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            eps: 1e-4,
            k_max: 100,
            mu_max: 1e6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetSource,
    pub penalty_f: PenaltyConfig,
    pub penalty_g: PenaltyConfig,
    #[serde(default = "default_lambda_grid")]
    pub lambda: Vec<f64>,
    #[serde(default = "default_mu0_grid")]
    pub mu0: Vec<f64>,
    #[serde(default = "default_rho")]
    pub rho: f64,
    #[serde(default = "default_delta_grid")]
    pub delta: Vec<f64>,
    #[serde(default = "default_n_grid")]
    pub n: Vec<f64>,
    /// Entries kept per column before building the affinity; defaults to the dataset's.
    #[serde(default)]
    pub d: Option<usize>,
    #[serde(default = "default_partitions")]
    pub num_partitions: usize,
    /// Omitted: every sample in-sample, none held out.
    #[serde(default)]
    pub partition: Option<PartitionConfig>,
    /// Partitions drawn for `grid`; mean scores over them pick the winner.
    #[serde(default = "default_partitions")]
    pub tuning_partitions: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_true")]
    pub normalize: bool,
    /// Ridge parameter for labelling held-out samples.
    #[serde(default)]
    pub out_of_sample_gamma: Option<f64>,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

/// One point of the hyperparameter product.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub lambda: f64,
    pub mu0: f64,
    pub delta: Option<f64>,
    pub n: Option<f64>,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl GridPoint {
    pub fn csv_fields(&self) -> [String; 4] {
        [
            self.lambda.to_string(),
            self.mu0.to_string(),
            fmt_opt(self.delta),
            fmt_opt(self.n),
        ]
    }

    pub fn label(&self) -> String {
        let mut s = format!("lambda={} mu0={}", self.lambda, self.mu0);
        if let (Some(d), Some(n)) = (self.delta, self.n) {
            s.push_str(&format!(" delta={d} n={n}"));
        }
        s
    }
}

fn check_grid(name: &str, grid: &[f64], ok: impl Fn(f64) -> bool, what: &str) -> CliResult<()> {
    if grid.is_empty() {
        return Err(CliError::config(format!("grid '{name}' is empty")));
    }
    if let Some(v) = grid.iter().find(|&&v| !(v.is_finite() && ok(v))) {
        return Err(CliError::config(format!(
            "grid '{name}' value {v} is not {what}"
        )));
    }
    Ok(())
}

impl ExperimentConfig {
    /// Parses a config file; relative paths become relative to its directory.
    pub fn load(path: &Path) -> CliResult<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| CliError::from(e).context(path.display()))?;
        let mut cfg = Self::from_json(&text).map_err(|e| e.context(path.display()))?;
        let parent = path
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .unwrap_or(Path::new("."));
        let base =
            std::path::absolute(parent).map_err(|e| CliError::from(e).context(parent.display()))?;
        cfg.resolve_paths(&base);
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> CliResult<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| CliError::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        match &mut self.dataset {
            DatasetSource::Synth { .. } => {}
            DatasetSource::Idx { images, labels } => {
                fix(images);
                fix(labels);
            }
            DatasetSource::PgmDir { dir } => fix(dir),
            DatasetSource::Csv { path, .. } | DatasetSource::F64bin { path } => fix(path),
        }
        fix(&mut self.output_dir);
    }

    pub fn validate(&self) -> CliResult<()> {
        self.penalty_f.kind()?;
        self.penalty_g.kind()?;
        check_grid(
            "lambda",
            &self.lambda,
            |v| (0.0..=1.0).contains(&v),
            "in [0, 1]",
        )?;
        check_grid("mu0", &self.mu0, |v| v > 0.0, "positive")?;
        check_grid("delta", &self.delta, |v| v > 0.0, "positive")?;
        check_grid("n", &self.n, |v| v >= 1.0, ">= 1")?;
        if !(self.rho.is_finite() && self.rho > 1.0) {
            return Err(CliError::config(format!(
                "rho must exceed 1, got {}",
                self.rho
            )));
        }
        if self.num_partitions == 0 || self.tuning_partitions == 0 {
            return Err(CliError::config(
                "num_partitions and tuning_partitions must be positive",
            ));
        }
        if self.d == Some(0) {
            return Err(CliError::config("d must be positive"));
        }
        if let Some(p) = &self.partition {
            if p.in_per_cluster == 0 {
                return Err(CliError::config(
                    "partition.in_per_cluster must be positive",
                ));
            }
        }
        if let Some(g) = self.out_of_sample_gamma {
            if !(g.is_finite() && g > 0.0) {
                return Err(CliError::config(format!(
                    "out_of_sample_gamma must be positive, got {g}"
                )));
            }
        }
        for p in self.grid_points() {
            self.solver_config(&p)?
                .validate()
                .map_err(|e| CliError::config(e.to_string()))?;
        }
        Ok(())
    }

    pub fn uses_exp(&self) -> bool {
        [&self.penalty_f, &self.penalty_g]
            .iter()
            .any(|p| p.kind().is_ok_and(|k| k == PenaltyKind::ExpAdaptive))
    }

    /// Cartesian product in the order lambda, mu0, delta, n (last varies fastest).
    pub fn grid_points(&self) -> Vec<GridPoint> {
        let exp: Vec<(Option<f64>, Option<f64>)> = if self.uses_exp() {
            self.delta
                .iter()
                .flat_map(|&d| self.n.iter().map(move |&n| (Some(d), Some(n))))
                .collect()
        } else {
            vec![(None, None)]
        };
        let mut out = Vec::new();
        for &lambda in &self.lambda {
            for &mu0 in &self.mu0 {
                for &(delta, n) in &exp {
                    out.push(GridPoint {
                        lambda,
                        mu0,
                        delta,
                        n,
                    });
                }
            }
        }
        out
    }

    pub fn solver_config(&self, p: &GridPoint) -> CliResult<SolverConfig> {
        let mut cfg = SolverConfig::new(
            p.lambda,
            self.penalty_f.spec(p.delta, p.n)?,
            self.penalty_g.spec(p.delta, p.n)?,
        )
        .mu0(p.mu0)
        .rho(self.rho);
        cfg.eps = self.solver.eps;
        cfg.k_max = self.solver.k_max;
        cfg.mu_max = self.solver.mu_max;
        cfg.record_lagrangian = false;
        Ok(cfg)
    }

    /// Copy of this config reduced to a single grid point.
    pub fn pinned(&self, p: &GridPoint) -> Self {
        let mut cfg = self.clone();
        cfg.lambda = vec![p.lambda];
        cfg.mu0 = vec![p.mu0];
        if let (Some(d), Some(n)) = (p.delta, p.n) {
            cfg.delta = vec![d];
            cfg.n = vec![n];
        }
        cfg
    }

    pub fn load_dataset(&self) -> CliResult<Dataset> {
        let ds = match &self.dataset {
            DatasetSource::Synth {
                ambient_dim,
                clusters,
                subspace_dim,
                points_per_cluster,
                noise_sigma,
                seed,
            } => data::synth_union_of_subspaces(&SynthParams {
                ambient_dim: *ambient_dim,
                clusters: *clusters,
                subspace_dim: *subspace_dim,
                points_per_cluster: *points_per_cluster,
                noise_sigma: *noise_sigma,
                seed: seed.unwrap_or(self.seed),
            })
            .map_err(|e| CliError::config(e.to_string()).context("dataset"))?,
            DatasetSource::Idx { images, labels } => data::load_idx(images, labels)?,
            DatasetSource::PgmDir { dir } => data::load_pgm_dir(dir)?,
            DatasetSource::Csv {
                path,
                has_labels_row,
            } => data::load_csv(path, *has_labels_row)?,
            DatasetSource::F64bin { path } => data::load_f64bin(path)?,
        };
        if ds.is_empty() {
            return Err(CliError::new(
                crate::error::Category::Data,
                "dataset has no samples",
            ));
        }
        Ok(ds)
    }

    pub fn ipd_dim(&self, ds: &Dataset) -> usize {
        self.d.unwrap_or(ds.default_d)
    }

    pub fn partition_spec(&self, ds: &Dataset, seed: u64) -> PartitionSpec {
        match &self.partition {
            Some(p) => PartitionSpec {
                in_per_cluster: p.in_per_cluster,
                out_per_cluster: p.out_per_cluster,
                seed,
            },
            None => PartitionSpec {
                in_per_cluster: ds.cluster_indices().iter().map(Vec::len).min().unwrap_or(0),
                out_per_cluster: 0,
                seed,
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "dataset": {"kind": "synth", "ambient_dim": 30, "clusters": 5, "subspace_dim": 3, "points_per_cluster": 50},
        "penalty_f": {"kind": "exp"},
        "penalty_g": {"kind": "exp"}
    }"#;

    #[test]
    fn defaults_cover_tuning_ranges() {
        let cfg = ExperimentConfig::from_json(MINIMAL).unwrap();
        assert_eq!(cfg.lambda.len(), 11);
        assert_eq!(cfg.mu0, vec![2.0, 2.5, 3.0, 3.5, 4.0]);
        assert_eq!(cfg.delta.len(), 9);
        assert_eq!(cfg.n.len(), 11);
        assert!((cfg.n[10] - 2.0).abs() < 1e-15);
        assert_eq!(cfg.rho, 3.0);
        assert_eq!(cfg.grid_points().len(), 11 * 5 * 9 * 11);
    }

    #[test]
    fn non_exp_penalties_ignore_exp_grids() {
        let text = MINIMAL.replace("\"exp\"", "\"l1\"");
        let cfg = ExperimentConfig::from_json(&text).unwrap();
        let pts = cfg.grid_points();
        assert_eq!(pts.len(), 55);
        assert!(pts.iter().all(|p| p.delta.is_none()));
    }

    #[test]
    fn grid_order_varies_last_field_fastest() {
        let text = MINIMAL.replace(
            "\"penalty_g\": {\"kind\": \"exp\"}",
            "\"penalty_g\": {\"kind\": \"exp\"}, \"lambda\": [0.1, 0.2], \"mu0\": [3], \"delta\": [1], \"n\": [1, 2]",
        );
        let cfg = ExperimentConfig::from_json(&text).unwrap();
        let pts: Vec<(f64, f64)> = cfg
            .grid_points()
            .iter()
            .map(|p| (p.lambda, p.n.unwrap()))
            .collect();
        assert_eq!(pts, vec![(0.1, 1.0), (0.1, 2.0), (0.2, 1.0), (0.2, 2.0)]);
    }

    #[test]
    fn rejects_unknown_fields_and_bad_values() {
        let err = ExperimentConfig::from_json(&MINIMAL.replace("\"clusters\"", "\"clusterz\""))
            .unwrap_err();
        assert!(err.message.contains("clusterz"), "{}", err.message);
        assert!(err.message.contains("line"), "{}", err.message);
        let err =
            ExperimentConfig::from_json(&MINIMAL.replacen('{', "{\"bogus\": 1,", 1)).unwrap_err();
        assert!(err.message.contains("bogus"));
        let bad = MINIMAL.replace(
            "\"penalty_g\": {\"kind\": \"exp\"}",
            "\"penalty_g\": {\"kind\": \"exp\"}, \"lambda\": [1.5]",
        );
        assert!(ExperimentConfig::from_json(&bad)
            .unwrap_err()
            .message
            .contains("lambda"));
        let bad = MINIMAL.replace(
            "\"penalty_g\": {\"kind\": \"exp\"}",
            "\"penalty_g\": {\"kind\": \"exp\"}, \"mu0\": []",
        );
        assert!(ExperimentConfig::from_json(&bad)
            .unwrap_err()
            .message
            .contains("empty"));
        let bad = MINIMAL.replace("\"kind\": \"exp\"}", "\"kind\": \"l3\"}");
        assert!(ExperimentConfig::from_json(&bad).is_err());
    }

    #[test]
    fn round_trips_through_json() {
        let cfg = ExperimentConfig::from_json(MINIMAL).unwrap();
        assert_eq!(ExperimentConfig::from_json(&cfg.to_json()).unwrap(), cfg);
    }
}
