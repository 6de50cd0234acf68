//! Run configuration: JSON file plus CLI flag overrides. A single global
//! seed drives every stage; per-stage seeds are derived from it so one knob
//! reproduces the whole run.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use gafs_core::dataset::ImputePolicy;
use gafs_core::evaluation::{EvaluationConfig, SelectorSpec};
use gafs_core::ga::GaConfig;
use gafs_core::neuro::CostConfig;
use gafs_core::preprocess::SmoteConfig;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "format", rename_all = "kebab-case")]
pub enum DatasetConfig {
    /// Raw SECOM file pair.
    Secom { features: PathBuf, labels: PathBuf },
    /// Generic CSV with a header and a binary label column.
    Csv { path: PathBuf, label_column: String },
    /// Built-in synthetic sensor generator (demo runs without data files).
    Synthetic {
        rows: usize,
        features: usize,
        failures: usize,
        #[serde(default)]
        gen_seed: u64,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct PreprocessConfig {
    pub impute: ImputePolicy,
    /// Chi-square quantile for outlier elimination; null disables the stage.
    pub outlier_quantile: Option<f64>,
    /// Minority over-sampling applied to the training partition; null
    /// disables the stage.
    pub smote: Option<SmoteConfig>,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            impute: ImputePolicy::default(),
            outlier_quantile: Some(0.975),
            smote: Some(SmoteConfig::default()),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitConfig {
    pub train_fraction: f64,
    pub stratified: bool,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            train_fraction: 0.7,
            stratified: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub dataset: DatasetConfig,
    #[serde(default)]
    pub preprocess: PreprocessConfig,
    #[serde(default)]
    pub split: SplitConfig,
    #[serde(default)]
    pub ga: GaConfig,
    #[serde(default)]
    pub cost: CostConfig,
    /// Baseline selectors for the `compare` stage; the proposed method row
    /// is always included.
    #[serde(default = "default_baselines")]
    pub baselines: Vec<SelectorSpec>,
    #[serde(default)]
    pub evaluation: EvaluationConfig,
    /// Write a GA checkpoint every this many generations.
    #[serde(default)]
    pub checkpoint_every: Option<usize>,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_baselines() -> Vec<SelectorSpec> {
    vec![
        SelectorSpec::Fwe { alpha: 0.05 },
        SelectorSpec::Fdr { alpha: 0.05 },
        SelectorSpec::Percentile { percentile: 12.0 },
    ]
}

/// Flag overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub omega: Option<f64>,
    pub pop: Option<usize>,
    pub iters: Option<usize>,
}

impl RunConfig {
    pub fn load(path: &Path, overrides: &Overrides) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| anyhow::anyhow!("cannot read config {}: {e}", path.display()))?;
        let mut config: RunConfig = serde_json::from_str(&text)
            .map_err(|e| anyhow::anyhow!("invalid config {}: {e}", path.display()))?;
        config.apply(overrides);
        Ok(config)
    }

    pub fn apply(&mut self, overrides: &Overrides) {
        if let Some(seed) = overrides.seed {
            self.seed = seed;
        }
        if let Some(out) = &overrides.out {
            self.out_dir = out.clone();
        }
        if let Some(omega) = overrides.omega {
            self.cost.omega = omega;
        }
        if let Some(pop) = overrides.pop {
            self.ga.population_size = pop;
        }
        if let Some(iters) = overrides.iters {
            self.ga.max_iterations = iters;
        }
    }

    /// Validates everything before any work starts: referenced files exist
    /// and sub-configs pass their own invariants.
    pub fn validate(&self) -> anyhow::Result<()> {
        match &self.dataset {
            DatasetConfig::Secom { features, labels } => {
                for p in [features, labels] {
                    if !p.is_file() {
                        anyhow::bail!("dataset file not found: {}", p.display());
                    }
                }
            }
            DatasetConfig::Csv { path, .. } => {
                if !path.is_file() {
                    anyhow::bail!("dataset file not found: {}", path.display());
                }
            }
            DatasetConfig::Synthetic {
                rows,
                features,
                failures,
                ..
            } => {
                if *rows < 10 || *features < 2 || *failures < 2 || failures * 2 >= *rows {
                    anyhow::bail!("synthetic dataset shape invalid");
                }
            }
        }
        if !(0.0 < self.split.train_fraction && self.split.train_fraction < 1.0) {
            anyhow::bail!("split.train_fraction must be in (0,1)");
        }
        if let Some(q) = self.preprocess.outlier_quantile {
            if !(0.0 < q && q < 1.0) {
                anyhow::bail!("outlier_quantile must be in (0,1)");
            }
        }
        self.ga
            .validate()
            .map_err(|e| anyhow::anyhow!("ga config: {e}"))?;
        self.evaluation
            .train
            .validate()
            .map_err(|e| anyhow::anyhow!("classifier config: {e}"))?;
        if self.cost.omega < 0.0 {
            anyhow::bail!("cost.omega must be >= 0");
        }
        if !(0.0 < self.cost.inner_train_fraction && self.cost.inner_train_fraction < 1.0) {
            anyhow::bail!("cost.inner_train_fraction must be in (0,1)");
        }
        Ok(())
    }

    /// Derives per-stage seeds from the global seed so the single `seed` key
    /// reproduces the run.
    pub fn effective(&self) -> RunConfig {
        use gafs_core::rng::derive_seed;
        let mut cfg = self.clone();
        cfg.ga.seed = derive_seed(self.seed, &[11]);
        if let Some(smote) = &mut cfg.preprocess.smote {
            smote.seed = derive_seed(self.seed, &[12]);
        }
        cfg.cost.lm.seed = derive_seed(self.seed, &[13]);
        cfg.evaluation.train.seed = derive_seed(self.seed, &[14]);
        cfg
    }
}

/// Grid for the parameter-study sweep: the (crossover, mutation) blocks are
/// crossed with zipped (population, hidden-neuron) scale rows, mirroring the
/// published table layout.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepGrid {
    pub crossover_rates: Vec<f64>,
    pub mutation_rates: Vec<f64>,
    pub scale_rows: Vec<ScaleRow>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ScaleRow {
    pub population: usize,
    pub hidden: usize,
}

impl SweepGrid {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| anyhow::anyhow!("cannot read grid {}: {e}", path.display()))?;
        let grid: SweepGrid = serde_json::from_str(&text)
            .map_err(|e| anyhow::anyhow!("invalid grid {}: {e}", path.display()))?;
        if grid.crossover_rates.is_empty()
            || grid.mutation_rates.is_empty()
            || grid.scale_rows.is_empty()
        {
            anyhow::bail!("sweep grid must have at least one entry per axis");
        }
        Ok(grid)
    }

    pub fn cells(&self) -> Vec<(f64, f64, ScaleRow)> {
        let mut cells = Vec::new();
        for &theta in &self.crossover_rates {
            for &mu in &self.mutation_rates {
                for &row in &self.scale_rows {
                    cells.push((theta, mu, row));
                }
            }
        }
        cells
    }
}
