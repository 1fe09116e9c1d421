//! Run configuration: a single JSON file plus flag overrides (flags win).

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use timecf::cfgen::ExplainConfig;
use timecf::classifiers::CnnHyper;
use timecf::eval::{BenchmarkConfig, IForestConfig};
use timecf::ingest::SyntheticSpec;
use timecf::series::{ClassLabel, Interval};
use timecf::shapelets::RstConfig;
use timecf::timegan::TimeGanConfig;

/// Where the train/test splits come from. Exactly one source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetSource {
    Synthetic {
        train: SyntheticSpec,
        test_n_per_class: usize,
        test_seed: u64,
    },
    Ucr {
        train: PathBuf,
        test: PathBuf,
    },
}

impl DatasetSource {
    pub fn name(&self) -> String {
        match self {
            DatasetSource::Synthetic { .. } => "synthetic-bump".into(),
            DatasetSource::Ucr { train, .. } => train
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "ucr".into()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierChoice {
    OneNn,
    Cnn,
    /// Degenerate fixed-label classifier; only useful for exercising the
    /// no-counterfactual path.
    Constant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub dataset: DatasetSource,
    pub classifier: ClassifierChoice,
    pub cnn: CnnHyper,
    pub rst: RstConfig,
    pub gan: TimeGanConfig,
    pub iforest: IForestConfig,
    pub m_fakes: usize,
    pub eps: f64,
    pub cache_gans: bool,
    pub outlier_quantile: f64,
    pub seed: u64,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            dataset: DatasetSource::Synthetic {
                train: SyntheticSpec::default(),
                test_n_per_class: 10,
                test_seed: SyntheticSpec::default().seed + 1,
            },
            classifier: ClassifierChoice::OneNn,
            cnn: CnnHyper::default(),
            rst: RstConfig::default(),
            gan: TimeGanConfig::default(),
            iforest: IForestConfig::default(),
            m_fakes: 50,
            eps: 1e-8,
            cache_gans: true,
            outlier_quantile: 0.9,
            seed: 7,
            out_dir: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn load(path: &std::path::Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Overrides the master seed and every sub-config seed with `seed`.
    pub fn override_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.rst.seed = seed.wrapping_add(1);
        self.gan.seed = seed.wrapping_add(2);
        self.iforest.seed = seed.wrapping_add(3);
        if let DatasetSource::Synthetic {
            train, test_seed, ..
        } = &mut self.dataset
        {
            train.seed = seed.wrapping_add(4);
            *test_seed = seed.wrapping_add(5);
        }
    }

    pub fn explain_config(&self) -> ExplainConfig {
        ExplainConfig {
            m_fakes: self.m_fakes,
            eps: self.eps,
            gan: self.gan.clone(),
            cache_gans: self.cache_gans,
            seed: self.seed,
        }
    }

    pub fn benchmark_config(&self) -> BenchmarkConfig {
        BenchmarkConfig {
            dataset_name: self.dataset.name(),
            explain: self.explain_config(),
            rst: self.rst.clone(),
            iforest: self.iforest,
            outlier_quantile: self.outlier_quantile,
        }
    }

    /// Constant-classifier label used when `classifier = constant`.
    pub fn constant_label(&self) -> ClassLabel {
        ClassLabel(0)
    }
}

/// A compact synthetic default whose discriminative region is the planted
/// bump; mirrors the library's canonical desk-scale benchmark.
pub fn default_bump_interval() -> Interval {
    SyntheticSpec::default().bump_interval
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_round_trips_through_json() {
        let cfg = RunConfig::default();
        let json = serde_json::to_string_pretty(&cfg).unwrap();
        let back: RunConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn partial_json_fills_defaults() {
        let cfg: RunConfig =
            serde_json::from_str(r#"{"m_fakes": 12, "classifier": "cnn"}"#).unwrap();
        assert_eq!(cfg.m_fakes, 12);
        assert_eq!(cfg.classifier, ClassifierChoice::Cnn);
        assert_eq!(cfg.eps, 1e-8);
    }

    #[test]
    fn seed_override_propagates() {
        let mut cfg = RunConfig::default();
        cfg.override_seed(100);
        assert_eq!(cfg.seed, 100);
        assert_eq!(cfg.rst.seed, 101);
        assert_eq!(cfg.gan.seed, 102);
        assert_eq!(cfg.iforest.seed, 103);
        match &cfg.dataset {
            DatasetSource::Synthetic {
                train, test_seed, ..
            } => {
                assert_eq!(train.seed, 104);
                assert_eq!(*test_seed, 105);
            }
            _ => panic!(),
        }
    }
}
