//! The four explainability metrics (closeness, sparsity, sensibility,
//! plausibility), the Isolation Forest plausibility oracle, and the
//! benchmark harness comparing Time-CF against the nearest-unlike-neighbor
//! baseline across classifiers.

mod iforest;

pub use iforest::{anomaly_score_from_path, average_path_length, IForestConfig, IsolationForest};

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cfgen::{nun_baseline, ExplainConfig, Method, TimeCfExplainer};
use crate::classifiers::{CnnHyper, ConstantClassifier, OneNnClassifier, SmallCnnClassifier};
use crate::error::{Error, Result};
use crate::series::{hamming_distance, l1_distance, ClassLabel, Dataset, Predictor, TimeSeries};
use crate::shapelets::{extract_top_shapelets, RstConfig};

/// Shape similarity between counterfactual and original, in Manhattan
/// distance; lower is better.
pub fn closeness(orig: &TimeSeries, cf: &TimeSeries) -> Result<f64> {
    l1_distance(orig, cf)
}

/// Percentage of time steps left unaltered: `100 (1 - hamming / N)`.
/// Higher is better; 0 means every point was altered.
pub fn sparsity(orig: &TimeSeries, cf: &TimeSeries, eps: f64) -> Result<f64> {
    let altered = hamming_distance(orig, cf, eps)?;
    // written as 100 - altered% so that sparsity + altered% == 100 exactly
    Ok(100.0 - 100.0 * altered as f64 / orig.len() as f64)
}

/// Fraction of instances for which an explanation was found.
pub fn sensibility(outcomes: &[bool]) -> Result<f64> {
    if outcomes.is_empty() {
        return Err(Error::invalid_input("sensibility of an empty outcome list"));
    }
    Ok(outcomes.iter().filter(|&&e| e).count() as f64 / outcomes.len() as f64)
}

/// Nearest-rank upper quantile of `scores` (e.g. 0.9 for the 90th
/// percentile): the smallest score such that at least `quantile` of the
/// data is <= it.
pub fn score_quantile(scores: &[f64], quantile: f64) -> Result<f64> {
    if scores.is_empty() {
        return Err(Error::invalid_input("quantile of an empty score list"));
    }
    if !(0.0..=1.0).contains(&quantile) {
        return Err(Error::invalid_input("quantile must lie in [0, 1]"));
    }
    let mut sorted = scores.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = ((quantile * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    Ok(sorted[rank - 1])
}

/// Fraction of counterfactual series scoring strictly above `threshold`
/// under the fitted forest; lower is better.
pub fn plausibility(
    cfs: &[TimeSeries],
    forest: &IsolationForest,
    threshold: f64,
) -> Result<f64> {
    if cfs.is_empty() {
        return Err(Error::invalid_input("plausibility of an empty list"));
    }
    let mut outliers = 0usize;
    for cf in cfs {
        if forest.score(cf.values())? > threshold {
            outliers += 1;
        }
    }
    Ok(outliers as f64 / cfs.len() as f64)
}

/// Which built-in classifiers a benchmark exercises.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierSpec {
    OneNn,
    Cnn(CnnHyper),
    Constant(ClassLabel),
}

impl ClassifierSpec {
    pub fn name(&self) -> String {
        match self {
            ClassifierSpec::OneNn => "1nn".into(),
            ClassifierSpec::Cnn(_) => "cnn".into(),
            ClassifierSpec::Constant(l) => format!("constant{}", l.0),
        }
    }

    fn fit(&self, train: &Dataset) -> Result<Box<dyn Predictor>> {
        Ok(match self {
            ClassifierSpec::OneNn => Box::new(OneNnClassifier::fit(train)?),
            ClassifierSpec::Cnn(hyper) => Box::new(SmallCnnClassifier::fit(train, hyper)?),
            ClassifierSpec::Constant(label) => Box::new(ConstantClassifier(*label)),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    pub dataset_name: String,
    pub explain: ExplainConfig,
    pub rst: RstConfig,
    pub iforest: IForestConfig,
    /// Training-score quantile defining the outlier threshold.
    pub outlier_quantile: f64,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        BenchmarkConfig {
            dataset_name: "unnamed".into(),
            explain: ExplainConfig::default(),
            rst: RstConfig::default(),
            iforest: IForestConfig::default(),
            outlier_quantile: 0.9,
        }
    }
}

/// Aggregates for one (dataset, classifier, method) cell. Metric fields are
/// `None` when no instance was explained. Wall-clock seconds are kept out
/// of the serialized form so repeated seeded runs emit identical JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub dataset: String,
    pub classifier: String,
    pub method: Method,
    pub n_instances: usize,
    pub n_explained: usize,
    pub sensibility: f64,
    pub mean_closeness: Option<f64>,
    /// Closeness divided by series length, for cross-dataset comparison.
    pub mean_closeness_per_step: Option<f64>,
    pub mean_sparsity: Option<f64>,
    pub plausibility: Option<f64>,
    pub failures: usize,
    pub first_failure: Option<String>,
    #[serde(skip)]
    pub runtime_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub rows: Vec<MetricsRow>,
    pub config: BenchmarkConfig,
}

enum CellOutcome {
    Explained {
        closeness: f64,
        sparsity: f64,
        counterfactual: TimeSeries,
    },
    NotExplained,
    Failed(String),
}

/// Runs every (classifier, method, test instance) cell: the to-be-explained
/// label is the classifier's own prediction, the explanation evaluated is
/// the recommended one, and per-cell failures are recorded in the row
/// rather than aborting the run.
pub fn run_benchmark(
    train: &Dataset,
    test: &Dataset,
    classifiers: &[ClassifierSpec],
    methods: &[Method],
    cfg: &BenchmarkConfig,
) -> Result<MetricsReport> {
    if train.series_length() != test.series_length() {
        return Err(Error::LengthMismatch {
            left: train.series_length(),
            right: test.series_length(),
        });
    }
    let shapelets = extract_top_shapelets(train, &cfg.rst)?;
    let explainer = TimeCfExplainer::new(train.clone(), shapelets, cfg.explain.clone());

    // one GAN per excluded label, trained up front (in parallel) so the
    // per-instance loop only hits the cache
    if methods.contains(&Method::TimeCf) {
        train
            .label_alphabet()
            .par_iter()
            .try_for_each(|&label| explainer.gan_excluding(label).map(|_| ()))?;
    }

    let train_vectors: Vec<Vec<f64>> = train
        .instances()
        .iter()
        .map(|i| i.series.values().to_vec())
        .collect();
    let forest = IsolationForest::fit(&train_vectors, &cfg.iforest)?;
    let train_scores = train_vectors
        .iter()
        .map(|v| forest.score(v))
        .collect::<Result<Vec<f64>>>()?;
    let threshold = score_quantile(&train_scores, cfg.outlier_quantile)?;

    let mut rows = Vec::new();
    for spec in classifiers {
        let predictor = spec.fit(train)?;
        let predictor: &dyn Predictor = predictor.as_ref();
        for &method in methods {
            let started = Instant::now();
            let outcomes: Vec<CellOutcome> = test
                .instances()
                .par_iter()
                .map(|inst| {
                    let run = || -> Result<CellOutcome> {
                        let label = predictor.predict(&inst.series)?;
                        let recommended = match method {
                            Method::TimeCf => explainer
                                .explain(&inst.series, label, predictor)?
                                .recommended,
                            Method::Nun =>

                                nun_baseline(&inst.series, label, train, predictor, cfg.explain.eps)?,
                        };
                        Ok(match recommended {
                            Some(result) => CellOutcome::Explained {
                                closeness: closeness(&inst.series, &result.counterfactual)?,
                                sparsity: sparsity(
                                    &inst.series,
                                    &result.counterfactual,
                                    cfg.explain.eps,
                                )?,
                                counterfactual: result.counterfactual,
                            },
                            None => CellOutcome::NotExplained,
                        })
                    };
                    run().unwrap_or_else(|e| CellOutcome::Failed(e.to_string()))
                })
                .collect();

            let mut closenesses = Vec::new();
            let mut sparsities = Vec::new();
            let mut cfs = Vec::new();
            let mut failures = 0usize;
            let mut first_failure = None;
            for outcome in &outcomes {
                match outcome {
                    CellOutcome::Explained {
                        closeness,
                        sparsity,
                        counterfactual,
                    } => {
                        closenesses.push(*closeness);
                        sparsities.push(*sparsity);
                        cfs.push(counterfactual.clone());
                    }
                    CellOutcome::NotExplained => {}
                    CellOutcome::Failed(msg) => {
                        failures += 1;
                        if first_failure.is_none() {
                            first_failure = Some(msg.clone());
                        }
                    }
                }
            }
            let n_explained = cfs.len();
            let n_instances = outcomes.len();
            let mean = |v: &[f64]| {
                if v.is_empty() {
                    None
                } else {
                    Some(v.iter().sum::<f64>() / v.len() as f64)
                }
            };
            rows.push(MetricsRow {
                dataset: cfg.dataset_name.clone(),
                classifier: spec.name(),
                method,
                n_instances,
                n_explained,
                sensibility: n_explained as f64 / n_instances as f64,
                mean_closeness: mean(&closenesses),
                mean_closeness_per_step: mean(&closenesses)
                    .map(|c| c / train.series_length() as f64),
                mean_sparsity: mean(&sparsities),
                plausibility: if cfs.is_empty() {
                    None
                } else {
                    Some(plausibility(&cfs, &forest, threshold)?)
                },
                failures,
                first_failure,
                runtime_seconds: started.elapsed().as_secs_f64(),
            });
        }
    }
    Ok(MetricsReport {
        rows,
        config: cfg.clone(),
    })
}

impl MetricsReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Plain-text aligned table, including wall-clock seconds.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:<12} {:<10} {:<7} {:>5} {:>5} {:>7} {:>10} {:>9} {:>7} {:>8} {:>8}\n",
            "dataset",
            "classifier",
            "method",
            "n",
            "expl",
            "sensib",
            "closeness",
            "sparsity%",
            "plaus",
            "fail",
            "secs"
        ));
        let opt = |v: Option<f64>| match v {
            Some(x) => format!("{x:.4}"),
            None => "-".into(),
        };
        for r in &self.rows {
            out.push_str(&format!(
                "{:<12} {:<10} {:<7} {:>5} {:>5} {:>7.3} {:>10} {:>9} {:>7} {:>8} {:>8.2}\n",
                r.dataset,
                r.classifier,
                r.method,
                r.n_instances,
                r.n_explained,
                r.sensibility,
                opt(r.mean_closeness),
                opt(r.mean_sparsity),
                opt(r.plausibility),
                r.failures,
                r.runtime_seconds
            ));
        }
        out
    }

    /// Writes `closeness.csv`, `sensibility.csv`, `plausibility.csv` and
    /// `sparsity.csv` (columns dataset, classifier, method, value) into
    /// `dir`.
    pub fn write_csvs(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        let files: [(&str, Box<dyn Fn(&MetricsRow) -> Option<f64>>); 4] = [
            ("closeness.csv", Box::new(|r| r.mean_closeness)),
            ("sensibility.csv", Box::new(|r| Some(r.sensibility))),
            ("plausibility.csv", Box::new(|r| r.plausibility)),
            ("sparsity.csv", Box::new(|r| r.mean_sparsity)),
        ];
        for (name, extract) in files {
            let mut writer = csv::Writer::from_path(dir.join(name))?;
            writer.write_record(["dataset", "classifier", "method", "value"])?;
            for row in &self.rows {
                let value = extract(row).map(|v| v.to_string()).unwrap_or_default();
                writer.write_record([
                    row.dataset.as_str(),
                    row.classifier.as_str(),
                    &row.method.to_string(),
                    &value,
                ])?;
            }
            writer.flush()?;
        }
        Ok(())
    }

    pub fn write_all(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("metrics.json"), self.to_json()?)?;
        let mut table = std::fs::File::create(dir.join("metrics.txt"))?;
        table.write_all(self.to_table().as_bytes())?;
        self.write_csvs(dir)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{make_synthetic_bump, SyntheticSpec};
    use crate::series::Interval;
    use crate::timegan::TimeGanConfig;

    fn ts(values: &[f64]) -> TimeSeries {
        TimeSeries::new(values.to_vec()).unwrap()
    }

    #[test]
    fn closeness_identity_single_edit_and_oracle() {
        let a = ts(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(closeness(&a, &a).unwrap(), 0.0);
        let mut edited = a.values().to_vec();
        edited[2] += 2.0;
        assert_eq!(closeness(&a, &ts(&edited)).unwrap(), 2.0);

        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let x: Vec<f64> = (0..30).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let y: Vec<f64> = (0..30).map(|_| rng.gen_range(-1.0..1.0)).collect();
        assert_eq!(
            closeness(&ts(&x), &ts(&y)).unwrap(),
            l1_distance(&ts(&x), &ts(&y)).unwrap()
        );
    }

    #[test]
    fn sparsity_boundary_cases() {
        let orig = ts(&vec![0.0; 100]);
        assert_eq!(sparsity(&orig, &orig, 1e-8).unwrap(), 100.0);
        let all = ts(&vec![1.0; 100]);
        assert_eq!(sparsity(&orig, &all, 1e-8).unwrap(), 0.0);
        let mut ten = orig.values().to_vec();
        for v in ten.iter_mut().take(10) {
            *v = 5.0;
        }
        assert_eq!(sparsity(&orig, &ts(&ten), 1e-8).unwrap(), 90.0);
    }

    #[test]
    fn sparsity_plus_hamming_ratio_is_exactly_100() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(6);
        for _ in 0..20 {
            let n = rng.gen_range(4..60);
            let a: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let b: Vec<f64> = a
                .iter()
                .map(|v| if rng.gen_bool(0.3) { v + 1.0 } else { *v })
                .collect();
            let (sa, sb) = (ts(&a), ts(&b));
            let h = hamming_distance(&sa, &sb, 1e-8).unwrap();
            let s = sparsity(&sa, &sb, 1e-8).unwrap();
            assert_eq!(s + 100.0 * h as f64 / n as f64, 100.0);
        }
    }

    #[test]
    fn sensibility_ratios() {
        assert_eq!(sensibility(&[true, true]).unwrap(), 1.0);
        assert_eq!(sensibility(&[false, false, false]).unwrap(), 0.0);
        assert_eq!(sensibility(&[true, true, true, false]).unwrap(), 0.75);
        assert!(sensibility(&[]).is_err());
    }

    #[test]
    fn plausibility_threshold_construction() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(30);
        let train: Vec<Vec<f64>> = (0..80)
            .map(|_| (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let forest = IsolationForest::fit(&train, &IForestConfig { seed: 7, ..Default::default() }).unwrap();
        let scores: Vec<f64> = train.iter().map(|v| forest.score(v).unwrap()).collect();
        let threshold = score_quantile(&scores, 0.9).unwrap();

        // training data itself: at most 10% above its own 90th percentile
        let train_series: Vec<TimeSeries> = train.iter().map(|v| ts(v)).collect();
        let ratio = plausibility(&train_series, &forest, threshold).unwrap();
        assert!(ratio <= 0.1 + 1e-9, "self ratio {ratio}");

        // far constant outliers are always flagged
        let far: Vec<TimeSeries> = (0..10).map(|i| ts(&vec![50.0 + i as f64; 6])).collect();
        assert_eq!(plausibility(&far, &forest, threshold).unwrap(), 1.0);

        assert!(plausibility(&[], &forest, threshold).is_err());
    }

    fn tiny_benchmark_config(seed: u64) -> BenchmarkConfig {
        BenchmarkConfig {
            dataset_name: "bump".into(),
            explain: ExplainConfig {
                m_fakes: 10,
                gan: TimeGanConfig {
                    hidden_dim: 8,
                    iters_embed: 150,
                    iters_supervised: 80,
                    iters_joint: 300,
                    batch_size: 8,
                    lr: 5e-3,
                    ..TimeGanConfig::default()
                },
                seed,
                ..ExplainConfig::default()
            },
            rst: RstConfig {
                max_candidates: 150,
                n_keep: 8,
                seed,
                ..RstConfig::default()
            },
            iforest: IForestConfig { seed, ..Default::default() },
            outlier_quantile: 0.9,
        }
    }

    #[test]
    fn benchmark_reports_constant_row_as_unexplained() {
        let spec = SyntheticSpec {
            n_per_class: 8,
            length: 40,
            bump_interval: Interval { start: 16, length: 8 },
            bump_height: 2.0,
            noise_sigma: 0.1,
            seed: 1,
        };
        let train = make_synthetic_bump(&spec).unwrap();
        let test = make_synthetic_bump(&SyntheticSpec {
            n_per_class: 3,
            seed: 2,
            ..spec
        })
        .unwrap();
        let report = run_benchmark(
            &train,
            &test,
            &[ClassifierSpec::Constant(ClassLabel(0))],
            &[Method::TimeCf, Method::Nun],
            &tiny_benchmark_config(3),
        )
        .unwrap();
        assert_eq!(report.rows.len(), 2);
        for row in &report.rows {
            assert_eq!(row.sensibility, 0.0);
            assert_eq!(row.n_explained, 0);
            assert_eq!(row.mean_closeness, None);
            assert_eq!(row.mean_sparsity, None);
            assert_eq!(row.plausibility, None);
            assert_eq!(row.failures, 0);
        }
        // artifacts render
        let dir = tempfile::tempdir().unwrap();
        report.write_all(dir.path()).unwrap();
        for name in [
            "metrics.json",
            "metrics.txt",
            "closeness.csv",
            "sensibility.csv",
            "plausibility.csv",
            "sparsity.csv",
        ] {
            assert!(dir.path().join(name).exists(), "{name} missing");
        }
        let csv = std::fs::read_to_string(dir.path().join("sensibility.csv")).unwrap();
        assert_eq!(csv.lines().count(), 3); // header + 2 rows
        assert!(csv.lines().nth(1).unwrap().starts_with("bump,constant0,timecf,"));
    }

    #[test]
    fn benchmark_directional_claims_on_the_bump_dataset() {
        let spec = SyntheticSpec {
            n_per_class: 10,
            length: 60,
            bump_interval: Interval { start: 24, length: 12 },
            bump_height: 2.0,
            noise_sigma: 0.1,
            seed: 4,
        };
        let train = make_synthetic_bump(&spec).unwrap();
        let test = make_synthetic_bump(&SyntheticSpec {
            n_per_class: 4,
            seed: 5,
            ..spec
        })
        .unwrap();
        let report = run_benchmark(
            &train,
            &test,
            &[ClassifierSpec::OneNn],
            &[Method::TimeCf, Method::Nun],
            &tiny_benchmark_config(6),
        )
        .unwrap();
        let timecf = &report.rows[0];
        let nun = &report.rows[1];
        assert_eq!(timecf.method, Method::TimeCf);
        assert!(timecf.sensibility > 0.5, "sensibility {}", timecf.sensibility);
        assert_eq!(nun.sensibility, 1.0);
        // NUN replaces the whole series
        assert!(nun.mean_sparsity.unwrap() <= 5.0);
        assert!(timecf.mean_sparsity.unwrap() >= 60.0);
        assert!(
            timecf.mean_closeness.unwrap() < nun.mean_closeness.unwrap(),
            "timecf closeness {} vs nun {}",
            timecf.mean_closeness.unwrap(),
            nun.mean_closeness.unwrap()
        );
    }
}
