//! Command-line front end: dataset synthesis, shapelet extraction, GAN
//! training, single-instance explanation and the full metrics benchmark,
//! all driven by one JSON config with flag overrides.

mod config;
mod svg;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use timecf::cfgen::{nun_baseline, ExplanationReport, Method, TimeCfExplainer};
use timecf::classifiers::{ConstantClassifier, OneNnClassifier, SmallCnnClassifier};
use timecf::eval::{run_benchmark, ClassifierSpec};
use timecf::ingest::{make_synthetic_bump, parse_ucr_file, write_ucr_file, SyntheticSpec};
use timecf::series::{ClassLabel, Dataset, Predictor};
use timecf::shapelets::extract_top_shapelets;

use config::{ClassifierChoice, DatasetSource, RunConfig};

#[derive(Parser)]
#[command(
    name = "timecf",
    version,
    about = "Counterfactual explanations for time series classifiers via shapelets and a sequence GAN"
)]
struct Cli {
    /// JSON config file; omitted fields take defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed override; re-seeds every component deterministically.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory override.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Cap on rayon worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ClassifierArg {
    #[value(name = "1nn")]
    OneNn,
    Cnn,
    Constant,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    #[value(name = "timecf")]
    TimeCf,
    Nun,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Method {
        match m {
            MethodArg::TimeCf => Method::TimeCf,
            MethodArg::Nun => Method::Nun,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Write the synthetic bump dataset as UCR-format train/test files.
    Synth,
    /// Extract top shapelets from the training split to shapelets.json.
    ExtractShapelets,
    /// Train the TimeGAN on all instances except one label and save it.
    TrainGan {
        /// Label whose instances are excluded from GAN training.
        #[arg(long, default_value_t = 0)]
        exclude_label: u32,
    },
    /// Explain one test instance; writes report.json and plot.svg.
    Explain {
        /// Index into the test split.
        #[arg(long, default_value_t = 0)]
        instance: usize,
        #[arg(long)]
        classifier: Option<ClassifierArg>,
        #[arg(long, value_enum, default_value = "timecf")]
        method: MethodArg,
    },
    /// Run the full metrics benchmark; writes metrics JSON, table and CSVs.
    Benchmark {
        /// Restrict to one classifier (default: 1nn and cnn).
        #[arg(long)]
        classifier: Option<ClassifierArg>,
        /// Restrict to one method (default: timecf and nun).
        #[arg(long)]
        method: Option<MethodArg>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)
            .with_context(|| format!("loading config {}", path.display()))?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.override_seed(seed);
    }
    if let Some(out) = cli.out {
        cfg.out_dir = out;
    }
    std::fs::create_dir_all(&cfg.out_dir)
        .with_context(|| format!("creating {}", cfg.out_dir.display()))?;

    match cli.command {
        Command::Synth => cmd_synth(&cfg),
        Command::ExtractShapelets => cmd_extract_shapelets(&cfg),
        Command::TrainGan { exclude_label } => cmd_train_gan(&cfg, ClassLabel(exclude_label)),
        Command::Explain {
            instance,
            classifier,
            method,
        } => cmd_explain(&cfg, instance, classifier, method.into()),
        Command::Benchmark { classifier, method } => cmd_benchmark(&cfg, classifier, method),
    }
}

fn load_splits(cfg: &RunConfig) -> anyhow::Result<(Dataset, Dataset)> {
    match &cfg.dataset {
        DatasetSource::Synthetic {
            train,
            test_n_per_class,
            test_seed,
        } => {
            let train_set = make_synthetic_bump(train)?;
            let test_set = make_synthetic_bump(&SyntheticSpec {
                n_per_class: *test_n_per_class,
                seed: *test_seed,
                ..train.clone()
            })?;
            Ok((train_set, test_set))
        }
        DatasetSource::Ucr { train, test } => {
            let train_set = parse_ucr_file(train)
                .with_context(|| format!("parsing {}", train.display()))?;
            let test_set =
                parse_ucr_file(test).with_context(|| format!("parsing {}", test.display()))?;
            if train_set.series_length() != test_set.series_length() {
                bail!(
                    "train series length {} differs from test {}",
                    train_set.series_length(),
                    test_set.series_length()
                );
            }
            Ok((train_set, test_set))
        }
    }
}

fn fit_classifier(
    choice: ClassifierChoice,
    cfg: &RunConfig,
    train: &Dataset,
) -> anyhow::Result<Box<dyn Predictor>> {
    Ok(match choice {
        ClassifierChoice::OneNn => Box::new(OneNnClassifier::fit(train)?),
        ClassifierChoice::Cnn => Box::new(SmallCnnClassifier::fit(train, &cfg.cnn)?),
        ClassifierChoice::Constant => Box::new(ConstantClassifier(cfg.constant_label())),
    })
}

fn classifier_choice(arg: Option<ClassifierArg>, cfg: &RunConfig) -> ClassifierChoice {
    match arg {
        Some(ClassifierArg::OneNn) => ClassifierChoice::OneNn,
        Some(ClassifierArg::Cnn) => ClassifierChoice::Cnn,
        Some(ClassifierArg::Constant) => ClassifierChoice::Constant,
        None => cfg.classifier,
    }
}

fn write_json(path: &Path, value: &impl Serialize) -> anyhow::Result<()> {
    let json = serde_json::to_string_pretty(value)?;
    std::fs::write(path, json).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn cmd_synth(cfg: &RunConfig) -> anyhow::Result<u8> {
    let DatasetSource::Synthetic { .. } = &cfg.dataset else {
        bail!("synth requires a synthetic dataset source");
    };
    let (train, test) = load_splits(cfg)?;
    let train_path = cfg.out_dir.join("synth_TRAIN.tsv");
    let test_path = cfg.out_dir.join("synth_TEST.tsv");
    write_ucr_file(&train, &train_path)?;
    write_ucr_file(&test, &test_path)?;
    write_json(&cfg.out_dir.join("synth_config.json"), cfg)?;
    eprintln!(
        "wrote {} ({} rows) and {} ({} rows)",
        train_path.display(),
        train.len(),
        test_path.display(),
        test.len()
    );
    Ok(0)
}

#[derive(Serialize)]
struct ShapeletArtifact<'a> {
    config: &'a RunConfig,
    shapelets: Vec<timecf::shapelets::ShapeletCandidate>,
}

fn cmd_extract_shapelets(cfg: &RunConfig) -> anyhow::Result<u8> {
    let (train, _) = load_splits(cfg)?;
    let shapelets = extract_top_shapelets(&train, &cfg.rst)?;
    eprintln!(
        "extracted {} shapelets (best quality {:.4})",
        shapelets.len(),
        shapelets.first().map(|s| s.quality).unwrap_or(0.0)
    );
    write_json(
        &cfg.out_dir.join("shapelets.json"),
        &ShapeletArtifact {
            config: cfg,
            shapelets,
        },
    )?;
    Ok(0)
}

fn cmd_train_gan(cfg: &RunConfig, exclude: ClassLabel) -> anyhow::Result<u8> {
    let (train, _) = load_splits(cfg)?;
    if !train.label_alphabet().contains(&exclude) {
        bail!("label {exclude} does not occur in the training data");
    }
    let explainer = TimeCfExplainer::new(train, Vec::new(), cfg.explain_config());
    let model = explainer.gan_excluding(exclude)?;
    let path = cfg.out_dir.join(format!("gan_excl{}.tcf1", exclude.0));
    model.save(&path)?;
    write_json(&cfg.out_dir.join("gan_config.json"), cfg)?;
    eprintln!(
        "trained GAN on {}-excluded subset (fingerprint {:016x}); saved {}",
        exclude,
        model.subset_fingerprint(),
        path.display()
    );
    Ok(0)
}

#[derive(Serialize)]
struct ExplainArtifact<'a> {
    run_config: &'a RunConfig,
    classifier: &'a str,
    method: Method,
    instance_index: usize,
    report: &'a ExplanationReport,
}

fn cmd_explain(
    cfg: &RunConfig,
    instance: usize,
    classifier: Option<ClassifierArg>,
    method: Method,
) -> anyhow::Result<u8> {
    let (train, test) = load_splits(cfg)?;
    if instance >= test.len() {
        bail!(
            "instance index {instance} out of bounds for test split of {}",
            test.len()
        );
    }
    let choice = classifier_choice(classifier, cfg);
    let predictor = fit_classifier(choice, cfg, &train)?;
    let clf_name = match choice {
        ClassifierChoice::OneNn => "1nn",
        ClassifierChoice::Cnn => "cnn",
        ClassifierChoice::Constant => "constant",
    };
    let target = &test.instances()[instance].series;
    let label = predictor.predict(target)?;

    let report = match method {
        Method::TimeCf => {
            let shapelets = extract_top_shapelets(&train, &cfg.rst)?;
            let explainer = TimeCfExplainer::new(train.clone(), shapelets, cfg.explain_config());
            explainer.explain(target, label, predictor.as_ref())?
        }
        Method::Nun => {
            let result = nun_baseline(target, label, &train, predictor.as_ref(), cfg.eps)?;
            ExplanationReport {
                original: target.clone(),
                original_label: label,
                results: result.clone().into_iter().collect(),
                recommended: result,
                candidate_outcomes: Vec::new(),
                n_fakes: 0,
                config: cfg.explain_config(),
                runtime: Default::default(),
            }
        }
    };

    write_json(
        &cfg.out_dir.join("report.json"),
        &ExplainArtifact {
            run_config: cfg,
            classifier: clf_name,
            method,
            instance_index: instance,
            report: &report,
        },
    )?;

    match &report.recommended {
        Some(recommended) => {
            let echo = serde_json::to_string(cfg)?;
            let svg = svg::explanation_svg(&report, &echo)
                .expect("recommended counterfactual present");
            std::fs::write(cfg.out_dir.join("plot.svg"), svg)?;
            eprintln!(
                "explained instance {instance} ({clf_name}, {method}): label {} -> {}, interval [{}, {}), hamming {}, l1 {:.3}",
                report.original_label,
                recommended.predicted_label,
                recommended.interval.start,
                recommended.interval.start + recommended.interval.length,
                recommended.hamming,
                recommended.l1
            );
            Ok(0)
        }
        None => {
            eprintln!(
                "no counterfactual found for instance {instance} ({clf_name}, {method}); report written"
            );
            Ok(2)
        }
    }
}

fn cmd_benchmark(
    cfg: &RunConfig,
    classifier: Option<ClassifierArg>,
    method: Option<MethodArg>,
) -> anyhow::Result<u8> {
    let (train, test) = load_splits(cfg)?;
    let classifiers: Vec<ClassifierSpec> = match classifier {
        Some(ClassifierArg::OneNn) => vec![ClassifierSpec::OneNn],
        Some(ClassifierArg::Cnn) => vec![ClassifierSpec::Cnn(cfg.cnn.clone())],
        Some(ClassifierArg::Constant) => vec![ClassifierSpec::Constant(cfg.constant_label())],
        None => vec![
            ClassifierSpec::OneNn,
            ClassifierSpec::Cnn(cfg.cnn.clone()),
        ],
    };
    let methods: Vec<Method> = match method {
        Some(m) => vec![m.into()],
        None => vec![Method::TimeCf, Method::Nun],
    };
    let report = run_benchmark(&train, &test, &classifiers, &methods, &cfg.benchmark_config())?;
    report.write_all(&cfg.out_dir)?;
    write_json(&cfg.out_dir.join("run_config.json"), cfg)?;
    eprint!("{}", report.to_table());
    eprintln!("artifacts written to {}", cfg.out_dir.display());
    Ok(0)
}
