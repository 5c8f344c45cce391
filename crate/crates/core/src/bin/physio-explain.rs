//! Command-line front end for the physio-explain pipeline.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use physio_explain::eval::RowAudit;
use physio_explain::gbdt::{FeatureMatrix, GbdtModel};
use physio_explain::pipeline::{
    analyze_table, emit_report, extract_features, generate_synthetic, load_trials, train_final,
    write_dataset, FeatureTable, IngestSummary, RunConfig, RunReport, Stages, SyntheticSpec,
};
use physio_explain::treeshap::{explanations_to_csv, global_importance, TreeExplainer};
use physio_explain::{Error, Result};

#[derive(Parser)]
#[command(name = "physio-explain", version, about = "Emotion recognition from physiological signals with SHAP explanations")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (overrides the configured one).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true, env = "PHYSIO_EXPLAIN_JOBS")]
    jobs: Option<usize>,
    /// Pin every setting to the published defaults.
    #[arg(long, global = true)]
    paper_mode: bool,
}

#[derive(Args)]
struct Source {
    /// Recording directory (overrides `input` and `synthetic` in the config).
    #[arg(long)]
    input: Option<PathBuf>,
    /// Start from an existing features.csv instead of recordings.
    #[arg(long, conflicts_with = "input")]
    features: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic recording directory.
    Synth {
        #[arg(long)]
        subjects: Option<usize>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        effect_strength: Option<f64>,
        #[arg(long)]
        subject_variance: Option<f64>,
        #[arg(long)]
        seconds: Option<f64>,
    },
    /// Read a recording directory and print a summary.
    IngestCheck {
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Preprocess, decompose and write features.csv.
    Extract {
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Search and train one model per target on all rows.
    Train {
        #[command(flatten)]
        source: Source,
    },
    /// Leave-one-subject-out evaluation.
    Loso {
        #[command(flatten)]
        source: Source,
        /// Also write a leakage audit of every fold.
        #[arg(long)]
        audit: bool,
    },
    /// SHAP values of a saved model on a feature table.
    Explain {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        features: PathBuf,
    },
    /// LOSO plus the SHAP-ranked feature selection sweep.
    Select {
        #[command(flatten)]
        source: Source,
    },
    /// Every stage, writing the full report directory.
    Report {
        #[command(flatten)]
        source: Source,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}

fn load_config(g: &Global) -> Result<RunConfig> {
    let mut cfg = match &g.config {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    if g.paper_mode {
        cfg = cfg.paper_mode();
    }
    if let Some(s) = g.seed {
        cfg.seed = s;
    }
    if let Some(o) = &g.out {
        cfg.output = o.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn set_input(cfg: &mut RunConfig, input: &Option<PathBuf>) -> Result<()> {
    if let Some(dir) = input {
        cfg.input = Some(dir.clone());
        cfg.synthetic = None;
    }
    if cfg.input.is_none() && cfg.synthetic.is_none() {
        return Err(Error::Config(
            "no data source: pass --input, --features or set input/synthetic in the config".into(),
        ));
    }
    cfg.validate()
}

fn table_for(cfg: &mut RunConfig, source: &Source) -> Result<FeatureTable> {
    match &source.features {
        Some(path) => FeatureTable::read_csv(path),
        None => {
            set_input(cfg, &source.input)?;
            extract_features(&load_trials(cfg)?, &cfg.extract_config())
        }
    }
}

fn write(path: &Path, body: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::Io {
            path: dir.to_path_buf(),
            source: e,
        })?;
    }
    fs::write(path, body).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

fn run(cli: Cli) -> Result<()> {
    if let Some(jobs) = cli.global.jobs {
        if jobs == 0 {
            return Err(Error::Config("--jobs must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    let mut cfg = load_config(&cli.global)?;
    let out = cfg.output.clone();

    match cli.command {
        Command::Synth {
            subjects,
            trials,
            effect_strength,
            subject_variance,
            seconds,
        } => {
            let mut spec = cfg.synthetic.clone().unwrap_or_default();
            if let Some(seed) = cli.global.seed {
                spec.seed = seed;
            }
            spec.n_subjects = subjects.unwrap_or(spec.n_subjects);
            spec.trials_per_subject = trials.unwrap_or(spec.trials_per_subject);
            spec.effect_strength = effect_strength.unwrap_or(spec.effect_strength);
            spec.subject_variance = subject_variance.unwrap_or(spec.subject_variance);
            spec.seconds = seconds.unwrap_or(spec.seconds);
            spec.validate()?;
            let data = generate_synthetic(&spec)?;
            write_dataset(&out, &data)?;
            // A config that reads the generated directory back.
            let mut follow = cfg.clone();
            follow.synthetic = None;
            follow.input = Some(out.clone());
            follow.layout.baseline_rows = spec.baseline_len();
            follow.layout.signal_rows = spec.signal_len();
            follow.layout.sample_rate_hz = spec.sample_rate_hz;
            follow.output = out.join("results");
            write(&out.join("config.toml"), &follow.to_toml()?)?;
            write(&out.join("synthetic.toml"), &toml_of(&spec)?)?;
            println!("wrote {} trials to {}", data.len(), out.display());
        }
        Command::IngestCheck { input } => {
            set_input(&mut cfg, &input)?;
            let trials = load_trials(&cfg)?;
            print!("{}", to_json(&IngestSummary::of(&trials))?);
        }
        Command::Extract { input } => {
            set_input(&mut cfg, &input)?;
            let table = extract_features(&load_trials(&cfg)?, &cfg.extract_config())?;
            fs::create_dir_all(&out).map_err(|e| Error::Io {
                path: out.clone(),
                source: e,
            })?;
            table.write_csv(&out.join("features.csv"))?;
            println!("wrote {} rows x {} features", table.rows.len(), table.feature_names.len());
        }
        Command::Train { source } => {
            let table = table_for(&mut cfg, &source)?;
            let datasets = cfg
                .targets
                .iter()
                .map(|&t| table.to_dataset(t))
                .collect::<Result<Vec<_>>>()?;
            let mut results = Vec::new();
            for ds in &datasets {
                let (model, search) = train_final(ds, &cfg)?;
                results.push((ds.target, model, search));
            }
            for (t, model, search) in &results {
                write(&out.join(format!("model_{t}.json")), &model.to_json()?)?;
                write(&out.join(format!("search_{t}.json")), &to_json(search)?)?;
                println!(
                    "{t}: {} trees, validation logloss {}",
                    model.active_trees().len(),
                    search.best_loss
                );
            }
        }
        Command::Loso { source, audit } => {
            let table = table_for(&mut cfg, &source)?;
            let observer = RowAudit::new();
            let report = analyze_table(&table, &cfg, Stages::LOSO_ONLY, &observer)?;
            emit_report(&report, &out)?;
            if audit {
                let violations: Vec<_> = cfg
                    .targets
                    .iter()
                    .map(|&t| table.to_dataset(t).map(|ds| observer.violations(&ds)))
                    .collect::<Result<Vec<_>>>()?;
                let count: usize = violations.iter().map(Vec::len).sum();
                write(&out.join("leakage_audit.json"), &to_json(&violations)?)?;
                println!("leakage audit: {count} violating touches");
            }
            summarize(&report);
        }
        Command::Explain { model, features } => {
            let text = fs::read_to_string(&model).map_err(|e| Error::Io {
                path: model.clone(),
                source: e,
            })?;
            let model = GbdtModel::from_json(&text)?;
            let table = FeatureTable::read_csv(&features)?;
            if table.feature_names != model.feature_names {
                return Err(Error::ModelIncompatible(
                    "feature columns differ from the model's feature names".into(),
                ));
            }
            let rows: Vec<Vec<f64>> = table.rows.iter().map(|r| r.features.clone()).collect();
            let explainer = TreeExplainer::new(&model)?;
            let shap = explainer.explain_matrix(&FeatureMatrix::from_rows(&rows)?)?;
            let ranking = global_importance(&shap)?;
            write(&out.join("shap_values.csv"), &explanations_to_csv(&shap)?)?;
            write(&out.join("importance.json"), &to_json(&ranking)?)?;
            for e in ranking.top(10) {
                println!("{:<12} {}", e.feature, e.mean_abs_shap);
            }
        }
        Command::Select { source } => {
            let table = table_for(&mut cfg, &source)?;
            let stages = Stages {
                selection: true,
                interactions: false,
            };
            let report = analyze_table(&table, &cfg, stages, &())?;
            emit_report(&report, &out)?;
            summarize(&report);
        }
        Command::Report { source } => {
            let table = table_for(&mut cfg, &source)?;
            let report = analyze_table(&table, &cfg, Stages::ALL, &())?;
            emit_report(&report, &out)?;
            summarize(&report);
        }
    }
    Ok(())
}

fn toml_of(spec: &SyntheticSpec) -> Result<String> {
    #[derive(Serialize)]
    struct Wrapper<'a> {
        synthetic: &'a SyntheticSpec,
    }
    toml::to_string(&Wrapper { synthetic: spec }).map_err(|e| Error::Config(e.to_string()))
}

fn summarize(report: &RunReport) {
    for t in &report.targets {
        let cv = &t.cv;
        println!(
            "{}: accuracy {:.3} +/- {:.3}, f1 {:.3} +/- {:.3}, failed folds {}",
            t.target, cv.accuracy_mean, cv.accuracy_stderr, cv.f1_mean, cv.f1_stderr, cv.failed_folds
        );
        if let Some(sel) = &t.selection {
            println!("  best k by f1: {}", sel.best_k_f1);
        }
    }
}
