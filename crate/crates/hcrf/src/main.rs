//! The `hcrf` command line: reproducible train / predict / eval / cv /
//! synth / inspect workflows over the dataset and model file formats.
//!
//! Every run is deterministic given its flags and seed. Outputs that
//! carry no wall-clock timing (models, predictions, metrics, CV reports,
//! resolved configs) are rewritten byte-identically on reruns; only the
//! training log and training report record elapsed times.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hcrf_core::{
    decode, evaluate, train, DecodeResult, Hyperparams, InitStrategy, LabelSpace, SegmentSequence,
    Standardizer,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use hcrf::dataset::CategoryFile;
use hcrf::error::io_err;
use hcrf::{cross_validate, synth_generate, DatasetFile, ModelFile, SyntheticSpec};

#[derive(Parser)]
#[command(
    name = "hcrf",
    version,
    about = "Joint activity and action sequence labeling with latent states: \
             exact decoding and latent max-margin training"
)]
struct Cli {
    /// Worker threads for parallel sections (default: available cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset from the demo generative process.
    Synth(SynthArgs),
    /// Train a model on a labeled dataset.
    Train(TrainArgs),
    /// Decode sequences with a trained model.
    Predict(PredictArgs),
    /// Decode a labeled dataset and report metrics.
    Eval(EvalArgs),
    /// Leave-one-subject-out cross-validation.
    Cv(CvArgs),
    /// Print the dimensions, norms, and label tables of a model.
    Inspect(InspectArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum InitArg {
    Random,
    KmeansFeatures,
    KmeansCategorical,
}

impl From<InitArg> for InitStrategy {
    fn from(value: InitArg) -> Self {
        match value {
            InitArg::Random => InitStrategy::Random,
            InitArg::KmeansFeatures => InitStrategy::KmeansFeatures,
            InitArg::KmeansCategorical => InitStrategy::KmeansCategorical,
        }
    }
}

/// Hyperparameter flags shared by `train` and `cv`.
#[derive(Args, Clone)]
struct HpArgs {
    /// Regularization constant C.
    #[arg(long, default_value_t = 1.0)]
    c_reg: f64,
    /// Activity-loss weight in [0, 1]; 0 trains the action-only objective.
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    /// Latent states per segment; 1 disables the latent layer.
    #[arg(long, default_value_t = 2)]
    latent: usize,
    /// Cutting-plane convergence tolerance.
    #[arg(long, default_value_t = 0.01)]
    epsilon: f64,
    /// Cap on concave-convex iterations.
    #[arg(long, default_value_t = 20)]
    max_cccp: usize,
    /// Cap on cutting-plane iterations per convex solve.
    #[arg(long, default_value_t = 500)]
    max_cp: usize,
    /// Latent initialization strategy.
    #[arg(long, value_enum, default_value_t = InitArg::KmeansFeatures)]
    init: InitArg,
    /// Seed for every randomized step.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// JSON file of hyperparameter overrides; its values override flags.
    #[arg(long)]
    config: Option<PathBuf>,
}

/// Optional overrides loaded from `--config`; field names match flags.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigOverrides {
    c_reg: Option<f64>,
    lambda: Option<f64>,
    latent: Option<usize>,
    epsilon: Option<f64>,
    max_cccp: Option<usize>,
    max_cp: Option<usize>,
    init: Option<InitArg>,
    seed: Option<u64>,
}

impl HpArgs {
    fn resolve(&self) -> Result<Hyperparams, CliError> {
        let mut overrides = ConfigOverrides::default();
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path).map_err(|e| CliError {
                kind: "io",
                message: format!("{}: {e}", path.display()),
            })?;
            overrides = serde_json::from_str(&text).map_err(|e| CliError {
                kind: "usage",
                message: format!("{}: {e}", path.display()),
            })?;
        }
        let hp = Hyperparams {
            c_reg: overrides.c_reg.unwrap_or(self.c_reg),
            lambda_loss: overrides.lambda.unwrap_or(self.lambda),
            n_latent: overrides.latent.unwrap_or(self.latent),
            epsilon_cp: overrides.epsilon.unwrap_or(self.epsilon),
            max_cccp_iters: overrides.max_cccp.unwrap_or(self.max_cccp),
            max_cp_iters: overrides.max_cp.unwrap_or(self.max_cp),
            init_strategy: overrides.init.unwrap_or(self.init).into(),
            rng_seed: overrides.seed.unwrap_or(self.seed),
        };
        hp.validate().map_err(|e| CliError {
            kind: "usage",
            message: e.to_string(),
        })?;
        Ok(hp)
    }
}

#[derive(Args)]
struct SynthArgs {
    /// Output directory (created if missing).
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 120)]
    sequences: usize,
    #[arg(long, default_value_t = 0.3)]
    noise: f64,
    #[arg(long, default_value_t = 4)]
    actions: usize,
    #[arg(long, default_value_t = 2)]
    latent: usize,
    #[arg(long, default_value_t = 3)]
    activities: usize,
    #[arg(long, default_value_t = 8)]
    dim: usize,
    /// Global feature dimension; must be >= the activity count.
    #[arg(long, default_value_t = 3)]
    dim_global: usize,
    #[arg(long, default_value_t = 4)]
    subjects: usize,
    #[arg(long, default_value_t = 4)]
    min_len: usize,
    #[arg(long, default_value_t = 10)]
    max_len: usize,
}

#[derive(Args)]
struct TrainArgs {
    /// Labeled dataset to train on.
    #[arg(long)]
    data: PathBuf,
    /// Output directory (created if missing).
    #[arg(long)]
    out_dir: PathBuf,
    /// Side-channel categorical labels for `--init kmeans-categorical`.
    #[arg(long)]
    categories: Option<PathBuf>,
    /// Skip feature standardization.
    #[arg(long)]
    no_standardize: bool,
    #[command(flatten)]
    hp: HpArgs,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct CvArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long)]
    categories: Option<PathBuf>,
    /// Repeat the whole cross-validation with seeds seed, seed+1, ...
    #[arg(long, default_value_t = 1)]
    repeats: usize,
    #[command(flatten)]
    hp: HpArgs,
}

#[derive(Args)]
struct InspectArgs {
    #[arg(long)]
    model: PathBuf,
}

struct CliError {
    kind: &'static str,
    message: String,
}

impl From<hcrf::Error> for CliError {
    fn from(e: hcrf::Error) -> Self {
        let kind = match &e {
            hcrf::Error::Io { .. } => "io",
            hcrf::Error::Core(hcrf_core::Error::NumericalInstability(_)) => "training_failure",
            _ => "validation",
        };
        CliError {
            kind,
            message: e.to_string(),
        }
    }
}

impl From<hcrf_core::Error> for CliError {
    fn from(e: hcrf_core::Error) -> Self {
        let kind = match &e {
            hcrf_core::Error::NumericalInstability(_) => "training_failure",
            _ => "validation",
        };
        CliError {
            kind,
            message: e.to_string(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", json!({ "kind": e.kind, "message": e.message }));
            ExitCode::FAILURE
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Synth(args) => cmd_synth(args),
        Command::Train(args) => cmd_train(args),
        Command::Predict(args) => cmd_predict(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Cv(args) => cmd_cv(args),
        Command::Inspect(args) => cmd_inspect(args),
    }
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError {
        kind: "io",
        message: format!("{}: {e}", dir.display()),
    })
}

/// Every run records its resolved configuration next to its outputs.
fn write_config(dir: &Path, value: serde_json::Value) -> Result<(), CliError> {
    let path = dir.join("config.json");
    let mut text = serde_json::to_string_pretty(&value).expect("serializable");
    text.push('\n');
    fs::write(&path, text).map_err(|e| io_err(&path)(e).into())
}

fn cmd_synth(args: SynthArgs) -> Result<(), CliError> {
    if args.min_len == 0 || args.min_len > args.max_len {
        return Err(CliError {
            kind: "usage",
            message: format!("bad length range {}..={}", args.min_len, args.max_len),
        });
    }
    let space = LabelSpace::new(
        args.actions,
        args.latent,
        args.activities,
        args.dim,
        args.dim_global,
    )?;
    let spec = SyntheticSpec::demo(
        space,
        args.noise,
        (args.min_len, args.max_len),
        args.sequences,
        args.subjects,
        args.seed,
    );
    let dataset = synth_generate(&spec)?;
    ensure_dir(&args.out_dir)?;
    dataset.save(args.out_dir.join("dataset.jsonl"))?;
    write_config(
        &args.out_dir,
        json!({ "subcommand": "synth", "spec": spec }),
    )
}

fn cmd_train(args: TrainArgs) -> Result<(), CliError> {
    let hp = args.hp.resolve()?;
    let dataset = DatasetFile::load(&args.data)?;
    let categories = args
        .categories
        .as_deref()
        .map(CategoryFile::load)
        .transpose()?;

    let (records, standardizer) = if args.no_standardize {
        (dataset.records.clone(), None)
    } else {
        let standardizer = Standardizer::fit(&dataset.records)?;
        (
            standardizer.apply_all(&dataset.records)?,
            Some(standardizer),
        )
    };
    let cats = categories.as_ref().map(|c| c.align(&records)).transpose()?;

    let (weights, report) = train(&records, &dataset.header.space, &hp, cats.as_ref())?;

    ensure_dir(&args.out_dir)?;
    let model = ModelFile::new(
        &weights,
        standardizer,
        dataset.header.action_names.clone(),
        dataset.header.activity_names.clone(),
    );
    model.save(args.out_dir.join("model.json"))?;

    let log_path = args.out_dir.join("train_log.jsonl");
    let mut log_text = String::new();
    for record in &report.log {
        log_text.push_str(&serde_json::to_string(record).expect("serializable"));
        log_text.push('\n');
    }
    fs::write(&log_path, log_text).map_err(|e| io_err(&log_path)(e))?;

    let report_path = args.out_dir.join("train_report.json");
    let mut report_text = serde_json::to_string_pretty(&report).expect("serializable");
    report_text.push('\n');
    fs::write(&report_path, report_text).map_err(|e| io_err(&report_path)(e))?;

    write_config(
        &args.out_dir,
        json!({
            "subcommand": "train",
            "data": args.data,
            "categories": args.categories,
            "standardize": !args.no_standardize,
            "hyperparams": hp,
        }),
    )?;
    if !report.converged {
        eprintln!("warning: stopped at the concave-convex iteration cap; best weights were kept");
    }
    Ok(())
}

/// Loaded model + dataset with the model's standardizer applied.
fn prepare_eval_inputs(
    data: &Path,
    model_path: &Path,
) -> Result<(ModelFile, Vec<SegmentSequence>), CliError> {
    let model = ModelFile::load(model_path)?;
    let dataset = DatasetFile::load(data)?;
    let m = &model.space;
    let d = &dataset.header.space;
    if (m.n_actions, m.n_activities, m.dim_segment, m.dim_global)
        != (d.n_actions, d.n_activities, d.dim_segment, d.dim_global)
    {
        return Err(CliError {
            kind: "validation",
            message: format!(
                "model space {m:?} does not match dataset space {d:?} \
                 (latent cardinality aside)"
            ),
        });
    }
    let records = match &model.standardizer {
        Some(s) => s.apply_all(&dataset.records)?,
        None => dataset.records,
    };
    Ok((model, records))
}

fn decode_all(
    model: &ModelFile,
    records: &[SegmentSequence],
) -> Result<Vec<DecodeResult>, CliError> {
    let weights = model.weight_pack()?;
    let preds = records
        .par_iter()
        .map(|seq| decode(&weights, seq))
        .collect::<hcrf_core::Result<Vec<_>>>()?;
    Ok(preds)
}

fn cmd_predict(args: PredictArgs) -> Result<(), CliError> {
    let (model, records) = prepare_eval_inputs(&args.data, &args.model)?;
    let preds = decode_all(&model, &records)?;
    ensure_dir(&args.out_dir)?;
    let path = args.out_dir.join("predictions.jsonl");
    let mut out = String::new();
    for (seq, pred) in records.iter().zip(&preds) {
        let line = json!({
            "id": seq.id,
            "subject": seq.subject,
            "activity": pred.activity,
            "activity_name": model.activity_names[pred.activity],
            "actions": pred.actions,
            "action_names": pred.actions.iter().map(|&y| model.action_names[y].clone()).collect::<Vec<_>>(),
            "latents": pred.latents,
            "score": pred.score,
        });
        out.push_str(&serde_json::to_string(&line).expect("serializable"));
        out.push('\n');
    }
    fs::write(&path, out).map_err(|e| io_err(&path)(e))?;
    write_config(
        &args.out_dir,
        json!({ "subcommand": "predict", "data": args.data, "model": args.model }),
    )
}

fn cmd_eval(args: EvalArgs) -> Result<(), CliError> {
    let (model, records) = prepare_eval_inputs(&args.data, &args.model)?;
    let preds = decode_all(&model, &records)?;
    let (actions, activities) = evaluate(&preds, &records, &model.space)?;
    ensure_dir(&args.out_dir)?;
    hcrf::report::write_metrics_files(
        &args.out_dir,
        &actions,
        &activities,
        &model.action_names,
        &model.activity_names,
    )?;
    write_config(
        &args.out_dir,
        json!({ "subcommand": "eval", "data": args.data, "model": args.model }),
    )?;
    println!(
        "action accuracy {:.4}  activity accuracy {:.4}",
        actions.accuracy, activities.accuracy
    );
    Ok(())
}

fn cmd_cv(args: CvArgs) -> Result<(), CliError> {
    if args.repeats == 0 {
        return Err(CliError {
            kind: "usage",
            message: "--repeats must be >= 1".into(),
        });
    }
    let hp = args.hp.resolve()?;
    let dataset = DatasetFile::load(&args.data)?;
    let categories = args
        .categories
        .as_deref()
        .map(CategoryFile::load)
        .transpose()?;
    ensure_dir(&args.out_dir)?;
    for r in 0..args.repeats {
        let hp_run = Hyperparams {
            rng_seed: hp.rng_seed + r as u64,
            ..hp.clone()
        };
        let report = cross_validate(&dataset, &hp_run, categories.as_ref())?;
        let suffix = if args.repeats > 1 {
            format!("_rep{r}")
        } else {
            String::new()
        };
        let json_path = args.out_dir.join(format!("cv_report{suffix}.json"));
        let mut text = serde_json::to_string_pretty(&report).expect("serializable");
        text.push('\n');
        fs::write(&json_path, text).map_err(|e| io_err(&json_path)(e))?;
        let txt_path = args.out_dir.join(format!("cv_report{suffix}.txt"));
        fs::write(&txt_path, hcrf::report::render_cv_text(&report))
            .map_err(|e| io_err(&txt_path)(e))?;
        println!(
            "cv[seed={}]: action acc {:.4} +/- {:.4}, activity acc {:.4} +/- {:.4}",
            hp_run.rng_seed,
            report.actions.accuracy.mean,
            report.actions.accuracy.std_err,
            report.activities.accuracy.mean,
            report.activities.accuracy.std_err,
        );
    }
    write_config(
        &args.out_dir,
        json!({
            "subcommand": "cv",
            "data": args.data,
            "categories": args.categories,
            "repeats": args.repeats,
            "hyperparams": hp,
        }),
    )
}

fn cmd_inspect(args: InspectArgs) -> Result<(), CliError> {
    let model = ModelFile::load(&args.model)?;
    let pack = model.weight_pack()?;
    let space = model.space;
    println!("format: {} v{}", model.format, model.version);
    println!(
        "space: {} actions x {} latent states, {} activities, D={}, D0={}",
        space.n_actions, space.n_latent, space.n_activities, space.dim_segment, space.dim_global
    );
    println!("parameters: {}", space.total_dim());
    let norms = pack.block_squared_norms();
    for (name, n2) in ["w1", "w2", "w3", "w4", "w5"].iter().zip(norms) {
        println!("|{name}| = {:.6}", n2.sqrt());
    }
    println!(
        "standardizer: {}",
        if model.standardizer.is_some() {
            "fitted"
        } else {
            "none"
        }
    );
    println!("actions: {}", model.action_names.join(", "));
    println!("activities: {}", model.activity_names.join(", "));
    Ok(())
}
