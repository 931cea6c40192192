//! Command-line pipeline: ingest → eda → build → train → evaluate /
//! automl → predict, plus the bundled fixture generator. Every run writes
//! exactly one manifest into the artifact directory; with a fixed
//! (config, seed, input) all other artifacts are byte-identical across
//! runs and `--threads` settings, only manifest timestamps move.

use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use roadcast_core::model::{fit, ModelSpec, TrainedModel};
use roadcast_core::search::automl_search;

use crate::error::AppError;
use crate::ingest::{AccidentRecord, ParseMode};
use crate::{cache, config, dataset, eda, fixture, frame_io, ingest, model_io, report};

/// Directory holding `snapshot.csv` when `--input` is omitted.
pub const DATA_DIR_ENV: &str = "ROADCAST_DATA_DIR";

const CACHE_FILE: &str = "records.rcache";
const TRAIN_FRAME: &str = "train.frame";
const TEST_FRAME: &str = "test.frame";
const MODEL_DIR: &str = "models";

/// Tables written by `eda` without `--only`; day_of_month_counts stays
/// opt-in.
const DEFAULT_TABLES: [&str; 7] = [
    "state_counts",
    "hourly_histogram",
    "daily_counts",
    "monthly_counts",
    "yearly_counts",
    "weekday_shares",
    "windspeed_profile",
];

#[derive(Debug, Parser)]
#[command(name = "roadcast", version, about = "US road-accident count forecasting toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML run configuration; built-in defaults apply when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed for every stochastic component.
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
    /// Worker-thread cap; must not change any output.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Artifact directory.
    #[arg(long, global = true, default_value = "roadcast_out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Strict,
    Lenient,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Report,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a raw snapshot CSV and write the record cache.
    Ingest {
        /// Snapshot CSV; defaults to $ROADCAST_DATA_DIR/snapshot.csv.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Mode::Strict)]
        mode: Mode,
    },
    /// Write the descriptive-statistics tables.
    Eda {
        /// Record cache or snapshot CSV; defaults to the ingest cache.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Single table to write (unique name prefix, e.g. "weekday").
        #[arg(long)]
        only: Option<String>,
    },
    /// Aggregate, engineer features and persist the train/test frames.
    Build {
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Fit models on the train frame and persist them.
    Train {
        /// Model name; repeat for several. Empty means the default roster.
        #[arg(long = "model")]
        models: Vec<String>,
    },
    /// Score persisted models on the test frame and write the report.
    Evaluate {
        /// Model name; repeat for several. Empty means every trained model.
        #[arg(long = "model")]
        models: Vec<String>,
        /// What to print on stdout; both files are always written.
        #[arg(long, value_enum, default_value_t = Format::Report)]
        format: Format,
    },
    /// Random-search model selection; writes leaderboard and best model.
    Automl {
        #[arg(long)]
        budget: Option<usize>,
    },
    /// Score a persisted feature frame with one persisted model.
    Predict {
        /// Model file written by `train` or `automl`.
        #[arg(long)]
        model: PathBuf,
        /// Frame file written by `build`.
        #[arg(long)]
        input: PathBuf,
    },
    /// Regenerate the bundled synthetic snapshot.
    Fixture {
        /// Target CSV path; defaults to <out>/fixture.csv.
        #[arg(long)]
        path: Option<PathBuf>,
    },
}

#[derive(serde::Serialize)]
struct RunManifest {
    subcommand: String,
    version: String,
    config: String,
    input: String,
    out: String,
    seed: u64,
    started_utc: String,
    finished_utc: String,
    exit_status: i32,
    outputs: Vec<String>,
}

fn now_utc() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

/// Per-run bookkeeping threaded through the subcommands.
struct Run {
    cfg: config::AppConfig,
    seed: u64,
    out: PathBuf,
    outputs: Vec<PathBuf>,
    input_shown: Option<PathBuf>,
}

impl Run {
    fn write(&mut self, name: &str, contents: &str) -> Result<PathBuf, AppError> {
        let path = self.out.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| AppError::io(parent, e))?;
        }
        fs::write(&path, contents).map_err(|e| AppError::io(&path, e))?;
        self.outputs.push(path.clone());
        Ok(path)
    }
}

pub fn run_cli() -> i32 {
    let cli = Cli::parse();
    let started = now_utc();

    #[cfg(feature = "parallel")]
    if let Some(n) = cli.threads {
        // double initialization (tests, repeated calls) is harmless
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }

    let mut run = Run {
        cfg: config::AppConfig::default(),
        seed: cli.seed,
        out: cli.out.clone(),
        outputs: Vec::new(),
        input_shown: None,
    };
    let result = dispatch(&cli, &mut run);
    let code = match &result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };

    let manifest = RunManifest {
        subcommand: subcommand_name(&cli.command).to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: cli
            .config
            .as_deref()
            .map(|p| p.display().to_string())
            .unwrap_or_else(|| "(defaults)".to_string()),
        input: run
            .input_shown
            .as_deref()
            .map(|p| p.display().to_string())
            .unwrap_or_else(|| "-".to_string()),
        out: cli.out.display().to_string(),
        seed: cli.seed,
        started_utc: started,
        finished_utc: now_utc(),
        exit_status: code,
        outputs: run.outputs.iter().map(|p| p.display().to_string()).collect(),
    };
    // best effort: a failing run must still exit with its own code
    if let Ok(text) = toml::to_string(&manifest) {
        if fs::create_dir_all(&cli.out).is_ok() {
            let _ = fs::write(cli.out.join("run_manifest.toml"), text);
        }
    }
    code
}

fn subcommand_name(c: &Command) -> &'static str {
    match c {
        Command::Ingest { .. } => "ingest",
        Command::Eda { .. } => "eda",
        Command::Build { .. } => "build",
        Command::Train { .. } => "train",
        Command::Evaluate { .. } => "evaluate",
        Command::Automl { .. } => "automl",
        Command::Predict { .. } => "predict",
        Command::Fixture { .. } => "fixture",
    }
}

fn dispatch(cli: &Cli, run: &mut Run) -> Result<(), AppError> {
    run.cfg = config::load_config(cli.config.as_deref())?;
    match &cli.command {
        Command::Ingest { input, mode } => cmd_ingest(run, input.as_deref(), *mode),
        Command::Eda { input, only } => cmd_eda(run, input.as_deref(), only.as_deref()),
        Command::Build { input } => cmd_build(run, input.as_deref()),
        Command::Train { models } => cmd_train(run, models),
        Command::Evaluate { models, format } => cmd_evaluate(run, models, *format),
        Command::Automl { budget } => cmd_automl(run, *budget),
        Command::Predict { model, input } => cmd_predict(run, model, input),
        Command::Fixture { path } => cmd_fixture(run, path.as_deref()),
    }
}

fn data_dir_snapshot() -> Option<PathBuf> {
    std::env::var_os(DATA_DIR_ENV).map(|d| PathBuf::from(d).join("snapshot.csv"))
}

/// Input for eda/build: explicit path, else the ingest cache, else the
/// data-directory snapshot.
fn resolve_records_input(explicit: Option<&Path>, out: &Path) -> Result<PathBuf, AppError> {
    if let Some(p) = explicit {
        return Ok(p.to_path_buf());
    }
    let cached = out.join(CACHE_FILE);
    if cached.exists() {
        return Ok(cached);
    }
    data_dir_snapshot().ok_or_else(|| {
        AppError::Config(format!(
            "no input: pass --input, run `roadcast ingest` first, or set {DATA_DIR_ENV}"
        ))
    })
}

/// Reads records from either a cache file or a raw CSV, sniffed by magic.
fn load_records(path: &Path) -> Result<Vec<AccidentRecord>, AppError> {
    let mut head = [0u8; 8];
    let mut file = fs::File::open(path).map_err(|e| AppError::io(path, e))?;
    let n = file.read(&mut head).map_err(|e| AppError::io(path, e))?;
    drop(file);
    if n == head.len() && &head == cache::MAGIC {
        return cache::read_cache(path);
    }
    let ingested = ingest::parse_snapshot(path, ParseMode::Lenient)?;
    if !ingested.rejected.is_empty() {
        eprintln!(
            "warning: {} rows rejected while parsing {}; run `roadcast ingest` for details",
            ingested.rejected.len(),
            path.display()
        );
    }
    Ok(ingested.records)
}

fn load_train_frame(run: &Run) -> Result<roadcast_core::frame::FeatureFrame, AppError> {
    let path = run.out.join(TRAIN_FRAME);
    if !path.exists() {
        return Err(AppError::Validation(format!(
            "no train frame at {}; run `roadcast build` first",
            path.display()
        )));
    }
    frame_io::load_frame(&path)
}

fn load_test_frame(run: &Run) -> Result<roadcast_core::frame::FeatureFrame, AppError> {
    let path = run.out.join(TEST_FRAME);
    if !path.exists() {
        return Err(AppError::Validation(format!(
            "no test frame at {}; run `roadcast build` first",
            path.display()
        )));
    }
    frame_io::load_frame(&path)
}

fn cmd_ingest(run: &mut Run, input: Option<&Path>, mode: Mode) -> Result<(), AppError> {
    let input = match input {
        Some(p) => p.to_path_buf(),
        None => data_dir_snapshot().ok_or_else(|| {
            AppError::Config(format!("no input: pass --input or set {DATA_DIR_ENV}"))
        })?,
    };
    run.input_shown = Some(input.clone());
    let parse_mode = match mode {
        Mode::Strict => ParseMode::Strict,
        Mode::Lenient => ParseMode::Lenient,
    };
    let ingested = ingest::parse_snapshot(&input, parse_mode)?;

    fs::create_dir_all(&run.out).map_err(|e| AppError::io(&run.out, e))?;
    let cache_path = run.out.join(CACHE_FILE);
    cache::write_cache(&cache_path, &ingested.records)?;
    run.outputs.push(cache_path);
    let summary = ingested.summary.render();
    run.write("ingest_summary.txt", &summary)?;
    if !ingested.rejected.is_empty() {
        let mut text = String::from("row,reason\n");
        for r in &ingested.rejected {
            text.push_str(&format!("{},\"{}\"\n", r.row, r.reason.replace('"', "\"\"")));
        }
        run.write("rejected_rows.csv", &text)?;
    }
    print!("{summary}");
    Ok(())
}

/// Matches `--only` against table names: exact name first, then a unique
/// prefix.
fn select_tables<'a>(
    tables: &'a [eda::StatTable],
    only: Option<&str>,
) -> Result<Vec<&'a eda::StatTable>, AppError> {
    let Some(sel) = only else {
        return Ok(tables.iter().filter(|t| DEFAULT_TABLES.contains(&t.name.as_str())).collect());
    };
    if let Some(t) = tables.iter().find(|t| t.name == sel) {
        return Ok(vec![t]);
    }
    let hits: Vec<&eda::StatTable> = tables.iter().filter(|t| t.name.starts_with(sel)).collect();
    let names = || {
        tables.iter().map(|t| t.name.as_str()).collect::<Vec<_>>().join(", ")
    };
    match hits.len() {
        1 => Ok(hits),
        0 => Err(AppError::Config(format!("unknown table \"{sel}\"; expected one of: {}", names()))),
        _ => Err(AppError::Config(format!("ambiguous table \"{sel}\"; expected one of: {}", names()))),
    }
}

fn cmd_eda(run: &mut Run, input: Option<&Path>, only: Option<&str>) -> Result<(), AppError> {
    let input = resolve_records_input(input, &run.out)?;
    run.input_shown = Some(input.clone());
    let records = load_records(&input)?;
    let tables = eda::all_tables(&records, run.cfg.wind_bin_mph);
    let chosen = select_tables(&tables, only)?;
    for t in &chosen {
        run.write(&format!("eda_{}.csv", t.name), &t.to_csv())?;
    }
    let owned: Vec<eda::StatTable> = chosen.iter().map(|&t| t.clone()).collect();
    print!("{}", eda::summary_report(&owned));
    Ok(())
}

fn cmd_build(run: &mut Run, input: Option<&Path>) -> Result<(), AppError> {
    let input = resolve_records_input(input, &run.out)?;
    run.input_shown = Some(input.clone());
    let records = load_records(&input)?;
    let frame = dataset::build_frame(&records, &run.cfg.dataset, run.seed)?;
    let (train, test) = frame.split(&run.cfg.split_spec(run.seed))?;

    fs::create_dir_all(&run.out).map_err(|e| AppError::io(&run.out, e))?;
    let train_path = run.out.join(TRAIN_FRAME);
    frame_io::save_frame(&train_path, &train)?;
    run.outputs.push(train_path);
    let test_path = run.out.join(TEST_FRAME);
    frame_io::save_frame(&test_path, &test)?;
    run.outputs.push(test_path);
    println!(
        "built frames: {} train rows, {} test rows, {} features",
        train.n_rows(),
        test.n_rows(),
        train.columns.len()
    );
    Ok(())
}

fn model_names(run: &Run, flag: &[String]) -> Vec<String> {
    if !flag.is_empty() {
        flag.to_vec()
    } else {
        run.cfg.models.clone()
    }
}

fn cmd_train(run: &mut Run, models: &[String]) -> Result<(), AppError> {
    let train = load_train_frame(run)?;
    run.input_shown = Some(run.out.join(TRAIN_FRAME));
    let names = model_names(run, models);
    let roster =
        report::resolve_roster(&names, run.seed, run.cfg.automl_budget, run.cfg.automl_folds)?;
    let fitted = report::fit_roster(&train, &roster);

    let fingerprint = train.fingerprint();
    let mut failures = Vec::new();
    for entry in fitted {
        match entry.outcome {
            Ok(model) => {
                let path = run.out.join(MODEL_DIR).join(format!("{}.ron", entry.name));
                if let Some(parent) = path.parent() {
                    fs::create_dir_all(parent).map_err(|e| AppError::io(parent, e))?;
                }
                model_io::save_model(&path, &model_io::ModelFile::new(model, run.seed, fingerprint))?;
                println!("trained {} -> {}", entry.name, path.display());
                run.outputs.push(path);
            }
            Err(e) => {
                eprintln!("failed {}: {e}", entry.name);
                failures.push(entry.name);
            }
        }
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(AppError::Validation(format!("{} model(s) failed to fit: {}", failures.len(), failures.join(", "))))
    }
}

fn cmd_evaluate(run: &mut Run, models: &[String], format: Format) -> Result<(), AppError> {
    let train = load_train_frame(run)?;
    let test = load_test_frame(run)?;
    run.input_shown = Some(run.out.join(TEST_FRAME));

    let dir = run.out.join(MODEL_DIR);
    let mut names = model_names(run, models);
    if names.is_empty() {
        if dir.is_dir() {
            let mut found: Vec<String> = fs::read_dir(&dir)
                .map_err(|e| AppError::io(&dir, e))?
                .filter_map(|entry| {
                    let name = entry.ok()?.file_name().into_string().ok()?;
                    name.strip_suffix(".ron").map(str::to_string)
                })
                .collect();
            found.sort();
            names = found;
        }
        if names.is_empty() {
            return Err(AppError::Validation(
                "no models trained; run `roadcast train` first".to_string(),
            ));
        }
    }

    let fingerprint = train.fingerprint();
    let mut fitted = Vec::with_capacity(names.len());
    for name in &names {
        let path = dir.join(format!("{name}.ron"));
        if !path.exists() {
            return Err(AppError::Validation(format!(
                "model \"{name}\" is not trained; run `roadcast train --model {name}`"
            )));
        }
        let file = model_io::load_model(&path)?;
        if file.train_fingerprint != format!("{fingerprint:016x}") {
            return Err(AppError::Compat(format!(
                "model \"{name}\" was trained on a different train frame; re-run `roadcast train`"
            )));
        }
        fitted.push(report::FittedEntry { name: name.clone(), outcome: Ok(file.model) });
    }

    let split = format!("{:?}", run.cfg.split_strategy);
    let rpt = report::score_report(&fitted, fingerprint, &test, &split, run.seed);
    run.write("eval_report.txt", &rpt.render_text())?;
    run.write("eval_table.csv", &rpt.render_csv())?;
    run.write("pairs.csv", &report::render_pairs(&fitted, &test))?;
    match format {
        Format::Report => print!("{}", rpt.render_text()),
        Format::Csv => print!("{}", rpt.render_csv()),
    }
    Ok(())
}

fn cmd_automl(run: &mut Run, budget: Option<usize>) -> Result<(), AppError> {
    let train = load_train_frame(run)?;
    run.input_shown = Some(run.out.join(TRAIN_FRAME));
    let budget = budget.unwrap_or(run.cfg.automl_budget);
    let roster = report::resolve_roster(
        &["auto_ml".to_string()],
        run.seed,
        budget,
        run.cfg.automl_folds,
    )?;
    let auto_spec = roster.into_iter().next().expect("auto_ml resolves").spec;
    let ModelSpec::AutoMl(space) = &auto_spec else {
        unreachable!("auto_ml resolves to a search spec");
    };
    let (best, board) = automl_search(&train, space)?;
    run.write("automl_leaderboard.csv", &report::render_leaderboard(&board, &best))?;

    // identical to fitting the auto_ml spec, without re-running the search
    let refit = fit(&train, &best)?;
    let model = TrainedModel {
        spec: auto_spec.clone(),
        schema: refit.schema,
        resolved: Some(Box::new(best.clone())),
        inner: refit.inner,
    };
    let path = run.out.join(MODEL_DIR).join("auto_ml.ron");
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| AppError::io(parent, e))?;
    }
    model_io::save_model(&path, &model_io::ModelFile::new(model, run.seed, train.fingerprint()))?;
    run.outputs.push(path);
    println!("winner: {} ({:016x})", best.name(), best.config_digest());
    Ok(())
}

fn cmd_predict(run: &mut Run, model: &Path, input: &Path) -> Result<(), AppError> {
    run.input_shown = Some(input.to_path_buf());
    let file = model_io::load_model(model)?;
    let frame = frame_io::load_frame(input)?;
    let preds = file.model.predict_frame(&frame)?;

    let mut text = String::from("cell,bucket_start,prediction\n");
    for (key, p) in frame.row_keys.iter().zip(&preds) {
        text.push_str(&format!("{},{},{:?}\n", key.cell.replace(',', ";"), key.bucket_start, p));
    }
    run.write("predictions.csv", &text)?;
    println!("wrote {} predictions for model {}", preds.len(), file.name);
    Ok(())
}

fn cmd_fixture(run: &mut Run, path: Option<&Path>) -> Result<(), AppError> {
    let records = fixture::generate_fixture(run.seed);
    let target = match path {
        Some(p) => p.to_path_buf(),
        None => run.out.join("fixture.csv"),
    };
    if let Some(parent) = target.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| AppError::io(parent, e))?;
        }
    }
    ingest::write_snapshot(&target, &records)?;
    run.outputs.push(target.clone());
    println!("wrote {} fixture rows to {}", records.len(), target.display());
    Ok(())
}
