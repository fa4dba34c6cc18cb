use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Mutex;

use clap::{Args, Parser, Subcommand};
use stylecast_core::config::{PipelineConfig, DEFAULT_CONFIG_FILE};
use stylecast_core::generate::StyleChoice;
use stylecast_core::pipeline::{
    annotate_dataset, build_dataset, load_bench, load_candidates, load_train, tally_files, write_json, Pipeline, RunFlags,
    StageReport,
};
use stylecast_core::score::format_table;
use stylecast_core::{Error, ErrorKind};

/// Stylized comments for short videos: ingest, describe, classify, pick a
/// style template, generate and score.
#[derive(Debug, Parser)]
#[command(name = "stylecast", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Global {
    /// Config file. A missing default file means built-in defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    workdir: Option<PathBuf>,
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Redo work that is already done.
    #[arg(long, global = true)]
    force: bool,
    /// Print the plan and write nothing.
    #[arg(long, global = true)]
    dry_run: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fetch metadata, media and top comments for a seed manifest.
    Ingest {
        manifest: PathBuf,
        /// Only these video ids.
        #[arg(long = "id")]
        ids: Vec<String>,
    },
    /// Detect highlights, sample frames and transcribe.
    Preprocess { ids: Vec<String> },
    /// Build semantic descriptions from frames and transcripts.
    Describe { ids: Vec<String> },
    /// Assign each video to a curated category.
    Classify { ids: Vec<String> },
    /// Select a style template and generate comments.
    Generate {
        ids: Vec<String>,
        /// A style label or `auto`.
        #[arg(long, default_value = "auto")]
        style: StyleChoice,
        /// With `auto`, generate once for every style.
        #[arg(long)]
        per_style: bool,
    },
    /// Score candidate comments. Without a file, scores the workdir's
    /// generated comments.
    Score {
        candidates: Option<PathBuf>,
        /// Benchmark pairs; defaults to the configured dataset.
        #[arg(long)]
        bench: Option<PathBuf>,
        /// Training comments; defaults to the configured dataset.
        #[arg(long)]
        train: Option<PathBuf>,
    },
    /// Export a blinded preference questionnaire.
    Questionnaire {
        /// JSONL candidates with one comment per (system, video).
        candidates: PathBuf,
        /// Defaults to `<workdir>/questionnaire`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tally questionnaire responses (`item_id,choice` CSV).
    Tally {
        #[arg(long)]
        key: PathBuf,
        responses: PathBuf,
    },
    /// Assemble a dataset bundle from a categorized manifest and comments.
    DatasetBuild {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        comments: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Require the configured number of videos in every cell.
        #[arg(long)]
        check_balance: bool,
    },
    /// Apply style labels from a `comment_id,label` CSV to a dataset.
    Annotate {
        #[arg(long)]
        dataset: PathBuf,
        labels: PathBuf,
        #[arg(long)]
        annotator: String,
    },
}

fn load_config(g: &Global) -> Result<PipelineConfig, Error> {
    let mut config = match &g.config {
        Some(p) => PipelineConfig::load(p)?,
        None if Path::new(DEFAULT_CONFIG_FILE).exists() => PipelineConfig::load(Path::new(DEFAULT_CONFIG_FILE))?,
        None => PipelineConfig::default(),
    };
    if let Some(w) = &g.workdir {
        config.workdir = w.clone();
    }
    if let Some(j) = g.jobs {
        config.jobs = j;
    }
    if let Some(s) = g.seed {
        config.seed = s;
    }
    config.validate()?;
    Ok(config)
}

fn init_logs(workdir: &Path, command: &str) -> Result<(), Error> {
    let dir = workdir.join("logs");
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let stamp = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0);
    let path = dir.join(format!("{stamp}-{}-{command}.jsonl", std::process::id()));
    let file = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    tracing_subscriber::fmt()
        .json()
        .with_ansi(false)
        .with_writer(Mutex::new(file))
        .init();
    Ok(())
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Ingest { .. } => "ingest",
        Command::Preprocess { .. } => "preprocess",
        Command::Describe { .. } => "describe",
        Command::Classify { .. } => "classify",
        Command::Generate { .. } => "generate",
        Command::Score { .. } => "score",
        Command::Questionnaire { .. } => "questionnaire",
        Command::Tally { .. } => "tally",
        Command::DatasetBuild { .. } => "dataset-build",
        Command::Annotate { .. } => "annotate",
    }
}

fn dataset_path(config: &PipelineConfig, given: Option<PathBuf>, what: &str) -> Result<PathBuf, Error> {
    given
        .or_else(|| config.dataset.clone())
        .ok_or_else(|| Error::Config(format!("score needs --{what} or `dataset` in the config")))
}

fn run(cli: Cli) -> Result<String, Error> {
    let config = load_config(&cli.global)?;
    let flags = RunFlags {
        force: cli.global.force,
        dry_run: cli.global.dry_run,
    };
    let name = command_name(&cli.command);
    if !flags.dry_run {
        init_logs(&config.workdir, name)?;
    }
    tracing::info!(command = name, seed = config.seed, jobs = config.jobs, "start");
    let seed = config.seed;
    let workdir = config.workdir.clone();
    let out = match cli.command {
        Command::Tally { key, responses } => {
            let t = tally_files(&key, &responses)?;
            let mut s = format!("responses: {}\n", t.responses);
            for (system, votes) in &t.votes {
                s.push_str(&format!("{system}: {votes} ({:.2}%)\n", t.preference_pct[system]));
            }
            s
        }
        Command::DatasetBuild {
            manifest,
            comments,
            out,
            check_balance,
        } => {
            let per_cell = check_balance.then_some(config.balance.per_cell);
            let (bundle, summary) = build_dataset(&manifest, &comments, per_cell)?;
            if !flags.dry_run {
                bundle.save(&out)?;
            }
            let verb = if flags.dry_run { "would write" } else { "wrote" };
            format!("{summary}dataset-build: {verb} {} videos to {}\n", bundle.videos.len(), out.display())
        }
        Command::Annotate {
            dataset,
            labels,
            annotator,
        } => annotate_dataset(&dataset, &labels, &annotator, flags.dry_run)?,
        command => {
            let pipeline = Pipeline::new(config, flags)?;
            match command {
                Command::Ingest { manifest, ids } => pipeline.ingest(&manifest, &ids)?.render(),
                Command::Preprocess { ids } => pipeline.preprocess(&ids)?.render(),
                Command::Describe { ids } => pipeline.describe(&ids)?.render(),
                Command::Classify { ids } => pipeline.classify(&ids)?.render(),
                Command::Generate { ids, style, per_style } => pipeline.generate(&ids, style, per_style)?.render(),
                Command::Score { candidates, bench, train } => {
                    let candidates = match candidates {
                        Some(p) => load_candidates(&p)?,
                        None => pipeline.generated_candidates()?,
                    };
                    let bench = load_bench(&dataset_path(&pipeline.config, bench, "bench")?)?;
                    let train = load_train(&dataset_path(&pipeline.config, train, "train")?)?;
                    let (report, table): (StageReport, _) = pipeline.score(&candidates, &bench, &train)?;
                    let mut s = report.render();
                    if !table.is_empty() {
                        s.push_str(&format_table(&table));
                        write_json(&workdir.join("scores").join("summary.json"), &table)?;
                    }
                    s
                }
                Command::Questionnaire { candidates, out } => {
                    let candidates = load_candidates(&candidates)?;
                    let out = out.unwrap_or_else(|| workdir.join("questionnaire"));
                    pipeline.questionnaire(&candidates, seed, &out)?.render()
                }
                Command::Tally { .. } | Command::DatasetBuild { .. } | Command::Annotate { .. } => unreachable!(),
            }
        }
    };
    tracing::info!(command = name, "done");
    Ok(out)
}

fn exit_code(kind: ErrorKind) -> u8 {
    match kind {
        ErrorKind::Usage => 1,
        ErrorKind::Stage => 2,
        ErrorKind::Provider => 3,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            tracing::error!(error = %e, "failed");
            eprintln!("error: {e}");
            ExitCode::from(exit_code(e.kind()))
        }
    }
}
