//! Command-line driver for corpus generation, source training, adaptation,
//! sweeps, and reports.

use adaptlab::corpus::{generate_corpus, load_pair, save_pair, Age, CorpusSpec};
use adaptlab::harness::{
    render_report, rows_from_csv, rows_to_csv, run_sweep, ExperimentSpec, ModelSpec, ReportKind,
};
use adaptlab::ivector::{load_tv, load_ubm, save_tv, save_ubm, train_tv, train_ubm, TvModel};
use adaptlab::network::{
    frame_error, load_network, pretrain_layerwise, save_network, TrainConfig,
};
use adaptlab::rng::{derive, tag};
use adaptlab::transfer::{adapt, AdaptConfig, ScheduleSpec};
use adaptlab::{Error, Result};
use clap::{Parser, Subcommand};
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "adaptlab",
    about = "Layer-selective adult-to-child transfer learning on synthetic acoustic shift",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a train/test corpus pair from a corpus spec.
    Gen {
        /// Corpus spec file (key=value lines).
        #[arg(long)]
        spec: PathBuf,
        /// Output directory for train.corpus and test.corpus.
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the adult front-end and source network.
    TrainSource {
        /// Directory holding train.corpus and test.corpus.
        #[arg(long)]
        corpus: PathBuf,
        /// Model spec file (architecture and training keys).
        #[arg(long)]
        arch: PathBuf,
        /// Output prefix; writes PREFIX.net, PREFIX.ubm, PREFIX.tv.
        #[arg(long)]
        out: PathBuf,
    },
    /// Adapt a source model to child data.
    Adapt {
        /// Model prefix from train-source.
        #[arg(long)]
        model: PathBuf,
        /// Directory holding train.corpus and test.corpus.
        #[arg(long)]
        corpus: PathBuf,
        /// Freeze-mask configuration: bottom:k | top:k | sym:n | all.
        #[arg(long)]
        config: String,
        /// Schedule: sim | disjoint-sym:n:rounds | disjoint-alt:n:rounds.
        #[arg(long, default_value = "sim")]
        schedule: String,
        /// Adaptation budget in frames.
        #[arg(long)]
        budget_frames: usize,
        /// Adaptation seed.
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Child ages to adapt on: `all` or a single age.
        #[arg(long, default_value = "all")]
        ages: String,
        /// Output path for the adapted network.
        #[arg(long)]
        out: PathBuf,
        /// Optional model spec file for adaptation hyperparameters.
        #[arg(long)]
        arch: Option<PathBuf>,
    },
    /// Run a full experiment grid and write results.csv.
    Sweep {
        /// Experiment spec file.
        #[arg(long)]
        spec: PathBuf,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        /// Maximum parallel jobs (defaults to the number of cores).
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Render a report from a results CSV.
    Report {
        /// Rows CSV produced by sweep.
        #[arg(long)]
        rows: PathBuf,
        /// Report kind: budget-curves | age-config | age-matrix |
        /// age-indep | variance | diff.
        #[arg(long)]
        kind: String,
    },
}

fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))
}

fn load_model(prefix: &Path) -> Result<(adaptlab::Network, Option<TvModel>)> {
    let net = load_network(&prefix.with_extension("net"))?;
    let tv = if net.ivec_dim > 0 {
        let ubm = load_ubm(&prefix.with_extension("ubm"))?;
        Some(load_tv(&prefix.with_extension("tv"), &ubm)?)
    } else {
        None
    };
    Ok((net, tv))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen { spec, out } => {
            let spec = CorpusSpec::parse(&read_to_string(&spec)?)?;
            let pair = generate_corpus(&spec)?;
            save_pair(&pair, &out)?;
            println!(
                "wrote {} (train: {} frames, test: {} frames)",
                out.display(),
                pair.train.total_frames(),
                pair.test.total_frames()
            );
        }
        Command::TrainSource { corpus, arch, out } => {
            let model = ModelSpec::parse(&read_to_string(&arch)?)?;
            let pair = load_pair(&corpus)?;
            let adult_train = pair.train.filter_age(Age::Adult);
            if adult_train.utterances.is_empty() {
                return Err(Error::config(
                    "corpus has no adult training data".to_string(),
                ));
            }
            let tv = if model.arch.ivector_dim > 0 {
                let (ubm, _) = train_ubm(
                    &adult_train,
                    model.arch.ubm_components,
                    model.arch.ubm_iters,
                    derive(model.train.base.seed, &[tag("ubm")]),
                )?;
                let tv = train_tv(
                    &ubm,
                    &adult_train,
                    model.arch.ivector_dim,
                    model.arch.tv_iters,
                    derive(model.train.base.seed, &[tag("tv")]),
                )?;
                save_ubm(&ubm, &out.with_extension("ubm"))?;
                save_tv(&tv, &out.with_extension("tv"))?;
                Some(tv)
            } else {
                None
            };
            let net_arch = model.arch.network_arch(pair.train.d, pair.train.k);
            let (net, _) =
                pretrain_layerwise(&adult_train, tv.as_ref(), &net_arch, &model.train.base)?;
            save_network(&net, &out.with_extension("net"))?;
            let adult_test = pair.test.filter_age(Age::Adult);
            let adult_err = frame_error(&net, &adult_test, tv.as_ref())?;
            println!(
                "wrote {}.net ({} parameters); adult test frame error {:.4}",
                out.display(),
                net.param_count(),
                adult_err
            );
        }
        Command::Adapt {
            model,
            corpus,
            config,
            schedule,
            budget_frames,
            seed,
            ages,
            out,
            arch,
        } => {
            let (net, tv) = load_model(&model)?;
            let pair = load_pair(&corpus)?;
            let config: AdaptConfig = config.parse()?;
            let schedule_spec: ScheduleSpec = schedule.parse()?;
            let resolved = schedule_spec.resolve(net.depth())?;
            let age_list: Vec<Age> = if ages == "all" {
                Age::all_children().collect()
            } else {
                vec![ages.parse()?]
            };
            let child_train = pair.train.filter_ages(&age_list);
            let train_params = match arch {
                Some(path) => ModelSpec::parse(&read_to_string(&path)?)?.train,
                None => adaptlab::harness::TrainParams::default(),
            };
            let cfg = TrainConfig {
                seed,
                ..train_params.adapt
            };
            let result = adapt(
                &net,
                &child_train,
                tv.as_ref(),
                &config,
                &resolved,
                &cfg,
                budget_frames,
            )?;
            save_network(&result.network, &out)?;
            let child_test = pair.test.filter_ages(&age_list);
            let before = frame_error(&net, &child_test, tv.as_ref())?;
            let after = frame_error(&result.network, &child_test, tv.as_ref())?;
            println!(
                "wrote {} (budget {} frames, {} epochs); child test frame error {:.4} -> {:.4}",
                out.display(),
                result.budget_frames,
                result.epochs_run(),
                before,
                after
            );
        }
        Command::Sweep { spec, out, jobs } => {
            if let Some(jobs) = jobs {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(jobs)
                    .build_global()
                    .map_err(|e| Error::config(format!("thread pool: {e}")))?;
            }
            let base_dir = spec.parent().unwrap_or(Path::new(".")).to_path_buf();
            let spec = ExperimentSpec::parse(&read_to_string(&spec)?, &base_dir)?;
            let output = run_sweep(&spec)?;
            std::fs::create_dir_all(&out).map_err(|e| Error::io(out.display().to_string(), e))?;
            let csv_path = out.join("results.csv");
            std::fs::write(&csv_path, rows_to_csv(&output.rows))
                .map_err(|e| Error::io(csv_path.display().to_string(), e))?;
            println!("wrote {} ({} rows)", csv_path.display(), output.rows.len());
            if !output.failures.is_empty() {
                for f in &output.failures {
                    eprintln!("cell failed: {}: {}", f.run_id, f.message);
                }
                return Err(Error::config(format!(
                    "{} of {} cells failed",
                    output.failures.len(),
                    output.failures.len() + output.rows.len()
                )));
            }
        }
        Command::Report { rows, kind } => {
            let kind: ReportKind = kind.parse()?;
            let parsed = rows_from_csv(&read_to_string(&rows)?)?;
            let prefix = rows.with_extension("");
            let files = render_report(&parsed, kind, &prefix)?;
            for f in files {
                println!("wrote {}", f.display());
            }
        }
    }
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        eprintln!("error: {err}");
        std::process::exit(1);
    }
}
