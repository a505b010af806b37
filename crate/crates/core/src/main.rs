use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ctxlite::balance::{smote, BalanceConfig};
use ctxlite::bench::{self, emit_figures, emit_report, load_report, Experiment, ExperimentConfig};
use ctxlite::classify::{self, ClassifierKind, ClassifierModel, ClassifierSpec};
use ctxlite::config::KvConfig;
use ctxlite::dataset::{Dataset, LabelId};
use ctxlite::dimred::{self, ReducerKind, ReducerModel, ReducerSpec};
use ctxlite::error::Error;
use ctxlite::ingest::{build_dataset, load_csv, save_csv, GridEnrichment, StreamRegistry};
use ctxlite::synth::{generate, WorldConfig};

/// Context modeling pipeline: synthetic logs, ingestion, balancing,
/// dimensionality reduction, classification and benchmarks.
#[derive(Parser, Debug)]
#[command(name = "ctxlite", version)]
struct Cli {
    /// Seed for every randomized step; required by randomized subcommands.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for untimed benchmark cells (overrides the config; default 1).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output file or directory (meaning depends on the subcommand).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic log directory from a world config (needs --seed and --out DIR).
    Synth {
        /// World config (`key = value` lines).
        #[arg(long)]
        config: PathBuf,
    },
    /// Turn a log directory into a feature CSV (needs --out FILE).
    Ingest {
        /// Directory of `<stream>.log` files plus `labels.log`.
        #[arg(long)]
        logs: PathBuf,
        /// Venue/weather lookup table; defaults to `enrich.cfg` in the log directory if present.
        #[arg(long)]
        enrich: Option<PathBuf>,
    },
    /// Oversample minority classes with SMOTE (needs --seed and --out FILE).
    Balance {
        #[arg(long = "in")]
        input: PathBuf,
        /// Neighbours considered per synthetic sample.
        #[arg(long, default_value_t = 5)]
        k: usize,
    },
    /// Fit a reducer (with --kind and --d) or apply a saved one, writing latent features to --out.
    Reduce {
        #[arg(long = "in")]
        input: PathBuf,
        /// pca, grp, srp, nmf, fa or ae; omit to apply an existing --model.
        #[arg(long)]
        kind: Option<ReducerKind>,
        /// Number of latent features.
        #[arg(long)]
        d: Option<usize>,
        /// Model file, written when fitting and read when applying.
        #[arg(long)]
        model: PathBuf,
        /// Autoencoder training epochs.
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// Train a classifier and save it to --model.
    Train {
        #[arg(long = "in")]
        input: PathBuf,
        /// knn, svm, cart or random.
        #[arg(long)]
        kind: ClassifierKind,
        #[arg(long)]
        model: PathBuf,
        /// Neighbours for knn.
        #[arg(long, default_value_t = 5)]
        k: usize,
        /// L2 strength for svm.
        #[arg(long, default_value_t = 1e-4)]
        lambda: f64,
        /// Maximum tree depth for cart.
        #[arg(long)]
        max_depth: Option<usize>,
        /// Also write the tree as indented text to this file (cart only).
        #[arg(long)]
        export_tree: Option<PathBuf>,
    },
    /// Predict labels with a saved classifier; writes `row,predicted,actual` to --out.
    Predict {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        model: PathBuf,
        /// Expected model kind; checked against the file when given.
        #[arg(long)]
        kind: Option<ClassifierKind>,
    },
    /// Run benchmark experiments and write report files to --out DIR (needs --seed).
    Bench {
        /// 1, 2, 3, 4 or all.
        #[arg(long)]
        exp: Experiment,
        /// Bench config (`key = value` lines).
        #[arg(long)]
        config: PathBuf,
    },
    /// Re-emit plot-data files from an existing report directory.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
    },
}

enum Failure {
    Usage(String),
    Runtime(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Runtime(e)
    }
}

type CliResult<T> = Result<T, Failure>;

/// Invalid config contents are the caller's mistake, like a bad flag.
fn config_usage(e: Error) -> Failure {
    match e {
        Error::Config(msg) => Failure::Usage(msg),
        other => Failure::Runtime(other),
    }
}

fn need_seed(cli: &Cli, what: &str) -> CliResult<u64> {
    cli.seed.ok_or_else(|| Failure::Usage(format!("{what} is randomized: pass --seed")))
}

fn need_out<'a>(cli: &'a Cli, what: &str) -> CliResult<&'a Path> {
    cli.out.as_deref().ok_or_else(|| Failure::Usage(format!("{what} needs --out")))
}

fn run(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Synth { config } => {
            let seed = need_seed(cli, "synth")?;
            let out = need_out(cli, "synth")?;
            let mut kv = KvConfig::load(config)?;
            if kv.get_str("seed").is_some() {
                return Err(Failure::Usage("the world config must not set 'seed'; use --seed".into()));
            }
            kv.set("seed", seed.to_string());
            let world = WorldConfig::from_kv(&kv).map_err(config_usage)?;
            let logs = generate(&world, out)?;
            println!("wrote {} sessions for {} users to {}", logs.n_sessions, world.n_users, out.display());
        }
        Command::Ingest { logs, enrich } => {
            let out = need_out(cli, "ingest")?;
            let enrich = enrich.clone().or_else(|| Some(logs.join(ctxlite::synth::ENRICH_FILE)).filter(|p| p.exists()));
            let provider = match enrich {
                Some(p) => GridEnrichment::load(&p)?,
                None => GridEnrichment::default(),
            };
            let registry = StreamRegistry::default_phone();
            let parsed = ctxlite::ingest::parse_logs(logs, &registry)?;
            for m in parsed.malformed.iter().take(5) {
                eprintln!("warning: skipped {}:{}: {}", m.file.display(), m.line, m.reason);
            }
            if parsed.malformed.len() > 5 {
                eprintln!("warning: {} malformed lines skipped in total", parsed.malformed.len());
            }
            let data = build_dataset(logs, &registry, &provider)?;
            save_csv(&data, out)?;
            println!("wrote {} rows x {} features to {}", data.len(), data.x.cols(), out.display());
        }
        Command::Balance { input, k } => {
            let seed = need_seed(cli, "balance")?;
            let out = need_out(cli, "balance")?;
            if *k == 0 {
                return Err(Failure::Usage("--k must be at least 1".into()));
            }
            let data: Dataset<f64> = load_csv(input)?;
            let bal = smote(&data, &BalanceConfig { k_neighbors: *k, seed })?;
            save_csv(&bal, out)?;
            println!("wrote {} rows ({} per class) to {}", bal.len(), bal.class_counts().iter().max().unwrap_or(&0), out.display());
        }
        Command::Reduce { input, kind, d, model, epochs } => {
            let out = need_out(cli, "reduce")?;
            let data: Dataset<f64> = load_csv(input)?;
            let width = data.x.cols();
            let reducer = match kind {
                Some(kind) => {
                    let d = d.ok_or_else(|| Failure::Usage("--kind needs --d".into()))?;
                    if d == 0 || d > width {
                        return Err(Failure::Usage(format!("--d {d} is out of range: must satisfy 1 <= d <= {width} (input width)")));
                    }
                    let randomized = matches!(kind, ReducerKind::Grp | ReducerKind::Srp | ReducerKind::Nmf | ReducerKind::Ae);
                    let seed = if randomized { need_seed(cli, &format!("reduce --kind {kind}"))? } else { cli.seed.unwrap_or(0) };
                    let mut spec = ReducerSpec::new(*kind, d, seed);
                    if let Some(e) = epochs {
                        spec.ae.epochs = *e;
                    }
                    let m = dimred::fit(&spec, &data.x)?;
                    m.save(model)?;
                    m
                }
                None => {
                    if d.is_some() {
                        return Err(Failure::Usage("--d only applies when fitting with --kind".into()));
                    }
                    let m = ReducerModel::<f64>::load(model)?;
                    if m.input_width() != width {
                        return Err(Failure::Usage(format!("model expects {} input features, {} has {width}", m.input_width(), input.display())));
                    }
                    m
                }
            };
            let latent = data.with_features(reducer.transform(&data.x)?)?;
            save_csv(&latent, out)?;
            println!("wrote {} rows x {} {} features to {}", latent.len(), reducer.d(), reducer.kind(), out.display());
        }
        Command::Train { input, kind, model, k, lambda, max_depth, export_tree } => {
            let data: Dataset<f64> = load_csv(input)?;
            let seed = if matches!(kind, ClassifierKind::Svm | ClassifierKind::Random) {
                need_seed(cli, &format!("train --kind {kind}"))?
            } else {
                cli.seed.unwrap_or(0)
            };
            let mut spec = ClassifierSpec::new(*kind, seed);
            spec.k = *k;
            spec.lambda = *lambda;
            spec.cart.max_depth = *max_depth;
            let m = classify::train(&spec, &data.x, &data.y)?;
            let names = data.labels.names().to_vec();
            std::fs::write(model, m.to_text_with_labels(&names)).map_err(|e| Error::io(model, e))?;
            if let Some(path) = export_tree {
                let ClassifierModel::Cart(tree) = &m else {
                    return Err(Failure::Usage("--export-tree needs --kind cart".into()));
                };
                std::fs::write(path, tree.to_tree_text(&names)).map_err(|e| Error::io(path, e))?;
            }
            println!("trained {kind} on {} rows x {} features; model in {}", data.len(), data.x.cols(), model.display());
        }
        Command::Predict { input, model, kind } => {
            let out = need_out(cli, "predict")?;
            let text = std::fs::read_to_string(model).map_err(|e| Error::io(model, e))?;
            let (m, names) = ClassifierModel::<f64>::from_text_with_labels(&text)?;
            if let Some(k) = kind {
                if *k != m.kind() {
                    return Err(Failure::Usage(format!("--kind {k} but {} holds a {} model", model.display(), m.kind())));
                }
            }
            let data: Dataset<f64> = load_csv(input)?;
            if m.input_width() != data.x.cols() {
                return Err(Failure::Usage(format!("model expects {} features, {} has {}", m.input_width(), input.display(), data.x.cols())));
            }
            let predicted = m.predict(&data.x)?;
            let name_of = |l: LabelId| names.get(l.index()).cloned().unwrap_or_else(|| format!("#{}", l.0));
            let mut body = String::from("row,predicted,actual\n");
            let mut hits = 0usize;
            for (i, (&p, &a)) in predicted.iter().zip(&data.y).enumerate() {
                let (pn, an) = (name_of(p), data.labels.name(a.0).to_string());
                hits += usize::from(pn == an);
                body.push_str(&format!("{i},{pn},{an}\n"));
            }
            std::fs::write(out, body).map_err(|e| Error::io(out, e))?;
            let acc = if data.is_empty() { 0.0 } else { hits as f64 / data.len() as f64 };
            println!("accuracy {acc:.6} on {} rows; predictions in {}", data.len(), out.display());
        }
        Command::Bench { exp, config } => {
            let seed = need_seed(cli, "bench")?;
            let out = need_out(cli, "bench")?;
            let kv = KvConfig::load(config)?;
            let base = config.parent().unwrap_or(Path::new("."));
            let mut cfg = ExperimentConfig::from_kv(&kv, base, Some(seed)).map_err(config_usage)?;
            if let Some(t) = cli.threads {
                if t == 0 {
                    return Err(Failure::Usage("--threads must be at least 1".into()));
                }
                cfg.threads = t;
            }
            let data = cfg.load_dataset()?;
            if let Some(&d) = cfg.d_grid.iter().find(|&&d| d > data.x.cols()) {
                return Err(Failure::Usage(format!("d_grid value {d} exceeds the feature width {}", data.x.cols())));
            }
            let rows = bench::run(&cfg, &data, *exp)?;
            let files = emit_report(&rows, out)?;
            println!("{} report rows; wrote {} files to {}", rows.len(), files.len(), out.display());
            for w in bench::claim_witnesses(&rows) {
                println!(
                    "claim: {} {}+{} d={} accuracy {:.4} (raw {:.4}), test {:.1} ms (raw {:.1} ms)",
                    w.experiment, w.reducer, w.classifier, w.d, w.accuracy, w.raw_accuracy, w.test_ms, w.raw_test_ms
                );
            }
        }
        Command::Report { input } => {
            let out = cli.out.as_deref().unwrap_or(input);
            std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
            let rows = load_report(input)?;
            let files = emit_figures(&rows, out)?;
            println!("re-emitted {} plot files from {} rows", files.len(), rows.len());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
