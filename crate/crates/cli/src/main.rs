mod commands;
mod config;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand};

use config::{MethodArg, Overrides};

#[derive(Debug, Parser)]
#[command(
    name = "preptensor",
    version,
    about = "Preposition embeddings and the classifiers built on them"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// TOML file with default values for any flag
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads for counting and dense kernels
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// error, warn, info, debug or trace
    #[arg(long, global = true)]
    pub log_level: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Count the (word, word, preposition) tensor of a corpus
    BuildTensor {
        #[arg(long)]
        corpus: PathBuf,
        /// One preposition per line; defaults to the built-in 49-word roster
        #[arg(long)]
        roster: Option<PathBuf>,
        #[arg(long)]
        window: Option<usize>,
        #[arg(long)]
        min_count: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Factor a tensor into word and preposition embeddings
    Decompose {
        /// Directory written by build-tensor
        #[arg(long)]
        tensor: PathBuf,
        #[arg(long, value_enum)]
        method: Option<MethodArg>,
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long)]
        iters: Option<usize>,
        #[arg(long)]
        ortho_iters: Option<usize>,
        #[arg(long)]
        xmax: Option<f64>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        learning_rate: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Cosine similarity of preposition pairs
    QuerySim {
        #[arg(long)]
        embeddings: PathBuf,
        /// Two tokens per line
        #[arg(long)]
        pairs: PathBuf,
        /// Subtract the mean roster vector first
        #[arg(long)]
        centered: bool,
        #[arg(long)]
        roster: Option<PathBuf>,
        /// CSV output; printed to stdout when omitted
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rank single-verb paraphrases of a phrasal verb
    Paraphrase {
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long)]
        head: String,
        #[arg(long)]
        prep: String,
        /// One candidate verb per line
        #[arg(long)]
        candidates: PathBuf,
        #[arg(long)]
        top: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Normalized singular values of one tensor slice
    Spectrum {
        #[arg(long)]
        tensor: PathBuf,
        /// Preposition, slice index, or __NOPREP__ for the extra slice
        #[arg(long)]
        slice: String,
        #[arg(long)]
        top: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train the preposition error detector and corrector
    TrainSelect {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long)]
        roster: Option<PathBuf>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        context_window: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate selection models on a test set
    EvalSelect {
        #[arg(long)]
        test: PathBuf,
        #[arg(long)]
        models: PathBuf,
        /// Directory for metrics and errors; defaults to the models directory
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train the attachment classifier
    TrainAttach {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate the attachment classifier on a test set
    EvalAttach {
        #[arg(long)]
        test: PathBuf,
        #[arg(long)]
        models: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::BuildTensor { .. } => "build-tensor",
            Command::Decompose { .. } => "decompose",
            Command::QuerySim { .. } => "query-sim",
            Command::Paraphrase { .. } => "paraphrase",
            Command::Spectrum { .. } => "spectrum",
            Command::TrainSelect { .. } => "train-select",
            Command::EvalSelect { .. } => "eval-select",
            Command::TrainAttach { .. } => "train-attach",
            Command::EvalAttach { .. } => "eval-attach",
        }
    }

    fn overrides(&self, g: &GlobalArgs) -> Overrides {
        let mut o = Overrides {
            threads: g.threads,
            seed: g.seed,
            log_level: g.log_level.clone(),
            ..Overrides::default()
        };
        match self {
            Command::BuildTensor { window, min_count, .. } => {
                o.window = *window;
                o.min_count = *min_count;
            }
            Command::Decompose {
                method,
                dim,
                iters,
                ortho_iters,
                xmax,
                alpha,
                learning_rate,
                ..
            } => {
                o.method = *method;
                o.dim = *dim;
                o.iters = *iters;
                o.ortho_iters = *ortho_iters;
                o.xmax = *xmax;
                o.alpha = *alpha;
                o.learning_rate = *learning_rate;
            }
            Command::Paraphrase { top, .. } | Command::Spectrum { top, .. } => o.top = *top,
            Command::TrainSelect {
                epochs, context_window, ..
            } => {
                o.epochs = *epochs;
                o.context_window = *context_window;
            }
            Command::TrainAttach { epochs, .. } => o.epochs = *epochs,
            _ => {}
        }
        o
    }
}

fn init_logging(level: &str) -> anyhow::Result<()> {
    let filter: log::LevelFilter = level
        .parse()
        .map_err(|_| anyhow::anyhow!("unknown log level `{level}`"))?;
    let _ = env_logger::Builder::new()
        .filter_level(filter)
        .format_timestamp(None)
        .try_init();
    Ok(())
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    let file = match &cli.global.config {
        Some(p) => config::FileConfig::load(p)?,
        None => config::FileConfig::default(),
    };
    let cfg = config::resolve(&cli.command.overrides(&cli.global), &file)?;
    init_logging(&cfg.log_level)?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build_global()
        .map_err(|e| anyhow::anyhow!("thread pool: {e}"))?;
    commands::execute(&cli.command, &cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let mut cmd = Cli::command();
            cmd.build();
            if let Some(sub) = cmd.find_subcommand_mut(cli.command.name()) {
                eprintln!("\n{}", sub.render_usage());
            }
            ExitCode::FAILURE
        }
    }
}
