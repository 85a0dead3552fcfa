use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use amir::config::PipelineConfig;
use amir::evaluate::render_report_table;
use amir::pipeline::{self, Stage};
use amir::serve::Server;
use amir::Error;

#[derive(Parser)]
#[command(name = "amir", version, about = "Misinformation rebuttal pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct StageArgs {
    /// Pipeline configuration file (TOML)
    #[arg(long)]
    config: PathBuf,
    /// Override the LDA seed
    #[arg(long)]
    seed: Option<u64>,
    /// Override the recommendation list size for the invoked command
    #[arg(long)]
    k: Option<usize>,
    /// Override the Specific-tier similarity threshold
    #[arg(long)]
    threshold: Option<f64>,
    /// Override the output directory
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Validate and normalize both corpora
    Ingest(StageArgs),
    /// Fit topic models and assign topics to every document
    FitTopics(StageArgs),
    /// Map tweet topics onto fact-check topics
    MapTopics(StageArgs),
    /// Entity and sentiment annotation of the tweet corpus
    Annotate(StageArgs),
    /// Counter-tweet recommendations for every misleading tweet
    RecommendSm(StageArgs),
    /// Tiered fact-check article recommendations
    RecommendFc(StageArgs),
    /// Metric reports for both approaches
    Evaluate {
        #[command(flatten)]
        args: StageArgs,
        /// Additionally print MAP with the textbook average-precision
        /// normalization (reports on disk are unaffected)
        #[arg(long)]
        conventional_ap: bool,
    },
    /// All stages in dependency order
    Run(StageArgs),
    /// HTTP endpoint over the built artifacts
    Serve {
        #[command(flatten)]
        args: StageArgs,
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: String,
    },
}

fn load_config(args: &StageArgs) -> Result<PipelineConfig, Error> {
    let mut cfg = PipelineConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.lda.seed = seed;
    }
    if let Some(k) = args.k {
        cfg.recommend.k_sm = k;
        cfg.recommend.k_fc = k;
    }
    if let Some(t) = args.threshold {
        cfg.thresholds.specific_threshold = t;
    }
    if let Some(out) = &args.out {
        cfg.out_dir = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run_one(stage: Stage, args: &StageArgs) -> Result<(), Error> {
    let cfg = load_config(args)?;
    let ran = pipeline::run_stage(stage, &cfg)?;
    if ran {
        eprintln!("{}: done", stage.name());
    } else {
        eprintln!("{}: up to date", stage.name());
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Ingest(args) => run_one(Stage::Ingest, &args),
        Command::FitTopics(args) => run_one(Stage::FitTopics, &args),
        Command::MapTopics(args) => run_one(Stage::MapTopics, &args),
        Command::Annotate(args) => run_one(Stage::Annotate, &args),
        Command::RecommendSm(args) => run_one(Stage::RecommendSm, &args),
        Command::RecommendFc(args) => run_one(Stage::RecommendFc, &args),
        Command::Evaluate {
            args,
            conventional_ap,
        } => {
            run_one(Stage::Evaluate, &args)?;
            let cfg = load_config(&args)?;
            let reports = pipeline::evaluation_reports(&cfg, conventional_ap)?;
            print!("{}", render_report_table(&reports));
            Ok(())
        }
        Command::Run(args) => {
            let cfg = load_config(&args)?;
            for (stage, ran) in pipeline::run_all(&cfg)? {
                eprintln!(
                    "{}: {}",
                    stage.name(),
                    if ran { "done" } else { "up to date" }
                );
            }
            Ok(())
        }
        Command::Serve { args, addr } => {
            let cfg = load_config(&args)?;
            let server = Server::bind(&cfg, &addr)?;
            eprintln!("listening on {}", server.local_addr()?);
            server.run()
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Error::ConfigInvalid(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
        Err(Error::StaleUpstream(msg)) => {
            eprintln!("stale upstream: {msg}");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
