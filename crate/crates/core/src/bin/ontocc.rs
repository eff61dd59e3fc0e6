use std::path::PathBuf;
use std::process::ExitCode;

use clap::{error::ErrorKind, Args, CommandFactory, Parser, Subcommand, ValueEnum};
use ontocc::catalogue::FrameCounting;
use ontocc::grounding::WsdStrategy;
use ontocc::pipeline::{run_extract, run_stage, PipelineConfig, Stage};

/// Extract conceptual components from a directory of OWL/RDF ontologies.
#[derive(Parser)]
#[command(name = "ontocc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline and write fragments and the catalogue.
    Extract(Opts),
    /// Run a single stage against the dumps of the previous one.
    Stage {
        #[arg(value_enum)]
        stage: StageArg,
        #[command(flatten)]
        opts: Opts,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum StageArg {
    Graph,
    Communities,
    Vdocs,
    Ground,
    Cluster,
}

impl From<StageArg> for Stage {
    fn from(s: StageArg) -> Self {
        match s {
            StageArg::Graph => Stage::Graph,
            StageArg::Communities => Stage::Communities,
            StageArg::Vdocs => Stage::Vdocs,
            StageArg::Ground => Stage::Ground,
            StageArg::Cluster => Stage::Cluster,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum WsdArg {
    FirstSense,
    GraphPpr,
}

#[derive(Args)]
struct Opts {
    /// Directory of .ttl / .nt ontology files.
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Lemma file: lemma, part of speech, comma-separated synsets.
    #[arg(long)]
    lemmas: Option<PathBuf>,
    /// Undirected synset relations.
    #[arg(long)]
    relations: Option<PathBuf>,
    /// Synset to frame matches.
    #[arg(long)]
    frames: Option<PathBuf>,
    /// Frame inheritance (child, parent).
    #[arg(long = "frame-hierarchy")]
    frame_hierarchy: Option<PathBuf>,
    /// Label language.
    #[arg(long = "lang", default_value = "en")]
    lang: String,
    /// Largest cluster count tried (default min(30, n-1)).
    #[arg(long)]
    kmax: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "graph-ppr")]
    wsd: WsdArg,
    /// Cluster name overrides: clusterId, name.
    #[arg(long)]
    names: Option<PathBuf>,
    /// Also write this stage's dump (repeatable).
    #[arg(long, value_enum)]
    dump: Vec<StageArg>,
    /// Fail on the first unreadable ontology instead of skipping it.
    #[arg(long)]
    strict: bool,
    /// Worker threads (default: available parallelism).
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    jobs: Option<u32>,
    /// Weight network links by frame frequency rather than distinct frames.
    #[arg(long)]
    multiplicity: bool,
}

fn require(value: Option<PathBuf>, flag: &str, context: &str) -> PathBuf {
    value.unwrap_or_else(|| {
        Cli::command()
            .error(
                ErrorKind::MissingRequiredArgument,
                format!("{context} requires --{flag}"),
            )
            .exit()
    })
}

fn config(opts: Opts, needs: &[&str], context: &str) -> PipelineConfig {
    let mut config = PipelineConfig::new(
        if needs.contains(&"corpus") {
            require(opts.corpus, "corpus", context)
        } else {
            opts.corpus.unwrap_or_default()
        },
        opts.out,
        if needs.contains(&"lemmas") {
            require(opts.lemmas, "lemmas", context)
        } else {
            opts.lemmas.unwrap_or_default()
        },
        if needs.contains(&"frames") {
            require(opts.frames, "frames", context)
        } else {
            opts.frames.unwrap_or_default()
        },
    );
    config.relations = opts.relations;
    config.frame_hierarchy = opts.frame_hierarchy;
    config.language = opts.lang;
    config.k_max = opts.kmax;
    config.seed = opts.seed;
    config.wsd = match opts.wsd {
        WsdArg::FirstSense => WsdStrategy::FirstSense,
        WsdArg::GraphPpr => WsdStrategy::GraphPpr,
    };
    config.names = opts.names;
    config.dumps = opts.dump.into_iter().map(Stage::from).collect();
    config.strict = opts.strict;
    config.jobs = opts.jobs.map(|j| j as usize);
    if opts.multiplicity {
        config.frame_counting = FrameCounting::Multiplicity;
    }
    config
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Extract(opts) => {
            let config = config(opts, &["corpus", "lemmas", "frames"], "extract");
            run_extract(&config).map(|out| {
                println!(
                    "{} ontologies ({} skipped), {} communities clustered into {} components",
                    out.manifest.ontologies.len(),
                    out.manifest.skipped.len(),
                    out.manifest.clustered,
                    out.catalogue.components.len(),
                );
            })
        }
        Command::Stage { stage, opts } => {
            let needs: &[&str] = match stage {
                StageArg::Graph | StageArg::Vdocs => &["corpus"],
                StageArg::Ground => &["lemmas", "frames"],
                StageArg::Communities | StageArg::Cluster => &[],
            };
            let config = config(opts, needs, "this stage");
            run_stage(stage.into(), &config)
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
