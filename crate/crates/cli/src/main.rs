use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commtrace::config::PipelineConfig;
use commtrace::stages;

/// Dynamic co-citation community analysis pipeline.
#[derive(Parser)]
#[command(name = "commtrace", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Pipeline configuration (JSON).
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Override the output directory.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Override the run seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Cap worker threads (default: all cores).
    #[arg(long, value_name = "N")]
    threads: Option<usize>,
    /// Override the shift threshold θ_S.
    #[arg(long, value_name = "X")]
    theta_shift: Option<f64>,
    /// Override the shift/merge threshold θ_SM.
    #[arg(long, value_name = "X")]
    theta_merge: Option<f64>,
    /// Override the topic-change threshold θ_C.
    #[arg(long, value_name = "X")]
    theta_topic: Option<f64>,
    /// Override the minimum author overlap.
    #[arg(long, value_name = "N")]
    min_overlap: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the whole pipeline and write the run manifest.
    Run(CommonArgs),
    /// Build per-window co-citation graphs (edges.tsv).
    Build(CommonArgs),
    /// Detect or import per-window partitions (partition.tsv).
    Detect {
        #[command(flatten)]
        common: CommonArgs,
        /// Import partitions from this directory instead of detecting.
        #[arg(long, value_name = "DIR")]
        import: Option<PathBuf>,
    },
    /// Match communities across windows (lineage.tsv).
    Track(CommonArgs),
    /// Build TF-IAF vectors and centroids (centroids.tsv).
    Topics(CommonArgs),
    /// Compute life-cycle profiles and assessments.
    Measures(CommonArgs),
    /// Detect shift / shift-merge / topic-change events (events.jsonl).
    Events(CommonArgs),
    /// Emit position-stable per-window layouts (layout.tsv).
    Layout(CommonArgs),
    /// Emit an evolution diagram in DOT.
    Diagram {
        #[command(flatten)]
        common: CommonArgs,
        /// Focus communities, e.g. `w3:c15` (repeatable; default all).
        #[arg(long, value_name = "REF")]
        focus: Vec<String>,
        /// Minimum displayed edge fraction.
        #[arg(long, value_name = "X")]
        min_fraction: Option<f64>,
        /// Output name under diagrams/ (without extension).
        #[arg(long)]
        name: Option<String>,
    },
}

impl Command {
    fn common(&self) -> &CommonArgs {
        match self {
            Command::Run(c)
            | Command::Build(c)
            | Command::Track(c)
            | Command::Topics(c)
            | Command::Measures(c)
            | Command::Events(c)
            | Command::Layout(c) => c,
            Command::Detect { common, .. } | Command::Diagram { common, .. } => common,
        }
    }
}

fn load_config(common: &CommonArgs) -> anyhow::Result<PipelineConfig> {
    let mut config = PipelineConfig::from_file(&common.config)?;
    if let Some(out) = &common.out {
        config.out = out.clone();
    }
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if let Some(v) = common.theta_shift {
        config.theta_shift = v;
    }
    if let Some(v) = common.theta_merge {
        config.theta_merge = v;
    }
    if let Some(v) = common.theta_topic {
        config.theta_topic = v;
    }
    if let Some(v) = common.min_overlap {
        config.min_overlap = v;
    }
    Ok(config)
}

fn validate_or_exit(config: &PipelineConfig) -> Result<(), ExitCode> {
    let errors = config.validate();
    if errors.is_empty() {
        return Ok(());
    }
    eprintln!("{}", serde_json::json!({ "errors": errors }));
    Err(ExitCode::from(2))
}

fn run(cli: Cli) -> Result<(), ExitCode> {
    let common = cli.command.common().clone();
    if let Some(threads) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| {
                eprintln!("error: {e}");
                ExitCode::FAILURE
            })?;
    }
    let mut config = load_config(&common).map_err(|e| {
        eprintln!("{}", serde_json::json!({ "errors": [e.to_string()] }));
        ExitCode::from(2)
    })?;

    let outcome = match cli.command {
        Command::Run(_) => {
            validate_or_exit(&config)?;
            stages::run_pipeline(&config).map(|m| {
                println!(
                    "ok: {} windows, {} events, artifacts in {}",
                    m.windows.len(),
                    m.event_count.unwrap_or(0),
                    config.out.display()
                );
            })
        }
        Command::Build(_) => {
            validate_or_exit(&config)?;
            stages::stage_build(&config).map(|s| {
                for w in &s.windows {
                    println!("{}\t{} nodes\t{} edges", w.label, w.nodes, w.edges);
                }
            })
        }
        Command::Detect { import, .. } => {
            if let Some(dir) = import {
                config.detector = commtrace::config::Detector::Imported;
                config.partitions = Some(dir);
            }
            validate_or_exit(&config)?;
            stages::stage_detect(&config).map(|counts| {
                for (idx, n) in counts.iter().enumerate() {
                    println!("w{idx:03}\t{n} communities");
                }
            })
        }
        Command::Track(_) => {
            validate_or_exit(&config)?;
            stages::stage_track(&config)
        }
        Command::Topics(_) => {
            validate_or_exit(&config)?;
            stages::stage_topics(&config)
        }
        Command::Measures(_) => {
            validate_or_exit(&config)?;
            stages::stage_measures(&config)
        }
        Command::Events(_) => {
            validate_or_exit(&config)?;
            stages::stage_events(&config).map(|n| println!("{n} events"))
        }
        Command::Layout(_) => {
            validate_or_exit(&config)?;
            stages::stage_layout(&config)
        }
        Command::Diagram {
            focus,
            min_fraction,
            name,
            ..
        } => {
            validate_or_exit(&config)?;
            let focus = focus
                .iter()
                .map(|s| stages::parse_community_ref(s))
                .collect::<anyhow::Result<Vec<_>>>();
            focus.and_then(|focus| {
                let opts = stages::DiagramOptions {
                    focus,
                    min_fraction,
                    name,
                };
                stages::stage_diagram(&config, &opts)
                    .map(|path| println!("{}", path.display()))
            })
        }
    };

    outcome.map_err(|e| {
        eprintln!("error: {e:#}");
        ExitCode::FAILURE
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("COMMTRACE_LOG"))
        .format_timestamp(None)
        .init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(code) => code,
    }
}
