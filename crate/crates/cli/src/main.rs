use std::path::PathBuf;

use anyhow::Result;
use clap::{Parser, Subcommand};
use comicgen::{cmd_analyze, cmd_generate, cmd_showcase, load_pack, parse_emit, AnalyzeKind, RunConfig};
use comicgen_core::arc::ArcMode;
use comicgen_core::parse_layers;

#[derive(Parser)]
#[command(name = "comicgen", version, about = "Generate comic-style panel sequences from layered rules")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate one sequence and write its pages, manifest and arc table.
    Generate {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Comma-separated layers, applied in order.
        #[arg(long, default_value = "grammar,arc,action,composition,transition,balloon")]
        layers: String,
        /// Content pack JSON; the bundled sample pack when omitted.
        #[arg(long)]
        pack: Option<PathBuf>,
        /// Story assertions JSON, used by the `story` layer.
        #[arg(long)]
        assertions: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Any of pages, manifest, arc-csv.
        #[arg(long, default_value = "pages,manifest")]
        emit: String,
        #[arg(long, default_value = "canonical")]
        arc_mode: String,
        #[arg(long, default_value_t = 3)]
        columns: usize,
        /// Split pages after this many rows; one page when omitted.
        #[arg(long)]
        rows_per_page: Option<usize>,
        /// Layer parameter override, `key=value`; repeatable.
        #[arg(long = "param", value_parser = parse_param)]
        params: Vec<(String, String)>,
    },
    /// Compare closed-form counts with exhaustive enumeration.
    Analyze {
        #[command(subcommand)]
        kind: Analyze,
        #[arg(long, global = true)]
        pack: Option<PathBuf>,
    },
    /// Write one of the paired layer on/off comparisons.
    Showcase {
        /// arc_onoff, actionnet_onoff, transition_demo, balloon_display or story_demo.
        name: String,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum Analyze {
    /// Grammar structures with n embedding levels.
    Structures {
        #[arg(long, default_value_t = 1)]
        n: usize,
    },
    /// Action walks with k steps.
    Paths {
        #[arg(long, default_value_t = 5)]
        k: usize,
    },
}

fn parse_param(s: &str) -> Result<(String, String), String> {
    s.split_once('=')
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .ok_or_else(|| format!("expected key=value, got `{s}`"))
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Generate {
            seed,
            layers,
            pack,
            assertions,
            out,
            emit,
            arc_mode,
            columns,
            rows_per_page,
            params,
        } => {
            let cfg = RunConfig {
                seed,
                layers: parse_layers(&layers)?,
                pack,
                assertions,
                out,
                emit: parse_emit(&emit)?,
                arc_mode: arc_mode.parse::<ArcMode>()?,
                columns,
                rows_per_page,
                params,
            };
            let output = cmd_generate(&cfg)?;
            print!("{}", output.summary);
            for f in &output.files {
                println!("wrote {}", f.display());
            }
        }
        Command::Analyze { kind, pack } => {
            let pack = load_pack(pack.as_deref())?;
            let kind = match kind {
                Analyze::Structures { n } => AnalyzeKind::Structures { n },
                Analyze::Paths { k } => AnalyzeKind::Paths { k },
            };
            print!("{}", cmd_analyze(kind, &pack)?);
        }
        Command::Showcase { name, seed, out } => {
            print!("{}", cmd_showcase(&name, seed, &out)?);
        }
    }
    Ok(())
}
