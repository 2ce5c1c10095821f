//! `trifree`: command-line front end for the simulator.
//!
//! Exit codes: 0 ok, 1 check failure, 2 config error, 3 I/O error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand as ClapSub};
use trifree::experiment::{execute, ExperimentConfig, Subcommand};
use trifree::Error;

#[derive(Parser)]
#[command(name = "trifree", version, about = "Triangle-free random graph process laboratory")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON configuration document.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Dotted config override, e.g. `--set census.timeout_secs=30`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    #[arg(long, short)]
    n: Option<u32>,
    /// Sizes for sweep and trajectory, e.g. `--sweep 1024,2048`.
    #[arg(long, value_delimiter = ',')]
    sweep: Vec<u32>,
    #[arg(long)]
    seeds: Option<u64>,
    #[arg(long)]
    master_seed: Option<u64>,
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    /// Print the resolved configuration and exit.
    #[arg(long)]
    print_config: bool,
}

#[derive(ClapSub)]
enum Cmd {
    /// Run the process and write trajectories and a summary.
    Run {
        #[command(flatten)]
        common: Common,
        /// Also write final edge lists.
        #[arg(long)]
        write_edges: bool,
    },
    /// Final edge counts and degrees across sizes.
    Sweep {
        #[command(flatten)]
        common: Common,
    },
    /// Small-subgraph appearance frequencies.
    Census {
        #[command(flatten)]
        common: Common,
        /// Graph name (`C4`, `Petersen`, ...) or literal `name: v=..; edges=..`.
        #[arg(long = "graph")]
        graphs: Vec<String>,
    },
    /// Independence numbers and Ramsey certificates.
    Ramsey {
        #[command(flatten)]
        common: Common,
    },
    /// Deviation summaries of Q, R, S across sizes.
    Trajectory {
        #[command(flatten)]
        common: Common,
    },
    /// Stacking counts at sampled pairs.
    Stacking {
        #[command(flatten)]
        common: Common,
        /// Stacking word, e.g. `--pi "YO XO O E"`.
        #[arg(long = "pi")]
        words: Vec<String>,
        /// Extension pattern literal with a two-vertex base.
        #[arg(long = "pattern")]
        patterns: Vec<String>,
        /// Saved edge list to count on.
        #[arg(long)]
        edges: Option<PathBuf>,
    },
    /// Check optimized code paths against brute-force oracles (n <= 64).
    VerifyOracle {
        #[command(flatten)]
        common: Common,
        /// Corrupt run RUN's sampler at STEP, as `RUN:STEP`.
        #[arg(long, value_name = "RUN:STEP")]
        inject_fault: Option<String>,
    },
}

fn json_list(items: &[String]) -> String {
    serde_json::to_string(items).expect("strings serialize")
}

fn resolve(cmd: &Cmd) -> Result<(Subcommand, ExperimentConfig, bool), Error> {
    let (sub, common, mut extra) = match cmd {
        Cmd::Run { common, write_edges } => (
            Subcommand::Run,
            common,
            if *write_edges { vec!["write_edges=true".to_string()] } else { vec![] },
        ),
        Cmd::Sweep { common } => (Subcommand::Sweep, common, vec![]),
        Cmd::Census { common, graphs } => (
            Subcommand::Census,
            common,
            if graphs.is_empty() { vec![] } else { vec![format!("census.graphs={}", json_list(graphs))] },
        ),
        Cmd::Ramsey { common } => (Subcommand::Ramsey, common, vec![]),
        Cmd::Trajectory { common } => (Subcommand::Trajectory, common, vec![]),
        Cmd::Stacking {
            common,
            words,
            patterns,
            edges,
        } => {
            let mut e = Vec::new();
            if !words.is_empty() {
                e.push(format!("stacking.words={}", json_list(words)));
            }
            if !patterns.is_empty() {
                e.push(format!("stacking.patterns={}", json_list(patterns)));
            }
            if let Some(p) = edges {
                e.push(format!("stacking.edges_file={}", serde_json::to_string(p).expect("path serializes")));
            }
            (Subcommand::Stacking, common, e)
        }
        Cmd::VerifyOracle { common, inject_fault } => {
            let mut e = Vec::new();
            if let Some(f) = inject_fault {
                let (run, step) = f
                    .split_once(':')
                    .and_then(|(a, b)| Some((a.parse::<u64>().ok()?, b.parse::<u64>().ok()?)))
                    .ok_or_else(|| Error::Config(format!("--inject-fault expects RUN:STEP, got {f:?}")))?;
                e.push(format!("verify.fault={{\"run\":{run},\"step\":{step}}}"));
            }
            (Subcommand::VerifyOracle, common, e)
        }
    };
    let mut sets = Vec::new();
    if let Some(n) = common.n {
        sets.push(format!("n={n}"));
    }
    if !common.sweep.is_empty() {
        sets.push(format!("sweep={:?}", common.sweep));
    }
    if let Some(s) = common.seeds {
        sets.push(format!("seeds={s}"));
    }
    if let Some(s) = common.master_seed {
        sets.push(format!("master_seed={s}"));
    }
    if let Some(o) = &common.output {
        sets.push(format!("output={}", serde_json::to_string(o).expect("path serializes")));
    }
    if let Some(t) = common.threads {
        sets.push(format!("threads={t}"));
    }
    sets.append(&mut extra);
    sets.extend(common.sets.iter().cloned());
    let doc = match &common.config {
        Some(p) => Some(
            std::fs::read_to_string(p).map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?,
        ),
        None => None,
    };
    let cfg = ExperimentConfig::resolve(doc.as_deref(), &sets)?;
    Ok((sub, cfg, common.print_config))
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io(_) => 3,
        Error::Config(_) | Error::Parse(_) | Error::InvalidArgument(_) | Error::Json(_) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let run = || -> Result<bool, Error> {
        let (sub, cfg, print) = resolve(&cli.cmd)?;
        if print {
            println!("{}", serde_json::to_string_pretty(&cfg)?);
            return Ok(true);
        }
        let out = execute(sub, &cfg)?;
        for l in &out.lines {
            println!("{l}");
        }
        for f in &out.files {
            eprintln!("wrote {}", f.display());
        }
        Ok(out.ok)
    };
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
