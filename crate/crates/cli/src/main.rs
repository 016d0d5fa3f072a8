use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tempnet_core::pipeline::{self, RunConfig};
use tempnet_core::transition::{best_seed, count_lattice, seed_pool, taboo_search};
use tempnet_core::{Error, FlowSystem, KernelBasis, Result, SearchConfig};

#[derive(Parser)]
#[command(name = "tempnet", about = "Temporal network generator with ground-truth communities")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the generator from a TOML config and write CSV exports and reports.
    Generate(GenerateArgs),
    /// Draw each step's sequences and report graphability only.
    Check(CheckArgs),
    /// Enumerate, seed and search node flows between two size multisets.
    Flow(FlowArgs),
    /// Print the version.
    Version,
}

#[derive(Args)]
struct Overrides {
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct GenerateArgs {
    config: PathBuf,
    #[command(flatten)]
    overrides: Overrides,
    /// Override the output root; each run gets its own directory below it.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Keep the best seed flow instead of running the taboo search.
    #[arg(long)]
    no_search: bool,
    /// Jaccard threshold for continuation and label inheritance.
    #[arg(long)]
    continuation_threshold: Option<f64>,
    /// Minimum share for split and merge events.
    #[arg(long)]
    share_threshold: Option<f64>,
}

#[derive(Args)]
struct CheckArgs {
    config: PathBuf,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args)]
struct FlowArgs {
    /// Community sizes at t, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    from: Vec<u64>,
    /// Community sizes at t+1, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    to: Vec<u64>,
    /// Stop counting lattice points past this many.
    #[arg(long, default_value_t = 100_000)]
    cap: u64,
    #[arg(long, default_value_t = 50)]
    local_tries: usize,
    #[arg(long, default_value_t = 10)]
    global_tries: usize,
    #[arg(long)]
    no_search: bool,
    /// Print the VI after every search move.
    #[arg(long)]
    trajectory: bool,
}

fn load(path: &PathBuf, overrides: &Overrides) -> Result<RunConfig> {
    let mut cfg = RunConfig::from_file(path)?;
    if let Some(seed) = overrides.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn generate(args: &GenerateArgs) -> Result<()> {
    let mut cfg = load(&args.config, &args.overrides)?;
    if let Some(out) = &args.output {
        cfg.output_dir = out.clone();
    }
    if args.no_search {
        cfg.search.skip = true;
    }
    if let Some(t) = args.continuation_threshold {
        cfg.lifecycle.continuation_threshold = t;
    }
    if let Some(t) = args.share_threshold {
        cfg.lifecycle.share_threshold = t;
    }
    let (out, dir) = pipeline::run_and_write(&cfg)?;
    for s in &out.report.snapshots {
        println!(
            "t={} nodes={} links={} communities={} modularity={:.4} assortativity={:.4}",
            s.t, s.nodes, s.links, s.communities, s.modularity, s.assortativity.value
        );
        for (c, parts) in &s.disconnected {
            eprintln!("warning: t={} community {c} has {parts} components", s.t);
        }
    }
    println!("{}", dir.display());
    Ok(())
}

fn check(args: &CheckArgs) -> Result<()> {
    let cfg = load(&args.config, &args.overrides)?;
    let mut failed = None;
    for c in pipeline::check(&cfg)? {
        println!("t={} nodes={} communities={} {}", c.t, c.nodes, c.communities, c.report);
        if !c.report.ok && failed.is_none() {
            failed = Some((c.t, c.report));
        }
    }
    match failed {
        Some((step, report)) => Err(Error::Graphability { step, report }),
        None => Ok(()),
    }
}

fn flow(args: &FlowArgs) -> Result<()> {
    let sys = FlowSystem::new(args.from.clone(), args.to.clone())?;
    match count_lattice(&sys, args.cap) {
        Ok(n) => println!("solutions: {n}"),
        Err(Error::EnumerationOverflow { cap }) => println!("solutions: more than {cap}"),
        Err(e) => return Err(e),
    }
    let pool = seed_pool(&sys);
    for s in &pool {
        println!("seed {:<18} vi={:.6}", s.heuristic.to_string(), s.vi);
    }
    let best = best_seed(&pool);
    println!("best seed: {}", best.heuristic);
    if args.no_search {
        print!("{}", best.flow);
        return Ok(());
    }
    let cfg = SearchConfig {
        local_tries_threshold: args.local_tries,
        global_tries_threshold: args.global_tries,
        ..SearchConfig::default()
    };
    cfg.validate()?;
    let out = taboo_search(&sys, &best.flow, &KernelBasis::for_system(&sys), &cfg);
    println!(
        "search: vi={:.6} seed_vi={:.6} moves={} improvements={} restarts={}",
        out.vi, out.seed_vi, out.moves, out.improvements, out.restarts
    );
    if args.trajectory {
        for (i, v) in out.trajectory.iter().enumerate() {
            println!("move {} vi={v:.6}", i + 1);
        }
    }
    print!("{}", out.flow);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Generate(a) => generate(a),
        Command::Check(a) => check(a),
        Command::Flow(a) => flow(a),
        Command::Version => {
            println!("tempnet {}", env!("CARGO_PKG_VERSION"));
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
