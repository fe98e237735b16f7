use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use sipdec::bench::{aggregate, run_manifest, write_csv, Manifest};
use sipdec::generators::{gen_mesh, gen_random, GeneratedInstance, MeshParams, PatternMode, RandomParams};
use sipdec::io::{read_graph, write_graph, write_witness};
use sipdec::oracle::{brute_force_count, OracleLimits};
use sipdec::{solve, Model, ModelConfig, SearchMode, SipInstance, Status};

#[derive(Parser)]
#[command(name = "sipdec", version, about = "Subgraph isomorphism with decomposition search")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a benchmark instance.
    #[command(subcommand)]
    Gen(GenCommand),
    /// Solve one instance.
    Solve(SolveArgs),
    /// Run a benchmark manifest.
    Bench(BenchArgs),
    /// Count matches by brute force (small instances only).
    Oracle(OracleArgs),
}

#[derive(Subcommand)]
enum GenCommand {
    /// Randomly connected digraph.
    Random(RandomArgs),
    /// Irregular d-dimensional mesh.
    Mesh(MeshArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Embedded,
    Independent,
}

impl From<ModeArg> for PatternMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Embedded => PatternMode::Embedded,
            ModeArg::Independent => PatternMode::Independent,
        }
    }
}

#[derive(Args)]
struct RandomArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    eta: f64,
    #[arg(long)]
    alpha: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "embedded")]
    mode: ModeArg,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct MeshArgs {
    #[arg(long)]
    side: usize,
    #[arg(long)]
    dims: usize,
    #[arg(long)]
    rho: f64,
    #[arg(long)]
    alpha: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "embedded")]
    mode: ModeArg,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum SolveMode {
    First,
    Count,
    Enum,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Cpfc,
    Cpac,
    Dec,
    DecH1,
    DecH2,
}

impl From<ModelArg> for Model {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Cpfc => Model::Cpfc,
            ModelArg::Cpac => Model::Cpac,
            ModelArg::Dec => Model::Dec,
            ModelArg::DecH1 => Model::DecH1,
            ModelArg::DecH2 => Model::DecH2,
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    pattern: PathBuf,
    #[arg(long)]
    target: PathBuf,
    #[arg(long, value_enum, default_value = "dec-h1")]
    model: ModelArg,
    #[arg(long, value_enum, default_value = "count")]
    mode: SolveMode,
    /// Seconds.
    #[arg(long, default_value_t = 600.0)]
    time_limit: f64,
    #[arg(long, default_value_t = 0.3)]
    switch_frac: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    suite: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Per-instance JSON-lines log (defaults to the CSV path with a .jsonl extension).
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    pattern: PathBuf,
    #[arg(long)]
    target: PathBuf,
}

fn load_instance(pattern: &Path, target: &Path) -> Result<SipInstance> {
    let p = read_graph(pattern).with_context(|| format!("reading pattern {}", pattern.display()))?;
    let t = read_graph(target).with_context(|| format!("reading target {}", target.display()))?;
    Ok(SipInstance::new(p, t)?)
}

fn write_instance(generated: &GeneratedInstance, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    write_graph(generated.instance.pattern(), dir.join("pattern.graph"))?;
    write_graph(generated.instance.target(), dir.join("target.graph"))?;
    if let Some(w) = &generated.witness {
        write_witness(w, dir.join("witness.txt"))?;
    }
    println!(
        "wrote pattern ({} nodes, {} arcs) and target ({} nodes, {} arcs) to {}",
        generated.instance.pattern().node_count(),
        generated.instance.pattern().arc_count(),
        generated.instance.target().node_count(),
        generated.instance.target().arc_count(),
        dir.display()
    );
    Ok(())
}

fn run_solve(args: &SolveArgs) -> Result<ExitCode> {
    anyhow::ensure!(
        args.switch_frac > 0.0 && args.switch_frac <= 1.0,
        "--switch-frac must lie in (0, 1]"
    );
    anyhow::ensure!(args.time_limit > 0.0, "--time-limit must be positive");
    let inst = load_instance(&args.pattern, &args.target)?;
    let mut cfg = ModelConfig::new(args.model.into())
        .with_mode(match args.mode {
            SolveMode::First => SearchMode::First,
            SolveMode::Count => SearchMode::CountAll,
            SolveMode::Enum => SearchMode::EnumerateAll,
        })
        .with_time_limit(Duration::from_secs_f64(args.time_limit));
    cfg.switch_fraction = args.switch_frac;
    cfg.seed = args.seed;
    let r = solve(&inst, &cfg);

    let mut out = std::io::stdout().lock();
    if let Some(sols) = &r.solutions {
        for s in sols {
            let line: Vec<String> = s.iter().map(usize::to_string).collect();
            writeln!(out, "sol {}", line.join(" "))?;
        }
    }
    let (status, rel) = match r.status {
        Status::Solved => ("solved", "="),
        Status::Timeout => ("timeout", ">="),
    };
    writeln!(
        out,
        "{status} count{rel}{} time={:.6} nodes={} D={} #D={} S={:.3}",
        r.solution_count,
        r.elapsed.as_secs_f64(),
        r.search_nodes,
        u8::from(r.used_decomposition),
        r.decomposition_events,
        r.heuristic_fraction
    )?;
    Ok(match r.status {
        Status::Solved => ExitCode::SUCCESS,
        Status::Timeout => ExitCode::from(2),
    })
}

fn run_bench(args: &BenchArgs) -> Result<ExitCode> {
    let text = fs::read_to_string(&args.suite).with_context(|| format!("reading {}", args.suite.display()))?;
    let manifest = Manifest::parse(&text)?;
    let log_path = args.log.clone().unwrap_or_else(|| args.out.with_extension("jsonl"));
    let mut log = BufWriter::new(File::create(&log_path).with_context(|| format!("creating {}", log_path.display()))?);
    let records = run_manifest(&manifest, &mut log, |r| {
        eprintln!(
            "{} #{} {}: {:?} count={} time={:.3}s",
            r.class, r.instance, r.model, r.status, r.solution_count, r.elapsed_s
        );
    })?;
    let rows = aggregate(&records);
    let out = File::create(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    write_csv(&rows, BufWriter::new(out))?;
    Ok(ExitCode::SUCCESS)
}

fn run_oracle(args: &OracleArgs) -> Result<ExitCode> {
    let inst = load_instance(&args.pattern, &args.target)?;
    match brute_force_count(inst.pattern(), inst.target(), &OracleLimits::default()) {
        Ok(count) => {
            println!("count={count}");
            Ok(ExitCode::SUCCESS)
        }
        Err(e) => {
            eprintln!("refused: {e}");
            Ok(ExitCode::from(2))
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Gen(GenCommand::Random(a)) => {
            let g = gen_random(&RandomParams {
                n: a.n,
                eta: a.eta,
                alpha: a.alpha,
                seed: a.seed,
                mode: a.mode.into(),
            })?;
            write_instance(&g, &a.out_dir)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Gen(GenCommand::Mesh(a)) => {
            let g = gen_mesh(&MeshParams {
                side: a.side,
                dims: a.dims,
                rho: a.rho,
                alpha: a.alpha,
                seed: a.seed,
                mode: a.mode.into(),
            })?;
            write_instance(&g, &a.out_dir)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Solve(a) => run_solve(&a),
        Command::Bench(a) => run_bench(&a),
        Command::Oracle(a) => run_oracle(&a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
