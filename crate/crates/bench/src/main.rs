use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rechain::convert::{
    bidi_to_symmetric, bidi_to_symmetric_for_pair, convert_demand, verify_conversion,
};
use rechain::model::{edge_counts, DemandMatrix, NetworkShape, Scheme};
use rechain::scheduler::Algorithm;
use rechain::traffic::{synthetic_trace, write_trace_csv, SyntheticParams, TrafficModel};
use rechain_bench::config::{BenchConfig, TaskMode};
use rechain_bench::output::{write_dynamic, write_static, Format};
use rechain_bench::runs::{run_dynamic_bench, run_static_bench};
use rechain_bench::verify::verify_against_oracle;
use rechain_bench::BenchError;
use serde::{Deserialize, Serialize};

#[derive(Parser, Debug)]
#[command(name = "rechain-bench", version, about = "Benchmarks and tools for the rechain Clos scheduler")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// JSON configuration file; command-line flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Random seed. Falls back to RECHAIN_SEED, then to the config.
    #[arg(long, env = "RECHAIN_SEED")]
    seed: Option<u64>,
    /// Output directory; results go to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args, Debug, Clone)]
struct BenchArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated target loads in (0, 1].
    #[arg(long, value_delimiter = ',')]
    loads: Option<Vec<f64>>,
    #[arg(long, value_parser = parse_algorithm)]
    algorithm: Option<Algorithm>,
    #[arg(long, value_parser = parse_mode)]
    mode: Option<TaskMode>,
    #[arg(long)]
    num_chains: Option<usize>,
    /// Node budget per search iteration; 0 disables the limit.
    #[arg(long)]
    max_comp: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Reconfigure through a sequence of demand phases and record rewiring.
    ///
    /// Connection and rearrangement counts are full-matrix sums, so each
    /// link-pair connection counts twice in both; the ratio is unaffected.
    StaticBench(BenchArgs),
    /// Stream single demand changes and report per-operation cost.
    DynamicBench(BenchArgs),
    /// Convert a bidirectional instance to its symmetric form.
    Convert {
        #[command(flatten)]
        common: Common,
        /// Instance JSON with `shape`, `scheme` and optional `demand`, `pair`.
        input: PathBuf,
    },
    /// Write a synthetic traffic trace as CSV.
    GenTrace {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "gravity")]
        model: TrafficModel,
        #[arg(long)]
        racks: Option<usize>,
        /// Trace length in seconds.
        #[arg(long)]
        duration: Option<f64>,
        #[arg(long)]
        rate: Option<f64>,
    },
    /// Cross-check the chain search against the exhaustive oracle.
    #[command(hide = true)]
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 500)]
        instances: usize,
    },
}

fn parse_algorithm(s: &str) -> Result<Algorithm, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string()))
        .map_err(|_| format!("unknown algorithm {s:?}; expected plain, refined or two-switch"))
}

fn parse_mode(s: &str) -> Result<TaskMode, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string()))
        .map_err(|_| format!("unknown mode {s:?}; expected continuous or discontinuous"))
}

#[derive(Debug, Deserialize)]
struct Instance {
    shape: NetworkShape,
    scheme: Scheme,
    demand: Option<DemandMatrix>,
    /// Pending pair whose endpoints should end up on opposite sides.
    pair: Option<(usize, usize)>,
}

#[derive(Serialize)]
struct ConvertOutput<'a> {
    symmetric: &'a rechain::convert::SymmetricConversion,
    oriented_demand: &'a rechain::convert::OrientedDemand,
}

fn load_config(common: &Common) -> Result<BenchConfig, BenchError> {
    let mut cfg = match &common.config {
        Some(p) => BenchConfig::from_json_file(p)?,
        None => BenchConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn bench_config(args: &BenchArgs) -> Result<BenchConfig, BenchError> {
    let mut cfg = load_config(&args.common)?;
    if let Some(l) = &args.loads {
        cfg.loads = l.clone();
    }
    if let Some(a) = args.algorithm {
        cfg.algorithm = a;
    }
    if let Some(m) = args.mode {
        cfg.mode = m;
    }
    if let Some(c) = args.num_chains {
        cfg.num_chains = c;
    }
    if let Some(c) = args.max_comp {
        cfg.max_comp = (c > 0).then_some(c);
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Opens `dir/name.ext`, or stdout without a directory.
fn sink(common: &Common, name: &str, ext: &str) -> Result<Box<dyn Write>, BenchError> {
    match &common.out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            let path = dir.join(format!("{name}.{ext}"));
            log::info!("writing {}", path.display());
            Ok(Box::new(BufWriter::new(File::create(path)?)))
        }
        None => Ok(Box::new(BufWriter::new(io::stdout().lock()))),
    }
}

fn ext(f: Format) -> &'static str {
    match f {
        Format::Csv => "csv",
        Format::Json => "json",
    }
}

fn read_instance(path: &Path) -> Result<Instance, BenchError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| BenchError::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| BenchError::Config(format!("{}: {e}", path.display())))
}

fn run(cli: Cli) -> Result<(), BenchError> {
    match cli.command {
        Command::StaticBench(args) => {
            let cfg = bench_config(&args)?;
            let runs = run_static_bench(&cfg)?;
            let f = args.common.format;
            let mut out = sink(&args.common, "static", ext(f))?;
            write_static(&mut out, &runs, f)?;
            out.flush()?;
        }
        Command::DynamicBench(args) => {
            let cfg = bench_config(&args)?;
            let rows = run_dynamic_bench(&cfg)?;
            let f = args.common.format;
            let mut out = sink(&args.common, "dynamic", ext(f))?;
            write_dynamic(&mut out, &rows, f)?;
            out.flush()?;
        }
        Command::Convert { common, input } => {
            let inst = read_instance(&input)?;
            let symmetric = match inst.pair {
                Some((j, k)) => bidi_to_symmetric_for_pair(&inst.shape, &inst.scheme, j, k)?,
                None => bidi_to_symmetric(&inst.shape, &inst.scheme)?,
            };
            let d = inst.demand.unwrap_or_else(|| edge_counts(&inst.scheme));
            let oriented = convert_demand(&d, common.seed.unwrap_or(0));
            let violations = verify_conversion(&d, &oriented)?;
            if !violations.is_empty() {
                return Err(BenchError::Runtime(format!("demand conversion violated bounds: {violations:?}")));
            }
            let mut out = sink(&common, "symmetric", "json")?;
            serde_json::to_writer_pretty(
                &mut out,
                &ConvertOutput {
                    symmetric: &symmetric,
                    oriented_demand: &oriented,
                },
            )?;
            writeln!(out)?;
            out.flush()?;
        }
        Command::GenTrace {
            common,
            model,
            racks,
            duration,
            rate,
        } => {
            let cfg = load_config(&common)?;
            let mut params: SyntheticParams = cfg.traffic.params.clone();
            params.racks = racks.unwrap_or(cfg.shape.m);
            if let Some(d) = duration {
                params.duration = d;
            }
            if let Some(r) = rate {
                params.events_per_second = r;
            }
            let events = synthetic_trace(model, &params, cfg.seed)?;
            let mut out = sink(&common, "trace", "csv")?;
            write_trace_csv(&mut out, &events)?;
            out.flush()?;
        }
        Command::Verify { common, instances } => {
            let rep = verify_against_oracle(instances, common.seed.unwrap_or(0))?;
            let mut out = sink(&common, "verify", "json")?;
            serde_json::to_writer_pretty(&mut out, &rep)?;
            writeln!(out)?;
            out.flush()?;
            if !rep.mismatches.is_empty() {
                return Err(BenchError::Runtime(format!(
                    "{} of {} instances disagree with the oracle",
                    rep.mismatches.len(),
                    rep.instances
                )));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
