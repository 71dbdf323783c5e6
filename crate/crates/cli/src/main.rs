use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use maxreg::enumerate::{
    count_db_exact, count_regions_exact, count_regions_grid, export_region_map, EnumOptions, Window, DEFAULT_GRID_CAP,
};
use maxreg::init::{sample_network, DistShape, InitSpec, Scheme};
use maxreg::net::Architecture;
use maxreg_cli::bounds_table::{bounds_table, to_json, to_text, BoundsInput};
use maxreg_cli::config::{split_units, ExperimentConfig};
use maxreg_cli::experiment::run_experiment;
use maxreg_cli::{load_network, with_workers, CliError, Result};
use serde_json::json;

/// Region analysis for maxout networks.
#[derive(Parser)]
#[command(name = "maxreg", version)]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "WORKERS")]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct WindowArgs {
    /// Box `lo:hi[,lo:hi…]`; a single interval applies to every coordinate.
    #[arg(long, default_value = "-50:50", allow_hyphen_values = true)]
    window: Window,
}

#[derive(Args)]
struct ArchArgs {
    #[arg(long)]
    n0: usize,
    /// Comma-separated hidden widths.
    #[arg(long, value_delimiter = ',', conflicts_with_all = ["depth", "total"])]
    widths: Vec<usize>,
    /// Number of hidden layers, used with --total.
    #[arg(long, requires = "total")]
    depth: Option<usize>,
    /// Total hidden units, spread over --depth layers.
    #[arg(long, requires = "depth")]
    total: Option<usize>,
    #[arg(long, short = 'k')]
    rank: usize,
    #[arg(long, default_value_t = 1)]
    out_dim: usize,
}

impl ArchArgs {
    fn arch(&self) -> Result<Architecture> {
        let widths = match (self.depth, self.total) {
            (Some(d), Some(t)) => split_units(d, t)?,
            _ => self.widths.clone(),
        };
        Ok(Architecture::new(self.n0, widths, self.rank, self.out_dim)?)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Exact number of activation regions of a network file.
    Count {
        net: PathBuf,
        #[command(flatten)]
        window: WindowArgs,
        /// Seed recorded in the report.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Exact regions and decision-boundary pieces.
    CountDb {
        net: PathBuf,
        #[command(flatten)]
        window: WindowArgs,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Grid approximation: distinct gradients over a lattice.
    Approx {
        net: PathBuf,
        #[command(flatten)]
        window: WindowArgs,
        /// Points per axis.
        #[arg(long, default_value_t = 512)]
        grid: usize,
    },
    /// Write grid points with their region labels as CSV.
    Regionmap {
        net: PathBuf,
        #[command(flatten)]
        window: WindowArgs,
        #[arg(long, default_value_t = 512)]
        grid: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate every applicable count and bound.
    Bounds {
        #[command(flatten)]
        arch: ArchArgs,
        #[arg(long, default_value_t = 1.0)]
        c_grad: f64,
        #[arg(long, default_value_t = 1.0)]
        c_bias: f64,
        #[arg(long, short = 'r', default_value_t = 0)]
        r: u64,
        /// Constant of the distance bound.
        #[arg(long)]
        c: Option<f64>,
        /// T′ of the zero-bias bound.
        #[arg(long)]
        t_prime: Option<f64>,
        /// Assert that the cube side exceeds δ0, enabling the expected-count bounds.
        #[arg(long)]
        delta_ok: bool,
        #[arg(long)]
        json: bool,
    },
    /// Run a trial sweep described by a JSON config.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, allow_hyphen_values = true)]
        window: Option<Window>,
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample a network and write it as JSON.
    InitDump {
        #[command(flatten)]
        arch: ArchArgs,
        /// InitSpec JSON file; flags below are ignored when given.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_parser = parse_scheme, default_value = "maxout-he")]
        scheme: Scheme,
        #[arg(long, value_parser = parse_shape, default_value = "normal")]
        dist_shape: DistShape,
        #[arg(long)]
        zero_bias: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_kebab<T: serde::de::DeserializeOwned>(s: &str) -> std::result::Result<T, String> {
    serde_json::from_value(json!(s)).map_err(|e| e.to_string())
}

fn parse_scheme(s: &str) -> std::result::Result<Scheme, String> {
    parse_kebab(s)
}

fn parse_shape(s: &str) -> std::result::Result<DistShape, String> {
    parse_kebab(s)
}

fn print_json<T: serde::Serialize>(v: &T) -> Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer(&mut out, v)?;
    writeln!(out)?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let workers = cli.workers;
    match cli.command {
        Command::Count { net, window, seed } => {
            let net = load_network(&net)?;
            let w = window.window.fit_to(net.arch().n0)?;
            let mut report = with_workers(workers, || count_regions_exact(&net, &w, &EnumOptions::default()))??;
            report.seed = seed;
            print_json(&report)
        }
        Command::CountDb { net, window, seed } => {
            let net = load_network(&net)?;
            let w = window.window.fit_to(net.arch().n0)?;
            let mut report = with_workers(workers, || count_db_exact(&net, &w, &EnumOptions::default()))??;
            report.seed = seed;
            print_json(&report)
        }
        Command::Approx { net, window, grid } => {
            let net = load_network(&net)?;
            let w = window.window.fit_to(net.arch().n0)?;
            let n = with_workers(workers, || count_regions_grid(&net, &w, grid, DEFAULT_GRID_CAP))??;
            print_json(&json!({ "grid_regions": n, "grid_pts": grid, "window": w }))
        }
        Command::Regionmap { net, window, grid, out } => {
            let net = load_network(&net)?;
            let w = window.window.fit_to(net.arch().n0)?;
            let map = with_workers(workers, || export_region_map(&net, &w, grid, DEFAULT_GRID_CAP))??;
            let file = std::io::BufWriter::new(std::fs::File::create(&out)?);
            map.write_csv(file)?;
            print_json(&json!({ "labels": map.n_labels, "points": map.labels.len(), "out": out }))
        }
        Command::Bounds {
            arch,
            c_grad,
            c_bias,
            r,
            c,
            t_prime,
            delta_ok,
            json,
        } => {
            let table = bounds_table(&BoundsInput {
                arch: arch.arch()?,
                c_grad,
                c_bias,
                r,
                delta_ok,
                c,
                t_prime,
            })?;
            if json {
                print_json(&to_json(&table))
            } else {
                print!("{}", to_text(&table));
                Ok(())
            }
        }
        Command::Experiment {
            config,
            seed,
            window,
            grid,
            out,
        } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(w) = window {
                cfg.window = w;
            }
            if let Some(g) = grid {
                cfg.grid_pts = g;
            }
            if let Some(o) = out {
                cfg.output = o;
            }
            if workers.is_some() {
                cfg.workers = workers;
            }
            let summary = run_experiment(&cfg)?;
            print_json(&summary)
        }
        Command::InitDump {
            arch,
            config,
            scheme,
            dist_shape,
            zero_bias,
            seed,
            out,
        } => {
            let arch = arch.arch()?;
            let spec = match config {
                Some(path) => {
                    let text = std::fs::read_to_string(&path)?;
                    serde_json::from_str(&text)
                        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
                }
                None => InitSpec {
                    dist_shape,
                    zero_bias,
                    ..InitSpec::new(scheme).with_seed(seed)
                },
            };
            let net = sample_network(&arch, &spec)?;
            let text = net.to_json()?;
            match out {
                Some(path) => Ok(std::fs::write(path, text + "\n")?),
                None => {
                    println!("{text}");
                    Ok(())
                }
            }
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
