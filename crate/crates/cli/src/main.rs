use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use crackle::harness::{
    cloud_csv, curve_csv, emit, limit_at, preset, report_csv, report_json, run_convergence, sample_curve,
    sample_trial, write_bytes, ExperimentConfig, Format,
};
use crackle::{Error, Result};

#[derive(Parser)]
#[command(name = "crackle", version, about = "Tail Betti numbers of heavy-tailed random Cech complexes")]
struct Cli {
    /// JSON experiment config.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Use a named preset instead of a config file.
    #[arg(long, global = true)]
    preset: Option<String>,
    /// Override the master seed of the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// csv or json.
    #[arg(long, global = true, value_parser = parse_format)]
    format: Option<Format>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw one cloud and write it as CSV (or JSON).
    Sample {
        #[arg(long)]
        n: Option<u64>,
        #[arg(long, default_value_t = 0)]
        trial: usize,
    },
    /// Tail Betti curve of one sampled cloud on the config's t grid.
    Betti {
        #[arg(long)]
        n: Option<u64>,
        #[arg(long, default_value_t = 0)]
        trial: usize,
    },
    /// One estimate of the limit functional matching the config's regime.
    Limit {
        #[arg(long)]
        t: f64,
    },
    /// Full convergence experiment.
    Converge,
    /// Print a named config as JSON.
    Preset { name: String },
}

fn parse_format(s: &str) -> std::result::Result<Format, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match (&cli.config, &cli.preset) {
        (Some(path), None) => ExperimentConfig::load(path)?,
        (None, Some(name)) => preset(name)?,
        (Some(_), Some(_)) => return Err(Error::Config("pass either --config or --preset, not both".into())),
        (None, None) => return Err(Error::Config("this command needs --config <path> or --preset <name>".into())),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn output(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(path) => write_bytes(path, bytes),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(bytes)
                .and_then(|_| stdout.flush())
                .map_err(|e| Error::Io {
                    path: PathBuf::from("<stdout>"),
                    source: e,
                })
        }
    }
}

fn json_bytes<T: serde::Serialize>(value: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s.into_bytes()
}

fn run(cli: &Cli) -> Result<()> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(Error::Config("--threads must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    let out = cli.out.as_deref();
    match &cli.command {
        Command::Preset { name } => output(out, &json_bytes(&preset(name)?)),
        Command::Sample { n, trial } => {
            let cfg = load_config(cli)?;
            let n = n.unwrap_or(cfg.n_values[0]);
            let cloud = sample_trial(&cfg, n, *trial)?;
            match cli.format.unwrap_or(Format::Csv) {
                Format::Csv => output(out, &cloud_csv(&cloud)),
                Format::Json => output(out, &json_bytes(&cloud)),
            }
        }
        Command::Betti { n, trial } => {
            let cfg = load_config(cli)?;
            let n = n.unwrap_or(cfg.n_values[0]);
            let rec = sample_curve(&cfg, n, *trial)?;
            match cli.format.unwrap_or(Format::Csv) {
                Format::Csv => output(out, &curve_csv(&rec)),
                Format::Json => output(out, &json_bytes(&rec)),
            }
        }
        Command::Limit { t } => {
            let cfg = load_config(cli)?;
            if cli.format == Some(Format::Csv) {
                return Err(Error::Config("limit output is JSON only".into()));
            }
            output(out, &json_bytes(&limit_at(&cfg, *t)?))
        }
        Command::Converge => {
            let cfg = load_config(cli)?;
            let config_out = cfg.output.clone();
            let report = run_convergence(&cfg)?;
            let format = cli.format.or(config_out.as_ref().map(|o| o.format)).unwrap_or(Format::Csv);
            match out.or(config_out.as_ref().map(|o| o.path.as_path())) {
                Some(path) => emit(&report, format, path),
                None => match format {
                    Format::Csv => output(None, &report_csv(&report)),
                    Format::Json => output(None, report_json(&report).as_bytes()),
                },
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
