mod commands;
mod config;
mod output;

use clap::{Parser, Subcommand};
use commands::{ImagingCmd, InjectCmd, MomentsCmd, Outcome, ShadowsCmd};
use config::{config_err, load_file, resolve, ConfigError, Format, Globals};
use serde_json::{json, Map, Value};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Overrides the directory outputs land in when `--out` is not given.
const OUTPUT_DIR_ENV: &str = "QUPLOAD_OUTPUT_DIR";
const DEFAULT_OUTPUT_DIR: &str = "results";

#[derive(Parser, Debug)]
#[command(name = "qupload", version, about = "Injection, noisy-learning and imaging experiments")]
struct Cli {
    /// JSON file with parameters; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; a random one is drawn and logged when absent.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for the Monte Carlo loops.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output file; defaults to <dir>/<family>-<command>.<ext>.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    family: Family,
}

#[derive(Subcommand, Debug)]
enum Family {
    /// Surface-code state injection by patch growth.
    #[command(subcommand)]
    Inject(InjectCmd),
    /// Third-moment estimation with noisy copies.
    #[command(subcommand)]
    Moments(MomentsCmd),
    /// Shallow-shadow weights under noise.
    #[command(subcommand)]
    Shadows(ShadowsCmd),
    /// Eigen-filtered imaging of a faint companion.
    #[command(subcommand)]
    Imaging(ImagingCmd),
}

impl Family {
    fn name(&self) -> (&'static str, &'static str) {
        match self {
            Family::Inject(c) => (
                "inject",
                match c {
                    InjectCmd::Sweep(_) => "sweep",
                    InjectCmd::Channel(_) => "channel",
                    InjectCmd::Bound(_) => "bound",
                },
            ),
            Family::Moments(c) => (
                "moments",
                match c {
                    MomentsCmd::Estimate(_) => "estimate",
                    MomentsCmd::Gap(_) => "gap",
                    MomentsCmd::Bounds(_) => "bounds",
                    MomentsCmd::Threshold(_) => "threshold",
                },
            ),
            Family::Shadows(c) => (
                "shadows",
                match c {
                    ShadowsCmd::Weight(_) => "weight",
                    ShadowsCmd::Separation(_) => "separation",
                    ShadowsCmd::Scan(_) => "scan",
                },
            ),
            Family::Imaging(c) => (
                "imaging",
                match c {
                    ImagingCmd::Run(_) => "run",
                    ImagingCmd::Sweep(_) => "sweep",
                },
            ),
        }
    }
}

fn dispatch(family: &Family, params: &Map<String, Value>, seed: u64) -> anyhow::Result<Outcome> {
    use commands::*;
    match family {
        Family::Inject(InjectCmd::Sweep(f)) => inject_sweep(&resolve(params, f)?, seed),
        Family::Inject(InjectCmd::Channel(f)) => inject_channel(&resolve(params, f)?, seed),
        Family::Inject(InjectCmd::Bound(f)) => inject_bound(&resolve(params, f)?),
        Family::Moments(MomentsCmd::Estimate(f)) => moments_estimate(&resolve(params, f)?, seed),
        Family::Moments(MomentsCmd::Gap(f)) => moments_gap(&resolve(params, f)?, seed),
        Family::Moments(MomentsCmd::Bounds(f)) => moments_bounds(&resolve(params, f)?),
        Family::Moments(MomentsCmd::Threshold(f)) => moments_threshold(&resolve(params, f)?),
        Family::Shadows(ShadowsCmd::Weight(f)) => shadows_weight(&resolve(params, f)?, seed),
        Family::Shadows(ShadowsCmd::Separation(f)) => shadows_separation(&resolve(params, f)?),
        Family::Shadows(ShadowsCmd::Scan(f)) => shadows_scan(&resolve(params, f)?, seed),
        Family::Imaging(ImagingCmd::Run(f)) => imaging_run_cmd(&resolve(params, f)?, seed),
        Family::Imaging(ImagingCmd::Sweep(f)) => imaging_sweep_cmd(&resolve(params, f)?),
    }
}

fn take<T: serde::de::DeserializeOwned>(file: &Map<String, Value>, key: &str) -> anyhow::Result<Option<T>> {
    file.get(key)
        .map(|v| serde_json::from_value(v.clone()).map_err(|e| config_err(format!("config key `{key}`: {e}"))))
        .transpose()
}

fn globals(cli: &Cli, file: &Map<String, Value>, stem: &str) -> anyhow::Result<Globals> {
    let given = match cli.seed {
        Some(s) => Some(s),
        None => take::<u64>(file, "seed")?,
    };
    let seed_was_random = given.is_none();
    let seed = given.unwrap_or_else(rand::random);
    if seed_was_random {
        eprintln!("seed = {seed} (random)");
    }
    let threads = match cli.threads {
        Some(t) => Some(t),
        None => take(file, "threads")?,
    };
    if threads == Some(0) {
        return Err(config_err("--threads must be positive"));
    }
    let format = match cli.format {
        Some(f) => f,
        None => take(file, "format")?.unwrap_or(Format::Csv),
    };
    let out = match &cli.out {
        Some(p) => p.clone(),
        None => match take::<PathBuf>(file, "out")? {
            Some(p) => p,
            None => {
                let dir = std::env::var_os(OUTPUT_DIR_ENV)
                    .map(PathBuf::from)
                    .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR));
                let ext = match format {
                    Format::Csv => "csv",
                    Format::Json => "json",
                };
                dir.join(format!("{stem}.{ext}"))
            }
        },
    };
    Ok(Globals { seed, seed_was_random, threads, format, out })
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let file = load_file(cli.config.as_deref())?;
    let (family, sub) = cli.family.name();
    let g = globals(&cli, &file.globals, &format!("{family}-{sub}"))?;
    if let Some(n) = g.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let outcome = dispatch(&cli.family, &file.params, g.seed)?;
    let command = format!("{family} {sub}");
    let resolved = json!({
        "command": command,
        "seed": g.seed,
        "seed_source": if g.seed_was_random { "random" } else { "given" },
        "threads": g.threads,
        "format": g.format,
        "out": g.out,
        "params": outcome.params,
    });
    let bytes = output::render(&command, &resolved, &outcome.table, g.format)?;
    output::write(&g.out, &bytes)?;
    print!("{}", String::from_utf8_lossy(&bytes));
    eprintln!("wrote {}", display(&g.out));
    Ok(())
}

fn display(p: &Path) -> String {
    p.display().to_string()
}

/// 2 for anything the user can fix by changing the input, 3 otherwise.
fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<ConfigError>().is_some() {
        return 2;
    }
    match err.downcast_ref::<qupload::Error>() {
        Some(qupload::Error::Invariant(_)) => 3,
        Some(_) => 2,
        None => 3,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
