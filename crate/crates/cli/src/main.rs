use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use photostat_cli::config::{Config, Experiment, NoiseChoice, Overrides, StateChoice};
use photostat_cli::error::{CliError, Result};
use photostat_cli::{schema, OUTPUT_ENV};

#[derive(Parser)]
#[command(
    name = "photostat",
    version,
    about = "Photon-statistics experiments on simulated microwave fields"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its tables, results and manifest.
    Run(RunArgs),
    /// Grade a run directory (or a directory of runs) and write summary.json.
    Report { dir: PathBuf },
    /// Print a JSON schema, list them, or write them all to a directory.
    Schema {
        name: Option<String>,
        #[arg(long)]
        write: Option<PathBuf>,
    },
}

#[derive(clap::Args)]
struct RunArgs {
    experiment: Option<Experiment>,
    /// JSON config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory. Default: $PHOTOSTAT_OUT/<experiment> or ./photostat-out/<experiment>.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Cap on worker threads.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, value_enum)]
    state: Option<StateChoice>,
    #[arg(long)]
    n_points: Option<usize>,
    #[arg(long)]
    shots: Option<u64>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long, value_enum)]
    noise_statistics: Option<NoiseChoice>,
    #[arg(long)]
    n_n: Option<f64>,
    #[arg(long)]
    gain_db: Option<f64>,
    #[arg(long)]
    chain_noise_photons: Option<f64>,
}

fn run(args: RunArgs) -> Result<()> {
    if let Some(t) = args.threads {
        if t == 0 {
            return Err(CliError::config("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::config(e.to_string()))?;
    }
    let mut cfg = match &args.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    cfg.apply(&Overrides {
        experiment: args.experiment,
        seed: args.seed,
        output_dir: args.out,
        state: args.state,
        n_points: args.n_points,
        shots: args.shots,
        samples: args.samples,
        noise_statistics: args.noise_statistics,
        n_n: args.n_n,
        gain_db: args.gain_db,
        chain_noise_photons: args.chain_noise_photons,
    });
    let env_root = std::env::var_os(OUTPUT_ENV).map(PathBuf::from);
    let r = photostat_cli::run(&cfg, env_root)?;
    println!("{}", r.dir.display());
    for f in r.files {
        println!("  {f}");
    }
    Ok(())
}

fn schemas(name: Option<String>, write: Option<PathBuf>) -> Result<()> {
    if let Some(dir) = write {
        std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
        for (n, text) in schema::SCHEMAS {
            if name.as_deref().is_some_and(|want| want != *n) {
                continue;
            }
            let path = dir.join(schema::file_name(n));
            std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
            println!("{}", path.display());
        }
        return Ok(());
    }
    match name {
        None => schema::SCHEMAS.iter().for_each(|(n, _)| println!("{n}")),
        Some(n) => {
            let text =
                schema::get(&n).ok_or_else(|| CliError::config(format!("unknown schema {n:?}")))?;
            print!("{text}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    // clap's usage errors default to exit 2, which is reserved for numerical failures
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Report { dir } => photostat_cli::report(&dir).map(|(s, text)| {
            print!("{text}");
            if !s.all_pass {
                eprintln!("some checks failed");
            }
        }),
        Command::Schema { name, write } => schemas(name, write),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
