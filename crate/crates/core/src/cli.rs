//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 on invalid input, 2 on I/O or other runtime
//! failure. Settings resolve in three layers: built-in defaults, then the
//! config file (`--config`, or the path in `SECURE_NOMA_CONFIG`), then flags.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::experiments::{
    export, export_gain, gain_vs_users, parse_list, run_experiment, trial_seed, write_csv,
    write_gain_csv, ExperimentConfig, OutputFormat,
};
use crate::orders::{
    count_orders, enumerate_orders, is_secure, order_from_id, order_id, policy_order, OrderId,
    SizeLimit,
};
use crate::system::{power_allocation, sample_channels, secrecy_rates};

/// Environment variable naming a default config file.
pub const CONFIG_ENV: &str = "SECURE_NOMA_CONFIG";

#[derive(Debug, Parser)]
#[command(
    name = "secure-noma",
    version,
    about = "Secure decoding orders for untrusted downlink NOMA"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Count total, secure and favourable decoding orders.
    Count {
        #[arg(long)]
        users: usize,
        #[arg(long)]
        allow_large_n: bool,
    },
    /// Stream the ids of all secure decoding orders.
    FilterSecure {
        #[arg(long)]
        users: usize,
        #[arg(long)]
        allow_large_n: bool,
    },
    /// Per-user secrecy rates of one order on one channel draw.
    #[command(allow_negative_numbers = true)]
    Eval {
        #[arg(long)]
        users: Option<usize>,
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        seed: Option<u64>,
        /// Defaults to the policy order for --beta.
        #[arg(long)]
        order_id: Option<u128>,
        #[command(flatten)]
        physics: PhysicsArgs,
    },
    /// Print the policy order matrix (rows are stages, columns are users).
    #[command(allow_negative_numbers = true)]
    Policy {
        #[arg(long)]
        users: usize,
        #[arg(long)]
        beta: f64,
    },
    /// Per-trial beta sweep for each scheme.
    Sweep {
        #[arg(long)]
        users: Option<usize>,
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        physics: PhysicsArgs,
    },
    /// Policy versus benchmark over several user counts.
    Simulate {
        /// Comma-separated user counts, each in 2..=4.
        #[arg(long, default_value = "2,3,4")]
        users: String,
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        physics: PhysicsArgs,
    },
}

#[derive(Debug, Args)]
struct PhysicsArgs {
    #[arg(long)]
    zeta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pt_dbm: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    noise_dbm: Option<f64>,
    /// Side of the square cell, meters.
    #[arg(long)]
    field_len: Option<f64>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Comma-separated betas in [-1, 1].
    #[arg(long, allow_hyphen_values = true)]
    beta_grid: Option<String>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated scheme names.
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    allow_large_n: bool,
}

fn base_config(physics: &PhysicsArgs) -> Result<ExperimentConfig> {
    let path = physics
        .config
        .clone()
        .or_else(|| std::env::var_os(CONFIG_ENV).map(PathBuf::from));
    let mut config = match path {
        Some(path) => ExperimentConfig::load(&path)?,
        None => ExperimentConfig::default(),
    };
    let p = &mut config.params;
    if let Some(v) = physics.zeta {
        p.zeta = v;
    }
    if let Some(v) = physics.pt_dbm {
        p.pt_dbm = v;
    }
    if let Some(v) = physics.noise_dbm {
        p.noise_dbm = v;
    }
    if let Some(v) = physics.field_len {
        p.field_len_m = v;
    }
    Ok(config)
}

fn apply_run(config: &mut ExperimentConfig, run: &RunArgs) -> Result<()> {
    if let Some(grid) = &run.beta_grid {
        config.beta_grid = parse_list("beta-grid", grid)?;
    }
    if let Some(trials) = run.trials {
        config.trials = trials;
    }
    if let Some(seed) = run.seed {
        config.master_seed = seed;
    }
    if let Some(schemes) = &run.scheme {
        config.set("schemes", schemes)?;
    }
    if let Some(output) = &run.output {
        config.output_path = Some(output.clone());
    }
    if let Some(format) = &run.format {
        config.output_format = format.parse::<OutputFormat>()?;
    }
    if run.allow_large_n {
        config.allow_large_n = true;
    }
    Ok(())
}

fn io_err(e: std::io::Error) -> Error {
    Error::io("<stdout>", e)
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<()> {
    match command {
        Command::Count {
            users,
            allow_large_n,
        } => {
            let limit = if allow_large_n {
                SizeLimit::Override
            } else {
                SizeLimit::Capped
            };
            let c = count_orders(users, limit)?;
            writeln!(
                out,
                "total={} secure={} favourable={}",
                c.total, c.secure, c.favourable
            )
            .map_err(io_err)?;
            writeln!(
                out,
                "other={} none_last={}",
                c.secure_other, c.secure_none_last
            )
            .map_err(io_err)?;
        }
        Command::FilterSecure {
            users,
            allow_large_n,
        } => {
            let limit = if allow_large_n {
                SizeLimit::Override
            } else {
                SizeLimit::Capped
            };
            for order in enumerate_orders(users, limit)?.filter(is_secure) {
                writeln!(out, "{}", order_id(&order)?).map_err(io_err)?;
            }
        }
        Command::Eval {
            users,
            beta,
            seed,
            order_id: id,
            physics,
        } => {
            let mut config = base_config(&physics)?;
            if let Some(users) = users {
                config.params.n_users = users;
            }
            if let Some(seed) = seed {
                config.master_seed = seed;
            }
            let params = &config.params;
            params.validate()?;
            let order = match id {
                Some(id) => order_from_id(params.n_users, OrderId(id))?,
                None => policy_order(params.n_users, beta)?,
            };
            // Same draw as trial 0 of a sweep with this seed.
            let channels = sample_channels(params, trial_seed(config.master_seed, 0))?;
            let alpha = power_allocation(&channels, beta)?;
            let eval = secrecy_rates(&order, &channels, &alpha, params)?;
            let fmt = crate::experiments::format_number;
            if let Ok(id) = order_id(&order) {
                writeln!(out, "order_id={id}").map_err(io_err)?;
            }
            writeln!(out, "user,gain,alpha,secrecy_rate,eavesdropper").map_err(io_err)?;
            for n in 0..params.n_users {
                let eaves = eval.eavesdropper_index[n]
                    .map(|m| (m + 1).to_string())
                    .unwrap_or_default();
                writeln!(
                    out,
                    "{},{},{},{},{}",
                    n + 1,
                    fmt(channels.gains()[n]),
                    fmt(alpha.alphas()[n]),
                    fmt(eval.per_user_rates[n]),
                    eaves
                )
                .map_err(io_err)?;
            }
            writeln!(
                out,
                "min={} feasible={}",
                fmt(eval.min_rate),
                eval.is_feasible()
            )
            .map_err(io_err)?;
        }
        Command::Policy { users, beta } => {
            let order = policy_order(users, beta)?;
            writeln!(out, "{order}").map_err(io_err)?;
        }
        Command::Sweep {
            users,
            run,
            physics,
        } => {
            let mut config = base_config(&physics)?;
            if let Some(users) = users {
                config.params.n_users = users;
            }
            apply_run(&mut config, &run)?;
            let records = run_experiment(&config)?;
            match &config.output_path {
                Some(path) => {
                    export(&records, path, config.output_format)?;
                    writeln!(out, "wrote {} records to {}", records.len(), path.display())
                        .map_err(io_err)?;
                }
                None => match config.output_format {
                    OutputFormat::Csv => write_csv(&records, &mut *out).map_err(io_err)?,
                    OutputFormat::Json => crate::experiments::write_json(&records, &mut *out)?,
                },
            }
        }
        Command::Simulate {
            users,
            run,
            physics,
        } => {
            let mut config = base_config(&physics)?;
            apply_run(&mut config, &run)?;
            if run.scheme.is_some() {
                return Err(Error::Config("simulate always compares the policy orders with the benchmark; --scheme is not used".into()));
            }
            let counts: Vec<usize> = parse_list("users", &users)?;
            let rows = gain_vs_users(&config, &counts)?;
            match &config.output_path {
                Some(path) => {
                    export_gain(&rows, path, config.output_format)?;
                    writeln!(out, "wrote {} rows to {}", rows.len(), path.display())
                        .map_err(io_err)?;
                }
                None => write_gain_csv(&rows, &mut *out).map_err(io_err)?,
            }
        }
    }
    Ok(())
}

/// Runs one invocation, writing results to `out` and diagnostics to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(
                e.kind(),
                ErrorKind::DisplayHelp
                    | ErrorKind::DisplayVersion
                    | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand
            ) {
                let _ = write!(out, "{e}");
                return 0;
            }
            let text = e.to_string();
            let line = text
                .lines()
                .find(|l| !l.trim().is_empty())
                .unwrap_or("invalid arguments");
            let _ = writeln!(err, "{line}");
            return 1;
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if e.is_runtime() {
                2
            } else {
                1
            }
        }
    }
}
