use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use crow::config::{Config, Overrides, Preset, SweepAxis};
use crow::error::Error;
use crow::model::Backend;
use crow::runner::{execute_run, execute_sweep, resolve_out_dir, RunSpec};

/// Simulator for a two-level giant atom coupled to a dynamically modulated
/// coupled-resonator waveguide.
#[derive(Parser)]
#[command(name = "crow", version, about)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Execute one experiment and write its trajectory, metrics, and
    /// manifest files.
    Run(RunArgs),
    /// Run one experiment per value of a swept parameter and aggregate a
    /// summary table.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML configuration file (mutually exclusive with --preset).
    config: Option<PathBuf>,
    /// Experiment preset: fig2a, fig2b, fig3.
    #[arg(long)]
    preset: Option<String>,
    /// Backend: real, kspace, kspace_exact, reduced, boundstate.
    #[arg(long)]
    backend: Option<String>,
    /// Override the modulation frequency (units of eta).
    #[arg(long)]
    omega: Option<f64>,
    /// Override the atom-resonator coupling (units of eta).
    #[arg(long)]
    kappa: Option<f64>,
    /// Override the integrator step (units of 1/eta).
    #[arg(long)]
    dt: Option<f64>,
    /// Override the final time (units of 1/eta).
    #[arg(long = "t-end")]
    t_end: Option<f64>,
    /// Output directory (default: $CROW_OUT_DIR or ./crow-out, plus a
    /// run-specific name).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Swept parameter: omega_mod, kappa, tau.
    #[arg(long = "sweep-axis")]
    sweep_axis: String,
    /// Comma-separated list of values.
    #[arg(long = "sweep-values", value_delimiter = ',', required = true)]
    sweep_values: Vec<f64>,
}

fn resolve_spec(args: &RunArgs) -> Result<RunSpec, Error> {
    let preset = args
        .preset
        .as_deref()
        .map(str::parse::<Preset>)
        .transpose()?;
    if preset.is_some() && args.config.is_some() {
        return Err(Error::Config(
            "give either a config file or --preset, not both".into(),
        ));
    }
    let mut config = match (&args.config, preset) {
        (Some(path), _) => Config::from_path(path)?,
        (None, Some(p)) => p.config(),
        (None, None) => Config::default_base(),
    };
    Overrides {
        omega: args.omega,
        kappa: args.kappa,
        dt: args.dt,
        t_end: args.t_end,
    }
    .apply(&mut config);

    let backend = match &args.backend {
        Some(name) => name.parse::<Backend>()?,
        None => preset
            .map(|p| p.default_backend())
            .unwrap_or(Backend::Real),
    };

    let dir_name = match preset {
        Some(p) => format!("{}-{}", p.name(), backend.name()),
        None => {
            let digest = crow::output::sha256_hex(config.to_toml().as_bytes());
            format!("{}-{}", backend.name(), &digest[..8])
        }
    };
    Ok(RunSpec {
        config,
        backend,
        preset,
        out_dir: resolve_out_dir(args.out.clone(), &dir_name),
    })
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Divergence { .. } => 3,
        Error::Io(_) => 4,
        _ => 2,
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.cmd {
        Cmd::Run(args) => {
            let spec = resolve_spec(&args)?;
            let outcome = execute_run(&spec)?;
            println!("wrote {}", outcome.manifest.output_dir);
            for (name, value) in &outcome.metrics {
                println!("  {name} = {value:.6e}");
            }
            Ok(())
        }
        Cmd::Sweep(args) => {
            let axis = args.sweep_axis.parse::<SweepAxis>()?;
            let base = resolve_spec(&args.run)?;
            let outcome = execute_sweep(&base, axis, &args.sweep_values)?;
            println!("wrote {}", base.out_dir.display());
            for row in &outcome.rows {
                println!(
                    "  {} = {}: retention {:.3e}, late rate {:.3e}, localization share {:.3e} [{}]",
                    axis.name(),
                    row.value,
                    row.retention_time,
                    row.late_decay_rate,
                    row.localization_share,
                    row.status
                );
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
