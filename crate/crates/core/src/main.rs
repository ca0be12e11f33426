use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use vlr::cli::{convergence_study, init_threads, parse_config, run, spectrum_command, CliError};
use vlr::grid::Axis;

#[derive(Parser)]
#[command(name = "vlr", version, about = "Semi-Lagrangian Vlasov solver with a rotating velocity grid")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration to its final time.
    Run { config: PathBuf },
    /// Time-step convergence against a fine reference run.
    Converge {
        config: PathBuf,
        /// Comma-separated step sizes.
        #[arg(long = "h", value_delimiter = ',', required = true)]
        h: Vec<f64>,
        #[arg(long = "href")]
        href: f64,
    },
    /// Dispersion spectrum of the density snapshots in a run directory.
    Spectrum {
        series_dir: PathBuf,
        #[arg(long, default_value = "y")]
        axis: String,
        /// Skip the temporal Hann window.
        #[arg(long)]
        no_window: bool,
    },
}

fn execute(args: Args) -> Result<(), CliError> {
    init_threads()?;
    match args.command {
        Command::Run { config } => {
            let cfg = parse_config(&config)?;
            let summary = run(&cfg)?;
            if let Some(last) = summary.rows.last() {
                println!("t = {} mass = {} field_energy = {}", last.t, last.mass, last.field_energy);
                if let Some(e) = last.l2_error {
                    println!("l2_error = {e:e}");
                }
            }
            println!("wrote {}", summary.directory.join("series.csv").display());
        }
        Command::Converge { config, h, href } => {
            let cfg = parse_config(&config)?;
            let report = convergence_study(&cfg, &h, href)?;
            for (h, e) in &report.samples {
                println!("h = {h} error = {e:e}");
            }
            match &report.fit {
                Ok(fit) => println!("order: two-point {:.3}, least-squares {:.3}", fit.two_point, fit.least_squares),
                Err(e) => eprintln!("warning: order undefined: {e}"),
            }
        }
        Command::Spectrum { series_dir, axis, no_window } => {
            let axis = Axis::from_label(&axis)
                .ok_or_else(|| CliError::Input(format!("unknown axis `{axis}`, expected x, y or z")))?;
            let spectrum = spectrum_command(&series_dir, axis, !no_window)?;
            println!(
                "{} x {} bins written to {}",
                spectrum.ks.len(),
                spectrum.omegas.len(),
                series_dir.join("spectrum.csv").display()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
