//! `qbattery`: charging runs, sweeps, spectra and perturbation exports.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use qbattery::experiments::{self, Metadata, RunConfig};
use qbattery::perturbation::write_modes_csv;
use qbattery::{Error, Result};

#[derive(Parser)]
#[command(name = "qbattery", version, about = "Exact-diagonalization simulator of an organic quantum battery")]
struct Cli {
    /// TOML configuration file (defaults apply to missing keys).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads for sweeps (default: logical cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Add N = 16 and 18 to the scaling sweep.
    #[arg(long, global = true)]
    extended: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Single charging run: trajectory.csv and charge.json.
    Charge,
    /// Maxima versus A/omega: sweep_a.csv and sweep_a.json.
    SweepA,
    /// Maxima versus the coupling value: sweep_g.csv and sweep_g.json.
    SweepG,
    /// Maxima versus N with power-law fits: scaling.csv and scaling.json.
    Scaling,
    /// Lowest levels of the molecular Hamiltonian versus A/omega: spectrum.csv.
    Spectrum,
    /// Two-exciton mode energies and amplitudes versus A/omega: perturbation.csv.
    Perturbation,
    /// Compare the subspace path with the brute-force oracle (small N).
    #[command(hide = true)]
    OracleCheck,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical_guard() { 2 } else { 1 })
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = match &cli.config {
        Some(path) => RunConfig::from_path(path)?,
        None => RunConfig::default(),
    }
    .with_extended(cli.extended);
    fs::create_dir_all(&cli.out)?;
    let out = cli.out.as_path();
    let meta = Metadata::new(&cfg);
    match cli.command {
        Command::Charge => {
            let run = experiments::run_charge(&cfg)?;
            run.trajectory.write_csv(create(out, "trajectory.csv")?)?;
            emit(out, "charge.json", &json!({ "metadata": meta, "result": run }))
        }
        Command::SweepA => {
            let sweep = experiments::sweep_a(&cfg, &experiments::make_pool(cli.threads)?)?;
            experiments::write_sweep_csv(create(out, "sweep_a.csv")?, cfg.coupling.mode_name(), &sweep.points)?;
            emit(out, "sweep_a.json", &json!({ "metadata": meta, "a_max_e": sweep.a_max_e, "a_max_p": sweep.a_max_p }))
        }
        Command::SweepG => {
            let points = experiments::sweep_g(&cfg, &experiments::make_pool(cli.threads)?)?;
            experiments::write_sweep_csv(create(out, "sweep_g.csv")?, cfg.coupling.mode_name(), &points)?;
            let rejected = points.iter().filter(|p| p.rejected.is_some()).count();
            emit(out, "sweep_g.json", &json!({ "metadata": meta, "points": points.len(), "rejected": rejected }))
        }
        Command::Scaling => {
            let res = experiments::sweep_scaling(&cfg, &experiments::make_pool(cli.threads)?)?;
            experiments::write_sweep_csv(create(out, "scaling.csv")?, cfg.coupling.mode_name(), &res.points)?;
            emit(
                out,
                "scaling.json",
                &json!({
                    "metadata": meta,
                    "energy_fit": res.energy_fit,
                    "power_fit": res.power_fit,
                    "fit_error": res.fit_error,
                }),
            )
        }
        Command::Spectrum => {
            let rows = experiments::spectrum_scan(&cfg)?;
            experiments::write_spectrum_csv(create(out, "spectrum.csv")?, &rows)?;
            println!("wrote {} levels to {}", rows.iter().map(|r| r.1.levels.len()).sum::<usize>(), out.display());
            Ok(())
        }
        Command::Perturbation => {
            let rows = experiments::export_perturbation(&cfg)?;
            write_modes_csv(create(out, "perturbation.csv")?, &rows)?;
            println!("wrote {} interaction values to {}", rows.len(), out.display());
            Ok(())
        }
        Command::OracleCheck => {
            let report = experiments::oracle_check(&cfg)?;
            emit(out, "oracle_check.json", &json!({ "metadata": meta, "report": report }))
        }
    }
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

/// Write pretty JSON to `dir/name` and echo it to stdout.
fn emit(dir: &Path, name: &str, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(Error::from)?;
    fs::write(dir.join(name), format!("{text}\n"))?;
    println!("{text}");
    Ok(())
}
