use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use dressed_optics::response::switching_time;
use dressed_optics::sweeps::{
    self, compare_oracle, run_figure, run_sweep, Figure, Metadata, SweepConfig,
};
use dressed_optics::Error;

#[derive(Parser)]
#[command(
    name = "dressed-optics",
    version,
    about = "Steady-state probe response of two driven atomic ensembles"
)]
struct Cli {
    /// Cap on worker threads.
    #[arg(long, global = true, value_name = "K")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the sweep described by a JSON config and write CSV plus a JSON sidecar.
    Sweep {
        config: PathBuf,
        /// Output CSV (default: config name with a .csv extension in the working directory).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Reproduce a figure dataset (fig2a, fig2b, fig3a, fig3b, fig3c, fig3d).
    Figure {
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare the closed forms with the master-equation solver.
    Oracle { config: PathBuf },
    /// Collective switching time for the config's geometry and ensemble a.
    SwitchingTime { config: PathBuf },
}

#[derive(Serialize)]
struct SwitchingReport {
    n: u32,
    length_cm: f64,
    tau_s_seconds: f64,
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Usage(_) | Error::UnknownFigure(_) => 2,
        _ => 1,
    }
}

fn default_out(config: &Path) -> PathBuf {
    let stem = config
        .file_stem()
        .map(|s| s.to_os_string())
        .unwrap_or_else(|| "sweep".into());
    PathBuf::from(stem).with_extension("csv")
}

fn run(cli: Cli) -> Result<bool, Error> {
    match cli.command {
        Command::Sweep { config, out } => {
            let cfg = SweepConfig::load(&config)?;
            let meta = Metadata::new(&cfg, None, None, Vec::new());
            for w in &meta.secular_warnings {
                eprintln!("warning: {w}");
            }
            let result = run_sweep(&cfg)?;
            let out = out.unwrap_or_else(|| default_out(&config));
            sweeps::write_dataset(&out, &result.dataset, &meta)?;
            println!("{}", out.display());
            Ok(true)
        }
        Command::Figure { name, out } => {
            let fig: Figure = name.parse()?;
            let out = out.unwrap_or_else(|| PathBuf::from(format!("{fig}.csv")));
            for p in run_figure(fig, &out)? {
                println!("{}", p.display());
            }
            Ok(true)
        }
        Command::Oracle { config } => {
            let cfg = SweepConfig::load(&config)?;
            let report = compare_oracle(&cfg)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            for p in &report.inversion {
                eprintln!(
                    "{} Omega/gamma={} ensemble {}: analytic {:.6e} oracle {:.6e} rel error {:.3e}",
                    if p.pass { "PASS" } else { "FAIL" },
                    p.omega_over_gamma,
                    p.label,
                    p.analytic,
                    p.oracle,
                    p.rel_error
                );
            }
            if let Some(s) = &report.spectrum {
                eprintln!(
                    "{} spectrum at Omega/gamma={}: max rel error {:.3e} (tolerance {})",
                    if s.pass { "PASS" } else { "FAIL" },
                    s.omega_over_gamma,
                    s.max_rel_error,
                    s.tolerance
                );
            }
            eprintln!(
                "error trend with drive strength: {}",
                if report.monotone {
                    "decreasing"
                } else {
                    "not monotone"
                }
            );
            Ok(report.all_pass)
        }
        Command::SwitchingTime { config } => {
            let cfg = SweepConfig::load(&config)?;
            let geom = cfg
                .geometry
                .ok_or_else(|| Error::Config("geometry: required for the switching time".into()))?;
            let n = cfg.ensembles[0].n;
            let report = SwitchingReport {
                n,
                length_cm: geom.length_cm(),
                tau_s_seconds: switching_time(&geom, n)?,
            };
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(k) = cli.threads {
        if k == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
