use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nonlocal_cli::config::parse_criteria;
use nonlocal_cli::limits::run_limits;
use nonlocal_cli::plot::emit_plot_script;
use nonlocal_cli::profiles::run_profiles;
use nonlocal_cli::sweep::{run_sweep, SweepPath};
use nonlocal_cli::verify::{run_verify, VerifyOptions};
use nonlocal_cli::{load_config, num, write_artifact, CliError, ExperimentConfig, Problem, Result, CSV_MAGIC};
use nonlocal_core::presets::Preset;
use nonlocal_core::spectral::principal_spectrum_point;
use nonlocal_core::operators::BlockOperator;
use nonlocal_core::DispersalRates;

#[derive(Parser)]
#[command(name = "nonlocal-spectra", version, about = "Principal spectra of nonlocal two-stage dispersal models")]
struct Cli {
    /// Experiment configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Built-in coefficients: CC1, CC2, HET, DISJOINT, HET-SIGNFLIP.
    #[arg(long, global = true)]
    preset: Option<String>,
    /// Output directory for CSV artifacts.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Principal eigenpair of the block operator at one dispersal pair.
    Spectrum {
        #[arg(long)]
        mu1: Option<f64>,
        #[arg(long)]
        mu2: Option<f64>,
    },
    /// Principal eigenvalue along a dispersal path against its limit.
    Sweep {
        #[arg(long)]
        path: Option<String>,
    },
    /// Dispersal-independent limit quantities.
    Limits,
    /// Steady state at the end of the sweep path against the limit profile.
    Profiles {
        #[arg(long)]
        path: Option<String>,
    },
    /// Run the acceptance criteria.
    Verify {
        /// `all` or a list such as `1,2,7`.
        #[arg(long)]
        criteria: Option<String>,
    },
    /// Write a gnuplot script for a sweep or profile CSV.
    Plot { csv: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn resolve(cli: &Cli, required: bool) -> Result<ExperimentConfig> {
    let preset = cli
        .preset
        .as_deref()
        .map(|s| s.parse::<Preset>().map_err(|e| CliError::config(e.to_string())))
        .transpose()?;
    let mut cfg = match (&cli.config, preset) {
        (Some(path), p) => {
            let cfg = load_config(path)?;
            match p {
                Some(p) => cfg.with_preset(p),
                None => cfg,
            }
        }
        (None, Some(p)) => ExperimentConfig::for_preset(p),
        (None, None) if required => {
            return Err(CliError::config("no problem selected: pass --config <path> or --preset <name>"))
        }
        (None, None) => ExperimentConfig::for_preset(Preset::Het),
    };
    if let Some(out) = &cli.out {
        cfg.run.out = out.clone();
    }
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(CliError::config("--jobs must be at least 1"));
        }
        cfg.run.jobs = jobs;
    }
    Ok(cfg)
}

fn path_override(cfg: &mut ExperimentConfig, path: &Option<String>) -> Result<()> {
    if let Some(p) = path {
        cfg.sweep.path = p.parse::<SweepPath>().map_err(CliError::config)?;
    }
    if cfg.sweep.path == SweepPath::Grid2d && cfg.sweep.mu2_values.is_empty() {
        return Err(CliError::config("grid2d sweep needs [sweep] mu2_values"));
    }
    Ok(())
}

fn run(cli: Cli) -> Result<u8> {
    match &cli.command {
        Command::Spectrum { mu1, mu2 } => {
            let mut cfg = resolve(&cli, true)?;
            if let Some(m) = mu1 {
                cfg.run.mu.0 = *m;
            }
            if let Some(m) = mu2 {
                cfg.run.mu.1 = *m;
            }
            spectrum(&cfg)
        }
        Command::Sweep { path } => {
            let mut cfg = resolve(&cli, true)?;
            path_override(&mut cfg, path)?;
            let p = Problem::new(&cfg)?;
            let report = run_sweep(&p, &cfg.sweep, cfg.run.jobs)?;
            let target = cfg.run.out.join(format!("sweep-{}.csv", cfg.sweep.path));
            write_artifact(&target, &report.csv())?;
            print!("{}", report.summary());
            println!("wrote {}", target.display());
            Ok(if report.failures() > 0 { 3 } else { 0 })
        }
        Command::Limits => {
            let cfg = resolve(&cli, true)?;
            let p = Problem::new(&cfg)?;
            let report = run_limits(&p, &cfg.run.fixed_mu);
            let target = cfg.run.out.join("limits.csv");
            write_artifact(&target, &report.csv())?;
            print!("{}", report.text());
            println!("wrote {}", target.display());
            Ok(0)
        }
        Command::Profiles { path } => {
            let mut cfg = resolve(&cli, true)?;
            path_override(&mut cfg, path)?;
            let p = Problem::new(&cfg)?;
            let report = run_profiles(&p, &cfg.sweep, &cfg.run)?;
            let target = cfg.run.out.join(format!("profile-{}.csv", report.kind));
            write_artifact(&target, &report.csv())?;
            print!("{}", report.summary());
            println!("wrote {}", target.display());
            Ok(if report.converged { 0 } else { 3 })
        }
        Command::Verify { criteria } => {
            let cfg = resolve(&cli, false)?;
            let selected = match criteria {
                Some(c) => parse_criteria(c).map_err(CliError::config)?,
                None => cfg.verify.criteria.clone(),
            };
            let opts = VerifyOptions {
                n: cfg.n,
                jobs: cfg.run.jobs,
                out: Some(cfg.run.out.clone()),
                tolerances: cfg.verify.tolerances.clone(),
            };
            let report = run_verify(&opts, &selected)?;
            print!("{}", report.text());
            Ok(if report.all_passed() { 0 } else { 1 })
        }
        Command::Plot { csv } => {
            let target = emit_plot_script(csv, cli.out.as_deref())?;
            println!("wrote {}", target.display());
            Ok(0)
        }
    }
}

fn spectrum(cfg: &ExperimentConfig) -> Result<u8> {
    let p = Problem::new(cfg)?;
    let (mu1, mu2) = cfg.run.mu;
    let b = BlockOperator::assemble(DispersalRates::new(mu1, mu2)?, &p.kernel, &p.coefficients)?;
    let r = principal_spectrum_point(&b)?;
    let n = p.grid.len();
    let mut csv = format!(
        "{CSV_MAGIC}\n# kind = spectrum\n# problem = {}\n# mu1 = {}\n# mu2 = {}\n# lambda_p = {}\n# lambda_low = {}\n# lambda_high = {}\n# residual = {}\n# iterations = {}\nx,phi1,phi2\n",
        p.label,
        num(mu1),
        num(mu2),
        num(r.lambda_p),
        num(r.lambda_low),
        num(r.lambda_high),
        num(r.residual),
        r.iterations
    );
    for (i, x) in p.grid.nodes().iter().enumerate() {
        csv += &format!("{},{},{}\n", num(*x), num(r.eigvec[i]), num(r.eigvec[n + i]));
    }
    let target = cfg.run.out.join("spectrum.csv");
    write_artifact(&target, &csv)?;
    println!(
        "{} at mu = ({}, {}): lambda_p = {:+.12} in [{:+.12}, {:+.12}], residual {:.2e}, {} iterations",
        p.label,
        num(mu1),
        num(mu2),
        r.lambda_p,
        r.lambda_low,
        r.lambda_high,
        r.residual,
        r.iterations
    );
    println!("wrote {}", target.display());
    Ok(0)
}
