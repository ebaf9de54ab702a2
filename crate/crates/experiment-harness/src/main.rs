use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use experiment_harness::config::ExperimentConfig;
use experiment_harness::experiments::{
    analyze, estimate_temperatures, run_decay_experiment, run_ft_verify, run_reverse_sweep, run_spectrum_report,
};
use experiment_harness::output::{write_spectrum, write_table, Format};
use experiment_harness::samples::{read_sample_file, write_sample_file};
use experiment_harness::{HarnessError, Result};
use thermo_analysis::MomentConvention;

#[derive(Parser, Debug)]
#[command(name = "annealtherm", version, about = "Thermodynamics of reverse-annealed open Ising chains")]
struct Cli {
    /// TOML experiment configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the preparation seed (and the first model seed of ft-verify).
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Energy relaxation under a constant schedule.
    Decay,
    /// Reverse anneals over a sweep, with bounds and modes per point.
    ReverseSweep,
    /// Spectrum of H(s) on a uniform grid, with the in-sector gap.
    Spectrum,
    /// Bounds report for a sample file.
    Analyze {
        #[arg(long)]
        samples: Option<PathBuf>,
        #[arg(long)]
        beta1: Option<f64>,
        #[arg(long)]
        beta2: Option<f64>,
        #[arg(long, value_enum)]
        convention: Option<ConventionArg>,
        /// Chain length for per-spin values when the file has no bits.
        #[arg(long)]
        chain_length: Option<usize>,
    },
    /// Pseudo-likelihood temperature of the final configurations.
    EstimateBeta {
        #[arg(long)]
        samples: Option<PathBuf>,
    },
    /// Exact fluctuation-theorem checks on random composites.
    FtVerify,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum ConventionArg {
    SecondMoment,
    Variance,
}

impl From<ConventionArg> for MomentConvention {
    fn from(c: ConventionArg) -> Self {
        match c {
            ConventionArg::SecondMoment => MomentConvention::SecondMoment,
            ConventionArg::Variance => MomentConvention::Variance,
        }
    }
}

fn samples_path(arg: Option<PathBuf>, cfg: &ExperimentConfig, base: &Path) -> Result<PathBuf> {
    arg.or_else(|| cfg.input.samples.as_ref().map(|p| base.join(p)))
        .ok_or_else(|| HarnessError::Config("no sample file: pass --samples or set input.samples".into()))
}

fn run(cli: Cli) -> Result<()> {
    let (mut cfg, base) = match &cli.config {
        Some(path) => {
            let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
            (ExperimentConfig::load(path)?, base)
        }
        None => (ExperimentConfig::default(), PathBuf::new()),
    };
    if let Some(seed) = cli.seed {
        cfg.preparation.seed = seed;
    }
    std::fs::create_dir_all(&cli.out_dir)
        .map_err(|e| HarnessError::Io(format!("{}: {e}", cli.out_dir.display())))?;
    let out = cli.out_dir.as_path();
    let fmt = cli.format;

    match cli.command {
        Command::Decay => {
            let rows = run_decay_experiment(&cfg, &base)?;
            let path = write_table(out, "decay", fmt, &rows)?;
            println!("wrote {} ({} times)", path.display(), rows.len());
        }
        Command::ReverseSweep => {
            let sweep = run_reverse_sweep(&cfg, &base)?;
            let rows = sweep.rows();
            let path = write_table(out, "reverse_sweep", fmt, &rows)?;
            let samples = out.join("samples.csv");
            write_sample_file(&samples, &sweep.sample_records())?;
            println!("wrote {} ({} points) and {}", path.display(), rows.len(), samples.display());
        }
        Command::Spectrum => {
            let rows = run_spectrum_report(&cfg, &base)?;
            let path = write_spectrum(out, fmt, &rows)?;
            if let Some(min) = rows.iter().min_by(|a, b| a.gap.total_cmp(&b.gap)) {
                println!("wrote {}; minimal gap {} at s = {}", path.display(), min.gap, min.s);
            }
        }
        Command::Analyze { samples, beta1, beta2, convention, chain_length } => {
            let path = samples_path(samples, &cfg, &base)?;
            if let Some(c) = convention {
                cfg.analysis.convention = c.into();
            }
            let (b1, b2) = cfg.analysis_betas();
            let records = read_sample_file(&path)?;
            let rows = analyze(records, chain_length, beta1.unwrap_or(b1), beta2.unwrap_or(b2), &cfg)?;
            let out_path = write_table(out, "analysis", fmt, &rows)?;
            for r in &rows {
                println!("s_bar {}: sigma_lower {} mode {}", r.s_bar, r.report.sigma_lower, r.report.mode);
            }
            println!("wrote {}", out_path.display());
        }
        Command::EstimateBeta { samples } => {
            let path = samples_path(samples, &cfg, &base)?;
            let est = estimate_temperatures(read_sample_file(&path)?, &cfg, &base)?;
            let p = write_table(out, "beta_estimate", fmt, &est.rows)?;
            println!("wrote {}", p.display());
            if let Some(pl) = &est.plateau {
                write_table(out, "beta_plateau", fmt, std::slice::from_ref(pl))?;
                println!("plateau beta over s_bar <= {}: {}", pl.s_cut, pl.beta_plateau);
            }
            if !est.curve.is_empty() {
                write_table(out, "likelihood_curve", fmt, &est.curve)?;
            }
        }
        Command::FtVerify => {
            let rows = run_ft_verify(&cfg, cli.seed.unwrap_or(0))?;
            let path = write_table(out, "ft_verify", fmt, &rows)?;
            let worst = rows.iter().map(|r| r.max_violation).fold(0.0, f64::max);
            let failed = rows.iter().filter(|r| !r.passed).count();
            println!("wrote {}; {} models, max violation {worst:e}, {failed} failed", path.display(), rows.len());
            if failed > 0 {
                return Err(HarnessError::Numerical(format!("{failed} models violate the checked relations")));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("annealtherm: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
