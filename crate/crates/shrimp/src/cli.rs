//! The `shrimp` command line.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or configuration error,
//! 3 numerical failure. Diagnostics go to stderr.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use shrimp_core::inference::{simulate_data, summarize_chains, ParameterVector};

use crate::config::RunConfig;
use crate::data::{load_data, write_catch_csv, write_survey_csv};
use crate::error::{Error, Result};
use crate::fit::{build_posterior, fit, reference_point};
use crate::output::{read_posterior, write_posterior, write_summary_tables};
use crate::predict::{predict_at, predict_posterior, write_residuals};
use crate::truth::Truth;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

pub const CATCH_FILE: &str = "catch.csv";
pub const SURVEY_FILE: &str = "survey.csv";
pub const TRUTH_FILE: &str = "truth.json";
pub const CONFIG_FILE: &str = "config.json";
pub const RESIDUALS_FILE: &str = "residuals.csv";

#[derive(Debug, Parser)]
#[command(name = "shrimp", version, about = "Bayesian length-structured shrimp population model")]
pub struct Cli {
    /// Run configuration (JSON); defaults apply when omitted.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Random seed; overrides the config's chain seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Directory holding catch.csv and optionally survey.csv.
    #[arg(long, value_name = "DIR")]
    pub data: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub catch: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub survey: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate catch and survey data from known parameters.
    Simulate {
        /// Parameter file; unlisted parameters take their prior median.
        #[arg(long, value_name = "FILE")]
        truth: Option<PathBuf>,
        /// Write the expected observations without noise.
        #[arg(long)]
        noise_free: bool,
    },
    /// Sample the posterior.
    Fit {
        #[command(flatten)]
        data: DataArgs,
        /// Number of chains, run concurrently.
        #[arg(long)]
        chains: Option<usize>,
        #[arg(long)]
        iterations: Option<u64>,
        #[arg(long)]
        burn_in: Option<u64>,
        #[arg(long)]
        thin: Option<u64>,
        #[arg(long)]
        tuning: Option<u64>,
        /// Print the log-posterior at the prior medians and exit.
        #[arg(long)]
        dry_run: bool,
    },
    /// Tabulate a posterior directory.
    Summarize {
        /// Posterior directory; defaults to --out.
        #[arg(long, value_name = "DIR")]
        posterior: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        quantiles: Option<Vec<f64>>,
    },
    /// Residuals of the data against a posterior or a known truth.
    Predict {
        #[arg(long, value_name = "DIR", conflicts_with = "truth", required_unless_present = "truth")]
        posterior: Option<PathBuf>,
        #[arg(long, value_name = "FILE")]
        truth: Option<PathBuf>,
        #[command(flatten)]
        data: DataArgs,
    },
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Run(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Run(e)
    }
}

impl From<shrimp_core::Error> for Failure {
    fn from(e: shrimp_core::Error) -> Self {
        Failure::Run(e.into())
    }
}

/// Parse `args` (including the program name), run, and return the exit
/// code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e}");
            if e.is_numerical() {
                EXIT_NUMERICAL
            } else {
                EXIT_DATA
            }
        }
    }
}

fn execute(cli: &Cli) -> std::result::Result<(), Failure> {
    match &cli.command {
        Command::Simulate { truth, noise_free } => simulate(cli, truth.as_deref(), *noise_free),
        Command::Fit {
            data,
            chains,
            iterations,
            burn_in,
            thin,
            tuning,
            dry_run,
        } => {
            let mut config = base_config(cli)?;
            apply_data_args(&mut config, data)?;
            if let Some(n) = chains {
                config.chains = *n;
            }
            let c = &mut config.chain;
            c.total_iterations = iterations.unwrap_or(c.total_iterations);
            c.burn_in = burn_in.unwrap_or(c.burn_in);
            c.thin = thin.unwrap_or(c.thin);
            c.tuning_iterations = tuning.unwrap_or(c.tuning_iterations);
            config.validate()?;
            let data = load_data(&config)?;
            if *dry_run {
                let posterior = build_posterior(&config, &data)?;
                let lp = posterior.log_posterior(&reference_point(&posterior))?;
                if !lp.is_finite() {
                    return Err(Error::Model(shrimp_core::Error::NumericalFailure(format!(
                        "log-posterior at the prior medians is {lp}"
                    )))
                    .into());
                }
                println!("log_posterior {lp}");
                return Ok(());
            }
            let out = require_out(cli)?;
            let seed = cli.seed.unwrap_or(config.chain.seed);
            let result = fit(&config, &data, seed)?;
            let summary = summarize_chains(&result.samples, &config.quantiles)?;
            write_posterior(out, &result, &summary)?;
            log::info!("wrote {} draws to {}", summary.draws, out.display());
            Ok(())
        }
        Command::Summarize { posterior, quantiles } => {
            let dir = posterior
                .as_deref()
                .or(cli.out.as_deref())
                .ok_or_else(|| Failure::Usage("summarize needs --posterior or --out".into()))?;
            let result = read_posterior(dir)?;
            let levels = quantiles.clone().unwrap_or_else(|| result.config.quantiles.clone());
            if levels.iter().any(|q| !(0.0..=1.0).contains(q)) {
                return Err(Failure::Usage("quantiles must lie in [0, 1]".into()));
            }
            let summary = summarize_chains(&result.samples, &levels)?;
            let out = cli.out.as_deref().unwrap_or(dir);
            write_summary_tables(out, &summary)?;
            print_summary(&summary);
            Ok(())
        }
        Command::Predict { posterior, truth, data } => {
            let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("."));
            let mut rows_config = None;
            let mut draws: Vec<ParameterVector> = Vec::new();
            if let Some(dir) = posterior {
                let result = read_posterior(dir)?;
                draws = result.samples.into_iter().flat_map(|s| s.draws).collect();
                rows_config = Some(result.config);
            }
            let mut config = match (&cli.config, rows_config) {
                (Some(_), _) | (None, None) => base_config(cli)?,
                (None, Some(c)) => c,
            };
            apply_data_args(&mut config, data)?;
            config.validate()?;
            let data = load_data(&config)?;
            if data.catches.is_empty() && data.surveys.is_empty() {
                return Err(Error::Config("no observations to predict; give --data, --catch or --survey".into()).into());
            }
            let posterior_model = build_posterior(&config, &data)?;
            let rows = match truth {
                Some(path) => {
                    let theta = Truth::load(path)?.to_vector(
                        posterior_model.layout(),
                        &config.prior_set(),
                        config.years(),
                    )?;
                    predict_at(&posterior_model, &theta)?
                }
                None => {
                    let mut rng = ChaCha8Rng::seed_from_u64(cli.seed.unwrap_or(config.chain.seed));
                    predict_posterior(&posterior_model, &draws, (0.05, 0.95), &mut rng)?
                }
            };
            fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
            let path = out.join(RESIDUALS_FILE);
            write_residuals(&path, &rows)?;
            let max = rows.iter().map(|r| r.residual().abs()).fold(0.0, f64::max);
            log::info!("{} residuals written to {} (max |residual| {max})", rows.len(), path.display());
            Ok(())
        }
    }
}

fn base_config(cli: &Cli) -> Result<RunConfig> {
    match &cli.config {
        Some(path) => RunConfig::load(path),
        None => Ok(RunConfig::default()),
    }
}

fn require_out(cli: &Cli) -> std::result::Result<&Path, Failure> {
    cli.out
        .as_deref()
        .ok_or_else(|| Failure::Usage("this command needs --out DIR".into()))
}

fn apply_data_args(config: &mut RunConfig, args: &DataArgs) -> Result<()> {
    if let Some(dir) = &args.data {
        if !dir.is_dir() {
            return Err(Error::Config(format!("data directory {} does not exist", dir.display())));
        }
        config.data.catch = Some(dir.join(CATCH_FILE));
        let survey = dir.join(SURVEY_FILE);
        config.data.survey = survey.exists().then_some(survey);
    }
    if let Some(p) = &args.catch {
        config.data.catch = Some(p.clone());
    }
    if let Some(p) = &args.survey {
        config.data.survey = Some(p.clone());
    }
    Ok(())
}

fn simulate(cli: &Cli, truth: Option<&Path>, noise_free: bool) -> std::result::Result<(), Failure> {
    let out = require_out(cli)?;
    let mut config = base_config(cli)?;
    if noise_free {
        config.observation_noise = false;
    }
    let model = config.model_config()?;
    let layout = shrimp_core::inference::ParameterLayout::new(&model);
    let mut truth = match truth {
        Some(p) => Truth::load(p)?,
        None => Truth::default(),
    };
    let theta = truth.to_vector(&layout, &config.prior_set(), config.years())?;
    let seed = cli.seed.unwrap_or(config.chain.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sim = simulate_data(
        &model,
        &theta,
        &config.schedule(),
        config.mode,
        config.observation_noise,
        &mut rng,
    )?;
    if sim.truncated > 0 {
        log::warn!("{} simulated observation(s) were negative and set to zero", sim.truncated);
    }

    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    write_catch_csv(&out.join(CATCH_FILE), &sim.data.catches)?;
    write_survey_csv(&out.join(SURVEY_FILE), &sim.data.surveys)?;
    truth = Truth {
        series: Some(sim.series),
        seed: Some(seed),
        truncated_observations: Some(sim.truncated),
        ..Truth::from_vector(&layout, &theta)
    };
    truth.save(&out.join(TRUTH_FILE))?;
    config.data.catch = Some(CATCH_FILE.into());
    config.data.survey = Some(SURVEY_FILE.into());
    config.chain.seed = seed;
    config.save(&out.join(CONFIG_FILE))?;
    log::info!(
        "simulated {} catch and {} survey records into {}",
        sim.data.catches.len(),
        sim.data.surveys.len(),
        out.display()
    );
    Ok(())
}

fn print_summary(summary: &shrimp_core::inference::Summary) {
    let qs: Vec<String> = summary.quantile_levels.iter().map(|q| format!("q{q}")).collect();
    println!(
        "{} draws from {} chain(s)\n{:<18} {:>12} {:>12} {} {:>9}",
        summary.draws,
        summary.chains,
        "parameter",
        "mean",
        "sd",
        qs.iter().map(|q| format!("{q:>12}")).collect::<Vec<_>>().join(" "),
        "ess"
    );
    for p in &summary.parameters {
        let q: Vec<String> = p.quantiles.iter().map(|v| format!("{v:>12.5}")).collect();
        println!("{:<18} {:>12.5} {:>12.5} {} {:>9.1}", p.name, p.mean, p.sd, q.join(" "), p.ess);
    }
}
