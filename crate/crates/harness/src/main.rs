use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use releff::campaign::run_campaign;
use releff::config::{BandwidthPolicy, CampaignConfig, EstimateOptions};
use releff::emit::{emit_table, records_csv, Format};
use releff::error::{HarnessError, Result};
use releff::estimate::{estimate_dataset, render_report, select_bandwidth};
use releff::io::{read_dataset_file, write_observations_file};
use releff::reference::{builtin_designs, oracle_report, render_oracle};
use releff_core::baselines::BaselineModel;
use releff_core::inference::{CvReport, PValueConvention};
use releff_core::seeding::child_seed;

#[derive(Parser)]
#[command(name = "releff", version, about = "Relative covariate effects under dependent censoring")]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Output {
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Write to this file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FileArgs {
    /// CSV with header t,delta,x,y (delta optional).
    data: PathBuf,
    /// TOML options file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Fixed bandwidth for both covariates instead of cross-validation.
    #[arg(long)]
    bandwidth: Option<f64>,
    /// Print the resolved options and exit.
    #[arg(long)]
    explain: bool,
    #[command(flatten)]
    output: Output,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte Carlo campaign.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the master seed of the configuration.
        #[arg(long)]
        seed: Option<u64>,
        /// Also write the per-run records as CSV.
        #[arg(long)]
        records: Option<PathBuf>,
        #[arg(long)]
        explain: bool,
        #[command(flatten)]
        output: Output,
    },
    /// Estimate eta and baseline ratios on a data file, with bootstrap tests.
    Estimate {
        #[command(flatten)]
        file: FileArgs,
        /// Baseline models to compare against.
        #[arg(long = "model", value_enum)]
        models: Vec<ModelArg>,
        #[arg(long)]
        replicates: Option<usize>,
        #[arg(long)]
        skip_tests: bool,
    },
    /// Bootstrap specification test of one or more baseline models.
    Test {
        #[command(flatten)]
        file: FileArgs,
        #[arg(long = "model", value_enum, required = true)]
        models: Vec<ModelArg>,
        #[arg(long)]
        replicates: Option<usize>,
        #[arg(long)]
        convention: Option<PValueConvention>,
    },
    /// Cross-validated bandwidth selection report.
    Cv {
        #[command(flatten)]
        file: FileArgs,
        #[arg(long)]
        folds: Option<usize>,
        /// Comma-separated candidate bandwidths.
        #[arg(long, value_delimiter = ',')]
        grid: Option<Vec<f64>>,
    },
    /// Population reference values for the built-in designs or a campaign's design.
    Oracle {
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        output: Output,
    },
    /// Write one simulated dataset as CSV.
    Generate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Sample size; defaults to the configured n.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum ModelArg {
    Cox,
    Aft,
    Po,
}

impl From<ModelArg> for BaselineModel {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Cox => BaselineModel::Cox,
            ModelArg::Aft => BaselineModel::Aft,
            ModelArg::Po => BaselineModel::Po,
        }
    }
}

fn write_output(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| HarnessError::io(path, e)),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| HarnessError::io("<stdout>", e)),
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| HarnessError::io(path, e))
}

fn file_options(args: &FileArgs) -> Result<EstimateOptions> {
    let mut opts = match &args.config {
        Some(p) => EstimateOptions::load(p)?,
        None => EstimateOptions::default(),
    };
    if let Some(s) = args.seed {
        opts.seed = s;
    }
    if let Some(h) = args.bandwidth {
        opts.bandwidth = BandwidthPolicy::Fixed { h, h_y: None };
    }
    Ok(opts)
}

fn cv_text(r: &CvReport) -> String {
    let mut out = format!("selected h = {} ({} folds)\n\n{:>8}{:>16}{:>11}\n", r.selected, r.folds, "h", "score", "undefined");
    for s in &r.scores {
        writeln!(out, "{:>8}{:>16.8}{:>11}", s.h, s.score, s.undefined).unwrap();
    }
    out
}

fn cv_csv(r: &CvReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["h", "score", "undefined", "empty_folds", "selected"])?;
    for s in &r.scores {
        w.write_record([
            s.h.to_string(),
            s.score.to_string(),
            s.undefined.to_string(),
            s.empty_folds.to_string(),
            (s.h == r.selected).to_string(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| HarnessError::Config(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn run(cli: Cli) -> Result<ExitCode> {
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| HarnessError::Config(e.to_string()))?;
    }
    match cli.command {
        Command::Simulate {
            config,
            seed,
            records,
            explain,
            output,
        } => {
            let mut cfg = CampaignConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if explain {
                write_output(&output.out, &cfg.explain()?)?;
                return Ok(ExitCode::SUCCESS);
            }
            let result = run_campaign(&cfg)?;
            eprintln!(
                "{} runs in {:.1} s, {} failed",
                result.records.len(),
                result.elapsed.as_secs_f64(),
                result.failed_runs
            );
            write_output(&output.out, &emit_table(&result, output.format)?)?;
            if let Some(path) = records {
                write_file(&path, &records_csv(&result)?)?;
            }
            if result.degraded {
                eprintln!("campaign degraded: more than 20% of runs failed");
                return Ok(ExitCode::from(3));
            }
        }
        Command::Estimate {
            file,
            models,
            replicates,
            skip_tests,
        } => {
            let mut opts = file_options(&file)?;
            if !models.is_empty() {
                opts.models = models.into_iter().map(Into::into).collect();
            }
            if let Some(b) = replicates {
                opts.replicates = b;
            }
            opts.skip_tests |= skip_tests;
            if file.explain {
                write_output(&file.output.out, &opts.explain()?)?;
                return Ok(ExitCode::SUCCESS);
            }
            let report = estimate_dataset(&read_dataset_file(&file.data)?, &opts)?;
            write_output(&file.output.out, &render_report(&report, file.output.format)?)?;
        }
        Command::Test {
            file,
            models,
            replicates,
            convention,
        } => {
            let mut opts = file_options(&file)?;
            opts.models = models.into_iter().map(Into::into).collect();
            opts.skip_tests = false;
            if let Some(b) = replicates {
                opts.replicates = b;
            }
            if let Some(c) = convention {
                opts.convention = c;
            }
            if file.explain {
                write_output(&file.output.out, &opts.explain()?)?;
                return Ok(ExitCode::SUCCESS);
            }
            let report = estimate_dataset(&read_dataset_file(&file.data)?, &opts)?;
            write_output(&file.output.out, &render_report(&report, file.output.format)?)?;
        }
        Command::Cv { file, folds, grid } => {
            let mut opts = file_options(&file)?;
            if let BandwidthPolicy::Cv { grid: g, folds: f, .. } = &mut opts.bandwidth {
                if let Some(v) = folds {
                    *f = v;
                }
                if let Some(v) = grid {
                    *g = v;
                }
            } else {
                return Err(HarnessError::Config("the cv command needs a cross-validation bandwidth policy".into()));
            }
            if file.explain {
                write_output(&file.output.out, &opts.explain()?)?;
                return Ok(ExitCode::SUCCESS);
            }
            let data = read_dataset_file(&file.data)?.survival_data()?;
            opts.bandwidth.validate(data.len())?;
            let (_, report) = select_bandwidth(&data, &opts.bandwidth, opts.seed)?;
            let report = report.expect("cv policy yields a report");
            let text = match file.output.format {
                Format::Text => cv_text(&report),
                Format::Csv => cv_csv(&report)?,
                Format::Json => serde_json::to_string_pretty(&report)? + "\n",
            };
            write_output(&file.output.out, &text)?;
        }
        Command::Oracle { config, output } => {
            let designs = match config {
                Some(p) => {
                    let cfg = CampaignConfig::load(&p)?;
                    vec![(p.display().to_string(), cfg.dgp.build()?)]
                }
                None => builtin_designs()?,
            };
            let reports = designs
                .iter()
                .map(|(name, dgp)| oracle_report(name, dgp))
                .collect::<Result<Vec<_>>>()?;
            write_output(&output.out, &render_oracle(&reports, output.format)?)?;
        }
        Command::Generate { config, seed, n, out } => {
            let cfg = CampaignConfig::load(&config)?;
            let seed = child_seed(seed.unwrap_or(cfg.seed), 0);
            let obs = cfg.dgp.build()?.sample(n.unwrap_or(cfg.n), seed)?;
            write_observations_file(&out, &obs)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
