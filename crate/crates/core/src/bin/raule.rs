use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use raule::commands::{
    cmd_diagnostics, cmd_dominance, cmd_estimate, cmd_fit, cmd_generate, cmd_risk, cmd_simulate,
    DataArgs, PlugInTruth, Report, RestrictionArgs, RiskArgs, RiskSource, SimulateArgs,
};
use raule::dataset::{CsvOptions, KappaBasis, ResponseColumn, MUNICIPALITIES_SEED};
use raule::simulation::{BetaDesign, DEFAULT_D_GRID};
use raule::table::Format;
use raule::{EstimatorKind, FitOptions};

#[derive(Parser)]
#[command(
    name = "raule",
    version,
    about = "Liu-type shrinkage estimators for logistic regression"
)]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value_t = OutFormat::Text, global = true)]
    format: OutFormat,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Csv,
    Text,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the logistic MLE by IRLS and print diagnostics.
    Fit {
        #[command(flatten)]
        data: DataFlags,
        /// Compute kappa from raw X'X instead of the correlation matrix.
        #[arg(long)]
        raw_kappa: bool,
    },
    /// Coefficients of the requested estimators.
    Estimate {
        #[command(flatten)]
        data: DataFlags,
        /// Comma-separated: mle, rmle, le, rle, aule, raule.
        #[arg(long, value_delimiter = ',', required = true)]
        estimator: Vec<EstimatorKind>,
        /// Biasing parameter values.
        #[arg(long, value_delimiter = ',')]
        d: Vec<f64>,
        #[command(flatten)]
        restriction: RestrictionFlags,
    },
    /// Exact MSE sweep over d, from a scenario file or plug-in estimates.
    Risk {
        /// Scenario record (C, H, h, beta).
        #[arg(long, conflicts_with = "csv")]
        scenario_file: Option<PathBuf>,
        /// Data file for plug-in mode.
        csv: Option<PathBuf>,
        #[command(flatten)]
        csv_flags: CsvFlags,
        #[command(flatten)]
        fit: FitFlags,
        #[command(flatten)]
        restriction: RestrictionFlags,
        /// Plug-in truth: rmle (default when restricted) or mle.
        #[arg(long, value_enum, default_value_t = Truth::Rmle)]
        plug_in_truth: Truth,
        #[arg(long, value_delimiter = ',')]
        estimator: Vec<EstimatorKind>,
        #[arg(long, value_delimiter = ',')]
        d_grid: Vec<f64>,
        /// Write d/mse column pairs per estimator for plotting.
        #[arg(long)]
        plot_data: Option<PathBuf>,
        /// Save the evaluated scenario.
        #[arg(long)]
        write_scenario: Option<PathBuf>,
    },
    /// Dominance verdicts for every theorem at each d.
    Dominance {
        #[arg(long)]
        scenario_file: PathBuf,
        #[arg(long, value_delimiter = ',')]
        d: Vec<f64>,
    },
    /// Monte Carlo MSE tables.
    Simulate {
        #[arg(long, default_value_t = 200)]
        n: usize,
        #[arg(long, default_value_t = 4)]
        p: usize,
        /// Correlation level gamma; predictors correlate at gamma pairwise.
        #[arg(long, default_value_t = 0.9)]
        rho: f64,
        #[arg(long, default_value_t = 2000)]
        reps: usize,
        /// Required.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_delimiter = ',')]
        d_grid: Vec<f64>,
        /// All (n, p, gamma) combinations of the six tables.
        #[arg(long)]
        table_suite: bool,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long, value_enum, default_value_t = BetaFlag::Equal)]
        beta: BetaFlag,
        /// Draw X once instead of once per replication.
        #[arg(long)]
        fixed_design: bool,
        #[arg(long, value_delimiter = ',')]
        estimator: Vec<EstimatorKind>,
        #[command(flatten)]
        restriction: RestrictionFlags,
        /// One row per cell, with standard errors.
        #[arg(long)]
        long: bool,
        /// Replay a saved simulation record.
        #[arg(long)]
        replay: Option<PathBuf>,
        /// Save a replay record for this run.
        #[arg(long)]
        record: Option<PathBuf>,
    },
    /// Correlation matrix and condition number of the predictors.
    Diagnostics {
        csv: PathBuf,
        #[command(flatten)]
        csv_flags: CsvFlags,
        #[arg(long)]
        raw_kappa: bool,
    },
    /// Write the synthetic municipalities dataset.
    Generate {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = MUNICIPALITIES_SEED)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Truth {
    Rmle,
    Mle,
}

#[derive(Clone, Copy, ValueEnum)]
enum BetaFlag {
    Equal,
    RandomProjected,
    Random,
}

#[derive(Args)]
struct CsvFlags {
    /// The file has no header row.
    #[arg(long)]
    no_header: bool,
    /// Response column: header name or zero-based index.
    #[arg(long, default_value = "0")]
    response: String,
    /// Prepend an intercept column.
    #[arg(long)]
    intercept: bool,
}

impl CsvFlags {
    fn options(&self) -> CsvOptions {
        let response_column = match self.response.parse::<usize>() {
            Ok(i) => ResponseColumn::Index(i),
            Err(_) => ResponseColumn::Name(self.response.clone()),
        };
        CsvOptions {
            header: !self.no_header,
            response_column,
            intercept: self.intercept,
        }
    }
}

#[derive(Args)]
struct FitFlags {
    #[arg(long, default_value_t = 50)]
    max_iter: usize,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 1e-6)]
    prob_clip: f64,
}

impl FitFlags {
    fn options(&self) -> FitOptions {
        FitOptions {
            max_iter: self.max_iter,
            tol: self.tol,
            prob_clip: self.prob_clip,
            ..FitOptions::default()
        }
    }
}

#[derive(Args)]
struct DataFlags {
    csv: PathBuf,
    #[command(flatten)]
    csv_flags: CsvFlags,
    #[command(flatten)]
    fit: FitFlags,
}

impl DataFlags {
    fn args(&self) -> DataArgs {
        data_args(self.csv.clone(), &self.csv_flags, &self.fit)
    }
}

fn data_args(csv: PathBuf, csv_flags: &CsvFlags, fit: &FitFlags) -> DataArgs {
    DataArgs {
        csv,
        csv_options: csv_flags.options(),
        fit: fit.options(),
    }
}

#[derive(Args)]
struct RestrictionFlags {
    /// Restriction matrix, rows separated by ';', e.g. "1,0,-2,1;1,-1,1,-1".
    #[arg(long = "H", allow_hyphen_values = true)]
    h_mat: Option<String>,
    /// Right-hand side h (defaults to zeros).
    #[arg(long = "h", allow_hyphen_values = true)]
    h_vec: Option<String>,
    /// Record file with [H] and optional [h] blocks.
    #[arg(long)]
    restriction_file: Option<PathBuf>,
}

impl RestrictionFlags {
    fn args(&self) -> RestrictionArgs {
        RestrictionArgs {
            h_mat: self.h_mat.clone(),
            h_vec: self.h_vec.clone(),
            file: self.restriction_file.clone(),
        }
    }
}

fn kappa_basis(raw: bool) -> KappaBasis {
    if raw {
        KappaBasis::CrossProduct
    } else {
        KappaBasis::Correlation
    }
}

fn run(cli: &Cli) -> raule::Result<Report> {
    match &cli.command {
        Command::Fit { data, raw_kappa } => cmd_fit(&data.args(), kappa_basis(*raw_kappa)),
        Command::Estimate {
            data,
            estimator,
            d,
            restriction,
        } => cmd_estimate(&data.args(), estimator, d, &restriction.args()),
        Command::Risk {
            scenario_file,
            csv,
            csv_flags,
            fit,
            restriction,
            plug_in_truth,
            estimator,
            d_grid,
            plot_data,
            write_scenario,
        } => {
            let source = match (scenario_file, csv) {
                (Some(path), _) => RiskSource::Scenario(path.clone()),
                (None, Some(csv)) => RiskSource::PlugIn {
                    data: data_args(csv.clone(), csv_flags, fit),
                    restriction: restriction.args(),
                    truth: match plug_in_truth {
                        Truth::Rmle => PlugInTruth::Restricted,
                        Truth::Mle => PlugInTruth::Mle,
                    },
                },
                (None, None) => {
                    return Err(raule::Error::InvalidParameter(
                        "risk needs --scenario-file or a data file".into(),
                    ))
                }
            };
            cmd_risk(&RiskArgs {
                source,
                kinds: estimator.clone(),
                d_grid: d_grid.clone(),
                plot_data: plot_data.clone(),
                write_scenario: write_scenario.clone(),
            })
        }
        Command::Dominance { scenario_file, d } => cmd_dominance(scenario_file, d),
        Command::Simulate {
            n,
            p,
            rho,
            reps,
            seed,
            d_grid,
            table_suite,
            threads,
            beta,
            fixed_design,
            estimator,
            restriction,
            long,
            replay,
            record,
        } => cmd_simulate(&SimulateArgs {
            n: *n,
            p: *p,
            rho: *rho,
            reps: *reps,
            seed: *seed,
            d_grid: if d_grid.is_empty() {
                DEFAULT_D_GRID.to_vec()
            } else {
                d_grid.clone()
            },
            table_suite: *table_suite,
            threads: *threads,
            beta_design: match beta {
                BetaFlag::Equal => BetaDesign::Equal,
                BetaFlag::RandomProjected => BetaDesign::Random { project: true },
                BetaFlag::Random => BetaDesign::Random { project: false },
            },
            fixed_design: *fixed_design,
            kinds: estimator.clone(),
            restriction: restriction.args(),
            long: *long,
            replay: replay.clone(),
            record: record.clone(),
        }),
        Command::Diagnostics {
            csv,
            csv_flags,
            raw_kappa,
        } => cmd_diagnostics(csv, &csv_flags.options(), kappa_basis(*raw_kappa)),
        Command::Generate { out, seed } => cmd_generate(out, *seed),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let format = match cli.format {
        OutFormat::Csv => Format::Csv,
        OutFormat::Text => Format::Text,
    };
    match run(&cli) {
        Ok(report) => {
            print!("{}", report.render(format));
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            ExitCode::from(report.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            if let raule::Error::MissingRestriction(_) = e {
                eprintln!("hint: restricted estimators need --H (and optionally --h) or --restriction-file");
            }
            ExitCode::from(1)
        }
    }
}
