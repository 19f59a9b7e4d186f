//! Argument parsing, config-file merging and command dispatch.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use ldp_core::continuous::{
    fisher_info_extremal, info_bounds, small_alpha_limit, two_point_mechanism, ContinuousModel,
};
use ldp_core::finite_fisher::{closed_form_max, solve_lp_with_cap, DEFAULT_LP_MAX_DIM};
use ldp_core::uniform::{grid, TwoStage, UniformSimConfig};
use ldp_core::{factorize, Error as CoreError};
use serde::{Deserialize, Serialize};

use crate::driver::run_parallel;
use crate::error::{CliError, CliResult};
use crate::formats::{
    emit, read_json, sim_rows, to_csv, to_json, BoundsRow, ChannelFile, FactorizationFile,
    FisherMaxFile, MethodName, ModeName, ModelFile, PiecewiseFile, SimReportFile, VerifyReport,
};

const SCHEMAS: &str = "\
File formats (JSON):
  channel     {\"d\": 2, \"l\": 2, \"kernel\": [[0.6, 0.4], [0.4, 0.6]]}   one row per input
  model       {\"p0\": [0.5, 0.5], \"score\": [-2, 2], \"alpha\": 0.3}       alpha optional
  piecewise   {\"breaks\": [0, 1, 3], \"density\": [0.5, 0.25], \"score\": [-1, 2]}
  factorize   {\"alpha\", \"mode\", \"omega\": [{\"beta\", \"weight\"}], \"q1\": channel, \"q2\": channel,
               \"checks\": {\"reconstruction_error\", \"normalization_error\", \"total_mass\",
                          \"mass_in_window\", \"q1_extremal\"}}
  fisher-max  {\"method\", \"alpha\", \"M_star\", \"I_max\", \"support\", \"omega\", \"n_max\",
               \"alpha_bar_check\", \"below_sufficient_threshold\", \"lp_vs_closed_form_gap\",
               \"mechanism\": channel}
  config      {\"seed\", \"workers\", \"out\", \"format\", and optional sections \"verify\",
               \"factorize\", \"fisher_max\", \"bounds\", \"simulate_uniform\" whose keys are the
               subcommand's long flags with '-' replaced by '_'}; unknown keys are rejected.
Pattern index beta: bit j set means the pattern equals e^alpha at input j.
Command-line flags override config values.
Exit codes: 0 success, 1 numeric failure, 2 invalid input.";

#[derive(Debug, Parser)]
#[command(
    name = "ldp",
    version,
    about = "Locally private channels: factorization, Fisher information, bounds and simulation"
)]
#[command(after_long_help = SCHEMAS)]
pub struct Cli {
    /// JSON config file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed for random streams.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for Monte Carlo runs.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Output file (stdout when omitted).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a channel against an α-LDP budget.
    Verify(VerifyArgs),
    /// Factor a channel through an extremal mechanism.
    Factorize(FactorizeArgs),
    /// Maximal Fisher information of a finite model over α-LDP channels.
    FisherMax(FisherMaxArgs),
    /// Information bounds and the two-point mechanism for a continuous model.
    Bounds(BoundsArgs),
    /// Monte Carlo study of the privatized uniform-range estimator.
    SimulateUniform(SimulateArgs),
}

#[derive(Debug, Default, Clone, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyArgs {
    #[arg(long)]
    pub channel: Option<PathBuf>,
    #[arg(long)]
    pub alpha: Option<f64>,
}

#[derive(Debug, Default, Clone, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FactorizeArgs {
    #[arg(long)]
    pub channel: Option<PathBuf>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeName>,
}

#[derive(Debug, Default, Clone, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FisherMaxArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Overrides the model file's alpha.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, value_enum)]
    pub method: Option<MethodName>,
    /// Largest alphabet solved by the linear program.
    #[arg(long)]
    pub max_dim: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ModelName {
    Gaussian,
    Uniform,
    CustomPiecewise,
}

#[derive(Debug, Default, Clone, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundsArgs {
    #[arg(long, value_enum)]
    pub model: Option<ModelName>,
    /// Comma-separated privacy levels.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub alpha: Option<Vec<f64>>,
    /// Gaussian location.
    #[arg(long, allow_hyphen_values = true)]
    pub mean: Option<f64>,
    /// Gaussian scale.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Uniform range.
    #[arg(long)]
    pub theta0: Option<f64>,
    /// Piecewise model file.
    #[arg(long)]
    pub model_file: Option<PathBuf>,
}

#[derive(Debug, Default, Clone, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateArgs {
    /// True range [default: 1]
    #[arg(long)]
    pub theta0: Option<f64>,
    /// Sample size per replication [default: 1000]
    #[arg(long)]
    pub n: Option<usize>,
    /// Privacy level [default: 0.3]
    #[arg(long)]
    pub alpha: Option<f64>,
    /// First preliminary value [default: 0.5]
    #[arg(long)]
    pub grid_start: Option<f64>,
    /// Last preliminary value [default: 1.3]
    #[arg(long)]
    pub grid_end: Option<f64>,
    /// [default: 0.05]
    #[arg(long)]
    pub grid_step: Option<f64>,
    /// Replications per grid point [default: 100000]
    #[arg(long)]
    pub iters: Option<usize>,
    /// Estimate the preliminary value from a pilot subsample.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub two_stage: Option<bool>,
    /// [default: 0.1]
    #[arg(long)]
    pub pilot_fraction: Option<f64>,
    /// Pilot estimate is multiplied by this [default: 0.9]
    #[arg(long)]
    pub shrink: Option<f64>,
    /// Also write the full report as JSON here.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Default, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CliConfig {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub verify: Option<VerifyArgs>,
    pub factorize: Option<FactorizeArgs>,
    pub fisher_max: Option<FisherMaxArgs>,
    pub bounds: Option<BoundsArgs>,
    pub simulate_uniform: Option<SimulateArgs>,
}

/// Global settings after merging flags over the config file.
#[derive(Debug, Clone)]
pub struct Globals {
    pub seed: u64,
    pub workers: usize,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
}

pub const DEFAULT_SEED: u64 = 1;

fn required<T>(value: Option<T>, field: &str) -> CliResult<T> {
    value.ok_or_else(|| {
        CliError::validation(
            field,
            "missing (pass the flag or set it in the config file)",
        )
    })
}

macro_rules! overlay {
    ($flags:expr, $section:expr; $($field:ident),+) => {{
        let mut merged = $flags;
        if let Some(sec) = $section {
            $( if merged.$field.is_none() { merged.$field = sec.$field; } )+
        }
        merged
    }};
}

pub fn run(cli: Cli) -> CliResult<()> {
    let config: CliConfig = match &cli.config {
        Some(path) => read_json(path)?,
        None => CliConfig::default(),
    };
    let workers = cli.workers.or(config.workers).unwrap_or_else(|| {
        std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1)
    });
    if workers == 0 {
        return Err(CliError::validation("workers", "must be at least 1"));
    }
    let globals = Globals {
        seed: cli.seed.or(config.seed).unwrap_or(DEFAULT_SEED),
        workers,
        out: cli.out.or(config.out),
        format: cli.format.or(config.format),
    };
    match cli.command {
        Command::Verify(a) => verify(overlay!(a, config.verify; channel, alpha), &globals),
        Command::Factorize(a) => factorize_cmd(
            overlay!(a, config.factorize; channel, alpha, mode),
            &globals,
        ),
        Command::FisherMax(a) => fisher_max(
            overlay!(a, config.fisher_max; model, alpha, method, max_dim),
            &globals,
        ),
        Command::Bounds(a) => bounds(
            overlay!(a, config.bounds; model, alpha, mean, sigma, theta0, model_file),
            &globals,
        ),
        Command::SimulateUniform(a) => simulate(
            overlay!(a, config.simulate_uniform;
                theta0, n, alpha, grid_start, grid_end, grid_step, iters, two_stage, pilot_fraction, shrink, json),
            &globals,
        ),
    }
}

fn json_only(g: &Globals, command: &str) -> CliResult<()> {
    match g.format {
        Some(Format::Csv) => Err(CliError::validation(
            "format",
            format!("{command} only writes JSON"),
        )),
        _ => Ok(()),
    }
}

fn load_channel(path: &Path) -> CliResult<ldp_core::Channel> {
    read_json::<ChannelFile>(path)?.to_channel()
}

fn verify(a: VerifyArgs, g: &Globals) -> CliResult<()> {
    json_only(g, "verify")?;
    let channel = load_channel(&required(a.channel, "channel")?)?;
    let cert = channel.verify_ldp(required(a.alpha, "alpha")?)?;
    emit(g.out.as_ref(), &to_json(&VerifyReport::from(&cert)))
}

fn factorize_cmd(a: FactorizeArgs, g: &Globals) -> CliResult<()> {
    json_only(g, "factorize")?;
    let channel = load_channel(&required(a.channel, "channel")?)?;
    let alpha = required(a.alpha, "alpha")?;
    let mode = a.mode.unwrap_or(ModeName::Sparse);
    let f = factorize(&channel, alpha, mode.into())?;
    emit(
        g.out.as_ref(),
        &to_json(&FactorizationFile::new(&f, &channel)?),
    )
}

fn fisher_max(a: FisherMaxArgs, g: &Globals) -> CliResult<()> {
    json_only(g, "fisher-max")?;
    let file: ModelFile = read_json(&required(a.model, "model")?)?;
    let alpha = required(a.alpha.or(file.alpha), "alpha")?;
    let model = file.to_model()?;
    let cap = a.max_dim.unwrap_or(DEFAULT_LP_MAX_DIM);
    let result = match a.method.unwrap_or(MethodName::Auto) {
        MethodName::Lp => solve_lp_with_cap(&model, alpha, cap)?,
        MethodName::ClosedForm => closed_form_max(&model, alpha)?,
        MethodName::Auto if model.d() <= cap => solve_lp_with_cap(&model, alpha, cap)?,
        MethodName::Auto => closed_form_max(&model, alpha)?,
    };
    emit(
        g.out.as_ref(),
        &to_json(&FisherMaxFile::new(&result, model.d())?),
    )
}

pub fn build_continuous(a: &BoundsArgs) -> CliResult<ContinuousModel> {
    Ok(match a.model.unwrap_or(ModelName::Gaussian) {
        ModelName::Gaussian => {
            ContinuousModel::gaussian(a.mean.unwrap_or(0.0), a.sigma.unwrap_or(1.0))?
        }
        ModelName::Uniform => ContinuousModel::uniform(a.theta0.unwrap_or(1.0))?,
        ModelName::CustomPiecewise => {
            let file: PiecewiseFile = read_json(&required(a.model_file.clone(), "model_file")?)?;
            file.to_model()?
        }
    })
}

pub fn bounds_rows(model: &ContinuousModel, alphas: &[f64]) -> Result<Vec<BoundsRow>, CoreError> {
    alphas
        .iter()
        .map(|&alpha| {
            let (lower, upper) = info_bounds(model, alpha)?;
            let two_point_info = fisher_info_extremal(model, &two_point_mechanism(model, alpha)?)?;
            let limit = small_alpha_limit(model, alpha)?;
            Ok(BoundsRow {
                alpha,
                lower,
                upper,
                two_point_info,
                ratio_to_limit: (limit > 0.0).then(|| two_point_info / limit),
            })
        })
        .collect()
}

fn bounds(a: BoundsArgs, g: &Globals) -> CliResult<()> {
    let alphas = required(a.alpha.clone(), "alpha")?;
    if alphas.is_empty() {
        return Err(CliError::validation("alpha", "empty list"));
    }
    let model = build_continuous(&a)?;
    let rows = bounds_rows(&model, &alphas)?;
    let text = match g.format.unwrap_or(Format::Csv) {
        Format::Csv => to_csv(&rows)?,
        Format::Json => to_json(&rows),
    };
    emit(g.out.as_ref(), &text)
}

pub fn simulation_config(a: &SimulateArgs, seed: u64) -> CliResult<UniformSimConfig> {
    let two_stage = if a.two_stage.unwrap_or(false) {
        let d = TwoStage::default();
        Some(TwoStage {
            pilot_fraction: a.pilot_fraction.unwrap_or(d.pilot_fraction),
            shrink: a.shrink.unwrap_or(d.shrink),
        })
    } else {
        None
    };
    let cfg = UniformSimConfig {
        theta0: a.theta0.unwrap_or(1.0),
        n: a.n.unwrap_or(1000),
        alpha: a.alpha.unwrap_or(0.3),
        grid: grid(
            a.grid_start.unwrap_or(0.5),
            a.grid_end.unwrap_or(1.3),
            a.grid_step.unwrap_or(0.05),
        )?,
        iters: a.iters.unwrap_or(100_000),
        seed,
        two_stage,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn simulate(a: SimulateArgs, g: &Globals) -> CliResult<()> {
    let cfg = simulation_config(&a, g.seed)?;
    let report = run_parallel(&cfg, g.workers)?;
    let text = match g.format.unwrap_or(Format::Csv) {
        Format::Csv => to_csv(&sim_rows(&report))?,
        Format::Json => to_json(&SimReportFile::from(&report)),
    };
    emit(g.out.as_ref(), &text)?;
    if let Some(path) = &a.json {
        emit(Some(path), &to_json(&SimReportFile::from(&report)))?;
    }
    Ok(())
}
