use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use tremor_core::calibration::{GammaMethod, LikelihoodMode};
use tremor_core::model::{ModelParams, Modes, Normalization, Sidedness};
use tremor_core::ModelError;

#[derive(Debug, Parser)]
#[command(name = "tremor", version, about = "Spring-block network model of world stock exchanges")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "subcommand")]
pub enum Command {
    /// Simulate a panel and write it as a price file.
    Generate(GenerateArgs),
    /// Simulate a panel and write the per-event decomposition.
    Simulate(GenerateArgs),
    /// Grid-search the parameters of a price file.
    Calibrate(CalibrateArgs),
    /// Plot-ready diagnostics of a price file.
    Analyze(AnalyzeArgs),
    /// Sign-prediction backtest of a price file.
    Backtest(BacktestArgs),
    /// Repeat the run recorded in a manifest.
    Rerun(RerunArgs),
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ParamArgs {
    #[arg(long, default_value_t = 0.8)]
    pub gamma: f64,
    /// Zone-coupling decay time in hours.
    #[arg(long, default_value_t = 20.0)]
    pub tau: f64,
    /// Threshold on the cumulative return.
    #[arg(long = "r-c", default_value_t = 0.03)]
    pub r_c: f64,
    /// Variance of the local news.
    #[arg(long, default_value_t = 0.0006)]
    pub sigma2: f64,
}

impl ParamArgs {
    pub fn params(&self) -> Result<ModelParams, ModelError> {
        ModelParams::with_variance(self.gamma, self.tau, self.r_c, self.sigma2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SidednessArg {
    TwoSided,
    OneSided,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormalizationArg {
    Contributors,
    AllOthers,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ModeArgs {
    #[arg(long, value_enum, default_value_t = SidednessArg::TwoSided)]
    pub sidedness: SidednessArg,
    #[arg(long, value_enum, default_value_t = NormalizationArg::Contributors)]
    pub normalization: NormalizationArg,
}

impl ModeArgs {
    pub fn modes(&self) -> Modes {
        Modes {
            sidedness: match self.sidedness {
                SidednessArg::TwoSided => Sidedness::TwoSided,
                SidednessArg::OneSided => Sidedness::OneSidedLiteral,
            },
            normalization: match self.normalization {
                NormalizationArg::Contributors => Normalization::Contributors,
                NormalizationArg::AllOthers => Normalization::AllOthers,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct GenerateArgs {
    /// Universe config (TOML). The bundled 24-exchange universe if omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 250)]
    pub days: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub params: ParamArgs,
    #[command(flatten)]
    pub modes: ModeArgs,
    /// Output directory, created if missing.
    #[arg(long)]
    pub out: PathBuf,
}

/// A price file and the universe it refers to.
#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct DataArgs {
    /// Price CSV with header exchange_id,date,open,close.
    #[arg(long)]
    pub prices: PathBuf,
    /// Universe config (TOML). The bundled 24-exchange universe if omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GammaMethodArg {
    Profile,
    ClosedForm,
}

impl From<GammaMethodArg> for GammaMethod {
    fn from(g: GammaMethodArg) -> Self {
        match g {
            GammaMethodArg::Profile => GammaMethod::Profile,
            GammaMethodArg::ClosedForm => GammaMethod::ClosedForm,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LikelihoodArg {
    Filtered,
    Full,
}

impl From<LikelihoodArg> for LikelihoodMode {
    fn from(l: LikelihoodArg) -> Self {
        match l {
            LikelihoodArg::Filtered => LikelihoodMode::FilteredBins,
            LikelihoodArg::Full => LikelihoodMode::Full,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct CalibrateArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Comma-separated threshold values.
    #[arg(long, value_delimiter = ',', default_value = "0.02,0.025,0.03,0.035,0.04")]
    pub r_c_grid: Vec<f64>,
    /// Comma-separated decay times in hours.
    #[arg(long, value_delimiter = ',', default_value = "10,20,40")]
    pub tau_grid: Vec<f64>,
    /// Comma-separated noise variances.
    #[arg(long, value_delimiter = ',', default_value = "0.0004,0.0005,0.0006,0.0007,0.0008")]
    pub sigma2_grid: Vec<f64>,
    #[arg(long, value_enum, default_value_t = GammaMethodArg::Profile)]
    pub gamma_method: GammaMethodArg,
    #[arg(long, value_enum, default_value_t = LikelihoodArg::Filtered)]
    pub likelihood: LikelihoodArg,
    #[arg(long, default_value_t = 10)]
    pub min_occupancy: usize,
    #[command(flatten)]
    pub modes: ModeArgs,
    /// Output directory, created if missing.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Analysis {
    Sync,
    Leadlag,
    Tremor,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct AnalyzeArgs {
    #[arg(value_enum)]
    pub which: Analysis,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub params: ParamArgs,
    #[command(flatten)]
    pub modes: ModeArgs,
    /// Number of equal-count bins.
    #[arg(long, default_value_t = 10, conflicts_with = "edges")]
    pub bins: usize,
    /// Fixed comma-separated bin edges instead of quantile bins.
    #[arg(long, value_delimiter = ',')]
    pub edges: Option<Vec<f64>>,
    /// Mover exchange id for lead-lag. The largest capitalization if omitted.
    #[arg(long)]
    pub mover: Option<String>,
    /// Hours after the mover's close separating short- from long-lag responders.
    #[arg(long, default_value_t = 8.0)]
    pub split_hours: f64,
    /// Output directory, created if missing.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct BacktestArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub params: ParamArgs,
    #[command(flatten)]
    pub modes: ModeArgs,
    /// Output directory, created if missing.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct RerunArgs {
    pub manifest: PathBuf,
    /// Write outputs here instead of the recorded directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl Command {
    pub fn out_mut(&mut self) -> Option<&mut PathBuf> {
        match self {
            Command::Generate(a) | Command::Simulate(a) => Some(&mut a.out),
            Command::Calibrate(a) => Some(&mut a.out),
            Command::Analyze(a) => Some(&mut a.out),
            Command::Backtest(a) => Some(&mut a.out),
            Command::Rerun(_) => None,
        }
    }

    /// Rewrites every path as absolute so a manifest can be replayed from any
    /// working directory.
    pub fn absolutize(&mut self) {
        fn abs(p: &mut PathBuf) {
            if let Ok(a) = std::path::absolute(&*p) {
                *p = a;
            }
        }
        let data = |d: &mut DataArgs| {
            abs(&mut d.prices);
            if let Some(c) = &mut d.config {
                abs(c);
            }
        };
        match self {
            Command::Generate(a) | Command::Simulate(a) => {
                if let Some(c) = &mut a.config {
                    abs(c);
                }
            }
            Command::Calibrate(a) => data(&mut a.data),
            Command::Analyze(a) => data(&mut a.data),
            Command::Backtest(a) => data(&mut a.data),
            Command::Rerun(a) => abs(&mut a.manifest),
        }
        if let Some(out) = self.out_mut() {
            abs(out);
        }
    }
}
