use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use conformal_ood::{CorrectionMethod, SetMethod};

#[derive(Debug, Parser)]
#[command(name = "conformal-ood", version, about = "Conformal OOD metrics with calibration-conditional guarantees")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classical and conformal AUROC and FPR@TPR.
    Metrics(MetricsArgs),
    /// ROC points with the conformal FPR alongside.
    Roc(ScoreArgs),
    /// Marginal and calibration-conditional p-values of test scores.
    Pvalues(PvalueArgs),
    /// Uniform-null simulations.
    #[command(subcommand)]
    Simulate(SimulateCommand),
    /// Conformal prediction sets.
    #[command(subcommand)]
    Cp(CpCommand),
    /// Write the synthetic benchmarks.
    #[command(subcommand)]
    Fixtures(FixtureCommand),
}

#[derive(Debug, Clone, Args)]
pub struct CorrectionArgs {
    /// Miscoverage level of the uniform FPR guarantee.
    #[arg(long, default_value_t = 0.05)]
    pub delta: f64,
    /// simes, dkwm, asymptotic, mc or none.
    #[arg(long, default_value = "mc")]
    pub method: CorrectionMethod,
    /// Seed of the Monte Carlo level search.
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Simulated calibration sets for the Monte Carlo level search.
    #[arg(long, default_value_t = 2000)]
    pub trials: usize,
    #[arg(long, default_value_t = 20)]
    pub bisection_iters: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// In-distribution calibration scores (one column, optional `score` header).
    #[arg(long = "id")]
    pub id_scores: PathBuf,
    #[arg(long = "ood")]
    pub ood_scores: PathBuf,
    #[command(flatten)]
    pub correction: CorrectionArgs,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    #[command(flatten)]
    pub scores: ScoreArgs,
    /// Target TPR of the FPR@TPR operating point.
    #[arg(long = "beta", default_value_t = 0.95)]
    pub beta_level: f64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct PvalueArgs {
    #[arg(long = "cal")]
    pub cal_scores: PathBuf,
    #[arg(long = "test")]
    pub test_scores: PathBuf,
    #[command(flatten)]
    pub correction: CorrectionArgs,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum SimulateCommand {
    /// Conditional FPR of the threshold at level tau across calibration sets.
    Beta(BetaArgs),
    /// Violation rate of the uniform FPR guarantee.
    Guarantee(GuaranteeArgs),
}

#[derive(Debug, Args)]
pub struct BetaArgs {
    #[arg(long = "n")]
    pub n_cal: usize,
    #[arg(long)]
    pub tau: f64,
    #[arg(long, default_value_t = 2000)]
    pub trials: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Also write the individual draws as CSV.
    #[arg(long)]
    pub draws: Option<PathBuf>,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GuaranteeArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,
    #[arg(long, default_value = "mc")]
    pub method: CorrectionMethod,
    #[arg(long, default_value_t = 2000)]
    pub trials: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Seed and trial count of the Monte Carlo level search, kept apart from
    /// the evaluation so that the reported rate is out of sample.
    #[arg(long, default_value_t = 4242)]
    pub mc_seed: u64,
    #[arg(long, default_value_t = 2000)]
    pub mc_trials: usize,
    #[arg(long, default_value_t = 20)]
    pub bisection_iters: usize,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScorerKind {
    Knn,
    Mahalanobis,
    Softmax,
}

#[derive(Debug, Subcommand)]
pub enum CpCommand {
    /// Fit the scorer and calibrate the set threshold.
    Calibrate(CalibrateArgs),
    /// Prediction sets for labeled test rows.
    Predict(PredictArgs),
    /// Coverage and set-size summary of a sets file.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    /// Training features (`label,f1,...`); unused by the softmax scorer.
    #[arg(long)]
    pub train: Option<PathBuf>,
    /// Calibration rows: features, or logits for the softmax scorer.
    #[arg(long)]
    pub cal: PathBuf,
    #[arg(long, value_enum)]
    pub scorer: ScorerKind,
    /// lac, aps or raps.
    #[arg(long, default_value = "lac")]
    pub method: SetMethod,
    #[arg(long, default_value_t = 0.1)]
    pub alpha: f64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.1)]
    pub lambda: f64,
    #[arg(long, default_value_t = 5)]
    pub k_reg: usize,
    /// Covariance ridge for the Mahalanobis scorer (default: scale-aware).
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub artifact: PathBuf,
    #[arg(long)]
    pub train: Option<PathBuf>,
    #[arg(long)]
    pub test: PathBuf,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub sets: PathBuf,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum FixtureCommand {
    /// Gaussian ID/OOD detector scores: id.csv and ood.csv.
    Scores(ScoreFixtureArgs),
    /// Three-class Gaussian features: train.csv, cal.csv and test.csv.
    Classes(ClassFixtureArgs),
}

#[derive(Debug, Args)]
pub struct ScoreFixtureArgs {
    #[arg(long, default_value_t = 9000)]
    pub n_id: usize,
    #[arg(long, default_value_t = 2000)]
    pub n_ood: usize,
    #[arg(long, default_value_t = crate::fixtures::DEFAULT_SHIFT)]
    pub shift: f64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct ClassFixtureArgs {
    #[arg(long, default_value_t = 600)]
    pub n_train: usize,
    #[arg(long, default_value_t = 500)]
    pub n_cal: usize,
    #[arg(long, default_value_t = 500)]
    pub n_test: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long)]
    pub out_dir: PathBuf,
}
