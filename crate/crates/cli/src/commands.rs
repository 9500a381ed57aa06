use std::fs;
use std::path::Path;

use conformal_ood::conformal_sets::{calibrate, predict_sets, softmax_like};
use conformal_ood::metrics::{conformal_roc, metric_report_with_bounds, roc_curve};
use conformal_ood::pvalues::{conditional_pvalue, marginal_pvalues_batch};
use conformal_ood::scorers::{knn_class_scores, mahalanobis_class_scores, mahalanobis_fit, softmax_class_scores};
use conformal_ood::simulation::{beta_parameters, guarantee_violation_rate, ks_distance, simulate_fpr_distribution};
use conformal_ood::{
    BoundSequence, CalibrationResult, ClassScores, LabeledFeatures, MetricReport, MonteCarloConfig, RapsParams, SetMethod,
    ViolationReport,
};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::args::*;
use crate::error::{CliError, CliResult};
use crate::fixtures;
use crate::io::{csv_bytes, json_bytes, parse_features_csv, parse_scores_csv, read_feature_table, write_output, FeatureTable};

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Metrics(a) => cmd_metrics(&a),
        Command::Roc(a) => cmd_roc(&a),
        Command::Pvalues(a) => cmd_pvalues(&a),
        Command::Simulate(SimulateCommand::Beta(a)) => cmd_simulate_beta(&a),
        Command::Simulate(SimulateCommand::Guarantee(a)) => cmd_simulate_guarantee(&a),
        Command::Cp(CpCommand::Calibrate(a)) => cmd_cp_calibrate(&a),
        Command::Cp(CpCommand::Predict(a)) => cmd_cp_predict(&a),
        Command::Cp(CpCommand::Report(a)) => cmd_cp_report(&a),
        Command::Fixtures(FixtureCommand::Scores(a)) => cmd_fixture_scores(&a),
        Command::Fixtures(FixtureCommand::Classes(a)) => cmd_fixture_classes(&a),
    }
}

fn mc_config(c: &CorrectionArgs) -> MonteCarloConfig {
    MonteCarloConfig {
        trials: c.trials,
        seed: c.seed,
        bisection_iters: c.bisection_iters,
    }
}

fn bounds_for(c: &CorrectionArgs, n: usize) -> CliResult<BoundSequence> {
    Ok(BoundSequence::new(c.method, n, c.delta, &mc_config(c))?)
}

fn num(x: f64) -> String {
    x.to_string()
}

#[derive(Debug, Serialize)]
struct MetricsOutput {
    #[serde(flatten)]
    report: MetricReport,
    seed: u64,
    trials: usize,
}

fn percent_label(beta: f64) -> String {
    num((beta * 1e4).round() / 100.0)
}

pub fn cmd_metrics(a: &MetricsArgs) -> CliResult<()> {
    let id = parse_scores_csv(&a.scores.id_scores)?;
    let ood = parse_scores_csv(&a.scores.ood_scores)?;
    let bounds = bounds_for(&a.scores.correction, id.len())?;
    let report = metric_report_with_bounds(&id, &ood, a.beta_level, &bounds)?;
    let bytes = match a.format {
        Format::Json => json_bytes(&MetricsOutput {
            report,
            seed: a.scores.correction.seed,
            trials: a.scores.correction.trials,
        })?,
        Format::Csv => csv_bytes(
            &["metric", "class.", "conf."],
            [
                vec!["auroc".into(), num(report.auroc_classical), num(report.auroc_conformal)],
                vec![
                    format!("fpr@tpr{}", percent_label(report.beta_level)),
                    num(report.fpr_at_tpr_classical),
                    num(report.fpr_at_tpr_conformal),
                ],
            ],
        )?,
    };
    write_output(a.scores.output.as_deref(), &bytes)
}

pub fn cmd_roc(a: &ScoreArgs) -> CliResult<()> {
    let id = parse_scores_csv(&a.id_scores)?;
    let ood = parse_scores_csv(&a.ood_scores)?;
    let bounds = bounds_for(&a.correction, id.len())?;
    let curve = roc_curve(&id, &ood)?;
    let conformal = conformal_roc(&curve, &bounds)?;
    let rows = curve.points.iter().zip(&conformal.points).map(|(p, c)| {
        vec![num(p.threshold), num(p.fpr), num(p.tpr), num(c.fpr)]
    });
    let bytes = csv_bytes(&["threshold", "fpr", "tpr", "fpr_conformal"], rows)?;
    write_output(a.output.as_deref(), &bytes)
}

pub fn cmd_pvalues(a: &PvalueArgs) -> CliResult<()> {
    let cal = parse_scores_csv(&a.cal_scores)?;
    let tests = parse_scores_csv(&a.test_scores)?;
    let bounds = bounds_for(&a.correction, cal.len())?;
    let ps = marginal_pvalues_batch(&cal, &tests)?;
    let mut rows = Vec::with_capacity(ps.len());
    for (i, (p, &x)) in ps.iter().zip(tests.as_slice()).enumerate() {
        rows.push(vec![
            i.to_string(),
            num(x),
            p.rank_above.to_string(),
            num(p.value),
            num(conditional_pvalue(&bounds, p)?),
        ]);
    }
    let bytes = csv_bytes(&["index", "score", "rank_above", "p_marginal", "p_conditional"], rows)?;
    write_output(a.output.as_deref(), &bytes)
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct BetaSummary {
    pub n_cal: usize,
    pub tau: f64,
    pub ell: usize,
    pub alpha: u64,
    pub beta: u64,
    pub trials: usize,
    pub seed: u64,
    pub mean: f64,
    pub beta_mean: f64,
    pub beta_sd: f64,
    pub ks_distance: f64,
}

pub fn cmd_simulate_beta(a: &BetaArgs) -> CliResult<()> {
    if a.trials == 0 {
        return Err(CliError::Config("trials must be positive".into()));
    }
    let (alpha, beta) = beta_parameters(a.n_cal, a.tau)?;
    let draws = simulate_fpr_distribution(a.n_cal, a.tau, a.trials, a.seed)?;
    let (af, bf) = (alpha as f64, beta as f64);
    let summary = BetaSummary {
        n_cal: a.n_cal,
        tau: a.tau,
        ell: draws.ell,
        alpha,
        beta,
        trials: a.trials,
        seed: a.seed,
        mean: draws.mean(),
        beta_mean: af / (af + bf),
        beta_sd: (af * bf / ((af + bf).powi(2) * (af + bf + 1.0))).sqrt(),
        ks_distance: ks_distance(&draws.draws, alpha, beta)?,
    };
    if let Some(path) = &a.draws {
        let rows = draws.draws.iter().enumerate().map(|(i, &f)| vec![i.to_string(), num(f)]);
        write_output(Some(path), &csv_bytes(&["trial", "fpr"], rows)?)?;
    }
    write_output(a.output.as_deref(), &json_bytes(&summary)?)
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct GuaranteeSummary {
    #[serde(flatten)]
    pub report: ViolationReport,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub delta_hat: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub delta_hat_converged: Option<bool>,
}

pub fn cmd_simulate_guarantee(a: &GuaranteeArgs) -> CliResult<()> {
    let cfg = MonteCarloConfig {
        trials: a.mc_trials,
        seed: a.mc_seed,
        bisection_iters: a.bisection_iters,
    };
    let bounds = BoundSequence::new(a.method, a.n, a.delta, &cfg)?;
    let report = guarantee_violation_rate(&bounds, a.trials, a.seed)?;
    let summary = GuaranteeSummary {
        report,
        seed: a.seed,
        delta_hat: bounds.delta_hat().map(|d| d.value),
        delta_hat_converged: bounds.delta_hat().map(|d| d.converged),
    };
    if summary.delta_hat_converged == Some(false) {
        eprintln!("warning: no Monte Carlo level met the target; the bounds are not guaranteed");
    }
    write_output(a.output.as_deref(), &json_bytes(&summary)?)
}

/// Identifies the fitted scorer a calibration was made with.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ScorerFingerprint {
    pub kind: ScorerKind,
    pub num_classes: usize,
    pub dim: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub epsilon: Option<f64>,
    /// SHA-256 of the training file; absent for the softmax scorer.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub train_sha256: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CalibrationArtifact {
    pub method: SetMethod,
    pub alpha: f64,
    pub n_cal: usize,
    /// `null` when every class is always included.
    pub q_hat: Option<f64>,
    pub seed: u64,
    pub raps_params: Option<RapsParams<f64>>,
    pub scorer: ScorerFingerprint,
}

impl CalibrationArtifact {
    fn result(&self) -> CalibrationResult<f64> {
        CalibrationResult {
            method: self.method,
            alpha: self.alpha,
            n_cal: self.n_cal,
            q_hat: self.q_hat.unwrap_or(f64::INFINITY),
            raps_params: self.raps_params,
            seed: self.seed,
        }
    }
}

enum Scorer {
    Knn(LabeledFeatures),
    Mahalanobis(Box<conformal_ood::MahalanobisModel>),
    Softmax,
}

struct FittedScorer {
    scorer: Scorer,
    fingerprint: ScorerFingerprint,
}

fn sha256_file(path: &Path) -> CliResult<String> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

fn fit_scorer(kind: ScorerKind, train: Option<&Path>, epsilon: Option<f64>, rows: &FeatureTable) -> CliResult<FittedScorer> {
    if kind == ScorerKind::Softmax {
        return Ok(FittedScorer {
            scorer: Scorer::Softmax,
            fingerprint: ScorerFingerprint {
                kind,
                num_classes: rows.dim(),
                dim: rows.dim(),
                epsilon: None,
                train_sha256: None,
            },
        });
    }
    let path = train.ok_or_else(|| CliError::Config(format!("the {kind:?} scorer needs --train").to_lowercase()))?;
    let features = parse_features_csv(path)?;
    let fingerprint = ScorerFingerprint {
        kind,
        num_classes: features.num_classes(),
        dim: features.dim(),
        epsilon: if kind == ScorerKind::Mahalanobis { epsilon } else { None },
        train_sha256: Some(sha256_file(path)?),
    };
    let scorer = match kind {
        ScorerKind::Knn => Scorer::Knn(features),
        ScorerKind::Mahalanobis => Scorer::Mahalanobis(Box::new(mahalanobis_fit(&features, epsilon)?)),
        ScorerKind::Softmax => unreachable!(),
    };
    Ok(FittedScorer { scorer, fingerprint })
}

impl FittedScorer {
    fn class_scores(&self, rows: &DMatrix<f64>) -> CliResult<ClassScores> {
        Ok(match &self.scorer {
            Scorer::Knn(train) => knn_class_scores(train, rows)?,
            Scorer::Mahalanobis(model) => mahalanobis_class_scores(model, rows)?,
            Scorer::Softmax => softmax_class_scores(rows)?,
        })
    }

    /// Probability-like rows, after checking labels against the class count.
    fn probabilities(&self, table: &FeatureTable, path: &Path) -> CliResult<DMatrix<f64>> {
        let c = self.fingerprint.num_classes;
        if table.max_label() > c {
            return Err(CliError::Input {
                path: path.into(),
                message: format!("label {} exceeds the {c} classes of the scorer", table.max_label()),
            });
        }
        Ok(softmax_like(&self.class_scores(&table.features)?))
    }
}

pub fn cmd_cp_calibrate(a: &CalibrateArgs) -> CliResult<()> {
    if !(a.alpha > 0.0 && a.alpha < 1.0) {
        return Err(CliError::Config(format!("alpha must lie in (0, 1), got {}", a.alpha)));
    }
    let cal = read_feature_table(&a.cal)?;
    let scorer = fit_scorer(a.scorer, a.train.as_deref(), a.epsilon, &cal)?;
    let probs = scorer.probabilities(&cal, &a.cal)?;
    let raps = RapsParams {
        lambda: a.lambda,
        k_reg: a.k_reg,
    };
    let result = calibrate(a.method, &probs, &cal.labels, a.alpha, a.seed, raps)?;
    let artifact = CalibrationArtifact {
        method: result.method,
        alpha: result.alpha,
        n_cal: result.n_cal,
        q_hat: result.q_hat.is_finite().then_some(result.q_hat),
        seed: result.seed,
        raps_params: result.raps_params,
        scorer: scorer.fingerprint,
    };
    write_output(a.output.as_deref(), &json_bytes(&artifact)?)
}

pub fn cmd_cp_predict(a: &PredictArgs) -> CliResult<()> {
    let text = fs::read_to_string(&a.artifact).map_err(|e| CliError::io(&a.artifact, e))?;
    let artifact: CalibrationArtifact = serde_json::from_str(&text).map_err(|e| CliError::Parse {
        path: a.artifact.clone(),
        line: e.line(),
        message: e.to_string(),
    })?;
    let test = read_feature_table(&a.test)?;
    let expected = &artifact.scorer;
    let scorer = fit_scorer(expected.kind, a.train.as_deref(), expected.epsilon, &test)?;
    if scorer.fingerprint != *expected {
        return Err(CliError::Config(
            "scorer does not match the calibration artifact (different training file, dimension or class count)".into(),
        ));
    }
    let probs = scorer.probabilities(&test, &a.test)?;
    let sets = predict_sets(&probs, &artifact.result());
    let rows = sets.iter().zip(&test.labels).enumerate().map(|(i, (s, &y))| {
        let members: Vec<String> = s.members.iter().map(usize::to_string).collect();
        vec![
            i.to_string(),
            s.len().to_string(),
            members.join(";"),
            u8::from(s.contains(y)).to_string(),
        ]
    });
    let bytes = csv_bytes(&["row_index", "set_size", "members", "covered"], rows)?;
    write_output(a.output.as_deref(), &bytes)
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct SetReport {
    pub n: usize,
    pub coverage: f64,
    pub efficiency: f64,
    pub efficiency_sd: f64,
}

pub fn cmd_cp_report(a: &ReportArgs) -> CliResult<()> {
    let path = &a.sets;
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut sizes = Vec::new();
    let mut covered = 0usize;
    for record in reader.records() {
        let record = record.map_err(|e| CliError::Parse {
            path: path.clone(),
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let bad = |message: String| CliError::Parse {
            path: path.clone(),
            line,
            message,
        };
        if record.len() != 4 {
            return Err(bad(format!("expected 4 columns, found {}", record.len())));
        }
        let size: usize = record[1]
            .parse()
            .map_err(|_| bad(format!("bad set size '{}'", &record[1])))?;
        let listed = record[2].split(';').filter(|m| !m.is_empty()).count();
        if listed != size {
            return Err(bad(format!("set_size {size} but {listed} members listed")));
        }
        match &record[3] {
            "1" => covered += 1,
            "0" => {}
            other => return Err(bad(format!("covered must be 0 or 1, got '{other}'"))),
        }
        sizes.push(size as f64);
    }
    if sizes.is_empty() {
        return Err(CliError::Input {
            path: path.clone(),
            message: "empty sets file".into(),
        });
    }
    let n = sizes.len() as f64;
    let mean = sizes.iter().sum::<f64>() / n;
    let var = sizes.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n;
    let report = SetReport {
        n: sizes.len(),
        coverage: covered as f64 / n,
        efficiency: mean,
        efficiency_sd: var.sqrt(),
    };
    write_output(a.output.as_deref(), &json_bytes(&report)?)
}

fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn score_rows(values: &[f64]) -> impl Iterator<Item = Vec<String>> + '_ {
    values.iter().map(|&v| vec![num(v)])
}

pub fn cmd_fixture_scores(a: &ScoreFixtureArgs) -> CliResult<()> {
    if a.n_id == 0 || a.n_ood == 0 || !a.shift.is_finite() {
        return Err(CliError::Config("fixture sizes must be positive and the shift finite".into()));
    }
    ensure_dir(&a.out_dir)?;
    let (id, ood) = fixtures::score_fixture(a.n_id, a.n_ood, a.shift, a.seed);
    write_output(Some(&a.out_dir.join("id.csv")), &csv_bytes(&["score"], score_rows(&id))?)?;
    write_output(Some(&a.out_dir.join("ood.csv")), &csv_bytes(&["score"], score_rows(&ood))?)
}

pub fn feature_csv(table: &FeatureTable) -> CliResult<Vec<u8>> {
    let header: Vec<String> = std::iter::once("label".to_string())
        .chain((1..=table.dim()).map(|j| format!("f{j}")))
        .collect();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows = table.labels.iter().enumerate().map(|(i, y)| {
        std::iter::once(y.to_string())
            .chain(table.features.row(i).iter().map(|&v| num(v)))
            .collect()
    });
    csv_bytes(&header, rows)
}

pub fn cmd_fixture_classes(a: &ClassFixtureArgs) -> CliResult<()> {
    if a.n_train < 6 || a.n_cal == 0 || a.n_test == 0 {
        return Err(CliError::Config("need at least 6 training rows and nonempty splits".into()));
    }
    ensure_dir(&a.out_dir)?;
    for (name, n, split) in [("train.csv", a.n_train, 0), ("cal.csv", a.n_cal, 1), ("test.csv", a.n_test, 2)] {
        let table = fixtures::class_fixture(n, a.seed, split);
        write_output(Some(&a.out_dir.join(name)), &feature_csv(&table)?)?;
    }
    Ok(())
}

