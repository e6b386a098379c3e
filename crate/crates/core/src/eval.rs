//! Misclassification scoring, stratified k-fold cross-validation,
//! relative-performance computation and benchmark-grid orchestration.

use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{
    fit_centroid, fit_median, fit_oqc, predict_centroid, predict_oqc, CentroidModel, OqcConfig,
    OqcModel,
};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::model::QuantileModel;
use crate::seed::derive_seed;
use crate::simgen::{generate, ScenarioSpec};
use crate::vwqc::{fit, predict, FitConfig};

/// Cross-validation protocol.
#[derive(Debug, Clone)]
pub struct CvSpec {
    pub folds: usize,
    pub stratified: bool,
    pub seed: u64,
    /// Estimate per-variable divisors on the training folds only and apply
    /// them to the held-out fold.
    pub standardize: bool,
}

impl Default for CvSpec {
    fn default() -> Self {
        CvSpec {
            folds: 10,
            stratified: true,
            seed: 0,
            standardize: false,
        }
    }
}

/// Which classifier to train.
#[derive(Debug, Clone)]
pub enum ClassifierSpec {
    Vwqc(FitConfig),
    Median,
    Centroid,
    Oqc(OqcConfig),
}

impl ClassifierSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ClassifierSpec::Vwqc(_) => "vwqc",
            ClassifierSpec::Median => "median",
            ClassifierSpec::Centroid => "centroid",
            ClassifierSpec::Oqc(_) => "oqc",
        }
    }
}

/// A trained classifier together with any standardization divisors that
/// must be applied to observations before scoring.
#[derive(Debug, Clone)]
pub enum FittedClassifier {
    // Quantile models carry their divisors internally.
    Vwqc(QuantileModel),
    Median(QuantileModel),
    Centroid(CentroidModel, Option<Vec<f64>>),
    Oqc(OqcModel, Option<Vec<f64>>),
}

impl FittedClassifier {
    pub fn predict(&self, observations: &[Vec<f64>]) -> Result<Vec<usize>> {
        match self {
            FittedClassifier::Vwqc(m) | FittedClassifier::Median(m) => predict(m, observations),
            FittedClassifier::Centroid(m, div) => {
                predict_centroid(m, &apply_divisors(observations, div))
            }
            FittedClassifier::Oqc(m, div) => predict_oqc(m, &apply_divisors(observations, div)),
        }
    }
}

fn apply_divisors(observations: &[Vec<f64>], divisors: &Option<Vec<f64>>) -> Vec<Vec<f64>> {
    match divisors {
        None => observations.to_vec(),
        Some(d) => observations
            .iter()
            .map(|row| row.iter().zip(d).map(|(&v, &s)| v / s).collect())
            .collect(),
    }
}

/// Train one classifier, optionally standardizing by within-class pooled
/// sd computed on `dataset` itself.
pub fn train_classifier(
    dataset: &Dataset,
    spec: &ClassifierSpec,
    standardize: bool,
) -> Result<FittedClassifier> {
    let (train, divisors) = if standardize {
        let d = dataset.pooled_within_class_sd();
        (dataset.scaled(&d)?, Some(d))
    } else {
        (dataset.clone(), None)
    };
    Ok(match spec {
        ClassifierSpec::Vwqc(config) => {
            let (mut model, _) = fit(&train, config)?;
            model.standardization = divisors;
            FittedClassifier::Vwqc(model)
        }
        ClassifierSpec::Median => {
            let mut model = fit_median(&train)?;
            model.standardization = divisors;
            FittedClassifier::Median(model)
        }
        ClassifierSpec::Centroid => FittedClassifier::Centroid(fit_centroid(&train)?, divisors),
        ClassifierSpec::Oqc(config) => FittedClassifier::Oqc(fit_oqc(&train, config)?, divisors),
    })
}

/// Fraction of mismatching entries.
pub fn misclassification_rate(predicted: &[usize], truth: &[usize]) -> Result<f64> {
    if predicted.len() != truth.len() {
        return Err(Error::LengthMismatch {
            predicted: predicted.len(),
            truth: truth.len(),
        });
    }
    if predicted.is_empty() {
        return Err(Error::EmptySample);
    }
    let wrong = predicted
        .iter()
        .zip(truth)
        .filter(|(a, b)| a != b)
        .count();
    Ok(wrong as f64 / predicted.len() as f64)
}

/// Fold index per observation. Stratified assignment shuffles within each
/// class and deals round-robin, so class proportions per fold deviate by
/// at most one member.
pub fn assign_folds(dataset: &Dataset, cv: &CvSpec) -> Result<Vec<usize>> {
    if cv.folds < 2 {
        return Err(Error::InfeasibleFolds("folds must be >= 2".into()));
    }
    if cv.folds > dataset.n() {
        return Err(Error::InfeasibleFolds(format!(
            "{} folds for {} observations",
            cv.folds,
            dataset.n()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cv.seed);
    let mut assignment = vec![0usize; dataset.n()];
    if cv.stratified {
        for class in 0..dataset.class_count() {
            let mut members: Vec<usize> = dataset
                .labels()
                .iter()
                .enumerate()
                .filter(|(_, &c)| c == class)
                .map(|(i, _)| i)
                .collect();
            if members.len() < cv.folds {
                return Err(Error::InfeasibleFolds(format!(
                    "class {class} has {} members for {} folds",
                    members.len(),
                    cv.folds
                )));
            }
            members.shuffle(&mut rng);
            for (pos, &i) in members.iter().enumerate() {
                assignment[i] = pos % cv.folds;
            }
        }
    } else {
        let mut indices: Vec<usize> = (0..dataset.n()).collect();
        indices.shuffle(&mut rng);
        for (pos, &i) in indices.iter().enumerate() {
            assignment[i] = pos % cv.folds;
        }
    }
    Ok(assignment)
}

/// Cross-validation summary. `sd` is the standard deviation of the fold
/// rates; `stderr` is sd / sqrt(folds). Both are reported because the
/// bundled result tables use both conventions.
#[derive(Debug, Clone)]
pub struct CvResult {
    pub mean: f64,
    pub sd: f64,
    pub stderr: f64,
    pub fold_rates: Vec<f64>,
}

pub fn cross_validate(
    dataset: &Dataset,
    classifier: &ClassifierSpec,
    cv: &CvSpec,
) -> Result<CvResult> {
    let assignment = assign_folds(dataset, cv)?;
    let mut fold_rates = Vec::with_capacity(cv.folds);
    for fold in 0..cv.folds {
        let train_idx: Vec<usize> = (0..dataset.n()).filter(|&i| assignment[i] != fold).collect();
        let test_idx: Vec<usize> = (0..dataset.n()).filter(|&i| assignment[i] == fold).collect();
        if test_idx.is_empty() || train_idx.is_empty() {
            return Err(Error::InfeasibleFolds(format!("fold {fold} degenerate")));
        }
        let train = dataset.subset(&train_idx)?;
        let test = dataset.subset(&test_idx)?;
        let fitted = train_classifier(&train, classifier, cv.standardize)?;
        let rows: Vec<Vec<f64>> = (0..test.n()).map(|i| test.row(i)).collect();
        let predicted = fitted.predict(&rows)?;
        fold_rates.push(misclassification_rate(&predicted, test.labels())?);
    }
    let mean = fold_rates.iter().sum::<f64>() / fold_rates.len() as f64;
    let var = fold_rates
        .iter()
        .map(|r| (r - mean) * (r - mean))
        .sum::<f64>()
        / (fold_rates.len() - 1) as f64;
    let sd = var.sqrt();
    Ok(CvResult {
        mean,
        sd,
        stderr: sd / (fold_rates.len() as f64).sqrt(),
        fold_rates,
    })
}

/// Rescale per-classifier error rates for one setting against a reference
/// rate: (rate - reference) / mean(rates). Positive means worse than the
/// reference. Undefined (None) when the average rate is zero.
pub fn relative_performance(rates: &[f64], reference_rate: f64) -> Option<Vec<f64>> {
    if rates.is_empty() {
        return None;
    }
    let mean = rates.iter().sum::<f64>() / rates.len() as f64;
    if mean <= 0.0 {
        return None;
    }
    Some(rates.iter().map(|r| (r - reference_rate) / mean).collect())
}

/// One classifier's result on one replication of one cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchmarkRecord {
    pub classifier_name: String,
    pub cell: ScenarioSpec,
    pub replication: usize,
    pub misclassification_rate: f64,
    pub fit_millis: u64,
}

/// A failed cell/replication, kept so the run can continue.
#[derive(Debug, Clone)]
pub struct BenchmarkFailure {
    pub cell_label: String,
    pub replication: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default)]
pub struct BenchmarkRun {
    pub records: Vec<BenchmarkRecord>,
    pub failures: Vec<BenchmarkFailure>,
}

/// Run every (cell, replication): regenerate data with a child seed, fit
/// each classifier on the training half and score it on the test half.
/// Deterministic given the master seed, independent of scheduling.
pub fn run_benchmark(
    grid: &[ScenarioSpec],
    classifiers: &[ClassifierSpec],
    replications: usize,
    seed: u64,
) -> Result<BenchmarkRun> {
    if grid.is_empty() {
        return Err(Error::InvalidScenario("empty benchmark grid".into()));
    }
    if classifiers.is_empty() {
        return Err(Error::InvalidParameter("no classifiers requested".into()));
    }
    let tasks: Vec<(usize, usize)> = (0..grid.len())
        .flat_map(|c| (0..replications).map(move |r| (c, r)))
        .collect();

    let results: Vec<std::result::Result<Vec<BenchmarkRecord>, BenchmarkFailure>> = tasks
        .par_iter()
        .map(|&(cell_idx, rep)| {
            let cell_seed = derive_seed(derive_seed(seed, cell_idx as u64), rep as u64);
            let mut cell = grid[cell_idx].clone();
            cell.seed = cell_seed;
            run_cell_replication(&cell, classifiers, rep).map_err(|e| BenchmarkFailure {
                cell_label: cell.label(),
                replication: rep,
                message: e.to_string(),
            })
        })
        .collect();

    let mut run = BenchmarkRun::default();
    for result in results {
        match result {
            Ok(records) => run.records.extend(records),
            Err(failure) => run.failures.push(failure),
        }
    }
    Ok(run)
}

fn run_cell_replication(
    cell: &ScenarioSpec,
    classifiers: &[ClassifierSpec],
    replication: usize,
) -> Result<Vec<BenchmarkRecord>> {
    let (train, test) = generate(cell)?;
    let test_rows: Vec<Vec<f64>> = (0..test.n()).map(|i| test.row(i)).collect();
    classifiers
        .iter()
        .enumerate()
        .map(|(ci, spec)| {
            // Give the fit its own deterministic restart seed; generation
            // is standardized already, so no further scaling here.
            let spec = match spec {
                ClassifierSpec::Vwqc(config) => ClassifierSpec::Vwqc(FitConfig {
                    seed: derive_seed(cell.seed, 1000 + ci as u64),
                    ..config.clone()
                }),
                other => other.clone(),
            };
            let started = Instant::now();
            let fitted = train_classifier(&train, &spec, false)?;
            let fit_millis = started.elapsed().as_millis() as u64;
            let predicted = fitted.predict(&test_rows)?;
            Ok(BenchmarkRecord {
                classifier_name: spec.name().to_string(),
                cell: cell.clone(),
                replication,
                misclassification_rate: misclassification_rate(&predicted, test.labels())?,
                fit_millis,
            })
        })
        .collect()
}

/// Per-(cell, classifier) aggregate of a benchmark run.
#[derive(Debug, Clone, Serialize)]
pub struct BenchmarkSummary {
    pub cell_label: String,
    pub classifier_name: String,
    pub replications: usize,
    pub mean_rate: f64,
    pub sd_rate: f64,
}

pub fn summarize(records: &[BenchmarkRecord]) -> Vec<BenchmarkSummary> {
    let mut groups: Vec<(String, String, Vec<f64>)> = Vec::new();
    for record in records {
        let label = record.cell.label();
        match groups
            .iter_mut()
            .find(|(l, c, _)| *l == label && *c == record.classifier_name)
        {
            Some((_, _, rates)) => rates.push(record.misclassification_rate),
            None => groups.push((
                label,
                record.classifier_name.clone(),
                vec![record.misclassification_rate],
            )),
        }
    }
    groups
        .into_iter()
        .map(|(cell_label, classifier_name, rates)| {
            let n = rates.len();
            let mean = rates.iter().sum::<f64>() / n as f64;
            let sd = if n > 1 {
                (rates.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / (n - 1) as f64)
                    .sqrt()
            } else {
                0.0
            };
            BenchmarkSummary {
                cell_label,
                classifier_name,
                replications: n,
                mean_rate: mean,
                sd_rate: sd,
            }
        })
        .collect()
}

/// Write per-replication records with the documented stable column set.
pub fn write_records_csv(path: impl AsRef<Path>, records: &[BenchmarkRecord]) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path)
        .map_err(|e| Error::io(path, std::io::Error::new(std::io::ErrorKind::Other, e)))?;
    w.write_record([
        "scenario",
        "kind",
        "n",
        "p",
        "relevant",
        "correlated",
        "classifier",
        "replication",
        "rate",
        "fit_millis",
    ])?;
    for r in records {
        w.write_record([
            r.cell.label(),
            r.cell.kind.to_string(),
            r.cell.n.to_string(),
            r.cell.p.to_string(),
            format!("{}", r.cell.relevant_fraction),
            r.cell.correlated.to_string(),
            r.classifier_name.clone(),
            r.replication.to_string(),
            format!("{}", r.misclassification_rate),
            r.fit_millis.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_summary_csv(path: impl AsRef<Path>, records: &[BenchmarkRecord]) -> Result<()> {
    let path = path.as_ref();
    let summaries = summarize(records);
    let mut w = csv::Writer::from_path(path)
        .map_err(|e| Error::io(path, std::io::Error::new(std::io::ErrorKind::Other, e)))?;
    w.write_record([
        "scenario",
        "classifier",
        "replications",
        "mean_rate",
        "sd_rate",
    ])?;
    for s in summaries {
        w.write_record([
            s.cell_label,
            s.classifier_name,
            s.replications.to_string(),
            format!("{}", s.mean_rate),
            format!("{}", s.sd_rate),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simgen::ScenarioKind;

    #[test]
    fn misclassification_examples() {
        assert_eq!(misclassification_rate(&[0, 1, 2], &[0, 1, 2]).unwrap(), 0.0);
        assert_eq!(misclassification_rate(&[1, 0], &[0, 1]).unwrap(), 1.0);
        assert_eq!(
            misclassification_rate(&[0, 0, 0, 1], &[0, 0, 0, 0]).unwrap(),
            0.25
        );
        assert!(misclassification_rate(&[0], &[0, 1]).is_err());
        assert!(misclassification_rate(&[], &[]).is_err());
    }

    fn toy_dataset(n_per_class: usize) -> Dataset {
        let n = 2 * n_per_class;
        let col: Vec<f64> = (0..n)
            .map(|i| i as f64 * 0.1 + if i >= n_per_class { 10.0 } else { 0.0 })
            .collect();
        let labels: Vec<usize> = (0..n).map(|i| usize::from(i >= n_per_class)).collect();
        Dataset::from_columns(vec![col], labels, 2).unwrap()
    }

    #[test]
    fn folds_partition_and_stratify() {
        let d = toy_dataset(25);
        let cv = CvSpec {
            folds: 10,
            seed: 5,
            ..CvSpec::default()
        };
        let assignment = assign_folds(&d, &cv).unwrap();
        assert_eq!(assignment.len(), d.n());
        let mut per_fold_class = vec![[0usize; 2]; 10];
        for (i, &f) in assignment.iter().enumerate() {
            assert!(f < 10);
            per_fold_class[f][d.labels()[i]] += 1;
        }
        for counts in &per_fold_class {
            // 25 members over 10 folds: 2 or 3 per class per fold.
            assert!(counts[0] == 2 || counts[0] == 3);
            assert!(counts[1] == 2 || counts[1] == 3);
        }
    }

    #[test]
    fn infeasible_folds_are_rejected() {
        let d = toy_dataset(3);
        let cv = CvSpec {
            folds: 5,
            ..CvSpec::default()
        };
        assert!(matches!(
            assign_folds(&d, &cv),
            Err(Error::InfeasibleFolds(_))
        ));
    }

    #[test]
    fn constant_predictor_scores_half_on_balanced_data() {
        // A single-class "memorizing" model can only predict class 0; on a
        // 50/50 two-class set the held-out rate is about one half.
        let d = toy_dataset(20);
        // Centroid on collapsed labels: force all predictions to class 0 by
        // evaluating a centroid model with both centers equal.
        let model = CentroidModel {
            means: vec![vec![0.0], vec![0.0]],
            label_names: vec!["0".into(), "1".into()],
        };
        let rows: Vec<Vec<f64>> = (0..d.n()).map(|i| d.row(i)).collect();
        let predicted = predict_centroid(&model, &rows).unwrap();
        let rate = misclassification_rate(&predicted, d.labels()).unwrap();
        assert!((rate - 0.5).abs() < 1e-12);
    }

    #[test]
    fn cross_validate_separable_data_is_perfect() {
        let d = toy_dataset(20);
        for spec in [
            ClassifierSpec::Median,
            ClassifierSpec::Centroid,
            ClassifierSpec::Vwqc(FitConfig {
                restarts: 2,
                ..FitConfig::default()
            }),
        ] {
            let result = cross_validate(&d, &spec, &CvSpec::default()).unwrap();
            assert_eq!(result.mean, 0.0, "{}", spec.name());
            assert_eq!(result.fold_rates.len(), 10);
        }
    }

    #[test]
    fn standardization_divisors_come_from_train_folds_only() {
        // Inject a huge sentinel scale into exactly the rows of one fold;
        // the divisors used when that fold is held out must be unaffected.
        let d = toy_dataset(10);
        let cv = CvSpec {
            folds: 5,
            standardize: true,
            seed: 3,
            ..CvSpec::default()
        };
        let assignment = assign_folds(&d, &cv).unwrap();
        let held_out = 0usize;
        let mut columns = vec![d.column(0).to_vec()];
        for (i, &f) in assignment.iter().enumerate() {
            if f == held_out {
                columns[0][i] *= 1e6;
            }
        }
        let poisoned =
            Dataset::from_columns(columns, d.labels().to_vec(), d.class_count()).unwrap();

        let train_idx: Vec<usize> = (0..d.n()).filter(|&i| assignment[i] != held_out).collect();
        let clean_div = d.subset(&train_idx).unwrap().pooled_within_class_sd();
        let poisoned_div = poisoned.subset(&train_idx).unwrap().pooled_within_class_sd();
        assert_eq!(clean_div, poisoned_div);
    }

    #[test]
    fn relative_performance_formula() {
        assert_eq!(
            relative_performance(&[0.3, 0.3, 0.3], 0.3).unwrap(),
            vec![0.0, 0.0, 0.0]
        );
        let scores = relative_performance(&[0.2, 0.4], 0.2).unwrap();
        assert!(scores[0].abs() < 1e-12);
        assert!((scores[1] - 0.2 / 0.3).abs() < 1e-12);
        assert!(relative_performance(&[0.0, 0.0], 0.0).is_none());
    }

    #[test]
    fn benchmark_emits_expected_record_count_and_is_deterministic() {
        let cell = ScenarioSpec {
            kind: ScenarioKind::Exp,
            n: 40,
            p: 3,
            relevant_fraction: 1.0,
            correlated: false,
            seed: 0,
            standardize: false,
            shift_after_transform: false,
        };
        let classifiers = [ClassifierSpec::Median, ClassifierSpec::Centroid];
        let run1 = run_benchmark(&[cell.clone()], &classifiers, 3, 17).unwrap();
        assert_eq!(run1.records.len(), 6);
        assert!(run1.failures.is_empty());
        let run2 = run_benchmark(&[cell], &classifiers, 3, 17).unwrap();
        let rates1: Vec<f64> = run1.records.iter().map(|r| r.misclassification_rate).collect();
        let rates2: Vec<f64> = run2.records.iter().map(|r| r.misclassification_rate).collect();
        assert_eq!(rates1, rates2);
    }
}
