//! Quantile-family baseline classifiers: median, centroid, and the
//! original single-theta quantile classifier (OQC) with skew-direction
//! preprocessing.

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::model::QuantileModel;
use crate::quantile::{empirical_quantile, phi, sorted, DiscrepancyParams};
use crate::vwqc::argmin;

/// Skewness statistic driving the OQC sign flip.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SkewnessKind {
    /// Galton's quartile skewness (Q3 + Q1 - 2*Q2) / (Q3 - Q1).
    GaltonQuartile,
    /// Sample third standardized moment.
    Moment,
}

#[derive(Debug, Clone)]
pub struct OqcConfig {
    pub theta_grid: Vec<f64>,
    pub skewness: SkewnessKind,
}

impl Default for OqcConfig {
    fn default() -> Self {
        OqcConfig {
            theta_grid: default_theta_grid(),
            skewness: SkewnessKind::GaltonQuartile,
        }
    }
}

/// {0.02, 0.04, ..., 0.98}
pub fn default_theta_grid() -> Vec<f64> {
    (1..=49).map(|i| i as f64 * 0.02).collect()
}

/// Original quantile classifier: one theta shared by all variables,
/// chosen on training accuracy after orienting every variable's skew in
/// the same direction.
#[derive(Debug, Clone, PartialEq)]
pub struct OqcModel {
    pub theta_star: f64,
    /// Per-variable sign in {-1, +1} applied before scoring.
    pub flip_signs: Vec<f64>,
    /// Class quantiles at theta_star, computed on flipped data.
    pub quantiles: Vec<Vec<f64>>,
    pub theta_grid: Vec<f64>,
    pub label_names: Vec<String>,
}

impl OqcModel {
    pub fn p(&self) -> usize {
        self.flip_signs.len()
    }
}

/// Median classifier expressed as a pinned quantile model: theta = 0.5,
/// lambda = 1, locations at the class medians. Predictions go through the
/// same code path as the fitted classifier, so the equivalence is exact.
pub fn fit_median(dataset: &Dataset) -> Result<QuantileModel> {
    dataset.check_classes_nonempty()?;
    let p = dataset.p();
    let quantiles = (0..dataset.class_count())
        .map(|k| {
            (0..p)
                .map(|j| empirical_quantile(&sorted(&dataset.class_column(k, j)), 0.5))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    let model = QuantileModel {
        theta: vec![0.5; p],
        lambda: vec![1.0; p],
        quantiles,
        class_count: dataset.class_count(),
        standardization: None,
        lambda_cap: 1e6,
        label_names: dataset.label_names().to_vec(),
    };
    model.validate()?;
    Ok(model)
}

/// Nearest class mean under squared Euclidean distance.
#[derive(Debug, Clone, PartialEq)]
pub struct CentroidModel {
    /// `means[k][j]`: mean of variable j within class k.
    pub means: Vec<Vec<f64>>,
    pub label_names: Vec<String>,
}

pub fn fit_centroid(dataset: &Dataset) -> Result<CentroidModel> {
    dataset.check_classes_nonempty()?;
    let sizes = dataset.class_sizes();
    let mut means = vec![vec![0.0; dataset.p()]; dataset.class_count()];
    for j in 0..dataset.p() {
        for (i, &v) in dataset.column(j).iter().enumerate() {
            means[dataset.labels()[i]][j] += v;
        }
    }
    for (k, row) in means.iter_mut().enumerate() {
        for m in row.iter_mut() {
            *m /= sizes[k] as f64;
        }
    }
    Ok(CentroidModel {
        means,
        label_names: dataset.label_names().to_vec(),
    })
}

pub fn predict_centroid(model: &CentroidModel, observations: &[Vec<f64>]) -> Result<Vec<usize>> {
    let p = model.means[0].len();
    observations
        .iter()
        .map(|row| {
            if row.len() != p {
                return Err(Error::DimensionMismatch {
                    got: row.len(),
                    expected: p,
                });
            }
            let scores: Vec<f64> = model
                .means
                .iter()
                .map(|center| {
                    row.iter()
                        .zip(center)
                        .map(|(&z, &m)| (z - m) * (z - m))
                        .sum()
                })
                .collect();
            Ok(argmin(&scores))
        })
        .collect()
}

fn galton_skewness(sorted_sample: &[f64]) -> f64 {
    let q1 = empirical_quantile(sorted_sample, 0.25).expect("nonempty");
    let q2 = empirical_quantile(sorted_sample, 0.5).expect("nonempty");
    let q3 = empirical_quantile(sorted_sample, 0.75).expect("nonempty");
    if q3 - q1 <= 0.0 {
        0.0
    } else {
        (q3 + q1 - 2.0 * q2) / (q3 - q1)
    }
}

fn moment_skewness(sample: &[f64]) -> f64 {
    let n = sample.len() as f64;
    let mean = sample.iter().sum::<f64>() / n;
    let m2 = sample.iter().map(|&x| (x - mean).powi(2)).sum::<f64>() / n;
    if m2 <= 0.0 {
        return 0.0;
    }
    let m3 = sample.iter().map(|&x| (x - mean).powi(3)).sum::<f64>() / n;
    m3 / m2.powf(1.5)
}

/// Per-variable sign flips orienting the class-averaged within-class
/// skewness to the right. Degenerate (zero-spread) classes contribute 0,
/// and an overall zero average keeps the +1 convention.
pub fn skew_flip_signs(dataset: &Dataset, kind: SkewnessKind) -> Vec<f64> {
    (0..dataset.p())
        .map(|j| {
            let avg: f64 = (0..dataset.class_count())
                .map(|k| {
                    let col = dataset.class_column(k, j);
                    match kind {
                        SkewnessKind::GaltonQuartile => galton_skewness(&sorted(&col)),
                        SkewnessKind::Moment => moment_skewness(&col),
                    }
                })
                .sum::<f64>()
                / dataset.class_count() as f64;
            if avg < 0.0 {
                -1.0
            } else {
                1.0
            }
        })
        .collect()
}

fn oqc_scores(
    observation: &[f64],
    flip_signs: &[f64],
    theta: f64,
    quantiles: &[Vec<f64>],
) -> Vec<f64> {
    quantiles
        .iter()
        .map(|row| {
            observation
                .iter()
                .enumerate()
                .map(|(j, &z)| {
                    let params = DiscrepancyParams {
                        theta,
                        xi: row[j],
                    };
                    phi(flip_signs[j] * z, params)
                })
                .sum()
        })
        .collect()
}

/// Fit the original quantile classifier: flip skew directions, then pick
/// the grid theta with the best training classification rate. Ties go to
/// the theta closest to 0.5, then the smaller one.
pub fn fit_oqc(dataset: &Dataset, config: &OqcConfig) -> Result<OqcModel> {
    dataset.check_classes_nonempty()?;
    if dataset.class_count() < 2 {
        return Err(Error::InvalidParameter(
            "OQC requires at least two classes".into(),
        ));
    }
    if config.theta_grid.is_empty() {
        return Err(Error::InvalidParameter("empty theta grid".into()));
    }
    let flip_signs = skew_flip_signs(dataset, config.skewness);

    // Pre-sort flipped per-class columns once; every grid theta reuses them.
    let sorted_cols: Vec<Vec<Vec<f64>>> = (0..dataset.class_count())
        .map(|k| {
            (0..dataset.p())
                .map(|j| {
                    let col: Vec<f64> = dataset
                        .class_column(k, j)
                        .iter()
                        .map(|&v| flip_signs[j] * v)
                        .collect();
                    sorted(&col)
                })
                .collect()
        })
        .collect();

    let rows: Vec<Vec<f64>> = (0..dataset.n()).map(|i| dataset.row(i)).collect();
    let mut best: Option<(usize, f64)> = None; // (correct count, theta)
    for &theta in &config.theta_grid {
        if !(theta > 0.0 && theta < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "grid theta must be in (0,1), got {theta}"
            )));
        }
        let quantiles: Vec<Vec<f64>> = sorted_cols
            .iter()
            .map(|class| {
                class
                    .iter()
                    .map(|col| empirical_quantile(col, theta))
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<_>>()?;
        let correct = rows
            .iter()
            .zip(dataset.labels())
            .filter(|(row, &label)| {
                argmin(&oqc_scores(row, &flip_signs, theta, &quantiles)) == label
            })
            .count();
        let better = match best {
            None => true,
            Some((best_correct, best_theta)) => {
                correct > best_correct
                    || (correct == best_correct
                        && ((theta - 0.5).abs() < (best_theta - 0.5).abs() - 1e-12
                            || ((theta - 0.5).abs() - (best_theta - 0.5).abs()).abs() <= 1e-12
                                && theta < best_theta))
            }
        };
        if better {
            best = Some((correct, theta));
        }
    }
    let (_, theta_star) = best.expect("nonempty grid");

    let quantiles: Vec<Vec<f64>> = sorted_cols
        .iter()
        .map(|class| {
            class
                .iter()
                .map(|col| empirical_quantile(col, theta_star))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;

    Ok(OqcModel {
        theta_star,
        flip_signs,
        quantiles,
        theta_grid: config.theta_grid.clone(),
        label_names: dataset.label_names().to_vec(),
    })
}

pub fn predict_oqc(model: &OqcModel, observations: &[Vec<f64>]) -> Result<Vec<usize>> {
    observations
        .iter()
        .map(|row| {
            if row.len() != model.p() {
                return Err(Error::DimensionMismatch {
                    got: row.len(),
                    expected: model.p(),
                });
            }
            Ok(argmin(&oqc_scores(
                row,
                &model.flip_signs,
                model.theta_star,
                &model.quantiles,
            )))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vwqc::predict;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn point_classes() -> Dataset {
        Dataset::from_columns(vec![vec![0.0, 10.0]], vec![0, 1], 2).unwrap()
    }

    #[test]
    fn median_prefers_nearer_class() {
        let model = fit_median(&point_classes()).unwrap();
        assert_eq!(predict(&model, &[vec![4.0]]).unwrap(), vec![0]);
    }

    #[test]
    fn centroid_prefers_nearer_mean() {
        let model = fit_centroid(&point_classes()).unwrap();
        assert_eq!(predict_centroid(&model, &[vec![6.0]]).unwrap(), vec![1]);
    }

    #[test]
    fn median_equals_pinned_vwqc_model() {
        // fit_median *is* a QuantileModel with theta = 0.5, lambda = 1 and
        // median locations, so the equivalence is by construction; check
        // predictions against a manually pinned model on random data.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let n = 12;
            let cols: Vec<Vec<f64>> = (0..3)
                .map(|_| (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect())
                .collect();
            let labels: Vec<usize> = (0..n).map(|i| i % 2).collect();
            let d = Dataset::from_columns(cols, labels, 2).unwrap();
            let model = fit_median(&d).unwrap();
            assert!(model.theta.iter().all(|&t| t == 0.5));
            assert!(model.lambda.iter().all(|&l| l == 1.0));
            let rows: Vec<Vec<f64>> = (0..n).map(|i| d.row(i)).collect();
            let manual = QuantileModel {
                quantiles: (0..2)
                    .map(|k| {
                        (0..3)
                            .map(|j| {
                                empirical_quantile(&sorted(&d.class_column(k, j)), 0.5).unwrap()
                            })
                            .collect()
                    })
                    .collect(),
                ..model.clone()
            };
            assert_eq!(
                predict(&model, &rows).unwrap(),
                predict(&manual, &rows).unwrap()
            );
        }
    }

    #[test]
    fn galton_skewness_of_symmetric_quartiles_is_zero() {
        let s = sorted(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]);
        assert_eq!(galton_skewness(&s), 0.0);
    }

    #[test]
    fn zero_variance_column_flips_positive() {
        let d = Dataset::from_columns(
            vec![vec![2.0; 6], vec![0.0, 1.0, 5.0, 0.1, 1.1, 5.1]],
            vec![0, 0, 0, 1, 1, 1],
            2,
        )
        .unwrap();
        for kind in [SkewnessKind::GaltonQuartile, SkewnessKind::Moment] {
            assert_eq!(skew_flip_signs(&d, kind)[0], 1.0);
        }
    }

    #[test]
    fn point_mass_classes_select_theta_half() {
        // Every theta classifies perfectly, so the tie rule lands on 0.5.
        let d = Dataset::from_columns(
            vec![vec![0.0, 0.0, 10.0, 10.0]],
            vec![0, 0, 1, 1],
            2,
        )
        .unwrap();
        let model = fit_oqc(&d, &OqcConfig::default()).unwrap();
        assert_eq!(model.theta_star, 0.5);
    }

    #[test]
    fn oqc_flip_involution() {
        // Negating a variable in the data flips its sign estimate and
        // leaves predictions unchanged, for skewed-enough variables.
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let n = 40;
        let col: Vec<f64> = (0..n)
            .map(|i| {
                let e: f64 = rng.gen_range(0.0f64..1.0);
                -e.ln() + if i >= n / 2 { 1.0 } else { 0.0 }
            })
            .collect();
        let labels: Vec<usize> = (0..n).map(|i| usize::from(i >= n / 2)).collect();
        let d = Dataset::from_columns(vec![col.clone()], labels.clone(), 2).unwrap();
        let negated =
            Dataset::from_columns(vec![col.iter().map(|v| -v).collect()], labels, 2).unwrap();

        let m1 = fit_oqc(&d, &OqcConfig::default()).unwrap();
        let m2 = fit_oqc(&negated, &OqcConfig::default()).unwrap();
        assert_eq!(m1.flip_signs[0], 1.0);
        assert_eq!(m2.flip_signs[0], -1.0);

        let test_rows: Vec<Vec<f64>> = (0..10).map(|i| vec![0.3 * i as f64]).collect();
        let neg_rows: Vec<Vec<f64>> = test_rows.iter().map(|r| vec![-r[0]]).collect();
        assert_eq!(
            predict_oqc(&m1, &test_rows).unwrap(),
            predict_oqc(&m2, &neg_rows).unwrap()
        );
    }

    #[test]
    fn oqc_at_half_matches_median_classifier() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let n = 30;
        // Symmetric data so flips stay +1; force the grid to {0.5}.
        let cols: Vec<Vec<f64>> = (0..2)
            .map(|_| {
                (0..n)
                    .map(|i| rng.gen_range(-1.0..1.0) + if i >= n / 2 { 2.0 } else { 0.0 })
                    .collect()
            })
            .collect();
        let labels: Vec<usize> = (0..n).map(|i| usize::from(i >= n / 2)).collect();
        let d = Dataset::from_columns(cols, labels, 2).unwrap();
        let config = OqcConfig {
            theta_grid: vec![0.5],
            ..OqcConfig::default()
        };
        let oqc = fit_oqc(&d, &config).unwrap();
        assert!(oqc.flip_signs.iter().all(|&s| s == 1.0));
        let median = fit_median(&d).unwrap();
        let rows: Vec<Vec<f64>> = (0..n).map(|i| d.row(i)).collect();
        assert_eq!(
            predict_oqc(&oqc, &rows).unwrap(),
            predict(&median, &rows).unwrap()
        );
    }

    #[test]
    fn oqc_requires_two_classes() {
        let d = Dataset::from_columns(vec![vec![1.0, 2.0]], vec![0, 0], 1).unwrap();
        assert!(fit_oqc(&d, &OqcConfig::default()).is_err());
    }
}
