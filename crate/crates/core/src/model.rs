//! Fitted classifier state and its on-disk representation.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Fitted variable-wise quantile classifier.
///
/// Holds everything prediction needs: per-variable levels and scales, the
/// per-class per-variable quantiles, and optional standardization divisors.
/// Immutable after construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileModel {
    /// Per-variable quantile level, strictly inside (0, 1).
    pub theta: Vec<f64>,
    /// Per-variable scale weight in (0, lambda_cap].
    pub lambda: Vec<f64>,
    /// `quantiles[k][j]`: theta_j-quantile of variable j within class k.
    pub quantiles: Vec<Vec<f64>>,
    pub class_count: usize,
    /// Per-variable scale divisors applied to observations before scoring.
    pub standardization: Option<Vec<f64>>,
    /// Upper bound imposed on every lambda during fitting.
    pub lambda_cap: f64,
    /// Raw label strings, indexed by class; carried through from training.
    pub label_names: Vec<String>,
}

impl QuantileModel {
    pub fn p(&self) -> usize {
        self.theta.len()
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.theta.len();
        if self.lambda.len() != p {
            return Err(Error::DimensionMismatch {
                got: self.lambda.len(),
                expected: p,
            });
        }
        if self.class_count == 0 {
            return Err(Error::InvalidParameter("class_count must be >= 1".into()));
        }
        if self.quantiles.len() != self.class_count {
            return Err(Error::DimensionMismatch {
                got: self.quantiles.len(),
                expected: self.class_count,
            });
        }
        if !(self.lambda_cap > 0.0) {
            return Err(Error::InvalidParameter("lambda_cap must be > 0".into()));
        }
        for &t in &self.theta {
            if !(t > 0.0 && t < 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "theta must be in (0,1), got {t}"
                )));
            }
        }
        for &l in &self.lambda {
            if !(l > 0.0 && l <= self.lambda_cap) {
                return Err(Error::InvalidParameter(format!(
                    "lambda must be in (0, {}], got {l}",
                    self.lambda_cap
                )));
            }
        }
        for row in &self.quantiles {
            if row.len() != p {
                return Err(Error::DimensionMismatch {
                    got: row.len(),
                    expected: p,
                });
            }
            if row.iter().any(|q| !q.is_finite()) {
                return Err(Error::InvalidParameter("non-finite quantile".into()));
            }
        }
        if let Some(div) = &self.standardization {
            if div.len() != p {
                return Err(Error::DimensionMismatch {
                    got: div.len(),
                    expected: p,
                });
            }
            if div.iter().any(|&d| !(d > 0.0) || !d.is_finite()) {
                return Err(Error::InvalidParameter(
                    "standardization divisors must be positive and finite".into(),
                ));
            }
        }
        if self.label_names.len() != self.class_count {
            return Err(Error::DimensionMismatch {
                got: self.label_names.len(),
                expected: self.class_count,
            });
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    version: u32,
    #[serde(flatten)]
    model: QuantileModel,
}

/// Write a model as versioned JSON. Floats round-trip exactly (shortest
/// representation that parses back to the same f64).
pub fn save_model(model: &QuantileModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    model.validate()?;
    let file = ModelFile {
        version: MODEL_FORMAT_VERSION,
        model: model.clone(),
    };
    let text = serde_json::to_string_pretty(&file)
        .map_err(|e| Error::CorruptModel(e.to_string()))?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<QuantileModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: ModelFile =
        serde_json::from_str(&text).map_err(|e| Error::CorruptModel(e.to_string()))?;
    if file.version != MODEL_FORMAT_VERSION {
        return Err(Error::UnsupportedVersion(file.version));
    }
    file.model.validate()?;
    Ok(file.model)
}
