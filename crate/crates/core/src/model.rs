//! Versioned on-disk model format: preprocessing parameters, loadings,
//! eigenvalues, score covariance, control limits and the configuration
//! digest, as one JSON document with full-precision floats.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::error::{Error, Result};
use crate::monitor::ControlLimits;
use crate::pca::{PcaModel, PreprocessParams};

pub const MODEL_FORMAT: &str = "mbda-model/1";

/// A calibrated model bundled with its control limits.
#[derive(Debug, Clone)]
pub struct SavedModel {
    pub model: PcaModel,
    pub limits: ControlLimits,
    pub config_digest: String,
}

#[derive(Serialize, Deserialize)]
struct ModelRepr {
    format: String,
    config_digest: String,
    n_calibration: u64,
    m: usize,
    a: usize,
    mean: Vec<f64>,
    scale: Vec<f64>,
    weight: Vec<f64>,
    constant_columns: Vec<usize>,
    loadings_row_major: Vec<f64>,
    eigenvalues: Vec<f64>,
    scores_cov_row_major: Vec<f64>,
    captured_variance_fraction: f64,
    total_variance: f64,
    ucl_d: f64,
    ucl_q: f64,
    ucl_percentile: f64,
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    let mut out = Vec::with_capacity(m.nrows() * m.ncols());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push(m[(i, j)]);
        }
    }
    out
}

fn from_row_major(data: &[f64], rows: usize, cols: usize) -> Result<DMatrix<f64>> {
    if data.len() != rows * cols {
        return Err(Error::Data(format!(
            "model file: expected {}x{} matrix, found {} values",
            rows,
            cols,
            data.len()
        )));
    }
    Ok(DMatrix::from_row_slice(rows, cols, data))
}

impl SavedModel {
    pub fn to_json(&self) -> String {
        let repr = ModelRepr {
            format: MODEL_FORMAT.to_string(),
            config_digest: self.config_digest.clone(),
            n_calibration: self.model.n_calibration,
            m: self.model.n_features(),
            a: self.model.n_components,
            mean: self.model.preprocess.mean.clone(),
            scale: self.model.preprocess.scale.clone(),
            weight: self.model.preprocess.weight.clone(),
            constant_columns: self.model.preprocess.constant_columns.clone(),
            loadings_row_major: row_major(&self.model.loadings),
            eigenvalues: self.model.eigenvalues.clone(),
            scores_cov_row_major: row_major(&self.model.scores_cov),
            captured_variance_fraction: self.model.captured_variance_fraction,
            total_variance: self.model.total_variance,
            ucl_d: self.limits.ucl_d,
            ucl_q: self.limits.ucl_q,
            ucl_percentile: self.limits.percentile,
        };
        serde_json::to_string_pretty(&repr).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<SavedModel> {
        let repr: ModelRepr =
            serde_json::from_str(text).map_err(|e| Error::Data(format!("model file: {}", e)))?;
        if repr.format != MODEL_FORMAT {
            return Err(Error::Data(format!(
                "model file: unsupported format '{}', expected '{}'",
                repr.format, MODEL_FORMAT
            )));
        }
        if repr.mean.len() != repr.m || repr.scale.len() != repr.m || repr.weight.len() != repr.m {
            return Err(Error::Data("model file: preprocessing vectors disagree with m".into()));
        }
        if repr.eigenvalues.len() != repr.a {
            return Err(Error::Data("model file: eigenvalue count disagrees with a".into()));
        }
        let loadings = from_row_major(&repr.loadings_row_major, repr.m, repr.a)?;
        let scores_cov = from_row_major(&repr.scores_cov_row_major, repr.a, repr.a)?;
        Ok(SavedModel {
            model: PcaModel {
                preprocess: PreprocessParams {
                    mean: repr.mean,
                    scale: repr.scale,
                    weight: repr.weight,
                    constant_columns: repr.constant_columns,
                },
                loadings,
                eigenvalues: repr.eigenvalues,
                n_components: repr.a,
                scores_cov,
                captured_variance_fraction: repr.captured_variance_fraction,
                total_variance: repr.total_variance,
                n_calibration: repr.n_calibration,
            },
            limits: ControlLimits {
                ucl_d: repr.ucl_d,
                ucl_q: repr.ucl_q,
                percentile: repr.ucl_percentile,
                n_calibration: repr.n_calibration,
            },
            config_digest: repr.config_digest,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path.display().to_string(), e))
    }

    pub fn load(path: &Path) -> Result<SavedModel> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        SavedModel::from_json(&text)
    }
}
