use nalgebra::{DMatrix, DVector};

use super::channels::ChannelBasis;
use super::roi::Roi;
use crate::error::{Error, Result};

/// A trained Hotelling template in channel space.
#[derive(Debug, Clone, PartialEq)]
pub struct ObserverModel {
    pub template: Vec<f64>,
    pub mean_sp: Vec<f64>,
    pub mean_sa: Vec<f64>,
    /// Pooled covariance `½(S_sp + S_sa)`, row-major J × J.
    pub covariance: Vec<f64>,
}

impl ObserverModel {
    pub fn n_channels(&self) -> usize {
        self.template.len()
    }
}

fn mean_and_scatter(samples: &[Vec<f64>], j: usize) -> (DVector<f64>, DMatrix<f64>) {
    let n = samples.len() as f64;
    let mut mean = DVector::zeros(j);
    for s in samples {
        mean += DVector::from_column_slice(s);
    }
    mean /= n;
    let mut cov = DMatrix::zeros(j, j);
    for s in samples {
        let d = DVector::from_column_slice(s) - &mean;
        cov += &d * d.transpose();
    }
    cov /= n - 1.0;
    (mean, cov)
}

/// Trains a CHO on already-channelized samples.
///
/// The template solves `S w = mean_sp − mean_sa`; a singular `S` is handled
/// through its pseudo-inverse.
pub fn train_cho_channelized(sp: &[Vec<f64>], sa: &[Vec<f64>]) -> Result<ObserverModel> {
    if sp.len() < 2 || sa.len() < 2 {
        return Err(Error::InsufficientSamples(format!(
            "CHO training needs at least 2 samples per class, got {} SP and {} SA",
            sp.len(),
            sa.len()
        )));
    }
    let j = sp[0].len();
    if j == 0 || sp.iter().chain(sa).any(|s| s.len() != j) {
        return Err(Error::ShapeMismatch {
            expected: format!("{j} channels per sample"),
            actual: "ragged channel vectors".into(),
        });
    }
    let (mean_sp, cov_sp) = mean_and_scatter(sp, j);
    let (mean_sa, cov_sa) = mean_and_scatter(sa, j);
    let pooled = (cov_sp + cov_sa) * 0.5;
    let delta = &mean_sp - &mean_sa;

    let svd = pooled.clone().svd(true, true);
    let largest = svd.singular_values.max();
    let eps = largest * j as f64 * f64::EPSILON;
    let template = if largest > 0.0 {
        svd.solve(&delta, eps).map_err(|e| Error::InvalidParameter(e.to_string()))?
    } else {
        DVector::zeros(j)
    };
    if template.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index: 0 });
    }
    Ok(ObserverModel {
        template: template.iter().copied().collect(),
        mean_sp: mean_sp.iter().copied().collect(),
        mean_sa: mean_sa.iter().copied().collect(),
        covariance: pooled.transpose().iter().copied().collect(),
    })
}

pub fn train_cho(sp: &[Roi], sa: &[Roi], basis: &ChannelBasis) -> Result<ObserverModel> {
    let chan = |rois: &[Roi]| rois.iter().map(|r| basis.channelize(&r.patch)).collect::<Result<Vec<_>>>();
    train_cho_channelized(&chan(sp)?, &chan(sa)?)
}

/// Test statistic `t = wᵀ v` per channelized sample.
pub fn score_channelized(model: &ObserverModel, samples: &[Vec<f64>]) -> Result<Vec<f64>> {
    samples
        .iter()
        .map(|v| {
            if v.len() != model.n_channels() {
                return Err(Error::ShapeMismatch {
                    expected: format!("{} channels", model.n_channels()),
                    actual: v.len().to_string(),
                });
            }
            Ok(model.template.iter().zip(v).map(|(w, x)| w * x).sum())
        })
        .collect()
}

pub fn score(model: &ObserverModel, basis: &ChannelBasis, rois: &[Roi]) -> Result<Vec<f64>> {
    if basis.n_channels() != model.n_channels() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} channels", model.n_channels()),
            actual: format!("basis with {}", basis.n_channels()),
        });
    }
    let samples = rois.iter().map(|r| basis.channelize(&r.patch)).collect::<Result<Vec<_>>>()?;
    score_channelized(model, &samples)
}
