use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::channels::ChannelBasis;
use super::cho::{score_channelized, train_cho_channelized};
use super::roi::Roi;
use crate::error::{Error, Result};
use crate::seed::{derive_seed, stream};

/// Nonparametric (Mann-Whitney) AUC: the fraction of (SP, SA) pairs with
/// `t_sp > t_sa`, ties counting one half.
pub fn auc_mann_whitney(sp: &[f64], sa: &[f64]) -> Result<f64> {
    if sp.is_empty() || sa.is_empty() {
        return Err(Error::Empty("AUC needs scores from both classes".into()));
    }
    if let Some(index) = sp.iter().chain(sa).position(|v| v.is_nan()) {
        return Err(Error::NonFinite { index });
    }
    let mut sorted = sa.to_vec();
    sorted.sort_by(f64::total_cmp);
    // Count in half-pairs so the tally stays an exact integer.
    let half_pairs: u64 = sp
        .iter()
        .map(|&t| {
            let below = sorted.partition_point(|&v| v < t) as u64;
            let not_above = sorted.partition_point(|&v| v <= t) as u64;
            2 * below + (not_above - below)
        })
        .sum();
    Ok(half_pairs as f64 / (2 * sp.len() as u64 * sa.len() as u64) as f64)
}

/// `(μ_sp − μ_sa) / √(½(σ²_sp + σ²_sa))` with sample variances.
pub fn dprime(sp: &[f64], sa: &[f64]) -> f64 {
    let stats = |v: &[f64]| {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() as f64 - 1.0);
        (m, var)
    };
    let (m1, v1) = stats(sp);
    let (m0, v0) = stats(sa);
    (m1 - m0) / (0.5 * (v1 + v0)).sqrt()
}

/// Repeated random train/test partitioning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SplitProtocol {
    /// SP and SA samples drawn for training in each repeat.
    pub n_train_pairs: usize,
    pub n_repeats: usize,
    pub seed: u64,
}

impl SplitProtocol {
    /// 100 training pairs and 10 repeats.
    pub fn standard(seed: u64) -> Self {
        Self {
            n_train_pairs: 100,
            n_repeats: 10,
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DetectabilityEstimate {
    /// Mean test AUC over repeats.
    pub auc: f64,
    /// Sample standard deviation of the test AUC across repeats.
    pub auc_std: f64,
    /// Mean over repeats of the test-score d′.
    pub dprime: f64,
    pub n_train_pairs: usize,
    pub n_test_sp: usize,
    pub n_test_sa: usize,
    pub n_repeats: usize,
}

/// AUC with split-to-split spread on channelized samples. Repeat `r`
/// shuffles with a seed derived from `(protocol.seed, r)`, so repeats may
/// run in any order.
pub fn auc_with_uncertainty_channelized(
    sp: &[Vec<f64>],
    sa: &[Vec<f64>],
    protocol: &SplitProtocol,
) -> Result<DetectabilityEstimate> {
    let k = protocol.n_train_pairs;
    if protocol.n_repeats == 0 {
        return Err(Error::InvalidParameter("at least one split repeat is required".into()));
    }
    if k < 2 || sp.len() <= k || sa.len() <= k {
        return Err(Error::InsufficientSamples(format!(
            "{} SP and {} SA samples cannot supply {k} training pairs plus a test set",
            sp.len(),
            sa.len()
        )));
    }
    let per_repeat: Vec<(f64, f64)> = (0..protocol.n_repeats)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(&[protocol.seed, stream::SPLIT, r as u64]));
            let mut sp_idx: Vec<usize> = (0..sp.len()).collect();
            let mut sa_idx: Vec<usize> = (0..sa.len()).collect();
            sp_idx.shuffle(&mut rng);
            sa_idx.shuffle(&mut rng);
            let pick = |set: &[Vec<f64>], idx: &[usize]| idx.iter().map(|&i| set[i].clone()).collect::<Vec<_>>();
            let model = train_cho_channelized(&pick(sp, &sp_idx[..k]), &pick(sa, &sa_idx[..k]))?;
            let t_sp = score_channelized(&model, &pick(sp, &sp_idx[k..]))?;
            let t_sa = score_channelized(&model, &pick(sa, &sa_idx[k..]))?;
            Ok((auc_mann_whitney(&t_sp, &t_sa)?, dprime(&t_sp, &t_sa)))
        })
        .collect::<Result<_>>()?;

    let aucs: Vec<f64> = per_repeat.iter().map(|p| p.0).collect();
    let (auc, spread) = crate::metrics::mean_std(&aucs);
    Ok(DetectabilityEstimate {
        auc,
        auc_std: if aucs.len() < 2 { 0.0 } else { spread },
        dprime: per_repeat.iter().map(|p| p.1).sum::<f64>() / per_repeat.len() as f64,
        n_train_pairs: k,
        n_test_sp: sp.len() - k,
        n_test_sa: sa.len() - k,
        n_repeats: protocol.n_repeats,
    })
}

pub fn auc_with_uncertainty(
    sp: &[Roi],
    sa: &[Roi],
    basis: &ChannelBasis,
    protocol: &SplitProtocol,
) -> Result<DetectabilityEstimate> {
    let chan = |rois: &[Roi]| rois.iter().map(|r| basis.channelize(&r.patch)).collect::<Result<Vec<_>>>();
    auc_with_uncertainty_channelized(&chan(sp)?, &chan(sa)?, protocol)
}
