//! Laguerre-Gauss channelized Hotelling observer.

mod auc;
mod channels;
mod cho;
mod roi;

pub use auc::{auc_mann_whitney, auc_with_uncertainty, auc_with_uncertainty_channelized, dprime, DetectabilityEstimate, SplitProtocol};
pub use channels::{laguerre, lg_channels, ChannelBasis};
pub use cho::{score, score_channelized, train_cho, train_cho_channelized, ObserverModel};
pub use roi::{extract_rois, read_roi_set, vicinity_centers, write_roi_set, Roi, RoiLabel, RoiSource};
