//! Filterbank spatial filtering: band-pass filters, per-epoch covariances,
//! source power comodulation (SPoC) filters and their patterns, channel
//! band power for ECoG, and Welch spectra.

mod band;
mod ecog;
pub mod filter;
mod psd;
mod spatial;

pub use band::{canonical_bands, FrequencyBand};
pub use ecog::{ecog_band_powers, ecog_feature_names};
pub use filter::{bandpass, Bandpass};
pub use psd::{welch_psd, Psd};
pub(crate) use ecog::log_variances;
pub(crate) use psd::welch_rows;
pub(crate) use spatial::cov_of as spatial_cov;
pub use spatial::{
    epoch_cov, fit_spoc, fit_spoc_from_covs, patterns, regularize, spoc_power, spoc_power_from_cov, SpocComponent,
    SpocProblem, EIGEN_RIDGE,
};
