use super::band::FrequencyBand;
use super::filter::{filter_rows, Bandpass};
use crate::error::Result;
use crate::model::NeuralEpoch;

/// Log variance of every channel after band-pass filtering, band-major:
/// all channels of the first band, then all channels of the next.
pub fn ecog_band_powers(epoch: &NeuralEpoch, bands: &[FrequencyBand]) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(bands.len() * epoch.n_channels());
    for band in bands {
        let filter = Bandpass::design(band, epoch.sample_rate())?;
        out.extend(log_variances(&filter_rows(&filter, epoch.data())));
    }
    Ok(out)
}

pub(crate) fn log_variances(data: &nalgebra::DMatrix<f64>) -> Vec<f64> {
    data.row_iter()
        .map(|row| {
            let n = row.len() as f64;
            let m = row.sum() / n;
            let var = row.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n;
            var.max(f64::MIN_POSITIVE).ln()
        })
        .collect()
}

pub fn ecog_feature_names(channel_names: &[String], bands: &[FrequencyBand]) -> Vec<String> {
    bands
        .iter()
        .flat_map(|b| channel_names.iter().map(move |c| format!("{}_{}", c, b.name)))
        .collect()
}
