use std::f64::consts::PI;

use nalgebra::DMatrix;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::NeuralEpoch;

/// One-sided power spectral density, `density[channel][bin]` in units²/Hz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Psd {
    pub freqs: Vec<f64>,
    pub density: Vec<Vec<f64>>,
}

impl Psd {
    pub fn resolution(&self) -> f64 {
        if self.freqs.len() < 2 {
            0.0
        } else {
            self.freqs[1] - self.freqs[0]
        }
    }

    /// Rectangle-rule integral of one channel over all bins.
    pub fn total_power(&self, channel: usize) -> f64 {
        self.density[channel].iter().sum::<f64>() * self.resolution()
    }

    /// Index of the largest bin of one channel.
    pub fn peak_bin(&self, channel: usize) -> usize {
        self.density[channel]
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map_or(0, |(i, _)| i)
    }
}

/// Averaged periodogram over Hann-windowed, mean-removed segments.
pub fn welch_psd(epoch: &NeuralEpoch, segment_length: usize, overlap: usize) -> Result<Psd> {
    welch_rows(epoch.data(), epoch.sample_rate(), segment_length, overlap)
}

pub(crate) fn welch_rows(data: &DMatrix<f64>, fs: f64, segment_length: usize, overlap: usize) -> Result<Psd> {
    let n = data.ncols();
    if segment_length > n {
        return Err(Error::SegmentTooLong {
            segment: segment_length,
            samples: n,
        });
    }
    if segment_length < 2 || overlap >= segment_length {
        return Err(Error::InvalidSpec(format!(
            "segment length {segment_length} with overlap {overlap}"
        )));
    }
    let window: Vec<f64> = (0..segment_length)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / segment_length as f64).cos())
        .collect();
    let scale = 1.0 / (fs * window.iter().map(|w| w * w).sum::<f64>());
    let step = segment_length - overlap;
    let n_segments = (n - segment_length) / step + 1;
    let n_bins = segment_length / 2 + 1;
    let fft = FftPlanner::new().plan_fft_forward(segment_length);

    let mut density = Vec::with_capacity(data.nrows());
    let mut buf = vec![Complex64::default(); segment_length];
    for row in data.row_iter() {
        let mut acc = vec![0.0; n_bins];
        for seg in 0..n_segments {
            let start = seg * step;
            let mean = (start..start + segment_length).map(|i| row[i]).sum::<f64>() / segment_length as f64;
            for (k, b) in buf.iter_mut().enumerate() {
                *b = Complex64::new((row[start + k] - mean) * window[k], 0.0);
            }
            fft.process(&mut buf);
            for (a, b) in acc.iter_mut().zip(&buf) {
                *a += b.norm_sqr();
            }
        }
        for (k, a) in acc.iter_mut().enumerate() {
            let nyquist = segment_length.is_multiple_of(2) && k == n_bins - 1;
            let one_sided = if k == 0 || nyquist { 1.0 } else { 2.0 };
            *a *= one_sided * scale / n_segments as f64;
        }
        density.push(acc);
    }
    let freqs = (0..n_bins).map(|k| k as f64 * fs / segment_length as f64).collect();
    Ok(Psd { freqs, density })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Modality;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    const FS: f64 = 300.0;

    fn epoch(rows: Vec<Vec<f64>>) -> NeuralEpoch {
        let n = rows[0].len();
        NeuralEpoch::from_data(DMatrix::from_fn(rows.len(), n, |r, c| rows[r][c]), FS, Modality::Eeg).unwrap()
    }

    #[test]
    fn white_noise_is_flat_and_integrates_to_variance() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x: Vec<f64> = (0..9000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let psd = welch_psd(&epoch(vec![x]), 256, 128).unwrap();
        assert!((psd.total_power(0) - 1.0).abs() < 0.1, "{}", psd.total_power(0));
        let level = 1.0 / (FS / 2.0);
        let interior = &psd.density[0][5..120];
        let mean = interior.iter().sum::<f64>() / interior.len() as f64;
        assert!((mean / level - 1.0).abs() < 0.1);
    }

    #[test]
    fn sinusoid_peaks_at_its_bin() {
        let x: Vec<f64> = (0..3000).map(|i| (2.0 * PI * 37.5 * i as f64 / FS).sin()).collect();
        let psd = welch_psd(&epoch(vec![x]), 240, 120).unwrap();
        let peak = psd.peak_bin(0);
        assert_eq!(psd.freqs[peak], 37.5);
        // a unit sinusoid carries variance 1/2
        assert!((psd.total_power(0) - 0.5).abs() < 0.01);
    }

    #[test]
    fn two_sinusoids_keep_their_power_ratio() {
        let (a1, a2) = (2.0, 0.5);
        let x: Vec<f64> = (0..6000)
            .map(|i| {
                let t = i as f64 / FS;
                a1 * (2.0 * PI * 10.0 * t).sin() + a2 * (2.0 * PI * 60.0 * t).sin()
            })
            .collect();
        let psd = welch_psd(&epoch(vec![x]), 300, 150).unwrap();
        // line power: sum the Hann main lobe (three bins) around each line
        let line = |f: f64| {
            let k = (f / psd.resolution()).round() as usize;
            psd.density[0][k - 1..=k + 1].iter().sum::<f64>()
        };
        let ratio = line(10.0) / line(60.0);
        let expected = (a1 / a2).powi(2);
        assert!((ratio / expected - 1.0).abs() < 0.1, "{ratio}");
    }

    #[test]
    fn segment_longer_than_epoch_is_rejected() {
        let e = epoch(vec![vec![0.0; 100]]);
        assert!(matches!(welch_psd(&e, 101, 0), Err(Error::SegmentTooLong { .. })));
    }
}
