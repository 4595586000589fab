//! Zero-phase Butterworth band-pass filtering.
//!
//! The 4th-order analog low-pass prototype is mapped to a band-pass (8
//! poles) and discretized with the pre-warped bilinear transform. The
//! result runs as four second-order sections, forward then backward, on a
//! signal extended by odd reflection over one settling length.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rustfft::num_complex::Complex64;

use super::band::FrequencyBand;
use crate::error::{Error, Result};
use crate::model::NeuralEpoch;

pub const BUTTERWORTH_ORDER: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
struct Biquad {
    b: [f64; 3],
    a: [f64; 3],
}

impl Biquad {
    fn response(&self, z_inv: Complex64) -> Complex64 {
        let z2 = z_inv * z_inv;
        (self.b[0] + self.b[1] * z_inv + self.b[2] * z2) / (self.a[0] + self.a[1] * z_inv + self.a[2] * z2)
    }

    /// Direct form II transposed, in place.
    fn run(&self, x: &mut [f64]) {
        let (mut s1, mut s2) = (0.0, 0.0);
        for v in x.iter_mut() {
            let input = *v;
            let out = self.b[0] * input + s1;
            s1 = self.b[1] * input - self.a[1] * out + s2;
            s2 = self.b[2] * input - self.a[2] * out;
            *v = out;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bandpass {
    sections: Vec<Biquad>,
    sample_rate: f64,
    settling: usize,
}

impl Bandpass {
    pub fn design(band: &FrequencyBand, sample_rate: f64) -> Result<Self> {
        if !band.fits(sample_rate) {
            return Err(Error::BandOutOfRange {
                lo: band.lo,
                hi: band.hi,
                nyquist: sample_rate / 2.0,
            });
        }
        let fs2 = 2.0 * sample_rate;
        let warp = |f: f64| fs2 * (PI * f / sample_rate).tan();
        let (w_lo, w_hi) = (warp(band.lo), warp(band.hi));
        let w0 = (w_lo * w_hi).sqrt();
        let bw = w_hi - w_lo;

        let n = BUTTERWORTH_ORDER;
        let mut poles = Vec::with_capacity(2 * n);
        for k in 0..n {
            let theta = PI * (2 * k + n + 1) as f64 / (2 * n) as f64;
            let proto = Complex64::from_polar(1.0, theta);
            let scaled = proto * bw;
            let root = (scaled * scaled - 4.0 * w0 * w0).sqrt();
            for s in [(scaled + root) / 2.0, (scaled - root) / 2.0] {
                poles.push((fs2 + s) / (fs2 - s));
            }
        }
        // one section per conjugate pair; each takes a zero at z = 1 and z = -1
        let mut upper: Vec<Complex64> = poles.into_iter().filter(|p| p.im > 0.0).collect();
        upper.sort_by(|a, b| a.arg().total_cmp(&b.arg()));
        debug_assert_eq!(upper.len(), n);
        let mut sections: Vec<Biquad> = upper
            .iter()
            .map(|p| Biquad {
                b: [1.0, 0.0, -1.0],
                a: [1.0, -2.0 * p.re, p.norm_sqr()],
            })
            .collect();

        // unit gain at the digital image of the analog center frequency
        let omega0 = 2.0 * (w0 / fs2).atan();
        let z_inv = Complex64::from_polar(1.0, -omega0);
        let gain = sections.iter().map(|s| s.response(z_inv)).product::<Complex64>().norm();
        let per_section = gain.powf(-1.0 / n as f64);
        for s in &mut sections {
            for b in &mut s.b {
                *b *= per_section;
            }
        }

        let mut filter = Self {
            sections,
            sample_rate,
            settling: 0,
        };
        filter.settling = filter.settling_length();
        Ok(filter)
    }

    /// Samples until the impulse response stays below 1e-3 of its peak.
    fn settling_length(&self) -> usize {
        let len = (40.0 * self.sample_rate) as usize;
        let mut impulse = vec![0.0; len];
        impulse[0] = 1.0;
        self.run_causal(&mut impulse);
        let peak = impulse.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        impulse.iter().rposition(|v| v.abs() > 1e-3 * peak).map_or(1, |i| i + 1)
    }

    pub fn settling(&self) -> usize {
        self.settling
    }

    fn run_causal(&self, x: &mut [f64]) {
        for s in &self.sections {
            s.run(x);
        }
    }

    /// Magnitude of the single-pass response at `freq` Hz.
    pub fn magnitude(&self, freq: f64) -> f64 {
        let z_inv = Complex64::from_polar(1.0, -2.0 * PI * freq / self.sample_rate);
        self.sections.iter().map(|s| s.response(z_inv)).product::<Complex64>().norm()
    }

    /// Output variance of zero-phase filtered unit white noise: the mean of
    /// |H|⁴ over (0, fs/2), by the midpoint rule.
    pub fn zero_phase_noise_gain(&self) -> f64 {
        let grid = 20_000;
        let step = self.sample_rate / 2.0 / grid as f64;
        (0..grid)
            .map(|i| self.magnitude((i as f64 + 0.5) * step).powi(4))
            .sum::<f64>()
            / grid as f64
    }

    /// Expected per-sample output variance of [`Bandpass::filtfilt`] on `n`
    /// samples of unit white noise, edges included: the squared Frobenius
    /// norm of the (linear) filtering operator over `n`.
    pub fn filtfilt_noise_gain(&self, n: usize) -> f64 {
        if n == 0 {
            return 0.0;
        }
        let mut impulse = vec![0.0; n];
        let mut total = 0.0;
        for k in 0..n {
            impulse[k] = 1.0;
            total += self.filtfilt(&impulse).iter().map(|v| v * v).sum::<f64>();
            impulse[k] = 0.0;
        }
        total / n as f64
    }

    /// Zero-phase filtering of one channel.
    pub fn filtfilt(&self, x: &[f64]) -> Vec<f64> {
        let n = x.len();
        if n < 2 {
            return x.to_vec();
        }
        let pad = self.settling.min(n - 1);
        let mut ext = Vec::with_capacity(n + 2 * pad);
        ext.extend((1..=pad).rev().map(|i| 2.0 * x[0] - x[i]));
        ext.extend_from_slice(x);
        ext.extend((1..=pad).map(|i| 2.0 * x[n - 1] - x[n - 1 - i]));
        self.run_causal(&mut ext);
        ext.reverse();
        self.run_causal(&mut ext);
        ext.reverse();
        ext[pad..pad + n].to_vec()
    }
}

/// Zero-phase band-pass of every channel of an epoch.
pub fn bandpass(epoch: &NeuralEpoch, band: &FrequencyBand) -> Result<NeuralEpoch> {
    let filter = Bandpass::design(band, epoch.sample_rate())?;
    Ok(epoch.with_data(filter_rows(&filter, epoch.data())))
}

pub(crate) fn filter_rows(filter: &Bandpass, data: &DMatrix<f64>) -> DMatrix<f64> {
    let (n_ch, n_s) = data.shape();
    let mut out = DMatrix::zeros(n_ch, n_s);
    for c in 0..n_ch {
        let row: Vec<f64> = data.row(c).iter().copied().collect();
        for (s, v) in filter.filtfilt(&row).into_iter().enumerate() {
            out[(c, s)] = v;
        }
    }
    out
}
