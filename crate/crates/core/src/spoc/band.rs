use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyBand {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
}

impl FrequencyBand {
    pub fn new(name: impl Into<String>, lo: f64, hi: f64) -> Self {
        Self {
            name: name.into(),
            lo,
            hi,
        }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn fits(&self, sample_rate: f64) -> bool {
        0.0 < self.lo && self.lo < self.hi && self.hi < sample_rate / 2.0
    }
}

/// θ, α, β, γ and high-γ, stopping short of 90 Hz to stay clear of line
/// noise harmonics and the 130 Hz stimulation artifact.
pub fn canonical_bands() -> Vec<FrequencyBand> {
    vec![
        FrequencyBand::new("theta", 4.0, 8.0),
        FrequencyBand::new("alpha", 8.0, 12.0),
        FrequencyBand::new("beta", 12.0, 30.0),
        FrequencyBand::new("gamma", 30.0, 45.0),
        FrequencyBand::new("gamma_high", 55.0, 90.0),
    ]
}
