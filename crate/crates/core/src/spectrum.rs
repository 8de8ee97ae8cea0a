//! Power spectral density container.

/// Two-sided PSD estimate over [-fs/2, fs/2), linear power density per Hz.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub freq_hz: Vec<f64>,
    pub psd: Vec<f64>,
    pub freq_step_hz: f64,
}

impl Spectrum {
    /// Integrated power over the whole estimate.
    pub fn total_power(&self) -> f64 {
        self.psd.iter().sum::<f64>() * self.freq_step_hz
    }

    /// Integrated power over [low_hz, high_hz].
    pub fn band_power(&self, low_hz: f64, high_hz: f64) -> f64 {
        self.freq_hz
            .iter()
            .zip(&self.psd)
            .filter(|(f, _)| **f >= low_hz && **f <= high_hz)
            .map(|(_, p)| p)
            .sum::<f64>()
            * self.freq_step_hz
    }

    /// Nyquist span of the estimate.
    pub fn span_hz(&self) -> (f64, f64) {
        (
            *self.freq_hz.first().unwrap_or(&0.0),
            *self.freq_hz.last().unwrap_or(&0.0) + self.freq_step_hz,
        )
    }

    /// CSV rows `freq_hz, power_db` (relative to 1/Hz density).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("freq_hz,power_db\n");
        for (f, p) in self.freq_hz.iter().zip(&self.psd) {
            let db = if *p > 0.0 {
                10.0 * p.log10()
            } else {
                f64::NEG_INFINITY
            };
            out.push_str(&format!("{f:.3},{db:.6}\n"));
        }
        out
    }
}
