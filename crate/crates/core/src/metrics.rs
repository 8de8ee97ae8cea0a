//! Link-quality metrics: EVM, 99% occupied bandwidth, ACLR, and band powers.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::signal::{energy, inner, ComplexSignal};
use crate::spectrum::Spectrum;
use crate::waveform::psd_welch;

/// Default Welch segment length used by the spectral metrics.
pub const DEFAULT_SEGMENT_LEN: usize = 4096;

/// Per-measurement metric summary.
#[derive(Debug, Clone)]
pub struct MetricsReport {
    pub evm_percent: f64,
    pub aclr_db: f64,
    pub inband_power_db: f64,
    pub oob_power_db: f64,
    pub occupied_bw_hz: f64,
}

/// EVM in percent: sqrt(P_error / P_ref) * 100, after removing a single
/// complex gain (the least-squares projection of rx onto ref, which also
/// normalizes the average powers).
pub fn evm(rx_symbols: &[Complex64], ref_symbols: &[Complex64]) -> Result<f64> {
    if rx_symbols.len() != ref_symbols.len() {
        return Err(Error::Input(format!(
            "symbol count mismatch: {} vs {}",
            rx_symbols.len(),
            ref_symbols.len()
        )));
    }
    let p_ref = energy(ref_symbols);
    if p_ref == 0.0 {
        return Err(Error::Singular("zero reference constellation power".into()));
    }
    let g = inner(ref_symbols, rx_symbols) / p_ref;
    if g.norm() == 0.0 {
        return Err(Error::Singular("received stream is orthogonal to the reference".into()));
    }
    let p_error: f64 = rx_symbols
        .iter()
        .zip(ref_symbols)
        .map(|(r, s)| (r / g - s).norm_sqr())
        .sum();
    Ok(100.0 * (p_error / p_ref).sqrt())
}

/// Smallest symmetric band about the spectral power centroid containing 99%
/// of the total power; returns (low_hz, high_hz).
pub fn occupied_bandwidth_99(spec: &Spectrum) -> (f64, f64) {
    let total: f64 = spec.psd.iter().sum();
    if total <= 0.0 {
        return (0.0, 0.0);
    }
    let centroid = spec
        .freq_hz
        .iter()
        .zip(&spec.psd)
        .map(|(f, p)| f * p)
        .sum::<f64>()
        / total;
    let df = spec.freq_step_hz;
    let n = spec.psd.len();
    let mut half = df / 2.0;
    loop {
        let power: f64 = spec
            .freq_hz
            .iter()
            .zip(&spec.psd)
            .filter(|(f, _)| (**f - centroid).abs() <= half)
            .map(|(_, p)| p)
            .sum();
        if power >= 0.99 * total || half > n as f64 * df {
            break;
        }
        half += df / 2.0;
    }
    (centroid - half, centroid + half)
}

/// Left/right adjacent-channel leakage ratios in dB.
#[derive(Debug, Clone, Copy)]
pub struct AclrResult {
    pub left_db: f64,
    pub right_db: f64,
}

impl AclrResult {
    /// Mean of the two sides (memoryless models make them equal).
    pub fn mean_db(&self) -> f64 {
        0.5 * (self.left_db + self.right_db)
    }

    pub fn side_asymmetry_db(&self) -> f64 {
        (self.left_db - self.right_db).abs()
    }
}

/// ACLR from a PSD estimate: intended-band power over each immediately
/// adjacent band of identical width.
pub fn aclr_from_spectrum(spec: &Spectrum, intended: (f64, f64)) -> Result<AclrResult> {
    let (low, high) = intended;
    if high <= low {
        return Err(Error::Config(format!("empty intended band [{low}, {high}]")));
    }
    let width = high - low;
    let (span_lo, span_hi) = spec.span_hz();
    if low - width < span_lo || high + width > span_hi {
        return Err(Error::Config(format!(
            "adjacent band exceeds the Nyquist span [{span_lo:.0}, {span_hi:.0}] Hz"
        )));
    }
    let p_in = spec.band_power(low, high);
    let p_left = spec.band_power(low - width, low);
    let p_right = spec.band_power(high, high + width);
    if p_in <= 0.0 || p_left <= 0.0 || p_right <= 0.0 {
        return Err(Error::Input("zero power in a measurement band".into()));
    }
    Ok(AclrResult {
        left_db: 10.0 * (p_in / p_left).log10(),
        right_db: 10.0 * (p_in / p_right).log10(),
    })
}

/// Convenience: Welch PSD of the signal, then [`aclr_from_spectrum`].
pub fn aclr(signal: &ComplexSignal, intended: (f64, f64)) -> Result<AclrResult> {
    let seg = DEFAULT_SEGMENT_LEN.min(signal.len());
    let spec = psd_welch(signal, seg, 0.5)?;
    aclr_from_spectrum(&spec, intended)
}

/// Integrated in-band power and mean adjacent-band power, both in dB
/// relative to unit power. Zero signal maps to -inf.
pub fn band_powers(spec: &Spectrum, intended: (f64, f64)) -> (f64, f64) {
    let (low, high) = intended;
    let width = high - low;
    let p_in = spec.band_power(low, high);
    let p_adj = 0.5 * (spec.band_power(low - width, low) + spec.band_power(high, high + width));
    let to_db = |p: f64| {
        if p > 0.0 {
            10.0 * p.log10()
        } else {
            f64::NEG_INFINITY
        }
    };
    (to_db(p_in), to_db(p_adj))
}
