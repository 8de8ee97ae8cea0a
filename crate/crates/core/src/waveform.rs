//! Symbol generation, RRC pulse shaping, polyphase resampling, and Welch PSD
//! estimation.
//!
//! The transmit chain is single-carrier: QAM symbols are upsampled by an
//! integer factor and shaped with a root-raised cosine filter; the receive
//! side applies the matched filter and decimates back to symbol rate with
//! exact group-delay compensation.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::signal::ComplexSignal;
use crate::spectrum::Spectrum;

/// A stream of unit-average-power QAM symbols.
#[derive(Debug, Clone)]
pub struct SymbolStream {
    pub symbols: Vec<Complex64>,
    pub modulation_order: usize,
    pub seed: u64,
}

/// Root-raised cosine filter taps plus design metadata.
#[derive(Debug, Clone)]
pub struct RrcFilter {
    pub taps: Vec<f64>,
    pub rolloff: f64,
    pub upsampling: usize,
}

impl RrcFilter {
    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    /// Group delay in samples, (L-1)/2.
    pub fn group_delay(&self) -> usize {
        (self.taps.len() - 1) / 2
    }
}

/// Generate `count` uniform random symbols from a normalized square-QAM grid.
pub fn gen_qam_symbols(count: usize, order: usize, seed: u64) -> Result<SymbolStream> {
    if count == 0 {
        return Err(Error::Config("symbol count must be positive".into()));
    }
    let side = match order {
        4 => 2,
        16 => 4,
        64 => 8,
        _ => {
            return Err(Error::Config(format!(
                "unsupported QAM order {order}; expected 4, 16 or 64"
            )))
        }
    };
    // Average power of the +/-1, +/-3, ... grid is 2(side^2 - 1)/3 per complex symbol.
    let avg_power = 2.0 * (side as f64 * side as f64 - 1.0) / 3.0;
    let norm = 1.0 / avg_power.sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let symbols = (0..count)
        .map(|_| {
            let i = rng.gen_range(0..side) as f64;
            let q = rng.gen_range(0..side) as f64;
            Complex64::new(
                (2.0 * i - (side as f64 - 1.0)) * norm,
                (2.0 * q - (side as f64 - 1.0)) * norm,
            )
        })
        .collect();
    Ok(SymbolStream {
        symbols,
        modulation_order: order,
        seed,
    })
}

fn rrc_tap(t: f64, rolloff: f64) -> f64 {
    use std::f64::consts::PI;
    let b = rolloff;
    if t.abs() < 1e-9 {
        return 1.0 + b * (4.0 / PI - 1.0);
    }
    // Removable singularity at |t| = 1/(4*rolloff).
    if (t.abs() - 1.0 / (4.0 * b)).abs() < 1e-9 {
        let x = PI / (4.0 * b);
        return (b / 2f64.sqrt()) * ((1.0 + 2.0 / PI) * x.sin() + (1.0 - 2.0 / PI) * x.cos());
    }
    let num = (PI * t * (1.0 - b)).sin() + 4.0 * b * t * (PI * t * (1.0 + b)).cos();
    let den = PI * t * (1.0 - (4.0 * b * t).powi(2));
    num / den
}

fn build_rrc(rolloff: f64, len: usize, upsampling: usize) -> RrcFilter {
    let center = (len - 1) as f64 / 2.0;
    let mut taps: Vec<f64> = (0..len)
        .map(|k| rrc_tap((k as f64 - center) / upsampling as f64, rolloff))
        .collect();
    let energy: f64 = taps.iter().map(|t| t * t).sum();
    let scale = 1.0 / energy.sqrt();
    for t in &mut taps {
        *t *= scale;
    }
    RrcFilter {
        taps,
        rolloff,
        upsampling,
    }
}

/// Design a unit-energy RRC filter spanning `span_symbols` symbols
/// (L = span_symbols * u + 1 taps, odd, integer group delay).
pub fn design_rrc(rolloff: f64, span_symbols: usize, u: usize) -> Result<RrcFilter> {
    if !(0.0 < rolloff && rolloff < 1.0) {
        return Err(Error::Config(format!(
            "rolloff must be in (0,1), got {rolloff}"
        )));
    }
    if span_symbols < 4 {
        return Err(Error::Config(format!(
            "span_symbols must be >= 4, got {span_symbols}"
        )));
    }
    if u < 2 {
        return Err(Error::Config(format!("upsampling must be >= 2, got {u}")));
    }
    Ok(build_rrc(rolloff, span_symbols * u + 1, u))
}

/// Design an RRC filter with an explicit tap count.
pub fn design_rrc_with_len(rolloff: f64, len: usize, u: usize) -> Result<RrcFilter> {
    if !(0.0 < rolloff && rolloff < 1.0) {
        return Err(Error::Config(format!(
            "rolloff must be in (0,1), got {rolloff}"
        )));
    }
    if len < 2 || u < 2 {
        return Err(Error::Config("degenerate filter length or upsampling".into()));
    }
    Ok(build_rrc(rolloff, len, u))
}

/// Upsample by the filter's factor and pulse-shape, using the polyphase
/// decomposition of the taps. Output has `count * U` samples; the filter's
/// group delay of (L-1)/2 samples is left in place (see [`RrcFilter::group_delay`]).
pub fn upsample_filter(
    stream: &SymbolStream,
    filter: &RrcFilter,
    symbol_rate_hz: f64,
) -> ComplexSignal {
    let u = filter.upsampling;
    let count = stream.symbols.len();
    let mut out = vec![Complex64::new(0.0, 0.0); count * u];
    // Polyphase branch j holds taps[j], taps[j+U], ...
    for (i, y) in out.iter_mut().enumerate() {
        let n = i / u;
        let j = i % u;
        let mut acc = Complex64::new(0.0, 0.0);
        let mut tap_idx = j;
        let mut k = 0;
        while tap_idx < filter.taps.len() && k <= n {
            acc += filter.taps[tap_idx] * stream.symbols[n - k];
            tap_idx += u;
            k += 1;
        }
        *y = acc;
    }
    ComplexSignal::new(out, symbol_rate_hz * u as f64)
}

/// Apply the matched RRC filter, compensate the combined group delay of the
/// shaping and matched filters, and decimate back to symbol rate.
pub fn matched_filter_downsample(
    signal: &ComplexSignal,
    filter: &RrcFilter,
) -> Result<Vec<Complex64>> {
    let taps = &filter.taps;
    if signal.len() < taps.len() {
        return Err(Error::Input(format!(
            "signal length {} shorter than filter span {}",
            signal.len(),
            taps.len()
        )));
    }
    let u = filter.upsampling;
    // Full convolution, then sample at the combined delay of both RRC stages.
    let conv_len = signal.len() + taps.len() - 1;
    let mut filtered = vec![Complex64::new(0.0, 0.0); conv_len];
    for (i, y) in filtered.iter_mut().enumerate() {
        let k_lo = i.saturating_sub(signal.len() - 1);
        let k_hi = i.min(taps.len() - 1);
        let mut acc = Complex64::new(0.0, 0.0);
        for k in k_lo..=k_hi {
            acc += taps[k] * signal.samples[i - k];
        }
        *y = acc;
    }
    let delay = taps.len() - 1; // (L-1)/2 from each stage
    let count = signal.len() / u;
    let mut symbols = Vec::with_capacity(count);
    for k in 0..count {
        let idx = delay + k * u;
        if idx < filtered.len() {
            symbols.push(filtered[idx]);
        }
    }
    Ok(symbols)
}

/// Welch-averaged periodogram PSD with a periodic Hann window.
///
/// The estimate is two-sided over [-fs/2, fs/2) and normalized so the
/// integral over frequency equals the mean signal power.
pub fn psd_welch(signal: &ComplexSignal, segment_len: usize, overlap: f64) -> Result<Spectrum> {
    if segment_len < 8 || segment_len > signal.len() {
        return Err(Error::Input(format!(
            "segment length {} invalid for signal of {} samples",
            segment_len,
            signal.len()
        )));
    }
    if !(0.0..1.0).contains(&overlap) {
        return Err(Error::Input(format!("overlap must be in [0,1), got {overlap}")));
    }
    let s = segment_len;
    let fs = signal.sample_rate_hz;
    let window: Vec<f64> = (0..s)
        .map(|n| 0.5 * (1.0 - (2.0 * std::f64::consts::PI * n as f64 / s as f64).cos()))
        .collect();
    let window_energy: f64 = window.iter().map(|w| w * w).sum();
    let hop = ((s as f64) * (1.0 - overlap)).round().max(1.0) as usize;

    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(s);
    let mut acc = vec![0.0f64; s];
    let mut n_segments = 0usize;
    let mut start = 0usize;
    let mut buf = vec![Complex64::new(0.0, 0.0); s];
    while start + s <= signal.len() {
        for (i, b) in buf.iter_mut().enumerate() {
            *b = signal.samples[start + i] * window[i];
        }
        fft.process(&mut buf);
        for (a, x) in acc.iter_mut().zip(&buf) {
            *a += x.norm_sqr();
        }
        n_segments += 1;
        start += hop;
    }
    let scale = 1.0 / (n_segments as f64 * fs * window_energy);
    // fftshift to [-fs/2, fs/2)
    let half = s / 2;
    let df = fs / s as f64;
    let mut psd = Vec::with_capacity(s);
    let mut freq_hz = Vec::with_capacity(s);
    for k in 0..s {
        let src = (k + half) % s;
        psd.push(acc[src] * scale);
        freq_hz.push((k as f64 - half as f64) * df);
    }
    Ok(Spectrum {
        freq_hz,
        psd,
        freq_step_hz: df,
    })
}
