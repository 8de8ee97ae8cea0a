//! Flat Rayleigh array channels, phase-only matched-filter precoding, and
//! over-the-air combining at a receiver.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::pa::{apply_pa, PaBank};
use crate::signal::ComplexSignal;

/// One realization of the M-antenna flat-fading channel h.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub gains: Vec<Complex64>,
    pub seed: u64,
}

impl ChannelRealization {
    pub fn len(&self) -> usize {
        self.gains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gains.is_empty()
    }

    /// CSV rows `re, im` per antenna.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("re,im\n");
        for g in &self.gains {
            out.push_str(&format!("{:.17e},{:.17e}\n", g.re, g.im));
        }
        out
    }
}

/// Unit-modulus beamforming weights w.
#[derive(Debug, Clone, PartialEq)]
pub struct Precoder {
    pub weights: Vec<Complex64>,
}

impl Precoder {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Draw M i.i.d. CN(0,1) channel gains, deterministic per seed.
pub fn draw_rayleigh_channel(m: usize, seed: u64) -> Result<ChannelRealization> {
    if m == 0 {
        return Err(Error::Config("channel size must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let std = (0.5f64).sqrt();
    let gains = (0..m)
        .map(|_| {
            // Box-Muller per complex dimension.
            let u1: f64 = rng.gen::<f64>().max(1e-300);
            let u2: f64 = rng.gen();
            let r = (-2.0 * u1.ln()).sqrt();
            let theta = 2.0 * std::f64::consts::PI * u2;
            Complex64::new(r * theta.cos() * std, r * theta.sin() * std)
        })
        .collect();
    Ok(ChannelRealization { gains, seed })
}

/// Phase-only matched-filter precoder w_m = exp(-j angle(h_m)).
///
/// A zero channel gain maps to w_m = 1 by convention.
pub fn mf_phase_precoder(channel: &ChannelRealization) -> Precoder {
    let weights = channel
        .gains
        .iter()
        .map(|h| {
            if h.norm() == 0.0 {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::from_polar(1.0, -h.arg())
            }
        })
        .collect();
    Precoder { weights }
}

/// Per-branch PA outputs for the common (unprecoded) input signal.
///
/// Because the precoder weights have unit modulus, the branch signal at the
/// antenna port is w_m * apply_pa(model_m, s) exactly, clipping included;
/// computing the PA outputs once on `s` lets many receivers be evaluated by
/// reweighting these signals.
pub fn branch_pa_outputs(bank: &PaBank, s: &ComplexSignal) -> Vec<ComplexSignal> {
    bank.models.iter().map(|m| apply_pa(m, s)).collect()
}

/// Linear combination sum_m weights[m] * branches[m].
pub fn combine_branches(branches: &[ComplexSignal], weights: &[Complex64]) -> Result<ComplexSignal> {
    if branches.len() != weights.len() {
        return Err(Error::Config(format!(
            "dimension mismatch: {} branch signals, {} weights",
            branches.len(),
            weights.len()
        )));
    }
    let n = branches[0].len();
    let mut acc = vec![Complex64::new(0.0, 0.0); n];
    for (b, w) in branches.iter().zip(weights) {
        for (a, x) in acc.iter_mut().zip(&b.samples) {
            *a += w * x;
        }
    }
    Ok(ComplexSignal::new(acc, branches[0].sample_rate_hz))
}

/// Received signal r(n) = sum_m h_m * PA_m(w_m * s(n)), noise free.
pub fn transmit_and_combine(
    s: &ComplexSignal,
    precoder: &Precoder,
    bank: &PaBank,
    channel: &ChannelRealization,
) -> Result<ComplexSignal> {
    let m = bank.len();
    if precoder.len() != m || channel.len() != m {
        return Err(Error::Config(format!(
            "dimension mismatch: bank {m}, precoder {}, channel {}",
            precoder.len(),
            channel.len()
        )));
    }
    let branches = branch_pa_outputs(bank, s);
    let weights: Vec<Complex64> = channel
        .gains
        .iter()
        .zip(&precoder.weights)
        .map(|(h, w)| h * w)
        .collect();
    combine_branches(&branches, &weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pa::PaModel;

    #[test]
    fn channel_unit_variance() {
        let ch = draw_rayleigh_channel(100_000, 1).unwrap();
        let mean_p: f64 =
            ch.gains.iter().map(|h| h.norm_sqr()).sum::<f64>() / ch.gains.len() as f64;
        assert!(mean_p > 0.98 && mean_p < 1.02, "mean |h|^2 = {mean_p}");
    }

    #[test]
    fn channel_deterministic() {
        let a = draw_rayleigh_channel(64, 9).unwrap();
        let b = draw_rayleigh_channel(64, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn channel_phases_uniform() {
        // Kolmogorov-Smirnov vs uniform on [0, 2pi), 1% level.
        let n = 100_000;
        let ch = draw_rayleigh_channel(n, 3).unwrap();
        let mut phases: Vec<f64> = ch
            .gains
            .iter()
            .map(|h| {
                let a = h.arg();
                if a < 0.0 {
                    a + 2.0 * std::f64::consts::PI
                } else {
                    a
                }
            })
            .collect();
        phases.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut d: f64 = 0.0;
        for (i, p) in phases.iter().enumerate() {
            let cdf = p / (2.0 * std::f64::consts::PI);
            d = d.max((cdf - i as f64 / n as f64).abs());
            d = d.max(((i + 1) as f64 / n as f64 - cdf).abs());
        }
        let critical = 1.63 / (n as f64).sqrt();
        assert!(d < critical, "KS statistic {d} >= {critical}");
    }

    #[test]
    fn precoder_aligns_phases() {
        let ch = draw_rayleigh_channel(32, 5).unwrap();
        let w = mf_phase_precoder(&ch);
        for (h, wm) in ch.gains.iter().zip(&w.weights) {
            assert!((wm.norm() - 1.0).abs() < 1e-12);
            let prod = h * wm;
            assert!(prod.im.abs() < 1e-12);
            assert!(prod.re >= 0.0);
            assert!((prod.re - h.norm()).abs() < 1e-12);
        }
    }

    #[test]
    fn precoder_simple_cases() {
        let ch = ChannelRealization {
            gains: vec![
                Complex64::new(2.0, 0.0),
                Complex64::new(0.0, 1.0),
                Complex64::new(0.0, 0.0),
            ],
            seed: 0,
        };
        let w = mf_phase_precoder(&ch);
        assert!((w.weights[0] - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        assert!((w.weights[1] - Complex64::new(0.0, -1.0)).norm() < 1e-12);
        assert!((w.weights[2] - Complex64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn single_branch_identity_is_transparent() {
        let bank = PaBank::new(vec![PaModel::identity(9)]).unwrap();
        let ch = ChannelRealization {
            gains: vec![Complex64::new(1.0, 0.0)],
            seed: 0,
        };
        let w = Precoder {
            weights: vec![Complex64::new(1.0, 0.0)],
        };
        let s = ComplexSignal::new(
            (0..100)
                .map(|i| Complex64::from_polar(0.3, i as f64))
                .collect(),
            1.0,
        );
        let r = transmit_and_combine(&s, &w, &bank, &ch).unwrap();
        for (a, b) in s.samples.iter().zip(&r.samples) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn matched_identity_pas_combine_coherently() {
        let m = 16;
        let ch = draw_rayleigh_channel(m, 2).unwrap();
        let w = mf_phase_precoder(&ch);
        let bank = PaBank::new(vec![PaModel::identity(9); m]).unwrap();
        let s = ComplexSignal::new(
            (0..50)
                .map(|i| Complex64::from_polar(0.2, 0.13 * i as f64))
                .collect(),
            1.0,
        );
        let r = transmit_and_combine(&s, &w, &bank, &ch).unwrap();
        let gain: f64 = ch.gains.iter().map(|h| h.norm()).sum();
        for (a, b) in s.samples.iter().zip(&r.samples) {
            assert!((a * gain - b).norm() < 1e-12);
        }
    }

    #[test]
    fn per_branch_and_factored_forms_agree() {
        // Eq-by-eq: per-branch PA(w_m s) combined with h_m vs the factored
        // form using the SNL basis expansion; exact absent clipping.
        let m = 8;
        let order = 9;
        let bank = crate::pa::synthesize_pa_bank(m, order, 0.2, 21).unwrap();
        let ch = draw_rayleigh_channel(m, 22).unwrap();
        let w = mf_phase_precoder(&ch);
        let s = ComplexSignal::new(
            (0..500)
                .map(|i| Complex64::from_polar(0.2 + 0.1 * ((i as f64) * 0.05).sin(), 0.3 * i as f64))
                .collect(),
            1.0,
        );
        let r = transmit_and_combine(&s, &w, &bank, &ch).unwrap();
        // Direct per-branch evaluation on the precoded signal.
        let mut direct = vec![Complex64::new(0.0, 0.0); s.len()];
        for (idx, model) in bank.models.iter().enumerate() {
            let branch_in = s.scaled(w.weights[idx]);
            let y = apply_pa(model, &branch_in);
            for (d, v) in direct.iter_mut().zip(&y.samples) {
                *d += ch.gains[idx] * v;
            }
        }
        for (a, b) in r.samples.iter().zip(&direct) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let bank = PaBank::new(vec![PaModel::identity(9); 4]).unwrap();
        let ch = draw_rayleigh_channel(3, 0).unwrap();
        let w = mf_phase_precoder(&ch);
        let s = ComplexSignal::new(vec![Complex64::new(0.1, 0.0); 10], 1.0);
        assert!(transmit_and_combine(&s, &w, &bank, &ch).is_err());
    }
}
